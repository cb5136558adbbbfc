import sys
import time

import numpy as np

from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.caption import ModelDims, MultiLingualModel, TrainingConfig, split_by_scene, train
from lexipivot.localization import collect_word_features
from lexipivot.induction import (
    build_table, linguistic_vectors, fused_rank, linguistic_rank, visual_rank,
    cnn_mean_rank, cnn_avgmax_rank, collect_global_feature_sets, evaluate, pos_breakdown,
)

images = int(sys.argv[1]) if len(sys.argv) > 1 else 500
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 40
lr = float(sys.argv[3]) if len(sys.argv) > 3 else 1e-4

config = CorpusConfig(images_per_language=images, captions_per_image=2)
bundle = generate_corpus(config, seed=17)
la, lb = config.languages

dims = ModelDims(feature_dim=config.feature_dim, embed_dim=64, attn_dim=32,
                 num_regions=9, max_len=16)
model = MultiLingualModel.build(dims, {l: bundle.vocabs[l].size for l in (la, lb)}, seed=17)
data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in (la, lb)}

t0 = time.time()
tc = TrainingConfig(batch_size=32, learning_rate=lr, max_epochs=epochs, patience=10)
log = train(model, data, bundle.features, tc, seed=17)
print(f"train: {time.time()-t0:.0f}s epochs {log.epochs_run} best {log.best_val_loss:.4f} "
      f"@{log.best_epoch}")
for r in log.overall()[:3] + log.overall()[-3:]:
    print(f"  epoch {r.epoch}: train {r.train_loss:.4f} val {r.val_loss:.4f}")

# localization accuracy against scene ground truth (concept words only)
t0 = time.time()
from lexipivot.localization import localize, localize_by_attention
scene_by_id = bundle.scene_by_id(la)
spec = bundle.language_specs[la]
word_of = {w: c for c, w in spec.concept_to_word.items()}
hits_probe = hits_attn = total = 0
for ex in bundle.examples[la][:400]:
    scene = scene_by_id[ex.scene_id]
    cregions = scene.concept_regions()
    vocab = bundle.vocabs[la]
    occs_p = localize(model, la, bundle.features[ex.scene_id], ex.tokens)
    occs_a = localize_by_attention(model, la, bundle.features[ex.scene_id], ex.tokens)
    for op, oa in zip(occs_p, occs_a):
        word = vocab.word(op.word_index)
        if word in word_of and word_of[word] in cregions:
            region = cregions[word_of[word]]
            total += 1
            hits_probe += int(np.argmax(op.weights) == region)
            hits_attn += int(np.argmax(oa.weights) == region)
print(f"localization ({time.time()-t0:.0f}s): probe {hits_probe/total:.3f} "
      f"attn {hits_attn/total:.3f} over {total} occurrences")

# induction
t0 = time.time()
tables = {}
for lang in (la, lb):
    sets = collect_word_features(model, bundle.examples[lang], bundle.features, lang, "probe")
    vocab = bundle.vocabs[lang]
    visual = {vocab.word(i): v for i, v in sets.items()}
    tables[lang] = build_table(lang, linguistic_vectors(model, lang, vocab), visual)
print(f"extract: {time.time()-t0:.0f}s")

t0 = time.time()
src, tgt = tables[la], tables[lb]
g_src = collect_global_feature_sets(model, bundle.examples[la], bundle.features,
                                    bundle.vocabs[la], cap=100, seed=17)
g_tgt = collect_global_feature_sets(model, bundle.examples[lb], bundle.features,
                                    bundle.vocabs[lb], cap=100, seed=17)
lex = bundle.lexicon
methods = {}
methods["linguistic"] = {w: linguistic_rank(w, src, tgt) for w in src.words()}
methods["visual"] = {w: visual_rank(w, src, tgt) for w in src.words() if src[w].visual is not None}
methods["fused"] = {w: fused_rank(w, src, tgt) for w in src.words()}
methods["cnn_mean"] = {w: cnn_mean_rank(w, g_src, g_tgt) for w in g_src}
methods["cnn_avgmax"] = {w: cnn_avgmax_rank(w, g_src, g_tgt) for w in g_src}
print(f"rank: {time.time()-t0:.0f}s")

content = [w for w in lex.entries if lex.pos_of(w) in ("noun", "adj")]
for name, rankings in methods.items():
    rep = evaluate(rankings, lex)
    rep_c = evaluate(rankings, lex, words=content)
    print(f"{name:11s} all: MRR {rep.mrr:.3f} P@1 {rep.p_at[1]:.3f} | "
          f"content: MRR {rep_c.mrr:.3f} P@1 {rep_c.p_at[1]:.3f}")
for rep in pos_breakdown(methods["visual"], lex):
    print(f"  visual POS {rep.pos}: MRR {rep.mrr:.3f} n={rep.n}")
