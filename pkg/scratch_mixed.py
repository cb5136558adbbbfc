"""Mixed constituent order: break the position/POS confound between languages."""
import sys
import time

import numpy as np

import lexipivot.corpus.synthetic as syn
from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.seeding import substream
from lexipivot.caption import ModelDims, MultiLingualModel, TrainingConfig, split_by_scene, train
from lexipivot.localization import collect_word_features, localize
from lexipivot.induction import (
    build_table, linguistic_vectors, fused_rank, linguistic_rank, visual_rank, evaluate,
)

ATTR_FIRST_P = {"la": float(sys.argv[1]), "lb": float(sys.argv[2])}
ATTR_P = float(sys.argv[3]) if len(sys.argv) > 3 else 1.0
EPOCHS = int(sys.argv[4]) if len(sys.argv) > 4 else 60
LR = float(sys.argv[5]) if len(sys.argv) > 5 else 3e-4

orig_draw = syn._draw_scene

def patched_draw(scene_id, rng, config):
    k = config.grid_side * config.grid_side
    n_slots = int(rng.integers(1, config.max_slots + 1))
    regions = sorted(int(r) for r in rng.choice(k, size=n_slots, replace=False))
    concepts = rng.choice(config.concepts, size=n_slots, replace=False)
    slots = []
    for region, concept in zip(regions, concepts):
        attrs = (int(rng.integers(config.attributes)),) if rng.random() < ATTR_P else ()
        slots.append((region, int(concept), attrs))
    return syn.Scene(scene_id=scene_id, grid_side=config.grid_side, slots=tuple(slots))

syn._draw_scene = patched_draw


def patched_caption_words(scene, spec, rng):
    p_attr_first = ATTR_FIRST_P[spec.language_id]
    order = rng.permutation(len(scene.slots))
    words = []
    for rank, slot_index in enumerate(order):
        region, concept, attributes = scene.slots[int(slot_index)]
        if rank:
            words.append(spec.function_words["conn"])
        words.append(spec.function_words["det"])
        content = [spec.concept_to_word[concept]]
        attr_words = [spec.attribute_to_word[a] for a in attributes]
        if rng.random() < p_attr_first:
            content = attr_words + content
        else:
            content = content + attr_words
        words.extend(content)
        words.append(spec.function_words["fill"])
    return tuple(words)

syn._caption_words = patched_caption_words

config = CorpusConfig(images_per_language=int(__import__("os").environ.get("IMAGES", 500)), captions_per_image=2)
bundle = generate_corpus(config, seed=17)
la, lb = config.languages
dims = ModelDims(feature_dim=config.feature_dim, embed_dim=64, attn_dim=32,
                 num_regions=9, max_len=16)
model = MultiLingualModel.build(dims, {l: bundle.vocabs[l].size for l in (la, lb)}, seed=17)
data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in (la, lb)}
lex = bundle.lexicon
content = [w for w in lex.entries if lex.pos_of(w) in ("noun", "adj")]

t0 = time.time()
tc = TrainingConfig(batch_size=32, learning_rate=LR, max_epochs=EPOCHS, patience=10)
log = train(model, data, bundle.features, tc, seed=17)
print(f"attr_first={ATTR_FIRST_P} attr_p={ATTR_P} lr={LR}: {time.time()-t0:.0f}s "
      f"epochs {log.epochs_run} best val {log.best_val_loss:.4f}")

tables = {}
for lang in (la, lb):
    sets = collect_word_features(model, bundle.examples[lang], bundle.features, lang, "probe")
    v = bundle.vocabs[lang]
    tables[lang] = build_table(lang, linguistic_vectors(model, lang, v),
                               {v.word(i): x for i, x in sets.items()})
src, tgt = tables[la], tables[lb]

# cross-POS confusion: mean cosine of noun->true noun vs noun->best attr
spec_a, spec_b = bundle.language_specs[la], bundle.language_specs[lb]
nn, na = [], []
for c, w in spec_a.concept_to_word.items():
    if w not in src.feats:
        continue
    true = spec_b.concept_to_word[c]
    nn.append(float(src[w].linguistic @ tgt[true].linguistic))
    na.append(max(float(src[w].linguistic @ tgt[x].linguistic)
                  for x in spec_b.attribute_to_word.values()))
print(f"  noun->true-noun cos {np.mean(nn):.3f} vs noun->best-attr cos {np.mean(na):.3f}")

for name, fn in (("ling", linguistic_rank), ("vis", visual_rank), ("fused", fused_rank)):
    rankings = {}
    for w in src.words():
        try:
            rankings[w] = fn(w, src, tgt)
        except Exception:
            pass
    rep_all = evaluate(rankings, lex)
    rep_c = evaluate(rankings, lex, words=content)
    print(f"  {name:6s} all MRR {rep_all.mrr:.3f} P1 {rep_all.p_at[1]:.3f} | "
          f"content MRR {rep_c.mrr:.3f} P1 {rep_c.p_at[1]:.3f}")
