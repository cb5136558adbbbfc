"""Compare corpus grammar variants for linguistic alignment quality."""
import sys
import time

import numpy as np

import lexipivot.corpus.synthetic as syn
from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.corpus.synthetic import SyntheticLanguageSpec, _SYLLABLES, _make_words, FUNCTION_ROLES
from lexipivot.seeding import substream
from lexipivot.caption import ModelDims, MultiLingualModel, TrainingConfig, split_by_scene, train
from lexipivot.localization import collect_word_features, localize
from lexipivot.induction import (
    build_table, linguistic_vectors, fused_rank, linguistic_rank, visual_rank, evaluate,
)

VARIANT = sys.argv[1]
ATTR_P = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
EPOCHS = int(sys.argv[3]) if len(sys.argv) > 3 else 60

TEMPLATES = {
    "full": (("det", "attr", "noun", "fill"), ("det", "noun", "attr", "fill")),
    "nofill": (("det", "attr", "noun"), ("det", "noun", "attr")),
    "bare": (("attr", "noun"), ("noun", "attr")),
}

orig_build = syn.build_language_spec

def patched_build(language_id, slot, config, seed):
    spec = orig_build(language_id, slot, config, seed)
    template = TEMPLATES[VARIANT][slot]
    return SyntheticLanguageSpec(
        language_id=spec.language_id,
        concept_to_word=spec.concept_to_word,
        attribute_to_word=spec.attribute_to_word,
        function_words=spec.function_words,
        order_template=template,
        pos_of_word=spec.pos_of_word,
    )

syn.build_language_spec = patched_build

# optional attributes: patch _draw_scene
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

config = CorpusConfig(images_per_language=500, captions_per_image=2)
bundle = generate_corpus(config, seed=17)
la, lb = config.languages
dims = ModelDims(feature_dim=config.feature_dim, embed_dim=64, attn_dim=32,
                 num_regions=9, max_len=16)
model = MultiLingualModel.build(dims, {l: bundle.vocabs[l].size for l in (la, lb)}, seed=17)
data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in (la, lb)}
lex = bundle.lexicon
content = [w for w in lex.entries if lex.pos_of(w) in ("noun", "adj")]

t0 = time.time()
tc = TrainingConfig(batch_size=32, learning_rate=3e-4, max_epochs=EPOCHS, patience=10)
log = train(model, data, bundle.features, tc, seed=17)
print(f"{VARIANT} attr_p={ATTR_P}: train {time.time()-t0:.0f}s "
      f"epochs {log.epochs_run} best val {log.best_val_loss:.4f} @ {log.best_epoch}")

# probe accuracy on concept words
scene_by_id = bundle.scene_by_id(la)
spec = bundle.language_specs[la]
word_of = {w: c for c, w in spec.concept_to_word.items()}
vocab = bundle.vocabs[la]
hits = total = 0
for ex in bundle.examples[la][:300]:
    scene = scene_by_id[ex.scene_id]
    cregions = scene.concept_regions()
    for occ in localize(model, la, bundle.features[ex.scene_id], ex.tokens):
        w = vocab.word(occ.word_index)
        if w in word_of and word_of[w] in cregions:
            total += 1
            hits += int(np.argmax(occ.weights) == cregions[word_of[w]])
print(f"probe accuracy: {hits/total:.3f} ({total} occ)")

tables = {}
for lang in (la, lb):
    sets = collect_word_features(model, bundle.examples[lang], bundle.features, lang, "probe")
    v = bundle.vocabs[lang]
    tables[lang] = build_table(lang, linguistic_vectors(model, lang, v),
                               {v.word(i): x for i, x in sets.items()})
src, tgt = tables[la], tables[lb]
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
