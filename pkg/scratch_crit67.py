"""Reconnaissance for acceptance criteria 6 (low-resource) and 7 (noiseless)."""
import os
import sys
import time

import numpy as np

from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.caption import (ModelDims, MultiLingualModel, TrainingConfig, bleu4,
                               generate_caption, split_by_scene, train)
from lexipivot.corpus.vocab import EOS
from lexipivot.localization import localize, localize_by_attention

which = sys.argv[1]
t_start = time.time()

if which == "lowres":
    images_a, images_b = int(os.environ.get("NA", 600)), int(os.environ.get("NB", 120))
    epochs = int(os.environ.get("EPOCHS", 30))
    config = CorpusConfig(images_per_language={"la": images_a, "lb": images_b},
                          captions_per_image=2)
    bundle = generate_corpus(config, seed=17)
    dims = ModelDims(feature_dim=32, embed_dim=64, attn_dim=32, num_regions=9, max_len=16)
    tc = TrainingConfig(batch_size=32, learning_rate=3e-4, max_epochs=epochs,
                        patience=10**6)
    data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in ("la", "lb")}

    def fit(langs):
        model = MultiLingualModel.build(
            dims, {l: bundle.vocabs[l].size for l in langs}, seed=17, dtype=np.float32)
        log = train(model, {l: data[l] for l in langs}, bundle.features, tc, seed=17)
        return model, log

    multi, log_multi = fit(("la", "lb"))
    mono_a, log_a = fit(("la",))
    mono_b, log_b = fit(("lb",))

    def val_loss(log, lang):
        rows = [r for r in log.rows if r.language == lang]
        best_epoch = log.best_epoch
        return next(r.val_loss for r in rows if r.epoch == best_epoch)

    vb_multi, vb_mono = val_loss(log_multi, "lb"), val_loss(log_b, "lb")
    print(f"val loss B: multi {vb_multi:.4f} vs mono {vb_mono:.4f} "
          f"({'OK' if vb_multi <= vb_mono else 'FAIL'})")

    def bleu_for(model, lang):
        val = data[lang][1]
        by_scene = {}
        for ex in val:
            by_scene.setdefault(ex.scene_id, []).append(list(ex.tokens[1:-1]))
        cands, refs = [], []
        for sid in sorted(by_scene):
            toks = generate_caption(model, lang, bundle.features[sid])
            if toks and toks[-1] == EOS:
                toks = toks[:-1]
            cands.append(toks)
            refs.append(by_scene[sid])
        return bleu4(cands, refs)

    ba_multi, ba_mono = bleu_for(multi, "la"), bleu_for(mono_a, "la")
    print(f"BLEU4 A: multi {ba_multi:.2f} vs mono {ba_mono:.2f} "
          f"({'OK' if ba_multi >= ba_mono - 0.5 else 'FAIL'})")
    bb_multi, bb_mono = bleu_for(multi, "lb"), bleu_for(mono_b, "lb")
    print(f"BLEU4 B: multi {bb_multi:.2f} vs mono {bb_mono:.2f}")

elif which == "noiseless":
    images = int(os.environ.get("IMAGES", 800))
    epochs = int(os.environ.get("EPOCHS", 40))
    config = CorpusConfig(images_per_language=images, captions_per_image=2,
                          noise_sigma=0.0)
    bundle = generate_corpus(config, seed=17)
    dims = ModelDims(feature_dim=32, embed_dim=64, attn_dim=32, num_regions=9, max_len=16)
    model = MultiLingualModel.build(
        dims, {l: bundle.vocabs[l].size for l in ("la", "lb")}, seed=17, dtype=np.float32)
    tc = TrainingConfig(batch_size=32, learning_rate=3e-4, max_epochs=epochs, patience=10)
    data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in ("la", "lb")}
    log = train(model, data, bundle.features, tc, seed=17)
    print(f"train {time.time()-t_start:.0f}s epochs {log.epochs_run} "
          f"best val {log.best_val_loss:.4f}")

    hp = ha = total = 0
    for lang in ("la", "lb"):
        scene_by_id = bundle.scene_by_id(lang)
        spec = bundle.language_specs[lang]
        word_of = {w: c for c, w in spec.concept_to_word.items()}
        vocab = bundle.vocabs[lang]
        for ex in bundle.examples[lang][:300]:
            scene = scene_by_id[ex.scene_id]
            cregions = scene.concept_regions()
            op = localize(model, lang, bundle.features[ex.scene_id], ex.tokens)
            oa = localize_by_attention(model, lang, bundle.features[ex.scene_id], ex.tokens)
            for p, a in zip(op, oa):
                w = vocab.word(p.word_index)
                if w in word_of and word_of[w] in cregions:
                    total += 1
                    hp += int(np.argmax(p.weights) == cregions[word_of[w]])
                    ha += int(np.argmax(a.weights) == cregions[word_of[w]])
    print(f"probe {hp/total:.3f} attn {ha/total:.3f} over {total} "
          f"({'OK' if hp/total >= 0.8 and hp >= ha else 'FAIL'})")

    # generated caption mentions the scene's concept word (>= 90% over 50 images)
    lang = "la"
    spec = bundle.language_specs[lang]
    vocab = bundle.vocabs[lang]
    concept_indices = {vocab.word_to_index[w] for w in spec.concept_to_word.values()
                       if w in vocab.word_to_index}
    mentioned = 0
    scenes = bundle.scenes[lang][:50]
    for scene in scenes:
        toks = generate_caption(model, lang, bundle.features[scene.scene_id])
        scene_words = {vocab.word_to_index[spec.concept_to_word[c]]
                       for _, c, _ in scene.slots}
        mentioned += int(bool(scene_words & set(toks)))
    print(f"caption mentions concept: {mentioned}/{len(scenes)}")

print(f"total {time.time()-t_start:.0f}s")
