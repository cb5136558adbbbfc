import sys
import time

import numpy as np

from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.caption import ModelDims, MultiLingualModel, TrainingConfig, split_by_scene, train
from lexipivot.localization import collect_word_features, localize
from lexipivot.induction import (
    build_table, linguistic_vectors, fused_rank, linguistic_rank, visual_rank, evaluate,
)

images, epochs, lr = int(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3])
config = CorpusConfig(images_per_language=images, captions_per_image=2)
bundle = generate_corpus(config, seed=17)
la, lb = config.languages
dims = ModelDims(feature_dim=config.feature_dim, embed_dim=64, attn_dim=32,
                 num_regions=9, max_len=16)
model = MultiLingualModel.build(dims, {l: bundle.vocabs[l].size for l in (la, lb)}, seed=17)
data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in (la, lb)}

lex = bundle.lexicon
content = [w for w in lex.entries if lex.pos_of(w) in ("noun", "adj")]


def snapshot(tag):
    tables = {}
    for lang in (la, lb):
        sets = collect_word_features(model, bundle.examples[lang][:2000], bundle.features,
                                     lang, "probe")
        vocab = bundle.vocabs[lang]
        visual = {vocab.word(i): v for i, v in sets.items()}
        tables[lang] = build_table(lang, linguistic_vectors(model, lang, vocab), visual)
    src, tgt = tables[la], tables[lb]
    res = {}
    for name, fn in (("ling", linguistic_rank), ("vis", visual_rank), ("fused", fused_rank)):
        rankings = {}
        for w in src.words():
            try:
                rankings[w] = fn(w, src, tgt)
            except Exception:
                pass
        rep = evaluate(rankings, lex, words=content)
        res[name] = (rep.mrr, rep.p_at[1])
    # spread stats for correct vs random pairs
    sl_pos, si_pos, sl_all, si_all = [], [], [], []
    rng = np.random.default_rng(0)
    tgt_words = tgt.words()
    for w in content:
        t_true = next(iter(lex.entries[w]))
        if w in src.feats and t_true in tgt.feats:
            sl_pos.append(float(src[w].linguistic @ tgt[t_true].linguistic))
            if src[w].visual is not None and tgt[t_true].visual is not None:
                si_pos.append(float(src[w].visual @ tgt[t_true].visual))
        for _ in range(5):
            y = tgt_words[int(rng.integers(len(tgt_words)))]
            sl_all.append(float(src[w].linguistic @ tgt[y].linguistic))
            if src[w].visual is not None and tgt[y].visual is not None:
                si_all.append(float(src[w].visual @ tgt[y].visual))
    print(f"[{tag}] ling MRR {res['ling'][0]:.3f} P1 {res['ling'][1]:.3f} | "
          f"vis MRR {res['vis'][0]:.3f} | fused MRR {res['fused'][0]:.3f} P1 {res['fused'][1]:.3f}")
    print(f"   s_l true {np.mean(sl_pos):.3f}+-{np.std(sl_pos):.3f} rand {np.mean(sl_all):.3f}+-{np.std(sl_all):.3f} | "
          f"s_i true {np.mean(si_pos):.4f}+-{np.std(si_pos):.4f} rand {np.mean(si_all):.4f}+-{np.std(si_all):.4f}")


tc_chunk = TrainingConfig(batch_size=32, learning_rate=lr, max_epochs=epochs // 5,
                          patience=10_000)
for chunk in range(5):
    t0 = time.time()
    log = train(model, data, bundle.features, tc_chunk, seed=17 + chunk)
    print(f"chunk {chunk}: {time.time()-t0:.0f}s val {log.overall()[-1].val_loss:.4f}")
    snapshot(f"epoch {(chunk + 1) * (epochs // 5)}")
