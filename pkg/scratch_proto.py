import time

import numpy as np

from lexipivot.corpus import CorpusConfig, generate_corpus
from lexipivot.caption import ModelDims, MultiLingualModel, TrainingConfig, split_by_scene, train
from lexipivot.localization import collect_word_features
from lexipivot.induction import (
    build_table, linguistic_vectors, fused_rank, linguistic_rank, visual_rank,
    cnn_mean_rank, cnn_avgmax_rank, collect_global_feature_sets, evaluate, pos_breakdown,
)

t0 = time.time()
config = CorpusConfig(images_per_language=500, captions_per_image=2)
bundle = generate_corpus(config, seed=17)
la, lb = config.languages
print(f"corpus: {time.time()-t0:.1f}s vocab sizes "
      f"{bundle.vocabs[la].size}/{bundle.vocabs[lb].size}")

dims = ModelDims(feature_dim=config.feature_dim, embed_dim=64, attn_dim=32,
                 num_regions=9, max_len=16)
model = MultiLingualModel.build(dims, {l: bundle.vocabs[l].size for l in (la, lb)}, seed=17)
data = {l: split_by_scene(bundle.examples[l], 0.1, 17, l) for l in (la, lb)}

t0 = time.time()
tc = TrainingConfig(batch_size=32, learning_rate=1e-4, max_epochs=5, patience=10)
log = train(model, data, bundle.features, tc, seed=17)
dt = time.time() - t0
print(f"train 5 epochs: {dt:.1f}s ({dt/5:.2f}s/epoch)")
for r in log.overall():
    print(f"  epoch {r.epoch}: train {r.train_loss:.4f} val {r.val_loss:.4f}")
