"""Stage orchestration shared by the CLI subcommands.

Every stage writes into its own directory: the produced artifacts, the
fully resolved config echo, and a manifest with input digests, wall-clock
timings, and the output file list. Reports, rankings, and checkpoints are
byte-deterministic given (config, seed); manifests carry timings and are
not part of that guarantee.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .caption import (
    ModelDims,
    MultiLingualModel,
    TrainingConfig,
    split_by_scene,
    train,
)
from .config import RunConfig
from .corpus import (
    CorpusBundle,
    generate_corpus,
    index_captions,
    read_captions,
    read_features,
    read_lexicon,
    read_vocabulary,
    write_captions,
    write_features,
    write_lexicon,
    write_vocabulary,
)
from .errors import ConfigError, EmptyResultError
from .induction import (
    build_table,
    cnn_avgmax_rank,
    cnn_mean_rank,
    collect_global_feature_sets,
    evaluate,
    fused_rank,
    linguistic_rank,
    linguistic_vectors,
    pos_breakdown,
    read_rankings,
    visual_rank,
    write_rankings,
    write_report_csv,
    write_report_json,
)
from .localization import (
    collect_word_features,
    read_word_features,
    write_word_features,
)
from .manifest import RunManifest
from .seeding import derive_seed

log = logging.getLogger("lexipivot")


def _prepare(config: RunConfig, out_dir, command: str):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.echo(out_dir)
    return out_dir, RunManifest(command=command, config_hash=config.config_hash(),
                                seed=config.seed)


# ---------------------------------------------------------------------------
# corpus stage
# ---------------------------------------------------------------------------


def corpus_file(corpus_dir, language: str, kind: str) -> Path:
    suffix = {"features": "features.lxpf", "captions": "captions.tsv",
              "vocab": "vocab.tsv"}[kind]
    return Path(corpus_dir) / f"{language}.{suffix}"


def stage_gen_corpus(config: RunConfig, out_dir) -> dict:
    out_dir, manifest = _prepare(config, out_dir, "gen-corpus")
    with manifest.timed("generate"):
        bundle = generate_corpus(config.corpus, config.seed)
    with manifest.timed("write"):
        for lang in config.corpus.languages:
            feats = {s.scene_id: bundle.features[s.scene_id] for s in bundle.scenes[lang]}
            write_features(corpus_file(out_dir, lang, "features"), feats)
            write_captions(corpus_file(out_dir, lang, "captions"), bundle.captions[lang])
            write_vocabulary(corpus_file(out_dir, lang, "vocab"), bundle.vocabs[lang])
            for kind in ("features", "captions", "vocab"):
                manifest.add_output(corpus_file(out_dir, lang, kind))
        lexicon_path = out_dir / "lexicon.tsv"
        write_lexicon(lexicon_path, bundle.lexicon)
        manifest.add_output(lexicon_path)
    manifest.write(out_dir)
    log.info("corpus written to %s (%d + %d captions)", out_dir,
             len(bundle.captions[config.corpus.languages[0]]),
             len(bundle.captions[config.corpus.languages[1]]))
    return {"out_dir": out_dir, "bundle": bundle}


@dataclass
class LoadedCorpus:
    languages: tuple[str, str]
    features: dict[int, np.ndarray]
    examples: dict[str, list]
    vocabs: dict
    lexicon: object


def load_corpus(config: RunConfig, corpus_dir) -> LoadedCorpus:
    corpus_dir = Path(corpus_dir)
    languages = tuple(config.corpus.languages)
    features: dict[int, np.ndarray] = {}
    examples, vocabs = {}, {}
    for lang in languages:
        lang_feats = read_features(corpus_file(corpus_dir, lang, "features"))
        features.update(lang_feats)
        vocab = read_vocabulary(corpus_file(corpus_dir, lang, "vocab"), lang)
        captions = read_captions(corpus_file(corpus_dir, lang, "captions"), lang)
        examples[lang] = index_captions(captions, vocab, config.corpus.max_caption_len)
        vocabs[lang] = vocab
    lexicon = read_lexicon(corpus_dir / "lexicon.tsv", *languages)
    return LoadedCorpus(languages=languages, features=features, examples=examples,
                        vocabs=vocabs, lexicon=lexicon)


def bundle_as_loaded(bundle: CorpusBundle) -> LoadedCorpus:
    return LoadedCorpus(
        languages=tuple(bundle.config.languages),
        features=bundle.features,
        examples=bundle.examples,
        vocabs=bundle.vocabs,
        lexicon=bundle.lexicon,
    )


# ---------------------------------------------------------------------------
# training stage
# ---------------------------------------------------------------------------


def build_model_from_config(config: RunConfig, vocab_sizes: dict[str, int]) -> MultiLingualModel:
    dims = ModelDims(
        feature_dim=config.corpus.feature_dim,
        embed_dim=config.model.embed_dim,
        attn_dim=config.model.attn_dim,
        num_regions=config.corpus.grid_side ** 2,
        max_len=config.corpus.max_caption_len,
    )
    return MultiLingualModel.build(
        dims, vocab_sizes, seed=derive_seed(config.seed, "init"),
        attention=config.model.attention, dtype=np.dtype(config.model.dtype).type,
        freeze_encoder=config.model.freeze_encoder)


def write_training_log(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "language", "train_loss", "val_loss"])
        for r in rows:
            writer.writerow([r.epoch, r.language, f"{r.train_loss:.8f}",
                             f"{r.val_loss:.8f}"])


def stage_train(config: RunConfig, out_dir, corpus_dir, mono: str | None = None,
                corpus: LoadedCorpus | None = None) -> dict:
    out_dir, manifest = _prepare(config, out_dir, "train")
    with manifest.timed("load"):
        loaded = corpus if corpus is not None else load_corpus(config, corpus_dir)
    languages = (mono,) if mono else loaded.languages
    for lang in languages:
        if lang not in loaded.examples:
            raise ConfigError(f"language {lang!r} not present in corpus {corpus_dir}")

    model = build_model_from_config(
        config, {lang: loaded.vocabs[lang].size for lang in languages})
    data = {
        lang: split_by_scene(loaded.examples[lang], config.training.val_fraction,
                             derive_seed(config.seed, "split"), lang)
        for lang in languages
    }
    with manifest.timed("train"):
        result = train(model, data, loaded.features, config.training, config.seed)

    with manifest.timed("write"):
        prefix = out_dir / "checkpoint"
        vocab_paths = {lang: str(corpus_file(corpus_dir, lang, "vocab"))
                       for lang in languages} if corpus_dir else {}
        model.save_checkpoint(prefix, extra={
            "vocab_paths": vocab_paths,
            "best_epoch": result.best_epoch,
            "best_val_loss": result.best_val_loss,
        })
        log_path = out_dir / "log.csv"
        write_training_log(log_path, result.rows)
        for p in (prefix.with_suffix(".lxpv"), prefix.with_suffix(".json"), log_path):
            manifest.add_output(p)
    manifest.write(out_dir)
    log.info("training done: best val %.4f at epoch %d (%d epochs run)",
             result.best_val_loss, result.best_epoch, result.epochs_run)
    return {"out_dir": out_dir, "model": model, "log": result,
            "checkpoint": out_dir / "checkpoint"}


# ---------------------------------------------------------------------------
# extraction stage
# ---------------------------------------------------------------------------


def table_file(features_dir, language: str, kind: str) -> Path:
    return Path(features_dir) / f"{language}.{kind}.lxwf"


def stage_extract(config: RunConfig, out_dir, checkpoint, corpus_dir,
                  corpus: LoadedCorpus | None = None,
                  model: MultiLingualModel | None = None) -> dict:
    out_dir, manifest = _prepare(config, out_dir, "extract")
    with manifest.timed("load"):
        loaded = corpus if corpus is not None else load_corpus(config, corpus_dir)
        if model is None:
            model, _ = MultiLingualModel.load_checkpoint(checkpoint)
            manifest.add_input(Path(checkpoint).with_suffix(".lxpv"))
    if model.dims.feature_dim != config.corpus.feature_dim:
        raise ConfigError(
            f"checkpoint feature dim {model.dims.feature_dim} does not match "
            f"corpus feature dim {config.corpus.feature_dim}")

    method = config.extraction.method
    for lang in loaded.languages:
        if lang not in model.vocab_sizes:
            raise ConfigError(f"checkpoint has no language {lang!r}")
        vocab = loaded.vocabs[lang]
        with manifest.timed(f"localize:{lang}"):
            sets = collect_word_features(
                model, loaded.examples[lang], loaded.features, lang, method,
                cap=config.extraction.cap, seed=config.seed, threads=config.threads)
        with manifest.timed(f"write:{lang}"):
            visual_entries = {}
            for index in sorted(sets):
                feats = sets[index]
                mean = np.mean(np.asarray(feats, dtype=np.float64), axis=0,
                               keepdims=True)
                visual_entries[vocab.word(index)] = (len(feats), mean)
            visual_path = table_file(out_dir, lang, f"visual-{method}")
            write_word_features(visual_path, lang, visual_entries, aggregated=True)

            ling = linguistic_vectors(model, lang, vocab)
            ling_entries = {w: (vocab.counts.get(w, 0), v[None]) for w, v in ling.items()}
            ling_path = table_file(out_dir, lang, "linguistic")
            write_word_features(ling_path, lang, ling_entries, aggregated=True)

            global_sets = collect_global_feature_sets(
                model, loaded.examples[lang], loaded.features, vocab,
                cap=config.induction.baseline_set_cap, seed=config.seed)
            global_entries = {w: (len(rows), rows) for w, rows in global_sets.items()}
            global_path = table_file(out_dir, lang, "global")
            write_word_features(global_path, lang, global_entries, aggregated=False)
            for p in (visual_path, ling_path, global_path):
                manifest.add_output(p)
    manifest.write(out_dir)
    return {"out_dir": out_dir, "method": method}


# ---------------------------------------------------------------------------
# induction + evaluation stage
# ---------------------------------------------------------------------------


def _aggregated_as_vectors(entries) -> dict[str, np.ndarray]:
    return {word: rows[0] for word, (_, rows) in entries.items()}


def _load_tables(features_dir, languages, method: str):
    tables, globals_ = {}, {}
    for lang in languages:
        _, _, ling_entries = read_word_features(table_file(features_dir, lang, "linguistic"))
        _, aggregated, vis_entries = read_word_features(
            table_file(features_dir, lang, f"visual-{method}"))
        if not aggregated:
            raise ConfigError(f"visual table for {lang} is not aggregated")
        counts = {w: c for w, (c, _) in vis_entries.items()}
        linguistic = _aggregated_as_vectors(ling_entries)
        visual_sets = {w: [rows[0]] for w, (_, rows) in vis_entries.items()}
        tables[lang] = build_table(lang, linguistic, visual_sets, counts)
        _, _, glob_entries = read_word_features(table_file(features_dir, lang, "global"))
        globals_[lang] = {w: rows for w, (_, rows) in glob_entries.items()}
    return tables, globals_


def induction_pair(config: RunConfig) -> tuple[str, str]:
    src = config.induction.source_language or config.corpus.languages[0]
    tgt = config.induction.target_language or config.corpus.languages[1]
    if src == tgt:
        raise ConfigError("source and target language must differ")
    return src, tgt


def compute_rankings(config: RunConfig, tables, global_sets, source: str,
                     target: str) -> dict[str, dict]:
    src_table, tgt_table = tables[source], tables[target]
    methods = {}
    lam = config.induction.fusion_lambda
    for method in config.induction.methods:
        rankings = {}
        if method in ("linguistic", "visual", "fused"):
            for word in src_table.words():
                if method == "linguistic":
                    rankings[word] = linguistic_rank(word, src_table, tgt_table)
                elif method == "visual":
                    if src_table[word].visual is None:
                        continue
                    rankings[word] = visual_rank(word, src_table, tgt_table)
                else:
                    rankings[word] = fused_rank(word, src_table, tgt_table,
                                                fusion_lambda=lam)
        else:
            src_sets, tgt_sets = global_sets[source], global_sets[target]
            rank_fn = cnn_mean_rank if method == "cnn_mean" else cnn_avgmax_rank
            for word in sorted(src_sets):
                rankings[word] = rank_fn(word, src_sets, tgt_sets)
        methods[method] = rankings
    return methods


def reports_for(methods: dict[str, dict], lexicon, ks) -> list:
    reports = []
    for method in sorted(methods):
        rankings = methods[method]
        if not rankings:
            continue
        try:
            reports.append(evaluate(rankings, lexicon, ks=ks, method=method))
        except EmptyResultError:
            continue
        reports.extend(pos_breakdown(rankings, lexicon, ks=ks, method=method))
    if not reports:
        raise EmptyResultError("no evaluable source words for any method")
    return reports


def stage_induce(config: RunConfig, out_dir, features_dir, lexicon_path) -> dict:
    out_dir, manifest = _prepare(config, out_dir, "induce")
    source, target = induction_pair(config)
    with manifest.timed("load"):
        lexicon = read_lexicon(lexicon_path, source, target)
        manifest.add_input(lexicon_path)
        tables, global_sets = _load_tables(features_dir, (source, target),
                                           config.extraction.method)
    with manifest.timed("rank"):
        methods = compute_rankings(config, tables, global_sets, source, target)
    with manifest.timed("evaluate"):
        reports = reports_for(methods, lexicon, config.induction.ks)
    with manifest.timed("write"):
        rankings_path = out_dir / "rankings.tsv"
        write_rankings(rankings_path, methods, top_k=config.induction.top_k,
                       full=config.induction.full_rankings)
        csv_path, json_path = out_dir / "report.csv", out_dir / "report.json"
        write_report_csv(csv_path, reports)
        write_report_json(json_path, reports)
        for p in (rankings_path, csv_path, json_path):
            manifest.add_output(p)
    manifest.write(out_dir)
    return {"out_dir": out_dir, "methods": methods, "reports": reports}


def stage_eval(config: RunConfig, out_dir, rankings_path, lexicon_path) -> dict:
    """Re-score existing rankings (possibly truncated) against a lexicon."""
    out_dir, manifest = _prepare(config, out_dir, "eval")
    source, target = induction_pair(config)
    with manifest.timed("load"):
        lexicon = read_lexicon(lexicon_path, source, target)
        methods = read_rankings(rankings_path)
        manifest.add_input(rankings_path)
        manifest.add_input(lexicon_path)
    with manifest.timed("evaluate"):
        reports = reports_for(methods, lexicon, config.induction.ks)
    with manifest.timed("write"):
        csv_path, json_path = out_dir / "report.csv", out_dir / "report.json"
        write_report_csv(csv_path, reports)
        write_report_json(json_path, reports)
        manifest.add_output(csv_path)
        manifest.add_output(json_path)
    manifest.write(out_dir)
    return {"out_dir": out_dir, "reports": reports}


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def run_pipeline(config: RunConfig, out_dir) -> dict:
    out_dir, manifest = _prepare(config, out_dir, "pipeline")
    with manifest.timed("gen-corpus"):
        gen = stage_gen_corpus(config, out_dir / "corpus")
    loaded = bundle_as_loaded(gen["bundle"])
    with manifest.timed("train"):
        trained = stage_train(config, out_dir / "train", out_dir / "corpus",
                              corpus=loaded)
    with manifest.timed("extract"):
        extracted = stage_extract(config, out_dir / "features",
                                  trained["checkpoint"], out_dir / "corpus",
                                  corpus=loaded, model=trained["model"])
    with manifest.timed("induce"):
        induced = stage_induce(config, out_dir / "induction",
                               extracted["out_dir"], out_dir / "corpus" / "lexicon.tsv")
    manifest.write(out_dir)
    return {
        "out_dir": out_dir,
        "corpus": gen,
        "train": trained,
        "extract": extracted,
        "induce": induced,
    }
