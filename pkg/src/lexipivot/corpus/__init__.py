from .fileio import (
    load_external_dataset,
    read_captions,
    read_features,
    read_vocabulary,
    write_captions,
    write_features,
    write_vocabulary,
)
from .lexicon import GroundTruthLexicon, read_lexicon, write_lexicon
from .synthetic import (
    ConceptPrototypes,
    CorpusBundle,
    CorpusConfig,
    Scene,
    SyntheticLanguageSpec,
    build_language_spec,
    build_lexicon,
    generate_corpus,
    render_spatial_features,
)
from .vocab import (
    BOS,
    EOS,
    PAD,
    RESERVED,
    UNK,
    CaptionedExample,
    RawCaption,
    Vocabulary,
    build_vocabulary,
    index_caption,
    index_captions,
)

__all__ = [
    "BOS",
    "EOS",
    "PAD",
    "RESERVED",
    "UNK",
    "CaptionedExample",
    "ConceptPrototypes",
    "CorpusBundle",
    "CorpusConfig",
    "GroundTruthLexicon",
    "RawCaption",
    "Scene",
    "SyntheticLanguageSpec",
    "Vocabulary",
    "build_language_spec",
    "build_lexicon",
    "build_vocabulary",
    "generate_corpus",
    "index_caption",
    "index_captions",
    "load_external_dataset",
    "read_captions",
    "read_features",
    "read_lexicon",
    "read_vocabulary",
    "render_spatial_features",
    "write_captions",
    "write_features",
    "write_lexicon",
    "write_vocabulary",
]
