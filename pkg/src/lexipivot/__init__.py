"""lexipivot: bilingual lexicon induction from mono-lingual image-caption data."""

__version__ = "0.1.0"
