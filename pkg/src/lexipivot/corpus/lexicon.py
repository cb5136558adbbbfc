"""Ground-truth translation lexicon with optional part-of-speech tags."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import FormatError, InputError


@dataclass
class GroundTruthLexicon:
    """Maps each source word to its set of acceptable target words."""

    source_language: str
    target_language: str
    entries: dict[str, set[str]] = field(default_factory=dict)
    pos: dict[str, str] = field(default_factory=dict)

    def add(self, source: str, target: str, pos: str | None = None) -> None:
        self.entries.setdefault(source, set()).add(target)
        if pos is not None:
            self.pos[source] = pos

    def validate(self) -> None:
        for src, targets in self.entries.items():
            if not targets:
                raise InputError(f"lexicon entry {src!r} has no targets")

    def pos_of(self, source: str) -> str:
        return self.pos.get(source, "unk")

    def __len__(self) -> int:
        return len(self.entries)


def write_lexicon(path, lexicon: GroundTruthLexicon) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src in sorted(lexicon.entries):
            for tgt in sorted(lexicon.entries[src]):
                if src in lexicon.pos:
                    fh.write(f"{src}\t{tgt}\t{lexicon.pos[src]}\n")
                else:
                    fh.write(f"{src}\t{tgt}\n")


def read_lexicon(path, source_language: str = "", target_language: str = "") -> GroundTruthLexicon:
    lexicon = GroundTruthLexicon(source_language, target_language)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise FormatError(f"{path}:{lineno}: expected 2 or 3 tab-separated "
                                  f"fields, got {len(parts)}")
            lexicon.add(parts[0], parts[1], parts[2] if len(parts) == 3 else None)
    return lexicon
