"""Result-code aggregation and master-text report rendering.

The master text is a UTF-8 file, one record per abnormality:

    abnormality<TAB>negative sentence<TAB>positive sentence

'#' lines are comments. Report lines are always emitted in
(cardiomegaly, effusion, consolidation) order, one per abnormality.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .classifier import ABNORMALITY_TAGS
from .errors import EmptySentence, MissingSentence, UnknownAbnormality


@dataclass(frozen=True)
class ResultCode:
    bits: tuple[int, int, int]  # (cardiomegaly, effusion, consolidation)

    def __post_init__(self):
        if len(self.bits) != 3 or any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"result code needs exactly 3 binary digits, got {self.bits!r}")

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def parse(cls, text: str) -> "ResultCode":
        if len(text) != 3 or any(ch not in "01" for ch in text):
            raise ValueError(f"bad result code {text!r}")
        return cls(tuple(int(ch) for ch in text))


@dataclass(frozen=True)
class MasterText:
    """Per-abnormality (negative sentence, positive sentence) pairs."""

    sentences: dict[str, tuple[str, str]]

    def __post_init__(self):
        missing = [t for t in ABNORMALITY_TAGS if t not in self.sentences]
        if missing:
            raise MissingSentence(f"master text missing: {', '.join(missing)}")
        unknown = [t for t in self.sentences if t not in ABNORMALITY_TAGS]
        if unknown:
            raise UnknownAbnormality(f"unknown abnormality keys: {', '.join(unknown)}")
        for tag, pair in self.sentences.items():
            if not pair[0] or not pair[1]:
                raise EmptySentence(f"empty sentence for {tag}")

    def negative(self, tag: str) -> str:
        return self.sentences[tag][0]

    def positive(self, tag: str) -> str:
        return self.sentences[tag][1]


@dataclass(frozen=True)
class Report:
    lines: tuple[str, str, str]
    result_code: ResultCode

    def render(self) -> str:
        return "\n".join(self.lines)


def aggregate(labels) -> ResultCode:
    """Concatenate the three model labels, cardiomegaly first."""
    labels = tuple(int(v) for v in labels)
    return ResultCode(labels)


def parse_master_text(text: str) -> MasterText:
    sentences: dict[str, tuple[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MissingSentence(
                f"line {lineno}: expected abnormality<TAB>negative<TAB>positive"
            )
        tag, neg, pos = (p.strip() for p in parts)
        if tag not in ABNORMALITY_TAGS:
            raise UnknownAbnormality(f"line {lineno}: unknown abnormality {tag!r}")
        if not neg or not pos:
            raise EmptySentence(f"line {lineno}: empty sentence for {tag}")
        sentences[tag] = (neg, pos)
    return MasterText(sentences)


def load_master_text(path: str | Path) -> MasterText:
    return parse_master_text(Path(path).read_text(encoding="utf-8"))


def default_master_text() -> MasterText:
    bundled = resources.files("cxrgen").joinpath("data/master_text.txt")
    return parse_master_text(bundled.read_text(encoding="utf-8"))


def generate_report(code: ResultCode, mt: MasterText) -> Report:
    lines = tuple(
        mt.positive(tag) if bit else mt.negative(tag)
        for tag, bit in zip(ABNORMALITY_TAGS, code.bits)
    )
    return Report(lines=lines, result_code=code)
