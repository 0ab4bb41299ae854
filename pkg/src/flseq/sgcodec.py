"""Sequence-generation codec: numbered inputs, "k<TAB>line" targets, patch parsing.

The training input is the buggy function with each line prefixed by its
1-based number and one tab; the training target is the fault line's number,
one tab, and that line's text verbatim. Generated patches are parsed back by
splitting at the first tab. Tabs inside code lines are legal; only the first
tab of a patch delimits the number from the text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ._records import read_records, write_records
from .corpus import FunctionPair, join_lines, split_lines
from .errors import EmptySource, MalformedRecord, OutOfRange

#: Dataset layout variants. "standard" is the full scheme (numbered input,
#: "k\tline" target); the other two mirror the ablations that drop numbering
#: from the input or the line text from the target.
VARIANTS = ("standard", "unnumbered_line", "number_only")


@dataclass(frozen=True)
class SGExample:
    """One training/evaluation example: input text and its expected output."""

    id: str
    input_text: str
    target_text: str
    fault_lines: frozenset[int]
    n_lines: int


@dataclass(frozen=True)
class PatchCandidate:
    """One decoded hypothesis, parsed as a predicted fault location.

    ``line_number``/``line_text`` are both set on parse success and both None
    otherwise; an unparsed candidate is retained because it can still match
    in sequence mode.
    """

    raw_text: str
    log_prob: float
    line_number: int | None = None
    line_text: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.log_prob):
            raise ValueError(f"non-finite log_prob {self.log_prob!r}")


def add_line_numbers(source: str) -> str:
    """Prefix line m with "m<TAB>"; empty lines are numbered too."""
    lines = split_lines(source)
    if not lines:
        raise EmptySource("source has zero lines")
    return "\n".join(f"{m}\t{line}" for m, line in enumerate(lines, start=1))


def strip_line_numbers(numbered: str) -> str:
    """Inverse of add_line_numbers (drops each "m<TAB>" prefix)."""
    out = []
    for m, line in enumerate(split_lines(numbered), start=1):
        prefix = f"{m}\t"
        if not line.startswith(prefix):
            raise ValueError(f"line {m} lacks its number prefix")
        out.append(line[len(prefix):])
    return join_lines(out)


def make_target(source: str, k: int) -> str:
    """Decimal k, one tab, then line k verbatim."""
    lines = split_lines(source)
    if not (1 <= k <= len(lines)):
        raise OutOfRange(f"line {k} outside [1, {len(lines)}]")
    return f"{k}\t{lines[k - 1]}"


def parse_patch(raw: str, log_prob: float) -> PatchCandidate:
    """Split generated text at the first tab; never raises on model output."""
    head, sep, rest = raw.partition("\t")
    if sep and head.isascii() and head.isdigit():
        return PatchCandidate(raw, log_prob, line_number=int(head), line_text=rest)
    return PatchCandidate(raw, log_prob)


def build_sg_examples(pair: FunctionPair, variant: str = "standard") -> list[SGExample]:
    """One example per fault line, ordered by ascending line number.

    Examples of one pair share the pair's id and input_text; only the targets
    differ. The non-standard variants exist for the numbering/target ablations.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    lines = pair.buggy_lines
    if variant == "unnumbered_line":
        input_text = pair.buggy
        if not lines:
            raise EmptySource("source has zero lines")
    else:
        input_text = add_line_numbers(pair.buggy)
    examples = []
    for k in sorted(pair.fault_lines):
        if variant == "standard":
            target = make_target(pair.buggy, k)
        elif variant == "unnumbered_line":
            target = lines[k - 1]
        else:
            target = str(k)
        examples.append(
            SGExample(
                id=pair.id,
                input_text=input_text,
                target_text=target,
                fault_lines=pair.fault_lines,
                n_lines=len(lines),
            )
        )
    return examples


# --- SG dataset file --------------------------------------------------------


def write_sg_dataset(examples: Iterable[SGExample], path: str | Path) -> int:
    return write_records(
        path,
        (
            {
                "id": ex.id,
                "input_text": ex.input_text,
                "target_text": ex.target_text,
                "fault_lines": sorted(ex.fault_lines),
                "n_lines": ex.n_lines,
            }
            for ex in examples
        ),
    )


def read_sg_dataset(path: str | Path) -> list[SGExample]:
    examples = []
    for line_no, rec in read_records(path):
        try:
            examples.append(
                SGExample(
                    id=rec["id"],
                    input_text=rec["input_text"],
                    target_text=rec["target_text"],
                    fault_lines=frozenset(rec["fault_lines"]),
                    n_lines=rec["n_lines"],
                )
            )
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(f"bad SG record ({exc})", line_no) from exc
    return examples
