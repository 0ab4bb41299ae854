"""Ground-truth corpus handling: (buggy, fixed) pairs, diff labeling, injection.

A :class:`FunctionPair` is the unit of ground truth: a buggy function, its
fixed counterpart (when known), and the set of 1-based fault lines in the
buggy text. Fault lines are derived from a whole-line LCS diff when the
record does not carry them explicitly.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ._records import read_records, write_records
from .errors import EmptySource, MalformedRecord, NoApplicableSite, NoDifference

# --- text conventions -------------------------------------------------------
#
# All sources are LF-normalized. A single trailing newline never produces a
# phantom empty last line, so line numbering is unambiguous.


def normalize_source(text: str) -> str:
    """CRLF/CR to LF; strip at most one trailing newline."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    if text.endswith("\n"):
        text = text[:-1]
    return text


def split_lines(text: str) -> list[str]:
    """Split into lines with the no-phantom-last-line convention."""
    if text == "":
        return []
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n")


def join_lines(lines: list[str]) -> str:
    """Inverse of split_lines.

    A genuinely empty last line needs its final-newline marker back, or it
    would read as a bare trailing newline and vanish on the next split.
    """
    text = "\n".join(lines)
    if lines and lines[-1] == "":
        text += "\n"
    return text


def line_count(text: str) -> int:
    return len(split_lines(text))


@dataclass(frozen=True)
class FunctionPair:
    """A labeled (buggy, fixed) function pair.

    ``fixed`` is None for records ingested with explicit fault lines.
    ``fault_lines`` is non-empty and every index lies in [1, line_count(buggy)].
    """

    id: str
    buggy: str
    fault_lines: frozenset[int]
    fixed: str | None = None
    language_tag: str = ""

    def __post_init__(self):
        if "\r" in self.buggy or (self.fixed is not None and "\r" in self.fixed):
            raise ValueError(f"pair {self.id}: CR characters survive normalization")
        n = line_count(self.buggy)
        if n == 0:
            raise EmptySource(f"pair {self.id}: buggy source has zero lines")
        if not self.fault_lines:
            raise ValueError(f"pair {self.id}: empty fault-line set")
        bad = [k for k in self.fault_lines if not (1 <= k <= n)]
        if bad:
            raise ValueError(f"pair {self.id}: fault lines {sorted(bad)} outside [1, {n}]")

    @property
    def buggy_lines(self) -> list[str]:
        return split_lines(self.buggy)


# --- line diff ---------------------------------------------------------------


def _lcs_matches(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """0-based index pairs of one longest common subsequence of a and b.

    Suffix DP with a deterministic greedy walk: on ties, the buggy side is
    consumed first, which groups a replacement's deletion and insertion into
    one region.
    """
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]
    matches: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            matches.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return matches


def diff_fault_lines(buggy: str, fixed: str) -> frozenset[int]:
    """Label fault lines of ``buggy`` by whole-line LCS diff against ``fixed``.

    Changed or deleted buggy lines are fault lines. A pure insertion in the
    fixed text marks the buggy line immediately preceding the insertion point
    (line 1 when inserted at the top).
    """
    a = split_lines(buggy)
    b = split_lines(fixed)
    if not a:
        raise EmptySource("buggy source has zero lines")
    if a == b:
        raise NoDifference("buggy and fixed are line-identical")

    faults: set[int] = set()
    prev_i = prev_j = 0
    for i, j in _lcs_matches(a, b) + [(len(a), len(b))]:
        gap_a = range(prev_i, i)   # buggy lines not matched in this region
        gap_b = range(prev_j, j)   # fixed lines not matched in this region
        if len(gap_a) > 0:
            faults.update(k + 1 for k in gap_a)
        elif len(gap_b) > 0:
            faults.add(max(1, prev_i))  # pure insertion anchors to preceding line
        prev_i, prev_j = i + 1, j + 1
    return frozenset(faults)


# --- fault injection ---------------------------------------------------------


_COMMENT_PREFIXES = ("//", "#", "/*", "*", "*/", "--")


def _is_mutable_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    return not stripped.startswith(_COMMENT_PREFIXES)


@dataclass(frozen=True)
class MutatorSpec:
    """A single-line rewrite rule.

    ``sites(line)`` returns the candidate rewrites of one line, each a
    (start, end, replacement) span; applying any of them changes the line
    text while preserving the line count.
    """

    kind: str
    sites: Callable[[str], list[tuple[int, int, str]]] = field(compare=False)

    def applies(self, line: str) -> bool:
        return _is_mutable_line(line) and bool(self.sites(line))

    def apply(self, line: str, rng: random.Random) -> str:
        options = self.sites(line)
        if not options:
            raise NoApplicableSite(f"{self.kind}: no site in line {line!r}")
        start, end, repl = options[rng.randrange(len(options))]
        return line[:start] + repl + line[end:]


_ARITH_SWAP = {"+": "-", "-": "+", "*": "/", "/": "*"}
_ARITH_RE = re.compile(r"(?<=[\w\)\]\s])([+\-*/])(?=[\s\w\(])")
_REL_SWAP = {"<=": ">=", ">=": "<=", "==": "!=", "!=": "==", "<": ">", ">": "<"}
_REL_RE = re.compile(r"(?<![<>=!&|\-])(<=|>=|==|!=|<|>)(?![<>=])")
_INT_RE = re.compile(r"\b\d+\b")
_BOOL_SWAP = {"true": "false", "false": "true", "True": "False", "False": "True"}
_BOOL_RE = re.compile(r"\b(true|false|True|False)\b")


def _swap_sites(pattern: re.Pattern, table: dict[str, str]) -> Callable[[str], list[tuple[int, int, str]]]:
    def sites(line: str) -> list[tuple[int, int, str]]:
        return [(m.start(1), m.end(1), table[m.group(1)]) for m in pattern.finditer(line)]

    return sites


def _perturb_sites(line: str) -> list[tuple[int, int, str]]:
    return [(m.start(), m.end(), str(int(m.group()) + 1)) for m in _INT_RE.finditer(line)]


ARITH_OP_SWAP = MutatorSpec("arith-op-swap", _swap_sites(_ARITH_RE, _ARITH_SWAP))
RELATIONAL_OP_SWAP = MutatorSpec("relational-op-swap", _swap_sites(_REL_RE, _REL_SWAP))
CONSTANT_PERTURB = MutatorSpec("constant-perturb", _perturb_sites)
BOOLEAN_NEGATE = MutatorSpec("boolean-negate", _swap_sites(_BOOL_RE, _BOOL_SWAP))

MUTATORS: dict[str, MutatorSpec] = {
    m.kind: m for m in (ARITH_OP_SWAP, RELATIONAL_OP_SWAP, CONSTANT_PERTURB, BOOLEAN_NEGATE)
}


def inject_fault(
    clean: str,
    mutators: Sequence[MutatorSpec],
    seed: int,
    pair_id: str | None = None,
    language_tag: str = "",
) -> FunctionPair:
    """Mutate one line of ``clean`` into a labeled pair, deterministic under seed."""
    clean = normalize_source(clean)
    lines = split_lines(clean)
    if not lines:
        raise EmptySource("clean source has zero lines")
    sites = [
        (idx, mut)
        for idx, line in enumerate(lines)
        for mut in mutators
        if mut.applies(line)
    ]
    if not sites:
        raise NoApplicableSite("no line matches any mutator")
    rng = random.Random(seed)
    idx, mutator = sites[rng.randrange(len(sites))]
    mutated = mutator.apply(lines[idx], rng)
    assert mutated != lines[idx]
    buggy_lines = list(lines)
    buggy_lines[idx] = mutated
    return FunctionPair(
        id=pair_id if pair_id is not None else f"inj-{seed}",
        buggy=join_lines(buggy_lines),
        fixed=clean,
        fault_lines=frozenset({idx + 1}),
        language_tag=language_tag,
    )


# --- record-file ingestion -----------------------------------------------------


@dataclass
class IngestResult:
    pairs: list[FunctionPair]
    skipped: list[tuple[int, str, str]]  # (record line number, record id, reason)

    @property
    def skip_count(self) -> int:
        return len(self.skipped)


def _pair_from_record(line_no: int, rec: dict) -> FunctionPair:
    for key, types in (("id", str), ("buggy", str)):
        if key not in rec:
            raise MalformedRecord(f"missing field {key!r}", line_no)
        if not isinstance(rec[key], types):
            raise MalformedRecord(f"field {key!r} has wrong type", line_no)
    has_fixed = "fixed" in rec and rec["fixed"] is not None
    has_faults = "fault_lines" in rec and rec["fault_lines"] is not None
    if has_fixed == has_faults:
        raise MalformedRecord("exactly one of fixed / fault_lines must be present", line_no)

    buggy = normalize_source(rec["buggy"])
    language = rec.get("language", "")
    if not isinstance(language, str):
        raise MalformedRecord("field 'language' has wrong type", line_no)

    if has_fixed:
        if not isinstance(rec["fixed"], str):
            raise MalformedRecord("field 'fixed' has wrong type", line_no)
        fixed = normalize_source(rec["fixed"])
        fault_lines = diff_fault_lines(buggy, fixed)
        return FunctionPair(rec["id"], buggy, fault_lines, fixed=fixed, language_tag=language)

    raw = rec["fault_lines"]
    if not isinstance(raw, list) or not all(isinstance(k, int) for k in raw):
        raise MalformedRecord("field 'fault_lines' must be an array of integers", line_no)
    return FunctionPair(rec["id"], buggy, frozenset(raw), fixed=None, language_tag=language)


def ingest_pairs(path: str | Path) -> IngestResult:
    """Load a record file; labeling failures are skipped and reported, not fatal."""
    pairs: list[FunctionPair] = []
    skipped: list[tuple[int, str, str]] = []
    for line_no, rec in read_records(path):
        try:
            pairs.append(_pair_from_record(line_no, rec))
        except MalformedRecord:
            raise
        except (NoDifference, EmptySource, ValueError) as exc:
            skipped.append((line_no, str(rec.get("id", "?")), str(exc)))
    return IngestResult(pairs, skipped)


def serialize_pairs(pairs: Iterable[FunctionPair], path: str | Path) -> int:
    """Write pairs back in the record-file format (inverse of ingest_pairs)."""

    def to_record(p: FunctionPair) -> dict:
        rec: dict = {"id": p.id, "buggy": p.buggy}
        if p.fixed is not None:
            rec["fixed"] = p.fixed
        else:
            rec["fault_lines"] = sorted(p.fault_lines)
        if p.language_tag:
            rec["language"] = p.language_tag
        return rec

    return write_records(path, (to_record(p) for p in pairs))


# --- synthetic clean functions -------------------------------------------------
#
# Desk-scale corpora are synthesized by mutating small generated functions.
# Every generated line is textually unique within its function (and stays
# unique after whitespace stripping), so diff labeling and sequence-mode
# matching are unambiguous.

_BINOPS = ("+", "-", "*")
_RELOPS = ("<", ">", "<=", ">=", "==", "!=")


def synthesize_clean_function(rng: random.Random, name: str, body_lines: int = 4) -> str:
    """One small python-like function with ``body_lines`` unique statements."""
    lines = [f"def {name}(a, b):"]
    prev = "a"
    for i in range(body_lines - 1):
        op = _BINOPS[rng.randrange(len(_BINOPS))]
        const = rng.randrange(2, 9 + i)
        if i >= 1 and rng.random() < 0.3:
            rel = _RELOPS[rng.randrange(len(_RELOPS))]
            lines.append(f"    v{i} = v{i - 1} {op} {const} if a {rel} b else {const + i}")
        else:
            lines.append(f"    v{i} = {prev} {op} {const}")
        prev = f"v{i}"
    lines.append(f"    return {prev} - b")
    return "\n".join(lines)


def synthesize_clean_corpus(
    count: int, seed: int, min_body: int = 3, max_body: int = 5
) -> list[tuple[str, str]]:
    """(id, source) tuples for ``count`` generated functions."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        body = rng.randint(min_body, max_body)
        out.append((f"fn{i:04d}", synthesize_clean_function(rng, f"f{i}", body)))
    return out
