"""Spectrum- and mutation-based suspiciousness scoring.

Both families produce a :class:`SuspiciousnessRanking`: lines ordered by
score descending, ties broken by ascending line id. Scores depend only on
per-line counts, never on test order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ._records import read_json, write_json
from .errors import EmptyResult, NoFailingTests, NoMutants

SBFL_FORMULAS = ("ochiai", "jaccard", "tarantula", "dstar2")
MBFL_FORMULAS = ("muse", "metallaxis")


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # domain class, not a pytest collectable

    test_id: str
    passed: bool


@dataclass(frozen=True)
class CoverageMatrix:
    """Binary test-by-line execution matrix with per-test pass/fail labels."""

    line_ids: tuple[int, ...]
    tests: tuple[TestOutcome, ...]
    cover: np.ndarray  # shape [len(tests), len(line_ids)], entries 0/1

    def __post_init__(self):
        cover = np.asarray(self.cover)
        if cover.shape != (len(self.tests), len(self.line_ids)):
            raise ValueError(
                f"cover shape {cover.shape} != (tests {len(self.tests)}, lines {len(self.line_ids)})"
            )
        if cover.size and not np.isin(cover, (0, 1)).all():
            raise ValueError("cover entries must be 0 or 1")
        object.__setattr__(self, "cover", cover.astype(np.int64))

    @property
    def failing(self) -> np.ndarray:
        return np.array([not t.passed for t in self.tests], dtype=bool)


@dataclass(frozen=True)
class Mutant:
    mutant_id: str
    line: int
    f2p: int  # failing tests that the mutant flips to passing
    p2f: int  # passing tests that the mutant flips to failing


@dataclass(frozen=True)
class KillMatrix:
    mutants: tuple[Mutant, ...]


@dataclass(frozen=True)
class SuspiciousnessRanking:
    entries: tuple[tuple[int, float], ...]  # (line_id, score), ranked
    formula_tag: str

    def lines(self) -> list[int]:
        return [line for line, _ in self.entries]


def _rank(scores: dict[int, float], formula_tag: str) -> SuspiciousnessRanking:
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return SuspiciousnessRanking(tuple(ordered), formula_tag)


# --- SBFL ---------------------------------------------------------------------


def _ochiai(e_f: float, n_f: float, e_p: float) -> float:
    if e_f == 0:
        return 0.0
    return e_f / math.sqrt((e_f + n_f) * (e_f + e_p))


def sbfl_score(matrix: CoverageMatrix, formula: str) -> SuspiciousnessRanking:
    """Suspiciousness per line from coverage counts.

    With F failing and P passing tests and per-line counts e_f, e_p
    (failing/passing tests covering the line), n_f = F - e_f, n_p = P - e_p:

        ochiai    = e_f / sqrt((e_f + n_f) * (e_f + e_p))
        jaccard   = e_f / (e_f + n_f + e_p)
        tarantula = (e_f/F) / ((e_f/F) + (e_p/P)), with e_p/P = 0 when P = 0
        dstar2    = e_f^2 / (e_p + n_f)

    A zero denominator scores 0 when e_f = 0; dstar2 with e_f > 0 over a zero
    denominator scores +inf, ranked above every finite score.
    """
    if formula not in SBFL_FORMULAS:
        raise ValueError(f"unknown SBFL formula {formula!r}")
    failing = matrix.failing
    F = int(failing.sum())
    P = len(matrix.tests) - F
    if F == 0:
        raise NoFailingTests("SBFL requires at least one failing test")
    e_f_all = matrix.cover[failing].sum(axis=0)
    e_p_all = matrix.cover[~failing].sum(axis=0)

    scores: dict[int, float] = {}
    for line, e_f, e_p in zip(matrix.line_ids, e_f_all, e_p_all):
        e_f = float(e_f)
        e_p = float(e_p)
        n_f = F - e_f
        if formula == "ochiai":
            score = _ochiai(e_f, n_f, e_p)
        elif formula == "jaccard":
            score = 0.0 if e_f == 0 else e_f / (e_f + n_f + e_p)
        elif formula == "tarantula":
            if e_f == 0:
                score = 0.0
            else:
                ratio_f = e_f / F
                ratio_p = 0.0 if P == 0 else e_p / P
                score = ratio_f / (ratio_f + ratio_p)
        else:  # dstar2
            denom = e_p + n_f
            if e_f == 0:
                score = 0.0
            elif denom == 0:
                score = math.inf
            else:
                score = e_f * e_f / denom
        scores[int(line)] = score
    return _rank(scores, formula)


# --- MBFL ---------------------------------------------------------------------


def mbfl_score(
    kill: KillMatrix,
    failing_total: int,
    passing_total: int,
    formula: str,
    line_ids: Iterable[int] | None = None,
) -> SuspiciousnessRanking:
    """Suspiciousness per line from mutant outcome flips.

    muse: line score is the mean over its mutants of f2p(m)/F - alpha * p2f(m)/P,
    where alpha = (sum f2p / max(F,1)) / (sum p2f / max(P,1)) and alpha = 0
    when no mutant flips a passing test; P = 0 terms are treated as 0.

    metallaxis: per-mutant Ochiai with e_f -> f2p, n_f -> F - f2p,
    e_p -> p2f; the line score is the max over its mutants.

    Lines listed in ``line_ids`` but carrying no mutants score 0.
    """
    if formula not in MBFL_FORMULAS:
        raise ValueError(f"unknown MBFL formula {formula!r}")
    if failing_total < 1:
        raise NoFailingTests("MBFL requires at least one failing test")
    if not kill.mutants:
        raise NoMutants("kill matrix has no mutants")
    for m in kill.mutants:
        if not (0 <= m.f2p <= failing_total):
            raise ValueError(f"mutant {m.mutant_id}: f2p {m.f2p} outside [0, {failing_total}]")
        if not (0 <= m.p2f <= passing_total):
            raise ValueError(f"mutant {m.mutant_id}: p2f {m.p2f} outside [0, {passing_total}]")

    by_line: dict[int, list[Mutant]] = {}
    for m in kill.mutants:
        by_line.setdefault(m.line, []).append(m)
    universe = set(by_line)
    if line_ids is not None:
        universe |= set(line_ids)

    F = failing_total
    P = passing_total
    total_f2p = sum(m.f2p for m in kill.mutants)
    total_p2f = sum(m.p2f for m in kill.mutants)
    alpha = 0.0 if total_p2f == 0 else (total_f2p / max(F, 1)) / (total_p2f / max(P, 1))

    scores: dict[int, float] = {}
    for line in universe:
        mutants = by_line.get(line, [])
        if not mutants:
            scores[line] = 0.0
        elif formula == "muse":
            acc = 0.0
            for m in mutants:
                p2f_term = 0.0 if P == 0 else m.p2f / P
                acc += m.f2p / F - alpha * p2f_term
            scores[line] = acc / len(mutants)
        else:  # metallaxis
            scores[line] = max(_ochiai(m.f2p, F - m.f2p, m.p2f) for m in mutants)
    return _rank(scores, formula)


# --- function-level restriction --------------------------------------------------


def restrict_to_function(
    ranking: SuspiciousnessRanking, function_lines: Iterable[int]
) -> SuspiciousnessRanking:
    """Keep only the function's lines, preserving relative order and scores."""
    keep = set(function_lines)
    if not keep:
        raise ValueError("function_lines is empty")
    entries = tuple((line, score) for line, score in ranking.entries if line in keep)
    if not entries:
        raise EmptyResult("no ranked line belongs to the function")
    return SuspiciousnessRanking(entries, ranking.formula_tag)


# --- file formats -----------------------------------------------------------------


def read_coverage(path: str | Path) -> CoverageMatrix:
    """Coverage file: {line_ids, tests: [{id, passed}], cover: [[0/1, ...]]}."""
    obj = read_json(path)
    return CoverageMatrix(
        line_ids=tuple(int(x) for x in obj["line_ids"]),
        tests=tuple(TestOutcome(str(t["id"]), bool(t["passed"])) for t in obj["tests"]),
        cover=np.asarray(obj["cover"], dtype=np.int64),
    )


def write_coverage(matrix: CoverageMatrix, path: str | Path) -> None:
    write_json(
        path,
        {
            "line_ids": list(matrix.line_ids),
            "tests": [{"id": t.test_id, "passed": t.passed} for t in matrix.tests],
            "cover": matrix.cover.tolist(),
        },
    )


def read_kill(path: str | Path) -> tuple[KillMatrix, int, int]:
    """Kill file: {mutants: [{id, line, f2p, p2f}], F, P}; returns (matrix, F, P)."""
    obj = read_json(path)
    mutants = tuple(
        Mutant(str(m["id"]), int(m["line"]), int(m["f2p"]), int(m["p2f"]))
        for m in obj["mutants"]
    )
    return KillMatrix(mutants), int(obj["F"]), int(obj["P"])


def write_kill(kill: KillMatrix, failing_total: int, passing_total: int, path: str | Path) -> None:
    write_json(
        path,
        {
            "mutants": [
                {"id": m.mutant_id, "line": m.line, "f2p": m.f2p, "p2f": m.p2f}
                for m in kill.mutants
            ],
            "F": failing_total,
            "P": passing_total,
        },
    )


def write_ranking(ranking: SuspiciousnessRanking, path: str | Path) -> None:
    write_json(
        path,
        {
            "formula": ranking.formula_tag,
            "ranking": [[line, score] for line, score in ranking.entries],
        },
    )


def read_ranking(path: str | Path) -> SuspiciousnessRanking:
    obj = read_json(path)
    return SuspiciousnessRanking(
        tuple((int(line), float(score)) for line, score in obj["ranking"]),
        str(obj["formula"]),
    )
