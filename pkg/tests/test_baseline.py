"""SBFL/MBFL formula tests against hand arithmetic and a brute-force oracle."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from flseq.baseline import (
    CoverageMatrix,
    KillMatrix,
    Mutant,
    TestOutcome,
    mbfl_score,
    read_coverage,
    read_kill,
    restrict_to_function,
    sbfl_score,
    write_coverage,
    write_kill,
)
from flseq.errors import EmptyResult, NoFailingTests, NoMutants

# --- independent oracle: plain-python loops, no shared code with baseline.py ---


def oracle_counts(matrix: CoverageMatrix):
    failing = [not t.passed for t in matrix.tests]
    F = sum(failing)
    P = len(matrix.tests) - F
    per_line = {}
    for col, line in enumerate(matrix.line_ids):
        e_f = sum(1 for row in range(len(matrix.tests)) if failing[row] and matrix.cover[row][col])
        e_p = sum(1 for row in range(len(matrix.tests)) if not failing[row] and matrix.cover[row][col])
        per_line[line] = (e_f, e_p, F - e_f, P - e_p)
    return F, P, per_line


def oracle_sbfl(matrix: CoverageMatrix, formula: str) -> dict[int, float]:
    F, P, per_line = oracle_counts(matrix)
    out = {}
    for line, (e_f, e_p, n_f, n_p) in per_line.items():
        if formula == "ochiai":
            denom = math.sqrt((e_f + n_f) * (e_f + e_p))
            out[line] = 0.0 if e_f == 0 else e_f / denom
        elif formula == "jaccard":
            out[line] = 0.0 if e_f == 0 else e_f / (e_f + n_f + e_p)
        elif formula == "tarantula":
            if e_f == 0:
                out[line] = 0.0
            else:
                fr = e_f / F
                pr = e_p / P if P > 0 else 0.0
                out[line] = fr / (fr + pr)
        elif formula == "dstar2":
            if e_f == 0:
                out[line] = 0.0
            elif e_p + n_f == 0:
                out[line] = math.inf
            else:
                out[line] = e_f**2 / (e_p + n_f)
    return out


def oracle_mbfl(mutants, F, P, formula) -> dict[int, float]:
    lines = {m.line for m in mutants}
    sum_f2p = sum(m.f2p for m in mutants)
    sum_p2f = sum(m.p2f for m in mutants)
    alpha = 0.0 if sum_p2f == 0 else (sum_f2p / max(F, 1)) / (sum_p2f / max(P, 1))
    out = {}
    for line in lines:
        mine = [m for m in mutants if m.line == line]
        if formula == "muse":
            total = 0.0
            for m in mine:
                total += m.f2p / F - alpha * (m.p2f / P if P > 0 else 0.0)
            out[line] = total / len(mine)
        else:
            best = 0.0
            for m in mine:
                denom = math.sqrt(F * (m.f2p + m.p2f))
                best = max(best, 0.0 if m.f2p == 0 else m.f2p / denom)
            out[line] = best
    return out


def random_matrix(rng: random.Random, n_tests=None, n_lines=None) -> CoverageMatrix:
    n_tests = n_tests if n_tests is not None else rng.randint(2, 10)
    n_lines = n_lines if n_lines is not None else rng.randint(1, 20)
    tests = tuple(
        TestOutcome(f"t{i}", passed=rng.random() < 0.6) for i in range(n_tests - 1)
    ) + (TestOutcome("t-fail", passed=False),)  # ensure at least one failing test
    cover = np.array(
        [[1 if rng.random() < 0.5 else 0 for _ in range(n_lines)] for _ in range(n_tests)]
    )
    return CoverageMatrix(tuple(range(1, n_lines + 1)), tests, cover)


class TestSBFL:
    def _single_line(self, e_f: int, n_f: int, e_p: int, n_p: int) -> CoverageMatrix:
        tests = []
        rows = []
        for i in range(e_f):
            tests.append(TestOutcome(f"f{i}", False))
            rows.append([1])
        for i in range(n_f):
            tests.append(TestOutcome(f"nf{i}", False))
            rows.append([0])
        for i in range(e_p):
            tests.append(TestOutcome(f"p{i}", True))
            rows.append([1])
        for i in range(n_p):
            tests.append(TestOutcome(f"np{i}", True))
            rows.append([0])
        return CoverageMatrix((7,), tuple(tests), np.array(rows))

    def test_ochiai_hand_value(self):
        # e_f=4, n_f=0, e_p=2: 4 / sqrt(4 * 6) = 0.816496...
        matrix = self._single_line(4, 0, 2, 1)
        ranking = sbfl_score(matrix, "ochiai")
        assert ranking.entries[0][1] == pytest.approx(4 / math.sqrt(24), abs=1e-9)

    def test_dstar2_hand_value(self):
        matrix = self._single_line(3, 1, 0, 2)
        assert sbfl_score(matrix, "dstar2").entries[0][1] == pytest.approx(9.0)

    def test_dstar2_sentinel_infinity(self):
        matrix = self._single_line(2, 0, 0, 3)
        assert sbfl_score(matrix, "dstar2").entries[0][1] == math.inf

    def test_uncovered_line_scores_zero_everywhere(self):
        tests = (TestOutcome("f", False), TestOutcome("p", True))
        cover = np.array([[0, 1], [0, 1]])
        matrix = CoverageMatrix((1, 2), tests, cover)
        for formula in ("ochiai", "jaccard", "tarantula", "dstar2"):
            scores = dict(sbfl_score(matrix, formula).entries)
            assert scores[1] == 0.0

    def test_tie_orders_by_ascending_line_id(self):
        tests = (TestOutcome("f", False),)
        cover = np.array([[1, 1]])
        matrix = CoverageMatrix((9, 4), tests, cover)
        assert sbfl_score(matrix, "ochiai").lines() == [4, 9]

    def test_no_failing_tests_raises(self):
        matrix = CoverageMatrix((1,), (TestOutcome("p", True),), np.array([[1]]))
        with pytest.raises(NoFailingTests):
            sbfl_score(matrix, "ochiai")

    def test_matches_bruteforce_oracle(self):
        rng = random.Random(7)
        for _ in range(120):
            matrix = random_matrix(rng)
            for formula in ("ochiai", "jaccard", "tarantula", "dstar2"):
                got = dict(sbfl_score(matrix, formula).entries)
                want = oracle_sbfl(matrix, formula)
                assert got.keys() == want.keys()
                for line in want:
                    if math.isinf(want[line]):
                        assert math.isinf(got[line])
                    else:
                        assert got[line] == pytest.approx(want[line], abs=1e-9)

    def test_scores_invariant_under_test_permutation(self):
        rng = random.Random(11)
        matrix = random_matrix(rng, n_tests=8, n_lines=10)
        perm = list(range(8))
        rng.shuffle(perm)
        shuffled = CoverageMatrix(
            matrix.line_ids,
            tuple(matrix.tests[i] for i in perm),
            matrix.cover[perm],
        )
        for formula in ("ochiai", "jaccard", "tarantula", "dstar2"):
            assert sbfl_score(matrix, formula) == sbfl_score(shuffled, formula)

    def test_perfect_signal_line_is_rank_one_under_all_formulas(self):
        # one line covered by all failing tests and no passing test
        tests = (
            TestOutcome("f1", False),
            TestOutcome("f2", False),
            TestOutcome("p1", True),
            TestOutcome("p2", True),
        )
        cover = np.array(
            [
                [1, 1, 0],
                [1, 1, 1],
                [0, 1, 1],
                [0, 0, 1],
            ]
        )
        matrix = CoverageMatrix((5, 6, 7), tests, cover)
        for formula in ("ochiai", "jaccard", "tarantula", "dstar2"):
            assert sbfl_score(matrix, formula).lines()[0] == 5

    def test_scores_bounded(self):
        rng = random.Random(3)
        for _ in range(40):
            matrix = random_matrix(rng)
            for formula in ("ochiai", "jaccard", "tarantula"):
                for _, score in sbfl_score(matrix, formula).entries:
                    assert 0.0 <= score <= 1.0
            for _, score in sbfl_score(matrix, "dstar2").entries:
                assert score >= 0.0


class TestMBFL:
    def test_metallaxis_hand_value(self):
        kill = KillMatrix((Mutant("m1", 3, f2p=2, p2f=0),))
        ranking = mbfl_score(kill, failing_total=2, passing_total=5, formula="metallaxis")
        assert ranking.entries == ((3, pytest.approx(1.0)),)

    def test_zero_flip_mutant_contributes_zero(self):
        kill = KillMatrix((Mutant("m1", 4, 0, 0),))
        for formula in ("muse", "metallaxis"):
            ranking = mbfl_score(kill, 3, 3, formula)
            assert ranking.entries[0][1] == 0.0

    def test_metallaxis_takes_max_over_mutants(self):
        m1 = Mutant("m1", 2, f2p=1, p2f=2)
        m2 = Mutant("m2", 2, f2p=3, p2f=0)
        kill = KillMatrix((m1, m2))
        F, P = 3, 4
        per_mutant = [
            m.f2p / math.sqrt(F * (m.f2p + m.p2f)) for m in (m1, m2)
        ]
        got = dict(mbfl_score(kill, F, P, "metallaxis").entries)[2]
        assert got == pytest.approx(max(per_mutant), abs=1e-12)

    def test_no_mutants_raises(self):
        with pytest.raises(NoMutants):
            mbfl_score(KillMatrix(()), 1, 1, "muse")

    def test_mutant_flip_bounds_validated(self):
        kill = KillMatrix((Mutant("m", 1, f2p=5, p2f=0),))
        with pytest.raises(ValueError):
            mbfl_score(kill, failing_total=2, passing_total=0, formula="muse")

    def test_lines_without_mutants_score_zero(self):
        kill = KillMatrix((Mutant("m", 2, 1, 0),))
        ranking = mbfl_score(kill, 1, 1, "muse", line_ids=[1, 2, 3])
        scores = dict(ranking.entries)
        assert scores[1] == 0.0 and scores[3] == 0.0 and scores[2] > 0.0

    def test_matches_bruteforce_oracle(self):
        rng = random.Random(13)
        for _ in range(60):
            F = rng.randint(1, 6)
            P = rng.randint(0, 8)
            mutants = tuple(
                Mutant(f"m{i}", rng.randint(1, 6), rng.randint(0, F), rng.randint(0, P))
                for i in range(rng.randint(1, 12))
            )
            for formula in ("muse", "metallaxis"):
                got = dict(mbfl_score(KillMatrix(mutants), F, P, formula).entries)
                want = oracle_mbfl(mutants, F, P, formula)
                assert got.keys() == want.keys()
                for line in want:
                    assert got[line] == pytest.approx(want[line], abs=1e-9)


class TestRestrictToFunction:
    def _ranking(self):
        tests = (TestOutcome("f", False), TestOutcome("p", True))
        cover = np.array([[1, 1, 1], [0, 1, 0]])
        return sbfl_score(CoverageMatrix((10, 3, 7), tests, cover), "ochiai")

    def test_filter_preserves_order_and_scores(self):
        ranking = self._ranking()
        restricted = restrict_to_function(ranking, {3, 7})
        assert [line for line, _ in restricted.entries] == [
            line for line, _ in ranking.entries if line in {3, 7}
        ]
        original = dict(ranking.entries)
        for line, score in restricted.entries:
            assert score == original[line]

    def test_disjoint_function_raises(self):
        with pytest.raises(EmptyResult):
            restrict_to_function(self._ranking(), {99})

    def test_identity_when_function_covers_all(self):
        ranking = self._ranking()
        assert restrict_to_function(ranking, {10, 3, 7}) == ranking

    def test_idempotent(self):
        ranking = self._ranking()
        once = restrict_to_function(ranking, {3, 7})
        assert restrict_to_function(once, {3, 7}) == once


class TestFileFormats:
    def test_coverage_roundtrip(self, tmp_path):
        matrix = random_matrix(random.Random(1))
        path = tmp_path / "cov.json"
        write_coverage(matrix, path)
        loaded = read_coverage(path)
        assert loaded.line_ids == matrix.line_ids
        assert loaded.tests == matrix.tests
        np.testing.assert_array_equal(loaded.cover, matrix.cover)

    def test_kill_roundtrip(self, tmp_path):
        kill = KillMatrix((Mutant("m1", 2, 1, 0), Mutant("m2", 5, 0, 3)))
        path = tmp_path / "kill.json"
        write_kill(kill, 4, 6, path)
        loaded, F, P = read_kill(path)
        assert loaded == kill and (F, P) == (4, 6)
