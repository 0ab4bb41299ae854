#!/usr/bin/env python3
"""Score a toy coverage matrix and kill matrix with the four baselines.

A seeded buggy line (4) is covered by both failing tests and few passing
ones, so every spectrum formula ranks it first; the mutation-based scores
agree because only mutants on that line flip failing tests to passing.
The ranking then flows through the same Top-N path as generated patches.
"""

import numpy as np

from flseq import (
    CoverageMatrix,
    FunctionPair,
    KillMatrix,
    MatchMode,
    Mutant,
    TestOutcome,
    candidates_from_ranking,
    hit_rank,
    mbfl_score,
    restrict_to_function,
    sbfl_score,
    top_n_report,
)


def main() -> None:
    tests = (
        TestOutcome("t_neg_input", passed=False),
        TestOutcome("t_zero_input", passed=False),
        TestOutcome("t_small", passed=True),
        TestOutcome("t_large", passed=True),
    )
    #                 line:  1  2  3  4  5
    cover = np.array([
        [1, 1, 0, 1, 1],   # failing
        [1, 0, 1, 1, 0],   # failing
        [1, 1, 1, 0, 1],   # passing
        [1, 0, 1, 0, 1],   # passing
    ])
    matrix = CoverageMatrix((1, 2, 3, 4, 5), tests, cover)

    print("== SBFL over a 4-test x 5-line matrix (fault on line 4) ==")
    for formula in ("ochiai", "jaccard", "tarantula", "dstar2"):
        ranking = sbfl_score(matrix, formula)
        pretty = ", ".join(f"{line}:{score:.3f}" for line, score in ranking.entries)
        print(f"  {formula:10s} {pretty}")

    kill = KillMatrix((
        Mutant("m_line4_swap", line=4, f2p=2, p2f=0),
        Mutant("m_line2_const", line=2, f2p=1, p2f=1),
        Mutant("m_line3_rel", line=3, f2p=0, p2f=2),
    ))
    print("\n== MBFL over 3 mutants (F=2, P=2) ==")
    for formula in ("muse", "metallaxis"):
        ranking = mbfl_score(kill, failing_total=2, passing_total=2, formula=formula)
        pretty = ", ".join(f"{line}:{score:.3f}" for line, score in ranking.entries)
        print(f"  {formula:10s} {pretty}")

    print("\n== restrict a project-level ranking to one function ==")
    project = sbfl_score(matrix, "ochiai")
    function = restrict_to_function(project, {2, 4, 5})
    print(f"  before: {[line for line, _ in project.entries]}")
    print(f"  after:  {[line for line, _ in function.entries]} (order and scores preserved)")

    print("\n== the same Top-N path as generated patches ==")
    pair = FunctionPair("toy", "a\nb\nc\nd\ne", frozenset({4}), fixed=None)
    candidates = candidates_from_ranking(function)
    rank = hit_rank(candidates, pair, MatchMode.LINE_NUMBER)
    report = top_n_report([("toy", rank)], MatchMode.LINE_NUMBER)
    print(f"  fault line 4 found at rank {rank}; Top-N counts {report.top_n_counts}")


if __name__ == "__main__":
    main()
