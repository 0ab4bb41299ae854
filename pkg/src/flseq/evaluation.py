"""Top-N validation, dataset splitting, multi-run aggregation, report emission.

Matching modes mirror the three ways a generated patch can be compared with
the ground truth: by its leading line number, by whitespace-stripped line
text, or by a bare line number with no text at all. A multi-line fault
counts as hit as soon as any of its lines is predicted.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._records import write_json
from .baseline import SuspiciousnessRanking
from .corpus import FunctionPair
from .errors import MixedTotals, TooFew
from .sgcodec import PatchCandidate

DEFAULT_NS = (1, 3, 5)


class MatchMode(str, enum.Enum):
    LINE_NUMBER = "line_number"
    SEQUENCE = "sequence"
    NUMBER_ONLY = "number_only"


@dataclass(frozen=True)
class EvalReport:
    per_example: tuple[tuple[str, int | None], ...]  # (id, 1-based hit rank or None)
    top_n_counts: dict[int, int]
    total: int
    mode: MatchMode
    run_tag: str = ""

    def __post_init__(self):
        ns = sorted(self.top_n_counts)
        counts = [self.top_n_counts[n] for n in ns]
        if counts != sorted(counts) or any(c > self.total for c in counts):
            raise ValueError("top-N counts must be nondecreasing in N and bounded by total")


def hit_rank(
    candidates: Sequence[PatchCandidate],
    pair: FunctionPair,
    mode: MatchMode,
) -> int | None:
    """1-based rank of the first candidate matching the fault, or None.

    line_number: the candidate's parsed line number is a fault line.
    sequence: the candidate's text (line_text when parsed, raw_text
        otherwise) equals a faulty line after stripping leading/trailing
        whitespace on both sides.
    number_only: the candidate's raw text is a bare decimal naming a fault
        line.
    """
    mode = MatchMode(mode)
    if mode is MatchMode.SEQUENCE:
        lines = pair.buggy_lines
        fault_texts = {lines[k - 1].strip() for k in pair.fault_lines}
    for rank, cand in enumerate(candidates, start=1):
        if mode is MatchMode.LINE_NUMBER:
            if cand.line_number is not None and cand.line_number in pair.fault_lines:
                return rank
        elif mode is MatchMode.SEQUENCE:
            text = cand.line_text if cand.line_text is not None else cand.raw_text
            if text.strip() in fault_texts:
                return rank
        else:  # NUMBER_ONLY
            bare = cand.raw_text.strip()
            if bare.isascii() and bare.isdigit() and int(bare) in pair.fault_lines:
                return rank
    return None


def top_n_report(
    ranks: Iterable[tuple[str, int | None]],
    mode: MatchMode,
    ns: Sequence[int] = DEFAULT_NS,
    run_tag: str = "",
) -> EvalReport:
    per_example = tuple(ranks)
    counts = {
        n: sum(1 for _, r in per_example if r is not None and r <= n) for n in ns
    }
    return EvalReport(per_example, counts, len(per_example), MatchMode(mode), run_tag)


def format_count(value: float) -> str:
    """Table-style rendering: one decimal place."""
    return f"{value:.1f}"


def format_percent(count: float, total: int) -> str:
    return f"{100.0 * count / total:.1f}%"


# --- multi-run aggregation -------------------------------------------------------


@dataclass(frozen=True)
class AggregateReport:
    top_n_means: dict[int, float]  # rounded to one decimal place
    total: int
    mode: MatchMode
    selected_run_tags: tuple[str, ...]
    n_runs: int


def aggregate_runs(reports: Sequence[EvalReport], top_k_runs: int = 3) -> AggregateReport:
    """Mean Top-N counts over the best ``top_k_runs`` of the given runs.

    Runs are picked by highest Top-1 count, ties by higher Top-3, then
    higher Top-5, then ascending run tag. Fractional means are rounded to
    one decimal place, matching the report rendering.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    first = reports[0]
    for rep in reports[1:]:
        if rep.total != first.total or rep.mode != first.mode:
            raise MixedTotals(
                f"report {rep.run_tag!r} has total/mode {rep.total}/{rep.mode.value}, "
                f"expected {first.total}/{first.mode.value}"
            )
    ns = sorted(first.top_n_counts)
    if any(sorted(rep.top_n_counts) != ns for rep in reports):
        raise MixedTotals("reports carry different Top-N levels")

    def pick_key(rep: EvalReport):
        return tuple(-rep.top_n_counts[n] for n in ns) + (rep.run_tag,)

    chosen = sorted(reports, key=pick_key)[:top_k_runs]
    means = {
        n: round(sum(rep.top_n_counts[n] for rep in chosen) / len(chosen), 1) for n in ns
    }
    return AggregateReport(
        top_n_means=means,
        total=first.total,
        mode=first.mode,
        selected_run_tags=tuple(rep.run_tag for rep in chosen),
        n_runs=len(reports),
    )


# --- dataset splitting -------------------------------------------------------------


def split_ratio_8_1_1(ids: Sequence[str], seed: int) -> dict[str, list[str]]:
    """Seeded shuffle then contiguous 8:1:1 slices; remainders go to train."""
    if len(ids) < 10:
        raise TooFew(f"ratio split needs at least 10 ids, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_valid = n // 10
    n_test = n // 10
    n_train = n - n_valid - n_test
    return {
        "train": shuffled[:n_train],
        "valid": shuffled[n_train : n_train + n_valid],
        "test": shuffled[n_train + n_valid :],
    }


def split_kfold(ids: Sequence[str], k: int, seed: int) -> dict[str, list[str]]:
    """Seeded shuffle then k contiguous folds; first (n mod k) folds get one extra."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(ids) < k:
        raise TooFew(f"k-fold split needs at least {k} ids, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    base, extra = divmod(len(ids), k)
    folds: dict[str, list[str]] = {}
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        folds[f"fold{fold}"] = shuffled[start : start + size]
        start += size
    return folds


# --- adapters and report files -------------------------------------------------------


def candidates_from_ranking(ranking: SuspiciousnessRanking) -> list[PatchCandidate]:
    """View a suspiciousness ranking as patch candidates.

    Line ids become line numbers; scores become order-preserving pseudo
    log-probabilities (0, -1, -2, ...), so baseline rankings flow through the
    same hit_rank / top_n_report path as generated patches.
    """
    return [
        PatchCandidate(
            raw_text=f"{line}\t",
            log_prob=-float(i),
            line_number=line,
            line_text="",
        )
        for i, (line, _) in enumerate(ranking.entries)
    ]


def write_report(report: EvalReport, path: str | Path) -> None:
    """Report JSON plus a sibling .csv (header id,rank) for spreadsheet use."""
    path = Path(path)
    obj = {
        "mode": report.mode.value,
        "total": report.total,
        "run_tag": report.run_tag,
        "top_n": {str(n): report.top_n_counts[n] for n in sorted(report.top_n_counts)},
        "top_n_percent": {
            str(n): format_percent(report.top_n_counts[n], report.total)
            for n in sorted(report.top_n_counts)
        },
        "per_example": [{"id": ex_id, "rank": rank} for ex_id, rank in report.per_example],
    }
    write_json(path, obj)
    with open(path.with_suffix(".csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "rank"])
        for ex_id, rank in report.per_example:
            writer.writerow([ex_id, "" if rank is None else rank])


def read_report(path: str | Path) -> EvalReport:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    per_example = tuple((ex["id"], ex["rank"]) for ex in obj["per_example"])
    counts = {int(n): int(c) for n, c in obj["top_n"].items()}
    for n, count in counts.items():
        derived = sum(1 for _, r in per_example if r is not None and r <= n)
        if derived != count:
            raise ValueError(
                f"{path}: top_n[{n}] = {count} inconsistent with per-example ranks ({derived})"
            )
    return EvalReport(
        per_example=per_example,
        top_n_counts=counts,
        total=int(obj["total"]),
        mode=MatchMode(obj["mode"]),
        run_tag=obj.get("run_tag", ""),
    )


def write_aggregate(agg: AggregateReport, path: str | Path) -> None:
    write_json(
        path,
        {
            "mode": agg.mode.value,
            "total": agg.total,
            "n_runs": agg.n_runs,
            "selected_run_tags": list(agg.selected_run_tags),
            "top_n": {str(n): agg.top_n_means[n] for n in sorted(agg.top_n_means)},
            "top_n_percent": {
                str(n): format_percent(agg.top_n_means[n], agg.total)
                for n in sorted(agg.top_n_means)
            },
            "top_n_rendered": {
                str(n): format_count(agg.top_n_means[n]) for n in sorted(agg.top_n_means)
            },
        },
    )
