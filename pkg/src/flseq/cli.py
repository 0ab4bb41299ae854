"""Command-line pipeline: preprocess -> train -> generate -> evaluate -> report.

Every subcommand is a thin shell over one library operation, takes all of
its randomness from --seed, and writes a run manifest next to its outputs.
Exit code 2 flags usage errors (bad flags, unreadable or malformed inputs);
exit code 1 flags operational failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from ._records import read_records, write_json, write_records
from .baseline import (
    mbfl_score,
    read_coverage,
    read_kill,
    restrict_to_function,
    sbfl_score,
    write_ranking,
)
from .beam import BeamConfig, generate_patches
from .corpus import (
    MUTATORS,
    FunctionPair,
    ingest_pairs,
    inject_fault,
    normalize_source,
    serialize_pairs,
)
from .errors import FlseqError, MalformedRecord
from .evaluation import (
    MatchMode,
    aggregate_runs,
    candidates_from_ranking,
    hit_rank,
    read_report,
    split_kfold,
    split_ratio_8_1_1,
    top_n_report,
    write_aggregate,
    write_report,
)
from .model import MemorizingBackend, TinyLMConfig, load_model, remote_generate, tiny_lm_train
from .sgcodec import (
    VARIANTS,
    PatchCandidate,
    build_sg_examples,
    read_sg_dataset,
    write_sg_dataset,
)


class UsageError(Exception):
    """Bad invocation or malformed input; reported with exit code 2."""


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_path: str, command: str, config: dict, inputs: list[str],
                    outputs: list[str], seed: int | None, started_at: str) -> None:
    write_json(
        out_path + ".manifest.json",
        {
            "command": command,
            "version": __version__,
            "seed": seed,
            "config": config,
            "inputs": inputs,
            "outputs": outputs,
            "started_at": started_at,
            "finished_at": _utc_now(),
        },
    )


def _require_readable(path: str, flag: str) -> str:
    if not Path(path).is_file():
        raise UsageError(f"{flag}: cannot read {path!r}")
    return path


# --- preprocess ---------------------------------------------------------------


def _read_clean_functions(path: str) -> list[tuple[str, str, str]]:
    out = []
    for line_no, rec in read_records(path):
        if "id" not in rec or "source" not in rec:
            raise MalformedRecord("clean-function record needs 'id' and 'source'", line_no)
        out.append((str(rec["id"]), normalize_source(rec["source"]), str(rec.get("language", ""))))
    return out


def cmd_preprocess(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.pairs, "--pairs")
    skipped: list = []
    if args.inject:
        mutator_names = [m.strip() for m in args.mutators.split(",") if m.strip()]
        unknown = [m for m in mutator_names if m not in MUTATORS]
        if unknown:
            raise UsageError(f"--mutators: unknown mutator(s) {unknown}; known: {sorted(MUTATORS)}")
        mutators = [MUTATORS[m] for m in mutator_names]
        clean = _read_clean_functions(args.pairs)
        if not clean:
            raise UsageError("--pairs: no clean functions in file")
        count = args.count if args.count is not None else len(clean)
        pairs: list[FunctionPair] = []
        for i in range(count):
            fn_id, source, language = clean[i % len(clean)]
            pair_id = fn_id if i < len(clean) else f"{fn_id}#{i // len(clean)}"
            try:
                pairs.append(
                    inject_fault(source, mutators, seed=args.seed + i,
                                 pair_id=pair_id, language_tag=language)
                )
            except FlseqError as exc:
                skipped.append((pair_id, str(exc)))
        if not pairs:
            raise FlseqError("fault injection produced no pairs")
    else:
        result = ingest_pairs(args.pairs)
        pairs = result.pairs
        skipped = result.skipped
        if not pairs:
            raise FlseqError("ingestion produced no labeled pairs")

    examples = [ex for pair in pairs for ex in build_sg_examples(pair, variant=args.variant)]
    write_sg_dataset(examples, args.out)
    outputs = [args.out]
    if args.out_pairs:
        serialize_pairs(pairs, args.out_pairs)
        outputs.append(args.out_pairs)
    _write_manifest(
        args.out, "preprocess",
        {
            "inject": args.inject,
            "mutators": args.mutators if args.inject else None,
            "count": len(pairs),
            "variant": args.variant,
            "skipped": [list(s) for s in skipped],
        },
        [args.pairs], outputs, args.seed, started,
    )
    print(f"preprocess: {len(pairs)} pairs -> {len(examples)} examples "
          f"({len(skipped)} skipped) -> {args.out}")
    return 0


# --- train ----------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.data, "--data")
    _require_readable(args.config, "--config")
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            raw_config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--config: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw_config, dict) or "backend" not in raw_config:
        raise UsageError("--config: must be an object with a 'backend' field")
    backend_kind = raw_config["backend"]
    examples = read_sg_dataset(args.data)

    if backend_kind == "memorize":
        model = MemorizingBackend.from_examples(examples)
        model.save(args.out)
        resolved: dict = {"backend": "memorize", "examples": len(examples)}
        seed = None
        print(f"train: memorized {len(examples)} examples -> {args.out}")
    elif backend_kind == "tiny":
        fields = {k: v for k, v in raw_config.items() if k != "backend"}
        try:
            config = TinyLMConfig(**fields)
        except TypeError as exc:
            raise UsageError(f"--config: bad tiny-lm field ({exc})") from exc
        result = tiny_lm_train(examples, config)
        result.model.save(args.out)
        resolved = {"backend": "tiny", **asdict(config),
                    "epoch_losses": result.epoch_losses,
                    "rejected": [list(r) for r in result.rejected]}
        seed = config.seed
        losses = ", ".join(f"{x:.4f}" for x in result.epoch_losses)
        print(f"train: tiny lm over {len(examples) - len(result.rejected)} examples, "
              f"epoch losses [{losses}] -> {args.out}")
    else:
        raise UsageError(f"--config: unknown backend {backend_kind!r} (use 'tiny' or 'memorize')")

    _write_manifest(args.out, "train", resolved, [args.data, args.config], [args.out], seed, started)
    return 0


# --- generate -------------------------------------------------------------------


def _unique_inputs(examples) -> list[tuple[str, str]]:
    seen = set()
    out = []
    for ex in examples:
        if ex.id in seen:
            continue
        seen.add(ex.id)
        out.append((ex.id, ex.input_text))
    return out


def cmd_generate(args: argparse.Namespace) -> int:
    started = _utc_now()
    endpoint = args.endpoint or os.environ.get("FLSEQ_ENDPOINT")
    if args.model is None and not endpoint:
        raise UsageError("--model or --endpoint (or FLSEQ_ENDPOINT) is required")
    _require_readable(args.data, "--data")
    examples = read_sg_dataset(args.data)
    inputs = _unique_inputs(examples)

    rows = []
    if args.model is not None:
        _require_readable(args.model, "--model")
        backend = load_model(args.model)
        config = BeamConfig(
            beam_width=args.beam_width,
            num_return=args.num_return,
            max_new_tokens=args.max_new_tokens,
        )
        for ex_id, input_text in inputs:
            candidates = generate_patches(backend, input_text, config, dedupe=not args.no_dedupe)
            rows.append((ex_id, candidates))
        backend_desc = {"model": args.model}
    else:
        for ex_id, input_text in inputs:
            candidates = remote_generate(
                endpoint, input_text,
                num_candidates=args.num_return,
                max_new_tokens=args.max_new_tokens,
                request_id=ex_id,
            )
            rows.append((ex_id, candidates))
        backend_desc = {"endpoint": endpoint}

    write_records(
        args.out,
        (
            {
                "id": ex_id,
                "candidates": [
                    {
                        "text": c.raw_text,
                        "line_number": c.line_number,
                        "line_text": c.line_text,
                        "log_prob": c.log_prob,
                    }
                    for c in candidates
                ],
            }
            for ex_id, candidates in rows
        ),
    )
    _write_manifest(
        args.out, "generate",
        {**backend_desc, "beam_width": args.beam_width, "num_return": args.num_return,
         "max_new_tokens": args.max_new_tokens, "dedupe": not args.no_dedupe},
        [args.data] + ([args.model] if args.model else []),
        [args.out], None, started,
    )
    print(f"generate: candidates for {len(rows)} inputs -> {args.out}")
    return 0


# --- evaluate -------------------------------------------------------------------


def _read_candidates_file(path: str) -> dict[str, list[PatchCandidate]]:
    out: dict[str, list[PatchCandidate]] = {}
    for line_no, rec in read_records(path):
        if "id" not in rec:
            raise MalformedRecord("candidate record needs 'id'", line_no)
        if "candidates" in rec:
            cands = [
                PatchCandidate(
                    raw_text=c["text"],
                    log_prob=float(c["log_prob"]),
                    line_number=c.get("line_number"),
                    line_text=c.get("line_text"),
                )
                for c in rec["candidates"]
            ]
        elif "ranking" in rec:
            from .baseline import SuspiciousnessRanking

            ranking = SuspiciousnessRanking(
                tuple((int(line), float(score)) for line, score in rec["ranking"]),
                rec.get("formula", "ranking"),
            )
            cands = candidates_from_ranking(ranking)
        else:
            raise MalformedRecord("candidate record needs 'candidates' or 'ranking'", line_no)
        out[str(rec["id"])] = cands
    return out


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.candidates, "--candidates")
    _require_readable(args.pairs, "--pairs")
    candidates = _read_candidates_file(args.candidates)
    pairs = ingest_pairs(args.pairs).pairs
    if not pairs:
        raise FlseqError("--pairs produced no labeled pairs")
    mode = MatchMode(args.mode)
    run_tag = args.run_tag if args.run_tag else Path(args.out).stem
    ranks = [(pair.id, hit_rank(candidates.get(pair.id, []), pair, mode)) for pair in pairs]
    report = top_n_report(ranks, mode, run_tag=run_tag)
    write_report(report, args.out)
    _write_manifest(
        args.out, "evaluate",
        {"mode": mode.value, "run_tag": run_tag,
         "top_n": {str(n): c for n, c in sorted(report.top_n_counts.items())}},
        [args.candidates, args.pairs],
        [args.out, str(Path(args.out).with_suffix(".csv"))], None, started,
    )
    counts = ", ".join(f"Top-{n}={report.top_n_counts[n]}" for n in sorted(report.top_n_counts))
    print(f"evaluate[{mode.value}]: {counts} of {report.total} -> {args.out}")
    return 0


# --- baselines --------------------------------------------------------------------


def _parse_lines_flag(raw: str | None, flag: str) -> list[int] | None:
    if raw is None:
        return None
    try:
        return [int(x) for x in raw.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag}: expected comma-separated integers") from exc


def cmd_sbfl(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.coverage, "--coverage")
    matrix = read_coverage(args.coverage)
    ranking = sbfl_score(matrix, args.formula)
    function_lines = _parse_lines_flag(args.function_lines, "--function-lines")
    if function_lines is not None:
        ranking = restrict_to_function(ranking, function_lines)
    write_ranking(ranking, args.out)
    _write_manifest(args.out, "sbfl",
                    {"formula": args.formula, "function_lines": function_lines},
                    [args.coverage], [args.out], None, started)
    print(f"sbfl[{args.formula}]: ranked {len(ranking.entries)} lines -> {args.out}")
    return 0


def cmd_mbfl(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.kill, "--kill")
    kill, failing_total, passing_total = read_kill(args.kill)
    ranking = mbfl_score(kill, failing_total, passing_total, args.formula)
    function_lines = _parse_lines_flag(args.function_lines, "--function-lines")
    if function_lines is not None:
        ranking = restrict_to_function(ranking, function_lines)
    write_ranking(ranking, args.out)
    _write_manifest(args.out, "mbfl",
                    {"formula": args.formula, "function_lines": function_lines},
                    [args.kill], [args.out], None, started)
    print(f"mbfl[{args.formula}]: ranked {len(ranking.entries)} lines -> {args.out}")
    return 0


# --- split / report -----------------------------------------------------------------


def _read_ids(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        first = ""
        for line in fh:
            if line.strip():
                first = line.strip()
                break
    if first.startswith("{"):
        return [str(rec["id"]) for _, rec in read_records(path)]
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_split(args: argparse.Namespace) -> int:
    started = _utc_now()
    _require_readable(args.data, "--data")
    ids = _read_ids(args.data)
    if args.scheme == "ratio_8_1_1":
        folds = split_ratio_8_1_1(ids, args.seed)
    else:
        folds = split_kfold(ids, args.k, args.seed)
    write_json(args.out, {
        "scheme": args.scheme,
        "seed": args.seed,
        "k": args.k if args.scheme == "kfold" else None,
        "folds": folds,
    })
    _write_manifest(args.out, "split",
                    {"scheme": args.scheme, "k": args.k, "n_ids": len(ids)},
                    [args.data], [args.out], args.seed, started)
    sizes = ", ".join(f"{name}={len(v)}" for name, v in folds.items())
    print(f"split[{args.scheme}]: {sizes} -> {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    started = _utc_now()
    for path in args.runs:
        _require_readable(path, "--runs")
    reports = [read_report(path) for path in args.runs]
    agg = aggregate_runs(reports)
    write_aggregate(agg, args.out)
    _write_manifest(args.out, "report",
                    {"runs": list(args.runs), "selected": list(agg.selected_run_tags)},
                    list(args.runs), [args.out], None, started)
    means = ", ".join(f"Top-{n}={agg.top_n_means[n]:.1f}" for n in sorted(agg.top_n_means))
    print(f"report: {means} over best {len(agg.selected_run_tags)} of {agg.n_runs} runs -> {args.out}")
    return 0


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flseq",
        description="Fault-localization workbench: sequence-generation pipeline and baselines.",
    )
    parser.add_argument("--version", action="version", version=f"flseq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build an SG dataset from pairs or by fault injection")
    p.add_argument("--pairs", required=True, help="pair record file (or clean functions with --inject)")
    p.add_argument("--out", required=True, help="output SG dataset path")
    p.add_argument("--out-pairs", default=None, help="also write the labeled pairs record file")
    p.add_argument("--variant", default="standard", choices=VARIANTS)
    p.add_argument("--inject", action="store_true", help="synthesize pairs from clean sources")
    p.add_argument("--mutators", default="arith-op-swap,relational-op-swap,constant-perturb,boolean-negate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None, help="number of pairs to inject")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a backend on an SG dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True, help="JSON config with a 'backend' field")
    p.add_argument("--out", required=True, help="output model path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="produce ranked patch candidates")
    backend = p.add_mutually_exclusive_group()
    backend.add_argument("--model", default=None, help="local model file")
    backend.add_argument("--endpoint", default=None, help="remote /v1/generate endpoint")
    p.add_argument("--data", required=True, help="SG dataset of inputs")
    p.add_argument("--beam-width", type=int, default=10)
    p.add_argument("--num-return", type=int, default=5)
    p.add_argument("--max-new-tokens", type=int, default=64)
    p.add_argument("--no-dedupe", action="store_true", help="keep duplicate line numbers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="Top-N validation of candidates against pairs")
    p.add_argument("--candidates", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in MatchMode])
    p.add_argument("--run-tag", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sbfl", help="spectrum-based suspiciousness ranking")
    p.add_argument("--coverage", required=True)
    p.add_argument("--formula", required=True, choices=["ochiai", "jaccard", "tarantula", "dstar2"])
    p.add_argument("--function-lines", default=None, help="comma-separated line ids to restrict to")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sbfl)

    p = sub.add_parser("mbfl", help="mutation-based suspiciousness ranking")
    p.add_argument("--kill", required=True)
    p.add_argument("--formula", required=True, choices=["muse", "metallaxis"])
    p.add_argument("--function-lines", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mbfl)

    p = sub.add_parser("split", help="deterministic dataset splitting")
    p.add_argument("--data", required=True, help="jsonl with 'id' fields, or one id per line")
    p.add_argument("--scheme", required=True, choices=["ratio_8_1_1", "kfold"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("report", help="aggregate evaluation runs")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"flseq {args.command}: {exc}", file=sys.stderr)
        return 2
    except MalformedRecord as exc:
        print(f"flseq {args.command}: malformed input: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"flseq {args.command}: {exc}", file=sys.stderr)
        return 2
    except FlseqError as exc:
        print(f"flseq {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"flseq {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
