#!/usr/bin/env python3
"""Drive the whole pipeline through the CLI, stage by stage.

preprocess -> train (memorizing backend) -> generate -> evaluate -> report.
Every stage leaves a manifest next to its output; rerunning a stage with
the same inputs and seed produces byte-identical files. The memorizing
backend reproduces its training targets exactly, so Top-1 comes out N/N;
swap the config for {"backend": "tiny", ...} to watch a real model learn.
"""

import json
import tempfile
from pathlib import Path

from flseq._records import write_records
from flseq.cli import main as flseq
from flseq.corpus import synthesize_clean_corpus


def main() -> None:
    root = Path(tempfile.mkdtemp(prefix="flseq-demo-"))
    print(f"working in {root}\n")

    clean = root / "clean.jsonl"
    write_records(
        clean,
        (
            {"id": fid, "source": src, "language": "python"}
            for fid, src in synthesize_clean_corpus(25, seed=11)
        ),
    )

    sg = root / "sg.jsonl"
    pairs = root / "pairs.jsonl"
    config = root / "memorize.json"
    config.write_text('{"backend": "memorize"}', encoding="utf-8")
    model = root / "memo.model"
    cands = root / "cands.jsonl"
    report = root / "report.json"
    runs = []

    flseq(["preprocess", "--pairs", str(clean), "--out", str(sg),
           "--out-pairs", str(pairs), "--inject", "--seed", "9"])
    flseq(["train", "--data", str(sg), "--config", str(config), "--out", str(model)])
    flseq(["generate", "--model", str(model), "--data", str(sg),
           "--beam-width", "10", "--num-return", "5", "--out", str(cands)])
    for tag in ("run-a", "run-b", "run-c", "run-d", "run-e"):
        out = root / f"report-{tag}.json"
        flseq(["evaluate", "--candidates", str(cands), "--pairs", str(pairs),
               "--mode", "line_number", "--run-tag", tag, "--out", str(out)])
        runs.append(str(out))
    flseq(["report", "--runs", *runs, "--out", str(root / "aggregate.json")])
    flseq(["split", "--data", str(sg), "--scheme", "kfold", "--k", "5",
           "--seed", "1", "--out", str(root / "folds.json")])

    print("\n== evaluation report ==")
    obj = json.loads((root / "report-run-a.json").read_text(encoding="utf-8"))
    print(json.dumps({k: obj[k] for k in ("mode", "total", "top_n", "top_n_percent")}, indent=2))
    print("\n== manifest written next to each output ==")
    manifest = json.loads(Path(str(sg) + ".manifest.json").read_text(encoding="utf-8"))
    print(json.dumps({k: manifest[k] for k in ("command", "seed", "inputs", "outputs")}, indent=2))


if __name__ == "__main__":
    main()
