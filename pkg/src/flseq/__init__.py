"""flseq: a fault-localization workbench around sequence-generation fine-tuning.

The pipeline mirrors how a code LM is specialized for fault localization:
line-numbered inputs, "k<TAB>line" targets, beam-search patch generation,
and Top-N validation, alongside spectrum- and mutation-based baselines.
"""

__version__ = "0.1.0"

from .baseline import (
    CoverageMatrix,
    KillMatrix,
    Mutant,
    SuspiciousnessRanking,
    TestOutcome,
    mbfl_score,
    restrict_to_function,
    sbfl_score,
)
from .beam import BeamConfig, beam_decode, generate_patches
from .corpus import (
    MUTATORS,
    FunctionPair,
    MutatorSpec,
    diff_fault_lines,
    ingest_pairs,
    inject_fault,
    serialize_pairs,
)
from .evaluation import (
    EvalReport,
    MatchMode,
    aggregate_runs,
    candidates_from_ranking,
    hit_rank,
    split_kfold,
    split_ratio_8_1_1,
    top_n_report,
)
from .model import (
    MemorizingBackend,
    TinyLM,
    TinyLMConfig,
    Vocab,
    remote_generate,
    remote_info,
    tiny_lm_train,
)
from .sgcodec import (
    PatchCandidate,
    SGExample,
    add_line_numbers,
    build_sg_examples,
    make_target,
    parse_patch,
)

__all__ = [
    "__version__",
    # corpus
    "FunctionPair", "MutatorSpec", "MUTATORS",
    "diff_fault_lines", "inject_fault", "ingest_pairs", "serialize_pairs",
    # sgcodec
    "SGExample", "PatchCandidate",
    "add_line_numbers", "make_target", "parse_patch", "build_sg_examples",
    # model
    "Vocab", "TinyLM", "TinyLMConfig", "tiny_lm_train", "MemorizingBackend",
    "remote_generate", "remote_info",
    # beam
    "BeamConfig", "beam_decode", "generate_patches",
    # baseline
    "CoverageMatrix", "TestOutcome", "KillMatrix", "Mutant", "SuspiciousnessRanking",
    "sbfl_score", "mbfl_score", "restrict_to_function",
    # evaluation
    "MatchMode", "EvalReport", "hit_rank", "top_n_report", "aggregate_runs",
    "split_ratio_8_1_1", "split_kfold", "candidates_from_ranking",
]
