"""Tests for the line-numbering codec, target construction, and patch parsing."""

from __future__ import annotations

import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from flseq.corpus import FunctionPair, split_lines
from flseq.errors import EmptySource, OutOfRange
from flseq.sgcodec import (
    add_line_numbers,
    build_sg_examples,
    make_target,
    parse_patch,
    read_sg_dataset,
    strip_line_numbers,
    write_sg_dataset,
)


class TestAddLineNumbers:
    def test_basic(self):
        assert add_line_numbers("a=b;\nreturn a;") == "1\ta=b;\n2\treturn a;"

    def test_single_line(self):
        assert add_line_numbers("x") == "1\tx"

    def test_empty_lines_are_numbered(self):
        assert add_line_numbers("a\n\nb") == "1\ta\n2\t\n3\tb"

    def test_trailing_newline_stripped_not_restored(self):
        assert add_line_numbers("a\nb\n") == "1\ta\n2\tb"

    def test_empty_source_raises(self):
        with pytest.raises(EmptySource):
            add_line_numbers("")

    def test_preserves_line_count_and_inverts(self):
        source = "int x = 0;\n\twhile (x < 3) {\n\t\tx += 1;\n\t}"
        numbered = add_line_numbers(source)
        assert len(split_lines(numbered)) == len(split_lines(source))
        assert strip_line_numbers(numbered) == source

    def test_numbering_is_injective(self):
        numbered = add_line_numbers("\n".join(["same text"] * 40))
        prefixes = [line.split("\t", 1)[0] for line in split_lines(numbered)]
        assert len(set(prefixes)) == 40


class TestMakeTarget:
    def test_basic(self):
        assert make_target("a=b;\nreturn a;", 2) == "2\treturn a;"

    def test_single_line(self):
        assert make_target("x", 1) == "1\tx"

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            make_target("a=b;\nreturn a;", 3)
        with pytest.raises(OutOfRange):
            make_target("a", 0)


class TestParsePatch:
    def test_well_formed(self):
        cand = parse_patch("3\tif (x > 0) {", -0.42)
        assert (cand.line_number, cand.line_text) == (3, "if (x > 0) {")

    def test_no_tab_keeps_raw(self):
        cand = parse_patch("return a;", -1.0)
        assert cand.line_number is None
        assert cand.line_text is None
        assert cand.raw_text == "return a;"

    def test_leading_zeros_accepted(self):
        assert parse_patch("07\ty", -0.1).line_number == 7

    def test_non_decimal_head_fails_softly(self):
        for raw in ("x3\ty", "3x\ty", "\ty", " 3\ty", "³\ty"):
            cand = parse_patch(raw, -0.5)
            assert cand.line_number is None, raw

    def test_splits_at_first_tab_only(self):
        cand = parse_patch("2\tint\tx = 1;", -0.2)
        assert cand.line_number == 2
        assert cand.line_text == "int\tx = 1;"

    def test_non_finite_log_prob_rejected(self):
        with pytest.raises(ValueError):
            parse_patch("1\tx", float("-inf"))

    @settings(max_examples=400, deadline=None)
    @given(st.text(max_size=80), st.floats(allow_nan=False, allow_infinity=False))
    def test_never_raises_on_arbitrary_model_output(self, raw, log_prob):
        cand = parse_patch(raw, log_prob)
        assert cand.raw_text == raw
        assert (cand.line_number is None) == (cand.line_text is None)
        if cand.line_number is not None:
            head, _, rest = raw.partition("\t")
            assert int(head) == cand.line_number
            assert rest == cand.line_text


# Codec round trip: make_target then parse_patch recovers (k, line k) exactly,
# for arbitrary printable sources including tabs inside lines.
_line_chars = st.text(
    alphabet=st.characters(codec="utf-8", exclude_characters="\n\r"),
    max_size=30,
)


@settings(max_examples=300, deadline=None)
@given(st.lists(_line_chars, min_size=1, max_size=12), st.data())
def test_roundtrip_property(lines, data):
    source = "\n".join(lines)
    assume(source != "")  # the empty text has zero lines by convention
    n = len(split_lines(source))
    k = data.draw(st.integers(min_value=1, max_value=n))
    cand = parse_patch(make_target(source, k), -0.5)
    assert cand.line_number == k
    assert cand.line_text == split_lines(source)[k - 1]


def test_roundtrip_seeded_sweep():
    rng = random.Random(2024)
    printable = "".join(chr(c) for c in range(32, 127)) + "\t"
    for _ in range(1000):
        n = rng.randint(1, 15)
        raw = [
            # a lone empty line would be the empty text (zero lines)
            "".join(rng.choice(printable) for _ in range(rng.randint(0 if n > 1 else 1, 40)))
            for _ in range(n)
        ]
        source = "\n".join(raw)
        # a trailing empty line reads as a final newline, which is stripped
        lines = split_lines(source)
        k = rng.randint(1, len(lines))
        numbered = add_line_numbers(source)
        assert split_lines(strip_line_numbers(numbered)) == lines
        cand = parse_patch(make_target(source, k), -1.0)
        assert cand.line_number == k
        assert cand.line_text == lines[k - 1]


class TestBuildSGExamples:
    def _pair(self, fault_lines={2}):
        return FunctionPair("p1", "a = 1\nb = a + 2\nreturn b", frozenset(fault_lines), fixed=None)

    def test_single_fault(self):
        examples = build_sg_examples(self._pair())
        assert len(examples) == 1
        assert examples[0].target_text == "2\tb = a + 2"
        assert examples[0].input_text.startswith("1\ta = 1\n")
        assert examples[0].n_lines == 3

    def test_multi_fault_shares_input(self):
        examples = build_sg_examples(self._pair({1, 3}))
        assert len(examples) == 2
        assert examples[0].input_text == examples[1].input_text
        assert [e.target_text for e in examples] == ["1\ta = 1", "3\treturn b"]
        assert all(e.id == "p1" for e in examples)

    def test_variants(self):
        unnumbered = build_sg_examples(self._pair(), variant="unnumbered_line")[0]
        assert unnumbered.input_text == "a = 1\nb = a + 2\nreturn b"
        assert unnumbered.target_text == "b = a + 2"
        number_only = build_sg_examples(self._pair(), variant="number_only")[0]
        assert number_only.input_text.startswith("1\t")
        assert number_only.target_text == "2"

    def test_dataset_roundtrip(self, tmp_path):
        examples = build_sg_examples(self._pair({1, 3}))
        path = tmp_path / "sg.jsonl"
        write_sg_dataset(examples, path)
        assert read_sg_dataset(path) == examples
