#!/usr/bin/env python3
"""Walk through the core encoding: numbered inputs, targets, patch parsing.

The whole idea rests on one transformation: prefix every line of a buggy
function with its number and a tab, then teach a model to answer with
"<number><TAB><line text>". This script shows the encoding, the target for
a known fault, and how raw model output is parsed back, including the
awkward cases (no tab, junk before the tab, tabs inside the code itself).
"""

from flseq import add_line_numbers, make_target, parse_patch

BUGGY = """\
public int scale(int value, int factor) {
    int result = value * factor;
    if (result < 0) {
        result = 0;
    }
    return result - 1;
}"""

FAULT_LINE = 6  # the off-by-one lives in "return result - 1;"


def main() -> None:
    print("== buggy function ==")
    print(BUGGY)

    numbered = add_line_numbers(BUGGY)
    print("\n== model input (line-numbered) ==")
    print(numbered)

    target = make_target(BUGGY, FAULT_LINE)
    print("\n== training target for the fault ==")
    print(repr(target))

    print("\n== parsing generated patches ==")
    samples = [
        ("6\t    return result - 1;", -0.21),   # well-formed, matches the fault
        ("3\t    if (result < 0) {", -1.37),    # well-formed, different line
        ("return result;", -2.02),              # no tab: unparsed but retained
        ("6b\tgarbage", -2.88),                 # junk before the tab
        ("2\tint\tx = value;", -3.10),          # tab inside the code is fine
    ]
    for raw, log_prob in samples:
        cand = parse_patch(raw, log_prob)
        print(f"  {raw!r:40s} -> line_number={cand.line_number!r:6} line_text={cand.line_text!r}")


if __name__ == "__main__":
    main()
