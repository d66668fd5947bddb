"""Docs stay in lockstep with the code they describe."""

import math
from pathlib import Path

from bellharness.certify import BOUND_CONSTANT, tail_bound
from bellharness.clifford import BASIS_NAMES, TABLE

DOCS = Path(__file__).resolve().parent.parent / "docs"


def render_multiplication_table() -> str:
    """The 8x8 basis product as a markdown grid; row blade times column blade."""
    header = "| * | " + " | ".join(f"`{name}`" for name in BASIS_NAMES) + " |"
    sep = "|" + "---|" * (len(BASIS_NAMES) + 1)
    lines = [header, sep]
    for name, row in zip(BASIS_NAMES, TABLE.as_rows()):
        cells = " | ".join(f"`{entry}`" for entry in row)
        lines.append(f"| `{name}` | {cells} |")
    return "\n".join(lines) + "\n"


def test_multiplication_table_doc_matches_code():
    doc = (DOCS / "multiplication-table.md").read_text(encoding="utf-8")
    assert render_multiplication_table() in doc


def test_tail_bound_doc_states_committed_constant():
    doc = (DOCS / "tail-bound.md").read_text(encoding="utf-8")
    assert f"C = {int(BOUND_CONSTANT)}" in doc
    # the worked example pinned in the doc is the frozen oracle value
    assert "-19.53125" in doc
    assert tail_bound(10**4, 0.5) == math.exp(-19.53125)
