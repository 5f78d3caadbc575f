"""Aligned plain-text tables shared by describe/analyze/sweep output."""

from __future__ import annotations


def format_table(header: list[str], rows: list[list[str]], right_align: set[int] | None = None) -> str:
    """Fixed-width table with a dashed rule under the header."""
    right_align = right_align or set()
    cols = [list(col) for col in zip(header, *rows)] if rows else [[h] for h in header]
    widths = [max(len(str(cell)) for cell in col) for col in cols]
    lines = []

    def fmt(cells):
        parts = []
        for i, cell in enumerate(cells):
            cell = str(cell)
            parts.append(cell.rjust(widths[i]) if i in right_align else cell.ljust(widths[i]))
        return "  ".join(parts).rstrip()

    lines.append(fmt(header))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(fmt(row))
    return "\n".join(lines) + "\n"
