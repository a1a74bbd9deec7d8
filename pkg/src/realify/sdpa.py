"""SDPA sparse (".dat-s") export and import for carrier programs.

The file layout is the usual one: comment lines starting with '*' or '"',
then the row count m, the block count, the block size list (negative sizes
mean diagonal blocks), the m right-hand sides, and finally coefficient
quintuples "k blk i j v" with 1-based indices, i <= j, and k = 0 holding
the objective matrix.

A program maps onto the side of the SDPA pair that optimizes the matrix
variable Y: objective entries become the k = 0 matrix, each constraint row
becomes one k >= 1 matrix with its rhs on the right-hand-side line.  Two
conventions of the carrier do not exist in the format and are recorded as
machine-readable header comments so the round trip is exact:

* sense: the format maximizes the k = 0 functional; a minimize program is
  exported with the objective negated and "* sense: minimize" in the
  header, and the importer undoes the negation.
* free scalars: each becomes a trailing diagonal block of size -2 holding
  the split f = u - v (entries (1,1,+c) and (2,2,-c)); "* free-vars: N"
  tells the importer to fold the last N such blocks back into scalars.

Foreign diagonal blocks (negative size, no free-vars header) import as PSD
blocks carrying only diagonal entries; that relaxation leaves optima and
row values unchanged because off-diagonal positions are never referenced.

Coefficients are written with repr, which round-trips binary doubles
exactly.
"""

from __future__ import annotations

from pathlib import Path

from .program import (
    LinearFunctional,
    RealConicProgram,
    Row,
    accumulate_entries,
    accumulate_free,
)

__all__ = ["export_sdpa", "import_sdpa"]


def export_sdpa(prog: RealConicProgram, path) -> None:
    """Write prog at path in SDPA sparse format; see the module docstring."""
    nb = len(prog.psd_blocks)
    neg = -1.0 if prog.sense == "minimize" else 1.0
    lines = [
        "* produced by realify; SDPA sparse format",
        f"* sense: {prog.sense}",
        f"* free-vars: {prog.n_free}",
        str(prog.n_rows),
        str(nb + prog.n_free),
        " ".join(
            [str(n) for n in prog.psd_blocks] + ["-2"] * prog.n_free
        ),
        " ".join(repr(float(row.rhs)) for row in prog.rows),
    ]

    def emit(k, entries, free):
        for b, i, j, c in entries:
            v = c if k else neg * c
            lines.append(f"{k} {b + 1} {i + 1} {j + 1} {repr(float(v))}")
        for kf, c in free:
            v = c if k else neg * c
            blk = nb + kf + 1
            lines.append(f"{k} {blk} 1 1 {repr(float(v))}")
            lines.append(f"{k} {blk} 2 2 {repr(float(-v))}")

    emit(0, prog.objective.entries, prog.objective.free)
    for k, row in enumerate(prog.rows, start=1):
        emit(k, row.entries, row.free)
    Path(path).write_text("\n".join(lines) + "\n")


def _tokens(line: str) -> list[str]:
    for ch in "{}(),":
        line = line.replace(ch, " ")
    return line.split()


def import_sdpa(path) -> RealConicProgram:
    """Parse an SDPA sparse file back into a carrier program."""
    sense = "maximize"
    n_free = 0
    header: list[str] = []
    body_lines: list[tuple[int, str]] = []
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("*") or stripped.startswith('"'):
            header.append(stripped)
            continue
        body_lines.append((ln, raw))
    for com in header:
        text = com.lstrip('*" ').strip()
        if text.startswith("sense:"):
            sense = text.split(":", 1)[1].strip()
            if sense not in ("maximize", "minimize"):
                raise ValueError(f"unknown sense header {sense!r}")
        elif text.startswith("free-vars:"):
            n_free = int(text.split(":", 1)[1].strip())

    pos = 0

    def next_line(allow_empty=False):
        nonlocal pos
        while pos < len(body_lines):
            ln, raw = body_lines[pos]
            pos += 1
            if raw.strip() or allow_empty:
                return ln, raw
        if allow_empty:
            return len(body_lines), ""
        raise ValueError("unexpected end of file")

    ln, raw = next_line()
    try:
        m = int(_tokens(raw)[0])
    except (ValueError, IndexError):
        raise ValueError(f"line {ln}: expected the row count") from None
    ln, raw = next_line()
    try:
        nblocks = int(_tokens(raw)[0])
    except (ValueError, IndexError):
        raise ValueError(f"line {ln}: expected the block count") from None
    ln, raw = next_line()
    try:
        sizes = [int(t) for t in _tokens(raw)]
    except ValueError:
        raise ValueError(f"line {ln}: bad block size list") from None
    if len(sizes) != nblocks:
        raise ValueError(
            f"line {ln}: {len(sizes)} block sizes for {nblocks} blocks"
        )
    if any(s == 0 for s in sizes):
        raise ValueError(f"line {ln}: zero block size")

    if m > 0:
        ln, raw = next_line()
        try:
            rhs = [float(t) for t in _tokens(raw)]
        except ValueError:
            raise ValueError(f"line {ln}: bad right-hand side") from None
        if len(rhs) != m:
            raise ValueError(
                f"line {ln}: {len(rhs)} right-hand sides for {m} rows"
            )
    else:
        # tolerate and consume one (possibly empty) rhs line
        if pos < len(body_lines) and len(_tokens(body_lines[pos][1])) != 5:
            pos += 1
        rhs = []

    # Trailing -2 blocks declared in the header fold back to free scalars.
    if n_free:
        if n_free > nblocks or any(s != -2 for s in sizes[-n_free:]):
            raise ValueError(
                "free-vars header does not match trailing -2 blocks"
            )
        sizes = sizes[:-n_free]
    diag_only = [s < 0 for s in sizes]
    blocks = tuple(abs(s) for s in sizes)
    nb = len(blocks)

    neg = -1.0 if sense == "minimize" else 1.0
    obj_entries: list = []
    obj_free: list = []
    row_entries: list[list] = [[] for _ in range(m)]
    row_free: list[list] = [[] for _ in range(m)]

    while pos < len(body_lines):
        ln, raw = next_line(allow_empty=True)
        if not raw.strip():
            continue
        toks = _tokens(raw)
        if len(toks) != 5:
            raise ValueError(f"line {ln}: expected 5 fields, got {len(toks)}")
        try:
            k, blk, i, j = (int(t) for t in toks[:4])
            v = float(toks[4])
        except ValueError:
            raise ValueError(f"line {ln}: malformed entry") from None
        if not 0 <= k <= m:
            raise ValueError(f"line {ln}: matrix index {k} out of range")
        if not 1 <= blk <= nb + n_free:
            raise ValueError(f"line {ln}: block {blk} out of range")
        if i > j:
            raise ValueError(
                f"line {ln}: lower-triangle entry (i={i} > j={j})"
            )
        if blk > nb:
            # free-scalar block: (1,1) carries +c, (2,2) carries -c
            if (i, j) not in ((1, 1), (2, 2)):
                raise ValueError(
                    f"line {ln}: free-scalar block admits only diagonal "
                    "(1,1)/(2,2) entries"
                )
            # the exporter emits two lines per coefficient, each worth half
            c = v if i == 1 else -v
            if k == 0:
                c *= neg
            target = obj_free if k == 0 else row_free[k - 1]
            target.append((blk - nb - 1, 0.5 * c))
            continue
        n = blocks[blk - 1]
        if j > n:
            raise ValueError(f"line {ln}: index {j} exceeds block size {n}")
        if diag_only[blk - 1] and i != j:
            raise ValueError(
                f"line {ln}: off-diagonal entry in diagonal block"
            )
        c = neg * v if k == 0 else v
        if k == 0:
            obj_entries.append((blk - 1, i - 1, j - 1, c))
        else:
            row_entries[k - 1].append((blk - 1, i - 1, j - 1, c))

    rows = tuple(
        Row(
            entries=accumulate_entries(row_entries[k]),
            free=accumulate_free(row_free[k]),
            rhs=rhs[k],
        )
        for k in range(m)
    )
    return RealConicProgram(
        psd_blocks=blocks,
        n_free=n_free,
        rows=rows,
        objective=LinearFunctional(
            entries=accumulate_entries(obj_entries),
            free=accumulate_free(obj_free),
        ),
        sense=sense,
    )
