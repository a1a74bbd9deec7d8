"""SDPA sparse export/import: golden bytes and exact round trips."""

from pathlib import Path

import numpy as np
import pytest

from realify import (
    LinearFunctional,
    RealConicProgram,
    Row,
    export_sdpa,
    import_sdpa,
    solve,
)

DATA = Path(__file__).parent / "data"


def corner_program():
    return RealConicProgram(
        psd_blocks=(1,),
        n_free=0,
        rows=(Row(entries=((0, 0, 0, 1.0),), rhs=1.0),),
        objective=LinearFunctional(entries=((0, 0, 0, 1.0),)),
        sense="maximize",
    )


def mixed_program():
    # two blocks, two free scalars, minimize sense, awkward coefficients
    return RealConicProgram(
        psd_blocks=(2, 3),
        n_free=2,
        rows=(
            Row(
                entries=((0, 0, 1, 0.5), (1, 0, 0, -1.0 / 3.0)),
                free=((0, 2.0),),
                rhs=0.1,
            ),
            Row(
                entries=((1, 1, 2, np.nextafter(1.0, 2.0)),),
                free=((0, -1e-17), (1, 7.25)),
                rhs=-3.75,
            ),
        ),
        objective=LinearFunctional(
            entries=((0, 0, 0, 1.0), (1, 2, 2, -2.5)),
            free=((1, 0.3),),
        ),
        sense="minimize",
    )


def test_golden_fixture_bytes(tmp_path):
    out = tmp_path / "corner.dat-s"
    export_sdpa(corner_program(), out)
    assert out.read_bytes() == (DATA / "corner.dat-s").read_bytes()


def test_golden_fixture_parses_to_same_program():
    assert import_sdpa(DATA / "corner.dat-s") == corner_program()


def test_round_trip_is_exact_with_free_vars_and_minimize(tmp_path):
    prog = mixed_program()
    out = tmp_path / "mixed.dat-s"
    export_sdpa(prog, out)
    assert import_sdpa(out) == prog


def test_round_trip_preserves_solutions(tmp_path):
    prog = RealConicProgram(
        psd_blocks=(2,),
        n_free=1,
        rows=(
            Row(entries=((0, 0, 0, 1.0),), free=((0, -1.0),), rhs=0.0),
            Row(entries=((0, 1, 1, 1.0),), free=((0, -1.0),), rhs=0.0),
            Row(entries=((0, 0, 1, 0.5),), rhs=1.0),
        ),
        objective=LinearFunctional(free=((0, 1.0),)),
        sense="minimize",
    )
    out = tmp_path / "prog.dat-s"
    export_sdpa(prog, out)
    a = solve(prog)
    b = solve(import_sdpa(out))
    assert a.status == b.status == "optimal"
    assert a.objective == b.objective


def test_lower_triangle_entry_rejected(tmp_path):
    out = tmp_path / "bad.dat-s"
    out.write_text("1\n1\n2\n1.0\n1 1 2 1 5.0\n")
    with pytest.raises(ValueError, match="line 5"):
        import_sdpa(out)


def test_malformed_line_reports_line_number(tmp_path):
    out = tmp_path / "bad.dat-s"
    out.write_text("1\n1\n2\n1.0\n1 1 1 oops 5.0\n")
    with pytest.raises(ValueError, match="line 5"):
        import_sdpa(out)


def test_dimension_mismatches_rejected(tmp_path):
    out = tmp_path / "bad.dat-s"
    out.write_text("2\n1\n2\n1.0\n")
    with pytest.raises(ValueError, match="right-hand side"):
        import_sdpa(out)
    out.write_text("1\n2\n2\n1.0\n")
    with pytest.raises(ValueError, match="block size"):
        import_sdpa(out)


def test_empty_constraint_set_accepted(tmp_path):
    out = tmp_path / "feas.dat-s"
    prog = RealConicProgram(
        psd_blocks=(3,),
        n_free=0,
        rows=(),
        objective=LinearFunctional(entries=((0, 0, 0, -1.0),)),
        sense="maximize",
    )
    export_sdpa(prog, out)
    assert import_sdpa(out) == prog


def test_foreign_diagonal_block_imports_as_diag_constrained(tmp_path):
    # no free-vars header: a -2 block stays a block; off-diagonal entries
    # in it are format errors
    out = tmp_path / "diag.dat-s"
    out.write_text("1\n2\n2 -2\n1.0\n0 2 1 1 1.0\n1 1 1 1 1.0\n")
    prog = import_sdpa(out)
    assert prog.psd_blocks == (2, 2)
    assert prog.n_free == 0
    out.write_text("1\n2\n2 -2\n1.0\n0 2 1 2 1.0\n1 1 1 1 1.0\n")
    with pytest.raises(ValueError, match="diagonal"):
        import_sdpa(out)


def test_curly_brace_and_comma_size_lines(tmp_path):
    out = tmp_path / "braces.dat-s"
    out.write_text('"comment\n1\n2\n{2, 3}\n1.0\n1 1 1 1 1.0\n')
    prog = import_sdpa(out)
    assert prog.psd_blocks == (2, 3)


def test_free_var_header_mismatch_rejected(tmp_path):
    out = tmp_path / "bad.dat-s"
    out.write_text("* free-vars: 1\n1\n1\n2\n1.0\n1 1 1 1 1.0\n")
    with pytest.raises(ValueError, match="free-vars"):
        import_sdpa(out)
