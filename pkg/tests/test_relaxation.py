"""Moment-relaxation assembly: data matrices, row layout, moment read-off."""

import math

import numpy as np
import pytest

from realify.complex_sdp import add_dualview_imag, add_naive_imag
from realify.program import accumulate_entries
from realify.polynomials import (
    CPOP,
    CPolynomial,
    gen_sphere_instance,
    gen_unitnorm_instance,
    monomial_basis,
)
from realify.relaxation import (
    assemble_hsos,
    build_data_matrices,
    extract_moments,
    moment_matrix,
    size_report,
)
from realify.solver import SolverOptions, solve

OPTS = SolverOptions(tol_gap=1e-7, tol_primal=1e-7, tol_dual=1e-7)


def hermitian_poly(s, terms_half):
    """Build a CPolynomial from one triangle of its term map."""
    terms = {}
    for (b, g), c in terms_half.items():
        terms[(b, g)] = terms.get((b, g), 0j) + c
        if b != g:
            terms[(g, b)] = terms.get((g, b), 0j) + np.conj(c)
    return CPolynomial(s=s, terms=terms)


def random_conjugate_symmetric_moments(s, d, rng):
    """A full fake moment table over basis(s, d) pairs, y[g,b] = conj(y[b,g])."""
    exps = monomial_basis(s, d).exponents
    y = {}
    for b in exps:
        for g in exps:
            if (b, g) in y:
                continue
            if b == g:
                y[(b, g)] = complex(rng.standard_normal(), 0.0)
            else:
                v = complex(rng.standard_normal(), rng.standard_normal())
                y[(b, g)] = v
                y[(g, b)] = np.conj(v)
    return y


# ---------------------------------------------------------------- data matrices


def test_moment_block_entries_are_elementary():
    p = gen_sphere_instance(2, seed=3)
    d = 2
    data = build_data_matrices(p, d)
    basis = data.bases[0]
    for i, beta in enumerate(basis.exponents):
        for j, gamma in enumerate(basis.exponents):
            hits = [e for e in data.entries[(beta, gamma)] if e[0] == 0]
            assert hits == [(0, i, j, 1.0 + 0j)]


def test_localizing_entries_analytic_univariate():
    # g = 1 - |z|^2 at order 1: the localizing block is 1x1 over the
    # constant monomial, so A^1 puts +1 on the constant key, -1 on the
    # |z|^2 key, and nothing on the mixed key.
    g = hermitian_poly(1, {((0,), (0,)): 1 + 0j, ((1,), (1,)): -1 + 0j})
    f = hermitian_poly(1, {((1,), (1,)): 1 + 0j})
    p = CPOP(s=1, f=f, constraints=((g, "ge"),))
    data = build_data_matrices(p, 1)
    assert data.block_dims == (2, 1)
    assert data.sources == (-1, 0)

    def block1(key):
        return [e for e in data.entries.get(key, ()) if e[0] == 1]

    assert block1(((0,), (0,))) == [(1, 0, 0, 1 + 0j)]
    assert block1(((1,), (1,))) == [(1, 0, 0, -1 + 0j)]
    assert block1(((1,), (0,))) == []
    assert block1(((0,), (1,))) == []


def test_localizing_matrix_reconstruction_oracle():
    # sum_key A^i_key y_key must equal the directly computed localizing
    # matrix [sum_t g_t y_{b'+b'', g'+g''}] for any conjugate-symmetric y.
    rng = np.random.default_rng(11)
    p = gen_unitnorm_instance(2, seed=5)
    d = 2
    data = build_data_matrices(p, d)
    y = random_conjugate_symmetric_moments(p.s, d, rng)

    polys = [None]
    for g, kind in p.constraints:
        polys.append(g)
        if kind == "eq":
            polys.append(-g)

    for blk in range(1, len(data.bases)):
        exps = data.bases[blk].exponents
        w = len(exps)
        direct = np.zeros((w, w), dtype=complex)
        terms = polys[blk].terms
        for a, bexp in enumerate(exps):
            for b, gexp in enumerate(exps):
                for (b2, g2), c in terms.items():
                    key = (
                        tuple(x + u for x, u in zip(bexp, b2)),
                        tuple(x + u for x, u in zip(gexp, g2)),
                    )
                    direct[a, b] += c * y[key]
        summed = np.zeros((w, w), dtype=complex)
        for key, ents in data.entries.items():
            for eb, i, j, c in ents:
                if eb == blk:
                    summed[i, j] += c * y[key]
        assert np.max(np.abs(summed - direct)) <= 1e-12 * (1 + np.max(np.abs(direct)))


def test_overweight_localizing_term_is_rejected():
    # z^2 + conj(z)^2 has a one-sided degree-2 term; at order 1 its keys
    # escape the degree range and assembly must refuse.
    g = hermitian_poly(1, {((2,), (0,)): 1 + 0j})
    f = hermitian_poly(1, {((1,), (1,)): 1 + 0j})
    p = CPOP(s=1, f=f, constraints=((g, "ge"),))
    with pytest.raises(ValueError, match="beyond degree"):
        build_data_matrices(p, 1)


def test_order_below_minimum_reports_computed_minimum():
    p = gen_sphere_instance(2, seed=0)
    assert p.d_min == 2
    with pytest.raises(ValueError, match="minimum admissible order 2"):
        build_data_matrices(p, 1)
    with pytest.raises(ValueError, match="minimum admissible order 2"):
        assemble_hsos(p, 1, "dualview")
    with pytest.raises(ValueError, match="minimum admissible order 2"):
        size_report(p, 1)


# ---------------------------------------------------------------- moment matrix


def test_moment_matrix_analytic_univariate():
    basis = monomial_basis(1, 1)
    a = 0.3 - 0.7j
    y = {
        ((0,), (0,)): 1 + 0j,
        ((0,), (1,)): a,
        ((1,), (0,)): np.conj(a),
        ((1,), (1,)): 0.6 + 0j,
    }
    M = moment_matrix(y, basis).to_complex()
    assert np.allclose(M, np.array([[1, a], [np.conj(a), 0.6]]), atol=1e-15)


def test_moment_matrix_of_point_evaluation_is_rank_one_psd():
    rng = np.random.default_rng(4)
    basis = monomial_basis(2, 2)
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = {}
    for b in basis.exponents:
        for g in basis.exponents:
            y[(b, g)] = np.prod(z**np.array(b)) * np.prod(np.conj(z) ** np.array(g))
    M = moment_matrix(y, basis).to_complex()
    eigs = np.linalg.eigvalsh(M)
    scale = max(1.0, eigs[-1])
    assert eigs[0] >= -1e-10 * scale
    assert eigs[-2] <= 1e-10 * scale


def test_moment_matrix_requires_every_key():
    basis = monomial_basis(1, 1)
    with pytest.raises(KeyError, match="moment value missing"):
        moment_matrix({((0,), (0,)): 1 + 0j}, basis)


# ---------------------------------------------------------------- assembly shape


def test_assembled_shapes_for_published_sphere_case():
    p = gen_sphere_instance(5, seed=0)
    dv = assemble_hsos(p, 2, "dualview")
    assert dv.program.psd_blocks == (42, 12, 12)
    assert dv.program.n_rows == 441
    assert dv.blocks == ((-1, 42), (0, 12), (0, 12))
    nv = assemble_hsos(p, 2, "naive")
    assert nv.program.psd_blocks == (42, 12, 12)
    assert nv.program.n_rows == 987
    rep = size_report(p, 2)
    assert rep["m_dualview"] == dv.program.n_rows
    assert rep["m_naive_assembled"] == nv.program.n_rows


def test_dualview_row_count_is_square_of_basis_size():
    for s, d in ((1, 2), (2, 2), (2, 3), (3, 2)):
        p = gen_unitnorm_instance(s, seed=s)
        w = math.comb(s + d, d)
        art = assemble_hsos(p, d, "dualview")
        assert art.program.n_rows == w * w


def test_bound_variable_enters_only_the_constant_real_row():
    p = gen_sphere_instance(2, seed=9)
    for form in ("naive", "dualview"):
        art = assemble_hsos(p, 2, form)
        zero_key = (((0, 0), (0, 0)), "re")
        hits = [
            k for k, row in enumerate(art.program.rows) if row.free
        ]
        assert hits == [art.row_index[zero_key]]
        assert art.program.rows[hits[0]].free == ((0, 1.0),)
        assert art.program.objective.free == ((0, 1.0),)
        assert art.program.sense == "maximize"


def test_row_rhs_matches_objective_coefficients():
    p = gen_sphere_instance(2, seed=21)
    art = assemble_hsos(p, 2, "dualview")
    for (key, part), rid in art.row_index.items():
        c = complex(p.f.terms.get(key, 0j))
        want = c.real if part == "re" else c.imag
        assert art.program.rows[rid].rhs == want


def test_assembly_is_deterministic():
    p = gen_unitnorm_instance(2, seed=13)
    a1 = assemble_hsos(p, 2, "naive")
    a2 = assemble_hsos(p, 2, "naive")
    assert a1.program == a2.program


def test_unknown_form_and_empty_objective_are_rejected():
    p = gen_sphere_instance(1, seed=0)
    with pytest.raises(ValueError, match="unknown form"):
        assemble_hsos(p, 2, "fancy")
    zero = CPolynomial(s=1, terms={})
    empty = CPOP(s=1, f=zero, constraints=p.constraints)
    with pytest.raises(ValueError, match="empty"):
        assemble_hsos(empty, 2, "dualview")


# ---------------------------------------------------------------- redundancy


def evaluate_entries(entries, Xs):
    return sum(
        c * (Xs[b][i, j] + Xs[b][j, i] if i != j else Xs[b][i, i])
        for b, i, j, c in entries
    )


def diagonal_imag_functionals(p, d, adder):
    data = build_data_matrices(p, d)
    dims = data.block_dims
    out = []
    for beta in data.bases[0].exponents:
        acc = {}
        for blk, pb, qb, c in data.entries.get((beta, beta), ()):
            adder(acc, blk, dims[blk], pb, qb, c.real, c.imag)
        out.append(
            accumulate_entries((b, i, j, c) for (b, i, j), c in acc.items())
        )
    return dims, out


def test_omitted_diagonal_imaginary_functionals_vanish_dualview():
    # In the split-view pairing the symmetric part of X3 never enters, so
    # the diagonal imaginary functionals cancel coefficient by coefficient
    # and evaluate to zero on any symmetric assignment.
    rng = np.random.default_rng(7)
    for seed in range(3):
        p = gen_sphere_instance(2, seed=seed)
        assert any(
            abs(c.imag) > 1e-3 for c in p.f.terms.values()
        ), "instance is not genuinely complex"
        dims, funs = diagonal_imag_functionals(p, 2, add_dualview_imag)
        mats = []
        for _ in range(20):
            row = [rng.standard_normal((2 * w, 2 * w)) for w in dims]
            mats.append([m + m.T for m in row])
        for folded in funs:
            assert folded == ()
            for Xs in mats:
                assert abs(evaluate_entries(folded, Xs)) <= 1e-12


def test_omitted_diagonal_imaginary_functionals_vanish_naive():
    # The doubled form keeps entries in the off-diagonal quadrant, so the
    # functional is only redundant together with the structural rows: it
    # must vanish on every structured assignment [[R, -I], [I, R]].
    rng = np.random.default_rng(17)
    for seed in range(3):
        p = gen_sphere_instance(2, seed=seed)
        dims, funs = diagonal_imag_functionals(p, 2, add_naive_imag)
        mats = []
        for _ in range(20):
            row = []
            for w in dims:
                R = rng.standard_normal((w, w))
                R = R + R.T
                I = rng.standard_normal((w, w))
                I = I - I.T
                row.append(np.block([[R, -I], [I, R]]))
            mats.append(row)
        for folded in funs:
            for Xs in mats:
                assert abs(evaluate_entries(folded, Xs)) <= 1e-12


def test_full_pair_row_set_gives_same_optimum():
    for form in ("naive", "dualview"):
        p = gen_unitnorm_instance(2, seed=2)
        lean = solve(assemble_hsos(p, 2, form, halve=True).program, OPTS)
        full = solve(assemble_hsos(p, 2, form, halve=False).program, OPTS)
        assert lean.status == "optimal"
        assert full.status == "optimal"
        assert abs(lean.objective - full.objective) <= 1e-6 * (
            1 + abs(lean.objective)
        )


# ---------------------------------------------------------------- size report


SPHERE_SIZES = {
    (5, 2): (42, 441, 966),
    (7, 2): (72, 1296, 2736),
    (9, 2): (110, 3025, 6270),
    (11, 2): (156, 6084, 12480),
    (13, 2): (210, 11025, 22470),
    (15, 2): (272, 18496, 37536),
    (5, 3): (112, 3136, 6846),
    (7, 3): (240, 14400, 30372),
}


def test_size_report_published_sphere_numbers():
    for (s, d), (n_sdp, m_dv, m_nv) in SPHERE_SIZES.items():
        rep = size_report(gen_sphere_instance(s, seed=0), d)
        assert rep["n_sdp"] == n_sdp
        assert rep["m_dualview"] == m_dv
        assert rep["m_naive"] == m_nv
        assert rep["t"] == 1
        assert rep["t_expanded"] == 2


def test_size_report_counts_unitnorm_constraints():
    rep = size_report(gen_unitnorm_instance(3, seed=1), 2)
    w = math.comb(5, 2)
    wi = math.comb(4, 1)
    assert rep["n_sdp"] == 2 * w
    assert rep["m_dualview"] == w * w
    assert rep["m_naive"] == 2 * w * w + 2 * w + 3 * wi * (wi + 1)
    assert rep["t"] == 3
    assert rep["t_expanded"] == 6


# ---------------------------------------------------------------- moments


def test_extract_moments_normalized_and_psd():
    p = gen_unitnorm_instance(1, seed=6)
    art = assemble_hsos(p, 2, "dualview")
    res = solve(art.program, OPTS)
    assert res.status == "optimal"
    y = extract_moments(art, res)
    assert y[((0,), (0,))] == 1.0 + 0j
    # |z|^2 = 1 forces the degree-(1,1) moment of any representing measure
    assert abs(y[((1,), (1,))] - 1.0) <= 1e-5
    M = moment_matrix(y, monomial_basis(1, 2)).to_complex()
    eigs = np.linalg.eigvalsh(M)
    assert eigs[0] >= -1e-6 * max(1.0, eigs[-1])


def test_extract_moments_conjugate_structure():
    p = gen_sphere_instance(2, seed=8)
    art = assemble_hsos(p, 2, "naive")
    res = solve(art.program, OPTS)
    assert res.status == "optimal"
    y = extract_moments(art, res)
    for (b, g), v in y.items():
        assert y[(g, b)] == np.conj(v)
        if b == g:
            assert v.imag == 0.0


def test_extract_moments_requires_optimal_status():
    p = gen_sphere_instance(1, seed=0)
    art = assemble_hsos(p, 2, "dualview")
    res = solve(art.program, SolverOptions(max_iter=1))
    assert res.status != "optimal"
    with pytest.raises(ValueError, match="optimal"):
        extract_moments(art, res)


def test_relaxation_bounds_tighten_with_order():
    p = gen_sphere_instance(1, seed=5)
    vals = []
    for d in (2, 3):
        res = solve(assemble_hsos(p, d, "dualview").program, OPTS)
        assert res.status == "optimal"
        vals.append(res.objective)
    assert vals[0] <= vals[1] + 1e-6 * (1 + abs(vals[1]))
