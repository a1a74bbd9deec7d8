"""Independent checks on relaxation output.

Nothing here trusts the assembly or the solver: upper bounds come from
direct feasible-point sampling, univariate unit-modulus problems get a
dense phase grid, and the two assembled forms are solved side by side to
confirm they agree.  These are the oracles the test suite leans on.
"""

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .polynomials import CPOP, CPolynomial
from .program import LinearFunctional, RealConicProgram, Row
from .relaxation import assemble_hsos, size_report
from .solver import SolverOptions, solve

_GRID_CHUNK = 1_000_000


@dataclass(frozen=True)
class SampleReport:
    """Best feasible point found by direct sampling."""

    best_value: float
    best_point: np.ndarray
    samples: int
    seed: int

    def __post_init__(self) -> None:
        pt = np.asarray(self.best_point, dtype=complex)
        if pt.ndim != 1 or pt.size == 0:
            raise ValueError("best_point must be a nonempty complex vector")
        if not np.isfinite(pt).all():
            raise ValueError("best_point contains non-finite entries")
        if not np.isfinite(self.best_value):
            raise ValueError("best_value is not finite")
        if self.samples < 1:
            raise ValueError("sample count must be positive")
        object.__setattr__(self, "best_point", pt)
        object.__setattr__(self, "best_value", float(self.best_value))


def _modulus_pattern(g: CPolynomial) -> int | None:
    # |z_i|^2 = 1 up to a nonzero scalar: returns i, else None
    zero = (0,) * g.s
    keys = set(g.terms)
    if len(keys) != 2 or (zero, zero) not in keys:
        return None
    (beta, gamma), = keys - {(zero, zero)}
    if beta != gamma or sum(beta) != 1:
        return None
    if g.terms[(beta, gamma)] != -g.terms[(zero, zero)]:
        return None
    return beta.index(1)


def _sphere_pattern(g: CPolynomial) -> bool:
    # sum_i |z_i|^2 = 1 up to a nonzero scalar
    zero = (0,) * g.s
    c0 = g.terms.get((zero, zero))
    if c0 is None or len(g.terms) != g.s + 1:
        return False
    for i in range(g.s):
        e = tuple(1 if k == i else 0 for k in range(g.s))
        if g.terms.get((e, e)) != -c0:
            return False
    return True


def sample_upper_bound(p: CPOP, n_samples: int, seed: int) -> SampleReport:
    """Best objective value over random feasible points.

    Only constraint families whose feasible set admits direct sampling are
    supported: the unit sphere (normalize a complex Gaussian vector) and
    per-variable unit modulus (independent random phases).
    """
    if n_samples < 1:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    cons = p.constraints
    if len(cons) == 1 and cons[0][1] == "eq" and _sphere_pattern(cons[0][0]):
        pts = rng.standard_normal((n_samples, p.s)) + 1j * rng.standard_normal(
            (n_samples, p.s)
        )
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    elif (
        len(cons) == p.s
        and all(kind == "eq" for _, kind in cons)
        and sorted(
            filter(lambda i: i is not None, (_modulus_pattern(g) for g, _ in cons))
        )
        == list(range(p.s))
    ):
        pts = np.exp(2j * np.pi * rng.random((n_samples, p.s)))
    else:
        raise ValueError(
            "constraint family does not admit direct feasible sampling"
        )
    vals = p.f.eval_many(pts)
    best = int(np.argmin(vals))
    return SampleReport(
        best_value=float(vals[best]),
        best_point=pts[best],
        samples=n_samples,
        seed=seed,
    )


def grid_min_1d(p: CPOP, grid: int) -> float:
    """Minimum of f over z = exp(i*theta) on a uniform theta grid.

    Needs s = 1 with the single constraint |z_1|^2 = 1; refining the grid
    by an integer factor can only lower the result.
    """
    if p.s != 1:
        raise ValueError("grid search needs a univariate problem")
    if (
        len(p.constraints) != 1
        or p.constraints[0][1] != "eq"
        or _modulus_pattern(p.constraints[0][0]) != 0
    ):
        raise ValueError("grid search needs the single constraint |z_1|^2 = 1")
    if grid < 1:
        raise ValueError("grid must have at least one point")
    step = 2.0 * np.pi / grid
    best = np.inf
    for start in range(0, grid, _GRID_CHUNK):
        theta = step * np.arange(start, min(start + _GRID_CHUNK, grid))
        vals = p.f.eval_many(np.exp(1j * theta)[:, None])
        best = min(best, float(vals.min()))
    return best


_warmed = False


def _warm_solver() -> None:
    # First LAPACK call in a process pays one-time setup; keep it out of
    # the reported timings.
    global _warmed
    if _warmed:
        return
    tiny = RealConicProgram(
        psd_blocks=(2,),
        n_free=0,
        rows=(Row(entries=((0, 0, 0, 1.0), (0, 1, 1, 1.0)), rhs=1.0),),
        objective=LinearFunctional(entries=((0, 0, 0, 1.0),)),
        sense="minimize",
    )
    solve(tiny, SolverOptions(tol_gap=1e-6, tol_primal=1e-6, tol_dual=1e-6))
    _warmed = True


def compare_reformulations(
    p: CPOP,
    d: int,
    opts: SolverOptions | None = None,
    repeats: int = 3,
) -> dict:
    """Solve both assembled forms of the order-d relaxation side by side.

    Returns the two optima, their absolute difference, per-form statuses,
    and wall times (median over ``repeats`` identical solves, first-call
    library setup excluded).  Row counts echo size_report so table rows
    can be emitted without re-deriving them.
    """
    if repeats < 1:
        raise ValueError("repeats must be positive")
    rep = size_report(p, d)
    out = {
        "n_sdp": rep["n_sdp"],
        "m_naive": rep["m_naive"],
        "m_dualview": rep["m_dualview"],
    }
    _warm_solver()
    for form in ("naive", "dualview"):
        art = assemble_hsos(p, d, form)
        times = []
        res = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = solve(art.program, opts)
            times.append(time.perf_counter() - t0)
        out[f"opt_{form}"] = res.objective
        out[f"status_{form}"] = res.status
        out[f"time_{form}"] = statistics.median(times)
    out["abs_diff"] = abs(out["opt_naive"] - out["opt_dualview"])
    return out
