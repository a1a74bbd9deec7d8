"""Problem interchange files.

A problem is stored as human-diffable JSON: variable count, objective
terms, and constraints, with each term a record
``{"beta": [...], "gamma": [...], "re": x, "im": y}``.  Coefficients are
plain JSON numbers written in shortest exact decimal form, so a load of a
saved file reproduces every double bit for bit.  Files may store only the
``beta <= gamma`` half of a term map; the loader completes the conjugate
half and warns.
"""

import json
import warnings

from .polynomials import CPOP, CPolynomial, Exponent

FORMAT_NAME = "cpop"
FORMAT_VERSION = 1


def _graded(e: Exponent) -> tuple:
    return (sum(e), e)


def _terms_to_records(terms: dict) -> list[dict]:
    records = []
    for beta, gamma in sorted(terms, key=lambda k: (_graded(k[0]), _graded(k[1]))):
        c = terms[(beta, gamma)]
        records.append(
            {
                "beta": list(beta),
                "gamma": list(gamma),
                "re": float(c.real),
                "im": float(c.imag),
            }
        )
    return records


def problem_to_dict(p: CPOP) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "s": p.s,
        "objective": _terms_to_records(p.f.terms),
        "constraints": [
            {"kind": kind, "terms": _terms_to_records(g.terms)}
            for g, kind in p.constraints
        ],
    }


def _records_to_terms(records, s: int, where: str) -> dict:
    if not isinstance(records, list):
        raise ValueError(f"{where}: terms must be a list")
    terms: dict = {}
    for rec in records:
        if not isinstance(rec, dict) or set(rec) != {"beta", "gamma", "re", "im"}:
            raise ValueError(
                f"{where}: each term needs exactly beta, gamma, re, im"
            )
        beta = tuple(rec["beta"])
        gamma = tuple(rec["gamma"])
        c = complex(float(rec["re"]), float(rec["im"]))
        if (beta, gamma) in terms:
            raise ValueError(f"{where}: duplicate term key {(beta, gamma)!r}")
        terms[(beta, gamma)] = c
    completed = False
    for (beta, gamma), c in list(terms.items()):
        if (gamma, beta) not in terms:
            terms[(gamma, beta)] = c.conjugate()
            completed = True
    if completed:
        warnings.warn(
            f"{where}: term map stored one triangle only; completed the "
            "conjugate half",
            stacklevel=2,
        )
    return terms


def problem_from_dict(data: dict) -> CPOP:
    if not isinstance(data, dict):
        raise ValueError("problem file must hold a JSON object")
    if data.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} problem file")
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"unsupported problem format version {data.get('version')!r}"
        )
    s = data.get("s")
    if not isinstance(s, int) or s < 1:
        raise ValueError("field s must be a positive integer")
    f = CPolynomial(s, _records_to_terms(data.get("objective"), s, "objective"))
    constraints = []
    raw = data.get("constraints")
    if not isinstance(raw, list):
        raise ValueError("constraints must be a list")
    for k, con in enumerate(raw):
        where = f"constraint {k}"
        if not isinstance(con, dict) or set(con) != {"kind", "terms"}:
            raise ValueError(f"{where}: needs exactly kind and terms")
        g = CPolynomial(s, _records_to_terms(con["terms"], s, where))
        constraints.append((g, con["kind"]))
    return CPOP(s=s, f=f, constraints=tuple(constraints))


def save_problem(p: CPOP, path) -> None:
    text = json.dumps(problem_to_dict(p), indent=1)
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def load_problem(path) -> CPOP:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed problem file: {exc}") from None
    return problem_from_dict(data)
