"""Problem file save/load round trips and schema validation."""

import json

import pytest

from realify.polynomials import gen_sphere_instance, gen_unitnorm_instance
from realify.problem_io import (
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)


def test_round_trip_is_exact(tmp_path):
    for p in (gen_sphere_instance(3, seed=5), gen_unitnorm_instance(2, seed=1)):
        path = tmp_path / "p.json"
        save_problem(p, path)
        q = load_problem(path)
        assert q.s == p.s
        assert q.f.terms == p.f.terms
        assert len(q.constraints) == len(p.constraints)
        for (g1, k1), (g2, k2) in zip(q.constraints, p.constraints):
            assert k1 == k2
            assert g1.terms == g2.terms


def test_save_is_deterministic(tmp_path):
    p = gen_sphere_instance(2, seed=7)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_problem(p, a)
    save_problem(p, b)
    assert a.read_bytes() == b.read_bytes()


def test_half_stored_terms_are_completed_with_warning():
    data = {
        "format": "cpop",
        "version": 1,
        "s": 1,
        "objective": [
            {"beta": [0], "gamma": [1], "re": 0.5, "im": -2.0},
            {"beta": [1], "gamma": [1], "re": 1.0, "im": 0.0},
        ],
        "constraints": [
            {
                "kind": "eq",
                "terms": [
                    {"beta": [1], "gamma": [1], "re": 1.0, "im": 0.0},
                    {"beta": [0], "gamma": [0], "re": -1.0, "im": 0.0},
                ],
            }
        ],
    }
    with pytest.warns(UserWarning, match="one triangle"):
        p = problem_from_dict(data)
    assert p.f.terms[((1,), (0,))] == 0.5 + 2.0j
    assert p.f.terms[((0,), (1,))] == 0.5 - 2.0j


def test_full_maps_load_without_warning(tmp_path):
    p = gen_unitnorm_instance(1, seed=0)
    path = tmp_path / "p.json"
    save_problem(p, path)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_problem(path)


def test_schema_rejections():
    good = problem_to_dict(gen_sphere_instance(1, seed=0))
    for mangle, msg in (
        (lambda d: d.update(format="other"), "not a cpop"),
        (lambda d: d.update(version=2), "version"),
        (lambda d: d.update(s="3"), "positive integer"),
        (lambda d: d.update(objective={}), "must be a list"),
        (
            lambda d: d["objective"].append(dict(d["objective"][0])),
            "duplicate",
        ),
        (
            lambda d: d["objective"][0].pop("im"),
            "beta, gamma, re, im",
        ),
        (
            lambda d: d["constraints"][0].update(kind="le"),
            "unknown constraint kind",
        ),
    ):
        data = json.loads(json.dumps(good))
        mangle(data)
        with pytest.raises(ValueError, match=msg):
            problem_from_dict(data)


def test_malformed_json_reports_cleanly(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="malformed"):
        load_problem(path)


def test_inconsistent_mirror_is_rejected():
    data = problem_to_dict(gen_sphere_instance(1, seed=0))
    recs = data["objective"]
    flipped = False
    for rec in recs:
        if rec["beta"] != rec["gamma"]:
            rec["im"] += 1.0
            flipped = True
            break
    assert flipped
    with pytest.raises(ValueError, match="Hermitian"):
        problem_from_dict(data)