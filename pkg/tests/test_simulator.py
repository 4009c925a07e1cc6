import csv
import io
import json
import math

import numpy as np
import pytest

from compdof.channel_core import sample_channel
from compdof.exceptions import ArgumentError
from compdof.ia_closed_form import closed_form_beams
from compdof.simulator import (
    LinkBudget,
    SweepResult,
    estimate_dof_slope,
    export,
    from_json,
    sinr,
    snr_gap_db,
    sum_rate,
    sweep,
    to_csv,
    to_json,
    trial_seed,
    zf_broadcast_beams,
)
from compdof.smd import BeamPair


def one_by_one(h, v, u):
    ones = np.ones((1, 1), dtype=np.int8)
    return np.array([[h]], dtype=complex), BeamPair(np.array([[v]], dtype=complex), np.array([[u]], dtype=complex), ones, ones)


def test_single_user_closed_form():
    H, beams = one_by_one(0.6 - 0.8j, 2.0 + 1j, -3j)
    for snr_db in (0.0, 10.0, 27.0):
        P = 10 ** (snr_db / 10)
        assert sinr(H, beams, snr_db)[0] == pytest.approx(P * 1.0)
        assert sum_rate(H, beams, snr_db) == pytest.approx(math.log2(1 + P))


def test_zero_power_gives_zero_rate():
    H = sample_channel(3, 1, 0).matrix(1)
    assert sum_rate(H, zf_broadcast_beams(H), -400.0) == pytest.approx(0.0, abs=1e-30)


def test_rate_is_invariant_to_beam_scaling():
    H = sample_channel(4, 1, 2).matrix(1)
    b = closed_form_beams(H)
    scaled = BeamPair(b.V * (3 - 2j), b.U * 0.01j, b.Vbar, b.Ubar)
    assert sum_rate(H, scaled, 20.0) == pytest.approx(sum_rate(H, b, 20.0), rel=1e-12)


def test_power_constraint_is_tight():
    H = sample_channel(3, 1, 5).matrix(1)
    b = zf_broadcast_beams(H)
    # interference-free: SINR_k = P |E_kk|^2 / (load ||u_k||^2)
    load = np.max(np.sum(np.abs(b.V) ** 2, axis=1))
    np.testing.assert_allclose(sinr(H, b, 10.0), 10.0 / load)


def test_trial_seed_is_stable():
    assert trial_seed(0, 0) == trial_seed(0, 0)
    assert len({trial_seed(0, t) for t in range(50)}) == 50
    assert trial_seed(1, 3) != trial_seed(1, 3, attempt=1)


def small_budget(**kw):
    base = dict(K=3, snr_db=(0, 20, 40, 60), trials=20, seed=3)
    base.update(kw)
    return LinkBudget(**base)


def test_sweep_is_deterministic_and_monotone():
    a, b = sweep(small_budget()), sweep(small_budget())
    assert to_json(a) == to_json(b)
    for s in ("zf", "cf"):
        assert np.all(np.diff(a.curve(s)) > 0)
    assert a.metadata["patterns"]["cf"] == {"Mt": 2, "Mr": 2}


def test_best_policy_dominates_fixed():
    fixed = sweep(small_budget(schemes=("cf",)))
    best = sweep(small_budget(schemes=("cf",), eig_policy="best"))
    assert np.all(best.curve("cf") >= fixed.curve("cf") - 1e-9)


def test_smd_scheme_runs():
    res = sweep(small_budget(schemes=("zf", "smd"), Mt=2, Mr=2, trials=5))
    assert res.curve("smd").shape == (4,)


def test_slope_on_synthetic_curve():
    x = (40.0, 50.0, 60.0)
    y = tuple(3 * math.log2(10 ** (v / 10)) + 1.5 for v in x)
    r = SweepResult(x, {"a": y}, {"a": (0.0,) * 3})
    assert estimate_dof_slope(r, "a") == pytest.approx(3.0)
    with pytest.raises(ArgumentError):
        estimate_dof_slope(r, "a", window=(41, 49))


def test_gap_on_shifted_curves():
    x = tuple(float(v) for v in range(0, 65, 5))
    f = lambda d: tuple(3 * math.log2(1 + 10 ** ((v - d) / 10)) for v in x)
    r = SweepResult(x, {"good": f(0), "bad": f(3)}, {"good": (0,) * 13, "bad": (0,) * 13})
    assert snr_gap_db(r, "good", "bad") == pytest.approx(3.0, abs=1e-2)


def test_gap_between_schemes_is_moderate():
    res = sweep(small_budget(snr_db=tuple(range(0, 65, 5)), trials=40))
    gap = snr_gap_db(res, "zf", "cf")
    assert 1.0 <= gap <= 6.0


def test_serialization_round_trip(tmp_path):
    res = sweep(small_budget(trials=4))
    text = to_json(res)
    back = from_json(text)
    assert to_json(back) == text
    assert back.mean == res.mean and back.snr_db == res.snr_db
    export(res, "csv", tmp_path / "r.csv")
    rows = list(csv.DictReader(io.StringIO((tmp_path / "r.csv").read_text())))
    assert len(rows) == 2 * 4
    assert set(rows[0]) == {"scheme", "snr_db", "mean_sum_rate", "stddev", "trials"}
    assert rows[0]["trials"] == "4"
    assert float(rows[0]["mean_sum_rate"]) == res.mean["zf"][0]
    export(res, "JSON", tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["metadata"]["trials"] == 4
    with pytest.raises(ArgumentError):
        export(res, "xml", tmp_path / "r.xml")


@pytest.mark.parametrize("kw", [
    dict(K=2), dict(schemes=("zf", "zf")), dict(schemes=("foo",)), dict(snr_db=(10, 5)),
    dict(eig_policy="worst"), dict(schemes=("smd",)), dict(schemes=("smd",), Mt=1, Mr=2), dict(trials=0),
])
def test_budget_validation(kw):
    with pytest.raises(ArgumentError):
        small_budget(**kw)
