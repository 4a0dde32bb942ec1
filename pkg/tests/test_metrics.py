import statistics
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bfselect.basis import BoxDomain
from bfselect.hgp import build_hgp, hgp_fit, hgp_predict
from bfselect.metrics import gaussian_kl, nlpd, relative_metric, rmse, time_predict
from bfselect.posterior import PredictiveDistribution
from bfselect.selection import dual_scores, select_top_k

finite = st.floats(-1e3, 1e3)
positive = st.floats(1e-3, 1e3)


def test_rmse_examples():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.58114, abs=1e-5)
    assert rmse([3.0, -1.0], [0.5, 2.0]) == rmse([0.5, 2.0], [3.0, -1.0])
    with pytest.raises(ValueError):
        rmse([], [])


def test_kl_examples():
    assert gaussian_kl(0.3, 2.0, 0.3, 2.0) == 0.0
    assert gaussian_kl(0.0, 1.0, 1.0, 1.0) == pytest.approx(0.5)
    # closed form 0.5 log(1/2) + 2/2 - 1/2, evaluated independently
    assert gaussian_kl(0.0, 2.0, 0.0, 1.0) == pytest.approx(0.1534264097200273, abs=1e-12)
    with pytest.raises(ValueError):
        gaussian_kl(0.0, 0.0, 0.0, 1.0)


@given(m1=finite, v1=positive, m2=finite, v2=positive)
def test_kl_non_negative_and_zero_iff_equal(m1, v1, m2, v2):
    kl = gaussian_kl(m1, v1, m2, v2)
    assert kl >= 0.0
    if m1 == m2 and v1 == v2:
        assert kl <= 1e-12


def test_nlpd_examples():
    pred = PredictiveDistribution([0.4, -1.0], np.full(2, 1 / (2 * np.pi)))
    assert nlpd(pred, [0.4, -1.0]) == pytest.approx(0.0, abs=1e-15)
    assert nlpd(PredictiveDistribution([0.0], [1.0]), [0.0]) == pytest.approx(0.918939, abs=1e-6)
    a = nlpd(PredictiveDistribution([0.0], [0.5]), [0.1])
    b = nlpd(PredictiveDistribution([0.0], [0.5]), [0.3])
    assert b > a
    with pytest.raises(ValueError):
        nlpd(pred, [0.0])


def test_nlpd_floors_zero_variance(caplog):
    value = nlpd(PredictiveDistribution([0.0], [0.0]), [0.0])
    assert np.isfinite(value)
    assert "flooring" in caplog.text


@given(mu=finite, target=finite, v=positive)
def test_nlpd_minimised_at_target(mu, target, v):
    at = nlpd(PredictiveDistribution([target], [v]), [target])
    assert nlpd(PredictiveDistribution([mu], [v]), [target]) >= at


def test_relative_metric_examples():
    assert relative_metric(3.0, 3.0) == 1.0
    assert relative_metric(4.0, 2.0) == 2.0
    assert relative_metric(-1.0, -2.0) == 0.5
    assert relative_metric(1.0, 0.0) is None
    assert relative_metric(1.0, 5e-10) is None


@given(x=st.floats(-1e6, 1e6).filter(lambda v: abs(v) > 1e-6))
def test_relative_metric_identity(x):
    assert relative_metric(x, x) == 1.0


def test_negative_variances_are_clamped():
    pred = PredictiveDistribution([0.0, 0.0], [-1e-17, 0.2])
    assert pred.variances.tolist() == [0.0, 0.2]


def test_time_predict_no_op_and_median(monkeypatch):
    assert time_predict(lambda: None, 5) < 1e-3
    with pytest.raises(ValueError):
        time_predict(lambda: None, 0)

    # warm-up, then runs taking 3, 1, 2 units: the median is the 2-unit run
    ticks = iter([0.0, 3.0, 10.0, 11.0, 20.0, 22.0])
    monkeypatch.setattr(time, "perf_counter", lambda: next(ticks))
    calls = []
    assert time_predict(lambda: calls.append(1), 3) == 2.0
    assert len(calls) == 4


def test_reduced_cost_grows_with_kept_count():
    model = build_hgp(BoxDomain.cube(-2, 2, 3), [12, 12, 12], 0.05, 0.1, 0.01)
    Xs = np.random.default_rng(0).uniform(-1, 1, size=(1000, 3))
    medians = {64: [], 256: [], 1024: []}
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-1, 1, size=(300, 3))
        dual = hgp_fit(model, X, rng.normal(size=300) * 0.2)
        for k in medians:
            sel = select_top_k(dual_scores(dual), k)
            medians[k].append(time_predict(lambda: hgp_predict(model, dual, Xs, sel), 3))
    t = [statistics.median(medians[k]) for k in (64, 256, 1024)]
    assert t[0] <= t[1] <= t[2]
