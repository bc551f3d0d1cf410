import json
import math

import jsonschema
import pytest

import epidelay


@pytest.fixture(scope="module")
def linelist():
    return epidelay.simulate("lognormal", (1.0, 0.5), 600, r=0.1, observation_time=30.0,
                             seed=3, strata={"sex": ["f", "m"]})


def test_moment_matching_round_trip():
    d = epidelay.params_from_summary("gamma", 5.0, 2.0)
    assert d.family == "gamma"
    assert math.isclose(d.mean(), 5.0, rel_tol=1e-12)
    assert math.isclose(d.sd(), 2.0, rel_tol=1e-12)
    assert math.isclose(d.cdf(d.quantile(0.3)), 0.3, rel_tol=1e-10)


def test_decision_tree():
    assert epidelay.decide_adjustments(real_time=True).describe() == \
        "{double_censoring, right_truncation}"
    assert epidelay.decide_adjustments().describe() == "{double_censoring}"
    with pytest.raises(epidelay.ValidationError):
        epidelay.decide_adjustments(backward=True)
    with pytest.raises(epidelay.ValidationError):
        epidelay.Adjustments(truncation=True, dynamical=0.1)


def test_linelist_csv_round_trip(linelist):
    again = epidelay.parse_linelist(linelist.to_csv(), observation_time=30.0)
    assert len(again) == len(linelist)
    assert again.data_hash() == linelist.data_hash()


def test_fit_and_report(linelist):
    adj = epidelay.Adjustments(truncation=True)
    fit = epidelay.fit(linelist, "lognormal", adj)
    assert fit.converged
    mean = fit.mean
    assert mean["lower"] < mean["point"] < mean["upper"]
    assert abs(mean["point"] - math.exp(1.125)) < 0.5
    unadj = epidelay.fit(linelist, "lognormal")
    fits = [epidelay.fit(linelist, f, adj) for f in ("gamma", "lognormal")]
    other = epidelay.fit(epidelay.simulate("gamma", (3.0, 1.0), 200, seed=9), "gamma")
    bare = epidelay.report(fit, linelist)
    assert set(bare.missing) == {"adjust_biases", "compare_distributions", "other_intervals",
                                 "multiple_exposures", "data_code"}
    rep = epidelay.report(fit, linelist, unadjusted=unadj, comparison=fits,
                          other={"onset to report": other},
                          exposure_note="One exposure window.", data_reference="data.csv")
    assert rep.score == 1.0
    assert rep.missing == []
    doc = json.loads(rep.to_json())
    with open(epidelay.report_schema_path()) as fh:
        jsonschema.validate(doc, json.load(fh))
    assert epidelay.report_from_json(rep.to_json()) == rep
    assert "## Quantiles" in rep.to_markdown()


def test_fit_json_round_trip(linelist):
    fit = epidelay.fit(linelist, "gamma")
    back = epidelay.fit_from_json(fit.to_json())
    assert back.distribution == fit.distribution
    assert back.mean == fit.mean


def test_compare_ranks_by_aic(linelist):
    fits = [epidelay.fit(linelist, f) for f in ("gamma", "lognormal", "weibull")]
    rows = epidelay.compare(fits)
    assert [r["rank"] for r in rows] == [1, 2, 3]
    assert rows[0]["delta"] == 0.0


def test_mcmc_is_seeded(linelist):
    a = epidelay.fit(linelist, "gamma", method="mcmc", chains=2, warmup=200, samples=200, seed=7)
    b = epidelay.fit(linelist, "gamma", method="mcmc", chains=2, warmup=200, samples=200, seed=7)
    assert a.to_json() == b.to_json()
    assert a.waic is not None


def test_invalid_input_raises():
    with pytest.raises(epidelay.ValidationError):
        epidelay.Distribution("gamma", -1.0, 1.0)
    with pytest.raises(epidelay.ValidationError):
        epidelay.parse_linelist("id,primary_window,secondary_window\na,5,2\n")
