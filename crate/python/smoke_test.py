"""Smoke test for the gridcast_py extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/gridcast-*.whl
"""

import math

import gridcast_py as gc


def main():
    series = gc.DemandSeries.synth(seed=3, n_days=500)
    assert len(series) == 500 * 24
    assert series.timestamps[0] == "2011-01-01T00:00:00"

    run = gc.train(series, "ridge", "2012-03-01", params={"lambda": 1.0})
    assert run["metrics"]["n"] == len(run["pooled"]) > 0
    assert len(run["hourly"]) == 24
    print(f"ridge MAE {run['metrics']['mae']:.1f} MWh on {run['metrics']['n']} forecasts")

    online = gc.train(series, "passive_aggressive", "2012-03-01")
    print(f"passive-aggressive MAE {online['metrics']['mae']:.1f} MWh")

    residuals = [p["residual"] for p in run["pooled"]]
    rep = gc.reserve(residuals)
    assert 0.0 <= rep["frac_within_avg"] <= rep["frac_within_max"] <= 1.0

    best = gc.Distribution.select_best(residuals, ["normal", "laplace", "logistic"])
    assert best.family in {"normal", "laplace", "logistic"}
    again = gc.Distribution.from_json(best.to_json())
    assert again.params == best.params
    print(f"best residual family {best.family} {best.params}")

    draws = gc.Distribution.normal(0.0, 2500.0).sample(7, 8760)
    frac = gc.reserve(draws, 6000.0, 2000.0)["frac_within_max"]
    assert 0.975 <= frac <= 0.995, frac

    m = gc.metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert math.isclose(m["mae"], 1.0 / 3.0)

    for lam in (1.0, 0.1, 0.0):
        assert math.isclose(gc.boxcox_inverse(gc.boxcox(1234.5, lam), lam), 1234.5, rel_tol=1e-12)

    assert math.isclose(gc.npv([-100.0, 60.0, 60.0], 0.0), 20.0)
    d = gc.dispatch([(30.0, 100.0), (10.0, 50.0)], 120.0)
    assert d["dispatch_mw"] == [70.0, 50.0] and d["clearing_price"] == 30.0

    base = gc.simulate(seed=1, start_year=2020, end_year=2022)
    same = gc.simulate(seed=1, normal_sd=0.0, start_year=2020, end_year=2022)
    assert base == same
    rows = gc.sensitivity(sigmas=[0.0, 500.0], seeds=[0, 1], start_year=2020, end_year=2021)
    assert len(rows) == 3 and rows[0]["mean_dispatch_mwh"] == rows[1]["mean_dispatch_mwh"]
    print(f"simulated {len(base['years'])} years, mean carbon {base['mean_carbon_t']:.0f} t")

    try:
        gc.train(series, "no_such_learner", "2012-03-01")
    except ValueError as e:
        assert "no_such_learner" in str(e)
    else:
        raise AssertionError("unknown algorithm accepted")

    print("ok")


if __name__ == "__main__":
    main()
