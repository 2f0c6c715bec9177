use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "gridcast_py")?;
        gridcast_py::init_module(&m)?;
        let globals = PyDict::new(py);
        globals.set_item("gc", m)?;
        py.run(&std::ffi::CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn scalar_functions_round_trip() {
    run(r#"
import math
assert math.isclose(gc.boxcox_inverse(gc.boxcox(50.0, 0.1), 0.1), 50.0, rel_tol=1e-12)
assert gc.npv([1.0, 2.0], 0.0) == 3.0
assert gc.metrics([0.0, 2.0], [1.0, 2.0])["mae"] == 0.5
"#)
    .unwrap();
}

#[test]
fn train_returns_pooled_forecasts() {
    run(r#"
s = gc.DemandSeries.synth(seed=1, n_days=450)
r = gc.train(s, "ols", "2012-02-01")
assert len(r["hourly"]) == 24 and r["metrics"]["n"] == len(r["pooled"])
"#)
    .unwrap();
}

#[test]
fn errors_surface_as_value_error() {
    run(r#"
try:
    gc.Distribution.fit([1.0, 2.0, 3.0], "no_family")
except ValueError:
    pass
else:
    raise AssertionError
"#)
    .unwrap();
}
