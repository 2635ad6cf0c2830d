use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(fch_pearl_py::fch_pearl_py)(py);
        let locals = PyDict::new(py);
        locals.set_item("fp", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, Some(&locals), None).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn well_and_profile_round_trip() {
    with_module(
        r#"
w = fp.Well(m=1.5)
assert abs(w.dw(0.0)) < 1e-15
b = fp.Bilayer(w)
assert len(b.r) == len(b.u0) == 2049
assert abs(b.lambda0 - 0.874104173270964) < 1e-9
t = b.coefficients(1.0, 1.0, 2.0)
assert abs(t["alpha0"] - (t["alpha01"] - t["alpha02"] * t["eta_d"])) < 1e-12
"#,
    );
}

#[test]
fn normal_form_orbit_and_integrals() {
    with_module(
        r#"
c = {"epsilon": 0.1, "omega1": 0.2, "omega2": -0.4, "alpha0": 0.4, "alpha2": 0.5}
o = fp.pnf_orbit(c, 0.1)
s = fp.shoot_orbit(c, 0.1)
assert abs(o["period"] - s["period"]) < 1e-8
k, h = fp.first_integrals(c, [0.1, 0.0, 0.0, 0.02, 0, 0, 0, 0])
assert abs(k - 0.002) < 1e-15
"#,
    );
}

#[test]
fn rejects_bad_input() {
    with_module(
        r#"
try:
    fp.pnf_orbit({"epsilon": 0.1, "alpha0": -0.1}, 0.1)
    raise AssertionError("expected an error")
except RuntimeError as e:
    assert "no pearling" in str(e)
try:
    fp.pnf_orbit({"epsilon": 0.1, "alpha99": 1.0}, 0.1)
    raise AssertionError("expected an error")
except ValueError:
    pass
try:
    fp.run_command("nonsense")
    raise AssertionError("expected an error")
except ValueError:
    pass
"#,
    );
}

#[test]
fn model_energy_and_mass() {
    with_module(
        r#"
import math
w = fp.Well()
n = 32
m = fp.FchModel(w, 0.1, 1.0, 2.0, n, n, 0.8, 0.8)
u = [-1.0 + 0.1 * math.cos(2 * math.pi * (k % n) / n) for k in range(n * n)]
v = m.step(u, 1e-3, 7.5)
assert abs(sum(v) - sum(u)) < 1e-10
assert m.energy(v) <= m.energy(u)
"#,
    );
}
