use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(sepkit::sepkit)(py);
        let globals = PyDict::new(py);
        globals.set_item("sepkit", module).unwrap();
        f(py, &globals);
    });
}

fn eval<'py>(py: Python<'py>, globals: &Bound<'py, PyDict>, code: &str) -> Bound<'py, PyAny> {
    let code = std::ffi::CString::new(code).unwrap();
    py.eval(&code, Some(globals), None).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn criteria_round_trip_through_python() {
    with_module(|py, g| {
        let margin: f64 = eval(py, g, "sepkit.criteria(sepkit.max_entangled(2), 'ppt')[0]['margin']").extract().unwrap();
        assert!((margin + 0.5).abs() < 1e-9);
        let passed: bool = eval(py, g, "sepkit.criteria(sepkit.tiles(), 'ppt')[0]['passed']").extract().unwrap();
        assert!(passed);
        let names: Vec<String> =
            eval(py, g, "[v['criterion'] for v in sepkit.criteria(sepkit.isotropic(2, 0.2), 'entropic')]").extract().unwrap();
        assert_eq!(names, ["entropic-2", "entropic-von-neumann"]);
    });
}

#[test]
fn matrices_cross_the_boundary_unchanged() {
    with_module(|py, g| {
        let d: f64 = eval(
            py,
            g,
            "(lambda r: sepkit.DensityMatrix(r.to_list(), 2, 3).trace_distance(r))(sepkit.DensityMatrix.from_spec('random:2:3:5'))",
        )
        .extract()
        .unwrap();
        assert_eq!(d, 0.0);
        let err: f64 = eval(
            py,
            g,
            "(lambda r: max(abs(a - b) for x, y in zip(sepkit.reconstruct_exact(r, 1), r.to_list()) for a, b in zip(x, y)))(sepkit.random_separable(2, 2, 3, 0))",
        )
        .extract()
        .unwrap();
        assert!(err < 1e-8);
    });
}

#[test]
fn errors_become_python_exceptions() {
    with_module(|py, g| {
        let code = std::ffi::CString::new("sepkit.DensityMatrix.from_spec('maxent:x')").unwrap();
        let err = py.eval(&code, Some(g), None).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let code = std::ffi::CString::new("sepkit.definetti_bound(4, 0, 1)").unwrap();
        assert!(py.eval(&code, Some(g), None).is_err());
    });
}
