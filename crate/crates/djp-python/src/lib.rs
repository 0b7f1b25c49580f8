use pyo3::prelude::*;

#[pymodule]
fn djp_python(_py: Python<'_>, _m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
