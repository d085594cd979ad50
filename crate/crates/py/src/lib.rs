//! Python module `wds`. Structured results come back as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use wds_core::angle::Angle;
use wds_core::circle::{DenjoyMap, DEFAULT_CUTOFF};
use wds_core::horseshoe::containment::theorem_run;
use wds_core::horseshoe::{build_horseshoe, saddle_charts, HorseshoeCertificate, HorseshoeParams};
use wds_core::symbolic;
use wds_core::twist::{self, Branch};
use wds_core::wds as family;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn angle(s: &str) -> PyResult<Angle> {
    s.parse().map_err(err)
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(err)
}

/// Symbols of the coding window `k = -radius..=radius`.
#[pyfunction]
#[pyo3(signature = (alpha, radius, theta = "0"))]
fn sturmian_window(alpha: &str, radius: usize, theta: &str) -> PyResult<Vec<u8>> {
    let w = symbolic::sturmian_window(&angle(alpha)?, &angle(theta)?, radius).map_err(err)?;
    Ok(w.symbols().to_vec())
}

/// Number of distinct length-`n` factors of the window.
#[pyfunction]
fn complexity(alpha: &str, radius: usize, n: usize) -> PyResult<usize> {
    let w = symbolic::sturmian_window(&angle(alpha)?, &Angle::zero(), radius).map_err(err)?;
    symbolic::complexity(&w, n).map_err(err)
}

/// Farey interval `(lower, upper)` as `p/q` strings.
#[pyfunction]
fn rotation_interval(alpha: &str, radius: usize) -> PyResult<(String, String)> {
    let w = symbolic::sturmian_window(&angle(alpha)?, &Angle::zero(), radius).map_err(err)?;
    let iv = symbolic::estimate_rotation_interval(&w).map_err(err)?;
    Ok((iv.lower.to_string(), iv.upper.to_string()))
}

#[pyfunction]
#[pyo3(signature = (alpha, x0, n, cutoff = DEFAULT_CUTOFF))]
fn denjoy_orbit(alpha: &str, x0: f64, n: usize, cutoff: usize) -> PyResult<Vec<f64>> {
    Ok(DenjoyMap::build(angle(alpha)?, cutoff).map_err(err)?.orbit(x0, n))
}

#[pyfunction]
#[pyo3(signature = (alpha, n, cutoff = DEFAULT_CUTOFF))]
fn denjoy_rotation(alpha: &str, n: usize, cutoff: usize) -> PyResult<f64> {
    Ok(DenjoyMap::build(angle(alpha)?, cutoff).map_err(err)?.rotation_estimate(0.0, n))
}

/// Folded rotation class of the Sturmian system at `depth`.
#[pyfunction]
fn rotation_class(alpha: &str, depth: usize) -> PyResult<(String, String)> {
    let w = family::build_wds(&angle(alpha)?, depth).map_err(err)?;
    let c = family::rotation_class(&w).map_err(err)?;
    Ok((c.lower.to_string(), c.upper.to_string()))
}

#[pyfunction]
fn gap_orbit_count(alpha: &str, depth: usize) -> PyResult<usize> {
    Ok(family::gap_orbit_count(&family::build_wds(&angle(alpha)?, depth).map_err(err)?))
}

/// Distance between the circular order graphs of two rotation numbers.
#[pyfunction]
fn graph_distance(first: &str, second: &str, depth: usize) -> PyResult<f64> {
    let g = |a: &str| -> PyResult<family::CircularOrderGraph> {
        family::cylinder_order(&family::build_wds(&angle(a)?, depth).map_err(err)?).map_err(err)
    };
    Ok(family::graph_hausdorff(&g(first)?, &g(second)?).map_err(err)?.to_f64())
}

#[pyfunction]
fn standard_map(k: f64, x: f64, y: f64) -> PyResult<(f64, f64)> {
    let (_, tm) = twist::standard_family(k).map_err(err)?;
    let [x, y] = tm.forward([x, y]);
    Ok((x, y))
}

/// Points of the Aubry-Mather approximation with the given heteroclinic branch.
#[pyfunction]
#[pyo3(signature = (k, p, q, branch = "plus"))]
fn aubry_mather(k: f64, p: i64, q: usize, branch: &str) -> PyResult<Vec<(f64, f64)>> {
    let branch: Branch = branch.parse().map_err(err)?;
    let (gf, _) = twist::standard_family(k).map_err(err)?;
    let am = twist::assemble_am_set(&gf, p, q, branch).map_err(err)?;
    Ok(am.points.iter().map(|z| (z[0], z[1])).collect())
}

#[pyfunction]
#[pyo3(signature = (k, p, q, radius = 1e-3))]
fn hyperbolicity(k: f64, p: i64, q: usize, radius: f64) -> PyResult<String> {
    let (gf, tm) = twist::standard_family(k).map_err(err)?;
    let c = twist::minimize_periodic(&gf, p, q).map_err(err)?;
    json(&twist::hyperbolicity_report(&tm, &twist::periodic_points(&gf, &c), radius).map_err(err)?)
}

/// Certificate JSON of the horseshoe around the `(p, q)` saddle orbit.
#[pyfunction]
fn horseshoe_certificate(k: f64, p: i64, q: usize) -> PyResult<String> {
    let build = build_horseshoe(k, p, q, &HorseshoeParams::default()).map_err(err)?;
    json(&build.certificate)
}

/// Containment report JSON for periodic orbits of rotation `p/q` in `omegas`.
#[pyfunction]
fn verify_containment(certificate: &str, omegas: Vec<(i64, usize)>) -> PyResult<String> {
    let cert: HorseshoeCertificate = serde_json::from_str(certificate).map_err(err)?;
    let (_, tm) = twist::standard_family(cert.k).map_err(err)?;
    let charts = saddle_charts(&tm, cert.p, cert.q).map_err(err)?;
    json(&theorem_run(&tm, &charts, &cert, &omegas))
}

#[pymodule]
fn wds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(sturmian_window, m)?)?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_interval, m)?)?;
    m.add_function(wrap_pyfunction!(denjoy_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(denjoy_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_class, m)?)?;
    m.add_function(wrap_pyfunction!(gap_orbit_count, m)?)?;
    m.add_function(wrap_pyfunction!(graph_distance, m)?)?;
    m.add_function(wrap_pyfunction!(standard_map, m)?)?;
    m.add_function(wrap_pyfunction!(aubry_mather, m)?)?;
    m.add_function(wrap_pyfunction!(hyperbolicity, m)?)?;
    m.add_function(wrap_pyfunction!(horseshoe_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_containment, m)?)?;
    Ok(())
}
