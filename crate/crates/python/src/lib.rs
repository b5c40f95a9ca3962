//! Python bindings. All values cross the boundary as JSON strings in the
//! same formats the CLI uses; rationals are strings like "1/2" or "inf".

use std::collections::BTreeMap;
use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pmod_core::complexes;
use pmod_core::decomposition;
use pmod_core::kan;
use pmod_core::metrics;
use pmod_core::module::{GridModule, ModuleMorphism, MorphismData};
use pmod_core::rational::{ExtRational, Rational};
use pmod_core::spacetime::FiniteMetricSpace;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(err)
}

fn emit<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// The interval module I[birth, death) over F_p, as module JSON.
#[pyfunction]
fn interval_module(p: u64, birth: &str, death: &str) -> PyResult<String> {
    let b = Rational::from_str(birth).map_err(err)?;
    let d = ExtRational::from_str(death).map_err(err)?;
    let m = GridModule::interval(p, b, d).map_err(err)?;
    Ok(emit(&m))
}

/// Block-diagonal direct sum of two modules.
#[pyfunction]
fn direct_sum(u: &str, v: &str) -> PyResult<String> {
    let u: GridModule = parse(u)?;
    let v: GridModule = parse(v)?;
    Ok(emit(&u.direct_sum(&v).map_err(err)?))
}

/// Persistence diagram of a module, as diagram JSON.
#[pyfunction]
fn barcode(module: &str) -> PyResult<String> {
    let m: GridModule = parse(module)?;
    Ok(emit(&decomposition::barcode(&m)))
}

/// Interleaving distance via the isometry theorem; "inf" when infinite.
#[pyfunction]
fn distance(u: &str, v: &str) -> PyResult<String> {
    let u: GridModule = parse(u)?;
    let v: GridModule = parse(v)?;
    Ok(metrics::interleaving_distance(&u, &v).map_err(err)?.to_string())
}

/// Interleaving distance by brute-force witness search.
#[pyfunction]
#[pyo3(signature = (u, v, budget = 1 << 20))]
fn oracle_distance(u: &str, v: &str, budget: u64) -> PyResult<String> {
    let u: GridModule = parse(u)?;
    let v: GridModule = parse(v)?;
    Ok(metrics::oracle_distance(&u, &v, budget as u128)
        .map_err(err)?
        .to_string())
}

/// Coherence check of a system JSON: (is_coherent, violations).
#[pyfunction]
fn verify_coherent(system: &str) -> PyResult<(bool, Vec<String>)> {
    let s: kan::CoherentSystem = parse(system)?;
    let report = kan::verify_coherent(&s);
    Ok((report.is_coherent(), report.violations))
}

/// The common-source system over a metric JSON: every point carries the
/// module and all morphisms are the canonical shifts.
#[pyfunction]
fn common_source_system(metric: &str, module: &str) -> PyResult<String> {
    let space: FiniteMetricSpace = parse(metric)?;
    let m: GridModule = parse(module)?;
    Ok(emit(&kan::CoherentSystem::common_source(space, m).map_err(err)?))
}

/// Kan extension of a coherent system to a larger metric space.
/// Mode is "lan", "ran" or "image".
#[pyfunction]
fn extend_system(system: &str, metric: &str, mode: &str) -> PyResult<String> {
    let s: kan::CoherentSystem = parse(system)?;
    let m: FiniteMetricSpace = parse(metric)?;
    let mode = kan::ExtensionMode::from_str(mode).map_err(err)?;
    Ok(emit(&kan::extend(&s, &m, mode).map_err(err)?))
}

fn family_from_json(
    modules: Vec<String>,
    morphisms: BTreeMap<String, String>,
) -> PyResult<(Vec<GridModule>, BTreeMap<(usize, usize), ModuleMorphism>)> {
    let modules: Vec<GridModule> = modules
        .iter()
        .map(|s| parse::<GridModule>(s))
        .collect::<PyResult<_>>()?;
    let mut out = BTreeMap::new();
    for (key, data) in morphisms {
        let (a, b) = key
            .split_once("->")
            .ok_or_else(|| err(format!("bad morphism key {key:?}")))?;
        let a: usize = a.trim().parse().map_err(err)?;
        let b: usize = b.trim().parse().map_err(err)?;
        let md: MorphismData = parse(&data)?;
        let m = md
            .into_morphism(modules[a].clone(), modules[b].clone())
            .map_err(err)?;
        out.insert((a, b), m);
    }
    Ok((modules, out))
}

/// Star interpolation of an equilateral coherent family; returns the
/// center module JSON.
#[pyfunction]
fn star_interpolation(
    modules: Vec<String>,
    morphisms: BTreeMap<String, String>,
    e: &str,
    mode: &str,
) -> PyResult<String> {
    let (modules, morphisms) = family_from_json(modules, morphisms)?;
    let e = Rational::from_str(e).map_err(err)?;
    let mode = kan::ExtensionMode::from_str(mode).map_err(err)?;
    let star = kan::star_interpolation(&modules, &morphisms, &e, mode).map_err(err)?;
    Ok(emit(&star.center))
}

/// Vietoris-Rips complex of a module family, as complex JSON.
#[pyfunction]
#[pyo3(signature = (modules, e, max_dim = 3, threads = 1))]
fn rips(modules: Vec<String>, e: &str, max_dim: usize, threads: usize) -> PyResult<String> {
    let modules: Vec<GridModule> = modules
        .iter()
        .map(|s| parse::<GridModule>(s))
        .collect::<PyResult<_>>()?;
    let e = Rational::from_str(e).map_err(err)?;
    let c = complexes::rips_complex(&modules, &e, max_dim, threads).map_err(err)?;
    Ok(emit(&c))
}

/// Cech complex with certificates, as complex JSON.
#[pyfunction]
#[pyo3(signature = (modules, e, max_dim = 3, budget = 1 << 20))]
fn cech(modules: Vec<String>, e: &str, max_dim: usize, budget: u64) -> PyResult<String> {
    let modules: Vec<GridModule> = modules
        .iter()
        .map(|s| parse::<GridModule>(s))
        .collect::<PyResult<_>>()?;
    let e = Rational::from_str(e).map_err(err)?;
    let c = complexes::cech_complex(&modules, &e, max_dim, budget as u128).map_err(err)?;
    Ok(emit(&c))
}

/// Checks the sandwich Cech(e) in Rips(2e) in Cech(2e); returns
/// (first_inclusion, second_inclusion).
#[pyfunction]
#[pyo3(signature = (modules, e, max_dim = 3, budget = 1 << 20))]
fn sandwich(modules: Vec<String>, e: &str, max_dim: usize, budget: u64) -> PyResult<(bool, bool)> {
    let modules: Vec<GridModule> = modules
        .iter()
        .map(|s| parse::<GridModule>(s))
        .collect::<PyResult<_>>()?;
    let e = Rational::from_str(e).map_err(err)?;
    let r = complexes::sandwich_check(&modules, &e, max_dim, budget as u128).map_err(err)?;
    Ok((r.first_inclusion_holds, r.second_inclusion_holds))
}

#[pymodule]
fn pmod(m: &Bound<PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(interval_module, m)?)?;
    m.add_function(wrap_pyfunction!(direct_sum, m)?)?;
    m.add_function(wrap_pyfunction!(barcode, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_distance, m)?)?;
    m.add_function(wrap_pyfunction!(verify_coherent, m)?)?;
    m.add_function(wrap_pyfunction!(common_source_system, m)?)?;
    m.add_function(wrap_pyfunction!(extend_system, m)?)?;
    m.add_function(wrap_pyfunction!(star_interpolation, m)?)?;
    m.add_function(wrap_pyfunction!(rips, m)?)?;
    m.add_function(wrap_pyfunction!(cech, m)?)?;
    m.add_function(wrap_pyfunction!(sandwich, m)?)?;
    Ok(())
}
