//! Command-line interface: file-based access to barcodes, distances, the
//! interleaving oracle, coherence checking, Kan extension and
//! interpolation, and Rips/Cech complexes of persistence modules.
//!
//! All input and output is JSON with rationals as strings ("a", "a/b" or
//! "inf"). Output key order is canonical (struct order, sorted maps), so
//! identical inputs produce byte-identical output.
//!
//! Exit codes: 0 success, 2 invalid input, 3 budget exceeded or unknown
//! verdicts.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use pmod_core::complexes::{cech_complex, rips_complex, sandwich_check};
use pmod_core::decomposition::barcode;
use pmod_core::kan::{
    extend, segment_interpolation, star_interpolation, verify_coherent, CoherentSystem,
    ExtensionMode,
};
use pmod_core::metrics::{interleaving_distance, oracle_distance, DEFAULT_BUDGET};
use pmod_core::module::{GridModule, ModuleMorphism, MorphismData};
use pmod_core::rational::Rational;
use pmod_core::spacetime::{eta, worldline_interleaving_distance, FiniteMetricSpace};
use pmod_core::Error;

#[derive(Parser)]
#[command(name = "pmod", version, about = "Exact computations with persistence modules")]
struct Cli {
    /// Expected prime for all module inputs; mismatches are rejected.
    #[arg(long = "p", global = true)]
    prime: Option<u64>,

    /// Write output JSON to this file instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of a module.
    Barcode {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
    },
    /// Interleaving distance of two modules (via the isometry theorem).
    Distance { u: PathBuf, v: PathBuf },
    /// Interleaving distance by brute-force search for witnesses.
    Oracle {
        u: PathBuf,
        v: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Check that constant world lines embed a metric space isometrically.
    #[command(name = "eta-check")]
    EtaCheck {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Comma-separated time grid for the spacetime poset.
        #[arg(long, default_value = "0")]
        grid: String,
    },
    /// Verify the coherence identities of a system.
    Coherence {
        #[arg(short = 'i', long = "input", value_name = "SYSTEM")]
        input: PathBuf,
    },
    /// Extend a coherent system to a larger metric space.
    Extend {
        system: PathBuf,
        metric: PathBuf,
        #[arg(long, default_value = "image")]
        mode: String,
    },
    /// Interpolate an interleaved pair along a segment.
    #[command(name = "interpolate-segment")]
    InterpolateSegment {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Comma-separated sample points inside [0, e].
        #[arg(long)]
        samples: String,
        #[arg(long, default_value = "image")]
        mode: String,
    },
    /// Interpolate an equilateral coherent family to its center.
    #[command(name = "interpolate-star")]
    InterpolateStar {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long, default_value = "image")]
        mode: String,
    },
    /// Vietoris-Rips complex of a module family.
    Rips {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        e: String,
        #[arg(long = "max-dim")]
        max_dim: Option<usize>,
    },
    /// Cech complex of a module family, with certificates.
    Cech {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        e: String,
        #[arg(long = "max-dim")]
        max_dim: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Verify the simplicial sandwich Cech(e) in Rips(2e) in Cech(2e).
    Sandwich {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        e: String,
        #[arg(long = "max-dim")]
        max_dim: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
}

/// Input container for interpolate-segment.
#[derive(Deserialize)]
struct SegmentInput {
    u0: GridModule,
    ue: GridModule,
    phi: MorphismData,
    psi: MorphismData,
    e: Rational,
}

/// Input container for interpolate-star and the complex subcommands.
#[derive(Deserialize)]
struct FamilyInput {
    modules: Vec<GridModule>,
    #[serde(default)]
    morphisms: BTreeMap<String, MorphismData>,
    #[serde(default)]
    e: Option<Rational>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_rationals(s: &str) -> Result<Vec<Rational>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| Rational::from_str(t).map_err(|e| format!("{e}")))
        .collect()
}

fn check_prime(expected: Option<u64>, modules: &[&GridModule]) -> Result<(), String> {
    if let Some(p) = expected {
        for m in modules {
            if m.prime() != p {
                return Err(format!("module has prime {}, expected {p}", m.prime()));
            }
        }
    }
    Ok(())
}

fn pm_threads() -> usize {
    std::env::var("PM_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn default_max_dim(n: usize) -> usize {
    n.saturating_sub(1).min(3)
}

/// 0 = success, 2 = invalid input, 3 = budget exceeded / unknown verdicts.
fn run(cli: &Cli) -> Result<(serde_json::Value, u8), (String, u8)> {
    let invalid = |msg: String| (msg, 2u8);
    match &cli.command {
        Command::Barcode { input } => {
            let module: GridModule = read_json(input).map_err(invalid)?;
            check_prime(cli.prime, &[&module]).map_err(invalid)?;
            let dgm = barcode(&module);
            Ok((serde_json::to_value(dgm).unwrap(), 0))
        }
        Command::Distance { u, v } => {
            let u: GridModule = read_json(u).map_err(invalid)?;
            let v: GridModule = read_json(v).map_err(invalid)?;
            check_prime(cli.prime, &[&u, &v]).map_err(invalid)?;
            let d = interleaving_distance(&u, &v).map_err(|e| invalid(e.to_string()))?;
            Ok((json!({ "distance": d.to_string() }), 0))
        }
        Command::Oracle { u, v, budget } => {
            let u: GridModule = read_json(u).map_err(invalid)?;
            let v: GridModule = read_json(v).map_err(invalid)?;
            check_prime(cli.prime, &[&u, &v]).map_err(invalid)?;
            match oracle_distance(&u, &v, *budget) {
                Ok(d) => Ok((json!({ "distance": d.to_string() }), 0)),
                Err(e @ Error::BudgetExceeded { .. }) => Err((e.to_string(), 3)),
                Err(e) => Err(invalid(e.to_string())),
            }
        }
        Command::EtaCheck { input, grid } => {
            let space: FiniteMetricSpace = read_json(input).map_err(invalid)?;
            let grid = parse_rationals(grid).map_err(invalid)?;
            let mut grid = grid;
            grid.sort();
            grid.dedup();
            let mut pairs = Vec::new();
            let mut isometric = true;
            for (i, x) in space.labels().iter().enumerate() {
                for (j, y) in space.labels().iter().enumerate() {
                    if i >= j {
                        continue;
                    }
                    let wx = eta(&space, &grid, x).map_err(|e| invalid(e.to_string()))?;
                    let wy = eta(&space, &grid, y).map_err(|e| invalid(e.to_string()))?;
                    let d = worldline_interleaving_distance(&wx, &wy)
                        .map_err(|e| invalid(e.to_string()))?;
                    let expected = space.distance(i, j);
                    isometric &= d == *expected;
                    pairs.push(json!({
                        "x": x,
                        "y": y,
                        "metric": expected.to_string(),
                        "worldline": d.to_string(),
                    }));
                }
            }
            Ok((json!({ "isometric": isometric, "pairs": pairs }), 0))
        }
        Command::Coherence { input } => {
            let system: CoherentSystem = read_json(input).map_err(invalid)?;
            let report = verify_coherent(&system);
            if report.is_coherent() {
                Ok((json!({ "coherent": true }), 0))
            } else {
                Ok((
                    json!({ "coherent": false, "violations": report.violations }),
                    0,
                ))
            }
        }
        Command::Extend { system, metric, mode } => {
            let system: CoherentSystem = read_json(system).map_err(invalid)?;
            let metric: FiniteMetricSpace = read_json(metric).map_err(invalid)?;
            let mode = ExtensionMode::from_str(mode).map_err(|e| invalid(e.to_string()))?;
            let out = extend(&system, &metric, mode).map_err(|e| invalid(e.to_string()))?;
            Ok((serde_json::to_value(out).unwrap(), 0))
        }
        Command::InterpolateSegment { input, samples, mode } => {
            let seg: SegmentInput = read_json(input).map_err(invalid)?;
            let mode = ExtensionMode::from_str(mode).map_err(|e| invalid(e.to_string()))?;
            let samples = parse_rationals(samples).map_err(invalid)?;
            check_prime(cli.prime, &[&seg.u0, &seg.ue]).map_err(invalid)?;
            let phi: ModuleMorphism = seg
                .phi
                .into_morphism(seg.u0.clone(), seg.ue.clone())
                .map_err(|e| invalid(e.to_string()))?;
            let psi: ModuleMorphism = seg
                .psi
                .into_morphism(seg.ue.clone(), seg.u0.clone())
                .map_err(|e| invalid(e.to_string()))?;
            let fam = segment_interpolation(&seg.u0, &seg.ue, &phi, &psi, &seg.e, &samples, mode)
                .map_err(|e| invalid(e.to_string()))?;
            Ok((serde_json::to_value(fam).unwrap(), 0))
        }
        Command::InterpolateStar { input, mode } => {
            let fam: FamilyInput = read_json(input).map_err(invalid)?;
            let mode = ExtensionMode::from_str(mode).map_err(|e| invalid(e.to_string()))?;
            let e = fam.e.ok_or_else(|| invalid("missing field e".into()))?;
            check_prime(cli.prime, &fam.modules.iter().collect::<Vec<_>>()).map_err(invalid)?;
            let morphisms =
                resolve_morphisms(&fam.modules, &fam.morphisms).map_err(invalid)?;
            let star = star_interpolation(&fam.modules, &morphisms, &e, mode)
                .map_err(|e| invalid(e.to_string()))?;
            Ok((
                json!({
                    "center": serde_json::to_value(&star.center).unwrap(),
                    "system": serde_json::to_value(&star.system).unwrap(),
                }),
                0,
            ))
        }
        Command::Rips { input, e, max_dim } => {
            let fam: FamilyInput = read_json(input).map_err(invalid)?;
            let e = Rational::from_str(e).map_err(|e| invalid(e.to_string()))?;
            check_prime(cli.prime, &fam.modules.iter().collect::<Vec<_>>()).map_err(invalid)?;
            let md = max_dim.unwrap_or_else(|| default_max_dim(fam.modules.len()));
            let complex = rips_complex(&fam.modules, &e, md, pm_threads())
                .map_err(|e| invalid(e.to_string()))?;
            Ok((serde_json::to_value(complex).unwrap(), 0))
        }
        Command::Cech { input, e, max_dim, budget } => {
            let fam: FamilyInput = read_json(input).map_err(invalid)?;
            let e = Rational::from_str(e).map_err(|e| invalid(e.to_string()))?;
            check_prime(cli.prime, &fam.modules.iter().collect::<Vec<_>>()).map_err(invalid)?;
            let md = max_dim.unwrap_or_else(|| default_max_dim(fam.modules.len()));
            let complex = cech_complex(&fam.modules, &e, md, *budget)
                .map_err(|e| invalid(e.to_string()))?;
            let code = if complex.unknown.is_empty() { 0 } else { 3 };
            Ok((serde_json::to_value(complex).unwrap(), code))
        }
        Command::Sandwich { input, e, max_dim, budget } => {
            let fam: FamilyInput = read_json(input).map_err(invalid)?;
            let e = Rational::from_str(e).map_err(|e| invalid(e.to_string()))?;
            check_prime(cli.prime, &fam.modules.iter().collect::<Vec<_>>()).map_err(invalid)?;
            let md = max_dim.unwrap_or_else(|| default_max_dim(fam.modules.len()));
            let report = sandwich_check(&fam.modules, &e, md, *budget)
                .map_err(|e| invalid(e.to_string()))?;
            let unknown = !report.cech_e.unknown.is_empty();
            let value = json!({
                "holds": report.holds(),
                "first_inclusion": report.first_inclusion_holds,
                "second_inclusion": report.second_inclusion_holds,
                "cech_e": serde_json::to_value(&report.cech_e).unwrap(),
                "rips_2e": serde_json::to_value(&report.rips_2e).unwrap(),
            });
            Ok((value, if unknown { 3 } else { 0 }))
        }
    }
}

/// Morphism keys are "i->j" with vertex indices.
fn resolve_morphisms(
    modules: &[GridModule],
    data: &BTreeMap<String, MorphismData>,
) -> Result<BTreeMap<(usize, usize), ModuleMorphism>, String> {
    let mut out = BTreeMap::new();
    for (key, md) in data {
        let (a, b) = key
            .split_once("->")
            .ok_or_else(|| format!("bad morphism key {key:?}"))?;
        let a: usize = a.trim().parse().map_err(|_| format!("bad index in {key:?}"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad index in {key:?}"))?;
        if a >= modules.len() || b >= modules.len() {
            return Err(format!("morphism key {key:?} out of range"));
        }
        let m = md
            .clone()
            .into_morphism(modules[a].clone(), modules[b].clone())
            .map_err(|e| format!("morphism {key:?}: {e}"))?;
        out.insert((a, b), m);
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, code)) => {
            let text = serde_json::to_string(&value).expect("serializable output");
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => println!("{text}"),
            }
            ExitCode::from(code)
        }
        Err((msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
