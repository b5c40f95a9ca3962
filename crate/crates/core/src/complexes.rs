//! Vietoris-Rips and Cech complexes built in the space of persistence
//! modules.
//!
//! A collection of modules spans a Rips simplex at scale e when all pairs
//! are e-interleaved (decided through the isometry theorem), and a Cech
//! simplex when some single module is e-interleaved with all of them. Cech
//! membership is decided exactly: a simplex is certified by an explicit
//! coherent system of morphisms at pairwise distance 2e (whose star
//! interpolation provides the witness module), refuted by exhausting the
//! finite search space over F_p, or left unknown when the search budget
//! runs out.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kan::{star_interpolation, verify_coherent, CoherentSystem, ExtensionMode};
use crate::linalg::{self, Matrix};
use crate::metrics::interleaving_distance;
use crate::module::{
    compose, hom_basis, linear_combination, sigma, verify_interleaving, GridModule,
    ModuleMorphism,
};
use crate::rational::{ExtRational, Rational};

/// A certificate that modules form a Cech simplex at scale e: the coherent
/// morphisms at pairwise distance 2e, the star-interpolated center, and the
/// verified e-interleavings between the center and every vertex.
#[derive(Clone, Debug)]
pub struct CechCertificate {
    pub system: CoherentSystem,
    pub center: GridModule,
    pub witnesses: Vec<(ModuleMorphism, ModuleMorphism)>,
}

/// Outcome of a Cech membership test.
#[derive(Clone, Debug)]
pub enum CechOutcome {
    Certificate(Box<CechCertificate>),
    /// Exhaustive search over F_p found no coherent choice: a proof.
    Refuted,
    /// The search budget was exceeded before exhaustion.
    Unknown,
}

impl CechOutcome {
    pub fn is_certificate(&self) -> bool {
        matches!(self, CechOutcome::Certificate(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, CechOutcome::Refuted)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, CechOutcome::Unknown)
    }
}

/// A simplicial complex on module vertices, with certificates for the Cech
/// simplices that have them.
#[derive(Clone, Debug)]
pub struct ModuleComplex {
    pub scale: Rational,
    pub vertices: Vec<GridModule>,
    pub simplices: BTreeSet<Vec<usize>>,
    pub unknown: BTreeSet<Vec<usize>>,
    pub certificates: BTreeMap<Vec<usize>, CechCertificate>,
}

impl ModuleComplex {
    pub fn contains(&self, simplex: &[usize]) -> bool {
        self.simplices.contains(&simplex.to_vec())
    }

    /// Downward closure and presence of all vertices.
    pub fn is_valid(&self) -> bool {
        for v in 0..self.vertices.len() {
            if !self.simplices.contains(&vec![v]) {
                return false;
            }
        }
        for s in &self.simplices {
            if s.len() > 1 {
                for i in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(i);
                    if !self.simplices.contains(&face) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All simplices of `self` are simplices of `other`.
    pub fn included_in(&self, other: &ModuleComplex) -> bool {
        self.simplices.is_subset(&other.simplices)
    }
}

/// Pairwise interleaving distances, optionally split across threads. The
/// result is independent of the thread count.
pub fn pairwise_distances(
    modules: &[GridModule],
    threads: usize,
) -> Result<Vec<Vec<ExtRational>>> {
    let n = modules.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let threads = threads.max(1).min(pairs.len().max(1));
    let chunk = pairs.len().div_ceil(threads);
    let mut results: Vec<Result<Vec<((usize, usize), ExtRational)>>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for batch in pairs.chunks(chunk.max(1)) {
            handles.push(scope.spawn(move || {
                batch
                    .iter()
                    .map(|&(i, j)| {
                        interleaving_distance(&modules[i], &modules[j]).map(|d| ((i, j), d))
                    })
                    .collect::<Result<Vec<_>>>()
            }));
        }
        for h in handles {
            results.push(h.join().expect("distance worker panicked"));
        }
    });
    let mut table: Vec<Vec<ExtRational>> = (0..n)
        .map(|_| vec![ExtRational::zero(); n])
        .collect();
    for r in results {
        for ((i, j), d) in r? {
            table[i][j] = d.clone();
            table[j][i] = d;
        }
    }
    Ok(table)
}

/// The Vietoris-Rips complex at scale e: an edge whenever the interleaving
/// distance is at most e, higher simplices by the clique rule. `threads`
/// caps the parallelism of the pairwise distance computation.
pub fn rips_complex(
    modules: &[GridModule],
    e: &Rational,
    max_dim: usize,
    threads: usize,
) -> Result<ModuleComplex> {
    let n = modules.len();
    let table = pairwise_distances(modules, threads)?;
    let mut adjacent = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if table[i][j] <= ExtRational::Finite(e.clone()) {
                adjacent[i][j] = true;
                adjacent[j][i] = true;
            }
        }
    }
    let mut simplices: BTreeSet<Vec<usize>> = BTreeSet::new();
    for v in 0..n {
        simplices.insert(vec![v]);
    }
    // Grow cliques one vertex at a time.
    let mut frontier: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for _dim in 1..=max_dim {
        let mut next = Vec::new();
        for clique in &frontier {
            let last = *clique.last().unwrap();
            for v in last + 1..n {
                if clique.iter().all(|&u| adjacent[u][v]) {
                    let mut bigger = clique.clone();
                    bigger.push(v);
                    simplices.insert(bigger.clone());
                    next.push(bigger);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(ModuleComplex {
        scale: e.clone(),
        vertices: modules.to_vec(),
        simplices,
        unknown: BTreeSet::new(),
        certificates: BTreeMap::new(),
    })
}

/// Decides whether the given modules admit a common witness module
/// e-interleaved with all of them, by searching for coherent morphisms
/// Phi_ij at pairwise distance 2e.
///
/// The search enumerates the hom-space span of each unknown in a fixed
/// order; at every step the pair and triangle conditions that involve only
/// already-chosen morphisms are linear in the current unknown, so the
/// enumeration runs over the affine solution space only, backtracking on
/// inconsistency. `budget` caps the number of visited candidates; Refuted
/// is only reported after genuine exhaustion.
pub fn cech_membership(modules: &[GridModule], e: &Rational, budget: u128) -> Result<CechOutcome> {
    let n = modules.len();
    if n == 0 {
        return Err(Error::Precondition("empty simplex".into()));
    }
    if n == 1 {
        // A single module is always witnessed by itself.
        let system = CoherentSystem::singleton("0", modules[0].clone())?;
        let star = star_interpolation(modules, &BTreeMap::new(), e, ExtensionMode::Image)?;
        return Ok(CechOutcome::Certificate(Box::new(CechCertificate {
            system,
            center: star.center,
            witnesses: star.witnesses,
        })));
    }
    let two_e = e.double();

    // Unknowns in deterministic order: all ordered pairs (i,j), i != j.
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                slots.push((i, j));
            }
        }
    }
    let bases: BTreeMap<(usize, usize), Vec<ModuleMorphism>> = slots
        .iter()
        .map(|&(i, j)| {
            hom_basis(&modules[i], &modules[j], &two_e).map(|b| ((i, j), b))
        })
        .collect::<Result<_>>()?;
    let sigmas: Vec<ModuleMorphism> = modules
        .iter()
        .map(|m| sigma(m, &two_e.double()))
        .collect::<Result<_>>()?;

    let mut chosen: BTreeMap<(usize, usize), ModuleMorphism> = BTreeMap::new();
    let mut visited: u128 = 0;
    let found = search_slot(
        modules,
        e,
        &two_e,
        &sigmas,
        &slots,
        &bases,
        &mut chosen,
        0,
        budget,
        &mut visited,
    )?;
    match found {
        Some(system) => {
            debug_assert!(verify_coherent(&system).is_coherent());
            let star = star_interpolation(modules, system.morphisms(), e, ExtensionMode::Image)?;
            for (i, (to, from)) in star.witnesses.iter().enumerate() {
                if !verify_interleaving(to, from, e)? {
                    return Err(Error::Precondition(format!(
                        "star witness {i} failed verification"
                    )));
                }
            }
            Ok(CechOutcome::Certificate(Box::new(CechCertificate {
                system,
                center: star.center,
                witnesses: star.witnesses,
            })))
        }
        None => {
            if visited > budget {
                Ok(CechOutcome::Unknown)
            } else {
                Ok(CechOutcome::Refuted)
            }
        }
    }
}

/// Recursive backtracking over morphism slots. Returns the first coherent
/// assignment found, or None (exhausted or budget hit; the caller
/// distinguishes via the visited counter).
#[allow(clippy::too_many_arguments)]
fn search_slot(
    modules: &[GridModule],
    e: &Rational,
    two_e: &Rational,
    sigmas: &[ModuleMorphism],
    slots: &[(usize, usize)],
    bases: &BTreeMap<(usize, usize), Vec<ModuleMorphism>>,
    chosen: &mut BTreeMap<(usize, usize), ModuleMorphism>,
    depth: usize,
    budget: u128,
    visited: &mut u128,
) -> Result<Option<CoherentSystem>> {
    if depth == slots.len() {
        let system = assemble_system(modules, two_e, chosen)?;
        if verify_coherent(&system).is_coherent() {
            return Ok(Some(system));
        }
        return Ok(None);
    }
    let (i, j) = slots[depth];
    let basis = &bases[&(i, j)];
    let p = modules[0].prime();

    // Conditions linear in Phi_ij given earlier choices:
    //  - pair:      Phi_ji . Phi_ij = sigma_{4e} on U_i      (Phi_ji known)
    //  - triangle:  Phi_jk . Phi_ij = Phi_ik . sigma-slack   (Phi_jk, Phi_ik known)
    //  - triangle:  Phi_ij . Phi_ki = Phi_kj . sigma-slack   (Phi_ki, Phi_kj known)
    // Over the span Phi_ij = sum c_b B_b each is linear in c.
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut rhs: Vec<u64> = Vec::new();
    let mut add_condition = |lhs_per_basis: Vec<ModuleMorphism>,
                             target: &ModuleMorphism|
     -> Result<()> {
        let flat: Vec<Vec<u64>> = lhs_per_basis.iter().map(flatten).collect();
        let target_flat = flatten(target);
        for r in 0..target_flat.len() {
            rows.push(flat.iter().map(|f| f[r]).collect());
            rhs.push(target_flat[r]);
        }
        Ok(())
    };

    if let Some(phi_ji) = chosen.get(&(j, i)) {
        let per_basis: Vec<ModuleMorphism> = basis
            .iter()
            .map(|b| compose(b, phi_ji))
            .collect::<Result<_>>()?;
        add_condition(per_basis, &sigmas[i])?;
        // And the mirrored pair condition on U_j.
        let per_basis: Vec<ModuleMorphism> = basis
            .iter()
            .map(|b| compose(phi_ji, b))
            .collect::<Result<_>>()?;
        add_condition(per_basis, &sigmas[j])?;
    }
    for k in 0..modules.len() {
        if k == i || k == j {
            continue;
        }
        // (i,j,k): Phi_jk . Phi_ij = Phi_ik . sigma_{2e}
        if let (Some(phi_jk), Some(phi_ik)) = (chosen.get(&(j, k)), chosen.get(&(i, k))) {
            let per_basis: Vec<ModuleMorphism> = basis
                .iter()
                .map(|b| compose(b, phi_jk))
                .collect::<Result<_>>()?;
            let target = compose(phi_ik, &sigma(&modules[k], two_e)?)?;
            add_condition(per_basis, &target)?;
        }
        // (k,i,j): Phi_ij . Phi_ki = Phi_kj . sigma_{2e}
        if let (Some(phi_ki), Some(phi_kj)) = (chosen.get(&(k, i)), chosen.get(&(k, j))) {
            let per_basis: Vec<ModuleMorphism> = basis
                .iter()
                .map(|b| compose(phi_ki, b))
                .collect::<Result<_>>()?;
            let target = compose(phi_kj, &sigma(&modules[j], two_e)?)?;
            add_condition(per_basis, &target)?;
        }
    }

    let h = basis.len();
    let mut system = Matrix::zeros(p, rows.len(), h);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            system.set_raw(r, c, v);
        }
    }
    let mut rhs_m = Matrix::zeros(p, rhs.len(), 1);
    for (r, &v) in rhs.iter().enumerate() {
        rhs_m.set_raw(r, 0, v);
    }
    let particular = match linalg::solve(&system, &rhs_m) {
        Ok(x) => x,
        Err(Error::NoSolution) => return Ok(None),
        Err(e) => return Err(e),
    };
    let kernel = linalg::kernel_basis(&system);
    let free = kernel.cols();
    let count = (p as u128).saturating_pow(free as u32);

    let mut free_coeffs = vec![0u64; free];
    loop {
        *visited += 1;
        if *visited > budget {
            return Ok(None);
        }
        let mut coeffs: Vec<u64> = (0..h).map(|r| particular.raw(r, 0)).collect();
        for (k, &fc) in free_coeffs.iter().enumerate() {
            if fc != 0 {
                for r in 0..h {
                    coeffs[r] = (coeffs[r] + fc * kernel.raw(r, k)) % p;
                }
            }
        }
        let phi = if h == 0 {
            ModuleMorphism::zero(modules[i].clone(), modules[j].clone(), two_e.clone())?
        } else {
            linear_combination(basis, &coeffs)?
        };
        chosen.insert((i, j), phi);
        let found = search_slot(
            modules, e, two_e, sigmas, slots, bases, chosen, depth + 1, budget, visited,
        )?;
        chosen.remove(&(i, j));
        if found.is_some() {
            return Ok(found);
        }

        // Next assignment of the free coefficients.
        let mut pos = 0;
        loop {
            if pos == free {
                return Ok(None);
            }
            free_coeffs[pos] += 1;
            if free_coeffs[pos] < p {
                break;
            }
            free_coeffs[pos] = 0;
            pos += 1;
        }
        let _ = count;
    }
}

fn flatten(m: &ModuleMorphism) -> Vec<u64> {
    let mut out = Vec::new();
    for c in m.components() {
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                out.push(c.raw(i, j));
            }
        }
    }
    out
}

fn assemble_system(
    modules: &[GridModule],
    two_e: &Rational,
    chosen: &BTreeMap<(usize, usize), ModuleMorphism>,
) -> Result<CoherentSystem> {
    let n = modules.len();
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let dist: Vec<Vec<ExtRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        ExtRational::zero()
                    } else {
                        ExtRational::Finite(two_e.clone())
                    }
                })
                .collect()
        })
        .collect();
    let space = crate::spacetime::FiniteMetricSpace::new(labels, dist)?;
    CoherentSystem::new(space, modules.to_vec(), chosen.clone())
}

/// The Cech complex at scale e: simplices decided by [`cech_membership`],
/// with budget-exceeded simplices excluded and reported as unknown. A
/// simplex is only tested once all its facets are present.
pub fn cech_complex(
    modules: &[GridModule],
    e: &Rational,
    max_dim: usize,
    budget: u128,
) -> Result<ModuleComplex> {
    let n = modules.len();
    let mut simplices: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut unknown: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut certificates: BTreeMap<Vec<usize>, CechCertificate> = BTreeMap::new();
    for v in 0..n {
        simplices.insert(vec![v]);
    }
    let mut frontier: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for _dim in 1..=max_dim {
        let mut next = Vec::new();
        for simplex in &frontier {
            let last = *simplex.last().unwrap();
            'candidates: for v in last + 1..n {
                let mut bigger = simplex.clone();
                bigger.push(v);
                // All facets must already be present.
                for i in 0..bigger.len() {
                    let mut face = bigger.clone();
                    face.remove(i);
                    if !simplices.contains(&face) {
                        continue 'candidates;
                    }
                }
                let members: Vec<GridModule> =
                    bigger.iter().map(|&i| modules[i].clone()).collect();
                match cech_membership(&members, e, budget)? {
                    CechOutcome::Certificate(cert) => {
                        simplices.insert(bigger.clone());
                        certificates.insert(bigger.clone(), *cert);
                        next.push(bigger);
                    }
                    CechOutcome::Refuted => {}
                    CechOutcome::Unknown => {
                        unknown.insert(bigger);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(ModuleComplex {
        scale: e.clone(),
        vertices: modules.to_vec(),
        simplices,
        unknown,
        certificates,
    })
}

/// Report of the simplicial sandwich checks
/// Cech(e) into Rips(2e) into Cech(2e).
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub cech_e: ModuleComplex,
    pub rips_2e: ModuleComplex,
    pub cech_2e_from_rips: BTreeMap<Vec<usize>, bool>,
    pub first_inclusion_holds: bool,
    pub second_inclusion_holds: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.first_inclusion_holds && self.second_inclusion_holds
    }
}

/// Verifies the sandwich Cech(e) into Rips(2e) into Cech(2e). The first
/// inclusion is a simplex-set check between computed complexes; for the
/// second, every Rips simplex gets an explicit 2e-certificate built from
/// its first vertex as witness.
pub fn sandwich_check(
    modules: &[GridModule],
    e: &Rational,
    max_dim: usize,
    budget: u128,
) -> Result<SandwichReport> {
    let two_e = e.double();
    let cech_e = cech_complex(modules, e, max_dim, budget)?;
    let rips_2e = rips_complex(modules, &two_e, max_dim, 1)?;
    let first = cech_e.included_in(&rips_2e);

    let mut cech_2e_from_rips = BTreeMap::new();
    let mut second = true;
    for simplex in &rips_2e.simplices {
        if simplex.len() < 2 {
            cech_2e_from_rips.insert(simplex.clone(), true);
            continue;
        }
        let members: Vec<GridModule> = simplex.iter().map(|&i| modules[i].clone()).collect();
        let ok = rips_to_cech_certificate(&members, &two_e, budget)?;
        second &= ok;
        cech_2e_from_rips.insert(simplex.clone(), ok);
    }
    Ok(SandwichReport {
        cech_e,
        rips_2e,
        cech_2e_from_rips,
        first_inclusion_holds: first,
        second_inclusion_holds: second,
    })
}

/// Constructs a Cech certificate at scale 2e for a Rips-2e simplex, using
/// the first vertex as witness: interleavings with U_0 compose into
/// coherent morphisms Phi_ij = phi_j . psi_i at pairwise distance 4e.
fn rips_to_cech_certificate(
    members: &[GridModule],
    two_e: &Rational,
    budget: u128,
) -> Result<bool> {
    let n = members.len();
    // Interleavings between U_0 and each member at 2e; for U_0 itself take
    // the identity pair.
    let mut to_zero: Vec<ModuleMorphism> = Vec::with_capacity(n);
    let mut from_zero: Vec<ModuleMorphism> = Vec::with_capacity(n);
    for (i, m) in members.iter().enumerate() {
        if i == 0 {
            to_zero.push(sigma(m, two_e)?);
            from_zero.push(sigma(m, two_e)?);
            continue;
        }
        match crate::metrics::interleaving_oracle(&members[0], m, two_e, budget)? {
            Some((phi, psi)) => {
                from_zero.push(phi);
                to_zero.push(psi);
            }
            None => return Ok(false),
        }
    }
    // Phi_ij: U_i -> U_0 T_2e -> U_j T_4e.
    let mut morphisms = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                morphisms.insert((i, j), compose(&to_zero[i], &from_zero[j])?);
            }
        }
    }
    let system = assemble_system(members, &two_e.double(), &morphisms)?;
    Ok(verify_coherent(&system).is_coherent())
}

// --- serialization of complexes ---

#[derive(Serialize, Deserialize)]
struct ComplexDto {
    scale: Rational,
    simplices: Vec<Vec<usize>>,
    unknown: Vec<Vec<usize>>,
    certificates: BTreeMap<String, CertificateDto>,
}

#[derive(Serialize, Deserialize)]
struct CertificateDto {
    system: CoherentSystem,
    center: GridModule,
}

impl Serialize for ModuleComplex {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ComplexDto {
            scale: self.scale.clone(),
            simplices: self.simplices.iter().cloned().collect(),
            unknown: self.unknown.iter().cloned().collect(),
            certificates: self
                .certificates
                .iter()
                .map(|(k, c)| {
                    let key = k
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    (
                        key,
                        CertificateDto {
                            system: c.system.clone(),
                            center: c.center.clone(),
                        },
                    )
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DEFAULT_BUDGET;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn interval(b: &str, d: &str) -> GridModule {
        GridModule::interval(2, rat(b), d.parse().unwrap()).unwrap()
    }

    #[test]
    fn rips_examples() {
        let u = interval("0", "4");
        // All modules equal: full skeleton at any scale.
        let c = rips_complex(&[u.clone(), u.clone(), u.clone()], &rat("0"), 2, 2).unwrap();
        assert!(c.contains(&[0, 1, 2]));
        assert!(c.is_valid());

        // Shifted intervals: chain at e = 1, full triangle at e = 2.
        let mods = [interval("0", "4"), interval("1", "5"), interval("2", "6")];
        let c1 = rips_complex(&mods, &rat("1"), 2, 1).unwrap();
        assert!(c1.contains(&[0, 1]));
        assert!(c1.contains(&[1, 2]));
        assert!(!c1.contains(&[0, 2]));
        assert!(!c1.contains(&[0, 1, 2]));
        let c2 = rips_complex(&mods, &rat("2"), 2, 3).unwrap();
        assert!(c2.contains(&[0, 1, 2]));
        // Monotone in scale.
        assert!(c1.included_in(&c2));
    }

    #[test]
    fn cech_equal_modules() {
        let u = interval("0", "4");
        let out = cech_membership(&[u.clone(), u.clone(), u.clone()], &rat("1"), DEFAULT_BUDGET)
            .unwrap();
        let CechOutcome::Certificate(cert) = out else {
            panic!("expected certificate");
        };
        assert!(verify_coherent(&cert.system).is_coherent());
        for (to, from) in &cert.witnesses {
            assert!(verify_interleaving(to, from, &rat("1")).unwrap());
        }
    }

    #[test]
    fn cech_single_vertex() {
        let u = interval("0", "4");
        let c = cech_complex(&[u], &rat("1"), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.simplices.len(), 1);
        assert!(c.contains(&[0]));
    }

    #[test]
    fn cech_common_source_family() {
        // A family drawn from one source is witnessed at half the pairwise
        // distance.
        let v = interval("0", "10");
        let s0 = v.clone();
        let s1 = v.shift(&rat("1"));
        let s2 = v.shift(&rat("-1"));
        let mods = [s0, s1, s2];
        let c = cech_complex(&mods, &rat("1"), 2, DEFAULT_BUDGET).unwrap();
        assert!(c.contains(&[0, 1, 2]), "simplices: {:?}", c.simplices);
        assert!(c.unknown.is_empty());
    }

    #[test]
    fn cech_is_monotone_in_scale() {
        let mods = [
            interval("0", "4"),
            interval("1", "5"),
            interval("0", "2").direct_sum(&interval("2", "4")).unwrap(),
        ];
        let mut smaller: Option<ModuleComplex> = None;
        for e in ["1/2", "1", "3/2", "2"] {
            let c = cech_complex(&mods, &rat(e), 2, DEFAULT_BUDGET).unwrap();
            assert!(c.unknown.is_empty());
            if let Some(prev) = &smaller {
                assert!(prev.included_in(&c), "Cech not monotone at e = {e}");
            }
            smaller = Some(c);
        }
    }

    #[test]
    fn sandwich_on_small_family() {
        let mods = [
            interval("0", "4"),
            interval("1", "5"),
            interval("0", "4").direct_sum(&interval("1", "5")).unwrap(),
        ];
        for e in ["1/2", "1", "2"] {
            let report = sandwich_check(&mods, &rat(e), 2, DEFAULT_BUDGET).unwrap();
            assert!(report.holds(), "sandwich fails at e = {e}");
        }
    }

    #[test]
    fn empty_family_sandwich() {
        let report = sandwich_check(&[], &rat("1"), 2, DEFAULT_BUDGET).unwrap();
        assert!(report.holds());
        assert!(report.cech_e.simplices.is_empty());
    }
}
