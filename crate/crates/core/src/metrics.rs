//! Bottleneck and interleaving distances, plus a brute-force interleaving
//! oracle.
//!
//! The interleaving distance is computed through the isometry theorem as the
//! bottleneck distance of the two barcodes. The oracle takes the opposite
//! route: it enumerates candidate morphisms in the hom space Hom(U, V T_e)
//! over F_p and solves the interleaving equations linearly for the partner
//! morphism. Agreement of the two routes is the central consistency check of
//! the whole crate.

use std::collections::BTreeSet;

use crate::decomposition::{barcode, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::module::{compose, hom_basis, linear_combination, sigma, GridModule, ModuleMorphism};
use crate::rational::{ExtRational, Rational};

/// Default enumeration budget: 2^20 candidate morphisms per oracle call.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// A partial matching between two diagrams; unmatched points pay their
/// distance to the diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<((Rational, ExtRational), (Rational, ExtRational))>,
    pub unmatched_left: Vec<(Rational, ExtRational)>,
    pub unmatched_right: Vec<(Rational, ExtRational)>,
}

/// L-infinity distance between diagram points, with inf - inf = 0 and
/// |inf - finite| = inf.
pub fn point_distance(a: &(Rational, ExtRational), b: &(Rational, ExtRational)) -> ExtRational {
    let births = ExtRational::Finite((&a.0 - &b.0).abs());
    let deaths = match (&a.1, &b.1) {
        (ExtRational::Infinity, ExtRational::Infinity) => ExtRational::zero(),
        (ExtRational::Finite(x), ExtRational::Finite(y)) => ExtRational::Finite((x - y).abs()),
        _ => ExtRational::Infinity,
    };
    births.max(deaths)
}

/// Distance from a point to the diagonal: half its persistence.
pub fn diagonal_cost(a: &(Rational, ExtRational)) -> ExtRational {
    match &a.1 {
        ExtRational::Infinity => ExtRational::Infinity,
        ExtRational::Finite(d) => ExtRational::Finite((d - &a.0).half()),
    }
}

impl Matching {
    pub fn cost(&self) -> ExtRational {
        let mut worst = ExtRational::zero();
        for (a, b) in &self.pairs {
            worst = worst.max(point_distance(a, b));
        }
        for a in self.unmatched_left.iter().chain(self.unmatched_right.iter()) {
            worst = worst.max(diagonal_cost(a));
        }
        worst
    }
}

/// Kuhn augmenting-path perfect matching; returns the left-to-right
/// assignment if one exists.
fn perfect_matching(n: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    fn try_augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_left: &mut [Option<usize>],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let free = match match_right[v] {
                None => true,
                Some(w) => try_augment(w, adj, seen, match_left, match_right),
            };
            if free {
                match_right[v] = Some(u);
                match_left[u] = Some(v);
                return true;
            }
        }
        false
    }

    let mut match_right: Vec<Option<usize>> = vec![None; n];
    let mut match_left: Vec<Option<usize>> = vec![None; n];
    for u in 0..n {
        let mut seen = vec![false; n];
        if !try_augment(u, adj, &mut seen, &mut match_left, &mut match_right) {
            return None;
        }
    }
    Some(match_left.into_iter().map(|v| v.unwrap()).collect())
}

/// Threshold feasibility test: a perfect matching of points and diagonal
/// slots with every cost <= e, if one exists.
fn matching_at_threshold(
    left: &[(Rational, ExtRational)],
    right: &[(Rational, ExtRational)],
    e: &ExtRational,
) -> Option<Matching> {
    let n1 = left.len();
    let n2 = right.len();
    // Left nodes: 0..n1 real points, then one diagonal slot per right point.
    // Right nodes: 0..n2 real points, then one diagonal slot per left point.
    let total = n1 + n2;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, a) in left.iter().enumerate() {
        for (j, b) in right.iter().enumerate() {
            if point_distance(a, b) <= *e {
                adj[i].push(j);
            }
        }
        if diagonal_cost(a) <= *e {
            adj[i].push(n2 + i);
        }
    }
    for (j, b) in right.iter().enumerate() {
        if diagonal_cost(b) <= *e {
            adj[n1 + j].push(j);
        }
        for i in 0..n1 {
            adj[n1 + j].push(n2 + i);
        }
    }
    let m = perfect_matching(total, &adj)?;
    let mut pairs = Vec::new();
    let mut unmatched_left = Vec::new();
    let mut unmatched_right = Vec::new();
    for (i, a) in left.iter().enumerate() {
        if m[i] < n2 {
            pairs.push((a.clone(), right[m[i]].clone()));
        } else {
            unmatched_left.push(a.clone());
        }
    }
    for (j, b) in right.iter().enumerate() {
        if m[n1 + j] < n2 {
            unmatched_right.push(b.clone());
        }
    }
    Some(Matching {
        pairs,
        unmatched_left,
        unmatched_right,
    })
}

/// Exact bottleneck distance with one optimal witness matching.
///
/// The optimum is found by binary search over the finite candidate set (all
/// pairwise point costs and all diagonal costs), testing each threshold with
/// an augmenting-path perfect-matching feasibility check; feasibility is
/// monotone in the threshold.
pub fn bottleneck_distance(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
) -> (ExtRational, Matching) {
    let left = d1.expanded();
    let right = d2.expanded();

    let mut candidates: BTreeSet<ExtRational> = BTreeSet::new();
    candidates.insert(ExtRational::zero());
    for a in &left {
        for b in &right {
            candidates.insert(point_distance(a, b));
        }
    }
    for a in left.iter().chain(right.iter()) {
        candidates.insert(diagonal_cost(a));
    }
    let finite: Vec<ExtRational> = candidates.into_iter().filter(|c| c.is_finite()).collect();

    match matching_at_threshold(&left, &right, finite.last().expect("0 is always present")) {
        None => {
            // No finite threshold works, e.g. different numbers of infinite
            // bars. Everything is allowed at threshold infinity.
            let all = matching_at_threshold(&left, &right, &ExtRational::Infinity)
                .expect("matching always exists at infinite threshold");
            (ExtRational::Infinity, all)
        }
        Some(mut witness) => {
            let mut lo = 0usize;
            let mut hi = finite.len() - 1;
            while lo < hi {
                let mid = (lo + hi) / 2;
                match matching_at_threshold(&left, &right, &finite[mid]) {
                    Some(m) => {
                        witness = m;
                        hi = mid;
                    }
                    None => lo = mid + 1,
                }
            }
            (finite[lo].clone(), witness)
        }
    }
}

/// Interleaving distance via the isometry theorem: the bottleneck distance
/// of the two barcodes.
pub fn interleaving_distance(u: &GridModule, v: &GridModule) -> Result<ExtRational> {
    if u.prime() != v.prime() {
        return Err(Error::PrimeMismatch(u.prime(), v.prime()));
    }
    Ok(bottleneck_distance(&barcode(u), &barcode(v)).0)
}

fn flatten_morphism(m: &ModuleMorphism) -> Vec<u64> {
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

/// Searches for an e-interleaving by brute force: enumerate Phi over the
/// F_p-span of one hom space and solve the two composite equations, which
/// are linear in Psi once Phi is fixed. Returns verified witnesses, or None
/// once every candidate is exhausted. `budget` caps the number of
/// enumerated candidates.
pub fn interleaving_oracle(
    u: &GridModule,
    v: &GridModule,
    e: &Rational,
    budget: u128,
) -> Result<Option<(ModuleMorphism, ModuleMorphism)>> {
    if u.prime() != v.prime() {
        return Err(Error::PrimeMismatch(u.prime(), v.prime()));
    }
    if e.is_negative() {
        return Err(Error::InvalidMorphism(format!(
            "interleaving shift must be >= 0, got {e}"
        )));
    }
    let p = u.prime();
    let two_e = e.double();
    let sigma_u = sigma(u, &two_e)?;
    let sigma_v = sigma(v, &two_e)?;

    // Necessary rank condition: U sigma_2e factors through V(s + e), so its
    // pointwise rank is bounded by dim V(s + e); symmetrically for V. A
    // violation refutes every candidate without enumeration.
    for g in sigma_u.grid() {
        if linalg::rank(&sigma_u.component_at(g)) > v.dim_at(&(g + e)) {
            return Ok(None);
        }
    }
    for g in sigma_v.grid() {
        if linalg::rank(&sigma_v.component_at(g)) > u.dim_at(&(g + e)) {
            return Ok(None);
        }
    }

    let basis_uv = hom_basis(u, v, e)?;
    let basis_vu = hom_basis(v, u, e)?;

    // Enumerate over the smaller hom space; the equations are symmetric in
    // the two roles.
    let swapped = basis_uv.len() > basis_vu.len();
    let (enum_basis, solve_basis) = if swapped {
        (&basis_vu, &basis_uv)
    } else {
        (&basis_uv, &basis_vu)
    };
    let (sig_enum, sig_solve) = if swapped {
        (&sigma_v, &sigma_u)
    } else {
        (&sigma_u, &sigma_v)
    };

    let h1 = enum_basis.len();
    let h2 = solve_basis.len();
    let needed = (p as u128).saturating_pow(h1 as u32);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    // Bilinear tables: t1[i][j] = compose(E_i, S_j) and
    // t2[j][i] = compose(S_j, E_i), flattened.
    let mut t1: Vec<Vec<Vec<u64>>> = Vec::with_capacity(h1);
    for ei in enum_basis.iter() {
        let mut row = Vec::with_capacity(h2);
        for sj in solve_basis.iter() {
            row.push(flatten_morphism(&compose(ei, sj)?));
        }
        t1.push(row);
    }
    let mut t2: Vec<Vec<Vec<u64>>> = Vec::with_capacity(h2);
    for sj in solve_basis.iter() {
        let mut row = Vec::with_capacity(h1);
        for ei in enum_basis.iter() {
            row.push(flatten_morphism(&compose(sj, ei)?));
        }
        t2.push(row);
    }
    let rhs1 = flatten_morphism(sig_enum);
    let rhs2 = flatten_morphism(sig_solve);
    let n1 = rhs1.len();
    let n2 = rhs2.len();

    let mut rhs = Matrix::zeros(p, n1 + n2, 1);
    for (r, &x) in rhs1.iter().enumerate() {
        rhs.set_raw(r, 0, x);
    }
    for (r, &x) in rhs2.iter().enumerate() {
        rhs.set_raw(n1 + r, 0, x);
    }

    let mut coeffs = vec![0u64; h1];
    loop {
        // For this Phi = sum_i coeffs[i] E_i, the interleaving equations in
        // the unknown Psi = sum_j d_j S_j read:
        //   sum_j d_j (sum_i c_i t1[i][j]) = sigma_enum
        //   sum_j d_j (sum_i c_i t2[j][i]) = sigma_solve
        let mut system = Matrix::zeros(p, n1 + n2, h2);
        for j in 0..h2 {
            for r in 0..n1 {
                let mut acc: u128 = 0;
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0 {
                        acc += c as u128 * t1[i][j][r] as u128;
                    }
                }
                system.set_raw(r, j, (acc % p as u128) as u64);
            }
            for r in 0..n2 {
                let mut acc: u128 = 0;
                for (i, &c) in coeffs.iter().enumerate() {
                    if c != 0 {
                        acc += c as u128 * t2[j][i][r] as u128;
                    }
                }
                system.set_raw(n1 + r, j, (acc % p as u128) as u64);
            }
        }
        if let Ok(d) = linalg::solve(&system, &rhs) {
            let phi = if h1 == 0 {
                ModuleMorphism::zero(
                    if swapped { v.clone() } else { u.clone() },
                    if swapped { u.clone() } else { v.clone() },
                    e.clone(),
                )?
            } else {
                linear_combination(enum_basis, &coeffs)?
            };
            let psi = if h2 == 0 {
                ModuleMorphism::zero(
                    if swapped { u.clone() } else { v.clone() },
                    if swapped { v.clone() } else { u.clone() },
                    e.clone(),
                )?
            } else {
                let ds: Vec<u64> = (0..h2).map(|j| d.raw(j, 0)).collect();
                linear_combination(solve_basis, &ds)?
            };
            // The solve enforced both composites; double-check and orient.
            let (phi, psi) = if swapped { (psi, phi) } else { (phi, psi) };
            debug_assert!(crate::module::verify_interleaving(&phi, &psi, e)?);
            return Ok(Some((phi, psi)));
        }

        // Next candidate in base-p order.
        let mut pos = 0;
        loop {
            if pos == h1 {
                return Ok(None);
            }
            coeffs[pos] += 1;
            if coeffs[pos] < p {
                break;
            }
            coeffs[pos] = 0;
            pos += 1;
        }
    }
}

/// The candidate shift set for the oracle distance: 0 together with all
/// absolute grid differences and half-differences of the two modules.
pub fn oracle_candidates(u: &GridModule, v: &GridModule) -> Vec<Rational> {
    let mut all: Vec<Rational> = u.grid().iter().chain(v.grid().iter()).cloned().collect();
    all.sort();
    all.dedup();
    let mut out: BTreeSet<Rational> = BTreeSet::new();
    out.insert(Rational::zero());
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let d = &all[j] - &all[i];
            out.insert(d.half());
            out.insert(d);
        }
    }
    out.into_iter().collect()
}

/// Minimum e over the candidate set for which the oracle finds an
/// e-interleaving; infinity if none is feasible. Feasibility is monotone in
/// e, so the candidates are binary-searched.
pub fn oracle_distance(u: &GridModule, v: &GridModule, budget: u128) -> Result<ExtRational> {
    let candidates = oracle_candidates(u, v);
    let last = candidates.len() - 1;
    if interleaving_oracle(u, v, &candidates[last], budget)?.is_none() {
        return Ok(ExtRational::Infinity);
    }
    let mut lo = 0usize;
    let mut hi = last;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if interleaving_oracle(u, v, &candidates[mid], budget)?.is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(ExtRational::Finite(candidates[lo].clone()))
}
