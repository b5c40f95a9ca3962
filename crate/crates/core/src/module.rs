//! Grid-presented persistence modules and shifted morphisms.
//!
//! A [`GridModule`] presents a functor U: R -> Vect by a strictly increasing
//! rational grid t_1 < ... < t_k, a dimension per grid point and a structure
//! matrix per consecutive pair. The functor it presents is the floor-style
//! extension: U(t) = 0 for t < t_1, U(t) = F_p^{d_i} for t in [t_i, t_{i+1}),
//! and U(t) = F_p^{d_k} from t_k on. Internal maps are composites of the
//! structure matrices and are the identity within a cell.
//!
//! A [`ModuleMorphism`] stores a shifted natural transformation
//! Phi: U -> V T_e as one matrix per cell of the common refinement of
//! grid(U) and grid(V) - e; naturality forces the components to be constant
//! on those cells, so this loses nothing.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rational::{ExtRational, Rational};

/// A persistence module presented on a finite rational grid.
#[derive(Clone, PartialEq, Eq)]
pub struct GridModule {
    prime: u64,
    grid: Vec<Rational>,
    dims: Vec<usize>,
    maps: Vec<Matrix>,
}

impl GridModule {
    pub fn new(
        prime: u64,
        grid: Vec<Rational>,
        dims: Vec<usize>,
        maps: Vec<Matrix>,
    ) -> Result<Self> {
        if !linalg::is_prime(prime) {
            return Err(Error::InvalidModule(format!("{prime} is not prime")));
        }
        if grid.len() != dims.len() {
            return Err(Error::InvalidModule(format!(
                "{} grid values but {} dimensions",
                grid.len(),
                dims.len()
            )));
        }
        for w in grid.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidModule(format!(
                    "grid not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if maps.len() + 1 != grid.len().max(1) && !(grid.is_empty() && maps.is_empty()) {
            return Err(Error::InvalidModule(format!(
                "{} maps for {} grid values",
                maps.len(),
                grid.len()
            )));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.prime() != prime {
                return Err(Error::PrimeMismatch(prime, m.prime()));
            }
            if m.rows() != dims[i + 1] || m.cols() != dims[i] {
                return Err(Error::InvalidModule(format!(
                    "map {i} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    dims[i + 1],
                    dims[i]
                )));
            }
        }
        Ok(GridModule {
            prime,
            grid,
            dims,
            maps,
        })
    }

    /// The zero module (empty grid).
    pub fn zero(prime: u64) -> Self {
        GridModule::new(prime, vec![], vec![], vec![]).expect("zero module")
    }

    /// The interval module I[b, d): one-dimensional on [b, d), zero
    /// elsewhere. For d = infinity the grid is just {b}.
    pub fn interval(prime: u64, birth: Rational, death: ExtRational) -> Result<Self> {
        match death {
            ExtRational::Infinity => GridModule::new(
                prime,
                vec![birth],
                vec![1],
                vec![],
            ),
            ExtRational::Finite(d) => {
                if birth >= d {
                    return Err(Error::InvalidModule(format!(
                        "interval needs birth < death, got [{birth}, {d})"
                    )));
                }
                GridModule::new(
                    prime,
                    vec![birth, d],
                    vec![1, 0],
                    vec![Matrix::zeros(prime, 0, 1)],
                )
            }
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn maps(&self) -> &[Matrix] {
        &self.maps
    }

    pub fn is_zero_module(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    /// Index of the grid cell containing t: the largest i with t_i <= t.
    pub fn cell_index(&self, t: &Rational) -> Option<usize> {
        match self.grid.binary_search(t) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    pub fn dim_at(&self, t: &Rational) -> usize {
        self.cell_index(t).map_or(0, |i| self.dims[i])
    }

    /// The internal map U(s <= t) as a matrix, for s <= t.
    pub fn map_between(&self, s: &Rational, t: &Rational) -> Matrix {
        assert!(s <= t, "map_between needs s <= t");
        let ct = self.cell_index(t);
        let cs = self.cell_index(s);
        match (cs, ct) {
            (None, None) => Matrix::identity(self.prime, 0),
            (None, Some(j)) => Matrix::zeros(self.prime, self.dims[j], 0),
            (Some(i), Some(j)) => {
                let mut acc = Matrix::identity(self.prime, self.dims[i]);
                for k in i..j {
                    acc = self.maps[k].mul(&acc);
                }
                acc
            }
            (Some(_), None) => unreachable!("s <= t but cell(s) > cell(t)"),
        }
    }

    /// The translate U T_e with (U T_e)(a) = U(a + e); grid values move to
    /// t_i - e. Any finite e is allowed.
    pub fn shift(&self, e: &Rational) -> GridModule {
        GridModule {
            prime: self.prime,
            grid: self.grid.iter().map(|t| t - e).collect(),
            dims: self.dims.clone(),
            maps: self.maps.clone(),
        }
    }

    /// Re-presents the module on a refinement grid containing the original
    /// one, with identical pointwise semantics.
    pub fn restrict_to_grid(&self, new_grid: &[Rational]) -> Result<GridModule> {
        for w in new_grid.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidModule(
                    "refinement grid not strictly increasing".into(),
                ));
            }
        }
        for t in &self.grid {
            if new_grid.binary_search(t).is_err() {
                return Err(Error::Precondition(format!(
                    "refinement grid is missing the critical value {t}"
                )));
            }
        }
        let dims: Vec<usize> = new_grid.iter().map(|t| self.dim_at(t)).collect();
        let maps: Vec<Matrix> = new_grid
            .windows(2)
            .map(|w| self.map_between(&w[0], &w[1]))
            .collect();
        GridModule::new(self.prime, new_grid.to_vec(), dims, maps)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &GridModule) -> Result<GridModule> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        let grid = merge_grids(&[self.grid.clone(), other.grid.clone()]);
        let dims: Vec<usize> = grid
            .iter()
            .map(|t| self.dim_at(t) + other.dim_at(t))
            .collect();
        let maps: Vec<Matrix> = grid
            .windows(2)
            .map(|w| {
                self.map_between(&w[0], &w[1])
                    .block_diag(&other.map_between(&w[0], &w[1]))
            })
            .collect();
        GridModule::new(self.prime, grid, dims, maps)
    }

    /// Drops grid points that change nothing: leading zero-dimensional
    /// points and points whose incoming structure map is invertible. The
    /// result is pointwise isomorphic (equal dimension function and equal
    /// ranks of all internal maps).
    pub fn simplify(&self) -> GridModule {
        let mut grid = Vec::new();
        let mut dims = Vec::new();
        let mut maps: Vec<Matrix> = Vec::new();
        for i in 0..self.grid.len() {
            let keep = if dims.is_empty() {
                self.dims[i] > 0
            } else {
                let incoming = self.map_between(grid.last().unwrap(), &self.grid[i]);
                incoming.rows() != incoming.cols() || incoming.inverse().is_none()
            };
            if keep {
                if let Some(prev) = grid.last() {
                    maps.push(self.map_between(prev, &self.grid[i]));
                }
                grid.push(self.grid[i].clone());
                dims.push(self.dims[i]);
            }
        }
        GridModule::new(self.prime, grid, dims, maps).expect("simplify preserves validity")
    }
}

impl std::fmt::Debug for GridModule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "GridModule(F{}, grid {:?}, dims {:?})",
            self.prime, self.grid, self.dims
        )
    }
}

/// Sorted union of several grids.
pub fn merge_grids(grids: &[Vec<Rational>]) -> Vec<Rational> {
    let mut all: Vec<Rational> = grids.iter().flatten().cloned().collect();
    all.sort();
    all.dedup();
    all
}

/// A shifted morphism Phi: U -> V T_e, e >= 0, stored per refinement cell.
#[derive(Clone, PartialEq, Eq)]
pub struct ModuleMorphism {
    source: GridModule,
    target: GridModule,
    shift: Rational,
    grid: Vec<Rational>,
    components: Vec<Matrix>,
}

/// The canonical refinement on whose cells a morphism U -> V T_e is
/// constant: grid(U) together with grid(V) shifted down by e.
pub fn morphism_refinement(source: &GridModule, target: &GridModule, shift: &Rational) -> Vec<Rational> {
    merge_grids(&[
        source.grid().to_vec(),
        target.grid().iter().map(|t| t - shift).collect(),
    ])
}

impl ModuleMorphism {
    /// Builds a morphism from a component for each canonical refinement
    /// cell, validating shapes. Commutativity is *not* checked here; see
    /// [`ModuleMorphism::verify`].
    pub fn from_fn(
        source: GridModule,
        target: GridModule,
        shift: Rational,
        f: impl Fn(&Rational) -> Matrix,
    ) -> Result<Self> {
        if source.prime() != target.prime() {
            return Err(Error::PrimeMismatch(source.prime(), target.prime()));
        }
        if shift.is_negative() {
            return Err(Error::InvalidMorphism(format!(
                "morphism shift must be >= 0, got {shift}"
            )));
        }
        let grid = morphism_refinement(&source, &target, &shift);
        let mut components = Vec::with_capacity(grid.len());
        for g in &grid {
            let m = f(g);
            let want_rows = target.dim_at(&(g + &shift));
            let want_cols = source.dim_at(g);
            if m.rows() != want_rows || m.cols() != want_cols {
                return Err(Error::InvalidMorphism(format!(
                    "component at {g} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    want_rows,
                    want_cols
                )));
            }
            if m.prime() != source.prime() {
                return Err(Error::PrimeMismatch(source.prime(), m.prime()));
            }
            components.push(m);
        }
        Ok(ModuleMorphism {
            source,
            target,
            shift,
            grid,
            components,
        })
    }

    /// Builds a morphism from components declared on an arbitrary grid,
    /// sampling them onto the canonical refinement.
    pub fn from_parts(
        source: GridModule,
        target: GridModule,
        shift: Rational,
        declared_grid: &[Rational],
        declared: &[Matrix],
    ) -> Result<Self> {
        if declared_grid.len() != declared.len() {
            return Err(Error::InvalidMorphism(format!(
                "{} grid values but {} components",
                declared_grid.len(),
                declared.len()
            )));
        }
        let prime = source.prime();
        let at = |t: &Rational| -> Matrix {
            match declared_grid.binary_search(t) {
                Ok(i) => declared[i].clone(),
                Err(0) => Matrix::zeros(prime, 0, 0),
                Err(i) => declared[i - 1].clone(),
            }
        };
        ModuleMorphism::from_fn(source, target, shift, at)
    }

    pub fn zero(source: GridModule, target: GridModule, shift: Rational) -> Result<Self> {
        let prime = source.prime();
        let t = target.clone();
        let s = source.clone();
        let shift2 = shift.clone();
        ModuleMorphism::from_fn(source, target, shift, move |g| {
            Matrix::zeros(prime, t.dim_at(&(g + &shift2)), s.dim_at(g))
        })
    }

    pub fn source(&self) -> &GridModule {
        &self.source
    }

    pub fn target(&self) -> &GridModule {
        &self.target
    }

    pub fn shift(&self) -> &Rational {
        &self.shift
    }

    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn components(&self) -> &[Matrix] {
        &self.components
    }

    /// The component at an arbitrary time (constant on refinement cells).
    pub fn component_at(&self, t: &Rational) -> Matrix {
        match self.grid.binary_search(t) {
            Ok(i) => self.components[i].clone(),
            Err(0) => Matrix::zeros(
                self.source.prime(),
                self.target.dim_at(&(t + &self.shift)),
                self.source.dim_at(t),
            ),
            Err(i) => self.components[i - 1].clone(),
        }
    }

    /// True iff every commuting square holds exactly.
    pub fn verify(&self) -> bool {
        for w in self.grid.windows(2) {
            let (g0, g1) = (&w[0], &w[1]);
            let u_map = self.source.map_between(g0, g1);
            let v_map = self
                .target
                .map_between(&(g0 + &self.shift), &(g1 + &self.shift));
            let lhs = self.component_at(g1).mul(&u_map);
            let rhs = v_map.mul(&self.component_at(g0));
            if lhs != rhs {
                return false;
            }
        }
        true
    }

    /// Pointwise sum of two morphisms between the same modules at the same
    /// shift.
    pub fn add(&self, other: &ModuleMorphism) -> Result<ModuleMorphism> {
        if self.source != other.source || self.target != other.target || self.shift != other.shift
        {
            return Err(Error::InvalidMorphism(
                "sum of morphisms with different types".into(),
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(other.components.iter()) {
            *a = a.add(b);
        }
        Ok(out)
    }

    pub fn scale(&self, c: u64) -> ModuleMorphism {
        let mut out = self.clone();
        for a in out.components.iter_mut() {
            *a = a.scale(c);
        }
        out
    }

    /// Inverse of a shift-0 isomorphism.
    pub fn invert(&self) -> Result<ModuleMorphism> {
        if !self.shift.is_zero() {
            return Err(Error::InvalidMorphism(
                "only shift-0 morphisms can be inverted".into(),
            ));
        }
        let comps: Result<Vec<Matrix>> = self
            .components
            .iter()
            .map(|m| {
                m.inverse().ok_or_else(|| {
                    Error::InvalidMorphism("component is not invertible".into())
                })
            })
            .collect();
        let comps = comps?;
        let grid = self.grid.clone();
        ModuleMorphism::from_parts(
            self.target.clone(),
            self.source.clone(),
            Rational::zero(),
            &grid,
            &comps,
        )
    }

    /// Serializable data (shift, refinement grid, components); the source
    /// and target modules are context the container format carries.
    pub fn to_data(&self) -> MorphismData {
        MorphismData {
            shift: self.shift.clone(),
            grid: self.grid.clone(),
            components: self.components.iter().map(|m| m.to_rows()).collect(),
        }
    }
}

impl std::fmt::Debug for ModuleMorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ModuleMorphism(shift {}, grid {:?}, components {:?})",
            self.shift, self.grid, self.components
        )
    }
}

/// The canonical morphism sigma_e: U -> U T_e whose component at s is
/// U(s <= s + e). Defined for e >= 0 only.
pub fn sigma(u: &GridModule, e: &Rational) -> Result<ModuleMorphism> {
    if e.is_negative() {
        return Err(Error::InvalidMorphism(format!(
            "sigma needs e >= 0, got {e}"
        )));
    }
    let m = u.clone();
    let e2 = e.clone();
    ModuleMorphism::from_fn(u.clone(), u.clone(), e.clone(), move |g| {
        m.map_between(g, &(g + &e2))
    })
}

/// The identity morphism of U.
pub fn identity(u: &GridModule) -> ModuleMorphism {
    sigma(u, &Rational::zero()).expect("identity is sigma_0")
}

/// Composite of Phi: U -> V T_e with Psi: V -> W T_f, namely
/// (Psi T_e) Phi: U -> W T_{e+f}, with component s -> Psi(s+e) Phi(s).
pub fn compose(phi: &ModuleMorphism, psi: &ModuleMorphism) -> Result<ModuleMorphism> {
    if phi.target != psi.source {
        return Err(Error::InvalidMorphism(
            "compose: target of first != source of second".into(),
        ));
    }
    let shift = &phi.shift + &psi.shift;
    let phi2 = phi.clone();
    let psi2 = psi.clone();
    ModuleMorphism::from_fn(phi.source.clone(), psi.target.clone(), shift, move |g| {
        psi2.component_at(&(g + &phi2.shift)).mul(&phi2.component_at(g))
    })
}

/// True iff (Psi T_e) Phi = U sigma_2e and (Phi T_e) Psi = V sigma_2e hold
/// as exact matrix identities, i.e. (Phi, Psi) is an e-interleaving.
pub fn verify_interleaving(
    phi: &ModuleMorphism,
    psi: &ModuleMorphism,
    e: &Rational,
) -> Result<bool> {
    if phi.shift() != e || psi.shift() != e {
        return Err(Error::InvalidMorphism(format!(
            "interleaving shift mismatch: {} and {} vs e = {e}",
            phi.shift(),
            psi.shift()
        )));
    }
    if phi.source != psi.target || phi.target != psi.source {
        return Err(Error::InvalidMorphism(
            "interleaving morphisms do not pair up".into(),
        ));
    }
    let two_e = e.double();
    let lhs = compose(phi, psi)?;
    if lhs != sigma(&phi.source, &two_e)? {
        return Ok(false);
    }
    let rhs = compose(psi, phi)?;
    Ok(rhs == sigma(&psi.source, &two_e)?)
}

/// A basis of the vector space Hom(U, V T_e), found by solving the
/// commuting-square linear system for the per-cell components.
pub fn hom_basis(u: &GridModule, v: &GridModule, e: &Rational) -> Result<Vec<ModuleMorphism>> {
    if u.prime() != v.prime() {
        return Err(Error::PrimeMismatch(u.prime(), v.prime()));
    }
    if e.is_negative() {
        return Err(Error::InvalidMorphism(format!(
            "hom shift must be >= 0, got {e}"
        )));
    }
    let p = u.prime();
    let grid = morphism_refinement(u, v, e);
    // Unknown block j has shape rows[j] x cols[j].
    let rows: Vec<usize> = grid.iter().map(|g| v.dim_at(&(g + e))).collect();
    let cols: Vec<usize> = grid.iter().map(|g| u.dim_at(g)).collect();
    let offsets: Vec<usize> = {
        let mut acc = 0;
        let mut o = Vec::with_capacity(grid.len() + 1);
        for j in 0..grid.len() {
            o.push(acc);
            acc += rows[j] * cols[j];
        }
        o.push(acc);
        o
    };
    let nvars = *offsets.last().unwrap();

    // Constraint: M_{j+1} A_j - B_j M_j = 0 for consecutive cells.
    let mut constraint_rows: Vec<Vec<u64>> = Vec::new();
    for j in 0..grid.len().saturating_sub(1) {
        let a = u.map_between(&grid[j], &grid[j + 1]);
        let b = v.map_between(&(&grid[j] + e), &(&grid[j + 1] + e));
        // Entry (r, c) of the constraint block, r < rows[j+1], c < cols[j].
        for r in 0..rows[j + 1] {
            for c in 0..cols[j] {
                let mut row = vec![0u64; nvars];
                // (M_{j+1} A_j)_{rc} = sum_k M_{j+1}[r,k] A_j[k,c]
                for k in 0..cols[j + 1] {
                    let coeff = a.raw(k, c);
                    if coeff != 0 {
                        let var = offsets[j + 1] + r * cols[j + 1] + k;
                        row[var] = (row[var] + coeff) % p;
                    }
                }
                // -(B_j M_j)_{rc} = -sum_k B_j[r,k] M_j[k,c]
                for k in 0..rows[j] {
                    let coeff = b.raw(r, k);
                    if coeff != 0 {
                        let var = offsets[j] + k * cols[j] + c;
                        row[var] = (row[var] + p - coeff) % p;
                    }
                }
                if row.iter().any(|&x| x != 0) {
                    constraint_rows.push(row);
                }
            }
        }
    }

    let mut system = Matrix::zeros(p, constraint_rows.len(), nvars);
    for (i, row) in constraint_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                system.set_raw(i, j, v);
            }
        }
    }
    let kernel = linalg::kernel_basis(&system);

    let mut basis = Vec::with_capacity(kernel.cols());
    for b in 0..kernel.cols() {
        let mut comps = Vec::with_capacity(grid.len());
        for j in 0..grid.len() {
            let mut m = Matrix::zeros(p, rows[j], cols[j]);
            for r in 0..rows[j] {
                for c in 0..cols[j] {
                    m.set_raw(r, c, kernel.raw(offsets[j] + r * cols[j] + c, b));
                }
            }
            comps.push(m);
        }
        basis.push(ModuleMorphism::from_parts(
            u.clone(),
            v.clone(),
            e.clone(),
            &grid,
            &comps,
        )?);
    }
    Ok(basis)
}

/// The linear combination of the basis morphisms with the given
/// coefficients; the basis must be nonempty.
pub fn linear_combination(
    basis: &[ModuleMorphism],
    coeffs: &[u64],
) -> Result<ModuleMorphism> {
    let first = basis.first().ok_or_else(|| {
        Error::InvalidMorphism("linear combination of an empty basis".into())
    })?;
    assert_eq!(basis.len(), coeffs.len());
    let mut acc = first.scale(coeffs[0]);
    for (b, &c) in basis.iter().zip(coeffs.iter()).skip(1) {
        acc = acc.add(&b.scale(c))?;
    }
    Ok(acc)
}

// --- serde ---

#[derive(Serialize, Deserialize)]
struct GridModuleDto {
    p: u64,
    grid: Vec<Rational>,
    dims: Vec<usize>,
    maps: Vec<Vec<Vec<u64>>>,
}

impl Serialize for GridModule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GridModuleDto {
            p: self.prime,
            grid: self.grid.clone(),
            dims: self.dims.clone(),
            maps: self.maps.iter().map(|m| m.to_rows()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridModule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = GridModuleDto::deserialize(deserializer)?;
        let mut maps = Vec::with_capacity(dto.maps.len());
        for (i, rows) in dto.maps.iter().enumerate() {
            let want_rows = *dto.dims.get(i + 1).unwrap_or(&0);
            let want_cols = *dto.dims.get(i).unwrap_or(&0);
            let data: Vec<Vec<i64>> = rows
                .iter()
                .map(|r| r.iter().map(|&x| x as i64).collect())
                .collect();
            let m = Matrix::from_rows(dto.p, want_rows, want_cols, &data)
                .map_err(|e| D::Error::custom(format!("map {i}: {e}")))?;
            maps.push(m);
        }
        GridModule::new(dto.p, dto.grid, dto.dims, maps)
            .map_err(|e| D::Error::custom(format!("{e}")))
    }
}

/// Wire form of a morphism: shift plus per-cell matrices on a declared
/// refinement grid. Source and target modules travel separately.
#[derive(Clone, Serialize, Deserialize)]
pub struct MorphismData {
    pub shift: Rational,
    pub grid: Vec<Rational>,
    pub components: Vec<Vec<Vec<u64>>>,
}

impl MorphismData {
    pub fn into_morphism(
        self,
        source: GridModule,
        target: GridModule,
    ) -> Result<ModuleMorphism> {
        let prime = source.prime();
        let mut comps = Vec::with_capacity(self.components.len());
        for (i, rows) in self.components.iter().enumerate() {
            let g = self.grid.get(i).ok_or_else(|| {
                Error::InvalidMorphism("component without grid value".into())
            })?;
            let want_rows = target.dim_at(&(g + &self.shift));
            let want_cols = source.dim_at(g);
            let data: Vec<Vec<i64>> = rows
                .iter()
                .map(|r| r.iter().map(|&x| x as i64).collect())
                .collect();
            comps.push(Matrix::from_rows(prime, want_rows, want_cols, &data)?);
        }
        ModuleMorphism::from_parts(source, target, self.shift, &self.grid, &comps)
    }
}
