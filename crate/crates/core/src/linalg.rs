//! Exact linear algebra over a prime field F_p.
//!
//! Everything downstream (structure maps, hom-space solving, Kan extension
//! presentations) reduces to ranks, kernels, cokernel presentations and
//! linear solves computed here by Gaussian elimination with first-nonzero
//! pivoting. Zero-dimensional spaces are ordinary 0-by-n or n-by-0 matrices,
//! never a special case.

use crate::error::{Error, Result};

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // Extended Euclid; a must be nonzero mod p.
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert!(r == 1, "attempted to invert {a} mod {p}");
    t.rem_euclid(p as i128) as u64
}

/// A residue in F_p, paired with its prime.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldElement {
    value: u64,
    prime: u64,
}

impl FieldElement {
    pub fn new(value: i64, prime: u64) -> Self {
        assert!(is_prime(prime), "{prime} is not prime");
        FieldElement {
            value: value.rem_euclid(prime as i64) as u64,
            prime,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn add(&self, rhs: &FieldElement) -> FieldElement {
        assert_eq!(self.prime, rhs.prime);
        FieldElement {
            value: (self.value + rhs.value) % self.prime,
            prime: self.prime,
        }
    }

    pub fn mul(&self, rhs: &FieldElement) -> FieldElement {
        assert_eq!(self.prime, rhs.prime);
        FieldElement {
            value: (self.value as u128 * rhs.value as u128 % self.prime as u128) as u64,
            prime: self.prime,
        }
    }

    pub fn inv(&self) -> FieldElement {
        FieldElement {
            value: mod_inv(self.value, self.prime),
            prime: self.prime,
        }
    }
}

/// A dense matrix over F_p, row-major. A 0-by-n or n-by-0 matrix is valid
/// and represents a map to or from the zero space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    prime: u64,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl Matrix {
    pub fn zeros(prime: u64, rows: usize, cols: usize) -> Self {
        assert!(is_prime(prime), "{prime} is not prime");
        Matrix {
            prime,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(prime: u64, n: usize) -> Self {
        let mut m = Matrix::zeros(prime, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from rows of integer entries (reduced mod p).
    pub fn from_rows(prime: u64, rows: usize, cols: usize, data: &[Vec<i64>]) -> Result<Self> {
        if data.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows} rows, got {}",
                data.len()
            )));
        }
        let mut m = Matrix::zeros(prime, rows, cols);
        for (i, row) in data.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m.entries[i * cols + j] = v.rem_euclid(prime as i64) as u64;
            }
        }
        Ok(m)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        FieldElement {
            value: self.entries[i * self.cols + j],
            prime: self.prime,
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert_eq!(v.prime, self.prime);
        self.entries[i * self.cols + j] = v.value;
    }

    pub fn raw(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.cols + j]
    }

    pub fn set_raw(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.cols + j] = v % self.prime;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Matrix::identity(self.prime, self.rows)
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|i| self.entries[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.prime, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.prime, rhs.prime, "prime mismatch in matrix product");
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let p = self.prime as u128;
        let mut out = Matrix::zeros(self.prime, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                let a = a as u128;
                for j in 0..rhs.cols {
                    let b = rhs.entries[k * rhs.cols + j] as u128;
                    if b == 0 {
                        continue;
                    }
                    let idx = i * rhs.cols + j;
                    out.entries[idx] = ((out.entries[idx] as u128 + a * b) % p) as u64;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.prime, rhs.prime);
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(rhs.entries.iter()) {
            *a = (*a + *b) % self.prime;
        }
        out
    }

    pub fn neg(&self) -> Matrix {
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a = (self.prime - *a) % self.prime;
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, c: u64) -> Matrix {
        let p = self.prime as u128;
        let c = (c as u128) % p;
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a = ((*a as u128 * c) % p) as u64;
        }
        out
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.prime, rhs.prime);
        assert_eq!(self.rows, rhs.rows);
        let mut out = Matrix::zeros(self.prime, self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[i * out.cols + j] = self.entries[i * self.cols + j];
            }
            for j in 0..rhs.cols {
                out.entries[i * out.cols + self.cols + j] = rhs.entries[i * rhs.cols + j];
            }
        }
        out
    }

    /// Vertical concatenation [self; rhs].
    pub fn vstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.prime, rhs.prime);
        assert_eq!(self.cols, rhs.cols);
        let mut out = Matrix::zeros(self.prime, self.rows + rhs.rows, self.cols);
        out.entries[..self.entries.len()].copy_from_slice(&self.entries);
        out.entries[self.entries.len()..].copy_from_slice(&rhs.entries);
        out
    }

    pub fn block_diag(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.prime, rhs.prime);
        let mut out = Matrix::zeros(self.prime, self.rows + rhs.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[i * out.cols + j] = self.entries[i * self.cols + j];
            }
        }
        for i in 0..rhs.rows {
            for j in 0..rhs.cols {
                out.entries[(self.rows + i) * out.cols + self.cols + j] =
                    rhs.entries[i * rhs.cols + j];
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Matrix {
        let mut out = Matrix::zeros(self.prime, self.rows, 1);
        for i in 0..self.rows {
            out.entries[i] = self.entries[i * self.cols + j];
        }
        out
    }

    /// Row echelon reduction in place; returns pivot columns in order.
    fn rref_in_place(&mut self) -> Vec<usize> {
        let p = self.prime;
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row >= self.rows {
                break;
            }
            // First nonzero entry at or below pivot_row.
            let found = (pivot_row..self.rows).find(|&r| self.entries[r * self.cols + col] != 0);
            let Some(r) = found else { continue };
            if r != pivot_row {
                for j in 0..self.cols {
                    self.entries.swap(r * self.cols + j, pivot_row * self.cols + j);
                }
            }
            let inv = mod_inv(self.entries[pivot_row * self.cols + col], p) as u128;
            for j in 0..self.cols {
                let idx = pivot_row * self.cols + j;
                self.entries[idx] = ((self.entries[idx] as u128 * inv) % p as u128) as u64;
            }
            for r2 in 0..self.rows {
                if r2 == pivot_row {
                    continue;
                }
                let f = self.entries[r2 * self.cols + col];
                if f == 0 {
                    continue;
                }
                let f = f as u128;
                for j in 0..self.cols {
                    let sub = (f * self.entries[pivot_row * self.cols + j] as u128) % p as u128;
                    let idx = r2 * self.cols + j;
                    self.entries[idx] =
                        ((self.entries[idx] as u128 + p as u128 - sub) % p as u128) as u64;
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    /// Inverse of a square invertible matrix, if it exists.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let aug = self.hstack(&Matrix::identity(self.prime, self.rows));
        let (red, pivots) = aug.rref();
        if pivots.len() != self.rows || pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut inv = Matrix::zeros(self.prime, self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                inv.entries[i * self.rows + j] = red.entries[i * red.cols + self.cols + j];
            }
        }
        Some(inv)
    }
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Matrix(F{}, {}x{}) {:?}", self.prime, self.rows, self.cols, self.to_rows())
    }
}

/// Dimension of the column space.
pub fn rank(m: &Matrix) -> usize {
    m.rref().1.len()
}

/// Columns form a basis of the null space; width = cols - rank.
pub fn kernel_basis(m: &Matrix) -> Matrix {
    let p = m.prime;
    let (red, pivots) = m.rref();
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Matrix::zeros(p, m.cols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        basis.entries[fc * basis.cols + k] = 1;
        for (r, &pc) in pivots.iter().enumerate() {
            // Pivot variable = -sum over free columns of reduced entry.
            let v = red.entries[r * red.cols + fc];
            basis.entries[pc * basis.cols + k] = (p - v) % p;
        }
    }
    basis
}

/// Any solution x of m*x = b (column-wise), or NoSolution.
pub fn solve(m: &Matrix, b: &Matrix) -> Result<Matrix> {
    if m.rows != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "solve: {} equation rows vs {} rhs rows",
            m.rows, b.rows
        )));
    }
    if m.prime != b.prime {
        return Err(Error::PrimeMismatch(m.prime, b.prime));
    }
    let aug = m.hstack(b);
    let (red, pivots) = aug.rref();
    // Any pivot inside the rhs block means an inconsistent row.
    if pivots.iter().any(|&c| c >= m.cols) {
        return Err(Error::NoSolution);
    }
    let mut x = Matrix::zeros(m.prime, m.cols, b.cols);
    for (r, &pc) in pivots.iter().enumerate() {
        for j in 0..b.cols {
            x.entries[pc * b.cols + j] = red.entries[r * red.cols + m.cols + j];
        }
    }
    Ok(x)
}

/// A basis of the column space, as matrix columns.
pub fn column_space_basis(m: &Matrix) -> Matrix {
    let (_, pivots) = m.rref();
    let mut out = Matrix::zeros(m.prime, m.rows, pivots.len());
    for (k, &c) in pivots.iter().enumerate() {
        for i in 0..m.rows {
            out.entries[i * out.cols + k] = m.entries[i * m.cols + c];
        }
    }
    out
}

/// A surjection proj: F^rows -> F^dim whose kernel is the column space of m,
/// together with dim = rows - rank(m). Realizes the quotient by im(m).
pub fn cokernel_presentation(m: &Matrix) -> (Matrix, usize) {
    let p = m.prime;
    // Row space of the transpose = column space of m.
    let (red, pivots) = m.transpose().rref();
    let non_pivots: Vec<usize> = (0..m.rows).filter(|c| !pivots.contains(c)).collect();
    let dim = non_pivots.len();
    let mut proj = Matrix::zeros(p, dim, m.rows);
    for (out_i, &q) in non_pivots.iter().enumerate() {
        // e_q passes through untouched.
        proj.entries[out_i * m.rows + q] = 1;
        // e_{pivot r} reduces to minus the reduced row, restricted to
        // non-pivot coordinates.
        for (r, &pc) in pivots.iter().enumerate() {
            let v = red.entries[r * red.cols + q];
            proj.entries[out_i * m.rows + pc] = (p - v) % p;
        }
    }
    (proj, dim)
}

/// The unique q with q * projA = projB * mapAB, given that mapAB carries
/// ker(projA) into ker(projB). The precondition is checked on kernel
/// generators of projA.
pub fn induced_map_on_quotients(
    proj_a: &Matrix,
    map_ab: &Matrix,
    proj_b: &Matrix,
) -> Result<Matrix> {
    if map_ab.cols() != proj_a.cols() || map_ab.rows() != proj_b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "induced map: map is {}x{}, projections act on {} and {}",
            map_ab.rows(),
            map_ab.cols(),
            proj_a.cols(),
            proj_b.cols()
        )));
    }
    let ker = kernel_basis(proj_a);
    if !proj_b.mul(&map_ab.mul(&ker)).is_zero() {
        return Err(Error::Precondition(
            "map does not carry ker(projA) into ker(projB)".into(),
        ));
    }
    // Solve projA^T q^T = (projB mapAB)^T column by column.
    let rhs = proj_b.mul(map_ab).transpose();
    let qt = solve(&proj_a.transpose(), &rhs)?;
    Ok(qt.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u64, data: &[Vec<i64>]) -> Matrix {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        Matrix::from_rows(p, rows, cols, data).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&Matrix::identity(2, 2)), 2);
        assert_eq!(rank(&Matrix::zeros(2, 2, 2)), 0);
        assert_eq!(rank(&m(2, &[vec![1, 1], vec![1, 1]])), 1);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&Matrix::identity(2, 2)).cols(), 0);
        let k = kernel_basis(&Matrix::zeros(2, 3, 4));
        assert!(k.is_identity());
        let k = kernel_basis(&m(2, &[vec![1, 1]]));
        assert_eq!(k.cols(), 1);
        assert_eq!(k.raw(0, 0), 1);
        assert_eq!(k.raw(1, 0), 1);
    }

    #[test]
    fn solve_examples() {
        let b = m(2, &[vec![0], vec![1]]);
        assert_eq!(solve(&Matrix::identity(2, 2), &b).unwrap(), b);

        let zero = Matrix::zeros(2, 2, 2);
        assert!(matches!(solve(&zero, &b), Err(Error::NoSolution)));

        let a = m(2, &[vec![1, 1], vec![0, 1]]);
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.mul(&x), b);
        assert_eq!(x, m(2, &[vec![1], vec![1]]));
    }

    #[test]
    fn solve_shape_mismatch() {
        let a = Matrix::zeros(2, 2, 2);
        let b = Matrix::zeros(2, 3, 1);
        assert!(matches!(solve(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cokernel_examples() {
        let (proj, dim) = cokernel_presentation(&Matrix::zeros(2, 3, 1));
        assert_eq!(dim, 3);
        assert!(proj.is_identity());

        let (_, dim) = cokernel_presentation(&Matrix::identity(2, 3));
        assert_eq!(dim, 0);

        let col = m(2, &[vec![1], vec![1]]);
        let (proj, dim) = cokernel_presentation(&col);
        assert_eq!(dim, 1);
        assert!(proj.mul(&col).is_zero());
        assert_eq!(rank(&proj), 1);
    }

    #[test]
    fn induced_map_examples() {
        let id3 = Matrix::identity(3, 3);
        let f = m(3, &[vec![1, 2, 0], vec![0, 1, 1], vec![2, 0, 1]]);
        assert_eq!(induced_map_on_quotients(&id3, &f, &id3).unwrap(), f);

        let zero = Matrix::zeros(3, 3, 3);
        let q = induced_map_on_quotients(&id3, &zero, &id3).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn induced_map_precondition_detected() {
        // proj kills e2, but the map sends e2 to e1 which survives.
        let proj = m(2, &[vec![1, 0]]);
        let f = m(2, &[vec![0, 1], vec![0, 0]]);
        assert!(matches!(
            induced_map_on_quotients(&proj, &f, &proj),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn induced_map_random_property() {
        // q * projA = projB * mapAB entrywise on random valid triples,
        // built by quotienting by the image of a random matrix and mapping
        // through a compatible map.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for p in [2u64, 3, 5] {
            for _ in 0..20 {
                let n = 4;
                let mut rel = Matrix::zeros(p, n, 2);
                for i in 0..n {
                    for j in 0..2 {
                        rel.set_raw(i, j, next() % p);
                    }
                }
                // mapAB must carry im(rel) into im(rel): use a polynomial in
                // a map that fixes im(rel): simplest is scalar + rel*anything.
                let mut g = Matrix::zeros(p, 2, n);
                for i in 0..2 {
                    for j in 0..n {
                        g.set_raw(i, j, next() % p);
                    }
                }
                let f = Matrix::identity(p, n).scale(next() % p).add(&rel.mul(&g));
                let (proj, _) = cokernel_presentation(&rel);
                let q = induced_map_on_quotients(&proj, &f, &proj).unwrap();
                assert_eq!(q.mul(&proj), proj.mul(&f));
            }
        }
    }

    #[test]
    fn rank_nullity() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for p in [2u64, 3, 5] {
            for rows in 0..4 {
                for cols in 0..4 {
                    for _ in 0..10 {
                        let mut a = Matrix::zeros(p, rows, cols);
                        for i in 0..rows {
                            for j in 0..cols {
                                a.set_raw(i, j, next() % p);
                            }
                        }
                        let k = kernel_basis(&a);
                        assert_eq!(rank(&a) + k.cols(), cols);
                        if k.cols() > 0 {
                            assert!(a.mul(&k).is_zero());
                        }
                        let (proj, dim) = cokernel_presentation(&a);
                        assert!(proj.mul(&a).is_zero());
                        assert_eq!(rank(&proj), dim);
                        assert_eq!(dim, rows - rank(&a));
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let a = m(5, &[vec![1, 2], vec![3, 4]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert!(inv.mul(&a).is_identity());
        assert!(m(2, &[vec![1, 1], vec![1, 1]]).inverse().is_none());
    }

    #[test]
    fn field_element_ops() {
        let a = FieldElement::new(-1, 5);
        assert_eq!(a.value(), 4);
        assert_eq!(a.add(&FieldElement::new(1, 5)).value(), 0);
        assert_eq!(a.mul(&a.inv()).value(), 1);
    }
}
