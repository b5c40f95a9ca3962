//! Interval decomposition of grid modules via the rank invariant.
//!
//! The rank invariant r(i,j) = rank U(t_i <= t_j) is a complete invariant
//! for one-parameter modules; inclusion-exclusion on it recovers the
//! multiplicity of every interval summand, giving the persistence diagram
//! without computing an explicit basis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::module::{merge_grids, GridModule};
use crate::rational::{ExtRational, Rational};

/// A point of a persistence diagram with its multiplicity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: Rational,
    pub death: ExtRational,
    #[serde(rename = "mult")]
    pub multiplicity: usize,
}

/// A multiset of half-open intervals [birth, death), kept sorted with
/// duplicate points merged, so multiset equality is plain equality.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "DiagramDto", into = "DiagramDto")]
pub struct PersistenceDiagram {
    points: Vec<DiagramPoint>,
}

#[derive(Serialize, Deserialize)]
struct DiagramDto {
    points: Vec<DiagramPoint>,
}

impl From<PersistenceDiagram> for DiagramDto {
    fn from(d: PersistenceDiagram) -> Self {
        DiagramDto { points: d.points }
    }
}

impl TryFrom<DiagramDto> for PersistenceDiagram {
    type Error = Error;
    fn try_from(dto: DiagramDto) -> Result<Self> {
        PersistenceDiagram::new(dto.points)
    }
}

impl PersistenceDiagram {
    pub fn new(points: Vec<DiagramPoint>) -> Result<Self> {
        for p in &points {
            if p.multiplicity == 0 {
                return Err(Error::InvalidDiagram(format!(
                    "zero multiplicity at ({}, {})",
                    p.birth, p.death
                )));
            }
            match &p.death {
                ExtRational::Infinity => {}
                ExtRational::Finite(d) => {
                    if &p.birth >= d {
                        return Err(Error::InvalidDiagram(format!(
                            "birth {} is not before death {}",
                            p.birth, d
                        )));
                    }
                }
            }
        }
        let mut merged: BTreeMap<(Rational, ExtRational), usize> = BTreeMap::new();
        for p in points {
            *merged.entry((p.birth, p.death)).or_insert(0) += p.multiplicity;
        }
        Ok(PersistenceDiagram {
            points: merged
                .into_iter()
                .map(|((birth, death), multiplicity)| DiagramPoint {
                    birth,
                    death,
                    multiplicity,
                })
                .collect(),
        })
    }

    pub fn empty() -> Self {
        PersistenceDiagram { points: vec![] }
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// All points repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<(Rational, ExtRational)> {
        let mut out = Vec::with_capacity(self.total_multiplicity());
        for p in &self.points {
            for _ in 0..p.multiplicity {
                out.push((p.birth.clone(), p.death.clone()));
            }
        }
        out
    }
}

/// The table r(i,j) = rank of U(t_i <= t_j) for 0 <= i <= j < k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RankInvariant {
    grid: Vec<Rational>,
    // ranks[i][j - i] = r(i, j)
    ranks: Vec<Vec<usize>>,
}

impl RankInvariant {
    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        assert!(i <= j && j < self.grid.len());
        self.ranks[i][j - i]
    }
}

/// Exact ranks of all composites U(t_i) -> U(t_j).
pub fn rank_invariant(u: &GridModule) -> RankInvariant {
    let k = u.grid().len();
    let mut ranks = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = Vec::with_capacity(k - i);
        row.push(u.dims()[i]);
        let mut acc = Matrix::identity(u.prime(), u.dims()[i]);
        for j in i + 1..k {
            acc = u.maps()[j - 1].mul(&acc);
            row.push(linalg::rank(&acc));
        }
        ranks.push(row);
    }
    RankInvariant {
        grid: u.grid().to_vec(),
        ranks,
    }
}

/// The persistence diagram of a grid module, by inclusion-exclusion on the
/// rank invariant. Multiplicity of the finite bar [t_i, t_j) is
/// r(i,j-1) - r(i,j) - r(i-1,j-1) + r(i-1,j) with r(-1, .) = 0, and the
/// multiplicity of [t_i, inf) is r(i,k-1) - r(i-1,k-1).
pub fn barcode(u: &GridModule) -> PersistenceDiagram {
    let ri = rank_invariant(u);
    let k = u.grid().len();
    let mut points = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let mut mult = ri.rank(i, j - 1) as i64 - ri.rank(i, j) as i64;
            if i > 0 {
                mult -= ri.rank(i - 1, j - 1) as i64 - ri.rank(i - 1, j) as i64;
            }
            assert!(
                mult >= 0,
                "negative multiplicity {mult} for bar [{}, {}): rank invariant is not interval-decomposable, which cannot happen for A_n modules",
                u.grid()[i],
                u.grid()[j]
            );
            if mult > 0 {
                points.push(DiagramPoint {
                    birth: u.grid()[i].clone(),
                    death: ExtRational::Finite(u.grid()[j].clone()),
                    multiplicity: mult as usize,
                });
            }
        }
        let mut inf_mult = ri.rank(i, k - 1) as i64;
        if i > 0 {
            inf_mult -= ri.rank(i - 1, k - 1) as i64;
        }
        assert!(inf_mult >= 0, "negative multiplicity for infinite bar");
        if inf_mult > 0 {
            points.push(DiagramPoint {
                birth: u.grid()[i].clone(),
                death: ExtRational::Infinity,
                multiplicity: inf_mult as usize,
            });
        }
    }
    PersistenceDiagram::new(points).expect("barcode produces a valid diagram")
}

/// A direct sum of interval modules realizing the diagram.
pub fn module_from_diagram(dgm: &PersistenceDiagram, prime: u64) -> Result<GridModule> {
    let bars = dgm.expanded();
    if bars.is_empty() {
        return Ok(GridModule::zero(prime));
    }
    let mut grids: Vec<Vec<Rational>> = vec![];
    for (b, d) in &bars {
        let mut g = vec![b.clone()];
        if let ExtRational::Finite(d) = d {
            g.push(d.clone());
        }
        grids.push(g);
    }
    let grid = merge_grids(&grids);
    let alive = |bar: &(Rational, ExtRational), t: &Rational| -> bool {
        &bar.0 <= t
            && match &bar.1 {
                ExtRational::Infinity => true,
                ExtRational::Finite(d) => t < d,
            }
    };
    let dims: Vec<usize> = grid
        .iter()
        .map(|t| bars.iter().filter(|b| alive(b, t)).count())
        .collect();
    let mut maps = Vec::with_capacity(grid.len().saturating_sub(1));
    for w in grid.windows(2) {
        let src: Vec<usize> = (0..bars.len()).filter(|&i| alive(&bars[i], &w[0])).collect();
        let dst: Vec<usize> = (0..bars.len()).filter(|&i| alive(&bars[i], &w[1])).collect();
        let mut m = Matrix::zeros(prime, dst.len(), src.len());
        for (col, bar) in src.iter().enumerate() {
            if let Some(row) = dst.iter().position(|b| b == bar) {
                m.set_raw(row, col, 1);
            }
        }
        maps.push(m);
    }
    GridModule::new(prime, grid, dims, maps)
}
