//! Finite symmetric Lawvere metric spaces, their spacetime posets, and
//! world lines.
//!
//! The spacetime of a metric space M is M x R with (x,s) <= (y,t) iff
//! d(x,y) <= t - s; here the time axis is discretized to a finite rational
//! grid. Distances may be infinite and distinct points may be at distance
//! zero (the Lawvere relaxation), in which case the order is a genuine
//! pre-order rather than a partial order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{ExtRational, Rational};

/// A finite symmetric Lawvere metric space: labelled points and an exact,
/// possibly infinite, distance table.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "MetricDto", into = "MetricDto")]
pub struct FiniteMetricSpace {
    points: Vec<String>,
    dist: Vec<Vec<ExtRational>>,
}

#[derive(Serialize, Deserialize)]
struct MetricDto {
    points: Vec<String>,
    dist: Vec<Vec<ExtRational>>,
}

impl From<FiniteMetricSpace> for MetricDto {
    fn from(m: FiniteMetricSpace) -> Self {
        MetricDto {
            points: m.points,
            dist: m.dist,
        }
    }
}

impl TryFrom<MetricDto> for FiniteMetricSpace {
    type Error = Error;
    fn try_from(dto: MetricDto) -> Result<Self> {
        FiniteMetricSpace::new(dto.points, dto.dist)
    }
}

impl FiniteMetricSpace {
    pub fn new(points: Vec<String>, dist: Vec<Vec<ExtRational>>) -> Result<Self> {
        let n = points.len();
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::InvalidMetric(format!("duplicate label {p:?}")));
            }
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidMetric(format!(
                "distance table is not {n}x{n}"
            )));
        }
        for i in 0..n {
            if dist[i][i] != ExtRational::zero() {
                return Err(Error::InvalidMetric(format!(
                    "d({0},{0}) = {1} != 0",
                    points[i], dist[i][i]
                )));
            }
            for j in 0..n {
                if dist[i][j] != dist[j][i] {
                    return Err(Error::InvalidMetric(format!(
                        "asymmetric: d({},{}) = {} but d({},{}) = {}",
                        points[i], points[j], dist[i][j], points[j], points[i], dist[j][i]
                    )));
                }
                if let ExtRational::Finite(d) = &dist[i][j] {
                    if d.is_negative() {
                        return Err(Error::InvalidMetric(format!(
                            "negative distance d({},{}) = {d}",
                            points[i], points[j]
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j].add(&dist[j][k]) {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails: d({},{}) > d(.,{}) sum",
                            points[i], points[k], points[j]
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { points, dist })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.points
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p == label)
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    pub fn distance(&self, i: usize, j: usize) -> &ExtRational {
        &self.dist[i][j]
    }

    /// True when d(x,y) = 0 forces x = y, i.e. the pre-order on spacetime
    /// is a partial order.
    pub fn is_genuine_metric(&self) -> bool {
        (0..self.len()).all(|i| {
            (0..self.len()).all(|j| i == j || self.dist[i][j] != ExtRational::zero())
        })
    }

    /// Checks that this space embeds isometrically into `bigger` by label,
    /// returning the index of each of our points there.
    pub fn embedding_into(&self, bigger: &FiniteMetricSpace) -> Result<Vec<usize>> {
        let mut map = Vec::with_capacity(self.len());
        for p in &self.points {
            map.push(bigger.index(p)?);
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.dist[i][j] != bigger.dist[map[i]][map[j]] {
                    return Err(Error::InvalidMetric(format!(
                        "not an isometric embedding: d({},{}) differs",
                        self.points[i], self.points[j]
                    )));
                }
            }
        }
        Ok(map)
    }
}

/// The discretized spacetime M x Gamma with the relation
/// (x,s) <= (y,t) iff d(x,y) <= t - s.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpacetimePoset {
    space: FiniteMetricSpace,
    grid: Vec<Rational>,
}

/// An element (point index, grid index) of a spacetime poset.
pub type Element = (usize, usize);

impl SpacetimePoset {
    pub fn new(space: FiniteMetricSpace, grid: Vec<Rational>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidMetric("empty spacetime grid".into()));
        }
        for w in grid.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidMetric(
                    "spacetime grid not strictly increasing".into(),
                ));
            }
        }
        Ok(SpacetimePoset { space, grid })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.space.len())
            .flat_map(move |p| (0..self.grid.len()).map(move |g| (p, g)))
    }

    /// The defining relation: (x,s) <= (y,t) iff d(x,y) <= t - s.
    pub fn order(&self, a: Element, b: Element) -> Result<bool> {
        let n = self.space.len();
        let k = self.grid.len();
        if a.0 >= n || b.0 >= n || a.1 >= k || b.1 >= k {
            return Err(Error::UnknownPoint(format!(
                "element out of range: {a:?} or {b:?}"
            )));
        }
        let gap = &self.grid[b.1] - &self.grid[a.1];
        Ok(*self.space.distance(a.0, b.0) <= ExtRational::Finite(gap))
    }
}

/// An order-preserving map of spacetime posets induced by a 1-Lipschitz
/// point map, acting as (x,s) -> (f(x), s).
#[derive(Clone, Debug)]
pub struct SpacetimeMap {
    source: SpacetimePoset,
    target: SpacetimePoset,
    point_map: Vec<usize>,
}

impl SpacetimeMap {
    pub fn point_map(&self) -> &[usize] {
        &self.point_map
    }

    pub fn apply(&self, el: Element) -> Element {
        (self.point_map[el.0], el.1)
    }

    pub fn source(&self) -> &SpacetimePoset {
        &self.source
    }

    pub fn target(&self) -> &SpacetimePoset {
        &self.target
    }

    /// Pushes a world line forward along the map.
    pub fn map_worldline(&self, w: &WorldLine) -> Result<WorldLine> {
        if w.poset != self.source {
            return Err(Error::Precondition(
                "world line lives in a different poset".into(),
            ));
        }
        WorldLine::new(
            self.target.clone(),
            self.point_map[w.before],
            w.values.iter().map(|&v| self.point_map[v]).collect(),
        )
    }

    pub fn compose(&self, after: &SpacetimeMap) -> Result<SpacetimeMap> {
        if self.target != after.source {
            return Err(Error::Precondition("composable maps required".into()));
        }
        Ok(SpacetimeMap {
            source: self.source.clone(),
            target: after.target.clone(),
            point_map: self.point_map.iter().map(|&v| after.point_map[v]).collect(),
        })
    }
}

/// Verifies that the labelled point map is 1-Lipschitz and returns the
/// induced spacetime map; order preservation is re-verified on all related
/// pairs of the discretized posets.
pub fn map_spacetime(
    point_map: &[(String, String)],
    source: &SpacetimePoset,
    target: &SpacetimePoset,
) -> Result<SpacetimeMap> {
    if source.grid != target.grid {
        return Err(Error::Precondition(
            "source and target spacetimes must share the time grid".into(),
        ));
    }
    let m = source.space();
    let n = target.space();
    let mut map = vec![usize::MAX; m.len()];
    for (from, to) in point_map {
        map[m.index(from)?] = n.index(to)?;
    }
    if let Some(i) = map.iter().position(|&v| v == usize::MAX) {
        return Err(Error::UnknownPoint(format!(
            "no image given for point {}",
            m.labels()[i]
        )));
    }
    for i in 0..m.len() {
        for j in 0..m.len() {
            if n.distance(map[i], map[j]) > m.distance(i, j) {
                return Err(Error::NotLipschitz {
                    x: m.labels()[i].clone(),
                    y: m.labels()[j].clone(),
                    from: m.distance(i, j).to_string(),
                    to: n.distance(map[i], map[j]).to_string(),
                });
            }
        }
    }
    let out = SpacetimeMap {
        source: source.clone(),
        target: target.clone(),
        point_map: map,
    };
    // Order preservation, re-checked directly on the discretized poset.
    for a in source.elements() {
        for b in source.elements() {
            if source.order(a, b)? && !target.order(out.apply(a), out.apply(b))? {
                return Err(Error::Precondition(format!(
                    "induced map fails to preserve {a:?} <= {b:?}"
                )));
            }
        }
    }
    Ok(out)
}

/// A step function Gamma -> points, viewed as the world line
/// s -> (value(s), s). Constant on cells [g_i, g_{i+1}), constant beyond
/// the last grid value, with a designated value before the first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WorldLine {
    poset: SpacetimePoset,
    before: usize,
    values: Vec<usize>,
}

impl WorldLine {
    /// Requires the discretized functor property: consecutive values must
    /// satisfy d(w(g_i), w(g_{i+1})) <= g_{i+1} - g_i (and the before-value
    /// must reach the first value at zero cost horizon, i.e. d = 0 or the
    /// jump happens at g_0 which is free going forward in time).
    pub fn new(poset: SpacetimePoset, before: usize, values: Vec<usize>) -> Result<Self> {
        if values.len() != poset.grid().len() {
            return Err(Error::Precondition(format!(
                "{} values for {} grid points",
                values.len(),
                poset.grid().len()
            )));
        }
        let n = poset.space().len();
        if before >= n || values.iter().any(|&v| v >= n) {
            return Err(Error::UnknownPoint("world line value out of range".into()));
        }
        for (w, gap) in values.windows(2).zip(poset.grid().windows(2)) {
            let d = poset.space().distance(w[0], w[1]);
            if *d > ExtRational::Finite(&gap[1] - &gap[0]) {
                return Err(Error::Precondition(format!(
                    "world line jumps too far between {} and {}",
                    gap[0], gap[1]
                )));
            }
        }
        Ok(WorldLine {
            poset,
            before,
            values,
        })
    }

    pub fn poset(&self) -> &SpacetimePoset {
        &self.poset
    }

    /// The value at an arbitrary real time, by floor semantics.
    pub fn value_at(&self, t: &Rational) -> usize {
        match self.poset.grid().binary_search(t) {
            Ok(i) => self.values[i],
            Err(0) => self.before,
            Err(i) => self.values[i - 1],
        }
    }
}

/// The constant world line s -> (x, s): the unit of the spacetime
/// adjunction-that-isn't, restricted to the point x.
pub fn eta(space: &FiniteMetricSpace, grid: &[Rational], label: &str) -> Result<WorldLine> {
    let poset = SpacetimePoset::new(space.clone(), grid.to_vec())?;
    let x = space.index(label)?;
    let k = grid.len();
    WorldLine::new(poset, x, vec![x; k])
}

/// Interleaving distance of two world lines over the same poset: the
/// minimum e in the finite candidate set such that
/// d(w1(s), w2(s+e)) <= e and d(w2(s), w1(s+e)) <= e hold for all s,
/// checked on cell representatives; infinity if no candidate works.
pub fn worldline_interleaving_distance(w1: &WorldLine, w2: &WorldLine) -> Result<ExtRational> {
    if w1.poset != w2.poset {
        return Err(Error::Precondition(
            "world lines live in different posets".into(),
        ));
    }
    let poset = &w1.poset;
    let space = poset.space();
    let grid = poset.grid();

    // Candidates: 0, all finite distances, and all d(p,q) - (g_i - g_j)
    // that are >= 0.
    let mut candidates: std::collections::BTreeSet<Rational> = std::collections::BTreeSet::new();
    candidates.insert(Rational::zero());
    for i in 0..space.len() {
        for j in 0..space.len() {
            if let ExtRational::Finite(d) = space.distance(i, j) {
                if !d.is_negative() {
                    candidates.insert(d.clone());
                }
                for gi in grid {
                    for gj in grid {
                        let c = d - &(gi - gj);
                        if !c.is_negative() {
                            candidates.insert(c);
                        }
                    }
                }
            }
        }
    }

    let feasible = |e: &Rational| -> bool {
        // Representatives: one point below every cell boundary of the
        // common refinement Gamma union (Gamma - e), the boundaries
        // themselves, and nothing beyond the last (everything is constant
        // there, which the last representative covers).
        let mut boundaries: Vec<Rational> = grid.to_vec();
        boundaries.extend(grid.iter().map(|g| g - e));
        boundaries.sort();
        boundaries.dedup();
        let mut reps = boundaries.clone();
        reps.push(&boundaries[0] - &Rational::one());
        for s in &reps {
            let a = w1.value_at(s);
            let b = w2.value_at(&(s + e));
            if *space.distance(a, b) > ExtRational::Finite(e.clone()) {
                return false;
            }
            let a = w2.value_at(s);
            let b = w1.value_at(&(s + e));
            if *space.distance(a, b) > ExtRational::Finite(e.clone()) {
                return false;
            }
        }
        true
    };

    for e in candidates {
        if feasible(&e) {
            return Ok(ExtRational::Finite(e));
        }
    }
    Ok(ExtRational::Infinity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn ext(s: &str) -> ExtRational {
        s.parse().unwrap()
    }

    fn space(labels: &[&str], rows: &[&[&str]]) -> FiniteMetricSpace {
        FiniteMetricSpace::new(
            labels.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| ext(s)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn two_points(d: &str) -> FiniteMetricSpace {
        space(&["x", "y"], &[&["0", d], &[d, "0"]])
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![
                vec![ext("0"), ext("1")],
                vec![ext("2"), ext("0")], // asymmetric
            ],
        )
        .is_err());

        // Triangle inequality violation.
        assert!(FiniteMetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![ext("0"), ext("1"), ext("5")],
                vec![ext("1"), ext("0"), ext("1")],
                vec![ext("5"), ext("1"), ext("0")],
            ],
        )
        .is_err());

        // Pseudo-metrics and infinite distances are fine.
        let m = space(
            &["a", "b", "c"],
            &[
                &["0", "0", "inf"],
                &["0", "0", "inf"],
                &["inf", "inf", "0"],
            ],
        );
        assert!(!m.is_genuine_metric());
    }

    #[test]
    fn order_examples() {
        let m = two_points("1");
        let poset = SpacetimePoset::new(m, vec![rat("0"), rat("1/2"), rat("1")]).unwrap();
        // (x,0) <= (x,0): reflexivity.
        assert!(poset.order((0, 0), (0, 0)).unwrap());
        // d(x,y) = 1: (x,0) <= (y,1) but not (x,0) <= (y,1/2).
        assert!(poset.order((0, 0), (1, 2)).unwrap());
        assert!(!poset.order((0, 0), (1, 1)).unwrap());
        assert!(poset.order((0, 3), (0, 0)).is_err());
    }

    #[test]
    fn order_is_a_preorder() {
        let m = space(
            &["a", "b", "c"],
            &[
                &["0", "1", "2"],
                &["1", "0", "3/2"],
                &["2", "3/2", "0"],
            ],
        );
        let grid: Vec<Rational> = ["0", "1/2", "1", "2", "3", "7/2"]
            .iter()
            .map(|s| rat(s))
            .collect();
        let poset = SpacetimePoset::new(m, grid).unwrap();
        let els: Vec<Element> = poset.elements().collect();
        for &a in &els {
            assert!(poset.order(a, a).unwrap(), "reflexivity at {a:?}");
            for &b in &els {
                for &c in &els {
                    if poset.order(a, b).unwrap() && poset.order(b, c).unwrap() {
                        assert!(poset.order(a, c).unwrap(), "transitivity {a:?} {b:?} {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn lipschitz_verification() {
        let m = two_points("2");
        let n = two_points("1");
        let grid = vec![rat("0"), rat("1")];
        let pm = SpacetimePoset::new(m.clone(), grid.clone()).unwrap();
        let pn = SpacetimePoset::new(n.clone(), grid.clone()).unwrap();

        // Contracting map is fine.
        let f = map_spacetime(
            &[("x".into(), "x".into()), ("y".into(), "y".into())],
            &pm,
            &pn,
        )
        .unwrap();
        assert_eq!(f.apply((1, 0)), (1, 0));

        // Expanding map is rejected with a witness.
        let err = map_spacetime(
            &[("x".into(), "x".into()), ("y".into(), "y".into())],
            &pn,
            &pm,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotLipschitz { .. }));

        // Constant maps are always 1-Lipschitz.
        map_spacetime(
            &[("x".into(), "x".into()), ("y".into(), "x".into())],
            &pm,
            &pn,
        )
        .unwrap();
    }

    #[test]
    fn eta_is_isometric() {
        let m = space(
            &["a", "b", "c"],
            &[
                &["0", "3", "inf"],
                &["3", "0", "inf"],
                &["inf", "inf", "0"],
            ],
        );
        let grid = vec![rat("0"), rat("1")];
        let ea = eta(&m, &grid, "a").unwrap();
        let eb = eta(&m, &grid, "b").unwrap();
        let ec = eta(&m, &grid, "c").unwrap();
        assert_eq!(
            worldline_interleaving_distance(&ea, &ea).unwrap(),
            ExtRational::zero()
        );
        assert_eq!(worldline_interleaving_distance(&ea, &eb).unwrap(), ext("3"));
        assert_eq!(
            worldline_interleaving_distance(&ea, &ec).unwrap(),
            ExtRational::Infinity
        );
        assert!(eta(&m, &grid, "zzz").is_err());
        assert_ne!(ea, eb);
    }

    #[test]
    fn eta_naturality() {
        let m = two_points("2");
        let n = space(
            &["u", "v", "w"],
            &[
                &["0", "1", "1"],
                &["1", "0", "2"],
                &["1", "2", "0"],
            ],
        );
        let grid = vec![rat("0"), rat("1"), rat("2")];
        let pm = SpacetimePoset::new(m.clone(), grid.clone()).unwrap();
        let pn = SpacetimePoset::new(n.clone(), grid.clone()).unwrap();
        let f = map_spacetime(
            &[("x".into(), "u".into()), ("y".into(), "v".into())],
            &pm,
            &pn,
        )
        .unwrap();
        for (p, fp) in [("x", "u"), ("y", "v")] {
            let lhs = f.map_worldline(&eta(&m, &grid, p).unwrap()).unwrap();
            let rhs = eta(&n, &grid, fp).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn spacetime_functoriality() {
        let m = two_points("2");
        let grid = vec![rat("0"), rat("1")];
        let pm = SpacetimePoset::new(m.clone(), grid.clone()).unwrap();
        let id = map_spacetime(
            &[("x".into(), "x".into()), ("y".into(), "y".into())],
            &pm,
            &pm,
        )
        .unwrap();
        let swap = map_spacetime(
            &[("x".into(), "y".into()), ("y".into(), "x".into())],
            &pm,
            &pm,
        )
        .unwrap();
        let c = swap.compose(&swap).unwrap();
        assert_eq!(c.point_map(), id.point_map());
    }

    #[test]
    fn worldline_distance_uses_shifts() {
        // A world line that jumps from x to y at time 1 vs the constant
        // line at y: sliding by 1 aligns them within distance 1.
        let m = two_points("1");
        let grid = vec![rat("0"), rat("1")];
        let poset = SpacetimePoset::new(m.clone(), grid.clone()).unwrap();
        let jumping = WorldLine::new(poset.clone(), 0, vec![0, 1]).unwrap();
        let constant = eta(&m, &grid, "y").unwrap();
        let d = worldline_interleaving_distance(&jumping, &constant).unwrap();
        assert_eq!(d, ext("1"));
    }

    #[test]
    fn metric_json_roundtrip() {
        let m = space(
            &["a", "b", "c"],
            &[
                &["0", "1", "1"],
                &["1", "0", "1"],
                &["1", "1", "0"],
            ],
        );
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains(r#""points":["a","b","c"]"#));
        let back: FiniteMetricSpace = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
