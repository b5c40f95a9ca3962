//! Coherent systems of persistence modules and their Kan extensions over
//! spacetime posets.
//!
//! A coherent system on a finite metric space A is one module U_a per point
//! plus a morphism Phi_ab: U_a -> U_b T_{d(a,b)} per ordered pair, subject
//! to two exact identities:
//!
//! - pair condition: Phi_ba after Phi_ab equals sigma_{2 d(a,b)} on U_a;
//! - triangle condition: Phi_bc after Phi_ab equals Phi_ac followed by the
//!   sigma of the slack d(a,b) + d(b,c) - d(a,c).
//!
//! These identities are exactly functoriality of the induced assignment
//! G(a,t) = U_a(t) on the spacetime of A, which is what makes pointwise Kan
//! extensions along an isometric embedding A into M well defined. The left
//! (right) extension at a query point (x,t) is the colimit (limit) over the
//! down-set (up-set) of (x,t); both reduce to finite exact linear algebra
//! anchored at one chain value per point of A. The image extension factors
//! the canonical comparison from the left to the right extension.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::module::{compose, merge_grids, sigma, GridModule, ModuleMorphism, MorphismData};
use crate::rational::{ExtRational, Rational};
use crate::spacetime::{FiniteMetricSpace, SpacetimePoset};

/// Which pointwise Kan extension to take.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExtensionMode {
    Lan,
    Ran,
    Image,
}

impl std::str::FromStr for ExtensionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lan" => Ok(ExtensionMode::Lan),
            "ran" => Ok(ExtensionMode::Ran),
            "image" => Ok(ExtensionMode::Image),
            other => Err(Error::Parse(format!("unknown extension mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for ExtensionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtensionMode::Lan => write!(f, "lan"),
            ExtensionMode::Ran => write!(f, "ran"),
            ExtensionMode::Image => write!(f, "image"),
        }
    }
}

/// All three modes, for tests and sweeps.
pub const ALL_MODES: [ExtensionMode; 3] =
    [ExtensionMode::Lan, ExtensionMode::Ran, ExtensionMode::Image];

/// Modules indexed by the points of a finite metric space, with one
/// interleaving-type morphism per ordered pair at finite distance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoherentSystem {
    space: FiniteMetricSpace,
    modules: Vec<GridModule>,
    morphisms: BTreeMap<(usize, usize), ModuleMorphism>,
}

impl CoherentSystem {
    pub fn new(
        space: FiniteMetricSpace,
        modules: Vec<GridModule>,
        morphisms: BTreeMap<(usize, usize), ModuleMorphism>,
    ) -> Result<Self> {
        let n = space.len();
        if modules.len() != n {
            return Err(Error::Precondition(format!(
                "{} modules for {} points",
                modules.len(),
                n
            )));
        }
        if let Some(first) = modules.first() {
            for m in &modules {
                if m.prime() != first.prime() {
                    return Err(Error::PrimeMismatch(first.prime(), m.prime()));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    if morphisms.contains_key(&(a, b)) {
                        return Err(Error::Precondition(
                            "no morphism expected on the diagonal".into(),
                        ));
                    }
                    continue;
                }
                match space.distance(a, b) {
                    ExtRational::Infinity => {
                        if morphisms.contains_key(&(a, b)) {
                            return Err(Error::Precondition(format!(
                                "morphism given for infinitely distant pair ({a},{b})"
                            )));
                        }
                    }
                    ExtRational::Finite(d) => {
                        let phi = morphisms.get(&(a, b)).ok_or_else(|| {
                            Error::Precondition(format!(
                                "missing morphism for pair ({},{})",
                                space.labels()[a],
                                space.labels()[b]
                            ))
                        })?;
                        if phi.source() != &modules[a] || phi.target() != &modules[b] {
                            return Err(Error::Precondition(format!(
                                "morphism ({a},{b}) does not match its modules"
                            )));
                        }
                        if phi.shift() != d {
                            return Err(Error::Precondition(format!(
                                "morphism ({a},{b}) has shift {}, expected {d}",
                                phi.shift()
                            )));
                        }
                    }
                }
            }
        }
        Ok(CoherentSystem {
            space,
            modules,
            morphisms,
        })
    }

    /// A single module over a one-point space.
    pub fn singleton(label: &str, module: GridModule) -> Result<Self> {
        let space =
            FiniteMetricSpace::new(vec![label.to_string()], vec![vec![ExtRational::zero()]])?;
        CoherentSystem::new(space, vec![module], BTreeMap::new())
    }

    /// The common-source system: every point carries V and every morphism
    /// is the canonical sigma of the distance. Always coherent.
    pub fn common_source(space: FiniteMetricSpace, v: GridModule) -> Result<Self> {
        let n = space.len();
        let mut morphisms = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                if let ExtRational::Finite(d) = space.distance(a, b) {
                    morphisms.insert((a, b), sigma(&v, d)?);
                }
            }
        }
        CoherentSystem::new(space, vec![v; n], morphisms)
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn modules(&self) -> &[GridModule] {
        &self.modules
    }

    pub fn module(&self, label: &str) -> Result<&GridModule> {
        Ok(&self.modules[self.space.index(label)?])
    }

    pub fn morphisms(&self) -> &BTreeMap<(usize, usize), ModuleMorphism> {
        &self.morphisms
    }

    pub fn prime(&self) -> u64 {
        self.modules.first().map_or(2, |m| m.prime())
    }

    fn finite_distance(&self, a: usize, b: usize) -> Option<&Rational> {
        self.space.distance(a, b).as_finite()
    }

    /// The arrow G((a,s) <= (b,t)) of the induced spacetime functor, for
    /// any rational times with d(a,b) <= t - s.
    pub fn arrow(&self, a: usize, s: &Rational, b: usize, t: &Rational) -> Result<Matrix> {
        if a == b {
            if s > t {
                return Err(Error::Precondition(format!(
                    "arrow needs s <= t, got {s} > {t}"
                )));
            }
            return Ok(self.modules[a].map_between(s, t));
        }
        let d = self.finite_distance(a, b).ok_or_else(|| {
            Error::Precondition(format!("no arrow between infinitely distant {a} and {b}"))
        })?;
        if &(t - s) < d {
            return Err(Error::Precondition(format!("no arrow: d = {d} > {t} - {s}")));
        }
        let phi = &self.morphisms[&(a, b)];
        let mid = s + d;
        Ok(self.modules[b].map_between(&mid, t).mul(&phi.component_at(s)))
    }
}

/// Outcome of a coherence check; empty violations means coherent.
#[derive(Clone, Debug, Default)]
pub struct CoherenceReport {
    pub violations: Vec<String>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the naturality of every morphism, the pair condition, and the
/// triangle condition, reporting each violated identity.
pub fn verify_coherent(s: &CoherentSystem) -> CoherenceReport {
    let mut report = CoherenceReport::default();
    let labels = s.space.labels();
    for ((a, b), phi) in &s.morphisms {
        if !phi.verify() {
            report.violations.push(format!(
                "morphism {}->{} is not natural",
                labels[*a], labels[*b]
            ));
        }
    }
    let n = s.space.len();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let Some(d_ab) = s.finite_distance(a, b) else {
                continue;
            };
            let phi = &s.morphisms[&(a, b)];
            let psi = &s.morphisms[&(b, a)];
            let lhs = compose(phi, psi).expect("types line up");
            let rhs = sigma(&s.modules[a], &d_ab.double()).expect("sigma");
            if lhs != rhs {
                report.violations.push(format!(
                    "pair condition fails for ({}, {})",
                    labels[a], labels[b]
                ));
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let (Some(d_bc), Some(d_ac)) = (s.finite_distance(b, c), s.finite_distance(a, c))
                else {
                    continue;
                };
                let slack = &(d_ab + d_bc) - d_ac;
                let lhs = compose(phi, &s.morphisms[&(b, c)]).expect("types line up");
                let rhs = compose(
                    &s.morphisms[&(a, c)],
                    &sigma(&s.modules[c], &slack).expect("slack >= 0 by the triangle inequality"),
                )
                .expect("types line up");
                if lhs != rhs {
                    report.violations.push(format!(
                        "triangle condition fails for ({}, {}, {})",
                        labels[a], labels[b], labels[c]
                    ));
                }
            }
        }
    }
    report
}

/// A functor on the discretized spacetime A x Gamma, backed by a coherent
/// system: values are G(a,t) = U_a(t), arrows come from the system's
/// morphisms composed with internal sigma slack.
#[derive(Clone, Debug)]
pub struct SpacetimeFunctor {
    poset: SpacetimePoset,
    system: CoherentSystem,
}

/// Builds the functor after checking coherence (equivalent to
/// functoriality on the thin poset) and that Gamma contains every module
/// grid value.
pub fn system_to_functor(s: &CoherentSystem, grid: &[Rational]) -> Result<SpacetimeFunctor> {
    let report = verify_coherent(s);
    if !report.is_coherent() {
        return Err(Error::Incoherent(report.violations.join("; ")));
    }
    for m in &s.modules {
        for t in m.grid() {
            if grid.binary_search(t).is_err() {
                return Err(Error::Precondition(format!(
                    "grid is not closed: missing module critical value {t}"
                )));
            }
        }
    }
    let poset = SpacetimePoset::new(s.space.clone(), grid.to_vec())?;
    Ok(SpacetimeFunctor {
        poset,
        system: s.clone(),
    })
}

/// The inverse direction: the coherent system presenting the functor.
pub fn functor_to_system(g: &SpacetimeFunctor) -> CoherentSystem {
    g.system.clone()
}

impl SpacetimeFunctor {
    pub fn poset(&self) -> &SpacetimePoset {
        &self.poset
    }

    pub fn system(&self) -> &CoherentSystem {
        &self.system
    }

    pub fn dim(&self, el: (usize, usize)) -> usize {
        self.system.modules[el.0].dim_at(&self.poset.grid()[el.1])
    }

    /// The arrow between two related poset elements.
    pub fn arrow(&self, from: (usize, usize), to: (usize, usize)) -> Result<Matrix> {
        if !self.poset.order(from, to)? {
            return Err(Error::Precondition(format!(
                "elements {from:?} and {to:?} are not related"
            )));
        }
        self.system.arrow(
            from.0,
            &self.poset.grid()[from.1],
            to.0,
            &self.poset.grid()[to.1],
        )
    }

    /// Full functoriality check: every composable pair of arrows composes
    /// to the direct arrow. Cubic in the poset size; meant for desk-scale
    /// grids.
    pub fn verify_functoriality(&self) -> Result<bool> {
        let els: Vec<(usize, usize)> = self.poset.elements().collect();
        for &u in &els {
            for &v in &els {
                if !self.poset.order(u, v)? {
                    continue;
                }
                let uv = self.arrow(u, v)?;
                for &w in &els {
                    if !self.poset.order(v, w)? {
                        continue;
                    }
                    let vw = self.arrow(v, w)?;
                    if vw.mul(&uv) != self.arrow(u, w)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// The assignment theta: each point of A gets its module, re-presented
    /// on the functor's grid.
    pub fn theta(&self) -> Result<Vec<GridModule>> {
        self.system
            .modules
            .iter()
            .map(|m| m.restrict_to_grid(self.poset.grid()))
            .collect()
    }
}

/// Closure helper: the base values together with every base value shifted
/// by plus or minus each distance.
pub fn grid_closure(base: &[Rational], distances: &[Rational]) -> Vec<Rational> {
    let mut out: Vec<Rational> = base.to_vec();
    for c in base {
        for d in distances {
            out.push(c + d);
            out.push(c - d);
        }
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------
// Pointwise presentations
// ---------------------------------------------------------------------

/// A colimit over the down-set of a query point, presented as a surjection
/// from the direct sum of one anchor value per point of A.
#[derive(Clone, Debug)]
pub struct ColimitPresentation {
    /// Chain anchor time per point of A; None when the point is infinitely
    /// far from the query, so its chain misses the down-set entirely.
    pub anchors: Vec<Option<Rational>>,
    pub block_dims: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
    /// Surjection total -> dim whose kernel is spanned by the relations.
    pub projection: Matrix,
    pub dim: usize,
}

impl ColimitPresentation {
    /// The cocone leg at point a's anchor: U_a(anchor) -> colimit.
    pub fn leg(&self, a: usize) -> Matrix {
        let mut block = Matrix::zeros(self.projection.prime(), self.dim, self.block_dims[a]);
        for i in 0..self.dim {
            for j in 0..self.block_dims[a] {
                block.set_raw(i, j, self.projection.raw(i, self.offsets[a] + j));
            }
        }
        block
    }
}

/// A limit over the up-set of a query point, presented as a subspace of
/// the direct sum of one anchor value per point of A.
#[derive(Clone, Debug)]
pub struct LimitPresentation {
    pub anchors: Vec<Option<Rational>>,
    pub block_dims: Vec<usize>,
    pub offsets: Vec<usize>,
    pub total: usize,
    /// Inclusion dim -> total; columns form a basis of the limit subspace.
    pub inclusion: Matrix,
    pub dim: usize,
}

impl LimitPresentation {
    /// The cone leg at point a's anchor: limit -> U_a(anchor).
    pub fn leg(&self, a: usize) -> Matrix {
        let mut block = Matrix::zeros(self.inclusion.prime(), self.block_dims[a], self.dim);
        for i in 0..self.block_dims[a] {
            for j in 0..self.dim {
                block.set_raw(i, j, self.inclusion.raw(self.offsets[a] + i, j));
            }
        }
        block
    }
}

/// The image of the canonical comparison Lan -> Ran, with its epi-mono
/// factorization.
#[derive(Clone, Debug)]
pub struct ImagePresentation {
    pub lan: ColimitPresentation,
    pub ran: LimitPresentation,
    /// The comparison in quotient/subspace coordinates: lan.dim -> ran.dim.
    pub kappa: Matrix,
    /// Image basis inside the limit coordinates: ran.dim x dim.
    pub basis: Matrix,
    /// Factorization Lan ->> image: dim x lan.dim.
    pub from_lan: Matrix,
    pub dim: usize,
}

/// A pointwise Kan extension value with its presentation data.
#[derive(Clone, Debug)]
pub enum VectorSpacePresentation {
    Colimit(ColimitPresentation),
    Limit(LimitPresentation),
    Image(ImagePresentation),
}

impl VectorSpacePresentation {
    pub fn dim(&self) -> usize {
        match self {
            VectorSpacePresentation::Colimit(c) => c.dim,
            VectorSpacePresentation::Limit(l) => l.dim,
            VectorSpacePresentation::Image(i) => i.dim,
        }
    }
}

/// Time resolution for presentations: exact rational times (the continuous
/// pointwise Kan extension) or times floored/ceiled onto a finite grid
/// (the literal colimit/limit over the discretized poset A x Gamma). On a
/// grid closed for the query the two agree.
#[derive(Clone, Copy)]
enum Resolution<'a> {
    Exact,
    Grid(&'a [Rational]),
}

impl Resolution<'_> {
    fn floor(&self, t: Rational) -> Option<Rational> {
        match self {
            Resolution::Exact => Some(t),
            Resolution::Grid(g) => match g.binary_search(&t) {
                Ok(i) => Some(g[i].clone()),
                Err(0) => None,
                Err(i) => Some(g[i - 1].clone()),
            },
        }
    }

    fn ceil(&self, t: Rational) -> Option<Rational> {
        match self {
            Resolution::Exact => Some(t),
            Resolution::Grid(g) => match g.binary_search(&t) {
                Ok(i) => Some(g[i].clone()),
                Err(i) if i < g.len() => Some(g[i].clone()),
                Err(_) => None,
            },
        }
    }
}

/// Extension context: a coherent system on A seen inside a larger space M.
struct ExtensionContext<'a> {
    system: &'a CoherentSystem,
    big: &'a FiniteMetricSpace,
    /// Index in M of each point of A.
    embed: Vec<usize>,
}

impl<'a> ExtensionContext<'a> {
    fn new(system: &'a CoherentSystem, big: &'a FiniteMetricSpace) -> Result<Self> {
        let embed = system.space().embedding_into(big)?;
        Ok(ExtensionContext { system, big, embed })
    }

    fn prime(&self) -> u64 {
        self.system.prime()
    }

    fn n_points(&self) -> usize {
        self.system.space().len()
    }

    fn dist(&self, a: usize, x: usize) -> &ExtRational {
        self.big.distance(self.embed[a], x)
    }

    fn colimit_at(&self, x: usize, t: &Rational, res: Resolution) -> ColimitPresentation {
        let n = self.n_points();
        let p = self.prime();
        let mut anchors: Vec<Option<Rational>> = Vec::with_capacity(n);
        for a in 0..n {
            anchors.push(match self.dist(a, x) {
                ExtRational::Infinity => None,
                ExtRational::Finite(d) => res.floor(t - d),
            });
        }
        let block_dims: Vec<usize> = (0..n)
            .map(|a| {
                anchors[a]
                    .as_ref()
                    .map_or(0, |tau| self.system.modules()[a].dim_at(tau))
            })
            .collect();
        let mut offsets = Vec::with_capacity(n);
        let mut total = 0;
        for d in &block_dims {
            offsets.push(total);
            total += d;
        }

        // Relation columns: for each ordered pair (a,b), identify the image
        // of the deepest shared source in chain a with its image in chain b.
        let mut columns: Vec<(usize, Matrix, usize, Matrix)> = Vec::new();
        let mut width = 0;
        for a in 0..n {
            let Some(tau_a) = anchors[a].clone() else {
                continue;
            };
            for b in 0..n {
                if a == b {
                    continue;
                }
                let Some(tau_b) = anchors[b].clone() else {
                    continue;
                };
                let Some(d_ab) = self.system.space().distance(a, b).as_finite() else {
                    continue;
                };
                let raw = (&tau_b - d_ab).min(tau_a.clone());
                let Some(source) = res.floor(raw) else {
                    continue;
                };
                let w = self.system.modules()[a].dim_at(&source);
                if w == 0 {
                    continue;
                }
                let up = self.system.modules()[a].map_between(&source, &tau_a);
                let cross = self
                    .system
                    .arrow(a, &source, b, &tau_b)
                    .expect("source chosen within the distance");
                columns.push((a, up, b, cross));
                width += w;
            }
        }
        let mut relations = Matrix::zeros(p, total, width);
        let mut col = 0;
        for (a, up, b, cross) in columns {
            let w = up.cols();
            for j in 0..w {
                for i in 0..up.rows() {
                    relations.set_raw(offsets[a] + i, col + j, up.raw(i, j));
                }
                for i in 0..cross.rows() {
                    relations.set_raw(offsets[b] + i, col + j, p - cross.raw(i, j));
                }
            }
            col += w;
        }
        let (projection, dim) = linalg::cokernel_presentation(&relations);
        ColimitPresentation {
            anchors,
            block_dims,
            offsets,
            total,
            projection,
            dim,
        }
    }

    fn limit_at(&self, x: usize, t: &Rational, res: Resolution) -> LimitPresentation {
        let n = self.n_points();
        let p = self.prime();
        let mut anchors: Vec<Option<Rational>> = Vec::with_capacity(n);
        for a in 0..n {
            anchors.push(match self.dist(a, x) {
                ExtRational::Infinity => None,
                ExtRational::Finite(d) => res.ceil(t + d),
            });
        }
        let block_dims: Vec<usize> = (0..n)
            .map(|a| {
                anchors[a]
                    .as_ref()
                    .map_or(0, |tau| self.system.modules()[a].dim_at(tau))
            })
            .collect();
        let mut offsets = Vec::with_capacity(n);
        let mut total = 0;
        for d in &block_dims {
            offsets.push(total);
            total += d;
        }

        // Constraint rows: for each ordered pair (a,b), commutation into the
        // shallowest shared target in chain b.
        let mut blocks: Vec<(usize, Matrix, usize, Matrix)> = Vec::new();
        let mut height = 0;
        for a in 0..n {
            let Some(tau_a) = anchors[a].clone() else {
                continue;
            };
            for b in 0..n {
                if a == b {
                    continue;
                }
                let Some(tau_b) = anchors[b].clone() else {
                    continue;
                };
                let Some(d_ab) = self.system.space().distance(a, b).as_finite() else {
                    continue;
                };
                let raw = (&tau_a + d_ab).max(tau_b.clone());
                let Some(target) = res.ceil(raw) else {
                    continue;
                };
                let h = self.system.modules()[b].dim_at(&target);
                if h == 0 {
                    continue;
                }
                let via_a = self
                    .system
                    .arrow(a, &tau_a, b, &target)
                    .expect("target chosen beyond the distance");
                let via_b = self.system.modules()[b].map_between(&tau_b, &target);
                blocks.push((a, via_a, b, via_b));
                height += h;
            }
        }
        let mut constraints = Matrix::zeros(p, height, total);
        let mut row = 0;
        for (a, via_a, b, via_b) in blocks {
            let h = via_a.rows();
            for i in 0..h {
                for j in 0..via_a.cols() {
                    constraints.set_raw(row + i, offsets[a] + j, via_a.raw(i, j));
                }
                for j in 0..via_b.cols() {
                    constraints.set_raw(row + i, offsets[b] + j, p - via_b.raw(i, j));
                }
            }
            row += h;
        }
        let inclusion = linalg::kernel_basis(&constraints);
        let dim = inclusion.cols();
        LimitPresentation {
            anchors,
            block_dims,
            offsets,
            total,
            inclusion,
            dim,
        }
    }

    fn image_at(&self, x: usize, t: &Rational, res: Resolution) -> Result<ImagePresentation> {
        let lan = self.colimit_at(x, t, res);
        let ran = self.limit_at(x, t, res);
        let p = self.prime();
        // The comparison on total spaces: every lan anchor maps into every
        // ran anchor through the query point by transitivity.
        let mut k = Matrix::zeros(p, ran.total, lan.total);
        for a in 0..self.n_points() {
            let Some(tau_a) = lan.anchors[a].clone() else {
                continue;
            };
            for b in 0..self.n_points() {
                let Some(tau_b) = ran.anchors[b].clone() else {
                    continue;
                };
                if self.system.space().distance(a, b).is_infinite() {
                    continue;
                }
                let block = self.system.arrow(a, &tau_a, b, &tau_b)?;
                for i in 0..block.rows() {
                    for j in 0..block.cols() {
                        k.set_raw(ran.offsets[b] + i, lan.offsets[a] + j, block.raw(i, j));
                    }
                }
            }
        }
        // Descend through the colimit: q with q . projection = K.
        let q =
            linalg::induced_map_on_quotients(&lan.projection, &k, &Matrix::identity(p, ran.total))?;
        // Land inside the limit subspace: kappa with inclusion . kappa = q.
        let kappa = linalg::solve(&ran.inclusion, &q)
            .map_err(|_| Error::Precondition("comparison map does not land in the limit".into()))?;
        let basis = linalg::column_space_basis(&kappa);
        let from_lan = linalg::solve(&basis, &kappa).expect("kappa factors through its image");
        let dim = basis.cols();
        Ok(ImagePresentation {
            lan,
            ran,
            kappa,
            basis,
            from_lan,
            dim,
        })
    }

    fn presentation_at(
        &self,
        mode: ExtensionMode,
        x: usize,
        t: &Rational,
        res: Resolution,
    ) -> Result<VectorSpacePresentation> {
        Ok(match mode {
            ExtensionMode::Lan => VectorSpacePresentation::Colimit(self.colimit_at(x, t, res)),
            ExtensionMode::Ran => VectorSpacePresentation::Limit(self.limit_at(x, t, res)),
            ExtensionMode::Image => VectorSpacePresentation::Image(self.image_at(x, t, res)?),
        })
    }

    fn chain_map(
        &self,
        from_anchors: &[Option<Rational>],
        from_offsets: &[usize],
        from_total: usize,
        to_anchors: &[Option<Rational>],
        to_offsets: &[usize],
        to_total: usize,
    ) -> Result<Matrix> {
        let mut t = Matrix::zeros(self.prime(), to_total, from_total);
        for a in 0..self.n_points() {
            let (Some(tau_f), Some(tau_t)) = (&from_anchors[a], &to_anchors[a]) else {
                if from_anchors[a].is_some() != to_anchors[a].is_some() {
                    return Err(Error::Precondition(
                        "induced map between incompatible chain families".into(),
                    ));
                }
                continue;
            };
            if tau_f > tau_t {
                return Err(Error::Precondition(
                    "induced map goes backwards in time".into(),
                ));
            }
            let block = self.system.modules()[a].map_between(tau_f, tau_t);
            for i in 0..block.rows() {
                for j in 0..block.cols() {
                    t.set_raw(to_offsets[a] + i, from_offsets[a] + j, block.raw(i, j));
                }
            }
        }
        Ok(t)
    }

    fn colimit_induced(
        &self,
        from: &ColimitPresentation,
        to: &ColimitPresentation,
    ) -> Result<Matrix> {
        let t = self.chain_map(
            &from.anchors,
            &from.offsets,
            from.total,
            &to.anchors,
            &to.offsets,
            to.total,
        )?;
        linalg::induced_map_on_quotients(&from.projection, &t, &to.projection)
    }

    fn limit_induced(&self, from: &LimitPresentation, to: &LimitPresentation) -> Result<Matrix> {
        let t = self.chain_map(
            &from.anchors,
            &from.offsets,
            from.total,
            &to.anchors,
            &to.offsets,
            to.total,
        )?;
        linalg::solve(&to.inclusion, &t.mul(&from.inclusion))
            .map_err(|_| Error::Precondition("limit is not carried into limit".into()))
    }

    /// The map induced by functoriality of the extension between two query
    /// points with (x,t1) <= (y,t2) in the continuous spacetime of M.
    fn induced(
        &self,
        mode: ExtensionMode,
        from: &VectorSpacePresentation,
        to: &VectorSpacePresentation,
    ) -> Result<Matrix> {
        match (from, to) {
            (VectorSpacePresentation::Colimit(f), VectorSpacePresentation::Colimit(g)) => {
                debug_assert_eq!(mode, ExtensionMode::Lan);
                self.colimit_induced(f, g)
            }
            (VectorSpacePresentation::Limit(f), VectorSpacePresentation::Limit(g)) => {
                debug_assert_eq!(mode, ExtensionMode::Ran);
                self.limit_induced(f, g)
            }
            (VectorSpacePresentation::Image(f), VectorSpacePresentation::Image(g)) => {
                debug_assert_eq!(mode, ExtensionMode::Image);
                let q_l = self.colimit_induced(&f.lan, &g.lan)?;
                let q_r = self.limit_induced(&f.ran, &g.ran)?;
                debug_assert_eq!(q_r.mul(&f.kappa), g.kappa.mul(&q_l));
                linalg::solve(&g.basis, &q_r.mul(&f.basis))
                    .map_err(|_| Error::Precondition("image is not carried into image".into()))
            }
            _ => Err(Error::Precondition("presentation mode mismatch".into())),
        }
    }
}

/// Pointwise left Kan extension at (x,t): the colimit over the down-set
/// {(a,s) in A x Gamma : (a,s) <= (x,t)} of the functor, presented as a
/// cokernel. The query time may be any rational; on a grid closed for the
/// query this is also the continuous extension value.
pub fn lan_at(
    g: &SpacetimeFunctor,
    m: &FiniteMetricSpace,
    x: &str,
    t: &Rational,
) -> Result<VectorSpacePresentation> {
    let ctx = ExtensionContext::new(&g.system, m)?;
    let xi = m.index(x)?;
    Ok(VectorSpacePresentation::Colimit(ctx.colimit_at(
        xi,
        t,
        Resolution::Grid(g.poset.grid()),
    )))
}

/// Pointwise right Kan extension at (x,t): the limit over the up-set
/// {(a,s) in A x Gamma : (x,t) <= (a,s)}, as the kernel of the stacked
/// difference map.
pub fn ran_at(
    g: &SpacetimeFunctor,
    m: &FiniteMetricSpace,
    x: &str,
    t: &Rational,
) -> Result<VectorSpacePresentation> {
    let ctx = ExtensionContext::new(&g.system, m)?;
    let xi = m.index(x)?;
    Ok(VectorSpacePresentation::Limit(ctx.limit_at(
        xi,
        t,
        Resolution::Grid(g.poset.grid()),
    )))
}

/// The image of the canonical map Lan -> Ran at (x,t), with its epi-mono
/// factorization.
pub fn image_extension_at(
    g: &SpacetimeFunctor,
    m: &FiniteMetricSpace,
    x: &str,
    t: &Rational,
) -> Result<VectorSpacePresentation> {
    let ctx = ExtensionContext::new(&g.system, m)?;
    let xi = m.index(x)?;
    Ok(VectorSpacePresentation::Image(ctx.image_at(
        xi,
        t,
        Resolution::Grid(g.poset.grid()),
    )?))
}

// ---------------------------------------------------------------------
// Extension of a whole system
// ---------------------------------------------------------------------

/// Extends a coherent system on A to a coherent system on M along the
/// labelled isometric embedding of A into M, using the chosen pointwise
/// Kan extension. The restriction to A is returned on the nose: original
/// modules and original morphisms.
pub fn extend(
    s: &CoherentSystem,
    m: &FiniteMetricSpace,
    mode: ExtensionMode,
) -> Result<CoherentSystem> {
    let report = verify_coherent(s);
    if !report.is_coherent() {
        return Err(Error::Incoherent(report.violations.join("; ")));
    }
    let ctx = ExtensionContext::new(s, m)?;
    let p = s.prime();
    let base = merge_grids(
        &s.modules
            .iter()
            .map(|u| u.grid().to_vec())
            .collect::<Vec<_>>(),
    );

    // Per point of M: the module built from pointwise presentations on its
    // candidate critical grid, then pruned. The presentation matrices at
    // (x,t) are piecewise constant in t; they can only change where some
    // chain anchor t - d(a,x) or relation time t - d(b,x) - d(a,b) (and
    // their up-set duals) crosses a module critical value, so the candidate
    // grid is {c + s1 d(a,b) + s2 d(b,x)} over all ordered pairs and signs.
    type Built = (GridModule, BTreeMap<Rational, VectorSpacePresentation>);
    let mut built: Vec<Built> = Vec::new();
    for x in 0..m.len() {
        let mut dists: Vec<Rational> = Vec::new();
        for b in 0..ctx.n_points() {
            let ExtRational::Finite(d_bx) = ctx.dist(b, x) else {
                continue;
            };
            for a in 0..ctx.n_points() {
                if let Some(d_ab) = ctx.system.space().distance(a, b).as_finite() {
                    dists.push(d_ab + d_bx);
                    dists.push((d_ab - d_bx).abs());
                }
            }
        }
        dists.sort();
        dists.dedup();
        if dists.is_empty() || base.is_empty() {
            built.push((GridModule::zero(p), BTreeMap::new()));
            continue;
        }
        let candidates = grid_closure(&base, &dists);
        let pres: Vec<VectorSpacePresentation> = candidates
            .iter()
            .map(|t| ctx.presentation_at(mode, x, t, Resolution::Exact))
            .collect::<Result<_>>()?;
        let dims: Vec<usize> = pres.iter().map(|pr| pr.dim()).collect();
        let mut maps = Vec::new();
        for i in 0..candidates.len().saturating_sub(1) {
            maps.push(ctx.induced(mode, &pres[i], &pres[i + 1])?);
        }
        let full = GridModule::new(p, candidates.clone(), dims, maps)?;
        let pruned = full.simplify();
        let mut kept = BTreeMap::new();
        for (t, pr) in candidates.into_iter().zip(pres.into_iter()) {
            if pruned.grid().binary_search(&t).is_ok() {
                kept.insert(t, pr);
            }
        }
        built.push((pruned, kept));
    }

    // Morphisms between every finite-distance ordered pair.
    let mut morphisms: BTreeMap<(usize, usize), ModuleMorphism> = BTreeMap::new();
    for x in 0..m.len() {
        for y in 0..m.len() {
            if x == y {
                continue;
            }
            let ExtRational::Finite(e) = m.distance(x, y) else {
                continue;
            };
            morphisms.insert((x, y), extended_morphism(&ctx, mode, &built, x, y, e)?);
        }
    }

    // Restriction normalization: swap each point of A back to its original
    // module, conjugating the morphisms by the canonical isomorphism.
    let mut in_a: Vec<Option<usize>> = vec![None; m.len()];
    for a in 0..ctx.n_points() {
        in_a[ctx.embed[a]] = Some(a);
    }
    let mut isos: Vec<Option<ModuleMorphism>> = vec![None; m.len()];
    for x in 0..m.len() {
        if let Some(a) = in_a[x] {
            isos[x] = Some(restriction_iso(&ctx, &built[x], a)?);
        }
    }
    let mut final_modules = Vec::with_capacity(m.len());
    for x in 0..m.len() {
        match in_a[x] {
            Some(a) => final_modules.push(s.modules[a].clone()),
            None => final_modules.push(built[x].0.clone()),
        }
    }
    let mut final_morphisms = BTreeMap::new();
    for ((x, y), phi) in morphisms {
        let phi = match &isos[x] {
            Some(r) => compose(&r.invert()?, &phi)?,
            None => phi,
        };
        let phi = match &isos[y] {
            Some(r) => compose(&phi, r)?,
            None => phi,
        };
        if let (Some(a), Some(b)) = (in_a[x], in_a[y]) {
            // Full faithfulness: the extension restricts to the original
            // system on the nose.
            let original = &s.morphisms[&(a, b)];
            debug_assert_eq!(&phi, original);
            final_morphisms.insert((x, y), original.clone());
        } else {
            final_morphisms.insert((x, y), phi);
        }
    }
    CoherentSystem::new(m.clone(), final_modules, final_morphisms)
}

/// The morphism between two extended modules, with components given by the
/// functorially induced maps, translated through constancy isomorphisms
/// onto the stored cell presentations.
fn extended_morphism(
    ctx: &ExtensionContext,
    mode: ExtensionMode,
    built: &[(GridModule, BTreeMap<Rational, VectorSpacePresentation>)],
    x: usize,
    y: usize,
    e: &Rational,
) -> Result<ModuleMorphism> {
    let (mod_x, pres_x) = &built[x];
    let (mod_y, pres_y) = &built[y];
    let p = ctx.prime();
    let refinement = merge_grids(&[
        mod_x.grid().to_vec(),
        mod_y.grid().iter().map(|t| t - e).collect(),
    ]);
    let floor = |g: &GridModule, t: &Rational| -> Option<Rational> {
        g.cell_index(t).map(|i| g.grid()[i].clone())
    };
    let mut comps = Vec::with_capacity(refinement.len());
    for r in &refinement {
        let target_time = r + e;
        let rows = mod_y.dim_at(&target_time);
        let cols = mod_x.dim_at(r);
        let Some(fx) = floor(mod_x, r) else {
            comps.push(Matrix::zeros(p, rows, 0));
            continue;
        };
        if rows == 0 {
            comps.push(Matrix::zeros(p, 0, cols));
            continue;
        }
        let fy = floor(mod_y, &target_time)
            .expect("target dimension is positive, so the cell exists");

        let src_exact;
        let src = if fx == *r {
            &pres_x[&fx]
        } else {
            src_exact = ctx.presentation_at(mode, x, r, Resolution::Exact)?;
            &src_exact
        };
        let tgt_exact;
        let tgt = if fy == target_time {
            &pres_y[&fy]
        } else {
            tgt_exact = ctx.presentation_at(mode, y, &target_time, Resolution::Exact)?;
            &tgt_exact
        };

        let mut comp = ctx.induced(mode, src, tgt)?;
        if fx != *r {
            // Constancy isomorphism from the stored cell value.
            let from_stored = ctx.induced(mode, &pres_x[&fx], src)?;
            comp = comp.mul(&from_stored);
        }
        if fy != target_time {
            // Back from the exact time onto the stored cell value.
            let from_stored = ctx.induced(mode, &pres_y[&fy], tgt)?;
            let inv = from_stored.inverse().ok_or_else(|| {
                Error::Precondition(
                    "extension value changes inside a cell; candidate grid is too coarse".into(),
                )
            })?;
            comp = inv.mul(&comp);
        }
        comps.push(comp);
    }
    ModuleMorphism::from_parts(mod_x.clone(), mod_y.clone(), e.clone(), &refinement, &comps)
}

/// The canonical isomorphism from the Kan presentation at a point of A back
/// to the original module, as a shift-0 morphism.
fn restriction_iso(
    ctx: &ExtensionContext,
    built: &(GridModule, BTreeMap<Rational, VectorSpacePresentation>),
    a: usize,
) -> Result<ModuleMorphism> {
    let (mod_x, pres_x) = built;
    let orig = &ctx.system.modules()[a];
    // At a point of A the chain of a anchors at the query time itself and
    // its leg is an isomorphism with the presented value.
    let to_value = |pr: &VectorSpacePresentation| -> Result<Matrix> {
        match pr {
            VectorSpacePresentation::Colimit(c) => c
                .leg(a)
                .inverse()
                .ok_or_else(|| Error::Precondition("restriction leg is not invertible".into())),
            VectorSpacePresentation::Limit(l) => Ok(l.leg(a)),
            VectorSpacePresentation::Image(i) => Ok(i.ran.leg(a).mul(&i.basis)),
        }
    };
    let refinement = merge_grids(&[mod_x.grid().to_vec(), orig.grid().to_vec()]);
    let mut comps = Vec::with_capacity(refinement.len());
    for r in &refinement {
        let rows = orig.dim_at(r);
        let Some(cell) = mod_x.cell_index(r).map(|i| mod_x.grid()[i].clone()) else {
            comps.push(Matrix::zeros(mod_x.prime(), rows, 0));
            continue;
        };
        let at_cell = to_value(&pres_x[&cell])?;
        // Transport from the stored cell value to time r along U_a.
        comps.push(orig.map_between(&cell, r).mul(&at_cell));
    }
    let iso = ModuleMorphism::from_parts(
        mod_x.clone(),
        orig.clone(),
        Rational::zero(),
        &refinement,
        &comps,
    )?;
    // Sanity: must be invertible cellwise.
    iso.invert()?;
    Ok(iso)
}

// ---------------------------------------------------------------------
// Interpolation fronts
// ---------------------------------------------------------------------

/// The coherent family interpolating an e-interleaved pair along the
/// segment [0, e], evaluated at the given sample points. The output system
/// lives on {0, e} together with the samples under the line metric; its
/// endpoint data are the inputs themselves, so Phi_0^e = phi and
/// Psi_e^0 = psi.
pub fn segment_interpolation(
    u0: &GridModule,
    ue: &GridModule,
    phi: &ModuleMorphism,
    psi: &ModuleMorphism,
    e: &Rational,
    samples: &[Rational],
    mode: ExtensionMode,
) -> Result<CoherentSystem> {
    if !crate::module::verify_interleaving(phi, psi, e)? {
        return Err(Error::Precondition(
            "the given morphisms do not realize an e-interleaving".into(),
        ));
    }
    if phi.source() != u0 || phi.target() != ue {
        return Err(Error::Precondition("phi must map U_0 to U_e".into()));
    }
    for s in samples {
        if s.is_negative() || s > e {
            return Err(Error::Precondition(format!("sample {s} outside [0, {e}]")));
        }
    }
    if e.is_zero() {
        // Degenerate segment: one point carrying U_0.
        return CoherentSystem::singleton("0", u0.clone());
    }
    let mut points: Vec<Rational> = vec![Rational::zero(), e.clone()];
    points.extend_from_slice(samples);
    points.sort();
    points.dedup();

    let labels: Vec<String> = points.iter().map(|t| t.to_string()).collect();
    let dist: Vec<Vec<ExtRational>> = points
        .iter()
        .map(|s| {
            points
                .iter()
                .map(|t| ExtRational::Finite((s - t).abs()))
                .collect()
        })
        .collect();
    let m = FiniteMetricSpace::new(labels, dist)?;

    let a_space = FiniteMetricSpace::new(
        vec!["0".to_string(), e.to_string()],
        vec![
            vec![ExtRational::zero(), ExtRational::Finite(e.clone())],
            vec![ExtRational::Finite(e.clone()), ExtRational::zero()],
        ],
    )?;
    let mut morphisms = BTreeMap::new();
    morphisms.insert((0, 1), phi.clone());
    morphisms.insert((1, 0), psi.clone());
    let system = CoherentSystem::new(a_space, vec![u0.clone(), ue.clone()], morphisms)?;
    extend(&system, &m, mode)
}

/// Output of star interpolation: the center module together with the
/// witness interleavings against every input module.
#[derive(Clone, Debug)]
pub struct StarOutput {
    pub center: GridModule,
    /// Per input module: (to center, from center), both at shift e.
    pub witnesses: Vec<(ModuleMorphism, ModuleMorphism)>,
    /// The full extended system on the vertices plus the center point.
    pub system: CoherentSystem,
}

/// Builds the equilateral coherent system at pairwise distance 2e and
/// extends it to an added center at distance e from every vertex. The
/// center is guaranteed e-interleaved with every input module.
pub fn star_interpolation(
    modules: &[GridModule],
    morphisms: &BTreeMap<(usize, usize), ModuleMorphism>,
    e: &Rational,
    mode: ExtensionMode,
) -> Result<StarOutput> {
    let n = modules.len();
    if n == 0 {
        return Err(Error::Precondition("star interpolation needs modules".into()));
    }
    let two_e = e.double();
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let a_space = FiniteMetricSpace::new(labels.clone(), equilateral(n, &two_e))?;
    let system = CoherentSystem::new(a_space, modules.to_vec(), morphisms.clone())?;
    let report = verify_coherent(&system);
    if !report.is_coherent() {
        return Err(Error::Incoherent(report.violations.join("; ")));
    }

    let mut big_labels = labels;
    big_labels.push("center".to_string());
    let mut dist = equilateral(n + 1, &two_e);
    for i in 0..n {
        dist[i][n] = ExtRational::Finite(e.clone());
        dist[n][i] = ExtRational::Finite(e.clone());
    }
    let m = FiniteMetricSpace::new(big_labels, dist)?;
    let extended = extend(&system, &m, mode)?;
    let center = extended.modules()[n].clone();
    let witnesses = (0..n)
        .map(|i| {
            (
                extended.morphisms()[&(i, n)].clone(),
                extended.morphisms()[&(n, i)].clone(),
            )
        })
        .collect();
    Ok(StarOutput {
        center,
        witnesses,
        system: extended,
    })
}

fn equilateral(n: usize, d: &Rational) -> Vec<Vec<ExtRational>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        ExtRational::zero()
                    } else {
                        ExtRational::Finite(d.clone())
                    }
                })
                .collect()
        })
        .collect()
}

/// Placement of simplex query points. The Chebyshev placement measures
/// barycentric coordinates in the L-infinity norm taken modulo the
/// diagonal (the quotient norm on the simplex hyperplane), which keeps
/// every distance rational and puts the barycenter at distance exactly e
/// from each vertex. The Euclidean placement uses the standard simplex
/// geometry, with query distances rounded down to the declared denominator
/// when irrational.
#[derive(Clone, Copy, Debug)]
pub enum SimplexPlacement {
    Chebyshev,
    EuclideanRounded { denominator: u64 },
}

/// Extends an equilateral coherent system across barycentric query points
/// of the simplex spanned by its vertices, returning one module per query
/// weight vector.
pub fn simplex_interpolation(
    modules: &[GridModule],
    morphisms: &BTreeMap<(usize, usize), ModuleMorphism>,
    e: &Rational,
    query_weights: &[Vec<Rational>],
    mode: ExtensionMode,
    placement: SimplexPlacement,
) -> Result<Vec<GridModule>> {
    let n = modules.len();
    if n == 0 {
        return Err(Error::Precondition(
            "simplex interpolation needs modules".into(),
        ));
    }
    for w in query_weights {
        if w.len() != n {
            return Err(Error::Precondition(format!(
                "weight vector of length {}, expected {n}",
                w.len()
            )));
        }
        let mut sum = Rational::zero();
        for c in w {
            if c.is_negative() {
                return Err(Error::Precondition("negative barycentric weight".into()));
            }
            sum = &sum + c;
        }
        if sum != Rational::one() {
            return Err(Error::Precondition(format!(
                "barycentric weights sum to {sum}, expected 1"
            )));
        }
    }
    let two_e = e.double();
    let a_labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let a_space = FiniteMetricSpace::new(a_labels.clone(), equilateral(n, &two_e))?;
    let system = CoherentSystem::new(a_space, modules.to_vec(), morphisms.clone())?;

    // Vertex i sits at the scaled standard basis vector; a query with
    // weights w sits at the matching convex combination. Vertex-vertex
    // distances are 2e under both placements.
    let vertex_weight = |i: usize| -> Vec<Rational> {
        (0..n)
            .map(|j| if i == j { Rational::one() } else { Rational::zero() })
            .collect()
    };
    let weight_distance = |u: &[Rational], v: &[Rational]| -> Rational {
        match placement {
            SimplexPlacement::Chebyshev => {
                // e * (max_i - min_i) of the coordinate differences: the
                // L-infinity distance of the scaled embeddings modulo the
                // diagonal direction. Vertices stay pairwise 2e apart and
                // the barycenter sits at distance e from each vertex.
                let mut hi = Rational::zero();
                let mut lo = Rational::zero();
                for (a, b) in u.iter().zip(v.iter()) {
                    let d = a - b;
                    hi = hi.max(d.clone());
                    lo = lo.min(d);
                }
                e * &(&hi - &lo)
            }
            SimplexPlacement::EuclideanRounded { denominator } => {
                // |sqrt(2) e (u - v)|_2, rounded down to 1/denominator
                // when not a perfect square.
                let mut sq = Rational::zero();
                for (a, b) in u.iter().zip(v.iter()) {
                    let d = a - b;
                    sq = &sq + &(&d * &d);
                }
                let scale = &(e * e) * &Rational::integer(2);
                rational_sqrt_rounded(&(&sq * &scale), denominator)
            }
        }
    };

    let mut labels = a_labels;
    let mut weights: Vec<Vec<Rational>> = (0..n).map(vertex_weight).collect();
    for (qi, w) in query_weights.iter().enumerate() {
        labels.push(format!("q{qi}"));
        weights.push(w.clone());
    }
    let total = weights.len();
    let mut dist: Vec<Vec<ExtRational>> = (0..total)
        .map(|_| vec![ExtRational::zero(); total])
        .collect();
    for i in 0..total {
        for j in 0..total {
            if i != j {
                dist[i][j] = ExtRational::Finite(weight_distance(&weights[i], &weights[j]));
            }
        }
    }
    let m = FiniteMetricSpace::new(labels, dist)?;
    let extended = extend(&system, &m, mode)?;
    Ok((0..query_weights.len())
        .map(|qi| extended.modules()[n + qi].clone())
        .collect())
}

/// Largest multiple of 1/denominator whose square does not exceed sq.
fn rational_sqrt_rounded(sq: &Rational, denominator: u64) -> Rational {
    let fits = |k: i64| -> bool {
        let q = Rational::new(k, denominator as i64);
        &q * &q <= *sq
    };
    let mut hi: i64 = 1;
    while fits(hi) {
        hi *= 2;
    }
    let mut lo: i64 = 0;
    let mut hi = hi - 1;
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Rational::new(lo, denominator as i64)
}

// ---------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SystemDto {
    metric: FiniteMetricSpace,
    modules: BTreeMap<String, GridModule>,
    morphisms: BTreeMap<String, MorphismData>,
}

impl Serialize for CoherentSystem {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let labels = self.space.labels();
        SystemDto {
            metric: self.space.clone(),
            modules: labels
                .iter()
                .cloned()
                .zip(self.modules.iter().cloned())
                .collect(),
            morphisms: self
                .morphisms
                .iter()
                .map(|((a, b), m)| (format!("{}->{}", labels[*a], labels[*b]), m.to_data()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CoherentSystem {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = SystemDto::deserialize(deserializer)?;
        let space = dto.metric;
        let mut modules = Vec::with_capacity(space.len());
        for label in space.labels() {
            let m = dto
                .modules
                .get(label)
                .ok_or_else(|| D::Error::custom(format!("missing module for point {label:?}")))?;
            modules.push(m.clone());
        }
        let mut morphisms = BTreeMap::new();
        for (key, data) in dto.morphisms {
            let (from, to) = key
                .split_once("->")
                .ok_or_else(|| D::Error::custom(format!("bad morphism key {key:?}")))?;
            let a = space
                .index(from)
                .map_err(|e| D::Error::custom(format!("{e}")))?;
            let b = space
                .index(to)
                .map_err(|e| D::Error::custom(format!("{e}")))?;
            let m = data
                .into_morphism(modules[a].clone(), modules[b].clone())
                .map_err(|e| D::Error::custom(format!("morphism {key:?}: {e}")))?;
            morphisms.insert((a, b), m);
        }
        CoherentSystem::new(space, modules, morphisms)
            .map_err(|e| D::Error::custom(format!("{e}")))
    }
}
