//! Shared test support: independent oracles and random generators.
//!
//! Everything here deliberately avoids the code paths it is used to check:
//! the bottleneck 1-center decider works purely on diagram combinatorics,
//! and the Kan oracles build the literal difference maps over entire
//! down-/up-sets of the discretized poset.

#![allow(dead_code)]

use std::collections::BTreeMap;

use pmod_core::decomposition::{DiagramPoint, PersistenceDiagram};
use pmod_core::kan::{CoherentSystem, SpacetimeFunctor};
use pmod_core::linalg::{self, Matrix};
use pmod_core::metrics::{diagonal_cost, point_distance};
use pmod_core::module::{GridModule, ModuleMorphism};
use pmod_core::rational::{ExtRational, Rational};
use pmod_core::spacetime::FiniteMetricSpace;

pub fn rat(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn ext(s: &str) -> ExtRational {
    s.parse().unwrap()
}

pub fn dgm(points: &[(&str, &str, usize)]) -> PersistenceDiagram {
    PersistenceDiagram::new(
        points
            .iter()
            .map(|(b, d, m)| DiagramPoint {
                birth: b.parse().unwrap(),
                death: d.parse().unwrap(),
                multiplicity: *m,
            })
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------
// Bottleneck 1-center decision procedure
// ---------------------------------------------------------------------

type Pt = (Rational, ExtRational);

/// A cover group: at most one point per diagram, plus whether each diagram
/// contributed (None = that matching leaves the witness point unmatched).
#[derive(Clone, Debug)]
struct Group {
    members: Vec<Option<usize>>, // per diagram: index into that diagram's points
}

/// Decides whether some persistence diagram lies within bottleneck
/// distance e of every input diagram.
///
/// A witness diagram C induces, for each matched center point z, the tuple
/// of diagram points matched to z; conversely any family of such tuples
/// with nonempty cost-e boxes (and small persistence available whenever a
/// diagram leaves z unmatched) assembles into a witness. The search
/// backtracks over assignments of the "must" points (persistence > 2e,
/// which cannot go to the diagonal) into such tuples, then tries to
/// complete tuples with optional points.
pub fn diagram_center_exists(diagrams: &[PersistenceDiagram], e: &Rational) -> bool {
    let pts: Vec<Vec<Pt>> = diagrams.iter().map(|d| d.expanded()).collect();
    let two_e = e.double();
    let musts: Vec<(usize, usize)> = pts
        .iter()
        .enumerate()
        .flat_map(|(di, ps)| {
            ps.iter().enumerate().filter_map(move |(pi, p)| {
                if diagonal_cost(p) > ExtRational::Finite(e.clone()) {
                    Some((di, pi))
                } else {
                    None
                }
            })
        })
        .collect();

    let k = diagrams.len();
    let mut groups: Vec<Group> = Vec::new();
    let mut used: Vec<Vec<bool>> = pts.iter().map(|ps| vec![false; ps.len()]).collect();
    place_must(
        &pts, e, &two_e, &musts, 0, &mut groups, &mut used, k,
    )
}

/// The cost-e box around the group members is nonempty, i.e. some legal
/// diagram point is within e of all of them. For a finished group
/// (`partial` false) with an empty slot, the box must additionally contain
/// a point of persistence at most 2e, since that matching leaves the
/// witness point unmatched. Partial groups skip that test: a later member
/// may fill the slot.
fn group_feasible(pts: &[Vec<Pt>], g: &Group, e: &Rational, two_e: &Rational, partial: bool) -> bool {
    let members: Vec<&Pt> = g
        .members
        .iter()
        .enumerate()
        .filter_map(|(di, m)| m.map(|pi| &pts[di][pi]))
        .collect();
    if members.is_empty() {
        return true;
    }
    let need_small = !partial && g.members.iter().any(|m| m.is_none());

    let infinite = members.iter().any(|p| p.1.is_infinite());
    if infinite {
        // Infinite-death points only match infinite-death points, and a
        // witness point of infinite death can never be left unmatched.
        if members.iter().any(|p| p.1.is_finite()) || need_small {
            return false;
        }
        let mut bl = members[0].0.clone();
        let mut bu = members[0].0.clone();
        for p in &members {
            bl = bl.max(&p.0 - e);
            bu = bu.min(&p.0 + e);
        }
        return bl <= bu;
    }

    // Finite boxes: births in [max b - e, min b + e], deaths likewise.
    let mut bl = &members[0].0 - e;
    let mut bu = &members[0].0 + e;
    let d0 = members[0].1.as_finite().unwrap();
    let mut dl = d0 - e;
    let mut du = d0 + e;
    for p in members.iter().skip(1) {
        bl = bl.max(&p.0 - e);
        bu = bu.min(&p.0 + e);
        let d = p.1.as_finite().unwrap();
        dl = dl.max(d - e);
        du = du.min(d + e);
    }
    if bl > bu || dl > du || bl >= du {
        return false;
    }
    if need_small {
        // Minimum persistence over the box is max(dl - bu, 0+).
        if &dl - &bu > *two_e {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn place_must(
    pts: &[Vec<Pt>],
    e: &Rational,
    two_e: &Rational,
    musts: &[(usize, usize)],
    next: usize,
    groups: &mut Vec<Group>,
    used: &mut Vec<Vec<bool>>,
    k: usize,
) -> bool {
    if next == musts.len() {
        return complete_groups(pts, e, two_e, groups, used, 0);
    }
    let (di, pi) = musts[next];
    // Join an existing group with a free slot for this diagram.
    for gi in 0..groups.len() {
        if groups[gi].members[di].is_none() {
            groups[gi].members[di] = Some(pi);
            if group_feasible(pts, &groups[gi], e, two_e, true)
                && place_must(pts, e, two_e, musts, next + 1, groups, used, k)
            {
                return true;
            }
            groups[gi].members[di] = None;
        }
    }
    // Or open a fresh group.
    let mut g = Group {
        members: vec![None; k],
    };
    g.members[di] = Some(pi);
    groups.push(g);
    if group_feasible(pts, groups.last().unwrap(), e, two_e, true)
        && place_must(pts, e, two_e, musts, next + 1, groups, used, k)
    {
        return true;
    }
    groups.pop();
    false
}

/// After the musts are placed, each group may still claim unused optional
/// points to fill empty slots (relaxing the small-persistence demand).
fn complete_groups(
    pts: &[Vec<Pt>],
    e: &Rational,
    two_e: &Rational,
    groups: &mut Vec<Group>,
    used: &mut Vec<Vec<bool>>,
    gi: usize,
) -> bool {
    if gi == groups.len() {
        return true;
    }
    if group_feasible(pts, &groups[gi], e, two_e, false)
        && complete_groups(pts, e, two_e, groups, used, gi + 1)
    {
        return true;
    }
    // Try claiming an optional point for some empty slot.
    for di in 0..groups[gi].members.len() {
        if groups[gi].members[di].is_some() {
            continue;
        }
        for pi in 0..pts[di].len() {
            if used[di][pi] || diagonal_cost(&pts[di][pi]) > ExtRational::Finite(e.clone()) {
                continue;
            }
            used[di][pi] = true;
            groups[gi].members[di] = Some(pi);
            if complete_groups(pts, e, two_e, groups, used, gi) {
                return true;
            }
            groups[gi].members[di] = None;
            used[di][pi] = false;
        }
    }
    false
}

/// Exact bottleneck distance by brute force over all partial matchings.
pub fn brute_force_bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> ExtRational {
    let left = d1.expanded();
    let right = d2.expanded();
    fn go(
        i: usize,
        left: &[Pt],
        right: &[Pt],
        used: &mut Vec<bool>,
        current: ExtRational,
    ) -> ExtRational {
        if i == left.len() {
            let mut cost = current;
            for (j, b) in right.iter().enumerate() {
                if !used[j] {
                    cost = cost.max(diagonal_cost(b));
                }
            }
            return cost;
        }
        let mut best = go(
            i + 1,
            left,
            right,
            used,
            current.clone().max(diagonal_cost(&left[i])),
        );
        for j in 0..right.len() {
            if !used[j] {
                used[j] = true;
                let c = current.clone().max(point_distance(&left[i], &right[j]));
                best = best.min(go(i + 1, left, right, used, c));
                used[j] = false;
            }
        }
        best
    }
    let mut used = vec![false; right.len()];
    go(0, &left, &right, &mut used, ExtRational::zero())
}

// ---------------------------------------------------------------------
// Literal Kan oracles over the whole down-/up-set
// ---------------------------------------------------------------------

/// Dimension of the colimit over the full down-set of (x,t) in A x Gamma,
/// by the literal difference map over every related pair of elements.
pub fn full_downset_colimit_dim(
    g: &SpacetimeFunctor,
    m: &FiniteMetricSpace,
    x: &str,
    t: &Rational,
) -> usize {
    let sys = g.system();
    let grid = g.poset().grid();
    let xi = m.index(x).unwrap();
    let embed = sys.space().embedding_into(m).unwrap();
    let p = sys.prime();

    // Elements of the down-set.
    let mut elements: Vec<(usize, usize)> = Vec::new();
    for a in 0..sys.space().len() {
        let ExtRational::Finite(d) = m.distance(embed[a], xi) else {
            continue;
        };
        for (gi, gamma) in grid.iter().enumerate() {
            if &(gamma + d) <= t {
                elements.push((a, gi));
            }
        }
    }
    let dims: Vec<usize> = elements.iter().map(|&el| g.dim(el)).collect();
    let offsets: Vec<usize> = {
        let mut acc = 0;
        let mut o = Vec::new();
        for d in &dims {
            o.push(acc);
            acc += d;
        }
        o.push(acc);
        o
    };
    let total = *offsets.last().unwrap();

    // One relation block per related ordered pair.
    let mut cols: Vec<(usize, usize, Matrix)> = Vec::new();
    let mut width = 0;
    for (ui, &u) in elements.iter().enumerate() {
        for (vi, &v) in elements.iter().enumerate() {
            if ui == vi || !g.poset().order(u, v).unwrap() {
                continue;
            }
            let arrow = g.arrow(u, v).unwrap();
            width += dims[ui];
            cols.push((ui, vi, arrow));
        }
    }
    let mut relations = Matrix::zeros(p, total, width);
    let mut col = 0;
    for (ui, vi, arrow) in cols {
        for j in 0..dims[ui] {
            relations.set_raw(offsets[ui] + j, col + j, 1);
            for i in 0..arrow.rows() {
                relations.set_raw(offsets[vi] + i, col + j, p - arrow.raw(i, j));
            }
        }
        col += dims[ui];
    }
    total - linalg::rank(&relations)
}

/// Dimension of the limit over the full up-set of (x,t), as the kernel of
/// the stacked compatibility constraints over every related pair.
pub fn full_upset_limit_dim(
    g: &SpacetimeFunctor,
    m: &FiniteMetricSpace,
    x: &str,
    t: &Rational,
) -> usize {
    let sys = g.system();
    let grid = g.poset().grid();
    let xi = m.index(x).unwrap();
    let embed = sys.space().embedding_into(m).unwrap();
    let p = sys.prime();

    let mut elements: Vec<(usize, usize)> = Vec::new();
    for a in 0..sys.space().len() {
        let ExtRational::Finite(d) = m.distance(embed[a], xi) else {
            continue;
        };
        for (gi, gamma) in grid.iter().enumerate() {
            if &(t + d) <= gamma {
                elements.push((a, gi));
            }
        }
    }
    let dims: Vec<usize> = elements.iter().map(|&el| g.dim(el)).collect();
    let offsets: Vec<usize> = {
        let mut acc = 0;
        let mut o = Vec::new();
        for d in &dims {
            o.push(acc);
            acc += d;
        }
        o.push(acc);
        o
    };
    let total = *offsets.last().unwrap();

    let mut rows: Vec<(usize, usize, Matrix)> = Vec::new();
    let mut height = 0;
    for (ui, &u) in elements.iter().enumerate() {
        for (vi, &v) in elements.iter().enumerate() {
            if ui == vi || !g.poset().order(u, v).unwrap() {
                continue;
            }
            let arrow = g.arrow(u, v).unwrap();
            height += dims[vi];
            rows.push((ui, vi, arrow));
        }
    }
    let mut constraints = Matrix::zeros(p, height, total);
    let mut row = 0;
    for (ui, vi, arrow) in rows {
        for i in 0..dims[vi] {
            for j in 0..arrow.cols() {
                constraints.set_raw(row + i, offsets[ui] + j, arrow.raw(i, j));
            }
            constraints.set_raw(row + i, offsets[vi] + i, p - 1);
        }
        row += dims[vi];
    }
    linalg::kernel_basis(&constraints).cols()
}

// ---------------------------------------------------------------------
// Random generators (xorshift, fully deterministic)
// ---------------------------------------------------------------------

pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }
}

/// A random diagram with at most `max_bars` bars, endpoints from the pool,
/// some infinite deaths.
pub fn random_diagram(rng: &mut TestRng, max_bars: usize, pool: &[Rational]) -> PersistenceDiagram {
    let bars = rng.below(max_bars + 1);
    let mut points = Vec::new();
    for _ in 0..bars {
        let b = rng.pick(pool).clone();
        let death = if rng.below(5) == 0 {
            ExtRational::Infinity
        } else {
            let d = rng.pick(pool).clone();
            if d <= b {
                continue;
            }
            ExtRational::Finite(d)
        };
        points.push(DiagramPoint {
            birth: b,
            death,
            multiplicity: 1 + rng.below(2),
        });
    }
    PersistenceDiagram::new(points).unwrap()
}

/// A random invertible matrix over F_p.
pub fn random_invertible(rng: &mut TestRng, p: u64, n: usize) -> Matrix {
    loop {
        let mut m = Matrix::zeros(p, n, n);
        for i in 0..n {
            for j in 0..n {
                m.set_raw(i, j, rng.next() % p);
            }
        }
        if m.inverse().is_some() {
            return m;
        }
    }
}

/// Re-presents a module in scrambled bases: the same module up to
/// isomorphism, with dense structure matrices.
pub fn scramble_module(rng: &mut TestRng, u: &GridModule) -> (GridModule, Vec<Matrix>) {
    let p = u.prime();
    let changes: Vec<Matrix> = u
        .dims()
        .iter()
        .map(|&d| random_invertible(rng, p, d))
        .collect();
    let maps: Vec<Matrix> = u
        .maps()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            changes[i + 1]
                .mul(m)
                .mul(&changes[i].inverse().expect("invertible"))
        })
        .collect();
    let scrambled = GridModule::new(p, u.grid().to_vec(), u.dims().to_vec(), maps).unwrap();
    (scrambled, changes)
}

/// A random grid module: a random diagram realized and then base-scrambled,
/// so structure matrices are dense while the isomorphism class is known.
pub fn random_module(rng: &mut TestRng, max_bars: usize, pool: &[Rational]) -> GridModule {
    let d = random_diagram(rng, max_bars, pool);
    let u = pmod_core::decomposition::module_from_diagram(&d, 2).unwrap();
    scramble_module(rng, &u).0
}

/// A random finite metric space with rational distances, optionally
/// containing infinite distances, built by taking shortest paths over a
/// random weighted graph (so the triangle inequality holds exactly).
pub fn random_metric(rng: &mut TestRng, n: usize, allow_infinite: bool) -> FiniteMetricSpace {
    let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let pool = ["1/2", "1", "3/2", "2", "3", "4"];
    let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for i in 0..n {
        dist[i][i] = Some(Rational::zero());
    }
    // Random edges; missing edges may stay infinite.
    for i in 0..n {
        for j in i + 1..n {
            let connect = !allow_infinite || rng.below(4) != 0;
            if connect {
                let w = rat(rng.pick(&pool));
                dist[i][j] = Some(w.clone());
                dist[j][i] = Some(w);
            }
        }
    }
    // Floyd-Warshall closure.
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (&dist[i][k], &dist[k][j]) {
                    let through = a + b;
                    if dist[i][j].as_ref().is_none_or(|d| *d > through) {
                        dist[i][j] = Some(through);
                    }
                }
            }
        }
    }
    let table: Vec<Vec<ExtRational>> = dist
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|d| d.map_or(ExtRational::Infinity, ExtRational::Finite))
                .collect()
        })
        .collect();
    FiniteMetricSpace::new(labels, table).unwrap()
}

/// A random coherent system on the given metric space: a direct sum of
/// shifted common-source blocks (each block is one mother module shifted
/// by a 1-Lipschitz time assignment), then base-scrambled per point.
pub fn random_coherent_system(
    rng: &mut TestRng,
    space: &FiniteMetricSpace,
    blocks: usize,
    pool: &[Rational],
) -> CoherentSystem {
    let n = space.len();
    let p = 2;
    // Per block: a mother module and a 1-Lipschitz time shift per point.
    let mut block_modules: Vec<Vec<GridModule>> = Vec::new();
    for _ in 0..blocks {
        let mother = {
            let d = random_diagram(rng, 2, pool);
            pmod_core::decomposition::module_from_diagram(&d, p).unwrap()
        };
        // 1-Lipschitz shifts: distances from a random base point, all
        // contracted by the same factor so the reverse triangle inequality
        // keeps the assignment 1-Lipschitz.
        let base = rng.below(n);
        let halve = rng.below(2) == 0;
        let shifts: Vec<Rational> = (0..n)
            .map(|i| match space.distance(base, i) {
                ExtRational::Finite(d) => {
                    if halve {
                        d.half()
                    } else {
                        d.clone()
                    }
                }
                ExtRational::Infinity => Rational::zero(),
            })
            .collect();
        block_modules.push(
            shifts
                .iter()
                .map(|s| mother.shift(&(-s)))
                .collect(),
        );
    }
    // Direct sums per point.
    let mut modules: Vec<GridModule> = (0..n)
        .map(|i| {
            let mut acc = GridModule::zero(p);
            for block in &block_modules {
                acc = acc.direct_sum(&block[i]).unwrap();
            }
            acc
        })
        .collect();

    // Morphisms: block-diagonal sigma-type maps between the shifted
    // copies; build on the summed modules via hom components.
    let unscrambled = modules.clone();
    let mut morphisms: BTreeMap<(usize, usize), ModuleMorphism> = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let ExtRational::Finite(d) = space.distance(a, b) else {
                continue;
            };
            let (ua, ub) = (&unscrambled[a], &unscrambled[b]);
            let phi = ModuleMorphism::from_fn(
                ua.clone(),
                ub.clone(),
                d.clone(),
                |s| {
                    // Componentwise: each block maps by the internal map of
                    // its mother over the shift difference.
                    let mut acc = Matrix::zeros(p, 0, 0);
                    for block in &block_modules {
                        let target_time = s + d;
                        let piece =
                            cross_block_map(&block[a], &block[b], s, &target_time);
                        acc = acc.block_diag(&piece);
                    }
                    acc
                },
            )
            .unwrap();
            morphisms.insert((a, b), phi);
        }
    }

    // Scramble all presentations coherently.
    let mut changes: Vec<Vec<Matrix>> = Vec::new();
    for m in &modules {
        let (_, ch) = scramble_module(rng, m);
        changes.push(ch);
    }
    let scrambled: Vec<GridModule> = modules
        .iter()
        .zip(changes.iter())
        .map(|(m, ch)| {
            let maps: Vec<Matrix> = m
                .maps()
                .iter()
                .enumerate()
                .map(|(i, mm)| ch[i + 1].mul(mm).mul(&ch[i].inverse().unwrap()))
                .collect();
            GridModule::new(p, m.grid().to_vec(), m.dims().to_vec(), maps).unwrap()
        })
        .collect();
    let change_at = |x: usize, t: &Rational| -> Matrix {
        match modules[x].cell_index(t) {
            Some(i) => changes[x][i].clone(),
            None => Matrix::identity(p, 0),
        }
    };
    let scrambled_morphisms: BTreeMap<(usize, usize), ModuleMorphism> = morphisms
        .iter()
        .map(|(&(a, b), phi)| {
            let d = phi.shift().clone();
            let new = ModuleMorphism::from_fn(
                scrambled[a].clone(),
                scrambled[b].clone(),
                d.clone(),
                |s| {
                    let target_time = s + &d;
                    change_at(b, &target_time)
                        .mul(&phi.component_at(s))
                        .mul(&change_at(a, s).inverse().unwrap())
                },
            )
            .unwrap();
            ((a, b), new)
        })
        .collect();
    modules = scrambled;
    CoherentSystem::new(space.clone(), modules, scrambled_morphisms).unwrap()
}

/// The sigma-type map between two shifts of the same mother module.
fn cross_block_map(
    from: &GridModule,
    to: &GridModule,
    s: &Rational,
    target_time: &Rational,
) -> Matrix {
    // from = mother shifted by -sa, to = mother shifted by -sb; the
    // canonical map from(s) -> to(target) is the mother's internal map,
    // which equals to.map_between on matching times whenever defined.
    // Both modules share the mother's matrices, so evaluate through `to`
    // after translating: to(t') = mother(t' + sb); from(s) = mother(s+sa).
    // The canonical component is mother(s+sa <= target+sb) when the
    // shifts are 1-Lipschitz compatible, which the generator guarantees.
    let from_dim = from.dim_at(s);
    let to_dim = to.dim_at(target_time);
    if from_dim == 0 || from.grid().is_empty() || to.grid().is_empty() {
        return Matrix::zeros(from.prime(), to_dim, from_dim);
    }
    // Work inside `to`: find the time u with to(u) = from(s) as mother
    // values: u = s + sa - sb, where the grids encode the shifts.
    // grid(from) = mother_grid - sa, grid(to) = mother_grid - sb, so
    // u - s = grid(to)[i] - grid(from)[i] for any i.
    let delta = &to.grid()[0] - &from.grid()[0];
    let u = s + &delta;
    to.map_between(&u, target_time)
}
