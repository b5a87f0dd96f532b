//! Seeds, good events and the micro-to-macro exploration of the block
//! renormalization, plus the event `E_m^n`.
//!
//! The microscopic slab is `Z^2 x (0, hk] x (-k, k]^{d-3}`. A macro vertex
//! `u` owns the box `B^u` and the face `F^u` just before it in the first
//! coordinate (see [`macro_box`], [`macro_face`]).

use crate::config::{check_probability, Configuration};
use crate::error::{domain, Error, Result};
use crate::geometry::{
    block_constant, inner_boundary, macro_cell, macro_face, LatticePoint, MacroVertex, Region, SlabDomain,
};
use crate::oriented::{explore, SlabBlock};
use crate::reach::{reach_targets, SearchMode, SourceSet, TargetIndex, DEFAULT_MAX_EXPANSIONS};
use crate::word::Word;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Density factor between an input seed and the seeds a good event must produce.
pub const GOOD_FACTOR: f64 = 64000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormParams {
    pub d: usize,
    pub p: f64,
    pub k: i64,
    pub delta: f64,
    pub h: i64,
    #[serde(default = "default_mode")]
    pub mode: SearchMode,
    #[serde(default = "default_expansions")]
    pub max_expansions: u64,
}

fn default_mode() -> SearchMode {
    SearchMode::Exact
}

fn default_expansions() -> u64 {
    DEFAULT_MAX_EXPANSIONS
}

impl RenormParams {
    pub fn new(d: usize, p: f64, k: i64, delta: f64, h: i64) -> Result<Self> {
        let out = Self { d, p, k, delta, h, mode: SearchMode::Exact, max_expansions: DEFAULT_MAX_EXPANSIONS };
        out.validate()?;
        Ok(out)
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.d < 3 {
            errs.push(format!("d must be >= 3 (got {})", self.d));
        }
        if check_probability(self.p).is_err() {
            errs.push(format!("p must lie in [0, 1] (got {})", self.p));
        }
        if self.k < 2 || self.k % 2 != 0 {
            errs.push(format!("k must be even and >= 2 (got {})", self.k));
        }
        if !(self.delta > 0.0 && self.delta * GOOD_FACTOR < 1.0) {
            errs.push(format!("delta must lie in (0, 1/64000) (got {})", self.delta));
        }
        if self.h < 2 {
            errs.push(format!("h must be >= 2 (got {})", self.h));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// `C = (2k+1)^d`.
    pub fn c(&self) -> u64 {
        block_constant(self.k, self.d).expect("validated parameters")
    }

    /// `|F| = (2k)^(d-1)`.
    pub fn face_size(&self) -> usize {
        (2 * self.k as usize).pow(self.d as u32 - 1)
    }

    /// Smallest seed size a good event must produce on every out-face.
    pub fn good_threshold(&self) -> f64 {
        GOOD_FACTOR * self.delta * self.face_size() as f64
    }

    fn slab(&self) -> SlabDomain {
        SlabDomain { dim: self.d, h: self.h, k: self.k }
    }
}

/// A set on the face `F^u` with arrival indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub u: MacroVertex,
    /// Points with their offsets, sorted by point.
    pub points: Vec<(LatticePoint, usize)>,
}

impl SeedSet {
    /// Keeps the smallest offset for repeated points.
    pub fn new(u: MacroVertex, points: impl IntoIterator<Item = (LatticePoint, usize)>) -> Self {
        let mut map: BTreeMap<LatticePoint, usize> = BTreeMap::new();
        for (x, t) in points {
            map.entry(x).and_modify(|s| *s = (*s).min(t)).or_insert(t);
        }
        Self { u, points: map.into_iter().collect() }
    }

    pub fn empty(u: MacroVertex) -> Self {
        Self { u, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn offset(&self, x: &LatticePoint) -> Option<usize> {
        self.points.binary_search_by(|(p, _)| p.cmp(x)).ok().map(|i| self.points[i].1)
    }

    fn merge(&mut self, other: &SeedSet) {
        let merged = SeedSet::new(self.u, self.points.iter().cloned().chain(other.points.iter().cloned()));
        self.points = merged.points;
    }
}

/// Density and offset bounds of a `δ`-seed.
pub fn is_delta_seed(seed: &SeedSet, delta: f64, params: &RenormParams) -> Result<bool> {
    let face = macro_face(&seed.u, params.k, params.d)?;
    if let Some((x, _)) = seed.points.iter().find(|(x, _)| !face.contains(x)) {
        return Err(domain(format!("seed point {x} is not on the face of {:?}", seed.u)));
    }
    let bound = params.c() as i128 * seed.u.v1 as i128;
    let offsets_ok = seed.points.iter().all(|&(_, t)| (t as i128) <= bound);
    Ok(seed.len() as f64 >= delta * face.len() as f64 && offsets_ok)
}

fn check_seed_vertex(u: &MacroVertex, h: i64) -> Result<()> {
    if !u.is_valid(h) {
        return Err(domain(format!("{u:?} is not a vertex of the macroscopic slab with h={h}")));
    }
    Ok(())
}

/// Largest index probed from `seed` towards `v`.
fn index_bound(seed: &SeedSet, v: &MacroVertex, cell_len: usize, params: &RenormParams) -> usize {
    let c_bound = (params.c() as i128 * v.v1 as i128).max(0) as usize;
    match params.mode {
        SearchMode::Relaxed => c_bound,
        SearchMode::Exact => {
            let max_off = seed.points.iter().map(|p| p.1).max().unwrap_or(0);
            c_bound.min(max_off + cell_len - 1)
        }
    }
}

fn seed_search(
    cfg: &Configuration,
    seed: &SeedSet,
    xi: &Word,
    params: &RenormParams,
    which: TargetIndex,
) -> Result<Vec<SeedSet>> {
    check_seed_vertex(&seed.u, params.h)?;
    let cell = macro_cell(&seed.u, params.k, params.d)?;
    let outs = seed.u.out_neighbors(params.h)?;
    let mut sources = SourceSet::new();
    for (x, t) in &seed.points {
        sources.push(x.clone(), *t, 0);
    }
    let mut result = Vec::with_capacity(outs.len());
    for v in outs {
        let targets: Vec<LatticePoint> = match macro_face(&v, params.k, params.d)?.intersection(&cell) {
            Some(r) => r.points().collect(),
            None => Vec::new(),
        };
        if seed.is_empty() || targets.is_empty() {
            result.push(SeedSet::empty(v));
            continue;
        }
        let max_index = index_bound(seed, &v, cell.len(), params);
        if xi.len() <= max_index {
            return Err(domain(format!(
                "the word has {} letters but indices up to {max_index} are probed; supply a longer prefix",
                xi.len()
            )));
        }
        let found = reach_targets(
            params.mode,
            cfg,
            &sources,
            std::slice::from_ref(xi),
            &cell,
            max_index,
            &targets,
            which,
            params.max_expansions,
        )?;
        let pts = targets.into_iter().zip(found).filter_map(|(y, t)| t.map(|t| (y, t)));
        result.push(SeedSet::new(v, pts));
    }
    Ok(result)
}

/// `(S^v, t^v)` for each out-neighbor `v` of the seed's vertex, in
/// lexicographic order: the points of `F^v` reached inside `F^u ∪ B^u` from
/// the seed, reading `ξ` from each source's offset, with the smallest arrival
/// index at most `C v_1`.
pub fn seed_sets_from(cfg: &Configuration, seed: &SeedSet, xi: &Word, params: &RenormParams) -> Result<Vec<SeedSet>> {
    seed_search(cfg, seed, xi, params, TargetIndex::Min)
}

fn is_good(sets: &[SeedSet], params: &RenormParams) -> bool {
    sets.iter().all(|s| s.len() as f64 >= params.good_threshold())
}

/// The good event: every out-face receives a `64000 δ`-seed from `seed`.
pub fn good_event(cfg: &Configuration, seed: &SeedSet, xi: &Word, params: &RenormParams) -> Result<bool> {
    Ok(is_good(&seed_search(cfg, seed, xi, params, TargetIndex::Any)?, params))
}

/// `|∂Λ_n|` in the slab: the sites of `Λ_n` with `|x_1| = kn` or `|x_2| = kn`.
pub fn lambda_boundary_size(n: i64, params: &RenormParams) -> u64 {
    let k = params.k as u64;
    8 * k * n as u64 * params.h as u64 * k * (2 * k).pow(params.d as u32 - 3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmnOutcome {
    pub holds: bool,
    pub boundary: usize,
    pub threshold: f64,
    /// The reached part of `∂Λ_n` with arrival indices.
    pub witness: Vec<(LatticePoint, usize)>,
}

/// `E_m^n`: at least `8δ|∂Λ_n|` points of `∂Λ_n` are reached from
/// `∂Λ_{m+1}` reading `ξ` from index 0 within `Λ_n`, arriving by index `Cn`.
pub fn event_emn(cfg: &Configuration, m: i64, n: i64, xi: &Word, params: &RenormParams) -> Result<EmnOutcome> {
    params.validate()?;
    if !(n >= m && m >= 1) {
        return Err(domain(format!("E_m^n needs n >= m >= 1 (got m={m}, n={n})")));
    }
    let slab = params.slab();
    let lambda_n = Region::lambda(params.d, n, params.h, params.k)?;
    let boundary = inner_boundary(&lambda_n, &slab)?;
    let threshold = 8.0 * params.delta * boundary.len() as f64;
    if n == m {
        return Ok(EmnOutcome { holds: true, boundary: boundary.len(), threshold, witness: Vec::new() });
    }
    let lambda_m = Region::lambda(params.d, m + 1, params.h, params.k)?;
    let sources = SourceSet::from_points(inner_boundary(&lambda_m, &slab)?);
    let c_bound = (params.c() as i128 * n as i128) as usize;
    let max_index = match params.mode {
        SearchMode::Exact => c_bound.min(lambda_n.len() - 1),
        SearchMode::Relaxed => c_bound,
    };
    if xi.len() <= max_index {
        return Err(domain(format!("the word has {} letters but indices up to {max_index} are probed", xi.len())));
    }
    let found = reach_targets(
        params.mode,
        cfg,
        &sources,
        std::slice::from_ref(xi),
        &lambda_n,
        max_index,
        &boundary,
        TargetIndex::Min,
        params.max_expansions,
    )?;
    let witness: Vec<(LatticePoint, usize)> =
        boundary.iter().zip(found).filter_map(|(y, t)| t.map(|t| (y.clone(), t))).collect();
    Ok(EmnOutcome { holds: witness.len() as f64 >= threshold, boundary: boundary.len(), threshold, witness })
}

/// Bounding box of the microscopic sites read by [`macro_exploration`] for
/// the macro block `B_n`.
pub fn exploration_window(n: i64, params: &RenormParams) -> Result<Region> {
    let block = SlabBlock::macro_block(n, params.h)?;
    let (y0, y1) = block.window.y_range();
    let k = params.k;
    let mut bounds =
        vec![(k * block.x_left() - k, k * block.x_right() + k), (k * y0 - k + 1, k * y1 + k), (1, params.h * k)];
    bounds.extend(std::iter::repeat_n((-k + 1, k), params.d - 3));
    Region::closed_box(&bounds)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplorationAudit {
    pub queries: usize,
    /// Macro vertices whose verdict was requested more than once.
    pub repeated: usize,
    /// Pairs of queried cells `F^v ∪ B^v` sharing a site outside their faces.
    pub overlapping_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroExplorationReport {
    /// Left-face vertices carrying a `δ`-dense part of `T`.
    pub start: Vec<MacroVertex>,
    pub initial: Vec<MacroVertex>,
    pub accepted: Vec<MacroVertex>,
    pub blocked: Vec<MacroVertex>,
    /// Every good-event verdict in query order.
    pub trace: Vec<(MacroVertex, bool)>,
    pub right_size: usize,
    pub right_hits: usize,
    /// `|U_∞ ∩ R_n| >= |R_n| / 1000`.
    pub crossing: bool,
    pub t_prime: Vec<(LatticePoint, usize)>,
    pub t_prime_threshold: f64,
    pub t_prime_large: bool,
    pub audit: ExplorationAudit,
}

/// Faces `F^u` of the left macro column, whose union is the microscopic left side.
pub fn left_faces(n: i64, params: &RenormParams) -> Result<Vec<(MacroVertex, Region)>> {
    let block = SlabBlock::macro_block(n, params.h)?;
    block.left().into_iter().map(|u| Ok((u, macro_face(&u, params.k, params.d)?))).collect()
}

/// Runs the macroscopic exploration driven by good events on `cfg`.
///
/// `targets` is the microscopic start set with offsets; it must lie on the
/// faces of the left macro column. Seeds of later boxes are composed from the
/// accepted predecessors, each read inside its own `F^u ∪ B^u`.
pub fn macro_exploration(
    cfg: &Configuration,
    targets: &[(LatticePoint, usize)],
    xi: &Word,
    n: i64,
    params: &RenormParams,
) -> Result<MacroExplorationReport> {
    params.validate()?;
    let block = SlabBlock::macro_block(n, params.h)?;
    let faces = left_faces(n, params)?;
    let c_n = params.c() as u128 * n as u128;
    let mut by_vertex: BTreeMap<MacroVertex, Vec<(LatticePoint, usize)>> = BTreeMap::new();
    for (x, t) in targets {
        if *t as u128 > c_n {
            return Err(domain(format!("offset {t} at {x} exceeds C n = {c_n}")));
        }
        let (u, _) = faces
            .iter()
            .find(|(_, f)| f.contains(x))
            .ok_or_else(|| domain(format!("start point {x} is not on a left macro face")))?;
        by_vertex.entry(*u).or_default().push((x.clone(), *t));
    }
    let face_size = params.face_size() as f64;
    let start: Vec<MacroVertex> = faces
        .iter()
        .map(|(u, _)| *u)
        .filter(|u| by_vertex.get(u).is_some_and(|pts| pts.len() as f64 >= params.delta * face_size))
        .collect();

    let mut trace: Vec<(MacroVertex, bool)> = Vec::new();
    // Seeds handed to each out-neighbor by accepted vertices.
    let mut handed: BTreeMap<MacroVertex, Vec<SeedSet>> = BTreeMap::new();
    let mut initial = Vec::new();
    for u in &start {
        let seed = SeedSet::new(*u, by_vertex[u].iter().cloned());
        let sets = seed_sets_from(cfg, &seed, xi, params)?;
        let good = is_good(&sets, params);
        trace.push((*u, good));
        if good {
            initial.push(*u);
            handed.insert(*u, sets);
        }
    }

    let compose = |v: &MacroVertex, handed: &BTreeMap<MacroVertex, Vec<SeedSet>>| -> SeedSet {
        let mut s = SeedSet::empty(*v);
        for w in v.in_neighbors(params.h) {
            if let Some(sets) = handed.get(&w) {
                if let Some(part) = sets.iter().find(|x| x.u == *v) {
                    s.merge(part);
                }
            }
        }
        s
    };

    let w = &block.window;
    let state = explore(w, &initial, |v, _| {
        let seed = compose(&v, &handed);
        let sets = seed_sets_from(cfg, &seed, xi, params)?;
        let good = is_good(&sets, params);
        trace.push((v, good));
        if good {
            handed.insert(v, sets);
        }
        Ok(good)
    })?;

    let accepted = state.accepted(w);
    let right = block.right();
    let right_hits = right.iter().filter(|v| state.u_mask().get(w.index(v).unwrap())).count();

    let right_set: BTreeSet<MacroVertex> = right.iter().copied().collect();
    let mut boundary: BTreeSet<MacroVertex> = BTreeSet::new();
    for r in &right {
        for v in r.out_neighbors_unchecked(params.h) {
            if !right_set.contains(&v) {
                boundary.insert(v);
            }
        }
    }
    let mut t_prime = SeedSet::empty(MacroVertex::new(0, 0, 0));
    for v in &boundary {
        t_prime.merge(&compose(v, &handed));
    }
    let t_prime_threshold = 8.0 * params.delta * lambda_boundary_size(2 * n, params) as f64;

    Ok(MacroExplorationReport {
        audit: audit(&trace, params)?,
        start,
        initial,
        blocked: state.blocked(w),
        accepted,
        trace,
        right_size: right.len(),
        right_hits,
        crossing: right_hits * 1000 >= right.len(),
        t_prime_large: t_prime.len() as f64 >= t_prime_threshold,
        t_prime: t_prime.points,
        t_prime_threshold,
    })
}

fn audit(trace: &[(MacroVertex, bool)], params: &RenormParams) -> Result<ExplorationAudit> {
    let mut seen = BTreeSet::new();
    let mut repeated = 0;
    for (v, _) in trace {
        if !seen.insert(*v) {
            repeated += 1;
        }
    }
    let cells: Vec<(Region, Region)> = seen
        .iter()
        .map(|v| Ok((macro_cell(v, params.k, params.d)?, macro_face(v, params.k, params.d)?)))
        .collect::<Result<_>>()?;
    let mut overlapping = 0;
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if let Some(common) = cells[i].0.intersection(&cells[j].0) {
                if common.points().any(|x| !cells[i].1.contains(&x) && !cells[j].1.contains(&x)) {
                    overlapping += 1;
                }
            }
        }
    }
    Ok(ExplorationAudit { queries: trace.len(), repeated, overlapping_pairs: overlapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::sample;
    use crate::rng::RngStream;

    fn params(k: i64, h: i64) -> RenormParams {
        RenormParams::new(3, 0.5, k, 1e-6, h).unwrap()
    }

    fn full_seed(u: MacroVertex, p: &RenormParams, t: usize) -> SeedSet {
        let f = macro_face(&u, p.k, p.d).unwrap();
        SeedSet::new(u, f.points().map(|x| (x, t)))
    }

    /// `min_x (t_x + dist(x, y))` over the seed, by one breadth-first search per source.
    fn bfs_oracle(region: &Region, seed: &SeedSet) -> BTreeMap<LatticePoint, usize> {
        let mut best: BTreeMap<LatticePoint, usize> = BTreeMap::new();
        for (x, t) in &seed.points {
            let mut dist = BTreeMap::from([(x.clone(), *t)]);
            let mut queue = std::collections::VecDeque::from([x.clone()]);
            while let Some(a) = queue.pop_front() {
                let d = dist[&a];
                for b in region.neighbors(&a).unwrap() {
                    if !dist.contains_key(&b) {
                        dist.insert(b.clone(), d + 1);
                        queue.push_back(b);
                    }
                }
            }
            for (y, d) in dist {
                best.entry(y).and_modify(|e| *e = (*e).min(d)).or_insert(d);
            }
        }
        best
    }

    #[test]
    fn params_validation() {
        assert!(RenormParams::new(3, 0.5, 3, 1e-6, 4).is_err());
        assert!(RenormParams::new(3, 0.5, 2, 1.0 / 64000.0, 4).is_err());
        let e = RenormParams::new(2, 1.5, 1, 0.0, 1).unwrap_err();
        assert!(matches!(e, Error::Validation(v) if v.len() == 5));
        assert_eq!(params(2, 4).c(), 125);
        assert_eq!(params(2, 4).face_size(), 16);
    }

    #[test]
    fn delta_seed_bounds() {
        let p = params(2, 4);
        let u = MacroVertex::new(2, 1, 1);
        let f = macro_face(&u, 2, 3).unwrap();
        let need = (0.25 * f.len() as f64).ceil() as usize;
        let seed = SeedSet::new(u, f.points().take(need).map(|x| (x, 0)));
        assert!(is_delta_seed(&seed, 0.25, &p).unwrap());
        let mut bad = seed.clone();
        bad.points[0].1 = 125 * 2 + 1;
        assert!(!is_delta_seed(&bad, 0.25, &p).unwrap());
        let sparse = SeedSet::new(u, f.points().take(need / 2).map(|x| (x, 0)));
        assert!(!is_delta_seed(&sparse, 0.25, &p).unwrap());
        let off = SeedSet::new(u, [(LatticePoint::new(&[0, 0, 0]), 0)]);
        assert!(is_delta_seed(&off, 0.25, &p).is_err());
    }

    #[test]
    fn all_ones_seed_sets_match_bfs() {
        let p = params(2, 4);
        let u = MacroVertex::new(0, 0, 2);
        let cell = macro_cell(&u, 2, 3).unwrap();
        let cfg = Configuration::constant(cell.clone(), true);
        let xi = Word::constant(true, 400);
        let seed = SeedSet::new(u, [(LatticePoint::new(&[-2, 0, 3]), 3), (LatticePoint::new(&[-2, 2, 5]), 0)]);
        let dist = bfs_oracle(&cell, &seed);
        let sets = seed_sets_from(&cfg, &seed, &xi, &p).unwrap();
        assert_eq!(sets.len(), 4);
        for s in &sets {
            let face = macro_face(&s.u, 2, 3).unwrap().intersection(&cell).unwrap();
            assert_eq!(s.len(), face.len());
            for (y, t) in &s.points {
                assert_eq!(*t, dist[y], "{y}");
            }
        }
        assert!(good_event(&cfg, &seed, &xi, &p).unwrap());
        let empty = seed_sets_from(&cfg, &SeedSet::empty(u), &xi, &p).unwrap();
        assert!(empty.iter().all(SeedSet::is_empty));
    }

    #[test]
    fn all_zeros_is_never_good() {
        let p = params(2, 4);
        let u = MacroVertex::new(0, 0, 2);
        let cfg = Configuration::constant(macro_cell(&u, 2, 3).unwrap(), false);
        let xi = Word::constant(true, 400);
        assert!(!good_event(&cfg, &full_seed(u, &p, 0), &xi, &p).unwrap());
        assert!(seed_sets_from(&cfg, &full_seed(u, &p, 0), &Word::constant(true, 3), &p).is_err());
    }

    #[test]
    fn exact_sets_inside_relaxed_and_seed_monotone() {
        let p = params(2, 4);
        let u = MacroVertex::new(0, 0, 2);
        let cell = macro_cell(&u, 2, 3).unwrap();
        let xi = Word::from_bits((0..600).map(|i| i % 2 == 0));
        let relaxed = p.clone().with_mode(SearchMode::Relaxed);
        let face: Vec<LatticePoint> = macro_face(&u, 2, 3).unwrap().points().collect();
        for t in 0..30 {
            let mut rng = RngStream::new(4, t);
            let cfg = sample(&cell, 0.5, &mut rng).unwrap();
            let small = SeedSet::new(u, face.iter().filter(|_| rng.bernoulli(0.3)).map(|x| (x.clone(), 0)));
            let big = SeedSet::new(
                u,
                small.points.iter().cloned().chain(face.iter().filter(|_| rng.bernoulli(0.5)).map(|x| (x.clone(), 0))),
            );
            let e = seed_sets_from(&cfg, &small, &xi, &p).unwrap();
            let r = seed_sets_from(&cfg, &small, &xi, &relaxed).unwrap();
            let b = seed_sets_from(&cfg, &big, &xi, &p).unwrap();
            for i in 0..e.len() {
                for (y, t) in &e[i].points {
                    assert!(r[i].offset(y).is_some_and(|rt| rt <= *t));
                    assert!(b[i].offset(y).is_some_and(|bt| bt <= *t));
                }
            }
            if good_event(&cfg, &small, &xi, &p).unwrap() {
                assert!(good_event(&cfg, &big, &xi, &p).unwrap());
            }
        }
    }

    #[test]
    fn boundary_size_formula() {
        for (d, k, h, n) in [(3, 2, 2, 1), (3, 2, 4, 2), (4, 2, 2, 1)] {
            let p = RenormParams::new(d, 0.5, k, 1e-6, h).unwrap();
            let lam = Region::lambda(d, n, h, k).unwrap();
            let b = inner_boundary(&lam, &p.slab()).unwrap();
            assert_eq!(b.len() as u64, lambda_boundary_size(n, &p));
        }
    }

    #[test]
    fn emn_examples() {
        let p = params(2, 2);
        let lam = Region::lambda(3, 3, 2, 2).unwrap();
        let xi = Word::constant(true, 2000);
        let ones = Configuration::constant(lam.clone(), true);
        assert!(event_emn(&ones, 1, 1, &xi, &p).unwrap().holds);
        let o = event_emn(&ones, 1, 3, &xi, &p).unwrap();
        assert!(o.holds);
        assert_eq!(o.witness.len(), o.boundary);
        let zeros = Configuration::constant(lam, false);
        assert!(!event_emn(&zeros, 1, 3, &xi, &p).unwrap().holds);
    }

    #[test]
    fn exploration_fills_cone_on_all_ones() {
        let p = params(2, 4);
        let n = 7;
        let window = exploration_window(n, &p).unwrap();
        let cfg = Configuration::constant(window, true);
        let xi = Word::constant(true, 20_000);
        let faces = left_faces(n, &p).unwrap();
        let (u0, f0) = &faces[faces.len() / 2];
        let targets: Vec<(LatticePoint, usize)> = f0.points().map(|x| (x, 0)).collect();
        let rep = macro_exploration(&cfg, &targets, &xi, n, &p).unwrap();
        assert_eq!(rep.start, vec![*u0]);
        assert_eq!(rep.initial, vec![*u0]);
        let block = SlabBlock::macro_block(n, 4).unwrap();
        let cone = crate::oriented::reach_mask(
            &crate::oriented::OrientedConfig::from_open(&block.window, crate::bits::BitSet::full(block.window.len()))
                .unwrap(),
            &[*u0],
        )
        .unwrap();
        assert_eq!(rep.accepted, cone.ones().map(|i| block.window.vertex(i)).collect::<Vec<_>>());
        assert!(rep.blocked.is_empty());
        assert_eq!(rep.audit.repeated, 0);
        assert_eq!(rep.audit.overlapping_pairs, 0);
        assert!(!rep.t_prime.is_empty());
    }

    #[test]
    fn sparse_start_explores_nothing() {
        let p = params(2, 4);
        let window = exploration_window(7, &p).unwrap();
        let cfg = Configuration::constant(window, true);
        let rep = macro_exploration(&cfg, &[], &Word::constant(true, 100), 7, &p).unwrap();
        assert!(rep.start.is_empty() && rep.accepted.is_empty() && rep.t_prime.is_empty());
    }
}
