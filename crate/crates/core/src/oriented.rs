//! Oriented site percolation on the planar graph `G` and on the slab graph,
//! exploration sequences, the accordion embedding and the associated event
//! statistics.
//!
//! Planar vertices are stored as [`MacroVertex`] with `v3 = 0`. A planar
//! vertex `(x, y)` exists when `x` is even and `x/2 + y` is even, and has
//! out-edges to `(x + 2, y ± 1)`.

use crate::bits::BitSet;
use crate::config::check_probability;
use crate::error::{domain, Error, Result};
use crate::geometry::MacroVertex;
use crate::rng::RngStream;
use crate::stats::{binomial_upper_tail, par_trials, Estimate};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "graph", rename_all = "lowercase")]
pub enum OrientedGraph {
    Planar,
    Slab { h: i64 },
}

impl OrientedGraph {
    pub fn is_vertex(&self, v: &MacroVertex) -> bool {
        match *self {
            OrientedGraph::Planar => {
                v.v3 == 0 && v.v1.rem_euclid(2) == 0 && (v.v1.div_euclid(2) + v.v2).rem_euclid(2) == 0
            }
            OrientedGraph::Slab { h } => v.is_valid(h),
        }
    }

    /// Out-neighbors in lexicographic order.
    pub fn out_neighbors(&self, v: &MacroVertex) -> SmallVec<[MacroVertex; 4]> {
        match *self {
            OrientedGraph::Planar => [-1, 1].iter().map(|&e| MacroVertex::new(v.v1 + 2, v.v2 + e, 0)).collect(),
            OrientedGraph::Slab { h } => v.out_neighbors_unchecked(h),
        }
    }

    pub fn is_edge(&self, a: &MacroVertex, b: &MacroVertex) -> bool {
        self.is_vertex(a) && self.is_vertex(b) && self.out_neighbors(a).contains(b)
    }
}

/// A finite box of the planar or slab graph; vertices are indexed in
/// lexicographic order, so every edge goes from a lower to a higher index.
#[derive(Clone, Debug)]
pub struct OrientedWindow {
    graph: OrientedGraph,
    x: (i64, i64),
    y: (i64, i64),
    z: (i64, i64),
    vertices: Vec<MacroVertex>,
    slots: Vec<u32>,
    succ: Vec<[u32; 4]>,
}

impl OrientedWindow {
    /// Planar vertices with `x0 <= x <= x1`, `y0 <= y <= y1`.
    pub fn planar(x0: i64, x1: i64, y0: i64, y1: i64) -> Result<Self> {
        Self::build(OrientedGraph::Planar, (x0, x1), (y0, y1), (0, 0))
    }

    /// Slab vertices with `x0 <= x <= x1`, `y0 <= y <= y1` and `0 < z < h`.
    pub fn slab(h: i64, x0: i64, x1: i64, y0: i64, y1: i64) -> Result<Self> {
        if h < 2 {
            return Err(domain(format!("slab height must be >= 2 (got {h})")));
        }
        Self::build(OrientedGraph::Slab { h }, (x0, x1), (y0, y1), (1, h - 1))
    }

    fn build(graph: OrientedGraph, x: (i64, i64), y: (i64, i64), z: (i64, i64)) -> Result<Self> {
        if x.0 > x.1 || y.0 > y.1 || z.0 > z.1 {
            return Err(domain(format!("empty oriented window x={x:?} y={y:?} z={z:?}")));
        }
        let x = (x.0 + x.0.rem_euclid(2), x.1 - x.1.rem_euclid(2));
        let nx = if x.0 > x.1 { 0 } else { ((x.1 - x.0) / 2 + 1) as u64 };
        let ny = (y.1 - y.0 + 1) as u64;
        let nz = (z.1 - z.0 + 1) as u64;
        let cells = nx.saturating_mul(ny).saturating_mul(nz);
        if cells >= NO_SLOT as u64 {
            return Err(Error::Capacity(format!("oriented window with {cells} cells is too large")));
        }
        let mut slots = vec![NO_SLOT; cells as usize];
        let mut vertices = Vec::new();
        for ix in 0..nx as i64 {
            for iy in 0..ny as i64 {
                for iz in 0..nz as i64 {
                    let v = MacroVertex::new(x.0 + 2 * ix, y.0 + iy, z.0 + iz);
                    if graph.is_vertex(&v) {
                        slots[((ix * ny as i64 + iy) * nz as i64 + iz) as usize] = vertices.len() as u32;
                        vertices.push(v);
                    }
                }
            }
        }
        let mut w = Self { graph, x, y, z, vertices, slots, succ: Vec::new() };
        w.succ = w
            .vertices
            .iter()
            .map(|v| {
                let mut s = [NO_SLOT; 4];
                for (k, t) in graph.out_neighbors(v).iter().enumerate() {
                    s[k] = w.index(t).map_or(NO_SLOT, |i| i as u32);
                }
                s
            })
            .collect();
        Ok(w)
    }

    pub fn graph(&self) -> OrientedGraph {
        self.graph
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[MacroVertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> MacroVertex {
        self.vertices[i]
    }

    /// Even column range `(first, last)`.
    pub fn x_range(&self) -> (i64, i64) {
        self.x
    }

    pub fn y_range(&self) -> (i64, i64) {
        self.y
    }

    pub fn index(&self, v: &MacroVertex) -> Option<usize> {
        if v.v1 < self.x.0 || v.v1 > self.x.1 || v.v1.rem_euclid(2) != 0 {
            return None;
        }
        if v.v2 < self.y.0 || v.v2 > self.y.1 || v.v3 < self.z.0 || v.v3 > self.z.1 {
            return None;
        }
        let ny = self.y.1 - self.y.0 + 1;
        let nz = self.z.1 - self.z.0 + 1;
        let slot = (((v.v1 - self.x.0) / 2 * ny + (v.v2 - self.y.0)) * nz + (v.v3 - self.z.0)) as usize;
        match self.slots[slot] {
            NO_SLOT => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, v: &MacroVertex) -> bool {
        self.index(v).is_some()
    }

    /// Window indices of the out-neighbors of vertex `i` that lie in the window.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.succ[i].iter().filter(|&&s| s != NO_SLOT).map(|&s| s as usize)
    }

    /// Vertices of column `x` with `y0 <= y <= y1`, in order.
    pub fn column(&self, x: i64, y0: i64, y1: i64) -> Vec<MacroVertex> {
        self.vertices.iter().filter(|v| v.v1 == x && y0 <= v.v2 && v.v2 <= y1).copied().collect()
    }

    fn indices_of(&self, vs: &[MacroVertex]) -> Result<BitSet> {
        let mut mask = BitSet::new(self.len());
        for v in vs {
            let i = self.index(v).ok_or_else(|| domain(format!("{v:?} is not a vertex of the oriented window")))?;
            mask.insert(i);
        }
        Ok(mask)
    }

    fn vertices_of(&self, mask: &BitSet) -> Vec<MacroVertex> {
        mask.ones().map(|i| self.vertices[i]).collect()
    }
}

/// The slab sets `B_{n,m}`, `L_{n,m}`, `R_{n,m}`.
///
/// The window spans the even columns strictly between `n` and `2n`; `L` is
/// its first column and `R` its last.
#[derive(Clone, Debug)]
pub struct SlabBlock {
    pub n: i64,
    pub m: i64,
    pub h: i64,
    pub window: OrientedWindow,
}

impl SlabBlock {
    pub fn new(n: i64, m: i64, h: i64) -> Result<Self> {
        if m < 1 || n < 3 {
            return Err(domain(format!("slab block needs n >= 3 and m >= 1 (got n={n}, m={m})")));
        }
        let x_l = n + 1 + (n + 1).rem_euclid(2);
        let x_r = 2 * n - 2;
        if x_l > x_r {
            return Err(domain(format!("slab block with n={n} has no even column in (n, 2n)")));
        }
        let window = OrientedWindow::slab(h, x_l, x_r, -2 * m + 1, 2 * m - 1)?;
        Ok(Self { n, m, h, window })
    }

    /// `B_n`, with `m = n`.
    pub fn macro_block(n: i64, h: i64) -> Result<Self> {
        Self::new(n, n, h)
    }

    /// `B_{n, n/h}` with `m` rounded up.
    pub fn thin(n: i64, h: i64) -> Result<Self> {
        if h < 1 {
            return Err(domain("slab height must be positive"));
        }
        Self::new(n, (n + h - 1) / h, h)
    }

    pub fn x_left(&self) -> i64 {
        self.window.x_range().0
    }

    pub fn x_right(&self) -> i64 {
        self.window.x_range().1
    }

    pub fn left(&self) -> Vec<MacroVertex> {
        self.window.column(self.x_left(), -self.m, self.m)
    }

    pub fn right(&self) -> Vec<MacroVertex> {
        self.window.column(self.x_right(), -self.m, self.m)
    }
}

/// Open/closed states on a window, driven by one uniform per vertex so that
/// configurations at different `γ` are coupled.
#[derive(Clone, Debug)]
pub struct OrientedConfig<'w> {
    window: &'w OrientedWindow,
    open: BitSet,
    gamma: f64,
    provenance: Option<(u64, u64)>,
}

/// One uniform per vertex of `window`, in index order.
pub fn sample_uniforms(window: &OrientedWindow, rng: &mut RngStream) -> Vec<f64> {
    (0..window.len()).map(|_| rng.uniform()).collect()
}

impl<'w> OrientedConfig<'w> {
    pub fn from_open(window: &'w OrientedWindow, open: BitSet) -> Result<Self> {
        if open.len() != window.len() {
            return Err(domain(format!("{} bits for a window of {} vertices", open.len(), window.len())));
        }
        Ok(Self { window, open, gamma: f64::NAN, provenance: None })
    }

    /// Vertex `i` is open iff `uniforms[i] < gamma`.
    pub fn from_uniforms(window: &'w OrientedWindow, uniforms: &[f64], gamma: f64) -> Result<Self> {
        check_probability(gamma)?;
        if uniforms.len() != window.len() {
            return Err(domain(format!("{} uniforms for a window of {} vertices", uniforms.len(), window.len())));
        }
        let mut open = BitSet::new(window.len());
        for (i, &u) in uniforms.iter().enumerate() {
            open.set(i, u < gamma);
        }
        Ok(Self { window, open, gamma, provenance: None })
    }

    pub fn sample(window: &'w OrientedWindow, gamma: f64, rng: &mut RngStream) -> Result<Self> {
        let provenance = Some((rng.master_seed(), rng.stream_id()));
        let u = sample_uniforms(window, rng);
        Ok(Self { provenance, ..Self::from_uniforms(window, &u, gamma)? })
    }

    pub fn window(&self) -> &'w OrientedWindow {
        self.window
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn provenance(&self) -> Option<(u64, u64)> {
        self.provenance
    }

    pub fn open_bits(&self) -> &BitSet {
        &self.open
    }

    pub fn is_open(&self, v: &MacroVertex) -> bool {
        self.window.index(v).is_some_and(|i| self.open.get(i))
    }
}

/// Window indices reachable from `sources` by open oriented paths inside the
/// window, sources included when open.
pub fn reach_mask(cfg: &OrientedConfig, sources: &[MacroVertex]) -> Result<BitSet> {
    let w = cfg.window;
    let seeds = w.indices_of(sources)?;
    let mut hit = seeds;
    let mut reached = BitSet::new(w.len());
    for i in 0..w.len() {
        if hit.get(i) && cfg.open.get(i) {
            reached.insert(i);
            for j in w.successors(i) {
                hit.insert(j);
            }
        }
    }
    Ok(reached)
}

/// Vertices of `targets` reached from `sources`, in lexicographic order.
pub fn oriented_reach(
    cfg: &OrientedConfig,
    sources: &[MacroVertex],
    targets: &[MacroVertex],
) -> Result<Vec<MacroVertex>> {
    let reached = reach_mask(cfg, sources)?;
    let mut out: Vec<MacroVertex> =
        targets.iter().filter(|t| cfg.window.index(t).is_some_and(|i| reached.get(i))).copied().collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// The planar window on which `ξ^A_{5n}` is computed exactly: it contains
/// the backward cone of every target.
pub fn xi_window(n: i64) -> Result<OrientedWindow> {
    check_xi_n(n)?;
    OrientedWindow::planar(0, 5 * n, -7 * n / 2, 7 * n / 2)
}

fn check_xi_n(n: i64) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(domain(format!("n must be even and positive (got {n})")));
    }
    Ok(())
}

/// `ξ^A_{5n}`: the `y ∈ [-n, n]` such that `(5n, y)` is reached from `{0} × A`.
pub fn xi_5n(cfg: &OrientedConfig, a: &[i64], n: i64) -> Result<Vec<i64>> {
    check_xi_n(n)?;
    if cfg.window.graph != OrientedGraph::Planar {
        return Err(domain("xi_5n needs a planar configuration"));
    }
    let sources: Vec<MacroVertex> = a.iter().map(|&y| MacroVertex::new(0, y, 0)).collect();
    let reached = reach_mask(cfg, &sources)?;
    Ok(xi_targets(cfg.window, n)
        .into_iter()
        .filter(|t| reached.get(cfg.window.index(t).unwrap()))
        .map(|t| t.v2)
        .collect())
}

fn xi_targets(w: &OrientedWindow, n: i64) -> Vec<MacroVertex> {
    w.column(5 * n, -n, n)
}

/// The pair `(U_i, V_i)` of an exploration, with its query trace.
#[derive(Clone, Debug)]
pub struct ExplorationState {
    initial: Vec<MacroVertex>,
    u: BitSet,
    v: BitSet,
    trace: Vec<(MacroVertex, bool)>,
}

impl ExplorationState {
    pub fn initial(&self) -> &[MacroVertex] {
        &self.initial
    }

    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    /// Queried vertices with their verdicts, in query order.
    pub fn trace(&self) -> &[(MacroVertex, bool)] {
        &self.trace
    }

    pub fn u_mask(&self) -> &BitSet {
        &self.u
    }

    pub fn v_mask(&self) -> &BitSet {
        &self.v
    }

    pub fn accepted(&self, window: &OrientedWindow) -> Vec<MacroVertex> {
        window.vertices_of(&self.u)
    }

    pub fn blocked(&self, window: &OrientedWindow) -> Vec<MacroVertex> {
        window.vertices_of(&self.v)
    }

    /// Number of queries made for each vertex, keyed by vertex; a correct
    /// exploration never exceeds one.
    pub fn max_queries_per_vertex(&self) -> usize {
        let mut seen: Vec<&MacroVertex> = self.trace.iter().map(|(z, _)| z).collect();
        seen.sort_unstable();
        seen.chunk_by(|a, b| a == b).map(|c| c.len()).max().unwrap_or(0)
    }
}

/// Runs the exploration from `initial` to fixation: at each step the minimum
/// vertex of `∂⁺U ∩ window` outside `V` is queried once.
pub fn explore<F>(window: &OrientedWindow, initial: &[MacroVertex], mut decision: F) -> Result<ExplorationState>
where
    F: FnMut(MacroVertex, &ExplorationState) -> Result<bool>,
{
    let u = window.indices_of(initial)?;
    let mut state = ExplorationState { initial: initial.to_vec(), u, v: BitSet::new(window.len()), trace: Vec::new() };
    let mut frontier: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
    for i in state.u.ones() {
        frontier.extend(window.successors(i).map(Reverse));
    }
    while let Some(Reverse(z)) = frontier.pop() {
        if state.u.get(z) || state.v.get(z) {
            continue;
        }
        let vertex = window.vertex(z);
        let open = decision(vertex, &state)?;
        state.trace.push((vertex, open));
        if open {
            state.u.insert(z);
            frontier.extend(window.successors(z).map(Reverse));
        } else {
            state.v.insert(z);
        }
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingParams {
    pub n: i64,
    pub h: i64,
    pub gamma: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Use `B_{n, n/h}` instead of `B_n`.
    pub thin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub window_vertices: usize,
    pub left_size: usize,
    pub right_size: usize,
    pub source_size: usize,
    /// Frequency of `|U_∞ ∩ R| >= |R| / 1000`.
    pub crossing: Estimate,
    /// Frequency of `N > n / 20` (thin windows only).
    pub n_stat: Option<Estimate>,
}

/// Stream layout per trial: fork 1 chooses the source set, fork 2 draws the
/// vertex uniforms. Both are independent of `γ`.
fn trial_streams(seed: u64, trial: u64) -> (RngStream, RngStream) {
    let base = RngStream::new(seed, trial);
    (base.fork(1), base.fork(2))
}

pub fn crossing_stat(p: &CrossingParams) -> Result<CrossingReport> {
    check_probability(p.gamma)?;
    if !(p.delta > 0.0 && p.delta <= 1.0) {
        return Err(domain(format!("delta must lie in (0, 1] (got {})", p.delta)));
    }
    let block = if p.thin { SlabBlock::thin(p.n, p.h)? } else { SlabBlock::macro_block(p.n, p.h)? };
    let left = block.left();
    let right = block.right();
    let k = if p.thin { (p.delta * p.n as f64).ceil() } else { (p.delta * left.len() as f64).ceil() } as usize;
    if k > left.len() {
        return Err(domain(format!("a source set of {k} vertices does not fit in a left face of {}", left.len())));
    }
    let w = &block.window;
    let right_mask = w.indices_of(&right)?;
    let outcomes = par_trials(p.trials, |t| {
        let (mut pick, mut draw) = trial_streams(p.seed, t);
        let sources: Vec<MacroVertex> = pick.choose_subset(left.len(), k).into_iter().map(|i| left[i]).collect();
        let cfg = OrientedConfig::from_uniforms(w, &sample_uniforms(w, &mut draw), p.gamma)?;
        let state = explore(w, &sources, |v, _| Ok(cfg.is_open(&v)))?;
        let mut hit = state.u.clone();
        hit.intersect_with(&right_mask);
        let crossing = hit.count_ones() * 1000 >= right.len();
        let n_event = if p.thin {
            let mut r = reach_mask(&cfg, &sources)?;
            r.intersect_with(&right_mask);
            r.count_ones() as i64 * 20 > p.n
        } else {
            false
        };
        Ok((crossing, n_event))
    })?;
    let crossing = outcomes.iter().filter(|o| o.0).count() as u64;
    let n_hits = outcomes.iter().filter(|o| o.1).count() as u64;
    Ok(CrossingReport {
        window_vertices: w.len(),
        left_size: left.len(),
        right_size: right.len(),
        source_size: k,
        crossing: Estimate::new(crossing, p.trials, 0),
        n_stat: p.thin.then(|| Estimate::new(n_hits, p.trials, 0)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationParams {
    pub gamma: f64,
    pub delta: f64,
    pub n: i64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEvent {
    /// Event `|ξ^S_{5n} ∩ W| >= threshold`.
    pub threshold: u64,
    pub estimate: Estimate,
    /// Probability of the same event under the product-1/2 measure on `W`.
    pub benchmark: f64,
    /// The benchmark is not above the upper Wilson bound.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub targets: u64,
    pub source_size: usize,
    pub events: Vec<ProbeEvent>,
    /// Source-to-right crossing from the trimmed source set.
    pub g1: Estimate,
    /// Crossing from the bottom of the source column to `y >= n`.
    pub g2: Estimate,
    /// Crossing from the top of the source column to `y <= -n`.
    pub g3: Estimate,
    pub g: Estimate,
    pub dominated: bool,
    /// Mean of `|ξ^S_{5n}|` over trials.
    pub mean_xi: f64,
}

pub fn domination_probe(p: &DominationParams) -> Result<DominationReport> {
    check_probability(p.gamma)?;
    check_xi_n(p.n)?;
    if !(p.delta > 0.0 && p.delta < 0.1) {
        return Err(domain(format!("delta must lie in (0, 1/10) (got {})", p.delta)));
    }
    let n = p.n;
    let w = xi_window(n)?;
    let column: Vec<MacroVertex> = w.column(0, -n, n);
    let targets = xi_targets(&w, n);
    let k = ((p.delta * n as f64).ceil() as usize).min(column.len());
    let margin = p.delta * n as f64 / 4.0;
    let bottom: Vec<MacroVertex> = column.iter().filter(|v| (v.v2 as f64) <= -(n as f64) + margin).copied().collect();
    let top: Vec<MacroVertex> = column.iter().filter(|v| (v.v2 as f64) >= n as f64 - margin).copied().collect();
    let last: Vec<MacroVertex> = w.column(5 * n, i64::MIN, i64::MAX);
    let quarters = [0.25, 0.5, 0.75];
    let thresholds: Vec<u64> = quarters.iter().map(|q| (q * targets.len() as f64).ceil() as u64).collect();

    let outcomes = par_trials(p.trials, |t| {
        let (mut pick, mut draw) = trial_streams(p.seed, t);
        let sources: Vec<MacroVertex> = pick.choose_subset(column.len(), k).into_iter().map(|i| column[i]).collect();
        let cfg = OrientedConfig::from_uniforms(&w, &sample_uniforms(&w, &mut draw), p.gamma)?;
        let reached = reach_mask(&cfg, &sources)?;
        let size = targets.iter().filter(|v| reached.get(w.index(v).unwrap())).count() as u64;
        let trimmed: Vec<MacroVertex> =
            sources.iter().filter(|v| (v.v2 as f64).abs() <= n as f64 - margin).copied().collect();
        let hits = |src: &[MacroVertex], pred: &dyn Fn(&MacroVertex) -> bool| -> Result<bool> {
            let r = reach_mask(&cfg, src)?;
            Ok(last.iter().any(|v| pred(v) && r.get(w.index(v).unwrap())))
        };
        let g1 = hits(&trimmed, &|_| true)?;
        let g2 = hits(&bottom, &|v| v.v2 >= n)?;
        let g3 = hits(&top, &|v| v.v2 <= -n)?;
        Ok((size, g1, g2, g3))
    })?;

    let est = |f: &dyn Fn(&(u64, bool, bool, bool)) -> bool| {
        Estimate::new(outcomes.iter().filter(|o| f(o)).count() as u64, p.trials, 0)
    };
    let mut events = Vec::new();
    for &s in &thresholds {
        let estimate = est(&|o| o.0 >= s);
        let benchmark = binomial_upper_tail(targets.len() as u64, 0.5, s)?;
        let consistent = estimate.wilson95.hi >= benchmark;
        events.push(ProbeEvent { threshold: s, estimate, benchmark, consistent });
    }
    let mean_xi = if p.trials == 0 { 0.0 } else { outcomes.iter().map(|o| o.0 as f64).sum::<f64>() / p.trials as f64 };
    Ok(DominationReport {
        targets: targets.len() as u64,
        source_size: k,
        dominated: events.iter().all(|e| e.consistent),
        events,
        g1: est(&|o| o.1),
        g2: est(&|o| o.2),
        g3: est(&|o| o.3),
        g: est(&|o| o.1 && o.2 && o.3),
        mean_xi,
    })
}

/// Injective, edge-preserving embedding of a planar rectangle into `B_{n, n/h}`.
///
/// The planar vertex `(x, y)` maps to column `x_L + x`; its `y` selects a
/// position on a diagonal path through the `(y, z)` cross-section. The path
/// sweeps two-wide strips of the cross-section in increasing `y`, zigzagging
/// up and down in `z`, so the middle of the planar range lands on the central
/// rows `|y| <= m` that make up `L` and `R`.
#[derive(Clone, Debug)]
pub struct AccordionMap {
    n: i64,
    h: i64,
    block: SlabBlock,
    /// Planar columns `0..=width`.
    width: i64,
    y_lo: i64,
    path: Vec<(i64, i64)>,
    /// Planar `y` range whose image lies in the rows `|y| <= m`.
    middle: (i64, i64),
    checks: AccordionChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccordionChecks {
    pub domain_size: usize,
    pub image_size: usize,
    pub injective: bool,
    pub inside_block: bool,
    /// The middle of the last planar column maps into `R`.
    pub targets_in_right: bool,
    /// The middle of planar column 0 maps into `L`.
    pub sources_in_left: bool,
    /// `|f({0} × middle)| / |L|`.
    pub source_coverage: f64,
    pub edges: usize,
    pub edges_preserved: usize,
}

impl AccordionChecks {
    pub fn all_pass(&self) -> bool {
        self.injective
            && self.inside_block
            && self.targets_in_right
            && self.sources_in_left
            && self.edges == self.edges_preserved
    }
}

/// Path through the cross-section `(y, z)`, `|y| < 2m`, `0 < z < h`, with
/// diagonal steps only.
fn accordion_path(m: i64, h: i64) -> Vec<(i64, i64)> {
    let mut path = Vec::new();
    let first = -2 * m + 2;
    let mut c = first;
    let mut strip = 0;
    while c < 2 * m - 1 {
        let zs: Vec<i64> = if strip % 2 == 0 {
            let start = if strip == 0 { 1 } else { 2 };
            (start..h).collect()
        } else {
            (1..=h - 2).rev().collect()
        };
        for z in zs {
            path.push((c + z.rem_euclid(2), z));
        }
        c += 2;
        strip += 1;
    }
    path
}

impl AccordionMap {
    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    pub fn block(&self) -> &SlabBlock {
        &self.block
    }

    /// Last planar column of the domain.
    pub fn width(&self) -> i64 {
        self.width
    }

    /// Planar `y` range of the domain.
    pub fn y_range(&self) -> (i64, i64) {
        (self.y_lo, self.y_lo + self.path.len() as i64 - 1)
    }

    pub fn middle(&self) -> (i64, i64) {
        self.middle
    }

    pub fn checks(&self) -> &AccordionChecks {
        &self.checks
    }

    pub fn domain_window(&self) -> Result<OrientedWindow> {
        let (y0, y1) = self.y_range();
        OrientedWindow::planar(0, self.width, y0, y1)
    }

    pub fn map(&self, u: &MacroVertex) -> Option<MacroVertex> {
        let (y0, y1) = self.y_range();
        if !OrientedGraph::Planar.is_vertex(u) || u.v1 < 0 || u.v1 > self.width || u.v2 < y0 || u.v2 > y1 {
            return None;
        }
        let (yy, z) = self.path[(u.v2 - y0) as usize];
        Some(MacroVertex::new(self.block.x_left() + u.v1, yy, z))
    }

    /// `f({0} × middle)`.
    pub fn source_image(&self) -> Vec<MacroVertex> {
        self.column_image(0)
    }

    /// `f({width} × middle)`.
    pub fn target_image(&self) -> Vec<MacroVertex> {
        self.column_image(self.width)
    }

    fn column_image(&self, x: i64) -> Vec<MacroVertex> {
        (self.middle.0..=self.middle.1).filter_map(|y| self.map(&MacroVertex::new(x, y, 0))).collect()
    }

    /// Number of `u ∈ {0} × middle` with `f(u) ∈ sources`.
    pub fn source_hits(&self, sources: &[MacroVertex]) -> usize {
        let image = self.source_image();
        sources.iter().filter(|s| image.contains(s)).count()
    }

    /// Whether at least `δn/10` source-column vertices land in `sources`.
    pub fn meets_source_bound(&self, sources: &[MacroVertex], delta: f64) -> bool {
        self.source_hits(sources) as f64 >= delta * self.n as f64 / 10.0
    }

    fn run_checks(&self) -> Result<AccordionChecks> {
        let dom = self.domain_window()?;
        let b = &self.block.window;
        let graph = b.graph();
        let mut image = BitSet::new(b.len());
        let mut injective = true;
        let mut inside = true;
        let (mut edges, mut kept) = (0, 0);
        for (i, u) in dom.vertices().iter().enumerate() {
            let fu = self.map(u).expect("domain vertex");
            match b.index(&fu) {
                Some(j) => {
                    if image.get(j) {
                        injective = false;
                    }
                    image.insert(j);
                }
                None => inside = false,
            }
            for j in dom.successors(i) {
                edges += 1;
                let fv = self.map(&dom.vertex(j)).expect("domain vertex");
                if graph.is_edge(&fu, &fv) && b.contains(&fu) && b.contains(&fv) {
                    kept += 1;
                }
            }
        }
        let right = self.block.right();
        let left = self.block.left();
        let src = self.source_image();
        Ok(AccordionChecks {
            domain_size: dom.len(),
            image_size: image.count_ones(),
            injective,
            inside_block: inside,
            targets_in_right: self.target_image().iter().all(|v| right.contains(v)),
            sources_in_left: src.iter().all(|v| left.contains(v)),
            source_coverage: src.len() as f64 / left.len() as f64,
            edges,
            edges_preserved: kept,
        })
    }
}

/// Builds and checks the accordion embedding for `h >= 6` even with `h | n`.
pub fn accordion_embed(n: i64, h: i64) -> Result<AccordionMap> {
    if h < 6 || h % 2 != 0 || n < h || n % h != 0 {
        return Err(domain(format!("accordion needs h >= 6 even and h | n with n >= h (got n={n}, h={h})")));
    }
    let block = SlabBlock::thin(n, h)?;
    let m = block.m;
    let path = accordion_path(m, h);
    // Longest run of path positions inside the central rows.
    let (mut best, mut cur) = ((0usize, 0usize), None::<usize>);
    for (i, &(y, _)) in path.iter().enumerate() {
        if y.abs() <= m {
            let s = *cur.get_or_insert(i);
            if i + 1 - s > best.1 - best.0 {
                best = (s, i + 1);
            }
        } else {
            cur = None;
        }
    }
    if best.1 == best.0 {
        return Err(Error::Internal(format!("accordion path misses the central rows (n={n}, h={h})")));
    }
    // Position parity must match: cell at position k has y ≡ path[0].0 + k, and
    // the vertex (x, y_lo + k) of column x sits in slab column x_L + x.
    let center = ((best.0 + best.1 - 1) / 2) as i64;
    let mut y_lo = -center;
    let s = block.x_left() / 2;
    if (y_lo - path[0].0 - s).rem_euclid(2) != 0 {
        y_lo -= 1;
    }
    let width = block.x_right() - block.x_left();
    let middle = (y_lo + best.0 as i64, y_lo + best.1 as i64 - 1);
    let mut map = AccordionMap {
        n,
        h,
        block,
        width,
        y_lo,
        path,
        middle,
        checks: AccordionChecks {
            domain_size: 0,
            image_size: 0,
            injective: false,
            inside_block: false,
            targets_in_right: false,
            sources_in_left: false,
            source_coverage: 0.0,
            edges: 0,
            edges_preserved: 0,
        },
    };
    map.checks = map.run_checks()?;
    if !map.checks.all_pass() {
        return Err(Error::Internal(format!("accordion checks failed for n={n}, h={h}: {:?}", map.checks)));
    }
    Ok(map)
}
