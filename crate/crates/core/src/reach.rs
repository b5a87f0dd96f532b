//! Word reachability: plain 1-connectivity, relaxed product-state search and
//! exact self-avoiding search.
//!
//! A state `(y, t)` means "a path from some source `(x, t_x)` ends at `y` and
//! its last vertex read letter `t`". The relaxed search propagates layers
//! `R_{t+1} = (N(R_t) ∪ sources_{t+1}) ∩ {ω = ξ_{t+1}}` and allows revisits.
//! The exact search is a depth-first enumeration of self-avoiding paths,
//! pruned to states that are relaxed-reachable from a source and relaxed
//! co-reachable to a goal state. Any exact path to a goal only visits such
//! states, so an exhausted pruned search proves the goal unreachable.

use crate::bits::BitSet;
use crate::config::Configuration;
use crate::error::{capacity, domain, Result};
use crate::geometry::{Lattice, LatticePoint, Region};
use crate::word::{Word, MAX_ENUM_LEN};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest word index a search may be asked to reach.
pub const MAX_INDEX: usize = 1 << 20;

/// Default budget of depth-first expansions for one exact query.
pub const DEFAULT_MAX_EXPANSIONS: u64 = 200_000_000;

/// Layered relaxed tables larger than this many bits are refused.
const MAX_TABLE_BITS: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Self-avoiding paths, as in the definition of word-seeing.
    #[default]
    Exact,
    /// Paths may revisit vertices; an upper bound for the exact relation.
    Relaxed,
}

impl std::str::FromStr for SearchMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SearchMode::Exact),
            "relaxed" => Ok(SearchMode::Relaxed),
            _ => Err(crate::Error::Format(format!("unknown search mode {s:?} (expected exact or relaxed)"))),
        }
    }
}

impl std::fmt::Display for SearchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchMode::Exact => "exact",
            SearchMode::Relaxed => "relaxed",
        })
    }
}

/// A source `x` that starts reading word number `word` at letter `offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub vertex: LatticePoint,
    pub offset: usize,
    pub word: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSet {
    entries: Vec<Source>,
}

impl SourceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// One source reading word 0 from `offset`.
    pub fn single(vertex: LatticePoint, offset: usize) -> Self {
        Self { entries: vec![Source { vertex, offset, word: 0 }] }
    }

    /// Every vertex reads word 0 from letter 0.
    pub fn from_points(points: impl IntoIterator<Item = LatticePoint>) -> Self {
        Self { entries: points.into_iter().map(|vertex| Source { vertex, offset: 0, word: 0 }).collect() }
    }

    pub fn push(&mut self, vertex: LatticePoint, offset: usize, word: usize) {
        self.entries.push(Source { vertex, offset, word });
    }

    pub fn entries(&self) -> &[Source] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReachOptions {
    pub witnesses: bool,
    pub max_expansions: u64,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self { witnesses: false, max_expansions: DEFAULT_MAX_EXPANSIONS }
    }
}

/// A path `source = v_0 ~ ... ~ v_m` reading letters `start_index ..= start_index + m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub source: usize,
    pub start_index: usize,
    pub path: Vec<LatticePoint>,
}

impl Witness {
    pub fn end_index(&self) -> usize {
        self.start_index + self.path.len() - 1
    }
}

#[derive(Clone, Debug)]
pub struct ReachResult {
    region: Region,
    mode: SearchMode,
    layers: Vec<BitSet>,
    witnesses: Option<BTreeMap<LatticePoint, Witness>>,
}

impl ReachResult {
    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `layers()[t]` holds the ranks `y` with `(y, t)` reached.
    pub fn layers(&self) -> &[BitSet] {
        &self.layers
    }

    pub fn contains(&self, y: &LatticePoint, t: usize) -> bool {
        match (self.region.rank(y), self.layers.get(t)) {
            (Some(r), Some(layer)) => layer.get(r),
            _ => false,
        }
    }

    /// Vertices reached at some index.
    pub fn vertex_mask(&self) -> BitSet {
        let mut all = BitSet::new(self.region.len());
        for l in &self.layers {
            all.union_with(l);
        }
        all
    }

    pub fn vertices(&self) -> Vec<LatticePoint> {
        self.vertex_mask().ones().map(|r| self.region.point(r)).collect()
    }

    pub fn min_index(&self, y: &LatticePoint) -> Option<usize> {
        let r = self.region.rank(y)?;
        self.layers.iter().position(|l| l.get(r))
    }

    /// All reached states `(y, t)`, ordered by `t` then rank.
    pub fn states(&self) -> Vec<(LatticePoint, usize)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(t, l)| l.ones().map(move |r| (r, t)))
            .map(|(r, t)| (self.region.point(r), t))
            .collect()
    }

    pub fn state_count(&self) -> usize {
        self.layers.iter().map(BitSet::count_ones).sum()
    }

    /// Per-vertex witness reaching the vertex at its minimal index.
    pub fn witnesses(&self) -> Option<&BTreeMap<LatticePoint, Witness>> {
        self.witnesses.as_ref()
    }
}

/// `{ y ∈ region : x →𝟙 y within region for some x ∈ S }`, in rank order.
pub fn one_connected_set(cfg: &Configuration, s: &[LatticePoint], region: &Region) -> Result<Vec<LatticePoint>> {
    let mask = one_connected_mask(cfg, s, region)?;
    Ok(mask.ones().map(|r| region.point(r)).collect())
}

/// Same as [`one_connected_set`], as a mask over the ranks of `region`.
pub fn one_connected_mask(cfg: &Configuration, s: &[LatticePoint], region: &Region) -> Result<BitSet> {
    let local = restrict(cfg, region)?;
    let mut seen = BitSet::new(region.len());
    let mut queue = Vec::new();
    for x in s {
        let r = region.rank(x).ok_or_else(|| domain(format!("source {x} is outside the search region")))?;
        if local.get(r) && !seen.get(r) {
            seen.insert(r);
            queue.push(r);
        }
    }
    while let Some(v) = queue.pop() {
        for w in region.neighbor_ranks(v) {
            if local.get(w) && !seen.get(w) {
                seen.insert(w);
                queue.push(w);
            }
        }
    }
    Ok(seen)
}

fn restrict(cfg: &Configuration, region: &Region) -> Result<Configuration> {
    if cfg.region() == region {
        return Ok(cfg.clone());
    }
    cfg.restrict(region)
}

/// One source as seen by the engine: (rank, offset, index in the source set).
type LocalSource = (usize, usize, usize);

struct Group<'w> {
    word: &'w Word,
    sources: Vec<LocalSource>,
    /// Largest index worth searching in this group.
    t_cap: usize,
}

/// Shared search context over one region.
struct Searcher<'a> {
    region: &'a Region,
    lattice: Lattice,
    adj: Vec<u32>,
    deg: usize,
    colors: [BitSet; 2],
}

const NO_NEIGHBOR: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flow {
    Continue,
    Restart,
    Stop,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum DfsEnd {
    Exhausted,
    Restarted,
    Stopped,
}

enum Goal<'g> {
    /// Per-layer goal sets.
    Layers(&'g [BitSet]),
    State(usize, usize),
    /// Any vertex at this layer.
    Layer(usize),
}

struct Budget {
    used: u64,
    limit: u64,
}

impl Budget {
    fn spend(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            return Err(capacity(format!(
                "exact search exceeded its budget of {} expansions; use relaxed mode, shrink the region or raise the budget",
                self.limit
            )));
        }
        Ok(())
    }
}

struct Frame {
    v: u32,
    t: u32,
    next: u8,
}

impl<'a> Searcher<'a> {
    fn new(cfg: &Configuration, region: &'a Region) -> Result<Self> {
        let local = restrict(cfg, region)?;
        let deg = 2 * region.dim();
        let mut adj = vec![NO_NEIGHBOR; region.len() * deg];
        for v in 0..region.len() {
            for (i, w) in region.neighbor_ranks(v).into_iter().enumerate() {
                adj[v * deg + i] = w as u32;
            }
        }
        let ones = local.bits().clone();
        let zeros = ones.complement();
        Ok(Self { region, lattice: Lattice::new(region.clone()), adj, deg, colors: [zeros, ones] })
    }

    fn n(&self) -> usize {
        self.region.len()
    }

    #[inline]
    fn color(&self, bit: bool) -> &BitSet {
        &self.colors[bit as usize]
    }

    fn groups<'w>(
        &self,
        sources: &SourceSet,
        words: &'w [Word],
        max_index: usize,
        exact: bool,
    ) -> Result<Vec<Group<'w>>> {
        if max_index > MAX_INDEX {
            return Err(capacity(format!("max index {max_index} exceeds the limit {MAX_INDEX}")));
        }
        let mut by_word: BTreeMap<usize, Vec<LocalSource>> = BTreeMap::new();
        for (i, s) in sources.entries().iter().enumerate() {
            let r = self
                .region
                .rank(&s.vertex)
                .ok_or_else(|| domain(format!("source {} is outside the search region", s.vertex)))?;
            if s.word >= words.len() {
                return Err(domain(format!(
                    "source {} refers to word {} but only {} words were given",
                    s.vertex,
                    s.word,
                    words.len()
                )));
            }
            by_word.entry(s.word).or_default().push((r, s.offset, i));
        }
        let mut out = Vec::new();
        for (w, mut srcs) in by_word {
            let word = &words[w];
            if word.is_empty() {
                continue;
            }
            srcs.sort_by_key(|&(r, off, i)| (off, r, i));
            let max_off = srcs.iter().map(|s| s.1).max().unwrap_or(0);
            let mut t_cap = max_index.min(word.len() - 1);
            if exact {
                t_cap = t_cap.min(max_off + self.n() - 1);
            }
            srcs.retain(|s| s.1 <= t_cap);
            if !srcs.is_empty() {
                out.push(Group { word, sources: srcs, t_cap });
            }
        }
        Ok(out)
    }

    fn check_table(&self, layers: usize) -> Result<()> {
        let bits = layers as u64 * self.n() as u64;
        if bits > MAX_TABLE_BITS {
            return Err(capacity(format!(
                "a layered table of {layers} indices over {} sites needs {bits} bits (limit {MAX_TABLE_BITS}); lower max-index or shrink the region",
                self.n()
            )));
        }
        Ok(())
    }

    /// Relaxed forward layers `0 ..= group.t_cap`.
    fn forward(&self, g: &Group) -> Result<Vec<BitSet>> {
        self.check_table(g.t_cap + 1)?;
        let n = self.n();
        let mut layers: Vec<BitSet> = Vec::with_capacity(g.t_cap + 1);
        let mut src_iter = g.sources.iter().peekable();
        for t in 0..=g.t_cap {
            let mut cur = BitSet::new(n);
            if t > 0 && layers[t - 1].any() {
                self.lattice.dilate_into(&layers[t - 1], &mut cur);
            }
            while let Some(&&(r, off, _)) = src_iter.peek() {
                if off != t {
                    break;
                }
                cur.insert(r);
                src_iter.next();
            }
            cur.intersect_with(self.color(g.word.get(t)));
            layers.push(cur);
        }
        Ok(layers)
    }

    /// States of `fwd` from which a goal state is relaxed-reachable.
    fn alive(&self, fwd: &[BitSet], goal: &Goal) -> Vec<BitSet> {
        let n = self.n();
        let top = match goal {
            Goal::State(_, t) | Goal::Layer(t) => (*t).min(fwd.len() - 1),
            _ => fwd.len() - 1,
        };
        let mut alive = vec![BitSet::new(n); fwd.len()];
        let mut above_empty = true;
        for t in (0..=top).rev() {
            let mut a = BitSet::new(n);
            if !above_empty {
                self.lattice.dilate_into(&alive[t + 1], &mut a);
            }
            match goal {
                Goal::Layers(g) => {
                    if let Some(gl) = g.get(t) {
                        a.union_with(gl);
                    }
                }
                Goal::State(v, tt) if *tt == t => a.insert(*v),
                Goal::Layer(tt) if *tt == t => {
                    a = BitSet::full(n);
                }
                _ => {}
            }
            a.intersect_with(&fwd[t]);
            above_empty = a.none();
            alive[t] = a;
        }
        alive
    }

    /// Depth-first enumeration of self-avoiding paths through alive states.
    /// `on_new(v, t, source, path, expansions)` fires the first time a state is confirmed.
    fn dfs(
        &self,
        g: &Group,
        alive: &[BitSet],
        confirmed: &mut [BitSet],
        budget: &mut Budget,
        on_new: &mut dyn FnMut(usize, usize, usize, &[u32], u64) -> Flow,
    ) -> Result<DfsEnd> {
        let n = self.n();
        let mut on_path = BitSet::new(n);
        let mut stack: Vec<Frame> = Vec::new();
        let mut path: Vec<u32> = Vec::new();
        let t_top = alive.len() - 1;
        for &(x, tx, si) in &g.sources {
            if !alive[tx].get(x) {
                continue;
            }
            stack.push(Frame { v: x as u32, t: tx as u32, next: 0 });
            path.push(x as u32);
            on_path.insert(x);
            if !confirmed[tx].get(x) {
                confirmed[tx].insert(x);
                match on_new(x, tx, si, &path, budget.used) {
                    Flow::Continue => {}
                    Flow::Restart => return Ok(DfsEnd::Restarted),
                    Flow::Stop => return Ok(DfsEnd::Stopped),
                }
            }
            while let Some(top) = stack.last_mut() {
                let v = top.v as usize;
                let t = top.t as usize;
                let mut pushed = None;
                if t < t_top {
                    let next_alive = &alive[t + 1];
                    while (top.next as usize) < self.deg {
                        let w = self.adj[v * self.deg + top.next as usize];
                        top.next += 1;
                        if w == NO_NEIGHBOR {
                            break;
                        }
                        let w = w as usize;
                        if !on_path.get(w) && next_alive.get(w) {
                            pushed = Some(w);
                            break;
                        }
                    }
                }
                match pushed {
                    Some(w) => {
                        budget.spend()?;
                        stack.push(Frame { v: w as u32, t: (t + 1) as u32, next: 0 });
                        path.push(w as u32);
                        on_path.insert(w);
                        if !confirmed[t + 1].get(w) {
                            confirmed[t + 1].insert(w);
                            match on_new(w, t + 1, si, &path, budget.used) {
                                Flow::Continue => {}
                                Flow::Restart => return Ok(DfsEnd::Restarted),
                                Flow::Stop => return Ok(DfsEnd::Stopped),
                            }
                        }
                    }
                    None => {
                        on_path.remove(v);
                        path.pop();
                        stack.pop();
                    }
                }
            }
        }
        Ok(DfsEnd::Exhausted)
    }

    fn restart_threshold(&self) -> u64 {
        (self.n() as u64).max(4096)
    }

    fn to_points(&self, path: &[u32]) -> Vec<LatticePoint> {
        path.iter().map(|&r| self.region.point(r as usize)).collect()
    }
}

fn record_witness(
    map: &mut BTreeMap<usize, (usize, usize, Vec<u32>)>,
    v: usize,
    t: usize,
    source: usize,
    path: &[u32],
) {
    let better = map.get(&v).is_none_or(|(tt, _, _)| t < *tt);
    if better {
        map.insert(v, (t, source, path.to_vec()));
    }
}

/// Exact (self-avoiding) reachability of every state `(y, t)` with `t <= max_index`.
pub fn exact_word_reach(
    cfg: &Configuration,
    sources: &SourceSet,
    words: &[Word],
    region: &Region,
    max_index: usize,
    opts: &ReachOptions,
) -> Result<ReachResult> {
    let s = Searcher::new(cfg, region)?;
    let groups = s.groups(sources, words, max_index, true)?;
    let t_len = groups.iter().map(|g| g.t_cap + 1).max().unwrap_or(0);
    let mut confirmed = vec![BitSet::new(s.n()); t_len];
    let mut budget = Budget { used: 0, limit: opts.max_expansions };
    let mut wit: BTreeMap<usize, (usize, usize, Vec<u32>)> = BTreeMap::new();
    let threshold = s.restart_threshold();
    for g in &groups {
        let fwd = s.forward(g)?;
        loop {
            let goal: Vec<BitSet> = fwd
                .iter()
                .zip(&confirmed)
                .map(|(f, c)| {
                    let mut x = f.clone();
                    x.difference_with(c);
                    x
                })
                .collect();
            if goal.iter().all(BitSet::none) {
                break;
            }
            let alive = s.alive(&fwd, &Goal::Layers(&goal));
            let start = budget.used;
            let mut fresh = 0u64;
            let mut on_new = |v: usize, t: usize, si: usize, path: &[u32], used: u64| {
                if opts.witnesses {
                    record_witness(&mut wit, v, t, si, path);
                }
                if goal[t].get(v) {
                    fresh += 1;
                }
                if fresh > 0 && used - start >= threshold {
                    Flow::Restart
                } else {
                    Flow::Continue
                }
            };
            if s.dfs(g, &alive, &mut confirmed, &mut budget, &mut on_new)? == DfsEnd::Exhausted {
                break;
            }
        }
    }
    let witnesses = opts.witnesses.then(|| {
        wit.into_iter()
            .map(|(v, (t, si, path))| {
                let points = s.to_points(&path);
                let start_index = t + 1 - points.len();
                (s.region.point(v), Witness { source: si, start_index, path: points })
            })
            .collect()
    });
    let layers = pad_layers(confirmed, max_index, s.n());
    Ok(ReachResult { region: region.clone(), mode: SearchMode::Exact, layers, witnesses })
}

fn pad_layers(mut layers: Vec<BitSet>, max_index: usize, n: usize) -> Vec<BitSet> {
    while layers.len() > 1 && layers.last().is_some_and(BitSet::none) {
        layers.pop();
    }
    if layers.is_empty() {
        layers.push(BitSet::new(n));
    }
    layers.truncate(max_index + 1);
    layers
}

/// Relaxed (revisits allowed) reachability of every state `(y, t)` with `t <= max_index`.
pub fn relaxed_word_reach(
    cfg: &Configuration,
    sources: &SourceSet,
    words: &[Word],
    region: &Region,
    max_index: usize,
    opts: &ReachOptions,
) -> Result<ReachResult> {
    let s = Searcher::new(cfg, region)?;
    let groups = s.groups(sources, words, max_index, false)?;
    let t_len = groups.iter().map(|g| g.t_cap + 1).max().unwrap_or(0);
    let mut layers = vec![BitSet::new(s.n()); t_len];
    let mut tables = Vec::with_capacity(groups.len());
    for g in &groups {
        let fwd = s.forward(g)?;
        for (t, l) in fwd.iter().enumerate() {
            layers[t].union_with(l);
        }
        tables.push(fwd);
    }
    let witnesses = opts.witnesses.then(|| {
        let mut map = BTreeMap::new();
        let mut best: Vec<Option<(usize, usize)>> = vec![None; s.n()];
        for (gi, fwd) in tables.iter().enumerate() {
            for (t, l) in fwd.iter().enumerate() {
                for v in l.ones() {
                    if best[v].is_none_or(|(bt, _)| t < bt) {
                        best[v] = Some((t, gi));
                    }
                }
            }
        }
        for (v, b) in best.into_iter().enumerate() {
            if let Some((t, gi)) = b {
                let w = relaxed_trace(&s, &groups[gi], &tables[gi], v, t);
                map.insert(s.region.point(v), w);
            }
        }
        map
    });
    let layers = pad_layers(layers, max_index, s.n());
    Ok(ReachResult { region: region.clone(), mode: SearchMode::Relaxed, layers, witnesses })
}

/// Walks back through the forward layers from `(v, t)` to a source.
fn relaxed_trace(s: &Searcher, g: &Group, fwd: &[BitSet], v: usize, t: usize) -> Witness {
    let mut path = vec![v as u32];
    let (mut cur, mut ct) = (v, t);
    loop {
        if let Some(&(_, off, si)) = g.sources.iter().find(|&&(r, off, _)| r == cur && off == ct) {
            path.reverse();
            return Witness { source: si, start_index: off, path: s.to_points(&path) };
        }
        let prev = (0..s.deg)
            .map(|i| s.adj[cur * s.deg + i])
            .take_while(|&w| w != NO_NEIGHBOR)
            .find(|&w| fwd[ct - 1].get(w as usize))
            .expect("every relaxed state has a predecessor or is a source");
        path.push(prev);
        cur = prev as usize;
        ct -= 1;
    }
}

pub fn word_reach(
    mode: SearchMode,
    cfg: &Configuration,
    sources: &SourceSet,
    words: &[Word],
    region: &Region,
    max_index: usize,
    opts: &ReachOptions,
) -> Result<ReachResult> {
    match mode {
        SearchMode::Exact => exact_word_reach(cfg, sources, words, region, max_index, opts),
        SearchMode::Relaxed => relaxed_word_reach(cfg, sources, words, region, max_index, opts),
    }
}

/// Which arrival index a target query reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetIndex {
    /// Some index at which the target is reached.
    Any,
    /// The smallest such index.
    Min,
}

/// For each target, an index `t <= max_index` at which it is reached (or `None`).
///
/// Much cheaper than a full [`exact_word_reach`] when only a few vertices matter:
/// the exact search is pruned towards unresolved targets only.
#[allow(clippy::too_many_arguments)]
pub fn reach_targets(
    mode: SearchMode,
    cfg: &Configuration,
    sources: &SourceSet,
    words: &[Word],
    region: &Region,
    max_index: usize,
    targets: &[LatticePoint],
    which: TargetIndex,
    max_expansions: u64,
) -> Result<Vec<Option<usize>>> {
    let s = Searcher::new(cfg, region)?;
    let ranks = targets
        .iter()
        .map(|p| region.rank(p).ok_or_else(|| domain(format!("target {p} is outside the search region"))))
        .collect::<Result<Vec<_>>>()?;
    let mask = BitSet::from_indices(s.n(), ranks.iter().copied());
    let by_rank = match mode {
        SearchMode::Relaxed => {
            let groups = s.groups(sources, words, max_index, false)?;
            let mut first = vec![None; s.n()];
            for g in &groups {
                let fwd = s.forward(g)?;
                for (t, l) in fwd.iter().enumerate() {
                    let mut hit = l.clone();
                    hit.intersect_with(&mask);
                    for v in hit.ones() {
                        if first[v].is_none_or(|b| t < b) {
                            first[v] = Some(t);
                        }
                    }
                }
            }
            first
        }
        SearchMode::Exact => {
            let groups = s.groups(sources, words, max_index, true)?;
            exact_targets(&s, &groups, &mask, which, max_expansions)?
        }
    };
    Ok(ranks.into_iter().map(|r| by_rank[r]).collect())
}

fn exact_targets(
    s: &Searcher,
    groups: &[Group],
    targets: &BitSet,
    which: TargetIndex,
    max_expansions: u64,
) -> Result<Vec<Option<usize>>> {
    let n = s.n();
    let t_len = groups.iter().map(|g| g.t_cap + 1).max().unwrap_or(0);
    let mut confirmed = vec![BitSet::new(n); t_len];
    let mut found: Vec<Option<usize>> = vec![None; n];
    let mut budget = Budget { used: 0, limit: max_expansions };
    let threshold = s.restart_threshold();
    let mut tables = Vec::with_capacity(groups.len());
    for g in groups {
        let fwd = s.forward(g)?;
        // Targets confirmed while searching earlier groups are already resolved.
        for (t, c) in confirmed.iter().enumerate() {
            for v in c.ones() {
                if targets.get(v) && found[v].is_none() {
                    found[v] = Some(t);
                }
            }
        }
        // Relaxed arrival index: a lower bound for the exact one.
        let mut lower = vec![usize::MAX; n];
        for (t, l) in fwd.iter().enumerate().rev() {
            for v in l.ones() {
                lower[v] = t;
            }
        }
        // Search with a growing slack above the lower bound so that short
        // paths are found before the DFS wanders into long ones.
        let mut slack = 0usize;
        loop {
            let full = slack >= fwd.len();
            let mut remaining = targets.clone();
            for v in targets.ones() {
                if found[v].is_some() {
                    remaining.remove(v);
                }
            }
            let mut left = remaining.count_ones();
            if left == 0 {
                break;
            }
            let layers: Vec<BitSet> = (0..fwd.len())
                .map(|t| {
                    let mut l = remaining.clone();
                    if !full {
                        for v in remaining.ones() {
                            if lower[v] == usize::MAX || t > lower[v] + slack {
                                l.remove(v);
                            }
                        }
                    }
                    l
                })
                .collect();
            let alive = s.alive(&fwd, &Goal::Layers(&layers));
            let start = budget.used;
            let mut fresh = 0u64;
            let mut on_new = |v: usize, t: usize, _si: usize, _path: &[u32], used: u64| {
                if remaining.get(v) && found[v].is_none() {
                    found[v] = Some(t);
                    fresh += 1;
                    left -= 1;
                    if left == 0 {
                        return Flow::Stop;
                    }
                }
                if fresh > 0 && used - start >= threshold {
                    Flow::Restart
                } else {
                    Flow::Continue
                }
            };
            match s.dfs(g, &alive, &mut confirmed, &mut budget, &mut on_new)? {
                DfsEnd::Restarted => {}
                DfsEnd::Stopped => break,
                DfsEnd::Exhausted if full => break,
                DfsEnd::Exhausted => slack = if slack == 0 { 1 } else { slack * 2 },
            }
        }
        tables.push(fwd);
    }
    if which == TargetIndex::Any {
        return Ok(found);
    }
    for v in targets.ones() {
        let Some(tf) = found[v] else { continue };
        'candidates: for t in 0..tf {
            if confirmed[t].get(v) {
                found[v] = Some(t);
                break;
            }
            for (g, fwd) in groups.iter().zip(&tables) {
                if t >= fwd.len() || !fwd[t].get(v) {
                    continue;
                }
                let alive = s.alive(fwd, &Goal::State(v, t));
                let mut on_new = |w: usize, tw: usize, _si: usize, _path: &[u32], _used: u64| {
                    if w == v && tw == t {
                        Flow::Stop
                    } else {
                        Flow::Continue
                    }
                };
                if s.dfs(g, &alive, &mut confirmed, &mut budget, &mut on_new)? == DfsEnd::Stopped {
                    found[v] = Some(t);
                    break 'candidates;
                }
            }
        }
    }
    Ok(found)
}

/// Outcome of [`sees_all_words`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllWordsOutcome {
    pub all_seen: bool,
    /// Lexicographically first word of the requested length that is not seen.
    pub failing_word: Option<Word>,
    pub mode: SearchMode,
}

/// Whether every word of length `len` is read from some vertex of `from` along
/// a path inside `horizon`.
pub fn sees_all_words(
    cfg: &Configuration,
    from: &Region,
    len: usize,
    horizon: &Region,
    mode: SearchMode,
    opts: &ReachOptions,
) -> Result<AllWordsOutcome> {
    if len > MAX_ENUM_LEN {
        return Err(capacity(format!("all-words checks enumerate 2^{len} words; the limit is length {MAX_ENUM_LEN}")));
    }
    if !from.is_box_subset_of(horizon) {
        return Err(domain(format!("{from:?} is not inside the horizon {horizon:?}")));
    }
    let s = Searcher::new(cfg, horizon)?;
    let start = horizon.mask_of(from);
    let mut budget = Budget { used: 0, limit: opts.max_expansions };
    let mut prefix = Word::new();
    let failing = first_unseen(&s, &start, len, mode, &mut prefix, None, &mut budget)?;
    Ok(AllWordsOutcome { all_seen: failing.is_none(), failing_word: failing, mode })
}

/// Depth-first walk of the prefix tree in lexicographic order. `set` holds the
/// vertices where reading the current prefix can end (relaxed semantics).
fn first_unseen(
    s: &Searcher,
    start: &BitSet,
    len: usize,
    mode: SearchMode,
    prefix: &mut Word,
    set: Option<&BitSet>,
    budget: &mut Budget,
) -> Result<Option<Word>> {
    if prefix.len() == len {
        if mode == SearchMode::Exact && len > 0 && !exact_sees(s, start, prefix, budget)? {
            return Ok(Some(prefix.clone()));
        }
        return Ok(None);
    }
    for b in [false, true] {
        let mut next = match set {
            None => start.clone(),
            Some(cur) => s.lattice.dilate(cur),
        };
        next.intersect_with(s.color(b));
        if next.none() {
            let mut w = prefix.clone();
            w.push(b);
            while w.len() < len {
                w.push(false);
            }
            return Ok(Some(w));
        }
        let mut child = prefix.clone();
        child.push(b);
        if let Some(w) = first_unseen(s, start, len, mode, &mut child, Some(&next), budget)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn exact_sees(s: &Searcher, start: &BitSet, word: &Word, budget: &mut Budget) -> Result<bool> {
    let last = word.len() - 1;
    if last >= s.n() {
        return Ok(false);
    }
    let sources: Vec<LocalSource> = start.ones().map(|r| (r, 0, r)).collect();
    let g = Group { word, sources, t_cap: last };
    let fwd = s.forward(&g)?;
    if fwd[last].none() {
        return Ok(false);
    }
    let alive = s.alive(&fwd, &Goal::Layer(last));
    let mut confirmed = vec![BitSet::new(s.n()); last + 1];
    let mut on_new = |_v: usize, t: usize, _si: usize, _path: &[u32], _used: u64| {
        if t == last {
            Flow::Stop
        } else {
            Flow::Continue
        }
    };
    Ok(s.dfs(&g, &alive, &mut confirmed, budget, &mut on_new)? == DfsEnd::Stopped)
}

/// Checks that `path` is a lattice path inside `cfg`'s region whose colors spell
/// `word[start ..]`, and (when `self_avoiding`) visits no vertex twice.
pub fn check_witness(
    cfg: &Configuration,
    word: &Word,
    start: usize,
    path: &[LatticePoint],
    self_avoiding: bool,
) -> bool {
    if path.is_empty() || start + path.len() > word.len() {
        return false;
    }
    for (i, v) in path.iter().enumerate() {
        if cfg.color(v) != Some(word.get(start + i)) {
            return false;
        }
        if i > 0 && !path[i - 1].is_adjacent(v) {
            return false;
        }
    }
    if self_avoiding {
        let mut seen = std::collections::HashSet::new();
        if !path.iter().all(|v| seen.insert(v)) {
            return false;
        }
    }
    true
}
