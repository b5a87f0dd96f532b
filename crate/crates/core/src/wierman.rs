//! Wierman's coupling: a pair `(ω, ω̃)` of `P_p` configurations such that
//! every vertex 1-connected to a source `x` in `ω` is reached from `x` in `ω̃`
//! by reading the word attached to `x`.
//!
//! The construction grows a spanning forest of the 1-cluster of the sources.
//! At each step it takes the smallest unexplored vertex `y'` adjacent to an
//! explored 1-vertex, attaches it to the smallest such neighbor `y` (depth
//! `d`), and draws `(ω_{y'}, ω̃_{y'})` given `ξ = ξ^{(root)}_{d+1}`:
//!
//! | outcome   | `ξ = 0`   | `ξ = 1`   |
//! |-----------|-----------|-----------|
//! | `(1, ξ)`  | `p`       | `p`       |
//! | `(0, 1)`  | `p`       | -         |
//! | `(0, 0)`  | `1 - 2p`  | `1 - p`   |
//!
//! One uniform `u` decides the row: `u < p`, then `u < 2p` when `ξ = 0`.

use crate::bits::BitSet;
use crate::config::{check_probability, Configuration, Provenance};
use crate::error::{domain, Result};
use crate::geometry::{LatticePoint, Region};
use crate::reach::one_connected_mask;
use crate::rng::RngStream;
use crate::word::{Word, WordGenerator};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// How sources enter the forest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceConvention {
    /// A source is drawn from the table with `ξ_0` and roots a tree only when
    /// `ω_x = 1`; the tree then reads `ξ_0, ξ_1, ...` from the source on.
    #[default]
    ReadAtSource,
    /// Every source roots a tree whatever its color, its own two states are
    /// independent `Bernoulli(p)`, and reading starts at the first step (`ξ_1`).
    SkipSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestNode {
    /// Rank of the parent; `None` at a root.
    pub parent: Option<usize>,
    /// Index of the root source.
    pub root: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    region: Region,
    omega: Configuration,
    omega_tilde: Configuration,
    sources: Vec<LatticePoint>,
    words: Vec<Word>,
    forest: Vec<Option<ForestNode>>,
    explored: BitSet,
    convention: SourceConvention,
}

impl CoupledPair {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn omega(&self) -> &Configuration {
        &self.omega
    }

    pub fn omega_tilde(&self) -> &Configuration {
        &self.omega_tilde
    }

    /// For mutation tests and what-if analyses.
    pub fn omega_mut(&mut self) -> &mut Configuration {
        &mut self.omega
    }

    pub fn omega_tilde_mut(&mut self) -> &mut Configuration {
        &mut self.omega_tilde
    }

    pub fn sources(&self) -> &[LatticePoint] {
        &self.sources
    }

    /// The word read by the tree rooted at source `i`.
    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn convention(&self) -> SourceConvention {
        self.convention
    }

    /// Forest node of the vertex with rank `r`.
    pub fn node(&self, r: usize) -> Option<ForestNode> {
        self.forest[r]
    }

    pub fn explored(&self) -> &BitSet {
        &self.explored
    }

    /// The tree branch from the root down to rank `r`.
    pub fn branch(&self, r: usize) -> Option<Vec<LatticePoint>> {
        let mut out = Vec::new();
        let mut cur = Some(r);
        while let Some(v) = cur {
            let node = self.forest[v]?;
            out.push(self.region.point(v));
            if out.len() > self.region.len() {
                return None;
            }
            cur = node.parent;
        }
        out.reverse();
        Some(out)
    }
}

/// Runs the coupling on `region` with one word per source (or a single shared word).
pub fn wierman_couple(
    region: &Region,
    sources: &[LatticePoint],
    words: &[WordGenerator],
    p: f64,
    rng: &mut RngStream,
    convention: SourceConvention,
) -> Result<CoupledPair> {
    check_probability(p)?;
    if p > 0.5 {
        return Err(domain(format!(
            "the coupling needs p <= 1/2 (got p = {p}); flip the colors (p -> 1 - p and complement the words) to cover p > 1/2"
        )));
    }
    if words.is_empty() || (words.len() != 1 && words.len() != sources.len()) {
        return Err(domain(format!("expected 1 or {} words, got {}", sources.len(), words.len())));
    }
    let n = region.len();
    let mut src: Vec<(usize, usize)> = Vec::with_capacity(sources.len());
    for (i, x) in sources.iter().enumerate() {
        let r = region.rank(x).ok_or_else(|| domain(format!("source {x} is outside {region:?}")))?;
        src.push((r, i));
    }
    src.sort_unstable();
    src.dedup_by_key(|s| s.0);
    let materialized: Vec<Word> = words.iter().map(|g| g.prefix(n + 1)).collect::<Result<_>>()?;
    let word_of = |i: usize| if materialized.len() == 1 { &materialized[0] } else { &materialized[i] };

    let mut omega = BitSet::new(n);
    let mut tilde = BitSet::new(n);
    let mut explored = BitSet::new(n);
    let mut forest: Vec<Option<ForestNode>> = vec![None; n];
    let mut frontier: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

    let draw = |rng: &mut RngStream, xi: bool| -> (bool, bool) {
        let u = rng.uniform();
        if u < p {
            (true, xi)
        } else if !xi && u < 2.0 * p {
            (false, true)
        } else {
            (false, false)
        }
    };

    for &(x, i) in &src {
        explored.insert(x);
        let grows = match convention {
            SourceConvention::ReadAtSource => {
                let (a, b) = draw(rng, word_of(i).get(0));
                omega.set(x, a);
                tilde.set(x, b);
                a
            }
            SourceConvention::SkipSource => {
                omega.set(x, rng.bernoulli(p));
                tilde.set(x, rng.bernoulli(p));
                true
            }
        };
        if grows {
            forest[x] = Some(ForestNode { parent: None, root: i, depth: 0 });
            for w in region.neighbor_ranks(x) {
                frontier.push(Reverse(w));
            }
        }
    }

    while let Some(Reverse(y2)) = frontier.pop() {
        if explored.get(y2) {
            continue;
        }
        let y = region
            .neighbor_ranks(y2)
            .into_iter()
            .filter(|&w| forest[w].is_some())
            .min()
            .expect("frontier vertices neighbor an explored tree vertex");
        let parent = forest[y].expect("tree vertex");
        let xi = word_of(parent.root).get(parent.depth + 1);
        let (a, b) = draw(rng, xi);
        explored.insert(y2);
        omega.set(y2, a);
        tilde.set(y2, b);
        if a {
            forest[y2] = Some(ForestNode { parent: Some(y), root: parent.root, depth: parent.depth + 1 });
            for w in region.neighbor_ranks(y2) {
                if !explored.get(w) {
                    frontier.push(Reverse(w));
                }
            }
        }
    }

    for r in 0..n {
        if !explored.get(r) {
            omega.set(r, rng.bernoulli(p));
            tilde.set(r, rng.bernoulli(p));
        }
    }

    let prov = Provenance { p, master_seed: rng.master_seed(), stream_id: rng.stream_id() };
    let words = if materialized.len() == 1 { vec![materialized[0].clone(); sources.len()] } else { materialized };
    Ok(CoupledPair {
        region: region.clone(),
        omega: Configuration::from_bits(region.clone(), omega)?.with_provenance(prov),
        omega_tilde: Configuration::from_bits(region.clone(), tilde)?.with_provenance(prov),
        sources: sources.to_vec(),
        words,
        forest,
        explored,
        convention,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingFailure {
    pub vertex: LatticePoint,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingVerdict {
    pub valid: bool,
    pub failure: Option<CouplingFailure>,
}

impl CouplingVerdict {
    fn fail(pair: &CoupledPair, r: usize, reason: impl Into<String>) -> Self {
        Self { valid: false, failure: Some(CouplingFailure { vertex: pair.region.point(r), reason: reason.into() }) }
    }
}

/// Independently re-checks the coupling's conclusion on `pair`.
///
/// The 1-cluster of the sources in `ω` is recomputed from scratch; each of its
/// vertices must carry a forest branch whose vertices are 1 in `ω` and whose
/// `ω̃` colors spell the root's word.
pub fn verify_coupling(pair: &CoupledPair) -> CouplingVerdict {
    let region = &pair.region;
    let skip = pair.convention == SourceConvention::SkipSource;
    let mut omega = pair.omega.clone();
    let mut is_source = BitSet::new(region.len());
    for x in &pair.sources {
        let Some(r) = region.rank(x) else {
            return CouplingVerdict {
                valid: false,
                failure: Some(CouplingFailure { vertex: x.clone(), reason: "source outside region".into() }),
            };
        };
        is_source.insert(r);
        if skip {
            omega.set(r, true);
        }
    }
    let cluster = match one_connected_mask(&omega, &pair.sources, region) {
        Ok(c) => c,
        Err(e) => {
            return CouplingVerdict {
                valid: false,
                failure: Some(CouplingFailure { vertex: pair.sources[0].clone(), reason: e.to_string() }),
            }
        }
    };
    for y in cluster.ones() {
        let Some(node) = pair.forest[y] else {
            return CouplingVerdict::fail(pair, y, "1-connected to a source but missing from the forest");
        };
        // Walk the branch to its root.
        let mut cur = y;
        let mut node = node;
        let mut steps = 0;
        loop {
            let root_free = skip && node.parent.is_none();
            if !root_free && !omega.get(cur) {
                return CouplingVerdict::fail(pair, cur, "forest vertex is closed in omega");
            }
            let word = &pair.words[node.root];
            let reads = !(skip && node.depth == 0);
            if reads && pair.omega_tilde.get(cur) != word.get(node.depth) {
                return CouplingVerdict::fail(
                    pair,
                    cur,
                    format!("omega-tilde does not read letter {} of the root's word", node.depth),
                );
            }
            match node.parent {
                None => {
                    if node.depth != 0 || !is_source.get(cur) || region.rank(&pair.sources[node.root]) != Some(cur) {
                        return CouplingVerdict::fail(
                            pair,
                            cur,
                            "branch ends at a vertex that is not its declared source",
                        );
                    }
                    break;
                }
                Some(par) => {
                    let Some(pn) = pair.forest[par] else {
                        return CouplingVerdict::fail(pair, cur, "parent is not in the forest");
                    };
                    if pn.depth + 1 != node.depth || pn.root != node.root {
                        return CouplingVerdict::fail(pair, cur, "depth or root is inconsistent with the parent");
                    }
                    if !region.point(par).is_adjacent(&region.point(cur)) {
                        return CouplingVerdict::fail(pair, cur, "parent is not a lattice neighbor");
                    }
                    cur = par;
                    node = pn;
                }
            }
            steps += 1;
            if steps > region.len() {
                return CouplingVerdict::fail(pair, y, "parent chain does not terminate");
            }
        }
    }
    for (r, node) in pair.forest.iter().enumerate() {
        if node.is_some() && !cluster.get(r) {
            return CouplingVerdict::fail(pair, r, "forest vertex is not 1-connected to the sources");
        }
    }
    CouplingVerdict { valid: true, failure: None }
}
