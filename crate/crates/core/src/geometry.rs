//! Finite regions of `Z^d`, the macroscopic oriented slab graph, and the
//! box/face decomposition that ties the two together.
//!
//! Every region is an axis-aligned product of half-open intervals `(lo, hi]`.
//! Points of a region are ranked with the first coordinate varying fastest:
//! `rank = sum_i (c_i - lo_i - 1) * stride_i` with `stride_0 = 1`. This rank
//! order is the global vertex order used for tie-breaking everywhere.

use crate::bits::BitSet;
use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

pub type Coords = SmallVec<[i64; 4]>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(pub Coords);

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Self {
        Self(Coords::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(smallvec::smallvec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1_distance(&self, other: &Self) -> u64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    pub fn is_adjacent(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.l1_distance(other) == 1
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for LatticePoint {
    type Err = Error;

    /// Parses `"x,y,z"`.
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|c| c.trim().parse::<i64>().map_err(|e| Error::Format(format!("bad coordinate {c:?}: {e}"))))
            .collect::<Result<Coords>>()?;
        Ok(Self(coords))
    }
}

/// Half-open integer interval `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    /// The closed range `[a, b]` written as `(a - 1, b]`.
    pub fn closed(a: i64, b: i64) -> Self {
        Self { lo: a - 1, hi: b }
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        self.lo < x && x <= self.hi
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.hi.abs_diff(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn first(&self) -> i64 {
        self.lo + 1
    }

    pub fn last(&self) -> i64 {
        self.hi
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }
}

/// Provenance tag of a region; it does not affect membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    Generic,
    /// `B_m(0) = [-m, m]^d`.
    Ball {
        m: i64,
    },
    /// A finite window `[-w, w]^2 x (0, hk] x (-k, k]^{d-3}` of the slab `S_h`.
    Slab {
        h: i64,
        k: i64,
        half_width: i64,
    },
    /// `Lambda_n = [-kn, kn]^2 x (0, hk] x (-k, k]^{d-3}`.
    Lambda {
        n: i64,
        h: i64,
        k: i64,
    },
    /// `B^u = k.u + (-k, k]^d`.
    MacroBox {
        u: MacroVertex,
        k: i64,
    },
    /// `F^u = k.u + {-k} x (-k, k]^{d-1}`.
    MacroFace {
        u: MacroVertex,
        k: i64,
    },
    /// `F^u ∪ B^u = k.u + [-k, k] x (-k, k]^{d-1}`.
    MacroCell {
        u: MacroVertex,
        k: i64,
    },
}

/// Anything that can answer lattice-point membership, including unbounded
/// domains such as the slab `S_h`.
pub trait Membership {
    fn dim(&self) -> usize;
    fn contains_coords(&self, coords: &[i64]) -> bool;
}

/// The (infinite) slab `S_h = Z^2 x (0, hk] x (-k, k]^{d-3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlabDomain {
    pub dim: usize,
    pub h: i64,
    pub k: i64,
}

impl Membership for SlabDomain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains_coords(&self, c: &[i64]) -> bool {
        c.len() == self.dim
            && Interval::new(0, self.h * self.k).contains(c[2])
            && c[3..].iter().all(|&x| Interval::new(-self.k, self.k).contains(x))
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    intervals: Vec<Interval>,
    kind: RegionKind,
    strides: Vec<u64>,
    volume: u64,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    intervals: Vec<(i64, i64)>,
    #[serde(default = "generic_kind")]
    kind: RegionKind,
}

fn generic_kind() -> RegionKind {
    RegionKind::Generic
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::with_kind(r.intervals.into_iter().map(|(lo, hi)| Interval::new(lo, hi)).collect(), r.kind)
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr { intervals: r.intervals.iter().map(|i| (i.lo, i.hi)).collect(), kind: r.kind }
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region{{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "({},{}]", iv.lo, iv.hi)?;
        }
        write!(f, " {:?}}}", self.kind)
    }
}

impl Membership for Region {
    fn dim(&self) -> usize {
        self.intervals.len()
    }

    fn contains_coords(&self, c: &[i64]) -> bool {
        c.len() == self.intervals.len() && self.intervals.iter().zip(c).all(|(iv, &x)| iv.contains(x))
    }
}

impl Region {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        Self::with_kind(intervals, RegionKind::Generic)
    }

    pub fn with_kind(intervals: Vec<Interval>, kind: RegionKind) -> Result<Self> {
        if intervals.len() < 2 {
            return Err(domain(format!("regions need dimension d >= 2, got {}", intervals.len())));
        }
        let mut strides = Vec::with_capacity(intervals.len());
        let mut volume: u64 = 1;
        for iv in &intervals {
            if iv.hi <= iv.lo {
                return Err(domain(format!("empty interval ({}, {}]", iv.lo, iv.hi)));
            }
            strides.push(volume);
            volume = volume.checked_mul(iv.len()).ok_or_else(|| domain("region volume does not fit in 64 bits"))?;
        }
        if volume > u32::MAX as u64 {
            return Err(domain(format!("region volume {volume} exceeds the 2^32 site limit of the bit-packed state")));
        }
        Ok(Self { intervals, kind, strides, volume })
    }

    /// Closed box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`.
    pub fn closed_box(bounds: &[(i64, i64)]) -> Result<Self> {
        Self::new(bounds.iter().map(|&(a, b)| Interval::closed(a, b)).collect())
    }

    /// `B_m(0) = [-m, m]^d`.
    pub fn ball(dim: usize, m: i64) -> Result<Self> {
        if m < 0 {
            return Err(domain("ball radius must be nonnegative"));
        }
        Self::with_kind(vec![Interval::closed(-m, m); dim], RegionKind::Ball { m })
    }

    /// `Lambda_n = [-kn, kn]^2 x (0, hk] x (-k, k]^{d-3}`.
    pub fn lambda(dim: usize, n: i64, h: i64, k: i64) -> Result<Self> {
        check_slab_params(dim, h, k)?;
        if n < 1 {
            return Err(domain("Lambda_n needs n >= 1"));
        }
        let mut iv = vec![Interval::closed(-k * n, k * n); 2];
        iv.push(Interval::new(0, h * k));
        iv.extend(std::iter::repeat_n(Interval::new(-k, k), dim - 3));
        Self::with_kind(iv, RegionKind::Lambda { n, h, k })
    }

    /// Finite window `[-w, w]^2 x (0, hk] x (-k, k]^{d-3}` of the slab `S_h`.
    pub fn slab_window(dim: usize, h: i64, k: i64, half_width: i64) -> Result<Self> {
        check_slab_params(dim, h, k)?;
        let mut iv = vec![Interval::closed(-half_width, half_width); 2];
        iv.push(Interval::new(0, h * k));
        iv.extend(std::iter::repeat_n(Interval::new(-k, k), dim - 3));
        Self::with_kind(iv, RegionKind::Slab { h, k, half_width })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    #[inline]
    pub fn volume(&self) -> u64 {
        self.volume
    }

    /// Volume as a `usize` index bound.
    #[inline]
    pub fn len(&self) -> usize {
        self.volume as usize
    }

    pub fn is_empty(&self) -> bool {
        self.volume == 0
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn strides(&self) -> &[u64] {
        &self.strides
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.contains_coords(p.coords())
    }

    pub fn rank(&self, p: &LatticePoint) -> Option<usize> {
        self.rank_coords(p.coords())
    }

    pub fn rank_coords(&self, c: &[i64]) -> Option<usize> {
        if !self.contains_coords(c) {
            return None;
        }
        let mut r = 0u64;
        for ((iv, &x), &s) in self.intervals.iter().zip(c).zip(&self.strides) {
            r += (x - iv.lo - 1) as u64 * s;
        }
        Some(r as usize)
    }

    pub fn point(&self, rank: usize) -> LatticePoint {
        debug_assert!(rank < self.len());
        let mut rest = rank as u64;
        let coords = self
            .intervals
            .iter()
            .map(|iv| {
                let len = iv.len();
                let c = iv.lo + 1 + (rest % len) as i64;
                rest /= len;
                c
            })
            .collect();
        LatticePoint(coords)
    }

    #[inline]
    pub fn coord(&self, rank: usize, axis: usize) -> i64 {
        let iv = &self.intervals[axis];
        iv.lo + 1 + ((rank as u64 / self.strides[axis]) % iv.len()) as i64
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.len()).map(move |r| self.point(r))
    }

    /// Neighbor ranks in the deterministic order: axis 0 minus, axis 0 plus,
    /// axis 1 minus, ...
    #[inline]
    pub fn neighbor_ranks(&self, rank: usize) -> SmallVec<[usize; 8]> {
        let mut out = SmallVec::new();
        for (axis, iv) in self.intervals.iter().enumerate() {
            let s = self.strides[axis] as usize;
            let c = (rank / s) as u64 % iv.len();
            if c > 0 {
                out.push(rank - s);
            }
            if c + 1 < iv.len() {
                out.push(rank + s);
            }
        }
        out
    }

    /// Lattice neighbors of `v` inside this region (L1 distance one).
    pub fn neighbors(&self, v: &LatticePoint) -> Result<Vec<LatticePoint>> {
        let r = self.rank(v).ok_or_else(|| domain(format!("point {v} is not in {self:?}")))?;
        Ok(self.neighbor_ranks(r).into_iter().map(|n| self.point(n)).collect())
    }

    pub fn is_subset_of(&self, other: &impl Membership) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        // Boxes are convex products, so checking the two extreme corners suffices
        // for box-shaped `other`; general membership needs a full scan.
        self.points().all(|p| other.contains_coords(p.coords()))
    }

    pub fn is_box_subset_of(&self, other: &Region) -> bool {
        self.dim() == other.dim()
            && self.intervals.iter().zip(&other.intervals).all(|(a, b)| b.lo <= a.lo && a.hi <= b.hi)
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        if self.dim() != other.dim() {
            return None;
        }
        let iv: Vec<Interval> = self.intervals.iter().zip(&other.intervals).map(|(a, b)| a.intersect(b)).collect();
        if iv.iter().any(Interval::is_empty) {
            return None;
        }
        Region::new(iv).ok()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.intersection(other).is_none()
    }

    /// Ranks (in `self`) of the points of `sub`, which must be contained in `self`.
    pub fn ranks_of(&self, sub: &Region) -> Result<Vec<usize>> {
        sub.points().map(|p| self.rank(&p).ok_or_else(|| domain(format!("{p} lies outside {self:?}")))).collect()
    }

    /// Bitset over `self` marking the points of `sub ∩ self`.
    pub fn mask_of(&self, sub: &Region) -> BitSet {
        let mut mask = BitSet::new(self.len());
        if let Some(common) = self.intersection(sub) {
            for p in common.points() {
                mask.insert(self.rank(&p).expect("intersection lies inside"));
            }
        }
        mask
    }

    /// Binary layout: `u32 dim`, then `dim` pairs of little-endian `i64 (lo, hi)`.
    pub fn write_binary(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for iv in &self.intervals {
            out.extend_from_slice(&iv.lo.to_le_bytes());
            out.extend_from_slice(&iv.hi.to_le_bytes());
        }
    }

    pub fn read_binary(bytes: &[u8]) -> Result<(Self, usize)> {
        let take = |at: usize, n: usize| -> Result<&[u8]> {
            bytes.get(at..at + n).ok_or_else(|| Error::Format("truncated region header".into()))
        };
        let dim = u32::from_le_bytes(take(0, 4)?.try_into().unwrap()) as usize;
        if !(2..=64).contains(&dim) {
            return Err(Error::Format(format!("implausible region dimension {dim}")));
        }
        let mut at = 4;
        let mut iv = Vec::with_capacity(dim);
        for _ in 0..dim {
            let lo = i64::from_le_bytes(take(at, 8)?.try_into().unwrap());
            let hi = i64::from_le_bytes(take(at + 8, 8)?.try_into().unwrap());
            iv.push(Interval::new(lo, hi));
            at += 16;
        }
        Ok((Region::new(iv)?, at))
    }
}

fn check_slab_params(dim: usize, h: i64, k: i64) -> Result<()> {
    if dim < 3 {
        return Err(domain("slab regions need d >= 3"));
    }
    if h < 1 || k < 1 {
        return Err(domain(format!("slab parameters need h >= 1 and k >= 1 (got h={h}, k={k})")));
    }
    Ok(())
}

/// `∂Λ = { x ∈ Λ : x ~ y for some y ∈ ambient \ Λ }`, returned in rank order of `lambda`.
pub fn inner_boundary(lambda: &Region, ambient: &impl Membership) -> Result<Vec<LatticePoint>> {
    Ok(inner_boundary_ranks(lambda, ambient)?.into_iter().map(|r| lambda.point(r)).collect())
}

pub fn inner_boundary_ranks(lambda: &Region, ambient: &impl Membership) -> Result<Vec<usize>> {
    if lambda.dim() != ambient.dim() {
        return Err(domain("region and ambient domain have different dimensions"));
    }
    let mut out = Vec::new();
    let mut probe: Coords = Coords::new();
    for r in 0..lambda.len() {
        let p = lambda.point(r);
        if !ambient.contains_coords(p.coords()) {
            return Err(domain(format!("region is not contained in the ambient domain ({p} is outside)")));
        }
        let mut hit = false;
        'axes: for axis in 0..p.dim() {
            for delta in [-1i64, 1] {
                probe.clear();
                probe.extend_from_slice(p.coords());
                probe[axis] += delta;
                if !lambda.contains_coords(&probe) && ambient.contains_coords(&probe) {
                    hit = true;
                    break 'axes;
                }
            }
        }
        if hit {
            out.push(r);
        }
    }
    Ok(out)
}

/// Bit-parallel neighborhood operations over a region's rank layout.
///
/// For axis `i`, moving to the minus neighbor is a shift by `-stride_i`, valid
/// only where coordinate `i` is not the first in its interval.
#[derive(Clone, Debug)]
pub struct Lattice {
    region: Region,
    has_minus: Vec<BitSet>,
    has_plus: Vec<BitSet>,
}

impl Lattice {
    pub fn new(region: Region) -> Self {
        let n = region.len();
        let mut has_minus = Vec::with_capacity(region.dim());
        let mut has_plus = Vec::with_capacity(region.dim());
        for axis in 0..region.dim() {
            let mut minus = BitSet::new(n);
            let mut plus = BitSet::new(n);
            let len = region.intervals()[axis].len();
            let s = region.strides()[axis] as usize;
            for r in 0..n {
                let c = (r / s) as u64 % len;
                if c > 0 {
                    minus.insert(r);
                }
                if c + 1 < len {
                    plus.insert(r);
                }
            }
            has_minus.push(minus);
            has_plus.push(plus);
        }
        Self { region, has_minus, has_plus }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `dst |= N(src)`, the set of lattice neighbors of `src` inside the region.
    pub fn dilate_into(&self, src: &BitSet, dst: &mut BitSet) {
        for axis in 0..self.region.dim() {
            let s = self.region.strides()[axis] as usize;
            // A point r receives from r - s (its minus neighbor) and from r + s.
            dst.or_shifted_up(src, s, &self.has_minus[axis]);
            dst.or_shifted_down(src, s, &self.has_plus[axis]);
        }
    }

    pub fn dilate(&self, src: &BitSet) -> BitSet {
        let mut out = BitSet::new(src.len());
        self.dilate_into(src, &mut out);
        out
    }
}

/// Vertex of the macroscopic oriented slab graph.
///
/// Field order gives the lexicographic vertex order (first coordinate most
/// significant) used by explorations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MacroVertex {
    pub v1: i64,
    pub v2: i64,
    pub v3: i64,
}

/// The four oriented edge directions `(2, ±1, ±1)`.
pub const MACRO_STEPS: [(i64, i64); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];

impl MacroVertex {
    pub const fn new(v1: i64, v2: i64, v3: i64) -> Self {
        Self { v1, v2, v3 }
    }

    /// Lattice part of the membership predicate (parities only).
    pub fn has_valid_parity(&self) -> bool {
        let half = self.v1.div_euclid(2);
        self.v1.rem_euclid(2) == 0 && (half + self.v2).rem_euclid(2) == 0 && (half + self.v3).rem_euclid(2) == 0
    }

    /// Full membership in the vertex set for slab height `h`.
    pub fn is_valid(&self, h: i64) -> bool {
        0 < self.v3 && self.v3 < h && self.has_valid_parity()
    }

    /// Out-neighbors `u + (2, ±1, ±1)` that stay inside `0 < v3 < h`, in
    /// lexicographic order.
    pub fn out_neighbors(&self, h: i64) -> Result<SmallVec<[MacroVertex; 4]>> {
        if !self.is_valid(h) {
            return Err(domain(format!("{self:?} is not a vertex of the slab graph with h={h}")));
        }
        Ok(self.out_neighbors_unchecked(h))
    }

    pub(crate) fn out_neighbors_unchecked(&self, h: i64) -> SmallVec<[MacroVertex; 4]> {
        MACRO_STEPS
            .iter()
            .map(|&(e2, e3)| MacroVertex::new(self.v1 + 2, self.v2 + e2, self.v3 + e3))
            .filter(|v| 0 < v.v3 && v.v3 < h)
            .collect()
    }

    pub fn in_neighbors(&self, h: i64) -> SmallVec<[MacroVertex; 4]> {
        MACRO_STEPS
            .iter()
            .map(|&(e2, e3)| MacroVertex::new(self.v1 - 2, self.v2 - e2, self.v3 - e3))
            .filter(|v| 0 < v.v3 && v.v3 < h)
            .collect()
    }

    /// `k.u` embedded in `Z^d` with trailing zeros.
    pub fn scaled(&self, k: i64, dim: usize) -> Coords {
        let mut c: Coords = smallvec::smallvec![0; dim];
        c[0] = k * self.v1;
        c[1] = k * self.v2;
        c[2] = k * self.v3;
        c
    }
}

fn check_macro(u: &MacroVertex, k: i64, dim: usize) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(domain(format!("the block scale k must be even and >= 2 (got {k})")));
    }
    if dim < 3 {
        return Err(domain("macro boxes need d >= 3"));
    }
    if !u.has_valid_parity() {
        return Err(domain(format!("{u:?} violates the macro vertex parity constraints")));
    }
    Ok(())
}

/// `B^u = k.u + (-k, k]^d`.
pub fn macro_box(u: &MacroVertex, k: i64, dim: usize) -> Result<Region> {
    check_macro(u, k, dim)?;
    let c = u.scaled(k, dim);
    Region::with_kind(c.iter().map(|&x| Interval::new(x - k, x + k)).collect(), RegionKind::MacroBox { u: *u, k })
}

/// `F^u = k.u + {-k} x (-k, k]^{d-1}`.
pub fn macro_face(u: &MacroVertex, k: i64, dim: usize) -> Result<Region> {
    check_macro(u, k, dim)?;
    let c = u.scaled(k, dim);
    let mut iv: Vec<Interval> = c.iter().map(|&x| Interval::new(x - k, x + k)).collect();
    iv[0] = Interval::new(c[0] - k - 1, c[0] - k);
    Region::with_kind(iv, RegionKind::MacroFace { u: *u, k })
}

/// `F^u ∪ B^u`, which is itself a box: `k.u + [-k, k] x (-k, k]^{d-1}`.
pub fn macro_cell(u: &MacroVertex, k: i64, dim: usize) -> Result<Region> {
    check_macro(u, k, dim)?;
    let c = u.scaled(k, dim);
    let mut iv: Vec<Interval> = c.iter().map(|&x| Interval::new(x - k, x + k)).collect();
    iv[0] = Interval::new(c[0] - k - 1, c[0] + k);
    Region::with_kind(iv, RegionKind::MacroCell { u: *u, k })
}

/// `C = |[-k, k]^d| = (2k + 1)^d`.
///
/// Note that a macro box has `(2k)^d` points; `C` is kept exactly as the
/// word-length budget constant and is deliberately not the box volume.
pub fn block_constant(k: i64, dim: usize) -> Result<u64> {
    let side = u64::try_from(2 * k + 1).map_err(|_| domain("k must be positive"))?;
    (0..dim).try_fold(1u64, |acc, _| acc.checked_mul(side)).ok_or_else(|| domain("C = (2k+1)^d overflows 64 bits"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c)
    }

    #[test]
    fn rank_order_has_first_coordinate_fastest() {
        let r = Region::closed_box(&[(0, 1), (0, 1)]).unwrap();
        let pts: Vec<_> = r.points().collect();
        assert_eq!(pts, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[0, 1]), pt(&[1, 1])]);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(r.rank(p), Some(i));
        }
    }

    #[test]
    fn neighbor_counts() {
        let cube = Region::ball(3, 2).unwrap();
        assert_eq!(cube.neighbors(&pt(&[0, 0, 0])).unwrap().len(), 6);
        assert_eq!(cube.neighbors(&pt(&[2, 2, 2])).unwrap().len(), 3);
        // Lambda_1 with k=1, h=2: z-interval (0, 2]; (0,0,1) loses its z-1 neighbor.
        let lam = Region::lambda(3, 1, 2, 1).unwrap();
        let nb = lam.neighbors(&pt(&[0, 0, 1])).unwrap();
        assert_eq!(nb.len(), 5);
        assert!(!nb.contains(&pt(&[0, 0, 0])));
        assert!(cube.neighbors(&pt(&[3, 0, 0])).is_err());
    }

    #[test]
    fn neighbor_order_is_axis_then_minus_plus() {
        let cube = Region::ball(2, 1).unwrap();
        let nb = cube.neighbors(&pt(&[0, 0])).unwrap();
        assert_eq!(nb, vec![pt(&[-1, 0]), pt(&[1, 0]), pt(&[0, -1]), pt(&[0, 1])]);
    }

    #[test]
    fn lambda_boundary_in_slab() {
        let lam = Region::lambda(3, 1, 2, 1).unwrap();
        assert_eq!(lam.volume(), 18);
        let slab = SlabDomain { dim: 3, h: 2, k: 1 };
        let b = inner_boundary(&lam, &slab).unwrap();
        // Brute force: all 18 points except the two on the central column.
        let want: Vec<_> = lam.points().filter(|p| !(p.coords()[0] == 0 && p.coords()[1] == 0)).collect();
        assert_eq!(b.len(), 16);
        assert_eq!(b, want);
    }

    #[test]
    fn boundary_edge_cases() {
        let bx = Region::ball(3, 2).unwrap();
        assert!(inner_boundary(&bx, &bx).unwrap().is_empty());
        let single = Region::closed_box(&[(1, 1), (0, 0), (-1, -1)]).unwrap();
        assert_eq!(inner_boundary(&single, &bx).unwrap(), vec![pt(&[1, 0, -1])]);
        assert!(inner_boundary(&bx, &single).is_err());
    }

    #[test]
    fn macro_out_neighbors_examples() {
        let u = MacroVertex::new(0, 0, 2);
        let mut got: Vec<_> = u.out_neighbors(4).unwrap().to_vec();
        got.sort();
        let mut want = vec![
            MacroVertex::new(2, 1, 1),
            MacroVertex::new(2, 1, 3),
            MacroVertex::new(2, -1, 1),
            MacroVertex::new(2, -1, 3),
        ];
        want.sort();
        assert_eq!(got, want);
        let clipped: Vec<_> = u.out_neighbors(3).unwrap().to_vec();
        assert_eq!(clipped, vec![MacroVertex::new(2, -1, 1), MacroVertex::new(2, 1, 1)]);
        assert!(MacroVertex::new(1, 0, 2).out_neighbors(4).is_err());
        assert!(MacroVertex::new(0, 1, 2).out_neighbors(4).is_err());
    }

    #[test]
    fn macro_box_and_face() {
        let u = MacroVertex::new(0, 0, 2);
        let b = macro_box(&u, 2, 3).unwrap();
        assert_eq!(b.intervals(), &[Interval::new(-2, 2), Interval::new(-2, 2), Interval::new(2, 6)]);
        let f = macro_face(&u, 2, 3).unwrap();
        assert_eq!(f.intervals()[0], Interval::new(-3, -2));
        assert!(f.is_disjoint(&b));
        assert_eq!(b.volume(), 64);
        assert_eq!(f.volume(), 16);
        assert_eq!(block_constant(2, 3).unwrap(), 125);
        for v in u.out_neighbors(4).unwrap() {
            assert!(macro_box(&v, 2, 3).unwrap().is_disjoint(&b));
        }
        assert!(macro_box(&u, 3, 3).is_err());
        let cell = macro_cell(&u, 2, 3).unwrap();
        assert_eq!(cell.volume(), b.volume() + f.volume());
    }

    #[test]
    fn lattice_dilation_matches_neighbor_lists() {
        let r = Region::closed_box(&[(0, 4), (0, 3), (0, 2)]).unwrap();
        let lat = Lattice::new(r.clone());
        let src = BitSet::from_indices(r.len(), [0, 7, 23, 59]);
        let got = lat.dilate(&src);
        let mut want = BitSet::new(r.len());
        for s in src.ones() {
            for n in r.neighbor_ranks(s) {
                want.insert(n);
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn region_binary_roundtrip() {
        let r = Region::lambda(4, 2, 3, 2).unwrap();
        let mut buf = Vec::new();
        r.write_binary(&mut buf);
        let (back, used) = Region::read_binary(&buf).unwrap();
        assert_eq!(used, buf.len());
        assert_eq!(back.intervals(), r.intervals());
    }

    fn arb_vertex() -> impl Strategy<Value = (MacroVertex, i64)> {
        (-20i64..20, -20i64..20, 1i64..12, 2i64..14).prop_filter_map("valid vertex", |(a, b, c, h)| {
            let v = MacroVertex::new(2 * a, b, c);
            v.is_valid(h).then_some((v, h))
        })
    }

    proptest! {
        #[test]
        fn macro_degree_and_edge_shape((u, h) in arb_vertex()) {
            let out = u.out_neighbors(h).unwrap();
            prop_assert!([0usize, 2, 4].contains(&out.len()));
            for v in &out {
                prop_assert!(v.is_valid(h));
                prop_assert_eq!(v.v1, u.v1 + 2);
                prop_assert_ne!(v.v3.rem_euclid(2), u.v3.rem_euclid(2));
                prop_assert!(v.in_neighbors(h).contains(&u));
            }
        }

        #[test]
        fn boxes_of_distinct_vertices_are_disjoint((u, h) in arb_vertex(), dx in -2i64..=2, dy in -3i64..=3, dz in -3i64..=3) {
            let v = MacroVertex::new(u.v1 + 2 * dx, u.v2 + dy, u.v3 + dz);
            prop_assume!(v != u && v.has_valid_parity());
            let _ = h;
            let bu = macro_box(&u, 2, 3).unwrap();
            let bv = macro_box(&v, 2, 3).unwrap();
            prop_assert!(bu.is_disjoint(&bv));
            prop_assert!(macro_face(&u, 2, 3).unwrap().is_disjoint(&bu));
        }

        #[test]
        fn neighbor_relation_is_symmetric(a in 0usize..60, b in 0usize..60) {
            let r = Region::closed_box(&[(0, 4), (-1, 1), (0, 3)]).unwrap();
            let (pa, pb) = (r.point(a), r.point(b));
            let na = r.neighbors(&pa).unwrap();
            let nb = r.neighbors(&pb).unwrap();
            prop_assert_eq!(na.contains(&pb), nb.contains(&pa));
            prop_assert_eq!(na.contains(&pb), pa.is_adjacent(&pb));
        }

        #[test]
        fn boundary_matches_brute_force(w in 1i64..5, hh in 1i64..4, lo in -3i64..0) {
            let lam = Region::closed_box(&[(lo, lo + w), (0, hh), (-1, 0)]).unwrap();
            let amb = Region::closed_box(&[(-4, 5), (0, 6), (-1, 1)]).unwrap();
            let got = inner_boundary(&lam, &amb).unwrap();
            let want: Vec<_> = lam.points().filter(|p| {
                amb.points().any(|q| !lam.contains(&q) && q.is_adjacent(p))
            }).collect();
            prop_assert_eq!(got, want);
        }
    }
}
