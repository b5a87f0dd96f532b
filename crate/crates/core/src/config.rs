//! Site percolation configurations on finite regions.
//!
//! File format (all integers little-endian):
//!
//! ```text
//! "WPC1"  u32 version = 1
//! u32 dim, then dim pairs of i64 (lo, hi)
//! f64 p (NaN when the configuration was not sampled)
//! u64 master_seed, u64 stream_id
//! ceil(volume / 64) u64 words, bit i = site of rank i
//! ```

use crate::bits::BitSet;
use crate::error::{capacity, domain, Error, Result};
use crate::geometry::{LatticePoint, Region};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"WPC1";
pub const FORMAT_VERSION: u32 = 1;

/// Largest region accepted by [`enumerate_configs`].
pub const MAX_ENUM_SITES: u64 = 25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub p: f64,
    pub master_seed: u64,
    pub stream_id: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    region: Region,
    bits: BitSet,
    provenance: Option<Provenance>,
}

impl Configuration {
    pub fn from_bits(region: Region, bits: BitSet) -> Result<Self> {
        if bits.len() != region.len() {
            return Err(domain(format!("{} bits given for a region of {} sites", bits.len(), region.len())));
        }
        Ok(Self { region, bits, provenance: None })
    }

    pub fn constant(region: Region, bit: bool) -> Self {
        let bits = if bit { BitSet::full(region.len()) } else { BitSet::new(region.len()) };
        Self { region, bits, provenance: None }
    }

    pub fn from_fn(region: Region, mut f: impl FnMut(&LatticePoint) -> bool) -> Self {
        let mut bits = BitSet::new(region.len());
        for (r, p) in region.points().enumerate() {
            bits.set(r, f(&p));
        }
        Self { region, bits, provenance: None }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    #[inline]
    pub fn get(&self, rank: usize) -> bool {
        self.bits.get(rank)
    }

    pub fn color(&self, p: &LatticePoint) -> Option<bool> {
        self.region.rank(p).map(|r| self.bits.get(r))
    }

    pub fn set(&mut self, rank: usize, bit: bool) {
        self.bits.set(rank, bit);
        self.provenance = None;
    }

    /// Ranks of color `bit`.
    pub fn color_mask(&self, bit: bool) -> BitSet {
        if bit {
            self.bits.clone()
        } else {
            self.bits.complement()
        }
    }

    /// Restriction to a sub-box, keeping provenance.
    pub fn restrict(&self, sub: &Region) -> Result<Configuration> {
        if !sub.is_box_subset_of(&self.region) {
            return Err(domain(format!("{sub:?} is not inside {:?}", self.region)));
        }
        let mut bits = BitSet::new(sub.len());
        for (r, p) in sub.points().enumerate() {
            bits.set(r, self.bits.get(self.region.rank(&p).expect("sub-box point")));
        }
        Ok(Self { region: sub.clone(), bits, provenance: self.provenance })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + self.bits.words().len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        self.region.write_binary(&mut out);
        let (p, seed, stream) = match self.provenance {
            Some(pv) => (pv.p, pv.master_seed, pv.stream_id),
            None => (f64::NAN, 0, 0),
        };
        out.extend_from_slice(&p.to_le_bytes());
        out.extend_from_slice(&seed.to_le_bytes());
        out.extend_from_slice(&stream.to_le_bytes());
        for w in self.bits.words() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Format("not a configuration file (missing WPC1 magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported configuration format version {version}")));
        }
        let (region, used) = Region::read_binary(&bytes[8..])?;
        let mut at = 8 + used;
        let mut next8 = || -> Result<[u8; 8]> {
            let chunk = bytes.get(at..at + 8).ok_or_else(|| Error::Format("truncated configuration file".into()))?;
            at += 8;
            Ok(chunk.try_into().unwrap())
        };
        let p = f64::from_le_bytes(next8()?);
        let master_seed = u64::from_le_bytes(next8()?);
        let stream_id = u64::from_le_bytes(next8()?);
        let nwords = region.len().div_ceil(64);
        let words = (0..nwords).map(|_| next8().map(u64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
        if at != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes after configuration data", bytes.len() - at)));
        }
        let bits = BitSet::from_words(region.len(), words);
        let provenance = (!p.is_nan()).then_some(Provenance { p, master_seed, stream_id });
        Ok(Self { region, bits, provenance })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Samples `P_p` on `region`, one uniform per site in rank order.
pub fn sample(region: &Region, p: f64, rng: &mut RngStream) -> Result<Configuration> {
    check_probability(p)?;
    let mut bits = BitSet::new(region.len());
    for r in 0..region.len() {
        if rng.bernoulli(p) {
            bits.insert(r);
        }
    }
    Ok(Configuration {
        region: region.clone(),
        bits,
        provenance: Some(Provenance { p, master_seed: rng.master_seed(), stream_id: rng.stream_id() }),
    })
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("probability {p} is outside [0, 1]")))
    }
}

/// All `2^|region|` configurations; the `i`-th has bit `r` equal to bit `r` of `i`.
pub fn enumerate_configs(region: &Region) -> Result<impl Iterator<Item = Configuration> + '_> {
    if region.volume() > MAX_ENUM_SITES {
        return Err(capacity(format!(
            "enumerating a region of {} sites would produce 2^{} configurations; the limit is {MAX_ENUM_SITES} sites",
            region.volume(),
            region.volume()
        )));
    }
    Ok((0..1u64 << region.volume()).map(move |i| Configuration {
        region: region.clone(),
        bits: BitSet::from_words(region.len(), vec![i]),
        provenance: None,
    }))
}

/// Complements every site.
pub fn flip_colors(cfg: &Configuration) -> Configuration {
    Configuration {
        region: cfg.region.clone(),
        bits: cfg.bits.complement(),
        provenance: cfg.provenance.map(|pv| Provenance { p: 1.0 - pv.p, ..pv }),
    }
}
