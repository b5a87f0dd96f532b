//! Finite binary words and deterministic generators of infinite words.

use crate::error::{capacity, domain, Error, Result};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

/// Longest prefix a generator will materialize.
pub const MAX_WORD_LEN: usize = 1 << 24;

/// Longest word length accepted by exhaustive enumeration.
pub const MAX_ENUM_LEN: usize = 24;

/// A finite word over `{0, 1}`, bit-packed LSB-first.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl Word {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut w = Self::new();
        for b in bits {
            w.push(b);
        }
        w
    }

    pub fn constant(bit: bool, len: usize) -> Self {
        Self::from_bits(std::iter::repeat_n(bit, len))
    }

    /// The word whose bits are the `len` low bits of `value`, most significant first.
    /// Words of equal length built this way sort like their integer values.
    pub fn from_index(value: u64, len: usize) -> Self {
        Self::from_bits((0..len).rev().map(|i| (value >> i) & 1 == 1))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len >> 6] |= 1 << (self.len & 63);
        }
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// `(ξ_i, ..., ξ_j)`, inclusive on both ends.
    pub fn subword(&self, i: usize, j: usize) -> Result<Word> {
        if i > j || j >= self.len {
            return Err(domain(format!("subword [{i}, {j}] out of range for a word of length {}", self.len)));
        }
        Ok(Self::from_bits((i..=j).map(|t| self.get(t))))
    }

    pub fn prefix(&self, n: usize) -> Word {
        Self::from_bits((0..n.min(self.len)).map(|t| self.get(t)))
    }

    pub fn complement(&self) -> Word {
        Self::from_bits(self.iter().map(|b| !b))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.len <= other.len && (0..self.len).all(|i| self.get(i) == other.get(i))
    }

    /// Lengths of the maximal runs of equal bits, in order.
    pub fn run_lengths(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < self.len {
            let b = self.get(i);
            let start = i;
            while i < self.len && self.get(i) == b {
                i += 1;
            }
            runs.push(i - start);
        }
        runs
    }
}

/// Lexicographic order on letters; a proper prefix sorts first.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Format(format!("word literals use only '0' and '1', found {c:?}"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(Word::from_bits)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All `2^len` words of length `len` in lexicographic order.
pub fn enumerate_words(len: usize) -> Result<impl Iterator<Item = Word>> {
    if len > MAX_ENUM_LEN {
        return Err(capacity(format!(
            "enumerating words of length {len} would produce 2^{len} words; the limit is length {MAX_ENUM_LEN}"
        )));
    }
    Ok((0..1u64 << len).map(move |v| Word::from_index(v, len)))
}

/// A deterministic infinite word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorSpec", into = "GeneratorSpec")]
pub enum WordGenerator {
    Constant(bool),
    /// `1, 0, 1, 0, ...`
    Alternating,
    Periodic(Word),
    /// Every maximal run has length `M + G` with `G` geometric on `{0, 1, ...}` with
    /// parameter 1/2; the first bit is a fair coin.
    MinRun {
        m: usize,
        seed: u64,
    },
    /// I.i.d. bits, 1 with probability `q`.
    Product {
        q: f64,
        seed: u64,
    },
    /// A finite prefix followed by another generator's word.
    Explicit {
        prefix: Word,
        tail: Box<WordGenerator>,
    },
}

/// JSON form of a generator: `{"kind": ..., "params": {...}, "seed": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl TryFrom<GeneratorSpec> for WordGenerator {
    type Error = Error;

    fn try_from(spec: GeneratorSpec) -> Result<Self> {
        let p = &spec.params;
        let field = |name: &str| {
            p.get(name).ok_or_else(|| Error::Format(format!("generator {:?} needs params.{name}", spec.kind)))
        };
        let gen = match spec.kind.as_str() {
            "constant" => {
                let b = field("bit")?.as_u64().ok_or_else(|| Error::Format("params.bit must be 0 or 1".into()))?;
                if b > 1 {
                    return Err(domain("params.bit must be 0 or 1"));
                }
                WordGenerator::Constant(b == 1)
            }
            "alternating" => WordGenerator::Alternating,
            "periodic" => WordGenerator::Periodic(
                field("pattern")?
                    .as_str()
                    .ok_or_else(|| Error::Format("params.pattern must be a string".into()))?
                    .parse()?,
            ),
            "min_run" => WordGenerator::MinRun {
                m: field("m")?.as_u64().ok_or_else(|| Error::Format("params.m must be an integer".into()))? as usize,
                seed: spec.seed,
            },
            "product" => WordGenerator::Product {
                q: field("q")?.as_f64().ok_or_else(|| Error::Format("params.q must be a number".into()))?,
                seed: spec.seed,
            },
            "explicit" => {
                let prefix = field("prefix")?
                    .as_str()
                    .ok_or_else(|| Error::Format("params.prefix must be a string".into()))?
                    .parse()?;
                let tail = match p.get("tail") {
                    Some(t) => serde_json::from_value::<WordGenerator>(t.clone())?,
                    None => WordGenerator::Constant(false),
                };
                WordGenerator::Explicit { prefix, tail: Box::new(tail) }
            }
            other => return Err(Error::Format(format!("unknown generator kind {other:?}"))),
        };
        gen.validate()?;
        Ok(gen)
    }
}

impl From<WordGenerator> for GeneratorSpec {
    fn from(g: WordGenerator) -> Self {
        use serde_json::json;
        let (kind, params, seed) = match g {
            WordGenerator::Constant(b) => ("constant", json!({ "bit": b as u8 }), 0),
            WordGenerator::Alternating => ("alternating", serde_json::Value::Null, 0),
            WordGenerator::Periodic(w) => ("periodic", json!({ "pattern": w.to_string() }), 0),
            WordGenerator::MinRun { m, seed } => ("min_run", json!({ "m": m }), seed),
            WordGenerator::Product { q, seed } => ("product", json!({ "q": q }), seed),
            WordGenerator::Explicit { prefix, tail } => {
                let tail = serde_json::to_value(*tail).expect("generators always serialize");
                ("explicit", json!({ "prefix": prefix.to_string(), "tail": tail }), 0)
            }
        };
        GeneratorSpec { kind: kind.into(), params, seed }
    }
}

impl WordGenerator {
    pub fn validate(&self) -> Result<()> {
        match self {
            WordGenerator::Periodic(w) if w.is_empty() => Err(domain("periodic pattern must be nonempty")),
            WordGenerator::MinRun { m, .. } if *m == 0 => Err(domain("min_run needs M >= 1")),
            WordGenerator::Product { q, .. } if !(0.0..=1.0).contains(q) => {
                Err(domain(format!("product measure parameter q={q} is outside [0, 1]")))
            }
            WordGenerator::Explicit { tail, .. } => tail.validate(),
            _ => Ok(()),
        }
    }

    /// Parses the CLI shorthand: `one`, `zero`, `alt`, `periodic:0110`, `minrun:3`,
    /// `product:0.3`, or a literal such as `10110` (followed by zeros).
    /// Randomized generators take `seed`.
    pub fn parse_shorthand(s: &str, seed: u64) -> Result<Self> {
        let gen = match s.split_once(':') {
            None => match s {
                "one" | "ones" | "1*" => WordGenerator::Constant(true),
                "zero" | "zeros" | "0*" => WordGenerator::Constant(false),
                "alt" | "alternating" => WordGenerator::Alternating,
                lit => WordGenerator::Explicit { prefix: lit.parse()?, tail: Box::new(WordGenerator::Constant(false)) },
            },
            Some(("periodic", pat)) => WordGenerator::Periodic(pat.parse()?),
            Some(("minrun", m)) => WordGenerator::MinRun {
                m: m.parse().map_err(|e| Error::Format(format!("bad run length {m:?}: {e}")))?,
                seed,
            },
            Some(("product", q)) => {
                WordGenerator::Product { q: q.parse().map_err(|e| Error::Format(format!("bad q {q:?}: {e}")))?, seed }
            }
            Some((kind, _)) => return Err(Error::Format(format!("unknown word generator {kind:?}"))),
        };
        gen.validate()?;
        Ok(gen)
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        self.validate()?;
        if n > MAX_WORD_LEN {
            return Err(capacity(format!("word prefix of length {n} exceeds the limit {MAX_WORD_LEN}")));
        }
        let mut out = Word::new();
        self.fill(&mut out, n);
        Ok(out)
    }

    fn fill(&self, out: &mut Word, n: usize) {
        match self {
            WordGenerator::Constant(b) => (0..n).for_each(|_| out.push(*b)),
            WordGenerator::Alternating => (0..n).for_each(|i| out.push(i % 2 == 0)),
            WordGenerator::Periodic(w) => (0..n).for_each(|i| out.push(w.get(i % w.len()))),
            WordGenerator::MinRun { m, seed } => {
                let mut rng = RngStream::new(*seed, 0);
                let mut bit = rng.bernoulli(0.5);
                let mut written = 0;
                while written < n {
                    let mut run = *m;
                    while rng.bernoulli(0.5) {
                        run += 1;
                    }
                    for _ in 0..run.min(n - written) {
                        out.push(bit);
                    }
                    written += run.min(n - written);
                    bit = !bit;
                }
            }
            WordGenerator::Product { q, seed } => {
                let mut rng = RngStream::new(*seed, 0);
                (0..n).for_each(|_| out.push(rng.bernoulli(*q)));
            }
            WordGenerator::Explicit { prefix, tail } => {
                let head = n.min(prefix.len());
                (0..head).for_each(|i| out.push(prefix.get(i)));
                tail.fill(out, n - head);
            }
        }
    }

    /// `(ξ_i, ..., ξ_j)` of the infinite word.
    pub fn subword(&self, i: usize, j: usize) -> Result<Word> {
        if i > j {
            return Err(domain(format!("subword [{i}, {j}] has i > j")));
        }
        self.prefix(j + 1)?.subword(i, j)
    }
}

/// Draws the length-`len` prefix of `gen`.
pub fn sample_word(gen: &WordGenerator, len: usize) -> Result<Word> {
    gen.prefix(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn subword_examples() {
        let xi = w("01101110");
        assert_eq!(xi.subword(0, 7).unwrap(), xi);
        assert_eq!(xi.subword(1, 3).unwrap(), w("110"));
        assert_eq!(xi.subword(0, 0).unwrap(), w("0"));
        assert!(xi.subword(3, 2).is_err());
        assert!(xi.subword(0, 8).is_err());
        assert_eq!(WordGenerator::Alternating.subword(1, 3).unwrap(), w("010"));
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        assert_eq!(enumerate_words(0).unwrap().collect::<Vec<_>>(), vec![Word::new()]);
        let two: Vec<_> = enumerate_words(2).unwrap().collect();
        assert_eq!(two, vec![w("00"), w("01"), w("10"), w("11")]);
        let ten: std::collections::BTreeSet<_> = enumerate_words(10).unwrap().collect();
        assert_eq!(ten.len(), 1024);
        assert!(matches!(enumerate_words(25), Err(Error::Capacity(_))));
    }

    #[test]
    fn generator_examples() {
        assert_eq!(WordGenerator::Constant(true).prefix(5).unwrap(), w("11111"));
        assert_eq!(WordGenerator::Product { q: 1.0, seed: 9 }.prefix(4).unwrap(), w("1111"));
        assert_eq!(WordGenerator::Alternating.prefix(5).unwrap(), w("10101"));
        assert_eq!(WordGenerator::Periodic(w("011")).prefix(7).unwrap(), w("0110110"));
        let ex = WordGenerator::parse_shorthand("101", 0).unwrap();
        assert_eq!(ex.prefix(5).unwrap(), w("10100"));
        assert!(WordGenerator::MinRun { m: 0, seed: 0 }.prefix(3).is_err());
        assert!(WordGenerator::Product { q: 1.5, seed: 0 }.prefix(3).is_err());
    }

    #[test]
    fn min_run_interior_runs_are_long() {
        for seed in 0..200 {
            for m in 1..5 {
                let word = WordGenerator::MinRun { m, seed }.prefix(9 + seed as usize % 40).unwrap();
                let runs = word.run_lengths();
                assert!(runs[..runs.len() - 1].iter().all(|&r| r >= m), "seed {seed}: {word}");
            }
        }
    }

    #[test]
    fn product_mean_within_four_sigma() {
        let q = 0.3;
        let n = 100_000;
        let word = WordGenerator::Product { q, seed: 11 }.prefix(n).unwrap();
        let mean = word.count_ones() as f64 / n as f64;
        let sigma = (q * (1.0 - q) / n as f64).sqrt();
        assert!((mean - q).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn json_roundtrip() {
        let gens = vec![
            WordGenerator::Constant(true),
            WordGenerator::Alternating,
            WordGenerator::Periodic(w("0110")),
            WordGenerator::MinRun { m: 3, seed: 5 },
            WordGenerator::Product { q: 0.25, seed: 6 },
            WordGenerator::Explicit { prefix: w("11"), tail: Box::new(WordGenerator::Alternating) },
        ];
        for g in gens {
            let s = serde_json::to_string(&g).unwrap();
            let back: WordGenerator = serde_json::from_str(&s).unwrap();
            assert_eq!(back, g, "{s}");
        }
        let parsed: WordGenerator = serde_json::from_str(r#"{"kind":"min_run","params":{"m":2},"seed":4}"#).unwrap();
        assert_eq!(parsed, WordGenerator::MinRun { m: 2, seed: 4 });
    }

    fn arb_generator() -> impl Strategy<Value = WordGenerator> {
        prop_oneof![
            any::<bool>().prop_map(WordGenerator::Constant),
            Just(WordGenerator::Alternating),
            "[01]{1,6}".prop_map(|s| WordGenerator::Periodic(s.parse().unwrap())),
            (1usize..5, any::<u64>()).prop_map(|(m, seed)| WordGenerator::MinRun { m, seed }),
            (0.0f64..=1.0, any::<u64>()).prop_map(|(q, seed)| WordGenerator::Product { q, seed }),
        ]
    }

    proptest! {
        #[test]
        fn prefixes_are_consistent(g in arb_generator(), n in 0usize..200) {
            let a = g.prefix(n).unwrap();
            let b = g.prefix(n + 1).unwrap();
            prop_assert_eq!(a.len(), n);
            prop_assert!(a.is_prefix_of(&b));
        }

        #[test]
        fn literal_roundtrip(s in "[01]{0,150}") {
            let word: Word = s.parse().unwrap();
            prop_assert_eq!(word.len(), s.len());
            prop_assert_eq!(word.to_string(), s);
            prop_assert_eq!(word.complement().complement(), word);
        }
    }
}
