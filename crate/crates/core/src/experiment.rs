//! Experiment specifications, Monte Carlo runs and result files.
//!
//! A spec is a JSON object with a `kind` tag, the kind-specific parameters,
//! `trials`, `seed` and an optional `output` path. Trial `t` draws from stream
//! `(seed, t)`, so the aggregate is a function of the spec alone.

use crate::config::{check_probability, sample, Configuration};
use crate::error::{capacity, Error, Result};
use crate::geometry::{macro_cell, macro_face, LatticePoint, MacroVertex, Region};
use crate::oriented::{crossing_stat, domination_probe, CrossingParams, DominationParams};
use crate::reach::{sees_all_words, word_reach, ReachOptions, SearchMode, SourceSet};
use crate::renorm::{event_emn, exploration_window, good_event, left_faces, macro_exploration, RenormParams, SeedSet};
use crate::rng::RngStream;
use crate::stats::{count_successes, linear_fit, par_trials, Estimate};
use crate::wierman::{verify_coupling, wierman_couple, SourceConvention};
use crate::word::{Word, WordGenerator};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const RESULT_SCHEMA: &str = "wordperc-result/1";

/// Longest word enumerated by the all-words and decay experiments.
pub const MAX_ALLWORDS_LEN: usize = 12;
/// Largest horizon radius for the all-words and decay experiments.
pub const MAX_HORIZON: i64 = 64;
/// Largest number of sites sampled per trial.
pub const MAX_TRIAL_SITES: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Experiment {
    Reach(ReachSpec),
    Allwords(AllWordsSpec),
    Wierman(WiermanSpec),
    Oriented(OrientedSpec),
    Renorm(RenormSpec),
    Decay(DecaySpec),
}

/// A word given either as CLI shorthand (`"alt"`, `"10"`, `"minrun:3"`) or as
/// a generator object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordArg {
    Shorthand(String),
    Generator(WordGenerator),
}

impl WordArg {
    pub fn generator(&self, seed: u64) -> Result<WordGenerator> {
        match self {
            WordArg::Shorthand(s) => WordGenerator::parse_shorthand(s, seed),
            WordArg::Generator(g) => {
                g.validate()?;
                Ok(g.clone())
            }
        }
    }
}

/// Event: the first `len` letters of `word` are read from `from` inside `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachSpec {
    pub region: Vec<(i64, i64)>,
    pub from: Vec<i64>,
    pub p: f64,
    pub word: WordArg,
    pub len: usize,
    #[serde(default)]
    pub mode: SearchMode,
}

/// Event: every word of length `len` is read from `B_m` within `B_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllWordsSpec {
    pub d: usize,
    pub p: f64,
    pub len: usize,
    pub m: i64,
    pub r: i64,
    #[serde(default)]
    pub mode: SearchMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiermanSpec {
    pub region: Vec<(i64, i64)>,
    pub sources: Vec<Vec<i64>>,
    pub p: f64,
    pub word: WordArg,
    #[serde(default)]
    pub convention: SourceConvention,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientedStat {
    Crossing,
    Domination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedSpec {
    pub stat: OrientedStat,
    pub n: i64,
    #[serde(default)]
    pub h: i64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default)]
    pub thin: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenormEvent {
    /// `G^u` from the full face `F^u` with offsets 0.
    Good,
    /// `E_m^n`.
    Emn,
    /// The macroscopic exploration of `B_n` from the full left side.
    Exploration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormSpec {
    pub event: RenormEvent,
    #[serde(flatten)]
    pub params: RenormParams,
    pub word: WordArg,
    /// Macro vertex for the good event; defaults to the lowest vertex near the bottom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<[i64; 3]>,
    #[serde(default)]
    pub m: i64,
    #[serde(default)]
    pub n: i64,
}

/// `q_m = P(not every word of length len is read from B_m within B_r)` for each `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    #[serde(default = "default_d")]
    pub d: usize,
    pub p: f64,
    pub len: usize,
    pub ms: Vec<i64>,
    pub r: i64,
    #[serde(default)]
    pub mode: SearchMode,
}

fn default_d() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    #[serde(flatten)]
    pub estimate: Estimate,
}

/// Least-squares fit of `log q_m` against `m^(d-1)` over the `m` with `q_m > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: String,
    pub spec: ExperimentSpec,
    pub estimates: Vec<NamedEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    #[serde(default)]
    pub details: Value,
    #[serde(default)]
    pub notes: Vec<String>,
    /// The only field that varies between runs of the same spec.
    pub timing: Timing,
}

impl ExperimentResult {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name).map(|e| &e.estimate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timing field zeroed; equal across re-runs of one spec.
    pub fn canonical_json(&self) -> Result<String> {
        let mut c = self.clone();
        c.timing = Timing::default();
        c.to_json()
    }

    /// Flat projection: one row per estimate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,m,successes,trials,point,wilson_lo,wilson_hi,stream_first,stream_last\n");
        for e in &self.estimates {
            let s = &e.estimate;
            let m = e.m.map(|m| m.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                e.name, m, s.successes, s.trials, s.point, s.wilson95.lo, s.wilson95.hi, s.seed_range.0, s.seed_range.1
            ));
        }
        out
    }

    /// Writes `<base>.json` and `<base>.csv`.
    pub fn write(&self, base: &Path) -> Result<(PathBuf, PathBuf)> {
        let json_path = base.with_extension("json");
        let csv_path = base.with_extension("csv");
        if let Some(dir) = json_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&json_path, self.to_json()? + "\n")?;
        std::fs::write(&csv_path, self.to_csv())?;
        Ok((json_path, csv_path))
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks every precondition and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.trials == 0 {
            errs.push("trials must be >= 1".to_string());
        }
        match &self.experiment {
            Experiment::Reach(s) => {
                prob(&mut errs, "p", s.p);
                let region = region_from(&mut errs, &s.region);
                if let Some(r) = &region {
                    if s.from.len() != r.dim() || !r.contains(&LatticePoint::new(&s.from)) {
                        errs.push(format!("from {:?} is not a point of the region", s.from));
                    }
                }
                if s.len == 0 {
                    errs.push("len must be >= 1".into());
                }
                word_ok(&mut errs, &s.word);
            }
            Experiment::Allwords(s) => {
                prob(&mut errs, "p", s.p);
                dim_ok(&mut errs, s.d);
                if s.m < 0 || s.m > s.r {
                    errs.push(format!("need 0 <= m <= r (got m={}, r={})", s.m, s.r));
                }
            }
            Experiment::Decay(s) => {
                prob(&mut errs, "p", s.p);
                dim_ok(&mut errs, s.d);
                if s.ms.is_empty() {
                    errs.push("ms must list at least one radius".into());
                }
                for &m in &s.ms {
                    if m < 0 || m > s.r {
                        errs.push(format!("radius m={m} is not in [0, r={}]", s.r));
                    }
                }
                if s.ms.windows(2).any(|w| w[0] >= w[1]) {
                    errs.push("ms must be strictly increasing".into());
                }
            }
            Experiment::Wierman(s) => {
                if !(0.0..=0.5).contains(&s.p) {
                    errs.push(format!("the coupling needs p in [0, 1/2] (got {})", s.p));
                }
                if let Some(r) = region_from(&mut errs, &s.region) {
                    if s.sources.is_empty() {
                        errs.push("at least one source is needed".into());
                    }
                    for x in &s.sources {
                        if x.len() != r.dim() || !r.contains(&LatticePoint::new(x)) {
                            errs.push(format!("source {x:?} is not a point of the region"));
                        }
                    }
                }
                word_ok(&mut errs, &s.word);
            }
            Experiment::Oriented(s) => {
                prob(&mut errs, "gamma", s.gamma);
                match s.stat {
                    OrientedStat::Crossing => {
                        if s.h < 2 {
                            errs.push(format!("crossing needs h >= 2 (got {})", s.h));
                        }
                        if s.n < 3 {
                            errs.push(format!("crossing needs n >= 3 (got {})", s.n));
                        }
                        if !(s.delta > 0.0 && s.delta <= 1.0) {
                            errs.push(format!("delta must lie in (0, 1] (got {})", s.delta));
                        }
                    }
                    OrientedStat::Domination => {
                        if s.n < 2 || s.n % 2 != 0 {
                            errs.push(format!("domination needs an even n >= 2 (got {})", s.n));
                        }
                        if !(s.delta > 0.0 && s.delta < 0.1) {
                            errs.push(format!("delta must lie in (0, 1/10) (got {})", s.delta));
                        }
                        if s.thin {
                            errs.push("thin windows apply to the crossing statistic only".into());
                        }
                    }
                }
            }
            Experiment::Renorm(s) => {
                if let Err(Error::Validation(v)) = s.params.validate() {
                    errs.extend(v);
                }
                word_ok(&mut errs, &s.word);
                match s.event {
                    RenormEvent::Good => {
                        if let Some(u) = s.u {
                            let v = MacroVertex::new(u[0], u[1], u[2]);
                            if !v.is_valid(s.params.h) || v.v1 < 0 {
                                errs.push(format!("u={u:?} is not a slab vertex with v1 >= 0 for h={}", s.params.h));
                            }
                        }
                    }
                    RenormEvent::Emn => {
                        if !(s.n >= s.m && s.m >= 1) {
                            errs.push(format!("E_m^n needs n >= m >= 1 (got m={}, n={})", s.m, s.n));
                        }
                    }
                    RenormEvent::Exploration => {
                        if s.n < 3 {
                            errs.push(format!("the exploration needs n >= 3 (got {})", s.n));
                        }
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Size guards, checked after validation.
    pub fn check_capacity(&self) -> Result<()> {
        let sites = |r: &Region| -> Result<()> {
            if r.volume() > MAX_TRIAL_SITES {
                return Err(capacity(format!(
                    "a trial would sample {} sites; the limit is {MAX_TRIAL_SITES}, shrink the region",
                    r.volume()
                )));
            }
            Ok(())
        };
        let allwords = |len: usize, r: i64| -> Result<()> {
            if len > MAX_ALLWORDS_LEN {
                return Err(capacity(format!("word length {len} exceeds {MAX_ALLWORDS_LEN}; use a shorter len")));
            }
            if r > MAX_HORIZON {
                return Err(capacity(format!("horizon radius {r} exceeds {MAX_HORIZON}; use a smaller r")));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::Reach(s) => sites(&Region::closed_box(&s.region)?),
            Experiment::Wierman(s) => sites(&Region::closed_box(&s.region)?),
            Experiment::Allwords(s) => {
                allwords(s.len, s.r)?;
                sites(&Region::ball(s.d, s.r)?)
            }
            Experiment::Decay(s) => {
                allwords(s.len, s.r)?;
                sites(&Region::ball(s.d, s.r)?)
            }
            Experiment::Renorm(s) => sites(&renorm_region(s)?),
            Experiment::Oriented(_) => Ok(()),
        }
    }
}

fn prob(errs: &mut Vec<String>, name: &str, p: f64) {
    if check_probability(p).is_err() {
        errs.push(format!("{name} must lie in [0, 1] (got {p})"));
    }
}

fn dim_ok(errs: &mut Vec<String>, d: usize) {
    if !(1..=8).contains(&d) {
        errs.push(format!("d must lie in 1..=8 (got {d})"));
    }
}

fn word_ok(errs: &mut Vec<String>, w: &WordArg) {
    if let Err(e) = w.generator(0) {
        errs.push(format!("word: {e}"));
    }
}

fn region_from(errs: &mut Vec<String>, bounds: &[(i64, i64)]) -> Option<Region> {
    if bounds.is_empty() || bounds.iter().any(|(a, b)| a > b) {
        errs.push(format!("region bounds {bounds:?} must be nonempty closed intervals"));
        return None;
    }
    match Region::closed_box(bounds) {
        Ok(r) => Some(r),
        Err(e) => {
            errs.push(format!("region: {e}"));
            None
        }
    }
}

fn good_vertex(s: &RenormSpec) -> MacroVertex {
    match s.u {
        Some(u) => MacroVertex::new(u[0], u[1], u[2]),
        None if s.params.h >= 3 => MacroVertex::new(0, 0, 2),
        None => MacroVertex::new(2, 1, 1),
    }
}

fn renorm_region(s: &RenormSpec) -> Result<Region> {
    let p = &s.params;
    match s.event {
        RenormEvent::Good => macro_cell(&good_vertex(s), p.k, p.d),
        RenormEvent::Emn => Region::lambda(p.d, s.n, p.h, p.k),
        RenormEvent::Exploration => exploration_window(s.n, p),
    }
}

/// Validates `spec`, runs its trials and collects the result.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    spec.check_capacity()?;
    let started = Instant::now();
    let mut out = Outcome::default();
    match &spec.experiment {
        Experiment::Reach(s) => run_reach(spec, s, &mut out)?,
        Experiment::Allwords(s) => run_allwords(spec, s, &mut out)?,
        Experiment::Wierman(s) => run_wierman(spec, s, &mut out)?,
        Experiment::Oriented(s) => run_oriented(spec, s, &mut out)?,
        Experiment::Renorm(s) => run_renorm(spec, s, &mut out)?,
        Experiment::Decay(s) => run_decay(spec, s, &mut out)?,
    }
    Ok(ExperimentResult {
        schema: RESULT_SCHEMA.into(),
        spec: spec.clone(),
        estimates: out.estimates,
        fit: out.fit,
        details: out.details,
        notes: out.notes,
        timing: Timing { wall_seconds: started.elapsed().as_secs_f64() },
    })
}

/// Runs `spec` and writes the result files when it names an output path.
pub fn run_and_write(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let res = run(spec)?;
    if let Some(base) = &spec.output {
        res.write(base)?;
    }
    Ok(res)
}

#[derive(Default)]
struct Outcome {
    estimates: Vec<NamedEstimate>,
    fit: Option<DecayFit>,
    details: Value,
    notes: Vec<String>,
}

impl Outcome {
    fn push(&mut self, name: &str, successes: u64, trials: u64) {
        self.estimates.push(NamedEstimate {
            name: name.into(),
            m: None,
            estimate: Estimate::new(successes, trials, 0),
        });
    }

    fn push_estimate(&mut self, name: &str, estimate: Estimate) {
        self.estimates.push(NamedEstimate { name: name.into(), m: None, estimate });
    }
}

fn relaxed_note(mode: SearchMode, out: &mut Outcome) {
    if mode == SearchMode::Relaxed {
        out.notes.push(
            "relaxed search allows revisiting sites, so 'read' is an upper bound on the self-avoiding event".into(),
        );
    }
}

fn run_reach(spec: &ExperimentSpec, s: &ReachSpec, out: &mut Outcome) -> Result<()> {
    let region = Region::closed_box(&s.region)?;
    let word = s.word.generator(spec.seed)?.prefix(s.len)?;
    let src = SourceSet::single(LatticePoint::new(&s.from), 0);
    let last = s.len - 1;
    let hits = count_successes(spec.trials, |t| {
        let cfg = sample(&region, s.p, &mut RngStream::new(spec.seed, t))?;
        let res = word_reach(s.mode, &cfg, &src, std::slice::from_ref(&word), &region, last, &ReachOptions::default())?;
        Ok(res.layers().get(last).is_some_and(|l| l.any()))
    })?;
    out.push("read", hits, spec.trials);
    out.details = json!({ "word": word.to_string() });
    relaxed_note(s.mode, out);
    Ok(())
}

fn run_allwords(spec: &ExperimentSpec, s: &AllWordsSpec, out: &mut Outcome) -> Result<()> {
    let horizon = Region::ball(s.d, s.r)?;
    let from = Region::ball(s.d, s.m)?;
    let hits = count_successes(spec.trials, |t| {
        let cfg = sample(&horizon, s.p, &mut RngStream::new(spec.seed, t))?;
        Ok(sees_all_words(&cfg, &from, s.len, &horizon, s.mode, &ReachOptions::default())?.all_seen)
    })?;
    out.push("all_seen", hits, spec.trials);
    relaxed_note(s.mode, out);
    Ok(())
}

/// Per-trial outcomes for every `m` on one shared configuration of `B_r`.
pub fn decay_outcomes(s: &DecaySpec, trials: u64, seed: u64) -> Result<Vec<Vec<bool>>> {
    let horizon = Region::ball(s.d, s.r)?;
    let balls: Vec<Region> = s.ms.iter().map(|&m| Region::ball(s.d, m)).collect::<Result<_>>()?;
    par_trials(trials, |t| {
        let cfg = sample(&horizon, s.p, &mut RngStream::new(seed, t))?;
        balls
            .iter()
            .map(|b| Ok(!sees_all_words(&cfg, b, s.len, &horizon, s.mode, &ReachOptions::default())?.all_seen))
            .collect()
    })
}

fn run_decay(spec: &ExperimentSpec, s: &DecaySpec, out: &mut Outcome) -> Result<()> {
    let outcomes = decay_outcomes(s, spec.trials, spec.seed)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &m) in s.ms.iter().enumerate() {
        let fails = outcomes.iter().filter(|o| o[i]).count() as u64;
        let est = Estimate::new(fails, spec.trials, 0);
        if est.point > 0.0 {
            xs.push((m as f64).powi(s.d as i32 - 1));
            ys.push(est.point.ln());
        }
        out.estimates.push(NamedEstimate { name: "q".into(), m: Some(m), estimate: est });
    }
    out.fit = linear_fit(&xs, &ys).map(|(slope, intercept, r2)| DecayFit {
        slope,
        intercept,
        r_squared: r2,
        points: xs.len(),
        note: if xs.len() < 3 {
            "fewer than three radii with q_m > 0; the slope is not informative".into()
        } else if r2 >= 0.95 {
            "log q_m is close to linear in m^(d-1)".into()
        } else {
            "log q_m deviates from a linear fit in m^(d-1)".into()
        },
    });
    if out.fit.is_none() {
        out.notes.push("no fit: fewer than two radii with q_m > 0".into());
    }
    relaxed_note(s.mode, out);
    Ok(())
}

fn run_wierman(spec: &ExperimentSpec, s: &WiermanSpec, out: &mut Outcome) -> Result<()> {
    let region = Region::closed_box(&s.region)?;
    let sources: Vec<LatticePoint> = s.sources.iter().map(|x| LatticePoint::new(x)).collect();
    let gen = s.word.generator(spec.seed)?;
    let n = region.len();
    let draws = par_trials(spec.trials, |t| {
        let pair = wierman_couple(
            &region,
            &sources,
            std::slice::from_ref(&gen),
            s.p,
            &mut RngStream::new(spec.seed, t),
            s.convention,
        )?;
        Ok((verify_coupling(&pair).valid, pair.omega().bits().clone(), pair.omega_tilde().bits().clone()))
    })?;
    let mut omega = vec![0u64; n];
    let mut tilde = vec![0u64; n];
    let mut valid = 0;
    for (ok, a, b) in &draws {
        valid += *ok as u64;
        a.ones().for_each(|r| omega[r] += 1);
        b.ones().for_each(|r| tilde[r] += 1);
    }
    out.push("certificate_valid", valid, spec.trials);
    let sites: Vec<String> = region.points().map(|p| p.to_string()).collect();
    out.details = json!({ "sites": sites, "omega_ones": omega, "omega_tilde_ones": tilde });
    Ok(())
}

fn run_oriented(spec: &ExperimentSpec, s: &OrientedSpec, out: &mut Outcome) -> Result<()> {
    match s.stat {
        OrientedStat::Crossing => {
            let rep = crossing_stat(&CrossingParams {
                n: s.n,
                h: s.h,
                gamma: s.gamma,
                delta: s.delta,
                trials: spec.trials,
                seed: spec.seed,
                thin: s.thin,
            })?;
            out.push_estimate("crossing", rep.crossing.clone());
            if let Some(e) = &rep.n_stat {
                out.push_estimate("n_stat", e.clone());
            }
            out.details = json!({
                "window_vertices": rep.window_vertices,
                "left_size": rep.left_size,
                "right_size": rep.right_size,
                "source_size": rep.source_size,
            });
        }
        OrientedStat::Domination => {
            let rep = domination_probe(&DominationParams {
                gamma: s.gamma,
                delta: s.delta,
                n: s.n,
                trials: spec.trials,
                seed: spec.seed,
            })?;
            for ev in &rep.events {
                out.push_estimate(&format!("xi_at_least_{}", ev.threshold), ev.estimate.clone());
            }
            out.push_estimate("g1", rep.g1.clone());
            out.push_estimate("g2", rep.g2.clone());
            out.push_estimate("g3", rep.g3.clone());
            out.push_estimate("g", rep.g.clone());
            let bench: Vec<Value> = rep
                .events
                .iter()
                .map(|e| json!({ "threshold": e.threshold, "benchmark": e.benchmark, "consistent": e.consistent }))
                .collect();
            out.details = json!({
                "targets": rep.targets,
                "source_size": rep.source_size,
                "benchmarks": bench,
                "dominated": rep.dominated,
                "mean_xi": rep.mean_xi,
            });
        }
    }
    Ok(())
}

/// Word long enough for every index the renormalization events may probe.
fn renorm_word(s: &RenormSpec, seed: u64) -> Result<Word> {
    let c = s.params.c() as usize;
    let span = match s.event {
        RenormEvent::Good => good_vertex(s).v1.max(0) as usize + 2,
        RenormEvent::Emn => s.n as usize,
        RenormEvent::Exploration => 3 * s.n as usize + 4,
    };
    s.word.generator(seed)?.prefix(c * span + 1)
}

fn run_renorm(spec: &ExperimentSpec, s: &RenormSpec, out: &mut Outcome) -> Result<()> {
    let params = &s.params;
    let region = renorm_region(s)?;
    let xi = renorm_word(s, spec.seed)?;
    let cfg_for = |t: u64| -> Result<Configuration> { sample(&region, params.p, &mut RngStream::new(spec.seed, t)) };
    match s.event {
        RenormEvent::Good => {
            let u = good_vertex(s);
            let seed = SeedSet::new(u, macro_face(&u, params.k, params.d)?.points().map(|x| (x, 0)));
            let hits = count_successes(spec.trials, |t| good_event(&cfg_for(t)?, &seed, &xi, params))?;
            out.push("good", hits, spec.trials);
            out.details =
                json!({ "u": [u.v1, u.v2, u.v3], "seed_size": seed.len(), "threshold": params.good_threshold() });
        }
        RenormEvent::Emn => {
            let res = par_trials(spec.trials, |t| Ok(event_emn(&cfg_for(t)?, s.m, s.n, &xi, params)?.holds))?;
            out.push("emn", res.iter().filter(|&&b| b).count() as u64, spec.trials);
        }
        RenormEvent::Exploration => {
            let targets: Vec<(LatticePoint, usize)> = left_faces(s.n, params)?
                .into_iter()
                .flat_map(|(_, f)| f.points().map(|x| (x, 0)).collect::<Vec<_>>())
                .collect();
            let reports = par_trials(spec.trials, |t| macro_exploration(&cfg_for(t)?, &targets, &xi, s.n, params))?;
            out.push("crossing", reports.iter().filter(|r| r.crossing).count() as u64, spec.trials);
            out.push("t_prime_large", reports.iter().filter(|r| r.t_prime_large).count() as u64, spec.trials);
            let sum =
                |f: &dyn Fn(&crate::renorm::MacroExplorationReport) -> usize| reports.iter().map(f).sum::<usize>();
            out.details = json!({
                "queries": sum(&|r| r.audit.queries),
                "repeated_queries": sum(&|r| r.audit.repeated),
                "overlapping_pairs": sum(&|r| r.audit.overlapping_pairs),
                "accepted": sum(&|r| r.accepted.len()),
            });
        }
    }
    relaxed_note(params.mode, out);
    Ok(())
}
