use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use wordperc_core::experiment::{
    AllWordsSpec, DecaySpec, OrientedSpec, OrientedStat, ReachSpec, RenormEvent, RenormSpec, WiermanSpec,
};
use wordperc_core::reach::check_witness;
use wordperc_core::reach::DEFAULT_MAX_EXPANSIONS;
use wordperc_core::*;

/// Percolation of words: word reachability, couplings, oriented exploration
/// and block renormalization experiments.
#[derive(Parser, Debug)]
#[command(
    name = "wordperc",
    version,
    subcommand_required = false,
    arg_required_else_help = true,
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Run a saved experiment specification (JSON).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,

    /// Write `<BASE>.json` and `<BASE>.csv` in addition to printing the result.
    #[arg(long, value_name = "BASE", global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct Mc {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Mode {
    Exact,
    Relaxed,
}

impl From<Mode> for SearchMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => SearchMode::Exact,
            Mode::Relaxed => SearchMode::Relaxed,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Convention {
    ReadAtSource,
    SkipSource,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Stat {
    Crossing,
    Domination,
    Accordion,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Event {
    Good,
    Emn,
    Exploration,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a configuration and save it in the binary configuration format.
    Sample {
        /// Box as `lo:hi,lo:hi,...`.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Output file.
        #[arg(long)]
        file: PathBuf,
    },
    /// Word reachability on a saved configuration, or the Monte Carlo frequency of reading a word.
    Reach {
        /// Saved configuration; without it a Monte Carlo estimate over `--region` is run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Start point `x,y,...`.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// Word shorthand: `alt`, `one`, `zero`, `periodic:0110`, `minrun:3`, `product:0.3` or a literal.
        #[arg(long)]
        word: String,
        #[arg(long)]
        len: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[command(flatten)]
        mc: Mc,
    },
    /// Whether every word of a given length is read from `B_m` within `B_r`.
    Allwords {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        len: usize,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        r: i64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[command(flatten)]
        mc: Mc,
    },
    /// Sample the Wierman coupling and verify its certificate.
    Wierman {
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        /// Sources `x,y;x,y;...`.
        #[arg(long, allow_hyphen_values = true)]
        sources: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "alt")]
        word: String,
        #[arg(long, value_enum, default_value = "read-at-source")]
        convention: Convention,
        #[command(flatten)]
        mc: Mc,
    },
    /// Oriented percolation statistics and the accordion embedding.
    Oriented {
        #[arg(long, value_enum)]
        stat: Stat,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 4)]
        h: i64,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Use the thin window `B_{n, n/h}` for the crossing statistic.
        #[arg(long)]
        thin: bool,
        #[command(flatten)]
        mc: Mc,
    },
    /// Block renormalization events.
    Renorm {
        #[arg(long, value_enum)]
        event: Event,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[arg(long, default_value_t = 4)]
        h: i64,
        #[arg(long, default_value = "alt")]
        word: String,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        /// Macro vertex `v1,v2,v3` for the good event.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, default_value_t = 1)]
        m: i64,
        #[arg(long, default_value_t = 3)]
        n: i64,
        #[arg(long, default_value_t = DEFAULT_MAX_EXPANSIONS)]
        max_expansions: u64,
        #[command(flatten)]
        mc: Mc,
    },
    /// Decay of `q_m = P(not every word of length L is read from B_m within B_r)`.
    Decay {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        len: usize,
        /// Radii `m1,m2,...`.
        #[arg(long)]
        ms: String,
        #[arg(long)]
        r: i64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[command(flatten)]
        mc: Mc,
    },
    /// Exhaustive checks on a small box: exact probability of reading a word,
    /// and exact-within-relaxed plus witness validity for all short words.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Check every word up to this length.
        #[arg(long, default_value_t = 0)]
        max_len: usize,
    },
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn ints(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|t| t.trim().parse::<i64>().map_err(|e| bad(format!("bad integer {t:?} in {s:?}: {e}")))).collect()
}

fn parse_region(s: &str) -> Result<Vec<(i64, i64)>> {
    s.split(',')
        .map(|iv| {
            let (a, b) = iv.split_once(':').ok_or_else(|| bad(format!("interval {iv:?} should be lo:hi")))?;
            let num = |t: &str| t.trim().parse::<i64>().map_err(|e| bad(format!("bad bound {t:?}: {e}")));
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn mc_spec(experiment: Experiment, mc: &Mc, out: &Option<PathBuf>) -> ExperimentSpec {
    ExperimentSpec { experiment, trials: mc.trials, seed: mc.seed, output: out.clone() }
}

fn print(v: &serde_json::Value) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    // A closed downstream pipe (e.g. `| head`) is not an error.
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run_spec(spec: ExperimentSpec) -> Result<()> {
    let res = run_and_write(&spec)?;
    println!("{}", res.to_json()?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(path) = &cli.spec {
        let mut spec = ExperimentSpec::load(path)?;
        if cli.out.is_some() {
            spec.output = cli.out.clone();
        }
        return run_spec(spec);
    }
    let out = &cli.out;
    let Some(command) = cli.command else {
        return Err(bad("give a subcommand or --spec FILE"));
    };
    match command {
        Command::Sample { region, p, seed, stream, file } => {
            let r = Region::closed_box(&parse_region(&region)?)?;
            let cfg = sample(&r, p, &mut RngStream::new(seed, stream))?;
            cfg.save(&file)?;
            print(
                &json!({ "file": file, "sites": r.len(), "ones": cfg.bits().count_ones(), "p": p, "seed": seed, "stream": stream }),
            )
        }
        Command::Reach { config: Some(path), from, word, len, mode, .. } => {
            let cfg = Configuration::load(&path)?;
            let w = WordGenerator::parse_shorthand(&word, 0)?.prefix(len)?;
            if len == 0 {
                return Err(Error::Domain("len must be >= 1".into()));
            }
            let src = SourceSet::single(LatticePoint::new(&ints(&from)?), 0);
            let opts = ReachOptions { witnesses: true, ..Default::default() };
            let region = cfg.region().clone();
            let res = word_reach(mode.into(), &cfg, &src, std::slice::from_ref(&w), &region, len - 1, &opts)?;
            let last =
                res.layers().get(len - 1).map(|l| l.ones().map(|r| region.point(r).to_string()).collect::<Vec<_>>());
            let witness = res
                .witnesses()
                .and_then(|ws| ws.values().find(|x| x.end_index() == len - 1))
                .map(|x| x.path.iter().map(|p| p.to_string()).collect::<Vec<_>>());
            print(&json!({
                "word": w.to_string(),
                "mode": SearchMode::from(mode),
                "read": last.as_ref().is_some_and(|l| !l.is_empty()),
                "end_points": last.unwrap_or_default(),
                "states": res.state_count(),
                "witness": witness,
            }))
        }
        Command::Reach { config: None, region, p, from, word, len, mode, mc } => {
            let region = region.ok_or_else(|| bad("--region is required without --config"))?;
            run_spec(mc_spec(
                Experiment::Reach(ReachSpec {
                    region: parse_region(&region)?,
                    from: ints(&from)?,
                    p,
                    word: WordArg::Shorthand(word),
                    len,
                    mode: mode.into(),
                }),
                &mc,
                out,
            ))
        }
        Command::Allwords { config: Some(path), m, r, len, mode, .. } => {
            let cfg = Configuration::load(&path)?;
            let d = cfg.region().dim();
            let outcome = sees_all_words(
                &cfg,
                &Region::ball(d, m)?,
                len,
                &Region::ball(d, r)?,
                mode.into(),
                &ReachOptions::default(),
            )?;
            print(&json!({
                "all_seen": outcome.all_seen,
                "failing_word": outcome.failing_word.map(|w| w.to_string()),
                "mode": outcome.mode,
            }))
        }
        Command::Allwords { config: None, d, p, len, m, r, mode, mc } => {
            run_spec(mc_spec(Experiment::Allwords(AllWordsSpec { d, p, len, m, r, mode: mode.into() }), &mc, out))
        }
        Command::Wierman { region, sources, p, word, convention, mc } => {
            let sources = sources.split(';').map(ints).collect::<Result<Vec<_>>>()?;
            let convention = match convention {
                Convention::ReadAtSource => SourceConvention::ReadAtSource,
                Convention::SkipSource => SourceConvention::SkipSource,
            };
            run_spec(mc_spec(
                Experiment::Wierman(WiermanSpec {
                    region: parse_region(&region)?,
                    sources,
                    p,
                    word: WordArg::Shorthand(word),
                    convention,
                }),
                &mc,
                out,
            ))
        }
        Command::Oriented { stat: Stat::Accordion, n, h, .. } => {
            let am = accordion_embed(n, h)?;
            print(&json!({
                "n": n,
                "h": h,
                "width": am.width(),
                "y_range": am.y_range(),
                "middle": am.middle(),
                "checks": am.checks(),
            }))
        }
        Command::Oriented { stat, n, h, gamma, delta, thin, mc } => {
            let stat = match stat {
                Stat::Crossing => OrientedStat::Crossing,
                _ => OrientedStat::Domination,
            };
            run_spec(mc_spec(Experiment::Oriented(OrientedSpec { stat, n, h, gamma, delta, thin }), &mc, out))
        }
        Command::Renorm { event, d, p, k, delta, h, word, mode, u, m, n, max_expansions, mc } => {
            let u = match u {
                Some(s) => {
                    let c = ints(&s)?;
                    let arr: [i64; 3] = c.try_into().map_err(|_| bad("--u takes three coordinates v1,v2,v3"))?;
                    Some(arr)
                }
                None => None,
            };
            let event = match event {
                Event::Good => RenormEvent::Good,
                Event::Emn => RenormEvent::Emn,
                Event::Exploration => RenormEvent::Exploration,
            };
            let params = RenormParams { d, p, k, delta, h, mode: mode.into(), max_expansions };
            run_spec(mc_spec(
                Experiment::Renorm(RenormSpec { event, params, word: WordArg::Shorthand(word), u, m, n }),
                &mc,
                out,
            ))
        }
        Command::Decay { d, p, len, ms, r, mode, mc } => run_spec(mc_spec(
            Experiment::Decay(DecaySpec { d, p, len, ms: ints(&ms)?, r, mode: mode.into() }),
            &mc,
            out,
        )),
        Command::Oracle { region, from, word, p, max_len } => oracle(&region, &from, word.as_deref(), p, max_len),
    }
}

fn oracle(region: &str, from: &str, word: Option<&str>, p: f64, max_len: usize) -> Result<()> {
    let r = Region::closed_box(&parse_region(region)?)?;
    let x = LatticePoint::new(&ints(from)?);
    if !r.contains(&x) {
        return Err(Error::Domain(format!("{x} is not in the region")));
    }
    let src = SourceSet::single(x, 0);
    let configs: Vec<Configuration> = enumerate_configs(&r)?.collect();
    let mut report = serde_json::Map::new();
    report.insert("configurations".into(), json!(configs.len()));
    if let Some(w) = word {
        let w: Word = w.parse()?;
        if w.is_empty() {
            return Err(Error::Domain("the word must be nonempty".into()));
        }
        let (mut prob, mut count) = (0.0, 0u64);
        for cfg in &configs {
            let res = exact_word_reach(cfg, &src, std::slice::from_ref(&w), &r, w.len() - 1, &ReachOptions::default())?;
            if res.layers().get(w.len() - 1).is_some_and(|l| l.any()) {
                let ones = cfg.bits().count_ones() as i32;
                prob += p.powi(ones) * (1.0 - p).powi(r.len() as i32 - ones);
                count += 1;
            }
        }
        report.insert("word".into(), json!(w.to_string()));
        report.insert("configurations_reading_word".into(), json!(count));
        report.insert("probability".into(), json!(prob));
    }
    if max_len > 0 {
        let opts = ReachOptions { witnesses: true, ..Default::default() };
        let (mut pairs, mut failures) = (0u64, Vec::new());
        for len in 1..=max_len {
            for w in enumerate_words(len)? {
                for cfg in &configs {
                    pairs += 1;
                    let ex = exact_word_reach(cfg, &src, std::slice::from_ref(&w), &r, len - 1, &opts)?;
                    let rel = relaxed_word_reach(cfg, &src, std::slice::from_ref(&w), &r, len - 1, &opts)?;
                    let contained = ex
                        .layers()
                        .iter()
                        .enumerate()
                        .all(|(t, l)| rel.layers().get(t).is_some_and(|m| l.is_subset(m)));
                    let witnesses_ok = ex
                        .witnesses()
                        .is_some_and(|ws| ws.values().all(|x| check_witness(cfg, &w, x.start_index, &x.path, true)));
                    if !(contained && witnesses_ok) && failures.len() < 10 {
                        failures
                            .push(json!({ "word": w.to_string(), "config": cfg.bits().ones().collect::<Vec<_>>() }));
                    }
                }
            }
        }
        report.insert("checked_pairs".into(), json!(pairs));
        report.insert("consistent".into(), json!(failures.is_empty()));
        report.insert("failures".into(), json!(failures));
    }
    print(&serde_json::Value::Object(report))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Validation(_) | Error::Format(_) | Error::Json(_) => 2,
        Error::Capacity(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wordperc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
