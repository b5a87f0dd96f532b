//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

#![allow(clippy::type_complexity)]

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;
use wordperc_core::experiment::{decay_outcomes, DecaySpec};
use wordperc_core::stats::{chi_square_critical, chi_square_statistic, par_trials};
use wordperc_core::*;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::new(c)
}

/// States `(rank, index)` reached by self-avoiding paths reading `word` from the sources.
fn brute_force_states(cfg: &Configuration, sources: &[(LatticePoint, usize)], word: &Word) -> HashSet<(usize, usize)> {
    fn walk(cfg: &Configuration, word: &Word, path: &mut Vec<usize>, t: usize, out: &mut HashSet<(usize, usize)>) {
        let v = *path.last().unwrap();
        out.insert((v, t));
        if t + 1 >= word.len() {
            return;
        }
        let here = cfg.region().point(v);
        for nb in cfg.region().points().enumerate().filter(|(_, q)| q.is_adjacent(&here)).map(|(r, _)| r) {
            if !path.contains(&nb) && cfg.get(nb) == word.get(t + 1) {
                path.push(nb);
                walk(cfg, word, path, t + 1, out);
                path.pop();
            }
        }
    }
    let mut out = HashSet::new();
    for (x, t) in sources {
        let r = cfg.region().rank(x).unwrap();
        if *t < word.len() && cfg.get(r) == word.get(*t) {
            walk(cfg, word, &mut vec![r], *t, &mut out);
        }
    }
    out
}

fn states_of(res: &ReachResult) -> HashSet<(usize, usize)> {
    res.layers().iter().enumerate().flat_map(|(t, l)| l.ones().map(move |r| (r, t))).collect()
}

fn criterion_1() -> Check {
    let region = Region::closed_box(&[(0, 2), (0, 2)]).map_err(e)?;
    let source_sets: Vec<Vec<(LatticePoint, usize)>> =
        vec![vec![(pt(&[0, 0]), 0)], vec![(pt(&[1, 1]), 0)], vec![(pt(&[0, 2]), 0), (pt(&[2, 0]), 1)]];
    let words: Vec<Word> = (1..=6).flat_map(|l| enumerate_words(l).unwrap()).collect();
    let configs: Vec<Configuration> = enumerate_configs(&region).map_err(e)?.collect();
    let mismatches = par_trials(configs.len() as u64, |i| {
        let cfg = &configs[i as usize];
        let mut bad = 0u64;
        for src in &source_sets {
            let mut set = SourceSet::new();
            for (x, t) in src {
                set.push(x.clone(), *t, 0);
            }
            for w in &words {
                let want = brute_force_states(cfg, src, w);
                let max = w.len() - 1;
                let ex = exact_word_reach(cfg, &set, std::slice::from_ref(w), &region, max, &ReachOptions::default())?;
                let rel =
                    relaxed_word_reach(cfg, &set, std::slice::from_ref(w), &region, max, &ReachOptions::default())?;
                let got = states_of(&ex);
                if got != want || !got.is_subset(&states_of(&rel)) {
                    bad += 1;
                }
            }
        }
        Ok(bad)
    })
    .map_err(e)?
    .into_iter()
    .sum::<u64>();
    ensure(mismatches == 0, || format!("{mismatches} mismatching (config, word, source) cases"))?;
    Ok(format!("{} configs x {} words x {} source sets, 0 mismatches", configs.len(), words.len(), source_sets.len()))
}

fn criterion_2() -> Check {
    let region = Region::closed_box(&[(0, 1), (0, 1)]).map_err(e)?;
    let word: Word = "10".parse().map_err(e)?;
    let src = SourceSet::single(pt(&[0, 0]), 0);
    let mut hits = 0;
    for cfg in enumerate_configs(&region).map_err(e)? {
        let res = exact_word_reach(&cfg, &src, std::slice::from_ref(&word), &region, 1, &ReachOptions::default())
            .map_err(e)?;
        hits += res.layers().get(1).is_some_and(|l| l.any()) as u64;
    }
    ensure(hits * 8 == 3 * 16, || format!("enumeration gives {hits}/16, not 3/8"))?;
    let spec = ExperimentSpec::from_json(
        r#"{"kind": "reach", "region": [[0, 1], [0, 1]], "from": [0, 0], "p": 0.5, "word": "10", "len": 2,
            "trials": 100000, "seed": 20240}"#,
    )
    .map_err(e)?;
    let est = run(&spec).map_err(e)?.estimate("read").cloned().ok_or("missing estimate")?;
    ensure(est.contains(0.375), || format!("MC {:.5} with interval {:?} misses 3/8", est.point, est.wilson95))?;
    Ok(format!("enumeration 6/16 = 3/8; MC {:.5} in [{:.5}, {:.5}]", est.point, est.wilson95.lo, est.wilson95.hi))
}

fn criterion_3() -> Check {
    let draws = 200_000u64;
    let alpha = 1e-3;
    let crit = chi_square_critical(15, alpha).map_err(e)?;
    let mut summary = Vec::new();
    let cases: [(&[(i64, i64)], Vec<i64>); 2] =
        [(&[(0, 2), (0, 2)], vec![1, 1]), (&[(0, 2), (0, 2), (0, 2)], vec![1, 1, 1])];
    for (bounds, center) in cases {
        let region = Region::closed_box(bounds).map_err(e)?;
        let d = region.dim();
        // The 2x2 sub-square at the corner; the law of its four sites is checked in full.
        let corner: Vec<usize> = region
            .points()
            .enumerate()
            .filter(|(_, q)| q.coords()[0] <= 1 && q.coords()[1] <= 1 && q.coords()[2..].iter().all(|&c| c == 0))
            .map(|(r, _)| r)
            .collect();
        for p in [0.3, 0.5] {
            let gens = [WordGenerator::Alternating];
            let src = [pt(&center)];
            let outcomes = par_trials(draws, |t| {
                let pair = wierman_couple(
                    &region,
                    &src,
                    &gens,
                    p,
                    &mut RngStream::new(77, t),
                    SourceConvention::ReadAtSource,
                )?;
                Ok((verify_coupling(&pair).valid, pair.omega_tilde().bits().clone()))
            })
            .map_err(e)?;
            let valid = outcomes.iter().filter(|o| o.0).count() as u64;
            ensure(valid == draws, || format!("d={d} p={p}: certificate failed on {} draws", draws - valid))?;
            let mut ones = vec![0u64; region.len()];
            let mut cells = vec![0u64; 16];
            for (_, bits) in &outcomes {
                bits.ones().for_each(|r| ones[r] += 1);
                let idx = corner.iter().enumerate().fold(0, |acc, (i, &r)| acc | ((bits.get(r) as usize) << i));
                cells[idx] += 1;
            }
            let sigma = (p * (1.0 - p) * draws as f64).sqrt();
            let worst = ones.iter().map(|&c| (c as f64 - p * draws as f64).abs() / sigma).fold(0.0, f64::max);
            ensure(worst < 4.0, || format!("d={d} p={p}: a site marginal is {worst:.2} sigma off"))?;
            let probs: Vec<f64> =
                (0..16u32).map(|i| p.powi(i.count_ones() as i32) * (1.0 - p).powi(4 - i.count_ones() as i32)).collect();
            let stat = chi_square_statistic(&cells, &probs);
            ensure(stat < crit, || format!("d={d} p={p}: chi-square {stat:.2} >= {crit:.2}"))?;
            summary.push(format!("d={d} p={p}: max {worst:.2}σ, χ²={stat:.1}"));
        }
    }
    Ok(format!("{} draws each, certificates 100%, χ² crit {crit:.2}; {}", draws, summary.join("; ")))
}

/// Reach by breadth-first search over the slab graph restricted to the window.
fn bfs_reach(w: &OrientedWindow, open: &dyn Fn(&MacroVertex) -> bool, sources: &[MacroVertex]) -> HashSet<MacroVertex> {
    let mut seen: HashSet<MacroVertex> = HashSet::new();
    let mut queue: Vec<MacroVertex> = sources.iter().filter(|s| open(s)).copied().collect();
    while let Some(v) = queue.pop() {
        if !seen.insert(v) {
            continue;
        }
        for nb in w.graph().out_neighbors(&v) {
            if w.contains(&nb) && open(&nb) && !seen.contains(&nb) {
                queue.push(nb);
            }
        }
    }
    seen
}

fn criterion_4() -> Check {
    let instances = 1000u64;
    let bad = par_trials(instances, |t| {
        let mut rng = RngStream::new(404, t);
        let n = 3 + rng.below(22) as i64;
        let h = 2 + rng.below(7) as i64;
        let gamma = [0.3, 0.7, 0.95][rng.below(3) as usize];
        let block = SlabBlock::macro_block(n, h)?;
        let w = &block.window;
        let cfg = OrientedConfig::sample(w, gamma, &mut rng)?;
        let left = block.left();
        // With h = 2 half of the columns carry no vertex, so L may be empty.
        let k = if left.is_empty() { 0 } else { 1 + rng.below(left.len() as u64) as usize };
        let s: Vec<MacroVertex> =
            rng.choose_subset(left.len(), k).into_iter().map(|i| left[i]).filter(|v| cfg.is_open(v)).collect();
        let st = explore(w, &s, |v, _| Ok(cfg.is_open(&v)))?;
        let s_set: HashSet<MacroVertex> = s.iter().copied().collect();
        let explored: HashSet<MacroVertex> = st.accepted(w).into_iter().filter(|v| !s_set.contains(v)).collect();
        let reached: HashSet<MacroVertex> =
            oriented_reach(&cfg, &s, w.vertices())?.into_iter().filter(|v| !s_set.contains(v)).collect();
        let oracle: HashSet<MacroVertex> =
            bfs_reach(w, &|v| cfg.is_open(v), &s).into_iter().filter(|v| !s_set.contains(v)).collect();
        Ok((explored != reached || reached != oracle || st.max_queries_per_vertex() > 1) as u64)
    })
    .map_err(e)?
    .into_iter()
    .sum::<u64>();
    ensure(bad == 0, || format!("{bad} of {instances} instances mismatch"))?;
    Ok(format!("{instances} instances (n <= 24, h <= 8, γ in {{0.3, 0.7, 0.95}}), 0 mismatches"))
}

fn criterion_5() -> Check {
    let mut cases = 0;
    let mut edges = 0usize;
    for h in [6i64, 8, 10] {
        let mut n = h;
        while n <= 120 {
            let am = accordion_embed(n, h).map_err(e)?;
            let dom = am.domain_window().map_err(e)?;
            let block = am.block();
            let right: HashSet<MacroVertex> = block.right().into_iter().collect();
            let left: HashSet<MacroVertex> = block.left().into_iter().collect();
            let mut image = HashSet::new();
            for u in dom.vertices() {
                let fu = am.map(u).ok_or_else(|| format!("n={n} h={h}: {u:?} has no image"))?;
                ensure(block.window.contains(&fu), || format!("n={n} h={h}: f({u:?}) = {fu:?} leaves the block"))?;
                ensure(image.insert(fu), || format!("n={n} h={h}: f is not injective at {u:?}"))?;
                for v in OrientedGraph::Planar.out_neighbors(u) {
                    if dom.contains(&v) {
                        let fv = am.map(&v).unwrap();
                        ensure(OrientedGraph::Slab { h }.is_edge(&fu, &fv), || {
                            format!("n={n} h={h}: edge {u:?} -> {v:?} maps to a non-edge")
                        })?;
                        edges += 1;
                    }
                }
            }
            let (m0, m1) = am.middle();
            let (y0, y1) = am.y_range();
            ensure(y0 <= m0 && m1 <= y1 && m1 > m0, || format!("n={n} h={h}: bad middle range"))?;
            for y in m0..=m1 {
                for (x, side, name) in [(am.width(), &right, "R"), (0, &left, "L")] {
                    let u = MacroVertex::new(x, y, 0);
                    if OrientedGraph::Planar.is_vertex(&u) {
                        let fu = am.map(&u).unwrap();
                        ensure(side.contains(&fu), || format!("n={n} h={h}: f({u:?}) = {fu:?} is not in {name}"))?;
                    }
                }
            }
            ensure(am.checks().all_pass(), || format!("n={n} h={h}: built-in checks disagree"))?;
            cases += 1;
            n += h;
        }
    }
    Ok(format!("{cases} (n, h) cases, {edges} planar edges all preserved, injective, targets in R"))
}

fn criterion_6() -> Check {
    // Containment of ξ^A_{5n} in ξ^B_{5n} for A ⊆ B, and in γ, on shared uniforms.
    let trials = 1000u64;
    let bad = par_trials(trials, |t| {
        let mut rng = RngStream::new(606, t);
        let n = 2 * (1 + rng.below(6) as i64);
        let w = xi_window(n)?;
        let u = oriented::sample_uniforms(&w, &mut rng);
        let g1 = 0.4 + 0.5 * rng.uniform();
        let g2 = g1 + (1.0 - g1) * rng.uniform();
        let lo = OrientedConfig::from_uniforms(&w, &u, g1)?;
        let hi = OrientedConfig::from_uniforms(&w, &u, g2)?;
        let col: Vec<i64> = w.column(0, -n, n).iter().map(|v| v.v2).collect();
        let b: Vec<i64> = col.iter().copied().filter(|_| rng.bernoulli(0.6)).collect();
        let a: Vec<i64> = b.iter().copied().filter(|_| rng.bernoulli(0.5)).collect();
        let xa = xi_5n(&lo, &a, n)?;
        let xb = xi_5n(&lo, &b, n)?;
        let xb_hi = xi_5n(&hi, &b, n)?;
        let planar_ok = xa.iter().all(|y| xb.contains(y)) && xb.iter().all(|y| xb_hi.contains(y));
        // Same statement on the slab.
        let h = 2 + 2 * rng.below(3) as i64;
        let block = SlabBlock::macro_block(3 + rng.below(10) as i64, h)?;
        let sw = &block.window;
        let su = oriented::sample_uniforms(sw, &mut rng);
        let cfg = OrientedConfig::from_uniforms(sw, &su, g1)?;
        let cfg_hi = OrientedConfig::from_uniforms(sw, &su, g2)?;
        let left = block.left();
        let sb: Vec<MacroVertex> = left.iter().copied().filter(|_| rng.bernoulli(0.6)).collect();
        let sa: Vec<MacroVertex> = sb.iter().copied().filter(|_| rng.bernoulli(0.5)).collect();
        let ra = reach_mask(&cfg, &sa)?;
        let rb = reach_mask(&cfg, &sb)?;
        let rb_hi = reach_mask(&cfg_hi, &sb)?;
        Ok((!(planar_ok && ra.is_subset(&rb) && rb.is_subset(&rb_hi))) as u64)
    })
    .map_err(e)?
    .into_iter()
    .sum::<u64>();
    ensure(bad == 0, || format!("{bad} containment violations"))?;

    // Seed monotonicity of the good event.
    let params = RenormParams::new(3, 0.5, 2, 1e-6, 4).map_err(e)?;
    let u = MacroVertex::new(0, 0, 2);
    let cell = macro_cell(&u, params.k, params.d).map_err(e)?;
    let face: Vec<LatticePoint> = macro_face(&u, params.k, params.d).map_err(e)?.points().collect();
    let xi = WordGenerator::Alternating.prefix(params.c() as usize * 2 + 1).map_err(e)?;
    let seed_bad = par_trials(trials, |t| {
        let mut rng = RngStream::new(607, t);
        let cfg = sample(&cell, params.p, &mut rng)?;
        let big: Vec<(LatticePoint, usize)> =
            face.iter().filter(|_| rng.bernoulli(0.7)).map(|x| (x.clone(), 0)).collect();
        let small: Vec<(LatticePoint, usize)> = big.iter().filter(|_| rng.bernoulli(0.5)).cloned().collect();
        let (sb, sa) = (SeedSet::new(u, big), SeedSet::new(u, small));
        let ga = good_event(&cfg, &sa, &xi, &params)?;
        let gb = good_event(&cfg, &sb, &xi, &params)?;
        let sets_a = seed_sets_from(&cfg, &sa, &xi, &params)?;
        let sets_b = seed_sets_from(&cfg, &sb, &xi, &params)?;
        let grown = sets_a.iter().zip(&sets_b).all(|(x, y)| {
            let ys: HashSet<&LatticePoint> = y.points.iter().map(|q| &q.0).collect();
            x.points.iter().all(|q| ys.contains(&q.0))
        });
        Ok((ga && !gb || !grown) as u64)
    })
    .map_err(e)?
    .into_iter()
    .sum::<u64>();
    ensure(seed_bad == 0, || format!("{seed_bad} seed-monotonicity violations"))?;

    // q_m nonincreasing in m on shared configurations.
    let mut pairs = 0;
    for (spec, trials) in [
        (DecaySpec { d: 3, p: 0.5, len: 4, ms: vec![0, 1, 2, 3], r: 3, mode: SearchMode::Exact }, 200u64),
        (DecaySpec { d: 2, p: 0.4, len: 5, ms: vec![0, 1, 2, 4], r: 4, mode: SearchMode::Relaxed }, 300),
    ] {
        let out = decay_outcomes(&spec, trials, 608).map_err(e)?;
        for i in 0..spec.ms.len() {
            for j in i + 1..spec.ms.len() {
                pairs += 1;
                let viol = out.iter().filter(|o| o[j] && !o[i]).count();
                ensure(viol == 0, || {
                    format!("m={} vs m={}: {viol} trials fail only at the larger radius", spec.ms[i], spec.ms[j])
                })?;
            }
        }
    }
    Ok(format!("{trials} containment trials, {trials} seed-monotonicity trials, {pairs} m-pairs: 0 violations"))
}

fn criterion_7() -> Check {
    let mut points = Vec::new();
    for k in [2, 4, 6] {
        let spec = ExperimentSpec::from_json(&format!(
            r#"{{"kind": "renorm", "event": "good", "d": 3, "p": 0.5, "k": {k}, "delta": 1e-6, "h": 4,
                "u": [0, 0, 2], "word": "alt", "mode": "exact", "trials": 200, "seed": 7007}}"#
        ))
        .map_err(e)?;
        points.push((k, run(&spec).map_err(e)?.estimate("good").cloned().ok_or("missing estimate")?.point));
    }
    ensure(points.windows(2).all(|w| w[0].1 <= w[1].1), || format!("P(G) not nondecreasing in k: {points:?}"))?;
    let spec = ExperimentSpec::from_json(
        r#"{"kind": "renorm", "event": "exploration", "d": 3, "p": 0.5, "k": 2, "delta": 1e-6, "h": 4, "n": 4,
            "word": "alt", "mode": "exact", "trials": 100, "seed": 7008}"#,
    )
    .map_err(e)?;
    let res = run(&spec).map_err(e)?;
    let repeated = res.details["repeated_queries"].as_u64().ok_or("missing audit")?;
    let overlapping = res.details["overlapping_pairs"].as_u64().ok_or("missing audit")?;
    let queries = res.details["queries"].as_u64().ok_or("missing audit")?;
    ensure(repeated == 0 && overlapping == 0, || {
        format!("audit: {repeated} repeated queries, {overlapping} overlapping cells")
    })?;
    let shown: Vec<String> = points.iter().map(|(k, p)| format!("k={k}: {p:.3}")).collect();
    Ok(format!("P(G) {}; 100 explorations, {queries} box queries, 0 repeated, 0 overlapping", shown.join(", ")))
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let specs = [
        r#"{"kind": "reach", "region": [[0, 2], [0, 2]], "from": [1, 1], "p": 0.5, "word": "alt", "len": 4, "trials": 2000, "seed": 1}"#,
        r#"{"kind": "allwords", "d": 2, "p": 0.5, "len": 3, "m": 1, "r": 3, "trials": 300, "seed": 2}"#,
        r#"{"kind": "wierman", "region": [[0, 3], [0, 3]], "sources": [[0, 0], [3, 3]], "p": 0.4, "word": "minrun:2", "trials": 500, "seed": 3}"#,
        r#"{"kind": "oriented", "stat": "domination", "n": 6, "gamma": 0.8, "delta": 0.05, "trials": 300, "seed": 4}"#,
        r#"{"kind": "oriented", "stat": "crossing", "n": 12, "h": 6, "gamma": 0.7, "delta": 0.5, "thin": true, "trials": 300, "seed": 5}"#,
        r#"{"kind": "renorm", "event": "emn", "d": 3, "p": 0.5, "k": 2, "delta": 1e-6, "h": 2, "m": 1, "n": 2, "word": "alt", "trials": 50, "seed": 6}"#,
        r#"{"kind": "decay", "d": 3, "p": 0.5, "len": 3, "ms": [0, 1, 2], "r": 2, "mode": "relaxed", "trials": 200, "seed": 7}"#,
    ];
    for (i, text) in specs.iter().enumerate() {
        let path = dir.path().join(format!("spec{i}.json"));
        std::fs::write(&path, text).map_err(e)?;
        let a = run(&ExperimentSpec::load(&path).map_err(e)?).map_err(e)?;
        let b = run(&ExperimentSpec::load(&path).map_err(e)?).map_err(e)?;
        let counts = |r: &ExperimentResult| r.estimates.iter().map(|x| x.estimate.successes).collect::<Vec<_>>();
        ensure(counts(&a) == counts(&b), || format!("spec {i}: success counts differ"))?;
        ensure(a.canonical_json().map_err(e)? == b.canonical_json().map_err(e)?, || {
            format!("spec {i}: results differ")
        })?;
    }
    Ok(format!("{} saved specs re-run with identical success counts and results", specs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("exhaustive oracle equivalence on 3x3", criterion_1),
        ("closed-form 3/8 probability", criterion_2),
        ("Wierman coupling marginals", criterion_3),
        ("exploration sequence oracle", criterion_4),
        ("accordion embedding", criterion_5),
        ("monotonicity suite", criterion_6),
        ("renormalization smoke", criterion_7),
        ("determinism of saved specs", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {} {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
