use proptest::prelude::*;
use wordperc_core::*;

fn word_strategy() -> impl Strategy<Value = Word> {
    "[01]{1,8}".prop_map(|s| s.parse::<Word>().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_within_relaxed(seed in any::<u64>(), p in 0.1f64..0.9, word in word_strategy()) {
        let r = Region::closed_box(&[(0, 3), (0, 2), (0, 1)]).unwrap();
        let cfg = sample(&r, p, &mut RngStream::new(seed, 0)).unwrap();
        let src = SourceSet::single(LatticePoint::new(&[0, 0, 0]), 0);
        let t = word.len() - 1;
        let opts = ReachOptions { witnesses: true, ..Default::default() };
        let ex = exact_word_reach(&cfg, &src, std::slice::from_ref(&word), &r, t, &opts).unwrap();
        let rel = relaxed_word_reach(&cfg, &src, std::slice::from_ref(&word), &r, t, &opts).unwrap();
        for (y, i) in ex.states() {
            prop_assert!(rel.contains(&y, i));
        }
        for w in ex.witnesses().unwrap().values() {
            prop_assert!(reach::check_witness(&cfg, &word, w.start_index, &w.path, true));
        }
    }

    #[test]
    fn coupling_certificate(seed in any::<u64>(), p in 0.05f64..0.5, m in 1usize..4) {
        let r = Region::closed_box(&[(0, 5), (0, 5)]).unwrap();
        let gens = [WordGenerator::MinRun { m, seed }];
        let src = [LatticePoint::new(&[0, 0]), LatticePoint::new(&[5, 5])];
        for conv in [SourceConvention::ReadAtSource, SourceConvention::SkipSource] {
            let pair = wierman_couple(&r, &src, &gens, p, &mut RngStream::new(seed, 1), conv).unwrap();
            prop_assert!(verify_coupling(&pair).valid);
        }
    }

    #[test]
    fn crossing_monotone_in_gamma(seed in 0u64..1000, g in 0.2f64..0.9) {
        let base = CrossingParams { n: 8, h: 4, gamma: g, delta: 0.3, trials: 20, seed, thin: false };
        let lo = crossing_stat(&base).unwrap();
        let hi = crossing_stat(&CrossingParams { gamma: (g + 0.1).min(1.0), ..base }).unwrap();
        prop_assert!(lo.crossing.successes <= hi.crossing.successes);
    }

    #[test]
    fn spec_json_round_trip(seed in any::<u64>(), trials in 1u64..50, len in 1usize..6) {
        let spec = ExperimentSpec {
            experiment: Experiment::Reach(experiment::ReachSpec {
                region: vec![(0, 2), (0, 2)],
                from: vec![1, 1],
                p: 0.5,
                word: WordArg::Shorthand("alt".into()),
                len,
                mode: SearchMode::Relaxed,
            }),
            trials,
            seed,
            output: None,
        };
        let back = ExperimentSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(&back, &spec);
        let a = run(&spec).unwrap();
        let b = run(&back).unwrap();
        prop_assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
    }
}
