use proptest::prelude::*;

use trajrisk::harness::{sessionize, SessionSpec, TickSeries};
use trajrisk::predictors::{
    fit_linear_one_param, flat_forecast, nn_forecast, zero_forecast, Forecast, NNIndex,
};
use trajrisk::risk::{compare_report, ecdf, traj_loss};
use trajrisk::sim::{path_to_returns, simulate_path, ProcessModel};
use trajrisk::windows::{chrono_split, make_windows, window_count, Dataset, WindowPair};

fn dataset(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Dataset {
    let l = inputs[0].len();
    let h = targets[0].len();
    let pairs = inputs
        .into_iter()
        .zip(targets)
        .enumerate()
        .map(|(t, (input, target))| WindowPair { t, input, target })
        .collect();
    Dataset::from_pairs(pairs, l, h, 1).unwrap()
}

fn pairs_strategy(max_n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..max_n, 1usize..6, 1usize..6).prop_flat_map(|(n, l, h)| {
        (
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, l), n),
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, h), n),
        )
    })
}

proptest! {
    #[test]
    fn loss_is_nonnegative_and_zero_on_target(target in prop::collection::vec(-1e3f64..1e3, 1..40), shift in -5.0f64..5.0) {
        let exact = Forecast(target.clone());
        prop_assert_eq!(traj_loss(&target, &exact).unwrap(), 0.0);
        let shifted = Forecast(target.iter().map(|y| y + shift).collect());
        let l = traj_loss(&target, &shifted).unwrap();
        prop_assert!(l >= 0.0);
        let expect = shift * shift * target.len() as f64;
        prop_assert!((l - expect).abs() <= 1e-9 * expect.max(1.0));
    }

    #[test]
    fn flat_forecast_repeats_last_value(window in prop::collection::vec(-1e3f64..1e3, 1..30), h in 1usize..40) {
        let f = flat_forecast(&window, h).unwrap();
        prop_assert_eq!(f.horizon(), h);
        prop_assert!(f.values().iter().all(|v| *v == *window.last().unwrap()));
        prop_assert!(zero_forecast(h).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nn_interpolates_training_data((inputs, targets) in pairs_strategy(40)) {
        let train = dataset(inputs, targets);
        let index = NNIndex::new(&train).unwrap();
        for (i, p) in train.pairs.iter().enumerate() {
            let f = nn_forecast(&index, &p.input).unwrap();
            // the first training pair with this exact input wins
            let first = train.pairs.iter().position(|q| q.input == p.input).unwrap();
            prop_assert!(first <= i);
            prop_assert_eq!(f.values(), train.pairs[first].target.as_slice());
        }
    }

    #[test]
    fn linear_coefficient_is_equivariant((inputs, targets) in pairs_strategy(30), c in -4.0f64..4.0) {
        prop_assume!(inputs.iter().any(|x| x.last().unwrap().abs() > 1e-3));
        let base = fit_linear_one_param(&dataset(inputs.clone(), targets.clone())).unwrap();
        let scaled_targets: Vec<Vec<f64>> = targets.iter().map(|t| t.iter().map(|y| c * y).collect()).collect();
        let scaled = fit_linear_one_param(&dataset(inputs.clone(), scaled_targets)).unwrap();
        prop_assert!((scaled.a - c * base.a).abs() <= 1e-9 * (1.0 + (c * base.a).abs()));
        // exact linear targets are recovered
        let exact: Vec<Vec<f64>> = inputs.iter().zip(&targets).map(|(x, t)| vec![c * x.last().unwrap(); t.len()]).collect();
        let fit = fit_linear_one_param(&dataset(inputs, exact)).unwrap();
        prop_assert!((fit.a - c).abs() <= 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn windows_count_and_contiguity(len in 2usize..400, l in 1usize..20, h in 1usize..20, stride in 1usize..10, seed in any::<u64>()) {
        let path = simulate_path(&ProcessModel::random_walk(1.0, 0.1), len, seed).unwrap();
        let expected = window_count(len, l, h, stride);
        match make_windows(&path, l, h, stride) {
            Ok(d) => {
                prop_assert_eq!(d.len(), expected);
                for p in &d.pairs {
                    prop_assert_eq!(p.input.as_slice(), &path.values[p.t + 1 - l..=p.t]);
                    prop_assert_eq!(p.target.as_slice(), &path.values[p.t + 1..=p.t + h]);
                }
            }
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn chrono_split_partitions_in_order(n in 1usize..2000, a in 1u32..100, b in 1u32..100, c in 1u32..100) {
        let total = (a + b + c) as f64;
        let fractions = [a as f64 / total, b as f64 / total, 1.0 - a as f64 / total - b as f64 / total];
        prop_assume!(fractions[2] > 0.0);
        let d = dataset(vec![vec![0.0]; n], vec![vec![0.0]; n]);
        let s = chrono_split(&d, fractions).unwrap();
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
        prop_assert_eq!(s.train.len(), (fractions[0] * n as f64).floor() as usize);
        let ts: Vec<usize> = s.train.pairs.iter().chain(&s.val.pairs).chain(&s.test.pairs).map(|p| p.t).collect();
        prop_assert_eq!(ts, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn returns_sum_back_to_levels(len in 2usize..500, seed in any::<u64>()) {
        let path = simulate_path(&ProcessModel::random_walk(2.0, 0.3), len, seed).unwrap();
        let r = path_to_returns(&path).unwrap();
        prop_assert_eq!(r.len(), len - 1);
        let mut level = path.values[0];
        for (k, x) in r.values.iter().enumerate() {
            level += x;
            prop_assert!((level - path.values[k + 1]).abs() <= 1e-9);
        }
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>(), len in 2usize..200) {
        let m = ProcessModel::random_walk(1.0, 0.1);
        prop_assert_eq!(simulate_path(&m, len, seed).unwrap(), simulate_path(&m, len, seed).unwrap());
    }

    #[test]
    fn ecdf_is_monotone_and_complete(losses in prop::collection::vec(0.0f64..10.0, 1..200)) {
        let e = ecdf(&losses).unwrap();
        prop_assert_eq!(e.last().unwrap().fraction, 1.0);
        for w in e.windows(2) {
            prop_assert!(w[0].value < w[1].value && w[0].fraction < w[1].fraction);
        }
    }

    #[test]
    fn comparison_rates_are_consistent(pairs in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..200)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ab = compare_report(&a, &b, ["a", "b"]).unwrap();
        let ba = compare_report(&b, &a, ["b", "a"]).unwrap();
        prop_assert!((ab.win_rate_a_over_b + ba.win_rate_a_over_b + ab.tie_fraction - 1.0).abs() < 1e-12);
        prop_assert_eq!(ab.tie_fraction, ba.tie_fraction);
        prop_assert_eq!(ab.log10_ratios.len() + ab.zero_loss_windows, a.len());
    }

    #[test]
    fn sessionize_is_idempotent_on_its_grid(prices in prop::collection::vec(0.5f64..2.0, 11), days in 1i64..4) {
        // 13:00-13:05 at 30 s is 11 grid points
        let spec = SessionSpec::parse("13:00", "13:05", 30, 0.95).unwrap();
        let mut ts = Vec::new();
        let mut ps = Vec::new();
        for d in 0..days {
            for (k, p) in prices.iter().enumerate() {
                ts.push(d * 86_400 + 13 * 3600 + 30 * k as i64);
                ps.push(*p * (1.0 + d as f64));
            }
        }
        let series = TickSeries::new(ts, ps, "x").unwrap();
        let s = sessionize(&series, &spec).unwrap();
        prop_assert_eq!(s.sessions.len(), days as usize);
        prop_assert!(s.dropped.is_empty());
        for (d, session) in s.sessions.iter().enumerate() {
            let expect: Vec<f64> = prices.iter().map(|p| p * (1.0 + d as f64)).collect();
            prop_assert_eq!(&session.values, &expect);
            prop_assert_eq!(session.coverage, 1.0);
        }
    }
}
