use jumpvar_core::jumpdetect::{
    gap_profile, lm_scan_returns, lm_statistic, maxgap, preavg_lm_scan_prices,
    preavg_nonoverlapping, LmConfig, MaxgapConfig,
};
use jumpvar_core::preavg::PreAvgConfig;
use jumpvar_core::simlab::{simulate, Model, NoiseSpec, SimSpec};
use proptest::prelude::*;

const CFG: MaxgapConfig = MaxgapConfig { delta: 5 };

fn wiggle(n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|k| amp * ((k as f64) * 2.3).sin()).collect()
}

/// Largest absolute tick return, earliest on ties.
fn max_return(y: &[f64]) -> (usize, f64) {
    y.windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .fold(
            (0, 0.0),
            |b, (j, r)| if r.abs() > f64::abs(b.1) { (j, r) } else { b },
        )
}

#[test]
fn scenario_one_same_location() {
    let mut y = wiggle(60, 0.3);
    y[31..].iter_mut().for_each(|v| *v += 5.0);
    let g = maxgap(&y, &CFG).unwrap();
    let (j, r) = max_return(&y);
    assert_eq!(g.index, 30);
    assert_eq!(j, 30);
    assert!(g.value > 0.0 && g.value <= r && r - g.value <= 1.2);
}

#[test]
fn scenario_two_noise_spike_fools_the_max_return() {
    let mut y = vec![0.0; 60];
    y[10] = -4.0;
    y[31..].iter_mut().for_each(|v| *v += 3.0);
    let g = maxgap(&y, &CFG).unwrap();
    assert_eq!((g.index, g.value), (30, 3.0));
    assert_eq!(max_return(&y), (9, -4.0));
}

#[test]
fn scenario_three_no_jump() {
    let mut y = vec![0.0; 60];
    y[20] = 3.0;
    assert_eq!(maxgap(&y, &CFG).unwrap().value, 0.0);
    assert_eq!(max_return(&y), (19, 3.0));
}

#[test]
fn scenario_four_two_jumps() {
    let mut y = wiggle(80, 0.2);
    y[21..].iter_mut().for_each(|v| *v += 3.0);
    y[51..].iter_mut().for_each(|v| *v -= 2.0);
    let top2 = |v: Vec<f64>| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
        let mut t = vec![idx[0], idx[1]];
        t.sort_unstable();
        t
    };
    let returns: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    assert_eq!(top2(gap_profile(&y, CFG.delta)), vec![20, 50]);
    assert_eq!(top2(returns), vec![20, 50]);
    let g = gap_profile(&y, CFG.delta);
    assert!(g[20] > 2.0 && g[50] < -1.0);
}

#[test]
fn isolated_jump_is_flagged_on_the_coarse_grid() {
    let p = simulate(&SimSpec::new(Model::bm(), 78 * 20, 5), 0).unwrap();
    let r: Vec<f64> = p.efficient.windows(2).map(|w| w[1] - w[0]).collect();
    let (hist, day) = r.split_at(78 * 19);
    let mut day = day.to_vec();
    let sd = (jumpvar_core::simlab::BM_SIGMA2 / 1560.0).sqrt();
    day[40] += 10.0 * sd;
    let scan = lm_scan_returns(hist, &day, &LmConfig::for_daily_count(78)).unwrap();
    assert!(scan.events.iter().any(|e| e.interval_index == 40));
    assert_eq!(scan.n_statistics, 78);
}

#[test]
fn preaveraged_scan_sizes_a_tick_jump() {
    let n = 23_400;
    let pcfg = PreAvgConfig::default();
    let k = pcfg.window(n);
    let noisy = |id| {
        simulate(
            &SimSpec::new(Model::bm(), n, 9).with_noise(NoiseSpec::iid(0.5)),
            id,
        )
        .unwrap()
    };
    let hist: Vec<f64> = (1..6)
        .flat_map(|id| preavg_nonoverlapping(&noisy(id).observed, k).unwrap())
        .collect();
    let mut y = noisy(0).observed;
    let at = 70 * k.get() + k.get() / 2;
    let jump = 0.1;
    y[at..].iter_mut().for_each(|v| *v += jump);
    let scan = preavg_lm_scan_prices(&y, &hist, &pcfg, &LmConfig::new(200, 0.01).unwrap()).unwrap();
    assert_eq!(scan.events.len(), 1);
    let e = &scan.events[0];
    assert!(e.first_obs < at && at <= e.last_obs);
    assert!((e.size - jump).abs() < 0.2 * jump, "size {}", e.size);
    assert!(scan.implied_jv() > 0.1);
}

proptest! {
    #[test]
    fn gaps_never_exceed_the_tick_return(y in prop::collection::vec(-1.0f64..1.0, 2..200), delta in 0usize..10) {
        let g = gap_profile(&y, delta);
        for (j, gj) in g.iter().enumerate() {
            let r = y[j + 1] - y[j];
            prop_assert!(gj.abs() <= r.abs());
            prop_assert!(*gj == 0.0 || gj.signum() == r.signum());
        }
    }

    #[test]
    fn zero_buffer_gives_tick_returns(y in prop::collection::vec(-1.0f64..1.0, 2..200)) {
        let g = gap_profile(&y, 0);
        for (j, gj) in g.iter().enumerate() {
            prop_assert_eq!(*gj, y[j + 1] - y[j]);
        }
    }

    #[test]
    fn wider_buffers_shrink_gaps(y in prop::collection::vec(-1.0f64..1.0, 2..200), delta in 0usize..10) {
        let a = gap_profile(&y, delta);
        let b = gap_profile(&y, delta + 1);
        prop_assert!(a.iter().zip(&b).all(|(x, z)| z.abs() <= x.abs()));
    }

    #[test]
    fn lm_statistic_is_scale_free(r in prop::collection::vec(-1.0f64..1.0, 20..100), c in 1e-4f64..1e4) {
        let z: Vec<f64> = r.iter().map(|x| c * x).collect();
        let m = 10;
        for i in m - 1..r.len() {
            match (lm_statistic(&r, m, i), lm_statistic(&z, m, i)) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn scan_events_are_invariant_to_scale(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let p = simulate(&SimSpec::new(Model::bmj(), 78 * 3, seed), 0).unwrap();
        let r: Vec<f64> = p.efficient.windows(2).map(|w| w[1] - w[0]).collect();
        let z: Vec<f64> = r.iter().map(|x| c * x).collect();
        let cfg = LmConfig::new(60, 0.05).unwrap();
        let a = lm_scan_returns(&r[..156], &r[156..], &cfg).unwrap();
        let b = lm_scan_returns(&z[..156], &z[156..], &cfg).unwrap();
        let ia: Vec<usize> = a.events.iter().map(|e| e.interval_index).collect();
        let ib: Vec<usize> = b.events.iter().map(|e| e.interval_index).collect();
        prop_assert_eq!(ia, ib);
        prop_assert!((a.implied_jv() - b.implied_jv()).abs() <= 1e-9);
    }
}
