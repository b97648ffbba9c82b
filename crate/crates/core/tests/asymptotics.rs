use approx::assert_relative_eq;
use jumpvar_core::asymptotics::{bv_bias, sigma_star, weight_constants, McConfig, WeightFunction};
use jumpvar_core::preavg::WindowK;
use jumpvar_core::simlab::{simulate, HestonParams, Model, SimSpec};
use jumpvar_core::stats::{mean, std_error};
use jumpvar_core::Exec;
use proptest::prelude::*;

/// Closed-form `Σ*11` for the triangular weight and constant volatility:
/// `4/ψ2² (Φ22 θ σ⁴ + 2 Φ12 σ² ω²/θ + Φ11 ω⁴/θ³)`.
fn rv_entry(sigma2: f64, omega2: f64, theta: f64) -> f64 {
    let (phi22, phi12, phi11) = (151.0 / 80_640.0, 1.0 / 96.0, 1.0 / 6.0);
    let psi2 = 1.0 / 12.0;
    4.0 / (psi2 * psi2)
        * (phi22 * theta * sigma2 * sigma2
            + 2.0 * phi12 * sigma2 * omega2 / theta
            + phi11 * omega2 * omega2 / theta.powi(3))
}

fn small_mc() -> McConfig {
    McConfig {
        draws: 4_000,
        ..McConfig::default()
    }
}

#[test]
fn noise_free_rv_entry_constant() {
    let g = WeightFunction::triangular();
    for theta in [0.5, 1.0, 2.0] {
        let s = sigma_star(|_| 0.04, 0.0, theta, &g, &small_mc(), Exec::Sequential).unwrap();
        assert_relative_eq!(
            s.matrix[0][0],
            1.07857 * theta * 0.04 * 0.04,
            max_relative = 1e-5
        );
    }
}

#[test]
fn rv_entry_matches_closed_form_with_noise() {
    let g = WeightFunction::triangular();
    for (omega2, theta) in [(1e-7, 1.0), (2.5e-7, 0.5), (5e-8, 2.0)] {
        let s = sigma_star(|_| 0.04, omega2, theta, &g, &small_mc(), Exec::Sequential).unwrap();
        assert_relative_eq!(
            s.matrix[0][0],
            rv_entry(0.04, omega2, theta),
            max_relative = 1e-6
        );
    }
}

#[test]
fn monte_carlo_rv_entry_agrees_with_exact_one() {
    let g = WeightFunction::triangular();
    let s = sigma_star(
        |_| 0.04,
        1e-7,
        1.0,
        &g,
        &McConfig {
            draws: 50_000,
            ..McConfig::default()
        },
        Exec::Sequential,
    )
    .unwrap();
    assert_relative_eq!(s.rv_entry_mc, s.matrix[0][0], max_relative = 0.02);
    assert!(s.matrix[1][1] > s.matrix[0][0]);
    assert!(s.correlation() > 0.5 && s.correlation() < 1.0);
}

#[test]
fn execution_strategy_does_not_change_the_result() {
    let g = WeightFunction::triangular();
    let f = |s: f64| 0.02 + 0.03 * s * s;
    let a = sigma_star(f, 1e-7, 1.0, &g, &small_mc(), Exec::Sequential).unwrap();
    let b = sigma_star(f, 1e-7, 1.0, &g, &small_mc(), Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn discrete_constants_converge() {
    let g = WeightFunction::triangular();
    for k in [2usize, 10, 100, 1000] {
        let c = weight_constants(&g, k).unwrap();
        assert_relative_eq!(
            c.psi2_k,
            WindowK::new(k).unwrap().psi(),
            max_relative = 1e-12
        );
        assert!((c.psi2_k - c.psi2).abs() <= 1.0 / (k * k) as f64);
    }
}

#[test]
fn heston_bias_closed_form() {
    let xi = 0.5;
    let b = bv_bias(
        |s| 0.03 + 0.01 * s,
        |s| xi * (0.03 + 0.01 * s).sqrt(),
        1000,
        &[],
    )
    .unwrap();
    assert_relative_eq!(b, -xi * xi / 12_000.0, max_relative = 1e-9);
}

/// With independent variance and price shocks, `E[BV | σ]` is known in closed
/// form per path: `N/(N-1) Σ sqrt(IV_i IV_{i-1})`. Averaging its deviation
/// from the path IV removes the return noise and isolates the bias law. The
/// variance is sub-stepped so it is close to continuous within each return.
#[test]
fn rao_blackwellised_bias_follows_the_law() {
    let p = HestonParams {
        kappa: 100.0,
        vbar: 0.04,
        xi: 2.0,
        rho: 0.0,
        v0: None,
    };
    let target = bv_bias(|_| p.vbar, |_| p.xi * p.vbar.sqrt(), 1, &[]).unwrap();
    for n in [1_000, 4_000, 16_000] {
        let spec = SimSpec::new(Model::Heston(p), n, 77).with_substeps(8);
        let scaled: Vec<f64> = Exec::Parallel.map(2_000, |id| {
            let path = simulate(&spec, id as u64).unwrap();
            let iv = &path.interval_variance;
            let nf = n as f64;
            let rb = nf / (nf - 1.0) * iv.windows(2).map(|w| (w[0] * w[1]).sqrt()).sum::<f64>();
            nf * (rb - path.true_iv)
        });
        let (m, se) = (mean(&scaled), std_error(&scaled));
        assert!(
            (m - target).abs() < 0.1 * target.abs() + 3.0 * se,
            "N={n}: {m} ± {se} vs {target}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sigma_star_is_homogeneous_of_degree_two(c in 0.1f64..10.0, s2 in 0.01f64..0.1, w2 in 0.0f64..1e-6) {
        let g = WeightFunction::triangular();
        let mc = McConfig { draws: 500, ..McConfig::default() };
        let a = sigma_star(|_| s2, w2, 1.0, &g, &mc, Exec::Sequential).unwrap();
        let b = sigma_star(|_| c * s2, c * w2, 1.0, &g, &mc, Exec::Sequential).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((b.matrix[i][j] - c * c * a.matrix[i][j]).abs() <= 1e-9 * c * c * a.matrix[i][j].abs());
            }
        }
    }

    #[test]
    fn bias_scales_inversely_with_n(n in 1usize..100_000, xi in 0.1f64..3.0) {
        let b1 = bv_bias(|_| 0.04, |_| xi * 0.2, 1, &[]).unwrap();
        let bn = bv_bias(|_| 0.04, |_| xi * 0.2, n, &[]).unwrap();
        prop_assert!((bn * n as f64 - b1).abs() <= 1e-12 * b1.abs());
    }
}
