use proptest::prelude::*;
use rmtk::ensembles::{esd, spiked_scm_tridiagonal};
use rmtk::extremes::{tw_cdf, TwOrder};
use rmtk::laws::{ks_values, Law, MpLaw, NormalLaw, SemicircleLaw};
use rmtk::massive::{channel_estimate_stats, state_evolution, MassiveProfile};
use rmtk::multiuser::{
    bigdfe_limit_sinr, limit_sinr_mmse_with_residual, limit_sinr_mrc, limit_sinr_zf, mmse_equal_power, IdcSchedule,
    SystemProfile,
};
use rmtk::nn::{hessian_density, HessianModelParams};
use rmtk::spiked::spike_map;
use rmtk::transforms::{stieltjes_mp, stieltjes_semicircle_scaled};
use rmtk::{poly, Field, Seed, C64};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn estimate_and_error_split_the_path_loss(beta in 1e-3f64..1e3, tau2 in 0.0f64..10.0) {
        let (v, dv) = channel_estimate_stats(beta, tau2);
        prop_assert!(v > 0.0 && dv >= 0.0);
        prop_assert!((v + dv - beta).abs() <= 1e-12 * beta);
    }

    #[test]
    fn mmse_dominates_linear_receivers(s in 0.1f64..100.0, c in 0.05f64..0.95) {
        let profile = SystemProfile::equal_power(c, 1.0, 1.0 / s, Field::Complex);
        let mmse = mmse_equal_power(s, c);
        prop_assert!(mmse >= limit_sinr_mrc(1.0, &profile).unwrap() * (1.0 - 1e-12));
        prop_assert!(mmse >= limit_sinr_zf(1.0, c, 1.0 / s).unwrap() * (1.0 - 1e-12));
        prop_assert!(mmse <= s);
    }

    #[test]
    fn mmse_fixed_point_residual(p1 in 0.1f64..10.0, p2 in 0.1f64..10.0, w in 0.05f64..0.95,
                                 c in 0.1f64..3.0, noise in 0.01f64..2.0) {
        let profile = SystemProfile {
            c,
            noise_power: noise,
            power_dist: vec![(p1, w), (p2, 1.0 - w)],
            field: Field::Real,
            fourth_moment: 3.0,
        };
        let (g, res) = limit_sinr_mmse_with_residual(p1, &profile).unwrap();
        prop_assert!(g > 0.0 && g <= p1 / noise);
        prop_assert!(res < 1e-10);
    }

    #[test]
    fn state_evolution_decreases_to_floor(xi in 1.0f64..100.0, omega in 0.2f64..2.0, eps in 0.05f64..0.45,
                                          b1 in 0.1f64..3.0, b2 in 0.1f64..3.0) {
        let p = MassiveProfile { xi, omega, epsilon: eps, c: 0.1, sigma_u2: 1.0, beta_samples: vec![b1, b2] };
        let se = state_evolution(&p, 5000, 1e-13).unwrap();
        prop_assert!(se.tau2.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
        prop_assert!(se.fixed_point >= p.noise_floor());
    }

    #[test]
    fn decision_feedback_improves_with_correlation(s in 0.5f64..50.0, c in 0.1f64..2.0,
                                                   r1 in 0.0f64..0.99, r2 in 0.0f64..0.99) {
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let g = bigdfe_limit_sinr(1.0, 1.0 / s, c, &IdcSchedule::new(vec![lo, hi]).unwrap()).unwrap();
        prop_assert!(g[1] >= g[0] * (1.0 - 1e-12));
        prop_assert!(g[1] <= s * (1.0 + 1e-12));
    }

    #[test]
    fn hessian_density_is_nonnegative(eps in 0.0f64..3.0, c in 0.05f64..0.95, x in -3.0f64..6.0) {
        let d = hessian_density(&HessianModelParams::new(eps, c), &[x], false).unwrap();
        prop_assert!(d.density[0] >= 0.0 && d.density[0].is_finite());
    }

    #[test]
    fn stieltjes_transforms_are_herglotz(x in -5.0f64..10.0, y in 1e-3f64..10.0, c in 0.05f64..3.0,
                                         sigma in 0.2f64..3.0) {
        let z = C64::new(x, y);
        for m in [stieltjes_mp(z, c).unwrap(), stieltjes_semicircle_scaled(z, sigma).unwrap()] {
            prop_assert!(m.im > 0.0);
            prop_assert!(m.norm() <= 1.0 / y * (1.0 + 1e-9));
        }
    }

    #[test]
    fn spike_map_is_increasing_above_threshold(c in 0.05f64..2.0, a in 0.0f64..5.0, d in 1e-3f64..5.0) {
        let alpha = 1.0 + c.sqrt() + a;
        let phi = spike_map(alpha, c).unwrap();
        prop_assert!(spike_map(alpha + d, c).unwrap() > phi);
        prop_assert!(phi >= MpLaw::new(c, 1.0).unwrap().edges().1 * (1.0 - 1e-12));
    }

    #[test]
    fn ks_lies_in_unit_interval(values in prop::collection::vec(-10.0f64..10.0, 1..200)) {
        let d = ks_values(&values, &NormalLaw::standard()).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / values.len() as f64 - 1e-12);
    }

    #[test]
    fn law_cdfs_are_monotone(c in 0.05f64..3.0, x in -1.0f64..8.0, dx in 1e-4f64..1.0) {
        let mp = MpLaw::new(c, 1.0).unwrap();
        prop_assert!(mp.cdf(x + dx) >= mp.cdf(x) - 1e-10);
        let sc = SemicircleLaw::new(1.0).unwrap();
        prop_assert!(sc.cdf(x - 3.0 + dx) >= sc.cdf(x - 3.0) - 1e-10);
    }

    #[test]
    fn tracy_widom_cdfs_are_monotone(t in -6.0f64..4.0, dt in 1e-3f64..1.0) {
        for order in [TwOrder::One, TwOrder::Two] {
            let (a, b) = (tw_cdf(t, order).unwrap(), tw_cdf(t + dt, order).unwrap());
            prop_assert!((0.0..=1.0).contains(&a) && b >= a - 1e-12);
        }
    }

    #[test]
    fn polynomial_roots_are_roots(coeffs in prop::collection::vec(-5.0f64..5.0, 2..6)) {
        let mut c: Vec<C64> = coeffs.iter().map(|&v| C64::new(v, 0.0)).collect();
        c.push(C64::new(1.0, 0.0));
        let scale: f64 = c.iter().map(|v| v.norm()).sum();
        for r in poly::roots(&c).unwrap() {
            let (p, _) = poly::eval(&c, r);
            prop_assert!(p.norm() <= 1e-8 * scale * r.norm().max(1.0).powi(c.len() as i32));
        }
    }
}

#[test]
fn tridiagonal_model_matches_dense_wishart() {
    // null and spiked sample covariance spectra agree in law with the dense construction
    for field in [Field::Real, Field::Complex] {
        for alpha in [1.0, 4.0] {
            let (big_n, n, trials) = (30, 60, 400);
            let tri: Vec<f64> = rmtk::rng::monte_carlo(Seed(1), trials, |r, _| {
                spiked_scm_tridiagonal(r, alpha, big_n, n, field).unwrap().max_eigenvalue()
            });
            let pop: Vec<f64> = (0..big_n).map(|i| if i == 0 { alpha } else { 1.0 }).collect();
            let dense: Vec<f64> = (0..trials)
                .map(|t| {
                    let s = rmtk::ensembles::gen_general_scm(&pop, n, field, Seed(1000 + t as u64)).unwrap();
                    esd(&s).unwrap().max()
                })
                .collect();
            let d = rmtk::laws::ks_two_sample(&tri, &dense).unwrap();
            // two-sample 1% critical value for 400 + 400 draws is about 0.115
            assert!(d < 0.115, "{field:?} alpha {alpha}: {d}");
        }
    }
}
