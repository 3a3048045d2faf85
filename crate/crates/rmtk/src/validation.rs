//! Desk-scale acceptance checks. Each criterion compares simulations against
//! the corresponding closed form or fixed point and reports the measured
//! quantities next to their tolerances.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::{Mat, Side};

use crate::ensembles::{esd, gen_iid_matrix, gen_wigner, spiked_scm_tridiagonal};
use crate::error::{Error, Result};
use crate::extremes::{painleve2, wishart_extreme_scaling, Extreme, TwLaw, TwOrder};
use crate::laws::{ks_distance, ks_values, Law, MpLaw, NormalLaw, SemicircleLaw, TabulatedLaw};
use crate::linalg::{FMat, Field};
use crate::massive::{channel_estimate_stats, massive_gamma, state_evolution, MassiveProfile};
use crate::multiuser::{
    bigdfe_limit_sinr, bigdfe_simulate_adaptive, channel_from, limit_sinr_mmse, limit_sinr_mmse_with_residual,
    limit_sinr_mrc, limit_sinr_zf, mmse_equal_power, simulate_sinr, ChannelEntries, IdcSchedule, ReceiverKind,
    SystemProfile,
};
use crate::nn::{
    datacov_empirical, epsilon_c, eta_zeta, f_alpha, fitted_slope, hessian_density, hessian_sample,
    hessian_support_bounds, jacobian_empirical, jacobian_sweep, jacobian_theory, normalized_index, Activation,
    HessianModelParams, NetConfig, WeightEnsemble,
};
use crate::rng::{self, Seed};
use crate::sensing::{empirical_rate, threshold_analytic, threshold_mc, Detector, SensingScenario};
use crate::special::normal_cdf;
use crate::spiked::{spike_fluctuation_params_field, spike_map};
use crate::transforms::{
    density_from_s, free_multiply, r_transform, s_transform, stieltjes_from_r, stieltjes_mp, FreeSource,
};
use crate::C64;

/// Number of criteria.
pub const CRITERIA: u8 = 15;

/// Criteria expected to fail at the stated tolerances; see the README.
pub const KNOWN_FAILING: &[u8] = &[5, 7];

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Measured values with their bounds, `;`-separated.
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e4).contains(&a) {
        format!("{v:.5}")
    } else {
        format!("{v:.3e}")
    }
}

struct Checks {
    ok: bool,
    parts: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { ok: true, parts: Vec::new() }
    }

    fn check(&mut self, ok: bool, text: String) {
        self.ok &= ok;
        self.parts.push(if ok { text } else { format!("{text} !") });
    }

    fn below(&mut self, name: &str, value: f64, bound: f64) {
        self.check(value < bound, format!("{name} {} < {}", num(value), num(bound)));
    }

    fn above(&mut self, name: &str, value: f64, bound: f64) {
        self.check(value > bound, format!("{name} {} > {}", num(value), num(bound)));
    }

    fn near(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, format!("{name} {value:.7} vs {target} ± {}", num(tol)));
    }

    fn rel(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        let r = (value / target - 1.0).abs();
        self.check(r <= tol, format!("{name} {value:.4} vs {target:.4} ({:.1}% ≤ {:.0}%)", 100.0 * r, 100.0 * tol));
    }

    fn finish(self) -> (bool, String) {
        (self.ok, self.parts.join("; "))
    }
}

pub fn title(id: u8) -> Result<&'static str> {
    Ok(match id {
        1 => "semicircle law",
        2 => "Marchenko-Pastur law",
        3 => "no outliers",
        4 => "Tracy-Widom edge",
        5 => "spike map",
        6 => "spike CLT",
        7 => "detector calibration",
        8 => "limit SINRs",
        9 => "SINR CLT",
        10 => "BI-GDFE",
        11 => "massive connectivity",
        12 => "NN Jacobian",
        13 => "NN Hessian",
        14 => "NN data covariance",
        15 => "transform round trips",
        _ => return Err(Error::domain(format!("criteria are numbered 1..={CRITERIA}, got {id}"))),
    })
}

/// Runs criterion `id`. Errors are reported as failures.
pub fn run_criterion(id: u8, seed: Seed) -> Result<CriterionOutcome> {
    let title = title(id)?;
    let seed = seed.derive(id as u64);
    let start = Instant::now();
    let res = match id {
        1 => semicircle(seed),
        2 => marchenko_pastur(seed),
        3 => no_outliers(seed),
        4 => tracy_widom(seed),
        5 => spikes(seed),
        6 => spike_clt(seed),
        7 => detectors(seed),
        8 => limit_sinrs(seed),
        9 => sinr_clt(seed),
        10 => bigdfe(seed),
        11 => massive(),
        12 => nn_jacobian(seed),
        13 => nn_hessian(seed),
        14 => nn_datacov(seed),
        _ => transforms(seed),
    };
    let elapsed = start.elapsed();
    let (passed, mut detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    let limit = match id {
        1 => Some(10.0),
        4 => Some(120.0),
        _ => None,
    };
    let mut passed = passed;
    if let Some(l) = limit {
        let ok = elapsed.as_secs_f64() < l;
        passed &= ok;
        let _ = write!(detail, "; runtime {:.1} s < {l} s{}", elapsed.as_secs_f64(), if ok { "" } else { " !" });
    }
    Ok(CriterionOutcome { id, title, passed, detail, elapsed })
}

pub fn run_all(seed: Seed) -> Vec<CriterionOutcome> {
    (1..=CRITERIA).map(|id| run_criterion(id, seed).expect("valid criterion id")).collect()
}

type Outcome = Result<(bool, String)>;

fn semicircle(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let w = gen_wigner(2000, 1.0, Field::Real, seed)?;
    c.below("KS", ks_distance(&esd(&w)?, &SemicircleLaw::new(1.0)?)?, 0.03);
    Ok(c.finish())
}

fn marchenko_pastur(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    for (i, ratio) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let n = (1000.0 / ratio) as usize;
        let x = gen_iid_matrix(1000, n, Field::Real, seed.derive(i as u64))?;
        let s = esd(&x.gram(1.0 / n as f64))?;
        c.below(&format!("KS(c={ratio})"), ks_distance(&s, &MpLaw::new(ratio, 1.0)?)?, 0.03);
    }
    Ok(c.finish())
}

fn no_outliers(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let (a, b) = MpLaw::new(0.5, 1.0)?.edges();
    let inside: Vec<bool> = rng::monte_carlo(seed, 200, |r, _| {
        let t = spiked_scm_tridiagonal(r, 1.0, 1000, 2000, Field::Real).expect("valid sizes");
        t.min_eigenvalue() >= a - 0.1 && t.max_eigenvalue() <= b + 0.15
    });
    let frac = inside.iter().filter(|&&v| v).count() as f64 / 200.0;
    c.check(frac >= 0.99, format!("inside fraction {frac:.3} ≥ 0.99"));
    Ok(c.finish())
}

fn tracy_widom(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    c.below("Painlevé residual", painleve2().max_residual(), 1e-8);
    let sc = wishart_extreme_scaling(200, 400, Extreme::Max, Field::Complex)?;
    let x: Vec<f64> = rng::monte_carlo(seed, 2000, |r, _| {
        sc.standardize(spiked_scm_tridiagonal(r, 1.0, 200, 400, Field::Complex).expect("valid sizes").max_eigenvalue())
    });
    c.below("KS vs F2", ks_values(&x, &TwLaw { order: TwOrder::Two })?, 0.05);
    Ok(c.finish())
}

fn spikes(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    for (i, alpha) in [2.0, 3.0, 5.0].into_iter().enumerate() {
        let phi = spike_map(alpha, 0.5)?;
        let hits: Vec<bool> = rng::monte_carlo(seed.derive(i as u64), 100, |r, _| {
            let t = spiked_scm_tridiagonal(r, alpha, 2000, 4000, Field::Real).expect("valid sizes");
            (t.max_eigenvalue() - phi).abs() < 0.05
        });
        let frac = hits.iter().filter(|&&v| v).count() as f64 / 100.0;
        // fraction implied by the Gaussian fluctuations of λ⁺ at this size
        let (_, v) = spike_fluctuation_params_field(alpha, 0.5, Field::Real)?;
        let clt = 2.0 * normal_cdf(0.05 * 4000f64.sqrt() / v) - 1.0;
        c.check(frac >= 0.95, format!("α={alpha}: {frac:.2} within 0.05 of {phi:.3} (CLT predicts {clt:.2}) ≥ 0.95"));
    }
    let edge = MpLaw::new(0.5, 1.0)?.edges().1;
    let dev: Vec<f64> = rng::monte_carlo(seed.derive(9), 100, |r, _| {
        let t = spiked_scm_tridiagonal(r, 1.3, 2000, 4000, Field::Real).expect("valid sizes");
        (t.max_eigenvalue() - edge).abs()
    });
    c.below("α=1.3 max |λ - b|", dev.iter().copied().fold(0.0, f64::max), 0.1);
    Ok(c.finish())
}

fn spike_clt(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let (mu, v) = spike_fluctuation_params_field(3.0, 0.5, Field::Complex)?;
    let x: Vec<f64> = rng::monte_carlo(seed, 2000, |r, _| {
        let t = spiked_scm_tridiagonal(r, 3.0, 400, 800, Field::Complex).expect("valid sizes");
        800f64.sqrt() * (t.max_eigenvalue() - mu) / v
    });
    c.below("KS vs N(0,1)", ks_values(&x, &NormalLaw::standard())?, 0.05);
    Ok(c.finish())
}

fn detectors(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let (big_n, n, pfa, trials) = (20, 400, 0.1, 10_000);
    let field = Field::Real;
    let sc = SensingScenario::new(big_n, n, 0, 0.0, field, seed.derive(1));
    for kind in [Detector::Ed, Detector::Med, Detector::Cnd, Detector::Eme, Detector::Msee] {
        let gamma = threshold_analytic(kind, big_n, n, pfa, field, Some(1.0))?;
        let (p, _) = empirical_rate(&sc, kind, gamma, trials)?;
        c.check((0.075..=0.125).contains(&p), format!("{kind} Pfa {p:.4} in [0.075, 0.125]"));
    }
    let gamma = threshold_mc(Detector::Agm, big_n, n, pfa, trials, seed.derive(2), field, None)?;
    let (p, _) = empirical_rate(&sc, Detector::Agm, gamma, trials)?;
    c.check((0.09..=0.11).contains(&p), format!("AGM Pfa {p:.4} in [0.09, 0.11]"));
    Ok(c.finish())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn limit_sinrs(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let profile = SystemProfile::equal_power(0.5, 1.0, 0.1, Field::Real);
    let (mmse, residual) = limit_sinr_mmse_with_residual(1.0, &profile)?;
    let targets = [
        (ReceiverKind::Mrc, limit_sinr_mrc(1.0, &profile)?, 0.03),
        (ReceiverKind::Zf, limit_sinr_zf(1.0, 0.5, 0.1)?, 0.05),
        (ReceiverKind::Mmse, mmse, 0.03),
    ];
    for (i, (kind, target, tol)) in targets.into_iter().enumerate() {
        let sims = simulate_sinr(kind, 400, &profile, ChannelEntries::Gaussian, 50, seed.derive(i as u64))?;
        let all: Vec<f64> = sims.into_iter().flatten().collect();
        c.rel(&format!("{kind} mean"), mean(&all), target, tol);
    }
    c.near("MMSE limit", mmse, 5.74166, 1e-5);
    c.below("MMSE residual", residual, 1e-10);
    Ok(c.finish())
}

fn first_user_scaled(kind: ReceiverKind, field: Field, trials: usize, seed: Seed) -> Result<Vec<f64>> {
    let profile = SystemProfile::equal_power(0.5, 1.0, 0.1, field);
    let sims = simulate_sinr(kind, 400, &profile, ChannelEntries::Gaussian, trials, seed)?;
    Ok(sims.iter().map(|s| 20.0 * s[0]).collect())
}

fn sinr_clt(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let zf = variance(&first_user_scaled(ReceiverKind::Zf, Field::Real, 2000, seed.derive(1))?);
    c.rel("ZF real variance", zf, 100.0 * 2.0 * 0.5, 0.15);
    let re = variance(&first_user_scaled(ReceiverKind::Mmse, Field::Real, 2000, seed.derive(2))?);
    let co = variance(&first_user_scaled(ReceiverKind::Mmse, Field::Complex, 2000, seed.derive(3))?);
    c.rel("MMSE complex/real variance", co / re, 0.5, 0.2);
    Ok(c.finish())
}

fn bigdfe(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let (s, ratio) = (10.0, 0.5);
    let lim = bigdfe_limit_sinr(1.0, 1.0 / s, ratio, &IdcSchedule::new(vec![0.0, 0.999])?)?;
    c.near("ρ=0 vs MMSE", lim[0], mmse_equal_power(s, ratio), 1e-12);
    c.rel("ρ=0.999 vs p/σ²", lim[1], s, 0.01);
    let mut rng = seed.rng();
    let h = channel_from(&mut rng, 256, 256, Field::Complex, ChannelEntries::Gaussian);
    let its = bigdfe_simulate_adaptive(&h, 1.0, 1.0 / s, 5, 400, seed.derive(1))?;
    let mut worst: f64 = 0.0;
    for it in &its {
        let l = bigdfe_limit_sinr(1.0, 1.0 / s, 1.0, &IdcSchedule::new(vec![it.rho])?)?[0];
        worst = worst.max((it.measured_sinr / l - 1.0).abs());
    }
    c.below("N=K=256 worst relative gap", worst, 0.1);
    Ok(c.finish())
}

fn massive() -> Outcome {
    let mut c = Checks::new();
    let unit = MassiveProfile { xi: 10.0, omega: 1.0, epsilon: 0.5, c: 0.1, sigma_u2: 1.0, beta_samples: vec![1.0] };
    let tau2 = state_evolution(&unit, 10_000, 1e-15)?.fixed_point;
    // for β ≡ 1 the fixed point solves τ⁴ + 0.4τ² - 0.1 = 0
    c.near("τ² vs exact root", tau2, (-0.4 + 0.56f64.sqrt()) / 2.0, 1e-6);
    c.near("τ² vs 0.17417 to five digits", tau2, 0.17417, 5e-6);
    c.near("Γ", massive_gamma(&unit, 0.2)?.0, 54.1, 0.5);
    let betas = vec![0.5, 1.0, 2.0];
    let p = MassiveProfile { c: 2.0, beta_samples: betas.clone(), ..unit };
    let (g, _) = massive_gamma(&p, 0.0)?;
    let noise = p.c * betas.iter().map(|&b| channel_estimate_stats(b, 0.0).1).sum::<f64>() / 3.0;
    let sp = SystemProfile {
        c: 2.0,
        noise_power: noise.max(1e-300),
        power_dist: betas.iter().map(|&b| (channel_estimate_stats(b, 0.0).0, 1.0 / 3.0)).collect(),
        field: Field::Complex,
        fourth_moment: 2.0,
    };
    let mut worst: f64 = 0.0;
    for &b in &betas {
        let mu = limit_sinr_mmse(b, &sp)?;
        worst = worst.max((b * g - mu).abs());
    }
    c.below("τ²=0 vs multiuser MMSE", worst, 1e-6);
    Ok(c.finish())
}

fn nn_jacobian(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let lin = NetConfig::new(6, 200, 1.0, 0.0, WeightEnsemble::Orthogonal, Activation::linear());
    let s = jacobian_empirical(&lin, seed.derive(1))?;
    let dev = s.eigenvalues().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    c.below("linear orthogonal max |λ-1|", dev, 1e-10);
    let g = NetConfig::new(1, 1000, 1.0, 0.0, WeightEnsemble::Gaussian, Activation::linear());
    c.rel("linear Gaussian λmax", jacobian_empirical(&g, seed.derive(2))?.max(), 4.0, 0.05);
    let depths = [2usize, 4, 8, 16];
    let ls: Vec<f64> = depths.iter().map(|&l| l as f64).collect();
    let sweeps = [
        (WeightEnsemble::Gaussian, Activation::relu()),
        (WeightEnsemble::Orthogonal, Activation::hard_tanh()),
    ];
    for (i, (ens, act)) in sweeps.into_iter().enumerate() {
        let name = format!("{} {}", ens.name(), act.name());
        let cfg = NetConfig::critical(1, 1000, ens, act, 1.0)?;
        // λmax of a single draw is noisy; average three draws per depth
        let mut rows = jacobian_sweep(&cfg, &depths, seed.derive(10 + i as u64))?;
        for rep in 1..3u64 {
            let more = jacobian_sweep(&cfg, &depths, seed.derive(10 + i as u64).derive(rep))?;
            for (r, m) in rows.iter_mut().zip(more) {
                r.lambda_max += m.lambda_max;
                r.variance += m.variance;
            }
        }
        for r in rows.iter_mut() {
            r.lambda_max /= 3.0;
            r.variance /= 3.0;
        }
        let mut theory = Vec::with_capacity(depths.len());
        for &l in &depths {
            theory.push(jacobian_theory(&NetConfig { layers: l, ..cfg.clone() })?);
        }
        let el: Vec<f64> = rows.iter().map(|r| r.lambda_max).collect();
        let ev: Vec<f64> = rows.iter().map(|r| r.variance).collect();
        let tl: Vec<f64> = theory.iter().map(|t| t.0).collect();
        let tv: Vec<f64> = theory.iter().map(|t| t.1).collect();
        c.rel(&format!("{name} λmax slope"), fitted_slope(&ls, &el), fitted_slope(&ls, &tl), 0.2);
        c.rel(&format!("{name} variance slope"), fitted_slope(&ls, &ev), fitted_slope(&ls, &tv), 0.2);
    }
    Ok(c.finish())
}

fn nn_hessian(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    for (i, (e, ratio)) in [(1.0, 2.0 / 3.0), (1e-3, 1.0 / 3.0)].into_iter().enumerate() {
        let p = HessianModelParams::new(e, ratio);
        let s = hessian_sample(&p, 1500, seed.derive(i as u64))?;
        let (lo, hi) = hessian_support_bounds(&p, false);
        let grid: Vec<f64> = (0..=4000).map(|k| lo + (hi - lo) * k as f64 / 4000.0).collect();
        let d = hessian_density(&p, &grid, false)?;
        let law = TabulatedLaw::from_density(&grid, &d.density)?;
        c.below(&format!("KS(ε={e}, c={ratio:.3})"), ks_values(s.eigenvalues(), &law)?, 0.05);
    }
    for ratio in [0.25, 0.5] {
        let ec = epsilon_c(ratio, false, 1.0)?;
        let idx = normalized_index(&HessianModelParams::new(ec, ratio), false)?;
        c.below(&format!("index at ε_c(c={ratio})"), idx, 1e-3);
    }
    let p = HessianModelParams::new(0.0, 0.4);
    let grid: Vec<f64> = (1..60).map(|i| 0.05 * i as f64).collect();
    let d = hessian_density(&p, &grid, false)?;
    let mp = MpLaw::new(0.4, 1.0)?;
    let dev = grid.iter().zip(&d.density).map(|(x, y)| (y - mp.pdf(*x)).abs()).fold(0.0, f64::max);
    c.below("ε=0 max |ρ - MP|", dev, 1e-3);
    Ok(c.finish())
}

fn nn_datacov(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let (n0, xi) = (1000, 0.5);
    let m = (n0 as f64 / xi) as usize;
    let mp = MpLaw::new(xi, 1.0)?;
    let runs = [(1.0, 1, "f1 1 layer"), (1.0, 10, "f1 10 layers"), (-1.0, 10, "linear 10 layers")];
    for (i, (alpha, layers, name)) in runs.into_iter().enumerate() {
        let cfg = NetConfig::new(layers, n0, 1.0, 0.0, WeightEnsemble::Gaussian, f_alpha(alpha)?);
        let ks = ks_values(datacov_empirical(&cfg, n0, m, seed.derive(i as u64))?.eigenvalues(), &mp)?;
        match i {
            0 => c.below(name, ks, 0.05),
            1 => c.below(name, ks, 0.08),
            _ => c.above(name, ks, 0.2),
        }
    }
    c.near("ζ(α=0)", eta_zeta(&f_alpha(0.0)?, 1.0)?.1, 0.733, 0.002);
    c.near("ζ(α=1)", eta_zeta(&f_alpha(1.0)?, 1.0)?.1, 0.0, 1e-8);
    Ok(c.finish())
}

/// Eigenvalues of `A B` for Hermitian positive definite `A` via `Lᵀ B L`.
fn product_spectrum(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<f64>> {
    let l = a.llt(Side::Lower).map_err(|_| Error::Linalg("Cholesky of a Wishart factor".into()))?;
    let l = l.L().to_owned();
    let m = l.transpose() * b * &l;
    FMat::Real(m).hermitian_part().eigenvalues_hermitian()
}

fn transforms(seed: Seed) -> Outcome {
    let mut c = Checks::new();
    let ws: Vec<f64> = (0..=8).map(|i| -0.4 + 0.1 * i as f64).collect();
    let mut worst: f64 = 0.0;
    for ratio in [0.3, 1.0] {
        let s = s_transform(&FreeSource::Law(Arc::new(MpLaw::new(ratio, 1.0)?)))?;
        for &w in &ws {
            worst = worst.max((s.eval_real(w)? - 1.0 / (1.0 + ratio * w)).abs());
        }
    }
    c.below("numeric S vs closed form", worst, 1e-6);
    let mut worst: f64 = 0.0;
    let r = r_transform(&FreeSource::Law(Arc::new(SemicircleLaw::new(1.5)?)))?;
    for w in [-0.3, -0.1, 0.0, 0.2, 0.3] {
        worst = worst.max((r.eval_real(w)? - 2.25 * w).abs());
    }
    let r = r_transform(&FreeSource::Law(Arc::new(MpLaw::new(0.5, 1.0)?)))?;
    for w in [-0.3, 0.1, 0.3] {
        worst = worst.max((r.eval_real(w)? - 1.0 / (1.0 - 0.5 * w)).abs());
    }
    c.below("numeric R vs closed form", worst, 1e-6);
    let r = r_transform(&FreeSource::Mp { c: 0.5, sigma: 1.0 })?;
    let mut worst: f64 = 0.0;
    for z in [C64::new(0.5, 0.1), C64::new(2.0, 0.01), C64::new(4.0, 0.5), C64::new(-1.0, 1.0)] {
        worst = worst.max((stieltjes_from_r(&r, z, 3.0)? - stieltjes_mp(z, 0.5)?).norm());
    }
    c.below("Stieltjes from R vs closed form", worst, 1e-6);

    let mp = s_transform(&FreeSource::Mp { c: 0.5, sigma: 1.0 })?;
    let prod = free_multiply(&mp, &mp);
    let (big_n, n) = (500, 1000);
    let factor = |tag: u64| -> Result<Mat<f64>> {
        match gen_iid_matrix(big_n, n, Field::Real, seed.derive(tag))?.gram(1.0 / n as f64) {
            FMat::Real(m) => Ok(m),
            FMat::Complex(_) => unreachable!(),
        }
    };
    let eig = product_spectrum(&factor(1)?, &factor(2)?)?;
    let hi = eig.iter().copied().fold(0.0, f64::max) * 1.3;
    let grid: Vec<f64> = (0..=3000).map(|i| hi * i as f64 / 3000.0).collect();
    let d = density_from_s(&prod, &grid[1..], 1e-9, 4.0);
    if !d.is_complete() {
        return Err(Error::NoConvergence { what: "product density", iterations: d.failures.len(), residual: f64::NAN });
    }
    let mut dens = vec![0.0];
    dens.extend(&d.density);
    let law = TabulatedLaw::from_density(&grid, &dens)?;
    c.below("free product vs product Wishart KS", ks_values(&eig, &law)?, 0.05);
    Ok(c.finish())
}
