//! Eigenvalue-based spectrum sensing: observation model, detectors,
//! thresholds and detection curves.

use crate::error::{ensure, Error, Result};
use crate::extremes::{tw_quantile, TwOrder};
use crate::linalg::{FMat, Field};
use crate::rng::{self, Rng, Seed};
use crate::special::{normal_quantile, normal_sf};
use crate::spiked::spike_fluctuation_params_field;
use std::fmt;
use std::str::FromStr;

/// Sensing set-up. `K = 0` is the noise-only hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingScenario {
    pub antennas: usize,
    pub samples: usize,
    pub users: usize,
    /// Average received SNR per antenna, `σ_s² K / σ_u²`, in dB.
    pub snr_db: f64,
    pub noise_power: f64,
    /// Whether detectors that need `σ_u²` receive the true value.
    pub noise_known: bool,
    pub field: Field,
    pub seed: Seed,
}

impl SensingScenario {
    pub fn new(antennas: usize, samples: usize, users: usize, snr_db: f64, field: Field, seed: Seed) -> Self {
        SensingScenario { antennas, samples, users, snr_db, noise_power: 1.0, noise_known: true, field, seed }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.antennas >= 1 && self.samples >= 1, || "N and n must be positive".into())?;
        ensure(self.noise_power > 0.0, || "noise power must be positive".into())?;
        ensure(self.snr_db.is_finite(), || "SNR must be finite".into())
    }

    /// Same scenario under the noise-only hypothesis.
    pub fn null(&self) -> Self {
        SensingScenario { users: 0, ..*self }
    }

    /// Signal variance giving the configured per-antenna SNR.
    pub fn signal_power(&self) -> f64 {
        if self.users == 0 {
            return 0.0;
        }
        10f64.powf(self.snr_db / 10.0) * self.noise_power / self.users as f64
    }

    fn known_noise(&self) -> Option<f64> {
        self.noise_known.then_some(self.noise_power)
    }
}

/// Draws `X = H S + U` (or `X = U` when `K = 0`) with i.i.d. Gaussian
/// `H` (unit variance), `S` (variance `σ_s²`) and `U` (variance `σ_u²`).
pub fn simulate_from(rng: &mut Rng, sc: &SensingScenario) -> Result<FMat> {
    sc.validate()?;
    let (big_n, n) = (sc.antennas, sc.samples);
    let u = FMat::gaussian(rng, big_n, n, sc.field, sc.noise_power.sqrt());
    if sc.users == 0 {
        return Ok(u);
    }
    let h = FMat::gaussian(rng, big_n, sc.users, sc.field, 1.0);
    let s = FMat::gaussian(rng, sc.users, n, sc.field, sc.signal_power().sqrt());
    h.mul(&s)?.add(&u)
}

pub fn simulate_observation(sc: &SensingScenario) -> Result<FMat> {
    simulate_from(&mut sc.seed.rng(), sc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Detector {
    Ed,
    Med,
    Cnd,
    Eme,
    Agm,
    Msee,
}

impl Detector {
    pub const ALL: [Detector; 6] = [Detector::Ed, Detector::Med, Detector::Cnd, Detector::Eme, Detector::Agm, Detector::Msee];

    pub fn requires_noise_power(self) -> bool {
        matches!(self, Detector::Ed | Detector::Med)
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::Ed => "ed",
            Detector::Med => "med",
            Detector::Cnd => "cnd",
            Detector::Eme => "eme",
            Detector::Agm => "agm",
            Detector::Msee => "msee",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown detector '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSpec {
    pub kind: Detector,
    pub target_pfa: f64,
}

impl DetectorSpec {
    pub fn new(kind: Detector, target_pfa: f64) -> Result<Self> {
        check_pfa(target_pfa)?;
        Ok(DetectorSpec { kind, target_pfa })
    }

    pub fn requires_noise_power(&self) -> bool {
        self.kind.requires_noise_power()
    }
}

fn check_pfa(pfa: f64) -> Result<()> {
    ensure(pfa > 0.0 && pfa < 1.0, || format!("pfa = {pfa} outside (0, 1)"))
}

/// Test statistic of `kind` on the observation `X` (`N x n`), using the
/// eigenvalues of `(1/n) X X^H`.
pub fn statistic(x: &FMat, kind: Detector, sigma_u2: Option<f64>) -> Result<f64> {
    let (big_n, n) = (x.nrows(), x.ncols());
    ensure(big_n >= 1 && n >= 1, || "empty observation".into())?;
    let noise = if kind.requires_noise_power() {
        let s = sigma_u2.ok_or_else(|| Error::domain(format!("{kind} needs the noise power")))?;
        ensure(s > 0.0, || "noise power must be positive".into())?;
        s
    } else {
        1.0
    };
    let energy = x.frobenius_sq() / (n * big_n) as f64;
    if kind == Detector::Ed {
        return Ok(energy);
    }
    let ev = x.gram(1.0 / n as f64).eigenvalues_hermitian()?;
    let (lmin, lmax) = (ev[0], ev[big_n - 1]);
    let degenerate = lmin <= 1e-12 * lmax.max(f64::MIN_POSITIVE);
    let check = || {
        if degenerate {
            Err(Error::domain(format!("{kind} needs a positive smallest eigenvalue (got {lmin:.3e})")))
        } else {
            Ok(())
        }
    };
    match kind {
        Detector::Ed => unreachable!(),
        Detector::Med => Ok(lmax / noise),
        Detector::Cnd => {
            check()?;
            Ok(lmax / lmin)
        }
        Detector::Eme => {
            check()?;
            Ok(energy / lmin)
        }
        Detector::Agm => {
            check()?;
            let am = ev.iter().sum::<f64>() / big_n as f64;
            let log_gm = ev.iter().map(|v| v.ln()).sum::<f64>() / big_n as f64;
            Ok(am / log_gm.exp())
        }
        Detector::Msee => {
            check()?;
            Ok(0.5 * (lmax + lmin) / (lmax * lmin).sqrt())
        }
    }
}

/// Variance factor of the energy statistic under the noise-only hypothesis,
/// `Var(T)/σ_u⁴ · nN`.
fn energy_variance_factor(field: Field) -> f64 {
    match field {
        Field::Real => 2.0,
        Field::Complex => 1.0,
    }
}

/// `G(x) = 2x² - 1 + 2x√(x² - 1)` for `x ≥ 1`.
pub fn msee_g(x: f64) -> Result<f64> {
    ensure(x >= 1.0, || "G is defined for x >= 1".into())?;
    Ok(2.0 * x * x - 1.0 + 2.0 * x * (x * x - 1.0).sqrt())
}

/// Inverse of [`msee_g`]: `G⁻¹(y) = (y + 1)/(2√y)` for `y ≥ 1`.
pub fn msee_g_inv(y: f64) -> Result<f64> {
    ensure(y >= 1.0, || "G^-1 is defined for y >= 1".into())?;
    Ok((y + 1.0) / (2.0 * y.sqrt()))
}

/// Leading factor `(√n+√N)^{-2/3}(nN)^{-1/6}` of the edge correction.
fn edge_correction(big_n: usize, n: usize, p_up: f64, field: Field) -> Result<f64> {
    let (rn, rbig) = ((n as f64).sqrt(), (big_n as f64).sqrt());
    let q = tw_quantile(p_up, TwOrder::for_field(field))?;
    Ok(1.0 + (rn + rbig).powf(-2.0 / 3.0) / ((n * big_n) as f64).powf(1.0 / 6.0) * q)
}

/// Closed-form threshold for `kind`, in the units of [`statistic`].
///
/// ED scales with `σ_u²`; MED is already normalised by it. AGM has no
/// closed form.
pub fn threshold_analytic(kind: Detector, big_n: usize, n: usize, pfa: f64, field: Field, sigma_u2: Option<f64>) -> Result<f64> {
    check_pfa(pfa)?;
    ensure(big_n >= 1 && n >= 1, || "N and n must be positive".into())?;
    let (rn, rbig) = ((n as f64).sqrt(), (big_n as f64).sqrt());
    let nn = (n * big_n) as f64;
    let energy = 1.0 + (energy_variance_factor(field) / nn).sqrt() * normal_quantile(1.0 - pfa);
    let needs_small = matches!(kind, Detector::Cnd | Detector::Eme | Detector::Msee);
    if needs_small {
        ensure(big_n < n, || format!("{kind} threshold needs N < n"))?;
    }
    match kind {
        Detector::Ed => {
            let s = sigma_u2.ok_or_else(|| Error::domain("ED threshold needs the noise power"))?;
            ensure(s > 0.0, || "noise power must be positive".into())?;
            Ok(s * energy)
        }
        Detector::Med => Ok((rn + rbig).powi(2) / n as f64 * edge_correction(big_n, n, 1.0 - pfa, field)?),
        Detector::Cnd => Ok(cnd_threshold(big_n, n, pfa, field)?),
        Detector::Eme => Ok(energy * n as f64 / (rn - rbig).powi(2)),
        Detector::Msee => msee_g_inv(cnd_threshold(big_n, n, pfa, field)?),
        Detector::Agm => Err(Error::domain("AGM has no analytic threshold; use the Monte Carlo threshold")),
    }
}

fn cnd_threshold(big_n: usize, n: usize, pfa: f64, field: Field) -> Result<f64> {
    let (rn, rbig) = ((n as f64).sqrt(), (big_n as f64).sqrt());
    Ok((rn + rbig).powi(2) / (rn - rbig).powi(2) * edge_correction(big_n, n, 1.0 - pfa, field)?)
}

/// Statistics of `trials` independent draws of the scenario.
pub fn simulate_statistics(sc: &SensingScenario, kind: Detector, trials: usize) -> Result<Vec<f64>> {
    sc.validate()?;
    let noise = sc.known_noise();
    rng::monte_carlo(sc.seed, trials, |r, _| statistic(&simulate_from(r, sc)?, kind, noise))
    .into_iter()
    .collect()
}

/// Value exceeded by a fraction `pfa` of the noise-only statistics.
pub fn threshold_mc(
    kind: Detector,
    big_n: usize,
    n: usize,
    pfa: f64,
    trials: usize,
    seed: Seed,
    field: Field,
    sigma_u2: Option<f64>,
) -> Result<f64> {
    check_pfa(pfa)?;
    ensure(trials >= 1000, || "at least 1000 trials are needed".into())?;
    let mut sc = SensingScenario::new(big_n, n, 0, 0.0, field, seed);
    sc.noise_power = sigma_u2.unwrap_or(1.0);
    let mut t = simulate_statistics(&sc, kind, trials)?;
    t.sort_by(|a, b| a.total_cmp(b));
    Ok(upper_quantile(&t, pfa))
}

fn upper_quantile(sorted: &[f64], pfa: f64) -> f64 {
    let k = ((1.0 - pfa) * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
    pub pfa_se: f64,
    pub pd_se: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub detector: Detector,
    pub points: Vec<RocPoint>,
}

/// Binomial standard error of a proportion.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Where to place the operating points of a detection curve.
#[derive(Clone, Debug, PartialEq)]
pub enum RocGrid {
    Thresholds(Vec<f64>),
    /// Target false-alarm rates; thresholds are the matching empirical
    /// quantiles of the noise-only statistics.
    Pfa(Vec<f64>),
}

/// Empirical detection curve from `trials` draws under each hypothesis.
/// Points are ordered by increasing false-alarm rate.
pub fn roc(sc: &SensingScenario, kind: Detector, grid: &RocGrid, trials: usize) -> Result<RocCurve> {
    ensure(sc.users >= 1, || "the detection curve needs at least one active user".into())?;
    ensure(trials >= 1, || "trials must be positive".into())?;
    let mut h0 = simulate_statistics(&SensingScenario { seed: sc.seed.derive(0), ..sc.null() }, kind, trials)?;
    let h1 = simulate_statistics(&SensingScenario { seed: sc.seed.derive(1), ..*sc }, kind, trials)?;
    h0.sort_by(|a, b| a.total_cmp(b));
    let mut thresholds = match grid {
        RocGrid::Thresholds(t) => t.clone(),
        RocGrid::Pfa(p) => {
            for &v in p {
                check_pfa(v)?;
            }
            p.iter().map(|&v| upper_quantile(&h0, v)).collect()
        }
    };
    thresholds.sort_by(|a, b| b.total_cmp(a));
    let frac = |v: &[f64], g: f64| v.iter().filter(|&&s| s > g).count() as f64 / v.len() as f64;
    let points = thresholds
        .into_iter()
        .map(|g| {
            let (pfa, pd) = (frac(&h0, g), frac(&h1, g));
            RocPoint { threshold: g, pfa, pd, pfa_se: binomial_se(pfa, trials), pd_se: binomial_se(pd, trials), trials }
        })
        .collect();
    Ok(RocCurve { detector: kind, points })
}

/// Fraction of draws of the scenario whose statistic exceeds `gamma`.
pub fn empirical_rate(sc: &SensingScenario, kind: Detector, gamma: f64, trials: usize) -> Result<(f64, f64)> {
    let t = simulate_statistics(sc, kind, trials)?;
    let p = t.iter().filter(|&&s| s > gamma).count() as f64 / trials as f64;
    Ok((p, binomial_se(p, trials)))
}

/// Detection probability of the condition-number test for one active user,
/// treating `λ⁺` as Gaussian around the spike limit and `λ⁻` as its
/// deterministic limit `σ_u²(1 - √c)²`.
///
/// The spike is `τ₁ = 1 + N·snr`, the population eigenvalue produced by a
/// channel with `‖h‖² ≈ N`.
pub fn analytic_pd_single_pu(snr_db: f64, big_n: usize, n: usize, gamma: f64, field: Field) -> Result<f64> {
    ensure(big_n < n, || "analytic detection probability needs N < n".into())?;
    let c = big_n as f64 / n as f64;
    let tau1 = 1.0 + big_n as f64 * 10f64.powf(snr_db / 10.0);
    ensure(tau1 > 1.0 + c.sqrt(), || {
        format!("spike {tau1} is below the detectability threshold; use the Monte Carlo curve")
    })?;
    let (mu, v) = spike_fluctuation_params_field(tau1, c, field)?;
    let lmin = (1.0 - c.sqrt()).powi(2);
    let sd = v / (n as f64).sqrt();
    Ok(normal_sf((gamma * lmin - mu) / sd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{ks_values, MpLaw};

    fn diag_obs(d: &[f64]) -> FMat {
        // X with (1/n) X X^T = diag(d), n = N
        let n = d.len();
        FMat::from_real(n, n, |i, j| if i == j { (d[i] * n as f64).sqrt() } else { 0.0 })
    }

    #[test]
    fn statistics_on_simple_inputs() {
        let x = diag_obs(&[1.0, 1.0, 1.0]);
        for k in [Detector::Agm, Detector::Cnd, Detector::Msee] {
            assert!((statistic(&x, k, None).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((statistic(&diag_obs(&[4.0, 1.0]), Detector::Cnd, None).unwrap() - 4.0).abs() < 1e-12);
        let zero = FMat::from_real(3, 5, |_, _| 0.0);
        assert_eq!(statistic(&zero, Detector::Ed, Some(1.0)).unwrap(), 0.0);
        assert!(statistic(&zero, Detector::Cnd, None).is_err());
        assert!(statistic(&x, Detector::Med, None).is_err());
        let wide = FMat::from_real(4, 2, |i, j| (i + 2 * j) as f64);
        assert!(statistic(&wide, Detector::Eme, None).is_err());
    }

    #[test]
    fn msee_g_roundtrip() {
        assert_eq!(msee_g(1.0).unwrap(), 1.0);
        for y in [1.0, 2.25, 7.3] {
            assert!((msee_g(msee_g_inv(y).unwrap()).unwrap() - y).abs() < 1e-12);
        }
        // MSEE is G^-1 of CND
        let x = diag_obs(&[4.0, 2.0, 1.0]);
        let cnd = statistic(&x, Detector::Cnd, None).unwrap();
        let msee = statistic(&x, Detector::Msee, None).unwrap();
        assert!((msee - msee_g_inv(cnd).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn analytic_thresholds() {
        let ed = threshold_analytic(Detector::Ed, 20, 100, 0.05, Field::Real, Some(1.0)).unwrap();
        assert!((ed - (1.0 + (2.0f64 / 2000.0).sqrt() * 1.644_853_626_951_472_2)).abs() < 1e-9);
        assert!((ed - 1.05201).abs() < 1e-5);
        assert!((threshold_analytic(Detector::Ed, 20, 100, 0.05, Field::Real, Some(2.0)).unwrap() - 2.0 * ed).abs() < 1e-12);
        // leading CND factor
        let lead = (10.0f64 + 2.0).powi(2) / (10.0f64 - 2.0).powi(2);
        assert!((lead - 2.25).abs() < 1e-12);
        let cnd = threshold_analytic(Detector::Cnd, 4, 100, 0.1, Field::Real, None).unwrap();
        assert!(cnd > lead);
        assert!(threshold_analytic(Detector::Msee, 4, 100, 0.1, Field::Real, None).unwrap() >= 1.0);
        assert!(threshold_analytic(Detector::Agm, 4, 100, 0.1, Field::Real, None).is_err());
        assert!(threshold_analytic(Detector::Ed, 4, 100, 1.5, Field::Real, Some(1.0)).is_err());
    }

    #[test]
    fn null_observation_is_wishart() {
        let sc = SensingScenario::new(100, 1000, 0, 0.0, Field::Real, Seed(3));
        let x = simulate_observation(&sc).unwrap();
        let ev = x.gram(1e-3).eigenvalues_hermitian().unwrap();
        let law = MpLaw::new(0.1, 1.0).unwrap();
        assert!(ks_values(&ev, &law).unwrap() < 0.05);
        let y = simulate_observation(&sc).unwrap();
        assert!((0..100).all(|i| y.get(i, 7 * i % 1000) == x.get(i, 7 * i % 1000)));
    }

    #[test]
    fn strong_user_dominates() {
        let sc = SensingScenario::new(20, 400, 1, 10.0, Field::Complex, Seed(8));
        let ev = simulate_observation(&sc).unwrap().gram(1.0 / 400.0).eigenvalues_hermitian().unwrap();
        assert!(ev[19] > 10.0 * ev[18]);
    }

    #[test]
    fn scale_invariance() {
        let sc = SensingScenario::new(6, 40, 1, 0.0, Field::Real, Seed(2));
        let x = simulate_observation(&sc).unwrap();
        let mut y = x.clone();
        y.scale(3.7);
        for k in [Detector::Cnd, Detector::Agm, Detector::Msee] {
            let (a, b) = (statistic(&x, k, None).unwrap(), statistic(&y, k, None).unwrap());
            assert!((a - b).abs() < 1e-10 * a);
        }
        let (a, b) = (statistic(&x, Detector::Ed, Some(1.0)).unwrap(), statistic(&y, Detector::Ed, Some(1.0)).unwrap());
        assert!((b / a - 3.7 * 3.7).abs() < 1e-9);
    }

    #[test]
    fn roc_extremes() {
        let loud = SensingScenario::new(8, 200, 1, 10.0, Field::Real, Seed(4));
        let curve = roc(&loud, Detector::Cnd, &RocGrid::Pfa(vec![0.05, 0.1, 0.2]), 400).unwrap();
        assert!(curve.points.windows(2).all(|w| w[0].pfa <= w[1].pfa));
        assert!(curve.points.iter().all(|p| p.pd > 0.99));
        let quiet = SensingScenario::new(8, 200, 1, -40.0, Field::Real, Seed(4));
        let curve = roc(&quiet, Detector::Cnd, &RocGrid::Pfa(vec![0.2]), 2000).unwrap();
        let p = curve.points[0];
        assert!((p.pd - p.pfa).abs() < 4.0 * (p.pd_se + p.pfa_se));
    }

    #[test]
    fn mc_threshold_matches_energy_clt() {
        let mc = threshold_mc(Detector::Ed, 20, 100, 0.05, 20000, Seed(5), Field::Real, Some(1.0)).unwrap();
        let an = threshold_analytic(Detector::Ed, 20, 100, 0.05, Field::Real, Some(1.0)).unwrap();
        assert!((mc / an - 1.0).abs() < 0.005, "{mc} {an}");
    }

    #[test]
    fn analytic_pd_tails() {
        let hi = analytic_pd_single_pu(-5.0, 100, 1000, 1.0, Field::Real).unwrap();
        assert!(hi > 0.999_999);
        let lo = analytic_pd_single_pu(-5.0, 100, 1000, 1e6, Field::Real).unwrap();
        assert!(lo < 1e-12);
        assert!(analytic_pd_single_pu(-40.0, 100, 1000, 2.0, Field::Real).is_err());
    }
}
