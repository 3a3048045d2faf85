//! Spiked covariance models: outlier limits, phase transition and the
//! fluctuation of the largest sample eigenvalue.

use crate::ensembles::{gue_from, SpikeSpec};
use crate::error::{ensure, Error, Result};
use crate::extremes::{self, Extreme, TwOrder};
use crate::laws::{mp_pdf, mp_support};
use crate::linalg::Field;
use crate::quad;
use crate::rng::{self, Rng};
use std::ops::RangeInclusive;

/// Almost-sure limit `φ(α) = α + cα/(α - 1)` of a sample eigenvalue pulled
/// out by a population spike `α`.
pub fn spike_map(alpha: f64, c: f64) -> Result<f64> {
    ensure(alpha != 1.0, || "alpha = 1 is a pole of the spike map".into())?;
    ensure(alpha.is_finite() && c > 0.0, || "need finite alpha and c > 0".into())?;
    Ok(alpha + c * alpha / (alpha - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    SupercriticalHigh,
    Subcritical,
    SupercriticalLow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeRegime {
    pub alpha: f64,
    pub multiplicity: usize,
    pub regime: Regime,
    pub predicted_limit: f64,
    /// 1-based positions of the outliers in the descending sample spectrum.
    pub sample_indices: Option<RangeInclusive<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeClassification {
    /// Spikes sorted in decreasing order of `alpha`.
    pub regimes: Vec<SpikeRegime>,
    /// Number of exactly zero sample eigenvalues (`N - n` when `N > n`).
    pub zero_eigenvalues: usize,
    /// Set when `c > 1` and some limits below the top edge are not
    /// determined by the theory implemented here.
    pub partial: bool,
}

/// Splits spikes into those that escape the bulk and those that stay hidden,
/// with their limits and positions in the sorted sample spectrum.
///
/// Ties with the band `[1 - √c, 1 + √c]` count as subcritical.
pub fn classify_spikes(spikes: &SpikeSpec, c: f64, big_n: usize) -> Result<SpikeClassification> {
    spikes.validate()?;
    ensure(c > 0.0, || "c must be positive".into())?;
    let r = spikes.total();
    ensure(r <= big_n, || "more spikes than dimensions".into())?;
    let rc = c.sqrt();
    let mut order: Vec<usize> = (0..spikes.values.len()).collect();
    order.sort_by(|&a, &b| spikes.values[b].total_cmp(&spikes.values[a]));
    let (top, bottom) = ((1.0 + rc).powi(2), (1.0 - rc).powi(2));
    let mut before = 0;
    let mut regimes = Vec::with_capacity(order.len());
    let mut partial = false;
    for j in order {
        let alpha = spikes.values[j];
        let rj = spikes.multiplicities[j];
        let (regime, limit, idx) = if alpha > 1.0 + rc {
            (Regime::SupercriticalHigh, spike_map(alpha, c)?, Some(before + 1..=before + rj))
        } else if alpha < 1.0 - rc {
            let start = big_n - r + before;
            (Regime::SupercriticalLow, spike_map(alpha, c)?, Some(start + 1..=start + rj))
        } else {
            let limit = if alpha >= 1.0 { top } else { bottom };
            if c > 1.0 && alpha < 1.0 {
                partial = true;
            }
            (Regime::Subcritical, limit, None)
        };
        before += rj;
        regimes.push(SpikeRegime { alpha, multiplicity: rj, regime, predicted_limit: limit, sample_indices: idx });
    }
    let n = (big_n as f64 / c).round() as usize;
    Ok(SpikeClassification { regimes, zero_eigenvalues: big_n.saturating_sub(n), partial })
}

/// Mean `μ = φ(τ₁)` and scale `v = τ₁√(1 - c/(τ₁ - 1)²)` of the Gaussian
/// fluctuation `√n (λ⁺ - μ)/v` of a simple supercritical spike in the
/// complex case. For real data the scale is multiplied by `√2`.
pub fn spike_fluctuation_params(tau1: f64, c: f64) -> Result<(f64, f64)> {
    ensure(c > 0.0, || "c must be positive".into())?;
    ensure(tau1 > 1.0 + c.sqrt(), || {
        format!("tau1 = {tau1} is not above the threshold 1 + sqrt(c) = {}", 1.0 + c.sqrt())
    })?;
    let v = tau1 * (1.0 - c / (tau1 - 1.0).powi(2)).sqrt();
    Ok((spike_map(tau1, c)?, v))
}

/// As [`spike_fluctuation_params`] with the field-dependent scale.
pub fn spike_fluctuation_params_field(tau1: f64, c: f64, field: Field) -> Result<(f64, f64)> {
    let (mu, v) = spike_fluctuation_params(tau1, c)?;
    Ok((mu, if field == Field::Real { v * 2f64.sqrt() } else { v }))
}

/// Limit law of the largest sample eigenvalue of a complex spiked model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LargestLaw {
    /// `(λ⁺ - center)/scale ⇒ F₂`.
    TracyWidom { center: f64, scale: f64 },
    /// `√n (λ⁺ - mu)/v ⇒` largest eigenvalue of a `k x k` GUE
    /// (standard normal when `k = 1`).
    Gue { k: usize, mu: f64, v: f64, n: usize },
}

impl LargestLaw {
    /// Maps a sample eigenvalue to the variable with the limit law.
    pub fn standardize(&self, lambda: f64) -> f64 {
        match *self {
            LargestLaw::TracyWidom { center, scale } => (lambda - center) / scale,
            LargestLaw::Gue { mu, v, n, .. } => (n as f64).sqrt() * (lambda - mu) / v,
        }
    }

    /// Draws `λ⁺` from the limit law.
    pub fn sample(&self, rng: &mut Rng) -> Result<f64> {
        match *self {
            LargestLaw::TracyWidom { center, scale } => {
                Ok(center + scale * extremes::tw_sample(rng, TwOrder::Two)?)
            }
            LargestLaw::Gue { k, mu, v, n } => {
                let x = if k == 1 { rng::normal(rng) } else { gue_from(rng, k).max() };
                Ok(mu + v * x / (n as f64).sqrt())
            }
        }
    }
}

/// Selects the Tracy–Widom or GUE-type law for `λ⁺` given the top spike
/// `τ₁` of multiplicity `k`. Requires `N < n`.
pub fn bbp_largest_law(tau1: f64, k: usize, big_n: usize, n: usize) -> Result<LargestLaw> {
    ensure(big_n < n, || "the largest-eigenvalue law needs N < n".into())?;
    ensure(k >= 1, || "multiplicity must be positive".into())?;
    let c = big_n as f64 / n as f64;
    if tau1 < 1.0 + c.sqrt() {
        let s = extremes::wishart_extreme_scaling(big_n, n, Extreme::Max, Field::Complex)?;
        Ok(LargestLaw::TracyWidom { center: s.center, scale: s.scale })
    } else if tau1 > 1.0 + c.sqrt() {
        let (mu, v) = spike_fluctuation_params(tau1, c)?;
        Ok(LargestLaw::Gue { k, mu, v, n })
    } else {
        Err(Error::domain("tau1 sits exactly at the threshold; neither limit applies"))
    }
}

/// `m₃(λ) = ∫ x/(λ - x)² dF_MP(x; c)` for `λ` outside the support.
pub fn m3(lambda: f64, c: f64) -> Result<f64> {
    ensure(c > 0.0, || "c must be positive".into())?;
    let (a, b) = mp_support(c, 1.0)?;
    ensure(lambda > b || (lambda < a && lambda != 0.0) || (c >= 1.0 && lambda < 0.0), || {
        format!("lambda = {lambda} lies inside the support [{a}, {b}]")
    })?;
    // the atom at zero (c > 1) contributes nothing since x = 0 there
    quad::integrate_sqrt_edges(
        |x| x / (lambda - x).powi(2) * mp_pdf(x, c, 1.0).unwrap_or(0.0),
        a,
        b,
        1e-12,
    )
}

/// Scale factor `1/(1 + c m₃(φ(α)) α)` of the spike CLT.
pub fn clt_scale_factor(alpha: f64, c: f64) -> Result<f64> {
    let phi = spike_map(alpha, c)?;
    Ok(1.0 / (1.0 + c * m3(phi, c)? * alpha))
}
