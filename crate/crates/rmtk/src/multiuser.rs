//! Linear multiuser receivers, their large-system SINR limits and
//! fluctuations, and the block-iterative decision-feedback receiver.

use crate::error::{ensure, Error, Result};
use crate::linalg::{FMat, Field};
use crate::rng::{self, Rng, Seed};
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use std::fmt;
use std::str::FromStr;

/// Large-system description: load `c = K/N`, noise power, discrete power
/// law and channel statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemProfile {
    pub c: f64,
    pub noise_power: f64,
    /// `(power, weight)` atoms of the received-power law.
    pub power_dist: Vec<(f64, f64)>,
    pub field: Field,
    /// `E|v|⁴` of the unnormalised channel entries.
    pub fourth_moment: f64,
}

impl SystemProfile {
    pub fn equal_power(c: f64, p: f64, noise_power: f64, field: Field) -> Self {
        let fourth_moment = match field {
            Field::Real => 3.0,
            Field::Complex => 2.0,
        };
        SystemProfile { c, noise_power, power_dist: vec![(p, 1.0)], field, fourth_moment }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.c > 0.0 && self.c.is_finite(), || "c must be positive".into())?;
        ensure(self.noise_power > 0.0, || "noise power must be positive".into())?;
        ensure(!self.power_dist.is_empty(), || "power law needs at least one atom".into())?;
        ensure(self.power_dist.iter().all(|&(p, w)| p > 0.0 && w >= 0.0), || {
            "powers must be positive and weights nonnegative".into()
        })?;
        let total: f64 = self.power_dist.iter().map(|a| a.1).sum();
        ensure((total - 1.0).abs() < 1e-9, || format!("power weights sum to {total}, not 1"))?;
        ensure(self.fourth_moment >= 1.0, || "fourth moment must be at least 1".into())
    }

    pub fn mean_power(&self) -> f64 {
        self.power_dist.iter().map(|&(p, w)| p * w).sum()
    }

    /// Powers of `k` users laid out in proportion to the weights.
    pub fn user_powers(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k);
        let mut acc = 0.0;
        for &(p, w) in &self.power_dist {
            acc += w;
            let upto = ((acc * k as f64).round() as usize).min(k);
            while out.len() < upto {
                out.push(p);
            }
        }
        while out.len() < k {
            out.push(self.power_dist.last().unwrap().0);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    Mrc,
    Zf,
    Mmse,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::Mrc, ReceiverKind::Zf, ReceiverKind::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Mrc => "mrc",
            ReceiverKind::Zf => "zf",
            ReceiverKind::Mmse => "mmse",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReceiverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown receiver '{s}'")))
    }
}

/// Per-iteration input-decision correlations.
#[derive(Clone, Debug, PartialEq)]
pub struct IdcSchedule {
    rho: Vec<f64>,
}

impl IdcSchedule {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        ensure(!rho.is_empty(), || "schedule is empty".into())?;
        ensure(rho.iter().all(|&r| (0.0..1.0).contains(&r)), || "every rho must lie in [0, 1)".into())?;
        Ok(IdcSchedule { rho })
    }

    pub fn preset() -> Self {
        IdcSchedule { rho: vec![0.0, 0.6, 0.9, 0.99] }
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
}

/// Statistics of the unnormalised channel entries `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelEntries {
    Gaussian,
    /// `±1` (real) or `(±1 ± i)/√2` (complex).
    Binary,
}

impl ChannelEntries {
    pub fn fourth_moment(self, field: Field) -> f64 {
        match (self, field) {
            (ChannelEntries::Gaussian, Field::Real) => 3.0,
            (ChannelEntries::Gaussian, Field::Complex) => 2.0,
            (ChannelEntries::Binary, _) => 1.0,
        }
    }
}

/// `N x K` channel with entries `v/√N`.
pub fn channel_from(rng: &mut Rng, big_n: usize, k: usize, field: Field, entries: ChannelEntries) -> FMat {
    let s = 1.0 / (big_n as f64).sqrt();
    match entries {
        ChannelEntries::Gaussian => FMat::gaussian(rng, big_n, k, field, s),
        ChannelEntries::Binary => {
            let sign = |r: &mut Rng| if rng::uniform(r) < 0.5 { -1.0 } else { 1.0 };
            match field {
                Field::Real => {
                    let v: Vec<f64> = (0..big_n * k).map(|_| s * sign(rng)).collect();
                    FMat::Real(Mat::from_fn(big_n, k, |i, j| v[i + j * big_n]))
                }
                Field::Complex => {
                    let t = s * std::f64::consts::FRAC_1_SQRT_2;
                    let v: Vec<C64> = (0..big_n * k).map(|_| C64::new(t * sign(rng), t * sign(rng))).collect();
                    FMat::Complex(Mat::from_fn(big_n, k, |i, j| v[i + j * big_n]))
                }
            }
        }
    }
}

trait Entry: Copy {
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn of(x: f64) -> Self;
}

impl Entry for f64 {
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn of(x: f64) -> Self {
        x
    }
}

impl Entry for C64 {
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn of(x: f64) -> Self {
        C64::new(x, 0.0)
    }
}

macro_rules! on_field {
    ($m:expr, |$a:ident| $body:expr) => {
        match $m {
            FMat::Real($a) => $body,
            FMat::Complex($a) => $body,
        }
    };
}

fn check_powers(h: &FMat, powers: &[f64], sigma_u2: f64) -> Result<()> {
    ensure(powers.len() == h.ncols(), || "one power per user is required".into())?;
    ensure(powers.iter().all(|&p| p > 0.0), || "powers must be positive".into())?;
    ensure(sigma_u2 > 0.0, || "noise power must be positive".into())
}

fn gram_inverse_diag<T: Entry + faer::traits::ComplexField>(g: &Mat<T>) -> Result<Vec<f64>> {
    let llt = g.llt(Side::Lower).map_err(|_| Error::domain("channel matrix is rank deficient"))?;
    let l = llt.L();
    let k = g.nrows();
    let dmax = (0..k).map(|i| l[(i, i)].abs2()).fold(0.0, f64::max);
    let dmin = (0..k).map(|i| l[(i, i)].abs2()).fold(f64::INFINITY, f64::min);
    ensure(dmin > 1e-12 * dmax, || "channel matrix is numerically rank deficient".into())?;
    let inv = llt.inverse();
    Ok((0..k).map(|i| inv[(i, i)].re()).collect())
}

/// Output SINR of every user for the given receiver, computed from the
/// `K x K` Gram matrix `H^H H`.
pub fn sinr_all(kind: ReceiverKind, h: &FMat, powers: &[f64], sigma_u2: f64) -> Result<Vec<f64>> {
    check_powers(h, powers, sigma_u2)?;
    let k = h.ncols();
    on_field!(h, |a| {
        let g = a.adjoint() * a;
        match kind {
            ReceiverKind::Mrc => Ok((0..k)
                .map(|i| {
                    let gii = g[(i, i)].re();
                    let interf: f64 = (0..k).filter(|&j| j != i).map(|j| powers[j] * g[(i, j)].abs2()).sum();
                    powers[i] * gii * gii / (interf + gii * sigma_u2)
                })
                .collect()),
            ReceiverKind::Zf => {
                ensure(h.nrows() >= k, || "zero forcing needs N >= K".into())?;
                let d = gram_inverse_diag(&g)?;
                Ok((0..k).map(|i| powers[i] / (sigma_u2 * d[i])).collect())
            }
            ReceiverKind::Mmse => {
                let q = mmse_q_diag(&g, powers, sigma_u2);
                Ok((0..k).map(|i| powers[i] * q[i] / (1.0 - powers[i] * q[i])).collect())
            }
        }
    })
}

// Q = H^H R^{-1} H = G (D G + σ² I)^{-1}; returns Re diag(Q)
fn mmse_q_diag<T: Entry + faer::traits::ComplexField>(g: &Mat<T>, powers: &[f64], sigma_u2: f64) -> Vec<f64> {
    let k = g.nrows();
    let mut m = Mat::from_fn(k, k, |i, j| g[(i, j)].clone() * T::of(powers[i]));
    for i in 0..k {
        m[(i, i)] = m[(i, i)].clone() + T::of(sigma_u2);
    }
    // Q^H = (DG + σ²I)^{-H} G, so diag(Q) = conj(diag of the solve)
    let x = m.adjoint().to_owned().partial_piv_lu().solve(g);
    (0..k).map(|i| x[(i, i)].re()).collect()
}

/// Receiver matrix `W` (`N x K`) whose column `k` extracts user `k`.
pub fn build_receiver(kind: ReceiverKind, h: &FMat, powers: &[f64], sigma_u2: f64) -> Result<FMat> {
    check_powers(h, powers, sigma_u2)?;
    let (n, k) = (h.nrows(), h.ncols());
    Ok(match h {
        FMat::Real(a) => FMat::Real(build_receiver_typed(kind, a, powers, sigma_u2, n, k)?),
        FMat::Complex(a) => FMat::Complex(build_receiver_typed(kind, a, powers, sigma_u2, n, k)?),
    })
}

fn build_receiver_typed<T: Entry + faer::traits::ComplexField>(
    kind: ReceiverKind,
    a: &Mat<T>,
    powers: &[f64],
    sigma_u2: f64,
    n: usize,
    k: usize,
) -> Result<Mat<T>> {
    match kind {
        ReceiverKind::Mrc => {
            let mut w = a.clone();
            for j in 0..k {
                let nrm: f64 = (0..n).map(|i| a[(i, j)].abs2()).sum();
                for i in 0..n {
                    w[(i, j)] = a[(i, j)].clone() * T::of(1.0 / nrm);
                }
            }
            Ok(w)
        }
        ReceiverKind::Zf => {
            ensure(n >= k, || "zero forcing needs N >= K".into())?;
            let g = a.adjoint() * a;
            gram_inverse_diag(&g)?;
            let inv = g.llt(Side::Lower).map_err(|_| Error::domain("channel matrix is rank deficient"))?.inverse();
            Ok(a * &inv)
        }
        ReceiverKind::Mmse => {
            let hd = Mat::from_fn(n, k, |i, j| a[(i, j)].clone() * T::of(powers[j]));
            let mut r = &hd * a.adjoint();
            for i in 0..n {
                r[(i, i)] = r[(i, i)].clone() + T::of(sigma_u2);
            }
            let llt = r.llt(Side::Lower).map_err(|_| Error::Linalg("MMSE matrix not positive definite".into()))?;
            Ok(llt.solve(&hd))
        }
    }
}

/// MMSE extractor in the interference-only form
/// `p_k R_k^{-1} h_k / (1 + p_k h_k^H R_k^{-1} h_k)` with `R_k` built from
/// the other users.
pub fn mmse_receiver_excluding(h: &FMat, powers: &[f64], sigma_u2: f64) -> Result<Mat<C64>> {
    check_powers(h, powers, sigma_u2)?;
    let a = h.to_complex();
    let (n, k) = (a.nrows(), a.ncols());
    let mut w = Mat::<C64>::zeros(n, k);
    for u in 0..k {
        let mut r = Mat::<C64>::from_fn(n, n, |i, j| if i == j { C64::new(sigma_u2, 0.0) } else { C64::new(0.0, 0.0) });
        for j in (0..k).filter(|&j| j != u) {
            for c in 0..n {
                let hc = a[(c, j)].conj() * powers[j];
                for rr in 0..n {
                    r[(rr, c)] += a[(rr, j)] * hc;
                }
            }
        }
        let hk = Mat::from_fn(n, 1, |i, _| a[(i, u)]);
        let y = r.llt(Side::Lower).map_err(|_| Error::Linalg("interference matrix".into()))?.solve(&hk);
        let q: C64 = (0..n).map(|i| a[(i, u)].conj() * y[(i, 0)]).sum();
        let scale = powers[u] / (1.0 + powers[u] * q.re);
        for i in 0..n {
            w[(i, u)] = y[(i, 0)] * scale;
        }
    }
    Ok(w)
}

/// SINR of user `k` for an arbitrary extractor matrix `W`.
pub fn output_sinr(w: &FMat, h: &FMat, powers: &[f64], sigma_u2: f64, k: usize) -> Result<f64> {
    check_powers(h, powers, sigma_u2)?;
    ensure(w.nrows() == h.nrows() && w.ncols() == h.ncols(), || "W and H shapes differ".into())?;
    ensure(k < h.ncols(), || "user index out of range".into())?;
    let n = h.nrows();
    let proj = |j: usize| -> C64 { (0..n).map(|i| w.get(i, k).conj() * h.get(i, j)).sum() };
    let num = powers[k] * proj(k).norm_sqr();
    ensure(num > 0.0, || format!("user {k} receives no signal through W"))?;
    let interf: f64 = (0..h.ncols()).filter(|&j| j != k).map(|j| powers[j] * proj(j).norm_sqr()).sum();
    let wn: f64 = (0..n).map(|i| w.get(i, k).norm_sqr()).sum();
    Ok(num / (interf + sigma_u2 * wn))
}

/// Large-system SINR of the matched filter.
pub fn limit_sinr_mrc(p_k: f64, profile: &SystemProfile) -> Result<f64> {
    profile.validate()?;
    Ok(p_k / (profile.c * profile.mean_power() + profile.noise_power))
}

/// Large-system SINR of zero forcing: `(p/σ²)(1 - c)` below full load, 0 above.
pub fn limit_sinr_zf(p_k: f64, c: f64, sigma_u2: f64) -> Result<f64> {
    ensure(c > 0.0 && sigma_u2 > 0.0 && p_k > 0.0, || "need p, c, σ² > 0".into())?;
    Ok(if c < 1.0 { p_k / sigma_u2 * (1.0 - c) } else { 0.0 })
}

/// Equal-power MMSE limit as a function of `s = p/σ²`.
pub fn mmse_equal_power(s: f64, c: f64) -> f64 {
    (1.0 - c) * s / 2.0 - 0.5 + ((1.0 - c).powi(2) * s * s / 4.0 + (1.0 + c) * s / 2.0 + 0.25).sqrt()
}

fn mmse_map(gamma: f64, p_k: f64, profile: &SystemProfile) -> f64 {
    let interf: f64 = profile.power_dist.iter().map(|&(p, w)| w * p_k * p / (p_k + p * gamma)).sum();
    p_k / (profile.noise_power + profile.c * interf)
}

/// Solution and residual of the MMSE fixed point.
pub fn limit_sinr_mmse_with_residual(p_k: f64, profile: &SystemProfile) -> Result<(f64, f64)> {
    profile.validate()?;
    ensure(p_k > 0.0, || "power must be positive".into())?;
    // the map is increasing and bounded by p/σ², so iteration from 0 climbs
    // monotonically to the unique positive root
    let mut g = 0.0;
    for _ in 0..100_000 {
        let next = 0.5 * g + 0.5 * mmse_map(g, p_k, profile);
        if (next - g).abs() <= 1e-15 * next.max(1.0) {
            g = next;
            break;
        }
        g = next;
    }
    let mut residual = (g - mmse_map(g, p_k, profile)).abs();
    if residual >= 1e-10 {
        // bracket [0, p/σ²] and bisect
        let (mut lo, mut hi) = (0.0, p_k / profile.noise_power);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mmse_map(mid, p_k, profile) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        g = 0.5 * (lo + hi);
        residual = (g - mmse_map(g, p_k, profile)).abs();
    }
    if residual >= 1e-10 {
        return Err(Error::NoConvergence { what: "MMSE fixed point", iterations: 100_000, residual });
    }
    Ok((g, residual))
}

/// Large-system SINR of the MMSE receiver for a user of power `p_k`.
pub fn limit_sinr_mmse(p_k: f64, profile: &SystemProfile) -> Result<f64> {
    Ok(limit_sinr_mmse_with_residual(p_k, profile)?.0)
}

/// Mean and variance of the `√N`-scaled ZF SINR fluctuation (real field).
pub fn clt_params_zf(p1: f64, sigma_u2: f64, c: f64, fourth_moment: f64) -> Result<(f64, f64)> {
    ensure(c > 0.0 && c < 1.0, || "the ZF fluctuation law needs 0 < c < 1".into())?;
    ensure(p1 > 0.0 && sigma_u2 > 0.0, || "need p, σ² > 0".into())?;
    let s = p1 / sigma_u2;
    let a = 2.0 * (1.0 - c) + (fourth_moment - 3.0) * (1.0 - c).powi(2);
    Ok((s * (1.0 - c), s * s * a))
}

/// Mean and variance of the `√N`-scaled equal-power MMSE SINR fluctuation.
/// The complex-field variance is half the real one.
pub fn clt_params_mmse(p: f64, sigma_u2: f64, c: f64, fourth_moment: f64, field: Field) -> Result<(f64, f64)> {
    ensure(c > 0.0 && p > 0.0 && sigma_u2 > 0.0, || "need p, c, σ² > 0".into())?;
    let g = mmse_equal_power(p / sigma_u2, c);
    let b = 2.0 * g * (1.0 + g).powi(2) / (sigma_u2 / p * (1.0 + g).powi(2) + c) + (fourth_moment - 3.0) * g * g;
    Ok((g, if field == Field::Complex { b / 2.0 } else { b }))
}

/// Large-system SINR of the decision-feedback receiver at each iteration:
/// `g((1 - ρ²)p)/(1 - ρ²)` with `g` the equal-power MMSE limit.
pub fn bigdfe_limit_sinr(p: f64, sigma_u2: f64, c: f64, schedule: &IdcSchedule) -> Result<Vec<f64>> {
    ensure(p > 0.0 && sigma_u2 > 0.0 && c > 0.0, || "need p, c, σ² > 0".into())?;
    Ok(schedule
        .rho()
        .iter()
        .map(|&r| {
            let f = 1.0 - r * r;
            mmse_equal_power(f * p / sigma_u2, c) / f
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BigdfeIteration {
    pub rho: f64,
    /// Mean over users of `|A_kk|² p / R_kk`.
    pub formula_sinr: f64,
    /// Mean over users of the SINR measured on transmitted symbols.
    pub measured_sinr: f64,
    /// Correlation between the symbols and this iteration's decisions.
    pub realized_rho: f64,
    pub symbol_error_rate: f64,
}

fn qpsk(rng: &mut Rng, amp: f64) -> C64 {
    let b = |r: &mut Rng| if rng::uniform(r) < 0.5 { -amp } else { amp };
    C64::new(b(rng), b(rng))
}

fn qpsk_decide(x: C64, amp: f64) -> C64 {
    C64::new(if x.re >= 0.0 { amp } else { -amp }, if x.im >= 0.0 { amp } else { -amp })
}

/// Runs the block-iterative decision-feedback receiver on QPSK blocks of
/// length `symbols`. Iteration `l` uses `schedule[l]` as the correlation of
/// the previous decisions.
pub fn bigdfe_simulate(
    h: &FMat,
    p: f64,
    sigma_u2: f64,
    schedule: &IdcSchedule,
    symbols: usize,
    seed: Seed,
) -> Result<Vec<BigdfeIteration>> {
    let rho = schedule.rho();
    bigdfe_run(h, p, sigma_u2, rho.len(), symbols, seed, |l, _| rho[l])
}

/// Like [`bigdfe_simulate`], but iteration `l > 0` uses the correlation
/// realized by the decisions of iteration `l - 1`.
pub fn bigdfe_simulate_adaptive(
    h: &FMat,
    p: f64,
    sigma_u2: f64,
    iterations: usize,
    symbols: usize,
    seed: Seed,
) -> Result<Vec<BigdfeIteration>> {
    bigdfe_run(h, p, sigma_u2, iterations, symbols, seed, |_, prev| prev.unwrap_or(0.0).clamp(0.0, 0.999_999))
}

fn bigdfe_run(
    h: &FMat,
    p: f64,
    sigma_u2: f64,
    iterations: usize,
    symbols: usize,
    seed: Seed,
    next_rho: impl Fn(usize, Option<f64>) -> f64,
) -> Result<Vec<BigdfeIteration>> {
    ensure(p > 0.0 && sigma_u2 > 0.0, || "need p, σ² > 0".into())?;
    ensure(symbols >= 1, || "need at least one symbol".into())?;
    let a = h.to_complex();
    let (n, k) = (a.nrows(), a.ncols());
    let mut rng = seed.rng();
    let amp = (p / 2.0).sqrt();
    let mut s = Mat::<C64>::zeros(k, symbols);
    for j in 0..symbols {
        for i in 0..k {
            s[(i, j)] = qpsk(&mut rng, amp);
        }
    }
    let noise = FMat::gaussian(&mut rng, n, symbols, Field::Complex, sigma_u2.sqrt()).to_complex();
    let x = &a * &s + &noise;
    let hh = &a * a.adjoint();
    let mut prev = Mat::<C64>::zeros(k, symbols);
    let mut out: Vec<BigdfeIteration> = Vec::with_capacity(iterations);
    for l in 0..iterations {
        let rho = next_rho(l, out.last().map(|it| it.realized_rho));
        let f2 = 1.0 - rho * rho;
        let mut m = Mat::from_fn(n, n, |i, j| hh[(i, j)] * f2);
        for i in 0..n {
            m[(i, i)] += C64::new(sigma_u2 / p, 0.0);
        }
        let f = m.llt(Side::Lower).map_err(|_| Error::Linalg("feed-forward matrix".into()))?.solve(&a);
        let b = f.adjoint() * &a;
        let diff = Mat::from_fn(k, k, |i, j| if i == j { C64::new(0.0, 0.0) } else { -b[(i, j)] });
        let ff = f.adjoint() * &f;
        let dd = &diff * diff.adjoint();
        let formula: f64 = (0..k)
            .map(|i| b[(i, i)].norm_sqr() * p / (p * f2 * dd[(i, i)].re + sigma_u2 * ff[(i, i)].re))
            .sum::<f64>()
            / k as f64;
        // ŝ = F^H x + ρ (A - F^H H) s̄
        let fb = &diff * &prev;
        let est = f.adjoint() * &x + Mat::from_fn(k, symbols, |i, j| fb[(i, j)] * rho);
        let mut measured = 0.0;
        let mut corr = 0.0;
        let mut errors = 0usize;
        let mut decisions = Mat::<C64>::zeros(k, symbols);
        for i in 0..k {
            let aii = b[(i, i)];
            let mut err = 0.0;
            for j in 0..symbols {
                err += (est[(i, j)] - aii * s[(i, j)]).norm_sqr();
                let d = qpsk_decide(est[(i, j)], amp);
                decisions[(i, j)] = d;
                corr += (s[(i, j)] * d.conj()).re;
                if d != s[(i, j)] {
                    errors += 1;
                }
            }
            measured += aii.norm_sqr() * p / (err / symbols as f64);
        }
        let total = (k * symbols) as f64;
        out.push(BigdfeIteration {
            rho,
            formula_sinr: formula,
            measured_sinr: measured / k as f64,
            realized_rho: corr / (total * p),
            symbol_error_rate: errors as f64 / total,
        });
        prev = decisions;
    }
    Ok(out)
}

/// SINRs of all users over `trials` independent channels.
pub fn simulate_sinr(
    kind: ReceiverKind,
    big_n: usize,
    profile: &SystemProfile,
    entries: ChannelEntries,
    trials: usize,
    seed: Seed,
) -> Result<Vec<Vec<f64>>> {
    profile.validate()?;
    let k = ((profile.c * big_n as f64).round() as usize).max(1);
    let powers = profile.user_powers(k);
    rng::monte_carlo(seed, trials, |r, _| {
        let h = channel_from(r, big_n, k, profile.field, entries);
        sinr_all(kind, &h, &powers, profile.noise_power)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_h(n: usize, k: usize, field: Field, seed: u64) -> FMat {
        channel_from(&mut Seed(seed).rng(), n, k, field, ChannelEntries::Gaussian)
    }

    #[test]
    fn single_user_receivers_agree() {
        for field in [Field::Real, Field::Complex] {
            let h = random_h(8, 1, field, 1);
            let s: Vec<f64> = ReceiverKind::ALL
                .iter()
                .map(|&k| sinr_all(k, &h, &[2.0], 0.5).unwrap()[0])
                .collect();
            assert!((s[0] - s[1]).abs() < 1e-10 * s[0] && (s[0] - s[2]).abs() < 1e-10 * s[0]);
            let nrm: f64 = (0..8).map(|i| h.get(i, 0).norm_sqr()).sum();
            assert!((s[0] - 2.0 * nrm / 0.5).abs() < 1e-10 * s[0]);
        }
    }

    #[test]
    fn closed_forms_match_output_sinr() {
        let h = random_h(12, 5, Field::Complex, 2);
        let p = [1.0, 2.0, 0.5, 1.5, 3.0];
        for kind in ReceiverKind::ALL {
            let w = build_receiver(kind, &h, &p, 0.3).unwrap();
            let fast = sinr_all(kind, &h, &p, 0.3).unwrap();
            for k in 0..5 {
                let direct = output_sinr(&w, &h, &p, 0.3, k).unwrap();
                assert!((direct - fast[k]).abs() < 1e-9 * direct, "{kind} {k}");
            }
            // ratio invariance
            let mut w2 = w.clone();
            w2.scale(-4.5);
            assert!((output_sinr(&w2, &h, &p, 0.3, 2).unwrap() - fast[2]).abs() < 1e-9 * fast[2]);
        }
    }

    #[test]
    fn mmse_forms_agree() {
        let h = random_h(10, 4, Field::Real, 3);
        let p = [1.0, 0.4, 2.0, 1.1];
        let a = build_receiver(ReceiverKind::Mmse, &h, &p, 0.2).unwrap().to_complex();
        let b = mmse_receiver_excluding(&h, &p, 0.2).unwrap();
        let x = Mat::from_fn(10, 1, |i, _| C64::new((i as f64).sin(), (i as f64).cos()));
        let (ya, yb) = (a.adjoint() * &x, b.adjoint() * &x);
        for k in 0..4 {
            assert!((ya[(k, 0)] - yb[(k, 0)]).norm() < 1e-10);
        }
    }

    #[test]
    fn zf_rank_checks_and_orthogonal_columns() {
        assert!(sinr_all(ReceiverKind::Zf, &random_h(3, 5, Field::Real, 4), &[1.0; 5], 0.1).is_err());
        let dup = FMat::from_real(4, 2, |i, _| i as f64 + 1.0);
        assert!(build_receiver(ReceiverKind::Zf, &dup, &[1.0, 1.0], 0.1).is_err());
        // orthogonal columns: ZF equals normalised MRC
        let h = FMat::from_real(4, 2, |i, j| if i == j { 2.0 } else { 0.0 });
        let zf = build_receiver(ReceiverKind::Zf, &h, &[1.0, 1.0], 0.1).unwrap();
        let mrc = build_receiver(ReceiverKind::Mrc, &h, &[1.0, 1.0], 0.1).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                assert!((zf.get(i, j) - mrc.get(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn limits() {
        let prof = SystemProfile::equal_power(0.5, 1.0, 0.1, Field::Real);
        assert!((limit_sinr_mrc(1.0, &prof).unwrap() - 1.0 / 0.6).abs() < 1e-12);
        assert!((limit_sinr_zf(1.0, 0.5, 0.1).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(limit_sinr_zf(1.0, 1.0, 0.1).unwrap(), 0.0);
        let (g, res) = limit_sinr_mmse_with_residual(1.0, &prof).unwrap();
        assert!(res < 1e-10);
        assert!((g - (2.0 + 14f64.sqrt())).abs() < 1e-9);
        assert!((mmse_equal_power(10.0, 0.5) - 5.741_657_386_773_941).abs() < 1e-12);
        let tiny = SystemProfile::equal_power(1e-9, 1.0, 0.1, Field::Real);
        assert!((limit_sinr_mrc(1.0, &tiny).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn two_class_fixed_point_is_unique_root() {
        let prof = SystemProfile { c: 0.5, noise_power: 0.1, power_dist: vec![(1.0, 0.5), (4.0, 0.5)], field: Field::Real, fourth_moment: 3.0 };
        for pk in [1.0, 4.0] {
            let (g, res) = limit_sinr_mmse_with_residual(pk, &prof).unwrap();
            assert!(res < 1e-10);
            // sign change across the root only
            let f = |x: f64| x - mmse_map(x, pk, &prof);
            assert!(f(0.0) < 0.0 && f(g * 0.999) < 0.0 && f(g * 1.001) > 0.0 && f(pk / 0.1) >= 0.0);
        }
    }

    #[test]
    fn ordering_of_limits() {
        for c in [0.1, 0.3, 0.5, 0.8, 0.95] {
            for s in [0.1, 1.0, 10.0, 100.0] {
                let prof = SystemProfile::equal_power(c, s, 1.0, Field::Real);
                let m = limit_sinr_mmse(s, &prof).unwrap();
                assert!(limit_sinr_mrc(s, &prof).unwrap() <= m + 1e-12);
                assert!(limit_sinr_zf(s, c, 1.0).unwrap() <= m + 1e-12);
            }
        }
    }

    #[test]
    fn clt_constants() {
        let (m, v) = clt_params_zf(1.0, 0.1, 0.5, 3.0).unwrap();
        assert!((m - 5.0).abs() < 1e-12 && (v - 100.0).abs() < 1e-9);
        assert!(clt_params_zf(1.0, 0.1, 1.0, 3.0).is_err());
        let (g, b) = clt_params_mmse(1.0, 0.1, 0.5, 3.0, Field::Real).unwrap();
        let direct = 2.0 * g * (1.0 + g) * (1.0 + g) / (0.1 * (1.0 + g) * (1.0 + g) + 0.5);
        assert!((b - direct).abs() < 1e-12);
        assert!((b - 103.46).abs() < 0.05);
        // same constant through the fixed-point derivative: 2γ²(1+γ)²/((1+γ)² - cγ²)
        let alt = 2.0 * g * g * (1.0 + g).powi(2) / ((1.0 + g).powi(2) - 0.5 * g * g);
        assert!((b - alt).abs() < 1e-9);
        let (_, bc) = clt_params_mmse(1.0, 0.1, 0.5, 3.0, Field::Complex).unwrap();
        assert!((bc * 2.0 - b).abs() < 1e-12);
    }

    #[test]
    fn bigdfe_limits() {
        let sch = IdcSchedule::new(vec![0.0, 0.5, 0.9, 0.99]).unwrap();
        let v = bigdfe_limit_sinr(1.0, 0.1, 0.5, &sch).unwrap();
        assert!((v[0] - mmse_equal_power(10.0, 0.5)).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let near = bigdfe_limit_sinr(1.0, 0.1, 0.5, &IdcSchedule::new(vec![0.999]).unwrap()).unwrap()[0];
        assert!((near / 10.0 - 1.0).abs() < 0.01);
        assert!(IdcSchedule::new(vec![1.0]).is_err());
    }

    #[test]
    fn bigdfe_first_iteration_is_mmse() {
        let h = random_h(32, 16, Field::Complex, 9);
        let sch = IdcSchedule::new(vec![0.0, 0.5]).unwrap();
        let it = bigdfe_simulate(&h, 1.0, 0.1, &sch, 200, Seed(1)).unwrap();
        let mmse = sinr_all(ReceiverKind::Mmse, &h, &[1.0; 16], 0.1).unwrap();
        let mean = mmse.iter().sum::<f64>() / 16.0;
        assert!((it[0].formula_sinr - mean).abs() < 1e-9 * mean);
        assert_eq!(it, bigdfe_simulate(&h, 1.0, 0.1, &sch, 200, Seed(1)).unwrap());
    }

    #[test]
    fn user_powers_layout() {
        let prof = SystemProfile { c: 0.5, noise_power: 0.1, power_dist: vec![(1.0, 0.5), (4.0, 0.5)], field: Field::Real, fourth_moment: 3.0 };
        let p = prof.user_powers(10);
        assert_eq!(p.iter().filter(|&&x| x == 1.0).count(), 5);
        assert_eq!(p.len(), 10);
    }
}
