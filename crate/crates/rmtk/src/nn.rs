//! Spectral diagnostics for random neural networks: signal propagation and
//! criticality, input-output Jacobian spectra, the Wishart-plus-Wigner
//! Hessian model, and output data-covariance spectra.

use crate::ensembles::{orthogonal_from, SpectralSample};
use crate::error::{ensure, Error, Result};
use crate::linalg::{FMat, Field};
use crate::poly;
use crate::quad;
use crate::rng::{self, Seed};
use crate::special;
use crate::transforms::{self, DensityCurve, FreeSource, Transform};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActivationKind {
    Linear,
    Relu,
    HardTanh,
    Tanh,
    /// The zero-mean, unit-energy family `f_α`.
    ShiftedAbs(f64),
    Custom,
}

/// Pointwise nonlinearity with its derivative. At a kink the derivative
/// takes the value of the segment on the left.
#[derive(Clone)]
pub struct Activation {
    kind: ActivationKind,
    f: RealFn,
    df: RealFn,
    kinks: Vec<f64>,
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Activation").field("kind", &self.kind).field("kinks", &self.kinks).finish()
    }
}

impl Activation {
    pub fn linear() -> Self {
        Activation { kind: ActivationKind::Linear, f: Arc::new(|x| x), df: Arc::new(|_| 1.0), kinks: vec![] }
    }

    pub fn relu() -> Self {
        Activation {
            kind: ActivationKind::Relu,
            f: Arc::new(|x: f64| x.max(0.0)),
            df: Arc::new(|x| if x > 0.0 { 1.0 } else { 0.0 }),
            kinks: vec![0.0],
        }
    }

    pub fn hard_tanh() -> Self {
        Activation {
            kind: ActivationKind::HardTanh,
            f: Arc::new(|x: f64| x.clamp(-1.0, 1.0)),
            df: Arc::new(|x| if x > -1.0 && x <= 1.0 { 1.0 } else { 0.0 }),
            kinks: vec![-1.0, 1.0],
        }
    }

    pub fn tanh() -> Self {
        Activation {
            kind: ActivationKind::Tanh,
            f: Arc::new(f64::tanh),
            df: Arc::new(|x: f64| {
                let c = x.cosh();
                1.0 / (c * c)
            }),
            kinks: vec![],
        }
    }

    /// User-supplied activation; `kinks` lists the points where `df` jumps.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mut kinks: Vec<f64>,
    ) -> Self {
        kinks.sort_by(f64::total_cmp);
        Activation { kind: ActivationKind::Custom, f: Arc::new(f), df: Arc::new(df), kinks }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn name(&self) -> String {
        match self.kind {
            ActivationKind::Linear => "linear".into(),
            ActivationKind::Relu => "relu".into(),
            ActivationKind::HardTanh => "hard_tanh".into(),
            ActivationKind::Tanh => "tanh".into(),
            ActivationKind::ShiftedAbs(a) => format!("f_alpha({a})"),
            ActivationKind::Custom => "custom".into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

/// `f_α(x) = ([x]₊ + α[-x]₊ - (1+α)/√(2π)) / √(½(1+α²) - (1+α)²/(2π))`.
pub fn f_alpha(alpha: f64) -> Result<Activation> {
    ensure(alpha.is_finite(), || "alpha must be finite".into())?;
    let d2 = 0.5 * (1.0 + alpha * alpha) - (1.0 + alpha).powi(2) / (2.0 * PI);
    // ½(1+α²) ≥ (1+α)²/4 > (1+α)²/(2π), with equality only at α = 1 on the left
    assert!(d2 > 0.0, "f_alpha normaliser vanished");
    let d = d2.sqrt();
    let shift = (1.0 + alpha) / (2.0 * PI).sqrt();
    Ok(Activation {
        kind: ActivationKind::ShiftedAbs(alpha),
        f: Arc::new(move |x: f64| (x.max(0.0) + alpha * (-x).max(0.0) - shift) / d),
        df: Arc::new(move |x| if x > 0.0 { 1.0 / d } else { -alpha / d }),
        kinks: vec![0.0],
    })
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| quad::gauss_hermite(201).expect("201-node rule"))
}

/// `E[g(√q h)]` for standard normal `h`, by 201-node Gauss–Hermite quadrature.
pub fn gauss_expect(g: impl Fn(f64) -> f64, q: f64) -> Result<f64> {
    ensure(q >= 0.0 && q.is_finite(), || "variance must be nonnegative".into())?;
    let (x, w) = hermite_rule();
    let s = q.sqrt();
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = g(s * xi);
        ensure(v.is_finite(), || format!("integrand is not finite at {}", s * xi))?;
        acc += wi * v;
    }
    Ok(acc)
}

/// `E[g(√q h)]` by adaptive quadrature split at the points where `g` has
/// kinks, so piecewise integrands are integrated to full precision.
pub fn gauss_expect_kinks(g: impl Fn(f64) -> f64, q: f64, kinks: &[f64]) -> Result<f64> {
    ensure(q >= 0.0 && q.is_finite(), || "variance must be nonnegative".into())?;
    if q == 0.0 {
        return Ok(g(0.0));
    }
    let s = q.sqrt();
    const CUT: f64 = 40.0;
    let mut pts = vec![-CUT];
    pts.extend(kinks.iter().map(|k| k / s).filter(|h| h.abs() < CUT));
    pts.push(CUT);
    let norm = (2.0 * PI).sqrt();
    let v = quad::integrate_pieces(|h| g(s * h) * (-0.5 * h * h).exp() / norm, &pts, 1e-14)?;
    ensure(v.is_finite(), || "integrand is not finite".into())?;
    Ok(v)
}

fn act_expect(act: &Activation, g: impl Fn(f64) -> f64, q: f64) -> Result<f64> {
    gauss_expect_kinks(g, q, act.kinks())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightEnsemble {
    Gaussian,
    Orthogonal,
}

impl WeightEnsemble {
    pub fn name(self) -> &'static str {
        match self {
            WeightEnsemble::Gaussian => "gaussian",
            WeightEnsemble::Orthogonal => "orthogonal",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NetConfig {
    pub layers: usize,
    pub width: usize,
    pub sigma_w2: f64,
    pub sigma_b2: f64,
    pub ensemble: WeightEnsemble,
    pub activation: Activation,
    pub q_star: Option<f64>,
}

impl NetConfig {
    pub fn new(layers: usize, width: usize, sigma_w2: f64, sigma_b2: f64, ensemble: WeightEnsemble, activation: Activation) -> Self {
        NetConfig { layers, width, sigma_w2, sigma_b2, ensemble, activation, q_star: None }
    }

    /// Network at criticality with the requested fixed point: `σ_w²` makes
    /// `χ = 1` and `σ_b²` places the fixed point at `q`.
    pub fn critical(layers: usize, width: usize, ensemble: WeightEnsemble, activation: Activation, q: f64) -> Result<Self> {
        ensure(q > 0.0, || "q must be positive".into())?;
        let d2 = act_expect(&activation, |x| activation.deriv(x).powi(2), q)?;
        ensure(d2 > 0.0, || "activation has zero slope almost everywhere".into())?;
        let sigma_w2 = 1.0 / d2;
        let sigma_b2 = q - sigma_w2 * act_expect(&activation, |x| activation.eval(x).powi(2), q)?;
        ensure(sigma_b2 >= -1e-12, || format!("fixed point {q} needs negative bias variance {sigma_b2}"))?;
        let cfg = NetConfig { layers, width, sigma_w2, sigma_b2: sigma_b2.max(0.0), ensemble, activation, q_star: Some(q) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.layers >= 1 && self.width >= 1, || "layers and width must be at least 1".into())?;
        ensure(self.sigma_w2 >= 0.0 && self.sigma_b2 >= 0.0, || "variances must be nonnegative".into())?;
        if let Some(q) = self.q_star {
            ensure(q >= 0.0, || "q_star must be nonnegative".into())?;
        }
        Ok(())
    }

    /// The override if present, else the computed fixed point.
    pub fn fixed_point(&self) -> Result<f64> {
        match self.q_star {
            Some(q) => Ok(q),
            None => q_star(self),
        }
    }
}

fn q_map(cfg: &NetConfig, q: f64) -> Result<f64> {
    let a = &cfg.activation;
    Ok(cfg.sigma_w2 * act_expect(a, |x| a.eval(x).powi(2), q)? + cfg.sigma_b2)
}

/// Layer-by-layer pre-activation variances `q⁰, q¹, ..., q^layers`.
pub fn propagate_q(cfg: &NetConfig, q0: f64, layers: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut q = vec![q0];
    for _ in 0..layers {
        let next = q_map(cfg, *q.last().unwrap())?;
        q.push(next);
    }
    Ok(q)
}

/// Fixed point of `q = σ_w² E[φ(√q h)²] + σ_b²` by damped iteration.
pub fn q_star(cfg: &NetConfig) -> Result<f64> {
    cfg.validate()?;
    let mut q = cfg.sigma_b2 + cfg.sigma_w2;
    const MAX_ITER: usize = 20_000;
    for _ in 0..MAX_ITER {
        let mapped = q_map(cfg, q)?;
        if (mapped - q).abs() < 1e-12 * q.max(1.0) {
            return Ok(mapped);
        }
        q = 0.5 * q + 0.5 * mapped;
        if !q.is_finite() || q > 1e12 {
            return Err(Error::domain("no finite fixed point: the variance map diverges"));
        }
    }
    let residual = (q_map(cfg, q)? - q).abs();
    Err(Error::NoConvergence { what: "q* iteration", iterations: MAX_ITER, residual })
}

/// `χ = σ_w² E[φ'(√q* h)²]`.
pub fn chi(cfg: &NetConfig, q_star: f64) -> Result<f64> {
    let a = &cfg.activation;
    Ok(cfg.sigma_w2 * act_expect(a, |x| a.deriv(x).powi(2), q_star)?)
}

/// Fraction of neurons in the unit-slope regime.
pub fn p_linear(act: &Activation, q_star: f64) -> Result<f64> {
    ensure(q_star >= 0.0, || "q* must be nonnegative".into())?;
    match act.kind() {
        ActivationKind::Linear => Ok(1.0),
        ActivationKind::Relu => Ok(0.5),
        ActivationKind::HardTanh => Ok(if q_star == 0.0 { 1.0 } else { special::erf(1.0 / (2.0 * q_star).sqrt()) }),
        _ => Err(Error::domain(format!("{} is not piecewise linear with unit slopes", act.name()))),
    }
}

/// Eigenvalues of `J Jᵀ` for one draw of the network, started at the fixed point.
pub fn jacobian_empirical(cfg: &NetConfig, seed: Seed) -> Result<SpectralSample> {
    cfg.validate()?;
    let q = cfg.fixed_point()?;
    let n = cfg.width;
    let mut rng = seed.rng();
    let act = &cfg.activation;
    let mut x: Vec<f64> = (0..n).map(|_| act.eval(q.sqrt() * rng::normal(&mut rng))).collect();
    let mut jac: Option<Mat<f64>> = None;
    let sw = cfg.sigma_w2.sqrt();
    for _ in 0..cfg.layers {
        let w = match cfg.ensemble {
            WeightEnsemble::Gaussian => match FMat::gaussian(&mut rng, n, n, Field::Real, sw / (n as f64).sqrt()) {
                FMat::Real(m) => m,
                FMat::Complex(_) => unreachable!(),
            },
            WeightEnsemble::Orthogonal => orthogonal_from(&mut rng, n, sw),
        };
        let sb = cfg.sigma_b2.sqrt();
        let h: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| w[(i, j)] * x[j]).sum::<f64>() + sb * rng::normal(&mut rng))
            .collect();
        let d: Vec<f64> = h.iter().map(|&v| act.deriv(v)).collect();
        let mut next = match &jac {
            None => w,
            Some(j) => &w * j,
        };
        for i in 0..n {
            for k in 0..n {
                next[(i, k)] *= d[i];
            }
        }
        jac = Some(next);
        x = h.iter().map(|&v| act.eval(v)).collect();
    }
    let j = jac.expect("at least one layer");
    let jjt = &j * j.transpose();
    let ev = jjt
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    ensure(ev.iter().all(|v| v.is_finite()), || "Jacobian overflowed".into())?;
    SpectralSample::new(ev.into_iter().map(|v| v.max(0.0)).collect(), Field::Real)
}

/// Largest eigenvalue and eigenvalue variance of `J Jᵀ` normalised to unit
/// mean (equivalently, at criticality `σ_w² p(q*) = 1`).
pub fn jacobian_theory(cfg: &NetConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let l = cfg.layers as f64;
    let p = p_linear(&cfg.activation, cfg.fixed_point()?)?;
    Ok(match (cfg.ensemble, cfg.activation.kind()) {
        (WeightEnsemble::Gaussian, ActivationKind::Linear) => ((l + 1.0).powf(l + 1.0) / l.powf(l), l),
        (WeightEnsemble::Gaussian, _) => (std::f64::consts::E * l / p, l / p),
        (WeightEnsemble::Orthogonal, _) => {
            let r = (1.0 - p) / p;
            let growth = if cfg.layers == 1 { 1.0 } else { l.powf(l) / (l - 1.0).powf(l - 1.0) };
            if p == 1.0 {
                (1.0, 0.0)
            } else {
                (r * growth, r * l)
            }
        }
    })
}

/// One row of a depth sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub layers: usize,
    pub lambda_max: f64,
    pub variance: f64,
    pub ensemble: WeightEnsemble,
    pub activation: String,
}

/// Largest eigenvalue and variance of the unit-mean `J Jᵀ` spectrum for each depth.
pub fn jacobian_sweep(cfg: &NetConfig, depths: &[usize], seed: Seed) -> Result<Vec<SweepRow>> {
    depths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let c = NetConfig { layers: l, ..cfg.clone() };
            let s = jacobian_empirical(&c, seed.derive(i as u64))?;
            let s = s.scaled(1.0 / s.mean());
            Ok(SweepRow { layers: l, lambda_max: s.max(), variance: s.variance(), ensemble: cfg.ensemble, activation: cfg.activation.name() })
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// S-transform of the law of `d(h)`, `h` standard normal, from Gaussian
/// expectations: solves `M(z) = w` for `M(z) = E[z d / (1 - z d)]`.
fn gaussian_pushforward_s(d: impl Fn(f64) -> f64) -> Result<Transform> {
    let (x, w) = hermite_rule();
    let vals: Vec<(f64, f64)> = x.iter().zip(w).map(|(&xi, &wi)| (d(xi), wi)).collect();
    let mean: f64 = vals.iter().map(|(v, w)| v * w).sum();
    ensure(mean > 0.0, || "pushed-forward law has zero mean".into())?;
    let last: Mutex<Option<(C64, C64)>> = Mutex::new(None);
    Ok(Transform::new(move |wv: C64| {
        if wv.norm() < 1e-14 {
            return Ok(C64::new(1.0 / mean, 0.0));
        }
        let guess = match *last.lock().unwrap() {
            Some((w0, z0)) if (w0 - wv).norm() < 0.5 * wv.norm().max(1e-3) => z0,
            _ => wv / (mean * (1.0 + wv)),
        };
        let mut z = guess;
        let mut ok = false;
        for _ in 0..100 {
            let (mut m, mut dm) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for &(v, wt) in &vals {
                let den = 1.0 - z * v;
                m += wt * z * v / den;
                dm += wt * v / (den * den);
            }
            let step = (m - wv) / dm;
            z -= step;
            if step.norm() < 1e-14 * z.norm().max(1e-300) {
                ok = true;
                break;
            }
        }
        ensure(ok && z.is_finite(), || "S-transform inversion failed".into())?;
        *last.lock().unwrap() = Some((wv, z));
        Ok((1.0 + wv) / (wv * z))
    }))
}

/// Limiting density of the unit-mean `J Jᵀ` spectrum, from the product of
/// per-layer S-transforms.
pub fn jacobian_density_free(cfg: &NetConfig, grid: &[f64]) -> Result<DensityCurve> {
    cfg.validate()?;
    let q = cfg.fixed_point()?;
    let a = cfg.activation.clone();
    let s_w = match cfg.ensemble {
        WeightEnsemble::Gaussian => transforms::s_transform(&FreeSource::Mp { c: 1.0, sigma: cfg.sigma_w2.sqrt() })?,
        WeightEnsemble::Orthogonal => transforms::s_transform(&FreeSource::PointMass(cfg.sigma_w2))?,
    };
    let s_d = match p_linear(&a, q) {
        Ok(p) => transforms::s_transform(&FreeSource::Bernoulli { p })?,
        Err(_) => {
            let sq = q.sqrt();
            gaussian_pushforward_s(move |h| a.deriv(sq * h).powi(2))?
        }
    };
    let layer = transforms::free_multiply(&s_w, &s_d);
    let chi_v = chi(cfg, q)?;
    let l = cfg.layers as i32;
    let s = Transform::new(move |w| Ok(layer.eval(w)?.powi(l) * chi_v.powi(l)));
    let scale = 1.0 + std::f64::consts::E * cfg.layers as f64;
    Ok(transforms::density_from_s(&s, grid, 1e-9, scale))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianModelParams {
    pub epsilon: f64,
    pub c: f64,
    /// Scale of the Wishart part in the refined model.
    pub sigma: f64,
}

impl HessianModelParams {
    pub fn new(epsilon: f64, c: f64) -> Self {
        HessianModelParams { epsilon, c, sigma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.epsilon >= 0.0 && self.epsilon.is_finite(), || "epsilon must be nonnegative".into())?;
        ensure(self.c >= 0.0 && self.c.is_finite(), || "c must be nonnegative".into())?;
        ensure(self.sigma > 0.0, || "sigma must be positive".into())
    }

    /// A bound on the magnitude of the most negative eigenvalue.
    fn negative_reach(&self, refined: bool) -> f64 {
        if refined {
            10.0 * (self.epsilon * self.c / 2.0).sqrt() + 1e-9
        } else {
            2.0 * (2.0 * self.epsilon).sqrt() + 1e-9
        }
    }

    fn upper_reach(&self, refined: bool) -> f64 {
        let s = if refined { self.sigma } else { 1.0 };
        s * (1.0 + self.c.sqrt()).powi(2) + self.negative_reach(refined)
    }
}

fn pmul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn padd(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn pscale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Polynomial in `m` (ascending) whose Herglotz root is the Stieltjes
/// transform of the Hessian model at `z`.
fn hessian_poly(p: &HessianModelParams, z: C64, refined: bool) -> Vec<C64> {
    let (e, c) = (p.epsilon, p.c);
    if !refined {
        // 2εc m³ + (2ε + cz) m² + (z + c - 1) m + 1 = 0
        return vec![re(1.0), z + c - 1.0, 2.0 * e + c * z, re(2.0 * e * c)];
    }
    // z = 1/G + σ/(1 - σcG) + εcG/(2 - εc²G²), cleared of denominators, G = -m
    let s = p.sigma;
    let g = [re(0.0), re(-1.0)];
    let one_minus = [re(1.0), re(s * c)];
    let two_minus = [re(2.0), re(0.0), re(-e * c * c)];
    let lhs = pscale(&pmul(&pmul(&g, &one_minus), &two_minus), z);
    let t1 = pmul(&one_minus, &two_minus);
    let t2 = pscale(&pmul(&g, &two_minus), re(s));
    let t3 = pscale(&pmul(&pmul(&g, &g), &one_minus), re(e * c));
    let rhs = padd(&padd(&t1, &t2), &t3);
    padd(&lhs, &pscale(&rhs, re(-1.0)))
}

/// Root of `poly(z)` continued from far above the real axis, so that the
/// physical branch is followed even when several roots lie in the upper
/// half-plane.
fn tracked_root(poly_at: impl Fn(C64) -> Vec<C64>, z: C64, scale: f64) -> Result<C64> {
    let mut y = (20.0 * scale).max(z.im);
    let mut m = -C64::new(z.re, y).inv();
    loop {
        let zk = C64::new(z.re, y);
        let r = poly::roots(&poly_at(zk))?;
        m = *r
            .iter()
            .min_by(|a, b| (*a - m).norm().total_cmp(&(*b - m).norm()))
            .ok_or_else(|| Error::Branch("no roots".into()))?;
        if y <= z.im {
            break;
        }
        y = (y * 0.8).max(z.im);
    }
    ensure(m.im >= 0.0, || format!("followed branch left the upper half-plane at {z}"))?;
    Ok(m)
}

fn herglotz_or_tracked(poly_at: impl Fn(C64) -> Vec<C64>, z: C64, scale: f64) -> Result<C64> {
    match poly::herglotz_root(&poly_at(z)) {
        Ok((m, false)) => Ok(m),
        _ => tracked_root(poly_at, z, scale),
    }
}

/// Stieltjes transform of the Hessian model at `z` in the upper half-plane.
pub fn hessian_stieltjes(params: &HessianModelParams, z: C64, refined: bool) -> Result<C64> {
    params.validate()?;
    ensure(z.im > 0.0, || "z must lie in the upper half-plane".into())?;
    let scale = params.upper_reach(refined);
    herglotz_or_tracked(|zz| hessian_poly(params, zz, refined), z, scale)
}

/// Height above the real axis at which densities are evaluated.
pub const DENSITY_EPS: f64 = 1e-6;

fn hessian_density_at(params: &HessianModelParams, x: f64, refined: bool, eps: f64) -> Result<f64> {
    Ok(hessian_stieltjes(params, C64::new(x, eps), refined)?.im / PI)
}

/// Limiting spectral density of the Hessian model on `grid`.
pub fn hessian_density(params: &HessianModelParams, grid: &[f64], refined: bool) -> Result<DensityCurve> {
    params.validate()?;
    let mut density = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        match hessian_density_at(params, x, refined, DENSITY_EPS) {
            Ok(v) => density.push(v.max(0.0)),
            Err(_) => {
                density.push(f64::NAN);
                failures.push(i);
            }
        }
    }
    Ok(DensityCurve { x: grid.to_vec(), density, failures })
}

/// Interval enclosing the Hessian spectrum.
pub fn hessian_support_bounds(params: &HessianModelParams, refined: bool) -> (f64, f64) {
    (-params.negative_reach(refined), params.upper_reach(refined))
}

/// Eigenvalues of `H₀ + H₁`, Wishart with ratio `c` plus real Wigner with
/// semicircle scale `√(2ε)`.
pub fn hessian_sample(params: &HessianModelParams, n: usize, seed: Seed) -> Result<SpectralSample> {
    params.validate()?;
    ensure(n >= 2, || "n must be at least 2".into())?;
    let mut rng = seed.rng();
    let mut h = if params.c > 0.0 {
        let m = ((n as f64 / params.c).round() as usize).max(1);
        FMat::gaussian(&mut rng, n, m, Field::Real, 1.0).gram(1.0 / m as f64)
    } else {
        FMat::from_real(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    };
    if params.epsilon > 0.0 {
        let w = crate::ensembles::wigner_from(&mut rng, n, (2.0 * params.epsilon).sqrt(), Field::Real);
        h = h.add(&w)?;
    }
    SpectralSample::new(h.eigenvalues_hermitian()?, Field::Real)
}

/// Fraction of negative eigenvalues of the Hessian model.
pub fn normalized_index(params: &HessianModelParams, refined: bool) -> Result<f64> {
    params.validate()?;
    if params.epsilon == 0.0 {
        return Ok(0.0);
    }
    let lo = -params.negative_reach(refined);
    let (x, w) = quad::gauss_legendre(8);
    const PANELS: usize = 3000;
    let h = -lo / PANELS as f64;
    let mut acc = 0.0;
    for k in 0..PANELS {
        let a = lo + k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = a + 0.5 * h * (xi + 1.0);
            acc += 0.5 * h * wi * hessian_density_at(params, t, refined, 1e-10)?;
        }
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Energy below which every critical point is a minimiser.
pub fn epsilon_c(c: f64, refined: bool, sigma: f64) -> Result<f64> {
    if refined {
        ensure(c > 0.0 && c < 1.0, || "the refined critical energy needs 0 < c < 1".into())?;
        ensure(sigma > 0.0, || "sigma must be positive".into())?;
        let chi = 1.0 + 16.0 * c - 8.0 * c * c;
        Ok(sigma * sigma * (27.0 - 18.0 * chi - chi * chi + 8.0 * chi.powf(1.5)) / (32.0 * c * (1.0 - c).powi(3)))
    } else {
        ensure(c >= 0.0, || "c must be nonnegative".into())?;
        Ok((1.0 - 20.0 * c - 8.0 * c * c + (1.0 + 8.0 * c).powf(1.5)) / 16.0)
    }
}

/// `η = E[φ(sz)²]` and `ζ = (s E[φ'(sz)])²`; the activation must have zero
/// Gaussian mean.
pub fn eta_zeta(act: &Activation, s: f64) -> Result<(f64, f64)> {
    ensure(s > 0.0, || "s must be positive".into())?;
    let q = s * s;
    let mean = act_expect(act, |x| act.eval(x), q)?;
    ensure(mean.abs() <= 1e-8, || format!("activation has nonzero Gaussian mean {mean:.3e}"))?;
    let eta = act_expect(act, |x| act.eval(x).powi(2), q)?;
    let zeta = (s * act_expect(act, |x| act.deriv(x), q)?).powi(2);
    Ok((eta, zeta))
}

/// Quartic in `m` for the output data covariance at `z`.
fn datacov_poly(z: C64, eta: f64, zeta: f64, xi: f64, psi: f64) -> Vec<C64> {
    // u = P - 1 = (-z m - 1)/ψ, A = t(1 + ξu)(1 + ψu) with t = 1/(zψ);
    // u(1 - ζA) = (η - ζ)A(1 - ζA) + ζA
    let u = [re(-1.0 / psi), -z / psi];
    let t = (z * psi).inv();
    let one = [re(1.0)];
    let a = pscale(&pmul(&padd(&one, &pscale(&u, re(xi))), &padd(&one, &pscale(&u, re(psi)))), t);
    let one_minus = padd(&one, &pscale(&a, re(-zeta)));
    let lhs = pmul(&u, &one_minus);
    let rhs = padd(&pscale(&pmul(&a, &one_minus), re(eta - zeta)), &pscale(&a, re(zeta)));
    padd(&lhs, &pscale(&rhs, re(-1.0)))
}

/// Stieltjes transform of the limiting output covariance spectrum.
pub fn datacov_stieltjes(z: C64, eta: f64, zeta: f64, xi: f64, psi: f64) -> Result<C64> {
    ensure(z.im > 0.0, || "z must lie in the upper half-plane".into())?;
    ensure(xi > 0.0 && psi > 0.0, || "xi and psi must be positive".into())?;
    ensure(eta > 0.0 && zeta >= 0.0 && zeta <= eta * (1.0 + 1e-12), || "need eta > 0 and 0 <= zeta <= eta".into())?;
    let scale = eta * (1.0 + xi) * (1.0 + 1.0 / psi) + 1.0;
    let m = tracked_root(|zz| datacov_poly(zz, eta, zeta, xi, psi), z, scale)?;
    let res = poly::eval(&datacov_poly(z, eta, zeta, xi, psi), m).0.norm();
    let sz: f64 = datacov_poly(z, eta, zeta, xi, psi).iter().map(|c| c.norm()).sum();
    ensure(res <= 1e-10 * sz.max(1.0), || format!("root residual {res:.2e}"))?;
    Ok(m)
}

/// Density of the limiting output covariance spectrum on `grid`.
pub fn datacov_density(grid: &[f64], eta: f64, zeta: f64, xi: f64, psi: f64) -> DensityCurve {
    let mut density = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        match datacov_stieltjes(C64::new(x, DENSITY_EPS), eta, zeta, xi, psi) {
            Ok(m) => density.push((m.im / PI).max(0.0)),
            Err(_) => {
                density.push(f64::NAN);
                failures.push(i);
            }
        }
    }
    DensityCurve { x: grid.to_vec(), density, failures }
}

/// Eigenvalues of `F = YYᵀ/m` after `cfg.layers` layers `Y ← φ(W Y)` applied
/// to Gaussian data `X` (`n0 x m`). Layer widths are `cfg.width`; weights have
/// variance `σ_w²/fan_in`.
pub fn datacov_empirical(cfg: &NetConfig, n0: usize, m: usize, seed: Seed) -> Result<SpectralSample> {
    cfg.validate()?;
    ensure(n0 >= 1 && m >= 1, || "n0 and m must be at least 1".into())?;
    ensure(cfg.sigma_b2 == 0.0, || "the data-covariance model has no biases".into())?;
    let mut rng = seed.rng();
    let mut y = match FMat::gaussian(&mut rng, n0, m, Field::Real, 1.0) {
        FMat::Real(x) => x,
        FMat::Complex(_) => unreachable!(),
    };
    let act = &cfg.activation;
    for _ in 0..cfg.layers {
        let fan_in = y.nrows();
        let w = match FMat::gaussian(&mut rng, cfg.width, fan_in, Field::Real, (cfg.sigma_w2 / fan_in as f64).sqrt()) {
            FMat::Real(w) => w,
            FMat::Complex(_) => unreachable!(),
        };
        let z = &w * &y;
        y = Mat::from_fn(z.nrows(), z.ncols(), |i, j| act.eval(z[(i, j)]));
    }
    let f = FMat::Real(y).gram(1.0 / m as f64);
    SpectralSample::new(f.eigenvalues_hermitian()?, Field::Real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{ks_values, Law, MpLaw, TabulatedLaw};
    use crate::transforms::stieltjes_mp;

    #[test]
    fn gaussian_expectations() {
        assert!((gauss_expect(|x| x * x, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((gauss_expect(|x| x.powi(4), 1.0).unwrap() - 3.0).abs() < 1e-10);
        let relu2 = |x: f64| x.max(0.0).powi(2);
        assert!((gauss_expect_kinks(relu2, 1.0, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((gauss_expect_kinks(relu2, 2.5, &[0.0]).unwrap() - 1.25).abs() < 1e-12);
        assert!((gauss_expect(relu2, 1.0).unwrap() - 0.5).abs() < 1e-3);
        assert_eq!(gauss_expect_kinks(|x| x + 3.0, 0.0, &[]).unwrap(), 3.0);
        assert!(gauss_expect(|_| f64::NAN, 1.0).is_err());
    }

    #[test]
    fn derivative_conventions() {
        let r = Activation::relu();
        assert_eq!(r.deriv(0.0), 0.0);
        let h = Activation::hard_tanh();
        assert_eq!((h.deriv(-1.0), h.deriv(1.0)), (0.0, 1.0));
        for a in [Activation::tanh(), f_alpha(0.3).unwrap(), Activation::hard_tanh()] {
            for x in [-2.3, -0.4, 0.7, 1.9] {
                let fd = (a.eval(x + 1e-6) - a.eval(x - 1e-6)) / 2e-6;
                assert!((fd - a.deriv(x)).abs() < 1e-6, "{} at {x}", a.name());
            }
        }
    }

    #[test]
    fn fixed_points() {
        let lin = NetConfig::new(1, 10, 0.5, 0.25, WeightEnsemble::Gaussian, Activation::linear());
        assert!((q_star(&lin).unwrap() - 0.5).abs() < 1e-11);
        let relu = NetConfig::new(1, 10, 1.5, 0.3, WeightEnsemble::Gaussian, Activation::relu());
        let q = q_star(&relu).unwrap();
        assert!((q - 1.2).abs() < 1e-11);
        assert!((q_map(&relu, q).unwrap() - q).abs() < 1e-12);
        let ht = NetConfig::new(1, 10, 0.8, 0.05, WeightEnsemble::Gaussian, Activation::hard_tanh());
        let q = q_star(&ht).unwrap();
        assert!((q_map(&ht, q).unwrap() - q).abs() < 1e-12);
        let blow = NetConfig::new(1, 10, 2.5, 0.1, WeightEnsemble::Gaussian, Activation::relu());
        assert!(q_star(&blow).is_err());
    }

    #[test]
    fn propagation_reaches_fixed_point() {
        let cfg = NetConfig::critical(1, 10, WeightEnsemble::Orthogonal, Activation::hard_tanh(), 0.5).unwrap();
        let q = propagate_q(&cfg, 3.0, 20).unwrap();
        assert!((q[20] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn chi_and_p() {
        let lin = NetConfig::new(1, 10, 0.7, 0.0, WeightEnsemble::Gaussian, Activation::linear());
        assert!((chi(&lin, 1.0).unwrap() - 0.7).abs() < 1e-13);
        let relu = NetConfig::new(1, 10, 2.0, 0.0, WeightEnsemble::Gaussian, Activation::relu());
        assert!((chi(&relu, 1.3).unwrap() - 1.0).abs() < 1e-13);
        let ht = NetConfig::new(1, 10, 1.3, 0.1, WeightEnsemble::Gaussian, Activation::hard_tanh());
        let q = 0.8f64;
        let erf = special::erf(1.0 / (2.0 * q).sqrt());
        assert!((chi(&ht, q).unwrap() - 1.3 * erf).abs() < 1e-10);
        assert!((p_linear(&Activation::hard_tanh(), q).unwrap() - erf).abs() < 1e-15);
        assert_eq!(p_linear(&Activation::relu(), q).unwrap(), 0.5);
        assert_eq!(p_linear(&Activation::linear(), q).unwrap(), 1.0);
        assert!(p_linear(&Activation::tanh(), q).is_err());
    }

    #[test]
    fn critical_hard_tanh_constants() {
        let cfg = NetConfig::critical(4, 10, WeightEnsemble::Orthogonal, Activation::hard_tanh(), 1.0).unwrap();
        assert!((cfg.sigma_w2 - 1.4648).abs() < 1e-4);
        assert!((cfg.sigma_b2 - 0.244).abs() < 1e-3);
        assert!((chi(&cfg, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_orthogonal_is_isometry() {
        let cfg = NetConfig::new(6, 60, 1.0, 0.0, WeightEnsemble::Orthogonal, Activation::linear());
        let s = jacobian_empirical(&cfg, Seed(3)).unwrap();
        assert!(s.eigenvalues().iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert_eq!(jacobian_theory(&cfg).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn jacobian_deterministic() {
        let cfg = NetConfig::critical(3, 40, WeightEnsemble::Gaussian, Activation::relu(), 1.0).unwrap();
        assert_eq!(jacobian_empirical(&cfg, Seed(5)).unwrap(), jacobian_empirical(&cfg, Seed(5)).unwrap());
    }

    #[test]
    fn theory_values() {
        let lin = NetConfig::new(2, 10, 1.0, 0.0, WeightEnsemble::Gaussian, Activation::linear());
        let (l, v) = jacobian_theory(&lin).unwrap();
        assert!((l - 6.75).abs() < 1e-12 && (v - 2.0).abs() < 1e-12);
        let relu = NetConfig::critical(5, 10, WeightEnsemble::Orthogonal, Activation::relu(), 1.0).unwrap();
        assert!((jacobian_theory(&relu).unwrap().1 - 5.0).abs() < 1e-12);
        let tanh = NetConfig::new(5, 10, 1.0, 0.0, WeightEnsemble::Gaussian, Activation::tanh());
        assert!(jacobian_theory(&tanh).is_err());
    }

    #[test]
    fn linear_gaussian_single_layer_is_mp() {
        let cfg = NetConfig::new(1, 10, 1.0, 0.0, WeightEnsemble::Gaussian, Activation::linear());
        let grid: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
        let d = jacobian_density_free(&cfg, &grid).unwrap();
        assert!(d.is_complete());
        let mp = MpLaw::new(1.0, 1.0).unwrap();
        for (x, y) in grid.iter().zip(&d.density) {
            assert!((y - mp.pdf(*x)).abs() < 5e-3, "{x}: {y} vs {}", mp.pdf(*x));
        }
    }

    #[test]
    fn relu_density_matches_sample() {
        let cfg = NetConfig::critical(2, 400, WeightEnsemble::Gaussian, Activation::relu(), 1.0).unwrap();
        let s = jacobian_empirical(&cfg, Seed(11)).unwrap();
        let s = s.scaled(1.0 / s.mean());
        let pos: Vec<f64> = s.eigenvalues().iter().copied().filter(|&v| v > 1e-8).collect();
        assert!((pos.len() as f64 / 400.0 - 0.5).abs() < 0.02);
        let grid: Vec<f64> = (1..=1500).map(|i| i as f64 * 0.012).collect();
        let d = jacobian_density_free(&cfg, &grid).unwrap();
        let mut x = vec![0.0];
        x.extend(&grid);
        let mut y = vec![d.density[0]];
        y.extend(&d.density);
        let law = TabulatedLaw::from_density(&x, &y).unwrap();
        assert!(ks_values(&pos, &law).unwrap() < 0.07);
    }

    #[test]
    fn hessian_reduces_to_mp() {
        let p = HessianModelParams::new(0.0, 0.4);
        let grid: Vec<f64> = (1..60).map(|i| 0.05 * i as f64).collect();
        let d = hessian_density(&p, &grid, false).unwrap();
        let mp = MpLaw::new(0.4, 1.0).unwrap();
        for (x, y) in grid.iter().zip(&d.density) {
            assert!((y - mp.pdf(*x)).abs() < 1e-3);
        }
        let r = hessian_density(&p, &grid, true).unwrap();
        for (a, b) in d.density.iter().zip(&r.density) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hessian_mass_and_sample() {
        let p = HessianModelParams::new(1.0, 2.0 / 3.0);
        let (lo, hi) = hessian_support_bounds(&p, false);
        let mass = quad::integrate(|x| hessian_density_at(&p, x, false, 1e-12).unwrap(), lo, hi, 1e-10).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        let s = hessian_sample(&p, 400, Seed(2)).unwrap();
        let grid: Vec<f64> = (0..=2000).map(|i| lo + (hi - lo) * i as f64 / 2000.0).collect();
        let law = TabulatedLaw::from_density(&grid, &hessian_density(&p, &grid, false).unwrap().density).unwrap();
        assert!(ks_values(s.eigenvalues(), &law).unwrap() < 0.08);
    }

    #[test]
    fn critical_energy() {
        assert!((epsilon_c(0.25, false, 1.0).unwrap() - (1.0 - 5.0 - 0.5 + 27f64.sqrt()) / 16.0).abs() < 1e-15);
        assert!((epsilon_c(1e-9, false, 1.0).unwrap() - 0.125).abs() < 1e-7);
        assert!((epsilon_c(0.25, true, 1.0).unwrap() - 0.6274).abs() < 1e-3);
        assert!(epsilon_c(1.0, true, 1.0).is_err());
        for c in [0.25, 0.5] {
            let ec = epsilon_c(c, false, 1.0).unwrap();
            let at = normalized_index(&HessianModelParams::new(ec, c), false).unwrap();
            assert!(at < 1e-3, "index at onset {at}");
            let above = normalized_index(&HessianModelParams::new(ec * 1.5, c), false).unwrap();
            assert!(above > at);
        }
    }

    #[test]
    fn index_monotone_and_below_half() {
        let mut last = 0.0;
        for e in [0.05, 0.1, 0.3, 1.0, 3.0] {
            let a = normalized_index(&HessianModelParams::new(e, 0.5), false).unwrap();
            assert!(a >= last - 1e-9 && a < 0.5, "{e}: {a}");
            last = a;
        }
        assert_eq!(normalized_index(&HessianModelParams::new(0.0, 0.5), false).unwrap(), 0.0);
    }

    #[test]
    fn f_alpha_constants() {
        for a in [-1.0, 0.0, 0.5, 1.0] {
            let f = f_alpha(a).unwrap();
            let mean = gauss_expect_kinks(|x| f.eval(x), 1.0, &[0.0]).unwrap();
            assert!(mean.abs() < 1e-10);
            let (eta, _) = eta_zeta(&f, 1.0).unwrap();
            assert!((eta - 1.0).abs() < 1e-8);
        }
        let (_, z1) = eta_zeta(&f_alpha(1.0).unwrap(), 1.0).unwrap();
        assert!(z1.abs() < 1e-8);
        let (_, z0) = eta_zeta(&f_alpha(0.0).unwrap(), 1.0).unwrap();
        assert!((z0 - 0.733).abs() < 0.002);
        let (e, z) = eta_zeta(&f_alpha(-1.0).unwrap(), 1.0).unwrap();
        assert!((e - z).abs() < 1e-10);
        let lin = f_alpha(-1.0).unwrap();
        assert!((lin.eval(0.7) - 0.7).abs() < 1e-15);
        assert!(eta_zeta(&Activation::relu(), 1.0).is_err());
    }

    #[test]
    fn datacov_reduces_to_mp() {
        for (xi, psi) in [(0.5, 1.0), (0.3, 0.6), (0.8, 2.0)] {
            for z in [C64::new(0.7, 0.1), C64::new(2.0, 0.5), C64::new(-0.5, 1.0)] {
                let m = datacov_stieltjes(z, 1.0, 0.0, xi, psi).unwrap();
                let mp = stieltjes_mp(z, xi / psi).unwrap();
                assert!((m - mp).norm() < 1e-8, "{xi} {psi} {z}: {m} vs {mp}");
            }
        }
        let y = 1e6;
        let m = datacov_stieltjes(C64::new(0.0, y), 1.0, 0.4, 0.5, 1.0).unwrap();
        assert!((C64::new(0.0, -y) * m - 1.0).norm() < 1e-5);
    }

    #[test]
    fn datacov_linear_matches_product_wishart() {
        let cfg = NetConfig::new(1, 300, 1.0, 0.0, WeightEnsemble::Gaussian, Activation::linear());
        let s = datacov_empirical(&cfg, 300, 600, Seed(8)).unwrap();
        // x^{-1/2} singularity at the origin: geometric spacing there
        let mut grid: Vec<f64> = (0..200).map(|i| 1e-8 * 1e6f64.powf(i as f64 / 200.0)).collect();
        grid.extend((0..=3000).map(|i| 0.01 + i as f64 * 0.002));
        let d = datacov_density(&grid, 1.0, 1.0, 0.5, 1.0);
        grid.insert(0, 0.0);
        let mut dens = d.density.clone();
        dens.insert(0, 0.0);
        assert!(d.is_complete());
        let law = TabulatedLaw::from_density(&grid, &dens).unwrap();
        assert!(ks_values(s.eigenvalues(), &law).unwrap() < 0.06);
        assert!((s.mean() - 1.0).abs() < 0.05);
    }
}
