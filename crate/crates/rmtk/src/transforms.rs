//! Stieltjes transforms, the Silverstein equation and free-probability
//! S- and R-transforms.
//!
//! `m(z) = ∫ dF(λ) / (λ - z)` throughout, so `Im m > 0` on the upper
//! half-plane. The S- and R-transforms are written for the Cauchy transform
//! `G = -m`, with `M(z) = z G(z) - 1`, `S(w) = (1 + w) / (w M^{-1}(w))` and
//! `R(G(z)) + 1 / G(z) = z`.

use crate::ensembles::SpectralSample;
use crate::error::{ensure, Error, Result};
use crate::laws::Law;
use crate::poly;
use crate::quad;
use num_complex::Complex64 as C64;
use std::sync::{Arc, Mutex};

pub type ComplexFn = Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>;

fn upper(z: C64) -> Result<()> {
    ensure(z.im > 0.0 && z.is_finite(), || format!("need Im z > 0, got {z}"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Empirical,
    Closed(&'static str),
    FixedPoint(String),
    Transform(&'static str),
}

/// A Stieltjes transform evaluable on the upper half-plane.
#[derive(Clone)]
pub struct StieltjesFn {
    f: ComplexFn,
    pub provenance: Provenance,
}

impl std::fmt::Debug for StieltjesFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StieltjesFn({:?})", self.provenance)
    }
}

impl StieltjesFn {
    pub fn new(provenance: Provenance, f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static) -> Self {
        StieltjesFn { f: Arc::new(f), provenance }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        upper(z)?;
        (self.f)(z)
    }

    pub fn empirical(sample: &SpectralSample) -> Self {
        let ev = sample.eigenvalues().to_vec();
        Self::new(Provenance::Empirical, move |z| Ok(stieltjes_values(&ev, z)))
    }

    pub fn semicircle(sigma: f64) -> Self {
        Self::new(Provenance::Closed("semicircle"), move |z| stieltjes_semicircle_scaled(z, sigma))
    }

    pub fn mp(c: f64, sigma: f64) -> Self {
        Self::new(Provenance::Closed("marchenko-pastur"), move |z| {
            let s2 = sigma * sigma;
            Ok(stieltjes_mp(z / s2, c)? / s2)
        })
    }

    /// Stieltjes transform of an arbitrary law by quadrature.
    pub fn from_law(law: Arc<dyn Law>) -> Self {
        Self::new(Provenance::Closed("quadrature"), move |z| stieltjes_law(law.as_ref(), z))
    }

    /// Stieltjes transform of `F` (not the companion) for the population law `pop`.
    pub fn silverstein(pop: Vec<(f64, f64)>, c: f64) -> Self {
        let tag = format!("silverstein c={c}");
        Self::new(Provenance::FixedPoint(tag), move |z| {
            let mc = silverstein_fixed_point(&pop, c, z)?;
            Ok(companion_to_primary(mc, c, z))
        })
    }
}

fn stieltjes_values(ev: &[f64], z: C64) -> C64 {
    ev.iter().map(|&l| (C64::new(l, 0.0) - z).inv()).sum::<C64>() / ev.len() as f64
}

pub fn stieltjes_empirical(sample: &SpectralSample, z: C64) -> Result<C64> {
    ensure(z.im != 0.0, || "Stieltjes transform needs a non-real argument".into())?;
    Ok(stieltjes_values(sample.eigenvalues(), z))
}

/// Picks the root of `a m^2 + b m + c` in the upper half-plane.
fn quadratic_herglotz(a: C64, b: C64, c: C64) -> Result<C64> {
    let d = (b * b - 4.0 * a * c).sqrt();
    let r1 = (-b + d) / (2.0 * a);
    let r2 = (-b - d) / (2.0 * a);
    let m = if r1.im >= r2.im { r1 } else { r2 };
    if m.im > 0.0 {
        Ok(m)
    } else {
        Err(Error::Branch(format!("no Herglotz root of the quadratic (best {m})")))
    }
}

/// Semicircle law with unit scale: root of `m^2 + z m + 1 = 0`.
pub fn stieltjes_semicircle(z: C64) -> Result<C64> {
    stieltjes_semicircle_scaled(z, 1.0)
}

pub fn stieltjes_semicircle_scaled(z: C64, sigma: f64) -> Result<C64> {
    upper(z)?;
    quadratic_herglotz(C64::new(sigma * sigma, 0.0), z, C64::new(1.0, 0.0))
}

/// Marčenko–Pastur law with ratio `c`: root of `c z m^2 + (z + c - 1) m + 1 = 0`.
pub fn stieltjes_mp(z: C64, c: f64) -> Result<C64> {
    upper(z)?;
    ensure(c > 0.0, || "c must be positive".into())?;
    quadratic_herglotz(c * z, z + c - 1.0, C64::new(1.0, 0.0))
}

/// MP Stieltjes transform at a real point `x < 0`, as the limit from above.
pub fn stieltjes_mp_negative(x: f64, c: f64) -> Result<f64> {
    ensure(x < 0.0, || "point must lie left of the support".into())?;
    ensure(c > 0.0, || "c must be positive".into())?;
    // c x m^2 + (x + c - 1) m + 1 = 0; the positive root is the limit
    let (a, b) = (c * x, x + c - 1.0);
    let d = (b * b - 4.0 * a).sqrt();
    let r = [(-b + d) / (2.0 * a), (-b - d) / (2.0 * a)];
    Ok(r.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `∫ dF(λ) / (λ - z)` by quadrature over the law's continuous support plus its atom.
pub fn stieltjes_law(law: &dyn Law, z: C64) -> Result<C64> {
    upper(z)?;
    let (a, b) = law.continuous_support();
    let re = quad::integrate_sqrt_edges(|l| law.pdf(l) * (C64::new(l, 0.0) - z).inv().re, a, b, 1e-11)?;
    let im = quad::integrate_sqrt_edges(|l| law.pdf(l) * (C64::new(l, 0.0) - z).inv().im, a, b, 1e-11)?;
    let mut m = C64::new(re, im);
    if let Some((x0, w)) = law.atom() {
        m += w * (C64::new(x0, 0.0) - z).inv();
    }
    Ok(m)
}

/// `(1/π) Im m(x + i eps)` on a grid.
pub fn inverse_stieltjes_density(m: &StieltjesFn, xs: &[f64], eps: f64) -> Result<Vec<f64>> {
    ensure(eps > 0.0, || "eps must be positive".into())?;
    xs.iter()
        .map(|&x| Ok(m.eval(C64::new(x, eps))?.im / std::f64::consts::PI))
        .collect()
}

/// Stieltjes transform of `BA` (size `n`) from that of `AB` (size `N`).
pub fn companion_identity(m_ab: C64, big_n: usize, n: usize, z: C64) -> Result<C64> {
    ensure(z.im != 0.0, || "z must be non-real".into())?;
    ensure(big_n > 0 && n > 0, || "dimensions must be positive".into())?;
    let (bn, sn) = (big_n as f64, n as f64);
    Ok(m_ab * (bn / sn) + ((bn - sn) / sn) / z)
}

/// Companion `m_F̲ = c m_F + (c - 1)/z`, inverted.
pub fn companion_to_primary(m_under: C64, c: f64, z: C64) -> C64 {
    (m_under - (c - 1.0) / z) / c
}

pub fn primary_to_companion(m: C64, c: f64, z: C64) -> C64 {
    m * c + (c - 1.0) / z
}

fn silverstein_map(pop: &[(f64, f64)], c: f64, z: C64, m: C64) -> C64 {
    let s: C64 = pop.iter().map(|&(t, w)| w * t / (1.0 + t * m)).sum();
    -(z - c * s).inv()
}

/// Companion Stieltjes transform `m` solving `m = -(z - c ∫ t/(1 + t m) dH(t))^{-1}`
/// for a discrete population law `pop = [(t, weight)]`.
pub fn silverstein_fixed_point(pop: &[(f64, f64)], c: f64, z: C64) -> Result<C64> {
    upper(z)?;
    ensure(c > 0.0, || "c must be positive".into())?;
    ensure(!pop.is_empty(), || "empty population law".into())?;
    ensure(pop.iter().all(|&(t, w)| t >= 0.0 && w >= 0.0), || {
        "population atoms and weights must be nonnegative".into()
    })?;
    let total: f64 = pop.iter().map(|p| p.1).sum();
    ensure((total - 1.0).abs() < 1e-9, || format!("population weights sum to {total}"))?;

    let mut m = -z.inv();
    let mut beta = 0.5;
    let mut prev_step = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _ in 0..10_000 {
        let g = silverstein_map(pop, c, z, m);
        residual = (g - m).norm();
        if residual < 1e-10 * m.norm().max(1.0) && m.im > 0.0 {
            // polish so the returned value itself has a tiny residual
            let g2 = silverstein_map(pop, c, z, g);
            return Ok(if (g2 - g).norm() <= residual { g } else { m });
        }
        if residual > prev_step && beta > 1e-3 {
            beta *= 0.5;
        }
        prev_step = residual;
        let next = m * (1.0 - beta) + g * beta;
        m = if next.im > 0.0 { next } else { C64::new(next.re, m.im * 0.5) };
    }
    if pop.len() <= 12 {
        return silverstein_polynomial(pop, c, z);
    }
    Err(Error::NoConvergence { what: "Silverstein fixed point", iterations: 10_000, residual })
}

/// Same equation cleared of denominators: `(z - c Σ w t/(1+tm)) m + 1 = 0`
/// times `Π (1 + t_j m)`.
fn silverstein_polynomial(pop: &[(f64, f64)], c: f64, z: C64) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    let mul = |p: &[C64], q: &[C64]| {
        let mut r = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        r
    };
    let add = |p: &[C64], q: &[C64]| {
        let mut r = vec![C64::new(0.0, 0.0); p.len().max(q.len())];
        for (i, a) in p.iter().enumerate() {
            r[i] += a;
        }
        for (i, b) in q.iter().enumerate() {
            r[i] += b;
        }
        r
    };
    let mut prod = vec![one];
    for &(t, _) in pop {
        prod = mul(&prod, &[one, C64::new(t, 0.0)]);
    }
    // (z m + 1) Π(1 + t m) - c m Σ w t Π_{j≠i}(1 + t_j m)
    let mut poly = mul(&prod, &[one, z]);
    for (i, &(t, w)) in pop.iter().enumerate() {
        let mut others = vec![one];
        for (j, &(tj, _)) in pop.iter().enumerate() {
            if i != j {
                others = mul(&others, &[one, C64::new(tj, 0.0)]);
            }
        }
        let term = mul(&others, &[C64::new(0.0, 0.0), C64::new(-c * w * t, 0.0)]);
        poly = add(&poly, &term);
    }
    let (m, _) = poly::herglotz_root(&poly)?;
    Ok(m)
}

/// Evaluable transform on a neighbourhood of 0 (real or complex argument).
#[derive(Clone)]
pub struct Transform {
    f: ComplexFn,
}

impl Transform {
    pub fn new(f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static) -> Self {
        Transform { f: Arc::new(f) }
    }

    pub fn eval(&self, w: C64) -> Result<C64> {
        (self.f)(w)
    }

    pub fn eval_real(&self, w: f64) -> Result<f64> {
        Ok(self.eval(C64::new(w, 0.0))?.re)
    }
}

/// Sources with closed-form transforms, or an arbitrary law handled numerically.
#[derive(Clone)]
pub enum FreeSource {
    PointMass(f64),
    Mp { c: f64, sigma: f64 },
    Semicircle { sigma: f64 },
    /// Law of `D^2` where `D` is diagonal with Bernoulli(p) unit entries.
    Bernoulli { p: f64 },
    Law(Arc<dyn Law>),
}

/// S-transform of `source`.
pub fn s_transform(source: &FreeSource) -> Result<Transform> {
    Ok(match source.clone() {
        FreeSource::PointMass(a) => {
            ensure(a > 0.0, || "point mass must be positive".into())?;
            Transform::new(move |_| Ok(C64::new(1.0 / a, 0.0)))
        }
        FreeSource::Mp { c, sigma } => {
            let s2 = sigma * sigma;
            Transform::new(move |w| Ok((s2 * (1.0 + c * w)).inv()))
        }
        FreeSource::Bernoulli { p } => {
            ensure(p > 0.0 && p <= 1.0, || "p must lie in (0, 1]".into())?;
            Transform::new(move |w| Ok((1.0 + w) / (p + w)))
        }
        FreeSource::Semicircle { .. } => {
            return Err(Error::domain("S-transform needs a law with nonzero mean"))
        }
        FreeSource::Law(law) => numeric_s(law),
    })
}

/// R-transform of `source`.
pub fn r_transform(source: &FreeSource) -> Result<Transform> {
    Ok(match source.clone() {
        FreeSource::PointMass(a) => Transform::new(move |_| Ok(C64::new(a, 0.0))),
        FreeSource::Mp { c, sigma } => {
            let s2 = sigma * sigma;
            Transform::new(move |w| Ok(s2 / (1.0 - c * s2 * w)))
        }
        FreeSource::Semicircle { sigma } => Transform::new(move |w| Ok(w * sigma * sigma)),
        FreeSource::Bernoulli { p } => Transform::new(move |w| {
            // G = (1 - p)/z + p/(z - 1); invert for z
            let b = -(w + 1.0);
            let d = (b * b - 4.0 * w * (1.0 - p)).sqrt();
            // the branch with z ~ 1/w as w -> 0
            let z = (-b + d) / (2.0 * w);
            Ok(z - w.inv())
        }),
        FreeSource::Law(law) => numeric_r(law),
    })
}

/// Cauchy transform of a law by quadrature, with derivative.
fn cauchy_law(law: &dyn Law, z: C64) -> Result<(C64, C64)> {
    let (a, b) = law.continuous_support();
    let part = |f: &dyn Fn(C64) -> C64| -> Result<C64> {
        let re = quad::integrate_sqrt_edges(|l| law.pdf(l) * f(C64::new(l, 0.0)).re, a, b, 1e-11)?;
        let im = quad::integrate_sqrt_edges(|l| law.pdf(l) * f(C64::new(l, 0.0)).im, a, b, 1e-11)?;
        Ok(C64::new(re, im))
    };
    let mut g = part(&|l| (z - l).inv())?;
    let mut dg = part(&|l| -((z - l) * (z - l)).inv())?;
    if let Some((x0, w)) = law.atom() {
        g += w / (z - x0);
        dg -= w / ((z - x0) * (z - x0));
    }
    Ok((g, dg))
}

/// Solves `target(z) = w` by Newton's method started at `z0`.
fn newton(mut z: C64, w: C64, f: impl Fn(C64) -> Result<(C64, C64)>, what: &'static str) -> Result<C64> {
    let mut res = f64::INFINITY;
    for _ in 0..100 {
        let (v, dv) = f(z)?;
        res = (v - w).norm();
        if res < 1e-13 * w.norm().max(1e-3) {
            return Ok(z);
        }
        let mut step = (v - w) / dv;
        // limit the step to keep the iteration in the analytic region
        let cap = 0.5 * z.norm().max(1e-6);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        z -= step;
    }
    if res < 1e-9 * w.norm().max(1e-3) {
        return Ok(z);
    }
    Err(Error::NoConvergence { what, iterations: 100, residual: res })
}

/// Solves `f(x) = target` for `f` monotone on `[lo, hi]`, given as values
/// at the ends bracketing the target.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if (flo - target).signum() == (fhi - target).signum() {
        return Err(Error::domain(format!("value {target} outside the invertible range")));
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid)? < target) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Moves outward from `edge` in direction `dir` until `f` crosses `target`.
fn bracket(f: &impl Fn(f64) -> Result<f64>, edge: f64, dir: f64, width: f64, target: f64) -> Result<(f64, f64)> {
    let near = edge + dir * 1e-6 * width;
    let s0 = (f(near)? - target).signum();
    let mut step = width;
    for _ in 0..200 {
        let far = edge + dir * step;
        if (f(far)? - target).signum() != s0 {
            return Ok(if dir > 0.0 { (near, far) } else { (far, near) });
        }
        step *= 2.0;
    }
    Err(Error::domain(format!("value {target} outside the invertible range")))
}

/// Real-axis solution of `G(x) = w` outside the support.
fn invert_cauchy_real(law: &dyn Law, w: f64) -> Result<f64> {
    let (a, b) = law.support();
    let width = (b - a).max(1e-3);
    let g = |x: f64| cauchy_law(law, C64::new(x, 0.0)).map(|v| v.0.re);
    let (edge, dir) = if w > 0.0 { (b, 1.0) } else { (a, -1.0) };
    let (lo, hi) = bracket(&g, edge, dir, width, w)?;
    bisect(g, lo, hi, w)
}

/// Real-axis solution of `M(x) = w`, to the right of the support for
/// `w > 0` and to the left for `w < 0`.
fn invert_moment_real(law: &dyn Law, w: f64) -> Result<f64> {
    let (a, b) = law.support();
    let width = (b - a).max(1e-3);
    let m = |x: f64| cauchy_law(law, C64::new(x, 0.0)).map(|v| x * v.0.re - 1.0);
    let (edge, dir) = if w > 0.0 { (b, 1.0) } else { (a, -1.0) };
    let (lo, hi) = bracket(&m, edge, dir, width, w)?;
    bisect(m, lo, hi, w)
}

fn law_mean(law: &dyn Law) -> Result<f64> {
    let (a, b) = law.continuous_support();
    let mut m = quad::integrate_sqrt_edges(|l| l * law.pdf(l), a, b, 1e-12)?;
    if let Some((x0, w)) = law.atom() {
        m += w * x0;
    }
    Ok(m)
}

/// R-transform of a law: real arguments by bisection on the real axis,
/// complex arguments by Newton's method warm-started from the previous call.
fn numeric_r(law: Arc<dyn Law>) -> Transform {
    let last: Arc<Mutex<Option<(C64, C64)>>> = Arc::new(Mutex::new(None));
    Transform::new(move |w| {
        if w.norm() < 1e-14 {
            return Ok(C64::new(law_mean(law.as_ref())?, 0.0));
        }
        let z = if w.im == 0.0 {
            C64::new(invert_cauchy_real(law.as_ref(), w.re)?, 0.0)
        } else {
            let guess = match *last.lock().unwrap() {
                Some((pw, pz)) if (pw - w).norm() < 0.25 * w.norm() => pz,
                _ => w.inv() + law_mean(law.as_ref())?,
            };
            newton(guess, w, |z| cauchy_law(law.as_ref(), z), "R-transform inversion")?
        };
        *last.lock().unwrap() = Some((w, z));
        Ok(z - w.inv())
    })
}

/// S-transform of a law with positive support.
fn numeric_s(law: Arc<dyn Law>) -> Transform {
    let last: Arc<Mutex<Option<(C64, C64)>>> = Arc::new(Mutex::new(None));
    Transform::new(move |w| {
        let mean = law_mean(law.as_ref())?;
        ensure(mean > 0.0, || "S-transform needs a law with positive mean".into())?;
        if w.norm() < 1e-14 {
            return Ok(C64::new(1.0 / mean, 0.0));
        }
        // M(z) = z G(z) - 1, M'(z) = G + z G'
        let m_of = |z: C64| cauchy_law(law.as_ref(), z).map(|(g, dg)| (z * g - 1.0, g + z * dg));
        let z = if w.im == 0.0 {
            C64::new(invert_moment_real(law.as_ref(), w.re)?, 0.0)
        } else {
            let guess = match *last.lock().unwrap() {
                Some((pw, pz)) if (pw - w).norm() < 0.25 * w.norm() => pz,
                _ => mean * (1.0 + w) / w,
            };
            newton(guess, w, m_of, "S-transform inversion")?
        };
        *last.lock().unwrap() = Some((w, z));
        Ok((1.0 + w) / (w * z))
    })
}

pub fn free_multiply(a: &Transform, b: &Transform) -> Transform {
    let (a, b) = (a.clone(), b.clone());
    Transform::new(move |w| Ok(a.eval(w)? * b.eval(w)?))
}

pub fn free_add(a: &Transform, b: &Transform) -> Transform {
    let (a, b) = (a.clone(), b.clone());
    Transform::new(move |w| Ok(a.eval(w)? + b.eval(w)?))
}

/// Density recovered on a grid; points where the inversion failed are NaN
/// and listed in `failures`.
#[derive(Clone, Debug)]
pub struct DensityCurve {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub failures: Vec<usize>,
}

impl DensityCurve {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Follows the root of `eq(z, u) = 0` from `z = x + i y0` down to `x + i eps`,
/// where `u` starts at `u0(z)`. Returns the final `u`.
fn continuation(
    x: f64,
    y0: f64,
    eps: f64,
    u0: impl Fn(C64) -> C64,
    eq: &impl Fn(C64, C64) -> Result<C64>,
) -> Result<C64> {
    let mut y = y0;
    let mut u = u0(C64::new(x, y));
    loop {
        let z = C64::new(x, y);
        u = newton_eq(z, u, eq)?;
        if y <= eps {
            return Ok(u);
        }
        y = (y * 0.7).max(eps);
    }
}

fn newton_eq(z: C64, mut u: C64, eq: &impl Fn(C64, C64) -> Result<C64>) -> Result<C64> {
    let mut res = f64::INFINITY;
    for _ in 0..60 {
        let f = eq(z, u)?;
        res = f.norm();
        if res < 1e-13 {
            return Ok(u);
        }
        let h = 1e-7 * (1.0 + u.norm());
        let df = (eq(z, u + h)? - eq(z, u - h)?) / (2.0 * h);
        let mut step = f / df;
        let cap = 0.3 * (u.norm() + 1e-3);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        u -= step;
    }
    if res < 1e-9 {
        return Ok(u);
    }
    Err(Error::NoConvergence { what: "density continuation", iterations: 60, residual: res })
}

fn curve(xs: &[f64], f: impl Fn(f64) -> Result<f64>) -> DensityCurve {
    let mut density = Vec::with_capacity(xs.len());
    let mut failures = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        match f(x) {
            Ok(v) if v.is_finite() => density.push(v.max(0.0)),
            _ => {
                density.push(f64::NAN);
                failures.push(i);
            }
        }
    }
    DensityCurve { x: xs.to_vec(), density, failures }
}

/// Density of the law whose S-transform is `s`, evaluated at `x + i eps`.
/// `scale` is a rough size of the support, used to start the continuation.
pub fn density_from_s(s: &Transform, xs: &[f64], eps: f64, scale: f64) -> DensityCurve {
    // w = z G - 1 solves z w S(w) = 1 + w; G = (1 + w)/z
    let eq = |z: C64, w: C64| Ok(z * w * s.eval(w)? - 1.0 - w);
    let s0 = s.eval(C64::new(0.0, 0.0)).map(|v| v.re).unwrap_or(1.0);
    curve(xs, |x| {
        let w = continuation(x, 20.0 * scale, eps, |z| (s0 * z).inv(), &eq)?;
        let z = C64::new(x, eps);
        Ok(-((1.0 + w) / z).im / std::f64::consts::PI)
    })
}

/// Density of the law whose R-transform is `r`.
pub fn density_from_r(r: &Transform, xs: &[f64], eps: f64, scale: f64) -> DensityCurve {
    // G R(G) + 1 - z G = 0
    let eq = |z: C64, g: C64| Ok(g * r.eval(g)? + 1.0 - z * g);
    curve(xs, |x| {
        let g = continuation(x, 20.0 * scale, eps, |z| z.inv(), &eq)?;
        Ok(-g.im / std::f64::consts::PI)
    })
}

/// Stieltjes transform (`m = -G`) of the law with R-transform `r`, at a point `z`
/// reached by continuation from far above.
pub fn stieltjes_from_r(r: &Transform, z: C64, scale: f64) -> Result<C64> {
    upper(z)?;
    let eq = |z: C64, g: C64| Ok(g * r.eval(g)? + 1.0 - z * g);
    let y0 = (20.0 * scale).max(z.im);
    let mut g = continuation(z.re, y0, z.im, |z| z.inv(), &eq)?;
    g = newton_eq(z, g, &eq)?;
    Ok(-g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{MpLaw, SemicircleLaw};
    use crate::linalg::Field;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn empirical_examples() {
        let s = SpectralSample::new(vec![0.0], Field::Real).unwrap();
        assert!((stieltjes_empirical(&s, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        let s = SpectralSample::new(vec![1.0, -1.0], Field::Real).unwrap();
        assert!((stieltjes_empirical(&s, c(0.0, 2.0)).unwrap() - c(0.0, 0.4)).norm() < 1e-15);
        assert!(stieltjes_empirical(&s, c(1.0, 0.0)).is_err());
        let m = stieltjes_empirical(&s, c(0.0, 1e6)).unwrap();
        assert!((m.norm() - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!((stieltjes_semicircle(c(0.0, 1.0)).unwrap() - c(0.0, g)).norm() < 1e-14);
        assert!((stieltjes_semicircle(c(0.0, 3.0)).unwrap() - c(0.0, (13f64.sqrt() - 3.0) / 2.0)).norm() < 1e-14);
        let m = stieltjes_mp(c(0.0, 1.0), 1.0).unwrap();
        let want = (c(1.0, 4.0).sqrt() - 1.0) / 2.0;
        assert!((m - want).norm() < 1e-14);
        assert!((m - c(0.300_28, 0.624_81)).norm() < 1e-4);
        let m = stieltjes_mp(c(0.0, 1.0), 1e-9).unwrap();
        assert!((m - c(0.5, 0.5)).norm() < 1e-6);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let sc = Arc::new(SemicircleLaw::new(1.0).unwrap());
        let mp = Arc::new(MpLaw::new(0.5, 1.0).unwrap());
        let mp2 = Arc::new(MpLaw::new(2.0, 1.0).unwrap());
        for z in [c(0.0, 1.0), c(1.5, 0.2), c(-3.0, 0.5)] {
            let a = stieltjes_law(sc.as_ref(), z).unwrap();
            assert!((a - stieltjes_semicircle(z).unwrap()).norm() < 1e-9);
            let b = stieltjes_law(mp.as_ref(), z).unwrap();
            assert!((b - stieltjes_mp(z, 0.5).unwrap()).norm() < 1e-9);
            let b = stieltjes_law(mp2.as_ref(), z).unwrap();
            assert!((b - stieltjes_mp(z, 2.0).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_density() {
        let m = StieltjesFn::semicircle(1.0);
        let d = inverse_stieltjes_density(&m, &[0.0, 3.0], 1e-4).unwrap();
        assert!((d[0] - 1.0 / std::f64::consts::PI).abs() < 1e-3);
        assert!(d[1] < 1e-4);
        let m = StieltjesFn::mp(0.5, 1.0);
        let d = inverse_stieltjes_density(&m, &[1.0], 1e-4).unwrap();
        assert!((d[0] - 0.4211).abs() < 1e-3);
    }

    #[test]
    fn companion_examples() {
        let z = c(0.3, 0.7);
        let m = c(0.2, 0.9);
        assert!((companion_identity(m, 5, 5, z).unwrap() - m).norm() < 1e-15);
        // hand check: m_BA = 2i + 1/i = i
        let v = companion_identity(c(0.0, 1.0), 2, 1, c(0.0, 1.0)).unwrap();
        assert!((v - c(0.0, 1.0)).norm() < 1e-15);
        // MP companion relation with N = 1000, n = 2000
        let mf = stieltjes_mp(z, 0.5).unwrap();
        let under = companion_identity(mf, 1000, 2000, z).unwrap();
        assert!((under - primary_to_companion(mf, 0.5, z)).norm() < 1e-12);
    }

    #[test]
    fn companion_matches_rank_deficient_matrix() {
        // A = u (3x1), B = v^T (1x3): AB has one nonzero eigenvalue v.u, BA = [v.u]
        let (u, v) = ([1.0, 2.0, -1.0], [0.5, 0.25, 1.0]);
        let lam: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let z = c(0.4, 0.8);
        let m_ab = ((c(lam, 0.0) - z).inv() + 2.0 * (-z).inv()) / 3.0;
        let m_ba = (c(lam, 0.0) - z).inv();
        assert!((companion_identity(m_ab, 3, 1, z).unwrap() - m_ba).norm() < 1e-14);
    }

    #[test]
    fn silverstein_point_mass_is_mp() {
        for z in [c(0.0, 1.0), c(1.2, 0.05), c(3.0, 0.3)] {
            let mu = silverstein_fixed_point(&[(1.0, 1.0)], 0.5, z).unwrap();
            let want = primary_to_companion(stieltjes_mp(z, 0.5).unwrap(), 0.5, z);
            assert!((mu - want).norm() < 1e-8, "{z}: {mu} vs {want}");
        }
        // scaled population
        let z = c(0.5, 0.5);
        let m = StieltjesFn::silverstein(vec![(2.0, 1.0)], 0.5).eval(z).unwrap();
        let want = StieltjesFn::mp(0.5, 2f64.sqrt()).eval(z).unwrap();
        assert!((m - want).norm() < 1e-8);
    }

    #[test]
    fn silverstein_two_atoms() {
        let pop = [(1.0, 0.5), (3.0, 0.5)];
        let z = c(0.0, 1.0);
        let m = silverstein_fixed_point(&pop, 0.5, z).unwrap();
        assert!(m.im > 0.0);
        assert!((silverstein_map(&pop, 0.5, z, m) - m).norm() < 1e-10);
        let p = silverstein_polynomial(&pop, 0.5, z).unwrap();
        assert!((p - m).norm() < 1e-8);
    }

    #[test]
    fn numeric_s_of_mp() {
        for cc in [0.3, 1.0] {
            let s = s_transform(&FreeSource::Law(Arc::new(MpLaw::new(cc, 1.0).unwrap()))).unwrap();
            for i in 0..=8 {
                let w = -0.4 + 0.1 * i as f64;
                let v = s.eval_real(w).unwrap();
                assert!((v - 1.0 / (1.0 + cc * w)).abs() < 1e-6, "c={cc} w={w} S={v}");
            }
        }
    }

    #[test]
    fn numeric_r_of_semicircle_and_mp() {
        let r = r_transform(&FreeSource::Law(Arc::new(SemicircleLaw::new(1.5).unwrap()))).unwrap();
        for w in [-0.3, -0.1, 0.0, 0.2, 0.3] {
            assert!((r.eval_real(w).unwrap() - 2.25 * w).abs() < 1e-6, "w={w}");
        }
        let r = r_transform(&FreeSource::Law(Arc::new(MpLaw::new(0.5, 1.0).unwrap()))).unwrap();
        for w in [-0.3, 0.1, 0.3] {
            assert!((r.eval_real(w).unwrap() - 1.0 / (1.0 - 0.5 * w)).abs() < 1e-6, "w={w}");
        }
    }

    #[test]
    fn bernoulli_r_matches_numeric() {
        let p = 0.3;
        let closed = r_transform(&FreeSource::Bernoulli { p }).unwrap();
        // G of the Bernoulli law at real z > 1 and its inverse
        for z in [1.5, 2.0, 4.0] {
            let g = (1.0 - p) / z + p / (z - 1.0);
            let r = closed.eval_real(g).unwrap();
            assert!((r + 1.0 / g - z).abs() < 1e-10);
        }
    }

    #[test]
    fn free_sum_of_semicircles() {
        let r1 = r_transform(&FreeSource::Semicircle { sigma: 1.0 }).unwrap();
        let r2 = r_transform(&FreeSource::Semicircle { sigma: 0.75 }).unwrap();
        let r = free_add(&r1, &r2);
        let xs: Vec<f64> = (0..41).map(|i| -2.4 + 0.12 * i as f64).collect();
        let d = density_from_r(&r, &xs, 1e-9, 2.0);
        assert!(d.is_complete());
        let law = SemicircleLaw::new(1.25).unwrap();
        for (x, v) in xs.iter().zip(&d.density) {
            assert!((v - law.pdf(*x)).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn mp_times_identity_is_mp() {
        let s = free_multiply(
            &s_transform(&FreeSource::Mp { c: 0.5, sigma: 1.0 }).unwrap(),
            &s_transform(&FreeSource::PointMass(1.0)).unwrap(),
        );
        let law = MpLaw::new(0.5, 1.0).unwrap();
        let (a, b) = law.edges();
        let xs: Vec<f64> = (1..40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
        let d = density_from_s(&s, &xs, 1e-10, 3.0);
        assert!(d.is_complete(), "{:?}", d.failures);
        for (x, v) in xs.iter().zip(&d.density) {
            assert!((v - law.pdf(*x)).abs() < 1e-6, "x={x}");
        }
    }
}
