//! Limiting spectral laws and goodness of fit.

use crate::ensembles::SpectralSample;
use crate::error::{ensure, Result};
use crate::linalg::Field;
use crate::quad;
use crate::rng::{self, Seed};
use crate::special;
use std::f64::consts::PI;

/// A probability law on the real line, possibly with one atom.
pub trait Law: Send + Sync {
    /// Density of the continuous part.
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    /// Interval carrying all the mass (may be wider than the exact support).
    fn support(&self) -> (f64, f64);
    /// Interval carrying the continuous part.
    fn continuous_support(&self) -> (f64, f64) {
        self.support()
    }
    /// Location and mass of an atom, if any.
    fn atom(&self) -> Option<(f64, f64)> {
        None
    }
    /// Generalised inverse of the cdf, found by bisection.
    fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if let Some((x0, m)) = self.atom() {
            let below = self.cdf(x0) - m;
            if p > below && p <= below + m {
                return x0;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemicircleLaw {
    pub sigma: f64,
}

impl SemicircleLaw {
    pub fn new(sigma: f64) -> Result<Self> {
        ensure(sigma > 0.0 && sigma.is_finite(), || "sigma must be positive".into())?;
        Ok(SemicircleLaw { sigma })
    }
}

pub fn semicircle_pdf(x: f64, sigma: f64) -> Result<f64> {
    Ok(SemicircleLaw::new(sigma)?.pdf(x))
}

impl Law for SemicircleLaw {
    fn pdf(&self, x: f64) -> f64 {
        let r2 = 4.0 * self.sigma * self.sigma;
        if x * x >= r2 {
            0.0
        } else {
            (r2 - x * x).sqrt() / (2.0 * PI * self.sigma * self.sigma)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let r = 2.0 * self.sigma;
        if x <= -r {
            return 0.0;
        }
        if x >= r {
            return 1.0;
        }
        let u = x / r;
        (0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI).clamp(0.0, 1.0)
    }

    fn support(&self) -> (f64, f64) {
        (-2.0 * self.sigma, 2.0 * self.sigma)
    }
}

/// Marčenko–Pastur law with ratio `c = N/n` and entry scale `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpLaw {
    pub c: f64,
    pub sigma: f64,
}

impl MpLaw {
    pub fn new(c: f64, sigma: f64) -> Result<Self> {
        ensure(c > 0.0 && c.is_finite(), || "c must be positive".into())?;
        ensure(sigma > 0.0 && sigma.is_finite(), || "sigma must be positive".into())?;
        Ok(MpLaw { c, sigma })
    }

    pub fn edges(&self) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let r = self.c.sqrt();
        (s2 * (1.0 - r).powi(2), s2 * (1.0 + r).powi(2))
    }

    pub fn mass_at_zero(&self) -> f64 {
        mp_mass_at_zero(self.c)
    }

    fn continuous_mass_below(&self, x: f64) -> f64 {
        let (a, b) = self.edges();
        if x <= a {
            return 0.0;
        }
        let cont = 1.0 - self.mass_at_zero();
        if x >= b {
            return cont;
        }
        // integrate over whichever side is shorter
        let left = quad::integrate_sqrt_edges(|t| self.pdf(t), a, x, 1e-12).unwrap_or(f64::NAN);
        left.clamp(0.0, cont)
    }
}

pub fn mp_mass_at_zero(c: f64) -> f64 {
    (1.0 - 1.0 / c).max(0.0)
}

pub fn mp_support(c: f64, sigma: f64) -> Result<(f64, f64)> {
    Ok(MpLaw::new(c, sigma)?.edges())
}

pub fn mp_pdf(x: f64, c: f64, sigma: f64) -> Result<f64> {
    Ok(MpLaw::new(c, sigma)?.pdf(x))
}

impl Law for MpLaw {
    fn pdf(&self, x: f64) -> f64 {
        let (a, b) = self.edges();
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((x - a) * (b - x)).sqrt() / (2.0 * PI * x * self.c * self.sigma * self.sigma)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (self.mass_at_zero() + self.continuous_mass_below(x)).min(1.0)
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = self.edges();
        (if self.c > 1.0 { 0.0 } else { a }, b)
    }

    fn continuous_support(&self) -> (f64, f64) {
        self.edges()
    }

    fn atom(&self) -> Option<(f64, f64)> {
        let m = self.mass_at_zero();
        (m > 0.0).then_some((0.0, m))
    }
}

/// Normal law, used for fluctuation results.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalLaw {
    pub mean: f64,
    pub sd: f64,
}

impl NormalLaw {
    pub fn standard() -> Self {
        NormalLaw { mean: 0.0, sd: 1.0 }
    }
}

impl Law for NormalLaw {
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * PI).sqrt())
    }

    fn cdf(&self, x: f64) -> f64 {
        special::normal_cdf((x - self.mean) / self.sd)
    }

    fn support(&self) -> (f64, f64) {
        (self.mean - 40.0 * self.sd, self.mean + 40.0 * self.sd)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.mean + self.sd * special::normal_quantile(p)
    }
}

/// Cumulative table of a density on increasing nodes, interpolated by cubic
/// Hermite segments that use the density as the derivative.
#[derive(Clone, Debug)]
pub struct CdfTable {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub pdf: Vec<f64>,
}

impl CdfTable {
    /// Tabulates `pdf` on `[a, b]` with nodes clustered at both ends.
    pub fn from_pdf(pdf: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> Result<Self> {
        ensure(b > a && nodes >= 3, || "invalid table range".into())?;
        let x: Vec<f64> = (0..nodes)
            .map(|i| {
                let t = (i as f64 / (nodes - 1) as f64) * PI / 2.0;
                a + (b - a) * t.sin().powi(2)
            })
            .collect();
        let mut f = vec![0.0; nodes];
        for i in 1..nodes {
            f[i] = f[i - 1] + quad::integrate_sqrt_edges(&pdf, x[i - 1], x[i], 1e-13)?;
        }
        let p = x.iter().map(|&v| pdf(v)).collect();
        Ok(CdfTable { x, f, pdf: p })
    }

    /// Builds a table from given node values (already integrated).
    pub fn from_values(x: Vec<f64>, f: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        ensure(x.len() == f.len() && x.len() == pdf.len() && x.len() >= 2, || {
            "table columns differ in length".into()
        })?;
        ensure(x.windows(2).all(|w| w[1] > w[0]), || "table nodes must increase".into())?;
        Ok(CdfTable { x, f, pdf })
    }

    pub fn total(&self) -> f64 {
        *self.f.last().unwrap()
    }

    fn segment(&self, v: f64) -> usize {
        match self.x.binary_search_by(|p| p.total_cmp(&v)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.x.len();
        if v <= self.x[0] {
            return self.f[0];
        }
        if v >= self.x[n - 1] {
            return self.f[n - 1];
        }
        let i = self.segment(v);
        let h = self.x[i + 1] - self.x[i];
        let t = (v - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let y = h00 * self.f[i] + h10 * h * self.pdf[i] + h01 * self.f[i + 1] + h11 * h * self.pdf[i + 1];
        // keep the interpolant inside the segment's range
        y.clamp(self.f[i].min(self.f[i + 1]), self.f[i].max(self.f[i + 1]))
    }

    pub fn inverse(&self, p: f64) -> f64 {
        let n = self.x.len();
        if p <= self.f[0] {
            return self.x[0];
        }
        if p >= self.f[n - 1] {
            return self.x[n - 1];
        }
        let i = match self.f.binary_search_by(|q| q.total_cmp(&p)) {
            Ok(i) => return self.x[i],
            Err(i) => i - 1,
        };
        let (mut lo, mut hi) = (self.x[i], self.x[i + 1]);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A law given by a density table, for numerically derived laws.
#[derive(Clone, Debug)]
pub struct TabulatedLaw {
    table: CdfTable,
}

impl TabulatedLaw {
    /// Density values on an increasing grid; the table is normalised to mass 1.
    pub fn from_density(x: &[f64], density: &[f64]) -> Result<Self> {
        ensure(x.len() == density.len() && x.len() >= 2, || {
            "grid and density differ in length".into()
        })?;
        let mut f = vec![0.0; x.len()];
        for i in 1..x.len() {
            f[i] = f[i - 1] + 0.5 * (density[i] + density[i - 1]).max(0.0) * (x[i] - x[i - 1]);
        }
        let total = f[x.len() - 1];
        ensure(total > 0.0, || "density has no mass".into())?;
        let f = f.into_iter().map(|v| v / total).collect();
        let pdf = density.iter().map(|d| d.max(0.0) / total).collect();
        Ok(TabulatedLaw {
            table: CdfTable::from_values(x.to_vec(), f, pdf)?,
        })
    }

    pub fn from_table(table: CdfTable) -> Self {
        TabulatedLaw { table }
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }
}

impl Law for TabulatedLaw {
    fn pdf(&self, x: f64) -> f64 {
        let t = &self.table;
        if x <= t.x[0] || x >= *t.x.last().unwrap() {
            return 0.0;
        }
        let i = t.segment(x);
        let w = (x - t.x[i]) / (t.x[i + 1] - t.x[i]);
        t.pdf[i] * (1.0 - w) + t.pdf[i + 1] * w
    }

    fn cdf(&self, x: f64) -> f64 {
        self.table.eval(x)
    }

    fn support(&self) -> (f64, f64) {
        (self.table.x[0], *self.table.x.last().unwrap())
    }

    fn quantile(&self, p: f64) -> f64 {
        self.table.inverse(p)
    }
}

/// Empirical law of a sample, for two-sample comparisons.
#[derive(Clone, Debug)]
pub struct EmpiricalLaw {
    sorted: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn new(values: &[f64]) -> Result<Self> {
        ensure(!values.is_empty(), || "empty sample".into())?;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(EmpiricalLaw { sorted })
    }
}

impl Law for EmpiricalLaw {
    fn pdf(&self, _x: f64) -> f64 {
        0.0
    }

    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    fn support(&self) -> (f64, f64) {
        (self.sorted[0], *self.sorted.last().unwrap())
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `law`.
///
/// Sample points within `1e-9` (relative) of the law's atom are treated as
/// lying on it.
pub fn ks_values(values: &[f64], law: &dyn Law) -> Result<f64> {
    ensure(!values.is_empty(), || "empty sample".into())?;
    let mut v = values.to_vec();
    if let Some((x0, _)) = law.atom() {
        let (lo, hi) = law.support();
        let tol = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
        for x in v.iter_mut() {
            if (*x - x0).abs() <= tol {
                *x = x0;
            }
        }
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let f = law.cdf(x);
        let f_left = match law.atom() {
            Some((x0, m)) if x0 == x => f - m,
            _ => f,
        };
        d = d.max((j as f64 / n - f).abs()).max((i as f64 / n - f_left).abs());
        i = j;
    }
    Ok(d)
}

pub fn ks_distance(sample: &SpectralSample, law: &dyn Law) -> Result<f64> {
    ks_values(sample.eigenvalues(), law)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    ks_values(a, &EmpiricalLaw::new(b)?)
}

/// i.i.d. draws from `law` by inverting a cached cdf table.
pub fn law_sample(law: &dyn Law, n: usize, seed: Seed) -> Result<SpectralSample> {
    ensure(n >= 1, || "sample size must be positive".into())?;
    let (a, b) = law.continuous_support();
    let (x0, m) = law.atom().unwrap_or((f64::NAN, 0.0));
    let table = CdfTable::from_pdf(|t| law.pdf(t), a, b, 4097)?;
    let cont = table.total();
    let mut rng = seed.rng();
    let out = (0..n)
        .map(|_| {
            let u = rng::uniform(&mut rng);
            if u < m {
                x0
            } else {
                table.inverse((u - m) / (1.0 - m) * cont)
            }
        })
        .collect();
    SpectralSample::new(out, Field::Real)
}
