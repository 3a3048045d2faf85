//! One-dimensional quadrature.

use crate::error::{Error, Result};
use faer::{Mat, Side};
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and error estimate on one panel.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Panels with the largest error estimate are bisected until the summed error
/// falls below `tol * max(1, |I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { lo: a, hi: b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    let limit = 20_000;
    loop {
        if !total.is_finite() {
            return Err(Error::NoConvergence {
                what: "quadrature (non-finite integrand)",
                iterations: heap.len(),
                residual: f64::NAN,
            });
        }
        if err <= tol * total.abs().max(1.0) {
            return Ok(total);
        }
        if heap.len() >= limit {
            // recompute the sums to shed accumulated rounding before giving up
            let t: f64 = heap.iter().map(|p| p.value).sum();
            let e: f64 = heap.iter().map(|p| p.err).sum();
            if e <= tol * t.abs().max(1.0) {
                return Ok(t);
            }
            return Err(Error::NoConvergence { what: "adaptive quadrature", iterations: heap.len(), residual: e });
        }
        let p = heap.pop().unwrap();
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            return Ok(total);
        }
        let (v1, e1) = gk15(&f, p.lo, mid);
        let (v2, e2) = gk15(&f, mid, p.hi);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { lo: p.lo, hi: mid, value: v1, err: e1 });
        heap.push(Panel { lo: mid, hi: p.hi, value: v2, err: e2 });
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates over consecutive breakpoints, so that kinks are panel edges.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, points: &[f64], tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in points.windows(2) {
        total += integrate(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// Integral over `[a, b]` of a function with square-root behaviour at both
/// ends, via `x = a + (b - a) sin^2(theta)`.
pub fn integrate_sqrt_edges(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let w = b - a;
    integrate(
        |t: f64| {
            let (s, c) = t.sin_cos();
            let x = a + w * s * s;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * 2.0 * w * s * c
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        tol,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights for expectations under the standard normal law
/// (probabilists' Hermite rule, Golub–Welsch). The weights sum to 1.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("Gauss-Hermite rule needs at least one node"));
    }
    let j = Mat::from_fn(n, n, |i, k| {
        if i == k + 1 || k == i + 1 {
            (i.max(k) as f64).sqrt()
        } else {
            0.0
        }
    });
    let evd = j
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (s[i], u[(0, i)] * u[(0, i)])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}
