//! Complex polynomial roots and Herglotz branch selection.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

/// Evaluates `sum c[k] x^k` and its derivative.
pub fn eval(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

fn trim(c: &[C64]) -> &[C64] {
    let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut n = c.len();
    while n > 1 && c[n - 1].norm() <= 1e-300_f64.max(scale * 1e-15) {
        n -= 1;
    }
    &c[..n]
}

/// All roots of the polynomial with ascending coefficients `c` (Aberth–Ehrlich).
pub fn roots(c: &[C64]) -> Result<Vec<C64>> {
    let c = trim(c);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = c[deg];
    // Cauchy bound for the initial circle
    let radius = 1.0 + c[..deg].iter().map(|v| (v / lead).norm()).fold(0.0, f64::max);
    let r0 = radius.min(
        c[..deg]
            .iter()
            .enumerate()
            .map(|(k, v)| (v / lead).norm().powf(1.0 / (deg - k) as f64))
            .fold(0.0, f64::max)
            .max(1e-3)
            * 2.0,
    );
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = C64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1e-12));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    // Newton polishing
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = eval(c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *zi -= step;
            if step.norm() < 1e-16 * zi.norm() {
                break;
            }
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            what: "polynomial root finder",
            iterations: 500,
            residual: f64::NAN,
        });
    }
    Ok(z)
}

/// The root with the largest imaginary part, required to be positive.
///
/// Returns the root and a flag set when a second root also lies strictly in
/// the upper half-plane (the selection was then ambiguous).
pub fn herglotz_root(c: &[C64]) -> Result<(C64, bool)> {
    let mut r = roots(c)?;
    r.sort_by(|a, b| b.im.total_cmp(&a.im));
    let best = *r.first().ok_or_else(|| Error::Branch("constant polynomial".into()))?;
    if best.im <= 0.0 {
        return Err(Error::Branch(format!(
            "no root in the upper half-plane (best Im = {:.3e})",
            best.im
        )));
    }
    let ambiguous = r.len() > 1 && r[1].im > 1e-8 * best.norm().max(1.0);
    Ok((best, ambiguous))
}
