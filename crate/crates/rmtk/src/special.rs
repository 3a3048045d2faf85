//! Airy function and normal-law helpers.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = -0.258_819_403_792_806_8;

/// `Ai(x)` and `Ai'(x)` on `[-15, 15]`.
pub fn airy(x: f64) -> Result<f64> {
    Ok(airy_pair(x)?.0)
}

pub fn airy_pair(x: f64) -> Result<(f64, f64)> {
    if !(-15.0..=15.0).contains(&x) {
        return Err(Error::domain(format!("airy argument {x} outside [-15, 15]")));
    }
    Ok(airy_unchecked(x))
}

pub(crate) fn airy_unchecked(x: f64) -> (f64, f64) {
    if x > 5.0 {
        airy_asym_pos(x)
    } else if x < -7.0 {
        airy_asym_neg(-x)
    } else {
        airy_series(x)
    }
}

fn airy_series(x: f64) -> (f64, f64) {
    // Ai = Ai(0) f - |Ai'(0)| g with f, g the two Maclaurin solutions.
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    let mut k = 0.0;
    loop {
        k += 1.0;
        // tf_k = tf_{k-1} x^3 / ((3k-1)(3k)),  tg_k = tg_{k-1} x^3 / ((3k)(3k+1))
        tf *= x3 / ((3.0 * k - 1.0) * (3.0 * k));
        tg *= x3 / ((3.0 * k) * (3.0 * k + 1.0));
        f += tf;
        g += tg;
        if x != 0.0 {
            fp += 3.0 * k * tf / x;
            gp += (3.0 * k + 1.0) * tg / x;
        }
        if tf.abs() < 1e-18 * f.abs().max(1e-300) && tg.abs() < 1e-18 * g.abs().max(1e-300) && k > 3.0 {
            break;
        }
        if k > 200.0 {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

fn u_coeffs(n: usize) -> Vec<f64> {
    let mut u = vec![1.0];
    for k in 1..n {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    u
}

/// Sum of an asymptotic series truncated at its smallest term.
fn asym_sum(c: &[f64], z: f64, alternate: bool) -> f64 {
    let mut s = 0.0;
    let mut last = f64::INFINITY;
    for (k, ck) in c.iter().enumerate() {
        let t = ck / z.powi(k as i32);
        if t.abs() > last {
            break;
        }
        last = t.abs();
        s += if alternate && k % 2 == 1 { -t } else { t };
    }
    s
}

fn airy_asym_pos(x: f64) -> (f64, f64) {
    let z = 2.0 / 3.0 * x.powf(1.5);
    let u = u_coeffs(30);
    let v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| if k == 0 { 1.0 } else { -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * uk })
        .collect();
    let e = (-z).exp() / (2.0 * PI.sqrt());
    let ai = e / x.powf(0.25) * asym_sum(&u, z, true);
    let aip = -e * x.powf(0.25) * asym_sum(&v, z, true);
    (ai, aip)
}

fn airy_asym_neg(x: f64) -> (f64, f64) {
    let z = 2.0 / 3.0 * x.powf(1.5);
    let u = u_coeffs(30);
    let v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| if k == 0 { 1.0 } else { -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * uk })
        .collect();
    // split into even and odd parts with alternating signs
    let split = |c: &[f64]| {
        let mut even = 0.0;
        let mut odd = 0.0;
        let mut last = f64::INFINITY;
        for (k, ck) in c.iter().enumerate() {
            let t = ck / z.powi(k as i32);
            if t.abs() > last {
                break;
            }
            last = t.abs();
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                even += sign * t;
            } else {
                odd += sign * t;
            }
        }
        (even, odd)
    };
    let (ue, uo) = split(&u);
    let (ve, vo) = split(&v);
    let ph = z - PI / 4.0;
    let (s, c) = ph.sin_cos();
    let ai = (c * ue + s * uo) / (PI.sqrt() * x.powf(0.25));
    let aip = x.powf(0.25) / PI.sqrt() * (s * ve - c * vo);
    (ai, aip)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `P(Z > x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(2.0 * p - 1.0)
}

pub fn erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values: Ai, Ai' from an arbitrary-precision evaluation
    const TABLE: [(f64, f64, f64); 9] = [
        (-12.0, -0.066_555_175_054_373_129, 1.023_110_453_367_970_7),
        (-7.5, 0.321_775_716_380_647_88, 0.318_809_506_698_554_6),
        (-6.0, -0.329_145_173_629_823_11, 0.345_935_487_281_342_89),
        (-2.0, 0.227_407_428_201_685_58, 0.618_259_020_741_691_04),
        (0.0, 0.355_028_053_887_817_24, -0.258_819_403_792_806_8),
        (1.0, 0.135_292_416_312_881_42, -0.159_147_441_296_793_21),
        (4.9, 1.359_921_170_150_674_3e-4, -3.076_159_963_376_495_1e-4),
        (5.1, 8.613_242_706_478_851_2e-5, -1.985_325_478_818_054e-4),
        (8.0, 4.692_207_616_099_231_6e-8, -1.341_439_297_906_786_6e-7),
    ];

    #[test]
    fn matches_reference_table() {
        for (x, ai, aip) in TABLE {
            let (a, ap) = airy_pair(x).unwrap();
            assert!((a - ai).abs() < 1e-10 * ai.abs().max(1.0), "Ai({x}) = {a}, want {ai}");
            assert!((ap - aip).abs() < 1e-10 * aip.abs().max(1.0), "Ai'({x}) = {ap}, want {aip}");
        }
    }

    #[test]
    fn relative_accuracy_in_right_tail() {
        let (a, _) = airy_pair(8.0).unwrap();
        assert!((a / 4.692_207_616_099_231_6e-8 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn satisfies_airy_equation() {
        for &x in &[-10.0, -6.9, -3.3, 0.4, 2.5, 4.99, 5.01, 9.0] {
            let h = 1e-4;
            let d2 = (airy_pair(x + h).unwrap().1 - airy_pair(x - h).unwrap().1) / (2.0 * h);
            let a = airy(x).unwrap();
            assert!((d2 - x * a).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn out_of_range() {
        assert!(airy(15.5).is_err());
    }

    #[test]
    fn normal_helpers() {
        assert!((normal_quantile(0.95) - 1.644_853_626_951_472_2).abs() < 1e-9);
        assert!((normal_cdf(normal_quantile(0.3)) - 0.3).abs() < 1e-12);
    }
}
