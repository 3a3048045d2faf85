//! Seeded random-matrix ensembles and empirical spectra.

use crate::error::{ensure, Error, Result};
use crate::linalg::{FMat, Field, SymTridiagonal};
use crate::rng::{self, Rng, Seed};
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::Gamma;

pub use crate::linalg::Field as MatrixField;

/// Sorted eigenvalues of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSample {
    eigenvalues: Vec<f64>,
    pub field: Field,
}

impl SpectralSample {
    pub fn new(mut eigenvalues: Vec<f64>, field: Field) -> Result<Self> {
        ensure(!eigenvalues.is_empty(), || "empty spectrum".into())?;
        ensure(eigenvalues.iter().all(|v| v.is_finite()), || {
            "non-finite eigenvalue".into()
        })?;
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Ok(SpectralSample { eigenvalues, field })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.dim() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.eigenvalues.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.dim() as f64
    }

    pub fn scaled(&self, s: f64) -> SpectralSample {
        let mut e: Vec<f64> = self.eigenvalues.iter().map(|v| v * s).collect();
        if s < 0.0 {
            e.reverse();
        }
        SpectralSample { eigenvalues: e, field: self.field }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.eigenvalues
    }
}

/// Population spikes `alpha_j` with multiplicities `r_j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpikeSpec {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl SpikeSpec {
    pub fn new(values: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        let s = SpikeSpec { values, multiplicities };
        s.validate()?;
        Ok(s)
    }

    pub fn simple(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), vec![1; values.len()])
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.values.len() == self.multiplicities.len(), || {
            "spike values and multiplicities differ in length".into()
        })?;
        ensure(self.values.iter().all(|&a| a > 0.0 && a.is_finite()), || {
            "spike values must be positive".into()
        })?;
        ensure(self.values.windows(2).all(|w| w[0] > w[1]), || {
            "spike values must be strictly decreasing".into()
        })?;
        ensure(self.multiplicities.iter().all(|&r| r > 0), || {
            "multiplicities must be positive".into()
        })
    }

    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Population spectrum of length `n`: the spikes followed by ones.
    pub fn population(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        ensure(self.total() <= n, || {
            format!("{} spikes do not fit in dimension {n}", self.total())
        })?;
        let mut t = Vec::with_capacity(n);
        for (a, r) in self.values.iter().zip(&self.multiplicities) {
            t.extend(std::iter::repeat_n(*a, *r));
        }
        t.resize(n, 1.0);
        Ok(t)
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    ensure(v >= 1, || format!("{name} must be at least 1"))
}

/// Wigner matrix drawn from `rng`; off-diagonal variance `sigma^2 / n`.
pub fn wigner_from(rng: &mut Rng, n: usize, sigma: f64, field: Field) -> FMat {
    let s = sigma / (n as f64).sqrt();
    // upper triangle, column by column
    let mut upper: Vec<C64> = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            let v = if i == j || field == Field::Real {
                C64::new(rng::normal(rng), 0.0)
            } else {
                rng::complex_normal(rng)
            };
            upper.push(v * s);
        }
    }
    let at = |i: usize, j: usize| {
        if i <= j {
            upper[j * (j + 1) / 2 + i]
        } else {
            upper[i * (i + 1) / 2 + j].conj()
        }
    };
    match field {
        Field::Real => FMat::Real(Mat::from_fn(n, n, |i, j| at(i, j).re)),
        Field::Complex => FMat::Complex(Mat::from_fn(n, n, at)),
    }
}

pub fn gen_wigner(n: usize, sigma: f64, field: Field, seed: Seed) -> Result<FMat> {
    nonzero("n", n)?;
    ensure(sigma > 0.0, || "sigma must be positive".into())?;
    Ok(wigner_from(&mut seed.rng(), n, sigma, field))
}

/// `N x n` matrix of i.i.d. unit-variance Gaussian entries.
pub fn gen_iid_matrix(big_n: usize, n: usize, field: Field, seed: Seed) -> Result<FMat> {
    nonzero("N", big_n)?;
    nonzero("n", n)?;
    Ok(FMat::gaussian(&mut seed.rng(), big_n, n, field, 1.0))
}

/// `T^{1/2} (1/n) X X^H T^{1/2}` with `X` drawn from `rng`.
pub fn general_scm_from(rng: &mut Rng, pop: &[f64], n: usize, field: Field) -> FMat {
    let mut x = FMat::gaussian(rng, pop.len(), n, field, 1.0);
    if pop.iter().any(|&t| t != 1.0) {
        let s: Vec<f64> = pop.iter().map(|t| t.sqrt()).collect();
        x.scale_rows(&s);
    }
    x.gram(1.0 / n as f64)
}

pub fn gen_general_scm(pop: &[f64], n: usize, field: Field, seed: Seed) -> Result<FMat> {
    nonzero("N", pop.len())?;
    nonzero("n", n)?;
    ensure(pop.iter().all(|&t| t >= 0.0 && t.is_finite()), || {
        "population eigenvalues must be nonnegative".into()
    })?;
    Ok(general_scm_from(&mut seed.rng(), pop, n, field))
}

pub fn gen_spiked_scm(spikes: &SpikeSpec, big_n: usize, n: usize, field: Field, seed: Seed) -> Result<FMat> {
    nonzero("N", big_n)?;
    let pop = spikes.population(big_n)?;
    gen_general_scm(&pop, n, field, seed)
}

/// Haar orthogonal matrix scaled by `sigma_w`, from `rng`.
pub fn orthogonal_from(rng: &mut Rng, n: usize, sigma_w: f64) -> Mat<f64> {
    let g = match FMat::gaussian(rng, n, n, Field::Real, 1.0) {
        FMat::Real(m) => m,
        FMat::Complex(_) => unreachable!(),
    };
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let signs: Vec<f64> = (0..n).map(|i| if r[(i, i)] < 0.0 { -1.0 } else { 1.0 }).collect();
    Mat::from_fn(n, n, |i, j| sigma_w * q[(i, j)] * signs[j])
}

pub fn gen_orthogonal(n: usize, sigma_w: f64, seed: Seed) -> Result<Mat<f64>> {
    nonzero("n", n)?;
    ensure(sigma_w > 0.0, || "sigma_w must be positive".into())?;
    Ok(orthogonal_from(&mut seed.rng(), n, sigma_w))
}

/// GUE with density proportional to `exp(-tr H^2 / 2)`: unit-variance
/// diagonal, off-diagonal entries with `E|h|^2 = 1`.
pub fn gue_from(rng: &mut Rng, k: usize) -> SpectralSample {
    let h = wigner_from(rng, k, (k as f64).sqrt(), Field::Complex);
    SpectralSample::new(h.eigenvalues_hermitian().expect("hermitian"), Field::Complex)
        .expect("finite")
}

pub fn gen_gue(k: usize, seed: Seed) -> Result<SpectralSample> {
    nonzero("k", k)?;
    Ok(gue_from(&mut seed.rng(), k))
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn esd(a: &FMat) -> Result<SpectralSample> {
    ensure(a.nrows() == a.ncols(), || "matrix is not square".into())?;
    ensure(a.nrows() >= 1, || "empty matrix".into())?;
    let asym = a.max_asymmetry();
    if asym > 1e-8 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    let ev = a.hermitian_part().eigenvalues_hermitian()?;
    SpectralSample::new(ev, a.field())
}

/// Sum of `k` squared unit-variance entries of the given field
/// (chi-square with `k` degrees for real, Gamma(k, 1) for complex).
fn sum_sq(rng: &mut Rng, k: usize, field: Field) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (shape, scale) = match field {
        Field::Real => (k as f64 / 2.0, 2.0),
        Field::Complex => (k as f64, 1.0),
    };
    rng.sample(Gamma::new(shape, scale).expect("valid gamma"))
}

/// Tridiagonal matrix similar to the sample covariance `(1/n) T^{1/2} X X^H T^{1/2}`
/// with `T = diag(alpha, 1, ..., 1)`, obtained by bidiagonalising `X` with
/// Householder reflections. Requires `N <= n`. Its eigenvalues have the
/// same joint law as those of the dense sample covariance.
pub fn spiked_scm_tridiagonal(rng: &mut Rng, alpha: f64, big_n: usize, n: usize, field: Field) -> Result<SymTridiagonal> {
    nonzero("N", big_n)?;
    ensure(big_n <= n, || "tridiagonal model needs N <= n".into())?;
    ensure(alpha > 0.0, || "spike must be positive".into())?;
    let inv = 1.0 / n as f64;
    let mut a2 = Vec::with_capacity(big_n);
    let mut b2 = Vec::with_capacity(big_n.saturating_sub(1));
    for i in 0..big_n {
        let mut a = sum_sq(rng, n - i, field);
        if i == 0 {
            a *= alpha;
        }
        a2.push(a);
        if i + 1 < big_n {
            b2.push(sum_sq(rng, big_n - 1 - i, field));
        }
    }
    let d = (0..big_n)
        .map(|i| (a2[i] + if i > 0 { b2[i - 1] } else { 0.0 }) * inv)
        .collect();
    let e = (0..big_n - 1).map(|i| (a2[i] * b2[i]).sqrt() * inv).collect();
    Ok(SymTridiagonal { d, e })
}

/// Tridiagonal model with the eigenvalue law of the Gaussian ensemble of the
/// given field, normalised to density `∝ |Δ(λ)|^β exp(-Σλ²/2)`: Gaussian
/// diagonal of variance 1 and off-diagonal `χ_{β(n-k)}/√2`.
pub fn hermite_tridiagonal(rng: &mut Rng, n: usize, field: Field) -> Result<SymTridiagonal> {
    nonzero("n", n)?;
    let beta = field.beta() as f64;
    let d = (0..n).map(|_| rng::normal(rng)).collect();
    let e = (1..n)
        .map(|k| {
            let dof = beta * (n - k) as f64;
            (rng.sample(Gamma::new(dof / 2.0, 2.0).expect("valid gamma")) / 2.0).sqrt()
        })
        .collect();
    Ok(SymTridiagonal { d, e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_is_hermitian_and_deterministic() {
        for field in [Field::Real, Field::Complex] {
            let a = gen_wigner(30, 1.0, field, Seed(4)).unwrap();
            let b = gen_wigner(30, 1.0, field, Seed(4)).unwrap();
            assert_eq!(a.max_asymmetry(), 0.0);
            assert_eq!(esd(&a).unwrap(), esd(&b).unwrap());
        }
        assert!(gen_wigner(0, 1.0, Field::Real, Seed(1)).is_err());
    }

    #[test]
    fn esd_small_cases() {
        let id = FMat::from_real(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(esd(&id).unwrap().eigenvalues(), &[1.0, 1.0, 1.0]);
        let d = FMat::from_real(2, 2, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (1, 1) => -1.0,
            _ => 0.0,
        });
        let e = esd(&d).unwrap();
        assert!((e.eigenvalues()[0] + 1.0).abs() < 1e-14 && (e.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let bad = FMat::from_real(2, 2, |i, j| if i < j { 1.0 } else { 0.0 });
        assert!(matches!(esd(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn orthogonal_columns() {
        let w = gen_orthogonal(60, 1.3, Seed(2)).unwrap();
        let g = w.transpose() * &w;
        for j in 0..60 {
            for i in 0..60 {
                let want = if i == j { 1.69 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-10);
            }
        }
        let w1 = gen_orthogonal(1, 0.7, Seed(2)).unwrap();
        assert!((w1[(0, 0)].abs() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn spike_population_layout() {
        let s = SpikeSpec::new(vec![4.0, 2.0], vec![2, 1]).unwrap();
        assert_eq!(s.population(5).unwrap(), vec![4.0, 4.0, 2.0, 1.0, 1.0]);
        assert!(SpikeSpec::simple(&[1.0, 2.0]).is_err());
        assert!(s.population(2).is_err());
        assert_eq!(SpikeSpec::default().population(2).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn scaled_population_scales_spectrum() {
        let a = esd(&gen_general_scm(&[1.0; 20], 40, Field::Real, Seed(8)).unwrap()).unwrap();
        let b = esd(&gen_general_scm(&[2.5; 20], 40, Field::Real, Seed(8)).unwrap()).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((2.5 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gue_one_by_one_is_standard_normal() {
        let v: Vec<f64> = (0..20000)
            .map(|t| gue_from(&mut Seed(3).stream(t), 1).max())
            .collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(m.abs() < 0.03 && (s - 1.0).abs() < 0.04, "{m} {s}");
    }
}
