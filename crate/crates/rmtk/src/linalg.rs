//! Thin wrappers over `faer` for the real and complex Hermitian work used
//! throughout the crate.

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

/// Scalar field of a random matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Dyson index: 1 for real, 2 for complex.
    pub fn beta(self) -> u32 {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(Field::Real),
            "complex" | "c" => Ok(Field::Complex),
            _ => Err(Error::domain(format!("unknown field '{s}'"))),
        }
    }
}

/// Dense matrix over either field.
#[derive(Clone, Debug)]
pub enum FMat {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl FMat {
    pub fn nrows(&self) -> usize {
        match self {
            FMat::Real(m) => m.nrows(),
            FMat::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FMat::Real(m) => m.ncols(),
            FMat::Complex(m) => m.ncols(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            FMat::Real(_) => Field::Real,
            FMat::Complex(_) => Field::Complex,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            FMat::Real(m) => C64::new(m[(i, j)], 0.0),
            FMat::Complex(m) => m[(i, j)],
        }
    }

    pub fn from_real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> FMat {
        FMat::Real(Mat::from_fn(rows, cols, f))
    }

    /// i.i.d. entries with standard deviation `std`, drawn column by column.
    pub fn gaussian(rng: &mut Rng, rows: usize, cols: usize, field: Field, std: f64) -> FMat {
        match field {
            Field::Real => {
                let v: Vec<f64> = (0..rows * cols).map(|_| std * rng::normal(rng)).collect();
                FMat::Real(Mat::from_fn(rows, cols, |i, j| v[i + j * rows]))
            }
            Field::Complex => {
                let v: Vec<C64> = (0..rows * cols)
                    .map(|_| rng::complex_normal(rng) * std)
                    .collect();
                FMat::Complex(Mat::from_fn(rows, cols, |i, j| v[i + j * rows]))
            }
        }
    }

    /// `scale * A A^H`.
    pub fn gram(&self, scale: f64) -> FMat {
        match self {
            FMat::Real(a) => {
                let mut g = a * a.transpose();
                scale_real(&mut g, scale);
                FMat::Real(g)
            }
            FMat::Complex(a) => {
                let mut g = a * a.adjoint();
                scale_complex(&mut g, scale);
                FMat::Complex(g)
            }
        }
    }

    pub fn scale_rows(&mut self, s: &[f64]) {
        match self {
            FMat::Real(m) => {
                for j in 0..m.ncols() {
                    for (i, si) in s.iter().enumerate() {
                        m[(i, j)] *= si;
                    }
                }
            }
            FMat::Complex(m) => {
                for j in 0..m.ncols() {
                    for (i, si) in s.iter().enumerate() {
                        m[(i, j)] *= si;
                    }
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        match self {
            FMat::Real(m) => scale_real(m, s),
            FMat::Complex(m) => scale_complex(m, s),
        }
    }

    pub fn add(&self, other: &FMat) -> Result<FMat> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::domain("shape mismatch in matrix sum"));
        }
        Ok(match (self, other) {
            (FMat::Real(a), FMat::Real(b)) => FMat::Real(a + b),
            _ => {
                let a = self.to_complex();
                let b = other.to_complex();
                FMat::Complex(&a + &b)
            }
        })
    }

    pub fn mul(&self, other: &FMat) -> Result<FMat> {
        if self.ncols() != other.nrows() {
            return Err(Error::domain("shape mismatch in matrix product"));
        }
        Ok(match (self, other) {
            (FMat::Real(a), FMat::Real(b)) => FMat::Real(a * b),
            _ => FMat::Complex(&self.to_complex() * &other.to_complex()),
        })
    }

    /// Sum of squared moduli of all entries.
    pub fn frobenius_sq(&self) -> f64 {
        match self {
            FMat::Real(m) => (0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum(),
            FMat::Complex(m) => (0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| (i, j))).map(|(i, j)| m[(i, j)].norm_sqr()).sum(),
        }
    }

    pub fn to_complex(&self) -> Mat<C64> {
        match self {
            FMat::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)),
            FMat::Complex(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows().min(self.ncols()))
            .map(|i| self.get(i, i).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                best = best.max(self.get(i, j).norm());
            }
        }
        best
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.nrows();
        if n != self.ncols() {
            return f64::INFINITY;
        }
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                best = best.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        best
    }

    pub fn hermitian_part(&self) -> FMat {
        let n = self.nrows();
        match self {
            FMat::Real(m) => FMat::Real(Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))),
            FMat::Complex(m) => FMat::Complex(Mat::from_fn(n, n, |i, j| {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            })),
        }
    }

    /// Ascending eigenvalues, assuming the matrix is Hermitian.
    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        let mut ev = match self {
            FMat::Real(m) => m.self_adjoint_eigenvalues(Side::Lower),
            FMat::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower),
        }
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }
}

fn scale_real(m: &mut Mat<f64>, s: f64) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= s;
        }
    }
}

fn scale_complex(m: &mut Mat<C64>, s: f64) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= s;
        }
    }
}

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`.
#[derive(Clone, Debug)]
pub struct SymTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            let qq = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn kth_eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        while hi - lo > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.kth_eigenvalue(self.dim() - 1)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.kth_eigenvalue(0)
    }

    pub fn to_dense(&self) -> FMat {
        let n = self.dim();
        FMat::from_real(n, n, |i, j| {
            if i == j {
                self.d[i]
            } else if i == j + 1 {
                self.e[j]
            } else if j == i + 1 {
                self.e[i]
            } else {
                0.0
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn tridiagonal_bisection_matches_dense() {
        let mut r = Seed(5).rng();
        let n = 40;
        let t = SymTridiagonal {
            d: (0..n).map(|_| rng::normal(&mut r)).collect(),
            e: (0..n - 1).map(|_| rng::normal(&mut r)).collect(),
        };
        let dense = t.to_dense().eigenvalues_hermitian().unwrap();
        for k in [0, 7, n - 1] {
            assert!((t.kth_eigenvalue(k) - dense[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_is_hermitian_psd() {
        let mut r = Seed(9).rng();
        let x = FMat::gaussian(&mut r, 12, 30, Field::Complex, 1.0);
        let g = x.gram(1.0 / 30.0);
        assert!(g.max_asymmetry() < 1e-12);
        let ev = g.eigenvalues_hermitian().unwrap();
        assert!(ev[0] > -1e-10);
        let s: f64 = ev.iter().sum();
        assert!((s - g.trace()).abs() < 1e-10);
    }
}
