//! Tracy–Widom laws through the Hastings–McLeod solution of Painlevé II,
//! and centring/scaling of extreme Wishart eigenvalues.

use crate::error::{ensure, Error, Result};
use crate::laws::Law;
use crate::linalg::Field;
use crate::quad;
use crate::rng::{self, Seed};
use crate::special;
use std::sync::OnceLock;

/// Augmented Painlevé II state on a descending grid.
///
/// Besides `q` and `q'` the integration carries the tail integrals
/// `u = ∫_t^∞ q²`, `i1 = ∫_t^∞ (x - t) q²`, `i2 = ∫_t^∞ (x - t)² q²`
/// and `v = ∫_t^∞ q`.
#[derive(Clone, Debug)]
pub struct Painleve2Solution {
    pub grid: Vec<f64>,
    pub q: Vec<f64>,
    pub qp: Vec<f64>,
    pub u: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub v: Vec<f64>,
    pub step: f64,
}

type State = [f64; 6];

fn rhs(t: f64, y: &State) -> State {
    let (q, qp, u, i1) = (y[0], y[1], y[2], y[3]);
    [qp, t * q + 2.0 * q * q * q, -q * q, -u, -2.0 * i1, -q]
}

/// Tail integrals of the Airy function, which stands in for `q` beyond `t`.
fn airy_tails(t: f64) -> Result<State> {
    let (a, ap) = special::airy_unchecked(t);
    let u = ap * ap - t * a * a;
    let i1 = (2.0 * t * t * a * a - 2.0 * t * ap * ap - a * ap) / 3.0;
    let upper = t + 40.0;
    let ai = |x: f64| special::airy_unchecked(x).0;
    let i2 = quad::integrate(|x| (x - t) * (x - t) * ai(x) * ai(x), t, upper, 1e-14)?;
    let v = quad::integrate(ai, t, upper, 1e-14)?;
    Ok([a, ap, u, i1, i2, v])
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(t: f64, y: &State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 6]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..6 {
                ys[d] += h * A[s][j] * kj[d];
            }
        }
        k[s] = rhs(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for d in 0..6 {
        let mut e = 0.0;
        for s in 0..7 {
            y5[d] += h * B5[s] * k[s][d];
            e += h * (B5[s] - B4[s]) * k[s][d];
        }
        let scale = 1e-300_f64.max(1e-24 + y[d].abs().max(y5[d].abs()));
        err = err.max(e.abs() / scale);
    }
    (y5, err)
}

/// Left-tail expansion of the Hastings–McLeod solution, `(q, q')`.
pub fn hastings_mcleod_asymptotic(t: f64) -> (f64, f64) {
    let x = -t;
    let c = [1.0, -1.0 / 8.0, -73.0 / 128.0, -10657.0 / 1024.0];
    let mut p = 0.0;
    let mut dp = 0.0;
    for (k, ck) in c.iter().enumerate() {
        let e = -3.0 * k as f64;
        p += ck * x.powf(e);
        dp += ck * e * x.powf(e - 1.0);
    }
    let r = (x / 2.0).sqrt();
    let q = r * p;
    // d/dt = -d/dx
    let dq = -(p / (4.0 * r) + r * dp);
    (q, dq)
}

/// Point below which `q` comes from a boundary-value solve rather than the
/// backward initial-value integration, which amplifies errors like
/// `exp(∫√(2|t|))` on the left.
const T_JOIN: f64 = -2.0;

/// Tabulates the Hastings–McLeod solution on `[t_min, t_max]` every `1/512`.
///
/// On `[T_JOIN, t_max]` the state is integrated backward from the Airy
/// boundary with adaptive Dormand–Prince steps (relative tolerance `tol`).
/// Left of `T_JOIN` the equation is solved as a two-point problem with the
/// Numerov scheme, using the left asymptotic expansion at `t_min`, and the
/// tail integrals are continued by corrected trapezoid sums. `t_min` must
/// be at least -2 or at most -8.
pub fn solve_painleve2(t_max: f64, t_min: f64, tol: f64) -> Result<Painleve2Solution> {
    ensure(t_max >= 6.0, || "t_max must be at least 6".into())?;
    ensure(t_min < t_max, || "t_min must be below t_max".into())?;
    ensure(t_min >= T_JOIN || t_min <= -8.0, || {
        format!("t_min = {t_min} must be >= {T_JOIN} or <= -8")
    })?;
    ensure(tol > 0.0, || "tolerance must be positive".into())?;
    let step = 1.0 / 512.0;
    let n = ((t_max - t_min) / step).round() as usize;
    let n_ivp = if t_min >= T_JOIN { n } else { ((t_max - T_JOIN) / step).round() as usize };
    let mut sol = Painleve2Solution {
        grid: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        qp: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        i1: Vec::with_capacity(n + 1),
        i2: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        step,
    };
    let mut y = airy_tails(t_max)?;
    sol.push(t_max, &y);
    let mut h = -step;
    for k in 1..=n_ivp {
        let t0 = t_max - (k - 1) as f64 * step;
        let t1 = t_max - k as f64 * step;
        let mut t = t0;
        while t > t1 {
            if t + h < t1 {
                h = t1 - t;
            }
            let (y_new, err) = dp_step(t, &y, h);
            if err <= tol {
                t += h;
                y = y_new;
                if t - t1 < 1e-14 {
                    t = t1;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
            h = (h * factor).max(-step);
            if h.abs() < 1e-12 {
                return Err(Error::NoConvergence {
                    what: "Painleve II integration (step underflow)",
                    iterations: k,
                    residual: t,
                });
            }
        }
        if !y.iter().all(|v| v.is_finite()) || y[0] <= 0.0 {
            return Err(Error::NoConvergence {
                what: "Painleve II integration (solution left the Hastings-McLeod branch)",
                iterations: k,
                residual: t1,
            });
        }
        sol.push(t1, &y);
    }
    if n_ivp < n {
        let t_join = t_max - n_ivp as f64 * step;
        left_boundary_value(&mut sol, t_join, t_max - n as f64 * step, y)?;
    }
    Ok(sol)
}

fn left_boundary_value(sol: &mut Painleve2Solution, t_join: f64, t_min: f64, join: State) -> Result<()> {
    let h = sol.step;
    let m = ((t_join - t_min) / h).round() as usize;
    // nodes descend: ts[0] = t_join, ts[m] = t_min
    let ts: Vec<f64> = (0..=m).map(|k| t_join - k as f64 * h).collect();
    let mut q: Vec<f64> = ts
        .iter()
        .map(|&t| hastings_mcleod_asymptotic(t.min(-1.0)).0.max(join[0]))
        .collect();
    q[0] = join[0];
    q[m] = hastings_mcleod_asymptotic(t_min).0;
    let f = |t: f64, q: f64| t * q + 2.0 * q * q * q;
    let fq = |t: f64, q: f64| t + 6.0 * q * q;
    let w = h * h / 12.0;
    let mut converged = false;
    for _ in 0..50 {
        let dim = m - 1;
        let mut lower = vec![0.0; dim];
        let mut diag = vec![0.0; dim];
        let mut upper = vec![0.0; dim];
        let mut rhs = vec![0.0; dim];
        for j in 0..dim {
            let k = j + 1;
            let r = q[k + 1] - 2.0 * q[k] + q[k - 1]
                - w * (f(ts[k + 1], q[k + 1]) + 10.0 * f(ts[k], q[k]) + f(ts[k - 1], q[k - 1]));
            rhs[j] = -r;
            diag[j] = -2.0 - 10.0 * w * fq(ts[k], q[k]);
            if j > 0 {
                lower[j] = 1.0 - w * fq(ts[k - 1], q[k - 1]);
            }
            if j + 1 < dim {
                upper[j] = 1.0 - w * fq(ts[k + 1], q[k + 1]);
            }
        }
        let dx = thomas(&lower, &diag, &upper, &rhs)?;
        let mut worst = 0.0f64;
        for j in 0..dim {
            q[j + 1] += dx[j];
            worst = worst.max(dx[j].abs());
        }
        if worst < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "Painleve II boundary-value solve", iterations: 50, residual: 0.0 });
    }
    // central differences corrected by the equation:
    // D = q' + h²/6 q''' + O(h⁴) with q''' = q + (t + 6q²) q'
    let mut qp = vec![0.0; m + 1];
    qp[0] = join[1];
    // one-sided at the left end, stepping upward in t
    qp[m] = (-25.0 * q[m] + 48.0 * q[m - 1] - 36.0 * q[m - 2] + 16.0 * q[m - 3] - 3.0 * q[m - 4]) / (12.0 * h);
    for k in 1..m {
        let d = -(q[k + 1] - q[k - 1]) / (2.0 * h);
        let t = ts[k];
        qp[k] = (d - h * h / 6.0 * q[k]) / (1.0 + h * h / 6.0 * (t + 6.0 * q[k] * q[k]));
    }
    // trapezoid with endpoint derivative correction, from ts[k] up to ts[k-1]
    let trap = |g0: f64, g1: f64, d0: f64, d1: f64| h / 2.0 * (g0 + g1) + h * h / 12.0 * (d0 - d1);
    let (mut u, mut i1, mut i2, mut v) = (join[2], join[3], join[4], join[5]);
    for k in 1..=m {
        let (qa, qb, pa, pb) = (q[k - 1], q[k], qp[k - 1], qp[k]);
        let u_new = u + trap(qb * qb, qa * qa, 2.0 * qb * pb, 2.0 * qa * pa);
        let i1_new = i1 + trap(u_new, u, -qb * qb, -qa * qa);
        let i2_new = i2 + trap(2.0 * i1_new, 2.0 * i1, -2.0 * u_new, -2.0 * u);
        v += trap(qb, qa, pb, pa);
        u = u_new;
        i1 = i1_new;
        i2 = i2_new;
        sol.push(ts[k], &[q[k], qp[k], u, i1, i2, v]);
    }
    Ok(())
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let denom = diag[i] - if i > 0 { lower[i] * c[i - 1] } else { 0.0 };
        if denom == 0.0 {
            return Err(Error::Linalg("singular tridiagonal system".into()));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - if i > 0 { lower[i] * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

impl Painleve2Solution {
    fn push(&mut self, t: f64, y: &State) {
        self.grid.push(t);
        self.q.push(y[0]);
        self.qp.push(y[1]);
        self.u.push(y[2]);
        self.i1.push(y[3]);
        self.i2.push(y[4]);
        self.v.push(y[5]);
    }

    pub fn t_max(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_min(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        ensure(t >= self.t_min() - 1e-12, || {
            format!("t = {t} lies below the tabulated range (t_min = {})", self.t_min())
        })?;
        let pos = ((self.t_max() - t) / self.step).clamp(0.0, (self.grid.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        Ok((i, pos - i as f64))
    }

    /// Largest `|q'' - t q - 2 q³|` over the interior grid, with `q''` from
    /// fourth-order differences of the tabulated `q'`.
    pub fn max_residual(&self) -> f64 {
        let h = self.step;
        let mut worst = 0.0f64;
        for k in 2..self.grid.len() - 2 {
            // the grid descends, so differences carry a minus sign
            let d = -(-self.qp[k + 2] + 8.0 * self.qp[k + 1] - 8.0 * self.qp[k - 1] + self.qp[k - 2]) / (12.0 * h);
            let t = self.grid[k];
            let r = d - t * self.q[k] - 2.0 * self.q[k].powi(3);
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Residuals at `count` evenly spaced interior grid points.
    pub fn residuals_at(&self, count: usize) -> Vec<(f64, f64)> {
        let h = self.step;
        let n = self.grid.len();
        (0..count)
            .map(|j| {
                let k = 2 + j * (n - 5) / count.max(1);
                let d = -(-self.qp[k + 2] + 8.0 * self.qp[k + 1] - 8.0 * self.qp[k - 1] + self.qp[k - 2]) / (12.0 * h);
                let t = self.grid[k];
                (t, d - t * self.q[k] - 2.0 * self.q[k].powi(3))
            })
            .collect()
    }

    /// `q(t)` by cubic Hermite interpolation.
    pub fn q_at(&self, t: f64) -> Result<f64> {
        if t >= self.t_max() {
            return Ok(special::airy_unchecked(t).0);
        }
        let (i, s) = self.locate(t)?;
        // derivative with respect to the descending grid coordinate is -q'
        Ok(hermite(self.q[i], -self.qp[i], self.q[i + 1], -self.qp[i + 1], self.step, s))
    }

    /// `(log F, d/dt log F)` at a grid node.
    fn log_f(&self, k: usize, order: TwOrder, kernel: TwKernel) -> (f64, f64) {
        match (order, kernel) {
            (TwOrder::Two, TwKernel::Standard) => (-self.i1[k], self.u[k]),
            (TwOrder::Two, TwKernel::SquaredLag) => (-self.i2[k], 2.0 * self.i1[k]),
            (TwOrder::One, TwKernel::Standard) => {
                (-0.5 * (self.v[k] + self.i1[k]), 0.5 * (self.q[k] + self.u[k]))
            }
            (TwOrder::One, TwKernel::SquaredLag) => {
                (-0.5 * (self.v[k] + self.i2[k]), 0.5 * self.q[k] + self.i1[k])
            }
        }
    }
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TwOrder {
    One,
    Two,
}

impl TwOrder {
    pub fn for_field(field: Field) -> Self {
        match field {
            Field::Real => TwOrder::One,
            Field::Complex => TwOrder::Two,
        }
    }

    pub fn from_u8(order: u8) -> Result<Self> {
        match order {
            1 => Ok(TwOrder::One),
            2 => Ok(TwOrder::Two),
            _ => Err(Error::domain(format!("Tracy-Widom order must be 1 or 2, got {order}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            TwOrder::One => 1,
            TwOrder::Two => 2,
        }
    }
}

/// Kernel of the order-2 integral: `(x - t) q²` (standard) or the
/// `(x - t)² q²` variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TwKernel {
    #[default]
    Standard,
    SquaredLag,
}

pub const T_MAX: f64 = 8.0;
pub const T_MIN: f64 = -10.0;

/// The Painlevé solution on `[-10, 8]`, computed once.
pub fn painleve2() -> &'static Painleve2Solution {
    static SOL: OnceLock<Painleve2Solution> = OnceLock::new();
    SOL.get_or_init(|| solve_painleve2(T_MAX, T_MIN, 1e-12).expect("Painleve II integration"))
}

fn tw_cdf_with(sol: &Painleve2Solution, t: f64, order: TwOrder, kernel: TwKernel) -> Result<f64> {
    if t >= sol.t_max() {
        let tails = airy_tails(t.min(40.0))?;
        let i1 = tails[3];
        let i2 = tails[4];
        let v = tails[5];
        let lf = match (order, kernel) {
            (TwOrder::Two, TwKernel::Standard) => -i1,
            (TwOrder::Two, TwKernel::SquaredLag) => -i2,
            (TwOrder::One, TwKernel::Standard) => -0.5 * (v + i1),
            (TwOrder::One, TwKernel::SquaredLag) => -0.5 * (v + i2),
        };
        return Ok(lf.exp());
    }
    let (i, s) = sol.locate(t)?;
    let (l0, d0) = sol.log_f(i, order, kernel);
    let (l1, d1) = sol.log_f(i + 1, order, kernel);
    Ok(hermite(l0, -d0, l1, -d1, sol.step, s).exp().clamp(0.0, 1.0))
}

/// Tracy–Widom distribution function of order 1 or 2.
pub fn tw_cdf(t: f64, order: TwOrder) -> Result<f64> {
    tw_cdf_with(painleve2(), t, order, TwKernel::Standard)
}

/// As [`tw_cdf`] with an explicit choice of kernel.
pub fn tw_cdf_kernel(t: f64, order: TwOrder, kernel: TwKernel) -> Result<f64> {
    tw_cdf_with(painleve2(), t, order, kernel)
}

pub fn tw_pdf(t: f64, order: TwOrder) -> Result<f64> {
    let sol = painleve2();
    if t >= sol.t_max() {
        let h = 1e-4;
        return Ok((tw_cdf(t + h, order)? - tw_cdf(t - h, order)?) / (2.0 * h));
    }
    let (i, s) = sol.locate(t)?;
    let (l0, d0) = sol.log_f(i, order, TwKernel::Standard);
    let (l1, d1) = sol.log_f(i + 1, order, TwKernel::Standard);
    let lf = hermite(l0, -d0, l1, -d1, sol.step, s);
    // derivative of the Hermite interpolant of log F
    let h = sol.step;
    let (s2,) = (s * s,);
    let dl = ((6.0 * s2 - 6.0 * s) * l0 + (3.0 * s2 - 4.0 * s + 1.0) * h * -d0 + (-6.0 * s2 + 6.0 * s) * l1
        + (3.0 * s2 - 2.0 * s) * h * -d1)
        / h;
    // the interpolation variable runs against t
    Ok((lf.exp() * -dl).max(0.0))
}

/// Inverse of [`tw_cdf`] for `p` in `(1e-6, 1 - 1e-6)`.
pub fn tw_quantile(p: f64, order: TwOrder) -> Result<f64> {
    ensure(p > 1e-6 && p < 1.0 - 1e-6, || format!("p = {p} outside (1e-6, 1 - 1e-6)"))?;
    let (mut lo, mut hi) = (T_MIN, T_MAX);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tw_cdf(mid, order)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tracy–Widom law as a [`Law`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwLaw {
    pub order: TwOrder,
}

impl Law for TwLaw {
    fn pdf(&self, x: f64) -> f64 {
        if x < T_MIN {
            return 0.0;
        }
        tw_pdf(x, self.order).unwrap_or(0.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < T_MIN {
            return 0.0;
        }
        tw_cdf(x, self.order).unwrap_or(1.0)
    }

    fn support(&self) -> (f64, f64) {
        (T_MIN, 20.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(1.1e-6, 1.0 - 1.1e-6);
        tw_quantile(p, self.order).unwrap_or(f64::NAN)
    }
}

/// Rows `(t, F1, F2)` of the Tracy–Widom table on `[t_min, t_max]`.
pub fn tw_table(t_min: f64, t_max: f64, points: usize) -> Result<Vec<(f64, f64, f64)>> {
    ensure(points >= 2 && t_min < t_max, || "invalid table range".into())?;
    (0..points)
        .map(|k| {
            let t = t_min + (t_max - t_min) * k as f64 / (points - 1) as f64;
            Ok((t, tw_cdf(t, TwOrder::One)?, tw_cdf(t, TwOrder::Two)?))
        })
        .collect()
}

/// Tracy–Widom law read back from a persisted `(t, F1, F2)` table, with
/// monotone piecewise-cubic interpolation.
#[derive(Clone, Debug)]
pub struct TwTableLaw {
    t: Vec<f64>,
    f: Vec<f64>,
    d: Vec<f64>,
}

impl TwTableLaw {
    pub fn from_rows(rows: &[(f64, f64, f64)], order: TwOrder) -> Result<Self> {
        ensure(rows.len() >= 3, || "table too short".into())?;
        ensure(rows.windows(2).all(|w| w[1].0 > w[0].0), || "table abscissae must increase".into())?;
        let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let f: Vec<f64> = rows
            .iter()
            .map(|r| if order == TwOrder::One { r.1 } else { r.2 })
            .collect();
        ensure(f.windows(2).all(|w| w[1] >= w[0]), || "table cdf must be nondecreasing".into())?;
        let d = pchip_slopes(&t, &f);
        Ok(TwTableLaw { t, f, d })
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut d = vec![0.0; n];
    d[0] = del[0];
    d[n - 1] = del[n - 2];
    for i in 1..n - 1 {
        if del[i - 1] * del[i] > 0.0 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    d
}

impl Law for TwTableLaw {
    fn pdf(&self, x: f64) -> f64 {
        let h = 1e-5;
        ((self.cdf(x + h) - self.cdf(x - h)) / (2.0 * h)).max(0.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.f[0];
        }
        if x >= self.t[n - 1] {
            return self.f[n - 1];
        }
        let i = self.t.partition_point(|v| *v <= x).saturating_sub(1).min(n - 2);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        hermite(self.f[i], self.d[i], self.f[i + 1], self.d[i + 1], h, s).clamp(self.f[i], self.f[i + 1])
    }

    fn support(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// Scaling used for the complex Wishart edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdgeScaling {
    /// `(1 ± √c)^{4/3} √c N^{-2/3}`.
    #[default]
    SqrtC,
    /// `(1 ± √c)^{4/3} c^{1/6} N^{-2/3}`.
    SixthRootC,
}

/// Variant of the real-case scale `σ_{n,N}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RealScale {
    /// `(√(n-1) + √N)(1/√(n-1) + 1/√N)^{1/3}`.
    #[default]
    Balanced,
    /// `(√(n-1) + √N)(1/(n-1) + 1/√N)^{1/3}`.
    MixedPower,
}

/// Centre, scale and Tracy–Widom order such that `(λ - center)/scale`
/// is asymptotically Tracy–Widom distributed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremeScaling {
    pub center: f64,
    pub scale: f64,
    pub order: TwOrder,
}

impl ExtremeScaling {
    pub fn standardize(&self, lambda: f64) -> f64 {
        (lambda - self.center) / self.scale
    }
}

/// Edge constants for the extreme eigenvalues of `(1/n) X X^H`, `X` of size
/// `N x n`.
///
/// Complex: `(1 ± √c)²` centre and the signed scale `±(1 ± √c)^{4/3} √c N^{-2/3}`.
/// Real, largest eigenvalue: the `μ_{n,N}`, `σ_{n,N}` constants for `n X X^T`,
/// divided by `n`. The real smallest eigenvalue uses the complex-form
/// constants with order 1.
pub fn wishart_extreme_scaling(big_n: usize, n: usize, which: Extreme, field: Field) -> Result<ExtremeScaling> {
    wishart_extreme_scaling_with(big_n, n, which, field, EdgeScaling::SqrtC, RealScale::Balanced)
}

pub fn wishart_extreme_scaling_with(
    big_n: usize,
    n: usize,
    which: Extreme,
    field: Field,
    edge: EdgeScaling,
    real: RealScale,
) -> Result<ExtremeScaling> {
    ensure(big_n >= 1 && n >= 2, || "dimensions too small".into())?;
    if which == Extreme::Min {
        ensure(big_n < n, || "smallest-eigenvalue law needs N < n".into())?;
    }
    let c = big_n as f64 / n as f64;
    let rc = c.sqrt();
    let order = TwOrder::for_field(field);
    let cfac = match edge {
        EdgeScaling::SqrtC => rc,
        EdgeScaling::SixthRootC => c.powf(1.0 / 6.0),
    };
    let nf = big_n as f64;
    match (which, field) {
        (Extreme::Max, Field::Real) => {
            let (a, b) = ((n as f64 - 1.0).sqrt(), nf.sqrt());
            let mu = (a + b).powi(2);
            let inner = match real {
                RealScale::Balanced => 1.0 / a + 1.0 / b,
                RealScale::MixedPower => 1.0 / (n as f64 - 1.0) + 1.0 / b,
            };
            let sigma = (a + b) * inner.powf(1.0 / 3.0);
            Ok(ExtremeScaling { center: mu / n as f64, scale: sigma / n as f64, order })
        }
        (Extreme::Max, Field::Complex) => Ok(ExtremeScaling {
            center: (1.0 + rc).powi(2),
            scale: (1.0 + rc).powf(4.0 / 3.0) * cfac * nf.powf(-2.0 / 3.0),
            order,
        }),
        (Extreme::Min, _) => Ok(ExtremeScaling {
            center: (1.0 - rc).powi(2),
            scale: -(1.0 - rc).powf(4.0 / 3.0) * cfac * nf.powf(-2.0 / 3.0),
            order,
        }),
    }
}

/// Almost-sure limits of the extreme eigenvalues of the null Wishart matrix.
pub fn extreme_limits(c: f64) -> Result<(f64, f64)> {
    ensure(c > 0.0, || "c must be positive".into())?;
    Ok(((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2)))
}

/// Draw from `F_2` by inversion.
pub fn tw_sample(rng: &mut rng::Rng, order: TwOrder) -> Result<f64> {
    let u = rng::uniform(rng).clamp(2e-6, 1.0 - 2e-6);
    tw_quantile(u, order)
}

/// Samples of the limit `-(X⁺ + X⁻)/2` of the rescaled Wigner condition
/// number, with `X⁺ ~ F₂` and `X⁻ = -X'` for an independent `X' ~ F₂`.
pub fn condition_number_limit_sampler(seed: Seed, trials: usize) -> Result<Vec<f64>> {
    ensure(trials >= 1, || "trials must be positive".into())?;
    // one table inversion per draw
    let grid: Vec<f64> = (0..4001).map(|k| T_MIN + (T_MAX - T_MIN) * k as f64 / 4000.0).collect();
    let cdf: Vec<f64> = grid.iter().map(|&t| tw_cdf(t, TwOrder::Two)).collect::<Result<_>>()?;
    let pdf: Vec<f64> = grid.iter().map(|&t| tw_pdf(t, TwOrder::Two)).collect::<Result<_>>()?;
    let table = crate::laws::CdfTable::from_values(grid, cdf, pdf)?;
    rng::monte_carlo(seed, trials, |r, _| {
        let xp = table.inverse(rng::uniform(r));
        let xm = -table.inverse(rng::uniform(r));
        Ok(-(xp + xm) / 2.0)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_matches_airy() {
        let s = painleve2();
        let (a, _) = special::airy_unchecked(8.0);
        assert_eq!(s.q[0], a);
        // q/Ai stays 1 near the right end
        let t = 6.0;
        assert!((s.q_at(t).unwrap() / special::airy(t).unwrap() - 1.0).abs() < 1e-4);
        assert!(s.q.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn residual_is_small() {
        let s = painleve2();
        assert!(s.max_residual() < 1e-8, "{}", s.max_residual());
        assert!(s.residuals_at(100).iter().all(|(_, r)| r.abs() < 1e-8));
    }

    #[test]
    fn q_at_zero_and_left_asymptote() {
        let s = painleve2();
        let q0 = s.q_at(0.0).unwrap();
        // Hastings-McLeod value 0.36706155...
        assert!((q0 - 0.367_061_55).abs() < 1e-7, "{q0}");
        assert!((q0 - 0.3673).abs() < 5e-4);
        // halving the tolerance changes nothing visible
        let s2 = solve_painleve2(8.0, -10.0, 1e-13).unwrap();
        assert!((s2.q_at(0.0).unwrap() - q0).abs() < 1e-9);
        let t = -10.0;
        let asym = (-t / 2.0_f64).sqrt() * (1.0 + 1.0 / (8.0 * t.powi(3)));
        assert!((s.q_at(t).unwrap() / asym - 1.0).abs() < 1e-6);
        let (qa, _) = hastings_mcleod_asymptotic(-8.0);
        assert!((s.q_at(-8.0).unwrap() - qa).abs() < 5e-8);
    }

    #[test]
    fn cdf_limits_and_monotone() {
        for order in [TwOrder::One, TwOrder::Two] {
            assert!(tw_cdf(8.0, order).unwrap() > 1.0 - 1e-6);
            assert!(tw_cdf(-10.0, order).unwrap() < 1e-6);
            let mut prev = 0.0;
            for k in 0..=360 {
                let f = tw_cdf(-10.0 + 0.05 * k as f64, order).unwrap();
                assert!(f >= prev);
                prev = f;
            }
        }
        assert!(tw_cdf(-10.5, TwOrder::Two).is_err());
    }

    #[test]
    fn moments_match_reference_values() {
        // mean and variance of F1 and F2 from the literature
        for (order, mean, var) in [
            (TwOrder::Two, -1.771_086_807, 0.813_194_792_8),
            (TwOrder::One, -1.206_533_574, 1.607_781_034),
        ] {
            let m = quad::integrate(|t| t * tw_pdf(t, order).unwrap(), -10.0, 8.0, 1e-12).unwrap();
            let m2 = quad::integrate(|t| t * t * tw_pdf(t, order).unwrap(), -10.0, 8.0, 1e-12).unwrap();
            assert!((m - mean).abs() < 1e-6, "{order:?} mean {m}");
            assert!((m2 - m * m - var).abs() < 1e-6, "{order:?} var {}", m2 - m * m);
        }
    }

    #[test]
    fn order_one_spreads_left_and_right() {
        for k in 0..=30 {
            let t = -3.0 + 0.1 * k as f64;
            assert!(tw_cdf(t, TwOrder::One).unwrap() < tw_cdf(t, TwOrder::Two).unwrap());
        }
        assert!(tw_quantile(0.9, TwOrder::One).unwrap() > tw_quantile(0.9, TwOrder::Two).unwrap());
    }

    #[test]
    fn quantile_roundtrip() {
        for order in [TwOrder::One, TwOrder::Two] {
            let q = tw_quantile(tw_cdf(-1.0, order).unwrap(), order).unwrap();
            assert!((q + 1.0).abs() < 1e-3);
            for p in [0.01, 0.3, 0.5, 0.97] {
                let t = tw_quantile(p, order).unwrap();
                assert!((tw_cdf(t, order).unwrap() - p).abs() < 1e-4);
            }
        }
        assert!(tw_quantile(1e-7, TwOrder::Two).is_err());
    }

    #[test]
    fn squared_lag_kernel_differs() {
        let a = tw_cdf_kernel(-2.0, TwOrder::Two, TwKernel::Standard).unwrap();
        let b = tw_cdf_kernel(-2.0, TwOrder::Two, TwKernel::SquaredLag).unwrap();
        assert!((a - b).abs() > 0.05);
    }

    #[test]
    fn table_law_roundtrip() {
        let rows = tw_table(-8.0, 6.0, 281).unwrap();
        let law = TwTableLaw::from_rows(&rows, TwOrder::Two).unwrap();
        for t in [-4.1, -1.77, 0.33] {
            assert!((law.cdf(t) - tw_cdf(t, TwOrder::Two).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn scaling_constants() {
        let s = wishart_extreme_scaling(100, 400, Extreme::Max, Field::Real).unwrap();
        let mu = (399f64.sqrt() + 10.0).powi(2);
        assert!((s.center * 400.0 - mu).abs() < 1e-9);
        assert!((mu - 898.50).abs() < 0.01);
        let sigma = (399f64.sqrt() + 10.0) * (1.0 / 399f64.sqrt() + 0.1).powf(1.0 / 3.0);
        assert!((s.scale * 400.0 - sigma).abs() < 1e-9);
        let small = wishart_extreme_scaling(1, 1_000_000, Extreme::Max, Field::Complex).unwrap();
        assert!((small.center - 1.0).abs() < 3e-3);
        assert!(wishart_extreme_scaling(10, 10, Extreme::Min, Field::Complex).is_err());
        let m = wishart_extreme_scaling(200, 400, Extreme::Min, Field::Complex).unwrap();
        assert!(m.scale < 0.0);
    }

    #[test]
    fn limits() {
        let (a, b) = extreme_limits(0.5).unwrap();
        assert!((a - 0.085_786_4).abs() < 1e-6 && (b - 2.914_213_6).abs() < 1e-6);
        assert_eq!(extreme_limits(1.0).unwrap(), (0.0, 4.0));
    }

    #[test]
    fn condition_sampler() {
        let v = condition_number_limit_sampler(Seed(3), 4000).unwrap();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        // sd of (X' - X)/2 is sqrt(var/2) ~ 0.64
        assert!(m.abs() < 4.0 * 0.64 / (4000f64).sqrt(), "{m}");
        assert_eq!(condition_number_limit_sampler(Seed(5), 1).unwrap(), condition_number_limit_sampler(Seed(5), 1).unwrap());
    }
}
