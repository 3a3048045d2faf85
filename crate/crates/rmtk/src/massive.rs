//! Massive-connectivity asymptotics: AMP state evolution for activity
//! detection, channel-estimate statistics and limit SINRs under imperfect CSI.

use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MassiveProfile {
    /// Total pilot energy `ξ = L ρ`.
    pub xi: f64,
    /// `N/L`.
    pub omega: f64,
    /// `K/N`, the activity ratio.
    pub epsilon: f64,
    /// `K/M`, active devices per antenna.
    pub c: f64,
    pub sigma_u2: f64,
    /// Path losses whose empirical law stands in for `E_β`.
    pub beta_samples: Vec<f64>,
}

impl MassiveProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("xi", self.xi), ("omega", self.omega), ("epsilon", self.epsilon), ("c", self.c), ("sigma_u2", self.sigma_u2)] {
            ensure(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"))?;
        }
        ensure(!self.beta_samples.is_empty(), || "beta_samples is empty".into())?;
        ensure(self.beta_samples.iter().all(|&b| b > 0.0 && b.is_finite()), || "path losses must be positive".into())
    }

    fn mean(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.beta_samples.iter().map(|&b| f(b)).sum::<f64>() / self.beta_samples.len() as f64
    }

    pub fn mean_beta(&self) -> f64 {
        self.mean(|b| b)
    }

    pub fn noise_floor(&self) -> f64 {
        self.sigma_u2 / self.xi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateEvolution {
    /// `τ_0², τ_1², ...` up to the last iterate.
    pub tau2: Vec<f64>,
    pub fixed_point: f64,
    pub residual: f64,
}

fn se_map(profile: &MassiveProfile, tau2: f64) -> f64 {
    profile.noise_floor() + profile.omega * profile.epsilon * profile.mean(|b| b * tau2 / (b + tau2))
}

/// Iterates the AMP state evolution until successive iterates differ by
/// less than `tol`.
pub fn state_evolution(profile: &MassiveProfile, max_iter: usize, tol: f64) -> Result<StateEvolution> {
    profile.validate()?;
    ensure(tol > 0.0, || "tol must be positive".into())?;
    let mut tau2 = vec![profile.noise_floor() + profile.omega * profile.epsilon * profile.mean_beta()];
    for _ in 0..max_iter {
        let last = *tau2.last().unwrap();
        let next = se_map(profile, last);
        tau2.push(next);
        if (next - last).abs() < tol {
            let residual = (se_map(profile, next) - next).abs();
            return Ok(StateEvolution { tau2, fixed_point: next, residual });
        }
    }
    let last = *tau2.last().unwrap();
    Err(Error::NoConvergence { what: "state evolution", iterations: max_iter, residual: (se_map(profile, last) - last).abs() })
}

/// High-SNR limit `σ²/(ξ(1 - ωε))` of the state-evolution fixed point.
pub fn tau_highsnr(profile: &MassiveProfile) -> Result<f64> {
    profile.validate()?;
    let load = profile.omega * profile.epsilon;
    ensure(load < 1.0, || format!("high-SNR limit needs omega*epsilon < 1, got {load}"))?;
    Ok(profile.noise_floor() / (1.0 - load))
}

/// Per-antenna variances `(v, Δv)` of the channel estimate and its error.
pub fn channel_estimate_stats(beta_k: f64, tau2: f64) -> (f64, f64) {
    let v = beta_k * beta_k / (beta_k + tau2);
    (v, beta_k - v)
}

fn check_point(beta_k: f64, tau2: f64) -> Result<()> {
    ensure(beta_k > 0.0, || "beta_k must be positive".into())?;
    ensure(tau2 >= 0.0 && tau2.is_finite(), || "tau2 must be nonnegative".into())
}

pub fn limit_sinr_massive_mrc(beta_k: f64, profile: &MassiveProfile, tau2: f64) -> Result<f64> {
    profile.validate()?;
    check_point(beta_k, tau2)?;
    Ok(beta_k * beta_k / (profile.c * profile.mean_beta() * (beta_k + tau2)))
}

fn gamma_map(profile: &MassiveProfile, tau2: f64, g: f64) -> f64 {
    let c = profile.c;
    1.0 / (c * profile.mean(|b| b * b / (b + tau2 + b * b * g)) + c * profile.mean(|b| b * tau2 / (b + tau2)))
}

/// Fixed point `Γ` of the MMSE equation together with its residual.
pub fn massive_gamma(profile: &MassiveProfile, tau2: f64) -> Result<(f64, f64)> {
    profile.validate()?;
    ensure(tau2 >= 0.0, || "tau2 must be nonnegative".into())?;
    let c = profile.c;
    let mut g = 1.0 / (c * profile.mean(|b| b * tau2 / (b + tau2)) + c * profile.mean(|b| b * b) / profile.mean_beta());
    const MAX_ITER: usize = 200_000;
    for _ in 0..MAX_ITER {
        let next = 0.5 * g + 0.5 * gamma_map(profile, tau2, g);
        if !next.is_finite() || next > 1e15 {
            break;
        }
        let done = (next - g).abs() <= 1e-15 * next;
        g = next;
        if done {
            break;
        }
    }
    let residual = (gamma_map(profile, tau2, g) - g).abs() / g.max(1.0);
    if residual < 1e-10 {
        Ok((g, residual))
    } else {
        // with no estimation error and c <= 1 the map has no finite fixed point
        Err(Error::NoConvergence { what: "massive MMSE fixed point", iterations: MAX_ITER, residual })
    }
}

pub fn limit_sinr_massive_mmse(beta_k: f64, profile: &MassiveProfile, tau2: f64) -> Result<f64> {
    check_point(beta_k, tau2)?;
    let (g, _) = massive_gamma(profile, tau2)?;
    Ok(channel_estimate_stats(beta_k, tau2).0 * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiuser::{limit_sinr_mmse, SystemProfile};
    use crate::Field;

    fn profile(c: f64, betas: Vec<f64>) -> MassiveProfile {
        MassiveProfile { xi: 10.0, omega: 1.0, epsilon: 0.5, c, sigma_u2: 1.0, beta_samples: betas }
    }

    #[test]
    fn state_evolution_unit_beta() {
        let p = profile(0.1, vec![1.0]);
        let se = state_evolution(&p, 1000, 1e-14).unwrap();
        assert!((se.tau2[0] - 0.6).abs() < 1e-15);
        assert!((se.tau2[1] - 0.2875).abs() < 1e-15);
        let exact = (-0.4 + 0.56f64.sqrt()) / 2.0;
        assert!((se.fixed_point - exact).abs() < 1e-12);
        assert!((se.fixed_point - 0.17417).abs() < 1e-5);
        assert!(se.tau2.windows(2).all(|w| w[1] <= w[0] && w[1] >= p.noise_floor()));
    }

    #[test]
    fn state_evolution_edge_cases() {
        let mut p = profile(0.1, vec![0.5, 1.5]);
        let se = state_evolution(&p, 1000, 1e-12).unwrap();
        assert!(se.residual < 1e-11);
        p.epsilon = 1e-300;
        let se = state_evolution(&p, 10, 1e-12).unwrap();
        assert!((se.tau2[1] - 0.1).abs() < 1e-15);
        assert!(state_evolution(&p, 10, 0.0).is_err());
    }

    #[test]
    fn high_snr_limit() {
        let p = profile(0.1, vec![1.0]);
        assert!((tau_highsnr(&p).unwrap() - 0.2).abs() < 1e-15);
        let mut q = p.clone();
        q.xi = 1000.0;
        let se = state_evolution(&q, 10_000, 1e-15).unwrap().fixed_point;
        let hs = tau_highsnr(&q).unwrap();
        assert!((se / hs - 1.0).abs() < 0.05);
        q.omega = 2.0;
        assert!(tau_highsnr(&q).is_err());
    }

    #[test]
    fn estimate_stats() {
        assert_eq!(channel_estimate_stats(2.0, 0.0), (2.0, 0.0));
        let (v, dv) = channel_estimate_stats(1.0, 0.2);
        assert!((v - 1.0 / 1.2).abs() < 1e-15 && (dv - 0.2 / 1.2).abs() < 1e-15);
    }

    #[test]
    fn limit_values() {
        let p = profile(0.1, vec![1.0]);
        assert!((limit_sinr_massive_mrc(1.0, &p, 0.2).unwrap() - 1.0 / 0.12).abs() < 1e-12);
        let (g, res) = massive_gamma(&p, 0.2).unwrap();
        assert!(res < 1e-10);
        // for β ≡ 1: cΔv Γ² + (c + cΔv(1 + τ²) - 1)Γ - (1 + τ²) = 0
        let (_, dv) = channel_estimate_stats(1.0, 0.2);
        let (a, b, cc) = (0.1 * dv, 0.1 * dv * (1.0 + 0.2) + 0.1 - 1.0, -(1.0 + 0.2));
        let root = (-b + (b * b - 4.0 * a * cc).sqrt()) / (2.0 * a);
        assert!((g - root).abs() < 1e-8 * root);
        assert!((g - 54.1).abs() < 0.5);
        assert!((limit_sinr_massive_mmse(1.0, &p, 0.2).unwrap() - 45.1).abs() < 0.1);
        let mut p2 = p.clone();
        p2.c = 0.2;
        assert!((limit_sinr_massive_mrc(1.0, &p2, 0.2).unwrap() * 2.0 - limit_sinr_massive_mrc(1.0, &p, 0.2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn reduces_to_multiuser_mmse() {
        // massive MMSE equals multiuser MMSE with powers v and noise c·E[Δv]
        let betas = vec![0.5, 1.0, 2.0];
        for &tau2 in &[0.0, 0.3] {
            let p = profile(2.0, betas.clone());
            let noise = p.c * p.mean(|b| channel_estimate_stats(b, tau2).1).max(1e-300);
            let sp = SystemProfile {
                c: 2.0,
                noise_power: noise,
                power_dist: betas.iter().map(|&b| (channel_estimate_stats(b, tau2).0, 1.0 / 3.0)).collect(),
                field: Field::Complex,
                fourth_moment: 2.0,
            };
            for &b in &betas {
                let m = limit_sinr_massive_mmse(b, &p, tau2).unwrap();
                let u = limit_sinr_mmse(channel_estimate_stats(b, tau2).0, &sp).unwrap();
                assert!((m - u).abs() < 1e-6 * u.max(1.0), "tau2 {tau2} beta {b}: {m} vs {u}");
            }
        }
        // perfect CSI below full load has no finite fixed point
        assert!(massive_gamma(&profile(0.5, vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn mrc_matches_multiuser_without_noise() {
        let p = profile(2.0, vec![0.5, 1.5]);
        let sp = SystemProfile { c: 2.0, noise_power: 1e-300, power_dist: vec![(0.5, 0.5), (1.5, 0.5)], field: Field::Real, fourth_moment: 3.0 };
        let a = limit_sinr_massive_mrc(1.5, &p, 0.0).unwrap();
        let b = crate::multiuser::limit_sinr_mrc(1.5, &sp).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mmse_dominates_mrc() {
        for c in [0.05, 0.1, 0.5, 1.0, 3.0] {
            for tau2 in [0.01, 0.2, 1.0] {
                let p = profile(c, vec![0.3, 1.0, 2.5]);
                for b in [0.3, 1.0, 2.5] {
                    assert!(limit_sinr_massive_mmse(b, &p, tau2).unwrap() >= limit_sinr_massive_mrc(b, &p, tau2).unwrap() - 1e-12);
                }
            }
        }
    }
}
