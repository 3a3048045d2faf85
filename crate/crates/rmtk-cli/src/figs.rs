//! Figure presets. Each writes the data behind one figure as a flat table
//! and records the agreement with the limit law as metrics.

use rmtk::ensembles::{esd, gen_iid_matrix, hermite_tridiagonal};
use rmtk::laws::{ks_distance, Law, MpLaw, SemicircleLaw};
use rmtk::nn::{
    datacov_density, datacov_empirical, eta_zeta, f_alpha, hessian_density, jacobian_sweep, Activation,
    HessianModelParams, NetConfig, WeightEnsemble,
};
use rmtk::Field;

use crate::args::Fig;
use crate::commands::{histogram, sweep_table, Ctx, Outcome};
use crate::error::{range, CliError};
use crate::output::{Report, Table};

pub fn run(a: &Fig, ctx: &Ctx) -> Outcome {
    if a.bins == 0 {
        return Err(range("bins must be positive"));
    }
    if a.size == Some(0) {
        return Err(range("size must be positive"));
    }
    match a.id.as_str() {
        "1" => semicircle(a, ctx),
        "2" => marchenko_pastur(a, ctx),
        "3" => Ok(mp_family()),
        "5" => sweeps(a, ctx, &[(WeightEnsemble::Gaussian, Activation::linear())], &[1, 2, 4, 8, 16]),
        "6" => {
            let mut combos = Vec::new();
            for ens in [WeightEnsemble::Gaussian, WeightEnsemble::Orthogonal] {
                for act in [Activation::relu(), Activation::hard_tanh(), Activation::tanh()] {
                    combos.push((ens, act));
                }
            }
            sweeps(a, ctx, &combos, &[2, 4, 8, 16])
        }
        "7" => hessian(),
        "8" => datacov(a, ctx, 1),
        _ => datacov(a, ctx, 10),
    }
}

fn semicircle(a: &Fig, ctx: &Ctx) -> Outcome {
    // the tridiagonal model shares the eigenvalue law of the dense Wigner
    // matrix; Sturm counts give the histogram without a full eigensolve
    let n = a.size.unwrap_or(10_000);
    let tri = hermite_tridiagonal(&mut ctx.seed.rng(), n, Field::Real)?;
    let scale = (n as f64 / 2.0).sqrt();
    let law = SemicircleLaw::new(1.0)?;
    let below = |x: f64| tri.count_below(x * scale);
    let (lo, hi) = (-2.2, 2.2);
    let w = (hi - lo) / a.bins as f64;
    let mut t = Table::new(&["x", "count", "density", "theory"]);
    for i in 0..a.bins {
        let (l, r) = (lo + w * i as f64, lo + w * (i + 1) as f64);
        let count = below(r) - below(l);
        let x = 0.5 * (l + r);
        t.push(vec![x.into(), count.into(), (count as f64 / (n as f64 * w)).into(), law.pdf(x).into()]);
    }
    let mut ks: f64 = 0.0;
    for k in 0..=4000 {
        let x = -2.5 + 5.0 * k as f64 / 4000.0;
        ks = ks.max((below(x) as f64 / n as f64 - law.cdf(x)).abs());
    }
    let mut rep = Report::new(t);
    rep.require_below("ks", ks, ctx.tol.unwrap_or(0.03));
    Ok(rep)
}

fn marchenko_pastur(a: &Fig, ctx: &Ctx) -> Outcome {
    let big_n = a.size.unwrap_or(1000);
    let n = 2 * big_n;
    let s = esd(&gen_iid_matrix(big_n, n, Field::Real, ctx.seed)?.gram(1.0 / n as f64))?;
    let law = MpLaw::new(0.5, 1.0)?;
    let (lo, hi) = law.edges();
    let (x, counts, dens) = histogram(s.eigenvalues(), a.bins, lo - 0.05, hi + 0.05);
    let mut t = Table::new(&["x", "count", "density", "theory"]);
    for i in 0..a.bins {
        t.push(vec![x[i].into(), counts[i].into(), dens[i].into(), law.pdf(x[i]).into()]);
    }
    let mut rep = Report::new(t);
    rep.require_below("ks", ks_distance(&s, &law)?, ctx.tol.unwrap_or(0.03));
    Ok(rep)
}

fn mp_family() -> Report {
    let mut t = Table::new(&["c", "x", "density"]);
    for c in [0.1, 0.25, 0.5, 1.0] {
        let law = MpLaw::new(c, 1.0).expect("valid ratio");
        for i in 1..=600 {
            let x = 0.01 * i as f64;
            t.push(vec![c.into(), x.into(), law.pdf(x).into()]);
        }
    }
    Report::new(t)
}

fn sweeps(a: &Fig, ctx: &Ctx, combos: &[(WeightEnsemble, Activation)], depths: &[usize]) -> Outcome {
    let width = a.size.unwrap_or(1000);
    let mut t = sweep_table();
    for (i, (ens, act)) in combos.iter().enumerate() {
        let cfg = if act.name() == "linear" {
            NetConfig::new(1, width, 1.0, 0.0, *ens, act.clone())
        } else {
            NetConfig::critical(1, width, *ens, act.clone(), 1.0)?
        };
        for r in jacobian_sweep(&cfg, depths, ctx.seed.derive(i as u64))? {
            t.push(vec![r.layers.into(), r.lambda_max.into(), r.variance.into(), r.ensemble.name().into(), r.activation.into()]);
        }
    }
    Ok(Report::new(t))
}

fn hessian() -> Outcome {
    let mut t = Table::new(&["epsilon", "c", "x", "density"]);
    for c in [1.0 / 3.0, 2.0 / 3.0] {
        for eps in [0.0, 0.1, 0.5, 1.0] {
            let grid: Vec<f64> = (0..=1000).map(|i| -2.0 + 0.008 * i as f64).collect();
            let d = hessian_density(&HessianModelParams::new(eps, c), &grid, false)?;
            if !d.is_complete() {
                return Err(CliError::Numeric(format!("Hessian density failed at ε={eps}, c={c}")));
            }
            for (x, v) in grid.iter().zip(&d.density) {
                t.push(vec![eps.into(), c.into(), (*x).into(), (*v).into()]);
            }
        }
    }
    Ok(Report::new(t))
}

fn datacov(a: &Fig, ctx: &Ctx, layers: usize) -> Outcome {
    let n0 = a.size.unwrap_or(1000);
    let xi = 0.5;
    let m = 2 * n0;
    let mp = MpLaw::new(xi, 1.0)?;
    let input = esd(&gen_iid_matrix(n0, m, Field::Real, ctx.seed)?.gram(1.0 / m as f64))?;
    let single = layers == 1;
    let mut t = if single {
        Table::new(&["alpha", "x", "input_density", "output_density", "mp_density", "single_layer_density"])
    } else {
        Table::new(&["alpha", "x", "input_density", "output_density", "mp_density"])
    };
    let mut rep = Report::default();
    for alpha in [-1.0, 0.0, 1.0] {
        let act = f_alpha(alpha)?;
        let cfg = NetConfig::new(layers, n0, 1.0, 0.0, WeightEnsemble::Gaussian, act.clone());
        let out = datacov_empirical(&cfg, n0, m, ctx.seed)?;
        let hi = input.max().max(out.max()) * 1.05;
        let (x, _, din) = histogram(input.eigenvalues(), a.bins, 0.0, hi);
        let (_, _, dout) = histogram(out.eigenvalues(), a.bins, 0.0, hi);
        let theory = if single {
            let (eta, zeta) = eta_zeta(&act, 1.0)?;
            let d = datacov_density(&x, eta, zeta, xi, 1.0);
            if !d.is_complete() {
                return Err(CliError::Numeric(format!("data covariance density failed at α={alpha}")));
            }
            d.density
        } else {
            Vec::new()
        };
        for i in 0..a.bins {
            let mut row = vec![alpha.into(), x[i].into(), din[i].into(), dout[i].into(), mp.pdf(x[i]).into()];
            if single {
                row.push(theory[i].into());
            }
            t.push(row);
        }
        rep.metric(format!("ks_output_vs_mp_alpha_{alpha}"), ks_distance(&out, &mp)?);
    }
    rep.table = t;
    Ok(rep)
}
