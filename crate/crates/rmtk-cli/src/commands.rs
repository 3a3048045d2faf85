use rmtk::ensembles::{esd, gen_general_scm, gen_wigner, SpectralSample};
use rmtk::extremes::{tw_pdf, tw_quantile, tw_table, TwOrder};
use rmtk::laws::{ks_distance, Law, MpLaw, NormalLaw, SemicircleLaw};
use rmtk::massive::{
    limit_sinr_massive_mmse, limit_sinr_massive_mrc, massive_gamma, state_evolution, MassiveProfile,
};
use rmtk::multiuser::{
    bigdfe_limit_sinr, bigdfe_simulate, bigdfe_simulate_adaptive, channel_from, limit_sinr_mmse, limit_sinr_mrc,
    limit_sinr_zf, simulate_sinr, ChannelEntries, IdcSchedule, ReceiverKind, SystemProfile,
};
use rmtk::nn::{
    chi, datacov_density, datacov_empirical, epsilon_c, eta_zeta, f_alpha, hessian_density, hessian_support_bounds,
    jacobian_sweep, jacobian_theory, normalized_index, propagate_q, q_star, Activation, HessianModelParams,
    NetConfig, WeightEnsemble,
};
use rmtk::sensing::{empirical_rate, roc, threshold_analytic, threshold_mc, Detector, RocGrid, SensingScenario};
use rmtk::spiked::{classify_spikes, spike_fluctuation_params_field, Regime};
use rmtk::validation::{run_criterion, CRITERIA};
use rmtk::{Field, Seed};

use crate::args::*;
use crate::error::{range, CliError};
use crate::output::{Cell, Report, Table};

pub type Outcome = Result<Report, CliError>;

pub struct Ctx {
    pub seed: Seed,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
}

impl Ctx {
    pub fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

pub fn field(s: &str) -> Result<Field, CliError> {
    s.parse::<Field>().map_err(|e| CliError::Usage(e.to_string()))
}

/// Bin centres, counts and normalized densities of `values` on `[lo, hi]`.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v <= hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    let centers = (0..bins).map(|i| lo + w * (i as f64 + 0.5)).collect();
    let dens = counts.iter().map(|&c| c as f64 / (values.len() as f64 * w)).collect();
    (centers, counts, dens)
}

fn positive(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(range(format!("{name} must be positive")));
    }
    Ok(())
}

pub fn ensemble_esd(a: &EnsembleEsd, ctx: &Ctx) -> Outcome {
    positive("N", a.big_n)?;
    positive("bins", a.bins)?;
    let f = field(&a.field)?;
    let (sample, law): (SpectralSample, Option<Box<dyn Law>>) = match a.ensemble.as_str() {
        "wigner" => {
            if !a.spikes.is_empty() {
                return Err(CliError::Usage("spikes apply to Wishart matrices only".into()));
            }
            let w = gen_wigner(a.big_n, a.sigma, f, ctx.seed)?;
            (esd(&w)?, Some(Box::new(SemicircleLaw::new(a.sigma)?)))
        }
        _ => {
            let n = a.n.unwrap_or(2 * a.big_n);
            positive("n", n)?;
            let mut pop = vec![a.sigma * a.sigma; a.big_n];
            if a.spikes.len() > a.big_n {
                return Err(range("more spikes than dimensions"));
            }
            for (p, s) in pop.iter_mut().zip(&a.spikes) {
                *p = *s;
            }
            let s = esd(&gen_general_scm(&pop, n, f, ctx.seed)?)?;
            let law: Option<Box<dyn Law>> =
                if a.spikes.is_empty() { Some(Box::new(MpLaw::new(a.big_n as f64 / n as f64, a.sigma)?)) } else { None };
            (s, law)
        }
    };
    let mut report = if a.raw {
        let mut t = Table::new(&["eigenvalue"]);
        for &v in sample.eigenvalues() {
            t.push(vec![v.into()]);
        }
        Report::new(t)
    } else {
        let (lo, hi) = (sample.min(), sample.max());
        let pad = 1e-9 * (hi - lo).max(1.0);
        let (x, _, d) = histogram(sample.eigenvalues(), a.bins, lo - pad, hi + pad);
        let mut t = Table::new(&["x", "density"]);
        for (x, d) in x.into_iter().zip(d) {
            t.push(vec![x.into(), d.into()]);
        }
        Report::new(t)
    };
    if let Some(law) = law {
        report.metric("ks", ks_distance(&sample, law.as_ref())?);
    }
    report.metric("lambda_max", sample.max());
    report.metric("lambda_min", sample.min());
    Ok(report)
}

pub fn law_pdf(a: &LawPdf) -> Outcome {
    let xs = a.grid.points();
    let pdf: Box<dyn Fn(f64) -> Result<f64, CliError>> = match a.law.as_str() {
        "semicircle" => {
            let l = SemicircleLaw::new(a.sigma)?;
            Box::new(move |x| Ok(l.pdf(x)))
        }
        "mp" => {
            let l = MpLaw::new(a.c, a.sigma)?;
            Box::new(move |x| Ok(l.pdf(x)))
        }
        "normal" => {
            if !(a.sigma > 0.0) {
                return Err(range("sigma must be positive"));
            }
            let l = NormalLaw { mean: 0.0, sd: a.sigma };
            Box::new(move |x| Ok(l.pdf(x)))
        }
        "tw1" => Box::new(|x| Ok(tw_pdf(x, TwOrder::One)?)),
        _ => Box::new(|x| Ok(tw_pdf(x, TwOrder::Two)?)),
    };
    let mut t = Table::new(&["x", "density"]);
    for x in xs {
        t.push(vec![x.into(), pdf(x)?.into()]);
    }
    Ok(Report::new(t))
}

pub fn tw_table_cmd(a: &TwTable) -> Outcome {
    if a.grid.count < 2 {
        return Err(range("the table needs at least two points"));
    }
    let mut t = Table::new(&["t", "f1", "f2"]);
    for (x, f1, f2) in tw_table(a.grid.start, a.grid.stop, a.grid.count)? {
        t.push(vec![x.into(), f1.into(), f2.into()]);
    }
    Ok(Report::new(t))
}

pub fn tw_quantile_cmd(a: &TwQuantile) -> Outcome {
    let orders: Vec<u8> = a.order.map(|o| vec![o]).unwrap_or_else(|| vec![1, 2]);
    let mut t = Table::new(&["p", "order", "quantile"]);
    for &p in &a.p {
        if !(p > 0.0 && p < 1.0) {
            return Err(range(format!("probability {p} outside (0, 1)")));
        }
        for &o in &orders {
            t.push(vec![p.into(), (o as usize).into(), tw_quantile(p, TwOrder::from_u8(o)?)?.into()]);
        }
    }
    Ok(Report::new(t))
}

pub fn spiked_predict(a: &SpikedPredict) -> Outcome {
    positive("N", a.big_n)?;
    positive("n", a.n)?;
    let c = a.big_n as f64 / a.n as f64;
    let f = field(&a.field)?;
    let spec = rmtk::ensembles::SpikeSpec::simple(&a.spikes)?;
    let cls = classify_spikes(&spec, c, a.big_n)?;
    let mut t = Table::new(&["alpha", "multiplicity", "regime", "limit", "mu", "v"]);
    for r in &cls.regimes {
        let name = match r.regime {
            Regime::SupercriticalHigh => "supercritical-high",
            Regime::SupercriticalLow => "supercritical-low",
            Regime::Subcritical => "subcritical",
        };
        let (mu, v) = if r.regime == Regime::SupercriticalHigh {
            spike_fluctuation_params_field(r.alpha, c, f)?
        } else {
            (f64::NAN, f64::NAN)
        };
        t.push(vec![r.alpha.into(), r.multiplicity.into(), name.into(), r.predicted_limit.into(), mu.into(), v.into()]);
    }
    let mut rep = Report::new(t);
    rep.metric("c", c);
    Ok(rep)
}

fn detector(s: &str) -> Result<Detector, CliError> {
    s.parse::<Detector>().map_err(|e| CliError::Usage(e.to_string()))
}

pub fn sense_threshold(a: &SenseThreshold, ctx: &Ctx) -> Outcome {
    let f = field(&a.field)?;
    let trials = ctx.trials(10_000);
    let mut t = Table::new(&["detector", "threshold", "method", "empirical_pfa", "pfa_se", "trials"]);
    let mut sc = SensingScenario::new(a.big_n, a.n, 0, 0.0, f, ctx.seed.derive(1));
    sc.noise_power = a.noise;
    for (i, name) in a.detector.iter().enumerate() {
        let kind = detector(name)?;
        let (gamma, method) = if kind == Detector::Agm {
            (threshold_mc(kind, a.big_n, a.n, a.pfa, trials, ctx.seed.derive(100 + i as u64), f, Some(a.noise))?, "mc")
        } else {
            (threshold_analytic(kind, a.big_n, a.n, a.pfa, f, Some(a.noise))?, "analytic")
        };
        let (p, se) = empirical_rate(&sc, kind, gamma, trials)?;
        t.push(vec![kind.name().into(), gamma.into(), method.into(), p.into(), se.into(), trials.into()]);
    }
    Ok(Report::new(t))
}

pub fn sense_roc(a: &SenseRoc, ctx: &Ctx) -> Outcome {
    if a.points < 2 {
        return Err(range("need at least two operating points"));
    }
    let kind = detector(&a.detector)?;
    let trials = ctx.trials(5000);
    let sc = SensingScenario::new(a.big_n, a.n, a.users, a.snr, field(&a.field)?, ctx.seed);
    let targets: Vec<f64> = (1..=a.points).map(|i| i as f64 / (a.points + 1) as f64).collect();
    let curve = roc(&sc, kind, &RocGrid::Pfa(targets), trials)?;
    let mut t = Table::new(&["pfa", "pd", "pfa_se", "pd_se", "trials"]);
    for p in &curve.points {
        t.push(vec![p.pfa.into(), p.pd.into(), p.pfa_se.into(), p.pd_se.into(), p.trials.into()]);
    }
    Ok(Report::new(t))
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, f64::NAN);
    }
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn mu_sinr(a: &MuSinr, ctx: &Ctx) -> Outcome {
    positive("N", a.big_n)?;
    let f = field(&a.field)?;
    let entries = if a.entries == "binary" { ChannelEntries::Binary } else { ChannelEntries::Gaussian };
    let trials = ctx.trials(20);
    let mut t = Table::new(&["receiver", "c", "snr_db", "limit_sinr", "mc_mean", "mc_se", "N", "trials"]);
    let mut stream = 0u64;
    for name in &a.receiver {
        let kind: ReceiverKind = name.parse().map_err(|e: rmtk::Error| CliError::Usage(e.to_string()))?;
        for &c in &a.c {
            for &snr in &a.snr_db {
                stream += 1;
                let noise = 10f64.powf(-snr / 10.0);
                let mut profile = SystemProfile::equal_power(c, 1.0, noise, f);
                profile.fourth_moment = entries.fourth_moment(f);
                let limit = match kind {
                    ReceiverKind::Mrc => limit_sinr_mrc(1.0, &profile)?,
                    ReceiverKind::Zf => limit_sinr_zf(1.0, c, noise)?,
                    ReceiverKind::Mmse => limit_sinr_mmse(1.0, &profile)?,
                };
                let (m, se) = if kind == ReceiverKind::Zf && c >= 1.0 || trials == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    let sims = simulate_sinr(kind, a.big_n, &profile, entries, trials, ctx.seed.derive(stream))?;
                    let per_trial: Vec<f64> = sims.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
                    mean_se(&per_trial)
                };
                t.push(vec![
                    kind.name().into(),
                    c.into(),
                    snr.into(),
                    limit.into(),
                    m.into(),
                    se.into(),
                    a.big_n.into(),
                    trials.into(),
                ]);
            }
        }
    }
    Ok(Report::new(t))
}

pub fn bigdfe(a: &Bigdfe, ctx: &Ctx) -> Outcome {
    positive("N", a.big_n)?;
    let k = a.k.unwrap_or(a.big_n);
    positive("K", k)?;
    let s = 10f64.powf(a.snr_db / 10.0);
    let c = k as f64 / a.big_n as f64;
    let mut rng = ctx.seed.rng();
    let h = channel_from(&mut rng, a.big_n, k, Field::Complex, ChannelEntries::Gaussian);
    let its = if a.rho.is_empty() {
        bigdfe_simulate_adaptive(&h, 1.0, 1.0 / s, a.iterations, a.symbols, ctx.seed.derive(1))?
    } else {
        bigdfe_simulate(&h, 1.0, 1.0 / s, &IdcSchedule::new(a.rho.clone())?, a.symbols, ctx.seed.derive(1))?
    };
    let mut t = Table::new(&[
        "iteration",
        "rho",
        "limit_sinr",
        "formula_sinr",
        "measured_sinr",
        "realized_rho",
        "symbol_error_rate",
    ]);
    for (i, it) in its.iter().enumerate() {
        let lim = bigdfe_limit_sinr(1.0, 1.0 / s, c, &IdcSchedule::new(vec![it.rho])?)?[0];
        t.push(vec![
            i.into(),
            it.rho.into(),
            lim.into(),
            it.formula_sinr.into(),
            it.measured_sinr.into(),
            it.realized_rho.into(),
            it.symbol_error_rate.into(),
        ]);
    }
    Ok(Report::new(t))
}

pub fn massive_sinr(a: &MassiveSinr, ctx: &Ctx) -> Outcome {
    let mut t = Table::new(&["c", "tau2", "receiver", "beta_k", "gamma", "limit_sinr"]);
    let mut rep_tau = f64::NAN;
    for &c in &a.c {
        let p = MassiveProfile {
            xi: a.xi,
            omega: a.omega,
            epsilon: a.epsilon,
            c,
            sigma_u2: a.sigma_u2,
            beta_samples: a.beta.clone(),
        };
        let tau2 = match a.tau2 {
            Some(v) => v,
            None => state_evolution(&p, 100_000, ctx.tol.unwrap_or(1e-13))?.fixed_point,
        };
        rep_tau = tau2;
        let mrc = limit_sinr_massive_mrc(a.beta_k, &p, tau2)?;
        t.push(vec![c.into(), tau2.into(), "mrc".into(), a.beta_k.into(), f64::NAN.into(), mrc.into()]);
        let (g, _) = massive_gamma(&p, tau2)?;
        let mmse = limit_sinr_massive_mmse(a.beta_k, &p, tau2)?;
        t.push(vec![c.into(), tau2.into(), "mmse".into(), a.beta_k.into(), g.into(), mmse.into()]);
    }
    let mut rep = Report::new(t);
    rep.metric("tau2", rep_tau);
    Ok(rep)
}

pub fn activation(net: &NetArgs) -> Result<Activation, CliError> {
    Ok(match net.activation.as_str() {
        "linear" => Activation::linear(),
        "relu" => Activation::relu(),
        "hard-tanh" => Activation::hard_tanh(),
        "tanh" => Activation::tanh(),
        _ => f_alpha(net.alpha)?,
    })
}

fn ensemble(s: &str) -> WeightEnsemble {
    if s == "orthogonal" {
        WeightEnsemble::Orthogonal
    } else {
        WeightEnsemble::Gaussian
    }
}

pub fn net_config(net: &NetArgs, layers: usize, width: usize, ens: WeightEnsemble) -> Result<NetConfig, CliError> {
    let act = activation(net)?;
    match (net.sigma_w2, net.critical_q) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --sigma-w2 or --critical-q".into())),
        (Some(w), None) => {
            let cfg = NetConfig::new(layers, width, w, net.sigma_b2.unwrap_or(0.0), ens, act);
            cfg.validate()?;
            Ok(cfg)
        }
        (None, q) => {
            if net.sigma_b2.is_some() {
                return Err(CliError::Usage("--sigma-b2 needs --sigma-w2".into()));
            }
            Ok(NetConfig::critical(layers, width, ens, act, q.unwrap_or(1.0))?)
        }
    }
}

pub fn nn_qstar(a: &NnQstar) -> Outcome {
    let cfg = net_config(&a.net, 1, 1, WeightEnsemble::Gaussian)?;
    let qs = propagate_q(&cfg, a.q0, a.layers)?;
    let mut t = Table::new(&["layer", "q"]);
    for (i, q) in qs.iter().enumerate() {
        t.push(vec![i.into(), (*q).into()]);
    }
    let mut rep = Report::new(t);
    let q = q_star(&cfg)?;
    rep.metric("q_star", q);
    rep.metric("chi", chi(&cfg, q)?);
    rep.metric("sigma_w2", cfg.sigma_w2);
    rep.metric("sigma_b2", cfg.sigma_b2);
    Ok(rep)
}

pub fn sweep_table() -> Table {
    Table::new(&["L", "lambda_max", "variance", "ensemble", "activation"])
}

pub fn nn_jacobian(a: &NnJacobian, ctx: &Ctx) -> Outcome {
    positive("width", a.width)?;
    if a.depths.is_empty() || a.depths.contains(&0) {
        return Err(range("depths must be positive"));
    }
    let cfg = net_config(&a.net, 1, a.width, ensemble(&a.ensemble))?;
    let mut t = sweep_table();
    if a.theory {
        for &l in &a.depths {
            let (lm, v) = jacobian_theory(&NetConfig { layers: l, ..cfg.clone() })?;
            t.push(vec![l.into(), lm.into(), v.into(), cfg.ensemble.name().into(), cfg.activation.name().into()]);
        }
    } else {
        for r in jacobian_sweep(&cfg, &a.depths, ctx.seed)? {
            t.push(vec![r.layers.into(), r.lambda_max.into(), r.variance.into(), r.ensemble.name().into(), r.activation.into()]);
        }
    }
    let mut rep = Report::new(t);
    rep.metric("sigma_w2", cfg.sigma_w2);
    rep.metric("sigma_b2", cfg.sigma_b2);
    Ok(rep)
}

fn density_table(x: &[f64], d: &[f64]) -> Table {
    let mut t = Table::new(&["x", "density"]);
    for (x, d) in x.iter().zip(d) {
        t.push(vec![(*x).into(), (*d).into()]);
    }
    t
}

fn failures(n: usize) -> Result<(), CliError> {
    if n > 0 {
        return Err(CliError::Numeric(format!("density evaluation failed at {n} grid points")));
    }
    Ok(())
}

pub fn nn_hessian(a: &NnHessian) -> Outcome {
    let p = HessianModelParams { epsilon: a.epsilon, c: a.c, sigma: a.sigma };
    p.validate()?;
    let grid = match &a.grid {
        Some(g) => g.points(),
        None => {
            let (lo, hi) = hessian_support_bounds(&p, a.refined);
            Grid::new(lo, hi, 801).points()
        }
    };
    let d = hessian_density(&p, &grid, a.refined)?;
    failures(d.failures.len())?;
    let mut rep = Report::new(density_table(&d.x, &d.density));
    rep.metric("normalized_index", normalized_index(&p, a.refined)?);
    let ec = epsilon_c(a.c, a.refined, a.sigma);
    if let Ok(ec) = ec {
        rep.metric("epsilon_c", ec);
    }
    Ok(rep)
}

pub fn nn_datacov(a: &NnDatacov, ctx: &Ctx) -> Outcome {
    let act = f_alpha(a.alpha)?;
    let (eta, zeta) = eta_zeta(&act, 1.0)?;
    let mut rep = if a.empirical {
        positive("n0", a.n0)?;
        positive("bins", a.bins)?;
        let width = (a.n0 as f64 / a.psi).round() as usize;
        let m = (a.n0 as f64 / a.xi).round() as usize;
        positive("width", width)?;
        positive("samples", m)?;
        let cfg = NetConfig::new(a.layers, width, 1.0, 0.0, WeightEnsemble::Gaussian, act);
        let s = datacov_empirical(&cfg, a.n0, m, ctx.seed)?;
        let (x, _, d) = histogram(s.eigenvalues(), a.bins, 0.0, s.max() * (1.0 + 1e-9));
        let mut rep = Report::new(density_table(&x, &d));
        rep.metric("ks_vs_input_mp", ks_distance(&s, &MpLaw::new(a.xi / a.psi, 1.0)?)?);
        rep
    } else {
        let grid = match &a.grid {
            Some(g) => g.points(),
            None => {
                let hi = 1.2 * (eta * (1.0 + a.xi) * (1.0 + 1.0 / a.psi) + 1.0) + 1.0;
                Grid::new(hi / 800.0, hi, 800).points()
            }
        };
        let d = datacov_density(&grid, eta, zeta, a.xi, a.psi);
        failures(d.failures.len())?;
        Report::new(density_table(&d.x, &d.density))
    };
    rep.metric("eta", eta);
    rep.metric("zeta", zeta);
    Ok(rep)
}

pub fn selftest(a: &Selftest, ctx: &Ctx) -> Outcome {
    let ids: Vec<u8> = if a.only.is_empty() { (1..=CRITERIA).collect() } else { a.only.clone() };
    let mut t = Table::new(&["id", "title", "passed", "detail"]);
    let mut failed = Vec::new();
    for id in ids {
        let out = run_criterion(id, ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
        eprintln!("{}", out.line());
        if !out.passed {
            failed.push(id.to_string());
        }
        t.push(vec![
            (id as usize).into(),
            out.title.into(),
            Cell::S(out.passed.to_string()),
            out.detail.into(),
        ]);
    }
    let mut rep = Report::new(t);
    if !failed.is_empty() {
        rep.violation = Some(format!("criteria {} failed", failed.join(", ")));
    }
    Ok(rep)
}
