mod args;
mod commands;
mod config;
mod error;
mod figs;
mod output;

use std::env;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::Value;

use args::{Cli, Command};
use commands::{Ctx, Outcome};
use error::CliError;
use output::{emit, metric_values, RunManifest};

fn dispatch(cmd: &Command, ctx: &Ctx) -> Outcome {
    match cmd {
        Command::EnsembleEsd(a) => commands::ensemble_esd(a, ctx),
        Command::LawPdf(a) => commands::law_pdf(a),
        Command::TwTable(a) => commands::tw_table_cmd(a),
        Command::TwQuantile(a) => commands::tw_quantile_cmd(a),
        Command::SpikedPredict(a) => commands::spiked_predict(a),
        Command::SenseThreshold(a) => commands::sense_threshold(a, ctx),
        Command::SenseRoc(a) => commands::sense_roc(a, ctx),
        Command::MuSinr(a) => commands::mu_sinr(a, ctx),
        Command::Bigdfe(a) => commands::bigdfe(a, ctx),
        Command::MassiveSinr(a) => commands::massive_sinr(a, ctx),
        Command::NnQstar(a) => commands::nn_qstar(a),
        Command::NnJacobian(a) => commands::nn_jacobian(a, ctx),
        Command::NnHessian(a) => commands::nn_hessian(a),
        Command::NnDatacov(a) => commands::nn_datacov(a, ctx),
        Command::Fig(a) => figs::run(a, ctx),
        Command::Selftest(a) => commands::selftest(a, ctx),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = env::var("RMTK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| CliError::Usage(format!("RMTK_THREADS={v:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run() -> Result<(), CliError> {
    init_threads()?;
    let argv = config::merge(env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Some(t) = cli.global.tol {
        if !(t > 0.0) {
            return Err(error::range("tol must be positive"));
        }
    }
    let ctx = Ctx { seed: cli.global.seed.into(), trials: cli.global.trials, tol: cli.global.tol };
    let start = Instant::now();
    let report = dispatch(&cli.command, &ctx)?;
    let data = match cli.global.format.as_str() {
        "json" => report.table.to_json(),
        _ => report.table.to_csv()?,
    };

    let mut params = serde_json::to_value(&cli.global).expect("globals serialize");
    if let (Value::Object(p), Value::Object(extra)) = (&mut params, cli.command.params()) {
        p.extend(extra);
    }
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        params,
        seed: cli.global.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: cli.global.out.iter().map(|p| p.display().to_string()).collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        metrics: metric_values(&report.metrics),
    };
    emit(&data, cli.global.out.as_deref(), &manifest)?;
    match report.violation {
        Some(v) => Err(CliError::Numeric(v)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmtk: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
