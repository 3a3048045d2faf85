use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Random matrix theory toolkit: spectral laws, transforms, extreme
/// eigenvalues and their applications, written out as CSV or JSON data.
#[derive(Parser, Debug)]
#[command(name = "rmtk", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Master seed; every Monte Carlo stream is derived from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output file; the run manifest is written next to it. Defaults to
    /// stdout with the manifest on stderr.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte Carlo trials (each command has its own default).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Tolerance: KS bound for figure checks, iteration tolerance elsewhere.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
    /// JSON file whose keys mirror the flags, or a run manifest to replay.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// `start:stop:count` with both ends included.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Grid { start, stop, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + h * i as f64).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:count, got {s:?}"));
        };
        let start: f64 = a.trim().parse().map_err(|_| format!("bad grid start {a:?}"))?;
        let stop: f64 = b.trim().parse().map_err(|_| format!("bad grid stop {b:?}"))?;
        let count: usize = n.trim().parse().map_err(|_| format!("bad grid count {n:?}"))?;
        if count == 0 || !(start.is_finite() && stop.is_finite()) || (count > 1 && stop <= start) {
            return Err(format!("grid {s:?} needs start < stop and a positive count"));
        }
        Ok(Grid { start, stop, count })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.to_string()
    }
}

const FIELDS: [&str; 2] = ["real", "complex"];
const ACTIVATIONS: [&str; 5] = ["linear", "relu", "hard-tanh", "tanh", "f-alpha"];

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalue histogram of a sampled Wigner or Wishart matrix.
    EnsembleEsd(EnsembleEsd),
    /// Density of a limiting law on a grid.
    LawPdf(LawPdf),
    /// Tracy-Widom distribution functions F1 and F2.
    TwTable(TwTable),
    /// Tracy-Widom quantiles.
    TwQuantile(TwQuantile),
    /// Regimes, limits and fluctuation constants of population spikes.
    SpikedPredict(SpikedPredict),
    /// Detector thresholds with their empirical false-alarm rates.
    SenseThreshold(SenseThreshold),
    /// Empirical detection curve of one detector.
    SenseRoc(SenseRoc),
    /// Large-system and simulated SINRs of linear multiuser receivers.
    MuSinr(MuSinr),
    /// Block-iterative decision-feedback receiver, limit and simulation.
    Bigdfe(Bigdfe),
    /// Limit SINRs under massive connectivity with estimated channels.
    MassiveSinr(MassiveSinr),
    /// Variance propagation through a random network.
    NnQstar(NnQstar),
    /// Input-output Jacobian spectrum statistics against depth.
    NnJacobian(NnJacobian),
    /// Limiting Hessian spectral density.
    NnHessian(NnHessian),
    /// Spectral density of the output data covariance.
    NnDatacov(NnDatacov),
    /// Data behind a figure preset.
    Fig(Fig),
    /// Runs the acceptance suite.
    Selftest(Selftest),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EnsembleEsd(_) => "ensemble-esd",
            Command::LawPdf(_) => "law-pdf",
            Command::TwTable(_) => "tw-table",
            Command::TwQuantile(_) => "tw-quantile",
            Command::SpikedPredict(_) => "spiked-predict",
            Command::SenseThreshold(_) => "sense-threshold",
            Command::SenseRoc(_) => "sense-roc",
            Command::MuSinr(_) => "mu-sinr",
            Command::Bigdfe(_) => "bigdfe",
            Command::MassiveSinr(_) => "massive-sinr",
            Command::NnQstar(_) => "nn-qstar",
            Command::NnJacobian(_) => "nn-jacobian",
            Command::NnHessian(_) => "nn-hessian",
            Command::NnDatacov(_) => "nn-datacov",
            Command::Fig(_) => "fig",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn params(&self) -> serde_json::Value {
        let v = match self {
            Command::EnsembleEsd(a) => serde_json::to_value(a),
            Command::LawPdf(a) => serde_json::to_value(a),
            Command::TwTable(a) => serde_json::to_value(a),
            Command::TwQuantile(a) => serde_json::to_value(a),
            Command::SpikedPredict(a) => serde_json::to_value(a),
            Command::SenseThreshold(a) => serde_json::to_value(a),
            Command::SenseRoc(a) => serde_json::to_value(a),
            Command::MuSinr(a) => serde_json::to_value(a),
            Command::Bigdfe(a) => serde_json::to_value(a),
            Command::MassiveSinr(a) => serde_json::to_value(a),
            Command::NnQstar(a) => serde_json::to_value(a),
            Command::NnJacobian(a) => serde_json::to_value(a),
            Command::NnHessian(a) => serde_json::to_value(a),
            Command::NnDatacov(a) => serde_json::to_value(a),
            Command::Fig(a) => serde_json::to_value(a),
            Command::Selftest(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct EnsembleEsd {
    #[arg(long, default_value = "wigner", value_parser = ["wigner", "wishart"])]
    pub ensemble: String,
    #[arg(long, default_value = "real", value_parser = FIELDS)]
    pub field: String,
    /// Matrix dimension.
    #[arg(long = "N", default_value_t = 1000)]
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Samples for Wishart matrices (default 2N).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Population spikes of a Wishart matrix.
    #[arg(long, value_delimiter = ',')]
    pub spikes: Vec<f64>,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Write the eigenvalues instead of a histogram.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct LawPdf {
    #[arg(long, value_parser = ["semicircle", "mp", "tw1", "tw2", "normal"])]
    pub law: String,
    /// Ratio N/n of the MP law.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value = "0:3:601")]
    pub grid: Grid,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct TwTable {
    #[arg(long, default_value = "-8:6:281", allow_hyphen_values = true)]
    pub grid: Grid,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TwQuantile {
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.5,0.9,0.95,0.99")]
    pub p: Vec<f64>,
    /// 1 or 2; both when absent.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: Option<u8>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SpikedPredict {
    #[arg(long, value_delimiter = ',', required = true)]
    pub spikes: Vec<f64>,
    #[arg(long = "N", default_value_t = 1000)]
    #[serde(rename = "N")]
    pub big_n: usize,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value = "complex", value_parser = FIELDS)]
    pub field: String,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SenseThreshold {
    #[arg(long, value_delimiter = ',', default_value = "ed,med,cnd,eme,agm,msee")]
    pub detector: Vec<String>,
    #[arg(long = "N", default_value_t = 20)]
    #[serde(rename = "N")]
    pub big_n: usize,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub pfa: f64,
    #[arg(long, default_value = "real", value_parser = FIELDS)]
    pub field: String,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct SenseRoc {
    #[arg(long, default_value = "cnd")]
    pub detector: String,
    #[arg(long = "N", default_value_t = 20)]
    #[serde(rename = "N")]
    pub big_n: usize,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    /// Received SNR in dB.
    #[arg(long, default_value_t = -8.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 1)]
    pub users: usize,
    #[arg(long, default_value = "real", value_parser = FIELDS)]
    pub field: String,
    /// Number of operating points.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct MuSinr {
    #[arg(long, value_delimiter = ',', default_value = "mrc,zf,mmse")]
    pub receiver: Vec<String>,
    /// Load ratios K/N.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub c: Vec<f64>,
    #[arg(long = "snr-db", value_delimiter = ',', default_value = "10", allow_hyphen_values = true)]
    pub snr_db: Vec<f64>,
    #[arg(long = "N", default_value_t = 400)]
    #[serde(rename = "N")]
    pub big_n: usize,
    #[arg(long, default_value = "real", value_parser = FIELDS)]
    pub field: String,
    #[arg(long, default_value = "gaussian", value_parser = ["gaussian", "binary"])]
    pub entries: String,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct Bigdfe {
    #[arg(long = "N", default_value_t = 256)]
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Users (default N).
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    pub snr_db: f64,
    /// Fixed correlation schedule; without it each iteration uses the
    /// correlation realized by the previous decisions.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[arg(long, default_value_t = 400)]
    pub symbols: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MassiveSinr {
    /// Total pilot energy.
    #[arg(long, default_value_t = 10.0)]
    pub xi: f64,
    /// Devices per pilot symbol.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Activity ratio.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Active devices per antenna.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub c: Vec<f64>,
    #[arg(long = "sigma-u2", default_value_t = 1.0)]
    pub sigma_u2: f64,
    /// Path-loss samples.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub beta: Vec<f64>,
    /// Path loss of the user of interest.
    #[arg(long = "beta-k", default_value_t = 1.0)]
    pub beta_k: f64,
    /// Estimation error variance; the state-evolution fixed point when absent.
    #[arg(long)]
    pub tau2: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NetArgs {
    #[arg(long, default_value = "relu", value_parser = ACTIVATIONS)]
    pub activation: String,
    /// Shape parameter of f-alpha.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long = "sigma-w2")]
    pub sigma_w2: Option<f64>,
    #[arg(long = "sigma-b2")]
    pub sigma_b2: Option<f64>,
    /// Choose the variances that make the network critical with fixed point
    /// q (default 1 unless the variances are given).
    #[arg(long = "critical-q")]
    pub critical_q: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NnQstar {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value_t = 1.0)]
    pub q0: f64,
    #[arg(long, default_value_t = 20)]
    pub layers: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NnJacobian {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value = "gaussian", value_parser = ["gaussian", "orthogonal"])]
    pub ensemble: String,
    #[arg(long, default_value_t = 1000)]
    pub width: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub depths: Vec<usize>,
    /// Write the large-width predictions instead of samples.
    #[arg(long)]
    pub theory: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct NnHessian {
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Scale of the Wishart part (refined model).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Use the refined spectral equation.
    #[arg(long)]
    pub refined: bool,
    /// Default: 801 points across the support.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NnDatacov {
    /// Shape parameter of the activation f-alpha.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Input dimension over sample count.
    #[arg(long, default_value_t = 0.5)]
    pub xi: f64,
    /// Input dimension over layer width.
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Histogram a simulated network instead of the limit density.
    #[arg(long)]
    pub empirical: bool,
    #[arg(long, default_value_t = 1000)]
    pub n0: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Fig {
    #[arg(value_parser = ["1", "2", "3", "5", "6", "7", "8", "9"])]
    pub id: String,
    /// Main dimension (matrix size or layer width).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Selftest {
    /// Criteria to run (default all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}
