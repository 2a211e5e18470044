//! Experiment runner: one subcommand per module, driven by a JSON config.
//!
//! Every output file is a pure function of the resolved config (the file
//! plus `--precision-bits` and `--seed` overrides). CSV files open with a
//! comment line carrying the SHA-256 of that resolved config and the units
//! of each column.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::birkhoff::{
    dk_residuals, extravagance_series, lemma_block_bounds_checks, lemma_dk_adapted_checks,
    phigamma_sum_checks, theta_series, Block, BvTable, Observable, SampleSchedule,
    LEMMA_DK_CONSTANT,
};
use crate::cf::{angle_value, continuants, convergents_up_to, AlphaSpec, ContinuedFraction};
use crate::criterion::{classify_with, ClassifyParams, Regime};
use crate::error::Error;
use crate::flow::{empirical_measures, historic_indicator, log_grid, FlowParams, SpeedKind};
use crate::orbit::{sample_points, Rotation, TorusPoint};

pub const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `1/x + 1/(1-x)`
    #[default]
    Phi,
    PhiGamma { gamma: f64 },
    /// Indicator of `[a, b)`; endpoints as decimal fractions like `"1/4"`.
    Indicator { a: String, b: String },
    /// `x - 1/2`
    Sawtooth,
}

fn parse_fraction(field: &str, text: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Config(format!("field `{field}`: cannot parse {text:?} as a fraction"));
    let (n, d) = text.split_once('/').unwrap_or((text, "1"));
    let n = n.trim().parse().map_err(|_| bad())?;
    let d: num_bigint::BigInt = d.trim().parse().map_err(|_| bad())?;
    if d == 0.into() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

impl ObservableSpec {
    pub fn build(&self) -> Result<Observable, CliError> {
        Ok(match self {
            ObservableSpec::Phi => Observable::PhiStandard,
            ObservableSpec::PhiGamma { gamma } => Observable::phi_gamma(*gamma)?,
            ObservableSpec::Indicator { a, b } => Observable::Table(BvTable::indicator(
                parse_fraction("observable.a", a)?,
                parse_fraction("observable.b", b)?,
            )?),
            ObservableSpec::Sawtooth => Observable::Table(BvTable::sawtooth()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    /// The shift `beta`, written like a rotation number; omitted means `0`.
    #[serde(default)]
    pub beta: Option<AlphaSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|S_q f - q int f| <= Var f`; needs an indicator or sawtooth observable.
    DenjoyKoksma,
    /// `|S_q phi - 2q log q - phi(x_min)| <= C q`
    LemmaDkAdapted,
    /// Two-sided bounds for `S_k phi - phi(x_min)` on blocks `k in [j q_n, (j+1) q_n]`.
    Block,
    /// `S_q phi_gamma <= C (q^gamma + phi_gamma(x_min))`
    Phigamma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    pub kinds: Vec<CheckKind>,
    pub lemma_constant: f64,
    pub gamma: f64,
    pub phigamma_constant: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            kinds: vec![CheckKind::LemmaDkAdapted, CheckKind::Block],
            lemma_constant: LEMMA_DK_CONSTANT,
            gamma: 1.5,
            phigamma_constant: 4.0,
        }
    }
}

fn default_grid_points() -> usize {
    60
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub epsilon: f64,
    #[serde(default = "default_speed")]
    pub speed: SpeedKind,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Explicit starting points; otherwise `samples` seeded points.
    #[serde(default)]
    pub starts: Option<Vec<[f64; 2]>>,
}

fn default_speed() -> SpeedKind {
    SpeedKind::ProductSineSquares
}

fn default_samples() -> usize {
    1
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION_BITS
}

/// The full description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    /// cf: rows; classify: terms; simulate, theta: orbit length N; checks: largest n.
    #[serde(default)]
    pub n_max: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    #[serde(default)]
    pub schedule: SampleSchedule,
    #[serde(default)]
    pub classify: ClassifyParams,
    #[serde(default)]
    pub theta: Option<ThetaConfig>,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the config as serialized, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let text = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    fn alpha(&self) -> Result<ContinuedFraction, CliError> {
        Ok(self.alpha.build()?)
    }

    fn rotation(&self) -> Result<Rotation, CliError> {
        Ok(Rotation::new(&angle_value(&self.alpha()?, self.precision_bits)?))
    }

    fn points(&self) -> Vec<TorusPoint> {
        sample_points(self.seed, self.samples)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for numerical precision failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(Error::Precision { .. } | Error::NearSingularity { .. } | Error::Integration(_)) => 3,
            CliError::Lib(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "extravagance", version, about = "Birkhoff sums of a singular observable over circle rotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: config `out`, else the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed-point bits of alpha.
    #[arg(long)]
    pub precision_bits: Option<u32>,
    /// Seed of the SplitMix64 sampler of x.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Convergent table: cf.csv
    Cf(CommonArgs),
    /// W_n series verdict: verdict.json, wterms.csv
    Classify(CommonArgs),
    /// Extravagance ratios f(x + N alpha) / S_N: ratios.csv
    Simulate(CommonArgs),
    /// Theta_N^beta(x) = S_N(x) / S_N(x - beta): theta.csv
    Theta(CommonArgs),
    /// Runtime bound checks: checks.csv
    Checks(CommonArgs),
    /// Time-changed linear flow on the torus: flow.csv, historic.json
    Flow(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Cf,
    Classify,
    Simulate,
    Theta,
    Checks,
    Flow,
}

impl Command {
    fn split(&self) -> (Experiment, &CommonArgs) {
        match self {
            Command::Cf(a) => (Experiment::Cf, a),
            Command::Classify(a) => (Experiment::Classify, a),
            Command::Simulate(a) => (Experiment::Simulate, a),
            Command::Theta(a) => (Experiment::Theta, a),
            Command::Checks(a) => (Experiment::Checks, a),
            Command::Flow(a) => (Experiment::Flow, a),
        }
    }
}

/// Parse arguments, run, report errors on stderr; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (experiment, common) = cli.command.split();
    match load_and_execute(experiment, common) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_and_execute(experiment: Experiment, common: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(&common.config).map_err(|source| CliError::Io {
        path: common.config.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(p) = common.precision_bits {
        config.precision_bits = p;
    }
    if let Some(s) = common.seed {
        config.seed = s;
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    execute(experiment, &config, &out)
}

/// Run one experiment and write its files into `out`.
pub fn execute(experiment: Experiment, config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let files = match experiment {
        Experiment::Cf => vec![("cf.csv", run_cf(config)?)],
        Experiment::Classify => {
            let (json, csv) = run_classify(config)?;
            vec![("verdict.json", json), ("wterms.csv", csv)]
        }
        Experiment::Simulate => vec![("ratios.csv", run_simulate(config)?)],
        Experiment::Theta => vec![("theta.csv", run_theta(config)?)],
        Experiment::Checks => vec![("checks.csv", run_checks(config)?)],
        Experiment::Flow => {
            let (csv, json) = run_flow(config)?;
            vec![("flow.csv", csv), ("historic.json", json)]
        }
    };
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out.join(name);
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(body.as_bytes()))
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        written.push(path);
    }
    Ok(written)
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv(String);

impl Csv {
    fn new(config: &ExperimentConfig, units: &str, columns: &[&str]) -> Self {
        Csv(format!("# config sha256 {}; {units}\n{}\n", config.hash(), columns.join(",")))
    }

    fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }
}

fn to_u64(field: &str, v: &BigUint) -> Result<u64, CliError> {
    v.to_u64()
        .ok_or_else(|| CliError::Lib(Error::domain(format!("{field} = {v} does not fit in 64 bits"))))
}

pub fn run_cf(config: &ExperimentConfig) -> Result<String, CliError> {
    let cf = config.alpha()?;
    let rows = match (&config.n_max, &config.alpha) {
        (Some(n), _) => *n as usize,
        (None, AlphaSpec::Luczak { count, .. }) => *count,
        (None, _) => 20,
    };
    if rows == 0 {
        return Err(CliError::Config("field `n_max`: need at least one row".into()));
    }
    let table = convergents_up_to(&cf, rows)?;
    let mut csv = Csv::new(
        config,
        "err = ||q_n alpha|| and w = err * q_{n+1} are midpoints of certified brackets",
        &["n", "a", "p", "q", "err", "w"],
    );
    for r in &table.rows {
        csv.row(&[
            r.n.to_string(),
            r.a.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            f(r.err.to_f64()),
            r.w.as_ref().map(|w| f(w.to_f64())).unwrap_or_default(),
        ]);
    }
    Ok(csv.0)
}

pub fn run_classify(config: &ExperimentConfig) -> Result<(String, String), CliError> {
    let cf = config.alpha()?;
    let n_max = config.n_max.unwrap_or(20) as usize;
    let verdict = classify_with(&cf, n_max, config.classify)?;
    let json = serde_json::to_string_pretty(&json!({
        "config_sha256": config.hash(),
        "alpha": config.alpha,
        "result": verdict,
    }))
    .expect("verdict serializes")
        + "\n";
    let mut csv = Csv::new(
        config,
        "natural logarithms; partial_sum = sum of W_m for m <= n",
        &["n", "regime", "log_qn", "log_qn1", "w", "partial_sum"],
    );
    for (t, s) in verdict.terms.iter().zip(&verdict.partial_sums) {
        let regime = match t.regime {
            Regime::SmallGap => "small_gap",
            Regime::LargeGap => "large_gap",
        };
        csv.row(&[
            t.n.to_string(),
            regime.into(),
            f(t.log_qn),
            f(t.log_qn1),
            f(t.value),
            f(*s),
        ]);
    }
    Ok((json, csv.0))
}

pub fn run_simulate(config: &ExperimentConfig) -> Result<String, CliError> {
    let rotation = config.rotation()?;
    let obs = config.observable.build()?;
    let n_max = config.n_max.unwrap_or(10_000);
    let points = config.points();
    let series = points
        .par_iter()
        .map(|x| extravagance_series(&obs, *x, rotation, n_max, &config.schedule))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(
        config,
        "N = orbit length; ratio = f(x + N alpha) / S_N(f)(x)",
        &["sample", "x", "N", "ratio", "running_max"],
    );
    for (i, (x, rows)) in points.iter().zip(&series).enumerate() {
        for r in rows {
            csv.row(&[i.to_string(), f(x.to_f64()), r.n.to_string(), f(r.ratio), f(r.running_max)]);
        }
    }
    Ok(csv.0)
}

pub fn run_theta(config: &ExperimentConfig) -> Result<String, CliError> {
    let theta = config
        .theta
        .as_ref()
        .ok_or_else(|| CliError::Config("field `theta` is required by the theta subcommand".into()))?;
    let beta = match &theta.beta {
        Some(spec) => {
            let (value, err) = angle_value(&spec.build()?, config.precision_bits)?.to_u128();
            TorusPoint::with_error(value, err)
        }
        None => TorusPoint::ZERO,
    };
    let rotation = config.rotation()?;
    let n_max = config.n_max.unwrap_or(10_000);
    let points = config.points();
    let series = points
        .par_iter()
        .map(|x| theta_series(*x, beta, rotation, n_max, &config.schedule))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(
        config,
        "N = orbit length; theta = S_N(phi)(x) / S_N(phi)(x - beta)",
        &["sample", "x", "N", "theta", "max", "min", "relative_error"],
    );
    for (i, (x, rows)) in points.iter().zip(&series).enumerate() {
        for r in rows {
            csv.row(&[
                i.to_string(),
                f(x.to_f64()),
                r.n.to_string(),
                f(r.theta),
                f(r.max),
                f(r.min),
                f(r.relative_error),
            ]);
        }
    }
    Ok(csv.0)
}

struct CheckRow {
    kind: &'static str,
    n: usize,
    q: u64,
    j: u64,
    k: u64,
    lhs: f64,
    lower: f64,
    upper: f64,
    pass: bool,
}

fn checks_for_point(
    config: &ExperimentConfig,
    rotation: Rotation,
    x: TorusPoint,
    qs: &[(usize, u64, u64)],
) -> Result<Vec<CheckRow>, CliError> {
    let c = &config.checks;
    let denominators: Vec<u64> = qs.iter().map(|&(_, q, _)| q).collect();
    let mut rows = Vec::new();
    for kind in &c.kinds {
        match kind {
            CheckKind::DenjoyKoksma => {
                let Observable::Table(table) = config.observable.build()? else {
                    return Err(CliError::Config(
                        "field `observable`: denjoy_koksma needs an indicator or sawtooth".into(),
                    ));
                };
                for (r, &(n, q, _)) in dk_residuals(&table, rotation, x, &denominators)?.iter().zip(qs) {
                    rows.push(CheckRow {
                        kind: "denjoy_koksma",
                        n,
                        q,
                        j: 0,
                        k: q,
                        lhs: r.residual,
                        lower: 0.0,
                        upper: r.variation,
                        pass: r.pass,
                    });
                }
            }
            CheckKind::LemmaDkAdapted => {
                let checks = lemma_dk_adapted_checks(rotation, x, &denominators, c.lemma_constant)?;
                for (r, &(n, q, _)) in checks.iter().zip(qs) {
                    rows.push(CheckRow {
                        kind: "lemma_dk_adapted",
                        n,
                        q,
                        j: 0,
                        k: q,
                        lhs: r.lhs,
                        lower: 0.0,
                        upper: r.bound,
                        pass: r.pass,
                    });
                }
            }
            CheckKind::Block => {
                let mut blocks = Vec::new();
                let mut index = Vec::new();
                for &(n, q, q_next) in qs {
                    for b in Block::all(q, q_next) {
                        blocks.push(b);
                        index.push(n);
                    }
                }
                for (r, n) in lemma_block_bounds_checks(rotation, x, &blocks)?.iter().zip(index) {
                    rows.push(CheckRow {
                        kind: "block",
                        n,
                        q: r.block.q,
                        j: r.block.j,
                        k: r.block.k,
                        lhs: r.value,
                        lower: r.lower,
                        upper: r.upper,
                        pass: r.pass,
                    });
                }
            }
            CheckKind::Phigamma => {
                let checks = phigamma_sum_checks(rotation, x, c.gamma, &denominators, c.phigamma_constant)?;
                for (r, &(n, q, _)) in checks.iter().zip(qs) {
                    rows.push(CheckRow {
                        kind: "phigamma",
                        n,
                        q,
                        j: 0,
                        k: q,
                        lhs: r.lhs,
                        lower: 0.0,
                        upper: r.bound,
                        pass: r.pass,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn run_checks(config: &ExperimentConfig) -> Result<String, CliError> {
    let cf = config.alpha()?;
    let rotation = config.rotation()?;
    let n_max = config.n_max.unwrap_or(18) as usize;
    let q = continuants(&cf, n_max + 1)?;
    let mut qs = Vec::new();
    for n in 1..q.len().saturating_sub(1).min(n_max + 1) {
        qs.push((n, to_u64("q_n", &q[n])?, to_u64("q_n+1", &q[n + 1])?));
    }
    let points = config.points();
    let results = points
        .par_iter()
        .map(|x| checks_for_point(config, rotation, *x, &qs))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(
        config,
        "each row asserts lower <= lhs <= upper at orbit length k; j = 0 outside block checks",
        &["sample", "x", "kind", "n", "q", "j", "k", "lhs", "lower", "upper", "pass"],
    );
    for (i, (x, rows)) in points.iter().zip(&results).enumerate() {
        for r in rows {
            csv.row(&[
                i.to_string(),
                f(x.to_f64()),
                r.kind.into(),
                r.n.to_string(),
                r.q.to_string(),
                r.j.to_string(),
                r.k.to_string(),
                f(r.lhs),
                f(r.lower),
                f(r.upper),
                r.pass.to_string(),
            ]);
        }
    }
    Ok(csv.0)
}

pub fn run_flow(config: &ExperimentConfig) -> Result<(String, String), CliError> {
    let fc = config
        .flow
        .as_ref()
        .ok_or_else(|| CliError::Config("field `flow` is required by the flow subcommand".into()))?;
    let params = FlowParams::new(config.rotation()?, fc.p, fc.q, fc.speed, fc.epsilon)?;
    let grid = log_grid(fc.t_min, fc.t_max, fc.grid_points)?;
    let starts: Vec<[f64; 2]> = match &fc.starts {
        Some(s) => s.clone(),
        None => {
            let u = sample_points(config.seed, 2 * config.samples);
            u.chunks(2).map(|c| [c[0].to_f64(), c[1].to_f64()]).collect()
        }
    };
    let reports = starts
        .par_iter()
        .map(|z| empirical_measures(*z, &params, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(
        config,
        "t = flow time; z on the unit torus; mass = fraction of [0, t] spent in the eps-ball",
        &["sample", "t", "z_x", "z_y", "mass_p", "mass_q"],
    );
    let mut summary = Vec::new();
    for (i, (start, r)) in starts.iter().zip(&reports).enumerate() {
        for m in 0..r.t_grid.len() {
            csv.row(&[
                i.to_string(),
                f(r.t_grid[m]),
                f(r.z[m][0]),
                f(r.z[m][1]),
                f(r.mass_p[m]),
                f(r.mass_q[m]),
            ]);
        }
        summary.push(json!({
            "sample": i,
            "start": start,
            "historic": historic_indicator(r)?,
        }));
    }
    let json = serde_json::to_string_pretty(&json!({
        "config_sha256": config.hash(),
        "trajectories": summary,
    }))
    .expect("summary serializes")
        + "\n";
    Ok((csv.0, json))
}
