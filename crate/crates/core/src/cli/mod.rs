//! The `bitree` command line.
//!
//! Every numeric or enumerated flag can also be set through an environment
//! variable named `BITREE_<FLAG>` (for example `BITREE_SIGMA_R`) or through a
//! `key = value` file given with `--config`. A flag beats the environment,
//! which beats the file, which beats the built-in default.

pub mod config;
pub mod manifest;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::lattice::Method;
use crate::mc::{mc_price, McConfig, McScheme};
use crate::model::{
    ClampPolicy, ContractSpec, Exercise, LatticeConfig, ModelParams, OptionKind,
};
use crate::pricer::price;
use config::ConfigFile;
use manifest::RunManifest;
use table::{run_sweep, to_csv, to_markdown, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bitree", version, about = "Bivariate tree pricing of options under stochastic CIR rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one contract with one method.
    Price(PriceArgs),
    /// Build a convergence table (reference table or custom sweep).
    Table(TableArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Initial equity price.
    #[arg(long = "S0", env = "BITREE_S0")]
    pub s0: Option<f64>,
    /// Equity volatility.
    #[arg(long, env = "BITREE_SIGMA_S")]
    pub sigma_s: Option<f64>,
    /// Initial short rate.
    #[arg(long, env = "BITREE_R0")]
    pub r0: Option<f64>,
    /// Mean-reversion speed.
    #[arg(long, env = "BITREE_KAPPA")]
    pub kappa: Option<f64>,
    /// Long-run rate level.
    #[arg(long, env = "BITREE_THETA")]
    pub theta: Option<f64>,
    /// Equity/rate correlation.
    #[arg(long, env = "BITREE_RHO", allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Strike.
    #[arg(long = "K", env = "BITREE_K")]
    pub strike: Option<f64>,
    /// Maturity in years.
    #[arg(long = "T", env = "BITREE_T")]
    pub maturity: Option<f64>,
    /// european or american.
    #[arg(long, env = "BITREE_EXERCISE")]
    pub exercise: Option<Exercise>,
    /// put or call.
    #[arg(long, env = "BITREE_KIND")]
    pub kind: Option<OptionKind>,
    /// Near-zero regime threshold of the robust tree.
    #[arg(long, env = "BITREE_THETA_STAR")]
    pub theta_star: Option<f64>,
    /// clamp_and_count or unprojected.
    #[arg(long, env = "BITREE_CLAMP_POLICY")]
    pub clamp_policy: Option<ClampPolicy>,
    /// Flat key=value file with defaults for any of these options.
    #[arg(long, env = "BITREE_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Monte Carlo paths.
    #[arg(long, env = "BITREE_PATHS")]
    pub paths: Option<u64>,
    /// Monte Carlo time steps.
    #[arg(long, env = "BITREE_MC_STEPS")]
    pub mc_steps: Option<usize>,
    /// Random seed; each path draws from its own stream of this seed.
    #[arg(long, env = "BITREE_SEED")]
    pub seed: Option<u64>,
    /// weak_second_order or full_truncation_euler.
    #[arg(long, env = "BITREE_SCHEME")]
    pub scheme: Option<McScheme>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMethod {
    Tree(Method),
    Mc,
}

impl FromStr for PriceMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("mc") {
            Ok(PriceMethod::Mc)
        } else {
            s.parse().map(PriceMethod::Tree)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    /// acz, wei, hst or mc.
    #[arg(long, env = "BITREE_METHOD")]
    pub method: Option<PriceMethod>,
    /// Short-rate volatility.
    #[arg(long, env = "BITREE_SIGMA_R")]
    pub sigma_r: Option<f64>,
    /// Tree time steps.
    #[arg(long = "N", env = "BITREE_N")]
    pub steps: Option<usize>,
    /// text, json or csv.
    #[arg(long, env = "BITREE_FORMAT")]
    pub format: Option<Format>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Reference table 1 to 4; omit for a custom sweep.
    #[arg(long, env = "BITREE_TABLE_ID")]
    pub id: Option<u8>,
    /// Comma-separated short-rate volatilities.
    #[arg(long, env = "BITREE_SIGMA_R", value_delimiter = ',')]
    pub sigma_r: Option<Vec<f64>>,
    /// Comma-separated step counts.
    #[arg(long = "N", env = "BITREE_N", value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// Comma-separated tree methods.
    #[arg(long, env = "BITREE_METHODS", value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Add a Monte Carlo benchmark column (European only).
    #[arg(long, env = "BITREE_WITH_MC")]
    pub with_mc: bool,
    /// Directory for the CSV, Markdown and manifest files.
    #[arg(long, env = "BITREE_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Base file name; defaults to `table<id>` or `sweep`.
    #[arg(long, env = "BITREE_NAME")]
    pub name: Option<String>,
    /// Replay a manifest written by an earlier run.
    #[arg(long, conflicts_with_all = ["id", "sigma_r", "steps", "methods", "with_mc"])]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } => EXIT_NON_FINITE,
            Error::SingularDrift | Error::DegenerateBranch { .. } | Error::IndexOutOfRange { .. } => {
                EXIT_INTERNAL
            }
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` and runs the command, writing results to `out`.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Price(a) => cmd_price(&a, out),
        Command::Table(a) => cmd_table(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(model: &ModelArgs) -> Result<ConfigFile, Failure> {
    match &model.config {
        Some(path) => ConfigFile::load(path).map_err(Failure::invalid),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve_params(m: &ModelArgs, file: &ConfigFile, sigma_r: f64) -> Result<ModelParams, String> {
    let d = ModelParams::reference(sigma_r);
    Ok(ModelParams {
        s0: file.layer(m.s0, "s0", d.s0)?,
        sigma_s: file.layer(m.sigma_s, "sigma_s", d.sigma_s)?,
        r0: file.layer(m.r0, "r0", d.r0)?,
        kappa: file.layer(m.kappa, "kappa", d.kappa)?,
        theta: file.layer(m.theta, "theta", d.theta)?,
        sigma_r,
        rho: file.layer(m.rho, "rho", d.rho)?,
    })
}

fn resolve_contract(m: &ModelArgs, file: &ConfigFile, base: ContractSpec) -> Result<ContractSpec, String> {
    Ok(ContractSpec {
        strike: file.layer(m.strike, "strike", base.strike)?,
        maturity: file.layer(m.maturity, "maturity", base.maturity)?,
        kind: file.layer(m.kind, "kind", base.kind)?,
        exercise: file.layer(m.exercise, "exercise", base.exercise)?,
    })
}

fn resolve_mc(a: &McArgs, file: &ConfigFile) -> Result<McConfig, String> {
    let d = McConfig::default();
    Ok(McConfig {
        n_paths: file.layer(a.paths, "paths", d.n_paths)?,
        steps: file.layer(a.mc_steps, "mc_steps", d.steps)?,
        seed: file.layer(a.seed, "seed", d.seed)?,
        scheme: file.layer(a.scheme, "scheme", d.scheme)?,
    })
}

#[derive(Serialize)]
struct PriceLine {
    method: String,
    price: Option<f64>,
    finite: bool,
    #[serde(rename = "N")]
    steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    clamp_count: u64,
    near_zero_count: u64,
    wall_time_secs: f64,
}

fn show(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "nan".into()
    }
}

fn write_line<W: Write>(out: &mut W, format: Format, line: &PriceLine) -> Result<(), Failure> {
    let price = show(line.price.unwrap_or(f64::NAN));
    let text = match format {
        Format::Json => serde_json::to_string(line).map_err(|e| Failure::internal(e.to_string()))?,
        Format::Csv => {
            let mut s = String::from("method,price,finite,N,std_error,clamp_count,near_zero_count,wall_time_secs\n");
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6}",
                line.method,
                price,
                line.finite,
                line.steps,
                line.std_error.map(|e| format!("{e:.6}")).unwrap_or_default(),
                line.clamp_count,
                line.near_zero_count,
                line.wall_time_secs
            ));
            s
        }
        Format::Text => {
            let mut s = format!("method={} price={price} N={}", line.method, line.steps);
            if let (Some(se), Some(n), Some(scheme)) = (line.std_error, line.n_paths, &line.scheme) {
                s.push_str(&format!(" std_error={se:.6} paths={n} scheme={scheme}"));
            } else {
                s.push_str(&format!(
                    " clamp_count={} near_zero_count={}",
                    line.clamp_count, line.near_zero_count
                ));
            }
            s.push_str(&format!(" wall_time={:.3}s", line.wall_time_secs));
            s
        }
    };
    writeln!(out, "{text}").map_err(|e| Failure::internal(e.to_string()))
}

fn cmd_price<W: Write>(a: &PriceArgs, out: &mut W) -> Result<i32, Failure> {
    let file = load_config(&a.model)?;
    let method = file
        .layer(a.method, "method", PriceMethod::Tree(Method::Acz))
        .map_err(Failure::invalid)?;
    let format = file.layer(a.format, "format", Format::Text).map_err(Failure::invalid)?;
    let sigma_r = file.layer(a.sigma_r, "sigma_r", 0.08).map_err(Failure::invalid)?;
    let params = resolve_params(&a.model, &file, sigma_r).map_err(Failure::invalid)?;
    let contract = resolve_contract(&a.model, &file, ContractSpec::european_put(100.0, 1.0))
        .map_err(Failure::invalid)?;

    let line = match method {
        PriceMethod::Tree(m) => {
            let steps = file.layer(a.steps, "steps", 300).map_err(Failure::invalid)?;
            let mut cfg = LatticeConfig::new(steps, &params).with_clamp_policy(
                file.layer(a.model.clamp_policy, "clamp_policy", ClampPolicy::default())
                    .map_err(Failure::invalid)?,
            );
            if let Some(ts) = file.layer_opt(a.model.theta_star, "theta_star").map_err(Failure::invalid)? {
                cfg = cfg.with_theta_star(ts);
            }
            let r = price(m, &params, &contract, &cfg)?;
            PriceLine {
                method: m.to_string(),
                price: r.price.is_finite().then_some(r.price),
                finite: r.is_finite(),
                steps,
                std_error: None,
                n_paths: None,
                scheme: None,
                clamp_count: r.diagnostics.clamp_count(),
                near_zero_count: r.diagnostics.near_zero_nodes,
                wall_time_secs: r.diagnostics.wall_time_secs,
            }
        }
        PriceMethod::Mc => {
            let mc = resolve_mc(&a.mc, &file).map_err(Failure::invalid)?;
            let start = std::time::Instant::now();
            let r = mc_price(&params, &contract, &mc)?;
            PriceLine {
                method: "mc".into(),
                price: r.price.is_finite().then_some(r.price),
                finite: r.price.is_finite(),
                steps: mc.steps,
                std_error: Some(r.std_error),
                n_paths: Some(r.n_paths),
                scheme: Some(r.scheme.as_str().into()),
                clamp_count: 0,
                near_zero_count: 0,
                wall_time_secs: start.elapsed().as_secs_f64(),
            }
        }
    };
    write_line(out, format, &line)?;
    Ok(if line.finite { EXIT_OK } else { EXIT_NON_FINITE })
}

fn build_spec(a: &TableArgs) -> Result<SweepSpec, Failure> {
    let file = load_config(&a.model)?;
    let id = file.layer_opt(a.id, "id").map_err(Failure::invalid)?;
    let base = match id {
        Some(id) => SweepSpec::reference(id)
            .ok_or_else(|| Failure::invalid(format!("table id must be 1 to 4, got {id}")))?,
        None => SweepSpec {
            table_id: None,
            ..SweepSpec::reference(1).expect("table 1 exists")
        },
    };
    let inv = Failure::invalid;
    let sigma_r = file.layer_list(a.sigma_r.clone(), "sigma_r", base.sigma_r.clone()).map_err(inv)?;
    let steps = file.layer_list(a.steps.clone(), "steps", base.steps.clone()).map_err(inv)?;
    let methods = file.layer_list(a.methods.clone(), "methods", base.methods.clone()).map_err(inv)?;
    if sigma_r.is_empty() || steps.is_empty() || methods.is_empty() {
        return Err(Failure::invalid("sigma_r, N and methods lists must be non-empty"));
    }
    let with_mc = a.with_mc || file.get::<bool>("with_mc").map_err(inv)?.unwrap_or(false);
    Ok(SweepSpec {
        table_id: id,
        params: resolve_params(&a.model, &file, base.params.sigma_r).map_err(inv)?,
        contract: resolve_contract(&a.model, &file, base.contract).map_err(inv)?,
        sigma_r,
        steps,
        methods,
        theta_star: file.layer_opt(a.model.theta_star, "theta_star").map_err(inv)?,
        clamp_policy: file
            .layer(a.model.clamp_policy, "clamp_policy", ClampPolicy::default())
            .map_err(inv)?,
        mc: if with_mc {
            Some(resolve_mc(&a.mc, &file).map_err(inv)?)
        } else {
            None
        },
    })
}

fn cmd_table<W: Write>(a: &TableArgs, out: &mut W) -> Result<i32, Failure> {
    let manifest = match &a.manifest {
        Some(path) => RunManifest::load(path).map_err(Failure::invalid)?,
        None => {
            let spec = build_spec(a)?;
            let dir = a.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let stem = a.name.clone().unwrap_or_else(|| match spec.table_id {
                Some(id) => format!("table{id}"),
                None => "sweep".into(),
            });
            std::fs::create_dir_all(&dir).map_err(|e| Failure::internal(e.to_string()))?;
            RunManifest::new(
                spec,
                dir.join(format!("{stem}.csv")),
                dir.join(format!("{stem}.md")),
            )
        }
    };
    let result = run_sweep(&manifest.spec)?;
    let csv = to_csv(&manifest.spec, &result);
    let md = to_markdown(&manifest.spec, &result);
    let io = |e: std::io::Error| Failure::internal(e.to_string());
    std::fs::write(&manifest.csv, &csv).map_err(io)?;
    std::fs::write(&manifest.markdown, &md).map_err(io)?;
    if a.manifest.is_none() {
        manifest.save(&manifest.csv.with_extension("manifest.json")).map_err(io)?;
    }
    out.write_all(md.as_bytes()).map_err(io)?;
    Ok(EXIT_OK)
}
