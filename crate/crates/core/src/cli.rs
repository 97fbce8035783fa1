//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or parameter error, 3 data error,
//! 4 weak identification.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{load_csv, load_genotypes_csv, CsvColumns, Dataset};
use crate::diagnostics::{first_stage_f, hausman_test, HausmanResult};
use crate::error::{Mr2Error, Result};
use crate::estimator::{
    fit_2sls, fit_naive_2sls, fit_oracle_2sls, fit_ratio, FitResult, FitSummary, Method,
    VarianceMode,
};
use crate::instruments::{
    build_instruments, build_weighted_instruments, estimate_weights, AlleleCount, Centering,
    InstrumentMatrix,
};
use crate::montecarlo::{self, EstimatorSpec, McScenario};
use crate::subsets::{enumerate_family, partial_id_interactions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_WEAK: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mr2",
    version,
    about = "Multiply robust IV estimation with generated interaction instruments"
)]
pub struct Cli {
    /// Worker threads for simulation (default: all cores).
    #[arg(long, env = "MR2_THREADS", global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the estimator on a CSV file and print JSON results.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo scenario or built-in preset.
    Simulate(SimulateArgs),
    /// Export generated instruments or partial-identification index sets.
    Instruments(InstrumentsArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column.
    #[arg(long, default_value = "Y")]
    pub outcome: String,
    /// Exposure column.
    #[arg(long, default_value = "A")]
    pub exposure: String,
    /// Candidate instrument columns, comma separated; `G1..G5` expands to G1,G2,...,G5.
    #[arg(long)]
    pub instruments: String,
    /// Covariate columns for covariate-adjusted centering, comma separated.
    #[arg(long)]
    pub covariates: Option<String>,
    /// Assumed minimum number of valid instruments; a comma list fits each value.
    #[arg(long, default_value = "1")]
    pub kdag: String,
    /// mr2, oracle, naive or ratio.
    #[arg(long, default_value = "mr2")]
    pub method: String,
    /// 1-based indices of the valid instruments (oracle only), comma separated.
    #[arg(long)]
    pub valid: Option<String>,
    /// sandwich or homoskedastic; used by the Hausman comparison.
    #[arg(long, default_value = "sandwich")]
    pub variance: String,
    /// Weight rows by the product-of-marginals / joint pmf ratio (dependent binary instruments).
    #[arg(long)]
    pub weighted: bool,
    /// Compare the smallest k† against each other requested k†.
    #[arg(long)]
    pub hausman: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["preset", "scenario"])))]
pub struct SimulateArgs {
    /// Built-in design, `table1-block1` ... `table4-block3`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Scenario file (TOML key-value fields of McScenario).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Override the replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the MR² k†.
    #[arg(long)]
    pub kdag: Option<usize>,
    /// Estimators, comma separated (mr2, oracle, naive, ratio).
    #[arg(long, default_value = "mr2,oracle,naive")]
    pub methods: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the text table here instead of stderr.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstrumentsArgs {
    /// Input CSV (not needed with --partial-id).
    #[arg(long, required_unless_present = "partial_id")]
    pub data: Option<PathBuf>,
    /// Candidate instrument columns; `G1..G5` ranges allowed.
    #[arg(long, required_unless_present = "partial_id")]
    pub instruments: Option<String>,
    /// Covariate columns for covariate-adjusted centering.
    #[arg(long)]
    pub covariates: Option<String>,
    #[arg(long)]
    pub kdag: usize,
    /// Use product-of-marginals weighted centering.
    #[arg(long)]
    pub weighted: bool,
    /// List the interaction index sets that satisfy exclusion when k† instruments are valid.
    #[arg(long)]
    pub partial_id: bool,
    /// Number of candidate instruments (with --partial-id).
    #[arg(long = "K", requires = "partial_id")]
    pub k: Option<usize>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn exit_code(e: &Mr2Error) -> i32 {
    match e {
        Mr2Error::Parameter(_)
        | Mr2Error::Capacity { .. }
        | Mr2Error::Scenario(_)
        | Mr2Error::Unsupported(_) => EXIT_USAGE,
        Mr2Error::WeakIdentification { .. } => EXIT_WEAK,
        _ => EXIT_DATA,
    }
}

fn describe(e: &Mr2Error) -> String {
    match e {
        Mr2Error::WeakIdentification { first_stage_f, .. } => {
            let f = first_stage_f.map_or("unavailable".to_owned(), |f| format!("{f:.4}"));
            format!(
                "{e}\nfirst-stage F = {f}. The generated instruments barely predict the exposure; \
                 inspect the significance of the first-stage F statistic before trusting any \
                 estimate, and consider a larger k_dagger."
            )
        }
        _ => e.to_string(),
    }
}

/// Splits a comma list; `G1..G5` expands to `G1,...,G5`.
pub fn expand_list(spec: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once("..") {
            Some((lo, hi)) => {
                let split = |s: &str| {
                    let at = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
                    let (p, d) = s.split_at(at);
                    d.parse::<usize>().ok().map(|d| (p.to_owned(), d))
                };
                let bad = || Mr2Error::Parameter(format!("bad range '{tok}'"));
                let (p1, a) = split(lo).ok_or_else(bad)?;
                let (p2, b) = split(hi).ok_or_else(bad)?;
                if p1 != p2 || a > b {
                    return Err(bad());
                }
                out.extend((a..=b).map(|i| format!("{p1}{i}")));
            }
            None => out.push(tok.to_owned()),
        }
    }
    Ok(out)
}

fn parse_usizes(spec: &str, what: &str) -> Result<Vec<usize>> {
    let v = spec
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>().map_err(|_| {
                Mr2Error::Parameter(format!("{what}: '{t}' is not a positive integer"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Mr2Error::Parameter(format!("{what}: empty list")));
    }
    Ok(v)
}

fn nonempty_instruments(spec: &str) -> Result<Vec<String>> {
    let v = expand_list(spec)?;
    if v.is_empty() {
        return Err(Mr2Error::Parameter("empty instrument list".into()));
    }
    Ok(v)
}

fn check_kdag(kd: usize, k: usize) -> Result<()> {
    if kd == 0 || kd > k {
        return Err(Mr2Error::Parameter(format!(
            "k_dagger={kd} outside the valid range 1..={k} (K={k})"
        )));
    }
    Ok(())
}

fn sink<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|source| Mr2Error::Io {
                path: p.display().to_string(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(stdout)),
    }
}

fn io_err(e: std::io::Error) -> Mr2Error {
    Mr2Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

fn write_json<T: Serialize>(w: &mut dyn Write, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Mr2Error::Csv(e.to_string()))?;
    writeln!(w, "{s}").map_err(io_err)
}

fn mr2_instruments(d: &Dataset<f64>, kd: usize, weighted: bool) -> Result<InstrumentMatrix<f64>> {
    let fam = enumerate_family(d.k(), kd)?;
    if weighted {
        let w = estimate_weights(d.genotypes())?;
        build_weighted_instruments(d.genotypes(), &fam, &w, &AlleleCount)
    } else {
        let centering = if d.m().is_some() {
            Centering::CovariateLinear
        } else {
            Centering::Marginal
        };
        build_instruments(d.genotypes(), &fam, &AlleleCount, centering)
    }
}

fn fit_mr2(d: &Dataset<f64>, kd: usize, weighted: bool) -> Result<FitResult<f64>> {
    let z = mr2_instruments(d, kd, weighted)?;
    let extra = d.m().map(|m| (m, d.genotypes().covariate_names()));
    fit_2sls(d, &z, extra).map_err(|e| match e {
        Mr2Error::WeakIdentification {
            quantity,
            value,
            first_stage_f: None,
        } => Mr2Error::WeakIdentification {
            quantity,
            value,
            first_stage_f: first_stage_f(d, &z).ok().map(|f| f.f),
        },
        e => e,
    })
}

#[derive(Serialize)]
struct EstimateOutput {
    fits: Vec<FitSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    hausman: Vec<HausmanResult>,
}

fn cmd_estimate(a: &EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let instruments = nonempty_instruments(&a.instruments)?;
    let covariates = a
        .covariates
        .as_deref()
        .map(expand_list)
        .transpose()?
        .unwrap_or_default();
    let method: Method = a.method.parse()?;
    let mode: VarianceMode = a.variance.parse()?;
    let kdags = parse_usizes(&a.kdag, "--kdag")?;
    if a.weighted && !covariates.is_empty() {
        return Err(Mr2Error::Parameter(
            "--weighted and --covariates cannot be combined".into(),
        ));
    }
    if a.hausman && (method != Method::Mr2 || kdags.len() < 2) {
        return Err(Mr2Error::Parameter(
            "--hausman needs --method mr2 and at least two --kdag values".into(),
        ));
    }
    let valid = match (method, &a.valid) {
        (Method::Oracle, Some(v)) => parse_usizes(v, "--valid")?,
        (Method::Oracle, None) => {
            return Err(Mr2Error::Parameter("--method oracle needs --valid".into()))
        }
        _ => Vec::new(),
    };
    let cols = CsvColumns {
        outcome: a.outcome.clone(),
        exposure: a.exposure.clone(),
        instruments,
        covariates,
    };
    let d: Dataset<f64> = load_csv(&a.data, &cols)?;
    for &kd in &kdags {
        check_kdag(kd, d.k())?;
    }

    let fits: Vec<FitResult<f64>> = match method {
        Method::Mr2 => kdags
            .iter()
            .map(|&kd| fit_mr2(&d, kd, a.weighted))
            .collect::<Result<_>>()?,
        Method::Oracle => vec![fit_oracle_2sls(&d, &valid)?],
        Method::Naive => vec![fit_naive_2sls(&d)?],
        Method::Ratio => vec![fit_ratio(&d)?],
    };

    let mut out = sink(a.output.as_deref(), stdout)?;
    if fits.len() == 1 && !a.hausman {
        write_json(&mut *out, &fits[0].summary())?;
    } else {
        let mut order: Vec<usize> = (0..fits.len()).collect();
        order.sort_by_key(|&i| kdags[i]);
        let hausman = if a.hausman {
            let r = order[0];
            order[1..]
                .iter()
                .filter(|&&i| kdags[i] != kdags[r])
                .map(|&i| hausman_test(&fits[r], &fits[i], mode))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let output = EstimateOutput {
            fits: fits.iter().map(FitResult::summary).collect(),
            hausman,
        };
        write_json(&mut *out, &output)?;
    }
    out.flush().map_err(io_err)
}

fn cmd_simulate(
    a: &SimulateArgs,
    threads: Option<usize>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let mut scn = match (&a.preset, &a.scenario) {
        (Some(name), _) => montecarlo::preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| Mr2Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            McScenario::from_toml_str(&text)?
        }
        (None, None) => return Err(Mr2Error::Parameter("need --preset or --scenario".into())),
    };
    if let Some(r) = a.reps {
        scn.reps = r;
    }
    if let Some(s) = a.seed {
        scn.seed = s;
    }
    if let Some(n) = a.n {
        scn.n = n;
    }
    if let Some(k) = a.kdag {
        scn.k_dagger = k;
    }
    scn.validate()?;
    let specs = expand_list(&a.methods)?
        .iter()
        .map(|m| m.parse::<Method>().map(EstimatorSpec::new))
        .collect::<Result<Vec<_>>>()?;
    let report = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Mr2Error::Parameter(format!("--threads: {e}")))?
            .install(|| montecarlo::run(&scn, &specs))?,
        None => montecarlo::run(&scn, &specs)?,
    };

    let mut out = sink(a.output.as_deref(), stdout)?;
    writeln!(out, "{}", report.to_json()?).map_err(io_err)?;
    out.flush().map_err(io_err)?;
    drop(out);
    let mut tab = sink(a.table.as_deref(), stderr)?;
    write!(tab, "{}", report.text_table()).map_err(io_err)?;
    tab.flush().map_err(io_err)
}

fn cmd_instruments(a: &InstrumentsArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut out = sink(a.output.as_deref(), stdout)?;
    if a.partial_id {
        let k =
            a.k.ok_or_else(|| Mr2Error::Parameter("--partial-id needs --K".into()))?;
        let sets = partial_id_interactions(k, a.kdag)?;
        let mut wr = csv::Writer::from_writer(&mut out);
        let err = |e: csv::Error| Mr2Error::Csv(e.to_string());
        wr.write_record(["order", "indices"]).map_err(err)?;
        for s in &sets {
            wr.write_record([s.len().to_string(), s.label()])
                .map_err(err)?;
        }
        wr.flush().map_err(io_err)?;
        drop(wr);
        return out.flush().map_err(io_err);
    }
    let (Some(data), Some(instr)) = (&a.data, &a.instruments) else {
        return Err(Mr2Error::Parameter(
            "--data and --instruments are required".into(),
        ));
    };
    let instruments = nonempty_instruments(instr)?;
    let covariates = a
        .covariates
        .as_deref()
        .map(expand_list)
        .transpose()?
        .unwrap_or_default();
    if a.weighted && !covariates.is_empty() {
        return Err(Mr2Error::Parameter(
            "--weighted and --covariates cannot be combined".into(),
        ));
    }
    let g = load_genotypes_csv::<f64>(data, &instruments, &covariates)?;
    check_kdag(a.kdag, g.k())?;
    let fam = enumerate_family(g.k(), a.kdag)?;
    let z = if a.weighted {
        let w = estimate_weights(&g)?;
        build_weighted_instruments(&g, &fam, &w, &AlleleCount)?
    } else if g.m().is_some() {
        build_instruments(&g, &fam, &AlleleCount, Centering::CovariateLinear)?
    } else {
        build_instruments(&g, &fam, &AlleleCount, Centering::Marginal)?
    };
    z.write_csv(&mut out)?;
    out.flush().map_err(io_err)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, cli.threads, stdout, stderr),
        Command::Instruments(a) => cmd_instruments(a, stdout),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", describe(&e));
            exit_code(&e)
        }
    }
}

/// JSON value for a failed run, used by callers that want structured errors.
pub fn error_json(e: &Mr2Error) -> serde_json::Value {
    json!({ "error": e.to_string(), "exit_code": exit_code(e) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn range_expansion() {
        assert_eq!(expand_list("G1..G3").unwrap(), vec!["G1", "G2", "G3"]);
        assert_eq!(
            expand_list("x, G2..G3 ,z").unwrap(),
            vec!["x", "G2", "G3", "z"]
        );
        assert!(expand_list("G3..G1").is_err());
        assert!(expand_list("G1..H2").is_err());
        assert!(expand_list("").unwrap().is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Mr2Error::Parameter("x".into())), 2);
        assert_eq!(exit_code(&Mr2Error::MissingColumn("x".into())), 3);
        let w = Mr2Error::WeakIdentification {
            quantity: "q",
            value: 0.0,
            first_stage_f: Some(0.5),
        };
        assert_eq!(exit_code(&w), 4);
        assert!(describe(&w).contains("first-stage F = 0.5000"));
        assert_eq!(error_json(&w)["exit_code"], 4);
    }
}
