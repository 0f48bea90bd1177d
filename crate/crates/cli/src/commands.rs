use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use msve_core::experiment::{coverage, sweep, ExperimentConfig};
use msve_core::numerics::RngStream;
use msve_core::window::{condition_diagnostics, window_identity_check, IdentityCheck};
use msve_core::{
    acf_ccf, autocov_range, confidence_report, load_chain, msve, setting, simulate, summarize, ChainFormat,
    ConfidenceReport, ConditionReport, Error, LagWindow, MeanAndScatter, SigmaEstimate, TruncationRule, Var1Spec,
    Var1SpecFile,
};
use serde::Serialize;
use serde_json::json;

use crate::output::Sink;
use crate::{Cli, Command, DiagnoseArgs, EstimateArgs, ExperimentArgs, Format, ProcessArgs, SimulateArgs};

const DEFAULT_SAMPLE_SIZES: [usize; 5] = [1_000, 5_000, 10_000, 50_000, 100_000];
const DEFAULT_REPLICATIONS: usize = 100;

/// 2 configuration or usage, 3 numerical failure, 4 input/output.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                _ if e.is_numeric() => 3,
                Error::Io { .. } | Error::Parse { .. } | Error::NonFinite { .. } | Error::NoRows => 4,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    2
}

pub fn run(cli: &Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into()).into()),
        Some(k) => k,
        None => std::thread::available_parallelism().map_or(1, |k| k.get()),
    };
    // the global pool serves the single-chain commands; experiments build their own
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let sink = Sink::new(cli.out.clone())?;
    match &cli.command {
        Command::Estimate(args) => estimate(args, cli.format, &sink),
        Command::Simulate(args) => simulate_cmd(args, cli.seed.unwrap_or(0), &sink),
        Command::Sweep(args) => sweep_cmd(args, cli, threads, &sink),
        Command::Coverage(args) => coverage_cmd(args, cli, threads, &sink),
        Command::Eigdist(args) => eigdist_cmd(args, cli, threads, &sink),
        Command::Diagnose(args) => diagnose(args, &sink),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source }.into())
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

#[derive(Serialize)]
#[serde(untagged)]
enum Section<T> {
    Ok(T),
    Failed { error: String },
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    tool: &'static str,
    version: &'static str,
    input: String,
    skip: usize,
    n: usize,
    p: usize,
    window: String,
    bn: usize,
    nu: Option<f64>,
    estimate: &'a SigmaEstimate,
    summary: &'a MeanAndScatter,
    confidence: Section<ConfidenceReport>,
}

fn matrix_csv(m: &ndarray::Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn estimate(args: &EstimateArgs, format: Format, sink: &Sink) -> Result<()> {
    let window: LagWindow = args.window.parse()?;
    let chain_format = match &args.input_format {
        Some(f) => f.parse()?,
        None => ChainFormat::from_path(&args.chain),
    };
    if (args.acf.is_some() || args.autocov) && !sink.has_dir() {
        return Err(config_error("--acf and --autocov write files and need --out"));
    }
    let chain = load_chain(&args.chain, chain_format, args.skip)?;
    let n = chain.n();
    let (bn, nu) = match (args.bn, args.nu) {
        (Some(bn), _) => (bn, None),
        (None, nu) => {
            let rule = match nu {
                Some(v) => TruncationRule::power(v)?,
                None => TruncationRule::default(),
            };
            (rule.bn(n), Some(rule.nu()))
        }
    };
    let est = msve(&chain, &window, bn)?;
    let summary = summarize(&chain)?;
    let confidence = match confidence_report(&est, &summary, args.level) {
        Ok(r) => Section::Ok(r),
        Err(e) if e.is_numeric() => Section::Failed { error: e.to_string() },
        Err(e) => return Err(e.into()),
    };
    let report = EstimateReport {
        tool: "msve",
        version: env!("CARGO_PKG_VERSION"),
        input: args.chain.display().to_string(),
        skip: args.skip,
        n,
        p: chain.p(),
        window: window.to_string(),
        bn,
        nu,
        estimate: &est,
        summary: &summary,
        confidence,
    };
    match format {
        Format::Json => sink.emit_json("estimate.json", &report)?,
        Format::Csv => sink.emit("sigma.csv", matrix_csv(&est.matrix).as_bytes())?,
    }
    if let Some(max_lag) = args.acf {
        let mut out = String::from("i,j,lag,value\n");
        for i in 0..chain.p() {
            for j in 0..chain.p() {
                for (lag, v) in acf_ccf(&chain, i, j, max_lag)?.iter().enumerate() {
                    let _ = writeln!(out, "{i},{j},{lag},{v}");
                }
            }
        }
        sink.emit("acf.csv", out.as_bytes())?;
    }
    if args.autocov {
        sink.emit("autocov.csv", autocov_range(&chain, bn)?.to_csv_string().as_bytes())?;
    }
    if !est.is_positive_definite {
        return Err(Error::IndefiniteEstimate { min_eigenvalue: est.min_eigenvalue }.into());
    }
    Ok(())
}

fn process_spec(process: &ProcessArgs) -> Result<Option<Var1SpecFile>> {
    match &process.spec {
        Some(path) => {
            let text = read_text(path)?;
            let file: Var1SpecFile = serde_json::from_str(&text)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            Ok(Some(file))
        }
        None => Ok(None),
    }
}

fn simulate_cmd(args: &SimulateArgs, seed: u64, sink: &Sink) -> Result<()> {
    let spec: Var1Spec = match (args.process.setting, process_spec(&args.process)?) {
        (Some(id), None) => setting(id)?,
        (None, Some(file)) => file.build()?,
        _ => return Err(config_error("give exactly one of --setting or --spec")),
    };
    let format: ChainFormat = args.chain_format.parse()?;
    let chain = simulate(&spec, args.n, &mut RngStream::new(seed, args.stream))?;
    match format {
        ChainFormat::Csv => sink.emit("chain.csv", chain.to_csv_string().as_bytes()),
        ChainFormat::RawF64 => sink.emit("chain.bin", &chain.to_raw_bytes()?),
    }
}

fn experiment_config(args: &ExperimentArgs, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = read_text(path)?;
            serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
        None => {
            let mut c = ExperimentConfig::for_setting(1, DEFAULT_SAMPLE_SIZES.to_vec(), DEFAULT_REPLICATIONS, 0);
            c.setting = None;
            c
        }
    };
    if let Some(id) = args.process.setting {
        cfg.setting = Some(id);
        cfg.spec = None;
    }
    if let Some(file) = process_spec(&args.process)? {
        cfg.spec = Some(file);
        cfg.setting = None;
    }
    if let Some(w) = &args.windows {
        cfg.windows = w.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(nu) = args.nu {
        cfg.nu = nu;
    }
    if let Some(sizes) = &args.sample_sizes {
        cfg.sample_sizes = sizes.clone();
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(level) = args.level {
        cfg.level = level;
    }
    if args.independent_samples {
        cfg.independent_samples = true;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn sweep_cmd(args: &ExperimentArgs, cli: &Cli, threads: usize, sink: &Sink) -> Result<()> {
    let cfg = experiment_config(args, cli.seed)?;
    let report = sweep(&cfg, threads)?;
    match cli.format {
        Format::Csv => {
            sink.emit("sweep_summary.csv", report.summary_csv().as_bytes())?;
            sink.emit_file_only("sweep_replications.csv", report.records_csv().as_bytes())
        }
        Format::Json => sink.emit_json("sweep.json", &report),
    }
}

fn eigdist_cmd(args: &ExperimentArgs, cli: &Cli, threads: usize, sink: &Sink) -> Result<()> {
    let cfg = experiment_config(args, cli.seed)?;
    let report = sweep(&cfg, threads)?;
    let dispersion: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "window": r.window,
                "n": r.n,
                "mean_max_eigenvalue": r.mean_max_eigenvalue,
                "sd_max_eigenvalue": r.sd_max_eigenvalue,
            })
        })
        .collect();
    let meta = json!({
        "provenance": report.provenance,
        "config": report.config,
        "true_max_eigenvalue": report.true_max_eigenvalue,
        "dispersion": dispersion,
    });
    match cli.format {
        Format::Csv => {
            sink.emit("eigdist.csv", report.eigdist_csv().as_bytes())?;
            if sink.has_dir() {
                sink.emit_json("eigdist_meta.json", &meta)?;
            }
            Ok(())
        }
        Format::Json => {
            let samples: Vec<_> = report
                .records
                .iter()
                .map(|r| json!({"window": r.window, "n": r.n, "replication": r.replication, "max_eigenvalue": r.max_eigenvalue}))
                .collect();
            let mut doc = meta;
            doc["samples"] = serde_json::Value::Array(samples);
            sink.emit_json("eigdist.json", &doc)
        }
    }
}

fn coverage_cmd(args: &ExperimentArgs, cli: &Cli, threads: usize, sink: &Sink) -> Result<()> {
    let cfg = experiment_config(args, cli.seed)?;
    let report = coverage(&cfg, threads)?;
    match cli.format {
        Format::Csv => sink.emit("coverage.csv", report.to_csv().as_bytes()),
        Format::Json => sink.emit_json("coverage.json", &report),
    }
}

#[derive(Serialize)]
struct IdentityRow {
    bn: usize,
    #[serde(flatten)]
    check: IdentityCheck,
}

#[derive(Serialize)]
struct DiagnoseReport {
    conditions: ConditionReport,
    conditions_pass: bool,
    identities: Vec<IdentityRow>,
    identities_pass: bool,
}

fn diagnose(args: &DiagnoseArgs, sink: &Sink) -> Result<()> {
    let window: LagWindow = args.window.parse()?;
    let rule = TruncationRule::power(args.nu)?;
    let conditions = condition_diagnostics(&window, &rule, &args.n_grid, args.psi_lambda)
        .context("evaluating consistency conditions")?;
    let identities: Vec<IdentityRow> = args
        .n_grid
        .iter()
        .map(|&n| rule.bn(n))
        .map(|bn| IdentityRow { bn, check: window_identity_check(&window, bn) })
        .collect();
    let report = DiagnoseReport {
        conditions_pass: conditions.verdicts.all_pass(),
        identities_pass: identities.iter().all(|r| r.check.all()),
        conditions,
        identities,
    };
    sink.emit_json("diagnose.json", &report)
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use clap::Parser;

    use super::*;

    /// Runs the command in-process; `Ok(())` maps to exit code 0.
    fn run_in(dir: &Path, args: &[&str]) -> u8 {
        let cli = Cli::try_parse_from(std::iter::once("msve").chain(args.iter().copied())).expect("arguments parse");
        let cwd_args = Cli { out: cli.out.as_ref().map(|o| dir.join(o)), ..cli };
        match run(&cwd_args) {
            Ok(()) => 0,
            Err(e) => exit_code(&e),
        }
    }

    fn path(dir: &Path, name: &str) -> String {
        dir.join(name).display().to_string()
    }

    fn read_json(p: impl AsRef<Path>) -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
    }

    #[test]
    fn scalar_report_matches_hand_interval() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let rows: String = (0..400).map(|t| format!("{}\n", ((t * 7919) % 113) as f64 / 10.0)).collect();
        std::fs::write(d.join("x.csv"), format!("theta\n{rows}")).unwrap();
        let x = path(d, "x.csv");
        assert_eq!(run_in(d, &["--format", "json", "--out", "r", "estimate", &x, "--bn", "5", "--level", "0.95"]), 0);
        let r = read_json(d.join("r/estimate.json"));
        let sigma = r["estimate"]["matrix"][0][0].as_f64().unwrap();
        let hw = r["confidence"]["uncorrected_half_widths"][0].as_f64().unwrap();
        assert!((hw - 1.959963984540054 * (sigma / 400.0).sqrt()).abs() < 1e-12);
        assert_eq!(r["confidence"]["bonferroni_half_widths"][0], r["confidence"]["uncorrected_half_widths"][0]);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("short.csv"), "1\n2\n3\n4\n").unwrap();
        std::fs::write(d.join("bad.csv"), "1,2\n3,x\n").unwrap();
        std::fs::write(d.join("cfg.json"), r#"{"setting": 1, "sample_sizes": [1000], "replications": 0}"#).unwrap();
        std::fs::write(d.join("typo.json"), r#"{"setting": 1, "sample_size": [1000], "replications": 2}"#).unwrap();

        assert_eq!(run_in(d, &["--out", "o", "estimate", &path(d, "short.csv"), "--bn", "2"]), 2);
        assert_eq!(run_in(d, &["--out", "o", "estimate", &path(d, "missing.csv")]), 4);
        assert_eq!(run_in(d, &["--out", "o", "estimate", &path(d, "bad.csv")]), 4);
        assert_eq!(run_in(d, &["--out", "o", "estimate", &path(d, "short.csv"), "--window", "hann"]), 2);
        assert_eq!(run_in(d, &["--out", "o", "sweep", "--config", &path(d, "cfg.json")]), 2);
        assert_eq!(run_in(d, &["--out", "o", "sweep", "--config", &path(d, "typo.json")]), 2);
        assert_eq!(run_in(d, &["--out", "o", "coverage", "--setting", "9", "--sample-sizes", "1000"]), 2);
        assert_eq!(run_in(d, &["--out", "o", "diagnose", "--window", "hann"]), 2);
        assert_eq!(run_in(d, &["--threads", "0", "--out", "o", "diagnose"]), 2);
        assert_eq!(run_in(d, &["estimate", &path(d, "short.csv"), "--bn", "1", "--acf", "1"]), 2);
    }

    #[test]
    fn indefinite_estimate_marks_sections_and_exits_numeric() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        // alternating series: strongly negative lag-1 autocovariance under simple truncation
        let rows: String =
            (0..200).map(|t| format!("{}\n", if t % 2 == 0 { 1.0 } else { -1.0 } + (t % 7) as f64 * 1e-3)).collect();
        std::fs::write(d.join("alt.csv"), rows).unwrap();
        let alt = path(d, "alt.csv");
        let args = ["--format", "json", "--out", "r", "estimate", &alt, "--window", "simple-truncation", "--bn", "2"];
        assert_eq!(run_in(d, &args), 3);
        let r = read_json(d.join("r/estimate.json"));
        assert_eq!(r["estimate"]["is_positive_definite"], false);
        assert!(r["confidence"]["error"].as_str().unwrap().contains("positive definite"));
    }

    #[test]
    fn simulate_round_trips_through_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(run_in(d, &["--seed", "4", "--out", "a", "simulate", "--setting", "1", "--n", "300"]), 0);
        let raw = ["--seed", "4", "--out", "b", "simulate", "--setting", "1", "--n", "300", "--chain-format", "raw"];
        assert_eq!(run_in(d, &raw), 0);
        assert_eq!(run_in(d, &["--out", "ea", "estimate", &path(d, "a/chain.csv")]), 0);
        assert_eq!(run_in(d, &["--out", "eb", "estimate", &path(d, "b/chain.bin")]), 0);
        let a = std::fs::read(d.join("ea/sigma.csv")).unwrap();
        assert_eq!(a, std::fs::read(d.join("eb/sigma.csv")).unwrap());
        assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 10);
    }

    #[test]
    fn diagnose_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let check = |w: &str| {
            assert_eq!(run_in(d, &["--out", w, "diagnose", "--window", w]), 0);
            read_json(d.join(w).join("diagnose.json"))
        };
        let bartlett = check("bartlett");
        assert_eq!(bartlett["conditions_pass"], true);
        assert_eq!(bartlett["identities_pass"], true);
        assert_eq!(check("scaled-bartlett,eta=2")["conditions"]["verdicts"]["delta2_abs_sum"], "fail");
        assert_eq!(check("simple-truncation")["conditions_pass"], false);
    }

    #[test]
    fn eigdist_carries_true_eigenvalue() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let args = ["--out", "e", "eigdist", "--setting", "1", "--sample-sizes", "1000", "--replications", "3"];
        assert_eq!(run_in(d, &[&args[..], &["--windows", "bartlett"]].concat()), 0);
        let csv = std::fs::read_to_string(d.join("e/eigdist.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with("# true_max_eigenvalue=3.4884"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
        let meta = read_json(d.join("e/eigdist_meta.json"));
        assert!((meta["true_max_eigenvalue"].as_f64().unwrap() - 3.48844653778786).abs() < 1e-9);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("c.json"), r#"{"setting": 2, "sample_sizes": [1000], "replications": 5, "seed": 1}"#)
            .unwrap();
        let args = ExperimentArgs {
            config: Some(d.join("c.json")),
            process: ProcessArgs { setting: Some(3), spec: None },
            windows: Some("bartlett; parzen,q=2".into()),
            nu: None,
            sample_sizes: None,
            replications: Some(7),
            level: None,
            independent_samples: true,
        };
        let cfg = experiment_config(&args, Some(99)).unwrap();
        assert_eq!(cfg.setting, Some(3));
        assert_eq!(cfg.replications, 7);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.sample_sizes, vec![1000]);
        assert_eq!(cfg.windows, vec!["bartlett".to_string(), "parzen,q=2".to_string()]);
        assert!(cfg.independent_samples);
    }
}
