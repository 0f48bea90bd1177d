//! Replication engine for VAR(1) studies: estimation-error sweeps, the
//! distribution of the largest estimated eigenvalue, and confidence-region
//! coverage.
//!
//! Replication `r` draws from RNG stream `r` (or `r·K + k` for size index `k`
//! with independent samples), so results do not depend on the worker count.
//! By default each replication simulates one trajectory of the largest sample
//! size and evaluates estimators on its prefixes.

use std::fmt::Write as _;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autocov::autocov_range;
use crate::chain::{summarize, ChainMatrix};
use crate::error::{Error, Result};
use crate::inference::{ellipsoid, ellipsoid_volume_pth_root, univariate_box};
use crate::msve::{msve_from_autocov, SigmaEstimate};
use crate::numerics::linalg::frobenius;
use crate::numerics::RngStream;
use crate::var1::{setting, simulate, true_sigma, Var1Spec, Var1SpecFile, Var1Truth};
use crate::window::{LagWindow, TruncationRule};

fn default_windows() -> Vec<String> {
    LagWindow::experiment_trio().iter().map(ToString::to_string).collect()
}

fn default_nu() -> f64 {
    TruncationRule::DEFAULT_NU
}

fn default_level() -> f64 {
    0.90
}

/// Experiment configuration; also the JSON config-file schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<Var1SpecFile>,
    #[serde(default = "default_windows")]
    pub windows: Vec<String>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub independent_samples: bool,
}

impl ExperimentConfig {
    pub fn for_setting(id: u8, sample_sizes: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            setting: Some(id),
            spec: None,
            windows: default_windows(),
            nu: default_nu(),
            sample_sizes,
            replications,
            seed,
            level: default_level(),
            independent_samples: false,
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn plan(&self) -> Result<Plan> {
        let spec = match (&self.setting, &self.spec) {
            (Some(id), None) => setting(*id)?,
            (None, Some(file)) => file.build()?,
            (Some(_), Some(_)) => return Err(Error::Config("give either a setting or a spec, not both".into())),
            (None, None) => return Err(Error::Config("a setting or a spec is required".into())),
        };
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.windows.is_empty() {
            return Err(Error::Config("at least one window is required".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} outside (0, 1)", self.level)));
        }
        let windows = self
            .windows
            .iter()
            .map(|w| w.parse::<LagWindow>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        let rule = TruncationRule::power(self.nu).map_err(|e| Error::Config(e.to_string()))?;
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes is empty".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample_sizes must be strictly increasing".into()));
        }
        for &n in &self.sample_sizes {
            let bn = rule.bn(n);
            if n <= 2 * bn {
                return Err(Error::Config(format!("sample size {n} violates n > 2 b_n (b_n = {bn})")));
            }
        }
        let truth = true_sigma(&spec)?;
        Ok(Plan { config: self.clone(), spec, truth, windows, rule })
    }
}

/// A validated configuration with its resolved process and ground truth.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub spec: Var1Spec,
    pub truth: Var1Truth,
    pub windows: Vec<LagWindow>,
    pub rule: TruncationRule,
}

impl Plan {
    /// Chains for replication `r`, one per configured sample size.
    fn chains(&self, r: usize) -> Result<Vec<ChainMatrix>> {
        let cfg = &self.config;
        let sizes = &cfg.sample_sizes;
        if cfg.independent_samples {
            let k = sizes.len() as u64;
            sizes
                .iter()
                .enumerate()
                .map(|(idx, &n)| simulate(&self.spec, n, &mut RngStream::new(cfg.seed, r as u64 * k + idx as u64)))
                .collect()
        } else {
            let max = *sizes.last().expect("non-empty");
            let full = simulate(&self.spec, max, &mut RngStream::new(cfg.seed, r as u64))?;
            sizes.iter().map(|&n| if n == max { Ok(full.clone()) } else { full.head(n) }).collect()
        }
    }

    fn run<T: Send>(&self, threads: usize, job: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..self.config.replications).into_par_iter().map(&job).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        Self {
            tool: "msve",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash(),
            seed: config.seed,
        }
    }

    fn csv_comment(&self) -> String {
        format!(
            "# tool={} version={} config_hash={} seed={}\n",
            self.tool, self.version, self.config_hash, self.seed
        )
    }
}

/// Mean and standard error of the mean (zero when fewer than two values).
fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    (mean, sample_sd(values) / k.sqrt())
}

fn sample_sd(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
}

/// One estimate from one replication.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub replication: usize,
    pub window: String,
    pub n: usize,
    pub bn: usize,
    pub rel_frobenius_error: f64,
    pub rel_max_eigenvalue_error: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub window: String,
    pub n: usize,
    pub bn: usize,
    pub replications: usize,
    pub mean_rel_frobenius_error: f64,
    pub se_rel_frobenius_error: f64,
    pub mean_rel_max_eigenvalue_error: f64,
    pub se_rel_max_eigenvalue_error: f64,
    pub mean_max_eigenvalue: f64,
    pub sd_max_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub true_max_eigenvalue: f64,
    pub rows: Vec<SweepRow>,
    pub records: Vec<EstimateRecord>,
}

impl SweepReport {
    pub fn row(&self, window: &LagWindow, n: usize) -> Option<&SweepRow> {
        let name = window.to_string();
        self.rows.iter().find(|r| r.window == name && r.n == n)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = self.provenance.csv_comment();
        out.push_str(
            "window,n,bn,replications,mean_rel_frobenius_error,se_rel_frobenius_error,\
             mean_rel_max_eigenvalue_error,se_rel_max_eigenvalue_error,mean_max_eigenvalue,sd_max_eigenvalue\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{},{},{},{},{}",
                r.window,
                r.n,
                r.bn,
                r.replications,
                r.mean_rel_frobenius_error,
                r.se_rel_frobenius_error,
                r.mean_rel_max_eigenvalue_error,
                r.se_rel_max_eigenvalue_error,
                r.mean_max_eigenvalue,
                r.sd_max_eigenvalue
            );
        }
        out
    }

    pub fn records_csv(&self) -> String {
        let mut out = self.provenance.csv_comment();
        out.push_str("replication,window,n,bn,rel_frobenius_error,rel_max_eigenvalue_error,max_eigenvalue\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},\"{}\",{},{},{},{},{}",
                r.replication, r.window, r.n, r.bn, r.rel_frobenius_error, r.rel_max_eigenvalue_error, r.max_eigenvalue
            );
        }
        out
    }

    /// Raw largest-eigenvalue draws for density plotting.
    pub fn eigdist_csv(&self) -> String {
        let mut out = self.provenance.csv_comment();
        let _ = writeln!(out, "# true_max_eigenvalue={}", self.true_max_eigenvalue);
        out.push_str("window,n,replication,max_eigenvalue\n");
        let mut recs: Vec<&EstimateRecord> = self.records.iter().collect();
        recs.sort_by(|a, b| (&a.window, a.n, a.replication).cmp(&(&b.window, b.n, b.replication)));
        for r in recs {
            let _ = writeln!(out, "\"{}\",{},{},{}", r.window, r.n, r.replication, r.max_eigenvalue);
        }
        out
    }
}

fn estimate_errors(est: &SigmaEstimate, truth: &Var1Truth, true_max: f64) -> (f64, f64) {
    let frob = frobenius((&est.matrix - &truth.sigma).view()) / frobenius(truth.sigma.view());
    let eig = (est.max_eigenvalue() - true_max).abs() / true_max;
    (frob, eig)
}

/// Estimation error of `Σ̂_S` against the exact `Σ` for every window and
/// sample size, over all replications. Also the data source for the
/// eigenvalue-distribution output.
pub fn sweep(config: &ExperimentConfig, threads: usize) -> Result<SweepReport> {
    let plan = config.plan()?;
    let true_max = plan.truth.max_eigenvalue()?;
    let per_rep = plan.run(threads, |r| {
        let chains = plan.chains(r)?;
        let mut recs = Vec::with_capacity(chains.len() * plan.windows.len());
        for chain in &chains {
            let bn = plan.rule.bn(chain.n());
            let seq = autocov_range(chain, bn)?;
            for w in &plan.windows {
                let est = msve_from_autocov(&seq, w)?;
                let (frob, eig) = estimate_errors(&est, &plan.truth, true_max);
                recs.push(EstimateRecord {
                    replication: r,
                    window: w.to_string(),
                    n: chain.n(),
                    bn,
                    rel_frobenius_error: frob,
                    rel_max_eigenvalue_error: eig,
                    max_eigenvalue: est.max_eigenvalue(),
                });
            }
        }
        Ok(recs)
    })?;
    let records: Vec<EstimateRecord> = per_rep.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for w in &plan.windows {
        let name = w.to_string();
        for &n in &config.sample_sizes {
            let sel: Vec<&EstimateRecord> = records.iter().filter(|r| r.window == name && r.n == n).collect();
            let frob: Vec<f64> = sel.iter().map(|r| r.rel_frobenius_error).collect();
            let eig: Vec<f64> = sel.iter().map(|r| r.rel_max_eigenvalue_error).collect();
            let lam: Vec<f64> = sel.iter().map(|r| r.max_eigenvalue).collect();
            let (mf, sf) = mean_se(&frob);
            let (me, se) = mean_se(&eig);
            rows.push(SweepRow {
                window: name.clone(),
                n,
                bn: plan.rule.bn(n),
                replications: sel.len(),
                mean_rel_frobenius_error: mf,
                se_rel_frobenius_error: sf,
                mean_rel_max_eigenvalue_error: me,
                se_rel_max_eigenvalue_error: se,
                mean_max_eigenvalue: lam.iter().sum::<f64>() / lam.len() as f64,
                sd_max_eigenvalue: sample_sd(&lam),
            });
        }
    }
    Ok(SweepReport {
        provenance: Provenance::for_config(config),
        config: config.clone(),
        true_max_eigenvalue: true_max,
        rows,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionMethod {
    Ellipsoid,
    BonferroniBox,
    UncorrectedBox,
}

impl RegionMethod {
    pub const ALL: [Self; 3] = [Self::Ellipsoid, Self::BonferroniBox, Self::UncorrectedBox];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ellipsoid => "ellipsoid",
            Self::BonferroniBox => "bonferroni-box",
            Self::UncorrectedBox => "uncorrected-box",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub window: String,
    pub n: usize,
    pub method: RegionMethod,
    /// Replications with a positive definite estimate; coverage is over these.
    pub replications: usize,
    pub indefinite: usize,
    pub coverage: f64,
    pub se_coverage: f64,
    pub mean_volume_root: f64,
    pub se_volume_root: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, window: &LagWindow, n: usize, method: RegionMethod) -> Option<&CoverageRow> {
        let name = window.to_string();
        self.rows.iter().find(|r| r.window == name && r.n == n && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.provenance.csv_comment();
        out.push_str("window,n,method,replications,indefinite,coverage,se_coverage,mean_volume_root,se_volume_root\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{},{},{},{}",
                r.window,
                r.n,
                r.method.name(),
                r.replications,
                r.indefinite,
                r.coverage,
                r.se_coverage,
                r.mean_volume_root,
                r.se_volume_root
            );
        }
        out
    }
}

/// Per (window, n): `Some([(covered, volume_root); 3])` or `None` if the
/// estimate was indefinite.
type RegionOutcome = Option<[(bool, f64); 3]>;

/// Coverage of the true mean (zero for a VAR(1)) by the three region
/// families, with mean volume to the `1/p` power.
pub fn coverage(config: &ExperimentConfig, threads: usize) -> Result<CoverageReport> {
    let plan = config.plan()?;
    let level = config.level;
    let truth = Array1::<f64>::zeros(plan.spec.p());
    let per_rep: Vec<Vec<RegionOutcome>> = plan.run(threads, |r| {
        let chains = plan.chains(r)?;
        let mut out = Vec::with_capacity(chains.len() * plan.windows.len());
        for chain in &chains {
            let n = chain.n();
            let seq = autocov_range(chain, plan.rule.bn(n))?;
            let summary = summarize(chain)?;
            for w in &plan.windows {
                let est = msve_from_autocov(&seq, w)?;
                if !est.is_positive_definite {
                    out.push(None);
                    continue;
                }
                let ell = ellipsoid(&est, &summary, n, level)?;
                let bonf = univariate_box(&est, &summary, n, level, true)?;
                let plain = univariate_box(&est, &summary, n, level, false)?;
                out.push(Some([
                    (ell.contains(truth.view()), ellipsoid_volume_pth_root(&est, n, level)?),
                    (bonf.contains(truth.view()), bonf.volume_pth_root()),
                    (plain.contains(truth.view()), plain.volume_pth_root()),
                ]));
            }
        }
        Ok(out)
    })?;

    let mut rows = Vec::new();
    for (ni, &n) in config.sample_sizes.iter().enumerate() {
        for (wi, w) in plan.windows.iter().enumerate() {
            let idx = ni * plan.windows.len() + wi;
            let outcomes: Vec<&[(bool, f64); 3]> = per_rep.iter().filter_map(|o| o[idx].as_ref()).collect();
            let indefinite = per_rep.len() - outcomes.len();
            for (mi, method) in RegionMethod::ALL.into_iter().enumerate() {
                let k = outcomes.len();
                let hits = outcomes.iter().filter(|o| o[mi].0).count();
                let cov = if k > 0 { hits as f64 / k as f64 } else { f64::NAN };
                let vols: Vec<f64> = outcomes.iter().map(|o| o[mi].1).collect();
                let (mv, sv) = if k > 0 { mean_se(&vols) } else { (f64::NAN, f64::NAN) };
                rows.push(CoverageRow {
                    window: w.to_string(),
                    n,
                    method,
                    replications: k,
                    indefinite,
                    coverage: cov,
                    se_coverage: (cov * (1.0 - cov) / k as f64).sqrt(),
                    mean_volume_root: mv,
                    se_volume_root: sv,
                });
            }
        }
    }
    Ok(CoverageReport { provenance: Provenance::for_config(config), config: config.clone(), rows })
}
