//! Simulation designs and the replication engine.
//!
//! Replication `r` (1-based) draws from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `r`, so every replication has its own generator and
//! results do not depend on scheduling or thread count. Interaction
//! selection for the sparse design uses a second generator seeded with
//! `seed ^ SELECTION_SALT` on stream `r` (or stream 1 when frozen).

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Mr2Error, Result};
use crate::estimator::{
    fit_2sls, fit_naive_2sls, fit_oracle_2sls, fit_ratio, FitResult, Method, VarianceMode,
};
use crate::instruments::{build_instruments, AlleleCount, Centering};
use crate::subsets::{enumerate_family, lex_combinations};

const SELECTION_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const Z95: f64 = 1.96;

/// Exposure model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `A = C Σ_{S ≠ ∅} ∏_{s∈S} G_s + ε₂` over all `2^K − 1` products.
    IdentityFullInteractions,
    /// Main effects plus a `γ` fraction of the interactions of order
    /// `2..=‖β‖₀` and of order `≥ ‖β‖₀+1`, each with coefficient `C`.
    IdentitySparse,
    /// `A = exp(C Σ G_s) + ε₂`.
    LogMainEffects,
    /// `A = 1{−t + C Σ G_s + ε₂ > 0}`.
    ProbitThreshold,
}

fn default_p() -> f64 {
    0.8
}
fn default_beta_a() -> f64 {
    1.0
}
fn default_error_cov() -> [[f64; 2]; 2] {
    [[1.0, 0.25], [0.25, 1.0]]
}
fn default_threshold() -> f64 {
    3.0
}
fn default_k_dagger() -> usize {
    2
}
fn default_reps() -> usize {
    1000
}

/// A data-generating design plus replication settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McScenario {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    pub beta_direct: Vec<f64>,
    pub link: Link,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_beta_a")]
    pub beta_a: f64,
    #[serde(default = "default_error_cov")]
    pub error_cov: [[f64; 2]; 2],
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub probit_threshold: f64,
    #[serde(default)]
    pub freeze_interactions: bool,
    /// `k†` used by the MR² estimator.
    #[serde(default = "default_k_dagger")]
    pub k_dagger: usize,
    /// Variance used for `√EVar` and coverage.
    #[serde(default)]
    pub variance: VarianceMode,
}

impl McScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Mr2Error::Scenario(m));
        if self.k == 0 || self.k > 20 {
            return bad(format!("K={} outside 1..=20", self.k));
        }
        if self.n < 2 {
            return bad(format!("n={} must be at least 2", self.n));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p={} outside (0,1)", self.p));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.beta_direct.len() != self.k {
            return bad(format!(
                "beta_direct has {} entries, K={}",
                self.beta_direct.len(),
                self.k
            ));
        }
        let finite = self.beta_direct.iter().all(|v| v.is_finite())
            && self.c.is_finite()
            && self.beta_a.is_finite()
            && self.probit_threshold.is_finite();
        if !finite {
            return bad("non-finite scenario parameter".into());
        }
        let s = self.error_cov;
        if s[0][1] != s[1][0] {
            return bad("error_cov is not symmetric".into());
        }
        if !(s[0][0] > 0.0 && s[0][0] * s[1][1] - s[0][1] * s[1][0] > 0.0) {
            return bad("error_cov is not positive definite".into());
        }
        match (self.link, self.gamma) {
            (Link::IdentitySparse, None) => return bad("identity_sparse needs gamma".into()),
            (_, Some(g)) if !(0.0..=1.0).contains(&g) => {
                return bad(format!("gamma={g} outside [0,1]"));
            }
            _ => {}
        }
        if self.k_dagger == 0 || self.k_dagger > self.k {
            return bad(format!("k_dagger={} outside 1..={}", self.k_dagger, self.k));
        }
        Ok(())
    }

    /// 1-based indices with zero direct effect.
    pub fn valid_indices(&self) -> Vec<usize> {
        (1..=self.k)
            .filter(|&i| self.beta_direct[i - 1] == 0.0)
            .collect()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let scn: Self = toml::from_str(s).map_err(|e| Mr2Error::Scenario(e.to_string()))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Mr2Error::Scenario(e.to_string()))
    }

    fn cholesky(&self) -> (f64, f64, f64) {
        let s = self.error_cov;
        let l11 = s[0][0].sqrt();
        let l21 = s[1][0] / l11;
        let l22 = (s[1][1] - l21 * l21).sqrt();
        (l11, l21, l22)
    }
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Active interaction subsets (1-based, order ≥ 2) for the sparse design.
pub fn sparse_interactions(scn: &McScenario, rep: usize) -> Vec<Vec<usize>> {
    let gamma = scn.gamma.unwrap_or(0.0);
    let stream = if scn.freeze_interactions {
        1
    } else {
        rep as u64
    };
    let mut rng = rep_rng(scn.seed ^ SELECTION_SALT, stream);
    let s0 = scn.beta_direct.iter().filter(|&&b| b != 0.0).count();
    let lower: Vec<Vec<usize>> = (2..=s0.min(scn.k))
        .flat_map(|l| lex_combinations(scn.k, l))
        .collect();
    let higher: Vec<Vec<usize>> = ((s0 + 1).max(2)..=scn.k)
        .flat_map(|l| lex_combinations(scn.k, l))
        .collect();
    let mut out = Vec::new();
    for pool in [lower, higher] {
        let take = (gamma * pool.len() as f64).round() as usize;
        let mut idx = sample(&mut rng, pool.len(), take.min(pool.len())).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| pool[i].clone()));
    }
    out
}

/// Draws replication `rep` of the scenario.
pub fn generate(scn: &McScenario, rep: usize) -> Result<Dataset<f64>> {
    let (n, k) = (scn.n, scn.k);
    let mut rng = rep_rng(scn.seed, rep as u64);
    let mut g = vec![vec![0.0; n]; k];
    for i in 0..n {
        for col in g.iter_mut() {
            col[i] = f64::from(u8::from(rng.random::<f64>() < scn.p));
        }
    }
    let (l11, l21, l22) = scn.cholesky();
    let mut e1 = Vec::with_capacity(n);
    let mut e2 = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        e1.push(l11 * u);
        e2.push(l21 * u + l22 * v);
    }
    let active = match scn.link {
        Link::IdentitySparse => sparse_interactions(scn, rep),
        _ => Vec::new(),
    };
    let c = scn.c;
    let a: Vec<f64> = (0..n)
        .map(|i| {
            let sum_g: f64 = g.iter().map(|col| col[i]).sum();
            let lin = match scn.link {
                Link::IdentityFullInteractions => {
                    // Binary G: the number of nonempty products equal to 1
                    // is 2^(Σ G) − 1.
                    c * ((1u64 << sum_g as u32) - 1) as f64
                }
                Link::IdentitySparse => {
                    let inter = active
                        .iter()
                        .filter(|s| s.iter().all(|&j| g[j - 1][i] == 1.0))
                        .count();
                    c * (sum_g + inter as f64)
                }
                Link::LogMainEffects => (c * sum_g).exp(),
                Link::ProbitThreshold => -scn.probit_threshold + c * sum_g,
            };
            match scn.link {
                Link::ProbitThreshold => f64::from(u8::from(lin + e2[i] > 0.0)),
                _ => lin + e2[i],
            }
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let direct: f64 = scn
                .beta_direct
                .iter()
                .zip(&g)
                .map(|(b, col)| b * col[i])
                .sum();
            scn.beta_a * a[i] + direct + e1[i]
        })
        .collect();
    // A column that came out constant is a degenerate draw; surfaced as an error.
    Dataset::from_columns(y, a, g)
}

/// One estimator to run in every replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimatorSpec {
    pub method: Method,
    /// For MR²; `None` means the scenario's `k_dagger`.
    pub k_dagger: Option<usize>,
}

impl EstimatorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            k_dagger: None,
        }
    }

    pub fn mr2(k_dagger: usize) -> Self {
        Self {
            method: Method::Mr2,
            k_dagger: Some(k_dagger),
        }
    }

    pub fn label(&self, scn: &McScenario) -> String {
        match self.method {
            Method::Mr2 => format!("MR2(k={})", self.k_dagger.unwrap_or(scn.k_dagger)),
            Method::Oracle => "Oracle 2SLS".into(),
            Method::Naive => "Naive 2SLS".into(),
            Method::Ratio => "Ratio".into(),
        }
    }
}

impl From<Method> for EstimatorSpec {
    fn from(m: Method) -> Self {
        Self::new(m)
    }
}

fn fit_one(d: &Dataset<f64>, scn: &McScenario, spec: EstimatorSpec) -> Result<FitResult<f64>> {
    match spec.method {
        Method::Mr2 => {
            let kd = spec.k_dagger.unwrap_or(scn.k_dagger);
            let fam = enumerate_family(d.k(), kd)?;
            let z = build_instruments(d.genotypes(), &fam, &AlleleCount, Centering::Marginal)?;
            fit_2sls(d, &z, None)
        }
        Method::Oracle => fit_oracle_2sls(d, &scn.valid_indices()),
        Method::Naive => fit_naive_2sls(d),
        Method::Ratio => fit_ratio(d),
    }
}

/// Aggregated metrics for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorMetrics {
    pub estimator: String,
    pub method: Method,
    pub k_dagger: Option<usize>,
    pub abs_bias: f64,
    /// Monte Carlo standard deviation; `None` with a single success.
    pub sqrt_var: Option<f64>,
    pub sqrt_evar: f64,
    pub cov95: f64,
    pub mean_estimate: f64,
    pub successes: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl EstimatorMetrics {
    /// Monte Carlo standard error of the mean estimate.
    pub fn mcse(&self) -> Option<f64> {
        self.sqrt_var.map(|s| s / (self.successes as f64).sqrt())
    }
}

type MetricFn = fn(&EstimatorMetrics) -> Option<f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub scenario: McScenario,
    pub reps: usize,
    pub estimators: Vec<EstimatorMetrics>,
}

impl McReport {
    pub fn get(&self, method: Method) -> Option<&EstimatorMetrics> {
        self.estimators.iter().find(|e| e.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Mr2Error::Aggregation(e.to_string()))
    }

    /// Rows `|Bias|`, `√Var`, `√EVar`, `Cov95`; one column per estimator.
    pub fn text_table(&self) -> String {
        let width = self
            .estimators
            .iter()
            .map(|e| e.estimator.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut s = String::new();
        let _ = write!(s, "{:<8}", "");
        for e in &self.estimators {
            let _ = write!(s, "  {:>width$}", e.estimator);
        }
        s.push('\n');
        let fmt = |v: Option<f64>| v.map_or("NA".to_owned(), |v| format!("{v:.3}"));
        let rows: [(&str, MetricFn); 4] = [
            ("|Bias|", |e| Some(e.abs_bias)),
            ("√Var", |e| e.sqrt_var),
            ("√EVar", |e| Some(e.sqrt_evar)),
            ("Cov95", |e| Some(e.cov95)),
        ];
        for (name, get) in rows {
            let _ = write!(s, "{:<8}", name);
            for e in &self.estimators {
                let _ = write!(s, "  {:>width$}", fmt(get(e)));
            }
            s.push('\n');
        }
        if self.estimators.iter().any(|e| e.failures > 0) {
            let _ = write!(s, "{:<8}", "failed");
            for e in &self.estimators {
                let _ = write!(s, "  {:>width$}", e.failures);
            }
            s.push('\n');
        }
        s
    }
}

type RepOutcome = Vec<std::result::Result<(f64, f64), String>>;

/// Runs every replication and aggregates in replication order.
pub fn run(scn: &McScenario, estimators: &[EstimatorSpec]) -> Result<McReport> {
    scn.validate()?;
    if estimators.is_empty() {
        return Err(Mr2Error::Parameter("no estimators requested".into()));
    }
    for e in estimators {
        if let Some(kd) = e.k_dagger {
            if kd == 0 || kd > scn.k {
                return Err(Mr2Error::Parameter(format!(
                    "k_dagger={kd} outside 1..={}",
                    scn.k
                )));
            }
        }
    }
    let outcomes: Vec<RepOutcome> = (1..=scn.reps)
        .into_par_iter()
        .map(|rep| match generate(scn, rep) {
            Ok(d) => estimators
                .iter()
                .map(|&spec| {
                    fit_one(&d, scn, spec)
                        .map(|f| (f.beta_a, f.variance(scn.variance)))
                        .map_err(|e| e.to_string())
                })
                .collect(),
            Err(e) => vec![Err(format!("replication {rep}: {e}")); estimators.len()],
        })
        .collect();

    let mut metrics = Vec::with_capacity(estimators.len());
    for (j, spec) in estimators.iter().enumerate() {
        let mut est = Vec::new();
        let mut var = Vec::new();
        let mut first_failure = None;
        for o in &outcomes {
            match &o[j] {
                Ok((b, v)) => {
                    est.push(*b);
                    var.push(*v);
                }
                Err(msg) => {
                    first_failure.get_or_insert_with(|| msg.clone());
                }
            }
        }
        let label = spec.label(scn);
        if est.is_empty() {
            return Err(Mr2Error::Aggregation(format!(
                "all {} replications failed for {label}: {}",
                scn.reps,
                first_failure.unwrap_or_default()
            )));
        }
        metrics.push(aggregate(label, *spec, scn, &est, &var, first_failure));
    }
    Ok(McReport {
        scenario: scn.clone(),
        reps: scn.reps,
        estimators: metrics,
    })
}

fn aggregate(
    label: String,
    spec: EstimatorSpec,
    scn: &McScenario,
    est: &[f64],
    var: &[f64],
    first_failure: Option<String>,
) -> EstimatorMetrics {
    let m = est.len();
    let mf = m as f64;
    let mean = est.iter().sum::<f64>() / mf;
    let sqrt_var = (m > 1).then(|| {
        let ss: f64 = est.iter().map(|b| (b - mean) * (b - mean)).sum();
        (ss / (mf - 1.0)).sqrt()
    });
    let sqrt_evar = (var.iter().sum::<f64>() / mf).sqrt();
    let covered = est
        .iter()
        .zip(var)
        .filter(|(b, v)| (*b - scn.beta_a).abs() <= Z95 * v.sqrt())
        .count();
    EstimatorMetrics {
        estimator: label,
        method: spec.method,
        k_dagger: match spec.method {
            Method::Mr2 => Some(spec.k_dagger.unwrap_or(scn.k_dagger)),
            _ => None,
        },
        abs_bias: (mean - scn.beta_a).abs(),
        sqrt_var,
        sqrt_evar,
        cov95: covered as f64 / mf,
        mean_estimate: mean,
        successes: m,
        failures: scn.reps - m,
        first_failure,
    }
}

/// Estimators reported by default: MR², oracle and naive 2SLS.
pub fn default_estimators() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::new(Method::Mr2),
        EstimatorSpec::new(Method::Oracle),
        EstimatorSpec::new(Method::Naive),
    ]
}

const BLOCK_BETAS: [[f64; 5]; 3] = [
    [0.0, 0.0, 0.0, 0.2, 0.2],
    [0.0, 0.0, 0.1, 0.2, 0.3],
    [0.0, 0.0, 0.2, 0.2, 0.2],
];

pub const PRESET_NAMES: [&str; 13] = [
    "table1-block1",
    "table1-block2",
    "table1-block3",
    "table2-block1",
    "table2-block2",
    "table2-block3",
    "table2-block4",
    "table3-block1",
    "table3-block2",
    "table3-block3",
    "table4-block1",
    "table4-block2",
    "table4-block3",
];

/// Built-in designs at `n = 10⁴`, `reps = 1000`, `seed = 1`, `k† = 2`.
///
/// * `table1-*`: full interactions, `C = 0.6`, the three direct-effect blocks
///   (three valid; two valid with distinct effects; two valid with equal effects).
/// * `table2-*`: sparse interactions, `C = 0.6`, `γ ∈ {0.3, 0.6}` crossed
///   with the first and third blocks.
/// * `table3-*`, `table4-*`: log and probit links, `C = 1`.
pub fn preset(name: &str) -> Result<McScenario> {
    let (table, block) = name
        .strip_prefix("table")
        .and_then(|r| r.split_once("-block"))
        .and_then(|(t, b)| Some((t.parse::<u8>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| unknown_preset(name))?;
    let (link, c, gamma, beta) = match (table, block) {
        (1, b @ 1..=3) => (
            Link::IdentityFullInteractions,
            0.6,
            None,
            BLOCK_BETAS[b - 1],
        ),
        (2, b @ 1..=4) => (
            Link::IdentitySparse,
            0.6,
            Some(if b % 2 == 1 { 0.3 } else { 0.6 }),
            BLOCK_BETAS[if b <= 2 { 0 } else { 2 }],
        ),
        (3, b @ 1..=3) => (Link::LogMainEffects, 1.0, None, BLOCK_BETAS[b - 1]),
        (4, b @ 1..=3) => (Link::ProbitThreshold, 1.0, None, BLOCK_BETAS[b - 1]),
        _ => return Err(unknown_preset(name)),
    };
    Ok(McScenario {
        n: 10_000,
        k: 5,
        p: default_p(),
        beta_direct: beta.to_vec(),
        link,
        c,
        gamma,
        beta_a: 1.0,
        error_cov: default_error_cov(),
        reps: default_reps(),
        seed: 1,
        probit_threshold: default_threshold(),
        freeze_interactions: false,
        k_dagger: default_k_dagger(),
        variance: VarianceMode::Sandwich,
    })
}

fn unknown_preset(name: &str) -> Mr2Error {
    Mr2Error::Scenario(format!(
        "unknown preset '{name}'; available: {}",
        PRESET_NAMES.join(", ")
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(link: Link) -> McScenario {
        let mut s = preset("table1-block1").unwrap();
        s.link = link;
        s.n = 400;
        s.reps = 4;
        if link == Link::IdentitySparse {
            s.gamma = Some(0.5);
        }
        s
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(matches!(
            preset("table5-block1"),
            Err(Mr2Error::Scenario(_))
        ));
        assert!(matches!(
            preset("table1-block4"),
            Err(Mr2Error::Scenario(_))
        ));
        let s = preset("table2-block4").unwrap();
        assert_eq!(s.gamma, Some(0.6));
        assert_eq!(s.beta_direct, vec![0.0, 0.0, 0.2, 0.2, 0.2]);
    }

    #[test]
    fn generation_is_deterministic_per_rep() {
        let s = small(Link::IdentityFullInteractions);
        let a = generate(&s, 3).unwrap();
        let b = generate(&s, 3).unwrap();
        let c = generate(&s, 4).unwrap();
        assert_eq!(a.y(), b.y());
        assert_ne!(a.y(), c.y());
    }

    #[test]
    fn noiseless_identity_slope_is_one() {
        let mut s = small(Link::IdentityFullInteractions);
        s.beta_direct = vec![0.0; 5];
        s.error_cov = [[1e-30, 0.0], [0.0, 1e-30]];
        let d = generate(&s, 1).unwrap();
        let n = d.n() as f64;
        let ma = d.a().iter().sum::<f64>() / n;
        let my = d.y().iter().sum::<f64>() / n;
        let sxy: f64 = d
            .a()
            .iter()
            .zip(d.y())
            .map(|(a, y)| (a - ma) * (y - my))
            .sum();
        let sxx: f64 = d.a().iter().map(|a| (a - ma).powi(2)).sum();
        assert!((sxy / sxx - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_interaction_exposure_counts_products() {
        let mut s = small(Link::IdentityFullInteractions);
        s.error_cov = [[1e-30, 0.0], [0.0, 1e-30]];
        let d = generate(&s, 2).unwrap();
        for i in 0..d.n() {
            let row = d.g().row(i);
            // Brute force over all nonempty subsets.
            let mut want = 0.0;
            for mask in 1u32..32 {
                if (0..5).all(|j| mask & (1 << j) == 0 || row[j] == 1.0) {
                    want += 0.6;
                }
            }
            assert!((d.a()[i] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn probit_mean_decreases_with_threshold() {
        let mut s = small(Link::ProbitThreshold);
        s.n = 20_000;
        let mean_a = |t: f64, s: &mut McScenario| {
            s.probit_threshold = t;
            let d = generate(s, 1).unwrap();
            d.a().iter().sum::<f64>() / d.n() as f64
        };
        let m3 = mean_a(3.0, &mut s);
        let m4 = mean_a(4.0, &mut s);
        assert!(m3 > 0.0 && m3 < 1.0);
        assert!(m4 < m3);
    }

    #[test]
    fn sparse_selection_counts() {
        let s = small(Link::IdentitySparse);
        // ‖β‖₀ = 2: lower pool = 10 pairs, higher pool = 16 sets of order ≥ 3.
        let act = sparse_interactions(&s, 1);
        assert_eq!(act.len(), 5 + 8);
        assert!(act.iter().all(|x| x.len() >= 2));
        let mut frozen = s.clone();
        frozen.freeze_interactions = true;
        assert_eq!(
            sparse_interactions(&frozen, 2),
            sparse_interactions(&frozen, 9)
        );
    }

    #[test]
    fn single_rep_has_no_sd() {
        let mut s = small(Link::IdentityFullInteractions);
        s.reps = 1;
        let r = run(&s, &default_estimators()).unwrap();
        assert!(r.estimators.iter().all(|e| e.sqrt_var.is_none()));
        assert!(r.text_table().contains("NA"));
        assert!(r.to_json().unwrap().contains("\"sqrt_var\": null"));
    }

    #[test]
    fn validation_errors() {
        let mut s = small(Link::IdentityFullInteractions);
        s.p = 1.0;
        assert!(s.validate().is_err());
        let mut s = small(Link::IdentityFullInteractions);
        s.error_cov = [[1.0, 2.0], [2.0, 1.0]];
        assert!(s.validate().is_err());
        let mut s = small(Link::IdentitySparse);
        s.gamma = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = preset("table2-block1").unwrap();
        let text = s.to_toml_string().unwrap();
        assert_eq!(McScenario::from_toml_str(&text).unwrap(), s);
        let minimal =
            "n = 500\nK = 3\nbeta_direct = [0, 0, 0.2]\nlink = \"log_main_effects\"\nC = 1.0\n";
        let m = McScenario::from_toml_str(minimal).unwrap();
        assert_eq!(m.p, 0.8);
        assert_eq!(m.error_cov, [[1.0, 0.25], [0.25, 1.0]]);
    }
}
