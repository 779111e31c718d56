//! Synthetic 53-indicator panel with a known sparse predictive support.
//!
//! Exogenous series are stationary AR(1) processes whose innovations share a
//! cluster-level common factor, giving within-cluster correlation close to
//! `cluster_correlation`. The target follows
//!
//! ```text
//! target_t = c + Σ_{j∈S} w_j · x_{j,t−lag} + ar · target_{t−1} + ε_t
//! ```
//!
//! with `c = level · (1 − ar)` so the target hovers around `level`.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Rng;
use crate::pipeline::TimeSeriesFrame;
use crate::regsel::SelectionReport;

pub const TARGET_NAME: &str = "carbon_close";
pub const CLUSTER_PREFIXES: [&str; 3] = ["macro", "fin_energy", "blockchain"];
const BURN_IN: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_days: usize,
    /// Series per cluster: macroeconomic, financial/energy, blockchain.
    pub cluster_sizes: [usize; 3],
    pub true_support: Vec<usize>,
    pub weights: Vec<f64>,
    pub noise_sd: f64,
    pub lag: usize,
    pub seed: u64,
    /// Coefficient on the target's own previous value.
    pub target_ar: f64,
    /// AR(1) coefficient of every exogenous series.
    pub persistence: f64,
    pub cluster_correlation: f64,
    /// Long-run mean of the target.
    pub level: f64,
    pub start_date: NaiveDate,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_days: 1060,
            cluster_sizes: [13, 25, 15],
            // two macro, two financial/energy, one blockchain series
            true_support: vec![2, 9, 17, 30, 44],
            weights: vec![1.0, 0.8, 0.7, 0.9, 0.6],
            noise_sd: 0.5,
            lag: 1,
            seed: 7,
            target_ar: 0.3,
            persistence: 0.95,
            cluster_correlation: 0.5,
            level: 25.0,
            start_date: NaiveDate::from_ymd_opt(2017, 4, 28).expect("valid date"),
        }
    }
}

impl SyntheticSpec {
    pub fn total_features(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let p = |m: String| Err(Error::Parameter(m));
        if self.total_features() != 53 {
            return p(format!("cluster sizes must sum to 53, got {:?}", self.cluster_sizes));
        }
        if self.lag == 0 {
            return p("lag must be >= 1".into());
        }
        if self.n_days < self.lag + 10 {
            return p(format!(
                "n_days = {} is too short for lag {} (need >= {})",
                self.n_days,
                self.lag,
                self.lag + 10
            ));
        }
        if self.true_support.len() != self.weights.len() {
            return p(format!(
                "{} support indices but {} weights",
                self.true_support.len(),
                self.weights.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for &j in &self.true_support {
            if j >= self.total_features() || !seen.insert(j) {
                return p(format!("support index {j} is out of range or repeated"));
            }
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return p(format!("noise_sd must be >= 0, got {}", self.noise_sd));
        }
        if !(self.target_ar.abs() < 1.0) || !(self.persistence.abs() < 1.0) {
            return p("target_ar and persistence must lie in (-1, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.cluster_correlation) {
            return p("cluster_correlation must lie in [0, 1]".into());
        }
        if !self.level.is_finite() {
            return p("level must be finite".into());
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_features());
        for (prefix, &size) in CLUSTER_PREFIXES.iter().zip(&self.cluster_sizes) {
            names.extend((1..=size).map(|i| format!("{prefix}_{i:02}")));
        }
        names
    }

    fn cluster_of(&self, j: usize) -> usize {
        let mut acc = 0;
        for (c, size) in self.cluster_sizes.iter().enumerate() {
            acc += size;
            if j < acc {
                return c;
            }
        }
        self.cluster_sizes.len() - 1
    }
}

/// What generated a synthetic panel; enough to score any selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SyntheticSpec,
    pub target: String,
    pub feature_names: Vec<String>,
    pub support: Vec<usize>,
    pub support_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Support recovery of a selection against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportScore {
    pub selected: usize,
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
    pub contains_support: bool,
}

impl GroundTruth {
    pub fn score(&self, report: &SelectionReport) -> SupportScore {
        let chosen = report.selected_names();
        let tp = self.support_names.iter().filter(|n| chosen.contains(n)).count();
        SupportScore {
            selected: chosen.len(),
            true_positives: tp,
            precision: if chosen.is_empty() {
                0.0
            } else {
                tp as f64 / chosen.len() as f64
            },
            recall: if self.support.is_empty() {
                1.0
            } else {
                tp as f64 / self.support.len() as f64
            },
            contains_support: tp == self.support.len(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Consecutive weekdays starting at `start` (rolled forward off a weekend).
pub fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn generate_synthetic_panel(spec: &SyntheticSpec) -> Result<(TimeSeriesFrame, GroundTruth)> {
    spec.validate()?;
    let m = spec.total_features();
    let total = spec.n_days + BURN_IN;
    let mut rng = Rng::new(spec.seed);

    let phi = spec.persistence;
    let shock = (1.0 - phi * phi).sqrt();
    let (rho_c, rho_i) = (spec.cluster_correlation.sqrt(), (1.0 - spec.cluster_correlation).sqrt());
    let clusters: Vec<usize> = (0..m).map(|j| spec.cluster_of(j)).collect();

    let mut x = vec![vec![0.0; m]; total];
    for v in x[0].iter_mut() {
        *v = rng.standard_normal();
    }
    for t in 1..total {
        let factors = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
        for j in 0..m {
            let e = rho_c * factors[clusters[j]] + rho_i * rng.standard_normal();
            x[t][j] = phi * x[t - 1][j] + shock * e;
        }
    }

    let intercept = spec.level * (1.0 - spec.target_ar);
    let mut y = vec![spec.level; total];
    for t in spec.lag..total {
        let signal: f64 = spec
            .true_support
            .iter()
            .zip(&spec.weights)
            .map(|(&j, w)| w * x[t - spec.lag][j])
            .sum();
        let noise = if spec.noise_sd > 0.0 {
            spec.noise_sd * rng.standard_normal()
        } else {
            0.0
        };
        y[t] = intercept + signal + spec.target_ar * y[t - 1] + noise;
    }

    let names = spec.feature_names();
    let mut col_names = vec![TARGET_NAME.to_string()];
    col_names.extend(names.iter().cloned());
    let mut columns = vec![y[BURN_IN..].to_vec()];
    for j in 0..m {
        columns.push(x[BURN_IN..].iter().map(|row| row[j]).collect());
    }
    let dates = weekdays_from(spec.start_date, spec.n_days);
    let frame = TimeSeriesFrame::new(dates, col_names, columns, TARGET_NAME)?;
    let truth = GroundTruth {
        spec: spec.clone(),
        target: TARGET_NAME.to_string(),
        support_names: spec.true_support.iter().map(|&j| names[j].clone()).collect(),
        feature_names: names,
        support: spec.true_support.clone(),
        weights: spec.weights.clone(),
        intercept,
    };
    Ok((frame, truth))
}
