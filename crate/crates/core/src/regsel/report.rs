use std::io::Write;

use serde::{Deserialize, Serialize};

use super::linear::RegressionFit;
use super::penalty::PenaltySpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRow {
    pub name: String,
    pub coef: f64,
    /// |t|-statistic; null for sparse penalties.
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub selected: bool,
}

/// Per-feature outcome of a selection run. For ridge the t/p columns come
/// from an approximate sandwich-variance t-test, flagged by `approximate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionReport {
    pub dataset: String,
    pub penalty: PenaltySpec,
    pub alpha: f64,
    pub approximate: bool,
    pub rows: Vec<SelectionRow>,
}

impl SelectionReport {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.selected)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.selected)
            .map(|r| r.name.clone())
            .collect()
    }

    pub fn selected_count(&self) -> usize {
        self.rows.iter().filter(|r| r.selected).count()
    }

    /// A report that keeps every named feature.
    pub fn all_features(names: &[String], dataset: &str) -> Self {
        SelectionReport {
            dataset: dataset.to_string(),
            penalty: PenaltySpec::none(),
            alpha: 1.0,
            approximate: false,
            rows: names
                .iter()
                .map(|n| SelectionRow {
                    name: n.clone(),
                    coef: 0.0,
                    t: None,
                    p: None,
                    selected: true,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: SelectionReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        let mut seen = std::collections::HashSet::new();
        for r in &self.rows {
            if !seen.insert(r.name.as_str()) {
                return Err(Error::Config(format!(
                    "selection report lists feature '{}' twice",
                    r.name
                )));
            }
        }
        Ok(())
    }

    /// CSV with columns `name,coef,t,p,selected`; absent statistics are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["name", "coef", "t", "p", "selected"])
            .map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.coef.to_string(),
                opt(r.t),
                opt(r.p),
                r.selected.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Builds the feature report for a completed fit.
///
/// Sparse fits select their nonzero support. Ridge and unpenalized fits
/// select features whose approximate two-sided t-test p-value is below
/// `alpha`.
pub fn select_features(fit: &RegressionFit, names: &[String], alpha: f64) -> Result<SelectionReport> {
    if names.len() != fit.beta.len() {
        return Err(Error::Shape(format!(
            "{} feature names for {} coefficients",
            names.len(),
            fit.beta.len()
        )));
    }
    let sparse = fit.penalty.kind.is_sparse();
    let t = if sparse { None } else { fit.t_statistics() };
    let p = if sparse { None } else { fit.p_values() };
    let rows = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let tj = t.as_ref().map(|t| t[j].abs());
            let pj = p.as_ref().map(|p| p[j]);
            let selected = if sparse {
                fit.beta[j] != 0.0
            } else {
                pj.is_some_and(|p| p < alpha)
            };
            SelectionRow {
                name: name.clone(),
                coef: fit.beta[j],
                t: tj,
                p: pj,
                selected,
            }
        })
        .collect();
    Ok(SelectionReport {
        dataset: String::new(),
        penalty: fit.penalty,
        alpha,
        approximate: !sparse,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse_fit(beta: Vec<f64>) -> RegressionFit {
        RegressionFit {
            support: beta
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, _)| j)
                .collect(),
            beta,
            beta0: 0.0,
            penalty: PenaltySpec::scad(0.1, 3.7),
            sigma2_hat: 1.0,
            gram_eigenvalues: vec![],
            converged: true,
            iterations: 3,
            std_errors: None,
            dof: 10,
            objective_trace: vec![],
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn sparse_selection_is_nonzero_support() {
        let fit = sparse_fit(vec![0.0, 1.2, 0.0, -0.4]);
        let rep = select_features(&fit, &names(4), 0.05).unwrap();
        assert_eq!(rep.selected_indices(), vec![1, 3]);
        assert!(rep.rows.iter().all(|r| r.t.is_none() && r.p.is_none()));
        assert!(!rep.approximate);
    }

    #[test]
    fn name_count_must_match() {
        let fit = sparse_fit(vec![0.0, 1.0]);
        assert!(select_features(&fit, &names(3), 0.05).is_err());
    }

    #[test]
    fn csv_layout() {
        let fit = sparse_fit(vec![0.0, 1.5]);
        let rep = select_features(&fit, &names(2), 0.05).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "name,coef,t,p,selected\nx0,0,,,false\nx1,1.5,,,true\n");
    }

    #[test]
    fn json_round_trip() {
        let mut rep = select_features(&sparse_fit(vec![0.25, 0.0, -3.0]), &names(3), 0.05).unwrap();
        rep.dataset = "dataset 2".into();
        let back = SelectionReport::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut rep = SelectionReport::all_features(&names(2), "d");
        rep.rows[1].name = "x0".into();
        let text = serde_json::to_string(&rep).unwrap();
        assert!(SelectionReport::from_json(&text).is_err());
    }
}
