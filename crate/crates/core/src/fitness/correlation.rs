use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::metrics::{Metric, MetricVector};
use crate::{Error, Result};

/// Average (fractional) ranks, 1-based; ties share the mean of their positions.
pub fn rank(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Tie-aware Spearman rho (Pearson correlation of average ranks) with a
/// two-sided p-value from Student's t on `n - 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let (rx, ry) = (rank(x), rank(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("rank correlation of a constant sequence".into()));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if 1.0 - rho.abs() < 1e-15 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Correlation { rho, p_value, n })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricCorrelation {
    pub metric: Metric,
    pub vs_score: Option<Correlation>,
    pub vs_rating: Option<Correlation>,
}

impl MetricCorrelation {
    /// Sort key: |rho| against direct scores, or against Glicko ratings
    /// when no scores were supplied.
    pub fn strength(&self) -> f64 {
        self.vs_score.or(self.vs_rating).map_or(0.0, |c| c.rho.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// Strongest first.
    pub metrics: Vec<MetricCorrelation>,
    /// Direct score vs Glicko rating, when both were supplied.
    pub agreement: Option<Correlation>,
    /// Ids that appear in some tables but not all.
    pub missing_ids: Vec<String>,
    pub n: usize,
}

impl CorrelationReport {
    pub fn top(&self) -> Option<Metric> {
        self.metrics.first().map(|m| m.metric)
    }

    pub fn to_csv(&self) -> String {
        let cell = |c: Option<Correlation>| c.map_or(",".to_string(), |c| format!("{},{}", c.rho, c.p_value));
        let mut s = String::from("metric,rho_score,p_score,rho_rating,p_rating\n");
        for m in &self.metrics {
            let _ = writeln!(s, "{},{},{}", m.metric, cell(m.vs_score), cell(m.vs_rating));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let fmt =
            |c: Option<Correlation>| c.map_or("      -                ".to_string(), |c| format!("{:+.4} (p={:.2e})", c.rho, c.p_value));
        let mut s = format!("images compared: {}\n", self.n);
        if let Some(a) = self.agreement {
            let _ = writeln!(s, "direct score vs pairwise rating: rho={:+.4} p={:.2e}", a.rho, a.p_value);
        }
        let _ = writeln!(s, "{:<12} {:<24} {:<24}", "metric", "vs direct score", "vs pairwise rating");
        for m in &self.metrics {
            let _ = writeln!(s, "{:<12} {:<24} {:<24}", m.metric.name(), fmt(m.vs_score), fmt(m.vs_rating));
        }
        if !self.missing_ids.is_empty() {
            let _ = writeln!(s, "ids missing from at least one table: {}", self.missing_ids.len());
        }
        s
    }
}

fn correlate_or_null(x: &[f64], y: &[f64]) -> Result<Correlation> {
    match spearman(x, y) {
        Err(Error::Degenerate(_)) => Ok(Correlation { rho: 0.0, p_value: 1.0, n: x.len() }),
        other => other,
    }
}

/// Correlates every metric column with each supplied ranking over the ids
/// present in all supplied tables.
pub fn proxy_selection(
    metrics: &[(String, MetricVector)],
    scores: Option<&BTreeMap<String, f64>>,
    ratings: Option<&BTreeMap<String, f64>>,
) -> Result<CorrelationReport> {
    if scores.is_none() && ratings.is_none() {
        return Err(Error::param("rankings", "need direct scores, pairwise ratings, or both"));
    }
    let metric_ids: BTreeSet<&str> = metrics.iter().map(|(id, _)| id.as_str()).collect();
    let mut all: BTreeSet<&str> = metric_ids.clone();
    let mut shared = metric_ids.clone();
    for table in [scores, ratings].into_iter().flatten() {
        let ids: BTreeSet<&str> = table.keys().map(String::as_str).collect();
        all.extend(&ids);
        shared = shared.intersection(&ids).copied().collect();
    }
    if shared.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let missing_ids = all.difference(&shared).map(|s| s.to_string()).collect();
    let rows: Vec<&(String, MetricVector)> = metrics.iter().filter(|(id, _)| shared.contains(id.as_str())).collect();
    let column = |t: &BTreeMap<String, f64>| rows.iter().map(|(id, _)| t[id]).collect::<Vec<f64>>();
    let score_col = scores.map(column);
    let rating_col = ratings.map(column);

    let mut out = Vec::with_capacity(Metric::ALL.len());
    for metric in Metric::ALL {
        let x: Vec<f64> = rows.iter().map(|(_, m)| metric.of(m)).collect();
        out.push(MetricCorrelation {
            metric,
            vs_score: score_col.as_deref().map(|y| correlate_or_null(&x, y)).transpose()?,
            vs_rating: rating_col.as_deref().map(|y| correlate_or_null(&x, y)).transpose()?,
        });
    }
    // Stable sort keeps column order among equal strengths.
    out.sort_by(|a, b| b.strength().total_cmp(&a.strength()));
    let agreement = match (&score_col, &rating_col) {
        (Some(s), Some(r)) => Some(correlate_or_null(s, r)?),
        _ => None,
    };
    Ok(CorrelationReport { metrics: out, agreement, missing_ids, n: rows.len() })
}
