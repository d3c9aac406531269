use std::collections::BTreeMap;

use serde::Serialize;

use super::{kendall_tau, spearman_rho, PairedSamples, StatsError};
use crate::table::Table;

/// Correlation of one metric with human judgments. `rho` and `tau` are
/// absent when the pair could not be computed; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub n: usize,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub degenerate: bool,
    pub error: Option<String>,
}

fn row(metric: &str, scores: &BTreeMap<String, f64>, human: &BTreeMap<String, f64>) -> CorrelationRow {
    let (xs, ys): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .filter_map(|(id, m)| human.get(id).map(|h| (*m, *h)))
        .unzip();
    let n = xs.len();
    let computed = PairedSamples::new(xs, ys).and_then(|s| Ok((spearman_rho(&s)?, kendall_tau(&s)?)));
    match computed {
        Ok((rho, tau)) => CorrelationRow {
            metric: metric.to_string(),
            n,
            rho: Some(rho),
            tau: Some(tau),
            degenerate: false,
            error: None,
        },
        Err(e) => CorrelationRow {
            metric: metric.to_string(),
            n,
            rho: None,
            tau: None,
            degenerate: matches!(e, StatsError::DegenerateSample(_)),
            error: Some(e.to_string()),
        },
    }
}

/// Spearman and Kendall correlation of each metric with the human scores,
/// over the images both cover. A metric that cannot be correlated gets a
/// flagged row instead of aborting the table. Rows keep input order.
pub fn correlate_metrics(
    metrics: &[(String, BTreeMap<String, f64>)],
    human: &BTreeMap<String, f64>,
) -> Vec<CorrelationRow> {
    metrics.iter().map(|(name, scores)| row(name, scores, human)).collect()
}

pub fn correlation_table(rows: &[CorrelationRow]) -> Table {
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
    let mut t = Table::new(["metric", "n", "spearman_rho", "kendall_tau", "note"]);
    for r in rows {
        t.push([
            r.metric.clone(),
            r.n.to_string(),
            fmt(r.rho),
            fmt(r.tau),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn identical_metric_is_perfect() {
        let human = scores(&[("a", 1.0), ("b", 3.5), ("c", 2.0)]);
        let rows = correlate_metrics(&[("tifa".into(), human.clone())], &human);
        assert_eq!((rows[0].rho, rows[0].tau), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn constant_metric_is_flagged_and_others_computed() {
        let human = scores(&[("a", 1.0), ("b", 3.5), ("c", 2.0)]);
        let rows = correlate_metrics(
            &[
                ("flat".into(), scores(&[("a", 0.5), ("b", 0.5), ("c", 0.5)])),
                ("ok".into(), scores(&[("a", 0.1), ("b", 0.9), ("c", 0.2), ("zz", 7.0)])),
            ],
            &human,
        );
        assert!(rows[0].degenerate && rows[0].rho.is_none());
        assert_eq!(rows[1].n, 3);
        assert_eq!(rows[1].rho, Some(1.0));
    }

    #[test]
    fn too_little_overlap_is_reported_not_degenerate() {
        let human = scores(&[("a", 1.0)]);
        let rows = correlate_metrics(&[("m".into(), scores(&[("a", 1.0), ("b", 2.0)]))], &human);
        assert!(!rows[0].degenerate);
        assert!(rows[0].error.is_some());
    }
}
