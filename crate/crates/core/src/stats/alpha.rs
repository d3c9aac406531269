use std::collections::{BTreeMap, BTreeSet};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Nominal,
    /// Values must parse as numbers; only their order matters.
    Ordinal,
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(Scale::Nominal),
            "ordinal" => Ok(Scale::Ordinal),
            _ => Err(format!("unknown scale `{s}` (expected nominal or ordinal)")),
        }
    }
}

/// Items by annotators; `None` marks a missing annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMatrix {
    rows: Vec<Vec<Option<String>>>,
    scale: Scale,
}

impl AnnotationMatrix {
    pub fn new(rows: Vec<Vec<Option<String>>>, scale: Scale) -> Result<Self, StatsError> {
        if rows.len() < 2 {
            return Err(StatsError::InvalidMatrix(format!(
                "need at least 2 items, got {}",
                rows.len()
            )));
        }
        let width = rows[0].len();
        if width < 2 {
            return Err(StatsError::InvalidMatrix(format!(
                "need at least 2 annotators, got {width}"
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(StatsError::InvalidMatrix(format!(
                "row {i} has {} cells, expected {width}",
                rows[i].len()
            )));
        }
        if scale == Scale::Ordinal {
            if let Some(v) = rows.iter().flatten().flatten().find(|v| parse_ordinal(v).is_none()) {
                return Err(StatsError::InvalidMatrix(format!(
                    "ordinal value `{v}` is not a number"
                )));
            }
        }
        Ok(AnnotationMatrix { rows, scale })
    }

    /// Builds a matrix from `(item, annotator, value)` triples. Items and
    /// annotators are ordered by id; a later triple for the same cell wins.
    pub fn from_triples<I, A, V>(triples: impl IntoIterator<Item = (I, A, V)>, scale: Scale) -> Result<Self, StatsError>
    where
        I: Into<String>,
        A: Into<String>,
        V: Into<String>,
    {
        let mut cells: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut annotators = BTreeSet::new();
        for (i, a, v) in triples {
            let a = a.into();
            annotators.insert(a.clone());
            cells.entry(i.into()).or_default().insert(a, v.into());
        }
        let rows = cells
            .values()
            .map(|row| annotators.iter().map(|a| row.get(a).cloned()).collect())
            .collect();
        Self::new(rows, scale)
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }
}

fn parse_ordinal(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Krippendorff's alpha, `1 - D_o / D_e`, over the coincidence matrix of
/// pairable values. Items with fewer than two values are ignored.
///
/// Returns exactly 1.0 whenever there is no observed disagreement.
pub fn krippendorff_alpha(m: &AnnotationMatrix) -> Result<f64, StatsError> {
    // Map each value to a category index; ordinal categories are sorted.
    let values: Vec<Vec<&str>> = m
        .rows
        .iter()
        .map(|r| r.iter().flatten().map(String::as_str).collect::<Vec<_>>())
        .filter(|r| r.len() >= 2)
        .collect();
    if values.is_empty() {
        return Err(StatsError::InsufficientOverlap);
    }
    let index: Box<dyn Fn(&str) -> usize> = match m.scale {
        Scale::Nominal => {
            let cats: Vec<&str> = values
                .iter()
                .flatten()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            Box::new(move |v| cats.binary_search(&v).expect("category collected above"))
        }
        Scale::Ordinal => {
            let mut cats: Vec<f64> = values
                .iter()
                .flatten()
                .map(|v| parse_ordinal(v).expect("checked in new"))
                .collect();
            cats.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            cats.dedup();
            Box::new(move |v| {
                let x = parse_ordinal(v).expect("checked in new");
                cats.binary_search_by(|c| c.partial_cmp(&x).expect("finite"))
                    .expect("category collected above")
            })
        }
    };
    let k = values.iter().flatten().map(|v| index(v)).max().unwrap_or(0) + 1;

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in &values {
        let idx: Vec<usize> = unit.iter().map(|v| index(v)).collect();
        let weight = 1.0 / (idx.len() - 1) as f64;
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                if i != j {
                    coincidence[a][b] += weight;
                }
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();

    let delta = |a: usize, b: usize| -> f64 {
        match m.scale {
            Scale::Nominal => f64::from(u8::from(a != b)),
            Scale::Ordinal => {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let between: f64 = marginals[lo..=hi].iter().sum::<f64>() - (marginals[lo] + marginals[hi]) / 2.0;
                between * between
            }
        }
    };

    let mut observed = 0.0;
    let mut expected = 0.0;
    for a in 0..k {
        for b in 0..k {
            let d = delta(a, b);
            observed += coincidence[a][b] * d;
            expected += marginals[a] * marginals[b] * d;
        }
    }
    if observed == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}
