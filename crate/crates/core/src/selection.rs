//! Subgroups and score regions: feature-constraint filters, score-range
//! filters, feature histograms and per-selection feature summaries.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassView, Column, ColumnKind, EvaluationSession, FeatureTable, ViewMode};
use crate::error::{Error, Result};

/// Bins in a numeric feature histogram.
pub const FEATURE_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintBody {
    /// Closed interval `[lo, hi]` on a numeric column.
    Range { lo: f64, hi: f64 },
    /// Accepted categories of a categorical column.
    Categories { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConstraint {
    pub column: String,
    #[serde(flatten)]
    pub body: ConstraintBody,
}

impl FeatureConstraint {
    pub fn range(column: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            column: column.into(),
            body: ConstraintBody::Range { lo, hi },
        }
    }

    pub fn categories<S: Into<String>>(column: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            column: column.into(),
            body: ConstraintBody::Categories {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    /// Row mask of this constraint over `table`.
    fn mask(&self, table: &FeatureTable) -> Result<Vec<bool>> {
        let column = table.column(&self.column)?;
        match (&self.body, column) {
            (ConstraintBody::Range { lo, hi }, Column::Numeric(values)) => {
                if !(lo <= hi) {
                    return Err(Error::InvalidParameter(format!(
                        "constraint on {:?}: lo {lo} > hi {hi}",
                        self.column
                    )));
                }
                Ok(values.iter().map(|v| lo <= v && v <= hi).collect())
            }
            (ConstraintBody::Categories { categories }, Column::Categorical { codes, names }) => {
                if categories.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "constraint on {:?} accepts no categories",
                        self.column
                    )));
                }
                let mut accepted = vec![false; names.len()];
                for c in categories {
                    let i = names.iter().position(|n| n == c).ok_or_else(|| Error::UnknownCategory {
                        column: self.column.clone(),
                        category: c.clone(),
                    })?;
                    accepted[i] = true;
                }
                Ok(codes.iter().map(|&c| accepted[c as usize]).collect())
            }
            (body, col) => Err(Error::KindMismatch {
                column: self.column.clone(),
                expected: match body {
                    ConstraintBody::Range { .. } => ColumnKind::Numeric.as_str(),
                    ConstraintBody::Categories { .. } => ColumnKind::Categorical.as_str(),
                },
                actual: col.kind().as_str(),
            }),
        }
    }
}

/// A conjunction of feature constraints, at most one per column.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubgroupPredicate {
    pub label: String,
    pub constraints: Vec<FeatureConstraint>,
}

impl SubgroupPredicate {
    pub fn new(label: impl Into<String>, constraints: Vec<FeatureConstraint>) -> Self {
        Self {
            label: label.into(),
            constraints,
        }
    }

    /// Checks the predicate against `table` without filtering.
    pub fn validate(&self, table: &FeatureTable) -> Result<()> {
        filter_by_predicate(table, self).map(|_| ())
    }
}

pub fn filter_by_predicate(table: &FeatureTable, predicate: &SubgroupPredicate) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    let mut keep = vec![true; table.n_rows()];
    for constraint in &predicate.constraints {
        if !seen.insert(constraint.column.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "more than one constraint on column {:?}",
                constraint.column
            )));
        }
        for (k, m) in keep.iter_mut().zip(constraint.mask(table)?) {
            *k &= m;
        }
    }
    Ok(keep.iter().enumerate().filter(|(_, &k)| k).map(|(j, _)| j).collect())
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "score range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
        )));
    }
    Ok(())
}

/// Indices whose score lies in the closed interval `[lo, hi]`.
pub fn filter_by_score_range(view: &ClassView, lo: f64, hi: f64) -> Result<Vec<usize>> {
    check_range(lo, hi)?;
    Ok(view
        .scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| lo <= s && s <= hi)
        .map(|(j, _)| j)
        .collect())
}

/// A brushed score interval on one model's view, optionally within a subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSelection {
    pub model: String,
    pub mode: ViewMode,
    pub lo: f64,
    pub hi: f64,
    pub subgroup: Option<SubgroupPredicate>,
}

impl RegionSelection {
    /// Row indices of the session inside the region, ascending.
    pub fn resolve(&self, session: &EvaluationSession) -> Result<Vec<usize>> {
        let view = session.view(&self.model, self.mode)?;
        let in_range = filter_by_score_range(&view, self.lo, self.hi)?;
        match &self.subgroup {
            None => Ok(in_range),
            Some(p) => {
                let members: HashSet<usize> = filter_by_predicate(session.features(), p)?.into_iter().collect();
                Ok(in_range.into_iter().filter(|j| members.contains(j)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureHistogram {
    Numeric {
        column: String,
        edges: Vec<f64>,
        counts: Vec<usize>,
    },
    Categorical {
        column: String,
        categories: Vec<String>,
        counts: Vec<usize>,
    },
}

impl FeatureHistogram {
    pub fn counts(&self) -> &[usize] {
        match self {
            FeatureHistogram::Numeric { counts, .. } | FeatureHistogram::Categorical { counts, .. } => counts,
        }
    }
}

/// Histogram of `column` over the rows in `indices`. Numeric columns use
/// [`FEATURE_HISTOGRAM_BINS`] equal-width bins over the full column's range,
/// so histograms of different selections share axes; a constant column gets
/// a single bin of width 1.
pub fn feature_histogram(table: &FeatureTable, column: &str, indices: &[usize]) -> Result<FeatureHistogram> {
    match table.column(column)? {
        Column::Numeric(values) => {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (bins, width) = if max > min {
                (FEATURE_HISTOGRAM_BINS, (max - min) / FEATURE_HISTOGRAM_BINS as f64)
            } else {
                (1, 1.0)
            };
            let mut edges: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
            edges.push(if bins == 1 { min + 1.0 } else { max });
            let mut counts = vec![0; bins];
            for &j in indices {
                let b = (((values[j] - min) / width).floor() as usize).min(bins - 1);
                counts[b] += 1;
            }
            Ok(FeatureHistogram::Numeric {
                column: column.to_string(),
                edges,
                counts,
            })
        }
        Column::Categorical { codes, names } => {
            let mut counts = vec![0; names.len()];
            for &j in indices {
                counts[codes[j] as usize] += 1;
            }
            Ok(FeatureHistogram::Categorical {
                column: column.to_string(),
                categories: names.clone(),
                counts,
            })
        }
    }
}

/// One histogram per column, in column order.
pub fn feature_histograms(table: &FeatureTable, indices: &[usize]) -> Vec<FeatureHistogram> {
    table
        .column_names()
        .iter()
        .map(|name| feature_histogram(table, name, indices).expect("column exists"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSummary {
    Numeric {
        column: String,
        mean: f64,
    },
    Categorical {
        column: String,
        categories: Vec<String>,
        frequencies: Vec<f64>,
    },
}

/// Means of numeric columns and category frequencies of categorical ones
/// over the selected rows. An empty selection is an error rather than NaN.
pub fn feature_means(table: &FeatureTable, indices: &[usize]) -> Result<Vec<FeatureSummary>> {
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = indices.len() as f64;
    Ok(table
        .columns()
        .map(|(name, col)| match col {
            Column::Numeric(values) => FeatureSummary::Numeric {
                column: name.to_string(),
                mean: indices.iter().map(|&j| values[j]).sum::<f64>() / n,
            },
            Column::Categorical { codes, names } => {
                let mut counts = vec![0usize; names.len()];
                for &j in indices {
                    counts[codes[j] as usize] += 1;
                }
                FeatureSummary::Categorical {
                    column: name.to_string(),
                    categories: names.clone(),
                    frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
                }
            }
        })
        .collect())
}
