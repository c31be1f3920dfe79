//! Conventional reliability diagrams: bin edges, bin assignment and per-bin
//! confidence/accuracy.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassView;
use crate::error::{Error, Result};

pub const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Equal-width bins over [0, 1].
    Uniform,
    /// Equal-count bins at empirical quantiles of the scores.
    Quantile,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "quantile" => Ok(Strategy::Quantile),
            other => Err(Error::InvalidParameter(format!(
                "unknown binning strategy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinSpec {
    pub strategy: Strategy,
    pub count: usize,
}

impl BinSpec {
    pub fn new(strategy: Strategy, count: usize) -> Result<Self> {
        if !(1..=MAX_BINS).contains(&count) {
            return Err(Error::InvalidParameter(format!(
                "bin count {count} outside 1..={MAX_BINS}"
            )));
        }
        Ok(Self { strategy, count })
    }

    pub fn uniform(count: usize) -> Result<Self> {
        Self::new(Strategy::Uniform, count)
    }

    pub fn quantile(count: usize) -> Result<Self> {
        Self::new(Strategy::Quantile, count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub conf: f64,
    pub acc: f64,
}

impl Bin {
    pub fn gap(&self) -> f64 {
        (self.acc - self.conf).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDiagram {
    pub edges: Vec<f64>,
    /// Occupied bins only, in edge order.
    pub bins: Vec<Bin>,
    pub n_total: usize,
}

/// Empirical quantile of sorted data with linear interpolation between
/// order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Edges for `spec` over `scores`. Quantile edges are forced to start at 0
/// and end at 1, and duplicate edges are merged, so degenerate data yields
/// fewer than `spec.count` bins.
pub fn compute_edges(scores: &[f64], spec: BinSpec) -> Vec<f64> {
    let w = spec.count;
    match spec.strategy {
        Strategy::Uniform => (0..=w).map(|k| k as f64 / w as f64).collect(),
        Strategy::Quantile => {
            let mut sorted: Vec<f64> = scores.iter().copied().filter(|s| !s.is_nan()).collect();
            if sorted.is_empty() {
                return vec![0.0, 1.0];
            }
            sorted.sort_by(f64::total_cmp);
            let mut edges = Vec::with_capacity(w + 1);
            edges.push(0.0);
            for k in 1..w {
                let e = quantile_sorted(&sorted, k as f64 / w as f64);
                if e > *edges.last().unwrap() && e < 1.0 {
                    edges.push(e);
                }
            }
            edges.push(1.0);
            edges
        }
    }
}

/// Zero-based bin index for `score`. Bin `w` covers `(edges[w], edges[w+1]]`,
/// except that a score of exactly the first edge goes to bin 0.
pub fn assign(score: f64, edges: &[f64]) -> Result<usize> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(assign_unchecked(score, edges))
}

#[inline]
pub(crate) fn assign_unchecked(score: f64, edges: &[f64]) -> usize {
    let below = edges.partition_point(|&e| e < score);
    below.clamp(1, edges.len() - 1) - 1
}

/// Per-bin counts of `scores` over `edges`, including empty bins.
pub fn histogram(scores: &[f64], edges: &[f64]) -> Result<Vec<usize>> {
    let mut counts = vec![0; edges.len().saturating_sub(1)];
    for &s in scores {
        counts[assign(s, edges)?] += 1;
    }
    Ok(counts)
}

/// Reliability diagram over explicit edges.
pub fn diagram_with_edges(view: &ClassView, edges: Vec<f64>) -> Result<BinnedDiagram> {
    if view.is_empty() {
        return Err(Error::EmptySelection);
    }
    let nb = edges.len() - 1;
    let mut count = vec![0usize; nb];
    let mut score_sum = vec![0.0; nb];
    let mut hit_sum = vec![0.0; nb];
    for (s, o) in view.scores.iter().zip(view.outcome_values()) {
        let w = assign(*s, &edges)?;
        count[w] += 1;
        score_sum[w] += s;
        hit_sum[w] += o;
    }
    let bins = (0..nb)
        .filter(|&w| count[w] > 0)
        .map(|w| {
            let c = count[w] as f64;
            Bin {
                lo: edges[w],
                hi: edges[w + 1],
                count: count[w],
                conf: score_sum[w] / c,
                acc: hit_sum[w] / c,
            }
        })
        .collect();
    Ok(BinnedDiagram {
        edges,
        bins,
        n_total: view.len(),
    })
}

pub fn bin_stats(view: &ClassView, spec: BinSpec) -> Result<BinnedDiagram> {
    let edges = compute_edges(&view.scores, spec);
    diagram_with_edges(view, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(pairs: &[(f64, bool)]) -> ClassView {
        let (s, o) = pairs.iter().copied().unzip();
        ClassView::from_scores(s, o).unwrap()
    }

    #[test]
    fn uniform_edges() {
        assert_eq!(
            compute_edges(&[0.3], BinSpec::uniform(4).unwrap()),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn quantile_edges_median() {
        let e = compute_edges(&[0.1, 0.2, 0.9, 0.95], BinSpec::quantile(2).unwrap());
        assert_eq!(e.len(), 3);
        assert!((e[1] - 0.55).abs() < 1e-15);
        assert_eq!((e[0], e[2]), (0.0, 1.0));
    }

    #[test]
    fn quantile_edges_merge_point_mass() {
        let e = compute_edges(&[0.5; 8], BinSpec::quantile(4).unwrap());
        assert_eq!(e, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn assignment_is_right_closed_with_zero_in_first_bin() {
        let e = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert_eq!(assign(0.25, &e).unwrap(), 0);
        assert_eq!(assign(0.0, &e).unwrap(), 0);
        assert_eq!(assign(0.26, &e).unwrap(), 1);
        assert_eq!(assign(1.0, &e).unwrap(), 3);
        assert!(matches!(assign(1.5, &e), Err(Error::ScoreOutOfRange(_))));
        assert!(assign(f64::NAN, &e).is_err());
    }

    #[test]
    fn worked_example() {
        let d = bin_stats(
            &view(&[(0.3, true), (0.7, false), (0.9, true)]),
            BinSpec::uniform(2).unwrap(),
        )
        .unwrap();
        assert_eq!(d.bins.len(), 2);
        assert_eq!((d.bins[0].lo, d.bins[0].hi, d.bins[0].count), (0.0, 0.5, 1));
        assert_eq!((d.bins[0].conf, d.bins[0].acc), (0.3, 1.0));
        assert_eq!((d.bins[1].count, d.bins[1].acc), (2, 0.5));
        assert!((d.bins[1].conf - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_bins_are_omitted_but_edges_kept() {
        let d = bin_stats(&view(&[(0.1, true), (0.95, false)]), BinSpec::uniform(10).unwrap()).unwrap();
        assert_eq!(d.edges.len(), 11);
        assert_eq!(d.bins.len(), 2);
        assert_eq!(d.bins.iter().map(|b| b.count).sum::<usize>(), 2);
    }

    #[test]
    fn all_hits_give_unit_accuracy() {
        let pairs: Vec<_> = (0..50).map(|i| (i as f64 / 49.0, true)).collect();
        for spec in [BinSpec::uniform(7).unwrap(), BinSpec::quantile(5).unwrap()] {
            let d = bin_stats(&view(&pairs), spec).unwrap();
            assert!(d.bins.iter().all(|b| b.acc == 1.0));
        }
    }

    #[test]
    fn quantile_halves_split_counts() {
        // Distinct scores in scrambled order; brute-force the two counts.
        let scores: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0 + 0.0003).collect();
        let pairs: Vec<_> = scores.iter().map(|&s| (s, false)).collect();
        let d = bin_stats(&view(&pairs), BinSpec::quantile(2).unwrap()).unwrap();
        let mid = d.edges[1];
        let below = scores.iter().filter(|&&s| s <= mid).count();
        assert_eq!(d.bins[0].count, below);
        assert!((499..=501).contains(&d.bins[0].count));
        assert!((499..=501).contains(&d.bins[1].count));
    }

    #[test]
    fn bin_spec_bounds() {
        assert!(BinSpec::uniform(0).is_err());
        assert!(BinSpec::uniform(10_001).is_err());
        assert!(BinSpec::quantile(10_000).is_ok());
    }

    #[test]
    fn diagram_json_shape() {
        let d = bin_stats(&view(&[(0.3, true)]), BinSpec::uniform(1).unwrap()).unwrap();
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"edges":[0.0,1.0],"bins":[{"lo":0.0,"hi":1.0,"count":1,"conf":0.3,"acc":1.0}],"n_total":1}"#
        );
    }
}
