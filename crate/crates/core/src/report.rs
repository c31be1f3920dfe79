//! Assembled per-curve results: the payloads behind the diagram and LRD
//! queries and the static report written by the command-line tool.

use serde::Serialize;

use crate::binning::{bin_stats, histogram, BinSpec, BinnedDiagram};
use crate::dataset::{Cell, EvaluationSession, ViewMode};
use crate::error::{Error, Result};
use crate::lrd::{fit_lrd, fit_lrd_with_band, LrdExport, LrdParams};
use crate::metrics::{confusion_matrix, report_from_parts, ConfusionMatrix, MetricsReport};
use crate::selection::{
    feature_histograms, feature_means, filter_by_predicate, FeatureHistogram, FeatureSummary, RegionSelection,
    SubgroupPredicate,
};

/// Default page size of instance listings.
pub const DEFAULT_PAGE_LIMIT: usize = 100;

/// Cells in the score density strip drawn under a curve.
pub const DENSITY_CELLS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStrip {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn density_strip(scores: &[f64]) -> Result<DensityStrip> {
    let edges: Vec<f64> = (0..=DENSITY_CELLS).map(|k| k as f64 / DENSITY_CELLS as f64).collect();
    let counts = histogram(scores, &edges)?;
    Ok(DensityStrip { edges, counts })
}

/// What a curve is computed over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveKey {
    pub model: String,
    #[serde(flatten)]
    pub mode: ViewMode,
    /// Label of the subgroup, when restricted to one.
    pub subgroup: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramPayload {
    pub curve: CurveKey,
    pub diagram: BinnedDiagram,
    pub metrics: MetricsReport,
    pub density: DensityStrip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrdPayload {
    pub curve: CurveKey,
    pub n: usize,
    pub lrd: LrdExport,
}

/// Rows of the session in `subgroup`, or all rows.
pub fn subgroup_rows(session: &EvaluationSession, subgroup: Option<&SubgroupPredicate>) -> Result<Vec<usize>> {
    match subgroup {
        Some(p) => filter_by_predicate(session.features(), p),
        None => Ok((0..session.n()).collect()),
    }
}

fn key(model: &str, mode: ViewMode, subgroup: Option<&SubgroupPredicate>) -> CurveKey {
    CurveKey {
        model: model.to_string(),
        mode,
        subgroup: subgroup.map(|p| p.label.clone()),
    }
}

pub fn diagram_payload(
    session: &EvaluationSession,
    model: &str,
    mode: ViewMode,
    spec: BinSpec,
    subgroup: Option<&SubgroupPredicate>,
) -> Result<DiagramPayload> {
    let rows = subgroup_rows(session, subgroup)?;
    let record = session.model(model)?.subset(&rows);
    let view = session.view(model, mode)?.subset(&rows);
    let diagram = bin_stats(&view, spec)?;
    let metrics = report_from_parts(&record, &diagram, spec);
    Ok(DiagramPayload {
        curve: key(model, mode, subgroup),
        density: density_strip(&view.scores)?,
        diagram,
        metrics,
    })
}

/// Learned diagram for one curve; `band` is the number of bootstrap bags,
/// if a confidence band is wanted.
pub fn lrd_payload(
    session: &EvaluationSession,
    model: &str,
    mode: ViewMode,
    params: &LrdParams,
    band: Option<usize>,
    subgroup: Option<&SubgroupPredicate>,
) -> Result<LrdPayload> {
    let rows = subgroup_rows(session, subgroup)?;
    let view = session.view(model, mode)?.subset(&rows);
    let diagram = match band {
        Some(bags) => fit_lrd_with_band(&view, params, bags)?,
        None => fit_lrd(&view, params)?,
    };
    Ok(LrdPayload {
        curve: key(model, mode, subgroup),
        n: view.len(),
        lrd: LrdExport::new(&diagram, &view.scores),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeaturesPayload {
    pub subgroup: Option<String>,
    /// Rows in the subgroup (or all rows).
    pub count: usize,
    pub histograms: Vec<FeatureHistogram>,
}

pub fn features_payload(session: &EvaluationSession, subgroup: Option<&SubgroupPredicate>) -> Result<FeaturesPayload> {
    let rows = subgroup_rows(session, subgroup)?;
    Ok(FeaturesPayload {
        subgroup: subgroup.map(|p| p.label.clone()),
        count: rows.len(),
        histograms: feature_histograms(session.features(), &rows),
    })
}

/// One page of the instances inside a brushed score region, with summaries
/// over the whole region (not just the page).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPayload<'a> {
    pub curve: CurveKey,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub offset: usize,
    pub limit: usize,
    pub indices: Vec<usize>,
    pub columns: &'a [String],
    pub rows: Vec<Vec<Cell<'a>>>,
    /// `None` when the region is empty.
    pub feature_means: Option<Vec<FeatureSummary>>,
    pub confusion_matrix: Option<ConfusionMatrix>,
    pub empty_selection: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn region_payload<'a>(
    session: &'a EvaluationSession,
    model: &str,
    mode: ViewMode,
    lo: f64,
    hi: f64,
    subgroup: Option<&SubgroupPredicate>,
    limit: usize,
    offset: usize,
) -> Result<RegionPayload<'a>> {
    let selection = RegionSelection {
        model: model.to_string(),
        mode,
        lo,
        hi,
        subgroup: subgroup.cloned(),
    };
    let indices = selection.resolve(session)?;
    let table = session.features();
    let page: Vec<usize> = indices.iter().skip(offset).take(limit).copied().collect();
    let (feature_means, confusion_matrix) = match feature_means(table, &indices) {
        Ok(means) => (Some(means), Some(confusion_matrix(session.model(model)?, &indices)?)),
        Err(Error::EmptySelection) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(RegionPayload {
        curve: key(model, mode, subgroup),
        lo,
        hi,
        count: indices.len(),
        offset,
        limit,
        rows: page.iter().map(|&j| table.row(j)).collect(),
        indices: page,
        columns: table.column_names(),
        feature_means,
        confusion_matrix,
        empty_selection: indices.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    #[serde(flatten)]
    pub binned: DiagramPayload,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lrd: Option<LrdExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub n: usize,
    pub bin_spec: BinSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lrd_params: Option<LrdParams>,
    pub curves: Vec<CurveReport>,
}

/// One curve per `(model, mode)` pair, each with an optional learned diagram.
pub fn build_report(
    session: &EvaluationSession,
    curves: &[(String, ViewMode)],
    spec: BinSpec,
    lrd: Option<&LrdParams>,
    subgroup: Option<&SubgroupPredicate>,
) -> Result<Report> {
    let mut out = Vec::with_capacity(curves.len());
    for (model, mode) in curves {
        let binned = diagram_payload(session, model, *mode, spec, subgroup)?;
        let lrd = match lrd {
            Some(params) => Some(lrd_payload(session, model, *mode, params, None, subgroup)?.lrd),
            None => None,
        };
        out.push(CurveReport { binned, lrd });
    }
    Ok(Report {
        n: session.n(),
        bin_spec: spec,
        lrd_params: lrd.cloned(),
        curves: out,
    })
}
