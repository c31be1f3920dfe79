//! Feature tables, model predictions, evaluation sessions and the per-class
//! score/outcome projections every other module consumes.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum(row) - 1|` for probability rows.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Category codes index into `names`, which holds categories in order of
    /// first appearance.
    Categorical { codes: Vec<u32>, names: Vec<String> },
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].to_string(),
            Column::Categorical { codes, names } => names[codes[row] as usize].clone(),
        }
    }
}

/// A single cell, as exposed to instance listings.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell<'a> {
    Number(f64),
    Category(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidParameter(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        check_names(&names)?;
        let n_rows = columns.first().map(Column::len).unwrap_or(0);
        if n_rows == 0 {
            return Err(Error::NoDataRows);
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::RowCountMismatch {
                    what: format!("column {name:?}"),
                    expected: n_rows,
                    found: col.len(),
                });
            }
            if let Column::Numeric(values) = col {
                if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        row,
                        column: name.clone(),
                    });
                }
            }
        }
        Ok(Self {
            names,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(Column::kind).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(&self.columns)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn cell(&self, row: usize, column: usize) -> Cell<'_> {
        match &self.columns[column] {
            Column::Numeric(v) => Cell::Number(v[row]),
            Column::Categorical { codes, names } => Cell::Category(&names[codes[row] as usize]),
        }
    }

    pub fn row(&self, row: usize) -> Vec<Cell<'_>> {
        (0..self.columns.len()).map(|c| self.cell(row, c)).collect()
    }

    /// Writes the table back out as CSV in the same layout [`ingest_features`] reads.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for row in 0..self.n_rows {
            w.write_record(self.columns.iter().map(|c| c.cell_text(row)))?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

fn check_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, name) in names.iter().enumerate() {
        if name.trim().is_empty() {
            return Err(Error::EmptyColumnName(i));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    Ok(())
}

/// Reads all records of a headered CSV stream, rejecting ragged rows.
fn read_records<R: Read>(source: R) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record);
    }
    if rows.is_empty() {
        return Err(Error::NoDataRows);
    }
    Ok((header, rows))
}

/// Parses a features CSV. Column kinds are inferred (every cell parses as a
/// number gives numeric, anything else categorical) unless overridden.
pub fn ingest_features<R: Read>(
    source: R,
    overrides: &HashMap<String, ColumnKind>,
) -> Result<FeatureTable> {
    let (names, rows) = read_records(source)?;
    check_names(&names)?;

    let mut columns = Vec::with_capacity(names.len());
    for (c, name) in names.iter().enumerate() {
        let cells: Vec<&str> = rows.iter().map(|r| r[c].trim()).collect();
        if let Some(row) = cells.iter().position(|s| s.is_empty()) {
            return Err(Error::MissingValue {
                row,
                column: name.clone(),
            });
        }
        let parsed: Vec<Option<f64>> = cells.iter().map(|s| s.parse::<f64>().ok()).collect();
        let kind = overrides.get(name).copied().unwrap_or_else(|| {
            if parsed.iter().all(Option::is_some) {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        });
        let column = match kind {
            ColumnKind::Numeric => {
                let mut values = Vec::with_capacity(cells.len());
                for (row, (v, text)) in parsed.iter().zip(&cells).enumerate() {
                    match v {
                        Some(v) if v.is_finite() => values.push(*v),
                        Some(_) => {
                            return Err(Error::NonFinite {
                                row,
                                column: name.clone(),
                            })
                        }
                        None => {
                            return Err(Error::Parse {
                                row,
                                column: name.clone(),
                                value: text.to_string(),
                            })
                        }
                    }
                }
                Column::Numeric(values)
            }
            ColumnKind::Categorical => {
                let mut lookup: HashMap<&str, u32> = HashMap::new();
                let mut names = Vec::new();
                let codes = cells
                    .iter()
                    .map(|s| {
                        *lookup.entry(s).or_insert_with(|| {
                            names.push(s.to_string());
                            (names.len() - 1) as u32
                        })
                    })
                    .collect();
                Column::Categorical { codes, names }
            }
        };
        columns.push(column);
    }
    FeatureTable::new(names, columns)
}

/// Validated predicted probabilities and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    /// Row-major N×K.
    pub probs: Vec<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

fn parse_matrix(rows: &[csv::StringRecord], header: &[String]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * header.len());
    for (row, record) in rows.iter().enumerate() {
        for (c, cell) in record.iter().enumerate() {
            let text = cell.trim();
            if text.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                row,
                column: header[c].clone(),
                value: text.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: header[c].clone(),
                });
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Checks a row-major probability matrix: non-negative entries and row sums
/// within [`ROW_SUM_TOLERANCE`] of one. Rows are never renormalized.
pub fn validate_probs(probs: &[f64], classes: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    if probs.len() % classes != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} probabilities do not form rows of {classes}",
            probs.len()
        )));
    }
    let mut worst: Option<(usize, f64)> = None;
    for (row, chunk) in probs.chunks_exact(classes).enumerate() {
        if let Some((column, &value)) = chunk.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeProbability { row, column, value });
        }
        for (column, &value) in chunk.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "probability {value} outside [0, 1] at row {row}, column {column}"
                )));
            }
        }
        let sum: f64 = chunk.iter().sum();
        let dev = (sum - 1.0).abs();
        if dev > ROW_SUM_TOLERANCE && worst.is_none_or(|(_, s)| dev > (s - 1.0).abs()) {
            worst = Some((row, sum));
        }
    }
    match worst {
        Some((row, sum)) => Err(Error::RowSum { row, sum }),
        None => Ok(()),
    }
}

/// Parses a probabilities CSV (`p_0..p_{K-1}`) and a labels CSV, either a
/// single `label` index column or a `y_0..y_{K-1}` one-hot block.
pub fn ingest_predictions<P: Read, L: Read>(probs_source: P, labels_source: L) -> Result<Predictions> {
    let (p_header, p_rows) = read_records(probs_source)?;
    let classes = p_header.len();
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    let probs = parse_matrix(&p_rows, &p_header)?;
    validate_probs(&probs, classes)?;

    let (l_header, l_rows) = read_records(labels_source)?;
    if l_rows.len() != p_rows.len() {
        return Err(Error::RowCountMismatch {
            what: "labels".into(),
            expected: p_rows.len(),
            found: l_rows.len(),
        });
    }
    let labels = if l_header.len() == 1 {
        l_rows
            .iter()
            .enumerate()
            .map(|(row, r)| {
                let text = r[0].trim();
                let label: usize = text.parse().map_err(|_| Error::Parse {
                    row,
                    column: l_header[0].clone(),
                    value: text.to_string(),
                })?;
                if label >= classes {
                    return Err(Error::LabelOutOfRange { row, label, classes });
                }
                Ok(label)
            })
            .collect::<Result<Vec<_>>>()?
    } else if l_header.len() == classes {
        let onehot = parse_matrix(&l_rows, &l_header)?;
        onehot
            .chunks_exact(classes)
            .enumerate()
            .map(|(row, chunk)| {
                let sum: f64 = chunk.iter().sum();
                if sum != 1.0 || chunk.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::OneHot { row, sum });
                }
                Ok(chunk.iter().position(|&v| v == 1.0).expect("one entry is 1"))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(Error::LabelShape {
            found: l_header.len(),
            classes,
        });
    };
    Ok(Predictions {
        probs,
        labels,
        classes,
    })
}

/// Writes probabilities with a `p_0..p_{K-1}` header.
pub fn write_probs_csv<W: Write>(writer: W, probs: &[f64], classes: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((0..classes).map(|i| format!("p_{i}")))?;
    for row in probs.chunks_exact(classes) {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Writes labels as a single `label` index column.
pub fn write_labels_csv<W: Write>(writer: W, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    name: String,
    probs: Vec<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl ModelRecord {
    pub fn new(name: impl Into<String>, predictions: Predictions) -> Result<Self> {
        let Predictions {
            probs,
            labels,
            classes,
        } = predictions;
        validate_probs(&probs, classes)?;
        let n = probs.len() / classes;
        if labels.len() != n {
            return Err(Error::RowCountMismatch {
                what: "labels".into(),
                expected: n,
                found: labels.len(),
            });
        }
        if n == 0 {
            return Err(Error::NoDataRows);
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::LabelOutOfRange { row, label, classes });
        }
        Ok(Self {
            name: name.into(),
            probs,
            labels,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.probs[j * self.classes..(j + 1) * self.classes]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.probs.chunks_exact(self.classes)
    }

    pub fn predicted(&self, j: usize) -> usize {
        argmax(self.row(j))
    }

    /// Restriction to the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> ModelRecord {
        let mut probs = Vec::with_capacity(indices.len() * self.classes);
        for &j in indices {
            probs.extend_from_slice(self.row(j));
        }
        ModelRecord {
            name: self.name.clone(),
            probs,
            labels: indices.iter().map(|&j| self.labels[j]).collect(),
            classes: self.classes,
        }
    }
}

/// Which projection of the N×K probability matrix a view carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "class", rename_all = "snake_case")]
pub enum ViewMode {
    /// Top-class probability against argmax correctness.
    Confidence,
    /// One-vs-rest probability of a single class against its occurrence.
    #[serde(rename = "classwise")]
    ClassWise(usize),
}

impl std::fmt::Display for ViewMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViewMode::Confidence => write!(f, "confidence"),
            ViewMode::ClassWise(i) => write!(f, "classwise:{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassView {
    pub mode: ViewMode,
    pub scores: Vec<f64>,
    pub outcomes: Vec<bool>,
    pub model: String,
    pub session: Option<String>,
}

impl ClassView {
    /// Builds a view from raw scores and outcomes, e.g. for fixtures.
    pub fn from_scores(scores: Vec<f64>, outcomes: Vec<bool>) -> Result<Self> {
        if scores.len() != outcomes.len() {
            return Err(Error::RowCountMismatch {
                what: "outcomes".into(),
                expected: scores.len(),
                found: outcomes.len(),
            });
        }
        if let Some(&s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::ScoreOutOfRange(s));
        }
        Ok(Self {
            mode: ViewMode::Confidence,
            scores,
            outcomes,
            model: String::new(),
            session: None,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn outcome_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.outcomes.iter().map(|&o| if o { 1.0 } else { 0.0 })
    }

    pub fn subset(&self, indices: &[usize]) -> ClassView {
        ClassView {
            mode: self.mode,
            scores: indices.iter().map(|&j| self.scores[j]).collect(),
            outcomes: indices.iter().map(|&j| self.outcomes[j]).collect(),
            model: self.model.clone(),
            session: self.session.clone(),
        }
    }
}

pub fn project_class_view(model: &ModelRecord, mode: ViewMode) -> Result<ClassView> {
    let (scores, outcomes) = match mode {
        ViewMode::Confidence => model
            .rows()
            .zip(model.labels())
            .map(|(row, &label)| {
                let top = argmax(row);
                (row[top], top == label)
            })
            .unzip(),
        ViewMode::ClassWise(i) => {
            if i >= model.classes() {
                return Err(Error::ClassOutOfRange {
                    index: i,
                    classes: model.classes(),
                });
            }
            model
                .rows()
                .zip(model.labels())
                .map(|(row, &label)| (row[i], label == i))
                .unzip()
        }
    };
    Ok(ClassView {
        mode,
        scores,
        outcomes,
        model: model.name().to_string(),
        session: None,
    })
}

/// Features plus the models evaluated on them. Append-only: models can be
/// added but never replaced.
#[derive(Debug, Clone)]
pub struct EvaluationSession {
    id: String,
    features: Arc<FeatureTable>,
    models: Vec<Arc<ModelRecord>>,
}

impl EvaluationSession {
    pub fn new(id: impl Into<String>, features: FeatureTable) -> Self {
        Self {
            id: id.into(),
            features: Arc::new(features),
            models: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn features(&self) -> &FeatureTable {
        &self.features
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelRecord> {
        self.models.iter().map(Arc::as_ref)
    }

    pub fn model(&self, name: &str) -> Result<&ModelRecord> {
        self.models()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    pub fn add_model(&mut self, model: ModelRecord) -> Result<()> {
        if model.n() != self.n() {
            return Err(Error::RowCountMismatch {
                what: format!("model {:?}", model.name()),
                expected: self.n(),
                found: model.n(),
            });
        }
        if self.models.iter().any(|m| m.name() == model.name()) {
            return Err(Error::DuplicateModel(model.name().to_string()));
        }
        self.models.push(Arc::new(model));
        Ok(())
    }

    pub fn view(&self, model: &str, mode: ViewMode) -> Result<ClassView> {
        let mut view = project_class_view(self.model(model)?, mode)?;
        view.session = Some(self.id.clone());
        Ok(view)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(probs: &str, labels: &str) -> Result<Predictions> {
        ingest_predictions(probs.as_bytes(), labels.as_bytes())
    }

    #[test]
    fn infers_numeric_and_categorical() {
        let t = ingest_features("age,sex\n31,M\n45,F\n".as_bytes(), &HashMap::new()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column_kinds(), vec![ColumnKind::Numeric, ColumnKind::Categorical]);
    }

    #[test]
    fn mixed_column_is_categorical() {
        let t = ingest_features("x\n1\n2\nabc\n".as_bytes(), &HashMap::new()).unwrap();
        assert_eq!(t.column_kinds(), vec![ColumnKind::Categorical]);
    }

    #[test]
    fn override_forces_categorical() {
        let mut o = HashMap::new();
        o.insert("zip".to_string(), ColumnKind::Categorical);
        let t = ingest_features("zip\n02139\n10001\n".as_bytes(), &o).unwrap();
        match t.column("zip").unwrap() {
            Column::Categorical { names, .. } => assert_eq!(names, &["02139", "10001"]),
            _ => panic!("expected categorical"),
        }
    }

    #[test]
    fn feature_ingestion_errors() {
        let none = HashMap::new();
        assert_eq!(
            ingest_features("age,sex\n".as_bytes(), &none).unwrap_err(),
            Error::NoDataRows
        );
        assert!(matches!(
            ingest_features("a,b\n1,2\n3\n".as_bytes(), &none).unwrap_err(),
            Error::RaggedRow { row: 1, .. }
        ));
        assert!(matches!(
            ingest_features("a,a\n1,2\n".as_bytes(), &none).unwrap_err(),
            Error::DuplicateColumn(_)
        ));
        assert_eq!(
            ingest_features("a,b\n1,2\nNaN,3\n".as_bytes(), &none).unwrap_err(),
            Error::NonFinite {
                row: 1,
                column: "a".into()
            }
        );
        assert!(matches!(
            ingest_features("a,b\n1,\n".as_bytes(), &none).unwrap_err(),
            Error::MissingValue { row: 0, .. }
        ));
    }

    #[test]
    fn quoted_fields() {
        let t = ingest_features("name,v\n\"Smith, J\",1\n\"O\"\"Neil\",2\n".as_bytes(), &HashMap::new())
            .unwrap();
        assert_eq!(t.cell(0, 0), Cell::Category("Smith, J"));
        assert_eq!(t.cell(1, 0), Cell::Category("O\"Neil"));
    }

    #[test]
    fn one_hot_labels_collapse() {
        let p = preds("p_0,p_1\n0.2,0.8\n0.6,0.4\n", "y_0,y_1\n0,1\n1,0\n").unwrap();
        assert_eq!(p.labels, vec![1, 0]);
        assert_eq!(p.classes, 2);
    }

    #[test]
    fn prediction_errors() {
        let e = preds("p_0,p_1\n0.5,0.6\n", "label\n0\n").unwrap_err();
        assert!(matches!(e, Error::RowSum { row: 0, .. }));
        assert!(e.to_string().starts_with("row sum 1.1"), "{e}");
        assert!(e.to_string().contains("exceeds tolerance"));

        let e = preds("p_0,p_1\n0.5,0.5\n0.5,0.5\n0.5,0.5\n", "label\n0\n1\n2\n").unwrap_err();
        assert!(e.to_string().starts_with("label out of range"), "{e}");

        assert!(matches!(
            preds("p_0,p_1\n1.2,-0.2\n", "label\n0\n").unwrap_err(),
            Error::NegativeProbability { .. }
        ));
        assert!(matches!(
            preds("p_0,p_1\n0.5,0.5\n", "y_0,y_1\n1,1\n").unwrap_err(),
            Error::OneHot { row: 0, .. }
        ));
        assert!(matches!(
            preds("p_0\n1\n", "label\n0\n").unwrap_err(),
            Error::TooFewClasses(1)
        ));
    }

    #[test]
    fn worst_row_is_reported() {
        let e = preds("p_0,p_1\n0.5,0.50001\n0.5,0.6\n0.5,0.55\n", "label\n0\n0\n0\n").unwrap_err();
        assert!(matches!(e, Error::RowSum { row: 1, .. }));
    }

    fn record(probs: Vec<f64>, labels: Vec<usize>, classes: usize) -> ModelRecord {
        ModelRecord::new(
            "m",
            Predictions {
                probs,
                labels,
                classes,
            },
        )
        .unwrap()
    }

    #[test]
    fn projections() {
        let m = record(vec![0.2, 0.5, 0.3], vec![1], 3);
        let v = project_class_view(&m, ViewMode::Confidence).unwrap();
        assert_eq!((v.scores[0], v.outcomes[0]), (0.5, true));
        let v = project_class_view(&m, ViewMode::ClassWise(0)).unwrap();
        assert_eq!((v.scores[0], v.outcomes[0]), (0.2, false));
        assert!(matches!(
            project_class_view(&m, ViewMode::ClassWise(3)),
            Err(Error::ClassOutOfRange { index: 3, classes: 3 })
        ));
    }

    #[test]
    fn argmax_tie_goes_to_lowest_class() {
        let m = record(vec![0.5, 0.5], vec![1], 2);
        let v = project_class_view(&m, ViewMode::Confidence).unwrap();
        assert_eq!((v.scores[0], v.outcomes[0]), (0.5, false));
    }

    #[test]
    fn session_is_append_only() {
        let t = ingest_features("a\n1\n2\n".as_bytes(), &HashMap::new()).unwrap();
        let mut s = EvaluationSession::new("s", t);
        s.add_model(record(vec![0.5, 0.5, 0.1, 0.9], vec![0, 1], 2)).unwrap();
        assert!(matches!(
            s.add_model(record(vec![0.5, 0.5, 0.1, 0.9], vec![0, 1], 2)),
            Err(Error::DuplicateModel(_))
        ));
        assert!(matches!(
            s.add_model(record(vec![0.5, 0.5], vec![0], 2)),
            Err(Error::RowCountMismatch { .. })
        ));
        assert_eq!(s.view("m", ViewMode::Confidence).unwrap().session.as_deref(), Some("s"));
    }

    #[test]
    fn view_mode_json() {
        assert_eq!(
            serde_json::to_string(&ViewMode::ClassWise(2)).unwrap(),
            r#"{"mode":"classwise","class":2}"#
        );
        assert_eq!(
            serde_json::to_string(&ViewMode::Confidence).unwrap(),
            r#"{"mode":"confidence"}"#
        );
    }
}
