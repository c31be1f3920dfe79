//! Synthetic evaluation data with exactly known posteriors.
//!
//! Samples come from an isotropic Gaussian mixture: each class has a centroid
//! in the informative subspace and unit variance around it, while noise
//! dimensions are standard normal regardless of class. Because the mixture
//! is known, the Bayes posterior of every sample is available in closed form
//! and serves as a perfectly calibrated predictor. Distortions of that
//! predictor produce controlled over- and underconfidence.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ClassView, FeatureTable, ModelRecord, Predictions};
use crate::error::{Error, Result};

pub const DEFAULT_CENTROID_SCALE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub classes: usize,
    pub informative: usize,
    pub noise: usize,
    pub class_weights: Vec<f64>,
    /// Expected Euclidean norm of a class centroid.
    pub centroid_scale: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Balanced classes with the default centroid scale.
    pub fn balanced(n: usize, classes: usize, informative: usize, noise: usize, seed: u64) -> Self {
        Self {
            n,
            classes,
            informative,
            noise,
            class_weights: vec![1.0 / classes as f64; classes],
            centroid_scale: DEFAULT_CENTROID_SCALE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.informative < 1 {
            return bad("need at least 1 informative dimension".into());
        }
        if self.n < 1 {
            return bad("need at least 1 sample".into());
        }
        if self.class_weights.len() != self.classes {
            return bad(format!(
                "{} class weights for {} classes",
                self.class_weights.len(),
                self.classes
            ));
        }
        if self.class_weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("class weights must be non-negative".into());
        }
        let sum: f64 = self.class_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("class weights sum to {sum}, expected 1"));
        }
        if !(self.centroid_scale.is_finite() && self.centroid_scale >= 0.0) {
            return bad(format!("invalid centroid scale {}", self.centroid_scale));
        }
        Ok(())
    }
}

/// `majority` for class 0 and the remainder spread evenly over the others.
pub fn majority_weights(classes: usize, majority: f64) -> Vec<f64> {
    let rest = (1.0 - majority) / (classes - 1) as f64;
    std::iter::once(majority)
        .chain(std::iter::repeat_n(rest, classes - 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub features: FeatureTable,
    pub labels: Vec<usize>,
    /// Row-major N×K Bayes posteriors.
    pub posteriors: Vec<f64>,
    pub classes: usize,
    pub class_weights: Vec<f64>,
    /// K rows of centroid coordinates over the informative dimensions in use.
    pub centroids: Vec<Vec<f64>>,
    /// Informative dimensions currently carried by `features` (the first
    /// columns); the remaining columns are noise.
    pub informative: usize,
    informative_values: Vec<Vec<f64>>,
}

impl SynthData {
    pub fn model(&self, name: &str, distortion: &Distortion) -> Result<ModelRecord> {
        ModelRecord::new(
            name,
            Predictions {
                probs: predictions_from_posteriors(&self.posteriors, self.classes, distortion)?,
                labels: self.labels.clone(),
                classes: self.classes,
            },
        )
    }
}

fn posterior_row(x: &[f64], centroids: &[Vec<f64>], log_w: &[f64], dims: usize, out: &mut [f64]) {
    for (k, c) in centroids.iter().enumerate() {
        let d2: f64 = x[..dims].iter().zip(&c[..dims]).map(|(a, b)| (a - b) * (a - b)).sum();
        out[k] = log_w[k] - 0.5 * d2;
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
}

fn posteriors_for(
    rows: &[Vec<f64>],
    centroids: &[Vec<f64>],
    weights: &[f64],
    dims: usize,
) -> Vec<f64> {
    let k = weights.len();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut out = vec![0.0; rows.len() * k];
    for (row, chunk) in rows.iter().zip(out.chunks_exact_mut(k)) {
        posterior_row(row, centroids, &log_w, dims, chunk);
    }
    out
}

fn build_table(informative: &[Vec<f64>], keep: usize, noise: &[Vec<f64>]) -> Result<FeatureTable> {
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for d in 0..keep {
        names.push(format!("inf_{d}"));
        columns.push(Column::Numeric(informative.iter().map(|r| r[d]).collect()));
    }
    let noise_dims = noise.first().map(Vec::len).unwrap_or(0);
    for d in 0..noise_dims {
        names.push(format!("noise_{d}"));
        columns.push(Column::Numeric(noise.iter().map(|r| r[d]).collect()));
    }
    if columns.is_empty() {
        // keep=0 with no noise still needs a row-carrying column
        names.push("row".into());
        columns.push(Column::Numeric((0..informative.len()).map(|j| j as f64).collect()));
    }
    FeatureTable::new(names, columns)
}

pub fn gen_classification(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = spec.centroid_scale / (spec.informative as f64).sqrt();
    let centroids: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.informative)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let picker = WeightedIndex::new(&spec.class_weights)
        .map_err(|e| Error::InvalidParameter(format!("class weights: {e}")))?;

    let mut labels = Vec::with_capacity(spec.n);
    let mut informative = Vec::with_capacity(spec.n);
    let mut noise = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let y = picker.sample(&mut rng);
        labels.push(y);
        informative.push(
            centroids[y]
                .iter()
                .map(|c| c + rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<f64>>(),
        );
        noise.push(
            (0..spec.noise)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<f64>>(),
        );
    }
    let posteriors = posteriors_for(&informative, &centroids, &spec.class_weights, spec.informative);
    Ok(SynthData {
        features: build_table(&informative, spec.informative, &noise)?,
        labels,
        posteriors,
        classes: spec.classes,
        class_weights: spec.class_weights.clone(),
        centroids,
        informative: spec.informative,
        informative_values: informative,
    })
}

/// Keeps only the first `keep` informative dimensions (noise columns stay)
/// and recomputes the posteriors on the marginal mixture of the kept
/// dimensions. `keep = 0` yields the class priors on every row.
pub fn drop_informative(data: &SynthData, keep: usize) -> Result<SynthData> {
    if keep > data.informative {
        return Err(Error::InvalidParameter(format!(
            "cannot keep {keep} of {} informative dimensions",
            data.informative
        )));
    }
    let noise: Vec<Vec<f64>> = {
        let n = data.features.n_rows();
        let cols: Vec<&Vec<f64>> = data
            .features
            .columns()
            .skip(data.informative)
            .filter_map(|(name, c)| match c {
                Column::Numeric(v) if name.starts_with("noise_") => Some(v),
                _ => None,
            })
            .collect();
        (0..n).map(|j| cols.iter().map(|c| c[j]).collect()).collect()
    };
    let informative: Vec<Vec<f64>> = data
        .informative_values
        .iter()
        .map(|r| r[..keep].to_vec())
        .collect();
    let centroids: Vec<Vec<f64>> = data.centroids.iter().map(|c| c[..keep].to_vec()).collect();
    let posteriors = posteriors_for(&informative, &centroids, &data.class_weights, keep);
    Ok(SynthData {
        features: build_table(&informative, keep, &noise)?,
        labels: data.labels.clone(),
        posteriors,
        classes: data.classes,
        class_weights: data.class_weights.clone(),
        centroids,
        informative: keep,
        informative_values: informative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    None,
    /// `p_i^(1/t)` renormalized; `t < 1` sharpens, `t > 1` flattens.
    Temperature { t: f64 },
    /// Reweights each class by `resampled / original`, as if the training
    /// priors had been shifted by resampling.
    ClassPriorShift {
        original: Vec<f64>,
        resampled: Vec<f64>,
    },
}

pub fn predictions_from_posteriors(posteriors: &[f64], classes: usize, distortion: &Distortion) -> Result<Vec<f64>> {
    match distortion {
        Distortion::None => Ok(posteriors.to_vec()),
        Distortion::Temperature { t } => {
            if !(*t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("temperature must be > 0, got {t}")));
            }
            let inv = 1.0 / t;
            let mut out = Vec::with_capacity(posteriors.len());
            for row in posteriors.chunks_exact(classes) {
                // work in log space so tiny posteriors do not underflow to 0/0
                let logs: Vec<f64> = row.iter().map(|p| inv * p.ln()).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                out.extend(exps.iter().map(|e| e / sum));
            }
            Ok(out)
        }
        Distortion::ClassPriorShift {
            original,
            resampled,
        } => {
            if original.len() != classes || resampled.len() != classes {
                return Err(Error::InvalidParameter("prior shift weights must have one entry per class".into()));
            }
            if original.iter().any(|w| !(*w > 0.0)) || resampled.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::InvalidParameter("prior shift weights must be positive".into()));
            }
            let ratio: Vec<f64> = resampled.iter().zip(original).map(|(r, o)| r / o).collect();
            let mut out = Vec::with_capacity(posteriors.len());
            for row in posteriors.chunks_exact(classes) {
                let w: Vec<f64> = row.iter().zip(&ratio).map(|(p, r)| p * r).collect();
                let sum: f64 = w.iter().sum();
                out.extend(w.iter().map(|v| v / sum));
            }
            Ok(out)
        }
    }
}

/// Scores ~ Uniform(0, 1) with outcomes ~ Bernoulli(score): a perfectly
/// calibrated single-class view.
pub fn calibrated_uniform(n: usize, seed: u64) -> ClassView {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let s: f64 = rng.random();
        scores.push(s);
        outcomes.push(rng.random::<f64>() < s);
    }
    ClassView::from_scores(scores, outcomes).expect("scores in [0, 1)")
}

/// Scores massed near 0 and near 1 (45% each) with a thin uniform middle,
/// outcomes ~ Bernoulli(score).
pub fn bimodal(n: usize, seed: u64) -> ClassView {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let s = if u < 0.45 {
            rng.random_range(0.0..0.1)
        } else if u < 0.9 {
            rng.random_range(0.9..1.0)
        } else {
            rng.random::<f64>()
        };
        scores.push(s);
        outcomes.push(rng.random::<f64>() < s);
    }
    ClassView::from_scores(scores, outcomes).expect("scores in [0, 1)")
}

/// A two-class risk model over `age` and `sex` whose predictions are
/// calibrated for ages up to 45 and increasingly overconfident beyond.
/// Risk falls with age, so high predicted risk concentrates in the young.
pub fn age_subgroup_fixture(n: usize, seed: u64) -> Result<(FeatureTable, ModelRecord)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ages = Vec::with_capacity(n);
    let mut sex = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let age = rng.random_range(18.0f64..75.0).round();
        let female = rng.random::<f64>() < 0.5;
        let true_logit = 1.2 - 0.08 * (age - 30.0) - if female { 0.3 } else { 0.0 };
        let stretch = if age > 45.0 { 1.0 + 0.05 * (age - 45.0) } else { 1.0 };
        let p_true = 1.0 / (1.0 + (-true_logit).exp());
        let p_model = 1.0 / (1.0 + (-true_logit * stretch).exp());
        labels.push(usize::from(rng.random::<f64>() < p_true));
        probs.extend([1.0 - p_model, p_model]);
        ages.push(age);
        sex.push(u32::from(female));
    }
    let table = FeatureTable::new(
        vec!["age".into(), "sex".into()],
        vec![
            Column::Numeric(ages),
            Column::Categorical {
                codes: sex,
                names: vec!["M".into(), "F".into()],
            },
        ],
    )?;
    let model = ModelRecord::new(
        "risk",
        Predictions {
            probs,
            labels,
            classes: 2,
        },
    )?;
    Ok((table, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_examples() {
        let t = Distortion::Temperature { t: 0.5 };
        assert_eq!(predictions_from_posteriors(&[0.5, 0.5], 2, &t).unwrap(), vec![0.5, 0.5]);
        let p = predictions_from_posteriors(&[0.8, 0.2], 2, &t).unwrap();
        assert!((p[0] - 0.64 / 0.68).abs() < 1e-12);
        assert!((p[0] - 0.941).abs() < 5e-4 && (p[1] - 0.059).abs() < 5e-4);
        for bad in [0.0, -1.0, f64::NAN] {
            assert!(predictions_from_posteriors(&[0.5, 0.5], 2, &Distortion::Temperature { t: bad }).is_err());
        }
    }

    #[test]
    fn no_distortion_is_identity() {
        let rows = [0.1, 0.7, 0.2, 0.3, 0.3, 0.4];
        assert_eq!(predictions_from_posteriors(&rows, 3, &Distortion::None).unwrap(), rows.to_vec());
    }

    #[test]
    fn prior_shift_to_uniform_lowers_majority() {
        let d = Distortion::ClassPriorShift {
            original: vec![0.9, 0.1],
            resampled: vec![0.5, 0.5],
        };
        let p = predictions_from_posteriors(&[0.9, 0.1], 2, &d).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SynthSpec::balanced(500, 4, 3, 2, 11);
        let a = gen_classification(&spec).unwrap();
        let b = gen_classification(&spec).unwrap();
        assert_eq!(a, b);
        let c = gen_classification(&SynthSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.posteriors, c.posteriors);
    }

    #[test]
    fn rows_on_simplex() {
        let a = gen_classification(&SynthSpec::balanced(300, 5, 4, 1, 2)).unwrap();
        for row in a.posteriors.chunks_exact(5) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(a.features.n_columns(), 5);
    }

    #[test]
    fn majority_fraction_concentrates() {
        let spec = SynthSpec {
            class_weights: majority_weights(10, 0.5),
            ..SynthSpec::balanced(10_000, 10, 10, 10, 3)
        };
        let a = gen_classification(&spec).unwrap();
        let frac = a.labels.iter().filter(|&&l| l == 0).count() as f64 / 10_000.0;
        let sigma = (0.25f64 / 10_000.0).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "{frac}");
    }

    #[test]
    fn separated_centroids_are_confident() {
        let spec = SynthSpec {
            centroid_scale: 8.0,
            ..SynthSpec::balanced(2000, 2, 1, 0, 5)
        };
        let a = gen_classification(&spec).unwrap();
        let sep = (a.centroids[0][0] - a.centroids[1][0]).abs();
        assert!(sep > 4.0, "seed gives separation {sep}");
        let mean_max = a
            .posteriors
            .chunks_exact(2)
            .map(|r| r[0].max(r[1]))
            .sum::<f64>()
            / 2000.0;
        assert!(mean_max > 0.9, "{mean_max}");
    }

    #[test]
    fn dropping_dimensions() {
        let spec = SynthSpec {
            class_weights: majority_weights(10, 0.5),
            ..SynthSpec::balanced(4000, 10, 10, 10, 9)
        };
        let full = gen_classification(&spec).unwrap();
        let same = drop_informative(&full, 10).unwrap();
        assert_eq!(same.posteriors, full.posteriors);
        assert_eq!(same.features, full.features);

        let none = drop_informative(&full, 0).unwrap();
        for row in none.posteriors.chunks_exact(10) {
            for (p, w) in row.iter().zip(&spec.class_weights) {
                assert!((p - w).abs() < 1e-12);
            }
        }
        assert_eq!(none.features.n_columns(), 10);

        let mean_max = |d: &SynthData| {
            d.posteriors
                .chunks_exact(10)
                .map(|r| r.iter().copied().fold(0.0, f64::max))
                .sum::<f64>()
                / 4000.0
        };
        let half = drop_informative(&full, 5).unwrap();
        assert!(mean_max(&half) < mean_max(&full));
        assert!(drop_informative(&full, 11).is_err());
    }
}
