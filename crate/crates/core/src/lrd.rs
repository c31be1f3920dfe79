//! Learned reliability diagrams.
//!
//! A learned diagram is a univariate probabilistic classifier `f` fitted from
//! a view's scores to its outcomes. `f` is a piecewise-constant logit model
//! over quantile cut points, trained by cyclic gradient boosting with Newton
//! leaf values and shrinkage, optionally early-stopped on a held-out split and
//! averaged over several such splits.
//!
//! Since `f` is constant on each piece, every boosting round works on per-piece
//! sufficient statistics (count, positives), so a round costs O(pieces)
//! rather than O(N).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::{assign_unchecked, compute_edges, quantile_sorted, BinSpec};
use crate::dataset::ClassView;
use crate::error::{Error, Result};

/// Minimum number of observations accepted by [`fit_lrd`].
pub const MIN_OBSERVATIONS: usize = 10;
/// Early stopping switches on automatically at this many observations.
pub const AUTO_EARLY_STOP_MIN: usize = 200;
/// Clamp on the base rate before taking its logit.
pub const BASE_RATE_CLAMP: f64 = 1e-6;
/// Added to the Hessian in every Newton step.
pub const HESSIAN_EPS: f64 = 1e-6;
/// Points in the default evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrdParams {
    /// Upper bound on the number of constant pieces.
    pub max_bins: usize,
    /// Upper bound on boosting rounds per bag.
    pub rounds: usize,
    pub learning_rate: f64,
    /// `None` enables early stopping when N reaches [`AUTO_EARLY_STOP_MIN`].
    pub early_stop: Option<bool>,
    pub validation_fraction: f64,
    pub patience: usize,
    /// Leaves per boosting tree. Each tree is a partition of the pieces into
    /// at most this many contiguous runs; a value of at least `max_bins`
    /// updates every piece independently.
    pub max_leaves: usize,
    /// Minimum training observations on each side of a tree split.
    pub min_samples_leaf: usize,
    /// Number of independently split and fitted models averaged in logit space.
    pub outer_bags: usize,
    /// Leading rounds whose tree splits are drawn at random instead of by
    /// gain. Random splits build a smooth curve before greedy rounds refine it.
    pub smoothing_rounds: usize,
    pub seed: u64,
}

impl Default for LrdParams {
    fn default() -> Self {
        Self {
            max_bins: 256,
            rounds: 5000,
            learning_rate: 0.01,
            early_stop: None,
            validation_fraction: 0.15,
            patience: 50,
            max_leaves: 3,
            min_samples_leaf: 2,
            outer_bags: 8,
            smoothing_rounds: 1000,
            seed: 0,
        }
    }
}

impl LrdParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.max_bins < 2 {
            return bad(format!("max_bins must be >= 2, got {}", self.max_bins));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad(format!(
                "validation_fraction must be in (0, 0.5), got {}",
                self.validation_fraction
            ));
        }
        if self.max_leaves < 2 {
            return bad(format!("max_leaves must be >= 2, got {}", self.max_leaves));
        }
        if self.outer_bags == 0 {
            return bad("outer_bags must be >= 1".into());
        }
        Ok(())
    }

    fn early_stop_for(&self, n: usize) -> bool {
        self.early_stop.unwrap_or(n >= AUTO_EARLY_STOP_MIN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// Rounds kept in the returned model, averaged over bags.
    pub rounds_used: f64,
    /// Training log loss of the returned model on all observations.
    pub train_loss: f64,
    /// Log loss of the constant base-rate model on all observations.
    pub initial_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub grid: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedDiagram {
    /// Ascending, starting at 0 and ending at 1. Piece `b` covers
    /// `(cut_points[b], cut_points[b+1]]`, with 0 in the first piece.
    pub cut_points: Vec<f64>,
    pub piece_logits: Vec<f64>,
    pub base_logit: f64,
    pub summary: TrainingSummary,
    pub band: Option<Band>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Bernoulli negative log-likelihood of `pos` positives out of `n` at logit `z`.
fn piece_nll(n: f64, pos: f64, z: f64) -> f64 {
    // -[pos*ln p + (n-pos) ln(1-p)], with ln p = -softplus(-z), ln(1-p) = -softplus(z)
    pos * softplus(-z) + (n - pos) * softplus(z)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LearnedDiagram {
    pub fn pieces(&self) -> usize {
        self.piece_logits.len()
    }

    pub fn piece(&self, x: f64) -> usize {
        assign_unchecked(x.clamp(0.0, 1.0), &self.cut_points)
    }

    /// `f(x)`; inputs outside [0, 1] take the value of the nearest end piece.
    pub fn eval(&self, x: f64) -> f64 {
        sigmoid(self.base_logit + self.piece_logits[self.piece(x)])
    }

    /// A diagram with one constant value over [0, 1].
    pub fn constant(p: f64) -> Self {
        let z = logit(p.clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP));
        Self {
            cut_points: vec![0.0, 1.0],
            piece_logits: vec![0.0],
            base_logit: z,
            summary: TrainingSummary {
                rounds_used: 0.0,
                train_loss: 0.0,
                initial_loss: 0.0,
            },
            band: None,
        }
    }

    /// A diagram taking the given values on the given pieces.
    pub fn from_piece_values(cut_points: Vec<f64>, values: &[f64]) -> Result<Self> {
        if cut_points.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidParameter(
                "need one more cut point than piece values".into(),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::InvalidParameter("piece values must lie in (0, 1)".into()));
        }
        Ok(Self {
            cut_points,
            piece_logits: values.iter().map(|&v| logit(v)).collect(),
            base_logit: 0.0,
            summary: TrainingSummary {
                rounds_used: 0.0,
                train_loss: 0.0,
                initial_loss: 0.0,
            },
            band: None,
        })
    }
}

/// `count` equally spaced points covering [0, 1].
pub fn uniform_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn default_grid() -> Vec<f64> {
    uniform_grid(DEFAULT_GRID_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub f: f64,
}

pub fn evaluate_lrd(diagram: &LearnedDiagram, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation grid".into()));
    }
    grid.iter()
        .map(|&x| {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::ScoreOutOfRange(x));
            }
            Ok(CurvePoint {
                x,
                f: diagram.eval(x),
            })
        })
        .collect()
}

/// Trapezoidal integral of `|f(x) - x|` over `grid`.
pub fn lrd_area(diagram: &LearnedDiagram, grid: &[f64]) -> f64 {
    let gaps: Vec<f64> = grid.iter().map(|&x| (diagram.eval(x) - x).abs()).collect();
    grid.windows(2)
        .zip(gaps.windows(2))
        .map(|(x, g)| (x[1] - x[0]) * (g[0] + g[1]) / 2.0)
        .sum()
}

/// Mean of `|f(s) - s|` over the observed scores.
pub fn lrd_expected_error(diagram: &LearnedDiagram, scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().map(|&s| (diagram.eval(s) - s).abs()).sum::<f64>() / scores.len() as f64
}

/// Mean of `f(s) - s` over scores strictly above `threshold`; negative means
/// overconfident there. `None` when no score exceeds the threshold.
pub fn signed_deviation_above(diagram: &LearnedDiagram, scores: &[f64], threshold: f64) -> Option<f64> {
    let above: Vec<f64> = scores.iter().copied().filter(|&s| s > threshold).collect();
    if above.is_empty() {
        return None;
    }
    Some(above.iter().map(|&s| diagram.eval(s) - s).sum::<f64>() / above.len() as f64)
}

/// Per-piece training and validation counts.
#[derive(Debug, Clone)]
struct PieceStats {
    n: Vec<f64>,
    pos: Vec<f64>,
}

impl PieceStats {
    fn zeros(p: usize) -> Self {
        Self {
            n: vec![0.0; p],
            pos: vec![0.0; p],
        }
    }

    fn add(&mut self, piece: usize, outcome: bool) {
        self.n[piece] += 1.0;
        if outcome {
            self.pos[piece] += 1.0;
        }
    }

    fn total(&self) -> (f64, f64) {
        (self.n.iter().sum(), self.pos.iter().sum())
    }

    fn loss(&self, base: f64, logits: &[f64]) -> f64 {
        let (n, _) = self.total();
        let nll: f64 = (0..logits.len())
            .filter(|&b| self.n[b] > 0.0)
            .map(|b| piece_nll(self.n[b], self.pos[b], base + logits[b]))
            .sum();
        nll / n
    }
}

/// Cut points at score quantiles with duplicate and empty pieces removed.
fn cut_points(scores: &[f64], max_bins: usize) -> Vec<f64> {
    let spec = BinSpec {
        strategy: crate::binning::Strategy::Quantile,
        count: max_bins,
    };
    let edges = compute_edges(scores, spec);
    let mut counts = vec![0usize; edges.len() - 1];
    for &s in scores {
        counts[assign_unchecked(s, &edges)] += 1;
    }
    // Drop the upper edge of every empty piece so it merges into its right
    // neighbour; the last piece merges left instead.
    let mut kept = vec![edges[0]];
    for (b, &c) in counts.iter().enumerate() {
        if c > 0 {
            kept.push(edges[b + 1]);
        }
    }
    if *kept.last().unwrap() != 1.0 {
        if kept.len() > 1 {
            kept.pop();
        }
        kept.push(1.0);
    }
    kept
}

/// Contiguous runs of pieces `[start, end)` with Newton leaf values.
fn fit_tree(grad: &[f64], hess: &[f64], counts: &[f64], max_leaves: usize, min_leaf: f64) -> Vec<(usize, usize, f64)> {
    let p = grad.len();
    let mut g_pre = vec![0.0; p + 1];
    let mut h_pre = vec![0.0; p + 1];
    let mut c_pre = vec![0.0; p + 1];
    for b in 0..p {
        g_pre[b + 1] = g_pre[b] + grad[b];
        h_pre[b + 1] = h_pre[b] + hess[b];
        c_pre[b + 1] = c_pre[b] + counts[b];
    }
    let score = |a: usize, b: usize| {
        let g = g_pre[b] - g_pre[a];
        g * g / (h_pre[b] - h_pre[a] + HESSIAN_EPS)
    };
    let mut leaves = vec![(0usize, p)];
    while leaves.len() < max_leaves {
        let mut best: Option<(usize, usize, f64)> = None;
        for (li, &(a, b)) in leaves.iter().enumerate() {
            let parent = score(a, b);
            for s in a + 1..b {
                if c_pre[s] - c_pre[a] < min_leaf || c_pre[b] - c_pre[s] < min_leaf {
                    continue;
                }
                let gain = score(a, s) + score(s, b) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((li, s, gain));
                }
            }
        }
        match best {
            Some((li, s, _)) => {
                let (a, b) = leaves[li];
                leaves[li] = (a, s);
                leaves.insert(li + 1, (s, b));
            }
            None => break,
        }
    }
    leaves
        .into_iter()
        .map(|(a, b)| (a, b, (g_pre[b] - g_pre[a]) / (h_pre[b] - h_pre[a] + HESSIAN_EPS)))
        .collect()
}

/// Like [`fit_tree`] but with split positions drawn uniformly over the
/// score axis, so sparse score ranges get split as often as dense ones.
fn random_tree(grad: &[f64], hess: &[f64], cuts: &[f64], max_leaves: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let p = grad.len();
    let mut bounds = vec![0];
    if p > 1 {
        bounds.extend((0..max_leaves - 1).map(|_| {
            let u: f64 = rng.random();
            cuts.partition_point(|&c| c < u).clamp(1, p - 1)
        }));
    }
    bounds.push(p);
    bounds.sort_unstable();
    bounds.dedup();
    bounds
        .windows(2)
        .map(|w| {
            let g: f64 = grad[w[0]..w[1]].iter().sum();
            let h: f64 = hess[w[0]..w[1]].iter().sum();
            (w[0], w[1], g / (h + HESSIAN_EPS))
        })
        .collect()
}

struct BagFit {
    base: f64,
    logits: Vec<f64>,
    rounds_used: usize,
}

fn boost(train: &PieceStats, valid: Option<&PieceStats>, cuts: &[f64], params: &LrdParams, rng: &mut ChaCha8Rng) -> BagFit {
    let p = train.n.len();
    let (tn, tpos) = train.total();
    let base = logit((tpos / tn).clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP));
    let mut logits = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut hess = vec![0.0; p];
    let per_piece = params.max_leaves >= p;

    let mut best = (valid.map(|v| v.loss(base, &logits)).unwrap_or(f64::INFINITY), 0usize, logits.clone());
    let mut rounds_done = 0;
    for round in 1..=params.rounds {
        for b in 0..p {
            let q = sigmoid(base + logits[b]);
            grad[b] = train.pos[b] - train.n[b] * q;
            hess[b] = train.n[b] * q * (1.0 - q);
        }
        if per_piece {
            for b in 0..p {
                logits[b] += params.learning_rate * grad[b] / (hess[b] + HESSIAN_EPS);
            }
        } else if round <= params.smoothing_rounds {
            for (a, e, value) in random_tree(&grad, &hess, cuts, params.max_leaves, rng) {
                for l in &mut logits[a..e] {
                    *l += params.learning_rate * value;
                }
            }
        } else {
            let leaves = fit_tree(&grad, &hess, &train.n, params.max_leaves, params.min_samples_leaf as f64);
            for (a, e, value) in leaves {
                for l in &mut logits[a..e] {
                    *l += params.learning_rate * value;
                }
            }
        }
        rounds_done = round;
        if let Some(v) = valid {
            let loss = v.loss(base, &logits);
            if loss < best.0 {
                best = (loss, round, logits.clone());
            } else if round - best.1 >= params.patience {
                break;
            }
        }
    }
    match valid {
        Some(_) => BagFit {
            base,
            logits: best.2,
            rounds_used: best.1,
        },
        None => BagFit {
            base,
            logits,
            rounds_used: rounds_done,
        },
    }
}

/// Fits a learned reliability diagram to `view`. Deterministic given
/// `params.seed`.
pub fn fit_lrd(view: &ClassView, params: &LrdParams) -> Result<LearnedDiagram> {
    params.validate()?;
    let (scores, outcomes): (Vec<f64>, Vec<bool>) = view
        .scores
        .iter()
        .zip(&view.outcomes)
        .filter(|(s, _)| !s.is_nan())
        .map(|(&s, &o)| (s, o))
        .unzip();
    if scores.is_empty() && !view.is_empty() {
        return Err(Error::AllScoresNan);
    }
    if scores.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations {
            needed: MIN_OBSERVATIONS,
            found: scores.len(),
        });
    }
    if let Some(&s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::ScoreOutOfRange(s));
    }

    let n = scores.len();
    let cuts = cut_points(&scores, params.max_bins);
    let p = cuts.len() - 1;
    let pieces: Vec<usize> = scores.iter().map(|&s| assign_unchecked(s, &cuts)).collect();

    let mut all = PieceStats::zeros(p);
    for (&b, &o) in pieces.iter().zip(&outcomes) {
        all.add(b, o);
    }

    let early_stop = params.early_stop_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let n_valid = ((n as f64 * params.validation_fraction).round() as usize).clamp(1, n - 1);

    let fits: Vec<BagFit> = if early_stop {
        (0..params.outer_bags)
            .map(|_| {
                order.shuffle(&mut rng);
                let mut train = PieceStats::zeros(p);
                let mut valid = PieceStats::zeros(p);
                for (rank, &j) in order.iter().enumerate() {
                    if rank < n_valid {
                        valid.add(pieces[j], outcomes[j]);
                    } else {
                        train.add(pieces[j], outcomes[j]);
                    }
                }
                boost(&train, Some(&valid), &cuts, params, &mut rng)
            })
            .collect()
    } else {
        // without a random split every bag would see the same data
        vec![boost(&all, None, &cuts, params, &mut rng)]
    };
    let bags = fits.len() as f64;
    let base_logit = fits.iter().map(|f| f.base).sum::<f64>() / bags;
    let piece_logits: Vec<f64> = (0..p)
        .map(|b| fits.iter().map(|f| f.logits[b]).sum::<f64>() / bags)
        .collect();
    let rounds_used = fits.iter().map(|f| f.rounds_used as f64).sum::<f64>() / bags;

    let (_, pos) = all.total();
    let initial = logit((pos / n as f64).clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP));
    let initial_loss = all.loss(initial, &vec![0.0; p]);
    let train_loss = all.loss(base_logit, &piece_logits);
    // bags that stopped early sit at their own split's base rate, which can
    // be marginally worse on the full data than the pooled base rate
    let (base_logit, piece_logits, train_loss) = if train_loss > initial_loss {
        (initial, vec![0.0; p], initial_loss)
    } else {
        (base_logit, piece_logits, train_loss)
    };
    let summary = TrainingSummary {
        rounds_used,
        train_loss,
        initial_loss,
    };
    Ok(LearnedDiagram {
        cut_points: cuts,
        piece_logits,
        base_logit,
        summary,
        band: None,
    })
}

/// Derives the seed of bootstrap bag `bag` from the root seed.
fn bag_seed(root: u64, bag: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(bag as u64 + 1);
    rng.random()
}

/// [`fit_lrd`] plus a pointwise 2.5/97.5 percentile band over the default
/// grid from `bags` bootstrap refits. With a single bag the band has zero
/// width.
pub fn fit_lrd_with_band(view: &ClassView, params: &LrdParams, bags: usize) -> Result<LearnedDiagram> {
    if bags == 0 {
        return Err(Error::InvalidParameter("bags must be >= 1".into()));
    }
    let mut diagram = fit_lrd(view, params)?;
    let grid = default_grid();
    let n = view.len();
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(bags);
    for bag in 0..bags {
        let seed = bag_seed(params.seed, bag);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resample = view.subset(&idx);
        let fit = fit_lrd(
            &resample,
            &LrdParams {
                seed,
                ..params.clone()
            },
        )?;
        curves.push(grid.iter().map(|&x| fit.eval(x)).collect());
    }
    let mut lo = Vec::with_capacity(grid.len());
    let mut hi = Vec::with_capacity(grid.len());
    let mut column = vec![0.0; bags];
    for g in 0..grid.len() {
        for (c, curve) in column.iter_mut().zip(&curves) {
            *c = curve[g];
        }
        column.sort_by(f64::total_cmp);
        lo.push(quantile_sorted(&column, 0.025));
        hi.push(quantile_sorted(&column, 0.975));
    }
    diagram.band = Some(Band { grid, lo, hi });
    Ok(diagram)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub f: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

/// Wire form of a learned diagram, evaluated on the default grid (or the
/// band's grid when present).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrdExport {
    pub cut_points: Vec<f64>,
    pub piece_logits: Vec<f64>,
    pub base_logit: f64,
    pub grid: Vec<GridPoint>,
    pub lrd_expected_error: f64,
    pub lrd_area: f64,
    pub summary: TrainingSummary,
    /// Display hint only; the numeric curve is always piecewise constant.
    pub render: &'static str,
}

impl LrdExport {
    pub fn new(diagram: &LearnedDiagram, scores: &[f64]) -> Self {
        let grid_x = match &diagram.band {
            Some(b) => b.grid.clone(),
            None => default_grid(),
        };
        let grid = grid_x
            .iter()
            .enumerate()
            .map(|(i, &x)| GridPoint {
                x,
                f: diagram.eval(x),
                lo: diagram.band.as_ref().map(|b| b.lo[i]),
                hi: diagram.band.as_ref().map(|b| b.hi[i]),
            })
            .collect();
        Self {
            cut_points: diagram.cut_points.clone(),
            piece_logits: diagram.piece_logits.clone(),
            base_logit: diagram.base_logit,
            grid,
            lrd_expected_error: lrd_expected_error(diagram, scores),
            lrd_area: lrd_area(diagram, &grid_x),
            summary: diagram.summary.clone(),
            render: "step",
        }
    }
}
