//! Naive reference implementations used as test oracles. They share no code
//! with the library and favour plain loops over speed.
#![allow(dead_code)]

use caliper_core::dataset::{ModelRecord, Predictions};
use proptest::prelude::*;

pub fn naive_brier(probs: &[f64], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..labels.len() {
        for i in 0..k {
            let target = if labels[j] == i { 1.0 } else { 0.0 };
            total += (probs[j * k + i] - target).powi(2);
        }
    }
    total / labels.len() as f64
}

pub fn naive_log_loss(probs: &[f64], labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..labels.len() {
        let mut p = probs[j * k + labels[j]];
        if p < 1e-15 {
            p = 1e-15;
        }
        total -= p.ln();
    }
    total / labels.len() as f64
}

/// Index of the first maximal entry.
pub fn naive_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}

/// Bin of `s` by linear scan: `(e[w], e[w+1]]`, with the first edge itself in bin 0.
pub fn naive_bin(s: f64, edges: &[f64]) -> usize {
    if s <= edges[1] {
        return 0;
    }
    for w in 1..edges.len() - 1 {
        if s > edges[w] && s <= edges[w + 1] {
            return w;
        }
    }
    edges.len() - 2
}

/// `(count, conf, acc)` for each occupied bin.
pub fn naive_bins(scores: &[f64], outcomes: &[bool], edges: &[f64]) -> Vec<(usize, f64, f64)> {
    let nb = edges.len() - 1;
    let mut out = Vec::new();
    for w in 0..nb {
        let (mut c, mut s, mut a) = (0usize, 0.0, 0.0);
        for j in 0..scores.len() {
            if naive_bin(scores[j], edges) == w {
                c += 1;
                s += scores[j];
                if outcomes[j] {
                    a += 1.0;
                }
            }
        }
        if c > 0 {
            out.push((c, s / c as f64, a / c as f64));
        }
    }
    out
}

pub fn naive_ece(scores: &[f64], outcomes: &[bool], edges: &[f64]) -> f64 {
    let n = scores.len() as f64;
    let mut e = 0.0;
    for (c, conf, acc) in naive_bins(scores, outcomes, edges) {
        e += c as f64 / n * (acc - conf).abs();
    }
    e
}

pub fn naive_mce(scores: &[f64], outcomes: &[bool], edges: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for (_, conf, acc) in naive_bins(scores, outcomes, edges) {
        m = m.max((acc - conf).abs());
    }
    m
}

pub fn naive_confusion(probs: &[f64], labels: &[usize], k: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; k]; k];
    for j in 0..labels.len() {
        m[labels[j]][naive_argmax(&probs[j * k..(j + 1) * k])] += 1;
    }
    m
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Random model records with `n` rows and `k` classes drawn from the ranges.
pub fn model_strategy(n: std::ops::RangeInclusive<usize>, k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = ModelRecord> {
    (n, k).prop_flat_map(|(n, k)| {
        (
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, k), n),
            proptest::collection::vec(0..k, n),
        )
            .prop_map(move |(raw, labels)| {
                let mut probs = Vec::with_capacity(n * k);
                for row in raw {
                    let w: Vec<f64> = row.iter().map(|v| v + 1e-3).collect();
                    let s: f64 = w.iter().sum();
                    probs.extend(w.iter().map(|v| v / s));
                }
                ModelRecord::new("m", Predictions { probs, labels, classes: k }).unwrap()
            })
    })
}
