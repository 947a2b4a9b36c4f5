//! Branch metrics: the per-edge costs minimized by every decoder in this
//! crate.
//!
//! For a FSISIC with AWGN the joint decoders reduce to minimizing
//! `sum_i (y_i - a(e))^2 g_{i,e}`, so the default AWGN metric is the plain
//! squared distance without the `1/(2 sigma^2)` likelihood scaling. The
//! softmin temperatures of the iterative decoder therefore carry units of
//! inverse squared channel output; the scaled variant is available for
//! callers that want true negative log-likelihoods.

use crate::channel::Trellis;
use crate::{Error, Result};

/// Finite surrogate for `-ln 0` on first-section edges leaving a state the
/// initial distribution rules out. Keeps the LP bounded while making such
/// edges uncompetitive.
pub const ZERO_PROB_SURROGATE: f64 = 1e6;

/// An `N x O` matrix of per-section edge costs.
#[derive(Debug, Clone)]
pub struct BranchMetrics {
    b: Vec<Vec<f64>>,
}

impl BranchMetrics {
    /// Wraps a raw cost matrix; every row must have one entry per edge and
    /// all entries must be finite.
    pub fn from_raw(trellis: &Trellis, b: Vec<Vec<f64>>) -> Result<Self> {
        if b.len() != trellis.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} metric rows for a length-{} trellis",
                b.len(),
                trellis.len()
            )));
        }
        for (i, row) in b.iter().enumerate() {
            if row.len() != trellis.num_edges() {
                return Err(Error::DimensionMismatch(format!(
                    "metric row {i} has {} entries, expected {}",
                    row.len(),
                    trellis.num_edges()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedInput(format!(
                    "non-finite branch metric in section {i}"
                )));
            }
        }
        Ok(Self { b })
    }

    /// Number of sections.
    pub fn len(&self) -> usize {
        self.b.len()
    }

    /// True when the metric covers no sections.
    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Cost of edge `e` in section `i`.
    pub fn get(&self, i: usize, e: usize) -> f64 {
        self.b[i][e]
    }

    /// One section's costs.
    pub fn section(&self, i: usize) -> &[f64] {
        &self.b[i]
    }

    /// Sum of absolute values over all sections and edges; appears in the
    /// epsilon term of the duality-gap bound.
    pub fn abs_sum(&self) -> f64 {
        self.b.iter().flatten().map(|v| v.abs()).sum()
    }

    /// Total cost along an edge path.
    pub fn path_cost(&self, path: &[usize]) -> f64 {
        path.iter()
            .enumerate()
            .map(|(i, &e)| self.b[i][e])
            .sum()
    }
}

/// AWGN branch metrics `b_{i,e} = (y_i - a(e))^2`. With `include_p0` the
/// first section additionally carries `-ln P0(s(e))`, using
/// [`ZERO_PROB_SURROGATE`] for zero-probability states.
pub fn awgn_metrics(trellis: &Trellis, y: &[f64], include_p0: bool) -> Result<BranchMetrics> {
    scaled_awgn_metrics(trellis, y, include_p0, 1.0)
}

/// AWGN metrics scaled by `1/(2 sigma^2)`, i.e. true negative
/// log-likelihoods up to an additive constant.
pub fn awgn_metrics_loglik(
    trellis: &Trellis,
    y: &[f64],
    include_p0: bool,
    sigma: f64,
) -> Result<BranchMetrics> {
    if sigma <= 0.0 {
        return Err(Error::MalformedInput(
            "likelihood scaling needs sigma > 0".into(),
        ));
    }
    scaled_awgn_metrics(trellis, y, include_p0, 1.0 / (2.0 * sigma * sigma))
}

fn scaled_awgn_metrics(
    trellis: &Trellis,
    y: &[f64],
    include_p0: bool,
    scale: f64,
) -> Result<BranchMetrics> {
    if y.len() != trellis.len() {
        return Err(Error::DimensionMismatch(format!(
            "received vector of length {} on a length-{} trellis",
            y.len(),
            trellis.len()
        )));
    }
    let b = y
        .iter()
        .enumerate()
        .map(|(i, &yi)| {
            trellis
                .section()
                .iter()
                .map(|edge| {
                    let d = yi - edge.output;
                    let mut cost = scale * d * d;
                    if include_p0 && i == 0 {
                        cost += neg_ln_p0(trellis.initial_dist()[edge.from]);
                    }
                    cost
                })
                .collect()
        })
        .collect();
    BranchMetrics::from_raw(trellis, b)
}

/// General metrics from per-edge negative log-likelihoods
/// `-ln P(y_i, s'(e) | x(e), s(e))`, plus the first-section initial-state
/// term when `include_p0` is set.
pub fn general_metrics(
    trellis: &Trellis,
    loglik: &[Vec<f64>],
    include_p0: bool,
) -> Result<BranchMetrics> {
    let mut b = loglik.to_vec();
    if include_p0 {
        if let Some(first) = b.first_mut() {
            for (e, cost) in first.iter_mut().enumerate() {
                *cost += neg_ln_p0(trellis.initial_dist()[trellis.edge(e).from]);
            }
        }
    }
    BranchMetrics::from_raw(trellis, b)
}

fn neg_ln_p0(p: f64) -> f64 {
    if p > 0.0 {
        -p.ln()
    } else {
        ZERO_PROB_SURROGATE
    }
}
