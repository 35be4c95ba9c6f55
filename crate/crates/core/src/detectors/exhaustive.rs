//! Brute-force predictive maximum-likelihood detection for short frames.
//!
//! Every candidate symbol sequence is de-rotated out of the observations,
//! whitened by the predictor matrix `B`, and scored by
//! `sum_l sum_k |z_k|^2 / (2 D_k)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ReceivedFrame;
use crate::coding::{conv_encode, diff_encode, EncoderTrellis, QpskSymbol};
use crate::error::{Error, Result};
use crate::prediction::WhiteningFactors;

/// Longest frame the oracle accepts.
pub const MAX_EXHAUSTIVE_LEN: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

/// Every data word of length `len`, encoded from `start_state` and
/// differentially mapped from `reference`.
pub fn coded_candidates(
    enc: &EncoderTrellis,
    start_state: usize,
    len: usize,
    reference: QpskSymbol,
) -> Result<Vec<Candidate>> {
    if len > MAX_EXHAUSTIVE_LEN {
        return Err(Error::ExhaustiveBudget(len));
    }
    Ok((0..1usize << len)
        .map(|word| {
            let bits: Vec<u8> = (0..len).map(|k| ((word >> (len - 1 - k)) & 1) as u8).collect();
            let (dibits, _) = conv_encode(&bits, enc, start_state);
            let symbols = diff_encode(&dibits, reference).into_iter().map(|s| s.value()).collect();
            Candidate { bits, symbols }
        })
        .collect())
}

/// Whitening rows actually applied by the oracle.
///
/// With `steady_order = Some(P)`, rows `k >= P` are replaced by the order-`P`
/// predictor shifted along the diagonal, and their variance by `sigma_{e,P}^2`.
/// `None` keeps the full factorization.
pub fn effective_whitening(w: &WhiteningFactors, steady_order: Option<usize>) -> (DMatrix<Complex64>, DVector<f64>) {
    let dim = w.dim();
    let Some(p) = steady_order.filter(|&p| p < dim) else {
        return (w.b.clone(), w.d.clone());
    };
    let mut b = w.b.clone();
    let mut d = w.d.clone();
    for k in p + 1..dim {
        for c in 0..dim {
            b[(k, c)] = Complex64::default();
        }
        for j in 0..=p {
            b[(k, k - j)] = w.b[(p, p - j)];
        }
        d[k] = w.d[p];
    }
    (b, d)
}

/// `sum_l sum_k |(B S^{-1} Y_l)_k|^2 / (2 d_k)`.
pub fn predictive_ml_metric(frame: &ReceivedFrame, symbols: &[Complex64], b: &DMatrix<Complex64>, d: &DVector<f64>) -> f64 {
    let n = symbols.len();
    let mut total = 0.0;
    for arm in &frame.y {
        let x = DVector::from_iterator(n, arm.iter().zip(symbols).map(|(y, s)| y / s));
        let z = b * x;
        total += z.iter().zip(d.iter()).map(|(z, d)| z.norm_sqr() / (2.0 * d)).sum::<f64>();
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveDecision {
    pub index: usize,
    pub bits: Vec<u8>,
    pub metric: f64,
    /// Smallest metric gap to any other candidate (infinite with one candidate).
    pub margin: f64,
}

pub fn exhaustive_predictive_ml(
    frame: &ReceivedFrame,
    candidates: &[Candidate],
    w: &WhiteningFactors,
    steady_order: Option<usize>,
) -> Result<ExhaustiveDecision> {
    let len = frame.len();
    if len > MAX_EXHAUSTIVE_LEN {
        return Err(Error::ExhaustiveBudget(len));
    }
    if w.dim() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: w.dim(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::InvalidParams("no candidates".into()));
    }
    let (b, d) = effective_whitening(w, steady_order);
    let metrics: Vec<f64> = candidates
        .iter()
        .map(|c| predictive_ml_metric(frame, &c.symbols, &b, &d))
        .collect();
    let index = super::viterbi::argmin(&metrics);
    let margin = metrics
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, m)| m - metrics[index])
        .fold(f64::INFINITY, f64::min);
    Ok(ExhaustiveDecision {
        index,
        bits: candidates[index].bits.clone(),
        metric: metrics[index],
        margin,
    })
}
