//! Closed-form channel statistics and optimal linear predictors.
//!
//! `X_k = Y_k / S_k` is a stationary complex process along the subcarrier
//! axis. Its autocorrelation `R_m = E[X_k X*_{k-m}] / 2` is known exactly
//! from the channel and noise statistics, so predictors of every order come
//! from one Levinson recursion over the Hermitian Toeplitz normal equations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::SystemParams;
use crate::error::{Error, Result};

/// Smallest admissible ratio of prediction-error power to `R_0`.
const CONDITION_LIMIT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocorrModel {
    pub fade_variance: f64,
    pub channel_taps: usize,
    pub fft_size: usize,
    pub noise_variance: f64,
    pub symbol_energy: f64,
}

impl AutocorrModel {
    pub fn new(params: &SystemParams, noise_variance: f64) -> Self {
        Self {
            fade_variance: params.fade_variance,
            channel_taps: params.channel_taps,
            fft_size: params.fft_size,
            noise_variance,
            symbol_energy: 1.0,
        }
    }
}

/// Channel-DFT autocorrelation at subcarrier lag `m`, summed term by term.
pub fn r_hh(m: i64, model: &AutocorrModel) -> Complex64 {
    let n = model.fft_size as i64;
    let step = -2.0 * PI / model.fft_size as f64;
    (0..model.channel_taps as i64)
        .map(|tap| Complex64::from_polar(1.0, step * (tap * m).rem_euclid(n) as f64))
        .sum::<Complex64>()
        * model.fade_variance
}

/// Autocorrelation of `X = Y/S`: the channel term plus white noise at lag 0.
pub fn r_xx(m: i64, model: &AutocorrModel) -> Complex64 {
    let mut r = r_hh(m, model);
    if m == 0 {
        r += model.noise_variance * model.fft_size as f64 / model.symbol_energy;
    }
    r
}

/// Predictors of every order `0..=order`.
///
/// `coeffs[p]` has `p + 1` entries with `coeffs[p][0] == 1`; the prediction
/// error of order `p` is `sum_j coeffs[p][j] * X_{k-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorSet {
    coeffs: Vec<Vec<Complex64>>,
    err_var: Vec<f64>,
}

impl PredictorSet {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self, p: usize) -> &[Complex64] {
        &self.coeffs[p]
    }

    /// One-dimensional prediction error variance of order `p`.
    pub fn err_var(&self, p: usize) -> f64 {
        self.err_var[p]
    }

    pub fn err_vars(&self) -> &[f64] {
        &self.err_var
    }
}

/// Solves the normal equations for all orders up to `order` by the complex
/// (Hermitian) Levinson recursion.
pub fn design_predictors(model: &AutocorrModel, order: usize) -> Result<PredictorSet> {
    let r: Vec<Complex64> = (0..=order as i64).map(|m| r_xx(m, model)).collect();
    let r0 = r[0].re;
    if !(r0 > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }

    let mut coeffs = vec![vec![Complex64::new(1.0, 0.0)]];
    let mut err_var = vec![r0];
    let mut power = r0;
    for p in 1..=order {
        let prev = &coeffs[p - 1];
        let delta: Complex64 = (0..p).map(|j| prev[j] * r[p - j]).sum();
        let reflection = -delta / power;
        let mut next = prev.clone();
        next.push(Complex64::default());
        for j in 1..=p {
            next[j] = prev.get(j).copied().unwrap_or_default() + reflection * prev[p - j].conj();
        }
        power *= 1.0 - reflection.norm_sqr();
        if !(power > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        if power / r0 < CONDITION_LIMIT {
            return Err(Error::IllConditioned {
                order: p,
                ratio: power / r0,
            });
        }
        // Error variance from the coefficients themselves: sum_j a_j R_{-j}.
        let sigma2: Complex64 = next
            .iter()
            .enumerate()
            .map(|(j, a)| a * r[j].conj())
            .sum();
        debug_assert!(sigma2.im.abs() <= 1e-10 * r0, "imaginary error variance {sigma2}");
        err_var.push(sigma2.re);
        coeffs.push(next);
    }
    Ok(PredictorSet { coeffs, err_var })
}

/// `sum_j coeffs[j] * window[j]` where `window[j] = X_{k-j}`.
pub fn prediction_error(window: &[Complex64], coeffs: &[Complex64]) -> Result<Complex64> {
    if window.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.len(),
            actual: window.len(),
        });
    }
    Ok(window.iter().zip(coeffs).map(|(x, a)| x * a).sum())
}

/// `Phi[i][k] = R_{i-k}` for `i, k < dim`.
pub fn autocovariance_matrix(model: &AutocorrModel, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, k| r_xx(i as i64 - k as i64, model))
}

/// `Phi^{-1} = B^H D^{-1} B` with `B` unit lower triangular.
///
/// Row `p` of `B` holds the order-`p` predictor reversed,
/// `[a_{p,p}, .., a_{p,1}, 1, 0, ..]`, and `D` the matching error variances.
#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningFactors {
    pub b: DMatrix<Complex64>,
    pub d: DVector<f64>,
}

impl WhiteningFactors {
    pub fn dim(&self) -> usize {
        self.d.len()
    }
}

pub fn whitening_factors(model: &AutocorrModel, dim: usize) -> Result<WhiteningFactors> {
    if dim == 0 {
        return Err(Error::InvalidParams("whitening dimension must be positive".into()));
    }
    let ladder = design_predictors(model, dim - 1).map_err(|e| match e {
        Error::IllConditioned { .. } => Error::NotPositiveDefinite,
        other => other,
    })?;
    let mut b = DMatrix::zeros(dim, dim);
    for p in 0..dim {
        for (j, a) in ladder.coeffs(p).iter().enumerate() {
            b[(p, p - j)] = *a;
        }
    }
    let d = DVector::from_iterator(dim, ladder.err_vars().iter().copied());
    Ok(WhiteningFactors { b, d })
}
