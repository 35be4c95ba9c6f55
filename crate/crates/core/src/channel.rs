//! OFDM modulation over a quasi-static Rayleigh channel with receive diversity.

use std::cell::RefCell;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coding::{EncoderSpec, QpskSymbol};
use crate::error::{Error, Result};

/// Scalar configuration of the link. The noise variance is not stored here;
/// it is derived per SNR point with [`noise_variance_for_snr`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// FFT size `L_d`, also the number of data bits per frame.
    pub fft_size: usize,
    /// Channel impulse response length `L_h`.
    pub channel_taps: usize,
    /// Cyclic prefix length `L_CP`.
    pub cyclic_prefix: usize,
    /// Receive antennas `N_r`.
    pub receive_antennas: usize,
    /// Per-dimension variance of every channel tap.
    pub fade_variance: f64,
    /// Predictor order `P` for single-order detectors.
    pub prediction_order: usize,
    /// Viterbi decision delay `D'_v`.
    pub decoding_delay: usize,
    #[serde(skip, default)]
    pub encoder: EncoderSpec,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            channel_taps: 10,
            cyclic_prefix: 9,
            receive_antennas: 4,
            fade_variance: 0.5,
            prediction_order: 3,
            decoding_delay: 30,
            encoder: EncoderSpec::default_rsc(),
        }
    }
}

impl SystemParams {
    /// Time-domain frame length including the cyclic prefix.
    pub fn frame_len(&self) -> usize {
        self.fft_size + self.cyclic_prefix
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.fft_size));
        }
        if self.channel_taps == 0 || self.channel_taps > self.fft_size {
            return Err(Error::InvalidParams(format!(
                "channel length {} must be in 1..={}",
                self.channel_taps, self.fft_size
            )));
        }
        if self.cyclic_prefix + 1 < self.channel_taps {
            return Err(Error::InvalidParams(format!(
                "cyclic prefix {} shorter than channel memory {}",
                self.cyclic_prefix,
                self.channel_taps - 1
            )));
        }
        if self.receive_antennas == 0 {
            return Err(Error::InvalidParams("need at least one receive antenna".into()));
        }
        if !(self.fade_variance > 0.0) {
            return Err(Error::InvalidParams("fade variance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_in_place(buf: &mut [Complex64], direction: Direction) {
    let n = buf.len();
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        fft.process(buf);
    });
    if direction == Direction::Inverse {
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Unnormalized forward DFT; the inverse carries the `1/size` factor.
pub fn dft(x: &[Complex64], size: usize, direction: Direction) -> Result<Vec<Complex64>> {
    if !size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(size));
    }
    if x.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            actual: x.len(),
        });
    }
    let mut buf = x.to_vec();
    transform_in_place(&mut buf, direction);
    Ok(buf)
}

/// Impulse responses `taps[antenna][delay]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn num_antennas(&self) -> usize {
        self.taps.len()
    }

    pub fn num_taps(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }
}

/// Complex Gaussian sample with per-dimension variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sigma = variance.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sigma, im * sigma)
}

/// Independent Rayleigh taps with a uniform power delay profile.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams) -> ChannelRealization {
    let taps = (0..params.receive_antennas)
        .map(|_| {
            (0..params.channel_taps)
                .map(|_| complex_gaussian(rng, params.fade_variance))
                .collect()
        })
        .collect();
    ChannelRealization { taps }
}

/// `H[l][k] = sum_i h[l][i] exp(-j 2 pi i k / fft_size)`, evaluated directly.
pub fn channel_dft(ch: &ChannelRealization, fft_size: usize) -> Vec<Vec<Complex64>> {
    let step = -2.0 * std::f64::consts::PI / fft_size as f64;
    let twiddle: Vec<Complex64> = (0..fft_size)
        .map(|m| Complex64::from_polar(1.0, step * m as f64))
        .collect();
    ch.taps
        .iter()
        .map(|taps| {
            (0..fft_size)
                .map(|k| {
                    taps.iter()
                        .enumerate()
                        .map(|(i, h)| h * twiddle[(i * k) % fft_size])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// DFT-domain observations of one frame on every receive antenna.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedFrame {
    /// `y[antenna][subcarrier]`
    pub y: Vec<Vec<Complex64>>,
    /// True channel DFT, only used by the coherent baselines and diagnostics.
    pub h: Vec<Vec<Complex64>>,
    /// Transmitted subcarrier symbols, only used by the phase-referenced
    /// coherent baseline.
    pub symbols: Vec<Complex64>,
}

impl ReceivedFrame {
    pub fn num_antennas(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies `f` to every observation, leaving the channel untouched.
    pub fn map_observations(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            y: self.y.iter().map(|arm| arm.iter().map(|&z| f(z)).collect()).collect(),
            h: self.h.clone(),
            symbols: self.symbols.clone(),
        }
    }
}

/// Runs the full time-domain pipeline: IFFT, cyclic prefix, per-antenna
/// linear convolution, AWGN on every transmitted sample, prefix removal, FFT.
pub fn transmit_through<R: Rng + ?Sized>(
    symbols: &[QpskSymbol],
    ch: &ChannelRealization,
    params: &SystemParams,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let n = params.fft_size;
    if symbols.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: symbols.len(),
        });
    }
    if ch.num_taps() > params.cyclic_prefix + 1 {
        return Err(Error::InvalidParams(format!(
            "{} channel taps exceed the cyclic prefix",
            ch.num_taps()
        )));
    }
    let cp = params.cyclic_prefix;
    let frame_len = n + cp;

    let mut time: Vec<Complex64> = symbols.iter().map(|s| s.value()).collect();
    transform_in_place(&mut time, Direction::Inverse);
    let mut tx = Vec::with_capacity(frame_len);
    tx.extend_from_slice(&time[n - cp..]);
    tx.extend_from_slice(&time);

    let sigma = noise_variance.max(0.0).sqrt();
    let mut y = Vec::with_capacity(ch.num_antennas());
    let mut rx = vec![Complex64::default(); frame_len];
    for taps in &ch.taps {
        for (t, out) in rx.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (i, h) in taps.iter().enumerate().take(t + 1) {
                acc += h * tx[t - i];
            }
            *out = acc;
        }
        // Noise is always drawn so the random stream does not depend on the SNR.
        for out in rx.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *out += Complex64::new(re * sigma, im * sigma);
        }
        let mut body = rx[cp..].to_vec();
        transform_in_place(&mut body, Direction::Forward);
        y.push(body);
    }

    Ok(ReceivedFrame {
        y,
        h: channel_dft(ch, n),
        symbols: symbols.iter().map(|s| s.value()).collect(),
    })
}

/// Per-dimension time-domain noise variance giving the requested average
/// SNR per bit per receive arm: `N_r * L_h * sigma_f^2 / (L_d * snr)`.
pub fn noise_variance_for_snr(snr_db: f64, params: &SystemParams) -> Result<f64> {
    let snr = 10f64.powf(snr_db / 10.0);
    if !(snr > 0.0) {
        return Err(Error::InvalidParams(format!("SNR {snr_db} dB is not positive")));
    }
    Ok(params.receive_antennas as f64 * params.channel_taps as f64 * params.fade_variance
        / (params.fft_size as f64 * snr))
}
