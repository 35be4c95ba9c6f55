//! Monte-Carlo BER estimation, sharded by frame.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::channel::{draw_channel, noise_variance_for_snr, transmit_through, ChannelRealization, ReceivedFrame, SystemParams};
use crate::coding::{build_encoder_trellis, conv_encode, diff_encode, EncoderTrellis, QpskSymbol};
use crate::detectors::{build_detectors, Detector, DetectorOutput, DetectorRegistry};
use crate::error::{Error, Result};

/// Early stopping needs at least this many errors...
const EARLY_STOP_ERRORS: u64 = 500;
/// ...over at least this many tenths of the requested frames.
const EARLY_STOP_CHUNKS: usize = 1;
const CHUNKS: usize = 10;

/// Independent random stream for one frame. Depends only on the master seed
/// and the frame index, so every SNR point and detector sees the same data,
/// channel and unit-variance noise.
pub fn frame_rng(master_seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame_index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub tx_bits: Vec<u8>,
    pub channel: ChannelRealization,
    pub received: ReceivedFrame,
    /// `(detector name, output)` in configured order.
    pub outputs: Vec<(String, DetectorOutput)>,
}

/// Transmitter, channel and detectors for one SNR point.
pub struct PointSimulator {
    params: SystemParams,
    encoder: EncoderTrellis,
    detectors: Vec<Box<dyn Detector>>,
    noise_variance: f64,
    master_seed: u64,
}

impl PointSimulator {
    pub fn new(cfg: &RunConfig, registry: &DetectorRegistry, snr_db: f64) -> Result<Self> {
        let noise_variance = noise_variance_for_snr(snr_db, &cfg.params)?;
        Self::with_noise_variance(cfg, registry, noise_variance)
    }

    pub fn with_noise_variance(cfg: &RunConfig, registry: &DetectorRegistry, noise_variance: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            params: cfg.params.clone(),
            encoder: build_encoder_trellis(cfg.params.encoder)?,
            detectors: build_detectors(registry, &cfg.detectors, &cfg.params, noise_variance)?,
            noise_variance,
            master_seed: cfg.master_seed,
        })
    }

    pub fn detectors(&self) -> &[Box<dyn Detector>] {
        &self.detectors
    }

    /// Draws data and channel for `frame_index` and pushes them through the link.
    pub fn transmit(&self, frame_index: u64) -> Result<(Vec<u8>, ChannelRealization, ReceivedFrame)> {
        let mut rng = frame_rng(self.master_seed, frame_index);
        let bits: Vec<u8> = (0..self.params.fft_size).map(|_| rng.random_range(0..2u8)).collect();
        let (dibits, _) = conv_encode(&bits, &self.encoder, 0);
        let symbols = diff_encode(&dibits, QpskSymbol::REFERENCE);
        let channel = draw_channel(&mut rng, &self.params);
        let received = transmit_through(&symbols, &channel, &self.params, self.noise_variance, &mut rng)?;
        Ok((bits, channel, received))
    }

    pub fn simulate_frame(&self, frame_index: u64) -> Result<FrameRecord> {
        let (tx_bits, channel, received) = self.transmit(frame_index)?;
        let outputs = self
            .detectors
            .iter()
            .map(|d| (d.name().to_string(), DetectorOutput::new(d.detect(&received), &tx_bits)))
            .collect();
        Ok(FrameRecord {
            frame_index,
            tx_bits,
            channel,
            received,
            outputs,
        })
    }

    /// Bit errors and detection time (seconds) per detector; inactive detectors report zero.
    fn frame_errors(&self, frame_index: u64, active: &[bool]) -> Result<Vec<(u64, f64)>> {
        let (bits, _, received) = self.transmit(frame_index)?;
        Ok(self
            .detectors
            .iter()
            .zip(active)
            .map(|(d, &on)| {
                if !on {
                    return (0, 0.0);
                }
                let start = Instant::now();
                let out = DetectorOutput::new(d.detect(&received), &bits);
                (out.bit_errors as u64, start.elapsed().as_secs_f64())
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub detector: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub seconds: f64,
}

impl BerRecord {
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub fn std_error(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }

    /// `(ber - z*se, ber + z*se)`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let se = self.std_error();
        (self.ber - z * se, self.ber + z * se)
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every configured detector at every SNR point.
pub fn run_ber_sweep(cfg: &RunConfig, registry: &DetectorRegistry) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let pool = pool(cfg.workers)?;
    let frames = cfg.frames_per_point;
    let chunk = frames.div_ceil(CHUNKS);
    let bits_per_frame = cfg.params.fft_size as u64;
    let mut records = Vec::new();

    for &snr_db in &cfg.snr_points_db {
        let sim = PointSimulator::new(cfg, registry, snr_db)?;
        let nd = cfg.detectors.len();
        let mut active = vec![true; nd];
        let mut errors = vec![0u64; nd];
        let mut done = vec![0u64; nd];
        let mut seconds = vec![0.0f64; nd];

        let mut start = 0;
        let mut chunks_done = 0;
        while start < frames && active.iter().any(|&a| a) {
            let end = (start + chunk).min(frames);
            let per_frame: Vec<Vec<(u64, f64)>> = pool.install(|| {
                (start as u64..end as u64)
                    .into_par_iter()
                    .map(|i| sim.frame_errors(i, &active))
                    .collect::<Result<_>>()
            })?;
            for row in &per_frame {
                for (d, &(e, t)) in row.iter().enumerate() {
                    errors[d] += e;
                    seconds[d] += t;
                }
            }
            for d in 0..nd {
                if active[d] {
                    done[d] += (end - start) as u64;
                }
            }
            chunks_done += 1;
            if cfg.early_stop && chunks_done >= EARLY_STOP_CHUNKS {
                for d in 0..nd {
                    if errors[d] >= EARLY_STOP_ERRORS {
                        active[d] = false;
                    }
                }
            }
            start = end;
        }

        for d in 0..nd {
            let bits = done[d] * bits_per_frame;
            let rec = BerRecord {
                detector: cfg.detectors[d].clone(),
                snr_db,
                bits,
                errors: errors[d],
                ber: errors[d] as f64 / bits as f64,
                seconds: if cfg.record_wall_time { seconds[d] } else { 0.0 },
            };
            log::info!(
                "{:>9} @ {:>5.1} dB: {} errors / {} bits, BER {:.3e} +- {:.1e}",
                rec.detector,
                rec.snr_db,
                rec.errors,
                rec.bits,
                rec.ber,
                rec.std_error()
            );
            records.push(rec);
        }
    }
    Ok(records)
}
