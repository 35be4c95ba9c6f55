//! Quick oracle checks runnable from the command line.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::config::RunConfig;
use super::sweep::PointSimulator;
use crate::channel::{dft, noise_variance_for_snr, Direction, SystemParams};
use crate::coding::{build_encoder_trellis, qpsk_map, EncoderSpec, QpskSymbol};
use crate::detectors::{coded_candidates, exhaustive_predictive_ml, DetectorRegistry, PredictiveVa, TransientMode};
use crate::error::Result;
use crate::prediction::{autocovariance_matrix, design_predictors, r_hh, whitening_factors, AutocorrModel};
use crate::supertrellis::{build_full_supertrellis, build_reduced_supertrellis};

pub const SUPERTRELLIS_P1_GOLDEN: &str = include_str!("../../tests/golden/supertrellis_p1.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Parameters of the short-frame exhaustive comparison.
pub fn short_frame_params() -> SystemParams {
    SystemParams {
        fft_size: 8,
        channel_taps: 3,
        cyclic_prefix: 2,
        prediction_order: 2,
        decoding_delay: 8,
        ..SystemParams::default()
    }
}

/// Counts frames on which the weighted-transient Viterbi decoder with full
/// traceback returns the exhaustive minimizer.
pub fn oracle_agreement(snr_db: f64, order: usize, frames: u64, seed: u64) -> Result<(u64, u64)> {
    let params = short_frame_params();
    let cfg = RunConfig {
        params: params.clone(),
        detectors: vec!["coherent".into()],
        master_seed: seed,
        ..RunConfig::default()
    };
    let sim = PointSimulator::new(&cfg, &DetectorRegistry::with_defaults(), snr_db)?;
    let enc = build_encoder_trellis(params.encoder)?;
    let model = AutocorrModel::new(&params, noise_variance_for_snr(snr_db, &params)?);
    let w = whitening_factors(&model, params.fft_size)?;
    let va = PredictiveVa::new(build_reduced_supertrellis(&enc, order)?, design_predictors(&model, order)?, params.fft_size)?
        .with_mode(TransientMode::Weighted);
    let candidates = coded_candidates(&enc, 0, params.fft_size, QpskSymbol::REFERENCE)?;
    let mut agree = 0;
    for i in 0..frames {
        let (_, _, frame) = sim.transmit(i)?;
        let best = exhaustive_predictive_ml(&frame, &candidates, &w, Some(order))?;
        if va.run(&frame).bits == best.bits {
            agree += 1;
        }
    }
    Ok((agree, frames))
}

pub fn run_selftest() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let enc = build_encoder_trellis(EncoderSpec::default_rsc())?;

    let table = build_full_supertrellis(&enc, 1, qpsk_map)?.dump_table();
    out.push(check("supertrellis-golden", table == SUPERTRELLIS_P1_GOLDEN, "P=1 unnormalized supertrellis".into()));

    let counts: Vec<usize> = (1..=3)
        .map(|p| build_reduced_supertrellis(&enc, p).map(|t| t.num_states()))
        .collect::<Result<_>>()?;
    out.push(check("reduced-state-counts", counts == [4, 8, 16], format!("{counts:?}")));

    let params = SystemParams::default();
    let mut worst = 0.0f64;
    for snr in [0.0, 8.0, 17.0] {
        let model = AutocorrModel::new(&params, noise_variance_for_snr(snr, &params)?);
        let set = design_predictors(&model, 8)?;
        for p in 1..=8 {
            let phi = autocovariance_matrix(&model, p + 1);
            let a = phi.view((1, 1), (p, p)).into_owned();
            let rhs = -phi.view((1, 0), (p, 1)).into_owned();
            if let Some(x) = a.lu().solve(&rhs) {
                for j in 1..=p {
                    worst = worst.max((set.coeffs(p)[j] - x[j - 1]).norm());
                }
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    out.push(check("levinson-vs-dense", worst < 1e-9, format!("max deviation {worst:.2e}")));

    let model = AutocorrModel::new(&params, noise_variance_for_snr(8.0, &params)?);
    let w = whitening_factors(&model, 8)?;
    let dinv = DMatrix::from_diagonal(&w.d.map(|v| Complex64::new(1.0 / v, 0.0)));
    let ident = w.b.adjoint() * dinv * &w.b * autocovariance_matrix(&model, 8);
    let resid = (ident - DMatrix::identity(8, 8)).norm();
    out.push(check("whitening-identity", resid < 1e-8, format!("residual {resid:.2e}")));

    let mut worst = 0.0f64;
    for m in 1..64i64 {
        let x = std::f64::consts::PI * m as f64 / 1024.0;
        let closed = Complex64::from_polar(0.5, -x * 9.0) * ((10.0 * x).sin() / x.sin());
        worst = worst.max((r_hh(m, &model) - closed).norm());
    }
    out.push(check("autocorrelation-closed-form", worst < 1e-12, format!("max deviation {worst:.2e}")));

    let x: Vec<Complex64> = (0..1024).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.37).cos())).collect();
    let back = dft(&dft(&x, 1024, Direction::Forward)?, 1024, Direction::Inverse)?;
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    out.push(check("dft-round-trip", err < 1e-10, format!("max error {err:.2e}")));

    let cfg = RunConfig::default();
    let sim = PointSimulator::with_noise_variance(&cfg, &DetectorRegistry::with_defaults(), 0.0)?;
    let mut errors = 0;
    for i in 0..20 {
        errors += sim.simulate_frame(i)?.outputs.iter().map(|(_, o)| o.bit_errors).sum::<usize>();
    }
    out.push(check("noiseless-decoding", errors == 0, format!("{errors} errors over 20 frames")));

    let (agree, total) = oracle_agreement(8.0, 2, 50, 7)?;
    out.push(check("exhaustive-equivalence", agree == total, format!("{agree}/{total} frames")));

    Ok(out)
}
