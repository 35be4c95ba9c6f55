//! Predictive Viterbi detection on the reduced supertrellis.

use num_complex::Complex64;

use super::viterbi::{self, Pred, Topology, ViterbiOutcome};
use super::{Detector, StartKnowledge};
use crate::channel::ReceivedFrame;
use crate::coding::rotate_quarter;
use crate::error::{Error, Result};
use crate::prediction::PredictorSet;
use crate::supertrellis::ReducedSupertrellis;

/// How the first `P` stages, where fewer than `P` past samples exist, are scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TransientMode {
    /// Stages `k < P` contribute nothing; later stages use the unweighted
    /// order-`P` prediction error.
    #[default]
    SteadyStateOnly,
    /// Stage `k` uses the order-`min(k, P)` predictor weighted by
    /// `1 / (2 sigma_e^2)` of that order.
    Weighted,
}

/// `sum_l |sum_j a_j Y_{k-j,l} e^{j Phi_j}|^2`.
pub fn predictive_branch_metric(
    y_window: &[Vec<Complex64>],
    coeffs: &[Complex64],
    phase_ratios: &[Complex64],
) -> Result<f64> {
    let taps = coeffs.len();
    if phase_ratios.len() < taps {
        return Err(Error::DimensionMismatch {
            expected: taps,
            actual: phase_ratios.len(),
        });
    }
    let mut total = 0.0;
    for arm in y_window {
        if arm.len() < taps {
            return Err(Error::DimensionMismatch {
                expected: taps,
                actual: arm.len(),
            });
        }
        let z: Complex64 = (0..taps).map(|j| coeffs[j] * arm[j] * phase_ratios[j]).sum();
        total += z.norm_sqr();
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct PredictiveVa {
    name: String,
    trellis: ReducedSupertrellis,
    predictors: PredictorSet,
    delay: usize,
    mode: TransientMode,
    start: StartKnowledge,
    topology: Topology,
    /// Flattened `phase_turns` per branch, `P + 1` entries each.
    turns: Vec<u8>,
}

impl PredictiveVa {
    pub fn new(trellis: ReducedSupertrellis, predictors: PredictorSet, delay: usize) -> Result<Self> {
        let order = trellis.order();
        if predictors.order() < order {
            return Err(Error::UnsupportedOrder(order));
        }
        let preds = (0..trellis.num_states())
            .map(|n| {
                trellis
                    .incoming(n)
                    .iter()
                    .map(|&b| {
                        let br = &trellis.branches()[b];
                        Pred {
                            from: br.from,
                            input: br.input,
                            branch: b,
                        }
                    })
                    .collect()
            })
            .collect();
        let topology = Topology::new(trellis.num_states(), trellis.branches().len(), preds);
        let turns = trellis
            .branches()
            .iter()
            .flat_map(|b| b.phase_turns.iter().copied())
            .collect();
        Ok(Self {
            name: format!("p{order}"),
            trellis,
            predictors,
            delay,
            mode: TransientMode::default(),
            start: StartKnowledge::default(),
            topology,
            turns,
        })
    }

    pub fn with_mode(mut self, mode: TransientMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_start(mut self, start: StartKnowledge) -> Self {
        self.start = start;
        self
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn trellis(&self) -> &ReducedSupertrellis {
        &self.trellis
    }

    fn initial_metrics(&self) -> Vec<f64> {
        (0..self.trellis.num_states())
            .map(|n| match self.start {
                StartKnowledge::Unknown => 0.0,
                StartKnowledge::EncoderState(s) if self.trellis.encoder_state(n) == s => 0.0,
                StartKnowledge::EncoderState(_) => f64::INFINITY,
            })
            .collect()
    }

    /// Full Viterbi run, including the final path metric.
    pub fn run(&self, frame: &ReceivedFrame) -> ViterbiOutcome {
        let order = self.trellis.order();
        let stride = order + 1;
        let arms = frame.num_antennas();
        let steps = frame.len();
        // rotated[(l * stride + j) * 4 + q] = a_j * Y_{k-j,l} * j^q
        let mut rotated = vec![Complex64::default(); arms * stride * 4];

        viterbi::decode(&self.topology, &self.initial_metrics(), steps, self.delay, |k, out| {
            let (used, weight) = match self.mode {
                TransientMode::SteadyStateOnly if k < order => {
                    out.fill(0.0);
                    return;
                }
                TransientMode::SteadyStateOnly => (order, 1.0),
                TransientMode::Weighted => {
                    let p = k.min(order);
                    (p, 0.5 / self.predictors.err_var(p))
                }
            };
            let coeffs = self.predictors.coeffs(used);
            for (l, arm) in frame.y.iter().enumerate() {
                for (j, a) in coeffs.iter().enumerate() {
                    let base = a * arm[k - j];
                    for q in 0..4u8 {
                        rotated[(l * stride + j) * 4 + q as usize] = rotate_quarter(base, q);
                    }
                }
            }
            for (b, slot) in out.iter_mut().enumerate() {
                let turns = &self.turns[b * stride..b * stride + used + 1];
                let mut total = 0.0;
                for l in 0..arms {
                    let base = l * stride * 4;
                    let mut z = Complex64::default();
                    for (j, &q) in turns.iter().enumerate() {
                        z += rotated[base + j * 4 + q as usize];
                    }
                    total += z.norm_sqr();
                }
                *slot = total * weight;
            }
        })
    }
}

impl Detector for PredictiveVa {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, frame: &ReceivedFrame) -> Vec<u8> {
        self.run(frame).bits
    }
}
