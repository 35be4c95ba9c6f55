//! Viterbi detection with perfect channel knowledge.
//!
//! [`CoherentVa`] knows only the channel DFT. Its trellis pairs the encoder
//! state with the quarter-turn phase of the previous DQPSK symbol, so each
//! branch fixes the absolute transmitted symbol.
//!
//! [`PhaseReferencedVa`] knows the channel DFT and the previous transmitted
//! symbol, i.e. the product `H_k S_{k-1}` that the predictive receivers
//! estimate. Each dibit then selects one of four known constellation points and
//! the trellis is the bare encoder trellis. This is the `coherent` detector.

use num_complex::Complex64;

use super::viterbi::{self, Pred, Topology};
use super::{Detector, StartKnowledge};
use crate::channel::ReceivedFrame;
use crate::coding::{rotate_quarter, EncoderTrellis, QpskSymbol};

#[derive(Clone, Debug)]
pub struct CoherentVa {
    encoder_states: usize,
    delay: usize,
    reference: QpskSymbol,
    start: StartKnowledge,
    topology: Topology,
    /// Phase (quarter turns) of the symbol each branch transmits.
    branch_turns: Vec<u8>,
}

impl CoherentVa {
    pub fn new(enc: &EncoderTrellis, delay: usize, reference: QpskSymbol) -> Self {
        let ns = enc.num_states() * 4;
        let mut preds = vec![Vec::new(); ns];
        let mut branch_turns = Vec::with_capacity(ns * 2);
        for from in 0..ns {
            let (e, q) = (from / 4, (from % 4) as u8);
            for input in 0..2u8 {
                let q_next = (q + enc.out_dibit(e, input).quarter_turns()) & 3;
                let to = enc.next_state(e, input) * 4 + q_next as usize;
                preds[to].push(Pred {
                    from,
                    input,
                    branch: branch_turns.len(),
                });
                branch_turns.push(q_next);
            }
        }
        Self {
            encoder_states: enc.num_states(),
            delay,
            reference,
            start: StartKnowledge::default(),
            topology: Topology::new(ns, branch_turns.len(), preds),
            branch_turns,
        }
    }

    pub fn with_start(mut self, start: StartKnowledge) -> Self {
        self.start = start;
        self
    }

    pub fn num_states(&self) -> usize {
        self.encoder_states * 4
    }
}

impl Detector for CoherentVa {
    fn name(&self) -> &str {
        "coherent-diff"
    }

    fn detect(&self, frame: &ReceivedFrame) -> Vec<u8> {
        // The previous-symbol phase starts at the reference (zero turns).
        let initial: Vec<f64> = (0..self.num_states())
            .map(|n| {
                let phase_ok = n % 4 == 0;
                if phase_ok && start_allows(self.start, n / 4) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let candidates: [Complex64; 4] = [0u8, 1, 2, 3].map(|q| self.reference.rotate_quarter(q).value());
        let mut per_phase = [0.0f64; 4];
        viterbi::decode(&self.topology, &initial, frame.len(), self.delay, |k, out| {
            for (q, s) in candidates.iter().enumerate() {
                per_phase[q] = distance(frame, k, |h| h * s);
            }
            for (slot, &q) in out.iter_mut().zip(&self.branch_turns) {
                *slot = per_phase[q as usize];
            }
        })
        .bits
    }
}

#[derive(Clone, Debug)]
pub struct PhaseReferencedVa {
    delay: usize,
    reference: QpskSymbol,
    start: StartKnowledge,
    topology: Topology,
    /// Phase increment (quarter turns) of each branch's dibit.
    branch_turns: Vec<u8>,
}

impl PhaseReferencedVa {
    pub fn new(enc: &EncoderTrellis, delay: usize, reference: QpskSymbol) -> Self {
        let ns = enc.num_states();
        let mut preds = vec![Vec::new(); ns];
        let mut branch_turns = Vec::with_capacity(ns * 2);
        for from in 0..ns {
            for input in 0..2u8 {
                preds[enc.next_state(from, input)].push(Pred {
                    from,
                    input,
                    branch: branch_turns.len(),
                });
                branch_turns.push(enc.out_dibit(from, input).quarter_turns());
            }
        }
        Self {
            delay,
            reference,
            start: StartKnowledge::default(),
            topology: Topology::new(ns, branch_turns.len(), preds),
            branch_turns,
        }
    }

    pub fn with_start(mut self, start: StartKnowledge) -> Self {
        self.start = start;
        self
    }
}

impl Detector for PhaseReferencedVa {
    fn name(&self) -> &str {
        "coherent"
    }

    fn detect(&self, frame: &ReceivedFrame) -> Vec<u8> {
        let initial: Vec<f64> = (0..self.topology.num_states())
            .map(|n| if start_allows(self.start, n) { 0.0 } else { f64::INFINITY })
            .collect();
        let mut per_turn = [0.0f64; 4];
        viterbi::decode(&self.topology, &initial, frame.len(), self.delay, |k, out| {
            let prev = if k == 0 { self.reference.value() } else { frame.symbols[k - 1] };
            for (q, slot) in per_turn.iter_mut().enumerate() {
                let s = rotate_quarter(prev, q as u8);
                *slot = distance(frame, k, |h| h * s);
            }
            for (slot, &q) in out.iter_mut().zip(&self.branch_turns) {
                *slot = per_turn[q as usize];
            }
        })
        .bits
    }
}

fn start_allows(start: StartKnowledge, encoder_state: usize) -> bool {
    match start {
        StartKnowledge::Unknown => true,
        StartKnowledge::EncoderState(s) => encoder_state == s,
    }
}

/// `sum_l |Y_{k,l} - expected(H_{k,l})|^2`.
fn distance(frame: &ReceivedFrame, k: usize, expected: impl Fn(Complex64) -> Complex64) -> f64 {
    frame.y.iter().zip(&frame.h).map(|(y, h)| (y[k] - expected(h[k])).norm_sqr()).sum()
}
