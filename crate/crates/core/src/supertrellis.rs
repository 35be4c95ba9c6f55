//! Supertrellises combining encoder memory with prediction-filter memory.
//!
//! The full machine pairs an encoder state with the last `P` input digits, so
//! the filter always holds a valid encoded symbol sequence. With differential
//! encoding the predictive metric only depends on phase differences, and the
//! reduced machine keeps just `P - 1` past input bits per encoder state.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::coding::{rotate_quarter, Dibit, EncoderTrellis, QpskSymbol};
use crate::error::{Error, Result};

/// Inputs per step of a rate-1/2 code.
const N: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    /// Encoder state after the filter contents were encoded.
    pub encoder_state: usize,
    /// Encoder state the filter contents were encoded from.
    pub start_state: usize,
    /// Filter input digits `N_1 ..= N_P`, newest first.
    pub filter_digits: Vec<u8>,
    /// Code digits `S_1 ..= S_P`, newest first.
    pub code_digits: Vec<Dibit>,
    /// Mapped filter symbols, newest first.
    pub symbols: Vec<QpskSymbol>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FullTransition {
    pub next: usize,
    pub code_digit: Dibit,
}

#[derive(Clone, Debug)]
pub struct FullSupertrellis {
    order: usize,
    states: Vec<FullState>,
    transitions: Vec<[FullTransition; N]>,
    mapper: fn(Dibit) -> QpskSymbol,
}

/// Largest order the full supertrellis is built for.
pub const MAX_FULL_ORDER: usize = 16;

/// State index `i * N^P + m`, where `m` reads the filter digits as an
/// `N`-ary number with `N_1` most significant.
pub fn build_full_supertrellis(
    enc: &EncoderTrellis,
    order: usize,
    mapper: fn(Dibit) -> QpskSymbol,
) -> Result<FullSupertrellis> {
    if order > MAX_FULL_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let filter_states = N.pow(order as u32);
    let num_states = enc.num_states() * filter_states;
    let mut states: Vec<Option<FullState>> = vec![None; num_states];

    for start in 0..enc.num_states() {
        for m in 0..filter_states {
            // digits[t-1] = N_t; N_P is the first input fed to the encoder.
            let digits: Vec<u8> = (1..=order).map(|t| ((m >> (order - t)) & 1) as u8).collect();
            let mut state = start;
            let mut code = vec![Dibit::ALL[0]; order];
            for t in (1..=order).rev() {
                code[t - 1] = enc.out_dibit(state, digits[t - 1]);
                state = enc.next_state(state, digits[t - 1]);
            }
            let j = state * filter_states + m;
            if states[j].is_some() {
                return Err(Error::InvalidEncoder(format!(
                    "supertrellis state {j} reached twice; encoder is not backward-unique"
                )));
            }
            states[j] = Some(FullState {
                encoder_state: state,
                start_state: start,
                symbols: code.iter().map(|&d| mapper(d)).collect(),
                filter_digits: digits,
                code_digits: code,
            });
        }
    }
    let states: Vec<FullState> = states.into_iter().map(|s| s.expect("bijective enumeration")).collect();

    let transitions = states
        .iter()
        .enumerate()
        .map(|(j, st)| {
            let m = j % filter_states;
            [0u8, 1].map(|input| {
                let f = enc.next_state(st.encoder_state, input);
                let l = if order == 0 {
                    0
                } else {
                    ((input as usize) << (order - 1)) | (m >> 1)
                };
                FullTransition {
                    next: f * filter_states + l,
                    code_digit: enc.out_dibit(st.encoder_state, input),
                }
            })
        })
        .collect();

    Ok(FullSupertrellis {
        order,
        states,
        transitions,
        mapper,
    })
}

impl FullSupertrellis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, j: usize) -> &FullState {
        &self.states[j]
    }

    pub fn transition(&self, j: usize, input: u8) -> FullTransition {
        self.transitions[j][input as usize]
    }

    /// Symbols `S_0 ..= S_P` seen by the predictor on branch `(j, input)`.
    pub fn branch_symbols(&self, j: usize, input: u8) -> Vec<QpskSymbol> {
        let mut out = vec![(self.mapper)(self.transition(j, input).code_digit)];
        out.extend_from_slice(&self.states[j].symbols);
        out
    }

    /// Transition table as `present input next` rows.
    pub fn dump_table(&self) -> String {
        let mut out = String::from("# present_state input next_state\n");
        for j in 0..self.num_states() {
            for input in 0..N as u8 {
                let _ = writeln!(out, "{} {} {}", j, input, self.transition(j, input).next);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBranch {
    pub from: usize,
    pub input: u8,
    pub to: usize,
    /// Dibits `d_0 ..= d_{P-1}`, current first.
    pub dibits: Vec<Dibit>,
    /// Cumulative phase `Phi_j` in quarter turns for `j = 0 ..= P`.
    pub phase_turns: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSupertrellis {
    order: usize,
    encoder_states: usize,
    branches: Vec<ReducedBranch>,
    /// Incoming branch indices per state, ordered by source state.
    incoming: Vec<Vec<usize>>,
}

/// States are `(encoder state, last P-1 input bits)` with index
/// `i * 2^(P-1) + history`, newest bit most significant.
pub fn build_reduced_supertrellis(enc: &EncoderTrellis, order: usize) -> Result<ReducedSupertrellis> {
    if order == 0 {
        return Err(Error::UnsupportedOrder(0));
    }
    let hist_len = order - 1;
    let hist_states = 1usize << hist_len;
    let num_states = enc.num_states() * hist_states;

    let mut branches = Vec::with_capacity(num_states * N);
    for from in 0..num_states {
        let (enc_state, hist) = (from / hist_states, from % hist_states);
        for input in 0..N as u8 {
            let next_enc = enc.next_state(enc_state, input);
            let next_hist = if hist_len == 0 {
                0
            } else {
                ((input as usize) << (hist_len - 1)) | (hist >> 1)
            };

            let mut dibits = vec![enc.out_dibit(enc_state, input)];
            let mut e = enc_state;
            for t in 1..order {
                let past_input = ((hist >> (hist_len - t)) & 1) as u8;
                e = enc.prev_state(e, past_input);
                dibits.push(enc.out_dibit(e, past_input));
            }
            let mut phase_turns = vec![0u8];
            let mut acc = 0u8;
            for d in &dibits {
                acc = (acc + d.quarter_turns()) & 3;
                phase_turns.push(acc);
            }

            branches.push(ReducedBranch {
                from,
                input,
                to: next_enc * hist_states + next_hist,
                dibits,
                phase_turns,
            });
        }
    }

    let mut incoming = vec![Vec::new(); num_states];
    for (b, branch) in branches.iter().enumerate() {
        incoming[branch.to].push(b);
    }
    Ok(ReducedSupertrellis {
        order,
        encoder_states: enc.num_states(),
        branches,
        incoming,
    })
}

impl ReducedSupertrellis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_states(&self) -> usize {
        self.incoming.len()
    }

    pub fn encoder_state(&self, state: usize) -> usize {
        state / (self.num_states() / self.encoder_states)
    }

    pub fn branches(&self) -> &[ReducedBranch] {
        &self.branches
    }

    pub fn branch(&self, state: usize, input: u8) -> &ReducedBranch {
        &self.branches[state * N + input as usize]
    }

    pub fn incoming(&self, state: usize) -> &[usize] {
        &self.incoming[state]
    }
}

/// `[1, e^{j Phi_1}, .., e^{j Phi_P}]`, the ratios `S_0 / S_j` along the branch.
pub fn branch_phase_ratios(branch: &ReducedBranch) -> Vec<Complex64> {
    branch
        .phase_turns
        .iter()
        .map(|&q| rotate_quarter(Complex64::new(1.0, 0.0), q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{build_encoder_trellis, conv_encode, diff_encode, qpsk_map, EncoderSpec};
    use rand::{Rng, SeedableRng};

    fn enc() -> EncoderTrellis {
        build_encoder_trellis(EncoderSpec::default_rsc()).unwrap()
    }

    const P1_TRANSITIONS: [(usize, u8, usize); 16] = [
        (0, 0, 0),
        (0, 1, 5),
        (1, 0, 0),
        (1, 1, 5),
        (2, 0, 4),
        (2, 1, 1),
        (3, 0, 4),
        (3, 1, 1),
        (4, 0, 6),
        (4, 1, 3),
        (5, 0, 6),
        (5, 1, 3),
        (6, 0, 2),
        (6, 1, 7),
        (7, 0, 2),
        (7, 1, 7),
    ];

    #[test]
    fn first_order_full_machine_matches_table() {
        let st = build_full_supertrellis(&enc(), 1, qpsk_map).unwrap();
        assert_eq!(st.num_states(), 8);
        for (j, input, next) in P1_TRANSITIONS {
            assert_eq!(st.transition(j, input).next, next, "state {j} input {input}");
        }
    }

    #[test]
    fn full_machine_structure() {
        for order in 1..=4 {
            let st = build_full_supertrellis(&enc(), order, qpsk_map).unwrap();
            assert_eq!(st.num_states(), 4 << order);
            let mut indegree = vec![0; st.num_states()];
            for j in 0..st.num_states() {
                for input in 0..2 {
                    indegree[st.transition(j, input).next] += 1;
                }
            }
            assert!(indegree.iter().all(|&d| d == 2), "order {order}");
        }
    }

    #[test]
    fn filter_contents_are_valid_code_sequences() {
        let e = enc();
        let st = build_full_supertrellis(&e, 3, qpsk_map).unwrap();
        for j in 0..st.num_states() {
            let s = st.state(j);
            // Replay oldest digit first from the recorded start state.
            let inputs: Vec<u8> = s.filter_digits.iter().rev().copied().collect();
            let (code, end) = conv_encode(&inputs, &e, s.start_state);
            let newest_first: Vec<Dibit> = code.into_iter().rev().collect();
            assert_eq!(newest_first, s.code_digits);
            assert_eq!(end, s.encoder_state);
            assert_eq!(j, s.encoder_state * 8 + (j % 8));
        }
    }

    #[test]
    fn full_transitions_shift_filter_digits() {
        let st = build_full_supertrellis(&enc(), 3, qpsk_map).unwrap();
        for j in 0..st.num_states() {
            for input in 0..2u8 {
                let next = st.state(st.transition(j, input).next);
                assert_eq!(next.filter_digits[0], input);
                assert_eq!(next.filter_digits[1..], st.state(j).filter_digits[..2]);
                assert_eq!(next.code_digits[0], st.transition(j, input).code_digit);
            }
        }
    }

    #[test]
    fn dump_lists_every_row() {
        let st = build_full_supertrellis(&enc(), 1, qpsk_map).unwrap();
        let dump = st.dump_table();
        let rows: Vec<&str> = dump.lines().skip(1).collect();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows[1], "0 1 5");
        assert_eq!(rows[13], "6 1 7");
    }

    #[test]
    fn reduced_state_counts() {
        let e = enc();
        assert!(matches!(build_reduced_supertrellis(&e, 0), Err(Error::UnsupportedOrder(0))));
        for (order, count) in [(1, 4), (2, 8), (3, 16)] {
            let st = build_reduced_supertrellis(&e, order).unwrap();
            assert_eq!(st.num_states(), count);
            assert_eq!(st.branches().len(), 2 * count);
            assert!((0..count).all(|n| st.incoming(n).len() == 2));
        }
    }

    #[test]
    fn first_order_ratio_follows_current_dibit() {
        let st = build_reduced_supertrellis(&enc(), 1).unwrap();
        for b in st.branches() {
            let ratios = branch_phase_ratios(b);
            assert_eq!(ratios.len(), 2);
            assert_eq!(ratios[0], Complex64::new(1.0, 0.0));
            let expected = Complex64::from_polar(1.0, crate::coding::phase_increment(b.dibits[0]));
            assert!((ratios[1] - expected).norm() < 1e-12);
            if b.dibits[0].value() == 3 {
                assert_eq!(ratios[1], Complex64::new(-1.0, 0.0));
            }
            if b.dibits[0].value() == 1 {
                assert_eq!(ratios[1], Complex64::new(0.0, 1.0));
            }
        }
        // State 0 with input 0 carries dibit 0: no rotation anywhere.
        let zero = build_reduced_supertrellis(&enc(), 3).unwrap();
        assert!(branch_phase_ratios(zero.branch(0, 0)).iter().all(|r| *r == Complex64::new(1.0, 0.0)));
    }

    /// Walk random data through the encoder, differential-encode it, and
    /// check that every branch taken reproduces `S_k / S_{k-j}`.
    #[test]
    fn ratios_match_explicit_symbols() {
        let e = enc();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for order in 1..=3 {
            let st = build_reduced_supertrellis(&e, order).unwrap();
            let hist_states = 1 << (order - 1);
            for _ in 0..100 {
                let bits: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
                let start = rng.random_range(0..4);
                let (dibits, _) = conv_encode(&bits, &e, start);
                let phi = rng.random_range(0.0..6.28);
                let reference = QpskSymbol::new(Complex64::from_polar(1.0, phi)).unwrap();
                let syms = diff_encode(&dibits, reference);

                let mut enc_state = start;
                for k in 0..bits.len() {
                    if k >= order {
                        let hist = (1..order).fold(0usize, |h, t| (h << 1) | bits[k - t] as usize);
                        let b = st.branch(enc_state * hist_states + hist, bits[k]);
                        for (j, r) in branch_phase_ratios(b).iter().enumerate() {
                            let explicit = syms[k].value() / syms[k - j].value();
                            assert!((r - explicit).norm() < 1e-12);
                        }
                        let expect_next = e.next_state(enc_state, bits[k]) * hist_states
                            + (0..order - 1).fold(0usize, |h, t| (h << 1) | bits[k - t] as usize);
                        assert_eq!(b.to, expect_next);
                    }
                    enc_state = e.next_state(enc_state, bits[k]);
                }
            }
        }
    }

    #[test]
    fn ratios_ignore_global_rotation() {
        // Ratios depend on dibits only; rotating the symbol stream cannot move them.
        let e = enc();
        let st = build_reduced_supertrellis(&e, 3).unwrap();
        let bits = [1u8, 0, 1, 1, 0, 0, 1, 0];
        let (dibits, _) = conv_encode(&bits, &e, 0);
        for phi in [0.0, 0.4, 2.0] {
            let reference = QpskSymbol::new(Complex64::from_polar(1.0, phi)).unwrap();
            let syms = diff_encode(&dibits, reference);
            let mut s = 0;
            for k in 0..bits.len() {
                let hist = if k >= 2 { ((bits[k - 1] as usize) << 1) | bits[k - 2] as usize } else { 0 };
                if k >= 3 {
                    let ratios = branch_phase_ratios(st.branch(s * 4 + hist, bits[k]));
                    for (j, r) in ratios.iter().enumerate() {
                        let q = (syms[k].value() / syms[k - j].value()).arg() / std::f64::consts::FRAC_PI_2;
                        let expected = rotate_quarter(Complex64::new(1.0, 0.0), (q.round() as i64).rem_euclid(4) as u8);
                        assert_eq!(*r, expected);
                    }
                }
                s = e.next_state(s, bits[k]);
            }
        }
    }

    /// Without differential encoding, the constant code streams 00.. and
    /// 11.. map to rotated copies of one another, so their prediction errors
    /// have identical magnitudes. Differential encoding separates them.
    #[test]
    fn non_differential_streams_are_ambiguous() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let x: Vec<Complex64> = (0..32)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let coeffs = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.8, 0.1),
            Complex64::new(-0.15, -0.05),
        ];
        let errors = |syms: &[Complex64]| -> Vec<f64> {
            (2..x.len())
                .map(|k| (0..3).map(|j| coeffs[j] * x[k - j] / syms[k - j]).sum::<Complex64>().norm_sqr())
                .collect()
        };
        let zeros = [Dibit::ALL[0]; 32];
        let ones = [Dibit::ALL[3]; 32];

        let plain = |d: &[Dibit]| d.iter().map(|&d| qpsk_map(d).value()).collect::<Vec<_>>();
        let (e0, e1) = (errors(&plain(&zeros)), errors(&plain(&ones)));
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        let diff = |d: &[Dibit]| diff_encode(d, QpskSymbol::REFERENCE).iter().map(|s| s.value()).collect::<Vec<_>>();
        let (e0, e1) = (errors(&diff(&zeros)), errors(&diff(&ones)));
        assert!(e0.iter().zip(&e1).any(|(a, b)| (a - b).abs() > 1e-6));
    }
}
