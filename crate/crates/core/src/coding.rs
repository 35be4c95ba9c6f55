//! Rate-1/2 recursive systematic convolutional coding and DQPSK mapping.
//!
//! The encoder has generator `[1, ff(D)/fb(D)]`. Its register holds the last
//! `memory` feedback bits `w_{k-1} .. w_{k-memory}`; the state index places the
//! newest bit in the most significant position, so for memory 2 the state is
//! `2*s1 + s2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Polynomials are bitmasks: bit `i` is the coefficient of `D^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderSpec {
    pub feedforward_poly: u32,
    pub feedback_poly: u32,
}

impl EncoderSpec {
    pub fn new(feedforward_poly: u32, feedback_poly: u32) -> Self {
        Self {
            feedforward_poly,
            feedback_poly,
        }
    }

    /// `[1, (1+D^2)/(1+D+D^2)]`, the 4-state code used throughout.
    pub fn default_rsc() -> Self {
        Self::new(0b101, 0b111)
    }

    /// Register length: the larger of the two polynomial degrees.
    pub fn memory(&self) -> usize {
        let deg = |p: u32| if p == 0 { 0 } else { 31 - p.leading_zeros() as usize };
        deg(self.feedforward_poly).max(deg(self.feedback_poly))
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    fn validate(&self) -> Result<()> {
        if self.feedforward_poly == 0 || self.feedback_poly == 0 {
            return Err(Error::InvalidEncoder("polynomials must be nonzero".into()));
        }
        if self.feedback_poly & 1 == 0 {
            return Err(Error::InvalidEncoder(
                "feedback polynomial needs a nonzero constant term".into(),
            ));
        }
        if self.memory() == 0 || self.memory() > 16 {
            return Err(Error::InvalidEncoder(format!(
                "unsupported encoder memory {}",
                self.memory()
            )));
        }
        Ok(())
    }
}

impl Default for EncoderSpec {
    fn default() -> Self {
        Self::default_rsc()
    }
}

/// Code digit: decimal value of the dibit `(b_{k-1} b_k)`, systematic bit first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dibit(u8);

impl Dibit {
    pub const ALL: [Dibit; 4] = [Dibit(0), Dibit(1), Dibit(2), Dibit(3)];

    pub fn new(value: u8) -> Result<Self> {
        if value < 4 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidDibit(value))
        }
    }

    pub fn from_bits(systematic: u8, parity: u8) -> Self {
        Self(((systematic & 1) << 1) | (parity & 1))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn systematic_bit(self) -> u8 {
        self.0 >> 1
    }

    /// Differential phase change in quarter turns: 00→0, 01→1, 10→3, 11→2.
    pub fn quarter_turns(self) -> u8 {
        const TURNS: [u8; 4] = [0, 1, 3, 2];
        TURNS[self.0 as usize]
    }
}

/// Unit-energy complex symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpskSymbol(Complex64);

impl QpskSymbol {
    /// `(1+j)/sqrt(2)`, the reference symbol preceding every differential stream.
    pub const REFERENCE: QpskSymbol = QpskSymbol(Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2));

    pub fn new(value: Complex64) -> Result<Self> {
        if (value.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitMagnitude(value.norm()));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Exact rotation by `q` quarter turns (multiplication by `j^q`).
    pub fn rotate_quarter(self, q: u8) -> Self {
        Self(rotate_quarter(self.0, q))
    }
}

impl From<QpskSymbol> for Complex64 {
    fn from(s: QpskSymbol) -> Self {
        s.0
    }
}

/// Multiply by `j^q` without rounding: swaps and sign flips only.
#[inline]
pub fn rotate_quarter(z: Complex64, q: u8) -> Complex64 {
    match q & 3 {
        0 => z,
        1 => Complex64::new(-z.im, z.re),
        2 => Complex64::new(-z.re, -z.im),
        _ => Complex64::new(z.im, -z.re),
    }
}

/// State-transition and output tables of the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderTrellis {
    spec: EncoderSpec,
    next_state: Vec<[usize; 2]>,
    out_dibit: Vec<[Dibit; 2]>,
    prev_state: Vec<[usize; 2]>,
}

/// Builds the encoder tables and checks that every `(next state, input)`
/// pair has exactly one predecessor.
pub fn build_encoder_trellis(spec: EncoderSpec) -> Result<EncoderTrellis> {
    spec.validate()?;
    let memory = spec.memory();
    let num_states = spec.num_states();
    let tap = |poly: u32, i: usize| (poly >> i) & 1 == 1;

    let mut next_state = vec![[0usize; 2]; num_states];
    let mut out_dibit = vec![[Dibit(0); 2]; num_states];
    for state in 0..num_states {
        // register[i-1] holds w_{k-i}; the newest bit is the state MSB.
        let register: Vec<u8> = (1..=memory)
            .map(|i| ((state >> (memory - i)) & 1) as u8)
            .collect();
        for input in 0..2u8 {
            let mut feedback = input;
            for i in 1..=memory {
                if tap(spec.feedback_poly, i) {
                    feedback ^= register[i - 1];
                }
            }
            let mut parity = if tap(spec.feedforward_poly, 0) { feedback } else { 0 };
            for i in 1..=memory {
                if tap(spec.feedforward_poly, i) {
                    parity ^= register[i - 1];
                }
            }
            next_state[state][input as usize] =
                ((feedback as usize) << (memory - 1)) | (state >> 1);
            out_dibit[state][input as usize] = Dibit::from_bits(input, parity);
        }
    }

    let mut prev_state = vec![[usize::MAX; 2]; num_states];
    for state in 0..num_states {
        for input in 0..2 {
            let next = next_state[state][input];
            if prev_state[next][input] != usize::MAX {
                return Err(Error::InvalidEncoder(format!(
                    "state {next} has two predecessors for input {input}"
                )));
            }
            prev_state[next][input] = state;
        }
    }

    Ok(EncoderTrellis {
        spec,
        next_state,
        out_dibit,
        prev_state,
    })
}

impl EncoderTrellis {
    pub fn spec(&self) -> EncoderSpec {
        self.spec
    }

    pub fn num_states(&self) -> usize {
        self.next_state.len()
    }

    pub fn next_state(&self, state: usize, input: u8) -> usize {
        self.next_state[state][input as usize]
    }

    pub fn out_dibit(&self, state: usize, input: u8) -> Dibit {
        self.out_dibit[state][input as usize]
    }

    /// The unique state that moves to `state` on `input`.
    pub fn prev_state(&self, state: usize, input: u8) -> usize {
        self.prev_state[state][input as usize]
    }
}

/// Encodes without termination. Returns one dibit per input bit and the final state.
pub fn conv_encode(bits: &[u8], trellis: &EncoderTrellis, start_state: usize) -> (Vec<Dibit>, usize) {
    assert!(start_state < trellis.num_states(), "start state out of range");
    let mut state = start_state;
    let dibits = bits
        .iter()
        .map(|&b| {
            let d = trellis.out_dibit(state, b & 1);
            state = trellis.next_state(state, b & 1);
            d
        })
        .collect();
    (dibits, state)
}

/// Differential phase change in radians.
pub fn phase_increment(d: Dibit) -> f64 {
    match d.quarter_turns() {
        0 => 0.0,
        1 => FRAC_PI_2,
        2 => PI,
        _ => 3.0 * FRAC_PI_2,
    }
}

/// `S_k = S_{k-1} * exp(j*theta(d_k))`, starting from `reference` as `S_{-1}`.
///
/// Each output is the reference rotated by an exact quarter-turn count, so
/// the magnitude never drifts from that of the reference.
pub fn diff_encode(dibits: &[Dibit], reference: QpskSymbol) -> Vec<QpskSymbol> {
    let mut turns = 0u8;
    dibits
        .iter()
        .map(|d| {
            turns = (turns + d.quarter_turns()) & 3;
            reference.rotate_quarter(turns)
        })
        .collect()
}

/// Natural phase mapping `d -> exp(j*d*pi/2)` for the non-differential path.
pub fn qpsk_map(d: Dibit) -> QpskSymbol {
    QpskSymbol(rotate_quarter(Complex64::new(1.0, 0.0), d.value()))
}

/// Inverse of [`qpsk_map`]: nearest constellation point.
pub fn qpsk_unmap(s: QpskSymbol) -> Dibit {
    let z = s.value();
    let q = if z.re.abs() >= z.im.abs() {
        if z.re >= 0.0 {
            0
        } else {
            2
        }
    } else if z.im >= 0.0 {
        1
    } else {
        3
    };
    Dibit(q)
}

/// Recovers dibits from consecutive phase differences (used by tests and diagnostics).
pub fn diff_decode(symbols: &[QpskSymbol], reference: QpskSymbol) -> Vec<Dibit> {
    let mut prev = reference.value();
    symbols
        .iter()
        .map(|s| {
            let delta = (s.value() * prev.conj()).arg();
            prev = s.value();
            let turns = ((delta / FRAC_PI_2).round() as i64).rem_euclid(4) as u8;
            const FROM_TURNS: [u8; 4] = [0, 1, 3, 2];
            Dibit(FROM_TURNS[turns as usize])
        })
        .collect()
}
