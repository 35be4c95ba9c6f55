//! Sequence detectors and the name-keyed registry that builds them.
//!
//! Every detector implements [`Detector`]. A [`DetectorFactory`] builds one
//! for a given SNR point, since predictor coefficients depend on the noise
//! level. [`DetectorRegistry::with_defaults`] knows `coherent`,
//! `coherent-diff` and `p1`..`p3`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::channel::{ReceivedFrame, SystemParams};
use crate::coding::{build_encoder_trellis, EncoderTrellis, QpskSymbol};
use crate::error::{Error, Result};
use crate::prediction::{design_predictors, AutocorrModel};
use crate::supertrellis::build_reduced_supertrellis;

pub mod coherent;
pub mod exhaustive;
pub mod predictive;
pub mod viterbi;

pub use coherent::{CoherentVa, PhaseReferencedVa};
pub use exhaustive::{coded_candidates, exhaustive_predictive_ml, Candidate, ExhaustiveDecision};
pub use predictive::{predictive_branch_metric, PredictiveVa, TransientMode};

/// What the receiver assumes about the encoder's initial state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartKnowledge {
    /// The encoder always starts here; the filter history is still unknown.
    EncoderState(usize),
    /// Every supertrellis state starts with zero metric.
    Unknown,
}

impl Default for StartKnowledge {
    fn default() -> Self {
        StartKnowledge::EncoderState(0)
    }
}

pub trait Detector: Send + Sync {
    fn name(&self) -> &str;

    /// Decoded data bits, one per subcarrier.
    fn detect(&self, frame: &ReceivedFrame) -> Vec<u8>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorOutput {
    pub bits: Vec<u8>,
    pub bit_errors: usize,
}

impl DetectorOutput {
    pub fn new(bits: Vec<u8>, reference: &[u8]) -> Self {
        assert_eq!(bits.len(), reference.len(), "decoded length mismatch");
        let bit_errors = bits.iter().zip(reference).filter(|(a, b)| a != b).count();
        Self { bits, bit_errors }
    }
}

/// Everything a factory may need to build a detector for one SNR point.
#[derive(Clone, Debug)]
pub struct DetectorContext<'a> {
    pub params: &'a SystemParams,
    pub encoder: &'a EncoderTrellis,
    /// Time-domain per-dimension noise variance at this SNR point.
    pub noise_variance: f64,
}

pub trait DetectorFactory: Send + Sync {
    /// Registry key, as used on the command line.
    fn name(&self) -> &str;

    /// Legend label for plots.
    fn label(&self, encoder_states: usize) -> String;

    fn build(&self, ctx: &DetectorContext<'_>) -> Result<Box<dyn Detector>>;
}

/// Perfect knowledge of the channel and of the previous symbol's phase.
pub struct CoherentFactory;

impl DetectorFactory for CoherentFactory {
    fn name(&self) -> &str {
        "coherent"
    }

    fn label(&self, _encoder_states: usize) -> String {
        "ideal coherent".to_string()
    }

    fn build(&self, ctx: &DetectorContext<'_>) -> Result<Box<dyn Detector>> {
        Ok(Box::new(PhaseReferencedVa::new(
            ctx.encoder,
            ctx.params.decoding_delay,
            QpskSymbol::REFERENCE,
        )))
    }
}

/// Coherent detection from the channel DFT alone, over the 16-state
/// encoder-by-phase trellis.
pub struct DifferentialCoherentFactory;

impl DetectorFactory for DifferentialCoherentFactory {
    fn name(&self) -> &str {
        "coherent-diff"
    }

    fn label(&self, _encoder_states: usize) -> String {
        "coherent (H only)".to_string()
    }

    fn build(&self, ctx: &DetectorContext<'_>) -> Result<Box<dyn Detector>> {
        Ok(Box::new(CoherentVa::new(
            ctx.encoder,
            ctx.params.decoding_delay,
            QpskSymbol::REFERENCE,
        )))
    }
}

pub struct PredictiveFactory {
    name: String,
    order: usize,
}

impl PredictiveFactory {
    pub fn new(order: usize) -> Self {
        Self {
            name: format!("p{order}"),
            order,
        }
    }
}

impl DetectorFactory for PredictiveFactory {
    fn name(&self) -> &str {
        &self.name
    }

    fn label(&self, encoder_states: usize) -> String {
        let states = encoder_states << self.order.saturating_sub(1);
        format!("P={},S_ST={}", self.order, states)
    }

    fn build(&self, ctx: &DetectorContext<'_>) -> Result<Box<dyn Detector>> {
        let trellis = build_reduced_supertrellis(ctx.encoder, self.order)?;
        let model = AutocorrModel::new(ctx.params, ctx.noise_variance);
        let predictors = design_predictors(&model, self.order)?;
        Ok(Box::new(PredictiveVa::new(trellis, predictors, ctx.params.decoding_delay)?))
    }
}

#[derive(Clone, Default)]
pub struct DetectorRegistry {
    factories: BTreeMap<String, Arc<dyn DetectorFactory>>,
}

impl DetectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(CoherentFactory));
        reg.register(Arc::new(DifferentialCoherentFactory));
        for order in 1..=3 {
            reg.register(Arc::new(PredictiveFactory::new(order)));
        }
        reg
    }

    pub fn register(&mut self, factory: Arc<dyn DetectorFactory>) {
        self.factories.insert(factory.name().to_string(), factory);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DetectorFactory>> {
        self.factories
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownDetector(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }
}

/// Convenience: build the encoder and every named detector for one noise level.
pub fn build_detectors(
    registry: &DetectorRegistry,
    names: &[String],
    params: &SystemParams,
    noise_variance: f64,
) -> Result<Vec<Box<dyn Detector>>> {
    let encoder = build_encoder_trellis(params.encoder)?;
    let ctx = DetectorContext {
        params,
        encoder: &encoder,
        noise_variance,
    };
    names.iter().map(|n| registry.get(n)?.build(&ctx)).collect()
}
