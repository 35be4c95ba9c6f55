//! BER sweeps, configuration, result files and self-checks.

pub mod config;
pub mod output;
pub mod selftest;
pub mod sweep;

pub use config::RunConfig;
pub use output::{read_csv, render_svg, write_csv, PlotOptions, REFERENCE_CURVES};
pub use sweep::{frame_rng, run_ber_sweep, BerRecord, FrameRecord, PointSimulator};

use crate::coding::EncoderSpec;
use crate::detectors::DetectorRegistry;

/// Legend labels for the configured detectors.
pub fn plot_labels(registry: &DetectorRegistry, names: &[String], encoder: EncoderSpec) -> std::collections::BTreeMap<String, String> {
    names
        .iter()
        .filter_map(|n| registry.get(n).ok().map(|f| (n.clone(), f.label(encoder.num_states()))))
        .collect()
}
