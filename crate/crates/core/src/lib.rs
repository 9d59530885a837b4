//! Benchmark forge and evaluation harness for hardware Trojan detection
//! under uncertainty: the seeker does not know whether, or how many,
//! Trojans were hidden in a bundle of restructured circuits.
//!
//! The pipeline runs
//! [`netlist`] (BENCH I/O) → [`aig`] (And-Inverter Graphs) →
//! [`restructure`] (18 seeded function-preserving pipelines) →
//! [`trojan`] (rare-net trigger insertion) → [`benchgen`] (sealed bundles),
//! with [`equiv`] proving every functional contract by SAT and
//! [`detect`]/[`analysis`] playing and scoring the seeker's side.

pub mod aig;
pub mod analysis;
pub mod benchgen;
pub mod detect;
pub mod equiv;
pub mod netlist;
pub mod restructure;
pub mod rng;
pub mod trojan;
pub mod truth;

pub use aig::{from_netlist, to_netlist, Aig, AigMetrics, GateLibrary, Lit, NodeId};
pub use analysis::{pca_fit, project, AnalysisError, PcaModel};
pub use benchgen::{BenchgenError, BenchmarkManifest, BundleConfig, Composition, Label, ScoreReport};
pub use detect::{
    extract_features, golden_model_detect, knn_classify, ConfusionMatrix, DetectError, FeatureVector, Strategy,
    TrainingScenario,
};
pub use equiv::{check_equiv, EquivError, EquivResult};
pub use netlist::{parse_bench, write_bench, CircuitStats, Gate, GateKind, Netlist, NetlistError};
pub use restructure::{apply_pipeline, PipelineId};
pub use rng::SplitMix64;
pub use trojan::{insert_trojan, validate_trojan, TrojanError, TrojanParams, TrojanRecord};
pub use truth::TruthTable;

/// Any domain error, tagged with the module that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Trojan(#[from] TrojanError),
    #[error(transparent)]
    Benchgen(#[from] BenchgenError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl Error {
    /// The variant name from the owning module, e.g. `CycleDetected`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Netlist(e) => e.name(),
            Error::Equiv(e) => e.name(),
            Error::Trojan(e) => e.name(),
            Error::Benchgen(e) => e.name(),
            Error::Detect(e) => e.name(),
            Error::Analysis(e) => e.name(),
        }
    }
}
