//! Simulation and analysis toolkit for CGLMP Bell tests with time-bin
//! entangled qudits measured by cascaded delay Mach-Zehnder interferometers.
//!
//! The crate covers the chain from pump-shaped pair states through analyzer
//! operators and the `S_d` functional to the statistics of real photon
//! counting: multi-pair accidentals, Monte Carlo count tables, Poisson
//! bootstrap errors and fringe-visibility fits.

pub mod analysis;
pub mod bell;
pub mod cglmp;
pub mod counts;
pub mod eigen;
pub mod error;
pub mod fringe;
pub mod io;
pub mod lm;
pub mod measurement;
pub mod photon;
pub mod qudit;
pub mod scan;
pub mod simulate;
pub mod tolerance;

#[cfg(feature = "oracles")]
pub mod oracles;

pub use analysis::{analyze_counts, counts_to_probabilities, AnalysisReport};
pub use bell::{bell_operator, optimize_state, BellOperator, OptimizedState};
pub use cglmp::{
    critical_lambda, lambda_from_visibility, quantum_table, s_value, visibility_from_lambda,
    ProbabilityTable, SdResult,
};
pub use counts::{dataset, CountTable};
pub use error::{Error, Result};
pub use fringe::{
    critical_visibility, fringe_model, lm_fit, FitOptions, FitResult, FringeKind, FringeModel,
    FringePoint, Weighting,
};
pub use measurement::{
    analyzer_phase, cascaded_measurement, fourier_state, joint_outcome_probability, lossy_stage,
    mzi_stage, Analyzer, MeasurementSetting, Party, Port, TimeBinOperator,
};
pub use photon::{
    approx_coincidence, exact_coincidence, measurement_probs, multiphoton_lambda,
    multiphoton_visibility, MeasurementProbs, NoiseParams,
};
pub use qudit::{BipartiteState, DensityOperator, PumpProfile, PureState};
pub use simulate::{simulate_experiment, PairSource, Schedule, SimulationConfig, StateSpec};
