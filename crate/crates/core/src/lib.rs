//! Influence sampling for n-qubit quantum processes.
//!
//! * [`process`]: Kraus / Choi / chi representations, exact influence and
//!   sampler expectations, fidelity, distance, sub-process reduction.
//! * [`channels`]: gate and damping-channel constructors, layered process
//!   specifications, junta views and the measurement noise model.
//! * [`sampler`]: shot-level influence sampling with seeded, worker-count
//!   independent parallelism.
//! * [`inference`]: estimates, influence bounds, high-influence-qubit
//!   identification and the junta tester.
//! * [`tomography`]: process tomography on the identified qubits and the
//!   junta learner.
//!
//! Qubits are labelled `1..=n`; qubit 1 is the most significant tensor factor
//! and Pauli digit.

pub mod channels;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod pauli;
pub mod process;
pub mod sampler;
pub mod subset;
pub mod tomography;

pub use channels::{build_gate, random_channel, FlipRates, GateKind, GateParams, GateSpec, JuntaView, NoiseModel, ProcessSpec};
pub use error::{Error, Result};
pub use inference::{
    bounds_from_estimates, bounds_from_overlap, bounds_from_sampling, epsilon_estimate, estimate_sampler,
    junta_distance_bound, hiqi, hiqi_process, junta_tester, BoundPair, EpsilonEstimate, Estimate, HiqiResult,
    InfluenceBounds, TesterVerdict, Verdict, DEFAULT_DELTA,
};
pub use pauli::PauliIndexVector;
pub use process::{
    influence_bounds, influence_diagnostics, influence_exact, influence_samplers_exact, process_distance,
    process_fidelity, reduce_subprocess, BoundMode, ChiMatrix, ChoiMatrix, InfluenceDiagnostics, KrausSet,
};
pub use sampler::{
    run_sampling, run_sampling_random, AccumulationMode, GateSet, SamplerConfig, SamplingResult, ShotRecord,
    ShotSampler, SubsetDistribution, TestGate,
};
pub use subset::QubitSubset;
pub use tomography::{
    generate_tomography_data, junta_learner, reconstruct_cptp, LearnerOutput, ReconstructionResult,
    TomographyConfig, TomographyData,
};
