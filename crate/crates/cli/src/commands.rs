//! Subcommand bodies. Each returns a JSON payload plus a flat table for CSV.

use influence_core::channels::{JuntaView, ProcessSpec};
use influence_core::inference::{
    bounds_from_sampling, epsilon_estimate, gate_estimate, hiqi, junta_tester, BoundPair, HiqiResult, InfluenceBounds,
};
use influence_core::process::{
    influence_bounds, influence_diagnostics, influence_exact, influence_samplers_exact, BoundMode,
};
use influence_core::sampler::{run_sampling, AccumulationMode, SamplerConfig, SamplingResult, ShotSampler, TestGate};
use influence_core::tomography::{junta_learner, TomographyConfig};
use influence_core::QubitSubset;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ResolvedConfig, SweepParameter};
use crate::error::{CliError, ErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Exact,
    Sample,
    Hiqi,
    JuntaTest,
    JuntaLearn,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Sample => "sample",
            Command::Hiqi => "hiqi",
            Command::JuntaTest => "junta-test",
            Command::JuntaLearn => "junta-learn",
            Command::Sweep => "sweep",
        }
    }
}

/// Header plus rows, all pre-formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub results: Value,
    pub table: Table,
}

pub fn execute(command: Command, cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Exact => exact(cfg),
        Command::Sample => sample(cfg),
        Command::Hiqi => hiqi_cmd(cfg),
        Command::JuntaTest => junta_test(cfg),
        Command::JuntaLearn => junta_learn(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(x)?)
}

fn subset_label(s: &QubitSubset) -> String {
    s.qubits().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ")
}

/// Configured subsets, or every single qubit.
fn report_subsets(cfg: &ResolvedConfig) -> Result<Vec<QubitSubset>, CliError> {
    match &cfg.subsets {
        Some(list) => list.iter().map(|q| cfg.subset(q)).collect(),
        None => (1..=cfg.process.n).map(|q| cfg.subset(&[q])).collect(),
    }
}

fn sampler_config(cfg: &ResolvedConfig, seed: u64) -> SamplerConfig {
    let mode = if cfg.marginals_only { AccumulationMode::Marginal } else { AccumulationMode::Full };
    let mut c = SamplerConfig::new(cfg.gates, cfg.shots, seed)
        .with_noise(cfg.noise.clone())
        .with_mode(mode)
        .with_workers(cfg.workers);
    c.max_distinct = cfg.max_distinct;
    c
}

#[derive(Serialize)]
struct ExactRow {
    subset: QubitSubset,
    influence: f64,
    samplers: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_samplers: Option<[f64; 3]>,
    two_gate: (f64, f64),
    three_gate: (f64, f64),
    diagnostics: influence_core::process::InfluenceDiagnostics,
}

fn exact_row(chi: &influence_core::ChiMatrix, s: &QubitSubset, noisy: Option<&ShotSampler>) -> Result<ExactRow, CliError> {
    let samplers = influence_samplers_exact(chi, s)?;
    let noisy_samplers = match noisy {
        Some(sampler) => Some([
            sampler.exact_sampler(TestGate::Identity, s)?,
            sampler.exact_sampler(TestGate::Hadamard, s)?,
            sampler.exact_sampler(TestGate::RxHalfPi, s)?,
        ]),
        None => None,
    };
    Ok(ExactRow {
        subset: *s,
        influence: influence_exact(chi, s)?,
        samplers,
        noisy_samplers,
        two_gate: influence_bounds(samplers, BoundMode::TwoGate),
        three_gate: influence_bounds(samplers, BoundMode::ThreeGate),
        diagnostics: influence_diagnostics(chi, s)?,
    })
}

fn exact(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let chi = cfg.process.embed_dense(cfg.dense_cap)?;
    let noisy = if cfg.noise.is_noiseless() {
        None
    } else {
        Some(ShotSampler::new(&cfg.process.junta_view()?, &cfg.noise)?)
    };
    let mut table = Table::new(&["subset", "influence", "ex1", "ex2", "ex3", "il", "iu", "il3", "iu3"]);
    let mut rows = Vec::new();
    for s in report_subsets(cfg)? {
        let r = exact_row(&chi, &s, noisy.as_ref())?;
        table.push(vec![
            subset_label(&s),
            num(r.influence),
            num(r.samplers[0]),
            num(r.samplers[1]),
            num(r.samplers[2]),
            num(r.two_gate.0),
            num(r.two_gate.1),
            num(r.three_gate.0),
            num(r.three_gate.1),
        ]);
        rows.push(r);
    }
    Ok(CommandOutput { results: json!({ "n": cfg.process.n, "subsets": to_value(&rows)? }), table })
}

#[derive(Serialize)]
struct CrossCheck {
    subset: QubitSubset,
    gate: TestGate,
    estimate: f64,
    shots: u64,
    exact: f64,
    /// `(estimate - exact) / sqrt(exact (1 - exact) / shots)`; absent when the
    /// exact value is 0 or 1 and the estimate agrees.
    z: Option<f64>,
}

fn cross_check(result: &SamplingResult, sampler: &ShotSampler, subsets: &[QubitSubset]) -> Result<Vec<CrossCheck>, CliError> {
    if result.gate_set.is_random() {
        return Err(CliError {
            kind: ErrorKind::Capability,
            message: "cross_check needs a fixed gate set (2 or 3)".into(),
        });
    }
    let mut out = Vec::new();
    for s in subsets {
        for &gate in result.gate_set.gates() {
            let est = gate_estimate(result, gate, s)?;
            let exact = sampler.exact_sampler(gate, s)?;
            let sd = (exact * (1.0 - exact) / est.shots as f64).sqrt();
            let diff = est.value - exact;
            let z = if sd > 0.0 {
                Some(diff / sd)
            } else if diff.abs() < 1e-12 {
                None
            } else {
                Some(f64::INFINITY.copysign(diff))
            };
            out.push(CrossCheck { subset: *s, gate, estimate: est.value, shots: est.shots, exact, z });
        }
    }
    Ok(out)
}

fn bounds_row(b: &InfluenceBounds) -> Vec<String> {
    let p: &BoundPair = b.preferred();
    let samplers: Vec<Option<f64>> = (0..3).map(|i| b.samplers.get(i).map(|e| e.value)).collect();
    vec![
        subset_label(&b.subset),
        opt(samplers[0]),
        opt(samplers[1]),
        opt(samplers[2]),
        num(p.lower),
        num(p.upper),
        num(p.upper_stderr),
    ]
}

const BOUNDS_HEADER: [&str; 7] = ["subset", "ex1", "ex2", "ex3", "il", "iu", "iu_stderr"];

fn sample(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let seed = cfg.require_seed("sample")?;
    let view = cfg.process.junta_view()?;
    let result = run_sampling(&view, &sampler_config(cfg, seed))?;
    // Per-qubit counts cannot resolve multi-qubit subsets; those are listed as skipped.
    let (subsets, skipped): (Vec<QubitSubset>, Vec<QubitSubset>) = report_subsets(cfg)?
        .into_iter()
        .partition(|s| result.mode == AccumulationMode::Full || s.len() <= 1);
    let mut table = Table::new(&BOUNDS_HEADER);
    let mut bounds = Vec::new();
    for s in &subsets {
        let b = bounds_from_sampling(&result, s)?;
        table.push(bounds_row(&b));
        bounds.push(b);
    }
    let mut results = json!({
        "sampling": to_value(&result)?,
        "marginal_rates": result.distributions.iter().map(|d| d.marginal_rates()).collect::<Vec<_>>(),
        "bounds": to_value(&bounds)?,
        "skipped_subsets": to_value(&skipped)?,
    });
    if cfg.cross_check {
        let sampler = ShotSampler::new(&view, &cfg.noise)?;
        results["cross_check"] = to_value(&cross_check(&result, &sampler, &subsets)?)?;
    }
    Ok(CommandOutput { results, table })
}

fn hiqi_table(h: &HiqiResult) -> Table {
    let mut table = Table::new(&["qubit", "ex1", "ex2", "ex3", "il", "iu", "iu_stderr", "high"]);
    for b in &h.per_qubit {
        let mut row = bounds_row(b);
        let high = b.subset.is_subset_of(&h.t);
        row.push(high.to_string());
        table.push(row);
    }
    table
}

fn run_hiqi(cfg: &ResolvedConfig, command: &str) -> Result<(JuntaView, HiqiResult), CliError> {
    let seed = cfg.require_seed(command)?;
    let view = cfg.process.junta_view()?;
    let config = sampler_config(cfg, seed);
    let min = if cfg.gates.is_random() { 1 } else { 2 * cfg.gates.gates().len() as u64 };
    if cfg.shots < min {
        return Err(CliError::config(format!("shots = {} is below the minimum of {min}", cfg.shots)));
    }
    let h = hiqi(&run_sampling(&view, &config)?, cfg.delta)?;
    Ok((view, h))
}

fn hiqi_cmd(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let (_, h) = run_hiqi(cfg, "hiqi")?;
    let epsilon = epsilon_estimate(h.iu_complement, h.iu_complement_stderr);
    let table = hiqi_table(&h);
    Ok(CommandOutput { results: json!({ "hiqi": to_value(&h)?, "epsilon": to_value(&epsilon)? }), table })
}

fn junta_test(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let k = cfg.k.ok_or_else(|| CliError::config("junta-test needs `k` in the config"))?;
    let n = cfg.process.n;
    if k == 0 || k >= n {
        return Err(CliError::config(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let (_, h) = run_hiqi(cfg, "junta-test")?;
    let verdict = junta_tester(&h, k)?;
    let table = hiqi_table(&h);
    Ok(CommandOutput { results: json!({ "verdict": to_value(&verdict)?, "hiqi": to_value(&h)? }), table })
}

fn junta_learn(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let seed = cfg.require_seed("junta-learn")?;
    let view = cfg.process.junta_view()?;
    let tomo = TomographyConfig {
        shots_per_setting: cfg.shots_per_setting,
        measurement_flip: cfg.tomography_flip,
        seed,
        workers: cfg.workers,
        cap: cfg.tomography_cap,
    };
    let out = junta_learner(&view, &sampler_config(cfg, seed), cfg.delta, &tomo)?;
    let table = hiqi_table(&out.hiqi);
    Ok(CommandOutput { results: to_value(&out)?, table })
}

fn with_parameter(process: &ProcessSpec, layer: usize, parameter: SweepParameter, value: f64) -> Result<ProcessSpec, CliError> {
    let mut p = process.clone();
    let n_layers = p.layers.len();
    let gate = p
        .layers
        .get_mut(layer)
        .ok_or_else(|| CliError::config(format!("sweep layer {layer} does not exist ({n_layers} layers)")))?;
    match parameter {
        SweepParameter::Theta => gate.params.theta = Some(value),
        SweepParameter::Lambda => gate.params.lambda = Some(value),
        SweepParameter::Phi => gate.params.phi = Some(value),
    }
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct SweepPoint {
    value: f64,
    #[serde(flatten)]
    exact: ExactRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<SampledPoint>,
}

#[derive(Serialize)]
struct SampledPoint {
    seed: u64,
    bounds: InfluenceBounds,
    cross_check: Vec<CrossCheck>,
}

fn sweep(cfg: &ResolvedConfig) -> Result<CommandOutput, CliError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| CliError::config("sweep needs a `sweep` section in the config"))?;
    let grid = spec.grid()?;
    let base_seed = if spec.sampled { Some(cfg.require_seed("sweep")?) } else { None };
    let layer = cfg
        .process
        .layers
        .get(spec.layer)
        .ok_or_else(|| CliError::config(format!("sweep layer {} does not exist", spec.layer)))?;
    let s = match &spec.subset {
        Some(q) => cfg.subset(q)?,
        None => cfg.subset(&layer.qubits)?,
    };

    let mut header = vec!["value", "influence", "ex1", "ex2", "ex3", "il", "iu", "il3", "iu3"];
    if spec.sampled {
        header.extend(["sampled_il", "sampled_iu", "sampled_iu_stderr", "max_abs_z"]);
    }
    let mut table = Table::new(&header);
    let mut points = Vec::new();
    for (i, &value) in grid.iter().enumerate() {
        let process = with_parameter(&cfg.process, spec.layer, spec.parameter, value)?;
        let chi = process.embed_dense(cfg.dense_cap)?;
        let view = process.junta_view()?;
        let noisy = if cfg.noise.is_noiseless() { None } else { Some(ShotSampler::new(&view, &cfg.noise)?) };
        let exact = exact_row(&chi, &s, noisy.as_ref())?;
        let mut row = vec![
            num(value),
            num(exact.influence),
            num(exact.samplers[0]),
            num(exact.samplers[1]),
            num(exact.samplers[2]),
            num(exact.two_gate.0),
            num(exact.two_gate.1),
            num(exact.three_gate.0),
            num(exact.three_gate.1),
        ];
        let sampled = match base_seed {
            Some(seed) => {
                let seed = seed.wrapping_add(i as u64);
                let result = run_sampling(&view, &sampler_config(cfg, seed))?;
                let bounds = bounds_from_sampling(&result, &s)?;
                let oracle = ShotSampler::new(&view, &cfg.noise)?;
                let checks = if result.gate_set.is_random() { Vec::new() } else { cross_check(&result, &oracle, &[s])? };
                let max_z = checks.iter().filter_map(|c| c.z).map(f64::abs).fold(None, |m: Option<f64>, z| Some(m.map_or(z, |m| m.max(z))));
                let p = bounds.preferred();
                row.extend([num(p.lower), num(p.upper), num(p.upper_stderr), opt(max_z)]);
                Some(SampledPoint { seed, bounds, cross_check: checks })
            }
            None => None,
        };
        table.push(row);
        points.push(SweepPoint { value, exact, sampled });
    }
    Ok(CommandOutput {
        results: json!({ "layer": spec.layer, "parameter": spec.parameter, "subset": s, "points": to_value(&points)? }),
        table,
    })
}
