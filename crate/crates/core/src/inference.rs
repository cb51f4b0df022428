//! Estimation from sampled flip-subset distributions: sampler estimates with
//! binomial errors, influence bounds, high-influence-qubit identification and
//! the junta tester.

use serde::{Deserialize, Serialize};

use crate::channels::JuntaView;
use crate::error::{Error, Result};
use crate::process::{raw_influence_bounds, BoundMode};
use crate::sampler::{run_sampling, AccumulationMode, GateSet, SamplerConfig, SamplingResult, SubsetDistribution, TestGate};
use crate::subset::QubitSubset;

/// Default classification threshold for single-qubit upper bounds.
pub const DEFAULT_DELTA: f64 = 0.006;

/// z-value used for one-sided intervals.
pub const ONE_SIDED_Z: f64 = 2.0;

/// Empirical mean of a 0/1 sampler with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl Estimate {
    pub fn from_counts(hits: u64, shots: u64) -> Self {
        if shots == 0 {
            return Self { value: 0.0, stderr: 0.0, shots };
        }
        let p = hits as f64 / shots as f64;
        Self { value: p, stderr: (p * (1.0 - p) / shots as f64).sqrt(), shots }
    }

    /// Exact expectation; `shots` sets the variance the estimator would have.
    pub fn exact(value: f64, shots: u64) -> Self {
        let stderr = if shots == 0 { 0.0 } else { (value * (1.0 - value) / shots as f64).max(0.0).sqrt() };
        Self { value, stderr, shots }
    }

    fn variance(&self) -> f64 {
        self.stderr * self.stderr
    }
}

/// `(estimate, stderr)` of `E X^S` from one distribution.
///
/// MARGINAL data only answers single-qubit subsets.
pub fn estimate_sampler(dist: &SubsetDistribution, s: &QubitSubset) -> Result<Estimate> {
    Ok(Estimate::from_counts(dist.overlap_count(s)?, dist.total_shots()))
}

/// Lower/upper influence bound with the standard error of the upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    /// Clamped to [0, 1].
    pub upper: f64,
    pub raw_upper: f64,
    pub upper_stderr: f64,
}

impl BoundPair {
    fn new(lower: f64, raw_upper: f64, upper_stderr: f64) -> Self {
        Self { lower: lower.clamp(0.0, 1.0), upper: raw_upper.clamp(0.0, 1.0), raw_upper, upper_stderr }
    }
}

/// How a bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Estimated directly from subset statistics.
    Direct,
    /// Union-bound surrogate from single-qubit marginals: the upper bound is
    /// `sum_i IU_{i}` (subadditivity), the lower bound `max_i IL_{i}` (monotonicity).
    Surrogate,
}

/// Influence bounds on one subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceBounds {
    pub subset: QubitSubset,
    /// Per fixed gate `E X_l` estimates in gate order; a single pooled overlap
    /// probability for random-gate runs.
    pub samplers: Vec<Estimate>,
    pub gate_set: GateSet,
    pub two_gate: Option<BoundPair>,
    pub three_gate: Option<BoundPair>,
    /// Bounds from a random-gate overlap probability.
    pub overlap: Option<BoundPair>,
    pub source: BoundSource,
}

impl InfluenceBounds {
    /// Bounds used for decisions: three-gate when available, else two-gate,
    /// else random-gate.
    pub fn preferred(&self) -> &BoundPair {
        self.three_gate
            .as_ref()
            .or(self.two_gate.as_ref())
            .or(self.overlap.as_ref())
            .expect("at least one bound family is always populated")
    }
}

fn bound_pair(estimates: &[Estimate], mode: BoundMode) -> BoundPair {
    let mut p = [0.0; 3];
    for (slot, e) in p.iter_mut().zip(estimates) {
        *slot = e.value;
    }
    let (lower, raw_upper) = raw_influence_bounds(p, mode);
    let (used, scale) = match mode {
        BoundMode::TwoGate => (&estimates[..2], 1.0),
        BoundMode::ThreeGate => (&estimates[..3], 0.5),
    };
    let var: f64 = used.iter().map(|e| scale * scale * e.variance()).sum();
    BoundPair::new(lower, raw_upper, var.sqrt())
}

/// Sandwich bounds from two or three per-gate sampler estimates.
///
/// The standard error of `IU` is `sqrt(sum_l c^2 p_l (1 - p_l) / M_l)` with
/// `c = 1` (two gates) or `c = 1/2` (three gates).
pub fn bounds_from_estimates(subset: QubitSubset, estimates: &[Estimate]) -> Result<InfluenceBounds> {
    let gate_set = match estimates.len() {
        2 => GateSet::Two,
        3 => GateSet::Three,
        k => return Err(Error::InvalidArgument(format!("need 2 or 3 sampler estimates, got {k}"))),
    };
    if let Some(e) = estimates.iter().find(|e| !(0.0..=1.0).contains(&e.value)) {
        return Err(Error::InvalidArgument(format!("sampler estimate {} is outside [0, 1]", e.value)));
    }
    Ok(InfluenceBounds {
        subset,
        samplers: estimates.to_vec(),
        gate_set,
        two_gate: Some(bound_pair(estimates, BoundMode::TwoGate)),
        three_gate: (gate_set == GateSet::Three).then(|| bound_pair(estimates, BoundMode::ThreeGate)),
        overlap: None,
        source: BoundSource::Direct,
    })
}

/// Bounds from a random-gate overlap probability `Pr`:
/// `Pr <= Inf <= 2 Pr` (RANDOM_I) or `Pr <= Inf <= (3/2) Pr` (RANDOM_II).
pub fn bounds_from_overlap(subset: QubitSubset, overlap: Estimate, gate_set: GateSet) -> Result<InfluenceBounds> {
    let factor = match gate_set {
        GateSet::RandomI => 2.0,
        GateSet::RandomIi => 1.5,
        other => return Err(Error::InvalidArgument(format!("gate set {other} is not a random-gate set"))),
    };
    Ok(InfluenceBounds {
        subset,
        samplers: vec![overlap],
        gate_set,
        two_gate: None,
        three_gate: None,
        overlap: Some(BoundPair::new(overlap.value, factor * overlap.value, factor * overlap.stderr)),
        source: BoundSource::Direct,
    })
}

/// Bounds on `s` estimated from a sampling run.
pub fn bounds_from_sampling(result: &SamplingResult, s: &QubitSubset) -> Result<InfluenceBounds> {
    if result.gate_set.is_random() {
        return bounds_from_overlap(*s, estimate_sampler(&result.distributions[0], s)?, result.gate_set);
    }
    let estimates = result
        .distributions
        .iter()
        .map(|d| estimate_sampler(d, s))
        .collect::<Result<Vec<_>>>()?;
    bounds_from_estimates(*s, &estimates)
}

/// Union-bound surrogate for a multi-qubit subset from single-qubit bounds.
fn surrogate_bounds(subset: QubitSubset, singles: &[&InfluenceBounds]) -> InfluenceBounds {
    let combine = |pick: &dyn Fn(&InfluenceBounds) -> Option<BoundPair>| -> Option<BoundPair> {
        let pairs: Option<Vec<BoundPair>> = singles.iter().map(|b| pick(b)).collect();
        let pairs = pairs?;
        let lower = pairs.iter().map(|p| p.lower).fold(0.0, f64::max);
        let raw_upper: f64 = pairs.iter().map(|p| p.raw_upper).sum();
        // Treats the per-qubit errors as independent; they share shots, so this is approximate.
        let stderr = pairs.iter().map(|p| p.upper_stderr * p.upper_stderr).sum::<f64>().sqrt();
        Some(BoundPair::new(lower, raw_upper, stderr))
    };
    let gate_set = singles.first().map_or(GateSet::Two, |b| b.gate_set);
    InfluenceBounds {
        subset,
        samplers: Vec::new(),
        gate_set,
        two_gate: combine(&|b| b.two_gate),
        three_gate: combine(&|b| b.three_gate),
        overlap: combine(&|b| b.overlap),
        source: BoundSource::Surrogate,
    }
}

fn zero_bounds(subset: QubitSubset, gate_set: GateSet) -> InfluenceBounds {
    let zero = BoundPair::new(0.0, 0.0, 0.0);
    let fixed = !gate_set.is_random();
    InfluenceBounds {
        subset,
        samplers: Vec::new(),
        gate_set,
        two_gate: fixed.then_some(zero),
        three_gate: (gate_set == GateSet::Three).then_some(zero),
        overlap: (!fixed).then_some(zero),
        source: BoundSource::Direct,
    }
}

/// Bounds on `s`, falling back to the single-qubit surrogate on MARGINAL data.
fn subset_bounds(result: &SamplingResult, s: &QubitSubset, per_qubit: &[InfluenceBounds]) -> Result<InfluenceBounds> {
    if s.is_empty() {
        return Ok(zero_bounds(*s, result.gate_set));
    }
    if result.mode == AccumulationMode::Marginal && s.len() > 1 {
        let singles: Vec<&InfluenceBounds> = s.qubits().iter().map(|&q| &per_qubit[q - 1]).collect();
        return Ok(surrogate_bounds(*s, &singles));
    }
    bounds_from_sampling(result, s)
}

/// Distance-to-junta bound `sqrt(IU) + IU / sqrt(2)` with `IU` clamped to [0, 1].
pub fn junta_distance_bound(iu: f64) -> f64 {
    let iu = iu.clamp(0.0, 1.0);
    iu.sqrt() + iu / std::f64::consts::SQRT_2
}

/// Distance-to-junta bound with delta-method error propagation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub value: f64,
    /// Delta-method error `stderr(IU) (1 / (2 sqrt(IU)) + 1 / sqrt(2))`; absent
    /// when `IU` is within two standard errors of 0, where it is unreliable.
    pub stderr: Option<f64>,
    /// One-sided upper limit `epsilon(IU + 2 stderr(IU))`.
    pub upper: f64,
}

pub fn epsilon_estimate(iu: f64, iu_stderr: f64) -> EpsilonEstimate {
    let iu = iu.clamp(0.0, 1.0);
    let stderr = (iu > ONE_SIDED_Z * iu_stderr && iu > 0.0)
        .then(|| iu_stderr * (0.5 / iu.sqrt() + std::f64::consts::FRAC_1_SQRT_2));
    EpsilonEstimate { value: junta_distance_bound(iu), stderr, upper: junta_distance_bound(iu + ONE_SIDED_Z * iu_stderr) }
}

/// Output of high-influence-qubit identification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiqiResult {
    pub t: QubitSubset,
    pub per_qubit: Vec<InfluenceBounds>,
    pub t_bounds: InfluenceBounds,
    pub complement_bounds: InfluenceBounds,
    /// Decision value `IU_{T^c}` (preferred family, clamped).
    pub iu_complement: f64,
    pub iu_complement_stderr: f64,
    pub delta: f64,
    pub shots: u64,
    pub seed: u64,
    pub gate_set: GateSet,
    pub mode: AccumulationMode,
}

impl HiqiResult {
    pub fn surrogate(&self) -> bool {
        self.complement_bounds.source == BoundSource::Surrogate
    }
}

/// Classifies every qubit by `IU_{i} > delta` and bounds `T` and `T^c` from the
/// same sampling run.
pub fn hiqi(result: &SamplingResult, delta: f64) -> Result<HiqiResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("threshold delta = {delta} must be positive")));
    }
    let n = result.n;
    let per_qubit = (1..=n)
        .map(|q| bounds_from_sampling(result, &QubitSubset::from_qubits(n, &[q])?))
        .collect::<Result<Vec<_>>>()?;
    let high: Vec<usize> = (1..=n).filter(|&q| per_qubit[q - 1].preferred().upper > delta).collect();
    let t = QubitSubset::from_qubits(n, &high)?;
    let t_bounds = subset_bounds(result, &t, &per_qubit)?;
    let complement_bounds = subset_bounds(result, &t.complement(), &per_qubit)?;
    let pref = *complement_bounds.preferred();
    Ok(HiqiResult {
        t,
        per_qubit,
        t_bounds,
        complement_bounds,
        iu_complement: pref.upper,
        iu_complement_stderr: pref.upper_stderr,
        delta,
        shots: result.total_shots(),
        seed: result.seed,
        gate_set: result.gate_set,
        mode: result.mode,
    })
}

/// Samples the process and runs [`hiqi`].
pub fn hiqi_process(view: &JuntaView, config: &SamplerConfig, delta: f64) -> Result<HiqiResult> {
    let min = if config.gate_set.is_random() { 1 } else { 2 * config.gate_set.gates().len() as u64 };
    if config.shots < min {
        return Err(Error::InvalidArgument(format!("budget M = {} is below {min}", config.shots)));
    }
    hiqi(&run_sampling(view, config)?, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterVerdict {
    pub verdict: Verdict,
    pub k: usize,
    pub t: QubitSubset,
    pub t_size: usize,
    /// Present iff the verdict is YES.
    pub epsilon: Option<EpsilonEstimate>,
    pub iu_complement: f64,
    pub surrogate: bool,
}

/// YES iff `|T| <= k`; a YES carries the distance bound to a `T`-junta.
pub fn junta_tester(hiqi: &HiqiResult, k: usize) -> Result<TesterVerdict> {
    let n = hiqi.t.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("junta size k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let yes = hiqi.t.len() <= k;
    Ok(TesterVerdict {
        verdict: if yes { Verdict::Yes } else { Verdict::No },
        k,
        t: hiqi.t,
        t_size: hiqi.t.len(),
        epsilon: yes.then(|| epsilon_estimate(hiqi.iu_complement, hiqi.iu_complement_stderr)),
        iu_complement: hiqi.iu_complement,
        surrogate: hiqi.surrogate(),
    })
}

/// Samples the process, identifies `T` and tests for a `k`-junta.
pub fn junta_test_process(view: &JuntaView, config: &SamplerConfig, k: usize, delta: f64) -> Result<(HiqiResult, TesterVerdict)> {
    let h = hiqi_process(view, config, delta)?;
    let v = junta_tester(&h, k)?;
    Ok((h, v))
}

/// Variance of the `IU` estimator predicted from exact sampler expectations
/// under an even split of `shots` over the gates of `gate_set`.
pub fn predicted_upper_variance(samplers: [f64; 3], gate_set: GateSet, shots: u64) -> f64 {
    let (gates, scale) = match gate_set {
        GateSet::Two => (2, 1.0),
        GateSet::Three => (3, 0.25),
        GateSet::RandomI => {
            let p = 0.5 * (samplers[0] + samplers[1]);
            return 4.0 * p * (1.0 - p) / shots as f64;
        }
        GateSet::RandomIi => {
            let p = (samplers[0] + samplers[1] + samplers[2]) / 3.0;
            return 2.25 * p * (1.0 - p) / shots as f64;
        }
    };
    let per_gate = shots as f64 / gates as f64;
    samplers[..gates].iter().map(|p| scale * p * (1.0 - p) / per_gate).sum()
}

/// Shots needed so the `IU` standard error falls to `target_stderr`.
pub fn required_shots(samplers: [f64; 3], gate_set: GateSet, target_stderr: f64) -> f64 {
    predicted_upper_variance(samplers, gate_set, 1) / (target_stderr * target_stderr)
}

/// Exact per-gate samplers wrapped as estimates with the errors an `M`-shot run would have.
pub fn exact_estimates(samplers: [f64; 3], gate_set: GateSet, shots: u64) -> Vec<Estimate> {
    let split = SamplerConfig::new(gate_set, shots, 0).shot_split();
    gate_set.gates().iter().zip(split).map(|(g, m)| Estimate::exact(samplers[g.index() - 1], m)).collect()
}

/// Convenience for tests and reports: `E X_l^S` of a fixed-gate run.
pub fn gate_estimate(result: &SamplingResult, gate: TestGate, s: &QubitSubset) -> Result<Estimate> {
    estimate_sampler(result.gate(gate)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{GateKind, GateSpec, NoiseModel, ProcessSpec};

    fn subset(n: usize, q: &[usize]) -> QubitSubset {
        QubitSubset::from_qubits(n, q).unwrap()
    }

    fn cnot4() -> JuntaView {
        ProcessSpec::new(4, vec![GateSpec::new(GateKind::Cnot, &[2, 1])]).junta_view().unwrap()
    }

    #[test]
    fn trivial_distribution_gives_zero() {
        let dist = SubsetDistribution::from_counts(2, [(0, 100)]).unwrap();
        let e = estimate_sampler(&dist, &subset(2, &[1])).unwrap();
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn binomial_stderr() {
        let dist = SubsetDistribution::from_counts(2, [(0, 5000), (0b10, 5000)]).unwrap();
        let e = estimate_sampler(&dist, &subset(2, &[2])).unwrap();
        assert_eq!(e.value, 0.5);
        assert!((e.stderr - 0.005).abs() < 1e-15);
    }

    #[test]
    fn bounds_for_exact_cnot_pair() {
        let est = [0.5, 0.5, 0.75].map(|v| Estimate { value: v, stderr: 0.0, shots: 1 });
        let b = bounds_from_estimates(subset(4, &[1, 2]), &est).unwrap();
        let two = b.two_gate.unwrap();
        let three = b.three_gate.unwrap();
        assert_eq!((two.lower, two.upper), (0.5, 1.0));
        assert_eq!((three.lower, three.upper), (0.75, 0.875));
        let zero = bounds_from_estimates(subset(4, &[3]), &est[..2].iter().map(|e| Estimate { value: 0.0, ..*e }).collect::<Vec<_>>()).unwrap();
        assert_eq!(zero.preferred().upper, 0.0);
    }

    #[test]
    fn upper_bound_variance_formula() {
        let est: Vec<_> = (0..2).map(|_| Estimate::exact(0.5, 5_000)).collect();
        let b = bounds_from_estimates(subset(2, &[1]), &est).unwrap();
        assert!((b.two_gate.unwrap().upper_stderr - 0.01).abs() < 1e-12);
        assert!((predicted_upper_variance([0.5, 0.5, 0.0], GateSet::Two, 10_000) - 1e-4).abs() < 1e-15);
        let p = [0.3, 0.2, 0.1];
        let three = predicted_upper_variance(p, GateSet::Three, 3000);
        let expect = 3.0 * p.iter().map(|x| x * (1.0 - x)).sum::<f64>() / (4.0 * 3000.0);
        assert!((three - expect).abs() < 1e-15);
    }

    #[test]
    fn epsilon_values() {
        assert!((junta_distance_bound(0.0034) - 0.0607).abs() < 5e-4);
        assert_eq!(junta_distance_bound(0.0), 0.0);
        let e = epsilon_estimate(0.0034, 0.0002);
        assert!(e.stderr.unwrap() > 0.0 && e.upper > e.value);
        let guarded = epsilon_estimate(0.0001, 0.0002);
        assert!(guarded.stderr.is_none());
        assert!((guarded.upper - junta_distance_bound(0.0005)).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_strict() {
        let b = |u: f64| bounds_from_estimates(subset(1, &[1]), &[Estimate::exact(u, 10), Estimate::exact(0.0, 10)]).unwrap();
        let counts = SubsetDistribution::from_counts(2, [(0, 994), (1, 6)]).unwrap();
        let empty = SubsetDistribution::from_counts(2, [(0, 1000)]).unwrap();
        let result = SamplingResult {
            n: 2,
            gate_set: GateSet::Two,
            mode: AccumulationMode::Full,
            seed: 0,
            distributions: vec![counts, empty],
        };
        assert_eq!(b(0.006).preferred().upper, 0.006);
        assert!(hiqi(&result, 0.006).unwrap().t.is_empty());
        assert_eq!(hiqi(&result, 0.0059).unwrap().t.qubits(), vec![1]);
    }

    #[test]
    fn cnot_hiqi_noiseless() {
        let config = SamplerConfig::new(GateSet::Two, 40_000, 17);
        let h = hiqi_process(&cnot4(), &config, DEFAULT_DELTA).unwrap();
        assert_eq!(h.t.qubits(), vec![1, 2]);
        assert_eq!(h.iu_complement, 0.0);
        let v = junta_tester(&h, 2).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        assert_eq!(v.epsilon.unwrap().value, 0.0);
        assert_eq!(junta_tester(&h, 1).unwrap().verdict, Verdict::No);
        assert!(junta_tester(&h, 4).is_err());
    }

    #[test]
    fn identity_hiqi_is_empty() {
        let h = hiqi_process(&JuntaView::identity(3), &SamplerConfig::new(GateSet::Three, 3000, 1), DEFAULT_DELTA).unwrap();
        assert!(h.t.is_empty());
        assert_eq!(h.complement_bounds.subset, QubitSubset::full(3));
    }

    #[test]
    fn three_junta_fails_k2() {
        let spec = ProcessSpec::new(
            4,
            vec![GateSpec::new(GateKind::Cnot, &[2, 1]), GateSpec::new(GateKind::H, &[4])],
        );
        let (h, v) = junta_test_process(&spec.junta_view().unwrap(), &SamplerConfig::new(GateSet::Two, 20_000, 2), 2, DEFAULT_DELTA).unwrap();
        assert_eq!(h.t.qubits(), vec![1, 2, 4]);
        assert_eq!(v.verdict, Verdict::No);
        assert!(v.epsilon.is_none());
    }

    #[test]
    fn marginal_mode_uses_surrogate() {
        let config = SamplerConfig::new(GateSet::Two, 40_000, 3)
            .with_noise(NoiseModel::default())
            .with_mode(AccumulationMode::Marginal);
        let h = hiqi_process(&cnot4(), &config, DEFAULT_DELTA).unwrap();
        assert_eq!(h.t.qubits(), vec![1, 2]);
        assert!(h.surrogate());
        let sum: f64 = [3, 4].iter().map(|&q| h.per_qubit[q - 1].preferred().raw_upper).sum();
        assert!((h.complement_bounds.preferred().raw_upper - sum).abs() < 1e-15);
        assert!(gate_estimate(&run_sampling(&cnot4(), &config).unwrap(), TestGate::Identity, &subset(4, &[3, 4])).is_err());
    }

    #[test]
    fn random_gate_bounds() {
        let config = SamplerConfig::new(GateSet::RandomI, 40_000, 5);
        let h = hiqi_process(&cnot4(), &config, DEFAULT_DELTA).unwrap();
        assert_eq!(h.t.qubits(), vec![1, 2]);
        let pair = h.t_bounds.overlap.unwrap();
        assert!((pair.upper - 2.0 * pair.lower).abs() < 1e-12 || pair.upper == 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(bounds_from_estimates(subset(1, &[1]), &[Estimate::exact(0.1, 1)]).is_err());
        assert!(bounds_from_overlap(subset(1, &[1]), Estimate::exact(0.1, 1), GateSet::Two).is_err());
        assert!(hiqi_process(&cnot4(), &SamplerConfig::new(GateSet::Two, 3, 0), 0.006).is_err());
        let res = run_sampling(&cnot4(), &SamplerConfig::new(GateSet::Two, 100, 0)).unwrap();
        assert!(hiqi(&res, 0.0).is_err());
    }
}
