//! Shot-level simulation of the influence sampler and its random-test-gate
//! variant.
//!
//! Only the junta support is evolved: for a support of `k` qubits the outcome
//! distribution `Pr[b | a]` is tabulated once per test gate (`4^k` entries) and
//! every shot costs `O(k + n)`. Shots are cut into fixed-size blocks, each
//! driven by its own ChaCha8 stream `seed_from_u64(seed)` with
//! `set_stream(gate << 48 | block)` (`gate = 4` for random-gate runs), so the
//! merged counts do not depend on the worker count or on scheduling.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{gates, JuntaView, NoiseModel};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64, ZERO};
use crate::subset::QubitSubset;

/// Shots per RNG block.
pub const BLOCK_SHOTS: u64 = 4096;
/// Largest junta support the tabulating sampler accepts.
pub const MAX_SAMPLER_SUPPORT: usize = 10;
/// Default limit on distinct flip subsets kept in FULL mode.
pub const DEFAULT_MAX_DISTINCT: usize = 1 << 20;

const RANDOM_STREAM: u64 = 4;

/// Transversal test gate `U_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestGate {
    /// `U_1 = I`.
    Identity,
    /// `U_2 = H`.
    Hadamard,
    /// `U_3 = Rx(pi/2)`.
    RxHalfPi,
}

impl TestGate {
    pub const ALL: [TestGate; 3] = [TestGate::Identity, TestGate::Hadamard, TestGate::RxHalfPi];

    /// 1-based gate index `l`.
    pub fn index(self) -> usize {
        match self {
            TestGate::Identity => 1,
            TestGate::Hadamard => 2,
            TestGate::RxHalfPi => 3,
        }
    }

    pub fn from_index(l: usize) -> Result<Self> {
        match l {
            1 => Ok(TestGate::Identity),
            2 => Ok(TestGate::Hadamard),
            3 => Ok(TestGate::RxHalfPi),
            _ => Err(Error::InvalidArgument(format!("test gate index {l} is not in 1..=3"))),
        }
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            TestGate::Identity => crate::linalg::identity(2),
            TestGate::Hadamard => gates::hadamard(),
            TestGate::RxHalfPi => gates::rx(std::f64::consts::FRAC_PI_2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSet {
    #[serde(alias = "2")]
    Two,
    #[serde(alias = "3")]
    Three,
    #[serde(alias = "rand1")]
    RandomI,
    #[serde(alias = "rand2")]
    RandomIi,
}

impl GateSet {
    pub fn gates(self) -> &'static [TestGate] {
        match self {
            GateSet::Two | GateSet::RandomI => &TestGate::ALL[..2],
            GateSet::Three | GateSet::RandomIi => &TestGate::ALL[..],
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, GateSet::RandomI | GateSet::RandomIi)
    }
}

impl std::str::FromStr for GateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "two" => Ok(GateSet::Two),
            "3" | "three" => Ok(GateSet::Three),
            "rand1" | "random_i" => Ok(GateSet::RandomI),
            "rand2" | "random_ii" => Ok(GateSet::RandomIi),
            _ => Err(Error::InvalidArgument(format!("unknown gate set {s:?}; use 2, 3, rand1 or rand2"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccumulationMode {
    /// Every observed flip subset with its count.
    #[default]
    Full,
    /// Per-qubit flip counts only.
    Marginal,
}

/// One simulated shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub n: usize,
    pub a: u64,
    pub b: u64,
    pub gate: TestGate,
}

impl ShotRecord {
    /// Qubits whose outcome differs from the prepared bit.
    pub fn flipset(&self) -> QubitSubset {
        QubitSubset::from_mask(self.n, self.a ^ self.b).expect("bits stay inside the register")
    }
}

/// Empirical distribution of flip subsets for one test gate (or one random-gate run).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DistributionRecord", try_from = "DistributionRecord")]
pub struct SubsetDistribution {
    n: usize,
    mode: AccumulationMode,
    total: u64,
    counts: BTreeMap<u64, u64>,
    marginals: Vec<u64>,
}

impl SubsetDistribution {
    pub fn new(n: usize, mode: AccumulationMode) -> Self {
        let marginals = match mode {
            AccumulationMode::Full => Vec::new(),
            AccumulationMode::Marginal => vec![0; n],
        };
        Self { n, mode, total: 0, counts: BTreeMap::new(), marginals }
    }

    /// Builds a FULL distribution from explicit `(mask, count)` pairs.
    pub fn from_counts(n: usize, counts: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut dist = Self::new(n, AccumulationMode::Full);
        for (mask, count) in counts {
            QubitSubset::from_mask(n, mask)?;
            dist.add(mask, count);
        }
        Ok(dist)
    }

    /// Builds a MARGINAL distribution from per-qubit flip counts.
    pub fn from_marginals(total: u64, marginals: Vec<u64>) -> Result<Self> {
        if let Some(bad) = marginals.iter().find(|&&m| m > total) {
            return Err(Error::Validation(format!("marginal count {bad} exceeds total {total}")));
        }
        Ok(Self { n: marginals.len(), mode: AccumulationMode::Marginal, total, counts: BTreeMap::new(), marginals })
    }

    #[inline]
    pub fn add(&mut self, mask: u64, count: u64) {
        self.total += count;
        match self.mode {
            AccumulationMode::Full => *self.counts.entry(mask).or_insert(0) += count,
            AccumulationMode::Marginal => {
                let mut m = mask;
                while m != 0 {
                    self.marginals[m.trailing_zeros() as usize] += count;
                    m &= m - 1;
                }
            }
        }
    }

    /// Associative, commutative count addition.
    pub fn merge(&mut self, other: &SubsetDistribution) {
        assert_eq!((self.n, self.mode), (other.n, other.mode), "merging incompatible distributions");
        self.total += other.total;
        for (&mask, &count) in &other.counts {
            *self.counts.entry(mask).or_insert(0) += count;
        }
        for (a, b) in self.marginals.iter_mut().zip(&other.marginals) {
            *a += b;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> AccumulationMode {
        self.mode
    }

    pub fn total_shots(&self) -> u64 {
        self.total
    }

    /// Subset counts; `None` in MARGINAL mode.
    pub fn counts(&self) -> Option<&BTreeMap<u64, u64>> {
        (self.mode == AccumulationMode::Full).then_some(&self.counts)
    }

    pub fn distinct_subsets(&self) -> usize {
        self.counts.len()
    }

    /// Empirical probability of the exact flip subset `s` (FULL mode only).
    pub fn probability(&self, s: &QubitSubset) -> Result<f64> {
        let counts = self.counts().ok_or_else(|| {
            Error::Capability("subset probabilities need a FULL distribution".into())
        })?;
        Ok(ratio(counts.get(&s.mask()).copied().unwrap_or(0), self.total))
    }

    /// Per-qubit flip counts `#[i in T]`, projected from FULL data if needed.
    pub fn marginal_counts(&self) -> Vec<u64> {
        match self.mode {
            AccumulationMode::Marginal => self.marginals.clone(),
            AccumulationMode::Full => {
                let mut out = vec![0u64; self.n];
                for (&mask, &count) in &self.counts {
                    let mut m = mask;
                    while m != 0 {
                        out[m.trailing_zeros() as usize] += count;
                        m &= m - 1;
                    }
                }
                out
            }
        }
    }

    pub fn marginal_rates(&self) -> Vec<f64> {
        self.marginal_counts().into_iter().map(|c| ratio(c, self.total)).collect()
    }

    pub fn to_marginal(&self) -> SubsetDistribution {
        Self { n: self.n, mode: AccumulationMode::Marginal, total: self.total, counts: BTreeMap::new(), marginals: self.marginal_counts() }
    }

    /// Number of shots whose flip subset meets `s`.
    ///
    /// MARGINAL data only supports single-qubit `s`.
    pub fn overlap_count(&self, s: &QubitSubset) -> Result<u64> {
        if s.n() != self.n {
            return Err(Error::InvalidArgument(format!(
                "subset over {} qubits used with a {}-qubit distribution",
                s.n(),
                self.n
            )));
        }
        if s.is_empty() {
            return Ok(0);
        }
        match self.mode {
            AccumulationMode::Full => Ok(self
                .counts
                .iter()
                .filter(|(&mask, _)| mask & s.mask() != 0)
                .map(|(_, &count)| count)
                .sum()),
            AccumulationMode::Marginal if s.len() == 1 => {
                Ok(self.marginals[s.mask().trailing_zeros() as usize])
            }
            AccumulationMode::Marginal => Err(Error::Capability(format!(
                "marginal-only data cannot estimate the multi-qubit subset {s}; rerun in FULL mode"
            ))),
        }
    }

    /// Fraction of shots whose flip subset meets `s`.
    pub fn overlap_probability(&self, s: &QubitSubset) -> Result<f64> {
        Ok(ratio(self.overlap_count(s)?, self.total))
    }
}

fn ratio(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Serialized form: `(mask, count)` pairs in FULL mode, per-qubit counts in MARGINAL mode.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionRecord {
    n: usize,
    mode: AccumulationMode,
    total_shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subsets: Option<Vec<(u64, u64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marginals: Option<Vec<u64>>,
}

impl From<SubsetDistribution> for DistributionRecord {
    fn from(d: SubsetDistribution) -> Self {
        match d.mode {
            AccumulationMode::Full => Self {
                n: d.n,
                mode: d.mode,
                total_shots: d.total,
                subsets: Some(d.counts.into_iter().collect()),
                marginals: None,
            },
            AccumulationMode::Marginal => Self {
                n: d.n,
                mode: d.mode,
                total_shots: d.total,
                subsets: None,
                marginals: Some(d.marginals),
            },
        }
    }
}

impl TryFrom<DistributionRecord> for SubsetDistribution {
    type Error = Error;

    fn try_from(r: DistributionRecord) -> Result<Self> {
        match r.mode {
            AccumulationMode::Full => {
                let dist = Self::from_counts(r.n, r.subsets.unwrap_or_default())?;
                if dist.total != r.total_shots {
                    return Err(Error::Validation(format!(
                        "subset counts sum to {}, header says {}",
                        dist.total, r.total_shots
                    )));
                }
                Ok(dist)
            }
            AccumulationMode::Marginal => {
                let marginals = r.marginals.unwrap_or_else(|| vec![0; r.n]);
                if marginals.len() != r.n {
                    return Err(Error::Dimension { expected: r.n, found: marginals.len() });
                }
                Self::from_marginals(r.total_shots, marginals)
            }
        }
    }
}

impl std::fmt::Display for GateSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GateSet::Two => "2",
            GateSet::Three => "3",
            GateSet::RandomI => "rand1",
            GateSet::RandomIi => "rand2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub gate_set: GateSet,
    /// Total shot budget `M`, split across the fixed gates.
    pub shots: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub mode: AccumulationMode,
    pub max_distinct: usize,
}

impl SamplerConfig {
    pub fn new(gate_set: GateSet, shots: u64, seed: u64) -> Self {
        Self {
            gate_set,
            shots,
            noise: NoiseModel::noiseless(),
            seed,
            workers: 0,
            mode: AccumulationMode::Full,
            max_distinct: DEFAULT_MAX_DISTINCT,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_mode(mut self, mode: AccumulationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Per-gate shot counts: `M` split as evenly as possible, earlier gates
    /// taking the remainder. Random-gate sets keep `M` in one pool.
    pub fn shot_split(&self) -> Vec<u64> {
        if self.gate_set.is_random() {
            return vec![self.shots];
        }
        let g = self.gate_set.gates().len() as u64;
        (0..g).map(|i| self.shots / g + u64::from(i < self.shots % g)).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        let min = if self.gate_set.is_random() { 1 } else { self.gate_set.gates().len() as u64 };
        if self.shots < min {
            return Err(Error::InvalidArgument(format!(
                "{} shot(s) cannot cover gate set {}",
                self.shots, self.gate_set
            )));
        }
        self.noise.validate(n)
    }
}

/// Output of one sampling run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingResult {
    pub n: usize,
    pub gate_set: GateSet,
    pub mode: AccumulationMode,
    pub seed: u64,
    /// One entry per fixed test gate, in gate order; a single entry for random-gate sets.
    pub distributions: Vec<SubsetDistribution>,
}

impl SamplingResult {
    /// Distribution of fixed test gate `gate`.
    pub fn gate(&self, gate: TestGate) -> Result<&SubsetDistribution> {
        if self.gate_set.is_random() {
            return Err(Error::Capability("random-gate runs keep a single pooled distribution".into()));
        }
        self.distributions
            .get(gate.index() - 1)
            .ok_or_else(|| Error::Capability(format!("gate set {} has no U_{}", self.gate_set, gate.index())))
    }

    pub fn total_shots(&self) -> u64 {
        self.distributions.iter().map(|d| d.total_shots()).sum()
    }
}

// ---------------------------------------------------------------------------
// shot engine

/// Applies a 2x2 `u` to local qubit `j` of a `k`-qubit column vector in place.
fn apply_1q(v: &mut [C64], u: &[[C64; 2]; 2], j: usize, k: usize) {
    let bit = 1usize << (k - 1 - j);
    for i in 0..v.len() {
        if i & bit == 0 {
            let (x0, x1) = (v[i], v[i | bit]);
            v[i] = u[0][0] * x0 + u[0][1] * x1;
            v[i | bit] = u[1][0] * x0 + u[1][1] * x1;
        }
    }
}

fn to_array(m: &CMatrix) -> [[C64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (col, z) in row.iter_mut().enumerate() {
            *z = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

fn adjoint2(a: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn ry2(eta: f64) -> [[C64; 2]; 2] {
    let (co, si) = ((eta / 2.0).cos(), (eta / 2.0).sin());
    [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]]
}

/// Outcome probabilities `Pr[b | a]` for every local input `a` under test gate `u`,
/// returned as a row-major `2^k x 2^k` table indexed `[a][b]`.
fn outcome_table(view: &JuntaView, u: &[[C64; 2]; 2]) -> Vec<f64> {
    let k = view.support().len();
    let d = 1usize << k;
    let ud = adjoint2(u);
    let mut table = vec![0.0; d * d];
    let mut col = vec![ZERO; d];
    for a in 0..d {
        for op in view.kraus().ops() {
            // column a of U^dagger K U = U^dagger K (U|a>)
            let mut ua = vec![ZERO; d];
            ua[a] = c(1.0, 0.0);
            for j in 0..k {
                apply_1q(&mut ua, u, j, k);
            }
            for (r, z) in col.iter_mut().enumerate() {
                *z = (0..d).map(|s| op[(r, s)] * ua[s]).sum();
            }
            for j in 0..k {
                apply_1q(&mut col, &ud, j, k);
            }
            for (b, z) in col.iter().enumerate() {
                table[a * d + b] += z.norm_sqr();
            }
        }
    }
    table
}

/// Precomputed per-gate outcome samplers for one junta process.
#[derive(Clone, Debug)]
pub struct ShotSampler {
    n: usize,
    view: JuntaView,
    support_bits: Vec<u32>,
    /// Per gate, row-wise cumulative `Pr[b | a]`.
    cdfs: [Vec<f64>; 3],
    tables: [Vec<f64>; 3],
    noisy: Vec<u32>,
    flip: [f64; 3],
    jitter: Option<Normal<f64>>,
}

impl ShotSampler {
    pub fn new(view: &JuntaView, noise: &NoiseModel) -> Result<Self> {
        let n = view.n();
        noise.validate(n)?;
        let k = view.support().len();
        if k > MAX_SAMPLER_SUPPORT {
            return Err(Error::SizeCap { what: "junta support for shot sampling", n: k, cap: MAX_SAMPLER_SUPPORT });
        }
        let d = 1usize << k;
        let tables = TestGate::ALL.map(|g| outcome_table(view, &to_array(&g.matrix())));
        let cdfs = tables.clone().map(|t| {
            let mut cdf = t;
            for row in cdf.chunks_mut(d) {
                let mut acc = 0.0;
                for p in row.iter_mut() {
                    acc += *p;
                    *p = acc;
                }
                // Guard the final bucket against rounding below 1.
                let last = row.len() - 1;
                row[last] = f64::INFINITY;
            }
            cdf
        });
        let jitter = match noise.overrotation {
            Some(s) if s > 0.0 => Some(Normal::new(0.0, s).map_err(|e| Error::InvalidArgument(e.to_string()))?),
            _ => None,
        };
        Ok(Self {
            n,
            view: view.clone(),
            support_bits: view.support().qubits().iter().map(|&q| (q - 1) as u32).collect(),
            cdfs,
            tables,
            noisy: noise.noisy_qubits(n).qubits().iter().map(|&q| (q - 1) as u32).collect(),
            flip: [noise.flip.gate1, noise.flip.gate2, noise.flip.gate3],
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn view(&self) -> &JuntaView {
        &self.view
    }

    fn full_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    #[inline]
    fn gather(&self, a: u64) -> usize {
        self.support_bits.iter().fold(0usize, |acc, &b| (acc << 1) | ((a >> b) & 1) as usize)
    }

    #[inline]
    fn scatter(&self, local: usize) -> u64 {
        let k = self.support_bits.len();
        self.support_bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | ((((local >> (k - 1 - j)) & 1) as u64) << b))
    }

    /// Ideal (noise-free) outcome on the support for local input `a_loc`.
    fn ideal_outcome(&self, gate: TestGate, a_loc: usize, rng: &mut impl Rng) -> usize {
        let d = 1usize << self.support_bits.len();
        let row = &self.cdfs[gate.index() - 1][a_loc * d..(a_loc + 1) * d];
        let r: f64 = rng.gen();
        row.partition_point(|&c| c <= r).min(d - 1)
    }

    /// Support outcome with independent Ry jitter after `U` and before `U^dagger`
    /// on every support qubit; returns the local outcome.
    fn jittered_outcome(&self, gate: TestGate, a_loc: usize, normal: &Normal<f64>, rng: &mut impl Rng) -> usize {
        let k = self.support_bits.len();
        let d = 1usize << k;
        let u = to_array(&gate.matrix());
        let ud = adjoint2(&u);
        let pre: Vec<_> = (0..k).map(|_| mul2(&ry2(normal.sample(rng)), &u)).collect();
        let post: Vec<_> = (0..k).map(|_| mul2(&ud, &ry2(normal.sample(rng)))).collect();
        let mut input = vec![ZERO; d];
        input[a_loc] = c(1.0, 0.0);
        for (j, m) in pre.iter().enumerate() {
            apply_1q(&mut input, m, j, k);
        }
        let mut probs = vec![0.0; d];
        let mut out = vec![ZERO; d];
        for op in self.view.kraus().ops() {
            for (r, z) in out.iter_mut().enumerate() {
                *z = (0..d).map(|s| op[(r, s)] * input[s]).sum();
            }
            for (j, m) in post.iter().enumerate() {
                apply_1q(&mut out, m, j, k);
            }
            for (p, z) in probs.iter_mut().zip(&out) {
                *p += z.norm_sqr();
            }
        }
        let r: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        for (b, p) in probs.iter().enumerate() {
            acc += p;
            if r < acc {
                return b;
            }
        }
        d - 1
    }

    /// One shot: random `a`, transversal `U_l`, the process, `U_l^dagger`,
    /// computational measurement, then classical flip noise.
    pub fn shot(&self, gate: TestGate, rng: &mut impl Rng) -> ShotRecord {
        let a = rng.next_u64() & self.full_mask();
        let a_loc = self.gather(a);
        let mut flips = match &self.jitter {
            None => self.scatter(a_loc ^ self.ideal_outcome(gate, a_loc, rng)),
            Some(normal) => {
                let mut f = self.scatter(a_loc ^ self.jittered_outcome(gate, a_loc, normal, rng));
                // Idle qubits see U^dagger Ry(eta2) Ry(eta1) U.
                let u = to_array(&gate.matrix());
                let support = self.view.support().mask();
                for q in 0..self.n as u32 {
                    if support >> q & 1 == 1 {
                        continue;
                    }
                    let eta = normal.sample(rng) + normal.sample(rng);
                    let m = mul2(&adjoint2(&u), &mul2(&ry2(eta), &u));
                    let bit = (a >> q & 1) as usize;
                    if rng.gen::<f64>() < m[1 - bit][bit].norm_sqr() {
                        f |= 1 << q;
                    }
                }
                f
            }
        };
        let p = self.flip[gate.index() - 1];
        if p > 0.0 {
            for &q in &self.noisy {
                if rng.gen::<f64>() < p {
                    flips ^= 1 << q;
                }
            }
        }
        ShotRecord { n: self.n, a, b: a ^ flips, gate }
    }

    /// Exact noise-free distribution of support flip patterns under `gate`,
    /// averaged over uniform inputs; indexed by local flip pattern.
    pub fn exact_flip_distribution(&self, gate: TestGate) -> Vec<f64> {
        let d = 1usize << self.support_bits.len();
        let table = &self.tables[gate.index() - 1];
        let mut out = vec![0.0; d];
        for a in 0..d {
            for b in 0..d {
                out[a ^ b] += table[a * d + b] / d as f64;
            }
        }
        out
    }

    /// Exact expectation of the sampler `X_l^S` including classical flip
    /// noise (over-rotation jitter is not included).
    pub fn exact_sampler(&self, gate: TestGate, s: &QubitSubset) -> Result<f64> {
        if s.n() != self.n {
            return Err(Error::InvalidArgument("subset size does not match the process".into()));
        }
        let p = self.flip[gate.index() - 1];
        let noisy = self.noisy.iter().fold(0u64, |acc, &q| acc | 1 << q);
        let survive = |flipped: bool, q: u32| -> f64 {
            let is_noisy = noisy >> q & 1 == 1;
            match (flipped, is_noisy) {
                (false, true) => 1.0 - p,
                (true, true) => p,
                (false, false) => 1.0,
                (true, false) => 0.0,
            }
        };
        let support = self.view.support().mask();
        let idle: f64 = (0..self.n as u32)
            .filter(|&q| s.mask() >> q & 1 == 1 && support >> q & 1 == 0)
            .map(|q| survive(false, q))
            .product();
        let mut clean = 0.0;
        for (pattern, prob) in self.exact_flip_distribution(gate).into_iter().enumerate() {
            if prob == 0.0 {
                continue;
            }
            let flips = self.scatter(pattern);
            let inside: f64 = self
                .support_bits
                .iter()
                .filter(|&&q| s.mask() >> q & 1 == 1)
                .map(|&q| survive(flips >> q & 1 == 1, q))
                .product();
            clean += prob * inside;
        }
        Ok((1.0 - clean * idle).clamp(0.0, 1.0))
    }
}

/// Single shot from a process view (builds the per-gate tables each call; use
/// [`ShotSampler`] for repeated shots).
pub fn influence_sample_shot(view: &JuntaView, gate: TestGate, noise: &NoiseModel, rng: &mut impl Rng) -> Result<ShotRecord> {
    Ok(ShotSampler::new(view, noise)?.shot(gate, rng))
}

fn block_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream << 48 | block);
    rng
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn check_distinct(dist: &SubsetDistribution, cap: usize) -> Result<()> {
    if dist.distinct_subsets() > cap {
        return Err(Error::ResourceCap(format!(
            "more than {cap} distinct flip subsets observed on {} qubits; use marginal-only mode",
            dist.n()
        )));
    }
    Ok(())
}

/// Runs `shots` shots in parallel blocks; `pick` chooses the test gate per shot.
fn run_blocks(
    sampler: &ShotSampler,
    config: &SamplerConfig,
    stream: u64,
    shots: u64,
    pick: impl Fn(&mut ChaCha8Rng) -> TestGate + Sync,
) -> Result<SubsetDistribution> {
    let blocks = shots.div_ceil(BLOCK_SHOTS);
    let n = sampler.n();
    let block = |b: u64| -> Result<SubsetDistribution> {
        let mut rng = block_rng(config.seed, stream, b);
        let mut dist = SubsetDistribution::new(n, config.mode);
        let count = BLOCK_SHOTS.min(shots - b * BLOCK_SHOTS);
        for _ in 0..count {
            let gate = pick(&mut rng);
            let shot = sampler.shot(gate, &mut rng);
            dist.add(shot.a ^ shot.b, 1);
        }
        check_distinct(&dist, config.max_distinct)?;
        Ok(dist)
    };
    let merged = with_pool(config.workers, || {
        (0..blocks)
            .into_par_iter()
            .map(block)
            .try_reduce(|| SubsetDistribution::new(n, config.mode), |mut a, b| {
                a.merge(&b);
                check_distinct(&a, config.max_distinct)?;
                Ok(a)
            })
    })??;
    Ok(merged)
}

/// Fixed-gate sampling: `M` shots split over the gates of `config.gate_set`.
/// Random-gate sets are forwarded to [`run_sampling_random`].
pub fn run_sampling(view: &JuntaView, config: &SamplerConfig) -> Result<SamplingResult> {
    if config.gate_set.is_random() {
        return run_sampling_random(view, config);
    }
    config.validate(view.n())?;
    let sampler = ShotSampler::new(view, &config.noise)?;
    let distributions = config
        .gate_set
        .gates()
        .iter()
        .zip(config.shot_split())
        .map(|(&gate, shots)| run_blocks(&sampler, config, gate.index() as u64, shots, move |_| gate))
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplingResult { n: view.n(), gate_set: config.gate_set, mode: config.mode, seed: config.seed, distributions })
}

/// Random-gate sampling: each shot draws its test gate uniformly from the set.
pub fn run_sampling_random(view: &JuntaView, config: &SamplerConfig) -> Result<SamplingResult> {
    if !config.gate_set.is_random() {
        return Err(Error::InvalidArgument(format!("gate set {} is not a random-gate set", config.gate_set)));
    }
    config.validate(view.n())?;
    let sampler = ShotSampler::new(view, &config.noise)?;
    let choices = config.gate_set.gates();
    let dist = run_blocks(&sampler, config, RANDOM_STREAM, config.shots, |rng| {
        choices[rng.gen_range(0..choices.len())]
    })?;
    Ok(SamplingResult {
        n: view.n(),
        gate_set: config.gate_set,
        mode: config.mode,
        seed: config.seed,
        distributions: vec![dist],
    })
}
