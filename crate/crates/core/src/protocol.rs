//! Bob/Alice measurement sessions and the block-keyed transmission channel.
//!
//! A session draws outcome pairs from the exact joint distribution of the
//! chosen basis using a seeded `ChaCha8` stream. Compressibility of real
//! measurement blocks cannot be simulated, so the transmission channel takes
//! the probability `p_N` that a standard block is compressible as an explicit
//! input and labels each block with its ground truth.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ait::{self, Compressibility};
use crate::bits::{self, BitString};
use crate::channel::{self, ChannelParams, ProtocolNoiseInputs};
use crate::error::check_probability;
use crate::qstate::{joint_distribution, Amplitude, EntangledState, MeasurementBasis};
use crate::seed;
use crate::{Error, Result};

pub const MIN_BLOCK_LEN: usize = 64;

/// Period of the repeating pattern that stands in for an injected
/// compressible standard block.
pub const COMPRESSIBLE_PERIOD: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisPolicy {
    /// Every measurement on the agreed axis.
    Fixed,
    /// Uniform over {z, x, y}; two template bits per draw, `11` redrawn.
    ThreeAxisUniform,
    /// Uniform on the unit sphere of C^2; 64 template bits per draw.
    HaarUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    /// Consult the phrase-count p-compressibility test.
    Estimator,
    /// Use the block's ground-truth label with the decoder's error model:
    /// compressible blocks are misread with probability `p_omega`,
    /// incompressible blocks never.
    ModeledError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Decoded as 0.
    Compressible,
    /// Decoded as 1.
    Incompressible,
}

impl Verdict {
    pub fn bit(self) -> bool {
        matches!(self, Verdict::Incompressible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub block_len: usize,
    pub axis_policy: AxisPolicy,
    pub seed: u64,
    pub p_omega: f64,
    pub decision_margin: f64,
    pub decision_source: DecisionSource,
}

impl ProtocolConfig {
    pub fn new(block_len: usize, axis_policy: AxisPolicy, seed: u64) -> Self {
        Self {
            block_len,
            axis_policy,
            seed,
            p_omega: 0.0,
            decision_margin: ait::DEFAULT_MARGIN,
            decision_source: DecisionSource::ModeledError,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_len < MIN_BLOCK_LEN {
            return Err(Error::TooShort {
                what: "protocol block",
                needed: MIN_BLOCK_LEN,
                got: self.block_len,
            });
        }
        if !(0.0..1.0).contains(&self.p_omega) {
            return Err(Error::InvalidArgument(format!(
                "p_omega {} not in [0, 1)",
                self.p_omega
            )));
        }
        if !(self.decision_margin > 0.0 && self.decision_margin < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decision margin {} not in (0, 1)",
                self.decision_margin
            )));
        }
        Ok(())
    }
}

/// Bob's measurement axes for a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BobAxes {
    /// The same basis for every measurement.
    Uniform { basis: MeasurementBasis, len: usize },
    PerMeasurement(Vec<MeasurementBasis>),
}

impl BobAxes {
    pub fn len(&self) -> usize {
        match self {
            BobAxes::Uniform { len, .. } => *len,
            BobAxes::PerMeasurement(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> MeasurementBasis {
        match self {
            BobAxes::Uniform { basis, len } => {
                assert!(i < *len);
                *basis
            }
            BobAxes::PerMeasurement(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub bob: BitString,
    pub alice: BitString,
    pub bob_axes: BobAxes,
}

impl SessionRecord {
    pub fn len(&self) -> usize {
        self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bob.is_empty()
    }

    /// Binary layout: `u64` little-endian length, then Bob's and Alice's
    /// packed MSB-first bits. Axes are not serialized.
    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        bits::write_pair(writer, &self.bob, &self.alice)
    }

    /// Reads `(bob, alice)` written by [`SessionRecord::write_to`].
    pub fn read_from<R: Read>(reader: R) -> Result<(BitString, BitString)> {
        bits::read_pair(reader)
    }
}

/// Bob measures every pair along `basis`, Alice along the agreed axis.
pub fn measure_fixed_basis(
    state: &EntangledState,
    basis: MeasurementBasis,
    n: usize,
    seed: u64,
) -> SessionRecord {
    let dist = joint_distribution(state, &basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bob = BitString::with_capacity(n);
    let mut alice = BitString::with_capacity(n);
    for _ in 0..n {
        let (b, a) = dist.sample(&mut rng);
        bob.push(b);
        alice.push(a);
    }
    SessionRecord {
        bob,
        alice,
        bob_axes: BobAxes::Uniform { basis, len: n },
    }
}

/// Both parties on the agreed axis; the two strings come out identical.
pub fn run_standard_session(state: &EntangledState, n: usize, seed: u64) -> Result<SessionRecord> {
    if n == 0 {
        return Err(Error::InvalidArgument("session length must be at least 1".into()));
    }
    Ok(measure_fixed_basis(state, MeasurementBasis::identity(), n, seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScramblingTemplate {
    bits: BitString,
}

impl ScramblingTemplate {
    pub fn from_bits(bits: BitString) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("empty scrambling template".into()));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn stream(&self) -> TemplateStream<'_> {
        TemplateStream {
            template: &self.bits,
            pos: 0,
            extension: None,
            word: 0,
            word_bits: 0,
        }
    }
}

/// Seeded pseudo-random template of `len` bits.
pub fn make_template(len: usize, seed: u64) -> Result<ScramblingTemplate> {
    if len == 0 {
        return Err(Error::InvalidArgument("template length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = BitString::with_capacity(len);
    while bits.len() < len {
        let word = rng.next_u64();
        let take = (len - bits.len()).min(64);
        bits.extend((0..take).map(|i| (word >> (63 - i)) & 1 == 1));
    }
    ScramblingTemplate::from_bits(bits)
}

/// Reads the template bit by bit. Once exhausted it continues with a
/// `ChaCha20` stream keyed by the template contents, so a template of any
/// length determines an unbounded axis sequence.
struct TemplateStream<'a> {
    template: &'a BitString,
    pos: usize,
    extension: Option<ChaCha20Rng>,
    word: u64,
    word_bits: u32,
}

impl TemplateStream<'_> {
    fn next_bit(&mut self) -> bool {
        if self.pos < self.template.len() {
            self.pos += 1;
            return self.template.get(self.pos - 1);
        }
        if self.word_bits == 0 {
            let template = self.template;
            let rng = self.extension.get_or_insert_with(|| {
                let mut key = [0u8; 32];
                for (i, b) in template.as_packed().iter().enumerate() {
                    key[i % 32] ^= b;
                }
                key[..8]
                    .iter_mut()
                    .zip((template.len() as u64).to_le_bytes())
                    .for_each(|(k, l)| *k ^= l);
                ChaCha20Rng::from_seed(key)
            });
            self.word = rng.next_u64();
            self.word_bits = 64;
        }
        self.word_bits -= 1;
        (self.word >> self.word_bits) & 1 == 1
    }

    fn next_bits(&mut self, n: u32) -> u64 {
        (0..n).fold(0u64, |acc, _| (acc << 1) | u64::from(self.next_bit()))
    }

    fn next_axis(&mut self, policy: AxisPolicy) -> MeasurementBasis {
        match policy {
            AxisPolicy::Fixed => MeasurementBasis::identity(),
            AxisPolicy::ThreeAxisUniform => loop {
                match self.next_bits(2) {
                    0 => break MeasurementBasis::axis_z(),
                    1 => break MeasurementBasis::axis_x(),
                    2 => break MeasurementBasis::axis_y(),
                    _ => continue,
                }
            },
            AxisPolicy::HaarUniform => {
                // |c|^2 is uniform on [0, 1] for Haar-random unit vectors in C^2;
                // the two phases are independent and uniform.
                let c_sq = self.next_bits(32) as f64 / 4_294_967_296.0;
                let phase_c = self.next_bits(16) as f64 / 65_536.0 * TAU;
                let phase_d = self.next_bits(16) as f64 / 65_536.0 * TAU;
                MeasurementBasis::new(
                    Amplitude::from_polar(c_sq.sqrt(), phase_c),
                    Amplitude::from_polar((1.0 - c_sq).sqrt(), phase_d),
                )
                .expect("unit by construction")
            }
        }
    }
}

/// Bob measures `n` pairs along axes drawn from `template` per `policy`;
/// Alice stays on the agreed axis.
pub fn run_scrambled_block(
    state: &EntangledState,
    template: &ScramblingTemplate,
    n: usize,
    policy: AxisPolicy,
    seed: u64,
) -> Result<SessionRecord> {
    if template.len() <= n {
        return Err(Error::TemplateTooShort {
            template_len: template.len(),
            block_len: n,
        });
    }
    let mut axes_src = template.stream();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bob = BitString::with_capacity(n);
    let mut alice = BitString::with_capacity(n);
    let mut axes = Vec::with_capacity(n);
    for _ in 0..n {
        let basis = axes_src.next_axis(policy);
        let (b, a) = joint_distribution(state, &basis).sample(&mut rng);
        bob.push(b);
        alice.push(a);
        axes.push(basis);
    }
    Ok(SessionRecord {
        bob,
        alice,
        bob_axes: BobAxes::PerMeasurement(axes),
    })
}

/// Analytic average of Bob's 1-probability over the axis distribution of
/// `policy`.
pub fn expected_bob_frequency(state: &EntangledState, policy: AxisPolicy) -> f64 {
    match policy {
        AxisPolicy::Fixed => state.alpha_sq(),
        AxisPolicy::ThreeAxisUniform => (state.alpha_sq() + 1.0) / 3.0,
        AxisPolicy::HaarUniform => 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Fixed,
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalingBlock {
    pub index: usize,
    pub kind: BlockKind,
    pub bob_freq: f64,
    pub alice_freq: f64,
}

/// Pooled two-sample comparison of 1-frequencies between block groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub fixed_freq: f64,
    pub alternate_freq: f64,
    pub std_error: f64,
    /// `|difference| / std_error`; 0 when both groups agree exactly.
    pub z: f64,
}

impl GroupComparison {
    fn from_counts(ones_a: usize, n_a: usize, ones_b: usize, n_b: usize) -> Self {
        let fa = ones_a as f64 / n_a as f64;
        let fb = ones_b as f64 / n_b as f64;
        let pooled = (ones_a + ones_b) as f64 / (n_a + n_b) as f64;
        let se = (pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
        let diff = (fa - fb).abs();
        let z = if diff == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            diff / se
        };
        Self {
            fixed_freq: fa,
            alternate_freq: fb,
            std_error: se,
            z,
        }
    }

    pub fn indistinguishable(&self, z_limit: f64) -> bool {
        self.z <= z_limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingReport {
    pub blocks: Vec<SignalingBlock>,
    pub alice: GroupComparison,
    pub bob: GroupComparison,
}

impl SignalingReport {
    /// Alice's two groups within four combined standard errors.
    pub fn alice_indistinguishable(&self) -> bool {
        self.alice.indistinguishable(4.0)
    }
}

/// Bob alternates agreed-axis blocks (even indices) and `alt_basis` blocks
/// (odd indices); the report compares Alice's marginals between the groups.
pub fn signaling_experiment(
    state: &EntangledState,
    alt_basis: MeasurementBasis,
    blocks: usize,
    n: usize,
    seed: u64,
) -> Result<SignalingReport> {
    if blocks < 2 {
        return Err(Error::InvalidArgument("signaling experiment needs at least 2 blocks".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    let records: Vec<(SignalingBlock, usize, usize)> = (0..blocks)
        .into_par_iter()
        .map(|index| {
            let (kind, basis) = if index % 2 == 0 {
                (BlockKind::Fixed, MeasurementBasis::identity())
            } else {
                (BlockKind::Alternate, alt_basis)
            };
            let rec = measure_fixed_basis(state, basis, n, seed::derive_seed(seed, seed::TAG_OUTCOMES, index as u64));
            let (b, a) = (rec.bob.count_ones(), rec.alice.count_ones());
            let block = SignalingBlock {
                index,
                kind,
                bob_freq: b as f64 / n as f64,
                alice_freq: a as f64 / n as f64,
            };
            (block, b, a)
        })
        .collect();

    let mut ones = [[0usize; 2]; 2]; // [group][bob, alice]
    let mut sizes = [0usize; 2];
    for (block, b, a) in &records {
        let g = usize::from(block.kind == BlockKind::Alternate);
        ones[g][0] += b;
        ones[g][1] += a;
        sizes[g] += n;
    }
    Ok(SignalingReport {
        alice: GroupComparison::from_counts(ones[0][1], sizes[0], ones[1][1], sizes[1]),
        bob: GroupComparison::from_counts(ones[0][0], sizes[0], ones[1][0], sizes[1]),
        blocks: records.into_iter().map(|r| r.0).collect(),
    })
}

/// Decodes one block: compressible reads as 0, incompressible as 1.
///
/// `truth` is the injected ground-truth label and is only read under
/// [`DecisionSource::ModeledError`]; `rng` drives the modeled error.
pub fn decide_block<R: Rng + ?Sized>(
    block: &BitString,
    truth: Compressibility,
    p: f64,
    config: &ProtocolConfig,
    source: DecisionSource,
    rng: &mut R,
) -> Result<Verdict> {
    if block.len() != config.block_len {
        return Err(Error::InvalidArgument(format!(
            "block has {} bits, configured block length is {}",
            block.len(),
            config.block_len
        )));
    }
    check_probability("p", p)?;
    Ok(match source {
        DecisionSource::ModeledError => match truth {
            Compressibility::PIncompressible => Verdict::Incompressible,
            Compressibility::PCompressible => {
                if rng.gen::<f64>() < config.p_omega {
                    Verdict::Incompressible
                } else {
                    Verdict::Compressible
                }
            }
        },
        DecisionSource::Estimator => {
            match ait::p_compressibility_test(block, p, config.decision_margin)?.verdict {
                Compressibility::PCompressible => Verdict::Compressible,
                Compressibility::PIncompressible => Verdict::Incompressible,
            }
        }
    })
}

/// Per-block row of a transmission; serializes as
/// `block_index,bob_freq,alice_freq,verdict`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub block_index: usize,
    pub bob_freq: f64,
    pub alice_freq: f64,
    pub verdict: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionReport {
    /// `confusion[sent][received]`.
    pub confusion: [[u64; 2]; 2],
    pub p0_empirical: f64,
    pub p1_empirical: f64,
    pub p0_predicted: f64,
    pub p1_predicted: f64,
    pub capacity_predicted: f64,
    pub capacity_empirical: f64,
    pub blocks: Vec<BlockStats>,
}

impl TransmissionReport {
    pub fn zeros_sent(&self) -> u64 {
        self.confusion[0][0] + self.confusion[0][1]
    }

    pub fn ones_sent(&self) -> u64 {
        self.confusion[1][0] + self.confusion[1][1]
    }

    /// Binomial standard error of `p0_empirical` about the prediction.
    pub fn p0_std_error(&self) -> f64 {
        binomial_se(self.p0_predicted, self.zeros_sent())
    }

    pub fn p1_std_error(&self) -> f64 {
        binomial_se(self.p1_predicted, self.ones_sent())
    }

    /// Empirical flip rates within `k` standard errors of the prediction.
    /// A zero standard error demands exact agreement.
    pub fn matches_prediction(&self, k: f64) -> bool {
        let within = |emp: f64, pred: f64, se: f64, sent: u64| {
            sent == 0 || (emp - pred).abs() <= k * se + f64::EPSILON
        };
        within(self.p0_empirical, self.p0_predicted, self.p0_std_error(), self.zeros_sent())
            && within(self.p1_empirical, self.p1_predicted, self.p1_std_error(), self.ones_sent())
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub received: BitString,
    pub report: TransmissionReport,
}

/// Sends each message bit as one block: 0 as an agreed-axis block, 1 as a
/// template-scrambled block. Each 0-block is p-compressible with
/// probability `p_n` (injected); Alice decodes her block with
/// [`decide_block`] using `config.decision_source`.
pub fn transmit_message(
    state: &EntangledState,
    message: &BitString,
    config: &ProtocolConfig,
    p_n: f64,
) -> Result<Transmission> {
    config.validate()?;
    check_probability("p_N", p_n)?;
    if message.is_empty() {
        return Err(Error::InvalidArgument("message must contain at least one bit".into()));
    }
    let n = config.block_len;
    let p = state.alpha_sq();

    let outcomes: Vec<(bool, BlockStats)> = (0..message.len())
        .into_par_iter()
        .map(|i| -> Result<(bool, BlockStats)> {
            let idx = i as u64;
            let outcome_seed = seed::derive_seed(config.seed, seed::TAG_OUTCOMES, idx);
            let (record, truth) = if message.get(i) {
                let template = make_template(n + 1, seed::derive_seed(config.seed, seed::TAG_TEMPLATE, idx))?;
                let rec = run_scrambled_block(state, &template, n, config.axis_policy, outcome_seed)?;
                (rec, Compressibility::PIncompressible)
            } else {
                let mut inject = seed::stream(config.seed, seed::TAG_INJECT, idx);
                if inject.gen::<f64>() < p_n {
                    (compressible_standard_block(state, n, outcome_seed), Compressibility::PCompressible)
                } else {
                    (run_standard_session(state, n, outcome_seed)?, Compressibility::PIncompressible)
                }
            };
            let mut decide_rng = seed::stream(config.seed, seed::TAG_DECIDE, idx);
            let verdict = decide_block(&record.alice, truth, p, config, config.decision_source, &mut decide_rng)?;
            let stats = BlockStats {
                block_index: i,
                bob_freq: record.bob.ones_frequency(),
                alice_freq: record.alice.ones_frequency(),
                verdict: u8::from(verdict.bit()),
            };
            Ok((verdict.bit(), stats))
        })
        .collect::<Result<_>>()?;

    let mut confusion = [[0u64; 2]; 2];
    let mut received = BitString::with_capacity(message.len());
    let mut blocks = Vec::with_capacity(message.len());
    for (i, (bit, stats)) in outcomes.into_iter().enumerate() {
        confusion[usize::from(message.get(i))][usize::from(bit)] += 1;
        received.push(bit);
        blocks.push(stats);
    }

    let rate = |flips: u64, sent: u64| if sent == 0 { 0.0 } else { flips as f64 / sent as f64 };
    let p0_empirical = rate(confusion[0][1], confusion[0][0] + confusion[0][1]);
    let p1_empirical = rate(confusion[1][0], confusion[1][0] + confusion[1][1]);
    let predicted = channel::params_from_protocol(&ProtocolNoiseInputs {
        p_n,
        p_omega: config.p_omega,
        epsilon_1: 0.0,
    })?;
    let empirical = ChannelParams::new(p0_empirical, p1_empirical)?;
    Ok(Transmission {
        received,
        report: TransmissionReport {
            confusion,
            p0_empirical,
            p1_empirical,
            p0_predicted: predicted.p0,
            p1_predicted: predicted.p1,
            capacity_predicted: channel::capacity_closed_form(&predicted).capacity,
            capacity_empirical: channel::capacity_closed_form(&empirical).capacity,
            blocks,
        },
    })
}

/// A standard-axis block whose content repeats a short measured prefix, so
/// it keeps the 1-frequency of the state but is highly compressible.
fn compressible_standard_block(state: &EntangledState, n: usize, seed: u64) -> SessionRecord {
    let period = measure_fixed_basis(state, MeasurementBasis::identity(), COMPRESSIBLE_PERIOD, seed);
    let bits: BitString = (0..n).map(|i| period.bob.get(i % COMPRESSIBLE_PERIOD)).collect();
    SessionRecord {
        bob: bits.clone(),
        alice: bits,
        bob_axes: BobAxes::Uniform {
            basis: MeasurementBasis::identity(),
            len: n,
        },
    }
}

/// CSV header matching [`BlockStats`].
pub const BLOCK_STATS_HEADER: &str = "block_index,bob_freq,alice_freq,verdict";
