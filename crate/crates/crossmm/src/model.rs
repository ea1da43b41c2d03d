//! Market primitives: securities, the joint distribution of end-of-period
//! values, trader populations, and deterministic round sampling.
//!
//! Each security's end-of-period value is binary, `p_i + r_i` or `p_i - r_i`,
//! with both outcomes equally likely. Value dependence across securities is
//! captured by an explicit probability table over the `2^n` sign vectors,
//! which is the minimal structure supporting exact Bayesian pricing and
//! exhaustive enumeration. A trading round submits one unit order per
//! security: informed with probability `gamma_i` (trading toward the realized
//! value), otherwise an uninformed liquidity order with a fair-coin direction.
//! The extended mode replaces `gamma_i` with an informed pool fraction
//! `delta_i` and lets liquidity traders abstain with probability `1 - pi_i`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on table-based models: `2^16` masses.
pub const MAX_TABLE_SECURITIES: usize = 16;

/// Normalization and marginal checks use this tolerance.
pub const MODEL_TOLERANCE: f64 = 1e-12;

/// Per-security parameters of the base model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    /// Security identifier, `0..n`.
    pub index: usize,
    /// Baseline price; the unconditional expected value.
    pub p: f64,
    /// Value half-range; end-of-period values are `p - r` and `p + r`.
    pub r: f64,
    /// Probability that an order is informed, in (0, 1).
    pub gamma: f64,
}

impl SecurityParams {
    pub fn new(index: usize, p: f64, r: f64, gamma: f64) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::domain(format!("security {index}: r must be > 0, got {r}")));
        }
        if !p.is_finite() {
            return Err(Error::domain(format!("security {index}: p must be finite, got {p}")));
        }
        check_gamma(gamma).map_err(|e| Error::domain(format!("security {index}: {e}")))?;
        Ok(Self { index, p, r, gamma })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> std::result::Result<(), String> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(format!("gamma must lie strictly inside (0, 1), got {gamma}"));
    }
    Ok(())
}

/// Monotone-decreasing map from a liquidity trader's expected transaction
/// cost to the probability that they submit an order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParticipationCurve {
    /// `pi(c) = clamp(intercept - slope * c, 0, 1)`, slope > 0.
    Linear { intercept: f64, slope: f64 },
    /// `pi(c) = 1 / (1 + exp(slope * (c - midpoint)))`, slope > 0.
    Logistic { midpoint: f64, slope: f64 },
    /// Cost-independent participation.
    Constant { pi: f64 },
}

impl ParticipationCurve {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ParticipationCurve::Linear { intercept, slope } => {
                if !(intercept > 0.0 && intercept <= 1.0) {
                    return Err(Error::domain(format!(
                        "linear curve intercept must lie in (0, 1], got {intercept}"
                    )));
                }
                if !(slope > 0.0 && slope.is_finite()) {
                    return Err(Error::domain(format!(
                        "linear curve slope must be > 0, got {slope}"
                    )));
                }
            }
            ParticipationCurve::Logistic { midpoint, slope } => {
                if !midpoint.is_finite() {
                    return Err(Error::domain(format!(
                        "logistic curve midpoint must be finite, got {midpoint}"
                    )));
                }
                if !(slope > 0.0 && slope.is_finite()) {
                    return Err(Error::domain(format!(
                        "logistic curve slope must be > 0, got {slope}"
                    )));
                }
            }
            ParticipationCurve::Constant { pi } => {
                if !(0.0..=1.0).contains(&pi) {
                    return Err(Error::domain(format!(
                        "constant curve pi must lie in [0, 1], got {pi}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Participation probability at the given expected cost.
    pub fn participation(&self, cost: f64) -> Result<f64> {
        let pi = match *self {
            ParticipationCurve::Linear { intercept, slope } => {
                (intercept - slope * cost).clamp(0.0, 1.0)
            }
            ParticipationCurve::Logistic { midpoint, slope } => {
                1.0 / (1.0 + (slope * (cost - midpoint)).exp())
            }
            ParticipationCurve::Constant { pi } => pi,
        };
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidCurveOutput { value: pi, cost });
        }
        Ok(pi)
    }
}

/// Per-security parameters of the extended model (endogenous participation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedSecurityParams {
    pub index: usize,
    pub p: f64,
    pub r: f64,
    /// Fraction of informed investors in the trader pool, in (0, 1).
    pub delta: f64,
    pub participation: ParticipationCurve,
}

impl ExtendedSecurityParams {
    pub fn new(
        index: usize,
        p: f64,
        r: f64,
        delta: f64,
        participation: ParticipationCurve,
    ) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::domain(format!("security {index}: r must be > 0, got {r}")));
        }
        if !p.is_finite() {
            return Err(Error::domain(format!("security {index}: p must be finite, got {p}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!(
                "security {index}: delta must lie strictly inside (0, 1), got {delta}"
            )));
        }
        participation.validate()?;
        Ok(Self { index, p, r, delta, participation })
    }
}

/// Fully resolved per-security inputs for round generation and pricing,
/// shared by the simulator and the enumeration oracle.
///
/// Base mode: `informed = pricing_gamma = gamma`, `participation = 1`.
/// Extended mode: `informed = delta`, `participation = pi` (resolved at the
/// equilibrium), and `pricing_gamma` is the effective informed fraction the
/// liquidity providers use in their likelihoods (variant-dependent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSecurity {
    pub index: usize,
    pub p: f64,
    pub r: f64,
    pub informed: f64,
    pub participation: f64,
    pub pricing_gamma: f64,
}

impl MarketSecurity {
    pub fn base(sp: &SecurityParams) -> Self {
        Self {
            index: sp.index,
            p: sp.p,
            r: sp.r,
            informed: sp.gamma,
            participation: 1.0,
            pricing_gamma: sp.gamma,
        }
    }

    pub fn extended(xp: &ExtendedSecurityParams, pi: f64, pricing_gamma: f64) -> Self {
        Self {
            index: xp.index,
            p: xp.p,
            r: xp.r,
            informed: xp.delta,
            participation: pi,
            pricing_gamma,
        }
    }

    pub fn pricing_params(&self) -> SecurityParams {
        SecurityParams { index: self.index, p: self.p, r: self.r, gamma: self.pricing_gamma }
    }

    pub fn sampling_params(&self) -> SamplingParams {
        SamplingParams {
            informed_prob: self.informed,
            participation: self.participation,
        }
    }
}

/// Value sign of one security: `Plus` means `V = p + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn unit(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Sign of security `i` in table state `state` (lexicographic indexing:
/// security 0 is the most significant digit, `+` before `-`).
#[inline]
pub fn state_sign(state: usize, n: usize, i: usize) -> Sign {
    debug_assert!(i < n);
    if state & (1 << (n - 1 - i)) == 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// A violation reported by [`JointValueModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    /// Table masses do not sum to 1 within tolerance.
    Normalization { sum: f64 },
    /// A mass is negative (or non-finite).
    InvalidMass { state: usize, mass: f64 },
    /// A single-security marginal differs from 1/2.
    Marginal { security: usize, marginal: f64 },
}

impl std::fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelViolation::Normalization { sum } => {
                write!(f, "table masses sum to {sum}, expected 1")
            }
            ModelViolation::InvalidMass { state, mass } => {
                write!(f, "state {state} has invalid mass {mass}")
            }
            ModelViolation::Marginal { security, marginal } => {
                write!(f, "security {security} has marginal P(V+) = {marginal}, expected 1/2")
            }
        }
    }
}

/// Joint distribution of the `2^n` end-of-period sign vectors.
///
/// States are indexed lexicographically: security 0 is the most significant
/// bit and `+` precedes `-`, so state 0 is all-plus and state `2^n - 1` is
/// all-minus.
#[derive(Debug, Clone, PartialEq)]
pub struct JointValueModel {
    n: usize,
    table: Vec<f64>,
}

impl JointValueModel {
    /// Builds a model from an explicit table of `2^n` masses.
    ///
    /// Structural problems (wrong length, non-finite entries, too many
    /// securities) are errors; distributional problems (normalization,
    /// marginals) are reported by [`validate`](Self::validate) instead, so
    /// that deliberately broken tables can be inspected.
    pub fn from_table(table: Vec<f64>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::domain(format!(
                "table length must be a power of two >= 2, got {len}"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_TABLE_SECURITIES {
            return Err(Error::Capacity { what: "table model", n, limit: MAX_TABLE_SECURITIES });
        }
        if let Some(bad) = table.iter().position(|m| !m.is_finite()) {
            return Err(Error::domain(format!(
                "table mass for state {bad} is not finite: {}",
                table[bad]
            )));
        }
        Ok(Self { n, table })
    }

    /// Two-security model with `P(V_1^+ | V_2^+) = phi`:
    /// `{++: phi/2, +-: (1-phi)/2, -+: (1-phi)/2, --: phi/2}`.
    pub fn two_security(phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::domain(format!("phi must lie in [0, 1], got {phi}")));
        }
        let same = phi / 2.0;
        let diff = (1.0 - phi) / 2.0;
        Ok(Self { n: 2, table: vec![same, diff, diff, same] })
    }

    /// Chain-structured model: signs form a Markov chain with a uniform
    /// start and `P(s_{i+1} = s_i | s_i) = phis[i]`. Marginals are 1/2 by
    /// symmetry, so the result always validates.
    pub fn sign_chain(phis: &[f64]) -> Result<Self> {
        let n = phis.len() + 1;
        if phis.is_empty() {
            return Err(Error::domain("sign_chain needs at least one link".to_string()));
        }
        if n > MAX_TABLE_SECURITIES {
            return Err(Error::Capacity { what: "table model", n, limit: MAX_TABLE_SECURITIES });
        }
        for (i, phi) in phis.iter().enumerate() {
            if !(0.0..=1.0).contains(phi) {
                return Err(Error::domain(format!("chain link {i}: phi must lie in [0, 1], got {phi}")));
            }
        }
        let mut table = vec![0.0; 1 << n];
        for (state, mass) in table.iter_mut().enumerate() {
            let mut m = 0.5;
            for (i, phi) in phis.iter().enumerate() {
                let same = state_sign(state, n, i) == state_sign(state, n, i + 1);
                m *= if same { *phi } else { 1.0 - *phi };
            }
            *mass = m;
        }
        Ok(Self { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.table[state]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Checks normalization and uniform marginals; empty means valid.
    pub fn validate(&self) -> Vec<ModelViolation> {
        let mut violations = Vec::new();
        let mut sum = 0.0;
        for (state, &m) in self.table.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                violations.push(ModelViolation::InvalidMass { state, mass: m });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > MODEL_TOLERANCE {
            violations.push(ModelViolation::Normalization { sum });
        }
        for i in 0..self.n {
            let marginal = self.marginal_plus(i);
            if (marginal - 0.5).abs() > MODEL_TOLERANCE {
                violations.push(ModelViolation::Marginal { security: i, marginal });
            }
        }
        violations
    }

    /// `P(V_i = +)`.
    pub fn marginal_plus(&self, i: usize) -> f64 {
        self.table
            .iter()
            .enumerate()
            .filter(|(s, _)| state_sign(*s, self.n, i) == Sign::Plus)
            .map(|(_, m)| m)
            .sum()
    }

    /// `P(V_i = + | V_j = +)`; recovers phi for two-security models.
    pub fn conditional_plus(&self, i: usize, j: usize) -> f64 {
        let mut joint = 0.0;
        let mut cond = 0.0;
        for (state, &m) in self.table.iter().enumerate() {
            if state_sign(state, self.n, j) == Sign::Plus {
                cond += m;
                if state_sign(state, self.n, i) == Sign::Plus {
                    joint += m;
                }
            }
        }
        joint / cond
    }

    /// True when the table factorizes into independent marginals within
    /// tolerance (for n=2 this is phi = 1/2, where the cross-security
    /// information channel carries nothing).
    pub fn is_independent(&self) -> bool {
        self.table.iter().enumerate().all(|(state, &m)| {
            let product: f64 = (0..self.n)
                .map(|i| match state_sign(state, self.n, i) {
                    Sign::Plus => self.marginal_plus(i),
                    Sign::Minus => 1.0 - self.marginal_plus(i),
                })
                .product();
            (m - product).abs() <= MODEL_TOLERANCE
        })
    }

    /// Draws a state index by inverse transform on the table order.
    pub fn sample_state<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (state, &m) in self.table.iter().enumerate() {
            acc += m;
            if u < acc {
                return state;
            }
        }
        self.table.len() - 1
    }
}

/// One order slot in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Buy,
    Sell,
    /// No order was submitted (extended mode only).
    Absent,
}

/// Order direction, for slots where an order exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Order {
    pub fn side(self) -> Option<Side> {
        match self {
            Order::Buy => Some(Side::Buy),
            Order::Sell => Some(Side::Sell),
            Order::Absent => None,
        }
    }
}

/// The per-round vector of orders, one slot per security.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderVector(Vec<Order>);

impl OrderVector {
    pub fn new(orders: Vec<Order>) -> Self {
        Self(orders)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Order {
        self.0[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = Order> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Order] {
        &self.0
    }

    /// Base-3 index (Buy=0, Sell=1, Absent=2; security 0 most significant).
    /// Used as a cache key for per-order-vector pricing tables.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, o| {
            acc * 3
                + match o {
                    Order::Buy => 0,
                    Order::Sell => 1,
                    Order::Absent => 2,
                }
        })
    }

    /// Inverse of [`index`](Self::index).
    pub fn from_index(mut idx: usize, n: usize) -> Self {
        let mut orders = vec![Order::Buy; n];
        for slot in orders.iter_mut().rev() {
            *slot = match idx % 3 {
                0 => Order::Buy,
                1 => Order::Sell,
                _ => Order::Absent,
            };
            idx /= 3;
        }
        Self(orders)
    }

    /// Compact display form, e.g. `B0,S1,.2` (dot marks an absent order).
    pub fn label(&self) -> String {
        self.0
            .iter()
            .enumerate()
            .map(|(i, o)| match o {
                Order::Buy => format!("B{i}"),
                Order::Sell => format!("S{i}"),
                Order::Absent => format!(".{i}"),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// All `2^n` order vectors with every slot present, in index order.
pub fn present_order_vectors(n: usize) -> Vec<OrderVector> {
    let mut out = Vec::with_capacity(1 << n);
    for bits in 0..1usize << n {
        let orders = (0..n)
            .map(|i| {
                if bits & (1 << (n - 1 - i)) == 0 {
                    Order::Buy
                } else {
                    Order::Sell
                }
            })
            .collect();
        out.push(OrderVector::new(orders));
    }
    out
}

/// Trader type realized for one security in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraderType {
    Informed,
    LiquidityParticipating,
    LiquidityAbstaining,
}

/// Sampling mode: base (liquidity traders always trade) or extended
/// (liquidity traders abstain with probability `1 - pi`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Base,
    Extended,
}

/// Per-security sampling inputs for one round.
///
/// Base mode: `informed_prob = gamma`, `participation` ignored.
/// Extended mode: `informed_prob = delta`, `participation = pi` (already
/// resolved, e.g. at the analytics equilibrium).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub informed_prob: f64,
    pub participation: f64,
}

impl SamplingParams {
    pub fn base(gamma: f64) -> Self {
        Self { informed_prob: gamma, participation: 1.0 }
    }

    pub fn extended(delta: f64, pi: f64) -> Self {
        Self { informed_prob: delta, participation: pi }
    }
}

/// Sampled state of one trading round, before pricing.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// Realized value state (table index).
    pub values: usize,
    pub trader_types: Vec<TraderType>,
    pub orders: OrderVector,
}

impl RoundOutcome {
    pub fn value_sign(&self, n: usize, i: usize) -> Sign {
        state_sign(self.values, n, i)
    }
}

/// Deterministic substream handle for one round.
///
/// The master seed derives one stream for the value draw and one per
/// security, so results are bit-reproducible however rounds are
/// partitioned across workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStreams {
    pub master_seed: u64,
    pub round: u64,
}

const VALUE_LANE: u64 = u64::MAX;

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(master: u64, round: u64, lane: u64) -> u64 {
    let a = mix64(master ^ 0x9e3779b97f4a7c15u64.wrapping_mul(round.wrapping_add(1)));
    mix64(a ^ 0xd1b54a32d192ed03u64.wrapping_mul(lane.wrapping_add(1)))
}

impl RoundStreams {
    pub fn new(master_seed: u64, round: u64) -> Self {
        Self { master_seed, round }
    }

    /// Stream for the joint value draw.
    pub fn values(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.master_seed, self.round, VALUE_LANE))
    }

    /// Stream for security `i`'s trader-type / participation / direction draws.
    pub fn security(&self, i: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.master_seed, self.round, i as u64))
    }
}

/// Derives an independent master seed for sweep grid point `index`.
pub fn grid_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, u64::MAX - 1, index)
}

/// Samples one trading round: the value vector, then per security (in index
/// order) the trader type, the participation decision (extended mode), and
/// the order direction. Prices are attached later by the pricing engine.
pub fn sample_round(
    model: &JointValueModel,
    params: &[SamplingParams],
    mode: Mode,
    streams: RoundStreams,
) -> RoundOutcome {
    debug_assert_eq!(params.len(), model.n());
    let n = model.n();
    let values = model.sample_state(&mut streams.values());

    let mut trader_types = Vec::with_capacity(n);
    let mut orders = Vec::with_capacity(n);
    for (i, sp) in params.iter().enumerate() {
        let mut rng = streams.security(i);
        let u: f64 = rng.random();
        if u < sp.informed_prob {
            trader_types.push(TraderType::Informed);
            orders.push(match state_sign(values, n, i) {
                Sign::Plus => Order::Buy,
                Sign::Minus => Order::Sell,
            });
            continue;
        }
        let participates = match mode {
            Mode::Base => true,
            Mode::Extended => rng.random::<f64>() < sp.participation,
        };
        if !participates {
            trader_types.push(TraderType::LiquidityAbstaining);
            orders.push(Order::Absent);
            continue;
        }
        trader_types.push(TraderType::LiquidityParticipating);
        orders.push(if rng.random::<f64>() < 0.5 { Order::Buy } else { Order::Sell });
    }
    RoundOutcome { values, trader_types, orders: OrderVector::new(orders) }
}
