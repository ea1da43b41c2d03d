//! Seeded Monte Carlo engine.
//!
//! Rounds are independent; each derives its own RNG substreams from
//! `(master_seed, round index)`, so output is bit-identical for a fixed seed
//! regardless of how rounds are partitioned across workers. Rounds are
//! accumulated in fixed-size chunks and the chunk partials are folded in
//! chunk order, which keeps even the floating-point summation order
//! independent of the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{MetricValue, MetricsReport, Provenance, SecurityMetrics};
use crate::model::{
    sample_round, JointValueModel, MarketSecurity, Mode, OrderVector, RoundStreams, Side,
    Sign, TraderType,
};
use crate::pricing::{
    price_round_with_quotes, quotes_for, Executor, PricedRound, PricingTable, QuotePair,
    MAX_PRICING_TABLE_SECURITIES,
};

/// Rounds per accumulation chunk; fixed so that partial-sum order (and hence
/// the output bit pattern) does not depend on the worker count.
const CHUNK_ROUNDS: u64 = 8192;

/// Per-order-state tallies are kept while `3^n` stays at or below this.
const MAX_STATE_TRACK: usize = 6561;

/// A complete simulation request.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model: JointValueModel,
    pub securities: Vec<MarketSecurity>,
    pub mode: Mode,
    pub with_amm: bool,
    pub rounds: u64,
    pub master_seed: u64,
    /// Worker threads; 0 and 1 both mean sequential.
    pub workers: usize,
}

/// Raw sums for one (trader type, side) bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BucketSums {
    pub count: u64,
    pub price_sum: f64,
    pub price_sumsq: f64,
    /// How many of these trades realized the high value.
    pub value_plus: u64,
}

impl BucketSums {
    fn add(&mut self, price: f64, plus: bool) {
        self.count += 1;
        self.price_sum += price;
        self.price_sumsq += price * price;
        self.value_plus += u64::from(plus);
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.price_sum += other.price_sum;
        self.price_sumsq += other.price_sumsq;
        self.value_plus += other.value_plus;
    }

    /// Sample mean and its standard error.
    pub fn mean(&self) -> MetricValue {
        if self.count == 0 {
            return MetricValue { value: None, se: None, count: Some(0) };
        }
        let n = self.count as f64;
        let mean = self.price_sum / n;
        let se = if self.count > 1 {
            let var = ((self.price_sumsq - self.price_sum * self.price_sum / n) / (n - 1.0))
                .max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MetricValue::estimated(mean, se, self.count)
    }
}

/// Raw per-security accumulators; merged field-wise across chunks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SecurityAccum {
    pub informed_buy: BucketSums,
    pub informed_sell: BucketSums,
    pub liquidity_buy: BucketSums,
    pub liquidity_sell: BucketSums,
    /// Orders filled (present) for this security.
    pub present: u64,
    /// MM executed volume (a split order counts half) and its square sum.
    pub mm_weight_sum: f64,
    pub mm_weight_sumsq: f64,
    /// Per-round provider profit contributions, signed so that positive
    /// means the provider gained.
    pub amm_profit_sum: f64,
    pub amm_profit_sumsq: f64,
    pub mm_profit_sum: f64,
    pub mm_profit_sumsq: f64,
}

impl SecurityAccum {
    fn merge(&mut self, other: &Self) {
        self.informed_buy.merge(&other.informed_buy);
        self.informed_sell.merge(&other.informed_sell);
        self.liquidity_buy.merge(&other.liquidity_buy);
        self.liquidity_sell.merge(&other.liquidity_sell);
        self.present += other.present;
        self.mm_weight_sum += other.mm_weight_sum;
        self.mm_weight_sumsq += other.mm_weight_sumsq;
        self.amm_profit_sum += other.amm_profit_sum;
        self.amm_profit_sumsq += other.amm_profit_sumsq;
        self.mm_profit_sum += other.mm_profit_sum;
        self.mm_profit_sumsq += other.mm_profit_sumsq;
    }

    /// Combined buy-side sums (informed + liquidity), exact on the raw sums.
    pub fn buys(&self) -> BucketSums {
        let mut b = self.informed_buy;
        b.merge(&self.liquidity_buy);
        b
    }

    pub fn sells(&self) -> BucketSums {
        let mut s = self.informed_sell;
        s.merge(&self.liquidity_sell);
        s
    }
}

/// Tallies for one order-flow state.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StateTally {
    pub orders: String,
    pub count: u64,
    /// Per security: rounds (among `count`) whose value was the high one.
    pub value_plus: Vec<u64>,
}

/// Finished per-security estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecuritySimStats {
    pub security: usize,
    pub mm_bid: f64,
    pub mm_ask: f64,
    pub mean_buy: MetricValue,
    pub mean_sell: MetricValue,
    pub mean_buy_informed: MetricValue,
    pub mean_sell_informed: MetricValue,
    pub mean_buy_liquidity: MetricValue,
    pub mean_sell_liquidity: MetricValue,
    pub delta: MetricValue,
    pub delta_informed: MetricValue,
    pub delta_liquidity: MetricValue,
    pub mm_share: MetricValue,
    /// Plug-in estimate of the value-price gap, `r - gamma_hat * delta_I_hat / 2`.
    pub inefficiency: MetricValue,
    pub p_transact: MetricValue,
    /// Mean per-round provider profits; both converge to zero.
    pub amm_profit: MetricValue,
    pub mm_profit: MetricValue,
    #[serde(skip)]
    pub raw: SecurityAccum,
}

/// Simulation output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub rounds: u64,
    pub master_seed: u64,
    pub with_amm: bool,
    pub mode: Mode,
    pub securities: Vec<SecuritySimStats>,
    /// Present when `3^n` is small enough to tally per-state statistics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateTally>>,
}

#[derive(Clone)]
struct Partial {
    securities: Vec<SecurityAccum>,
    states: Option<Vec<(u64, Vec<u64>)>>,
}

impl Partial {
    fn new(n: usize, track_states: bool) -> Self {
        let states = track_states
            .then(|| vec![(0u64, vec![0u64; n]); 3usize.pow(n as u32)]);
        Self { securities: vec![SecurityAccum::default(); n], states }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.securities.iter_mut().zip(&other.securities) {
            a.merge(b);
        }
        if let (Some(mine), Some(theirs)) = (&mut self.states, &other.states) {
            for ((c, vp), (oc, ovp)) in mine.iter_mut().zip(theirs) {
                *c += oc;
                for (a, b) in vp.iter_mut().zip(ovp) {
                    *a += b;
                }
            }
        }
    }
}

enum Pricer {
    Table(PricingTable),
    /// For configurations too large to tabulate: quotes precomputed, each
    /// round priced directly.
    Direct { quotes: Vec<QuotePair> },
}

impl Pricer {
    fn price(
        &self,
        model: &JointValueModel,
        params: &[crate::model::SecurityParams],
        orders: &OrderVector,
        with_amm: bool,
    ) -> PricedRound {
        match self {
            Pricer::Table(t) => t.priced(orders).clone(),
            Pricer::Direct { quotes } => {
                price_round_with_quotes(model, params, orders, with_amm, quotes)
                    .expect("validated configuration")
            }
        }
    }

    fn quotes(&self, i: usize) -> QuotePair {
        match self {
            Pricer::Table(t) => t.quotes(i),
            Pricer::Direct { quotes } => quotes[i],
        }
    }
}

/// Runs the configured number of independent rounds and aggregates every
/// metric with counts and standard errors.
pub fn run(config: &SimulationConfig) -> Result<SimulationStats> {
    let n = config.model.n();
    if config.rounds == 0 {
        return Err(Error::domain("rounds must be >= 1".to_string()));
    }
    if config.securities.len() != n {
        return Err(Error::domain(format!(
            "expected {} securities, got {}",
            n,
            config.securities.len()
        )));
    }
    let violations = config.model.validate();
    if !violations.is_empty() {
        return Err(Error::domain(format!("model is invalid: {}", violations[0])));
    }

    let pricing_params: Vec<_> =
        config.securities.iter().map(MarketSecurity::pricing_params).collect();
    let sampling: Vec<_> =
        config.securities.iter().map(MarketSecurity::sampling_params).collect();
    let include_absent = matches!(config.mode, Mode::Extended);
    let pricer = if n <= MAX_PRICING_TABLE_SECURITIES {
        Pricer::Table(PricingTable::build(
            &config.model,
            &pricing_params,
            config.with_amm,
            include_absent,
        )?)
    } else {
        Pricer::Direct { quotes: quotes_for(&config.model, &pricing_params, config.with_amm)? }
    };

    let track_states = 3usize.pow(n as u32) <= MAX_STATE_TRACK;
    let n_chunks = config.rounds.div_ceil(CHUNK_ROUNDS);

    let run_chunk = |chunk: u64| -> Partial {
        let mut partial = Partial::new(n, track_states);
        let lo = chunk * CHUNK_ROUNDS;
        let hi = (lo + CHUNK_ROUNDS).min(config.rounds);
        for round in lo..hi {
            let outcome = sample_round(
                &config.model,
                &sampling,
                config.mode,
                RoundStreams::new(config.master_seed, round),
            );
            let priced =
                pricer.price(&config.model, &pricing_params, &outcome.orders, config.with_amm);
            if let Some(states) = &mut partial.states {
                let entry = &mut states[outcome.orders.index()];
                entry.0 += 1;
                for i in 0..n {
                    entry.1[i] += u64::from(outcome.value_sign(n, i) == Sign::Plus);
                }
            }
            for i in 0..n {
                let Some(fill) = priced.fills[i] else { continue };
                let acc = &mut partial.securities[i];
                acc.present += 1;
                let plus = outcome.value_sign(n, i) == Sign::Plus;
                let bucket = match (outcome.trader_types[i], fill.side) {
                    (TraderType::Informed, Side::Buy) => &mut acc.informed_buy,
                    (TraderType::Informed, Side::Sell) => &mut acc.informed_sell,
                    (_, Side::Buy) => &mut acc.liquidity_buy,
                    (_, Side::Sell) => &mut acc.liquidity_sell,
                };
                bucket.add(fill.price, plus);

                let w_mm = match fill.executor {
                    Executor::Mm => 1.0,
                    Executor::Split => 0.5,
                    Executor::Amm => 0.0,
                };
                acc.mm_weight_sum += w_mm;
                acc.mm_weight_sumsq += w_mm * w_mm;

                let v = config.securities[i].p
                    + config.securities[i].r * outcome.value_sign(n, i).unit();
                let profit = match fill.side {
                    Side::Buy => fill.price - v,
                    Side::Sell => v - fill.price,
                };
                let amm_part = (1.0 - w_mm) * profit;
                let mm_part = w_mm * profit;
                acc.amm_profit_sum += amm_part;
                acc.amm_profit_sumsq += amm_part * amm_part;
                acc.mm_profit_sum += mm_part;
                acc.mm_profit_sumsq += mm_part * mm_part;
            }
        }
        partial
    };

    let partials: Vec<Partial> = if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::domain(format!("failed to build worker pool: {e}")))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect())
    } else {
        (0..n_chunks).map(run_chunk).collect()
    };

    let mut total = Partial::new(n, track_states);
    for p in &partials {
        total.merge(p);
    }
    Ok(finalize(config, &pricer, total))
}

fn finalize(config: &SimulationConfig, pricer: &Pricer, total: Partial) -> SimulationStats {
    let n = config.model.n();
    let rounds = config.rounds;
    let securities = total
        .securities
        .iter()
        .enumerate()
        .map(|(i, acc)| {
            let quotes = pricer.quotes(i);
            let buys = acc.buys();
            let sells = acc.sells();
            let mean_buy = buys.mean();
            let mean_sell = sells.mean();
            let mean_buy_informed = acc.informed_buy.mean();
            let mean_sell_informed = acc.informed_sell.mean();
            let mean_buy_liquidity = acc.liquidity_buy.mean();
            let mean_sell_liquidity = acc.liquidity_sell.mean();
            let delta = difference(&mean_buy, &mean_sell);
            let delta_informed = difference(&mean_buy_informed, &mean_sell_informed);
            let delta_liquidity = difference(&mean_buy_liquidity, &mean_sell_liquidity);

            let present = acc.present;
            let mm_share = if present > 0 {
                let np = present as f64;
                let mean = acc.mm_weight_sum / np;
                let var = if present > 1 {
                    ((acc.mm_weight_sumsq - acc.mm_weight_sum * acc.mm_weight_sum / np)
                        / (np - 1.0))
                        .max(0.0)
                } else {
                    0.0
                };
                MetricValue::estimated(mean, (var / np).sqrt(), present)
            } else {
                MetricValue { value: None, se: None, count: Some(0) }
            };

            let inefficiency = inefficiency_estimate(&config.securities[i], acc, &delta_informed);

            let p_transact = {
                let mean = present as f64 / rounds as f64;
                let se = (mean * (1.0 - mean) / rounds as f64).sqrt();
                MetricValue::estimated(mean, se, rounds)
            };

            let amm_profit = per_round_mean(acc.amm_profit_sum, acc.amm_profit_sumsq, rounds);
            let mm_profit = per_round_mean(acc.mm_profit_sum, acc.mm_profit_sumsq, rounds);

            SecuritySimStats {
                security: i,
                mm_bid: quotes.bid,
                mm_ask: quotes.ask,
                mean_buy,
                mean_sell,
                mean_buy_informed,
                mean_sell_informed,
                mean_buy_liquidity,
                mean_sell_liquidity,
                delta,
                delta_informed,
                delta_liquidity,
                mm_share,
                inefficiency,
                p_transact,
                amm_profit,
                mm_profit,
                raw: acc.clone(),
            }
        })
        .collect();

    let states = total.states.map(|tallies| {
        tallies
            .into_iter()
            .enumerate()
            .filter(|(_, (count, _))| *count > 0)
            .map(|(idx, (count, value_plus))| StateTally {
                orders: OrderVector::from_index(idx, n).label(),
                count,
                value_plus,
            })
            .collect()
    });

    SimulationStats {
        rounds,
        master_seed: config.master_seed,
        with_amm: config.with_amm,
        mode: config.mode,
        securities,
        states,
    }
}

/// Difference of two independent-sample means; SE adds in quadrature.
fn difference(a: &MetricValue, b: &MetricValue) -> MetricValue {
    match (a.value, b.value) {
        (Some(x), Some(y)) => MetricValue {
            value: Some(x - y),
            se: match (a.se, b.se) {
                (Some(sa), Some(sb)) => Some(sa.hypot(sb)),
                _ => None,
            },
            count: Some(a.count.unwrap_or(0) + b.count.unwrap_or(0)),
        },
        _ => MetricValue {
            value: None,
            se: None,
            count: Some(a.count.unwrap_or(0) + b.count.unwrap_or(0)),
        },
    }
}

/// Plug-in inefficiency `r - gamma_hat * delta_I_hat / 2` with a
/// delta-method standard error over the two (nearly independent) pieces.
fn inefficiency_estimate(
    sec: &MarketSecurity,
    acc: &SecurityAccum,
    delta_informed: &MetricValue,
) -> MetricValue {
    let present = acc.present;
    let informed = acc.informed_buy.count + acc.informed_sell.count;
    let (Some(di), Some(di_se)) = (delta_informed.value, delta_informed.se) else {
        return MetricValue { value: None, se: None, count: Some(present) };
    };
    if present == 0 {
        return MetricValue { value: None, se: None, count: Some(0) };
    }
    let np = present as f64;
    let gamma_hat = informed as f64 / np;
    let value = sec.r - gamma_hat * di / 2.0;
    let var = (di / 2.0).powi(2) * gamma_hat * (1.0 - gamma_hat) / np
        + (gamma_hat / 2.0).powi(2) * di_se * di_se;
    MetricValue::estimated(value, var.sqrt(), present)
}

fn per_round_mean(sum: f64, sumsq: f64, rounds: u64) -> MetricValue {
    let n = rounds as f64;
    let mean = sum / n;
    let se = if rounds > 1 {
        let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    MetricValue::estimated(mean, se, rounds)
}

impl SimulationStats {
    /// Repackages the estimates as a provenance-tagged metrics block.
    pub fn metrics_report(&self) -> MetricsReport {
        let securities = self
            .securities
            .iter()
            .map(|s| {
                let (inefficiency_amm, inefficiency_noamm) = if self.with_amm {
                    (Some(s.inefficiency), None)
                } else {
                    (None, Some(s.inefficiency))
                };
                SecurityMetrics {
                    security: s.security,
                    mm_bid: s.mm_bid,
                    mm_ask: s.mm_ask,
                    delta: s.delta,
                    delta_informed: s.delta_informed,
                    delta_liquidity: s.delta_liquidity,
                    mm_share: s.mm_share,
                    inefficiency_amm,
                    inefficiency_noamm,
                    p_transact: s.p_transact,
                    amm_profit: Some(s.amm_profit),
                    mm_profit: Some(s.mm_profit),
                }
            })
            .collect();
        MetricsReport {
            path: Provenance::Simulated,
            with_amm: self.with_amm,
            securities,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SecurityParams;
    use crate::oracle;

    fn worked_config(rounds: u64, seed: u64, with_amm: bool) -> SimulationConfig {
        let model = JointValueModel::two_security(0.9).unwrap();
        let securities: Vec<_> = (0..2)
            .map(|i| MarketSecurity::base(&SecurityParams::new(i, 50.0, 1.0, 0.5).unwrap()))
            .collect();
        SimulationConfig {
            model,
            securities,
            mode: Mode::Base,
            with_amm,
            rounds,
            master_seed: seed,
            workers: 1,
        }
    }

    fn within_sigmas(metric: &MetricValue, target: f64, sigmas: f64) {
        let value = metric.value.unwrap();
        let se = metric.se.unwrap();
        let diff = (value - target).abs();
        assert!(
            diff <= sigmas * se,
            "estimate {value} vs {target}: off by {diff} > {sigmas} * {se}"
        );
    }

    #[test]
    fn worked_example_estimates() {
        let stats = run(&worked_config(400_000, 20240, true)).unwrap();
        for s in &stats.securities {
            within_sigmas(&s.delta, 1.0, 4.0);
            within_sigmas(&s.delta_informed, 1.125, 4.0);
            within_sigmas(&s.delta_liquidity, 0.875, 4.0);
            within_sigmas(&s.mm_share, 0.30, 4.0);
            within_sigmas(&s.inefficiency, 0.71875, 4.0);
            within_sigmas(&s.amm_profit, 0.0, 4.0);
            within_sigmas(&s.mm_profit, 0.0, 4.0);
            assert_eq!(s.p_transact.unwrap(), 1.0);
        }
    }

    #[test]
    fn no_amm_run_gives_mm_everything_at_fixed_quotes() {
        let stats = run(&worked_config(50_000, 7, false)).unwrap();
        for s in &stats.securities {
            assert_eq!(s.mm_share.unwrap(), 1.0);
            assert_eq!(s.mm_share.se.unwrap(), 0.0);
            // constant prices: spread is exactly 2 gamma r
            assert_eq!(s.delta.unwrap(), 1.0);
            within_sigmas(&s.inefficiency, 0.75, 4.0);
            within_sigmas(&s.mm_profit, 0.0, 4.0);
            assert_eq!(s.amm_profit.unwrap(), 0.0);
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_workers() {
        let mut cfg = worked_config(30_000, 99, true);
        let a = run(&cfg).unwrap();
        cfg.workers = 4;
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        let c = run(&cfg).unwrap();
        assert_eq!(b, c);

        cfg.master_seed = 100;
        let d = run(&cfg).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn empirical_mixture_identity_is_exact_on_raw_sums() {
        let stats = run(&worked_config(30_000, 5, true)).unwrap();
        for s in &stats.securities {
            let buys = s.raw.buys();
            let reconstructed = buys.price_sum / buys.count as f64;
            assert_eq!(s.mean_buy.unwrap().to_bits(), reconstructed.to_bits());
            assert_eq!(
                buys.price_sum.to_bits(),
                (s.raw.informed_buy.price_sum + s.raw.liquidity_buy.price_sum).to_bits()
            );
            assert_eq!(buys.count, s.raw.informed_buy.count + s.raw.liquidity_buy.count);
        }
    }

    #[test]
    fn state_frequencies_and_calibration() {
        let stats = run(&worked_config(400_000, 31, true)).unwrap();
        let states = stats.states.as_ref().unwrap();
        let model = JointValueModel::two_security(0.9).unwrap();
        let securities: Vec<_> = (0..2)
            .map(|i| MarketSecurity::base(&SecurityParams::new(i, 50.0, 1.0, 0.5).unwrap()))
            .collect();
        let exact = oracle::exact_state_distribution(&model, &securities, Mode::Base).unwrap();
        let pricing: Vec<_> = securities.iter().map(MarketSecurity::pricing_params).collect();
        let table = PricingTable::build(&model, &pricing, true, false).unwrap();

        for (orders, prob) in &exact {
            let tally = states.iter().find(|t| t.orders == orders.label()).unwrap();
            let freq = tally.count as f64 / stats.rounds as f64;
            let se = (prob * (1.0 - prob) / stats.rounds as f64).sqrt();
            assert!((freq - prob).abs() < 4.0 * se, "{}: {freq} vs {prob}", orders.label());

            // calibration: empirical mean of V among rounds in this state
            // converges to the AMM's posterior-mean price
            let priced = table.priced(orders);
            for i in 0..2 {
                let t = priced.fills[i].unwrap().amm_price.unwrap();
                let q = (t - 50.0) / 1.0; // 2 P(plus) - 1
                let p_plus = (1.0 + q) / 2.0;
                let emp = tally.value_plus[i] as f64 / tally.count as f64;
                let se = (p_plus * (1.0 - p_plus) / tally.count as f64).sqrt();
                assert!(
                    (emp - p_plus).abs() < 4.0 * se,
                    "state {} security {i}: {emp} vs {p_plus}",
                    orders.label()
                );
            }
        }
    }

    #[test]
    fn chain_model_matches_oracle() {
        let model = JointValueModel::sign_chain(&[0.8, 0.7]).unwrap();
        let securities: Vec<_> = [0.5, 0.4, 0.6]
            .iter()
            .enumerate()
            .map(|(i, &g)| MarketSecurity::base(&SecurityParams::new(i, 0.0, 1.0, g).unwrap()))
            .collect();
        let config = SimulationConfig {
            model: model.clone(),
            securities: securities.clone(),
            mode: Mode::Base,
            with_amm: true,
            rounds: 300_000,
            master_seed: 77,
            workers: 2,
        };
        let stats = run(&config).unwrap();
        let exact = oracle::exact_metrics_single(&model, &securities, Mode::Base, true).unwrap();
        for (s, e) in stats.securities.iter().zip(&exact) {
            within_sigmas(&s.delta, e.delta, 4.0);
            within_sigmas(&s.delta_informed, e.delta_informed, 4.0);
            within_sigmas(&s.delta_liquidity, e.delta_liquidity, 4.0);
            within_sigmas(&s.mm_share, e.mm_share, 4.0);
            within_sigmas(&s.inefficiency, e.inefficiency, 4.0);
        }
    }

    #[test]
    fn extended_mode_matches_oracle() {
        let model = JointValueModel::two_security(0.8).unwrap();
        let delta = 0.4;
        let pi = 0.7;
        // renormalized effective gamma makes prices the true posterior,
        // so provider profits are martingale-zero in the simulation too
        let gamma = delta / (delta + (1.0 - delta) * pi);
        let securities: Vec<_> = (0..2)
            .map(|i| MarketSecurity {
                index: i,
                p: 20.0,
                r: 2.0,
                informed: delta,
                participation: pi,
                pricing_gamma: gamma,
            })
            .collect();
        let config = SimulationConfig {
            model: model.clone(),
            securities: securities.clone(),
            mode: Mode::Extended,
            with_amm: true,
            rounds: 300_000,
            master_seed: 13,
            workers: 1,
        };
        let stats = run(&config).unwrap();
        let exact =
            oracle::exact_metrics_single(&model, &securities, Mode::Extended, true).unwrap();
        for (s, e) in stats.securities.iter().zip(&exact) {
            within_sigmas(&s.p_transact, e.p_transact, 4.0);
            within_sigmas(&s.delta, e.delta, 4.0);
            within_sigmas(&s.delta_liquidity, e.delta_liquidity, 4.0);
            within_sigmas(&s.mm_share, e.mm_share, 4.0);
            within_sigmas(&s.amm_profit, 0.0, 4.0);
            within_sigmas(&s.mm_profit, 0.0, 4.0);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = worked_config(0, 1, true);
        assert!(run(&cfg).is_err());
        cfg.rounds = 10;
        cfg.securities.pop();
        assert!(run(&cfg).is_err());

        let mut cfg = worked_config(10, 1, true);
        cfg.model = JointValueModel::from_table(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(run(&cfg).is_err());
    }
}
