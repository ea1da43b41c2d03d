//! Order-flow-conditional pricing.
//!
//! The automated market maker (AMM) observes the whole order vector and
//! prices each order at the posterior expected value of its security; the
//! traditional market maker (MM) sees only his own security's order. With the
//! AMM present, competition forces the MM out to the widest prices the AMM
//! ever sets, and ties are split half-and-half.
//!
//! Posterior marginals are computed by summing each state-weight multiset in
//! ascending value order. Order vectors whose weight multisets coincide (all
//! of them when values are independent, sign-mirrored pairs in symmetric
//! models) therefore produce bit-identical prices, which is what makes the
//! Split rule's exact-equality test meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    present_order_vectors, state_sign, JointValueModel, Order, OrderVector, SecurityParams,
    Side, Sign,
};

/// Normalizer underflow guard for the posterior.
const MIN_NORMALIZER: f64 = 1e-300;

/// A bid/ask pair quoted by the traditional market maker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotePair {
    pub bid: f64,
    pub ask: f64,
}

/// Who executes an order: the security's market maker, the automated market
/// maker, or both at half size when their prices tie exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Executor {
    Mm,
    Amm,
    Split,
}

/// Pricing outcome for one realized order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fill {
    pub side: Side,
    /// AMM's conditional price, when the AMM participates.
    pub amm_price: Option<f64>,
    /// MM's side-relevant quote.
    pub mm_price: f64,
    /// Executed price: the most competitive of the available quotes.
    pub price: f64,
    pub executor: Executor,
}

/// Pricing outcome for a whole round; `None` where no order was submitted.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedRound {
    pub fills: Vec<Option<Fill>>,
}

fn check_inputs(model: &JointValueModel, gammas: &[f64], orders: &OrderVector) -> Result<()> {
    if gammas.len() != model.n() {
        return Err(Error::domain(format!(
            "expected {} gammas, got {}",
            model.n(),
            gammas.len()
        )));
    }
    if orders.len() != model.n() {
        return Err(Error::domain(format!(
            "expected {} orders, got {}",
            model.n(),
            orders.len()
        )));
    }
    for (i, &g) in gammas.iter().enumerate() {
        // (0, 1]: gamma reaches 1 exactly in the extended model when
        // liquidity participation is zero
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::domain(format!(
                "security {i}: pricing gamma must lie in (0, 1], got {g}"
            )));
        }
    }
    Ok(())
}

/// Unnormalized posterior weight of every value state given the orders.
///
/// Realized orders contribute likelihoods `P(Buy | +) = (1 + gamma_i)/2`,
/// `P(Buy | -) = (1 - gamma_i)/2` (and mirrored for sells). Absent orders are
/// skipped: abstention is value-independent, so absence carries no
/// information about values.
fn state_weights(model: &JointValueModel, gammas: &[f64], orders: &OrderVector) -> Vec<f64> {
    let n = model.n();
    let mut weights = Vec::with_capacity(model.num_states());
    for state in 0..model.num_states() {
        let mut w = model.mass(state);
        for i in 0..n {
            let up = state_sign(state, n, i) == Sign::Plus;
            w *= match (orders.get(i), up) {
                (Order::Buy, true) | (Order::Sell, false) => (1.0 + gammas[i]) / 2.0,
                (Order::Buy, false) | (Order::Sell, true) => (1.0 - gammas[i]) / 2.0,
                (Order::Absent, _) => continue,
            };
        }
        weights.push(w);
    }
    weights
}

/// Sums in ascending value order so that equal multisets sum identically.
fn canonical_sum(buf: &mut Vec<f64>) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

/// Posterior probability of each value state given the order vector.
pub fn posterior_over_values(
    model: &JointValueModel,
    gammas: &[f64],
    orders: &OrderVector,
) -> Result<Vec<f64>> {
    check_inputs(model, gammas, orders)?;
    let weights = state_weights(model, gammas, orders);
    let normalizer = canonical_sum(&mut weights.clone());
    if !(normalizer >= MIN_NORMALIZER) {
        return Err(Error::DegeneratePosterior { normalizer });
    }
    Ok(weights.into_iter().map(|w| w / normalizer).collect())
}

/// Posterior-mean transaction price the AMM sets for each realized order:
/// `T_i = p_i + r_i * (2 P(V_i = + | orders) - 1)`.
pub fn amm_transaction_prices(
    model: &JointValueModel,
    params: &[SecurityParams],
    orders: &OrderVector,
) -> Result<Vec<Option<f64>>> {
    let gammas: Vec<f64> = params.iter().map(|sp| sp.gamma).collect();
    check_inputs(model, &gammas, orders)?;
    let n = model.n();
    let weights = state_weights(model, &gammas, orders);

    let mut plus = Vec::with_capacity(weights.len() / 2);
    let mut minus = Vec::with_capacity(weights.len() / 2);
    let mut prices = Vec::with_capacity(n);
    for (i, sp) in params.iter().enumerate() {
        if orders.get(i) == Order::Absent {
            prices.push(None);
            continue;
        }
        plus.clear();
        minus.clear();
        for (state, &w) in weights.iter().enumerate() {
            match state_sign(state, n, i) {
                Sign::Plus => plus.push(w),
                Sign::Minus => minus.push(w),
            }
        }
        let a = canonical_sum(&mut plus);
        let b = canonical_sum(&mut minus);
        let normalizer = a + b;
        if !(normalizer >= MIN_NORMALIZER) {
            return Err(Error::DegeneratePosterior { normalizer });
        }
        prices.push(Some(sp.p + sp.r * ((a - b) / normalizer)));
    }
    Ok(prices)
}

/// Quotes the security's market maker would post without the AMM:
/// `ask = p + gamma r`, `bid = p - gamma r`.
pub fn mm_quotes_standalone(params: &SecurityParams) -> QuotePair {
    QuotePair {
        bid: params.p - params.gamma * params.r,
        ask: params.p + params.gamma * params.r,
    }
}

/// Equilibrium quotes of the market maker for security `i` when the AMM is
/// present: the widest prices the AMM ever sets against a buy (ask) or a
/// sell (bid), found by scanning every complementary all-present order
/// vector.
pub fn mm_quotes_with_amm(
    model: &JointValueModel,
    params: &[SecurityParams],
    i: usize,
) -> Result<QuotePair> {
    if i >= model.n() {
        return Err(Error::domain(format!("security index {i} out of range")));
    }
    let mut ask = f64::NEG_INFINITY;
    let mut bid = f64::INFINITY;
    for orders in present_order_vectors(model.n()) {
        let price = amm_transaction_prices(model, params, &orders)?[i]
            .expect("all orders present");
        match orders.get(i) {
            Order::Buy => ask = ask.max(price),
            Order::Sell => bid = bid.min(price),
            Order::Absent => unreachable!(),
        }
    }
    Ok(QuotePair { bid, ask })
}

/// Who executes the order: split on an exact tie, otherwise whoever is
/// strictly better for the submitter (lower ask for buys, higher bid for
/// sells).
pub fn attribute_execution(amm_price: f64, mm_quote: f64, side: Side) -> Executor {
    if amm_price == mm_quote {
        return Executor::Split;
    }
    let amm_better = match side {
        Side::Buy => amm_price < mm_quote,
        Side::Sell => amm_price > mm_quote,
    };
    if amm_better {
        Executor::Amm
    } else {
        Executor::Mm
    }
}

/// Prices a round's realized orders.
///
/// With the AMM present, each order executes at the AMM's conditional price
/// against the MM's widest-spread quote (ties split). Without it, the MM's
/// standalone quote is the only price.
pub fn price_round(
    model: &JointValueModel,
    params: &[SecurityParams],
    orders: &OrderVector,
    with_amm: bool,
) -> Result<PricedRound> {
    let quotes = quotes_for(model, params, with_amm)?;
    price_round_with_quotes(model, params, orders, with_amm, &quotes)
}

pub(crate) fn quotes_for(
    model: &JointValueModel,
    params: &[SecurityParams],
    with_amm: bool,
) -> Result<Vec<QuotePair>> {
    (0..model.n())
        .map(|i| {
            if with_amm {
                mm_quotes_with_amm(model, params, i)
            } else {
                Ok(mm_quotes_standalone(&params[i]))
            }
        })
        .collect()
}

pub(crate) fn price_round_with_quotes(
    model: &JointValueModel,
    params: &[SecurityParams],
    orders: &OrderVector,
    with_amm: bool,
    quotes: &[QuotePair],
) -> Result<PricedRound> {
    let amm_prices = if with_amm {
        Some(amm_transaction_prices(model, params, orders)?)
    } else {
        None
    };
    let fills = (0..model.n())
        .map(|i| {
            let side = orders.get(i).side()?;
            let mm_price = match side {
                Side::Buy => quotes[i].ask,
                Side::Sell => quotes[i].bid,
            };
            let fill = match &amm_prices {
                Some(prices) => {
                    let amm = prices[i].expect("order present");
                    let executor = attribute_execution(amm, mm_price, side);
                    let price = match side {
                        Side::Buy => amm.min(mm_price),
                        Side::Sell => amm.max(mm_price),
                    };
                    Fill { side, amm_price: Some(amm), mm_price, price, executor }
                }
                None => Fill { side, amm_price: None, mm_price, price: mm_price, executor: Executor::Mm },
            };
            Some(fill)
        })
        .collect();
    Ok(PricedRound { fills })
}

/// Precomputed pricing for every order vector of a fixed configuration.
///
/// Building costs `O(3^n)` (or `2^n` when absent orders cannot occur), after
/// which per-round pricing is a table lookup. Quote/price bit-patterns are
/// identical to [`price_round`], so Split ties are preserved.
#[derive(Debug, Clone)]
pub struct PricingTable {
    quotes: Vec<QuotePair>,
    fills: Vec<Option<PricedRound>>,
    n: usize,
}

/// Beyond this many securities the table would not fit; price per round.
pub const MAX_PRICING_TABLE_SECURITIES: usize = 10;

impl PricingTable {
    pub fn build(
        model: &JointValueModel,
        params: &[SecurityParams],
        with_amm: bool,
        include_absent: bool,
    ) -> Result<Self> {
        let n = model.n();
        if n > MAX_PRICING_TABLE_SECURITIES {
            return Err(Error::Capacity {
                what: "pricing table",
                n,
                limit: MAX_PRICING_TABLE_SECURITIES,
            });
        }
        let quotes = quotes_for(model, params, with_amm)?;
        let mut fills = vec![None; 3usize.pow(n as u32)];
        for idx in 0..fills.len() {
            let orders = OrderVector::from_index(idx, n);
            if !include_absent && orders.iter().any(|o| o == Order::Absent) {
                continue;
            }
            fills[idx] =
                Some(price_round_with_quotes(model, params, &orders, with_amm, &quotes)?);
        }
        Ok(Self { quotes, fills, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn quotes(&self, i: usize) -> QuotePair {
        self.quotes[i]
    }

    pub fn priced(&self, orders: &OrderVector) -> &PricedRound {
        self.fills[orders.index()]
            .as_ref()
            .expect("order vector outside the table's coverage")
    }
}
