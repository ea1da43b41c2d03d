//! Shared metric report types used by the analytics, oracle, and simulator
//! paths, tagged with their provenance.

use serde::{Deserialize, Serialize};

/// Which computation path produced a metrics block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Oracle,
    Simulated,
}

/// One metric: exact paths carry just a value, simulated metrics also carry
/// a standard error and the count behind the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    /// `None` when the sample contained no observations for this metric.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

impl MetricValue {
    pub fn exact(value: f64) -> Self {
        Self { value: Some(value), se: None, count: None }
    }

    pub fn estimated(value: f64, se: f64, count: u64) -> Self {
        if value.is_finite() {
            Self { value: Some(value), se: Some(se), count: Some(count) }
        } else {
            Self { value: None, se: None, count: Some(count) }
        }
    }

    /// Value, panicking if the metric is empty. Test/report convenience.
    pub fn unwrap(&self) -> f64 {
        self.value.expect("metric has no value")
    }
}

/// Per-security metrics, one row of a [`MetricsReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityMetrics {
    pub security: usize,
    /// MM quotes under the block's pricing regime.
    pub mm_bid: f64,
    pub mm_ask: f64,
    /// Expected buy-minus-sell transaction price, unconditional on type.
    pub delta: MetricValue,
    pub delta_informed: MetricValue,
    pub delta_liquidity: MetricValue,
    /// Fraction of this security's order flow the MM executes (splits count
    /// half).
    pub mm_share: MetricValue,
    /// Expected value-price gap with the AMM present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inefficiency_amm: Option<MetricValue>,
    /// Expected value-price gap without the AMM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inefficiency_noamm: Option<MetricValue>,
    /// Probability that an order arrives at all (1 in base mode).
    pub p_transact: MetricValue,
    /// Mean per-round AMM profit (simulated paths only; zero in expectation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amm_profit: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mm_profit: Option<MetricValue>,
}

/// A full metrics block from one computation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub path: Provenance,
    /// Whether the AMM was present in the priced market.
    pub with_amm: bool,
    pub securities: Vec<SecurityMetrics>,
}
