//! Report assembly and rendering.
//!
//! Every subcommand produces a [`RunReport`]: the resolved configuration
//! echo, metric blocks tagged by computation path, proposition checks, and
//! (where applicable) explicit value checks with expected/actual margins.
//! JSON field names and CSV column order are fixed; reports are
//! byte-reproducible for a fixed seed and configuration (timing is attached
//! only on request for that reason).

use serde::Serialize;

use crate::analytics;
use crate::config::{grid_points, GridAxis, ResolvedConfig, ResolvedMarket};
use crate::error::{Error, Result};
use crate::metrics::{MetricValue, MetricsReport, Provenance, SecurityMetrics};
use crate::model::{grid_seed, present_order_vectors, MarketSecurity, Mode};
use crate::oracle;
use crate::pricing::{self, QuotePair};
use crate::sim;

const EXACT_TOL: f64 = 1e-12;
const SIGMA_GATE: f64 = 4.0;

/// MM quotes for one security under both regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuoteBlock {
    pub security: usize,
    pub standalone: QuotePair,
    pub with_amm: QuotePair,
}

/// One row of the conditional-price table (all-present order vectors).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatePriceRow {
    pub orders: String,
    pub prices: Vec<f64>,
}

/// One proposition check; `margin` is the slack in the stated inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionCheck {
    pub name: String,
    pub inequality: String,
    pub pass: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One explicit value check with its acceptance margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCheck {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    /// Absolute tolerance actually applied (4 SE for simulated values).
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    pub pass: bool,
}

/// Participation equilibria under both regimes (extended mode).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumBlock {
    pub with_amm: analytics::EquilibriumState,
    pub without_amm: analytics::EquilibriumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingBlock {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: ResolvedConfig,
    pub quotes: Vec<QuoteBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_prices: Option<Vec<StatePriceRow>>,
    pub metrics: Vec<MetricsReport>,
    pub propositions: Vec<PropositionCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<ValueCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingBlock>,
}

impl RunReport {
    /// True when every proposition and every check passed.
    pub fn passed(&self) -> bool {
        self.propositions.iter().all(|p| p.pass)
            && self.checks.iter().flatten().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }
}

/// Exact (analytic or oracle) metric blocks for both regimes, plus the
/// materialized markets behind them.
struct ExactPair {
    path: Provenance,
    with_block: MetricsReport,
    without_block: MetricsReport,
    market_with: ResolvedMarket,
    market_without: ResolvedMarket,
}

fn exact_pair(cfg: &ResolvedConfig, force_oracle: bool) -> Result<Option<ExactPair>> {
    let n = cfg.n();
    let market_with = cfg.market(true)?;
    let market_without = cfg.market(false)?;
    if n == 2 && !force_oracle {
        let pair = analytic_pair(market_with, market_without)?;
        return Ok(Some(pair));
    }
    if n <= oracle::MAX_ORACLE_SECURITIES {
        let pair = oracle_pair(market_with, market_without)?;
        return Ok(Some(pair));
    }
    Ok(None)
}

fn analytic_pair(
    market_with: ResolvedMarket,
    market_without: ResolvedMarket,
) -> Result<ExactPair> {
    let model = &market_with.model;
    let phi = model.conditional_plus(0, 1);
    let independent = model.is_independent();
    let pricing_with: Vec<_> =
        market_with.securities.iter().map(MarketSecurity::pricing_params).collect();

    let mut rows_with = Vec::with_capacity(2);
    let mut rows_without = Vec::with_capacity(2);
    for i in 0..2 {
        let g = market_with.securities[i].pricing_gamma;
        let g_other = market_with.securities[1 - i].pricing_gamma;
        let g_wo = market_without.securities[i].pricing_gamma;
        let r = market_with.securities[i].r;
        let share = if independent {
            0.5
        } else {
            analytics::mm_volume_share(g, g_other, phi)?
        };
        let ineff_amm = analytics::inefficiency_with_amm(g, g_other, phi, r)?;
        let ineff_noamm = analytics::inefficiency_without_amm(g_wo, r)?;
        let quotes_with = pricing::mm_quotes_with_amm(model, &pricing_with, i)?;
        let quotes_without =
            pricing::mm_quotes_standalone(&market_without.securities[i].pricing_params());
        let p_with = transaction_probability(&market_with, i);
        let p_without = transaction_probability(&market_without, i);

        rows_with.push(SecurityMetrics {
            security: i,
            mm_bid: quotes_with.bid,
            mm_ask: quotes_with.ask,
            delta: MetricValue::exact(analytics::unconditional_spread(g, r)?),
            delta_informed: MetricValue::exact(analytics::informed_spread(g, g_other, phi, r)?),
            delta_liquidity: MetricValue::exact(analytics::liquidity_spread(
                g, g_other, phi, r,
            )?),
            mm_share: MetricValue::exact(share),
            inefficiency_amm: Some(MetricValue::exact(ineff_amm)),
            inefficiency_noamm: Some(MetricValue::exact(ineff_noamm)),
            p_transact: MetricValue::exact(p_with),
            amm_profit: None,
            mm_profit: None,
        });
        let delta_wo = analytics::unconditional_spread(g_wo, r)?;
        rows_without.push(SecurityMetrics {
            security: i,
            mm_bid: quotes_without.bid,
            mm_ask: quotes_without.ask,
            delta: MetricValue::exact(delta_wo),
            delta_informed: MetricValue::exact(delta_wo),
            delta_liquidity: MetricValue::exact(delta_wo),
            mm_share: MetricValue::exact(1.0),
            inefficiency_amm: Some(MetricValue::exact(ineff_amm)),
            inefficiency_noamm: Some(MetricValue::exact(ineff_noamm)),
            p_transact: MetricValue::exact(p_without),
            amm_profit: None,
            mm_profit: None,
        });
    }
    Ok(ExactPair {
        path: Provenance::Analytic,
        with_block: MetricsReport {
            path: Provenance::Analytic,
            with_amm: true,
            securities: rows_with,
        },
        without_block: MetricsReport {
            path: Provenance::Analytic,
            with_amm: false,
            securities: rows_without,
        },
        market_with,
        market_without,
    })
}

fn oracle_pair(
    market_with: ResolvedMarket,
    market_without: ResolvedMarket,
) -> Result<ExactPair> {
    let rows_with = oracle::exact_metrics_single(
        &market_with.model,
        &market_with.securities,
        market_with.mode,
        true,
    )?;
    let rows_without = oracle::exact_metrics_single(
        &market_without.model,
        &market_without.securities,
        market_without.mode,
        false,
    )?;
    let build = |rows: &[oracle::ExactMetrics], with_amm: bool| -> MetricsReport {
        MetricsReport {
            path: Provenance::Oracle,
            with_amm,
            securities: rows
                .iter()
                .enumerate()
                .map(|(i, m)| SecurityMetrics {
                    security: i,
                    mm_bid: m.mm_bid,
                    mm_ask: m.mm_ask,
                    delta: MetricValue::exact(m.delta),
                    delta_informed: MetricValue::exact(m.delta_informed),
                    delta_liquidity: MetricValue::exact(m.delta_liquidity),
                    mm_share: MetricValue::exact(m.mm_share),
                    inefficiency_amm: Some(MetricValue::exact(rows_with[i].inefficiency)),
                    inefficiency_noamm: Some(MetricValue::exact(rows_without[i].inefficiency)),
                    p_transact: MetricValue::exact(m.p_transact),
                    amm_profit: None,
                    mm_profit: None,
                })
                .collect(),
        }
    };
    Ok(ExactPair {
        path: Provenance::Oracle,
        with_block: build(&rows_with, true),
        without_block: build(&rows_without, false),
        market_with,
        market_without,
    })
}

fn transaction_probability(market: &ResolvedMarket, i: usize) -> f64 {
    match &market.equilibrium {
        Some(eq) => eq.transaction_probability[i],
        None => 1.0,
    }
}

fn quote_blocks(pair: &ExactPair) -> Vec<QuoteBlock> {
    pair.with_block
        .securities
        .iter()
        .zip(&pair.without_block.securities)
        .map(|(w, wo)| QuoteBlock {
            security: w.security,
            standalone: QuotePair { bid: wo.mm_bid, ask: wo.mm_ask },
            with_amm: QuotePair { bid: w.mm_bid, ask: w.mm_ask },
        })
        .collect()
}

fn conditional_prices(market: &ResolvedMarket) -> Result<Option<Vec<StatePriceRow>>> {
    let n = market.model.n();
    if n > 3 {
        return Ok(None);
    }
    let params: Vec<_> = market.securities.iter().map(MarketSecurity::pricing_params).collect();
    let mut rows = Vec::new();
    for orders in present_order_vectors(n) {
        let prices = pricing::amm_transaction_prices(&market.model, &params, &orders)?;
        rows.push(StatePriceRow {
            orders: orders.label(),
            prices: prices.into_iter().map(|p| p.expect("all present")).collect(),
        });
    }
    Ok(Some(rows))
}

/// Proposition checks evaluated on exact values.
fn propositions(pair: &ExactPair) -> Vec<PropositionCheck> {
    let independent = pair.market_with.model.is_independent();
    let note = independent.then(|| "equalities at independence".to_string());
    let mut out = Vec::new();
    let n = pair.with_block.securities.len();
    for i in 0..n {
        let w = &pair.with_block.securities[i];
        let share = w.mm_share.unwrap();
        out.push(if independent {
            PropositionCheck {
                name: format!("prop1.minority_share.security{i}"),
                inequality: "mm_share == 1/2 (split everywhere)".to_string(),
                pass: (share - 0.5).abs() <= EXACT_TOL,
                margin: (share - 0.5).abs(),
                note: note.clone(),
            }
        } else {
            PropositionCheck {
                name: format!("prop1.minority_share.security{i}"),
                inequality: "mm_share < 1/2".to_string(),
                pass: share < 0.5,
                margin: 0.5 - share,
                note: None,
            }
        });

        let delta = w.delta.unwrap();
        let d_i = w.delta_informed.unwrap();
        let d_l = w.delta_liquidity.unwrap();
        if matches!(pair.market_with.mode, Mode::Base) {
            // at a fixed informed share the unconditional spread is unchanged
            let reference = 2.0
                * pair.market_with.securities[i].pricing_gamma
                * pair.market_with.securities[i].r;
            out.push(PropositionCheck {
                name: format!("prop2.spread_unchanged.security{i}"),
                inequality: "delta == 2 gamma r".to_string(),
                pass: (delta - reference).abs() <= EXACT_TOL,
                margin: (delta - reference).abs(),
                note: None,
            });
        }
        out.push(if independent {
            PropositionCheck {
                name: format!("prop2.spread_ordering.security{i}"),
                inequality: "delta_informed == delta == delta_liquidity".to_string(),
                pass: (d_i - delta).abs() <= EXACT_TOL && (delta - d_l).abs() <= EXACT_TOL,
                margin: (d_i - delta).abs().max((delta - d_l).abs()),
                note: note.clone(),
            }
        } else {
            PropositionCheck {
                name: format!("prop2.spread_ordering.security{i}"),
                inequality: "delta_informed > delta > delta_liquidity".to_string(),
                pass: d_i > delta && delta > d_l,
                margin: (d_i - delta).min(delta - d_l),
                note: None,
            }
        });

        let ineff_amm = w.inefficiency_amm.as_ref().unwrap().unwrap();
        let ineff_noamm = w.inefficiency_noamm.as_ref().unwrap().unwrap();
        out.push(if independent {
            PropositionCheck {
                name: format!("prop3.efficiency.security{i}"),
                inequality: "inefficiency_amm == inefficiency_noamm".to_string(),
                pass: (ineff_amm - ineff_noamm).abs() <= EXACT_TOL,
                margin: (ineff_amm - ineff_noamm).abs(),
                note: note.clone(),
            }
        } else {
            PropositionCheck {
                name: format!("prop3.efficiency.security{i}"),
                inequality: "inefficiency_amm < inefficiency_noamm".to_string(),
                pass: ineff_amm < ineff_noamm,
                margin: ineff_noamm - ineff_amm,
                note: None,
            }
        });
    }

    if let (Some(eq_with), Some(eq_without)) =
        (&pair.market_with.equilibrium, &pair.market_without.equilibrium)
    {
        for i in 0..n {
            let p_gain = eq_with.transaction_probability[i] - eq_without.transaction_probability[i];
            let spread_with = 2.0 * eq_with.gamma[i] * pair.market_with.securities[i].r;
            let spread_without = 2.0 * eq_without.gamma[i] * pair.market_without.securities[i].r;
            if independent {
                out.push(PropositionCheck {
                    name: format!("prop4.volume.security{i}"),
                    inequality: "P_with == P_without".to_string(),
                    pass: p_gain.abs() <= EXACT_TOL,
                    margin: p_gain.abs(),
                    note: note.clone(),
                });
                out.push(PropositionCheck {
                    name: format!("prop5.equilibrium_spread.security{i}"),
                    inequality: "2 gamma* r equal across regimes".to_string(),
                    pass: (spread_with - spread_without).abs() <= EXACT_TOL,
                    margin: (spread_with - spread_without).abs(),
                    note: note.clone(),
                });
            } else {
                out.push(PropositionCheck {
                    name: format!("prop4.volume.security{i}"),
                    inequality: "P_with > P_without".to_string(),
                    pass: p_gain > 0.0,
                    margin: p_gain,
                    note: None,
                });
                out.push(PropositionCheck {
                    name: format!("prop5.equilibrium_spread.security{i}"),
                    inequality: "2 gamma*_with r < 2 gamma*_without r".to_string(),
                    pass: spread_with < spread_without,
                    margin: spread_without - spread_with,
                    note: None,
                });
            }
        }
    }
    out
}

fn exact_check(name: String, expected: f64, actual: f64) -> ValueCheck {
    ValueCheck {
        name,
        expected,
        actual,
        tolerance: EXACT_TOL,
        se: None,
        pass: (expected - actual).abs() <= EXACT_TOL,
    }
}

fn simulated_check(name: String, expected: f64, metric: &MetricValue) -> ValueCheck {
    match (metric.value, metric.se) {
        (Some(actual), Some(se)) => ValueCheck {
            name,
            expected,
            actual,
            tolerance: SIGMA_GATE * se,
            se: Some(se),
            pass: (expected - actual).abs() <= SIGMA_GATE * se,
        },
        _ => ValueCheck {
            name,
            expected,
            actual: f64::NAN,
            tolerance: 0.0,
            se: None,
            pass: false,
        },
    }
}

/// `analytic` subcommand: closed forms for n = 2, the enumeration oracle
/// (labeled as such) otherwise.
pub fn analytic_report(cfg: &ResolvedConfig) -> Result<RunReport> {
    let pair = exact_pair(cfg, false)?.ok_or_else(|| {
        Error::Capacity {
            what: "exact metrics (analytic/oracle)",
            n: cfg.n(),
            limit: oracle::MAX_ORACLE_SECURITIES,
        }
    })?;
    build_exact_report("analytic", cfg, pair)
}

/// `oracle` subcommand: exhaustive enumeration even when closed forms exist.
pub fn oracle_report(cfg: &ResolvedConfig) -> Result<RunReport> {
    let pair = exact_pair(cfg, true)?.ok_or_else(|| Error::Capacity {
        what: "enumeration oracle",
        n: cfg.n(),
        limit: oracle::MAX_ORACLE_SECURITIES,
    })?;
    build_exact_report("oracle", cfg, pair)
}

fn build_exact_report(command: &str, cfg: &ResolvedConfig, pair: ExactPair) -> Result<RunReport> {
    let quotes = quote_blocks(&pair);
    let conditional = conditional_prices(&pair.market_with)?;
    let props = propositions(&pair);
    let equilibrium = match (&pair.market_with.equilibrium, &pair.market_without.equilibrium) {
        (Some(w), Some(wo)) => {
            Some(EquilibriumBlock { with_amm: w.clone(), without_amm: wo.clone() })
        }
        _ => None,
    };
    Ok(RunReport {
        command: command.to_string(),
        config: cfg.clone(),
        quotes,
        conditional_prices: conditional,
        metrics: vec![pair.with_block, pair.without_block],
        propositions: props,
        equilibrium,
        checks: None,
        timing: None,
    })
}

/// `simulate` subcommand: Monte Carlo at the configured regime, with the
/// exact blocks alongside and per-metric consistency checks at 4 SE.
pub fn simulate_report(cfg: &ResolvedConfig) -> Result<RunReport> {
    let pair = exact_pair(cfg, false)?;
    let (sim_config, market) = cfg.simulation_config(cfg.run.with_amm)?;
    let stats = sim::run(&sim_config)?;
    let sim_block = stats.metrics_report();

    let mut checks = Vec::new();
    if let Some(pair) = &pair {
        let exact = if cfg.run.with_amm { &pair.with_block } else { &pair.without_block };
        for (e, s) in exact.securities.iter().zip(&sim_block.securities) {
            let i = e.security;
            let tag = format!("simulated_vs_{:?}", pair.path).to_lowercase();
            checks.push(simulated_check(
                format!("{tag}.delta.security{i}"),
                e.delta.unwrap(),
                &s.delta,
            ));
            checks.push(simulated_check(
                format!("{tag}.delta_informed.security{i}"),
                e.delta_informed.unwrap(),
                &s.delta_informed,
            ));
            checks.push(simulated_check(
                format!("{tag}.delta_liquidity.security{i}"),
                e.delta_liquidity.unwrap(),
                &s.delta_liquidity,
            ));
            checks.push(simulated_check(
                format!("{tag}.mm_share.security{i}"),
                e.mm_share.unwrap(),
                &s.mm_share,
            ));
            let (exact_ineff, sim_ineff) = if cfg.run.with_amm {
                (e.inefficiency_amm.as_ref(), s.inefficiency_amm.as_ref())
            } else {
                (e.inefficiency_noamm.as_ref(), s.inefficiency_noamm.as_ref())
            };
            if let (Some(ei), Some(si)) = (exact_ineff, sim_ineff) {
                checks.push(simulated_check(
                    format!("{tag}.inefficiency.security{i}"),
                    ei.unwrap(),
                    si,
                ));
            }
            checks.push(simulated_check(
                format!("{tag}.p_transact.security{i}"),
                e.p_transact.unwrap(),
                &s.p_transact,
            ));
            // zero-profit convergence
            checks.push(simulated_check(
                format!("zero_profit.amm.security{i}"),
                0.0,
                s.amm_profit.as_ref().unwrap(),
            ));
            if market.mode == Mode::Base
                || cfg.run.variant == analytics::GammaVariant::Renormalized
            {
                checks.push(simulated_check(
                    format!("zero_profit.mm.security{i}"),
                    0.0,
                    s.mm_profit.as_ref().unwrap(),
                ));
            }
        }
    }

    let (quotes, conditional, props, equilibrium, mut metrics) = match pair {
        Some(pair) => {
            let q = quote_blocks(&pair);
            let c = conditional_prices(&pair.market_with)?;
            let p = propositions(&pair);
            let eq = match (&pair.market_with.equilibrium, &pair.market_without.equilibrium) {
                (Some(w), Some(wo)) => Some(EquilibriumBlock {
                    with_amm: w.clone(),
                    without_amm: wo.clone(),
                }),
                _ => None,
            };
            (q, c, p, eq, vec![pair.with_block, pair.without_block])
        }
        None => (Vec::new(), None, Vec::new(), None, Vec::new()),
    };
    metrics.push(sim_block);
    Ok(RunReport {
        command: "simulate".to_string(),
        config: cfg.clone(),
        quotes,
        conditional_prices: conditional,
        metrics,
        propositions: props,
        equilibrium,
        checks: Some(checks),
        timing: None,
    })
}

/// The worked-example values pinned by the model: spreads (1, 1.125, 0.875),
/// MM share 0.30, inefficiency 0.71875 / 0.75, quotes (49.25, 50.75).
struct WorkedExpectations;

impl WorkedExpectations {
    const DELTA: f64 = 1.0;
    const DELTA_I: f64 = 1.125;
    const DELTA_L: f64 = 0.875;
    const SHARE: f64 = 0.30;
    const INEFF_AMM: f64 = 0.71875;
    const INEFF_NOAMM: f64 = 0.75;
    const BID: f64 = 49.25;
    const ASK: f64 = 50.75;
}

/// `paper-example` subcommand: analytic + oracle (+ simulation unless
/// `rounds == 0`) on the worked two-security configuration, with every
/// pinned value checked.
pub fn paper_example_report(cfg: &ResolvedConfig) -> Result<RunReport> {
    let analytic = exact_pair(cfg, false)?.expect("worked example is n = 2");
    let oracle_p = exact_pair(cfg, true)?.expect("worked example is n = 2");

    let mut checks = Vec::new();
    for (label, pair) in [("analytic", &analytic), ("oracle", &oracle_p)] {
        for row in &pair.with_block.securities {
            let i = row.security;
            checks.push(exact_check(
                format!("{label}.delta.security{i}"),
                WorkedExpectations::DELTA,
                row.delta.unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.delta_informed.security{i}"),
                WorkedExpectations::DELTA_I,
                row.delta_informed.unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.delta_liquidity.security{i}"),
                WorkedExpectations::DELTA_L,
                row.delta_liquidity.unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.mm_share.security{i}"),
                WorkedExpectations::SHARE,
                row.mm_share.unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.inefficiency_amm.security{i}"),
                WorkedExpectations::INEFF_AMM,
                row.inefficiency_amm.as_ref().unwrap().unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.inefficiency_noamm.security{i}"),
                WorkedExpectations::INEFF_NOAMM,
                row.inefficiency_noamm.as_ref().unwrap().unwrap(),
            ));
            checks.push(exact_check(
                format!("{label}.mm_bid.security{i}"),
                WorkedExpectations::BID,
                row.mm_bid,
            ));
            checks.push(exact_check(
                format!("{label}.mm_ask.security{i}"),
                WorkedExpectations::ASK,
                row.mm_ask,
            ));
        }
    }

    let mut metrics = vec![
        analytic.with_block.clone(),
        analytic.without_block.clone(),
        oracle_p.with_block.clone(),
        oracle_p.without_block.clone(),
    ];

    if cfg.run.rounds > 0 {
        let (sim_with, _) = cfg.simulation_config(true)?;
        let stats_with = sim::run(&sim_with)?;
        let mut cfg_wo = cfg.clone();
        cfg_wo.run.with_amm = false;
        let (sim_without, _) = cfg_wo.simulation_config(false)?;
        let stats_without = sim::run(&sim_without)?;

        for s in &stats_with.securities {
            let i = s.security;
            checks.push(simulated_check(
                format!("simulated.delta.security{i}"),
                WorkedExpectations::DELTA,
                &s.delta,
            ));
            checks.push(simulated_check(
                format!("simulated.delta_informed.security{i}"),
                WorkedExpectations::DELTA_I,
                &s.delta_informed,
            ));
            checks.push(simulated_check(
                format!("simulated.delta_liquidity.security{i}"),
                WorkedExpectations::DELTA_L,
                &s.delta_liquidity,
            ));
            checks.push(simulated_check(
                format!("simulated.mm_share.security{i}"),
                WorkedExpectations::SHARE,
                &s.mm_share,
            ));
            checks.push(simulated_check(
                format!("simulated.inefficiency_amm.security{i}"),
                WorkedExpectations::INEFF_AMM,
                &s.inefficiency,
            ));
            checks.push(simulated_check(
                format!("zero_profit.amm.security{i}"),
                0.0,
                &s.amm_profit,
            ));
            checks.push(simulated_check(
                format!("zero_profit.mm.security{i}"),
                0.0,
                &s.mm_profit,
            ));
        }
        for s in &stats_without.securities {
            checks.push(simulated_check(
                format!("simulated.inefficiency_noamm.security{}", s.security),
                WorkedExpectations::INEFF_NOAMM,
                &s.inefficiency,
            ));
        }
        metrics.push(stats_with.metrics_report());
        metrics.push(stats_without.metrics_report());
    }

    let props = propositions(&analytic);
    Ok(RunReport {
        command: "paper-example".to_string(),
        config: cfg.clone(),
        quotes: quote_blocks(&analytic),
        conditional_prices: conditional_prices(&analytic.market_with)?,
        metrics,
        propositions: props,
        equilibrium: None,
        checks: Some(checks),
        timing: None,
    })
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(m: &MetricValue) -> String {
    m.value.map(fmt).unwrap_or_default()
}

fn fmt_se(m: &MetricValue) -> String {
    m.se.map(fmt).unwrap_or_default()
}

/// Fixed CSV header for `sweep`.
pub const SWEEP_CSV_HEADER: &str = "grid_index,gamma1,gamma2,phi,delta1,delta2,security,\
delta_overall,delta_informed,delta_liquidity,mm_share,inefficiency_amm,inefficiency_noamm,\
p_transact,path,se_delta_overall,se_delta_informed,se_delta_liquidity,se_mm_share,\
se_inefficiency_amm,se_inefficiency_noamm,se_p_transact";

/// One run per grid point, one CSV row per (grid point, security).
/// Simulation seeds derive from the master seed and the grid index.
pub fn sweep_csv(cfg: &ResolvedConfig, axes: &[GridAxis], path: Provenance) -> Result<String> {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for (index, assignment) in grid_points(axes) {
        let mut point = cfg.clone();
        for (key, value) in &assignment {
            point = point.with_assignment(key, *value)?;
        }
        let block = match path {
            Provenance::Simulated => {
                point.run.seed = grid_seed(cfg.run.seed, index);
                let (sim_config, _) = point.simulation_config(point.run.with_amm)?;
                sim::run(&sim_config)?.metrics_report()
            }
            Provenance::Analytic | Provenance::Oracle => {
                let pair =
                    exact_pair(&point, matches!(path, Provenance::Oracle))?.ok_or_else(|| {
                        Error::Capacity {
                            what: "exact metrics (analytic/oracle)",
                            n: point.n(),
                            limit: oracle::MAX_ORACLE_SECURITIES,
                        }
                    })?;
                if point.run.with_amm {
                    pair.with_block
                } else {
                    pair.without_block
                }
            }
        };
        let n = point.n();
        let gamma_col = |i: usize| -> String {
            match point.mode() {
                Mode::Base => point.security[&i.to_string()].gamma.map(fmt).unwrap_or_default(),
                Mode::Extended => String::new(),
            }
        };
        let delta_col = |i: usize| -> String {
            match &point.extended {
                Some(ext) => ext.delta.get_checked(i, n).map(fmt).unwrap_or_default(),
                None => String::new(),
            }
        };
        let phi_col = if n == 2 { point.model.phi.map(fmt).unwrap_or_default() } else { String::new() };
        for row in &block.securities {
            let i = row.security;
            let path_tag = match block.path {
                Provenance::Analytic => "analytic",
                Provenance::Oracle => "oracle",
                Provenance::Simulated => "simulated",
            };
            let cells = [
                index.to_string(),
                gamma_col(0),
                if n > 1 { gamma_col(1) } else { String::new() },
                phi_col.clone(),
                delta_col(0),
                if n > 1 { delta_col(1) } else { String::new() },
                i.to_string(),
                fmt_opt(&row.delta),
                fmt_opt(&row.delta_informed),
                fmt_opt(&row.delta_liquidity),
                fmt_opt(&row.mm_share),
                row.inefficiency_amm.as_ref().map(fmt_opt).unwrap_or_default(),
                row.inefficiency_noamm.as_ref().map(fmt_opt).unwrap_or_default(),
                fmt_opt(&row.p_transact),
                path_tag.to_string(),
                fmt_se(&row.delta),
                fmt_se(&row.delta_informed),
                fmt_se(&row.delta_liquidity),
                fmt_se(&row.mm_share),
                row.inefficiency_amm.as_ref().map(fmt_se).unwrap_or_default(),
                row.inefficiency_noamm.as_ref().map(fmt_se).unwrap_or_default(),
                fmt_se(&row.p_transact),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

fn render_text(report: &RunReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "crossmm {}", report.command);
    let _ = writeln!(s);
    let _ = writeln!(s, "resolved config:");
    for line in report.config.to_toml_string().lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "market maker quotes:");
    let _ = writeln!(
        s,
        "  {:<10}{:>16}{:>16}{:>16}{:>16}",
        "security", "standalone_bid", "standalone_ask", "widest_bid", "widest_ask"
    );
    for q in &report.quotes {
        let _ = writeln!(
            s,
            "  {:<10}{:>16}{:>16}{:>16}{:>16}",
            q.security,
            fmt(q.standalone.bid),
            fmt(q.standalone.ask),
            fmt(q.with_amm.bid),
            fmt(q.with_amm.ask)
        );
    }
    let _ = writeln!(s);

    if let Some(rows) = &report.conditional_prices {
        let n = rows.first().map(|r| r.prices.len()).unwrap_or(0);
        if n == 2 {
            for i in 0..2 {
                let _ = writeln!(s, "conditional AMM price tree, security {i}:");
                render_tree(&mut s, report, rows, i);
                let _ = writeln!(s);
            }
        } else {
            let _ = writeln!(s, "conditional AMM prices:");
            let header: String =
                (0..n).map(|i| format!("{:>14}", format!("price_{i}"))).collect();
            let _ = writeln!(s, "  {:<14}{header}", "orders");
            for row in rows {
                let cells: String = row.prices.iter().map(|p| format!("{:>14}", fmt(*p))).collect();
                let _ = writeln!(s, "  {:<14}{cells}", row.orders);
            }
            let _ = writeln!(s);
        }
    }

    // side-by-side comparison per metric across paths
    let _ = writeln!(s, "metrics:");
    for row_idx in 0..report.metrics.first().map(|m| m.securities.len()).unwrap_or(0) {
        let _ = writeln!(s, "  security {row_idx}:");
        let metric_line = |s: &mut String, name: &str, get: &dyn Fn(&SecurityMetrics) -> Option<(f64, Option<f64>)>| {
            let mut line = format!("    {name:<20}");
            let mut any = false;
            for block in &report.metrics {
                let tag = match (block.path, block.with_amm) {
                    (Provenance::Analytic, true) => "analytic",
                    (Provenance::Analytic, false) => "analytic_noamm",
                    (Provenance::Oracle, true) => "oracle",
                    (Provenance::Oracle, false) => "oracle_noamm",
                    (Provenance::Simulated, true) => "simulated",
                    (Provenance::Simulated, false) => "simulated_noamm",
                };
                if let Some((v, se)) = get(&block.securities[row_idx]) {
                    any = true;
                    match se {
                        Some(se) => line.push_str(&format!(" {tag}={} (se {})", fmt(v), fmt(se))),
                        None => line.push_str(&format!(" {tag}={}", fmt(v))),
                    }
                }
            }
            if any {
                let _ = writeln!(s, "{line}");
            }
        };
        let simple = |field: fn(&SecurityMetrics) -> MetricValue| {
            move |m: &SecurityMetrics| field(m).value.map(|v| (v, field(m).se))
        };
        metric_line(&mut s, "delta", &simple(|m| m.delta));
        metric_line(&mut s, "delta_informed", &simple(|m| m.delta_informed));
        metric_line(&mut s, "delta_liquidity", &simple(|m| m.delta_liquidity));
        metric_line(&mut s, "mm_share", &simple(|m| m.mm_share));
        metric_line(&mut s, "inefficiency_amm", &|m| {
            m.inefficiency_amm.as_ref().and_then(|v| v.value.map(|x| (x, v.se)))
        });
        metric_line(&mut s, "inefficiency_noamm", &|m| {
            m.inefficiency_noamm.as_ref().and_then(|v| v.value.map(|x| (x, v.se)))
        });
        metric_line(&mut s, "p_transact", &simple(|m| m.p_transact));
        metric_line(&mut s, "amm_profit", &|m| {
            m.amm_profit.as_ref().and_then(|v| v.value.map(|x| (x, v.se)))
        });
        metric_line(&mut s, "mm_profit", &|m| {
            m.mm_profit.as_ref().and_then(|v| v.value.map(|x| (x, v.se)))
        });
    }
    let _ = writeln!(s);

    if let Some(eq) = &report.equilibrium {
        let _ = writeln!(s, "participation equilibrium:");
        for (tag, state) in [("with_amm", &eq.with_amm), ("without_amm", &eq.without_amm)] {
            let _ = writeln!(
                s,
                "  {tag}: pi = [{}], gamma = [{}], P = [{}], converged = {} ({} iterations)",
                state.pi.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(", "),
                state.gamma.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(", "),
                state
                    .transaction_probability
                    .iter()
                    .map(|v| fmt(*v))
                    .collect::<Vec<_>>()
                    .join(", "),
                state.converged,
                state.iterations,
            );
        }
        let _ = writeln!(s);
    }

    let _ = writeln!(s, "propositions:");
    for p in &report.propositions {
        let status = if p.pass { "pass" } else { "FAIL" };
        let note = p.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default();
        let _ = writeln!(
            s,
            "  [{status}] {}: {} (margin {}){note}",
            p.name,
            p.inequality,
            fmt(p.margin)
        );
    }

    if let Some(checks) = &report.checks {
        let _ = writeln!(s);
        let _ = writeln!(s, "checks:");
        for c in checks {
            let status = if c.pass { "pass" } else { "FAIL" };
            let se = c.se.map(|se| format!(", se {}", fmt(se))).unwrap_or_default();
            let _ = writeln!(
                s,
                "  [{status}] {}: expected {} actual {} (tol {}{se})",
                c.name,
                fmt(c.expected),
                fmt(c.actual),
                fmt(c.tolerance)
            );
        }
    }

    if let Some(t) = &report.timing {
        let _ = writeln!(s);
        let _ = writeln!(s, "timing: {} ms", fmt(t.elapsed_ms));
    }
    s
}

fn render_tree(s: &mut String, report: &RunReport, rows: &[StatePriceRow], sec: usize) {
    use std::fmt::Write;
    // rows are in present-order-vector order: for n=2,
    // index 0 = B0,B1; 1 = B0,S1; 2 = S0,B1; 3 = S0,S1
    let price = |idx: usize| fmt(rows[idx].prices[sec]);
    let quote = &report.quotes[sec];
    let baseline = report
        .config
        .security
        .get(&sec.to_string())
        .map(|c| c.p)
        .unwrap_or_default();
    let (own_buy, own_sell) = if sec == 0 { ((0, 1), (2, 3)) } else { ((0, 2), (1, 3)) };
    let mid = |side_ask: bool| {
        if side_ask {
            fmt(quote.standalone.ask)
        } else {
            fmt(quote.standalone.bid)
        }
    };
    let b = sec;
    let o = 1 - sec;
    let _ = writeln!(s, "                        +- (B{b},B{o}) {}", price(own_buy.0));
    let _ = writeln!(s, "      +- B{b} {:<10} -+", mid(true));
    let _ = writeln!(s, "      |                 +- (B{b},S{o}) {}", price(own_buy.1));
    let _ = writeln!(s, "  {} -+", fmt(baseline));
    let _ = writeln!(s, "      |                 +- (S{b},B{o}) {}", price(own_sell.0));
    let _ = writeln!(s, "      +- S{b} {:<10} -+", mid(false));
    let _ = writeln!(s, "                        +- (S{b},S{o}) {}", price(own_sell.1));
}
