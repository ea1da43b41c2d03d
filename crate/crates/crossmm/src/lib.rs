//! Multi-security dealership-market model with a cross-security automated
//! market maker.
//!
//! Each trading round submits one unit order per security; orders come from
//! informed investors (who know their security's binary end-of-period value)
//! or uninformed liquidity traders. Two kinds of competitive liquidity
//! provider price the flow: per-security market makers, who see only their
//! own order, and an automated market maker who conditions on the entire
//! order vector through the joint value distribution. Pricing is zero-profit
//! Bayesian: every transaction price is a posterior expected value.
//!
//! The crate computes the resulting spreads (by trader type), the market
//! maker's volume share, price inefficiency, and the extended model's
//! endogenous-participation equilibrium, three independent ways:
//!
//! - [`analytics`] — closed forms for two-security markets;
//! - [`oracle`] — exact exhaustive enumeration for up to eight securities;
//! - [`sim`] — seeded, reproducible Monte Carlo for anything samplable.
//!
//! [`config`] and [`report`] supply the batch front end used by the
//! `crossmm` CLI: TOML run configurations in, JSON/CSV/text reports out.
//!
//! ```
//! use crossmm::model::{JointValueModel, SecurityParams, OrderVector, Order};
//! use crossmm::pricing::amm_transaction_prices;
//!
//! let model = JointValueModel::two_security(0.9).unwrap();
//! let params = vec![
//!     SecurityParams::new(0, 50.0, 1.0, 0.5).unwrap(),
//!     SecurityParams::new(1, 50.0, 1.0, 0.5).unwrap(),
//! ];
//! let orders = OrderVector::new(vec![Order::Buy, Order::Buy]);
//! let prices = amm_transaction_prices(&model, &params, &orders).unwrap();
//! assert!((prices[0].unwrap() - 50.75).abs() < 1e-12);
//! ```

pub mod analytics;
pub mod config;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
