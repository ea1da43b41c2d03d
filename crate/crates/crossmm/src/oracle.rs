//! Exact ground truth by exhaustive enumeration.
//!
//! Every (value vector, per-security trader branch) outcome of one trading
//! round is enumerated with its probability, priced through the pricing
//! engine, and reduced to exact metrics by compensated weighted summation.
//! For two securities this validates the closed forms; for general n it
//! serves as the reference the closed forms do not cover.

use crate::error::{Error, Result};
use crate::metrics::{MetricValue, MetricsReport, Provenance, SecurityMetrics};
use crate::model::{
    state_sign, JointValueModel, MarketSecurity, Mode, Order, OrderVector, Side, Sign,
};
use crate::pricing::{Executor, PricingTable};

/// Atom counts grow as `2^n * 4^n`; eight securities is the exactness cap.
pub const MAX_ORACLE_SECURITIES: usize = 8;

/// Trader branch for one security inside an [`OutcomeAtom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Informed order; direction forced by the realized value.
    Informed,
    LiquidityBuy,
    LiquiditySell,
    /// Liquidity trader who abstains (extended mode only).
    LiquidityAbsent,
}

/// One elementary outcome of a trading round.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeAtom {
    /// Joint probability of this outcome.
    pub probability: f64,
    /// Realized value state (table index).
    pub values: usize,
    pub branches: Vec<Branch>,
    /// Order vector implied by the values and branches.
    pub orders: OrderVector,
}

fn check_capacity(model: &JointValueModel) -> Result<()> {
    if model.n() > MAX_ORACLE_SECURITIES {
        return Err(Error::Capacity {
            what: "enumeration oracle",
            n: model.n(),
            limit: MAX_ORACLE_SECURITIES,
        });
    }
    Ok(())
}

fn check_securities(model: &JointValueModel, securities: &[MarketSecurity]) -> Result<()> {
    if securities.len() != model.n() {
        return Err(Error::domain(format!(
            "expected {} securities, got {}",
            model.n(),
            securities.len()
        )));
    }
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Error::domain(format!("model is invalid: {}", violations[0])));
    }
    Ok(())
}

/// Visits every outcome atom once. The atom reference is reused between
/// calls, so callers must copy anything they keep.
pub fn for_each_atom<F>(
    model: &JointValueModel,
    securities: &[MarketSecurity],
    mode: Mode,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&OutcomeAtom),
{
    check_capacity(model)?;
    check_securities(model, securities)?;
    let n = model.n();
    let branch_count = match mode {
        Mode::Base => 3usize,
        Mode::Extended => 4usize,
    };
    let mut atom = OutcomeAtom {
        probability: 0.0,
        values: 0,
        branches: vec![Branch::Informed; n],
        orders: OrderVector::new(vec![Order::Buy; n]),
    };
    let mut digits = vec![0usize; n];
    for state in 0..model.num_states() {
        let base_mass = model.mass(state);
        digits.iter_mut().for_each(|d| *d = 0);
        'combos: loop {
            let mut prob = base_mass;
            let mut orders = Vec::with_capacity(n);
            let mut branches = Vec::with_capacity(n);
            for i in 0..n {
                let sec = &securities[i];
                let sign = state_sign(state, n, i);
                let (branch, p, order) = match digits[i] {
                    0 => (
                        Branch::Informed,
                        sec.informed,
                        if sign == Sign::Plus { Order::Buy } else { Order::Sell },
                    ),
                    1 => (
                        Branch::LiquidityBuy,
                        (1.0 - sec.informed) * sec.participation / 2.0,
                        Order::Buy,
                    ),
                    2 => (
                        Branch::LiquiditySell,
                        (1.0 - sec.informed) * sec.participation / 2.0,
                        Order::Sell,
                    ),
                    _ => (
                        Branch::LiquidityAbsent,
                        (1.0 - sec.informed) * (1.0 - sec.participation),
                        Order::Absent,
                    ),
                };
                prob *= p;
                branches.push(branch);
                orders.push(order);
            }
            atom.probability = prob;
            atom.values = state;
            atom.branches.clear();
            atom.branches.extend_from_slice(&branches);
            atom.orders = OrderVector::new(orders);
            visit(&atom);

            let mut i = 0;
            loop {
                if i == n {
                    break 'combos;
                }
                digits[i] += 1;
                if digits[i] < branch_count {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
    Ok(())
}

/// Collects all atoms; intended for inspection and small instances.
pub fn atoms(
    model: &JointValueModel,
    securities: &[MarketSecurity],
    mode: Mode,
) -> Result<Vec<OutcomeAtom>> {
    let mut out = Vec::new();
    for_each_atom(model, securities, mode, |atom| out.push(atom.clone()))?;
    Ok(out)
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct GroupSums {
    weight: Kahan,
    price: Kahan,
    v_plus: Kahan,
}

#[derive(Debug, Clone, Default)]
struct SecuritySums {
    // indexed [informed(0)/liquidity(1)][buy(0)/sell(1)]
    groups: [[GroupSums; 2]; 2],
    mm_weight: Kahan,
    present: Kahan,
}

/// Exact per-security metrics under one pricing regime.
#[derive(Debug, Clone)]
pub struct ExactMetrics {
    pub delta: f64,
    pub delta_informed: f64,
    pub delta_liquidity: f64,
    pub mm_share: f64,
    pub inefficiency: f64,
    pub p_transact: f64,
    pub mm_bid: f64,
    pub mm_ask: f64,
}

/// Runs the enumeration under one pricing regime.
pub fn exact_metrics_single(
    model: &JointValueModel,
    securities: &[MarketSecurity],
    mode: Mode,
    with_amm: bool,
) -> Result<Vec<ExactMetrics>> {
    check_capacity(model)?;
    check_securities(model, securities)?;
    let n = model.n();
    let pricing: Vec<_> = securities.iter().map(MarketSecurity::pricing_params).collect();
    let table = PricingTable::build(model, &pricing, with_amm, matches!(mode, Mode::Extended))?;

    let mut sums = vec![SecuritySums::default(); n];
    for_each_atom(model, securities, mode, |atom| {
        if atom.probability == 0.0 {
            return;
        }
        let priced = table.priced(&atom.orders);
        for i in 0..n {
            let Some(fill) = priced.fills[i] else { continue };
            let s = &mut sums[i];
            s.present.add(atom.probability);
            let ti = usize::from(atom.branches[i] != Branch::Informed);
            let si = usize::from(fill.side == Side::Sell);
            let g = &mut s.groups[ti][si];
            g.weight.add(atom.probability);
            g.price.add(atom.probability * fill.price);
            if state_sign(atom.values, n, i) == Sign::Plus {
                g.v_plus.add(atom.probability);
            }
            let w_mm = match fill.executor {
                Executor::Mm => 1.0,
                Executor::Split => 0.5,
                Executor::Amm => 0.0,
            };
            if w_mm > 0.0 {
                s.mm_weight.add(atom.probability * w_mm);
            }
        }
    })?;

    let mut out = Vec::with_capacity(n);
    for (i, s) in sums.iter().enumerate() {
        let sec = &securities[i];
        let mean = |g: &GroupSums| g.price.value() / g.weight.value();
        let t_ib = mean(&s.groups[0][0]);
        let t_is = mean(&s.groups[0][1]);
        let t_lb = mean(&s.groups[1][0]);
        let t_ls = mean(&s.groups[1][1]);
        let buys = s.groups[0][0].price.value() + s.groups[1][0].price.value();
        let buy_w = s.groups[0][0].weight.value() + s.groups[1][0].weight.value();
        let sells = s.groups[0][1].price.value() + s.groups[1][1].price.value();
        let sell_w = s.groups[0][1].weight.value() + s.groups[1][1].weight.value();
        let present = s.present.value();

        // E|V - E[T | type, side]| via exact branch algebra: within a group
        // every |V - tbar| is r -/+ (tbar - p) depending on the value sign
        let mut ineff = Kahan::default();
        for row in &s.groups {
            for group in row {
                let w = group.weight.value();
                if w == 0.0 {
                    continue;
                }
                let tbar = group.price.value() / w;
                let d = tbar - sec.p;
                let plus = group.v_plus.value();
                ineff.add(plus * (sec.r - d));
                ineff.add((w - plus) * (sec.r + d));
            }
        }

        let quotes = table.quotes(i);
        out.push(ExactMetrics {
            delta: buys / buy_w - sells / sell_w,
            delta_informed: t_ib - t_is,
            delta_liquidity: t_lb - t_ls,
            mm_share: s.mm_weight.value() / present,
            inefficiency: ineff.value() / present,
            p_transact: present,
            mm_bid: quotes.bid,
            mm_ask: quotes.ask,
        });
    }
    Ok(out)
}

/// Full oracle metrics block. Spreads, share, and transaction probability
/// come from the requested pricing regime; both inefficiencies are reported
/// (the complementary regime is enumerated as well).
pub fn exact_metrics(
    model: &JointValueModel,
    securities: &[MarketSecurity],
    mode: Mode,
    with_amm: bool,
) -> Result<MetricsReport> {
    let main = exact_metrics_single(model, securities, mode, with_amm)?;
    let other = exact_metrics_single(model, securities, mode, !with_amm)?;
    let rows = main
        .iter()
        .zip(&other)
        .enumerate()
        .map(|(i, (m, o))| {
            let (amm, noamm) = if with_amm { (m, o) } else { (o, m) };
            SecurityMetrics {
                security: i,
                mm_bid: m.mm_bid,
                mm_ask: m.mm_ask,
                delta: MetricValue::exact(m.delta),
                delta_informed: MetricValue::exact(m.delta_informed),
                delta_liquidity: MetricValue::exact(m.delta_liquidity),
                mm_share: MetricValue::exact(m.mm_share),
                inefficiency_amm: Some(MetricValue::exact(amm.inefficiency)),
                inefficiency_noamm: Some(MetricValue::exact(noamm.inefficiency)),
                p_transact: MetricValue::exact(m.p_transact),
                amm_profit: None,
                mm_profit: None,
            }
        })
        .collect();
    Ok(MetricsReport { path: Provenance::Oracle, with_amm, securities: rows })
}

/// Exact probability of every order-flow state, in order-vector index order.
/// Base mode lists the `2^n` all-present vectors; extended mode all `3^n`.
pub fn exact_state_distribution(
    model: &JointValueModel,
    securities: &[MarketSecurity],
    mode: Mode,
) -> Result<Vec<(OrderVector, f64)>> {
    check_capacity(model)?;
    let n = model.n();
    let mut acc = vec![Kahan::default(); 3usize.pow(n as u32)];
    for_each_atom(model, securities, mode, |atom| {
        acc[atom.orders.index()].add(atom.probability);
    })?;
    let mut out = Vec::new();
    for (idx, k) in acc.iter().enumerate() {
        let orders = OrderVector::from_index(idx, n);
        if matches!(mode, Mode::Base) && orders.iter().any(|o| o == Order::Absent) {
            continue;
        }
        out.push((orders, k.value()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use crate::model::SecurityParams;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (diff {})", (a - b).abs());
    }

    fn base_securities(gammas: &[f64], p: f64, r: f64) -> Vec<MarketSecurity> {
        gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                MarketSecurity::base(&SecurityParams::new(i, p, r, g).unwrap())
            })
            .collect()
    }

    #[test]
    fn atom_probabilities_sum_to_one() {
        let model = JointValueModel::sign_chain(&[0.8, 0.7]).unwrap();
        let secs = base_securities(&[0.5, 0.4, 0.6], 0.0, 1.0);
        let mut total = Kahan::default();
        let mut count = 0usize;
        for_each_atom(&model, &secs, Mode::Base, |atom| {
            total.add(atom.probability);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 8 * 27);
        assert_close(total.value(), 1.0, 1e-12);

        // extended mode with abstention
        let ext: Vec<_> = secs
            .iter()
            .map(|s| MarketSecurity {
                informed: 0.3,
                participation: 0.7,
                pricing_gamma: 0.3 / (0.3 + 0.7 * 0.7),
                ..*s
            })
            .collect();
        let mut total = Kahan::default();
        for_each_atom(&model, &ext, Mode::Extended, |atom| total.add(atom.probability)).unwrap();
        assert_close(total.value(), 1.0, 1e-12);
    }

    #[test]
    fn worked_example_is_exact() {
        let model = JointValueModel::two_security(0.9).unwrap();
        let secs = base_securities(&[0.5, 0.5], 50.0, 1.0);
        let m = exact_metrics_single(&model, &secs, Mode::Base, true).unwrap();
        for row in &m {
            assert_close(row.delta, 1.0, 1e-12);
            assert_close(row.delta_informed, 1.125, 1e-12);
            assert_close(row.delta_liquidity, 0.875, 1e-12);
            assert_close(row.mm_share, 0.30, 1e-12);
            assert_close(row.inefficiency, 0.71875, 1e-12);
            assert_close(row.p_transact, 1.0, 1e-12);
            assert_close(row.mm_bid, 49.25, 1e-12);
            assert_close(row.mm_ask, 50.75, 1e-12);
        }
        let without = exact_metrics_single(&model, &secs, Mode::Base, false).unwrap();
        for row in &without {
            assert_close(row.inefficiency, 0.75, 1e-12);
            assert_close(row.mm_share, 1.0, 1e-12);
            assert_close(row.delta, 1.0, 1e-12);
        }
    }

    #[test]
    fn independence_equalizes_both_regimes() {
        let model = JointValueModel::two_security(0.5).unwrap();
        let secs = base_securities(&[0.3, 0.6], 10.0, 2.0);
        let with = exact_metrics_single(&model, &secs, Mode::Base, true).unwrap();
        let without = exact_metrics_single(&model, &secs, Mode::Base, false).unwrap();
        for (w, wo) in with.iter().zip(&without) {
            assert_close(w.inefficiency, wo.inefficiency, 1e-12);
            assert_close(w.delta_informed, w.delta, 1e-12);
            assert_close(w.delta_liquidity, w.delta, 1e-12);
            // split everywhere
            assert_close(w.mm_share, 0.5, 1e-12);
        }
        assert_close(
            with[0].inefficiency,
            (1.0 - 0.3) * (1.0 + 0.3) * 2.0,
            1e-12,
        );
    }

    #[test]
    fn state_distribution_worked_example() {
        let model = JointValueModel::two_security(0.9).unwrap();
        let secs = base_securities(&[0.5, 0.5], 50.0, 1.0);
        let dist = exact_state_distribution(&model, &secs, Mode::Base).unwrap();
        assert_eq!(dist.len(), 4);
        let by_label: std::collections::BTreeMap<String, f64> =
            dist.iter().map(|(o, p)| (o.label(), *p)).collect();
        assert_close(by_label["B0,B1"], 0.30, 1e-12);
        assert_close(by_label["S0,S1"], 0.30, 1e-12);
        assert_close(by_label["B0,S1"], 0.20, 1e-12);
        assert_close(by_label["S0,B1"], 0.20, 1e-12);
    }

    #[test]
    fn state_distribution_independence_and_chain() {
        let model = JointValueModel::two_security(0.5).unwrap();
        let secs = base_securities(&[0.5, 0.5], 50.0, 1.0);
        for (_, p) in exact_state_distribution(&model, &secs, Mode::Base).unwrap() {
            assert_close(p, 0.25, 1e-12);
        }

        let chain = JointValueModel::sign_chain(&[0.8, 0.7]).unwrap();
        let secs = base_securities(&[0.5, 0.4, 0.6], 0.0, 1.0);
        let dist = exact_state_distribution(&chain, &secs, Mode::Base).unwrap();
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert_close(total, 1.0, 1e-12);
        // per-security buy marginal is 1/2 by symmetry
        for i in 0..3 {
            let buys: f64 = dist
                .iter()
                .filter(|(o, _)| o.get(i) == Order::Buy)
                .map(|(_, p)| p)
                .sum();
            assert_close(buys, 0.5, 1e-12);
        }
    }

    #[test]
    fn matches_closed_forms_on_a_grid() {
        let grid = [0.08, 0.3, 0.55, 0.9];
        for &g1 in &grid {
            for &g2 in &grid {
                for &phi in &[0.05, 0.3, 0.65, 0.97] {
                    let model = JointValueModel::two_security(phi).unwrap();
                    let secs = base_securities(&[g1, g2], 25.0, 1.5);
                    let m = exact_metrics_single(&model, &secs, Mode::Base, true).unwrap();
                    assert_close(
                        m[0].delta_informed,
                        analytics::informed_spread(g1, g2, phi, 1.5).unwrap(),
                        1e-12,
                    );
                    assert_close(
                        m[0].delta_liquidity,
                        analytics::liquidity_spread(g1, g2, phi, 1.5).unwrap(),
                        1e-12,
                    );
                    assert_close(
                        m[0].inefficiency,
                        analytics::inefficiency_with_amm(g1, g2, phi, 1.5).unwrap(),
                        1e-12,
                    );
                    assert_close(
                        m[0].mm_share,
                        analytics::mm_volume_share(g1, g2, phi).unwrap(),
                        1e-12,
                    );
                    assert_close(m[0].delta, 2.0 * g1 * 1.5, 1e-12);
                }
            }
        }
    }

    #[test]
    fn frozen_chain_metrics() {
        // frozen by the exact-fraction enumeration: chain (0.8, 0.7),
        // gammas (0.5, 0.4, 0.6), p = 0, r = 1
        let model = JointValueModel::sign_chain(&[0.8, 0.7]).unwrap();
        let secs = base_securities(&[0.5, 0.4, 0.6], 0.0, 1.0);
        let m = exact_metrics_single(&model, &secs, Mode::Base, true).unwrap();
        assert_close(m[0].mm_ask, 233.0 / 322.0, 1e-12);
        assert_close(m[0].mm_bid, -233.0 / 322.0, 1e-12);
        assert_close(m[0].delta, 1.0, 1e-12);
        assert_close(m[0].delta_informed, 1.055_883_726_944_982_1, 1e-12);
        assert_close(m[0].delta_liquidity, 0.944_116_273_055_017_9, 1e-12);
        assert_close(m[0].mm_share, 0.161, 1e-12);
        assert_close(m[0].inefficiency, 0.736_029_068_263_754_5, 1e-12);
        assert_close(m[1].delta, 0.8, 1e-12);
        assert_close(m[1].mm_share, 0.161, 1e-12);
        assert_close(m[2].delta, 1.2, 1e-12);
    }

    #[test]
    fn extended_mode_transaction_probability() {
        let model = JointValueModel::two_security(0.9).unwrap();
        let delta = 0.4;
        let pi = 0.75;
        let gamma = 1.0 - (1.0 - delta) * pi; // paper's variant
        let secs: Vec<_> = (0..2)
            .map(|i| MarketSecurity {
                index: i,
                p: 50.0,
                r: 1.0,
                informed: delta,
                participation: pi,
                pricing_gamma: gamma,
            })
            .collect();
        let m = exact_metrics_single(&model, &secs, Mode::Extended, true).unwrap();
        for row in &m {
            assert_close(row.p_transact, delta + (1.0 - delta) * pi, 1e-12);
        }
        let dist = exact_state_distribution(&model, &secs, Mode::Extended).unwrap();
        assert_eq!(dist.len(), 9);
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert_close(total, 1.0, 1e-12);
    }

    #[test]
    fn capacity_is_enforced() {
        let model = JointValueModel::from_table(vec![1.0 / 512.0; 512]).unwrap();
        let secs = base_securities(&vec![0.5; 9], 0.0, 1.0);
        assert!(matches!(
            exact_metrics_single(&model, &secs, Mode::Base, true),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn invalid_model_is_rejected() {
        let model = JointValueModel::from_table(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let secs = base_securities(&[0.5, 0.5], 0.0, 1.0);
        assert!(exact_metrics_single(&model, &secs, Mode::Base, true).is_err());
    }
}
