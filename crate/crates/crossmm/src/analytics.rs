//! Closed-form two-security analytics: trader-conditional spreads, the
//! market maker's volume share, price inefficiency, and the extended model's
//! participation equilibrium.
//!
//! All formulas treat correlation through `(2 phi - 1)^2`, so both positively
//! and negatively correlated values are covered; only [`mm_volume_share`]
//! needs the sign handled (via `|2 phi - 1|`, since the widest-spread state
//! pair flips to the anti-aligned orders when phi < 1/2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_gamma, ExtendedSecurityParams, JointValueModel};

fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::domain(format!("phi must lie in [0, 1], got {phi}")));
    }
    Ok(())
}

fn check_spread_inputs(gamma1: f64, gamma2: f64, phi: f64, r1: f64) -> Result<()> {
    check_gamma(gamma1).map_err(Error::Domain)?;
    check_gamma(gamma2).map_err(Error::Domain)?;
    check_phi(phi)?;
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::domain(format!("r must be > 0, got {r1}")));
    }
    Ok(())
}

/// Expected buy-minus-sell price for an informed investor in security 1:
/// `2 gamma1 r1 { 1/gamma1 - (1/gamma1 - 1)(1 - K) / (1 - gamma1^2 K) }`
/// with `K = (2 phi - 1)^2 gamma2^2`.
pub fn informed_spread(gamma1: f64, gamma2: f64, phi: f64, r1: f64) -> Result<f64> {
    check_spread_inputs(gamma1, gamma2, phi, r1)?;
    let k = (2.0 * phi - 1.0).powi(2) * gamma2 * gamma2;
    let frac = (1.0 / gamma1 - 1.0) * (1.0 - k) / (1.0 - gamma1 * gamma1 * k);
    Ok(2.0 * gamma1 * r1 * (1.0 / gamma1 - frac))
}

/// Expected buy-minus-sell price for a liquidity trader in security 1:
/// `2 gamma1 r1 (1 - K) / (1 - gamma1^2 K)`.
pub fn liquidity_spread(gamma1: f64, gamma2: f64, phi: f64, r1: f64) -> Result<f64> {
    check_spread_inputs(gamma1, gamma2, phi, r1)?;
    let k = (2.0 * phi - 1.0).powi(2) * gamma2 * gamma2;
    Ok(2.0 * gamma1 * r1 * (1.0 - k) / (1.0 - gamma1 * gamma1 * k))
}

/// Unconditional spread `2 gamma1 r1`; unchanged by the AMM's presence.
pub fn unconditional_spread(gamma1: f64, r1: f64) -> Result<f64> {
    check_gamma(gamma1).map_err(Error::Domain)?;
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::domain(format!("r must be > 0, got {r1}")));
    }
    Ok(2.0 * gamma1 * r1)
}

/// Trader-conditional and unconditional spreads for one security.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpreadReport {
    pub informed: f64,
    pub liquidity: f64,
    pub unconditional: f64,
}

pub fn spread_report(gamma1: f64, gamma2: f64, phi: f64, r1: f64) -> Result<SpreadReport> {
    Ok(SpreadReport {
        informed: informed_spread(gamma1, gamma2, phi, r1)?,
        liquidity: liquidity_spread(gamma1, gamma2, phi, r1)?,
        unconditional: unconditional_spread(gamma1, r1)?,
    })
}

/// Fraction of security 1's order flow executed by its market maker:
/// `(1 + |2 phi - 1| gamma1 gamma2) / 4`, i.e. half the probability of the
/// widest-spread states. Always below 1/2.
///
/// At phi = 1/2 every state ties at the quotes, every order is split, and
/// the share is exactly 1/2; that regime has no closed form here and is
/// reported as [`Error::SplitRegime`].
pub fn mm_volume_share(gamma1: f64, gamma2: f64, phi: f64) -> Result<f64> {
    check_gamma(gamma1).map_err(Error::Domain)?;
    check_gamma(gamma2).map_err(Error::Domain)?;
    check_phi(phi)?;
    if phi == 0.5 {
        return Err(Error::SplitRegime);
    }
    Ok((1.0 + (2.0 * phi - 1.0).abs() * gamma1 * gamma2) / 4.0)
}

/// Expected gap between security 1's value and its transaction price with
/// the AMM present:
/// `(1 - gamma1)[1 + gamma1 (1 - K)/(1 - gamma1^2 K)] r1`, equivalently
/// `r1 - gamma1 * informed_spread / 2`.
pub fn inefficiency_with_amm(gamma1: f64, gamma2: f64, phi: f64, r1: f64) -> Result<f64> {
    check_spread_inputs(gamma1, gamma2, phi, r1)?;
    let k = (2.0 * phi - 1.0).powi(2) * gamma2 * gamma2;
    Ok((1.0 - gamma1) * (1.0 + gamma1 * (1.0 - k) / (1.0 - gamma1 * gamma1 * k)) * r1)
}

/// Expected value-price gap without the AMM: `(1 - gamma1)(1 + gamma1) r1`.
pub fn inefficiency_without_amm(gamma1: f64, r1: f64) -> Result<f64> {
    check_gamma(gamma1).map_err(Error::Domain)?;
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::domain(format!("r must be > 0, got {r1}")));
    }
    Ok((1.0 - gamma1) * (1.0 + gamma1) * r1)
}

/// How the effective informed order fraction is derived from the pool
/// fraction `delta` and participation `pi`.
///
/// `Paper` uses `gamma = 1 - (1 - delta) pi`; `Renormalized` uses the
/// informed share among realized orders, `delta / (delta + (1 - delta) pi)`.
/// Both decrease in pi and coincide at pi = 1; they differ in between, and
/// the extended-model propositions hold under either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaVariant {
    #[default]
    Paper,
    Renormalized,
}

impl GammaVariant {
    pub fn effective_gamma(self, delta: f64, pi: f64) -> f64 {
        match self {
            GammaVariant::Paper => 1.0 - (1.0 - delta) * pi,
            GammaVariant::Renormalized => delta / (delta + (1.0 - delta) * pi),
        }
    }
}

/// Options for [`solve_equilibrium`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumOptions {
    pub with_amm: bool,
    pub variant: GammaVariant,
    /// Damping weight on the new iterate.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl EquilibriumOptions {
    pub fn new(with_amm: bool, variant: GammaVariant) -> Self {
        Self { with_amm, variant, damping: 0.5, tolerance: 1e-12, max_iterations: 10_000 }
    }
}

/// Fixed point of the participation map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumState {
    /// Participation probability per security.
    pub pi: Vec<f64>,
    /// Effective informed fraction per security (chosen variant).
    pub gamma: Vec<f64>,
    /// Transaction probability per security, `delta + (1 - delta) pi`.
    pub transaction_probability: Vec<f64>,
    pub converged: bool,
    pub iterations: u32,
}

/// Solves `pi_i = curve_i(cost_i(gamma(pi)))` by damped iteration, where the
/// liquidity trader's expected cost is half the liquidity spread with the
/// AMM present and half the unconditional spread without, evaluated at the
/// candidate effective gammas.
///
/// Defined for two-security models (the closed-form costs exist only there).
/// Non-convergence is reported through the `converged` flag, not an error.
pub fn solve_equilibrium(
    params: &[ExtendedSecurityParams],
    model: &JointValueModel,
    opts: EquilibriumOptions,
) -> Result<EquilibriumState> {
    if model.n() != 2 || params.len() != 2 {
        return Err(Error::domain(format!(
            "equilibrium solver requires a two-security model, got n = {}",
            model.n()
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::domain(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    for sp in params {
        sp.participation.validate()?;
    }
    let phi = model.conditional_plus(0, 1);

    let mut pi = [0.5f64; 2];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let gamma = [
            opts.variant.effective_gamma(params[0].delta, pi[0]),
            opts.variant.effective_gamma(params[1].delta, pi[1]),
        ];
        let mut next = [0.0f64; 2];
        for i in 0..2 {
            // gamma can reach 1 exactly when pi = 0; the cost limits are finite
            let cost = if opts.with_amm {
                let k = (2.0 * phi - 1.0).powi(2) * gamma[1 - i] * gamma[1 - i];
                params[i].r * gamma[i] * (1.0 - k) / (1.0 - gamma[i] * gamma[i] * k)
            } else {
                gamma[i] * params[i].r
            };
            if !cost.is_finite() {
                return Err(Error::domain(format!(
                    "equilibrium cost for security {i} is not finite (gamma = {}, phi = {phi})",
                    gamma[i]
                )));
            }
            next[i] = (1.0 - opts.damping) * pi[i]
                + opts.damping * params[i].participation.participation(cost)?;
        }
        let step = (next[0] - pi[0]).abs().max((next[1] - pi[1]).abs());
        pi = next;
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }

    let gamma: Vec<f64> = (0..2)
        .map(|i| opts.variant.effective_gamma(params[i].delta, pi[i]))
        .collect();
    let transaction_probability: Vec<f64> = (0..2)
        .map(|i| params[i].delta + (1.0 - params[i].delta) * pi[i])
        .collect();
    Ok(EquilibriumState {
        pi: pi.to_vec(),
        gamma,
        transaction_probability,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParticipationCurve;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (diff {})", (a - b).abs());
    }

    #[test]
    fn worked_example_spreads() {
        assert_close(informed_spread(0.5, 0.5, 0.9, 1.0).unwrap(), 1.125, 1e-12);
        assert_close(liquidity_spread(0.5, 0.5, 0.9, 1.0).unwrap(), 0.875, 1e-12);
        assert_close(unconditional_spread(0.5, 1.0).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn independence_removes_discrimination() {
        for &(g1, g2, r) in &[(0.3, 0.7, 2.0), (0.5, 0.5, 1.0), (0.9, 0.1, 0.5)] {
            assert_close(informed_spread(g1, g2, 0.5, r).unwrap(), 2.0 * g1 * r, 1e-12);
            assert_close(liquidity_spread(g1, g2, 0.5, r).unwrap(), 2.0 * g1 * r, 1e-12);
        }
    }

    #[test]
    fn frozen_asymmetric_point() {
        // exact-fraction enumeration of the generative process:
        // gamma = (0.3, 0.7), phi = 0.8, r1 = 2
        assert_close(
            informed_spread(0.3, 0.7, 0.8, 2.0).unwrap(),
            1.656_718_055_854_750_1,
            1e-12,
        );
        assert_close(
            liquidity_spread(0.3, 0.7, 0.8, 2.0).unwrap(),
            1.004_263_690_347_964_3,
            1e-12,
        );
        assert_close(
            inefficiency_with_amm(0.3, 0.7, 0.8, 2.0).unwrap(),
            1.751_492_291_621_787_4,
            1e-12,
        );
        assert_close(mm_volume_share(0.3, 0.7, 0.8).unwrap(), 0.2815, 1e-12);
        assert_close(unconditional_spread(0.3, 2.0).unwrap(), 1.2, 1e-12);
    }

    #[test]
    fn liquidity_spread_vanishes_when_the_cross_signal_is_sharp() {
        let d = liquidity_spread(0.5, 0.999_999, 1.0, 1.0).unwrap();
        assert!(d < 1e-5, "{d}");
    }

    #[test]
    fn volume_share_cases() {
        assert_close(mm_volume_share(0.5, 0.5, 0.9).unwrap(), 0.30, 1e-12);
        assert_close(mm_volume_share(0.5, 0.5, 1.0).unwrap(), 0.3125, 1e-12);
        assert_close(mm_volume_share(0.5, 0.5, 0.1).unwrap(), 0.30, 1e-12);
        assert!(matches!(mm_volume_share(0.5, 0.5, 0.5), Err(Error::SplitRegime)));
    }

    #[test]
    fn inefficiency_cases() {
        assert_close(inefficiency_with_amm(0.5, 0.5, 0.9, 1.0).unwrap(), 0.71875, 1e-12);
        assert_close(inefficiency_without_amm(0.5, 1.0).unwrap(), 0.75, 1e-12);
        assert_close(inefficiency_without_amm(0.3, 2.0).unwrap(), 1.82, 1e-12);
        assert!(inefficiency_without_amm(0.999_999, 1.0).unwrap() < 1e-5);
        // independence: with and without coincide
        let with = inefficiency_with_amm(0.4, 0.6, 0.5, 1.5).unwrap();
        assert_close(with, inefficiency_without_amm(0.4, 1.5).unwrap(), 1e-12);
    }

    #[test]
    fn inefficiency_equals_spread_identity() {
        for &(g1, g2, phi, r) in
            &[(0.5, 0.5, 0.9, 1.0), (0.3, 0.7, 0.8, 2.0), (0.9, 0.2, 0.15, 0.5)]
        {
            let lhs = inefficiency_with_amm(g1, g2, phi, r).unwrap();
            let rhs = r - g1 * informed_spread(g1, g2, phi, r).unwrap() / 2.0;
            assert_close(lhs, rhs, 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(informed_spread(0.0, 0.5, 0.9, 1.0).is_err());
        assert!(informed_spread(0.5, 1.0, 0.9, 1.0).is_err());
        assert!(informed_spread(0.5, 0.5, 1.1, 1.0).is_err());
        assert!(informed_spread(0.5, 0.5, 0.9, 0.0).is_err());
        assert!(unconditional_spread(0.5, -1.0).is_err());
    }

    proptest! {
        // spread ordering and the mixture identity across the parameter box
        #[test]
        fn spread_ordering_and_mixture(
            g1 in 0.02f64..0.98,
            g2 in 0.02f64..0.98,
            phi in 0.0f64..1.0,
            r in 0.1f64..10.0,
        ) {
            prop_assume!((phi - 0.5).abs() > 1e-3);
            let rep = spread_report(g1, g2, phi, r).unwrap();
            prop_assert!(rep.informed > rep.unconditional);
            prop_assert!(rep.unconditional > rep.liquidity);
            let mixture = g1 * rep.informed + (1.0 - g1) * rep.liquidity;
            prop_assert!((mixture - rep.unconditional).abs() < 1e-12);
        }

        #[test]
        fn efficiency_strictly_improves(
            g1 in 0.02f64..0.98,
            g2 in 0.02f64..0.98,
            phi in 0.0f64..1.0,
            r in 0.1f64..10.0,
        ) {
            prop_assume!((phi - 0.5).abs() > 1e-3);
            let with = inefficiency_with_amm(g1, g2, phi, r).unwrap();
            let without = inefficiency_without_amm(g1, r).unwrap();
            prop_assert!(with < without);
        }

        #[test]
        fn share_is_a_strict_minority(
            g1 in 0.02f64..0.98,
            g2 in 0.02f64..0.98,
            phi in 0.0f64..1.0,
        ) {
            prop_assume!(phi != 0.5);
            let share = mm_volume_share(g1, g2, phi).unwrap();
            prop_assert!(share < 0.5);
            prop_assert!(share >= 0.25);
        }
    }

    fn extended(delta: f64, curve: ParticipationCurve) -> Vec<ExtendedSecurityParams> {
        (0..2)
            .map(|i| ExtendedSecurityParams::new(i, 50.0, 1.0, delta, curve).unwrap())
            .collect()
    }

    /// Bisection on the decoupled one-security map; valid whenever the cost
    /// of security i does not depend on the other security's participation
    /// (always true without the AMM, and with it at phi = 1/2).
    fn bisect_pi(delta: f64, curve: ParticipationCurve, r: f64, variant: GammaVariant) -> f64 {
        let h = |pi: f64| {
            let gamma = variant.effective_gamma(delta, pi);
            pi - curve.participation(gamma * r).unwrap()
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_curve_fixed_point_matches_bisection() {
        // pi = 1 - 0.5 (1 - 0.5 pi)  =>  pi* = 2/3, gamma* = 2/3, P = 5/6
        let curve = ParticipationCurve::Linear { intercept: 1.0, slope: 0.5 };
        let params = extended(0.5, curve);
        let model = JointValueModel::two_security(0.5).unwrap();
        let opts = EquilibriumOptions::new(false, GammaVariant::Paper);
        let eq = solve_equilibrium(&params, &model, opts).unwrap();
        assert!(eq.converged);
        assert!(eq.iterations < 10_000);
        let oracle = bisect_pi(0.5, curve, 1.0, GammaVariant::Paper);
        for i in 0..2 {
            assert_close(eq.pi[i], 2.0 / 3.0, 1e-12);
            assert_close(eq.pi[i], oracle, 1e-12);
            assert_close(eq.gamma[i], 2.0 / 3.0, 1e-12);
            assert_close(eq.transaction_probability[i], 5.0 / 6.0, 1e-12);
        }
    }

    #[test]
    fn constant_curve_fixes_pi_immediately() {
        let curve = ParticipationCurve::Constant { pi: 0.42 };
        let params = extended(0.3, curve);
        let model = JointValueModel::two_security(0.9).unwrap();
        for variant in [GammaVariant::Paper, GammaVariant::Renormalized] {
            for with_amm in [true, false] {
                let eq = solve_equilibrium(
                    &params,
                    &model,
                    EquilibriumOptions::new(with_amm, variant),
                )
                .unwrap();
                assert!(eq.converged);
                assert_close(eq.pi[0], 0.42, 1e-12);
                assert_close(eq.pi[1], 0.42, 1e-12);
            }
        }
    }

    #[test]
    fn frozen_two_security_equilibria() {
        // frozen from an independent damped-iteration/bisection computation:
        // delta = (0.4, 0.6), curves 0.95 - 0.3c and 0.9 - 0.5c, phi = 0.8
        let params = vec![
            ExtendedSecurityParams::new(
                0,
                50.0,
                1.0,
                0.4,
                ParticipationCurve::Linear { intercept: 0.95, slope: 0.3 },
            )
            .unwrap(),
            ExtendedSecurityParams::new(
                1,
                50.0,
                1.0,
                0.6,
                ParticipationCurve::Linear { intercept: 0.9, slope: 0.5 },
            )
            .unwrap(),
        ];
        let model = JointValueModel::two_security(0.8).unwrap();
        let cases = [
            (GammaVariant::Paper, true, [0.825_724_930_615_935_3, 0.517_898_600_421_242_7]),
            (GammaVariant::Paper, false, [0.792_682_926_829_267_2, 0.5]),
            (GammaVariant::Renormalized, true, [0.838_619_840_142_216_8, 0.545_846_447_898_000_7]),
            (GammaVariant::Renormalized, false, [0.815_018_564_100_525_2, 0.530_662_386_291_806_5]),
        ];
        for (variant, with_amm, expect) in cases {
            let eq = solve_equilibrium(&params, &model, EquilibriumOptions::new(with_amm, variant))
                .unwrap();
            assert!(eq.converged, "{variant:?} with_amm={with_amm}");
            assert_close(eq.pi[0], expect[0], 1e-10);
            assert_close(eq.pi[1], expect[1], 1e-10);
        }
        // the no-AMM security-2 point is exactly solvable by hand:
        // pi = 0.9 - 0.5 (1 - 0.4 pi)  =>  pi = 0.5, gamma = 0.8
        let eq = solve_equilibrium(
            &params,
            &model,
            EquilibriumOptions::new(false, GammaVariant::Paper),
        )
        .unwrap();
        assert_close(eq.pi[1], 0.5, 1e-12);
        assert_close(eq.gamma[1], 0.8, 1e-12);
        assert_close(eq.transaction_probability[1], 0.8, 1e-12);
    }

    #[test]
    fn amm_raises_participation_and_lowers_spreads() {
        let params = vec![
            ExtendedSecurityParams::new(
                0,
                50.0,
                1.0,
                0.4,
                ParticipationCurve::Linear { intercept: 0.95, slope: 0.3 },
            )
            .unwrap(),
            ExtendedSecurityParams::new(
                1,
                50.0,
                1.0,
                0.6,
                ParticipationCurve::Linear { intercept: 0.9, slope: 0.5 },
            )
            .unwrap(),
        ];
        let model = JointValueModel::two_security(0.8).unwrap();
        for variant in [GammaVariant::Paper, GammaVariant::Renormalized] {
            let with = solve_equilibrium(&params, &model, EquilibriumOptions::new(true, variant))
                .unwrap();
            let without =
                solve_equilibrium(&params, &model, EquilibriumOptions::new(false, variant))
                    .unwrap();
            for i in 0..2 {
                assert!(with.transaction_probability[i] > without.transaction_probability[i]);
                assert!(with.gamma[i] < without.gamma[i]);
            }
        }
    }

    #[test]
    fn equilibrium_rejects_non_two_security_models() {
        let chain = JointValueModel::sign_chain(&[0.8, 0.7]).unwrap();
        let curve = ParticipationCurve::Constant { pi: 0.5 };
        let params: Vec<_> = (0..3)
            .map(|i| ExtendedSecurityParams::new(i, 0.0, 1.0, 0.5, curve).unwrap())
            .collect();
        let opts = EquilibriumOptions::new(true, GammaVariant::Paper);
        assert!(solve_equilibrium(&params, &chain, opts).is_err());
    }
}
