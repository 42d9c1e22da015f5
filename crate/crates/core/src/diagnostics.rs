//! G-norm energy balance.
//!
//! For any three vectors and any admissible coefficients,
//!
//! ```text
//! <sum alpha_l y_l, sum beta_l y_l> = |(y_{n+1}, y_n)|_G^2 - |(y_n, y_{n-1})|_G^2 + |sum gamma_l y_l|^2
//! ```
//!
//! holds as an algebraic identity, with `G = diag((1+delta)/4, (1-delta)/4)`.
//! The last term is the numerical dissipation; it is zero only for
//! `delta = 0` and `delta = 1`.

use crate::coefficients::{g_weights, CoefficientSet, DlnParameters};
use crate::math::{abs, dot};

/// `((1+delta)/4) |y_hi|^2 + ((1-delta)/4) |y_lo|^2`.
pub fn g_norm_sq(params: &DlnParameters, y_hi: &[f64], y_lo: &[f64]) -> f64 {
    let (w_hi, w_lo) = g_weights(params);
    w_hi * dot(y_hi, y_hi) + w_lo * dot(y_lo, y_lo)
}

/// Both sides of the energy identity for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    pub g_norm_sq_before: f64,
    pub g_norm_sq_after: f64,
    pub dissipation_sq: f64,
    pub lhs: f64,
    /// `lhs - (after - before + dissipation)`.
    pub residual: f64,
}

impl EnergyLedger {
    /// Residual scaled by `1 + |lhs|`.
    pub fn relative_residual(&self) -> f64 {
        abs(self.residual) / (1.0 + abs(self.lhs))
    }
}

pub fn energy_ledger(
    params: &DlnParameters,
    coeffs: &CoefficientSet,
    y_next: &[f64],
    y_curr: &[f64],
    y_prev: &[f64],
) -> EnergyLedger {
    let mut lhs = 0.0;
    let mut dissipation_sq = 0.0;
    for ((&y2, &y1), &y0) in y_next.iter().zip(y_curr).zip(y_prev) {
        let a = params.alpha2 * y2 + params.alpha1 * y1 + params.alpha0 * y0;
        let b = coeffs.beta2 * y2 + coeffs.beta1 * y1 + coeffs.beta0 * y0;
        let g = coeffs.gamma2 * y2 + coeffs.gamma1 * y1 + coeffs.gamma0 * y0;
        lhs += a * b;
        dissipation_sq += g * g;
    }
    let before = g_norm_sq(params, y_curr, y_prev);
    let after = g_norm_sq(params, y_next, y_curr);
    EnergyLedger {
        g_norm_sq_before: before,
        g_norm_sq_after: after,
        dissipation_sq,
        lhs,
        residual: lhs - (after - before + dissipation_sq),
    }
}

/// Relative slack allowed for roundoff in [`monotonicity_check`].
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Checks that `|(y_{n+1}, y_n)|_G^2` never exceeds `|(y_n, y_{n-1})|_G^2`
/// beyond a relative slack of `1e-12`.
///
/// Returns `Ok(())` or the index `n + 1` of the first offending pair.
pub fn monotonicity_check<Y: AsRef<[f64]>>(
    states: &[Y],
    params: &DlnParameters,
) -> Result<(), usize> {
    let mut before: Option<f64> = None;
    for (i, pair) in states.windows(2).enumerate() {
        let now = g_norm_sq(params, pair[1].as_ref(), pair[0].as_ref());
        if let Some(prev) = before {
            if now > prev * (1.0 + MONOTONE_SLACK) {
                return Err(i + 1);
            }
        }
        before = Some(now);
    }
    Ok(())
}

/// Componentwise difference of two trajectories sampled on the same times.
pub fn trajectory_difference<Y: AsRef<[f64]>>(
    a: &[Y],
    b: &[Y],
) -> alloc::vec::Vec<alloc::vec::Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(u, v)| {
            u.as_ref()
                .iter()
                .zip(v.as_ref())
                .map(|(x, y)| x - y)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup(delta: f64, k_n: f64, k_prev: f64) -> (DlnParameters, CoefficientSet) {
        let p = DlnParameters::new(delta).unwrap();
        let c = CoefficientSet::new(&p, &p.window(k_n, k_prev).unwrap());
        (p, c)
    }

    #[test]
    fn g_norm_examples() {
        let p = |d| DlnParameters::new(d).unwrap();
        assert_eq!(g_norm_sq(&p(1.0), &[2.0], &[99.0]), 2.0);
        assert_eq!(g_norm_sq(&p(0.0), &[2.0], &[2.0]), 2.0);
        assert_abs_diff_eq!(
            g_norm_sq(&p(0.5), &[1.0, 0.0], &[0.0, 1.0]),
            0.5,
            epsilon = 1e-16
        );
    }

    #[test]
    fn constant_vectors_balance_trivially() {
        let (p, c) = setup(0.5, 0.3, 0.1);
        let y = [1.7, -0.2];
        let l = energy_ledger(&p, &c, &y, &y, &y);
        assert_abs_diff_eq!(l.lhs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.g_norm_sq_after, l.g_norm_sq_before, epsilon = 1e-15);
        assert_abs_diff_eq!(l.dissipation_sq, 0.0, epsilon = 1e-30);
        assert_abs_diff_eq!(l.residual, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symplectic_members_have_no_dissipation() {
        for delta in [0.0, 1.0] {
            let (p, c) = setup(delta, 0.2, 0.35);
            let l = energy_ledger(
                &p,
                &c,
                &[0.3, 1.1, -2.0],
                &[1.4, -0.7, 0.2],
                &[-0.5, 0.9, 0.8],
            );
            assert_eq!(l.dissipation_sq, 0.0);
            assert!(l.relative_residual() <= 1e-13);
        }
    }

    #[test]
    fn half_delta_balances() {
        let (p, c) = setup(0.5, 1.0, 1.0);
        let l = energy_ledger(
            &p,
            &c,
            &[0.3, 1.1, -2.0],
            &[1.4, -0.7, 0.2],
            &[-0.5, 0.9, 0.8],
        );
        assert!(l.dissipation_sq > 0.0);
        assert!(l.relative_residual() <= 1e-13);
    }

    #[test]
    fn monotonicity_examples() {
        let p = DlnParameters::new(2.0 / 3.0).unwrap();
        let decreasing: Vec<Vec<f64>> = (0..10).map(|i| vec![0.9f64.powi(i)]).collect();
        assert_eq!(monotonicity_check(&decreasing, &p), Ok(()));
        let growing: Vec<Vec<f64>> = (0..10).map(|i| vec![1.1f64.powi(i)]).collect();
        assert_eq!(monotonicity_check(&growing, &p), Err(2));
        let short: Vec<Vec<f64>> = vec![vec![1.0]];
        assert_eq!(monotonicity_check(&short, &p), Ok(()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn triple() -> impl Strategy<Value = [[f64; 3]; 3]> {
            proptest::array::uniform3(proptest::array::uniform3(-10.0f64..10.0))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn identity_holds_for_any_vectors(
                delta in 0.0f64..=1.0,
                eps in -0.99f64..0.99,
                ys in triple(),
            ) {
                let (p, c) = setup(delta, 1.0 + eps, 1.0 - eps);
                let l = energy_ledger(&p, &c, &ys[0], &ys[1], &ys[2]);
                prop_assert!(l.dissipation_sq >= 0.0);
                prop_assert!(l.g_norm_sq_before >= 0.0 && l.g_norm_sq_after >= 0.0);
                // Scale by the size of the terms; vectors here are O(10).
                let scale = 1.0 + l.lhs.abs() + l.g_norm_sq_after + l.g_norm_sq_before;
                prop_assert!(l.residual.abs() <= 1e-13 * scale);
            }
        }
    }
}
