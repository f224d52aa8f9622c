//! Pointwise structural inequalities satisfied by every admissible `a`.
//!
//! Where the classical statements only assert the existence of a constant
//! depending on the indices, the checks below use explicit constants that
//! follow from `b(τ)/b(t) ≷ (τ/t)^{1+i_a}, (τ/t)^{1+s_a}` for `τ ≤ t`:
//!
//! | inequality                     | constant used      |
//! |--------------------------------|--------------------|
//! | `B̃(b(t)) ≤ C B(t)`            | `1 + s_a`          |
//! | `t b(t) ≤ C B(t)`              | `2 + s_a`          |
//! | `t b(t)² ≤ C F(t)`             | `3 + 2 s_a`        |
//! | `C₁ H(t) ≤ b(t)² ≤ C₂ H(t)`    | `2+2i_a`, `2+2s_a` |
//! | `B(2t) ≤ C B(t)`               | `2^{2+s_a}`        |
//!
//! Each outcome also carries the measured ratio so sweeps can report the
//! empirical constant.

use super::{
    euclidean, regularize, DerivedFunctions, InequalityCheck, Monotonicity, NonlinearitySpec,
    Result,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyOutcome {
    pub property: &'static str,
    pub check: InequalityCheck,
    /// The empirical constant (e.g. `t b(t) / B(t)`), when meaningful.
    pub ratio: f64,
}

impl PropertyOutcome {
    fn new(property: &'static str, check: InequalityCheck, ratio: f64) -> Self {
        Self { property, check, ratio }
    }
}

/// `a(1) min{t^{i_a}, t^{s_a}} ≤ a(t) ≤ a(1) max{t^{i_a}, t^{s_a}}`.
pub fn power_envelope(spec: &NonlinearitySpec, t: f64) -> [PropertyOutcome; 2] {
    let a1 = spec.a(1.0);
    let (lo, hi) = (t.powf(spec.i_a()), t.powf(spec.s_a()));
    let at = spec.a(t);
    [
        PropertyOutcome::new("abis-i-lower", InequalityCheck::at_least(at, a1 * lo.min(hi)), at / a1),
        PropertyOutcome::new("abis-i-upper", InequalityCheck::at_most(at, a1 * lo.max(hi)), at / a1),
    ]
}

/// `B̃(b(t)) ≤ (1+s_a) B(t)`, with `B̃` evaluated as `∫₀^{b(t)} b⁻¹`.
pub fn conjugate_bound(d: &DerivedFunctions, t: f64) -> Result<PropertyOutcome> {
    let conj = d.young_conjugate(d.b(t))?;
    let big_b = d.big_b(t)?;
    let c = 1.0 + d.spec().s_a();
    Ok(PropertyOutcome::new(
        "abis-iv",
        InequalityCheck::at_most(conj, c * big_b),
        conj / big_b,
    ))
}

/// `B(t) ≤ t b(t) ≤ (2+s_a) B(t)`.
pub fn b_growth_bounds(d: &DerivedFunctions, t: f64) -> Result<[PropertyOutcome; 2]> {
    let big_b = d.big_b(t)?;
    let tb = t * d.b(t);
    let c = 2.0 + d.spec().s_a();
    Ok([
        PropertyOutcome::new("abis-vi-lower", InequalityCheck::at_most(big_b, tb), tb / big_b),
        PropertyOutcome::new("abis-vi-upper", InequalityCheck::at_most(tb, c * big_b), tb / big_b),
    ])
}

/// `F(t) ≤ t b(t)² ≤ (3+2s_a) F(t)`.
pub fn f_bounds(d: &DerivedFunctions, t: f64) -> Result<[PropertyOutcome; 2]> {
    let f = d.f(t)?;
    let b = d.b(t);
    let tb2 = t * b * b;
    let c = 3.0 + 2.0 * d.spec().s_a();
    Ok([
        PropertyOutcome::new("abis-vii-lower", InequalityCheck::at_most(f, tb2), tb2 / f),
        PropertyOutcome::new("abis-vii-upper", InequalityCheck::at_most(tb2, c * f), tb2 / f),
    ])
}

/// `(2+2i_a) H(t) ≤ b(t)² ≤ (2+2s_a) H(t)`.
pub fn h_bounds(d: &DerivedFunctions, t: f64) -> Result<[PropertyOutcome; 2]> {
    let h = d.h(t)?;
    let b = d.b(t);
    let b2 = b * b;
    let (c1, c2) = (2.0 + 2.0 * d.spec().i_a(), 2.0 + 2.0 * d.spec().s_a());
    Ok([
        PropertyOutcome::new("abis-viii-lower", InequalityCheck::at_least(b2, c1 * h), b2 / h),
        PropertyOutcome::new("abis-viii-upper", InequalityCheck::at_most(b2, c2 * h), b2 / h),
    ])
}

/// `s ≤ B⁻¹(s) B̃⁻¹(s) ≤ 2s`.
pub fn young_product_bounds(d: &DerivedFunctions, s: f64) -> Result<[PropertyOutcome; 2]> {
    let product = d.big_b_inverse(s)? * d.young_conjugate_inverse(s)?;
    Ok([
        PropertyOutcome::new("youngprop-lower", InequalityCheck::at_least(product, s), product / s),
        PropertyOutcome::new("youngprop-upper", InequalityCheck::at_most(product, 2.0 * s), product / s),
    ])
}

/// `B(2t) ≤ 2^{2+s_a} B(t)`.
pub fn delta2_bound(d: &DerivedFunctions, t: f64) -> Result<PropertyOutcome> {
    let (b1, b2) = (d.big_b(t)?, d.big_b(2.0 * t)?);
    let c = 2f64.powf(2.0 + d.spec().s_a());
    Ok(PropertyOutcome::new("delta2", InequalityCheck::at_most(b2, c * b1), b2 / b1))
}

/// Quadratic-form bounds of the flux Jacobian plus agreement with a
/// central finite difference of the flux along `η`.
pub fn elliptic_form_bounds(spec: &NonlinearitySpec, xi: &[f64], eta: &[f64]) -> Result<[PropertyOutcome; 3]> {
    let form = spec.flux_jacobian_form(xi, eta)?;
    let a = spec.a(euclidean(xi));
    let eta2: f64 = eta.iter().map(|x| x * x).sum();
    let lower = (1.0 + spec.i_a().min(0.0)) * a * eta2;
    let upper = (1.0 + spec.s_a().max(0.0)) * a * eta2;

    let h = 1e-6 * euclidean(xi) / euclidean(eta);
    let shifted = |sign: f64| -> Vec<f64> {
        let p: Vec<f64> = xi.iter().zip(eta).map(|(x, y)| x + sign * h * y).collect();
        spec.flux(&p)
    };
    let (plus, minus) = (shifted(1.0), shifted(-1.0));
    let fd: f64 = (0..xi.len())
        .map(|k| (plus[k] - minus[k]) / (2.0 * h) * eta[k])
        .sum();
    let rel = (fd - form).abs() / form.abs().max(f64::MIN_POSITIVE);
    Ok([
        PropertyOutcome::new("elliptic-lower", InequalityCheck::at_least(form, lower), form / (a * eta2)),
        PropertyOutcome::new("elliptic-upper", InequalityCheck::at_most(form, upper), form / (a * eta2)),
        PropertyOutcome::new(
            "elliptic-fd",
            InequalityCheck { lhs: rel, rhs: 1e-6, holds: rel <= 1e-6 },
            rel,
        ),
    ])
}

/// `ε ≤ a_ε(t) ≤ 1/ε`, `min{i_a,0} ≤ t a_ε'/a_ε ≤ max{s_a,0}`, and matching
/// monotonicity, at one sample point.
pub fn regularization_bounds(spec: &NonlinearitySpec, eps: f64, t: f64) -> Result<[PropertyOutcome; 5]> {
    let r = regularize(spec, eps)?;
    let m = r.spec();
    let a = m.a(t);
    let ratio = t * m.a_prime(t) / a;
    let sign_ok = match spec.monotone() {
        Monotonicity::NonDecreasing => m.a_prime(t) >= 0.0,
        Monotonicity::NonIncreasing => m.a_prime(t) <= 0.0,
    };
    Ok([
        PropertyOutcome::new("abound-lower", InequalityCheck::at_least(a, eps), a),
        PropertyOutcome::new("abound-upper", InequalityCheck::at_most(a, 1.0 / eps), a),
        PropertyOutcome::new("indici-lower", InequalityCheck::at_least(ratio, spec.i_a().min(0.0)), ratio),
        PropertyOutcome::new("indici-upper", InequalityCheck::at_most(ratio, spec.s_a().max(0.0)), ratio),
        PropertyOutcome::new(
            "approx-monotone",
            InequalityCheck { lhs: m.a_prime(t), rhs: 0.0, holds: sign_ok },
            0.0,
        ),
    ])
}

/// `max_{t ∈ [0, M]} |b_ε(t) − b(t)|` over a uniform grid.
pub fn regularization_deviation(spec: &NonlinearitySpec, eps: f64, m: f64, grid: usize) -> Result<f64> {
    let r = regularize(spec, eps)?;
    Ok((0..=grid)
        .map(|k| m * k as f64 / grid as f64)
        .map(|t| (r.b_eps(t) - spec.b(t)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::nonlinearity::{LogPower, ShiftedPower};

    fn specs() -> Vec<NonlinearitySpec> {
        vec![
            NonlinearitySpec::power(1.3).unwrap(),
            NonlinearitySpec::power(2.0).unwrap(),
            NonlinearitySpec::power(4.5).unwrap(),
            NonlinearitySpec::from_model(Arc::new(ShiftedPower::new(1.6, 0.3).unwrap()), "sp").unwrap(),
            NonlinearitySpec::from_model(Arc::new(LogPower::new(3.0).unwrap()), "lp").unwrap(),
        ]
    }

    #[test]
    fn power_law_constants_are_tight() {
        // for t^{p-2}: t b / B = p = 2 + s_a exactly
        let d = NonlinearitySpec::power(3.5).unwrap().derived();
        let [_, upper] = b_growth_bounds(&d, 2.7).unwrap();
        assert!((upper.ratio - 3.5).abs() < 1e-12);
        assert!(upper.check.holds);
        let iv = conjugate_bound(&d, 2.7).unwrap();
        assert!((iv.ratio - 2.5).abs() < 1e-9, "{}", iv.ratio);
    }

    #[test]
    fn structural_bounds_hold_on_grid() {
        for spec in specs() {
            let d = spec.derived();
            for t in [1e-4, 0.03, 0.5, 1.0, 4.0, 300.0] {
                for o in power_envelope(&spec, t) {
                    assert!(o.check.holds, "{spec:?} {o:?}");
                }
                let mut all = vec![conjugate_bound(&d, t).unwrap(), delta2_bound(&d, t).unwrap()];
                all.extend(b_growth_bounds(&d, t).unwrap());
                all.extend(f_bounds(&d, t).unwrap());
                all.extend(h_bounds(&d, t).unwrap());
                all.extend(young_product_bounds(&d, t).unwrap());
                for o in all {
                    assert!(o.check.holds, "{spec:?} t={t} {o:?}");
                }
            }
        }
    }

    #[test]
    fn regularization_deviation_shrinks() {
        for p in [1.5, 3.0] {
            let s = NonlinearitySpec::power(p).unwrap();
            let devs: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&e| regularization_deviation(&s, e, 2.0, 400).unwrap())
                .collect();
            assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
        }
    }
}
