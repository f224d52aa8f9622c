use std::sync::Arc;

use super::{
    IndexBounds, IndexSource, Monotonicity, Nonlinearity, NonlinearityError, NonlinearitySpec,
    Result,
};

/// `a_ε(t) = (a(√(ε+t²)) + ε) / (1 + ε a(√(ε+t²)))`.
///
/// Bounded between ε and 1/ε, C¹ on `[0, ∞)`, same monotonicity as `a`.
#[derive(Debug, Clone)]
pub struct RegularizedModel {
    base: Arc<dyn Nonlinearity>,
    eps: f64,
}

impl RegularizedModel {
    pub fn new(base: Arc<dyn Nonlinearity>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(NonlinearityError::Domain(format!(
                "regularisation needs 0 < eps < 1, got {eps}"
            )));
        }
        Ok(Self { base, eps })
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    #[inline]
    fn radius(&self, t: f64) -> f64 {
        (self.eps + t * t).sqrt()
    }
}

impl Nonlinearity for RegularizedModel {
    fn family(&self) -> &str {
        "regularized"
    }

    fn a(&self, t: f64) -> f64 {
        let a = self.base.a(self.radius(t));
        (a + self.eps) / (1.0 + self.eps * a)
    }

    fn a_prime(&self, t: f64) -> f64 {
        t * self.a_prime_over_t(t)
    }

    fn a_prime_over_t(&self, t: f64) -> f64 {
        let r = self.radius(t);
        let a = self.base.a(r);
        let denom = 1.0 + self.eps * a;
        (1.0 - self.eps * self.eps) * self.base.a_prime_over_t(r) / (denom * denom)
    }
}

/// A spec together with its ε-regularisation.
#[derive(Debug, Clone)]
pub struct RegularizedSpec {
    base: NonlinearitySpec,
    epsilon: f64,
    regularized: NonlinearitySpec,
}

impl RegularizedSpec {
    pub fn base(&self) -> &NonlinearitySpec {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The regularised coefficient as a spec in its own right.
    pub fn spec(&self) -> &NonlinearitySpec {
        &self.regularized
    }

    pub fn a_eps(&self, t: f64) -> f64 {
        self.regularized.a(t)
    }

    pub fn b_eps(&self, t: f64) -> f64 {
        self.regularized.b(t)
    }
}

/// Builds `a_ε` with indices `[min{i_a,0}, max{s_a,0}]`.
pub fn regularize(spec: &NonlinearitySpec, epsilon: f64) -> Result<RegularizedSpec> {
    let model = RegularizedModel::new(spec.model().clone(), epsilon)?;
    let indices = IndexBounds {
        lower: spec.i_a().min(0.0),
        upper: spec.s_a().max(0.0),
    };
    let monotone: Monotonicity = spec.monotone();
    let regularized = NonlinearitySpec::with_bounds(
        Arc::new(model),
        indices,
        monotone,
        format!("{} (eps={epsilon:e})", spec.label()),
        IndexSource::Analytic,
    )?;
    Ok(RegularizedSpec {
        base: spec.clone(),
        epsilon,
        regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_is_fixed_point() {
        let s = NonlinearitySpec::power(2.0).unwrap();
        for eps in [0.5, 0.1, 1e-3] {
            let r = regularize(&s, eps).unwrap();
            for t in [0.0, 0.3, 10.0] {
                assert!((r.a_eps(t) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn direct_substitution_at_zero() {
        let s = NonlinearitySpec::power(3.0).unwrap();
        let r = regularize(&s, 0.25).unwrap();
        assert!((r.a_eps(0.0) - 2.0 / 3.0).abs() < 1e-15);
        let v = r.a_eps(10.0);
        assert!((0.25..=4.0).contains(&v));
    }

    #[test]
    fn epsilon_must_lie_in_unit_interval() {
        let s = NonlinearitySpec::power(3.0).unwrap();
        for eps in [0.0, 1.0, -0.1, 2.0] {
            assert!(regularize(&s, eps).is_err());
        }
    }

    #[test]
    fn derivative_formula_matches_difference_quotient() {
        let s = NonlinearitySpec::power(1.5).unwrap();
        let r = regularize(&s, 0.01).unwrap();
        let m = r.spec();
        for t in [0.0, 0.05, 0.7, 3.0] {
            let h = 1e-6;
            let fd = (m.a(t + h) - m.a((t - h).abs())) / (2.0 * h);
            let an = m.a_prime(t);
            assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "t={t}: {fd} vs {an}");
        }
        assert!(m.a_prime_over_t(0.0).is_finite());
    }

    #[test]
    fn keeps_monotonicity_and_widened_indices() {
        let s = NonlinearitySpec::power(1.5).unwrap();
        let r = regularize(&s, 0.1).unwrap();
        assert_eq!(r.spec().monotone(), Monotonicity::NonIncreasing);
        assert_eq!((r.spec().i_a(), r.spec().s_a()), (-0.5, 0.0));
        let s = NonlinearitySpec::power(4.0).unwrap();
        let r = regularize(&s, 0.1).unwrap();
        assert_eq!(r.spec().monotone(), Monotonicity::NonDecreasing);
        assert_eq!((r.spec().i_a(), r.spec().s_a()), (0.0, 2.0));
    }
}
