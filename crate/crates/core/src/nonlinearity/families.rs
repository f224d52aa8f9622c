use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use super::{IndexBounds, Monotonicity, Nonlinearity, NonlinearityError, Primitive, Result};

/// `a(t) = t^{p-2}`: the p-Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    p: f64,
}

impl Power {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NonlinearityError::Domain(format!("power family needs p > 1, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Nonlinearity for Power {
    fn family(&self) -> &str {
        "power"
    }

    fn a(&self, t: f64) -> f64 {
        t.powf(self.p - 2.0)
    }

    fn a_prime(&self, t: f64) -> f64 {
        (self.p - 2.0) * t.powf(self.p - 3.0)
    }

    fn a_prime_over_t(&self, t: f64) -> f64 {
        (self.p - 2.0) * t.powf(self.p - 4.0)
    }

    fn analytic_indices(&self) -> Option<IndexBounds> {
        Some(IndexBounds {
            lower: self.p - 2.0,
            upper: self.p - 2.0,
        })
    }

    fn monotonicity(&self) -> Option<Monotonicity> {
        Some(if self.p >= 2.0 {
            Monotonicity::NonDecreasing
        } else {
            Monotonicity::NonIncreasing
        })
    }

    fn primitive(&self, kind: Primitive, t: f64) -> Option<f64> {
        let p = self.p;
        Some(match kind {
            Primitive::B => t.powf(p) / p,
            Primitive::H => t.powf(2.0 * p - 2.0) / (2.0 * p - 2.0),
            Primitive::F => t.powf(2.0 * p - 1.0) / (2.0 * p - 1.0),
        })
    }

    fn power_exponent(&self) -> Option<f64> {
        Some(self.p)
    }
}

/// `a(t) = (δ + t²)^{(p-2)/2}`, the non-degenerate p-Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedPower {
    p: f64,
    shift: f64,
}

impl ShiftedPower {
    pub fn new(p: f64, shift: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NonlinearityError::Domain(format!("shifted power needs p > 1, got {p}")));
        }
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(NonlinearityError::Domain(format!(
                "shifted power needs shift > 0, got {shift}"
            )));
        }
        Ok(Self { p, shift })
    }
}

impl Nonlinearity for ShiftedPower {
    fn family(&self) -> &str {
        "shifted-power"
    }

    fn a(&self, t: f64) -> f64 {
        (self.shift + t * t).powf(0.5 * (self.p - 2.0))
    }

    fn a_prime(&self, t: f64) -> f64 {
        t * self.a_prime_over_t(t)
    }

    fn a_prime_over_t(&self, t: f64) -> f64 {
        (self.p - 2.0) * (self.shift + t * t).powf(0.5 * (self.p - 4.0))
    }

    fn analytic_indices(&self) -> Option<IndexBounds> {
        let q = self.p - 2.0;
        Some(IndexBounds {
            lower: q.min(0.0),
            upper: q.max(0.0),
        })
    }

    fn monotonicity(&self) -> Option<Monotonicity> {
        Some(if self.p >= 2.0 {
            Monotonicity::NonDecreasing
        } else {
            Monotonicity::NonIncreasing
        })
    }
}

/// `a(t) = t^{p-2} ln(e + t)`. No closed-form indices; they are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPower {
    p: f64,
}

impl LogPower {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NonlinearityError::Domain(format!("log-power needs p > 1, got {p}")));
        }
        Ok(Self { p })
    }
}

impl Nonlinearity for LogPower {
    fn family(&self) -> &str {
        "log-power"
    }

    fn a(&self, t: f64) -> f64 {
        t.powf(self.p - 2.0) * (E + t).ln()
    }

    fn a_prime(&self, t: f64) -> f64 {
        let l = (E + t).ln();
        (self.p - 2.0) * t.powf(self.p - 3.0) * l + t.powf(self.p - 2.0) / (E + t)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied coefficient given by closures for `a` and `a'`.
#[derive(Clone)]
pub struct CustomModel {
    name: String,
    a: ScalarFn,
    a_prime: ScalarFn,
}

impl CustomModel {
    pub fn new(
        name: impl Into<String>,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            a: Arc::new(a),
            a_prime: Arc::new(a_prime),
        }
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel").field("name", &self.name).finish()
    }
}

impl Nonlinearity for CustomModel {
    fn family(&self) -> &str {
        &self.name
    }

    fn a(&self, t: f64) -> f64 {
        (self.a)(t)
    }

    fn a_prime(&self, t: f64) -> f64 {
        (self.a_prime)(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivative(model: &dyn Nonlinearity) {
        for t in [1e-3, 0.1, 0.9, 2.0, 35.0] {
            let h = 1e-6 * t;
            let fd = (model.a(t + h) - model.a(t - h)) / (2.0 * h);
            let an = model.a_prime(t);
            assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{model:?} t={t}: {fd} vs {an}");
            assert!((model.a_prime_over_t(t) - an / t).abs() <= 1e-9 * (1.0 + (an / t).abs()));
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        check_derivative(&Power::new(1.5).unwrap());
        check_derivative(&Power::new(3.7).unwrap());
        check_derivative(&ShiftedPower::new(1.3, 0.5).unwrap());
        check_derivative(&ShiftedPower::new(4.0, 2.0).unwrap());
        check_derivative(&LogPower::new(2.5).unwrap());
        check_derivative(&LogPower::new(1.2).unwrap());
    }

    #[test]
    fn shifted_power_is_bounded_at_origin() {
        let m = ShiftedPower::new(1.5, 0.25).unwrap();
        assert!((m.a(0.0) - 0.25f64.powf(-0.25)).abs() < 1e-15);
        assert!(m.a_prime_over_t(0.0).is_finite());
    }

    #[test]
    fn custom_model_uses_closures() {
        let m = CustomModel::new("cubic", |t| 1.0 + t * t, |t| 2.0 * t);
        assert_eq!(m.family(), "cubic");
        assert_eq!(m.a(2.0), 5.0);
        assert_eq!(m.a_prime(2.0), 4.0);
        assert_eq!(m.a_prime_over_t(2.0), 2.0);
    }
}
