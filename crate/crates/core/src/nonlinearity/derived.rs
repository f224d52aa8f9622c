use crate::quadrature::{
    golden_section_max, integrate_from_zero, invert_increasing, NumericError, QuadratureOptions,
};

use super::{NonlinearityError, NonlinearitySpec, Primitive, Result};

/// Default upper limit for bracketing searches.
pub const DEFAULT_T_MAX: f64 = 1e150;

/// The scalar functions generated by a spec: `b`, `B`, `B̃`, `H`, `F`,
/// `b⁻¹`, and the Sobolev conjugate `B_n`.
///
/// Integrals use closed forms where the family has them and adaptive
/// quadrature otherwise.
#[derive(Debug, Clone)]
pub struct DerivedFunctions {
    spec: NonlinearitySpec,
    quadrature: QuadratureOptions,
    t_max: f64,
}

impl DerivedFunctions {
    pub fn new(spec: NonlinearitySpec) -> Self {
        Self {
            spec,
            quadrature: QuadratureOptions::default(),
            t_max: DEFAULT_T_MAX,
        }
    }

    pub fn with_quadrature(mut self, opts: QuadratureOptions) -> Self {
        self.quadrature = opts;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    fn check_arg(t: f64) -> Result<()> {
        if t >= 0.0 {
            Ok(())
        } else {
            Err(NonlinearityError::Domain(format!("argument must be >= 0, got {t}")))
        }
    }

    pub fn b(&self, t: f64) -> f64 {
        self.spec.b(t)
    }

    /// `B(t) = ∫₀ᵗ b`.
    pub fn big_b(&self, t: f64) -> Result<f64> {
        self.primitive(Primitive::B, t)
    }

    /// `H(t) = ∫₀ᵗ a·b`.
    pub fn h(&self, t: f64) -> Result<f64> {
        self.primitive(Primitive::H, t)
    }

    /// `F(t) = ∫₀ᵗ b²`.
    pub fn f(&self, t: f64) -> Result<f64> {
        self.primitive(Primitive::F, t)
    }

    fn primitive(&self, kind: Primitive, t: f64) -> Result<f64> {
        Self::check_arg(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.spec.model().primitive(kind, t) {
            return Ok(v);
        }
        self.primitive_by_quadrature(kind, t)
    }

    /// Quadrature route for the primitives, ignoring closed forms.
    pub fn primitive_by_quadrature(&self, kind: Primitive, t: f64) -> Result<f64> {
        Self::check_arg(t)?;
        let i = self.spec.i_a();
        let spec = &self.spec;
        let v = match kind {
            Primitive::B => integrate_from_zero(|x| spec.b(x), t, 1.0 + i, &self.quadrature)?,
            Primitive::H => integrate_from_zero(
                |x| spec.a(x) * spec.b(x),
                t,
                1.0 + 2.0 * i,
                &self.quadrature,
            )?,
            Primitive::F => integrate_from_zero(
                |x| {
                    let b = spec.b(x);
                    b * b
                },
                t,
                2.0 + 2.0 * i,
                &self.quadrature,
            )?,
        };
        Ok(v)
    }

    /// `b⁻¹(s)` by bracketing bisection on the strictly increasing `b`.
    pub fn b_inverse(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        invert_increasing(|t| Ok(self.spec.b(t)), s, self.t_max)
    }

    /// `B⁻¹(s)`.
    pub fn big_b_inverse(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        invert_increasing(|t| self.big_b(t), s, self.t_max)
    }

    /// `B̃(s) = ∫₀ˢ b⁻¹`.
    pub fn young_conjugate(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        // b⁻¹(σ) ~ σ^{1/(1+s_a)} near zero.
        let alpha = 1.0 / (1.0 + self.spec.s_a());
        let mut failure = None;
        let v = integrate_from_zero(
            |x| match self.b_inverse(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            s,
            alpha,
            &self.quadrature,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(v?)
    }

    /// `sup_{r ≥ 0} (s r − B(r))` by golden-section search on `[0, 4 b⁻¹(s)]`.
    pub fn young_conjugate_legendre(&self, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        let hi = 4.0 * self.b_inverse(s)?;
        let mut failure = None;
        let (_, best) = golden_section_max(
            |r| match self.big_b(r) {
                Ok(b) => s * r - b,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            0.0,
            hi,
            1e-13,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(best.max(0.0)),
        }
    }

    /// `B̃⁻¹(y)`, using `B̃(b(r)) = r b(r) − B(r)` to parametrise by `r`.
    pub fn young_conjugate_inverse(&self, y: f64) -> Result<f64> {
        Self::check_arg(y)?;
        if y == 0.0 {
            return Ok(0.0);
        }
        let r = invert_increasing(
            |r| {
                let b = self.spec.b(r);
                self.big_b(r).map(|bb| r * b - bb)
            },
            y,
            self.t_max,
        )?;
        Ok(self.spec.b(r))
    }

    /// `H_n(s) = (∫₀ˢ (τ/B(τ))^{1/(n-1)} dτ)^{1/n'}`.
    pub fn sobolev_h(&self, n: usize, s: f64) -> Result<f64> {
        Self::check_arg(s)?;
        if n < 2 {
            return Err(NonlinearityError::Domain(format!("dimension must be >= 2, got {n}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.sobolev_exponent_at_zero(n)?;
        let power = 1.0 / (n as f64 - 1.0);
        let mut failure = None;
        let integral = integrate_from_zero(
            |tau| match self.big_b(tau) {
                Ok(b) => (tau / b).powf(power),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            s,
            alpha,
            &self.quadrature,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let n_prime = n as f64 / (n as f64 - 1.0);
        Ok(integral?.powf(1.0 / n_prime))
    }

    /// Local exponent of `(τ/B(τ))^{1/(n-1)}` at the origin; errors when
    /// the integral defining `H_n` diverges there.
    fn sobolev_exponent_at_zero(&self, n: usize) -> Result<f64> {
        let delta = 1e-10;
        let g = |tau: f64| -> Result<f64> {
            Ok((tau / self.big_b(tau)?).powf(1.0 / (n as f64 - 1.0)))
        };
        let beta = (g(2.0 * delta)? / g(delta)?).log2();
        if !(beta > -1.0 + 1e-6) {
            return Err(NonlinearityError::ConditionViolated(format!(
                "integral of (t/B(t))^(1/(n-1)) diverges at 0 (local exponent {beta:.4}, n = {n})"
            )));
        }
        Ok((beta - 0.05).max(-0.999))
    }

    /// Local exponent of `(τ/B(τ))^{1/(n-1)}` far out; below −1 means `H_n`
    /// is bounded.
    fn sobolev_exponent_at_infinity(&self, n: usize) -> Result<f64> {
        let far = 1e12;
        let g = |tau: f64| -> Result<f64> {
            Ok((tau / self.big_b(tau)?).powf(1.0 / (n as f64 - 1.0)))
        };
        Ok((g(2.0 * far)? / g(far)?).log2())
    }

    /// `B_n(t) = B(H_n⁻¹(t))`; `+∞` once `H_n` saturates.
    pub fn sobolev_conjugate(&self, n: usize, t: f64) -> Result<f64> {
        Self::check_arg(t)?;
        self.sobolev_exponent_at_zero(n)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let limit = 1e30;
        match invert_increasing(|s| self.sobolev_h(n, s), t, limit) {
            Ok(s) => self.big_b(s),
            Err(NonlinearityError::Numeric(NumericError::Bracket { .. })) => {
                if self.sobolev_exponent_at_infinity(n)? < -1.0 - 1e-6 {
                    Ok(f64::INFINITY)
                } else {
                    Err(NumericError::Bracket { target: t, limit }.into())
                }
            }
            Err(e) => Err(e),
        }
    }
}
