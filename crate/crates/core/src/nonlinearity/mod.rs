//! The Uhlenbeck coefficient `a` and everything derived from it.
//!
//! A [`Nonlinearity`] is a concrete family (power law, shifted power law,
//! user closures, the ε-regularisation of another model). A
//! [`NonlinearitySpec`] wraps a model with certified index bounds
//! `i_a ≤ t a'(t)/a(t) ≤ s_a` and a monotonicity flag; every other module
//! consumes specs, never bare models.

mod derived;
mod families;
mod inequalities;
pub mod properties;
mod regularized;
mod registry;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::NumericError;

pub use derived::DerivedFunctions;
pub use families::{CustomModel, LogPower, Power, ShiftedPower};
pub use inequalities::{
    check_elliptic_lower_bound, check_monotonicity_lower_bound, hessian_core_inequality,
    inequality_tolerance, monotonicity_gap, InequalityCheck,
};
pub use regularized::{regularize, RegularizedModel, RegularizedSpec};
pub use registry::{FamilyBuilder, FamilyRegistry, SpecRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearityError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index bounds violated: {0}")]
    Indices(String),
    #[error("coefficient is not monotone: {0}")]
    NotMonotone(String),
    #[error("unknown nonlinearity family `{0}`")]
    UnknownFamily(String),
    #[error("convergence condition violated: {0}")]
    ConditionViolated(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

pub type Result<T> = std::result::Result<T, NonlinearityError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
}

/// Lower and upper index of `a`: inf and sup of `t a'(t) / a(t)` over `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexBounds {
    pub lower: f64,
    pub upper: f64,
}

impl IndexBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > -1.0 && lower <= upper && upper.is_finite()) {
            return Err(NonlinearityError::Indices(format!(
                "need -1 < i_a <= s_a < inf, got i_a = {lower}, s_a = {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSource {
    Analytic,
    Sampled,
}

/// Integrals of `a` that some families know in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    /// B(t) = ∫₀ᵗ b
    B,
    /// H(t) = ∫₀ᵗ a·b
    H,
    /// F(t) = ∫₀ᵗ b²
    F,
}

/// A family of coefficients `a : (0, ∞) → (0, ∞)`.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    /// Registry name of the family.
    fn family(&self) -> &str;

    fn a(&self, t: f64) -> f64;

    fn a_prime(&self, t: f64) -> f64;

    /// `a'(t)/t`. Models that stay bounded at the origin override this.
    fn a_prime_over_t(&self, t: f64) -> f64 {
        self.a_prime(t) / t
    }

    /// Exact index bounds, when the family knows them.
    fn analytic_indices(&self) -> Option<IndexBounds> {
        None
    }

    fn monotonicity(&self) -> Option<Monotonicity> {
        None
    }

    /// Closed-form antiderivatives, when available.
    fn primitive(&self, _kind: Primitive, _t: f64) -> Option<f64> {
        None
    }

    /// Exponent `p` when the model is the pure power law `t^{p-2}`.
    fn power_exponent(&self) -> Option<f64> {
        None
    }
}

/// Log grid used for index estimation.
pub const INDEX_SAMPLE_RANGE: (f64, f64) = (1e-8, 1e8);
pub const INDEX_SAMPLE_COUNT: usize = 10_000;
pub const INDEX_SAFETY_MARGIN: f64 = 0.01;
const VALIDATION_SAMPLES: usize = 401;

pub(crate) fn log_grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..count).map(move |k| (l0 + (l1 - l0) * k as f64 / (count - 1) as f64).exp())
}

fn index_ratio(model: &dyn Nonlinearity, t: f64) -> f64 {
    t * model.a_prime(t) / model.a(t)
}

/// A coefficient together with certified indices and monotonicity.
#[derive(Clone)]
pub struct NonlinearitySpec {
    model: Arc<dyn Nonlinearity>,
    indices: IndexBounds,
    monotone: Monotonicity,
    label: String,
    source: IndexSource,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("family", &self.model.family())
            .field("label", &self.label)
            .field("i_a", &self.indices.lower)
            .field("s_a", &self.indices.upper)
            .field("monotone", &self.monotone)
            .field("source", &self.source)
            .finish()
    }
}

impl NonlinearitySpec {
    /// Certifies `model`: analytic indices when the family provides them,
    /// otherwise sampled on a log grid and widened by a safety margin.
    pub fn from_model(model: Arc<dyn Nonlinearity>, label: impl Into<String>) -> Result<Self> {
        let (indices, source) = match model.analytic_indices() {
            Some(ix) => (IndexBounds::new(ix.lower, ix.upper)?, IndexSource::Analytic),
            None => (estimate_indices(model.as_ref())?, IndexSource::Sampled),
        };
        let monotone = match model.monotonicity() {
            Some(m) => m,
            None => detect_monotonicity(model.as_ref())?,
        };
        Self::with_bounds(model, indices, monotone, label, source)
    }

    /// Wraps a model with caller-supplied bounds, validating them on samples.
    pub fn with_bounds(
        model: Arc<dyn Nonlinearity>,
        indices: IndexBounds,
        monotone: Monotonicity,
        label: impl Into<String>,
        source: IndexSource,
    ) -> Result<Self> {
        let indices = IndexBounds::new(indices.lower, indices.upper)?;
        validate_samples(model.as_ref(), indices, monotone)?;
        Ok(Self {
            model,
            indices,
            monotone,
            label: label.into(),
            source,
        })
    }

    /// The p-Laplacian coefficient `a(t) = t^{p-2}`.
    pub fn power(p: f64) -> Result<Self> {
        let model = Power::new(p)?;
        Self::from_model(Arc::new(model), format!("p={p}"))
    }

    pub fn model(&self) -> &Arc<dyn Nonlinearity> {
        &self.model
    }

    pub fn family(&self) -> &str {
        self.model.family()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn i_a(&self) -> f64 {
        self.indices.lower
    }

    pub fn s_a(&self) -> f64 {
        self.indices.upper
    }

    pub fn indices(&self) -> IndexBounds {
        self.indices
    }

    pub fn index_source(&self) -> IndexSource {
        self.source
    }

    pub fn monotone(&self) -> Monotonicity {
        self.monotone
    }

    pub fn power_exponent(&self) -> Option<f64> {
        self.model.power_exponent()
    }

    #[inline]
    pub fn a(&self, t: f64) -> f64 {
        self.model.a(t)
    }

    #[inline]
    pub fn a_prime(&self, t: f64) -> f64 {
        self.model.a_prime(t)
    }

    #[inline]
    pub fn a_prime_over_t(&self, t: f64) -> f64 {
        self.model.a_prime_over_t(t)
    }

    /// `b(t) = a(t) t`, extended by `b(0) = 0`.
    #[inline]
    pub fn b(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            self.model.a(t) * t
        }
    }

    pub fn derived(&self) -> DerivedFunctions {
        DerivedFunctions::new(self.clone())
    }

    /// `a(|ξ|) ξ`, with the continuous extension `0` at `ξ = 0`.
    pub fn flux(&self, xi: &[f64]) -> Vec<f64> {
        let norm = euclidean(xi);
        if norm == 0.0 {
            return vec![0.0; xi.len()];
        }
        let a = self.a(norm);
        xi.iter().map(|x| a * x).collect()
    }

    /// `a'(|ξ|)/|ξ| (ξ·η)² + a(|ξ|)|η|²`, the flux Jacobian as a quadratic form.
    pub fn flux_jacobian_form(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        if xi.len() != eta.len() {
            return Err(NonlinearityError::Domain(format!(
                "length mismatch {} vs {}",
                xi.len(),
                eta.len()
            )));
        }
        let norm = euclidean(xi);
        if norm == 0.0 {
            return Err(NonlinearityError::Domain(
                "flux Jacobian form needs xi != 0".into(),
            ));
        }
        let dot: f64 = xi.iter().zip(eta).map(|(x, y)| x * y).sum();
        let eta2: f64 = eta.iter().map(|y| y * y).sum();
        Ok(self.a_prime_over_t(norm) * dot * dot + self.a(norm) * eta2)
    }
}

pub(crate) fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn estimate_indices(model: &dyn Nonlinearity) -> Result<IndexBounds> {
    let (lo, hi) = INDEX_SAMPLE_RANGE;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for t in log_grid(lo, hi, INDEX_SAMPLE_COUNT) {
        let r = index_ratio(model, t);
        if !r.is_finite() {
            return Err(NonlinearityError::Indices(format!(
                "t a'(t)/a(t) not finite at t = {t:e}"
            )));
        }
        min = min.min(r);
        max = max.max(r);
    }
    let lower = min - INDEX_SAFETY_MARGIN * min.abs();
    let upper = max + INDEX_SAFETY_MARGIN * max.abs();
    IndexBounds::new(lower, upper)
}

fn detect_monotonicity(model: &dyn Nonlinearity) -> Result<Monotonicity> {
    let (lo, hi) = INDEX_SAMPLE_RANGE;
    let (mut up, mut down) = (false, false);
    for t in log_grid(lo, hi, INDEX_SAMPLE_COUNT) {
        let d = model.a_prime(t) * t / model.a(t);
        if d > 1e-12 {
            up = true;
        } else if d < -1e-12 {
            down = true;
        }
    }
    match (up, down) {
        (true, true) => Err(NonlinearityError::NotMonotone(format!(
            "a' changes sign on [{lo:e}, {hi:e}]"
        ))),
        (false, true) => Ok(Monotonicity::NonIncreasing),
        _ => Ok(Monotonicity::NonDecreasing),
    }
}

fn validate_samples(model: &dyn Nonlinearity, ix: IndexBounds, monotone: Monotonicity) -> Result<()> {
    let (lo, hi) = INDEX_SAMPLE_RANGE;
    let tol = 1e-9 * (1.0 + ix.lower.abs() + ix.upper.abs());
    for t in log_grid(lo, hi, VALIDATION_SAMPLES) {
        let a = model.a(t);
        if !(a > 0.0 && a.is_finite()) {
            return Err(NonlinearityError::Domain(format!("a({t:e}) = {a} is not positive")));
        }
        let r = index_ratio(model, t);
        if r < ix.lower - tol || r > ix.upper + tol {
            return Err(NonlinearityError::Indices(format!(
                "t a'(t)/a(t) = {r} at t = {t:e} outside [{}, {}]",
                ix.lower, ix.upper
            )));
        }
        let consistent = match monotone {
            Monotonicity::NonDecreasing => r >= -tol,
            Monotonicity::NonIncreasing => r <= tol,
        };
        if !consistent {
            return Err(NonlinearityError::NotMonotone(format!(
                "a' has the wrong sign at t = {t:e} for {monotone:?}"
            )));
        }
    }
    Ok(())
}
