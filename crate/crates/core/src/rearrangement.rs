//! Decreasing rearrangements and rearrangement-invariant norms of
//! cellwise-constant fields.
//!
//! A [`MeasuredField`] is a finite list of values with cell measures. Its
//! rearrangement is an exact step function, so every Lorentz integral below
//! is evaluated in closed form step by step.

use thiserror::Error;

use crate::nonlinearity::{DerivedFunctions, InequalityCheck, NonlinearityError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RearrangementError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Young(#[from] NonlinearityError),
}

pub type Result<T> = std::result::Result<T, RearrangementError>;

/// Cellwise values with positive cell measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredField {
    values: Vec<f64>,
    measures: Vec<f64>,
    total_measure: f64,
}

impl MeasuredField {
    pub fn new(values: Vec<f64>, measures: Vec<f64>) -> Result<Self> {
        if values.len() != measures.len() {
            return Err(RearrangementError::Shape(format!(
                "{} values but {} measures",
                values.len(),
                measures.len()
            )));
        }
        if let Some(m) = measures.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(RearrangementError::Domain(format!("cell measure {m} is not positive")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(RearrangementError::Domain(format!("value {v} is not finite")));
        }
        let total_measure = measures.iter().sum();
        Ok(Self {
            values,
            measures,
            total_measure,
        })
    }

    /// Pointwise Euclidean norm of a vector field stored cell-major with
    /// `components` entries per cell.
    pub fn from_vectors(components: usize, data: &[f64], measures: Vec<f64>) -> Result<Self> {
        if components == 0 || data.len() != components * measures.len() {
            return Err(RearrangementError::Shape(format!(
                "{} entries for {} cells of {components} components",
                data.len(),
                measures.len()
            )));
        }
        let values = data
            .chunks(components)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        Self::new(values, measures)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            measures: self.measures.clone(),
            total_measure: self.total_measure,
        }
    }

    /// `∫ |v|^q` for the Lebesgue comparison.
    pub fn lebesgue_norm(&self, q: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.measures)
            .map(|(v, m)| v.abs().powf(q) * m)
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// `μ_v(t) = m({|v| > t})`.
pub fn distribution_function(field: &MeasuredField, t: f64) -> f64 {
    field
        .values
        .iter()
        .zip(&field.measures)
        .filter(|(v, _)| v.abs() > t)
        .map(|(_, m)| m)
        .sum()
}

/// The step function `v*`: value `levels[k]` on `[ends[k-1], ends[k])`
/// (with `ends[-1] = 0`) and zero from `ends.last()` on.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    levels: Vec<f64>,
    ends: Vec<f64>,
    total_measure: f64,
}

/// Sorts `|v|` in decreasing order, carrying measures and merging ties.
pub fn decreasing_rearrangement(field: &MeasuredField) -> RearrangementProfile {
    let mut pairs: Vec<(f64, f64)> = field
        .values
        .iter()
        .zip(&field.measures)
        .map(|(v, m)| (v.abs(), *m))
        .filter(|(v, _)| *v > 0.0)
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut levels: Vec<f64> = Vec::new();
    let mut ends: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for (v, m) in pairs {
        acc += m;
        if levels.last() == Some(&v) {
            *ends.last_mut().expect("paired with levels") = acc;
        } else {
            levels.push(v);
            ends.push(acc);
        }
    }
    RearrangementProfile {
        levels,
        ends,
        total_measure: field.total_measure,
    }
}

impl RearrangementProfile {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Right endpoints `s_1 < s_2 < …` of the steps.
    pub fn breakpoints(&self) -> &[f64] {
        &self.ends
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .zip(&self.ends)
            .scan(0.0, |start, (&v, &end)| {
                let s0 = *start;
                *start = end;
                Some((v, s0, end))
            })
    }

    /// `v*(s)`.
    pub fn value_at(&self, s: f64) -> f64 {
        let k = self.ends.partition_point(|&e| e <= s);
        self.levels.get(k).copied().unwrap_or(0.0)
    }

    /// Distribution function of the profile itself.
    pub fn distribution(&self, t: f64) -> f64 {
        let k = self.levels.partition_point(|&v| v > t);
        if k == 0 {
            0.0
        } else {
            self.ends[k - 1]
        }
    }

    /// `∫₀ˢ v*`.
    pub fn integral_to(&self, s: f64) -> f64 {
        self.steps()
            .take_while(|(_, s0, _)| *s0 < s)
            .map(|(v, s0, s1)| v * (s1.min(s) - s0))
            .sum()
    }
}

/// `v**(s) = (1/s) ∫₀ˢ v*`.
pub fn double_star(profile: &RearrangementProfile, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(RearrangementError::Domain(format!("v** needs s > 0, got {s}")));
    }
    Ok(profile.integral_to(s) / s)
}

/// `‖s^{1/q − 1/σ} v*(s)‖_{L^σ(0, m)}` for `q ∈ (1, ∞)`, `σ ∈ [1, ∞]`.
pub fn lorentz_norm(profile: &RearrangementProfile, q: f64, sigma: f64) -> Result<f64> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(RearrangementError::Domain(format!("Lorentz index q must lie in (1, inf), got {q}")));
    }
    if !(sigma >= 1.0) {
        return Err(RearrangementError::Domain(format!("Lorentz index sigma must be >= 1, got {sigma}")));
    }
    if sigma.is_infinite() {
        // v* is right-continuous, so the sup on each step is approached at its right end.
        return Ok(profile
            .steps()
            .map(|(v, _, s1)| v * s1.powf(1.0 / q))
            .fold(0.0, f64::max));
    }
    let r = sigma / q;
    let sum: f64 = profile
        .steps()
        .map(|(v, s0, s1)| v.powf(sigma) * (s1.powf(r) - s0.powf(r)))
        .sum();
    Ok((sum / r).powf(1.0 / sigma))
}

/// `‖v‖_{L^{n,1}} = ∫₀^∞ s^{1/n − 1} v*(s) ds`.
pub fn l_n1_norm(field: &MeasuredField, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(RearrangementError::Domain(format!("L^(n,1) needs n >= 2, got {n}")));
    }
    lorentz_norm(&decreasing_rearrangement(field), n as f64, 1.0)
}

/// A Young function `B` evaluated pointwise.
pub trait YoungFunction {
    fn eval(&self, t: f64) -> std::result::Result<f64, NonlinearityError>;
}

impl YoungFunction for DerivedFunctions {
    fn eval(&self, t: f64) -> std::result::Result<f64, NonlinearityError> {
        self.big_b(t)
    }
}

/// Adapter for closed-form Young functions.
pub struct FnYoung<F>(pub F);

impl<F: Fn(f64) -> f64> YoungFunction for FnYoung<F> {
    fn eval(&self, t: f64) -> std::result::Result<f64, NonlinearityError> {
        Ok((self.0)(t))
    }
}

/// `inf{λ > 0 : ∫ B(|v|/λ) ≤ 1}` by bisection on the modular.
pub fn luxemburg_norm(field: &MeasuredField, young: &dyn YoungFunction) -> Result<f64> {
    let max = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let modular = |lambda: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (v, m) in field.values.iter().zip(&field.measures) {
            if *v != 0.0 {
                acc += young.eval(v.abs() / lambda)? * m;
            }
        }
        Ok(acc)
    };
    let mut hi = max;
    while modular(hi)? > 1.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(RearrangementError::Domain("modular does not decay".into()));
        }
    }
    let mut lo = 0.5 * hi;
    while modular(lo)? <= 1.0 {
        hi = lo;
        lo *= 0.5;
        if lo == 0.0 {
            return Err(RearrangementError::Domain("modular does not grow".into()));
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if modular(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `∫ |v w| dm` against `∫₀^∞ v* w*`.
pub fn hardy_littlewood_pairing(v: &MeasuredField, w: &MeasuredField) -> Result<InequalityCheck> {
    if v.len() != w.len() {
        return Err(RearrangementError::Shape(format!("{} vs {} cells", v.len(), w.len())));
    }
    for (a, b) in v.measures.iter().zip(&w.measures) {
        if (a - b).abs() > 1e-12 * a.max(*b) {
            return Err(RearrangementError::Shape(format!("cell measures differ: {a} vs {b}")));
        }
    }
    let lhs: f64 = v
        .values
        .iter()
        .zip(&w.values)
        .zip(&v.measures)
        .map(|((x, y), m)| (x * y).abs() * m)
        .sum();
    let rhs = product_integral(&decreasing_rearrangement(v), &decreasing_rearrangement(w));
    Ok(InequalityCheck::at_most(lhs, rhs))
}

/// Exact `∫ v* w*` of two step functions.
fn product_integral(p: &RearrangementProfile, q: &RearrangementProfile) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut start = 0.0;
    let mut acc = 0.0;
    while i < p.levels.len() && j < q.levels.len() {
        let end = p.ends[i].min(q.ends[j]);
        acc += p.levels[i] * q.levels[j] * (end - start);
        start = end;
        if p.ends[i] <= end {
            i += 1;
        }
        if q.ends[j] <= end {
            j += 1;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::nonlinearity::NonlinearitySpec;

    fn field(values: &[f64], measures: &[f64]) -> MeasuredField {
        MeasuredField::new(values.to_vec(), measures.to_vec()).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let f = field(&[3.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        assert_eq!(distribution_function(&f, 2.0), 1.0);
        assert_eq!(distribution_function(&f, 3.0), 0.0);
        assert_eq!(distribution_function(&f, 0.0), 3.0);
    }

    #[test]
    fn rearrangement_examples() {
        let f = field(&[1.0, 3.0], &[2.0, 1.0]);
        let p = decreasing_rearrangement(&f);
        assert_eq!(p.levels(), &[3.0, 1.0]);
        assert_eq!(p.breakpoints(), &[1.0, 3.0]);
        assert_eq!(p.value_at(0.0), 3.0);
        assert_eq!(p.value_at(0.999), 3.0);
        assert_eq!(p.value_at(1.0), 1.0);
        assert_eq!(p.value_at(3.0), 0.0);
        assert_eq!(double_star(&p, 2.0).unwrap(), 2.0);
        assert_eq!(double_star(&p, 1.0).unwrap(), 3.0);
        assert!(double_star(&p, 0.0).is_err());

        let c = decreasing_rearrangement(&field(&[2.5; 4], &[0.5, 1.0, 0.25, 0.25]));
        assert_eq!(c.levels(), &[2.5]);
        assert_eq!(c.value_at(1.99), 2.5);
        assert_eq!(double_star(&c, 1.3).unwrap(), 2.5);

        let flipped = decreasing_rearrangement(&field(&[-1.0, -3.0], &[2.0, 1.0]));
        assert_eq!(flipped, p);
    }

    #[test]
    fn lorentz_examples() {
        // indicator of |E| = 4, q = 2, σ = 1: ∫₀⁴ s^{-1/2} ds = 4
        let ind = decreasing_rearrangement(&field(&[1.0], &[4.0]));
        assert!((lorentz_norm(&ind, 2.0, 1.0).unwrap() - 4.0).abs() < 1e-14);
        let f = field(&[3.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let v = lorentz_norm(&decreasing_rearrangement(&f), 2.0, 2.0).unwrap();
        assert!((v - 11f64.sqrt()).abs() < 1e-14);
        let zero = decreasing_rearrangement(&field(&[0.0, 0.0], &[1.0, 2.0]));
        assert_eq!(lorentz_norm(&zero, 3.0, 1.0).unwrap(), 0.0);
        assert!(lorentz_norm(&ind, 1.0, 1.0).is_err());
        assert!(lorentz_norm(&ind, 2.0, 0.5).is_err());
        // σ = ∞: sup s^{1/q} v*(s)
        let w = decreasing_rearrangement(&field(&[3.0, 1.0], &[1.0, 8.0]));
        assert!((lorentz_norm(&w, 3.0, f64::INFINITY).unwrap() - 3.0).abs() < 1e-14);
        // √3·... values: 3·1^{1/2}=3, 1·9^{1/2}=3 → 3
        assert!((lorentz_norm(&w, 2.0, f64::INFINITY).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn l_n1_examples() {
        let pi = std::f64::consts::PI;
        let c = field(&[2.0], &[pi]);
        // oracle: ∫₀^π s^{-1/2}·2 ds = 4√π
        assert!((l_n1_norm(&c, 2).unwrap() - 4.0 * pi.sqrt()).abs() < 1e-13);
        assert_eq!(l_n1_norm(&field(&[0.0], &[1.0]), 2).unwrap(), 0.0);
        let f = field(&[0.3, -2.0, 1.1], &[0.2, 0.7, 1.3]);
        let base = l_n1_norm(&f, 3).unwrap();
        assert!((l_n1_norm(&f.scaled(10.0), 3).unwrap() - 10.0 * base).abs() < 1e-12 * base);
        assert!(l_n1_norm(&f, 1).is_err());
    }

    #[test]
    fn luxemburg_examples() {
        let quad = FnYoung(|t: f64| t * t / 2.0);
        let one = field(&[1.0], &[2.0]);
        assert!((luxemburg_norm(&one, &quad).unwrap() - 1.0).abs() < 1e-12);
        let f = field(&[0.5, -1.5, 2.0], &[1.0, 0.3, 0.2]);
        let base = luxemburg_norm(&f, &quad).unwrap();
        assert!((luxemburg_norm(&f.scaled(7.0), &quad).unwrap() - 7.0 * base).abs() < 1e-10 * base);
        // p = 3 power: B(t) = t³/3, constant c on m → c (m/3)^{1/3}
        let d = NonlinearitySpec::power(3.0).unwrap().derived();
        let c = field(&[1.7], &[5.0]);
        let expected = 1.7 * (5.0f64 / 3.0).powf(1.0 / 3.0);
        assert!((luxemburg_norm(&c, &d).unwrap() - expected).abs() < 1e-10 * expected);
        assert_eq!(luxemburg_norm(&field(&[0.0], &[1.0]), &d).unwrap(), 0.0);
    }

    #[test]
    fn hardy_littlewood_examples() {
        let v = field(&[2.0, 1.0], &[1.0, 1.0]);
        let w = field(&[1.0, 2.0], &[1.0, 1.0]);
        let c = hardy_littlewood_pairing(&v, &w).unwrap();
        assert_eq!((c.lhs, c.rhs, c.holds), (4.0, 5.0, true));
        let ones = field(&[1.0, 1.0], &[1.0, 1.0]);
        let c = hardy_littlewood_pairing(&v, &ones).unwrap();
        assert_eq!((c.lhs, c.rhs), (3.0, 3.0));
        let c = hardy_littlewood_pairing(&v, &v).unwrap();
        assert_eq!(c.lhs, c.rhs);
        let short = field(&[1.0], &[1.0]);
        assert!(matches!(hardy_littlewood_pairing(&v, &short), Err(RearrangementError::Shape(_))));
        let other = field(&[1.0, 1.0], &[1.0, 2.0]);
        assert!(matches!(hardy_littlewood_pairing(&v, &other), Err(RearrangementError::Shape(_))));
    }

    #[test]
    fn invalid_fields_rejected() {
        assert!(MeasuredField::new(vec![1.0], vec![0.0]).is_err());
        assert!(MeasuredField::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(MeasuredField::new(vec![f64::NAN], vec![1.0]).is_err());
        let v = MeasuredField::from_vectors(2, &[3.0, 4.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(v.values(), &[5.0, 1.0]);
    }

    fn arb_field() -> impl Strategy<Value = MeasuredField> {
        prop::collection::vec((-5.0f64..5.0, 0.01f64..2.0), 1..40).prop_map(|cells| {
            let (v, m): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
            // quantise so ties actually occur
            let v = v.into_iter().map(|x| (x * 4.0).round() / 4.0).collect();
            MeasuredField::new(v, m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn equimeasurable(f in arb_field(), t in 0.0f64..5.5) {
            let p = decreasing_rearrangement(&f);
            let a = distribution_function(&f, t);
            let b = p.distribution(t);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn double_star_dominates(f in arb_field()) {
            let p = decreasing_rearrangement(&f);
            let mut prev = f64::INFINITY;
            let mut start = 0.0;
            for &end in p.breakpoints() {
                for s in [0.5 * (start + end), end] {
                    let ds = double_star(&p, s).unwrap();
                    prop_assert!(ds >= p.value_at(s) - 1e-12);
                    prop_assert!(ds <= prev + 1e-12);
                    prev = ds;
                }
                start = end;
            }
        }

        #[test]
        fn lorentz_diagonal_is_lebesgue(f in arb_field(), q in 1.1f64..6.0) {
            let p = decreasing_rearrangement(&f);
            let l = lorentz_norm(&p, q, q).unwrap();
            let direct = f.lebesgue_norm(q);
            prop_assert!((l - direct).abs() <= 1e-12 * (1.0 + direct));
        }

        #[test]
        fn hardy_littlewood_holds(f in arb_field(), seed in 0u64..1000) {
            let shift = (seed as usize) % f.len();
            let mut w = f.values().to_vec();
            w.rotate_left(shift);
            let w = MeasuredField::new(w.iter().map(|x| x * 0.5 + 1.0).collect(), f.measures().to_vec()).unwrap();
            prop_assert!(hardy_littlewood_pairing(&f, &w).unwrap().holds);
        }
    }
}
