//! Scalar numerics shared by the function-space code: adaptive
//! Gauss–Kronrod quadrature, monotone bisection and golden-section search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("quadrature on [{lower}, {upper}] did not converge: estimate {estimate:e}, error {error:e} after {intervals} subintervals")]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("no bracket for target {target:e} below {limit:e}")]
    Bracket { target: f64, limit: f64 },
    #[error("non-finite value {value} at {at}")]
    NonFinite { at: f64, value: f64 },
}

/// Tolerances for [`integrate`].
///
/// Convergence is declared once the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subintervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subintervals: 4096,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the 7-point rule living on XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
///
/// The integrand is never evaluated at the endpoints, so integrable
/// endpoint singularities are tolerated (though they converge slowly;
/// see [`integrate_from_zero`]).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<f64, NumericError> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(NumericError::NonFinite {
                at: 0.5 * (a + b),
                value: total,
            });
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= opts.max_subintervals {
            return Err(NumericError::Quadrature {
                lower: a,
                upper: b,
                estimate: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution; accept what we have.
            return Ok(total);
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// Integrates `g` over `[0, t]` when `g(τ) ~ τ^α` near zero with `α ≥ alpha_min > -1`.
///
/// Uses the substitution τ = t·s^m with m chosen so the transformed
/// integrand is at least C¹ at s = 0, and integrates the scale-free form
/// `∫₀¹ g(t s^m)/g(t) · m s^{m-1} ds` so tolerances act relatively.
pub fn integrate_from_zero<F: FnMut(f64) -> f64>(
    mut g: F,
    t: f64,
    alpha_min: f64,
    opts: &QuadratureOptions,
) -> Result<f64, NumericError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let power = substitution_power(alpha_min);
    let scale = g(t);
    if !scale.is_finite() || scale == 0.0 {
        // Fall back to the unnormalised form.
        let m = power as i32;
        return integrate(
            |s| g(t * s.powi(m)) * t * power * s.powi(m - 1),
            0.0,
            1.0,
            opts,
        );
    }
    let m = power as i32;
    let normalised = integrate(
        |s| g(t * s.powi(m)) / scale * power * s.powi(m - 1),
        0.0,
        1.0,
        opts,
    )?;
    Ok(normalised * scale * t)
}

pub(crate) fn substitution_power(alpha_min: f64) -> f64 {
    let raw = 2.0 / (1.0 + alpha_min).max(1e-3);
    raw.ceil().clamp(1.0, 64.0)
}

/// Bracketing bisection for the solution of `f(x) = target` with `f`
/// continuous and strictly increasing on `[0, ∞)`, `f(0) ≤ target`.
///
/// The upper end starts at 1 and doubles until it brackets the target or
/// exceeds `limit`. Bisection runs to machine resolution.
pub fn invert_increasing<E, F>(f: F, target: f64, limit: f64) -> Result<f64, E>
where
    E: From<NumericError>,
    F: Fn(f64) -> Result<f64, E>,
{
    if target <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let v = f(hi)?;
        if v >= target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(NumericError::Bracket { target, limit }.into());
        }
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo) > tol * (1.0 + lo.abs() + hi.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    let best = [(x, fx), (x1, f1), (x2, f2)]
        .into_iter()
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .expect("three candidates");
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let opts = QuadratureOptions::default();
        let v = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, 0.0, 2.0, &opts).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_via_substitution() {
        let opts = QuadratureOptions::default();
        // ∫₀² τ^{-0.8} dτ = 5·2^{0.2}
        let v = integrate_from_zero(|x| x.powf(-0.8), 2.0, -0.8, &opts).unwrap();
        assert!((v - 5.0 * 2f64.powf(0.2)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn oscillatory_integrand_refines() {
        let opts = QuadratureOptions::default();
        let v = integrate(|x| (20.0 * x).sin(), 0.0, std::f64::consts::PI, &opts).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn divergent_integral_reports_interval() {
        let opts = QuadratureOptions {
            max_subintervals: 64,
            ..Default::default()
        };
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, &opts).unwrap_err();
        assert!(matches!(err, NumericError::Quadrature { lower, upper, .. } if lower == 0.0 && upper == 1.0));
    }

    #[test]
    fn bisection_inverts_square() {
        let r = invert_increasing::<NumericError, _>(|x| Ok(x * x), 7.0, 1e100).unwrap();
        assert!((r - 7f64.sqrt()).abs() < 1e-14);
        let e = invert_increasing::<NumericError, _>(|x| Ok(x.min(3.0)), 7.0, 1e6).unwrap_err();
        assert!(matches!(e, NumericError::Bracket { .. }));
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 1.3) * (x - 1.3) + 2.0, 0.0, 5.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
