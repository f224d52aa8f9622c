use std::f64::consts::PI;

use crate::quadrature::{integrate_from_zero, QuadratureOptions};

use super::{euclidean, Monotonicity, NonlinearityError, NonlinearitySpec, Result};

/// Additive slack for every pointwise inequality check.
pub fn inequality_tolerance(lhs: f64, rhs: f64) -> f64 {
    1e-9 * (1.0 + lhs.abs() + rhs.abs())
}

/// Outcome of evaluating one side-by-side inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    /// `lhs ≥ rhs` up to [`inequality_tolerance`].
    pub fn at_least(lhs: f64, rhs: f64) -> Self {
        let holds = lhs >= rhs - inequality_tolerance(lhs, rhs);
        Self { lhs, rhs, holds }
    }

    /// `lhs ≤ rhs` up to [`inequality_tolerance`].
    pub fn at_most(lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs + inequality_tolerance(lhs, rhs);
        Self { lhs, rhs, holds }
    }
}

fn same_length(xi: &[f64], eta: &[f64]) -> Result<()> {
    if xi.len() != eta.len() || xi.is_empty() {
        return Err(NonlinearityError::Domain(format!(
            "vectors must have equal non-zero length, got {} and {}",
            xi.len(),
            eta.len()
        )));
    }
    Ok(())
}

fn monotonicity_lhs(spec: &NonlinearitySpec, xi: &[f64], eta: &[f64]) -> f64 {
    let fx = spec.flux(xi);
    let fy = spec.flux(eta);
    (0..xi.len()).map(|k| (fx[k] - fy[k]) * (xi[k] - eta[k])).sum()
}

fn distance_squared(xi: &[f64], eta: &[f64]) -> f64 {
    xi.iter().zip(eta).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `[a(|ξ|)ξ − a(|η|)η]·(ξ−η)` against its lower bound.
///
/// For non-decreasing `a` the bound is `⅓[a(|ξ|)+a(|η|)]|ξ−η|²`; otherwise
/// the segment-integral bound of [`check_elliptic_lower_bound`] is used.
pub fn check_monotonicity_lower_bound(
    spec: &NonlinearitySpec,
    xi: &[f64],
    eta: &[f64],
) -> Result<InequalityCheck> {
    same_length(xi, eta)?;
    if xi == eta {
        return Ok(InequalityCheck::at_least(0.0, 0.0));
    }
    match spec.monotone() {
        Monotonicity::NonDecreasing => {
            let lhs = monotonicity_lhs(spec, xi, eta);
            let weight = spec.a(euclidean(xi)) + spec.a(euclidean(eta));
            Ok(InequalityCheck::at_least(lhs, weight / 3.0 * distance_squared(xi, eta)))
        }
        Monotonicity::NonIncreasing => check_elliptic_lower_bound(spec, xi, eta),
    }
}

/// `[a(|ξ|)ξ − a(|η|)η]·(ξ−η) ≥ (1+min{i_a,0})|ξ−η|² ∫₀¹ a(|η+s(ξ−η)|) ds`.
///
/// The segment integral is split at the point closest to the origin, where
/// `a` may blow up when `i_a < 0`.
pub fn check_elliptic_lower_bound(
    spec: &NonlinearitySpec,
    xi: &[f64],
    eta: &[f64],
) -> Result<InequalityCheck> {
    same_length(xi, eta)?;
    let d2 = distance_squared(xi, eta);
    if d2 == 0.0 {
        return Ok(InequalityCheck::at_least(0.0, 0.0));
    }
    let lhs = monotonicity_lhs(spec, xi, eta);
    let diff: Vec<f64> = xi.iter().zip(eta).map(|(x, y)| x - y).collect();
    let along: f64 = eta.iter().zip(&diff).map(|(y, d)| y * d).sum();
    let split = (-along / d2).clamp(0.0, 1.0);
    // offsets are measured from the closest point c so that |c + w(ξ−η)|
    // never cancels to zero for w ≠ 0
    let closest: Vec<f64> = eta.iter().zip(&diff).map(|(y, d)| y + split * d).collect();
    let c2: f64 = closest.iter().map(|c| c * c).sum();
    // c ⟂ (ξ−η) whenever the closest point is interior
    let cd: f64 = if split > 0.0 && split < 1.0 {
        0.0
    } else {
        closest.iter().zip(&diff).map(|(c, d)| c * d).sum()
    };
    let point_norm = |w: f64| -> f64 { (c2 + 2.0 * w * cd + w * w * d2).max(0.0).sqrt() };
    let alpha = spec.i_a().min(0.0);
    let opts = QuadratureOptions::default();
    let left = integrate_from_zero(|u| spec.a(point_norm(-u)), split, alpha, &opts)?;
    let right = integrate_from_zero(|u| spec.a(point_norm(u)), 1.0 - split, alpha, &opts)?;
    let rhs = (1.0 + spec.i_a().min(0.0)) * d2 * (left + right);
    Ok(InequalityCheck::at_least(lhs, rhs))
}

/// The pointwise core of the Hessian differential inequality:
/// `|V|² + i_a (V·ω)² ≥ (1+min{i_a,0}) |V|²` for a unit vector `ω`.
pub fn hessian_core_inequality(i_a: f64, v: &[f64], omega: &[f64]) -> Result<InequalityCheck> {
    same_length(v, omega)?;
    let norm = euclidean(omega);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(NonlinearityError::Domain(format!("omega must be a unit vector, |omega| = {norm}")));
    }
    let v2: f64 = v.iter().map(|x| x * x).sum();
    let dot: f64 = v.iter().zip(omega).map(|(x, w)| x * w).sum();
    Ok(InequalityCheck::at_least(
        v2 + i_a * dot * dot,
        (1.0 + i_a.min(0.0)) * v2,
    ))
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Sampled infimum of `[a(|ξ|)ξ − a(|η|)η]·(ξ−η)` over planar pairs with
/// `|ξ−η| ≥ t` and `|ξ|, |η| ≤ τ`.
///
/// Interior pairs come from a Halton sequence; boundary pairs (chords of
/// length exactly `t`, antipodal pairs, pairs through the origin) are added
/// deterministically. This is a sampled estimate, not a certified bound.
pub fn monotonicity_gap(spec: &NonlinearitySpec, t: f64, tau: f64, samples: usize) -> Result<f64> {
    if !(t > 0.0 && tau > 0.0) {
        return Err(NonlinearityError::Domain(format!("need t, tau > 0, got {t}, {tau}")));
    }
    if t > 2.0 * tau {
        return Err(NonlinearityError::Domain(format!(
            "constraint set is empty: t = {t} > 2 tau = {}",
            2.0 * tau
        )));
    }
    let mut best = f64::INFINITY;
    let mut consider = |xi: [f64; 2], eta: [f64; 2]| {
        let d = ((xi[0] - eta[0]).powi(2) + (xi[1] - eta[1]).powi(2)).sqrt();
        if d >= t * (1.0 - 1e-12) && euclidean(&xi) <= tau * (1.0 + 1e-12) && euclidean(&eta) <= tau * (1.0 + 1e-12) {
            best = best.min(monotonicity_lhs(spec, &xi, &eta));
        }
    };
    let polar = |r: f64, th: f64| [r * th.cos(), r * th.sin()];

    for k in 1..=samples {
        let r1 = tau * halton(k, 2).sqrt();
        let r2 = tau * halton(k, 5).sqrt();
        let xi = polar(r1, 2.0 * PI * halton(k, 3));
        let eta = polar(r2, 2.0 * PI * halton(k, 7));
        consider(xi, eta);
    }

    let boundary = samples.max(16);
    let chord_angle = 2.0 * (t / (2.0 * tau)).min(1.0).asin();
    for k in 0..boundary {
        let th = 2.0 * PI * k as f64 / boundary as f64;
        let frac = (k as f64 + 0.5) / boundary as f64;
        // both ends on the outer circle, chord length t
        consider(polar(tau, th), polar(tau, th + chord_angle));
        // antipodal pairs with |ξ − η| between t and 2τ
        let r = 0.5 * t + frac * (tau - 0.5 * t);
        consider(polar(r, th), polar(r, th + PI));
        // one end at the origin
        let r = t + frac * (tau - t).max(0.0);
        if t <= tau {
            consider(polar(r, th), [0.0, 0.0]);
        }
        // chord of length t starting on the outer circle, pointing inwards
        let phi = th + PI + (frac - 0.5) * PI;
        let xi = polar(tau, th);
        let eta = [xi[0] + t * phi.cos(), xi[1] + t * phi.sin()];
        consider(xi, eta);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_bound() {
        let s = NonlinearitySpec::power(2.0).unwrap();
        let c = check_monotonicity_lower_bound(&s, &[1.0, 2.0], &[-0.5, 0.3]).unwrap();
        let d2 = 1.5f64.powi(2) + 1.7f64.powi(2);
        assert!((c.lhs - d2).abs() < 1e-14);
        assert!((c.rhs - 2.0 / 3.0 * d2).abs() < 1e-14);
        assert!(c.holds);
    }

    #[test]
    fn identical_arguments() {
        let s = NonlinearitySpec::power(1.5).unwrap();
        let c = check_monotonicity_lower_bound(&s, &[0.3, 0.1], &[0.3, 0.1]).unwrap();
        assert_eq!(c, InequalityCheck { lhs: 0.0, rhs: 0.0, holds: true });
    }

    #[test]
    fn quartic_orthogonal_pair() {
        let s = NonlinearitySpec::power(4.0).unwrap();
        let c = check_monotonicity_lower_bound(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-15);
        assert!((c.rhs - 4.0 / 3.0).abs() < 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn elliptic_bound_through_singularity() {
        // segment through the origin with a(t) = t^{-1/2}
        let s = NonlinearitySpec::power(1.5).unwrap();
        let c = check_monotonicity_lower_bound(&s, &[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        // lhs = 2·2 = 4, ∫₀¹ |2s−1|^{-1/2} ds = 2, rhs = ½·4·2 = 4 (tight on a line)
        assert!((c.lhs - 4.0).abs() < 1e-12);
        assert!((c.rhs - 4.0).abs() < 1e-8, "{}", c.rhs);
        assert!(c.holds);
    }

    #[test]
    fn hessian_core_examples() {
        let c = hessian_core_inequality(0.0, &[1.0, 2.0], &[1.0, 0.0]).unwrap();
        assert_eq!((c.lhs, c.rhs), (5.0, 5.0));
        let w = [0.6, 0.8];
        let c = hessian_core_inequality(-0.5, &w, &w).unwrap();
        assert!((c.lhs - 0.5).abs() < 1e-15 && (c.rhs - 0.5).abs() < 1e-15 && c.holds);
        let c = hessian_core_inequality(1.0, &[0.0, 3.0], &[1.0, 0.0]).unwrap();
        assert_eq!((c.lhs, c.rhs), (9.0, 9.0));
        assert!(hessian_core_inequality(1.0, &[1.0, 0.0], &[2.0, 0.0]).is_err());
    }

    #[test]
    fn gap_examples() {
        let s2 = NonlinearitySpec::power(2.0).unwrap();
        let g = monotonicity_gap(&s2, 1.0, 5.0, 2000).unwrap();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
        let s3 = NonlinearitySpec::power(3.0).unwrap();
        assert!(monotonicity_gap(&s3, 1.0, 1.0, 2000).unwrap() > 0.0);
        let edge = monotonicity_gap(&s3, 2.0, 1.0, 500).unwrap();
        // antipodal unit vectors: (ξ + ξ)·2ξ = 4
        assert!((edge - 4.0).abs() < 1e-9, "{edge}");
        assert!(monotonicity_gap(&s3, 2.5, 1.0, 10).is_err());
    }

    #[test]
    fn gap_oracle_dense_grid() {
        // brute-force grid over the constraint set for p = 3
        let s3 = NonlinearitySpec::power(3.0).unwrap();
        let mut grid_min = f64::INFINITY;
        let m = 40;
        for i in 0..m {
            for j in 0..m {
                let xi = [-1.0 + 2.0 * i as f64 / (m - 1) as f64, -1.0 + 2.0 * j as f64 / (m - 1) as f64];
                if euclidean(&xi) > 1.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        let eta = [-1.0 + 2.0 * k as f64 / (m - 1) as f64, -1.0 + 2.0 * l as f64 / (m - 1) as f64];
                        if euclidean(&eta) > 1.0 || distance_squared(&xi, &eta) < 1.0 {
                            continue;
                        }
                        grid_min = grid_min.min(monotonicity_lhs(&s3, &xi, &eta));
                    }
                }
            }
        }
        let sampled = monotonicity_gap(&s3, 1.0, 1.0, 4000).unwrap();
        assert!(sampled > 0.0);
        assert!(sampled <= grid_min * (1.0 + 1e-9));
    }
}
