//! The positive radial solution `Q` of `-ΔQ + Q - Q³ = 0` in the plane, found
//! by shooting on `Q(0)`, together with the integrals that fix the critical
//! strength `a* = ∫Q²` and the concentration scale `λ₀`.
//!
//! All stored integrals carry the full planar measure, i.e. they are
//! `2π ∫ f(r) r dr`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FieldError, ProfileError};
use crate::grid::{Field2D, Grid2D};

/// Initial shooting bracket for `Q(0)`.
pub const BRACKET: (f64, f64) = (1.0, 3.0);

/// Relative divergence between the two final bracket trajectories beyond
/// which the integrated table is replaced by the Bessel tail.
const MATCH_DIVERGENCE: f64 = 1e-7;

/// Tabulated radial profile and its derived integrals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r_max: f64,
    pub step: f64,
    /// `Q(k·step)` for `k = 0..=r_max/step`.
    pub values: Vec<f64>,
    /// `Q'(k·step)`, used for Hermite interpolation.
    pub slopes: Vec<f64>,
    pub q0: f64,
    /// `∫Q²`, equal to `a*`.
    pub mass: f64,
    /// `∫|∇Q|²`.
    pub kinetic: f64,
    /// `∫Q⁴`.
    pub quartic: f64,
    /// `∫|x|²Q²`.
    pub second_moment: f64,
    /// Radius where the integrated trajectory hands over to `C·K₀(r)`.
    pub match_radius: f64,
    /// The constant `C` of the far-field tail.
    pub tail_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `Q` crossed zero: `Q(0)` too large.
    Undershoot,
    /// `Q'` turned non-negative while `Q > 0`: `Q(0)` too small.
    Overshoot,
    /// Reached the end of the interval with neither event.
    Survived,
}

struct Trajectory {
    q: Vec<f64>,
    p: Vec<f64>,
    outcome: Shot,
}

fn rhs(r: f64, q: f64, p: f64) -> (f64, f64) {
    (p, -p / r + q - q * q * q)
}

/// Integrates from `r = 0` with classic RK4. The first step uses the series
/// `Q = q0 + c r² + d r⁴` with `c = (q0 - q0³)/4`, `d = (1 - 3q0²) c / 16`.
fn integrate(q0: f64, step: f64, steps: usize, stop_on_event: bool) -> Trajectory {
    let mut q = Vec::with_capacity(steps + 1);
    let mut p = Vec::with_capacity(steps + 1);
    q.push(q0);
    p.push(0.0);
    let c = (q0 - q0 * q0 * q0) / 4.0;
    let d = (1.0 - 3.0 * q0 * q0) * c / 16.0;
    let h = step;
    q.push(q0 + c * h * h + d * h.powi(4));
    p.push(2.0 * c * h + 4.0 * d * h.powi(3));
    let mut outcome = Shot::Survived;
    let classify = |qv: f64, pv: f64| {
        if qv < 0.0 {
            Some(Shot::Undershoot)
        } else if pv >= 0.0 {
            Some(Shot::Overshoot)
        } else {
            None
        }
    };
    if let Some(s) = classify(q[1], p[1]) {
        outcome = s;
        if stop_on_event {
            return Trajectory { q, p, outcome };
        }
    }
    for k in 1..steps {
        let r = k as f64 * h;
        let (y, z) = (q[k], p[k]);
        let (k1q, k1p) = rhs(r, y, z);
        let (k2q, k2p) = rhs(r + 0.5 * h, y + 0.5 * h * k1q, z + 0.5 * h * k1p);
        let (k3q, k3p) = rhs(r + 0.5 * h, y + 0.5 * h * k2q, z + 0.5 * h * k2p);
        let (k4q, k4p) = rhs(r + h, y + h * k3q, z + h * k3p);
        let qn = y + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        let pn = z + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        q.push(qn);
        p.push(pn);
        if outcome == Shot::Survived {
            if let Some(s) = classify(qn, pn) {
                outcome = s;
                if stop_on_event {
                    break;
                }
            }
        }
        if !qn.is_finite() || qn.abs() > 1e6 {
            break;
        }
    }
    Trajectory { q, p, outcome }
}

/// Large-argument expansion of the modified Bessel function `K_ν` for
/// `ν ∈ {0, 1}`, summed until the terms stop shrinking.
pub(crate) fn bessel_k_asymptotic(nu: u32, r: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * r);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        term = next;
        sum += term;
    }
    (PI / (2.0 * r)).sqrt() * (-r).exp() * sum
}

/// Composite trapezoid of `2π ∫ g(r) r dr` on the uniform table.
fn planar_trapezoid(step: f64, len: usize, g: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..len - 1 {
        acc += g(k) * (k as f64 * step);
    }
    acc += 0.5 * g(len - 1) * ((len - 1) as f64 * step);
    2.0 * PI * step * acc
}

/// Shoots for `Q(0)` by bisection on `[1, 3]` and tabulates the profile.
pub fn shoot_q(r_max: f64, step: f64, bisect_tol: f64) -> Result<RadialProfile, ProfileError> {
    if !(r_max >= 15.0) {
        return Err(ProfileError::InvalidInput(format!("r_max = {r_max} < 15")));
    }
    if !(step > 0.0 && step <= 1e-3) {
        return Err(ProfileError::InvalidInput(format!("step = {step} not in (0, 1e-3]")));
    }
    if !(bisect_tol > 0.0 && bisect_tol <= 1e-10) {
        return Err(ProfileError::InvalidInput(format!(
            "bisect_tol = {bisect_tol} not in (0, 1e-10]"
        )));
    }
    let steps = (r_max / step).round() as usize;
    let (mut lo, mut hi) = BRACKET;
    let lo_shot = integrate(lo, step, steps, true).outcome;
    let hi_shot = integrate(hi, step, steps, true).outcome;
    if lo_shot != Shot::Overshoot || hi_shot != Shot::Undershoot {
        return Err(ProfileError::BracketFailure { lo, hi });
    }
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match integrate(mid, step, steps, true).outcome {
            Shot::Undershoot => hi = mid,
            Shot::Overshoot => lo = mid,
            Shot::Survived => {
                lo = mid;
                hi = mid;
            }
        }
    }
    let q0 = 0.5 * (lo + hi);
    let mid = integrate(q0, step, steps, false);
    let below = integrate(lo, step, steps, false);
    let above = integrate(hi, step, steps, false);

    // Hand over to the tail where the bracket trajectories start to disagree.
    let usable = mid.q.len().min(below.q.len()).min(above.q.len());
    let mut m = usable - 1;
    for k in 1..usable {
        let qk = mid.q[k];
        if qk <= 0.0 || mid.p[k] >= 0.0 || (above.q[k] - below.q[k]).abs() > MATCH_DIVERGENCE * qk
        {
            m = k.saturating_sub(1).max(1);
            break;
        }
    }
    let match_radius = m as f64 * step;
    if mid.q[m] > 1e-2 {
        return Err(ProfileError::StepTooCoarse {
            residual: mid.q[m],
        });
    }
    let tail_amplitude = mid.q[m] / bessel_k_asymptotic(0, match_radius);

    let len = steps + 1;
    let mut values = Vec::with_capacity(len);
    let mut slopes = Vec::with_capacity(len);
    for k in 0..len {
        if k <= m {
            values.push(mid.q[k]);
            slopes.push(mid.p[k]);
        } else {
            let r = k as f64 * step;
            values.push(tail_amplitude * bessel_k_asymptotic(0, r));
            slopes.push(-tail_amplitude * bessel_k_asymptotic(1, r));
        }
    }

    // Beyond r_max: Q ≈ C sqrt(π/2r) e^{-r}, so f(r) r ≈ C²(π/2) r^j e^{-2r}.
    let c2 = tail_amplitude * tail_amplitude * PI / 2.0;
    let e = (-2.0 * r_max).exp();
    let tail0 = 2.0 * PI * c2 * e / 2.0;
    let tail2 = 2.0 * PI * c2 * e * (r_max * r_max / 2.0 + r_max / 2.0 + 0.25);

    let mass = planar_trapezoid(step, len, |k| values[k] * values[k]) + tail0;
    let kinetic = planar_trapezoid(step, len, |k| slopes[k] * slopes[k]) + tail0;
    let quartic = planar_trapezoid(step, len, |k| values[k].powi(4));
    let second_moment = planar_trapezoid(step, len, |k| {
        let r = k as f64 * step;
        r * r * values[k] * values[k]
    }) + tail2;

    let profile = RadialProfile {
        r_max: steps as f64 * step,
        step,
        values,
        slopes,
        q0,
        mass,
        kinetic,
        quartic,
        second_moment,
        match_radius,
        tail_amplitude,
    };
    let residual = profile.identity_residuals().max();
    if residual > 1e-4 {
        return Err(ProfileError::StepTooCoarse { residual });
    }
    Ok(profile)
}

/// Relative residuals of `∫|∇Q|² = ∫Q² = ½∫Q⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `|kinetic - mass| / mass`
    pub kinetic_mass: f64,
    /// `|quartic - 2 mass| / quartic`
    pub quartic_mass: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.kinetic_mass.max(self.quartic_mass)
    }
}

impl RadialProfile {
    /// `a* = ‖Q‖₂²`.
    pub fn a_star(&self) -> f64 {
        self.mass
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        IdentityResiduals {
            kinetic_mass: (self.kinetic - self.mass).abs() / self.mass,
            quartic_mass: (self.quartic - 2.0 * self.mass).abs() / self.quartic,
        }
    }

    /// `Q(r)`: cubic Hermite on the table, Bessel tail beyond it.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return self.tail_amplitude * bessel_k_asymptotic(0, r);
        }
        let (k, t) = self.locate(r);
        let h = self.step;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `Q'(r)` for `r ≥ 0`.
    pub fn slope(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return -self.tail_amplitude * bessel_k_asymptotic(1, r);
        }
        let (k, t) = self.locate(r);
        let h = self.step;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let x = r / self.step;
        let k = (x.floor() as usize).min(self.values.len() - 2);
        (k, x - k as f64)
    }

    /// Radii of the table nodes.
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.step)
    }
}

/// `λ₀ = (½∫|x|²Q²)^{1/4}`.
///
/// The defining quantity is `∫|y₀·x|² Q²(x) dx / A²` for a point `y₀` with
/// `|y₀| = A`. Writing `y₀ = A e` with a unit vector `e`, the integrand is
/// `A² (e·x)² Q²`, so the `A²` cancels, and because `Q` is radial the
/// average of `(e·x)²` over directions is `|x|²/2`. The result therefore
/// depends only on `Q`.
pub fn lambda0(profile: &RadialProfile) -> f64 {
    (profile.second_moment / 2.0).powf(0.25)
}

/// `λ₀` evaluated from the unreduced directional moment about the point
/// `y0 ≠ 0` by polar quadrature on the radial table. Agrees with
/// [`lambda0`] for every `y0`.
pub fn lambda0_about(profile: &RadialProfile, y0: (f64, f64)) -> f64 {
    let a2 = y0.0 * y0.0 + y0.1 * y0.1;
    let angles = 64;
    let dtheta = 2.0 * PI / angles as f64;
    let mut angular = 0.0;
    for j in 0..angles {
        let th = j as f64 * dtheta;
        let proj = y0.0 * th.cos() + y0.1 * th.sin();
        angular += proj * proj * dtheta;
    }
    // ∫ r³ Q² dr on the table (same trapezoid as the stored moment).
    let len = profile.values.len();
    let step = profile.step;
    let radial = planar_trapezoid(step, len, |k| {
        let r = k as f64 * step;
        r * r * profile.values[k] * profile.values[k]
    }) / (2.0 * PI);
    (angular * radial / a2).powf(0.25)
}

/// Limit of `e(a)/(a* - a)^{1/2}`: `(2/a*) λ₀²`.
pub fn predicted_coefficient(profile: &RadialProfile) -> f64 {
    let l = lambda0(profile);
    2.0 / profile.mass * l * l
}

/// Samples `(β/√a*) Q(β|x - c|)` on the grid without renormalizing.
pub fn sample_field_unnormalized(
    profile: &RadialProfile,
    grid: &Grid2D,
    center: (f64, f64),
    beta: f64,
) -> Result<Field2D, FieldError> {
    let half = grid.box_length / 2.0;
    let (cx, cy) = center;
    if !(cx >= -half && cx < half && cy >= -half && cy < half) {
        return Err(FieldError::CenterOutsideBox { x: cx, y: cy });
    }
    let edge = (half - cx.abs()).min(half - cy.abs());
    if beta * edge < 10.0 {
        return Err(FieldError::TailsNotResolved(format!(
            "beta * edge distance = {} < 10",
            beta * edge
        )));
    }
    let amp = beta / profile.mass.sqrt();
    let n = grid.n;
    let mut values = vec![0.0; n * n];
    crate::par::fill_indexed(&mut values, |idx| {
        let (x, y) = grid.coords(idx / n, idx % n);
        let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
        amp * profile.value(beta * r)
    });
    Field2D::new(*grid, values)
}

/// Samples the scaled profile and renormalizes it to unit discrete mass.
/// The renormalization factor is `1 + o(1)` when the tails are resolved.
pub fn sample_field(
    profile: &RadialProfile,
    grid: &Grid2D,
    center: (f64, f64),
    beta: f64,
) -> Result<Field2D, FieldError> {
    let raw = sample_field_unnormalized(profile, grid, center, beta)?;
    crate::grid::normalize(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn profile() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| shoot_q(20.0, 1e-3, 1e-12).unwrap())
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(matches!(shoot_q(10.0, 1e-3, 1e-12), Err(ProfileError::InvalidInput(_))));
        assert!(matches!(shoot_q(20.0, 1e-2, 1e-12), Err(ProfileError::InvalidInput(_))));
        assert!(matches!(shoot_q(20.0, 1e-3, 1e-6), Err(ProfileError::InvalidInput(_))));
    }

    #[test]
    fn profile_is_positive_and_decreasing() {
        let p = profile();
        assert!(p.values.iter().all(|&q| q > 0.0));
        assert!(p.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn decay_envelope_beyond_five() {
        let p = profile();
        let q5 = p.value(5.0);
        for (r, &q) in p.radii().zip(&p.values) {
            if r >= 5.0 {
                assert!(q <= 2.0 * q5 * (-(r - 5.0)).exp(), "r = {r}");
            }
        }
    }

    #[test]
    fn hermite_reproduces_nodes_and_slopes() {
        let p = profile();
        for k in [0usize, 10, 1234, 5000] {
            let r = k as f64 * p.step;
            assert_eq!(p.value(r), p.values[k]);
        }
        let r = 1.2345;
        let fd = (p.value(r + 1e-5) - p.value(r - 1e-5)) / 2e-5;
        assert!((fd - p.slope(r)).abs() < 1e-8);
    }

    #[test]
    fn bessel_tail_matches_reference_values() {
        // K0(10), K1(10) from standard tables.
        assert!((bessel_k_asymptotic(0, 10.0) / 1.778_006_231_616_917e-5 - 1.0).abs() < 1e-9);
        assert!((bessel_k_asymptotic(1, 10.0) / 1.864_877_345_382_558e-5 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda0_of_unit_moment() {
        let mut p = profile().clone();
        p.second_moment = 2.0;
        assert_eq!(lambda0(&p), 1.0);
        p.mass = 2.0;
        assert_eq!(predicted_coefficient(&p), 1.0);
    }

    #[test]
    fn lambda0_independent_of_ring_radius() {
        let p = profile();
        let a = lambda0_about(p, (0.5, 0.0));
        let b = lambda0_about(p, (3.0, 0.0));
        let c = lambda0_about(p, (0.0, -2.0));
        assert!((a - b).abs() < 1e-14 * a);
        assert!((a - c).abs() < 1e-12 * a);
        assert!((a - lambda0(p)).abs() < 1e-10);
    }

    #[test]
    fn sample_field_rejects_bad_centers() {
        let g = Grid2D::new(64, 32.0).unwrap();
        assert!(matches!(
            sample_field(profile(), &g, (16.5, 0.0), 1.0),
            Err(FieldError::CenterOutsideBox { .. })
        ));
        assert!(matches!(
            sample_field(profile(), &g, (10.0, 0.0), 1.0),
            Err(FieldError::TailsNotResolved(_))
        ));
    }
}
