//! Diagnostics on families of ground states as `a ↗ a*`: energy and quartic
//! scaling fits, location of the peak relative to the ring, comparison of the
//! rescaled minimizer with the Townes profile, angular asymmetry, and
//! multi-start uniqueness probes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::grid::{self, Field2D, Grid2D};
use crate::interp::{self, Interpolator, Stencil};
use crate::par;
use crate::potential::PotentialSpec;
use crate::solver::{self, GroundState, SolveConfig};
use crate::townes::{self, RadialProfile};

/// Angles per circle in the asymmetry metric.
pub const ASYMMETRY_ANGLES: usize = 256;
/// Angles tried by the rotation-modded distance.
pub const ROTATION_ANGLES: usize = 720;
/// Radius of the profile comparison ball, in units of `1/λ₀`.
pub const PROFILE_BALL: f64 = 10.0;
/// Concentration regime: `a* - a ≤ CONCENTRATION_GAP · a*`.
pub const CONCENTRATION_GAP: f64 = 0.1;
/// Resolution floor: the fit window requires `ε_a ≥ RESOLUTION_CELLS · h`.
pub const RESOLUTION_CELLS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub a: f64,
    /// `a* - a`.
    pub gap: f64,
    pub energy: f64,
    pub multiplier: f64,
    pub quartic_norm: f64,
    /// `ε_a = (a* - a)^{1/4}`.
    pub eps: f64,
    pub max_point: (f64, f64),
    /// `|x_a| - A`.
    pub ring_offset: f64,
    /// `(|x_a| - A)/ε_a`.
    pub scaled_offset: f64,
    /// Only inside the concentration regime.
    pub profile_err: Option<f64>,
    pub asymmetry: f64,
    /// Whether the record enters the scaling fits.
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Slope of `log e` against `log(a* - a)` over the window.
    pub exponent_fit: f64,
    /// `(gap, e(a)/gap^{1/2})` for every window point.
    pub coefficient_series: Vec<(f64, f64)>,
    /// `(2/a*) λ₀²`.
    pub predicted: f64,
    /// Slope of `log ∫u⁴` against `log(a* - a)`.
    pub quartic_exponent_fit: f64,
    pub window_count: usize,
    pub window_gaps: (f64, f64),
    /// `e/gap^{1/2}` at the smallest window gap.
    pub coefficient_at_smallest_gap: f64,
    /// `max / min` of `|ε_a² μ_a|` over the window.
    pub multiplier_band_ratio: f64,
    /// Constant `c` of the lower bound `e(a) ≥ c (a* - a)^{2/3}`, if a ring.
    pub lower_envelope: Option<f64>,
    /// Every point with a valid lower bound lies above it.
    pub lower_bound_respected: bool,
    /// Smallest gap whose peak the grid resolves: `(3h)⁴`.
    pub min_resolved_gap: f64,
}

/// One sweep point as the scaling fit sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub gap: f64,
    pub energy: f64,
    pub quartic: f64,
    pub multiplier: f64,
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Lower bound on `e(a)` for the ring of radius `A`, obtained from
/// `E_a(u) ≥ λ - (2(a*-a))^{-1} ∫[λ - V]₊²` optimized over `λ`:
/// `e(a) ≥ (3/5) λ*` with `λ* = (3(a*-a)/(4πA))^{2/3}`, valid while
/// `√λ* ≤ A`. Returns `(c, λ*)` with `e ≥ c·gap^{2/3}`.
pub fn ring_lower_bound(ring_radius: f64, gap: f64) -> Option<(f64, f64)> {
    if ring_radius <= 0.0 || gap <= 0.0 {
        return None;
    }
    let c = 0.6 * (3.0 / (4.0 * PI * ring_radius)).powf(2.0 / 3.0);
    let lambda = (3.0 * gap / (4.0 * PI * ring_radius)).powf(2.0 / 3.0);
    (lambda.sqrt() <= ring_radius).then_some((c, lambda))
}

fn decades(gaps: &[f64]) -> f64 {
    let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().cloned().fold(0.0, f64::max);
    (hi / lo).log10()
}

/// Fits over the supplied window points.
pub fn fit_scaling(
    points: &[ScalingPoint],
    predicted: f64,
    ring_radius: Option<f64>,
    min_resolved_gap: f64,
) -> Result<ScalingReport, AnalysisError> {
    let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
    let span = if points.is_empty() { 0.0 } else { decades(&gaps) };
    if points.len() < 4 || span < 1.5 - 1e-9 {
        return Err(AnalysisError::InsufficientSpan {
            count: points.len(),
            decades: span,
        });
    }
    let lx: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let le: Vec<f64> = points.iter().map(|p| p.energy.ln()).collect();
    let lq: Vec<f64> = points.iter().map(|p| p.quartic.ln()).collect();
    let (exponent_fit, _) = linear_fit(&lx, &le);
    let (quartic_exponent_fit, _) = linear_fit(&lx, &lq);
    let coefficient_series: Vec<(f64, f64)> = points.iter().map(|p| (p.gap, p.energy / p.gap.sqrt())).collect();
    let smallest = coefficient_series
        .iter()
        .cloned()
        .fold((f64::INFINITY, 0.0), |b, c| if c.0 < b.0 { c } else { b });
    let band: Vec<f64> = points.iter().map(|p| (p.gap.sqrt() * p.multiplier).abs()).collect();
    let band_max = band.iter().cloned().fold(0.0, f64::max);
    let band_min = band.iter().cloned().fold(f64::INFINITY, f64::min);
    let lower_envelope = ring_radius.and_then(|r| ring_lower_bound(r, 1e-12)).map(|b| b.0);
    let lower_bound_respected = points.iter().all(|p| match ring_radius.and_then(|r| ring_lower_bound(r, p.gap)) {
        Some((c, _)) => p.energy >= c * p.gap.powf(2.0 / 3.0),
        None => true,
    });
    Ok(ScalingReport {
        exponent_fit,
        coefficient_series,
        predicted,
        quartic_exponent_fit,
        window_count: points.len(),
        window_gaps: (
            gaps.iter().cloned().fold(f64::INFINITY, f64::min),
            gaps.iter().cloned().fold(0.0, f64::max),
        ),
        coefficient_at_smallest_gap: smallest.1,
        multiplier_band_ratio: band_max / band_min,
        lower_envelope,
        lower_bound_respected,
        min_resolved_gap,
    })
}

/// Sub-grid maximum: 2D least-squares quadratic on the 3×3 neighborhood of
/// the largest node, then Newton polish on the interpolant.
pub fn max_point(u: &Field2D, it: &Interpolator) -> (f64, f64) {
    let g = u.grid;
    let n = g.n as i64;
    let h = g.spacing();
    let (k, _) = u.argmax();
    let (i, j) = ((k / g.n) as i64, (k % g.n) as i64);
    let f = |di: i64, dj: i64| u.values[((i + di).rem_euclid(n) * n + (j + dj).rem_euclid(n)) as usize];
    let (mut c1, mut c2, mut c3, mut c4, mut c5) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for di in -1..=1i64 {
        for dj in -1..=1i64 {
            let v = f(di, dj);
            let (x, y) = (di as f64, dj as f64);
            c1 += x * v / 6.0;
            c2 += y * v / 6.0;
            c3 += (x * x - 2.0 / 3.0) * v / 2.0;
            c5 += (y * y - 2.0 / 3.0) * v / 2.0;
            c4 += x * y * v / 4.0;
        }
    }
    // Stationary point of c1 x + c2 y + c3 x² + c4 xy + c5 y².
    let det = 4.0 * c3 * c5 - c4 * c4;
    let (mut dx, mut dy) = if det > 0.0 && c3 < 0.0 {
        ((-c1 * 2.0 * c5 + c2 * c4) / det, (-c2 * 2.0 * c3 + c1 * c4) / det)
    } else {
        (0.0, 0.0)
    };
    dx = dx.clamp(-1.0, 1.0);
    dy = dy.clamp(-1.0, 1.0);
    let (x0, y0) = g.coords(i as usize, j as usize);
    let mut p = (x0 + dx * h, y0 + dy * h);

    let d = 0.25 * it.fine.spacing();
    for _ in 0..8 {
        let c = it.eval(p.0, p.1);
        let xp = it.eval(p.0 + d, p.1);
        let xm = it.eval(p.0 - d, p.1);
        let yp = it.eval(p.0, p.1 + d);
        let ym = it.eval(p.0, p.1 - d);
        let pp = it.eval(p.0 + d, p.1 + d);
        let pm = it.eval(p.0 + d, p.1 - d);
        let mp = it.eval(p.0 - d, p.1 + d);
        let mm = it.eval(p.0 - d, p.1 - d);
        let gx = (xp - xm) / (2.0 * d);
        let gy = (yp - ym) / (2.0 * d);
        let hxx = (xp - 2.0 * c + xm) / (d * d);
        let hyy = (yp - 2.0 * c + ym) / (d * d);
        let hxy = (pp - pm - mp + mm) / (4.0 * d * d);
        let det = hxx * hyy - hxy * hxy;
        if !(det > 0.0 && hxx < 0.0) {
            break;
        }
        let sx = -(hyy * gx - hxy * gy) / det;
        let sy = -(hxx * gy - hxy * gx) / det;
        if sx.hypot(sy) > h {
            break;
        }
        p = (p.0 + sx, p.1 + sy);
        if sx.hypot(sy) < 1e-13 * h {
            break;
        }
    }
    p
}

/// `‖w - β Q(β|·|)/√a*‖₂` over the ball `|x| ≤ 10/λ₀`, where
/// `w(x) = ε u(center + ε x)`. Samples sit at `center + ε x = center + (p, q) h`.
pub fn profile_error(
    it: &Interpolator,
    profile: &RadialProfile,
    center: (f64, f64),
    eps: f64,
    beta: f64,
) -> Result<f64, AnalysisError> {
    let g = it.coarse;
    let h = g.spacing();
    let lambda = townes::lambda0(profile);
    let ball = PROFILE_BALL / lambda;
    let reach = eps * ball;
    let half = 0.5 * g.box_length;
    if center.0.abs() + reach >= half || center.1.abs() + reach >= half {
        return Err(AnalysisError::WindowOutsideGrid {
            x: center.0,
            y: center.1,
            radius: reach,
        });
    }
    let dw = h / eps;
    let m = (ball / dw).floor() as i64;
    let side = (2 * m + 1) as usize;
    let amp = beta / profile.mass.sqrt();
    let sum = par::sum_by(side * side, |idx| {
        let p = (idx / side) as i64 - m;
        let q = (idx % side) as i64 - m;
        let (wx, wy) = (p as f64 * dw, q as f64 * dw);
        let r = wx.hypot(wy);
        if r > ball {
            return 0.0;
        }
        let w = eps * it.eval(center.0 + p as f64 * h, center.1 + q as f64 * h);
        let reference = amp * profile.value(beta * r);
        (w - reference).powi(2)
    });
    Ok((sum * dw * dw).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub max_point: (f64, f64),
    pub ring_offset: f64,
    pub scaled_offset: f64,
    pub profile_err: f64,
}

fn gap_of(gs: &GroundState, profile: &RadialProfile) -> Result<f64, AnalysisError> {
    let gap = profile.a_star() - gs.a;
    if gap > 0.0 {
        Ok(gap)
    } else {
        Err(AnalysisError::NotBelowCritical {
            a: gs.a,
            a_star: profile.a_star(),
        })
    }
}

/// Peak location and rescaled-profile error of a concentrated minimizer.
pub fn concentration(gs: &GroundState, profile: &RadialProfile, ring_radius: f64) -> Result<Concentration, AnalysisError> {
    let it = Interpolator::new(&gs.field, Stencil::Quintic);
    concentration_with(gs, &it, profile, ring_radius)
}

fn concentration_with(
    gs: &GroundState,
    it: &Interpolator,
    profile: &RadialProfile,
    ring_radius: f64,
) -> Result<Concentration, AnalysisError> {
    let gap = gap_of(gs, profile)?;
    let eps = gap.powf(0.25);
    let xa = max_point(&gs.field, it);
    let ring_offset = xa.0.hypot(xa.1) - ring_radius;
    let profile_err = profile_error(it, profile, xa, eps, townes::lambda0(profile))?;
    Ok(Concentration {
        max_point: xa,
        ring_offset,
        scaled_offset: ring_offset / eps,
        profile_err,
    })
}

/// `‖u - ū‖₂` with `ū` the angular average over circles about the origin,
/// by polar quadrature: 256 angles on each of `2n` radii up to `L/2`.
pub fn asymmetry(u: &Field2D) -> f64 {
    let it = Interpolator::new(u, Stencil::Quintic);
    asymmetry_with(&it, ASYMMETRY_ANGLES)
}

pub fn asymmetry_with(it: &Interpolator, angles: usize) -> f64 {
    let g = it.coarse;
    let radii = 2 * g.n;
    let dr = 0.5 * g.box_length / radii as f64;
    let dth = 2.0 * PI / angles as f64;
    let trig: Vec<(f64, f64)> = (0..angles).map(|j| (j as f64 * dth).sin_cos()).collect();
    let total = par::sum_by(radii, |k| {
        let r = (k as f64 + 0.5) * dr;
        let samples: Vec<f64> = trig.iter().map(|&(s, c)| it.eval(r * c, r * s)).collect();
        let mean = samples.iter().sum::<f64>() / angles as f64;
        let dev: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
        dev * r * dr * dth
    });
    total.sqrt().min(2f64.sqrt())
}

/// Record for one state; `profile_err` only inside the concentration regime.
pub fn sweep_record(gs: &GroundState, profile: &RadialProfile, ring_radius: f64) -> Result<SweepRecord, AnalysisError> {
    let it = Interpolator::new(&gs.field, Stencil::Quintic);
    record_with(gs, &it, profile, ring_radius)
}

fn record_with(
    gs: &GroundState,
    it: &Interpolator,
    profile: &RadialProfile,
    ring_radius: f64,
) -> Result<SweepRecord, AnalysisError> {
    let gap = gap_of(gs, profile)?;
    let eps = gap.powf(0.25);
    let h = gs.field.grid.spacing();
    let asym = asymmetry_with(it, ASYMMETRY_ANGLES);
    let concentrated = gap <= CONCENTRATION_GAP * profile.a_star();
    let (max_point, ring_offset, profile_err) = if concentrated {
        let c = concentration_with(gs, it, profile, ring_radius)?;
        (c.max_point, c.ring_offset, Some(c.profile_err))
    } else {
        let p = max_point(&gs.field, it);
        (p, p.0.hypot(p.1) - ring_radius, None)
    };
    Ok(SweepRecord {
        a: gs.a,
        gap,
        energy: gs.energy,
        multiplier: gs.multiplier,
        quartic_norm: grid::quartic(&gs.field),
        eps,
        max_point,
        ring_offset,
        scaled_offset: ring_offset / eps,
        profile_err,
        asymmetry: asym,
        in_window: concentrated && eps >= RESOLUTION_CELLS * h && gs.energy > 0.0,
    })
}

/// Every state becomes a record; states with `gap ≤ 0.1 a*` and `ε ≥ 3h`
/// enter the fits.
pub fn analyze_sweep(
    states: &[GroundState],
    profile: &RadialProfile,
    ring_radius: f64,
) -> Result<(Vec<SweepRecord>, ScalingReport), AnalysisError> {
    let records = states
        .iter()
        .map(|gs| sweep_record(gs, profile, ring_radius))
        .collect::<Result<Vec<_>, _>>()?;
    let min_resolved_gap = states
        .iter()
        .map(|gs| (RESOLUTION_CELLS * gs.field.grid.spacing()).powi(4))
        .fold(0.0, f64::max);
    let report = scaling_from_records(&records, profile, ring_radius, min_resolved_gap)?;
    Ok((records, report))
}

pub fn scaling_from_records(
    records: &[SweepRecord],
    profile: &RadialProfile,
    ring_radius: f64,
    min_resolved_gap: f64,
) -> Result<ScalingReport, AnalysisError> {
    let points: Vec<ScalingPoint> = records
        .iter()
        .filter(|r| r.in_window)
        .map(|r| ScalingPoint {
            gap: r.gap,
            energy: r.energy,
            quartic: r.quartic_norm,
            multiplier: r.multiplier,
        })
        .collect();
    fit_scaling(
        &points,
        townes::predicted_coefficient(profile),
        (ring_radius > 0.0).then_some(ring_radius),
        min_resolved_gap,
    )
}

/// `profile_error` of `gs` about its refined maximum for each `β`.
pub fn beta_scan(gs: &GroundState, profile: &RadialProfile, betas: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let eps = gap_of(gs, profile)?.powf(0.25);
    let it = Interpolator::new(&gs.field, Stencil::Quintic);
    let center = max_point(&gs.field, &it);
    betas.iter().map(|&b| profile_error(&it, profile, center, eps, b)).collect()
}

/// Smallest `‖u - R_θ v‖₂` over `θ = 2πm/720`, together with the best `θ`.
///
/// Angles are ranked by `⟨u, R_θ v⟩` over the support of `u` (the rotated
/// norm is angle independent up to interpolation error); the full distance
/// is then evaluated at the best angle and its two neighbors.
pub fn rotation_modded_distance(u: &Field2D, v: &Field2D) -> (f64, f64) {
    let plain = grid::l2_distance(u, v);
    let it = Interpolator::new(v, Stencil::Cubic);
    let g = u.grid;
    let peak = u.values.iter().cloned().fold(0.0, f64::max);
    let support: Vec<usize> = (0..g.len()).filter(|&k| u.values[k].abs() > 1e-10 * peak).collect();
    let step = 2.0 * PI / ROTATION_ANGLES as f64;
    let scores = par::map_range(ROTATION_ANGLES, |m| {
        let (s, c) = (m as f64 * step).sin_cos();
        let mut acc = 0.0;
        for &k in &support {
            let (x, y) = g.node(k);
            acc += u.values[k] * it.eval(c * x + s * y, -s * x + c * y);
        }
        acc
    });
    let best = scores
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |b, (m, &s)| if s > b.1 { (m, s) } else { b })
        .0;
    let mut out = (plain, 0.0);
    for dm in [-1i64, 0, 1] {
        let m = (best as i64 + dm).rem_euclid(ROTATION_ANGLES as i64) as usize;
        let angle = m as f64 * step;
        let d = grid::l2_distance(u, &interp::rotate_with(&it, angle));
        if d < out.0 {
            out = (d, angle);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub max_pairwise_dist: f64,
    pub max_mod_rotation_dist: f64,
    pub energies: Vec<f64>,
}

/// Random smooth positive start: a dominant Gaussian bump at angle
/// `2π(k + U)/count` plus two weaker bumps at random positions.
pub fn random_smooth_init(grid: Grid2D, v: &PotentialSpec, k: usize, count: usize, seed: u64) -> Field2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let radius = v.ring_radius().unwrap_or(0.0);
    let theta = 2.0 * PI * (k as f64 + rng.gen_range(0.0..1.0)) / count as f64;
    let rho = if radius > 0.0 { radius * rng.gen_range(0.8..1.2) } else { rng.gen_range(0.0..0.5) };
    let mut bumps = vec![((rho * theta.cos(), rho * theta.sin()), rng.gen_range(0.3..0.8), 1.0)];
    for _ in 0..2 {
        let t = rng.gen_range(0.0..2.0 * PI);
        let r = rng.gen_range(0.0..(radius + 1.0));
        bumps.push(((r * t.cos(), r * t.sin()), rng.gen_range(0.4..1.0), 0.3));
    }
    Field2D::from_fn(grid, move |x, y| {
        bumps
            .iter()
            .map(|&((cx, cy), w, amp)| amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp())
            .sum()
    })
}

/// Minimizes from `n_starts` seeded random inits and compares the results.
pub fn uniqueness_probe(
    v: &PotentialSpec,
    grid: &Grid2D,
    a: f64,
    n_starts: usize,
    seed: u64,
    cfg: &SolveConfig,
) -> Result<UniquenessReport, AnalysisError> {
    let starts = n_starts.max(1);
    let solved = par::map_range(starts, |k| {
        let init = random_smooth_init(*grid, v, k, starts, seed);
        solver::minimize(v, a, &init, cfg)
    });
    let states = solved.into_iter().collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(usize, usize)> = (0..starts).flat_map(|i| (i + 1..starts).map(move |j| (i, j))).collect();
    let mut max_pairwise: f64 = 0.0;
    let mut max_mod: f64 = 0.0;
    for &(i, j) in &pairs {
        let (u, w) = (&states[i].field, &states[j].field);
        let d = grid::l2_distance(u, w);
        max_pairwise = max_pairwise.max(d);
        let m = if d <= 1e-6 { d } else { rotation_modded_distance(u, w).0 };
        max_mod = max_mod.max(m);
    }
    Ok(UniquenessReport {
        max_pairwise_dist: max_pairwise,
        max_mod_rotation_dist: max_mod,
        energies: states.iter().map(|s| s.energy).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_fits_exactly() {
        let points: Vec<ScalingPoint> = (0..8)
            .map(|k| {
                let gap = 1e-1 * 10f64.powf(-2.0 * k as f64 / 7.0);
                ScalingPoint {
                    gap,
                    energy: 0.45 * gap.sqrt(),
                    quartic: 3.0 / gap.sqrt(),
                    multiplier: -2.6 / gap.sqrt(),
                }
            })
            .collect();
        let r = fit_scaling(&points, 0.45, Some(1.0), 1e-4).unwrap();
        assert!((r.exponent_fit - 0.5).abs() < 1e-12);
        assert!((r.quartic_exponent_fit + 0.5).abs() < 1e-12);
        assert!((r.coefficient_at_smallest_gap - 0.45).abs() < 1e-12);
        assert!((r.multiplier_band_ratio - 1.0).abs() < 1e-12);
        assert!(r.lower_bound_respected);
    }

    #[test]
    fn insufficient_span_is_rejected() {
        let p = |gap: f64| ScalingPoint {
            gap,
            energy: gap.sqrt(),
            quartic: 1.0,
            multiplier: -1.0,
        };
        let narrow: Vec<_> = [1e-2, 2e-2, 3e-2, 5e-2].iter().map(|&g| p(g)).collect();
        assert!(matches!(
            fit_scaling(&narrow, 1.0, None, 0.0),
            Err(AnalysisError::InsufficientSpan { count: 4, .. })
        ));
        let few: Vec<_> = [1e-3, 1e-1].iter().map(|&g| p(g)).collect();
        assert!(fit_scaling(&few, 1.0, None, 0.0).is_err());
    }

    #[test]
    fn lower_bound_formula() {
        // At the optimal λ the bound λ - (8πA/15g) λ^{5/2} equals 3λ/5.
        let (a, gap) = (1.0, 1e-2);
        let (c, lam) = ring_lower_bound(a, gap).unwrap();
        let direct = lam - 8.0 * PI * a / (15.0 * gap) * lam.powf(2.5);
        assert!((direct - c * gap.powf(2.0 / 3.0)).abs() < 1e-14);
        for f in [0.9, 1.1] {
            let l = lam * f;
            assert!(l - 8.0 * PI * a / (15.0 * gap) * l.powf(2.5) < direct);
        }
        assert!(ring_lower_bound(0.0, gap).is_none());
        assert!(ring_lower_bound(0.1, 10.0).is_none());
    }

    #[test]
    fn radial_gaussian_has_no_asymmetry() {
        let g = Grid2D::new(64, 16.0).unwrap();
        let u = grid::normalize(&Field2D::from_fn(g, |x, y| (-(x * x + y * y) / 2.0).exp())).unwrap();
        assert!(asymmetry(&u) <= 1e-8, "{}", asymmetry(&u));
    }

    #[test]
    fn asymmetry_is_invariant_under_quarter_turns() {
        let g = Grid2D::new(64, 12.0).unwrap();
        let u = grid::normalize(&Field2D::from_fn(g, |x, y| (-((x - 1.0).powi(2) + y * y) * 2.0).exp())).unwrap();
        let a = asymmetry(&u);
        let b = asymmetry(&u.rotate90());
        assert!(a > 0.5);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
    }
}
