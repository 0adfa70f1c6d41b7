//! Numerical survey of the Gagliardo–Nirenberg ratio over random smooth
//! fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::grid::{self, Field2D, Grid2D};
use crate::par;
use crate::townes::{self, RadialProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnSurvey {
    pub count: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Ratio of the sampled profile `Q` itself.
    pub townes_ratio: f64,
}

/// Sum of one to four Gaussians with random signs, widths and centers,
/// optionally modulated by a plane wave.
pub fn random_smooth_field(grid: Grid2D, rng: &mut impl Rng) -> Field2D {
    let reach = 0.2 * grid.box_length;
    let terms: Vec<(f64, f64, f64, f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (
                rng.gen_range(-reach..reach),
                rng.gen_range(-reach..reach),
                rng.gen_range(0.3..1.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Field2D::from_fn(grid, move |x, y| {
        terms
            .iter()
            .map(|&(cx, cy, w, amp, k, th)| {
                let (dx, dy) = (x - cx, y - cy);
                let wave = (k * (dx * th.cos() + dy * th.sin())).cos();
                amp * wave * (-(dx * dx + dy * dy) / (2.0 * w * w)).exp()
            })
            .sum()
    })
}

pub fn survey(profile: &RadialProfile, grid: Grid2D, count: usize, seed: u64) -> Result<GnSurvey, FieldError> {
    let a_star = profile.a_star();
    let ratios = par::map_range(count, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        grid::gn_ratio(&random_smooth_field(grid, &mut rng), a_star)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let q = townes::sample_field_unnormalized(profile, &grid, (0.0, 0.0), 1.0)?;
    Ok(GnSurvey {
        count,
        max_ratio: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_ratio: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        townes_ratio: grid::gn_ratio(&q, a_star)?,
    })
}
