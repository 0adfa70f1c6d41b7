use std::f64::consts::PI;
use std::sync::OnceLock;

use gpring::grid::{self, Field2D, Grid2D};
use gpring::townes::{self, RadialProfile};
use gpring::gn;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| townes::shoot_q(40.0, 1e-3, 1e-13).unwrap())
}

/// `exp(-r²/2σ²) cos(kx)`.
fn modulated_gaussian(grid: Grid2D, sigma: f64, k: f64) -> Field2D {
    Field2D::from_fn(grid, move |x, y| (-(x * x + y * y) / (2.0 * sigma * sigma)).exp() * (k * x).cos())
}

// Closed forms for the modulated Gaussian, with s = kσ.
fn closed_forms(sigma: f64, k: f64) -> (f64, f64, f64) {
    let s2 = (k * sigma).powi(2);
    let mass = PI * sigma * sigma / 2.0 * (1.0 + (-s2).exp());
    let kinetic = PI / 2.0 * (1.0 + (-s2).exp() + s2);
    let quartic = PI * sigma * sigma / 2.0 * (0.375 + 0.5 * (-s2 / 2.0).exp() + 0.125 * (-2.0 * s2).exp());
    (mass, kinetic, quartic)
}

#[test]
fn modulated_gaussian_matches_closed_forms() {
    let g = Grid2D::new(256, 20.0).unwrap();
    for &(sigma, k) in &[(1.0, 0.0), (1.0, 1.5), (0.7, 2.3), (1.4, 0.8)] {
        let u = modulated_gaussian(g, sigma, k);
        let (m, kin, q) = closed_forms(sigma, k);
        assert!((grid::mass(&u) - m).abs() < 1e-10 * m);
        assert!((grid::kinetic(&u) - kin).abs() < 1e-10 * kin);
        assert!((grid::quartic(&u) - q).abs() < 1e-10 * q);
        let ratio = grid::gn_ratio(&u, profile().a_star()).unwrap();
        let expected = q / (2.0 / profile().a_star() * kin * m);
        assert!((ratio - expected).abs() < 1e-9, "{ratio} vs {expected}");
        assert!(ratio < 1.0);
    }
}

#[test]
fn gaussian_ratio_has_known_value() {
    // For a radial Gaussian the ratio is a*/(4π) exactly.
    let g = Grid2D::new(128, 16.0).unwrap();
    let r = grid::gn_ratio(&modulated_gaussian(g, 1.0, 0.0), profile().a_star()).unwrap();
    assert!((r - profile().a_star() / (4.0 * PI)).abs() < 1e-10);
}

#[test]
fn random_fields_respect_the_inequality() {
    let s = gn::survey(profile(), Grid2D::new(128, 24.0).unwrap(), 200, 11).unwrap();
    assert_eq!(s.count, 200);
    assert!(s.max_ratio <= 1.0 + 1e-3, "{s:?}");
    assert!(s.min_ratio > 0.0);
    assert!((s.townes_ratio - 1.0).abs() <= 1e-3, "{s:?}");
}

#[test]
fn sampled_q_is_an_optimizer_on_a_fine_grid() {
    let g = Grid2D::new(512, 24.0).unwrap();
    let q = townes::sample_field_unnormalized(profile(), &g, (0.0, 0.0), 1.0).unwrap();
    let r = grid::gn_ratio(&q, profile().a_star()).unwrap();
    assert!((r - 1.0).abs() <= 1e-6, "{r}");
}

#[test]
fn survey_is_seed_deterministic() {
    let g = Grid2D::new(64, 24.0).unwrap();
    let a = gn::survey(profile(), g, 20, 5).unwrap();
    let b = gn::survey(profile(), g, 20, 5).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ratio_is_scale_invariant(seed in 0u64..1000, c in 0.1f64..10.0) {
        let g = Grid2D::new(64, 24.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = gn::random_smooth_field(g, &mut rng);
        let a = grid::gn_ratio(&u, profile().a_star()).unwrap();
        let b = grid::gn_ratio(&u.scaled(c), profile().a_star()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(a <= 1.0 + 1e-3);
    }
}
