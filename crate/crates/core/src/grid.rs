//! Uniform periodic grid, real fields on it, and the discrete energy.
//!
//! Node `(i, j)` sits at `x = (-L/2 + i h, -L/2 + j h)` and is stored at
//! `values[i * n + j]`. Every quadrature is the plain `h² Σ` rule, which is
//! spectrally accurate for the smooth, rapidly decaying fields used here.

use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::par;
use crate::potential::PotentialSpec;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// Points per side, a power of two `>= 64`.
    pub n: usize,
    /// Side length `L`; the grid spans `[-L/2, L/2)²`.
    pub box_length: f64,
}

impl Grid2D {
    pub fn new(n: usize, box_length: f64) -> Result<Self, FieldError> {
        if n < 64 || !n.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "n = {n} must be a power of two >= 64"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(FieldError::InvalidGrid(format!("box length {box_length} must be positive")));
        }
        Ok(Grid2D { n, box_length })
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.coord(i), self.coord(j))
    }

    /// Coordinates of the node with flat index `idx`.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        self.coords(idx / self.n, idx % self.n)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let half = 0.5 * self.box_length;
        x >= -half && x < half && y >= -half && y < half
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Field2D { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field2D {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        let mut values = vec![0.0; grid.len()];
        par::fill_indexed(&mut values, |idx| {
            let (x, y) = grid.node(idx);
            f(x, y)
        });
        Field2D { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n + j]
    }

    pub fn scaled(&self, c: f64) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Exact rotation by 90° counter-clockwise about the origin, using the
    /// periodic identification of the box.
    pub fn rotate90(&self) -> Field2D {
        let n = self.grid.n;
        let mut values = vec![0.0; n * n];
        // Node (i, j) at (x, y) receives the value from (y, -x), i.e. index
        // (j, (n - i) mod n).
        par::fill_indexed(&mut values, |idx| {
            let (i, j) = (idx / n, idx % n);
            self.values[j * n + (n - i) % n]
        });
        Field2D {
            grid: self.grid,
            values,
        }
    }

    /// Index and value of the largest entry; ties go to the smallest index.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }
}

/// `h² Σ a b`.
pub fn inner(a: &Field2D, b: &Field2D) -> f64 {
    let h = a.grid.spacing();
    par::sum_by(a.values.len(), |i| a.values[i] * b.values[i]) * h * h
}

pub fn l2_distance(a: &Field2D, b: &Field2D) -> f64 {
    let h = a.grid.spacing();
    (par::sum_by(a.values.len(), |i| (a.values[i] - b.values[i]).powi(2)) * h * h).sqrt()
}

/// Discrete mass `h² Σ u²`.
pub fn mass(u: &Field2D) -> f64 {
    let h = u.grid.spacing();
    par::sum_by(u.values.len(), |i| u.values[i] * u.values[i]) * h * h
}

/// `∫|∇u|²`, evaluated spectrally.
pub fn kinetic(u: &Field2D) -> f64 {
    Spectral::for_grid(&u.grid).kinetic(&u.values)
}

/// `∫u⁴` (no `a/2` factor).
pub fn quartic(u: &Field2D) -> f64 {
    let h = u.grid.spacing();
    par::sum_by(u.values.len(), |i| u.values[i].powi(4)) * h * h
}

/// `∫V u²`.
pub fn potential_energy(u: &Field2D, v: &PotentialSpec) -> f64 {
    let table = v.values_on(&u.grid);
    let h = u.grid.spacing();
    par::sum_by(u.values.len(), |i| table[i] * u.values[i] * u.values[i]) * h * h
}

/// `E_a(u) = ∫|∇u|² + ∫V u² - (a/2)∫u⁴`.
pub fn gp_energy(u: &Field2D, v: &PotentialSpec, a: f64) -> f64 {
    kinetic(u) + potential_energy(u, v) - 0.5 * a * quartic(u)
}

/// `∫u⁴ / ((2/a*) ∫|∇u|² ∫u²)`, at most one in the continuum.
pub fn gn_ratio(u: &Field2D, a_star: f64) -> Result<f64, FieldError> {
    let m = mass(u);
    if m == 0.0 {
        return Err(FieldError::ZeroField);
    }
    Ok(quartic(u) / (2.0 / a_star * kinetic(u) * m))
}

/// Rescales `u` to unit discrete mass.
pub fn normalize(u: &Field2D) -> Result<Field2D, FieldError> {
    let m = mass(u);
    if !(m > 0.0) || !m.is_finite() {
        return Err(FieldError::ZeroField);
    }
    Ok(u.scaled(1.0 / m.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid2D, sigma: f64) -> Field2D {
        // Unit-mass Gaussian: (π σ²)^{-1/2} e^{-r²/(2σ²)}.
        let c = 1.0 / (PI * sigma * sigma).sqrt();
        Field2D::from_fn(grid, move |x, y| c * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new(32, 1.0).is_err());
        assert!(Grid2D::new(96, 1.0).is_err());
        assert!(Grid2D::new(64, 0.0).is_err());
        let g = Grid2D::new(64, 16.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.coords(32, 32), (0.0, 0.0));
    }

    #[test]
    fn zero_and_constant_fields() {
        let g = Grid2D::new(64, 4.0).unwrap();
        let z = Field2D::zeros(g);
        assert_eq!(mass(&z), 0.0);
        assert_eq!(quartic(&z), 0.0);
        assert_eq!(normalize(&z), Err(FieldError::ZeroField));
        assert_eq!(gn_ratio(&z, 11.7), Err(FieldError::ZeroField));
        let c = Field2D::from_fn(g, |_, _| 0.5);
        assert!((mass(&c) - 0.25 * 16.0).abs() < 1e-12);
        assert!(kinetic(&c).abs() < 1e-20);
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = Grid2D::new(128, 16.0).unwrap();
        let u = gaussian(g, 1.0);
        assert!((mass(&u) - 1.0).abs() < 1e-8);
        assert!((kinetic(&u) - 1.0).abs() < 1e-6);
        assert!((quartic(&u) - 1.0 / (2.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn quartic_scales_with_fourth_power() {
        let g = Grid2D::new(64, 16.0).unwrap();
        let u = gaussian(g, 1.3);
        let q = quartic(&u);
        assert!((quartic(&u.scaled(3.0)) - 81.0 * q).abs() < 1e-12 * 81.0 * q);
    }

    #[test]
    fn normalize_halves_mass_four_field() {
        let g = Grid2D::new(64, 16.0).unwrap();
        let u = gaussian(g, 1.0).scaled(2.0);
        let m = mass(&u);
        let scaled = u.scaled(2.0 / m.sqrt());
        let nrm = normalize(&scaled).unwrap();
        for (a, b) in nrm.values.iter().zip(&scaled.values) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
        let again = normalize(&nrm).unwrap();
        for (a, b) in again.values.iter().zip(&nrm.values) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn rotate90_four_times_is_identity() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let u = Field2D::from_fn(g, |x, y| (-(x - 1.0).powi(2) - 2.0 * (y + 0.5).powi(2)).exp());
        let r = u.rotate90();
        // The peak moves from (1, -0.5) to (0.5, 1).
        let (k, _) = r.argmax();
        let (x, y) = g.node(k);
        assert!((x - 0.5).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
        assert_eq!(r.rotate90().rotate90().rotate90(), u);
    }

    #[test]
    fn argmax_prefers_smallest_index() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let mut u = Field2D::zeros(g);
        u.values[100] = 2.0;
        u.values[50] = 2.0;
        assert_eq!(u.argmax(), (50, 2.0));
    }
}
