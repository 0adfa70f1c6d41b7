//! Trapping potentials: the ring `(|x| - A)²` and products of powers of
//! distances to finitely many points.

use std::borrow::Cow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::Grid2D;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `(|x| - radius)²`; `radius = 0` is the harmonic trap `|x|²`.
    Ring { radius: f64 },
    /// `Π |x - x_i|^{p_i}`.
    PolyProduct { points: Vec<(f64, f64)>, powers: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    #[serde(skip)]
    table: Option<Arc<(Grid2D, Vec<f64>)>>,
}

impl PartialEq for PotentialSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl PotentialSpec {
    pub fn ring(radius: f64) -> Self {
        assert!(radius >= 0.0, "ring radius must be non-negative");
        PotentialSpec {
            kind: PotentialKind::Ring { radius },
            table: None,
        }
    }

    pub fn poly_product(points: Vec<(f64, f64)>, powers: Vec<f64>) -> Self {
        assert_eq!(points.len(), powers.len(), "one exponent per point");
        assert!(powers.iter().all(|&p| p > 0.0), "exponents must be positive");
        PotentialSpec {
            kind: PotentialKind::PolyProduct { points, powers },
            table: None,
        }
    }

    /// Ring radius `A`, or `None` for non-ring potentials.
    pub fn ring_radius(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Ring { radius } => Some(radius),
            _ => None,
        }
    }

    /// A point where the potential vanishes, used to seed perturbations.
    pub fn anchor(&self) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Ring { radius } => (*radius, 0.0),
            PotentialKind::PolyProduct { points, .. } => points.first().copied().unwrap_or((0.0, 0.0)),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, PotentialKind::Ring { .. })
    }

    pub fn table(&self) -> Option<&[f64]> {
        self.table.as_ref().map(|t| t.1.as_slice())
    }

    /// Grid values, from the bound table when it matches `grid`.
    pub fn values_on(&self, grid: &Grid2D) -> Cow<'_, [f64]> {
        match &self.table {
            Some(t) if t.0 == *grid => Cow::Borrowed(&t.1),
            _ => Cow::Owned(tabulate_values(self, grid)),
        }
    }
}

/// Pointwise value.
pub fn evaluate(spec: &PotentialSpec, x: (f64, f64)) -> f64 {
    match &spec.kind {
        PotentialKind::Ring { radius } => {
            let d = x.0.hypot(x.1) - radius;
            d * d
        }
        PotentialKind::PolyProduct { points, powers } => points
            .iter()
            .zip(powers)
            .map(|(p, &e)| ((x.0 - p.0).hypot(x.1 - p.1)).powf(e))
            .product(),
    }
}

fn tabulate_values(spec: &PotentialSpec, grid: &Grid2D) -> Vec<f64> {
    let mut values = vec![0.0; grid.len()];
    par::fill_indexed(&mut values, |idx| evaluate(spec, grid.node(idx)));
    values
}

/// Binds `spec` to `grid` with a precomputed node table.
pub fn tabulate(spec: &PotentialSpec, grid: &Grid2D) -> PotentialSpec {
    PotentialSpec {
        kind: spec.kind.clone(),
        table: Some(Arc::new((*grid, tabulate_values(spec, grid)))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_values() {
        let v = PotentialSpec::ring(1.0);
        assert_eq!(evaluate(&v, (1.0, 0.0)), 0.0);
        assert_eq!(evaluate(&v, (0.0, 0.0)), 1.0);
        let h = PotentialSpec::ring(0.0);
        assert_eq!(evaluate(&h, (0.3, -0.4)), 0.25);
    }

    #[test]
    fn ring_table_minimum_near_circle() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let v = tabulate(&PotentialSpec::ring(1.0), &g);
        let t = v.table().unwrap();
        let h = g.spacing();
        let (k, min) = t
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (k, &x)| if x < b.1 { (k, x) } else { b });
        assert!(min <= (h / 2.0).powi(2));
        let (x, y) = g.node(k);
        assert!((x.hypot(y) - 1.0).abs() <= h);
    }

    #[test]
    fn single_point_square_is_harmonic() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let a = tabulate(&PotentialSpec::poly_product(vec![(0.0, 0.0)], vec![2.0]), &g);
        let b = tabulate(&PotentialSpec::ring(0.0), &g);
        for (x, y) in a.table().unwrap().iter().zip(b.table().unwrap()) {
            assert!((x - y).abs() <= 1e-12 * y.max(1.0));
        }
    }

    #[test]
    fn tabulation_is_deterministic_and_exact() {
        let g = Grid2D::new(64, 6.0).unwrap();
        let spec = PotentialSpec::poly_product(vec![(1.0, 0.5), (-1.0, 0.0)], vec![1.5, 2.0]);
        let a = tabulate(&spec, &g);
        let b = tabulate(&spec, &g);
        assert_eq!(a.table().unwrap(), b.table().unwrap());
        for (idx, &v) in a.table().unwrap().iter().enumerate() {
            assert_eq!(v, evaluate(&spec, g.node(idx)));
        }
    }

    proptest! {
        #[test]
        fn ring_is_rotation_invariant(a in 0.0f64..5.0, x in -6.0f64..6.0, y in -6.0f64..6.0, th in 0.0f64..6.3) {
            let v = PotentialSpec::ring(a);
            let (s, c) = th.sin_cos();
            let r = (c * x - s * y, s * x + c * y);
            let (v0, v1) = (evaluate(&v, (x, y)), evaluate(&v, r));
            prop_assert!((v0 - v1).abs() <= 1e-12 * v0.max(1.0));
        }

        #[test]
        fn potentials_are_non_negative(a in 0.0f64..5.0, x in -6.0f64..6.0, y in -6.0f64..6.0) {
            prop_assert!(evaluate(&PotentialSpec::ring(a), (x, y)) >= 0.0);
            let p = PotentialSpec::poly_product(vec![(a, 0.0), (0.0, -a)], vec![0.5, 3.0]);
            prop_assert!(evaluate(&p, (x, y)) >= 0.0);
        }
    }
}
