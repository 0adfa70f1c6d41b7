//! Off-grid evaluation of periodic fields.
//!
//! The field is first refined spectrally (zero-padding its spectrum) to a
//! fine grid of at least [`FINE_POINTS`] per side, then evaluated with a
//! tensor Lagrange stencil. Both steps commute with the grid symmetries, so
//! exactly radial data stays radial to rounding, and values at coarse nodes
//! are reproduced to rounding.

use rustfft::num_complex::Complex64;

use crate::grid::{Field2D, Grid2D};
use crate::par;
use crate::spectral::Spectral;

/// Minimum side length of the refined grid.
pub const FINE_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// 4 points per axis.
    Cubic,
    /// 6 points per axis.
    Quintic,
}

impl Stencil {
    fn offsets(self) -> std::ops::RangeInclusive<i64> {
        match self {
            Stencil::Cubic => -1..=2,
            Stencil::Quintic => -2..=3,
        }
    }
}

pub struct Interpolator {
    pub coarse: Grid2D,
    pub fine: Grid2D,
    values: Vec<f64>,
    stencil: Stencil,
}

/// `(fine_index, weight)` pairs that each coarse bin feeds.
fn bin_map(n: usize, fine: usize) -> Vec<Vec<(usize, f64)>> {
    (0..n)
        .map(|j| {
            if fine == n {
                vec![(j, 1.0)]
            } else if j < n / 2 {
                vec![(j, 1.0)]
            } else if j == n / 2 {
                vec![(n / 2, 0.5), (fine - n / 2, 0.5)]
            } else {
                vec![(fine - (n - j), 1.0)]
            }
        })
        .collect()
}

fn lagrange_weights(t: f64, stencil: Stencil) -> Vec<f64> {
    let nodes: Vec<f64> = stencil.offsets().map(|o| o as f64).collect();
    nodes
        .iter()
        .enumerate()
        .map(|(m, &xm)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != m)
                .map(|(_, &xk)| (t - xk) / (xm - xk))
                .product()
        })
        .collect()
}

impl Interpolator {
    pub fn new(u: &Field2D, stencil: Stencil) -> Self {
        let coarse = u.grid;
        let n = coarse.n;
        let factor = (FINE_POINTS / n).max(1);
        let nf = n * factor;
        let fine = Grid2D {
            n: nf,
            box_length: coarse.box_length,
        };
        if factor == 1 {
            return Interpolator {
                coarse,
                fine,
                values: u.values.clone(),
                stencil,
            };
        }
        let spec = Spectral::for_grid(&coarse).spectrum(&u.values);
        let map = bin_map(n, nf);
        let scale = (factor * factor) as f64;
        let mut big = vec![Complex64::default(); nf * nf];
        for a in 0..n {
            for &(fa, wa) in &map[a] {
                for b in 0..n {
                    for &(fb, wb) in &map[b] {
                        big[fa * nf + fb] += spec[a * n + b] * (wa * wb * scale);
                    }
                }
            }
        }
        Spectral::for_grid(&fine).inverse(&mut big);
        Interpolator {
            coarse,
            fine,
            values: big.iter().map(|z| z.re).collect(),
            stencil,
        }
    }

    /// Value at an arbitrary point, periodically wrapped into the box.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let nf = self.fine.n as i64;
        let h = self.fine.spacing();
        let half = 0.5 * self.fine.box_length;
        let fx = (x + half) / h;
        let fy = (y + half) / h;
        let (ix, tx) = (fx.floor(), fx - fx.floor());
        let (iy, ty) = (fy.floor(), fy - fy.floor());
        let wx = lagrange_weights(tx, self.stencil);
        let wy = lagrange_weights(ty, self.stencil);
        let mut acc = 0.0;
        for (a, o) in self.stencil.offsets().enumerate() {
            if wx[a] == 0.0 {
                continue;
            }
            let i = (ix as i64 + o).rem_euclid(nf) as usize;
            let row = &self.values[i * nf as usize..(i + 1) * nf as usize];
            let mut s = 0.0;
            for (b, p) in self.stencil.offsets().enumerate() {
                if wy[b] == 0.0 {
                    continue;
                }
                let j = (iy as i64 + p).rem_euclid(nf) as usize;
                s += wy[b] * row[j];
            }
            acc += wx[a] * s;
        }
        acc
    }
}

/// `u` rotated counter-clockwise by `angle` about the origin, resampled at
/// the coarse nodes.
pub fn rotate(u: &Field2D, angle: f64) -> Field2D {
    let it = Interpolator::new(u, Stencil::Quintic);
    rotate_with(&it, angle)
}

pub fn rotate_with(it: &Interpolator, angle: f64) -> Field2D {
    let grid = it.coarse;
    let (s, c) = angle.sin_cos();
    let mut values = vec![0.0; grid.len()];
    par::fill_indexed(&mut values, |idx| {
        let (x, y) = grid.node(idx);
        it.eval(c * x + s * y, -s * x + c * y)
    });
    Field2D { grid, values }
}
