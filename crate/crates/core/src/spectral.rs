//! Periodic FFT machinery on a [`Grid2D`].
//!
//! A 2D transform is a row pass, a transpose and a second row pass. Forward
//! transforms leave the spectrum transposed (`[ky][kx]`); every multiplier
//! used here is symmetric in the two axes, so it is applied in that layout
//! and the inverse transform undoes the transpose.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid2D;
use crate::par;

pub struct Spectral {
    pub grid: Grid2D,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `|k|²` per spectral node.
    k2: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

/// Signed wavenumber of FFT bin `j` on `n` points over length `l`.
pub fn wavenumber(j: usize, n: usize, l: f64) -> f64 {
    let signed = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
    2.0 * std::f64::consts::PI * signed as f64 / l
}

fn cache() -> &'static Mutex<HashMap<(usize, u64), Arc<Spectral>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<Spectral>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    pub fn new(grid: Grid2D) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k: Vec<f64> = (0..n).map(|j| wavenumber(j, n, grid.box_length)).collect();
        let mut k2 = vec![0.0; n * n];
        par::fill_indexed(&mut k2, |idx| {
            let (a, b) = (idx / n, idx % n);
            k[a] * k[a] + k[b] * k[b]
        });
        Spectral { grid, fwd, inv, k2 }
    }

    /// Shared instance for `grid`.
    pub fn for_grid(grid: &Grid2D) -> Arc<Spectral> {
        let key = (grid.n, grid.box_length.to_bits());
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key)
            .or_insert_with(|| Arc::new(Spectral::new(*grid)))
            .clone()
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        let rows_per_task = (par::CHUNK / n).max(1);
        par::for_each_chunk_mut(data, rows_per_task * n, |_, chunk| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
    }

    fn transpose(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.grid.n;
        par::for_each_chunk_mut(dst, n, |row, out| {
            for (col, v) in out.iter_mut().enumerate() {
                *v = src[col * n + row];
            }
        });
    }

    /// Unnormalized forward transform, output in transposed layout.
    pub fn forward(&self, data: &mut Vec<Complex64>) {
        let mut tmp = vec![Complex64::default(); data.len()];
        self.rows(data, &self.fwd);
        self.transpose(data, &mut tmp);
        self.rows(&mut tmp, &self.fwd);
        *data = tmp;
    }

    /// Inverse of [`Spectral::forward`], including the `1/n²` factor.
    pub fn inverse(&self, data: &mut Vec<Complex64>) {
        let n = self.grid.n;
        let mut tmp = vec![Complex64::default(); data.len()];
        self.rows(data, &self.inv);
        self.transpose(data, &mut tmp);
        self.rows(&mut tmp, &self.inv);
        let scale = 1.0 / (n * n) as f64;
        par::for_each_chunk_mut(&mut tmp, par::CHUNK, |_, c| {
            for v in c {
                *v *= scale;
            }
        });
        *data = tmp;
    }

    /// Spectrum of a real field.
    pub fn spectrum(&self, u: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Applies the real symmetric Fourier multiplier `m(|k|²)` to two real
    /// fields at once, packed as real and imaginary parts.
    pub fn apply_pair(&self, a: &[f64], b: &[f64], m: impl Fn(f64) -> f64 + Sync + Send) -> (Vec<f64>, Vec<f64>) {
        let mut data: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward(&mut data);
        let k2 = &self.k2;
        par::for_each_chunk_mut(&mut data, par::CHUNK, |c, chunk| {
            let base = c * par::CHUNK;
            for (i, v) in chunk.iter_mut().enumerate() {
                *v *= m(k2[base + i]);
            }
        });
        self.inverse(&mut data);
        let re = data.iter().map(|z| z.re).collect();
        let im = data.iter().map(|z| z.im).collect();
        (re, im)
    }

    /// Applies `m(|k|²)` to one real field.
    pub fn apply(&self, a: &[f64], m: impl Fn(f64) -> f64 + Sync + Send) -> Vec<f64> {
        let mut data: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut data);
        let k2 = &self.k2;
        par::for_each_chunk_mut(&mut data, par::CHUNK, |c, chunk| {
            let base = c * par::CHUNK;
            for (i, v) in chunk.iter_mut().enumerate() {
                *v *= m(k2[base + i]);
            }
        });
        self.inverse(&mut data);
        data.iter().map(|z| z.re).collect()
    }

    /// `-Δu`.
    pub fn neg_laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u, |k2| k2)
    }

    /// `h² Σ_x |∇u|²` through Parseval: `(h²/n²) Σ_k |k|² |û_k|²`.
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        let spec = self.spectrum(u);
        let n = self.grid.n;
        let h = self.grid.spacing();
        let k2 = &self.k2;
        par::sum_by(spec.len(), |i| k2[i] * spec[i].norm_sqr()) * h * h / (n * n) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let g = Grid2D::new(64, 10.0).unwrap();
        let s = Spectral::new(g);
        let u: Vec<f64> = (0..64 * 64).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let back = s.apply(&u, |_| 1.0);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_of_plane_wave() {
        let g = Grid2D::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let s = Spectral::new(g);
        let n = g.n;
        let u: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (x, y) = g.coords(idx / n, idx % n);
                (3.0 * x).cos() * (2.0 * y).sin()
            })
            .collect();
        let lu = s.neg_laplacian(&u);
        for (a, b) in u.iter().zip(&lu) {
            assert!((13.0 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pair_application_matches_single() {
        let g = Grid2D::new(64, 8.0).unwrap();
        let s = Spectral::new(g);
        let a: Vec<f64> = (0..64 * 64).map(|i| (i as f64 * 0.01).sin()).collect();
        let b: Vec<f64> = (0..64 * 64).map(|i| (i as f64 * 0.003).cos()).collect();
        let (pa, pb) = s.apply_pair(&a, &b, |k2| 1.0 / (1.0 + k2));
        let qa = s.apply(&a, |k2| 1.0 / (1.0 + k2));
        let qb = s.apply(&b, |k2| 1.0 / (1.0 + k2));
        for i in 0..a.len() {
            assert!((pa[i] - qa[i]).abs() < 1e-12);
            assert!((pb[i] - qb[i]).abs() < 1e-12);
        }
    }
}
