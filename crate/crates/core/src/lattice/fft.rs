//! Multi-dimensional complex FFT on a cubic lattice, axis by axis.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct CubeFft {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        CubeFft {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform, `X_k = Σ_x x_x e^{-2πi k·x/N}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform including the `1/N^d` normalization.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(self.dim as u32));
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        for line in data.chunks_exact_mut(n) {
            plan.process_with_scratch(line, &mut scratch);
        }
        let mut buf = vec![Complex64::default(); n];
        for axis in 0..self.dim.saturating_sub(1) {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut buf, &mut scratch);
                    for (i, b) in buf.iter().enumerate() {
                        data[base + i * stride] = *b;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft_in_two_dimensions() {
        let n = 6;
        let fft = CubeFft::new(2, n);
        let input: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = input.clone();
        fft.forward(&mut data);
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::default();
                for x0 in 0..n {
                    for x1 in 0..n {
                        let phase = -2.0 * std::f64::consts::PI * ((k0 * x0 + k1 * x1) as f64) / n as f64;
                        acc += input[x0 * n + x1] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - data[k0 * n + k1]).norm() < 1e-10);
            }
        }
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&input) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
