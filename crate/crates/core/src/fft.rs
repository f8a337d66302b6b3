//! Thin n-dimensional wrapper over `rustfft` for isotropic power-of-two grids.

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::scalar::Real;

/// In-place unnormalized DFT over a `points^dim` array laid out row-major
/// (last axis contiguous).
pub(crate) fn transform<S: Real>(data: &mut [Complex<S>], dim: usize, points: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), points.pow(dim as u32));
    let mut planner = FftPlanner::<S>::new();
    let fft = planner.plan_fft(points, direction);
    // contiguous axis
    fft.process(data);
    if dim == 2 {
        let mut column = vec![Complex::new(S::zero(), S::zero()); points];
        for c in 0..points {
            for r in 0..points {
                column[r] = data[r * points + c];
            }
            fft.process(&mut column);
            for r in 0..points {
                data[r * points + c] = column[r];
            }
        }
    }
}
