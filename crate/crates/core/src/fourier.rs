//! Periodic grids and normalized discrete Fourier transforms.
//!
//! Conventions, fixed across the crate:
//!
//! * grid points `x_m = m L / N`, `m = 0..N`;
//! * wavenumbers `k_j = 2 pi j / L` with `j = -N/2 .. N/2 - 1`, stored in FFT
//!   order `[0, 1, .., N/2-1, -N/2, .., -1]`;
//! * forward transform `c_j = (1/N) sum_m f(x_m) exp(-i k_j x_m)`;
//! * inverse transform is the plain sum `f(x_m) = sum_j c_j exp(i k_j x_m)`;
//! * Parseval: `int_0^L |f|^2 dx = L * sum_j |c_j|^2` (exact for grid data).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;
use thiserror::Error;

/// Smallest supported mode count; below this the 2/3-rule dealias band is empty.
pub const MIN_MODES: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum FourierError {
    #[error("mode count {0} is odd; the symmetric wavenumber ladder needs an even count")]
    OddModeCount(usize),
    #[error("mode count {0} is below the minimum {MIN_MODES}")]
    TooFewModes(usize),
    #[error("domain length {0} is not a positive finite number")]
    BadLength(f64),
    #[error("sample/coefficient length {got} does not match the grid's mode count {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// A uniform periodic grid on `[0, L)` with an even number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    length: f64,
    mode_count: usize,
}

impl Grid {
    pub fn new(length: f64, mode_count: usize) -> Result<Self, FourierError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FourierError::BadLength(length));
        }
        if mode_count % 2 != 0 {
            return Err(FourierError::OddModeCount(mode_count));
        }
        if mode_count < MIN_MODES {
            return Err(FourierError::TooFewModes(mode_count));
        }
        Ok(Self { length, mode_count })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.mode_count as f64
    }

    /// `m`-th collocation point `m L / N`.
    pub fn point(&self, m: usize) -> f64 {
        m as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.mode_count).map(|m| self.point(m)).collect()
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Signed mode index for FFT-order slot `i`: `i` for `i < N/2`, else `i - N`.
    pub fn signed_index(&self, i: usize) -> i64 {
        debug_assert!(i < self.mode_count);
        if i < self.mode_count / 2 {
            i as i64
        } else {
            i as i64 - self.mode_count as i64
        }
    }

    /// Wavenumber of FFT-order slot `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 * self.fundamental()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.mode_count).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest retained signed index under the 2/3 rule (`|j| <= N/3`).
    pub fn dealias_cutoff(&self) -> i64 {
        self.mode_count as i64 / 3
    }
}

/// Fourier coefficients of a real field on a [`Grid`], in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ModeField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.mode_count()],
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self, FourierError> {
        if coeffs.len() != grid.mode_count() {
            return Err(FourierError::SizeMismatch {
                expected: grid.mode_count(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Parseval value of `int_0^L |f|^2 dx`.
    pub fn squared_l2(&self) -> f64 {
        self.grid.length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Forward transform of real samples; coefficients carry the `1/N` factor.
pub fn forward(grid: &Grid, samples: &[f64]) -> Result<ModeField, FourierError> {
    let n = grid.mode_count();
    if samples.len() != n {
        return Err(FourierError::SizeMismatch {
            expected: n,
            got: samples.len(),
        });
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    plan_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    ModeField::from_coeffs(grid, buf)
}

/// Inverse transform back to real samples. The imaginary residue of a
/// Hermitian-symmetric input is round-off and is discarded.
pub fn inverse(field: &ModeField) -> Vec<f64> {
    let mut buf = field.coeffs.clone();
    plan_inverse(field.grid.mode_count()).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Multiply mode `j` by `(i k_j)^order`. For odd orders the unpaired Nyquist
/// mode `j = -N/2` is zeroed so real fields stay real.
pub fn spectral_derivative(field: &ModeField, order: u32) -> ModeField {
    let mut out = field.clone();
    derivative_in_place(&mut out, order);
    out
}

pub fn derivative_in_place(field: &mut ModeField, order: u32) {
    if order == 0 {
        return;
    }
    let n = field.grid.mode_count();
    let grid = field.grid.clone();
    for (i, c) in field.coeffs.iter_mut().enumerate() {
        if order % 2 == 1 && grid.signed_index(i) == -(n as i64) / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, grid.wavenumber(i));
        *c *= ik.powu(order);
    }
}

/// 2/3-rule filter: zero every mode with `|j| > N/3`.
pub fn dealias(field: &ModeField) -> ModeField {
    let mut out = field.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(field: &mut ModeField) {
    let cutoff = field.grid.dealias_cutoff();
    let grid = field.grid.clone();
    for (i, c) in field.coeffs.iter_mut().enumerate() {
        if grid.signed_index(i).abs() > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}
