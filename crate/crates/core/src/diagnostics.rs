//! Measurement tools: Sobolev norms via Parseval, energy/dissipation
//! reports, least-squares decay-rate fits, envelope certification, the
//! time-weighted decay functional, and interpolation-inequality checks.

use crate::fourier::{self, Grid, ModeField};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {needed} samples in the fit window, found {got}")]
    ShortWindow { needed: usize, got: usize },
    #[error("value at index {0} must be positive for a log fit")]
    NonpositiveValue(usize),
    #[error("times are not strictly increasing at index {0}")]
    NonMonotoneTimes(usize),
    #[error("length mismatch between times and values ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("envelope value at index {0} is not positive")]
    ZeroEnvelope(usize),
    #[error("derivative orders must satisfy 0 < j < m <= 8, got j = {j}, m = {m}")]
    BadOrders { j: u32, m: u32 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("density floor {0} is not positive; weighted norms are undefined")]
    DensityFloor(f64),
}

// ---------------------------------------------------------------------------
// Sobolev norms.
// ---------------------------------------------------------------------------

/// Per-mode `H^s` weight `sum_{alpha <= s} k^{2 alpha}`, honoring the
/// convention that odd derivatives annihilate the unpaired Nyquist mode.
fn sobolev_weight(grid: &Grid, slot: usize, s: u32) -> f64 {
    let nyquist = grid.signed_index(slot) == -(grid.mode_count() as i64) / 2;
    let k2 = grid.wavenumber(slot).powi(2);
    let mut weight = 0.0;
    let mut k_pow = 1.0;
    for alpha in 0..=s {
        if !(nyquist && alpha % 2 == 1) {
            weight += k_pow;
        }
        k_pow *= k2;
    }
    weight
}

/// `H^s` norm on the torus:
/// `(sum_{alpha <= s} || d^alpha f ||_{L^2(0,L)}^2)^{1/2}`, computed from
/// the coefficients by Parseval.
pub fn sobolev_norm(field: &ModeField, s: u32) -> f64 {
    let grid = field.grid();
    let sum: f64 = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| sobolev_weight(grid, i, s) * c.norm_sqr())
        .sum();
    (grid.length() * sum).sqrt()
}

/// `H^s` norm of a vector of fields (square root of the summed squares).
pub fn sobolev_norm_multi(fields: &[&ModeField], s: u32) -> Result<f64, DiagnosticsError> {
    let grid = fields.first().map(|f| f.grid());
    let mut sum = 0.0;
    for f in fields {
        if Some(f.grid()) != grid {
            return Err(DiagnosticsError::GridMismatch);
        }
        sum += sobolev_norm(f, s).powi(2);
    }
    Ok(sum.sqrt())
}

// ---------------------------------------------------------------------------
// Energy and dissipation reports.
// ---------------------------------------------------------------------------

/// Physical-space samples of the full state on one grid.
#[derive(Clone, Copy, Debug)]
pub struct FieldSet<'a> {
    pub grid: &'a Grid,
    /// Density *perturbation*; the physical density is `1 + rho`.
    pub rho: &'a [f64],
    pub u1: &'a [f64],
    pub ur: [&'a [f64]; 2],
    pub e1: &'a [f64],
    pub er: [&'a [f64]; 2],
    pub br: [&'a [f64]; 2],
}

impl FieldSet<'_> {
    fn all(&self) -> [&[f64]; 9] {
        [
            self.rho, self.u1, self.ur[0], self.ur[1], self.e1, self.er[0], self.er[1], self.br[0],
            self.br[1],
        ]
    }
}

/// Energy functional value and companions at one instant.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub order: u32,
    /// `sum_{alpha <= order} int K a (1+rho)^{a-2} (d^a rho)^2
    ///  + (1+rho) |d^a u|^2 + |d^a (E, B)|^2 dx`.
    pub energy: f64,
    /// Leading-order energy decay rate from relaxation:
    /// `2 sum_{alpha <= order} int (1+rho) |d^a u|^2 dx`.
    pub dissipation: f64,
    pub min_density: f64,
    pub mean_density: f64,
    pub mean_velocity: f64,
}

/// Evaluate the order-`n` energy and dissipation of a state under the
/// pressure law `p(n) = K n^a` (so the density weight is `K a (1+rho)^{a-2}`).
pub fn energy_report(
    fields: &FieldSet,
    pressure_coeff: f64,
    pressure_exp: f64,
    order: u32,
) -> Result<EnergyReport, DiagnosticsError> {
    let grid = fields.grid;
    let n = grid.mode_count();
    for f in fields.all() {
        if f.len() != n {
            return Err(DiagnosticsError::LengthMismatch(f.len(), n));
        }
    }
    let min_density = fields
        .rho
        .iter()
        .fold(f64::INFINITY, |m, &r| m.min(1.0 + r));
    if !(min_density > 0.0) {
        return Err(DiagnosticsError::DensityFloor(min_density));
    }
    let dx = grid.spacing();
    let ka = pressure_coeff * pressure_exp;

    // Pointwise weights.
    let rho_weight: Vec<f64> = fields
        .rho
        .iter()
        .map(|&r| ka * (1.0 + r).powf(pressure_exp - 2.0))
        .collect();
    let vel_weight: Vec<f64> = fields.rho.iter().map(|&r| 1.0 + r).collect();

    // Spectral derivatives of each field up to `order`.
    let modes: Vec<ModeField> = fields
        .all()
        .iter()
        .map(|f| fourier::forward(grid, f).expect("length checked above"))
        .collect();
    let mut energy = 0.0;
    let mut dissipation = 0.0;
    for alpha in 0..=order {
        let deriv: Vec<Vec<f64>> = modes
            .iter()
            .map(|m| fourier::inverse(&fourier::spectral_derivative(m, alpha)))
            .collect();
        for m in 0..n {
            let d_rho = deriv[0][m];
            let d_u =
                deriv[1][m] * deriv[1][m] + deriv[2][m] * deriv[2][m] + deriv[3][m] * deriv[3][m];
            let d_fields = deriv[4][m] * deriv[4][m]
                + deriv[5][m] * deriv[5][m]
                + deriv[6][m] * deriv[6][m]
                + deriv[7][m] * deriv[7][m]
                + deriv[8][m] * deriv[8][m];
            energy += dx * (rho_weight[m] * d_rho * d_rho + vel_weight[m] * d_u + d_fields);
            dissipation += 2.0 * dx * vel_weight[m] * d_u;
        }
    }
    let mean_density = fields.rho.iter().sum::<f64>() / n as f64;
    let mean_velocity = fields.u1.iter().sum::<f64>() / n as f64;
    Ok(EnergyReport {
        order,
        energy,
        dissipation,
        min_density,
        mean_density,
        mean_velocity,
    })
}

// ---------------------------------------------------------------------------
// Decay-rate fits.
// ---------------------------------------------------------------------------

/// Abscissa used for the least-squares fit of `ln(value)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// `ln v` against `ln(1 + t)`: slope is the algebraic decay exponent.
    PowerLaw,
    /// `ln v` against `t`: slope is the exponential rate.
    Exponential,
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub std_error: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Least-squares fit of the decay rate over `window.0 <= t <= window.1`.
pub fn fit_decay_rate(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    mode: FitMode,
) -> Result<RateFit, DiagnosticsError> {
    if times.len() != values.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), values.len()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(DiagnosticsError::NonpositiveValue(i));
        }
        xs.push(match mode {
            FitMode::PowerLaw => (1.0 + t).ln(),
            FitMode::Exponential => t,
        });
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(DiagnosticsError::ShortWindow { needed: 3, got: n });
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let std_error = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        std_error,
        samples: n,
        window,
    })
}

// ---------------------------------------------------------------------------
// Envelope certification.
// ---------------------------------------------------------------------------

/// Largest ratio `|value| / envelope` over sampled pairs; the certified
/// envelope constant.
pub fn envelope_ratio(pairs: &[(f64, f64)]) -> Result<f64, DiagnosticsError> {
    let mut worst = 0.0f64;
    for (i, &(value, envelope)) in pairs.iter().enumerate() {
        if !(envelope > 0.0) {
            return Err(DiagnosticsError::ZeroEnvelope(i));
        }
        worst = worst.max(value.abs() / envelope);
    }
    Ok(worst)
}

/// Result of a compensated-band check: extremes of
/// `value * (1 + t)^theta` over the window.
#[derive(Clone, Copy, Debug)]
pub struct BandCheck {
    pub lo: f64,
    pub hi: f64,
    /// `hi / lo`; a genuine two-sided envelope keeps this ratio small.
    pub ratio: f64,
    pub samples: usize,
}

/// Two-sided (upper *and lower*) envelope check: compensate the series by
/// `(1+t)^theta` and report the band it occupies. A correct decay exponent
/// keeps the band narrow; a wrong one (negative control) spreads it.
pub fn compensated_band(
    times: &[f64],
    values: &[f64],
    theta: f64,
    window: (f64, f64),
) -> Result<BandCheck, DiagnosticsError> {
    if times.len() != values.len() {
        return Err(DiagnosticsError::LengthMismatch(times.len(), values.len()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut samples = 0;
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(DiagnosticsError::NonpositiveValue(i));
        }
        let w = v * (1.0 + t).powf(theta);
        lo = lo.min(w);
        hi = hi.max(w);
        samples += 1;
    }
    if samples < 2 {
        return Err(DiagnosticsError::ShortWindow {
            needed: 2,
            got: samples,
        });
    }
    Ok(BandCheck {
        lo,
        hi,
        ratio: hi / lo,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Time-weighted decay functional.
// ---------------------------------------------------------------------------

/// Norm inputs for the decay functional at one time.
#[derive(Clone, Copy, Debug)]
pub struct QSample {
    pub t: f64,
    /// `|| d^alpha (rho, u1) ||_{L^2}` for `alpha = 0, 1`.
    pub rho_u1: [f64; 2],
    /// `|| d^alpha E1 ||_{L^2}` for `alpha = 0, 1`.
    pub e1: [f64; 2],
    /// `|| d^alpha (u_r, E_r) ||_{L^2}` for `alpha = 0, 1`.
    pub ur_er: [f64; 2],
    /// `|| d^alpha B_r ||_{L^2}` for `alpha = 0, 1`.
    pub br: [f64; 2],
    /// Unweighted high-order tail norm.
    pub tail: f64,
}

/// Running supremum of the weighted combination
///
/// ```text
/// sum_{alpha=0,1}  (1+s)^{5/4 + alpha/2} ||d^a (rho, u1)||
///                + (1+s)^{5/4}           ||d^a E1||
///                + (1+s)^{3/4 + alpha/2} ||d^a (u_r, E_r)||
///                + (1+s)^{1/4 + alpha/2} ||d^a B_r||
///                + tail
/// ```
///
/// over `s <= t`; boundedness in `t` certifies the decay rates all at once.
pub fn q_functional(samples: &[QSample]) -> Result<Vec<f64>, DiagnosticsError> {
    let mut out = Vec::with_capacity(samples.len());
    let mut sup = 0.0f64;
    let mut prev_t = f64::NEG_INFINITY;
    for (i, s) in samples.iter().enumerate() {
        if s.t <= prev_t {
            return Err(DiagnosticsError::NonMonotoneTimes(i));
        }
        prev_t = s.t;
        let w = 1.0 + s.t;
        let mut q = s.tail;
        for alpha in 0..2 {
            let half = alpha as f64 / 2.0;
            q += w.powf(1.25 + half) * s.rho_u1[alpha]
                + w.powf(1.25) * s.e1[alpha]
                + w.powf(0.75 + half) * s.ur_er[alpha]
                + w.powf(0.25 + half) * s.br[alpha];
        }
        sup = sup.max(q);
        out.push(sup);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Interpolation-inequality check.
// ---------------------------------------------------------------------------

/// Realized constant of the derivative interpolation inequality
/// `|| d^j f || <= || d^m f ||^{j/m} * || f ||^{1 - j/m}` for `0 < j < m`:
/// returns the left side divided by the right side (<= 1 by Hoelder on the
/// mode sums). A zero field passes vacuously with 0.
pub fn gn_check(field: &ModeField, j: u32, m: u32) -> Result<f64, DiagnosticsError> {
    if j == 0 || j >= m || m > 8 {
        return Err(DiagnosticsError::BadOrders { j, m });
    }
    let base = sobolev_seminorm(field, 0);
    let top = sobolev_seminorm(field, m);
    let mid = sobolev_seminorm(field, j);
    if mid == 0.0 {
        return Ok(0.0);
    }
    let frac = j as f64 / m as f64;
    Ok(mid / (top.powf(frac) * base.powf(1.0 - frac)))
}

/// Single-order seminorm `|| d^alpha f ||_{L^2(0,L)}` by Parseval.
pub fn sobolev_seminorm(field: &ModeField, alpha: u32) -> f64 {
    let grid = field.grid();
    let n = grid.mode_count();
    let sum: f64 = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if alpha % 2 == 1 && grid.signed_index(i) == -(n as i64) / 2 {
                return 0.0;
            }
            grid.wavenumber(i).powi(2 * alpha as i32) * c.norm_sqr()
        })
        .sum();
    (grid.length() * sum).sqrt()
}
