//! Green's (propagator) matrices `G(t, k) = exp(-t A(k))` for both symbol
//! blocks, spectral projectors, and pointwise decay envelopes.
//!
//! Two independent assembly routes exist on purpose:
//!
//! * the *spectral* route sums `exp(lambda_j t) P_j` over labeled branches,
//!   with projectors built from closed-form eigenvector dyads;
//! * the *exponential oracle* route feeds `-t A(k)` to the Pade-13
//!   [`crate::linalg::expm`].
//!
//! They share no code beyond the symbol matrices, so agreement between them
//! is a genuine cross-check (exercised by the acceptance suite over wide
//! `(t, k)` grids). Below [`K_MIN_FALLBACK`] the transverse projectors are
//! ill-conditioned (`1/lambda_1` blows up like `k^-2`), so [`green_e`]
//! switches to the exponential route and records that in
//! [`PropagatorMatrix::route`].

use crate::linalg::{expm, CMat, LinalgError};
use crate::spectrum::{self, Family, Regime, RegimeThresholds, SpectrumError};
use num_complex::Complex64;
use thiserror::Error;

/// Below this `|k|` the transverse spectral assembly is abandoned for the
/// exponential route.
pub const K_MIN_FALLBACK: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum GreenError {
    #[error("time {0} must be nonnegative and finite")]
    BadTime(f64),
    #[error("entry ({row}, {col}) is out of range for a {dim}x{dim} matrix")]
    BadEntry { row: usize, col: usize, dim: usize },
    #[error("|k| = {0} is below the projector fallback threshold {K_MIN_FALLBACK}")]
    BelowFallback(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How a propagator was assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssemblyRoute {
    Spectral,
    Exponential,
}

/// A propagator value at one `(t, k)`.
#[derive(Clone, Debug)]
pub struct PropagatorMatrix {
    pub t: f64,
    pub k: f64,
    pub matrix: CMat,
    pub route: AssemblyRoute,
}

impl PropagatorMatrix {
    pub fn entry(&self, row: usize, col: usize) -> Result<Complex64, GreenError> {
        let dim = self.matrix.dim();
        if row >= dim || col >= dim {
            return Err(GreenError::BadEntry { row, col, dim });
        }
        Ok(self.matrix.at(row, col))
    }
}

/// The six labeled spectral projectors of the transverse block at one `k`
/// (branches 1..=3 plus family, 4..=6 minus family).
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    pub k: f64,
    pub lambdas: [Complex64; 6],
    pub projectors: [CMat; 6],
}

fn check_time(t: f64) -> Result<(), GreenError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(GreenError::BadTime(t));
    }
    Ok(())
}

/// Longitudinal symbol `A_1(k) = [[1, 1 + gamma k^2], [-1, 0]]` acting on
/// `(u_1, E_1)`; the evolution is `d/dt y = -A_1 y`.
pub fn symbol_f(k: f64, gamma: f64) -> CMat {
    let mut a = CMat::zeros(2);
    *a.at_mut(0, 0) = Complex64::new(1.0, 0.0);
    *a.at_mut(0, 1) = Complex64::new(1.0 + gamma * k * k, 0.0);
    *a.at_mut(1, 0) = Complex64::new(-1.0, 0.0);
    a
}

/// Transverse symbol acting on `(u_r, E_r, B_r)` (pairs interleaved as
/// `(u0, u1, E0, E1, B0, B1)`):
///
/// ```text
///        [ I - O1   I      0     ]
/// A_r =  [  -I      0    -ik O1  ]      O1 = [[0, -1], [1, 0]]
///        [   0    ik O1    0     ]
/// ```
pub fn symbol_e(k: f64) -> CMat {
    let ik = Complex64::new(0.0, k);
    let one = Complex64::new(1.0, 0.0);
    let mut a = CMat::zeros(6);
    // I - O1 on (u, u).
    *a.at_mut(0, 0) = one;
    *a.at_mut(0, 1) = one;
    *a.at_mut(1, 0) = -one;
    *a.at_mut(1, 1) = one;
    // +I on (u, E).
    *a.at_mut(0, 2) = one;
    *a.at_mut(1, 3) = one;
    // -I on (E, u).
    *a.at_mut(2, 0) = -one;
    *a.at_mut(3, 1) = -one;
    // -ik O1 on (E, B): [[0, ik], [-ik, 0]].
    *a.at_mut(2, 5) = ik;
    *a.at_mut(3, 4) = -ik;
    // ik O1 on (B, E): [[0, -ik], [ik, 0]].
    *a.at_mut(4, 3) = -ik;
    *a.at_mut(5, 2) = ik;
    a
}

/// Closed-form longitudinal propagator
/// `G_f = e^{-t/2} [cos(beta t) I + (sin(beta t)/beta) M]` with
/// `M = [[-1/2, -(1 + gamma k^2)], [1, 1/2]]`; all entries real.
pub fn green_f(t: f64, k: f64, gamma: f64) -> Result<PropagatorMatrix, GreenError> {
    check_time(t)?;
    let pair = spectrum::eigen_f(k, gamma)?;
    let beta = pair.beta();
    let (s, c) = (beta * t).sin_cos();
    let damp = (-0.5 * t).exp();
    let sb = s / beta; // beta >= sqrt(3)/2 > 0 always
    let mut m = CMat::zeros(2);
    *m.at_mut(0, 0) = Complex64::new(damp * (c - 0.5 * sb), 0.0);
    *m.at_mut(0, 1) = Complex64::new(-damp * (1.0 + gamma * k * k) * sb, 0.0);
    *m.at_mut(1, 0) = Complex64::new(damp * sb, 0.0);
    *m.at_mut(1, 1) = Complex64::new(damp * (c + 0.5 * sb), 0.0);
    Ok(PropagatorMatrix {
        t,
        k,
        matrix: m,
        route: AssemblyRoute::Spectral,
    })
}

/// One family's three spectral projectors by the stable dyad formula.
///
/// For branch `lambda` with complement sum `Lambda` (see
/// [`spectrum::complement_sum`] for the conditioning strategy) and the
/// signed ratio `q = k / lambda`:
///
/// ```text
/// P = -(lambda Lambda) / (2 prod_{n != j} (lambda_j - lambda_n))
///     * kron(W, I +- i O1),
/// W = [[-1/Lambda^2, 1/Lambda, s q / Lambda],
///      [  -1/Lambda,     1,        s q     ],
///      [ s q/Lambda,   -s q,      -q^2     ]]
/// ```
///
/// with `s = +1` for the plus family, `-1` for the minus family.
fn family_projectors(family: Family, k: f64, labels: &[Complex64; 3]) -> [CMat; 3] {
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let (pol, sign) = match family {
        // I + i O1 = [[1, -i], [i, 1]]
        Family::Plus => (
            CMat::from_rows(&[&[one, -i], &[i, one]]),
            Complex64::new(1.0, 0.0),
        ),
        // I - i O1 = [[1, i], [-i, 1]]
        Family::Minus => (
            CMat::from_rows(&[&[one, i], &[-i, one]]),
            Complex64::new(-1.0, 0.0),
        ),
    };
    let mut out = [CMat::zeros(6), CMat::zeros(6), CMat::zeros(6)];
    for j in 0..3 {
        let lambda = labels[j];
        let (o1, o2) = (labels[(j + 1) % 3], labels[(j + 2) % 3]);
        let (big_lambda, inv_lambda) = spectrum::complement_sum(lambda, k, family);
        let q = sign * Complex64::new(k, 0.0) / lambda;
        let prefactor = -(lambda * big_lambda) / (2.0 * (lambda - o1) * (lambda - o2));
        let w = CMat::from_rows(&[
            &[-inv_lambda * inv_lambda, inv_lambda, q * inv_lambda],
            &[-inv_lambda, one, q],
            &[q * inv_lambda, -q, -q * q],
        ]);
        out[j] = w.kron(&pol).scale(prefactor);
    }
    out
}

/// Labeled spectral projectors of the transverse block. Requires
/// `|k| >= K_MIN_FALLBACK`; closer to the origin branch 1 degenerates
/// (`lambda_1 -> 0`) and the dyads lose accuracy.
pub fn projectors_e(k: f64) -> Result<ProjectorSet, GreenError> {
    if !k.is_finite() {
        return Err(GreenError::Spectrum(SpectrumError::BadWavenumber(k)));
    }
    if k.abs() < K_MIN_FALLBACK {
        return Err(GreenError::BelowFallback(k.abs()));
    }
    let th = RegimeThresholds::standard();
    let sym = spectrum::label_spectrum_e(k, &th)?;
    let plus: [Complex64; 3] = [sym.lambdas[0], sym.lambdas[1], sym.lambdas[2]];
    let minus: [Complex64; 3] = [sym.lambdas[3], sym.lambdas[4], sym.lambdas[5]];
    let pp = family_projectors(Family::Plus, k, &plus);
    let pm = family_projectors(Family::Minus, k, &minus);
    let [p0, p1, p2] = pp;
    let [p3, p4, p5] = pm;
    Ok(ProjectorSet {
        k,
        lambdas: sym.lambdas,
        projectors: [p0, p1, p2, p3, p4, p5],
    })
}

/// Transverse propagator. Spectral route `sum_j exp(lambda_j t) P_j` away
/// from the origin; exponential route below [`K_MIN_FALLBACK`].
pub fn green_e(t: f64, k: f64) -> Result<PropagatorMatrix, GreenError> {
    check_time(t)?;
    if !k.is_finite() {
        return Err(GreenError::Spectrum(SpectrumError::BadWavenumber(k)));
    }
    if k.abs() < K_MIN_FALLBACK {
        let m = expm(&symbol_e(k).scale(Complex64::new(-t, 0.0)))?;
        return Ok(PropagatorMatrix {
            t,
            k,
            matrix: m,
            route: AssemblyRoute::Exponential,
        });
    }
    let set = projectors_e(k)?;
    let mut m = CMat::zeros(6);
    for j in 0..6 {
        m.add_assign_scaled(&set.projectors[j], (set.lambdas[j] * t).exp());
    }
    Ok(PropagatorMatrix {
        t,
        k,
        matrix: m,
        route: AssemblyRoute::Spectral,
    })
}

/// Independent oracle for the transverse propagator: Pade-13 exponential of
/// `-t A_r(k)`.
pub fn expm_oracle_e(t: f64, k: f64) -> Result<PropagatorMatrix, GreenError> {
    check_time(t)?;
    let m = expm(&symbol_e(k).scale(Complex64::new(-t, 0.0)))?;
    Ok(PropagatorMatrix {
        t,
        k,
        matrix: m,
        route: AssemblyRoute::Exponential,
    })
}

/// Independent oracle for the longitudinal propagator.
pub fn expm_oracle_f(t: f64, k: f64, gamma: f64) -> Result<PropagatorMatrix, GreenError> {
    check_time(t)?;
    spectrum::eigen_f(k, gamma)?; // parameter validation
    let m = expm(&symbol_f(k, gamma).scale(Complex64::new(-t, 0.0)))?;
    Ok(PropagatorMatrix {
        t,
        k,
        matrix: m,
        route: AssemblyRoute::Exponential,
    })
}

/// Pointwise decay envelope for `|G_f(t, k)[row][col]|` (0-based entries of
/// the 2x2 block). Shape `e^{-t/2}` everywhere; above the band boundary
/// `sqrt(3)/(2 sqrt(gamma))` the off-diagonal entries carry the `|k|^{+-1}`
/// weights of the oscillatory regime.
pub fn envelope_f(t: f64, k: f64, gamma: f64, row: usize, col: usize) -> Result<f64, GreenError> {
    check_time(t)?;
    spectrum::eigen_f(k, gamma)?;
    if row >= 2 || col >= 2 {
        return Err(GreenError::BadEntry { row, col, dim: 2 });
    }
    let ka = k.abs();
    let weight = if ka <= spectrum::f_band_boundary(gamma) {
        1.0
    } else {
        match (row, col) {
            (0, 1) => ka,
            (1, 0) => 1.0 / ka,
            _ => 1.0,
        }
    };
    Ok(weight * (-0.5 * t).exp())
}

/// Pointwise decay envelope for `|G_e(t, k)[row][col]|` (0-based entries of
/// the 6x6 block; weights are constant on each 2x2 polarization sub-block).
///
/// * Low regime: slow part decays like `e^{-k^2 t / 2}` with block weights
///   `[[k^2, k^2, |k|], [k^2, k^2, |k|], [|k|, |k|, 1]]`, fast part like
///   `e^{-t/8}` with weights `[[1, 1, |k|], [1, 1, |k|], [|k|, |k|, k^2]]`.
/// * Mid regime: `e^{-c t}` with the measured rate `c` from `thresholds`.
/// * High regime: fast part `e^{-t/2}` with weights
///   `[[1, k^-2, k^-1], [k^-2, k^-4, k^-3], [k^-1, k^-3, k^-2]]`, slow part
///   `e^{-t/(4 k^2)}` with weights
///   `[[k^-2, k^-1, k^-1], [k^-1, 1, 1], [k^-1, 1, 1]]`.
pub fn envelope_e(
    t: f64,
    k: f64,
    row: usize,
    col: usize,
    thresholds: &RegimeThresholds,
) -> Result<f64, GreenError> {
    check_time(t)?;
    if !k.is_finite() {
        return Err(GreenError::Spectrum(SpectrumError::BadWavenumber(k)));
    }
    if row >= 6 || col >= 6 {
        return Err(GreenError::BadEntry { row, col, dim: 6 });
    }
    let (bi, bj) = (row / 2, col / 2);
    let ka = k.abs();
    let k2 = ka * ka;
    Ok(match thresholds.classify(k) {
        Regime::Low => {
            let slow = [[k2, k2, ka], [k2, k2, ka], [ka, ka, 1.0]];
            let fast = [[1.0, 1.0, ka], [1.0, 1.0, ka], [ka, ka, k2]];
            slow[bi][bj] * (-0.5 * k2 * t).exp() + fast[bi][bj] * (-t / 8.0).exp()
        }
        Regime::Mid => (-thresholds.mid_rate * t).exp(),
        Regime::High => {
            let inv = 1.0 / ka;
            let inv2 = inv * inv;
            let fast = [
                [1.0, inv2, inv],
                [inv2, inv2 * inv2, inv2 * inv],
                [inv, inv2 * inv, inv2],
            ];
            let slow = [[inv2, inv, inv], [inv, 1.0, 1.0], [inv, 1.0, 1.0]];
            fast[bi][bj] * (-0.5 * t).exp() + slow[bi][bj] * (-t / (4.0 * k2)).exp()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_f_is_identity_at_t0() {
        let g = green_f(0.0, 3.0, 1.4).unwrap();
        assert!(g.matrix.max_abs_diff(&CMat::identity(2)) < 1e-15);
    }

    #[test]
    fn green_f_lower_left_vanishes_at_half_period() {
        // At k = 0, gamma = 1: beta = sqrt(3)/2, so t = 2 pi / sqrt(3) makes
        // beta t = pi and the sin(beta t)/beta entry vanish.
        let t = 2.0 * std::f64::consts::PI / 3.0f64.sqrt();
        let g = green_f(t, 0.0, 1.0).unwrap();
        assert!(g.entry(1, 0).unwrap().norm() < 1e-15);
        assert!(g.entry(0, 1).unwrap().norm() < 1e-15);
    }

    #[test]
    fn green_f_agrees_with_exponential_oracle() {
        for &(t, k) in &[(0.1, 0.0), (1.0, 1.0), (10.0, 40.0), (3.0, -2.5)] {
            let g = green_f(t, k, 1.0).unwrap();
            let o = expm_oracle_f(t, k, 1.0).unwrap();
            let d = g.matrix.max_abs_diff(&o.matrix);
            assert!(d < 1e-11, "(t={t}, k={k}): diff {d}");
        }
    }

    #[test]
    fn green_e_agrees_with_exponential_oracle() {
        for &(t, k) in &[(0.1, 0.05), (1.0, 1.0), (5.0, 30.0), (2.0, -7.0)] {
            let g = green_e(t, k).unwrap();
            let o = expm_oracle_e(t, k).unwrap();
            let d = g.matrix.max_abs_diff(&o.matrix);
            assert!(d < 1e-10, "(t={t}, k={k}): diff {d}");
            if k.abs() >= K_MIN_FALLBACK {
                assert_eq!(g.route, AssemblyRoute::Spectral);
            }
        }
    }

    #[test]
    fn green_e_falls_back_near_origin() {
        let g = green_e(1.0, 5e-4).unwrap();
        assert_eq!(g.route, AssemblyRoute::Exponential);
        // Semigroup check on the fallback route.
        let g1 = green_e(0.7, 5e-4).unwrap();
        let g2 = green_e(0.3, 5e-4).unwrap();
        let d = g1.matrix.mul(&g2.matrix).max_abs_diff(&g.matrix);
        assert!(d < 1e-12);
    }

    #[test]
    fn spectral_route_satisfies_semigroup() {
        let (t1, t2, k) = (0.4, 1.3, 3.0);
        let a = green_e(t1, k).unwrap().matrix;
        let b = green_e(t2, k).unwrap().matrix;
        let ab = green_e(t1 + t2, k).unwrap().matrix;
        assert!(a.mul(&b).max_abs_diff(&ab) < 1e-12);
    }

    #[test]
    fn opposite_wavenumbers_are_conjugate() {
        // G(t, -k) = conj(G(t, k)): real-space evolution of real fields.
        let g = green_e(2.0, 4.2).unwrap().matrix;
        let gm = green_e(2.0, -4.2).unwrap().matrix;
        let mut max = 0.0f64;
        for r in 0..6 {
            for c in 0..6 {
                max = max.max((g.at(r, c).conj() - gm.at(r, c)).norm());
            }
        }
        assert!(max < 1e-13);
    }

    #[test]
    fn projectors_are_idempotent_partition() {
        for &k in &[0.01, 0.5, 8.0, 120.0] {
            let set = projectors_e(k).unwrap();
            let id: CMat = set
                .projectors
                .iter()
                .fold(CMat::zeros(6), |acc, p| acc.add(p));
            assert!(id.max_abs_diff(&CMat::identity(6)) < 1e-10, "sum at k={k}");
            let mut recon = CMat::zeros(6);
            for j in 0..6 {
                recon.add_assign_scaled(&set.projectors[j], set.lambdas[j]);
                for l in 0..6 {
                    let prod = set.projectors[j].mul(&set.projectors[l]);
                    let expect = if j == l {
                        set.projectors[j].clone()
                    } else {
                        CMat::zeros(6)
                    };
                    assert!(prod.max_abs_diff(&expect) < 1e-10, "P{j} P{l} at k={k}");
                }
            }
            // Eigen convention: A = sum_j (-lambda_j) P_j.
            let neg_a = symbol_e(k).scale(Complex64::new(-1.0, 0.0));
            assert!(recon.max_abs_diff(&neg_a) < 1e-9, "reconstruction at k={k}");
        }
    }

    #[test]
    fn projectors_match_eigvec_dyads() {
        let k = 2.7;
        let set = projectors_e(k).unwrap();
        for j in 1..=6 {
            let pair = crate::spectrum::eigvec_e(k, j).unwrap();
            let mut dyad = CMat::zeros(6);
            for r in 0..6 {
                for c in 0..6 {
                    *dyad.at_mut(r, c) = pair.right[r] * pair.left[c] / pair.pairing;
                }
            }
            let d = dyad.max_abs_diff(&set.projectors[j - 1]);
            assert!(d < 1e-12, "branch {j}: dyad vs projector diff {d}");
        }
    }

    #[test]
    fn eigvec_satisfies_symbol_relation() {
        let k = -1.9; // signed k exercises the k/lambda entries
        let a = symbol_e(k);
        for j in 1..=6 {
            let pair = crate::spectrum::eigvec_e(k, j).unwrap();
            let av = a.mat_vec(&pair.right);
            let mut max = 0.0f64;
            for r in 0..6 {
                max = max.max((av[r] + pair.lambda * pair.right[r]).norm());
            }
            assert!(max < 1e-12, "branch {j}: A v + lambda v = {max}");
        }
    }

    #[test]
    fn projectors_reject_near_origin() {
        assert!(matches!(
            projectors_e(5e-4),
            Err(GreenError::BelowFallback(_))
        ));
    }

    #[test]
    fn envelopes_bound_sample_entries() {
        let th = RegimeThresholds::standard();
        for &(t, k) in &[(0.5, 0.05), (4.0, 0.05), (1.0, 2.0), (3.0, 50.0)] {
            let g = green_e(t, k).unwrap();
            for r in 0..6 {
                for c in 0..6 {
                    let v = g.entry(r, c).unwrap().norm();
                    let env = envelope_e(t, k, r, c, &th).unwrap();
                    assert!(
                        v <= 2.0 * env + 1e-14,
                        "entry ({r},{c}) at (t={t}, k={k}): {v} vs envelope {env}"
                    );
                }
            }
        }
    }

    #[test]
    fn envelope_frozen_examples() {
        let th = RegimeThresholds::standard();
        // B-block diagonal in the low regime: e^{-k^2 t/2} + k^2 e^{-t/8}.
        let (t, k) = (3.0, 0.01);
        let env = envelope_e(t, k, 4, 4, &th).unwrap();
        let expect = (-k * k * t / 2.0).exp() + k * k * (-t / 8.0).exp();
        assert!((env - expect).abs() < 1e-15);
        // Longitudinal lower-left entry in the oscillatory band: |k|^-1 e^{-t/2}.
        let env_f = envelope_f(2.0, 10.0, 1.0, 1, 0).unwrap();
        assert!((env_f - 0.1 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            green_f(-1.0, 0.0, 1.0),
            Err(GreenError::BadTime(_))
        ));
        assert!(matches!(
            green_e(f64::NAN, 1.0),
            Err(GreenError::BadTime(_))
        ));
        assert!(matches!(
            envelope_e(1.0, 1.0, 6, 0, &RegimeThresholds::standard()),
            Err(GreenError::BadEntry { .. })
        ));
        let g = green_e(1.0, 1.0).unwrap();
        assert!(matches!(g.entry(0, 6), Err(GreenError::BadEntry { .. })));
    }
}
