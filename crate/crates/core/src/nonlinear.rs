//! Nonlinear initial-value solver on the torus.
//!
//! The state splits per mode into the longitudinal block `(rho, u1, E1)`
//! and the transverse block `(u_r, E_r, B_r)`; both are advanced by an
//! integrating-factor midpoint rule whose linear flow is the exact mode
//! propagator, so the scheme is A-stable in the stiff relaxation terms and
//! second order in the quadratic ones. Quadratic products are formed in
//! physical space and dealiased by the 2/3 rule.

use crate::diagnostics::{self, EnergyReport, QSample};
use crate::fourier::{self, FourierError, Grid, ModeField};
use crate::green::{self, GreenError};
use crate::linsolve::{make_profile, LinsolveError, ProfileSpec};
use crate::Complex64;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NonlinearError {
    #[error("invalid pressure law: {0}")]
    BadLaw(String),
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
    #[error("density reached {min_density} at t = {time}; below the floor {floor}")]
    VacuumApproach {
        time: f64,
        min_density: f64,
        floor: f64,
    },
    #[error("non-finite {field} samples at t = {time}; the run blew up")]
    BlowUp { time: f64, field: &'static str },
    #[error("states live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Profile(#[from] LinsolveError),
    #[error("snapshot output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Pressure law.
// ---------------------------------------------------------------------------

/// Barotropic pressure `p(n) = K n^a` with `K, a > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureLaw {
    coeff: f64,
    exponent: f64,
}

impl PressureLaw {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self, NonlinearError> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(NonlinearError::BadLaw(format!(
                "coefficient {coeff} must be positive and finite"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(NonlinearError::BadLaw(format!(
                "exponent {exponent} must be positive and finite"
            )));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Sound-speed parameter `gamma = p'(1) = K a` at the reference density.
    pub fn gamma(&self) -> f64 {
        self.coeff * self.exponent
    }
}

// ---------------------------------------------------------------------------
// Spectral state.
// ---------------------------------------------------------------------------

/// Field slots of the full state, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Rho,
    U1,
    E1,
    Ur0,
    Ur1,
    Er0,
    Er1,
    Br0,
    Br1,
}

impl Component {
    pub const ALL: [Component; 9] = [
        Component::Rho,
        Component::U1,
        Component::E1,
        Component::Ur0,
        Component::Ur1,
        Component::Er0,
        Component::Er1,
        Component::Br0,
        Component::Br1,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        ["rho", "u1", "e1", "ur0", "ur1", "er0", "er1", "br0", "br1"][self.index()]
    }
}

/// Full spectral state at one time: nine mode fields on a common grid.
#[derive(Clone, Debug)]
pub struct SpecState {
    pub time: f64,
    fields: [ModeField; 9],
}

impl SpecState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            time: 0.0,
            fields: std::array::from_fn(|_| ModeField::zeros(grid)),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn field(&self, c: Component) -> &ModeField {
        &self.fields[c.index()]
    }

    pub fn field_mut(&mut self, c: Component) -> &mut ModeField {
        &mut self.fields[c.index()]
    }

    /// `self += c * other` on every coefficient; times are untouched.
    fn axpy(&mut self, other: &Self, c: f64) {
        for (mine, theirs) in self.fields.iter_mut().zip(&other.fields) {
            for (a, b) in mine.coeffs_mut().iter_mut().zip(theirs.coeffs()) {
                *a += c * b;
            }
        }
    }

    /// Physical-space samples of every component.
    pub fn physical(&self) -> PhysFields {
        let mut it = self.fields.iter().map(fourier::inverse);
        PhysFields {
            x: self.grid().points(),
            rho: it.next().unwrap(),
            u1: it.next().unwrap(),
            e1: it.next().unwrap(),
            ur: [it.next().unwrap(), it.next().unwrap()],
            er: [it.next().unwrap(), it.next().unwrap()],
            br: [it.next().unwrap(), it.next().unwrap()],
        }
    }

    /// Joint `L^2` seminorm of derivative order `alpha` over a component
    /// group.
    pub fn group_seminorm(&self, group: &[Component], alpha: u32) -> f64 {
        group
            .iter()
            .map(|&c| diagnostics::sobolev_seminorm(self.field(c), alpha).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest constraint residual `|rho_hat + i k E1_hat|` over nonzero
    /// modes.
    pub fn constraint_residual(&self) -> f64 {
        let grid = self.grid().clone();
        let rho = self.field(Component::Rho).coeffs();
        let e1 = self.field(Component::E1).coeffs();
        let mut worst = 0.0f64;
        for m in 0..grid.mode_count() {
            let k = grid.wavenumber(m);
            if k == 0.0 {
                continue;
            }
            worst = worst.max((rho[m] + Complex64::new(0.0, k) * e1[m]).norm());
        }
        worst
    }

    /// Overwrite `E1_hat` with `i rho_hat / k` on nonzero modes so the
    /// longitudinal divergence constraint holds exactly.
    pub fn project_constraint(&mut self) {
        let grid = self.grid().clone();
        let rho = self.field(Component::Rho).coeffs().to_vec();
        let e1 = self.field_mut(Component::E1).coeffs_mut();
        for m in 0..grid.mode_count() {
            let k = grid.wavenumber(m);
            if k != 0.0 {
                e1[m] = Complex64::new(0.0, 1.0) * rho[m] / k;
            }
        }
    }

    /// Euclidean distance between the coefficient vectors of two states.
    pub fn distance(&self, other: &Self) -> Result<f64, NonlinearError> {
        if self.grid() != other.grid() {
            return Err(NonlinearError::GridMismatch);
        }
        let mut sum = 0.0;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                sum += (x - y).norm_sqr();
            }
        }
        Ok(sum.sqrt())
    }
}

/// Real-space samples of the full state.
#[derive(Clone, Debug)]
pub struct PhysFields {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u1: Vec<f64>,
    pub e1: Vec<f64>,
    pub ur: [Vec<f64>; 2],
    pub er: [Vec<f64>; 2],
    pub br: [Vec<f64>; 2],
}

impl PhysFields {
    fn field_set<'a>(&'a self, grid: &'a Grid) -> diagnostics::FieldSet<'a> {
        diagnostics::FieldSet {
            grid,
            rho: &self.rho,
            u1: &self.u1,
            ur: [&self.ur[0], &self.ur[1]],
            e1: &self.e1,
            er: [&self.er[0], &self.er[1]],
            br: [&self.br[0], &self.br[1]],
        }
    }
}

// ---------------------------------------------------------------------------
// Quadratic sources.
// ---------------------------------------------------------------------------

/// Dealiased spectral quadratic sources. In storage order the state forcing
/// is `(-ik h2, h1, h2)` on the longitudinal block and
/// `(h3, h4, 0)` on the transverse block.
#[derive(Clone, Debug)]
pub struct Sources {
    /// Momentum source: convection, pressure beyond linear, longitudinal
    /// Lorentz term `u_r . O1 B_r`.
    pub h1: ModeField,
    /// Mass flux `rho u1`; forces the density as `-ik h2` and the
    /// longitudinal field as `+h2`.
    pub h2: ModeField,
    /// Transverse momentum source: convection plus `u1`-background Lorentz
    /// coupling.
    pub h3: [ModeField; 2],
    /// Transverse current `rho u_r`.
    pub h4: [ModeField; 2],
}

/// Evaluate the quadratic sources of a state. Fails if the density drops to
/// the vacuum floor or any sample is non-finite.
pub fn nonlinear_terms(
    state: &SpecState,
    law: &PressureLaw,
    density_floor: f64,
) -> Result<Sources, NonlinearError> {
    let grid = state.grid();
    let n = grid.mode_count();
    let inv = |c: Component| fourier::inverse(state.field(c));
    let inv_d = |c: Component| fourier::inverse(&fourier::spectral_derivative(state.field(c), 1));

    let rho = inv(Component::Rho);
    let u1 = inv(Component::U1);
    let ur0 = inv(Component::Ur0);
    let ur1 = inv(Component::Ur1);
    let br0 = inv(Component::Br0);
    let br1 = inv(Component::Br1);
    let rho_x = inv_d(Component::Rho);
    let u1_x = inv_d(Component::U1);
    let ur0_x = inv_d(Component::Ur0);
    let ur1_x = inv_d(Component::Ur1);

    for (name, f) in [("rho", &rho), ("u1", &u1), ("ur", &ur0), ("br", &br0)] {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(NonlinearError::BlowUp {
                time: state.time,
                field: name,
            });
        }
    }
    let min_density = rho.iter().fold(f64::INFINITY, |m, &r| m.min(1.0 + r));
    if min_density <= density_floor {
        return Err(NonlinearError::VacuumApproach {
            time: state.time,
            min_density,
            floor: density_floor,
        });
    }

    let ka = law.gamma();
    let ae = law.exponent - 2.0;
    let mut h1 = vec![0.0; n];
    let mut h2 = vec![0.0; n];
    let mut h30 = vec![0.0; n];
    let mut h31 = vec![0.0; n];
    let mut h40 = vec![0.0; n];
    let mut h41 = vec![0.0; n];
    for m in 0..n {
        // Pressure nonlinearity beyond p'(1): K a ((1+rho)^(a-2) - 1).
        let press = ka * ((1.0 + rho[m]).powf(ae) - 1.0);
        h1[m] = -u1[m] * u1_x[m] - press * rho_x[m] + (-ur0[m] * br1[m] + ur1[m] * br0[m]);
        h2[m] = rho[m] * u1[m];
        h30[m] = -u1[m] * ur0_x[m] + u1[m] * br1[m];
        h31[m] = -u1[m] * ur1_x[m] - u1[m] * br0[m];
        h40[m] = rho[m] * ur0[m];
        h41[m] = rho[m] * ur1[m];
    }
    let fwd = |samples: &[f64]| -> Result<ModeField, NonlinearError> {
        let mut f = fourier::forward(grid, samples)?;
        fourier::dealias_in_place(&mut f);
        Ok(f)
    };
    Ok(Sources {
        h1: fwd(&h1)?,
        h2: fwd(&h2)?,
        h3: [fwd(&h30)?, fwd(&h31)?],
        h4: [fwd(&h40)?, fwd(&h41)?],
    })
}

// ---------------------------------------------------------------------------
// Stepper.
// ---------------------------------------------------------------------------

/// Per-mode exact propagators at one step size: the 2x2 longitudinal flow
/// and the 6x6 transverse flow, in FFT slot order.
struct FlowCache {
    gf: Vec<[Complex64; 4]>,
    ge: Vec<[Complex64; 36]>,
}

fn build_cache(grid: &Grid, gamma: f64, t: f64) -> Result<FlowCache, NonlinearError> {
    let n = grid.mode_count();
    let mut gf = vec![[Complex64::new(0.0, 0.0); 4]; n];
    let mut ge = vec![[Complex64::new(0.0, 0.0); 36]; n];
    for m in 0..n {
        let k = grid.wavenumber(m);
        if k < 0.0 {
            continue; // filled by conjugation below
        }
        let pf = green::green_f(t, k, gamma)?;
        for (idx, slot) in gf[m].iter_mut().enumerate() {
            *slot = pf.matrix.at(idx / 2, idx % 2);
        }
        let pe = green::green_e(t, k)?;
        for (idx, slot) in ge[m].iter_mut().enumerate() {
            *slot = pe.matrix.at(idx / 6, idx % 6);
        }
    }
    // G(t, -k) = conj G(t, k) keeps real fields real.
    for m in 0..n {
        if grid.wavenumber(m) < 0.0 {
            let mirror = (n - m) % n;
            gf[m] = gf[mirror].map(|c| c.conj());
            ge[m] = ge[mirror].map(|c| c.conj());
        }
    }
    Ok(FlowCache { gf, ge })
}

/// Integrating-factor midpoint stepper with cached exact mode flows.
pub struct Stepper {
    grid: Grid,
    law: PressureLaw,
    dt: f64,
    full: FlowCache,
    half: FlowCache,
    density_floor: f64,
}

impl Stepper {
    pub fn new(grid: &Grid, law: PressureLaw, dt: f64) -> Result<Self, NonlinearError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(NonlinearError::BadConfig(format!(
                "step size {dt} must be positive and finite"
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            law,
            dt,
            full: build_cache(grid, law.gamma(), dt)?,
            half: build_cache(grid, law.gamma(), dt / 2.0)?,
            density_floor: 0.1,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn density_floor(&self) -> f64 {
        self.density_floor
    }

    pub fn set_density_floor(&mut self, floor: f64) {
        self.density_floor = floor;
    }

    /// Apply the exact linear flow in `cache` to `state + scale * sources`,
    /// leaving `time` untouched.
    ///
    /// The longitudinal block advances in `(rho, u1, E1)` form: the static
    /// part `(s, 0, -i gamma k s)` with `s = (rho + ik E1) / (1 + gamma k^2)`
    /// is a steady state and is split off exactly, and the remainder
    /// satisfies `rho = -ik E1`, where the flow reduces to the 2x2
    /// propagator on `(u1, E1)`. The constraint is therefore preserved to
    /// round-off with no projection step.
    fn flow(
        &self,
        cache: &FlowCache,
        state: &SpecState,
        source: Option<(&Sources, f64)>,
    ) -> SpecState {
        let grid = &self.grid;
        let n = grid.mode_count();
        let gamma = self.law.gamma();
        let i = Complex64::new(0.0, 1.0);

        let mut rho: Vec<Complex64> = state.field(Component::Rho).coeffs().to_vec();
        let mut u1: Vec<Complex64> = state.field(Component::U1).coeffs().to_vec();
        let mut e1: Vec<Complex64> = state.field(Component::E1).coeffs().to_vec();
        let mut tv: Vec<[Complex64; 6]> = (0..n)
            .map(|m| std::array::from_fn(|c| state.field(Component::ALL[3 + c]).coeffs()[m]))
            .collect();
        if let Some((src, scale)) = source {
            for m in 0..n {
                let k = grid.wavenumber(m);
                rho[m] += scale * (-i * k * src.h2.coeffs()[m]);
                u1[m] += scale * src.h1.coeffs()[m];
                e1[m] += scale * src.h2.coeffs()[m];
                tv[m][0] += scale * src.h3[0].coeffs()[m];
                tv[m][1] += scale * src.h3[1].coeffs()[m];
                tv[m][2] += scale * src.h4[0].coeffs()[m];
                tv[m][3] += scale * src.h4[1].coeffs()[m];
            }
        }

        let mut out = SpecState::zeros(grid);
        out.time = state.time;
        for m in 0..n {
            let k = grid.wavenumber(m);
            let gf = &cache.gf[m];
            let s = (rho[m] + i * k * e1[m]) / (1.0 + gamma * k * k);
            let e1c = e1[m] + i * gamma * k * s;
            let u1p = gf[0] * u1[m] + gf[1] * e1c;
            let e1p = gf[2] * u1[m] + gf[3] * e1c;
            out.fields[0].coeffs_mut()[m] = -i * k * e1p + s;
            out.fields[1].coeffs_mut()[m] = u1p;
            out.fields[2].coeffs_mut()[m] = e1p - i * gamma * k * s;

            let ge = &cache.ge[m];
            for row in 0..6 {
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..6 {
                    acc += ge[row * 6 + col] * tv[m][col];
                }
                out.fields[3 + row].coeffs_mut()[m] = acc;
            }
        }
        out
    }

    /// Exact linear flow over one step (no quadratic terms).
    pub fn linear_flow(&self, state: &SpecState) -> SpecState {
        let mut out = self.flow(&self.full, state, None);
        out.time = state.time + self.dt;
        out
    }

    /// Advance the state by one step in place. Returns the pre-projection
    /// constraint residual of the new state; the longitudinal field is then
    /// re-projected onto the constraint manifold.
    pub fn advance(&self, state: &mut SpecState) -> Result<f64, NonlinearError> {
        let h1 = nonlinear_terms(state, &self.law, self.density_floor)?;
        let mid = self.flow(&self.half, state, Some((&h1, self.dt / 2.0)));
        let h2 = nonlinear_terms(&mid, &self.law, self.density_floor)?;
        let mut next = self.flow(&self.full, state, None);
        let boost = self.flow(&self.half, &SpecState::zeros(&self.grid), Some((&h2, 1.0)));
        next.axpy(&boost, self.dt);
        next.time = state.time + self.dt;
        let residual = next.constraint_residual();
        next.project_constraint();
        *state = next;
        Ok(residual)
    }
}

// ---------------------------------------------------------------------------
// Initial data.
// ---------------------------------------------------------------------------

/// Seed the standard initial state from one profile shape: `rho`, `u1`,
/// `ur0` and `br0` carry the profile (distinct seeds for the random
/// family), `E1` is set from the constraint, and the rest start at zero.
pub fn seed_state(grid: &Grid, spec: &ProfileSpec) -> Result<SpecState, NonlinearError> {
    let mut state = SpecState::zeros(grid);
    for (offset, c) in [
        (0, Component::Rho),
        (1, Component::U1),
        (2, Component::Ur0),
        (3, Component::Br0),
    ] {
        let profile = make_profile(ProfileSpec {
            seed: spec.seed.wrapping_add(offset),
            required_low_band_floor: None,
            ..spec.clone()
        })?;
        *state.field_mut(c) = profile.torus_coeffs(grid);
    }
    state.project_constraint();
    Ok(state)
}

// ---------------------------------------------------------------------------
// Run driver.
// ---------------------------------------------------------------------------

/// Hard ceiling on the automatic step size.
pub const DT_CAP: f64 = 0.1;

/// Automatic step size: the advective bound `0.5 dx / max |u1|` capped at
/// [`DT_CAP`] (the exact linear flow imposes no stability limit of its own).
pub fn auto_step_size(state: &SpecState) -> f64 {
    let u_max = fourier::inverse(state.field(Component::U1))
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if u_max > 0.0 {
        (0.5 * state.grid().spacing() / u_max).min(DT_CAP)
    } else {
        DT_CAP
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid_length: f64,
    pub mode_count: usize,
    pub t_end: f64,
    /// `None` selects `min(0.5 dx / max |u1(0)|, DT_CAP)`, then rounds so a
    /// whole number of steps lands on `t_end`.
    pub dt: Option<f64>,
    pub law: PressureLaw,
    pub init: ProfileSpec,
    /// Write a state snapshot every this many steps (requires `output_dir`).
    pub snapshot_every: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub density_floor: f64,
}

impl RunConfig {
    pub fn basic(grid_length: f64, mode_count: usize, t_end: f64, init: ProfileSpec) -> Self {
        Self {
            grid_length,
            mode_count,
            t_end,
            dt: None,
            law: PressureLaw::new(1.0, 1.0).expect("unit law is valid"),
            init,
            snapshot_every: None,
            output_dir: None,
            density_floor: 0.1,
        }
    }
}

/// Time series and reports produced by [`run`].
#[derive(Debug)]
pub struct RunOutput {
    /// Step size actually used.
    pub dt: f64,
    pub times: Vec<f64>,
    /// Joint `L^2` norms per sample:
    /// `[rho, u1, e1, |u_r|, |E_r|, |B_r|]`.
    pub norms: Vec<[f64; 6]>,
    /// Running supremum of the time-weighted decay functional.
    pub q: Vec<f64>,
    pub energy: Vec<EnergyReport>,
    /// Trapezoid integral of the relaxation dissipation over the samples.
    pub dissipation_integral: f64,
    /// Largest pre-projection constraint residual seen over the run.
    pub max_constraint_residual: f64,
    pub snapshots: Vec<PathBuf>,
    pub final_state: SpecState,
}

fn sample_norms(state: &SpecState) -> [f64; 6] {
    [
        state.group_seminorm(&[Component::Rho], 0),
        state.group_seminorm(&[Component::U1], 0),
        state.group_seminorm(&[Component::E1], 0),
        state.group_seminorm(&[Component::Ur0, Component::Ur1], 0),
        state.group_seminorm(&[Component::Er0, Component::Er1], 0),
        state.group_seminorm(&[Component::Br0, Component::Br1], 0),
    ]
}

fn q_sample(state: &SpecState) -> QSample {
    let g = |cs: &[Component], a| state.group_seminorm(cs, a);
    let rho_u1 = [Component::Rho, Component::U1];
    let ur_er = [
        Component::Ur0,
        Component::Ur1,
        Component::Er0,
        Component::Er1,
    ];
    let br = [Component::Br0, Component::Br1];
    QSample {
        t: state.time,
        rho_u1: [g(&rho_u1, 0), g(&rho_u1, 1)],
        e1: [g(&[Component::E1], 0), g(&[Component::E1], 1)],
        ur_er: [g(&ur_er, 0), g(&ur_er, 1)],
        br: [g(&br, 0), g(&br, 1)],
        tail: state.group_seminorm(&Component::ALL, 2),
    }
}

fn write_snapshot(dir: &Path, index: usize, state: &SpecState) -> Result<PathBuf, NonlinearError> {
    let phys = state.physical();
    let path = dir.join(format!("snapshot_{index:04}.csv"));
    let tmp = dir.join(format!("snapshot_{index:04}.csv.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "x,rho,u1,e1,ur0,ur1,er0,er1,br0,br1")?;
        for m in 0..phys.x.len() {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{}",
                phys.x[m],
                phys.rho[m],
                phys.u1[m],
                phys.e1[m],
                phys.ur[0][m],
                phys.ur[1][m],
                phys.er[0][m],
                phys.er[1][m],
                phys.br[0][m],
                phys.br[1][m],
            )?;
        }
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn write_manifest(
    dir: &Path,
    config: &RunConfig,
    dt: f64,
    snapshots: &[(usize, f64, PathBuf)],
) -> Result<PathBuf, NonlinearError> {
    let entries: Vec<serde_json::Value> = snapshots
        .iter()
        .map(|(step, t, path)| {
            serde_json::json!({
                "step": step,
                "t": t,
                "file": path.file_name().and_then(|n| n.to_str()),
            })
        })
        .collect();
    let manifest = serde_json::json!({
        "grid_length": config.grid_length,
        "mode_count": config.mode_count,
        "t_end": config.t_end,
        "dt": dt,
        "pressure_coeff": config.law.coeff(),
        "pressure_exponent": config.law.exponent(),
        "init_amplitude": config.init.amplitude,
        "init_width": config.init.width,
        "seed": config.init.seed,
        "snapshots": entries,
    });
    let path = dir.join("manifest.json");
    let tmp = dir.join("manifest.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(&manifest)?)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Integrate the initial-value problem described by `config`, sampling
/// norms, the decay functional, and the energy report along the way.
pub fn run(config: &RunConfig) -> Result<RunOutput, NonlinearError> {
    let grid = Grid::new(config.grid_length, config.mode_count)?;
    if !(config.t_end.is_finite() && config.t_end > 0.0) {
        return Err(NonlinearError::BadConfig(format!(
            "end time {} must be positive and finite",
            config.t_end
        )));
    }
    let mut state = seed_state(&grid, &config.init)?;

    // Step size: requested, or advective bound capped at DT_CAP; rounded so
    // the step count is whole.
    let dt_raw = match config.dt {
        Some(dt) if dt.is_finite() && dt > 0.0 => dt,
        Some(dt) => {
            return Err(NonlinearError::BadConfig(format!(
                "step size {dt} must be positive and finite"
            )))
        }
        None => auto_step_size(&state),
    };
    let steps = (config.t_end / dt_raw).ceil().max(1.0) as usize;
    let dt = config.t_end / steps as f64;

    let mut stepper = Stepper::new(&grid, config.law, dt)?;
    stepper.set_density_floor(config.density_floor);

    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
    }
    let sample_stride = (steps / 400).max(1);
    let law = config.law;
    let energy_of = |state: &SpecState| -> Result<EnergyReport, NonlinearError> {
        let phys = state.physical();
        diagnostics::energy_report(
            &phys.field_set(state.grid()),
            law.coeff(),
            law.exponent(),
            4,
        )
        .map_err(|e| NonlinearError::BadConfig(format!("energy report failed: {e}")))
    };

    let mut times = vec![state.time];
    let mut norms = vec![sample_norms(&state)];
    let mut q_samples = vec![q_sample(&state)];
    let mut energy = vec![energy_of(&state)?];
    let mut max_residual = 0.0f64;
    let mut snapshots = Vec::new();
    if let (Some(dir), Some(_)) = (&config.output_dir, config.snapshot_every) {
        snapshots.push((0, state.time, write_snapshot(dir, 0, &state)?));
    }

    for step in 1..=steps {
        let residual = stepper.advance(&mut state)?;
        max_residual = max_residual.max(residual);
        if step % sample_stride == 0 || step == steps {
            times.push(state.time);
            norms.push(sample_norms(&state));
            q_samples.push(q_sample(&state));
            energy.push(energy_of(&state)?);
        }
        if let (Some(dir), Some(every)) = (&config.output_dir, config.snapshot_every) {
            if every > 0 && (step % every == 0 || step == steps) {
                snapshots.push((
                    step,
                    state.time,
                    write_snapshot(dir, snapshots.len(), &state)?,
                ));
            }
        }
    }

    let q = diagnostics::q_functional(&q_samples)
        .map_err(|e| NonlinearError::BadConfig(format!("decay functional failed: {e}")))?;
    let mut dissipation_integral = 0.0;
    for w in 1..times.len() {
        dissipation_integral +=
            0.5 * (times[w] - times[w - 1]) * (energy[w].dissipation + energy[w - 1].dissipation);
    }
    let snapshot_paths = if let Some(dir) = &config.output_dir {
        let mut paths: Vec<PathBuf> = snapshots.iter().map(|(_, _, p)| p.clone()).collect();
        if !snapshots.is_empty() || config.snapshot_every.is_some() {
            paths.push(write_manifest(dir, config, dt, &snapshots)?);
        }
        paths
    } else {
        Vec::new()
    };

    Ok(RunOutput {
        dt,
        times,
        norms,
        q,
        energy,
        dissipation_integral,
        max_constraint_residual: max_residual,
        snapshots: snapshot_paths,
        final_state: state,
    })
}
