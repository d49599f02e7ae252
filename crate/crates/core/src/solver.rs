//! Time integration of the channel system.
//!
//! Both variants advance with the classic explicit fourth-order Runge-Kutta
//! scheme; every stage tendency is passed through the discrete solenoidal
//! projection, so the pressure gradient is never assembled (the projection
//! removes exactly the gradient part, which coincides with the two-part
//! elliptic pressure construction — cross-checked in tests). The dissipative
//! variant adds the explicitly-treated, ghost-closed Laplacian under the
//! friction wall law; the zero-dissipation variant drops it and keeps only
//! impermeability, which the projection enforces.
//!
//! Running one integrator for both variants keeps paired comparisons
//! (dissipative vs zero-dissipation from shared data) free of
//! scheme-mismatch artifacts.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{self, WallLaw};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::ChannelGrid;
use crate::leray::LerayProjector;
use crate::norms;
use crate::ops;
use crate::records::{CheckpointRef, RegularitySample, RunRecord, Series};

/// Which system the solver advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Dissipative system: positive viscosity/diffusivity, friction walls.
    Viscous,
    /// Zero-dissipation system: impermeable walls only.
    Ideal,
}

fn default_regularity_order() -> usize {
    2
}

fn default_sample_stride() -> usize {
    8
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Spatial dimension, 2 or 3.
    pub dim: usize,
    /// Nodes per tangential direction (even, >= 4).
    pub n_tangential: usize,
    /// Nodes across the channel (odd, >= 5).
    pub n_normal: usize,
    /// Joint viscosity / magnetic-diffusivity coefficient, in `[0, 1]`.
    pub epsilon: f64,
    /// Friction (slip) coefficient of the wall law, `|zeta| <= 1`; shared by
    /// the velocity and the magnetic field. Ignored by the ideal variant.
    pub zeta: f64,
    /// Time step; must divide `t_end` to rounding.
    pub dt: f64,
    /// Horizon.
    pub t_end: f64,
    pub variant: Variant,
    /// Name of the initial condition in the registry.
    pub ic_name: String,
    /// Named numeric parameters of the initial condition.
    #[serde(default)]
    pub ic_params: BTreeMap<String, f64>,
    /// Times at which snapshots are captured (snapped to the nearest step).
    #[serde(default)]
    pub checkpoint_times: Vec<f64>,
    /// Order of the regularity functional sampled during the run (1..=4).
    #[serde(default = "default_regularity_order")]
    pub regularity_order: usize,
    /// Steps between regularity samples (>= 1).
    #[serde(default = "default_sample_stride")]
    pub sample_stride: usize,
}

impl SimConfig {
    /// Number of time steps implied by `dt` and `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// The wall law the variant runs under.
    pub fn wall_law(&self) -> WallLaw {
        match self.variant {
            Variant::Viscous => WallLaw::Navier { zeta: self.zeta },
            Variant::Ideal => WallLaw::Slip,
        }
    }

    /// Named initial-condition parameter with a default.
    pub fn param(&self, name: &str, default: f64) -> f64 {
        self.ic_params.get(name).copied().unwrap_or(default)
    }

    /// Validate every field; grid constraints are checked by grid
    /// construction.
    pub fn validate(&self) -> Result<()> {
        ChannelGrid::new(self.dim, self.n_tangential, self.n_normal)?;
        if !self.epsilon.is_finite() || !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(
                "epsilon",
                format!("must lie in [0, 1], got {}", self.epsilon),
            ));
        }
        if !self.zeta.is_finite() || self.zeta.abs() > 1.0 {
            return Err(Error::config(
                "zeta",
                format!("must satisfy |zeta| <= 1, got {}", self.zeta),
            ));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::config(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::config(
                "t_end",
                format!("must be non-negative, got {}", self.t_end),
            ));
        }
        match self.variant {
            Variant::Viscous if self.epsilon == 0.0 => {
                return Err(Error::config(
                    "variant",
                    "the viscous variant needs epsilon > 0",
                ));
            }
            Variant::Ideal if self.epsilon != 0.0 => {
                return Err(Error::config(
                    "variant",
                    format!(
                        "the ideal variant needs epsilon = 0, got {}",
                        self.epsilon
                    ),
                ));
            }
            _ => {}
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.round().max(1.0) {
            return Err(Error::config(
                "dt",
                format!(
                    "must divide t_end; t_end/dt = {steps} is not close to an integer"
                ),
            ));
        }
        if !(1..=norms::MAX_CONORMAL_ORDER).contains(&self.regularity_order) {
            return Err(Error::config(
                "regularity_order",
                format!(
                    "must lie in 1..={}, got {}",
                    norms::MAX_CONORMAL_ORDER,
                    self.regularity_order
                ),
            ));
        }
        if self.sample_stride == 0 {
            return Err(Error::config("sample_stride", "must be >= 1"));
        }
        for &tc in &self.checkpoint_times {
            if !tc.is_finite() || tc < 0.0 || tc > self.t_end + 0.5 * self.dt {
                return Err(Error::config(
                    "checkpoint_times",
                    format!("time {tc} outside [0, t_end]"),
                ));
            }
        }
        Ok(())
    }
}

/// A velocity/magnetic pair at one time.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    pub v: VectorField,
    pub h: VectorField,
}

/// Tolerance on the relative divergence residual of admissible states.
pub const DIV_TOLERANCE: f64 = 1e-9;
/// Tolerance on the normal trace of admissible states.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// Relative divergence residual: the largest nodal divergence scaled by the
/// field magnitude times the largest resolvable wavenumber.
pub fn relative_divergence(f: &VectorField) -> f64 {
    let grid = f.grid();
    let div = ops::divergence(f);
    let kappa = (grid.n_tangential() as f64 / 2.0).max(1.0 / grid.h_normal());
    div.max_abs() / (f.max_magnitude() * kappa).max(1.0)
}

/// Largest absolute normal component on either wall.
pub fn wall_trace_max(f: &VectorField) -> f64 {
    let grid = f.grid();
    let normal = f.normal_comp();
    let nz = grid.n_normal();
    let mut worst = 0.0f64;
    for line in normal.chunks_exact(nz) {
        worst = worst.max(line[0].abs()).max(line[nz - 1].abs());
    }
    worst
}

impl FieldState {
    /// Check admissibility: finite values, relative divergence and normal
    /// traces within tolerance, matching grids.
    pub fn validate(&self) -> Result<()> {
        self.v.grid().compatible(self.h.grid())?;
        if !self.v.is_finite() || !self.h.is_finite() || !self.t.is_finite() {
            return Err(Error::Numerical(
                "state contains non-finite values".to_string(),
            ));
        }
        for (name, f) in [("velocity", &self.v), ("magnetic field", &self.h)] {
            let div = relative_divergence(f);
            if div > DIV_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "{name} divergence residual {div:.3e} exceeds {DIV_TOLERANCE:.1e}"
                )));
            }
            let trace = wall_trace_max(f);
            if trace > TRACE_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "{name} wall-normal trace {trace:.3e} exceeds {TRACE_TOLERANCE:.1e}"
                )));
            }
        }
        Ok(())
    }

    /// Total energy `(|v|^2 + |H|^2) / 2` in the trapezoid-in-z quadrature.
    /// This is the quadratic form the spatial scheme treats exactly: the
    /// skew-form transport is energy-neutral against these weights and the
    /// projector is self-adjoint in them, so without dissipation this value
    /// is conserved to integrator and projector rounding.
    pub fn energy(&self) -> f64 {
        0.5 * (trap_inner(&self.v, &self.v) + trap_inner(&self.h, &self.h))
    }

    /// Cross helicity `<v, H>` in the same quadrature as [`Self::energy`].
    /// Conserved by the dissipation-free dynamics up to integrator error.
    pub fn cross_helicity(&self) -> f64 {
        trap_inner(&self.v, &self.h)
    }
}

/// Inner product in the trapezoid-in-z quadrature, the metric of the scheme's
/// conservation statements (see [`FieldState::energy`]).
fn trap_inner(a: &VectorField, b: &VectorField) -> f64 {
    let grid = a.grid();
    let mut prod = vec![0.0; grid.n_nodes()];
    let mut acc = 0.0;
    for c in 0..grid.dim() {
        for ((p, x), y) in prod.iter_mut().zip(a.comp(c)).zip(b.comp(c)) {
            *p = x * y;
        }
        acc += grid.integrate_trapezoid(&prod);
    }
    acc
}

/// Stability bound for the explicit integrator:
/// `0.5 * min(min_d h_d / speed_d, h_min^2 / (2 dim epsilon))`, where
/// `speed_d` is the largest transport speed (velocity or magnetic) in
/// direction `d`. Infinite when nothing moves and epsilon = 0.
pub fn cfl_bound(grid: &ChannelGrid, v: &VectorField, h: &VectorField, epsilon: f64) -> f64 {
    let dim = grid.dim();
    let mut advective = f64::INFINITY;
    for d in 0..dim {
        let spacing = if d + 1 == dim {
            grid.h_normal()
        } else {
            grid.h_tangential()
        };
        let speed = v
            .comp(d)
            .iter()
            .chain(h.comp(d))
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        if speed > 0.0 {
            advective = advective.min(spacing / speed);
        }
    }
    let h_min = grid.h_tangential().min(grid.h_normal());
    let diffusive = if epsilon > 0.0 {
        h_min * h_min / (2.0 * dim as f64 * epsilon)
    } else {
        f64::INFINITY
    };
    0.5 * advective.min(diffusive)
}

/// A configured solver holding the grid and the projector, which are
/// expensive to build and shared across steps.
pub struct Solver {
    cfg: SimConfig,
    grid: Arc<ChannelGrid>,
    projector: LerayProjector,
    law: WallLaw,
}

/// Everything a run produces: the serializable record and the snapshot
/// states captured at the configured checkpoint times.
pub struct RunOutput {
    pub record: RunRecord,
    pub snapshots: Vec<FieldState>,
}

impl Solver {
    pub fn new(cfg: SimConfig) -> Result<Solver> {
        cfg.validate()?;
        let grid = ChannelGrid::new(cfg.dim, cfg.n_tangential, cfg.n_normal)?;
        let projector = LerayProjector::new(&grid);
        let law = cfg.wall_law();
        Ok(Solver {
            cfg,
            grid,
            projector,
            law,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    pub fn projector(&self) -> &LerayProjector {
        &self.projector
    }

    /// Build and project the configured initial condition.
    pub fn initial_state(&self) -> Result<FieldState> {
        let (v_raw, h_raw) = build_profile(&self.cfg, &self.grid)?;
        let v = self.projector.project(&v_raw)?;
        let h = self.projector.project(&h_raw)?;
        let state = FieldState { t: 0.0, v, h };
        state.validate()?;
        Ok(state)
    }

    /// Projected tendency of both fields. The transport terms are
    /// `-(v.grad)v + (H.grad)H` and `-(v.grad)H + (H.grad)v`, evaluated in
    /// skew-symmetric split form so that transport moves energy between the
    /// fields without creating any (see [`ops::advect_skew`]); the
    /// dissipative variant adds `epsilon * Laplacian` closed with the wall
    /// law. Projecting the magnetic tendency doubles as divergence cleaning.
    fn tendency(&self, v: &VectorField, h: &VectorField) -> Result<(VectorField, VectorField)> {
        let vv = ops::advect_skew(v, v)?;
        let hh = ops::advect_skew(h, h)?;
        let vh = ops::advect_skew(v, h)?;
        let hv = ops::advect_skew(h, v)?;
        let mut rv = hh;
        rv.add_scaled(&vv, -1.0);
        let mut rh = hv;
        rh.add_scaled(&vh, -1.0);
        if self.cfg.epsilon > 0.0 {
            rv.add_scaled(&boundary::laplacian_closed(v, self.law), self.cfg.epsilon);
            rh.add_scaled(&boundary::laplacian_closed(h, self.law), self.cfg.epsilon);
        }
        let rv = self.projector.project(&rv)?;
        let rh = self.projector.project(&rh)?;
        Ok((rv, rh))
    }

    /// Stability bound at the given state.
    pub fn stability_bound(&self, s: &FieldState) -> f64 {
        cfl_bound(&self.grid, &s.v, &s.h, self.cfg.epsilon)
    }

    /// Advance one step with fourth-order Runge-Kutta. Errors on a violated
    /// stability bound or a non-finite result.
    pub fn step(&self, s: &FieldState) -> Result<FieldState> {
        let dt = self.cfg.dt;
        let bound = self.stability_bound(s);
        if dt > bound {
            return Err(Error::StepSize { dt, bound });
        }
        let offset = |vb: &VectorField, hb: &VectorField, kv: &VectorField, kh: &VectorField, c: f64| {
            let mut v = vb.clone();
            v.add_scaled(kv, c);
            let mut h = hb.clone();
            h.add_scaled(kh, c);
            (v, h)
        };
        let (k1v, k1h) = self.tendency(&s.v, &s.h)?;
        let (v2, h2) = offset(&s.v, &s.h, &k1v, &k1h, 0.5 * dt);
        let (k2v, k2h) = self.tendency(&v2, &h2)?;
        let (v3, h3) = offset(&s.v, &s.h, &k2v, &k2h, 0.5 * dt);
        let (k3v, k3h) = self.tendency(&v3, &h3)?;
        let (v4, h4) = offset(&s.v, &s.h, &k3v, &k3h, dt);
        let (k4v, k4h) = self.tendency(&v4, &h4)?;
        let mut v = s.v.clone();
        let mut h = s.h.clone();
        let sixth = dt / 6.0;
        v.add_scaled(&k1v, sixth);
        v.add_scaled(&k2v, 2.0 * sixth);
        v.add_scaled(&k3v, 2.0 * sixth);
        v.add_scaled(&k4v, sixth);
        h.add_scaled(&k1h, sixth);
        h.add_scaled(&k2h, 2.0 * sixth);
        h.add_scaled(&k3h, 2.0 * sixth);
        h.add_scaled(&k4h, sixth);
        let t = s.t + dt;
        if !v.is_finite() || !h.is_finite() {
            let step = (t / dt).round() as usize;
            return Err(Error::BlowUp { t, step });
        }
        Ok(FieldState { t, v, h })
    }

    /// Run to the horizon, recording diagnostics every step, sampling the
    /// regularity functional on the configured stride, and capturing
    /// snapshots at the checkpoint times (snapped to steps).
    pub fn run(&self) -> Result<RunOutput> {
        let mut state = self.initial_state()?;
        let n_steps = self.cfg.n_steps();
        if n_steps > 0 {
            let bound = self.stability_bound(&state);
            if self.cfg.dt > bound {
                return Err(Error::StepSize {
                    dt: self.cfg.dt,
                    bound,
                });
            }
        }
        let mut checkpoint_steps: Vec<usize> = self
            .cfg
            .checkpoint_times
            .iter()
            .map(|&tc| (tc / self.cfg.dt).round() as usize)
            .map(|k| k.min(n_steps))
            .collect();
        checkpoint_steps.sort_unstable();
        checkpoint_steps.dedup();

        let mut series = Series::default();
        let mut regularity = Vec::new();
        let mut checkpoints = Vec::new();
        let mut snapshots = Vec::new();

        let capture = |istep: usize,
                           s: &FieldState,
                           series: &mut Series,
                           regularity: &mut Vec<RegularitySample>|
         -> Result<()> {
            self.observe(istep, n_steps, s, series, regularity)
        };
        capture(0, &state, &mut series, &mut regularity)?;
        if checkpoint_steps.contains(&0) {
            checkpoints.push(CheckpointRef {
                step: 0,
                t: state.t,
                path: None,
            });
            snapshots.push(state.clone());
        }
        for istep in 1..=n_steps {
            state = self.step(&state)?;
            capture(istep, &state, &mut series, &mut regularity)?;
            if checkpoint_steps.contains(&istep) {
                checkpoints.push(CheckpointRef {
                    step: istep,
                    t: state.t,
                    path: None,
                });
                snapshots.push(state.clone());
            }
        }
        let record = RunRecord {
            config: self.cfg.clone(),
            series,
            regularity,
            checkpoints,
        };
        record.validate()?;
        Ok(RunOutput { record, snapshots })
    }

    fn observe(
        &self,
        istep: usize,
        n_steps: usize,
        s: &FieldState,
        series: &mut Series,
        regularity: &mut Vec<RegularitySample>,
    ) -> Result<()> {
        let energy = s.energy();
        if !energy.is_finite() {
            return Err(Error::BlowUp { t: s.t, step: istep });
        }
        series.t.push(s.t);
        series.energy.push(energy);
        series.strain_v_sq.push(ops::strain(&s.v).frobenius_sq());
        series.strain_h_sq.push(ops::strain(&s.h).frobenius_sq());
        let wv = boundary::wall_tangential_square(&s.v);
        let wh = boundary::wall_tangential_square(&s.h);
        series.wall_flux.push(
            self.grid.integrate_wall(&wv.lower)
                + self.grid.integrate_wall(&wv.upper)
                + self.grid.integrate_wall(&wh.lower)
                + self.grid.integrate_wall(&wh.upper),
        );
        series.div_v.push(relative_divergence(&s.v));
        series.div_h.push(relative_divergence(&s.h));
        let rv = boundary::vorticity_residual_max(&s.v, self.law);
        let rh = boundary::vorticity_residual_max(&s.h, self.law);
        series
            .wall_vorticity
            .push(rv.lower.max(rv.upper).max(rh.lower).max(rh.upper));
        series.cross_helicity.push(s.cross_helicity());
        if istep % self.cfg.sample_stride == 0 || istep == n_steps {
            let budget = norms::regularity_budget(&s.v, &s.h, self.cfg.regularity_order)?;
            regularity.push(RegularitySample {
                step: istep,
                t: s.t,
                value: budget.total(),
            });
        }
        Ok(())
    }
}

/// Build the configured initial condition and project it.
pub fn initial_condition(cfg: &SimConfig) -> Result<FieldState> {
    Solver::new(cfg.clone())?.initial_state()
}

/// One step of the dissipative system. For repeated stepping build a
/// [`Solver`] once instead.
pub fn step_viscous(s: &FieldState, cfg: &SimConfig) -> Result<FieldState> {
    if cfg.variant != Variant::Viscous {
        return Err(Error::Usage(
            "step_viscous needs a configuration with the viscous variant".to_string(),
        ));
    }
    Solver::new(cfg.clone())?.step(s)
}

/// One step of the zero-dissipation system. For repeated stepping build a
/// [`Solver`] once instead.
pub fn step_ideal(s: &FieldState, cfg: &SimConfig) -> Result<FieldState> {
    if cfg.variant != Variant::Ideal {
        return Err(Error::Usage(
            "step_ideal needs a configuration with the ideal variant".to_string(),
        ));
    }
    Solver::new(cfg.clone())?.step(s)
}

/// Run a configuration to its horizon.
pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    Solver::new(cfg.clone())?.run()
}

/// Names accepted by the initial-condition registry.
pub const IC_NAMES: [&str; 4] = [
    "elsasser",
    "parallel-shear",
    "random-smooth",
    "taylor-green-channel",
];

fn build_profile(
    cfg: &SimConfig,
    grid: &Arc<ChannelGrid>,
) -> Result<(VectorField, VectorField)> {
    let dim = cfg.dim;
    let zc = dim - 1;
    match cfg.ic_name.as_str() {
        "parallel-shear" => {
            let k = cfg.param("k", 1.0).round();
            let a = cfg.param("amplitude", 1.0);
            let v = VectorField::from_fn(grid, |c, comp| {
                if comp == 0 {
                    a * (k * std::f64::consts::PI * c[zc]).cos()
                } else {
                    0.0
                }
            });
            Ok((v, VectorField::zeros(grid)))
        }
        "elsasser" => {
            let k = cfg.param("k", 1.0).round();
            let a = cfg.param("amplitude", 1.0);
            let profile = VectorField::from_fn(grid, |c, comp| {
                if comp == 0 {
                    a * (k * std::f64::consts::PI * c[zc]).cos()
                } else {
                    0.0
                }
            });
            Ok((profile.clone(), profile))
        }
        "taylor-green-channel" => {
            let a = cfg.param("amplitude", 1.0);
            let hs = cfg.param("h_scale", 0.5);
            let pi = std::f64::consts::PI;
            // Streamfunction (a/pi) sin x sin pi z: divergence-free with
            // vanishing normal trace.
            let v = VectorField::from_fn(grid, |c, comp| {
                if comp == 0 {
                    a * c[0].sin() * (pi * c[zc]).cos()
                } else if comp == zc {
                    -(a / pi) * c[0].cos() * (pi * c[zc]).sin()
                } else {
                    0.0
                }
            });
            // Companion cell pattern shifted a quarter period in x.
            let h = VectorField::from_fn(grid, |c, comp| {
                if comp == 0 {
                    hs * c[0].cos() * (pi * c[zc]).cos()
                } else if comp == zc {
                    (hs / pi) * c[0].sin() * (pi * c[zc]).sin()
                } else {
                    0.0
                }
            });
            Ok((v, h))
        }
        "random-smooth" => Ok(random_smooth(cfg, grid)),
        other => Err(Error::config(
            "ic_name",
            format!(
                "unknown initial condition `{other}`; available: {}",
                IC_NAMES.join(", ")
            ),
        )),
    }
}

/// One Fourier-sine mode of a tangential stream potential.
struct PotentialMode {
    kx: f64,
    ky: f64,
    j: f64,
    amp: f64,
    phase: f64,
}

/// Seeded smooth random field. Each field derives from `dim - 1` stream
/// potentials `psi_p = sum amp cos(kx x + ky y + phase) sin(j pi z)` via
/// `v = (d_z psi_1 [, d_z psi_2], -d_x psi_1 [- d_y psi_2])`, which is
/// divergence-free with vanishing normal trace by construction. Coefficients
/// decay quadratically with the mode index so the field is smooth; the
/// result is rescaled to the requested amplitude.
fn random_smooth(cfg: &SimConfig, grid: &Arc<ChannelGrid>) -> (VectorField, VectorField) {
    let seed = cfg.param("seed", 7.0) as u64;
    let modes = (cfg.param("modes", 3.0) as usize).max(1);
    let amplitude = cfg.param("amplitude", 0.5);
    let dim = cfg.dim;
    let n_pot = dim - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_field = |rng: &mut ChaCha8Rng| -> Vec<Vec<PotentialMode>> {
        (0..n_pot)
            .map(|_| {
                let mut list = Vec::new();
                for kx in 0..=modes {
                    let ky_range: Vec<i64> = if dim == 3 {
                        (-(modes as i64)..=modes as i64).collect()
                    } else {
                        vec![0]
                    };
                    for ky in ky_range {
                        for j in 1..=modes {
                            let decay =
                                1.0 + (kx * kx + (ky * ky) as usize + j * j) as f64;
                            list.push(PotentialMode {
                                kx: kx as f64,
                                ky: ky as f64,
                                j: j as f64,
                                amp: rng.gen_range(-1.0..1.0) / decay,
                                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                            });
                        }
                    }
                }
                list
            })
            .collect()
    };
    let v_modes = draw_field(&mut rng);
    let h_modes = draw_field(&mut rng);

    let pi = std::f64::consts::PI;
    let evaluate = |mode_sets: &[Vec<PotentialMode>]| -> VectorField {
        VectorField::from_fn(grid, |c, comp| {
            let x = c[0];
            let y = if dim == 3 { c[1] } else { 0.0 };
            let z = c[dim - 1];
            if comp < n_pot {
                // d_z of potential `comp`.
                mode_sets[comp]
                    .iter()
                    .map(|m| {
                        m.amp
                            * (m.kx * x + m.ky * y + m.phase).cos()
                            * m.j
                            * pi
                            * (m.j * pi * z).cos()
                    })
                    .sum()
            } else {
                // -(d_x psi_1 [+ d_y psi_2]).
                let mut val = 0.0;
                for (p, modes) in mode_sets.iter().enumerate() {
                    let kdir = |m: &PotentialMode| if p == 0 { m.kx } else { m.ky };
                    val -= modes
                        .iter()
                        .map(|m| {
                            -m.amp
                                * kdir(m)
                                * (m.kx * x + m.ky * y + m.phase).sin()
                                * (m.j * pi * z).sin()
                        })
                        .sum::<f64>();
                }
                val
            }
        })
    };
    let mut v = evaluate(&v_modes);
    let mut h = evaluate(&h_modes);
    let peak = v.max_magnitude().max(h.max_magnitude());
    if peak > 0.0 {
        v.scale(amplitude / peak);
        h.scale(amplitude / peak);
    }
    (v, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn base_config() -> SimConfig {
        SimConfig {
            dim: 2,
            n_tangential: 16,
            n_normal: 33,
            epsilon: 0.01,
            zeta: 0.0,
            dt: 0.01,
            t_end: 0.1,
            variant: Variant::Viscous,
            ic_name: "parallel-shear".to_string(),
            ic_params: BTreeMap::new(),
            checkpoint_times: vec![],
            regularity_order: 2,
            sample_stride: 4,
        }
    }

    #[test]
    fn config_validation_catches_inconsistent_fields() {
        let ok = base_config();
        ok.validate().unwrap();

        let mut eps = base_config();
        eps.epsilon = 1.5;
        assert!(matches!(eps.validate(), Err(Error::Config { field, .. }) if field == "epsilon"));

        let mut zeta = base_config();
        zeta.zeta = -1.5;
        assert!(matches!(zeta.validate(), Err(Error::Config { field, .. }) if field == "zeta"));

        let mut ideal = base_config();
        ideal.variant = Variant::Ideal;
        assert!(matches!(ideal.validate(), Err(Error::Config { field, .. }) if field == "variant"));

        let mut viscous_zero = base_config();
        viscous_zero.epsilon = 0.0;
        assert!(viscous_zero.validate().is_err());

        let mut ragged_dt = base_config();
        ragged_dt.dt = 0.03;
        assert!(matches!(ragged_dt.validate(), Err(Error::Config { field, .. }) if field == "dt"));
    }

    #[test]
    fn unknown_initial_condition_lists_the_registry() {
        let mut cfg = base_config();
        cfg.ic_name = "vortex-sheet".to_string();
        match initial_condition(&cfg) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "ic_name");
                for name in IC_NAMES {
                    assert!(message.contains(name), "message lacks {name}: {message}");
                }
            }
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    /// The shear profile is already solenoidal and trace-free, so the
    /// projection must leave it unchanged.
    #[test]
    fn shear_profile_is_a_projection_fixed_point() {
        let cfg = base_config();
        let state = initial_condition(&cfg).unwrap();
        let grid = state.v.grid().clone();
        let raw = VectorField::from_fn(&grid, |c, comp| {
            if comp == 0 {
                (PI * c[1]).cos()
            } else {
                0.0
            }
        });
        let mut worst = 0.0f64;
        for c in 0..2 {
            for (a, b) in state.v.comp(c).iter().zip(raw.comp(c)) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-11, "projection moved the shear profile by {worst}");
        assert_eq!(state.h.max_magnitude(), 0.0);
    }

    #[test]
    fn elsasser_data_has_identical_components() {
        let mut cfg = base_config();
        cfg.ic_name = "elsasser".to_string();
        let state = initial_condition(&cfg).unwrap();
        for c in 0..2 {
            assert_eq!(state.v.comp(c), state.h.comp(c));
        }
    }

    #[test]
    fn random_smooth_is_deterministic_and_solenoidal() {
        let mut cfg = base_config();
        cfg.ic_name = "random-smooth".to_string();
        cfg.ic_params.insert("seed".to_string(), 7.0);
        cfg.ic_params.insert("modes".to_string(), 3.0);
        let a = initial_condition(&cfg).unwrap();
        let b = initial_condition(&cfg).unwrap();
        for c in 0..2 {
            assert_eq!(a.v.comp(c), b.v.comp(c));
            assert_eq!(a.h.comp(c), b.h.comp(c));
        }
        assert!(ops::divergence(&a.v).max_abs() < 1e-10);
        assert!(ops::divergence(&a.h).max_abs() < 1e-10);
        assert!(a.v.max_magnitude() > 0.0);

        let mut other_seed = cfg.clone();
        other_seed.ic_params.insert("seed".to_string(), 8.0);
        let c = initial_condition(&other_seed).unwrap();
        let mut diff = 0.0f64;
        for (x, y) in a.v.comp(0).iter().zip(c.v.comp(0)) {
            diff = diff.max((x - y).abs());
        }
        assert!(diff > 1e-6, "different seeds produced the same field");
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut cfg = base_config();
        cfg.ic_params.insert("amplitude".to_string(), 0.0);
        let solver = Solver::new(cfg).unwrap();
        let mut state = solver.initial_state().unwrap();
        for _ in 0..3 {
            state = solver.step(&state).unwrap();
            assert_eq!(state.v.max_magnitude(), 0.0);
            assert_eq!(state.h.max_magnitude(), 0.0);
        }
    }

    /// Free-slip shear decays like the separation-of-variables solution
    /// `v_1(z, t) = e^{-eps pi^2 t} cos(pi z)`: advection and pressure vanish
    /// and the mirror ghost closure reproduces the even extension, so the
    /// only error is the second-order interior stencil plus the integrator.
    #[test]
    fn shear_flow_matches_the_heat_kernel_decay() {
        let mut cfg = base_config();
        cfg.dt = 0.005;
        cfg.t_end = 0.5;
        let solver = Solver::new(cfg.clone()).unwrap();
        let mut state = solver.initial_state().unwrap();
        while state.t < cfg.t_end - 0.5 * cfg.dt {
            state = solver.step(&state).unwrap();
        }
        let grid = state.v.grid().clone();
        let decay = (-cfg.epsilon * PI * PI * cfg.t_end).exp();
        let exact = VectorField::from_fn(&grid, |c, comp| {
            if comp == 0 {
                decay * (PI * c[1]).cos()
            } else {
                0.0
            }
        });
        let mut worst = 0.0f64;
        for c in 0..2 {
            for (a, b) in state.v.comp(c).iter().zip(exact.comp(c)) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 5e-4, "max error {worst} vs heat-kernel solution");
    }

    /// With v = H the transport terms cancel in pairs, leaving both fields
    /// obeying the same diffusion equation; they must stay identical.
    #[test]
    fn elsasser_state_keeps_fields_identical_under_viscous_stepping() {
        let mut cfg = base_config();
        cfg.ic_name = "elsasser".to_string();
        cfg.zeta = 0.4;
        let solver = Solver::new(cfg).unwrap();
        let mut state = solver.initial_state().unwrap();
        for _ in 0..10 {
            state = solver.step(&state).unwrap();
        }
        let mut gap = 0.0f64;
        for c in 0..2 {
            for (a, b) in state.v.comp(c).iter().zip(state.h.comp(c)) {
                gap = gap.max((a - b).abs());
            }
        }
        assert!(gap <= 1e-12, "fields drifted apart by {gap}");
        // The common profile must still decay: energy strictly below the
        // initial value (pi in total; each field contributes pi/2).
        let start = solver.initial_state().unwrap();
        assert!((start.energy() - PI).abs() < 0.05 * PI);
        assert!(state.energy() < start.energy());
    }

    #[test]
    fn ideal_elsasser_state_is_exactly_steady() {
        let mut cfg = base_config();
        cfg.ic_name = "elsasser".to_string();
        cfg.variant = Variant::Ideal;
        cfg.epsilon = 0.0;
        let solver = Solver::new(cfg).unwrap();
        let start = solver.initial_state().unwrap();
        let mut state = start.clone();
        for _ in 0..5 {
            state = solver.step(&state).unwrap();
        }
        let mut drift = 0.0f64;
        for c in 0..2 {
            for (a, b) in state.v.comp(c).iter().zip(start.v.comp(c)) {
                drift = drift.max((a - b).abs());
            }
        }
        assert!(drift <= 1e-13, "steady state drifted by {drift}");
    }

    #[test]
    fn ideal_shear_is_steady() {
        let mut cfg = base_config();
        cfg.variant = Variant::Ideal;
        cfg.epsilon = 0.0;
        let solver = Solver::new(cfg).unwrap();
        let start = solver.initial_state().unwrap();
        let state = solver.step(&start).unwrap();
        let mut drift = 0.0f64;
        for (a, b) in state.v.comp(0).iter().zip(start.v.comp(0)) {
            drift = drift.max((a - b).abs());
        }
        assert!(drift <= 1e-12);
    }

    #[test]
    fn oversized_steps_are_rejected_with_the_bound() {
        let mut cfg = base_config();
        cfg.dt = 10.0;
        cfg.t_end = 10.0;
        let solver = Solver::new(cfg).unwrap();
        let state = solver.initial_state().unwrap();
        match solver.step(&state) {
            Err(Error::StepSize { dt, bound }) => {
                assert_eq!(dt, 10.0);
                assert!(bound < 10.0);
            }
            other => panic!("expected a step-size error, got {other:?}"),
        }
    }

    #[test]
    fn zero_horizon_records_only_initial_diagnostics() {
        let mut cfg = base_config();
        cfg.t_end = 0.0;
        let out = run(&cfg).unwrap();
        assert_eq!(out.record.series.len(), 1);
        assert_eq!(out.record.series.t[0], 0.0);
        assert_eq!(out.record.regularity.len(), 1);
    }

    #[test]
    fn identical_configurations_produce_bit_identical_records() {
        let mut cfg = base_config();
        cfg.ic_name = "random-smooth".to_string();
        cfg.t_end = 0.05;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.record, b.record);
        assert_eq!(
            a.record.to_json().unwrap(),
            b.record.to_json().unwrap()
        );
    }

    /// Energy of the decaying shear tracks the closed-form envelope
    /// `E(t) = E(0) e^{-2 eps pi^2 t}` to within a percent at t = 1.
    #[test]
    fn recorded_energy_follows_the_heat_envelope() {
        let mut cfg = base_config();
        cfg.dt = 0.01;
        cfg.t_end = 1.0;
        let out = run(&cfg).unwrap();
        let series = &out.record.series;
        let e0 = series.energy[0];
        let e1 = *series.energy.last().unwrap();
        let expect = e0 * (-2.0 * cfg.epsilon * PI * PI * cfg.t_end).exp();
        assert!(
            (e1 - expect).abs() <= 0.01 * expect,
            "final energy {e1} vs envelope {expect}"
        );
        // Divergence and trace residuals stay at the projector's level.
        assert!(series.div_v.iter().all(|&d| d <= 1e-9));
        assert!(series.div_h.iter().all(|&d| d <= 1e-9));
    }

    #[test]
    fn checkpoints_are_snapped_to_steps_and_captured() {
        let mut cfg = base_config();
        cfg.t_end = 0.1;
        cfg.checkpoint_times = vec![0.0, 0.052, 0.1];
        let out = run(&cfg).unwrap();
        let steps: Vec<usize> = out.record.checkpoints.iter().map(|c| c.step).collect();
        assert_eq!(steps, vec![0, 5, 10]);
        assert_eq!(out.snapshots.len(), 3);
        assert!((out.snapshots[1].t - 0.05).abs() < 1e-12);
    }

    #[test]
    fn step_dispatchers_enforce_their_variant() {
        let cfg = base_config();
        let state = initial_condition(&cfg).unwrap();
        assert!(matches!(
            step_ideal(&state, &cfg),
            Err(Error::Usage(_))
        ));
        let mut ideal = base_config();
        ideal.variant = Variant::Ideal;
        ideal.epsilon = 0.0;
        assert!(matches!(
            step_viscous(&state, &ideal),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn non_finite_states_are_reported_as_blow_up() {
        let cfg = base_config();
        let solver = Solver::new(cfg).unwrap();
        let mut state = solver.initial_state().unwrap();
        state.v.comp_mut(0)[10] = f64::NAN;
        match solver.step(&state) {
            Err(Error::BlowUp { step, .. }) => assert!(step > 0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    /// Cross helicity is conserved by the ideal system; the recorded series
    /// must drift only at the integrator's level.
    #[test]
    fn ideal_cross_helicity_drift_is_small() {
        let mut cfg = base_config();
        cfg.ic_name = "random-smooth".to_string();
        cfg.variant = Variant::Ideal;
        cfg.epsilon = 0.0;
        cfg.dt = 0.005;
        cfg.t_end = 0.25;
        let out = run(&cfg).unwrap();
        let ch = &out.record.series.cross_helicity;
        let scale = out.record.series.energy[0];
        let drift = (ch.last().unwrap() - ch[0]).abs() / scale;
        assert!(drift <= 1e-12, "cross-helicity drift {drift}");
    }

    /// Without dissipation the recorded energy is conserved to integrator
    /// rounding: skew-form transport is exactly energy-neutral against the
    /// trapezoid weights and the projector is self-adjoint in them, so no
    /// spatial term can create or destroy energy.
    #[test]
    fn ideal_energy_is_conserved_to_rounding() {
        let mut cfg = base_config();
        cfg.ic_name = "random-smooth".to_string();
        cfg.variant = Variant::Ideal;
        cfg.epsilon = 0.0;
        cfg.dt = 0.005;
        cfg.t_end = 0.25;
        let out = run(&cfg).unwrap();
        let e = &out.record.series.energy;
        let drift = e
            .iter()
            .fold(0.0f64, |m, &x| m.max((x - e[0]).abs()))
            / e[0];
        assert!(drift <= 1e-12, "ideal energy drift {drift}");
    }
}
