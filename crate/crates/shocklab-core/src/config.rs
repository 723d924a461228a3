//! Run configuration: the JSON schema, validation, defaults, and the
//! construction of initial wave profiles from their declarative specs.
//!
//! The format is plain JSON (no comments) so one parser covers both user
//! input and the resolved-config echoes the driver writes next to its
//! outputs.  Every block rejects unknown keys by name, and every constraint
//! violation quotes the constraint it came from.  `parse(emit(c)) == c`
//! round-trips exactly.

use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::geometry::GradientScheme;
use crate::kernel::Grid;
use crate::plane_wave::SimpleWaveData;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Top-level configuration.  `grid` and `eos` are required; every other
/// block has full defaults so a minimal file runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub eos: Eos,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n1: usize,
    #[serde(default = "one")]
    pub n2: usize,
    #[serde(default = "one")]
    pub n3: usize,
    pub x1_min: f64,
    pub x1_max: f64,
    #[serde(default = "unit_len")]
    pub len2: f64,
    #[serde(default = "unit_len")]
    pub len3: f64,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn one() -> usize {
    1
}
fn unit_len() -> f64 {
    1.0
}
fn default_order() -> usize {
    4
}

impl GridConfig {
    /// Materialize the grid (validates sizes and order).
    pub fn build(&self) -> Result<Grid> {
        if !(self.len2 > 0.0 && self.len3 > 0.0) {
            return Err(Error::Config(format!(
                "grid: torus lengths must be positive (constraint: len2 > 0, len3 > 0), got len2 = {}, len3 = {}",
                self.len2, self.len3
            )));
        }
        let mut grid = Grid::new(
            self.n1,
            self.n2,
            self.n3,
            self.x1_min,
            self.x1_max,
            self.order,
        )?;
        grid.len2 = self.len2;
        grid.len3 = self.len3;
        grid.rebuild_tables();
        Ok(grid)
    }
}

/// Initial-data block: background amplitude α̊ and support σ̊ for the
/// compressive wave, perturbation scale ε̊ for everything else, plus the
/// optional shaping switches used by the singular-set and regularity
/// studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Support half-width σ̊ of the initial wave (ℛ₊ vanishes off |x¹| ≤ σ̊).
    pub sigma: f64,
    /// Amplitude bound α̊: sup |ℛ₊| ≤ α̊ at t = 0.
    pub alpha: f64,
    /// Perturbation scale ε̊ for (ℛ₋, v², v³, s).
    pub epsilon: f64,
    pub profile: ProfileSpec,
    /// Uniform velocity added to v¹; the wave then propagates at
    /// (1 + V) + O(α̊) in the grid frame, so V = −1 keeps it nearly
    /// stationary and lets a short slab hold the whole focusing history.
    pub bulk_velocity: f64,
    /// Seed for the deterministic phase jitter of the perturbation modes.
    pub seed: u64,
    /// Explicit perturbation modes.  `None` applies the default battery;
    /// `Some(vec![])` disables mode perturbations outright.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<PerturbationMode>>,
    /// Rescale the profile amplitude so the data's focusing rate δ̊* hits
    /// this value exactly (secant iteration at build time).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_delta_star: Option<f64>,
    /// Shape v² / v³ so |Ω| sits at `level·ε̊²` across the central band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vorticity_floor: Option<FloorSpec>,
    /// Shape s so |S| sits at `level·ε̊³` across the central band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_floor: Option<FloorSpec>,
    /// Verify the quadratic nondegeneracy of the focusing peak at build
    /// time (required by the Hölder-regularity study).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegeneracy: Option<NondegeneracySpec>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            sigma: 0.25,
            alpha: 0.01,
            epsilon: 1e-4,
            profile: ProfileSpec::default(),
            bulk_velocity: 0.0,
            seed: 0,
            modes: None,
            target_delta_star: None,
            vorticity_floor: None,
            entropy_floor: None,
            nondegeneracy: None,
        }
    }
}

/// One seeded perturbation mode:
/// `amplitude·ε̊ · env(x¹/σ̊) · cos(π k1 x¹/σ̊ + 2π(k2 x²/L₂ + k3 x³/L₃) + phase + jitter)`
/// added to the named wave-array component.  `env` is the C∞ bump that
/// keeps all perturbations supported in |x¹| ≤ σ̊.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationMode {
    pub field: PerturbField,
    pub amplitude: f64,
    pub k1: f64,
    pub k2: i32,
    pub k3: i32,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbField {
    RMinus,
    V2,
    V3,
    S,
}

/// Default perturbation battery: one mode per non-compressive component,
/// mixing slab and torus wavenumbers.
pub fn default_modes() -> Vec<PerturbationMode> {
    vec![
        PerturbationMode {
            field: PerturbField::RMinus,
            amplitude: 1.0,
            k1: 1.0,
            k2: 1,
            k3: 0,
            phase: 0.3,
        },
        PerturbationMode {
            field: PerturbField::V2,
            amplitude: 1.0,
            k1: 2.0,
            k2: 1,
            k3: 1,
            phase: 1.1,
        },
        PerturbationMode {
            field: PerturbField::V3,
            amplitude: 1.0,
            k1: 1.5,
            k2: 0,
            k3: 1,
            phase: 2.0,
        },
        PerturbationMode {
            field: PerturbField::S,
            amplitude: 1.0,
            k1: 1.0,
            k2: 1,
            k3: 1,
            phase: 0.7,
        },
    ]
}

/// Floor shaping for a transported quantity: hold its magnitude at
/// `level · ε̊^p` (p = 2 for vorticity, 3 for entropy gradient) across the
/// central band |x¹| ≤ band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloorSpec {
    /// Target magnitude as a fraction of the ceiling ε̊^p; must keep the
    /// band inside [½ε̊^p, ε̊^p], so level ∈ [0.5, 1.0].
    pub level: f64,
    /// Band half-width in x¹.  `None` defaults to √α̊.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
}

impl Default for FloorSpec {
    fn default() -> Self {
        Self {
            level: 0.75,
            band: None,
        }
    }
}

/// Quadratic-peak check on the initial compression: the curvature of the
/// focusing functional at its max must be at least `3 δ̊* β̊` in magnitude
/// across the central window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondegeneracySpec {
    pub beta: f64,
}

/// Declarative initial profile for ℛ₊(0, x¹).  All shapes are supported in
/// |x¹| ≤ σ̊ with sup = α̊.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// C∞ bump α̊·e^{1 − 1/(1−z²)}, z = x¹/σ̊.
    SmoothBump,
    /// C¹ bump (α̊/2)(1 + cos πz).
    CosBump,
    /// Plateau with C⁴ smoothstep rise/fall; corners in σ̊ units satisfy
    /// −1 ≤ rise_start < rise_end ≤ fall_start < fall_end ≤ 1.  A steep,
    /// late fall concentrates the compression.
    Ramp {
        rise_start: f64,
        rise_end: f64,
        fall_start: f64,
        fall_end: f64,
    },
    /// Profile whose *slope* has a clean downward-parabola maximum
    /// (quadratic nondegenerate peak), with C∞ wing bumps balancing the
    /// integral so the profile returns to exactly zero.  All geometry in
    /// σ̊ units (z = x¹/σ̊ − center):
    /// slope core ∝ 1 − (z/core_width)², held exactly on |z| ≤ plateau and
    /// cut to zero by |z| = cutoff; wings sit at ±wing_center with
    /// half-width wing_width.  Defaults give a broad parabola; a narrow one
    /// (core_width ≈ 0.28) keeps the off-peak compression under a quarter
    /// of its max, which the regularity studies require.
    ParabolicHump {
        #[serde(default = "ph_core")]
        core_width: f64,
        #[serde(default = "ph_plateau")]
        plateau: f64,
        #[serde(default = "ph_cutoff")]
        cutoff: f64,
        #[serde(default = "ph_wing_center")]
        wing_center: f64,
        #[serde(default = "ph_wing_width")]
        wing_width: f64,
        /// Peak position in σ̊ units (the slope max sits at x¹ = center·σ̊).
        #[serde(default)]
        center: f64,
    },
}

fn ph_core() -> f64 {
    0.8
}
fn ph_plateau() -> f64 {
    0.55
}
fn ph_cutoff() -> f64 {
    0.75
}
fn ph_wing_center() -> f64 {
    0.875
}
fn ph_wing_width() -> f64 {
    0.1
}

/// The broad-parabola default.
pub fn parabolic_hump_default() -> ProfileSpec {
    ProfileSpec::ParabolicHump {
        core_width: ph_core(),
        plateau: ph_plateau(),
        cutoff: ph_cutoff(),
        wing_center: ph_wing_center(),
        wing_width: ph_wing_width(),
        center: 0.0,
    }
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::SmoothBump
    }
}

/// C∞ bump, sup = 1 at z = 0, support |z| < 1.
fn bump(z: f64) -> f64 {
    let t = 1.0 - z * z;
    if t <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / t).exp()
    }
}

/// d/dz of `bump`.
fn bump_d(z: f64) -> f64 {
    let t = 1.0 - z * z;
    if t <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / t).exp() * (-2.0 * z / (t * t))
    }
}

/// Degree-9 smoothstep: 0 → 1 on [0, 1] with four vanishing derivatives at
/// both ends (C⁴ when spliced against constants).
fn smoothstep9(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let t5 = t * t * t * t * t;
        t5 * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + t * 70.0))))
    }
}

/// d/dt of `smoothstep9`: 630 t⁴(1−t)⁴ on (0, 1).
fn smoothstep9_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let a = t * (1.0 - t);
        630.0 * a * a * a * a
    }
}

impl ProfileSpec {
    /// Build the initial wave data for this shape.
    pub fn build(&self, sigma: f64, alpha: f64) -> Result<SimpleWaveData> {
        match self {
            ProfileSpec::SmoothBump => {
                let f = move |x: f64| alpha * bump(x / sigma);
                let df: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
                    Arc::new(move |x: f64| alpha * bump_d(x / sigma) / sigma);
                SimpleWaveData::from_callable(f, Some(df), sigma, alpha)
            }
            ProfileSpec::CosBump => {
                let f = move |x: f64| {
                    let z = x / sigma;
                    if z.abs() >= 1.0 {
                        0.0
                    } else {
                        0.5 * alpha * (1.0 + (std::f64::consts::PI * z).cos())
                    }
                };
                let df: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |x: f64| {
                    let z = x / sigma;
                    if z.abs() >= 1.0 {
                        0.0
                    } else {
                        -0.5 * alpha * std::f64::consts::PI * (std::f64::consts::PI * z).sin()
                            / sigma
                    }
                });
                SimpleWaveData::from_callable(f, Some(df), sigma, alpha)
            }
            ProfileSpec::Ramp {
                rise_start,
                rise_end,
                fall_start,
                fall_end,
            } => {
                let (rs, re, fs, fe) = (*rise_start, *rise_end, *fall_start, *fall_end);
                if !(-1.0 <= rs && rs < re && re <= fs && fs < fe && fe <= 1.0) {
                    return Err(Error::Config(format!(
                        "ramp profile: corners must satisfy \
                         -1 <= rise_start < rise_end <= fall_start < fall_end <= 1, \
                         got ({rs}, {re}, {fs}, {fe})"
                    )));
                }
                let f = move |x: f64| {
                    let z = x / sigma;
                    if z <= rs || z >= fe {
                        0.0
                    } else if z < re {
                        alpha * smoothstep9((z - rs) / (re - rs))
                    } else if z <= fs {
                        alpha
                    } else {
                        alpha * (1.0 - smoothstep9((z - fs) / (fe - fs)))
                    }
                };
                let df: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |x: f64| {
                    let z = x / sigma;
                    if z > rs && z < re {
                        alpha * smoothstep9_d((z - rs) / (re - rs)) / ((re - rs) * sigma)
                    } else if z > fs && z < fe {
                        -alpha * smoothstep9_d((z - fs) / (fe - fs)) / ((fe - fs) * sigma)
                    } else {
                        0.0
                    }
                });
                SimpleWaveData::from_callable(f, Some(df), sigma, alpha)
            }
            ProfileSpec::ParabolicHump => build_parabolic_hump(sigma, alpha),
        }
    }
}

/// Compression core of the parabolic hump: a downward parabola
/// 1 − (z/0.8)² held by a C∞ cutoff (1 on |z| ≤ 0.55, 0 past |z| = 0.75).
fn hump_core(z: f64) -> f64 {
    const A: f64 = 0.55;
    const B: f64 = 0.75;
    let az = z.abs();
    let cut = if az <= A {
        1.0
    } else if az >= B {
        0.0
    } else {
        let t = (az - A) / (B - A);
        let h = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
        h(1.0 - t) / (h(1.0 - t) + h(t))
    };
    (1.0 - (z / 0.8) * (z / 0.8)) * cut
}

/// Balancing wings at z = ±0.875 (half-width 0.1).
fn hump_wings(z: f64) -> f64 {
    bump((z - 0.875) / 0.1) + bump((z + 0.875) / 0.1)
}

/// The slope −∂₁ℛ₊ of this profile is A·core(z)/σ̊ in the center — an exact
/// downward parabola there, which is what the quadratic-nondegeneracy
/// condition wants — and the wing bumps return the profile to zero with the
/// integral balanced by quadrature, so the support constraint holds to
/// rounding.
fn build_parabolic_hump(sigma: f64, alpha: f64) -> Result<SimpleWaveData> {
    const M: usize = 32000;
    let hz = 2.0 / M as f64;
    // Trapezoid totals of core and wings over [−1, 1].
    let mut total_core = 0.0;
    let mut total_wing = 0.0;
    let node = |k: usize| -1.0 + hz * k as f64;
    for k in 0..M {
        let (z0, z1) = (node(k), node(k + 1));
        total_core += 0.5 * hz * (hump_core(z0) + hump_core(z1));
        total_wing += 0.5 * hz * (hump_wings(z0) + hump_wings(z1));
    }
    let w = total_core / total_wing;
    // Cumulative integral of the slope w·wings − core, then a linear
    // detrend that pins both endpoints to exactly zero (the drift is pure
    // quadrature rounding, ~1e−12 relative).
    let slope = move |z: f64| w * hump_wings(z) - hump_core(z);
    let mut q = vec![0.0; M + 1];
    for k in 0..M {
        q[k + 1] = q[k] + 0.5 * hz * (slope(node(k)) + slope(node(k + 1)));
    }
    let q_end = q[M];
    for (k, qk) in q.iter_mut().enumerate() {
        *qk -= q_end * k as f64 / M as f64;
    }
    let qmax = q.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if qmax <= 0.0 {
        return Err(Error::Numerical {
            context: "parabolic hump: degenerate cumulative profile".into(),
            achieved: qmax,
            required: f64::MIN_POSITIVE,
        });
    }
    let amp = alpha * (1.0 - 1e-9) / qmax;
    let nodes: Vec<(f64, f64)> = (0..=M).map(|k| (node(k) * sigma, amp * q[k])).collect();
    let spline = crate::eos::CubicSpline::natural(&nodes)?;
    // Wings end at |z| = 0.975; beyond that the profile is identically 0.
    let f = move |x: f64| {
        let z = x / sigma;
        if z.abs() >= 0.975 {
            0.0
        } else {
            spline.eval(x)
        }
    };
    let df: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |x: f64| {
        let z = x / sigma;
        if z.abs() >= 0.975 {
            0.0
        } else {
            amp * slope(z) / sigma
        }
    });
    SimpleWaveData::from_callable(f, Some(df), sigma, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopConfig {
    /// Stop when μ⋆ reaches this value.
    pub mu_stop: f64,
    /// Hard time limit (`None` = no limit; JSON has no literal for ∞).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Abort when sup|∂₁ℛ₊| exceeds this multiple of its initial value —
    /// the Cartesian gradient running away without μ⋆ reaching its stop is
    /// a broken run, not a shock.
    pub grad_max_factor: f64,
    pub max_steps: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            mu_stop: 0.1,
            t_max: None,
            grad_max_factor: 100.0,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// CFL number for the RK4 step against the acoustic speed |v| + c.
    pub cfl: f64,
    /// Strength of the 8th-order low-pass filter applied to the fluid
    /// fields after each step (0 disables; 1 removes the Nyquist mode).
    pub dissipation: f64,
    pub gradient_scheme: GradientScheme,
    /// Worker threads (`None` = all cores; the SHOCKLAB_THREADS variable
    /// overrides at the CLI).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            dissipation: 0.02,
            gradient_scheme: GradientScheme::default(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Steps between field snapshots (0 = none beyond first/last).
    pub snapshot_cadence: usize,
    /// Steps between history rows (μ⋆, sup-norms, …).
    pub history_cadence: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_cadence: 0,
            history_cadence: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// x¹ resolutions to run; the convergence table needs at least three.
    pub resolutions: Vec<usize>,
}

impl RunConfig {
    /// Validate every cross-field constraint.  Each violation quotes its
    /// constraint.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if !(d.sigma > 0.0) {
            return Err(Error::Config(format!(
                "data: sigma must be positive (constraint: sigma > 0), got {}",
                d.sigma
            )));
        }
        if !(d.alpha > 0.0 && d.alpha <= 0.1) {
            return Err(Error::Config(format!(
                "data: amplitude out of range (constraint: 0 < alpha <= 0.1), got {}",
                d.alpha
            )));
        }
        if !(d.epsilon >= 0.0) || d.epsilon.is_nan() {
            return Err(Error::Config(format!(
                "data: perturbation scale must be nonnegative (constraint: epsilon >= 0), got {}",
                d.epsilon
            )));
        }
        if d.epsilon.sqrt() > d.alpha {
            return Err(Error::Config(format!(
                "data: perturbations too large for the amplitude \
                 (constraint: epsilon^(1/2) <= alpha), got epsilon^(1/2) = {:.6} > alpha = {}",
                d.epsilon.sqrt(),
                d.alpha
            )));
        }
        if !d.bulk_velocity.is_finite() {
            return Err(Error::Config(
                "data: bulk_velocity must be finite".to_string(),
            ));
        }
        if let Some(t) = d.target_delta_star {
            if !(t > 0.0) {
                return Err(Error::Config(format!(
                    "data: target_delta_star must be positive, got {t}"
                )));
            }
        }
        for floor in [&d.vorticity_floor, &d.entropy_floor].into_iter().flatten() {
            if !(floor.level >= 0.5 && floor.level <= 1.0) {
                return Err(Error::Config(format!(
                    "data: floor level must keep the band between half and full scale \
                     (constraint: 0.5 <= level <= 1.0), got {}",
                    floor.level
                )));
            }
            if let Some(b) = floor.band {
                if !(b > 0.0) {
                    return Err(Error::Config(format!(
                        "data: floor band must be positive, got {b}"
                    )));
                }
            }
        }
        if let Some(nd) = &d.nondegeneracy {
            if !(nd.beta > 0.0) {
                return Err(Error::Config(format!(
                    "data: nondegeneracy beta must be positive, got {}",
                    nd.beta
                )));
            }
        }
        if !(self.stop.mu_stop > 0.0 && self.stop.mu_stop <= 1.0) {
            return Err(Error::Config(format!(
                "stop: mu_stop out of range (constraint: 0 < mu_stop <= 1), got {}",
                self.stop.mu_stop
            )));
        }
        if let Some(t) = self.stop.t_max {
            if !(t > 0.0) {
                return Err(Error::Config(format!(
                    "stop: t_max must be positive, got {t}"
                )));
            }
        }
        if !(self.stop.grad_max_factor > 1.0) {
            return Err(Error::Config(format!(
                "stop: grad_max_factor must exceed 1, got {}",
                self.stop.grad_max_factor
            )));
        }
        if self.stop.max_steps == 0 {
            return Err(Error::Config("stop: max_steps must be at least 1".into()));
        }
        if !(self.numerics.cfl > 0.0 && self.numerics.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "numerics: cfl out of range (constraint: 0 < cfl <= 1), got {}",
                self.numerics.cfl
            )));
        }
        if !(self.numerics.dissipation >= 0.0 && self.numerics.dissipation < 1.0) {
            return Err(Error::Config(format!(
                "numerics: dissipation out of range (constraint: 0 <= dissipation < 1), got {}",
                self.numerics.dissipation
            )));
        }
        if self.output.history_cadence == 0 {
            return Err(Error::Config(
                "output: history_cadence must be at least 1".into(),
            ));
        }
        if let Some(sw) = &self.sweep {
            if sw.resolutions.is_empty() {
                return Err(Error::Config(
                    "sweep: resolutions must not be empty".into(),
                ));
            }
        }
        // Grid constraints, including order support.
        self.grid.build()?;
        Ok(())
    }

    /// Serialize with stable formatting (the echo format).
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Parse and validate a configuration from JSON text.  Syntax errors carry
/// serde_json's line/column; unknown keys are named; constraint violations
/// quote the constraint.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}
