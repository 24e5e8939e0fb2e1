//! Full-pipeline evaluation over parameter grids.
//!
//! A point runs input → steady state (physical mode) → effective parameters →
//! drift/diffusion → stability → covariance → entanglement. Unstable points
//! are recorded with their stability data and no entanglement values.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{build_diffusion, build_drift, stability, StabilityReport};
use crate::entanglement::{check_physicality, entanglement, extract_bipartition, Bipartition, EntanglementResult};
use crate::lyapunov::{solve_lyapunov, CovarianceMatrix};
use crate::model::{mean_thermal_occupation, to_effective, EffectiveParams, ModelError, ModelInput};
use crate::scalar::Real;
use crate::steady_state::{solve_steady_state_with, SteadyStateOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("a sweep needs one or two axes (got {0})")]
    AxisCount(usize),
    #[error("axis {0} has no values")]
    EmptyAxis(usize),
    #[error("axis {axis} value {value} is not finite")]
    NonFiniteValue { axis: usize, value: f64 },
    #[error("parameter `{param}` does not apply to {mode} input")]
    NotApplicable { param: String, mode: &'static str },
    #[error("no bipartitions requested")]
    NoBipartitions,
    #[error("invalid base parameters: {0}")]
    Model(#[from] ModelError),
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
}

/// Which cavity a per-cavity parameter path refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CavitySelector {
    Both,
    First,
    Second,
}

impl CavitySelector {
    fn targets(self) -> &'static [usize] {
        match self {
            CavitySelector::Both => &[0, 1],
            CavitySelector::First => &[0],
            CavitySelector::Second => &[1],
        }
    }
}

/// Scalar field a sweep axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamField {
    // effective mode
    MechFreq,
    MechDamping,
    CavityDecay,
    EffectiveDetuning,
    EffectiveCoupling,
    ThermalOccupation,
    // both modes
    Hopping,
    Temperature,
    // physical mode
    CavityLength,
    MirrorMass,
    PhysMechFreq,
    MechQuality,
    PhysCavityDecay,
    LaserPower,
    BareDetuning,
}

const FIELD_NAMES: &[(ParamField, &str)] = &[
    (ParamField::MechFreq, "mech_freq"),
    (ParamField::MechDamping, "mech_damping"),
    (ParamField::CavityDecay, "cavity_decay"),
    (ParamField::EffectiveDetuning, "effective_detuning"),
    (ParamField::EffectiveCoupling, "effective_coupling"),
    (ParamField::ThermalOccupation, "thermal_occupation"),
    (ParamField::Hopping, "hopping"),
    (ParamField::Temperature, "temperature"),
    (ParamField::CavityLength, "cavity_length"),
    (ParamField::MirrorMass, "mirror_mass"),
    (ParamField::PhysMechFreq, "physical.mech_freq"),
    (ParamField::MechQuality, "mech_quality"),
    (ParamField::PhysCavityDecay, "physical.cavity_decay"),
    (ParamField::LaserPower, "laser_power"),
    (ParamField::BareDetuning, "bare_detuning"),
];

/// Short spellings accepted on input.
const FIELD_ALIASES: &[(ParamField, &str)] = &[
    (ParamField::MechFreq, "omega_m"),
    (ParamField::MechDamping, "gamma_m"),
    (ParamField::CavityDecay, "kappa"),
    (ParamField::EffectiveDetuning, "delta"),
    (ParamField::EffectiveCoupling, "g_eff"),
    (ParamField::ThermalOccupation, "nbar"),
    (ParamField::Hopping, "xi"),
    (ParamField::LaserPower, "power"),
];

impl ParamField {
    pub fn name(self) -> &'static str {
        FIELD_NAMES.iter().find(|(f, _)| *f == self).map(|(_, n)| *n).unwrap_or("?")
    }

    /// Whether the field is a rate that can be given in units of `ω_m1`.
    pub fn is_rate(self) -> bool {
        matches!(
            self,
            ParamField::MechFreq
                | ParamField::MechDamping
                | ParamField::CavityDecay
                | ParamField::EffectiveDetuning
                | ParamField::EffectiveCoupling
                | ParamField::Hopping
                | ParamField::PhysMechFreq
                | ParamField::PhysCavityDecay
                | ParamField::BareDetuning
        )
    }

    fn applies_to_effective(self) -> bool {
        matches!(
            self,
            ParamField::MechFreq
                | ParamField::MechDamping
                | ParamField::CavityDecay
                | ParamField::EffectiveDetuning
                | ParamField::EffectiveCoupling
                | ParamField::ThermalOccupation
                | ParamField::Hopping
                | ParamField::Temperature
        )
    }

    fn applies_to_physical(self) -> bool {
        matches!(
            self,
            ParamField::Hopping
                | ParamField::Temperature
                | ParamField::CavityLength
                | ParamField::MirrorMass
                | ParamField::PhysMechFreq
                | ParamField::MechQuality
                | ParamField::PhysCavityDecay
                | ParamField::LaserPower
                | ParamField::BareDetuning
        )
    }
}

/// A parameter path such as `cavity_decay` (both cavities) or
/// `effective_detuning.2` (second cavity only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamPath {
    pub field: ParamField,
    pub cavity: CavitySelector,
}

impl ParamPath {
    pub const fn both(field: ParamField) -> Self {
        Self {
            field,
            cavity: CavitySelector::Both,
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field.name())?;
        match self.cavity {
            CavitySelector::Both => Ok(()),
            CavitySelector::First => f.write_str(".1"),
            CavitySelector::Second => f.write_str(".2"),
        }
    }
}

impl FromStr for ParamPath {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, cavity) = if let Some(b) = s.strip_suffix(".1") {
            (b, CavitySelector::First)
        } else if let Some(b) = s.strip_suffix(".2") {
            (b, CavitySelector::Second)
        } else {
            (s, CavitySelector::Both)
        };
        let field = FIELD_NAMES
            .iter()
            .chain(FIELD_ALIASES)
            .find(|(_, n)| *n == base)
            .map(|(f, _)| *f)
            .ok_or_else(|| SweepError::UnknownPath(s.to_string()))?;
        if field == ParamField::Hopping && cavity != CavitySelector::Both {
            return Err(SweepError::UnknownPath(s.to_string()));
        }
        Ok(Self { field, cavity })
    }
}

/// One grid axis. With `normalized` set, values are multiples of the base
/// input's `ω_m1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis<T> {
    pub path: ParamPath,
    pub normalized: bool,
    pub values: Vec<T>,
}

impl<T: Real> Axis<T> {
    pub fn new(path: ParamPath, values: Vec<T>) -> Self {
        Self {
            path,
            normalized: false,
            values,
        }
    }

    pub fn normalized(path: ParamPath, values: Vec<T>) -> Self {
        Self {
            path,
            normalized: true,
            values,
        }
    }

    /// Column label: the path, suffixed when normalized.
    pub fn label(&self) -> String {
        if self.normalized {
            format!("{}_over_omega_m", self.path)
        } else {
            self.path.to_string()
        }
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace<T: Real>(start: T, stop: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let last = T::from_usize(n - 1).unwrap_or_else(T::one);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        let f = T::from_usize(i).unwrap_or_else(T::zero) / last;
                        start + (stop - start) * f
                    }
                })
                .collect()
        }
    }
}

/// Sets one parameter of `input`.
pub fn apply_param<T: Real>(input: &ModelInput<T>, path: ParamPath, value: T) -> Result<ModelInput<T>, SweepError> {
    let mut out = *input;
    let targets = path.cavity.targets();
    match &mut out {
        ModelInput::Effective(e) => {
            if !path.field.applies_to_effective() {
                return Err(SweepError::NotApplicable {
                    param: path.to_string(),
                    mode: "effective",
                });
            }
            if path.field == ParamField::Hopping {
                e.hopping = value;
            }
            for &j in targets {
                match path.field {
                    ParamField::MechFreq => e.mech_freq[j] = value,
                    ParamField::MechDamping => e.mech_damping[j] = value,
                    ParamField::CavityDecay => e.cavity_decay[j] = value,
                    ParamField::EffectiveDetuning => e.effective_detuning[j] = value,
                    ParamField::EffectiveCoupling => e.effective_coupling[j] = value,
                    ParamField::ThermalOccupation => e.thermal_occupation[j] = value,
                    ParamField::Temperature => {
                        e.thermal_occupation[j] = mean_thermal_occupation(value, e.mech_freq[j])
                    }
                    _ => {}
                }
            }
        }
        ModelInput::Physical(p) => {
            if !path.field.applies_to_physical() {
                return Err(SweepError::NotApplicable {
                    param: path.to_string(),
                    mode: "physical",
                });
            }
            if path.field == ParamField::Hopping {
                p.hopping = value;
            }
            for &j in targets {
                let c = &mut p.cavities[j];
                match path.field {
                    ParamField::Temperature => c.temperature = value,
                    ParamField::CavityLength => c.cavity_length = value,
                    ParamField::MirrorMass => c.mirror_mass = value,
                    ParamField::PhysMechFreq => c.mech_freq = value,
                    ParamField::MechQuality => c.mech_quality = value,
                    ParamField::PhysCavityDecay => c.cavity_decay = value,
                    ParamField::LaserPower => c.laser_power = value,
                    ParamField::BareDetuning => c.cavity_detuning_bare = value,
                    _ => {}
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Unstable,
    SolverError(String),
}

impl PointStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
            PointStatus::SolverError(_) => "solver_error",
        }
    }
}

/// Everything computed for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult<T: Real> {
    pub resolved: Option<EffectiveParams<T>>,
    pub stability: Option<StabilityReport<T>>,
    pub covariance: Option<CovarianceMatrix<T>>,
    /// Uncertainty relation holds for the stationary covariance.
    pub physical: Option<bool>,
    pub entanglement: Vec<(Bipartition, Option<EntanglementResult<T>>)>,
    pub status: PointStatus,
}

impl<T: Real> PointResult<T> {
    pub fn log_negativity(&self, b: Bipartition) -> Option<T> {
        self.entanglement
            .iter()
            .find(|(k, _)| *k == b)
            .and_then(|(_, e)| e.map(|e| e.log_negativity))
    }
}

/// Runs the whole pipeline at one input.
pub fn evaluate_point<T: Real>(input: &ModelInput<T>, bipartitions: &[Bipartition]) -> PointResult<T> {
    let mut out = PointResult {
        resolved: None,
        stability: None,
        covariance: None,
        physical: None,
        entanglement: bipartitions.iter().map(|b| (*b, None)).collect(),
        status: PointStatus::Ok,
    };
    let fail = |mut out: PointResult<T>, msg: String| {
        out.status = PointStatus::SolverError(msg);
        out
    };
    if let Err(e) = input.validate() {
        return fail(out, e.to_string());
    }
    let resolved = match input {
        ModelInput::Effective(_) => to_effective(input, None),
        ModelInput::Physical(sys) => match solve_steady_state_with(sys, &SteadyStateOptions::default()) {
            Ok(sol) => to_effective(input, Some(&sol.state)),
            Err(e) => return fail(out, e.to_string()),
        },
    };
    let params = match resolved {
        Ok(p) => p,
        Err(e) => return fail(out, e.to_string()),
    };
    out.resolved = Some(params);

    let drift = build_drift(&params);
    let diffusion = build_diffusion(&params);
    let report = match stability(&drift) {
        Ok(r) => r,
        Err(e) => return fail(out, e.to_string()),
    };
    let stable = report.stable;
    out.stability = Some(report);
    if !stable {
        out.status = PointStatus::Unstable;
        return out;
    }
    let z = match solve_lyapunov(&drift, &diffusion) {
        Ok(z) => z,
        Err(e) => return fail(out, e.to_string()),
    };
    out.physical = Some(check_physicality(&z));
    out.covariance = Some(z);
    let mut first_error = None;
    for (b, slot) in out.entanglement.iter_mut() {
        match entanglement(&extract_bipartition(&z, *b)) {
            Ok(e) => *slot = Some(e),
            Err(e) => {
                first_error.get_or_insert_with(|| format!("{b}: {e}"));
            }
        }
    }
    if let Some(msg) = first_error {
        out.status = PointStatus::SolverError(msg);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub base: ModelInput<T>,
    pub axes: Vec<Axis<T>>,
    pub bipartitions: Vec<Bipartition>,
}

impl<T: Real> SweepSpec<T> {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::AxisCount(self.axes.len()));
        }
        if self.bipartitions.is_empty() {
            return Err(SweepError::NoBipartitions);
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(SweepError::EmptyAxis(i));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return Err(SweepError::NonFiniteValue {
                    axis: i,
                    value: v.to_f64_lossy(),
                });
            }
            apply_param(&self.base, axis.path, axis.values[0])?;
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major multi-index of flat position `k` (last axis fastest).
    pub fn grid_index(&self, mut k: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for (slot, n) in idx.iter_mut().zip(shape.iter()).rev() {
            *slot = k % n;
            k /= n;
        }
        idx
    }

    /// Input at a grid point plus the raw axis values.
    pub fn point_input(&self, index: &[usize]) -> Result<(ModelInput<T>, Vec<T>), SweepError> {
        let omega_ref = self.base.omega_ref();
        let mut input = self.base;
        let mut values = Vec::with_capacity(index.len());
        for (axis, &i) in self.axes.iter().zip(index) {
            let raw = axis.values[i];
            let value = if axis.normalized && axis.path.field.is_rate() {
                raw * omega_ref
            } else {
                raw
            };
            input = apply_param(&input, axis.path, value)?;
            values.push(raw);
        }
        Ok((input, values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord<T: Real> {
    pub grid_index: Vec<usize>,
    /// Axis values as given in the spec (normalized where the axis is).
    pub axis_values: Vec<T>,
    pub resolved_params: Option<EffectiveParams<T>>,
    pub stable: bool,
    pub spectral_abscissa: Option<T>,
    pub physical: Option<bool>,
    pub entanglement: Vec<(Bipartition, Option<EntanglementResult<T>>)>,
    pub status: PointStatus,
}

impl<T: Real> SweepRecord<T> {
    pub fn log_negativity(&self, b: Bipartition) -> Option<T> {
        self.entanglement
            .iter()
            .find(|(k, _)| *k == b)
            .and_then(|(_, e)| e.map(|e| e.log_negativity))
    }

    pub fn result(&self, b: Bipartition) -> Option<EntanglementResult<T>> {
        self.entanglement.iter().find(|(k, _)| *k == b).and_then(|(_, e)| *e)
    }
}

/// Evaluates every grid point; records come back in row-major order
/// whatever the scheduling.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>) -> Result<Vec<SweepRecord<T>>, SweepError> {
    spec.validate()?;
    let mut bipartitions = spec.bipartitions.clone();
    let mut seen = Vec::new();
    bipartitions.retain(|b| {
        let fresh = !seen.contains(b);
        seen.push(*b);
        fresh
    });
    let records = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let grid_index = spec.grid_index(k);
            let (input, axis_values) = spec.point_input(&grid_index)?;
            let r = evaluate_point(&input, &bipartitions);
            Ok(SweepRecord {
                grid_index,
                axis_values,
                resolved_params: r.resolved,
                stable: r.stability.as_ref().is_some_and(|s| s.stable),
                spectral_abscissa: r.stability.as_ref().map(|s| s.spectral_abscissa),
                physical: r.physical,
                entanglement: r.entanglement,
                status: r.status,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(records)
}

/// Figure parameter sets: identical cavities, `ω_m/2π = 10 MHz`,
/// `γ_m/ω_m = 1e-5`, thermal occupation from the bath temperature.
pub mod presets {
    use super::*;

    pub const MECH_FREQ_HZ: f64 = 10e6;
    pub const MECH_DAMPING_OVER_OMEGA_M: f64 = 1e-5;
    pub const BASE_TEMPERATURE_K: f64 = 0.6;
    pub const HOPPING_MAX_OVER_OMEGA_M: f64 = 1.2;
    pub const CURVE_POINTS: usize = 201;
    pub const MAP_POINTS: usize = 101;

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub enum Preset {
        Fig2,
        Fig3,
        Fig4a,
        Fig4b,
        Fig4c,
    }

    impl Preset {
        pub const ALL: [Preset; 5] = [Preset::Fig2, Preset::Fig3, Preset::Fig4a, Preset::Fig4b, Preset::Fig4c];

        pub fn name(self) -> &'static str {
            match self {
                Preset::Fig2 => "fig2",
                Preset::Fig3 => "fig3",
                Preset::Fig4a => "fig4a",
                Preset::Fig4b => "fig4b",
                Preset::Fig4c => "fig4c",
            }
        }

        pub fn spec<T: Real>(self) -> SweepSpec<T> {
            let l = T::lit;
            let hopping = Axis::normalized(
                ParamPath::both(ParamField::Hopping),
                linspace(T::zero(), l(HOPPING_MAX_OVER_OMEGA_M), CURVE_POINTS),
            );
            match self {
                Preset::Fig2 => SweepSpec {
                    base: base_input(l(1.0), l(0.5), l(1.0)),
                    axes: vec![
                        Axis::normalized(
                            ParamPath::both(ParamField::EffectiveCoupling),
                            vec![l(1.0), l(4.0), l(8.0), l(12.0)],
                        ),
                        hopping,
                    ],
                    bipartitions: Bipartition::ALL.to_vec(),
                },
                Preset::Fig3 => SweepSpec {
                    base: base_input(l(1.0), l(0.5), l(10.0)),
                    axes: vec![
                        Axis::normalized(
                            ParamPath::both(ParamField::EffectiveDetuning),
                            vec![l(0.8), l(1.0), l(1.1)],
                        ),
                        hopping,
                    ],
                    bipartitions: Bipartition::ALL.to_vec(),
                },
                Preset::Fig4a | Preset::Fig4b | Preset::Fig4c => {
                    let kappa = match self {
                        Preset::Fig4a => l(0.5),
                        Preset::Fig4b => l(1.0),
                        _ => l(1.5),
                    };
                    SweepSpec {
                        base: base_input(l(1.0), kappa, l(8.0)),
                        axes: vec![
                            Axis::new(
                                ParamPath::both(ParamField::Temperature),
                                linspace(l(BASE_TEMPERATURE_K), l(30.0), MAP_POINTS),
                            ),
                            Axis::normalized(
                                ParamPath::both(ParamField::Hopping),
                                linspace(T::zero(), l(HOPPING_MAX_OVER_OMEGA_M), MAP_POINTS),
                            ),
                        ],
                        bipartitions: Bipartition::ALL.to_vec(),
                    }
                }
            }
        }
    }

    impl FromStr for Preset {
        type Err = String;

        fn from_str(s: &str) -> Result<Self, Self::Err> {
            Preset::ALL
                .into_iter()
                .find(|p| p.name() == s)
                .ok_or_else(|| format!("unknown preset `{s}` (expected fig2, fig3, fig4a, fig4b or fig4c)"))
        }
    }

    /// Identical cavities at `T = 0.6 K`, zero hopping; rates in units of `ω_m`.
    pub fn base_input<T: Real>(detuning: T, decay: T, coupling: T) -> ModelInput<T> {
        let omega = T::TAU() * T::lit(MECH_FREQ_HZ);
        let nbar = mean_thermal_occupation(T::lit(BASE_TEMPERATURE_K), omega);
        ModelInput::Effective(EffectiveParams::identical_normalized(
            omega,
            T::lit(MECH_DAMPING_OVER_OMEGA_M),
            decay,
            detuning,
            coupling,
            T::zero(),
            nbar,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    fn small_spec(g: f64) -> SweepSpec<f64> {
        SweepSpec {
            base: base_input(1.0, 0.5, g),
            axes: vec![Axis::normalized(
                ParamPath::both(ParamField::Hopping),
                linspace(0.0, 1.2, 25),
            )],
            bipartitions: vec![Bipartition::MechMech, Bipartition::OptOpt],
        }
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0_f64, 1.2, 201);
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[200], 1.2);
        assert!((v[100] - 0.6).abs() < 1e-15);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn path_parsing() {
        let p: ParamPath = "cavity_decay.2".parse().unwrap();
        assert_eq!(p.field, ParamField::CavityDecay);
        assert_eq!(p.cavity, CavitySelector::Second);
        assert_eq!(p.to_string(), "cavity_decay.2");
        assert!("hopping.1".parse::<ParamPath>().is_err());
        let k: ParamPath = "kappa".parse().unwrap();
        assert_eq!(k, ParamPath::both(ParamField::CavityDecay));
        assert_eq!(k.to_string(), "cavity_decay");
        assert!("nonsense".parse::<ParamPath>().is_err());
    }

    #[test]
    fn identical_cavity_paths_fan_out() {
        let base = base_input(1.0, 0.5, 1.0);
        let out = apply_param(&base, "cavity_decay".parse().unwrap(), 3.0).unwrap();
        let ModelInput::Effective(e) = out else { panic!() };
        assert_eq!(e.cavity_decay, [3.0, 3.0]);
        let ModelInput::Effective(orig) = base else { panic!() };
        let out = apply_param(&base, "cavity_decay.1".parse().unwrap(), 7.0).unwrap();
        let ModelInput::Effective(e) = out else { panic!() };
        assert_eq!(e.cavity_decay, [7.0, orig.cavity_decay[1]]);
        assert!(matches!(
            apply_param(&base, "laser_power".parse().unwrap(), 1.0),
            Err(SweepError::NotApplicable { .. })
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = small_spec(1.0);
        s.axes.clear();
        assert_eq!(run_sweep(&s), Err(SweepError::AxisCount(0)));
        let mut s = small_spec(1.0);
        s.axes[0].values.clear();
        assert_eq!(run_sweep(&s), Err(SweepError::EmptyAxis(0)));
        let mut s = small_spec(1.0);
        s.bipartitions.clear();
        assert_eq!(run_sweep(&s), Err(SweepError::NoBipartitions));
    }

    #[test]
    fn row_major_order_and_unstable_points_flagged() {
        let mut s = small_spec(1.0);
        s.axes.insert(
            0,
            Axis::normalized(ParamPath::both(ParamField::EffectiveCoupling), vec![1.0, 4.0]),
        );
        let recs = run_sweep(&s).unwrap();
        assert_eq!(recs.len(), 50);
        for (k, r) in recs.iter().enumerate() {
            assert_eq!(r.grid_index, vec![k / 25, k % 25]);
        }
        for r in &recs[25..] {
            assert_eq!(r.status, PointStatus::Unstable);
            assert!(!r.stable);
            assert!(r.entanglement.iter().all(|(_, e)| e.is_none()));
            assert!(r.spectral_abscissa.unwrap() > 0.0);
        }
    }

    #[test]
    fn no_hopping_no_intercavity_entanglement() {
        let recs = run_sweep(&small_spec(1.0)).unwrap();
        let r = &recs[0];
        assert_eq!(r.status, PointStatus::Ok);
        assert_eq!(r.log_negativity(Bipartition::MechMech), Some(0.0));
        assert_eq!(r.log_negativity(Bipartition::OptOpt), Some(0.0));
        assert_eq!(r.physical, Some(true));
    }

    #[test]
    fn sweep_is_deterministic() {
        let s = small_spec(1.0);
        assert_eq!(run_sweep(&s).unwrap(), run_sweep(&s).unwrap());
    }

    #[test]
    fn preset_parameters() {
        let s: SweepSpec<f64> = Preset::Fig2.spec();
        let ModelInput::Effective(e) = s.base else { panic!() };
        let n = e.normalized();
        assert_eq!(n.effective_detuning, [1.0, 1.0]);
        assert_eq!(n.cavity_decay, [0.5, 0.5]);
        assert!((n.mech_damping[0] - 1e-5).abs() < 1e-20);
        assert_eq!(s.axes[0].values, vec![1.0, 4.0, 8.0, 12.0]);
        assert_eq!(s.len(), 4 * 201);

        let s: SweepSpec<f64> = Preset::Fig3.spec();
        assert_eq!(s.axes[0].values, vec![0.8, 1.0, 1.1]);
        let ModelInput::Effective(e) = s.base else { panic!() };
        assert!((e.normalized().effective_coupling[0] - 10.0).abs() < 1e-12);

        let s: SweepSpec<f64> = "fig4b".parse::<Preset>().unwrap().spec();
        let ModelInput::Effective(e) = s.base else { panic!() };
        let n = e.normalized();
        assert_eq!(n.cavity_decay, [1.0, 1.0]);
        assert!((n.effective_coupling[0] - 8.0).abs() < 1e-12);
        assert_eq!(s.shape(), vec![101, 101]);
        assert!("fig5".parse::<Preset>().is_err());
    }
}
