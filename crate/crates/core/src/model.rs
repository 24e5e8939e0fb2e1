//! Domain types and the conversion from lab-frame cavity descriptions to the
//! effective parameters that drive the linearized dynamics.
//!
//! All rates are stored as angular frequencies (rad/s). Views normalized to
//! the first mechanical frequency are produced on demand by
//! [`EffectiveParams::normalized`].

use thiserror::Error;

use crate::scalar::Real;
use crate::steady_state::{fixed_point_residual, SteadyState, SteadyStateProblem};

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// CODATA 2018 Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Below this mechanical quality factor the Markovian Brownian-noise limit is
/// not trusted.
pub const MIN_MECH_QUALITY: f64 = 100.0;

/// Largest steady-state residual accepted by [`to_effective`].
pub const STEADY_STATE_ACCEPT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field} must be strictly positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("temperature must be finite and >= 0 K (got {0})")]
    NegativeTemperature(f64),
    #[error("mechanical quality factor {0} is below {MIN_MECH_QUALITY}; the Markovian noise model does not apply")]
    LowMechanicalQuality(f64),
    #[error("both cavities must be driven at the same laser wavelength ({0} m vs {1} m)")]
    UnequalLaserWavelengths(f64, f64),
    #[error("{field} must be finite (got {value})")]
    NotFinite { field: &'static str, value: f64 },
    #[error("physical input requires a steady state")]
    MissingSteadyState,
    #[error("steady state not converged: residual {residual:e} exceeds {tolerance:e}")]
    SteadyStateNotConverged { residual: f64, tolerance: f64 },
}

fn positive<T: Real>(field: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(ModelError::NonPositive {
            field,
            value: v.to_f64_lossy(),
        })
    }
}

fn finite<T: Real>(field: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotFinite {
            field,
            value: v.to_f64_lossy(),
        })
    }
}

/// Lab-frame description of one optomechanical cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalCavityParams<T> {
    /// Rest length of the cavity, m.
    pub cavity_length: T,
    /// Effective mass of the moving mirror, kg.
    pub mirror_mass: T,
    /// Mechanical angular frequency, rad/s.
    pub mech_freq: T,
    /// Mechanical quality factor.
    pub mech_quality: T,
    /// Cavity field decay rate, rad/s.
    pub cavity_decay: T,
    /// Drive laser wavelength, m.
    pub laser_wavelength: T,
    /// Drive laser power, W.
    pub laser_power: T,
    /// Bare cavity-laser detuning `ω_c - ω_L`, rad/s.
    pub cavity_detuning_bare: T,
    /// Temperature of the mechanical bath, K.
    pub temperature: T,
}

impl<T: Real> PhysicalCavityParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("cavity_length", self.cavity_length)?;
        positive("mirror_mass", self.mirror_mass)?;
        positive("mech_freq", self.mech_freq)?;
        positive("mech_quality", self.mech_quality)?;
        positive("cavity_decay", self.cavity_decay)?;
        positive("laser_wavelength", self.laser_wavelength)?;
        finite("cavity_detuning_bare", self.cavity_detuning_bare)?;
        if !(self.laser_power.is_finite() && self.laser_power >= T::zero()) {
            return Err(ModelError::NonPositive {
                field: "laser_power",
                value: self.laser_power.to_f64_lossy(),
            });
        }
        if !(self.temperature.is_finite() && self.temperature >= T::zero()) {
            return Err(ModelError::NegativeTemperature(self.temperature.to_f64_lossy()));
        }
        if self.mech_quality < T::lit(MIN_MECH_QUALITY) {
            return Err(ModelError::LowMechanicalQuality(self.mech_quality.to_f64_lossy()));
        }
        positive("cavity_frequency", self.cavity_frequency())?;
        Ok(())
    }

    /// `ω_L = 2πc/λ`.
    pub fn laser_frequency(&self) -> T {
        T::TAU() * T::lit(SPEED_OF_LIGHT) / self.laser_wavelength
    }

    /// `ω_c = ω_L + Δ₀`.
    pub fn cavity_frequency(&self) -> T {
        self.laser_frequency() + self.cavity_detuning_bare
    }

    /// `γ_m = ω_m / Q_m`.
    pub fn mech_damping(&self) -> T {
        self.mech_freq / self.mech_quality
    }
}

/// Single-photon radiation-pressure coupling `g = (ω_c/L)·√(ħ/(m ω_m))`, rad/s.
pub fn single_photon_coupling<T: Real>(p: &PhysicalCavityParams<T>) -> T {
    let zero_point = (T::lit(HBAR) / (p.mirror_mass * p.mech_freq)).sqrt();
    p.cavity_frequency() / p.cavity_length * zero_point
}

/// Drive amplitude `|E| = √(2Pκ/(ħω_L))`, rad/s.
pub fn drive_amplitude<T: Real>(p: &PhysicalCavityParams<T>) -> T {
    let two = T::lit(2.0);
    (two * p.laser_power * p.cavity_decay / (T::lit(HBAR) * p.laser_frequency())).sqrt()
}

/// Bose-Einstein occupation `n̄ = 1/(exp(ħω/k_B T) - 1)`; exactly zero at `T = 0`.
pub fn mean_thermal_occupation<T: Real>(temperature: T, mech_freq: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    let x = T::lit(HBAR) * mech_freq / (T::lit(K_B) * temperature);
    let denom = x.exp_m1();
    if denom.is_finite() {
        T::one() / denom
    } else {
        T::zero()
    }
}

/// Both cavities plus the photon-hopping rate between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSystem<T> {
    pub cavities: [PhysicalCavityParams<T>; 2],
    /// Photon-hopping rate ξ, rad/s.
    pub hopping: T,
}

impl<T: Real> PhysicalSystem<T> {
    pub fn identical(cavity: PhysicalCavityParams<T>, hopping: T) -> Self {
        Self {
            cavities: [cavity, cavity],
            hopping,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for c in &self.cavities {
            c.validate()?;
        }
        finite("hopping", self.hopping)?;
        let [a, b] = &self.cavities;
        if a.laser_wavelength != b.laser_wavelength {
            return Err(ModelError::UnequalLaserWavelengths(
                a.laser_wavelength.to_f64_lossy(),
                b.laser_wavelength.to_f64_lossy(),
            ));
        }
        Ok(())
    }

    pub fn swapped(&self) -> Self {
        Self {
            cavities: [self.cavities[1], self.cavities[0]],
            hopping: self.hopping,
        }
    }
}

/// Parameters of the linearized fluctuation dynamics, all rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams<T> {
    pub mech_freq: [T; 2],
    pub mech_damping: [T; 2],
    pub cavity_decay: [T; 2],
    pub effective_detuning: [T; 2],
    pub effective_coupling: [T; 2],
    pub hopping: T,
    pub thermal_occupation: [T; 2],
}

impl<T: Real> EffectiveParams<T> {
    /// Two identical cavities, every rate given as a multiple of `mech_freq`.
    pub fn identical_normalized(
        mech_freq: T,
        mech_damping: T,
        cavity_decay: T,
        effective_detuning: T,
        effective_coupling: T,
        hopping: T,
        thermal_occupation: T,
    ) -> Self {
        let w = mech_freq;
        Self {
            mech_freq: [w, w],
            mech_damping: [mech_damping * w; 2],
            cavity_decay: [cavity_decay * w; 2],
            effective_detuning: [effective_detuning * w; 2],
            effective_coupling: [effective_coupling * w; 2],
            hopping: hopping * w,
            thermal_occupation: [thermal_occupation; 2],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for j in 0..2 {
            positive("mech_freq", self.mech_freq[j])?;
            positive("mech_damping", self.mech_damping[j])?;
            positive("cavity_decay", self.cavity_decay[j])?;
            finite("effective_detuning", self.effective_detuning[j])?;
            finite("effective_coupling", self.effective_coupling[j])?;
            let n = self.thermal_occupation[j];
            if !(n.is_finite() && n >= T::zero()) {
                return Err(ModelError::NotFinite {
                    field: "thermal_occupation",
                    value: n.to_f64_lossy(),
                });
            }
        }
        finite("hopping", self.hopping)
    }

    /// Reference frequency used for normalized views.
    pub fn omega_ref(&self) -> T {
        self.mech_freq[0]
    }

    /// Every rate divided by `ω_m1`; occupations unchanged.
    pub fn normalized(&self) -> Self {
        self.scaled(T::one() / self.omega_ref())
    }

    /// Every rate multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let m = |a: [T; 2]| [a[0] * s, a[1] * s];
        Self {
            mech_freq: m(self.mech_freq),
            mech_damping: m(self.mech_damping),
            cavity_decay: m(self.cavity_decay),
            effective_detuning: m(self.effective_detuning),
            effective_coupling: m(self.effective_coupling),
            hopping: self.hopping * s,
            thermal_occupation: self.thermal_occupation,
        }
    }

    /// Exchanges the labels of the two cavities.
    pub fn swapped(&self) -> Self {
        let s = |a: [T; 2]| [a[1], a[0]];
        Self {
            mech_freq: s(self.mech_freq),
            mech_damping: s(self.mech_damping),
            cavity_decay: s(self.cavity_decay),
            effective_detuning: s(self.effective_detuning),
            effective_coupling: s(self.effective_coupling),
            hopping: self.hopping,
            thermal_occupation: s(self.thermal_occupation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    Physical,
    Effective,
}

/// Either entry point into the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelInput<T> {
    Physical(PhysicalSystem<T>),
    Effective(EffectiveParams<T>),
}

impl<T: Real> ModelInput<T> {
    pub fn mode(&self) -> InputMode {
        match self {
            ModelInput::Physical(_) => InputMode::Physical,
            ModelInput::Effective(_) => InputMode::Effective,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelInput::Physical(p) => p.validate(),
            ModelInput::Effective(e) => e.validate(),
        }
    }

    /// Mechanical frequency of the first resonator, the normalization unit.
    pub fn omega_ref(&self) -> T {
        match self {
            ModelInput::Physical(p) => p.cavities[0].mech_freq,
            ModelInput::Effective(e) => e.omega_ref(),
        }
    }

    pub fn swapped(&self) -> Self {
        match self {
            ModelInput::Physical(p) => ModelInput::Physical(p.swapped()),
            ModelInput::Effective(e) => ModelInput::Effective(e.swapped()),
        }
    }
}

/// Resolves a [`ModelInput`] to effective parameters.
///
/// In effective mode the input is returned unchanged and `steady` is ignored.
/// In physical mode `G_j = √2·g_j·|a_j|` (modulus convention) and
/// `Δ_j = Δ₀_j - g_j²|a_j|²/ω_mj`, evaluated from the supplied steady state.
pub fn to_effective<T: Real>(
    input: &ModelInput<T>,
    steady: Option<&SteadyState<T>>,
) -> Result<EffectiveParams<T>, ModelError> {
    let sys = match input {
        ModelInput::Effective(e) => return Ok(*e),
        ModelInput::Physical(p) => p,
    };
    let steady = steady.ok_or(ModelError::MissingSteadyState)?;
    let problem = SteadyStateProblem::from_physical(sys);
    let residual = fixed_point_residual(steady, &problem);
    let tolerance = T::tolerance(STEADY_STATE_ACCEPT_TOL, 1024.0);
    if !(residual <= tolerance) {
        return Err(ModelError::SteadyStateNotConverged {
            residual: residual.to_f64_lossy(),
            tolerance: tolerance.to_f64_lossy(),
        });
    }
    let sqrt2 = T::SQRT_2();
    let mut out = EffectiveParams {
        mech_freq: [T::zero(); 2],
        mech_damping: [T::zero(); 2],
        cavity_decay: [T::zero(); 2],
        effective_detuning: [T::zero(); 2],
        effective_coupling: [T::zero(); 2],
        hopping: sys.hopping,
        thermal_occupation: [T::zero(); 2],
    };
    for j in 0..2 {
        let c = &sys.cavities[j];
        let g = problem.coupling[j];
        let modulus = steady.amp[j].norm_sqr().sqrt();
        out.mech_freq[j] = c.mech_freq;
        out.mech_damping[j] = c.mech_damping();
        out.cavity_decay[j] = c.cavity_decay;
        out.effective_detuning[j] = problem.detuning_from_amplitude(j, steady.amp[j]);
        out.effective_coupling[j] = sqrt2 * g * modulus;
        out.thermal_occupation[j] = mean_thermal_occupation(c.temperature, c.mech_freq);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn lab_cavity() -> PhysicalCavityParams<f64> {
        let tau = std::f64::consts::TAU;
        PhysicalCavityParams {
            cavity_length: 1e-3,
            mirror_mass: 10e-12,
            mech_freq: tau * 10e6,
            mech_quality: 1e5,
            cavity_decay: tau * 5e6,
            laser_wavelength: 1064e-9,
            laser_power: 50e-3,
            cavity_detuning_bare: tau * 10e6,
            temperature: 0.6,
        }
    }

    #[test]
    fn coupling_matches_hand_calculation() {
        // ω_L = 2π·c/λ with λ = 1064 nm, plus Δ₀ = 2π·10 MHz.
        let p = lab_cavity();
        let tau = std::f64::consts::TAU;
        let omega_c = tau * 299_792_458.0 / 1064e-9 + tau * 10e6;
        // √(ħ/(m ω_m)) = √(1.054571817e-34 / (1e-11 · 6.2831853e7))
        let x_zpf = (1.054_571_817e-34 / (1e-11 * tau * 10e6_f64)).sqrt();
        let hand = omega_c / 1e-3 * x_zpf;
        let g = single_photon_coupling(&p);
        assert_relative_eq!(g, hand, max_relative = 1e-14);
        // ≈ 725.3 rad/s for these lab values
        assert!((g - 725.28).abs() < 0.01, "g = {g}");
    }

    #[test]
    fn coupling_scaling_laws() {
        let p = lab_cavity();
        let g = single_photon_coupling(&p);
        let mut p2 = p;
        p2.cavity_length *= 2.0;
        assert_relative_eq!(single_photon_coupling(&p2), g / 2.0, max_relative = 1e-14);
        let mut p4 = p;
        p4.mirror_mass *= 4.0;
        assert_relative_eq!(single_photon_coupling(&p4), g / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn drive_amplitude_values() {
        let mut p = lab_cavity();
        p.laser_power = 0.0;
        assert_eq!(drive_amplitude(&p), 0.0);

        let p = lab_cavity();
        let tau = std::f64::consts::TAU;
        let omega_l = tau * 299_792_458.0 / 1064e-9;
        let hand = (2.0 * 50e-3 * tau * 5e6 / (1.054_571_817e-34 * omega_l)).sqrt();
        let e = drive_amplitude(&p);
        assert_relative_eq!(e, hand, max_relative = 1e-14);
        assert!((e / 4.1e12 - 1.0).abs() < 0.01, "E = {e:e}");

        let mut p4 = p;
        p4.laser_power *= 4.0;
        assert_relative_eq!(drive_amplitude(&p4), 2.0 * e, max_relative = 1e-14);
    }

    #[test]
    fn thermal_occupation_limits() {
        let w = std::f64::consts::TAU * 10e6;
        assert_eq!(mean_thermal_occupation(0.0, w), 0.0);

        // x = ħω/(k_B T) = ln 2 gives exactly one quantum
        let t = HBAR * w / (K_B * std::f64::consts::LN_2);
        assert_relative_eq!(mean_thermal_occupation(t, w), 1.0, max_relative = 1e-12);

        let n = mean_thermal_occupation(0.6, w);
        let rayleigh_jeans = K_B * 0.6 / (HBAR * w);
        assert!((n / rayleigh_jeans - 1.0).abs() < 1e-3);
        // n ≈ kT/ħω - 1/2 in this regime
        assert!((n - (rayleigh_jeans - 0.5)).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_physical_inputs() {
        let mut p = lab_cavity();
        p.mech_quality = 50.0;
        assert_eq!(p.validate(), Err(ModelError::LowMechanicalQuality(50.0)));

        let mut p = lab_cavity();
        p.mirror_mass = 0.0;
        assert!(matches!(p.validate(), Err(ModelError::NonPositive { field: "mirror_mass", .. })));

        let mut p = lab_cavity();
        p.temperature = -1.0;
        assert!(matches!(p.validate(), Err(ModelError::NegativeTemperature(_))));

        let mut sys = PhysicalSystem::identical(lab_cavity(), 1e6);
        sys.cavities[1].laser_wavelength = 780e-9;
        assert!(matches!(sys.validate(), Err(ModelError::UnequalLaserWavelengths(..))));
    }

    #[test]
    fn effective_mode_is_passthrough() {
        let e = EffectiveParams::identical_normalized(2.0, 1e-5, 0.5, 1.0, 4.0, 0.5, 10.0);
        assert_eq!(to_effective(&ModelInput::Effective(e), None), Ok(e));
    }

    #[test]
    fn physical_mode_needs_steady_state() {
        let sys = PhysicalSystem::identical(lab_cavity(), 0.0);
        assert_eq!(
            to_effective(&ModelInput::Physical(sys), None),
            Err(ModelError::MissingSteadyState)
        );
    }

    #[test]
    fn normalized_view_has_unit_reference() {
        let e = EffectiveParams::identical_normalized(7.0, 1e-5, 0.5, 1.0, 4.0, 0.5, 10.0);
        let n = e.normalized();
        assert_eq!(n.mech_freq, [1.0, 1.0]);
        assert_relative_eq!(n.cavity_decay[1], 0.5, max_relative = 1e-15);
        assert_relative_eq!(n.hopping, 0.5, max_relative = 1e-15);
        assert_eq!(n.thermal_occupation, [10.0, 10.0]);
    }

    proptest! {
        #[test]
        fn coupling_ratio_laws(
            l in 1e-4f64..1e-1, m in 1e-13f64..1e-8, w in 1e5f64..1e9, k in 1.5f64..4.0,
        ) {
            let mut p = lab_cavity();
            p.cavity_length = l;
            p.mirror_mass = m;
            p.mech_freq = w;
            let g = single_photon_coupling(&p);
            let mut q = p;
            q.cavity_length = k * l;
            prop_assert!((single_photon_coupling(&q) * k / g - 1.0).abs() < 1e-12);
            let mut q = p;
            q.mirror_mass = k * m;
            prop_assert!((single_photon_coupling(&q) * k.sqrt() / g - 1.0).abs() < 1e-12);
            let mut q = p;
            q.mech_freq = k * w;
            prop_assert!((single_photon_coupling(&q) * k.sqrt() / g - 1.0).abs() < 1e-12);
        }

        #[test]
        fn occupation_monotone(t in 1e-3f64..50.0, dt in 1e-3f64..10.0, w in 1e5f64..1e10, dw in 1e3f64..1e9) {
            let n = mean_thermal_occupation(t, w);
            prop_assert!(n >= 0.0);
            prop_assert!(mean_thermal_occupation(t + dt, w) >= n);
            prop_assert!(mean_thermal_occupation(t, w + dw) <= n);
        }
    }
}
