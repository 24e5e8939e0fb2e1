//! Linearized fluctuation dynamics `μ̇ = Cμ + noise`.
//!
//! Quadrature ordering is `(δq₁, δp₁, δX₁, δY₁, δq₂, δp₂, δX₂, δY₂)`.

use nalgebra::{Complex, DMatrix, SMatrix, Schur};
use thiserror::Error;

use crate::model::EffectiveParams;
use crate::scalar::Real;

pub type Matrix8<T> = SMatrix<T, 8, 8>;

/// Relative size of the spectral abscissa below which a drift matrix is
/// treated as marginal.
pub const MARGINAL_REL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("eigenvalue iteration for the drift matrix did not converge")]
    EigenSolverFailure,
    #[error("drift matrix has non-finite entries")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix<T: Real>(pub Matrix8<T>);

impl<T: Real> DriftMatrix<T> {
    pub fn matrix(&self) -> &Matrix8<T> {
        &self.0
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.norm()
    }
}

/// Diagonal diffusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix<T> {
    pub diagonal: [T; 8],
}

impl<T: Real> DiffusionMatrix<T> {
    pub fn matrix(&self) -> Matrix8<T> {
        Matrix8::from_diagonal(&nalgebra::SVector::<T, 8>::from(self.diagonal))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T: Real> {
    pub stable: bool,
    /// Largest real part over the spectrum of `C`.
    pub spectral_abscissa: T,
    pub eigenvalues: Vec<Complex<T>>,
    pub margin_note: Option<String>,
}

/// Drift matrix of the linearized Langevin equations.
pub fn build_drift<T: Real>(p: &EffectiveParams<T>) -> DriftMatrix<T> {
    let mut c = Matrix8::zeros();
    for j in 0..2 {
        let o = 4 * j;
        let (w, gamma, kappa, delta, g) = (
            p.mech_freq[j],
            p.mech_damping[j],
            p.cavity_decay[j],
            p.effective_detuning[j],
            p.effective_coupling[j],
        );
        c[(o, o + 1)] = w;
        c[(o + 1, o)] = -w;
        c[(o + 1, o + 1)] = -gamma;
        c[(o + 1, o + 2)] = g;
        c[(o + 2, o + 2)] = -kappa;
        c[(o + 2, o + 3)] = delta;
        c[(o + 3, o)] = g;
        c[(o + 3, o + 2)] = -delta;
        c[(o + 3, o + 3)] = -kappa;
    }
    let xi = p.hopping;
    c[(2, 7)] = -xi;
    c[(3, 6)] = xi;
    c[(6, 3)] = -xi;
    c[(7, 2)] = xi;
    DriftMatrix(c)
}

/// `diag(0, γ₁(2n̄₁+1), κ₁, κ₁, 0, γ₂(2n̄₂+1), κ₂, κ₂)`.
pub fn build_diffusion<T: Real>(p: &EffectiveParams<T>) -> DiffusionMatrix<T> {
    let mut d = [T::zero(); 8];
    let two = T::lit(2.0);
    for j in 0..2 {
        let o = 4 * j;
        d[o + 1] = p.mech_damping[j] * (two * p.thermal_occupation[j] + T::one());
        d[o + 2] = p.cavity_decay[j];
        d[o + 3] = p.cavity_decay[j];
    }
    DiffusionMatrix { diagonal: d }
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> Result<Vec<Complex<T>>, DynamicsError> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let dynamic = DMatrix::from_iterator(N, N, m.iter().copied());
    let schur = Schur::try_new(dynamic, T::eps(), 10_000).ok_or(DynamicsError::EigenSolverFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Linear stability from the spectrum of `C`.
///
/// Spectral abscissae within `1e-10·‖C‖` of zero are reported unstable with a
/// margin note: the stationary covariance is ill-posed there.
pub fn stability<T: Real>(c: &DriftMatrix<T>) -> Result<StabilityReport<T>, DynamicsError> {
    let eigenvalues = eigenvalues(&c.0)?;
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(-T::max_value().unwrap_or_else(T::one), |a, b| a.max(b));
    let margin = T::tolerance(MARGINAL_REL, 64.0) * c.frobenius_norm();
    let (stable, margin_note) = if abscissa.abs() <= margin {
        (
            false,
            Some(format!(
                "marginal: spectral abscissa {:e} within {:e} of zero",
                abscissa.to_f64_lossy(),
                margin.to_f64_lossy()
            )),
        )
    } else {
        (abscissa < T::zero(), None)
    };
    Ok(StabilityReport {
        stable,
        spectral_abscissa: abscissa,
        eigenvalues,
        margin_note,
    })
}
