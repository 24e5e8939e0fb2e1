//! Stationary covariance matrix from `CZ + ZCᵀ = -D`.
//!
//! The direct solver vectorizes the equation with the Kronecker identity
//! `(I⊗C + C⊗I)·vec(Z) = -vec(D)` and solves the `n²×n²` system by LU with
//! partial pivoting. [`integrate_covariance_ode`] integrates the transient
//! `dZ/dt = CZ + ZCᵀ + D` and converges to the same matrix for stable `C`;
//! it exists to cross-check the direct route.

use nalgebra::{DMatrix, DVector, SMatrix, SymmetricEigen};
use thiserror::Error;

use crate::dynamics::{stability, DiffusionMatrix, DriftMatrix, DynamicsError, Matrix8};
use crate::scalar::Real;

/// Eigenvalues of a covariance matrix below `-PSD_TOL` flag it indefinite.
pub const PSD_TOL: f64 = 1e-12;
/// Default per-step relative tolerance of the transient integrator.
pub const ODE_RTOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("drift matrix is not stable (spectral abscissa {abscissa:e}); the stationary covariance is undefined")]
    UnstableDrift { abscissa: f64 },
    #[error("vectorized Lyapunov system is numerically singular (pivot ratio {pivot_ratio:e})")]
    SingularSystem { pivot_ratio: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("integrator step size underflow at t = {t:e}")]
    StepSizeUnderflow { t: f64 },
    #[error("negative integration time {0}")]
    NegativeTime(f64),
}

/// Symmetrized second moments of the quadrature fluctuations, vacuum
/// variance 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix<T: Real>(pub Matrix8<T>);

impl<T: Real> CovarianceMatrix<T> {
    pub fn matrix(&self) -> &Matrix8<T> {
        &self.0
    }

    pub fn identity_scaled(v: T) -> Self {
        Self(Matrix8::identity() * v)
    }

    /// Vacuum covariance `I/2`.
    pub fn vacuum() -> Self {
        Self::identity_scaled(T::lit(0.5))
    }

    pub fn asymmetry(&self) -> T {
        (self.0 - self.0.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> T {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.min_eigenvalue() >= -T::lit(PSD_TOL)
    }

    /// `max |CZ + ZCᵀ + D|`.
    pub fn lyapunov_residual(&self, c: &DriftMatrix<T>, d: &DiffusionMatrix<T>) -> T {
        let z = &self.0;
        (c.0 * z + z * c.0.transpose() + d.matrix()).amax()
    }

    /// Relabels cavity 1 as cavity 2 and vice versa.
    pub fn swapped(&self) -> Self {
        let mut out = Matrix8::zeros();
        for i in 0..8 {
            for j in 0..8 {
                out[((i + 4) % 8, (j + 4) % 8)] = self.0[(i, j)];
            }
        }
        Self(out)
    }
}

fn symmetrize<T: Real, const N: usize>(z: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    (z + z.transpose()) * T::lit(0.5)
}

/// Solves `CZ + ZCᵀ = -D` for any square size without checking stability.
///
/// For unstable `C` this is the formal algebraic solution, which exists
/// whenever no two eigenvalues of `C` sum to zero but is not a covariance.
pub fn solve_lyapunov_unchecked<T: Real, const N: usize>(
    c: &SMatrix<T, N, N>,
    d: &SMatrix<T, N, N>,
) -> Result<SMatrix<T, N, N>, LyapunovError> {
    let n = N;
    let cd = DMatrix::from_iterator(n, n, c.iter().copied());
    let id = DMatrix::<T>::identity(n, n);
    let system = id.kronecker(&cd) + cd.kronecker(&id);
    let rhs = DVector::from_iterator(n * n, d.iter().map(|v| -*v));

    let lu = system.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let (mut lo, mut hi) = (T::max_value().unwrap_or_else(T::one), T::zero());
    for v in diag.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    let ratio = if hi > T::zero() { lo / hi } else { T::zero() };
    if !(ratio > T::eps() * T::lit(64.0)) {
        return Err(LyapunovError::SingularSystem {
            pivot_ratio: ratio.to_f64_lossy(),
        });
    }
    let x = lu.solve(&rhs).ok_or(LyapunovError::SingularSystem {
        pivot_ratio: ratio.to_f64_lossy(),
    })?;
    // vec() is column-major, as is nalgebra storage
    let z = SMatrix::<T, N, N>::from_iterator(x.iter().copied());
    Ok(symmetrize(&z))
}

/// Direct solve for a stable square drift matrix of any size.
pub fn solve_lyapunov_matrix<T: Real, const N: usize>(
    c: &SMatrix<T, N, N>,
    d: &SMatrix<T, N, N>,
) -> Result<SMatrix<T, N, N>, LyapunovError> {
    let eig = crate::dynamics::eigenvalues(c)?;
    let abscissa = eig
        .iter()
        .map(|z| z.re)
        .fold(-T::max_value().unwrap_or_else(T::one), |a, b| a.max(b));
    if !(abscissa < T::zero()) {
        return Err(LyapunovError::UnstableDrift {
            abscissa: abscissa.to_f64_lossy(),
        });
    }
    solve_lyapunov_unchecked(c, d)
}

/// Stationary covariance of the linearized dynamics.
///
/// Requires a stable drift matrix (marginal ones are rejected). The result is
/// symmetrized; indefiniteness is not repaired, check
/// [`CovarianceMatrix::is_positive_semidefinite`].
pub fn solve_lyapunov<T: Real>(
    c: &DriftMatrix<T>,
    d: &DiffusionMatrix<T>,
) -> Result<CovarianceMatrix<T>, LyapunovError> {
    let report = stability(c)?;
    if !report.stable {
        return Err(LyapunovError::UnstableDrift {
            abscissa: report.spectral_abscissa.to_f64_lossy(),
        });
    }
    solve_lyapunov_unchecked(&c.0, &d.matrix()).map(CovarianceMatrix)
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::tolerance(ODE_RTOL, 64.0),
            atol: T::tolerance(ODE_RTOL * 1e-2, 64.0),
            max_steps: 10_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (error weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dZ/dt = CZ + ZCᵀ + D` from `z0` over `[0, t]`.
pub fn integrate_lyapunov_ode<T: Real, const N: usize>(
    c: &SMatrix<T, N, N>,
    d: &SMatrix<T, N, N>,
    z0: &SMatrix<T, N, N>,
    t: T,
    opts: &OdeOptions<T>,
) -> Result<SMatrix<T, N, N>, LyapunovError> {
    if t < T::zero() || !t.is_finite() {
        return Err(LyapunovError::NegativeTime(t.to_f64_lossy()));
    }
    let mut z = symmetrize(z0);
    if t == T::zero() {
        return Ok(z);
    }
    let ct = c.transpose();
    let rhs = |z: &SMatrix<T, N, N>| c * z + z * ct + d;
    let l = T::lit;

    let scale0 = c.amax().max(T::eps());
    let mut h = (T::lit(0.01) / scale0).min(t);
    let mut time = T::zero();
    let mut k1 = rhs(&z);
    for _ in 0..opts.max_steps {
        if time >= t {
            return Ok(z);
        }
        let h_floor = T::eps() * T::lit(16.0) * time.abs().max(t);
        if h < h_floor {
            return Err(LyapunovError::StepSizeUnderflow { t: time.to_f64_lossy() });
        }
        let last = time + h >= t;
        let h_step = if last { t - time } else { h };

        let k2 = rhs(&(z + k1 * (h_step * l(A21))));
        let k3 = rhs(&(z + (k1 * l(A31) + k2 * l(A32)) * h_step));
        let k4 = rhs(&(z + (k1 * l(A41) + k2 * l(A42) + k3 * l(A43)) * h_step));
        let k5 = rhs(&(z + (k1 * l(A51) + k2 * l(A52) + k3 * l(A53) + k4 * l(A54)) * h_step));
        let k6 = rhs(&(z + (k1 * l(A61) + k2 * l(A62) + k3 * l(A63) + k4 * l(A64) + k5 * l(A65)) * h_step));
        let z_new = z + (k1 * l(B1) + k3 * l(B3) + k4 * l(B4) + k5 * l(B5) + k6 * l(B6)) * h_step;
        let k7 = rhs(&z_new);
        let err_vec = (k1 * l(E1) + k3 * l(E3) + k4 * l(E4) + k5 * l(E5) + k6 * l(E6) + k7 * l(E7)) * h_step;

        let mut err = T::zero();
        for i in 0..N * N {
            let sc = opts.atol + opts.rtol * z[i].abs().max(z_new[i].abs());
            err = err.max(err_vec[i].abs() / sc);
        }
        if !err.is_finite() {
            h *= T::lit(0.25);
            continue;
        }
        if err <= T::one() {
            time = if last { t } else { time + h_step };
            z = symmetrize(&z_new);
            k1 = rhs(&z);
        }
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        h = h_step * factor;
        if last && err <= T::one() {
            return Ok(z);
        }
    }
    Err(LyapunovError::StepSizeUnderflow { t: time.to_f64_lossy() })
}

/// Transient covariance `Z(t)` of the 8-mode-quadrature dynamics.
pub fn integrate_covariance_ode<T: Real>(
    c: &DriftMatrix<T>,
    d: &DiffusionMatrix<T>,
    z0: &CovarianceMatrix<T>,
    t: T,
) -> Result<CovarianceMatrix<T>, LyapunovError> {
    integrate_lyapunov_ode(&c.0, &d.matrix(), &z0.0, t, &OdeOptions::default()).map(CovarianceMatrix)
}
