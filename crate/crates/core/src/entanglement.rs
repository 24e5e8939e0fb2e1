//! Two-mode entanglement of the stationary Gaussian state.
//!
//! For a reduced covariance matrix `[[Z₁, Z_c], [Z_cᵀ, Z₂]]` the smallest
//! symplectic eigenvalue of the partial transpose is
//! `ϑ⁻ = √((χ - √(χ² - 4 det Z_R)) / 2)` with
//! `χ = det Z₁ + det Z₂ - 2 det Z_c`, and the logarithmic negativity is
//! `E_N = max(0, -ln 2ϑ⁻)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use thiserror::Error;

use crate::lyapunov::CovarianceMatrix;
use crate::scalar::Real;

/// Roundoff allowance for the radicand `χ² - 4 det Z_R`.
pub const RADICAND_TOL: f64 = 1e-12;
/// `|2ϑ⁻ - 1|` at or below this is reported as the separability boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Eigenvalue floor of `Z + iΩ/2` for a physical state.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("χ² - 4 det Z_R = {0:e} is negative; not a valid covariance matrix")]
    NegativeRadicand(f64),
    #[error("χ - √(χ² - 4 det Z_R) = {0:e} is negative; not a valid covariance matrix")]
    Unphysical(f64),
}

/// The four two-mode reductions of the eight-quadrature state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bipartition {
    /// Mirror 1 and field 1.
    Intracavity1,
    /// Mirror 2 and field 2.
    Intracavity2,
    /// The two mirrors.
    MechMech,
    /// The two cavity fields.
    OptOpt,
}

impl Bipartition {
    pub const ALL: [Bipartition; 4] = [
        Bipartition::Intracavity1,
        Bipartition::Intracavity2,
        Bipartition::MechMech,
        Bipartition::OptOpt,
    ];

    /// Zero-based quadrature indices; the first pair is mode 1.
    pub fn indices(self) -> [usize; 4] {
        match self {
            Bipartition::Intracavity1 => [0, 1, 2, 3],
            Bipartition::Intracavity2 => [4, 5, 6, 7],
            Bipartition::MechMech => [0, 1, 4, 5],
            Bipartition::OptOpt => [2, 3, 6, 7],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bipartition::Intracavity1 => "intracavity_1",
            Bipartition::Intracavity2 => "intracavity_2",
            Bipartition::MechMech => "mech_mech",
            Bipartition::OptOpt => "opt_opt",
        }
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown bipartition `{0}` (expected intracavity_1, intracavity_2, mech_mech or opt_opt)")]
pub struct UnknownBipartition(pub String);

impl FromStr for Bipartition {
    type Err = UnknownBipartition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bipartition::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| UnknownBipartition(s.to_string()))
    }
}

/// Two-mode covariance matrix split into 2×2 blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCM<T: Real> {
    pub z1: Matrix2<T>,
    pub z2: Matrix2<T>,
    pub zc: Matrix2<T>,
}

impl<T: Real> ReducedCM<T> {
    pub fn from_matrix(m: &Matrix4<T>) -> Self {
        Self {
            z1: m.fixed_view::<2, 2>(0, 0).into(),
            z2: m.fixed_view::<2, 2>(2, 2).into(),
            zc: m.fixed_view::<2, 2>(0, 2).into(),
        }
    }

    pub fn assembled(&self) -> Matrix4<T> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.z1);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.z2);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.zc);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.zc.transpose());
        m
    }

    /// `χ = det Z₁ + det Z₂ - 2 det Z_c`.
    pub fn seralian(&self) -> T {
        self.z1.determinant() + self.z2.determinant() - T::lit(2.0) * self.zc.determinant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementResult<T> {
    pub theta_minus: T,
    pub log_negativity: T,
    pub simon_entangled: bool,
    /// `2ϑ⁻` within [`BOUNDARY_TOL`] of one; reported separable.
    pub boundary: bool,
}

pub fn extract_bipartition<T: Real>(z: &CovarianceMatrix<T>, b: Bipartition) -> ReducedCM<T> {
    let idx = b.indices();
    let m = Matrix4::from_fn(|i, j| z.0[(idx[i], idx[j])]);
    ReducedCM::from_matrix(&m)
}

/// Smallest partially transposed symplectic eigenvalue `ϑ⁻`.
pub fn theta_minus<T: Real>(r: &ReducedCM<T>) -> Result<T, EntanglementError> {
    let chi = r.seralian();
    let det = r.assembled().determinant();
    let mut radicand = chi * chi - T::lit(4.0) * det;
    let scale = (chi * chi).max(T::one());
    if radicand < T::zero() {
        if radicand < -T::tolerance(RADICAND_TOL, 16.0) * scale {
            return Err(EntanglementError::NegativeRadicand(radicand.to_f64_lossy()));
        }
        radicand = T::zero();
    }
    // (χ - √R)/2 rewritten as 2 det/(χ + √R) to avoid cancellation when χ ≫ det
    let root = radicand.sqrt();
    let mut square = if chi > T::zero() {
        T::lit(2.0) * det / (chi + root)
    } else {
        (chi - root) * T::lit(0.5)
    };
    if square < T::zero() {
        if square < -T::tolerance(RADICAND_TOL, 16.0) * chi.abs().max(T::one()) {
            return Err(EntanglementError::Unphysical(square.to_f64_lossy()));
        }
        square = T::zero();
    }
    Ok(square.sqrt())
}

/// `max(0, -ln 2ϑ⁻)`.
pub fn log_negativity_from_theta<T: Real>(theta: T) -> T {
    (-(T::lit(2.0) * theta).ln()).max(T::zero())
}

pub fn log_negativity<T: Real>(r: &ReducedCM<T>) -> Result<T, EntanglementError> {
    theta_minus(r).map(log_negativity_from_theta)
}

/// PPT test `4 det Z_R < χ - 1/4`.
pub fn simon_criterion<T: Real>(r: &ReducedCM<T>) -> bool {
    T::lit(4.0) * r.assembled().determinant() < r.seralian() - T::lit(0.25)
}

/// ϑ⁻, E_N and the Simon test with the boundary convention applied.
pub fn entanglement<T: Real>(r: &ReducedCM<T>) -> Result<EntanglementResult<T>, EntanglementError> {
    let theta = theta_minus(r)?;
    let boundary = (T::lit(2.0) * theta - T::one()).abs() <= T::tolerance(BOUNDARY_TOL, 64.0);
    let (log_negativity, simon_entangled) = if boundary {
        (T::zero(), false)
    } else {
        (log_negativity_from_theta(theta), simon_criterion(r))
    };
    Ok(EntanglementResult {
        theta_minus: theta,
        log_negativity,
        simon_entangled,
        boundary,
    })
}

/// Minimum eigenvalue of the Hermitian `Z + (i/2)Ω` for an even-sized
/// quadrature covariance, `Ω` the direct sum of `[[0, 1], [-1, 0]]`.
pub fn uncertainty_min_eigenvalue<T: Real>(z: &DMatrix<T>) -> T {
    let n = z.nrows();
    assert!(n == z.ncols() && n % 2 == 0, "covariance must be square with an even size");
    let half = T::lit(0.5);
    let mut b = DMatrix::<T>::zeros(n, n);
    for k in (0..n).step_by(2) {
        b[(k, k + 1)] = half;
        b[(k + 1, k)] = -half;
    }
    // Real form of A + iB: [[A, -B], [B, A]]; eigenvalues doubled.
    let mut real = DMatrix::<T>::zeros(2 * n, 2 * n);
    real.view_mut((0, 0), (n, n)).copy_from(z);
    real.view_mut((n, n), (n, n)).copy_from(z);
    real.view_mut((0, n), (n, n)).copy_from(&(-&b));
    real.view_mut((n, 0), (n, n)).copy_from(&b);
    SymmetricEigen::new(real).eigenvalues.min()
}

/// Heisenberg uncertainty `Z + (i/2)Ω ⪰ 0` up to [`PHYSICALITY_TOL`].
pub fn check_physicality<T: Real>(z: &CovarianceMatrix<T>) -> bool {
    let d = DMatrix::from_iterator(8, 8, z.0.iter().copied());
    uncertainty_min_eigenvalue(&d) >= -T::lit(PHYSICALITY_TOL)
}
