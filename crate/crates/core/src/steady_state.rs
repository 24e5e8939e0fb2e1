//! Stationary mean fields of the two driven cavities.
//!
//! The stationary amplitudes solve
//! `a_j = (α_k E_j + iξ E_k) / (α_j α_k + ξ²)` with `α_j = κ_j + iΔ_j` and
//! `Δ_j = Δ₀_j - g_j²|a_j|²/ω_mj`. The unknowns are the effective detunings.
//! Solutions are found by pseudo-arclength continuation of the solution curve
//! in `(Δ, s)`, where `s = P/P_target` ramps the drive power from zero (where
//! the solution is unique) to its target. Every crossing of `s = 1` along the
//! curve is a stationary state; the first one is the state reached by
//! adiabatically ramping the laser up. Turning points of `s` along the curve
//! are optical-bistability folds.

use num_complex::Complex;
use thiserror::Error;

use crate::model::{drive_amplitude, single_photon_coupling, ModelError, PhysicalSystem};
use crate::scalar::Real;

/// Default relative residual for a converged steady state.
pub const STEADY_STATE_TOL: f64 = 1e-12;
/// Default cap on continuation steps.
pub const MAX_CONTINUATION_STEPS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("steady-state continuation did not converge after {steps} steps")]
    NoConvergence { steps: usize },
    #[error("input is multistable ({branches} stationary states); choose a branch explicitly")]
    MultistableAmbiguous { branches: usize },
}

/// Position of a stationary state among all states found at the same power,
/// ordered by total intracavity photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Unique,
    Lower,
    Middle,
    Upper,
}

/// Which stationary state to return when several coexist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchChoice {
    /// The state continuously connected to zero power.
    #[default]
    Adiabatic,
    Lower,
    Upper,
    /// Fail with [`SteadyStateError::MultistableAmbiguous`] if not unique.
    Strict,
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions<T> {
    pub branch: BranchChoice,
    pub tolerance: T,
    pub max_steps: usize,
}

impl<T: Real> Default for SteadyStateOptions<T> {
    fn default() -> Self {
        Self {
            branch: BranchChoice::Adiabatic,
            tolerance: T::tolerance(STEADY_STATE_TOL, 64.0),
            max_steps: MAX_CONTINUATION_STEPS,
        }
    }
}

/// Stationary mean values of both cavities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    /// Intracavity amplitudes `a_j` (photon-number units), drive phase zero.
    pub amp: [Complex<T>; 2],
    /// Mechanical displacement `q_j = g_j|a_j|²/ω_mj`.
    pub mech_pos: [T; 2],
    /// Mechanical momentum, identically zero.
    pub mech_mom: [T; 2],
    /// Effective detunings `Δ_j`, rad/s.
    pub eff_detuning: [T; 2],
    pub residual: T,
    pub branch: Branch,
}

impl<T: Real> SteadyState<T> {
    pub fn photon_number(&self, j: usize) -> T {
        self.amp[j].norm_sqr()
    }

    pub fn swapped(&self) -> Self {
        Self {
            amp: [self.amp[1], self.amp[0]],
            mech_pos: [self.mech_pos[1], self.mech_pos[0]],
            mech_mom: [self.mech_mom[1], self.mech_mom[0]],
            eff_detuning: [self.eff_detuning[1], self.eff_detuning[0]],
            residual: self.residual,
            branch: self.branch,
        }
    }
}

/// Full continuation result.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution<T> {
    /// The state selected by [`SteadyStateOptions::branch`].
    pub state: SteadyState<T>,
    /// Every stationary state found at the target power, lowest photon
    /// number first.
    pub branches: Vec<SteadyState<T>>,
    /// Power fractions `P/P_target` of the folds passed along the curve.
    pub folds: Vec<T>,
}

impl<T> SteadyStateSolution<T> {
    pub fn is_multistable(&self) -> bool {
        self.branches.len() > 1
    }
}

/// Everything the stationary equations need, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateProblem<T> {
    /// Drive amplitudes `E_j` (taken real).
    pub drive: [T; 2],
    pub cavity_decay: [T; 2],
    pub bare_detuning: [T; 2],
    /// Single-photon couplings `g_j`.
    pub coupling: [T; 2],
    pub mech_freq: [T; 2],
    pub hopping: T,
}

impl<T: Real> SteadyStateProblem<T> {
    pub fn from_physical(sys: &PhysicalSystem<T>) -> Self {
        let c = &sys.cavities;
        Self {
            drive: [drive_amplitude(&c[0]), drive_amplitude(&c[1])],
            cavity_decay: [c[0].cavity_decay, c[1].cavity_decay],
            bare_detuning: [c[0].cavity_detuning_bare, c[1].cavity_detuning_bare],
            coupling: [single_photon_coupling(&c[0]), single_photon_coupling(&c[1])],
            mech_freq: [c[0].mech_freq, c[1].mech_freq],
            hopping: sys.hopping,
        }
    }

    /// Radiation-pressure detuning shift per photon, `g_j²/ω_mj`.
    pub fn shift_per_photon(&self, j: usize) -> T {
        self.coupling[j] * self.coupling[j] / self.mech_freq[j]
    }

    /// `Δ_j = Δ₀_j - g_j²|a_j|²/ω_mj`.
    pub fn detuning_from_amplitude(&self, j: usize, a: Complex<T>) -> T {
        self.bare_detuning[j] - self.shift_per_photon(j) * a.norm_sqr()
    }

    /// Amplitudes for given detunings at full drive.
    pub fn amplitudes(&self, detuning: [T; 2]) -> [Complex<T>; 2] {
        self.linear_response(detuning).0
    }

    pub fn swapped(&self) -> Self {
        let s = |a: [T; 2]| [a[1], a[0]];
        Self {
            drive: s(self.drive),
            cavity_decay: s(self.cavity_decay),
            bare_detuning: s(self.bare_detuning),
            coupling: s(self.coupling),
            mech_freq: s(self.mech_freq),
            hopping: self.hopping,
        }
    }

    fn cavity_key(&self, j: usize) -> [T; 5] {
        [
            self.drive[j],
            self.cavity_decay[j],
            self.bare_detuning[j],
            self.coupling[j],
            self.mech_freq[j],
        ]
    }

    fn is_symmetric(&self) -> bool {
        self.cavity_key(0) == self.cavity_key(1)
    }

    /// Amplitudes `a = M⁻¹E` and the inverse `M⁻¹` of
    /// `M = [[α₁, -iξ], [-iξ, α₂]]`.
    fn linear_response(&self, detuning: [T; 2]) -> ([Complex<T>; 2], [[Complex<T>; 2]; 2]) {
        let alpha = [
            Complex::new(self.cavity_decay[0], detuning[0]),
            Complex::new(self.cavity_decay[1], detuning[1]),
        ];
        let ixi = Complex::new(T::zero(), self.hopping);
        let xi2 = Complex::new(self.hopping * self.hopping, T::zero());
        let det = alpha[0] * alpha[1] + xi2;
        let inv = [[alpha[1] / det, ixi / det], [ixi / det, alpha[0] / det]];
        let e = [
            Complex::new(self.drive[0], T::zero()),
            Complex::new(self.drive[1], T::zero()),
        ];
        let amp = [
            (alpha[1] * e[0] + ixi * e[1]) / det,
            (alpha[0] * e[1] + ixi * e[0]) / det,
        ];
        (amp, inv)
    }

    /// `N_j = |a_j|²` at full drive and `∂N_j/∂Δ_k`.
    fn photon_numbers(&self, detuning: [T; 2]) -> ([T; 2], [[T; 2]; 2]) {
        let (a, inv) = self.linear_response(detuning);
        let two = T::lit(2.0);
        let minus_i = Complex::new(T::zero(), -T::one());
        let mut grad = [[T::zero(); 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                let da = minus_i * a[k] * inv[j][k];
                grad[j][k] = two * (a[j].conj() * da).re;
            }
        }
        ([a[0].norm_sqr(), a[1].norm_sqr()], grad)
    }

    fn state_from_detuning(&self, detuning: [T; 2]) -> SteadyState<T> {
        let amp = self.amplitudes(detuning);
        let mech_pos = [
            self.coupling[0] * amp[0].norm_sqr() / self.mech_freq[0],
            self.coupling[1] * amp[1].norm_sqr() / self.mech_freq[1],
        ];
        let mut st = SteadyState {
            amp,
            mech_pos,
            mech_mom: [T::zero(); 2],
            eff_detuning: [
                self.detuning_from_amplitude(0, amp[0]),
                self.detuning_from_amplitude(1, amp[1]),
            ],
            residual: T::zero(),
            branch: Branch::Unique,
        };
        st.residual = fixed_point_residual(&st, self);
        st
    }
}

/// Relative residual of the stationary amplitude equation.
///
/// Detunings are recomputed from the candidate amplitudes; the amplitude
/// mismatch of each cavity is scaled by `max(1, E_j/κ_j)`.
pub fn fixed_point_residual<T: Real>(candidate: &SteadyState<T>, problem: &SteadyStateProblem<T>) -> T {
    let r = cavity_residuals(&candidate.amp, problem);
    // NaN in either cavity propagates
    if !r[0].is_finite() || r[0] >= r[1] {
        r[0]
    } else {
        r[1]
    }
}

fn cavity_residuals<T: Real>(amp: &[Complex<T>; 2], problem: &SteadyStateProblem<T>) -> [T; 2] {
    let detuning = [
        problem.detuning_from_amplitude(0, amp[0]),
        problem.detuning_from_amplitude(1, amp[1]),
    ];
    let predicted = problem.amplitudes(detuning);
    let mut out = [T::zero(); 2];
    for j in 0..2 {
        let diff = (amp[j] - predicted[j]).norm_sqr().sqrt();
        let scale = (problem.drive[j] / problem.cavity_decay[j]).max(T::one());
        out[j] = diff / scale;
    }
    out
}

/// Solves for the adiabatically reached stationary state.
pub fn solve_steady_state<T: Real>(sys: &PhysicalSystem<T>) -> Result<SteadyState<T>, SteadyStateError> {
    solve_steady_state_with(sys, &SteadyStateOptions::default()).map(|s| s.state)
}

pub fn solve_steady_state_with<T: Real>(
    sys: &PhysicalSystem<T>,
    opts: &SteadyStateOptions<T>,
) -> Result<SteadyStateSolution<T>, SteadyStateError> {
    sys.validate()?;
    solve_problem(&SteadyStateProblem::from_physical(sys), opts)
}

/// Solves the stationary equations for an explicit problem description.
pub fn solve_problem<T: Real>(
    problem: &SteadyStateProblem<T>,
    opts: &SteadyStateOptions<T>,
) -> Result<SteadyStateSolution<T>, SteadyStateError> {
    // Cavities are solved in a canonical order so that relabelling them
    // permutes the output bit for bit.
    if canonical_swap(problem) {
        let sol = solve_ordered(&problem.swapped(), opts)?;
        return Ok(SteadyStateSolution {
            state: sol.state.swapped(),
            branches: sol.branches.iter().map(SteadyState::swapped).collect(),
            folds: sol.folds,
        });
    }
    solve_ordered(problem, opts)
}

fn canonical_swap<T: Real>(p: &SteadyStateProblem<T>) -> bool {
    let (a, b) = (p.cavity_key(0), p.cavity_key(1));
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return false;
        }
        if x > y {
            return true;
        }
    }
    false
}

/// One continuation curve; unknowns are detunings scaled by `scale`.
#[derive(Clone, Copy)]
enum Reduction {
    /// Both detunings equal (identical cavities).
    Symmetric,
    /// One cavity of a decoupled (ξ = 0) pair.
    Single(usize),
    Coupled,
}

impl Reduction {
    fn dim(self) -> usize {
        match self {
            Reduction::Coupled => 2,
            _ => 1,
        }
    }
}

struct Curve<'a, T> {
    problem: &'a SteadyStateProblem<T>,
    kind: Reduction,
    scale: T,
}

/// Point on the curve: up to two scaled detunings, then `s`.
type Point<T> = [T; 3];

impl<'a, T: Real> Curve<'a, T> {
    fn detuning(&self, y: &Point<T>) -> [T; 2] {
        let d = self.problem.bare_detuning;
        match self.kind {
            Reduction::Symmetric => [y[0] * self.scale, y[0] * self.scale],
            Reduction::Single(0) => [y[0] * self.scale, d[1]],
            Reduction::Single(_) => [d[0], y[0] * self.scale],
            Reduction::Coupled => [y[0] * self.scale, y[1] * self.scale],
        }
    }

    fn cavities(&self) -> &'static [usize] {
        match self.kind {
            Reduction::Symmetric | Reduction::Single(0) => &[0],
            Reduction::Single(_) => &[1],
            Reduction::Coupled => &[0, 1],
        }
    }

    /// Scaled residual `F` and Jacobian `[∂F/∂x | ∂F/∂s]`.
    fn eval(&self, y: &Point<T>, s: T) -> ([T; 2], [[T; 3]; 2]) {
        let m = self.kind.dim();
        let detuning = self.detuning(y);
        let (n, grad) = self.problem.photon_numbers(detuning);
        let mut f = [T::zero(); 2];
        let mut jac = [[T::zero(); 3]; 2];
        for (row, &j) in self.cavities().iter().enumerate() {
            let beta = self.problem.shift_per_photon(j);
            f[row] = (detuning[j] - self.problem.bare_detuning[j] + beta * s * n[j]) / self.scale;
            match self.kind {
                Reduction::Symmetric => {
                    jac[row][0] = T::one() + beta * s * (grad[j][0] + grad[j][1]);
                }
                Reduction::Single(_) => {
                    jac[row][0] = T::one() + beta * s * grad[j][j];
                }
                Reduction::Coupled => {
                    for k in 0..2 {
                        let delta = if j == k { T::one() } else { T::zero() };
                        jac[row][k] = delta + beta * s * grad[j][k];
                    }
                }
            }
            jac[row][m] = beta * n[j] / self.scale;
        }
        (f, jac)
    }

    fn photon_total(&self, y: &Point<T>, s: T) -> T {
        let (n, _) = self.problem.photon_numbers(self.detuning(y));
        self.cavities().iter().fold(T::zero(), |acc, &j| acc + s * n[j])
    }

    /// No further fold can bring the curve back to `s = 1`.
    fn past_last_fold(&self, y: &Point<T>, s: T, photon_bound: T) -> bool {
        if s < T::one() {
            return false;
        }
        if self.photon_total(y, s) > photon_bound {
            return true;
        }
        let d = self.detuning(y);
        match self.kind {
            // s(Δ) is monotone once Δ lies below the (hopping-shifted) resonance.
            Reduction::Symmetric => d[0] < self.problem.hopping,
            Reduction::Single(j) => d[j] < T::zero(),
            Reduction::Coupled => {
                let xi = self.problem.hopping.abs();
                (0..2).all(|j| self.problem.shift_per_photon(j) == T::zero() || d[j] < -xi)
            }
        }
    }
}

fn tangent<T: Real>(jac: &[[T; 3]; 2], m: usize) -> Point<T> {
    let mut t = [T::zero(); 3];
    if m == 1 {
        t[0] = -jac[0][1];
        t[1] = jac[0][0];
    } else {
        let (a, b) = (jac[0], jac[1]);
        t[0] = a[1] * b[2] - a[2] * b[1];
        t[1] = a[2] * b[0] - a[0] * b[2];
        t[2] = a[0] * b[1] - a[1] * b[0];
    }
    let norm = t.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
    if norm > T::zero() {
        for v in t.iter_mut() {
            *v /= norm;
        }
    }
    t
}

fn dot<T: Real>(a: &Point<T>, b: &Point<T>, len: usize) -> T {
    (0..len).fold(T::zero(), |acc, i| acc + a[i] * b[i])
}

/// Gaussian elimination with partial pivoting on an `n×n` system, `n ≤ 3`.
fn solve_small<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3], n: usize) -> Option<[T; 3]> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == T::zero() || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = [T::zero(); 3];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for c in i + 1..n {
            acc -= a[i][c] * x[c];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

struct Traced<T> {
    /// Scaled detunings of every `s = 1` crossing, in curve order.
    crossings: Vec<Point<T>>,
    folds: Vec<T>,
}

impl<'a, T: Real> Curve<'a, T> {
    fn new(problem: &'a SteadyStateProblem<T>, kind: Reduction) -> Self {
        let mut scale = T::zero();
        for j in 0..2 {
            scale = scale
                .max(problem.cavity_decay[j])
                .max(problem.bare_detuning[j].abs());
        }
        scale = scale.max(problem.hopping.abs());
        Self { problem, kind, scale }
    }

    /// Newton iteration at fixed `s = 1`.
    fn refine(&self, mut y: Point<T>, tol: T) -> Option<Point<T>> {
        let m = self.kind.dim();
        let tiny = T::eps() * T::lit(4.0);
        let norm = |f: &[T; 2]| (0..m).fold(T::zero(), |acc, i| acc.max(f[i].abs()));
        let (mut f, mut jac) = self.eval(&y, T::one());
        for _ in 0..100 {
            let mut a = [[T::zero(); 3]; 3];
            let mut b = [T::zero(); 3];
            for r in 0..m {
                for c in 0..m {
                    a[r][c] = jac[r][c];
                }
                b[r] = -f[r];
            }
            let dx = solve_small(a, b, m)?;
            // backtrack while the residual grows
            let mut lambda = T::one();
            let f0 = norm(&f);
            let mut accepted = false;
            for _ in 0..30 {
                let mut trial = y;
                for i in 0..m {
                    trial[i] += lambda * dx[i];
                }
                let (ft, jt) = self.eval(&trial, T::one());
                if norm(&ft) <= f0 || f0 <= tol * tiny {
                    y = trial;
                    f = ft;
                    jac = jt;
                    accepted = true;
                    break;
                }
                lambda *= T::lit(0.5);
            }
            if !accepted {
                break;
            }
            let step = (0..m).fold(T::zero(), |acc, i| acc.max((lambda * dx[i]).abs()));
            let size = (0..m).fold(T::one(), |acc, i| acc.max(y[i].abs()));
            if step <= tiny * size {
                break;
            }
        }
        y[m] = T::one();
        let amp = self.problem.amplitudes(self.detuning(&y));
        let r = cavity_residuals(&amp, self.problem);
        self.cavities().iter().all(|&j| r[j] <= tol).then_some(y)
    }

    fn trace(&self, tol: T, max_steps: usize) -> Result<Traced<T>, SteadyStateError> {
        let m = self.kind.dim();
        let mut y = [T::zero(); 3];
        for (row, &j) in self.cavities().iter().enumerate() {
            y[row] = self.problem.bare_detuning[j] / self.scale;
        }
        let (_, jac) = self.eval(&y, T::zero());
        let mut t = tangent(&jac, m);
        if t[m] < T::zero() {
            t.iter_mut().for_each(|v| *v = -*v);
        }

        let mut photon_bound = T::zero();
        for j in 0..2 {
            let e = self.problem.drive[0] * self.problem.drive[0]
                + self.problem.drive[1] * self.problem.drive[1];
            let k = self.problem.cavity_decay[j];
            photon_bound = photon_bound.max(e / (k * k));
        }
        photon_bound *= T::lit(2.0);

        let mut h = T::lit(1e-2);
        let h_min = T::eps() * T::lit(16.0);
        let h_max = T::lit(1e12);
        let cos_min = T::lit(0.98);
        let corr_tol = T::eps() * T::lit(64.0);
        let fold_resolution = T::lit(1e-8);
        let mut out = Traced {
            crossings: Vec::new(),
            folds: Vec::new(),
        };

        for _ in 0..max_steps {
            let h_step = h.min(self.step_cap(&y, &t));
            let mut pred = y;
            for i in 0..=m {
                pred[i] += h_step * t[i];
            }
            let corrected = self.correct(pred, &t, corr_tol);
            let (y_new, iters) = match corrected {
                Some(v) => v,
                None => {
                    h = h_step * T::lit(0.5);
                    if h < h_min {
                        return Err(SteadyStateError::NoConvergence { steps: max_steps });
                    }
                    continue;
                }
            };
            let (_, jac) = self.eval(&y_new, y_new[m]);
            let mut t_new = tangent(&jac, m);
            if dot(&t_new, &t, m + 1) < T::zero() {
                t_new.iter_mut().for_each(|v| *v = -*v);
            }
            let dist = (0..=m)
                .fold(T::zero(), |acc, i| acc + (y_new[i] - y[i]) * (y_new[i] - y[i]))
                .sqrt();
            let mut advance = T::zero();
            for i in 0..=m {
                advance += (y_new[i] - y[i]) * t[i];
            }
            let backwards = !(advance > T::lit(0.5) * h_step);
            // Distinct branches can run close together; a corrector that
            // lands far from the predictor may have switched to another.
            let widths = self.linewidths(&y);
            let mut drift = T::zero();
            let mut jumped = false;
            for i in 0..=m {
                drift += (y_new[i] - pred[i]) * (y_new[i] - pred[i]);
                if i < m && (y_new[i] - y[i]).abs() > T::lit(0.5) * widths[i] {
                    jumped = true;
                }
            }
            jumped |= drift.sqrt() > T::lit(0.5) * h_step;
            if backwards || jumped || dot(&t_new, &t, m + 1) < cos_min || dist > h_step * T::lit(2.0) {
                h = h_step * T::lit(0.5);
                if h < h_min {
                    return Err(SteadyStateError::NoConvergence { steps: max_steps });
                }
                continue;
            }

            let (s0, s1) = (y[m], y_new[m]);
            let fold = (t[m] > T::zero()) != (t_new[m] > T::zero());
            // A fold step could hide two crossings of s = 1; shrink it until
            // the power barely changes across it.
            if fold
                && (s0 < T::one()) == (s1 < T::one())
                && (s1 - s0).abs() > fold_resolution * s0.max(T::one())
                && h_step > h_min * T::lit(1e3)
            {
                h = h_step * T::lit(0.5);
                continue;
            }
            if fold {
                out.folds.push(y_new[m]);
            }
            if (s0 < T::one()) != (s1 < T::one()) {
                let theta = (T::one() - s0) / (s1 - s0);
                let mut guess = y;
                for i in 0..m {
                    guess[i] = y[i] + theta * (y_new[i] - y[i]);
                }
                let root = self
                    .refine(guess, tol)
                    .ok_or(SteadyStateError::NoConvergence { steps: max_steps })?;
                out.crossings.push(root);
            }

            y = y_new;
            t = t_new;
            if !out.crossings.is_empty() && self.past_last_fold(&y, y[m], photon_bound) {
                return Ok(out);
            }
            if iters <= 3 {
                h = (h_step * T::lit(2.0)).min(h_max);
            } else if iters > 6 {
                h = h_step * T::lit(0.7);
            } else {
                h = h_step;
            }
        }
        if out.crossings.is_empty() {
            Err(SteadyStateError::NoConvergence { steps: max_steps })
        } else {
            Ok(out)
        }
    }

    /// Scaled distance of each unknown detuning from its nearest resonance,
    /// floored by the cavity linewidth.
    fn linewidths(&self, y: &Point<T>) -> [T; 2] {
        let d = self.detuning(y);
        let xi = self.problem.hopping.abs();
        let mut out = [T::zero(); 2];
        for (row, &j) in self.cavities().iter().enumerate() {
            let k = self.problem.cavity_decay[j];
            let off = d[j].abs() - xi;
            out[row] = (k * k + off * off).sqrt() / self.scale;
        }
        out
    }

    /// Largest step that moves each detuning by at most a quarter of its
    /// local linewidth and changes the power fraction by at most a quarter.
    fn step_cap(&self, y: &Point<T>, t: &Point<T>) -> T {
        let m = self.kind.dim();
        let quarter = T::lit(0.25);
        let widths = self.linewidths(y);
        let mut cap = T::max_value().unwrap_or_else(T::one);
        for row in 0..m {
            let rate = t[row].abs();
            if rate > T::zero() {
                cap = cap.min(quarter * widths[row] / rate);
            }
        }
        let rate = t[m].abs();
        if rate > T::zero() {
            cap = cap.min(quarter * y[m].max(T::lit(0.05)) / rate);
        }
        cap
    }

    /// Newton corrector on the curve equations plus the arclength constraint.
    fn correct(&self, pred: Point<T>, t: &Point<T>, tol: T) -> Option<(Point<T>, usize)> {
        let m = self.kind.dim();
        let mut y = pred;
        for iter in 1..=12 {
            let (f, jac) = self.eval(&y, y[m]);
            let mut a = [[T::zero(); 3]; 3];
            let mut b = [T::zero(); 3];
            for r in 0..m {
                a[r] = jac[r];
                b[r] = -f[r];
            }
            for c in 0..=m {
                a[m][c] = t[c];
            }
            b[m] = -(0..=m).fold(T::zero(), |acc, i| acc + t[i] * (y[i] - pred[i]));
            let dy = solve_small(a, b, m + 1)?;
            let mut step = T::zero();
            let mut size = T::one();
            for i in 0..=m {
                y[i] += dy[i];
                step = step.max(dy[i].abs());
                size = size.max(y[i].abs());
            }
            if !y.iter().all(|v| v.is_finite()) {
                return None;
            }
            if step <= tol * size {
                return Some((y, iter));
            }
        }
        None
    }
}

/// Stationary states of one curve, in curve order, plus its folds.
fn curve_states<T: Real>(
    problem: &SteadyStateProblem<T>,
    kind: Reduction,
    opts: &SteadyStateOptions<T>,
) -> Result<(Vec<[T; 2]>, Vec<T>), SteadyStateError> {
    let curve = Curve::new(problem, kind);
    let traced = curve.trace(opts.tolerance, opts.max_steps)?;
    let states = traced.crossings.iter().map(|y| curve.detuning(y)).collect();
    Ok((states, traced.folds))
}

fn is_linear<T: Real>(problem: &SteadyStateProblem<T>, j: usize) -> bool {
    problem.drive[j] == T::zero() || problem.shift_per_photon(j) == T::zero()
}

fn solve_ordered<T: Real>(
    problem: &SteadyStateProblem<T>,
    opts: &SteadyStateOptions<T>,
) -> Result<SteadyStateSolution<T>, SteadyStateError> {
    let bare = problem.bare_detuning;
    // Candidate detuning pairs in adiabatic-first order.
    let dark = problem.drive == [T::zero(); 2];
    let unshifted = problem.shift_per_photon(0) == T::zero() && problem.shift_per_photon(1) == T::zero();
    let (candidates, folds): (Vec<[T; 2]>, Vec<T>) = if dark || unshifted {
        // No radiation-pressure shift anywhere: the field equations are linear.
        (vec![bare], Vec::new())
    } else if problem.hopping == T::zero() {
        let mut per_cavity: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        let mut folds = Vec::new();
        for j in 0..2 {
            if is_linear(problem, j) {
                per_cavity[j].push(bare[j]);
            } else {
                let (states, f) = curve_states(problem, Reduction::Single(j), opts)?;
                per_cavity[j] = states.iter().map(|d| d[j]).collect();
                folds.extend(f);
            }
        }
        let mut pairs = Vec::new();
        for &d0 in &per_cavity[0] {
            for &d1 in &per_cavity[1] {
                pairs.push([d0, d1]);
            }
        }
        (pairs, folds)
    } else if problem.is_symmetric() {
        curve_states(problem, Reduction::Symmetric, opts)?
    } else {
        curve_states(problem, Reduction::Coupled, opts)?
    };

    let mut states: Vec<SteadyState<T>> = candidates
        .iter()
        .map(|d| problem.state_from_detuning(*d))
        .collect();
    for st in &states {
        if !(st.residual <= opts.tolerance) {
            return Err(SteadyStateError::NoConvergence { steps: opts.max_steps });
        }
    }
    let adiabatic = states[0];

    let total = |s: &SteadyState<T>| s.photon_number(0) + s.photon_number(1);
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| {
        total(&states[a])
            .partial_cmp(&total(&states[b]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let count = states.len();
    for (rank, &i) in order.iter().enumerate() {
        states[i].branch = match (count, rank) {
            (1, _) => Branch::Unique,
            (_, 0) => Branch::Lower,
            (n, r) if r + 1 == n => Branch::Upper,
            _ => Branch::Middle,
        };
    }
    let adiabatic_branch = states[0].branch;
    let branches: Vec<SteadyState<T>> = order.iter().map(|&i| states[i]).collect();

    let state = match opts.branch {
        BranchChoice::Adiabatic => SteadyState {
            branch: adiabatic_branch,
            ..adiabatic
        },
        BranchChoice::Lower => branches[0],
        BranchChoice::Upper => branches[count - 1],
        BranchChoice::Strict => {
            if count > 1 {
                return Err(SteadyStateError::MultistableAmbiguous { branches: count });
            }
            branches[0]
        }
    };
    Ok(SteadyStateSolution {
        state,
        branches,
        folds,
    })
}
