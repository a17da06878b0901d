//! The unperturbed systems and arithmetic in the extrapolation space.
//!
//! Elements of `X_{-1}` are stored in regularized coordinates `u = R(1, A_{-1}) F`,
//! so every extrapolated operation is an ordinary operation on `u`:
//! lifting `x` gives `u = R(1, A) x`, the image `A_{-1} x` has `u = R(1, A) x - x`,
//! `T_{-1}(t)` acts as `T(t)` on `u`, and `F = (1 - A) u` whenever that lands in `X`.

mod matrix;
mod translation;

use nalgebra::DMatrix;

pub use matrix::{expm, log_norm, op_norm, spectral_abscissa, MatrixSystem};
pub use translation::TranslationSystem;

use crate::error::Result;
use crate::functions::{CompactInterval, GridFunction};

/// Vector-space operations the perturbation engine needs on states.
pub trait LinearSpace: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn scaled(&self, a: f64) -> Self;
    /// Norm of the whole element (sup norm, or spectral norm for matrices).
    fn full_norm(&self) -> f64;
}

impl LinearSpace for GridFunction {
    fn zero_like(&self) -> Self {
        self.zeros_like()
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.values.len(), x.values.len());
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect(), ..self.clone() }
    }

    fn full_norm(&self) -> f64 {
        self.sup_norm()
    }
}

impl LinearSpace for DMatrix<f64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }

    fn scaled(&self, a: f64) -> Self {
        self * a
    }

    fn full_norm(&self) -> f64 {
        op_norm(self)
    }
}

/// A semigroup `(T(t))` together with its resolvent and generator action.
pub trait Semigroup: Send + Sync {
    type State: LinearSpace;

    /// `T(t) x`.
    fn apply(&self, t: f64, x: &Self::State) -> Result<Self::State>;

    /// `R(lambda, A) x` for `lambda` above the growth bound.
    fn resolvent(&self, lambda: f64, x: &Self::State) -> Result<Self::State>;

    /// `(1 - A) u` without any membership test.
    fn one_minus_generator(&self, u: &Self::State) -> Self::State;

    /// Decide whether a computed element genuinely lies in the state space.
    fn membership(&self, x: &Self::State) -> Result<()>;

    /// Norm used for comparisons (restricted to the interior window for grids).
    fn norm(&self, x: &Self::State) -> f64;

    fn seminorm(&self, x: &Self::State, k: CompactInterval) -> f64;

    fn growth_bound(&self) -> f64;

    /// `M` in `||T(t)|| <= M e^{omega t}`.
    fn bound_constant(&self) -> f64;

    /// Reject time steps the system cannot represent exactly.
    fn check_step(&self, dt: f64) -> Result<()>;

    /// Largest time for which results are exact on the comparison window.
    fn horizon(&self) -> f64 {
        f64::INFINITY
    }
}

/// Element of `X_{-1}` held through its regularized coordinate `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatedElement<S> {
    pub regularized: S,
}

impl<S: LinearSpace> ExtrapolatedElement<S> {
    pub fn zero_like(x: &S) -> Self {
        Self { regularized: x.zero_like() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut u = self.regularized.clone();
        u.axpy(1.0, &other.regularized);
        Self { regularized: u }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { regularized: self.regularized.scaled(a) }
    }

    /// `||F||_{-1} = ||u||`.
    pub fn norm_minus1(&self) -> f64 {
        self.regularized.full_norm()
    }
}

/// `x` viewed as an element of `X_{-1}`.
pub fn lift<Y: Semigroup>(sys: &Y, x: &Y::State) -> Result<ExtrapolatedElement<Y::State>> {
    Ok(ExtrapolatedElement { regularized: sys.resolvent(1.0, x)? })
}

/// `A_{-1} x`, via `A R(1, A) = R(1, A) - 1`; no differentiation involved.
pub fn embed_aminus1<Y: Semigroup>(sys: &Y, x: &Y::State) -> Result<ExtrapolatedElement<Y::State>> {
    let mut u = sys.resolvent(1.0, x)?;
    u.axpy(-1.0, x);
    Ok(ExtrapolatedElement { regularized: u })
}

/// `T_{-1}(t) F`.
pub fn apply_tminus1<Y: Semigroup>(
    sys: &Y,
    t: f64,
    f: &ExtrapolatedElement<Y::State>,
) -> Result<ExtrapolatedElement<Y::State>> {
    Ok(ExtrapolatedElement { regularized: sys.apply(t, &f.regularized)? })
}

/// `(1 - A) u` with no membership test.
pub fn reconstruct_raw<Y: Semigroup>(sys: &Y, f: &ExtrapolatedElement<Y::State>) -> Y::State {
    sys.one_minus_generator(&f.regularized)
}

/// Return `F` as a state-space element, or `Error::NotInX` when it is not one.
pub fn reconstruct<Y: Semigroup>(sys: &Y, f: &ExtrapolatedElement<Y::State>) -> Result<Y::State> {
    let x = reconstruct_raw(sys, f);
    sys.membership(&x)?;
    Ok(x)
}

/// `p_{-1}(F) = p(u)`.
pub fn seminorm_minus1<Y: Semigroup>(sys: &Y, f: &ExtrapolatedElement<Y::State>, k: CompactInterval) -> f64 {
    sys.seminorm(&f.regularized, k)
}
