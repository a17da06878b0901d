use nalgebra::DMatrix;

use super::Semigroup;
use crate::error::{Error, Result};
use crate::functions::CompactInterval;

/// `exp(A)` by scaling and squaring with a degree-13 Padé approximant (nalgebra's `exp`).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().exp()
}

/// Spectral norm; the Euclidean norm for a single column.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 1 || m.nrows() == 1 {
        return m.norm();
    }
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Logarithmic norm `lambda_max((A + A^T) / 2)`; gives `||e^{tA}|| <= e^{t mu(A)}`.
pub fn log_norm(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

/// `T(t) = exp(tA)` on `R^n`, acting on `n x k` blocks of column vectors.
#[derive(Debug, Clone)]
pub struct MatrixSystem {
    a: DMatrix<f64>,
    omega: f64,
    m_const: f64,
}

impl MatrixSystem {
    /// Growth bound from the logarithmic norm with `M = 1`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        Self::check_generator(&a)?;
        let omega = log_norm(&a);
        Ok(Self { a, omega, m_const: 1.0 })
    }

    /// User-supplied `(omega, M)`, verified on sampled times in `[0, 10]`.
    pub fn with_bounds(a: DMatrix<f64>, omega: f64, m_const: f64) -> Result<Self> {
        Self::check_generator(&a)?;
        if !(m_const >= 1.0) || !omega.is_finite() {
            return Err(Error::InvalidInput(format!("need M >= 1 and finite omega, got M = {m_const}, omega = {omega}")));
        }
        let sys = Self { a, omega, m_const };
        for k in 0..=200 {
            let t = 0.05 * k as f64;
            let lhs = op_norm(&sys.propagator(t));
            let rhs = m_const * (omega * t).exp();
            if lhs > rhs * (1.0 + 1e-10) {
                return Err(Error::InvalidInput(format!(
                    "||exp(tA)|| = {lhs} exceeds M e^(omega t) = {rhs} at t = {t}"
                )));
            }
        }
        Ok(sys)
    }

    fn check_generator(a: &DMatrix<f64>) -> Result<()> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidInput(format!("generator must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("generator entries must be finite".into()));
        }
        Ok(())
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        expm(&(&self.a * t))
    }

    /// `(lambda - A)^{-1}` as a matrix.
    pub fn resolvent_matrix(&self, lambda: f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let shifted = DMatrix::identity(n, n) * lambda - &self.a;
        shifted
            .try_inverse()
            .ok_or(Error::ResolventDomain { lambda, growth_bound: self.omega })
    }

    fn check_state(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.dim() {
            return Err(Error::InvalidInput(format!("state has {} rows, system dimension is {}", x.nrows(), self.dim())));
        }
        Ok(())
    }
}

impl Semigroup for MatrixSystem {
    type State = DMatrix<f64>;

    fn apply(&self, t: f64, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
        }
        self.check_state(x)?;
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(self.propagator(t) * x)
    }

    fn resolvent(&self, lambda: f64, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !(lambda > self.omega) {
            return Err(Error::ResolventDomain { lambda, growth_bound: self.omega });
        }
        self.check_state(x)?;
        let n = self.dim();
        let shifted = DMatrix::identity(n, n) * lambda - &self.a;
        shifted
            .lu()
            .solve(x)
            .ok_or(Error::ResolventDomain { lambda, growth_bound: self.omega })
    }

    fn one_minus_generator(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        u - &self.a * u
    }

    fn membership(&self, _x: &DMatrix<f64>) -> Result<()> {
        Ok(())
    }

    fn norm(&self, x: &DMatrix<f64>) -> f64 {
        op_norm(x)
    }

    fn seminorm(&self, x: &DMatrix<f64>, _k: CompactInterval) -> f64 {
        op_norm(x)
    }

    fn growth_bound(&self) -> f64 {
        self.omega
    }

    fn bound_constant(&self) -> f64 {
        self.m_const
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        Ok(())
    }
}
