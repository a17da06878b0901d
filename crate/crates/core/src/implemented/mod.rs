//! Left-implemented semigroups `U(t) S = T(t) S` on the algebra of `n x n` matrices.
//!
//! In finite dimension the extrapolation space coincides with the state space
//! and every Favard space is the whole space, so the statements that survive
//! are the norm identity `||M_B|| = ||B||`, the linear comparison bound and the
//! correspondence between perturbations of `T` and multiplicative
//! perturbations of `U`. Superoperators act on column-major `vec(S)`, where
//! `vec(B S) = (I (x) B) vec(S)`; their norms are induced by the Frobenius
//! norm, which gives the spectral norm for left multiplications.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{neumann_semigroup, MatrixCoupling, TimeGrid};
use crate::semigroup::{op_norm, MatrixSystem, Semigroup};

/// Linear map on `n x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum SuperOperator {
    /// `C -> B C`.
    LeftMul(DMatrix<f64>),
    /// `n^2 x n^2` matrix acting on `vec(C)`.
    General(DMatrix<f64>),
}

pub fn vec_of(c: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(c.len(), 1, c.as_slice())
}

pub fn unvec(v: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// `E_ij`.
fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i, j)] = 1.0;
    e
}

impl SuperOperator {
    pub fn general(m: DMatrix<f64>) -> Result<Self> {
        let n = (m.nrows() as f64).sqrt().round() as usize;
        if !m.is_square() || n * n != m.nrows() {
            return Err(Error::InvalidInput(format!("superoperator must be n^2 x n^2, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Self::General(m))
    }

    /// `C -> tr(F^T C) G`.
    pub fn rank_one(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Self {
        Self::General(vec_of(g) * vec_of(f).transpose())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::LeftMul(b) => b.nrows(),
            Self::General(m) => (m.nrows() as f64).sqrt().round() as usize,
        }
    }

    pub fn apply(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Self::LeftMul(b) => b * c,
            Self::General(m) => unvec(&(m * vec_of(c)), self.dim()),
        }
    }

    /// The `n^2 x n^2` representation.
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Self::LeftMul(b) => DMatrix::identity(b.nrows(), b.nrows()).kronecker(b),
            Self::General(m) => m.clone(),
        }
    }

    /// Norm induced by the Frobenius norm on matrices.
    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix())
    }

    /// `max_ij ||K(E_ij) - K(I) E_ij||`, zero iff `K(C D) = K(C) D` for all `C, D`.
    pub fn homomorphism_residual(&self) -> f64 {
        let n = self.dim();
        let k_id = self.apply(&DMatrix::identity(n, n));
        (0..n * n)
            .map(|p| {
                let e = unit(n, p % n, p / n);
                (self.apply(&e) - &k_id * &e).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `U(t) S = exp(tA) S`.
#[derive(Debug, Clone)]
pub struct ImplementedSemigroup {
    sys: MatrixSystem,
}

pub fn implement_left(sys: &MatrixSystem) -> ImplementedSemigroup {
    ImplementedSemigroup { sys: sys.clone() }
}

impl ImplementedSemigroup {
    pub fn base(&self) -> &MatrixSystem {
        &self.sys
    }

    pub fn apply(&self, t: f64, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.sys.apply(t, s)
    }

    /// `U(t)` as a superoperator.
    pub fn at(&self, t: f64) -> SuperOperator {
        SuperOperator::LeftMul(self.sys.propagator(t))
    }

    /// Strong-operator seminorm `||U(t) S x||`.
    pub fn seminorm(&self, t: f64, s: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
        Ok((self.apply(t, s)? * x).norm())
    }

    /// The same semigroup on `vec(S)`, generated by `I (x) A`.
    pub fn vectorized(&self) -> Result<MatrixSystem> {
        let n = self.sys.dim();
        MatrixSystem::new(DMatrix::identity(n, n).kronecker(self.sys.generator()))
    }

    /// `R(lambda, A_impl)` as a left multiplication.
    pub fn resolvent(&self, lambda: f64) -> Result<SuperOperator> {
        Ok(SuperOperator::LeftMul(self.sys.resolvent_matrix(lambda)?))
    }
}

/// `K S = B S`.
pub fn lift_perturbation(b: &DMatrix<f64>) -> SuperOperator {
    SuperOperator::LeftMul(b.clone())
}

/// `B = K(Id)`, provided `K` is a right module homomorphism.
pub fn extract_perturbation(k: &SuperOperator) -> Result<DMatrix<f64>> {
    let n = k.dim();
    let residual = k.homomorphism_residual();
    if residual > 1e-10 * (1.0 + k.norm()) {
        return Err(Error::NonMultiplicative { residual });
    }
    Ok(match k {
        SuperOperator::LeftMul(b) => b.clone(),
        SuperOperator::General(_) => k.apply(&DMatrix::identity(n, n)),
    })
}

/// The perturbed implemented semigroup `V`, computed by the Neumann engine on `vec(S)`.
#[derive(Debug, Clone)]
pub struct PerturbedImplemented {
    coupling: MatrixCoupling,
    n: usize,
    tol: f64,
}

impl PerturbedImplemented {
    pub fn new(u: &ImplementedSemigroup, k: &SuperOperator, grid: TimeGrid, tol: f64) -> Result<Self> {
        let n = u.sys.dim();
        if k.dim() != n {
            return Err(Error::InvalidInput(format!("superoperator acts on {}x{} matrices, semigroup on {n}x{n}", k.dim(), k.dim())));
        }
        let coupling = MatrixCoupling::new(u.vectorized()?, k.matrix(), grid)?;
        Ok(Self { coupling, n, tol })
    }

    pub fn coupling(&self) -> &MatrixCoupling {
        &self.coupling
    }

    /// `V(t) S`.
    pub fn apply(&self, t: f64, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let v = neumann_semigroup(&self.coupling, t, &vec_of(s), self.tol)?;
        Ok(unvec(&v, self.n))
    }

    /// `V(t) Id`, the perturbed semigroup on the base space.
    pub fn base_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.apply(t, &DMatrix::identity(self.n, self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoresolventReport {
    /// `||R(lambda) - R(mu) - (mu - lambda) R(lambda) R(mu)||`.
    pub residual: f64,
    /// Smallest singular value of `R(lambda)`.
    pub min_singular: f64,
    #[serde(skip)]
    pub r_lambda: DMatrix<f64>,
    #[serde(skip)]
    pub r_mu: DMatrix<f64>,
}

/// `R(lambda) = R(lambda, A)(Id)` from a superoperator resolvent, with the resolvent identity residual.
pub fn pseudoresolvent_extract<F>(resolvent: F, lambda: f64, mu: f64) -> Result<PseudoresolventReport>
where
    F: Fn(f64) -> Result<SuperOperator>,
{
    let rl_op = resolvent(lambda)?;
    let n = rl_op.dim();
    let id = DMatrix::identity(n, n);
    let r_lambda = rl_op.apply(&id);
    let r_mu = resolvent(mu)?.apply(&id);
    let residual = (&r_lambda - &r_mu - (&r_lambda * &r_mu) * (mu - lambda)).norm();
    let min_singular = r_lambda.singular_values().min();
    Ok(PseudoresolventReport { residual, min_singular, r_lambda, r_mu })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HilleYosidaReport {
    pub worst_ratio: f64,
    pub worst_lambda: f64,
    pub worst_power: u32,
    pub pass: bool,
}

/// `max ||R(lambda, A)^n|| (lambda - omega)^n / M` over samples and `n <= n_max`.
pub fn hille_yosida_check(
    a: &DMatrix<f64>,
    omega: f64,
    m_const: f64,
    lambda_samples: &[f64],
    n_max: u32,
) -> Result<HilleYosidaReport> {
    if let Some(&l) = lambda_samples.iter().find(|&&l| !(l > omega)) {
        return Err(Error::ResolventDomain { lambda: l, growth_bound: omega });
    }
    let n = a.nrows();
    let mut worst = (0.0, f64::NAN, 0);
    for &lambda in lambda_samples {
        let r = (DMatrix::identity(n, n) * lambda - a)
            .try_inverse()
            .ok_or(Error::ResolventDomain { lambda, growth_bound: omega })?;
        let mut power = DMatrix::identity(n, n);
        for k in 1..=n_max {
            power = &power * &r;
            let ratio = op_norm(&power) * (lambda - omega).powi(k as i32) / m_const;
            if ratio > worst.0 {
                worst = (ratio, lambda, k);
            }
        }
    }
    Ok(HilleYosidaReport { worst_ratio: worst.0, worst_lambda: worst.1, worst_power: worst.2, pass: worst.0 <= 1.0 + 1e-8 })
}

/// `(||U(t) - V(t)||, ||T(t) - S(t)||)` per sample, the first through the superoperator representation.
pub fn comparison_equivalence<F>(sys: &MatrixSystem, s_pert: F, t_samples: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<DMatrix<f64>> + Sync,
{
    let n = sys.dim();
    t_samples
        .par_iter()
        .map(|&t| {
            let tt = sys.propagator(t);
            let st = s_pert(t)?;
            let id = DMatrix::identity(n, n);
            let lhs = SuperOperator::General(id.kronecker(&tt) - id.kronecker(&st)).norm();
            Ok((lhs, op_norm(&(tt - st))))
        })
        .collect()
}

/// `||(n/t R(n/t, A))^n C - U(t) C||` for each `n`.
pub fn euler_check(u: &ImplementedSemigroup, t: f64, c: &DMatrix<f64>, n_samples: &[u32]) -> Result<Vec<(u32, f64)>> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("Euler check needs t > 0, got {t}")));
    }
    let exact = u.apply(t, c)?;
    n_samples
        .iter()
        .map(|&n| {
            let lambda = n as f64 / t;
            let mut y = c.clone();
            for _ in 0..n {
                y = u.sys.resolvent(lambda, &(y * lambda))?;
            }
            Ok((n, (y - &exact).norm()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::expm;
    use nalgebra::dmatrix;

    #[test]
    fn left_multiplication_norm_is_matrix_norm() {
        let b = dmatrix![1.0, 2.0; -0.5, 3.0];
        assert!((lift_perturbation(&b).norm() - op_norm(&b)).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_rejection() {
        let b = dmatrix![0.1, -0.2; 0.3, 0.05];
        let k = lift_perturbation(&b);
        assert_eq!(extract_perturbation(&k).unwrap(), b);
        let general = SuperOperator::general(k.matrix()).unwrap();
        assert_eq!(extract_perturbation(&general).unwrap(), b);
        assert_eq!(extract_perturbation(&SuperOperator::General(DMatrix::zeros(4, 4))).unwrap(), DMatrix::zeros(2, 2));
        let phi = SuperOperator::rank_one(&dmatrix![1.0, 0.0; 0.0, 0.0], &dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert!(matches!(extract_perturbation(&phi), Err(Error::NonMultiplicative { .. })));
    }

    #[test]
    fn implemented_semigroup_basics() {
        let sys = MatrixSystem::new(dmatrix![-1.0, 0.5; 0.0, -2.0]).unwrap();
        let u = implement_left(&sys);
        let s = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(u.apply(0.0, &s).unwrap(), s);
        assert_eq!(u.apply(0.7, &DMatrix::identity(2, 2)).unwrap(), sys.propagator(0.7));
        let lhs = u.apply(0.3, &u.apply(0.4, &s).unwrap()).unwrap();
        assert!((lhs - u.apply(0.7, &s).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn perturbed_implemented_matches_exponential() {
        let a = dmatrix![-1.0, 0.3, 0.0; 0.0, -0.5, 0.2; 0.1, 0.0, -0.8];
        let b = dmatrix![0.05, 0.0, -0.1; 0.1, 0.02, 0.0; 0.0, -0.05, 0.1];
        let u = implement_left(&MatrixSystem::new(a.clone()).unwrap());
        let v = PerturbedImplemented::new(&u, &lift_perturbation(&b), TimeGrid::new(0.25, 250).unwrap(), 1e-12).unwrap();
        let s = dmatrix![1.0, 0.0, 2.0; 0.0, -1.0, 0.5; 0.3, 0.3, 0.3];
        let want = expm(&((&a + &b) * 1.0)) * &s;
        assert!((v.apply(1.0, &s).unwrap() - want).norm() < 1e-6);
    }

    #[test]
    fn pseudoresolvent_of_scalar() {
        let u = implement_left(&MatrixSystem::new(dmatrix![-1.0]).unwrap());
        let rep = pseudoresolvent_extract(|l| u.resolvent(l), 2.0, 5.0).unwrap();
        assert!((rep.r_lambda[0] - 1.0 / 3.0).abs() < 1e-16);
        assert!(rep.residual < 1e-16);
        assert_eq!(pseudoresolvent_extract(|l| u.resolvent(l), 2.0, 2.0).unwrap().residual, 0.0);
    }

    #[test]
    fn hille_yosida_scalar_and_violation() {
        let a = dmatrix![-1.0];
        let rep = hille_yosida_check(&a, -1.0, 1.0, &[0.0, 1.0, 10.0], 8).unwrap();
        assert!((rep.worst_ratio - 1.0).abs() < 1e-12 && rep.pass);
        let bad = hille_yosida_check(&dmatrix![0.5, 0.0; 0.0, -1.0], 0.0, 1.0, &[1.0, 2.0], 4).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn euler_scalar_bound() {
        let u = implement_left(&MatrixSystem::new(dmatrix![-1.0]).unwrap());
        let t = 1.0;
        let res = euler_check(&u, t, &dmatrix![1.0], &[1, 2, 4, 8, 16, 32]).unwrap();
        for w in res.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        for (n, r) in res {
            assert!(r <= 2.0 * t * t / n as f64, "{n}: {r}");
        }
        let zero = implement_left(&MatrixSystem::new(dmatrix![0.0, 0.0; 0.0, 0.0]).unwrap());
        let res = euler_check(&zero, 0.5, &dmatrix![1.0, 2.0; 3.0, 4.0], &[1, 5]).unwrap();
        assert!(res.iter().all(|&(_, r)| r == 0.0));
    }
}
