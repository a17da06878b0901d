use serde::{Deserialize, Serialize};

use super::poly;
use super::CompactInterval;
use crate::error::{Error, Result};

/// Which one-sided limit to take at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A jump discontinuity: location with left and right limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

impl Jump {
    pub fn gap(&self) -> f64 {
        self.right - self.left
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawPiecewise {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

/// Bounded piecewise polynomial with pieces on `(-inf, b1], (b1, b2], ..., (bm, inf)`.
///
/// Coefficients are global monomials in `x`. At a breakpoint the value comes
/// from the piece on its left, matching the half-open `(a, b]` convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise")]
pub struct PiecewiseFunction {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<RawPiecewise> for PiecewiseFunction {
    type Error = Error;

    fn try_from(raw: RawPiecewise) -> Result<Self> {
        Self::new(raw.breakpoints, raw.pieces)
    }
}

impl PiecewiseFunction {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || pieces.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite breakpoint or coefficient".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        let pieces: Vec<Vec<f64>> = pieces.iter().map(|p| poly::trim(p)).collect();
        if pieces[0].len() > 1 || pieces[pieces.len() - 1].len() > 1 {
            return Err(Error::InvalidInput("unbounded pieces must be constant".into()));
        }
        Ok(Self { breakpoints, pieces })
    }

    pub fn constant(c: f64) -> Self {
        Self { breakpoints: Vec::new(), pieces: vec![vec![c]] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Tent `max(0, 1 - |x|)`.
    pub fn tent() -> Self {
        Self {
            breakpoints: vec![-1.0, 0.0, 1.0],
            pieces: vec![vec![0.0], vec![1.0, 1.0], vec![1.0, -1.0], vec![0.0]],
        }
    }

    /// `x` on `(-1, 0]`, `2 - x` on `(0, 1]`, zero elsewhere; equals `h - h'` for the tent `h`.
    pub fn canonical_g() -> Self {
        Self {
            breakpoints: vec![-1.0, 0.0, 1.0],
            pieces: vec![vec![0.0], vec![0.0, 1.0], vec![2.0, -1.0], vec![0.0]],
        }
    }

    /// `x - n` on `(n, n + 1]` for `n = lo, ..., hi - 1`, zero outside `(lo, hi]`.
    pub fn sawtooth(lo: i32, hi: i32) -> Result<Self> {
        if hi <= lo {
            return Err(Error::InvalidInput("sawtooth needs lo < hi".into()));
        }
        let breakpoints: Vec<f64> = (lo..=hi).map(f64::from).collect();
        let mut pieces = vec![vec![0.0]];
        pieces.extend((lo..hi).map(|n| vec![-f64::from(n), 1.0]));
        pieces.push(vec![0.0]);
        Self::new(breakpoints, pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    fn index_left(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    fn index_right(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// Interval of piece `i` as `(lo, hi)` with infinite ends for the tails.
    fn piece_interval(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.breakpoints[i - 1] };
        let hi = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        poly::eval(&self.pieces[self.index_left(x)], x)
    }

    pub fn limit(&self, x: f64, side: Side) -> f64 {
        let i = match side {
            Side::Left => self.index_left(x),
            Side::Right => self.index_right(x),
        };
        poly::eval(&self.pieces[i], x)
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        self.limit(x, Side::Left)
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        self.limit(x, Side::Right)
    }

    pub fn one_sided_derivative(&self, x: f64, side: Side) -> f64 {
        let i = match side {
            Side::Left => self.index_left(x),
            Side::Right => self.index_right(x),
        };
        poly::eval(&poly::derivative(&self.pieces[i]), x)
    }

    /// Piecewise derivative (value at a breakpoint is the left derivative).
    pub fn derivative(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| poly::trim(&poly::derivative(p))).collect(),
        }
    }

    /// Exact supremum of `|f|`, including one-sided limits at breakpoints.
    pub fn sup_norm(&self) -> f64 {
        (0..self.pieces.len())
            .map(|i| self.piece_sup(i, f64::NEG_INFINITY, f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Supremum of `|f|` over the part of piece `i` inside `[lo, hi]`.
    fn piece_sup(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.piece_interval(i);
        // points of [lo, hi] that belong to (a, b]
        if !(hi > a && lo <= b) {
            return 0.0;
        }
        let p = &self.pieces[i];
        if p.len() == 1 {
            return p[0].abs();
        }
        let l = lo.max(a);
        let r = hi.min(b);
        poly::max_abs_on(p, l, r)
    }

    /// `sup_{x in K} |f(x)|`.
    pub fn seminorm(&self, k: CompactInterval) -> f64 {
        (0..self.pieces.len())
            .map(|i| self.piece_sup(i, k.lo, k.hi))
            .fold(0.0, f64::max)
    }

    /// Integral over `[a, b]`.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        self.fold_pieces(a, b, poly::integrate)
    }

    /// Integral of `|f|` over `[a, b]`.
    pub fn integral_abs_over(&self, a: f64, b: f64) -> f64 {
        self.fold_pieces(a, b, poly::integrate_abs)
    }

    /// Integral over the real line; infinite unless the tails vanish.
    pub fn integral(&self) -> f64 {
        self.whole_line(poly::integrate)
    }

    pub fn integral_abs(&self) -> f64 {
        self.whole_line(poly::integrate_abs)
    }

    fn whole_line<F: Fn(&[f64], f64, f64) -> f64>(&self, f: F) -> f64 {
        let first = self.pieces[0][0];
        let last = self.pieces[self.pieces.len() - 1][0];
        if first != 0.0 || last != 0.0 {
            return f64::INFINITY;
        }
        match (self.breakpoints.first(), self.breakpoints.last()) {
            (Some(&a), Some(&b)) => self.fold_pieces(a, b, f),
            _ => 0.0,
        }
    }

    fn fold_pieces<F: Fn(&[f64], f64, f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for i in self.index_right(a)..=self.index_left(b) {
            let (lo, hi) = self.piece_interval(i);
            let l = lo.max(a);
            let r = hi.min(b);
            if r > l {
                total += f(&self.pieces[i], l, r);
            }
        }
        total
    }

    /// `(int_lo^hi f, int_lo^hi (hi - z) f(z) dz / (hi - lo))`.
    ///
    /// Each piece is re-expanded around `hi` so short cells far from the
    /// origin keep full relative accuracy.
    pub fn hat_moments(&self, lo: f64, hi: f64) -> (f64, f64) {
        if hi <= lo {
            return (0.0, 0.0);
        }
        let width = hi - lo;
        let mut mass = 0.0;
        let mut first = 0.0;
        for i in self.index_right(lo)..=self.index_left(hi) {
            let (a, b) = self.piece_interval(i);
            let l = a.max(lo);
            let r = b.min(hi);
            if r <= l {
                continue;
            }
            let local = poly::taylor_shift(&self.pieces[i], hi);
            let (yl, yr) = (l - hi, r - hi);
            mass += poly::integrate(&local, yl, yr);
            // (hi - z) = -y
            let weighted: Vec<f64> = std::iter::once(0.0).chain(local.iter().map(|&c| -c)).collect();
            first += poly::integrate(&weighted, yl, yr);
        }
        (mass, first / width)
    }

    /// All breakpoints where the left and right limits differ.
    pub fn jumps(&self) -> Vec<Jump> {
        self.breakpoints
            .iter()
            .map(|&x| Jump { x, left: self.left_limit(x), right: self.right_limit(x) })
            .filter(|j| j.left != j.right)
            .collect()
    }

    fn merged_breakpoints(&self, other: &Self) -> Vec<f64> {
        let mut all: Vec<f64> = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    /// Piece index of `self` covering merged interval `j` of `knots`.
    fn piece_for(&self, knots: &[f64], j: usize) -> usize {
        match knots.get(j) {
            Some(&right_end) => self.index_left(right_end),
            None => self.pieces.len() - 1,
        }
    }

    fn combine<F: Fn(&[f64], &[f64]) -> Vec<f64>>(&self, other: &Self, op: F) -> Self {
        let knots = self.merged_breakpoints(other);
        let pieces = (0..=knots.len())
            .map(|j| {
                let p = &self.pieces[self.piece_for(&knots, j)];
                let q = &other.pieces[other.piece_for(&knots, j)];
                poly::trim(&op(p, q))
            })
            .collect();
        Self { breakpoints: knots, pieces }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, poly::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |p, q| poly::add(p, &poly::scale(q, -1.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, poly::mul)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| poly::trim(&poly::scale(p, s))).collect(),
        }
    }

    /// `x -> f(x + s)`.
    pub fn shift(&self, s: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|b| b - s).collect(),
            pieces: self.pieces.iter().map(|p| poly::taylor_shift(p, s)).collect(),
        }
    }

    /// Bounds of the region where the function can be nonzero, if compact.
    pub fn support_hull(&self) -> Option<CompactInterval> {
        if self.pieces[0][0] != 0.0 || self.pieces[self.pieces.len() - 1][0] != 0.0 {
            return None;
        }
        match (self.breakpoints.first(), self.breakpoints.last()) {
            (Some(&lo), Some(&hi)) => Some(CompactInterval { lo, hi }),
            _ => Some(CompactInterval { lo: 0.0, hi: 0.0 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_g_values() {
        let g = PiecewiseFunction::canonical_g();
        assert_eq!(g.eval(-0.5), -0.5);
        assert_eq!(g.eval(0.5), 1.5);
        assert_eq!(g.eval(2.0), 0.0);
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.eval(-1.0), 0.0);
        assert_eq!(g.eval(1.0), 1.0);
    }

    #[test]
    fn norms() {
        let h = PiecewiseFunction::tent();
        let g = PiecewiseFunction::canonical_g();
        assert_eq!(h.sup_norm(), 1.0);
        assert_eq!(g.sup_norm(), 2.0);
        assert_eq!(PiecewiseFunction::zero().sup_norm(), 0.0);
        assert_eq!(g.seminorm(CompactInterval::new(-2.0, -1.0).unwrap()), 0.0);
        assert_eq!(h.seminorm(CompactInterval::new(-1.0, 1.0).unwrap()), 1.0);
        let c = PiecewiseFunction::constant(-3.5);
        assert_eq!(c.seminorm(CompactInterval::new(10.0, 11.0).unwrap()), 3.5);
    }

    #[test]
    fn one_sided_derivatives_of_tent() {
        let h = PiecewiseFunction::tent();
        assert_eq!(h.one_sided_derivative(0.0, Side::Left), 1.0);
        assert_eq!(h.one_sided_derivative(0.0, Side::Right), -1.0);
        assert_eq!(h.one_sided_derivative(5.0, Side::Left), 0.0);
    }

    #[test]
    fn g_is_h_minus_h_prime() {
        let h = PiecewiseFunction::tent();
        let diff = h.sub(&h.derivative());
        let g = PiecewiseFunction::canonical_g();
        for k in -300..300 {
            let x = k as f64 / 100.0 + 0.003;
            assert_eq!(diff.eval(x), g.eval(x));
        }
    }

    #[test]
    fn canonical_jumps() {
        let jumps = PiecewiseFunction::canonical_g().jumps();
        let gaps: Vec<f64> = jumps.iter().map(Jump::gap).collect();
        assert_eq!(gaps, vec![-1.0, 2.0, -1.0]);
        assert_eq!(jumps[0], Jump { x: -1.0, left: 0.0, right: -1.0 });
    }

    #[test]
    fn sawtooth_has_nine_jumps() {
        let s = PiecewiseFunction::sawtooth(-5, 4).unwrap();
        let jumps = s.jumps();
        assert_eq!(jumps.len(), 9);
        assert!(jumps.iter().all(|j| j.gap() == -1.0));
        assert_eq!(s.sup_norm(), 1.0);
    }

    #[test]
    fn integrals_and_moments() {
        let h = PiecewiseFunction::tent();
        assert_eq!(h.integral(), 1.0);
        let g = PiecewiseFunction::canonical_g();
        assert!((g.integral() - 1.0).abs() < 1e-15);
        assert!((g.integral_abs() - 2.0).abs() < 1e-15);
        assert_eq!(PiecewiseFunction::constant(1.0).integral(), f64::INFINITY);
        let (m, f) = h.hat_moments(-1.0, 1.0);
        assert!((m - 1.0).abs() < 1e-15);
        assert!((f - 0.5).abs() < 1e-15);
        let (m, f) = g.hat_moments(-0.25, 0.25);
        let want_m = (0.0 - 0.03125) + (0.5 - 0.03125);
        assert!((m - want_m).abs() < 1e-15);
        assert!(f > 0.0 && f < m);
    }

    #[test]
    fn shift_moves_breakpoints() {
        let h = PiecewiseFunction::tent().shift(0.5);
        assert_eq!(h.eval(-0.5), 1.0);
        assert_eq!(h.breakpoints(), &[-1.5, -0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PiecewiseFunction::new(vec![1.0, 0.0], vec![vec![0.0]; 3]).is_err());
        assert!(PiecewiseFunction::new(vec![0.0], vec![vec![0.0, 1.0], vec![0.0]]).is_err());
        assert!(PiecewiseFunction::new(vec![0.0], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = PiecewiseFunction::canonical_g();
        let s = serde_json::to_string(&g).unwrap();
        let back: PiecewiseFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"breakpoints":[0.0],"pieces":[[0.0,1.0],[0.0]]}"#;
        assert!(serde_json::from_str::<PiecewiseFunction>(bad).is_err());
    }
}
