use serde::{Deserialize, Serialize};

use super::Semigroup;
use crate::error::{Error, Result};
use crate::functions::{CompactInterval, GridFunction, PiecewiseFunction};

/// Left translation `T(t) f(x) = f(x + t)` on a uniform grid.
///
/// Times are whole multiples of the spacing, so `T(t)` is an index shift.
/// Translates up to `horizon` are exact on `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationSystem {
    pub origin: f64,
    pub spacing: f64,
    pub count: usize,
    pub horizon: f64,
    pub window: CompactInterval,
    /// Membership threshold: second differences must stay below `blowup / spacing`.
    pub blowup: f64,
}

const DEFAULT_BLOWUP: f64 = 10.0;

impl TranslationSystem {
    pub fn new(origin: f64, spacing: f64, count: usize, horizon: f64, window: CompactInterval) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        if count < 3 {
            return Err(Error::InvalidInput("translation grid needs at least 3 nodes".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        let end = origin + spacing * (count - 1) as f64;
        let slack = 1e-9 * (1.0 + end.abs());
        if window.lo < origin - slack || window.hi > end - horizon + slack {
            return Err(Error::InvalidInput(format!(
                "window [{}, {}] must lie in [{origin}, {}] for horizon {horizon}",
                window.lo,
                window.hi,
                end - horizon
            )));
        }
        Ok(Self { origin, spacing, count, horizon, window, blowup: DEFAULT_BLOWUP })
    }

    /// Grid covering `[lo, hi]` at the given spacing.
    pub fn covering(lo: f64, hi: f64, spacing: f64, horizon: f64, window: CompactInterval) -> Result<Self> {
        let count = ((hi - lo) / spacing).round() as usize + 1;
        Self::new(lo, spacing, count, horizon, window)
    }

    pub fn with_blowup(mut self, blowup: f64) -> Self {
        self.blowup = blowup;
        self
    }

    pub fn end(&self) -> f64 {
        self.origin + self.spacing * (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin + self.spacing * i as f64
    }

    pub fn sample(&self, f: &PiecewiseFunction) -> GridFunction {
        GridFunction::sample(f, self.origin, self.spacing, self.count).expect("system grid is valid")
    }

    pub fn from_fn<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction::from_fn(self.origin, self.spacing, self.count, f).expect("system grid is valid")
    }

    /// Number of grid steps in `t`, or an error if `t` is off the lattice.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        let k = (t / self.spacing).round();
        if (k * self.spacing - t).abs() > 1e-9 * self.spacing.max(t) || k < 0.0 {
            return Err(Error::OffGrid { t, spacing: self.spacing });
        }
        Ok(k as usize)
    }

    fn check_state(&self, x: &GridFunction) -> Result<()> {
        if x.count() != self.count
            || (x.origin - self.origin).abs() > 1e-12 * (1.0 + self.origin.abs())
            || (x.spacing - self.spacing).abs() > 1e-12 * self.spacing
        {
            return Err(Error::InvalidInput("grid function does not live on the system grid".into()));
        }
        Ok(())
    }
}

impl Semigroup for TranslationSystem {
    type State = GridFunction;

    fn apply(&self, t: f64, x: &GridFunction) -> Result<GridFunction> {
        self.check_state(x)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
        }
        if t > self.horizon * (1.0 + 1e-12) {
            return Err(Error::HorizonExceeded { t, horizon: self.horizon });
        }
        let k = self.steps_for(t)?;
        Ok(x.shifted(k as isize))
    }

    /// `int_0^inf e^{-lambda s} f(x + s) ds` by the infinite trapezoid sum at step `spacing`.
    ///
    /// The sum is evaluated exactly through the backward recurrence
    /// `S_i = v_i + q S_{i+1}`, `q = e^{-lambda h}`, with the geometric tail
    /// supplied by the extension rule; there is no truncation error.
    fn resolvent(&self, lambda: f64, x: &GridFunction) -> Result<GridFunction> {
        if !(lambda > 0.0) {
            return Err(Error::ResolventDomain { lambda, growth_bound: 0.0 });
        }
        self.check_state(x)?;
        let h = self.spacing;
        let q = (-lambda * h).exp();
        let n = x.count();
        let v = &x.values;
        let tail = x.at_index(n as isize);
        let mut s = vec![0.0; n];
        // S_{n} over the extension: tail / (1 - q) for a constant continuation
        let mut next = tail / (1.0 - q);
        for i in (0..n).rev() {
            s[i] = v[i] + q * next;
            next = s[i];
        }
        let values = s.iter().zip(v).map(|(si, vi)| h * (si - 0.5 * vi)).collect();
        Ok(GridFunction { values, ..x.clone() })
    }

    fn one_minus_generator(&self, u: &GridFunction) -> GridFunction {
        let h = self.spacing;
        let v = &u.values;
        let n = v.len();
        // central differences inside, second-order one-sided at the two ends
        let derivative = |i: usize| match i {
            _ if n < 3 => (u.at_index(i as isize + 1) - u.at_index(i as isize - 1)) / (2.0 * h),
            0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
            _ if i == n - 1 => (3.0 * v[i] - 4.0 * v[i - 1] + v[i - 2]) / (2.0 * h),
            _ => (v[i + 1] - v[i - 1]) / (2.0 * h),
        };
        let values = (0..n).map(|i| v[i] - derivative(i)).collect();
        GridFunction { values, ..u.clone() }
    }

    fn membership(&self, x: &GridFunction) -> Result<()> {
        let h = self.spacing;
        let threshold = self.blowup / h;
        let v = &x.values;
        let mut worst = (0.0, 0usize);
        for i in 1..v.len().saturating_sub(1) {
            let d = (v[i + 1] - 2.0 * v[i] + v[i - 1]).abs() / (h * h);
            if d > worst.0 {
                worst = (d, i);
            }
        }
        if worst.0 > threshold {
            return Err(Error::NotInX { second_difference: worst.0, threshold, location: x.node(worst.1) });
        }
        Ok(())
    }

    fn norm(&self, x: &GridFunction) -> f64 {
        x.seminorm(self.window)
    }

    fn seminorm(&self, x: &GridFunction, k: CompactInterval) -> f64 {
        x.seminorm(k)
    }

    fn growth_bound(&self) -> f64 {
        0.0
    }

    fn bound_constant(&self) -> f64 {
        1.0
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        self.steps_for(dt).map(|_| ())
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Extension;

    fn system() -> TranslationSystem {
        let window = CompactInterval::new(-2.0, 2.0).unwrap();
        TranslationSystem::covering(-4.0, 4.0, 1e-3, 1.5, window).unwrap()
    }

    #[test]
    fn translation_is_an_index_shift() {
        let sys = system();
        let h = sys.sample(&PiecewiseFunction::tent());
        assert_eq!(sys.apply(0.0, &h).unwrap(), h);
        let moved = sys.apply(0.5, &h).unwrap();
        for i in (0..sys.count).step_by(37) {
            let x = sys.node(i);
            assert!((moved.values[i] - PiecewiseFunction::tent().eval(x + 0.5)).abs() < 1e-12);
        }
        assert!(matches!(sys.apply(2.0, &h), Err(Error::HorizonExceeded { .. })));
        assert!(matches!(sys.apply(0.00015, &h), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn window_must_leave_room_for_the_horizon() {
        let window = CompactInterval::new(-2.0, 3.0).unwrap();
        assert!(TranslationSystem::covering(-4.0, 4.0, 1e-3, 1.5, window).is_err());
    }

    #[test]
    fn resolvent_of_constant_and_tent() {
        let sys = system();
        let one = sys.from_fn(|_| 1.0);
        let r = sys.resolvent(1.0, &one).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-6));
        let h = sys.sample(&PiecewiseFunction::tent());
        let r = sys.resolvent(1.0, &h).unwrap();
        assert!((r.eval(0.0) - (-1f64).exp()).abs() < 1e-6);
        assert!(sys.resolvent(0.0, &h).is_err());
    }

    #[test]
    fn zero_extension_tail() {
        let sys = system();
        let mut one = sys.from_fn(|_| 1.0);
        one.extension = Extension::Zero;
        let r = sys.resolvent(1.0, &one).unwrap();
        let x = sys.end() - 1.0;
        // the cutoff at the grid end costs one cell of trapezoid accuracy
        assert!((r.eval(x) - (1.0 - (-1f64).exp())).abs() < sys.spacing);
    }

    #[test]
    fn membership_flags_jumps_not_kinks() {
        let sys = system();
        let h = sys.sample(&PiecewiseFunction::tent());
        assert!(sys.membership(&h).is_ok());
        let g = sys.sample(&PiecewiseFunction::canonical_g());
        assert!(matches!(sys.membership(&g), Err(Error::NotInX { .. })));
    }
}
