//! Dense polynomials in ascending monomial order: `c[0] + c[1] x + c[2] x^2 + ...`.

/// Horner evaluation.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

/// Antiderivative with zero constant term.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
    out
}

/// Coefficients of `y -> p(a + y)`, computed by repeated synthetic division.
pub fn taylor_shift(c: &[f64], a: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] += a * out[j + 1];
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + b.get(k).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|&v| v * s).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drop trailing zero coefficients, keeping at least one entry.
pub fn trim(c: &[f64]) -> Vec<f64> {
    let mut end = c.len();
    while end > 1 && c[end - 1] == 0.0 {
        end -= 1;
    }
    if end == 0 {
        return vec![0.0];
    }
    c[..end].to_vec()
}

pub fn degree(c: &[f64]) -> usize {
    trim(c).len() - 1
}

/// Definite integral over `[a, b]`.
pub fn integrate(c: &[f64], a: f64, b: f64) -> f64 {
    let big = antiderivative(c);
    eval(&big, b) - eval(&big, a)
}

/// Real roots of `p` inside the open interval `(lo, hi)`.
///
/// Roots of the derivative split the interval into monotone pieces; each
/// piece holds at most one root, located by bisection.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(c);
    if c.len() <= 1 || !(hi > lo) {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if r > lo && r < hi { vec![r] } else { Vec::new() };
    }
    let mut knots = vec![lo];
    knots.extend(roots_in(&derivative(&c), lo, hi));
    knots.push(hi);
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(&c, a), eval(&c, b));
        if fb == 0.0 && b < hi {
            if out.last() != Some(&b) {
                out.push(b);
            }
            continue;
        }
        if fa == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        out.push(bisect(&c, a, b, fa));
    }
    out
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximum of `|p|` on the closed interval `[lo, hi]`.
pub fn max_abs_on(c: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = eval(c, lo).abs().max(eval(c, hi).abs());
    for r in roots_in(&derivative(c), lo, hi) {
        best = best.max(eval(c, r).abs());
    }
    best
}

/// Integral of `|p|` over `[lo, hi]`, split at sign changes.
pub fn integrate_abs(c: &[f64], lo: f64, hi: f64) -> f64 {
    let mut knots = vec![lo];
    knots.extend(roots_in(c, lo, hi));
    knots.push(hi);
    knots
        .windows(2)
        .map(|w| integrate(c, w[0], w[1]).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = [1.0, -3.0, 0.0, 2.0];
        assert_eq!(eval(&p, 2.0), 1.0 - 6.0 + 16.0);
        assert_eq!(derivative(&p), vec![-3.0, 0.0, 6.0]);
        assert_eq!(derivative(&[5.0]), vec![0.0]);
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = [0.5, -1.0, 0.25, 3.0, -0.125];
        let q = taylor_shift(&p, 1.75);
        for &y in &[-2.0, -0.3, 0.0, 0.9, 4.0] {
            assert!((eval(&q, y) - eval(&p, 1.75 + y)).abs() < 1e-10);
        }
    }

    #[test]
    fn roots_of_cubic() {
        // (x - 1)(x + 0.5)(x - 2)
        let p = mul(&mul(&[-1.0, 1.0], &[0.5, 1.0]), &[-2.0, 1.0]);
        let r = roots_in(&p, -3.0, 3.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-0.5, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(roots_in(&p, 2.5, 3.0).is_empty());
    }

    #[test]
    fn integrals() {
        let p = [0.0, 1.0]; // x
        assert!((integrate(&p, -1.0, 1.0)).abs() < 1e-15);
        assert!((integrate_abs(&p, -1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((max_abs_on(&[1.0, 0.0, -1.0], -0.5, 2.0) - 3.0).abs() < 1e-15);
    }
}
