//! Special functions and root finders shared by the policy solvers.
//!
//! Everything here is pure and reentrant: no globals, no interior mutability,
//! safe to call from any number of threads.

use thiserror::Error;

/// `-1/e`, the branch point of the Lambert W function.
pub const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

/// Absolute slack around the Lambert W branch point: inputs within this
/// distance of `-1/e` are treated as the branch point itself.
const BRANCH_SLACK: f64 = 1e-12;

const MAX_HALLEY_ITER: usize = 200;

/// Errors from the shared numeric kernels.
#[derive(Debug, Error)]
pub enum NumericsError {
    /// The argument lies below the domain of the principal Lambert branch.
    #[error("lambert_w0: argument {0} is below -1/e")]
    LambertDomain(f64),
    /// The supplied interval does not bracket a root in the stated direction.
    #[error("no sign change over [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    /// The iteration budget was exhausted before the tolerance was met.
    #[error("root finder did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// A bracketing interval plus the termination parameters of a root search.
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute width tolerance.
    pub tol_abs: f64,
    /// Relative width tolerance (scaled by the current midpoint).
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl RootBracket {
    /// Bracket with the default tolerances (1e-12 absolute, 1e-10 relative,
    /// 200 iterations). Panics if `lo >= hi`.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "bracket requires lo < hi, got [{lo}, {hi}]");
        RootBracket {
            lo,
            hi,
            tol_abs: 1e-12,
            tol_rel: 1e-10,
            max_iter: 200,
        }
    }

    /// Same bracket with custom width tolerances.
    pub fn with_tolerances(mut self, tol_abs: f64, tol_rel: f64) -> Self {
        assert!(tol_abs > 0.0 && tol_rel > 0.0);
        self.tol_abs = tol_abs;
        self.tol_rel = tol_rel;
        self
    }
}

/// Which way `f` moves through zero over the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Principal branch of the Lambert W function: the solution `w >= -1` of
/// `w * exp(w) = x`, defined for `x >= -1/e`.
///
/// Halley iteration seeded by a piecewise initial guess: a branch-point
/// series in `sqrt(2(e*x + 1))` near `-1/e`, `ln(1 + x)` for moderate
/// arguments and `ln x - ln ln x` for large ones. The result satisfies
/// `|w e^w - x| <= 1e-12 * max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64, NumericsError> {
    if x.is_nan() || x < NEG_INV_E - BRANCH_SLACK {
        return Err(NumericsError::LambertDomain(x));
    }
    if x <= NEG_INV_E + BRANCH_SLACK {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let e = std::f64::consts::E;
    let mut w = if x < -0.25 {
        // series around the branch point in p = sqrt(2(ex + 1))
        let p = (2.0 * (e * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p - 43.0 / 540.0 * p * p * p * p
    } else if x < e {
        (1.0 + x).ln()
    } else {
        let l = x.ln();
        let ll = l.ln();
        l - ll + ll / l
    };

    let tol = 1e-13 * x.abs().max(1.0);
    for _ in 0..MAX_HALLEY_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if w < -1.0 {
            w = -1.0;
        }
        if step.abs() <= f64::EPSILON * w.abs().max(1.0) {
            break;
        }
    }

    // Halley stalled (it can right at the branch point); fall back to
    // bisection on w*e^w, which is increasing for w >= -1.
    let hi = if x > e { x.ln() + 1.0 } else { 2.0 };
    let bracket = RootBracket::new(-1.0, hi).with_tolerances(1e-15, 1e-15);
    let w = bisect_monotone(|w| w * w.exp() - x, &bracket, Direction::Increasing)?;
    if (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0) {
        Ok(w)
    } else {
        Err(NumericsError::NoConvergence(MAX_HALLEY_ITER))
    }
}

/// Bisection on a monotone function. `f(lo)` and `f(hi)` must straddle zero
/// in the stated direction; returns a point where `f` vanishes to within the
/// bracket tolerances.
pub fn bisect_monotone<F: Fn(f64) -> f64>(
    f: F,
    bracket: &RootBracket,
    direction: Direction,
) -> Result<f64, NumericsError> {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let ok = match direction {
        Direction::Increasing => flo < 0.0 && fhi > 0.0,
        Direction::Decreasing => flo > 0.0 && fhi < 0.0,
    };
    if !ok {
        return Err(NumericsError::NoBracket { lo, hi });
    }

    for _ in 0..bracket.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= bracket.tol_abs + bracket.tol_rel * mid.abs() {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        let below = match direction {
            Direction::Increasing => fm < 0.0,
            Direction::Decreasing => fm > 0.0,
        };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(NumericsError::NoConvergence(bracket.max_iter))
}

/// Grow an upper bracket end by doubling from `lo + 1` until `f` changes
/// sign, stopping at an overflow guard of `1e30`. Failure means `f` has no
/// root in the reachable range, which callers interpret as infeasibility.
pub fn expand_upper_bracket<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
) -> Result<RootBracket, NumericsError> {
    let flo = f(lo);
    let mut hi = lo + 1.0;
    while hi <= 1e30 {
        let fhi = f(hi);
        if fhi == 0.0 || (flo < 0.0) != (fhi < 0.0) {
            return Ok(RootBracket::new(lo, hi));
        }
        hi *= 2.0;
    }
    Err(NumericsError::NoBracket { lo, hi: 1e30 })
}

/// Compensated (Kahan) accumulator, used to keep million-term sums stable.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Kahan-compensated sum of an iterator of values.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_w0_exact_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((lambert_w0(e).unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(lambert_w0(NEG_INV_E).unwrap(), -1.0);
        // frozen fixed point of w <- (w + x e^{-w}) / (1 + w) from w = 0.5
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-12);
    }

    #[test]
    fn lambert_w0_domain_error() {
        assert!(lambert_w0(NEG_INV_E - 1e-9).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_w0_identity_residual_on_log_grid() {
        // 1000 log-spaced offsets from the branch point up to 1e6.
        let span: f64 = 1e6 - NEG_INV_E;
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            let x = NEG_INV_E + 1e-10 * (span / 1e-10).powf(t);
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            let resid = (w * w.exp() - x).abs();
            assert!(
                resid <= 1e-12 * x.abs().max(1.0),
                "residual {resid:e} too large at x = {x:e}"
            );
        }
    }

    #[test]
    fn lambert_w0_monotone() {
        let span: f64 = 1e6 - NEG_INV_E;
        let mut prev = -1.0;
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            let x = NEG_INV_E + 1e-10 * (span / 1e-10).powf(t);
            let w = lambert_w0(x).unwrap();
            assert!(w >= prev, "non-monotone at x = {x}");
            prev = w;
        }
    }

    #[test]
    fn bisect_linear_and_cubic() {
        let b = RootBracket::new(0.0, 10.0);
        let r = bisect_monotone(|x| x - 2.0, &b, Direction::Increasing).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
        let r = bisect_monotone(|x| x * x * x - 8.0, &b, Direction::Increasing).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        let b = RootBracket::new(0.0, 1.0);
        assert!(matches!(
            bisect_monotone(|x| x + 5.0, &b, Direction::Increasing),
            Err(NumericsError::NoBracket { .. })
        ));
    }

    #[test]
    fn bisect_residual_not_worse_than_endpoints() {
        let b = RootBracket::new(0.0, 10.0);
        let f = |x: f64| x.exp() - 7.0;
        let r = bisect_monotone(f, &b, Direction::Increasing).unwrap();
        assert!(f(r).abs() <= f(b.lo).abs().min(f(b.hi).abs()));
    }

    #[test]
    fn expand_finds_bracket() {
        let b = expand_upper_bracket(|x| x - 5.0, 0.0).unwrap();
        assert!(b.lo <= 5.0 && 5.0 <= b.hi);
    }

    #[test]
    fn expand_signals_no_root() {
        // strictly decreasing with no root past lo
        assert!(expand_upper_bracket(|x| -1.0 - x.max(0.0), 0.0).is_err());
    }

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        let xs: Vec<f64> = std::iter::repeat(0.1).take(1_000_000).collect();
        let k = kahan_sum(xs.iter().copied());
        assert!((k - 100_000.0).abs() < 1e-9);
    }
}
