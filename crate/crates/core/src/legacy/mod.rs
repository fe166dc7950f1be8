//! Product-form bivariate trees built on decorrelated unit-variance
//! transforms, kept for head-to-head comparison.
//!
//! Both constructions place a recombining binomial grid on each of two
//! uncorrelated coordinates, pick successors with the closed-form multiple
//! jump `d = index + int((μ h / δ + 1) / 2)`, and multiply the two marginal
//! probabilities. Their drifts blow up as the transformed rate approaches
//! zero, which is where they break down for large rate volatility.

mod hst;
mod wei;

pub use hst::HstTree;
pub use wei::{wei_drifts, WeiDrifts, WeiTree};

use crate::lattice::clamp_unit;

/// `int((x + 1) / 2)` with `int` truncating toward zero, where `x` is the
/// drift over one step measured in grid spacings (`μ h / δ`).
pub fn jump_shift(x: f64) -> i64 {
    ((x + 1.0) / 2.0).trunc() as i64
}

/// The shift for a unit-variance coordinate: `int((μ √h + 1) / 2)`.
pub fn wei_jump_shift(mu: f64, h: f64) -> i64 {
    jump_shift(mu * h.sqrt())
}

/// One marginal move on a grid `x_{i,m} = x0 + (2m − i)·delta`.
///
/// Returns `(down, up, p_up, clamped)` with `down` clipped to `0..=i` so both
/// successors stay on row `i + 1`.
pub(crate) fn marginal_move(
    i: usize,
    index: usize,
    drift: f64,
    h: f64,
    delta: f64,
) -> (usize, usize, f64, bool) {
    let shift = jump_shift(drift * h / delta);
    let down = (index as i64).saturating_add(shift).clamp(0, i as i64) as usize;
    // x_{i+1,down} − x_{i,index} = (2(down − index) − 1)·delta
    let gap = (2.0 * (down as f64 - index as f64) - 1.0) * delta;
    let (p, clamped) = clamp_unit((drift * h - gap) / (2.0 * delta));
    (down, down + 1, p, clamped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_truncates_toward_zero() {
        assert_eq!(jump_shift(0.0), 0);
        assert_eq!(jump_shift(0.99), 0);
        assert_eq!(jump_shift(-0.99), 0);
        assert_eq!(jump_shift(3.2), 2);
        assert_eq!(jump_shift(-3.2), -1);
        assert_eq!(jump_shift(-5.2), -2);
        assert_eq!(jump_shift(f64::INFINITY), i64::MAX);
        assert_eq!(jump_shift(f64::NAN), 0);
    }

    #[test]
    fn wei_shift_examples() {
        let h: f64 = 0.04;
        assert_eq!(wei_jump_shift(0.5 / h.sqrt(), h), 0);
        assert_eq!(wei_jump_shift(3.2 / h.sqrt(), h), 2);
    }

    #[test]
    fn move_matches_mean_when_unclamped() {
        let (h, delta) = (0.01, 0.1);
        for drift in [-30.0, -3.0, 0.0, 2.0, 25.0] {
            let (d, u, p, clamped) = marginal_move(20, 10, drift, h, delta);
            assert_eq!(u, d + 1);
            if !clamped {
                let xd = (2.0 * (d as f64 - 10.0) - 1.0) * delta;
                let xu = xd + 2.0 * delta;
                assert!((p * xu + (1.0 - p) * xd - drift * h).abs() < 1e-12);
            }
        }
    }
}
