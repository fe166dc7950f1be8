//! Types shared by every bivariate tree: the four-branch transition and the
//! trait the backward induction walks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Tree construction used for a price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Moment-matched tree on the original `(S, r)` coordinates.
    Acz,
    /// Product tree on the orthogonalised `(Y, R)` coordinates.
    Wei,
    /// Product tree on the `(X1, X2)` coordinates.
    Hst,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wei, Method::Hst, Method::Acz];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Acz => "acz",
            Method::Wei => "wei",
            Method::Hst => "hst",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acz" => Ok(Method::Acz),
            "wei" => Ok(Method::Wei),
            "hst" => Ok(Method::Hst),
            other => Err(format!("unknown tree method `{other}`")),
        }
    }
}

/// Which branch of the transition kernel produced a quad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r < θ*·√h`: product of the marginal probabilities.
    NearZero,
    /// Covariance-matching solution (or a product-form legacy tree).
    Standard,
}

/// Four successors of node `(i, j, k)` and their probabilities.
///
/// Probabilities are ordered `[uu, ud, du, dd]`, the first letter being the
/// equity move and the second the rate move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionQuad {
    pub j_up: usize,
    pub j_down: usize,
    pub k_up: usize,
    pub k_down: usize,
    pub q: [f64; 4],
    pub regime: Regime,
    /// The covariance correction had to be projected back onto the simplex.
    pub clamped: bool,
    /// The rate up-probability ratio was clamped to `[0, 1]`.
    pub rate_clamped: bool,
    /// The equity up-probability ratio was clamped to `[0, 1]`.
    pub equity_clamped: bool,
}

impl TransitionQuad {
    /// Product-form quad from independent marginal up-probabilities.
    pub fn product(
        (j_down, j_up): (usize, usize),
        (k_down, k_up): (usize, usize),
        p_equity: f64,
        p_rate: f64,
    ) -> Self {
        Self {
            j_up,
            j_down,
            k_up,
            k_down,
            q: [
                p_equity * p_rate,
                p_equity * (1.0 - p_rate),
                (1.0 - p_equity) * p_rate,
                (1.0 - p_equity) * (1.0 - p_rate),
            ],
            regime: Regime::Standard,
            clamped: false,
            rate_clamped: false,
            equity_clamped: false,
        }
    }

    /// Successor `(j, k)` indices in the same order as `q`.
    pub fn successors(&self) -> [(usize, usize); 4] {
        [
            (self.j_up, self.k_up),
            (self.j_up, self.k_down),
            (self.j_down, self.k_up),
            (self.j_down, self.k_down),
        ]
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Marginal probability of the equity up-move.
    pub fn equity_up(&self) -> f64 {
        self.q[0] + self.q[1]
    }

    /// Marginal probability of the rate up-move.
    pub fn rate_up(&self) -> f64 {
        self.q[0] + self.q[2]
    }

    pub fn any_clamp(&self) -> bool {
        self.clamped || self.rate_clamped || self.equity_clamped
    }
}

/// A recombining tree over `(S, r)` with `(i + 1)²` nodes at step `i`.
///
/// Node `(i, j, k)` carries equity index `j` and rate index `k`, both in
/// `0..=i`. Implementations are immutable once built.
pub trait BivariateTree: Sync {
    fn method(&self) -> Method;

    fn steps(&self) -> usize;

    /// Step length `h = T / N`.
    fn h(&self) -> f64;

    /// Equity price and short rate at node `(i, j, k)`.
    fn state(&self, i: usize, j: usize, k: usize) -> (f64, f64);

    /// Transition out of node `(i, j, k)`, `i < N`.
    fn transition(&self, i: usize, j: usize, k: usize) -> crate::Result<TransitionQuad>;
}

/// Projects `x` onto `[0, 1]`, reporting whether it moved. NaN passes through.
#[inline]
pub fn clamp_unit(x: f64) -> (f64, bool) {
    if x < 0.0 {
        (0.0, true)
    } else if x > 1.0 {
        (1.0, true)
    } else {
        (x, false)
    }
}

/// Down/up successor indices bracketing `target` in the sorted row `next`.
///
/// Returns `(d, u)` where `d` is the largest index `≤ from` with
/// `next[d] ≤ target` (`0` if there is none) and `u` is the smallest index in
/// `from + 1..next.len()` with `next[u] ≥ target` (the last index if there is
/// none). Ties are inclusive on both sides.
#[inline]
pub fn bracket(next: &[f64], from: usize, target: f64) -> (usize, usize) {
    debug_assert!(from + 1 < next.len());
    let below = next.partition_point(|&x| x <= target);
    let down = if below == 0 { 0 } else { (below - 1).min(from) };
    let first_at_or_above = next.partition_point(|&x| x < target);
    let up = first_at_or_above.max(from + 1).min(next.len() - 1);
    (down, up)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal transcription of the set definitions.
    fn bracket_scan(next: &[f64], from: usize, target: f64) -> (usize, usize) {
        let down = (0..=from).filter(|&m| next[m] <= target).max().unwrap_or(0);
        let up = (from + 1..next.len())
            .filter(|&m| next[m] >= target)
            .min()
            .unwrap_or(next.len() - 1);
        (down, up)
    }

    #[test]
    fn bracket_handles_flat_zero_prefix() {
        let row = [0.0, 0.0, 0.0, 0.001, 0.01, 0.05];
        assert_eq!(bracket(&row, 1, 0.0), (1, 2));
        assert_eq!(bracket(&row, 1, 0.001), (1, 3));
        assert_eq!(bracket(&row, 1, 0.02), (1, 5));
        assert_eq!(bracket(&row, 4, 1.0), (4, 5));
        assert_eq!(bracket(&row, 4, -1.0), (0, 5));
    }

    #[test]
    fn method_round_trips_through_str() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("foo".parse::<Method>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn bracket_matches_scan(
            mut row in proptest::collection::vec(0.0f64..1.0, 2..40),
            zeros in 0usize..10,
            from_frac in 0.0f64..1.0,
            target in -0.2f64..1.2,
        ) {
            for v in row.iter_mut().take(zeros) {
                *v = 0.0;
            }
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let from = ((row.len() - 1) as f64 * from_frac) as usize;
            let from = from.min(row.len() - 2);
            proptest::prop_assert_eq!(bracket(&row, from, target), bracket_scan(&row, from, target));
        }

        #[test]
        fn product_quad_is_a_distribution(pe in 0.0f64..=1.0, pr in 0.0f64..=1.0) {
            let q = TransitionQuad::product((0, 1), (0, 1), pe, pr);
            proptest::prop_assert!((q.total() - 1.0).abs() < 1e-15);
            proptest::prop_assert!((q.equity_up() - pe).abs() < 1e-15);
            proptest::prop_assert!((q.rate_up() - pr).abs() < 1e-15);
        }
    }
}
