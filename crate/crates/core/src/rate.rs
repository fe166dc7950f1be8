//! Short-rate tree.
//!
//! Nodes come from the unit-variance grid `R_{i,k} = R0 + (2k − i)√h`,
//! `R0 = 2√r0 / σ_r`, mapped back through `r = σ_r² R² / 4` (zero when
//! `R ≤ 0`). Transition probabilities are then set directly on `r`: the
//! successors bracket `r + κ(θ − r)h` in the next row, possibly several
//! levels away, and the up-probability matches that conditional mean.

use crate::error::{Error, Result};
use crate::lattice::{bracket, clamp_unit};
use crate::model::ModelParams;

/// One step of the rate chain out of node `(i, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStep {
    pub k_down: usize,
    pub k_up: usize,
    /// Probability of moving to `k_up`.
    pub p_up: f64,
    /// The raw ratio left `[0, 1]` and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct RateGrid {
    params: ModelParams,
    steps: usize,
    h: f64,
    sqrt_h: f64,
    origin: f64,
    rows: Vec<Vec<f64>>,
}

impl RateGrid {
    pub fn new(params: &ModelParams, maturity: f64, steps: usize) -> Self {
        let h = maturity / steps as f64;
        let sqrt_h = h.sqrt();
        let origin = 2.0 * params.r0.sqrt() / params.sigma_r;
        let s2 = params.sigma_r * params.sigma_r;
        let rows = (0..=steps)
            .map(|i| {
                (0..=i)
                    .map(|k| {
                        let big_r = origin + (2.0 * k as f64 - i as f64) * sqrt_h;
                        if big_r > 0.0 {
                            s2 * big_r * big_r / 4.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            params: *params,
            steps,
            h,
            sqrt_h,
            origin,
            rows,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `R0 = 2√r0 / σ_r`.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Transformed coordinate `R_{i,k}`, which may be negative.
    pub fn transformed(&self, i: usize, k: usize) -> f64 {
        self.origin + (2.0 * k as f64 - i as f64) * self.sqrt_h
    }

    /// Rates of step `i`, non-decreasing in `k`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rate_node(&self, i: usize, k: usize) -> Result<f64> {
        self.check(i, k, self.steps)?;
        Ok(self.rows[i][k])
    }

    /// Largest rate on the whole grid.
    pub fn max_rate(&self) -> f64 {
        self.rows[self.steps][self.steps]
    }

    pub fn rate_jump_indices(&self, i: usize, k: usize) -> Result<(usize, usize)> {
        self.check(i, k, self.steps.saturating_sub(1))?;
        if i >= self.steps {
            return Err(self.out_of_range(i, k));
        }
        Ok(self.bracket(i, k))
    }

    pub fn rate_up_probability(&self, i: usize, k: usize) -> Result<RateStep> {
        let (k_down, k_up) = self.rate_jump_indices(i, k)?;
        self.step_with(i, k, k_down, k_up)
    }

    /// Jump indices and up-probability, assuming `i < N` and `k ≤ i`.
    pub(crate) fn step(&self, i: usize, k: usize) -> Result<RateStep> {
        let (k_down, k_up) = self.bracket(i, k);
        self.step_with(i, k, k_down, k_up)
    }

    fn bracket(&self, i: usize, k: usize) -> (usize, usize) {
        bracket(&self.rows[i + 1], k, self.target(i, k))
    }

    /// `r + μ_r(r)·h`, the conditional mean the successors must bracket.
    fn target(&self, i: usize, k: usize) -> f64 {
        let r = self.rows[i][k];
        r + self.params.mu_r(r) * self.h
    }

    fn step_with(&self, i: usize, k: usize, k_down: usize, k_up: usize) -> Result<RateStep> {
        let next = &self.rows[i + 1];
        let width = next[k_up] - next[k_down];
        if !(width > 0.0) {
            return Err(Error::DegenerateBranch { i });
        }
        let (p_up, clamped) = clamp_unit((self.target(i, k) - next[k_down]) / width);
        Ok(RateStep {
            k_down,
            k_up,
            p_up,
            clamped,
        })
    }

    fn check(&self, i: usize, k: usize, max_i: usize) -> Result<()> {
        if i > max_i || k > i {
            return Err(self.out_of_range(i, k));
        }
        Ok(())
    }

    fn out_of_range(&self, i: usize, k: usize) -> Error {
        Error::IndexOutOfRange {
            i,
            index: k,
            steps: self.steps,
        }
    }
}
