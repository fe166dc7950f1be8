//! Equity tree: `S_{i,j} = exp(σ_S U_{i,j})` on the grid
//! `U_{i,j} = log(S0)/σ_S + (2j − i)√h`. The up-probability matches the
//! conditional mean `S + r·S·h`, so it depends on the current rate.

use crate::error::{Error, Result};
use crate::lattice::{bracket, clamp_unit};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquityStep {
    pub j_down: usize,
    pub j_up: usize,
    pub p_up: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct EquityGrid {
    steps: usize,
    h: f64,
    rows: Vec<Vec<f64>>,
}

impl EquityGrid {
    pub fn new(params: &ModelParams, maturity: f64, steps: usize) -> Self {
        let h = maturity / steps as f64;
        let step = params.sigma_s * h.sqrt();
        // S0·exp(σ_S (2j − i)√h) is exp(σ_S U_{i,j}) with the origin factored
        // out, so S_{0,0} = S0 exactly and recombining nodes are bit-identical.
        let rows = (0..=steps)
            .map(|i| {
                (0..=i)
                    .map(|j| params.s0 * ((2.0 * j as f64 - i as f64) * step).exp())
                    .collect()
            })
            .collect();
        Self { steps, h, rows }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn equity_node(&self, i: usize, j: usize) -> Result<f64> {
        if i > self.steps || j > i {
            return Err(self.out_of_range(i, j));
        }
        Ok(self.rows[i][j])
    }

    /// Successor indices of `(i, j)` when the current short rate is `rate`.
    pub fn equity_jump_indices(&self, i: usize, j: usize, rate: f64) -> Result<(usize, usize)> {
        if i >= self.steps || j > i {
            return Err(self.out_of_range(i, j));
        }
        Ok(self.bracket(i, j, rate))
    }

    pub fn equity_up_probability(&self, i: usize, j: usize, rate: f64) -> Result<EquityStep> {
        let (j_down, j_up) = self.equity_jump_indices(i, j, rate)?;
        self.step_with(i, j, rate, j_down, j_up)
    }

    pub(crate) fn step(&self, i: usize, j: usize, rate: f64) -> Result<EquityStep> {
        let (j_down, j_up) = self.bracket(i, j, rate);
        self.step_with(i, j, rate, j_down, j_up)
    }

    fn target(&self, i: usize, j: usize, rate: f64) -> f64 {
        let s = self.rows[i][j];
        s + rate * s * self.h
    }

    fn bracket(&self, i: usize, j: usize, rate: f64) -> (usize, usize) {
        bracket(&self.rows[i + 1], j, self.target(i, j, rate))
    }

    fn step_with(
        &self,
        i: usize,
        j: usize,
        rate: f64,
        j_down: usize,
        j_up: usize,
    ) -> Result<EquityStep> {
        let next = &self.rows[i + 1];
        let width = next[j_up] - next[j_down];
        if !(width > 0.0) {
            return Err(Error::DegenerateBranch { i });
        }
        let (p_up, clamped) = clamp_unit((self.target(i, j, rate) - next[j_down]) / width);
        Ok(EquityStep {
            j_down,
            j_up,
            p_up,
            clamped,
        })
    }

    fn out_of_range(&self, i: usize, j: usize) -> Error {
        Error::IndexOutOfRange {
            i,
            index: j,
            steps: self.steps,
        }
    }
}
