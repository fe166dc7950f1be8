//! Tree on the decorrelated pair `X1 = σ_r X + R`, `X2 = σ_r X − R` where
//! `X = log(S)/σ_S` and `R = 2√r`.
//!
//! Derivation. By Itô, `dR = μ_R' dt + σ_r dZ_r` with
//! `μ_R' = (4κθ − κR² − σ_r²)/(2R)`, and `dX = μ_X dt + dZ_S` with
//! `μ_X = (R²/4 − σ_S²/2)/σ_S`. Hence `dX1` has variance `2σ_r²(1 + ρ)`,
//! `dX2` has variance `2σ_r²(1 − ρ)`, and their covariance
//! `σ_r²(1 − ρ + ρ − 1)` vanishes. Each coordinate gets its own binomial grid
//! with spacing equal to its one-step standard deviation.

use crate::error::Result;
use crate::lattice::{BivariateTree, Method, TransitionQuad};
use crate::model::{ModelParams, ValidatedInputs};

use super::marginal_move;

#[derive(Debug, Clone)]
pub struct HstTree {
    params: ModelParams,
    steps: usize,
    h: f64,
    x1_origin: f64,
    x2_origin: f64,
    x1_step: f64,
    x2_step: f64,
}

impl HstTree {
    pub fn new(inputs: &ValidatedInputs) -> Self {
        let p = inputs.params;
        let sqrt_h = inputs.h.sqrt();
        let x = p.s0.ln() / p.sigma_s;
        let big_r = 2.0 * p.r0.sqrt();
        Self {
            params: p,
            steps: inputs.config.steps,
            h: inputs.h,
            x1_origin: p.sigma_r * x + big_r,
            x2_origin: p.sigma_r * x - big_r,
            x1_step: p.sigma_r * (2.0 * (1.0 + p.rho)).sqrt() * sqrt_h,
            x2_step: p.sigma_r * (2.0 * (1.0 - p.rho)).sqrt() * sqrt_h,
        }
    }

    /// Grid spacings of the first and second coordinates.
    pub fn step_sizes(&self) -> (f64, f64) {
        (self.x1_step, self.x2_step)
    }

    pub fn first(&self, i: usize, j: usize) -> f64 {
        self.x1_origin + (2.0 * j as f64 - i as f64) * self.x1_step
    }

    pub fn second(&self, i: usize, k: usize) -> f64 {
        self.x2_origin + (2.0 * k as f64 - i as f64) * self.x2_step
    }

    /// Drifts of `(X1, X2)` at the given coordinates.
    pub fn drifts(&self, x1: f64, x2: f64) -> (f64, f64) {
        let p = &self.params;
        let big_r = (x1 - x2) / 2.0;
        let mu_x = (big_r * big_r / 4.0 - p.sigma_s * p.sigma_s / 2.0) / p.sigma_s;
        let mu_r = (4.0 * p.kappa * p.theta - p.kappa * big_r * big_r - p.sigma_r * p.sigma_r)
            / (2.0 * big_r);
        (p.sigma_r * mu_x + mu_r, p.sigma_r * mu_x - mu_r)
    }

    /// Inverse map from `(X1, X2)` to `(S, r)`.
    pub fn inverse(&self, x1: f64, x2: f64) -> (f64, f64) {
        let big_r = (x1 - x2) / 2.0;
        let x = (x1 + x2) / (2.0 * self.params.sigma_r);
        let r = if big_r > 0.0 { big_r * big_r / 4.0 } else { 0.0 };
        ((self.params.sigma_s * x).exp(), r)
    }
}

impl BivariateTree for HstTree {
    fn method(&self) -> Method {
        Method::Hst
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn h(&self) -> f64 {
        self.h
    }

    fn state(&self, i: usize, j: usize, k: usize) -> (f64, f64) {
        self.inverse(self.first(i, j), self.second(i, k))
    }

    fn transition(&self, i: usize, j: usize, k: usize) -> Result<TransitionQuad> {
        let (mu1, mu2) = self.drifts(self.first(i, j), self.second(i, k));
        let (jd, ju, p1, c1) = marginal_move(i, j, mu1, self.h, self.x1_step);
        let (kd, ku, p2, c2) = marginal_move(i, k, mu2, self.h, self.x2_step);
        let mut quad = TransitionQuad::product((jd, ju), (kd, ku), p1, p2);
        quad.equity_clamped = c1;
        quad.rate_clamped = c2;
        Ok(quad)
    }
}
