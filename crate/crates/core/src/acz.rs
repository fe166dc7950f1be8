//! The robust bivariate tree.
//!
//! The state space is the product of the rate tree ([`RateGrid`]) and the
//! equity tree ([`EquityGrid`]). Out of node `(i, j, k)` the chain moves to
//! one of four successors `(j_u|j_d, k_u|k_d)`. The marginal up-probabilities
//! `p̂` (equity) and `p` (rate) match the conditional means of the original
//! diffusions; the joint probabilities additionally match the conditional
//! cross-moment `ρ σ_r √r σ_S S h`.
//!
//! Writing the joint law as the product law plus a correction `c` on the
//! `(+, −, −, +)` pattern keeps both marginals fixed for any `c`. The
//! cross-moment of the product law is `μ_S μ_r h²`, and the pattern adds
//! `c (S_u − S_d)(r_u − r_d)`, so
//!
//! ```text
//! c = (ρ σ_r √r σ_S S h − μ_S μ_r h²) / ((S_u − S_d)(r_u − r_d)).
//! ```
//!
//! Near zero (`r < θ*·√h`) the chain uses the plain product law instead.
//! When `c` would push a probability outside `[0, 1]` the node is flagged as
//! clamped and, under the default policy, `c` is projected onto the feasible
//! interval.

use crate::equity::EquityGrid;
use crate::error::{Error, Result};
use crate::lattice::{BivariateTree, Method, Regime, TransitionQuad};
use crate::model::{ClampPolicy, ModelParams, ValidatedInputs};
use crate::rate::{RateGrid, RateStep};

#[derive(Debug, Clone)]
pub struct AczTree {
    params: ModelParams,
    h: f64,
    near_zero_below: f64,
    clamp_policy: ClampPolicy,
    rate: RateGrid,
    equity: EquityGrid,
    rate_steps: Vec<Vec<RateStep>>,
}

/// Local conditional moments of one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMoments {
    pub mean_s: f64,
    pub mean_r: f64,
    pub cross: f64,
    pub second_s: f64,
    pub second_r: f64,
    pub fourth_s: f64,
    pub fourth_r: f64,
}

/// Discrete local moments minus their diffusion targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDefects {
    /// `E[ΔS] − μ_S h`.
    pub mean_s: f64,
    /// `E[Δr] − μ_r h`.
    pub mean_r: f64,
    /// `E[ΔS Δr] − ρ σ_r σ_S S √r h`.
    pub cov: f64,
    /// `E[ΔS²] − σ_S² S² h`.
    pub var_s: f64,
    /// `E[Δr²] − σ_r² r h`.
    pub var_r: f64,
}

impl AczTree {
    pub fn new(inputs: &ValidatedInputs) -> Result<Self> {
        let params = inputs.params;
        let steps = inputs.config.steps;
        let maturity = inputs.contract.maturity;
        let rate = RateGrid::new(&params, maturity, steps);
        let equity = EquityGrid::new(&params, maturity, steps);
        let rate_steps = (0..steps)
            .map(|i| (0..=i).map(|k| rate.step(i, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            h: inputs.h,
            near_zero_below: inputs.config.theta_star * inputs.h.sqrt(),
            clamp_policy: inputs.config.clamp_policy,
            rate,
            equity,
            rate_steps,
        })
    }

    pub fn rate_grid(&self) -> &RateGrid {
        &self.rate
    }

    pub fn equity_grid(&self) -> &EquityGrid {
        &self.equity
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Rates strictly below this level use the product law.
    pub fn near_zero_threshold(&self) -> f64 {
        self.near_zero_below
    }

    pub fn regime(&self, rate: f64) -> Regime {
        if rate < self.near_zero_below {
            Regime::NearZero
        } else {
            Regime::Standard
        }
    }

    pub fn rate_step(&self, i: usize, k: usize) -> Result<RateStep> {
        self.check(i, 0, k)?;
        Ok(self.rate_steps[i][k])
    }

    pub fn joint_transition(&self, i: usize, j: usize, k: usize) -> Result<TransitionQuad> {
        self.check(i, j, k)?;
        self.quad(i, j, k)
    }

    fn quad(&self, i: usize, j: usize, k: usize) -> Result<TransitionQuad> {
        let rs = self.rate_steps[i][k];
        let r = self.rate.row(i)[k];
        let s = self.equity.row(i)[j];
        let es = self.equity.step(i, j, r)?;
        let (pe, pr) = (es.p_up, rs.p_up);
        let mut quad = TransitionQuad::product((es.j_down, es.j_up), (rs.k_down, rs.k_up), pe, pr);
        quad.rate_clamped = rs.clamped;
        quad.equity_clamped = es.clamped;

        if r < self.near_zero_below {
            quad.regime = Regime::NearZero;
        } else {
            let p = &self.params;
            let h = self.h;
            let next_s = self.equity.row(i + 1);
            let next_r = self.rate.row(i + 1);
            let width_s = next_s[es.j_up] - next_s[es.j_down];
            let width_r = next_r[rs.k_up] - next_r[rs.k_down];
            let target = p.rho * p.sigma_r * r.sqrt() * p.sigma_s * s * h;
            let drift_product = p.mu_s(s, r) * p.mu_r(r) * h * h;
            let wanted = (target - drift_product) / (width_s * width_r);

            let b = quad.q;
            let lo = (-b[0]).max(-b[3]);
            let hi = b[1].min(b[2]);
            let c = match self.clamp_policy {
                ClampPolicy::ClampAndCount => wanted.clamp(lo, hi),
                ClampPolicy::Unprojected => wanted,
            };
            quad.q = [b[0] + c, b[1] - c, b[2] - c, b[3] + c];
            quad.clamped = !(lo..=hi).contains(&wanted);
        }

        if quad.q.iter().any(|q| !q.is_finite()) {
            return Err(Error::NonFinite { i, j, k });
        }
        Ok(quad)
    }

    /// Conditional moments of the increments `(ΔS, Δr)` under `quad`.
    pub fn local_moments(
        &self,
        i: usize,
        j: usize,
        k: usize,
        quad: &TransitionQuad,
    ) -> Result<LocalMoments> {
        self.check(i, j, k)?;
        let s = self.equity.row(i)[j];
        let r = self.rate.row(i)[k];
        let next_s = self.equity.row(i + 1);
        let next_r = self.rate.row(i + 1);
        let mut m = LocalMoments {
            mean_s: 0.0,
            mean_r: 0.0,
            cross: 0.0,
            second_s: 0.0,
            second_r: 0.0,
            fourth_s: 0.0,
            fourth_r: 0.0,
        };
        for (q, (jn, kn)) in quad.q.iter().zip(quad.successors()) {
            let ds = next_s[jn] - s;
            let dr = next_r[kn] - r;
            m.mean_s += q * ds;
            m.mean_r += q * dr;
            m.cross += q * ds * dr;
            m.second_s += q * ds * ds;
            m.second_r += q * dr * dr;
            m.fourth_s += q * ds.powi(4);
            m.fourth_r += q * dr.powi(4);
        }
        Ok(m)
    }

    pub fn moment_defects(
        &self,
        i: usize,
        j: usize,
        k: usize,
        quad: &TransitionQuad,
    ) -> Result<MomentDefects> {
        let m = self.local_moments(i, j, k, quad)?;
        let p = &self.params;
        let h = self.h;
        let s = self.equity.row(i)[j];
        let r = self.rate.row(i)[k];
        Ok(MomentDefects {
            mean_s: m.mean_s - p.mu_s(s, r) * h,
            mean_r: m.mean_r - p.mu_r(r) * h,
            cov: m.cross - p.rho * p.sigma_r * p.sigma_s * s * r.sqrt() * h,
            var_s: m.second_s - p.sigma_s * p.sigma_s * s * s * h,
            var_r: m.second_r - p.sigma_r * p.sigma_r * r * h,
        })
    }

    fn check(&self, i: usize, j: usize, k: usize) -> Result<()> {
        let steps = self.rate.steps();
        if i >= steps || j > i || k > i {
            return Err(Error::IndexOutOfRange {
                i,
                index: j.max(k),
                steps,
            });
        }
        Ok(())
    }
}

impl BivariateTree for AczTree {
    fn method(&self) -> Method {
        Method::Acz
    }

    fn steps(&self) -> usize {
        self.rate.steps()
    }

    fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    fn state(&self, i: usize, j: usize, k: usize) -> (f64, f64) {
        (self.equity.row(i)[j], self.rate.row(i)[k])
    }

    fn transition(&self, i: usize, j: usize, k: usize) -> Result<TransitionQuad> {
        self.quad(i, j, k)
    }
}
