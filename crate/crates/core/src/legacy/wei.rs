use crate::error::{Error, Result};
use crate::lattice::{BivariateTree, Method, TransitionQuad};
use crate::model::{ModelParams, ValidatedInputs};

use super::marginal_move;

/// Drifts of the unit-variance coordinates at transformed rate `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeiDrifts {
    /// Drift of `X = log(S)/σ_S`.
    pub mu_x: f64,
    /// Drift of `R = 2√r/σ_r`.
    pub mu_r: f64,
    /// Drift of `Y = (X − ρR)/√(1 − ρ²)`.
    pub mu_y: f64,
}

/// Drifts of `(X, R, Y)` at `R`; singular at `R = 0`.
pub fn wei_drifts(params: &ModelParams, big_r: f64) -> Result<WeiDrifts> {
    if big_r == 0.0 {
        return Err(Error::SingularDrift);
    }
    Ok(drifts(params, big_r))
}

fn drifts(p: &ModelParams, big_r: f64) -> WeiDrifts {
    let s2 = p.sigma_r * p.sigma_r;
    let mu_x = (s2 * big_r * big_r / 4.0 - p.sigma_s * p.sigma_s / 2.0) / p.sigma_s;
    let mu_r = (p.kappa * (4.0 * p.theta - big_r * big_r * s2) - s2) / (2.0 * big_r * s2);
    let mu_y = (mu_x - p.rho * mu_r) / (1.0 - p.rho * p.rho).sqrt();
    WeiDrifts { mu_x, mu_r, mu_y }
}

/// Product tree on `(Y, R)`: `R_{i,k} = R0 + (2k − i)√h` and
/// `Y_{i,j} = Y0 + (2j − i)√h`, mapped back by `r = σ_r² R²/4` (zero for
/// `R ≤ 0`) and `S = exp(σ_S(√(1 − ρ²) Y + ρ R))`.
#[derive(Debug, Clone)]
pub struct WeiTree {
    params: ModelParams,
    steps: usize,
    h: f64,
    sqrt_h: f64,
    r_origin: f64,
    y_origin: f64,
    rho_bar: f64,
}

impl WeiTree {
    pub fn new(inputs: &ValidatedInputs) -> Self {
        let p = inputs.params;
        let rho_bar = (1.0 - p.rho * p.rho).sqrt();
        let r_origin = 2.0 * p.r0.sqrt() / p.sigma_r;
        let y_origin = (p.s0.ln() / p.sigma_s - p.rho * r_origin) / rho_bar;
        Self {
            params: p,
            steps: inputs.config.steps,
            h: inputs.h,
            sqrt_h: inputs.h.sqrt(),
            r_origin,
            y_origin,
            rho_bar,
        }
    }

    pub fn transformed_rate(&self, i: usize, k: usize) -> f64 {
        self.r_origin + (2.0 * k as f64 - i as f64) * self.sqrt_h
    }

    pub fn auxiliary(&self, i: usize, j: usize) -> f64 {
        self.y_origin + (2.0 * j as f64 - i as f64) * self.sqrt_h
    }

    /// Inverse map from `(Y, R)` to `(S, r)`.
    pub fn inverse(&self, y: f64, big_r: f64) -> (f64, f64) {
        let p = &self.params;
        let r = if big_r > 0.0 {
            p.sigma_r * p.sigma_r * big_r * big_r / 4.0
        } else {
            0.0
        };
        let s = (p.sigma_s * (self.rho_bar * y + p.rho * big_r)).exp();
        (s, r)
    }
}

impl BivariateTree for WeiTree {
    fn method(&self) -> Method {
        Method::Wei
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn h(&self) -> f64 {
        self.h
    }

    fn state(&self, i: usize, j: usize, k: usize) -> (f64, f64) {
        self.inverse(self.auxiliary(i, j), self.transformed_rate(i, k))
    }

    fn transition(&self, i: usize, j: usize, k: usize) -> Result<TransitionQuad> {
        // R = 0 makes the drifts infinite or NaN; that is left to propagate.
        let d = drifts(&self.params, self.transformed_rate(i, k));
        let (kd, ku, p_rate, rate_clamped) = marginal_move(i, k, d.mu_r, self.h, self.sqrt_h);
        let (jd, ju, p_aux, aux_clamped) = marginal_move(i, j, d.mu_y, self.h, self.sqrt_h);
        let mut quad = TransitionQuad::product((jd, ju), (kd, ku), p_aux, p_rate);
        quad.rate_clamped = rate_clamped;
        quad.equity_clamped = aux_clamped;
        Ok(quad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, ContractSpec, LatticeConfig};

    fn tree(sigma_r: f64, rho: f64, steps: usize) -> WeiTree {
        let mut p = ModelParams::reference(sigma_r);
        p.rho = rho;
        let c = ContractSpec::european_put(100.0, 1.0);
        WeiTree::new(&validate(&p, &c, &LatticeConfig::new(steps, &p)).unwrap())
    }

    #[test]
    fn drift_at_origin() {
        let p = ModelParams::reference(0.08);
        let r0 = 2.0 * 0.06f64.sqrt() / 0.08;
        let d = wei_drifts(&p, r0).unwrap();
        // Independent form in r: κ(θ − r)/(σ_r √r) − σ_r/(4√r).
        let alt = 0.5 * (0.1 - 0.06) / (0.08 * 0.06f64.sqrt()) - 0.08 / (4.0 * 0.06f64.sqrt());
        assert!((d.mu_r - alt).abs() < 1e-12);
        assert!((d.mu_r - 0.938_971_068_066_885_2).abs() < 1e-12);
    }

    #[test]
    fn drift_changes_sign_at_root() {
        let p = ModelParams::reference(0.08);
        let s2: f64 = 0.08 * 0.08;
        // κ(4θ − R²σ²) = σ² ⇔ R² = (4κθ − σ²)/(κσ²)
        let root = ((4.0 * 0.5 * 0.1 - s2) / (0.5 * s2)).sqrt();
        assert!(wei_drifts(&p, root * 0.999).unwrap().mu_r > 0.0);
        assert!(wei_drifts(&p, root * 1.001).unwrap().mu_r < 0.0);
    }

    #[test]
    fn zero_correlation_leaves_auxiliary_drift_alone() {
        let mut p = ModelParams::reference(0.5);
        p.rho = 0.0;
        let d = wei_drifts(&p, 1.3).unwrap();
        assert_eq!(d.mu_y, d.mu_x);
    }

    #[test]
    fn singular_at_zero() {
        assert_eq!(
            wei_drifts(&ModelParams::reference(0.5), 0.0),
            Err(Error::SingularDrift)
        );
    }

    #[test]
    fn inverse_round_trip() {
        let t = tree(0.5, -0.25, 40);
        let (s, r) = t.state(0, 0, 0);
        assert!((s - 100.0).abs() < 1e-10);
        assert!((r - 0.06).abs() < 1e-15);
        for i in 0..=40 {
            for j in 0..=i {
                for k in 0..=i {
                    let (s, r) = t.state(i, j, k);
                    assert!(s > 0.0 && s.is_finite());
                    assert!(r >= 0.0);
                }
            }
        }
    }

    #[test]
    fn quads_stay_on_simplex() {
        for sigma_r in [0.08, 0.5, 1.0, 3.0] {
            let t = tree(sigma_r, -0.25, 60);
            for i in 0..60 {
                for j in 0..=i {
                    for k in 0..=i {
                        let q = t.transition(i, j, k).unwrap();
                        assert!(q.q.iter().all(|x| (0.0..=1.0).contains(x)));
                        assert!((q.total() - 1.0).abs() < 1e-12);
                        assert!(q.j_up <= i + 1 && q.k_up <= i + 1);
                    }
                }
            }
        }
    }

    #[test]
    fn large_vol_absorbs_near_zero() {
        // Smallest positive R on a coarse σ_r = 3 grid: the drift is so
        // negative that the up-probability clamps to zero.
        let t = tree(3.0, -0.25, 50);
        let mut found = false;
        for i in 1..50 {
            let k = (0..=i).find(|&k| t.transformed_rate(i, k) > 0.0).unwrap();
            let big_r = t.transformed_rate(i, k);
            let d = wei_drifts(&t.params, big_r).unwrap();
            if d.mu_r * t.h + big_r - t.transformed_rate(i + 1, k) <= 0.0 {
                let q = t.transition(i, 0, k).unwrap();
                assert_eq!(q.rate_up(), 0.0);
                found = true;
            }
        }
        assert!(found);
    }
}
