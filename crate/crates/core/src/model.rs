//! Model constants, contract terms and the scalar helpers every lattice shares.
//!
//! Under the risk-neutral measure the equity follows `dS/S = r dt + σ_S dZ_S`
//! and the short rate follows the CIR dynamics
//! `dr = κ(θ − r) dt + σ_r √r dZ_r`, with `d⟨Z_S, Z_r⟩ = ρ dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven constants of the equity/short-rate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Initial equity price.
    pub s0: f64,
    /// Equity volatility.
    pub sigma_s: f64,
    /// Initial short rate.
    pub r0: f64,
    /// Mean-reversion speed of the short rate.
    pub kappa: f64,
    /// Long-run level of the short rate.
    pub theta: f64,
    /// Short-rate volatility.
    pub sigma_r: f64,
    /// Instantaneous correlation between the equity and rate noises.
    pub rho: f64,
}

impl ModelParams {
    /// The benchmark parameter set of the numerical study, at the given rate
    /// volatility (`S0 = 100`, `σ_S = 0.25`, `r0 = 0.06`, `κ = 0.5`,
    /// `θ = 0.1`, `ρ = −0.25`).
    pub fn reference(sigma_r: f64) -> Self {
        Self {
            s0: 100.0,
            sigma_s: 0.25,
            r0: 0.06,
            kappa: 0.5,
            theta: 0.1,
            sigma_r,
            rho: -0.25,
        }
    }

    /// `2κθ / σ_r²`. Diagnostic only: values below one are accepted.
    pub fn feller_ratio(&self) -> f64 {
        2.0 * self.kappa * self.theta / (self.sigma_r * self.sigma_r)
    }

    /// Short-rate drift `κ(θ − r)`.
    #[inline]
    pub fn mu_r(&self, r: f64) -> f64 {
        self.kappa * (self.theta - r)
    }

    /// Equity drift `r·S`.
    #[inline]
    pub fn mu_s(&self, s: f64, r: f64) -> f64 {
        r * s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(Error::NonPositiveSpot(self.s0));
        }
        if !(self.sigma_s > 0.0) {
            return Err(Error::NonPositiveVolatility {
                name: "equity",
                value: self.sigma_s,
            });
        }
        if !(self.sigma_r > 0.0) {
            return Err(Error::NonPositiveVolatility {
                name: "short-rate",
                value: self.sigma_r,
            });
        }
        if !(self.r0 > 0.0) {
            return Err(Error::NonPositiveInitialRate(self.r0));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::NonPositiveMeanReversion(self.kappa));
        }
        if !(self.theta > 0.0) {
            return Err(Error::NonPositiveLongRunRate(self.theta));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::CorrelationOutOfRange(self.rho));
        }
        let named = [
            ("s0", self.s0),
            ("sigma_s", self.sigma_s),
            ("r0", self.r0),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma_r", self.sigma_r),
        ];
        if let Some(&(name, _)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteParameter(name));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference(0.08)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Put,
    Call,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exercise {
    European,
    American,
}

impl std::str::FromStr for OptionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "put" => Ok(OptionKind::Put),
            "call" => Ok(OptionKind::Call),
            other => Err(format!("unknown option kind `{other}` (expected put or call)")),
        }
    }
}

impl std::str::FromStr for Exercise {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "european" => Ok(Exercise::European),
            "american" => Ok(Exercise::American),
            other => Err(format!("unknown exercise `{other}` (expected european or american)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
    pub exercise: Exercise,
}

impl ContractSpec {
    pub fn new(strike: f64, maturity: f64, kind: OptionKind, exercise: Exercise) -> Self {
        Self {
            strike,
            maturity,
            kind,
            exercise,
        }
    }

    pub fn european_put(strike: f64, maturity: f64) -> Self {
        Self::new(strike, maturity, OptionKind::Put, Exercise::European)
    }

    pub fn american_put(strike: f64, maturity: f64) -> Self {
        Self::new(strike, maturity, OptionKind::Put, Exercise::American)
    }

    /// Intrinsic value at equity price `s`.
    #[inline]
    pub fn payoff(&self, s: f64) -> f64 {
        match self.kind {
            OptionKind::Put => (self.strike - s).max(0.0),
            OptionKind::Call => (s - self.strike).max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::NonPositiveStrike(self.strike));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::NonPositiveMaturity(self.maturity));
        }
        Ok(())
    }
}

/// What happens when a probability ratio leaves `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Project onto `[0, 1]` and count the event.
    #[default]
    ClampAndCount,
    /// Keep the exact covariance-matching solution of the joint kernel even
    /// when it leaves the simplex; such nodes are still counted. Marginal
    /// ratios are clamped as usual. This is the literal linear-system
    /// solution and reproduces the reference coarse-grid values at large `σ_r`.
    Unprojected,
}

impl std::str::FromStr for ClampPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "clamp_and_count" | "clamp" => Ok(ClampPolicy::ClampAndCount),
            "unprojected" => Ok(ClampPolicy::Unprojected),
            other => Err(format!("unknown clamp policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Number of time steps `N`.
    pub steps: usize,
    /// Nodes with `r < θ*·√h` use product transition probabilities.
    pub theta_star: f64,
    #[serde(default)]
    pub clamp_policy: ClampPolicy,
}

impl LatticeConfig {
    /// `N` steps with the default threshold `θ* = min(θ, r0) / 1000`.
    pub fn new(steps: usize, params: &ModelParams) -> Self {
        Self {
            steps,
            theta_star: default_theta_star(params),
            clamp_policy: ClampPolicy::ClampAndCount,
        }
    }

    pub fn with_theta_star(mut self, theta_star: f64) -> Self {
        self.theta_star = theta_star;
        self
    }

    pub fn with_clamp_policy(mut self, policy: ClampPolicy) -> Self {
        self.clamp_policy = policy;
        self
    }
}

/// Small enough that on the reference grids only zero-rate nodes fall in the
/// near-zero regime, which is what reproduces the reference tables; larger
/// admissible thresholds shift coarse-grid prices by several 1e-3.
pub fn default_theta_star(params: &ModelParams) -> f64 {
    params.theta.min(params.r0) / 1000.0
}

/// Inputs that passed [`validate`], with the step length and Feller ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedInputs {
    pub params: ModelParams,
    pub contract: ContractSpec,
    pub config: LatticeConfig,
    /// Step length `h = T / N`.
    pub h: f64,
    pub feller_ratio: f64,
}

pub fn validate(
    params: &ModelParams,
    contract: &ContractSpec,
    config: &LatticeConfig,
) -> Result<ValidatedInputs> {
    params.validate()?;
    contract.validate()?;
    if config.steps == 0 {
        return Err(Error::ZeroSteps);
    }
    let upper = params.theta.min(params.r0) / 2.0;
    if !(config.theta_star > 0.0 && config.theta_star < upper) {
        return Err(Error::ThetaStarOutOfRange {
            value: config.theta_star,
            upper,
        });
    }
    Ok(ValidatedInputs {
        params: *params,
        contract: *contract,
        config: *config,
        h: contract.maturity / config.steps as f64,
        feller_ratio: params.feller_ratio(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs(sigma_r: f64) -> (ModelParams, ContractSpec, LatticeConfig) {
        let p = ModelParams::reference(sigma_r);
        let c = ContractSpec::european_put(100.0, 1.0);
        let cfg = LatticeConfig::new(50, &p);
        (p, c, cfg)
    }

    #[test]
    fn reference_set_validates() {
        let (p, c, cfg) = inputs(0.08);
        let v = validate(&p, &c, &cfg).unwrap();
        assert_relative_eq!(v.h, 0.02, max_relative = 1e-15);
        assert_relative_eq!(v.feller_ratio, 15.625, max_relative = 1e-12);
    }

    #[test]
    fn feller_violation_is_accepted() {
        let (p, c, cfg) = inputs(3.0);
        let v = validate(&p, &c, &cfg).unwrap();
        assert!((v.feller_ratio - 0.1 / 9.0).abs() < 1e-12);
        assert!((v.feller_ratio - 0.0111).abs() < 1e-4);
    }

    #[test]
    fn rejects_named_violations() {
        let (mut p, c, cfg) = inputs(0.08);
        p.rho = 1.0;
        assert_eq!(validate(&p, &c, &cfg), Err(Error::CorrelationOutOfRange(1.0)));
        let (mut p, c, cfg) = inputs(0.08);
        p.sigma_s = 0.0;
        assert!(matches!(
            validate(&p, &c, &cfg),
            Err(Error::NonPositiveVolatility { name: "equity", .. })
        ));
        let (p, c, cfg) = inputs(0.08);
        let cfg = cfg.with_theta_star(0.03);
        assert!(matches!(
            validate(&p, &c, &cfg),
            Err(Error::ThetaStarOutOfRange { .. })
        ));
        let (p, c, mut cfg) = inputs(0.08);
        cfg.steps = 0;
        assert_eq!(validate(&p, &c, &cfg), Err(Error::ZeroSteps));
        let (p, mut c, cfg) = inputs(0.08);
        c.maturity = -1.0;
        assert_eq!(validate(&p, &c, &cfg), Err(Error::NonPositiveMaturity(-1.0)));
        let (mut p, c, cfg) = inputs(0.08);
        p.r0 = f64::NAN;
        assert!(validate(&p, &c, &cfg).is_err());
    }

    #[test]
    fn validate_is_idempotent() {
        let (p, c, cfg) = inputs(0.5);
        let once = validate(&p, &c, &cfg).unwrap();
        let twice = validate(&once.params, &once.contract, &once.config).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn drifts() {
        let p = ModelParams::reference(0.08);
        assert_eq!(p.mu_r(0.1), 0.0);
        assert_relative_eq!(p.mu_r(0.06), 0.02, max_relative = 1e-12);
        assert_relative_eq!(p.mu_r(0.0), 0.05, max_relative = 1e-15);
        assert_relative_eq!(p.mu_s(100.0, 0.06), 6.0, max_relative = 1e-15);
        assert_eq!(p.mu_s(100.0, 0.0), 0.0);
        assert_relative_eq!(p.mu_s(100.0, 0.1), 10.0, max_relative = 1e-15);
    }

    #[test]
    fn payoffs() {
        let put = ContractSpec::european_put(100.0, 1.0);
        let call = ContractSpec::new(100.0, 1.0, OptionKind::Call, Exercise::European);
        assert_eq!(put.payoff(110.0), 0.0);
        assert_eq!(put.payoff(80.0), 20.0);
        assert_eq!(call.payoff(80.0), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn mu_r_is_affine_decreasing(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let p = ModelParams::reference(0.5);
            if a < b {
                proptest::prop_assert!(p.mu_r(a) > p.mu_r(b));
            }
            let mid = p.mu_r(0.5 * (a + b));
            proptest::prop_assert!((mid - 0.5 * (p.mu_r(a) + p.mu_r(b))).abs() < 1e-12);
        }

        #[test]
        fn put_call_parity_of_payoffs(s in 0.0f64..300.0, k in 1.0f64..200.0) {
            let put = ContractSpec::european_put(k, 1.0);
            let call = ContractSpec::new(k, 1.0, OptionKind::Call, Exercise::European);
            let (pv, cv) = (put.payoff(s), call.payoff(s));
            if pv > 0.0 || cv > 0.0 {
                proptest::prop_assert!((pv + s - k - cv).abs() < 1e-9);
            }
        }
    }
}
