//! Monte Carlo benchmark for European payoffs.
//!
//! The short rate is simulated on `M` equal steps. The equity is then sampled
//! conditionally on the rate path: with `∫r` the trapezoidal integral of the
//! rate and `W_r` the sum of the rate scheme's Brownian increments,
//!
//! ```text
//! log S_T = log S0 + ∫r − σ_S² T / 2 + σ_S (ρ W_r + √(1 − ρ²) √T N)
//! ```
//!
//! with `N` an independent standard normal. Each scheme reports the Brownian
//! increment that drove its rate step, so the correlation carries over to any
//! rate discretisation.
//!
//! Every path draws from its own ChaCha stream (`seed`, path index), and paths
//! are reduced in fixed chunks combined in chunk order, so the estimate does
//! not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{ContractSpec, Exercise, ModelParams};

const CHUNK: u64 = 4096;

/// Discretisation of the short-rate path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McScheme {
    /// Euler with the rate floored at zero inside drift and diffusion.
    FullTruncationEuler,
    /// Positivity-preserving second-order weak scheme, valid for every
    /// Feller ratio.
    #[default]
    WeakSecondOrder,
}

impl McScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            McScheme::FullTruncationEuler => "full_truncation_euler",
            McScheme::WeakSecondOrder => "weak_second_order",
        }
    }
}

impl std::str::FromStr for McScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full_truncation_euler" | "euler" => Ok(McScheme::FullTruncationEuler),
            "weak_second_order" | "second_order" => Ok(McScheme::WeakSecondOrder),
            other => Err(format!("unknown Monte Carlo scheme `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    /// Time steps per path.
    pub steps: usize,
    pub seed: u64,
    pub scheme: McScheme,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 1_000_000,
            steps: 300,
            seed: 20_100_601,
            scheme: McScheme::WeakSecondOrder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub scheme: McScheme,
}

impl McResult {
    /// Half-width of the 95% normal confidence band.
    pub fn half_width(&self) -> f64 {
        1.96 * self.std_error
    }
}

/// One simulated rate path.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePath {
    /// `r_0, …, r_M`, all non-negative.
    pub rates: Vec<f64>,
    /// Trapezoidal `∫₀ᵀ r dt`.
    pub integral: f64,
    /// Sum of the Brownian increments driving the rate.
    pub driver: f64,
}

/// Per-step constants of a CIR scheme `dx = (a − k x) dt + σ √x dW`.
#[derive(Debug, Clone, Copy)]
struct CirStepper {
    scheme: McScheme,
    h: f64,
    sqrt_h: f64,
    kappa: f64,
    theta: f64,
    sigma: f64,
    // weak second-order constants
    half_decay: f64,
    half_shift: f64,
    full_decay: f64,
    psi: f64,
    threshold: f64,
}

fn psi(k: f64, t: f64) -> f64 {
    -(-k * t).exp_m1() / k
}

impl CirStepper {
    fn new(params: &ModelParams, h: f64, scheme: McScheme) -> Self {
        let (k, a, sigma) = (params.kappa, params.kappa * params.theta, params.sigma_r);
        let s2 = sigma * sigma;
        let psi_half = psi(k, h / 2.0);
        let threshold = if s2 > 4.0 * a {
            let grow = (k * h / 2.0).exp();
            let c = (s2 / 4.0 - a) * psi_half;
            grow * (c + ((c * grow).sqrt() + sigma / 2.0 * (3.0 * h).sqrt()).powi(2))
        } else {
            0.0
        };
        Self {
            scheme,
            h,
            sqrt_h: h.sqrt(),
            kappa: k,
            theta: params.theta,
            sigma,
            half_decay: (-k * h / 2.0).exp(),
            half_shift: (a - s2 / 4.0) * psi_half,
            full_decay: (-k * h).exp(),
            psi: psi(k, h),
            threshold,
        }
    }

    /// Advances the internal state by one step; returns the Brownian
    /// increment used.
    #[inline]
    fn step<R: Rng>(&self, x: &mut f64, rng: &mut R) -> f64 {
        match self.scheme {
            McScheme::FullTruncationEuler => {
                let dw = self.sqrt_h * rng.sample::<f64, _>(StandardNormal);
                let xp = x.max(0.0);
                *x += self.kappa * (self.theta - xp) * self.h + self.sigma * xp.sqrt() * dw;
                dw
            }
            McScheme::WeakSecondOrder => {
                let y: f64 = rng.sample(StandardNormal);
                if *x >= self.threshold {
                    let a = self.half_decay * *x + self.half_shift;
                    let z = (a.sqrt() + self.sigma / 2.0 * self.sqrt_h * y).powi(2);
                    *x = self.half_decay * z + self.half_shift;
                } else {
                    // Two-point law with the exact conditional mean and
                    // variance, moving up when the Gaussian lands in its
                    // upper tail of mass p.
                    let a = self.kappa * self.theta;
                    let m1 = *x * self.full_decay + a * self.psi;
                    let var =
                        self.sigma * self.sigma * self.psi * (a * self.psi / 2.0 + *x * self.full_decay);
                    let m2 = m1 * m1 + var;
                    let p = (1.0 - (1.0 - m1 * m1 / m2).sqrt()) / 2.0;
                    *x = if upper_tail(y) < p {
                        m1 / (2.0 * p)
                    } else {
                        m1 / (2.0 * (1.0 - p))
                    };
                }
                y * self.sqrt_h
            }
        }
    }
}

/// `P(N > y)` for a standard normal `N`.
#[inline]
fn upper_tail(y: f64) -> f64 {
    0.5 * erfc(y / std::f64::consts::SQRT_2)
}

/// Simulates `steps` steps of length `h` starting from `r0`.
pub fn simulate_rate_path<R: Rng>(
    params: &ModelParams,
    steps: usize,
    h: f64,
    scheme: McScheme,
    rng: &mut R,
) -> RatePath {
    let stepper = CirStepper::new(params, h, scheme);
    let mut x = params.r0;
    let mut rates = Vec::with_capacity(steps + 1);
    rates.push(x);
    let (mut integral, mut driver) = (0.0, 0.0);
    for _ in 0..steps {
        let prev = x.max(0.0);
        driver += stepper.step(&mut x, rng);
        let r = x.max(0.0);
        integral += 0.5 * (prev + r) * h;
        rates.push(r);
    }
    RatePath {
        rates,
        integral,
        driver,
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Runs `f` over `n_paths` independent streams and reduces the returned
/// samples deterministically.
fn estimate<F>(seed: u64, n_paths: u64, f: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = n_paths.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for path in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut rng = base.clone();
                rng.set_stream(path);
                m.push(f(&mut rng));
            }
            m
        })
        .collect();
    partial.into_iter().fold(Moments::default(), Moments::merge)
}

fn check(params: &ModelParams, contract: &ContractSpec, mc: &McConfig) -> Result<()> {
    params.validate()?;
    contract.validate()?;
    if contract.exercise != Exercise::European {
        return Err(Error::AmericanNotSupported);
    }
    if mc.n_paths == 0 || mc.steps == 0 {
        return Err(Error::EmptySimulation);
    }
    Ok(())
}

/// Discounted expected payoff of a European contract.
pub fn mc_price(params: &ModelParams, contract: &ContractSpec, mc: &McConfig) -> Result<McResult> {
    check(params, contract, mc)?;
    let t = contract.maturity;
    let h = t / mc.steps as f64;
    let stepper = CirStepper::new(params, h, mc.scheme);
    let rho_bar = (1.0 - params.rho * params.rho).sqrt();
    let log_s0 = params.s0.ln();
    let sigma_s = params.sigma_s;

    let m = estimate(mc.seed, mc.n_paths, |rng| {
        let mut x = params.r0;
        let (mut integral, mut driver) = (0.0, 0.0);
        let mut prev = x;
        for _ in 0..mc.steps {
            driver += stepper.step(&mut x, rng);
            let r = x.max(0.0);
            integral += 0.5 * (prev + r) * h;
            prev = r;
        }
        let n: f64 = rng.sample(StandardNormal);
        let log_s = log_s0 + integral - 0.5 * sigma_s * sigma_s * t
            + sigma_s * (params.rho * driver + rho_bar * t.sqrt() * n);
        (-integral).exp() * contract.payoff(log_s.exp())
    });
    Ok(result(m, mc))
}

/// Mean and variance of `r_T` over simulated paths, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalRateStats {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

/// Sample moments of the terminal rate, for checking a scheme against the
/// closed-form CIR law.
pub fn terminal_rate_stats(params: &ModelParams, maturity: f64, mc: &McConfig) -> Result<TerminalRateStats> {
    params.validate()?;
    if mc.n_paths < 2 || mc.steps == 0 {
        return Err(Error::EmptySimulation);
    }
    let h = maturity / mc.steps as f64;
    let stepper = CirStepper::new(params, h, mc.scheme);
    let finals: Vec<f64> = {
        let base = ChaCha8Rng::seed_from_u64(mc.seed);
        (0..mc.n_paths)
            .into_par_iter()
            .map(|path| {
                let mut rng = base.clone();
                rng.set_stream(path);
                let mut x = params.r0;
                for _ in 0..mc.steps {
                    stepper.step(&mut x, &mut rng);
                }
                x.max(0.0)
            })
            .collect()
    };
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let (mut c2, mut c4) = (0.0, 0.0);
    for &x in &finals {
        let d = (x - mean).powi(2);
        c2 += d;
        c4 += d * d;
    }
    let variance = c2 / (n - 1.0);
    let m4 = c4 / n;
    Ok(TerminalRateStats {
        mean,
        mean_se: (variance / n).sqrt(),
        variance,
        variance_se: ((m4 - variance * variance).max(0.0) / n).sqrt(),
    })
}

/// Closed-form mean and variance of the CIR rate at `t`.
pub fn cir_moments(params: &ModelParams, t: f64) -> (f64, f64) {
    let (k, th, s2, r0) = (params.kappa, params.theta, params.sigma_r.powi(2), params.r0);
    let e = (-k * t).exp();
    let mean = th + (r0 - th) * e;
    let var = r0 * s2 / k * (e - e * e) + th * s2 / (2.0 * k) * (1.0 - e).powi(2);
    (mean, var)
}

fn result(m: Moments, mc: &McConfig) -> McResult {
    let std_error = if m.n > 1 {
        (m.m2 / (m.n - 1) as f64 / m.n as f64).sqrt()
    } else {
        0.0
    };
    McResult {
        price: m.mean,
        std_error,
        n_paths: m.n,
        scheme: mc.scheme,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OptionKind;

    fn cfg(n_paths: u64, steps: usize, scheme: McScheme) -> McConfig {
        McConfig {
            n_paths,
            steps,
            seed: 7,
            scheme,
        }
    }

    #[test]
    fn deterministic_limit_follows_the_ode() {
        let p = ModelParams::reference(1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = simulate_rate_path(&p, 300, 1.0 / 300.0, McScheme::WeakSecondOrder, &mut rng);
        let exact = 0.1 - 0.04 * (-0.5f64).exp();
        assert!((path.rates[300] - exact).abs() < 1e-6);
        // Euler is first order in h on the ODE.
        let path = simulate_rate_path(&p, 300, 1.0 / 300.0, McScheme::FullTruncationEuler, &mut rng);
        assert!((path.rates[300] - exact).abs() < 1e-4);
    }

    #[test]
    fn paths_stay_non_negative_for_every_feller_ratio() {
        for sigma_r in [0.08, 0.5, 1.0, 3.0] {
            let p = ModelParams::reference(sigma_r);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for scheme in [McScheme::FullTruncationEuler, McScheme::WeakSecondOrder] {
                for _ in 0..200 {
                    let path = simulate_rate_path(&p, 100, 0.01, scheme, &mut rng);
                    assert!(path.rates.iter().all(|&r| r >= 0.0 && r.is_finite()));
                    assert!(path.integral >= 0.0);
                }
            }
        }
    }

    #[test]
    fn two_point_law_matches_conditional_moments() {
        let p = ModelParams::reference(3.0);
        let st = CirStepper::new(&p, 0.01, McScheme::WeakSecondOrder);
        assert!(st.threshold > 0.0);
        let x0 = st.threshold / 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        let (mut s1, mut s2, mut sd) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let mut x = x0;
            let dz = st.step(&mut x, &mut rng);
            s1 += x;
            s2 += x * x;
            sd += dz * dz;
        }
        let a = p.kappa * p.theta;
        let m1 = x0 * st.full_decay + a * st.psi;
        let m2 = m1 * m1 + 9.0 * st.psi * (a * st.psi / 2.0 + x0 * st.full_decay);
        assert!((s1 / n as f64 / m1 - 1.0).abs() < 0.01);
        assert!((s2 / n as f64 / m2 - 1.0).abs() < 0.02);
        assert!((sd / n as f64 / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn terminal_rate_matches_closed_form() {
        let p = ModelParams::reference(0.5);
        let (mean, var) = cir_moments(&p, 1.0);
        assert!((cir_moments(&ModelParams::reference(0.08), 1.0).0 - 0.075_738_773_611_494_67).abs() < 1e-15);
        for scheme in [McScheme::WeakSecondOrder, McScheme::FullTruncationEuler] {
            let s = terminal_rate_stats(&p, 1.0, &cfg(200_000, 50, scheme)).unwrap();
            assert!((s.mean - mean).abs() < 4.0 * s.mean_se, "{scheme:?} {} {mean}", s.mean);
            assert!((s.variance - var).abs() < 4.0 * s.variance_se, "{scheme:?} {} {var}", s.variance);
        }
    }

    #[test]
    fn reproducible_and_independent_of_thread_count() {
        let p = ModelParams::reference(0.5);
        let c = ContractSpec::european_put(100.0, 1.0);
        let mc = cfg(20_000, 20, McScheme::WeakSecondOrder);
        let a = mc_price(&p, &c, &mc).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| mc_price(&p, &c, &mc).unwrap());
        assert_eq!(a.price.to_bits(), b.price.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert!(a.std_error > 0.0);
        assert_eq!(a.n_paths, 20_000);
    }

    /// Closed-form CIR zero-coupon bond `E[exp(−∫₀ᵀ r dt)]`.
    fn cir_bond(p: &ModelParams, t: f64) -> f64 {
        let s2 = p.sigma_r * p.sigma_r;
        let g = (p.kappa * p.kappa + 2.0 * s2).sqrt();
        let e = (g * t).exp_m1();
        let den = (g + p.kappa) * e + 2.0 * g;
        let a = (2.0 * g * ((p.kappa + g) * t / 2.0).exp() / den).powf(2.0 * p.kappa * p.theta / s2);
        a * (-2.0 * e / den * p.r0).exp()
    }

    #[test]
    fn put_call_parity_against_bond_price() {
        for sigma_r in [0.5, 3.0] {
            let p = ModelParams::reference(sigma_r);
            let mc = cfg(100_000, 100, McScheme::WeakSecondOrder);
            let put = mc_price(&p, &ContractSpec::european_put(100.0, 1.0), &mc).unwrap();
            let call = ContractSpec::new(100.0, 1.0, OptionKind::Call, Exercise::European);
            let call = mc_price(&p, &call, &mc).unwrap();
            let parity = 100.0 - 100.0 * cir_bond(&p, 1.0);
            let diff = call.price - put.price;
            assert!(
                (diff - parity).abs() < 4.0 * (call.std_error + put.std_error),
                "{sigma_r}: {diff} vs {parity}"
            );
        }
    }

    #[test]
    fn equity_noise_keeps_target_correlation() {
        let p = ModelParams::reference(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho_bar = (1.0 - p.rho * p.rho).sqrt();
        let n = 100_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let w = simulate_rate_path(&p, 50, 0.02, McScheme::WeakSecondOrder, &mut rng).driver;
            let e: f64 = rng.sample(StandardNormal);
            let equity = p.rho * w + rho_bar * e;
            sxy += equity * w;
            sxx += equity * equity;
            syy += w * w;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!((corr - p.rho).abs() < 0.01, "{corr}");
    }

    #[test]
    fn near_zero_strike_put_is_worthless() {
        let p = ModelParams::reference(0.5);
        let c = ContractSpec::european_put(1e-6, 1.0);
        let r = mc_price(&p, &c, &cfg(1000, 10, McScheme::WeakSecondOrder)).unwrap();
        assert!(r.price.abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let p = ModelParams::reference(0.5);
        let c = ContractSpec::american_put(100.0, 1.0);
        let mc = McConfig::default();
        assert_eq!(mc_price(&p, &c, &mc), Err(Error::AmericanNotSupported));
        let c = ContractSpec::european_put(100.0, 1.0);
        assert_eq!(
            mc_price(&p, &c, &cfg(0, 10, McScheme::WeakSecondOrder)),
            Err(Error::EmptySimulation)
        );
        assert!("euler".parse::<McScheme>().is_ok());
        assert!("x".parse::<McScheme>().is_err());
        let call = ContractSpec::new(100.0, 1.0, OptionKind::Call, Exercise::European);
        assert!(mc_price(&p, &call, &cfg(100, 5, McScheme::FullTruncationEuler)).is_ok());
    }
}
