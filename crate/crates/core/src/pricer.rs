//! Backward induction over any [`BivariateTree`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acz::AczTree;
use crate::error::Result;
use crate::lattice::{BivariateTree, Method, Regime};
use crate::legacy::{HstTree, WeiTree};
use crate::model::{validate, ContractSpec, Exercise, LatticeConfig, ModelParams, ValidatedInputs};

/// Counters collected while walking the tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Nodes whose rate up-probability ratio was clamped.
    pub rate_clamps: u64,
    /// Nodes whose equity up-probability ratio was clamped.
    pub equity_clamps: u64,
    /// Nodes whose covariance correction was projected onto the simplex.
    pub joint_clamps: u64,
    /// Nodes priced with the near-zero product law.
    pub near_zero_nodes: u64,
    /// The price is NaN or infinite.
    pub non_finite: bool,
    pub wall_time_secs: f64,
}

impl Diagnostics {
    pub fn clamp_count(&self) -> u64 {
        self.rate_clamps + self.equity_clamps + self.joint_clamps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub price: f64,
    pub method: Method,
    pub steps: usize,
    pub diagnostics: Diagnostics,
}

impl PriceResult {
    pub fn is_finite(&self) -> bool {
        !self.diagnostics.non_finite
    }
}

/// Builds the tree for `method` and prices the contract on it.
pub fn price(
    method: Method,
    params: &ModelParams,
    contract: &ContractSpec,
    config: &LatticeConfig,
) -> Result<PriceResult> {
    let inputs = validate(params, contract, config)?;
    price_validated(method, &inputs)
}

pub fn price_validated(method: Method, inputs: &ValidatedInputs) -> Result<PriceResult> {
    let start = Instant::now();
    let mut result = match method {
        Method::Acz => backward_induction(&AczTree::new(inputs)?, &inputs.contract)?,
        Method::Wei => backward_induction(&WeiTree::new(inputs), &inputs.contract)?,
        Method::Hst => backward_induction(&HstTree::new(inputs), &inputs.contract)?,
    };
    result.diagnostics.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Prices over a list of step counts. Each entry succeeds or fails on its own.
pub fn price_curve(
    method: Method,
    params: &ModelParams,
    contract: &ContractSpec,
    steps: &[usize],
    theta_star: Option<f64>,
) -> Vec<Result<PriceResult>> {
    steps
        .iter()
        .map(|&n| {
            let mut config = LatticeConfig::new(n, params);
            if let Some(ts) = theta_star {
                config = config.with_theta_star(ts);
            }
            price(method, params, contract, &config)
        })
        .collect()
}

/// Rolls the value layer back from maturity, discounting each node at its own
/// rate over the step and, for American exercise, comparing with the
/// intrinsic value at every layer including the root.
pub fn backward_induction<T: BivariateTree + ?Sized>(
    tree: &T,
    contract: &ContractSpec,
) -> Result<PriceResult> {
    let n = tree.steps();
    let h = tree.h();
    let american = contract.exercise == Exercise::American;
    let mut diag = Diagnostics::default();

    let mut next: Vec<f64> = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for k in 0..=n {
            next.push(contract.payoff(tree.state(n, j, k).0));
        }
    }
    let mut current: Vec<f64> = Vec::with_capacity(n * n);

    for i in (0..n).rev() {
        let width = i + 1;
        let next_width = i + 2;
        current.clear();
        for j in 0..width {
            for k in 0..width {
                let quad = tree.transition(i, j, k)?;
                diag.rate_clamps += quad.rate_clamped as u64;
                diag.equity_clamps += quad.equity_clamped as u64;
                diag.joint_clamps += quad.clamped as u64;
                diag.near_zero_nodes += (quad.regime == Regime::NearZero) as u64;

                let mut expectation = 0.0;
                for (q, (jn, kn)) in quad.q.iter().zip(quad.successors()) {
                    expectation += q * next[jn * next_width + kn];
                }
                let (s, r) = tree.state(i, j, k);
                let continuation = (-r * h).exp() * expectation;
                let value = if american && !continuation.is_nan() {
                    continuation.max(contract.payoff(s))
                } else {
                    continuation
                };
                current.push(value);
            }
        }
        std::mem::swap(&mut next, &mut current);
    }

    let price = next[0];
    diag.non_finite = !price.is_finite();
    Ok(PriceResult {
        price,
        method: tree.method(),
        steps: n,
        diagnostics: diag,
    })
}
