//! Convergence tables: a grid of (rate volatility, steps, method) cells plus
//! an optional Monte Carlo benchmark per rate volatility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::Method;
use crate::mc::{mc_price, McConfig, McResult};
use crate::model::{validate, ClampPolicy, ContractSpec, Exercise, LatticeConfig, ModelParams};
use crate::pricer::price;

pub const REFERENCE_SIGMA_R: [f64; 4] = [0.08, 0.5, 1.0, 3.0];
pub const REFERENCE_STEPS: [usize; 5] = [50, 100, 150, 200, 300];

/// Everything needed to recompute a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub table_id: Option<u8>,
    /// Model constants; `sigma_r` is replaced by each entry of the sweep.
    pub params: ModelParams,
    pub contract: ContractSpec,
    pub sigma_r: Vec<f64>,
    pub steps: Vec<usize>,
    pub methods: Vec<Method>,
    pub theta_star: Option<f64>,
    #[serde(default)]
    pub clamp_policy: ClampPolicy,
    pub mc: Option<McConfig>,
}

impl SweepSpec {
    /// One of the four reference tables: European puts at `T = 1` and `T = 2`,
    /// then American puts at the same maturities, all struck at 100.
    pub fn reference(id: u8) -> Option<Self> {
        let (maturity, exercise) = match id {
            1 => (1.0, Exercise::European),
            2 => (2.0, Exercise::European),
            3 => (1.0, Exercise::American),
            4 => (2.0, Exercise::American),
            _ => return None,
        };
        Some(Self {
            table_id: Some(id),
            params: ModelParams::default(),
            contract: ContractSpec::new(100.0, maturity, crate::model::OptionKind::Put, exercise),
            sigma_r: REFERENCE_SIGMA_R.to_vec(),
            steps: REFERENCE_STEPS.to_vec(),
            methods: Method::ALL.to_vec(),
            theta_star: None,
            clamp_policy: ClampPolicy::default(),
            mc: None,
        })
    }

    fn params_at(&self, sigma_r: f64) -> ModelParams {
        ModelParams {
            sigma_r,
            ..self.params
        }
    }

    fn lattice(&self, params: &ModelParams, steps: usize) -> LatticeConfig {
        let mut cfg = LatticeConfig::new(steps, params).with_clamp_policy(self.clamp_policy);
        if let Some(ts) = self.theta_star {
            cfg = cfg.with_theta_star(ts);
        }
        cfg
    }

    /// Rejects inputs that would fail in every cell.
    pub fn validate(&self) -> Result<()> {
        for &s in &self.sigma_r {
            let p = self.params_at(s);
            for &n in &self.steps {
                validate(&p, &self.contract, &self.lattice(&p, n))?;
            }
        }
        if self.mc.is_some() && self.contract.exercise != Exercise::European {
            return Err(crate::Error::AmericanNotSupported);
        }
        Ok(())
    }
}

/// One tree price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub sigma_r: f64,
    pub steps: usize,
    pub method: Method,
    pub price: f64,
    pub finite: bool,
    pub clamp_count: u64,
    pub near_zero_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub sigma_r: f64,
    pub result: McResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableOutput {
    /// Ordered by `(sigma_r, steps, method)` in the order given by the spec.
    pub cells: Vec<Cell>,
    pub mc: Vec<McCell>,
}

impl TableOutput {
    pub fn cell(&self, sigma_r: f64, steps: usize, method: Method) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.sigma_r == sigma_r && c.steps == steps && c.method == method)
    }

    pub fn mc_at(&self, sigma_r: f64) -> Option<&McResult> {
        self.mc.iter().find(|c| c.sigma_r == sigma_r).map(|c| &c.result)
    }
}

/// Prices every cell. A cell that fails inside the lattice is reported as
/// non-finite rather than aborting the table.
pub fn run_sweep(spec: &SweepSpec) -> Result<TableOutput> {
    spec.validate()?;
    let jobs: Vec<(f64, usize, Method)> = spec
        .sigma_r
        .iter()
        .flat_map(|&s| {
            spec.steps
                .iter()
                .flat_map(move |&n| spec.methods.iter().map(move |&m| (s, n, m)))
        })
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(sigma_r, steps, method)| {
            let p = spec.params_at(sigma_r);
            match price(method, &p, &spec.contract, &spec.lattice(&p, steps)) {
                Ok(r) => Cell {
                    sigma_r,
                    steps,
                    method,
                    price: r.price,
                    finite: r.is_finite(),
                    clamp_count: r.diagnostics.clamp_count(),
                    near_zero_count: r.diagnostics.near_zero_nodes,
                },
                Err(_) => Cell {
                    sigma_r,
                    steps,
                    method,
                    price: f64::NAN,
                    finite: false,
                    clamp_count: 0,
                    near_zero_count: 0,
                },
            }
        })
        .collect();
    let mut mc = Vec::new();
    if let Some(cfg) = &spec.mc {
        for &sigma_r in &spec.sigma_r {
            let result = mc_price(&spec.params_at(sigma_r), &spec.contract, cfg)?;
            mc.push(McCell { sigma_r, result });
        }
    }
    Ok(TableOutput { cells, mc })
}

fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "nan".into()
    }
}

fn fixed(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "nan".into()
    }
}

/// CSV with header `sigma_r,N,method,price,finite,clamp_count,near_zero_count`.
/// Benchmark rows carry method `mc` and the simulation step count as `N`.
pub fn to_csv(spec: &SweepSpec, out: &TableOutput) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(["sigma_r", "N", "method", "price", "finite", "clamp_count", "near_zero_count"])
        .expect("in-memory write");
    for c in &out.cells {
        w.write_record([
            number(c.sigma_r),
            c.steps.to_string(),
            c.method.to_string(),
            number(c.price),
            c.finite.to_string(),
            c.clamp_count.to_string(),
            c.near_zero_count.to_string(),
        ])
        .expect("in-memory write");
    }
    if let Some(cfg) = &spec.mc {
        for m in &out.mc {
            w.write_record([
                number(m.sigma_r),
                cfg.steps.to_string(),
                "mc".into(),
                number(m.result.price),
                m.result.price.is_finite().to_string(),
                "0".into(),
                "0".into(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Markdown table with one block of rows per rate volatility and one column
/// per method; the benchmark, if any, appears as `center ± 1.96·SE` on the
/// first row of each block.
pub fn to_markdown(spec: &SweepSpec, out: &TableOutput) -> String {
    let mut s = String::new();
    let c = &spec.contract;
    let what = match c.exercise {
        Exercise::European => "European",
        Exercise::American => "American",
    };
    let kind = match c.kind {
        crate::model::OptionKind::Put => "put",
        crate::model::OptionKind::Call => "call",
    };
    s.push_str(&format!(
        "{what} {kind} options, T={}, K={}, S0={}, sigma_S={}, r0={}, theta={}, kappa={}, rho={}\n\n",
        c.maturity, c.strike, spec.params.s0, spec.params.sigma_s, spec.params.r0,
        spec.params.theta, spec.params.kappa, spec.params.rho
    ));
    let with_mc = spec.mc.is_some();
    s.push_str("| sigma_r | N |");
    for m in &spec.methods {
        s.push_str(&format!(" {} |", m.as_str().to_ascii_uppercase()));
    }
    if with_mc {
        s.push_str(" MC |");
    }
    s.push('\n');
    s.push_str("|---|---|");
    for _ in 0..spec.methods.len() + with_mc as usize {
        s.push_str("---|");
    }
    s.push('\n');
    for &sigma_r in &spec.sigma_r {
        for (row, &n) in spec.steps.iter().enumerate() {
            let label = if row == 0 { format!("{sigma_r:.2}") } else { String::new() };
            s.push_str(&format!("| {label} | {n} |"));
            for &m in &spec.methods {
                let v = out.cell(sigma_r, n, m).map(|c| fixed(c.price)).unwrap_or_default();
                s.push_str(&format!(" {v} |"));
            }
            if with_mc {
                let v = match (row, out.mc_at(sigma_r)) {
                    (0, Some(r)) => format!("{} ± {:.6}", fixed(r.price), r.half_width()),
                    _ => String::new(),
                };
                s.push_str(&format!(" {v} |"));
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepSpec {
        SweepSpec {
            sigma_r: vec![0.08, 3.0],
            steps: vec![10, 20],
            ..SweepSpec::reference(1).unwrap()
        }
    }

    #[test]
    fn reference_tables() {
        assert!(SweepSpec::reference(0).is_none());
        assert!(SweepSpec::reference(5).is_none());
        let t4 = SweepSpec::reference(4).unwrap();
        assert_eq!(t4.contract.strike, 100.0);
        assert_eq!(t4.contract.maturity, 2.0);
        assert_eq!(t4.contract.exercise, Exercise::American);
    }

    #[test]
    fn cells_are_ordered() {
        let spec = small();
        let out = run_sweep(&spec).unwrap();
        let keys: Vec<_> = out.cells.iter().map(|c| (c.sigma_r, c.steps, c.method)).collect();
        let mut expected = vec![];
        for s in [0.08, 3.0] {
            for n in [10, 20] {
                for m in Method::ALL {
                    expected.push((s, n, m));
                }
            }
        }
        assert_eq!(keys, expected);
    }

    #[test]
    fn csv_and_markdown_shapes() {
        let mut spec = small();
        spec.mc = Some(McConfig {
            n_paths: 2000,
            steps: 10,
            ..McConfig::default()
        });
        let out = run_sweep(&spec).unwrap();
        let csv = to_csv(&spec, &out);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "sigma_r,N,method,price,finite,clamp_count,near_zero_count");
        assert_eq!(lines.len(), 1 + 12 + 2);
        assert!(!csv.contains('\r'));
        let md = to_markdown(&spec, &out);
        assert!(md.contains("| sigma_r | N | WEI | HST | ACZ | MC |"));
        assert_eq!(md.matches(" ± ").count(), 2);
    }

    #[test]
    fn american_with_benchmark_is_rejected() {
        let mut spec = SweepSpec::reference(3).unwrap();
        spec.mc = Some(McConfig::default());
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn non_finite_is_rendered_as_nan() {
        assert_eq!(fixed(f64::NAN), "nan");
        assert_eq!(number(f64::INFINITY), "nan");
    }
}
