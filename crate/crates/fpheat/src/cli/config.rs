//! Sectioned `key = value` experiment configs.
//!
//! Grammar (one statement per line):
//!   - `# ...` comment lines and blank lines are ignored;
//!   - `[section]` opens a section (`params`, `grid`, `evolve`, `quad`, or
//!     an experiment-specific section);
//!   - `key = value` assigns inside the current section (top level before
//!     any header);
//!   - duplicate keys, unknown keys, type mismatches and constraint
//!     violations are rejected with line numbers; validation finishes
//!     before any computation starts.

use crate::error::{Error, Result};
use crate::evolution::{DtPolicy, EvolveControls};
use crate::grid::Grid;
use crate::params::{make_params, FracParams};
use crate::quadrature::QuadConfig;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    OperatorValidation,
    Comparison,
    RegularitySweep,
    BarrierCheck,
    ConvolutionDemo,
    LipschitzProbe,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "operator-validation" => Some(Self::OperatorValidation),
            "comparison" => Some(Self::Comparison),
            "regularity-sweep" => Some(Self::RegularitySweep),
            "barrier-check" => Some(Self::BarrierCheck),
            "convolution-demo" => Some(Self::ConvolutionDemo),
            "lipschitz-probe" => Some(Self::LipschitzProbe),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::OperatorValidation => "operator-validation",
            Self::Comparison => "comparison",
            Self::RegularitySweep => "regularity-sweep",
            Self::BarrierCheck => "barrier-check",
            Self::ConvolutionDemo => "convolution-demo",
            Self::LipschitzProbe => "lipschitz-probe",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::symmetric_1d(self.half_width, self.nodes)
    }
}

#[derive(Debug, Clone)]
pub struct QuadSpec {
    pub eps_factor: f64,
    pub ring_count: usize,
    pub tol: f64,
    pub r_tail_factor: f64,
}

impl QuadSpec {
    pub fn build(&self, grid: &Grid) -> Result<QuadConfig> {
        QuadConfig::new(
            self.eps_factor * grid.h(),
            self.ring_count,
            self.tol,
            self.r_tail_factor * (0..grid.d()).map(|a| grid.half_width(a)).fold(0.0, f64::max),
        )
    }
}

/// Experiment-specific knobs (validated per experiment).
#[derive(Debug, Clone, Default)]
pub struct Extras {
    /// comparison: number of random ordered pairs
    pub pairs: usize,
    /// regularity sweep: lattice of (p, s) points
    pub sweep: Vec<(f64, f64)>,
    /// regularity sweep: also run the h/2 stability check
    pub refine: bool,
    /// barrier: η and L₁
    pub eta: f64,
    pub l1: f64,
    /// convolution: ε
    pub eps: f64,
    /// lipschitz probe: L₂, β*, bisection tolerance
    pub l2: f64,
    pub beta_star: f64,
    pub bisect_tol: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub params: FracParams,
    pub grid: GridSpec,
    pub evolve: EvolveControls,
    pub dt_policy_raw: String,
    pub quad: QuadSpec,
    pub extras: Extras,
    /// raw text, echoed into the manifest
    pub raw: String,
}

struct RawConfig {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            if let Some(name) = stripped.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::Config {
                        line: lineno,
                        msg: format!("malformed section header: {stripped}"),
                    });
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config {
                    line: lineno,
                    msg: format!("expected `key = value`, got: {stripped}"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if let Some((prev_line, _)) =
                entries.insert((section.clone(), key.clone()), (lineno, value))
            {
                return Err(Error::Config {
                    line: lineno,
                    msg: format!(
                        "duplicate key `{key}` in section `[{section}]`: first set at line {prev_line}"
                    ),
                });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String)> {
        self.take(section, key).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("missing required key `{key}` in section `[{section}]`"),
        })
    }

    fn finish(self) -> Result<()> {
        if let Some(((section, key), (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Config {
                line,
                msg: format!("unknown key `{key}` in section `[{section}]`"),
            });
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::Config {
        line,
        msg: format!("value for `{key}` is not a valid number: {v}"),
    })
}

fn constraint(line: usize, msg: String) -> Error {
    Error::Config { line, msg }
}

/// Parses and fully validates a config; every referenced block is checked
/// against its module's constraints before anything runs.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::parse(text)?;

    let (exp_line, exp_name) = raw.require("", "experiment")?;
    let experiment = Experiment::parse(&exp_name).ok_or_else(|| Error::Config {
        line: exp_line,
        msg: format!(
            "unknown experiment `{exp_name}` (expected operator-validation, comparison, \
             regularity-sweep, barrier-check, convolution-demo, lipschitz-probe)"
        ),
    })?;
    let seed = match raw.take("", "seed") {
        Some((l, v)) => parse_num::<u64>(l, "seed", &v)?,
        None => 0,
    };
    let out = raw.take("", "out").map(|(_, v)| PathBuf::from(v));

    // [params]
    let (ls, s) = raw.require("params", "s")?;
    let s: f64 = parse_num(ls, "s", &s)?;
    let (lp, p) = raw.require("params", "p")?;
    let p: f64 = parse_num(lp, "p", &p)?;
    let d = match raw.take("params", "d") {
        Some((l, v)) => parse_num::<usize>(l, "d", &v)?,
        None => 1,
    };
    let params = make_params(s, p, d).map_err(|e| constraint(lp, e.to_string()))?;

    // [grid]
    let (lh, hw) = raw.require("grid", "half_width")?;
    let half_width: f64 = parse_num(lh, "half_width", &hw)?;
    let (ln, nodes) = raw.require("grid", "nodes")?;
    let nodes: usize = parse_num(ln, "nodes", &nodes)?;
    let grid = GridSpec { half_width, nodes };
    grid.build().map_err(|e| constraint(ln, e.to_string()))?;

    // [evolve]
    let t_end = match raw.take("evolve", "t_end") {
        Some((l, v)) => parse_num::<f64>(l, "t_end", &v)?,
        None => 0.01,
    };
    let mut evolve = EvolveControls::new(t_end);
    let mut dt_policy_raw = "adaptive".to_string();
    if let Some((l, v)) = raw.take("evolve", "dt_policy") {
        dt_policy_raw = v.clone();
        if v == "adaptive" {
            evolve.dt_policy = DtPolicy::AdaptiveMonotone;
        } else if let Some(rest) = v.strip_prefix("fixed") {
            let dt: f64 = parse_num(l, "dt_policy", rest.trim())?;
            evolve.dt_policy = DtPolicy::Fixed(dt);
        } else {
            return Err(Error::Config {
                line: l,
                msg: format!("dt_policy must be `adaptive` or `fixed <dt>`, got {v}"),
            });
        }
    }
    if let Some((l, v)) = raw.take("evolve", "osc_floor") {
        evolve.osc_floor = Some(parse_num::<f64>(l, "osc_floor", &v)?);
    }
    if let Some((l, v)) = raw.take("evolve", "store_every") {
        evolve.store_every = parse_num::<usize>(l, "store_every", &v)?;
    }
    if let Some((l, v)) = raw.take("evolve", "dt_max") {
        evolve.dt_max = parse_num::<f64>(l, "dt_max", &v)?;
    }
    evolve.validate().map_err(|e| constraint(0, e.to_string()))?;

    // [quad]
    let quad = QuadSpec {
        eps_factor: match raw.take("quad", "eps_factor") {
            Some((l, v)) => parse_num(l, "eps_factor", &v)?,
            None => 0.5,
        },
        ring_count: match raw.take("quad", "ring_count") {
            Some((l, v)) => parse_num(l, "ring_count", &v)?,
            None => 8,
        },
        tol: match raw.take("quad", "tol") {
            Some((l, v)) => parse_num(l, "tol", &v)?,
            None => 1e-7,
        },
        r_tail_factor: match raw.take("quad", "r_tail_factor") {
            Some((l, v)) => parse_num(l, "r_tail_factor", &v)?,
            None => 64.0,
        },
    };
    let g = grid.build()?;
    quad.build(&g).map_err(|e| constraint(0, e.to_string()))?;

    // experiment-specific extras
    let mut extras = Extras {
        pairs: 20,
        sweep: vec![(params.p(), params.s())],
        refine: false,
        eta: 0.1,
        l1: 1.0,
        eps: 0.25,
        l2: 10.0,
        beta_star: 1.0,
        bisect_tol: 1e-3,
        ..Default::default()
    };
    if let Some((l, v)) = raw.take("comparison", "pairs") {
        extras.pairs = parse_num(l, "pairs", &v)?;
        if extras.pairs == 0 {
            return Err(constraint(l, "pairs must be at least 1".into()));
        }
    }
    if let Some((l, v)) = raw.take("sweep", "p_list") {
        let ps: Vec<f64> = v
            .split_whitespace()
            .map(|t| parse_num::<f64>(l, "p_list", t))
            .collect::<Result<_>>()?;
        let (l2s, v2) = raw.require("sweep", "s_list")?;
        let ss: Vec<f64> = v2
            .split_whitespace()
            .map(|t| parse_num::<f64>(l2s, "s_list", t))
            .collect::<Result<_>>()?;
        if ps.len() != ss.len() {
            return Err(constraint(l, "p_list and s_list must have equal length".into()));
        }
        extras.sweep = ps.into_iter().zip(ss).collect();
        for &(pp, sv) in &extras.sweep {
            make_params(sv, pp, d).map_err(|e| constraint(l, e.to_string()))?;
        }
    }
    if let Some((l, v)) = raw.take("sweep", "refine") {
        extras.refine = match v.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(constraint(l, format!("refine must be true/false, got {v}"))),
        };
    }
    if let Some((l, v)) = raw.take("barrier", "eta") {
        extras.eta = parse_num(l, "eta", &v)?;
    }
    if let Some((l, v)) = raw.take("barrier", "l1") {
        extras.l1 = parse_num(l, "l1", &v)?;
    }
    if let Some((l, v)) = raw.take("convolution", "eps") {
        extras.eps = parse_num(l, "eps", &v)?;
        if extras.eps <= 0.0 {
            return Err(constraint(l, "eps must be positive".into()));
        }
    }
    if let Some((l, v)) = raw.take("lipschitz", "l2") {
        extras.l2 = parse_num(l, "l2", &v)?;
    }
    if let Some((l, v)) = raw.take("lipschitz", "beta_star") {
        extras.beta_star = parse_num(l, "beta_star", &v)?;
    }
    if let Some((l, v)) = raw.take("lipschitz", "tol") {
        extras.bisect_tol = parse_num(l, "tol", &v)?;
    }

    raw.finish()?;

    Ok(ExperimentConfig {
        experiment,
        seed,
        out,
        params,
        grid,
        evolve,
        dt_policy_raw,
        quad,
        extras,
        raw: text.to_string(),
    })
}
