//! Error maps and the error/cost arithmetic used by the routing objective.
//!
//! Costs live in "log-success" space: a movement with error rate `ε`
//! costs `-ln(1 - ε)`, so a schedule's total cost `C` converts back to an
//! accumulated error `1 - exp(-C)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::HardwareGraph;

/// Average CNOT duration on a Heron-class device, seconds.
pub const DEFAULT_CNOT_DURATION_S: f64 = 79e-9;

/// Upper bound on rejection-sampling attempts for one truncated draw.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1_000_000;

/// CNOTs per SWAP gate; also the number of CNOT durations a qubit idles per
/// SWAP layer.
pub const CNOTS_PER_SWAP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    /// SWAP gate error only.
    Simple,
    /// Split per-qubit SWAP error plus idle decoherence.
    Extended,
}

impl std::str::FromStr for ErrorModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(ErrorModel::Simple),
            "extended" => Ok(ErrorModel::Extended),
            _ => Err(Error::InvalidArgument(format!("unknown error model '{s}'"))),
        }
    }
}

impl std::fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorModel::Simple => "simple",
            ErrorModel::Extended => "extended",
        })
    }
}

/// Linear-space normal truncated to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Centre of the log10-normal CNOT error distribution.
    pub cnot_mean: f64,
    pub cnot_log10_sigma: f64,
    /// Inclusive truncation bounds; `None` truncates to the open interval (0, 1).
    pub cnot_bounds: Option<(f64, f64)>,
    /// Microseconds.
    pub t1: TruncatedNormal,
    /// Microseconds.
    pub t2: TruncatedNormal,
    pub cnot_duration_s: f64,
}

impl NoiseParams {
    /// IBM Heron-like calibration statistics.
    pub fn heron() -> Self {
        NoiseParams {
            cnot_mean: 0.007,
            cnot_log10_sigma: 0.3115,
            cnot_bounds: Some((0.0018, 0.0876)),
            t1: TruncatedNormal { mean: 176.0, sigma: 69.0, lo: 3.0, hi: 310.0 },
            t2: TruncatedNormal { mean: 140.0, sigma: 71.0, lo: 6.0, hi: 321.0 },
            cnot_duration_s: DEFAULT_CNOT_DURATION_S,
        }
    }

    /// Wide log-normal CNOT spread around 0.001 used for the layout sweeps.
    /// Decoherence parameters are borrowed from [`NoiseParams::heron`].
    pub fn melbourne_style() -> Self {
        NoiseParams { cnot_mean: 0.001, cnot_log10_sigma: 0.5, cnot_bounds: None, ..Self::heron() }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "heron" => Ok(Self::heron()),
            "melbourne-style" | "melbourne" => Ok(Self::melbourne_style()),
            _ => Err(Error::InvalidArgument(format!("unknown noise preset '{name}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNoise(m));
        if !(self.cnot_mean > 0.0 && self.cnot_mean < 1.0) {
            return bad(format!("cnot mean {} outside (0, 1)", self.cnot_mean));
        }
        if !(self.cnot_log10_sigma >= 0.0) {
            return bad(format!("negative cnot sigma {}", self.cnot_log10_sigma));
        }
        if let Some((lo, hi)) = self.cnot_bounds {
            if !(0.0 < lo && lo < hi && hi < 1.0) {
                return bad(format!("cnot bounds [{lo}, {hi}] must satisfy 0 < lo < hi < 1"));
            }
        }
        for (name, d) in [("t1", &self.t1), ("t2", &self.t2)] {
            if !(0.0 < d.lo && d.lo < d.hi) || !(d.sigma >= 0.0) {
                return bad(format!("{name} distribution {d:?} needs 0 < lo < hi and sigma >= 0"));
            }
        }
        if !(self.cnot_duration_s >= 0.0) {
            return bad(format!("negative cnot duration {}", self.cnot_duration_s));
        }
        Ok(())
    }
}

/// Per-edge CNOT errors and per-node decoherence times for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMap {
    /// Same order as [`HardwareGraph::edges`].
    pub edges: Vec<(usize, usize)>,
    pub cnot_error: Vec<f64>,
    /// Microseconds.
    pub t1_us: Vec<f64>,
    /// Microseconds.
    pub t2_us: Vec<f64>,
    pub cnot_duration_s: f64,
}

impl ErrorMap {
    /// Every edge gets `cnot`, every node gets the same T1/T2.
    pub fn uniform(g: &HardwareGraph, cnot: f64, t1_us: f64, t2_us: f64) -> Result<Self> {
        let map = ErrorMap {
            edges: g.edges().to_vec(),
            cnot_error: vec![cnot; g.edges().len()],
            t1_us: vec![t1_us; g.node_count()],
            t2_us: vec![t2_us; g.node_count()],
            cnot_duration_s: DEFAULT_CNOT_DURATION_S,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn node_count(&self) -> usize {
        self.t1_us.len()
    }

    pub fn cnot(&self, a: usize, b: usize) -> Option<f64> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok().map(|i| self.cnot_error[i])
    }

    pub fn validate(&self) -> Result<()> {
        if self.cnot_error.len() != self.edges.len() || self.t1_us.len() != self.t2_us.len() {
            return Err(Error::InvalidNoise("error map arrays have inconsistent lengths".into()));
        }
        if let Some(e) = self.cnot_error.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidNoise(format!("cnot error {e} outside (0, 1)")));
        }
        if let Some(t) = self.t1_us.iter().chain(&self.t2_us).find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidNoise(format!("non-positive decoherence time {t}")));
        }
        Ok(())
    }

    /// Checks that the map describes exactly the edges of `g`.
    pub fn check_matches(&self, g: &HardwareGraph) -> Result<()> {
        if self.edges != g.edges() || self.node_count() != g.node_count() {
            return Err(Error::InvalidNoise("error map does not match the hardware graph".into()));
        }
        Ok(())
    }
}

fn draw_truncated<F: FnMut() -> f64>(mut draw: F, accept: impl Fn(f64) -> bool, what: &'static str) -> Result<f64> {
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let x = draw();
        if accept(x) {
            return Ok(x);
        }
    }
    Err(Error::SamplingExhausted { what, attempts: MAX_SAMPLING_ATTEMPTS })
}

fn sample_linear<R: Rng>(rng: &mut R, d: &TruncatedNormal, what: &'static str) -> Result<f64> {
    let inside = |x: f64| x >= d.lo && x <= d.hi;
    if d.sigma == 0.0 {
        return if inside(d.mean) { Ok(d.mean) } else { Err(Error::SamplingExhausted { what, attempts: 1 }) };
    }
    let normal = Normal::new(d.mean, d.sigma).map_err(|e| Error::InvalidNoise(e.to_string()))?;
    draw_truncated(|| normal.sample(rng), inside, what)
}

/// Draws an error map. Stream order is fixed: one CNOT error per edge in
/// sorted edge order, then `t1`, `t2` per node in index order.
pub fn sample_error_map(g: &HardwareGraph, p: &NoiseParams, seed: u64) -> Result<ErrorMap> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = p.cnot_bounds.unwrap_or((0.0, 1.0));
    let inside = |e: f64| e > 0.0 && e < 1.0 && e >= lo && e <= hi;

    let mut cnot_error = Vec::with_capacity(g.edges().len());
    if p.cnot_log10_sigma == 0.0 {
        if !inside(p.cnot_mean) {
            return Err(Error::SamplingExhausted { what: "cnot error", attempts: 1 });
        }
        cnot_error.resize(g.edges().len(), p.cnot_mean);
    } else {
        let normal = Normal::new(p.cnot_mean.log10(), p.cnot_log10_sigma)
            .map_err(|e| Error::InvalidNoise(e.to_string()))?;
        for _ in g.edges() {
            cnot_error.push(draw_truncated(|| 10f64.powf(normal.sample(&mut rng)), inside, "cnot error")?);
        }
    }

    let mut t1_us = Vec::with_capacity(g.node_count());
    let mut t2_us = Vec::with_capacity(g.node_count());
    for _ in 0..g.node_count() {
        t1_us.push(sample_linear(&mut rng, &p.t1, "t1")?);
        t2_us.push(sample_linear(&mut rng, &p.t2, "t2")?);
    }

    Ok(ErrorMap { edges: g.edges().to_vec(), cnot_error, t1_us, t2_us, cnot_duration_s: p.cnot_duration_s })
}

/// Decoherence error accrued while idling for `t_s` seconds, combining
/// amplitude damping (T1) with pure dephasing. T1/T2 are in microseconds.
pub fn idle_error(t1_us: f64, t2_us: f64, t_s: f64) -> f64 {
    let t1 = t1_us * 1e-6;
    let t2 = t2_us * 1e-6;
    let relax_survival = (-t_s / t1).exp();
    let relaxation = -(-t_s / t1).exp_m1();
    let dephase_rate = 1.0 / t1.min(t2) - 1.0 / t1;
    let dephasing = 0.5 * relax_survival * -(-t_s * dephase_rate).exp_m1();
    relaxation + dephasing
}

/// Per-qubit share of a CNOT error, so that two movements across the same
/// SWAP multiply back to the original success probability.
pub fn split_cnot_error(e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidArgument(format!("cnot error {e} outside [0, 1)")));
    }
    Ok(1.0 - (1.0 - e).sqrt())
}

/// `-ln(1 - ε)`.
pub fn error_to_cost(e: f64) -> f64 {
    -(-e).ln_1p()
}

/// Accumulated error and fidelity `(1 - exp(-C), exp(-C))` for a cost `C`.
pub fn accumulated_error(cost: f64) -> (f64, f64) {
    (-(-cost).exp_m1(), (-cost).exp())
}

/// Objective coefficient for every movement an abstract qubit can make.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub model: ErrorModel,
    edges: Vec<(usize, usize)>,
    /// Per edge `(lo, hi)`: `[cost lo→hi, cost hi→lo]`.
    swap: Vec<[f64; 2]>,
    idle: Vec<f64>,
}

impl CostTable {
    pub fn movement(&self, from: usize, to: usize) -> Option<f64> {
        if from == to {
            return self.idle.get(from).copied();
        }
        let key = (from.min(to), from.max(to));
        let i = self.edges.binary_search(&key).ok()?;
        Some(if from < to { self.swap[i][0] } else { self.swap[i][1] })
    }

    pub fn idle(&self, node: usize) -> f64 {
        self.idle[node]
    }

    pub fn node_count(&self) -> usize {
        self.idle.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Builds a table from explicit costs; for tests and hand-made models.
    pub fn from_parts(model: ErrorModel, edges: Vec<(usize, usize)>, swap: Vec<[f64; 2]>, idle: Vec<f64>) -> Result<Self> {
        if swap.len() != edges.len() {
            return Err(Error::InvalidArgument("one swap cost pair per edge required".into()));
        }
        if swap.iter().flatten().chain(&idle).any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("movement costs must be finite and non-negative".into()));
        }
        Ok(CostTable { model, edges, swap, idle })
    }
}

/// Objective coefficients per movement.
///
/// * `Simple`: a SWAP across `{i, j}` costs `-3 ln(1 - ε_ij)`, carried by the
///   `lo → hi` traversal of the pair; the reverse traversal and idling cost 0.
/// * `Extended`: each traversal costs `-3 ln(1 - ε^v_ij)` with the split error
///   `ε^v`, and idling at `i` costs `-3 ln(1 - ε_idle(i))` over one CNOT
///   duration.
pub fn movement_costs(map: &ErrorMap, model: ErrorModel) -> Result<CostTable> {
    map.validate()?;
    let (swap, idle) = match model {
        ErrorModel::Simple => {
            let swap = map.cnot_error.iter().map(|&e| [CNOTS_PER_SWAP * error_to_cost(e), 0.0]).collect();
            (swap, vec![0.0; map.node_count()])
        }
        ErrorModel::Extended => {
            let mut swap = Vec::with_capacity(map.edges.len());
            for &e in &map.cnot_error {
                let c = CNOTS_PER_SWAP * error_to_cost(split_cnot_error(e)?);
                swap.push([c, c]);
            }
            let idle = (0..map.node_count())
                .map(|i| CNOTS_PER_SWAP * error_to_cost(idle_error(map.t1_us[i], map.t2_us[i], map.cnot_duration_s)))
                .collect();
            (swap, idle)
        }
    };
    CostTable::from_parts(model, map.edges.clone(), swap, idle)
}

/// Text format: `cnot <i> <j> <ε>` per edge, `decoherence <i> <t1_us> <t2_us>`
/// per node and one `cnot_duration_ns <t>` line.
pub fn save_error_map(map: &ErrorMap) -> String {
    let mut out = format!("cnot_duration_ns {}\n", map.cnot_duration_s * 1e9);
    for (&(a, b), e) in map.edges.iter().zip(&map.cnot_error) {
        out.push_str(&format!("cnot {a} {b} {e:e}\n"));
    }
    for (i, (t1, t2)) in map.t1_us.iter().zip(&map.t2_us).enumerate() {
        out.push_str(&format!("decoherence {i} {t1} {t2}\n"));
    }
    out
}

pub fn load_error_map(text: &str, g: &HardwareGraph) -> Result<ErrorMap> {
    let n = g.node_count();
    let mut cnot = vec![None; g.edges().len()];
    let mut t1 = vec![None; n];
    let mut t2 = vec![None; n];
    let mut duration = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let int = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("expected an integer, got '{s}'")));
        let float = |s: &str| s.parse::<f64>().map_err(|_| perr(format!("expected a number, got '{s}'")));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["cnot", a, b, e] => {
                let (a, b) = (int(a)?, int(b)?);
                let i = g.edge_index(a, b).ok_or_else(|| perr(format!("({a}, {b}) is not an edge")))?;
                cnot[i] = Some(float(e)?);
            }
            ["decoherence", i, a, b] => {
                let i = int(i)?;
                g.check_node(i)?;
                t1[i] = Some(float(a)?);
                t2[i] = Some(float(b)?);
            }
            ["cnot_duration_ns", t] => duration = Some(float(t)? * 1e-9),
            _ => return Err(perr(format!("unrecognized line '{line}'"))),
        }
    }
    let missing = |what: &str| Error::Parse { line: 0, msg: format!("missing {what}") };
    let map = ErrorMap {
        edges: g.edges().to_vec(),
        cnot_error: cnot.into_iter().collect::<Option<_>>().ok_or_else(|| missing("cnot error for some edge"))?,
        t1_us: t1.into_iter().collect::<Option<_>>().ok_or_else(|| missing("decoherence for some node"))?,
        t2_us: t2.into_iter().collect::<Option<_>>().ok_or_else(|| missing("decoherence for some node"))?,
        cnot_duration_s: duration.unwrap_or(DEFAULT_CNOT_DURATION_S),
    };
    map.validate()?;
    Ok(map)
}
