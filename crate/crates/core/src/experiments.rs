//! Seeded Monte Carlo experiments over the phase grid.
//!
//! Every experiment returns an [`ExperimentReport`] whose statistics are a
//! pure function of its parameters and seed. Work is spread over rayon
//! workers and gathered in grid order, so the worker count never changes a
//! result.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::angle::{Angle, BinaryThreshold};
use crate::digits::{phi_shift, squares_concatenation, DigitString};
use crate::error::{Error, Result};
use crate::phase::{PAdicRational, PhaseTable};
use crate::reduction::{reduce_compound, reduce_rj, reduced_prefix, weak_reduction_walk_on, WalkParams};
use crate::states::{
    beamsplitter_pair, blocked_mz_output, full_mz_output, qutrit_state, QutritAngles, QutritConfig, StateConfig,
};

/// Version of the report layout written by [`ExperimentReport::to_json`].
pub const SCHEMA_VERSION: u32 = 1;

/// Rotated prefix kept per grid point when only leading digits are needed.
pub const GRID_PREFIX_LEN: usize = 1024;

/// Reduced digits kept per beam in the interference experiment.
const BEAM_DIGITS: usize = 64;

/// Independent generator number `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `max(0.02, 4·√(p(1−p)/n))`.
pub fn binomial_tolerance(p: f64, n: usize) -> f64 {
    let sigma = if n == 0 { 1.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
    (4.0 * sigma).max(0.02)
}

/// How a [`SampleGrid`] chooses its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Every `j` in `0..base^depth` once, in order.
    Exhaustive,
    /// `count` values of `j` drawn uniformly with replacement.
    Sampled { count: usize, seed: u64 },
}

/// Longitudes `λ = 2πj/base^depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub base: u32,
    pub depth: u32,
    pub mode: GridMode,
}

impl SampleGrid {
    pub fn exhaustive(base: u32, depth: u32) -> Self {
        Self { base, depth, mode: GridMode::Exhaustive }
    }

    pub fn sampled(base: u32, depth: u32, count: usize, seed: u64) -> Self {
        Self { base, depth, mode: GridMode::Sampled { count, seed } }
    }

    /// Number of grid positions `base^depth`.
    pub fn resolution(&self) -> u64 {
        (self.base as u64).pow(self.depth)
    }

    /// Rejects grids finer than `n_max` or with an unusable base.
    pub fn validate(&self, n_max: u32) -> Result<()> {
        if self.base < 2 {
            return Err(Error::InvalidBase(self.base));
        }
        if self.depth > n_max {
            return Err(Error::Precondition(format!("grid depth {} exceeds n_max {n_max}", self.depth)));
        }
        if self.base.checked_pow(self.depth).is_none() || self.depth > 40 {
            return Err(Error::Precondition(format!("grid {}^{} is too fine", self.base, self.depth)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match self.mode {
            GridMode::Exhaustive => self.resolution() as usize,
            GridMode::Sampled { count, .. } => count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> Option<u64> {
        match self.mode {
            GridMode::Exhaustive => None,
            GridMode::Sampled { seed, .. } => Some(seed),
        }
    }

    /// Grid indices `j`. Sampled grids of different bases draw from
    /// different streams of the same seed.
    pub fn indices(&self) -> Vec<u64> {
        let res = self.resolution();
        match self.mode {
            GridMode::Exhaustive => (0..res).collect(),
            GridMode::Sampled { count, seed } => {
                let mut rng = stream_rng(seed, self.base as u64);
                (0..count).map(|_| rng.random_range(0..res)).collect()
            }
        }
    }

    /// The points `j/base^depth` as reduced fractions of a turn.
    pub fn points(&self) -> Vec<PAdicRational> {
        self.indices().into_iter().map(|j| PAdicRational::new(self.base, j, self.depth)).collect()
    }

    fn describe(&self) -> Value {
        serde_json::to_value(self).expect("grid serializes")
    }
}

/// One compared statistic of a report. A statistic that could not be
/// computed is NaN, written as `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    #[serde(deserialize_with = "nullable_f64")]
    pub observed: f64,
    pub expected: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Statistic {
    pub fn new(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        let deviation = (observed - expected).abs();
        Self { name: name.into(), observed, expected, deviation, tolerance, pass: deviation <= tolerance }
    }
}

/// Outcome of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub n: usize,
    pub statistics: Vec<Statistic>,
    pub pass: bool,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn new(name: &str, params: BTreeMap<String, Value>, n: usize, statistics: Vec<Statistic>, seed: Option<u64>) -> Self {
        let pass = statistics.iter().all(|s| s.pass);
        Self { schema_version: SCHEMA_VERSION, name: name.into(), params, n, statistics, pass, seed, wall_time_s: 0.0 }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// Same report with the wall time cleared, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_s: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One row per statistic. Wall time is left out so that equal runs give
    /// identical bytes.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["schema_version", "experiment", "statistic", "observed", "expected", "deviation", "tolerance", "pass", "n", "seed"])
            .expect("in-memory write");
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        for s in &self.statistics {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                self.name.clone(),
                s.name.clone(),
                s.observed.to_string(),
                s.expected.to_string(),
                s.deviation.to_string(),
                s.tolerance.to_string(),
                s.pass.to_string(),
                self.n.to_string(),
                seed.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Phase table covering a base-2 grid, capped by the configured depth.
fn grid_table(cfg: &StateConfig, grid: &SampleGrid, prefix_len: usize) -> Result<PhaseTable> {
    if grid.base != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: grid.base });
    }
    grid.validate(cfg.n_max())?;
    PhaseTable::new(cfg.seed(), grid.depth, prefix_len)
}

/// Leading `count` digits of `r(θ, λ)` at every point of `grid`, in grid
/// order.
pub fn grid_states(cfg: &StateConfig, theta: &Angle, grid: &SampleGrid, count: usize) -> Result<Vec<DigitString>> {
    let table = grid_table(cfg, grid, GRID_PREFIX_LEN)?;
    let t = BinaryThreshold::from_angle(theta);
    grid.indices().par_iter().map(|&j| reduced_prefix(table.get(j as usize), &t, count)).collect()
}

/// Fraction of grid states with value below ½ against `cos²(θ/2)`.
pub fn polarization_experiment(theta: &Angle, grid: &SampleGrid, cfg: &StateConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let states = grid_states(cfg, theta, grid, 1)?;
    let n = states.len();
    let below = states.iter().filter(|s| s.leading_digit() == 0).count();
    let freq = if n == 0 { 0.0 } else { below as f64 / n as f64 };
    let p = theta.cos_squared_half_f64();
    let stats = vec![Statistic::new("freq_below_half", freq, p, binomial_tolerance(p, n))];
    let pars = params(&[("theta", json!(theta.to_string())), ("grid", grid.describe()), ("n_max", json!(cfg.n_max()))]);
    Ok(ExperimentReport::new("polarization", pars, n, stats, grid.seed()).timed(start))
}

/// `cos²(θ₁/2)`, `sin²(θ₁/2)cos²(θ₂/2)` and `sin²(θ₁/2)sin²(θ₂/2)`.
pub fn trace_rule_probabilities(theta1: &Angle, theta2: &Angle) -> [f64; 3] {
    let (c1, c2) = (theta1.cos_squared_half_f64(), theta2.cos_squared_half_f64());
    [c1, (1.0 - c1) * c2, (1.0 - c1) * (1.0 - c2)]
}

/// `(λ₁, λ₂)` pairs from a triadic and a dyadic grid. Two exhaustive grids
/// give their full product; otherwise the point lists are zipped, cycling
/// the shorter one, to the length of the longer.
pub fn qutrit_grid_points(grid1: &SampleGrid, grid2: &SampleGrid) -> Vec<(PAdicRational, PAdicRational)> {
    let (p1, p2) = (grid1.points(), grid2.points());
    if p1.is_empty() || p2.is_empty() {
        return Vec::new();
    }
    if grid1.mode == GridMode::Exhaustive && grid2.mode == GridMode::Exhaustive {
        return p1.iter().flat_map(|a| p2.iter().map(move |b| (*a, *b))).collect();
    }
    let n = p1.len().max(p2.len());
    (0..n).map(|k| (p1[k % p1.len()], p2[k % p2.len()])).collect()
}

/// Attractor frequencies of three-level states against the trace rule.
pub fn trace_rule_experiment(
    theta1: &Angle,
    theta2: &Angle,
    grid1: &SampleGrid,
    grid2: &SampleGrid,
    cfg: &QutritConfig,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if grid1.base != 3 {
        return Err(Error::BaseMismatch { expected: 3, found: grid1.base });
    }
    if grid2.base != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: grid2.base });
    }
    grid1.validate(cfg.n_max3)?;
    grid2.validate(cfg.n_max2)?;
    let points = qutrit_grid_points(grid1, grid2);
    let attractors: Vec<u32> = points
        .par_iter()
        .map(|&(l1, l2)| {
            let s = qutrit_state(cfg, &QutritAngles::new(*theta1, *theta2, l1, l2)?)?;
            reduce_compound(&s).attractor.ok_or(Error::Degenerate("compound reduction found no attractor"))
        })
        .collect::<Result<_>>()?;
    let n = attractors.len();
    let mut counts = [0usize; 3];
    for a in &attractors {
        counts[*a as usize] += 1;
    }
    let expected = trace_rule_probabilities(theta1, theta2);
    let mut stats: Vec<Statistic> = (0..3)
        .map(|j| {
            let freq = if n == 0 { 0.0 } else { counts[j] as f64 / n as f64 };
            Statistic::new(format!("rho_{j}"), freq, expected[j], binomial_tolerance(expected[j], n))
        })
        .collect();
    let total = counts.iter().sum::<usize>() as f64 / n.max(1) as f64;
    stats.push(Statistic::new("rho_sum", total, 1.0, 0.0));
    let pars = params(&[
        ("theta1", json!(theta1.to_string())),
        ("theta2", json!(theta2.to_string())),
        ("grid1", grid1.describe()),
        ("grid2", grid2.describe()),
        ("n_max2", json!(cfg.n_max2)),
        ("n_max3", json!(cfg.n_max3)),
    ]);
    let seed = grid1.seed().or(grid2.seed());
    Ok(ExperimentReport::new("trace_rule", pars, n, stats, seed).timed(start))
}

/// A correlated pair of qubit strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntangledPair {
    pub left: DigitString,
    pub right: DigitString,
    pub pair_index: u64,
    pub subset_index: u32,
}

impl EntangledPair {
    pub fn flipped(&self) -> bool {
        self.left != self.right
    }

    /// `+1` when the leading digits agree, `−1` otherwise.
    pub fn outcome(&self) -> i32 {
        if self.left.leading_digit() == self.right.leading_digit() {
            1
        } else {
            -1
        }
    }
}

/// Subset holding index `i ≥ 1`: the `j` with `i = 2^(j−1) + (k−1)·2^j`.
pub fn subset_of(i: u64) -> u32 {
    assert!(i != 0, "indices start at 1");
    i.trailing_zeros() + 1
}

/// Splits `{1, …, N}` into `I_j = {2^(j−1) + (k−1)·2^j : k ≥ 1}`.
pub fn index_partition(n: u64) -> BTreeMap<u32, Vec<u64>> {
    let mut out: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for i in 1..=n {
        out.entry(subset_of(i)).or_default().push(i);
    }
    out
}

/// `⌈log₂ N⌉`.
pub fn epr_depth(n: u64) -> u32 {
    n.max(1).next_power_of_two().trailing_zeros()
}

/// `N` pairs whose left strings are `r(π/2, 2πi/2^K)` with `K = ⌈log₂N⌉`
/// and whose right strings are flipped by `φ` exactly when digit `d_j` of
/// `cos²(Δθ/2)` is 1 for the pair's subset `I_j`.
///
/// Strings are the first 64 reduced digits. The ensemble is deterministic:
/// the seed only labels the report.
pub fn make_epr_ensemble(delta_theta: &Angle, n: u64, cfg: &StateConfig) -> Result<Vec<EntangledPair>> {
    if n == 0 {
        return Err(Error::Precondition("an EPR ensemble needs at least one pair".into()));
    }
    let depth = epr_depth(n);
    let table = PhaseTable::new(cfg.seed(), depth, GRID_PREFIX_LEN / 2)?;
    let t_left = BinaryThreshold::from_angle(&Angle::HALF_PI);
    let d = BinaryThreshold::from_angle(delta_theta);
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let left = reduced_prefix(table.get(i as usize), &t_left, BEAM_DIGITS)?;
            let j = subset_of(i);
            let flip = d.is_one() || (j <= crate::angle::THRESHOLD_BITS && d.digit(j) == 1);
            let right = if flip { phi_shift(&left, 1) } else { left.clone() };
            Ok(EntangledPair { left, right, pair_index: i, subset_index: j })
        })
        .collect()
}

/// Mean of the pair outcomes.
pub fn epr_correlation(pairs: &[EntangledPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(pairs.iter().map(|p| p.outcome() as f64).sum::<f64>() / pairs.len() as f64)
}

/// `Σ_{j ≤ K} d_j 2^(−j)` for the digits of `cos²(Δθ/2)`, with the all-ones
/// threshold counted as 1.
pub fn truncated_threshold(delta_theta: &Angle, depth: u32) -> f64 {
    let d = BinaryThreshold::from_angle(delta_theta);
    if d.is_one() {
        return 1.0;
    }
    (1..=depth.min(crate::angle::THRESHOLD_BITS)).map(|j| d.digit(j) as f64 * 0.5f64.powi(j as i32)).sum()
}

/// Correlation of an EPR ensemble against `−cos Δθ`.
pub fn epr_experiment(delta_theta: &Angle, n: u64, cfg: &StateConfig, seed: Option<u64>) -> Result<ExperimentReport> {
    let start = Instant::now();
    let pairs = make_epr_ensemble(delta_theta, n, cfg)?;
    let corr = epr_correlation(&pairs)?;
    let flipped = pairs.iter().filter(|p| p.flipped()).count() as f64 / pairs.len() as f64;
    let c2 = delta_theta.cos_squared_half_f64();
    let tol = binomial_tolerance(c2, pairs.len());
    let stats = vec![
        Statistic::new("correlation", corr, -delta_theta.radians().cos(), 2.0 * tol),
        Statistic::new("flipped_fraction", flipped, c2, tol),
    ];
    let pars = params(&[("delta_theta", json!(delta_theta.to_string())), ("pairs", json!(n)), ("depth", json!(epr_depth(n)))]);
    Ok(ExperimentReport::new("epr", pars, pairs.len(), stats, seed).timed(start))
}

/// Beamsplitter detection statistics at `θ = π/2` over the grid.
pub fn interference_experiment(grid: &SampleGrid, cfg: &StateConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let states = grid_states(cfg, &Angle::HALF_PI, grid, BEAM_DIGITS)?;
    let rows: Vec<[bool; 5]> = states
        .par_iter()
        .map(|s| {
            let (tr, rf) = beamsplitter_pair(s)?;
            let t_hit = reduce_rj(&tr, 1).attractor == Some(1);
            let r_hit = reduce_rj(&rf, 1).attractor == Some(1);
            let out = blocked_mz_output(s)?;
            let full = full_mz_output(s)?;
            Ok([t_hit, r_hit, out.leading_digit() == 1, out == *s, full.constant_digit() == Some(1)])
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    let frac = |k: usize| rows.iter().filter(|r| r[k]).count() as f64 / n.max(1) as f64;
    let tol = binomial_tolerance(0.5, n);
    let complementary = rows.iter().filter(|r| r[0] != r[1]).count() as f64 / n.max(1) as f64;
    let stats = vec![
        Statistic::new("transmitted_detection", frac(0), 0.5, tol),
        Statistic::new("reflected_detection", frac(1), 0.5, tol),
        Statistic::new("complementarity", complementary, 1.0, 0.0),
        Statistic::new("blocked_mz_leading_one", frac(2), 1.0, 0.0),
        Statistic::new("blocked_mz_downstream_transmitted", frac(3), 0.5, tol),
        Statistic::new("full_mz_constant_one", frac(4), 1.0, 0.0),
    ];
    let pars = params(&[("grid", grid.describe()), ("n_max", json!(cfg.n_max()))]);
    Ok(ExperimentReport::new("interference", pars, n, stats, grid.seed()).timed(start))
}

/// Aggregate of a weak-reduction ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub runs: usize,
    pub north: usize,
    pub south: usize,
    pub non_converged: usize,
    pub mean_steps: f64,
}

/// Runs `ensemble_size` walks from `θ₀`, walk `i` starting at a uniformly
/// drawn `λ` and using stream `i` of `seed`.
pub fn weak_reduction_ensemble(
    theta0: &Angle,
    ensemble_size: usize,
    params: &WalkParams,
    cfg: &StateConfig,
    seed: u64,
) -> Result<WalkSummary> {
    let depth = params.jitter_depth.max(1);
    if depth > cfg.n_max() {
        return Err(Error::Precondition(format!("jitter depth {depth} exceeds n_max {}", cfg.n_max())));
    }
    let table = PhaseTable::new(cfg.seed(), depth, GRID_PREFIX_LEN)?;
    let results: Vec<Option<(u32, usize)>> = (0..ensemble_size as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let lambda0 = PAdicRational::new(2, rng.random_range(0..1u64 << depth), depth);
            match weak_reduction_walk_on(theta0, &lambda0, &table, params, rng) {
                Ok(run) => Ok(Some((run.outcome.attractor.expect("walks end at a pole"), run.outcome.steps))),
                Err(Error::NonConvergence { .. }) | Err(Error::Tie) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut summary = WalkSummary { runs: ensemble_size, north: 0, south: 0, non_converged: 0, mean_steps: 0.0 };
    let mut steps = 0usize;
    for r in &results {
        match r {
            Some((0, s)) => {
                summary.north += 1;
                steps += s;
            }
            Some((_, s)) => {
                summary.south += 1;
                steps += s;
            }
            None => summary.non_converged += 1,
        }
    }
    let converged = summary.north + summary.south;
    summary.mean_steps = if converged == 0 { 0.0 } else { steps as f64 / converged as f64 };
    Ok(summary)
}

/// North-pole absorption frequency of weak-reduction walks against
/// `cos²(θ₀/2)`. Fails when more than 1% of walks do not converge.
pub fn weak_reduction_experiment(
    theta0: &Angle,
    ensemble_size: usize,
    params: &WalkParams,
    cfg: &StateConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sum = weak_reduction_ensemble(theta0, ensemble_size, params, cfg, seed)?;
    let converged = sum.north + sum.south;
    let north = if converged == 0 { 0.0 } else { sum.north as f64 / converged as f64 };
    let nc = sum.non_converged as f64 / sum.runs.max(1) as f64;
    let p = theta0.cos_squared_half_f64();
    let stats = vec![
        Statistic::new("north_absorption", north, p, binomial_tolerance(p, converged)),
        Statistic::new("non_convergence", nc, 0.0, 0.01),
    ];
    let pars = params_of_walk(theta0, ensemble_size, params, &sum);
    Ok(ExperimentReport::new("weak_reduction", pars, sum.runs, stats, Some(seed)).timed(start))
}

fn params_of_walk(theta0: &Angle, ensemble_size: usize, p: &WalkParams, sum: &WalkSummary) -> BTreeMap<String, Value> {
    params(&[
        ("theta0", json!(theta0.to_string())),
        ("ensemble_size", json!(ensemble_size)),
        ("walk", serde_json::to_value(p).expect("params serialize")),
        ("mean_steps", json!(sum.mean_steps)),
    ])
}

/// Seed strings compared by [`seed_invariance_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Champernowne,
    /// Concatenated squares `0, 1, 4, 9, …` written in the seed base.
    Squares,
    /// The constant string of 1s, which is not normal.
    Constant,
}

impl SeedKind {
    pub fn qubit_config(self, n_max: u32, seed_length: usize, target_length: usize) -> Result<StateConfig> {
        let seed = match self {
            SeedKind::Champernowne => return StateConfig::champernowne(n_max, seed_length, target_length),
            SeedKind::Squares => squares_concatenation(2, seed_length)?,
            SeedKind::Constant => DigitString::constant(2, 1, seed_length)?,
        };
        StateConfig::new(seed, n_max, target_length)
    }

    pub fn qutrit_config(self, base: &QutritConfig) -> Result<QutritConfig> {
        let len = base.seed().len();
        let seed = match self {
            SeedKind::Champernowne => crate::digits::champernowne(3, len)?,
            SeedKind::Squares => squares_concatenation(3, len)?,
            SeedKind::Constant => DigitString::constant(3, 1, len)?,
        };
        QutritConfig::new(seed, base.n_max2, base.n_max3, base.target_length)
    }

    fn label(self) -> &'static str {
        match self {
            SeedKind::Champernowne => "champernowne",
            SeedKind::Squares => "squares",
            SeedKind::Constant => "constant",
        }
    }
}

/// Settings for [`seed_invariance_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSuiteConfig {
    pub seeds: Vec<SeedKind>,
    pub theta: Angle,
    pub theta1: Angle,
    pub theta2: Angle,
    pub polarization_depth: u32,
    pub trace_samples: usize,
    pub trace_seed: u64,
    pub n_max: u32,
    pub seed_length: usize,
    pub target_length: usize,
    pub qutrit: QutritConfig,
}

impl Default for SeedSuiteConfig {
    fn default() -> Self {
        Self {
            seeds: vec![SeedKind::Champernowne, SeedKind::Squares],
            theta: Angle::pi_fraction(1, 3),
            theta1: Angle::theta_star(),
            theta2: Angle::HALF_PI,
            polarization_depth: 12,
            trace_samples: 1 << 10,
            trace_seed: 1,
            n_max: crate::states::DEFAULT_N_MAX,
            seed_length: crate::states::DEFAULT_SEED_LENGTH,
            target_length: crate::states::DEFAULT_TARGET_LENGTH,
            qutrit: QutritConfig::default(),
        }
    }
}

/// Polarization and trace-rule statistics under each seed string. Each
/// statistic must meet its own tolerance, and every pair of seeds must agree
/// within twice that tolerance.
pub fn seed_invariance_suite(cfg: &SeedSuiteConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let pol_grid = SampleGrid::exhaustive(2, cfg.polarization_depth);
    let g1 = SampleGrid::sampled(3, cfg.qutrit.n_max3, cfg.trace_samples, cfg.trace_seed);
    let g2 = SampleGrid::sampled(2, cfg.qutrit.n_max2, cfg.trace_samples, cfg.trace_seed);
    let mut per_seed: Vec<(SeedKind, Vec<Statistic>)> = Vec::new();
    for &kind in &cfg.seeds {
        let qubit = kind.qubit_config(cfg.n_max, cfg.seed_length, cfg.target_length)?;
        let pol = polarization_experiment(&cfg.theta, &pol_grid, &qubit)?;
        let mut stats = pol.statistics;
        match trace_rule_experiment(&cfg.theta1, &cfg.theta2, &g1, &g2, &kind.qutrit_config(&cfg.qutrit)?) {
            Ok(tr) => stats.extend(tr.statistics.into_iter().filter(|s| s.name != "rho_sum")),
            Err(Error::EmptyResult | Error::EmptyString | Error::SuffixTooShort { .. } | Error::Degenerate(_)) => {
                let expected = trace_rule_probabilities(&cfg.theta1, &cfg.theta2);
                stats.extend((0..3).map(|j| Statistic::new(format!("rho_{j}"), f64::NAN, expected[j], 0.0)));
            }
            Err(e) => return Err(e),
        }
        per_seed.push((kind, stats));
    }
    let mut stats = Vec::new();
    for (kind, list) in &per_seed {
        for s in list {
            let mut s = s.clone();
            if s.observed.is_nan() {
                s.pass = false;
            }
            s.name = format!("{}/{}", kind.label(), s.name);
            stats.push(s);
        }
    }
    for a in 0..per_seed.len() {
        for b in a + 1..per_seed.len() {
            for (sa, sb) in per_seed[a].1.iter().zip(&per_seed[b].1) {
                let name = format!("{}~{}/{}", per_seed[a].0.label(), per_seed[b].0.label(), sa.name);
                let mut st = Statistic::new(name, sa.observed - sb.observed, 0.0, 2.0 * sa.tolerance.max(sb.tolerance));
                if st.observed.is_nan() {
                    st.pass = false;
                }
                stats.push(st);
            }
        }
    }
    let seeds: Vec<&str> = cfg.seeds.iter().map(|k| k.label()).collect();
    let pars = params(&[
        ("seeds", json!(seeds)),
        ("theta", json!(cfg.theta.to_string())),
        ("theta1", json!(cfg.theta1.to_string())),
        ("theta2", json!(cfg.theta2.to_string())),
        ("polarization_grid", pol_grid.describe()),
        ("trace_grid1", g1.describe()),
        ("trace_grid2", g2.describe()),
        ("n_max", json!(cfg.n_max)),
        ("seed_length", json!(cfg.seed_length)),
        ("qutrit_seed_length", json!(cfg.qutrit.seed().len())),
    ]);
    let n = pol_grid.len() + cfg.trace_samples;
    Ok(ExperimentReport::new("seed_invariance", pars, n, stats, Some(cfg.trace_seed)).timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{qubit_state, BlochPoint};
    use std::collections::BTreeSet;

    fn small_cfg() -> StateConfig {
        StateConfig::champernowne(10, 1 << 14, 1 << 10).unwrap()
    }

    #[test]
    fn partition_of_twelve() {
        let p = index_partition(12);
        assert_eq!(p[&1], vec![1, 3, 5, 7, 9, 11]);
        assert_eq!(p[&2], vec![2, 6, 10]);
        assert_eq!(p[&3], vec![4, 12]);
        // 8 = 2^(4−1) is the first member of the fourth subset.
        assert_eq!(p[&4], vec![8]);
        assert_eq!(p.len(), 4);
        assert_eq!(index_partition(1), BTreeMap::from([(1, vec![1])]));
    }

    #[test]
    fn partition_covers_disjointly() {
        for n in [1u64, 2, 3, 12, 100, 1000, 1 << 14] {
            let p = index_partition(n);
            let mut seen = BTreeSet::new();
            for (&j, members) in &p {
                for &i in members {
                    assert!(seen.insert(i), "{i} appears twice");
                    assert!((i - (1 << (j - 1))) % (1 << j) == 0);
                }
                let approx = n as f64 / 2f64.powi(j as i32);
                assert!((members.len() as f64 - approx).abs() <= 1.0);
            }
            assert_eq!(seen, (1..=n).collect());
        }
    }

    #[test]
    fn epr_anchors() {
        let cfg = small_cfg();
        let n = 1 << 10;
        let all_flip = make_epr_ensemble(&Angle::ZERO, n, &cfg).unwrap();
        assert!(all_flip.iter().all(|p| p.outcome() == -1 && p.right == phi_shift(&p.left, 1)));
        assert_eq!(epr_correlation(&all_flip).unwrap(), -1.0);
        let none = make_epr_ensemble(&Angle::PI, n, &cfg).unwrap();
        assert_eq!(epr_correlation(&none).unwrap(), 1.0);
        let half = make_epr_ensemble(&Angle::HALF_PI, n, &cfg).unwrap();
        for p in &half {
            assert_eq!(p.flipped(), p.subset_index == 1, "pair {}", p.pair_index);
            assert_eq!(p.subset_index, subset_of(p.pair_index));
        }
        assert_eq!(epr_correlation(&half).unwrap(), 0.0);
        assert!(epr_correlation(&[]).is_err());
    }

    #[test]
    fn epr_flip_fraction_bound() {
        let cfg = small_cfg();
        let n = 1u64 << 10;
        for (a, b) in [(1, 3), (1, 4), (2, 3), (3, 4), (1, 6)] {
            let dt = Angle::pi_fraction(a, b);
            let pairs = make_epr_ensemble(&dt, n, &cfg).unwrap();
            let flipped = pairs.iter().filter(|p| p.flipped()).count() as f64 / n as f64;
            let trunc = truncated_threshold(&dt, epr_depth(n));
            assert!((flipped - trunc).abs() <= 0.5f64.powi(epr_depth(n) as i32), "{dt}");
            let corr = epr_correlation(&pairs).unwrap();
            assert!((corr - (1.0 - 2.0 * flipped)).abs() < 1e-12);
        }
    }

    #[test]
    fn epr_left_strings_are_qubit_states() {
        let cfg = StateConfig::champernowne(10, 1 << 14, 1 << 10).unwrap();
        let pairs = make_epr_ensemble(&Angle::pi_fraction(1, 3), 256, &cfg).unwrap();
        for p in pairs.iter().step_by(37) {
            let full = qubit_state(&cfg, &BlochPoint::from_turns(Angle::HALF_PI, p.pair_index as i64, 256, 10).unwrap()).unwrap();
            assert_eq!(full.prefix(p.left.len()).unwrap(), p.left);
        }
    }

    #[test]
    fn grid_modes() {
        let g = SampleGrid::exhaustive(2, 5);
        assert_eq!(g.indices(), (0..32).collect::<Vec<_>>());
        assert!(g.validate(4).is_err());
        assert!(g.validate(5).is_ok());
        let s = SampleGrid::sampled(3, 4, 50, 9);
        let idx = s.indices();
        assert_eq!(idx.len(), 50);
        assert!(idx.iter().all(|&j| j < 81));
        assert_eq!(idx, s.indices());
        assert_ne!(idx, SampleGrid::sampled(3, 4, 50, 10).indices());
        let pairs = qutrit_grid_points(&SampleGrid::exhaustive(3, 1), &SampleGrid::exhaustive(2, 2));
        assert_eq!(pairs.len(), 12);
    }

    #[test]
    fn grid_states_match_qubit_state() {
        let cfg = small_cfg();
        let theta = Angle::pi_fraction(1, 3);
        let grid = SampleGrid::exhaustive(2, 6);
        let states = grid_states(&cfg, &theta, &grid, 16).unwrap();
        for (j, s) in states.iter().enumerate().step_by(7) {
            let full = qubit_state(&cfg, &BlochPoint::from_turns(theta, j as i64, 64, 10).unwrap()).unwrap();
            assert_eq!(&full.prefix(16).unwrap(), s);
        }
    }

    #[test]
    fn polarization_poles_exact() {
        let cfg = small_cfg();
        let grid = SampleGrid::exhaustive(2, 8);
        let north = polarization_experiment(&Angle::ZERO, &grid, &cfg).unwrap();
        assert_eq!(north.statistics[0].observed, 1.0);
        let south = polarization_experiment(&Angle::PI, &grid, &cfg).unwrap();
        assert_eq!(south.statistics[0].observed, 0.0);
        assert!(north.pass && south.pass);
    }

    #[test]
    fn report_reproducible_and_serializable() {
        let cfg = small_cfg();
        let grid = SampleGrid::sampled(2, 10, 300, 42);
        let a = polarization_experiment(&Angle::pi_fraction(1, 3), &grid, &cfg).unwrap();
        let b = polarization_experiment(&Angle::pi_fraction(1, 3), &grid, &cfg).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert_eq!(a.to_csv(), b.to_csv());
        let back = ExperimentReport::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_csv().lines().count(), 2);
        assert_eq!(a.seed, Some(42));
    }

    #[test]
    fn missing_statistic_round_trips_as_null() {
        let s = Statistic::new("rho_0", f64::NAN, 0.3, 0.02);
        assert!(!s.pass);
        let r = ExperimentReport::new("t", BTreeMap::new(), 0, vec![s], None);
        let json = r.to_json();
        assert!(json.contains("\"observed\": null"));
        let back = ExperimentReport::from_json(&json).unwrap();
        assert!(back.statistics[0].observed.is_nan() && !back.pass);
    }

    #[test]
    fn report_pass_rule() {
        let ok = Statistic::new("x", 0.51, 0.5, 0.02);
        let bad = Statistic::new("y", 0.45, 0.5, 0.02);
        assert!(ok.pass && !bad.pass);
        assert!(ExperimentReport::new("t", BTreeMap::new(), 1, vec![ok.clone()], None).pass);
        assert!(!ExperimentReport::new("t", BTreeMap::new(), 1, vec![ok, bad], None).pass);
        assert_eq!(binomial_tolerance(0.5, 100), 0.2);
        assert_eq!(binomial_tolerance(0.5, 1 << 20), 0.02);
    }

    #[test]
    fn trace_rule_north_pole_exact() {
        let cfg = QutritConfig::new(crate::digits::champernowne(3, 3usize.pow(8)).unwrap(), 6, 4, 512);
        let cfg = cfg.unwrap();
        let g1 = SampleGrid::sampled(3, 4, 40, 3);
        let g2 = SampleGrid::sampled(2, 6, 40, 3);
        let r = trace_rule_experiment(&Angle::ZERO, &Angle::HALF_PI, &g1, &g2, &cfg).unwrap();
        assert_eq!(r.statistic("rho_0").unwrap().observed, 1.0);
        assert_eq!(r.statistic("rho_sum").unwrap().observed, 1.0);
        let south = trace_rule_experiment(&Angle::PI, &Angle::HALF_PI, &g1, &g2, &cfg).unwrap();
        assert_eq!(south.statistic("rho_0").unwrap().observed, 0.0);
    }

    #[test]
    fn interference_exact_parts() {
        let cfg = small_cfg();
        let r = interference_experiment(&SampleGrid::exhaustive(2, 8), &cfg).unwrap();
        for name in ["complementarity", "blocked_mz_leading_one", "full_mz_constant_one"] {
            assert_eq!(r.statistic(name).unwrap().observed, 1.0, "{name}");
        }
        let t = r.statistic("transmitted_detection").unwrap().observed;
        let d = r.statistic("blocked_mz_downstream_transmitted").unwrap().observed;
        assert_eq!(t, d);
    }

    #[test]
    fn walks_reproducible() {
        let cfg = small_cfg();
        let p = WalkParams { jitter_depth: 8, ..WalkParams::default() };
        let a = weak_reduction_ensemble(&Angle::HALF_PI, 40, &p, &cfg, 5).unwrap();
        let b = weak_reduction_ensemble(&Angle::HALF_PI, 40, &p, &cfg, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.north + a.south + a.non_converged, 40);
        let near_north = weak_reduction_ensemble(&Angle::pi_fraction(1, 64), 40, &p, &cfg, 5).unwrap();
        assert_eq!(near_north.north, 40);
    }

    #[test]
    fn stream_split_independent() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        let c: u64 = stream_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
