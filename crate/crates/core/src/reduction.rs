//! Digit deletion, partial reduction and the reduction dynamics.
//!
//! Partial reduction keeps or deletes each digit of a two-symbol string by
//! comparing the suffix starting at that digit with the threshold
//! `t = cos²(θ/2)`: a hi digit is deleted when its suffix is below `t`, a lo
//! digit when its suffix is at or above `t`. Suffixes are read through a
//! window of [`COMPARE_DIGITS`] digits, which decides the comparison exactly
//! against the 64-digit threshold.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{Angle, BinaryThreshold};
use crate::digits::{delete_where, relabel, DeletionLog, DigitBuilder, DigitString};
use crate::error::{Error, Result};
use crate::phase::{phase_rotate, PAdicRational, PhaseTable};

/// Suffix digits read for each comparison: the threshold precision plus 8.
pub const COMPARE_DIGITS: usize = 72;
/// Fewest remaining digits for which a finite suffix is compared exactly.
pub const K_GUARD: usize = 16;
/// Input-to-output length ratio callers should provision for.
pub const SIZING_FACTOR: usize = 4;
/// Survivors read when a reduced string is turned into a real value.
pub const VALUE_DIGITS: usize = 64;

/// Result of a reduction operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutcome {
    pub final_state: DigitString,
    /// `Some(j)` when the state was driven to the constant string `.jjj…`,
    /// `None` for a null reduction.
    pub attractor: Option<u32>,
    pub steps: usize,
}

/// `⊥j`: deletes every occurrence of `j`.
pub fn project(s: &DigitString, j: u32) -> Result<(DigitString, DeletionLog)> {
    delete_where(s, |_, d| d == j)
}

/// Applies `⊥j` for each listed digit in turn, composing the logs.
pub fn project_all(s: &DigitString, digits: &[u32]) -> Result<(DigitString, DeletionLog)> {
    let mut current = s.clone();
    let mut log = DeletionLog::identity(s.len());
    for &j in digits {
        let (next, step) = project(&current, j)?;
        log = log.then(&step)?;
        current = next;
    }
    Ok((current, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    AtOrAbove,
    Undecided,
}

/// The threshold in units of `2^-72`.
fn target_units(t: &BinaryThreshold) -> u128 {
    if t.is_one() {
        1u128 << COMPARE_DIGITS
    } else {
        (t.bits() as u128) << (COMPARE_DIGITS - 64)
    }
}

/// Compares the suffix of `s` at `pos` with the threshold.
///
/// With `complete` the string is taken as final: suffixes with at least
/// [`K_GUARD`] digits are compared by their exact finite value. Otherwise,
/// and for shorter suffixes, `s` is treated as the prefix of a longer
/// string and only comparisons that hold for every continuation are
/// decided.
fn compare_suffix(s: &DigitString, pos: usize, target: u128, complete: bool) -> Side {
    let rem = s.len() - pos;
    if rem >= COMPARE_DIGITS {
        // The threshold has 64 digits, so the first 64 suffix digits decide.
        let head = (s.window64(pos) as u128) << (COMPARE_DIGITS - 64);
        return if head < target { Side::Below } else { Side::AtOrAbove };
    }
    let top = s.window128(pos) >> (128 - COMPARE_DIGITS);
    if rem >= COMPARE_DIGITS || (complete && rem >= K_GUARD) {
        return if top < target { Side::Below } else { Side::AtOrAbove };
    }
    if top >= target {
        Side::AtOrAbove
    } else if top + (1u128 << (COMPARE_DIGITS - rem)) <= target {
        Side::Below
    } else {
        Side::Undecided
    }
}

fn survives(digit: u32, side: Side) -> bool {
    match side {
        Side::Below => digit == 0,
        Side::AtOrAbove => digit == 1,
        Side::Undecided => false,
    }
}

/// Partial reduction of a base-2 string (lo = 0, hi = 1) at angle `θ`.
pub fn partial_reduce(s: &DigitString, theta: &Angle) -> Result<(DigitString, DeletionLog)> {
    partial_reduce_threshold(s, &BinaryThreshold::from_angle(theta))
}

/// Partial reduction against an explicit threshold.
///
/// Output stops at the first position whose comparison cannot be decided;
/// that position and everything after it appear in the log as deleted.
pub fn partial_reduce_threshold(s: &DigitString, t: &BinaryThreshold) -> Result<(DigitString, DeletionLog)> {
    let (out, log, _) = partial_reduce_extent(s, t)?;
    Ok((out, log))
}

/// Like [`partial_reduce_threshold`], also returning how many leading
/// positions were decided.
pub fn partial_reduce_extent(s: &DigitString, t: &BinaryThreshold) -> Result<(DigitString, DeletionLog, usize)> {
    let (keep, decided) = binary_survivors(s, t)?;
    let mut out = DigitBuilder::with_capacity(2, s.len())?;
    let mut kept = Vec::with_capacity(s.len());
    let mut deleted = Vec::new();
    for (pos, d) in s.iter().enumerate() {
        if keep[pos] {
            kept.push(pos);
            out.push(d);
        } else {
            deleted.push((pos, d));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok((out.finish()?, DeletionLog::from_parts(s.len(), kept, deleted), decided))
}

/// Survival flag of every position and the number of leading positions
/// decided; undecided positions are flagged as deleted.
pub(crate) fn binary_survivors(s: &DigitString, t: &BinaryThreshold) -> Result<(Vec<bool>, usize)> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    let target = target_units(t);
    let mut keep = vec![false; s.len()];
    let mut decided = 0usize;
    for (pos, d) in s.iter().enumerate() {
        let side = compare_suffix(s, pos, target, true);
        if side == Side::Undecided {
            break;
        }
        decided += 1;
        keep[pos] = survives(d, side);
    }
    if decided == 0 {
        return Err(Error::SuffixTooShort { needed: K_GUARD, available: s.len() });
    }
    Ok((keep, decided))
}

/// The first `target_length` survivors of a partial reduction, with the
/// input sized by [`SIZING_FACTOR`].
pub fn partial_reduce_sized(s: &DigitString, theta: &Angle, target_length: usize) -> Result<DigitString> {
    let needed = SIZING_FACTOR * target_length;
    if s.len() < needed {
        return Err(Error::SuffixTooShort { needed, available: s.len() });
    }
    let (out, _) = partial_reduce(s, theta)?;
    if out.len() < target_length {
        return Err(Error::SuffixTooShort { needed: target_length, available: out.len() });
    }
    out.prefix(target_length)
}

/// The first `count` survivors of reducing `s`, scanning only as far as
/// needed. `s` is treated as the prefix of a longer string, so every
/// emitted digit agrees with the reduction of any extension of `s`.
pub fn reduced_prefix(s: &DigitString, t: &BinaryThreshold, count: usize) -> Result<DigitString> {
    let out = scan_survivors(s, t, count)?;
    if out.len() < count {
        return Err(Error::SuffixTooShort { needed: count, available: out.len() });
    }
    out.finish()
}

/// Up to `max` leading survivors of `s` treated as a prefix.
fn scan_survivors(s: &DigitString, t: &BinaryThreshold, max: usize) -> Result<DigitBuilder> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    let target = target_units(t);
    let mut out = DigitBuilder::with_capacity(2, max.min(s.len()))?;
    for pos in 0..s.len() {
        if out.len() == max {
            break;
        }
        let side = compare_suffix(s, pos, target, false);
        if side == Side::Undecided {
            break;
        }
        let d = s.get(pos);
        if survives(d, side) {
            out.push(d);
        }
    }
    Ok(out)
}

/// Partial reduction of a string over any two symbols `lo < hi`, by
/// relabeling to `{0, 1}` and back.
pub fn partial_reduce_pair(s: &DigitString, lo: u32, hi: u32, theta: &Angle) -> Result<(DigitString, DeletionLog)> {
    if lo >= hi {
        return Err(Error::Precondition(format!("expected lo < hi, got {lo} and {hi}")));
    }
    let base = s.base();
    let binary = relabel(s, &BTreeMap::from([(lo, 0), (hi, 1)]), 2)?;
    let (reduced, log) = partial_reduce(&binary, theta)?;
    Ok((relabel(&reduced, &BTreeMap::from([(0, lo), (1, hi)]), base)?, log))
}

/// Partial reduction of a binary class string whose suffixes are valued
/// under the measure with weight `p0` on class 0.
///
/// The suffix value is `F_j = p0 + (1−p0)·F_{j+1}` when `c_j = 1` and
/// `p0·F_{j+1}` when `c_j = 0`, with `F = 0` past the end; for `p0 = 1/2` it
/// is the ordinary binary value. Deletion follows the same rule as
/// [`partial_reduce`].
pub fn partial_reduce_weighted(c: &DigitString, p0: f64, t: &BinaryThreshold) -> Result<(DigitString, DeletionLog)> {
    if c.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: c.base() });
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Precondition(format!("class weight {p0} outside [0, 1]")));
    }
    let classes: Vec<bool> = c.iter().map(|d| d == 1).collect();
    let keep = weighted_survivors(&classes, p0, t);
    delete_where(c, |j, _| !keep[j])
}

/// Survival flags for [`partial_reduce_weighted`] over unpacked classes.
pub(crate) fn weighted_survivors(classes: &[bool], p0: f64, t: &BinaryThreshold) -> Vec<bool> {
    if t.is_one() {
        return classes.iter().map(|&hi| !hi).collect();
    }
    if t.is_zero() {
        return classes.to_vec();
    }
    let p1 = 1.0 - p0;
    let tf = t.to_f64();
    let mut keep = vec![false; classes.len()];
    let mut f = 0.0;
    for j in (0..classes.len()).rev() {
        f = if classes[j] { p0 + p1 * f } else { p0 * f };
        keep[j] = if classes[j] { f >= tf } else { f < tf };
    }
    keep
}

/// `R_j`: collapses the string to `.jjj…` when its leading digit is `j`.
pub fn reduce_rj(s: &DigitString, j: u32) -> ReductionOutcome {
    if s.leading_digit() == j {
        let steps = usize::from(s.constant_digit() != Some(j));
        let final_state = DigitString::constant(s.base(), j, s.len()).expect("digit of s is in range");
        ReductionOutcome { final_state, attractor: Some(j), steps }
    } else {
        ReductionOutcome { final_state: s.clone(), attractor: None, steps: 0 }
    }
}

/// `R = R₀R₁…R_{M−1}`: the leading digit picks the attractor.
pub fn reduce_compound(s: &DigitString) -> ReductionOutcome {
    let mut state = s.clone();
    let mut attractor = None;
    let mut steps = 0;
    for j in (0..s.base()).rev() {
        let out = reduce_rj(&state, j);
        if out.attractor.is_some() {
            attractor = out.attractor;
            steps += out.steps;
        }
        state = out.final_state;
    }
    ReductionOutcome { final_state: state, attractor, steps }
}

/// `ρ_j = count(j)/L` for every digit `j`.
pub fn degree_of_normality(s: &DigitString) -> Vec<f64> {
    let n = s.len() as f64;
    s.digit_counts().into_iter().map(|c| c as f64 / n).collect()
}

/// Integration settings for the reduction flow `θ̇ = α(r − ½) sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub alpha: f64,
    pub dt: f64,
    pub max_steps: usize,
    /// Distance in radians from a pole at which integration stops.
    pub tol_pole: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self { alpha: 1.0, dt: 0.25, max_steps: 10_000, tol_pole: 1e-6 }
    }
}

impl FlowParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.dt > 0.0 && self.tol_pole > 0.0) {
            return Err(Error::Precondition("alpha, dt and tol_pole must be positive".into()));
        }
        Ok(())
    }
}

/// One integration step as emitted to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub theta: f64,
    pub r_value: f64,
    pub lambda_numerator: u64,
    pub lambda_depth: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    /// CSV with header `step,theta,r_value,lambda_numerator,lambda_depth`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory CSV write");
        }
        if self.rows.is_empty() {
            return "step,theta,r_value,lambda_numerator,lambda_depth\n".into();
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }
}

/// A run of the reduction flow that reached a pole.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    /// Attractor 0 is the north pole `θ = 0`, attractor 1 the south pole.
    pub outcome: ReductionOutcome,
    pub trajectory: Trajectory,
    /// Sign of `r − ½` at the first step.
    pub departure_sign: i8,
}

/// `r(θ, λ) − ½` read from the first [`VALUE_DIGITS`] survivors.
///
/// The difference is formed in integer arithmetic so values next to ½ do
/// not round onto it. A prefix `.1000…0` is resolved by the first later
/// survivor 1; when there is none the value is exactly ½ and the flow is
/// stationary.
fn reduced_excess(rotated: &DigitString, theta: f64) -> Result<f64> {
    let t = BinaryThreshold::from_angle(&Angle::Radians(theta));
    let prefix = reduced_prefix(rotated, &t, VALUE_DIGITS)?;
    let v = prefix.iter().fold(0u64, |acc, d| (acc << 1) | d as u64);
    let half = 1u64 << 63;
    if v == half {
        let rest = scan_survivors(rotated, &t, usize::MAX)?;
        let rest = rest.finish()?;
        return match rest.iter().skip(VALUE_DIGITS).position(|d| d == 1) {
            Some(k) => Ok(2f64.powi(-((VALUE_DIGITS + k + 1) as i32))),
            None => Err(Error::Tie),
        };
    }
    Ok((v as i128 - half as i128) as f64 / 2f64.powi(64))
}

fn pole_of(theta: f64, tol: f64) -> Option<u32> {
    if theta <= tol {
        Some(0)
    } else if theta >= std::f64::consts::PI - tol {
        Some(1)
    } else {
        None
    }
}

fn finish_run(pole: u32, steps: usize, len: usize, trajectory: Trajectory, departure_sign: i8) -> FlowRun {
    let final_state = DigitString::constant(2, pole, len).expect("binary digit");
    FlowRun { outcome: ReductionOutcome { final_state, attractor: Some(pole), steps }, trajectory, departure_sign }
}

fn check_open_angle(theta0: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(Error::Precondition(format!("initial angle {theta0} outside (0, π)")));
    }
    Ok(())
}

/// Forward-Euler integration of `θ̇ = α(r − ½) sin θ` with `r` recomputed
/// from the current `θ` at every step.
pub fn evolve_ode(theta0: &Angle, lambda: &PAdicRational, r0: &DigitString, params: &FlowParams) -> Result<FlowRun> {
    params.validate()?;
    let mut theta = theta0.radians();
    check_open_angle(theta)?;
    let rotated = phase_rotate(r0, lambda)?;
    let mut trajectory = Trajectory::default();
    let mut departure_sign = 0i8;
    for step in 0..params.max_steps {
        let excess = reduced_excess(&rotated, theta)?;
        let r = 0.5 + excess;
        if step == 0 {
            departure_sign = if excess > 0.0 { 1 } else { -1 };
        }
        trajectory.rows.push(TrajectoryRow {
            step,
            theta,
            r_value: r,
            lambda_numerator: lambda.numer(),
            lambda_depth: lambda.depth(),
        });
        theta += params.alpha * excess * theta.sin() * params.dt;
        if let Some(pole) = pole_of(theta, params.tol_pole) {
            return Ok(finish_run(pole, step + 1, VALUE_DIGITS, trajectory, departure_sign));
        }
    }
    Err(Error::NonConvergence { steps: params.max_steps })
}

/// Settings for the weak-reduction walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub flow: FlowParams,
    /// `λ` moves by a uniform multiple of `2π/2^jitter_depth` after every
    /// step; 0 disables the jitter.
    pub jitter_depth: u32,
    /// Half-width in radians of an optional uniform `θ` kick per step; 0
    /// (the default) disables it.
    pub theta_jitter: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { flow: FlowParams::default(), jitter_depth: 12, theta_jitter: 0.0 }
    }
}

/// A weak-reduction walk from a seed string, building the phase table it
/// needs.
pub fn weak_reduction_walk(
    theta0: &Angle,
    lambda0: &PAdicRational,
    r0: &DigitString,
    params: &WalkParams,
    seed: u64,
) -> Result<FlowRun> {
    let depth = params.jitter_depth.max(lambda0.mod_one().depth());
    let table = PhaseTable::new(r0, depth, walk_prefix_len(r0))?;
    weak_reduction_walk_on(theta0, lambda0, &table, params, ChaCha8Rng::seed_from_u64(seed))
}

/// Rotated prefix length tracked for walks.
pub fn walk_prefix_len(r0: &DigitString) -> usize {
    r0.len().min(1024)
}

/// A weak-reduction walk over a prebuilt phase table, drawing its
/// perturbations from `rng`.
///
/// Each step integrates the flow once at the current `(θ, λ)` and then adds
/// a uniformly drawn `k/2^jitter_depth` to `λ/2π`.
pub fn weak_reduction_walk_on(
    theta0: &Angle,
    lambda0: &PAdicRational,
    table: &PhaseTable,
    params: &WalkParams,
    mut rng: ChaCha8Rng,
) -> Result<FlowRun> {
    params.flow.validate()?;
    if params.jitter_depth > table.depth() {
        return Err(Error::Precondition(format!(
            "jitter depth {} exceeds phase table depth {}",
            params.jitter_depth,
            table.depth()
        )));
    }
    let mut theta = theta0.radians();
    check_open_angle(theta)?;
    let mut lambda = lambda0.mod_one();
    let mut trajectory = Trajectory::default();
    let mut departure_sign = 0i8;
    let flow = params.flow;
    for step in 0..flow.max_steps {
        let excess = reduced_excess(table.lookup(&lambda)?, theta)?;
        let r = 0.5 + excess;
        if step == 0 {
            departure_sign = if excess > 0.0 { 1 } else { -1 };
        }
        trajectory.rows.push(TrajectoryRow {
            step,
            theta,
            r_value: r,
            lambda_numerator: lambda.numer(),
            lambda_depth: lambda.depth(),
        });
        theta += flow.alpha * excess * theta.sin() * flow.dt;
        if params.theta_jitter > 0.0 {
            theta += rng.random_range(-params.theta_jitter..=params.theta_jitter);
            theta = theta.clamp(0.0, std::f64::consts::PI);
        }
        if let Some(pole) = pole_of(theta, flow.tol_pole) {
            return Ok(finish_run(pole, step + 1, VALUE_DIGITS, trajectory, departure_sign));
        }
        if params.jitter_depth > 0 {
            let k = rng.random_range(0..1u64 << params.jitter_depth);
            lambda = lambda.add(&PAdicRational::new(2, k, params.jitter_depth)).mod_one();
        }
    }
    Err(Error::NonConvergence { steps: flow.max_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{champernowne, reinsert, restore, value};
    use num_rational::BigRational;
    use num_traits::One;

    fn ds(base: u32, d: &[u32]) -> DigitString {
        DigitString::new(base, d).unwrap()
    }

    /// Suffix comparison by exact rational arithmetic.
    fn oracle_reduce(s: &DigitString, t: &BigRational) -> Vec<u32> {
        let mut out = Vec::new();
        for j in 0..s.len() {
            let suffix = value(&s.slice(j..s.len()).unwrap());
            let d = s.get(j);
            let delete = if d == 1 { &suffix < t } else { &suffix >= t };
            if !delete {
                out.push(d);
            }
        }
        out
    }

    #[test]
    fn project_examples() {
        let c = champernowne(3, 9).unwrap();
        let (r, log) = project(&c, 0).unwrap();
        assert_eq!(r.to_vec(), vec![1, 2, 1, 1, 1, 1, 2]);
        assert_eq!(reinsert(&r, &log, 0).unwrap(), c);
        let s = ds(3, &[1, 2, 1]);
        assert_eq!(project(&s, 0).unwrap().0, s);
        let (zeros, _) = project_all(&c, &[1, 2]).unwrap();
        assert_eq!(zeros.constant_digit(), Some(0));
        assert_eq!(project_all(&ds(3, &[1, 2]), &[1, 2]), Err(Error::EmptyResult));
        let (_, log) = project_all(&c, &[1, 2]).unwrap();
        assert_eq!(restore(&zeros, &log).unwrap(), c);
    }

    #[test]
    fn partial_reduce_poles() {
        let s = champernowne(2, 1 << 10).unwrap();
        assert_eq!(partial_reduce(&s, &Angle::HALF_PI).unwrap().0, s);
        let (north, _) = partial_reduce(&s, &Angle::ZERO).unwrap();
        assert_eq!(north.constant_digit(), Some(0));
        assert_eq!(north.len(), s.count(0));
        let (south, _) = partial_reduce(&s, &Angle::PI).unwrap();
        assert_eq!(south.constant_digit(), Some(1));
        assert_eq!(south.len(), s.count(1));
        assert_eq!(partial_reduce(&DigitString::constant(2, 1, 64).unwrap(), &Angle::ZERO), Err(Error::EmptyResult));
    }

    #[test]
    fn partial_reduce_matches_rational_oracle() {
        let s = champernowne(2, 200).unwrap();
        for theta in [Angle::pi_fraction(1, 3), Angle::pi_fraction(2, 3), Angle::pi_fraction(1, 5), Angle::theta_star()] {
            let t = BinaryThreshold::from_angle(&theta);
            let (got, log) = partial_reduce_threshold(&s, &t).unwrap();
            let expected = oracle_reduce(&s, &t.to_ratio());
            let decided = log.kept_positions().len() + log.deleted().iter().filter(|&&(p, _)| p < s.len() - K_GUARD).count();
            assert!(decided >= s.len() - K_GUARD);
            assert_eq!(got.to_vec()[..], expected[..got.len()], "θ = {theta}");
            assert_eq!(restore(&got, &log).unwrap(), s);
        }
    }

    #[test]
    fn reduced_prefix_agrees_with_full_reduction() {
        let s = champernowne(2, 1 << 12).unwrap();
        let t = BinaryThreshold::from_angle(&Angle::pi_fraction(1, 3));
        let (full, _) = partial_reduce_threshold(&s, &t).unwrap();
        let short = s.prefix(500).unwrap();
        let p = reduced_prefix(&short, &t, 100).unwrap();
        assert_eq!(p, full.prefix(100).unwrap());
        assert!(matches!(reduced_prefix(&short, &t, 10_000), Err(Error::SuffixTooShort { .. })));
    }

    #[test]
    fn short_inputs() {
        // .0101 ≤ suffix < .0110 straddles 1/3.
        let s = ds(2, &[0, 1, 0, 1]);
        let t = BinaryThreshold::from_angle(&Angle::theta_star());
        assert!(matches!(partial_reduce_threshold(&s, &t), Err(Error::SuffixTooShort { .. })));
        let decidable = ds(2, &[0, 1, 1, 0]);
        let t = BinaryThreshold::from_angle(&Angle::pi_fraction(1, 3));
        assert_eq!(partial_reduce_threshold(&decidable, &t).unwrap().0.get(0), 0);
        let long = champernowne(2, 1000).unwrap();
        assert!(matches!(partial_reduce_sized(&long, &Angle::pi_fraction(1, 3), 300), Err(Error::SuffixTooShort { .. })));
        assert_eq!(partial_reduce_sized(&long, &Angle::HALF_PI, 250).unwrap(), long.prefix(250).unwrap());
    }

    #[test]
    fn leading_survivor_matches_value_order() {
        let s = champernowne(2, 1 << 12).unwrap();
        for m in 0..64u64 {
            let r = phase_rotate(&s, &PAdicRational::new(2, m, 6)).unwrap();
            for theta in [Angle::pi_fraction(1, 3), Angle::pi_fraction(3, 4), Angle::theta_star()] {
                let t = BinaryThreshold::from_angle(&theta);
                let lead = reduced_prefix(&r, &t, 1).unwrap().get(0);
                let below = value(&r) < t.to_ratio();
                assert_eq!(lead == 0, below, "m = {m}, θ = {theta}");
            }
        }
    }

    #[test]
    fn pair_reduction_on_other_symbols() {
        let s = relabel(&champernowne(2, 256).unwrap(), &BTreeMap::from([(0, 1), (1, 2)]), 3).unwrap();
        let (r, _) = partial_reduce_pair(&s, 1, 2, &Angle::ZERO).unwrap();
        assert_eq!(r.constant_digit(), Some(1));
        assert_eq!(partial_reduce_pair(&s, 1, 2, &Angle::HALF_PI).unwrap().0, s);
        assert!(partial_reduce_pair(&s, 2, 1, &Angle::HALF_PI).is_err());
    }

    #[test]
    fn weighted_reduction_reduces_to_binary_rule_at_half() {
        let s = phase_rotate(&champernowne(2, 1 << 12).unwrap(), &PAdicRational::new(2, 5, 6)).unwrap();
        for theta in [Angle::pi_fraction(1, 3), Angle::pi_fraction(2, 3), Angle::theta_star()] {
            let t = BinaryThreshold::from_angle(&theta);
            let (binary, _) = partial_reduce_threshold(&s, &t).unwrap();
            let (weighted, _) = partial_reduce_weighted(&s, 0.5, &t).unwrap();
            assert_eq!(weighted.prefix(binary.len()).unwrap(), binary);
        }
        let (all_lo, _) = partial_reduce_weighted(&s, 0.3, &BinaryThreshold::ONE).unwrap();
        assert_eq!(all_lo.constant_digit(), Some(0));
        let (all_hi, _) = partial_reduce_weighted(&s, 0.3, &BinaryThreshold::ZERO).unwrap();
        assert_eq!(all_hi.constant_digit(), Some(1));
    }

    #[test]
    fn reduction_operators() {
        let s = ds(2, &[1, 0, 1, 1]);
        let out = reduce_rj(&s, 1);
        assert_eq!((out.final_state.constant_digit(), out.attractor), (Some(1), Some(1)));
        let z = ds(2, &[0, 1, 1]);
        assert_eq!(reduce_rj(&z, 1), ReductionOutcome { final_state: z.clone(), attractor: None, steps: 0 });
        let c = DigitString::constant(3, 2, 5).unwrap();
        assert_eq!(reduce_rj(&c, 2).final_state, c);
        assert_eq!(reduce_rj(&c, 2).steps, 0);
        let t = ds(3, &[2, 0, 1]);
        let out = reduce_compound(&t);
        assert_eq!((out.final_state.constant_digit(), out.attractor), (Some(2), Some(2)));
        let zero = DigitString::constant(2, 0, 8).unwrap();
        assert_eq!(reduce_compound(&zero).final_state, zero);
        // Idempotence and commutation.
        for s in [ds(3, &[0, 2, 1]), ds(3, &[1, 1, 0]), ds(3, &[2, 2, 2])] {
            for j in 0..3 {
                let once = reduce_rj(&s, j).final_state;
                assert_eq!(reduce_rj(&once, j).final_state, once);
                for k in 0..3 {
                    let jk = reduce_rj(&reduce_rj(&s, k).final_state, j).final_state;
                    let kj = reduce_rj(&reduce_rj(&s, j).final_state, k).final_state;
                    assert_eq!(jk, kj);
                }
            }
        }
    }

    #[test]
    fn compound_attractor_follows_value_interval() {
        let c = champernowne(3, 3usize.pow(6)).unwrap();
        for start in (0..600).step_by(7) {
            let s = c.slice(start..start + 40).unwrap();
            let v = value(&s);
            let j = reduce_compound(&s).attractor.unwrap();
            let lo = BigRational::new(j.into(), 3.into());
            let hi = BigRational::new((j + 1).into(), 3.into());
            assert!(lo <= v && v < hi);
        }
        let half = ds(2, &[1, 0, 0]);
        assert_eq!(value(&half), BigRational::one() / BigRational::from_integer(2.into()));
        assert_eq!(reduce_compound(&half).attractor, Some(1));
    }

    #[test]
    fn lo_fraction_of_reduced_strings() {
        // For a normal string the lo fraction after reduction is
        // min(2t,1)/(min(2t,1)+min(2−2t,1)).
        let s = champernowne(2, 1 << 16).unwrap();
        for theta in [Angle::pi_fraction(1, 3), Angle::pi_fraction(2, 3)] {
            let t = theta.cos_squared_half_f64();
            let (a, b) = ((2.0 * t).min(1.0), (2.0 - 2.0 * t).min(1.0));
            let mut fracs = Vec::new();
            for m in [1u64, 3, 5, 7, 9, 11, 13, 15] {
                let r = phase_rotate(&s, &PAdicRational::new(2, m, 4)).unwrap();
                let (red, _) = partial_reduce(&r, &theta).unwrap();
                fracs.push(degree_of_normality(&red)[0]);
            }
            let mean: f64 = fracs.iter().sum::<f64>() / fracs.len() as f64;
            assert!((mean - a / (a + b)).abs() < 0.03, "θ = {theta}: {mean}");
        }
        assert_eq!(degree_of_normality(&DigitString::constant(3, 2, 9).unwrap()), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn ode_runs_to_the_departure_pole() {
        let r0 = champernowne(2, 1 << 12).unwrap();
        let params = FlowParams::default();
        for m in [0u64, 1, 5, 17, 40] {
            let q = PAdicRational::new(2, m, 6);
            let run = evolve_ode(&Angle::pi_fraction(1, 2), &q, &r0, &params).unwrap();
            let pole = run.outcome.attractor.unwrap();
            assert_eq!(pole == 1, run.departure_sign > 0, "m = {m}");
            let doubled = FlowParams { alpha: 2.0, ..params };
            let fast = evolve_ode(&Angle::pi_fraction(1, 2), &q, &r0, &doubled).unwrap();
            let ratio = fast.outcome.steps as f64 / run.outcome.steps as f64;
            assert!((ratio - 0.5).abs() <= 0.1, "m = {m}: {ratio}");
        }
        let mut slow = params;
        slow.max_steps = 3;
        assert_eq!(
            evolve_ode(&Angle::pi_fraction(1, 2), &PAdicRational::zero(2), &r0, &slow),
            Err(Error::NonConvergence { steps: 3 })
        );
        assert!(evolve_ode(&Angle::ZERO, &PAdicRational::zero(2), &r0, &params).is_err());
    }

    #[test]
    fn ode_is_monotone_when_r_keeps_its_sign() {
        let r0 = champernowne(2, 1 << 12).unwrap();
        let run = evolve_ode(&Angle::pi_fraction(1, 3), &PAdicRational::new(2, 3, 5), &r0, &FlowParams::default()).unwrap();
        let rows = &run.trajectory.rows;
        let sign = run.departure_sign as f64;
        if rows.iter().all(|r| (r.r_value - 0.5) * sign > 0.0) {
            assert!(rows.windows(2).all(|w| (w[1].theta - w[0].theta) * sign > 0.0));
        }
        let csv = run.trajectory.to_csv();
        assert!(csv.starts_with("step,theta,r_value,lambda_numerator,lambda_depth\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn walk_is_deterministic_and_reduces_to_ode_without_jitter() {
        let r0 = champernowne(2, 1 << 12).unwrap();
        let q = PAdicRational::new(2, 9, 6);
        let theta = Angle::pi_fraction(1, 3);
        let mut params = WalkParams { jitter_depth: 0, ..WalkParams::default() };
        let walk = weak_reduction_walk(&theta, &q, &r0, &params, 1).unwrap();
        let ode = evolve_ode(&theta, &q, &r0, &params.flow).unwrap();
        assert_eq!(walk.trajectory, ode.trajectory);
        assert_eq!(walk.outcome, ode.outcome);
        params.jitter_depth = 8;
        let a = weak_reduction_walk(&theta, &q, &r0, &params, 42).unwrap();
        let b = weak_reduction_walk(&theta, &q, &r0, &params, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.trajectory.rows.iter().any(|r| r.lambda_numerator != 9 || r.lambda_depth != 6));
    }
}
