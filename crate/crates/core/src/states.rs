//! Real-number states built from a seed string.
//!
//! A qubit state `r(θ, λ)` is the partial reduction at `θ` of the seed
//! rotated by the phase `λ = 2πq`. Phases exist only on the dyadic grid:
//! any other longitude is rejected with [`Error::OffGrid`], so there is no
//! state to consult for a counterfactual measurement direction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::angle::{Angle, BinaryThreshold};
use crate::digits::{champernowne, phi_shift, relabel, value, DigitBuilder, DigitString};
use crate::error::{Error, Result};
use crate::phase::{phase_rotate, qubit_exponent, rotation_operator, PAdicRational};
use crate::reduction::{
    binary_survivors, partial_reduce, reduce_compound, weighted_survivors, ReductionOutcome, SIZING_FACTOR,
};

/// A point on the Bloch sphere with longitude `λ = 2π·lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub theta: Angle,
    pub lambda: PAdicRational,
}

impl BlochPoint {
    pub fn new(theta: Angle, lambda: PAdicRational) -> Result<Self> {
        if lambda.base() != 2 {
            return Err(Error::BaseMismatch { expected: 2, found: lambda.base() });
        }
        let r = theta.radians();
        if !(0.0..=std::f64::consts::PI).contains(&r) {
            return Err(Error::Precondition(format!("colatitude {theta} outside [0, π]")));
        }
        Ok(Self { theta, lambda: lambda.mod_one() })
    }

    /// A point whose longitude is `2π·numer/denom`, checked against the grid
    /// of depth `n_max`.
    pub fn from_turns(theta: Angle, numer: i64, denom: i64, n_max: u32) -> Result<Self> {
        Self::new(theta, PAdicRational::from_ratio(2, numer, denom, n_max)?)
    }
}

/// Angles of a three-level state: `λ₁ = 2π·lambda1` is triadic, `λ₂ =
/// 2π·lambda2` dyadic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QutritAngles {
    pub theta1: Angle,
    pub theta2: Angle,
    pub lambda1: PAdicRational,
    pub lambda2: PAdicRational,
}

impl QutritAngles {
    pub fn new(theta1: Angle, theta2: Angle, lambda1: PAdicRational, lambda2: PAdicRational) -> Result<Self> {
        if lambda1.base() != 3 {
            return Err(Error::BaseMismatch { expected: 3, found: lambda1.base() });
        }
        if lambda2.base() != 2 {
            return Err(Error::BaseMismatch { expected: 2, found: lambda2.base() });
        }
        Ok(Self { theta1, theta2, lambda1: lambda1.mod_one(), lambda2: lambda2.mod_one() })
    }
}

/// Seed string and grid sizing for qubit states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    seed: DigitString,
    n_max: u32,
    target_length: usize,
}

pub const DEFAULT_N_MAX: u32 = 12;
pub const DEFAULT_TARGET_LENGTH: usize = 1 << 16;
pub const DEFAULT_SEED_LENGTH: usize = 1 << 18;

impl StateConfig {
    /// The seed length must be a multiple of `2^(n_max+2)` and at least
    /// [`SIZING_FACTOR`] times `target_length`.
    pub fn new(seed: DigitString, n_max: u32, target_length: usize) -> Result<Self> {
        if seed.base() != 2 {
            return Err(Error::BaseMismatch { expected: 2, found: seed.base() });
        }
        let block = 1usize << (n_max + 2);
        if !seed.len().is_multiple_of(block) {
            return Err(Error::LengthNotDivisible { length: seed.len(), block });
        }
        if seed.len() < SIZING_FACTOR * target_length {
            return Err(Error::SuffixTooShort { needed: SIZING_FACTOR * target_length, available: seed.len() });
        }
        Ok(Self { seed, n_max, target_length })
    }

    pub fn champernowne(n_max: u32, seed_length: usize, target_length: usize) -> Result<Self> {
        Self::new(champernowne(2, seed_length)?, n_max, target_length)
    }

    pub fn seed(&self) -> &DigitString {
        &self.seed
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn target_length(&self) -> usize {
        self.target_length
    }

    /// Rejects longitudes deeper than the grid.
    pub fn check_lambda(&self, q: &PAdicRational) -> Result<()> {
        let q = q.mod_one();
        if q.base() != 2 || q.depth() > self.n_max {
            return Err(Error::OffGrid {
                numer: q.numer() as i64,
                denom: q.denom() as i64,
                base: 2,
                max_depth: self.n_max,
            });
        }
        Ok(())
    }
}

impl Default for StateConfig {
    fn default() -> Self {
        Self::champernowne(DEFAULT_N_MAX, DEFAULT_SEED_LENGTH, DEFAULT_TARGET_LENGTH).expect("default sizing is valid")
    }
}

/// Seed string and grid sizing for three-level states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QutritConfig {
    seed: DigitString,
    /// Deepest dyadic grid for `λ₂`.
    pub n_max2: u32,
    /// Deepest triadic grid for `λ₁`.
    pub n_max3: u32,
    pub target_length: usize,
}

impl QutritConfig {
    pub fn new(seed: DigitString, n_max2: u32, n_max3: u32, target_length: usize) -> Result<Self> {
        if seed.base() != 3 {
            return Err(Error::BaseMismatch { expected: 3, found: seed.base() });
        }
        if seed.len() < SIZING_FACTOR * target_length {
            return Err(Error::SuffixTooShort { needed: SIZING_FACTOR * target_length, available: seed.len() });
        }
        Ok(Self { seed, n_max2, n_max3, target_length })
    }

    pub fn seed(&self) -> &DigitString {
        &self.seed
    }
}

impl Default for QutritConfig {
    fn default() -> Self {
        Self::new(champernowne(3, 3usize.pow(10)).expect("valid base"), 10, 6, 1 << 12).expect("default sizing is valid")
    }
}

/// `r(θ, λ)`: the seed rotated by `λ`, then partially reduced at `θ`.
pub fn qubit_state(cfg: &StateConfig, p: &BlochPoint) -> Result<DigitString> {
    cfg.check_lambda(&p.lambda)?;
    let rotated = phase_rotate(&cfg.seed, &p.lambda)?;
    let (reduced, _) = partial_reduce(&rotated, &p.theta)?;
    if reduced.len() < cfg.target_length {
        return Err(Error::SuffixTooShort { needed: cfg.target_length, available: reduced.len() });
    }
    Ok(reduced)
}

fn off_grid(q: &PAdicRational, max_depth: u32) -> Error {
    Error::OffGrid { numer: q.numer() as i64, denom: q.denom() as i64, base: q.base(), max_depth }
}

/// The base-3 seed with both phases applied, before any reduction.
///
/// The nonzero digits are rotated by `λ₂` as a base-2 string over `{1, 2}`
/// and put back among the zeros, then the whole string is rotated by `λ₁`.
/// The seed is shortened as needed so each rotation sees whole blocks.
pub fn qutrit_phase(cfg: &QutritConfig, lambda1: &PAdicRational, lambda2: &PAdicRational) -> Result<DigitString> {
    let (q1, q2) = (lambda1.mod_one(), lambda2.mod_one());
    if q1.base() != 3 || q1.depth() > cfg.n_max3 {
        return Err(off_grid(&q1, cfg.n_max3));
    }
    if q2.base() != 2 || q2.depth() > cfg.n_max2 {
        return Err(off_grid(&q2, cfg.n_max2));
    }
    let op2 = rotation_operator(&qubit_exponent(&q2));
    let b2 = op2.block_size();
    let seed = cfg.seed.to_bytes();
    let nonzero = seed.iter().filter(|&&d| d != 0).count();
    let keep = nonzero / b2 * b2;
    if keep == 0 {
        return Err(Error::SuffixTooShort { needed: b2, available: nonzero });
    }
    let mut cut = 0;
    let mut seen = 0;
    while seen < keep {
        seen += usize::from(seed[cut] != 0);
        cut += 1;
    }
    let bits: Vec<u8> = seed[..cut].iter().filter(|&&d| d != 0).map(|&d| d - 1).collect();
    let mut rotated = op2.apply_digits(&bits)?.into_iter();
    let mut b: Vec<u8> = seed[..cut]
        .iter()
        .map(|&d| if d == 0 { 0 } else { rotated.next().expect("one rotated digit per nonzero") + 1 })
        .collect();

    let op3 = rotation_operator(&q1.scale(3));
    let b3 = op3.block_size();
    b.truncate(b.len() / b3 * b3);
    if b.is_empty() {
        return Err(Error::SuffixTooShort { needed: b3, available: cut });
    }
    DigitString::from_bytes(3, &op3.apply_digits(&b)?)
}

/// The two reduction stages of a three-level state.
///
/// First the `{1, 2}` subsequence is partially reduced at `θ₂`, the zeros
/// staying in place. Then the string is reduced at `θ₁` on its class
/// indicator (0 against `{1, 2}`), with suffixes valued under the measure
/// that weights class 0 by its frequency in the string.
pub fn qutrit_reduce(s: &DigitString, theta1: &Angle, theta2: &Angle) -> Result<DigitString> {
    if s.base() != 3 {
        return Err(Error::BaseMismatch { expected: 3, found: s.base() });
    }
    let digits = s.to_bytes();
    let positions: Vec<usize> = (0..digits.len()).filter(|&i| digits[i] != 0).collect();
    let mut keep = vec![false; digits.len()];
    let mut end = digits.len();
    if !positions.is_empty() {
        let sub_digits: Vec<u8> = positions.iter().map(|&i| digits[i] - 1).collect();
        let sub = DigitString::from_bytes(2, &sub_digits)?;
        let (flags, decided) = binary_survivors(&sub, &BinaryThreshold::from_angle(theta2))?;
        for (k, &pos) in positions.iter().enumerate() {
            keep[pos] = flags[k];
        }
        // The first undecided subsequence position ends the usable string.
        if decided < positions.len() {
            end = positions[decided];
        }
    }
    let b: Vec<u8> = (0..end).filter(|&i| digits[i] == 0 || keep[i]).map(|i| digits[i]).collect();
    if b.is_empty() {
        return Err(Error::EmptyResult);
    }
    let classes: Vec<bool> = b.iter().map(|&d| d != 0).collect();
    let p0 = classes.iter().filter(|&&c| !c).count() as f64 / b.len() as f64;
    let survivors = weighted_survivors(&classes, p0, &BinaryThreshold::from_angle(theta1));
    let out: Vec<u8> = b.iter().zip(&survivors).filter(|&(_, &k)| k).map(|(&d, _)| d).collect();
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    DigitString::from_bytes(3, &out)
}

/// `r(θ₁, θ₂, λ₁, λ₂)`.
pub fn qutrit_state(cfg: &QutritConfig, a: &QutritAngles) -> Result<DigitString> {
    let rotated = qutrit_phase(cfg, &a.lambda1, &a.lambda2)?;
    let state = qutrit_reduce(&rotated, &a.theta1, &a.theta2)?;
    if state.len() < cfg.target_length {
        return Err(Error::SuffixTooShort { needed: cfg.target_length, available: state.len() });
    }
    Ok(state)
}

/// Interleaves `N` qubit strings into one base-`2^N` string: digit `j` is
/// the big-endian concatenation of the `j`-th bits.
pub fn composite(qubits: &[DigitString]) -> Result<DigitString> {
    let first = qubits.first().ok_or(Error::EmptyString)?;
    if qubits.len() > 16 {
        return Err(Error::Precondition(format!("{} channels exceed the 16 supported", qubits.len())));
    }
    for q in qubits {
        if q.base() != 2 {
            return Err(Error::BaseMismatch { expected: 2, found: q.base() });
        }
        if q.len() != first.len() {
            return Err(Error::LengthMismatch { expected: first.len(), found: q.len() });
        }
    }
    let base = 1u32 << qubits.len();
    DigitString::from_iter_checked(base, (0..first.len()).map(|j| qubits.iter().fold(0, |acc, q| (acc << 1) | q.get(j))))
}

/// Channel `k` (0-based, most significant first) of a base-`2^N` string.
pub fn extract_channel(s: &DigitString, channels: u32, k: u32) -> Result<DigitString> {
    if s.base() != 1 << channels {
        return Err(Error::BaseMismatch { expected: 1 << channels, found: s.base() });
    }
    if k >= channels {
        return Err(Error::Precondition(format!("channel {k} of {channels}")));
    }
    let shift = channels - 1 - k;
    DigitString::from_iter_checked(2, s.iter().map(|d| (d >> shift) & 1))
}

/// Keeps only the digits in `keep`, relabeled in order onto `0..keep.len()`.
pub fn subsystem(s: &DigitString, keep: &[u32]) -> Result<DigitString> {
    if keep.is_empty() {
        return Err(Error::Precondition("subsystem needs at least one digit".into()));
    }
    let mut map = BTreeMap::new();
    for (i, &d) in keep.iter().enumerate() {
        if d >= s.base() {
            return Err(Error::DigitOutOfRange { digit: d, position: i, base: s.base() });
        }
        if map.insert(d, i as u32).is_some() {
            return Err(Error::Precondition(format!("digit {d} listed twice")));
        }
    }
    let mut sorted: Vec<u32> = keep.to_vec();
    sorted.sort_unstable();
    let order: BTreeMap<u32, u32> = sorted.iter().enumerate().map(|(i, &d)| (d, i as u32)).collect();
    let base = (keep.len() as u32).max(2);
    let mut b = DigitBuilder::with_capacity(base, s.len())?;
    for d in s.iter() {
        if let Some(&t) = order.get(&d) {
            b.push(t);
        }
    }
    if b.is_empty() {
        return Err(Error::EmptyResult);
    }
    b.finish()
}

/// The global-phase-free Hadamard: `.000…` goes to the seed and `.111…` to
/// its complement.
pub fn hadamard_equiv(s: &DigitString, cfg: &StateConfig) -> Result<DigitString> {
    match (s.base(), s.constant_digit()) {
        (2, Some(0)) => Ok(cfg.seed.clone()),
        (2, Some(1)) => Ok(phi_shift(&cfg.seed, 1)),
        _ => Err(Error::NotAnEigenstate),
    }
}

/// `i^(4/2^N)` in a single blockwise pass; the block is `2^(N−1)` digits.
pub fn u_n_gate(s: &DigitString, n: u32) -> Result<DigitString> {
    if n >= 63 {
        return Err(Error::Precondition(format!("gate order {n} too large")));
    }
    phase_rotate(s, &PAdicRational::new(2, 1, n))
}

/// `r(t₀ + nΔt)` for `n = 0..=steps`, each the seed rotated by `n·q`.
pub fn schrodinger_evolve(s: &DigitString, q: &PAdicRational, steps: usize) -> Result<Vec<DigitString>> {
    if q.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: q.base() });
    }
    let step = rotation_operator(&qubit_exponent(q));
    let mut op = rotation_operator(&PAdicRational::zero(2));
    let mut out = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        out.push(op.apply(s)?);
        op = op.compose(&step);
    }
    Ok(out)
}

/// Transmitted and reflected beams: the reflected state sits at `λ + π`.
pub fn beamsplitter_pair(s: &DigitString) -> Result<(DigitString, DigitString)> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    Ok((s.clone(), phi_shift(s, 1)))
}

/// Output of a Mach-Zehnder interferometer with one arm blocked: `r` when
/// `r ≥ ½`, otherwise `1 − r`.
pub fn blocked_mz_output(s: &DigitString) -> Result<DigitString> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    Ok(if s.leading_digit() == 1 { s.clone() } else { phi_shift(s, 1) })
}

/// Output of the unobstructed interferometer, the eigenstate `.111…`.
pub fn full_mz_output(s: &DigitString) -> Result<DigitString> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    DigitString::constant(2, 1, s.len())
}

/// Couples a qubit to an `M`-level detector whose digits are `J−1` where the
/// qubit has 0 and `J` where it has 1.
///
/// A detector reduced to `J` cascades to the constant `K`; one reduced to
/// `J−1` is reported unchanged with no attractor.
pub fn measurement_coupling(qubit: &DigitString, m: u32, j: u32, k: u32) -> Result<ReductionOutcome> {
    if qubit.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: qubit.base() });
    }
    if !(1 <= j && j < k && k < m) {
        return Err(Error::Precondition(format!("need 1 ≤ J < K < M, got J={j}, K={k}, M={m}")));
    }
    let detector = relabel(qubit, &BTreeMap::from([(0, j - 1), (1, j)]), m)?;
    let reduced = reduce_compound(&detector);
    if reduced.attractor == Some(j) {
        Ok(ReductionOutcome {
            final_state: DigitString::constant(m, k, detector.len())?,
            attractor: Some(k),
            steps: reduced.steps + (k - j) as usize,
        })
    } else {
        Ok(ReductionOutcome { final_state: detector, attractor: None, steps: 0 })
    }
}

/// `value(s) + value(s')` for a beam pair, for checking `1 − 2^(−L)`.
pub fn pair_value_sum(s: &DigitString) -> Result<num_rational::BigRational> {
    let (a, b) = beamsplitter_pair(s)?;
    Ok(value(&a) + value(&b))
}
