//! Self-similar permutation operators on digit strings.
//!
//! A [`BlockOperator`] acts independently on each contiguous block of
//! `p^n` digits: output place `k` of a block takes the digit at place
//! `perm[k]` of the same block and applies the cyclic increment `φ`
//! `shift[k]` times. These signed permutations form a group under
//! composition, which is what makes fractional phases cheap: `i^(m/2^n)` is
//! one pass of a precomposed operator rather than `m` passes.
//!
//! The root operators follow the block recursion
//! `Ωₙ[B₁,…,B_p] = [Ωₙ₋₁(B_p), B₁, …, B_{p−1}]` with `Ω₀ = φ`, so that
//! `Ωₙ^p = Ωₙ₋₁` and `Ω₀^p = identity`. In base 2, `Ω₁` is the operator `i`
//! and `Ωₙ = χ⁽ⁿ⁾ = i^(1/2^(n−1))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digits::{DigitBuilder, DigitString};
use crate::error::{Error, Result};

/// The rational `m/pⁿ` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PAdicRational {
    base: u32,
    numer: u64,
    depth: u32,
}

impl PAdicRational {
    pub fn new(base: u32, numer: u64, depth: u32) -> Self {
        assert!(base >= 2, "p-adic base must be at least 2");
        let (mut numer, mut depth) = (numer, depth);
        if numer == 0 {
            depth = 0;
        }
        while depth > 0 && numer % base as u64 == 0 {
            numer /= base as u64;
            depth -= 1;
        }
        Self { base, numer, depth }
    }

    pub fn zero(base: u32) -> Self {
        Self::new(base, 0, 0)
    }

    /// Accepts `numer/denom` (taken mod 1) when its reduced denominator is
    /// `base^k` with `k ≤ max_depth`; anything else is [`Error::OffGrid`].
    pub fn from_ratio(base: u32, numer: i64, denom: i64, max_depth: u32) -> Result<Self> {
        if denom == 0 {
            return Err(Error::OffGrid { numer, denom, base, max_depth });
        }
        let r = num_rational::Ratio::new(numer, denom);
        let (n, d) = (*r.numer(), *r.denom());
        let off_grid = || Error::OffGrid { numer: n, denom: d, base, max_depth };
        let mut rest = d;
        let mut depth = 0u32;
        while rest % base as i64 == 0 {
            rest /= base as i64;
            depth += 1;
        }
        if rest != 1 || depth > max_depth {
            return Err(off_grid());
        }
        Ok(Self::new(base, n.rem_euclid(d) as u64, depth))
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    /// Exponent `n` of the reduced denominator `pⁿ`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn denom(&self) -> u64 {
        (self.base as u64).pow(self.depth)
    }

    pub fn is_zero(&self) -> bool {
        self.numer == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom() as f64
    }

    /// The representative in `[0, 1)`.
    pub fn mod_one(&self) -> Self {
        Self::new(self.base, self.numer % self.denom(), self.depth)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.base, other.base, "mixed p-adic bases");
        let depth = self.depth.max(other.depth);
        let p = self.base as u64;
        let a = self.numer * p.pow(depth - self.depth);
        let b = other.numer * p.pow(depth - other.depth);
        Self::new(self.base, a + b, depth)
    }

    pub fn scale(&self, k: u64) -> Self {
        Self::new(self.base, self.numer * k, self.depth)
    }
}

impl fmt::Display for PAdicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom())
    }
}

/// A signed permutation acting blockwise on strings.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockOperator {
    base: u32,
    #[serde(rename = "n")]
    depth: u32,
    perm: Vec<u32>,
    shift: Vec<u32>,
}

impl fmt::Debug for BlockOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.perm.len() <= 32 {
            write!(f, "BlockOperator(base {}, n {}, perm {:?}, shift {:?})", self.base, self.depth, self.perm, self.shift)
        } else {
            write!(f, "BlockOperator(base {}, n {}, block {})", self.base, self.depth, self.perm.len())
        }
    }
}

impl BlockOperator {
    pub fn identity(base: u32, depth: u32) -> Self {
        let size = (base as usize).pow(depth);
        Self { base, depth, perm: (0..size as u32).collect(), shift: vec![0; size] }
    }

    /// Builds an operator from explicit tables, checking that `perm` is a
    /// bijection on one block.
    pub fn from_tables(base: u32, depth: u32, perm: Vec<u32>, shift: Vec<u32>) -> Result<Self> {
        let size = (base as usize).pow(depth);
        if perm.len() != size || shift.len() != size {
            return Err(Error::LengthMismatch { expected: size, found: perm.len().max(shift.len()) });
        }
        let mut seen = vec![false; size];
        for &p in &perm {
            if p as usize >= size || std::mem::replace(&mut seen[p as usize], true) {
                return Err(Error::Precondition("place permutation is not a bijection".into()));
            }
        }
        let shift = shift.into_iter().map(|s| s % base).collect();
        Ok(Self { base, depth, perm, shift })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn block_size(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[u32] {
        &self.perm
    }

    pub fn shift(&self) -> &[u32] {
        &self.shift
    }

    pub fn is_identity(&self) -> bool {
        self.shift.iter().all(|&s| s == 0) && self.perm.iter().enumerate().all(|(k, &p)| p as usize == k)
    }

    /// The same action written on blocks of `p^depth` places.
    pub fn extend_to(&self, depth: u32) -> Self {
        assert!(depth >= self.depth, "cannot shrink an operator");
        let b = self.block_size();
        let size = (self.base as usize).pow(depth);
        let mut perm = Vec::with_capacity(size);
        let mut shift = Vec::with_capacity(size);
        for blk in 0..size / b {
            perm.extend(self.perm.iter().map(|&p| (blk * b) as u32 + p));
            shift.extend_from_slice(&self.shift);
        }
        Self { base: self.base, depth, perm, shift }
    }

    /// `self ∘ other`: apply `other` first. Operands of different depth are
    /// extended to the larger block.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.base, other.base, "mixed operator bases");
        if self.depth != other.depth {
            let depth = self.depth.max(other.depth);
            return self.extend_to(depth).compose(&other.extend_to(depth));
        }
        let p = self.base;
        let perm = self.perm.iter().map(|&j| other.perm[j as usize]).collect();
        let shift = self
            .perm
            .iter()
            .zip(&self.shift)
            .map(|(&j, &s)| (s + other.shift[j as usize]) % p)
            .collect();
        Self { base: p, depth: self.depth, perm, shift }
    }

    /// Equality as maps on strings, regardless of the block size used.
    pub fn equivalent(&self, other: &Self) -> bool {
        let depth = self.depth.max(other.depth);
        self.base == other.base && self.extend_to(depth) == other.extend_to(depth)
    }

    /// Applies the operator to every block of `s`.
    pub fn apply(&self, s: &DigitString) -> Result<DigitString> {
        self.check_operand(s)?;
        let b = self.block_size();
        if b == 1 {
            return Ok(crate::digits::phi_shift(s, self.shift[0]));
        }
        if !s.len().is_multiple_of(b) {
            return Err(Error::LengthNotDivisible { length: s.len(), block: b });
        }
        self.apply_blocks(s, s.len())
    }

    /// The first `len` digits of `apply(s)`, touching only the blocks those
    /// digits fall in. `s` must contain every block that overlaps the prefix.
    pub fn apply_prefix(&self, s: &DigitString, len: usize) -> Result<DigitString> {
        self.check_operand(s)?;
        let b = self.block_size();
        let needed = len.div_ceil(b) * b;
        if needed > s.len() {
            return Err(Error::LengthNotDivisible { length: s.len(), block: b });
        }
        self.apply_blocks(s, len)
    }

    /// Applies the operator to unpacked digits whose length is a multiple of
    /// the block size.
    pub fn apply_digits(&self, digits: &[u8]) -> Result<Vec<u8>> {
        let b = self.block_size();
        if !digits.len().is_multiple_of(b) {
            return Err(Error::LengthNotDivisible { length: digits.len(), block: b });
        }
        let p = self.base as u16;
        let mut out = Vec::with_capacity(digits.len());
        for block in digits.chunks_exact(b) {
            out.extend(
                self.perm
                    .iter()
                    .zip(&self.shift)
                    .map(|(&src, &sh)| ((block[src as usize] as u16 + sh as u16) % p) as u8),
            );
        }
        Ok(out)
    }

    fn check_operand(&self, s: &DigitString) -> Result<()> {
        if s.base() != self.base {
            return Err(Error::BaseMismatch { expected: self.base, found: s.base() });
        }
        Ok(())
    }

    fn apply_blocks(&self, s: &DigitString, len: usize) -> Result<DigitString> {
        let b = self.block_size();
        let p = self.base;
        let digits: Vec<u32> = s.iter().take(len.div_ceil(b) * b).collect();
        let mut out = DigitBuilder::with_capacity(p, len)?;
        'outer: for start in (0..len).step_by(b) {
            for (&src, &sh) in self.perm.iter().zip(&self.shift) {
                if out.len() == len {
                    break 'outer;
                }
                let d = digits[start + src as usize];
                out.push(if sh == 0 { d } else { (d + sh) % p });
            }
        }
        out.finish()
    }
}

/// `χ⁽ⁿ⁾`, the base-2 operator `i^(1/2^(n−1))` (with `χ⁽⁰⁾ = φ`).
pub fn chi(n: u32) -> BlockOperator {
    omega_root(2, n)
}

/// `ω₍ₚ₎^(1/pⁿ)`, built from the block recursion in the module docs.
pub fn omega_root(p: u32, n: u32) -> BlockOperator {
    assert!(p >= 2, "base must be at least 2");
    let mut perm = vec![0u32];
    let mut shift = vec![1 % p];
    for level in 1..=n {
        let sub = (p as usize).pow(level - 1);
        let mut next_perm = Vec::with_capacity(sub * p as usize);
        let mut next_shift = Vec::with_capacity(sub * p as usize);
        // First sub-block: previous operator on the last input sub-block.
        next_perm.extend(perm.iter().map(|&k| ((p as usize - 1) * sub) as u32 + k));
        next_shift.extend_from_slice(&shift);
        // Remaining sub-blocks: inputs 1..p−1 moved right by one sub-block.
        for blk in 0..(p as usize - 1) {
            next_perm.extend((0..sub).map(|k| (blk * sub + k) as u32));
            next_shift.extend(std::iter::repeat_n(0, sub));
        }
        perm = next_perm;
        shift = next_shift;
    }
    BlockOperator { base: p, depth: n, perm, shift }
}

/// `op^m` by repeated squaring.
pub fn operator_pow(op: &BlockOperator, m: u64) -> BlockOperator {
    let mut result = BlockOperator::identity(op.base, op.depth);
    let mut square = op.clone();
    let mut m = m;
    while m > 0 {
        if m & 1 == 1 {
            result = result.compose(&square);
        }
        m >>= 1;
        if m > 0 {
            square = square.compose(&square);
        }
    }
    result
}

/// `ω₍ₚ₎^e` for a p-adic exponent `e = m/p^k`. The exponent is reduced mod
/// the order `p^(k+1)` of the root before composing.
pub fn rotation_operator(exponent: &PAdicRational) -> BlockOperator {
    let p = exponent.base();
    let k = exponent.depth();
    let order = (p as u64).pow(k + 1);
    let m = exponent.numer() % order;
    if m == 0 {
        return BlockOperator::identity(p, 0);
    }
    operator_pow(&omega_root(p, k), m)
}

/// Base-2 exponent of `ω₍₂₎` that realizes the phase `e^(2πiq)`, i.e. `2q`
/// (equivalently `i^(4q)`).
pub fn qubit_exponent(q: &PAdicRational) -> PAdicRational {
    assert_eq!(q.base(), 2, "qubit phases are dyadic");
    q.mod_one().scale(2)
}

/// Block length needed to rotate a base-2 string by phase `q`.
pub fn qubit_block_size(q: &PAdicRational) -> usize {
    rotation_operator(&qubit_exponent(q)).block_size()
}

/// The phase map `r(λ) = i^(4q)(s)` for `λ = 2πq`.
pub fn phase_rotate(s: &DigitString, q: &PAdicRational) -> Result<DigitString> {
    if s.base() != 2 {
        return Err(Error::BaseMismatch { expected: 2, found: s.base() });
    }
    rotation_operator(&qubit_exponent(q)).apply(s)
}

/// Pearson lag-1 autocorrelation of `value(phase_rotate(s, j·q))` for
/// `j = 1..=steps`.
pub fn lag_correlation(s: &DigitString, q: &PAdicRational, steps: usize) -> Result<f64> {
    if steps < 3 {
        return Err(Error::Precondition("lag correlation needs at least 3 steps".into()));
    }
    let step = rotation_operator(&qubit_exponent(q));
    let mut op = BlockOperator::identity(2, 0);
    let mut values = Vec::with_capacity(steps);
    for _ in 0..steps {
        op = op.compose(&step);
        values.push(op.apply(s)?.value_f64());
    }
    lag1_autocorrelation(&values)
}

/// Pearson correlation between `x[..n-1]` and `x[1..]`.
pub fn lag1_autocorrelation(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::Precondition("lag correlation needs at least 3 values".into()));
    }
    let a = &x[..x.len() - 1];
    let b = &x[1..];
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        sab += (u - ma) * (v - mb);
        saa += (u - ma) * (u - ma);
        sbb += (v - mb) * (v - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero variance in lagged sequence"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Leading digits of `r(2πm/2^depth)` for every `m`, all from one seed.
///
/// Entry `m` is built from entry `m−1` by one more application of the grid
/// generator, restricted to the tracked prefix, so the whole table costs
/// `O(2^depth × prefix)`.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    depth: u32,
    prefixes: Vec<DigitString>,
}

impl PhaseTable {
    pub fn new(seed: &DigitString, depth: u32, prefix_len: usize) -> Result<Self> {
        if seed.base() != 2 {
            return Err(Error::BaseMismatch { expected: 2, found: seed.base() });
        }
        let prefix_len = prefix_len.min(seed.len());
        let generator = rotation_operator(&qubit_exponent(&PAdicRational::new(2, 1, depth)));
        let b = generator.block_size();
        if prefix_len.div_ceil(b) * b > seed.len() {
            return Err(Error::LengthNotDivisible { length: seed.len(), block: b });
        }
        let count = 1usize << depth;
        let mut src: Vec<usize> = (0..prefix_len).collect();
        let mut shift = vec![0u32; prefix_len];
        let mut prefixes = Vec::with_capacity(count);
        for _ in 0..count {
            let digits = src.iter().zip(&shift).map(|(&i, &sh)| (seed.get(i) + sh) % 2);
            prefixes.push(DigitString::from_iter_checked(2, digits)?);
            for (i, sh) in src.iter_mut().zip(shift.iter_mut()) {
                let (blk, k) = (*i / b, *i % b);
                *sh = (*sh + generator.shift[k]) % 2;
                *i = blk * b + generator.perm[k] as usize;
            }
        }
        Ok(Self { depth, prefixes })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.prefixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }

    /// Prefix of `r(2π·m/2^depth)`.
    pub fn get(&self, m: usize) -> &DigitString {
        &self.prefixes[m % self.prefixes.len()]
    }

    /// Prefix of `r(2πq)` for any `q` on the table's grid.
    pub fn lookup(&self, q: &PAdicRational) -> Result<&DigitString> {
        let q = q.mod_one();
        if q.depth() > self.depth {
            return Err(Error::OffGrid { numer: q.numer() as i64, denom: q.denom() as i64, base: 2, max_depth: self.depth });
        }
        let m = q.numer() << (self.depth - q.depth());
        Ok(self.get(m as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{champernowne, phi_shift};

    /// Symbolic digit: (source place, φ applications).
    type Sym = (usize, u32);

    fn symbolic(op: &BlockOperator) -> Vec<Sym> {
        op.perm.iter().zip(&op.shift).map(|(&p, &s)| (p as usize, s)).collect()
    }

    /// The verbal χ⁽ⁿ⁾ construction: φ on the last element, then swap the
    /// last two elements, the last two pairs, … and finally the two halves.
    fn chi_by_swaps(n: u32) -> Vec<Sym> {
        let size = 1usize << n;
        let mut v: Vec<Sym> = (0..size).map(|k| (k, 0)).collect();
        v[size - 1].1 ^= 1;
        for level in 0..n {
            let w = 1usize << level;
            let (a, b) = (size - 2 * w, size - w);
            let first: Vec<Sym> = v[a..b].to_vec();
            let second: Vec<Sym> = v[b..].to_vec();
            v[a..a + w].copy_from_slice(&second);
            v[a + w..].copy_from_slice(&first);
        }
        v
    }

    #[test]
    fn chi_matches_swap_description() {
        for n in 0..=10 {
            assert_eq!(symbolic(&chi(n)), chi_by_swaps(n), "n = {n}");
        }
    }

    #[test]
    fn chi3_tuple() {
        // (φ(a₈), a₇, a₅, a₆, a₁, a₂, a₃, a₄)
        let expected: Vec<Sym> = vec![(7, 1), (6, 0), (4, 0), (5, 0), (0, 0), (1, 0), (2, 0), (3, 0)];
        assert_eq!(symbolic(&chi(3)), expected);
        let s = DigitString::new(2, &[0, 1, 0, 0, 1, 1, 0, 1]).unwrap();
        assert_eq!(chi(3).apply(&s).unwrap().to_vec(), vec![0, 0, 1, 1, 0, 1, 0, 0]);
        assert_eq!(chi(0).apply(&DigitString::new(2, &[1]).unwrap()).unwrap().to_vec(), vec![0]);
    }

    #[test]
    fn omega3_tuples() {
        assert_eq!(symbolic(&omega_root(3, 1)), vec![(2, 1), (0, 0), (1, 0)]);
        assert_eq!(
            symbolic(&omega_root(3, 2)),
            vec![(8, 1), (6, 0), (7, 0), (0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0)]
        );
        assert_eq!(symbolic(&omega_root(2, 1)), vec![(1, 1), (0, 0)]);
    }

    #[test]
    fn group_laws() {
        let i = omega_root(2, 1);
        assert!(operator_pow(&i, 2).equivalent(&omega_root(2, 0)));
        assert!(operator_pow(&i, 4).is_identity());
        assert!(operator_pow(&omega_root(3, 0), 3).is_identity());
        for n in 1..=8 {
            let sq = operator_pow(&omega_root(2, n), 2);
            assert_eq!(sq, omega_root(2, n - 1).extend_to(n), "n = {n}");
        }
        for n in 1..=5 {
            let cube = operator_pow(&omega_root(3, n), 3);
            assert_eq!(cube, omega_root(3, n - 1).extend_to(n), "n = {n}");
        }
    }

    #[test]
    fn pow_matches_repeated_composition() {
        let op = omega_root(2, 5);
        let mut acc = BlockOperator::identity(2, 5);
        for m in 0..70u64 {
            assert_eq!(operator_pow(&op, m), acc, "m = {m}");
            acc = acc.compose(&op);
        }
    }

    #[test]
    fn apply_preconditions() {
        let s = champernowne(2, 12).unwrap();
        assert_eq!(chi(3).apply(&s), Err(Error::LengthNotDivisible { length: 12, block: 8 }));
        let t = champernowne(3, 9).unwrap();
        assert!(matches!(chi(1).apply(&t), Err(Error::BaseMismatch { .. })));
        assert_eq!(BlockOperator::identity(2, 3).apply(&champernowne(2, 16).unwrap()).unwrap(), champernowne(2, 16).unwrap());
    }

    #[test]
    fn apply_preserves_frequencies() {
        let s = champernowne(2, 1 << 14).unwrap();
        let before = s.digit_counts()[1] as f64 / s.len() as f64;
        for m in [1, 37, 512, 1023] {
            let r = phase_rotate(&s, &PAdicRational::new(2, m, 10)).unwrap();
            let ones = r.digit_counts()[1] as f64 / r.len() as f64;
            assert!((ones - before).abs() < 0.01 || (ones - (1.0 - before)).abs() < 0.01, "m = {m}: {ones}");
        }
    }

    #[test]
    fn phase_rotate_cases() {
        let s = champernowne(2, 1024).unwrap();
        assert_eq!(phase_rotate(&s, &PAdicRational::zero(2)).unwrap(), s);
        assert_eq!(phase_rotate(&s, &PAdicRational::new(2, 1, 1)).unwrap(), phi_shift(&s, 1));
        let quarter = phase_rotate(&s, &PAdicRational::new(2, 1, 2)).unwrap();
        for k in (0..1024).step_by(2) {
            assert_eq!(quarter.get(k), 1 - s.get(k + 1));
            assert_eq!(quarter.get(k + 1), s.get(k));
        }
        assert_eq!(qubit_block_size(&PAdicRational::new(2, 3, 12)), 1 << 11);
    }

    #[test]
    fn prefix_application_agrees() {
        let s = champernowne(2, 1 << 12).unwrap();
        let op = rotation_operator(&PAdicRational::new(2, 77, 9));
        let full = op.apply(&s).unwrap();
        assert_eq!(op.apply_prefix(&s, 300).unwrap(), full.prefix(300).unwrap());
    }

    #[test]
    fn phase_table_agrees_with_direct_rotation() {
        let s = champernowne(2, 1 << 12).unwrap();
        let table = PhaseTable::new(&s, 8, 200).unwrap();
        for m in [0u64, 1, 2, 3, 77, 128, 255] {
            let q = PAdicRational::new(2, m, 8);
            let direct = phase_rotate(&s, &q).unwrap().prefix(200).unwrap();
            assert_eq!(table.lookup(&q).unwrap(), &direct, "m = {m}");
        }
        assert!(table.lookup(&PAdicRational::new(2, 1, 9)).is_err());
    }

    #[test]
    fn lag_correlation_cases() {
        let s = champernowne(2, 1 << 14).unwrap();
        assert!(matches!(lag_correlation(&s, &PAdicRational::zero(2), 10), Err(Error::Degenerate(_))));
        assert!(lag_correlation(&s, &PAdicRational::new(2, 1, 4), 2).is_err());
        let c = lag_correlation(&s, &PAdicRational::new(2, 1, 10), 512).unwrap();
        assert!(c.abs() < 0.1, "corr {c}");
        // q = 1/2 alternates v, 1 − 2^−L − v.
        let alt = lag_correlation(&s, &PAdicRational::new(2, 1, 1), 16).unwrap();
        assert!((alt + 1.0).abs() < 1e-9);
        assert!((lag1_autocorrelation(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn padic_rationals() {
        let q = PAdicRational::new(2, 4, 4);
        assert_eq!((q.numer(), q.depth()), (1, 2));
        assert_eq!(PAdicRational::from_ratio(2, 3, 8, 12).unwrap(), PAdicRational::new(2, 3, 3));
        assert_eq!(PAdicRational::from_ratio(2, -1, 4, 12).unwrap(), PAdicRational::new(2, 3, 2));
        assert!(matches!(PAdicRational::from_ratio(2, 1, 3, 12), Err(Error::OffGrid { .. })));
        assert!(matches!(PAdicRational::from_ratio(2, 1, 1 << 13, 12), Err(Error::OffGrid { .. })));
        assert_eq!(PAdicRational::new(2, 3, 2).add(&PAdicRational::new(2, 1, 2)), PAdicRational::new(2, 1, 0));
        assert_eq!(PAdicRational::new(2, 3, 2).add(&PAdicRational::new(2, 1, 2)).mod_one(), PAdicRational::zero(2));
        assert_eq!(PAdicRational::from_ratio(3, 2, 9, 4).unwrap().denom(), 9);
    }

    #[test]
    fn operator_json_shape() {
        let j = serde_json::to_value(chi(1)).unwrap();
        assert_eq!(j, serde_json::json!({"base": 2, "n": 1, "perm": [1, 0], "shift": [1, 0]}));
        let back: BlockOperator = serde_json::from_value(j).unwrap();
        assert_eq!(back, chi(1));
        assert!(BlockOperator::from_tables(2, 1, vec![0, 0], vec![0, 0]).is_err());
    }
}
