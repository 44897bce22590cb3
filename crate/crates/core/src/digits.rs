//! Finite base-M digit strings.
//!
//! A [`DigitString`] stands for the rational `.d₁d₂…d_L = Σ dᵢ·M^(−i)` and is
//! the carrier for every state in the crate. Digits are packed into `u64`
//! words, most significant digit first, with a per-digit width that is a
//! power of two so that no digit straddles a word boundary.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chars used by the compact text form for bases up to 36.
const DIGIT_CHARS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

fn digit_width(base: u32) -> u32 {
    let bits = 32 - (base - 1).leading_zeros();
    bits.max(1).next_power_of_two()
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DigitString {
    base: u32,
    len: usize,
    width: u32,
    words: Vec<u64>,
}

/// Iterator over the digits of a [`DigitString`], unpacking one word at a
/// time.
#[derive(Debug, Clone)]
pub struct Digits<'a> {
    s: &'a DigitString,
    pos: usize,
    word: u64,
}

impl Iterator for Digits<'_> {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.pos >= self.s.len {
            return None;
        }
        let w = self.s.width;
        let per_word = (64 / w) as usize;
        if self.pos.is_multiple_of(per_word) {
            self.word = self.s.words[self.pos / per_word];
        }
        let d = if w == 64 { self.word } else { self.word >> (64 - w) };
        self.word = if w == 64 { 0 } else { self.word << w };
        self.pos += 1;
        Some(d as u32)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.s.len - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Digits<'_> {}

/// Incremental packer for building a [`DigitString`] one digit at a time.
#[derive(Debug, Clone)]
pub struct DigitBuilder {
    base: u32,
    width: u32,
    len: usize,
    words: Vec<u64>,
}

impl DigitBuilder {
    pub fn new(base: u32) -> Result<Self> {
        Self::with_capacity(base, 0)
    }

    pub fn with_capacity(base: u32, digits: usize) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        let width = digit_width(base);
        let per_word = (64 / width) as usize;
        Ok(Self {
            base,
            width,
            len: 0,
            words: Vec::with_capacity(digits.div_ceil(per_word)),
        })
    }

    #[inline]
    pub fn push(&mut self, digit: u32) {
        debug_assert!(digit < self.base);
        let lg = (64 / self.width).trailing_zeros();
        let slot = self.len & ((1 << lg) - 1);
        if slot == 0 {
            self.words.push(0);
        }
        let shift = 64 - self.width * (slot as u32 + 1);
        *self.words.last_mut().unwrap() |= (digit as u64) << shift;
        self.len += 1;
    }

    pub fn push_checked(&mut self, digit: u32) -> Result<()> {
        if digit >= self.base {
            return Err(Error::DigitOutOfRange {
                digit,
                position: self.len,
                base: self.base,
            });
        }
        self.push(digit);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> Result<DigitString> {
        if self.len == 0 {
            return Err(Error::EmptyString);
        }
        Ok(DigitString {
            base: self.base,
            len: self.len,
            width: self.width,
            words: self.words,
        })
    }
}

impl DigitString {
    pub fn new(base: u32, digits: &[u32]) -> Result<Self> {
        let mut b = DigitBuilder::with_capacity(base, digits.len())?;
        for &d in digits {
            b.push_checked(d)?;
        }
        b.finish()
    }

    pub fn from_iter_checked<I: IntoIterator<Item = u32>>(base: u32, digits: I) -> Result<Self> {
        let mut b = DigitBuilder::new(base)?;
        for d in digits {
            b.push_checked(d)?;
        }
        b.finish()
    }

    /// Packs unpacked digits of a base of at most 256.
    pub fn from_bytes(base: u32, digits: &[u8]) -> Result<Self> {
        if !(2..=256).contains(&base) {
            return Err(Error::InvalidBase(base));
        }
        if digits.is_empty() {
            return Err(Error::EmptyString);
        }
        if let Some(pos) = digits.iter().position(|&d| d as u32 >= base) {
            return Err(Error::DigitOutOfRange { digit: digits[pos] as u32, position: pos, base });
        }
        let width = digit_width(base);
        let per_word = (64 / width) as usize;
        let words = digits
            .chunks(per_word)
            .map(|chunk| {
                let w = chunk.iter().fold(0u64, |acc, &d| (acc << width) | d as u64);
                w << (width as usize * (per_word - chunk.len()))
            })
            .collect();
        Ok(Self { base, len: digits.len(), width, words })
    }

    /// All digits unpacked, for bases of at most 256.
    pub fn to_bytes(&self) -> Vec<u8> {
        assert!(self.base <= 256, "digits of base {} do not fit in a byte", self.base);
        let w = self.width;
        let per_word = (64 / w) as usize;
        let mask = self.mask();
        let mut out = Vec::with_capacity(self.words.len() * per_word);
        for &word in &self.words {
            out.extend((0..per_word as u32).map(|k| ((word >> (64 - w * (k + 1))) & mask) as u8));
        }
        out.truncate(self.len);
        out
    }

    /// The string `.jjj…j` of the given length.
    pub fn constant(base: u32, digit: u32, len: usize) -> Result<Self> {
        let mut b = DigitBuilder::with_capacity(base, len)?;
        if digit >= base {
            return Err(Error::DigitOutOfRange { digit, position: 0, base });
        }
        for _ in 0..len {
            b.push(digit);
        }
        b.finish()
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: strings hold at least one digit.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Digit at 0-based position `i`.
    #[inline]
    pub fn get(&self, i: usize) -> u32 {
        // Digits per word is a power of two, so index arithmetic is shifts.
        let lg = (64 / self.width).trailing_zeros();
        let slot = (i & ((1 << lg) - 1)) as u32;
        let shift = 64 - self.width * (slot + 1);
        ((self.words[i >> lg] >> shift) & self.mask()) as u32
    }

    #[inline]
    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn leading_digit(&self) -> u32 {
        self.get(0)
    }

    pub fn iter(&self) -> Digits<'_> {
        Digits { s: self, pos: 0, word: 0 }
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn prefix(&self, n: usize) -> Result<Self> {
        self.slice(0..n.min(self.len))
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len {
            return Err(Error::LengthMismatch { expected: self.len, found: range.end });
        }
        let mut b = DigitBuilder::with_capacity(self.base, range.len())?;
        for i in range {
            b.push(self.get(i));
        }
        b.finish()
    }

    /// `Some(j)` when every digit equals `j`.
    pub fn constant_digit(&self) -> Option<u32> {
        let first = self.get(0);
        self.iter().all(|d| d == first).then_some(first)
    }

    pub fn count(&self, digit: u32) -> usize {
        self.iter().filter(|&d| d == digit).count()
    }

    /// Occurrence count of every digit `0..base`.
    pub fn digit_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.base as usize];
        if self.base == 2 {
            let ones: usize = self.words.iter().map(|w| w.count_ones() as usize).sum();
            counts[1] = ones;
            counts[0] = self.len - ones;
            return counts;
        }
        for d in self.iter() {
            counts[d as usize] += 1;
        }
        counts
    }

    /// Up to 128 binary digits starting at position `pos`, first digit in the
    /// most significant bit. Digits past the end read as zero.
    ///
    /// Only meaningful for base 2.
    pub fn window128(&self, pos: usize) -> u128 {
        debug_assert_eq!(self.base, 2);
        let word = |k: usize| -> u64 { self.words.get(k).copied().unwrap_or(0) };
        let w = pos / 64;
        let off = (pos % 64) as u32;
        let hi = ((word(w) as u128) << 64) | word(w + 1) as u128;
        let lo = word(w + 2) as u128;
        let mut out = if off == 0 { hi } else { (hi << off) | (lo >> (64 - off)) };
        let remaining = self.len.saturating_sub(pos);
        if remaining < 128 {
            out &= if remaining == 0 { 0 } else { u128::MAX << (128 - remaining) };
        }
        out
    }

    /// The 64 binary digits starting at `pos`, zero past the end.
    ///
    /// Only meaningful for base 2.
    #[inline]
    pub fn window64(&self, pos: usize) -> u64 {
        debug_assert_eq!(self.base, 2);
        let w = pos / 64;
        let off = (pos % 64) as u32;
        let first = self.words.get(w).copied().unwrap_or(0);
        let out = if off == 0 {
            first
        } else {
            (first << off) | (self.words.get(w + 1).copied().unwrap_or(0) >> (64 - off))
        };
        let remaining = self.len.saturating_sub(pos);
        if remaining < 64 {
            if remaining == 0 {
                return 0;
            }
            return out & (u64::MAX << (64 - remaining));
        }
        out
    }

    /// Approximate value from the leading 64 digits.
    pub fn value_f64(&self) -> f64 {
        let inv = 1.0 / self.base as f64;
        let mut scale = inv;
        let mut acc = 0.0;
        for d in self.iter().take(64) {
            acc += d as f64 * scale;
            scale *= inv;
        }
        acc
    }

    fn valid_mask_words(&self) -> Vec<u64> {
        let total_bits = self.len * self.width as usize;
        let mut masks = vec![u64::MAX; self.words.len()];
        let rem = total_bits % 64;
        if rem != 0 {
            *masks.last_mut().unwrap() = u64::MAX << (64 - rem);
        }
        masks
    }
}

impl fmt::Debug for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "DigitString({})", self)
        } else {
            let head: Vec<u32> = self.iter().take(32).collect();
            write!(f, "DigitString(base {}, len {}, {:?}…)", self.base, self.len, head)
        }
    }
}

/// Text form `base:hexlen:digit-run`.
///
/// For bases up to 36 the run holds one `[0-9a-z]` char per digit; larger
/// bases write each digit as fixed-width lowercase hex.
impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:x}:", self.base, self.len)?;
        if self.base <= 36 {
            let run: String = self.iter().map(|d| DIGIT_CHARS[d as usize] as char).collect();
            f.write_str(&run)
        } else {
            let hex_width = hex_digit_width(self.base);
            for d in self.iter() {
                write!(f, "{:0w$x}", d, w = hex_width)?;
            }
            Ok(())
        }
    }
}

fn hex_digit_width(base: u32) -> usize {
    let bits = 32 - (base - 1).leading_zeros() as usize;
    bits.div_ceil(4).max(1)
}

impl FromStr for DigitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, ':');
        let (Some(b), Some(l), Some(run)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("expected base:hexlen:digits, got {s:?}")));
        };
        let base: u32 = b.parse().map_err(|_| Error::Parse(format!("bad base {b:?}")))?;
        let len = usize::from_str_radix(l, 16).map_err(|_| Error::Parse(format!("bad length {l:?}")))?;
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        let mut builder = DigitBuilder::with_capacity(base, len)?;
        if base <= 36 {
            for c in run.chars() {
                let d = c
                    .to_digit(36)
                    .ok_or_else(|| Error::Parse(format!("bad digit char {c:?}")))?;
                builder.push_checked(d)?;
            }
        } else {
            let w = hex_digit_width(base);
            if run.len() % w != 0 || !run.is_ascii() {
                return Err(Error::Parse("digit run not a multiple of the hex width".into()));
            }
            for chunk in run.as_bytes().chunks(w) {
                let text = std::str::from_utf8(chunk).map_err(|e| Error::Parse(e.to_string()))?;
                let d = u32::from_str_radix(text, 16).map_err(|_| Error::Parse(format!("bad hex digit {text:?}")))?;
                builder.push_checked(d)?;
            }
        }
        if builder.len() != len {
            return Err(Error::LengthMismatch { expected: len, found: builder.len() });
        }
        builder.finish()
    }
}

#[derive(Serialize, Deserialize)]
struct DigitStringJson {
    base: u32,
    digits: Vec<u32>,
}

impl Serialize for DigitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DigitStringJson { base: self.base, digits: self.to_vec() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DigitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DigitStringJson::deserialize(deserializer)?;
        DigitString::new(raw.base, &raw.digits).map_err(serde::de::Error::custom)
    }
}

/// Which positions of a source string survived a deletion.
///
/// Positions are 0-based indices into the source string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionLog {
    source_length: usize,
    kept_positions: Vec<usize>,
    deleted: Vec<(usize, u32)>,
}

impl DeletionLog {
    /// The log of a deletion that removed nothing.
    pub fn identity(len: usize) -> Self {
        Self { source_length: len, kept_positions: (0..len).collect(), deleted: Vec::new() }
    }

    pub(crate) fn from_parts(source_length: usize, kept_positions: Vec<usize>, deleted: Vec<(usize, u32)>) -> Self {
        debug_assert_eq!(kept_positions.len() + deleted.len(), source_length);
        Self { source_length, kept_positions, deleted }
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn kept_positions(&self) -> &[usize] {
        &self.kept_positions
    }

    /// Deleted `(position, digit)` pairs in increasing position order.
    pub fn deleted(&self) -> &[(usize, u32)] {
        &self.deleted
    }

    pub fn deleted_digit(&self, position: usize) -> Option<u32> {
        self.deleted
            .binary_search_by_key(&position, |&(p, _)| p)
            .ok()
            .map(|i| self.deleted[i].1)
    }

    /// Composes `self` (applied first) with a log recorded on its output.
    pub fn then(&self, next: &DeletionLog) -> Result<DeletionLog> {
        if next.source_length != self.kept_positions.len() {
            return Err(Error::LengthMismatch { expected: self.kept_positions.len(), found: next.source_length });
        }
        let kept = next.kept_positions.iter().map(|&k| self.kept_positions[k]).collect();
        let mut deleted = self.deleted.clone();
        deleted.extend(next.deleted.iter().map(|&(p, d)| (self.kept_positions[p], d)));
        deleted.sort_unstable_by_key(|&(p, _)| p);
        Ok(DeletionLog::from_parts(self.source_length, kept, deleted))
    }
}

/// Counts of non-overlapping length-k blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub base: u32,
    pub block_length: usize,
    pub counts: BTreeMap<Vec<u32>, usize>,
    pub total_windows: usize,
}

impl FrequencyTable {
    pub fn frequency(&self, block: &[u32]) -> f64 {
        self.counts.get(block).copied().unwrap_or(0) as f64 / self.total_windows as f64
    }
}

/// First `length` digits of the base-`base` Champernowne number, the
/// concatenation of 0, 1, 2, … written in that base.
pub fn champernowne(base: u32, length: usize) -> Result<DigitString> {
    concatenate_integers(base, length, |k| k)
}

/// First `length` digits of the concatenation of the squares 0, 1, 4, 9, …
/// written in base `base`. Values of an integer polynomial concatenated this
/// way are normal in the chosen base (Davenport–Erdős), which makes this an
/// alternate normal seed independent of Champernowne.
pub fn squares_concatenation(base: u32, length: usize) -> Result<DigitString> {
    concatenate_integers(base, length, |k| k * k)
}

fn concatenate_integers(base: u32, length: usize, term: impl Fn(u64) -> u64) -> Result<DigitString> {
    if length == 0 {
        return Err(Error::EmptyString);
    }
    let mut b = DigitBuilder::with_capacity(base, length)?;
    let mut scratch = Vec::with_capacity(64);
    let mut k = 0u64;
    while b.len() < length {
        let mut x = term(k);
        scratch.clear();
        loop {
            scratch.push((x % base as u64) as u32);
            x /= base as u64;
            if x == 0 {
                break;
            }
        }
        for &d in scratch.iter().rev() {
            if b.len() == length {
                break;
            }
            b.push(d);
        }
        k += 1;
    }
    b.finish()
}

/// Applies the cyclic digit increment `d ↦ d+1 mod M` `k` times to every digit.
pub fn phi_shift(s: &DigitString, k: u32) -> DigitString {
    let k = k % s.base;
    if k == 0 {
        return s.clone();
    }
    if s.base == 2 {
        let words = s
            .words
            .iter()
            .zip(s.valid_mask_words())
            .map(|(w, m)| !w & m)
            .collect();
        return DigitString { words, ..s.clone() };
    }
    let mut b = DigitBuilder::with_capacity(s.base, s.len).expect("valid base");
    for d in s.iter() {
        b.push((d + k) % s.base);
    }
    b.finish().expect("non-empty")
}

/// Exact value `Σ dᵢ·M^(−i)`.
pub fn value(s: &DigitString) -> BigRational {
    let numer = numerator(s);
    let denom = BigUint::from(s.base).pow(s.len as u32);
    BigRational::new(numer.into(), denom.into())
}

/// The integer `d₁d₂…d_L` read in base M.
fn numerator(s: &DigitString) -> BigUint {
    if s.base == 2 {
        // Packed words are the big-endian bits padded on the right.
        let mut bytes = Vec::with_capacity(s.words.len() * 8);
        for w in &s.words {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        let padding = s.words.len() * 64 - s.len;
        return BigUint::from_bytes_be(&bytes) >> padding;
    }
    // Horner over chunks of digits that fit in a u64.
    let base = s.base as u64;
    let mut chunk_len = 0u32;
    let mut pow = 1u64;
    while let Some(p) = pow.checked_mul(base) {
        pow = p;
        chunk_len += 1;
    }
    let mut acc = BigUint::zero();
    let digits = s.to_vec();
    for chunk in digits.chunks(chunk_len as usize) {
        let mut part = 0u64;
        for &d in chunk {
            part = part * base + d as u64;
        }
        acc = acc * BigUint::from(base).pow(chunk.len() as u32) + BigUint::from(part);
    }
    acc
}

/// `1 − M^(−L)`: the largest value a length-L string can take.
pub fn max_value(base: u32, len: usize) -> BigRational {
    let denom = BigUint::from(base).pow(len as u32);
    BigRational::one() - BigRational::new(BigUint::one().into(), denom.into())
}

/// Maps digits pointwise through `map` into a string of base `new_base`.
pub fn relabel(s: &DigitString, map: &BTreeMap<u32, u32>, new_base: u32) -> Result<DigitString> {
    let mut table = vec![u32::MAX; s.base as usize];
    for (&from, &to) in map {
        if from < s.base {
            if to >= new_base {
                return Err(Error::DigitOutOfRange { digit: to, position: 0, base: new_base });
            }
            table[from as usize] = to;
        }
    }
    let mut b = DigitBuilder::with_capacity(new_base, s.len)?;
    for d in s.iter() {
        let t = table[d as usize];
        if t == u32::MAX {
            return Err(Error::UnmappedDigit(d));
        }
        b.push(t);
    }
    b.finish()
}

/// Removes every position `i` (0-based) where `delete(i, digit)` holds.
pub fn delete_where(s: &DigitString, mut delete: impl FnMut(usize, u32) -> bool) -> Result<(DigitString, DeletionLog)> {
    let mut b = DigitBuilder::with_capacity(s.base, s.len)?;
    let mut kept = Vec::with_capacity(s.len);
    let mut deleted = Vec::new();
    for (i, d) in s.iter().enumerate() {
        if delete(i, d) {
            deleted.push((i, d));
        } else {
            kept.push(i);
            b.push(d);
        }
    }
    if b.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok((b.finish()?, DeletionLog::from_parts(s.len, kept, deleted)))
}

/// Puts `fill_digit` back at every deleted position of `log`, with the
/// digits of `s` at the kept positions in order.
pub fn reinsert(s: &DigitString, log: &DeletionLog, fill_digit: u32) -> Result<DigitString> {
    if fill_digit >= s.base {
        return Err(Error::DigitOutOfRange { digit: fill_digit, position: 0, base: s.base });
    }
    reinsert_with(s, log, |_| fill_digit)
}

/// Like [`reinsert`] but restores the digits recorded in the log.
pub fn restore(s: &DigitString, log: &DeletionLog) -> Result<DigitString> {
    if let Some(&(_, d)) = log.deleted.iter().find(|&&(_, d)| d >= s.base) {
        return Err(Error::DigitOutOfRange { digit: d, position: 0, base: s.base });
    }
    let digits: HashMap<usize, u32> = log.deleted.iter().copied().collect();
    reinsert_with(s, log, |p| digits[&p])
}

fn reinsert_with(s: &DigitString, log: &DeletionLog, fill: impl Fn(usize) -> u32) -> Result<DigitString> {
    if s.len != log.kept_positions.len() {
        return Err(Error::LengthMismatch { expected: log.kept_positions.len(), found: s.len });
    }
    let mut b = DigitBuilder::with_capacity(s.base, log.source_length)?;
    let mut next_kept = 0usize;
    for pos in 0..log.source_length {
        if next_kept < log.kept_positions.len() && log.kept_positions[next_kept] == pos {
            b.push(s.get(next_kept));
            next_kept += 1;
        } else {
            b.push(fill(pos));
        }
    }
    b.finish()
}

/// Counts the `⌊L/k⌋` contiguous non-overlapping blocks of length `k`.
pub fn block_frequencies(s: &DigitString, k: usize) -> Result<FrequencyTable> {
    if k == 0 {
        return Err(Error::Precondition("block length must be at least 1".into()));
    }
    if s.len < k {
        return Err(Error::BlockTooLong { block: k, length: s.len });
    }
    let windows = s.len / k;
    let mut coded: HashMap<u64, usize> = HashMap::new();
    let coded_fits = (s.base as f64).powi(k as i32) < 2f64.powi(63);
    let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    if coded_fits {
        for w in 0..windows {
            let code = (0..k).fold(0u64, |acc, j| acc * s.base as u64 + s.get(w * k + j) as u64);
            *coded.entry(code).or_default() += 1;
        }
        for (code, c) in coded {
            let mut block = vec![0u32; k];
            let mut x = code;
            for slot in block.iter_mut().rev() {
                *slot = (x % s.base as u64) as u32;
                x /= s.base as u64;
            }
            counts.insert(block, c);
        }
    } else {
        for w in 0..windows {
            let block: Vec<u32> = (0..k).map(|j| s.get(w * k + j)).collect();
            *counts.entry(block).or_default() += 1;
        }
    }
    Ok(FrequencyTable { base: s.base, block_length: k, counts, total_windows: windows })
}

/// Largest `|freq(b) − M^(−k)|` over block lengths `k ≤ max_block` and over
/// every block `b` of that length, absent blocks included.
pub fn normality_deviation(s: &DigitString, max_block: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..=max_block.min(s.len) {
        let table = block_frequencies(s, k).expect("k within length");
        let expected = (s.base as f64).powi(-(k as i32));
        let possible = (s.base as f64).powi(k as i32);
        for &c in table.counts.values() {
            worst = worst.max((c as f64 / table.total_windows as f64 - expected).abs());
        }
        if (table.counts.len() as f64) < possible {
            worst = worst.max(expected);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(base: u32, d: &[u32]) -> DigitString {
        DigitString::new(base, d).unwrap()
    }

    #[test]
    fn champernowne_prefixes() {
        assert_eq!(champernowne(2, 12).unwrap().to_vec(), vec![0, 1, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1]);
        assert_eq!(champernowne(3, 9).unwrap().to_vec(), vec![0, 1, 2, 1, 0, 1, 1, 1, 2]);
        assert_eq!(champernowne(2, 1).unwrap().to_vec(), vec![0]);
        assert!(champernowne(1, 4).is_err());
    }

    #[test]
    fn champernowne_prefix_property() {
        let long = champernowne(3, 5000).unwrap();
        for n in [1, 17, 999, 4999] {
            assert_eq!(champernowne(3, n).unwrap(), long.prefix(n).unwrap());
        }
    }

    #[test]
    fn squares_seed_digits() {
        // 0 1 100 1001 10000 11001 ...
        let s = squares_concatenation(2, 16).unwrap();
        assert_eq!(s.to_vec(), vec![0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn phi_shift_cases() {
        assert_eq!(phi_shift(&ds(2, &[0, 1, 0]), 1), ds(2, &[1, 0, 1]));
        assert_eq!(phi_shift(&ds(3, &[0, 1, 2]), 1), ds(3, &[1, 2, 0]));
        let s = champernowne(3, 100).unwrap();
        assert_eq!(phi_shift(&s, 3), s);
    }

    #[test]
    fn value_cases() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(value(&ds(2, &[1, 1])), r(3, 4));
        assert_eq!(value(&ds(3, &[2])), r(2, 3));
        assert_eq!(value(&champernowne(2, 4).unwrap()), r(6, 16));
        assert_eq!(value(&ds(3, &[1, 2, 0, 2])), r(27 + 18 + 2, 81));
    }

    #[test]
    fn complement_law_base2() {
        let s = champernowne(2, 1000).unwrap();
        assert_eq!(value(&s) + value(&phi_shift(&s, 1)), max_value(2, 1000));
    }

    #[test]
    fn relabel_cases() {
        let m = BTreeMap::from([(1, 0), (2, 1)]);
        assert_eq!(relabel(&ds(3, &[1, 2, 1, 1]), &m, 2).unwrap(), ds(2, &[0, 1, 0, 0]));
        let m = BTreeMap::from([(2, 0), (5, 1)]);
        assert_eq!(relabel(&ds(8, &[5, 2, 2, 5]), &m, 2).unwrap(), ds(2, &[1, 0, 0, 1]));
        let id = BTreeMap::from([(0, 0), (1, 1), (2, 2)]);
        let s = champernowne(3, 50).unwrap();
        assert_eq!(relabel(&s, &id, 3).unwrap(), s);
        assert_eq!(relabel(&ds(3, &[0, 1]), &m, 2), Err(Error::UnmappedDigit(0)));
    }

    #[test]
    fn delete_and_reinsert() {
        let c = champernowne(3, 9).unwrap();
        let (out, log) = delete_where(&c, |_, d| d == 0).unwrap();
        assert_eq!(out.to_vec(), vec![1, 2, 1, 1, 1, 1, 2]);
        assert_eq!(reinsert(&out, &log, 0).unwrap(), c);

        let (same, log) = delete_where(&c, |_, _| false).unwrap();
        assert_eq!(same, c);
        assert!(log.deleted().is_empty());
        assert_eq!(reinsert(&same, &log, 0).unwrap(), c);

        assert_eq!(delete_where(&ds(2, &[1, 1, 1]), |_, d| d == 1).unwrap_err(), Error::EmptyResult);
    }

    #[test]
    fn reinsert_direct_construction() {
        let log = DeletionLog::from_parts(3, vec![1], vec![(0, 1), (2, 1)]);
        assert_eq!(reinsert(&ds(2, &[1]), &log, 0).unwrap(), ds(2, &[0, 1, 0]));
        assert_eq!(restore(&ds(2, &[0]), &log).unwrap(), ds(2, &[1, 0, 1]));
        assert!(matches!(reinsert(&ds(2, &[1, 1]), &log, 0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn log_composition() {
        let c = champernowne(3, 40).unwrap();
        let (a, log_a) = delete_where(&c, |_, d| d == 0).unwrap();
        let (b, log_b) = delete_where(&a, |_, d| d == 2).unwrap();
        let both = log_a.then(&log_b).unwrap();
        assert_eq!(restore(&b, &both).unwrap(), c);
        assert!(b.iter().all(|d| d == 1));
    }

    #[test]
    fn frequency_tables() {
        let s = ds(2, &[0, 1, 0, 1]);
        let t1 = block_frequencies(&s, 1).unwrap();
        assert_eq!(t1.counts, BTreeMap::from([(vec![0], 2), (vec![1], 2)]));
        let t2 = block_frequencies(&s, 2).unwrap();
        assert_eq!(t2.counts, BTreeMap::from([(vec![0, 1], 2)]));
        assert!(matches!(block_frequencies(&s, 5), Err(Error::BlockTooLong { .. })));

        let c = champernowne(2, 1 << 16).unwrap();
        let t = block_frequencies(&c, 1).unwrap();
        // Brute-force count.
        let zeros = c.iter().filter(|&d| d == 0).count();
        assert_eq!(t.counts[&vec![0]], zeros);
        // Binary Champernowne converges slowly: every block starts with a 1,
        // so the excess of ones is about 1/(2·log₂ n).
        assert!((t.frequency(&[0]) - 0.4772).abs() < 1e-4);
        assert!((t.frequency(&[0]) + t.frequency(&[1]) - 1.0).abs() < 1e-12);
        // Base 3 shows the same leading-digit bias, towards 1.
        let c3 = champernowne(3, 3usize.pow(10)).unwrap();
        let t3 = block_frequencies(&c3, 1).unwrap();
        for d in 0..3u32 {
            assert_eq!(t3.counts[&vec![d]], c3.iter().filter(|&x| x == d).count());
        }
        assert!((t3.frequency(&[1]) - 0.358).abs() < 1e-3);
    }

    #[test]
    fn normality_deviation_cases() {
        assert_eq!(normality_deviation(&DigitString::constant(2, 0, 64).unwrap(), 1), 0.5);
        let alt = DigitString::new(2, &[0, 1].repeat(32)).unwrap();
        assert_eq!(normality_deviation(&alt, 1), 0.0);
        let c = champernowne(2, 1 << 18).unwrap();
        let dev = normality_deviation(&c, 2);
        assert!((0.02..0.03).contains(&dev), "deviation {dev}");
    }

    #[test]
    fn window_reads_bits() {
        let c = champernowne(2, 300).unwrap();
        for pos in [0, 1, 63, 64, 65, 190, 250, 299, 300] {
            let w = c.window128(pos);
            for k in 0..128 {
                let expected = if pos + k < c.len() { c.get(pos + k) } else { 0 };
                assert_eq!(((w >> (127 - k)) & 1) as u32, expected, "pos {pos} k {k}");
            }
        }
    }

    #[test]
    fn text_form() {
        let c = champernowne(2, 12).unwrap();
        assert_eq!(c.to_string(), "2:c:011011100101");
        assert_eq!("2:c:011011100101".parse::<DigitString>().unwrap(), c);
        let big = DigitString::new(300, &[0, 299, 17]).unwrap();
        assert_eq!(big.to_string(), "300:3:00012b011");
        assert_eq!(big.to_string().parse::<DigitString>().unwrap(), big);
        assert!("2:3:0120".parse::<DigitString>().is_err());
        assert!("3:2:01".parse::<DigitString>().is_ok());
    }

    #[test]
    fn json_form() {
        let s = ds(3, &[2, 0, 1]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"base":3,"digits":[2,0,1]}"#);
        assert_eq!(serde_json::from_str::<DigitString>(&j).unwrap(), s);
        assert!(serde_json::from_str::<DigitString>(r#"{"base":2,"digits":[2]}"#).is_err());
    }

    #[test]
    fn digit_counts_match_iteration() {
        let c = champernowne(2, 1000).unwrap();
        let counts = c.digit_counts();
        assert_eq!(counts[1], c.iter().filter(|&d| d == 1).count());
        assert_eq!(counts[0] + counts[1], 1000);
    }
}
