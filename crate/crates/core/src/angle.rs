//! Angles and the binary thresholds derived from them.
//!
//! Reduction compares digit suffixes against `cos²(θ/2)` written as a binary
//! fraction. `f64` trigonometry carries only 53 bits, so the threshold is
//! computed in 192-bit fixed point and then truncated to [`THRESHOLD_BITS`].

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::digits::DigitString;
use crate::error::{Error, Result};

/// Binary digits kept in a [`BinaryThreshold`].
pub const THRESHOLD_BITS: u32 = 64;

const FIXED_BITS: u32 = 192;

/// A polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    /// `(numer/denom)·π`.
    PiFraction { numer: i64, denom: i64 },
    /// The angle in `[0, π]` with `cos²(θ/2) = numer/denom`.
    CosSquaredHalf { numer: u64, denom: u64 },
    Radians(f64),
}

impl Angle {
    pub const ZERO: Angle = Angle::PiFraction { numer: 0, denom: 1 };
    pub const PI: Angle = Angle::PiFraction { numer: 1, denom: 1 };
    pub const HALF_PI: Angle = Angle::PiFraction { numer: 1, denom: 2 };

    pub fn pi_fraction(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        let r = Ratio::new(numer, denom);
        Angle::PiFraction { numer: *r.numer(), denom: *r.denom() }
    }

    pub fn cos_squared_half(numer: u64, denom: u64) -> Self {
        assert!(denom != 0 && numer <= denom, "cos² must lie in [0, 1]");
        let r = Ratio::new(numer, denom);
        Angle::CosSquaredHalf { numer: *r.numer(), denom: *r.denom() }
    }

    /// The angle with `cos(θ/2) = 1/√3`.
    pub fn theta_star() -> Self {
        Angle::cos_squared_half(1, 3)
    }

    pub fn radians(&self) -> f64 {
        match *self {
            Angle::PiFraction { numer, denom } => std::f64::consts::PI * numer as f64 / denom as f64,
            Angle::CosSquaredHalf { numer, denom } => 2.0 * (numer as f64 / denom as f64).sqrt().acos(),
            Angle::Radians(r) => r,
        }
    }

    /// `cos²(θ/2)` in double precision.
    pub fn cos_squared_half_f64(&self) -> f64 {
        match *self {
            Angle::CosSquaredHalf { numer, denom } => numer as f64 / denom as f64,
            _ => {
                let c = (self.radians() / 2.0).cos();
                c * c
            }
        }
    }

    fn is_exact_zero(&self) -> bool {
        match *self {
            Angle::PiFraction { numer, denom } => numer.rem_euclid(2 * denom) == 0,
            Angle::CosSquaredHalf { numer, denom } => numer == denom,
            Angle::Radians(r) => r == 0.0,
        }
    }

    /// `⌊cos²(θ/2)·2^192⌋`, accurate to a few units in the last place.
    fn cos_squared_half_fixed(&self) -> BigInt {
        let one = BigInt::one() << FIXED_BITS;
        match *self {
            Angle::CosSquaredHalf { numer, denom } => (BigInt::from(numer) << FIXED_BITS) / BigInt::from(denom),
            _ => {
                let theta = match *self {
                    Angle::PiFraction { numer, denom } => {
                        let turns: Ratio<i64> = Ratio::new(numer.rem_euclid(2 * denom), denom);
                        pi_fixed() * BigInt::from(*turns.numer()) / BigInt::from(*turns.denom())
                    }
                    Angle::Radians(r) => f64_to_fixed(r),
                    Angle::CosSquaredHalf { .. } => unreachable!(),
                };
                let c = cos_fixed(&theta);
                let half: BigInt = (one + c) >> 1u32;
                half.clamp(BigInt::zero(), BigInt::one() << FIXED_BITS)
            }
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::PiFraction { numer: 0, .. } => write!(f, "0"),
            Angle::PiFraction { numer: 1, denom: 1 } => write!(f, "pi"),
            Angle::PiFraction { numer, denom: 1 } => write!(f, "{numer}pi"),
            Angle::PiFraction { numer, denom } => write!(f, "{numer}/{denom}pi"),
            Angle::CosSquaredHalf { numer, denom } => write!(f, "cos2={numer}/{denom}"),
            Angle::Radians(r) => write!(f, "{r}rad"),
        }
    }
}

/// Accepts `0`, `pi`, `3pi`, `1/3pi`, `pi/3`, `2pi/3`, `cos2=1/3` and `1.25rad`.
impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Parse(format!("cannot parse angle {s:?}; use forms like 1/3pi, pi/2 or cos2=1/3"));
        if let Some(rest) = s.strip_prefix("cos2=") {
            let (n, d) = parse_fraction(rest).ok_or_else(bad)?;
            if n < 0 || d <= 0 || n > d {
                return Err(bad());
            }
            return Ok(Angle::cos_squared_half(n as u64, d as u64));
        }
        if let Some(rest) = s.strip_suffix("rad") {
            return rest.parse::<f64>().map(Angle::Radians).map_err(|_| bad());
        }
        if s == "0" {
            return Ok(Angle::ZERO);
        }
        let Some(idx) = s.find("pi") else { return Err(bad()) };
        let (before, after) = (&s[..idx], &s[idx + 2..]);
        let (mut numer, mut denom) = if before.is_empty() {
            (1, 1)
        } else if let Some(b) = before.strip_suffix('*') {
            parse_fraction(b).ok_or_else(bad)?
        } else {
            parse_fraction(before).ok_or_else(bad)?
        };
        if let Some(d) = after.strip_prefix('/') {
            let extra: i64 = d.parse().map_err(|_| bad())?;
            denom *= extra;
        } else if !after.is_empty() {
            return Err(bad());
        }
        if denom == 0 {
            return Err(bad());
        }
        if denom < 0 {
            numer = -numer;
            denom = -denom;
        }
        Ok(Angle::pi_fraction(numer, denom))
    }
}

fn parse_fraction(s: &str) -> Option<(i64, i64)> {
    match s.split_once('/') {
        Some((n, d)) => Some((n.trim().parse().ok()?, d.trim().parse().ok()?)),
        None => Some((s.trim().parse().ok()?, 1)),
    }
}

fn pi_fixed() -> BigInt {
    static PI: OnceLock<BigInt> = OnceLock::new();
    PI.get_or_init(|| {
        // Machin: π = 16·atan(1/5) − 4·atan(1/239), with guard bits.
        let guard = 16;
        let bits = FIXED_BITS + guard;
        let atan_inv = |x: i64| -> BigInt {
            let one = BigInt::one() << bits;
            let x2 = BigInt::from(x * x);
            let mut power = one / BigInt::from(x);
            let mut sum = BigInt::zero();
            let mut k = 0i64;
            while !power.is_zero() {
                let term = &power / BigInt::from(2 * k + 1);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                power /= &x2;
                k += 1;
            }
            sum
        };
        (atan_inv(5) * 16 - atan_inv(239) * 4) >> guard
    })
    .clone()
}

fn f64_to_fixed(x: f64) -> BigInt {
    assert!(x.is_finite(), "angle must be finite");
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let shift = e + FIXED_BITS as i64;
    let mag = if shift >= 0 {
        BigInt::from(mant) << shift as usize
    } else {
        BigInt::from(mant) >> (-shift) as usize
    };
    if x < 0.0 {
        -mag
    } else {
        mag
    }
}

fn mul_fixed(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FIXED_BITS
}

/// Cosine in 192-bit fixed point via argument halving and a Taylor series.
fn cos_fixed(x: &BigInt) -> BigInt {
    const HALVINGS: u32 = 8;
    let one = BigInt::one() << FIXED_BITS;
    let y = x >> HALVINGS;
    let y2 = mul_fixed(&y, &y);
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut n = 1i64;
    loop {
        term = mul_fixed(&term, &y2) / BigInt::from((2 * n - 1) * (2 * n));
        if term.is_zero() {
            break;
        }
        if n % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        n += 1;
    }
    let mut c = sum;
    for _ in 0..HALVINGS {
        c = (mul_fixed(&c, &c) << 1) - &one;
    }
    c
}

/// A threshold `t ∈ [0, 1]` held as the leading [`THRESHOLD_BITS`] binary
/// digits, plus a flag for exactly one (whose expansion is `.111…`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryThreshold {
    bits: u64,
    exact_one: bool,
}

impl BinaryThreshold {
    pub const ONE: BinaryThreshold = BinaryThreshold { bits: u64::MAX, exact_one: true };
    pub const ZERO: BinaryThreshold = BinaryThreshold { bits: 0, exact_one: false };
    pub const HALF: BinaryThreshold = BinaryThreshold { bits: 1 << 63, exact_one: false };

    /// `cos²(θ/2)` truncated to 64 binary digits; error below `2^(−64)`.
    pub fn from_angle(theta: &Angle) -> Self {
        if theta.is_exact_zero() {
            return Self::ONE;
        }
        // Values within 2^-128 below a 64-bit boundary are snapped up, so
        // dyadic thresholds such as 1/2 survive the rounding of cos.
        let fixed = theta.cos_squared_half_fixed() + (BigInt::one() << (FIXED_BITS - 128));
        let top = (fixed >> (FIXED_BITS - THRESHOLD_BITS)).to_u128().unwrap_or(0);
        if top > u64::MAX as u128 {
            return Self::ONE;
        }
        Self { bits: top as u64, exact_one: false }
    }

    /// `⌊t·2^64⌋ / 2^64` for a rational `t ∈ [0, 1]`.
    pub fn from_ratio(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 || numer > denom {
            return Err(Error::Precondition(format!("threshold {numer}/{denom} outside [0, 1]")));
        }
        if numer == denom {
            return Ok(Self::ONE);
        }
        let bits = (((numer as u128) << 64) / denom as u128) as u64;
        Ok(Self { bits, exact_one: false })
    }

    pub fn from_bits(bits: u64) -> Self {
        Self { bits, exact_one: false }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_one(&self) -> bool {
        self.exact_one
    }

    pub fn is_zero(&self) -> bool {
        !self.exact_one && self.bits == 0
    }

    /// The `j`-th binary digit (1-based) of `t`.
    pub fn digit(&self, j: u32) -> u32 {
        assert!(j >= 1, "digits are 1-based");
        if self.exact_one {
            1
        } else if j > THRESHOLD_BITS {
            0
        } else {
            ((self.bits >> (THRESHOLD_BITS - j)) & 1) as u32
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.exact_one {
            1.0
        } else {
            self.bits as f64 / 2f64.powi(64)
        }
    }

    /// The 64 stored digits as a base-2 string (all ones when exactly one).
    pub fn to_digits(&self) -> DigitString {
        DigitString::from_iter_checked(2, (1..=THRESHOLD_BITS).map(|j| self.digit(j))).expect("64 binary digits")
    }

    /// Exact rational value of the stored threshold.
    pub fn to_ratio(&self) -> num_rational::BigRational {
        if self.exact_one {
            return num_rational::BigRational::one();
        }
        num_rational::BigRational::new(
            BigInt::from_biguint(Sign::Plus, BigUint::from(self.bits)),
            BigInt::one() << THRESHOLD_BITS,
        )
    }
}
