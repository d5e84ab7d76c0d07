use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest denominator exponent; values are `num / 2^exp` with `exp <= 64`.
const MAX_EXP: u32 = 64;

/// Exact non-negative dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Dyadic {
    num: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: u128, exp: u32) -> Self {
        assert!(exp <= MAX_EXP, "dyadic exponent {exp} above {MAX_EXP}");
        Self { num, exp }.reduced()
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self::new(1, k)
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    fn reduced(mut self) -> Self {
        if self.num == 0 {
            self.exp = 0;
            return self;
        }
        let tz = self.num.trailing_zeros().min(self.exp);
        self.num >>= tz;
        self.exp -= tz;
        self
    }

    fn aligned(self, other: Self) -> (u128, u128, u32) {
        let exp = self.exp.max(other.exp);
        let a = self.num.checked_shl(exp - self.exp).expect("dyadic overflow");
        let b = other.num.checked_shl(exp - other.exp).expect("dyadic overflow");
        assert!(a >> (exp - self.exp) == self.num && b >> (exp - other.exp) == other.num, "dyadic overflow");
        (a, b, exp)
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        let (a, b, exp) = self.aligned(other);
        Some(Self::new(a.checked_add(b)?, exp))
    }

    pub fn checked_sub(self, other: Self) -> Option<Self> {
        let (a, b, exp) = self.aligned(other);
        Some(Self::new(a.checked_sub(b)?, exp))
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }

    /// `"num/2^exp"` written out as `"num/denominator"`.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.num, 1u128 << self.exp)
    }

    /// Decimal expansion truncated to `places` digits after the point.
    pub fn to_decimal(&self, places: usize) -> String {
        let int_part = self.num >> self.exp;
        let mask = if self.exp == 0 { 0 } else { (1u128 << self.exp) - 1 };
        let mut rem = self.num & mask;
        let mut out = format!("{int_part}.");
        for _ in 0..places {
            // rem < 2^64, so rem * 10 cannot overflow
            rem *= 10;
            out.push(char::from(b'0' + (rem >> self.exp) as u8));
            rem &= mask;
        }
        out
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("dyadic overflow")
    }
}

impl std::ops::AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fraction_string())
    }
}
