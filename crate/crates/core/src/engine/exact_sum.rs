//! Exact running sum of `f64` values supporting removal.
//!
//! Every finite double is an integer multiple of 2^-1074, so the sum is kept as
//! a wide integer in units of 2^-1074, stored as signed 32-bit digits in `i64`
//! cells. Additions and removals are exact and order-independent; reading the
//! sum rounds once, to nearest even.

const CELLS: usize = 72;
const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
/// Operations between carry normalizations; each leaves cell magnitudes below 2^33.
const NORMALIZE_EVERY: u32 = 1 << 28;

#[derive(Clone)]
pub struct ExactSum {
    cells: Box<[i64; CELLS]>,
    pending: u32,
    nan: u64,
    pos_inf: u64,
    neg_inf: u64,
}

impl Default for ExactSum {
    fn default() -> Self {
        ExactSum::new()
    }
}

impl std::fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSum").field("value", &self.value()).finish()
    }
}

impl ExactSum {
    pub fn new() -> ExactSum {
        ExactSum { cells: Box::new([0; CELLS]), pending: 0, nan: 0, pos_inf: 0, neg_inf: 0 }
    }

    pub fn add(&mut self, x: f64) {
        self.apply(x, 1);
    }

    /// Removes a value previously added.
    pub fn remove(&mut self, x: f64) {
        self.apply(x, -1);
    }

    pub fn clear(&mut self) {
        *self = ExactSum::new();
    }

    fn apply(&mut self, x: f64, sign: i64) {
        if x.is_nan() {
            self.nan = self.nan.wrapping_add_signed(sign);
            return;
        }
        if x.is_infinite() {
            let c = if x > 0.0 { &mut self.pos_inf } else { &mut self.neg_inf };
            *c = c.wrapping_add_signed(sign);
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1 << 52) - 1);
        let (mantissa, shift) = if exp == 0 { (frac, 0) } else { (frac | (1 << 52), exp - 1) };
        if mantissa == 0 {
            return;
        }
        let sign = if negative { -sign } else { sign };
        let cell = (shift / DIGIT_BITS) as usize;
        let wide = u128::from(mantissa) << (shift % DIGIT_BITS);
        for k in 0..3 {
            let digit = ((wide >> (DIGIT_BITS * k)) as i64) & DIGIT_MASK;
            self.cells[cell + k as usize] += sign * digit;
        }
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            normalize(&mut self.cells);
            self.pending = 0;
        }
    }

    /// The correctly rounded sum. NaN if any NaN is present or both infinities are.
    pub fn value(&self) -> f64 {
        if self.nan > 0 || (self.pos_inf > 0 && self.neg_inf > 0) {
            return f64::NAN;
        }
        if self.pos_inf > 0 {
            return f64::INFINITY;
        }
        if self.neg_inf > 0 {
            return f64::NEG_INFINITY;
        }
        let mut cells = *self.cells;
        let top = normalize(&mut cells);
        let negative = top < 0;
        if negative {
            for c in cells.iter_mut() {
                *c = -*c;
            }
            normalize(&mut cells);
        }
        let magnitude = to_f64(&cells);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Propagates carries so cells `0..CELLS-1` hold digits in `[0, 2^32)`;
/// returns the signed top cell.
fn normalize(cells: &mut [i64; CELLS]) -> i64 {
    for i in 0..CELLS - 1 {
        let carry = cells[i] >> DIGIT_BITS;
        cells[i] &= DIGIT_MASK;
        cells[i + 1] += carry;
    }
    cells[CELLS - 1]
}

/// Rounds a non-negative normalized magnitude (in units of 2^-1074) to `f64`.
fn to_f64(cells: &[i64; CELLS]) -> f64 {
    let Some(top) = (0..CELLS).rev().find(|&i| cells[i] != 0) else { return 0.0 };
    let bit_len = top as u32 * DIGIT_BITS + (64 - (cells[top] as u64).leading_zeros());
    if bit_len <= 53 {
        let n = (cells[0] as u64) | ((cells.get(1).copied().unwrap_or(0) as u64) << DIGIT_BITS);
        // exact: n < 2^53 and 2^-1074 scaling of such n is representable
        return n as f64 * f64::from_bits(1);
    }
    // top 64 bits with a sticky bit for everything below
    let shift = bit_len - 64;
    let mut m: u64 = 0;
    for bit_cell in (0..CELLS).rev() {
        let lo = bit_cell as u32 * DIGIT_BITS;
        if lo + DIGIT_BITS <= shift || cells[bit_cell] == 0 {
            continue;
        }
        let digit = cells[bit_cell] as u128;
        let placed = if lo >= shift { digit << (lo - shift) } else { digit >> (shift - lo) };
        m |= placed as u64;
    }
    let sticky = (0..CELLS).any(|i| {
        let lo = i as u32 * DIGIT_BITS;
        if lo >= shift {
            return false;
        }
        let below = shift - lo;
        let mask = if below >= DIGIT_BITS { DIGIT_MASK } else { (1i64 << below) - 1 };
        cells[i] & mask != 0
    });
    if sticky {
        m |= 1;
    }
    ldexp(m as f64, shift as i32 - 1074)
}

/// `x * 2^e` computed with exact power-of-two steps.
fn ldexp(mut x: f64, mut e: i32) -> f64 {
    let pow2 = |k: i32| f64::from_bits(((k + 1023) as u64) << 52);
    while e > 1023 {
        x *= pow2(1023);
        e -= 1023;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1022 {
        x *= pow2(-1022);
        e += 1022;
    }
    x * pow2(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_exact() {
        let mut s = ExactSum::new();
        for x in [1e100, 1.0, -1e100, 1e-300] {
            s.add(x);
        }
        assert_eq!(s.value(), 1.0 + 1e-300);
        s.remove(1.0);
        assert_eq!(s.value(), 1e-300);
        s.remove(1e-300);
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn rounds_to_nearest_even() {
        let mut s = ExactSum::new();
        // 1 + 2^-53 is a tie and rounds to 1; adding 2^-105 breaks the tie upwards
        s.add(1.0);
        s.add(2f64.powi(-53));
        assert_eq!(s.value(), 1.0);
        s.add(2f64.powi(-105));
        assert_eq!(s.value(), 1.0 + f64::EPSILON);
    }

    #[test]
    fn subnormals_and_extremes() {
        let mut s = ExactSum::new();
        s.add(f64::from_bits(1));
        s.add(f64::from_bits(1));
        assert_eq!(s.value(), f64::from_bits(2));
        s.add(f64::MAX);
        s.add(f64::MAX);
        assert_eq!(s.value(), f64::INFINITY);
        s.remove(f64::MAX);
        assert_eq!(s.value(), f64::MAX);
        let mut n = ExactSum::new();
        n.add(-2.5);
        n.add(0.75);
        assert_eq!(n.value(), -1.75);
    }

    #[test]
    fn special_values() {
        let mut s = ExactSum::new();
        s.add(f64::INFINITY);
        assert_eq!(s.value(), f64::INFINITY);
        s.add(f64::NEG_INFINITY);
        assert!(s.value().is_nan());
        s.remove(f64::INFINITY);
        s.remove(f64::NEG_INFINITY);
        s.add(f64::NAN);
        assert!(s.value().is_nan());
        s.remove(f64::NAN);
        assert_eq!(s.value(), 0.0);
    }
}
