//! Q-format two's-complement fixed-point arithmetic with saturation and
//! double-width "quire" intermediates.
//!
//! Every quantity that flows through the hardware-faithful datapath is a
//! [`Fixed`] word. Narrowing operations saturate instead of wrapping and
//! record the event in a sticky per-value flag.

use core::cmp::Ordering;
use core::fmt;

/// Bit layout of a fixed-point word: `total_bits` two's-complement bits,
/// `frac_bits` of which sit below the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QFormat {
    total_bits: u8,
    frac_bits: u8,
}

/// 32-bit word, 16 fractional bits. The default datapath format.
pub const Q16_16: QFormat = QFormat {
    total_bits: 32,
    frac_bits: 16,
};
/// 16-bit word, 8 fractional bits.
pub const Q8_8: QFormat = QFormat {
    total_bits: 16,
    frac_bits: 8,
};
/// 8-bit word, 4 fractional bits.
pub const Q4_4: QFormat = QFormat {
    total_bits: 8,
    frac_bits: 4,
};

impl QFormat {
    /// Build a format. Requires `0 < frac_bits < total_bits <= 64`.
    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self, FormatError> {
        if total_bits == 0 || total_bits > 64 || frac_bits == 0 || frac_bits >= total_bits {
            return Err(FormatError {
                total_bits,
                frac_bits,
            });
        }
        Ok(QFormat {
            total_bits,
            frac_bits,
        })
    }

    pub fn total_bits(&self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// Largest representable raw payload: `2^(total-1) - 1`.
    pub fn max_raw(&self) -> i64 {
        if self.total_bits == 64 {
            i64::MAX
        } else {
            (1i64 << (self.total_bits - 1)) - 1
        }
    }

    /// Smallest representable raw payload: `-2^(total-1)`.
    pub fn min_raw(&self) -> i64 {
        if self.total_bits == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.total_bits - 1))
        }
    }

    /// One least-significant-bit step as a real value, `2^-frac_bits`.
    pub fn quantum(&self) -> f64 {
        libm::exp2(-(self.frac_bits as f64))
    }

    /// Largest representable real value.
    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.quantum()
    }

    /// Smallest (most negative) representable real value.
    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.quantum()
    }
}

/// Invalid `QFormat` parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormatError {
    pub total_bits: u8,
    pub frac_bits: u8,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid fixed-point format q{}.{} (need 0 < frac < total <= 64)",
            self.total_bits as i16 - self.frac_bits as i16,
            self.frac_bits
        )
    }
}

impl core::error::Error for FormatError {}

/// A fixed-point value: raw two's-complement payload plus its format and a
/// sticky saturation flag that propagates through arithmetic.
///
/// Equality and ordering compare the numeric payload only; the flag is
/// bookkeeping, not value.
#[derive(Clone, Copy, Debug)]
pub struct Fixed {
    raw: i64,
    format: QFormat,
    saturated: bool,
}

impl PartialEq for Fixed {
    fn eq(&self, other: &Self) -> bool {
        self.format == other.format && self.raw == other.raw
    }
}

impl Eq for Fixed {}

impl PartialOrd for Fixed {
    /// Values in different formats are unordered.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.format == other.format {
            Some(self.raw.cmp(&other.raw))
        } else {
            None
        }
    }
}

/// Saturate a wide intermediate into the format's raw range.
pub(crate) fn clamp_wide(wide: i128, fmt: QFormat) -> (i64, bool) {
    let max = fmt.max_raw() as i128;
    let min = fmt.min_raw() as i128;
    if wide > max {
        (fmt.max_raw(), true)
    } else if wide < min {
        (fmt.min_raw(), true)
    } else {
        (wide as i64, false)
    }
}

impl Fixed {
    /// Zero in the given format.
    pub fn zero(fmt: QFormat) -> Self {
        Fixed {
            raw: 0,
            format: fmt,
            saturated: false,
        }
    }

    /// One in the given format (always representable since frac < total).
    pub fn one(fmt: QFormat) -> Self {
        Fixed {
            raw: 1i64 << fmt.frac_bits(),
            format: fmt,
            saturated: false,
        }
    }

    /// Largest representable value.
    pub fn max_value(fmt: QFormat) -> Self {
        Fixed {
            raw: fmt.max_raw(),
            format: fmt,
            saturated: false,
        }
    }

    /// Smallest representable value.
    pub fn min_value(fmt: QFormat) -> Self {
        Fixed {
            raw: fmt.min_raw(),
            format: fmt,
            saturated: false,
        }
    }

    /// Construct from a raw payload. Panics if the payload does not fit.
    pub fn from_raw(raw: i64, fmt: QFormat) -> Self {
        assert!(
            raw >= fmt.min_raw() && raw <= fmt.max_raw(),
            "raw {} out of range for q{}.{}",
            raw,
            fmt.total_bits() - fmt.frac_bits(),
            fmt.frac_bits()
        );
        Fixed {
            raw,
            format: fmt,
            saturated: false,
        }
    }

    pub(crate) fn from_raw_flag(raw: i64, fmt: QFormat, saturated: bool) -> Self {
        Fixed {
            raw,
            format: fmt,
            saturated,
        }
    }

    /// Quantize a real value: truncate `x * 2^frac` toward negative infinity,
    /// then saturate to the representable range. NaN maps to zero with the
    /// saturation flag set.
    pub fn from_real(x: f64, fmt: QFormat) -> Self {
        if x.is_nan() {
            return Fixed {
                raw: 0,
                format: fmt,
                saturated: true,
            };
        }
        let scaled = libm::floor(x * libm::exp2(fmt.frac_bits() as f64));
        // f64 -> i128 casts saturate, so the clamp sees the true magnitude
        let (raw, sat) = clamp_wide(scaled as i128, fmt);
        Fixed {
            raw,
            format: fmt,
            saturated: sat,
        }
    }

    /// The exact real value `raw / 2^frac` (exact as f64 for formats up to
    /// 53 total bits).
    pub fn to_real(&self) -> f64 {
        self.raw as f64 * self.format.quantum()
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.format
    }

    /// Whether any operation producing this value clipped to the range edge.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Smallest positive value, one least-significant bit.
    pub fn quantum(fmt: QFormat) -> Self {
        Fixed {
            raw: 1,
            format: fmt,
            saturated: false,
        }
    }

    /// Saturating two's-complement addition. Panics on format mismatch.
    pub fn sat_add(self, other: Fixed) -> Fixed {
        assert_eq!(self.format, other.format, "fixed-point format mismatch");
        let (raw, sat) = clamp_wide(self.raw as i128 + other.raw as i128, self.format);
        Fixed {
            raw,
            format: self.format,
            saturated: sat || self.saturated || other.saturated,
        }
    }

    /// Saturating subtraction. Panics on format mismatch.
    pub fn sat_sub(self, other: Fixed) -> Fixed {
        assert_eq!(self.format, other.format, "fixed-point format mismatch");
        let (raw, sat) = clamp_wide(self.raw as i128 - other.raw as i128, self.format);
        Fixed {
            raw,
            format: self.format,
            saturated: sat || self.saturated || other.saturated,
        }
    }

    /// Saturating negation (`-min` clips to `max`).
    pub fn sat_neg(self) -> Fixed {
        let (raw, sat) = clamp_wide(-(self.raw as i128), self.format);
        Fixed {
            raw,
            format: self.format,
            saturated: sat || self.saturated,
        }
    }

    /// Saturating absolute value.
    pub fn sat_abs(self) -> Fixed {
        if self.raw < 0 {
            self.sat_neg()
        } else {
            self
        }
    }

    /// Saturating left shift, the hardware scale-by-2^k.
    pub fn shl_sat(self, k: u32) -> Fixed {
        let (raw, sat) = clamp_wide((self.raw as i128) << k.min(100), self.format);
        Fixed {
            raw,
            format: self.format,
            saturated: sat || self.saturated,
        }
    }

    /// Arithmetic right shift, truncating toward negative infinity.
    pub fn shr_floor(self, k: u32) -> Fixed {
        let raw = if k >= 64 {
            if self.raw < 0 {
                -1
            } else {
                0
            }
        } else {
            self.raw >> k
        };
        Fixed {
            raw,
            format: self.format,
            saturated: self.saturated,
        }
    }

    /// Exact double-width product. Panics on format mismatch.
    pub fn mul_quire(self, other: Fixed) -> Quire {
        assert_eq!(self.format, other.format, "fixed-point format mismatch");
        Quire {
            raw: self.raw as i128 * other.raw as i128,
            source_format: self.format,
            saturated: self.saturated || other.saturated,
        }
    }

    /// Widen into a quire without scaling (value preserved).
    pub fn to_quire(self) -> Quire {
        Quire {
            raw: (self.raw as i128) << self.format.frac_bits(),
            source_format: self.format,
            saturated: self.saturated,
        }
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real())
    }
}

/// Double-width accumulator holding exact products at `2 * frac_bits`
/// fractional precision. Sums saturate only at the i128 edge, far beyond
/// anything the datapath produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quire {
    raw: i128,
    source_format: QFormat,
    saturated: bool,
}

impl Quire {
    pub fn zero(fmt: QFormat) -> Self {
        Quire {
            raw: 0,
            source_format: fmt,
            saturated: false,
        }
    }

    pub fn raw(&self) -> i128 {
        self.raw
    }

    pub fn source_format(&self) -> QFormat {
        self.source_format
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Exact accumulation of same-format quires.
    pub fn add(self, other: Quire) -> Quire {
        assert_eq!(
            self.source_format, other.source_format,
            "quire format mismatch"
        );
        Quire {
            raw: self.raw.saturating_add(other.raw),
            source_format: self.source_format,
            saturated: self.saturated || other.saturated,
        }
    }

    pub fn sub(self, other: Quire) -> Quire {
        assert_eq!(
            self.source_format, other.source_format,
            "quire format mismatch"
        );
        Quire {
            raw: self.raw.saturating_sub(other.raw),
            source_format: self.source_format,
            saturated: self.saturated || other.saturated,
        }
    }

    /// Exact double-width scale by 2^k (k may be negative; negative shifts
    /// truncate toward negative infinity).
    pub fn shift(self, k: i32) -> Quire {
        let raw = if k >= 0 {
            self.raw.saturating_mul(1i128 << k.min(100))
        } else {
            self.raw >> (-k).min(127)
        };
        Quire {
            raw,
            source_format: self.source_format,
            saturated: self.saturated,
        }
    }

    pub fn to_real(&self) -> f64 {
        self.raw as f64 * libm::exp2(-2.0 * self.source_format.frac_bits() as f64)
    }

    /// Narrow back to the source format: truncate the extra fractional bits
    /// toward negative infinity, then saturate. Sets the flag on clip.
    pub fn to_fixed(self) -> Fixed {
        let fmt = self.source_format;
        let shifted = self.raw >> fmt.frac_bits();
        let (raw, sat) = clamp_wide(shifted, fmt);
        Fixed {
            raw,
            format: fmt,
            saturated: sat || self.saturated,
        }
    }
}

/// Spec-shaped free functions mirroring the operation names used by the
/// rest of the datapath.
pub fn from_real(x: f64, fmt: QFormat) -> Fixed {
    Fixed::from_real(x, fmt)
}

pub fn to_real(a: Fixed) -> f64 {
    a.to_real()
}

pub fn mul_quire(a: Fixed, b: Fixed) -> Quire {
    a.mul_quire(b)
}

pub fn quire_to_fixed(q: Quire) -> Fixed {
    q.to_fixed()
}

pub fn sat_add(a: Fixed, b: Fixed) -> Fixed {
    a.sat_add(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn format_invariants() {
        assert!(QFormat::new(32, 16).is_ok());
        assert!(QFormat::new(8, 4).is_ok());
        assert!(QFormat::new(64, 32).is_ok());
        assert!(QFormat::new(65, 16).is_err());
        assert!(QFormat::new(16, 16).is_err());
        assert!(QFormat::new(16, 0).is_err());
        assert!(QFormat::new(0, 0).is_err());
    }

    #[test]
    fn from_real_known_values() {
        assert_eq!(Fixed::from_real(0.0, Q16_16).raw(), 0);
        assert_eq!(Fixed::from_real(1.0, Q16_16).raw(), 65536);
        assert_eq!(Fixed::from_real(-65.0, Q16_16).raw(), -4_259_840);
    }

    #[test]
    fn to_real_known_values() {
        assert_eq!(Fixed::from_raw(65536, Q16_16).to_real(), 1.0);
        assert_eq!(Fixed::from_raw(-32768, Q16_16).to_real(), -0.5);
        assert_eq!(Fixed::from_raw(1, Q16_16).to_real(), 1.52587890625e-5);
    }

    #[test]
    fn from_real_truncates_toward_neg_infinity() {
        // 0.15 * 2^16 = 9830.4 -> 9830; -0.15 * 2^16 = -9830.4 -> -9831
        assert_eq!(Fixed::from_real(0.15, Q16_16).raw(), 9830);
        assert_eq!(Fixed::from_real(-0.15, Q16_16).raw(), -9831);
    }

    #[test]
    fn from_real_saturates_with_flag() {
        let big = Fixed::from_real(1e9, Q16_16);
        assert_eq!(big.raw(), Q16_16.max_raw());
        assert!(big.is_saturated());
        let small = Fixed::from_real(-1e9, Q16_16);
        assert_eq!(small.raw(), Q16_16.min_raw());
        assert!(small.is_saturated());
        let nan = Fixed::from_real(f64::NAN, Q16_16);
        assert_eq!(nan.raw(), 0);
        assert!(nan.is_saturated());
    }

    #[test]
    fn mul_quire_exact() {
        let a = Fixed::from_real(1.5, Q16_16);
        let q = a.mul_quire(a);
        // 98304^2 = 9663676416 = 2.25 * 2^32
        assert_eq!(q.raw(), 9_663_676_416);
        assert_eq!(q.to_real(), 2.25);
        assert_eq!(q.to_fixed().to_real(), 2.25);

        let x = Fixed::from_real(-3.75, Q16_16);
        let one = Fixed::one(Q16_16);
        assert_eq!(one.mul_quire(x).to_fixed(), x);
        assert_eq!(Fixed::zero(Q16_16).mul_quire(x).raw(), 0);
    }

    #[test]
    fn quire_to_fixed_saturates() {
        let big = Fixed::from_real(1024.0, Q16_16);
        let q = big.mul_quire(big); // 2^20, outside Q16.16
        let f = q.to_fixed();
        assert_eq!(f.raw(), Q16_16.max_raw());
        assert!(f.is_saturated());

        let neg = Fixed::from_real(-1024.0, Q16_16).mul_quire(big);
        let f = neg.to_fixed();
        assert_eq!(f.raw(), Q16_16.min_raw());
        assert!(f.is_saturated());
    }

    #[test]
    fn sat_add_cases() {
        let a = Fixed::from_real(1.25, Q16_16);
        let b = Fixed::from_real(-0.75, Q16_16);
        assert_eq!(a.sat_add(b).to_real(), 0.5);
        assert_eq!(a.sat_add(Fixed::zero(Q16_16)), a);

        let max = Fixed::max_value(Q16_16);
        let sum = max.sat_add(Fixed::quantum(Q16_16));
        assert_eq!(sum.raw(), Q16_16.max_raw());
        assert!(sum.is_saturated());
    }

    #[test]
    fn sticky_flag_propagates() {
        let sat = Fixed::from_real(1e9, Q16_16);
        let z = sat.sat_add(Fixed::from_real(-1e9, Q16_16));
        assert!(z.is_saturated());
        let q = sat.mul_quire(Fixed::zero(Q16_16));
        assert!(q.to_fixed().is_saturated());
    }

    #[test]
    fn roundtrip_all_raws_small_formats() {
        for raw in Q4_4.min_raw()..=Q4_4.max_raw() {
            let a = Fixed::from_raw(raw, Q4_4);
            assert_eq!(Fixed::from_real(a.to_real(), Q4_4), a);
        }
        for raw in Q8_8.min_raw()..=Q8_8.max_raw() {
            let a = Fixed::from_raw(raw, Q8_8);
            assert_eq!(Fixed::from_real(a.to_real(), Q8_8), a);
        }
    }

    #[test]
    fn neg_min_saturates() {
        let m = Fixed::min_value(Q16_16);
        let n = m.sat_neg();
        assert_eq!(n.raw(), Q16_16.max_raw());
        assert!(n.is_saturated());
    }

    proptest! {
        #[test]
        fn roundtrip_q16_16(raw in Q16_16.min_raw()..=Q16_16.max_raw()) {
            let a = Fixed::from_raw(raw, Q16_16);
            prop_assert_eq!(Fixed::from_real(a.to_real(), Q16_16), a);
        }

        #[test]
        fn sat_add_commutes(ra in Q16_16.min_raw()..=Q16_16.max_raw(),
                            rb in Q16_16.min_raw()..=Q16_16.max_raw()) {
            let a = Fixed::from_raw(ra, Q16_16);
            let b = Fixed::from_raw(rb, Q16_16);
            prop_assert_eq!(a.sat_add(b), b.sat_add(a));
            prop_assert_eq!(a.sat_add(Fixed::zero(Q16_16)), a);
        }

        #[test]
        fn product_within_one_quantum(a in -64.0f64..64.0, b in -64.0f64..64.0) {
            let fa = Fixed::from_real(a, Q16_16);
            let fb = Fixed::from_real(b, Q16_16);
            let exact = fa.to_real() * fb.to_real();
            prop_assume!(exact.abs() < Q16_16.max_value());
            let got = fa.mul_quire(fb).to_fixed().to_real();
            prop_assert!((got - exact).abs() <= Q16_16.quantum());
        }

        #[test]
        fn saturation_monotone(xs in proptest::collection::vec(-1e6f64..1e6, 2)) {
            let (lo, hi) = if xs[0] <= xs[1] { (xs[0], xs[1]) } else { (xs[1], xs[0]) };
            let a = Fixed::from_real(lo, Q16_16);
            let b = Fixed::from_real(hi, Q16_16);
            prop_assert!(a.raw() <= b.raw());
        }
    }
}
