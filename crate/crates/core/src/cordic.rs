//! Shift-and-add CORDIC kernels in linear and hyperbolic mode.
//!
//! One kernel serves both deployment styles: `Iterative` and `Parallel`
//! plans run the exact same stage recurrence and produce bit-identical
//! results; the style only changes how [`crate::perf_model`] accounts
//! cycles. Internally every stage runs at `frac_bits + GUARD_BITS`
//! precision and the result is rounded once at the end, mirroring a
//! datapath that carries guard bits through the barrel shifters.
//!
//! Formats narrow enough that every guard-scale intermediate provably
//! fits 64 bits run a branchless i64 stage loop; wider formats fall back
//! to the 128-bit loop. Both paths execute the same integer recurrence,
//! so results are identical wherever both are defined.

use alloc::vec::Vec;
use core::fmt;

use crate::fixedpoint::{Fixed, QFormat};

/// Extra fractional bits carried through kernel stages.
pub const GUARD_BITS: u32 = 16;

/// Which CORDIC recurrence a plan runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CordicMode {
    /// Rotation, linear coordinates: `y <- y + x * z` (multiplication).
    LinearRotate,
    /// Vectoring, linear coordinates: `z <- z + y / x` (division).
    LinearVector,
    /// Rotation, hyperbolic coordinates: cosh/sinh, hence exp.
    HyperbolicRotate,
}

/// Deployment style. Numerically irrelevant; costed by the latency model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExecutionStyle {
    /// One stage per cycle on a single shared stage unit.
    Iterative,
    /// Fully unrolled pipeline, one hardware stage per iteration.
    Parallel,
}

/// Iteration schedule for one CORDIC kernel.
#[derive(Clone, Debug)]
pub struct CordicPlan {
    pub mode: CordicMode,
    pub style: ExecutionStyle,
    /// Number of distinct iteration indices. Hyperbolic indices start at 1,
    /// linear at 0.
    pub iterations: u32,
    /// Hyperbolic convergence repeats; executed twice when reached.
    pub repeated_indices: Vec<u32>,
}

impl CordicPlan {
    /// Plan with the canonical repeat schedule and `frac_bits + 2`
    /// iterations for the given format.
    pub fn for_format(mode: CordicMode, style: ExecutionStyle, fmt: QFormat) -> Self {
        Self::with_iterations(mode, style, fmt.frac_bits() as u32 + 2)
    }

    pub fn with_iterations(mode: CordicMode, style: ExecutionStyle, iterations: u32) -> Self {
        CordicPlan {
            mode,
            style,
            iterations,
            repeated_indices: alloc::vec![4, 13, 40],
        }
    }

    /// The executed stage indices, repeats included.
    pub fn schedule(&self) -> Vec<u32> {
        let mut s = Vec::new();
        match self.mode {
            CordicMode::LinearRotate | CordicMode::LinearVector => {
                for i in 0..self.iterations {
                    s.push(i);
                }
            }
            CordicMode::HyperbolicRotate => {
                for i in 1..=self.iterations {
                    s.push(i);
                    if self.repeated_indices.contains(&i) {
                        s.push(i);
                    }
                }
            }
        }
        s
    }

    /// Bind the plan to a word format: quantize stage constants and the
    /// gain compensation once so the kernel runs on integers only.
    pub fn prepare(&self, fmt: QFormat) -> PreparedCordic {
        let guard_frac = fmt.frac_bits() as u32 + GUARD_BITS;
        let schedule = self.schedule();
        let z_consts: Vec<i128> = schedule
            .iter()
            .map(|&i| match self.mode {
                CordicMode::LinearRotate | CordicMode::LinearVector => {
                    if i < guard_frac {
                        1i128 << (guard_frac - i)
                    } else {
                        0
                    }
                }
                CordicMode::HyperbolicRotate => {
                    let a = libm::atanh(libm::exp2(-(i as f64)));
                    libm::round(a * libm::exp2(guard_frac as f64)) as i128
                }
            })
            .collect();
        // Hyperbolic gain over the actual schedule, repeats included.
        let gain_inv = if self.mode == CordicMode::HyperbolicRotate {
            let mut gain = 1.0f64;
            for &i in &schedule {
                gain *= libm::sqrt(1.0 - libm::exp2(-2.0 * i as f64));
            }
            libm::round(libm::exp2(guard_frac as f64) / gain) as i128
        } else {
            1i128 << guard_frac
        };
        // i64 stage loop is safe when every intermediate fits: the rotate
        // accumulator stays under 2^(total+17) and exp range reduction
        // needs ~6 integer bits of headroom above guard scale.
        let total = fmt.total_bits() as u32;
        let frac = fmt.frac_bits() as u32;
        let narrow = total + 17 <= 62 && guard_frac + 6 <= 62;
        let z_consts64 = if narrow {
            z_consts.iter().map(|&c| c as i64).collect()
        } else {
            Vec::new()
        };
        let ln2_g = libm::round(core::f64::consts::LN_2 * libm::exp2(guard_frac as f64)) as i128;
        // e^x saturates above ln(max) and underflows to zero below
        // ln(quantum/2); both bounds precomputed as raw thresholds.
        let hi = libm::log((fmt.max_raw() as f64 + 0.5) * fmt.quantum());
        let lo = libm::log(0.5 * fmt.quantum());
        let scale = libm::exp2(frac as f64);
        PreparedCordic {
            mode: self.mode,
            style: self.style,
            iterations: self.iterations,
            schedule,
            z_consts,
            z_consts64,
            gain_inv,
            gain_inv64: if narrow { gain_inv as i64 } else { 0 },
            narrow,
            fmt,
            guard_frac,
            ln2_g,
            exp_k_factor: fmt.quantum() * core::f64::consts::LOG2_E,
            exp_hi_raw: (hi * scale) as i64,
            exp_lo_raw: (lo * scale) as i64,
        }
    }
}

/// Stage-by-stage record of one kernel execution.
#[derive(Clone, Debug)]
pub struct CordicTrace {
    /// `(x, y, z)` at the initial state and after every executed stage.
    pub stage_values: Vec<(Fixed, Fixed, Fixed)>,
    pub stages_executed: u32,
}

/// Errors from the range-checked kernel entry points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CordicError {
    DivisionByZero,
    /// Operand outside the z-accumulator convergence range.
    OutOfRange,
}

impl fmt::Display for CordicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CordicError::DivisionByZero => write!(f, "cordic division by zero"),
            CordicError::OutOfRange => write!(f, "cordic operand outside convergence range"),
        }
    }
}

impl core::error::Error for CordicError {}

/// A plan bound to a format: integer stage constants ready to run.
#[derive(Clone, Debug)]
pub struct PreparedCordic {
    mode: CordicMode,
    pub style: ExecutionStyle,
    pub iterations: u32,
    schedule: Vec<u32>,
    z_consts: Vec<i128>,
    z_consts64: Vec<i64>,
    gain_inv: i128,
    gain_inv64: i64,
    narrow: bool,
    fmt: QFormat,
    guard_frac: u32,
    ln2_g: i128,
    exp_k_factor: f64,
    exp_hi_raw: i64,
    exp_lo_raw: i64,
}

#[inline]
fn round_shr_wide(v: i128, s: u32) -> i128 {
    if s == 0 {
        v
    } else {
        (v + (1i128 << (s - 1))) >> s
    }
}

#[inline]
fn shl_sat64(v: i64, k: u32) -> i64 {
    if k >= 63 {
        match v {
            0 => 0,
            p if p > 0 => i64::MAX,
            _ => i64::MIN,
        }
    } else {
        v.saturating_mul(1i64 << k)
    }
}

#[inline]
fn shift_signed64(v: i64, k: i32) -> i64 {
    if k >= 0 {
        shl_sat64(v, k as u32)
    } else {
        let s = (-k).min(63) as u32;
        ((v as i128 + (1i128 << (s - 1))) >> s) as i64
    }
}

#[inline]
fn shift_signed_wide(v: i128, k: i32) -> i128 {
    if k >= 0 {
        if k >= 120 {
            if v > 0 {
                i128::MAX
            } else if v < 0 {
                i128::MIN
            } else {
                0
            }
        } else {
            v.saturating_mul(1i128 << k as u32)
        }
    } else {
        round_shr_wide(v, (-k).min(127) as u32)
    }
}

#[inline]
fn bitlen64(v: u64) -> u32 {
    debug_assert!(v > 0);
    64 - v.leading_zeros()
}

impl PreparedCordic {
    pub fn mode(&self) -> CordicMode {
        self.mode
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    /// The wide stage recurrence. `observe` sees the state after every
    /// stage; the trace path and wide formats use this loop.
    #[inline]
    fn run_wide<F: FnMut(i128, i128, i128)>(
        &self,
        mut x: i128,
        mut y: i128,
        mut z: i128,
        mut observe: F,
    ) -> (i128, i128, i128) {
        match self.mode {
            CordicMode::LinearRotate => {
                for (&i, &zc) in self.schedule.iter().zip(&self.z_consts) {
                    if z >= 0 {
                        y += x >> i;
                        z -= zc;
                    } else {
                        y -= x >> i;
                        z += zc;
                    }
                    observe(x, y, z);
                }
            }
            CordicMode::LinearVector => {
                for (&i, &zc) in self.schedule.iter().zip(&self.z_consts) {
                    if y >= 0 {
                        y -= x >> i;
                        z += zc;
                    } else {
                        y += x >> i;
                        z -= zc;
                    }
                    observe(x, y, z);
                }
            }
            CordicMode::HyperbolicRotate => {
                for (&i, &zc) in self.schedule.iter().zip(&self.z_consts) {
                    let (dx, dy) = (y >> i, x >> i);
                    if z >= 0 {
                        x += dx;
                        y += dy;
                        z -= zc;
                    } else {
                        x -= dx;
                        y -= dy;
                        z += zc;
                    }
                    observe(x, y, z);
                }
            }
        }
        (x, y, z)
    }

    #[inline]
    fn rotate64(&self, x: i64, mut y: i64, mut z: i64) -> i64 {
        for (&i, &zc) in self.schedule.iter().zip(&self.z_consts64) {
            // m = 0 when z >= 0, -1 when z < 0; (v ^ m) - m negates on m
            let m = z >> 63;
            let dx = x >> i;
            y += (dx ^ m) - m;
            z -= (zc ^ m) - m;
        }
        y
    }

    #[inline]
    fn hyperbolic64(&self, mut x: i64, mut y: i64, mut z: i64) -> i64 {
        for (&i, &zc) in self.schedule.iter().zip(&self.z_consts64) {
            let m = z >> 63;
            let dx = (y >> i) ^ m;
            let dy = (x >> i) ^ m;
            x += dx - m;
            y += dy - m;
            z -= (zc ^ m) - m;
        }
        x
    }

    #[inline]
    fn widen(&self, a: Fixed) -> i128 {
        (a.raw() as i128) << GUARD_BITS
    }

    #[inline]
    fn narrow_fixed(&self, wide: i128, sticky: bool) -> Fixed {
        let (raw, sat) =
            crate::fixedpoint::clamp_wide(round_shr_wide(wide, GUARD_BITS), self.fmt);
        Fixed::from_raw_flag(raw, self.fmt, sat || sticky)
    }

    /// `a * b` with the multiplier in the z accumulator. Errors when `|b|`
    /// exceeds the convergence range `2 - 2^-(iterations-1)`.
    pub fn multiply_checked(&self, a: Fixed, b: Fixed) -> Result<Fixed, CordicError> {
        debug_assert_eq!(self.mode, CordicMode::LinearRotate);
        assert_eq!(a.format(), self.fmt, "fixed-point format mismatch");
        assert_eq!(b.format(), self.fmt, "fixed-point format mismatch");
        let one = 1i128 << self.guard_frac;
        let conv = 2 * one - (one >> (self.iterations.max(1) - 1).min(100));
        let bz = (b.raw() as i128) << GUARD_BITS;
        if bz.abs() > conv {
            return Err(CordicError::OutOfRange);
        }
        let sticky = a.is_saturated() || b.is_saturated();
        // zero-detect bypass keeps the annihilator exact
        if a.raw() == 0 || b.raw() == 0 {
            return Ok(Fixed::from_raw_flag(0, self.fmt, sticky));
        }
        let y = if self.narrow {
            self.rotate64(a.raw() << GUARD_BITS, 0, bz as i64) as i128
        } else {
            self.run_wide(self.widen(a), 0, bz, |_, _, _| {}).1
        };
        Ok(self.narrow_fixed(y, sticky))
    }

    /// Full-range `a * b`: normalizes `b` into `[0.5, 1)` before running the
    /// kernel and scales the result back by the matching power of two.
    pub fn multiply(&self, a: Fixed, b: Fixed) -> Fixed {
        debug_assert_eq!(self.mode, CordicMode::LinearRotate);
        assert_eq!(a.format(), self.fmt, "fixed-point format mismatch");
        assert_eq!(b.format(), self.fmt, "fixed-point format mismatch");
        let sticky = a.is_saturated() || b.is_saturated();
        if b.raw() == 0 || a.raw() == 0 {
            return Fixed::from_raw_flag(0, self.fmt, sticky);
        }
        let neg = b.raw() < 0;
        let mag = b.raw().unsigned_abs();
        // b = b_hat * 2^e with b_hat in [0.5, 1)
        let e = bitlen64(mag) as i32 - self.fmt.frac_bits() as i32;
        if self.narrow {
            let bn = shift_signed64((mag as i64) << GUARD_BITS, -e);
            let y = self.rotate64(a.raw() << GUARD_BITS, 0, bn);
            let scaled = shift_signed64(y, e);
            let signed = if neg { -(scaled as i128) } else { scaled as i128 };
            self.narrow_fixed(signed, sticky)
        } else {
            let bn = shift_signed_wide((mag as i128) << GUARD_BITS, -e);
            let (_, y, _) = self.run_wide(self.widen(a), 0, bn, |_, _, _| {});
            let scaled = shift_signed_wide(y, e);
            let signed = if neg { -scaled } else { scaled };
            self.narrow_fixed(signed, sticky)
        }
    }

    /// `num / den`. Both operands are normalized into `[0.5, 1)` so the
    /// quotient stays inside the z convergence range; the result is scaled
    /// back and saturates on overflow.
    ///
    /// The vectoring loop runs one extra stage per upward scale shift
    /// (bounded by the guard precision), so the absolute error stays at
    /// quantum scale across the whole quotient range.
    pub fn divide(&self, num: Fixed, den: Fixed) -> Result<Fixed, CordicError> {
        debug_assert_eq!(self.mode, CordicMode::LinearVector);
        assert_eq!(num.format(), self.fmt, "fixed-point format mismatch");
        assert_eq!(den.format(), self.fmt, "fixed-point format mismatch");
        if den.raw() == 0 {
            return Err(CordicError::DivisionByZero);
        }
        let sticky = num.is_saturated() || den.is_saturated();
        if num.raw() == 0 {
            return Ok(Fixed::from_raw_flag(0, self.fmt, sticky));
        }
        let neg = (num.raw() < 0) != (den.raw() < 0);
        let frac = self.fmt.frac_bits() as i32;
        let e_n = bitlen64(num.raw().unsigned_abs()) as i32 - frac;
        let e_d = bitlen64(den.raw().unsigned_abs()) as i32 - frac;
        let scale = e_n - e_d;
        let stages = (self.iterations + scale.max(0) as u32).min(self.guard_frac);
        let signed = if self.narrow {
            let x = shift_signed64((num.raw().unsigned_abs() as i64) << GUARD_BITS, -e_n);
            let v = shift_signed64((den.raw().unsigned_abs() as i64) << GUARD_BITS, -e_d);
            let mut y = x;
            let mut z = 0i64;
            let gf = self.guard_frac;
            for i in 0..stages {
                let m = y >> 63; // 0 when y >= 0 (subtract), -1 otherwise
                let dv = (v >> i) ^ m;
                y -= dv - m;
                let zc = (1i64 << (gf - i)) ^ m;
                z += zc - m;
            }
            let scaled = shift_signed64(z, scale) as i128;
            if neg {
                -scaled
            } else {
                scaled
            }
        } else {
            let x = shift_signed_wide((num.raw().unsigned_abs() as i128) << GUARD_BITS, -e_n);
            let v = shift_signed_wide((den.raw().unsigned_abs() as i128) << GUARD_BITS, -e_d);
            let mut y = x;
            let mut z = 0i128;
            for i in 0..stages {
                let zc = 1i128 << (self.guard_frac - i);
                if y >= 0 {
                    y -= v >> i;
                    z += zc;
                } else {
                    y += v >> i;
                    z -= zc;
                }
            }
            let scaled = shift_signed_wide(z, scale);
            if neg {
                -scaled
            } else {
                scaled
            }
        };
        Ok(self.narrow_fixed(signed, sticky))
    }

    /// `e^x` by base-2 range reduction and hyperbolic rotation.
    ///
    /// `x = k*ln2 + r` with `|r| <= ln2/2`; `e^r = cosh r + sinh r` comes out
    /// of the kernel with the gain constant folded into the start value, and
    /// `2^k` is an arithmetic shift. Out-of-range arguments saturate to the
    /// format maximum or underflow to zero, with the flag set.
    pub fn exp(&self, x: Fixed) -> Fixed {
        debug_assert_eq!(self.mode, CordicMode::HyperbolicRotate);
        assert_eq!(x.format(), self.fmt, "fixed-point format mismatch");
        let sticky = x.is_saturated();
        if x.raw() > self.exp_hi_raw {
            return Fixed::from_raw_flag(self.fmt.max_raw(), self.fmt, true);
        }
        if x.raw() < self.exp_lo_raw {
            return Fixed::from_raw_flag(0, self.fmt, true);
        }
        let k = libm::round(x.raw() as f64 * self.exp_k_factor) as i32;
        let shifted = if self.narrow {
            let r = ((x.raw() << GUARD_BITS) as i128 - k as i128 * self.ln2_g) as i64;
            let ex = self.hyperbolic64(self.gain_inv64, self.gain_inv64, r);
            shift_signed64(ex, k) as i128
        } else {
            let r = ((x.raw() as i128) << GUARD_BITS) - k as i128 * self.ln2_g;
            let (ex, _, _) = self.run_wide(self.gain_inv, self.gain_inv, r, |_, _, _| {});
            shift_signed_wide(ex, k)
        };
        let (raw, sat) = crate::fixedpoint::clamp_wide(round_shr_wide(shifted, GUARD_BITS), self.fmt);
        // a positive quantity that rounded to nothing is an underflow event
        let underflow = raw == 0;
        Fixed::from_raw_flag(raw, self.fmt, sat || underflow || sticky)
    }

    /// Raw kernel execution with a full stage trace and no pre/post scaling.
    pub fn run(&self, x0: Fixed, y0: Fixed, z0: Fixed) -> CordicTrace {
        assert_eq!(x0.format(), self.fmt, "fixed-point format mismatch");
        assert_eq!(y0.format(), self.fmt, "fixed-point format mismatch");
        assert_eq!(z0.format(), self.fmt, "fixed-point format mismatch");
        let mut stage_values = Vec::with_capacity(self.schedule.len() + 1);
        stage_values.push((x0, y0, z0));
        let mut stages = 0u32;
        self.run_wide(self.widen(x0), self.widen(y0), self.widen(z0), |x, y, z| {
            stages += 1;
            stage_values.push((
                self.narrow_fixed(x, false),
                self.narrow_fixed(y, false),
                self.narrow_fixed(z, false),
            ));
        });
        CordicTrace {
            stage_values,
            stages_executed: stages,
        }
    }
}

/// Range-checked multiply via a linear-rotation plan.
pub fn cordic_multiply(a: Fixed, b: Fixed, plan: &CordicPlan) -> Result<Fixed, CordicError> {
    assert_eq!(plan.mode, CordicMode::LinearRotate, "plan mode mismatch");
    plan.prepare(a.format()).multiply_checked(a, b)
}

/// Division via a linear-vectoring plan.
pub fn cordic_divide(num: Fixed, den: Fixed, plan: &CordicPlan) -> Result<Fixed, CordicError> {
    assert_eq!(plan.mode, CordicMode::LinearVector, "plan mode mismatch");
    plan.prepare(num.format()).divide(num, den)
}

/// Exponential via a hyperbolic-rotation plan.
pub fn cordic_exp(x: Fixed, plan: &CordicPlan) -> Fixed {
    assert_eq!(plan.mode, CordicMode::HyperbolicRotate, "plan mode mismatch");
    plan.prepare(x.format()).exp(x)
}

/// Full stage trace of a plan on the given start state.
pub fn run_plan(plan: &CordicPlan, x0: Fixed, y0: Fixed, z0: Fixed) -> CordicTrace {
    plan.prepare(x0.format()).run(x0, y0, z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::{Q16_16, Q8_8};
    use rand::{Rng, SeedableRng};

    fn mul_plan() -> CordicPlan {
        CordicPlan::for_format(CordicMode::LinearRotate, ExecutionStyle::Iterative, Q16_16)
    }

    fn div_plan() -> CordicPlan {
        CordicPlan::for_format(CordicMode::LinearVector, ExecutionStyle::Iterative, Q16_16)
    }

    fn exp_plan() -> CordicPlan {
        CordicPlan::for_format(
            CordicMode::HyperbolicRotate,
            ExecutionStyle::Iterative,
            Q16_16,
        )
    }

    fn fx(v: f64) -> Fixed {
        Fixed::from_real(v, Q16_16)
    }

    #[test]
    fn multiply_examples() {
        let p = mul_plan();
        assert_eq!(cordic_multiply(fx(7.25), fx(0.0), &p).unwrap().raw(), 0);
        let one = cordic_multiply(fx(1.0), fx(1.0), &p).unwrap();
        assert!((one.to_real() - 1.0).abs() <= Q16_16.quantum());
        let r = cordic_multiply(fx(3.5), fx(-1.25), &p).unwrap();
        assert!((r.to_real() + 4.375).abs() < 3.5 * libm::exp2(-16.0) * 4.0 + Q16_16.quantum());
    }

    #[test]
    fn multiply_range_error() {
        let p = mul_plan();
        assert_eq!(
            cordic_multiply(fx(1.0), fx(2.5), &p),
            Err(CordicError::OutOfRange)
        );
    }

    #[test]
    fn full_range_multiply_prescales() {
        let p = mul_plan().prepare(Q16_16);
        let r = p.multiply(fx(-0.875), fx(190.0));
        assert!((r.to_real() + 166.25).abs() < 0.01, "got {}", r.to_real());
        let r = p.multiply(fx(120.0), fx(0.001));
        assert!((r.to_real() - 0.12).abs() < 1e-3);
    }

    #[test]
    fn full_range_multiply_saturates() {
        let p = mul_plan().prepare(Q16_16);
        let r = p.multiply(fx(30000.0), fx(30000.0));
        assert_eq!(r.raw(), Q16_16.max_raw());
        assert!(r.is_saturated());
        let r = p.multiply(fx(30000.0), fx(-30000.0));
        assert_eq!(r.raw(), Q16_16.min_raw());
        assert!(r.is_saturated());
    }

    #[test]
    fn divide_examples() {
        let p = div_plan();
        let x = fx(-23.375);
        let r = cordic_divide(x, fx(1.0), &p).unwrap();
        assert!((r.to_real() - x.to_real()).abs() <= Q16_16.quantum());
        assert_eq!(cordic_divide(fx(0.0), fx(5.0), &p).unwrap().raw(), 0);
        let third = cordic_divide(fx(1.0), fx(3.0), &p).unwrap();
        assert!((third.to_real() - 0.333328247).abs() < libm::exp2(-14.0));
        assert_eq!(
            cordic_divide(fx(1.0), fx(0.0), &p),
            Err(CordicError::DivisionByZero)
        );
    }

    #[test]
    fn divide_overflow_saturates() {
        let p = div_plan();
        let r = cordic_divide(fx(30000.0), fx(0.25), &p).unwrap();
        assert_eq!(r.raw(), Q16_16.max_raw());
        assert!(r.is_saturated());
    }

    #[test]
    fn exp_examples() {
        let p = exp_plan();
        let one = cordic_exp(fx(0.0), &p);
        assert_eq!(one.raw(), 65536, "exp(0) = {}", one.to_real());
        let e = cordic_exp(fx(1.0), &p);
        assert!((e.to_real() - core::f64::consts::E).abs() < libm::exp2(-12.0));
        let b = cordic_exp(fx(-65.0 / 18.0), &p);
        assert!((b.to_real() - 0.026994).abs() < libm::exp2(-12.0));
    }

    #[test]
    fn exp_saturates_and_underflows() {
        let p = exp_plan();
        let big = cordic_exp(fx(100.0), &p);
        assert_eq!(big.raw(), Q16_16.max_raw());
        assert!(big.is_saturated());
        let tiny = cordic_exp(fx(-100.0), &p);
        assert_eq!(tiny.raw(), 0);
        assert!(tiny.is_saturated());
    }

    #[test]
    fn exp_positive_and_monotone_on_grid() {
        let p = exp_plan().prepare(Q16_16);
        let mut prev = -1i64;
        let mut v = -12.0;
        while v <= 10.0 {
            let e = p.exp(fx(v));
            assert!(e.raw() >= 0, "exp({v}) negative");
            assert!(e.raw() >= prev, "exp not monotone at {v}");
            prev = e.raw();
            v += 0.0625;
        }
    }

    #[test]
    fn run_plan_edges() {
        let mut p = mul_plan();
        p.iterations = 0;
        let t = run_plan(&p, fx(1.5), fx(0.0), fx(1.0));
        assert_eq!(t.stage_values.len(), 1);
        assert_eq!(t.stages_executed, 0);
        assert_eq!(t.stage_values[0].0, fx(1.5));
    }

    #[test]
    fn linear_rotate_z_residual_halves() {
        // |z_k| <= 2^(1-k): the residual envelope halves every stage
        let t = run_plan(&mul_plan(), fx(1.0), fx(0.0), fx(1.0));
        for (k, (_, _, z)) in t.stage_values.iter().enumerate().skip(1) {
            let envelope = libm::exp2(1.0 - k as f64) + Q16_16.quantum();
            assert!(
                z.to_real().abs() <= envelope,
                "stage {k}: |z| = {} > {envelope}",
                z.to_real().abs()
            );
        }
        let last = t.stage_values.last().unwrap();
        assert!(last.2.raw().abs() <= 2);
    }

    #[test]
    fn traces_deterministic() {
        let p = exp_plan();
        let a = run_plan(&p, fx(1.2), fx(1.2), fx(0.3));
        let b = run_plan(&p, fx(1.2), fx(1.2), fx(0.3));
        for (u, v) in a.stage_values.iter().zip(b.stage_values.iter()) {
            assert_eq!(u, v);
        }
    }

    #[test]
    fn hyperbolic_schedule_repeats() {
        let p = exp_plan();
        let s = p.schedule();
        assert_eq!(s.iter().filter(|&&i| i == 4).count(), 2);
        assert_eq!(s.iter().filter(|&&i| i == 13).count(), 2);
        assert_eq!(s.len(), 20);
    }

    #[test]
    fn styles_bit_identical() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let iter_mul = mul_plan().prepare(Q16_16);
        let mut par = mul_plan();
        par.style = ExecutionStyle::Parallel;
        let par_mul = par.prepare(Q16_16);
        for _ in 0..2000 {
            let a = fx(rng.gen_range(-100.0..100.0));
            let b = fx(rng.gen_range(-1.9..1.9));
            assert_eq!(
                iter_mul.multiply_checked(a, b).unwrap().raw(),
                par_mul.multiply_checked(a, b).unwrap().raw()
            );
        }
    }

    #[test]
    fn narrow_and_wide_paths_agree() {
        // force the wide loop on a format that normally takes the i64 path
        let mut rng = rand::rngs::StdRng::seed_from_u64(19);
        let narrow_mul = mul_plan().prepare(Q16_16);
        let mut wide_mul = narrow_mul.clone();
        wide_mul.narrow = false;
        let narrow_div = div_plan().prepare(Q16_16);
        let mut wide_div = narrow_div.clone();
        wide_div.narrow = false;
        let narrow_exp = exp_plan().prepare(Q16_16);
        let mut wide_exp = narrow_exp.clone();
        wide_exp.narrow = false;
        for _ in 0..5000 {
            let a = fx(rng.gen_range(-30000.0..30000.0));
            let b = fx(rng.gen_range(-30000.0..30000.0));
            assert_eq!(narrow_mul.multiply(a, b), wide_mul.multiply(a, b));
            if b.raw() != 0 {
                assert_eq!(
                    narrow_div.divide(a, b).unwrap(),
                    wide_div.divide(a, b).unwrap()
                );
            }
            let x = fx(rng.gen_range(-20.0..12.0));
            assert_eq!(narrow_exp.exp(x), wide_exp.exp(x));
        }
    }

    #[test]
    fn multiply_error_bound_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let p = mul_plan().prepare(Q16_16);
        for _ in 0..20_000 {
            let a = fx(rng.gen_range(-100.0..100.0));
            let b = fx(rng.gen_range(-1.9..1.9));
            let got = p.multiply_checked(a, b).unwrap().to_real();
            let want = a.to_real() * b.to_real();
            let bound = a.to_real().abs() * libm::exp2(-16.0) * 4.0 + Q16_16.quantum();
            assert!(
                (got - want).abs() <= bound,
                "a={} b={} got={} want={}",
                a.to_real(),
                b.to_real(),
                got,
                want
            );
        }
    }

    #[test]
    fn divide_error_bound_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        let p = div_plan().prepare(Q16_16);
        for _ in 0..20_000 {
            let num = fx(rng.gen_range(-500.0..500.0));
            let den = fx(rng.gen_range(0.1..200.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 });
            let got = p.divide(num, den).unwrap().to_real();
            let want = num.to_real() / den.to_real();
            let bound = 4.0 * Q16_16.quantum();
            assert!(
                (got - want).abs() <= bound,
                "num={} den={} got={} want={}",
                num.to_real(),
                den.to_real(),
                got,
                want
            );
        }
    }

    #[test]
    fn exp_error_bound_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let p = exp_plan().prepare(Q16_16);
        for _ in 0..20_000 {
            let x = fx(rng.gen_range(-9.0..10.0));
            let got = p.exp(x).to_real();
            let want = libm::exp(x.to_real());
            let bound = want * libm::exp2(-16.0) + Q16_16.quantum();
            assert!(
                (got - want).abs() <= bound,
                "x={} got={got} want={want}",
                x.to_real()
            );
        }
    }

    #[test]
    fn smaller_format_kernels_work() {
        let p = CordicPlan::for_format(CordicMode::LinearVector, ExecutionStyle::Iterative, Q8_8)
            .prepare(Q8_8);
        let a = Fixed::from_real(10.0, Q8_8);
        let b = Fixed::from_real(3.0, Q8_8);
        let r = p.divide(a, b).unwrap();
        assert!((r.to_real() - 10.0 / 3.0).abs() < 0.02);
    }
}
