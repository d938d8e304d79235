//! Fixed-width unsigned words and a ripple adder that records which bit
//! positions need a half adder, a full adder, or nothing at all.
//!
//! Bit 0 is the least significant bit throughout.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 64;

fn fits(width: u32, value: u128) -> bool {
    width >= 128 || value >> width == 0
}

fn check_width(width: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::InvalidWidth(width))
    }
}

/// An unsigned value tagged with its bit width. `value < 2^width` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct UWord {
    width: u32,
    value: u64,
}

impl UWord {
    pub fn new(width: u32, value: u64) -> Result<Self> {
        check_width(width)?;
        if !fits(width, value as u128) {
            return Err(Error::OverflowValue { width, value });
        }
        Ok(Self { width, value })
    }

    pub fn zero(width: u32) -> Result<Self> {
        Self::new(width, 0)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bit(&self, index: u32) -> bool {
        index < self.width && (self.value >> index) & 1 == 1
    }

    /// Bits `lo..=hi` as a word of width `hi - lo + 1`.
    pub fn slice(&self, lo: u32, hi: u32) -> Result<Self> {
        if lo > hi || hi >= self.width {
            return Err(Error::BadRange {
                lo,
                hi,
                width: self.width,
            });
        }
        let width = hi - lo + 1;
        let value = (self.value >> lo) & low_mask(width);
        Ok(Self { width, value })
    }

    /// Left shift that grows the width by `k`; nothing is truncated.
    pub fn shl(&self, k: u32) -> Result<Self> {
        let width = self.width + k;
        check_width(width)?;
        Ok(Self {
            width,
            value: self.value << k,
        })
    }

    /// Zero-extends (or, if the value allows it, narrows) to `width`.
    pub fn resize(&self, width: u32) -> Result<Self> {
        Self::new(width, self.value)
    }

    pub fn popcount(&self) -> u32 {
        self.value.count_ones()
    }

    pub fn hamming_distance(&self, other: &UWord) -> Result<u32> {
        if self.width != other.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: other.width,
            });
        }
        Ok((self.value ^ other.value).count_ones())
    }

    /// Builds a word from individual bits, LSB first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let width = bits.len() as u32;
        check_width(width)?;
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Ok(Self { width, value })
    }
}

/// MSB-first binary, zero padded to the full width.
impl fmt::Display for UWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.value, width = self.width as usize)
    }
}

fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Bit length of `value` (0 for 0).
pub fn bit_length(value: u128) -> u32 {
    128 - value.leading_zeros()
}

/// Exact product with width `w.width + y.width`.
pub fn exact_mul(w: &UWord, y: &UWord) -> Result<UWord> {
    let width = w.width + y.width;
    check_width(width)?;
    Ok(UWord {
        width,
        value: w.value * y.value,
    })
}

/// A word placed at a bit offset inside an adder. Positions below the offset
/// are hard-wired zero and never feed an adder cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Addend {
    pub word: UWord,
    pub offset: u32,
}

impl Addend {
    pub fn at(word: UWord, offset: u32) -> Self {
        Self { word, offset }
    }

    pub fn shape(&self) -> Span {
        Span {
            offset: self.offset,
            width: self.word.width,
        }
    }

    fn value(&self) -> u128 {
        (self.word.value as u128) << self.offset
    }
}

impl From<UWord> for Addend {
    fn from(word: UWord) -> Self {
        Self::at(word, 0)
    }
}

/// Which bit positions of an operand can ever be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub offset: u32,
    pub width: u32,
}

impl Span {
    pub fn covers(&self, bit: u32) -> bool {
        bit >= self.offset && bit < self.offset + self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdderKind {
    Passthrough,
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PositionTrace {
    pub bit: u32,
    pub kind: AdderKind,
    /// Dynamic: whether this position produced a carry on the traced evaluation.
    pub carry_out: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AdderTrace {
    pub ha_count: usize,
    pub fa_count: usize,
    pub per_position: Vec<PositionTrace>,
}

impl AdderTrace {
    /// A trace holding only static tags; every carry flag is false.
    pub fn from_plan(plan: &[AdderKind], base_bit: u32) -> Self {
        let mut trace = Self::default();
        for (i, &kind) in plan.iter().enumerate() {
            trace.push(PositionTrace {
                bit: base_bit + i as u32,
                kind,
                carry_out: false,
            });
        }
        trace
    }

    pub fn push(&mut self, position: PositionTrace) {
        match position.kind {
            AdderKind::Half => self.ha_count += 1,
            AdderKind::Full => self.fa_count += 1,
            AdderKind::Passthrough => {}
        }
        self.per_position.push(position);
    }

    /// Appends another adder's positions, shifting their bit indices by `offset`.
    pub fn absorb(&mut self, other: AdderTrace, offset: u32) {
        for mut p in other.per_position {
            p.bit += offset;
            self.push(p);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    pub fn position(&self, bit: u32) -> Option<&PositionTrace> {
        self.per_position.iter().rev().find(|p| p.bit == bit)
    }
}

/// Static allocation for adding operands with shapes `a` and `b` into a
/// `result_width`-bit sum: a position is a full adder when both operands and
/// an incoming carry can be nonzero there, a half adder when exactly two of
/// them can, and a plain wire otherwise.
pub fn plan_positions(a: Span, b: Span, result_width: u32) -> Vec<AdderKind> {
    let mut plan = Vec::with_capacity(result_width as usize);
    let mut carry_live = false;
    for bit in 0..result_width {
        let live = u32::from(a.covers(bit)) + u32::from(b.covers(bit)) + u32::from(carry_live);
        let kind = match live {
            3 => AdderKind::Full,
            2 => AdderKind::Half,
            _ => AdderKind::Passthrough,
        };
        carry_live = kind != AdderKind::Passthrough;
        plan.push(kind);
    }
    plan
}

/// Exact sum of `a + b` as a `result_width`-bit word, plus the adder cells
/// the static allocation assigns and the carries seen on this evaluation.
pub fn add_traced(
    a: impl Into<Addend>,
    b: impl Into<Addend>,
    result_width: u32,
) -> Result<(UWord, AdderTrace)> {
    let (a, b) = (a.into(), b.into());
    let plan = plan_positions(a.shape(), b.shape(), result_width);
    add_with_plan(a, b, &plan)
}

/// Ripple addition over a caller-supplied cell plan, one entry per result
/// bit. The returned word is always the exact sum; the plan only decides how
/// positions are tagged in the trace.
pub fn add_with_plan(a: Addend, b: Addend, plan: &[AdderKind]) -> Result<(UWord, AdderTrace)> {
    let result_width = plan.len() as u32;
    check_width(result_width)?;
    let (av, bv) = (a.value(), b.value());
    let sum = av + bv;
    if !fits(result_width, sum) {
        return Err(Error::SumOverflow {
            sum,
            width: result_width,
        });
    }

    let mut trace = AdderTrace::default();
    let mut carry = 0u128;
    let mut out = 0u64;
    for (bit, &kind) in plan.iter().enumerate() {
        let total = ((av >> bit) & 1) + ((bv >> bit) & 1) + carry;
        out |= ((total & 1) as u64) << bit;
        carry = total >> 1;
        trace.push(PositionTrace {
            bit: bit as u32,
            kind,
            carry_out: carry == 1,
        });
    }
    debug_assert_eq!(out as u128, sum);
    Ok((UWord::new(result_width, out)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(width: u32, value: u64) -> UWord {
        UWord::new(width, value).unwrap()
    }

    #[test]
    fn make_uword() {
        assert_eq!(w(4, 6).to_string(), "0110");
        assert_eq!(w(4, 0).to_string(), "0000");
        assert_eq!(
            UWord::new(6, 64),
            Err(Error::OverflowValue {
                width: 6,
                value: 64
            })
        );
        assert_eq!(UWord::new(0, 0), Err(Error::InvalidWidth(0)));
        assert_eq!(UWord::new(65, 0), Err(Error::InvalidWidth(65)));
        assert_eq!(w(64, u64::MAX).value(), u64::MAX);
    }

    #[test]
    fn slice_operands() {
        let y = w(4, 0b1011);
        assert_eq!(y.slice(2, 3).unwrap(), w(2, 0b10));
        assert_eq!(y.slice(0, 1).unwrap(), w(2, 0b11));
        assert_eq!(y.slice(0, 3).unwrap(), y);
        assert!(matches!(y.slice(2, 1), Err(Error::BadRange { .. })));
        assert!(matches!(y.slice(3, 4), Err(Error::BadRange { .. })));
    }

    #[test]
    fn shl_grows_width() {
        assert_eq!(w(6, 0b011110).shl(2).unwrap(), w(8, 0b01111000));
        assert_eq!(w(6, 30).shl(0).unwrap(), w(6, 30));
        assert_eq!(w(6, 0).shl(2).unwrap(), w(8, 0));
        assert_eq!(w(60, 1).shl(5), Err(Error::InvalidWidth(65)));
    }

    #[test]
    fn four_bit_partial_product_adder() {
        let z_msb = Addend::at(w(6, 45), 2);
        let (sum, trace) = add_traced(z_msb, w(6, 15), 8).unwrap();
        assert_eq!(sum, w(8, 195));
        assert_eq!((trace.ha_count, trace.fa_count), (3, 3));
        let kinds: Vec<_> = trace.per_position.iter().map(|p| p.kind).collect();
        use AdderKind::*;
        assert_eq!(
            kinds,
            [Passthrough, Passthrough, Half, Full, Full, Full, Half, Half]
        );

        let (zero, trace) = add_traced(Addend::at(w(6, 0), 2), w(6, 0), 8).unwrap();
        assert_eq!(zero.value(), 0);
        assert!(trace.per_position.iter().all(|p| !p.carry_out));
    }

    #[test]
    fn sum_overflow_is_rejected() {
        let err = add_traced(w(4, 15), w(4, 1), 4).unwrap_err();
        assert_eq!(err, Error::SumOverflow { sum: 16, width: 4 });
    }

    #[test]
    fn exact_products() {
        assert_eq!(exact_mul(&w(4, 6), &w(4, 10)).unwrap(), w(8, 60));
        assert_eq!(exact_mul(&w(4, 0), &w(4, 9)).unwrap(), w(8, 0));
        assert_eq!(exact_mul(&w(4, 15), &w(4, 15)).unwrap(), w(8, 225));
    }

    #[test]
    fn popcounts() {
        assert_eq!(w(6, 0b101101).popcount(), 4);
        assert_eq!(w(6, 0).popcount(), 0);
        assert_eq!(w(6, 0b111111).popcount(), 6);
        assert!(w(6, 1).hamming_distance(&w(5, 1)).is_err());
    }

    #[test]
    fn exhaustive_adder_equals_integer_sum() {
        for a in 0..64u64 {
            for b in 0..64u64 {
                let (sum, trace) = add_traced(Addend::at(w(6, a), 2), w(6, b), 9).unwrap();
                assert_eq!(sum.value(), (a << 2) + b);
                assert_eq!(trace.per_position.len(), 9);
            }
        }
    }

    proptest! {
        #[test]
        fn shl_scales_value(width in 1u32..=32, raw in any::<u64>(), k in 0u32..=32) {
            let x = w(width, raw & low_mask(width));
            let shifted = x.shl(k).unwrap();
            prop_assert_eq!(shifted.value(), x.value() << k);
            prop_assert_eq!(shifted.width(), width + k);
        }

        #[test]
        fn hamming_is_popcount_of_xor(width in 1u32..=64, x in any::<u64>(), y in any::<u64>()) {
            let (a, b) = (w(width, x & low_mask(width)), w(width, y & low_mask(width)));
            let xor = w(width, a.value() ^ b.value());
            prop_assert_eq!(a.hamming_distance(&b).unwrap(), xor.popcount());
        }

        #[test]
        fn tags_depend_only_on_shapes(
            aw in 1u32..=12, bw in 1u32..=12, shift in 0u32..=8,
            x in any::<u64>(), y in any::<u64>(), x2 in any::<u64>(), y2 in any::<u64>(),
        ) {
            let width = bit_length(((1u128 << aw) - 1) * (1 << shift) + ((1u128 << bw) - 1));
            let mk = |v: u64, bits: u32| w(bits, v & low_mask(bits));
            let (_, t1) = add_traced(Addend::at(mk(x, aw), shift), mk(y, bw), width).unwrap();
            let (_, t2) = add_traced(Addend::at(mk(x2, aw), shift), mk(y2, bw), width).unwrap();
            let tags = |t: &AdderTrace| t.per_position.iter().map(|p| p.kind).collect::<Vec<_>>();
            prop_assert_eq!(tags(&t1), tags(&t2));
            prop_assert_eq!(t1.ha_count, t1.per_position.iter().filter(|p| p.kind == AdderKind::Half).count());
            prop_assert_eq!(t1.fa_count, t1.per_position.iter().filter(|p| p.kind == AdderKind::Full).count());
        }

        #[test]
        fn traced_sum_is_exact(aw in 1u32..=16, bw in 1u32..=16, shift in 0u32..=16, x in any::<u64>(), y in any::<u64>()) {
            let a = w(aw, x & low_mask(aw));
            let b = w(bw, y & low_mask(bw));
            let expected = ((a.value() as u128) << shift) + b.value() as u128;
            let width = bit_length(expected).max(1);
            let (sum, _) = add_traced(Addend::at(a, shift), b, width).unwrap();
            prop_assert_eq!(sum.value() as u128, expected);
        }
    }
}
