//! Fitness scalar abstraction.
//!
//! Everything that stores or compares fitness is generic over [`Scalar`], so a
//! run can use `f32` or `f64` fitness. Persistence needs the exact bit pattern
//! of each value, which is why the trait carries its own bit conversions.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real type usable as a fitness value.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Width of the serialized value in bytes.
    const WIDTH: u8;

    /// Raw IEEE-754 bits, zero-extended to 64 bits.
    fn to_raw_bits(self) -> u64;

    /// Inverse of [`Scalar::to_raw_bits`]. Upper bits beyond `WIDTH` are ignored.
    fn from_raw_bits(bits: u64) -> Self;

    /// `n` as a scalar, e.g. a count used as fitness.
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable as float")
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;

    fn to_raw_bits(self) -> u64 {
        u64::from(self.to_bits())
    }

    fn from_raw_bits(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;

    fn to_raw_bits(self) -> u64 {
        self.to_bits()
    }

    fn from_raw_bits(bits: u64) -> Self {
        f64::from_bits(bits)
    }
}
