//! Saturating uniform quantizer and its level codec.
//!
//! A grid is described by a bit budget `b`, a step `Δ` and a midpoint `σ`. Its
//! output set is `σ + lΔ` for integer levels `|l| ≤ 2^(b−1) − 1`, which is
//! `2^b − 1` values. Inputs at or beyond `σ ± x̄` with
//! `x̄ = (2^(b−1) − 1/2)Δ` clamp to the extreme levels.
//!
//! Ties at half-integer offsets round away from zero, so the staircase is
//! symmetric about `σ`. On the wire a level is a `b`-bit two's-complement
//! code; the code `−2^(b−1)` is never produced and is rejected on decode.

use alloc::vec::Vec;

use crate::bits::{from_twos, to_twos, BitReader, BitWriter};
use crate::{Error, Result};

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 32;

/// Relative slack accepted by [`QuantizerParams::to_level`] when checking that
/// a value sits on the grid.
const ON_GRID_TOLERANCE: f64 = 1e-9;

/// A signed grid index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct QuantLevel(i64);

impl QuantLevel {
    /// Builds a level, checking that it is a valid `bits`-wide code.
    pub fn new(level: i64, bits: u32) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidBits(bits));
        }
        if level.abs() > max_level(bits) {
            return Err(Error::LevelOutOfRange { level, bits });
        }
        Ok(Self(level))
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

/// Largest level magnitude for a `bits`-bit quantizer.
pub fn max_level(bits: u32) -> i64 {
    (1i64 << (bits - 1)) - 1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizerParams {
    bits: u32,
    step: f64,
    midpoint: f64,
}

impl QuantizerParams {
    pub fn new(bits: u32, step: f64, midpoint: f64) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidBits(bits));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        if !midpoint.is_finite() {
            return Err(Error::InvalidMidpoint(midpoint));
        }
        Ok(Self {
            bits,
            step,
            midpoint,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn midpoint(&self) -> f64 {
        self.midpoint
    }

    /// Same bit budget, new step and midpoint.
    pub fn regrid(&self, step: f64, midpoint: f64) -> Result<Self> {
        Self::new(self.bits, step, midpoint)
    }

    pub fn max_level(&self) -> i64 {
        max_level(self.bits)
    }

    /// `x̄ = (2^(b−1) − 1/2)·Δ`, the half-width of the unsaturated range.
    pub fn range_limit(&self) -> f64 {
        ((1u64 << (self.bits - 1)) as f64 - 0.5) * self.step
    }

    /// Grid level nearest to `x`, clamped to the representable range.
    pub fn level_of(&self, x: f64) -> Result<QuantLevel> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let max = self.max_level();
        let offset = (x - self.midpoint) / self.step;
        // `round` in libm is half-away-from-zero.
        let rounded = libm::round(offset);
        let level = if rounded >= max as f64 {
            max
        } else if rounded <= -(max as f64) {
            -max
        } else {
            rounded as i64
        };
        Ok(QuantLevel(level))
    }

    pub fn quantize(&self, x: f64) -> Result<f64> {
        let level = self.level_of(x)?;
        Ok(self.value_at(level))
    }

    /// Inverse of [`from_level`](Self::from_level) for on-grid values.
    pub fn to_level(&self, q: f64) -> Result<QuantLevel> {
        if !q.is_finite() {
            return Err(Error::NonFinite(q));
        }
        let offset = (q - self.midpoint) / self.step;
        let rounded = libm::round(offset);
        // σ + lΔ is itself rounded, so allow its representation error too.
        let representation = 4.0 * f64::EPSILON * (q.abs() + self.midpoint.abs()) / self.step;
        let slack = ON_GRID_TOLERANCE * rounded.abs().max(1.0) + representation;
        if (offset - rounded).abs() > slack {
            return Err(Error::OffGrid { value: q });
        }
        if rounded.abs() > self.max_level() as f64 {
            return Err(Error::LevelOutOfRange {
                level: rounded as i64,
                bits: self.bits,
            });
        }
        Ok(QuantLevel(rounded as i64))
    }

    pub fn from_level(&self, level: QuantLevel) -> Result<f64> {
        if level.0.abs() > self.max_level() {
            return Err(Error::LevelOutOfRange {
                level: level.0,
                bits: self.bits,
            });
        }
        Ok(self.value_at(level))
    }

    fn value_at(&self, level: QuantLevel) -> f64 {
        self.midpoint + level.0 as f64 * self.step
    }
}

/// Packs levels as consecutive `bits_each`-bit two's-complement codes,
/// MSB-first, zero-padding the final byte.
pub fn pack_levels(levels: &[QuantLevel], bits_each: u32) -> Result<Vec<u8>> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits_each) {
        return Err(Error::InvalidBits(bits_each));
    }
    let mut writer = BitWriter::with_capacity_bits(levels.len() * bits_each as usize);
    for level in levels {
        write_level(&mut writer, *level, bits_each)?;
    }
    Ok(writer.finish())
}

pub fn unpack_levels(bytes: &[u8], count: usize, bits_each: u32) -> Result<Vec<QuantLevel>> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits_each) {
        return Err(Error::InvalidBits(bits_each));
    }
    let mut reader = BitReader::new(bytes);
    (0..count)
        .map(|_| read_level(&mut reader, bits_each))
        .collect()
}

pub(crate) fn write_level(writer: &mut BitWriter, level: QuantLevel, bits: u32) -> Result<()> {
    if level.0.abs() > max_level(bits) {
        return Err(Error::LevelOutOfRange {
            level: level.0,
            bits,
        });
    }
    writer.push(to_twos(level.0, bits), bits);
    Ok(())
}

pub(crate) fn read_level(reader: &mut BitReader<'_>, bits: u32) -> Result<QuantLevel> {
    let level = from_twos(reader.read(bits)?, bits);
    if level.abs() > max_level(bits) {
        // the reserved code -2^(b-1)
        return Err(Error::LevelOutOfRange { level, bits });
    }
    Ok(QuantLevel(level))
}
