//! MSB-first bit stream helpers shared by the level codec and the message codec.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub(crate) fn with_capacity_bits(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub(crate) fn push(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for shift in (0..width).rev() {
            let bit = (value >> shift) & 1;
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

pub(crate) struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn read(&mut self, width: u32) -> Result<u64> {
        let needed = self.pos + width as usize;
        let available = self.bytes.len() * 8;
        if needed > available {
            return Err(Error::Truncated { needed, available });
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            value = (value << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(value)
    }
}

/// Two's-complement code of `value` in `width` bits.
pub(crate) fn to_twos(value: i64, width: u32) -> u64 {
    (value as u64) & mask(width)
}

pub(crate) fn from_twos(code: u64, width: u32) -> i64 {
    let sign = 1u64 << (width - 1);
    if code & sign != 0 {
        (code | !mask(width)) as i64
    } else {
        code as i64
    }
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}
