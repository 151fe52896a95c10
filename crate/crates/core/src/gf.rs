//! Arithmetic over the binary extension fields GF(2^q).
//!
//! Elements are stored as their polynomial-basis bit patterns in a `u8`, so
//! addition is XOR and multiplication goes through discrete log/antilog
//! tables built from a fixed primitive polynomial per exponent.
//!
//! The module also hosts the unnormalized Walsh–Hadamard transform used by
//! the decoder to turn XOR-convolutions of probability vectors into
//! pointwise products.

use thiserror::Error;

/// A field element, `0 <= value < 2^q`.
pub type Symbol = u8;

/// Largest supported field exponent.
pub const MAX_Q: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field exponent {0} outside 1..={MAX_Q}")]
    UnsupportedExponent(u32),
    #[error("polynomial {poly:#x} is not a primitive polynomial of degree {q}")]
    NotPrimitive { q: u32, poly: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("symbol {symbol} outside GF(2^{q})")]
    OutOfRange { symbol: u32, q: u32 },
}

/// Default primitive polynomial for each exponent, as a bitmask including
/// the leading term. q = 3..6 use x³+x+1, x⁴+x+1, x⁵+x²+1, x⁶+x+1.
pub fn default_primitive_poly(q: u32) -> Option<u32> {
    Some(match q {
        1 => 0b11,
        2 => 0b111,
        3 => 0b1011,
        4 => 0b1_0011,
        5 => 0b10_0101,
        6 => 0b100_0011,
        7 => 0b1000_0011,
        8 => 0b1_0001_1101,
        _ => return None,
    })
}

/// Arithmetic context for GF(2^q). Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisField {
    q: u32,
    poly: u32,
    /// `exp[i] = x^i`, stored twice over so `exp[log a + log b]` needs no
    /// modular reduction.
    exp: Vec<u8>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u8>,
}

impl GaloisField {
    /// Builds GF(2^q) with the default primitive polynomial.
    pub fn new(q: u32) -> Result<Self, FieldError> {
        let poly = default_primitive_poly(q).ok_or(FieldError::UnsupportedExponent(q))?;
        Self::with_poly(q, poly)
    }

    /// Builds GF(2^q) from an explicit polynomial. The polynomial is checked
    /// to be primitive by walking the powers of `x` and verifying they visit
    /// every nonzero element exactly once.
    pub fn with_poly(q: u32, poly: u32) -> Result<Self, FieldError> {
        if q == 0 || q > MAX_Q {
            return Err(FieldError::UnsupportedExponent(q));
        }
        let order = 1usize << q;
        if poly >> q != 1 {
            return Err(FieldError::NotPrimitive { q, poly });
        }
        let period = order - 1;
        let mut exp = vec![0u8; 2 * period];
        let mut log = vec![0u8; order];
        let mut seen = vec![false; order];
        let mut x: u32 = 1;
        for i in 0..period {
            if x == 0 || seen[x as usize] {
                return Err(FieldError::NotPrimitive { q, poly });
            }
            seen[x as usize] = true;
            exp[i] = x as u8;
            exp[i + period] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (1 << q) != 0 {
                x ^= poly;
            }
        }
        // After a full period the generator must return to 1.
        if x != 1 {
            return Err(FieldError::NotPrimitive { q, poly });
        }
        Ok(Self { q, poly, exp, log })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, `2^q`.
    pub fn order(&self) -> usize {
        1 << self.q
    }

    pub fn contains(&self, a: u32) -> bool {
        (a as usize) < self.order()
    }

    /// Validates a raw value as a symbol of this field.
    pub fn symbol(&self, a: u32) -> Result<Symbol, FieldError> {
        if self.contains(a) {
            Ok(a as Symbol)
        } else {
            Err(FieldError::OutOfRange { symbol: a, q: self.q })
        }
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        debug_assert!(self.contains(a as u32) && self.contains(b as u32));
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        debug_assert!(self.contains(a as u32) && self.contains(b as u32));
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, FieldError> {
        debug_assert!(self.contains(a as u32));
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let period = self.order() - 1;
        let l = self.log[a as usize] as usize;
        Ok(self.exp[(period - l) % period])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `x^i` for the primitive element `x`.
    pub fn exp(&self, i: usize) -> Symbol {
        self.exp[i % (self.order() - 1)]
    }

    /// Discrete logarithm to base `x`; `None` for zero.
    pub fn log(&self, a: Symbol) -> Option<usize> {
        (a != 0).then(|| self.log[a as usize] as usize)
    }

    /// Table of `a * x` for every `x`, i.e. the permutation applied to a
    /// message crossing an edge labelled `a`.
    pub fn mul_row(&self, a: Symbol) -> Vec<Symbol> {
        (0..self.order()).map(|x| self.mul(a, x as Symbol)).collect()
    }
}

/// In-place unnormalized Walsh–Hadamard transform. Applying it twice scales
/// the input by `v.len()`.
///
/// Panics unless the length is a power of two.
pub fn wht(v: &mut [f64]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "transform length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// Inverse of [`wht`]: the same butterfly followed by division by the length.
pub fn inverse_wht(v: &mut [f64]) {
    wht(v);
    let scale = 1.0 / v.len() as f64;
    v.iter_mut().for_each(|x| *x *= scale);
}

/// XOR-convolution `out[c] = Σ_{a ^ b = c} u[a] v[b]` computed through the
/// transform domain.
pub fn xor_convolve(u: &[f64], v: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), v.len(), "convolution operands differ in length");
    let mut fu = u.to_vec();
    let mut fv = v.to_vec();
    wht(&mut fu);
    wht(&mut fv);
    fu.iter_mut().zip(&fv).for_each(|(a, b)| *a *= b);
    inverse_wht(&mut fu);
    fu
}
