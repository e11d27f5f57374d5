//! Arithmetic in GF(2^m), 2 <= m <= 12, via log/antilog tables.

use super::EccError;

/// Primitive polynomials used when none is given, indexed by `m`.
/// Bit `i` is the coefficient of `x^i`.
pub const DEFAULT_PRIMITIVE_POLYS: [u32; 13] = [
    0, 0, 0x7, 0xb, 0x13, 0x25, 0x43, 0x89, 0x11d, 0x211, 0x409, 0x805, 0x1053,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisField {
    m: u32,
    poly: u32,
    /// `exp[i] = alpha^i`, doubled so products of logs need no reduction.
    exp: Vec<u16>,
    /// `log[0]` is unused.
    log: Vec<u16>,
}

impl GaloisField {
    pub fn new(m: u32, poly: u32) -> Result<Self, EccError> {
        if !(2..=12).contains(&m) {
            return Err(EccError::InvalidParams(format!("field degree {m} not in 2..=12")));
        }
        if poly >> m != 1 {
            return Err(EccError::InvalidParams(format!(
                "polynomial {poly:#x} does not have degree {m}"
            )));
        }
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u32 = 1;
        for i in 0..order {
            if i > 0 && x == 1 {
                return Err(EccError::InvalidParams(format!(
                    "polynomial {poly:#x} is not primitive"
                )));
            }
            exp[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x >> m != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(EccError::InvalidParams(format!("polynomial {poly:#x} is not primitive")));
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Self { m, poly, exp, log })
    }

    pub fn with_default_poly(m: u32) -> Result<Self, EccError> {
        let poly = *DEFAULT_PRIMITIVE_POLYS
            .get(m as usize)
            .filter(|&&p| p != 0)
            .ok_or_else(|| EccError::InvalidParams(format!("no default polynomial for m = {m}")))?;
        Self::new(m, poly)
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Multiplicative group order `2^m - 1`.
    pub fn order(&self) -> usize {
        (1 << self.m) - 1
    }

    /// `alpha^e` for any integer exponent.
    pub fn alpha_pow(&self, e: i64) -> u16 {
        let ord = self.order() as i64;
        self.exp[e.rem_euclid(ord) as usize]
    }

    pub fn log(&self, a: u16) -> usize {
        debug_assert!(a != 0, "log of zero");
        self.log[a as usize] as usize
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "inverse of zero");
        self.exp[self.order() - self.log[a as usize] as usize]
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        if a == 0 {
            0
        } else {
            self.mul(a, self.inv(b))
        }
    }

    /// Evaluates `poly` (coefficients low degree first) at `x` by Horner's rule.
    pub fn eval(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }

    /// Product of two polynomials, low degree first.
    pub fn poly_mul(&self, a: &[u16], b: &[u16]) -> Vec<u16> {
        let mut out = vec![0u16; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= self.mul(x, y);
            }
        }
        out
    }
}

/// Berlekamp–Massey over GF(2^m). Returns the connection polynomial
/// `Lambda(x)` (low degree first, `Lambda_0 = 1`) and its linear complexity.
pub fn berlekamp_massey(gf: &GaloisField, syndromes: &[u16]) -> (Vec<u16>, usize) {
    let mut c = vec![1u16];
    let mut b = vec![1u16];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut last_d = 1u16;
    for n in 0..syndromes.len() {
        let mut d = syndromes[n];
        for i in 1..=l.min(c.len() - 1) {
            d ^= gf.mul(c[i], syndromes[n - i]);
        }
        if d == 0 {
            shift += 1;
            continue;
        }
        let coef = gf.div(d, last_d);
        let needed = b.len() + shift;
        let prev = c.clone();
        if c.len() < needed {
            c.resize(needed, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            c[i + shift] ^= gf.mul(coef, bi);
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            last_d = d;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
    (c, l)
}
