//! Reed–Solomon codes over GF(2^8).
//!
//! Same layout as the BCH codec: symbol `i` is the coefficient of `x^i`, parity
//! symbols first, message symbols in `n-k..n`. The generator is
//! `g(x) = prod_{j=1}^{n-k} (x - alpha^j)`. Lengths `n < 255` are shortened
//! codes. Error values come from Forney's formula.

use super::bch::chien_search;
use super::gf::{berlekamp_massey, GaloisField};
use super::EccError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsCode {
    gf: GaloisField,
    n: usize,
    k: usize,
    generator: Vec<u16>,
}

impl RsCode {
    pub fn new(n: usize, k: usize, poly: u32) -> Result<Self, EccError> {
        let gf = GaloisField::new(8, poly)?;
        if n > gf.order() || k == 0 || k >= n || (n - k) % 2 != 0 {
            return Err(EccError::InvalidParams(format!(
                "RS({n},{k}) needs k < n <= 255 and even n - k"
            )));
        }
        let mut generator = vec![1u16];
        for j in 1..=(n - k) {
            generator = gf.poly_mul(&generator, &[gf.alpha_pow(j as i64), 1]);
        }
        Ok(Self { gf, n, k, generator })
    }

    /// RS(255, 223, 16) with `x^8 + x^4 + x^3 + x^2 + 1`.
    pub fn default_255() -> Self {
        Self::new(255, 223, 0x11d).expect("valid default RS parameters")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        (self.n - self.k) / 2
    }

    pub fn field(&self) -> &GaloisField {
        &self.gf
    }

    pub fn generator(&self) -> &[u16] {
        &self.generator
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, EccError> {
        if message.len() != self.k {
            return Err(EccError::Length {
                expected: self.k,
                got: message.len(),
            });
        }
        let parity_len = self.n - self.k;
        let mut rem = vec![0u16; self.n];
        for (i, &m) in message.iter().enumerate() {
            rem[parity_len + i] = m as u16;
        }
        for i in (parity_len..self.n).rev() {
            let coef = rem[i];
            if coef != 0 {
                for (j, &g) in self.generator.iter().enumerate() {
                    rem[i - parity_len + j] ^= self.gf.mul(coef, g);
                }
            }
        }
        let mut cw = Vec::with_capacity(self.n);
        cw.extend(rem[..parity_len].iter().map(|&s| s as u8));
        cw.extend_from_slice(message);
        Ok(cw)
    }

    pub fn message_of<'a>(&self, codeword: &'a [u8]) -> &'a [u8] {
        &codeword[self.n - self.k..]
    }

    pub fn syndromes(&self, received: &[u8]) -> Vec<u16> {
        let word: Vec<u16> = received.iter().map(|&b| b as u16).collect();
        (1..=(self.n - self.k))
            .map(|j| self.gf.eval(&word, self.gf.alpha_pow(j as i64)))
            .collect()
    }

    /// Corrects `received` in place and returns the number of corrected symbols.
    pub fn correct(&self, received: &mut [u8]) -> Result<usize, EccError> {
        if received.len() != self.n {
            return Err(EccError::Length {
                expected: self.n,
                got: received.len(),
            });
        }
        let gf = &self.gf;
        let synd = self.syndromes(received);
        if synd.iter().all(|&s| s == 0) {
            return Ok(0);
        }
        let (locator, l) = berlekamp_massey(gf, &synd);
        if l > self.t() || locator.len() - 1 != l {
            return Err(EccError::DecodeFailure(format!(
                "error locator degree {} (complexity {l}) exceeds capability {}",
                locator.len() - 1,
                self.t()
            )));
        }
        let positions = chien_search(gf, &locator, self.n);
        if positions.len() != l {
            return Err(EccError::DecodeFailure(format!(
                "locator of degree {l} has {} roots in range",
                positions.len()
            )));
        }
        // Omega(x) = S(x) Lambda(x) mod x^(2t)
        let two_t = synd.len();
        let mut omega = gf.poly_mul(&synd, &locator);
        omega.truncate(two_t);
        // formal derivative: odd-degree terms only in characteristic 2
        let derivative: Vec<u16> = (1..locator.len())
            .map(|i| if i % 2 == 1 { locator[i] } else { 0 })
            .collect();
        for &p in &positions {
            let x_inv = gf.alpha_pow(-(p as i64));
            let denom = gf.eval(&derivative, x_inv);
            if denom == 0 {
                return Err(EccError::DecodeFailure("repeated locator root".into()));
            }
            let magnitude = gf.div(gf.eval(&omega, x_inv), denom);
            received[p] ^= magnitude as u8;
        }
        if self.syndromes(received).iter().any(|&s| s != 0) {
            return Err(EccError::DecodeFailure("residual syndrome after correction".into()));
        }
        Ok(positions.len())
    }

    pub fn decode(&self, received: &[u8]) -> Result<Vec<u8>, EccError> {
        let mut word = received.to_vec();
        self.correct(&mut word)?;
        Ok(self.message_of(&word).to_vec())
    }
}
