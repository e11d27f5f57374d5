//! Narrow-sense primitive binary BCH codes.
//!
//! Codewords are bit vectors where index `i` holds the coefficient of `x^i`.
//! Encoding is systematic: `c(x) = x^(n-k) m(x) + (x^(n-k) m(x) mod g(x))`, so
//! parity occupies indices `0..n-k` and the message indices `n-k..n`.
//!
//! Decoding computes the syndromes `S_j = r(alpha^j)` for `j = 1..=2t`, runs
//! Berlekamp–Massey for the error locator, and finds its roots by Chien search.
//! A locator whose degree exceeds `t` or whose root count differs from its
//! degree is reported as [`EccError::DecodeFailure`]. Patterns of more than
//! `t` errors may also decode to a wrong codeword.

use super::gf::{berlekamp_massey, GaloisField};
use super::EccError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchCode {
    gf: GaloisField,
    n: usize,
    k: usize,
    t: usize,
    /// Generator polynomial over GF(2), low degree first.
    generator: Vec<u8>,
}

impl BchCode {
    /// BCH code of length `2^m - 1` correcting `t` errors over the field
    /// defined by `poly`.
    pub fn new(m: u32, t: usize, poly: u32) -> Result<Self, EccError> {
        let gf = GaloisField::new(m, poly)?;
        Self::with_field(gf, t)
    }

    pub fn with_field(gf: GaloisField, t: usize) -> Result<Self, EccError> {
        let n = gf.order();
        if t == 0 || 2 * t >= n {
            return Err(EccError::InvalidParams(format!("t = {t} invalid for n = {n}")));
        }
        let generator = generator_polynomial(&gf, t);
        let deg = generator.len() - 1;
        if deg >= n {
            return Err(EccError::InvalidParams(format!(
                "generator degree {deg} leaves no message bits"
            )));
        }
        Ok(Self {
            k: n - deg,
            gf,
            n,
            t,
            generator,
        })
    }

    /// BCH(127, 36, 15) over GF(2^7) with `x^7 + x^3 + 1`.
    pub fn default_127() -> Self {
        Self::new(7, 15, 0x89).expect("valid default BCH parameters")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn field(&self) -> &GaloisField {
        &self.gf
    }

    pub fn generator(&self) -> &[u8] {
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
        let mut cw = vec![0u8; self.n];
        for (i, &b) in message.iter().enumerate() {
            cw[parity_len + i] = b & 1;
        }
        // long division of x^(n-k) m(x) by the monic generator
        let mut rem = cw.clone();
        for i in (parity_len..self.n).rev() {
            if rem[i] == 1 {
                for (j, &g) in self.generator.iter().enumerate() {
                    rem[i - parity_len + j] ^= g;
                }
            }
        }
        cw[..parity_len].copy_from_slice(&rem[..parity_len]);
        Ok(cw)
    }

    /// Message bits of a codeword (no correction).
    pub fn message_of<'a>(&self, codeword: &'a [u8]) -> &'a [u8] {
        &codeword[self.n - self.k..]
    }

    pub fn syndromes(&self, received: &[u8]) -> Vec<u16> {
        let ones: Vec<usize> = received
            .iter()
            .enumerate()
            .filter(|(_, &b)| b & 1 == 1)
            .map(|(i, _)| i)
            .collect();
        (1..=2 * self.t)
            .map(|j| {
                ones.iter()
                    .fold(0u16, |acc, &i| acc ^ self.gf.alpha_pow((i * j) as i64))
            })
            .collect()
    }

    /// Corrects `received` in place and returns the number of flipped bits.
    pub fn correct(&self, received: &mut [u8]) -> Result<usize, EccError> {
        if received.len() != self.n {
            return Err(EccError::Length {
                expected: self.n,
                got: received.len(),
            });
        }
        let synd = self.syndromes(received);
        if synd.iter().all(|&s| s == 0) {
            return Ok(0);
        }
        let (locator, l) = berlekamp_massey(&self.gf, &synd);
        if l > self.t || locator.len() - 1 != l {
            return Err(EccError::DecodeFailure(format!(
                "error locator degree {} (complexity {l}) exceeds capability {}",
                locator.len() - 1,
                self.t
            )));
        }
        let positions = chien_search(&self.gf, &locator, self.n);
        if positions.len() != l {
            return Err(EccError::DecodeFailure(format!(
                "locator of degree {l} has {} roots",
                positions.len()
            )));
        }
        for &p in &positions {
            received[p] ^= 1;
        }
        if self.syndromes(received).iter().any(|&s| s != 0) {
            return Err(EccError::DecodeFailure("residual syndrome after correction".into()));
        }
        Ok(positions.len())
    }

    pub fn decode(&self, received: &[u8]) -> Result<Vec<u8>, EccError> {
        let mut word: Vec<u8> = received.iter().map(|b| b & 1).collect();
        self.correct(&mut word)?;
        Ok(self.message_of(&word).to_vec())
    }
}

/// Positions `i < n` with `Lambda(alpha^-i) = 0`.
pub(crate) fn chien_search(gf: &GaloisField, locator: &[u16], n: usize) -> Vec<usize> {
    let mut found = Vec::new();
    // term[j] tracks Lambda_j * alpha^(-i j) as i advances.
    let mut terms: Vec<u16> = locator.to_vec();
    let steps: Vec<u16> = (0..locator.len()).map(|j| gf.alpha_pow(-(j as i64))).collect();
    for i in 0..gf.order() {
        let v = terms.iter().fold(0u16, |a, &x| a ^ x);
        if v == 0 {
            found.push(i);
        }
        for j in 1..terms.len() {
            terms[j] = gf.mul(terms[j], steps[j]);
        }
    }
    // roots outside the (possibly shortened) code length are inconsistent
    if found.iter().any(|&p| p >= n) {
        found.clear();
    }
    found
}

/// LCM of the minimal polynomials of `alpha^1 .. alpha^(2t)`.
fn generator_polynomial(gf: &GaloisField, t: usize) -> Vec<u8> {
    let n = gf.order();
    let mut seen = vec![false; n];
    let mut g: Vec<u16> = vec![1];
    for i in 1..=2 * t {
        let i = i % n;
        if seen[i] {
            continue;
        }
        // cyclotomic coset of i
        let mut coset = Vec::new();
        let mut e = i;
        while !seen[e] {
            seen[e] = true;
            coset.push(e);
            e = (e * 2) % n;
        }
        let mut minimal: Vec<u16> = vec![1];
        for &e in &coset {
            minimal = gf.poly_mul(&minimal, &[gf.alpha_pow(e as i64), 1]);
        }
        g = gf.poly_mul(&g, &minimal);
    }
    g.into_iter()
        .map(|c| {
            debug_assert!(c <= 1, "generator coefficient outside GF(2)");
            c as u8
        })
        .collect()
}
