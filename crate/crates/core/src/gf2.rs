//! Bit strings, GF(2) matrices, affine subspaces, and GF(2^m) field
//! arithmetic. Everything here is a fixed-width value type; bit 0 is the
//! leftmost bit of the written form, and concatenation puts the left
//! operand at the lower indices.

use crate::error::{Error, Result};
use std::fmt;

/// Maximum supported bit-string width. Desk-scale objects (codewords,
/// advice strings, row matrices) all fit comfortably.
pub const MAX_BITS: u32 = 128;

/// A fixed-length string over {0,1}, at most [`MAX_BITS`] bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u32,
    bits: u128,
}

impl BitString {
    pub fn zero(len: u32) -> Self {
        assert!(len <= MAX_BITS, "bit string too long: {len}");
        BitString { len, bits: 0 }
    }

    /// Builds from a raw integer; bit `i` of `raw` becomes index `i`.
    pub fn from_raw(len: u32, raw: u128) -> Self {
        assert!(len <= MAX_BITS, "bit string too long: {len}");
        let mask = if len == 128 {
            u128::MAX
        } else {
            (1u128 << len) - 1
        };
        BitString {
            len,
            bits: raw & mask,
        }
    }

    pub fn from_u64(len: u32, raw: u64) -> Self {
        Self::from_raw(len, raw as u128)
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut s = Self::zero(bits.len() as u32);
        for (i, &b) in bits.iter().enumerate() {
            s.set(i as u32, b & 1);
        }
        s
    }

    /// Parses a "0101..." string.
    pub fn parse_binary(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.len() > MAX_BITS as usize {
            return Err(Error::Parse(format!("bit string too long: {}", t.len())));
        }
        let mut s = Self::zero(t.len() as u32);
        for (i, c) in t.chars().enumerate() {
            match c {
                '0' => {}
                '1' => s.set(i as u32, 1),
                _ => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn raw(&self) -> u128 {
        self.bits
    }

    /// Raw value as u64; the string must be at most 64 bits.
    pub fn raw_u64(&self) -> u64 {
        debug_assert!(self.len <= 64);
        self.bits as u64
    }

    #[inline]
    pub fn get(&self, i: u32) -> u8 {
        debug_assert!(i < self.len, "index {i} out of bounds (len {})", self.len);
        ((self.bits >> i) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: u32, v: u8) {
        debug_assert!(i < self.len);
        let mask = 1u128 << i;
        if v & 1 == 1 {
            self.bits |= mask;
        } else {
            self.bits &= !mask;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len, "xor length mismatch");
        BitString {
            len: self.len,
            bits: self.bits ^ other.bits,
        }
    }

    /// Concatenation; `self` occupies the lower indices.
    pub fn concat(&self, other: &BitString) -> BitString {
        let len = self.len + other.len;
        assert!(len <= MAX_BITS, "concatenation overflows {MAX_BITS} bits");
        BitString {
            len,
            bits: self.bits | (other.bits << self.len),
        }
    }

    /// The length-`d` prefix (indices `0..d`).
    pub fn prefix(&self, d: u32) -> BitString {
        assert!(d <= self.len, "prefix longer than string");
        BitString::from_raw(d, self.bits)
    }

    /// Bits `lo..lo+len` as a new string.
    pub fn substring(&self, lo: u32, len: u32) -> BitString {
        assert!(lo + len <= self.len, "substring out of range");
        BitString::from_raw(len, self.bits >> lo)
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn parity(&self) -> u8 {
        (self.bits.count_ones() & 1) as u8
    }

    pub fn complement(&self) -> BitString {
        BitString::from_raw(self.len, !self.bits)
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// All strings of the given length, in raw order.
    pub fn all(len: u32) -> impl Iterator<Item = BitString> {
        assert!(
            len <= 26,
            "exhaustive bit-string enumeration capped at 26 bits"
        );
        (0u64..(1u64 << len)).map(move |r| BitString::from_u64(len, r))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({})", self)
    }
}

/// A rows × cols matrix over GF(2); each row is stored as a bit mask.
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    row_bits: Vec<u128>,
}

impl Gf2Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        assert!(cols as u32 <= MAX_BITS);
        Gf2Matrix {
            rows,
            cols,
            row_bits: vec![0; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.row_bits[i] = 1u128 << i;
        }
        m
    }

    pub fn from_rows(rows: &[BitString]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len() as usize);
        for r in rows {
            assert_eq!(r.len() as usize, cols, "ragged rows");
        }
        Gf2Matrix {
            rows: rows.len(),
            cols,
            row_bits: rows.iter().map(|r| r.raw()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        debug_assert!(r < self.rows && c < self.cols);
        ((self.row_bits[r] >> c) & 1) as u8
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        debug_assert!(r < self.rows && c < self.cols);
        let mask = 1u128 << c;
        if v & 1 == 1 {
            self.row_bits[r] |= mask;
        } else {
            self.row_bits[r] &= !mask;
        }
    }

    pub fn row(&self, r: usize) -> BitString {
        BitString::from_raw(self.cols as u32, self.row_bits[r])
    }

    pub fn set_row(&mut self, r: usize, v: &BitString) {
        assert_eq!(v.len() as usize, self.cols);
        self.row_bits[r] = v.raw();
    }

    /// Matrix–vector product over GF(2).
    pub fn mul_vec(&self, x: &BitString) -> BitString {
        assert_eq!(x.len() as usize, self.cols, "mul_vec width mismatch");
        let mut out = BitString::zero(self.rows as u32);
        for (i, &row) in self.row_bits.iter().enumerate() {
            out.set(i as u32, ((row & x.raw()).count_ones() & 1) as u8);
        }
        out
    }

    /// Product self · other.
    pub fn mul_mat(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.rows, "mul_mat dimension mismatch");
        let mut out = Gf2Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            let mut acc: u128 = 0;
            for k in 0..self.cols {
                if (self.row_bits[i] >> k) & 1 == 1 {
                    acc ^= other.row_bits[k];
                }
            }
            out.row_bits[i] = acc;
        }
        out
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut out = Gf2Matrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) == 1 {
                    out.set(j, i, 1);
                }
            }
        }
        out
    }

    /// Row-space dimension via Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<u128> = self.row_bits.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let mask = 1u128 << c;
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) {
                rows.swap(rank, p);
                let pivot = rows[rank];
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && *row & mask != 0 {
                        *row ^= pivot;
                    }
                }
                rank += 1;
                if rank == rows.len() {
                    break;
                }
            }
        }
        rank
    }

    /// Solves `self · x = b`, returning one solution if the system is
    /// consistent.
    pub fn solve(&self, b: &BitString) -> Result<Option<BitString>> {
        if b.len() as usize != self.rows {
            return Err(Error::DimensionMismatch {
                context: "gf2_solve",
                expected: self.rows,
                actual: b.len() as usize,
            });
        }
        // Eliminate on the augmented system.
        let mut rows: Vec<(u128, u8)> = self
            .row_bits
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, b.get(i as u32)))
            .collect();
        let mut pivot_col: Vec<Option<usize>> = Vec::new();
        let mut rank = 0;
        for c in 0..self.cols {
            let mask = 1u128 << c;
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r].0 & mask != 0) {
                rows.swap(rank, p);
                let (prow, pb) = rows[rank];
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && row.0 & mask != 0 {
                        row.0 ^= prow;
                        row.1 ^= pb;
                    }
                }
                pivot_col.push(Some(c));
                rank += 1;
            }
        }
        // Inconsistent if a zero row has rhs 1.
        if rows[rank..].iter().any(|&(r, rb)| r == 0 && rb == 1) {
            return Ok(None);
        }
        let mut x = BitString::zero(self.cols as u32);
        for (r, col) in pivot_col.iter().enumerate() {
            if let Some(c) = col {
                x.set(*c as u32, rows[r].1);
            }
        }
        Ok(Some(x))
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row(i))?;
        }
        Ok(())
    }
}

/// Rank of the row space; the dimension returned is the same as
/// `m.rank()` and is exposed as a free function to mirror the matrix
/// algebra surface.
pub fn gf2_rank(m: &Gf2Matrix) -> usize {
    m.rank()
}

/// Solves `a · x = b` over GF(2).
pub fn gf2_solve(a: &Gf2Matrix, b: &BitString) -> Result<Option<BitString>> {
    a.solve(b)
}

/// Affine subspace `offset + span(basis)` of {0,1}^ambient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspace {
    basis: Vec<BitString>,
    offset: BitString,
}

/// Enumeration budget for affine subspaces.
pub const AFFINE_ENUM_BUDGET: usize = 24;

impl AffineSubspace {
    pub fn new(basis: Vec<BitString>, offset: BitString) -> Result<Self> {
        let n = offset.len();
        for b in &basis {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "affine subspace basis",
                    expected: n as usize,
                    actual: b.len() as usize,
                });
            }
        }
        let rank = Gf2Matrix::from_rows(&basis).rank();
        if rank != basis.len() {
            return Err(Error::Infeasible(format!(
                "basis not linearly independent: rank {rank} < {}",
                basis.len()
            )));
        }
        Ok(AffineSubspace { basis, offset })
    }

    /// The full space {0,1}^n.
    pub fn full(n: u32) -> Self {
        let basis = (0..n).map(|i| BitString::from_raw(n, 1u128 << i)).collect();
        AffineSubspace {
            basis,
            offset: BitString::zero(n),
        }
    }

    /// A single point.
    pub fn point(v: BitString) -> Self {
        AffineSubspace {
            basis: Vec::new(),
            offset: v,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_len(&self) -> u32 {
        self.offset.len()
    }

    pub fn basis(&self) -> &[BitString] {
        &self.basis
    }

    pub fn offset(&self) -> &BitString {
        &self.offset
    }

    /// Membership test: `v - offset` must lie in the span of the basis.
    pub fn contains(&self, v: &BitString) -> bool {
        if v.len() != self.ambient_len() {
            return false;
        }
        let shifted = v.xor(&self.offset);
        let mut rows = self.basis.clone();
        rows.push(shifted);
        Gf2Matrix::from_rows(&rows).rank() == self.basis.len()
    }

    /// Yields all `2^dim` members, offset first, in Gray-free counter order.
    pub fn enumerate(&self) -> Result<AffineIter<'_>> {
        if self.dim() > AFFINE_ENUM_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "affine enumeration dim {} > {AFFINE_ENUM_BUDGET}",
                self.dim()
            )));
        }
        Ok(AffineIter {
            space: self,
            next: 0,
            count: 1u64 << self.dim(),
        })
    }

    /// Image under an affine map `x -> m·x + c`: a subspace spanned by the
    /// images of the basis vectors.
    pub fn affine_image(&self, m: &Gf2Matrix, c: &BitString) -> AffineSubspace {
        let offset = m.mul_vec(&self.offset).xor(c);
        // Reduce the image vectors to an independent basis.
        let images: Vec<BitString> = self.basis.iter().map(|b| m.mul_vec(b)).collect();
        let mut basis: Vec<BitString> = Vec::new();
        for v in images {
            let mut rows = basis.clone();
            rows.push(v);
            if Gf2Matrix::from_rows(&rows).rank() == basis.len() + 1 {
                basis.push(v);
            }
        }
        AffineSubspace { basis, offset }
    }
}

pub struct AffineIter<'a> {
    space: &'a AffineSubspace,
    next: u64,
    count: u64,
}

impl Iterator for AffineIter<'_> {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        if self.next >= self.count {
            return None;
        }
        let c = self.next;
        self.next += 1;
        let mut v = *self.space.offset();
        for (i, b) in self.space.basis().iter().enumerate() {
            if (c >> i) & 1 == 1 {
                v = v.xor(b);
            }
        }
        Some(v)
    }
}

/// Enumerates an affine subspace; errors above the dimension budget.
pub fn affine_enumerate(s: &AffineSubspace) -> Result<Vec<BitString>> {
    Ok(s.enumerate()?.collect())
}

/// Enumerates all dimension-`k` affine subspaces of {0,1}^n in a canonical
/// order (RREF bases, offsets reduced to the non-pivot coordinates), without
/// duplicates. Returns the subspaces and whether the enumeration was
/// truncated by `limit`.
pub fn enumerate_affine_subspaces(
    n: u32,
    k: u32,
    limit: Option<usize>,
) -> Result<(Vec<AffineSubspace>, bool)> {
    if k > n {
        return Err(Error::Infeasible(format!(
            "subspace dimension {k} exceeds ambient {n}"
        )));
    }
    if limit.is_none() && n > 10 {
        return Err(Error::BudgetExceeded(
            "unbounded affine enumeration capped at n <= 10; pass a limit".into(),
        ));
    }
    let mut out = Vec::new();
    let mut truncated = false;
    let cap = limit.unwrap_or(usize::MAX);
    let pivot_sets: Vec<Vec<u32>> = if k == 0 {
        vec![vec![]]
    } else {
        use itertools::Itertools;
        (0..n).combinations(k as usize).collect()
    };
    'outer: for pivots in &pivot_sets {
        // Free positions: (row i, column j) with j > pivots[i], j not a pivot.
        let is_pivot = |j: u32| pivots.contains(&j);
        let mut free: Vec<(usize, u32)> = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            for j in p + 1..n {
                if !is_pivot(j) {
                    free.push((i, j));
                }
            }
        }
        let nonpivot: Vec<u32> = (0..n).filter(|&j| !is_pivot(j)).collect();
        for fill in 0u64..(1u64 << free.len()) {
            let mut basis: Vec<BitString> = pivots
                .iter()
                .map(|&p| BitString::from_raw(n, 1u128 << p))
                .collect();
            for (bit, &(i, j)) in free.iter().enumerate() {
                if (fill >> bit) & 1 == 1 {
                    basis[i].set(j, 1);
                }
            }
            for off_fill in 0u64..(1u64 << nonpivot.len()) {
                let mut offset = BitString::zero(n);
                for (bit, &j) in nonpivot.iter().enumerate() {
                    if (off_fill >> bit) & 1 == 1 {
                        offset.set(j, 1);
                    }
                }
                if out.len() >= cap {
                    truncated = true;
                    break 'outer;
                }
                out.push(AffineSubspace {
                    basis: basis.clone(),
                    offset,
                });
            }
        }
    }
    Ok((out, truncated))
}

/// Gaussian binomial coefficient `[n choose k]_2`: the number of k-dim
/// linear subspaces of F_2^n.
pub fn gaussian_binomial_2(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (k - i)) - 1;
    }
    num / den
}

// ---------------------------------------------------------------------------
// GF(2^m)

/// Fixed irreducible moduli. Degrees 3, 4 and 8 are pinned to the canonical
/// choices; the rest are the smallest irreducible polynomial of their degree
/// (deterministic, found by trial division).
const PINNED_MODULI: [(u32, u32); 3] = [
    (3, 0b1011),        // x^3 + x + 1
    (4, 0b1_0011),      // x^4 + x + 1
    (8, 0b1_0001_1011), // x^8 + x^4 + x^3 + x + 1
];

pub const MAX_FIELD_DEGREE: u32 = 16;

fn poly_mul_mod(a: u32, b: u32, modulus: u32, degree: u32) -> u32 {
    let mut acc: u64 = 0;
    let (a, b) = (a as u64, b as u64);
    for i in 0..degree {
        if (b >> i) & 1 == 1 {
            acc ^= a << i;
        }
    }
    // Reduce.
    let m = modulus as u64;
    for i in (degree..2 * degree).rev() {
        if (acc >> i) & 1 == 1 {
            acc ^= m << (i - degree);
        }
    }
    acc as u32
}

fn is_irreducible(poly: u32, degree: u32) -> bool {
    if degree == 1 {
        return poly == 0b11 || poly == 0b10;
    }
    // Trial division by every polynomial of degree 1..=degree/2.
    for d in 1..=degree / 2 {
        for q in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_divisible(poly, degree, q, d) {
                return false;
            }
        }
    }
    true
}

fn poly_divisible(p: u32, pd: u32, q: u32, qd: u32) -> bool {
    let mut rem = p as u64;
    let mut rd = pd;
    while rd >= qd {
        if (rem >> rd) & 1 == 1 {
            rem ^= (q as u64) << (rd - qd);
        }
        if rd == 0 {
            break;
        }
        rd -= 1;
    }
    rem == 0
}

/// The modulus used for GF(2^degree).
pub fn field_modulus(degree: u32) -> u32 {
    assert!(
        (1..=MAX_FIELD_DEGREE).contains(&degree),
        "unsupported field degree {degree}"
    );
    if let Some(&(_, m)) = PINNED_MODULI.iter().find(|&&(d, _)| d == degree) {
        return m;
    }
    ((1u32 << degree) + 1..(1u32 << (degree + 1)))
        .find(|&p| is_irreducible(p, degree))
        .expect("irreducible polynomial exists for every degree")
}

/// An element of GF(2^degree), coefficients packed low-to-high.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldElem {
    degree: u32,
    coeffs: u32,
}

impl FieldElem {
    pub fn new(degree: u32, coeffs: u32) -> Self {
        assert!((1..=MAX_FIELD_DEGREE).contains(&degree));
        assert!(coeffs < (1u32 << degree), "coefficients out of range");
        FieldElem { degree, coeffs }
    }

    pub fn zero(degree: u32) -> Self {
        FieldElem::new(degree, 0)
    }

    pub fn one(degree: u32) -> Self {
        FieldElem::new(degree, 1)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> u32 {
        self.coeffs
    }

    pub fn low_bit(&self) -> u8 {
        (self.coeffs & 1) as u8
    }

    pub fn add(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        Ok(FieldElem {
            degree: self.degree,
            coeffs: self.coeffs ^ other.coeffs,
        })
    }

    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        let m = field_modulus(self.degree);
        Ok(FieldElem {
            degree: self.degree,
            coeffs: poly_mul_mod(self.coeffs, other.coeffs, m, self.degree),
        })
    }

    pub fn pow(&self, mut e: u64) -> FieldElem {
        let mut base = *self;
        let mut acc = FieldElem::one(self.degree);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same degree");
            }
            base = base.mul(&base).expect("same degree");
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inverse(&self) -> Result<FieldElem> {
        if self.coeffs == 0 {
            return Err(Error::Infeasible("inverse of zero field element".into()));
        }
        // x^(2^m - 2) = x^{-1}.
        Ok(self.pow((1u64 << self.degree) - 2))
    }

    fn check(&self, other: &FieldElem) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DimensionMismatch {
                context: "field arithmetic",
                expected: self.degree as usize,
                actual: other.degree as usize,
            });
        }
        Ok(())
    }
}

/// Product in GF(2^m) with the fixed modulus for the elements' degree.
pub fn field_mul(a: &FieldElem, b: &FieldElem) -> Result<FieldElem> {
    a.mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bitstring_roundtrip_and_order() {
        let s = BitString::parse_binary("0110").unwrap();
        assert_eq!(s.get(0), 0);
        assert_eq!(s.get(1), 1);
        assert_eq!(s.get(2), 1);
        assert_eq!(s.get(3), 0);
        assert_eq!(s.to_string(), "0110");
        let t = BitString::parse_binary("10").unwrap();
        assert_eq!(s.concat(&t).to_string(), "011010");
        assert_eq!(s.prefix(2).to_string(), "01");
    }

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(gf2_rank(&Gf2Matrix::identity(4)), 4);
        assert_eq!(gf2_rank(&Gf2Matrix::zero(3, 5)), 0);
        let dup = Gf2Matrix::from_rows(&[
            BitString::parse_binary("11").unwrap(),
            BitString::parse_binary("11").unwrap(),
        ]);
        assert_eq!(gf2_rank(&dup), 1);
    }

    #[test]
    fn rank_transpose_and_row_ops_invariance() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let mut m = Gf2Matrix::zero(6, 6);
            for i in 0..6 {
                for j in 0..6 {
                    m.set(i, j, rng.gen::<bool>() as u8);
                }
            }
            let r = m.rank();
            assert_eq!(r, m.transpose().rank());
            // Row swap and row addition preserve rank.
            let mut p = m.clone();
            let (a, b) = (rng.gen_range(0usize..6), rng.gen_range(0usize..6));
            if a != b {
                let ra = p.row(a);
                let rb = p.row(b);
                p.set_row(a, &rb);
                p.set_row(b, &ra);
                assert_eq!(p.rank(), r);
                let rb2 = p.row(b).xor(&p.row(a));
                p.set_row(b, &rb2);
                assert_eq!(p.rank(), r);
            }
        }
    }

    #[test]
    fn solve_identity_zero_and_backsub() {
        let b = BitString::parse_binary("1010").unwrap();
        let x = gf2_solve(&Gf2Matrix::identity(4), &b).unwrap().unwrap();
        assert_eq!(x, b);

        let z = Gf2Matrix::zero(3, 3);
        let b2 = BitString::parse_binary("010").unwrap();
        assert!(gf2_solve(&z, &b2).unwrap().is_none());

        // A = [[1,1],[0,1]], b = (0,1) -> x = (1,1) by back-substitution.
        let a = Gf2Matrix::from_rows(&[
            BitString::parse_binary("11").unwrap(),
            BitString::parse_binary("01").unwrap(),
        ]);
        let b3 = BitString::parse_binary("01").unwrap();
        let x = gf2_solve(&a, &b3).unwrap().unwrap();
        assert_eq!(x.to_string(), "11");
        assert_eq!(a.mul_vec(&x), b3);
    }

    #[test]
    fn solve_random_consistency() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..200 {
            let rows = rng.gen_range(1usize..8);
            let cols = rng.gen_range(1usize..8);
            let mut m = Gf2Matrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, rng.gen::<bool>() as u8);
                }
            }
            let x0 = BitString::from_u64(cols as u32, rng.gen::<u64>() & ((1 << cols) - 1));
            let b = m.mul_vec(&x0);
            let x = m.solve(&b).unwrap().expect("consistent by construction");
            assert_eq!(m.mul_vec(&x), b);
        }
    }

    #[test]
    fn field_examples_gf8() {
        // GF(2^3) mod x^3+x+1: x * x = x^2, x^2 * x = x + 1, a * 1 = a.
        let x = FieldElem::new(3, 0b010);
        let x2 = FieldElem::new(3, 0b100);
        assert_eq!(field_mul(&x, &x).unwrap(), x2);
        assert_eq!(field_mul(&x2, &x).unwrap(), FieldElem::new(3, 0b011));
        for c in 0..8 {
            let a = FieldElem::new(3, c);
            assert_eq!(field_mul(&a, &FieldElem::one(3)).unwrap(), a);
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for degree in [2u32, 3, 4] {
            let q = 1u32 << degree;
            for a in 0..q {
                let fa = FieldElem::new(degree, a);
                if a != 0 {
                    let inv = fa.inverse().unwrap();
                    assert_eq!(fa.mul(&inv).unwrap(), FieldElem::one(degree));
                }
                for b in 0..q {
                    let fb = FieldElem::new(degree, b);
                    assert_eq!(fa.mul(&fb).unwrap(), fb.mul(&fa).unwrap());
                    for c in 0..q {
                        let fc = FieldElem::new(degree, c);
                        // Associativity and distributivity over xor.
                        assert_eq!(
                            fa.mul(&fb).unwrap().mul(&fc).unwrap(),
                            fa.mul(&fb.mul(&fc).unwrap()).unwrap()
                        );
                        assert_eq!(
                            fa.mul(&fb.add(&fc).unwrap()).unwrap(),
                            fa.mul(&fb).unwrap().add(&fa.mul(&fc).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn moduli_are_irreducible() {
        for degree in 1..=MAX_FIELD_DEGREE {
            let m = field_modulus(degree);
            assert!(m >> degree == 1, "degree-{degree} modulus has wrong degree");
            assert!(
                is_irreducible(m, degree),
                "modulus for degree {degree} reducible"
            );
        }
        assert_eq!(field_modulus(3), 0b1011);
        assert_eq!(field_modulus(4), 0b1_0011);
        assert_eq!(field_modulus(8), 0b1_0001_1011);
    }

    #[test]
    fn affine_enumerate_examples() {
        // dim 0 -> just the offset.
        let v = BitString::parse_binary("101").unwrap();
        let pts = affine_enumerate(&AffineSubspace::point(v)).unwrap();
        assert_eq!(pts, vec![v]);

        // basis {100, 010}, offset 001 -> {001, 101, 011, 111}.
        let s = AffineSubspace::new(
            vec![
                BitString::parse_binary("100").unwrap(),
                BitString::parse_binary("010").unwrap(),
            ],
            BitString::parse_binary("001").unwrap(),
        )
        .unwrap();
        let mut got: Vec<String> = affine_enumerate(&s)
            .unwrap()
            .iter()
            .map(|p| p.to_string())
            .collect();
        got.sort();
        assert_eq!(got, vec!["001", "011", "101", "111"]);

        // dim k -> 2^k distinct points.
        let full = AffineSubspace::full(5);
        let pts = affine_enumerate(&full).unwrap();
        assert_eq!(pts.len(), 32);
        let set: std::collections::BTreeSet<_> = pts.iter().collect();
        assert_eq!(set.len(), 32);
    }

    #[test]
    fn affine_pair_differences_in_span() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 6u32;
            let dim = rng.gen_range(1usize..4);
            // Build a random independent basis by rejection.
            let mut basis: Vec<BitString> = Vec::new();
            while basis.len() < dim {
                let cand = BitString::from_u64(n, rng.gen::<u64>() & 63);
                let mut rows = basis.clone();
                rows.push(cand);
                if Gf2Matrix::from_rows(&rows).rank() == basis.len() + 1 {
                    basis.push(cand);
                }
            }
            let offset = BitString::from_u64(n, rng.gen::<u64>() & 63);
            let s = AffineSubspace::new(basis.clone(), offset).unwrap();
            let pts = affine_enumerate(&s).unwrap();
            let span_rank = Gf2Matrix::from_rows(&basis).rank();
            for u in &pts {
                for v in &pts {
                    let d = u.xor(v);
                    let mut rows = basis.clone();
                    rows.push(d);
                    assert_eq!(Gf2Matrix::from_rows(&rows).rank(), span_rank);
                }
            }
        }
    }

    #[test]
    fn budget_enforced() {
        let s = AffineSubspace::full(26);
        assert!(s.enumerate().is_err());
    }

    #[test]
    fn subspace_enumeration_counts() {
        // n = k: exactly one subspace (the full space), offset 0.
        let (all, trunc) = enumerate_affine_subspaces(4, 4, None).unwrap();
        assert!(!trunc);
        assert_eq!(all.len(), 1);

        // k = 0: 2^n point sources.
        let (pts, _) = enumerate_affine_subspaces(3, 0, None).unwrap();
        assert_eq!(pts.len(), 8);

        // n=3, k=2: 7 linear subspaces (offset 0), 14 affine total.
        let (all, _) = enumerate_affine_subspaces(3, 2, None).unwrap();
        assert_eq!(all.len(), 14);
        let zero_offset = all.iter().filter(|s| s.offset().raw() == 0).count();
        assert_eq!(zero_offset, 7);
        assert_eq!(gaussian_binomial_2(3, 2), 7);

        // Cross-check: the enumeration is duplicate-free as point sets.
        let mut seen = std::collections::BTreeSet::new();
        for s in &all {
            let mut pts: Vec<u128> = s.enumerate().unwrap().map(|p| p.raw()).collect();
            pts.sort_unstable();
            assert!(seen.insert(pts), "duplicate subspace");
        }
        // Count matches [n,k]_2 * 2^(n-k).
        assert_eq!(all.len() as u128, gaussian_binomial_2(3, 2) * 2);
    }
}
