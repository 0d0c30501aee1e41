//! Bit-packed GF(2) vectors and matrices.
//!
//! Coefficients are packed 64 to a word, least significant bit first, so the
//! coefficient at 1-based position `i` lives in word `(i - 1) / 64` at bit
//! `(i - 1) % 64`. Unused high bits of the last word are always zero.
//!
//! Every public index is 1-based, matching the row/column numbering used by
//! the progressive decoder. The `pub(crate)` accessors taking `row0`/`col0`
//! are 0-based and exist for the hot loops in [`crate::codecs`].

use thiserror::Error;

const WORD_BITS: usize = 64;

/// Upper bound on the generation size accepted by the codecs unless a
/// different limit is passed explicitly.
pub const DEFAULT_MAX_GENERATION: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("invalid dimension: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid index {index}: valid range is 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn check_index(index: usize, len: usize) -> Result<usize, Gf2Error> {
    if index == 0 || index > len {
        Err(Gf2Error::IndexOutOfRange { index, len })
    } else {
        Ok(index - 1)
    }
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

/// One row of a decoding matrix: the binary coefficients of a packet.
pub type CodingVector = BitVector;

impl BitVector {
    /// All-zero vector of `len` coefficients.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    /// The standard basis vector with a single one at 1-based `index`.
    pub fn unit(len: usize, index: usize) -> Result<Self, Gf2Error> {
        let mut v = Self::zeros(len);
        v.set(index, true)?;
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            v.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        }
        v
    }

    /// Builds a vector from 0/1 coefficients; any nonzero entry counts as one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let bools: Vec<bool> = bits.iter().map(|&b| b != 0).collect();
        Self::from_bools(&bools)
    }

    /// Builds a vector from packed words, clearing bits past `len`.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, index: usize) -> Result<bool, Gf2Error> {
        let i = check_index(index, self.len)?;
        Ok(self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1)
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<(), Gf2Error> {
        let i = check_index(index, self.len)?;
        let bit = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= bit;
        } else {
            self.words[i / WORD_BITS] &= !bit;
        }
        Ok(())
    }

    /// Hamming weight.
    pub fn degree(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// 1-based position of the first one, `None` for the zero vector.
    pub fn leftmost_one(&self) -> Option<usize> {
        leftmost_in_words(&self.words).map(|i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        xor_words(&mut self.words, &other.words);
        Ok(())
    }

    /// Elementwise AND, used for overlap counts.
    pub fn and(&self, other: &BitVector) -> Result<BitVector, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Ok(BitVector {
            words,
            len: self.len,
        })
    }

    /// Clears every coefficient set in `mask`.
    pub fn clear_mask(&mut self, mask: &BitVector) -> Result<(), Gf2Error> {
        if self.len != mask.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: mask.len,
            });
        }
        for (w, m) in self.words.iter_mut().zip(&mask.words) {
            *w &= !m;
        }
        Ok(())
    }

    /// 1-based positions of the ones, ascending.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len)
            .map(|i| self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1)
            .collect()
    }
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("[")?;
        for b in self.to_bools() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// Iterator over the 1-based positions of the ones in a [`BitVector`].
pub struct Ones<'a> {
    words: &'a [u64],
    word: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word * WORD_BITS + bit + 1);
            }
            self.word += 1;
            self.current = *self.words.get(self.word)?;
        }
    }
}

/// Number of ones in `v`.
pub fn degree(v: &CodingVector) -> usize {
    v.degree()
}

/// 1-based position of the first one in `v`, or `None` for the zero vector.
pub fn leftmost_one(v: &CodingVector) -> Option<usize> {
    v.leftmost_one()
}

/// `a ⊕ b`.
pub fn xor_rows(a: &CodingVector, b: &CodingVector) -> Result<CodingVector, Gf2Error> {
    let mut out = a.clone();
    out.xor_assign(b)?;
    Ok(out)
}

#[inline]
pub(crate) fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// XORs `src` into `dst`.
#[inline]
pub fn xor_bytes(dst: &mut [u8], src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    // Plain byte loop; the compiler turns it into vector XORs.
    for (a, b) in dst.iter_mut().zip(src) {
        *a ^= b;
    }
}

#[inline]
fn leftmost_in_words(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * WORD_BITS + w.trailing_zeros() as usize)
}

/// A dense row-major matrix over GF(2) with rows stored contiguously.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    words: Vec<u64>,
    rows: usize,
    cols: usize,
    stride: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            words: vec![0; rows * stride],
            rows,
            cols,
            stride,
        }
    }

    pub fn from_rows(rows: &[BitVector], cols: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(0, cols);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn push_row(&mut self, row: &BitVector) -> Result<(), Gf2Error> {
        if row.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        self.words.extend_from_slice(&row.words);
        self.rows += 1;
        Ok(())
    }

    /// Keeps the first `rows` rows.
    pub fn truncate(&mut self, rows: usize) {
        if rows < self.rows {
            self.rows = rows;
            self.words.truncate(rows * self.stride);
        }
    }

    /// Copy of 1-based row `i`.
    pub fn row(&self, i: usize) -> Result<BitVector, Gf2Error> {
        let r = check_index(i, self.rows)?;
        Ok(BitVector {
            words: self.row_words(r).to_vec(),
            len: self.cols,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = BitVector> + '_ {
        (0..self.rows).map(|r| BitVector {
            words: self.row_words(r).to_vec(),
            len: self.cols,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Result<bool, Gf2Error> {
        let r = check_index(i, self.rows)?;
        let c = check_index(j, self.cols)?;
        Ok(self.bit(r, c))
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) -> Result<(), Gf2Error> {
        let r = check_index(i, self.rows)?;
        let c = check_index(j, self.cols)?;
        self.set_bit(r, c, value);
        Ok(())
    }

    /// Exchanges 1-based rows `i` and `j`.
    pub fn swap_rows(&mut self, i: usize, j: usize) -> Result<(), Gf2Error> {
        let a = check_index(i, self.rows)?;
        let b = check_index(j, self.rows)?;
        self.swap0(a, b);
        Ok(())
    }

    /// `row[dst] ← row[dst] ⊕ row[src]` for 1-based indices.
    pub fn xor_row_into(&mut self, dst: usize, src: usize) -> Result<(), Gf2Error> {
        let d = check_index(dst, self.rows)?;
        let s = check_index(src, self.rows)?;
        if d == s {
            self.row_words_mut(d).fill(0);
        } else {
            self.xor0(d, s);
        }
        Ok(())
    }

    pub fn row_degree(&self, i: usize) -> Result<usize, Gf2Error> {
        let r = check_index(i, self.rows)?;
        Ok(self.degree0(r))
    }

    pub fn row_leftmost_one(&self, i: usize) -> Result<Option<usize>, Gf2Error> {
        let r = check_index(i, self.rows)?;
        Ok(self.leftmost0(r).map(|c| c + 1))
    }

    // 0-based internals.

    #[inline]
    pub(crate) fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn bit(&self, r: usize, c: usize) -> bool {
        self.words[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_bit(&mut self, r: usize, c: usize, value: bool) {
        let w = &mut self.words[r * self.stride + c / WORD_BITS];
        let bit = 1u64 << (c % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Rows among the first `rows` with column `c` set, ascending, into `out`.
    #[inline]
    pub(crate) fn rows_with_bit0(&self, c: usize, rows: usize, out: &mut Vec<usize>) {
        out.clear();
        let (w, mask) = (c / WORD_BITS, 1u64 << (c % WORD_BITS));
        let words = &self.words[..rows * self.stride];
        out.extend(
            words
                .chunks_exact(self.stride)
                .enumerate()
                .filter(|(_, row)| row[w] & mask != 0)
                .map(|(r, _)| r),
        );
    }

    /// First column after `c` set in both row `r` and `mask`.
    #[inline]
    pub(crate) fn first_masked_after0(&self, r: usize, mask: &[u64], c: usize) -> Option<usize> {
        let row = self.row_words(r);
        let start = (c + 1) / WORD_BITS;
        (start..self.stride).find_map(|w| {
            let mut x = row[w] & mask[w];
            if w == start {
                x &= u64::MAX
                    .checked_shl(((c + 1) % WORD_BITS) as u32)
                    .unwrap_or(0);
            }
            (x != 0).then(|| w * WORD_BITS + x.trailing_zeros() as usize)
        })
    }

    #[inline]
    pub(crate) fn degree0(&self, r: usize) -> usize {
        self.row_words(r)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    #[inline]
    pub(crate) fn leftmost0(&self, r: usize) -> Option<usize> {
        leftmost_in_words(self.row_words(r))
    }

    #[inline]
    pub(crate) fn swap0(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let s = self.stride;
        let (head, tail) = self.words.split_at_mut(hi * s);
        head[lo * s..(lo + 1) * s].swap_with_slice(&mut tail[..s]);
    }

    /// `row[dst] ^= row[src]`, `dst != src`.
    #[inline]
    pub(crate) fn xor0(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        if dst < src {
            let (head, tail) = self.words.split_at_mut(src * s);
            xor_words(&mut head[dst * s..(dst + 1) * s], &tail[..s]);
        } else {
            let (head, tail) = self.words.split_at_mut(dst * s);
            xor_words(&mut tail[..s], &head[src * s..(src + 1) * s]);
        }
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(bits: &[u8]) -> BitVector {
        BitVector::from_bits(bits)
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree(&v(&[0, 1, 1])), 2);
        assert_eq!(degree(&v(&[0, 0, 0])), 0);
        assert_eq!(degree(&v(&[1, 1, 1, 1])), 4);
    }

    #[test]
    fn leftmost_one_examples() {
        assert_eq!(leftmost_one(&v(&[0, 0, 1])), Some(3));
        assert_eq!(leftmost_one(&v(&[1, 0, 1])), Some(1));
        assert_eq!(leftmost_one(&v(&[0, 0, 0])), None);
    }

    #[test]
    fn xor_examples() {
        assert_eq!(
            xor_rows(&v(&[1, 1, 0]), &v(&[0, 1, 1])).unwrap(),
            v(&[1, 0, 1])
        );
        let a = v(&[1, 0, 1, 1]);
        assert!(xor_rows(&a, &a).unwrap().is_zero());
        assert_eq!(xor_rows(&a, &BitVector::zeros(4)).unwrap(), a);
    }

    #[test]
    fn xor_length_mismatch() {
        let err = xor_rows(&v(&[1, 0]), &v(&[1, 0, 1])).unwrap_err();
        assert_eq!(
            err,
            Gf2Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn swap_examples() {
        let a = v(&[1, 0, 0]);
        let b = v(&[0, 1, 1]);
        let mut m = BitMatrix::from_rows(&[a.clone(), b.clone()], 3).unwrap();
        let orig = m.clone();
        m.swap_rows(1, 1).unwrap();
        assert_eq!(m, orig);
        m.swap_rows(1, 2).unwrap();
        assert_eq!(m.row(1).unwrap(), b);
        assert_eq!(m.row(2).unwrap(), a);
        m.swap_rows(1, 2).unwrap();
        assert_eq!(m, orig);
    }

    #[test]
    fn swap_out_of_range() {
        let mut m = BitMatrix::zeros(2, 3);
        assert_eq!(
            m.swap_rows(0, 1),
            Err(Gf2Error::IndexOutOfRange { index: 0, len: 2 })
        );
        assert_eq!(
            m.swap_rows(1, 3),
            Err(Gf2Error::IndexOutOfRange { index: 3, len: 2 })
        );
    }

    #[test]
    fn multiword_rows() {
        let mut a = BitVector::zeros(130);
        a.set(130, true).unwrap();
        a.set(65, true).unwrap();
        assert_eq!(a.leftmost_one(), Some(65));
        assert_eq!(a.ones().collect::<Vec<_>>(), vec![65, 130]);
        let mut m =
            BitMatrix::from_rows(&[a.clone(), BitVector::unit(130, 64).unwrap()], 130).unwrap();
        m.xor_row_into(2, 1).unwrap();
        assert_eq!(m.row_degree(2).unwrap(), 3);
        assert_eq!(m.row_leftmost_one(2).unwrap(), Some(64));
        assert!(m.get(2, 130).unwrap());
    }

    #[test]
    fn from_words_masks_tail() {
        let v = BitVector::from_words(vec![u64::MAX], 3);
        assert_eq!(v.degree(), 3);
    }

    #[test]
    fn xor_bytes_matches_naive() {
        let a: Vec<u8> = (0..37).collect();
        let b: Vec<u8> = (0..37).map(|x| x * 7 + 3).collect();
        let mut c = a.clone();
        xor_bytes(&mut c, &b);
        let naive: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert_eq!(c, naive);
    }

    fn vec_pair(max: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<bool>)> {
        (1..=max).prop_flat_map(|k| {
            (
                prop::collection::vec(any::<bool>(), k),
                prop::collection::vec(any::<bool>(), k),
                prop::collection::vec(any::<bool>(), k),
            )
        })
    }

    proptest! {
        #[test]
        fn xor_is_assoc_comm_self_inverse((a, b, c) in vec_pair(200)) {
            let (a, b, c) = (BitVector::from_bools(&a), BitVector::from_bools(&b), BitVector::from_bools(&c));
            let ab = xor_rows(&a, &b).unwrap();
            prop_assert_eq!(&ab, &xor_rows(&b, &a).unwrap());
            prop_assert_eq!(
                xor_rows(&ab, &c).unwrap(),
                xor_rows(&a, &xor_rows(&b, &c).unwrap()).unwrap()
            );
            prop_assert_eq!(xor_rows(&ab, &b).unwrap(), a);
        }

        #[test]
        fn degree_of_xor((a, b, _) in vec_pair(200)) {
            let (a, b) = (BitVector::from_bools(&a), BitVector::from_bools(&b));
            let overlap = a.and(&b).unwrap().degree();
            prop_assert_eq!(xor_rows(&a, &b).unwrap().degree(), a.degree() + b.degree() - 2 * overlap);
        }

        #[test]
        fn leftmost_one_is_first_set_bit(bits in prop::collection::vec(any::<bool>(), 1..200)) {
            let v = BitVector::from_bools(&bits);
            match v.leftmost_one() {
                Some(i) => {
                    prop_assert!(bits[i - 1]);
                    prop_assert!(bits[..i - 1].iter().all(|b| !b));
                }
                None => prop_assert!(bits.iter().all(|b| !b)),
            }
        }

        #[test]
        fn packed_matches_unpacked(bits in prop::collection::vec(any::<bool>(), 1..=256)) {
            let v = BitVector::from_bools(&bits);
            prop_assert_eq!(v.len(), bits.len());
            prop_assert_eq!(v.to_bools(), bits.clone());
            prop_assert_eq!(v.degree(), bits.iter().filter(|b| **b).count());
            for (i, b) in bits.iter().enumerate() {
                prop_assert_eq!(v.get(i + 1).unwrap(), *b);
            }
            let ones: Vec<usize> = bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i + 1).collect();
            prop_assert_eq!(v.ones().collect::<Vec<_>>(), ones);
        }
    }
}
