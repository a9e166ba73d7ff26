//! Bit-packed F2 linear algebra: 64 columns per machine word.
//!
//! This is the workhorse behind subspace canonical forms, parity-check
//! ranks and kernels, and every other F2 elimination in the crate. Rows
//! are kept in fully reduced echelon form where it matters, so inserting
//! a sparse row into a large system stays cheap.

/// Dense bit matrix, rows packed into u64 words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMat {
    pub rows: usize,
    pub cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMat {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String =
                (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

impl BitMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        let words = (cols + 63) / 64;
        BitMat { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows_u64(cols: usize, rows: &[u64]) -> Self {
        assert!(cols <= 64);
        let mut m = Self::zero(rows.len(), cols);
        for (i, &r) in rows.iter().enumerate() {
            m.data[i] = r;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_bits(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(r, c)).collect()
    }

    #[inline]
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        let (a, b) = (src * self.words, dst * self.words);
        for w in 0..self.words {
            let v = self.data[a + w];
            self.data[b + w] ^= v;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.words {
            self.data.swap(a * self.words + w, b * self.words + w);
        }
    }

    /// Reduced row echelon form in place; returns pivot columns in order.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(p, row);
            for r in 0..self.rows {
                if r != row && self.get(r, col) {
                    self.xor_row_into(row, r);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    /// Right kernel basis as row vectors of length `cols`.
    pub fn kernel_basis(&self) -> BitMat {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut out = BitMat::zero(free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            out.set(i, fc, true);
            for (r, &p) in pivots.iter().enumerate() {
                if m.get(r, fc) {
                    out.set(i, p, true);
                }
            }
        }
        out
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &BitMat) -> BitMat {
        assert_eq!(self.cols, other.cols);
        let mut m = BitMat::zero(self.rows + other.rows, self.cols);
        m.data[..self.rows * self.words].copy_from_slice(&self.data);
        m.data[self.rows * self.words..].copy_from_slice(&other.data);
        m
    }

    pub fn transpose(&self) -> BitMat {
        let mut out = BitMat::zero(self.cols, self.rows);
        for r in 0..self.rows {
            let base = r * self.words;
            for w in 0..self.words {
                let mut v = self.data[base + w];
                while v != 0 {
                    let c = w * 64 + v.trailing_zeros() as usize;
                    out.set(c, r, true);
                    v &= v - 1;
                }
            }
        }
        out
    }

    /// Matrix product over F2.
    pub fn matmul(&self, other: &BitMat) -> BitMat {
        assert_eq!(self.cols, other.rows);
        let mut out = BitMat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            let base = r * self.words;
            for w in 0..self.words {
                let mut v = self.data[base + w];
                while v != 0 {
                    let k = w * 64 + v.trailing_zeros() as usize;
                    for ow in 0..out.words {
                        let x = other.data[k * other.words + ow];
                        out.data[r * out.words + ow] ^= x;
                    }
                    v &= v - 1;
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }
}

/// Incrementally maintained reduced echelon basis of a subspace of F2^n.
///
/// Rows are fully reduced against each other, so each stored row has its
/// pivot bit plus support only on non-pivot columns. Inserting a row costs
/// one XOR per pivot it touches, which keeps million-row sparse systems
/// (e.g. weight-3 parity checks) fast.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub cols: usize,
    words: usize,
    /// pivot column -> index into `rows`
    pivot_of_col: Vec<Option<u32>>,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(cols: usize) -> Self {
        Echelon {
            cols,
            words: (cols + 63) / 64,
            pivot_of_col: vec![None; cols],
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn leading(&self, v: &[u64]) -> Option<usize> {
        for (w, &x) in v.iter().enumerate() {
            if x != 0 {
                let c = w * 64 + x.trailing_zeros() as usize;
                if c < self.cols {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Reduce `v` against the stored rows in place; afterwards `v` has no
    /// support on pivot columns (it is the canonical coset representative).
    ///
    /// Stored rows are fully reduced, so each XOR clears one pivot bit and
    /// toggles only free columns: a single left-to-right pass suffices.
    pub fn reduce(&self, v: &mut [u64]) {
        for w in 0..self.words {
            let mut x = v[w];
            while x != 0 {
                let bit = x.trailing_zeros() as usize;
                let c = w * 64 + bit;
                x &= x - 1;
                if c >= self.cols {
                    break;
                }
                if let Some(r) = self.pivot_of_col[c] {
                    let row = &self.rows[r as usize];
                    for (vw, rw) in v.iter_mut().zip(row) {
                        *vw ^= rw;
                    }
                    // Bits above `bit` in this word may have been toggled at
                    // free columns only; re-snapshot to stay in sync.
                    let mask = if bit == 63 { 0 } else { !0u64 << (bit + 1) };
                    x = v[w] & mask;
                }
            }
        }
    }

    /// Insert a row; returns true if it increased the rank.
    pub fn insert(&mut self, mut v: Vec<u64>) -> bool {
        self.reduce(&mut v);
        let Some(c) = self.leading(&v) else { return false };
        debug_assert!(self.pivot_of_col[c].is_none());
        // Eliminate the new pivot column from all existing rows.
        let widx = c / 64;
        let mask = 1u64 << (c % 64);
        for r in 0..self.rows.len() {
            if self.rows[r][widx] & mask != 0 {
                for w in 0..self.words {
                    let x = v[w];
                    self.rows[r][w] ^= x;
                }
            }
        }
        self.pivot_of_col[c] = Some(self.rows.len() as u32);
        self.rows.push(v);
        self.pivots.push(c);
        true
    }

    pub fn insert_bits(&mut self, bits: &[usize]) -> bool {
        let mut v = vec![0u64; self.words];
        for &b in bits {
            v[b / 64] ^= 1 << (b % 64);
        }
        self.insert(v)
    }

    /// Does `v` lie in the span?
    pub fn contains(&self, v: &[u64]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&x| x == 0)
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn basis_rows(&self) -> &[Vec<u64>] {
        &self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_rank() {
        let m = BitMat::from_rows_u64(3, &[0b011, 0b101, 0b110]);
        assert_eq!(m.rank(), 2);
        let id = BitMat::identity(5);
        assert_eq!(id.rank(), 5);
        assert!(id.kernel_basis().rows == 0);
    }

    #[test]
    fn kernel_is_kernel() {
        let m = BitMat::from_rows_u64(5, &[0b00111, 0b01010, 0b11000]);
        let k = m.kernel_basis();
        assert_eq!(k.rows, 5 - m.rank());
        // each kernel row, as a column vector, is annihilated by m
        for i in 0..k.rows {
            for r in 0..m.rows {
                let dot = (m.data[r] & k.data[i]).count_ones() % 2;
                assert_eq!(dot, 0);
            }
        }
    }

    #[test]
    fn echelon_matches_batch_rref() {
        let rows = [0b0011u64, 0b0110, 0b0101, 0b1001, 0b1111];
        let mut ech = Echelon::new(4);
        for &r in &rows {
            ech.insert(vec![r]);
        }
        let m = BitMat::from_rows_u64(4, &rows);
        assert_eq!(ech.rank(), m.rank());
        // membership agrees
        for probe in 0..16u64 {
            let member = {
                let stacked = m.stack(&BitMat::from_rows_u64(4, &[probe]));
                stacked.rank() == m.rank()
            };
            assert_eq!(ech.contains(&[probe]), member, "probe {probe:04b}");
        }
    }

    #[test]
    fn echelon_sparse_insert() {
        let mut ech = Echelon::new(200);
        assert!(ech.insert_bits(&[3, 7, 100]));
        assert!(ech.insert_bits(&[3, 7, 101]));
        assert!(!ech.insert_bits(&[100, 101]));
        assert_eq!(ech.rank(), 2);
    }

    #[test]
    fn matmul_transpose() {
        let a = BitMat::from_rows_u64(3, &[0b011, 0b101, 0b111]);
        let at = a.transpose();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(a.get(r, c), at.get(c, r));
            }
        }
        let prod = a.matmul(&BitMat::identity(3));
        assert_eq!(prod, a);
    }
}
