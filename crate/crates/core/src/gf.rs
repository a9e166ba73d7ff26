//! Exact arithmetic and linear algebra over GF(2^b).
//!
//! Field elements are integers in `[0, q)` interpreted as polynomials over
//! F2 modulo a fixed irreducible reduction polynomial. Addition is XOR;
//! multiplication goes through log/antilog tables built once per field.
//! Matrices are dense row-major; rank, kernels and subspace intersections
//! use in-place Gaussian elimination with first-nonzero pivots.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::HdxError;

/// Multiplication tables shared by all handles onto one field.
#[derive(Debug)]
struct FieldTables {
    log: Vec<u16>,
    alog: Vec<u16>,
}

/// GF(2^b) with a fixed degree-b irreducible reduction polynomial.
#[derive(Clone)]
pub struct FieldSpec {
    b: u32,
    q: u32,
    reduction_poly: u32,
    tables: Option<Arc<FieldTables>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec(b={}, poly={:#x})", self.b, self.reduction_poly)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.b == other.b && self.reduction_poly == other.reduction_poly
    }
}
impl Eq for FieldSpec {}

/// Degree of a nonzero F2 polynomial given as a bitmask.
fn poly_degree(p: u32) -> u32 {
    31 - p.leading_zeros()
}

/// Carry-less product of two F2 polynomials.
fn poly_mul(a: u64, b: u64) -> u64 {
    let mut out = 0u64;
    let mut a = a;
    let mut shift = 0;
    while a != 0 {
        if a & 1 == 1 {
            out ^= b << shift;
        }
        a >>= 1;
        shift += 1;
    }
    out
}

/// Remainder of `a` modulo `m` over F2.
fn poly_rem(mut a: u64, m: u64) -> u64 {
    let dm = 63 - m.leading_zeros();
    while a >> dm != 0 {
        let da = 63 - a.leading_zeros();
        a ^= m << (da - dm);
    }
    a
}

/// Irreducibility over F2 by trial division up to degree b/2.
fn poly_irreducible(p: u32) -> bool {
    let d = poly_degree(p);
    if d == 0 {
        return false;
    }
    for f in 2u32..1 << (d / 2 + 1) {
        if poly_degree(f) > d / 2 {
            break;
        }
        if poly_rem(p as u64, f as u64) == 0 {
            return false;
        }
    }
    true
}

/// Lexicographically smallest irreducible polynomial of degree b. The
/// constant term must be nonzero so that x is invertible in the quotient
/// (and by convention for b = 1, giving x+1 rather than x).
fn canonical_poly(b: u32) -> u32 {
    let lo = 1u32 << b;
    let hi = 1u32 << (b + 1);
    for p in (lo | 1..hi).step_by(2) {
        if poly_irreducible(p) {
            return p;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

impl FieldSpec {
    /// The field GF(2^b) with the canonical (lexicographically smallest)
    /// irreducible reduction polynomial.
    pub fn new(b: u32) -> Result<Self, HdxError> {
        if b == 0 || b > 16 {
            return Err(HdxError::Field(format!("extension degree {b} out of range 1..=16")));
        }
        Self::with_poly(b, canonical_poly(b))
    }

    /// GF(2^b) with an explicit reduction polynomial.
    pub fn with_poly(b: u32, reduction_poly: u32) -> Result<Self, HdxError> {
        if b == 0 || b > 16 {
            return Err(HdxError::Field(format!("extension degree {b} out of range 1..=16")));
        }
        if poly_degree(reduction_poly) != b {
            return Err(HdxError::Field(format!(
                "reduction polynomial {reduction_poly:#x} does not have degree {b}"
            )));
        }
        if !poly_irreducible(reduction_poly) {
            return Err(HdxError::Field(format!(
                "reduction polynomial {reduction_poly:#x} is reducible"
            )));
        }
        let q = 1u32 << b;
        let tables = if b > 1 {
            // x is a generator iff its order is q-1; for the small fields in
            // scope we search for a generator among all elements.
            let mut gen = 2u32;
            'outer: loop {
                let mut seen = vec![false; q as usize];
                let mut x = 1u64;
                for _ in 0..q - 1 {
                    if seen[x as usize] {
                        gen += 1;
                        continue 'outer;
                    }
                    seen[x as usize] = true;
                    x = poly_rem(poly_mul(x, gen as u64), reduction_poly as u64);
                }
                break;
            }
            let mut log = vec![0u16; q as usize];
            let mut alog = vec![0u16; 2 * (q as usize - 1)];
            let mut x = 1u64;
            for i in 0..(q - 1) as usize {
                alog[i] = x as u16;
                alog[i + (q as usize - 1)] = x as u16;
                log[x as usize] = i as u16;
                x = poly_rem(poly_mul(x, gen as u64), reduction_poly as u64);
            }
            Some(Arc::new(FieldTables { log, alog }))
        } else {
            None
        };
        Ok(FieldSpec { b, q, reduction_poly, tables })
    }

    pub fn b(&self) -> u32 {
        self.b
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn reduction_poly(&self) -> u32 {
        self.reduction_poly
    }

    /// Addition (= subtraction) in characteristic 2.
    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        match &self.tables {
            None => a & b,
            Some(t) => t.alog[t.log[a as usize] as usize + t.log[b as usize] as usize],
        }
    }

    pub fn inv(&self, a: u16) -> Result<u16, HdxError> {
        if a == 0 {
            return Err(HdxError::Field("inverse of zero".into()));
        }
        match &self.tables {
            None => Ok(1),
            Some(t) => {
                let qm1 = (self.q - 1) as usize;
                Ok(t.alog[(qm1 - t.log[a as usize] as usize) % qm1])
            }
        }
    }

    /// Iterator over all field elements.
    pub fn elements(&self) -> impl Iterator<Item = u16> {
        0..self.q as u16
    }
}

/// Product in GF(2^b); the free-function form used throughout.
pub fn gf_mul(field: &FieldSpec, a: u16, b: u16) -> u16 {
    field.mul(a, b)
}

pub fn gf_inv(field: &FieldSpec, a: u16) -> Result<u16, HdxError> {
    field.inv(a)
}

/// Vector over GF(2^b).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFVector {
    pub field: FieldSpec,
    pub entries: Vec<u16>,
}

impl GFVector {
    pub fn new(field: FieldSpec, entries: Vec<u16>) -> Self {
        debug_assert!(entries.iter().all(|&e| (e as u32) < field.q()));
        GFVector { field, entries }
    }

    pub fn zero(field: FieldSpec, n: usize) -> Self {
        GFVector { field, entries: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn dot(&self, other: &GFVector) -> u16 {
        debug_assert_eq!(self.len(), other.len());
        let f = &self.field;
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0u16, |acc, (&a, &b)| acc ^ f.mul(a, b))
    }

    /// Lowercase hex, little-endian bit order (bit 0 = coordinate 0).
    /// Only meaningful over F2.
    pub fn to_hex(&self) -> String {
        let nbytes = (self.entries.len() + 7) / 8;
        let mut bytes = vec![0u8; nbytes];
        for (i, &e) in self.entries.iter().enumerate() {
            if e != 0 {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(field: FieldSpec, hex: &str, len: usize) -> Result<Self, HdxError> {
        if field.b() != 1 {
            return Err(HdxError::Field("hex vectors are F2-only".into()));
        }
        let mut entries = vec![0u16; len];
        for (i, entry) in entries.iter_mut().enumerate() {
            let byte = hex
                .get(2 * (i / 8)..2 * (i / 8) + 2)
                .and_then(|s| u8::from_str_radix(s, 16).ok())
                .ok_or_else(|| HdxError::Field(format!("bad hex vector {hex:?}")))?;
            *entry = ((byte >> (i % 8)) & 1) as u16;
        }
        Ok(GFVector { field, entries })
    }
}

/// Dense row-major matrix over GF(2^b).
#[derive(Clone, PartialEq, Eq)]
pub struct GFMatrix {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<u16>,
}

impl fmt::Debug for GFMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GFMatrix {}x{} over GF({})", self.rows, self.cols, self.field.q())?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.entries[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GFMatrixWire {
    b: u32,
    rows: usize,
    cols: usize,
    entries: Vec<u16>,
}

impl Serialize for GFMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GFMatrixWire {
            b: self.field.b(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GFMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = GFMatrixWire::deserialize(d)?;
        let field = FieldSpec::new(w.b).map_err(serde::de::Error::custom)?;
        if w.entries.len() != w.rows * w.cols {
            return Err(serde::de::Error::custom("entry count mismatch"));
        }
        Ok(GFMatrix { field, rows: w.rows, cols: w.cols, entries: w.entries })
    }
}

impl GFMatrix {
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> Self {
        GFMatrix { field, rows, cols, entries: vec![0; rows * cols] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(field: FieldSpec, rows: &[Vec<u16>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            entries.extend_from_slice(row);
        }
        GFMatrix { field, rows: r, cols: c, entries }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u16 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u16) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> GFVector {
        GFVector::new(self.field.clone(), self.entries[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn col(&self, c: usize) -> GFVector {
        GFVector::new(self.field.clone(), (0..self.rows).map(|r| self.get(r, c)).collect())
    }

    pub fn add(&self, other: &GFMatrix) -> Result<GFMatrix, HdxError> {
        if self.rows != other.rows || self.cols != other.cols || self.field != other.field {
            return Err(HdxError::Dimension(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| a ^ b).collect();
        Ok(GFMatrix { field: self.field.clone(), rows: self.rows, cols: self.cols, entries })
    }

    pub fn matmul(&self, other: &GFMatrix) -> Result<GFMatrix, HdxError> {
        if self.cols != other.rows || self.field != other.field {
            return Err(HdxError::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = GFMatrix::zero(self.field.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.mul(a, other.get(k, j));
                    out.entries[i * other.cols + j] ^= v;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &GFVector) -> Result<GFVector, HdxError> {
        if self.cols != v.len() {
            return Err(HdxError::Dimension("matvec length mismatch".into()));
        }
        let f = &self.field;
        let mut out = vec![0u16; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0u16;
            for k in 0..self.cols {
                acc ^= f.mul(self.get(i, k), v.entries[k]);
            }
            *o = acc;
        }
        Ok(GFVector::new(self.field.clone(), out))
    }

    pub fn transpose(&self) -> GFMatrix {
        let mut out = GFMatrix::zero(self.field.clone(), self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            if p != row {
                for c in 0..self.cols {
                    self.entries.swap(p * self.cols + c, row * self.cols + c);
                }
            }
            let inv = f.inv(self.get(row, col)).expect("pivot nonzero");
            for c in 0..self.cols {
                let v = f.mul(inv, self.get(row, c));
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row {
                    let factor = self.get(r, col);
                    if factor != 0 {
                        for c in 0..self.cols {
                            let v = self.get(r, c) ^ f.mul(factor, self.get(row, c));
                            self.set(r, c, v);
                        }
                    }
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

    /// Basis of the right kernel { x : Mx = 0 }.
    pub fn kernel_basis(&self) -> Vec<GFVector> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let rank = pivots.len();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let f = &self.field;
        let mut basis = Vec::with_capacity(self.cols - rank);
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![0u16; self.cols];
            v[free] = 1;
            // Back-substitute pivot coordinates: x_p = sum over free cols.
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = f.mul(m.get(r, free), 1);
            }
            basis.push(GFVector::new(self.field.clone(), v));
        }
        basis
    }

    /// Basis of the row space in reduced echelon form.
    pub fn row_space_basis(&self) -> Vec<GFVector> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (0..pivots.len()).map(|r| m.row(r)).collect()
    }

    pub fn col_space_basis(&self) -> Vec<GFVector> {
        self.transpose().row_space_basis()
    }
}

/// Rank-<=1 matrix with entry (i, j) = u_i * v_j.
pub fn outer_product(u: &GFVector, v: &GFVector) -> Result<GFMatrix, HdxError> {
    if u.field != v.field {
        return Err(HdxError::Field("outer product of vectors over different fields".into()));
    }
    let f = &u.field;
    let mut out = GFMatrix::zero(u.field.clone(), u.len(), v.len());
    for i in 0..u.len() {
        for j in 0..v.len() {
            out.set(i, j, f.mul(u.entries[i], v.entries[j]));
        }
    }
    Ok(out)
}

/// Basis of the intersection of two subspaces given by bases, via the kernel
/// of the stacked-coefficient system: (x, y) with sum_i x_i a_i = sum_j y_j b_j.
pub fn intersect_subspaces(a: &[GFVector], b: &[GFVector]) -> Result<Vec<GFVector>, HdxError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let field = a[0].field.clone();
    let n = a[0].len();
    if a.iter().chain(b.iter()).any(|v| v.len() != n || v.field != field) {
        return Err(HdxError::Dimension("intersect: bases not over a common space".into()));
    }
    // Columns: coefficients of a-basis then b-basis; rows: ambient coordinates.
    let mut m = GFMatrix::zero(field.clone(), n, a.len() + b.len());
    for (j, v) in a.iter().enumerate() {
        for i in 0..n {
            m.set(i, j, v.entries[i]);
        }
    }
    for (j, v) in b.iter().enumerate() {
        for i in 0..n {
            m.set(i, a.len() + j, v.entries[i]);
        }
    }
    let ker = m.kernel_basis();
    let f = &field;
    let mut out = Vec::new();
    for kv in ker {
        let mut w = vec![0u16; n];
        for (j, v) in a.iter().enumerate() {
            let c = kv.entries[j];
            if c != 0 {
                for i in 0..n {
                    w[i] ^= f.mul(c, v.entries[i]);
                }
            }
        }
        let w = GFVector::new(field.clone(), w);
        if !w.is_zero() {
            out.push(w);
        }
    }
    // Reduce to an echelon basis (kernel vectors can produce dependent
    // combinations only when some lie entirely in one factor; be safe).
    if out.is_empty() {
        return Ok(out);
    }
    let rows: Vec<Vec<u16>> = out.iter().map(|v| v.entries.clone()).collect();
    let mat = GFMatrix::from_rows(field, &rows);
    Ok(mat.row_space_basis())
}

/// True iff `v` lies in the span of `basis`.
pub fn in_span(basis: &[GFVector], v: &GFVector) -> bool {
    if basis.is_empty() {
        return v.is_zero();
    }
    let field = basis[0].field.clone();
    let rows: Vec<Vec<u16>> = basis.iter().map(|b| b.entries.clone()).collect();
    let m = GFMatrix::from_rows(field.clone(), &rows);
    let r = m.rank();
    let mut rows2 = rows;
    rows2.push(v.entries.clone());
    GFMatrix::from_rows(field, &rows2).rank() == r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_polys_match_ledger() {
        // b=1: x+1, b=2: x^2+x+1, b=3: x^3+x+1, b=4: x^4+x+1,
        // b=5: x^5+x^2+1, b=8: x^8+x^4+x^3+x+1
        assert_eq!(FieldSpec::new(1).unwrap().reduction_poly(), 0b11);
        assert_eq!(FieldSpec::new(2).unwrap().reduction_poly(), 0b111);
        assert_eq!(FieldSpec::new(3).unwrap().reduction_poly(), 0b1011);
        assert_eq!(FieldSpec::new(4).unwrap().reduction_poly(), 0b10011);
        assert_eq!(FieldSpec::new(5).unwrap().reduction_poly(), 0b100101);
        assert_eq!(FieldSpec::new(8).unwrap().reduction_poly(), 0x11b);
    }

    #[test]
    fn mul_examples() {
        let f2 = FieldSpec::new(2).unwrap();
        assert_eq!(gf_mul(&f2, 2, 2), 3); // x*x = x^2 = x+1 mod x^2+x+1
        let f3 = FieldSpec::new(3).unwrap();
        assert_eq!(gf_mul(&f3, 2, 4), 3); // x*x^2 = x^3 = x+1 mod x^3+x+1
        for b in [1, 2, 3, 4, 8] {
            let f = FieldSpec::new(b).unwrap();
            for a in f.elements() {
                assert_eq!(gf_mul(&f, a, 1), a);
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small_b() {
        for b in 1..=4 {
            let f = FieldSpec::new(b).unwrap();
            for a in f.elements() {
                for x in f.elements() {
                    assert_eq!(f.mul(a, x), f.mul(x, a));
                    for c in f.elements() {
                        assert_eq!(f.mul(f.mul(a, x), c), f.mul(a, f.mul(x, c)));
                        assert_eq!(f.mul(a, x ^ c), f.mul(a, x) ^ f.mul(a, c));
                    }
                }
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }

    fn random_matrix(f: &FieldSpec, rows: usize, cols: usize, state: &mut u64) -> GFMatrix {
        let mut m = GFMatrix::zero(f.clone(), rows, cols);
        for e in m.entries.iter_mut() {
            *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *e = ((*state >> 33) % f.q() as u64) as u16;
        }
        m
    }

    #[test]
    fn rank_examples_and_subadditivity() {
        let f2 = FieldSpec::new(1).unwrap();
        assert_eq!(GFMatrix::identity(f2.clone(), 3).rank(), 3);
        assert_eq!(GFMatrix::zero(f2.clone(), 4, 4).rank(), 0);

        // outer(e1,e2) + outer(e3,e4) has rank 2.
        let e = |i: usize| {
            let mut v = vec![0u16; 4];
            v[i] = 1;
            GFVector::new(f2.clone(), v)
        };
        let m = outer_product(&e(0), &e(1))
            .unwrap()
            .add(&outer_product(&e(2), &e(3)).unwrap())
            .unwrap();
        assert_eq!(m.rank(), 2);

        let mut state = 0xfeedu64;
        for b in [1, 2, 4] {
            let f = FieldSpec::new(b).unwrap();
            for _ in 0..500 {
                let a = random_matrix(&f, 4, 4, &mut state);
                let bm = random_matrix(&f, 4, 4, &mut state);
                let s = a.add(&bm).unwrap();
                assert!(s.rank() <= a.rank() + bm.rank());
                let p = a.matmul(&bm).unwrap();
                assert!(p.rank() <= a.rank().min(bm.rank()));
            }
        }
    }

    #[test]
    fn kernel_properties() {
        let f2 = FieldSpec::new(1).unwrap();
        assert!(GFMatrix::identity(f2.clone(), 3).kernel_basis().is_empty());
        assert_eq!(GFMatrix::zero(f2.clone(), 2, 3).kernel_basis().len(), 3);

        // kernel of G^T for G with rows 01, 10, 11 is span{(1,1,1)}.
        let g = GFMatrix::from_rows(f2.clone(), &[vec![0, 1], vec![1, 0], vec![1, 1]]);
        let k = g.transpose().kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].entries, vec![1, 1, 1]);

        let mut state = 0xabcdu64;
        for b in [1, 2, 4] {
            let f = FieldSpec::new(b).unwrap();
            for _ in 0..100 {
                let m = random_matrix(&f, 3, 5, &mut state);
                let ker = m.kernel_basis();
                assert_eq!(ker.len(), 5 - m.rank());
                for v in &ker {
                    assert!(m.matvec(v).unwrap().is_zero());
                }
                if !ker.is_empty() {
                    let rows: Vec<Vec<u16>> = ker.iter().map(|v| v.entries.clone()).collect();
                    assert_eq!(GFMatrix::from_rows(f.clone(), &rows).rank(), ker.len());
                }
            }
        }
    }

    #[test]
    fn intersect_examples_and_dim_identity() {
        let f2 = FieldSpec::new(1).unwrap();
        let e = |i: usize| {
            let mut v = vec![0u16; 4];
            v[i] = 1;
            GFVector::new(f2.clone(), v)
        };
        // span{e1,e2} cap span{e2,e3} = span{e2}
        let i = intersect_subspaces(&[e(0), e(1)], &[e(1), e(2)]).unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!(i[0].entries, vec![0, 1, 0, 0]);
        // complementary subspaces intersect trivially
        let i = intersect_subspaces(&[e(0), e(1)], &[e(2), e(3)]).unwrap();
        assert!(i.is_empty());
        // A = B up to basis change: mutual containment
        let a = vec![e(0), e(1)];
        let b = vec![e(1), GFVector::new(f2.clone(), vec![1, 1, 0, 0])];
        let i = intersect_subspaces(&a, &b).unwrap();
        assert_eq!(i.len(), 2);
        for v in &i {
            assert!(in_span(&a, v));
            assert!(in_span(&b, v));
        }

        // dim identity on 200 random subspace pairs in F2^8
        let f = FieldSpec::new(1).unwrap();
        let mut state = 0x5151u64;
        for _ in 0..200 {
            let ma = random_matrix(&f, 4, 8, &mut state);
            let mb = random_matrix(&f, 4, 8, &mut state);
            let a = ma.row_space_basis();
            let b = mb.row_space_basis();
            let inter = intersect_subspaces(&a, &b).unwrap();
            for v in &inter {
                assert!(in_span(&a, v) && in_span(&b, v));
            }
            let mut all: Vec<Vec<u16>> = a.iter().map(|v| v.entries.clone()).collect();
            all.extend(b.iter().map(|v| v.entries.clone()));
            let dim_sum = GFMatrix::from_rows(f.clone(), &all).rank();
            assert_eq!(a.len() + b.len(), dim_sum + inter.len());
        }
    }

    #[test]
    fn outer_product_examples() {
        let f2 = FieldSpec::new(1).unwrap();
        let z = GFVector::zero(f2.clone(), 3);
        let v = GFVector::new(f2.clone(), vec![1, 0, 1]);
        assert_eq!(outer_product(&z, &v).unwrap().rank(), 0);

        let u = GFVector::new(f2.clone(), vec![1, 1]);
        let m = outer_product(&u, &v).unwrap();
        assert_eq!(m.entries, vec![1, 0, 1, 1, 0, 1]);
        assert_eq!(m.rank(), 1);

        // e1 (x) e2 in F2^4: single 1 at (0, 1) in 0-based coordinates
        let e1 = GFVector::new(f2.clone(), vec![1, 0, 0, 0]);
        let e2 = GFVector::new(f2.clone(), vec![0, 1, 0, 0]);
        let m = outer_product(&e1, &e2).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.entries.iter().map(|&x| x as u32).sum::<u32>(), 1);
    }

    #[test]
    fn hex_roundtrip() {
        let f2 = FieldSpec::new(1).unwrap();
        let v = GFVector::new(f2.clone(), vec![1, 0, 0, 0, 0, 0, 0, 0, 1, 1]);
        let h = v.to_hex();
        assert_eq!(h, "0103");
        let back = GFVector::from_hex(f2, &h, 10).unwrap();
        assert_eq!(back.entries, v.entries);
    }

    #[test]
    fn serde_wire_format() {
        let f = FieldSpec::new(2).unwrap();
        let m = GFMatrix::from_rows(f, &[vec![1, 2], vec![3, 0]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"b":2,"rows":2,"cols":2,"entries":[1,2,3,0]}"#);
        let back: GFMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
