//! The matrix poset over GF(2^b): all m-by-m matrices graded by rank, with
//! M1 dominated by M2 iff rank(M2 - M1) = rank(M2) - rank(M1).
//!
//! Provides the domination test, rank-level enumeration with pre-flight
//! counting, the unique maximal common dominated element (meet) where one
//! exists, and the factorization test for domination by the identity.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::HdxError;
use crate::gf::{FieldSpec, GFMatrix};

/// Parameters of the poset of m-by-m matrices over GF(2^b).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixPosetSpec {
    pub field: FieldSpec,
    pub m: usize,
}

impl MatrixPosetSpec {
    pub fn new(field: FieldSpec, m: usize) -> Result<Self, HdxError> {
        if m == 0 {
            return Err(HdxError::Dimension("matrix poset needs m >= 1".into()));
        }
        Ok(MatrixPosetSpec { field, m })
    }
}

/// One rank level, optionally materialized.
#[derive(Clone, Debug)]
pub struct RankLevel {
    pub spec: MatrixPosetSpec,
    pub s: usize,
    pub count: BigUint,
    pub members: Option<Vec<GFMatrix>>,
}

/// Gaussian binomial coefficient [m choose s]_q via the integer recurrence
/// [m s] = q^s [m-1 s] + [m-1 s-1].
pub fn gaussian_binomial(m: usize, s: usize, q: u64) -> BigUint {
    if s > m {
        return BigUint::from(0u32);
    }
    let q = BigUint::from(q);
    let mut row = vec![BigUint::one()];
    for _ in 1..=m {
        let mut next = vec![BigUint::one()];
        for j in 1..row.len() {
            next.push(q.pow(j as u32) * &row[j] + &row[j - 1]);
        }
        next.push(BigUint::one());
        row = next;
    }
    row[s].clone()
}

/// Number of rank-s matrices in F_q^{m x m}:
/// binom_q(m, s) * prod_{i=0}^{s-1} (q^m - q^i).
pub fn rank_count(m: usize, s: usize, q: u64) -> BigUint {
    if s > m {
        return BigUint::from(0u32);
    }
    let qm = BigUint::from(q).pow(m as u32);
    let mut out = gaussian_binomial(m, s, q);
    for i in 0..s {
        out *= &qm - BigUint::from(q).pow(i as u32);
    }
    out
}

/// True iff rank(M2 - M1) = rank(M2) - rank(M1). Subtraction is addition in
/// characteristic 2.
pub fn dominates(m1: &GFMatrix, m2: &GFMatrix) -> Result<bool, HdxError> {
    if m1.rows != m2.rows || m1.cols != m2.cols || m1.field != m2.field {
        return Err(HdxError::Dimension("dominates: shape or field mismatch".into()));
    }
    let diff = m1.add(m2)?;
    let (r1, r2) = (m1.rank() as isize, m2.rank() as isize);
    Ok(diff.rank() as isize == r2 - r1)
}

/// Iterate all s-dimensional subspaces of F_q^m as reduced-echelon basis
/// matrices (s x m), in lexicographic order of (pivot columns, free entries).
pub fn for_each_subspace_rref<F: FnMut(&GFMatrix)>(
    field: &FieldSpec,
    m: usize,
    s: usize,
    f: &mut F,
) {
    if s == 0 {
        return;
    }
    let q = field.q() as u64;
    // Pivot column combinations in lex order.
    let mut pivots: Vec<usize> = (0..s).collect();
    loop {
        // Free positions: (row r, col c) with c > pivots[r], c not a pivot.
        let mut free = Vec::new();
        for r in 0..s {
            for c in pivots[r] + 1..m {
                if !pivots.contains(&c) {
                    free.push((r, c));
                }
            }
        }
        let total: u64 = (q as u128).pow(free.len() as u32).min(u64::MAX as u128) as u64;
        let mut mat = GFMatrix::zero(field.clone(), s, m);
        for (r, &p) in pivots.iter().enumerate() {
            mat.set(r, p, 1);
        }
        for idx in 0..total {
            let mut rem = idx;
            for &(r, c) in &free {
                mat.set(r, c, (rem % q) as u16);
                rem /= q;
            }
            f(&mat);
        }
        // next combination
        let mut i = s;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pivots[i] != i + m - s {
                break;
            }
            if i == 0 {
                return;
            }
        }
        pivots[i] += 1;
        for j in i + 1..s {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
}

/// Stream every rank-s matrix in F_q^{m x m} exactly once, ordered by
/// (row-space echelon form, column-space echelon form, invertible core):
/// M = C^T * K * R with R, C echelon bases and K in GL_s.
pub fn for_each_rank_s<F: FnMut(&GFMatrix)>(spec: &MatrixPosetSpec, s: usize, mut f: F) {
    let field = &spec.field;
    let m = spec.m;
    if s == 0 {
        f(&GFMatrix::zero(field.clone(), m, m));
        return;
    }
    // Invertible cores.
    let mut cores: Vec<GFMatrix> = Vec::new();
    let q = field.q() as u64;
    let total = (q as u128).pow((s * s) as u32);
    assert!(total <= u64::MAX as u128, "core space too large");
    for idx in 0..total as u64 {
        let mut k = GFMatrix::zero(field.clone(), s, s);
        let mut rem = idx;
        for e in k.entries.iter_mut() {
            *e = (rem % q) as u16;
            rem /= q;
        }
        if k.rank() == s {
            cores.push(k);
        }
    }
    let mut rowspaces: Vec<GFMatrix> = Vec::new();
    for_each_subspace_rref(field, m, s, &mut |r| rowspaces.push(r.clone()));
    for_each_subspace_rref(field, m, s, &mut |ct| {
        // ct rows form the column-space basis; transpose to m x s.
        let c = ct.transpose();
        for k in &cores {
            let ck = c.matmul(k).expect("shape");
            for r in &rowspaces {
                let mat = ck.matmul(r).expect("shape");
                f(&mat);
            }
        }
    });
}

/// All rank-s matrices, cap-guarded by the counting formula before any
/// materialization.
pub fn enumerate_rank(spec: &MatrixPosetSpec, s: usize, cap: u64) -> Result<RankLevel, HdxError> {
    if s > spec.m {
        return Err(HdxError::Dimension(format!("rank {s} exceeds side length {}", spec.m)));
    }
    let count = rank_count(spec.m, s, spec.field.q() as u64);
    if count > BigUint::from(cap) {
        return Err(HdxError::Size(format!(
            "rank level ({}, q={}, s={}) has {} matrices, cap {}",
            spec.m,
            spec.field.q(),
            s,
            count,
            cap
        )));
    }
    let mut members = Vec::new();
    for_each_rank_s(spec, s, |m| members.push(m.clone()));
    if BigUint::from(members.len() as u64) != count {
        return Err(HdxError::Complex(format!(
            "enumeration produced {} matrices, formula says {}",
            members.len(),
            count
        )));
    }
    Ok(RankLevel { spec: clone_spec(spec), s, count, members: Some(members) })
}

fn clone_spec(s: &MatrixPosetSpec) -> MatrixPosetSpec {
    MatrixPosetSpec { field: s.field.clone(), m: s.m }
}

/// All common dominated elements of M0 and M1, enumerated through the
/// restriction of candidates to rowspan(M0) cap rowspan(M1) and
/// colspan(M0) cap colspan(M1).
fn common_dominated(m0: &GFMatrix, m1: &GFMatrix, cap: u64) -> Result<Vec<GFMatrix>, HdxError> {
    let field = m0.field.clone();
    let rint = crate::gf::intersect_subspaces(&m0.row_space_basis(), &m1.row_space_basis())?;
    let cint = crate::gf::intersect_subspaces(&m0.col_space_basis(), &m1.col_space_basis())?;
    let (dr, dc) = (rint.len(), cint.len());
    let q = field.q() as u64;
    let total = (q as u128).pow((dr * dc) as u32);
    if total > cap as u128 {
        return Err(HdxError::Size(format!(
            "meet candidate space q^{} = {} exceeds cap {}",
            dr * dc,
            total,
            cap
        )));
    }
    let n = m0.cols;
    // Basis matrices: rows of rb span the row intersection, columns of cb
    // span the column intersection.
    let rb = GFMatrix::from_rows(field.clone(), &rint.iter().map(|v| v.entries.clone()).collect::<Vec<_>>());
    let cbt = GFMatrix::from_rows(field.clone(), &cint.iter().map(|v| v.entries.clone()).collect::<Vec<_>>());
    let cb = cbt.transpose();
    let mut out = Vec::new();
    for idx in 0..total as u64 {
        let mut k = GFMatrix::zero(field.clone(), dc, dr);
        let mut rem = idx;
        for e in k.entries.iter_mut() {
            *e = (rem % q) as u16;
            rem /= q;
        }
        let cand = if dr == 0 || dc == 0 {
            GFMatrix::zero(field.clone(), n, n)
        } else {
            cb.matmul(&k)?.matmul(&rb)?
        };
        if dominates(&cand, m0)? && dominates(&cand, m1)? {
            out.push(cand);
        }
        if dr == 0 || dc == 0 {
            break;
        }
    }
    Ok(out)
}

/// The unique maximal element among matrices dominated by both inputs.
///
/// Uniqueness holds for pairs spanning a face of the low-rank Grassmannian
/// construction; outside that regime two incomparable maxima may exist, in
/// which case the pair is reported instead of silently picking one.
pub fn meet_maximal(m0: &GFMatrix, m1: &GFMatrix) -> Result<GFMatrix, HdxError> {
    if m0.rows != m1.rows || m0.cols != m1.cols || m0.field != m1.field {
        return Err(HdxError::Dimension("meet: shape or field mismatch".into()));
    }
    if m0 == m1 {
        return Ok(m0.clone());
    }
    let all = common_dominated(m0, m1, 1 << 22)?;
    let best = all.iter().max_by_key(|m| m.rank()).expect("zero matrix is always dominated");
    for other in &all {
        if !dominates(other, best)? {
            // `other` is not under `best`; climb to a maximal element above
            // `other` for the report.
            let mut witness = other.clone();
            loop {
                let mut grew = false;
                for cand in &all {
                    if cand.rank() > witness.rank() && dominates(&witness, cand)? {
                        witness = cand.clone();
                        grew = true;
                        break;
                    }
                }
                if !grew {
                    break;
                }
            }
            return Err(HdxError::Ambiguous(format!(
                "incomparable maxima of ranks {} and {}",
                best.rank(),
                witness.rank()
            )));
        }
    }
    Ok(best.clone())
}

/// Domination by the identity together with a rank factorization witness.
///
/// Computes any rank factorization M = V1 V2^T and tests V2^T V1 = I_r; the
/// test value is invariant under the choice of factorization. Returns the
/// witness (V1, V2) when the test passes.
pub fn dominated_by_identity(m: &GFMatrix) -> Result<(bool, Option<(GFMatrix, GFMatrix)>), HdxError> {
    if m.rows != m.cols {
        return Err(HdxError::Dimension("dominated_by_identity needs a square matrix".into()));
    }
    let r = m.rank();
    if r == 0 {
        let f = m.field.clone();
        return Ok((true, Some((GFMatrix::zero(f.clone(), m.rows, 0), GFMatrix::zero(f, m.rows, 0)))));
    }
    // Rank factorization from RREF: M = C * R with R the echelon rows and C
    // the pivot columns of M.
    let mut ech = m.clone();
    let pivots = ech.rref_in_place();
    let rmat = GFMatrix {
        field: m.field.clone(),
        rows: r,
        cols: m.cols,
        entries: ech.entries[..r * m.cols].to_vec(),
    };
    let mut c = GFMatrix::zero(m.field.clone(), m.rows, r);
    for (j, &p) in pivots.iter().enumerate() {
        for i in 0..m.rows {
            c.set(i, j, m.get(i, p));
        }
    }
    debug_assert_eq!(c.matmul(&rmat)?.entries, m.entries);
    // M = V1 V2^T with V1 = c and V2^T = rmat.
    let prod = rmat.matmul(&c)?;
    let ok = prod == GFMatrix::identity(m.field.clone(), r);
    if ok {
        Ok((true, Some((c, rmat.transpose()))))
    } else {
        Ok((false, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;

    fn f2() -> FieldSpec {
        FieldSpec::new(1).unwrap()
    }

    fn mat3(rows: [[u16; 3]; 3]) -> GFMatrix {
        GFMatrix::from_rows(f2(), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn dominates_examples() {
        let e11 = mat3([[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let d110 = mat3([[1, 0, 0], [0, 1, 0], [0, 0, 0]]);
        assert!(dominates(&e11, &d110).unwrap());
        assert!(dominates(&d110, &d110).unwrap());
        let e11_e12 = mat3([[1, 1, 0], [0, 0, 0], [0, 0, 0]]);
        assert!(!dominates(&e11, &e11_e12).unwrap());
    }

    #[test]
    fn rank_counts_match_brute_force_small() {
        // m=2, q=2, s=1: 9 matrices out of 16.
        let f = f2();
        let spec = MatrixPosetSpec::new(f.clone(), 2).unwrap();
        let mut brute = [0usize; 3];
        for bitsv in 0..16u32 {
            let m = GFMatrix {
                field: f.clone(),
                rows: 2,
                cols: 2,
                entries: (0..4).map(|i| ((bitsv >> i) & 1) as u16).collect(),
            };
            brute[m.rank()] += 1;
        }
        assert_eq!(brute[1], 9);
        for s in 0..=2 {
            let lvl = enumerate_rank(&spec, s, 1 << 20).unwrap();
            assert_eq!(lvl.count, BigUint::from(brute[s]));
            // each member has rank exactly s, no duplicates
            let members = lvl.members.unwrap();
            for m in &members {
                assert_eq!(m.rank(), s);
            }
            let mut keys: Vec<Vec<u16>> = members.iter().map(|m| m.entries.clone()).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), brute[s]);
        }
        // |GL_3(F_2)| = 168
        assert_eq!(rank_count(3, 3, 2), BigUint::from(168u32));
    }

    #[test]
    fn enumeration_matches_formula_q4() {
        let f4 = FieldSpec::new(2).unwrap();
        let spec = MatrixPosetSpec::new(f4, 3).unwrap();
        for s in 0..=3 {
            let lvl = enumerate_rank(&spec, s, 1 << 21).unwrap();
            let members = lvl.members.unwrap();
            assert_eq!(BigUint::from(members.len() as u64), lvl.count);
            let mut keys: Vec<Vec<u16>> = members.iter().map(|m| m.entries.clone()).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), members.len(), "duplicate matrices at rank {s}");
        }
    }

    #[test]
    fn cap_error_reports_projection() {
        let f4 = FieldSpec::new(2).unwrap();
        let spec = MatrixPosetSpec::new(f4, 4).unwrap();
        let err = enumerate_rank(&spec, 4, 1000).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains(&format!("{}", rank_count(4, 4, 4))), "{msg}");
    }

    #[test]
    fn meet_examples() {
        let d110 = mat3([[1, 0, 0], [0, 1, 0], [0, 0, 0]]);
        let d101 = mat3([[1, 0, 0], [0, 0, 0], [0, 0, 1]]);
        let e11 = mat3([[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        assert_eq!(meet_maximal(&d110, &d101).unwrap().entries, e11.entries);
        assert_eq!(meet_maximal(&d110, &d110).unwrap().entries, d110.entries);
    }

    #[test]
    fn dominated_by_identity_exhaustive_m3() {
        let f = f2();
        let id = GFMatrix::identity(f.clone(), 3);
        for bitsv in 0..512u32 {
            let m = GFMatrix {
                field: f.clone(),
                rows: 3,
                cols: 3,
                entries: (0..9).map(|i| ((bitsv >> i) & 1) as u16).collect(),
            };
            let (by_fact, witness) = dominated_by_identity(&m).unwrap();
            let by_rank = dominates(&m, &id).unwrap();
            assert_eq!(by_fact, by_rank, "disagree on {m:?}");
            if let Some((v1, v2)) = witness {
                let prod = v1.matmul(&v2.transpose()).unwrap();
                assert_eq!(prod.entries, m.entries);
                let inner = v2.transpose().matmul(&v1).unwrap();
                assert_eq!(inner, GFMatrix::identity(f.clone(), m.rank()));
            }
        }
        // identity and a nilpotent example
        assert!(dominated_by_identity(&id).unwrap().0);
        let e12 = mat3([[0, 1, 0], [0, 0, 0], [0, 0, 0]]);
        assert!(!dominated_by_identity(&e12).unwrap().0);
    }

    #[test]
    fn poset_axioms_m2_exhaustive() {
        // Small-scale version of the exhaustive axiom check (full M_2^3 runs
        // in the acceptance suite).
        let f = f2();
        let all: Vec<GFMatrix> = (0..16u32)
            .map(|b| GFMatrix {
                field: f.clone(),
                rows: 2,
                cols: 2,
                entries: (0..4).map(|i| ((b >> i) & 1) as u16).collect(),
            })
            .collect();
        let dom: Vec<Vec<bool>> = all
            .iter()
            .map(|a| all.iter().map(|b| dominates(a, b).unwrap()).collect())
            .collect();
        for i in 0..16 {
            assert!(dom[i][i]);
            for j in 0..16 {
                if i != j && dom[i][j] {
                    assert!(!dom[j][i], "antisymmetry");
                }
                for k in 0..16 {
                    if dom[i][j] && dom[j][k] {
                        assert!(dom[i][k], "transitivity");
                    }
                }
            }
            // purity: dominated by some full-rank matrix
            assert!(all.iter().any(|m| m.rank() == 2 && dom[i][all.iter().position(|x| x.entries == m.entries).unwrap()]));
        }
    }
}
