//! F2 chain complexes of simplicial complexes, 1-homology, swap cycles,
//! the explicit isomorphism between the swap-reduced 1-homology of a
//! Cayley complex and ker G^T / im H^T of its generating rank-1 complex,
//! and the quotienting procedure that raises that dimension one step at a
//! time while preserving incidence.
//!
//! Everything here is exact F2 elimination; no floating point.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::bits::{BitMat, Echelon};
use crate::codes::{build_code_pair, Rank1Complex};
use crate::error::HdxError;
use crate::poset::GradedComplex;

/// Boundary matrix of a simplicial complex at rank i, shaped
/// |X(i-1)| x |X(i)|: column f is the indicator of the faces covered by f.
pub fn boundary_matrix(y: &GradedComplex, i: isize) -> Result<BitMat, HdxError> {
    let l = (i + 1) as usize;
    if l == 0 || l >= y.levels.len() {
        return Err(HdxError::Dimension(format!("no boundary at rank {i}")));
    }
    let rows = y.levels[l - 1].len();
    let cols = y.levels[l].len();
    let mut m = BitMat::zero(rows, cols);
    for (f, d) in y.down[l].iter().enumerate() {
        for &a in d {
            m.set(a as usize, f, true);
        }
    }
    Ok(m)
}

/// dim H_i = dim ker boundary_i - rank boundary_{i+1}.
pub fn homology_dim(y: &GradedComplex, i: isize) -> Result<usize, HdxError> {
    let b_i = boundary_matrix(y, i)?;
    let ker = b_i.cols - b_i.rank();
    let rank_up = if ((i + 2) as usize) < y.levels.len() {
        boundary_matrix(y, i + 1)?.rank()
    } else {
        0
    };
    Ok(ker - rank_up)
}

/// Exact check that consecutive boundaries compose to zero.
pub fn boundary_square_zero(y: &GradedComplex) -> Result<bool, HdxError> {
    for i in 0..y.rank() {
        let a = boundary_matrix(y, i)?;
        let b = boundary_matrix(y, i + 1)?;
        if !a.matmul(&b).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// The rank-2 Cayley complex of a rank-1 generating complex, in a lean edge/
// triangle form for homology work.

pub struct CayleyTwoComplex {
    pub k: usize,
    pub x: Rank1Complex,
    /// Edges (v, w) with v < w and v ^ w a generator vertex.
    pub edges: Vec<(u32, u32)>,
    pub edge_index: HashMap<(u32, u32), u32>,
    /// Label of each edge: the X(0) index of v ^ w.
    pub labels: Vec<u32>,
    /// Rank-2 faces as sorted vertex triples.
    pub tri: Vec<[u32; 3]>,
}

/// Materialize the rank-2 Cayley complex over the span of X(0). Requires
/// the vertices to span F2^k (reduce first) and k <= 16.
pub fn materialize_cayley_two(x: &Rank1Complex) -> Result<CayleyTwoComplex, HdxError> {
    if x.span_dim() != x.k {
        return Err(HdxError::Precondition(
            "vertices must span the ambient space; reduce_to_span first".into(),
        ));
    }
    if x.k > 16 {
        return Err(HdxError::Size("Cayley materialization capped at k <= 16".into()));
    }
    let n = 1u32 << x.k;
    let vid: HashMap<u64, u32> =
        x.vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for v in 0..n {
        for (gi, &g) in x.vertices.iter().enumerate() {
            let w = v ^ g as u32;
            if v < w {
                edges.push((v, w));
                labels.push(gi as u32);
            }
        }
    }
    let edge_index: HashMap<(u32, u32), u32> =
        edges.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
    let mut tri_set: HashSet<[u32; 3]> = HashSet::new();
    for t in &x.triangles {
        let (a, b) = (x.vertices[t[0] as usize] as u32, x.vertices[t[1] as usize] as u32);
        for v in 0..n {
            let mut f = [v, v ^ a, v ^ b];
            f.sort_unstable();
            tri_set.insert(f);
        }
    }
    let mut tri: Vec<[u32; 3]> = tri_set.into_iter().collect();
    tri.sort_unstable();
    let _ = vid;
    Ok(CayleyTwoComplex { k: x.k, x: x.clone(), edges, edge_index, labels, tri })
}

impl CayleyTwoComplex {
    fn edge_id(&self, a: u32, b: u32) -> u32 {
        self.edge_index[&(a.min(b), a.max(b))]
    }

    fn words(&self) -> usize {
        (self.edges.len() + 63) / 64
    }

    /// dim Z_1 = |E| - |V| + 1 (the skeleton is connected: X spans).
    pub fn z1_dim(&self) -> usize {
        self.edges.len() - (1usize << self.k) + 1
    }

    /// Echelon of B_1 (triangle boundaries).
    pub fn b1_echelon(&self) -> Echelon {
        let mut ech = Echelon::new(self.edges.len());
        for t in &self.tri {
            let e = [
                self.edge_id(t[0], t[1]) as usize,
                self.edge_id(t[0], t[2]) as usize,
                self.edge_id(t[1], t[2]) as usize,
            ];
            ech.insert_bits(&e);
        }
        ech
    }

    /// Extend an echelon with all swap 4-cycles; returns the count of
    /// degenerate (skipped) generator pairs.
    pub fn insert_swap_cycles(&self, ech: &mut Echelon) -> usize {
        let n = 1u32 << self.k;
        let mut degenerate = 0;
        for i in 0..self.x.vertices.len() {
            for j in i + 1..self.x.vertices.len() {
                let a = self.x.vertices[i] as u32;
                let b = self.x.vertices[j] as u32;
                if a == b {
                    degenerate += 1;
                    continue;
                }
                for v in 0..n {
                    let e = [
                        self.edge_id(v, v ^ a) as usize,
                        self.edge_id(v ^ a, v ^ a ^ b) as usize,
                        self.edge_id(v ^ b, v ^ a ^ b) as usize,
                        self.edge_id(v, v ^ b) as usize,
                    ];
                    ech.insert_bits(&e);
                }
            }
        }
        degenerate
    }

    /// A basis of Z_1 as edge-indicator words, via spanning-tree fundamental
    /// cycles.
    pub fn z1_basis(&self) -> Vec<Vec<u64>> {
        let n = 1usize << self.k;
        // BFS spanning tree from 0
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n]; // (neighbor, edge id)
        for (ei, &(a, b)) in self.edges.iter().enumerate() {
            adj[a as usize].push((b, ei as u32));
            adj[b as usize].push((a, ei as u32));
        }
        let mut parent_edge: Vec<Option<u32>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = vec![0u32];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for &(w, ei) in &adj[v] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    parent_edge[w as usize] = Some(ei);
                    order.push(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "skeleton must be connected");
        let tree: HashSet<u32> = parent_edge.iter().flatten().copied().collect();
        // path-to-root indicator per vertex
        let words = self.words();
        let mut path: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
        for &v in order.iter().skip(1) {
            let ei = parent_edge[v as usize].unwrap() as usize;
            let (a, b) = self.edges[ei];
            let p = if a == v { b } else { a };
            let mut w = path[p as usize].clone();
            w[ei / 64] ^= 1 << (ei % 64);
            path[v as usize] = w;
        }
        let mut out = Vec::new();
        for (ei, &(a, b)) in self.edges.iter().enumerate() {
            if tree.contains(&(ei as u32)) {
                continue;
            }
            let mut w = vec![0u64; words];
            w[ei / 64] ^= 1 << (ei % 64);
            for (x, (pa, pb)) in w.iter_mut().zip(path[a as usize].iter().zip(&path[b as usize])) {
                *x ^= pa ^ pb;
            }
            out.push(w);
        }
        out
    }

    /// phi: push a 1-cycle to F2^{X(0)} through the edge labels.
    pub fn phi(&self, cycle: &[u64]) -> Vec<u64> {
        let n = self.x.vertices.len();
        let mut out = vec![0u64; (n + 63) / 64];
        for (ei, &l) in self.labels.iter().enumerate() {
            if cycle[ei / 64] >> (ei % 64) & 1 == 1 {
                out[l as usize / 64] ^= 1 << (l as usize % 64);
            }
        }
        out
    }

    /// psi: lift a vector in ker G^T to a 1-cycle by walking its support in
    /// canonical vertex order through partial sums.
    pub fn psi(&self, u: &[u64]) -> Vec<u64> {
        let mut cyc = vec![0u64; self.words()];
        let mut pos = 0u32;
        for (i, &v) in self.x.vertices.iter().enumerate() {
            if u[i / 64] >> (i % 64) & 1 == 1 {
                let next = pos ^ v as u32;
                let ei = self.edge_id(pos, next) as usize;
                cyc[ei / 64] ^= 1 << (ei % 64);
                pos = next;
            }
        }
        assert_eq!(pos, 0, "psi input must lie in ker G^T");
        cyc
    }
}

/// Result of the swap-reduced homology characterization check.
#[derive(Clone, Debug, Serialize)]
pub struct HommodswapReport {
    pub k: usize,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub dim_h1_mod_swap: usize,
    pub dim_ker_gt_mod_ht: usize,
    pub dims_equal: bool,
    pub phi_psi_identity: bool,
    pub psi_phi_identity: bool,
    pub dim_h1: usize,
}

/// Check dim H_1/(S_1+B_1) = dim ker G^T / im H^T with the explicit maps,
/// on the Cayley complex over the span of X(0).
pub fn hommodswap_check(x: &Rank1Complex) -> Result<HommodswapReport, HdxError> {
    let x = reduce_to_span(x);
    // The path lift needs the 1-skeleton of the Cayley complex connected,
    // which holds exactly because the vertices span the ambient space.
    let y = materialize_cayley_two(&x)?;
    let pair = build_code_pair(&x);

    let b1 = y.b1_echelon();
    let dim_b1 = b1.rank();
    let mut sb = b1.clone();
    y.insert_swap_cycles(&mut sb);
    let dim_sb = sb.rank();
    let z1 = y.z1_dim();
    let lhs = z1 - dim_sb;
    let rhs = pair.dim_ker_gt() - pair.rank_h();
    let dim_h1 = z1 - dim_b1;

    // Quotient representatives of Z_1 mod (S_1 + B_1).
    let mut ext = sb.clone();
    let mut reps: Vec<Vec<u64>> = Vec::new();
    for zb in y.z1_basis() {
        if ext.insert(zb.clone()) {
            reps.push(zb);
        }
    }
    // psi phi = id on the quotient: psi(phi(alpha)) + alpha in S_1 + B_1.
    let mut psi_phi_ok = reps.len() == lhs;
    for alpha in &reps {
        let u = y.phi(alpha);
        // phi lands in ker G^T: the labels XOR to zero
        let mut acc = 0u64;
        for (i, &v) in x.vertices.iter().enumerate() {
            if u[i / 64] >> (i % 64) & 1 == 1 {
                acc ^= v;
            }
        }
        if acc != 0 {
            psi_phi_ok = false;
            break;
        }
        let lifted = y.psi(&u);
        let diff: Vec<u64> = lifted.iter().zip(alpha).map(|(a, b)| a ^ b).collect();
        if !sb.contains(&diff) {
            psi_phi_ok = false;
            break;
        }
    }
    // phi psi = id on ker G^T mod im H^T: representatives from extending
    // the H^T row space by a kernel basis of G^T.
    let n = x.vertices.len();
    let mut gt_rows: Vec<Vec<u64>> = Vec::new(); // columns of G as words over X(0)
    for bit in 0..x.k {
        let mut w = vec![0u64; (n + 63) / 64];
        for (i, &v) in x.vertices.iter().enumerate() {
            if v >> bit & 1 == 1 {
                w[i / 64] |= 1 << (i % 64);
            }
        }
        gt_rows.push(w);
    }
    // ker G^T = right kernel of the k x n matrix with rows gt_rows
    let mut gt = BitMat::zero(x.k, n);
    for (r, w) in gt_rows.iter().enumerate() {
        for i in 0..n {
            if w[i / 64] >> (i % 64) & 1 == 1 {
                gt.set(r, i, true);
            }
        }
    }
    let kernel = gt.kernel_basis();
    let mut ht_ech = Echelon::new(n);
    for t in &x.triangles {
        ht_ech.insert_bits(&[t[0] as usize, t[1] as usize, t[2] as usize]);
    }
    let mut phi_psi_ok = true;
    let mut ext2 = ht_ech.clone();
    let mut rep_count = 0;
    for r in 0..kernel.rows {
        let mut u = vec![0u64; (n + 63) / 64];
        for i in 0..n {
            if kernel.get(r, i) {
                u[i / 64] |= 1 << (i % 64);
            }
        }
        if !ext2.insert(u.clone()) {
            continue;
        }
        rep_count += 1;
        let lifted = y.psi(&u);
        let back = y.phi(&lifted);
        // phi(psi(u)) must equal u exactly (walk edges carry the support
        // labels once each)
        if back != u {
            phi_psi_ok = false;
            break;
        }
    }
    if rep_count != rhs {
        phi_psi_ok = false;
    }
    Ok(HommodswapReport {
        k: x.k,
        n_vertices: n,
        n_triangles: x.triangles.len(),
        dim_h1_mod_swap: lhs,
        dim_ker_gt_mod_ht: rhs,
        dims_equal: lhs == rhs,
        phi_psi_identity: phi_psi_ok,
        psi_phi_identity: psi_phi_ok,
        dim_h1,
    })
}

/// Re-coordinatize so the vertices span the whole ambient space: coordinates
/// with respect to the reduced-echelon basis of the span.
pub fn reduce_to_span(x: &Rank1Complex) -> Rank1Complex {
    let mut ech = Echelon::new(x.k);
    for &v in &x.vertices {
        ech.insert(vec![v]);
    }
    let d = ech.rank();
    if d == x.k {
        return x.clone();
    }
    let pivots = ech.pivots().to_vec();
    let vertices: Vec<u64> = x
        .vertices
        .iter()
        .map(|&v| {
            // coordinates in the RREF basis: coefficient j = bit pivots[j]
            let mut out = 0u64;
            for (j, &p) in pivots.iter().enumerate() {
                if v >> p & 1 == 1 {
                    out |= 1 << j;
                }
            }
            out
        })
        .collect();
    Rank1Complex { k: d, vertices, triangles: x.triangles.clone() }
}

/// One quotient step.
#[derive(Clone, Debug)]
pub struct QuotientStep {
    pub x: Rank1Complex,
    pub v: u64,
    /// Whether the counting hypothesis |span| >= n^2/2 + n/2 + 2 held. The
    /// step proceeds whenever a valid v exists; the flag records which
    /// regime guaranteed it.
    pub hypothesis_satisfied: bool,
}

/// Quotient the ambient span by a line spanned by a vector outside
/// {0} cup X(0) cup (X(0)+X(0)), chosen as the first valid vector in
/// ascending integer order. Preserves the poset incidence; ker G^T gains
/// exactly one dimension.
pub fn quotient_once(x: &Rank1Complex) -> Result<QuotientStep, HdxError> {
    let x = reduce_to_span(x);
    if x.k > 26 {
        return Err(HdxError::Size("quotient scan capped at span dimension 26".into()));
    }
    let n = x.vertices.len() as u128;
    let span_size = 1u128 << x.k;
    // n^2/2 + n/2 + 2 = n(n+1)/2 + 2, exact in integers.
    let needed = n * (n + 1) / 2 + 2;
    let hypothesis_satisfied = span_size >= needed;
    let mut forbidden: HashSet<u64> = HashSet::new();
    forbidden.insert(0);
    for (i, &a) in x.vertices.iter().enumerate() {
        forbidden.insert(a);
        for &b in &x.vertices[i + 1..] {
            forbidden.insert(a ^ b);
        }
    }
    let v = (1u64..1 << x.k).find(|cand| !forbidden.contains(cand));
    let Some(v) = v else {
        if hypothesis_satisfied {
            return Err(HdxError::Complex(format!(
                "internal: hypothesis held ({span_size} >= {needed}) but no valid vector exists"
            )));
        }
        return Err(HdxError::Precondition(format!(
            "quotient hypothesis fails and no valid vector exists: |span| = {span_size} < {needed}"
        )));
    };
    // Basis completion with v last: pivot = lowest set bit of v; the other
    // basis vectors are the standard vectors away from the pivot. Dropping
    // the v-coordinate: w maps to squeeze(w ^ (w[p] ? v : 0), p).
    let p = v.trailing_zeros() as usize;
    let squeeze = |w: u64| -> u64 {
        let w = if w >> p & 1 == 1 { w ^ v } else { w };
        let low = w & ((1u64 << p) - 1);
        let high = w >> (p + 1);
        low | (high << p)
    };
    let vertices: Vec<u64> = x.vertices.iter().map(|&w| squeeze(w)).collect();
    let distinct: HashSet<u64> = vertices.iter().copied().collect();
    if distinct.len() != vertices.len() || distinct.contains(&0) {
        return Err(HdxError::Complex(
            "internal: quotient by a valid vector must keep vertices distinct and nonzero".into(),
        ));
    }
    let xq = Rank1Complex { k: x.k - 1, vertices, triangles: x.triangles.clone() };
    Ok(QuotientStep { x: xq, v, hypothesis_satisfied })
}

/// One record of the iterated-quotient trace.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientRecord {
    pub step: usize,
    pub v: u64,
    pub hypothesis_satisfied: bool,
    pub span_dim: usize,
    pub dim_quotient: usize,
    pub incidence_preserved: bool,
    pub skeleton_preserved: bool,
    /// dim H_1 of the Cayley complex, when k is small enough to compute.
    pub dim_h1_cayley: Option<usize>,
    pub h1_at_least_quotient: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientTrace {
    pub records: Vec<QuotientRecord>,
    pub stop_reason: Option<String>,
}

fn quotient_dim(x: &Rank1Complex) -> usize {
    let pair = build_code_pair(x);
    pair.dim_ker_gt() - pair.rank_h()
}

/// t successive quotients with per-step verification: dim(ker G^T / im H^T)
/// increments by exactly 1, the incidence (triangles) and 1-skeleton pairs
/// are unchanged, and dim H_1 of the Cayley complex (computed directly at
/// k <= 10) is at least the predicted quotient dimension.
pub fn quotient_iterate(x: &Rank1Complex, t: usize) -> Result<QuotientTrace, HdxError> {
    let mut cur = reduce_to_span(x);
    let base_tri = cur.triangles.clone();
    let base_pairs = cur.skeleton_pairs();
    let mut records = Vec::new();
    let mut prev_dim = quotient_dim(&cur);
    for step in 0..t {
        match quotient_once(&cur) {
            Ok(qs) => {
                let d = quotient_dim(&qs.x);
                if d != prev_dim + 1 {
                    return Err(HdxError::Complex(format!(
                        "quotient step {step} changed the dimension by {} instead of 1",
                        d as isize - prev_dim as isize
                    )));
                }
                let incidence_preserved = qs.x.triangles == base_tri;
                let skeleton_preserved = qs.x.skeleton_pairs() == base_pairs;
                let (h1, h1_ok) = if qs.x.k <= 10 {
                    let y = materialize_cayley_two(&qs.x)?;
                    let h1 = y.z1_dim() - y.b1_echelon().rank();
                    (Some(h1), Some(h1 >= d))
                } else {
                    (None, None)
                };
                records.push(QuotientRecord {
                    step,
                    v: qs.v,
                    hypothesis_satisfied: qs.hypothesis_satisfied,
                    span_dim: qs.x.k,
                    dim_quotient: d,
                    incidence_preserved,
                    skeleton_preserved,
                    dim_h1_cayley: h1,
                    h1_at_least_quotient: h1_ok,
                });
                prev_dim = d;
                cur = qs.x;
            }
            Err(e) => {
                return Ok(QuotientTrace {
                    records,
                    stop_reason: Some(format!("stopped at step {step}: {e}")),
                });
            }
        }
    }
    Ok(QuotientTrace { records, stop_reason: None })
}

/// Seeded generator of small connected rank-1 complexes: unions of 2-dim
/// subspaces through a common line, with all available triangles.
pub fn random_connected_rank1(seed: u64, max_k: usize, max_vertices: usize) -> Rank1Complex {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let k = rng.gen_range(2..=max_k);
        let hub = rng.gen_range(1..1u64 << k);
        let planes = rng.gen_range(1..=3usize);
        let mut verts: HashSet<u64> = HashSet::new();
        verts.insert(hub);
        for _ in 0..planes {
            let mut other = rng.gen_range(1..1u64 << k);
            if other == hub {
                other ^= 1;
            }
            if other == 0 || other == hub {
                continue;
            }
            verts.insert(other);
            verts.insert(other ^ hub);
        }
        if verts.len() > max_vertices || verts.len() < 3 {
            continue;
        }
        let mut vertices: Vec<u64> = verts.into_iter().collect();
        vertices.sort_unstable();
        let idx: HashMap<u64, u32> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let mut triangles = Vec::new();
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                let c = vertices[i] ^ vertices[j];
                if let Some(&ci) = idx.get(&c) {
                    if ci > j as u32 {
                        triangles.push([i as u32, j as u32, ci]);
                    }
                }
            }
        }
        if triangles.is_empty() {
            continue;
        }
        let x = Rank1Complex { k, vertices, triangles };
        let g = crate::walks::WeightedGraph::uniform(x.vertices.len(), x.skeleton_pairs());
        if !g.is_connected() {
            continue;
        }
        return x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::GradedComplex;

    #[test]
    fn boundary_examples() {
        // triangle boundary (3 edges on 3 vertices): rank of boundary_1 = 2
        let c = GradedComplex::simplicial_closure(&[vec![0, 1], vec![1, 2], vec![0, 2]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let b1 = boundary_matrix(&c, 1).unwrap();
        assert_eq!(b1.rank(), 2);
        assert_eq!(homology_dim(&c, 1).unwrap(), 1); // a circle

        // boundary_0 is the all-ones row
        let b0 = boundary_matrix(&c, 0).unwrap();
        assert_eq!(b0.rows, 1);
        assert!((0..3).all(|i| b0.get(0, i)));

        // tetrahedron boundary complex: H1 = 0, H2 = 1
        let mut tops = Vec::new();
        for a in 0..4u32 {
            let t: Vec<u32> = (0..4).filter(|&x| x != a).collect();
            tops.push(t);
        }
        let s2 = GradedComplex::simplicial_closure(&tops).unwrap().with_uniform_top_weights().unwrap();
        assert!(boundary_square_zero(&s2).unwrap());
        assert_eq!(homology_dim(&s2, 1).unwrap(), 0);
        assert_eq!(homology_dim(&s2, 2).unwrap(), 1);

        // disjoint union doubles Betti numbers
        let two = GradedComplex::simplicial_closure(&[vec![0, 1], vec![1, 2], vec![0, 2], vec![3, 4], vec![4, 5], vec![3, 5]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        assert_eq!(homology_dim(&two, 1).unwrap(), 2);
    }

    #[test]
    fn hommodswap_triangle_and_triangle_free() {
        // X = one triangle in F2^2: both sides dimension 0
        let x = Rank1Complex::new(2, vec![1, 2, 3], vec![[0, 1, 2]]).unwrap();
        let rep = hommodswap_check(&x).unwrap();
        assert!(rep.dims_equal && rep.phi_psi_identity && rep.psi_phi_identity);
        assert_eq!(rep.dim_h1_mod_swap, 0);
        assert_eq!(rep.dim_h1, 0);

        // X triangle-free on {e1, e2, e1+e2}: quotient dimension 1
        let x = Rank1Complex::new(2, vec![1, 2, 3], vec![]).unwrap();
        let rep = hommodswap_check(&x).unwrap();
        assert!(rep.dims_equal && rep.phi_psi_identity && rep.psi_phi_identity);
        assert_eq!(rep.dim_h1_mod_swap, 1);
        assert_eq!(rep.dim_ker_gt_mod_ht, 1);
    }

    #[test]
    fn hommodswap_randomized() {
        for seed in 0..25 {
            let x = random_connected_rank1(seed, 6, 14);
            let rep = hommodswap_check(&x).unwrap();
            assert!(rep.dims_equal, "seed {seed}: {rep:?}");
            assert!(rep.phi_psi_identity && rep.psi_phi_identity, "seed {seed}");
            assert!(rep.dim_h1 >= rep.dim_ker_gt_mod_ht);
        }
    }

    #[test]
    fn quotient_example_three_basis_vectors() {
        // X(0) = {e1, e2, e3} in F2^3: the only valid vector is e1+e2+e3
        let x = Rank1Complex::new(3, vec![1, 2, 4], vec![]).unwrap();
        let qs = quotient_once(&x).unwrap();
        assert_eq!(qs.v, 0b111);
        assert_eq!(qs.x.k, 2);
        // images satisfy x1 + x2 + x3 = 0, giving ker G'^T = span{(1,1,1)}
        assert_eq!(qs.x.vertices[0] ^ qs.x.vertices[1] ^ qs.x.vertices[2], 0);
        assert_eq!(quotient_dim(&qs.x), 1);
    }

    #[test]
    fn quotient_hypothesis_boundary() {
        // |X(0)| = 3 needs |span| >= 9/2 + 3/2 + 2 = 8: F2^3 exactly meets it
        let x = Rank1Complex::new(3, vec![1, 2, 4], vec![]).unwrap();
        let n = 3u128;
        assert_eq!(n * (n + 1) / 2 + 2, 8);
        let qs = quotient_once(&x).unwrap();
        assert!(qs.hypothesis_satisfied);
    }

    #[test]
    fn quotient_iterate_trace() {
        // 6 independent-ish vertices in a 6-dim span inside F2^10, no
        // triangles: three quotients, dims 0 -> 1 -> 2 -> 3.
        let x = Rank1Complex::new(
            10,
            vec![1 << 0, 1 << 1, 1 << 2, 1 << 3, 1 << 4, 1 << 5],
            vec![],
        )
        .unwrap();
        let tr = quotient_iterate(&x, 3).unwrap();
        assert!(tr.stop_reason.is_none(), "{:?}", tr.stop_reason);
        assert_eq!(tr.records.len(), 3);
        for (i, r) in tr.records.iter().enumerate() {
            assert_eq!(r.dim_quotient, i + 1);
            assert!(r.incidence_preserved && r.skeleton_preserved);
            assert_eq!(r.h1_at_least_quotient, Some(true));
        }
        // t = 0 is the identity
        let tr0 = quotient_iterate(&x, 0).unwrap();
        assert!(tr0.records.is_empty());
    }
}
