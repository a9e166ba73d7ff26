//! The coding view of rank-1 F2-Grassmannian complexes: the generator
//! matrix G (rows = vertices as F2^k vectors) and parity-check matrix H
//! (one weight-3 row per rank-1 face), the universal cover realizing
//! ker H as a generator code, bias and balance of the vertex multiset, and
//! the expansion-to-distance window check.

use std::collections::HashSet;

use serde::Serialize;

use crate::bits::Echelon;
use crate::cayley;
use crate::error::HdxError;
use crate::grassmann::BuiltComplex;

/// A rank-1 F2-Grassmannian complex in coding form: vertices as vectors of
/// F2^k and rank-1 faces as sorted vertex-index triples (the three nonzero
/// elements of each 2-dimensional face).
#[derive(Clone, Debug)]
pub struct Rank1Complex {
    pub k: usize,
    pub vertices: Vec<u64>,
    pub triangles: Vec<[u32; 3]>,
}

impl Rank1Complex {
    pub fn new(k: usize, vertices: Vec<u64>, triangles: Vec<[u32; 3]>) -> Result<Self, HdxError> {
        let distinct: HashSet<u64> = vertices.iter().copied().collect();
        if distinct.len() != vertices.len() || distinct.contains(&0) {
            return Err(HdxError::Precondition("vertices must be distinct and nonzero".into()));
        }
        for t in &triangles {
            if t.iter().any(|&i| i as usize >= vertices.len()) {
                return Err(HdxError::Dimension("triangle index out of range".into()));
            }
            let (a, b, c) =
                (vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]);
            if a ^ b ^ c != 0 {
                return Err(HdxError::Precondition(
                    "triangle elements must be the nonzero elements of a 2-dim subspace".into(),
                ));
            }
        }
        Ok(Rank1Complex { k, vertices, triangles })
    }

    pub fn from_built(built: &BuiltComplex) -> Self {
        Rank1Complex {
            k: built.spec.ambient_dim(),
            vertices: built.vertices.clone(),
            triangles: built.triangles.clone(),
        }
    }

    /// F2 dimension of the span of the vertices.
    pub fn span_dim(&self) -> usize {
        let mut ech = Echelon::new(self.k);
        for &v in &self.vertices {
            ech.insert(vec![v]);
        }
        ech.rank()
    }

    /// Number of rank-1 faces through each vertex.
    pub fn vertex_face_counts(&self) -> Vec<u32> {
        let mut c = vec![0u32; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                c[v as usize] += 1;
            }
        }
        c
    }

    /// The 1-skeleton as unordered vertex-index pairs (each pair lies in
    /// exactly one 2-dimensional face, so masses are uniform).
    pub fn skeleton_pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs = Vec::with_capacity(3 * self.triangles.len());
        for t in &self.triangles {
            pairs.push((t[0], t[1]));
            pairs.push((t[0], t[2]));
            pairs.push((t[1], t[2]));
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

/// The pair (G, H) in explicit form: G rows are the vertices, H rows the
/// triangle indicators. H G = 0 always (the three elements of a 2-dim
/// subspace sum to zero).
#[derive(Clone, Debug)]
pub struct CodePair {
    pub x: Rank1Complex,
    /// Echelon of the row space of H (over F2^{X(0)}).
    h_row_space: Echelon,
}

pub fn build_code_pair(x: &Rank1Complex) -> CodePair {
    let n = x.vertices.len();
    let mut ech = Echelon::new(n);
    for t in &x.triangles {
        ech.insert_bits(&[t[0] as usize, t[1] as usize, t[2] as usize]);
    }
    CodePair { x: x.clone(), h_row_space: ech }
}

impl CodePair {
    /// Exact check that H G = 0.
    pub fn hg_is_zero(&self) -> bool {
        self.x.triangles.iter().all(|t| {
            self.x.vertices[t[0] as usize]
                ^ self.x.vertices[t[1] as usize]
                ^ self.x.vertices[t[2] as usize]
                == 0
        })
    }

    /// Every row of H has Hamming weight exactly 3.
    pub fn rows_weight3(&self) -> bool {
        self.x.triangles.iter().all(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
    }

    pub fn rank_g(&self) -> usize {
        self.x.span_dim()
    }

    pub fn rank_h(&self) -> usize {
        self.h_row_space.rank()
    }

    pub fn dim_ker_h(&self) -> usize {
        self.x.vertices.len() - self.rank_h()
    }

    /// dim ker G^T = |X(0)| - rank G.
    pub fn dim_ker_gt(&self) -> usize {
        self.x.vertices.len() - self.rank_g()
    }

    /// Basis of ker H as indicator words over F2^{X(0)}.
    pub fn ker_h_basis(&self) -> Vec<Vec<u64>> {
        let n = self.x.vertices.len();
        let words = (n + 63) / 64;
        let pivots = self.h_row_space.pivots();
        let mut is_pivot = vec![false; n];
        for &p in pivots {
            is_pivot[p] = true;
        }
        let rows = self.h_row_space.basis_rows();
        let mut out = Vec::new();
        for free in 0..n {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![0u64; words];
            v[free / 64] |= 1 << (free % 64);
            for (ri, &p) in pivots.iter().enumerate() {
                if rows[ri][free / 64] >> (free % 64) & 1 == 1 {
                    v[p / 64] |= 1 << (p % 64);
                }
            }
            out.push(v);
        }
        out
    }

    /// Is the given word (over F2^{X(0)}) in ker H?
    pub fn in_ker_h(&self, w: &[u64]) -> bool {
        self.x.triangles.iter().all(|t| {
            let mut parity = 0u32;
            for &i in t {
                parity ^= (w[i as usize / 64] >> (i as usize % 64) & 1) as u32;
            }
            parity == 0
        })
    }
}

/// The universal cover: a rank-1 complex with the same incidence H whose
/// generator code is exactly ker H. Vertices are the columns of a reduced-
/// echelon generator matrix of ker H.
pub fn universal_cover(x: &Rank1Complex) -> Result<Rank1Complex, HdxError> {
    let pair = build_code_pair(x);
    let basis = pair.ker_h_basis();
    let d = basis.len();
    if d > 64 {
        return Err(HdxError::Size(format!("cover ambient dimension {d} exceeds 64")));
    }
    let n = x.vertices.len();
    let mut vertices = vec![0u64; n];
    for (row, b) in basis.iter().enumerate() {
        for (i, v) in vertices.iter_mut().enumerate() {
            if b[i / 64] >> (i % 64) & 1 == 1 {
                *v |= 1 << row;
            }
        }
    }
    if let Some(z) = vertices.iter().position(|&v| v == 0) {
        return Err(HdxError::Precondition(format!(
            "vertex {z} is forced to zero in the cover (degenerate kernel coordinate)"
        )));
    }
    let distinct: HashSet<u64> = vertices.iter().copied().collect();
    if distinct.len() != vertices.len() {
        return Err(HdxError::Precondition(
            "two vertices coincide in the cover (kernel coordinates collide)".into(),
        ));
    }
    Rank1Complex::new(d, vertices, x.triangles.clone())
}

/// Bias of a generator multiset: the maximum nonzero-character imbalance,
/// through the same character-sum kernel as the Cayley-graph spectrum.
pub fn bias(k: usize, generators: &[u64]) -> Result<f64, HdxError> {
    Ok(cayley::cayley_graph_lambda(k, generators)?.lambda)
}

/// Check that all nonzero codewords of the code spanned by `basis` (words
/// of length `n` bits) have weight within [(1-eps) n/2, (1+eps) n/2].
/// Gray-code enumeration with incremental weight updates.
#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub dim: usize,
    pub n: usize,
    pub min_weight: u64,
    pub max_weight: u64,
    pub balanced: bool,
}

pub fn balanced_check(n: usize, basis: &[Vec<u64>], eps: f64) -> Result<BalanceReport, HdxError> {
    let d = basis.len();
    if d > 24 {
        return Err(HdxError::Size(format!("codeword sweep over 2^{d} exceeds the cap")));
    }
    let words = (n + 63) / 64;
    for b in basis {
        if b.len() != words {
            return Err(HdxError::Dimension("basis word length mismatch".into()));
        }
    }
    let lo = ((1.0 - eps) * n as f64 / 2.0).max(0.0);
    let hi = (1.0 + eps) * n as f64 / 2.0;
    let mut cur = vec![0u64; words];
    let mut weight = 0u64;
    let (mut minw, mut maxw) = (u64::MAX, 0u64);
    let mut balanced = true;
    for g in 1u64..1 << d {
        // Gray code: flip the basis vector at the lowest changing bit.
        let flip = (g ^ (g >> 1)) ^ ((g - 1) ^ ((g - 1) >> 1));
        let j = flip.trailing_zeros() as usize;
        for (c, b) in cur.iter_mut().zip(&basis[j]) {
            *c ^= b;
        }
        weight = cur.iter().map(|w| w.count_ones() as u64).sum();
        minw = minw.min(weight);
        maxw = maxw.max(weight);
        if (weight as f64) < lo - 1e-9 || (weight as f64) > hi + 1e-9 {
            balanced = false;
        }
    }
    let _ = weight;
    Ok(BalanceReport { dim: d, n, min_weight: minw, max_weight: maxw, balanced })
}

/// The expansion-to-distance check: with measured 1-skeleton expansion
/// lambda, the vertex multiset must be lambda/(1-lambda)-biased, and (when
/// the code dimension permits a sweep) all nonzero codeword weights of im G
/// must lie in the corresponding window. Requires regularity: every vertex
/// in the same number of rank-1 faces.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub regular: bool,
    pub lambda: f64,
    pub eps_bound: f64,
    pub measured_bias: f64,
    pub bias_within: bool,
    pub window: Option<BalanceReport>,
    pub skipped: Option<String>,
}

pub fn expansion_to_distance_check(
    x: &Rank1Complex,
    lambda: f64,
) -> Result<DistanceReport, HdxError> {
    let counts = x.vertex_face_counts();
    let regular = counts.windows(2).all(|w| w[0] == w[1]);
    if !regular {
        return Ok(DistanceReport {
            regular,
            lambda,
            eps_bound: f64::NAN,
            measured_bias: f64::NAN,
            bias_within: false,
            window: None,
            skipped: Some("complex is irregular; the balance equivalence assumption fails".into()),
        });
    }
    if lambda >= 1.0 {
        return Ok(DistanceReport {
            regular,
            lambda,
            eps_bound: f64::INFINITY,
            measured_bias: f64::NAN,
            bias_within: true,
            window: None,
            skipped: Some("lambda >= 1: the bound is vacuous".into()),
        });
    }
    let eps = lambda / (1.0 - lambda);
    let b = bias(x.k, &x.vertices)?;
    let bias_within = b <= eps + 1e-9;
    // Window sweep over im G: generator basis = echelon of the columns...
    // im G = { G u } with codeword coordinates indexed by vertices; a basis
    // is given by G e_j for an F2-basis of the span. Build basis codewords
    // from a spanning subset of coordinates.
    let n = x.vertices.len();
    let words = (n + 63) / 64;
    let mut span_ech = Echelon::new(x.k);
    let mut basis_cols: Vec<u64> = Vec::new();
    for &v in &x.vertices {
        if span_ech.insert(vec![v]) {
            basis_cols.push(v);
        }
    }
    let dim = basis_cols.len();
    let window = if dim <= 24 {
        // codeword for message u: bit i = <vertex_i, u>
        let mut basis_words: Vec<Vec<u64>> = Vec::new();
        // messages: dual basis to span basis is awkward; instead use the
        // messages e_1..e_k restricted to a spanning set of k' independent
        // characters. The code im G is spanned by the k columns of G, i.e.
        // by the coordinate functionals.
        let mut col_ech = Echelon::new(n);
        for bit in 0..x.k {
            let mut w = vec![0u64; words];
            for (i, &v) in x.vertices.iter().enumerate() {
                if v >> bit & 1 == 1 {
                    w[i / 64] |= 1 << (i % 64);
                }
            }
            if col_ech.insert(w.clone()) {
                basis_words.push(w);
            }
        }
        Some(balanced_check(n, &basis_words, eps)?)
    } else {
        None
    };
    Ok(DistanceReport {
        regular,
        lambda,
        eps_bound: eps,
        measured_bias: b,
        bias_within,
        window,
        skipped: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_complex() -> Rank1Complex {
        // X = one triangle {e1, e2, e1+e2} in F2^2
        Rank1Complex::new(2, vec![0b01, 0b10, 0b11], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn hg_zero_and_weights() {
        let x = triangle_complex();
        let pair = build_code_pair(&x);
        assert!(pair.hg_is_zero());
        assert!(pair.rows_weight3());
        assert_eq!(pair.rank_h(), 1);
        assert_eq!(pair.dim_ker_h(), 2);
        assert_eq!(pair.rank_g(), 2);
        // ker G^T = span{(1,1,1)} = im H^T: dims
        assert_eq!(pair.dim_ker_gt(), 1);
    }

    #[test]
    fn random_toys_hg_zero() {
        // Triple families built from genuine 2-dim subspaces satisfy HG=0 by
        // construction; regression across 100 random instances.
        let mut state = 0x2468u64;
        let mut rnd = |m: u64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 20 % m
        };
        for _ in 0..100 {
            let k = 4 + (rnd(3) % 3) as usize;
            let a = 1 + rnd((1 << k) - 1);
            let mut b = 1 + rnd((1 << k) - 1);
            if b == a {
                b = (a ^ 1).max(1);
            }
            if a == b || a ^ b == 0 {
                continue;
            }
            let verts = vec![a, b, a ^ b];
            let x = Rank1Complex::new(k, verts, vec![[0, 1, 2]]);
            if let Ok(x) = x {
                assert!(build_code_pair(&x).hg_is_zero());
            }
        }
    }

    #[test]
    fn cover_of_triangle() {
        let x = triangle_complex();
        let cover = universal_cover(&x).unwrap();
        // ker H has dimension 2; cover vertices span F2^2
        assert_eq!(cover.k, 2);
        assert_eq!(cover.span_dim(), 2);
        assert_eq!(cover.triangles, x.triangles);
        // im G-cover = ker H: dims agree and each kernel basis word matches
        let pair = build_code_pair(&x);
        assert_eq!(pair.dim_ker_h(), cover.span_dim());
        // idempotence up to code equality
        let cover2 = universal_cover(&cover).unwrap();
        assert_eq!(cover2.span_dim(), cover.span_dim());
        // the cover's generator code is contained in ker H
        let cpair = build_code_pair(&cover);
        let _ = cpair;
        for bit in 0..cover.k {
            let n = cover.vertices.len();
            let mut w = vec![0u64; (n + 63) / 64];
            for (i, &v) in cover.vertices.iter().enumerate() {
                if v >> bit & 1 == 1 {
                    w[i / 64] |= 1 << (i % 64);
                }
            }
            assert!(pair.in_ker_h(&w));
        }
    }

    #[test]
    fn cover_grows_span_for_triangle_free() {
        // X(1) empty, three independent-ish vertices: ker H = everything
        let x = Rank1Complex::new(2, vec![1, 2, 3], vec![]).unwrap();
        let cover = universal_cover(&x).unwrap();
        assert_eq!(cover.k, 3);
        assert_eq!(cover.span_dim(), 3);
    }

    #[test]
    fn bias_examples() {
        // standard basis of F2^2: u = (1,1) sees both generators, bias 1
        assert!((bias(2, &[1, 2]).unwrap() - 1.0).abs() < 1e-12);
        // all nonzero vectors of F2^3: bias = 1/7
        let gens: Vec<u64> = (1..8).collect();
        assert!((bias(3, &gens).unwrap() - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_code_unbalanced() {
        // basis = all-ones word of length 6: the nonzero codeword has
        // weight n, not balanced for any eps < 1
        let rep = balanced_check(6, &[vec![0b111111u64]], 0.5).unwrap();
        assert!(!rep.balanced);
        assert_eq!(rep.max_weight, 6);
        let rep = balanced_check(6, &[vec![0b111111u64]], 1.0).unwrap();
        assert!(rep.balanced);
    }

    #[test]
    fn gray_sweep_matches_direct() {
        // random small code: compare the Gray sweep extremes with direct
        // enumeration
        let basis = vec![vec![0b1011001u64], vec![0b0111010], vec![0b1100110]];
        let rep = balanced_check(7, &basis, 1.0).unwrap();
        let mut minw = u64::MAX;
        let mut maxw = 0;
        for m in 1u64..8 {
            let mut w = 0u64;
            for (j, b) in basis.iter().enumerate() {
                if m >> j & 1 == 1 {
                    w ^= b[0];
                }
            }
            minw = minw.min(w.count_ones() as u64);
            maxw = maxw.max(w.count_ones() as u64);
        }
        assert_eq!(rep.min_weight, minw);
        assert_eq!(rep.max_weight, maxw);
    }

    #[test]
    fn distance_check_on_regular_toy() {
        // complete Grassmannian on F2^3, rank 1 part: all 7 lines, all 7
        // planes: regular (each line in 3 planes); lambda of the skeleton
        // measurable densely.
        let mut triangles = Vec::new();
        let verts: Vec<u64> = (1..8).collect();
        for a in 1u64..8 {
            for b in a + 1..8 {
                let c = a ^ b;
                if c > b {
                    triangles.push([a as u32 - 1, b as u32 - 1, c as u32 - 1]);
                }
            }
        }
        let x = Rank1Complex::new(3, verts, triangles).unwrap();
        let counts = x.vertex_face_counts();
        assert!(counts.iter().all(|&c| c == 3));
        let g = crate::walks::WeightedGraph::uniform(7, x.skeleton_pairs());
        let lam = crate::walks::lambda(&g.walk_operator().unwrap(), &Default::default())
            .unwrap()
            .lambda;
        let rep = expansion_to_distance_check(&x, lam).unwrap();
        assert!(rep.regular);
        assert!(rep.bias_within, "bias {} vs bound {}", rep.measured_bias, rep.eps_bound);
        if let Some(w) = rep.window {
            assert!(w.balanced);
        }
    }
}
