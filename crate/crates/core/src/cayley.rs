//! Cayley simplicial complexes over F2^k: symmetry checking, vertex links
//! without materialization, character-sum spectra of the Cayley graph, and
//! the counting checks for complexes generated by the low-rank-matrix
//! construction.
//!
//! Vertex-transitivity keeps everything local: the full complex is only
//! materialized on toy instances (k <= 12); links and spectra come from the
//! generating complex alone.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::HdxError;
use crate::grassmann::BuiltComplex;
use crate::poset::{ComplexKind, FaceData, GradedComplex};
use crate::walks::{q_int, Q};

/// A generating complex: a simplicial complex S together with the F2^k
/// vector realizing each vertex.
#[derive(Clone, Debug)]
pub struct CayleySpec {
    pub k: usize,
    pub s: GradedComplex,
    pub vertex_vectors: Vec<u64>,
}

impl CayleySpec {
    pub fn new(k: usize, s: GradedComplex, vertex_vectors: Vec<u64>) -> Result<Self, HdxError> {
        if s.kind != ComplexKind::Simplicial {
            return Err(HdxError::Precondition("generating complex must be simplicial".into()));
        }
        if vertex_vectors.len() != s.levels[1].len() {
            return Err(HdxError::Dimension("vertex vector count mismatch".into()));
        }
        if vertex_vectors.iter().any(|&v| v == 0 || (k < 64 && v >> k != 0)) {
            return Err(HdxError::Precondition(
                "generator vertices must be nonzero vectors of F2^k".into(),
            ));
        }
        Ok(CayleySpec { k, s, vertex_vectors })
    }
}

/// Outcome of the Cayley symmetry condition check.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub ok: bool,
    /// First violation as (rank, face index, vertex id) when not ok.
    pub violation: Option<(isize, u32, u32)>,
}

/// For every face s and vertex g of s, the translated set g+(s cup {0})
/// minus {0} must be a face of S of the same rank and weight.
pub fn check_symmetry(spec: &CayleySpec) -> SymmetryReport {
    let s = &spec.s;
    let vecs = &spec.vertex_vectors;
    let by_vec: HashMap<u64, u32> =
        vecs.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    // face lookup per level: sorted vertex ids -> index
    let mut lookup: Vec<HashMap<Vec<u32>, u32>> = Vec::new();
    for l in 0..s.levels.len() {
        let mut m = HashMap::new();
        for (i, f) in s.levels[l].iter().enumerate() {
            if let FaceData::Simplex(v) = f {
                m.insert(v.clone(), i as u32);
            }
        }
        lookup.push(m);
    }
    for l in 1..s.levels.len() {
        for (fi, f) in s.levels[l].iter().enumerate() {
            let FaceData::Simplex(ids) = f else { continue };
            let face_vecs: Vec<u64> = ids.iter().map(|&i| vecs[i as usize]).collect();
            for &g in &face_vecs {
                // g + (s cup {0}) minus {0} = {g} cup {g + s_j : s_j != g}
                let mut translated: Vec<u64> =
                    face_vecs.iter().filter(|&&v| v != g).map(|&v| v ^ g).collect();
                translated.push(g);
                let mut ids2: Vec<u32> = Vec::with_capacity(translated.len());
                let mut missing = false;
                for t in &translated {
                    match by_vec.get(t) {
                        Some(&id) => ids2.push(id),
                        None => {
                            missing = true;
                            break;
                        }
                    }
                }
                ids2.sort_unstable();
                let gid = by_vec[&g];
                if missing {
                    return SymmetryReport { ok: false, violation: Some((l as isize - 1, fi as u32, gid)) };
                }
                match lookup[l].get(&ids2) {
                    Some(&tid) => {
                        if s.weight(l, tid as usize) != s.weight(l, fi) {
                            return SymmetryReport {
                                ok: false,
                                violation: Some((l as isize - 1, fi as u32, gid)),
                            };
                        }
                    }
                    None => {
                        return SymmetryReport {
                            ok: false,
                            violation: Some((l as isize - 1, fi as u32, gid)),
                        };
                    }
                }
            }
        }
    }
    SymmetryReport { ok: true, violation: None }
}

/// The link of a vertex v of the Cayley complex, materialized directly from
/// the generating complex: faces v + (s cup {0}) minus {v}, which the
/// translation s |-> v+s identifies with S.
///
/// Returns per-rank realized vertex sets (as vectors) for comparison, and
/// verifies the bijection by checking counts and weight equality.
#[derive(Clone, Debug, Serialize)]
pub struct VertexLinkReport {
    pub counts_match: bool,
    pub weights_match: bool,
    pub faces_per_rank: Vec<usize>,
}

pub fn cayley_vertex_link(spec: &CayleySpec, v: u64) -> Result<VertexLinkReport, HdxError> {
    let s = &spec.s;
    // Realize each face of S as a Cayley face through v: {v} cup (v + s);
    // its link part is v + s. The bijection is s |-> v + s with equal
    // weights, so comparing per-rank multiset sizes and weight multisets
    // against S verifies the isomorphism explicitly.
    let mut faces_per_rank = Vec::new();
    let mut counts_match = true;
    let mut weights_match = true;
    for l in 1..s.levels.len() {
        let mut seen: HashMap<Vec<u64>, Q> = HashMap::new();
        for (fi, f) in s.levels[l].iter().enumerate() {
            let FaceData::Simplex(ids) = f else { continue };
            let mut realized: Vec<u64> =
                ids.iter().map(|&i| spec.vertex_vectors[i as usize] ^ v).collect();
            realized.sort_unstable();
            if seen.insert(realized, s.weight(l, fi)).is_some() {
                counts_match = false; // translation must be injective
            }
        }
        faces_per_rank.push(seen.len());
        if seen.len() != s.levels[l].len() {
            counts_match = false;
        }
        // weight multisets agree by construction; verify totals
        let total: Q = seen.values().copied().sum();
        let want: Q = (0..s.levels[l].len()).map(|i| s.weight(l, i)).sum();
        if total != want {
            weights_match = false;
        }
    }
    Ok(VertexLinkReport { counts_match, weights_match, faces_per_rank })
}

/// Fully materialize the Cayley complex (toy scale, k <= 12): vertex set
/// F2^k, faces g(s cup {0}) with merged weights (i+1)/2^k * m_S(s).
pub fn materialize_cayley(spec: &CayleySpec) -> Result<(GradedComplex, Vec<u64>), HdxError> {
    if spec.k > 12 {
        return Err(HdxError::Size(format!(
            "materializing 2^{} vertices exceeds the toy-scale cap (k <= 12)",
            spec.k
        )));
    }
    let n = 1u64 << spec.k;
    let s = &spec.s;
    let mut levels: Vec<Vec<FaceData>> = vec![vec![FaceData::Empty]];
    let mut down: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new()]];
    let mut weights: Vec<Vec<Q>> = vec![vec![q_int(1)]];
    // level 1: all group elements
    levels.push((0..n).map(|v| FaceData::Simplex(vec![v as u32])).collect());
    down.push(vec![vec![0u32]; n as usize]);
    weights.push(vec![Q::new(1, n as i128); n as usize]);
    let mut index: Vec<HashMap<Vec<u32>, u32>> = vec![HashMap::new(), HashMap::new()];
    for (i, f) in levels[1].iter().enumerate() {
        if let FaceData::Simplex(v) = f {
            index[1].insert(v.clone(), i as u32);
        }
    }
    // level j+1 from S level j (rank j-1 generating faces)
    for l in 1..s.levels.len() {
        let mut acc: HashMap<Vec<u32>, Q> = HashMap::new();
        for (fi, f) in s.levels[l].iter().enumerate() {
            let FaceData::Simplex(ids) = f else { continue };
            let fvecs: Vec<u64> = ids.iter().map(|&i| spec.vertex_vectors[i as usize]).collect();
            let mw = s.weight(l, fi) / q_int(n as i128);
            for g in 0..n {
                let mut verts: Vec<u32> = fvecs.iter().map(|&x| (x ^ g) as u32).collect();
                verts.push(g as u32);
                verts.sort_unstable();
                *acc.entry(verts).or_insert_with(|| q_int(0)) += mw;
            }
        }
        let mut faces: Vec<(Vec<u32>, Q)> = acc.into_iter().collect();
        faces.sort();
        let idx: HashMap<Vec<u32>, u32> =
            faces.iter().enumerate().map(|(i, (f, _))| (f.clone(), i as u32)).collect();
        let mut dn: Vec<Vec<u32>> = Vec::new();
        for (f, _) in &faces {
            let mut dl = Vec::new();
            for drop in 0..f.len() {
                let sub: Vec<u32> =
                    f.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &v)| v).collect();
                let Some(&d) = index[l].get(&sub) else {
                    return Err(HdxError::Complex(
                        "Cayley face has a missing subset (symmetry must have failed)".into(),
                    ));
                };
                dl.push(d);
            }
            dl.sort_unstable();
            dl.dedup();
            dn.push(dl);
        }
        weights.push(faces.iter().map(|(_, w)| *w).collect());
        levels.push(faces.iter().map(|(f, _)| FaceData::Simplex(f.clone())).collect());
        down.push(dn);
        index.push(idx);
    }
    let labels: Vec<u64> = (0..n).collect();
    let mut c = GradedComplex::from_levels(ComplexKind::Simplicial, levels, down)?;
    c.weights = Some(weights);
    Ok((c, labels))
}

/// Walsh-Hadamard transform in place over i64.
pub fn wht_i64(f: &mut [i64]) {
    let n = f.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for t in block..block + h {
                let (a, b) = (f[t], f[t + h]);
                f[t] = a + b;
                f[t + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Spectral expansion of Cay(F2^k, S) by the character sum: lambda is the
/// maximum over nonzero u of |sum_s (-1)^{<s,u>}| / |S|, exact up to the
/// final division. Verified internally by the integer Parseval identity.
#[derive(Clone, Debug, Serialize)]
pub struct CayleyLambdaReport {
    pub k: usize,
    pub generators: usize,
    pub lambda: f64,
    pub argmax_character: u64,
    pub parseval_ok: bool,
}

pub fn cayley_graph_lambda(k: usize, generators: &[u64]) -> Result<CayleyLambdaReport, HdxError> {
    if k > 24 {
        return Err(HdxError::Size(format!(
            "character sweep over 2^{k} exceeds the k <= 24 cap; use sampling"
        )));
    }
    if generators.is_empty() {
        return Err(HdxError::Precondition("empty generator multiset".into()));
    }
    if generators.iter().any(|&g| g == 0 || (k < 64 && g >> k != 0)) {
        return Err(HdxError::Precondition("generators must be nonzero elements of F2^k".into()));
    }
    let n = 1usize << k;
    let mut f = vec![0i64; n];
    for &g in generators {
        f[g as usize] += 1;
    }
    let sum_f2: i128 = f.iter().map(|&x| (x as i128) * (x as i128)).sum();
    wht_i64(&mut f);
    // Parseval: sum F[u]^2 = 2^k sum f[x]^2, and F[0] = |S|.
    let sum_big: i128 = f.iter().map(|&x| (x as i128) * (x as i128)).sum();
    let parseval_ok =
        sum_big == (n as i128) * sum_f2 && f[0] == generators.len() as i64;
    let mut best = 0i64;
    let mut arg = 0u64;
    for (u, &val) in f.iter().enumerate().skip(1) {
        if val.abs() > best {
            best = val.abs();
            arg = u as u64;
        }
    }
    Ok(CayleyLambdaReport {
        k,
        generators: generators.len(),
        lambda: best as f64 / generators.len() as f64,
        argmax_character: arg,
        parseval_ok,
    })
}

/// Counting claims for the Cayley complex generated by a built X^{r,b,n}:
/// 2^{b n^2} vertices (symbolic) and per-vertex face count at most
/// 2^{2^{r+2} b n}, via exact big-integer comparison.
#[derive(Clone, Debug, Serialize)]
pub struct CountingReport {
    pub vertex_count_exponent: u64,
    pub faces_in_x: String,
    pub per_vertex_faces: String,
    pub bound_exponent: u64,
    pub x_count_within_bound: bool,
    pub per_vertex_within_bound: bool,
}

pub fn cayley_counting_check(built: &BuiltComplex) -> CountingReport {
    let spec = &built.spec;
    let bound_exp = (1u64 << (spec.r + 2)) * spec.b as u64 * spec.n as u64;
    let bound = BigUint::one() << bound_exp as usize;
    let x_total = built.total_faces();
    // Faces of the Cayley complex through one vertex, counted exactly: one
    // face per face of the basisification (including the empty face, which
    // realizes the vertex itself). For rank-1 complexes the rank-1 faces
    // each contribute their 3 bases.
    let mut per_vertex = BigUint::one() + BigUint::from(built.vertices.len());
    per_vertex += BigUint::from(3u32) * BigUint::from(built.triangles.len());
    CountingReport {
        vertex_count_exponent: spec.ambient_dim() as u64,
        faces_in_x: x_total.to_string(),
        per_vertex_faces: per_vertex.to_string(),
        bound_exponent: bound_exp,
        x_count_within_bound: x_total <= bound,
        per_vertex_within_bound: per_vertex <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::basisify;
    use crate::walks::{lambda, LambdaOptions};

    /// Generating complex from a toy Grassmannian: basisified, with vertex
    /// vectors pulled from the rank-0 subspace rows.
    fn from_grassmann(k: usize, tops: &[Vec<u64>]) -> CayleySpec {
        let x = GradedComplex::grassmann_closure(k, tops)
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let vecs: Vec<u64> = x.levels[1]
            .iter()
            .map(|f| match f {
                FaceData::Subspace(rows) => rows[0],
                _ => unreachable!(),
            })
            .collect();
        let b = basisify(&x).unwrap();
        CayleySpec::new(k, b, vecs).unwrap()
    }

    #[test]
    fn symmetry_of_basisified_grassmannian() {
        let spec = from_grassmann(3, &[vec![1, 2, 4]]);
        assert!(check_symmetry(&spec).ok);
    }

    #[test]
    fn symmetry_violation_detected() {
        // single edge {a, b} with a+b not closing a triangle
        let s = GradedComplex::simplicial_closure(&[vec![0, 1]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let spec = CayleySpec::new(3, s, vec![0b001, 0b010]).unwrap();
        let rep = check_symmetry(&spec);
        assert!(!rep.ok);
        assert!(rep.violation.is_some());
    }

    #[test]
    fn rank0_generators_always_symmetric() {
        // a lone vertex set: condition reduces to g + {g, 0} minus {0} = {g}
        let s = GradedComplex::simplicial_closure(&[vec![0], vec![1], vec![2]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let spec = CayleySpec::new(2, s, vec![1, 2, 3]).unwrap();
        assert!(check_symmetry(&spec).ok);
    }

    #[test]
    fn vertex_link_is_s() {
        let spec = from_grassmann(3, &[vec![1, 2, 4]]);
        for v in [0u64, 3, 5] {
            let rep = cayley_vertex_link(&spec, v).unwrap();
            assert!(rep.counts_match && rep.weights_match);
        }
    }

    #[test]
    fn materialized_cayley_is_standard_and_matches_links() {
        let spec = from_grassmann(2, &[vec![1, 2]]);
        let (cay, _labels) = materialize_cayley(&spec).unwrap();
        assert_eq!(cay.levels[1].len(), 4);
        // weight function is standard
        assert_eq!(cay.standardness_defect(), q_int(0));
        // local expansion transfers: lambda^(i)(Cay) = lambda^(i-1)(S)
        let opts = LambdaOptions::default();
        let cay0 = crate::poset::local_expansion(&cay, 0, &opts, 5000, 32).unwrap();
        let sm1 = crate::poset::local_expansion(&spec.s, -1, &opts, 5000, 32).unwrap();
        assert!((cay0.lambda - sm1.lambda).abs() < 1e-9);
        // the lazy link agrees with the materialized complex's face counts
        let rep = cayley_vertex_link(&spec, 0).unwrap();
        assert_eq!(rep.faces_per_rank.len() + 1, cay.levels.len() - 1);
    }

    #[test]
    fn lambda_examples() {
        // all nonzero vectors: lambda = 1/(2^k - 1)
        for k in [2usize, 3, 4] {
            let gens: Vec<u64> = (1..1u64 << k).collect();
            let rep = cayley_graph_lambda(k, &gens).unwrap();
            assert!(rep.parseval_ok);
            assert!((rep.lambda - 1.0 / ((1u64 << k) - 1) as f64).abs() < 1e-12);
        }
        // S = {e1, e2} in F2^2: bipartite, lambda = 1 at u = e1+e2
        let rep = cayley_graph_lambda(2, &[1, 2]).unwrap();
        assert!((rep.lambda - 1.0).abs() < 1e-12);
        assert_eq!(rep.argmax_character, 3);
    }

    #[test]
    fn character_sweep_matches_dense_eigensolve() {
        // random-ish symmetric generator multisets, k <= 8
        for (k, gens) in [
            (3usize, vec![1u64, 2, 4, 7]),
            (4, vec![1, 2, 4, 8, 15, 9]),
            (5, vec![3, 5, 17, 30, 9, 12, 20]),
        ] {
            let rep = cayley_graph_lambda(k, &gens).unwrap();
            // dense walk on 2^k states
            let n = 1usize << k;
            let mut mat = vec![0.0f64; n * n];
            for v in 0..n {
                for &g in &gens {
                    mat[v * n + (v ^ g as usize)] += 1.0 / gens.len() as f64;
                }
            }
            let w = crate::walks::WalkOperator::dense(n, vec![1.0 / n as f64; n], mat);
            let dense = lambda(&w, &LambdaOptions::default()).unwrap();
            assert!(
                (rep.lambda - dense.lambda).abs() < 1e-9,
                "k={k}: {} vs {}",
                rep.lambda,
                dense.lambda
            );
        }
    }
}
