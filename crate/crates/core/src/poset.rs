//! Generic pure graded weighted posets: faces per rank, cover lists,
//! standard weights, links, 1-skeleton graphs, local expansion,
//! basisification of F2-Grassmannian complexes, and numeric trickle-down
//! consistency checks.
//!
//! Levels are indexed by rank + 1: level 0 holds the single rank-(-1)
//! bottom face. Weights are exact rationals; they reach floating point only
//! inside the eigensolvers.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::HdxError;
use crate::walks::{self, q_int, LambdaOptions, Q, WalkOperator, WeightedGraph};

/// What the faces of a complex are made of; determines canonical forms and
/// which trickle-down factor applies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplexKind {
    Simplicial,
    /// F2-Grassmannian in ambient dimension k.
    GrassmannF2 { k: usize },
    MatrixPoset,
    Generic,
}

/// Canonical face payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceData {
    /// The unique rank-(-1) face.
    Empty,
    /// Sorted vertex ids.
    Simplex(Vec<u32>),
    /// Reduced-echelon basis rows of an F2 subspace, one u64 word per row
    /// (ambient dimension <= 64).
    Subspace(Vec<u64>),
    /// Flattened matrix entries.
    Matrix(Vec<u16>),
}

impl FaceData {
    pub fn simplex(mut v: Vec<u32>) -> FaceData {
        v.sort_unstable();
        v.dedup();
        FaceData::Simplex(v)
    }

    /// Canonicalize an F2 subspace basis to reduced echelon rows.
    pub fn subspace(rows: &[u64]) -> FaceData {
        FaceData::Subspace(rref_rows(rows))
    }
}

/// Reduced echelon form of F2 row vectors packed in u64, zero rows dropped,
/// rows ordered by pivot.
pub fn rref_rows(rows: &[u64]) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            let pivot = b & b.wrapping_neg();
            if v & pivot != 0 {
                v ^= b;
            }
        }
        if v != 0 {
            let pivot = v & v.wrapping_neg();
            for b in basis.iter_mut() {
                if *b & pivot != 0 {
                    *b ^= v;
                }
            }
            basis.push(v);
        }
    }
    basis.sort_unstable_by_key(|b| b.trailing_zeros());
    basis
}

/// All 2^d - 1 nonzero elements of the span of `rows`.
pub fn span_elements(rows: &[u64]) -> Vec<u64> {
    let d = rows.len();
    (1u64..1 << d)
        .map(|mask| {
            let mut acc = 0u64;
            for (j, &r) in rows.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    acc ^= r;
                }
            }
            acc
        })
        .collect()
}

/// Pure graded weighted poset with explicit cover lists.
#[derive(Clone, Debug)]
pub struct GradedComplex {
    pub kind: ComplexKind,
    /// levels[0] = [Empty]; levels[l] holds the rank-(l-1) faces.
    pub levels: Vec<Vec<FaceData>>,
    /// down[l][i] = indices into levels[l-1] covered by face i of level l.
    pub down: Vec<Vec<Vec<u32>>>,
    /// up[l][i] = indices into levels[l+1] covering face i of level l.
    pub up: Vec<Vec<Vec<u32>>>,
    /// weights[l][i] = m_X of face i at level l; per-level sums are 1.
    pub weights: Option<Vec<Vec<Q>>>,
}

impl GradedComplex {
    /// The poset rank of the complex (top level - 1).
    pub fn rank(&self) -> isize {
        self.levels.len() as isize - 2
    }

    pub fn level(&self, rank: isize) -> &[FaceData] {
        &self.levels[(rank + 1) as usize]
    }

    pub fn n_at(&self, rank: isize) -> usize {
        self.levels.get((rank + 1) as usize).map_or(0, |v| v.len())
    }

    fn derive_up(levels: &[Vec<FaceData>], down: &[Vec<Vec<u32>>]) -> Vec<Vec<Vec<u32>>> {
        let mut up: Vec<Vec<Vec<u32>>> = levels.iter().map(|l| vec![Vec::new(); l.len()]).collect();
        for l in 1..levels.len() {
            for (i, d) in down[l].iter().enumerate() {
                for &j in d {
                    up[l - 1][j as usize].push(i as u32);
                }
            }
        }
        up
    }

    /// Build from explicit levels and cover lists; validates shape, purity
    /// and cover-rank consistency.
    pub fn from_levels(
        kind: ComplexKind,
        levels: Vec<Vec<FaceData>>,
        down: Vec<Vec<Vec<u32>>>,
    ) -> Result<GradedComplex, HdxError> {
        if levels.is_empty() || levels[0].len() != 1 || levels[0][0] != FaceData::Empty {
            return Err(HdxError::Complex("level 0 must hold exactly the empty face".into()));
        }
        if down.len() != levels.len() {
            return Err(HdxError::Complex("down lists must match levels".into()));
        }
        for l in 1..levels.len() {
            if down[l].len() != levels[l].len() {
                return Err(HdxError::Complex(format!("down list count mismatch at level {l}")));
            }
            for (i, d) in down[l].iter().enumerate() {
                if d.is_empty() {
                    return Err(HdxError::Complex(format!(
                        "face {i} at level {l} covers nothing below"
                    )));
                }
                if d.iter().any(|&j| j as usize >= levels[l - 1].len()) {
                    return Err(HdxError::Complex("cover index out of range".into()));
                }
            }
        }
        let up = Self::derive_up(&levels, &down);
        let c = GradedComplex { kind, levels, down, up, weights: None };
        // purity: every non-top face is covered by something
        for l in 0..c.levels.len() - 1 {
            if let Some(i) = c.up[l].iter().position(|u| u.is_empty()) {
                return Err(HdxError::Complex(format!(
                    "face {i} at level {l} is not dominated by any top face"
                )));
            }
        }
        Ok(c)
    }

    /// Simplicial complex as the downward closure of the given top faces
    /// (vertex ids may be sparse; all faces of all dimensions are created).
    pub fn simplicial_closure(tops: &[Vec<u32>]) -> Result<GradedComplex, HdxError> {
        if tops.is_empty() {
            return Err(HdxError::Complex("need at least one top face".into()));
        }
        let dim = tops[0].len();
        if tops.iter().any(|t| t.len() != dim) {
            return Err(HdxError::Complex("top faces must share one dimension (pure)".into()));
        }
        let mut by_size: Vec<HashSet<Vec<u32>>> = vec![HashSet::new(); dim + 1];
        for t in tops {
            let mut s = t.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != dim {
                return Err(HdxError::Complex("top face has repeated vertices".into()));
            }
            for mask in 0u32..1 << dim {
                let sub: Vec<u32> =
                    (0..dim).filter(|&i| mask >> i & 1 == 1).map(|i| s[i]).collect();
                by_size[sub.len()].insert(sub);
            }
        }
        let mut levels: Vec<Vec<FaceData>> = Vec::new();
        let mut index: Vec<HashMap<Vec<u32>, u32>> = Vec::new();
        for sz in 0..=dim {
            let mut faces: Vec<Vec<u32>> = by_size[sz].iter().cloned().collect();
            faces.sort();
            let idx: HashMap<Vec<u32>, u32> =
                faces.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect();
            levels.push(if sz == 0 {
                vec![FaceData::Empty]
            } else {
                faces.iter().map(|f| FaceData::Simplex(f.clone())).collect()
            });
            index.push(idx);
        }
        let mut down: Vec<Vec<Vec<u32>>> = vec![vec![]; dim + 1];
        down[0] = vec![Vec::new()];
        for sz in 1..=dim {
            let mut lists = Vec::new();
            let mut faces: Vec<Vec<u32>> = by_size[sz].iter().cloned().collect();
            faces.sort();
            for f in &faces {
                let mut l = Vec::new();
                for drop in 0..sz {
                    let sub: Vec<u32> =
                        f.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &v)| v).collect();
                    l.push(index[sz - 1][&sub]);
                }
                l.sort_unstable();
                l.dedup();
                lists.push(l);
            }
            down[sz] = lists;
        }
        GradedComplex::from_levels(ComplexKind::Simplicial, levels, down)
    }

    /// F2-Grassmannian complex as the downward closure of top subspaces
    /// given by basis rows (ambient dimension k <= 64). Toy scale: every
    /// subspace of every top face is enumerated.
    pub fn grassmann_closure(k: usize, tops: &[Vec<u64>]) -> Result<GradedComplex, HdxError> {
        if k > 64 {
            return Err(HdxError::Size("ambient dimension above 64".into()));
        }
        if tops.is_empty() {
            return Err(HdxError::Complex("need at least one top subspace".into()));
        }
        let dim = rref_rows(&tops[0]).len();
        let mut by_dim: Vec<HashSet<Vec<u64>>> = vec![HashSet::new(); dim + 1];
        for t in tops {
            let basis = rref_rows(t);
            if basis.len() != dim {
                return Err(HdxError::Complex("top subspaces must share one dimension".into()));
            }
            let elems = span_elements(&basis);
            // enumerate all subspaces of each dimension d <= dim
            for d in 1..=dim {
                enumerate_subspaces(&elems, d, &mut |rows| {
                    by_dim[d].insert(rows.to_vec());
                });
            }
        }
        let mut levels: Vec<Vec<FaceData>> = Vec::new();
        let mut index: Vec<HashMap<Vec<u64>, u32>> = Vec::new();
        levels.push(vec![FaceData::Empty]);
        index.push(HashMap::new());
        for d in 1..=dim {
            let mut faces: Vec<Vec<u64>> = by_dim[d].iter().cloned().collect();
            faces.sort();
            index.push(faces.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect());
            levels.push(faces.into_iter().map(FaceData::Subspace).collect());
        }
        let mut down: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new()]];
        for d in 1..=dim {
            let mut lists = Vec::new();
            for f in &levels[d] {
                let FaceData::Subspace(rows) = f else { unreachable!() };
                let mut l = Vec::new();
                if d == 1 {
                    l.push(0u32);
                } else {
                    let elems = span_elements(rows);
                    enumerate_subspaces(&elems, d - 1, &mut |sub| {
                        l.push(index[d - 1][sub]);
                    });
                }
                l.sort_unstable();
                l.dedup();
                lists.push(l);
            }
            down.push(lists);
        }
        GradedComplex::from_levels(ComplexKind::GrassmannF2 { k }, levels, down)
    }

    /// Uniform distribution on the top level, pushed down to standard
    /// weights at every rank.
    pub fn with_uniform_top_weights(mut self) -> Result<GradedComplex, HdxError> {
        let nt = self.levels.last().unwrap().len();
        let top = vec![Q::new(1, nt as i128); nt];
        self.set_standard_weights_from_top(&top)?;
        Ok(self)
    }

    /// Standard weights determined by a distribution on the top level:
    /// iterated pushdown with uniform choice among covered faces.
    pub fn set_standard_weights_from_top(&mut self, top: &[Q]) -> Result<(), HdxError> {
        let lcount = self.levels.len();
        if top.len() != self.levels[lcount - 1].len() {
            return Err(HdxError::Dimension("top distribution length mismatch".into()));
        }
        let sum: Q = top.iter().sum();
        if sum != q_int(1) {
            return Err(HdxError::Precondition("top weights must sum to 1".into()));
        }
        let mut weights: Vec<Vec<Q>> = self.levels.iter().map(|l| vec![q_int(0); l.len()]).collect();
        weights[lcount - 1] = top.to_vec();
        for l in (1..lcount).rev() {
            // push level l down to level l-1
            let (wl, wd) = {
                let (a, b) = weights.split_at_mut(l);
                (&mut a[l - 1], &b[0])
            };
            for (i, d) in self.down[l].iter().enumerate() {
                let share = wd[i] / q_int(d.len() as i128);
                for &j in d {
                    wl[j as usize] += share;
                }
            }
        }
        self.weights = Some(weights);
        Ok(())
    }

    pub fn weight(&self, level: usize, i: usize) -> Q {
        match &self.weights {
            Some(w) => w[level][i],
            None => Q::new(1, self.levels[level].len() as i128),
        }
    }

    /// Exact standardness defect: max over faces of |m(x) - sum over covers
    /// m(y)/#down(y)|. Zero iff the weight function is standard.
    pub fn standardness_defect(&self) -> Q {
        let mut worst = q_int(0);
        for l in 0..self.levels.len() - 1 {
            for i in 0..self.levels[l].len() {
                let mut acc = q_int(0);
                for &y in &self.up[l][i] {
                    acc += self.weight(l + 1, y as usize)
                        / q_int(self.down[l + 1][y as usize].len() as i128);
                }
                let d = acc - self.weight(l, i);
                let d = if d < q_int(0) { -d } else { d };
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Do two faces at the given levels satisfy x <= y (domination)?
    pub fn dominated(&self, lx: usize, x: u32, ly: usize, y: u32) -> bool {
        if lx > ly {
            return false;
        }
        if lx == ly {
            return x == y;
        }
        // walk down from y
        let mut frontier = vec![y];
        for l in ((lx + 1)..=ly).rev() {
            let mut next: Vec<u32> = frontier
                .iter()
                .flat_map(|&f| self.down[l][f as usize].iter().copied())
                .collect();
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        frontier.contains(&x)
    }

    /// Indices (per level, absolute) of all faces dominating the given face.
    fn faces_above(&self, level: usize, x: u32) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = vec![Vec::new(); self.levels.len()];
        out[level] = vec![x];
        for l in level + 1..self.levels.len() {
            let prev: HashSet<u32> = out[l - 1].iter().copied().collect();
            let mut cur: Vec<u32> = Vec::new();
            for &f in &out[l - 1] {
                cur.extend(self.up[l - 1][f as usize].iter().copied());
            }
            cur.sort_unstable();
            cur.dedup();
            // keep faces whose down list meets the previous frontier
            cur.retain(|&f| self.down[l][f as usize].iter().any(|d| prev.contains(d)));
            out[l] = cur;
        }
        out
    }

    /// The link of a face: faces dominating it, ranks shifted down by
    /// rank(x)+1, weights renormalized per rank.
    pub fn link(&self, rank: isize, x: u32) -> Result<GradedComplex, HdxError> {
        let level = (rank + 1) as usize;
        if level >= self.levels.len() || x as usize >= self.levels[level].len() {
            return Err(HdxError::Membership(format!("no face {x} at rank {rank}")));
        }
        if level == 0 {
            return Ok(self.clone());
        }
        let above = self.faces_above(level, x);
        let mut levels: Vec<Vec<FaceData>> = vec![vec![FaceData::Empty]];
        let mut down: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new()]];
        let mut weights: Vec<Vec<Q>> = vec![vec![q_int(1)]];
        let mut remap: Vec<HashMap<u32, u32>> = vec![HashMap::new(); self.levels.len()];
        remap[level].insert(x, 0);
        for (j, l) in (level + 1..self.levels.len()).enumerate() {
            let faces = &above[l];
            let mut lv = Vec::new();
            let mut dn = Vec::new();
            let mut wt = Vec::new();
            let mut total = q_int(0);
            for &f in faces {
                total += self.weight(l, f as usize);
            }
            for (ni, &f) in faces.iter().enumerate() {
                remap[l].insert(f, ni as u32);
                lv.push(self.levels[l][f as usize].clone());
                let mut dl: Vec<u32> = if j == 0 {
                    vec![0]
                } else {
                    self.down[l][f as usize]
                        .iter()
                        .filter_map(|d| remap[l - 1].get(d).copied())
                        .collect()
                };
                dl.sort_unstable();
                dl.dedup();
                dn.push(dl);
                wt.push(self.weight(l, f as usize) / total);
            }
            levels.push(lv);
            down.push(dn);
            weights.push(wt);
        }
        let up = Self::derive_up(&levels, &down);
        Ok(GradedComplex { kind: self.kind.clone(), levels, down, up, weights: Some(weights) })
    }

    /// The weighted 1-skeleton graph: vertices are rank-0 faces, the mass of
    /// {x0, x0'} is the sum of m(x1) over rank-1 faces dominating both.
    pub fn one_skeleton(&self) -> Result<WeightedGraph, HdxError> {
        if self.levels.len() < 3 {
            return Err(HdxError::Complex("1-skeleton needs ranks 0 and 1 populated".into()));
        }
        let n = self.levels[1].len();
        let mut acc: HashMap<(u32, u32), Q> = HashMap::new();
        for (i, d) in self.down[2].iter().enumerate() {
            let m = self.weight(2, i);
            for a in 0..d.len() {
                for b in a + 1..d.len() {
                    let key = (d[a].min(d[b]), d[a].max(d[b]));
                    *acc.entry(key).or_insert_with(|| q_int(0)) += m;
                }
            }
        }
        let mut pairs: Vec<(u32, u32)> = acc.keys().copied().collect();
        pairs.sort_unstable();
        let masses: Vec<Q> = pairs.iter().map(|k| acc[k]).collect();
        Ok(WeightedGraph::weighted(n, pairs, masses))
    }

    /// 1-skeleton of the link of the face at (rank, x), built without
    /// materializing the link complex.
    pub fn link_skeleton(&self, rank: isize, x: u32) -> Result<WeightedGraph, HdxError> {
        let level = (rank + 1) as usize;
        if level + 2 >= self.levels.len() {
            return Err(HdxError::Complex("link has no rank-1 faces".into()));
        }
        if level == 0 {
            return self.one_skeleton();
        }
        let verts = &self.up[level][x as usize];
        let vset: HashMap<u32, u32> =
            verts.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
        let mut zs: Vec<u32> = verts
            .iter()
            .flat_map(|&v| self.up[level + 1][v as usize].iter().copied())
            .collect();
        zs.sort_unstable();
        zs.dedup();
        let mut acc: HashMap<(u32, u32), Q> = HashMap::new();
        for &z in &zs {
            let inside: Vec<u32> = self.down[level + 2][z as usize]
                .iter()
                .filter_map(|d| vset.get(d).copied())
                .collect();
            // z is in the link iff it dominates x, i.e. >= 2 of its covers
            // meet the vertex set is not the right test: one suffices.
            if inside.is_empty() {
                continue;
            }
            let m = self.weight(level + 2, z as usize);
            for a in 0..inside.len() {
                for b in a + 1..inside.len() {
                    let key = (inside[a].min(inside[b]), inside[a].max(inside[b]));
                    *acc.entry(key).or_insert_with(|| q_int(0)) += m;
                }
            }
        }
        let mut pairs: Vec<(u32, u32)> = acc.keys().copied().collect();
        pairs.sort_unstable();
        let masses: Vec<Q> = pairs.iter().map(|k| acc[k]).collect();
        Ok(WeightedGraph::weighted(verts.len(), pairs, masses))
    }
}

fn combinations<F: FnMut(&[usize])>(n: usize, k: usize, f: &mut F) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerate the d-dimensional subspaces of the span of `elems` (the full
/// nonzero element list of a space), invoking `f` with canonical RREF rows.
fn enumerate_subspaces<F: FnMut(&[u64])>(elems: &[u64], d: usize, f: &mut F) {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    combinations(elems.len(), d, &mut |idx| {
        let rows: Vec<u64> = idx.iter().map(|&i| elems[i]).collect();
        let r = rref_rows(&rows);
        if r.len() == d && seen.insert(r.clone()) {
            f(&r);
        }
    });
}

/// Result of a local-expansion measurement at one rank.
#[derive(Clone, Debug, Serialize)]
pub struct LocalExpansionReport {
    pub rank: isize,
    pub lambda: f64,
    /// True when every link at this rank was measured; false for the seeded
    /// sampling mode, where the value is only a lower bound on the max.
    pub exhaustive: bool,
    pub faces_measured: usize,
    pub argmax_face: usize,
    /// Faces whose link 1-skeleton is disconnected (lambda forced to 1).
    pub disconnected_faces: Vec<u32>,
}

/// Max over rank-i faces of the spectral expansion of the link 1-skeleton.
/// Exhaustive when the level has at most `exhaustive_cap` faces, otherwise a
/// seeded sample of `sample` faces is measured and labeled as a lower bound.
pub fn local_expansion(
    x: &GradedComplex,
    rank: isize,
    opts: &LambdaOptions,
    exhaustive_cap: usize,
    sample: usize,
) -> Result<LocalExpansionReport, HdxError> {
    let level = (rank + 1) as usize;
    if level >= x.levels.len() || x.levels[level].is_empty() {
        return Err(HdxError::Complex(format!("no faces at rank {rank}")));
    }
    if level + 2 >= x.levels.len() {
        return Err(HdxError::Precondition(format!(
            "rank {rank} links have no 1-skeleton (complex rank {})",
            x.rank()
        )));
    }
    let n = x.levels[level].len();
    let faces: Vec<u32> = if n <= exhaustive_cap {
        (0..n as u32).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut all: Vec<u32> = (0..n as u32).collect();
        all.shuffle(&mut rng);
        all.truncate(sample);
        all
    };
    let exhaustive = faces.len() == n;
    use rayon::prelude::*;
    let results: Vec<(u32, f64, bool)> = faces
        .par_iter()
        .map(|&f| {
            let g = x.link_skeleton(rank, f)?;
            if g.n == 0 {
                return Ok((f, 1.0, true));
            }
            if !g.isolated_vertices().is_empty() || !g.is_connected() {
                return Ok((f, 1.0, true));
            }
            let rep = walks::lambda(&g.walk_operator()?, opts)?;
            Ok((f, rep.lambda, rep.disconnected))
        })
        .collect::<Result<Vec<_>, HdxError>>()?;
    let mut lambda = 0.0f64;
    let mut argmax = 0usize;
    let mut disconnected = Vec::new();
    for (f, lam, disc) in &results {
        if *disc {
            disconnected.push(*f);
        }
        if *lam > lambda {
            lambda = *lam;
            argmax = *f as usize;
        }
    }
    Ok(LocalExpansionReport {
        rank,
        lambda,
        exhaustive,
        faces_measured: results.len(),
        argmax_face: argmax,
        disconnected_faces: disconnected,
    })
}

/// Number of unordered bases of F_2^d.
pub fn f2_basis_count(d: usize) -> u128 {
    let mut ordered: u128 = 1;
    for j in 0..d {
        ordered *= (1u128 << d) - (1u128 << j);
    }
    let mut fact: u128 = 1;
    for j in 2..=d {
        fact *= j as u128;
    }
    ordered / fact
}

/// Basisification of an F2-Grassmannian complex: the simplicial complex
/// whose rank-i faces are the unordered bases (sets of i+1 lines) of the
/// rank-i subspace faces, with m_B(b) = m_X(span b) / N_i.
pub fn basisify(x: &GradedComplex) -> Result<GradedComplex, HdxError> {
    let ComplexKind::GrassmannF2 { .. } = x.kind else {
        return Err(HdxError::Precondition("basisification needs an F2-Grassmannian".into()));
    };
    // vertex ids = rank-0 face indices of X; map line vector -> id
    let mut line_id: HashMap<u64, u32> = HashMap::new();
    for (i, f) in x.levels[1].iter().enumerate() {
        let FaceData::Subspace(rows) = f else {
            return Err(HdxError::Complex("non-subspace face in Grassmannian".into()));
        };
        line_id.insert(rows[0], i as u32);
    }
    let mut levels: Vec<Vec<FaceData>> = vec![vec![FaceData::Empty]];
    let mut down: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new()]];
    let mut weights: Vec<Vec<Q>> = vec![vec![q_int(1)]];
    let mut index: Vec<HashMap<Vec<u32>, u32>> = vec![HashMap::new()];
    for l in 1..x.levels.len() {
        let d = l; // subspace dimension
        let n_bases = f2_basis_count(d) as i128;
        let mut faces: Vec<(Vec<u32>, Q)> = Vec::new();
        for (i, f) in x.levels[l].iter().enumerate() {
            let FaceData::Subspace(rows) = f else { unreachable!() };
            let elems = span_elements(rows);
            let w = x.weight(l, i) / q_int(n_bases);
            combinations(elems.len(), d, &mut |idx| {
                let rows: Vec<u64> = idx.iter().map(|&j| elems[j]).collect();
                if rref_rows(&rows).len() == d {
                    let mut verts: Vec<u32> = rows.iter().map(|r| line_id[r]).collect();
                    verts.sort_unstable();
                    faces.push((verts, w));
                }
            });
        }
        faces.sort();
        let idx: HashMap<Vec<u32>, u32> =
            faces.iter().enumerate().map(|(i, (f, _))| (f.clone(), i as u32)).collect();
        let mut dn = Vec::new();
        for (f, _) in &faces {
            let mut dl = Vec::new();
            if l == 1 {
                dl.push(0u32);
            } else {
                for drop in 0..f.len() {
                    let sub: Vec<u32> = f
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    // every (d-1)-subset of a basis is a basis of a face of X
                    dl.push(index[l - 1][&sub]);
                }
            }
            dl.sort_unstable();
            dl.dedup();
            dn.push(dl);
        }
        weights.push(faces.iter().map(|(_, w)| *w).collect());
        levels.push(faces.into_iter().map(|(f, _)| FaceData::Simplex(f)).collect());
        down.push(dn);
        index.push(idx);
    }
    let up = GradedComplex::derive_up(&levels, &down);
    Ok(GradedComplex { kind: ComplexKind::Simplicial, levels, down, up, weights: Some(weights) })
}

/// One line of a trickle-down consistency report.
#[derive(Clone, Debug, Serialize)]
pub struct TrickleEntry {
    pub rank: isize,
    pub lambda_i: f64,
    pub lambda_next: f64,
    pub bound: Option<f64>,
    pub holds: bool,
    pub skipped: Option<String>,
}

/// For each rank -1 <= i <= r-3, check lambda^(i) <= lambda^(i+1) / (1 -
/// lambda^(i+1)) (simplicial) or with an extra 1/q factor (Grassmannian).
pub fn trickle_check(
    x: &GradedComplex,
    opts: &LambdaOptions,
    exhaustive_cap: usize,
    sample: usize,
) -> Result<Vec<TrickleEntry>, HdxError> {
    let r = x.rank();
    let qfactor = match x.kind {
        ComplexKind::GrassmannF2 { .. } => 2.0,
        _ => 1.0,
    };
    let mut out = Vec::new();
    for i in -1..=(r - 3) {
        let li = local_expansion(x, i, opts, exhaustive_cap, sample)?;
        let ln = local_expansion(x, i + 1, opts, exhaustive_cap, sample)?;
        if ln.lambda >= 1.0 {
            out.push(TrickleEntry {
                rank: i,
                lambda_i: li.lambda,
                lambda_next: ln.lambda,
                bound: None,
                holds: true,
                skipped: Some("vacuous: lambda at rank i+1 is >= 1".into()),
            });
            continue;
        }
        let bound = ln.lambda / (qfactor * (1.0 - ln.lambda));
        out.push(TrickleEntry {
            rank: i,
            lambda_i: li.lambda,
            lambda_next: ln.lambda,
            bound: Some(bound),
            holds: li.lambda <= bound + 1e-9,
            skipped: None,
        });
    }
    Ok(out)
}

// --- level walks per the up/down transition formulas ----------------------

/// The up-down walk at a rank: one step up then one step down, with exact
/// transition masses from the standard weights, realized densely.
pub fn level_updown_walk(x: &GradedComplex, rank: isize) -> Result<WalkOperator, HdxError> {
    let l = (rank + 1) as usize;
    if l + 1 >= x.levels.len() {
        return Err(HdxError::Complex("no level above for the up-walk".into()));
    }
    let n = x.levels[l].len();
    let nu = x.levels[l + 1].len();
    // up[x][y] = m(y) / (m(x) |down(y)|), down[y][x'] = 1/|down(y)|
    let mut mat = vec![q_int(0); n * n];
    for xi in 0..n {
        let mx = x.weight(l, xi);
        if mx == q_int(0) {
            return Err(HdxError::Complex("zero-weight face".into()));
        }
        for &y in &x.up[l][xi] {
            let dy = &x.down[l + 1][y as usize];
            let p_up = x.weight(l + 1, y as usize) / (mx * q_int(dy.len() as i128));
            let p_down = Q::new(1, dy.len() as i128);
            for &x2 in dy {
                mat[xi * n + x2 as usize] += p_up * p_down;
            }
        }
    }
    let _ = nu;
    let pi: Vec<f64> = (0..n).map(|i| walks::ratio_to_f64(&x.weight(l, i))).collect();
    let dense: Vec<f64> = mat.iter().map(walks::ratio_to_f64).collect();
    Ok(WalkOperator::dense(n, pi, dense))
}

/// The down-up walk at a rank: one step down then one step up.
pub fn level_downup_walk(x: &GradedComplex, rank: isize) -> Result<WalkOperator, HdxError> {
    let l = (rank + 1) as usize;
    if l < 1 {
        return Err(HdxError::Complex("no level below for the down-walk".into()));
    }
    let n = x.levels[l].len();
    let mut mat = vec![q_int(0); n * n];
    for yi in 0..n {
        let dl = &x.down[l][yi];
        let p_down = Q::new(1, dl.len() as i128);
        for &xj in dl {
            let mx = x.weight(l - 1, xj as usize);
            for &y2 in &x.up[l - 1][xj as usize] {
                let dy2 = x.down[l][y2 as usize].len() as i128;
                let p_up = x.weight(l, y2 as usize) / (mx * q_int(dy2));
                mat[yi * n + y2 as usize] += p_down * p_up;
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|i| walks::ratio_to_f64(&x.weight(l, i))).collect();
    let dense: Vec<f64> = mat.iter().map(walks::ratio_to_f64).collect();
    Ok(WalkOperator::dense(n, pi, dense))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Complete rank-(dim-1) simplicial complex on n vertices.
    fn complete_complex(n: u32, dim: usize) -> GradedComplex {
        let mut tops = Vec::new();
        combinations(n as usize, dim, &mut |idx| {
            tops.push(idx.iter().map(|&i| i as u32).collect());
        });
        GradedComplex::simplicial_closure(&tops).unwrap().with_uniform_top_weights().unwrap()
    }

    #[test]
    fn closure_and_weights_triangle() {
        // one triangle: levels 1 / 3 / 3 / 1
        let x = complete_complex(3, 3);
        assert_eq!(x.levels.iter().map(|l| l.len()).collect::<Vec<_>>(), vec![1, 3, 3, 1]);
        assert_eq!(x.standardness_defect(), q_int(0));
        // uniform top on the triangle's edges (complete rank-1 complex on 3
        // vertices) pushes down to uniform on vertices
        let e = complete_complex(3, 2);
        let w = e.weights.as_ref().unwrap();
        for i in 0..3 {
            assert_eq!(w[1][i], Q::new(1, 3));
        }
    }

    #[test]
    fn single_top_chain() {
        let x = GradedComplex::simplicial_closure(&[vec![0, 1, 2]]).unwrap();
        let mut x = x;
        x.set_standard_weights_from_top(&[q_int(1)]).unwrap();
        assert_eq!(x.standardness_defect(), q_int(0));
        for l in 0..x.levels.len() {
            let s: Q = (0..x.levels[l].len()).map(|i| x.weight(l, i)).sum();
            assert_eq!(s, q_int(1));
        }
    }

    #[test]
    fn link_examples() {
        // link of the empty face is the complex itself
        let x = complete_complex(4, 3);
        let l = x.link(-1, 0).unwrap();
        assert_eq!(
            l.levels.iter().map(|v| v.len()).collect::<Vec<_>>(),
            x.levels.iter().map(|v| v.len()).collect::<Vec<_>>()
        );
        // tetrahedron boundary: link of a vertex is a triangle complex
        let tet = complete_complex(4, 3);
        let lv = tet.link(0, 0).unwrap();
        assert_eq!(lv.levels.iter().map(|v| v.len()).collect::<Vec<_>>(), vec![1, 3, 3]);
        assert_eq!(lv.standardness_defect(), q_int(0));
    }

    #[test]
    fn one_skeleton_examples() {
        // complete rank-1 complex on 3 vertices, uniform: each edge mass 1/3
        let x = complete_complex(3, 2);
        let g = x.one_skeleton().unwrap();
        assert_eq!(g.n, 3);
        assert_eq!(g.pairs.len(), 3);
        for i in 0..3 {
            assert_eq!(g.mass(i), Q::new(1, 3));
        }
        // single triangle as a rank-1 complex: the three 2-subsets of one
        // 3-set, each pair carrying the face's mass
        let t = GradedComplex::simplicial_closure(&[vec![0, 1], vec![1, 2], vec![0, 2]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let g = t.one_skeleton().unwrap();
        assert_eq!(g.pairs.len(), 3);
    }

    #[test]
    fn local_expansion_k4() {
        // complete rank-2 complex on 4 vertices: lambda^(-1) = lambda(K4) = 1/3
        let x = complete_complex(4, 3);
        let rep = local_expansion(&x, -1, &LambdaOptions::default(), 5000, 32).unwrap();
        assert!((rep.lambda - 1.0 / 3.0).abs() < 1e-12);
        assert!(rep.exhaustive);
    }

    #[test]
    fn disconnected_link_flagged() {
        // two triangles sharing nothing: rank -1 link (whole complex) is
        // disconnected
        let x = GradedComplex::simplicial_closure(&[vec![0, 1, 2], vec![3, 4, 5]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let rep = local_expansion(&x, -1, &LambdaOptions::default(), 5000, 32).unwrap();
        assert_eq!(rep.lambda, 1.0);
        assert!(!rep.disconnected_faces.is_empty());
    }

    #[test]
    fn grassmann_closure_full_f23() {
        // the complete rank-2 Grassmannian complex on F_2^3
        let x = GradedComplex::grassmann_closure(3, &[vec![1, 2, 4]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        // 7 lines, 7 planes, 1 whole space
        assert_eq!(x.levels.iter().map(|l| l.len()).collect::<Vec<_>>(), vec![1, 7, 7, 1]);
        assert_eq!(x.standardness_defect(), q_int(0));
        // every plane covers exactly 3 lines
        for d in &x.down[2] {
            assert_eq!(d.len(), 3);
        }
    }

    #[test]
    fn basisify_f23() {
        let x = GradedComplex::grassmann_closure(3, &[vec![1, 2, 4]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let b = basisify(&x).unwrap();
        // B(0) = X(0); each plane has 3 bases; the 3-space has 28 bases
        assert_eq!(b.levels[1].len(), 7);
        assert_eq!(b.levels[2].len(), 21);
        assert_eq!(b.levels[3].len(), 28);
        assert_eq!(f2_basis_count(2), 3);
        assert_eq!(f2_basis_count(3), 28);
        // weights remain standard
        assert_eq!(b.standardness_defect(), q_int(0));
        // local expansion preserved at every applicable rank
        let opts = LambdaOptions::default();
        for i in -1..=0 {
            let lx = local_expansion(&x, i, &opts, 5000, 32).unwrap();
            let lb = local_expansion(&b, i, &opts, 5000, 32).unwrap();
            assert!(
                (lx.lambda - lb.lambda).abs() < 1e-9,
                "rank {i}: {} vs {}",
                lx.lambda,
                lb.lambda
            );
        }
    }

    #[test]
    fn trickle_on_complete_complex() {
        let x = complete_complex(6, 3);
        let entries = trickle_check(&x, &LambdaOptions::default(), 5000, 32).unwrap();
        assert_eq!(entries.len(), 1);
        assert!(entries[0].holds);
    }

    #[test]
    fn updown_walk_on_triangle_complex() {
        // single top face: up-down at the top-1 rank returns to the chain
        let x = GradedComplex::simplicial_closure(&[vec![0, 1, 2]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let w = level_updown_walk(&x, 0).unwrap();
        assert!(w.row_sum_defect() < 1e-12);
        // nonzero spectra of up-down at rank 0 and down-up at rank 1 agree
        let wu = level_updown_walk(&x, 0).unwrap();
        let wd = level_downup_walk(&x, 1).unwrap();
        let lu = walks::lambda(&wu, &LambdaOptions::default()).unwrap().lambda;
        let ld = walks::lambda(&wd, &LambdaOptions::default()).unwrap().lambda;
        assert!((lu - ld).abs() < 1e-9, "{lu} vs {ld}");
    }

    #[test]
    fn link_iso_quotient_for_grassmannian() {
        // link of a line x in the complete Grassmannian complex on F_2^3 is
        // isomorphic to the complete complex on the quotient F_2^3 / x:
        // 3 vertices (planes through x), rank-1 faces = the whole space.
        let x = GradedComplex::grassmann_closure(3, &[vec![1, 2, 4]])
            .unwrap()
            .with_uniform_top_weights()
            .unwrap();
        let l = x.link(0, 0).unwrap();
        assert_eq!(l.levels.iter().map(|v| v.len()).collect::<Vec<_>>(), vec![1, 3, 1]);
        // quotient complex: complete Grassmannian on F_2^2 has 3 lines, 1 plane
        let q = GradedComplex::grassmann_closure(2, &[vec![1, 2]]).unwrap();
        assert_eq!(q.levels.iter().map(|v| v.len()).collect::<Vec<_>>(), vec![1, 3, 1]);
        // poset isomorphism: both are a 3-element antichain under one top
        assert_eq!(l.down[2][0].len(), q.down[2][0].len());
    }
}
