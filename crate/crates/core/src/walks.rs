//! Random-walk operators and spectral expansion.
//!
//! A walk is row-stochastic with a known stationary distribution; all walks
//! in scope are reversible. Spectral expansion lambda is the second largest
//! absolute eigenvalue of the pi-symmetrized operator. Dense instances go
//! through a cyclic Jacobi eigensolve; larger ones through power iteration
//! on (I+S)/2 and (I-S)/2 with the stationary component deflated, certified
//! by residual norms.
//!
//! Also houses the specific graphs used in the expansion analysis: the
//! orthogonality graph on nonzero vectors, the rank-1 up-down walks on the
//! matrix poset (optionally restricted under the identity), and the
//! localized graph on rank-1 matrices under the identity.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::HdxError;
use crate::gf::FieldSpec;

/// Exact edge/weight arithmetic; converted to f64 only at the solver boundary.
pub type Q = Ratio<i128>;

pub fn q_int(v: i128) -> Q {
    Ratio::from_integer(v)
}

/// Undirected weighted graph. Self-loops are pairs (v, v).
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    pub n: usize,
    pub pairs: Vec<(u32, u32)>,
    /// None means every pair carries mass 1.
    pub masses: Option<Vec<Q>>,
}

impl WeightedGraph {
    pub fn uniform(n: usize, pairs: Vec<(u32, u32)>) -> Self {
        WeightedGraph { n, pairs, masses: None }
    }

    pub fn weighted(n: usize, pairs: Vec<(u32, u32)>, masses: Vec<Q>) -> Self {
        assert_eq!(pairs.len(), masses.len());
        WeightedGraph { n, pairs, masses: Some(masses) }
    }

    pub fn mass(&self, i: usize) -> Q {
        match &self.masses {
            None => q_int(1),
            Some(m) => m[i],
        }
    }

    /// Weighted degree of every vertex; self-loop mass counts once.
    pub fn degrees(&self) -> Vec<Q> {
        let mut deg = vec![q_int(0); self.n];
        for (i, &(u, v)) in self.pairs.iter().enumerate() {
            let m = self.mass(i);
            deg[u as usize] += m;
            if u != v {
                deg[v as usize] += m;
            }
        }
        deg
    }

    pub fn isolated_vertices(&self) -> Vec<u32> {
        let deg = self.degrees();
        (0..self.n).filter(|&v| deg[v] == q_int(0)).map(|v| v as u32).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.pairs {
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &adj[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.n
    }

    /// Random-walk operator W(u, v) = m(u, v) / deg(u).
    pub fn walk_operator(&self) -> Result<WalkOperator, HdxError> {
        let deg = self.degrees();
        if let Some(v) = deg.iter().position(|d| *d == q_int(0)) {
            return Err(HdxError::Complex(format!("isolated vertex {v} has no walk step")));
        }
        let total: Q = deg.iter().sum();
        let pi: Vec<f64> = deg.iter().map(|d| ratio_to_f64(&(d / total))).collect();
        // CSR with both directions.
        let mut counts = vec![0u64; self.n];
        for &(u, v) in &self.pairs {
            counts[u as usize] += 1;
            if u != v {
                counts[v as usize] += 1;
            }
        }
        let mut row_ptr = vec![0u64; self.n + 1];
        for i in 0..self.n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[self.n] as usize;
        let mut col = vec![0u32; nnz];
        let mut val = vec![0f64; nnz];
        let mut cursor: Vec<u64> = row_ptr[..self.n].to_vec();
        for (i, &(u, v)) in self.pairs.iter().enumerate() {
            let m = self.mass(i);
            let wu = ratio_to_f64(&(m / deg[u as usize]));
            let c = cursor[u as usize] as usize;
            col[c] = v;
            val[c] = wu;
            cursor[u as usize] += 1;
            if u != v {
                let wv = ratio_to_f64(&(m / deg[v as usize]));
                let c = cursor[v as usize] as usize;
                col[c] = u;
                val[c] = wv;
                cursor[v as usize] += 1;
            }
        }
        Ok(WalkOperator {
            n: self.n,
            pi,
            real: Realization::Sparse { row_ptr, col, val },
            reversible: true,
        })
    }
}

pub fn ratio_to_f64(r: &Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Unweighted row-normalized sparse incidence (each listed entry has equal
/// probability within its row).
#[derive(Clone, Debug)]
pub struct Csr {
    pub n_from: usize,
    pub n_to: usize,
    pub row_ptr: Vec<u64>,
    pub col: Vec<u32>,
}

impl Csr {
    pub fn from_rows(n_to: usize, rows: &[Vec<u32>]) -> Self {
        let mut row_ptr = vec![0u64; rows.len() + 1];
        for (i, r) in rows.iter().enumerate() {
            row_ptr[i + 1] = row_ptr[i] + r.len() as u64;
        }
        let mut col = Vec::with_capacity(row_ptr[rows.len()] as usize);
        for r in rows {
            col.extend_from_slice(r);
        }
        Csr { n_from: rows.len(), n_to, row_ptr, col }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.col[self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize]
    }

    /// y[i] = mean of x over the row entries.
    pub fn avg_gather(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let body = |(i, yi): (usize, &mut f64)| {
            let row = &self.col[self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize];
            let mut acc = 0.0;
            for &j in row {
                acc += x[j as usize];
            }
            *yi = if row.is_empty() { 0.0 } else { acc / row.len() as f64 };
        };
        if self.n_from >= 8192 {
            y[..self.n_from].par_iter_mut().enumerate().for_each(body);
        } else {
            y[..self.n_from].iter_mut().enumerate().for_each(body);
        }
    }
}

#[derive(Clone)]
pub enum Realization {
    /// Row-major dense row-stochastic matrix.
    Dense(Vec<f64>),
    /// Weighted CSR.
    Sparse { row_ptr: Vec<u64>, col: Vec<u32>, val: Vec<f64> },
    /// Composition of an up step and a down step, each uniform per row.
    UpDown { up: Csr, down: Csr },
}

/// Row-stochastic operator with stationary distribution pi.
#[derive(Clone)]
pub struct WalkOperator {
    pub n: usize,
    pub pi: Vec<f64>,
    pub real: Realization,
    pub reversible: bool,
}

impl WalkOperator {
    pub fn dense(n: usize, pi: Vec<f64>, mat: Vec<f64>) -> Self {
        assert_eq!(mat.len(), n * n);
        WalkOperator { n, pi, real: Realization::Dense(mat), reversible: true }
    }

    /// y = W x (operator applied to a function on states).
    pub fn apply(&self, x: &[f64], y: &mut [f64], scratch: &mut Vec<f64>) {
        match &self.real {
            Realization::Dense(m) => {
                for i in 0..self.n {
                    let row = &m[i * self.n..(i + 1) * self.n];
                    y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            Realization::Sparse { row_ptr, col, val } => {
                for i in 0..self.n {
                    let (a, b) = (row_ptr[i] as usize, row_ptr[i + 1] as usize);
                    let mut acc = 0.0;
                    for k in a..b {
                        acc += val[k] * x[col[k] as usize];
                    }
                    y[i] = acc;
                }
            }
            Realization::UpDown { up, down } => {
                scratch.resize(down.n_from, 0.0);
                down.avg_gather(x, scratch);
                up.avg_gather(scratch, y);
            }
        }
    }

    /// Entries of row i as (state, probability), ascending by state.
    pub fn row_masses(&self, i: usize) -> Vec<(u32, f64)> {
        match &self.real {
            Realization::Dense(m) => (0..self.n)
                .filter(|&j| m[i * self.n + j] != 0.0)
                .map(|j| (j as u32, m[i * self.n + j]))
                .collect(),
            Realization::Sparse { row_ptr, col, val } => {
                let mut v: Vec<(u32, f64)> = (row_ptr[i] as usize..row_ptr[i + 1] as usize)
                    .map(|k| (col[k], val[k]))
                    .collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            }
            Realization::UpDown { up, down } => {
                let mut acc: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
                let ups = up.row(i);
                for &m in ups {
                    let downs = down.row(m as usize);
                    let w = 1.0 / (ups.len() as f64 * downs.len() as f64);
                    for &l in downs {
                        *acc.entry(l).or_insert(0.0) += w;
                    }
                }
                let mut v: Vec<(u32, f64)> = acc.into_iter().collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            }
        }
    }

    /// Max over rows of |row sum - 1|.
    pub fn row_sum_defect(&self) -> f64 {
        let x = vec![1.0; self.n];
        let mut y = vec![0.0; self.n];
        let mut s = Vec::new();
        self.apply(&x, &mut y, &mut s);
        y.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Max over sampled (u,v) of |pi_u W_uv - pi_v W_vu|.
    pub fn reversibility_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let step = (self.n / 64).max(1);
        for u in (0..self.n).step_by(step) {
            for (v, w) in self.row_masses(u) {
                let back = self
                    .row_masses(v as usize)
                    .iter()
                    .find(|(s, _)| *s as usize == u)
                    .map(|(_, w)| *w)
                    .unwrap_or(0.0);
                worst = worst.max((self.pi[u] * w - self.pi[v as usize] * back).abs());
            }
        }
        worst
    }

    fn support_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for (y, _) in self.row_masses(x) {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    count += 1;
                    stack.push(y as usize);
                }
            }
        }
        count == self.n
    }
}

/// Outcome of a spectral-expansion measurement.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub states: usize,
    pub lambda: f64,
    pub disconnected: bool,
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub wall_ms: u128,
}

/// Options for the spectral engine.
#[derive(Clone, Debug)]
pub struct LambdaOptions {
    pub dense_cap: usize,
    pub rq_tol: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions {
            dense_cap: 3000,
            rq_tol: 1e-13,
            residual_tol: 1e-7,
            max_iters: 100_000,
            seed: 0,
        }
    }
}

/// Spectral expansion: max(|lambda_2|, |lambda_min|) of the pi-symmetrized
/// operator. Disconnected support returns 1 with the flag set.
pub fn lambda(w: &WalkOperator, opts: &LambdaOptions) -> Result<LambdaReport, HdxError> {
    let t0 = std::time::Instant::now();
    if w.n <= 1 {
        return Ok(LambdaReport {
            states: w.n,
            lambda: 0.0,
            disconnected: false,
            method: "trivial".into(),
            iterations: 0,
            residual: 0.0,
            wall_ms: t0.elapsed().as_millis(),
        });
    }
    if w.pi.iter().any(|&p| p <= 0.0) {
        return Err(HdxError::Precondition("stationary distribution must be positive".into()));
    }
    if !w.support_connected() {
        return Ok(LambdaReport {
            states: w.n,
            lambda: 1.0,
            disconnected: true,
            method: "bfs".into(),
            iterations: 0,
            residual: 0.0,
            wall_ms: t0.elapsed().as_millis(),
        });
    }
    let sqrt_pi: Vec<f64> = w.pi.iter().map(|p| p.sqrt()).collect();
    let densely =
        w.n <= opts.dense_cap && matches!(w.real, Realization::Dense(_) | Realization::Sparse { .. });
    if densely {
        // Symmetrize: S = D^{1/2} W D^{-1/2}.
        let n = w.n;
        let mut s = vec![0.0f64; n * n];
        match &w.real {
            Realization::Dense(m) => {
                for i in 0..n {
                    for j in 0..n {
                        s[i * n + j] = sqrt_pi[i] * m[i * n + j] / sqrt_pi[j];
                    }
                }
            }
            Realization::Sparse { row_ptr, col, val } => {
                for i in 0..n {
                    for k in row_ptr[i] as usize..row_ptr[i + 1] as usize {
                        s[i * n + col[k] as usize] +=
                            sqrt_pi[i] * val[k] / sqrt_pi[col[k] as usize];
                    }
                }
            }
            Realization::UpDown { .. } => unreachable!(),
        }
        for i in 0..n {
            for j in 0..i {
                let a = 0.5 * (s[i * n + j] + s[j * n + i]);
                s[i * n + j] = a;
                s[j * n + i] = a;
            }
        }
        let evals = jacobi_eigenvalues(&mut s, n)?;
        let mut sorted = evals;
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let lam = sorted[1].abs().max(sorted[n - 1].abs());
        return Ok(LambdaReport {
            states: n,
            lambda: lam,
            disconnected: false,
            method: "jacobi".into(),
            iterations: 0,
            residual: 0.0,
            wall_ms: t0.elapsed().as_millis(),
        });
    }

    // Matrix-free path: power iteration on (I+S)/2 and (I-S)/2 with the
    // stationary direction deflated. The positive run converges to
    // (1+lambda_2)/2, the negative one to (1-lambda_min)/2.
    let napply = |x: &[f64], y: &mut [f64], scratch: &mut Vec<f64>, tmp: &mut Vec<f64>| {
        tmp.resize(w.n, 0.0);
        for i in 0..w.n {
            tmp[i] = x[i] / sqrt_pi[i];
        }
        let mut out = vec![0.0; w.n];
        w.apply(tmp, &mut out, scratch);
        for i in 0..w.n {
            y[i] = out[i] * sqrt_pi[i];
        }
    };
    let mut total_iters = 0usize;
    let mut worst_resid = 0.0f64;
    let mut lam = 0.0f64;
    for sign in [1.0f64, -1.0] {
        let mut best_theta: f64 = f64::NEG_INFINITY;
        for start in 0..2 {
            let mut x: Vec<f64> = match start {
                0 => (0..w.n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e3779b97f4a7c15);
                    (0..w.n).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
            };
            orthogonalize(&mut x, &sqrt_pi);
            normalize(&mut x);
            let mut theta_prev = f64::NAN;
            let mut sx = vec![0.0; w.n];
            let mut scratch = Vec::new();
            let mut tmp = Vec::new();
            let mut stable = 0;
            let mut iters = 0;
            let mut converged = false;
            let mut resid = f64::INFINITY;
            while iters < opts.max_iters {
                iters += 1;
                napply(&x, &mut sx, &mut scratch, &mut tmp);
                let mut b: Vec<f64> =
                    x.iter().zip(&sx).map(|(a, s)| 0.5 * (a + sign * s)).collect();
                orthogonalize(&mut b, &sqrt_pi);
                let theta: f64 = x.iter().zip(&b).map(|(a, c)| a * c).sum();
                // residual of the S-eigenpair estimate at the current x
                let lam_signed = sign * (2.0 * theta - 1.0);
                resid = x
                    .iter()
                    .zip(&sx)
                    .map(|(a, s)| (s - lam_signed * a) * (s - lam_signed * a))
                    .sum::<f64>()
                    .sqrt();
                if !theta_prev.is_nan() && (theta - theta_prev).abs() < opts.rq_tol {
                    stable += 1;
                } else {
                    stable = 0;
                }
                theta_prev = theta;
                if stable >= 4 && resid < opts.residual_tol {
                    converged = true;
                    break;
                }
                let norm = normalize(&mut b);
                if norm < 1e-300 {
                    // Operator annihilates the deflated space.
                    theta_prev = 0.0;
                    resid = 0.0;
                    converged = true;
                    break;
                }
                x = b;
            }
            total_iters += iters;
            if !converged {
                return Err(HdxError::NonConvergence(format!(
                    "power iteration ({} start): Rayleigh bracket {:.12}, residual {:.3e} \
                     after {} iterations",
                    if start == 0 { "deterministic" } else { "random" },
                    theta_prev,
                    resid,
                    iters
                )));
            }
            worst_resid = worst_resid.max(resid);
            best_theta = best_theta.max(theta_prev);
        }
        lam = lam.max((2.0 * best_theta - 1.0).max(0.0));
    }
    Ok(LambdaReport {
        states: w.n,
        lambda: lam,
        disconnected: false,
        method: "power".into(),
        iterations: total_iters,
        residual: worst_resid,
        wall_ms: t0.elapsed().as_millis(),
    })
}

fn orthogonalize(x: &mut [f64], dir: &[f64]) {
    let d2: f64 = dir.iter().map(|v| v * v).sum();
    let dot: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
    let c = dot / d2;
    for (xi, di) in x.iter_mut().zip(dir) {
        *xi -= c * di;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
    n
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. The input
/// buffer is destroyed.
pub fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>, HdxError> {
    let fro: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-15 * fro.max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(HdxError::NonConvergence("jacobi sweeps exhausted".into()))
}

/// Product chain on the product state space; index = i * n2 + j.
pub fn tensor(w1: &WalkOperator, w2: &WalkOperator) -> WalkOperator {
    let n = w1.n * w2.n;
    let mut pi = vec![0.0; n];
    for i in 0..w1.n {
        for j in 0..w2.n {
            pi[i * w2.n + j] = w1.pi[i] * w2.pi[j];
        }
    }
    let mut mat = vec![0.0f64; n * n];
    let rows1: Vec<Vec<(u32, f64)>> = (0..w1.n).map(|i| w1.row_masses(i)).collect();
    let rows2: Vec<Vec<(u32, f64)>> = (0..w2.n).map(|j| w2.row_masses(j)).collect();
    for i in 0..w1.n {
        for j in 0..w2.n {
            let r = i * w2.n + j;
            for &(i2, p1) in &rows1[i] {
                for &(j2, p2) in &rows2[j] {
                    mat[r * n + (i2 as usize * w2.n + j2 as usize)] = p1 * p2;
                }
            }
        }
    }
    WalkOperator {
        n,
        pi,
        real: Realization::Dense(mat),
        reversible: w1.reversible && w2.reversible,
    }
}

/// Report from verifying a graph projection.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub mass_identity_ok: bool,
    pub offending_pair: Option<(u32, u32)>,
    pub lambda_big: f64,
    pub lambda_small: f64,
}

/// Verify the edge-mass pullback identity of a surjective vertex mapping in
/// exact rational arithmetic, then check lambda(small) <= lambda(big) + tol.
pub fn projection_check(
    pi_map: &[u32],
    g_big: &WeightedGraph,
    g_small: &WeightedGraph,
    opts: &LambdaOptions,
) -> Result<ProjectionReport, HdxError> {
    if pi_map.len() != g_big.n {
        return Err(HdxError::Dimension("projection map must cover the big vertex set".into()));
    }
    let mut hit = vec![false; g_small.n];
    for &v in pi_map {
        if v as usize >= g_small.n {
            return Err(HdxError::Dimension("projection maps outside the small vertex set".into()));
        }
        hit[v as usize] = true;
    }
    if !hit.iter().all(|&h| h) {
        return Err(HdxError::Precondition("projection must be surjective".into()));
    }
    use std::collections::HashMap;
    let mut acc: HashMap<(u32, u32), Q> = HashMap::new();
    let mut add = |a: u32, b: u32, m: Q| {
        *acc.entry((a, b)).or_insert_with(|| q_int(0)) += m;
    };
    for (i, &(u, v)) in g_big.pairs.iter().enumerate() {
        let m = g_big.mass(i);
        let (pu, pv) = (pi_map[u as usize], pi_map[v as usize]);
        add(pu, pv, m);
        if u != v {
            add(pv, pu, m);
        }
    }
    let mut want: HashMap<(u32, u32), Q> = HashMap::new();
    for (i, &(u, v)) in g_small.pairs.iter().enumerate() {
        let m = g_small.mass(i);
        *want.entry((u, v)).or_insert_with(|| q_int(0)) += m;
        if u != v {
            *want.entry((v, u)).or_insert_with(|| q_int(0)) += m;
        }
    }
    let mut offending = None;
    for (k, m) in &acc {
        if want.get(k).map(|w| w == m) != Some(true) {
            offending = Some(*k);
            break;
        }
    }
    if offending.is_none() {
        for (k, m) in &want {
            if acc.get(k).map(|w| w == m) != Some(true) {
                offending = Some(*k);
                break;
            }
        }
    }
    let lb = lambda(&g_big.walk_operator()?, opts)?;
    let ls = lambda(&g_small.walk_operator()?, opts)?;
    Ok(ProjectionReport {
        mass_identity_ok: offending.is_none(),
        offending_pair: offending,
        lambda_big: lb.lambda,
        lambda_small: ls.lambda,
    })
}

/// l1 coupling bound between two symmetric walks on nested state spaces:
/// epsilon = max over states v of || row_W(v) - row_Wbig(embed(v)) ||_1.
pub fn tv_coupling_bound(
    w: &WalkOperator,
    w_big: &WalkOperator,
    embed: &[u32],
) -> Result<f64, HdxError> {
    if embed.len() != w.n {
        return Err(HdxError::Dimension("embedding must cover the small state space".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &e in embed {
        if !seen.insert(e) {
            return Err(HdxError::Precondition("embedding must be injective".into()));
        }
    }
    let mut eps = 0.0f64;
    for v in 0..w.n {
        let small: std::collections::HashMap<u32, f64> =
            w.row_masses(v).into_iter().map(|(s, p)| (embed[s as usize], p)).collect();
        let big: std::collections::HashMap<u32, f64> =
            w_big.row_masses(embed[v] as usize).into_iter().collect();
        let mut l1 = 0.0;
        for (s, p) in &small {
            l1 += (p - big.get(s).copied().unwrap_or(0.0)).abs();
        }
        for (s, p) in &big {
            if !small.contains_key(s) {
                l1 += p;
            }
        }
        eps = eps.max(l1);
    }
    Ok(eps)
}

// ---------------------------------------------------------------------------
// Orthogonality graph. The exact square identity is also checked at q = 3,
// which the GF(2^b) machinery does not cover, hence the tiny field shim.

#[derive(Clone)]
enum SmallField {
    Bin(FieldSpec),
    Prime(u16),
}

impl SmallField {
    fn new(q: u32) -> Result<Self, HdxError> {
        if q >= 2 && q.is_power_of_two() {
            Ok(SmallField::Bin(FieldSpec::new(q.trailing_zeros())?))
        } else if (2..=257).contains(&q) && (2..q).all(|d| q % d != 0) {
            Ok(SmallField::Prime(q as u16))
        } else {
            Err(HdxError::Field(format!("unsupported field order {q}")))
        }
    }

    fn mul(&self, a: u16, b: u16) -> u16 {
        match self {
            SmallField::Bin(f) => f.mul(a, b),
            SmallField::Prime(p) => ((a as u32 * b as u32) % *p as u32) as u16,
        }
    }

    fn add(&self, a: u16, b: u16) -> u16 {
        match self {
            SmallField::Bin(_) => a ^ b,
            SmallField::Prime(p) => ((a as u32 + b as u32) % *p as u32) as u16,
        }
    }
}

/// The orthogonality graph on nonzero vectors of F_q^m: v1 ~ v2 iff
/// v1^T v2 = 0, with a self-loop at each isotropic vertex. With the loops,
/// A^2 = (q^{m-1}-1) I + (q^{m-2}-1)(J - I) holds exactly.
pub struct PerpGraph {
    pub q: u32,
    pub m: usize,
    pub graph: WeightedGraph,
    /// 0/1 adjacency (including isotropic self-loops), row-major.
    pub adjacency: Vec<u8>,
}

pub fn perp_graph(q: u32, m: usize) -> Result<PerpGraph, HdxError> {
    if m < 2 {
        return Err(HdxError::Precondition("orthogonality graph needs m >= 2".into()));
    }
    let field = SmallField::new(q)?;
    let nverts = (q as u64).pow(m as u32) - 1;
    if nverts > 1 << 14 {
        return Err(HdxError::Size(format!("{nverts} vertices exceeds the dense cap")));
    }
    let n = nverts as usize;
    let decode = |idx: u64| -> Vec<u16> {
        let mut rem = idx + 1; // skip the zero vector
        let mut v = vec![0u16; m];
        for e in v.iter_mut() {
            *e = (rem % q as u64) as u16;
            rem /= q as u64;
        }
        v
    };
    let vecs: Vec<Vec<u16>> = (0..nverts).map(decode).collect();
    let dot = |a: &[u16], b: &[u16]| -> u16 {
        let mut acc = 0u16;
        for i in 0..m {
            acc = field.add(acc, field.mul(a[i], b[i]));
        }
        acc
    };
    let mut adjacency = vec![0u8; n * n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i..n {
            if dot(&vecs[i], &vecs[j]) == 0 {
                adjacency[i * n + j] = 1;
                adjacency[j * n + i] = 1;
                pairs.push((i as u32, j as u32));
            }
        }
    }
    Ok(PerpGraph { q, m, graph: WeightedGraph::uniform(n, pairs), adjacency })
}

impl PerpGraph {
    /// Exact integer check of A^2 = (q^{m-1}-1) I + (q^{m-2}-1)(J - I).
    /// Over fields with more than two elements this is false at proportional
    /// pairs (v, cv), which share a full hyperplane of common orthogonal
    /// vectors; see `square_identity_class_form_holds` for the identity
    /// that holds at every q. Returns the first offending pair on failure.
    pub fn square_identity_holds(&self) -> Result<(), (usize, usize, i64, i64)> {
        let n = self.graph.n;
        let diag = (self.q as i64).pow(self.m as u32 - 1) - 1;
        let off = (self.q as i64).pow(self.m as u32 - 2) - 1;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    acc += (self.adjacency[i * n + k] * self.adjacency[k * n + j]) as i64;
                }
                let want = if i == j { diag } else { off };
                if acc != want {
                    return Err((i, j, acc, want));
                }
            }
        }
        Ok(())
    }

    /// Exact integer check of A^2 = (q^{m-1}-1) P + (q^{m-2}-1)(J - P),
    /// where P(u, v) = 1 iff u and v span the same line. P = I at q = 2,
    /// recovering the scalar form.
    pub fn square_identity_class_form_holds(&self) -> bool {
        let n = self.graph.n;
        let field = match SmallField::new(self.q) {
            Ok(f) => f,
            Err(_) => return false,
        };
        let q = self.q as u64;
        let decode = |idx: u64| -> Vec<u16> {
            let mut rem = idx + 1;
            let mut v = vec![0u16; self.m];
            for e in v.iter_mut() {
                *e = (rem % q) as u16;
                rem /= q;
            }
            v
        };
        let vecs: Vec<Vec<u16>> = (0..n as u64).map(decode).collect();
        let proportional = |a: &[u16], b: &[u16]| -> bool {
            (1..self.q as u16).any(|c| (0..self.m).all(|t| field.mul(c, a[t]) == b[t]))
        };
        let same_line = (self.q as i64).pow(self.m as u32 - 1) - 1;
        let off = (self.q as i64).pow(self.m as u32 - 2) - 1;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    acc += (self.adjacency[i * n + k] * self.adjacency[k * n + j]) as i64;
                }
                let want = if proportional(&vecs[i], &vecs[j]) { same_line } else { off };
                if acc != want {
                    return false;
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Rank-1 up-down walks on the matrix poset, packed for speed. Matrices are
// m x m over GF(2^b) with b <= 4 and m <= 3, packed 4 bits per entry into a
// u64, row-major.

/// Packed m x m matrix arithmetic over a small field. Addition over GF(2^b)
/// is entrywise XOR of the packed words.
#[derive(Clone)]
pub struct PackedOps {
    pub field: FieldSpec,
    pub m: usize,
}

impl PackedOps {
    pub fn new(field: FieldSpec, m: usize) -> Result<Self, HdxError> {
        if field.b() > 4 || m > 4 {
            return Err(HdxError::Size("packed path supports b <= 4, m <= 4".into()));
        }
        Ok(PackedOps { field, m })
    }

    #[inline]
    pub fn get(&self, p: u64, r: usize, c: usize) -> u16 {
        ((p >> (4 * (r * self.m + c))) & 0xf) as u16
    }

    #[inline]
    pub fn set(&self, p: &mut u64, r: usize, c: usize, v: u16) {
        let sh = 4 * (r * self.m + c);
        *p = (*p & !(0xfu64 << sh)) | ((v as u64 & 0xf) << sh);
    }

    pub fn identity(&self) -> u64 {
        let mut p = 0u64;
        for i in 0..self.m {
            self.set(&mut p, i, i, 1);
        }
        p
    }

    pub fn outer(&self, u: &[u16], v: &[u16]) -> u64 {
        let mut p = 0u64;
        for r in 0..self.m {
            for c in 0..self.m {
                self.set(&mut p, r, c, self.field.mul(u[r], v[c]));
            }
        }
        p
    }

    pub fn rank(&self, p: u64) -> usize {
        let f = &self.field;
        let m = self.m;
        let mut rows = [[0u16; 4]; 4];
        for (r, row) in rows.iter_mut().enumerate().take(m) {
            for (c, e) in row.iter_mut().enumerate().take(m) {
                *e = self.get(p, r, c);
            }
        }
        let mut rank = 0;
        for col in 0..m {
            let Some(pr) = (rank..m).find(|&r| rows[r][col] != 0) else { continue };
            rows.swap(rank, pr);
            let inv = f.inv(rows[rank][col]).unwrap();
            for c in 0..m {
                rows[rank][c] = f.mul(rows[rank][c], inv);
            }
            for r in 0..m {
                if r != rank && rows[r][col] != 0 {
                    let factor = rows[r][col];
                    for c in 0..m {
                        rows[r][c] ^= f.mul(factor, rows[rank][c]);
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Which rank-1 states participate in the up-down walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkRestriction {
    None,
    DominatedByIdentity,
}

/// The rank 1 -> 2 -> 1 up-down walk on the matrix poset, with adjacency
/// lists materialized for matrix-free iteration.
pub struct MatrixUpDownWalk {
    pub states: Vec<u64>,
    pub upper: Vec<u64>,
    pub op: WalkOperator,
}

fn enumerate_vectors(q: u32, m: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let total = (q as u64).pow(m as u32);
    for idx in 1..total {
        let mut rem = idx;
        let mut v = vec![0u16; m];
        for e in v.iter_mut() {
            *e = (rem % q as u64) as u16;
            rem /= q as u64;
        }
        out.push(v);
    }
    out
}

/// Projective canonical representatives: first nonzero coordinate is 1.
fn canonical_directions(field: &FieldSpec, m: usize) -> Vec<Vec<u16>> {
    enumerate_vectors(field.q(), m)
        .into_iter()
        .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
        .collect()
}

/// Canonical packed form of a rank-1 matrix: M = u v^T where u is scaled so
/// its first nonzero entry is 1 (then v is the first nonzero row of M).
fn canonicalize_rank1(ops: &PackedOps, p: u64) -> u64 {
    let f = &ops.field;
    let m = ops.m;
    let r0 = (0..m)
        .find(|&r| (0..m).any(|c| ops.get(p, r, c) != 0))
        .expect("rank-1 matrix is nonzero");
    let c0 = (0..m).find(|&c| ops.get(p, r0, c) != 0).unwrap();
    let inv = f.inv(ops.get(p, r0, c0)).unwrap();
    let u: Vec<u16> = (0..m).map(|r| f.mul(ops.get(p, r, c0), inv)).collect();
    let v: Vec<u16> = (0..m).map(|c| ops.get(p, r0, c)).collect();
    debug_assert_eq!(u[r0], 1);
    ops.outer(&u, &v)
}

/// Solve the affine system { <w_i, x> = c_i } over F_q^m: a particular
/// solution together with a kernel basis, or None when inconsistent.
fn solve_affine(
    field: &FieldSpec,
    constraints: &[(&[u16], u16)],
    m: usize,
) -> Option<(Vec<u16>, Vec<Vec<u16>>)> {
    let rows = constraints.len();
    let mut aug: Vec<Vec<u16>> = constraints
        .iter()
        .map(|(w, c)| {
            let mut r = w.to_vec();
            r.push(*c);
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..m {
        let Some(pr) = (rank..rows).find(|&r| aug[r][col] != 0) else { continue };
        aug.swap(rank, pr);
        let inv = field.inv(aug[rank][col]).unwrap();
        for c in 0..=m {
            aug[rank][c] = field.mul(aug[rank][c], inv);
        }
        for r in 0..rows {
            if r != rank && aug[r][col] != 0 {
                let factor = aug[r][col];
                for c in 0..=m {
                    aug[r][c] ^= field.mul(factor, aug[rank][c]);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    for r in rank..rows {
        if aug[r][m] != 0 {
            return None;
        }
    }
    let mut particular = vec![0u16; m];
    for (r, &p) in pivots.iter().enumerate() {
        particular[p] = aug[r][m];
    }
    let is_pivot: Vec<bool> = (0..m).map(|c| pivots.contains(&c)).collect();
    let mut kernel = Vec::new();
    for free in 0..m {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![0u16; m];
        v[free] = 1;
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = aug[r][free];
        }
        kernel.push(v);
    }
    Some((particular, kernel))
}

/// Nonzero combinations of `basis` with first nonzero coefficient 1
/// (projective representatives of the span).
fn canonical_span_dirs(field: &FieldSpec, basis: &[Vec<u16>], m: usize) -> Vec<Vec<u16>> {
    let q = field.q() as u64;
    let d = basis.len();
    let mut out = Vec::new();
    'combo: for idx in 1..(q.pow(d as u32)) {
        let mut rem = idx;
        let mut coef = vec![0u16; d];
        for c in coef.iter_mut() {
            *c = (rem % q) as u16;
            rem /= q;
        }
        if coef.iter().copied().find(|&c| c != 0) != Some(1) {
            continue 'combo;
        }
        let mut v = vec![0u16; m];
        for (j, &c) in coef.iter().enumerate() {
            if c != 0 {
                for t in 0..m {
                    v[t] ^= field.mul(c, basis[j][t]);
                }
            }
        }
        out.push(v);
    }
    out
}

/// Build the rank 1 -> 2 -> 1 up-down walk on M_q^m, optionally restricted
/// to the subposet dominated by the identity. Neighbor generation is
/// algebraic (no scanning): covers are L + u2 v2^T over parameterized
/// (u2, v2), descents come from the rank factorization of the cover.
pub fn matrix_walk_updown(
    field: &FieldSpec,
    m: usize,
    restrict: WalkRestriction,
) -> Result<MatrixUpDownWalk, HdxError> {
    use rayon::prelude::*;
    let ops = PackedOps::new(field.clone(), m)?;
    let q = field.q();
    let dirs = canonical_directions(field, m);
    let dot = |a: &[u16], b: &[u16]| -> u16 {
        let mut acc = 0u16;
        for i in 0..m {
            acc ^= field.mul(a[i], b[i]);
        }
        acc
    };

    // Rank-1 states with (u, v) witnesses, u a canonical direction.
    let mut states = Vec::new();
    let mut witness = Vec::new();
    match restrict {
        WalkRestriction::None => {
            for u in &dirs {
                for v in enumerate_vectors(q, m) {
                    states.push(ops.outer(u, &v));
                    witness.push((u.clone(), v));
                }
            }
        }
        WalkRestriction::DominatedByIdentity => {
            for u in &dirs {
                // all v with <u, v> = 1
                let (p, ker) = solve_affine(field, &[(u, 1)], m)
                    .expect("a nonzero functional is surjective");
                let mut combos = vec![p.clone()];
                // p + every nonzero combination of the kernel basis
                let total = (q as u64).pow(ker.len() as u32);
                for idx in 1..total {
                    let mut rem = idx;
                    let mut v = p.clone();
                    for kb in &ker {
                        let c = (rem % q as u64) as u16;
                        rem /= q as u64;
                        if c != 0 {
                            for t in 0..m {
                                v[t] ^= field.mul(c, kb[t]);
                            }
                        }
                    }
                    combos.push(v);
                }
                for v in combos {
                    debug_assert_eq!(dot(u, &v), 1);
                    states.push(ops.outer(u, &v));
                    witness.push((u.clone(), v));
                }
            }
        }
    }
    let state_index: std::collections::HashMap<u64, u32> =
        states.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    if state_index.len() != states.len() {
        return Err(HdxError::Complex("rank-1 canonicalization collided".into()));
    }

    // Phase A (parallel): packed cover values per state.
    let row_vals: Vec<Vec<u64>> = witness
        .par_iter()
        .zip(&states)
        .map(|((u1, v1), &sp)| {
            let mut vals = Vec::new();
            match restrict {
                WalkRestriction::None => {
                    // u2 any direction off span{u1}, v2 any vector off span{v1}
                    for u2 in dirs.iter().filter(|u2| u2.as_slice() != u1.as_slice()) {
                        for v2 in enumerate_vectors(q, m) {
                            if in_line(field, v1, &v2) {
                                continue;
                            }
                            vals.push(sp ^ ops.outer(u2, &v2));
                        }
                    }
                }
                WalkRestriction::DominatedByIdentity => {
                    // u2 in ker(v1^T) (canonical), v2 with <u1,v2>=0, <u2,v2>=1
                    let (_, kerv1) = solve_affine(field, &[(v1, 0)], m).unwrap();
                    for u2 in canonical_span_dirs(field, &kerv1, m) {
                        let Some((p, ker)) = solve_affine(field, &[(u1, 0), (&u2, 1)], m) else {
                            continue;
                        };
                        let total = (q as u64).pow(ker.len() as u32);
                        for idx in 0..total {
                            let mut rem = idx;
                            let mut v2 = p.clone();
                            for kb in &ker {
                                let c = (rem % q as u64) as u16;
                                rem /= q as u64;
                                if c != 0 {
                                    for t in 0..m {
                                        v2[t] ^= field.mul(c, kb[t]);
                                    }
                                }
                            }
                            vals.push(sp ^ ops.outer(&u2, &v2));
                        }
                    }
                }
            }
            vals
        })
        .collect();

    // Phase B: dedup the cover level.
    let mut upper: Vec<u64> = row_vals.iter().flatten().copied().collect();
    upper.par_sort_unstable();
    upper.dedup();
    let upper_index: std::collections::HashMap<u64, u32> =
        upper.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();

    // Phase C (parallel): rows as indices.
    let up_rows: Vec<Vec<u32>> = row_vals
        .into_par_iter()
        .map(|vals| {
            let mut row: Vec<u32> = vals.into_iter().map(|v| upper_index[&v]).collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();

    // Down rows: descents of each cover via its rank factorization.
    let a_dirs: Vec<Vec<u16>> = canonical_directions(field, 2);
    let down_rows: Vec<Vec<u32>> = upper
        .par_iter()
        .map(|&mp| {
            let (v1m, v2m) = rank2_factor(&ops, mp);
            let mut row = Vec::with_capacity(a_dirs.len() * q as usize);
            for a in &a_dirs {
                // b with <a, b> = 1 in the 2-dim core
                let (p, ker) = solve_affine(field, &[(a, 1)], 2).unwrap();
                let total = (q as u64).pow(ker.len() as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let mut b = p.clone();
                    for kb in &ker {
                        let c = (rem % q as u64) as u16;
                        rem /= q as u64;
                        if c != 0 {
                            b[0] ^= field.mul(c, kb[0]);
                            b[1] ^= field.mul(c, kb[1]);
                        }
                    }
                    let mut u = vec![0u16; m];
                    let mut v = vec![0u16; m];
                    for r in 0..m {
                        u[r] = field.mul(v1m[r][0], a[0]) ^ field.mul(v1m[r][1], a[1]);
                        v[r] = field.mul(v2m[r][0], b[0]) ^ field.mul(v2m[r][1], b[1]);
                    }
                    let l = canonicalize_rank1(&ops, ops.outer(&u, &v));
                    debug_assert_eq!(ops.rank(mp ^ l), 1);
                    row.push(state_index[&l]);
                }
            }
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();

    let nl = states.len();
    let nu = upper.len();
    let up = Csr::from_rows(nu, &up_rows);
    let down = Csr::from_rows(nl, &down_rows);
    let pi = vec![1.0 / nl as f64; nl];
    let op = WalkOperator { n: nl, pi, real: Realization::UpDown { up, down }, reversible: true };
    Ok(MatrixUpDownWalk { states, upper, op })
}

/// Is b a scalar multiple of the nonzero vector a?
fn in_line(field: &FieldSpec, a: &[u16], b: &[u16]) -> bool {
    let i0 = a.iter().position(|&x| x != 0).unwrap();
    if b[i0] == 0 {
        return b.iter().all(|&x| x == 0);
    }
    let c = field.mul(b[i0], field.inv(a[i0]).unwrap());
    a.iter().zip(b).all(|(&x, &y)| field.mul(c, x) == y)
}

/// Rank factorization M = V1 V2^T (V1, V2 of shape m x 2) of a rank-2
/// matrix: V2^T is the echelon form of the rows, V1 the pivot columns.
fn rank2_factor(ops: &PackedOps, p: u64) -> (Vec<[u16; 2]>, Vec<[u16; 2]>) {
    let f = &ops.field;
    let m = ops.m;
    let mut rows: Vec<Vec<u16>> =
        (0..m).map(|r| (0..m).map(|c| ops.get(p, r, c)).collect()).collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..m {
        if rank == m {
            break;
        }
        let Some(pr) = (rank..m).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, pr);
        let inv = f.inv(rows[rank][col]).unwrap();
        for c in 0..m {
            rows[rank][c] = f.mul(rows[rank][c], inv);
        }
        for r in 0..m {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in 0..m {
                    rows[r][c] ^= f.mul(factor, rows[rank][c]);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    assert_eq!(rank, 2, "rank2_factor needs a rank-2 input");
    let mut v2 = vec![[0u16; 2]; m];
    for r in 0..m {
        v2[r][0] = rows[0][r];
        v2[r][1] = rows[1][r];
    }
    let mut v1 = vec![[0u16; 2]; m];
    for r in 0..m {
        v1[r][0] = ops.get(p, r, pivots[0]);
        v1[r][1] = ops.get(p, r, pivots[1]);
    }
    (v1, v2)
}

/// The localized graph on rank-1 matrices strictly under the identity:
/// vertices rank-1 L < I_m, edges {L1, L2} with L1 + L2 of rank 2 and
/// dominated by I_m.
pub fn localized_graph(
    field: &FieldSpec,
    m: usize,
) -> Result<(Vec<u64>, WeightedGraph), HdxError> {
    use rayon::prelude::*;
    if m < 3 {
        return Err(HdxError::Precondition("localized graph needs m >= 3".into()));
    }
    let ops = PackedOps::new(field.clone(), m)?;
    let q = field.q();
    let dirs = canonical_directions(field, m);
    let dot = |a: &[u16], b: &[u16]| -> u16 {
        let mut acc = 0u16;
        for i in 0..m {
            acc ^= field.mul(a[i], b[i]);
        }
        acc
    };
    let mut states = Vec::new();
    let mut witness = Vec::new();
    for u in &dirs {
        let (p, ker) = solve_affine(field, &[(u, 1)], m).unwrap();
        let total = (q as u64).pow(ker.len() as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut v = p.clone();
            for kb in &ker {
                let c = (rem % q as u64) as u16;
                rem /= q as u64;
                if c != 0 {
                    for t in 0..m {
                        v[t] ^= field.mul(c, kb[t]);
                    }
                }
            }
            debug_assert_eq!(dot(u, &v), 1);
            states.push(ops.outer(u, &v));
            witness.push((u.clone(), v));
        }
    }
    let index: std::collections::HashMap<u64, u32> =
        states.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    let mut pairs: Vec<(u32, u32)> = witness
        .par_iter()
        .enumerate()
        .flat_map_iter(|(si, (u1, v1))| {
            // L2 = u2 v2^T with u2 in ker(v1^T), <u1,v2> = 0, <u2,v2> = 1
            let (_, kerv1) = solve_affine(field, &[(v1.as_slice(), 0)], m).unwrap();
            let mut local = Vec::new();
            for u2 in canonical_span_dirs(field, &kerv1, m) {
                let Some((p, ker)) = solve_affine(field, &[(u1.as_slice(), 0), (&u2, 1)], m)
                else {
                    continue;
                };
                let total = (q as u64).pow(ker.len() as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let mut v2 = p.clone();
                    for kb in &ker {
                        let c = (rem % q as u64) as u16;
                        rem /= q as u64;
                        if c != 0 {
                            for t in 0..m {
                                v2[t] ^= field.mul(c, kb[t]);
                            }
                        }
                    }
                    let id = index[&ops.outer(&u2, &v2)];
                    if (si as u32) < id {
                        local.push((si as u32, id));
                    }
                }
            }
            local
        })
        .collect();
    pairs.par_sort_unstable();
    pairs.dedup();
    Ok((states, WeightedGraph::uniform(witness.len(), pairs)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_graph(n: usize, with_loops: bool) -> WeightedGraph {
        let mut pairs = Vec::new();
        for i in 0..n as u32 {
            for j in i..n as u32 {
                if i != j || with_loops {
                    pairs.push((i, j));
                }
            }
        }
        WeightedGraph::uniform(n, pairs)
    }

    fn lam(g: &WeightedGraph) -> f64 {
        lambda(&g.walk_operator().unwrap(), &LambdaOptions::default()).unwrap().lambda
    }

    #[test]
    fn lambda_examples() {
        assert!(lam(&complete_graph(6, true)).abs() < 1e-12);
        assert!((lam(&complete_graph(4, false)) - 1.0 / 3.0).abs() < 1e-12);
        let c4 = WeightedGraph::uniform(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((lam(&c4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_matches_jacobi() {
        let g = WeightedGraph::uniform(
            7,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (0, 3), (1, 5)],
        );
        let w = g.walk_operator().unwrap();
        let dense = lambda(&w, &LambdaOptions::default()).unwrap();
        let forced = LambdaOptions { dense_cap: 0, ..Default::default() };
        let power = lambda(&w, &forced).unwrap();
        assert_eq!(dense.method, "jacobi");
        assert_eq!(power.method, "power");
        assert!((dense.lambda - power.lambda).abs() < 1e-7, "{} vs {}", dense.lambda, power.lambda);
    }

    #[test]
    fn disconnected_flagged() {
        let g = WeightedGraph::uniform(4, vec![(0, 1), (2, 3)]);
        let rep = lambda(&g.walk_operator().unwrap(), &LambdaOptions::default()).unwrap();
        assert!(rep.disconnected);
        assert_eq!(rep.lambda, 1.0);
    }

    #[test]
    fn tensor_examples() {
        let k3 = complete_graph(3, false).walk_operator().unwrap();
        let prod = tensor(&k3, &k3);
        let rep = lambda(&prod, &LambdaOptions::default()).unwrap();
        assert!((rep.lambda - 0.5).abs() < 1e-12);

        let single = WalkOperator::dense(1, vec![1.0], vec![1.0]);
        let same = tensor(&k3, &single);
        let a = lambda(&k3, &LambdaOptions::default()).unwrap().lambda;
        let b = lambda(&same, &LambdaOptions::default()).unwrap().lambda;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn projection_c6_to_c3() {
        let c6 = WeightedGraph::uniform(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        // Antipodal identification; each small edge receives mass 2.
        let c3 = WeightedGraph::weighted(
            3,
            vec![(0, 1), (1, 2), (2, 0)],
            vec![q_int(2), q_int(2), q_int(2)],
        );
        let pi = [0u32, 1, 2, 0, 1, 2];
        let rep = projection_check(&pi, &c6, &c3, &LambdaOptions::default()).unwrap();
        assert!(rep.mass_identity_ok);
        assert!((rep.lambda_small - 0.5).abs() < 1e-12);
        assert!((rep.lambda_big - 1.0).abs() < 1e-12);
        assert!(rep.lambda_small <= rep.lambda_big + 1e-9);
    }

    #[test]
    fn tv_bound_examples() {
        let g = complete_graph(4, false);
        let w = g.walk_operator().unwrap();
        let eps = tv_coupling_bound(&w, &w, &[0, 1, 2, 3]).unwrap();
        assert_eq!(eps, 0.0);

        let delta = 0.05;
        let mut mat = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    mat[i * 4 + j] = 1.0 / 3.0;
                }
            }
        }
        let mut pert = mat.clone();
        for i in 0..4usize {
            let (a, b) = ((i + 1) % 4, (i + 2) % 4);
            pert[i * 4 + a] += delta;
            pert[i * 4 + b] -= delta;
        }
        let w1 = WalkOperator::dense(4, vec![0.25; 4], mat);
        let w2 = WalkOperator::dense(4, vec![0.25; 4], pert);
        let eps = tv_coupling_bound(&w1, &w2, &[0, 1, 2, 3]).unwrap();
        assert!((eps - 2.0 * delta).abs() < 1e-12);
    }

    #[test]
    fn perp_graph_cases() {
        // (2,2): 3 vertices, A^2 = I with the self-loop at (1,1).
        let p = perp_graph(2, 2).unwrap();
        assert_eq!(p.graph.n, 3);
        assert!(p.square_identity_holds().is_ok());
        assert!(p.square_identity_class_form_holds());
        let rep = lambda(&p.graph.walk_operator().unwrap(), &LambdaOptions::default()).unwrap();
        assert!(rep.lambda <= 1.0 + 1e-9);

        // (2,3): 7 vertices, lambda <= 1/sqrt(3).
        let p = perp_graph(2, 3).unwrap();
        assert_eq!(p.graph.n, 7);
        assert!(p.square_identity_holds().is_ok());
        let rep = lambda(&p.graph.walk_operator().unwrap(), &LambdaOptions::default()).unwrap();
        assert!(rep.lambda <= 1.0 / 3f64.sqrt() + 1e-9);

        // (3,3): 26 vertices. The scalar form fails exactly at proportional
        // pairs (v and 2v share a whole hyperplane of orthogonals); the
        // class form is exact in integers.
        let p = perp_graph(3, 3).unwrap();
        assert_eq!(p.graph.n, 26);
        let err = p.square_identity_holds().unwrap_err();
        assert_eq!((err.2, err.3), (8, 2));
        assert!(p.square_identity_class_form_holds());
    }

    #[test]
    fn updown_walk_tiny_restricted() {
        // (q=2, m=2) restricted: the only rank-2 matrix under I is I itself,
        // so the walk mixes in one step and lambda = 0.
        let f = FieldSpec::new(1).unwrap();
        let w = matrix_walk_updown(&f, 2, WalkRestriction::DominatedByIdentity).unwrap();
        assert_eq!(w.states.len(), 6);
        assert_eq!(w.upper.len(), 1);
        let rep = lambda(&w.op, &LambdaOptions { dense_cap: 0, ..Default::default() }).unwrap();
        assert!(rep.lambda.abs() < 1e-9, "lambda = {}", rep.lambda);
    }

    #[test]
    fn updown_walk_m2_unrestricted_small() {
        // q=2, m=2: 9 rank-1 states, 6 invertible matrices above.
        let f = FieldSpec::new(1).unwrap();
        let w = matrix_walk_updown(&f, 2, WalkRestriction::None).unwrap();
        assert_eq!(w.states.len(), 9);
        assert_eq!(w.upper.len(), 6);
        // Exhaustive: every rank-2 matrix dominates exactly 6 rank-1 matrices.
        if let Realization::UpDown { down, .. } = &w.op.real {
            for i in 0..down.n_from {
                assert_eq!(down.row(i).len(), 6);
            }
        } else {
            panic!("expected UpDown realization");
        }
        assert!(w.op.row_sum_defect() < 1e-12);
        assert!(w.op.reversibility_defect() < 1e-12);
    }

    #[test]
    fn localized_graph_small() {
        let f = FieldSpec::new(1).unwrap();
        let (states, g) = localized_graph(&f, 3).unwrap();
        // (q^3 - 1) q^2 / (q - 1) = 28 at q = 2.
        assert_eq!(states.len(), 28);
        assert_eq!(g.n, 28);
        let ops = PackedOps::new(f.clone(), 3).unwrap();
        let id = ops.identity();
        for &(a, b) in &g.pairs {
            let s = states[a as usize] ^ states[b as usize];
            assert_eq!(ops.rank(s), 2);
            assert_eq!(ops.rank(id ^ s), 1);
        }
    }
}
