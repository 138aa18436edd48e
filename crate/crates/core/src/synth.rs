//! Synthetic geometry: near-orthogonal teacher construction, student
//! initialization, the Gram-threshold graph, and randomized maximal
//! independent sets for counting approximately orthogonal vectors.
//!
//! Teacher vectors are Rademacher: every coordinate is +-1/sqrt(d), so each
//! row is exactly unit norm and, in high dimension, pairwise inner products
//! concentrate near zero. The number of vectors defaults to
//! `floor(exp(eps^2 d / 4))`, the count the construction supports with high
//! probability.

use std::io::Write;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::repr::{normalize_rows, GramMatrix, RepresentationMatrix};

/// Configuration for the teacher construction.
#[derive(Debug, Clone)]
pub struct TeacherConfig {
    pub d_t: usize,
    pub epsilon: f64,
    pub n_override: Option<usize>,
    pub seed: u64,
}

impl TeacherConfig {
    pub fn new(d_t: usize, epsilon: f64, n_override: Option<usize>, seed: u64) -> Result<Self> {
        if d_t < 2 {
            return Err(Error::InvalidConfig(format!("d_t must be >= 2, got {d_t}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if n_override == Some(0) {
            return Err(Error::InvalidConfig("n_override must be >= 1".into()));
        }
        Ok(Self {
            d_t,
            epsilon,
            n_override,
            seed,
        })
    }

    /// Number of teacher vectors: `floor(exp(eps^2 d_t / 4))` unless
    /// overridden. With `d_t = 1000`, `eps = 0.2` this is 22026.
    pub fn n(&self) -> usize {
        self.n_override.unwrap_or_else(|| {
            (self.epsilon * self.epsilon * self.d_t as f64 / 4.0).exp().floor() as usize
        })
    }
}

/// Deterministic mixer for priorities and derived seeds (splitmix64).
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based priority keyed by (seed, round, vertex).
fn priority(seed: u64, round: u64, vertex: u64) -> u64 {
    mix64(mix64(mix64(seed).wrapping_add(round)).wrapping_add(vertex))
}

/// Derives an independent stream seed from a base seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

/// Teacher representation with entries +-1/sqrt(d_t); deterministic in the seed.
pub fn build_teacher(cfg: &TeacherConfig) -> RepresentationMatrix {
    let n = cfg.n();
    let d = cfg.d_t;
    let scale = 1.0 / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            data[(i, j)] = if rng.random::<bool>() { scale } else { -scale };
        }
    }
    RepresentationMatrix::new(data).expect("Rademacher matrix is finite and non-empty")
}

/// Student from an explicit projection: `normalize_rows(R_t G)`.
pub fn project_student(
    rt: &RepresentationMatrix,
    g: &DMatrix<f64>,
) -> Result<RepresentationMatrix> {
    if g.nrows() != rt.dim() {
        return Err(Error::dim_mismatch(format!(
            "projection has {} rows but teacher dim is {}",
            g.nrows(),
            rt.dim()
        )));
    }
    normalize_rows(&(rt.data() * g))
}

/// Student initialized by a random Gaussian projection of the teacher.
///
/// The projection has i.i.d. standard normal entries scaled by
/// `1/sqrt(d_s)`, and rows are re-normalized afterwards.
pub fn init_student_projected(
    rt: &RepresentationMatrix,
    d_s: usize,
    seed: u64,
) -> Result<RepresentationMatrix> {
    if d_s >= rt.dim() {
        return Err(Error::InvalidConfig(format!(
            "projected init requires d_s < d_t, got d_s={d_s}, d_t={}",
            rt.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (d_s as f64).sqrt();
    let g = DMatrix::from_fn(rt.dim(), d_s, |_, _| {
        rng.sample::<f64, _>(StandardNormal) * scale
    });
    project_student(rt, &g)
}

/// Student with i.i.d. Gaussian rows normalized to the unit sphere,
/// carrying no correspondence with the teacher.
pub fn init_student_random(n: usize, d_s: usize, seed: u64) -> Result<RepresentationMatrix> {
    if n == 0 || d_s == 0 {
        return Err(Error::InvalidConfig("n and d_s must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = DMatrix::from_fn(n, d_s, |_, _| rng.sample::<f64, _>(StandardNormal));
    // A fresh Gaussian row has negligible probability of being zero, but the
    // fn must not panic if the RNG produces one; reseeding is not an option
    // under determinism, so propagate the error.
    normalize_rows(&data)
}

/// Random unit-norm rows, the workhorse fixture generator for tests.
pub fn random_unit_rows(n: usize, d: usize, seed: u64) -> RepresentationMatrix {
    init_student_random(n, d, seed).expect("gaussian rows are nonzero")
}

/// Random unit-norm rows confined to the first `rank` coordinates of a
/// `d`-dimensional space, so the Gram matrix has rank at most `rank`.
pub fn low_rank_unit_rows(n: usize, d: usize, rank: usize, seed: u64) -> RepresentationMatrix {
    assert!(rank >= 1 && rank <= d, "rank must lie in [1, d]");
    let base = random_unit_rows(n, rank, seed);
    let mut data = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..rank {
            data[(i, j)] = base.data()[(i, j)];
        }
    }
    RepresentationMatrix::new(data).expect("embedding preserves finiteness")
}

/// Random orthogonal matrix from the QR factorization of a Gaussian.
pub fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Random `d_s x d_t` matrix with orthonormal rows (`P P^T = I`), `d_s <= d_t`.
pub fn random_right_orthonormal(d_s: usize, d_t: usize, seed: u64) -> DMatrix<f64> {
    assert!(d_s <= d_t, "right-orthonormal requires d_s <= d_t");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d_t, d_s, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q().transpose()
}

/// Undirected graph with an edge wherever `|<v_i, v_j>| > epsilon`.
///
/// Adjacency is stored twice: packed bit rows for O(1) membership and plain
/// neighbor lists for iteration. Near-orthogonal inputs produce near-empty
/// graphs, so the lists stay tiny even at tens of thousands of vertices.
#[derive(Debug, Clone)]
pub struct ThresholdGraph {
    n: usize,
    epsilon: f64,
    stride: usize,
    bits: Vec<u64>,
    neighbors: Vec<Vec<u32>>,
    edge_count: usize,
}

impl ThresholdGraph {
    fn with_edges(n: usize, epsilon: f64, edges: Vec<(u32, u32)>) -> Self {
        let stride = n.div_ceil(64);
        let mut bits = vec![0u64; n * stride];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            let (i, j) = (i as usize, j as usize);
            bits[i * stride + j / 64] |= 1 << (j % 64);
            bits[j * stride + i / 64] |= 1 << (i % 64);
            neighbors[i].push(j as u32);
            neighbors[j].push(i as u32);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            n,
            epsilon,
            stride,
            bits,
            neighbors,
            edge_count: edges.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Edges as a fraction of all unordered vertex pairs.
    pub fn edge_density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edge_count as f64 / (self.n as f64 * (self.n as f64 - 1.0) / 2.0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.stride + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[v]
    }

    /// No vertex of `set` is adjacent to another vertex of `set`.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        for (idx, &i) in set.iter().enumerate() {
            for &j in &set[idx + 1..] {
                if self.has_edge(i, j) {
                    return false;
                }
            }
        }
        true
    }

    /// Every vertex outside `set` has at least one neighbor inside it.
    pub fn is_maximal(&self, set: &[usize]) -> bool {
        let mut inside = vec![false; self.n];
        for &v in set {
            inside[v] = true;
        }
        (0..self.n).all(|v| inside[v] || self.neighbors[v].iter().any(|&u| inside[u as usize]))
    }

    /// One `i j` pair per line, 0-based, `i < j`.
    pub fn write_edge_list<W: Write>(&self, w: &mut W) -> Result<()> {
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if (j as usize) > i {
                    writeln!(w, "{i} {j}")?;
                }
            }
        }
        Ok(())
    }
}

/// Threshold graph from an explicit Gram matrix.
pub fn threshold_graph(k: &GramMatrix, epsilon: f64) -> ThresholdGraph {
    let n = k.n();
    let data = k.data();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if data[(i, j)].abs() > epsilon {
                edges.push((i as u32, j as u32));
            }
        }
    }
    ThresholdGraph::with_edges(n, epsilon, edges)
}

/// Threshold graph computed directly from representation rows.
///
/// Inner products are evaluated in row blocks so the full `n x n` Gram matrix
/// is never materialized; at the paper's scale that matrix would not fit in
/// memory while the graph itself does.
pub fn threshold_graph_from_rows(r: &RepresentationMatrix, epsilon: f64) -> ThresholdGraph {
    const BLOCK: usize = 256;
    let n = r.n();
    let data = r.data();
    let block_starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let mut per_block: Vec<Vec<(u32, u32)>> = block_starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(n - start);
            let block = data.rows(start, len);
            let products = block * data.transpose();
            let mut edges = Vec::new();
            for bi in 0..len {
                let i = start + bi;
                for j in (i + 1)..n {
                    if products[(bi, j)].abs() > epsilon {
                        edges.push((i as u32, j as u32));
                    }
                }
            }
            edges
        })
        .collect();
    let mut edges = Vec::new();
    for block_edges in &mut per_block {
        edges.append(block_edges);
    }
    ThresholdGraph::with_edges(n, epsilon, edges)
}

/// A maximal independent set together with the seed that produced it.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub independent_set: Vec<usize>,
    pub count: usize,
    pub seed: u64,
}

/// Luby's randomized maximal independent set.
///
/// Each round draws a priority per active vertex from a counter-based
/// generator keyed by (seed, round, vertex), selects vertices whose priority
/// beats every active neighbor (ties broken by vertex index), then removes
/// the selected vertices and their neighborhoods. The result is a pure
/// function of (graph, seed) regardless of evaluation order.
pub fn luby_mis(graph: &ThresholdGraph, seed: u64) -> OrthogonalityReport {
    let n = graph.n();
    let mut active: Vec<bool> = vec![true; n];
    let mut active_list: Vec<u32> = (0..n as u32).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut round: u64 = 0;
    while !active_list.is_empty() {
        let winners: Vec<u32> = active_list
            .par_iter()
            .copied()
            .filter(|&v| {
                let pv = (priority(seed, round, v as u64), v);
                graph.neighbors(v as usize).iter().all(|&u| {
                    !active[u as usize] || pv > (priority(seed, round, u as u64), u)
                })
            })
            .collect();
        for &v in &winners {
            selected.push(v as usize);
            active[v as usize] = false;
            for &u in graph.neighbors(v as usize) {
                active[u as usize] = false;
            }
        }
        active_list.retain(|&v| active[v as usize]);
        round += 1;
    }
    selected.sort_unstable();
    OrthogonalityReport {
        count: selected.len(),
        independent_set: selected,
        seed,
    }
}

/// Best maximal-independent-set size over `trials` Luby restarts.
///
/// Larger maximal sets are tighter lower bounds on the true maximum, so the
/// max over restarts is reported.
pub fn count_eps_orthogonal(
    r: &RepresentationMatrix,
    epsilon: f64,
    seed: u64,
    trials: usize,
) -> usize {
    assert!(trials >= 1, "trials must be >= 1");
    let graph = threshold_graph_from_rows(r, epsilon);
    count_eps_orthogonal_on(&graph, seed, trials)
}

/// Same as [`count_eps_orthogonal`] on a pre-built graph.
pub fn count_eps_orthogonal_on(graph: &ThresholdGraph, seed: u64, trials: usize) -> usize {
    (0..trials)
        .map(|t| luby_mis(graph, derive_seed(seed, t as u64)).count)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::gram;
    use nalgebra::dmatrix;

    #[test]
    fn teacher_config_count_matches_construction() {
        let cfg = TeacherConfig::new(1000, 0.2, None, 0).unwrap();
        assert_eq!(cfg.n(), 22026);
    }

    #[test]
    fn teacher_config_rejects_bad_epsilon() {
        assert!(TeacherConfig::new(10, 0.0, None, 0).is_err());
        assert!(TeacherConfig::new(10, 1.0, None, 0).is_err());
        assert!(TeacherConfig::new(1, 0.5, None, 0).is_err());
    }

    #[test]
    fn teacher_single_row_entries() {
        let cfg = TeacherConfig::new(4, 0.2, Some(1), 7).unwrap();
        let t = build_teacher(&cfg);
        assert_eq!(t.n(), 1);
        for v in t.data().iter() {
            assert!((v.abs() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn teacher_rows_are_unit_norm() {
        let cfg = TeacherConfig::new(37, 0.5, Some(20), 3).unwrap();
        let t = build_teacher(&cfg);
        assert!(t.has_unit_rows(1e-12));
    }

    #[test]
    fn teacher_is_deterministic() {
        let cfg = TeacherConfig::new(16, 0.3, Some(8), 42).unwrap();
        assert_eq!(build_teacher(&cfg).data(), build_teacher(&cfg).data());
    }

    #[test]
    fn identity_projection_recovers_teacher() {
        let cfg = TeacherConfig::new(8, 0.3, Some(5), 1).unwrap();
        let t = build_teacher(&cfg);
        let rs = project_student(&t, &DMatrix::identity(8, 8)).unwrap();
        assert!((rs.data() - t.data()).norm() < 1e-12);
    }

    #[test]
    fn projected_student_shape() {
        let cfg = TeacherConfig::new(32, 0.4, Some(10), 2).unwrap();
        let t = build_teacher(&cfg);
        let rs = init_student_projected(&t, 16, 9).unwrap();
        assert_eq!((rs.n(), rs.dim()), (10, 16));
        assert!(rs.has_unit_rows(1e-12));
    }

    #[test]
    fn random_student_is_deterministic() {
        let a = init_student_random(6, 4, 11).unwrap();
        let b = init_student_random(6, 4, 11).unwrap();
        assert_eq!(a.data(), b.data());
        assert!(a.has_unit_rows(1e-12));
    }

    #[test]
    fn single_random_row_is_unit() {
        let r = init_student_random(1, 3, 5).unwrap();
        assert!((r.data().row(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_graph_identity_is_empty() {
        let k = gram(&normalize_rows(&DMatrix::identity(4, 4)).unwrap());
        let g = threshold_graph(&k, 0.5);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn threshold_graph_all_ones_is_complete() {
        let k = GramMatrix::all_ones(3);
        let g = threshold_graph(&k, 0.5);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(0, 2));
    }

    #[test]
    fn threshold_graph_is_symmetric() {
        let r = random_unit_rows(10, 3, 17);
        let g = threshold_graph(&gram(&r), 0.3);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        for i in 0..10 {
            assert!(!g.has_edge(i, i), "self loop at {i}");
        }
    }

    #[test]
    fn blocked_and_gram_threshold_routes_agree() {
        let r = random_unit_rows(300, 6, 23);
        let from_gram = threshold_graph(&gram(&r), 0.4);
        let from_rows = threshold_graph_from_rows(&r, 0.4);
        assert_eq!(from_gram.edge_count(), from_rows.edge_count());
        for i in 0..300 {
            assert_eq!(from_gram.neighbors(i), from_rows.neighbors(i));
        }
    }

    #[test]
    fn luby_on_empty_graph_selects_all() {
        let k = gram(&normalize_rows(&DMatrix::identity(5, 5)).unwrap());
        let g = threshold_graph(&k, 0.5);
        let report = luby_mis(&g, 0);
        assert_eq!(report.count, 5);
    }

    #[test]
    fn luby_on_triangle_selects_one() {
        let g = threshold_graph(&GramMatrix::all_ones(3), 0.5);
        for seed in 0..20 {
            let report = luby_mis(&g, seed);
            assert_eq!(report.count, 1);
            assert!(g.is_independent(&report.independent_set));
            assert!(g.is_maximal(&report.independent_set));
        }
    }

    #[test]
    fn luby_on_path_is_maximal() {
        // Path 0 - 1 - 2 via inner products: rows 0 and 2 orthogonal.
        let r = normalize_rows(&dmatrix![
            1.0, 0.0;
            0.6, 0.8;
            0.0, 1.0
        ])
        .unwrap();
        let g = threshold_graph(&gram(&r), 0.5);
        assert_eq!(g.edge_count(), 2);
        for seed in 0..20 {
            let report = luby_mis(&g, seed);
            assert!(report.count == 1 || report.count == 2);
            assert!(g.is_independent(&report.independent_set));
            assert!(g.is_maximal(&report.independent_set));
        }
    }

    #[test]
    fn luby_is_deterministic_in_seed() {
        let r = random_unit_rows(40, 3, 31);
        let g = threshold_graph(&gram(&r), 0.3);
        let a = luby_mis(&g, 99);
        let b = luby_mis(&g, 99);
        assert_eq!(a.independent_set, b.independent_set);
    }

    #[test]
    fn count_on_orthonormal_rows_is_n() {
        let r = normalize_rows(&DMatrix::identity(6, 6)).unwrap();
        assert_eq!(count_eps_orthogonal(&r, 0.25, 0, 3), 6);
    }

    #[test]
    fn count_on_duplicated_directions() {
        // Two copies of e1 and one e2: the duplicates conflict, so the best
        // independent set keeps one of them plus e2.
        let r = normalize_rows(&dmatrix![
            1.0, 0.0;
            1.0, 0.0;
            0.0, 1.0
        ])
        .unwrap();
        assert_eq!(count_eps_orthogonal(&r, 0.5, 1, 5), 2);
    }

    #[test]
    fn edge_list_export_format() {
        let g = threshold_graph(&GramMatrix::all_ones(3), 0.5);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n0 2\n1 2\n");
    }
}
