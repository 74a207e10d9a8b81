//! The Erdos-Renyi hypergraph Ising model: sparse directed adjacency-tensor
//! generation, Hamiltonian and local-field evaluation, Glauber-dynamics
//! sampling, and the gamma_n concentration diagnostic.
//!
//! The Hamiltonian is H_n(x) = alpha^-1 n^(1-p) sum_edges x_{i1} ... x_{ip},
//! the sum running over ordered p-tuples (loops and repeats included). Raw
//! tuple-product sums are integers, so the incremental caches maintained
//! across Glauber flips are exact, not merely within rounding.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::{Binomial, Distribution};
use rand_pcg::Pcg64Mcg;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the expected number of materialized hyperedges.
pub const DEFAULT_EDGE_BUDGET: f64 = 1e8;

/// Default Glauber iteration count per sample.
pub const DEFAULT_GLAUBER_STEPS: usize = 1_000_000;

#[derive(Debug)]
enum EdgeStore {
    /// alpha = 1: every ordered tuple is present; nothing is materialized and
    /// all quantities reduce to closed forms in the spin sum.
    Complete,
    Sparse {
        /// Flat tuple storage, stride p, 0-based vertex ids, lexicographic.
        edges: Vec<u32>,
        /// Per vertex: ids of edges containing it (deduplicated).
        incident: Vec<Vec<u32>>,
        /// Per vertex: ids of edges whose first position is that vertex.
        first_pos: Vec<Vec<u32>>,
    },
}

/// A directed Erdos-Renyi hypergraph with loops: each of the n^p ordered
/// p-tuples is present independently with probability alpha.
#[derive(Debug)]
pub struct HyperGraph {
    n: usize,
    p: u32,
    alpha: f64,
    store: EdgeStore,
}

fn tuple_count(n: usize, p: u32) -> f64 {
    (n as f64).powi(p as i32)
}

fn decode_tuple(mut id: u64, n: usize, p: u32, out: &mut Vec<u32>) {
    out.clear();
    for _ in 0..p {
        out.push((id % n as u64) as u32);
        id /= n as u64;
    }
    out.reverse(); // first position = most significant digit
}

impl HyperGraph {
    /// Generate with the default edge budget.
    pub fn generate(n: usize, p: u32, alpha: f64, seed: u64) -> Result<Arc<Self>> {
        Self::generate_with_budget(n, p, alpha, seed, DEFAULT_EDGE_BUDGET)
    }

    pub fn generate_with_budget(
        n: usize,
        p: u32,
        alpha: f64,
        seed: u64,
        budget: f64,
    ) -> Result<Arc<Self>> {
        if n == 0 || p < 2 {
            return Err(Error::InvalidSpec(format!("n = {n}, p = {p}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                domain: "(0, 1]",
            });
        }
        let total = tuple_count(n, p);
        let expected = alpha * total;
        if expected > budget {
            return Err(Error::BudgetExceeded { expected, budget });
        }
        if alpha == 1.0 {
            return Ok(Arc::new(HyperGraph {
                n,
                p,
                alpha,
                store: EdgeStore::Complete,
            }));
        }
        if total > u64::MAX as f64 {
            return Err(Error::BudgetExceeded {
                expected: total,
                budget: u64::MAX as f64,
            });
        }
        let total = total as u64;
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        let mut ids: Vec<u64>;
        if expected * 4.0 >= total as f64 || total <= (1 << 20) {
            // dense or small: Bernoulli sweep over all tuples
            ids = (0..total).filter(|_| rng.gen::<f64>() < alpha).collect();
        } else {
            // sparse: Binomial count, then distinct uniform tuples
            let count = Binomial::new(total, alpha)
                .map_err(|e| Error::InvalidSpec(e.to_string()))?
                .sample(&mut rng);
            let mut seen = HashSet::with_capacity(count as usize);
            ids = Vec::with_capacity(count as usize);
            while (ids.len() as u64) < count {
                let id = rng.gen_range(0..total);
                if seen.insert(id) {
                    ids.push(id);
                }
            }
            ids.sort_unstable();
        }
        Ok(Arc::new(Self::from_tuple_ids(n, p, alpha, &ids)))
    }

    /// The complete adjacency tensor with every tuple materialized; exercises
    /// the sparse code path on a graph where closed forms are known.
    pub fn complete_materialized(n: usize, p: u32) -> Arc<Self> {
        let total = tuple_count(n, p) as u64;
        let ids: Vec<u64> = (0..total).collect();
        Arc::new(Self::from_tuple_ids(n, p, 1.0, &ids))
    }

    fn from_tuple_ids(n: usize, p: u32, alpha: f64, ids: &[u64]) -> Self {
        let mut edges = Vec::with_capacity(ids.len() * p as usize);
        let mut incident = vec![Vec::new(); n];
        let mut first_pos = vec![Vec::new(); n];
        let mut tuple = Vec::with_capacity(p as usize);
        let mut distinct = Vec::with_capacity(p as usize);
        for (eid, &id) in ids.iter().enumerate() {
            decode_tuple(id, n, p, &mut tuple);
            edges.extend_from_slice(&tuple);
            first_pos[tuple[0] as usize].push(eid as u32);
            distinct.clear();
            distinct.extend_from_slice(&tuple);
            distinct.sort_unstable();
            distinct.dedup();
            for &v in &*distinct {
                incident[v as usize].push(eid as u32);
            }
        }
        HyperGraph {
            n,
            p,
            alpha,
            store: EdgeStore::Sparse {
                edges,
                incident,
                first_pos,
            },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of tuples present.
    pub fn num_edges(&self) -> u64 {
        match &self.store {
            EdgeStore::Complete => tuple_count(self.n, self.p) as u64,
            EdgeStore::Sparse { edges, .. } => (edges.len() / self.p as usize) as u64,
        }
    }

    /// Whether a specific ordered tuple (0-based vertices) is present.
    pub fn has_edge(&self, tuple: &[u32]) -> bool {
        assert_eq!(tuple.len(), self.p as usize);
        match &self.store {
            EdgeStore::Complete => tuple.iter().all(|&v| (v as usize) < self.n),
            EdgeStore::Sparse {
                edges, first_pos, ..
            } => {
                let pp = self.p as usize;
                first_pos[tuple[0] as usize]
                    .iter()
                    .any(|&eid| &edges[eid as usize * pp..(eid as usize + 1) * pp] == tuple)
            }
        }
    }

    /// Number of present tuples whose first position is `v`.
    pub fn first_position_degree(&self, v: usize) -> u64 {
        match &self.store {
            EdgeStore::Complete => tuple_count(self.n, self.p - 1) as u64,
            EdgeStore::Sparse { first_pos, .. } => first_pos[v].len() as u64,
        }
    }

    /// 1 / (alpha n^(p-1)), the Hamiltonian scale factor.
    fn scale(&self) -> f64 {
        1.0 / (self.alpha * (self.n as f64).powi(self.p as i32 - 1))
    }

    /// Write the sorted edge list: header "n p alpha", then one 1-based
    /// p-tuple per line. Round-trips byte-exactly through `load_edge_list`.
    pub fn save_edge_list<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "{} {} {}", self.n, self.p, self.alpha)?;
        let pp = self.p as usize;
        let mut line = String::new();
        let mut write_tuple = |tuple: &[u32], w: &mut BufWriter<W>| -> Result<()> {
            line.clear();
            for (t, &v) in tuple.iter().enumerate() {
                if t > 0 {
                    line.push(' ');
                }
                line.push_str(&(v + 1).to_string());
            }
            writeln!(w, "{line}")?;
            Ok(())
        };
        match &self.store {
            EdgeStore::Complete => {
                let total = tuple_count(self.n, self.p) as u64;
                let mut tuple = Vec::new();
                for id in 0..total {
                    decode_tuple(id, self.n, self.p, &mut tuple);
                    write_tuple(&tuple, &mut w)?;
                }
            }
            EdgeStore::Sparse { edges, .. } => {
                for chunk in edges.chunks(pp) {
                    write_tuple(chunk, &mut w)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_edge_list<R: Read>(input: R) -> Result<Arc<Self>> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list file".into()))??;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad header: n".into()))?;
        let p: u32 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad header: p".into()))?;
        let alpha: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad header: alpha".into()))?;
        let mut ids = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut id: u64 = 0;
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: u64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad vertex '{tok}'")))?;
                if v < 1 || v > n as u64 {
                    return Err(Error::Parse(format!("vertex {v} out of range 1..{n}")));
                }
                id = id * n as u64 + (v - 1);
                count += 1;
            }
            if count != p {
                return Err(Error::Parse(format!("expected {p} indices, got {count}")));
            }
            ids.push(id);
        }
        Ok(Arc::new(Self::from_tuple_ids(n, p, alpha, &ids)))
    }
}

/// A spin configuration coupled to a hypergraph, with exact incremental
/// caches for the Hamiltonian and the first-position local fields.
#[derive(Debug, Clone)]
pub struct HyperIsingInstance {
    graph: Arc<HyperGraph>,
    spins: Vec<i8>,
    spin_sum: i64,
    /// Sparse store only: sum of tuple products (each +-1).
    raw_h: i64,
    /// Sparse store only: per-vertex sums over edges with first position v of
    /// the product of the remaining p-1 spins.
    raw_fields: Vec<i64>,
}

impl HyperIsingInstance {
    pub fn new(graph: Arc<HyperGraph>, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != graph.n() {
            return Err(Error::InvalidSpec(format!(
                "{} spins for n = {}",
                spins.len(),
                graph.n()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpec("spins must be +-1".into()));
        }
        let mut inst = HyperIsingInstance {
            graph,
            spins,
            spin_sum: 0,
            raw_h: 0,
            raw_fields: Vec::new(),
        };
        inst.rebuild_caches();
        Ok(inst)
    }

    /// Uniform random spins; deterministic in `seed`.
    pub fn random(graph: Arc<HyperGraph>, seed: u64) -> Self {
        let n = graph.n();
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        let spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        Self::new(graph, spins).expect("generated spins are valid")
    }

    fn rebuild_caches(&mut self) {
        self.spin_sum = self.spins.iter().map(|&s| s as i64).sum();
        match &self.graph.store {
            EdgeStore::Complete => {
                self.raw_h = 0;
                self.raw_fields.clear();
            }
            EdgeStore::Sparse { edges, .. } => {
                let pp = self.graph.p as usize;
                let n = self.graph.n;
                let mut h = 0i64;
                let mut fields = vec![0i64; n];
                for chunk in edges.chunks(pp) {
                    let mut prod = 1i64;
                    for &v in &chunk[1..] {
                        prod *= self.spins[v as usize] as i64;
                    }
                    fields[chunk[0] as usize] += prod;
                    h += prod * self.spins[chunk[0] as usize] as i64;
                }
                self.raw_h = h;
                self.raw_fields = fields;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn p(&self) -> u32 {
        self.graph.p()
    }

    pub fn graph(&self) -> &Arc<HyperGraph> {
        &self.graph
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn magnetization(&self) -> f64 {
        self.spin_sum as f64 / self.graph.n as f64
    }

    /// H_n(x) = alpha^-1 n^(1-p) sum_edges prod(x).
    pub fn hamiltonian(&self) -> f64 {
        match &self.graph.store {
            EdgeStore::Complete => {
                // exact: sum over all tuples of the product is (sum x)^p
                let n = self.graph.n as f64;
                n * self.magnetization().powi(self.graph.p as i32)
            }
            EdgeStore::Sparse { .. } => self.graph.scale() * self.raw_h as f64,
        }
    }

    /// First-position local field m_i(x) = alpha^-1 n^(1-p)
    /// sum_{(i2..ip)} A_{i i2..ip} x_{i2} ... x_{ip}.
    pub fn local_field(&self, i: usize) -> f64 {
        match &self.graph.store {
            EdgeStore::Complete => self.magnetization().powi(self.graph.p as i32 - 1),
            EdgeStore::Sparse { .. } => self.graph.scale() * self.raw_fields[i] as f64,
        }
    }

    pub fn local_fields(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.local_field(i)).collect()
    }

    /// H_n with x_i = +1 minus H_n with x_i = -1, regardless of the current
    /// spin. Sums over all p tuple positions: the directed tensor is not
    /// symmetric, so the first-position field alone would give the wrong
    /// dynamics.
    pub fn energy_gap(&self, i: usize) -> f64 {
        match &self.graph.store {
            EdgeStore::Complete => {
                let s = self.spin_sum - self.spins[i] as i64;
                let p = self.graph.p;
                let nf = self.graph.n as f64;
                // (s+1)^p - (s-1)^p, exactly in i128 when it fits
                let diff = if p as f64 * (nf + 1.0).log2() < 120.0 {
                    ((s as i128 + 1).pow(p) - (s as i128 - 1).pow(p)) as f64
                } else {
                    (s as f64 + 1.0).powi(p as i32) - (s as f64 - 1.0).powi(p as i32)
                };
                diff * nf.powi(1 - self.graph.p as i32)
            }
            EdgeStore::Sparse {
                edges, incident, ..
            } => {
                let pp = self.graph.p as usize;
                let mut gap = 0i64;
                for &eid in &incident[i] {
                    let chunk = &edges[eid as usize * pp..(eid as usize + 1) * pp];
                    let mut rest = 1i64;
                    let mut count = 0u32;
                    for &v in chunk {
                        if v as usize == i {
                            count += 1;
                        } else {
                            rest *= self.spins[v as usize] as i64;
                        }
                    }
                    if count % 2 == 1 {
                        gap += 2 * rest;
                    }
                }
                self.graph.scale() * gap as f64
            }
        }
    }

    /// Flip spin i, updating the caches exactly.
    pub fn flip(&mut self, i: usize) {
        if let EdgeStore::Sparse {
            edges, incident, ..
        } = &self.graph.store
        {
            let pp = self.graph.p as usize;
            for &eid in &incident[i] {
                let chunk = &edges[eid as usize * pp..(eid as usize + 1) * pp];
                let mut full = 1i64;
                let mut tail = 1i64;
                let mut count_all = 0u32;
                let mut count_tail = 0u32;
                for (t, &v) in chunk.iter().enumerate() {
                    let s = self.spins[v as usize] as i64;
                    full *= s;
                    if t > 0 {
                        tail *= s;
                        if v as usize == i {
                            count_tail += 1;
                        }
                    }
                    if v as usize == i {
                        count_all += 1;
                    }
                }
                if count_all % 2 == 1 {
                    self.raw_h -= 2 * full;
                }
                if count_tail % 2 == 1 {
                    self.raw_fields[chunk[0] as usize] -= 2 * tail;
                }
            }
        }
        self.spin_sum -= 2 * self.spins[i] as i64;
        self.spins[i] = -self.spins[i];
    }

    /// Heat-bath (Glauber) dynamics: repeatedly pick a uniform vertex and set
    /// it to +1 with probability 1/(1 + exp(-beta * gap)). The stationary law
    /// is the model measure; detailed balance holds by construction.
    pub fn glauber_sweep(&mut self, beta: f64, steps: usize, seed: u64) {
        let n = self.n();
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        for _ in 0..steps {
            let i = rng.gen_range(0..n);
            let gap = self.energy_gap(i);
            let p_up = 1.0 / (1.0 + (-beta * gap).exp());
            let u: f64 = rng.gen();
            let want_up = u < p_up;
            if want_up != (self.spins[i] == 1) {
                self.flip(i);
            }
        }
    }
}

/// Outcome of the Hamiltonian concentration diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub p: u32,
    pub alpha: f64,
    /// gamma_n = 3 (alpha n^(p-1))^(-1/2).
    pub gamma_n: f64,
    /// The deviation bound 3 gamma_n.
    pub bound: f64,
    /// Max over checked configurations of |H_n(x) - n mean^p| / n.
    pub max_dev: f64,
    pub configs_checked: u64,
    pub exhaustive: bool,
    pub passed: bool,
}

/// Check sup_x |H_n(x) - n X-bar^p| / n against 3 gamma_n. Exhaustive over
/// all 2^n configurations for n <= 16, otherwise a sampled diagnostic (a
/// sample cannot certify a sup over 2^n configurations).
pub fn concentration_check(
    graph: &Arc<HyperGraph>,
    num_configs: u64,
    seed: u64,
) -> Result<ConcentrationReport> {
    if num_configs == 0 {
        return Err(Error::Domain {
            name: "num_configs",
            value: 0.0,
            domain: ">= 1",
        });
    }
    let n = graph.n();
    let p = graph.p();
    let alpha = graph.alpha();
    let gamma_n = 3.0 / (alpha * (n as f64).powi(p as i32 - 1)).sqrt();
    let bound = 3.0 * gamma_n;

    let dev_of = |inst: &HyperIsingInstance| -> f64 {
        let expected = n as f64 * inst.magnetization().powi(p as i32);
        (inst.hamiltonian() - expected).abs() / n as f64
    };

    let exhaustive = n <= 16;
    let mut max_dev = 0.0_f64;
    let configs_checked;
    if exhaustive {
        let total = 1u64 << n;
        configs_checked = total;
        let mut inst =
            HyperIsingInstance::new(Arc::clone(graph), vec![-1i8; n])?;
        let mut gray_state = 0u64;
        for g in 1..=total {
            max_dev = max_dev.max(dev_of(&inst));
            if g == total {
                break;
            }
            // Gray-code walk: one flip per configuration
            let next = g ^ (g >> 1);
            let bit = (gray_state ^ next).trailing_zeros() as usize;
            inst.flip(bit);
            gray_state = next;
        }
    } else {
        configs_checked = num_configs;
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        for _ in 0..num_configs {
            let spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let inst = HyperIsingInstance::new(Arc::clone(graph), spins)?;
            max_dev = max_dev.max(dev_of(&inst));
        }
    }
    Ok(ConcentrationReport {
        n,
        p,
        alpha,
        gamma_n,
        bound,
        max_dev,
        configs_checked,
        exhaustive,
        passed: max_dev <= bound,
    })
}
