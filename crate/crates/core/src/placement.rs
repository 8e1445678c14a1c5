//! File mapping, cascaded function assignment, and the synthetic Map and
//! Reduce phases.
//!
//! Lattice point `i` owns files `(i-1)*eta1+1 ..= i*eta1` and functions
//! `(i-1)*eta2+1 ..= i*eta2`; both are held by exactly the `r` nodes of the
//! single group `T_i`. A node therefore holds the files and functions of
//! every lattice point whose coordinate along its dimension equals its
//! position.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lattice::{HypercuboidShape, LatticeError, LatticeIndex, NodeId};
use crate::rational::{int, Rational};

/// Files held by the synthetic library are never materialized; this only
/// guards against configs that would not fit in memory.
pub const MAX_IVS: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacementError {
    #[error(transparent)]
    Shape(#[from] LatticeError),
    #[error("eta1 and eta2 must be at least 1 (got {0}, {1})")]
    ZeroEta(usize, usize),
    #[error("iv_bits must be a positive multiple of 8 (got {0})")]
    IvBits(usize),
    #[error("configuration needs {0} intermediate values, more than the supported {MAX_IVS}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementConfig {
    pub shape: HypercuboidShape,
    pub eta1: usize,
    pub eta2: usize,
    /// `T`, bits per intermediate value.
    pub iv_bits: usize,
    /// `B`, bits per input file. Bookkeeping only.
    pub file_bits: usize,
    pub seed: u64,
}

impl PlacementConfig {
    pub fn new(shape: HypercuboidShape) -> Self {
        Self { shape, eta1: 1, eta2: 1, iv_bits: 128, file_bits: 1024, seed: 1 }
    }

    pub fn with_eta(mut self, eta1: usize, eta2: usize) -> Self {
        self.eta1 = eta1;
        self.eta2 = eta2;
        self
    }

    pub fn with_iv_bits(mut self, iv_bits: usize) -> Self {
        self.iv_bits = iv_bits;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PlacementError> {
        if self.eta1 == 0 || self.eta2 == 0 {
            return Err(PlacementError::ZeroEta(self.eta1, self.eta2));
        }
        if self.iv_bits == 0 || !self.iv_bits.is_multiple_of(8) {
            return Err(PlacementError::IvBits(self.iv_bits));
        }
        let ivs = self
            .num_files().saturating_mul(self.num_functions());
        if ivs > MAX_IVS {
            return Err(PlacementError::TooLarge(ivs));
        }
        Ok(())
    }

    /// `N = eta1 * X`
    pub fn num_files(&self) -> usize {
        self.eta1.saturating_mul(self.shape.points())
    }

    /// `Q = eta2 * X`
    pub fn num_functions(&self) -> usize {
        self.eta2.saturating_mul(self.shape.points())
    }

    pub fn iv_bytes(&self) -> usize {
        self.iv_bits / 8
    }
}

#[derive(Debug, Clone)]
pub struct Placement {
    config: PlacementConfig,
    node_files: Vec<Vec<usize>>,
    node_functions: Vec<Vec<usize>>,
}

impl Placement {
    pub fn build(config: PlacementConfig) -> Result<Self, PlacementError> {
        config.validate()?;
        let shape = &config.shape;
        let mut node_files = vec![Vec::new(); shape.nodes()];
        let mut node_functions = vec![Vec::new(); shape.nodes()];
        for point in 1..=shape.points() {
            let idx = LatticeIndex(point);
            for node in shape.group_of(idx) {
                node_files[node.0 - 1].extend(file_range(config.eta1, idx));
                node_functions[node.0 - 1].extend(file_range(config.eta2, idx));
            }
        }
        Ok(Self { config, node_files, node_functions })
    }

    pub fn config(&self) -> &PlacementConfig {
        &self.config
    }

    pub fn shape(&self) -> &HypercuboidShape {
        &self.config.shape
    }

    pub fn num_files(&self) -> usize {
        self.config.num_files()
    }

    pub fn num_functions(&self) -> usize {
        self.config.num_functions()
    }

    /// `B_i`
    pub fn files_of_point(&self, point: LatticeIndex) -> RangeInclusive<usize> {
        file_range(self.config.eta1, point)
    }

    /// `D_i`
    pub fn functions_of_point(&self, point: LatticeIndex) -> RangeInclusive<usize> {
        file_range(self.config.eta2, point)
    }

    pub fn point_of_file(&self, file: usize) -> LatticeIndex {
        LatticeIndex((file - 1) / self.config.eta1 + 1)
    }

    pub fn point_of_function(&self, function: usize) -> LatticeIndex {
        LatticeIndex((function - 1) / self.config.eta2 + 1)
    }

    /// `M_k`, sorted ascending.
    pub fn files_of(&self, node: NodeId) -> &[usize] {
        &self.node_files[node.0 - 1]
    }

    /// `W_k`, sorted ascending.
    pub fn functions_of(&self, node: NodeId) -> &[usize] {
        &self.node_functions[node.0 - 1]
    }

    pub fn holds_point(&self, node: NodeId, point: LatticeIndex) -> bool {
        let shape = self.shape();
        let (dim, pos) = shape.locate(node).expect("node in range");
        shape.coord_at(point, dim) == pos
    }

    pub fn holds_file(&self, node: NodeId, file: usize) -> bool {
        self.holds_point(node, self.point_of_file(file))
    }

    pub fn is_assigned(&self, node: NodeId, function: usize) -> bool {
        self.holds_point(node, self.point_of_function(function))
    }

    /// Nodes assigned `function`: the single group of its lattice point.
    pub fn reducers_of(&self, function: usize) -> Vec<NodeId> {
        self.shape().group_of(self.point_of_function(function))
    }

    /// `r = (1/N) * sum_k |M_k|`
    pub fn computation_load(&self) -> Rational {
        let total: usize = self.node_files.iter().map(Vec::len).sum();
        int(total) / int(self.num_files())
    }

    /// Number of nodes that need `v_{q,n}` but cannot map file `n`: the
    /// number of dimensions along which the lattice points of `q` and `n`
    /// differ.
    pub fn request_multiplicity(&self, function: usize, file: usize) -> usize {
        let shape = self.shape();
        let fp = self.point_of_function(function);
        let np = self.point_of_file(file);
        (0..shape.rank())
            .filter(|&d| shape.coord_at(fp, d) != shape.coord_at(np, d))
            .count()
    }

    /// Line-oriented dump, one node per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.shape().nodes() {
            let node = NodeId(k);
            let _ = writeln!(
                out,
                "node {k}: files={{{}}}, functions={{{}}}",
                join(self.files_of(node)),
                join(self.functions_of(node))
            );
        }
        out
    }
}

fn file_range(eta: usize, point: LatticeIndex) -> RangeInclusive<usize> {
    (point.0 - 1) * eta + 1..=point.0 * eta
}

fn join(items: &[usize]) -> String {
    items.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Synthetic Map function: a keyed digest of `(q, n, seed)` stretched to
/// `bytes` bytes.
pub fn map_value(seed: u64, function: usize, file: usize, bytes: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes);
    let mut counter = 0u32;
    while out.len() < bytes {
        let mut h = Sha256::new();
        h.update(b"iv");
        h.update(seed.to_le_bytes());
        h.update((function as u64).to_le_bytes());
        h.update((file as u64).to_le_bytes());
        h.update(counter.to_le_bytes());
        let block = h.finalize();
        let take = (bytes - out.len()).min(block.len());
        out.extend_from_slice(&block[..take]);
        counter += 1;
    }
    out
}

/// Synthetic Reduce function over the `N` intermediate values of one
/// function, fed in file order.
pub fn reduce_digest<'a>(function: usize, values: impl IntoIterator<Item = &'a [u8]>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"reduce");
    h.update((function as u64).to_le_bytes());
    for v in values {
        h.update(v);
    }
    h.finalize().into()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("node {node} cannot compute v_({function},{file}): file {file} is not mapped there")]
pub struct LocalityViolation {
    pub node: NodeId,
    pub function: usize,
    pub file: usize,
}

/// Every intermediate value `v_{q,n}` produced by the Map phase.
///
/// Reads go through [`IvStore::local`], which only hands a node the values
/// it could compute from its own files.
#[derive(Debug, Clone)]
pub struct IvStore {
    iv_bytes: usize,
    num_files: usize,
    payloads: Vec<u8>,
}

impl IvStore {
    /// Runs the Map phase: each value is computed once and shared by the
    /// `r` nodes that map its file.
    pub fn map_phase(placement: &Placement) -> Self {
        let cfg = placement.config();
        let (q_count, n_count, b) = (placement.num_functions(), placement.num_files(), cfg.iv_bytes());
        let mut payloads = Vec::with_capacity(q_count * n_count * b);
        for q in 1..=q_count {
            for n in 1..=n_count {
                payloads.extend(map_value(cfg.seed, q, n, b));
            }
        }
        Self { iv_bytes: b, num_files: n_count, payloads }
    }

    pub fn iv_bytes(&self) -> usize {
        self.iv_bytes
    }

    pub fn len(&self) -> usize {
        self.payloads.len() / self.iv_bytes
    }

    pub fn is_empty(&self) -> bool {
        self.payloads.is_empty()
    }

    /// Ground truth, for verification only.
    pub fn get(&self, function: usize, file: usize) -> &[u8] {
        let i = (function - 1) * self.num_files + (file - 1);
        &self.payloads[i * self.iv_bytes..(i + 1) * self.iv_bytes]
    }

    pub fn local(
        &self,
        placement: &Placement,
        node: NodeId,
        function: usize,
        file: usize,
    ) -> Result<&[u8], LocalityViolation> {
        if placement.holds_file(node, file) {
            Ok(self.get(function, file))
        } else {
            Err(LocalityViolation { node, function, file })
        }
    }

    /// Values node `k` computes in the Map phase.
    pub fn computed_at(&self, placement: &Placement, node: NodeId) -> usize {
        placement.files_of(node).len() * placement.num_functions()
    }
}
