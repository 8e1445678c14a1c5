//! Hypercuboid geometry.
//!
//! A network of `K` nodes is split into `r` node sets `K_1..K_r`, where set
//! `i` holds `x_i` nodes aligned along dimension `i`. The `X = x_1 * .. * x_r`
//! lattice points each name one file set, one function set, and the single
//! node group made of the nodes at that point's coordinates.
//!
//! Conventions used throughout the crate:
//!
//! * dimension indices and positions along a dimension are 0-based;
//! * node ids, lattice indices, file ids and function ids are 1-based.
//!
//! Nodes are numbered in consecutive blocks: the first `x_1` ids form `K_1`,
//! the next `x_2` form `K_2`, and so on.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("a shape needs at least one dimension or class")]
    Empty,
    #[error("dimension {dim} has size 0")]
    ZeroDimension { dim: usize },
    #[error("class {class} has r_p = {count}, m_p = {size}; both must be at least 1")]
    InvalidClass { class: usize, count: usize, size: usize },
    #[error("lattice of shape {0:?} has more points than fit in a machine word")]
    Overflow(Vec<usize>),
    #[error("axis order {order:?} is not a permutation of 0..{rank}")]
    BadAxisOrder { order: Vec<usize>, rank: usize },
    #[error("node {0} is outside 1..={1}")]
    NodeOutOfRange(usize, usize),
    #[error("lattice index {0} is outside 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("dimension {0} is outside 0..{1}")]
    DimOutOfRange(usize, usize),
}

/// 1-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 1-based lattice point index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeIndex(pub usize);

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dimension sizes of the hypercuboid plus the digit order used to number
/// lattice points.
///
/// The axis order lists dimensions from most to least significant digit of
/// the mixed-radix lattice index. The default is `0, 1, .., r-1`, i.e. the
/// last dimension varies fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypercuboidShape {
    dims: Vec<usize>,
    axis_order: Vec<usize>,
    strides: Vec<usize>,
    offsets: Vec<usize>,
    points: usize,
    nodes: usize,
}

impl HypercuboidShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, LatticeError> {
        let order = (0..dims.len()).collect();
        Self::with_order(dims, order)
    }

    /// Builds the shape from heterogeneity classes `(r_p, m_p)`: class `p`
    /// contributes `r_p` dimensions of size `m_p`, in class order.
    pub fn from_classes(classes: &[(usize, usize)]) -> Result<Self, LatticeError> {
        if classes.is_empty() {
            return Err(LatticeError::Empty);
        }
        let mut dims = Vec::new();
        for (class, &(count, size)) in classes.iter().enumerate() {
            if count == 0 || size == 0 {
                return Err(LatticeError::InvalidClass { class, count, size });
            }
            dims.extend(std::iter::repeat_n(size, count));
        }
        Self::new(dims)
    }

    /// Same dimensions, different lattice numbering.
    pub fn with_axis_order(self, order: Vec<usize>) -> Result<Self, LatticeError> {
        Self::with_order(self.dims, order)
    }

    fn with_order(dims: Vec<usize>, order: Vec<usize>) -> Result<Self, LatticeError> {
        if dims.is_empty() {
            return Err(LatticeError::Empty);
        }
        if let Some(dim) = dims.iter().position(|&x| x == 0) {
            return Err(LatticeError::ZeroDimension { dim });
        }
        let rank = dims.len();
        let mut seen = vec![false; rank];
        if order.len() != rank || order.iter().any(|&d| d >= rank || std::mem::replace(&mut seen[d], true)) {
            return Err(LatticeError::BadAxisOrder { order, rank });
        }
        let points = dims
            .iter()
            .try_fold(1usize, |acc, &x| acc.checked_mul(x))
            .ok_or_else(|| LatticeError::Overflow(dims.clone()))?;
        let mut strides = vec![0; rank];
        let mut stride = 1;
        for &d in order.iter().rev() {
            strides[d] = stride;
            stride *= dims[d];
        }
        let mut offsets = Vec::with_capacity(rank);
        let mut next = 0;
        for &x in &dims {
            offsets.push(next);
            next += x;
        }
        Ok(Self { dims, axis_order: order, strides, offsets, points, nodes: next })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn axis_order(&self) -> &[usize] {
        &self.axis_order
    }

    /// Number of dimensions `r`, which is also the computation load.
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Number of lattice points `X`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Number of nodes `K`.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn is_homogeneous(&self) -> bool {
        self.dims.windows(2).all(|w| w[0] == w[1])
    }

    /// Node at `pos` along dimension `dim`.
    pub fn node(&self, dim: usize, pos: usize) -> NodeId {
        debug_assert!(pos < self.dims[dim]);
        NodeId(self.offsets[dim] + pos + 1)
    }

    /// Nodes of `K_dim` in increasing id order.
    pub fn dim_nodes(&self, dim: usize) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.dims[dim]).map(move |p| self.node(dim, p))
    }

    /// `(dim, pos)` of a node.
    pub fn locate(&self, node: NodeId) -> Result<(usize, usize), LatticeError> {
        if node.0 == 0 || node.0 > self.nodes {
            return Err(LatticeError::NodeOutOfRange(node.0, self.nodes));
        }
        let zero = node.0 - 1;
        let dim = self.offsets.partition_point(|&o| o <= zero) - 1;
        Ok((dim, zero - self.offsets[dim]))
    }

    pub fn coord_of(&self, index: LatticeIndex) -> Result<Vec<usize>, LatticeError> {
        if index.0 == 0 || index.0 > self.points {
            return Err(LatticeError::IndexOutOfRange(index.0, self.points));
        }
        Ok(self.coord_unchecked(index))
    }

    pub(crate) fn coord_unchecked(&self, index: LatticeIndex) -> Vec<usize> {
        let zero = index.0 - 1;
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&x, &s)| (zero / s) % x)
            .collect()
    }

    /// Position along `dim` of lattice point `index`.
    pub fn coord_at(&self, index: LatticeIndex, dim: usize) -> usize {
        ((index.0 - 1) / self.strides[dim]) % self.dims[dim]
    }

    pub fn index_of(&self, coord: &[usize]) -> LatticeIndex {
        debug_assert_eq!(coord.len(), self.rank());
        let zero: usize = coord.iter().zip(&self.strides).map(|(&c, &s)| c * s).sum();
        LatticeIndex(zero + 1)
    }

    /// The single node group `T_index`, one node per dimension in dimension order.
    pub fn group_of(&self, index: LatticeIndex) -> Vec<NodeId> {
        self.coord_unchecked(index)
            .iter()
            .enumerate()
            .map(|(d, &p)| self.node(d, p))
            .collect()
    }

    /// Lattice point of the single group given by one node per dimension.
    pub fn index_of_group(&self, group: &[NodeId]) -> Result<LatticeIndex, LatticeError> {
        let mut coord = vec![usize::MAX; self.rank()];
        for &n in group {
            let (d, p) = self.locate(n)?;
            coord[d] = p;
        }
        if coord.contains(&usize::MAX) || group.len() != self.rank() {
            return Err(LatticeError::NodeOutOfRange(0, self.nodes));
        }
        Ok(self.index_of(&coord))
    }

    pub fn single_groups(&self) -> Vec<(LatticeIndex, Vec<NodeId>)> {
        (1..=self.points)
            .map(|i| (LatticeIndex(i), self.group_of(LatticeIndex(i))))
            .collect()
    }

    /// All `(A, 2)` node groups over `dims` (0-based, strictly increasing),
    /// in lexicographic order of their position pairs.
    pub fn double_groups(&self, dims: &[usize]) -> Vec<DoubleGroup> {
        let per_dim: Vec<Vec<(usize, usize)>> = dims
            .iter()
            .map(|&d| {
                let x = self.dims[d];
                (0..x).flat_map(|a| (a + 1..x).map(move |b| (a, b))).collect()
            })
            .collect();
        cartesian(&per_dim)
            .into_iter()
            .map(|pairs| DoubleGroup { dims: dims.to_vec(), pairs })
            .collect()
    }

    /// Every single-node selection over the dimensions not in `dims`.
    /// Empty when `dims` covers all dimensions.
    pub fn complement_partners(&self, dims: &[usize]) -> Vec<Selection> {
        let rest: Vec<usize> = (0..self.rank()).filter(|d| !dims.contains(d)).collect();
        if rest.is_empty() {
            return Vec::new();
        }
        let per_dim: Vec<Vec<usize>> = rest.iter().map(|&d| (0..self.dims[d]).collect()).collect();
        cartesian(&per_dim)
            .into_iter()
            .map(|positions| Selection { dims: rest.clone(), positions })
            .collect()
    }
}

/// One chosen position along each of a subset of dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    pub dims: Vec<usize>,
    pub positions: Vec<usize>,
}

impl Selection {
    pub fn nodes(&self, shape: &HypercuboidShape) -> Vec<NodeId> {
        self.dims
            .iter()
            .zip(&self.positions)
            .map(|(&d, &p)| shape.node(d, p))
            .collect()
    }
}

/// Two distinct positions along each dimension of `dims`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DoubleGroup {
    pub dims: Vec<usize>,
    /// `(low, high)` positions, one pair per entry of `dims`.
    pub pairs: Vec<(usize, usize)>,
}

impl DoubleGroup {
    /// Members sorted by node id.
    pub fn members(&self, shape: &HypercuboidShape) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .dims
            .iter()
            .zip(&self.pairs)
            .flat_map(|(&d, &(a, b))| [shape.node(d, a), shape.node(d, b)])
            .collect();
        out.sort();
        out
    }

    /// The single selection that takes the high position on every dimension
    /// whose bit is set in `mask` and the low position elsewhere.
    pub fn half(&self, mask: usize) -> Selection {
        let positions = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| if mask >> i & 1 == 1 { b } else { a })
            .collect();
        Selection { dims: self.dims.clone(), positions }
    }
}

/// Combine a selection over `A` with one over `A^c` into a full coordinate.
pub(crate) fn join(shape: &HypercuboidShape, a: &Selection, b: &Selection) -> LatticeIndex {
    let mut coord = vec![0; shape.rank()];
    for sel in [a, b] {
        for (&d, &p) in sel.dims.iter().zip(&sel.positions) {
            coord[d] = p;
        }
    }
    shape.index_of(&coord)
}

fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::with_capacity(choices.len())];
    for options in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect();
    }
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
