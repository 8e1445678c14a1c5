//! Closed-form loads, the `L_1` baseline, and converse bounds, all exact.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::{subsets, HypercuboidShape, LatticeError, NodeId};
use crate::placement::{Placement, PlacementConfig};
use crate::rational::{decimal, fraction, int, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("round {round} is outside 1..={rank}")]
    RoundOutOfRange { round: usize, rank: usize },
    #[error("need 1 <= r, s <= K (got K={k}, r={r}, s={s})")]
    BaselineRange { k: usize, r: usize, s: usize },
    #[error("the homogeneous bound needs m >= 2 and r >= 1 (got m={m}, r={r})")]
    HomoRange { m: usize, r: usize },
    #[error("permutation must list each of the {k} nodes exactly once")]
    BadPermutation { k: usize },
    #[error("no valid shape for K={k}, r={r}: need 2 <= r <= K/2")]
    NoShape { k: usize, r: usize },
    #[error(transparent)]
    Shape(#[from] LatticeError),
}

fn binom(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

fn prod_minus_one<'a>(xs: impl IntoIterator<Item = &'a usize>) -> Rational {
    xs.into_iter().fold(Rational::one(), |acc, &x| acc * int(x - 1))
}

/// `L_c = (X-1)/(2X) + ∏(x_i - 1) / (X(4r-2))`
pub fn achievable_load(shape: &HypercuboidShape) -> Rational {
    let x = int(shape.points());
    let r = shape.rank();
    (&x - Rational::one()) / (int(2) * &x) + prod_minus_one(shape.dims()) / (&x * int(4 * r - 2))
}

/// Bits sent in round `γ`, in units of `η1·η2·T`.
pub fn per_round_bits(shape: &HypercuboidShape, gamma: usize) -> Result<Rational, AnalyticsError> {
    let r = shape.rank();
    if gamma == 0 || gamma > r {
        return Err(AnalyticsError::RoundOutOfRange { round: gamma, rank: r });
    }
    let x = int(shape.points());
    if gamma < r {
        let sum: Rational = subsets(r, gamma)
            .iter()
            .map(|a| prod_minus_one(a.iter().map(|&d| &shape.dims()[d])))
            .sum();
        Ok(x / int(2) * sum)
    } else {
        Ok(int(r) * x / int(2 * r - 1) * prod_minus_one(shape.dims()))
    }
}

/// `r / (2r - 1)`
pub fn load_upper_bound(r: usize) -> Rational {
    int(r) / int(2 * r - 1)
}

/// The `L_1` load of the cascaded scheme with `K` nodes, computation load
/// `r` and replication `s`.
pub fn li_baseline(k: usize, r: usize, s: usize) -> Result<Rational, AnalyticsError> {
    if r == 0 || s == 0 || r > k || s > k {
        return Err(AnalyticsError::BaselineRange { k, r, s });
    }
    let (ki, ri, si) = (k as i64, r as i64, s as i64);
    let lo = (ri + 1).max(si);
    let hi = (ri + si).min(ki);
    let mut num = BigInt::zero();
    for g in lo..=hi {
        num += BigInt::from(g) * binom(ki, g) * binom(g - 2, ri - 1) * binom(ri, g - si);
    }
    let den = BigInt::from(r) * binom(ki, ri) * binom(ki, si);
    Ok(Rational::new(num, den))
}

fn check_permutation(k: usize, perm: &[NodeId]) -> Result<(), AnalyticsError> {
    let mut seen = vec![false; k + 1];
    for n in perm {
        if n.0 == 0 || n.0 > k || std::mem::replace(&mut seen[n.0], true) {
            return Err(AnalyticsError::BadPermutation { k });
        }
    }
    if perm.len() != k {
        return Err(AnalyticsError::BadPermutation { k });
    }
    Ok(())
}

/// A permutation bound with its per-step IV counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationBound {
    /// Step `i`: files outside `M_{k_1..k_i}` times functions first
    /// assigned at `k_i`.
    pub steps: Vec<BigInt>,
    pub value: Rational,
}

/// Direct set-counting evaluation over a placement.
pub fn permutation_bound(placement: &Placement, perm: &[NodeId]) -> Result<PermutationBound, AnalyticsError> {
    check_permutation(placement.shape().nodes(), perm)?;
    let (q_count, n_count) = (placement.num_functions(), placement.num_files());
    let mut have_file = vec![false; n_count + 1];
    let mut have_fn = vec![false; q_count + 1];
    let mut missing_files = n_count;
    let mut steps = Vec::with_capacity(perm.len());
    for &node in perm {
        for &n in placement.files_of(node) {
            if !std::mem::replace(&mut have_file[n], true) {
                missing_files -= 1;
            }
        }
        let new_fns = placement
            .functions_of(node)
            .iter()
            .filter(|&&q| !std::mem::replace(&mut have_fn[q], true))
            .count();
        steps.push(BigInt::from(missing_files) * BigInt::from(new_fns));
    }
    let total: BigInt = steps.iter().sum();
    let value = Rational::new(total, BigInt::from(q_count) * BigInt::from(n_count));
    Ok(PermutationBound { steps, value })
}

/// Same quantity as [`permutation_bound`] for any `η1, η2`, computed from
/// the remaining size of each dimension. Taking a node of dimension `d`
/// contributes `(rem_d - 1) · (∏_{j≠d} rem_j)^2` lattice-point pairs.
pub fn lattice_permutation_bound(shape: &HypercuboidShape, perm: &[NodeId]) -> Result<PermutationBound, AnalyticsError> {
    check_permutation(shape.nodes(), perm)?;
    let dims = perm.iter().map(|&n| shape.locate(n).map(|(d, _)| d)).collect::<Result<Vec<_>, _>>()?;
    Ok(dimension_sequence_bound(shape, &dims))
}

fn dimension_sequence_bound(shape: &HypercuboidShape, dims: &[usize]) -> PermutationBound {
    let mut rem: Vec<BigInt> = shape.dims().iter().map(|&x| BigInt::from(x)).collect();
    let mut steps = Vec::with_capacity(dims.len());
    for &d in dims {
        let others: BigInt = rem.iter().enumerate().filter(|&(j, _)| j != d).map(|(_, v)| v.clone()).product();
        rem[d] -= 1;
        steps.push(&rem[d] * &others * &others);
    }
    let total: BigInt = steps.iter().sum();
    let x = BigInt::from(shape.points());
    let value = Rational::new(total, &x * &x);
    PermutationBound { steps, value }
}

/// Homogeneous converse with `m` nodes per dimension and `r` dimensions.
pub fn homo_lower_bound(m: usize, r: usize) -> Result<Rational, AnalyticsError> {
    if m < 2 || r == 0 {
        return Err(AnalyticsError::HomoRange { m, r });
    }
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mi = int(m);
    let mut sum = Rational::zero();
    for mh in 1..m {
        let p = num_traits::pow(BigInt::from(mh), 2 * r);
        sum += Rational::new(p, BigInt::from(4 * mh * mh - 1));
    }
    let m2r = num_traits::pow(BigInt::from(m), 2 * r);
    Ok(half - Rational::one() / (int(4) * mi - int(2)) - sum / Rational::from_integer(m2r))
}

/// Node order that always takes the next node from the dimension with the
/// most remaining nodes, lowest dimension index on ties.
pub fn greedy_peel(shape: &HypercuboidShape) -> Vec<NodeId> {
    let mut taken = vec![0usize; shape.rank()];
    let mut out = Vec::with_capacity(shape.nodes());
    for _ in 0..shape.nodes() {
        let d = (0..shape.rank())
            .max_by(|&a, &b| {
                let (ra, rb) = (shape.dims()[a] - taken[a], shape.dims()[b] - taken[b]);
                ra.cmp(&rb).then(b.cmp(&a))
            })
            .expect("rank >= 1");
        out.push(shape.node(d, taken[d]));
        taken[d] += 1;
    }
    out
}

/// `(L_P1, L_P2)`
pub fn het_lower_bounds(shape: &HypercuboidShape) -> (Rational, Rational) {
    let x_max = *shape.dims().iter().max().expect("rank >= 1");
    let p1 = int(x_max - 1) / int(2 * x_max);
    let p2 = lattice_permutation_bound(shape, &greedy_peel(shape)).expect("greedy peel is a permutation").value;
    (p1, p2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeLoad {
    pub dims: Vec<usize>,
    pub load: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineComparison {
    pub k: usize,
    pub r: usize,
    /// Present when `r` divides `K`.
    pub homogeneous: Option<ShapeLoad>,
    /// `[2, .., 2, K - 2(r-1)]`
    pub chain: ShapeLoad,
    pub l1: Rational,
    /// Only claimed for `r = 2`.
    pub verdict_a: Option<bool>,
    /// Only claimed for `r >= 6` and `K > r - 1 + 4r^3`.
    pub verdict_b: Option<bool>,
}

pub fn baseline_comparison(k: usize, r: usize) -> Result<BaselineComparison, AnalyticsError> {
    if r < 2 || 2 * r > k {
        return Err(AnalyticsError::NoShape { k, r });
    }
    let load_of = |dims: Vec<usize>| -> Result<ShapeLoad, AnalyticsError> {
        let load = achievable_load(&HypercuboidShape::new(dims.clone())?);
        Ok(ShapeLoad { dims, load })
    };
    let homogeneous = k.is_multiple_of(r).then(|| load_of(vec![k / r; r])).transpose()?;
    let mut chain_dims = vec![2; r - 1];
    chain_dims.push(k - 2 * (r - 1));
    let chain = load_of(chain_dims)?;
    let l1 = li_baseline(k, r, r)?;
    let verdict_a = (r == 2).then(|| {
        chain.load < l1 && homogeneous.as_ref().is_none_or(|h| h.load < l1)
    });
    let verdict_b = (r >= 6 && k > r - 1 + 4 * r * r * r).then(|| chain.load < l1);
    Ok(BaselineComparison { k, r, homogeneous, chain, l1, verdict_a, verdict_b })
}

/// Above this many lattice points the permutation bound uses the lattice
/// counting rule instead of explicit sets.
pub const DIRECT_COUNT_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub dims: Vec<usize>,
    pub k: usize,
    pub r: usize,
    pub l_formula: Rational,
    pub l_upper: Rational,
    pub l1: Rational,
    pub lb_permutation: Option<PermutationBound>,
    pub lb_homo: Option<Rational>,
    pub lb_p1: Rational,
    pub lb_p2: Rational,
    /// `L_formula` over the largest lower bound, when that bound is positive.
    pub ratio: Option<Rational>,
}

pub fn bound_report(shape: &HypercuboidShape, permutation: Option<&[NodeId]>) -> Result<BoundReport, AnalyticsError> {
    let r = shape.rank();
    let k = shape.nodes();
    let lb_permutation = match permutation {
        None => None,
        Some(perm) if shape.points() <= DIRECT_COUNT_LIMIT => {
            let placement = Placement::build(PlacementConfig::new(shape.clone())).expect("eta = 1 placement is valid");
            Some(permutation_bound(&placement, perm)?)
        }
        Some(perm) => Some(lattice_permutation_bound(shape, perm)?),
    };
    let lb_homo = match shape.dims()[0] {
        m if shape.is_homogeneous() && m >= 2 => Some(homo_lower_bound(m, r)?),
        _ => None,
    };
    let (lb_p1, lb_p2) = het_lower_bounds(shape);
    let l_formula = achievable_load(shape);
    let best = [Some(&lb_p1), Some(&lb_p2), lb_homo.as_ref(), lb_permutation.as_ref().map(|p| &p.value)]
        .into_iter()
        .flatten()
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    let ratio = (!best.is_zero()).then(|| &l_formula / &best);
    Ok(BoundReport {
        dims: shape.dims().to_vec(),
        k,
        r,
        l_upper: load_upper_bound(r),
        l1: li_baseline(k, r, r)?,
        l_formula,
        lb_permutation,
        lb_homo,
        lb_p1,
        lb_p2,
        ratio,
    })
}

impl BoundReport {
    /// Key/value text form with decimal and exact renderings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, v: &Rational| {
            let _ = writeln!(out, "{key} = {} ({})", decimal(v), fraction(v));
        };
        line("L_formula", &self.l_formula);
        line("L_upper", &self.l_upper);
        line("L1", &self.l1);
        if let Some(p) = &self.lb_permutation {
            line("LB_permutation", &p.value);
        }
        if let Some(h) = &self.lb_homo {
            line("LB_homo", h);
        }
        line("LB_P1", &self.lb_p1);
        line("LB_P2", &self.lb_p2);
        if let Some(ratio) = &self.ratio {
            line("ratio", ratio);
        }
        let dims = self.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut head = format!("dims = {dims}\nK = {}\nr = {}\n", self.k, self.r);
        if let Some(p) = &self.lb_permutation {
            let steps = p.steps.iter().map(BigInt::to_string).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "LB_permutation_steps = {steps}");
        }
        let verdict = if self.l_formula < self.l1 { "L_c < L1" } else { "L_c >= L1" };
        let _ = writeln!(out, "verdict = {verdict}");
        head.push_str(&out);
        head
    }
}
