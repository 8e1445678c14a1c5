//! Linear-combination messages for the final round `γ = r`.
//!
//! A double group `S` over all `r` dimensions contains `2^r` single groups
//! `T_l`. Each carries the set `V(files B_l, functions D_a)`, where `T_a`
//! is the complementary single group in `S`; that set is wanted by every
//! node of `T_a`. Sets are cut into `2r-1` packets, and every node of `S`
//! multicasts `2^(r-1)` GF(2^8) combinations of the packets it can compute.
//! A receiver cancels what it knows and solves a square system of size
//! `(2r-1)·2^(r-1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gf256;
use crate::lattice::{DoubleGroup, NodeId};
use crate::placement::{IvStore, Placement};

use super::{IvSetRef, Recovered, ShuffleError};

/// Coefficient redraws allowed per group before planning gives up.
pub const MAX_LC_RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcMessage {
    pub sender: NodeId,
    /// 0-based combination index, below `2^(r-1)`.
    pub combo: usize,
    /// One scalar per packet the sender knows, ordered by
    /// [`LcGroup::known_sets`] then packet index.
    pub coefficients: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct LcGroup {
    pub index: usize,
    pub group: DoubleGroup,
    /// `S`, sorted.
    pub members: Vec<NodeId>,
    /// Indexed by the mask passed to [`DoubleGroup::half`].
    pub sets: Vec<IvSetRef>,
    pub messages: Vec<LcMessage>,
    /// Coefficient draws used, 1 when the first draw was full rank.
    pub attempts: usize,
    rank: usize,
    /// `(dim, high)` of each member, parallel to `members`.
    sides: Vec<(usize, bool)>,
    /// Known and wanted masks of each member, parallel to `members`.
    known: Vec<Vec<usize>>,
    wanted: Vec<Vec<usize>>,
}

impl LcGroup {
    fn member(&self, node: NodeId) -> usize {
        self.members.binary_search(&node).expect("node is a member of S")
    }

    fn index_sets(&mut self) {
        let masks = 0..self.sets.len();
        let split = |&(d, high): &(usize, bool)| -> (Vec<usize>, Vec<usize>) {
            masks.clone().partition(|&m| (m >> d & 1 == 1) == high)
        };
        (self.known, self.wanted) = self.sides.iter().map(split).unzip();
    }

    /// Masks of the sets `node` can compute, ascending.
    pub fn known_sets(&self, node: NodeId) -> &[usize] {
        &self.known[self.member(node)]
    }

    /// Masks of the sets `node` wants, ascending.
    pub fn wanted_sets(&self, node: NodeId) -> &[usize] {
        &self.wanted[self.member(node)]
    }

    pub fn packets_per_set(&self) -> usize {
        2 * self.rank - 1
    }

    pub fn combos_per_node(&self) -> usize {
        1 << (self.rank - 1)
    }

    /// Receiver-side coefficient matrix over the wanted packets, one row
    /// per message from another member, in plan order.
    pub fn receiver_matrix(&self, receiver: NodeId) -> Vec<Vec<u8>> {
        let p = self.packets_per_set();
        let wanted = self.wanted_sets(receiver);
        let col = |mask: usize| wanted.binary_search(&mask).ok();
        // (known-set index, column) pairs per member
        let layout: Vec<Vec<(usize, usize)>> = self
            .members
            .iter()
            .map(|&k| self.known_sets(k).iter().enumerate().filter_map(|(i, &m)| Some((i, col(m)?))).collect())
            .collect();
        self.messages
            .iter()
            .filter(|m| m.sender != receiver)
            .map(|m| {
                let mut row = vec![0u8; wanted.len() * p];
                for &(i, c) in &layout[self.member(m.sender)] {
                    row[c * p..(c + 1) * p].copy_from_slice(&m.coefficients[i * p..(i + 1) * p]);
                }
                row
            })
            .collect()
    }

    fn draw(&mut self, seed: u64, attempt: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        rng.set_stream(self.index as u64);
        let width = self.combos_per_node() * self.packets_per_set();
        self.messages = self
            .members
            .iter()
            .flat_map(|&sender| (0..self.combos_per_node()).map(move |combo| (sender, combo)))
            .map(|(sender, combo)| LcMessage {
                sender,
                combo,
                coefficients: (0..width).map(|_| rng.random_range(1..=255u8)).collect(),
            })
            .collect();
    }

    fn full_rank(&self) -> Result<(), NodeId> {
        let n = self.combos_per_node() * self.packets_per_set();
        for &k in &self.members {
            if gf256::rank(&self.receiver_matrix(k)) < n {
                return Err(k);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct LcRound {
    pub groups: Vec<LcGroup>,
}

impl LcRound {
    pub fn message_count(&self) -> usize {
        self.groups.iter().map(|g| g.messages.len()).sum()
    }
}

/// Plans round `r`, certifying per-receiver full rank for every group.
///
/// Empty when some dimension has a single node.
pub fn plan_lc_round(placement: &Placement, seed: u64) -> Result<LcRound, ShuffleError> {
    let shape = placement.shape();
    let r = shape.rank();
    let dims: Vec<usize> = (0..r).collect();
    let full = (1usize << r) - 1;
    let mut groups = Vec::new();
    for (index, group) in shape.double_groups(&dims).into_iter().enumerate() {
        let sets = (0..=full)
            .map(|m| IvSetRef {
                files: shape.index_of(&group.half(m).positions),
                functions: shape.index_of(&group.half(full ^ m).positions),
            })
            .collect();
        let mut sides: Vec<(NodeId, (usize, bool))> = group
            .pairs
            .iter()
            .enumerate()
            .flat_map(|(d, &(a, b))| [(shape.node(d, a), (d, false)), (shape.node(d, b), (d, true))])
            .collect();
        sides.sort();
        let mut g = LcGroup {
            index,
            members: sides.iter().map(|s| s.0).collect(),
            sides: sides.iter().map(|s| s.1).collect(),
            group,
            sets,
            messages: Vec::new(),
            attempts: 0,
            rank: r,
            known: Vec::new(),
            wanted: Vec::new(),
        };
        g.index_sets();
        loop {
            g.draw(seed, g.attempts);
            g.attempts += 1;
            match g.full_rank() {
                Ok(()) => break,
                Err(receiver) if g.attempts >= MAX_LC_RETRIES => {
                    return Err(ShuffleError::RankUnattainable { group: index, receiver, attempts: g.attempts })
                }
                Err(_) => {}
            }
        }
        groups.push(g);
    }
    Ok(LcRound { groups })
}

/// `ceil(set_bytes / (2r-1))`
pub fn packet_bytes(placement: &Placement) -> usize {
    let c = placement.config();
    (c.eta1 * c.eta2 * c.iv_bytes()).div_ceil(2 * placement.shape().rank() - 1)
}

/// Set payload zero-padded to `2r-1` whole packets.
fn padded(placement: &Placement, store: &IvStore, set: IvSetRef, node: NodeId) -> Result<Vec<u8>, ShuffleError> {
    let mut payload = set.payload(placement, store, node)?;
    payload.resize(packet_bytes(placement) * (2 * placement.shape().rank() - 1), 0);
    Ok(payload)
}

pub fn encode_lc(placement: &Placement, store: &IvStore, group: &LcGroup, msg: &LcMessage) -> Result<Vec<u8>, ShuffleError> {
    let p = group.packets_per_set();
    let pb = packet_bytes(placement);
    let mut out = vec![0u8; pb];
    for (i, &mask) in group.known_sets(msg.sender).iter().enumerate() {
        let payload = padded(placement, store, group.sets[mask], msg.sender)?;
        for (j, pkt) in payload.chunks(pb).enumerate() {
            gf256::mul_acc(&mut out, pkt, msg.coefficients[i * p + j]);
        }
    }
    Ok(out)
}

/// Recovers every set `receiver` wants from the combinations sent by the
/// other members of its group.
pub fn decode_lc(
    placement: &Placement,
    store: &IvStore,
    receiver: NodeId,
    group: &LcGroup,
    received: &[(&LcMessage, &[u8])],
) -> Result<Vec<Recovered>, ShuffleError> {
    if group.members.binary_search(&receiver).is_err() {
        return Err(ShuffleError::NotRecipient { receiver });
    }
    let p = group.packets_per_set();
    let wanted = group.wanted_sets(receiver);
    let n = wanted.len() * p;
    let rows: Vec<&(&LcMessage, &[u8])> = received.iter().filter(|(m, _)| m.sender != receiver).collect();
    if rows.len() != n {
        return Err(ShuffleError::MissingCombinations { group: group.index, receiver, expected: n, got: rows.len() });
    }
    let pb = packet_bytes(placement);
    let mut known = vec![None; group.sets.len()];
    for &mask in group.known_sets(receiver) {
        known[mask] = Some(padded(placement, store, group.sets[mask], receiver)?);
    }
    let mut matrix = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for (msg, payload) in rows {
        let mut row = vec![0u8; n];
        let mut b = payload.to_vec();
        for (i, &mask) in group.known_sets(msg.sender).iter().enumerate() {
            let coeffs = &msg.coefficients[i * p..(i + 1) * p];
            match &known[mask] {
                Some(payload) => payload.chunks(pb).zip(coeffs).for_each(|(pkt, &c)| gf256::mul_acc(&mut b, pkt, c)),
                None => {
                    let c = wanted.binary_search(&mask).expect("unknown set is wanted");
                    row[c * p..(c + 1) * p].copy_from_slice(coeffs);
                }
            }
        }
        matrix.push(row);
        rhs.push(b);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let solution = gf256::solve(matrix, rhs).ok_or(ShuffleError::Singular { group: group.index, receiver })?;
    let set_bytes = group.sets[0].bytes(placement);
    Ok(wanted
        .iter()
        .enumerate()
        .map(|(i, &mask)| {
            let mut payload: Vec<u8> = solution[i * p..(i + 1) * p].concat();
            payload.truncate(set_bytes);
            Recovered { set: group.sets[mask], payload }
        })
        .collect())
}
