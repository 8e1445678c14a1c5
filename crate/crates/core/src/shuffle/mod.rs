//! Multi-round Shuffle planning, encoding and decoding.
//!
//! Round `γ < r` exchanges IVs requested by exactly `γ` nodes with XOR pairs
//! (IG messages); round `r` uses GF(2^8) linear combinations of packets
//! (LC messages).

mod ig;
mod lc;

use std::fmt::Write as _;

use thiserror::Error;

use crate::lattice::{LatticeIndex, NodeId};
use crate::placement::{IvStore, LocalityViolation, Placement};
use crate::rational::{fraction, int, Rational};

pub use ig::{decode_ig, encode_ig, plan_ig_round, IgMessage};
pub use lc::{decode_lc, encode_lc, packet_bytes, plan_lc_round, LcGroup, LcMessage, LcRound, MAX_LC_RETRIES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShuffleError {
    #[error("round {round} is outside 1..={max}")]
    RoundOutOfRange { round: usize, max: usize },
    #[error("LC group {group}: receiver {receiver} system stayed singular after {attempts} coefficient draws")]
    RankUnattainable { group: usize, receiver: NodeId, attempts: usize },
    #[error(transparent)]
    Locality(#[from] LocalityViolation),
    #[error("node {receiver} is not a recipient of this message")]
    NotRecipient { receiver: NodeId },
    #[error("node {receiver} can compute {known} of the two IV sets in an IG message; expected exactly one")]
    Ambiguous { receiver: NodeId, known: usize },
    #[error("LC group {group}: node {receiver} expected {expected} combinations, got {got}")]
    MissingCombinations { group: usize, receiver: NodeId, expected: usize, got: usize },
    #[error("LC group {group}: node {receiver} could not solve its system")]
    Singular { group: usize, receiver: NodeId },
}

/// `V`: the IVs of functions `D_functions` over files `B_files`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IvSetRef {
    pub files: LatticeIndex,
    pub functions: LatticeIndex,
}

impl IvSetRef {
    /// `(q, n)` pairs in lexicographic order.
    pub fn ivs(self, placement: &Placement) -> impl Iterator<Item = (usize, usize)> + '_ {
        let files = placement.files_of_point(self.files);
        placement
            .functions_of_point(self.functions)
            .flat_map(move |q| files.clone().map(move |n| (q, n)))
    }

    pub fn bytes(self, placement: &Placement) -> usize {
        let c = placement.config();
        c.eta1 * c.eta2 * c.iv_bytes()
    }

    /// Concatenated payload as seen by `node`; fails if the node does not
    /// map the files.
    pub fn payload(self, placement: &Placement, store: &IvStore, node: NodeId) -> Result<Vec<u8>, LocalityViolation> {
        let mut out = Vec::with_capacity(self.bytes(placement));
        for (q, n) in self.ivs(placement) {
            out.extend_from_slice(store.local(placement, node, q, n)?);
        }
        Ok(out)
    }

    pub fn computable_by(self, placement: &Placement, node: NodeId) -> bool {
        placement.holds_point(node, self.files)
    }
}

/// One decoded IV set, ready to be stored at the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovered {
    pub set: IvSetRef,
    pub payload: Vec<u8>,
}

impl Recovered {
    /// Splits the payload back into `(q, n, value)` triples.
    pub fn values<'a>(&'a self, placement: &'a Placement) -> impl Iterator<Item = (usize, usize, &'a [u8])> + 'a {
        let b = placement.config().iv_bytes();
        self.set
            .ivs(placement)
            .zip(self.payload.chunks(b))
            .map(|((q, n), v)| (q, n, v))
    }
}

pub fn xor_into(dst: &mut [u8], src: &[u8]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

/// The complete Shuffle: IG rounds `1..r-1` followed by the LC round.
#[derive(Debug, Clone)]
pub struct ShufflePlan {
    pub rank: usize,
    pub ig_rounds: Vec<Vec<IgMessage>>,
    pub lc: LcRound,
}

/// Borrowed view of any planned message.
#[derive(Debug, Clone, Copy)]
pub enum Message<'a> {
    Ig(&'a IgMessage),
    Lc(&'a LcGroup, &'a LcMessage),
}

impl ShufflePlan {
    pub fn build(placement: &Placement, seed: u64) -> Result<Self, ShuffleError> {
        let r = placement.shape().rank();
        let ig_rounds = (1..r)
            .map(|g| plan_ig_round(placement, g))
            .collect::<Result<Vec<_>, _>>()?;
        let lc = plan_lc_round(placement, seed)?;
        Ok(Self { rank: r, ig_rounds, lc })
    }

    /// Messages of round `γ` in plan order.
    pub fn round(&self, gamma: usize) -> Vec<Message<'_>> {
        if gamma < self.rank {
            self.ig_rounds[gamma - 1].iter().map(Message::Ig).collect()
        } else {
            self.lc
                .groups
                .iter()
                .flat_map(|g| g.messages.iter().map(move |m| Message::Lc(g, m)))
                .collect()
        }
    }

    pub fn messages(&self) -> Vec<Message<'_>> {
        (1..=self.rank).flat_map(|g| self.round(g)).collect()
    }

    pub fn message_count(&self, gamma: usize) -> usize {
        if gamma < self.rank {
            self.ig_rounds[gamma - 1].len()
        } else {
            self.lc.message_count()
        }
    }

    /// Bits of round `γ` in units of `η1·η2·T`.
    pub fn round_units(&self, gamma: usize) -> Rational {
        if gamma < self.rank {
            int(self.ig_rounds[gamma - 1].len())
        } else {
            int(self.lc.message_count()) / int(2 * self.rank - 1)
        }
    }

    /// One line per message: `round,sender,recipients,kind,set_ids,bits`.
    pub fn dump(&self, placement: &Placement) -> String {
        let unit = int(placement.config().eta1 * placement.config().eta2 * placement.config().iv_bits);
        let mut out = String::new();
        for gamma in 1..=self.rank {
            for m in self.round(gamma) {
                let (sender, recipients, kind, sets, bits): (NodeId, Vec<NodeId>, String, Vec<LatticeIndex>, Rational) =
                    match m {
                        Message::Ig(ig) => (
                            ig.sender,
                            ig.recipients.clone(),
                            "ig".into(),
                            vec![ig.set_a.files, ig.set_b.files],
                            unit.clone(),
                        ),
                        Message::Lc(g, lc) => (
                            lc.sender,
                            g.members.iter().copied().filter(|&k| k != lc.sender).collect(),
                            format!("lc:{}", lc.combo + 1),
                            g.known_sets(lc.sender).iter().map(|&i| g.sets[i].files).collect(),
                            &unit / int(2 * self.rank - 1),
                        ),
                    };
                let _ = writeln!(
                    out,
                    "{gamma},{sender},{},{kind},{},{}",
                    join(&recipients),
                    join(&sets),
                    fraction(&bits)
                );
            }
        }
        out
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HypercuboidShape;
    use crate::placement::PlacementConfig;

    #[test]
    fn example1_dump() {
        let p = Placement::build(PlacementConfig::new(HypercuboidShape::new(vec![2, 2]).unwrap())).unwrap();
        let plan = ShufflePlan::build(&p, 1).unwrap();
        let dump = plan.dump(&p);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 4 + 8);
        assert_eq!(lines[0], "1,3,1;2,ig,1;3,128/1");
        assert!(lines.contains(&"1,1,3;4,ig,1;2,128/1"));
        assert!(lines[4].starts_with("2,1,2;3;4,lc:1,"));
        assert!(lines[4].ends_with(",128/3"));
    }

    #[test]
    fn set_order_is_function_major() {
        let p = Placement::build(
            PlacementConfig::new(HypercuboidShape::new(vec![2, 2]).unwrap()).with_eta(2, 2),
        )
        .unwrap();
        let set = IvSetRef { files: LatticeIndex(2), functions: LatticeIndex(1) };
        let ivs: Vec<_> = set.ivs(&p).collect();
        assert_eq!(ivs, vec![(1, 3), (1, 4), (2, 3), (2, 4)]);
    }
}
