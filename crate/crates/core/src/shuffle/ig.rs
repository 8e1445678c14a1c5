//! XOR-pair messages for rounds `γ = 1..r-1`.
//!
//! For a dimension subset `A` with `|A| = γ`, a double group `S` over `A`,
//! a single selection `Y` over the remaining dimensions, and an unordered
//! split `{S', S\S'}`, the sender in `Y` multicasts to `S`
//!
//! ```text
//! V(files B_l, functions D_a)  xor  V(files B_a, functions D_l)
//! ```
//!
//! with `T_l = S' + Y` and `T_a = (S\S') + Y`. The first set is wanted by
//! `S\S'`, the second by `S'`, and each half can compute the other.

use crate::lattice::{join, subsets, NodeId};
use crate::placement::{IvStore, Placement};

use super::{xor_into, IvSetRef, Recovered, ShuffleError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgMessage {
    pub round: usize,
    /// `A`, 0-based dimensions.
    pub dims: Vec<usize>,
    pub sender: NodeId,
    /// `S`, sorted.
    pub recipients: Vec<NodeId>,
    /// Wanted by `S\S'`.
    pub set_a: IvSetRef,
    /// Wanted by `S'`.
    pub set_b: IvSetRef,
}

pub fn plan_ig_round(placement: &Placement, gamma: usize) -> Result<Vec<IgMessage>, ShuffleError> {
    let shape = placement.shape();
    let r = shape.rank();
    if gamma == 0 || gamma >= r {
        return Err(ShuffleError::RoundOutOfRange { round: gamma, max: r.saturating_sub(1) });
    }
    let mut out = Vec::new();
    for dims in subsets(r, gamma) {
        let partners = shape.complement_partners(&dims);
        let full = (1usize << gamma) - 1;
        for s in shape.double_groups(&dims) {
            let recipients = s.members(shape);
            for y in &partners {
                let sender = *y.nodes(shape).iter().min().expect("Y is nonempty below round r");
                // bit 0 clear: S' takes the low position on the first dimension of A
                for mask in (0..=full).step_by(2) {
                    let l = join(shape, &s.half(mask), y);
                    let a = join(shape, &s.half(full ^ mask), y);
                    out.push(IgMessage {
                        round: gamma,
                        dims: dims.clone(),
                        sender,
                        recipients: recipients.clone(),
                        set_a: IvSetRef { files: l, functions: a },
                        set_b: IvSetRef { files: a, functions: l },
                    });
                }
            }
        }
    }
    Ok(out)
}

/// XOR of the two set payloads, computed from the sender's own files.
pub fn encode_ig(placement: &Placement, store: &IvStore, msg: &IgMessage) -> Result<Vec<u8>, ShuffleError> {
    let mut payload = msg.set_a.payload(placement, store, msg.sender)?;
    let other = msg.set_b.payload(placement, store, msg.sender)?;
    xor_into(&mut payload, &other);
    Ok(payload)
}

/// Cancels the set `receiver` can compute and returns the one it wants.
pub fn decode_ig(
    placement: &Placement,
    store: &IvStore,
    receiver: NodeId,
    msg: &IgMessage,
    payload: &[u8],
) -> Result<Recovered, ShuffleError> {
    if !msg.recipients.contains(&receiver) {
        return Err(ShuffleError::NotRecipient { receiver });
    }
    let knows_a = msg.set_a.computable_by(placement, receiver);
    let knows_b = msg.set_b.computable_by(placement, receiver);
    let (known, wanted) = match (knows_a, knows_b) {
        (true, false) => (msg.set_a, msg.set_b),
        (false, true) => (msg.set_b, msg.set_a),
        _ => {
            return Err(ShuffleError::Ambiguous { receiver, known: knows_a as usize + knows_b as usize })
        }
    };
    let mut out = payload.to_vec();
    xor_into(&mut out, &known.payload(placement, store, receiver)?);
    Ok(Recovered { set: wanted, payload: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{HypercuboidShape, LatticeIndex};
    use crate::placement::PlacementConfig;

    fn build(shape: HypercuboidShape) -> Placement {
        Placement::build(PlacementConfig::new(shape)).unwrap()
    }

    fn example3() -> Placement {
        build(HypercuboidShape::new(vec![2, 2, 4]).unwrap().with_axis_order(vec![1, 2, 0]).unwrap())
    }

    #[test]
    fn message_counts() {
        let p = build(HypercuboidShape::new(vec![3, 3, 3]).unwrap());
        assert_eq!(plan_ig_round(&p, 1).unwrap().len(), 81);
        assert_eq!(plan_ig_round(&p, 2).unwrap().len(), 162);
        let p = example3();
        assert_eq!(plan_ig_round(&p, 1).unwrap().len(), 40);
        assert_eq!(plan_ig_round(&p, 2).unwrap().len(), 56);
        let p = build(HypercuboidShape::new(vec![2, 2]).unwrap());
        assert_eq!(plan_ig_round(&p, 1).unwrap().len(), 4);
    }

    #[test]
    fn round_range() {
        let p = build(HypercuboidShape::new(vec![2, 2]).unwrap());
        assert!(matches!(plan_ig_round(&p, 0), Err(ShuffleError::RoundOutOfRange { .. })));
        assert!(matches!(plan_ig_round(&p, 2), Err(ShuffleError::RoundOutOfRange { .. })));
    }

    #[test]
    fn example1_node1_message() {
        let p = build(HypercuboidShape::new(vec![2, 2]).unwrap());
        let store = IvStore::map_phase(&p);
        let msgs = plan_ig_round(&p, 1).unwrap();
        let m = msgs.iter().find(|m| m.sender == NodeId(1)).unwrap();
        assert_eq!(m.recipients, vec![NodeId(3), NodeId(4)]);
        // v_{2,1} xor v_{1,2}
        assert_eq!(m.set_a.ivs(&p).collect::<Vec<_>>(), vec![(2, 1)]);
        assert_eq!(m.set_b.ivs(&p).collect::<Vec<_>>(), vec![(1, 2)]);
        let payload = encode_ig(&p, &store, m).unwrap();
        let mut expect = store.get(1, 2).to_vec();
        xor_into(&mut expect, store.get(2, 1));
        assert_eq!(payload, expect);
        // node 3 holds w_1, so it recovers v_{1,2}
        let rec = decode_ig(&p, &store, NodeId(3), m, &payload).unwrap();
        assert_eq!(rec.values(&p).collect::<Vec<_>>(), vec![(1, 2, store.get(1, 2))]);
        let rec = decode_ig(&p, &store, NodeId(4), m, &payload).unwrap();
        assert_eq!(rec.values(&p).collect::<Vec<_>>(), vec![(2, 1, store.get(2, 1))]);
        assert!(matches!(decode_ig(&p, &store, NodeId(2), m, &payload), Err(ShuffleError::NotRecipient { .. })));
    }

    #[test]
    fn example3_node1_message() {
        let p = example3();
        let store = IvStore::map_phase(&p);
        let msgs = plan_ig_round(&p, 2).unwrap();
        let m = msgs
            .iter()
            .find(|m| {
                m.sender == NodeId(1)
                    && m.recipients == vec![NodeId(3), NodeId(4), NodeId(6), NodeId(8)]
                    && [m.set_a.files, m.set_b.files].contains(&LatticeIndex(15))
            })
            .unwrap();
        let mut sets = [m.set_a, m.set_b].map(|s| s.ivs(&p).collect::<Vec<_>>());
        sets.sort();
        assert_eq!(sets, [vec![(3, 15)], vec![(15, 3)]]);
        let payload = encode_ig(&p, &store, m).unwrap();
        let rec = decode_ig(&p, &store, NodeId(4), m, &payload).unwrap();
        assert_eq!(rec.values(&p).collect::<Vec<_>>(), vec![(15, 3, store.get(15, 3))]);
    }

    #[test]
    fn sender_outside_recipients_and_holds_both() {
        let p = build(HypercuboidShape::new(vec![2, 3, 2]).unwrap());
        for gamma in 1..3 {
            for m in plan_ig_round(&p, gamma).unwrap() {
                assert!(!m.recipients.contains(&m.sender));
                assert!(m.set_a.computable_by(&p, m.sender) && m.set_b.computable_by(&p, m.sender));
                assert_eq!(m.recipients.len(), 2 * gamma);
            }
        }
    }

    #[test]
    fn self_xor_is_zero() {
        let mut a = vec![0xa5u8; 16];
        let b = a.clone();
        xor_into(&mut a, &b);
        assert!(a.iter().all(|&x| x == 0));
    }
}
