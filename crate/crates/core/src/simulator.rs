//! End-to-end Map, Shuffle and Reduce with verification and exact load
//! accounting.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lattice::{HypercuboidShape, LatticeIndex, NodeId};
use crate::placement::{reduce_digest, IvStore, Placement, PlacementConfig, PlacementError};
use crate::rational::{decimal, fraction, int, Rational};
use crate::shuffle::{
    decode_ig, decode_lc, encode_ig, encode_lc, packet_bytes, Message, Recovered, ShuffleError, ShufflePlan,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Plan(#[from] ShuffleError),
}

/// Deliberate damage applied to one message, by index in plan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Drop(usize),
    Corrupt(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub verify: bool,
    pub fault: Option<Fault>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { verify: true, fault: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Coverage,
    Decodability,
    Locality,
    ReduceAgreement,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Coverage => "coverage",
            Criterion::Decodability => "decodability",
            Criterion::Locality => "locality",
            Criterion::ReduceAgreement => "reduce_agreement",
        })
    }
}

/// The first violation found, with the node and IV involved when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub criterion: Criterion,
    pub node: NodeId,
    pub function: Option<usize>,
    pub file: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at node {}", self.criterion, self.node)?;
        if let (Some(q), Some(n)) = (self.function, self.file) {
            write!(f, " for v_({q},{n})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationFlags {
    pub coverage: bool,
    pub decodability: bool,
    pub locality: bool,
    pub reduce_agreement: bool,
}

impl VerificationFlags {
    pub fn passed(&self) -> bool {
        self.coverage && self.decodability && self.locality && self.reduce_agreement
    }

    fn fail(&mut self, c: Criterion) {
        match c {
            Criterion::Coverage => self.coverage = false,
            Criterion::Decodability => self.decodability = false,
            Criterion::Locality => self.locality = false,
            Criterion::ReduceAgreement => self.reduce_agreement = false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub flags: VerificationFlags,
    pub witness: Option<Witness>,
}

impl Verification {
    fn new() -> Self {
        let flags = VerificationFlags { coverage: true, decodability: true, locality: true, reduce_agreement: true };
        Self { flags, witness: None }
    }

    fn record(&mut self, w: Witness) {
        self.flags.fail(w.criterion);
        if self.witness.is_none() {
            self.witness = Some(w);
        }
    }

    pub fn passed(&self) -> bool {
        self.flags.passed()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundStats {
    pub round: usize,
    pub messages: usize,
    /// Bits in units of `η1·η2·T`.
    pub units: Rational,
    pub bits: Rational,
    /// Bits on the wire, including LC packet padding.
    pub transport_bits: usize,
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub dims: Vec<usize>,
    pub eta1: usize,
    pub eta2: usize,
    pub iv_bits: usize,
    pub seed: u64,
    pub rounds: Vec<RoundStats>,
    pub total_units: Rational,
    pub total_bits: Rational,
    /// `L_sim = total bits / (Q·N·T)`
    pub load: Rational,
    /// Extra LC coefficient draws needed across all groups.
    pub lc_redraws: usize,
    /// `None` when run without verification.
    pub verification: Option<Verification>,
    pub elapsed: Duration,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.verification.as_ref().is_none_or(Verification::passed)
    }

    /// Key/value text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dims = self.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "dims = {dims}");
        let _ = writeln!(out, "eta1 = {}", self.eta1);
        let _ = writeln!(out, "eta2 = {}", self.eta2);
        let _ = writeln!(out, "iv_bits = {}", self.iv_bits);
        let _ = writeln!(out, "seed = {}", self.seed);
        for r in &self.rounds {
            let _ = writeln!(
                out,
                "round {} = messages {}, units {} ({}), bits {}, transport_bits {}",
                r.round,
                r.messages,
                decimal(&r.units),
                fraction(&r.units),
                fraction(&r.bits),
                r.transport_bits
            );
        }
        let _ = writeln!(out, "total_units = {} ({})", decimal(&self.total_units), fraction(&self.total_units));
        let _ = writeln!(out, "total_bits = {}", fraction(&self.total_bits));
        let _ = writeln!(out, "L_sim = {} ({})", decimal(&self.load), fraction(&self.load));
        let _ = writeln!(out, "lc_redraws = {}", self.lc_redraws);
        match &self.verification {
            None => {
                let _ = writeln!(out, "verification = skipped");
            }
            Some(v) => {
                let f = &v.flags;
                let _ = writeln!(out, "coverage = {}", f.coverage);
                let _ = writeln!(out, "decodability = {}", f.decodability);
                let _ = writeln!(out, "locality = {}", f.locality);
                let _ = writeln!(out, "reduce_agreement = {}", f.reduce_agreement);
                let _ = writeln!(out, "verification = {}", if v.passed() { "pass" } else { "fail" });
                if let Some(w) = &v.witness {
                    let _ = writeln!(out, "witness = {w}");
                }
            }
        }
        let _ = writeln!(out, "wall_clock_ms = {:.3}", self.elapsed.as_secs_f64() * 1e3);
        out
    }
}

pub fn simulate(config: &PlacementConfig, options: SimOptions) -> Result<SimulationReport, SimError> {
    let start = Instant::now();
    let placement = Placement::build(config.clone())?;
    let plan = ShufflePlan::build(&placement, config.seed)?;
    let verification = options.verify.then(|| execute(&placement, &plan, options.fault));

    let shape = placement.shape();
    let r = shape.rank();
    let unit = int(config.eta1 * config.eta2 * config.iv_bits);
    let set_bits = config.eta1 * config.eta2 * config.iv_bits;
    let rounds: Vec<RoundStats> = (1..=r)
        .map(|g| {
            let units = plan.round_units(g);
            let messages = plan.message_count(g);
            let per_message = if g < r { set_bits } else { packet_bytes(&placement) * 8 };
            RoundStats { round: g, messages, bits: &units * &unit, units, transport_bits: messages * per_message }
        })
        .collect();
    let total_units: Rational = rounds.iter().map(|r| r.units.clone()).sum();
    let x = int(shape.points());
    let load = &total_units / (&x * &x);
    Ok(SimulationReport {
        dims: shape.dims().to_vec(),
        eta1: config.eta1,
        eta2: config.eta2,
        iv_bits: config.iv_bits,
        seed: config.seed,
        total_bits: &total_units * &unit,
        total_units,
        load,
        lc_redraws: plan.lc.groups.iter().map(|g| g.attempts - 1).sum(),
        rounds,
        verification,
        elapsed: start.elapsed(),
    })
}

/// Runs every phase with verification but skips the load report.
pub fn verify_only(config: &PlacementConfig, fault: Option<Fault>) -> Result<Verification, SimError> {
    let placement = Placement::build(config.clone())?;
    let plan = ShufflePlan::build(&placement, config.seed)?;
    Ok(execute(&placement, &plan, fault))
}

/// Plan-level check: every IV with at least one requester appears in some
/// message of the round matching its request count.
pub fn check_coverage(placement: &Placement, plan: &ShufflePlan) -> Option<Witness> {
    let shape = placement.shape();
    let r = shape.rank();
    let mut covered: Vec<HashSet<(LatticeIndex, LatticeIndex)>> = vec![HashSet::new(); r + 1];
    for (i, round) in plan.ig_rounds.iter().enumerate() {
        for m in round {
            for s in [m.set_a, m.set_b] {
                covered[i + 1].insert((s.files, s.functions));
            }
        }
    }
    for grp in &plan.lc.groups {
        for s in &grp.sets {
            covered[r].insert((s.files, s.functions));
        }
    }
    for f in 1..=shape.points() {
        for p in 1..=shape.points() {
            let (fi, pi) = (LatticeIndex(f), LatticeIndex(p));
            let differ: Vec<usize> = (0..r).filter(|&d| shape.coord_at(fi, d) != shape.coord_at(pi, d)).collect();
            if differ.is_empty() || covered[differ.len()].contains(&(pi, fi)) {
                continue;
            }
            let q = *placement.functions_of_point(fi).start();
            let n = *placement.files_of_point(pi).start();
            let d = differ[0];
            return Some(Witness {
                criterion: Criterion::Coverage,
                node: shape.node(d, shape.coord_at(fi, d)),
                function: Some(q),
                file: Some(n),
                detail: format!("requested by {} nodes but never transmitted", differ.len()),
            });
        }
    }
    None
}

/// What one node holds for its assigned functions.
struct NodeState {
    /// Position in `W_k` for each function id, if assigned.
    slot: Vec<Option<usize>>,
    values: Vec<u8>,
    have: Vec<bool>,
}

struct Run<'a> {
    placement: &'a Placement,
    store: IvStore,
    nodes: Vec<NodeState>,
    v: Verification,
}

impl<'a> Run<'a> {
    fn new(placement: &'a Placement) -> Self {
        let store = IvStore::map_phase(placement);
        let (q_count, n_count, b) = (placement.num_functions(), placement.num_files(), store.iv_bytes());
        let mut run = Run { placement, nodes: Vec::new(), store, v: Verification::new() };
        for k in 1..=placement.shape().nodes() {
            let node = NodeId(k);
            let w = placement.functions_of(node);
            let mut slot = vec![None; q_count + 1];
            for (i, &q) in w.iter().enumerate() {
                slot[q] = Some(i);
            }
            let mut state = NodeState { slot, values: vec![0; w.len() * n_count * b], have: vec![false; w.len() * n_count] };
            for (i, &q) in w.iter().enumerate() {
                for &n in placement.files_of(node) {
                    match run.store.local(placement, node, q, n) {
                        Ok(v) => {
                            let at = i * n_count + n - 1;
                            state.values[at * b..(at + 1) * b].copy_from_slice(v);
                            state.have[at] = true;
                        }
                        Err(e) => run.v.record(Witness {
                            criterion: Criterion::Locality,
                            node,
                            function: Some(q),
                            file: Some(n),
                            detail: e.to_string(),
                        }),
                    }
                }
            }
            run.nodes.push(state);
        }
        run
    }

    fn store_recovered(&mut self, node: NodeId, rec: &Recovered) {
        let n_count = self.placement.num_files();
        let b = self.store.iv_bytes();
        for (q, n, value) in rec.values(self.placement) {
            let state = &mut self.nodes[node.0 - 1];
            let Some(i) = state.slot[q] else {
                self.v.record(Witness {
                    criterion: Criterion::Decodability,
                    node,
                    function: Some(q),
                    file: Some(n),
                    detail: "decoded an IV for a function the node does not reduce".into(),
                });
                continue;
            };
            let at = i * n_count + n - 1;
            state.values[at * b..(at + 1) * b].copy_from_slice(value);
            state.have[at] = true;
            if value != self.store.get(q, n) {
                self.v.record(Witness {
                    criterion: Criterion::Decodability,
                    node,
                    function: Some(q),
                    file: Some(n),
                    detail: "decoded value differs from the map-phase value".into(),
                });
            }
        }
    }

    fn shuffle_error(&mut self, node: NodeId, err: ShuffleError) {
        let criterion = match err {
            ShuffleError::Locality(_) => Criterion::Locality,
            _ => Criterion::Decodability,
        };
        let (function, file) = match &err {
            ShuffleError::Locality(l) => (Some(l.function), Some(l.file)),
            _ => (None, None),
        };
        self.v.record(Witness { criterion, node, function, file, detail: err.to_string() });
    }

    fn encode(&mut self, msg: Message<'_>, index: usize, fault: Option<Fault>) -> Option<Vec<u8>> {
        let (sender, result) = match msg {
            Message::Ig(m) => (m.sender, encode_ig(self.placement, &self.store, m)),
            Message::Lc(g, m) => (m.sender, encode_lc(self.placement, &self.store, g, m)),
        };
        let mut payload = match result {
            Ok(p) => p,
            Err(e) => {
                self.shuffle_error(sender, e);
                return None;
            }
        };
        match fault {
            Some(Fault::Drop(i)) if i == index => return None,
            Some(Fault::Corrupt(i)) if i == index => {
                if let Some(byte) = payload.first_mut() {
                    *byte ^= 0x01;
                }
            }
            _ => {}
        }
        Some(payload)
    }

    fn shuffle(&mut self, plan: &ShufflePlan, fault: Option<Fault>) {
        let mut index = 0;
        for m in &plan.ig_rounds.concat() {
            let payload = self.encode(Message::Ig(m), index, fault);
            index += 1;
            let Some(payload) = payload else { continue };
            for &k in &m.recipients {
                match decode_ig(self.placement, &self.store, k, m, &payload) {
                    Ok(rec) => self.store_recovered(k, &rec),
                    Err(e) => self.shuffle_error(k, e),
                }
            }
        }
        for g in &plan.lc.groups {
            let mut received = Vec::with_capacity(g.messages.len());
            for m in &g.messages {
                if let Some(p) = self.encode(Message::Lc(g, m), index, fault) {
                    received.push((m, p));
                }
                index += 1;
            }
            let view: Vec<_> = received.iter().map(|(m, p)| (*m, p.as_slice())).collect();
            for &k in &g.members {
                match decode_lc(self.placement, &self.store, k, g, &view) {
                    Ok(recs) => recs.iter().for_each(|rec| self.store_recovered(k, rec)),
                    Err(e) => self.shuffle_error(k, e),
                }
            }
        }
    }

    fn reduce(&mut self) {
        let p = self.placement;
        let (n_count, b) = (p.num_files(), self.store.iv_bytes());
        for k in 1..=p.shape().nodes() {
            let node = NodeId(k);
            let state = &self.nodes[k - 1];
            let missing = p.functions_of(node).iter().enumerate().find_map(|(i, &q)| {
                (1..=n_count).find(|&n| !state.have[i * n_count + n - 1]).map(|n| (q, n))
            });
            if let Some((q, n)) = missing {
                self.v.record(Witness {
                    criterion: Criterion::Decodability,
                    node,
                    function: Some(q),
                    file: Some(n),
                    detail: "IV still missing after the shuffle".into(),
                });
            }
        }
        for q in 1..=p.num_functions() {
            let reference = reduce_digest(q, (1..=n_count).map(|n| self.store.get(q, n)));
            for node in p.reducers_of(q) {
                let state = &self.nodes[node.0 - 1];
                let i = state.slot[q].expect("reducer is assigned q");
                let row = &state.values[i * n_count * b..(i + 1) * n_count * b];
                if reduce_digest(q, row.chunks(b)) != reference {
                    self.v.record(Witness {
                        criterion: Criterion::ReduceAgreement,
                        node,
                        function: Some(q),
                        file: None,
                        detail: "reduce output differs from the other reducers".into(),
                    });
                }
            }
        }
    }
}

fn execute(placement: &Placement, plan: &ShufflePlan, fault: Option<Fault>) -> Verification {
    let mut run = Run::new(placement);
    if let Some(w) = check_coverage(placement, plan) {
        run.v.record(w);
    }
    run.shuffle(plan, fault);
    run.reduce();
    run.v
}

/// Convenience for shapes given as plain dimension lists.
pub fn simulate_dims(dims: &[usize]) -> Result<SimulationReport, SimError> {
    let shape = HypercuboidShape::new(dims.to_vec()).map_err(PlacementError::from)?;
    simulate(&PlacementConfig::new(shape), SimOptions::default())
}
