//! Deterministic simulator for the synchronous low-bandwidth network.
//!
//! A network has `n` computers. Time proceeds in rounds; in each round every
//! computer may send at most one message and receive at most one message.
//! Silence is free. A message carries one keyed value and must fit the word
//! budget (a few index words plus the value).
//!
//! Algorithms do not run code on the computers. They compile, ahead of time
//! and from the support structure alone, a [`Program`]: a fixed list of
//! rounds, each holding local operations followed by sends. The executor
//! then applies the program to the runtime values. Because programs never
//! inspect values, the message trace is a pure function of the support; the
//! executor folds the trace into a hash so that obliviousness can be checked
//! by replaying with different values.
//!
//! Any breach of the model (two sends from one computer in a round, two
//! deliveries to one computer, a read of a value the computer does not hold)
//! is recorded as a [`Violation`] and aborts the run. Violations are bugs in
//! the schedule builder, never data-dependent events.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{Element, Semiring};
use crate::spmat::{Pattern, SparseMatrix};
use crate::support::{Placement, Role, SupportInstance};

/// Default message capacity in words: a value plus up to three indices.
pub const WORD_BUDGET: usize = 4;

/// Identifies one value in a computer's local store.
///
/// `A` and `B` are input entries. `P` holds locally computed partial
/// products for an output entry, `Q` holds partial sums aggregated on behalf
/// of other computers (kept separate from `P` so that a computer can forward
/// its own products while collecting foreign ones in the same phase), and
/// `X` is the final output slot at the entry's owner.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    A(u32, u32),
    B(u32, u32),
    P(u32, u32),
    Q(u32, u32),
    X(u32, u32),
}

impl Key {
    fn tag(&self) -> u64 {
        match self {
            Key::A(..) => 0,
            Key::B(..) => 1,
            Key::P(..) => 2,
            Key::Q(..) => 3,
            Key::X(..) => 4,
        }
    }

    fn coords(&self) -> (u32, u32) {
        match *self {
            Key::A(a, b) | Key::B(a, b) | Key::P(a, b) | Key::Q(a, b) | Key::X(a, b) => (a, b),
        }
    }

    /// Words occupied on the wire: the value plus the key's indices.
    pub fn message_words(&self) -> usize {
        3
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.coords();
        let name = match self {
            Key::A(..) => "A",
            Key::B(..) => "B",
            Key::P(..) => "P",
            Key::Q(..) => "Q",
            Key::X(..) => "X",
        };
        write!(f, "{}({},{})", name, a, b)
    }
}

/// One message: `src` reads `read` from its store and the value is stored
/// under `store` at `dst`. With `accumulate` the destination adds the value
/// into its slot instead of overwriting; with `take` the source gives the
/// value up, which keeps partial sums counted exactly once.
#[derive(Clone, Copy, Debug)]
pub struct Send {
    pub src: u32,
    pub dst: u32,
    pub read: Key,
    pub store: Key,
    pub accumulate: bool,
    pub take: bool,
}

impl Send {
    /// Plain replication of a value under its own key.
    pub fn copy(src: u32, dst: u32, key: Key) -> Send {
        Send { src, dst, read: key, store: key, accumulate: false, take: false }
    }

    /// Moves a partial sum: removed at the source, added at the destination.
    pub fn acc_move(src: u32, dst: u32, read: Key, store: Key) -> Send {
        Send { src, dst, read, store, accumulate: true, take: true }
    }
}

/// Free local computation. Operands must already be in the computer's store.
#[derive(Clone, Copy, Debug)]
pub enum LocalOp {
    /// `into += a * b`.
    MulAcc { at: u32, a: Key, b: Key, into: Key },
    /// `into += from`, removing `from` (partials merge, never duplicate).
    MoveAcc { at: u32, from: Key, into: Key },
    /// `key = 0`.
    InitZero { at: u32, key: Key },
}

impl LocalOp {
    pub fn at(&self) -> u32 {
        match *self {
            LocalOp::MulAcc { at, .. } | LocalOp::MoveAcc { at, .. } | LocalOp::InitZero { at, .. } => at,
        }
    }
}

/// One synchronous round: local work first, then the simultaneous sends.
#[derive(Clone, Debug, Default)]
pub struct RoundStep {
    pub pre: Vec<LocalOp>,
    pub sends: Vec<Send>,
}

/// A complete schedule. `init` runs before the first round (typically output
/// zeroing), `finish` after the last (typically local handover of partials
/// that never had to travel).
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub init: Vec<LocalOp>,
    pub rounds: Vec<RoundStep>,
    pub finish: Vec<LocalOp>,
}

impl Program {
    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MultiSend { round: usize, src: u32 },
    MultiRecv { round: usize, dst: u32, srcs: Vec<u32> },
    SelfSend { round: usize, src: u32 },
    MissingValue { round: usize, at: u32, key: Key },
    WordBudget { round: usize, src: u32, words: usize },
    MissingOutput { at: u32, key: Key },
    BadComputer { id: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultiSend { round, src } => {
                write!(f, "round {}: computer {} sends more than one message", round, src)
            }
            Violation::MultiRecv { round, dst, srcs } => write!(
                f,
                "round {}: computer {} receives from {:?} in one round",
                round, dst, srcs
            ),
            Violation::SelfSend { round, src } => {
                write!(f, "round {}: computer {} addresses itself", round, src)
            }
            Violation::MissingValue { round, at, key } => {
                write!(f, "round {}: computer {} reads absent {:?}", round, at, key)
            }
            Violation::WordBudget { round, src, words } => {
                write!(f, "round {}: message from {} needs {} words", round, src, words)
            }
            Violation::MissingOutput { at, key } => {
                write!(f, "output {:?} absent at its owner {}", key, at)
            }
            Violation::BadComputer { id } => write!(f, "computer id {} out of range", id),
        }
    }
}

impl std::error::Error for Violation {}

/// Counters for one executed program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseStats {
    pub rounds: usize,
    pub messages: usize,
}

/// Summary of a finished simulation: round and message accounting, any
/// violations (empty on an accepted run), and the collected output.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub rounds_used: usize,
    pub messages_per_round: Vec<usize>,
    pub violations: Vec<Violation>,
    pub output: SparseMatrix,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv_fold(mut h: u64, v: u64) -> u64 {
    for byte in v.to_le_bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// The simulated network. Persists across program executions so that a
/// multi-phase algorithm can thread its state through several schedules.
pub struct Network {
    n: usize,
    sr: Semiring,
    word_budget: usize,
    stores: Vec<HashMap<Key, Element>>,
    recv_count: Vec<u64>,
    rounds_run: usize,
    messages: usize,
    round_msgs: Vec<usize>,
    trace_hash: u64,
    trace: Option<Vec<(usize, u32, u32, Key)>>,
    violations: Vec<Violation>,
}

impl Network {
    pub fn new(n: usize, sr: Semiring) -> Network {
        Network::with_budget(n, sr, WORD_BUDGET)
    }

    pub fn with_budget(n: usize, sr: Semiring, word_budget: usize) -> Network {
        Network {
            n,
            sr,
            word_budget,
            stores: vec![HashMap::new(); n],
            recv_count: vec![0; n],
            rounds_run: 0,
            messages: 0,
            round_msgs: Vec::new(),
            trace_hash: FNV_OFFSET,
            trace: None,
            violations: Vec::new(),
        }
    }

    /// Records the full message trace (otherwise only its hash is kept).
    pub fn record_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn semiring(&self) -> &Semiring {
        &self.sr
    }

    pub fn rounds_run(&self) -> usize {
        self.rounds_run
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    /// Hash over `(round, src, dst, store key, flags)` for every message so
    /// far. Independent of the values carried.
    pub fn trace_hash(&self) -> u64 {
        self.trace_hash
    }

    pub fn trace(&self) -> Option<&[(usize, u32, u32, Key)]> {
        self.trace.as_deref()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Total messages delivered to each computer over the whole run.
    pub fn recv_counts(&self) -> &[u64] {
        &self.recv_count
    }

    /// Messages delivered per executed round.
    pub fn round_message_counts(&self) -> &[usize] {
        &self.round_msgs
    }

    /// Packages the whole run; typically called right after
    /// [`Network::collect_output`].
    pub fn report(&self, output: SparseMatrix) -> SimReport {
        SimReport {
            rounds_used: self.rounds_run,
            messages_per_round: self.round_msgs.clone(),
            violations: self.violations.clone(),
            output,
        }
    }

    pub fn max_recv(&self) -> u64 {
        self.recv_count.iter().copied().max().unwrap_or(0)
    }

    /// Places the input values on their owners. Pattern positions without an
    /// explicit value hold the semiring zero; values are canonicalized.
    pub fn seed_instance(&mut self, inst: &SupportInstance) {
        for (role, matrix) in [(Role::A, &inst.a), (Role::B, &inst.b)] {
            for pos in matrix.pattern().iter() {
                let owner = inst
                    .placement
                    .owner(role, pos)
                    .expect("validated instance covers every entry");
                let value = self.sr.canon(matrix.get_raw(pos.0, pos.1).unwrap_or(Element(0)));
                let key = match role {
                    Role::A => Key::A(pos.0, pos.1),
                    Role::B => Key::B(pos.0, pos.1),
                    Role::X => unreachable!(),
                };
                self.stores[owner as usize].insert(key, value);
            }
        }
    }

    fn local_value(&self, at: u32, key: Key) -> Option<Element> {
        self.stores[at as usize].get(&key).copied()
    }

    fn store_acc(&mut self, at: u32, key: Key, value: Element, accumulate: bool) {
        let slot = self.stores[at as usize].entry(key).or_insert(self.sr.zero());
        if accumulate {
            *slot = self.sr.add(*slot, value);
        } else {
            *slot = value;
        }
    }

    fn apply_local(&mut self, op: &LocalOp, round: usize) -> Result<(), Violation> {
        let at = op.at();
        if at as usize >= self.n {
            return Err(Violation::BadComputer { id: at });
        }
        match *op {
            LocalOp::MulAcc { at, a, b, into } => {
                let av = self
                    .local_value(at, a)
                    .ok_or(Violation::MissingValue { round, at, key: a })?;
                let bv = self
                    .local_value(at, b)
                    .ok_or(Violation::MissingValue { round, at, key: b })?;
                let prod = self.sr.mul(av, bv);
                self.store_acc(at, into, prod, true);
            }
            LocalOp::MoveAcc { at, from, into } => {
                let v = self
                    .stores[at as usize]
                    .remove(&from)
                    .ok_or(Violation::MissingValue { round, at, key: from })?;
                self.store_acc(at, into, v, true);
            }
            LocalOp::InitZero { at, key } => {
                let zero = self.sr.zero();
                self.stores[at as usize].insert(key, zero);
            }
        }
        Ok(())
    }

    fn fail(&mut self, v: Violation) -> Violation {
        self.violations.push(v.clone());
        v
    }

    /// Runs one program to completion. Round numbering continues across
    /// calls, and the stores persist, so later programs see earlier results.
    pub fn execute(&mut self, program: &Program) -> Result<PhaseStats, Violation> {
        let start_round = self.rounds_run;
        for op in &program.init {
            if let Err(v) = self.apply_local(op, start_round) {
                return Err(self.fail(v));
            }
        }
        for (r, step) in program.rounds.iter().enumerate() {
            let round = start_round + r;
            for op in &step.pre {
                if let Err(v) = self.apply_local(op, round) {
                    return Err(self.fail(v));
                }
            }
            if let Err(v) = self.run_sends(round, &step.sends) {
                return Err(self.fail(v));
            }
            self.round_msgs.push(step.sends.len());
        }
        self.rounds_run += program.rounds.len();
        let end_round = self.rounds_run;
        for op in &program.finish {
            if let Err(v) = self.apply_local(op, end_round) {
                return Err(self.fail(v));
            }
        }
        Ok(PhaseStats {
            rounds: program.rounds.len(),
            messages: program.rounds.iter().map(|s| s.sends.len()).sum(),
        })
    }

    fn run_sends(&mut self, round: usize, sends: &[Send]) -> Result<(), Violation> {
        // Validate the round against the model before touching any store:
        // all messages of a round are logically simultaneous.
        let mut senders: HashMap<u32, u32> = HashMap::new();
        let mut receivers: HashMap<u32, Vec<u32>> = HashMap::new();
        for s in sends {
            if s.src as usize >= self.n {
                return Err(Violation::BadComputer { id: s.src });
            }
            if s.dst as usize >= self.n {
                return Err(Violation::BadComputer { id: s.dst });
            }
            if s.src == s.dst {
                return Err(Violation::SelfSend { round, src: s.src });
            }
            let words = s.read.message_words().max(s.store.message_words());
            if words > self.word_budget {
                return Err(Violation::WordBudget { round, src: s.src, words });
            }
            *senders.entry(s.src).or_insert(0) += 1;
            receivers.entry(s.dst).or_default().push(s.src);
        }
        if let Some((&src, _)) = senders.iter().find(|&(_, &c)| c > 1) {
            return Err(Violation::MultiSend { round, src });
        }
        if let Some((&dst, srcs)) = receivers.iter().find(|&(_, v)| v.len() > 1) {
            let mut srcs = srcs.clone();
            srcs.sort_unstable();
            return Err(Violation::MultiRecv { round, dst, srcs });
        }

        // Read every payload from the pre-delivery state.
        let mut payloads = Vec::with_capacity(sends.len());
        for s in sends {
            let v = self
                .local_value(s.src, s.read)
                .ok_or(Violation::MissingValue { round, at: s.src, key: s.read })?;
            payloads.push(v);
        }
        for s in sends {
            if s.take {
                self.stores[s.src as usize].remove(&s.read);
            }
        }
        for (s, v) in sends.iter().zip(payloads) {
            self.store_acc(s.dst, s.store, v, s.accumulate);
            self.recv_count[s.dst as usize] += 1;
            self.messages += 1;
            let mut h = self.trace_hash;
            h = fnv_fold(h, round as u64);
            h = fnv_fold(h, s.src as u64);
            h = fnv_fold(h, s.dst as u64);
            h = fnv_fold(h, s.store.tag());
            let (a, b) = s.store.coords();
            h = fnv_fold(h, a as u64);
            h = fnv_fold(h, b as u64);
            h = fnv_fold(h, (s.accumulate as u64) << 1 | s.take as u64);
            self.trace_hash = h;
            if let Some(t) = &mut self.trace {
                t.push((round, s.src, s.dst, s.store));
            }
        }
        Ok(())
    }

    /// Reads the finished output off the owners.
    pub fn collect_output(
        &mut self,
        x_hat: &Pattern,
        placement: &Placement,
    ) -> Result<SparseMatrix, Violation> {
        let mut values = Vec::with_capacity(x_hat.len());
        for (i, k) in x_hat.iter() {
            let owner = placement
                .owner(Role::X, (i, k))
                .ok_or(Violation::BadComputer { id: u32::MAX })?;
            match self.local_value(owner, Key::X(i, k)) {
                Some(v) => values.push(((i, k), v)),
                None => {
                    let v = Violation::MissingOutput { at: owner, key: Key::X(i, k) };
                    return Err(self.fail(v));
                }
            }
        }
        Ok(SparseMatrix::new(x_hat.clone(), values).expect("output keys lie in the pattern"))
    }

    /// Writes the recorded trace as CSV (requires [`Network::record_trace`]).
    pub fn trace_csv(&self) -> Option<String> {
        let trace = self.trace.as_ref()?;
        let mut out = String::from("round,src,dst,tag\n");
        for (round, src, dst, key) in trace {
            out.push_str(&format!("{},{},{},{:?}\n", round, src, dst, key));
        }
        Some(out)
    }
}
