//! In-process message transport between shards.
//!
//! Shards enqueue messages during a sub-phase; nothing is visible to the
//! receiver until [`Transport::flush_barrier`] runs. Delivery order per
//! destination is (source shard, source sequence number).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linkage::{ClusterId, Link};

/// Bytes per id, weight or size on the wire.
pub const WORD_BYTES: u64 = 8;
/// Bytes for the kind tag and for a boolean flag.
pub const TAG_BYTES: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    NNQuery,
    NNReply,
    NeighborhoodRequest,
    NeighborhoodReply,
    DissimilarityUpdate,
    DeleteNotice,
}

impl MessageKind {
    pub const ALL: [MessageKind; 6] = [
        MessageKind::NNQuery,
        MessageKind::NNReply,
        MessageKind::NeighborhoodRequest,
        MessageKind::NeighborhoodReply,
        MessageKind::DissimilarityUpdate,
        MessageKind::DeleteNotice,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Asks the owner of `target` for its nearest-neighbor state.
    NNQuery {
        target: ClusterId,
    },
    /// `weight` is the dissimilarity to `nn`; `will_merge` reports whether
    /// `target` merges with `nn` this round.
    NNReply {
        target: ClusterId,
        nn: Option<ClusterId>,
        will_merge: bool,
        weight: f64,
    },
    NeighborhoodRequest {
        lo: ClusterId,
        hi: ClusterId,
    },
    NeighborhoodReply {
        lo: ClusterId,
        hi: ClusterId,
        size: u64,
        entries: Vec<(ClusterId, Link)>,
    },
    /// Replace the entries for `lo` and `removed` in `target`'s map with
    /// `link` under id `lo`.
    DissimilarityUpdate {
        target: ClusterId,
        lo: ClusterId,
        removed: ClusterId,
        link: Link,
    },
    DeleteNotice {
        hi: ClusterId,
        lo: ClusterId,
    },
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::NNQuery { .. } => MessageKind::NNQuery,
            Payload::NNReply { .. } => MessageKind::NNReply,
            Payload::NeighborhoodRequest { .. } => MessageKind::NeighborhoodRequest,
            Payload::NeighborhoodReply { .. } => MessageKind::NeighborhoodReply,
            Payload::DissimilarityUpdate { .. } => MessageKind::DissimilarityUpdate,
            Payload::DeleteNotice { .. } => MessageKind::DeleteNotice,
        }
    }

    /// Wire size: 8 bytes per id, weight and size, 1 byte per tag or flag.
    pub fn bytes(&self) -> u64 {
        let words = match self {
            Payload::NNQuery { .. } => 1,
            Payload::NNReply { .. } => 3,
            Payload::NeighborhoodRequest { .. } => 2,
            Payload::NeighborhoodReply { entries, .. } => 3 + 3 * entries.len() as u64,
            Payload::DissimilarityUpdate { .. } => 5,
            Payload::DeleteNotice { .. } => 2,
        };
        let flags = matches!(self, Payload::NNReply { .. }) as u64;
        TAG_BYTES + flags * TAG_BYTES + words * WORD_BYTES
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub src: usize,
    pub dst: usize,
    pub seq: u64,
    pub payload: Payload,
}

/// Sub-phase boundaries at which batches are flushed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    FindQuery,
    FindReply,
    NeighborhoodRequest,
    NeighborhoodReply,
    InfoQuery,
    InfoReply,
    Update,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::FindQuery => "find-query",
            Phase::FindReply => "find-reply",
            Phase::NeighborhoodRequest => "neighborhood-request",
            Phase::NeighborhoodReply => "neighborhood-reply",
            Phase::InfoQuery => "info-query",
            Phase::InfoReply => "info-reply",
            Phase::Update => "update",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounter {
    /// Messages whose source and destination shard coincide.
    pub local: u64,
    /// Cross-shard messages.
    pub remote: u64,
    /// Payload bytes of the cross-shard messages.
    pub remote_bytes: u64,
}

/// Message counters and per-shard phase times of one round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundTransport {
    pub round: u32,
    pub kinds: Vec<(MessageKind, KindCounter)>,
    /// Seconds spent per shard in the find, merge and nn-update phases.
    pub shard_secs: Vec<[f64; 3]>,
}

impl RoundTransport {
    fn new(round: u32, shards: usize) -> Self {
        RoundTransport {
            round,
            kinds: MessageKind::ALL.iter().map(|&k| (k, KindCounter::default())).collect(),
            shard_secs: vec![[0.0; 3]; shards],
        }
    }

    pub fn counter(&self, kind: MessageKind) -> KindCounter {
        self.kinds[kind.index()].1
    }

    pub fn total(&self, kind: MessageKind) -> u64 {
        let c = self.counter(kind);
        c.local + c.remote
    }

    pub fn remote_messages(&self) -> u64 {
        self.kinds.iter().map(|(_, c)| c.remote).sum()
    }

    pub fn remote_bytes(&self) -> u64 {
        self.kinds.iter().map(|(_, c)| c.remote_bytes).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransportStats {
    pub rounds: Vec<RoundTransport>,
}

impl TransportStats {
    pub fn remote_messages(&self) -> u64 {
        self.rounds.iter().map(RoundTransport::remote_messages).sum()
    }

    pub fn remote_bytes(&self) -> u64 {
        self.rounds.iter().map(RoundTransport::remote_bytes).sum()
    }

    pub fn total(&self, kind: MessageKind) -> u64 {
        self.rounds.iter().map(|r| r.total(kind)).sum()
    }
}

/// One delivered batch: all messages of one kind from one shard to another
/// within a sub-phase.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord {
    pub round: u32,
    pub phase: Phase,
    pub src: usize,
    pub dst: usize,
    pub kind: MessageKind,
    pub count: u64,
    pub bytes: u64,
}

impl BatchRecord {
    /// Tab-separated transport-log line.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.round, self.phase, self.src, self.dst, self.kind, self.count, self.bytes
        )
    }
}

pub struct Transport {
    num_shards: usize,
    pending: Vec<Message>,
    inboxes: Vec<Vec<Message>>,
    round: RoundTransport,
    finished: Vec<RoundTransport>,
    log: Option<Vec<BatchRecord>>,
}

impl Transport {
    pub fn new(num_shards: usize, keep_log: bool) -> Self {
        Transport {
            num_shards,
            pending: Vec::new(),
            inboxes: vec![Vec::new(); num_shards],
            round: RoundTransport::new(1, num_shards),
            finished: Vec::new(),
            log: keep_log.then(Vec::new),
        }
    }

    pub fn num_shards(&self) -> usize {
        self.num_shards
    }

    /// Queues an outbound batch. Nothing is delivered before the next barrier.
    pub fn enqueue(&mut self, batch: Vec<Message>) {
        self.pending.extend(batch);
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Delivers everything queued since the last barrier, grouped by
    /// destination shard in (source shard, sequence) order. Undelivered
    /// inbox contents from the previous barrier are dropped.
    pub fn flush_barrier(&mut self, phase: Phase) {
        for inbox in &mut self.inboxes {
            inbox.clear();
        }
        if self.pending.is_empty() {
            return;
        }
        let mut batch = std::mem::take(&mut self.pending);
        batch.sort_by_key(|m| (m.src, m.seq));
        let mut batches: BTreeMap<(usize, usize, MessageKind), (u64, u64)> = BTreeMap::new();
        for m in &batch {
            let kind = m.payload.kind();
            let bytes = m.payload.bytes();
            let counter = &mut self.round.kinds[kind.index()].1;
            if m.src == m.dst {
                counter.local += 1;
            } else {
                counter.remote += 1;
                counter.remote_bytes += bytes;
            }
            let entry = batches.entry((m.src, m.dst, kind)).or_default();
            entry.0 += 1;
            entry.1 += bytes;
        }
        if let Some(log) = self.log.as_mut() {
            let round = self.round.round;
            log.extend(
                batches
                    .into_iter()
                    .map(|((src, dst, kind), (count, bytes))| BatchRecord {
                        round,
                        phase,
                        src,
                        dst,
                        kind,
                        count,
                        bytes,
                    }),
            );
        }
        for m in batch {
            let dst = m.dst;
            self.inboxes[dst].push(m);
        }
    }

    /// Messages delivered to `shard` by the last barrier.
    pub fn take_inbox(&mut self, shard: usize) -> Vec<Message> {
        std::mem::take(&mut self.inboxes[shard])
    }

    pub fn take_inboxes(&mut self) -> Vec<Vec<Message>> {
        self.inboxes.iter_mut().map(std::mem::take).collect()
    }

    pub(crate) fn add_shard_secs(&mut self, shard: usize, phase: usize, secs: f64) {
        self.round.shard_secs[shard][phase] += secs;
    }

    pub(crate) fn current_round(&self) -> &RoundTransport {
        &self.round
    }

    pub(crate) fn end_round(&mut self) {
        let next = RoundTransport::new(self.round.round + 1, self.num_shards);
        self.finished.push(std::mem::replace(&mut self.round, next));
    }

    pub fn into_parts(self) -> (TransportStats, Vec<BatchRecord>) {
        (TransportStats { rounds: self.finished }, self.log.unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(src: usize, dst: usize, seq: u64, payload: Payload) -> Message {
        Message { src, dst, seq, payload }
    }

    #[test]
    fn empty_barrier_is_noop() {
        let mut t = Transport::new(2, true);
        t.flush_barrier(Phase::FindQuery);
        assert!(t.take_inbox(0).is_empty());
        let (stats, log) = {
            t.end_round();
            t.into_parts()
        };
        assert_eq!(stats.remote_messages(), 0);
        assert!(log.is_empty());
    }

    #[test]
    fn messages_become_visible_only_after_barrier() {
        let mut t = Transport::new(2, false);
        t.enqueue(vec![msg(0, 1, 0, Payload::NNQuery { target: 3 })]);
        assert!(t.take_inbox(1).is_empty());
        t.flush_barrier(Phase::FindQuery);
        let inbox = t.take_inbox(1);
        assert_eq!(inbox.len(), 1);
        t.enqueue(vec![msg(
            1,
            0,
            0,
            Payload::NNReply {
                target: 3,
                nn: Some(0),
                will_merge: false,
                weight: 1.0,
            },
        )]);
        assert!(t.take_inbox(0).is_empty());
        t.flush_barrier(Phase::FindReply);
        assert_eq!(t.take_inbox(0).len(), 1);
    }

    #[test]
    fn delivery_grouped_by_destination_in_source_order() {
        let mut t = Transport::new(2, true);
        t.enqueue(vec![
            msg(1, 0, 0, Payload::DeleteNotice { hi: 5, lo: 2 }),
            msg(1, 1, 1, Payload::NNQuery { target: 7 }),
        ]);
        t.enqueue(vec![
            msg(0, 0, 0, Payload::NNQuery { target: 4 }),
            msg(0, 1, 1, Payload::NeighborhoodRequest { lo: 2, hi: 5 }),
            msg(0, 0, 2, Payload::DeleteNotice { hi: 9, lo: 0 }),
        ]);
        t.flush_barrier(Phase::Update);
        let to0: Vec<_> = t.take_inbox(0).iter().map(|m| (m.src, m.seq)).collect();
        let to1: Vec<_> = t.take_inbox(1).iter().map(|m| (m.src, m.seq)).collect();
        assert_eq!(to0, vec![(0, 0), (0, 2), (1, 0)]);
        assert_eq!(to1, vec![(0, 1), (1, 1)]);
        t.end_round();
        let (stats, log) = t.into_parts();
        let r = &stats.rounds[0];
        assert_eq!(r.counter(MessageKind::NNQuery).local, 2);
        assert_eq!(r.counter(MessageKind::DeleteNotice).remote, 1);
        assert_eq!(r.remote_bytes(), 17 + 17);
        assert_eq!(log.len(), 5);
        assert_eq!(log[0].to_line(), "1\tupdate\t0\t0\tNNQuery\t1\t9");
    }

    #[test]
    fn byte_accounting() {
        assert_eq!(Payload::NNQuery { target: 1 }.bytes(), 9);
        let reply = Payload::NNReply {
            target: 1,
            nn: None,
            will_merge: false,
            weight: 0.0,
        };
        assert_eq!(reply.bytes(), 26);
        let nb = Payload::NeighborhoodReply {
            lo: 0,
            hi: 1,
            size: 3,
            entries: vec![(4, Link::point(1.0)); 2],
        };
        assert_eq!(nb.bytes(), 1 + 24 + 48);
        let up = Payload::DissimilarityUpdate {
            target: 0,
            lo: 1,
            removed: 2,
            link: Link::point(1.0),
        };
        assert_eq!(up.bytes(), 41);
    }
}
