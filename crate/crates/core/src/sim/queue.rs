use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{SimError, SimTime};

/// A scheduled occurrence. `(time, seq)` is a strict total order because
/// sequence numbers are unique within a queue.
#[derive(Debug, Clone)]
pub struct Event<K> {
    pub time: SimTime,
    pub seq: u64,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<K> Eq for Event<K> {}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Event<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .cmp(&other.time)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Pending-event set plus the simulation clock.
#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Reverse<Event<K>>>,
    clock: SimTime,
    next_seq: u64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            clock: SimTime::ZERO,
            next_seq: 0,
        }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Inserts an event; ties at equal times resolve by insertion order.
    pub fn schedule(&mut self, time: SimTime, kind: K) -> Result<u64, SimError> {
        if time < self.clock {
            return Err(SimError::PastEvent {
                event: time.seconds(),
                clock: self.clock.seconds(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, seq, kind }));
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event<K>> {
        let Reverse(event) = self.heap.pop()?;
        self.clock = event.time;
        Some(event)
    }

    /// Pops the earliest event if it is due by `t_end`. Otherwise the clock
    /// moves to `t_end` and `None` is returned.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<K>> {
        match self.peek_time() {
            Some(t) if t <= t_end => self.pop(),
            _ => {
                self.clock = self.clock.max(t_end);
                None
            }
        }
    }
}
