use super::SimTime;

/// One direction of a network link. Transmissions serialize on the
/// transmitter; propagation delay is added once per message.
#[derive(Debug, Clone)]
pub struct LinkChannel {
    pub from: usize,
    pub to: usize,
    /// Bits per second.
    pub bandwidth: f64,
    /// Seconds.
    pub prop_delay: f64,
    /// When the transmitter finishes the last queued message. Messages are
    /// sent in FIFO order, so this single horizon stands in for the queue.
    tx_free_at: SimTime,
    in_flight: u64,
}

impl LinkChannel {
    pub fn new(from: usize, to: usize, bandwidth: f64, prop_delay: f64) -> Self {
        assert!(bandwidth > 0.0, "link {from}->{to} needs positive bandwidth");
        Self {
            from,
            to,
            bandwidth,
            prop_delay,
            tx_free_at: SimTime::ZERO,
            in_flight: 0,
        }
    }

    pub fn serialization(&self, bytes: f64) -> f64 {
        8.0 * bytes / self.bandwidth
    }

    /// Delay a message of `bytes` handed over at `now` would see, without
    /// committing it.
    pub fn transmission_delay(&self, bytes: f64, now: SimTime) -> f64 {
        let wait = (self.tx_free_at - now).max(0.0);
        wait + self.serialization(bytes) + self.prop_delay
    }

    /// Delay on an idle channel.
    pub fn unloaded_delay(&self, bytes: f64) -> f64 {
        self.serialization(bytes) + self.prop_delay
    }

    /// Commits a message and returns its arrival time at `to`.
    pub fn transmit(&mut self, bytes: f64, now: SimTime) -> SimTime {
        let start = self.tx_free_at.max(now);
        self.tx_free_at = start + self.serialization(bytes);
        self.in_flight += 1;
        self.tx_free_at + self.prop_delay
    }

    pub fn delivered(&mut self) {
        self.in_flight = self.in_flight.saturating_sub(1);
    }

    pub fn in_flight(&self) -> u64 {
        self.in_flight
    }
}
