use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObsMode {
    #[default]
    Realtime,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Delivery {
    #[default]
    Instant,
    LinkDelayed,
}

/// How queue information reaches the deciding agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationModel {
    pub mode: ObsMode,
    pub interval_s: f64,
    pub delivery: Delivery,
}

impl Default for ObservationModel {
    fn default() -> Self {
        Self {
            mode: ObsMode::Realtime,
            interval_s: 3.0,
            delivery: Delivery::Instant,
        }
    }
}

impl ObservationModel {
    pub fn realtime() -> Self {
        Self::default()
    }

    pub fn interval(interval_s: f64) -> Self {
        Self {
            mode: ObsMode::Interval,
            interval_s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mode == ObsMode::Interval && !(self.interval_s > 0.0 && self.interval_s.is_finite()) {
            return Err("interval must be positive".into());
        }
        Ok(())
    }

    /// Broadcasts at `k * interval` strictly before `horizon`.
    pub fn broadcasts_before(&self, horizon: f64) -> u64 {
        if self.mode != ObsMode::Interval || horizon <= 0.0 {
            return 0;
        }
        (horizon / self.interval_s).ceil() as u64
    }
}

/// What a fog node reports about itself.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FogObs {
    pub queue_len: usize,
    pub backlog: f64,
}

/// Periodic queue snapshots, one vector per broadcast, indexed by node id.
#[derive(Debug, Clone, Default)]
pub struct SnapshotLog {
    interval: f64,
    snaps: Vec<Vec<FogObs>>,
}

impl SnapshotLog {
    pub fn new(interval: f64) -> Self {
        assert!(interval > 0.0);
        Self {
            interval,
            snaps: Vec::new(),
        }
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }

    /// Time of broadcast `k`.
    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 * self.interval
    }

    pub fn next_time(&self) -> f64 {
        self.time_of(self.snaps.len())
    }

    pub fn record(&mut self, snap: Vec<FogObs>) {
        self.snaps.push(snap);
    }

    /// Latest snapshot taken at or before `now`.
    pub fn latest(&self, now: f64) -> Option<&[FogObs]> {
        let k = (0..self.snaps.len())
            .rev()
            .find(|&k| self.time_of(k) <= now)?;
        Some(&self.snaps[k])
    }

    /// Per-node latest entry whose broadcast, delayed by `delay(node)`,
    /// has arrived by `now`. Nodes with nothing delivered read empty.
    pub fn delivered(&self, now: f64, nodes: &[usize], delay: impl Fn(usize) -> f64, out: &mut [FogObs]) {
        for &n in nodes {
            let d = delay(n);
            out[n] = (0..self.snaps.len())
                .rev()
                .find(|&k| self.time_of(k) + d <= now)
                .map(|k| self.snaps[k][n])
                .unwrap_or_default();
        }
    }
}
