use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::SimTime;

/// How a station turns an instruction count into a service duration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceMode {
    /// `instructions / ipt`.
    #[default]
    Deterministic,
    /// Exponential with mean `instructions / ipt`.
    Exponential,
}

/// Service duration in seconds for `instructions` on a server of `ipt`
/// instructions per second.
pub fn service_time<R: Rng + ?Sized>(
    instructions: f64,
    ipt: f64,
    mode: ServiceMode,
    rng: &mut R,
) -> f64 {
    debug_assert!(ipt > 0.0);
    let mean = instructions / ipt;
    match mode {
        ServiceMode::Deterministic => mean,
        ServiceMode::Exponential => Exp::new(1.0 / mean)
            .expect("positive service rate")
            .sample(rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedJob {
    pub job: usize,
    pub instructions: f64,
    pub enqueued_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InService {
    job: QueuedJob,
    started: SimTime,
    ends: SimTime,
}

/// Emitted whenever a job enters service; the caller schedules the
/// completion event at `ends`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceStart {
    pub job: usize,
    pub started: SimTime,
    pub ends: SimTime,
}

/// Single-server FIFO queue for one compute node.
#[derive(Debug, Clone)]
pub struct QueueStation {
    node: usize,
    ipt: f64,
    waiting: VecDeque<QueuedJob>,
    in_service: Option<InService>,
    busy_time: f64,
    waiting_instructions: f64,
}

impl QueueStation {
    pub fn new(node: usize, ipt: f64) -> Self {
        assert!(ipt > 0.0, "station {node} needs positive ipt");
        Self {
            node,
            ipt,
            waiting: VecDeque::new(),
            in_service: None,
            busy_time: 0.0,
            waiting_instructions: 0.0,
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn ipt(&self) -> f64 {
        self.ipt
    }

    /// Jobs at the node, the one in service included.
    pub fn queue_len(&self) -> usize {
        self.waiting.len() + usize::from(self.in_service.is_some())
    }

    pub fn is_idle(&self) -> bool {
        self.in_service.is_none()
    }

    /// Instructions still to execute at `now`: the residual of the job in
    /// service plus everything waiting.
    pub fn backlog_instructions(&self, now: SimTime) -> f64 {
        let residual = self
            .in_service
            .map(|s| ((s.ends - now).max(0.0)) * self.ipt)
            .unwrap_or(0.0);
        residual + self.waiting_instructions
    }

    /// Busy seconds up to `now`, including the elapsed part of the current
    /// service.
    pub fn busy_time(&self, now: SimTime) -> f64 {
        let partial = self
            .in_service
            .map(|s| (now - s.started).max(0.0))
            .unwrap_or(0.0);
        self.busy_time + partial
    }

    /// Appends a job. If the server is idle it starts immediately; the
    /// returned start describes the completion to schedule.
    pub fn enqueue<F>(&mut self, job: QueuedJob, now: SimTime, draw: F) -> Option<ServiceStart>
    where
        F: FnOnce(f64, f64) -> f64,
    {
        if self.in_service.is_none() {
            Some(self.start(job, now, draw))
        } else {
            self.waiting_instructions += job.instructions;
            self.waiting.push_back(job);
            None
        }
    }

    /// Finishes the job in service at `now`. Returns the finished job and,
    /// when the queue was non-empty, the next service start.
    pub fn complete<F>(&mut self, now: SimTime, draw: F) -> (QueuedJob, Option<ServiceStart>)
    where
        F: FnOnce(f64, f64) -> f64,
    {
        let done = self.in_service.take().expect("completion on idle station");
        self.busy_time += now - done.started;
        let next = self.waiting.pop_front().map(|job| {
            self.waiting_instructions -= job.instructions;
            if self.waiting.is_empty() {
                self.waiting_instructions = 0.0;
            }
            self.start(job, now, draw)
        });
        (done.job, next)
    }

    fn start<F>(&mut self, job: QueuedJob, now: SimTime, draw: F) -> ServiceStart
    where
        F: FnOnce(f64, f64) -> f64,
    {
        let ends = now + draw(job.instructions, self.ipt);
        self.in_service = Some(InService {
            job,
            started: now,
            ends,
        });
        ServiceStart {
            job: job.job,
            started: now,
            ends,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det(instr: f64, ipt: f64) -> f64 {
        instr / ipt
    }

    fn job(id: usize, instructions: f64, t: f64) -> QueuedJob {
        QueuedJob {
            job: id,
            instructions,
            enqueued_at: SimTime::new(t),
        }
    }

    #[test]
    fn deterministic_service_is_instructions_over_ipt() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fog = service_time(1e4, 1e3, ServiceMode::Deterministic, &mut rng);
        assert_eq!(fog, 10.0);
        let cloud = service_time(1e2, 1e6, ServiceMode::Deterministic, &mut rng);
        assert!((cloud - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn exponential_service_mean_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| service_time(1e3, 1e3, ServiceMode::Exponential, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn idle_station_starts_service_immediately() {
        let mut st = QueueStation::new(0, 1e3);
        let start = st.enqueue(job(0, 1e3, 0.0), SimTime::ZERO, det).unwrap();
        assert_eq!(start.started, SimTime::ZERO);
        assert_eq!(start.ends, SimTime::new(1.0));
        assert_eq!(st.queue_len(), 1);
    }

    #[test]
    fn fifo_waits_accumulate() {
        let mut st = QueueStation::new(0, 1e3);
        let mut starts = vec![st.enqueue(job(0, 1e3, 0.0), SimTime::ZERO, det).unwrap()];
        assert!(st.enqueue(job(1, 1e3, 0.0), SimTime::ZERO, det).is_none());
        assert!(st.enqueue(job(2, 1e3, 0.0), SimTime::ZERO, det).is_none());
        assert_eq!(st.queue_len(), 3);
        assert_eq!(st.backlog_instructions(SimTime::ZERO), 3e3);
        let mut finished = vec![];
        while let Some(s) = starts.last().copied() {
            let (done, next) = st.complete(s.ends, det);
            finished.push(done.job);
            match next {
                Some(n) => starts.push(n),
                None => break,
            }
        }
        let waits: Vec<f64> = starts.iter().map(|s| s.started.seconds()).collect();
        assert_eq!(waits, vec![0.0, 1.0, 2.0]);
        assert_eq!(finished, vec![0, 1, 2]);
        assert_eq!(st.busy_time(SimTime::new(3.0)), 3.0);
        assert!(st.is_idle());
    }

    #[test]
    fn busy_time_counts_partial_service() {
        let mut st = QueueStation::new(0, 1.0);
        st.enqueue(job(0, 10.0, 0.0), SimTime::new(90.0), det);
        assert_eq!(st.busy_time(SimTime::new(100.0)), 10.0);
        assert_eq!(st.backlog_instructions(SimTime::new(95.0)), 5.0);
    }
}
