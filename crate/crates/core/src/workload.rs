//! IoT workload categories, jobs and Poisson arrival streams.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamRng;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Heavy,
    Moderate,
    Light,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Heavy, Category::Moderate, Category::Light];

    pub fn instructions(self) -> f64 {
        match self {
            Category::Heavy => 1e4,
            Category::Moderate => 1e3,
            Category::Light => 1e2,
        }
    }

    pub fn data_bytes(self) -> f64 {
        match self {
            Category::Heavy => 1e3,
            Category::Moderate => 1e2,
            Category::Light => 1e1,
        }
    }

    pub fn response_bytes(self) -> f64 {
        self.data_bytes()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Heavy => "heavy",
            Category::Moderate => "moderate",
            Category::Light => "light",
        }
    }
}

/// One workload instance and its lifecycle timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    pub category: Category,
    pub source_ap: usize,
    pub fog: Option<usize>,
    pub t_generated: SimTime,
    pub t_dispatched: Option<SimTime>,
    pub t_enqueued: Option<SimTime>,
    pub t_service_start: Option<SimTime>,
    pub t_service_end: Option<SimTime>,
    pub t_response_at_ap: Option<SimTime>,
}

impl Job {
    pub fn new(id: usize, category: Category, source_ap: usize, now: SimTime) -> Self {
        Self {
            id,
            category,
            source_ap,
            fog: None,
            t_generated: now,
            t_dispatched: None,
            t_enqueued: None,
            t_service_start: None,
            t_service_end: None,
            t_response_at_ap: None,
        }
    }

    /// Seconds spent queued at the fog node before service started.
    pub fn waiting(&self) -> Option<f64> {
        Some(self.t_service_start? - self.t_enqueued?)
    }

    /// Seconds from generation to the response reaching the source AP.
    pub fn execution_delay(&self) -> Option<f64> {
        Some(self.t_response_at_ap? - self.t_generated)
    }

    pub fn service(&self) -> Option<f64> {
        Some(self.t_service_end? - self.t_service_start?)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("schedule has no phases")]
    Empty,
    #[error("phase {0} must start strictly after the previous one")]
    NotIncreasing(usize),
    #[error("phase {0} needs a positive beta")]
    BadBeta(usize),
}

/// One generation-intensity phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    /// Simulation step at which the phase begins.
    pub start_step: f64,
    /// Mean interarrival per stream, in simulation steps.
    pub beta: f64,
}

/// Phase-scheduled interarrival scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Phase>", into = "Vec<Phase>")]
pub struct GenerationSchedule {
    phases: Vec<Phase>,
}

impl GenerationSchedule {
    pub fn new(phases: Vec<Phase>) -> Result<Self, ScheduleError> {
        if phases.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (i, p) in phases.iter().enumerate() {
            if !(p.beta > 0.0) || !p.beta.is_finite() {
                return Err(ScheduleError::BadBeta(i));
            }
            if i > 0 && !(p.start_step > phases[i - 1].start_step) {
                return Err(ScheduleError::NotIncreasing(i));
            }
        }
        Ok(Self { phases })
    }

    /// Single phase at a constant `beta`.
    pub fn constant(beta: f64) -> Self {
        Self::new(vec![Phase {
            start_step: 0.0,
            beta,
        }])
        .expect("valid constant schedule")
    }

    /// Low, medium and high intensity back to back.
    pub fn standard(steps_per_phase: f64) -> Self {
        Self::new(
            [200.0, 150.0, 100.0]
                .iter()
                .enumerate()
                .map(|(i, &beta)| Phase {
                    start_step: i as f64 * steps_per_phase,
                    beta,
                })
                .collect(),
        )
        .expect("valid default schedule")
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// Beta in force at `step`. Steps before the first phase use it too.
    pub fn beta_at(&self, step: f64) -> f64 {
        self.phases
            .iter()
            .rev()
            .find(|p| p.start_step <= step)
            .unwrap_or(&self.phases[0])
            .beta
    }
}

impl TryFrom<Vec<Phase>> for GenerationSchedule {
    type Error = ScheduleError;
    fn try_from(phases: Vec<Phase>) -> Result<Self, Self::Error> {
        Self::new(phases)
    }
}

impl From<GenerationSchedule> for Vec<Phase> {
    fn from(s: GenerationSchedule) -> Self {
        s.phases
    }
}

/// Exponential interarrival with mean `beta`.
pub fn sample_interarrival<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    loop {
        let x = Exp::new(1.0 / beta).expect("positive rate").sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Arrival generator for one `(AP, category)` pair, with a private stream.
#[derive(Debug, Clone)]
pub struct ArrivalStream {
    pub ap: usize,
    pub category: Category,
    rng: StreamRng,
}

impl ArrivalStream {
    pub fn new(ap: usize, category: Category, rng: StreamRng) -> Self {
        Self { ap, category, rng }
    }

    /// Next interarrival in seconds for a scale of `beta_seconds`.
    pub fn next_gap(&mut self, beta_seconds: f64) -> f64 {
        sample_interarrival(beta_seconds, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(beta: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| sample_interarrival(beta, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var.sqrt() / mean)
    }

    #[test]
    fn interarrival_mean_and_cv() {
        for (i, beta) in [200.0, 150.0, 100.0].into_iter().enumerate() {
            let (mean, cv) = moments(beta, 1_000_000, i as u64);
            assert!((mean / beta - 1.0).abs() < 0.01, "beta {beta}: mean {mean}");
            assert!((cv - 1.0).abs() < 0.02, "beta {beta}: cv {cv}");
        }
    }

    #[test]
    fn larger_beta_halves_rate() {
        let (m200, _) = moments(200.0, 200_000, 1);
        let (m100, _) = moments(100.0, 200_000, 2);
        let ratio = (1.0 / m200) / (1.0 / m100);
        assert!((ratio - 0.5).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn interarrivals_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..100_000).all(|_| sample_interarrival(1e-3, &mut rng) > 0.0));
    }

    #[test]
    fn schedule_lookup() {
        let s = GenerationSchedule::standard(30_000.0);
        assert_eq!(s.beta_at(0.0), 200.0);
        assert_eq!(s.beta_at(29_999.0), 200.0);
        assert_eq!(s.beta_at(30_000.0), 150.0);
        assert_eq!(s.beta_at(1e9), 100.0);
    }

    #[test]
    fn schedule_validation() {
        let p = |start_step, beta| Phase { start_step, beta };
        assert_eq!(GenerationSchedule::new(vec![]), Err(ScheduleError::Empty));
        assert_eq!(
            GenerationSchedule::new(vec![p(0.0, 100.0), p(0.0, 50.0)]),
            Err(ScheduleError::NotIncreasing(1))
        );
        assert_eq!(
            GenerationSchedule::new(vec![p(0.0, 0.0)]),
            Err(ScheduleError::BadBeta(0))
        );
    }

    #[test]
    fn job_delays() {
        let mut j = Job::new(0, Category::Heavy, 3, SimTime::ZERO);
        j.t_enqueued = Some(SimTime::new(1.0));
        j.t_service_start = Some(SimTime::new(4.0));
        j.t_service_end = Some(SimTime::new(14.0));
        j.t_response_at_ap = Some(SimTime::new(15.0));
        assert_eq!(j.waiting(), Some(3.0));
        assert_eq!(j.service(), Some(10.0));
        assert_eq!(j.execution_delay(), Some(15.0));
    }
}
