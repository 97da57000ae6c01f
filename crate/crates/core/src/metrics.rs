//! Per-run summaries computed from the event log, and aggregation across
//! seeds.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::workload::Category;
use crate::world::EventLog;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no job completed within the horizon")]
    NoCompletedJobs,
    #[error("aggregation needs at least two runs, got {0}")]
    TooFewRuns(usize),
}

/// Busy fraction of the horizon.
pub fn node_utilization(busy_time: f64, horizon: f64) -> f64 {
    assert!(horizon > 0.0, "horizon must be positive");
    (busy_time / horizon).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn pop_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub id: usize,
    pub jobs_started: u64,
    pub mean_wait: f64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDelays {
    pub heavy: f64,
    pub moderate: f64,
    pub light: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub avg_wait: f64,
    pub std_wait_across_nodes: f64,
    pub std_utilization_across_nodes: f64,
    pub avg_execution_delay: f64,
    pub execution_delay_by_category: CategoryDelays,
    pub control_msg_count: u64,
    pub observation_msg_count: u64,
    pub generated_jobs: u64,
    pub completed_jobs: u64,
    pub censored_jobs: u64,
    pub decision_steps: Vec<u64>,
    pub nodes: Vec<NodeStats>,
}

impl RunSummary {
    /// Scalar metrics in export order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("avg_wait", self.avg_wait),
            ("std_wait_across_nodes", self.std_wait_across_nodes),
            ("std_utilization_across_nodes", self.std_utilization_across_nodes),
            ("avg_execution_delay", self.avg_execution_delay),
            ("execution_delay_heavy", self.execution_delay_by_category.heavy),
            ("execution_delay_moderate", self.execution_delay_by_category.moderate),
            ("execution_delay_light", self.execution_delay_by_category.light),
            ("control_msg_count", self.control_msg_count as f64),
            ("observation_msg_count", self.observation_msg_count as f64),
            ("generated_jobs", self.generated_jobs as f64),
            ("completed_jobs", self.completed_jobs as f64),
            ("censored_jobs", self.censored_jobs as f64),
            ("decision_steps_total", self.decision_steps.iter().sum::<u64>() as f64),
        ]
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }
}

/// Summarizes a finished run. Waits count jobs whose service started
/// within the horizon; execution delays count jobs whose response arrived.
pub fn summarize(log: &EventLog) -> Result<RunSummary, MetricsError> {
    let h = log.horizon;
    let mut wait_sum = vec![0.0; log.fogs.len()];
    let mut started = vec![0u64; log.fogs.len()];
    let mut busy = vec![0.0; log.fogs.len()];
    let slot = |node: usize| log.fogs.iter().position(|f| f.id == node);
    let mut waits = Vec::new();
    let mut delays = Vec::new();
    let mut by_cat = [(0.0, 0u64); 3];
    for j in &log.jobs {
        let (Some(start), Some(fog)) = (j.t_service_start, j.fog) else {
            continue;
        };
        if start.seconds() > h {
            continue;
        }
        let w = j.waiting().expect("started jobs were enqueued");
        waits.push(w);
        if let Some(i) = slot(fog) {
            wait_sum[i] += w;
            started[i] += 1;
            let end = j.t_service_end.map_or(h, |e| e.seconds().min(h));
            busy[i] += end - start.seconds();
        }
        if let Some(resp) = j.t_response_at_ap {
            if resp.seconds() <= h {
                let d = resp - j.t_generated;
                delays.push(d);
                let c = &mut by_cat[j.category.index()];
                c.0 += d;
                c.1 += 1;
            }
        }
    }
    if waits.is_empty() || delays.is_empty() {
        return Err(MetricsError::NoCompletedJobs);
    }
    let nodes: Vec<NodeStats> = log
        .fogs
        .iter()
        .enumerate()
        .map(|(i, f)| NodeStats {
            id: f.id,
            jobs_started: started[i],
            mean_wait: if started[i] > 0 { wait_sum[i] / started[i] as f64 } else { 0.0 },
            utilization: node_utilization(busy[i], h),
        })
        .collect();
    let node_waits: Vec<f64> = nodes.iter().map(|n| n.mean_wait).collect();
    let utils: Vec<f64> = nodes.iter().map(|n| n.utilization).collect();
    let cat_mean = |c: Category| {
        let (s, n) = by_cat[c.index()];
        if n > 0 { s / n as f64 } else { 0.0 }
    };
    let generated = log.jobs.len() as u64;
    let completed = delays.len() as u64;
    Ok(RunSummary {
        avg_wait: mean(&waits),
        std_wait_across_nodes: pop_std(&node_waits),
        std_utilization_across_nodes: pop_std(&utils),
        avg_execution_delay: mean(&delays),
        execution_delay_by_category: CategoryDelays {
            heavy: cat_mean(Category::Heavy),
            moderate: cat_mean(Category::Moderate),
            light: cat_mean(Category::Light),
        },
        control_msg_count: log.control_msgs,
        observation_msg_count: log.observation_msgs,
        generated_jobs: generated,
        completed_jobs: completed,
        censored_jobs: generated - completed,
        decision_steps: log.decisions_per_agent.clone(),
        nodes,
    })
}

/// Sample mean with a two-sided 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

pub fn mean_ci(values: &[f64]) -> Result<Interval, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewRuns(n));
    }
    let m = mean(values);
    let s = (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid degrees of freedom")
        .inverse_cdf(0.975);
    Ok(Interval {
        mean: m,
        half_width: t * s / (n as f64).sqrt(),
        n,
    })
}

/// Per-metric intervals across seeds, in export order.
pub fn aggregate(summaries: &[RunSummary]) -> Result<Vec<(&'static str, Interval)>, MetricsError> {
    if summaries.len() < 2 {
        return Err(MetricsError::TooFewRuns(summaries.len()));
    }
    let names: Vec<&'static str> = summaries[0].metrics().into_iter().map(|(n, _)| n).collect();
    names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = summaries.iter().map(|s| s.metrics()[i].1).collect();
            Ok((name, mean_ci(&vals)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimTime;
    use crate::workload::Job;
    use crate::world::FogRecord;

    fn job(id: usize, fog: usize, t: [f64; 5]) -> Job {
        let mut j = Job::new(id, Category::Heavy, 0, SimTime::new(t[0]));
        j.fog = Some(fog);
        j.t_dispatched = Some(SimTime::new(t[0]));
        j.t_enqueued = Some(SimTime::new(t[1]));
        j.t_service_start = Some(SimTime::new(t[2]));
        j.t_service_end = Some(SimTime::new(t[3]));
        j.t_response_at_ap = Some(SimTime::new(t[4]));
        j
    }

    fn log(jobs: Vec<Job>, fogs: &[usize], horizon: f64) -> EventLog {
        EventLog {
            horizon,
            fogs: fogs.iter().map(|&id| FogRecord { id, ipt: 1e3 }).collect(),
            jobs,
            control_msgs: 0,
            observation_msgs: 0,
            decisions_per_agent: vec![],
        }
    }

    #[test]
    fn utilization_bounds() {
        assert_eq!(node_utilization(0.0, 100.0), 0.0);
        assert_eq!(node_utilization(10.0, 100.0), 0.1);
        assert_eq!(node_utilization(150.0, 100.0), 1.0);
    }

    #[test]
    fn population_std() {
        assert_eq!(pop_std(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(pop_std(&[0.0, 4.0]), 2.0);
    }

    #[test]
    fn single_job_delays_add_up() {
        // one hop of 1 s each way, wait 3, service 10
        let s = summarize(&log(vec![job(0, 1, [0.0, 1.0, 4.0, 14.0, 15.0])], &[1], 100.0)).unwrap();
        assert_eq!(s.avg_wait, 3.0);
        assert_eq!(s.avg_execution_delay, 15.0);
        assert_eq!(s.nodes[0].utilization, 0.1);
        assert_eq!(s.censored_jobs, 0);
    }

    #[test]
    fn censoring_and_idle_nodes() {
        let mut late = job(1, 1, [0.0, 1.0, 50.0, 60.0, 61.0]);
        late.t_response_at_ap = None;
        let s = summarize(&log(
            vec![job(0, 1, [0.0, 1.0, 5.0, 6.0, 7.0]), late],
            &[1, 2],
            55.0,
        ))
        .unwrap();
        assert_eq!(s.avg_wait, (4.0 + 49.0) / 2.0);
        assert_eq!(s.nodes[1].mean_wait, 0.0);
        assert_eq!(s.censored_jobs, 1);
        assert!((s.nodes[0].utilization - 6.0 / 55.0).abs() < 1e-15);
        let empty = log(vec![], &[1], 10.0);
        assert_eq!(summarize(&empty), Err(MetricsError::NoCompletedJobs));
    }

    #[test]
    fn t_interval() {
        let ci = mean_ci(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(ci.mean, 2.0);
        // t(0.975, 2) = 4.302653
        assert!((ci.half_width - 4.302_652_729_7 / 3f64.sqrt()).abs() < 1e-6);
        assert!((ci.half_width - 2.484).abs() < 5e-4);
        assert_eq!(mean_ci(&[5.0, 5.0]).unwrap().half_width, 0.0);
        assert_eq!(mean_ci(&[1.0]), Err(MetricsError::TooFewRuns(1)));
    }
}
