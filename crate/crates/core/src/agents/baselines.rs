use rand::Rng;

use super::{FogObs, PolicyKind};

/// Estimated completion time of a job at a fog node: transfer delay plus
/// the observed backlog and the job itself at the node's speed.
pub fn eta(path_delay: f64, backlog: f64, instructions: f64, ipt: f64) -> f64 {
    path_delay + (backlog + instructions) / ipt
}

/// Non-learning selection rules. Pointers and nearest choices are kept
/// per AP.
#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    pub kind: PolicyKind,
    drr: Vec<usize>,
}

impl BaselinePolicy {
    pub fn new(kind: PolicyKind, n_aps: usize) -> Self {
        assert!(!kind.is_learning(), "{kind:?} is not a baseline");
        Self {
            kind,
            drr: vec![0; n_aps],
        }
    }

    /// Returns an index into `candidates`. `path_delay(i)` is the transfer
    /// delay to candidate `i`; `ipt(i)` its speed.
    #[allow(clippy::too_many_arguments)]
    pub fn select<R: Rng + ?Sized>(
        &mut self,
        ap_pos: usize,
        candidates: &[usize],
        view: &[FogObs],
        instructions: f64,
        path_delay: impl Fn(usize) -> f64,
        ipt: impl Fn(usize) -> f64,
        rng: &mut R,
    ) -> usize {
        assert!(!candidates.is_empty());
        match self.kind {
            PolicyKind::Random => rng.random_range(0..candidates.len()),
            PolicyKind::Drr => {
                let p = &mut self.drr[ap_pos];
                let i = *p % candidates.len();
                *p = (i + 1) % candidates.len();
                i
            }
            PolicyKind::Nearest => argmin_by_id(candidates, |i| path_delay(i)),
            PolicyKind::Fastest => argmin_by_id(candidates, |i| {
                eta(path_delay(i), view[candidates[i]].backlog, instructions, ipt(i))
            }),
            PolicyKind::Drl | PolicyKind::Crl => unreachable!(),
        }
    }
}

/// Index of the smallest score; ties go to the lowest node id.
fn argmin_by_id(candidates: &[usize], score: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_score = score(0);
    for i in 1..candidates.len() {
        let s = score(i);
        if s < best_score || (s == best_score && candidates[i] < candidates[best]) {
            best = i;
            best_score = s;
        }
    }
    best
}
