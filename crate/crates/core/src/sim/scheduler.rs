use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Message;
use crate::process::{ProcessId, ProcessSet};

/// How the adversary orders deliveries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerSpec {
    /// Oldest message first.
    #[default]
    Fifo,
    /// Uniformly random among undelivered messages.
    Random { seed: u64 },
    /// Phase by phase: deliver, oldest first, messages whose sender and
    /// recipient both lie in the current phase; move on when there are none.
    /// After the last phase everything is delivered oldest first.
    Adversarial { phases: Vec<ProcessSet> },
}

/// One copy of a message on its way to one recipient.
#[derive(Clone, Debug)]
pub(crate) struct InFlight {
    pub from: ProcessId,
    pub to: ProcessId,
    pub message: Arc<Message>,
    pub digest: Arc<str>,
}

pub(crate) enum Scheduler {
    Fifo,
    Random(Box<ChaCha8Rng>),
    Adversarial { phases: Vec<ProcessSet>, current: usize },
}

impl Scheduler {
    pub fn new(spec: &SchedulerSpec) -> Self {
        match spec {
            SchedulerSpec::Fifo => Scheduler::Fifo,
            SchedulerSpec::Random { seed } => Scheduler::Random(Box::new(ChaCha8Rng::seed_from_u64(*seed))),
            SchedulerSpec::Adversarial { phases } => Scheduler::Adversarial {
                phases: phases.clone(),
                current: 0,
            },
        }
    }

    /// Index of the next message to deliver; `queue` must be nonempty.
    pub fn pick(&mut self, queue: &VecDeque<InFlight>) -> usize {
        debug_assert!(!queue.is_empty());
        match self {
            Scheduler::Fifo => 0,
            Scheduler::Random(rng) => rng.gen_range(0..queue.len()),
            Scheduler::Adversarial { phases, current } => {
                while let Some(phase) = phases.get(*current) {
                    if let Some(i) = queue
                        .iter()
                        .position(|m| phase.contains(m.from) && phase.contains(m.to))
                    {
                        return i;
                    }
                    *current += 1;
                }
                0
            }
        }
    }
}
