//! Reproducible per-task random streams.
//!
//! Each task draws from a ChaCha8 generator keyed by the run's master seed and
//! positioned on a stream identified by `(generation, phase, index)`. Streams
//! never overlap, so parallel tasks see the same numbers no matter how they
//! are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed to every operator.
pub type TaskRng = ChaCha8Rng;

const GENERATION_BITS: u32 = 32;
const PHASE_BITS: u32 = 8;
const INDEX_BITS: u32 = 24;

/// Phase tags. The numeric values are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Phase {
    Initialise = 0,
    Fitness = 1,
    TerminationCheck = 2,
    Selection = 3,
    Crossover = 4,
    Mutation = 5,
    Elitism = 6,
    Migration = 7,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Initialise => "initialise",
            Phase::Fitness => "fitness",
            Phase::TerminationCheck => "termination_check",
            Phase::Selection => "selection",
            Phase::Crossover => "crossover",
            Phase::Mutation => "mutation",
            Phase::Elitism => "elitism",
            Phase::Migration => "migration",
        }
    }
}

/// Identity of one task's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskSeed {
    pub master: u64,
    pub generation: u64,
    pub phase: Phase,
    pub index: u32,
}

impl TaskSeed {
    pub fn new(master: u64, generation: u64, phase: Phase, index: u32) -> Self {
        TaskSeed {
            master,
            generation,
            phase,
            index,
        }
    }

    /// Stream id: generation in the high 32 bits, then phase, then index.
    ///
    /// Panics if generation or index exceed their bit budget.
    pub fn stream_id(&self) -> u64 {
        assert!(
            self.generation < 1 << GENERATION_BITS,
            "generation {} exceeds stream budget",
            self.generation
        );
        assert!(
            self.index < 1 << INDEX_BITS,
            "task index {} exceeds stream budget",
            self.index
        );
        (self.generation << (PHASE_BITS + INDEX_BITS))
            | (u64::from(self.phase as u8) << INDEX_BITS)
            | u64::from(self.index)
    }

    pub fn rng(&self) -> TaskRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream_id());
        rng
    }
}

/// Seeds for every task of one job.
///
/// `index_offset` shifts task indices onto different streams, which lets a
/// single-island run replay island `k` of a larger run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobSeeds {
    pub master: u64,
    pub generation: u64,
    pub index_offset: u32,
}

impl JobSeeds {
    pub fn new(master: u64, generation: u64, index_offset: u32) -> Self {
        JobSeeds {
            master,
            generation,
            index_offset,
        }
    }

    pub fn task(&self, phase: Phase, index: usize) -> TaskSeed {
        let index = u32::try_from(index).expect("task index fits u32") + self.index_offset;
        TaskSeed::new(self.master, self.generation, phase, index)
    }

    pub fn tasks(&self, phase: Phase, count: usize) -> Vec<TaskSeed> {
        (0..count).map(|i| self.task(phase, i)).collect()
    }
}
