//! Island-model genetic algorithms whose generation step runs as a chained
//! map-shuffle-reduce job on an embedded executor.
//!
//! The pieces, from the bottom up:
//!
//! - [`executor`]: a single-process chain executor, `(MAP)+ (REDUCE) (MAP)*`
//!   with a keyed shuffle and one seeded random stream per task.
//! - [`pipeline`]: one GA generation as such a chain, one partition per island.
//! - [`driver`]: initialisation, the generation loop, termination, migration
//!   and solution filtering.
//! - [`persistence`]: the binary snapshot and flag formats and the run
//!   directory layout.
//! - [`operators`]: roulette selection, single-point crossover, bit-flip
//!   mutation, best-N elitism and a fitness threshold criterion.
//!
//! Everything is generic over the fitness scalar (`f32` or `f64`).
//!
//! ```
//! use islandga_core::{evolve, GaConfig, OneMax, OperatorSuite, RunDir, FitnessThreshold};
//!
//! let dir = tempfile::tempdir().unwrap();
//! let config = GaConfig { genome_length: 12, max_generations: 50, master_seed: 7, ..GaConfig::default() };
//! let suite = OperatorSuite::standard(&config, OneMax, None).with_termination(FitnessThreshold::new(12.0));
//! let report = evolve(&config, &suite, &RunDir::new(dir.path())).unwrap();
//! assert!(report.generations <= 50);
//! ```

pub mod driver;
pub mod error;
pub mod executor;
pub mod model;
pub mod operators;
pub mod persistence;
pub mod pipeline;
#[cfg(any(test, feature = "oracle"))]
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod suite;

pub use driver::{check_termination, evolve, filter_solutions, initialise, migrate, Decision, RunState};
pub use error::{Error, PersistError, Result};
pub use executor::{default_partition, ChainPlan, Executor, Record, Split};
pub use model::{
    compare_individuals, passthrough, sort_best_first, GaConfig, Genome, Individual, IslandId,
    MigrationPolicyConfig, PopulationSnapshot, Topology,
};
pub use operators::{
    BestNElitism, BitFlipMutation, FitnessThreshold, OffspringOnly, OneMax, RandomBitInitialiser,
    RouletteWheel, SinglePointCrossover,
};
pub use persistence::{read_snapshot, write_report, write_snapshot, RunDir, RunReport, StopReason};
pub use pipeline::{evaluate_population, run_generation, GenerationOutcome, TerminationFlag};
pub use rng::{JobSeeds, Phase, TaskRng, TaskSeed};
pub use scalar::Scalar;
pub use suite::{
    CrossoverOperator, ElitismPolicy, FitnessEvaluator, FnCriterion, FnEvaluator, Initialiser,
    MutationOperator, OperatorSuite, SelectionOperator, TerminationCriterion,
};

pub type Individual32 = Individual<f32>;
pub type Individual64 = Individual<f64>;
pub type Snapshot32 = PopulationSnapshot<f32>;
pub type Snapshot64 = PopulationSnapshot<f64>;
pub type Suite32 = OperatorSuite<f32>;
pub type Suite64 = OperatorSuite<f64>;
