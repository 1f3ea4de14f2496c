//! The loop around the generation jobs: initialise, iterate, stop, migrate
//! and filter solutions. Single-threaded; all parallel work goes through the
//! [`Executor`].

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::executor::{Executor, Record};
use crate::model::{GaConfig, Individual, MigrationPolicyConfig, PopulationSnapshot};
use crate::persistence::{
    read_snapshot, write_flag, write_individuals, write_report, write_snapshot, RunDir,
};
use crate::pipeline::{evaluate_population, run_generation, GenKey, Tagged, TerminationFlag};
use crate::rng::{JobSeeds, Phase};
use crate::scalar::Scalar;
use crate::suite::{OperatorSuite, TerminationCriterion};

pub use crate::persistence::{RunReport, StopReason};

/// Driver bookkeeping between generation jobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub config: GaConfig,
    pub current_generation: u64,
    pub snapshot_path: PathBuf,
    /// Whether the latest generation raised at least one flag.
    pub flags_seen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(StopReason),
}

/// Builds generation 0, or loads it when the run directory already has one.
pub fn initialise<F: Scalar>(
    executor: &Executor,
    config: &GaConfig,
    suite: &OperatorSuite<F>,
    run: &RunDir,
) -> Result<PopulationSnapshot<F>> {
    config.validate()?;
    let path = run.generation(0);
    if path.exists() {
        let snapshot = read_snapshot(&path)?;
        check_loaded(&snapshot, config)?;
        return Ok(snapshot);
    }
    let snapshot = generate_initial(executor, config, suite)?;
    run.create()?;
    write_snapshot(&path, &snapshot, config.master_seed)?;
    Ok(snapshot)
}

/// Generation 0 without touching storage: island `i` is filled by the
/// initialiser from its own stream.
pub fn generate_initial<F: Scalar>(
    executor: &Executor,
    config: &GaConfig,
    suite: &OperatorSuite<F>,
) -> Result<PopulationSnapshot<F>> {
    config.validate()?;
    let seeds = JobSeeds::new(config.master_seed, 0, config.stream_offset)
        .tasks(Phase::Initialise, config.islands);
    let empty = (0..config.islands).map(|_| Vec::new()).collect();
    let initialiser = &*suite.initialiser;
    let (m, r) = (config.genome_length, config.population_size);
    let splits = executor.run_map_tasks(
        Phase::Initialise,
        empty,
        |i, _, rng| {
            let island = initialiser.initialise(m, r, rng)?;
            if island.len() != r || island.iter().any(|ind| ind.genome.len() != m) {
                return Err(Error::contract(format!(
                    "initialiser must return {r} genomes of length {m}"
                )));
            }
            let key = GenKey::Island(crate::model::IslandId(i as u32));
            Ok(island
                .into_iter()
                .map(|ind| Record::new(key, Tagged::parent(ind)))
                .collect())
        },
        &seeds,
    )?;
    let islands = splits
        .into_iter()
        .map(|s| s.into_iter().map(|r| r.value.individual).collect())
        .collect();
    Ok(PopulationSnapshot::new(0, islands))
}

fn check_loaded<F: Scalar>(snapshot: &PopulationSnapshot<F>, config: &GaConfig) -> Result<()> {
    if snapshot.generation != 0 {
        return Err(Error::config(
            "islands",
            format!("initial snapshot is generation {}", snapshot.generation),
        ));
    }
    if snapshot.num_islands() != config.islands {
        return Err(Error::config(
            "islands",
            format!(
                "initial snapshot has {} islands, configuration has {}",
                snapshot.num_islands(),
                config.islands
            ),
        ));
    }
    if snapshot.genome_length() != Some(config.genome_length) {
        return Err(Error::config(
            "genome_length",
            "initial snapshot genome length differs from configuration",
        ));
    }
    if let Some(island) = snapshot.islands.iter().position(|i| i.len() != config.population_size) {
        return Err(Error::config(
            "population_size",
            format!(
                "initial snapshot island {island} holds {} individuals, configuration has {}",
                snapshot.islands[island].len(),
                config.population_size
            ),
        ));
    }
    Ok(())
}

/// Flags win over the generation counter.
pub fn check_termination<F: Scalar>(state: &RunState, flags: &[TerminationFlag<F>]) -> Decision {
    if !flags.is_empty() || state.flags_seen {
        Decision::Stop(StopReason::CriterionSatisfied)
    } else if state.current_generation >= state.config.max_generations {
        Decision::Stop(StopReason::MaxGenerations)
    } else {
        Decision::Continue
    }
}

/// Moves `migrant_count` uniformly chosen individuals out of every island
/// and appends them to the island's destination, in source-island order.
///
/// Island `i` draws from `seeds.task(Phase::Migration, i)`. All picks are
/// made against the input snapshot.
pub fn migrate<F: Scalar>(
    snapshot: &PopulationSnapshot<F>,
    policy: &MigrationPolicyConfig,
    seeds: &JobSeeds,
) -> Result<PopulationSnapshot<F>> {
    let j = snapshot.num_islands();
    let count = policy.migrant_count;
    if let Some((i, island)) = snapshot.islands.iter().enumerate().find(|(_, s)| s.len() < count) {
        return Err(Error::config(
            "migration_count",
            format!("{count} migrants requested from island {i} of size {}", island.len()),
        ));
    }
    if let crate::model::Topology::Explicit(dest) = &policy.topology {
        if dest.len() != j || dest.iter().any(|&d| d >= j) {
            return Err(Error::config("migration_topology", "needs one valid destination per island"));
        }
    }
    if count == 0 {
        return Ok(snapshot.clone());
    }

    let mut staying = Vec::with_capacity(j);
    let mut leaving = Vec::with_capacity(j);
    for (i, island) in snapshot.islands.iter().enumerate() {
        let mut rng = seeds.task(Phase::Migration, i).rng();
        let mut picks = index::sample(&mut rng, island.len(), count).into_vec();
        picks.sort_unstable();
        let mut out = Vec::with_capacity(count);
        let mut keep = Vec::with_capacity(island.len() - count);
        for (k, ind) in island.iter().enumerate() {
            if picks.binary_search(&k).is_ok() {
                out.push(ind.clone());
            } else {
                keep.push(ind.clone());
            }
        }
        staying.push(keep);
        leaving.push(out);
    }
    for (i, migrants) in leaving.into_iter().enumerate() {
        let dest = policy.topology.destination(i, j);
        staying[dest].extend(migrants);
    }
    Ok(PopulationSnapshot::new(snapshot.generation, staying))
}

/// Splits every individual into (satisfying, not satisfying), island order
/// preserved.
pub fn filter_solutions<F: Scalar>(
    snapshot: &PopulationSnapshot<F>,
    criterion: &dyn TerminationCriterion<F>,
) -> Result<(Vec<Individual<F>>, Vec<Individual<F>>)> {
    let mut solutions = Vec::new();
    let mut rest = Vec::new();
    for ind in snapshot.individuals() {
        ind.require_fitness()?;
        if criterion.is_satisfied(ind)? {
            let mut ind = ind.clone();
            ind.is_solution = true;
            solutions.push(ind);
        } else {
            rest.push(ind.clone());
        }
    }
    Ok((solutions, rest))
}

/// Runs the GA to completion inside `run`, persisting every generation.
///
/// Artifacts of an earlier run are removed first, except an existing
/// generation 0 which is reused. A run stopped by the generation limit gets
/// a final fitness pass so that its last snapshot is fully evaluated.
pub fn evolve<F: Scalar>(
    config: &GaConfig,
    suite: &OperatorSuite<F>,
    run: &RunDir,
) -> Result<RunReport<F>> {
    config.validate()?;
    let started = Instant::now();
    let executor = Executor::new(config.threads)?;
    run.create()?;
    run.clear_outputs()?;
    let mut snapshot = initialise(&executor, config, suite, run)?;
    let mut state = RunState {
        config: config.clone(),
        current_generation: 0,
        snapshot_path: run.generation(0),
        flags_seen: false,
    };

    let reason = match check_termination::<F>(&state, &[]) {
        Decision::Stop(r) => r,
        Decision::Continue => loop {
            let outcome = run_generation(&executor, &snapshot, suite, config)?;
            snapshot = outcome.snapshot;
            let g = snapshot.generation;
            state.current_generation = g;
            state.snapshot_path = run.generation(g);
            state.flags_seen = !outcome.flags.is_empty();
            write_snapshot(&state.snapshot_path, &snapshot, config.master_seed)?;
            for flag in &outcome.flags {
                write_flag(&run.flag(g, flag.island), flag, config.master_seed)?;
            }
            if let Decision::Stop(r) = check_termination(&state, &outcome.flags) {
                break r;
            }
            if let Some(policy) = &config.migration {
                if g % policy.frequency == 0 {
                    let seeds = JobSeeds::new(config.master_seed, g, config.stream_offset);
                    snapshot = migrate(&snapshot, policy, &seeds)?;
                    write_snapshot(&state.snapshot_path, &snapshot, config.master_seed)?;
                }
            }
        },
    };

    let mut solutions = None;
    match reason {
        StopReason::CriterionSatisfied => {
            let criterion = suite
                .termination
                .as_deref()
                .ok_or_else(|| Error::contract("flag raised without a termination criterion"))?;
            let (yes, no) = filter_solutions(&snapshot, criterion)?;
            let m = config.genome_length;
            let g = snapshot.generation;
            write_individuals(&run.solutions(), &yes, m, g, config.master_seed)?;
            write_individuals(&run.non_solutions(), &no, m, g, config.master_seed)?;
            solutions = Some(yes.len());
        }
        StopReason::MaxGenerations if state.current_generation > 0 => {
            snapshot = evaluate_population(&executor, &snapshot, suite, config)?;
            write_snapshot(&state.snapshot_path, &snapshot, config.master_seed)?;
        }
        StopReason::MaxGenerations => {}
    }

    let report = RunReport {
        generations: state.current_generation,
        stop_reason: reason,
        best: snapshot.best().cloned(),
        final_snapshot: state.snapshot_path.clone(),
        solutions,
        elapsed: started.elapsed(),
        extra: Vec::new(),
    };
    write_report(&run.report(), &report)?;
    Ok(report)
}
