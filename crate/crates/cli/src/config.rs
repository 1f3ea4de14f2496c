//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! problem = onemax            # or fss
//! islands = 2
//! population_size = 32
//! genome_length = 16          # fss: defaults to the dataset's attribute count
//! max_generations = 100
//! mutation_probability = 0.05
//! elitism = true
//! elite_count = 1
//! seed = 7
//! target = 16                 # optional fitness threshold
//! migration_frequency = 5     # both migration keys enable migration
//! migration_count = 2
//! migration_topology = ring   # or a destination list such as 1,2,0
//! run_dir = runs/onemax       # relative to the config file
//! dataset = train.csv         # fss only, relative to the config file
//! folds = 5
//! train_ratio = 0.6
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use islandga_core::{GaConfig, MigrationPolicyConfig, Topology};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    OneMax,
    Fss {
        dataset: PathBuf,
        folds: usize,
        train_ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ga: GaConfig,
    pub problem: Problem,
    pub target: Option<f64>,
    pub run_dir: Option<PathBuf>,
    /// Whether `genome_length` was given explicitly.
    pub genome_length_set: bool,
}

const KEYS: &[&str] = &[
    "problem",
    "islands",
    "population_size",
    "genome_length",
    "max_generations",
    "mutation_probability",
    "elitism",
    "elite_count",
    "seed",
    "stream_offset",
    "threads",
    "target",
    "migration_frequency",
    "migration_count",
    "migration_topology",
    "run_dir",
    "dataset",
    "folds",
    "train_ratio",
];

struct Entries(BTreeMap<&'static str, String>);

impl Entries {
    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| CliError::Config {
                    field: key,
                    reason: format!("cannot parse `{v}`"),
                })
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let mut entries = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", n + 1)));
        };
        let k = k.trim();
        let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
            return Err(CliError::Usage(format!("config line {}: unknown key `{k}`", n + 1)));
        };
        if entries.insert(key, v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{k}`", n + 1)));
        }
    }
    let e = Entries(entries);
    let defaults = GaConfig::default();

    let problem = match e.or("problem", "onemax".to_string())?.as_str() {
        "onemax" => Problem::OneMax,
        "fss" => {
            let dataset: String = e.get("dataset")?.ok_or(CliError::Config {
                field: "dataset",
                reason: "required for the fss problem".into(),
            })?;
            Problem::Fss {
                dataset: base.join(dataset),
                folds: e.or("folds", islandga_fss::DEFAULT_FOLDS)?,
                train_ratio: e.or("train_ratio", 0.6)?,
            }
        }
        other => {
            return Err(CliError::Config {
                field: "problem",
                reason: format!("unknown problem `{other}` (expected onemax or fss)"),
            })
        }
    };

    let migration = match (
        e.get::<u64>("migration_frequency")?,
        e.get::<usize>("migration_count")?,
    ) {
        (None, None) => None,
        (Some(frequency), Some(migrant_count)) => {
            let topology = match e.get::<String>("migration_topology")?.as_deref() {
                None | Some("ring") => Topology::Ring,
                Some(list) => Topology::Explicit(
                    list.split(',')
                        .map(|d| d.trim().parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| CliError::Config {
                            field: "migration_topology",
                            reason: format!("`{list}` is neither `ring` nor a destination list"),
                        })?,
                ),
            };
            Some(MigrationPolicyConfig {
                frequency,
                migrant_count,
                topology,
            })
        }
        (Some(_), None) => {
            return Err(CliError::Config {
                field: "migration_count",
                reason: "required when migration_frequency is set".into(),
            })
        }
        (None, Some(_)) => {
            return Err(CliError::Config {
                field: "migration_frequency",
                reason: "required when migration_count is set".into(),
            })
        }
    };

    let genome_length = e.get("genome_length")?;
    let ga = GaConfig {
        islands: e.or("islands", defaults.islands)?,
        population_size: e.or("population_size", defaults.population_size)?,
        genome_length: genome_length.unwrap_or(defaults.genome_length),
        max_generations: e.or("max_generations", defaults.max_generations)?,
        mutation_probability: e.or("mutation_probability", defaults.mutation_probability)?,
        elitism_enabled: e.or("elitism", defaults.elitism_enabled)?,
        elite_count: e.or("elite_count", defaults.elite_count)?,
        migration,
        master_seed: e.or("seed", defaults.master_seed)?,
        stream_offset: e.or("stream_offset", defaults.stream_offset)?,
        threads: e.get("threads")?,
    };
    Ok(RunConfig {
        ga,
        problem,
        target: e.get("target")?,
        run_dir: e.get::<String>("run_dir")?.map(|d| base.join(d)),
        genome_length_set: genome_length.is_some(),
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        parse_config(text, Path::new("/cfg"))
    }

    #[test]
    fn minimal_onemax() {
        let c = parse("islands=1\npopulation_size=4\ngenome_length=8\nseed=7\n").unwrap();
        assert_eq!(c.problem, Problem::OneMax);
        assert_eq!((c.ga.islands, c.ga.population_size, c.ga.genome_length, c.ga.master_seed), (1, 4, 8, 7));
        assert!(c.ga.migration.is_none());
        assert!(c.target.is_none());
    }

    #[test]
    fn comments_paths_and_migration() {
        let c = parse(
            "# run\nproblem = fss   # wrapper\ndataset = d.csv\nrun_dir = out\n\
             migration_frequency = 2\nmigration_count = 1\nmigration_topology = 1, 0\ntarget = 0.9\n",
        )
        .unwrap();
        assert_eq!(
            c.problem,
            Problem::Fss { dataset: "/cfg/d.csv".into(), folds: 5, train_ratio: 0.6 }
        );
        assert_eq!(c.run_dir, Some(PathBuf::from("/cfg/out")));
        assert_eq!(c.ga.migration.unwrap().topology, Topology::Explicit(vec![1, 0]));
        assert_eq!(c.target, Some(0.9));
    }

    #[test]
    fn errors_name_fields() {
        assert!(matches!(parse("population_size = many"), Err(CliError::Config { field: "population_size", .. })));
        assert!(matches!(parse("migration_count = 1"), Err(CliError::Config { field: "migration_frequency", .. })));
        assert!(matches!(parse("problem = fss"), Err(CliError::Config { field: "dataset", .. })));
        assert!(matches!(parse("colour = red"), Err(CliError::Usage(_))));
        assert!(matches!(parse("seed = 1\nseed = 2"), Err(CliError::Usage(_))));
        assert!(matches!(parse("seed"), Err(CliError::Usage(_))));
    }
}
