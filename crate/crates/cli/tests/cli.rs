use std::path::Path;
use std::process::{Command, Output};

fn islandga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_islandga"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn init_creates_generation_zero_and_guards_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", "islands=1\npopulation_size=4\ngenome_length=8\nseed=7\nrun_dir=run\n");
    let out = islandga(&["init", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let gen0 = dir.path().join("run/generations/gen-000000.pop");
    assert!(gen0.exists());
    assert!(stdout(&out).contains("gen-000000.pop"));
    let first = std::fs::read(&gen0).unwrap();

    let again = islandga(&["init", "--config", &cfg]);
    assert_eq!(again.status.code(), Some(2));
    let forced = islandga(&["init", "--config", &cfg, "--force"]);
    assert!(forced.status.success());
    assert_eq!(std::fs::read(&gen0).unwrap(), first);
}

#[test]
fn zero_population_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", "population_size=0\n");
    let out = islandga(&["init", "--config", &cfg, "--run-dir", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("population_size"), "{}", stderr(&out));
}

#[test]
fn onemax_run_filter_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.conf",
        "problem=onemax\nislands=1\npopulation_size=32\ngenome_length=16\nmax_generations=100\n\
         mutation_probability=0.05\nelite_count=1\nseed=3\ntarget=16\nrun_dir=run\n",
    );
    let out = islandga(&["run", "--config", &cfg, "--threads", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("stop_reason=criterion_satisfied"), "{report}");
    assert!(report.contains("best_fitness=16\n"), "{report}");
    let run = dir.path().join("run");
    let solutions = std::fs::metadata(run.join("solutions.pop")).unwrap().len();
    assert!(solutions > 40, "solutions file holds records");

    let refused = islandga(&["run", "--config", &cfg]);
    assert_eq!(refused.status.code(), Some(2));

    let run_s = run.to_str().unwrap();
    let all = islandga(&["filter", "--run-dir", run_s, "--threshold", "-1"]);
    assert!(stdout(&all).contains("non_solutions\t0\n"), "{}", stdout(&all));
    let none = islandga(&["filter", "--run-dir", run_s, "--threshold", "17"]);
    assert!(stdout(&none).contains("solutions\t0\n"));
    let best = islandga(&["filter", "--run-dir", run_s, "--threshold", "16"]);
    assert!(!stdout(&best).contains("\nsolutions\t0\n"));

    let stats = islandga(&["stats", "--run-dir", run_s]);
    assert!(stats.status.success());
    let text = stdout(&stats);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    let gens = std::fs::read_dir(run.join("generations")).unwrap().count();
    assert_eq!(rows.len(), gens);
    let gen0: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(gen0[0], "0");
    assert_eq!((gen0[3], gen0[4]), ("-", "-"));
    assert_eq!(stdout(&islandga(&["stats", "--run-dir", run_s])), text);
}

#[test]
fn fss_without_target_runs_to_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,c,class\n");
    for i in 0..40 {
        let a = i % 4;
        csv.push_str(&format!("{a},{},{},{}\n", (i * 7) % 5, if i % 3 == 0 { "u" } else { "v" }, if a < 2 { "lo" } else { "hi" }));
    }
    write(dir.path(), "data.csv", &csv);
    let cfg = write(
        dir.path(),
        "c.conf",
        "problem=fss\ndataset=data.csv\nfolds=4\ntrain_ratio=0.75\npopulation_size=6\nmax_generations=3\nseed=1\nrun_dir=run\n",
    );
    let out = islandga(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("stop_reason=max_generations\ngenerations=3\n"), "{report}");
    assert!(report.contains("test_accuracy="));
    assert!(!dir.path().join("run/solutions.pop").exists());
}

#[test]
fn missing_dataset_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", "problem=fss\ndataset=nowhere.csv\nrun_dir=run\n");
    let out = islandga(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere.csv"));
}

#[test]
fn empty_run_dir_stats_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = islandga(&["stats", "--run-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = islandga(&["filter", "--run-dir", dir.path().to_str().unwrap(), "--threshold", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn phase_errors_exit_four_with_context() {
    let dir = tempfile::tempdir().unwrap();
    // one-bit genomes cannot be crossed at a single point
    let cfg = write(dir.path(), "c.conf", "genome_length=1\npopulation_size=4\nmax_generations=2\nrun_dir=run\n");
    let out = islandga(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    let err = stderr(&out);
    assert!(err.contains("generation 1") && err.contains("crossover"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(islandga(&["run"]).status.code(), Some(2));
    assert_eq!(islandga(&["bogus"]).status.code(), Some(2));
}
