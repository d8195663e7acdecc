//! Problem files, the corpus runner, and report records behind the `symred`
//! binary.

pub mod problem;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

use symred_core::exec;
use symred_core::expr::Config;

use problem::{LoadError, ProblemFile};
use report::Record;

/// `*.prob` files in `dir`, sorted by name.
pub fn problem_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "prob"))
        .collect();
    out.sort();
    Ok(out)
}

pub struct CorpusRun {
    pub records: Vec<Record>,
    pub load_errors: Vec<LoadError>,
}

/// Load every problem in `dir` whose id or file stem contains `filter`, run
/// them (in parallel when the config allows), and return records ordered by
/// problem id and check index.
pub fn run_corpus(dir: &Path, filter: Option<&str>, cfg: &Config, timing: bool) -> std::io::Result<CorpusRun> {
    let mut problems = Vec::new();
    let mut load_errors = Vec::new();
    for path in problem_files(dir)? {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match ProblemFile::load(&path) {
            Ok(p) => {
                if filter.is_none_or(|f| p.id.contains(f) || stem.contains(f)) {
                    problems.push(p);
                }
            }
            Err(e) => {
                if filter.is_none_or(|f| stem.contains(f)) {
                    load_errors.push(e);
                }
            }
        }
    }
    problems.sort_by(|a, b| a.id.cmp(&b.id));
    let per_problem = exec::map(cfg.exec, &problems, |p| runner::run_problem(p, cfg, timing));
    Ok(CorpusRun {
        records: per_problem.into_iter().flatten().collect(),
        load_errors,
    })
}
