//! `tns verify`: sampling checks of the embedding inequalities.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tns_core::inequality::{growth_over_cut_levels, write_inequality_csv};
use tns_core::{verify_fractional_embedding, verify_partition, InequalityReport};

use crate::config::{load_verify, LoadedVerify, Source};
use crate::{create_dir, output_dir, write_file, write_manifest, CliError};

pub const SUMMARY_HEADER: &str = "check,statistic,value,limit,passed";

/// One stability assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    /// Inequality id plus the parameters that distinguish it.
    pub check: String,
    pub statistic: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Assertion {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.limit
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub reports: Vec<InequalityReport>,
    pub assertions: Vec<Assertion>,
}

impl VerifyOutcome {
    pub fn failures(&self) -> Vec<String> {
        self.assertions
            .iter()
            .filter(|a| !a.passed())
            .map(|a| a.check.clone())
            .collect()
    }
}

/// Runs every check of a loaded spec without writing anything.
pub fn evaluate(v: &LoadedVerify) -> Result<VerifyOutcome, CliError> {
    let spec = &v.spec;
    let mut reports = Vec::new();
    let mut assertions = Vec::new();
    for e in &spec.embedding {
        let mut maxima = Vec::new();
        for &m in &e.modes {
            log::info!("fractional-embedding: dim = {}, q = {}, M = {m}", e.dim, e.q);
            let r = verify_fractional_embedding(e.dim, e.q, spec.samples, spec.seed, m)?;
            maxima.push(r.max_ratio);
            reports.push(r);
        }
        let name = format!("fractional-embedding(dim={},q={})", e.dim, e.q);
        assertions.push(Assertion {
            check: name.clone(),
            statistic: "max_ratio",
            value: maxima.iter().fold(0.0, |a: f64, &b| a.max(b)),
            limit: f64::INFINITY,
        });
        if let [a, b] = maxima[..] {
            assertions.push(Assertion {
                check: name,
                statistic: "resolution_change",
                value: (a / b).max(b / a) - 1.0,
                limit: e.tolerance,
            });
        }
    }
    // plans sharing resolution and cut levels share their random fields
    let mut groups: Vec<(usize, Vec<u32>, Vec<usize>)> = Vec::new();
    for (i, p) in v.partitions.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(m, c, _)| *m == p.modes && *c == p.cut_levels)
        {
            Some(g) => g.2.push(i),
            None => groups.push((p.modes, p.cut_levels.clone(), vec![i])),
        }
    }
    let mut partition_reports: Vec<Option<Vec<InequalityReport>>> = vec![None; v.partitions.len()];
    for (m, cuts, members) in &groups {
        let checks: Vec<_> = members.iter().map(|&i| v.partitions[i].check).collect();
        log::info!("partition checks at M = {m}, cut levels {cuts:?}");
        let all = verify_partition(&checks, cuts, spec.samples, spec.seed, *m)?;
        for (chunk, &i) in all.chunks(cuts.len()).zip(members) {
            partition_reports[i] = Some(chunk.to_vec());
        }
    }
    for (plan, reps) in v.partitions.iter().zip(partition_reports) {
        let reps = reps.expect("every plan evaluated");
        let first = &reps[0];
        let mut name = format!("{}(q={}", first.id, first.params.q);
        if let Some(c) = first.params.component {
            let _ = write!(name, ",component={c}");
        }
        let _ = write!(name, ",modes={})", plan.modes);
        assertions.push(Assertion {
            check: name.clone(),
            statistic: "max_ratio",
            value: reps.iter().fold(0.0, |a: f64, r| a.max(r.max_ratio)),
            limit: f64::INFINITY,
        });
        assertions.push(Assertion {
            check: name,
            statistic: "growth_over_cut_levels",
            value: growth_over_cut_levels(&reps) - 1.0,
            limit: plan.growth_tolerance,
        });
        reports.extend(reps);
    }
    Ok(VerifyOutcome {
        reports,
        assertions,
    })
}

pub fn write_summary_csv(assertions: &[Assertion]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for a in assertions {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            a.check,
            a.statistic,
            a.value,
            a.limit,
            a.passed()
        );
    }
    s
}

/// Runs the checks of the spec at `path` and writes `inequality.csv` and
/// `verify_summary.csv`. Fails with status 4 when an assertion fails.
pub fn cmd_verify(path: &Path) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let src = Source::read(path)?;
    let loaded = load_verify(&src)?;
    let outcome = evaluate(&loaded)?;
    let dir = output_dir(&loaded.spec.output.dir);
    create_dir(&dir)?;
    write_file(&dir.join("config.toml"), src.text.as_bytes())?;
    let mut csv = Vec::new();
    write_inequality_csv(&outcome.reports, &mut csv)?;
    write_file(&dir.join("inequality.csv"), &csv)?;
    write_file(
        &dir.join("verify_summary.csv"),
        write_summary_csv(&outcome.assertions).as_bytes(),
    )?;
    let failures = outcome.failures();
    let outcome_word = if failures.is_empty() { "passed" } else { "failed" };
    let files = ["inequality.csv".to_string(), "verify_summary.csv".to_string()];
    write_manifest(&dir, "verify", path, outcome_word.into(), started, &files)?;
    if failures.is_empty() {
        Ok(dir)
    } else {
        let mut ids = failures;
        ids.dedup();
        Err(CliError::Verification(ids))
    }
}
