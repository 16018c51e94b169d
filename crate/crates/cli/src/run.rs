//! `tns run` and `tns analyze`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tns_core::monitor::{SerrinMonitor, SpectrumWeightTracker};
use tns_core::{
    init_taylor_green, load_snapshot, random_divfree_field, run, save_snapshot, Observer,
    RunOutcome, RunReport, Snapshot, SolverState,
};

use crate::config::{load_analyze, load_run, InitialConfig, MonitorConfig, Source};
use crate::{create_dir, output_dir, write_file, write_manifest, CliError};

pub const SNAPSHOT_DIR: &str = "snapshots";

/// The monitors a [`MonitorConfig`] asks for.
pub struct Monitors {
    pub serrin: SerrinMonitor,
    pub weights: Option<SpectrumWeightTracker>,
}

impl Monitors {
    pub fn new(cfg: &MonitorConfig) -> Result<Self, CliError> {
        let mut serrin = SerrinMonitor::new(&cfg.cut_levels, &cfg.specs())?.with_stride(cfg.stride)?;
        if cfg.fractional {
            serrin = serrin.with_fractional_series();
        }
        let weights = if cfg.deltas.is_empty() {
            None
        } else {
            Some(
                SpectrumWeightTracker::new(&cfg.deltas, cfg.spectrum_cut_level, cfg.window)?
                    .with_stride(cfg.stride)?,
            )
        };
        Ok(Self { serrin, weights })
    }

    /// Writes the CSV reports and returns their file names.
    pub fn write(&self, dir: &Path, completed: bool) -> Result<Vec<String>, CliError> {
        let rep = self.serrin.report(completed);
        let specs = self.serrin.specs();
        let mut files = Vec::new();
        let mut emit = |name: &str, bytes: Vec<u8>| -> Result<(), CliError> {
            write_file(&dir.join(name), &bytes)?;
            files.push(name.to_string());
            Ok(())
        };
        let mut buf = Vec::new();
        rep.write_series_csv(specs, &mut buf)?;
        emit("serrin_series.csv", std::mem::take(&mut buf))?;
        rep.write_summary_csv(&mut buf)?;
        emit("serrin_summary.csv", std::mem::take(&mut buf))?;
        rep.write_liminf_csv(&mut buf)?;
        emit("liminf.csv", std::mem::take(&mut buf))?;
        rep.write_y_csv(&mut buf)?;
        emit("y_series.csv", std::mem::take(&mut buf))?;
        if let Some(w) = &self.weights {
            w.report().write_csv(&mut buf)?;
            emit("spectrum_weight.csv", std::mem::take(&mut buf))?;
        }
        Ok(files)
    }
}

/// Saves every `stride`-th state as `snapshots/step_NNNNNNNN.tnsf`.
struct SnapshotWriter {
    dir: PathBuf,
    stride: u64,
    last: Option<u64>,
}

impl SnapshotWriter {
    fn save(&mut self, state: &SolverState) -> tns_core::Result<()> {
        let path = self.dir.join(format!("step_{:08}.tnsf", state.step_count));
        save_snapshot(&path, &state.u, state.t)?;
        self.last = Some(state.step_count);
        Ok(())
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &SolverState) -> tns_core::Result<()> {
        if state.step_count % self.stride == 0 {
            self.save(state)?;
        }
        Ok(())
    }
}

fn run_report_text(r: &RunReport) -> String {
    let mut s = String::new();
    match &r.outcome {
        RunOutcome::Completed => s.push_str("outcome: completed\n"),
        RunOutcome::Blowup { time, step, reason } => {
            let _ = writeln!(s, "outcome: blowup");
            let _ = writeln!(s, "blowup_time: {time}");
            let _ = writeln!(s, "blowup_step: {step}");
            let _ = writeln!(s, "blowup_reason: {reason}");
        }
    }
    let _ = writeln!(s, "steps_taken: {}", r.steps_taken);
    let _ = writeln!(s, "final_time: {}", r.state.t);
    let _ = writeln!(s, "energy_initial: {}", r.energy_initial);
    let _ = writeln!(s, "energy_final: {}", r.energy_final);
    let _ = writeln!(s, "dissipation: {}", r.dissipation);
    let _ = writeln!(s, "forcing_work: {}", r.forcing_work);
    let _ = writeln!(s, "energy_residual: {}", r.energy_residual());
    let _ = writeln!(s, "relative_energy_residual: {}", r.relative_energy_residual());
    let _ = writeln!(s, "cfl_violations: {}", r.cfl_violations);
    s
}

/// Runs the solver described by the config at `path`. Returns the run
/// directory.
pub fn cmd_run(path: &Path) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let src = Source::read(path)?;
    let loaded = load_run(&src)?;
    let grid = loaded.grid;
    let u0 = match &loaded.initial {
        InitialConfig::TaylorGreen => init_taylor_green(grid)?.u,
        InitialConfig::Random { exponent, seed } => random_divfree_field(grid, *exponent, *seed),
        InitialConfig::Snapshot { .. } => {
            let p = loaded.initial_path.as_ref().expect("resolved at load");
            let snap = load_snapshot(p)
                .map_err(|e| src.error("initial.path", format!("{}: {e}", p.display())))?;
            if snap.field.grid().modes() != grid.modes() {
                return Err(src
                    .error(
                        "initial.path",
                        format!(
                            "snapshot has {} modes, grid has {}",
                            snap.field.grid().modes(),
                            grid.modes()
                        ),
                    )
                    .into());
            }
            let comps = snap.field.into_components();
            tns_core::SpectralField::from_components(grid, comps)?
        }
    };
    let state = SolverState::new(u0, 0.0)
        .map_err(|e| src.error("initial", format!("initial field rejected: {e}")))?;

    let dir = output_dir(&loaded.config.output.dir);
    log::info!(
        "run: M = {}, dt = {}, t_end = {}, output {}",
        grid.modes(),
        loaded.time.dt,
        loaded.time.t_end,
        dir.display()
    );
    create_dir(&dir)?;
    write_file(&dir.join("config.toml"), src.text.as_bytes())?;
    let mut monitors = Monitors::new(&loaded.config.monitor)?;
    let stride = loaded.config.time.snapshot_stride;
    let mut snaps = if stride > 0 {
        let sd = dir.join(SNAPSHOT_DIR);
        create_dir(&sd)?;
        Some(SnapshotWriter {
            dir: sd,
            stride,
            last: None,
        })
    } else {
        None
    };
    let report = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut monitors.serrin];
        if let Some(w) = monitors.weights.as_mut() {
            observers.push(w);
        }
        if let Some(s) = snaps.as_mut() {
            observers.push(s);
        }
        run(state, &loaded.time, &loaded.forcing, &mut observers)?
    };
    if let Some(s) = snaps.as_mut() {
        if s.last != Some(report.state.step_count) {
            s.save(&report.state)?;
        }
    }
    log::info!(
        "{} steps, relative energy residual {:.3e}",
        report.steps_taken,
        report.relative_energy_residual()
    );
    let completed = report.completed();
    let mut files = monitors.write(&dir, completed)?;
    write_file(&dir.join("report.txt"), run_report_text(&report).as_bytes())?;
    files.push("report.txt".into());
    let outcome = if completed { "completed" } else { "blowup" };
    write_manifest(&dir, "run", path, outcome.into(), started, &files)?;
    match report.outcome {
        RunOutcome::Completed => Ok(dir),
        RunOutcome::Blowup { time, step, reason } => Err(CliError::Blowup(format!(
            "t = {time} (step {step}): {reason}; partial artifacts in {}",
            dir.display()
        ))),
    }
}

/// Recomputes monitor reports from snapshot files, in the given order.
pub fn cmd_analyze(spec_path: &Path, files: &[PathBuf]) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let src = Source::read(spec_path)?;
    let spec = load_analyze(&src)?;
    if files.is_empty() {
        return Err(CliError::Input("analyze: no snapshot files given".into()));
    }
    let mut snaps: Vec<(Snapshot, &PathBuf)> = Vec::with_capacity(files.len());
    for f in files {
        let s = load_snapshot(f).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
        if let Some((first, first_path)) = snaps.first() {
            let (a, b) = (s.field.grid().modes(), first.field.grid().modes());
            if a != b {
                return Err(CliError::Input(format!(
                    "grid mismatch: {} has {a} modes, {} has {b}",
                    f.display(),
                    first_path.display()
                )));
            }
        }
        snaps.push((s, f));
    }
    let mut monitors = Monitors::new(&spec.monitor)?;
    for (s, f) in &snaps {
        log::debug!("analyze: {} at t = {}", f.display(), s.time);
        let record = |m: &mut Monitors| -> tns_core::Result<()> {
            m.serrin.record(s.time, &s.field)?;
            if let Some(w) = m.weights.as_mut() {
                w.record(s.time, &s.field)?;
            }
            Ok(())
        };
        record(&mut monitors).map_err(|e| match e {
            tns_core::Error::NonMonotoneTime { .. } => {
                CliError::Input(format!("{}: {e}; list snapshots in time order", f.display()))
            }
            other => other.into(),
        })?;
    }
    let dir = output_dir(&spec.output.dir);
    create_dir(&dir)?;
    write_file(&dir.join("config.toml"), src.text.as_bytes())?;
    let mut written = monitors.write(&dir, true)?;
    let list: String = files.iter().map(|f| format!("{}\n", f.display())).collect();
    write_file(&dir.join("inputs.txt"), list.as_bytes())?;
    written.push("inputs.txt".into());
    write_manifest(&dir, "analyze", spec_path, "completed".into(), started, &written)?;
    Ok(dir)
}
