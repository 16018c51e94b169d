//! TOML run, analysis and verification specs.
//!
//! Every validation failure is reported against the line that holds the
//! offending key, or the header of its table when the key is absent.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tns_core::inequality::{piece_exponent_from_s, PartitionCheck};
use tns_core::monitor::SerrinSpec;
use tns_core::{Complex64, ForcingSpec, GridSpec, TimeConfig};

/// A config problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: ", self.file.display(), l)?,
            None => write!(f, "{}: ", self.file.display())?,
        }
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Source text plus its path, used to anchor errors.
pub struct Source {
    pub path: PathBuf,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: path.to_path_buf(),
            line: None,
            field: String::new(),
            message: format!("cannot read: {e}"),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
        })
    }

    pub fn from_text(path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            text: text.into(),
        }
    }

    /// Directory that relative paths inside the file are resolved against.
    pub fn base_dir(&self) -> PathBuf {
        self.path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ConfigError> {
        toml::from_str(&self.text).map_err(|e| {
            let line = e.span().map(|s| line_of(&self.text, s.start));
            ConfigError {
                file: self.path.clone(),
                line,
                field: line.map(|l| field_at(&self.text, l)).unwrap_or_default(),
                message: e.message().trim().to_string(),
            }
        })
    }

    /// Error for `field`, a dotted path such as `time.dt` or
    /// `monitor.serrin[1].q`.
    pub fn error(&self, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.path.clone(),
            line: locate(&self.text, field),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Dotted name of the key on line `line`, or of the table it opens.
fn field_at(text: &str, line: usize) -> String {
    let mut table = "";
    for (i, l) in text.lines().enumerate() {
        if let Some((name, _)) = header_name(l) {
            table = name;
        }
        if i + 1 == line {
            return match key_of(l) {
                Some(k) if table.is_empty() => k.to_string(),
                Some(k) => format!("{table}.{k}"),
                None => table.to_string(),
            };
        }
    }
    String::new()
}

fn header_name(line: &str) -> Option<(&str, bool)> {
    let t = line.trim();
    if let Some(rest) = t.strip_prefix("[[") {
        return rest.split("]]").next().map(|n| (n.trim(), true));
    }
    if let Some(rest) = t.strip_prefix('[') {
        return rest.split(']').next().map(|n| (n.trim(), false));
    }
    None
}

fn key_of(line: &str) -> Option<&str> {
    let t = line.trim();
    if t.starts_with('#') || t.starts_with('[') {
        return None;
    }
    t.split_once('=').map(|(k, _)| k.trim().trim_matches('"'))
}

/// Line of `table.key` (with an optional `[index]` on the table for arrays
/// of tables); falls back to the table header, then to any `key =` line.
fn locate(text: &str, field: &str) -> Option<usize> {
    let (table, key) = match field.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", field),
    };
    let (table, index) = match table.split_once('[') {
        Some((t, rest)) => (t, rest.trim_end_matches(']').parse::<usize>().ok()),
        None => (table, None),
    };
    let key = key.split('[').next().unwrap_or(key);
    let mut current = String::new();
    let mut seen = 0usize;
    let mut header_line = None;
    let mut any_key = None;
    for (i, line) in text.lines().enumerate() {
        if let Some((name, array)) = header_name(line) {
            current = name.to_string();
            if name == table {
                let wanted = match (array, index) {
                    (true, Some(n)) => {
                        seen += 1;
                        seen == n + 1
                    }
                    _ => true,
                };
                current = if wanted { name.to_string() } else { String::new() };
                if wanted && header_line.is_none() {
                    header_line = Some(i + 1);
                }
            }
            continue;
        }
        if let Some(k) = key_of(line) {
            if k == key && current == table {
                return Some(i + 1);
            }
            if k == key && any_key.is_none() {
                any_key = Some(i + 1);
            }
            // inline table or array under the parent key
            if current == table.rsplit_once('.').map_or("", |p| p.0)
                && Some(k) == table.rsplit('.').next()
                && header_line.is_none()
            {
                header_line = Some(i + 1);
            }
        }
    }
    header_line.or(any_key)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub modes: usize,
    pub viscosity: f64,
    pub dealias_fraction: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between snapshots; 0 writes none.
    #[serde(default)]
    pub snapshot_stride: u64,
    #[serde(default = "default_cfl")]
    pub cfl_limit: f64,
}

fn default_cfl() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    TaylorGreen,
    Random { exponent: f64, seed: u64 },
    Snapshot { path: PathBuf },
}

/// `[initial]` as written; `kind` selects which other keys apply.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: String,
    pub exponent: Option<f64>,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
}

impl InitialSection {
    fn resolve(&self, src: &Source) -> Result<InitialConfig, ConfigError> {
        let unused = |key: &str, present: bool| -> Result<(), ConfigError> {
            if present {
                Err(src.error(
                    &format!("initial.{key}"),
                    format!("not used by kind = \"{}\"", self.kind),
                ))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "taylor_green" => {
                unused("exponent", self.exponent.is_some())?;
                unused("seed", self.seed.is_some())?;
                unused("path", self.path.is_some())?;
                Ok(InitialConfig::TaylorGreen)
            }
            "random" => {
                unused("path", self.path.is_some())?;
                let exponent = self
                    .exponent
                    .ok_or_else(|| src.error("initial.exponent", "required for kind = \"random\""))?;
                let seed = self
                    .seed
                    .ok_or_else(|| src.error("initial.seed", "required for kind = \"random\""))?;
                Ok(InitialConfig::Random { exponent, seed })
            }
            "snapshot" => {
                unused("exponent", self.exponent.is_some())?;
                unused("seed", self.seed.is_some())?;
                let path = self
                    .path
                    .clone()
                    .ok_or_else(|| src.error("initial.path", "required for kind = \"snapshot\""))?;
                Ok(InitialConfig::Snapshot { path })
            }
            other => Err(src.error(
                "initial.kind",
                format!("unknown kind `{other}`, expected taylor_green, random or snapshot"),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub k: [i64; 3],
    #[serde(default)]
    pub re: [f64; 3],
    #[serde(default)]
    pub im: [f64; 3],
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default)]
    pub modes: Vec<ForcingMode>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SerrinEntry {
    pub q: f64,
    pub r: f64,
    #[serde(default)]
    pub gradient: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(default = "default_cut_levels")]
    pub cut_levels: Vec<u32>,
    #[serde(default = "default_serrin")]
    pub serrin: Vec<SerrinEntry>,
    /// Exponents for the weighted spectrum tracker; empty disables it.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "one_u32")]
    pub spectrum_cut_level: u32,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "one_u64")]
    pub stride: u64,
    #[serde(default)]
    pub fractional: bool,
}

fn default_cut_levels() -> Vec<u32> {
    vec![1, 2, 4, 8]
}

fn default_serrin() -> Vec<SerrinEntry> {
    vec![SerrinEntry {
        q: 3.0,
        r: f64::INFINITY,
        gradient: false,
    }]
}

fn one_u32() -> u32 {
    1
}

fn one_u64() -> u64 {
    1
}

fn default_window() -> usize {
    10
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            cut_levels: default_cut_levels(),
            serrin: default_serrin(),
            deltas: Vec::new(),
            spectrum_cut_level: 1,
            window: default_window(),
            stride: 1,
            fractional: false,
        }
    }
}

impl MonitorConfig {
    pub fn specs(&self) -> Vec<SerrinSpec> {
        self.serrin
            .iter()
            .map(|e| SerrinSpec {
                q: e.q,
                r: e.r,
                gradient_form: e.gradient,
            })
            .collect()
    }

    fn validate(&self, src: &Source) -> Result<(), ConfigError> {
        if self.cut_levels.is_empty() {
            return Err(src.error("monitor.cut_levels", "at least one cut level is required"));
        }
        if self.cut_levels[0] == 0 || self.cut_levels.windows(2).any(|p| p[0] >= p[1]) {
            return Err(src.error(
                "monitor.cut_levels",
                "cut levels must be positive and strictly increasing",
            ));
        }
        if self.serrin.is_empty() {
            return Err(src.error("monitor.serrin", "at least one (q, r) pair is required"));
        }
        for (i, e) in self.serrin.iter().enumerate() {
            if !(e.q > 1.0) {
                return Err(src.error(
                    &format!("monitor.serrin[{i}].q"),
                    format!("q must exceed 1, got {}", e.q),
                ));
            }
            if !(e.r >= 1.0) {
                return Err(src.error(
                    &format!("monitor.serrin[{i}].r"),
                    format!("r must be at least 1, got {}", e.r),
                ));
            }
        }
        for &d in &self.deltas {
            if !(d > 2.0 && d.is_finite()) {
                return Err(src.error("monitor.deltas", format!("each delta must exceed 2, got {d}")));
            }
        }
        if self.spectrum_cut_level == 0 {
            return Err(src.error("monitor.spectrum_cut_level", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(src.error("monitor.window", "must be at least 1"));
        }
        if self.stride == 0 {
            return Err(src.error("monitor.stride", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl OutputConfig {
    fn validate(&self, src: &Source) -> Result<(), ConfigError> {
        if self.dir.as_os_str().is_empty() {
            return Err(src.error("output.dir", "must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub time: TimeSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    pub output: OutputConfig,
}

/// A run config with every derived object already built.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub config: RunConfig,
    pub initial: InitialConfig,
    pub grid: GridSpec,
    pub time: TimeConfig,
    pub forcing: ForcingSpec,
    /// Initial snapshot resolved against the config's directory.
    pub initial_path: Option<PathBuf>,
}

pub fn load_run(src: &Source) -> Result<LoadedRun, ConfigError> {
    let config: RunConfig = src.parse()?;
    let g = &config.grid;
    if g.modes < 4 || g.modes % 2 != 0 {
        return Err(src.error(
            "grid.modes",
            format!("must be even and at least 4, got {}", g.modes),
        ));
    }
    if !(g.viscosity > 0.0 && g.viscosity.is_finite()) {
        return Err(src.error(
            "grid.viscosity",
            format!("must be positive and finite, got {}", g.viscosity),
        ));
    }
    if let Some(f) = g.dealias_fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(src.error(
                "grid.dealias_fraction",
                format!("must lie in (0, 1], got {f}"),
            ));
        }
    }
    let fraction = g.dealias_fraction.unwrap_or(tns_core::grid::TWO_THIRDS);
    let grid = GridSpec::with_dealias(g.modes, g.viscosity, fraction)
        .map_err(|e| src.error("grid", e.to_string()))?;

    let t = &config.time;
    if !(t.dt > 0.0 && t.dt.is_finite()) {
        return Err(src.error("time.dt", format!("must be positive and finite, got {}", t.dt)));
    }
    if !(t.t_end > 0.0 && t.t_end.is_finite()) {
        return Err(src.error(
            "time.t_end",
            format!("must be positive and finite, got {}", t.t_end),
        ));
    }
    if t.dt > t.t_end {
        return Err(src.error(
            "time.dt",
            format!("exceeds t_end ({} > {})", t.dt, t.t_end),
        ));
    }
    if !(t.cfl_limit > 0.0 && t.cfl_limit.is_finite()) {
        return Err(src.error(
            "time.cfl_limit",
            format!("must be positive and finite, got {}", t.cfl_limit),
        ));
    }
    let time = TimeConfig::new(t.dt, t.t_end, t.cfl_limit).map_err(|e| src.error("time", e.to_string()))?;

    let initial = config.initial.resolve(src)?;
    let initial_path = match &initial {
        InitialConfig::TaylorGreen => {
            if grid.modes() < 4 {
                return Err(src.error("initial.kind", "taylor_green needs at least 4 modes"));
            }
            None
        }
        InitialConfig::Random { exponent, .. } => {
            if !exponent.is_finite() {
                return Err(src.error(
                    "initial.exponent",
                    format!("must be finite, got {exponent}"),
                ));
            }
            None
        }
        InitialConfig::Snapshot { path } => {
            let p = src.base_dir().join(path);
            if !p.is_file() {
                return Err(src.error(
                    "initial.path",
                    format!("snapshot {} does not exist", p.display()),
                ));
            }
            Some(p)
        }
    };

    let forcing = if config.forcing.modes.is_empty() {
        ForcingSpec::Zero
    } else {
        ForcingSpec::Modes(
            config
                .forcing
                .modes
                .iter()
                .map(|m| {
                    (
                        m.k,
                        std::array::from_fn(|j| Complex64::new(m.re[j], m.im[j])),
                    )
                })
                .collect(),
        )
    };
    forcing
        .field(grid)
        .map_err(|e| src.error("forcing.modes", e.to_string()))?;

    config.monitor.validate(src)?;
    config.output.validate(src)?;
    Ok(LoadedRun {
        config,
        initial,
        grid,
        time,
        forcing,
        initial_path,
    })
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSpec {
    #[serde(default)]
    pub monitor: MonitorConfig,
    pub output: OutputConfig,
}

pub fn load_analyze(src: &Source) -> Result<AnalyzeSpec, ConfigError> {
    let spec: AnalyzeSpec = src.parse()?;
    spec.monitor.validate(src)?;
    spec.output.validate(src)?;
    Ok(spec)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingEntry {
    pub dim: usize,
    pub q: f64,
    /// One resolution, or two for the doubling stability check.
    pub modes: Vec<usize>,
    #[serde(default = "default_stability")]
    pub tolerance: f64,
}

fn default_stability() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartitionEntry {
    /// `piece-sobolev` or `low-mode-interpolation`.
    pub check: String,
    #[serde(default = "one_usize")]
    pub component: usize,
    pub q: Option<f64>,
    /// Alternative to `q` for `piece-sobolev`: `1/q = 1/2 - s`.
    pub s: Option<f64>,
    pub cut_levels: Vec<u32>,
    pub modes: usize,
    #[serde(default = "default_growth")]
    pub growth_tolerance: f64,
}

fn one_usize() -> usize {
    1
}

fn default_growth() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub seed: u64,
    pub samples: usize,
    #[serde(default)]
    pub embedding: Vec<EmbeddingEntry>,
    #[serde(default)]
    pub partition: Vec<PartitionEntry>,
    pub output: OutputConfig,
}

/// A partition entry turned into a core check.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub check: PartitionCheck,
    pub cut_levels: Vec<u32>,
    pub modes: usize,
    pub growth_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct LoadedVerify {
    pub spec: VerifySpec,
    pub partitions: Vec<PartitionPlan>,
}

fn check_modes(src: &Source, field: &str, m: usize) -> Result<(), ConfigError> {
    if m < 4 || m % 2 != 0 {
        return Err(src.error(field, format!("must be even and at least 4, got {m}")));
    }
    Ok(())
}

pub fn load_verify(src: &Source) -> Result<LoadedVerify, ConfigError> {
    let spec: VerifySpec = src.parse()?;
    if spec.samples == 0 {
        return Err(src.error("samples", "must be at least 1"));
    }
    if spec.embedding.is_empty() && spec.partition.is_empty() {
        return Err(src.error("", "no [[embedding]] or [[partition]] checks requested"));
    }
    for (i, e) in spec.embedding.iter().enumerate() {
        let at = |k: &str| format!("embedding[{i}].{k}");
        if !(e.dim == 2 || e.dim == 3) {
            return Err(src.error(&at("dim"), format!("must be 2 or 3, got {}", e.dim)));
        }
        tns_core::inequality::embedding_exponent(e.dim, e.q)
            .map_err(|err| src.error(&at("q"), err.to_string()))?;
        if e.modes.is_empty() || e.modes.len() > 2 {
            return Err(src.error(&at("modes"), "give one or two resolutions"));
        }
        for &m in &e.modes {
            check_modes(src, &at("modes"), m)?;
        }
        if !(e.tolerance >= 0.0) {
            return Err(src.error(&at("tolerance"), "must be nonnegative"));
        }
    }
    let mut partitions = Vec::new();
    for (i, p) in spec.partition.iter().enumerate() {
        let at = |k: &str| format!("partition[{i}].{k}");
        let check = match p.check.as_str() {
            "piece-sobolev" => {
                let q = match (p.q, p.s) {
                    (Some(_), Some(_)) => {
                        return Err(src.error(&at("s"), "give either q or s, not both"));
                    }
                    (Some(q), None) => q,
                    (None, Some(s)) => {
                        piece_exponent_from_s(s).map_err(|e| src.error(&at("s"), e.to_string()))?
                    }
                    (None, None) => return Err(src.error(&at("q"), "q or s is required")),
                };
                PartitionCheck::PieceSobolev {
                    component: p.component,
                    q,
                }
            }
            "low-mode-interpolation" => {
                if p.s.is_some() {
                    return Err(src.error(&at("s"), "only piece-sobolev takes s"));
                }
                PartitionCheck::LowModeInterpolation {
                    q: p.q.ok_or_else(|| src.error(&at("q"), "q is required"))?,
                }
            }
            other => {
                return Err(src.error(
                    &at("check"),
                    format!("unknown check `{other}`, expected piece-sobolev or low-mode-interpolation"),
                ));
            }
        };
        check.validate().map_err(|e| {
            let field = match e {
                tns_core::Error::InvalidParameter { name: "component", .. } => "component",
                _ if p.s.is_some() => "s",
                _ => "q",
            };
            src.error(&at(field), e.to_string())
        })?;
        if p.cut_levels.is_empty() || p.cut_levels[0] == 0 || p.cut_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(src.error(
                &at("cut_levels"),
                "must be nonempty, positive and strictly increasing",
            ));
        }
        check_modes(src, &at("modes"), p.modes)?;
        if !(p.growth_tolerance >= 0.0) {
            return Err(src.error(&at("growth_tolerance"), "must be nonnegative"));
        }
        partitions.push(PartitionPlan {
            check,
            cut_levels: p.cut_levels.clone(),
            modes: p.modes,
            growth_tolerance: p.growth_tolerance,
        });
    }
    spec.output.validate(src)?;
    Ok(LoadedVerify { spec, partitions })
}
