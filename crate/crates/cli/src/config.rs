//! Layered run configuration: built-in defaults, then a single TOML file
//! with `[fetch]`, `[detect]`, `[train]`, `[analyze]` sections, then
//! command-line flags. Later layers win. The file is found via `--config`,
//! the `PHOTOSTYLE_CONFIG` environment variable, or `photostyle.toml` in
//! the working directory, in that order.
//!
//! Relative paths inside the file are resolved against the file's own
//! directory, so a fixture directory can carry its config anywhere.
//! Relative paths given as flags stay relative to the working directory.

use crate::CliError;
use photostyle_core::DetectParams;
use serde::Deserialize;
use std::env;
use std::path::{Path, PathBuf};

pub const ENV_CONFIG: &str = "PHOTOSTYLE_CONFIG";
pub const DEFAULT_FILE: &str = "photostyle.toml";

/// Effective settings after all layers are merged.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker cap for stages that fan out; `None` leaves the default.
    pub jobs: Option<usize>,
    pub fetch: FetchSettings,
    pub detect: DetectSettings,
    pub train: TrainSettings,
    pub analyze: AnalyzeSettings,
}

#[derive(Debug, Clone)]
pub struct FetchSettings {
    pub manifest: PathBuf,
    pub corpus_root: PathBuf,
    /// Optional `member_id,is_white` table merged onto the roster; the
    /// legislator manifest itself carries no race coding.
    pub member_race: Option<PathBuf>,
    /// Paginated endpoint template with `{username}` and `{page}` holes.
    /// Unset means ingest only scans what is already on disk.
    pub base_url: Option<String>,
    pub max_photos: usize,
    pub rate_per_sec: f64,
}

#[derive(Debug, Clone)]
pub struct DetectSettings {
    pub cascade: PathBuf,
    pub scale_factor: f64,
    pub step_fraction: f64,
    pub min_size: u32,
    pub overlap_threshold: f64,
    pub min_neighbors: usize,
}

impl DetectSettings {
    pub fn params(&self) -> DetectParams {
        DetectParams {
            scale_factor: self.scale_factor,
            step_fraction: self.step_fraction,
            min_size: self.min_size,
            overlap_threshold: self.overlap_threshold,
            min_neighbors: self.min_neighbors,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainSettings {
    /// External base model for fine-tuning; unset means the artifact
    /// written by `photostyle train` into the output directory.
    pub base_model: Option<PathBuf>,
    pub train_dir: PathBuf,
    pub input_size: u32,
    pub conv_blocks: u32,
    pub conv_channels: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub weight_decay: f64,
    pub train_fraction: f64,
    pub freeze_prefix: usize,
    pub head_classes: usize,
    pub initial_iterations: usize,
    pub bootstrap_iterations: usize,
    pub confidence_threshold: f64,
    pub folds: usize,
}

#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub acs: PathBuf,
    pub responses: PathBuf,
    pub sample_fraction: f64,
    pub exclude_self: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            output_dir: PathBuf::from("out"),
            jobs: None,
            fetch: FetchSettings {
                manifest: PathBuf::from("legislators.txt"),
                corpus_root: PathBuf::from("corpus"),
                member_race: None,
                base_url: None,
                max_photos: 32,
                rate_per_sec: 4.0,
            },
            detect: DetectSettings {
                cascade: PathBuf::from("cascade.txt"),
                scale_factor: 1.1,
                step_fraction: 0.05,
                min_size: 24,
                overlap_threshold: 0.3,
                min_neighbors: 3,
            },
            train: TrainSettings {
                base_model: None,
                train_dir: PathBuf::from("train"),
                input_size: 32,
                conv_blocks: 2,
                conv_channels: 4,
                learning_rate: 0.01,
                momentum: 0.9,
                batch_size: 16,
                iterations: 100,
                weight_decay: 0.0,
                train_fraction: 0.8,
                freeze_prefix: 0,
                head_classes: 4,
                initial_iterations: 100_000,
                bootstrap_iterations: 20_000,
                confidence_threshold: 0.9,
                folds: 5,
            },
            analyze: AnalyzeSettings {
                acs: PathBuf::from("acs.csv"),
                responses: PathBuf::from("responses.csv"),
                sample_fraction: 0.1,
                exclude_self: false,
            },
        }
    }
}

impl Settings {
    /// Range checks for every numeric knob. Bad values are usage errors no
    /// matter which layer supplied them.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        let f = &self.fetch;
        if f.max_photos == 0 {
            return bad("fetch.max_photos must be at least 1".into());
        }
        if !(f.rate_per_sec > 0.0 && f.rate_per_sec.is_finite()) {
            return bad(format!("fetch.rate_per_sec must be positive, got {}", f.rate_per_sec));
        }
        let d = &self.detect;
        if !(d.scale_factor > 1.0 && d.scale_factor.is_finite()) {
            return bad(format!("detect.scale_factor must exceed 1, got {}", d.scale_factor));
        }
        if !(d.step_fraction > 0.0 && d.step_fraction <= 1.0) {
            return bad(format!("detect.step_fraction must lie in (0, 1], got {}", d.step_fraction));
        }
        if d.min_size == 0 {
            return bad("detect.min_size must be at least 1".into());
        }
        if !(d.overlap_threshold > 0.0 && d.overlap_threshold <= 1.0) {
            return bad(format!(
                "detect.overlap_threshold must lie in (0, 1], got {}",
                d.overlap_threshold
            ));
        }
        if d.min_neighbors == 0 {
            return bad("detect.min_neighbors must be at least 1".into());
        }
        let t = &self.train;
        if t.conv_blocks == 0 || t.conv_blocks > 8 {
            return bad(format!("train.conv_blocks must lie in 1..=8, got {}", t.conv_blocks));
        }
        if t.conv_channels == 0 {
            return bad("train.conv_channels must be at least 1".into());
        }
        let shrink = 1u32 << t.conv_blocks;
        if t.input_size < shrink || t.input_size % shrink != 0 {
            return bad(format!(
                "train.input_size must be a multiple of {shrink} (one halving per conv block), got {}",
                t.input_size
            ));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return bad(format!("train.learning_rate must be positive, got {}", t.learning_rate));
        }
        if !(t.momentum >= 0.0 && t.momentum < 1.0) {
            return bad(format!("train.momentum must lie in [0, 1), got {}", t.momentum));
        }
        if t.batch_size == 0 {
            return bad("train.batch_size must be at least 1".into());
        }
        if !(t.weight_decay >= 0.0 && t.weight_decay.is_finite()) {
            return bad(format!("train.weight_decay must be non-negative, got {}", t.weight_decay));
        }
        if !(t.train_fraction > 0.0 && t.train_fraction < 1.0) {
            return bad(format!("train.train_fraction must lie in (0, 1), got {}", t.train_fraction));
        }
        if t.head_classes < 2 {
            return bad(format!("train.head_classes must be at least 2, got {}", t.head_classes));
        }
        if !(t.confidence_threshold > 0.0 && t.confidence_threshold <= 1.0) {
            return bad(format!(
                "train.confidence_threshold must lie in (0, 1], got {}",
                t.confidence_threshold
            ));
        }
        if t.folds == 0 {
            return bad("train.folds must be at least 1".into());
        }
        let a = &self.analyze;
        if !(a.sample_fraction > 0.0 && a.sample_fraction <= 1.0) {
            return bad(format!(
                "analyze.sample_fraction must lie in (0, 1], got {}",
                a.sample_fraction
            ));
        }
        Ok(())
    }

    /// The effective configuration, one `key = value` line per knob, echoed
    /// verbatim into every run report.
    pub fn echo_lines(&self) -> Vec<String> {
        fn opt_path(p: &Option<PathBuf>) -> String {
            p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "(unset)".into())
        }
        let (f, d, t, a) = (&self.fetch, &self.detect, &self.train, &self.analyze);
        vec![
            format!("seed = {}", self.seed),
            format!("output_dir = {}", self.output_dir.display()),
            format!(
                "jobs = {}",
                self.jobs.map(|j| j.to_string()).unwrap_or_else(|| "(default)".into())
            ),
            format!("fetch.manifest = {}", f.manifest.display()),
            format!("fetch.corpus_root = {}", f.corpus_root.display()),
            format!("fetch.member_race = {}", opt_path(&f.member_race)),
            format!("fetch.base_url = {}", f.base_url.as_deref().unwrap_or("(unset)")),
            format!("fetch.max_photos = {}", f.max_photos),
            format!("fetch.rate_per_sec = {}", f.rate_per_sec),
            format!("detect.cascade = {}", d.cascade.display()),
            format!("detect.scale_factor = {}", d.scale_factor),
            format!("detect.step_fraction = {}", d.step_fraction),
            format!("detect.min_size = {}", d.min_size),
            format!("detect.overlap_threshold = {}", d.overlap_threshold),
            format!("detect.min_neighbors = {}", d.min_neighbors),
            format!("train.base_model = {}", opt_path(&t.base_model)),
            format!("train.train_dir = {}", t.train_dir.display()),
            format!("train.input_size = {}", t.input_size),
            format!("train.conv_blocks = {}", t.conv_blocks),
            format!("train.conv_channels = {}", t.conv_channels),
            format!("train.learning_rate = {}", t.learning_rate),
            format!("train.momentum = {}", t.momentum),
            format!("train.batch_size = {}", t.batch_size),
            format!("train.iterations = {}", t.iterations),
            format!("train.weight_decay = {}", t.weight_decay),
            format!("train.train_fraction = {}", t.train_fraction),
            format!("train.freeze_prefix = {}", t.freeze_prefix),
            format!("train.head_classes = {}", t.head_classes),
            format!("train.initial_iterations = {}", t.initial_iterations),
            format!("train.bootstrap_iterations = {}", t.bootstrap_iterations),
            format!("train.confidence_threshold = {}", t.confidence_threshold),
            format!("train.folds = {}", t.folds),
            format!("analyze.acs = {}", a.acs.display()),
            format!("analyze.responses = {}", a.responses.display()),
            format!("analyze.sample_fraction = {}", a.sample_fraction),
            format!("analyze.exclude_self = {}", a.exclude_self),
        ]
    }
}

/// The file layer: every knob optional, unknown keys rejected so a typo
/// fails loudly instead of silently using a default.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    fetch: FetchFile,
    detect: DetectFile,
    train: TrainFile,
    analyze: AnalyzeFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FetchFile {
    manifest: Option<PathBuf>,
    corpus_root: Option<PathBuf>,
    member_race: Option<PathBuf>,
    base_url: Option<String>,
    max_photos: Option<usize>,
    rate_per_sec: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectFile {
    cascade: Option<PathBuf>,
    scale_factor: Option<f64>,
    step_fraction: Option<f64>,
    min_size: Option<u32>,
    overlap_threshold: Option<f64>,
    min_neighbors: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainFile {
    base_model: Option<PathBuf>,
    train_dir: Option<PathBuf>,
    input_size: Option<u32>,
    conv_blocks: Option<u32>,
    conv_channels: Option<usize>,
    learning_rate: Option<f64>,
    momentum: Option<f64>,
    batch_size: Option<usize>,
    iterations: Option<usize>,
    weight_decay: Option<f64>,
    train_fraction: Option<f64>,
    freeze_prefix: Option<usize>,
    head_classes: Option<usize>,
    initial_iterations: Option<usize>,
    bootstrap_iterations: Option<usize>,
    confidence_threshold: Option<f64>,
    folds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalyzeFile {
    acs: Option<PathBuf>,
    responses: Option<PathBuf>,
    sample_fraction: Option<f64>,
    exclude_self: Option<bool>,
}

/// Loads the effective settings and reports which file supplied them, if
/// any. Only the file layer is applied here; flag overrides happen at the
/// call sites that own the flags.
pub fn load(flag: Option<&Path>) -> Result<(Settings, Option<PathBuf>), CliError> {
    let Some(path) = locate(flag) else {
        return Ok((Settings::default(), None));
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Run(format!("cannot read config `{}`: {e}", path.display())))?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok((merge(Settings::default(), file, &base), Some(path)))
}

/// `--config` beats `PHOTOSTYLE_CONFIG`, which beats a `photostyle.toml`
/// sitting in the working directory. No file anywhere means defaults.
fn locate(flag: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = flag {
        return Some(p.to_path_buf());
    }
    if let Some(p) = env::var_os(ENV_CONFIG) {
        if !p.is_empty() {
            return Some(PathBuf::from(p));
        }
    }
    let local = PathBuf::from(DEFAULT_FILE);
    local.is_file().then_some(local)
}

fn merge(mut s: Settings, file: FileConfig, base: &Path) -> Settings {
    // paths written in the file travel with the file
    let anchor = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    if let Some(v) = file.seed {
        s.seed = v;
    }
    if let Some(v) = file.output_dir {
        s.output_dir = anchor(v);
    }
    let f = file.fetch;
    if let Some(v) = f.manifest {
        s.fetch.manifest = anchor(v);
    }
    if let Some(v) = f.corpus_root {
        s.fetch.corpus_root = anchor(v);
    }
    if let Some(v) = f.member_race {
        s.fetch.member_race = Some(anchor(v));
    }
    if let Some(v) = f.base_url {
        s.fetch.base_url = Some(v);
    }
    if let Some(v) = f.max_photos {
        s.fetch.max_photos = v;
    }
    if let Some(v) = f.rate_per_sec {
        s.fetch.rate_per_sec = v;
    }
    let d = file.detect;
    if let Some(v) = d.cascade {
        s.detect.cascade = anchor(v);
    }
    if let Some(v) = d.scale_factor {
        s.detect.scale_factor = v;
    }
    if let Some(v) = d.step_fraction {
        s.detect.step_fraction = v;
    }
    if let Some(v) = d.min_size {
        s.detect.min_size = v;
    }
    if let Some(v) = d.overlap_threshold {
        s.detect.overlap_threshold = v;
    }
    if let Some(v) = d.min_neighbors {
        s.detect.min_neighbors = v;
    }
    let t = file.train;
    if let Some(v) = t.base_model {
        s.train.base_model = Some(anchor(v));
    }
    if let Some(v) = t.train_dir {
        s.train.train_dir = anchor(v);
    }
    if let Some(v) = t.input_size {
        s.train.input_size = v;
    }
    if let Some(v) = t.conv_blocks {
        s.train.conv_blocks = v;
    }
    if let Some(v) = t.conv_channels {
        s.train.conv_channels = v;
    }
    if let Some(v) = t.learning_rate {
        s.train.learning_rate = v;
    }
    if let Some(v) = t.momentum {
        s.train.momentum = v;
    }
    if let Some(v) = t.batch_size {
        s.train.batch_size = v;
    }
    if let Some(v) = t.iterations {
        s.train.iterations = v;
    }
    if let Some(v) = t.weight_decay {
        s.train.weight_decay = v;
    }
    if let Some(v) = t.train_fraction {
        s.train.train_fraction = v;
    }
    if let Some(v) = t.freeze_prefix {
        s.train.freeze_prefix = v;
    }
    if let Some(v) = t.head_classes {
        s.train.head_classes = v;
    }
    if let Some(v) = t.initial_iterations {
        s.train.initial_iterations = v;
    }
    if let Some(v) = t.bootstrap_iterations {
        s.train.bootstrap_iterations = v;
    }
    if let Some(v) = t.confidence_threshold {
        s.train.confidence_threshold = v;
    }
    if let Some(v) = t.folds {
        s.train.folds = v;
    }
    let a = file.analyze;
    if let Some(v) = a.acs {
        s.analyze.acs = anchor(v);
    }
    if let Some(v) = a.responses {
        s.analyze.responses = anchor(v);
    }
    if let Some(v) = a.sample_fraction {
        s.analyze.sample_fraction = v;
    }
    if let Some(v) = a.exclude_self {
        s.analyze.exclude_self = v;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_sane_and_self_consistent() {
        let s = Settings::default();
        assert_eq!(s.seed, 0);
        assert_eq!(s.train.initial_iterations, 100_000);
        assert_eq!(s.train.bootstrap_iterations, 20_000);
        assert_eq!(s.train.confidence_threshold, 0.9);
        assert_eq!(s.analyze.sample_fraction, 0.1);
        s.validate().unwrap();
    }

    #[test]
    fn empty_file_changes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.toml");
        std::fs::write(&path, "").unwrap();
        let (s, _) = load(Some(&path)).unwrap();
        let d = Settings::default();
        assert_eq!(s.seed, d.seed);
        assert_eq!(s.output_dir, d.output_dir);
        assert_eq!(s.train.iterations, d.train.iterations);
    }

    #[test]
    fn file_values_override_defaults_and_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 9\noutput_dir = \"results\"\n\n[detect]\nmin_size = 12\ncascade = \"models/c.txt\"\n\n[train]\nlearning_rate = 0.25\n\n[analyze]\nexclude_self = true\n",
        )
        .unwrap();
        let (s, source) = load(Some(&path)).unwrap();
        assert_eq!(source.as_deref(), Some(path.as_path()));
        assert_eq!(s.seed, 9);
        assert_eq!(s.output_dir, dir.path().join("results"));
        assert_eq!(s.detect.min_size, 12);
        assert_eq!(s.detect.cascade, dir.path().join("models/c.txt"));
        assert_eq!(s.train.learning_rate, 0.25);
        assert!(s.analyze.exclude_self);
        // untouched keys keep their defaults
        assert_eq!(s.detect.scale_factor, 1.1);
        assert_eq!(s.train.batch_size, 16);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[detect]\nmin_szie = 12\n").unwrap();
        let err = load(Some(&path)).unwrap_err();
        match err {
            CliError::Usage(msg) => assert!(msg.contains("min_szie"), "{msg}"),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn missing_explicit_config_is_an_operational_error() {
        let err = load(Some(Path::new("/no/such/file.toml"))).unwrap_err();
        assert!(matches!(err, CliError::Run(_)), "{err:?}");
    }

    #[test]
    fn range_checks_name_the_offending_key() {
        let mut s = Settings::default();
        s.detect.scale_factor = 1.0;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("detect.scale_factor"), "{msg}");

        let mut s = Settings::default();
        s.train.input_size = 30; // not a multiple of 4 with two conv blocks
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("train.input_size"), "{msg}");

        let mut s = Settings::default();
        s.analyze.sample_fraction = 0.0;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("analyze.sample_fraction"), "{msg}");
    }

    #[test]
    fn echo_covers_every_section_once() {
        let lines = Settings::default().echo_lines();
        for prefix in ["seed", "output_dir", "jobs"] {
            assert_eq!(lines.iter().filter(|l| l.starts_with(&format!("{prefix} = "))).count(), 1);
        }
        for section in ["fetch.", "detect.", "train.", "analyze."] {
            assert!(lines.iter().any(|l| l.starts_with(section)), "{section} missing");
        }
        assert!(lines.contains(&"train.initial_iterations = 100000".to_string()));
        assert!(lines.contains(&"fetch.base_url = (unset)".to_string()));
    }
}
