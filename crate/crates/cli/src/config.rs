//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use kdv5::flows::{FlowKind, FlowSpec, IntegratorConfig};
use kdv5::initial;
use kdv5::schrodinger::{GreenConfig, GreenRoute};
use kdv5::spectral::{Field, Grid};
use serde::Deserialize;

use crate::error::CliError;
use crate::studies::Study;

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "KDV5_OUTPUT_DIR";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub study: Study,
    pub grid: GridConfig,
    pub initial_data: InitialData,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Required by the studies that integrate a flow.
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Soliton {
        kappa0: f64,
        #[serde(default)]
        center: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        /// Rescale to this `H^{-1}` norm after sampling.
        hm1_norm: Option<f64>,
    },
    Cosine {
        amplitude: f64,
        wavenumber: f64,
    },
    /// Samples from a text file (whitespace separated) or the first record
    /// of a JSON-lines snapshot file. Relative paths resolve against the
    /// config file.
    File {
        path: PathBuf,
        hm1_norm: Option<f64>,
    },
    Random {
        seed: u64,
        hm1_norm: f64,
        /// Modes `|k| < max_mode`; defaults to `N/4`.
        max_mode: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FlowName {
    #[default]
    Fifth,
    Kdv,
    Translation,
    HKappa,
    Difference,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    #[default]
    Series,
    Direct,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowName,
    pub kappa: Option<f64>,
    #[serde(default)]
    pub green_route: RouteName,
    pub max_order: Option<usize>,
    #[serde(default)]
    pub green: GreenConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub kappa_list: Vec<f64>,
    pub center_spacing: f64,
    pub window: [f64; 2],
    /// Energy parameter for the microscopic balance and the Green's-function
    /// proxy.
    pub varkappa: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            kappa_list: vec![2.0, 4.0, 8.0, 16.0],
            center_spacing: 1.0,
            window: [-1.0, 1.0],
            varkappa: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            formats: vec![Format::Csv, Format::Jsonl],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// A parsed and validated configuration with its derived objects.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub grid: Grid,
    pub q0: Field,
    pub flow: FlowSpec,
    pub output_dir: PathBuf,
}

impl Experiment {
    /// The integrator section; presence is checked at load time for the
    /// studies that need it.
    pub fn integrator(&self) -> &IntegratorConfig {
        self.config
            .integrator
            .as_ref()
            .expect("integrator presence checked at load")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
        Self::from_config(config, base, env_dir)
    }

    pub fn from_config(config: ExperimentConfig, base: &Path, env_dir: Option<PathBuf>) -> Result<Self, CliError> {
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    config.schema_version
                ),
            ));
        }
        let grid = Grid::new(config.grid.length, config.grid.points)
            .map_err(|e| CliError::core(grid_field(&config.grid), e))?;
        let flow = config.flow.to_spec()?;
        if let Some(integrator) = &config.integrator {
            integrator
                .validate()
                .map_err(|e| CliError::core(core_field("integrator", &e), e))?;
        }
        config.diagnostics.validate()?;
        if config.output.formats.is_empty() {
            return Err(CliError::invalid("output.formats", "at least one of csv, jsonl"));
        }
        let q0 = config.initial_data.build(grid, base)?;
        let output_dir = env_dir.unwrap_or_else(|| config.output.directory.clone());
        let exp = Self {
            config,
            grid,
            q0,
            flow,
            output_dir,
        };
        exp.config.study.check(&exp)?;
        Ok(exp)
    }
}

fn grid_field(g: &GridConfig) -> &'static str {
    if g.length.is_finite() && g.length > 0.0 {
        "grid.N"
    } else {
        "grid.L"
    }
}

/// `section.name` for core parameter errors, `section` otherwise.
pub fn core_field(section: &str, e: &kdv5::Error) -> String {
    match e {
        kdv5::Error::InvalidParameter { name, .. } => format!("{section}.{name}"),
        _ => section.to_string(),
    }
}

impl FlowConfig {
    pub fn to_spec(&self) -> Result<FlowSpec, CliError> {
        let needs_kappa = matches!(self.kind, FlowName::HKappa | FlowName::Difference);
        let kappa = match (needs_kappa, self.kappa) {
            (true, Some(k)) => k,
            (true, None) => {
                return Err(CliError::invalid(
                    "flow.kappa",
                    "required for h_kappa and difference flows",
                ))
            }
            (false, Some(_)) => {
                return Err(CliError::invalid(
                    "flow.kappa",
                    "only h_kappa and difference flows take a kappa",
                ))
            }
            (false, None) => 0.0,
        };
        let kind = match self.kind {
            FlowName::Fifth => FlowKind::Fifth,
            FlowName::Kdv => FlowKind::Kdv,
            FlowName::Translation => FlowKind::Translation,
            FlowName::HKappa => FlowKind::HKappa { kappa },
            FlowName::Difference => FlowKind::Difference { kappa },
        };
        let route = match (self.green_route, self.max_order) {
            (RouteName::Series, m) => GreenRoute::Series {
                max_order: m.unwrap_or(GreenConfig::DEFAULT_MAX_ORDER),
            },
            (RouteName::Direct, None) => GreenRoute::Direct,
            (RouteName::Direct, Some(_)) => {
                return Err(CliError::invalid(
                    "flow.max_order",
                    "only the series route takes max_order",
                ))
            }
        };
        let g = &self.green;
        if !(g.delta.is_finite() && g.delta > 0.0) {
            return Err(CliError::invalid("flow.green.delta", "must be finite and positive"));
        }
        if !(g.series_guard > 0.0 && g.series_guard < 1.0) {
            return Err(CliError::invalid("flow.green.series_guard", "must lie in (0, 1)"));
        }
        if g.oversample == 0 {
            return Err(CliError::invalid("flow.green.oversample", "must be at least 1"));
        }
        let spec = FlowSpec {
            kind,
            green_route: route,
            green: self.green,
        };
        spec.validate().map_err(|e| CliError::core(core_field("flow", &e), e))?;
        Ok(spec)
    }
}

impl DiagnosticsConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.kappa_list.is_empty() {
            return Err(CliError::invalid("diagnostics.kappa_list", "must not be empty"));
        }
        if let Some(k) = self.kappa_list.iter().find(|k| !(k.is_finite() && **k >= 1.0)) {
            return Err(CliError::invalid(
                "diagnostics.kappa_list",
                format!("entries must be finite and >= 1, got {k}"),
            ));
        }
        if self.kappa_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::invalid(
                "diagnostics.kappa_list",
                "must be strictly increasing",
            ));
        }
        if !(self.center_spacing.is_finite() && self.center_spacing > 0.0) {
            return Err(CliError::invalid(
                "diagnostics.center_spacing",
                "must be finite and positive",
            ));
        }
        let [a, b] = self.window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(CliError::invalid(
                "diagnostics.window",
                "must be finite with start < end",
            ));
        }
        if !(self.varkappa.is_finite() && self.varkappa >= 1.0) {
            return Err(CliError::invalid("diagnostics.varkappa", "must be finite and >= 1"));
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::invalid(
            field,
            format!("must be finite and positive, got {v}"),
        ))
    }
}

fn rescale(q: Field, hm1_norm: Option<f64>) -> Result<Field, CliError> {
    match hm1_norm {
        Some(n) if !(n.is_finite() && n >= 0.0) => Err(CliError::invalid(
            "initial_data.hm1_norm",
            format!("must be finite and non-negative, got {n}"),
        )),
        Some(n) => Ok(initial::with_h_minus1_norm(&q, n)),
        None => Ok(q),
    }
}

impl InitialData {
    pub fn build(&self, grid: Grid, base: &Path) -> Result<Field, CliError> {
        match self {
            InitialData::Zero => Ok(Field::zeros(grid)),
            InitialData::Soliton { kappa0, center } => {
                positive("initial_data.kappa0", *kappa0)?;
                Ok(initial::soliton(grid, *kappa0, *center))
            }
            InitialData::Gaussian {
                amplitude,
                width,
                center,
                hm1_norm,
            } => {
                positive("initial_data.width", *width)?;
                if !amplitude.is_finite() || !center.is_finite() {
                    return Err(CliError::invalid("initial_data", "amplitude and center must be finite"));
                }
                rescale(initial::gaussian(grid, *amplitude, *width, *center), *hm1_norm)
            }
            InitialData::Cosine { amplitude, wavenumber } => {
                if !amplitude.is_finite() {
                    return Err(CliError::invalid("initial_data.amplitude", "must be finite"));
                }
                let m = wavenumber / grid.dxi();
                if !(m.is_finite() && (m - m.round()).abs() < 1e-9 && m.round().abs() < grid.points() as f64 / 2.0) {
                    return Err(CliError::invalid(
                        "initial_data.wavenumber",
                        format!(
                            "must be an integer multiple of 2 pi / L = {} below the Nyquist mode",
                            grid.dxi()
                        ),
                    ));
                }
                Ok(initial::cosine(grid, *amplitude, *wavenumber))
            }
            InitialData::File { path, hm1_norm } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| CliError::Read { path: full, source })?;
                let samples = parse_samples(&text)?;
                let q = Field::new(grid, samples).map_err(|e| CliError::core("initial_data.path", e))?;
                rescale(q, *hm1_norm)
            }
            InitialData::Random {
                seed,
                hm1_norm,
                max_mode,
            } => {
                let m = max_mode.unwrap_or(grid.points() / 4);
                if m == 0 || m > grid.points() / 4 {
                    return Err(CliError::invalid(
                        "initial_data.max_mode",
                        format!("must lie in 1..={}, got {m}", grid.points() / 4),
                    ));
                }
                initial::random_band_limited(grid, *hm1_norm, *seed, m)
                    .map_err(|e| CliError::core(core_field("initial_data", &e), e))
            }
        }
    }
}

fn parse_samples(text: &str) -> Result<Vec<f64>, CliError> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('{') {
        let rec: crate::output::SnapshotRecord = serde_json::from_str(first)
            .map_err(|e| CliError::invalid("initial_data.path", format!("bad snapshot record: {e}")))?;
        return Ok(rec.samples);
    }
    text.split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| CliError::invalid("initial_data.path", format!("bad sample `{s}`: {e}")))
        })
        .collect()
}
