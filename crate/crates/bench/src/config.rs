//! Experiment configuration: a flat `key = value` text format.
//!
//! ```text
//! # teng-bc config v1
//! equation = heat
//! boundary = dirichlet
//! scheme = heun
//! t_final = 0.05
//! ```
//!
//! `#` starts a comment. Every key is optional except `equation`; missing
//! keys take the defaults listed in [`ExperimentConfig::defaults`], and
//! [`ExperimentConfig::to_text`] writes every key back out so a run can be
//! reproduced from its echoed config alone.

use crate::Failure;
use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use teng_bc_core::ansatz::{Mlp, NetworkSpec, PeriodicEmbeddingSpec};
use teng_bc_core::geometry::Domain;
use teng_bc_core::integrate::{InitialFitConfig, Scheme, SchemeConfig};
use teng_bc_core::reference::{HeatVariant, Interpolation, SpectralConfig};
use teng_bc_core::stepper::{RowWeighting, StepConfig};

pub const CONFIG_HEADER: &str = "# teng-bc config v1";
const HEADER_PREFIX: &str = "# teng-bc config v";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Heat,
    Transport,
    Burgers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Boundary {
    Dirichlet,
    Neumann,
    NeumannNonzero,
    Robin,
    Mixed,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Analytic,
    Spectral,
    None,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(format!("expected one of {}", [$($name),+].join(", "))),
                }
            }
        }
    };
}

text_enum!(Equation { Heat => "heat", Transport => "transport", Burgers => "burgers" });
text_enum!(Boundary {
    Dirichlet => "dirichlet",
    Neumann => "neumann",
    NeumannNonzero => "neumann_nonzero",
    Robin => "robin",
    Mixed => "mixed",
    Periodic => "periodic",
});
text_enum!(ReferenceKind { Analytic => "analytic", Spectral => "spectral", None => "none" });

impl Equation {
    /// Boundary types with a reference solution for this equation.
    pub fn boundaries(self) -> &'static [Boundary] {
        match self {
            Equation::Heat => &[
                Boundary::Dirichlet,
                Boundary::Neumann,
                Boundary::NeumannNonzero,
                Boundary::Robin,
                Boundary::Mixed,
            ],
            Equation::Transport => &[Boundary::Dirichlet],
            Equation::Burgers => &[Boundary::Periodic],
        }
    }

    fn default_boundary(self) -> Boundary {
        self.boundaries()[0]
    }

    fn default_reference(self) -> ReferenceKind {
        match self {
            Equation::Burgers => ReferenceKind::Spectral,
            _ => ReferenceKind::Analytic,
        }
    }
}

impl Boundary {
    pub fn domain(self) -> Domain {
        match self {
            Boundary::Mixed => Domain::quarter_annulus(),
            Boundary::Periodic => Domain::periodic_square(),
            _ => Domain::unit_disk(),
        }
    }

    pub fn heat_variant(self) -> Option<HeatVariant> {
        self.as_str().parse().ok()
    }
}

fn default_output_dir(equation: Equation, boundary: Boundary, scheme: Scheme) -> PathBuf {
    PathBuf::from(format!("runs/{equation}_{boundary}_{scheme}"))
}

/// A parse or validation failure, located by line and key where possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub equation: Equation,
    pub boundary: Boundary,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    /// Interior grid points per side before filtering to the domain.
    pub n_interior: usize,
    pub n_boundary: usize,
    pub hidden_layers: usize,
    pub width: usize,
    /// Periodic features per coordinate; zero disables the embedding.
    pub embedding_size: usize,
    pub n_ls: usize,
    pub subset_size: usize,
    pub first_stage_n_ls: usize,
    pub first_stage_subset: usize,
    pub svd_rtol: f64,
    pub row_weighting: RowWeighting,
    pub init_tol: f64,
    pub init_max_iterations: usize,
    pub init_svd_rtol: f64,
    /// Seeds both the initializer and the mask sampler.
    pub seed: u64,
    pub kappa: f64,
    pub beta: f64,
    pub nu: f64,
    pub reference: ReferenceKind,
    pub reference_modes: usize,
    pub reference_dt: f64,
    pub interpolation: Interpolation,
    /// Precomputed spectral fields; computed on the fly when absent.
    pub reference_cache: Option<PathBuf>,
    pub error_every: usize,
    /// Fill the `wall_ms` column; off by default so reruns are byte-identical.
    pub log_wall_time: bool,
    pub output_dir: PathBuf,
}

/// Every key in output order.
pub const KEYS: &[&str] = &[
    "equation",
    "boundary",
    "scheme",
    "dt",
    "t_final",
    "n_interior",
    "n_boundary",
    "hidden_layers",
    "width",
    "embedding_size",
    "n_ls",
    "subset_size",
    "first_stage_n_ls",
    "first_stage_subset",
    "svd_rtol",
    "row_weighting",
    "init_tol",
    "init_max_iterations",
    "init_svd_rtol",
    "seed",
    "kappa",
    "beta",
    "nu",
    "reference",
    "reference_modes",
    "reference_dt",
    "interpolation",
    "reference_cache",
    "error_every",
    "log_wall_time",
    "output_dir",
];

impl ExperimentConfig {
    /// Defaults for `equation` with its first admissible boundary.
    pub fn defaults(equation: Equation) -> Self {
        Self::defaults_for(equation, equation.default_boundary())
    }

    pub fn defaults_for(equation: Equation, boundary: Boundary) -> Self {
        let step = StepConfig::default();
        let scheme = SchemeConfig::default();
        let init = InitialFitConfig::default();
        let spectral = SpectralConfig::default();
        let domain = boundary.domain();
        Self {
            equation,
            boundary,
            scheme: scheme.scheme,
            dt: scheme.dt,
            t_final: scheme.t_final,
            n_interior: domain.default_grid_side(),
            n_boundary: if boundary == Boundary::Periodic { 0 } else { 256 },
            hidden_layers: 7,
            width: 40,
            embedding_size: if boundary == Boundary::Periodic { 20 } else { 0 },
            n_ls: step.n_ls,
            subset_size: step.subset_size,
            first_stage_n_ls: step.first_stage_n_ls,
            first_stage_subset: step.first_stage_subset,
            svd_rtol: step.svd_rtol,
            row_weighting: step.row_weighting,
            init_tol: init.tol,
            init_max_iterations: init.max_iterations,
            init_svd_rtol: init.svd_rtol,
            seed: 0,
            kappa: 0.1,
            beta: 0.2,
            nu: spectral.nu,
            reference: equation.default_reference(),
            reference_modes: spectral.modes,
            reference_dt: spectral.dt,
            interpolation: Interpolation::Bilinear,
            reference_cache: None,
            error_every: 1,
            log_wall_time: false,
            output_dir: default_output_dir(equation, boundary, scheme.scheme),
        }
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec {
            hidden_layers: self.hidden_layers,
            width: self.width,
            embedding: (self.embedding_size > 0).then(|| PeriodicEmbeddingSpec {
                per_coordinate_size: self.embedding_size,
                ..PeriodicEmbeddingSpec::default()
            }),
            ..NetworkSpec::default()
        }
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            n_ls: self.n_ls,
            subset_size: self.subset_size,
            first_stage_n_ls: self.first_stage_n_ls,
            first_stage_subset: self.first_stage_subset,
            svd_rtol: self.svd_rtol,
            rng_seed: self.seed,
            row_weighting: self.row_weighting,
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.scheme,
            dt: self.dt,
            t_final: self.t_final,
        }
    }

    pub fn initial_fit_config(&self) -> InitialFitConfig {
        InitialFitConfig {
            tol: self.init_tol,
            max_iterations: self.init_max_iterations,
            svd_rtol: self.init_svd_rtol,
            ..InitialFitConfig::default()
        }
    }

    pub fn spectral_config(&self) -> SpectralConfig {
        SpectralConfig {
            modes: self.reference_modes,
            nu: self.nu,
            dt: self.reference_dt,
            advection: true,
        }
    }

    pub fn domain(&self) -> Domain {
        self.boundary.domain()
    }

    /// Checks cross-field constraints. `lines` maps keys to their source
    /// line for error messages.
    fn validate(&self, lines: &HashMap<String, usize>) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError {
            line: lines.get(key).copied(),
            key: Some(key.to_string()),
            message,
        };
        if !self.equation.boundaries().contains(&self.boundary) {
            let allowed: Vec<&str> = self.equation.boundaries().iter().map(|b| b.as_str()).collect();
            return Err(err(
                "boundary",
                format!(
                    "`{}` is not available for {} (allowed: {})",
                    self.boundary,
                    self.equation,
                    allowed.join(", ")
                ),
            ));
        }
        let positive = [
            ("dt", self.dt),
            ("t_final", self.t_final),
            ("init_tol", self.init_tol),
            ("reference_dt", self.reference_dt),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(key, format!("must be positive, got {v}")));
            }
        }
        let nonneg = [("kappa", self.kappa), ("nu", self.nu)];
        for (key, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err(key, format!("must be non-negative, got {v}")));
            }
        }
        if !self.beta.is_finite() {
            return Err(err("beta", "must be finite".into()));
        }
        for (key, v) in [("svd_rtol", self.svd_rtol), ("init_svd_rtol", self.init_svd_rtol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(err(key, format!("must lie in (0, 1), got {v}")));
            }
        }
        self.scheme_config()
            .validate()
            .map_err(|e| err("t_final", e.to_string()))?;
        if self.error_every == 0 {
            return Err(err("error_every", "must be at least 1".into()));
        }
        let periodic = self.boundary == Boundary::Periodic;
        if periodic && self.n_boundary != 0 {
            return Err(err("n_boundary", "a periodic domain has no boundary samples; use 0".into()));
        }
        if !periodic && self.n_boundary < 4 {
            return Err(err("n_boundary", format!("needs at least 4 boundary points, got {}", self.n_boundary)));
        }
        if self.n_interior < 2 {
            return Err(err("n_interior", format!("needs at least 2 points per side, got {}", self.n_interior)));
        }
        if periodic && self.embedding_size == 0 {
            return Err(err("embedding_size", "the periodic domain needs the periodic embedding".into()));
        }
        if !periodic && self.embedding_size != 0 {
            return Err(err("embedding_size", "the embedding only applies to the periodic domain".into()));
        }
        let spec = self.network_spec();
        spec.validate().map_err(|e| err("hidden_layers", e.to_string()))?;
        let trainable = Mlp::new(spec)
            .map_err(|e| err("hidden_layers", e.to_string()))?
            .layout()
            .trainable_indices()
            .len();
        for (key, v) in [("subset_size", self.subset_size), ("first_stage_subset", self.first_stage_subset)] {
            if v == 0 || v > trainable {
                return Err(err(key, format!("must lie in [1, {trainable}], got {v}")));
            }
        }
        for (key, v) in [("n_ls", self.n_ls), ("first_stage_n_ls", self.first_stage_n_ls)] {
            if v == 0 {
                return Err(err(key, "must be at least 1".into()));
            }
        }
        match (self.equation, self.reference) {
            (Equation::Burgers, ReferenceKind::Analytic) => {
                return Err(err("reference", "burgers has no analytic reference; use spectral or none".into()))
            }
            (Equation::Heat | Equation::Transport, ReferenceKind::Spectral) => {
                return Err(err("reference", format!("{} uses the analytic reference", self.equation)))
            }
            _ => {}
        }
        if self.reference == ReferenceKind::Spectral {
            self.spectral_config()
                .validate()
                .map_err(|e| err("reference_modes", e.to_string()))?;
            let ratio = self.dt / self.reference_dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(err(
                    "reference_dt",
                    format!("must divide dt = {} into a whole number of steps", self.dt),
                ));
            }
        }
        Ok(())
    }

    /// Writes every key, defaults included.
    pub fn to_text(&self) -> String {
        let mut out = String::from(CONFIG_HEADER);
        out.push('\n');
        for key in KEYS {
            out.push_str(&format!("{key} = {}\n", self.value_of(key)));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "equation" => self.equation.to_string(),
            "boundary" => self.boundary.to_string(),
            "scheme" => self.scheme.to_string(),
            "dt" => self.dt.to_string(),
            "t_final" => self.t_final.to_string(),
            "n_interior" => self.n_interior.to_string(),
            "n_boundary" => self.n_boundary.to_string(),
            "hidden_layers" => self.hidden_layers.to_string(),
            "width" => self.width.to_string(),
            "embedding_size" => self.embedding_size.to_string(),
            "n_ls" => self.n_ls.to_string(),
            "subset_size" => self.subset_size.to_string(),
            "first_stage_n_ls" => self.first_stage_n_ls.to_string(),
            "first_stage_subset" => self.first_stage_subset.to_string(),
            "svd_rtol" => self.svd_rtol.to_string(),
            "row_weighting" => self.row_weighting.to_string(),
            "init_tol" => self.init_tol.to_string(),
            "init_max_iterations" => self.init_max_iterations.to_string(),
            "init_svd_rtol" => self.init_svd_rtol.to_string(),
            "seed" => self.seed.to_string(),
            "kappa" => self.kappa.to_string(),
            "beta" => self.beta.to_string(),
            "nu" => self.nu.to_string(),
            "reference" => self.reference.to_string(),
            "reference_modes" => self.reference_modes.to_string(),
            "reference_dt" => self.reference_dt.to_string(),
            "interpolation" => match self.interpolation {
                Interpolation::Bilinear => "bilinear".into(),
                Interpolation::Trigonometric => "trigonometric".into(),
            },
            "reference_cache" => self
                .reference_cache
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "error_every" => self.error_every.to_string(),
            "log_wall_time" => self.log_wall_time.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}` as a number"))
        }
        match key {
            "equation" => self.equation = value.parse()?,
            "boundary" => self.boundary = value.parse()?,
            "scheme" => self.scheme = value.parse().map_err(|e: teng_bc_core::Error| e.to_string())?,
            "dt" => self.dt = num(value)?,
            "t_final" => self.t_final = num(value)?,
            "n_interior" => self.n_interior = num(value)?,
            "n_boundary" => self.n_boundary = num(value)?,
            "hidden_layers" => self.hidden_layers = num(value)?,
            "width" => self.width = num(value)?,
            "embedding_size" => self.embedding_size = num(value)?,
            "n_ls" => self.n_ls = num(value)?,
            "subset_size" => self.subset_size = num(value)?,
            "first_stage_n_ls" => self.first_stage_n_ls = num(value)?,
            "first_stage_subset" => self.first_stage_subset = num(value)?,
            "svd_rtol" => self.svd_rtol = num(value)?,
            "row_weighting" => {
                self.row_weighting = value.parse().map_err(|e: teng_bc_core::Error| e.to_string())?
            }
            "init_tol" => self.init_tol = num(value)?,
            "init_max_iterations" => self.init_max_iterations = num(value)?,
            "init_svd_rtol" => self.init_svd_rtol = num(value)?,
            "seed" => self.seed = num(value)?,
            "kappa" => self.kappa = num(value)?,
            "beta" => self.beta = num(value)?,
            "nu" => self.nu = num(value)?,
            "reference" => self.reference = value.parse()?,
            "reference_modes" => self.reference_modes = num(value)?,
            "reference_dt" => self.reference_dt = num(value)?,
            "interpolation" => {
                self.interpolation = match value {
                    "bilinear" => Interpolation::Bilinear,
                    "trigonometric" => Interpolation::Trigonometric,
                    _ => return Err("expected bilinear or trigonometric".into()),
                }
            }
            "reference_cache" => self.reference_cache = (!value.is_empty()).then(|| PathBuf::from(value)),
            "error_every" => self.error_every = num(value)?,
            "log_wall_time" => {
                self.log_wall_time = value.parse().map_err(|_| "expected true or false".to_string())?
            }
            "output_dir" => {
                if value.is_empty() {
                    return Err("must not be empty".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses and validates a config document, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut lines: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if let Some(version) = trimmed.strip_prefix(HEADER_PREFIX) {
            if version.trim() != "1" {
                return Err(ConfigError {
                    line: Some(line_no),
                    key: None,
                    message: format!("unsupported config format version `{}`", version.trim()),
                });
            }
            continue;
        }
        let content = match trimmed.find('#') {
            Some(i) => trimmed[..i].trim(),
            None => trimmed,
        };
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line_no),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError {
                line: Some(line_no),
                key: Some(key.to_string()),
                message: "unknown key".into(),
            });
        }
        if let Some(first) = lines.insert(key.to_string(), line_no) {
            return Err(ConfigError {
                line: Some(line_no),
                key: Some(key.to_string()),
                message: format!("duplicate key (first set on line {first})"),
            });
        }
        entries.push((line_no, key.to_string(), value.to_string()));
    }

    let locate = |key: &str, message: String| ConfigError {
        line: lines.get(key).copied(),
        key: Some(key.to_string()),
        message,
    };
    let value = |key: &str| entries.iter().find(|(_, k, _)| k == key).map(|(_, _, v)| v.as_str());
    let equation: Equation = match value("equation") {
        None => {
            return Err(ConfigError {
                line: None,
                key: Some("equation".into()),
                message: "equation required".into(),
            })
        }
        Some(v) => v.parse().map_err(|m| locate("equation", m))?,
    };
    let boundary: Boundary = match value("boundary") {
        None => equation.default_boundary(),
        Some(v) => v.parse().map_err(|m| locate("boundary", m))?,
    };
    let mut cfg = ExperimentConfig::defaults_for(equation, boundary);
    for (line, key, v) in &entries {
        cfg.set(key, v).map_err(|message| ConfigError {
            line: Some(*line),
            key: Some(key.clone()),
            message,
        })?;
    }
    if value("output_dir").is_none() {
        cfg.output_dir = default_output_dir(equation, boundary, cfg.scheme);
    }
    cfg.validate(&lines)?;
    Ok(cfg)
}
