use std::path::{Path, PathBuf};

use lrkam::dynamics::StripConfig;
use lrkam::kam::{KamConfig, KamSchedule};
use lrkam::mechanics::{
    ChartDomain, Coupling, FrequencyChartConfig, NormalFormConfig, Potential, QuadratureConfig,
};
use lrkam::series::MassSpec;
use serde::Deserialize;

use crate::error::CliError;

/// One run, read from a single TOML document. Every section is optional;
/// a command only reads the sections it needs.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: Option<ModelConfig>,
    /// A separate TOML file holding the model, relative to this config.
    pub model_file: Option<PathBuf>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub caps: CapsConfig,
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub strip: Option<StripConfig>,
    pub chart: Option<ChartConfig>,
    pub box_dim: Option<BoxDimConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `sum_i m_i (xi_i J_i + J_i^2 / 2) + eps sum_{i >= 2} m_1 m_i cos(phi_1 - phi_i)`
    LongRange { xi: Vec<f64>, eps: f64, mass: MassSpec },
    /// A series file; masses come from the file header unless given here.
    /// `eps` falls back to `schedule.eps0`.
    Series {
        path: PathBuf,
        xi: Vec<f64>,
        mass: Option<MassSpec>,
        eps: Option<f64>,
    },
    /// Mechanical sites on a line, reduced through their action-angle chart.
    Mechanical {
        potential: Potential,
        coupling: Coupling,
        eps: f64,
        mass: MassSpec,
        xi: Vec<f64>,
        domain: ChartDomain,
        #[serde(default)]
        quadrature: QuadratureConfig,
        #[serde(default)]
        normal_form: NormalFormConfig,
    },
}

/// Schedule constants. Unset values take the defaults below; set ones are
/// listed as overrides in the provenance header.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub eps0: Option<f64>,
    pub beta0: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub stages: Option<usize>,
    pub box_width: Option<f64>,
}

pub const DEFAULT_BETA0: f64 = 0.5;
pub const DEFAULT_RHO: f64 = 1.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_STAGES: usize = 4;

impl ScheduleConfig {
    pub fn overrides(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (name, set) in [
            ("eps0", self.eps0.is_some()),
            ("beta0", self.beta0.is_some()),
            ("rho", self.rho.is_some()),
            ("sigma", self.sigma.is_some()),
            ("stages", self.stages.is_some()),
            ("box_width", self.box_width.is_some()),
        ] {
            if set {
                v.push(name);
            }
        }
        v
    }

    /// `eps0` falls back to the model coupling.
    pub fn build(&self, eps: f64) -> Result<KamSchedule, CliError> {
        let sched = KamSchedule::build_with_box(
            self.eps0.unwrap_or(eps),
            self.beta0.unwrap_or(DEFAULT_BETA0),
            self.rho.unwrap_or(DEFAULT_RHO),
            self.sigma.unwrap_or(DEFAULT_SIGMA),
            self.stages.unwrap_or(DEFAULT_STAGES),
            self.box_width,
        )?;
        Ok(sched)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    pub max_l1: Option<u32>,
    pub max_alpha1: Option<u32>,
    pub max_support: Option<usize>,
    pub max_order: Option<usize>,
    pub lie_tol: Option<f64>,
}

impl CapsConfig {
    pub fn overrides(&self) -> Vec<&'static str> {
        [
            ("max_l1", self.max_l1.is_some()),
            ("max_alpha1", self.max_alpha1.is_some()),
            ("max_support", self.max_support.is_some()),
            ("max_order", self.max_order.is_some()),
            ("lie_tol", self.lie_tol.is_some()),
        ]
        .into_iter()
        .filter(|(_, s)| *s)
        .map(|(n, _)| n)
        .collect()
    }

    pub fn kam_config(&self) -> KamConfig {
        let mut c = KamConfig::default();
        if let Some(v) = self.max_l1 {
            c.caps.max_l1 = v;
        }
        if let Some(v) = self.max_alpha1 {
            c.caps.max_alpha1 = v;
        }
        if let Some(v) = self.max_support {
            c.caps.max_support = v;
        }
        if let Some(v) = self.max_order {
            c.caps.max_order = v;
        }
        if let Some(v) = self.lie_tol {
            c.lie_tol = v;
        }
        c
    }
}

/// Monte-Carlo survival over an `(eps, d)` grid. Cube centers are
/// `center_offset + n^{-gamma}` with `gamma = 1/d - 1`.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub eps: Vec<f64>,
    pub d: Vec<f64>,
    pub sites: u32,
    pub mass: Option<MassSpec>,
    pub center_offset: f64,
    pub frequency_box: (f64, f64),
    pub ell: f64,
    pub width_power: f64,
    pub count: usize,
    pub stages: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            eps: vec![1e-24, 1e-36, 1e-48],
            d: vec![0.25, 0.5, 0.75],
            sites: 1000,
            mass: None,
            center_offset: 0.5 * (1.0 + 5f64.sqrt()),
            frequency_box: (0.0, 4.0),
            ell: 0.5,
            width_power: 1.0,
            count: 10_000,
            stages: 1,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub step: f64,
    pub time: f64,
    pub record_every: usize,
    pub samples: usize,
    /// Drop tolerance of the embedding Lie series.
    pub embedding_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            step: 0.0025,
            time: 100.0,
            record_every: 100,
            samples: 4,
            embedding_tol: 1e-16,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub potential: Potential,
    pub domain: ChartDomain,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub frequency: FrequencyChartConfig,
    /// Energies sampled per axis.
    #[serde(default = "default_chart_samples")]
    pub samples: usize,
    /// Starting point for the elliptic-equilibrium search.
    pub equilibrium_guess: Option<f64>,
}

fn default_chart_samples() -> usize {
    32
}

/// Box-counting on `xi_n = n^{-gamma}` for each `gamma`.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxDimConfig {
    pub gammas: Vec<f64>,
    pub points: usize,
    /// Scales run from `hi` to `lo` times the sequence range.
    pub scale_hi: f64,
    pub scale_lo: f64,
    pub scale_count: usize,
}

impl Default for BoxDimConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1.0 / 3.0, 1.0, 3.0],
            points: 1_000_000,
            scale_hi: 0.1,
            scale_lo: 1e-5,
            scale_count: 9,
        }
    }
}

impl Loaded {
    /// The inline model or the one in `model_file`.
    pub fn model(&self) -> Result<ModelConfig, CliError> {
        match (&self.config.model, &self.config.model_file) {
            (Some(m), None) => Ok(m.clone()),
            (None, Some(p)) => {
                let path = self.base_dir.join(p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("cannot read model file {}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("model file {}: {e}", path.display())))
            }
            (Some(_), Some(_)) => Err(CliError::Usage("give either [model] or model_file, not both".into())),
            (None, None) => Err(CliError::Usage("this command needs a [model] section or model_file".into())),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Usage("config is not UTF-8".into()))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        config,
        base_dir,
        sha256: crate::output::sha256_hex(&bytes),
    })
}
