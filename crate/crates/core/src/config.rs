//! Run configuration (JSON, unknown keys rejected).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illposed::RectangleData;
use crate::io::read_snapshot;
use crate::probes::random_band_limited;
use crate::spectral::{forward, RealField, SpectralField, SpectralGrid};
use crate::symbols::{DissipationKind, ModelParams, Preset};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "DMKP_LAB_OUTPUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Starting point; the explicit fields below override it.
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub dissipation_kind: Option<DissipationKind>,
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<ModelParams> {
        let base = self.preset.map(ModelParams::preset).unwrap_or_default();
        let p = ModelParams {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            dissipation: self.dissipation_kind.unwrap_or(base.dissipation),
        };
        p.validate().map_err(|e| Error::Config(format!("model: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "two_pi")]
    pub lx: f64,
    #[serde(default = "two_pi")]
    pub ly: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::new(self.nx, self.ny, self.lx, self.ly).map_err(|e| Error::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub output_every: usize,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// `amplitude * exp(-|x - c|^2 / width^2)` centred in the box.
    Gaussian {
        #[serde(default = "unit")]
        amplitude: f64,
        #[serde(default = "unit")]
        width: f64,
    },
    /// Band-limited random field over the kept modes, scaled to
    /// `||u||_{L^2} = amplitude`.
    Random {
        seed: u64,
        spectrum_slope: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `amplitude * cos(2 pi (j x / lx + k y / ly))`.
    SingleMode {
        j: i64,
        k: i64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// The rectangle data family sampled at the grid frequencies.
    #[serde(rename = "phiN")]
    PhiN { n: f64, s: f64 },
    /// An FLD1 snapshot on the configured grid.
    File { path: PathBuf },
}

impl InitConfig {
    pub fn build(&self, grid: &Arc<SpectralGrid>) -> Result<SpectralField> {
        match self {
            InitConfig::Gaussian { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(Error::Config("init.width must be positive".into()));
                }
                let (cx, cy) = (grid.lx() / 2.0, grid.ly() / 2.0);
                let w2 = width * width;
                Ok(forward(&RealField::from_fn(grid.clone(), |x, y| {
                    let r2 = (x - cx).powi(2) + if grid.is_one_dimensional() { 0.0 } else { (y - cy).powi(2) };
                    amplitude * (-r2 / w2).exp()
                })))
            }
            InitConfig::Random {
                seed,
                spectrum_slope,
                amplitude,
            } => {
                let xi_max = (grid.nx() / 3) as f64 * 2.0 * PI / grid.lx();
                let eta_max = (grid.ny() / 3) as f64 * 2.0 * PI / grid.ly();
                let mut f = random_band_limited(grid, xi_max, eta_max, *spectrum_slope, *seed)
                    .map_err(|e| Error::Config(format!("init: {e}")))?;
                let n = f.l2_norm();
                if n > 0.0 {
                    f.scale(amplitude / n);
                }
                Ok(f)
            }
            InitConfig::SingleMode { j, k, amplitude } => {
                let (j, k, a) = (*j as f64, *k as f64, *amplitude);
                let (lx, ly) = (grid.lx(), grid.ly());
                Ok(forward(&RealField::from_fn(grid.clone(), |x, y| {
                    a * (2.0 * PI * (j * x / lx + k * y / ly)).cos()
                })))
            }
            InitConfig::PhiN { n, s } => {
                let data = RectangleData::new(*n, *s).map_err(|e| Error::Config(format!("init: {e}")))?;
                let (b, a) = (data.b_rect(), data.a_rect());
                let xi_kept = (grid.nx() / 3) as f64 * 2.0 * PI / grid.lx();
                let eta_kept = (grid.ny() / 3) as f64 * 2.0 * PI / grid.ly();
                if b.xi.hi > xi_kept + 1e-9 || a.eta.hi > eta_kept + 1e-9 {
                    return Err(Error::Config(format!(
                        "grid keeps |xi| <= {xi_kept}, |eta| <= {eta_kept}; phiN needs {} and {}",
                        b.xi.hi, a.eta.hi
                    )));
                }
                Ok(SpectralField::from_fn(grid.clone(), |xi, eta| {
                    num_complex::Complex64::new(data.value_at((xi, eta)), 0.0)
                }))
            }
            InitConfig::File { path } => {
                let (snap, _) = read_snapshot(path)?;
                if snap.grid().as_ref() != grid.as_ref() {
                    return Err(Error::Config(format!(
                        "snapshot {} is on a different grid than the configuration",
                        path.display()
                    )));
                }
                Ok(forward(&snap))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Exponents of the Sobolev column in the simulation series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub s1: f64,
    #[serde(default)]
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

/// A configuration after validation.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub params: ModelParams,
    pub grid: Arc<SpectralGrid>,
    pub steps: usize,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every precondition before any computation starts.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let params = self.model.resolve()?;
        let grid = self.grid.build()?;
        let t = &self.time;
        if t.output_every == 0 {
            return Err(Error::Config("time.output_every must be at least 1".into()));
        }
        let steps = crate::propagator::step_count(t.t_final, t.dt).map_err(|e| Error::Config(format!("time: {e}")))?;
        if !(self.diagnostics.s1.is_finite() && self.diagnostics.s2.is_finite()) {
            return Err(Error::Config("diagnostics exponents must be finite".into()));
        }
        Ok(ResolvedRun {
            params,
            grid,
            steps,
            config: self.clone(),
        })
    }

    /// `output.dir`, unless overridden by the environment.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }
}
