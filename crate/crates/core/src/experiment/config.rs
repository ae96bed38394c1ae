use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_basis::{ModeSet, ProjectionRule, Region};
use crate::wave_dynamics::SpectralState;

/// Schema tag written into every config and summary file.
pub const CONFIG_SCHEMA: &str = "wave-control/experiment/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Example1,
    Example2,
    Custom,
}

/// Gaussian beam initial data
///
/// ```text
/// g0 = A exp(-k a (x1-c1)²/2) exp(-k b (x2-c2)²/2) cos(k (x2-c2)/2)
/// g1 = A exp(-k a (x1-c1)²/2) exp(-k b (x2-c2)²/2)
///      [ k b (x2-c2) cos(k (x2-c2)/2) + (k/2 + a) sin(k (x2-c2)/2)
///        - k a² (x1-c1)² sin(k (x2-c2)/2) ]
/// ```
///
/// with `(k, a, b) = (k_o, a_o, b_o)`, centre `(c1, c2) = (x_o1, x_o2)` and
/// amplitude `A` (1 unless overridden).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    pub k_o: f64,
    pub a_o: f64,
    pub b_o: f64,
    pub x_o1: f64,
    pub x_o2: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            k_o: 200.0,
            a_o: 0.5,
            b_o: 10000.0,
            x_o1: 0.5,
            x_o2: 0.5,
            amplitude: 1.0,
        }
    }
}

impl BeamParams {
    fn envelope(&self, x1: f64, x2: f64) -> f64 {
        let (d1, d2) = (x1 - self.x_o1, x2 - self.x_o2);
        self.amplitude
            * (-0.5 * self.k_o * self.a_o * d1 * d1).exp()
            * (-0.5 * self.k_o * self.b_o * d2 * d2).exp()
    }

    pub fn displacement(&self, x1: f64, x2: f64) -> f64 {
        self.envelope(x1, x2) * (0.5 * self.k_o * (x2 - self.x_o2)).cos()
    }

    pub fn velocity(&self, x1: f64, x2: f64) -> f64 {
        let (d1, d2) = (x1 - self.x_o1, x2 - self.x_o2);
        let phase = 0.5 * self.k_o * d2;
        let (s, c) = phase.sin_cos();
        self.envelope(x1, x2)
            * (self.k_o * self.b_o * d2 * c + (0.5 * self.k_o + self.a_o) * s
                - self.k_o * self.a_o * self.a_o * d1 * d1 * s)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.k_o, self.a_o, self.b_o, self.x_o1, self.x_o2, self.amplitude];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("beam", "parameters must be finite"));
        }
        if !(self.k_o > 0.0 && self.a_o > 0.0 && self.b_o > 0.0) {
            return Err(Error::invalid("beam", "k_o, a_o and b_o must be positive"));
        }
        Ok(())
    }
}

/// Sparse spectral coefficients: `(mode number starting at 1, value)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default)]
    pub displacement: Vec<(usize, f64)>,
    #[serde(default)]
    pub velocity: Vec<(usize, f64)>,
}

impl StateSpec {
    pub fn to_state(&self, modes: usize) -> Result<SpectralState> {
        let mut s = SpectralState::zeros(modes);
        for (dst, src) in [(&mut s.a, &self.displacement), (&mut s.b, &self.velocity)] {
            for &(j, v) in src {
                if j == 0 || j > modes {
                    return Err(Error::invalid("state", format!("mode number {j} outside 1..={modes}")));
                }
                if !v.is_finite() {
                    return Err(Error::invalid("state", "coefficients must be finite"));
                }
                dst[j - 1] += v;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub experiment: ExperimentKind,
    /// Galerkin size `G`.
    pub modes: usize,
    /// Control index `N`.
    pub iterations: usize,
    /// Horizon `T`.
    pub horizon: f64,
    /// Damping / control region.
    pub region: Region,
    pub initial: StateSpec,
    pub target: StateSpec,
    /// Beam initial data; replaces `initial` when present.
    #[serde(default)]
    pub beam: Option<BeamParams>,
    /// Quadrature for the beam projection.
    #[serde(default = "beam_projection_rule")]
    pub projection: ProjectionRule,
    /// Maximum coefficient change allowed when doubling the projection order,
    /// relative to the largest coefficient.
    #[serde(default = "projection_tolerance")]
    pub projection_tol: f64,
    pub tol: f64,
    /// Output samples per unit time of damped passes; system default if absent.
    #[serde(default)]
    pub samples_per_unit: Option<f64>,
    /// Values of `N` whose partial control cost is reported.
    #[serde(default = "cost_checkpoints")]
    pub cost_checkpoints: Vec<usize>,
    /// Points per side of the field snapshots.
    #[serde(default = "field_grid")]
    pub field_grid: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Also write whitespace-separated `.dat` copies of every table.
    #[serde(default)]
    pub plot_data: bool,
}

fn beam_projection_rule() -> ProjectionRule {
    // The beam envelope in x2 has width ~7e-4, far below the default panels.
    ProjectionRule {
        order: 16,
        panels_x1: 8,
        panels_x2: 256,
    }
}

fn projection_tolerance() -> f64 {
    1e-6
}

fn cost_checkpoints() -> Vec<usize> {
    vec![0, 5, 10, 20, 30]
}

fn field_grid() -> usize {
    101
}

impl ExperimentConfig {
    /// `Ω = (0,1)²`, `ω = (0,1/5)×(0,1)`, `T = 4`, `G = 100`, `N = 30`,
    /// target `(e₁ + e₂, e₁)`, zero initial data.
    pub fn example1() -> Self {
        Self {
            schema: CONFIG_SCHEMA.to_string(),
            experiment: ExperimentKind::Example1,
            modes: 100,
            iterations: 30,
            horizon: 4.0,
            region: Region::fifth_strip(),
            initial: StateSpec::default(),
            target: StateSpec {
                displacement: vec![(1, 1.0), (2, 1.0)],
                velocity: vec![(1, 1.0)],
            },
            beam: None,
            projection: beam_projection_rule(),
            projection_tol: projection_tolerance(),
            tol: 1e-9,
            samples_per_unit: None,
            cost_checkpoints: cost_checkpoints(),
            field_grid: field_grid(),
            out_dir: PathBuf::from("runs/example1"),
            seed: 0,
            plot_data: false,
        }
    }

    /// Beam `(k_o, a_o, b_o) = (200, 1/2, 10000)` centred at `(1/2, 1/2)`
    /// toward the zero target, `G = 1000`, `N = 100`.
    pub fn example2() -> Self {
        Self {
            experiment: ExperimentKind::Example2,
            modes: 1000,
            iterations: 100,
            target: StateSpec::default(),
            beam: Some(BeamParams::default()),
            cost_checkpoints: vec![0, 5, 10, 20, 50, 100],
            out_dir: PathBuf::from("runs/example2"),
            ..Self::example1()
        }
    }

    /// Example 1 geometry with a single-mode target, as a starting point.
    pub fn custom() -> Self {
        Self {
            experiment: ExperimentKind::Custom,
            modes: 25,
            iterations: 5,
            target: StateSpec {
                displacement: vec![(1, 1.0)],
                velocity: vec![],
            },
            out_dir: PathBuf::from("runs/custom"),
            ..Self::example1()
        }
    }

    pub fn defaults_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Example1 => Self::example1(),
            ExperimentKind::Example2 => Self::example2(),
            ExperimentKind::Custom => Self::custom(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::invalid(
                "schema",
                format!("expected `{CONFIG_SCHEMA}`, found `{}`", self.schema),
            ));
        }
        if self.modes == 0 {
            return Err(Error::invalid("modes", "G must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "T must be positive"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", "tolerance must lie in (0, 1)"));
        }
        if !(self.projection_tol > 0.0) {
            return Err(Error::invalid("projection_tol", "must be positive"));
        }
        if self.field_grid < 2 {
            return Err(Error::invalid("field_grid", "need at least 2 points per side"));
        }
        if let Some(beam) = &self.beam {
            beam.validate()?;
        }
        self.initial.to_state(self.modes)?;
        self.target.to_state(self.modes)?;
        Ok(())
    }

    /// `(initial, target)` spectral states; the beam, when present, is
    /// projected by the caller.
    pub(crate) fn states(&self, ms: &ModeSet) -> Result<(SpectralState, SpectralState)> {
        Ok((self.initial.to_state(ms.len())?, self.target.to_state(ms.len())?))
    }
}

/// Command-line values that replace config file entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub modes: Option<usize>,
    pub iterations: Option<usize>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub plot_data: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(g) = self.modes {
            cfg.modes = g;
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = o.clone();
        }
        cfg.plot_data |= self.plot_data;
        cfg.validate()
    }
}
