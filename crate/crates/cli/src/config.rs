use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use semitoric::models::ModelDescriptor;
use semitoric::singularities::BaseBox;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bifurcation,
    Monodromy,
    Taylor,
    Polygon,
    Dh,
    Spectrum,
    Invert,
    Converge,
    ReproduceFigures,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bifurcation => "bifurcation",
            Command::Monodromy => "monodromy",
            Command::Taylor => "taylor",
            Command::Polygon => "polygon",
            Command::Dh => "dh",
            Command::Spectrum => "spectrum",
            Command::Invert => "invert",
            Command::Converge => "converge",
            Command::ReproduceFigures => "reproduce-figures",
        }
    }

    fn needs_model(&self) -> bool {
        !matches!(self, Command::Invert | Command::ReproduceFigures)
    }
}

fn default_tol() -> f64 {
    1e-9
}
fn default_half_width() -> f64 {
    0.4
}
fn default_radius() -> f64 {
    0.1
}
fn default_degree() -> usize {
    3
}
fn default_cut_sign() -> i8 {
    1
}
fn default_mc_samples() -> usize {
    100_000
}
fn default_seed() -> u64 {
    42
}
fn default_out() -> PathBuf {
    PathBuf::from("semitoric-out")
}

/// Everything one run needs. Unset optional fields fall back to per-model
/// defaults when the command runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub model: Option<ModelDescriptor>,
    #[serde(default)]
    pub hbar: Vec<f64>,
    #[serde(default)]
    pub l_max: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub window: Option<BaseBox>,
    /// Loop or disk centre; defaults to the first focus-focus value.
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_cut_sign")]
    pub cut_sign: i8,
    /// Cut signs, one per focus value; a single sign applies to all.
    #[serde(default)]
    pub eps: Vec<i8>,
    #[serde(default)]
    pub x_range: Option<[f64; 2]>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Spectrum CSV for `invert`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        serde_json::from_value(serde_json::json!({ "command": command })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("run config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the fields the command reads; errors name the field path.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.command.needs_model() && self.model.is_none() {
            return bad("model", "required".into());
        }
        if let Some(m) = &self.model {
            if let Err(e) = m.build() {
                return bad("model", e.to_string());
            }
            for (k, v) in &m.params {
                if !v.is_finite() {
                    return bad(&format!("model.params.{k}"), format!("not finite ({v})"));
                }
            }
        }
        for (i, h) in self.hbar.iter().enumerate() {
            if !(*h > 0.0 && *h <= 1.0) {
                return bad(&format!("hbar[{i}]"), format!("must lie in (0, 1] (got {h})"));
            }
        }
        match self.command {
            Command::Spectrum if self.hbar.len() != 1 => {
                return bad("hbar", "exactly one value required".into());
            }
            Command::Converge if !self.hbar.is_empty() && self.hbar.len() < 3 => {
                return bad("hbar", "at least three values required".into());
            }
            Command::Invert if self.input.is_none() => {
                return bad("input", "required".into());
            }
            _ => {}
        }
        if let Some(w) = &self.window {
            let fields = [w.a_lo, w.a_hi, w.b_lo, w.b_hi];
            if fields.iter().any(|v| !v.is_finite()) {
                return bad("window", "bounds must be finite".into());
            }
            if w.a_lo > w.a_hi {
                return bad("window.a_hi", format!("below window.a_lo ({} < {})", w.a_hi, w.a_lo));
            }
            if w.b_lo > w.b_hi {
                return bad("window.b_hi", format!("below window.b_lo ({} < {})", w.b_hi, w.b_lo));
            }
        }
        if let Some(c) = self.center
            && c.iter().any(|v| !v.is_finite()) {
                return bad("center", "must be finite".into());
            }
        for (field, v) in [("tol", self.tol), ("half_width", self.half_width), ("radius", self.radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, format!("must be positive (got {v})"));
            }
        }
        if self.degree == 0 {
            return bad("degree", "must be positive".into());
        }
        if self.cut_sign != 1 && self.cut_sign != -1 {
            return bad("cut_sign", format!("must be +1 or -1 (got {})", self.cut_sign));
        }
        for (i, e) in self.eps.iter().enumerate() {
            if *e != 1 && *e != -1 {
                return bad(&format!("eps[{i}]"), format!("must be +1 or -1 (got {e})"));
            }
        }
        if let Some(r) = self.resolution
            && r < 2 {
                return bad("resolution", format!("must be at least 2 (got {r})"));
            }
        if let Some([lo, hi]) = self.x_range
            && (!(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
                return bad("x_range", format!("need finite lo < hi (got [{lo}, {hi}])"));
            }
        if self.l_max == Some(0) {
            return bad("l_max", "must be positive".into());
        }
        if self.n_max == Some(0) {
            return bad("n_max", "must be positive".into());
        }
        Ok(())
    }
}
