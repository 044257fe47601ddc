//! On-disk JSON configuration shared by `simulate`, `speed`, `measure` and
//! `sweep`. Everything is deterministic: a config fully determines every
//! byte of output.

use anomalkpp_core::sim::WindowPolicy;
use anomalkpp_core::speed::FieldComponent;
use anomalkpp_core::Params;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub params: Params,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub init: InitConfig,
    pub t_end: f64,
    /// Time between snapshot files (`simulate`) or recorded invasion-point
    /// rows (`speed`, `measure`).
    #[serde(default = "default_stride")]
    pub snapshot_stride: f64,
    #[serde(default)]
    pub window: WindowConfig,
}

fn default_stride() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitConfig {
    /// Both fields 1 for `x <= step_x`, 0 beyond.
    Heaviside { step_x: f64 },
    /// Compactly supported raised-cosine bumps of the given heights.
    Bump {
        lo: f64,
        hi: f64,
        height_u: f64,
        height_v: f64,
    },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Heaviside { step_x: 0.0 }
    }
}

/// Overrides for the moving-window policy; unset fields keep the library
/// defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub enabled: Option<bool>,
    pub tail_floor: Option<f64>,
    pub right_margin_cells: Option<usize>,
    pub chunk_cells: Option<usize>,
    pub keep_behind_cells: Option<usize>,
    pub plateau_tol: Option<f64>,
}

impl WindowConfig {
    pub fn apply(&self, mut policy: WindowPolicy) -> WindowPolicy {
        if let Some(x) = self.enabled {
            policy.enabled = x;
        }
        if let Some(x) = self.tail_floor {
            policy.tail_floor = x;
        }
        if let Some(x) = self.right_margin_cells {
            policy.right_margin_cells = x;
        }
        if let Some(x) = self.chunk_cells {
            policy.chunk_cells = x;
        }
        if let Some(x) = self.keep_behind_cells {
            policy.keep_behind_cells = x;
        }
        if let Some(x) = self.plateau_tol {
            policy.plateau_tol = x;
        }
        policy
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Field level whose rightmost crossing is tracked.
    pub level: f64,
    pub component: Component,
    /// Fit window `[t0, t1]`; defaults to the second half of the run.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            level: 0.01,
            component: Component::U,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    U,
    V,
}

impl From<Component> for FieldComponent {
    fn from(c: Component) -> FieldComponent {
        match c {
            Component::U => FieldComponent::U,
            Component::V => FieldComponent::V,
        }
    }
}
