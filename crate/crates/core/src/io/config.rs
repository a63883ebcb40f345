//! TOML run configuration: a scenario (built-in name or inline table) plus flow parameters.

use serde::{Deserialize, Serialize};

use super::scenario::{builtin, ScenarioSpec};
use super::IoError;
use crate::driver::{paper_time_step, ConfigError, FlowConfig, Mode};
use crate::steps::ReductionCaps;

pub const DEFAULT_EPS: f64 = 0.02;
pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_T_END: f64 = 0.5;

/// Optional values for every [`FlowConfig`] field; unset fields take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_quad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<ReductionCaps>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motion_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_when_stationary: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        FlowOverrides { $($f: $b.$f.or($a.$f)),* }
    };
}

impl FlowOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Fields of `other` take precedence.
    pub fn merged(&self, other: &FlowOverrides) -> FlowOverrides {
        let (a, b) = (self.clone(), other.clone());
        merge_fields!(a, b; mode, j, eps, dt, kappa, t_end, h_max, h_quad, caps, motion_cap, snapshot_every,
            stationarity_tol, stationarity_window, stop_when_stationary, jitter, seed)
    }

    /// Every field set from a resolved configuration.
    pub fn full(c: &FlowConfig) -> Self {
        FlowOverrides {
            mode: Some(c.mode),
            j: Some(c.j),
            eps: Some(c.eps),
            dt: Some(c.dt),
            kappa: Some(c.kappa),
            t_end: Some(c.t_end),
            h_max: Some(c.h_max),
            h_quad: Some(c.h_quad),
            caps: Some(c.caps),
            motion_cap: Some(c.motion_cap),
            snapshot_every: Some(c.snapshot_every),
            stationarity_tol: Some(c.stationarity_tol),
            stationarity_window: Some(c.stationarity_window),
            stop_when_stationary: Some(c.stop_when_stationary),
            jitter: Some(c.jitter),
            seed: Some(c.seed),
        }
    }

    /// Apply defaults and check the result.
    ///
    /// Desk mode derives `j` from the drift target; paper mode requires `j` and defaults
    /// `dt` to the admissible power of two and the caps to `(1/j², 1/j)`.
    pub fn resolve(&self) -> Result<FlowConfig, ConfigError> {
        let eps = self.eps.unwrap_or(DEFAULT_EPS);
        let t_end = self.t_end.unwrap_or(DEFAULT_T_END);
        let mode = self.mode.unwrap_or(Mode::Desk);
        let dt = match (self.dt, mode) {
            (Some(dt), _) => dt,
            (None, Mode::Desk) => DEFAULT_DT,
            (None, Mode::Paper) => paper_time_step(eps, self.kappa.unwrap_or(crate::driver::default_kappa(1))).1,
        };
        let mut c = FlowConfig::desk(eps, dt, t_end);
        c.mode = mode;
        if let Some(h) = self.h_max {
            c.h_max = h;
            c.h_quad = h.min(eps / 4.0);
            c.caps = ReductionCaps::desk(h, eps);
        }
        if mode == Mode::Paper {
            let j = self.j.ok_or(ConfigError::Semantic { field: "j", message: "is required in paper mode".into() })?;
            c.j = j;
            if j > 0 {
                c.caps = ReductionCaps::paper(j);
            }
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(j, kappa, h_quad, caps, motion_cap, snapshot_every, stationarity_tol, stationarity_window, stop_when_stationary, jitter, seed);
        c.check()?;
        Ok(c)
    }
}

/// How the config file names its scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Builtin(String),
    Inline(Box<ScenarioSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioRef,
    #[serde(default, skip_serializing_if = "FlowOverrides::is_empty")]
    pub flow: FlowOverrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub flow: FlowConfig,
    pub scenario: ScenarioSpec,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

/// Parse the raw file without applying defaults.
pub fn parse_config_file(text: &str) -> Result<ConfigFile, IoError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        IoError::Parse { line, column, message: e.message().to_string() }
    })
}

/// Parse, look up the scenario and resolve the flow parameters.
///
/// Precedence, lowest first: defaults, scenario overrides, the file's `[flow]` table, `cli`.
pub fn parse_config(text: &str, cli: &FlowOverrides) -> Result<RunConfig, IoError> {
    let file = parse_config_file(text)?;
    let scenario = match file.scenario {
        ScenarioRef::Builtin(name) => builtin(&name).ok_or(IoError::UnknownScenario(name))?,
        ScenarioRef::Inline(s) => *s,
    };
    let flow = scenario.overrides.merged(&file.flow).merged(cli).resolve()?;
    Ok(RunConfig { flow, scenario })
}

/// Fully explicit TOML that parses back to the same [`RunConfig`].
pub fn serialize_config(cfg: &RunConfig) -> Result<String, IoError> {
    // the scenario keeps its overrides; the explicit flow table outranks them
    let file = ConfigFile { scenario: ScenarioRef::Inline(Box::new(cfg.scenario.clone())), flow: FlowOverrides::full(&cfg.flow) };
    toml::to_string(&file).map_err(|e| IoError::Format { row: 0, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_and_column() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }

    #[test]
    fn later_overrides_win() {
        let a = FlowOverrides { eps: Some(0.1), dt: Some(1e-3), ..Default::default() };
        let b = FlowOverrides { eps: Some(0.05), ..Default::default() };
        let m = a.merged(&b);
        assert_eq!(m.eps, Some(0.05));
        assert_eq!(m.dt, Some(1e-3));
    }
}
