//! Scenario files: one task plus the sections it needs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use stability_lab::adaptivity::AnalystSpec;
use stability_lab::generalization::Answerer;
use stability_lab::world::{KernelSpec, WorldSpec};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Certify,
    Implication,
    Separation,
    Compose,
    Monitor,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Certify => "certify",
            Task::Implication => "implication",
            Task::Separation => "separation",
            Task::Compose => "compose",
            Task::Monitor => "monitor",
        }
    }

    pub fn is_experiment(self) -> bool {
        matches!(self, Task::Compose | Task::Monitor)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub world: Option<WorldSpec>,
    #[serde(default)]
    pub certify: Option<CertifySection>,
    #[serde(default)]
    pub implication: Option<ImplicationSection>,
    #[serde(default)]
    pub separation: Option<SeparationSection>,
    #[serde(default)]
    pub compose: Option<ComposeSection>,
    #[serde(default)]
    pub monitor: Option<MonitorSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NotionName {
    Dp,
    Mi,
    Lmi,
    Ts,
    Ml,
    Lml,
    Lss,
}

impl NotionName {
    pub const ALL: [NotionName; 7] = [
        NotionName::Dp,
        NotionName::Mi,
        NotionName::Lmi,
        NotionName::Ts,
        NotionName::Ml,
        NotionName::Lml,
        NotionName::Lss,
    ];
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    /// Defaults to every notion.
    #[serde(default)]
    pub notions: Option<Vec<NotionName>>,
    /// The fixed δ of typical stability.
    #[serde(default)]
    pub ts_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicationSection {
    /// Names as in `dp_to_lmi`; defaults to all six.
    #[serde(default)]
    pub theorems: Option<Vec<String>>,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeparationSection {
    Parity { eps: f64, alpha: f64, n: usize },
    ElementRelease { big_n: usize, n: usize, delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSection {
    /// Each round maps query ids to kernels over the world's tuples.
    pub rounds: Vec<BTreeMap<String, KernelSpec>>,
    pub analyst: AnalystSpec,
    /// Per-round ε; when absent every grid ε is used for all rounds.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_prime: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorAnalyst {
    ReconstructThenOverfit,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub element_weights: Vec<f64>,
    pub n: usize,
    #[serde(default = "one")]
    pub delta_bound: f64,
    #[serde(default = "default_analyst")]
    pub analyst: MonitorAnalyst,
    pub answerer: Answerer,
    pub t: usize,
    #[serde(default = "one_usize")]
    pub trials: usize,
    /// Also compute the exact single-copy and selection values.
    #[serde(default)]
    pub exact: bool,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_analyst() -> MonitorAnalyst {
    MonitorAnalyst::ReconstructThenOverfit
}

impl Scenario {
    pub fn parse(path: &Path, text: &str) -> CliResult<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.check_sections()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    fn check_sections(&self) -> CliResult<()> {
        let needs_world = matches!(
            self.task,
            Task::Certify | Task::Implication | Task::Compose
        );
        if needs_world && self.world.is_none() {
            return Err(CliError::field("world", format!("required by task `{}`", self.task.name())));
        }
        let present = match self.task {
            Task::Certify => true,
            Task::Implication => true,
            Task::Separation => self.separation.is_some(),
            Task::Compose => self.compose.is_some(),
            Task::Monitor => self.monitor.is_some(),
        };
        if !present {
            return Err(CliError::field(self.task.name(), "section required by the task is missing"));
        }
        if let Some(grid) = &self.eps_grid {
            check_grid("eps_grid", grid)?;
        }
        Ok(())
    }
}

pub fn check_grid(field: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::field(field, "the ε grid is empty"));
    }
    if let Some(e) = grid.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(CliError::field(field, format!("ε = {e} must be finite and non-negative")));
    }
    Ok(())
}

/// Parses the `--grid` flag.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let grid = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::field("--grid", format!("`{}`: {e}", s.trim())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    check_grid("--grid", &grid)?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_report_position() {
        let err = Scenario::parse(Path::new("s.json"), "{\n  \"task\": \"certify\",\n  \"bogus\": 1\n}").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_section_is_a_field_error() {
        let err = Scenario::parse(Path::new("s.json"), r#"{"task": "monitor"}"#).unwrap_err();
        assert!(matches!(err, CliError::Field { .. }));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn grid_flag() {
        assert_eq!(parse_grid("0.1, 0.5,1").unwrap(), vec![0.1, 0.5, 1.0]);
        assert!(parse_grid("0.1,x").is_err());
        assert!(parse_grid("-1").is_err());
    }

    #[test]
    fn answerer_forms() {
        let s = Scenario::parse(
            Path::new("s.json"),
            r#"{"task":"monitor","seed":1,"monitor":{"element_weights":[1,1],"n":2,"t":1,
                "answerer":{"kind":"noise","family":"laplace","scale":0.2,"grid_step":0.05,"grid_halfwidth":1.0}}}"#,
        )
        .unwrap();
        assert!(matches!(s.monitor.unwrap().answerer, Answerer::Noise(_)));
    }
}
