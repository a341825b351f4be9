use std::path::{Path, PathBuf};

use serde::Serialize;
use stability_lab::adaptivity::{advanced_composition_check, linear_composition_check, CompositionReport, Round};
use stability_lab::generalization::{
    monitor_exact, monitor_run, Estimate, MonitorConfig, MonitorExact, ReconstructThenOverfit,
};
use stability_lab::notions::{
    dp_certify, lmi_certify_induced, lml_certify_induced, lss_notion_certify, mi_certify_induced,
    ml_certify_induced, run_separation, ts_certify, verify_implication, Implication, ImplicationParams,
    ImplicationReport, Instance, NotionCertificate, ParityParams, ReleaseParams, SeparationKind,
};
use stability_lab::prob::FiniteDist;
use stability_lab::world::{induce, Budget, Domain, World};
use stability_lab::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::format::{fmt_num, fmt_opt, to_canonical_json, to_csv};
use crate::scenario::{MonitorAnalyst, NotionName, Scenario, SeparationSection, Task};

pub const DEFAULT_GRID: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Certify,
    Experiment,
}

/// Command-line settings that override or complete a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u128>,
    pub grid: Option<Vec<f64>>,
}

/// A rendered report file, not yet written.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Everything a command produced, plus a short human-readable summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(self.header.clone());
        for row in &self.rows {
            out.push('\n');
            out.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        out
    }
}

fn bundle(stem: &str, table: Table, json: &impl Serialize, summary: Option<String>) -> CliResult<Outcome> {
    let csv = to_csv(&table.header, &table.rows)?;
    Ok(Outcome {
        artifacts: vec![
            Artifact {
                name: format!("{stem}.csv"),
                contents: csv,
            },
            Artifact {
                name: format!("{stem}.json"),
                contents: to_canonical_json(json)?,
            },
        ],
        summary: summary.unwrap_or_else(|| table.render()),
    })
}

/// Runs the scenario's task without touching the filesystem.
pub fn evaluate(command: Command, scenario: &Scenario, overrides: &Overrides) -> CliResult<Outcome> {
    match (command, scenario.task.is_experiment()) {
        (Command::Certify, true) => {
            return Err(CliError::field(
                "task",
                format!("`{}` is an experiment; use the experiment command", scenario.task.name()),
            ))
        }
        (Command::Experiment, false) => {
            return Err(CliError::field(
                "task",
                format!("`{}` is a certification task; use the certify command", scenario.task.name()),
            ))
        }
        _ => {}
    }
    let budget = overrides.budget.map(Budget::with_max_tuples).unwrap_or_default();
    let grid = overrides
        .grid
        .clone()
        .or_else(|| scenario.eps_grid.clone())
        .unwrap_or_else(|| DEFAULT_GRID.to_vec());
    match scenario.task {
        Task::Certify => certify(scenario, budget, &grid),
        Task::Implication => implication(scenario, budget, &grid),
        Task::Separation => separation(scenario),
        Task::Compose => compose(scenario, budget, &grid),
        Task::Monitor => monitor(scenario, budget, overrides.seed.or(scenario.seed)),
    }
}

/// Writes every artifact into `out`, creating it if needed.
pub fn write_artifacts(out: &Path, artifacts: &[Artifact]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = out.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn world(scenario: &Scenario, budget: Budget) -> CliResult<World<f64>> {
    let spec = scenario
        .world
        .as_ref()
        .ok_or_else(|| CliError::field("world", "missing"))?;
    Ok(spec.build(budget)?)
}

#[derive(Serialize)]
struct CertifyBundle<'a> {
    task: &'static str,
    eps_grid: &'a [f64],
    certificates: Vec<NotionCertificate<f64>>,
}

fn certify(scenario: &Scenario, budget: Budget, grid: &[f64]) -> CliResult<Outcome> {
    let section = scenario.certify.clone().unwrap_or(crate::scenario::CertifySection {
        notions: None,
        ts_delta: 0.0,
    });
    if !(0.0..=1.0).contains(&section.ts_delta) {
        return Err(CliError::field("certify.ts_delta", "must lie in [0, 1]"));
    }
    let mut notions = section.notions.unwrap_or_else(|| NotionName::ALL.to_vec());
    notions.sort();
    notions.dedup();
    let w = world(scenario, budget)?;
    let needs_induced = notions.iter().any(|n| !matches!(n, NotionName::Dp | NotionName::Ts));
    let ind = if needs_induced { Some(induce(&w)?) } else { None };
    let ind = || ind.as_ref().ok_or_else(|| CliError::Invariant("induced distributions missing".into()));

    let mut certs = Vec::new();
    for notion in notions {
        match notion {
            NotionName::Dp => {
                for &e in grid {
                    certs.push(dp_certify(&w, e)?);
                }
            }
            NotionName::Mi => {
                for &e in grid {
                    certs.push(mi_certify_induced(ind()?, e)?);
                }
            }
            NotionName::Lmi => {
                for &e in grid {
                    certs.push(lmi_certify_induced(ind()?, e)?);
                }
            }
            NotionName::Ts => {
                for &e in grid {
                    certs.push(ts_certify(&w, e, section.ts_delta)?);
                }
            }
            NotionName::Ml => certs.push(ml_certify_induced(ind()?)?),
            NotionName::Lml => certs.push(lml_certify_induced(ind()?)?),
            NotionName::Lss => {
                for &e in grid {
                    certs.push(lss_notion_certify(ind()?, e)?);
                }
            }
        }
    }

    let mut table = Table::new(&["notion", "eps", "delta", "delta_star", "eta_star", "leakage", "witness_size"]);
    for c in &certs {
        table.rows.push(vec![
            c.notion.name().to_string(),
            fmt_opt(c.eps),
            fmt_opt(c.delta),
            fmt_opt(c.delta_star),
            fmt_opt(c.eta_star),
            fmt_opt(c.leakage),
            c.witness.size().to_string(),
        ]);
    }
    bundle(
        "certify",
        table,
        &CertifyBundle {
            task: "certify",
            eps_grid: grid,
            certificates: certs,
        },
        None,
    )
}

#[derive(Serialize)]
struct ImplicationEntry {
    theorem: &'static str,
    eps: f64,
    delta: f64,
    applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ImplicationReport<f64>>,
}

fn implication(scenario: &Scenario, budget: Budget, grid: &[f64]) -> CliResult<Outcome> {
    let section = scenario.implication.clone().unwrap_or(crate::scenario::ImplicationSection {
        theorems: None,
        delta: 0.0,
    });
    let theorems: Vec<Implication> = match &section.theorems {
        None => Implication::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|name| {
                Implication::ALL
                    .into_iter()
                    .find(|t| t.name() == name)
                    .ok_or_else(|| CliError::field("implication.theorems", format!("unknown theorem `{name}`")))
            })
            .collect::<CliResult<_>>()?,
    };
    let w = world(scenario, budget)?;
    let mut entries = Vec::new();
    for th in theorems {
        for &eps in grid {
            let params = ImplicationParams {
                eps,
                delta: section.delta,
            };
            let entry = match verify_implication(th, Instance::World(&w), params) {
                Ok(report) => ImplicationEntry {
                    theorem: th.name(),
                    eps,
                    delta: section.delta,
                    applicable: true,
                    reason: None,
                    report: Some(report),
                },
                Err(e @ (CoreError::Precondition(_) | CoreError::Unsupported(_))) => ImplicationEntry {
                    theorem: th.name(),
                    eps,
                    delta: section.delta,
                    applicable: false,
                    reason: Some(e.to_string()),
                    report: None,
                },
                Err(e) => return Err(e.into()),
            };
            entries.push(entry);
        }
    }

    let mut table = Table::new(&[
        "theorem",
        "eps",
        "delta",
        "applicable",
        "transferred_eps",
        "transferred_delta",
        "conclusion",
        "pass",
    ]);
    for e in &entries {
        let (te, td, concl, pass) = match &e.report {
            Some(r) => (
                fmt_num(r.transferred_eps),
                fmt_num(r.transferred_delta),
                fmt_opt(r.conclusion.delta_star.or(r.conclusion.eta_star)),
                r.pass.to_string(),
            ),
            None => Default::default(),
        };
        table.rows.push(vec![
            e.theorem.to_string(),
            fmt_num(e.eps),
            fmt_num(e.delta),
            e.applicable.to_string(),
            te,
            td,
            concl,
            pass,
        ]);
    }
    bundle("implication", table, &entries, None)
}

fn separation(scenario: &Scenario) -> CliResult<Outcome> {
    let section = scenario
        .separation
        .as_ref()
        .ok_or_else(|| CliError::field("separation", "missing"))?;
    let kind = match *section {
        SeparationSection::Parity { eps, alpha, n } => SeparationKind::Parity(ParityParams { eps, alpha, n }),
        SeparationSection::ElementRelease { big_n, n, delta } => {
            if big_n == 0 {
                return Err(CliError::field("separation.big_n", "must be positive"));
            }
            SeparationKind::ElementRelease(ReleaseParams::uniform(big_n, n, delta))
        }
    };
    let report = run_separation(&kind)?;
    let mut table = Table::new(&["which", "prong", "measured", "threshold", "margin", "vacuous", "pass"]);
    for p in &report.prongs {
        table.rows.push(vec![
            report.which.clone(),
            p.name.clone(),
            fmt_num(p.measured),
            fmt_num(p.threshold),
            fmt_num(p.margin),
            p.vacuous.to_string(),
            p.pass.to_string(),
        ]);
    }
    bundle("separation", table, &report, None)
}

#[derive(Serialize)]
struct ComposeEntry {
    composition: &'static str,
    report: CompositionReport<f64>,
}

fn compose(scenario: &Scenario, budget: Budget, grid: &[f64]) -> CliResult<Outcome> {
    let section = scenario
        .compose
        .as_ref()
        .ok_or_else(|| CliError::field("compose", "missing"))?;
    let w = world(scenario, budget)?;
    let mut rounds = Vec::with_capacity(section.rounds.len());
    for (i, round) in section.rounds.iter().enumerate() {
        let kernels = round
            .iter()
            .map(|(id, spec)| Ok((id.clone(), spec.build(w.frame())?)))
            .collect::<CliResult<Vec<_>>>()?;
        rounds.push(Round::new(kernels).map_err(|e| CliError::field(format!("compose.rounds[{i}]"), e.to_string()))?);
    }
    if rounds.is_empty() {
        return Err(CliError::field("compose.rounds", "at least one round is required"));
    }
    let analyst = section.analyst.build(&rounds)?;
    let k = rounds.len();
    let eps_sets: Vec<Vec<f64>> = match &section.eps {
        Some(list) => {
            if list.len() != k {
                return Err(CliError::field(
                    "compose.eps",
                    format!("{} values for {k} rounds", list.len()),
                ));
            }
            vec![list.clone()]
        }
        None => grid.iter().map(|&e| vec![e; k]).collect(),
    };

    let mut entries = Vec::new();
    for eps in &eps_sets {
        entries.push(ComposeEntry {
            composition: "linear",
            report: linear_composition_check(&w, &analyst, &rounds, eps)?,
        });
        if let Some(dp) = section.delta_prime {
            entries.push(ComposeEntry {
                composition: "advanced",
                report: advanced_composition_check(&w, &analyst, &rounds, eps, dp)?,
            });
        }
    }

    let mut table = Table::new(&[
        "composition",
        "round_eps",
        "bound_eps",
        "bound_delta",
        "measured_delta_star",
        "unstable_mass",
        "pass",
    ]);
    for e in &entries {
        let r = &e.report;
        table.rows.push(vec![
            e.composition.to_string(),
            r.rounds.iter().map(|c| fmt_num(c.eps)).collect::<Vec<_>>().join(";"),
            fmt_num(r.bound_eps),
            fmt_num(r.bound_delta),
            fmt_num(r.measured_delta_star),
            fmt_num(r.unstable_mass),
            r.pass.to_string(),
        ]);
    }
    bundle("compose", table, &entries, None)
}

#[derive(Serialize)]
struct MonitorSummary {
    seed: u64,
    t: usize,
    trials: usize,
    n: usize,
    domain_size: usize,
    delta_bound: f64,
    analyst: &'static str,
    /// Indicator queries used to reconstruct the sample.
    reconstruction_queries: usize,
    /// Reconstruction queries plus the final overfitting query.
    queries_per_copy: usize,
    distribution_error: Estimate,
    sample_error: Estimate,
    gap: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<MonitorExact>,
}

fn monitor(scenario: &Scenario, budget: Budget, seed: Option<u64>) -> CliResult<Outcome> {
    let section = scenario
        .monitor
        .as_ref()
        .ok_or_else(|| CliError::field("monitor", "missing"))?;
    let seed = seed.ok_or_else(|| CliError::field("seed", "a Monte Carlo task needs a seed (scenario or --seed)"))?;
    if section.trials == 0 {
        return Err(CliError::field("monitor.trials", "must be positive"));
    }
    let size = section.element_weights.len();
    let domain = Domain::numbered(size).map_err(|e| CliError::field("monitor.element_weights", e.to_string()))?;
    let total: f64 = section.element_weights.iter().sum();
    if !(total > 0.0) || section.element_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(CliError::field("monitor.element_weights", "weights must be non-negative with a positive sum"));
    }
    let weights = section.element_weights.iter().map(|w| w / total).collect();
    let el = FiniteDist::new(domain.space().clone(), weights)
        .map_err(|e| CliError::field("monitor.element_weights", e.to_string()))?;
    let analyst = match section.analyst {
        MonitorAnalyst::ReconstructThenOverfit => ReconstructThenOverfit::new(size, section.n, section.delta_bound)?,
    };
    let config = MonitorConfig {
        t: section.t,
        trials: section.trials,
        seed,
    };
    let report = monitor_run(&el, section.n, &analyst, &section.answerer, &config)?;
    let exact = if section.exact {
        Some(monitor_exact(&el, section.n, &analyst, &section.answerer, section.t, &budget)?)
    } else {
        None
    };

    let mut table = Table::new(&["trial", "copy", "query_id", "max_error", "sample_error", "selected"]);
    for c in &report.copies {
        table.rows.push(vec![
            c.trial.to_string(),
            c.copy.to_string(),
            c.query_id.clone(),
            fmt_num(c.max_error),
            fmt_num(c.sample_error),
            c.selected.to_string(),
        ]);
    }
    let summary = MonitorSummary {
        seed,
        t: report.t,
        trials: report.trials,
        n: section.n,
        domain_size: size,
        delta_bound: section.delta_bound,
        analyst: "reconstruct_then_overfit",
        reconstruction_queries: size,
        queries_per_copy: report.queries_per_copy,
        distribution_error: report.distribution_error,
        sample_error: report.sample_error,
        gap: report.gap,
        exact,
    };
    let text = format!(
        "monitor: t = {}, trials = {}, gap = {} ± {} (95% CI [{}, {}])",
        summary.t,
        summary.trials,
        fmt_num(summary.gap.mean),
        fmt_num(1.96 * summary.gap.std_err),
        fmt_num(summary.gap.ci_low),
        fmt_num(summary.gap.ci_high),
    );
    bundle("monitor", table, &summary, Some(text))
}
