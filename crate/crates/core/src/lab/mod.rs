//! Scenario loading, command orchestration and report files.
//!
//! A run writes one `<command>.csv` per command with the columns
//! `scenario,theorem_tag,quantity,value,bound,pass`, any auxiliary CSV the
//! command produces, and `summary.json`. Output depends only on the
//! scenario text, the seed and the options.

pub mod commands;
pub mod report;
pub mod scenario;

use std::collections::BTreeMap;
use std::path::Path;

pub use commands::{run_command, Command, RunOptions};
pub use report::{CommandSummary, Report, Row, RunSummary};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

use crate::par;

/// Scenario files shipped with the crate, as `(name, TOML text)`.
pub const BUNDLED: [(&str, &str); 7] = [
    (
        "density_oneshot",
        include_str!("../../scenarios/density_oneshot.toml"),
    ),
    (
        "density_full",
        include_str!("../../scenarios/density_full.toml"),
    ),
    (
        "nondensity",
        include_str!("../../scenarios/nondensity.toml"),
    ),
    ("bl_audit", include_str!("../../scenarios/bl_audit.toml")),
    (
        "monotonicity",
        include_str!("../../scenarios/monotonicity.toml"),
    ),
    ("collapse", include_str!("../../scenarios/collapse.toml")),
    ("ignition", include_str!("../../scenarios/ignition.toml")),
];

pub fn bundled(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text))
}

pub fn bundled_suite() -> Result<Vec<Scenario>, ScenarioError> {
    BUNDLED
        .iter()
        .map(|(_, text)| parse_scenario(text))
        .collect()
}

/// Reports for `cmd` over `scenarios`; `All` expands to every command a
/// scenario has a section for. A single command skips scenarios without
/// its section unless none has one. Scenarios run in parallel.
pub fn run_reports(cmd: Command, scenarios: &[Scenario], opts: &RunOptions) -> Vec<Report> {
    let any = scenarios.iter().any(|s| cmd.applies_to(s));
    let per = par::map(scenarios, |s| {
        let cmds: Vec<Command> = match cmd {
            Command::All => Command::EACH
                .iter()
                .copied()
                .filter(|c| c.applies_to(s))
                .collect(),
            c if any && !c.applies_to(s) => vec![],
            c => vec![c],
        };
        cmds.into_iter()
            .map(|c| run_command(c, s, opts))
            .collect::<Vec<_>>()
    });
    per.into_iter().flatten().collect()
}

/// Runs and writes everything under `out_dir`.
///
/// Reports of one command from several scenarios share a file. Returns the
/// summary; `summary.passed` is the conjunction of every row.
pub fn execute(
    cmd: Command,
    scenarios: &[Scenario],
    out_dir: &Path,
    opts: &RunOptions,
) -> std::io::Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    let reports = run_reports(cmd, scenarios, opts);
    let mut by_command: BTreeMap<String, Vec<&Report>> = BTreeMap::new();
    for r in &reports {
        by_command.entry(r.command.clone()).or_default().push(r);
    }
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    for (command, reps) in &by_command {
        let mut csv = String::new();
        for (i, r) in reps.iter().enumerate() {
            let body = r.to_csv(opts.strict);
            // Keep only the first header.
            csv.push_str(if i == 0 {
                &body
            } else {
                body.split_once('\n').map(|x| x.1).unwrap_or("")
            });
        }
        files.insert(format!("{command}.csv"), csv);
    }
    let mut commands = Vec::new();
    for r in &reports {
        let mut names = vec![format!("{}.csv", r.command)];
        for (name, contents) in &r.extra {
            let name = if files.contains_key(name) {
                format!("{}_{name}", r.scenario)
            } else {
                name.clone()
            };
            files.insert(name.clone(), contents.clone());
            names.push(name);
        }
        commands.push(CommandSummary {
            scenario: r.scenario.clone(),
            command: r.command.clone(),
            seed: scenarios
                .iter()
                .find(|s| s.id == r.scenario)
                .map_or(opts.seed.unwrap_or(0), |s| opts.seed_for(s)),
            rows: r.rows.len(),
            failures: r.failures(opts.strict),
            warnings: r.rows.iter().filter(|x| x.warn).count(),
            passed: r.passed(opts.strict),
            files: names,
        });
    }
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        strict: opts.strict,
        passed: !commands.is_empty() && commands.iter().all(|c| c.passed),
        commands,
    };
    for (name, contents) in &files {
        report::write_atomic(&out_dir.join(name), contents)?;
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    report::write_atomic(&out_dir.join("summary.json"), &(json + "\n"))?;
    Ok(summary)
}
