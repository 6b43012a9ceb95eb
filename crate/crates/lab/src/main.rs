use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use grw_core::kv::KeyValues;
use grw_lab::{emit_report, list_scenarios, run_scenario, Format, LabError, ScenarioConfig};

/// Run named numerical scenarios and write JSON/CSV reports.
///
/// Exit status: 0 when every run scenario passes, 1 when one fails,
/// 2 on usage errors or unknown scenario ids.
#[derive(Debug, Parser)]
#[command(name = "grwlab", version)]
struct Cli {
    /// Scenario id, or `all`.
    #[arg(long)]
    scenario: Option<String>,
    /// Key-value file with scenario, res, tol, seed, out, format and ambient keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Primary resolution (meaning depends on the scenario; see --list).
    #[arg(long)]
    res: Option<usize>,
    /// Tolerance scale factor applied to every metric.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; reports go to <out>/<scenario>/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv or both.
    #[arg(long)]
    format: Option<Format>,
    /// Print the scenario catalogue and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("grwlab: {e}");
            match e {
                LabError::UnknownScenario(_) | LabError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool, LabError> {
    if cli.list {
        for s in list_scenarios() {
            println!("{:<28} res = {} ({})", s.id, s.default_res, s.res_meaning);
            println!("{:<28} {}", "", s.anchor);
        }
        return Ok(true);
    }
    let kv = match &cli.config {
        Some(path) => KeyValues::parse(&std::fs::read_to_string(path)?).map_err(|e| LabError::Usage(e.to_string()))?,
        None => KeyValues::default(),
    };
    let mut base = ScenarioConfig::from_kv(&kv).map_err(|e| LabError::Usage(e.to_string()))?;
    if let Some(s) = cli.scenario {
        base.scenario = s;
    }
    if base.scenario.is_empty() {
        return Err(LabError::Usage("--scenario is required (or set `scenario` in --config)".into()));
    }
    if cli.res.is_some() {
        base.res = cli.res;
    }
    if let Some(t) = cli.tol {
        base.tol_scale = t;
    }
    if let Some(s) = cli.seed {
        base.seed = s;
    }
    let out = cli.out.or_else(|| kv.get_str("out").map(PathBuf::from));
    let format = match cli.format {
        Some(f) => f,
        None => kv.get_str("format").unwrap_or("json").parse()?,
    };

    let ids: Vec<String> = if base.scenario == "all" {
        list_scenarios().iter().map(|s| s.id.to_string()).collect()
    } else {
        vec![base.scenario.clone()]
    };
    let mut all_pass = true;
    for id in ids {
        let cfg = ScenarioConfig { scenario: id, ..base.clone() };
        let report = run_scenario(&cfg)?;
        let failed: Vec<&str> = report.metrics.iter().filter(|m| !m.passes()).map(|m| m.name.as_str()).collect();
        println!(
            "{:<28} {} ({} metrics, {} ms){}",
            report.scenario,
            if report.passed() { "PASS" } else { "FAIL" },
            report.metrics.len(),
            report.wall_ms,
            if failed.is_empty() { String::new() } else { format!(" failing: {}", failed.join(", ")) }
        );
        if let Some(dir) = &out {
            emit_report(&report, format, dir)?;
        }
        all_pass &= report.passed();
    }
    Ok(all_pass)
}
