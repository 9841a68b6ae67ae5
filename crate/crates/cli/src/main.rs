use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use log::error;

use gridforge::opf::{Level, SolveConfig};
use gridforge::pipeline::{self, RunConfig, PipelineError};

#[derive(Parser)]
#[command(name = "gridforge", version, about = "Transmission models from OSM power data, solved with DC and AC OPF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from state extracts and solve it.
    Build {
        /// GeoJSON extract; repeat for several states.
        #[arg(long = "state", required = true, num_args = 1..)]
        states: Vec<PathBuf>,
        #[arg(long)]
        fixtures: PathBuf,
        /// UTC hour of the demand snapshot.
        #[arg(long, default_value_t = 16)]
        hour: u8,
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long)]
        multi_state: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dc_only: bool,
        #[arg(long, default_value = "L5")]
        max_level: Level,
    },
    /// Solve an existing model.json; solutions are written beside it.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dc_only: bool,
        #[arg(long, default_value = "L5")]
        max_level: Level,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn solve_config(dc_only: bool, max_level: Level) -> SolveConfig {
    SolveConfig {
        dc_only,
        max_level,
        ..Default::default()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Build {
            states,
            fixtures,
            hour,
            date,
            multi_state,
            out,
            dc_only,
            max_level,
        } => {
            let config = RunConfig {
                hour,
                date,
                multi_state,
                solve: solve_config(dc_only, max_level),
                ..RunConfig::new(states, fixtures, out)
            };
            let outcome = pipeline::run_pipeline(&config);
            if let Some(e) = &outcome.failure {
                error!("{e}");
            }
            print_summary(&config.out_dir);
            outcome.exit_code()
        }
        Command::Solve {
            model,
            dc_only,
            max_level,
        } => match pipeline::solve_model_file(&model, &solve_config(dc_only, max_level)) {
            Ok(r) => {
                for s in r.dc.iter().chain(r.ac.iter()) {
                    println!(
                        "{:?} {} at {}: ${:.2}/h, loss {:.2}%",
                        s.formulation, s.status, s.level, s.objective_usd_per_hr, pct(s.loss_pct)
                    );
                }
                0
            }
            Err(e) => fail(&e),
        },
        Command::Report { run } => {
            if print_summary(&run) {
                0
            } else {
                4
            }
        }
    };
    ExitCode::from(code as u8)
}

fn fail(e: &PipelineError) -> i32 {
    error!("{e}");
    e.exit_code()
}

fn print_summary(dir: &Path) -> bool {
    let path = dir.join(pipeline::REPORT_FILE);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            error!("{}: {e}", path.display());
            return false;
        }
    };
    let report: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            error!("{}: {e}", path.display());
            return false;
        }
    };
    println!("run {}", dir.display());
    if let Some(m) = report.get("model").filter(|m| !m.is_null()) {
        println!(
            "  buses {}  lines {}  transformers {}  dc links {}  generators {}",
            m["buses"], m["ac_lines"], m["transformers"], m["dclinks"], m["generators"]
        );
        println!("  load {:.1} MW  capacity {:.1} MW", num(&m["load_mw"]), num(&m["capacity_mw"]));
    }
    if let Some(rows) = report["coverage"].as_array() {
        for r in rows {
            let flag = r["flag"].as_str().unwrap_or("");
            println!("  coverage {} kV: {:.2}x {flag}", r["voltage_kv"], num(&r["ratio"]));
        }
    }
    if let Some(opf) = report.get("opf").filter(|o| !o.is_null()) {
        for key in ["dc", "ac"] {
            let s = &opf[key];
            if s.is_null() {
                continue;
            }
            println!(
                "  {key}: {} at {}{}  ${:.2}/h  ${:.2}/MWh  loss {:.2}%",
                s["status"].as_str().unwrap_or("?"),
                s["level"].as_str().unwrap_or("?"),
                if s["ac1"].as_bool() == Some(true) { "+AC1" } else { "" },
                num(&s["objective_usd_per_hr"]),
                num(&s["cost_usd_per_mwh"]),
                pct(num(&s["loss_pct"])),
            );
        }
    }
    if let Some(e) = report.get("error").filter(|e| !e.is_null()) {
        println!("  failed at {}: {}", e["stage"].as_str().unwrap_or("?"), e["message"].as_str().unwrap_or(""));
    }
    true
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn pct(x: f64) -> f64 {
    (x * 100.0).round() / 100.0 + 0.0
}
