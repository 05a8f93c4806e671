use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bsymp::construct::{glue_double, CosymplecticCobordism, GlueMode, GlueProfile};
use bsymp::runner::{self, RunOptions, RunReport};
use bsymp::scenario::{FieldValue, Scenario, ScenarioWriter, Task};
use bsymp::Error;

#[derive(Parser, Debug)]
#[command(name = "bsymp", version, about = "Construct and verify b-symplectic structures")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Grid points per axis, overriding scenario and task values
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Residual tolerance override (closedness, bracket, round trip, seam)
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Support radius C of the twist profile
    #[arg(long = "profile-C", alias = "profile-c", global = true, value_name = "X")]
    profile_c: Option<f64>,
    /// Period λ of the mapping-torus 1-form
    #[arg(long, global = true, value_name = "λ")]
    period: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every task of a scenario
    Run { file: PathBuf },
    /// Default checks on every declared field
    Verify {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Double a cosymplectic cobordism along one end
    Double {
        #[arg(long = "in", value_name = "FILE", required_unless_present = "disk")]
        input: Option<PathBuf>,
        /// Cobordism field to use (default: the first declared)
        #[arg(long)]
        field: Option<String>,
        /// Use the disk with its circle boundary
        #[arg(long, conflicts_with = "input")]
        disk: bool,
        /// Mirror along the end (both copies outgoing); the double is b-symplectic
        #[arg(long, conflicts_with = "opposite", required_unless_present = "opposite")]
        both_out: bool,
        /// Attach a second copy along its opposite end; the double is symplectic
        #[arg(long)]
        opposite: bool,
        /// Index of the end to glue along
        #[arg(long)]
        end: Option<usize>,
        /// Write the collar b-form as a scenario
        #[arg(long, value_name = "PATH")]
        emit: Option<PathBuf>,
    },
    /// Mapping torus of a symplectomorphism of (T², dx∧dy)
    Torus {
        /// identity, translate or twist
        #[arg(long, default_value = "identity")]
        holonomy: String,
        /// Translation vector, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shift: Option<Vec<f64>>,
        /// Also verify the product filling (requires identity holonomy)
        #[arg(long)]
        filling: bool,
    },
    /// Model Dehn twist on T*S^(n-1)
    Twist {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 40)]
        points: usize,
        /// Check with a finite-difference Jacobian
        #[arg(long)]
        fd: bool,
    },
    /// Certificate chain for a word in Dehn twists
    Chain {
        #[arg(long)]
        word: String,
        /// Declared sphere labels, comma separated
        #[arg(long)]
        spheres: Option<String>,
        #[arg(long)]
        fiber: Option<String>,
    },
    /// Summarize a JSON report
    Report {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
}

const T2: &str = r#"
name = "torus"

[[chart]]
name = "T2"
torus = ["x", "y"]

[[field]]
name = "sigma"
kind = "form"
chart = "T2"
degree = 2
components = { "x,y" = "1" }
"#;

/// Load failures exit with 2, task failures with 1.
enum Failure {
    Load(Error),
    Task(Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Report { input } = &cli.command {
        return summarize(input);
    }
    match execute(&cli) {
        Ok(report) => {
            if let Err(e) = emit(&report, cli.global.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for t in report.tasks.iter().filter(|t| !t.passed) {
                let failed: Vec<&str> = t.residuals.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
                let failed = if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) };
                eprintln!("FAIL {}:{failed} {}", t.task, t.notes.join("; "));
            }
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(Failure::Load(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Task(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn summarize(path: &Path) -> ExitCode {
    let parsed = std::fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|text| serde_json::from_str::<RunReport>(&text).map_err(|e| Error::Parse(e.to_string())));
    match parsed {
        Ok(report) => {
            println!("{}", summary(&report));
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &RunReport, out: Option<&Path>) -> std::io::Result<()> {
    let json = report.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, json + "\n")?;
            println!("{}", summary(report));
            Ok(())
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn summary(report: &RunReport) -> String {
    let mut lines = vec![format!(
        "{}: {} ({} task(s), seed {})",
        report.scenario,
        if report.passed { "PASS" } else { "FAIL" },
        report.tasks.len(),
        report.seed
    )];
    for t in &report.tasks {
        let worst = t.residuals.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect::<Vec<_>>();
        let status = if t.passed { "ok" } else { "FAIL" };
        if worst.is_empty() {
            lines.push(format!("  {status:4} {}", t.task));
        } else {
            lines.push(format!("  {status:4} {} [{}]", t.task, worst.join(", ")));
        }
    }
    lines.join("\n")
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(Failure::Load)
}

fn task(id: &str, op: &str, params: toml::Table) -> Task {
    Task { id: id.into(), op: op.into(), params }
}

fn single(scenario: &Scenario, t: Task, opts: &RunOptions) -> RunReport {
    let r = runner::run_task(scenario, &t, opts);
    let mut out = RunReport::new(&scenario.name, opts.seed.or(scenario.seed).unwrap_or(0), opts.tolerances());
    out.push(r);
    out
}

fn execute(cli: &Cli) -> Result<RunReport, Failure> {
    let g = &cli.global;
    let opts = RunOptions { grid: g.grid, tol: g.tol, seed: g.seed, profile_c: g.profile_c, period: g.period };
    match &cli.command {
        Command::Run { file } => Ok(runner::run(&load(file)?, &opts)),
        Command::Verify { input } => Ok(runner::verify_fields(&load(input)?, &opts)),
        Command::Double { input, field, disk, both_out: _, opposite, end, emit } => {
            let mode = if *opposite { GlueMode::Opposite } else { GlueMode::SameClass };
            let mode_name = if *opposite { "opposite" } else { "same_class" };
            let (scenario, cob) = if *disk {
                let s = Scenario::parse("name = \"disk\"").map_err(Failure::Load)?;
                (s, CosymplecticCobordism::disk().map_err(Failure::Task)?)
            } else {
                let s = load(input.as_ref().expect("clap enforces --in"))?;
                let found = s.fields.iter().find(|(n, v)| {
                    matches!(v, FieldValue::Cobordism(_)) && field.as_ref().is_none_or(|f| f == n)
                });
                let Some((_, FieldValue::Cobordism(c))) = found else {
                    return Err(Failure::Load(Error::Scenario("no matching cobordism field".into())));
                };
                let c = c.clone();
                (s, c)
            };
            let end = end.unwrap_or(cob.ends().len().saturating_sub(1));
            if let Some(path) = emit {
                let double = glue_double(&cob, end, mode, &GlueProfile::default()).map_err(Failure::Task)?;
                let chart = double.collar_chart();
                let mut w = ScenarioWriter::new(&format!("{}-collar", scenario.name));
                let mut params = toml::Table::new();
                params.insert("field".into(), "collar".into());
                w.chart("collar", chart.domain()).bform("collar", "collar", &double.collar).task(
                    "collar",
                    "is_b_symplectic",
                    params,
                );
                let text = w.to_toml().map_err(Failure::Task)?;
                std::fs::write(path, text).map_err(|e| Failure::Task(e.into()))?;
            }
            let mut params = toml::Table::new();
            if *disk {
                params.insert("builtin".into(), "disk".into());
                params.insert("compare_radko".into(), true.into());
            } else {
                let name = scenario
                    .fields
                    .iter()
                    .find(|(n, v)| matches!(v, FieldValue::Cobordism(_)) && field.as_ref().is_none_or(|f| f == n))
                    .map(|(n, _)| n.clone())
                    .expect("found above");
                params.insert("cobordism".into(), name.into());
            }
            params.insert("end".into(), (end as i64).into());
            params.insert("mode".into(), mode_name.into());
            Ok(single(&scenario, task("double", "glue_double", params), &opts))
        }
        Command::Torus { holonomy, shift, filling } => {
            let s = Scenario::parse(T2).map_err(Failure::Load)?;
            let mut params = toml::Table::new();
            params.insert("sigma".into(), "sigma".into());
            params.insert("holonomy".into(), holonomy.as_str().into());
            if let Some(v) = shift {
                params.insert("shift".into(), toml::Value::Array(v.iter().map(|x| (*x).into()).collect()));
            }
            params.insert("filling".into(), (*filling).into());
            Ok(single(&s, task("torus", "mapping_torus", params), &opts))
        }
        Command::Twist { n, points, fd } => {
            let s = Scenario::parse("name = \"twist\"").map_err(Failure::Load)?;
            let mut params = toml::Table::new();
            params.insert("n".into(), (*n as i64).into());
            params.insert("points".into(), (*points as i64).into());
            params.insert("jacobian".into(), if *fd { "fd" } else { "analytic" }.into());
            Ok(single(&s, task("twist", "dehn_twist", params), &opts))
        }
        Command::Chain { word, spheres, fiber } => {
            let s = Scenario::parse("name = \"chain\"").map_err(Failure::Load)?;
            let mut params = toml::Table::new();
            params.insert("word".into(), word.as_str().into());
            if let Some(sp) = spheres {
                params.insert("spheres".into(), sp.as_str().into());
            }
            if let Some(f) = fiber {
                params.insert("fiber".into(), f.as_str().into());
            }
            Ok(single(&s, task("chain", "dehn_chain", params), &opts))
        }
        Command::Report { .. } => unreachable!("handled in main"),
    }
}

