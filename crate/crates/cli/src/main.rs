//! `sse`: run scenarios, score and render logs, replay association
//! candidates, localise speakers in a WAV file and inspect single plans.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input, 3 the base
//! had to stop because no feasible plan existed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use sse_core::association::{parse_replay, solve_partition, RelationGraph};
use sse_core::audio::{localise_stream, FrameConfig, GccConfig, MicPairGeometry};
use sse_core::nav::{build_cost_field, OccupancyGrid};
use sse_core::sim::{
    compute_metrics, load_map, load_scenario, parse_jsonl, render_svg, to_jsonl, RenderOptions, RunConfig, Scenario,
    ScenarioError, Simulation, TickLog,
};

#[derive(Parser)]
#[command(name = "sse", version, about = "Social perception and navigation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its tick log, metrics and map.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Warn when a tick takes longer than this, milliseconds.
        #[arg(long, default_value_t = 50.0)]
        tick_budget_ms: f64,
    },
    /// Score a tick log.
    Metrics { log: PathBuf },
    /// Draw one tick of a log as SVG.
    Render {
        log: PathBuf,
        #[arg(long)]
        tick: u64,
        /// Occupancy map; defaults to the one named in the log, next to it.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Association tools.
    Assoc {
        #[command(subcommand)]
        command: AssocCommand,
    },
    /// Per-frame direction of arrival of a stereo WAV file, as CSV.
    Doa {
        #[arg(long)]
        wav: PathBuf,
        /// Microphone spacing, metres.
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
        #[arg(long, default_value_t = 343.0)]
        speed_of_sound: f64,
    },
    /// Run a scenario up to one tick and print that tick's plan.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        tick: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write an SVG of the tick here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AssocCommand {
    /// Feed a match-candidate file into an empty graph and print the partition.
    Replay { file: PathBuf },
}

enum Failure {
    Input(String),
    Stopped(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Other(e.into()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, out, tick_budget_ms } => run(&scenario, seed, &out, tick_budget_ms),
        Command::Metrics { log } => metrics(&log),
        Command::Render { log, tick, map, out } => render(&log, tick, map.as_deref(), out.as_deref()),
        Command::Assoc { command: AssocCommand::Replay { file } } => replay(&file),
        Command::Doa { wav, spacing, speed_of_sound } => doa(&wav, spacing, speed_of_sound),
        Command::Plan { scenario, tick, seed, svg } => plan(&scenario, tick, seed, svg.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Stopped(m)) => {
            eprintln!("stopped: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn stop_report(logs: &[TickLog]) -> Result<(), Failure> {
    let stops: Vec<u64> = logs.iter().filter(|l| l.plan.stopped).map(|l| l.tick).collect();
    match stops.first() {
        None => Ok(()),
        Some(first) => Err(Failure::Stopped(format!("no feasible plan on {} tick(s), first at tick {first}", stops.len()))),
    }
}

fn run(path: &Path, seed: Option<u64>, out: &Path, budget_ms: f64) -> Result<(), Failure> {
    let sc = load_scenario(path)?;
    let mut sim = Simulation::new(&sc, seed);
    let mut logs = Vec::new();
    let mut slowest = Duration::ZERO;
    while !sim.finished() {
        let start = Instant::now();
        logs.push(sim.step());
        slowest = slowest.max(start.elapsed());
    }
    let metrics = compute_metrics(&logs, &sim.script);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let name = &sc.script.name;
    let write = |file: String, text: &str| -> anyhow::Result<()> {
        let p = out.join(file);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    write(format!("{name}.jsonl"), &to_jsonl(&logs))?;
    let metrics_json = serde_json::to_string_pretty(&metrics).map_err(anyhow::Error::from)?;
    write(format!("{name}.metrics.json"), &metrics_json)?;
    let map_src = path.parent().unwrap_or(Path::new(".")).join(&sc.script.map);
    let map_name = map_file_name(&sc.script.map)?;
    write(map_name, &fs::read_to_string(&map_src).with_context(|| format!("reading {}", map_src.display()))?)?;

    println!("{metrics_json}");
    let ms = slowest.as_secs_f64() * 1e3;
    if ms > budget_ms {
        eprintln!("warning: slowest tick took {ms:.1} ms, over the {budget_ms} ms budget");
    }
    stop_report(&logs)
}

fn map_file_name(map: &str) -> anyhow::Result<String> {
    Path::new(map)
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .ok_or_else(|| anyhow!("map reference {map:?} has no file name"))
}

fn read_log(path: &Path) -> Result<Vec<TickLog>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let logs = parse_jsonl(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if logs.first().is_none_or(|l| l.script.is_none()) {
        return Err(Failure::Input(format!("{}: first record carries no script", path.display())));
    }
    Ok(logs)
}

fn metrics(path: &Path) -> Result<(), Failure> {
    let logs = read_log(path)?;
    let script = logs[0].script.as_ref().expect("checked by read_log");
    let m = compute_metrics(&logs, script);
    println!("{}", serde_json::to_string_pretty(&m).map_err(anyhow::Error::from)?);
    Ok(())
}

fn svg_for(log: &TickLog, grid: &OccupancyGrid, config: &RunConfig) -> String {
    let field = build_cost_field(&log.social, grid, &config.cost);
    render_svg(log, &field, &RenderOptions::default())
}

fn render(path: &Path, tick: u64, map: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let logs = read_log(path)?;
    let first = &logs[0];
    let script = first.script.as_ref().expect("checked by read_log");
    let config = first.config.clone().unwrap_or_default();
    let map = match map {
        Some(m) => m.to_path_buf(),
        None => path.parent().unwrap_or(Path::new(".")).join(map_file_name(&script.map)?),
    };
    let grid = load_map(&map)?;
    let log = logs
        .iter()
        .find(|l| l.tick == tick)
        .ok_or_else(|| Failure::Input(format!("tick {tick} not in log ({} ticks)", logs.len())))?;
    emit(&svg_for(log, &grid, &config), out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn replay(path: &Path) -> Result<(), Failure> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let candidates = parse_replay(std::io::BufReader::new(file)).map_err(|e| Failure::Input(e.to_string()))?;
    let mut g = RelationGraph::new();
    for c in &candidates {
        g.submit_match(c).map_err(|e| Failure::Input(e.to_string()))?;
    }
    let result = solve_partition(&g);
    println!("{}", serde_json::to_string_pretty(&result).map_err(anyhow::Error::from)?);
    Ok(())
}

fn doa(path: &Path, spacing: f64, speed_of_sound: f64) -> Result<(), Failure> {
    let mut reader = hound::WavReader::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 2 {
        return Err(Failure::Input(format!("expected 2 channels, found {}", spec.channels)));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>(),
        hound::SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader.samples::<i32>().map(|s| s.map(|v| v as f64 / full)).collect::<Result<_, _>>()
        }
    }
    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let left: Vec<f64> = samples.iter().step_by(2).copied().collect();
    let right: Vec<f64> = samples.iter().skip(1).step_by(2).copied().collect();

    let geom = MicPairGeometry { spacing, speed_of_sound, sample_rate: spec.sample_rate as f64 };
    geom.check().map_err(|e| Failure::Input(e.to_string()))?;
    let frames = localise_stream(&left, &right, &geom, &FrameConfig::default(), &GccConfig::default())
        .map_err(|e| Failure::Input(e.to_string()))?;
    println!("t,tau,theta,reliable");
    for f in frames {
        println!("{},{},{},{}", f.time, f.tau, f.theta, f.reliable);
    }
    Ok(())
}

fn plan(path: &Path, tick: u64, seed: Option<u64>, svg: Option<&Path>) -> Result<(), Failure> {
    let sc: Scenario = load_scenario(path)?;
    let mut sim = Simulation::new(&sc, seed);
    if tick >= sim.total_ticks() {
        return Err(Failure::Input(format!("tick {tick} beyond the last tick {}", sim.total_ticks().saturating_sub(1))));
    }
    let mut log = sim.step();
    while log.tick < tick {
        log = sim.step();
    }
    println!("{}", serde_json::to_string_pretty(&log.plan).map_err(anyhow::Error::from)?);
    if let Some(p) = svg {
        let text = svg_for(&log, &sc.grid, &sim.config);
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    stop_report(std::slice::from_ref(&log))
}
