use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

use sse_playground::{serve, Engine};

/// Serve a scenario for interactive tuning.
#[derive(Parser)]
#[command(name = "sse-playground", version)]
struct Args {
    scenario: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long)]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    let args = Args::parse();
    let scenario = match sse_core::sim::load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return std::process::ExitCode::from(2);
        }
    };
    eprintln!("serving {} on http://{}", scenario.script.name, args.bind);
    match serve(Engine::spawn(scenario, args.seed), args.bind).await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
