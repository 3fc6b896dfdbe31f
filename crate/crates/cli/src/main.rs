mod args;
mod commands;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Constants { m } => commands::constants(m),
        Command::Pizzetti { m, n, cases, seed, max_degree } => commands::pizzetti(m, n, cases, seed, max_degree),
        Command::Green { m, radius, nodes, out } => commands::green(m, &radius, nodes, &out),
        Command::Shoot { ic, out, allow_blowup } => commands::shoot(&ic, &out, allow_blowup),
        Command::Represent { ic, out, points, lap_j, rescale } => commands::represent(&ic, &out, points, lap_j, rescale),
        Command::Classify { ic, out, sweep, jobs } => commands::classify(&ic, &out, sweep, jobs),
        Command::A2mCheck { m, radius, nodes, source, source_csv, out } => {
            commands::a2m_check(m, radius, nodes, &source, source_csv.as_deref(), &out)
        }
        Command::ReproducePaper { out, jobs } => commands::reproduce_paper(&out, jobs),
    }
}

fn main() {
    let argv = match args::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        // usage errors exit with 2, --help and --version with 0
        Err(e) => e.exit(),
    };
    if let Err(f) = run(cli) {
        eprintln!("error: {}", f.message());
        std::process::exit(f.exit_code());
    }
}
