use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "polyliouville", version, about = "Experiments for (-Δ)^m u = (2m-1)! e^{2mu} on R^{2m}")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the exact constant table for order m
    Constants {
        #[arg(long)]
        m: u32,
    },
    /// Check the polyharmonic mean-value formula on random Almansi polynomials
    Pizzetti {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// largest total degree of a test polynomial
        #[arg(long, default_value_t = 6)]
        max_degree: u32,
    },
    /// Navier Green function of Δ^m on a ball
    Green {
        #[arg(long)]
        m: u32,
        /// exact rational radius such as 1 or 5/2
        #[arg(long, default_value = "1")]
        radius: String,
        #[arg(long, default_value_t = 401)]
        nodes: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Shoot a radial solution, write the trajectory and its report
    Shoot {
        #[command(flatten)]
        ic: InitialArgs,
        #[command(flatten)]
        out: OutArgs,
        /// treat blow-up as a normal outcome (exit 0)
        #[arg(long)]
        allow_blowup: bool,
    },
    /// Evaluate the potential v of a computed solution and fit u - v
    Represent {
        #[command(flatten)]
        ic: InitialArgs,
        #[command(flatten)]
        out: OutArgs,
        /// number of evaluation radii spread over [0, r_end]
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// also write Δ^j v for this j
        #[arg(long)]
        lap_j: Option<u32>,
        /// also run the rescaling check with this factor
        #[arg(long)]
        rescale: Option<f64>,
    },
    /// Classify a solution, or a sweep of u''(0) around the standard data
    Classify {
        #[command(flatten)]
        ic: InitialArgs,
        #[command(flatten)]
        out: OutArgs,
        /// run the order-2 sweep u''(0) = -2.5 + k/N, k < N, instead of one solution
        #[arg(long)]
        sweep: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Navier-solve a non-negative radial source and test exponential integrability
    #[command(name = "a2m-check")]
    A2mCheck {
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 4001)]
        nodes: usize,
        /// bump | gaussian | constant
        #[arg(long, default_value = "bump")]
        source: String,
        /// read the source from a CSV with header r,value instead
        #[arg(long)]
        source_csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the fixed suite of examples and exact checks
    #[command(name = "reproduce-paper")]
    ReproducePaper {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// output directory (default: $POLYLIOUVILLE_OUT or the current directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Initial data: explicit Laplacians, a standard λ, or even derivatives.
/// Unset even derivatives default to those of log(2/(1+r²)).
#[derive(Debug, Args, Clone)]
pub struct InitialArgs {
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub u0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d4: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d6: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d8: Option<f64>,
    /// comma-separated Δ^j u(0), j = 0..m-1
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub laplacians: Option<Vec<f64>>,
    /// start from log(2λ/(1+λ²r²))
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1000.0)]
    pub r_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub blowup_threshold: f64,
}

/// Splice `key = value` lines of the `--config` file into argv right after
/// the subcommand, so flags given on the command line override them.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", i + 1))?;
        let flag = format!("--{}", k.trim().replace('_', "-"));
        match v.trim() {
            "true" => injected.push(flag),
            "false" => {}
            v => {
                injected.push(flag);
                injected.push(v.to_string());
            }
        }
    }
    if rest.len() < 2 {
        return Err("a subcommand is required before options from --config".into());
    }
    let tail = rest.split_off(2);
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}
