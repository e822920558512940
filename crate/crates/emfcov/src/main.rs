use clap::{Parser, Subcommand};
use emfcov::cli::{
    cmd_analyze, cmd_fit, cmd_map, cmd_sweep, cmd_validate, parse_grid, write_tables, AnalyzeOptions, CliError, CurveMetric, MapKind,
    Provenance, SweepParam,
};
use emfcov::scenario::{parse_length, Scenario};
use std::io::Write;

/// Joint EMF exposure and SINR distributions for cellular networks.
#[derive(Parser)]
#[command(name = "emfcov", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic curve or moment summary for one scenario
    Analyze {
        /// scenario file, or a preset name (paris-5gnr2100, brussels-lte1800)
        #[arg(long)]
        scenario: String,
        /// emf-cdf, sinr-ccdf, joint or moments
        #[arg(long, default_value = "emf-cdf")]
        metric: String,
        /// thresholds, `lo:hi:n` or `a,b,c` (dBm for exposure, dB for SINR)
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// SINR thresholds (dB) for the joint metric
        #[arg(long, allow_hyphen_values = true)]
        sinr_grid: Option<String>,
        /// recorded in the header only; the analytics are deterministic
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        truncation_n: Option<usize>,
        /// quadrature tolerance
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Family of curves over one parameter
    Sweep {
        #[arg(long)]
        scenario: String,
        /// beta, lambda (BS/km2), omega (rad) or density-scale
        #[arg(long)]
        param: String,
        /// parameter values, `lo:hi:n` or `a,b,c`
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value = "sinr-ccdf")]
        metric: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        truncation_n: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte Carlo against the analytics
    Validate {
        #[arg(long)]
        scenario: String,
        /// defaults to the scenario's value
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// largest allowed CDF/CCDF gap
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// also write the raw MC samples here
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Metric over a square grid of user locations (I-PPP scenarios)
    Map {
        #[arg(long)]
        scenario: String,
        /// axis in km, `lo:hi:n`; defaults to the scenario grid
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// mean-exposure, emf-cdf or sinr-ccdf
        #[arg(long, default_value = "mean-exposure")]
        metric: String,
        /// dBm for emf-cdf, dB for sinr-ccdf
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Least-squares radial density fit of a BS dataset
    Fit {
        #[arg(long)]
        dataset: String,
        /// max-density point, `x,y` with units, e.g. `-0.145km,-0.569km`
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        /// fit radius, e.g. `7km`
        #[arg(long)]
        tau: String,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        out: Option<String>,
    },
}

fn sink(out: &Option<String>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Analyze { scenario, metric, grid, sinr_grid, seed, truncation_n, tolerance, out } => {
            let sc = Scenario::resolve(&scenario)?;
            let opts = AnalyzeOptions {
                grid: grid.as_deref().map(parse_grid).transpose()?,
                sinr_grid: sinr_grid.as_deref().map(parse_grid).transpose()?,
                truncation_n,
                tolerance,
            };
            let t = cmd_analyze(&sc, metric.parse::<CurveMetric>()?, &opts)?;
            write_tables(sink(&out)?, &Provenance::for_scenario(&format!("analyze --metric {metric}"), &sc, seed.or(Some(sc.seed))), &[t])?;
        }
        Cmd::Sweep { scenario, param, values, metric, grid, seed, truncation_n, tolerance, out } => {
            let sc = Scenario::resolve(&scenario)?;
            let opts = AnalyzeOptions { grid: grid.as_deref().map(parse_grid).transpose()?, sinr_grid: None, truncation_n, tolerance };
            let vals = parse_grid(&values)?;
            let tables = cmd_sweep(&sc, param.parse::<SweepParam>()?, &vals, metric.parse::<CurveMetric>()?, &opts)?;
            let prov = Provenance::for_scenario(&format!("sweep --param {param} --values {values} --metric {metric}"), &sc, seed.or(Some(sc.seed)));
            write_tables(sink(&out)?, &prov, &tables)?;
        }
        Cmd::Validate { scenario, realizations, seed, tolerance, samples, out } => {
            let sc = Scenario::resolve(&scenario)?;
            let n = realizations.unwrap_or(sc.realizations);
            let seed = seed.unwrap_or(sc.seed);
            let (report, res) = cmd_validate(&sc, n, seed, tolerance)?;
            if let Some(p) = samples {
                res.write_samples(std::io::BufWriter::new(std::fs::File::create(p)?))?;
            }
            write_tables(sink(&out)?, &Provenance::for_scenario(&format!("validate --realizations {n}"), &sc, Some(seed)), &[report.table()])?;
        }
        Cmd::Map { scenario, grid, metric, threshold, seed, out } => {
            let sc = Scenario::resolve(&scenario)?;
            let axis = match grid {
                Some(g) => parse_grid(&g)?.into_iter().map(|x| x * 1e3).collect(),
                None => sc.map_axis.clone(),
            };
            let (t, _) = cmd_map(&sc, &axis, metric.parse::<MapKind>()?, threshold)?;
            write_tables(sink(&out)?, &Provenance::for_scenario(&format!("map --metric {metric}"), &sc, seed.or(Some(sc.seed))), &[t])?;
        }
        Cmd::Fit { dataset, center, tau, bins, out } => {
            let parts: Vec<&str> = center.split(',').collect();
            if parts.len() != 2 {
                return Err(CliError::Usage("--center expects `x,y`".into()));
            }
            let c = [parse_length(parts[0])?, parse_length(parts[1])?];
            let (block, hash) = cmd_fit(&dataset, c, parse_length(&tau)?, bins)?;
            let mut w = sink(&out)?;
            writeln!(w, "# emfcov {}", env!("CARGO_PKG_VERSION"))?;
            writeln!(w, "# command: fit --center {center} --tau {tau} --bins {bins}")?;
            writeln!(w, "# source: {dataset} sha256={hash}")?;
            write!(w, "{block}")?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error\t{}\t{}", e.kind(), e);
        std::process::exit(e.exit_code());
    }
}
