//! `wits` — cost trade-offs of the Witsenhausen counterexample on the
//! command line.
//!
//! Every subcommand emits a self-describing CSV table (metadata preamble,
//! header, rows) to stdout or `--out`, and optionally a simple SVG line
//! chart via `--plot`. Exit codes: 0 success, 1 verification failure
//! (oracle gap or simulation z-score out of bounds), 2 usage error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use witsenhausen::gaussian_opt::{grid_oracle, grid_slack, optimal_correlations, GridSpec};
use witsenhausen::mc::{reference_costs, simulate_policy, McConfig};
use witsenhausen::model::{Policy, ProblemParams, Regime};
use witsenhausen::twopoint::{dominance_scan, twopoint_mmse, twopoint_power, QuadratureConfig};

mod plot;
mod table;

use table::{Cell, OutputTable};

#[derive(Parser)]
#[command(
    name = "wits",
    version,
    about = "Witsenhausen counterexample cost trade-offs: closed forms, grid certification, quadrature, Monte Carlo"
)]
struct Cli {
    /// Write the CSV table to this path instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Omit the timestamp metadata line so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Also render the table as an SVG line chart at this path.
    #[arg(long, global = true, value_name = "PATH")]
    plot: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form costs and optimal correlations at one power point.
    Eval(EvalArgs),
    /// Sweep a power grid and tabulate the cost frontier.
    Frontier(FrontierArgs),
    /// Two-point strategy costs at one amplitude.
    Twopoint(TwopointArgs),
    /// Sweep two-point amplitudes against the continuous-RV optimum.
    Dominance(DominanceArgs),
    /// Monte Carlo simulation of a policy with closed-form cross-check.
    Simulate(SimulateArgs),
    /// Certify the closed form against the exhaustive grid scan.
    Oracle(OracleArgs),
    /// Rebuild a named built-in table (fig2, fig3).
    Figure(FigureArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Variance Q of the initial state (> 0).
    #[arg(long = "Q")]
    q: f64,
    /// Variance N of the channel noise (> 0).
    #[arg(long = "N")]
    n: f64,
}

impl InstanceArgs {
    fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.q, self.n)
            .map_err(|e| anyhow!("{e} (see --help for flag constraints)"))
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Input power P (>= 0).
    #[arg(long = "P")]
    power: f64,
}

#[derive(Args)]
struct FrontierArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long = "p-min")]
    p_min: f64,
    #[arg(long = "p-max")]
    p_max: f64,
    #[arg(long)]
    steps: usize,
}

#[derive(Args)]
struct TwopointArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Signal amplitude a (>= 0).
    #[arg(long = "a")]
    amplitude: f64,
}

#[derive(Args)]
struct DominanceArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long = "a-min")]
    a_min: f64,
    #[arg(long = "a-max")]
    a_max: f64,
    #[arg(long)]
    steps: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Policy spec: linear:P=<v> | twopoint:a=<v> |
    /// timeshare:lambda=<v>,P1=<v>,P2=<v> | achievability:P=<v>.
    #[arg(long)]
    policy: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Input power P (>= 0).
    #[arg(long = "P")]
    power: f64,
    #[arg(long, default_value_t = 2000)]
    resolution: usize,
}

#[derive(Args)]
struct FigureArgs {
    /// Built-in table name: fig2 (frontier, Q=2 N=0.2) or fig3
    /// (dominance, Q=10 N=1).
    #[arg(long)]
    name: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let (mut table, exit_code, title) = match &cli.command {
        Command::Eval(args) => cmd_eval(args)?,
        Command::Frontier(args) => cmd_frontier(args)?,
        Command::Twopoint(args) => cmd_twopoint(args)?,
        Command::Dominance(args) => cmd_dominance(args)?,
        Command::Simulate(args) => cmd_simulate(args)?,
        Command::Oracle(args) => cmd_oracle(args)?,
        Command::Figure(args) => cmd_figure(args)?,
    };

    if !cli.no_timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        table.meta("timestamp_unix", now);
    }

    match &cli.out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create output file {}", path.display()))?;
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            table.write_csv(&mut w)?;
        }
    }

    if let Some(path) = &cli.plot {
        match plot::render_line_chart(&table, &title) {
            Some(svg) => std::fs::write(path, svg)
                .with_context(|| format!("cannot write plot to {}", path.display()))?,
            None => eprintln!("note: table has no numeric series to plot; no image written"),
        }
    }

    Ok(exit_code)
}

fn base_table(header: &[&str], command: &str, params: Option<&ProblemParams>) -> OutputTable {
    let mut t = OutputTable::new(header);
    t.meta("tool", format!("wits {}", env!("CARGO_PKG_VERSION")));
    t.meta("command", command);
    if let Some(p) = params {
        t.meta("Q", p.state_var());
        t.meta("N", p.noise_var());
    }
    t
}

const EVAL_HEADER: &[&str] = &[
    "P",
    "regime",
    "S_linear",
    "S_continuous",
    "P1",
    "P2",
    "rho1_sq_star",
    "rho2_star",
    "rho3_sq_star",
];

fn cmd_eval(args: &EvalArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let p = args.power;
    let s_linear = params.linear_cost(p)?;
    let s_continuous = params.continuous_optimal_cost(p)?;
    let opt = optimal_correlations(&params, p)?;
    let (c1, c2) = match params.thresholds() {
        Some((p1, p2)) => (Cell::Num(p1), Cell::Num(p2)),
        None => (Cell::Empty, Cell::Empty),
    };

    let mut t = base_table(EVAL_HEADER, "eval", Some(&params));
    t.push_row(vec![
        Cell::Num(p),
        Cell::Text(params.regime_of(p).to_string()),
        Cell::Num(s_linear),
        Cell::Num(s_continuous),
        c1,
        c2,
        Cell::Num(opt.rho1_sq),
        Cell::Num(opt.rho2),
        Cell::Num(opt.rho3_sq),
    ]);
    let title = format!("eval Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, 0, title))
}

const FRONTIER_HEADER: &[&str] = &["P", "S_linear", "S_continuous", "S_timeshare"];

fn frontier_table(params: &ProblemParams, p_min: f64, p_max: f64, steps: usize) -> Result<OutputTable> {
    if !(p_min >= 0.0) || !(p_max > p_min) || steps < 2 {
        bail!("frontier needs 0 <= p-min < p-max and steps >= 2, got [{p_min}, {p_max}] with {steps} steps");
    }
    let mut t = base_table(FRONTIER_HEADER, "frontier", Some(params));
    t.meta("p_min", p_min);
    t.meta("p_max", p_max);
    t.meta("steps", steps);
    for i in 0..steps {
        let p = p_min + (p_max - p_min) * i as f64 / (steps - 1) as f64;
        let timeshare = if params.regime_of(p) == Regime::Middle {
            Cell::Num(params.timeshare_cost(p)?)
        } else {
            Cell::Empty
        };
        t.push_row(vec![
            Cell::Num(p),
            Cell::Num(params.linear_cost(p)?),
            Cell::Num(params.continuous_optimal_cost(p)?),
            timeshare,
        ]);
    }
    Ok(t)
}

fn cmd_frontier(args: &FrontierArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let t = frontier_table(&params, args.p_min, args.p_max, args.steps)?;
    let title = format!("frontier Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, 0, title))
}

const TWOPOINT_HEADER: &[&str] = &["a", "P_t", "S_t"];

fn cmd_twopoint(args: &TwopointArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let quad = QuadratureConfig::default();
    let mut t = base_table(TWOPOINT_HEADER, "twopoint", Some(&params));
    t.push_row(vec![
        Cell::Num(args.amplitude),
        Cell::Num(twopoint_power(&params, args.amplitude)?),
        Cell::Num(twopoint_mmse(&params, args.amplitude, &quad)?),
    ]);
    let title = format!("twopoint Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, 0, title))
}

const DOMINANCE_HEADER: &[&str] = &["a", "P_t", "S_t", "S_c_at_Pt", "dominates", "quad_error"];

fn dominance_table(
    params: &ProblemParams,
    a_min: f64,
    a_max: f64,
    steps: usize,
) -> Result<OutputTable> {
    let quad = QuadratureConfig::default();
    let rows = dominance_scan(params, a_min, a_max, steps, &quad)?;
    let mut t = base_table(DOMINANCE_HEADER, "dominance", Some(params));
    t.meta("a_min", a_min);
    t.meta("a_max", a_max);
    t.meta("steps", steps);
    for r in rows {
        t.push_row(vec![
            Cell::Num(r.amplitude),
            Cell::Num(r.power),
            Cell::Num(r.cost),
            Cell::Num(r.continuous_cost),
            Cell::Bool(r.dominates),
            r.quad_error.map_or(Cell::Empty, Cell::Num),
        ]);
    }
    Ok(t)
}

fn cmd_dominance(args: &DominanceArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let t = dominance_table(&params, args.a_min, args.a_max, args.steps)?;
    let title = format!("dominance Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, 0, title))
}

const SIMULATE_HEADER: &[&str] = &[
    "policy", "P_hat", "P_se", "S_hat", "S_se", "P_ref", "S_ref", "z_P", "z_S",
];

fn cmd_simulate(args: &SimulateArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let policy = parse_policy(&args.policy)?;
    let cfg = McConfig {
        samples: args.samples,
        seed: args.seed,
        block_size: 65_536,
    };
    let quad = QuadratureConfig::default();
    let reference = reference_costs(&params, &policy, &quad)?;
    let (power, cost) = simulate_policy(&params, &policy, &cfg)?;
    let z_p = z_score(power.mean, power.std_error, reference.power);
    let z_s = z_score(cost.mean, cost.std_error, reference.cost);

    let mut t = base_table(SIMULATE_HEADER, "simulate", Some(&params));
    t.meta("samples", args.samples);
    t.meta("seed", args.seed);
    t.push_row(vec![
        Cell::Text(args.policy.clone()),
        Cell::Num(power.mean),
        Cell::Num(power.std_error),
        Cell::Num(cost.mean),
        Cell::Num(cost.std_error),
        Cell::Num(reference.power),
        Cell::Num(reference.cost),
        Cell::Num(z_p),
        Cell::Num(z_s),
    ]);
    let exit = if z_p.abs() > 4.0 || z_s.abs() > 4.0 { 1 } else { 0 };
    let title = format!("simulate Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, exit, title))
}

const ORACLE_HEADER: &[&str] = &[
    "P",
    "S_continuous",
    "S_oracle",
    "gap",
    "rho1_sq",
    "rho3_sq",
    "rho2",
];

fn cmd_oracle(args: &OracleArgs) -> Result<(OutputTable, i32, String)> {
    let params = args.instance.params()?;
    let spec = GridSpec {
        resolution: args.resolution,
        refine: true,
    };
    let (best, mmse) = grid_oracle(&params, args.power, &spec)?;
    let closed = params.continuous_optimal_cost(args.power)?;
    let gap = (mmse - closed).abs();
    let slack = grid_slack(args.resolution, true);

    let mut t = base_table(ORACLE_HEADER, "oracle", Some(&params));
    t.meta("resolution", args.resolution);
    t.meta("declared_slack", format!("{slack:e}"));
    t.push_row(vec![
        Cell::Num(args.power),
        Cell::Num(closed),
        Cell::Num(mmse),
        Cell::Num(gap),
        Cell::Num(best.rho1_sq),
        Cell::Num(best.rho3_sq),
        Cell::Num(best.rho2),
    ]);
    let exit = if gap > slack { 1 } else { 0 };
    let title = format!("oracle Q={} N={}", params.state_var(), params.noise_var());
    Ok((t, exit, title))
}

fn cmd_figure(args: &FigureArgs) -> Result<(OutputTable, i32, String)> {
    match args.name.as_str() {
        "fig2" => {
            let params = ProblemParams::new(2.0, 0.2).expect("built-in instance");
            let mut t = frontier_table(&params, 0.0, 2.2, 221)?;
            t.meta("figure", "fig2");
            Ok((t, 0, "cost frontier, Q=2 N=0.2".to_string()))
        }
        "fig3" => {
            let params = ProblemParams::new(10.0, 1.0).expect("built-in instance");
            let mut t = dominance_table(&params, 0.05, 5.0, 100)?;
            t.meta("figure", "fig3");
            Ok((t, 0, "two-point dominance, Q=10 N=1".to_string()))
        }
        other => bail!("unknown figure '{other}' (available: fig2, fig3)"),
    }
}

fn z_score(mean: f64, std_error: f64, reference: f64) -> f64 {
    let diff = mean - reference;
    if std_error == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        diff / std_error
    }
}

/// Parse `name:key=val,...` policy specs.
fn parse_policy(spec: &str) -> Result<Policy> {
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("malformed policy spec '{spec}': expected <name>:<key>=<value>[,...]"))?;
    let mut fields = Vec::new();
    for item in rest.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("malformed policy field '{item}' in '{spec}'"))?;
        let value: f64 = v
            .parse()
            .map_err(|_| anyhow!("policy field '{k}' has non-numeric value '{v}'"))?;
        fields.push((k.trim(), value));
    }
    let get = |key: &str| -> Result<f64> {
        fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| anyhow!("policy spec '{spec}' is missing field '{key}'"))
    };
    let expect_len = |n: usize| -> Result<()> {
        if fields.len() != n {
            bail!("policy spec '{spec}' has {} fields, expected {n}", fields.len());
        }
        Ok(())
    };
    match name {
        "linear" => {
            expect_len(1)?;
            Ok(Policy::Linear { power: get("P")? })
        }
        "twopoint" => {
            expect_len(1)?;
            Ok(Policy::TwoPoint { amplitude: get("a")? })
        }
        "timeshare" => {
            expect_len(3)?;
            Ok(Policy::TimeShare {
                lambda: get("lambda")?,
                power_low: get("P1")?,
                power_high: get("P2")?,
            })
        }
        "achievability" => {
            expect_len(1)?;
            Ok(Policy::GaussianAchievability { power: get("P")? })
        }
        other => bail!("unknown policy '{other}' (available: linear, twopoint, timeshare, achievability)"),
    }
}
