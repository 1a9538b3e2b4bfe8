//! `wrr-nc`: delay-bound experiments and simulations as CSV.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wrr_nc::curve::Delay;
use wrr_nc::experiments::{
    burst_classes, curve_table, default_mixes, default_psrs, default_utilizations, delay_sweep,
    four_flow_scenario, flow_count, heuristic_table, linspace, psr_sweep, BoundRow, ClassConfig, Settings,
    TABLE_TOTALS,
};
use wrr_nc::num::{format_sig, int, parse_decimal, ratio, to_f64, Rational};
use wrr_nc::scenario::Scenario;
use wrr_nc::scenario_file;
use wrr_nc::search::{Arithmetic, Convention, DelayBoundResult};
use wrr_nc::sim::{simulate_and_validate, CheckStatus, Discipline, SimError, SizePolicy};

const SIG: usize = 12;

#[derive(Parser, Debug)]
#[command(name = "wrr-nc", version, about = "Delay bounds for weighted round robin")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario file (JSON). Defaults to the built-in four-flow or burst class scenario.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output file, stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random packet sizes.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Rank subsets with exact rationals (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Rank subsets in f64, then recompute the winner exactly.
    #[arg(long, global = true)]
    float: bool,
    /// Delay read off the curves.
    #[arg(long, global = true, value_enum, default_value_t = Bound::Burst)]
    bound: Bound,
    /// Exhaustive search up to 2^n subset choices, greedy beyond.
    #[arg(long, global = true, default_value_t = 20)]
    n_limit: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bound {
    /// Latency plus burst over rate, as in the published figures.
    Burst,
    /// Horizontal deviation between arrival and service curves.
    Deviation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sizes {
    Min,
    Max,
    Alternating,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SimScheduler {
    Wrr,
    Iwrr,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Leftover service curves sampled on [0, t_max].
    Curves {
        #[arg(long, value_parser = rational, default_value = "0.2")]
        t_max: Rational,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// The five bounds over a range of utilizations.
    DelaySweep {
        #[arg(long, value_parser = rational, requires = "to")]
        from: Option<Rational>,
        #[arg(long, value_parser = rational, requires = "from")]
        to: Option<Rational>,
        #[arg(long, default_value_t = 18)]
        steps: usize,
    },
    /// Bounds for mixes of low, mid and high burst cross-flows.
    BurstClasses {
        /// Flows per class as `low,mid,high`; repeatable.
        #[arg(long = "mix", value_parser = mix)]
        mixes: Vec<(usize, usize, usize)>,
    },
    /// Bounds as the packet size range l_max / l_min grows.
    PsrSweep {
        #[arg(long = "psr", value_parser = rational)]
        psrs: Vec<Rational>,
    },
    /// Bounds as the number of cross-flows per class grows.
    FlowCount {
        #[arg(long = "per-class")]
        per_class: Vec<usize>,
    },
    /// Greedy WRR-M against IWRR for growing flow counts.
    HeuristicTable {
        #[arg(long = "total")]
        totals: Vec<usize>,
    },
    /// Simulates greedy sources and checks every bound against the observed delays.
    Simulate {
        #[arg(long, value_enum, default_value_t = SimScheduler::Iwrr)]
        scheduler: SimScheduler,
        /// Last arrival time in seconds; 50 saturated rounds by default.
        #[arg(long, value_parser = rational)]
        horizon: Option<Rational>,
        #[arg(long, value_enum, default_value_t = Sizes::Random)]
        sizes: Sizes,
        /// Writes the event log (tab separated) to this file.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_decimal(s).ok_or_else(|| format!("not a number: {s}"))
}

fn mix(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{s}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("{s}: expected low,mid,high")),
    }
}

impl Global {
    fn settings(&self) -> Settings {
        Settings {
            convention: match self.bound {
                Bound::Burst => Convention::BurstInstant,
                Bound::Deviation => Convention::HorizontalDeviation,
            },
            arithmetic: if self.float {
                Arithmetic::Float
            } else {
                Arithmetic::Exact
            },
            n_limit: self.n_limit,
        }
    }

    fn scenario(&self) -> Result<Option<Scenario>> {
        self.scenario
            .as_ref()
            .map(|p| scenario_file::load(p).with_context(|| format!("loading {}", p.display())))
            .transpose()
    }

    fn four_flows(&self) -> Result<Scenario> {
        match self.scenario()? {
            Some(s) => Ok(s),
            None => Ok(four_flow_scenario(&ratio(3, 5))?),
        }
    }

    fn classes(&self) -> Result<ClassConfig> {
        match self.scenario()? {
            Some(s) => Ok(ClassConfig::from_template(&s)?),
            None => Ok(ClassConfig::standard()),
        }
    }

    fn writer(&self) -> Result<csv::Writer<Box<dyn Write>>> {
        let sink: Box<dyn Write> = match &self.out {
            Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout().lock()),
        };
        Ok(csv::Writer::from_writer(sink))
    }
}

fn num(r: &Rational) -> String {
    format_sig(to_f64(r), SIG)
}

fn delay(d: &Delay) -> String {
    format_sig(d.to_f64(), SIG)
}

fn opt_delay(d: &Option<Delay>) -> String {
    d.as_ref().map(delay).unwrap_or_default()
}

/// 1-based flows joined by spaces.
fn subset(r: &DelayBoundResult) -> String {
    r.subset
        .iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// `a / b`, empty unless both are finite and `b` is positive.
fn quotient(a: &Delay, b: &Delay) -> String {
    match (a.finite(), b.finite()) {
        (Some(a), Some(b)) if *b > int(0) => num(&(a / b)),
        _ => String::new(),
    }
}

const ROW_HEADER: [&str; 11] = [
    "wrr_linear",
    "wrr_stair",
    "iwrr",
    "wrr_m",
    "iwrr_m",
    "wrr_m_subset",
    "iwrr_m_subset",
    "wrr_m_max_curve",
    "iwrr_m_max_curve",
    "method",
    "wrr_m_over_best_sota",
];

fn row_fields(r: &BoundRow) -> Vec<String> {
    vec![
        delay(&r.wrr_linear.bound),
        delay(&r.wrr_stair.bound),
        delay(&r.iwrr.bound),
        delay(&r.wrr_m.bound),
        delay(&r.iwrr_m.bound),
        subset(&r.wrr_m),
        subset(&r.iwrr_m),
        opt_delay(&r.wrr_m_max_curve),
        opt_delay(&r.iwrr_m_max_curve),
        r.method.label().to_string(),
        quotient(&r.wrr_m.bound, &r.best_state_of_the_art()),
    ]
}

fn write_rows<K>(
    g: &Global,
    keys: &[&str],
    rows: &[(K, BoundRow)],
    key: impl Fn(&K) -> Vec<String>,
) -> Result<()> {
    let mut w = g.writer()?;
    w.write_record(keys.iter().copied().chain(ROW_HEADER))?;
    for (k, row) in rows {
        w.write_record(key(k).into_iter().chain(row_fields(row)))?;
    }
    w.flush()?;
    Ok(())
}

fn or_default<T>(given: Vec<T>, default: impl FnOnce() -> Vec<T>) -> Vec<T> {
    if given.is_empty() {
        default()
    } else {
        given
    }
}

fn curves(g: &Global, t_max: &Rational, samples: usize) -> Result<()> {
    let s = g.four_flows()?;
    let table = curve_table(&s, t_max, samples, g.settings())?;
    for warning in &table.warnings {
        eprintln!("warning: {warning}");
    }
    let mut w = g.writer()?;
    w.write_record(std::iter::once("t").chain(table.columns.iter().map(String::as_str)))?;
    for (t, values) in table.times.iter().zip(&table.values) {
        w.write_record(std::iter::once(num(t)).chain(values.iter().map(num)))?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(
    g: &Global,
    scheduler: SimScheduler,
    horizon: Option<Rational>,
    sizes: Sizes,
    events: Option<&PathBuf>,
) -> Result<ExitCode> {
    let s = g.four_flows()?;
    let discipline = match scheduler {
        SimScheduler::Wrr => Discipline::Wrr,
        SimScheduler::Iwrr => Discipline::Iwrr,
    };
    let policy = match sizes {
        Sizes::Min => SizePolicy::Min,
        Sizes::Max => SizePolicy::Max,
        Sizes::Alternating => SizePolicy::Alternating,
        Sizes::Random => SizePolicy::Random(g.seed),
    };
    let (sim, reports) = match simulate_and_validate(&s, discipline, policy, horizon, g.n_limit, events.is_some()) {
        Ok(r) => r,
        Err(e @ SimError::BoundViolated { .. }) => {
            eprintln!("bound violated: {e}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = events {
        let mut f = io::BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(f, "time\tkind\tflow\tsize\tqueues")?;
        for e in &sim.events {
            writeln!(f, "{}", e.line())?;
        }
        f.flush()?;
    }
    let mut w = g.writer()?;
    w.write_record([
        "flow",
        "scheduler",
        "observed_max_delay",
        "bound_scheduler",
        "subset",
        "bound",
        "gap",
        "status",
    ])?;
    for r in &reports {
        let observed = r.observed.as_ref().map(num).unwrap_or_default();
        for c in &r.checks {
            let status = match &c.status {
                CheckStatus::Holds => "holds".to_string(),
                CheckStatus::Skipped(why) => format!("skipped: {why}"),
            };
            w.write_record([
                (r.flow + 1).to_string(),
                discipline.label().to_string(),
                observed.clone(),
                c.scheduler.label().to_string(),
                c.subset.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(" "),
                delay(&c.bound),
                c.gap.as_ref().map(num).unwrap_or_default(),
                status,
            ])?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let settings = g.settings();
    match cli.command {
        Command::Curves { t_max, samples } => curves(g, &t_max, samples)?,
        Command::DelaySweep { from, to, steps } => {
            let us = match (from, to) {
                (Some(a), Some(b)) => linspace(&a, &b, steps),
                _ => default_utilizations(),
            };
            if us.is_empty() {
                bail!("no utilization points");
            }
            let rows = delay_sweep(&g.four_flows()?, &us, settings)?;
            write_rows(g, &["utilization"], &rows, |u| vec![num(u)])?;
        }
        Command::BurstClasses { mixes } => {
            let mixes = or_default(mixes, default_mixes);
            let rows = burst_classes(&g.classes()?, &mixes, settings)?;
            write_rows(g, &["low", "mid", "high"], &rows, |&(a, b, c)| {
                vec![a.to_string(), b.to_string(), c.to_string()]
            })?;
        }
        Command::PsrSweep { psrs } => {
            let psrs = or_default(psrs, default_psrs);
            let rows = psr_sweep(&g.classes()?, &psrs, settings)?;
            write_rows(g, &["psr"], &rows, |p| vec![num(p)])?;
        }
        Command::FlowCount { per_class } => {
            let per_class = or_default(per_class, || (1..=8).collect());
            let rows = flow_count(&g.classes()?, &per_class, settings)?;
            write_rows(g, &["per_class", "total_flows"], &rows, |k| {
                vec![k.to_string(), (3 * k + 1).to_string()]
            })?;
        }
        Command::HeuristicTable { totals } => {
            let totals = or_default(totals, || TABLE_TOTALS.to_vec());
            let rows = heuristic_table(&g.classes()?, &totals, settings)?;
            let mut w = g.writer()?;
            w.write_record(["total_flows", "heuristic", "iwrr", "subset_size", "wall_time_s"])?;
            for r in &rows {
                w.write_record([
                    r.total_flows.to_string(),
                    delay(&r.heuristic.bound),
                    delay(&r.iwrr.bound),
                    r.heuristic.subset.len().to_string(),
                    format_sig(r.wall_time.as_secs_f64(), SIG),
                ])?;
            }
            w.flush()?;
        }
        Command::Simulate {
            scheduler,
            horizon,
            sizes,
            events,
        } => return simulate(g, scheduler, horizon, sizes, events.as_ref()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
