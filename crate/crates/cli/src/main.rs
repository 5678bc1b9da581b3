use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ibrelay::config::parse_bits_list;
use ibrelay::{
    emit_csv, emit_svg, parse_config, point_spec, run_sweep, to_csv, Axis, Preset, Scheme, SvgStyle, SweepOverrides,
};
use ibrelay_oracle::{run_suite, SuiteLevel, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "ibrelay", version, about = "Information-bottleneck bounds for an oblivious MIMO relay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bounds over a parameter grid.
    Sweep(SweepArgs),
    /// Tabulate every bound and limit at one configuration.
    Point(PointArgs),
    /// Run the Monte Carlo oracle suite.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Transmit antennas.
    #[arg(long)]
    k: Option<usize>,
    /// Relay antennas.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Bottleneck capacity in bits per complex dimension.
    #[arg(long)]
    capacity_bits: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Starting layout: snr, budget or antennas.
    #[arg(long)]
    preset: Option<Preset>,
    /// snr_db, capacity_bits or antennas_m.
    #[arg(long)]
    axis: Option<Axis>,
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Comma-separated subset of ub, qci, mmse, or `all`.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated QCI resolutions in bits.
    #[arg(long)]
    qci_bits: Option<String>,
    /// Monte Carlo draws for an extra upper-bound column.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, env = "IBRELAY_SEED")]
    seed: Option<u64>,
    /// Add large-budget limit columns.
    #[arg(long)]
    limits: bool,
    /// CSV destination; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value = "4,8")]
    qci_bits: String,
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, env = "IBRELAY_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    /// quick (1e4 draws per check) or full (1e5).
    #[arg(long, default_value = "quick")]
    level: SuiteLevel,
    #[arg(long, env = "IBRELAY_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the report as `check,key,value` CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_config(path: &PathBuf) -> Result<SweepOverrides> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    SweepOverrides::from_config(&map).with_context(|| format!("in {}", path.display()))
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let file = match &args.config {
        Some(path) => read_config(path)?,
        None => SweepOverrides::default(),
    };
    let flags = SweepOverrides {
        preset: args.preset,
        axis: args.axis,
        from: args.from,
        to: args.to,
        step: args.step,
        k: args.channel.k,
        m: args.channel.m,
        snr_db: args.channel.snr_db,
        capacity_bits: args.channel.capacity_bits,
        schemes: args.scheme.as_deref().map(Scheme::parse_list).transpose().map_err(anyhow::Error::msg)?,
        qci_bits: args.qci_bits.as_deref().map(parse_bits_list).transpose().map_err(anyhow::Error::msg)?,
        samples: args.samples,
        seed: args.seed,
        limits: args.limits.then_some(true),
        out: args.out,
        svg: args.svg,
    };
    let settings = file.merge(flags);
    let spec = settings.build_spec()?;
    let rows = run_sweep(&spec)?;
    match &settings.out {
        Some(path) => emit_csv(&spec, &rows, path)?,
        None => print!("{}", to_csv(&spec, &rows)?),
    }
    if let Some(path) = &settings.svg {
        let fixed = &spec.fixed;
        let title = format!("K={} M={} {} sweep", fixed.dims.k(), fixed.dims.m(), spec.axis);
        emit_svg(&spec, &rows, path, &SvgStyle { title: Some(title), ..SvgStyle::default() })?;
    }
    Ok(true)
}

fn point(args: PointArgs) -> Result<bool> {
    let c = &args.channel;
    let o = SweepOverrides {
        k: c.k,
        m: c.m,
        snr_db: c.snr_db,
        capacity_bits: c.capacity_bits,
        ..Default::default()
    };
    let fixed = o.build_spec()?.fixed;
    let bits = parse_bits_list(&args.qci_bits).map_err(anyhow::Error::msg)?;
    let spec = point_spec(fixed, bits, args.samples, args.seed);
    let rows = run_sweep(&spec)?;
    println!("k = {}", fixed.dims.k());
    println!("m = {}", fixed.dims.m());
    println!("snr_db = {}", ibrelay_oracle::report::format_sig(fixed.snr_db()));
    for (name, v) in spec.columns().iter().zip(spec.cells(&rows[0])) {
        let v = v.map_or_else(|| "NA".to_string(), ibrelay_oracle::report::format_sig);
        println!("{name} = {v}");
    }
    Ok(true)
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let suite = run_suite(args.level, args.seed);
    print!("{suite}");
    if let Some(path) = &args.out {
        fs::write(path, suite.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    if !suite.passed() {
        let failed = suite.failures();
        bail!("{failed} oracle check(s) failed");
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Point(a) => point(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
