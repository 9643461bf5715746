use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netdiff::fdr::Method;
use netdiff::gap::GapConfig;
use netdiff::harness::{
    analyze_real_data, emit_reports, load_config, reference_grid, run_methods, write_text,
    AnalysisSettings, FileConfig, ReportFormat, ScenarioEntry, SimulationSettings, Transform,
};
use netdiff::netdata::{load_stack, save_stack, sniff_format, Group, StackFormat};
use netdiff::simgen::{generate_scenario, Family, FamilyParams};
use netdiff::{Error, Result};

/// Two-sample testing of network-valued data: global test, link-wise FDR
/// control and the auxiliary-information weighted procedure.
#[derive(Debug, Parser)]
#[command(name = "netdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with defaults for every flag; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Nominal level [default: 0.05].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Replications per scenario [default: 100].
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Master seed; required for simulate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on the number of groups [default: 3].
    #[arg(long, global = true)]
    k_groups: Option<usize>,
    /// Storey threshold for the alternative-proportion estimate [default: 0.5].
    #[arg(long, global = true)]
    storey_lambda: Option<f64>,
    /// Clamp for the alternative-proportion estimate [default: 1e-5].
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Entrywise transform before testing real data [default: none].
    #[arg(long, global = true, value_parser = parse_from_str::<Transform>)]
    transform: Option<Transform>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format: tsv, jsonl or table [default: table].
    #[arg(long, global = true, value_parser = parse_from_str::<ReportFormat>)]
    format: Option<ReportFormat>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo replications of simulated scenarios.
    Simulate(SimulateArgs),
    /// Global test of equal mean networks.
    TestGlobal(PairArgs),
    /// Link-wise test with the plain threshold search.
    TestLinks(PairArgs),
    /// Link-wise test weighted by the auxiliary statistic.
    TestLinksEnhanced(PairArgs),
    /// Convert a stack between csv-stack and binary-stack.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 3 families x 2 sample sizes x 3 sparsity levels on 68 nodes.
    Reference,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Single scenario from flags, replacing the config's scenario list.
    #[arg(long, value_parser = parse_from_str::<Family>, conflicts_with = "preset")]
    family: Option<Family>,
    #[arg(long, default_value_t = 68, requires = "family")]
    nodes: usize,
    /// Size of both groups.
    #[arg(long, requires = "family")]
    n: Option<usize>,
    #[arg(long, requires = "family")]
    n1: Option<usize>,
    #[arg(long, requires = "family")]
    n2: Option<usize>,
    /// Number of signal links.
    #[arg(long, requires = "family", conflicts_with = "k_fraction")]
    k_q: Option<usize>,
    /// Number of signal links as a fraction of the link count.
    #[arg(long, requires = "family")]
    k_fraction: Option<f64>,
    /// Comma-separated list of global, baseline, enhanced [default: baseline,enhanced].
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<Method>)]
    methods: Option<Vec<Method>>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Also write the first replication of each scenario as binary stacks
    /// `scenario<i>_group<1|2>.bin` into this directory.
    #[arg(long)]
    export_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Stack of the first group.
    group1: PathBuf,
    /// Stack of the second group.
    group2: PathBuf,
    /// csv-stack or binary-stack; sniffed from each file when absent.
    #[arg(long, value_parser = parse_from_str::<StackFormat>)]
    input_format: Option<StackFormat>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    /// Input format; sniffed when absent.
    #[arg(long, value_parser = parse_from_str::<StackFormat>)]
    from: Option<StackFormat>,
    /// Output format.
    #[arg(long, value_parser = parse_from_str::<StackFormat>)]
    to: StackFormat,
}

fn parse_from_str<T>(s: &str) -> std::result::Result<T, String>
where
    T: std::str::FromStr<Err = Error>,
{
    s.parse().map_err(|e: Error| e.to_string())
}

/// Flag values layered over the config file.
struct Resolved {
    file: FileConfig,
    alpha: f64,
    gap: GapConfig,
    transform: Transform,
    format: ReportFormat,
    out: Option<PathBuf>,
}

impl Resolved {
    fn new(common: &Common) -> Result<Self> {
        let file = match &common.config {
            Some(path) => load_config(path)?,
            None => FileConfig::default(),
        };
        let defaults = GapConfig::default();
        let alpha = common.alpha.or(file.alpha).unwrap_or(defaults.alpha);
        let gap = GapConfig {
            k_groups: common
                .k_groups
                .or(file.k_groups)
                .unwrap_or(defaults.k_groups),
            storey_lambda: common
                .storey_lambda
                .or(file.storey_lambda)
                .unwrap_or(defaults.storey_lambda),
            epsilon: common.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
            alpha,
            ..defaults
        };
        gap.validate()?;
        Ok(Self {
            alpha,
            gap,
            transform: common.transform.or(file.transform).unwrap_or_default(),
            format: common.format.or(file.format).unwrap_or(ReportFormat::Table),
            out: common.out.clone().or_else(|| file.out.clone()),
            file,
        })
    }
}

fn simulate(common: &Common, args: &SimulateArgs) -> Result<()> {
    let cfg = Resolved::new(common)?;
    if common.transform.is_some() {
        return Err(Error::InvalidArgument(
            "--transform applies to real data only".into(),
        ));
    }
    let seed = common.seed.or(cfg.file.seed);
    let specs = if let Some(family) = args.family {
        let entry = ScenarioEntry {
            family,
            p: Some(args.nodes),
            n: args.n,
            n1: args.n1,
            n2: args.n2,
            k_q: args.k_q,
            k_fraction: args.k_fraction,
            seed: None,
            params: FamilyParams::default(),
        };
        vec![entry.resolve(seed)?]
    } else if args.preset == Some(Preset::Reference) {
        let seed = seed.ok_or_else(|| Error::InvalidArgument("simulate needs --seed".into()))?;
        reference_grid(seed)
    } else if !cfg.file.scenario.is_empty() {
        cfg.file
            .scenario
            .iter()
            .map(|s| s.resolve(seed))
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(Error::InvalidArgument(
            "no scenario: pass --family, --preset or a config with [[scenario]] tables".into(),
        ));
    };
    let settings = SimulationSettings {
        alpha: cfg.alpha,
        reps: common.reps.or(cfg.file.reps).unwrap_or(100),
        methods: args
            .methods
            .clone()
            .or_else(|| cfg.file.methods.clone())
            .unwrap_or_else(|| vec![Method::Baseline, Method::Enhanced]),
        gap: cfg.gap.clone(),
        workers: common.workers.or(cfg.file.workers),
    };
    if let Some(dir) = &args.export_dir {
        for (i, spec) in specs.iter().enumerate() {
            let scenario = generate_scenario(spec, 0)?;
            save_stack(
                &scenario.stack1,
                &dir.join(format!("scenario{i}_group1.bin")),
                StackFormat::BinaryStack,
            )?;
            save_stack(
                &scenario.stack2,
                &dir.join(format!("scenario{i}_group2.bin")),
                StackFormat::BinaryStack,
            )?;
        }
    }
    let mut reports = Vec::new();
    for spec in &specs {
        reports.extend(run_methods(spec, &settings)?);
    }
    write_text(&emit_reports(&reports, cfg.format)?, cfg.out.as_deref())
}

fn analyze(common: &Common, args: &PairArgs, method: Method) -> Result<()> {
    let cfg = Resolved::new(common)?;
    let settings = AnalysisSettings {
        alpha: cfg.alpha,
        transform: cfg.transform,
        gap: cfg.gap.clone(),
        format: args.input_format,
    };
    let analysis = analyze_real_data(&args.group1, &args.group2, &settings)?;
    write_text(&analysis.render(method, cfg.format)?, cfg.out.as_deref())
}

fn convert(args: &ConvertArgs) -> Result<()> {
    let from = match args.from {
        Some(f) => f,
        None => sniff_format(&args.input)?,
    };
    let stack = load_stack(&args.input, from, Group::First)?;
    save_stack(&stack, Path::new(&args.output), args.to)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => simulate(&cli.common, args),
        Command::TestGlobal(args) => analyze(&cli.common, args, Method::Global),
        Command::TestLinks(args) => analyze(&cli.common, args, Method::Baseline),
        Command::TestLinksEnhanced(args) => analyze(&cli.common, args, Method::Enhanced),
        Command::Convert(args) => convert(args),
    }
}

/// 2 for bad input, 3 for a broken internal invariant.
fn exit_code(e: &Error) -> u8 {
    if e.is_internal() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        assert_eq!(exit_code(&Error::Invariant("x".into())), 3);
        let wrapped = Error::Replication {
            index: 4,
            source: Box::new(Error::Invariant("x".into())),
        };
        assert_eq!(exit_code(&wrapped), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
