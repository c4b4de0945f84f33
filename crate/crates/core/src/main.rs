use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tfhh::experiment::{self, ExperimentConfig, OUTPUT_DIR_ENV};
use tfhh::planner::{self, PlanInput, Strategy};
use tfhh::simnet::TopologyKind;
use tfhh::workload::{self, StreamSpec};
use tfhh::Error;

#[derive(Parser)]
#[command(name = "tfhh", version, about = "Gossip mining of time-faded heavy hitters: simulator, planner and generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-peer and summary CSV files.
    Run(Box<RunArgs>),
    /// Choose sketch width, depth and rounds for a target tolerance.
    Plan(PlanArgs),
    /// Dump a generated stream or topology.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; overrides the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in profile: desk or paper.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Override a field, e.g. `--set churn.fail_prob=0.05`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Sweep a field over comma-separated values, e.g. `--sweep skew=0.9,1.1`.
    #[arg(long, value_name = "PATH=V1,V2,...")]
    sweep: Option<String>,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    /// Number of peers.
    #[arg(long)]
    peers: Option<usize>,
    /// Total stream length n.
    #[arg(long)]
    stream_length: Option<u64>,
    /// Item universe size m.
    #[arg(long)]
    universe: Option<u32>,
    /// Zipf skew.
    #[arg(long)]
    skew: Option<f64>,
    /// Sketch depth d.
    #[arg(long)]
    depth: Option<usize>,
    /// Sketch width w.
    #[arg(long)]
    width: Option<usize>,
    /// Gossip rounds R.
    #[arg(long)]
    rounds: Option<u32>,
    /// Neighbours contacted per round.
    #[arg(long)]
    fan_out: Option<usize>,
    /// Heavy-hitter threshold.
    #[arg(long)]
    phi: Option<f64>,
    /// Upper bound on the peer count used in the error bound.
    #[arg(long)]
    p_star: Option<u64>,
    /// Gossip failure probability.
    #[arg(long)]
    delta_g: Option<f64>,
    /// Independent repetitions.
    #[arg(long)]
    repetitions: Option<u32>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn field_overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |name: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(format!("{name}={v}"));
            }
        };
        push("peers", self.peers.map(|v| v.to_string()));
        push("stream_length", self.stream_length.map(|v| v.to_string()));
        push("universe", self.universe.map(|v| v.to_string()));
        push("skew", self.skew.map(|v| v.to_string()));
        push("depth", self.depth.map(|v| v.to_string()));
        push("width", self.width.map(|v| v.to_string()));
        push("rounds", self.rounds.map(|v| v.to_string()));
        push("fan_out", self.fan_out.map(|v| v.to_string()));
        push("phi", self.phi.map(|v| v.to_string()));
        push("p_star", self.p_star.map(|v| v.to_string()));
        push("delta_g", self.delta_g.map(|v| v.to_string()));
        push("repetitions", self.repetitions.map(|v| v.to_string()));
        push("master_seed", self.seed.map(|v| v.to_string()));
        out
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    TimeDominant,
    SpaceDominant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct PlanArgs {
    /// Heavy-hitter threshold.
    #[arg(long)]
    phi: f64,
    /// Target tolerance.
    #[arg(long)]
    eps: f64,
    /// Gossip failure probability.
    #[arg(long, default_value_t = 0.05)]
    delta_g: f64,
    /// Overall failure probability; must exceed --delta-g.
    #[arg(long)]
    delta: f64,
    /// Upper bound on the peer count.
    #[arg(long)]
    p_star: f64,
    #[arg(long, value_enum, default_value = "time-dominant")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Write a Zipfian stream as binary records (u32 item, u64 timestamp).
    Stream {
        /// Stream length.
        #[arg(long)]
        n: u64,
        /// Universe size.
        #[arg(long)]
        m: u32,
        /// Zipf skew.
        #[arg(long)]
        skew: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Destination file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a topology as an edge list, one `u v` pair per line.
    Topology {
        #[arg(long, value_enum)]
        kind: TopologyArg,
        #[arg(long)]
        peers: usize,
        /// Edges per new node (ba).
        #[arg(long, default_value_t = 3)]
        m_attach: usize,
        /// Edge probability (er); defaults to 2 ln p / p.
        #[arg(long)]
        edge_prob: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Er,
    Ba,
    Complete,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(*args),
        Command::Plan(args) => plan(args),
        Command::Gen(cmd) => gen(cmd),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`tfhh gen topology ... | head`) is not an error.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(args: RunArgs) -> tfhh::Result<()> {
    let base = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::profile(&args.profile)?,
    };
    let mut overrides = args.field_overrides();
    overrides.extend(args.overrides.iter().cloned());
    let mut base = base.with_overrides(&overrides)?;
    if args.output.is_some() {
        base.output_path = args.output.clone();
    }
    let configs = match &args.sweep {
        Some(spec) => {
            let (path, values) = spec
                .split_once('=')
                .ok_or_else(|| Error::config("sweep", "expected PATH=V1,V2,..."))?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            experiment::expand_sweep(&base, path.trim(), &values)?
        }
        None => vec![base],
    };
    if args.dry_run {
        for c in &configs {
            println!("{}", c.to_json());
        }
        return Ok(());
    }

    let dir = experiment::output_dir(&configs[0]);
    fs::create_dir_all(&dir)?;
    let mut records = String::new();
    let mut summary = String::new();
    for (block, config) in configs.iter().enumerate() {
        let output = experiment::run_experiment(config)?;
        let rows = output.records_csv(config);
        let sums = output.summary_csv();
        // Keep a single header when several sweep blocks share a file.
        let skip = |s: &str| if block == 0 { s.to_string() } else { s.lines().skip(1).map(|l| format!("{l}\n")).collect() };
        records.push_str(&skip(&rows));
        summary.push_str(&skip(&sums));
        match &output.summary {
            Some(s) => println!(
                "{} recall={:.6}±{:.6} precision={:.6}±{:.6} are={:.3e}±{:.3e} peers={} records={} unconverged={} pre_convergence={}",
                output.config_hash,
                s.recall.mean,
                s.recall.half_width,
                s.precision.mean,
                s.precision.half_width,
                s.are.mean,
                s.are.half_width,
                s.peers,
                s.records,
                output.unconverged,
                output.pre_convergence
            ),
            None => println!("{} no peer could answer (unconverged={})", output.config_hash, output.unconverged),
        }
    }
    fs::write(dir.join("records.csv"), records)?;
    fs::write(dir.join("summary.csv"), summary)?;
    println!("wrote {}", dir.join("records.csv").display());
    Ok(())
}

fn plan(args: PlanArgs) -> tfhh::Result<()> {
    let input = PlanInput {
        phi: args.phi,
        eps: args.eps,
        delta_g: args.delta_g,
        delta: args.delta,
        p_star: args.p_star,
    };
    let strategy = match args.strategy {
        StrategyArg::TimeDominant => Strategy::TimeDominant,
        StrategyArg::SpaceDominant => Strategy::SpaceDominant,
    };
    let p = planner::plan(&input, strategy)?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string(&p).expect("plan serialises")),
        Format::Csv => {
            let name = serde_json::to_value(p.strategy).expect("strategy serialises");
            println!("strategy,d,w,rounds,eps_star,predicted_tolerance");
            println!(
                "{},{},{},{},{},{}",
                name.as_str().unwrap_or_default(),
                p.d,
                p.w,
                p.rounds,
                p.eps_star,
                p.predicted_tolerance
            );
        }
    }
    Ok(())
}

fn gen(cmd: GenCommand) -> tfhh::Result<()> {
    match cmd {
        GenCommand::Stream { n, m, skew, seed, out } => {
            let stream = workload::gen_stream(&StreamSpec { n, m, skew, seed })?;
            workload::write_stream(BufWriter::new(File::create(out)?), &stream)?;
        }
        GenCommand::Topology {
            kind,
            peers,
            m_attach,
            edge_prob,
            seed,
            out,
        } => {
            let kind = match kind {
                TopologyArg::Er => TopologyKind::ErdosRenyi { edge_prob },
                TopologyArg::Ba => TopologyKind::BarabasiAlbert { m_attach },
                TopologyArg::Complete => TopologyKind::Complete,
            };
            let topology = kind.generate(peers, seed)?;
            let sink: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(io::stdout().lock()),
            };
            topology.write_edge_list(sink)?;
        }
    }
    Ok(())
}
