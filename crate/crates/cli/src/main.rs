#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod run;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use asgl::accountant::{default_orders, PrivacyLedger, SubsampledGaussian};
use asgl::dp::sensitivity;
use asgl::eval::{attack_partition, eval_sign_prediction, ssi, train_and_score, LabeledPairSet};
use asgl::graph::{load_edge_list, read_signed_edges, split_edges, write_signed_edges, NodeId, WeightRule};
use asgl::rng::{stream, Domain};
use asgl::sampler::{receptive_field, sample_subgraphs};
use asgl::trainer::{train, TrainConfig};
use asgl::{Embeddings, Sign, SignedGraph};

use config::Overrides;
use report::{summarize, MetricRecord};
use run::{RunDir, RunManifest};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "asgl", version, about = "Differentially private adversarial signed graph embedding")]
struct Cli {
    /// Directory searched for `--graph` paths that do not exist as given.
    #[arg(long, env = "ASGL_DATA_DIR", global = true)]
    data_dir: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonicalize a raw `u v w` edge list.
    Ingest {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop zero-weight records instead of failing.
        #[arg(long)]
        skip_zero: bool,
    },
    /// Sample the training subgraphs and write them as text.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and write a run directory.
    Train(TrainArgs),
    /// Evaluate one or more run directories.
    Eval {
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "sign")]
        tasks: Vec<Task>,
        /// Base directory for the evaluation run.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Print JSON lines instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Train on the member partition and run the link-stealing audit.
    Attack(TrainArgs),
    /// Privacy accounting without data access.
    Accountant(AccountantArgs),
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitKind {
    /// Stratified train/test split of the edges.
    Sign,
    /// 5:2:2:1 member/non-member partition.
    Attack,
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Seed of the edge split; defaults to the training seed.
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "sign")]
    split: SplitKind,
    /// Train this many runs with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Single-precision tables.
    #[arg(long)]
    f32: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    Sign,
    Cluster,
    Attack,
    All,
}

#[derive(Debug, Clone, Args)]
struct AccountantArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long = "paths-n", default_value_t = 3)]
    paths_n: usize,
    #[arg(long = "path-len-l", default_value_t = 4)]
    path_len_l: usize,
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
    #[arg(long = "batch-d", default_value_t = 256)]
    batch_d: u64,
    /// Number of positive training subgraphs.
    #[arg(long)]
    n_tr: u64,
    /// Number of negative training subgraphs; defaults to `--n-tr`.
    #[arg(long)]
    n_tr_neg: Option<u64>,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Paired discriminator iterations (forward mode).
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    steps: Option<u64>,
    /// Target budget (inverse mode: largest admissible number of steps).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Print the per-order table.
    #[arg(long)]
    table: bool,
}

fn resolve(path: &Path, data_dir: Option<&Path>) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    match data_dir {
        Some(dir) if dir.join(path).exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn load_graph(path: &Path, rule: WeightRule) -> Result<asgl::graph::LoadedGraph> {
    let file = File::open(path).with_context(|| format!("opening graph {}", path.display()))?;
    let loaded = load_edge_list(BufReader::new(file), rule)?;
    if loaded.graph.total_edges() == 0 {
        return Err(asgl::Error::Parse { line: 0, msg: format!("{} contains no edges", path.display()) }.into());
    }
    Ok(loaded)
}

#[derive(Serialize)]
struct IngestStats {
    nodes: usize,
    positive_edges: usize,
    negative_edges: usize,
    records: usize,
    duplicates: usize,
    conflicts: usize,
    self_loops: usize,
    skipped_zero: usize,
}

fn cmd_ingest(graph: &Path, out: &Path, skip_zero: bool) -> Result<()> {
    let rule = if skip_zero { WeightRule::SignSkipZero } else { WeightRule::Sign };
    let loaded = load_graph(graph, rule)?;
    fs::create_dir_all(out)?;
    let mut edges = Vec::new();
    loaded.graph.write_edge_list(&mut edges)?;
    fs::write(out.join("edges.txt"), edges)?;
    let mut ids = Vec::new();
    loaded.ids.write(&mut ids)?;
    fs::write(out.join("ids.txt"), ids)?;
    let g = &loaded.graph;
    let stats = IngestStats {
        nodes: g.num_nodes(),
        positive_edges: g.num_edges(Sign::Positive),
        negative_edges: g.num_edges(Sign::Negative),
        records: loaded.records,
        duplicates: loaded.stats.duplicates,
        conflicts: loaded.stats.conflicts,
        self_loops: loaded.stats.self_loops,
        skipped_zero: loaded.skipped_zero,
    };
    fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    println!("{} nodes, {} +, {} −", stats.nodes, stats.positive_edges, stats.negative_edges);
    Ok(())
}

fn resolve_config(common: &Common) -> Result<(TrainConfig, Vec<String>)> {
    let mut cfg = config::load(common.config.as_deref())?;
    let overrides = common.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok((cfg, overrides))
}

fn cmd_sample(graph: &Path, common: &Common, out: &Path) -> Result<()> {
    let (cfg, _) = resolve_config(common)?;
    let g = load_graph(graph, WeightRule::Sign)?.graph;
    let theta_g = Embeddings::init_uniform(g.num_nodes(), cfg.dim, &mut stream(cfg.seed, Domain::InitGenerator, 0))?;
    let nodes: Vec<NodeId> = (0..g.num_nodes()).collect();
    let s = sample_subgraphs(&g, &nodes, cfg.dp().sampler(), &theta_g, cfg.seed)?;
    let mut w = io::BufWriter::new(File::create(out)?);
    s.write_text(&mut w)?;
    w.flush()?;
    println!(
        "{} positive and {} negative subgraphs, {} + / {} − fake pairs",
        s.positive.num_subgraphs(),
        s.negative.num_subgraphs(),
        s.positive.fake_edges.len(),
        s.negative.fake_edges.len()
    );
    Ok(())
}

fn write_edges(run: &mut RunDir, name: &str, edges: &[(NodeId, NodeId, Sign)]) -> Result<()> {
    let mut w = run.artifact(name)?;
    write_signed_edges(edges, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Per-order RDP table as tab-separated text.
fn ledger_table(ledger: &PrivacyLedger, delta: f64) -> String {
    let mut s = String::from("alpha\tgamma_pos\tgamma_neg\trdp\tepsilon\n");
    let ln = (1.0 / delta).ln();
    for (i, &a) in ledger.orders().iter().enumerate() {
        let r = ledger.rdp()[i];
        s += &format!(
            "{a}\t{:e}\t{:e}\t{:e}\t{:.6}\n",
            ledger.step_cost(Sign::Positive)[i],
            ledger.step_cost(Sign::Negative)[i],
            r,
            r + ln / (a - 1.0)
        );
    }
    s
}

fn train_one(
    args: &TrainArgs,
    command: &str,
    cfg: &TrainConfig,
    overrides: &[String],
    graph_path: &Path,
) -> Result<PathBuf> {
    let loaded = load_graph(graph_path, WeightRule::Sign)?;
    let g = loaded.graph;
    let split_seed = args.split_seed.unwrap_or(cfg.seed);
    let mut manifest = RunManifest::new(command, cfg.seed);
    manifest.graph = Some(graph_path.to_path_buf());
    manifest.config_path = args.common.config.clone();
    manifest.overrides = overrides.to_vec();
    manifest.config_hash = Some(config::hash(cfg));

    let (train_graph, train_edges, test_edges, partition) = match args.split {
        SplitKind::Sign => {
            let split = split_edges(&g, args.test_fraction, split_seed)?;
            let train_edges = split.train_graph.signed_edges();
            (split.train_graph, train_edges, split.test_edges, None)
        }
        SplitKind::Attack => {
            let part = attack_partition(&g, split_seed)?;
            let members = part.member_graph(g.num_nodes())?;
            let mut others: Vec<_> = part.target_test.iter().chain(&part.aux_test).copied().collect();
            others.sort_unstable_by_key(|&(u, v, _)| (u, v));
            (members.clone(), members.signed_edges(), others, Some(part))
        }
    };

    // train before creating the run directory so refusals leave nothing behind
    let (theta_text, report, ledger_tsv) = if args.f32 {
        let out = train::<f32>(&train_graph, cfg)?;
        let mut t = Vec::new();
        out.theta_g.write_text(&mut t)?;
        let tsv = ledger_table(&out.report.ledger, cfg.delta);
        (t, out.report, tsv)
    } else {
        let out = train::<f64>(&train_graph, cfg)?;
        let mut t = Vec::new();
        out.theta_g.write_text(&mut t)?;
        let tsv = ledger_table(&out.report.ledger, cfg.delta);
        (t, out.report, tsv)
    };

    let mut run = RunDir::create(&args.out, manifest)?;
    {
        let mut w = run.artifact("config.toml")?;
        w.write_all(toml::to_string(cfg)?.as_bytes())?;
        w.flush()?;
    }
    {
        let mut w = run.artifact("ids.txt")?;
        loaded.ids.write(&mut w)?;
        w.flush()?;
    }
    write_edges(&mut run, "train_edges.txt", &train_edges)?;
    write_edges(&mut run, "test_edges.txt", &test_edges)?;
    if let Some(part) = &partition {
        write_edges(&mut run, "target_train.txt", &part.target_train)?;
        write_edges(&mut run, "aux_train.txt", &part.aux_train)?;
        write_edges(&mut run, "target_test.txt", &part.target_test)?;
        write_edges(&mut run, "aux_test.txt", &part.aux_test)?;
    }
    {
        let mut w = run.artifact("embeddings.txt")?;
        w.write_all(&theta_text)?;
        w.flush()?;
    }
    run.write_json("train_report.json", &report)?;
    {
        let mut w = run.artifact("ledger.tsv")?;
        w.write_all(ledger_tsv.as_bytes())?;
        w.flush()?;
    }
    let path = run.finish()?;
    match report.epsilon_spent {
        Some(eps) => println!(
            "{}: epsilon {eps:.4} (alpha {}), D steps +{} -{}, stopped early: {}",
            path.display(),
            report.best_alpha.unwrap_or(f64::NAN),
            report.disc_steps.positive,
            report.disc_steps.negative,
            report.stopped_early
        ),
        None => println!("{}: non-private, {} epochs", path.display(), report.epochs_completed),
    }
    Ok(path)
}

fn cmd_train(args: &TrainArgs, command: &str, data_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    let (base, overrides) = resolve_config(&args.common)?;
    if args.repeats == 0 {
        return Err(asgl::Error::Config("repeats must be at least 1".into()).into());
    }
    let graph_path = resolve(&args.graph, data_dir);
    (0..args.repeats)
        .map(|r| {
            let cfg = TrainConfig { seed: base.seed + r, ..base.clone() };
            let mut args = args.clone();
            if let Some(s) = args.split_seed.as_mut() {
                *s += r;
            }
            train_one(&args, command, &cfg, &overrides, &graph_path)
        })
        .collect()
}

fn read_edges(path: &Path) -> Result<Vec<(NodeId, NodeId, Sign)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_signed_edges(BufReader::new(file))?)
}

fn membership(
    theta: &Embeddings,
    members: &[(NodeId, NodeId, Sign)],
    others: &[(NodeId, NodeId, Sign)],
) -> Result<LabeledPairSet> {
    let pairs = members.iter().chain(others).map(|&(u, v, _)| (u, v)).collect();
    let labels = members.iter().map(|_| true).chain(others.iter().map(|_| false)).collect();
    Ok(LabeledPairSet::new(theta, pairs, labels)?)
}

fn eval_run(dir: &Path, tasks: &[Task]) -> Result<Vec<MetricRecord>> {
    let manifest = RunManifest::load(dir)?;
    let emb_path = dir.join("embeddings.txt");
    let file = File::open(&emb_path)
        .map_err(|e| anyhow!(asgl::Error::Io(e)).context(format!("missing embeddings {}", emb_path.display())))?;
    let theta = Embeddings::read_text(BufReader::new(file))?;
    let train_edges = read_edges(&dir.join("train_edges.txt"))?;
    let test_edges = read_edges(&dir.join("test_edges.txt"))?;
    let hash = manifest.config_hash.clone().unwrap_or_default();
    let all = tasks.contains(&Task::All);
    let mut out = Vec::new();
    let mut push = |metric: &str, value: f64| {
        out.push(MetricRecord { metric: metric.into(), value, config_hash: hash.clone(), seed: manifest.seed })
    };
    if all || tasks.contains(&Task::Sign) {
        let train_graph = SignedGraph::from_edges(theta.num_rows(), train_edges.iter().copied())?.0;
        let split = asgl::EdgeSplit { train_graph, test_edges: test_edges.clone() };
        push("sign_auc", eval_sign_prediction(&theta, &split)?);
    }
    if all || tasks.contains(&Task::Cluster) {
        let r = ssi(&theta, &test_edges)?;
        push("cd_pos", r.cd_pos);
        push("cd_neg", r.cd_neg);
        push("ssi", r.ssi);
    }
    if all || tasks.contains(&Task::Attack) {
        let part = |name: &str| read_edges(&dir.join(name));
        let target_train =
            part("target_train.txt").context("run has no attack partition (train with --split attack)")?;
        let train = membership(&theta, &part("aux_train.txt")?, &part("aux_test.txt")?)?;
        let test = membership(&theta, &target_train, &part("target_test.txt")?)?;
        push("attack_auc", train_and_score(&train, &test)?);
    }
    Ok(out)
}

fn cmd_eval(runs: &[PathBuf], tasks: &[Task], out: &Path, json: bool) -> Result<()> {
    let mut records = Vec::new();
    for dir in runs {
        records.extend(eval_run(dir, tasks)?);
    }
    let summary = summarize(&records);
    let mut lines = String::new();
    for r in &records {
        lines += &(serde_json::to_string(r)? + "\n");
    }
    let mut summary_lines = String::new();
    for s in &summary {
        summary_lines += &(serde_json::to_string(s)? + "\n");
    }
    let mut manifest = RunManifest::new("eval", records.first().map_or(0, |r| r.seed));
    manifest.overrides = runs.iter().map(|r| format!("run={}", r.display())).collect();
    let mut run = RunDir::create(out, manifest)?;
    run.artifact("eval.jsonl")?.write_all(lines.as_bytes())?;
    run.artifact("summary.jsonl")?.write_all(summary_lines.as_bytes())?;
    let path = run.finish()?;
    if json {
        print!("{lines}{summary_lines}");
    } else {
        println!("{:<12} {:>10} {:>10} {:>4}", "metric", "mean", "std", "n");
        for s in &summary {
            println!("{:<12} {:>10.4} {:>10.4} {:>4}", s.metric, s.mean, s.std, s.n);
        }
        println!("reports in {}", path.display());
    }
    Ok(())
}

fn cmd_attack(args: &TrainArgs, data_dir: Option<&Path>) -> Result<()> {
    let mut args = args.clone();
    args.split = SplitKind::Attack;
    let runs = cmd_train(&args, "attack", data_dir)?;
    cmd_eval(&runs, &[Task::Attack], &args.out, false)
}

fn cmd_accountant(a: &AccountantArgs) -> Result<()> {
    let r = receptive_field(a.paths_n, a.path_len_l) as u64;
    if a.paths_n == 0 || a.path_len_l == 0 || !(a.clip > 0.0) || a.batch_d == 0 {
        return Err(asgl::Error::Config("N, L, C and B_d must be positive".into()).into());
    }
    let pos = SubsampledGaussian::new(a.sigma, a.n_tr, r, a.batch_d).map_err(|e| asgl::Error::Config(e.to_string()))?;
    let neg = SubsampledGaussian::new(a.sigma, a.n_tr_neg.unwrap_or(a.n_tr), r, a.batch_d)
        .map_err(|e| asgl::Error::Config(e.to_string()))?;
    let mut ledger = PrivacyLedger::new(pos, neg, default_orders())?;
    if !(a.delta > 0.0 && a.delta < 1.0) {
        return Err(asgl::Error::Config("delta must lie in (0, 1)".into()).into());
    }
    println!("R_NL = {r}, sensitivity = {}", sensitivity(a.paths_n, a.path_len_l, a.clip));
    let steps = match (a.steps, a.epsilon) {
        (Some(t), _) => t,
        (None, Some(eps)) => match ledger.max_pair_steps(eps, a.delta)? {
            Some(t) => {
                println!("max steps for epsilon {eps}: {t}");
                t
            }
            None => {
                println!("max steps for epsilon {eps}: unbounded");
                return Ok(());
            }
        },
        (None, None) => bail!("either --steps or --epsilon is required"),
    };
    ledger.accumulate(steps);
    let (eps, alpha) = ledger.to_dp(a.delta)?;
    println!("steps {steps}: epsilon {eps:.6} at alpha {alpha} (delta {})", a.delta);
    if a.table {
        print!("{}", ledger_table(&ledger, a.delta));
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<asgl::Error>()) {
        Some(asgl::Error::BudgetInfeasible(_)) => EXIT_BUDGET,
        Some(asgl::Error::Config(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let data_dir = cli.data_dir.as_deref();
    let result = match &cli.command {
        Command::Ingest { graph, out, skip_zero } => cmd_ingest(&resolve(graph, data_dir), out, *skip_zero),
        Command::Sample { graph, common, out } => cmd_sample(&resolve(graph, data_dir), common, out),
        Command::Train(args) => cmd_train(args, "train", data_dir).map(|_| ()),
        Command::Eval { runs, tasks, out, json } => cmd_eval(runs, tasks, out, *json),
        Command::Attack(args) => cmd_attack(args, data_dir),
        Command::Accountant(a) => cmd_accountant(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
