use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use classlink::eval::EvalReport;
use classlink::pipeline::{Pipeline, RunConfig};
use classlink::Result;

/// Class-prior link prediction pipeline.
#[derive(Parser)]
#[command(name = "classlink", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key.path=value` override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Read the input graph into graph.json.
    Ingest {
        /// Edge list (sets data.edges).
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Directory with <name>.content and <name>.cites (sets data.linqs_dir).
        #[arg(long)]
        linqs_dir: Option<PathBuf>,
    },
    /// Split edges into train/valid/test with negative pools.
    Split {
        /// Negatives per valid and test pool.
        #[arg(long)]
        pool: Option<usize>,
    },
    /// Count the class prior on training edges.
    Prior {
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Compute pseudo-labels on the training graph.
    Cluster {
        #[command(flatten)]
        labels: LabelArgs,
        /// Fixed k-means cluster count instead of the elbow sweep.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train the link predictor.
    Train {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Rank held-out edges with heuristics and the trained model.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Re-export the prior heatmap CSV.
    Heatmap {
        #[command(flatten)]
        labels: LabelArgs,
    },
    /// Time prior construction against edge count.
    Bench {
        /// Comma-separated edge counts.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Run every stage the configuration needs.
    RunAll {
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

#[derive(Args)]
struct LabelArgs {
    /// Label source: true, kmeans, louvain or mono.
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Model mode: ncn, ncnc or backbone_only.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Comma-separated scorers: cn, aa, ra, katz, hc, model.
    #[arg(long, value_delimiter = ',')]
    scorers: Vec<String>,
    /// mrr, hr@K or hits@K.
    #[arg(long)]
    metric: Option<String>,
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

impl LabelArgs {
    fn push(&self, o: &mut Vec<String>) {
        if let Some(s) = &self.source {
            o.push(format!("labels.source = {}", quoted(s)));
        }
    }
}

impl ModelArgs {
    fn push(&self, o: &mut Vec<String>) {
        if let Some(m) = &self.mode {
            o.push(format!("train.mode = {}", quoted(m)));
        }
        if let Some(e) = self.epochs {
            o.push(format!("model.epochs = {e}"));
        }
    }
}

impl EvalArgs {
    fn push(&self, o: &mut Vec<String>) {
        if !self.scorers.is_empty() {
            let list: Vec<String> = self.scorers.iter().map(|s| quoted(s)).collect();
            o.push(format!("eval.scorers = [{}]", list.join(", ")));
        }
        if let Some(m) = &self.metric {
            o.push(format!("eval.metric = {}", quoted(m)));
        }
    }
}

/// Overrides in increasing precedence: `--set`, then typed flags.
fn overrides(cli: &Cli) -> Vec<String> {
    let mut o = cli.common.set.clone();
    if let Some(s) = cli.common.seed {
        o.push(format!("seed = {s}"));
    }
    if let Some(p) = &cli.common.out {
        o.push(format!("out = {}", quoted(&p.to_string_lossy())));
    }
    match &cli.command {
        Command::Ingest { edges, linqs_dir } => {
            if let Some(e) = edges {
                o.push(format!("data.edges = {}", quoted(&e.to_string_lossy())));
            }
            if let Some(d) = linqs_dir {
                o.push(format!("data.linqs_dir = {}", quoted(&d.to_string_lossy())));
            }
        }
        Command::Split { pool } => {
            if let Some(p) = pool {
                o.push(format!("split.negative_pool = {p}"));
            }
        }
        Command::Prior { labels } | Command::Heatmap { labels } => labels.push(&mut o),
        Command::Cluster { labels, k } => {
            labels.push(&mut o);
            if let Some(k) = k {
                o.push(format!("labels.k = {k}"));
            }
        }
        Command::Train { model } => model.push(&mut o),
        Command::Evaluate { model, eval } => {
            model.push(&mut o);
            eval.push(&mut o);
        }
        Command::Bench { sizes, repeats } => {
            if !sizes.is_empty() {
                let list: Vec<String> = sizes.iter().map(ToString::to_string).collect();
                o.push(format!("bench.sizes = [{}]", list.join(", ")));
            }
            if let Some(r) = repeats {
                o.push(format!("bench.repeats = {r}"));
            }
        }
        Command::RunAll { labels, model, eval } => {
            labels.push(&mut o);
            model.push(&mut o);
            eval.push(&mut o);
        }
    }
    o
}

fn print_reports(p: &Pipeline, reports: &[EvalReport]) {
    for r in reports {
        println!(
            "{:<14} {} = {:.4}  ({} positives, {} negatives) -> {}",
            r.scorer,
            r.metric,
            r.value,
            r.n_positives,
            r.n_negatives,
            p.layout.report(&r.scorer).display()
        );
    }
}

fn run(cli: &Cli) -> Result<()> {
    let config = RunConfig::load(cli.common.config.as_deref(), &overrides(cli))?;
    let p = Pipeline::new(config);
    let layout = &p.layout;
    let cfg = &p.config;
    match &cli.command {
        Command::Ingest { .. } => {
            let g = p.ingest()?;
            println!(
                "graph: {} nodes, {} edges, {} features, {} classes -> {}",
                g.n_nodes(),
                g.n_edges(),
                g.n_features(),
                g.labels().map_or(0, |l| l.n_classes()),
                layout.graph().display()
            );
        }
        Command::Split { .. } => {
            let s = p.split()?;
            println!(
                "split: {} train, {} valid, {} test, {}/{} negatives -> {}",
                s.train_edges.len(),
                s.valid_edges.len(),
                s.test_edges.len(),
                s.valid_negatives.len(),
                s.test_negatives.len(),
                layout.split().display()
            );
        }
        Command::Cluster { .. } => {
            let l = p.cluster()?;
            if let Some(curve) = &l.ssd_curve {
                for (k, ssd) in curve {
                    println!("k = {k:>3}  ssd = {ssd:.6e}");
                }
            }
            println!(
                "labels: {} with k = {} -> {}",
                cfg.labels.source.as_str(),
                l.k,
                layout.labels(cfg.labels.source, cfg.split_seed()).display()
            );
        }
        Command::Prior { .. } => {
            let prior = p.prior()?;
            for row in prior.prob_rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
                println!("{}", cells.join(" "));
            }
            println!(
                "prior: {} classes -> {}",
                prior.n_classes(),
                layout.prior(cfg.labels.source, cfg.split_seed()).display()
            );
        }
        Command::Heatmap { .. } => println!("heatmap -> {}", p.heatmap()?.display()),
        Command::Train { .. } => {
            let out = p.train()?;
            println!(
                "trained {}: {} epochs, best epoch {}, valid MRR {} -> {}",
                cfg.train.mode.as_str(),
                out.log.len(),
                out.best_epoch,
                out.best_val_mrr.map_or_else(|| "n/a".into(), |v| format!("{v:.4}")),
                layout.checkpoint(cfg.train.mode).display()
            );
        }
        Command::Evaluate { .. } => print_reports(&p, &p.evaluate()?),
        Command::Bench { .. } => {
            let r = p.bench()?;
            for row in &r.rows {
                println!("{:>10} edges  {:.6} s", row.edges, row.seconds);
            }
            println!(
                "slope {:.3e} s/edge, R² {:.4} -> {}",
                r.slope,
                r.r_squared,
                layout.bench_csv().display()
            );
        }
        Command::RunAll { .. } => print_reports(&p, &p.run_all()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
