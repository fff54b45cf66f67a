//! `graphbench` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use graphbench::bench::{emit_tables, run_bench, write_coords, BenchConfig, Task};
use graphbench::community::{
    girvan_newman, girvan_newman_max_modularity, label_propagation, louvain, modularity,
};
use graphbench::embeddings::{node2vec, EmbeddingTable, SkipGramConfig, WalkConfig};
use graphbench::features::{parse_feature_list, structural_features, StructuralFeature};
use graphbench::graph::read_edge_list;
use graphbench::projection::{project_2d, ProjectionMethod, DEFAULT_PERPLEXITY};
use graphbench::traversal::{
    bfs, connected_components, dfs, dijkstra, floyd_warshall, kruskal, prim,
    strongly_connected_components,
};
use graphbench::{Graph, Partition};

#[derive(Parser)]
#[command(name = "graphbench", version, about = "Graph algorithms, embeddings and GNN benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a classical graph algorithm and write its result as JSON.
    Algo {
        #[arg(value_enum)]
        name: Algorithm,
        #[arg(long)]
        graph: PathBuf,
        /// Source node for bfs, dfs and dijkstra.
        #[arg(long)]
        source: Option<usize>,
        /// Read the edge list as directed.
        #[arg(long)]
        directed: bool,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute structural node features and write them as CSV.
    Features {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated feature names; all features when omitted.
        #[arg(long)]
        select: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect communities and write the partition as JSON.
    Community {
        #[arg(value_enum)]
        algorithm: CommunityAlgorithm,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Target community count for gn; maximum modularity when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Sweep limit for lpa.
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train node2vec embeddings and write them as CSV.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 80)]
        walk_length: usize,
        #[arg(long, default_value_t = 10)]
        num_walks: usize,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the benchmark suite and write tables and report.json.
    Bench {
        #[arg(value_enum)]
        task: BenchTask,
        /// JSON benchmark configuration; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Include large datasets.
        #[arg(long)]
        large: bool,
        /// Output directory; falls back to the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project embeddings to two dimensions and write x,y coordinates.
    Project {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long, default_value = "tsne")]
        method: ProjectionMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PERPLEXITY)]
        perplexity: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Bfs,
    Dfs,
    Dijkstra,
    FloydWarshall,
    Prim,
    Kruskal,
    Components,
    Scc,
}

#[derive(Clone, Copy, ValueEnum)]
enum CommunityAlgorithm {
    Louvain,
    Lpa,
    Gn,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchTask {
    Classify,
    Cluster,
    All,
}

fn load_graph(path: &Path, directed: bool) -> Result<Graph> {
    let (g, _) = read_edge_list(path, directed, None)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(g)
}

fn require_source(source: Option<usize>, g: &Graph) -> Result<usize> {
    let s = source.context("this algorithm needs --source")?;
    if s >= g.n_nodes() {
        bail!("source {s} out of range for {} nodes", g.n_nodes());
    }
    Ok(s)
}

fn partition_json(p: &Partition) -> Value {
    json!({ "n_communities": p.n_communities(), "assign": p.assign() })
}

fn write_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_algo(name: Algorithm, g: &Graph, source: Option<usize>) -> Result<Value> {
    Ok(match name {
        Algorithm::Bfs => {
            let s = require_source(source, g)?;
            json!({ "algorithm": "bfs", "source": s, "result": bfs(g, s) })
        }
        Algorithm::Dfs => {
            let s = require_source(source, g)?;
            json!({ "algorithm": "dfs", "source": s, "result": dfs(g, s) })
        }
        Algorithm::Dijkstra => {
            let s = require_source(source, g)?;
            json!({ "algorithm": "dijkstra", "source": s, "result": dijkstra(g, s)? })
        }
        Algorithm::FloydWarshall => {
            json!({ "algorithm": "floyd-warshall", "result": floyd_warshall(g)? })
        }
        Algorithm::Prim => json!({ "algorithm": "prim", "result": prim(g)? }),
        Algorithm::Kruskal => json!({ "algorithm": "kruskal", "result": kruskal(g)? }),
        Algorithm::Components => {
            json!({ "algorithm": "components", "result": partition_json(&connected_components(g)) })
        }
        Algorithm::Scc => json!({
            "algorithm": "scc",
            "result": partition_json(&strongly_connected_components(g)?),
        }),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Algo {
            name,
            graph,
            source,
            directed,
            out,
        } => {
            let g = load_graph(&graph, directed)?;
            write_json(out.as_deref(), &run_algo(name, &g, source)?)
        }
        Command::Features { graph, select, out } => {
            let g = load_graph(&graph, false)?;
            let select = match select {
                Some(s) => parse_feature_list(&s)?,
                None => StructuralFeature::ALL.to_vec(),
            };
            structural_features(&g, &select)?.write_csv(&out)?;
            Ok(())
        }
        Command::Community {
            algorithm,
            graph,
            seed,
            k,
            max_sweeps,
            out,
        } => {
            let g = load_graph(&graph, false)?;
            let (name, p) = match algorithm {
                CommunityAlgorithm::Louvain => ("louvain", louvain(&g, seed)?),
                CommunityAlgorithm::Lpa => ("lpa", label_propagation(&g, seed, max_sweeps)?),
                CommunityAlgorithm::Gn => match k {
                    Some(k) => ("gn", girvan_newman(&g, k)?),
                    None => ("gn", girvan_newman_max_modularity(&g)?.0),
                },
            };
            let q = modularity(&g, &p)?;
            let mut v = partition_json(&p);
            v["algorithm"] = json!(name);
            v["seed"] = json!(seed);
            v["modularity"] = json!(q);
            write_json(out.as_deref(), &v)
        }
        Command::Embed {
            graph,
            dim,
            walk_length,
            num_walks,
            window,
            p,
            q,
            epochs,
            seed,
            out,
        } => {
            let g = load_graph(&graph, false)?;
            let walk = WalkConfig {
                walk_length,
                walks_per_node: num_walks,
                p,
                q,
            };
            let sg = SkipGramConfig {
                dim,
                window,
                epochs,
                ..SkipGramConfig::default()
            };
            node2vec(&g, &walk, &sg, seed)?.write_csv(&out)?;
            Ok(())
        }
        Command::Bench {
            task,
            config,
            large,
            out,
        } => {
            let cfg = match config {
                Some(path) => BenchConfig::load(&path)?,
                None => BenchConfig::default(),
            };
            let tasks: &[Task] = match task {
                BenchTask::Classify => &[Task::Classification],
                BenchTask::Cluster => &[Task::Clustering],
                BenchTask::All => &[Task::Classification, Task::Clustering],
            };
            let Some(out) = out.or_else(|| cfg.out_dir.clone()) else {
                bail!("no output directory: pass --out or set `out_dir` in the config");
            };
            let report = run_bench(&cfg, tasks, large)?;
            for path in emit_tables(&report, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Project {
            emb,
            method,
            seed,
            perplexity,
            out,
        } => {
            let table = EmbeddingTable::read_csv(&emb)
                .with_context(|| format!("reading {}", emb.display()))?;
            let coords = project_2d(&table.vectors, method, perplexity, seed)?;
            write_coords(&out, &coords)?;
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
