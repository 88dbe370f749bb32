use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use prior_rewire::cayley::{build_cayley, cayley_size, trimmed_cayley, trimmed_cayley_in};
use prior_rewire::graph::{parse_colour_file, parse_edge_list, Graph, NodePair};
use prior_rewire::harness::{resolve_workers, run_sweep, summarize, ExperimentConfig};
use prior_rewire::rewire::{
    aligned_cayley_placement, cayley_clusters_graph, fully_connected_clusters_graph, random_cayley_placement,
};
use prior_rewire::spectral::{diameter, LaplacianSummary};
use prior_rewire::synthdata::{gen_dataset, write_samples, DatasetKind};

#[derive(Parser)]
#[command(name = "prior-rewire", version, about = "Graph rewiring with Cayley expanders and priors")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Method {
    Cayley,
    AlignedCayley,
    DistanceDPairs,
    FullyConnected,
    CayleyClusters,
    FullyConnectedClusters,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a (trimmed) Cayley graph of SL(2, Z_n) as an edge list.
    Cayley {
        /// Number of nodes to keep.
        #[arg(long, required_unless_present = "untrimmed_n")]
        size: Option<usize>,
        /// Use SL(2, Z_N); without --size the whole group is written.
        #[arg(long)]
        untrimmed_n: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rewire an edge-list graph and write the rewired graph.
    Rewire {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Target distance for aligned-cayley and distance-d-pairs.
        #[arg(long)]
        d: Option<usize>,
        /// Seed for the random Cayley placement.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `node colour` lines; overrides the colour block of the input.
        #[arg(long)]
        colours: Option<PathBuf>,
        /// Also rewire uncoloured nodes as one extra cluster.
        #[arg(long)]
        include_uncoloured: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print size, diameter, spectral gap and mean commute time as CSV.
    Diagnose {
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// `u v` lines; adds per-pair distance, resistance and commute time.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Generate a synthetic dataset into DIR/train.txt and DIR/eval.txt.
    Generate {
        #[arg(long, value_parser = parse_kind)]
        dataset: DatasetKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a rewirer x c2/c1 x seed sweep and write results, summary and chart.
    Sweep {
        #[arg(long, value_parser = parse_kind)]
        dataset: DatasetKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        scale: Option<f64>,
    },
}

fn parse_kind(s: &str) -> Result<DatasetKind, String> {
    s.parse().map_err(|e: prior_rewire::Error| e.to_string())
}

fn read_graph(path: &PathBuf) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(kind: DatasetKind, path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::from_file(p, kind).with_context(|| format!("config {}", p.display()))?,
        None => ExperimentConfig::defaults_for(kind),
    })
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Cayley { size, untrimmed_n, out } => {
            let cg = match (size, untrimmed_n) {
                (Some(k), None) => trimmed_cayley(k)?,
                (None, Some(n)) => build_cayley(n)?,
                (Some(k), Some(n)) if k as u64 == cayley_size(n as u64)? => build_cayley(n)?,
                (Some(k), Some(n)) => trimmed_cayley_in(n, k)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            cg.graph.write_edge_list(&out)?;
            eprintln!("wrote {} nodes, {} edges (n = {})", cg.graph.num_nodes(), cg.graph.num_edges(), cg.n);
        }
        Cmd::Rewire {
            input,
            method,
            d,
            seed,
            colours,
            include_uncoloured,
            out,
        } => {
            let mut g = read_graph(&input)?;
            if let Some(path) = colours {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let colours = parse_colour_file(&text, g.num_nodes())?;
                g = g.with_colours(colours)?;
            }
            let need_d = || d.context("--d is required for this method");
            let rewired = match method {
                Method::Cayley => random_cayley_placement(g.num_nodes(), seed)?,
                Method::AlignedCayley => aligned_cayley_placement(&g, need_d()?)?,
                Method::DistanceDPairs => Graph::new(g.num_nodes(), g.pairs_at_distance(need_d()?)?)?,
                Method::FullyConnected => Graph::complete(g.num_nodes()),
                Method::CayleyClusters => cayley_clusters_graph(&g, include_uncoloured.unwrap_or(false))?,
                Method::FullyConnectedClusters => {
                    fully_connected_clusters_graph(&g, include_uncoloured.unwrap_or(true))?
                }
            };
            let rewired = match g.colours() {
                Some(c) => rewired.with_colours(c.to_vec())?,
                None => rewired,
            };
            rewired.write_edge_list(&out)?;
            eprintln!("wrote {} edges", rewired.num_edges());
        }
        Cmd::Diagnose { input, pairs } => {
            let pairs: Vec<NodePair> = match &pairs {
                Some(p) => fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| {
                        let f: Vec<&str> = l.split_whitespace().collect();
                        match f.as_slice() {
                            [u, v] => Ok((u.parse()?, v.parse()?)),
                            _ => bail!("bad pair line {l:?}"),
                        }
                    })
                    .collect::<Result<_>>()?,
                None => Vec::new(),
            };
            let mut out = String::from("graph,num_nodes,num_edges,diameter,spectral_gap,avg_commute_time\n");
            let mut pair_rows = String::new();
            for path in &input {
                let g = read_graph(path)?;
                let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                let connected = g.is_connected() && g.num_edges() > 0;
                let summary = LaplacianSummary::new(&g);
                let avg = connected.then(|| prior_rewire::spectral::average_commute_time(&g)).transpose()?;
                writeln!(
                    out,
                    "{name},{},{},{},{},{}",
                    g.num_nodes(),
                    g.num_edges(),
                    fmt_opt(diameter(&g).ok()),
                    summary.spectral_gap(),
                    fmt_opt(avg)
                )?;
                let dist = g.all_pairs_distances();
                for &(u, v) in &pairs {
                    if u >= g.num_nodes() || v >= g.num_nodes() {
                        bail!("pair ({u}, {v}) out of range for {name}");
                    }
                    writeln!(
                        pair_rows,
                        "{name},{u},{v},{},{},{}",
                        fmt_opt(dist.get(u, v)),
                        fmt_opt(summary.effective_resistance(u, v).ok()),
                        fmt_opt(summary.commute_time(u, v).ok())
                    )?;
                }
            }
            print!("{out}");
            if !pairs.is_empty() {
                println!();
                println!("graph,u,v,distance,effective_resistance,commute_time");
                print!("{pair_rows}");
            }
        }
        Cmd::Generate { dataset, config, out } => {
            let cfg = load_config(dataset, config.as_ref())?;
            let data = gen_dataset(&cfg.scaled_dataset())?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            fs::write(out.join("train.txt"), write_samples(&data.train))?;
            fs::write(out.join("eval.txt"), write_samples(&data.eval))?;
            eprintln!("wrote {} train and {} eval samples", data.train.len(), data.eval.len());
        }
        Cmd::Sweep {
            dataset,
            config,
            out,
            workers,
            scale,
        } => {
            let mut cfg = load_config(dataset, config.as_ref())?;
            if let Some(s) = scale {
                cfg.scale = s;
                cfg.validate()?;
            }
            let workers = resolve_workers(workers);
            let result = run_sweep(&cfg, workers, Some(&out))?;
            for row in summarize(&result)? {
                println!(
                    "{:<26} c2/c1={:<6} c3={:<4} ratio {:.3} +- {:.3}",
                    row.rewirer.name(),
                    row.ratio,
                    row.c3,
                    row.mean_ratio,
                    row.sd_ratio
                );
            }
            eprintln!("results in {}", out.display());
        }
    }
    Ok(())
}
