//! Synthetic graph-regression benchmarks.
//!
//! Data A mixes node values over 1-hop pairs, pairs at a target distance `d`
//! and all remaining reachable pairs. Data B mixes over 1-hop pairs and pairs
//! sharing a colour. Every pair sum runs over unordered pairs `i < j`, and
//! each term is `exp(x_i + x_j)` of the scalar node values.
//!
//! Size ranges are half-open `[min, max)` split into bins of `bin_width`
//! nodes, so eval graphs (`[30, 35)`) are strictly larger than train graphs
//! (`[20, 30)`). A degenerate range `min == max` means exactly `min` nodes.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, Colour, Graph};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    A,
    B,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::A => "a",
            DatasetKind::B => "b",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(DatasetKind::A),
            "b" => Ok(DatasetKind::B),
            other => Err(Error::InvalidArgument(format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMeta {
    pub seed: u64,
    pub kind: DatasetKind,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Target distance (Data A) or colour count (Data B).
    pub d: usize,
    pub num_colours: usize,
    /// Inclusive node-count bounds of the bin the graph was drawn for.
    pub size_bin: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub graph: Graph,
    /// `|V| x F`; column 0 holds the node value.
    pub features: Matrix,
    pub target: f64,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn values(&self) -> Vec<f64> {
        (0..self.features.rows()).map(|r| self.features[(r, 0)]).collect()
    }
}

/// Where base topologies come from.
#[derive(Clone, Debug, PartialEq)]
pub enum TopologySource {
    /// Random spanning tree plus a few extra edges, max degree 4.
    Procedural,
    /// Pre-loaded connected graphs (colours stripped).
    Corpus(Vec<Graph>),
}

impl TopologySource {
    /// Loads every file in `dir` (sorted by name) as an edge list.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let mut graphs = Vec::with_capacity(paths.len());
        for p in paths {
            let g = Graph::read_edge_list(&p)?.without_colours();
            if !g.is_connected() {
                return Err(Error::Disconnected(format!("{} is not connected", p.display())));
            }
            graphs.push(g);
        }
        Ok(TopologySource::Corpus(graphs))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub source: TopologySource,
    /// Half-open `[min, max)`; `min == max` means exactly `min`.
    pub size_range: (usize, usize),
    pub bin_width: usize,
    pub count: usize,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.size_range;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidArgument(format!("bad size range [{lo}, {hi})")));
        }
        if self.bin_width == 0 {
            return Err(Error::InvalidArgument("bin width must be >= 1".into()));
        }
        Ok(())
    }

    /// Inclusive `(lo, hi)` node-count bins.
    pub fn bins(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = self.size_range;
        if hi <= lo {
            return vec![(lo, lo)];
        }
        (lo..hi)
            .step_by(self.bin_width)
            .map(|b| (b, (b + self.bin_width - 1).min(hi - 1)))
            .collect()
    }

    /// Bin used for the `index`-th sample; round-robin keeps bins balanced.
    pub fn bin_for(&self, index: usize) -> (usize, usize) {
        let bins = self.bins();
        bins[index % bins.len()]
    }
}

/// Draws one connected topology whose node count lies in `bin`.
pub fn gen_topology(spec: &CorpusSpec, bin: (usize, usize), rng: &mut impl Rng) -> Result<Graph> {
    spec.validate()?;
    let (lo, hi) = bin;
    match &spec.source {
        TopologySource::Procedural => Ok(procedural_topology(rng.gen_range(lo..=hi), rng)),
        TopologySource::Corpus(graphs) => {
            let fits: Vec<&Graph> = graphs
                .iter()
                .filter(|g| (lo..=hi).contains(&g.num_nodes()))
                .collect();
            fits.choose(rng)
                .map(|g| (*g).clone())
                .ok_or(Error::EmptyBin { lo, hi })
        }
    }
}

const MAX_DEGREE: usize = 4;
const MEAN_DEGREE: f64 = 2.1;

/// Molecule-like random graph: a degree-capped random tree with extra edges
/// until the mean degree reaches about 2.1. Connected by construction.
pub fn procedural_topology(n: usize, rng: &mut impl Rng) -> Graph {
    if n <= 1 {
        return Graph::empty(n);
    }
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(n + n / 10 + 1);
    for v in 1..n {
        let open: Vec<usize> = (0..v).filter(|&u| degree[u] < MAX_DEGREE).collect();
        let u = *open.choose(rng).expect("a tree always has a leaf");
        edges.push((u, v));
        degree[u] += 1;
        degree[v] += 1;
    }
    let wanted = ((MEAN_DEGREE * n as f64) / 2.0).round() as usize;
    let mut attempts = 0;
    while edges.len() < wanted && attempts < 100 * n {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let (u, v) = (u.min(v), u.max(v));
        if u == v || degree[u] >= MAX_DEGREE || degree[v] >= MAX_DEGREE {
            continue;
        }
        if edges.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (u, v)) {
            continue;
        }
        edges.push((u, v));
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Graph::new(n, edges.into_iter().map(|(u, v)| (perm[u], perm[v])))
        .expect("endpoints are in range")
}

fn check_values(g: &Graph, values: &[f64]) -> Result<()> {
    if values.len() != g.num_nodes() {
        return Err(Error::SizeMismatch(format!(
            "{} values for {} nodes",
            values.len(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Salient-pair target: 1-hop, distance-`d` and remaining reachable pairs.
pub fn target_data_a(g: &Graph, values: &[f64], c1: f64, c2: f64, c3: f64, d: usize) -> Result<f64> {
    check_values(g, values)?;
    if d == 0 {
        return Err(Error::InvalidArgument("target distance must be >= 1".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected("Data A targets need a connected graph".into()));
    }
    let dist = g.all_pairs_distances();
    let n = g.num_nodes();
    let (mut near, mut salient, mut rest) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let term = (values[i] + values[j]).exp();
            let dij = dist.get(i, j).expect("connected");
            if dij == 1 {
                near += term;
            }
            if dij == d {
                salient += term;
            }
            if dij != 1 && dij != d {
                rest += term;
            }
        }
    }
    Ok(c1 * near + c2 * salient + c3 * rest)
}

/// Community target: 1-hop pairs plus same-colour pairs.
pub fn target_data_b(g: &Graph, values: &[f64], c1: f64, c2: f64) -> Result<f64> {
    check_values(g, values)?;
    let colours = g.colours().ok_or(Error::MissingColours)?;
    let near: f64 = g
        .edges()
        .iter()
        .map(|&(i, j)| (values[i] + values[j]).exp())
        .sum();
    let n = g.num_nodes();
    let mut same = 0.0;
    for i in 0..n {
        let Some(ci) = colours[i] else { continue };
        for j in i + 1..n {
            if colours[j] == Some(ci) {
                same += (values[i] + values[j]).exp();
            }
        }
    }
    Ok(c1 * near + c2 * same)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub seed: u64,
    pub train_count: usize,
    pub eval_count: usize,
    pub train_sizes: (usize, usize),
    pub eval_sizes: (usize, usize),
    pub bin_width: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d: usize,
    pub num_colours: usize,
    /// Inclusive range for the number of coloured nodes per graph.
    pub coloured_range: (usize, usize),
    pub source: TopologySource,
}

impl DatasetConfig {
    pub fn data_a() -> Self {
        DatasetConfig {
            kind: DatasetKind::A,
            seed: 0,
            train_count: 5000,
            eval_count: 500,
            train_sizes: (20, 30),
            eval_sizes: (30, 35),
            bin_width: 5,
            c1: 1.0,
            c2: 0.1,
            c3: 0.2,
            d: 5,
            num_colours: 0,
            coloured_range: (0, 0),
            source: TopologySource::Procedural,
        }
    }

    pub fn data_b() -> Self {
        DatasetConfig {
            kind: DatasetKind::B,
            seed: 0,
            train_count: 1500,
            eval_count: 300,
            train_sizes: (75, 125),
            eval_sizes: (125, 175),
            bin_width: 5,
            c1: 0.5,
            c2: 0.5,
            c3: 0.0,
            d: 0,
            num_colours: 4,
            coloured_range: (25, 75),
            source: TopologySource::Procedural,
        }
    }

    pub fn defaults_for(kind: DatasetKind) -> Self {
        match kind {
            DatasetKind::A => Self::data_a(),
            DatasetKind::B => Self::data_b(),
        }
    }

    fn corpus(&self, sizes: (usize, usize), count: usize) -> CorpusSpec {
        CorpusSpec {
            source: self.source.clone(),
            size_range: sizes,
            bin_width: self.bin_width,
            count,
        }
    }

    pub fn train_corpus(&self) -> CorpusSpec {
        self.corpus(self.train_sizes, self.train_count)
    }

    pub fn eval_corpus(&self) -> CorpusSpec {
        self.corpus(self.eval_sizes, self.eval_count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub eval: Vec<Sample>,
}

/// SplitMix64 finaliser; derives independent per-sample seeds.
pub fn mix_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

pub fn gen_dataset_a(cfg: &DatasetConfig) -> Result<Dataset> {
    if cfg.kind != DatasetKind::A {
        return Err(Error::InvalidArgument("gen_dataset_a needs a Data A config".into()));
    }
    gen_dataset(cfg)
}

pub fn gen_dataset_b(cfg: &DatasetConfig) -> Result<Dataset> {
    if cfg.kind != DatasetKind::B {
        return Err(Error::InvalidArgument("gen_dataset_b needs a Data B config".into()));
    }
    gen_dataset(cfg)
}

pub fn gen_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    if cfg.kind == DatasetKind::A && cfg.d == 0 {
        return Err(Error::InvalidArgument("Data A needs d >= 1".into()));
    }
    if cfg.kind == DatasetKind::B && cfg.num_colours == 0 {
        return Err(Error::InvalidArgument("Data B needs at least one colour".into()));
    }
    let split = |corpus: CorpusSpec, stream: u64| -> Result<Vec<Sample>> {
        corpus.validate()?;
        (0..corpus.count)
            .map(|i| {
                let seed = mix_seed(cfg.seed, stream, i as u64);
                gen_sample(cfg, &corpus, corpus.bin_for(i), seed)
            })
            .collect()
    };
    Ok(Dataset {
        train: split(cfg.train_corpus(), TRAIN_STREAM)?,
        eval: split(cfg.eval_corpus(), EVAL_STREAM)?,
    })
}

/// One sample from its own seed: topology, then values, then colours.
pub fn gen_sample(cfg: &DatasetConfig, corpus: &CorpusSpec, bin: (usize, usize), seed: u64) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = gen_topology(corpus, bin, &mut rng)?;
    let n = graph.num_nodes();
    let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let meta = SampleMeta {
        seed,
        kind: cfg.kind,
        c1: cfg.c1,
        c2: cfg.c2,
        c3: cfg.c3,
        d: cfg.d,
        num_colours: cfg.num_colours,
        size_bin: bin,
    };
    match cfg.kind {
        DatasetKind::A => {
            let target = target_data_a(&graph, &values, cfg.c1, cfg.c2, cfg.c3, cfg.d)?;
            Ok(Sample {
                graph,
                features: Matrix::from_vec(n, 1, values),
                target,
                meta,
            })
        }
        DatasetKind::B => {
            let (kmin, kmax) = cfg.coloured_range;
            let k = rng.gen_range(kmin..=kmax);
            if k > n {
                return Err(Error::InvalidArgument(format!(
                    "cannot colour {k} nodes of a {n}-node graph"
                )));
            }
            let mut colours: Vec<Option<Colour>> = vec![None; n];
            let mut chosen = index::sample(&mut rng, n, k).into_vec();
            chosen.sort_unstable();
            for u in chosen {
                colours[u] = Some(rng.gen_range(0..cfg.num_colours) as Colour);
            }
            let graph = graph.with_colours(colours)?;
            let target = target_data_b(&graph, &values, cfg.c1, cfg.c2)?;
            let cols = 1 + cfg.num_colours;
            let mut features = Matrix::zeros(n, cols);
            for u in 0..n {
                features[(u, 0)] = values[u];
                if let Some(c) = graph.colour(u) {
                    features[(u, 1 + c as usize)] = 1.0;
                }
            }
            Ok(Sample {
                graph,
                features,
                target,
                meta,
            })
        }
    }
}

/// Writes samples as text records (`sample`, `meta`, `graph`, `features`,
/// `target`, `end`). Floats use the shortest round-trip representation.
pub fn write_samples(samples: &[Sample]) -> String {
    let mut out = String::new();
    for (i, s) in samples.iter().enumerate() {
        let m = &s.meta;
        writeln!(out, "sample {i}").unwrap();
        writeln!(
            out,
            "meta seed={} kind={} c1={} c2={} c3={} d={} colours={} bin={}-{}",
            m.seed, m.kind, m.c1, m.c2, m.c3, m.d, m.num_colours, m.size_bin.0, m.size_bin.1
        )
        .unwrap();
        writeln!(out, "graph").unwrap();
        out.push_str(&s.graph.to_edge_list());
        writeln!(out, "features {} {}", s.features.rows(), s.features.cols()).unwrap();
        for r in 0..s.features.rows() {
            let row: Vec<String> = s.features.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        writeln!(out, "target {}", s.target).unwrap();
        writeln!(out, "end").unwrap();
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("bad value {value:?} for {key}")))
}

fn parse_meta(line: usize, text: &str) -> Result<SampleMeta> {
    let mut meta = SampleMeta {
        seed: 0,
        kind: DatasetKind::A,
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
        d: 0,
        num_colours: 0,
        size_bin: (0, 0),
    };
    for field in text.split_whitespace().skip(1) {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("bad meta field {field:?}")))?;
        match k {
            "seed" => meta.seed = parse_field(line, k, v)?,
            "kind" => meta.kind = v.parse()?,
            "c1" => meta.c1 = parse_field(line, k, v)?,
            "c2" => meta.c2 = parse_field(line, k, v)?,
            "c3" => meta.c3 = parse_field(line, k, v)?,
            "d" => meta.d = parse_field(line, k, v)?,
            "colours" => meta.num_colours = parse_field(line, k, v)?,
            "bin" => {
                let (lo, hi) = v
                    .split_once('-')
                    .ok_or_else(|| parse_err(line, "bin must be LO-HI"))?;
                meta.size_bin = (parse_field(line, k, lo)?, parse_field(line, k, hi)?);
            }
            _ => return Err(parse_err(line, format!("unknown meta key {k:?}"))),
        }
    }
    Ok(meta)
}

/// Inverse of [`write_samples`].
pub fn read_samples(text: &str) -> Result<Vec<Sample>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut pos = 0;
    let mut samples = Vec::new();
    let next = |pos: &mut usize| -> Result<(usize, &str)> {
        let line = lines
            .get(*pos)
            .ok_or_else(|| parse_err(*pos + 1, "unexpected end of input"))?;
        *pos += 1;
        Ok((*pos, line.trim()))
    };
    while pos < lines.len() {
        if lines[pos].trim().is_empty() {
            pos += 1;
            continue;
        }
        let (ln, head) = next(&mut pos)?;
        if !head.starts_with("sample") {
            return Err(parse_err(ln, "expected `sample`"));
        }
        let (ln, meta_line) = next(&mut pos)?;
        if !meta_line.starts_with("meta") {
            return Err(parse_err(ln, "expected `meta`"));
        }
        let meta = parse_meta(ln, meta_line)?;
        let (ln, g) = next(&mut pos)?;
        if g != "graph" {
            return Err(parse_err(ln, "expected `graph`"));
        }
        let start = pos;
        while pos < lines.len() && !lines[pos].starts_with("features") {
            pos += 1;
        }
        let graph = parse_edge_list(&lines[start..pos].join("\n"))?;
        let (ln, feat) = next(&mut pos)?;
        let dims: Vec<usize> = feat
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse().map_err(|_| parse_err(ln, "bad feature shape")))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(parse_err(ln, "expected `features ROWS COLS`"));
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, row) = next(&mut pos)?;
            let before = data.len();
            for t in row.split_whitespace() {
                data.push(t.parse::<f64>().map_err(|_| parse_err(ln, "bad feature value"))?);
            }
            if data.len() - before != cols {
                return Err(parse_err(ln, format!("expected {cols} feature values")));
            }
        }
        let (ln, t) = next(&mut pos)?;
        let target = t
            .strip_prefix("target ")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| parse_err(ln, "expected `target VALUE`"))?;
        let (ln, end) = next(&mut pos)?;
        if end != "end" {
            return Err(parse_err(ln, "expected `end`"));
        }
        samples.push(Sample {
            graph,
            features: Matrix::from_vec(rows, cols, data),
            target,
            meta,
        });
    }
    Ok(samples)
}
