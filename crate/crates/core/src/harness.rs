//! Experiment configs, sweep orchestration, MSE-ratio summaries and charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::nn::{train, GinModel, ModelShape, TrainData, TrainOptions, TrainReport, TrainSchedule};
use crate::rewire::{RewirePlan, Rewirer};
use crate::synthdata::{gen_dataset, mix_seed, Dataset, DatasetConfig, DatasetKind, TopologySource};

/// Environment variable read for the worker count when no explicit value is given.
pub const WORKERS_ENV: &str = "PRIOR_REWIRE_WORKERS";

const PLACEMENT_STREAM: u64 = 3;
const INIT_STREAM: u64 = 4;
const SHUFFLE_STREAM: u64 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Unscaled dataset parameters. `c1`, `c2` are overridden per grid point.
    pub dataset: DatasetConfig,
    pub rewirers: Vec<Rewirer>,
    /// Grid of c2/c1 values.
    pub ratios: Vec<f64>,
    /// Data A only.
    pub c3_values: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Multiplies train/eval counts.
    pub scale: f64,
    /// Multiplies total and warmup epochs. Defaults to `scale` when unset.
    pub epoch_scale: Option<f64>,
    pub hidden: usize,
    pub layers: usize,
    /// Unscaled schedule.
    pub schedule: TrainSchedule,
    pub standardize_targets: bool,
}

impl ExperimentConfig {
    pub fn defaults_for(kind: DatasetKind) -> Self {
        let (rewirers, peak_lr, c3_values) = match kind {
            DatasetKind::A => (
                vec![
                    Rewirer::BaseGraphOnly,
                    Rewirer::Cayley,
                    Rewirer::AlignedCayley,
                    Rewirer::DistanceDPairs,
                    Rewirer::FullyConnected,
                ],
                1e-4,
                vec![0.0, 0.1, 0.2],
            ),
            DatasetKind::B => (
                vec![
                    Rewirer::BaseGraphOnly,
                    Rewirer::Cayley,
                    Rewirer::CayleyClusters,
                    Rewirer::FullyConnectedClusters,
                    Rewirer::FullyConnected,
                ],
                1e-3,
                vec![0.0],
            ),
        };
        ExperimentConfig {
            dataset: DatasetConfig::defaults_for(kind),
            rewirers,
            ratios: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            c3_values,
            seeds: vec![0, 1, 2],
            scale: 1.0,
            epoch_scale: None,
            hidden: 8,
            layers: 5,
            schedule: TrainSchedule {
                peak_lr,
                total_epochs: 200,
                warmup_epochs: 50,
                decay_per_epoch: 0.95,
                batch_size: 32,
            },
            standardize_targets: false,
        }
    }

    pub fn kind(&self) -> DatasetKind {
        self.dataset.kind
    }

    /// Parses `key = value` lines over the defaults for `kind`. Blank lines
    /// and `#` comments are skipped; unknown keys are errors.
    pub fn parse(text: &str, kind: DatasetKind) -> Result<Self> {
        let mut cfg = Self::defaults_for(kind);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>, kind: DatasetKind) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, kind)
    }

    /// Sets one documented key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s.trim())).collect()
        }
        let ds = &mut self.dataset;
        match key {
            "dataset" => {
                let kind: DatasetKind = value.parse()?;
                if kind != ds.kind {
                    return Err(Error::Config(format!("config is for dataset {kind}, run is for {}", ds.kind)));
                }
            }
            "data_seed" => ds.seed = num(key, value)?,
            "train_count" => ds.train_count = num(key, value)?,
            "eval_count" => ds.eval_count = num(key, value)?,
            "train_min_nodes" => ds.train_sizes.0 = num(key, value)?,
            "train_max_nodes" => ds.train_sizes.1 = num(key, value)?,
            "eval_min_nodes" => ds.eval_sizes.0 = num(key, value)?,
            "eval_max_nodes" => ds.eval_sizes.1 = num(key, value)?,
            "bin_width" => ds.bin_width = num(key, value)?,
            "c1" => ds.c1 = num(key, value)?,
            "c2" => ds.c2 = num(key, value)?,
            "c3" => ds.c3 = num(key, value)?,
            "d" => ds.d = num(key, value)?,
            "num_colours" => ds.num_colours = num(key, value)?,
            "min_coloured" => ds.coloured_range.0 = num(key, value)?,
            "max_coloured" => ds.coloured_range.1 = num(key, value)?,
            "corpus_dir" => ds.source = TopologySource::load_dir(value)?,
            "rewirers" => self.rewirers = list(key, value)?,
            "ratios" => self.ratios = list(key, value)?,
            "c3_values" => self.c3_values = list(key, value)?,
            "seeds" => self.seeds = list(key, value)?,
            "scale" => self.scale = num(key, value)?,
            "epoch_scale" => self.epoch_scale = Some(num(key, value)?),
            "hidden" => self.hidden = num(key, value)?,
            "layers" => self.layers = num(key, value)?,
            "peak_lr" => self.schedule.peak_lr = num(key, value)?,
            "epochs" => self.schedule.total_epochs = num(key, value)?,
            "warmup_epochs" => self.schedule.warmup_epochs = num(key, value)?,
            "lr_decay" => self.schedule.decay_per_epoch = num(key, value)?,
            "batch_size" => self.schedule.batch_size = num(key, value)?,
            "standardize_targets" => self.standardize_targets = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Checks rewirer/dataset compatibility and numeric ranges.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        for &r in &self.rewirers {
            if r.needs_colours() && kind != DatasetKind::B {
                return Err(Error::Config(format!("{r} needs coloured graphs (dataset b)")));
            }
            if r.needs_distance() && (kind != DatasetKind::A || self.dataset.d == 0) {
                return Err(Error::Config(format!("{r} needs a distance d (dataset a, d >= 1)")));
            }
        }
        if self.rewirers.is_empty() || self.seeds.is_empty() || self.ratios.is_empty() {
            return Err(Error::Config("rewirers, seeds and ratios must be non-empty".into()));
        }
        if kind == DatasetKind::A && self.c3_values.is_empty() {
            return Err(Error::Config("c3_values must be non-empty".into()));
        }
        if self.ratios.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Config("ratios must be positive".into()));
        }
        if !(self.scale > 0.0) || self.epoch_scale.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Config("scale factors must be positive".into()));
        }
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config("hidden and layers must be >= 1".into()));
        }
        self.schedule.validate()?;
        self.scaled_dataset().train_corpus().validate()?;
        self.scaled_dataset().eval_corpus().validate()
    }

    fn scaled(count: usize, factor: f64) -> usize {
        ((count as f64 * factor).round() as usize).max(1)
    }

    /// Dataset with counts multiplied by `scale`; graph sizes are untouched.
    pub fn scaled_dataset(&self) -> DatasetConfig {
        let mut ds = self.dataset.clone();
        ds.train_count = Self::scaled(ds.train_count, self.scale);
        ds.eval_count = Self::scaled(ds.eval_count, self.scale);
        ds
    }

    pub fn scaled_schedule(&self) -> TrainSchedule {
        let f = self.epoch_scale.unwrap_or(self.scale);
        let mut s = self.schedule;
        s.total_epochs = Self::scaled(s.total_epochs, f);
        s.warmup_epochs = Self::scaled(s.warmup_epochs, f);
        s
    }

    /// `(c1, c2)` for a c2/c1 grid value: Data A keeps the configured c1,
    /// Data B normalises to c1 + c2 = 1.
    pub fn coefficients(&self, ratio: f64) -> (f64, f64) {
        match self.kind() {
            DatasetKind::A => (self.dataset.c1, ratio * self.dataset.c1),
            DatasetKind::B => (1.0 / (1.0 + ratio), ratio / (1.0 + ratio)),
        }
    }

    fn c3_grid(&self) -> Vec<f64> {
        match self.kind() {
            DatasetKind::A => self.c3_values.clone(),
            DatasetKind::B => vec![0.0],
        }
    }

    /// Rewirers to run, always including the base-graph-only reference.
    fn sweep_rewirers(&self) -> Vec<Rewirer> {
        let mut rs = self.rewirers.clone();
        if !rs.contains(&Rewirer::BaseGraphOnly) {
            rs.insert(0, Rewirer::BaseGraphOnly);
        }
        rs
    }

    pub fn model_shape(&self, input_dim: usize) -> ModelShape {
        ModelShape::new(input_dim, self.hidden, self.layers)
    }
}

/// One (rewirer, parameters, seed) training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub rewirer: Rewirer,
    pub ratio: f64,
    pub c3: f64,
    pub seed: u64,
}

impl Cell {
    /// Directory name for the cell's artifacts.
    pub fn key(&self) -> String {
        format!("{}_r{}_c3-{}_s{}", self.rewirer, self.ratio, self.c3, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub rewirer: Rewirer,
    pub ratio: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub seed: u64,
    pub final_eval_mse: f64,
    pub ratio_to_base: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub kind: DatasetKind,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,rewirer,c2_over_c1,c1,c2,c3,seed,final_eval_mse,ratio_to_base\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.kind, r.rewirer, r.ratio, r.c1, r.c2, r.c3, r.seed, r.final_eval_mse, r.ratio_to_base
            )
            .unwrap();
        }
        out
    }

    pub fn rows_for(&self, rewirer: Rewirer) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.rewirer == rewirer)
    }
}

/// Per-sample rewire plans for one split. Cayley placements are seeded from
/// each sample's own seed, so plans do not depend on the model seed.
pub fn build_plans(samples: &[crate::synthdata::Sample], rewirer: Rewirer, layers: usize, d: usize) -> Result<Vec<RewirePlan>> {
    samples
        .iter()
        .map(|s| rewirer.plan(&s.graph, layers, d, mix_seed(s.meta.seed, PLACEMENT_STREAM, 0)))
        .collect()
}

fn model_seed(seed: u64, rewirer: Rewirer) -> u64 {
    let idx = Rewirer::ALL.iter().position(|&r| r == rewirer).unwrap_or(0) as u64;
    mix_seed(seed, INIT_STREAM, idx)
}

struct Plans {
    train: Vec<RewirePlan>,
    eval: Vec<RewirePlan>,
}

fn train_cell(
    cfg: &ExperimentConfig,
    data: &Dataset,
    plans: &Plans,
    cell: &Cell,
    out: Option<&Path>,
) -> Result<(GinModel, TrainReport)> {
    let input_dim = data.train[0].features.cols();
    let mut model = GinModel::new(cfg.model_shape(input_dim), model_seed(cell.seed, cell.rewirer));
    let report = train(
        &mut model,
        TrainData {
            train: &data.train,
            train_plans: &plans.train,
            eval: &data.eval,
            eval_plans: &plans.eval,
        },
        TrainOptions {
            schedule: cfg.scaled_schedule(),
            seed: mix_seed(cell.seed, SHUFFLE_STREAM, 0),
            standardize_targets: cfg.standardize_targets,
        },
    )?;
    if let Some(dir) = out {
        let dir = dir.join("cells").join(cell.key());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_file(&dir.join("metrics.csv"), &report.to_csv())?;
        write_file(&dir.join("checkpoint.txt"), &model.to_checkpoint())?;
    }
    Ok((model, report))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dataset_for(cfg: &ExperimentConfig, ratio: f64, c3: f64) -> Result<Dataset> {
    let mut ds = cfg.scaled_dataset();
    (ds.c1, ds.c2) = cfg.coefficients(ratio);
    ds.c3 = c3;
    gen_dataset(&ds)
}

/// Trains a single cell from scratch and returns its final eval MSE with the
/// per-epoch report. `ratio_to_base` needs the base run and is left to callers.
pub fn run_experiment(cfg: &ExperimentConfig, cell: &Cell, out: Option<&Path>) -> Result<(f64, TrainReport)> {
    cfg.validate()?;
    let data = dataset_for(cfg, cell.ratio, cell.c3)?;
    let plans = Plans {
        train: build_plans(&data.train, cell.rewirer, cfg.layers, cfg.dataset.d)?,
        eval: build_plans(&data.eval, cell.rewirer, cfg.layers, cfg.dataset.d)?,
    };
    let (_, report) = train_cell(cfg, &data, &plans, cell, out)?;
    Ok((report.final_eval_mse(), report))
}

/// Worker count: explicit value, else the environment variable, else 1.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or(1)
        .max(1)
}

/// Runs `jobs` on up to `workers` threads; results come back in job order.
fn run_parallel<T: Send, J: Sync>(jobs: &[J], workers: usize, f: impl Fn(&J) -> Result<T> + Sync) -> Result<Vec<T>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.min(jobs.len()).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Full sweep: grid x c3 values x rewirers x seeds. The dataset is generated
/// once per grid point and plans once per rewirer; cells then train in
/// parallel. Rows are ordered by cell key, not completion order.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    let rewirers = cfg.sweep_rewirers();
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        let (c1, c2) = cfg.coefficients(ratio);
        for c3 in cfg.c3_grid() {
            let data = dataset_for(cfg, ratio, c3)?;
            let plans = run_parallel(&rewirers, workers, |&r| {
                Ok(Plans {
                    train: build_plans(&data.train, r, cfg.layers, cfg.dataset.d)?,
                    eval: build_plans(&data.eval, r, cfg.layers, cfg.dataset.d)?,
                })
            })?;
            let cells: Vec<(usize, Cell)> = rewirers
                .iter()
                .enumerate()
                .flat_map(|(ri, &rewirer)| {
                    cfg.seeds.iter().map(move |&seed| {
                        (ri, Cell {
                            rewirer,
                            ratio,
                            c3,
                            seed,
                        })
                    })
                })
                .collect();
            let mses = run_parallel(&cells, workers, |(ri, cell)| {
                let (_, report) = train_cell(cfg, &data, &plans[*ri], cell, out)?;
                Ok(report.final_eval_mse())
            })?;
            let base: BTreeMap<u64, f64> = cells
                .iter()
                .zip(&mses)
                .filter(|((_, c), _)| c.rewirer == Rewirer::BaseGraphOnly)
                .map(|((_, c), &m)| (c.seed, m))
                .collect();
            for ((_, cell), mse) in cells.iter().zip(mses) {
                rows.push(SweepRow {
                    rewirer: cell.rewirer,
                    ratio,
                    c1,
                    c2,
                    c3,
                    seed: cell.seed,
                    final_eval_mse: mse,
                    ratio_to_base: mse / base[&cell.seed],
                });
            }
        }
    }
    let result = SweepResult { kind: cfg.kind(), rows };
    if let Some(dir) = out {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

pub fn run_sweep_a(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<SweepResult> {
    if cfg.kind() != DatasetKind::A {
        return Err(Error::Config("run_sweep_a needs a dataset a config".into()));
    }
    run_sweep(cfg, workers, out)
}

pub fn run_sweep_b(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<SweepResult> {
    if cfg.kind() != DatasetKind::B {
        return Err(Error::Config("run_sweep_b needs a dataset b config".into()));
    }
    run_sweep(cfg, workers, out)
}

/// Writes `results.csv`, `summary.csv` and `sweep.svg` under `dir`.
pub fn write_outputs(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = summarize(result)?;
    let files = [
        ("results.csv", result.to_csv()),
        ("summary.csv", summary_csv(&summary)),
        ("sweep.svg", sweep_svg(&summary)),
    ];
    let mut paths = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_file(&p, &text)?;
        paths.push(p);
    }
    Ok(paths)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub rewirer: Rewirer,
    pub ratio: f64,
    pub c3: f64,
    pub seeds: usize,
    pub mean_ratio: f64,
    pub sd_ratio: f64,
    pub mean_mse: f64,
}

/// Mean and sample standard deviation of `ratio_to_base` per
/// (rewirer, c2/c1, c3), in first-appearance order.
pub fn summarize(result: &SweepResult) -> Result<Vec<SummaryRow>> {
    if result.rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to summarise".into()));
    }
    let mut groups: Vec<((Rewirer, f64, f64), Vec<&SweepRow>)> = Vec::new();
    for row in &result.rows {
        let key = (row.rewirer, row.ratio, row.c3);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|((rewirer, ratio, c3), rows)| {
            let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_to_base).collect();
            let mses: Vec<f64> = rows.iter().map(|r| r.final_eval_mse).collect();
            let (mean_ratio, sd_ratio) = mean_sd(&ratios);
            SummaryRow {
                rewirer,
                ratio,
                c3,
                seeds: rows.len(),
                mean_ratio,
                sd_ratio,
                mean_mse: mean_sd(&mses).0,
            }
        })
        .collect())
}

/// Mean and sample (n - 1) standard deviation; sd is 0 for one value.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("rewirer,c2_over_c1,c3,seeds,mean_ratio,sd_ratio,mean_final_eval_mse\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rewirer, r.ratio, r.c3, r.seeds, r.mean_ratio, r.sd_ratio, r.mean_mse
        )
        .unwrap();
    }
    out
}

const PALETTE: [&str; 7] = ["#444444", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-log line chart of mean ratio vs c2/c1, one panel per c3 value,
/// with shaded +-1 sd bands.
pub fn sweep_svg(rows: &[SummaryRow]) -> String {
    let (pw, ph, margin) = (320.0, 260.0, 50.0);
    let mut c3s: Vec<f64> = Vec::new();
    let mut rewirers: Vec<Rewirer> = Vec::new();
    for r in rows {
        if !c3s.contains(&r.c3) {
            c3s.push(r.c3);
        }
        if !rewirers.contains(&r.rewirer) {
            rewirers.push(r.rewirer);
        }
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let xs: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|&v| positive(v)).collect();
    let ys: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.mean_ratio - r.sd_ratio, r.mean_ratio + r.sd_ratio, r.mean_ratio])
        .filter(|&v| positive(v))
        .collect();
    let bounds = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        if lo.is_finite() && hi.is_finite() {
            (lo, hi.max(lo + 1.0))
        } else {
            (-1.0, 1.0)
        }
    };
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let width = margin + c3s.len().max(1) as f64 * (pw + margin) + 170.0;
    let height = ph + 2.0 * margin;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (pi, &c3) in c3s.iter().enumerate() {
        let left = margin + pi as f64 * (pw + margin);
        let top = margin;
        let px = |x: f64| left + (x.log10() - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + ph - (y.max(10f64.powf(y0)).log10() - y0) / (y1 - y0) * ph;
        writeln!(
            svg,
            r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">c3 = {c3}</text>"#, left + pw / 2.0, top - 10.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">c2/c1</text>"#, left + pw / 2.0, top + ph + 35.0).unwrap();
        for e in x0 as i32..=x1 as i32 {
            let x = px(10f64.powi(e));
            writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">1e{e}</text>"#, top + ph + 15.0).unwrap();
        }
        for e in y0 as i32..=y1 as i32 {
            let y = py(10f64.powi(e));
            writeln!(svg, r##"<line x1="{left}" x2="{}" y1="{y}" y2="{y}" stroke="#dddddd"/>"##, left + pw).unwrap();
            writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, left - 4.0, y + 4.0).unwrap();
        }
        for (ri, &rewirer) in rewirers.iter().enumerate() {
            let colour = PALETTE[ri % PALETTE.len()];
            let mut pts: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.rewirer == rewirer && r.c3 == c3 && positive(r.ratio) && positive(r.mean_ratio))
                .collect();
            pts.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
            if pts.is_empty() {
                continue;
            }
            let upper: Vec<String> = pts
                .iter()
                .map(|r| format!("{:.2},{:.2}", px(r.ratio), py(r.mean_ratio + r.sd_ratio)))
                .collect();
            let lower: Vec<String> = pts
                .iter()
                .rev()
                .map(|r| format!("{:.2},{:.2}", px(r.ratio), py(r.mean_ratio - r.sd_ratio)))
                .collect();
            writeln!(
                svg,
                r#"<polygon points="{} {}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            )
            .unwrap();
            let line: Vec<String> = pts
                .iter()
                .map(|r| format!("{:.2},{:.2}", px(r.ratio), py(r.mean_ratio)))
                .collect();
            writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                line.join(" ")
            )
            .unwrap();
        }
    }
    let lx = margin + c3s.len().max(1) as f64 * (pw + margin);
    for (ri, rewirer) in rewirers.iter().enumerate() {
        let y = margin + 15.0 * ri as f64;
        let colour = PALETTE[ri % PALETTE.len()];
        writeln!(
            svg,
            r#"<line x1="{lx}" x2="{}" y1="{y}" y2="{y}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{rewirer}</text>"#,
            lx + 20.0,
            lx + 25.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_and_rejects_unknown_keys() {
        let cfg = ExperimentConfig::parse("# desk\nscale = 0.2\nseeds = 4,5\nrewirers = base-graph-only, cayley\n", DatasetKind::A).unwrap();
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(cfg.scaled_dataset().train_count, 1000);
        assert_eq!(cfg.scaled_dataset().eval_count, 100);
        assert_eq!(cfg.scaled_schedule().total_epochs, 40);
        assert!(ExperimentConfig::parse("colour = 3", DatasetKind::A).is_err());
        assert!(ExperimentConfig::parse("scale 0.2", DatasetKind::A).is_err());
    }

    #[test]
    fn incompatible_rewirer_is_rejected() {
        assert!(ExperimentConfig::parse("rewirers = cayley-clusters", DatasetKind::A).is_err());
        assert!(ExperimentConfig::parse("rewirers = aligned-cayley", DatasetKind::B).is_err());
        assert!(ExperimentConfig::parse("dataset = b", DatasetKind::A).is_err());
    }

    #[test]
    fn full_scale_matches_defaults() {
        let a = ExperimentConfig::defaults_for(DatasetKind::A);
        assert_eq!((a.scaled_dataset().train_count, a.scaled_dataset().eval_count), (5000, 500));
        assert_eq!(a.scaled_schedule().total_epochs, 200);
        let b = ExperimentConfig::defaults_for(DatasetKind::B);
        assert_eq!((b.scaled_dataset().train_count, b.scaled_dataset().eval_count), (1500, 300));
        let (c1, c2) = b.coefficients(100.0);
        assert!((c1 - 1.0 / 101.0).abs() < 1e-15 && (c2 - 100.0 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn mean_sd_examples() {
        let (m, s) = mean_sd(&[0.4, 0.5, 0.6]);
        assert!((m - 0.5).abs() < 1e-12 && (s - 0.1).abs() < 1e-12);
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn summarize_empty_is_an_error() {
        let r = SweepResult {
            kind: DatasetKind::A,
            rows: vec![],
        };
        assert!(summarize(&r).is_err());
    }

    #[test]
    fn parallel_results_keep_job_order() {
        let jobs: Vec<u64> = (0..20).collect();
        let out = run_parallel(&jobs, 4, |&j| Ok(j * 2)).unwrap();
        assert_eq!(out, (0..20).map(|j| j * 2).collect::<Vec<_>>());
    }
}
