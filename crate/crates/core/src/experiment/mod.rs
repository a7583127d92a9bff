//! The experiment harness: construction x degree sweeps, spectral
//! metrics joined onto training results, correlation and figure tables.
//!
//! A sweep trains one network per (construction, degree, repeat) cell.
//! Cells are fully deterministic: each gets a seed derived from the base
//! seed, the construction name, the layer-0 degree and the repeat index
//! (see [`crate::seed::cell_seed`]), so re-running or extending a sweep
//! never changes existing rows. Results stream into `results.csv` row by
//! row; an interrupted sweep resumes from the rows already on disk and
//! produces byte-identical output. Wall-clock timings go to a separate
//! `timings.csv` because they are the one thing that is not
//! reproducible.

pub mod config;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::network::{self, Network, NetworkConfig, TrainRecord};
use crate::seed::{self, stream};
use crate::spectral::{self, SpectralReport};
use crate::topology::{self, BipartiteTopology, ConstructionKind, ConstructionSpec};

/// Training hyperparameters shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Mnist {
        dir: PathBuf,
        /// Per-class subsample sizes; `None` keeps the full split.
        train_per_class: Option<usize>,
        test_per_class: Option<usize>,
    },
    Synthetic {
        classes: usize,
        dim: usize,
        train_per_class: usize,
        test_per_class: usize,
        separation: f64,
    },
}

/// The degree axis: explicit per-input-neuron degrees (clamped per
/// layer to its fan-out), or densities converted per layer as
/// `k_l = clamp(round(d * fan_out_l), 1, fan_out_l)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DegreeList {
    Ks(Vec<usize>),
    Densities(Vec<f64>),
}

/// How the degree axis spans multiple sparse layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeMode {
    /// Every sparse layer takes the same degree entry ("varying at the
    /// same pace"). One cell per degree-list entry.
    #[default]
    Tied,
    /// Full cartesian product of the degree list across sparse layers
    /// (the contour-plot setting). `len^sparse_layers` cells per
    /// construction and repeat.
    Grid,
}

impl DegreeList {
    pub fn len(&self) -> usize {
        match self {
            DegreeList::Ks(v) => v.len(),
            DegreeList::Densities(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn k_for(&self, entry: usize, fan_out: usize) -> usize {
        match self {
            DegreeList::Ks(v) => v[entry].min(fan_out),
            DegreeList::Densities(v) => {
                ((v[entry] * fan_out as f64).round() as usize).clamp(1, fan_out)
            }
        }
    }
}

/// A fully resolved sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub dataset: DatasetSpec,
    pub layer_sizes: Vec<usize>,
    pub constructions: Vec<ConstructionKind>,
    pub degrees: DegreeList,
    pub repeats: usize,
    /// Keep the final weight layer fully connected and sweep the rest.
    pub last_layer_fully_connected: bool,
    pub degree_mode: DegreeMode,
    pub hyper: Hyper,
    pub dropout: Option<Vec<f64>>,
    pub degree_scaled_init: bool,
    pub base_seed: u64,
    /// Parallel cell workers; 0 means one per available core.
    pub workers: usize,
    /// Stop after this many cells (interruption aid; resume finishes).
    pub cell_limit: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig("need at least two layers".into()));
        }
        if self.constructions.is_empty() {
            return Err(Error::InvalidConfig("no constructions listed".into()));
        }
        if self.degrees.is_empty() {
            return Err(Error::InvalidConfig("no degrees listed".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        Ok(())
    }

    fn weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Number of layers the degree axis actually drives.
    fn sparse_layers(&self) -> usize {
        let layers = self.weight_layers();
        if self.last_layer_fully_connected && layers > 1 {
            layers - 1
        } else {
            layers
        }
    }

    /// Degree-axis entries per sparse construction.
    fn entries_per_construction(&self) -> usize {
        match self.degree_mode {
            DegreeMode::Tied => self.degrees.len(),
            DegreeMode::Grid => self.degrees.len().pow(self.sparse_layers() as u32),
        }
    }

    /// Decode a degree-axis entry into one degree-list index per sparse
    /// layer. Grid entries are base-`degrees.len()` numbers with layer 0
    /// in the most significant digit.
    fn degree_indices(&self, entry: usize) -> Vec<usize> {
        let sparse = self.sparse_layers();
        match self.degree_mode {
            DegreeMode::Tied => vec![entry; sparse],
            DegreeMode::Grid => {
                let base = self.degrees.len();
                (0..sparse)
                    .map(|s| (entry / base.pow((sparse - 1 - s) as u32)) % base)
                    .collect()
            }
        }
    }

    /// Per-sparse-layer degrees for one degree-axis entry.
    pub fn layer_degrees(&self, entry: usize) -> Vec<usize> {
        self.degree_indices(entry)
            .into_iter()
            .enumerate()
            .map(|(s, idx)| self.degrees.k_for(idx, self.layer_sizes[s + 1]))
            .collect()
    }
}

/// One single-network training job (the `train` subcommand).
#[derive(Debug, Clone, PartialEq)]
pub struct SingleTrainSpec {
    pub dataset: DatasetSpec,
    pub layer_sizes: Vec<usize>,
    /// One construction per weight layer.
    pub constructions: Vec<ConstructionKind>,
    /// One degree per weight layer (ignored for fully-connected).
    pub degrees: Vec<usize>,
    pub hyper: Hyper,
    pub dropout: Option<Vec<f64>>,
    pub degree_scaled_init: bool,
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
    pub record: Option<PathBuf>,
}

impl SingleTrainSpec {
    pub fn validate(&self) -> Result<()> {
        let layers = self.layer_sizes.len().saturating_sub(1);
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig("need at least two layers".into()));
        }
        if self.constructions.len() != layers || self.degrees.len() != layers {
            return Err(Error::InvalidConfig(format!(
                "need one construction and one degree per weight layer ({layers})"
            )));
        }
        Ok(())
    }
}

/// Load (train, test) according to the dataset spec. Subsampling seeds
/// derive from the base seed so sweeps are self-contained.
pub fn load_dataset(spec: &DatasetSpec, base_seed: u64) -> Result<(Dataset, Dataset)> {
    match spec {
        DatasetSpec::Mnist {
            dir,
            train_per_class,
            test_per_class,
        } => {
            let train = dataset::load_idx_pair(
                dir.join("train-images-idx3-ubyte"),
                dir.join("train-labels-idx1-ubyte"),
                10,
            )?;
            let test = dataset::load_idx_pair(
                dir.join("t10k-images-idx3-ubyte"),
                dir.join("t10k-labels-idx1-ubyte"),
                10,
            )?;
            let train = match train_per_class {
                Some(p) => {
                    dataset::subsample(&train, *p, seed::derive(base_seed, stream::SUBSAMPLE, 0))?
                }
                None => train,
            };
            let test = match test_per_class {
                Some(p) => {
                    dataset::subsample(&test, *p, seed::derive(base_seed, stream::SUBSAMPLE, 1))?
                }
                None => test,
            };
            Ok((train, test))
        }
        DatasetSpec::Synthetic {
            classes,
            dim,
            train_per_class,
            test_per_class,
            separation,
        } => {
            let per_class = train_per_class + test_per_class;
            let all = dataset::synthetic_blobs(
                *classes,
                *dim,
                per_class,
                *separation,
                seed::derive(base_seed, stream::SUBSAMPLE, 2),
            );
            let mut train = Vec::new();
            let mut test = Vec::new();
            for class in 0..*classes {
                let chunk = &all.samples[class * per_class..(class + 1) * per_class];
                train.extend_from_slice(&chunk[..*train_per_class]);
                test.extend_from_slice(&chunk[*train_per_class..]);
            }
            Ok((
                Dataset::new(train, *dim, *classes)?,
                Dataset::new(test, *dim, *classes)?,
            ))
        }
    }
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: ConstructionKind,
    /// Degree-axis entry; `None` for the fully connected baseline.
    pub entry: Option<usize>,
    pub repeat: usize,
}

/// Grid enumeration, in deterministic order. Sparse constructions span
/// the whole degree axis; a fully connected baseline collapses to one
/// cell per repeat (its degree axis is meaningless).
pub fn cells(spec: &SweepSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for &kind in &spec.constructions {
        let entries: Vec<Option<usize>> = if kind == ConstructionKind::FullyConnected {
            vec![None]
        } else {
            (0..spec.entries_per_construction()).map(Some).collect()
        };
        for entry in entries {
            for repeat in 0..spec.repeats {
                out.push(Cell {
                    kind,
                    entry,
                    repeat,
                });
            }
        }
    }
    out
}

/// Per-layer construction specs for one cell. Layer seeds for random
/// constructions derive from the cell seed and the layer index.
pub fn cell_layer_specs(
    spec: &SweepSpec,
    cell: Cell,
    cell_seed_value: u64,
) -> Vec<ConstructionSpec> {
    let layers = spec.weight_layers();
    let ks = cell.entry.map(|e| spec.layer_degrees(e));
    (0..layers)
        .map(|l| {
            let fully = cell.kind == ConstructionKind::FullyConnected
                || (spec.last_layer_fully_connected && layers > 1 && l == layers - 1);
            if fully {
                ConstructionSpec::fully_connected()
            } else {
                let k = ks.as_ref().expect("sparse cell has a degree entry")[l];
                let seed = cell
                    .kind
                    .is_random()
                    .then(|| seed::derive(cell_seed_value, stream::TOPOLOGY, l as u64));
                ConstructionSpec {
                    kind: cell.kind,
                    k,
                    seed,
                }
            }
        })
        .collect()
}

/// The `k` recorded for a cell: layer 0's per-input degree (the first
/// hidden width for the fully connected baseline).
pub fn cell_k(spec: &SweepSpec, cell: Cell) -> usize {
    match cell.entry {
        Some(e) => spec.layer_degrees(e)[0],
        None => spec.layer_sizes[1],
    }
}

/// Seed of one cell: the documented tied-mode hash, or its grid-mode
/// extension folding every sparse layer's degree.
pub fn cell_seed_for(spec: &SweepSpec, cell: Cell) -> u64 {
    let k = cell_k(spec, cell);
    match (spec.degree_mode, cell.entry) {
        (DegreeMode::Grid, Some(e)) => seed::cell_seed_layers(
            spec.base_seed,
            cell.kind.tag(),
            &spec.layer_degrees(e),
            cell.repeat,
        ),
        _ => seed::cell_seed(spec.base_seed, cell.kind.tag(), k, cell.repeat),
    }
}

/// Spectral metrics of one layer, as carried in a sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpectral {
    pub lambda2: f64,
    pub second_largest: f64,
    pub largest: f64,
    pub components: usize,
}

impl From<&SpectralReport> for LayerSpectral {
    fn from(r: &SpectralReport) -> Self {
        LayerSpectral {
            lambda2: r.algebraic_connectivity_standard,
            second_largest: r.second_largest_nonzero,
            largest: r.largest_nonzero,
            components: r.component_count,
        }
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub construction: String,
    pub k: usize,
    /// Per-weight-layer degrees (fully connected layers report their
    /// fan-out).
    pub k_layers: Vec<usize>,
    pub repeat: usize,
    pub cell_seed: u64,
    pub density_layers: Vec<f64>,
    pub density_net: f64,
    pub final_accuracy: f64,
    pub epoch_accuracies: Vec<f64>,
    pub spectral: Vec<LayerSpectral>,
    pub weight_stats: Vec<(f64, f64, f64)>,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Fixed CSV header for a sweep over `layers` weight layers.
pub fn results_header(layers: usize) -> String {
    let mut cols = vec![
        "construction".to_string(),
        "k".into(),
        "k_layers".into(),
        "repeat".into(),
        "cell_seed".into(),
    ];
    for l in 0..layers {
        cols.push(format!("density_l{l}"));
    }
    cols.push("density_net".into());
    cols.push("final_accuracy".into());
    cols.push("acc_epochs".into());
    for l in 0..layers {
        cols.push(format!("lambda2_l{l}"));
        cols.push(format!("second_largest_l{l}"));
        cols.push(format!("largest_l{l}"));
        cols.push(format!("components_l{l}"));
    }
    for l in 0..layers {
        cols.push(format!("wmax_l{l}"));
        cols.push(format!("wmin_l{l}"));
        cols.push(format!("wstd_l{l}"));
    }
    cols.push("status".into());
    cols.join(",")
}

fn format_row(row: &SweepRow) -> String {
    let mut fields = vec![
        row.construction.clone(),
        row.k.to_string(),
        row.k_layers
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";"),
        row.repeat.to_string(),
        row.cell_seed.to_string(),
    ];
    let ok = row.is_ok();
    let opt = |v: f64| if ok { v.to_string() } else { String::new() };
    for &d in &row.density_layers {
        fields.push(opt(d));
    }
    fields.push(opt(row.density_net));
    fields.push(opt(row.final_accuracy));
    fields.push(if ok {
        row.epoch_accuracies
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";")
    } else {
        String::new()
    });
    for s in &row.spectral {
        fields.push(opt(s.lambda2));
        fields.push(opt(s.second_largest));
        fields.push(opt(s.largest));
        fields.push(if ok {
            s.components.to_string()
        } else {
            String::new()
        });
    }
    for &(max, min, std) in &row.weight_stats {
        fields.push(opt(max));
        fields.push(opt(min));
        fields.push(opt(std));
    }
    // commas or newlines would break the line format
    fields.push(row.status.replace([',', '\r', '\n'], ";"));
    fields.join(",")
}

fn parse_row(line: &str, layers: usize) -> Result<SweepRow> {
    let fields: Vec<&str> = line.split(',').collect();
    let expected = 5 + layers + 2 + 1 + 4 * layers + 3 * layers + 1;
    if fields.len() != expected {
        return Err(Error::Parse(format!(
            "sweep row has {} fields, expected {expected}",
            fields.len()
        )));
    }
    let f64_or_nan = |s: &str| -> Result<f64> {
        if s.is_empty() {
            Ok(f64::NAN)
        } else {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad float `{s}`")))
        }
    };
    let usize_or_zero = |s: &str| -> Result<usize> {
        if s.is_empty() {
            Ok(0)
        } else {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad count `{s}`")))
        }
    };
    let mut it = fields.into_iter();
    let mut next = || it.next().expect("field count checked");
    let construction = next().to_string();
    let k = usize_or_zero(next())?;
    let k_layers = next()
        .split(';')
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Parse(format!("bad layer k `{v}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let repeat = usize_or_zero(next())?;
    let cell_seed = next()
        .parse()
        .map_err(|_| Error::Parse("bad cell seed".into()))?;
    let mut density_layers = Vec::with_capacity(layers);
    for _ in 0..layers {
        density_layers.push(f64_or_nan(next())?);
    }
    let density_net = f64_or_nan(next())?;
    let final_accuracy = f64_or_nan(next())?;
    let eps = next();
    let epoch_accuracies = if eps.is_empty() {
        Vec::new()
    } else {
        eps.split(';')
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad acc `{s}`")))
            })
            .collect::<Result<_>>()?
    };
    let mut spectral = Vec::with_capacity(layers);
    for _ in 0..layers {
        spectral.push(LayerSpectral {
            lambda2: f64_or_nan(next())?,
            second_largest: f64_or_nan(next())?,
            largest: f64_or_nan(next())?,
            components: usize_or_zero(next())?,
        });
    }
    let mut weight_stats = Vec::with_capacity(layers);
    for _ in 0..layers {
        weight_stats.push((
            f64_or_nan(next())?,
            f64_or_nan(next())?,
            f64_or_nan(next())?,
        ));
    }
    let status = next().to_string();
    Ok(SweepRow {
        construction,
        k,
        k_layers,
        repeat,
        cell_seed,
        density_layers,
        density_net,
        final_accuracy,
        epoch_accuracies,
        spectral,
        weight_stats,
        status,
    })
}

/// Spectral reports are pure functions of the topology, so a sweep
/// shares one cache across cells.
type SpectralCache = Mutex<HashMap<(ConstructionSpec, usize, usize), SpectralReport>>;

fn cached_analyze(
    cache: &SpectralCache,
    spec: ConstructionSpec,
    t: &BipartiteTopology,
) -> Result<SpectralReport> {
    let key = (spec, t.left_count(), t.right_count());
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let report = spectral::analyze(t)?;
    cache.lock().unwrap().insert(key, report.clone());
    Ok(report)
}

struct CellOutcome {
    row: SweepRow,
    seconds: f64,
}

fn run_cell(
    spec: &SweepSpec,
    cell: Cell,
    train_set: &Dataset,
    test_set: &Dataset,
    cache: &SpectralCache,
) -> CellOutcome {
    let start = std::time::Instant::now();
    let k = cell_k(spec, cell);
    let cell_seed_value = cell_seed_for(spec, cell);
    let layer_specs = cell_layer_specs(spec, cell, cell_seed_value);
    let layers = spec.weight_layers();

    let k_layers = layer_specs
        .iter()
        .enumerate()
        .map(|(l, s)| {
            if s.kind == ConstructionKind::FullyConnected {
                spec.layer_sizes[l + 1]
            } else {
                s.k
            }
        })
        .collect();
    let mut row = SweepRow {
        construction: cell.kind.tag().to_string(),
        k,
        k_layers,
        repeat: cell.repeat,
        cell_seed: cell_seed_value,
        density_layers: vec![f64::NAN; layers],
        density_net: f64::NAN,
        final_accuracy: f64::NAN,
        epoch_accuracies: Vec::new(),
        spectral: vec![
            LayerSpectral {
                lambda2: f64::NAN,
                second_largest: f64::NAN,
                largest: f64::NAN,
                components: 0,
            };
            layers
        ],
        weight_stats: vec![(f64::NAN, f64::NAN, f64::NAN); layers],
        status: "ok".into(),
    };

    match run_cell_inner(
        spec,
        &layer_specs,
        cell_seed_value,
        train_set,
        test_set,
        cache,
        &mut row,
    ) {
        Ok(()) => {}
        Err(e) => row.status = format!("error: {e}"),
    }
    CellOutcome {
        row,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn run_cell_inner(
    spec: &SweepSpec,
    layer_specs: &[ConstructionSpec],
    cell_seed_value: u64,
    train_set: &Dataset,
    test_set: &Dataset,
    cache: &SpectralCache,
    row: &mut SweepRow,
) -> Result<()> {
    let topologies: Vec<BipartiteTopology> = layer_specs
        .iter()
        .enumerate()
        .map(|(l, s)| topology::build(*s, spec.layer_sizes[l], spec.layer_sizes[l + 1]))
        .collect::<Result<_>>()?;

    let mut possible = 0usize;
    let mut present = 0usize;
    for (l, t) in topologies.iter().enumerate() {
        row.density_layers[l] = t.density();
        possible += t.left_count() * t.right_count();
        present += t.edge_count();
        row.spectral[l] = LayerSpectral::from(&cached_analyze(cache, layer_specs[l], t)?);
    }
    row.density_net = present as f64 / possible as f64;

    let cfg = NetworkConfig {
        layer_sizes: spec.layer_sizes.clone(),
        topologies: layer_specs.to_vec(),
        learning_rate: spec.hyper.learning_rate,
        momentum: spec.hyper.momentum,
        batch_size: spec.hyper.batch_size,
        epochs: spec.hyper.epochs,
        dropout_rates: spec.dropout.clone(),
        init_seed: cell_seed_value,
        degree_scaled_init: spec.degree_scaled_init,
    };
    let mut net = Network::from_topologies(cfg, &topologies)?;
    let record = network::train(&mut net, train_set, test_set)?;
    row.final_accuracy = record.final_accuracy();
    row.epoch_accuracies = record.epochs.iter().map(|e| e.test_accuracy).collect();
    row.weight_stats = record.weight_stats;
    Ok(())
}

/// Count complete, well-formed rows already in `path` and truncate any
/// torn tail, so an interrupted sweep can append from a clean boundary.
fn prepare_resume(path: &Path, header: &str, layers: usize) -> Result<usize> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut valid_bytes = 0usize;
    let mut rows = 0usize;
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(first) if first.trim_end_matches('\n') == header => valid_bytes += first.len(),
        _ => {
            return Err(Error::Parse(format!(
                "{} exists but its header does not match this sweep",
                path.display()
            )))
        }
    }
    for line in lines {
        if !line.ends_with('\n') {
            break; // torn tail
        }
        if parse_row(line.trim_end_matches('\n'), layers).is_err() {
            break;
        }
        valid_bytes += line.len();
        rows += 1;
    }
    if valid_bytes < bytes.len() {
        let f = std::fs::OpenOptions::new().write(true).open(path)?;
        f.set_len(valid_bytes as u64)?;
    }
    Ok(rows)
}

/// Run (or resume) a sweep, streaming rows into `<out_dir>/results.csv`
/// and timings into `<out_dir>/timings.csv`. Returns every row of the
/// final CSV, parsed back from disk.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let results_path = out_dir.join("results.csv");
    let timings_path = out_dir.join("timings.csv");
    let layers = spec.weight_layers();
    let header = results_header(layers);

    let all_cells = cells(spec);
    let done = if results_path.exists() {
        prepare_resume(&results_path, &header, layers)?
    } else {
        let mut f = std::fs::File::create(&results_path)?;
        writeln!(f, "{header}")?;
        0
    };
    if done > all_cells.len() {
        return Err(Error::Parse(format!(
            "{} holds {done} rows but the sweep has only {} cells",
            results_path.display(),
            all_cells.len()
        )));
    }

    let budget = spec
        .cell_limit
        .map(|limit| limit.min(all_cells.len().saturating_sub(done)))
        .unwrap_or(all_cells.len() - done);
    let todo = &all_cells[done..done + budget];

    let (train_set, test_set) = load_dataset(&spec.dataset, spec.base_seed)?;
    let cache: SpectralCache = Mutex::new(HashMap::new());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let mut results = std::fs::OpenOptions::new()
        .append(true)
        .open(&results_path)?;
    let mut timings = std::fs::File::create(&timings_path)?;
    writeln!(timings, "construction,k,repeat,seconds")?;

    let chunk_size = pool.current_num_threads().max(1);
    for chunk in todo.chunks(chunk_size) {
        let outcomes: Vec<CellOutcome> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&cell| run_cell(spec, cell, &train_set, &test_set, &cache))
                .collect()
        });
        for outcome in outcomes {
            writeln!(results, "{}", format_row(&outcome.row))?;
            results.flush()?;
            writeln!(
                timings,
                "{},{},{},{:.3}",
                outcome.row.construction, outcome.row.k, outcome.row.repeat, outcome.seconds
            )?;
        }
    }
    drop(results);
    read_results(&results_path, layers)
}

/// Parse a `results.csv` produced by [`run_sweep`].
pub fn read_results(path: &Path, layers: usize) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty results file".into()))?;
    if header != results_header(layers) {
        return Err(Error::Parse(format!(
            "{}: header does not match {layers} weight layers",
            path.display()
        )));
    }
    lines.map(|line| parse_row(line, layers)).collect()
}

/// Infer the weight-layer count from a results header.
pub fn layers_in_header(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path)?;
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::Parse("empty results file".into()))?;
    for layers in 1..=64 {
        if header == results_header(layers) {
            return Ok(layers);
        }
    }
    Err(Error::Parse(format!(
        "{}: not a sweep results header",
        path.display()
    )))
}

/// Pearson correlation; `None` for fewer than two points or a
/// zero-variance input.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Per-degree-band correlation between layer-0 algebraic connectivity
/// and final accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationBand {
    pub k: usize,
    pub samples: usize,
    pub r: Option<f64>,
    pub flag: &'static str,
}

/// Correlate connectivity with accuracy within each degree band,
/// comparing across constructions at fixed k. The fully connected
/// baseline sits in its own band and is excluded. Bands with fewer than
/// 3 rows or zero variance are flagged instead of reported.
pub fn correlation_report(rows: &[SweepRow]) -> Vec<CorrelationBand> {
    let mut ks: Vec<usize> = rows
        .iter()
        .filter(|r| r.is_ok() && r.construction != ConstructionKind::FullyConnected.tag())
        .map(|r| r.k)
        .collect();
    ks.sort_unstable();
    ks.dedup();

    ks.into_iter()
        .map(|k| {
            let band: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| {
                    r.is_ok()
                        && r.k == k
                        && r.construction != ConstructionKind::FullyConnected.tag()
                })
                .collect();
            let xs: Vec<f64> = band.iter().map(|r| r.spectral[0].lambda2).collect();
            let ys: Vec<f64> = band.iter().map(|r| r.final_accuracy).collect();
            if band.len() < 3 {
                return CorrelationBand {
                    k,
                    samples: band.len(),
                    r: None,
                    flag: "insufficient-data",
                };
            }
            match pearson(&xs, &ys) {
                Some(r) => CorrelationBand {
                    k,
                    samples: band.len(),
                    r: Some(r),
                    flag: "ok",
                },
                None => CorrelationBand {
                    k,
                    samples: band.len(),
                    r: None,
                    flag: "degenerate",
                },
            }
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate CSV tables, one per figure of the experiment report:
/// accuracy vs density (figs 2/3), the comparison table (fig 4), the
/// connectivity-accuracy scatter (fig 5), weight statistics (fig 6) and
/// the correlation bands. Returns (file name, CSV text) pairs.
pub fn figure_tables(rows: &[SweepRow]) -> Vec<(String, String)> {
    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    // grid-mode sweeps repeat a layer-0 k across different deeper-layer
    // degrees, so the whole per-layer degree list is the aggregation key
    let mut keys: Vec<(String, Vec<usize>)> = ok_rows
        .iter()
        .map(|r| (r.construction.clone(), r.k_layers.clone()))
        .collect();
    keys.sort();
    keys.dedup();

    let group = |construction: &str, k_layers: &[usize]| -> Vec<&&SweepRow> {
        ok_rows
            .iter()
            .filter(|r| r.construction == construction && r.k_layers == k_layers)
            .collect()
    };

    let mut fig23 = String::from(
        "construction,k,density_l0,density_net,mean_final_accuracy,std_final_accuracy,repeats\n",
    );
    let mut fig4 =
        String::from("construction,k,density_net,mean_final_accuracy,std_final_accuracy\n");
    for (construction, k_layers) in &keys {
        let g = group(construction, k_layers);
        let accs: Vec<f64> = g.iter().map(|r| r.final_accuracy).collect();
        let (mean, std) = mean_std(&accs);
        let k = g[0].k;
        let d0 = g[0].density_layers[0];
        let dn = g[0].density_net;
        fig23.push_str(&format!(
            "{construction},{k},{d0},{dn},{mean},{std},{}\n",
            g.len()
        ));
        fig4.push_str(&format!("{construction},{k},{dn},{mean},{std}\n"));
    }

    let mut fig5 = String::from(
        "construction,k,repeat,lambda2_l0,second_largest_l0,largest_l0,final_accuracy\n",
    );
    let mut scatter_rows: Vec<&&SweepRow> = ok_rows.iter().collect();
    scatter_rows
        .sort_by(|a, b| (&a.construction, a.k, a.repeat).cmp(&(&b.construction, b.k, b.repeat)));
    for r in scatter_rows {
        fig5.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.construction,
            r.k,
            r.repeat,
            r.spectral[0].lambda2,
            r.spectral[0].second_largest,
            r.spectral[0].largest,
            r.final_accuracy
        ));
    }

    let mut fig6 = String::from("construction,k,layer,max,min,std\n");
    for (construction, k_layers) in &keys {
        let g = group(construction, k_layers);
        let k = g[0].k;
        let layers = g[0].weight_stats.len();
        for l in 0..layers {
            let (max, _) = mean_std(&g.iter().map(|r| r.weight_stats[l].0).collect::<Vec<_>>());
            let (min, _) = mean_std(&g.iter().map(|r| r.weight_stats[l].1).collect::<Vec<_>>());
            let (std, _) = mean_std(&g.iter().map(|r| r.weight_stats[l].2).collect::<Vec<_>>());
            fig6.push_str(&format!("{construction},{k},{l},{max},{min},{std}\n"));
        }
    }

    let mut corr = String::from("k,n_samples,pearson_r,flag\n");
    for band in correlation_report(rows) {
        let r = band.r.map(|v| v.to_string()).unwrap_or_default();
        corr.push_str(&format!(
            "{},{},{},{}\n",
            band.k, band.samples, r, band.flag
        ));
    }

    vec![
        ("fig2_3_accuracy_vs_density.csv".into(), fig23),
        ("fig4_comparison.csv".into(), fig4),
        ("fig5_connectivity_scatter.csv".into(), fig5),
        ("fig6_weight_stats.csv".into(), fig6),
        ("correlations.csv".into(), corr),
    ]
}

/// Train one network per a [`SingleTrainSpec`]; writes the record,
/// weight statistics and checkpoint when paths are configured.
pub fn run_single_train(spec: &SingleTrainSpec, out_dir: &Path) -> Result<(TrainRecord, Network)> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let (train_set, test_set) = load_dataset(&spec.dataset, spec.seed)?;

    let layer_specs: Vec<ConstructionSpec> = spec
        .constructions
        .iter()
        .enumerate()
        .map(|(l, &kind)| {
            if kind == ConstructionKind::FullyConnected {
                ConstructionSpec::fully_connected()
            } else {
                let seed = kind
                    .is_random()
                    .then(|| seed::derive(spec.seed, stream::TOPOLOGY, l as u64));
                ConstructionSpec {
                    kind,
                    k: spec.degrees[l],
                    seed,
                }
            }
        })
        .collect();

    let cfg = NetworkConfig {
        layer_sizes: spec.layer_sizes.clone(),
        topologies: layer_specs,
        learning_rate: spec.hyper.learning_rate,
        momentum: spec.hyper.momentum,
        batch_size: spec.hyper.batch_size,
        epochs: spec.hyper.epochs,
        dropout_rates: spec.dropout.clone(),
        init_seed: spec.seed,
        degree_scaled_init: spec.degree_scaled_init,
    };
    let mut net = network::init_network(cfg)?;
    let record = network::train(&mut net, &train_set, &test_set)?;

    if let Some(rel) = &spec.record {
        let path = out_dir.join(rel);
        let mut f = std::fs::File::create(&path)?;
        record.write_epochs_csv(&mut f)?;
        let stats_path = path.with_extension("weights.csv");
        let mut f = std::fs::File::create(stats_path)?;
        record.write_weight_stats_csv(&mut f)?;
    }
    if let Some(rel) = &spec.checkpoint {
        network::save_checkpoint(&net, out_dir.join(rel))?;
    }
    Ok((record, net))
}
