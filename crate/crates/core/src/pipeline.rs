//! End-to-end processing of one graph: read, threshold, optional LCC,
//! invariants, result files.
//!
//! The command-line tool and the HTTP service both go through
//! [`run`] and [`write_outputs`], so a given input and [`RunConfig`]
//! produce the same bytes from either front end.
//!
//! Output directory layout:
//!
//! | file | contents |
//! |------|----------|
//! | `degree.csv`, `ss1.csv`, `nl3.csv`, `cc.csv` | `vertex,<name>` (or `.glcv`) |
//! | `lp.csv` | `vertex,lp_0,…` (or row-major `lp.glcv`) |
//! | `invariants.csv` | all per-vertex invariants side by side |
//! | `eigenvalues.csv` | `index,eigenvalue`, when eigenpairs were computed |
//! | `metadata.json` | sizes, parameters, order of operations, vertex map |
//! | `timings.json` | wall-clock seconds per stage |
//!
//! Everything except `timings.json` is a deterministic function of the
//! input and configuration.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::components::largest_connected_component;
use crate::eigen::{EigenOptions, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::graph::{SparseGraph, WeightedEdgeList};
use crate::invariants::{
    compute_all, ComputeConfig, ExecutionMode, InvariantBundle, InvariantSet, InvariantVector,
    ScaleMode, StageTiming, DEFAULT_EIGENPAIRS,
};
use crate::io::{self, FormatKind, GlcvVector};

pub const METADATA_FILE: &str = "metadata.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Glcv,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Glcv => "glcv",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "glcv" => Ok(OutputFormat::Glcv),
            other => Err(Error::InvalidArgument(format!("unknown output format '{other}'"))),
        }
    }
}

/// Processing parameters. Also the JSON job document accepted by the
/// service; every field is optional there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `None` detects the format from the leading bytes.
    pub input_format: Option<FormatKind>,
    /// Keep edges whose summed weight is strictly greater than this.
    pub threshold: f64,
    pub lcc: bool,
    pub invariants: InvariantSet,
    pub eigs: usize,
    pub lp_dim: Option<usize>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub scale_mode: ScaleMode,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_format: None,
            threshold: 0.0,
            lcc: false,
            invariants: InvariantSet::all(),
            eigs: DEFAULT_EIGENPAIRS,
            lp_dim: None,
            tol: DEFAULT_TOL,
            max_iter: None,
            scale_mode: ScaleMode::Scaled,
            output_format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn compute_config(&self) -> ComputeConfig {
        ComputeConfig {
            which: self.invariants,
            eigen: EigenOptions {
                k: self.eigs,
                tol: self.tol,
                max_iter: self.max_iter,
            },
            lp_dim: self.lp_dim,
            scale_mode: self.scale_mode,
            mode: ExecutionMode::Chained,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(Error::InvalidThreshold(self.threshold));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if let Some(f) = self.input_format {
            if !f.is_graph() {
                return Err(Error::InvalidArgument(format!("{f} is not a graph format")));
            }
        }
        self.compute_config().validate()
    }
}

/// Result of [`run`]: the invariants plus what is needed to describe how
/// they were obtained.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub input_format: FormatKind,
    pub input_n: usize,
    pub input_entries: usize,
    pub graph: SparseGraph,
    /// `vertex_map[new] = original id`, present when LCC extraction ran.
    pub vertex_map: Option<Vec<usize>>,
    pub bundle: InvariantBundle,
    pub notes: Vec<String>,
    pub timings: Vec<StageTiming>,
}

/// Parse a graph payload, detecting the format when `format` is `None`.
pub fn read_graph_bytes(bytes: &[u8], format: Option<FormatKind>) -> Result<(WeightedEdgeList, FormatKind)> {
    let format = format.unwrap_or_else(|| io::detect_graph_format(bytes));
    let list = io::read_graph(bytes, format)?;
    list.validate()?;
    Ok((list, format))
}

/// Threshold and binarize, then optionally restrict to the largest
/// connected component.
pub fn prepare_graph(list: &WeightedEdgeList, threshold: f64, lcc: bool) -> Result<(SparseGraph, Option<Vec<usize>>)> {
    let g = SparseGraph::build(list, threshold)?;
    if !lcc {
        return Ok((g, None));
    }
    let (sub, map) = largest_connected_component(&g)?;
    Ok((sub, Some(map)))
}

/// Run the whole pipeline on raw input bytes.
pub fn run(bytes: &[u8], config: &RunConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let mut timings = Vec::new();
    let started = std::time::Instant::now();
    let (list, input_format) = read_graph_bytes(bytes, config.input_format)?;
    timings.push(stage("read", started));

    let started = std::time::Instant::now();
    let (graph, vertex_map) = prepare_graph(&list, config.threshold, config.lcc)?;
    timings.push(stage(if config.lcc { "build+lcc" } else { "build" }, started));

    let mut notes = Vec::new();
    let bundle = {
        let mut b = compute_all(&graph, &config.compute_config())?;
        b.threshold = config.threshold;
        b.lcc_applied = config.lcc;
        b
    };
    if config.invariants.needs_eigenpairs() {
        if config.eigs > graph.n() {
            notes.push(format!(
                "eigenpair count {} exceeds vertex count {}; computed {}",
                config.eigs,
                graph.n(),
                bundle.k
            ));
        }
        if let Some(lp) = &bundle.lp {
            let want = config.compute_config().lp_dim();
            if lp.k < want {
                notes.push(format!(
                    "latent dimension {want} exceeds the {} available eigenpairs; used {}",
                    bundle.k, lp.k
                ));
            }
        }
    }
    timings.extend(bundle.timings.iter().cloned());

    Ok(PipelineOutput {
        input_format,
        input_n: list.n,
        input_entries: list.edges.len(),
        graph,
        vertex_map,
        bundle,
        notes,
        timings,
    })
}

fn stage(name: &str, started: std::time::Instant) -> StageTiming {
    StageTiming {
        stage: name.to_string(),
        seconds: started.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    input_format: FormatKind,
    input_vertices: usize,
    input_entries: usize,
    threshold: f64,
    lcc: bool,
    order_of_operations: &'static [&'static str],
    n: usize,
    m: usize,
    invariants: Vec<&'static str>,
    eigs_requested: usize,
    k: usize,
    lp_dim: Option<usize>,
    scale_mode: ScaleMode,
    tol: f64,
    max_iter: Option<usize>,
    output_format: OutputFormat,
    files: &'a [String],
    notes: &'a [String],
    vertex_map: Option<&'a [usize]>,
}

#[derive(Debug, Serialize)]
struct Timings<'a> {
    stages: &'a [StageTiming],
    total_seconds: f64,
}

const ORDER: &[&str] = &["read", "threshold", "binarize", "lcc", "invariants"];
const ORDER_NO_LCC: &[&str] = &["read", "threshold", "binarize", "invariants"];

/// Write every result file into `dir` (created if needed). Each file is
/// written to a temporary name and renamed into place. Returns the file
/// names in write order.
pub fn write_outputs(out: &PipelineOutput, config: &RunConfig, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let b = &out.bundle;
    let ext = config.output_format.extension();
    let mut files = Vec::new();

    let vectors: [(&str, &Option<InvariantVector>); 4] =
        [("degree", &b.degree), ("ss1", &b.ss1), ("nl3", &b.nl3), ("cc", &b.cc)];
    for (name, vec) in vectors {
        let Some(vec) = vec else { continue };
        let file = format!("{name}.{ext}");
        let values = GlcvVector::from_values(vec.values.clone(), vec.kind.is_integral());
        write_atomic(dir, &file, |w| match config.output_format {
            OutputFormat::Csv => io::write_vector_csv(name, &values, w),
            OutputFormat::Glcv => io::write_glcv(&values, w),
        })?;
        files.push(file);
    }
    if let Some(lp) = &b.lp {
        let file = format!("lp.{ext}");
        write_atomic(dir, &file, |w| match config.output_format {
            OutputFormat::Csv => io::write_latent_csv(lp, w),
            OutputFormat::Glcv => {
                let flat = lp.rows.iter().flatten().copied().collect();
                io::write_glcv(&GlcvVector::F64(flat), w)
            }
        })?;
        files.push(file);
    }
    write_atomic(dir, "invariants.csv", |w| io::write_invariants_csv(b, w))?;
    files.push("invariants.csv".into());
    if b.k > 0 {
        write_atomic(dir, "eigenvalues.csv", |w| {
            writeln!(w, "index,eigenvalue")?;
            for (i, l) in b.eigenvalues.iter().enumerate() {
                writeln!(w, "{i},{}", io::render_real(*l))?;
            }
            Ok(())
        })?;
        files.push("eigenvalues.csv".into());
    }

    files.push(METADATA_FILE.into());
    let metadata = Metadata {
        tool: "glocal",
        version: env!("CARGO_PKG_VERSION"),
        input_format: out.input_format,
        input_vertices: out.input_n,
        input_entries: out.input_entries,
        threshold: config.threshold,
        lcc: config.lcc,
        order_of_operations: if config.lcc { ORDER } else { ORDER_NO_LCC },
        n: b.n,
        m: b.m,
        invariants: config.invariants.names(),
        eigs_requested: config.eigs,
        k: b.k,
        lp_dim: b.lp.as_ref().map(|lp| lp.k),
        scale_mode: config.scale_mode,
        tol: config.tol,
        max_iter: config.max_iter,
        output_format: config.output_format,
        files: &files,
        notes: &out.notes,
        vertex_map: out.vertex_map.as_deref(),
    };
    write_json(dir, METADATA_FILE, &metadata)?;

    let timings = Timings {
        stages: &out.timings,
        total_seconds: out.timings.iter().map(|t| t.seconds).sum(),
    };
    write_json(dir, TIMINGS_FILE, &timings)?;
    files.push(TIMINGS_FILE.into());
    Ok(files)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_atomic(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(())
}

/// Write `dir/name` via a temporary file in the same directory.
pub fn write_atomic<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<&mut fs::File>) -> Result<()>,
{
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{name}."))
        .tempfile_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| Error::Io(e.error))?;
    Ok(target)
}
