//! Per-vertex (glocal) invariants and the shared-computation driver.
//!
//! | invariant | needs |
//! |-----------|-------|
//! | degree    | `A·1` |
//! | ss1       | neighbor-list intersections |
//! | nl3       | top-K eigenpairs |
//! | cc        | degree and nl3 |
//! | lp        | top-K eigenpairs |
//!
//! [`compute_all`] runs each prerequisite at most once in
//! [`ExecutionMode::Chained`]; [`ExecutionMode::Independent`] recomputes
//! prerequisites for every requested invariant, which is what the benchmark
//! compares against.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eigen::{top_eigenpairs, EigenOptions, EigenPairs};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

pub const DEFAULT_EIGENPAIRS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    Degree,
    Ss1,
    Nl3Approx,
    Nl3Exact,
    Cc,
}

impl InvariantKind {
    pub fn name(self) -> &'static str {
        match self {
            InvariantKind::Degree => "degree",
            InvariantKind::Ss1 => "ss1",
            InvariantKind::Nl3Approx => "nl3",
            InvariantKind::Nl3Exact => "nl3_exact",
            InvariantKind::Cc => "cc",
        }
    }

    /// Whether values are non-negative integers stored exactly.
    pub fn is_integral(self) -> bool {
        matches!(
            self,
            InvariantKind::Degree | InvariantKind::Ss1 | InvariantKind::Nl3Exact
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantVector {
    pub kind: InvariantKind,
    pub values: Vec<f64>,
}

impl InvariantVector {
    pub fn new(kind: InvariantKind, values: Vec<f64>) -> Self {
        InvariantVector { kind, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// How latent position rows are formed from eigenvectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Row `v` is `(√|λ₁|·x_v1, …, √|λ_k|·x_vk)`.
    #[default]
    Scaled,
    /// Row `v` is `(x_v1, …, x_vk)`.
    Eigenvector,
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled" => Ok(ScaleMode::Scaled),
            "eigenvector" | "unscaled" => Ok(ScaleMode::Eigenvector),
            other => Err(Error::InvalidArgument(format!("unknown scale mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentPositionMatrix {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub scale_mode: ScaleMode,
}

/// `Deg = A·1`.
pub fn degree(g: &SparseGraph) -> InvariantVector {
    let ones = vec![1.0; g.n()];
    let values = g.matvec(&ones).expect("ones vector has graph dimension");
    InvariantVector::new(InvariantKind::Degree, values)
}

/// Edges in the subgraph induced by each closed neighborhood `N₁[v]`:
/// the edges at `v` plus the edges among its neighbors.
pub fn scan_statistic_1(g: &SparseGraph) -> InvariantVector {
    let triangles = triangles_per_vertex(g);
    let values = triangles
        .iter()
        .enumerate()
        .map(|(v, &t)| (g.degree(v) as u64 + t) as f64)
        .collect();
    InvariantVector::new(InvariantKind::Ss1, values)
}

/// Number of triangles through each vertex.
pub fn local_triangles_exact(g: &SparseGraph) -> InvariantVector {
    let values = triangles_per_vertex(g).into_iter().map(|t| t as f64).collect();
    InvariantVector::new(InvariantKind::Nl3Exact, values)
}

/// `½ Σ_k λ_k³ x_vk²` over the supplied eigenpairs. Negative values are
/// kept as computed.
pub fn local_triangles_approx(eigs: &EigenPairs) -> InvariantVector {
    let mut values = vec![0.0; eigs.n];
    for (lambda, x) in eigs.values.iter().zip(&eigs.vectors) {
        let cube = lambda * lambda * lambda;
        for (out, xv) in values.iter_mut().zip(x) {
            *out += cube * xv * xv;
        }
    }
    values.iter_mut().for_each(|v| *v *= 0.5);
    InvariantVector::new(InvariantKind::Nl3Approx, values)
}

/// `2·nl3 / (d·(d−1))`, with 0 for vertices of degree below 2 and negative
/// triangle estimates clamped to 0.
pub fn clustering_coefficient(deg: &InvariantVector, nl3: &InvariantVector) -> Result<InvariantVector> {
    if deg.len() != nl3.len() {
        return Err(Error::LengthMismatch {
            expected: deg.len(),
            actual: nl3.len(),
        });
    }
    let values = deg
        .values
        .iter()
        .zip(&nl3.values)
        .map(|(&d, &t)| {
            if d < 2.0 {
                0.0
            } else {
                (2.0 * t / (d * (d - 1.0))).max(0.0)
            }
        })
        .collect();
    Ok(InvariantVector::new(InvariantKind::Cc, values))
}

pub fn latent_positions(eigs: &EigenPairs, k: usize, scale_mode: ScaleMode) -> Result<LatentPositionMatrix> {
    if k > eigs.k() {
        return Err(Error::InvalidArgument(format!(
            "latent dimension {k} exceeds the {} available eigenpairs",
            eigs.k()
        )));
    }
    let weights: Vec<f64> = eigs.values[..k]
        .iter()
        .map(|l| match scale_mode {
            ScaleMode::Scaled => l.abs().sqrt(),
            ScaleMode::Eigenvector => 1.0,
        })
        .collect();
    let rows = (0..eigs.n)
        .map(|v| {
            (0..k)
                .map(|j| weights[j] * eigs.vectors[j][v])
                .collect()
        })
        .collect();
    Ok(LatentPositionMatrix {
        n: eigs.n,
        k,
        rows,
        scale_mode,
    })
}

/// Triangles through each vertex via neighbor-set intersection per edge.
///
/// For an edge `{u, v}`, `|N(u) ∩ N(v)|` triangles contain it. Summing over
/// a vertex's edges counts each of its triangles twice.
fn triangles_per_vertex(g: &SparseGraph) -> Vec<u64> {
    let n = g.n();
    let mut twice = vec![0u64; n];
    if n == 0 {
        return twice;
    }
    let words = n.div_ceil(64);
    let avg_degree = 2 * g.m() / n;
    // Word-parallel intersection pays off once rows are denser than one
    // neighbor per 64 vertices; cap the bitmap at 512 MiB.
    if words < avg_degree && n <= 65_536 {
        let bits = NeighborBits::new(g, words);
        for (u, v) in g.edges() {
            let common = bits.common(u, v);
            twice[u] += common;
            twice[v] += common;
        }
    } else {
        for (u, v) in g.edges() {
            let common = sorted_intersection_count(g.neighbors(u), g.neighbors(v));
            twice[u] += common;
            twice[v] += common;
        }
    }
    twice.into_iter().map(|t| t / 2).collect()
}

struct NeighborBits {
    words: usize,
    bits: Vec<u64>,
}

impl NeighborBits {
    fn new(g: &SparseGraph, words: usize) -> Self {
        let mut bits = vec![0u64; g.n() * words];
        for u in 0..g.n() {
            let row = &mut bits[u * words..(u + 1) * words];
            for &v in g.neighbors(u) {
                row[v as usize / 64] |= 1 << (v % 64);
            }
        }
        NeighborBits { words, bits }
    }

    fn common(&self, u: usize, v: usize) -> u64 {
        let a = &self.bits[u * self.words..(u + 1) * self.words];
        let b = &self.bits[v * self.words..(v + 1) * self.words];
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
    }
}

fn sorted_intersection_count(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Subset of invariants to compute. Serialized as a list of names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct InvariantSet {
    pub deg: bool,
    pub ss1: bool,
    pub nl3: bool,
    pub cc: bool,
    pub lp: bool,
}

impl InvariantSet {
    pub const NAMES: [&'static str; 5] = ["deg", "ss1", "nl3", "cc", "lp"];

    pub fn all() -> Self {
        InvariantSet {
            deg: true,
            ss1: true,
            nl3: true,
            cc: true,
            lp: true,
        }
    }

    pub fn none() -> Self {
        InvariantSet {
            deg: false,
            ss1: false,
            nl3: false,
            cc: false,
            lp: false,
        }
    }

    pub fn only(name: &str) -> Result<Self> {
        let mut set = Self::none();
        set.insert(name)?;
        Ok(set)
    }

    pub fn insert(&mut self, name: &str) -> Result<()> {
        let flag = match name {
            "deg" | "degree" => &mut self.deg,
            "ss1" => &mut self.ss1,
            "nl3" => &mut self.nl3,
            "cc" => &mut self.cc,
            "lp" => &mut self.lp,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown invariant '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *flag = true;
        Ok(())
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut set = Self::none();
        for name in names {
            set.insert(name.as_ref().trim())?;
        }
        Ok(set)
    }

    pub fn is_empty(&self) -> bool {
        self.names().is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        let flags = [self.deg, self.ss1, self.nl3, self.cc, self.lp];
        Self::NAMES
            .iter()
            .zip(flags)
            .filter(|(_, on)| *on)
            .map(|(name, _)| *name)
            .collect()
    }

    pub fn needs_eigenpairs(&self) -> bool {
        self.nl3 || self.cc || self.lp
    }
}

impl FromStr for InvariantSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let names: Vec<&str> = s.split(',').filter(|p| !p.trim().is_empty()).collect();
        Self::from_names(&names)
    }
}

impl TryFrom<Vec<String>> for InvariantSet {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::from_names(&names)
    }
}

impl From<InvariantSet> for Vec<String> {
    fn from(set: InvariantSet) -> Self {
        set.names().into_iter().map(String::from).collect()
    }
}

impl fmt::Display for InvariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(","))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    #[default]
    Chained,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeConfig {
    pub which: InvariantSet,
    pub eigen: EigenOptions,
    /// Latent position dimension; `None` means `min(K, 100)`.
    pub lp_dim: Option<usize>,
    pub scale_mode: ScaleMode,
    pub mode: ExecutionMode,
}

impl ComputeConfig {
    pub fn new(which: InvariantSet) -> Self {
        ComputeConfig {
            which,
            eigen: EigenOptions::new(DEFAULT_EIGENPAIRS),
            lp_dim: None,
            scale_mode: ScaleMode::Scaled,
            mode: ExecutionMode::Chained,
        }
    }

    pub fn with_eigenpairs(mut self, k: usize) -> Self {
        self.eigen.k = k;
        self
    }

    pub fn with_mode(mut self, mode: ExecutionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn lp_dim(&self) -> usize {
        self.lp_dim.unwrap_or(self.eigen.k.min(100))
    }

    pub fn validate(&self) -> Result<()> {
        if self.which.is_empty() {
            return Err(Error::InvalidArgument("no invariants selected".into()));
        }
        if self.which.needs_eigenpairs() {
            if self.eigen.k == 0 {
                return Err(Error::InvalidArgument("eigenpair count must be at least 1".into()));
            }
            if self.which.lp && (self.lp_dim() == 0 || self.lp_dim() > self.eigen.k) {
                return Err(Error::InvalidArgument(format!(
                    "latent dimension {} must be between 1 and the eigenpair count {}",
                    self.lp_dim(),
                    self.eigen.k
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything computed for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantBundle {
    pub n: usize,
    pub m: usize,
    pub threshold: f64,
    pub lcc_applied: bool,
    pub mode: ExecutionMode,
    pub degree: Option<InvariantVector>,
    pub ss1: Option<InvariantVector>,
    pub nl3: Option<InvariantVector>,
    pub cc: Option<InvariantVector>,
    pub lp: Option<LatentPositionMatrix>,
    /// Number of eigenpairs actually computed (0 when none were needed).
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub eigensolver_runs: usize,
    pub timings: Vec<StageTiming>,
}

impl InvariantBundle {
    fn empty(g: &SparseGraph, mode: ExecutionMode) -> Self {
        InvariantBundle {
            n: g.n(),
            m: g.m(),
            threshold: 0.0,
            lcc_applied: false,
            mode,
            degree: None,
            ss1: None,
            nl3: None,
            cc: None,
            lp: None,
            k: 0,
            eigenvalues: Vec::new(),
            eigensolver_runs: 0,
            timings: Vec::new(),
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    pub fn timing(&self, stage: &str) -> Option<f64> {
        self.timings.iter().find(|t| t.stage == stage).map(|t| t.seconds)
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self)?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn eigenpairs(&mut self, g: &SparseGraph, opts: &EigenOptions) -> Result<EigenPairs> {
        let eigs = top_eigenpairs(g, opts)?;
        self.eigensolver_runs += 1;
        self.k = eigs.k();
        self.eigenvalues = eigs.values.clone();
        Ok(eigs)
    }
}

fn effective_lp_dim(config: &ComputeConfig, eigs: &EigenPairs) -> usize {
    let want = config.lp_dim();
    if want > eigs.k() {
        log::warn!(
            "latent dimension {want} exceeds the {} available eigenpairs; using {}",
            eigs.k(),
            eigs.k()
        );
    }
    want.min(eigs.k())
}

/// Compute the selected invariants of `g`.
pub fn compute_all(g: &SparseGraph, config: &ComputeConfig) -> Result<InvariantBundle> {
    config.validate()?;
    if g.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    match config.mode {
        ExecutionMode::Chained => chained(g, config),
        ExecutionMode::Independent => independent(g, config),
    }
}

fn chained(g: &SparseGraph, config: &ComputeConfig) -> Result<InvariantBundle> {
    let which = config.which;
    let mut bundle = InvariantBundle::empty(g, ExecutionMode::Chained);

    let deg = if which.deg || which.cc {
        Some(bundle.time("degree", |_| Ok(degree(g)))?)
    } else {
        None
    };
    if which.ss1 {
        bundle.ss1 = Some(bundle.time("ss1", |_| Ok(scan_statistic_1(g)))?);
    }
    let eigs = if which.needs_eigenpairs() {
        Some(bundle.time("eigen", |b| b.eigenpairs(g, &config.eigen))?)
    } else {
        None
    };
    let nl3 = match &eigs {
        Some(e) if which.nl3 || which.cc => {
            Some(bundle.time("nl3", |_| Ok(local_triangles_approx(e)))?)
        }
        _ => None,
    };
    if which.cc {
        let (d, t) = (deg.as_ref().unwrap(), nl3.as_ref().unwrap());
        bundle.cc = Some(bundle.time("cc", |_| clustering_coefficient(d, t))?);
    }
    if which.lp {
        let e = eigs.as_ref().unwrap();
        let dim = effective_lp_dim(config, e);
        bundle.lp = Some(bundle.time("lp", |_| latent_positions(e, dim, config.scale_mode))?);
    }
    if which.deg {
        bundle.degree = deg;
    }
    if which.nl3 {
        bundle.nl3 = nl3;
    }
    Ok(bundle)
}

/// Each invariant recomputes everything it depends on; its timing covers
/// the prerequisites too.
fn independent(g: &SparseGraph, config: &ComputeConfig) -> Result<InvariantBundle> {
    let which = config.which;
    let mut bundle = InvariantBundle::empty(g, ExecutionMode::Independent);
    if which.deg {
        bundle.degree = Some(bundle.time("degree", |_| Ok(degree(g)))?);
    }
    if which.ss1 {
        bundle.ss1 = Some(bundle.time("ss1", |_| Ok(scan_statistic_1(g)))?);
    }
    if which.nl3 {
        bundle.nl3 = Some(bundle.time("nl3", |b| {
            let e = b.eigenpairs(g, &config.eigen)?;
            Ok(local_triangles_approx(&e))
        })?);
    }
    if which.cc {
        bundle.cc = Some(bundle.time("cc", |b| {
            let d = degree(g);
            let e = b.eigenpairs(g, &config.eigen)?;
            clustering_coefficient(&d, &local_triangles_approx(&e))
        })?);
    }
    if which.lp {
        bundle.lp = Some(bundle.time("lp", |b| {
            let e = b.eigenpairs(g, &config.eigen)?;
            let dim = effective_lp_dim(config, &e);
            latent_positions(&e, dim, config.scale_mode)
        })?);
    }
    Ok(bundle)
}
