use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use glocal::bench::{compare_modes, BenchReport, ModeReport};
use glocal::eigen::{top_eigenpairs, EigenOptions};
use glocal::invariants::{local_triangles_approx, local_triangles_exact, scan_statistic_1};
use glocal::io::{self, FormatKind};
use glocal::oracle::{self, MAX_DENSE_SPECTRUM_N, MAX_ENUMERATION_N};
use glocal::pipeline::{self, OutputFormat, RunConfig};
use glocal::random;

use crate::{BenchArgs, ComputeArgs, ConvertArgs, GenerateArgs, GraphInput, InvariantFlags, LccArgs, ServeArgs, VerifyArgs};

/// An oracle comparison that should have been exact was not.
#[derive(Debug)]
pub struct Deviation(pub String);

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Deviation {}

fn input_format(graph: &GraphInput) -> Result<Option<FormatKind>> {
    if let Some(name) = &graph.format {
        return Ok(Some(name.parse()?));
    }
    Ok(match graph.input.extension().and_then(|e| e.to_str()) {
        Some("mtx") => Some(FormatKind::MatrixMarket),
        _ => None,
    })
}

fn run_config(graph: &GraphInput, flags: &InvariantFlags) -> Result<RunConfig> {
    Ok(RunConfig {
        input_format: input_format(graph)?,
        threshold: graph.threshold,
        lcc: graph.lcc,
        invariants: flags.invariants.parse()?,
        eigs: flags.eigs,
        lp_dim: flags.lp_dim,
        tol: flags.tol,
        max_iter: flags.max_iter,
        scale_mode: flags.scale_mode.parse()?,
        output_format: OutputFormat::Csv,
    })
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(graph: &GraphInput) -> Result<(glocal::graph::SparseGraph, Option<Vec<usize>>)> {
    let bytes = read_input(&graph.input)?;
    let (list, _) = pipeline::read_graph_bytes(&bytes, input_format(graph)?)
        .with_context(|| format!("parsing {}", graph.input.display()))?;
    Ok(pipeline::prepare_graph(&list, graph.threshold, graph.lcc)?)
}

pub fn compute(args: ComputeArgs) -> Result<()> {
    let mut config = run_config(&args.graph, &args.flags)?;
    config.output_format = args.output_format.parse()?;
    let bytes = read_input(&args.graph.input)?;
    let out = pipeline::run(&bytes, &config).with_context(|| format!("processing {}", args.graph.input.display()))?;
    let files = pipeline::write_outputs(&out, &config, &args.out)
        .with_context(|| format!("writing results to {}", args.out.display()))?;
    for note in &out.notes {
        log::warn!("{note}");
    }
    eprintln!(
        "n={} m={} K={} -> {} ({} files)",
        out.bundle.n,
        out.bundle.m,
        out.bundle.k,
        args.out.display(),
        files.len()
    );
    Ok(())
}

pub fn lcc(args: LccArgs) -> Result<()> {
    let bytes = read_input(&args.graph.input)?;
    let (list, _) = pipeline::read_graph_bytes(&bytes, input_format(&args.graph)?)?;
    let (g, map) = pipeline::prepare_graph(&list, args.graph.threshold, true)?;
    let map = map.expect("lcc requested");
    fs::create_dir_all(&args.out)?;
    pipeline::write_atomic(&args.out, "lcc.edges", |w| io::write_graph_edge_list(&g, w))?;
    pipeline::write_atomic(&args.out, "vertex_map.csv", |w| {
        writeln!(w, "vertex,original")?;
        for (v, old) in map.iter().enumerate() {
            writeln!(w, "{v},{old}")?;
        }
        Ok(())
    })?;
    eprintln!("kept {} of {} vertices, {} edges", g.n(), list.n, g.m());
    Ok(())
}

fn guess_format(path: &Path) -> Option<FormatKind> {
    match path.extension()?.to_str()? {
        "glcv" => Some(FormatKind::GlcvBinary),
        "csv" => Some(FormatKind::CsvInvariants),
        "mtx" => Some(FormatKind::MatrixMarket),
        "edges" | "el" | "txt" => Some(FormatKind::EdgeList),
        _ => None,
    }
}

fn format_arg(given: &Option<String>, path: &Path, which: &str) -> Result<FormatKind> {
    match given {
        Some(name) => Ok(name.parse()?),
        None => guess_format(path).ok_or_else(|| {
            glocal::Error::InvalidArgument(format!(
                "cannot tell the {which} format of {}; pass --{which}",
                path.display()
            ))
            .into()
        }),
    }
}

pub fn convert(args: ConvertArgs) -> Result<()> {
    let from = format_arg(&args.from, &args.input, "from")?;
    let to = format_arg(&args.to, &args.output, "to")?;
    let column = args.column.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("value")
            .to_string()
    });
    let bytes = read_input(&args.input)?;
    let out = io::convert(&bytes, from, to, &column)?;
    let dir = match args.output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = args
        .output
        .file_name()
        .and_then(|s| s.to_str())
        .context("output path has no file name")?;
    fs::create_dir_all(&dir)?;
    pipeline::write_atomic(&dir, name, |w| Ok(w.write_all(&out)?))?;
    Ok(())
}

fn print_mode(label: &str, m: &ModeReport) {
    println!("{label} ({} eigensolver runs)", m.eigensolver_runs);
    for s in &m.stages {
        println!("  {:<8} {:>10.4} s", s.stage, s.seconds);
    }
    println!("  {:<8} {:>10.4} s", "total", m.total_seconds);
}

fn print_report(r: &BenchReport) {
    println!("graph: n={} m={} K={} invariants={}", r.n, r.m, r.k, r.invariants.join(","));
    print_mode("independent", &r.independent);
    print_mode("chained", &r.chained);
    println!("outputs identical: yes");
    println!("chained/independent time ratio: {:.3}", r.ratio);
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let config = run_config(&args.graph, &args.flags)?;
    let (g, _) = load_graph(&args.graph)?;
    let report = compare_modes(&g, &config.compute_config())?;
    print_report(&report);
    if let Some(path) = &args.json {
        let json = serde_json::to_vec_pretty(&report)?;
        fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn max_abs_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn verify(args: VerifyArgs) -> Result<()> {
    let (g, _) = load_graph(&args.graph)?;
    if g.n() > MAX_ENUMERATION_N {
        return Err(glocal::Error::SizeGuard { n: g.n(), limit: MAX_ENUMERATION_N }.into());
    }
    println!("graph: n={} m={}", g.n(), g.m());
    let ss1 = max_abs_dev(&scan_statistic_1(&g).values, &oracle::brute_scan_statistic(&g)?.values);
    let exact_tri = oracle::brute_triangles(&g)?;
    let nl3 = max_abs_dev(&local_triangles_exact(&g).values, &exact_tri.values);
    println!("ss1         max |deviation| = {ss1:e}");
    println!("nl3_exact   max |deviation| = {nl3:e}");
    if g.n() <= MAX_DENSE_SPECTRUM_N && g.n() > 0 {
        let eigs = top_eigenpairs(&g, &EigenOptions::new(g.n()))?;
        let approx = max_abs_dev(&local_triangles_approx(&eigs).values, &exact_tri.values);
        let dense = oracle::dense_spectrum(&g)?;
        let spectrum = max_abs_dev(&eigs.values, &dense.values);
        println!("nl3_approx  max |deviation| = {approx:e}  (K = n)");
        println!("spectrum    max |deviation| = {spectrum:e}");
    } else {
        println!("nl3_approx  skipped: n > {MAX_DENSE_SPECTRUM_N}");
    }
    if ss1 != 0.0 || nl3 != 0.0 {
        return Err(Deviation(format!("exact invariants deviate from the oracle (ss1 {ss1}, nl3 {nl3})")).into());
    }
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let g = random::erdos_renyi(args.n, args.p, args.seed)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            io::write_graph_edge_list(&g, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            io::write_graph_edge_list(&g, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let mut config = glocal_service::ServiceConfig::from_env().map_err(anyhow::Error::msg)?;
    if let Some(addr) = args.addr {
        config.addr = addr;
    }
    if let Some(dir) = args.data_dir {
        config.data_dir = dir;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(m) = args.max_payload {
        config.max_payload = m;
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("serving on http://{} (data in {})", config.addr, config.data_dir.display());
    runtime.block_on(glocal_service::serve(config))?;
    Ok(())
}
