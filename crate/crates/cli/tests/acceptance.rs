//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use glocal::components::connected_components;
use glocal::eigen::{top_eigenpairs, EigenOptions};
use glocal::graph::{SparseGraph, WeightedEdgeList};
use glocal::invariants::{
    compute_all, degree, local_triangles_approx, local_triangles_exact, scan_statistic_1, ComputeConfig,
};
use glocal::io::{self, GlcvVector};
use glocal::oracle;
use glocal::pipeline;
use glocal::random::{erdos_renyi, erdos_renyi_edges, permutation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances.
const SPECTRAL_TRACE_TOL_PER_VERTEX: f64 = 1e-6;
const APPROX_FULL_SPECTRUM_TOL: f64 = 1e-6;
const DESK_SCALE_ACCURACY: f64 = 0.99;
const EIGENVALUE_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;
const PERMUTED_SPECTRUM_TOL: f64 = 1e-8;

// Corpus sizes.
const ORACLE_CORPUS: usize = 200;
const EIGEN_CORPUS: usize = 50;
const PERMUTATION_CORPUS: usize = 50;
const GLCV_VECTORS: usize = 1000;
const CSV_SAMPLES: usize = 200_000;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Seeded Erdős–Rényi corpus with `n ∈ [5, 200]`, `p ∈ [0, 0.5]`.
fn corpus(count: usize, seed: u64) -> Vec<SparseGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(5..=200);
            let p = rng.random_range(0.0..=0.5);
            erdos_renyi(n, p, seed * 1_000_003 + i as u64).unwrap()
        })
        .collect()
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let graphs = corpus(ORACLE_CORPUS, 1);
    let mut worst = 0.0f64;
    for (i, g) in graphs.iter().enumerate() {
        let ss1 = scan_statistic_1(g).values;
        let tri = local_triangles_exact(g).values;
        let ss1_ref = oracle::brute_scan_statistic(g).unwrap().values;
        let tri_ref = oracle::brute_triangles(g).unwrap().values;
        worst = worst.max(max_dev(&ss1, &ss1_ref)).max(max_dev(&tri, &tri_ref));
        check(ss1 == ss1_ref, || format!("graph {i}: ss1 differs from oracle"))?;
        check(tri == tri_ref, || format!("graph {i}: nl3_exact differs from oracle"))?;
    }
    Ok(format!("{ORACLE_CORPUS} graphs, max deviation {worst}"))
}

fn spectral_identity() -> Outcome {
    let graphs = corpus(ORACLE_CORPUS, 1);
    let (mut trace_worst, mut approx_worst) = (0.0f64, 0.0f64);
    for (i, g) in graphs.iter().filter(|g| g.n() <= 256).enumerate() {
        let n = g.n();
        let exact = local_triangles_exact(g).values;
        let total_triangles = exact.iter().sum::<f64>() / 3.0;
        let dense = oracle::dense_spectrum(g).unwrap();
        let cube_sum: f64 = dense.values.iter().map(|l| l.powi(3)).sum();
        let trace_dev = (cube_sum - 6.0 * total_triangles).abs();
        trace_worst = trace_worst.max(trace_dev / n as f64);
        check(trace_dev <= SPECTRAL_TRACE_TOL_PER_VERTEX * n as f64, || {
            format!("graph {i}: |Σλ³ − 6T| = {trace_dev:e}")
        })?;

        let eigs = top_eigenpairs(g, &EigenOptions::new(n)).map_err(|e| format!("graph {i}: {e}"))?;
        let dev = max_dev(&local_triangles_approx(&eigs).values, &exact);
        approx_worst = approx_worst.max(dev);
        check(dev <= APPROX_FULL_SPECTRUM_TOL, || format!("graph {i}: approx with K = n off by {dev:e}"))?;
    }
    Ok(format!(
        "max |Σλ³ − 6T|/n = {trace_worst:.3e}, max |approx − exact| (K = n) = {approx_worst:.3e}"
    ))
}

fn desk_scale_accuracy() -> Outcome {
    let start = Instant::now();
    let g = erdos_renyi(3000, 0.89, 3).unwrap();
    let eigs = top_eigenpairs(&g, &EigenOptions::new(1)).map_err(|e| e.to_string())?;
    let approx: f64 = local_triangles_approx(&eigs).sum();
    let exact: f64 = local_triangles_exact(&g).sum();
    let accuracy = 1.0 - (approx - exact).abs() / exact;
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "n=3000 m={} K=1: accuracy {accuracy:.5} (threshold {DESK_SCALE_ACCURACY}), {elapsed:.1} s",
        g.m()
    );
    check(accuracy >= DESK_SCALE_ACCURACY, || detail.clone())?;
    Ok(detail)
}

fn glocal_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glocal"))
}

fn run_bin(args: &[&str]) -> Result<std::process::Output, String> {
    let out = glocal_bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("glocal {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out)
}

fn daisy_chaining() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let graph = dir.path().join("g.edges");
    let report = dir.path().join("bench.json");
    let graph_s = graph.to_str().unwrap();
    run_bin(&["generate", "-n", "20000", "-p", "0.005", "--seed", "4", "--out", graph_s])?;
    // `bench` exits nonzero if the two modes disagree in any output.
    run_bin(&["bench", "--input", graph_s, "--eigs", "50", "--json", report.to_str().unwrap()])?;
    let r: serde_json::Value =
        serde_json::from_slice(&fs::read(&report).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let chained = r["chained"]["total_seconds"].as_f64().unwrap();
    let independent = r["independent"]["total_seconds"].as_f64().unwrap();
    let detail = format!(
        "m={}: chained {chained:.2} s vs independent {independent:.2} s, ratio {:.3}, outputs identical",
        r["m"], r["ratio"].as_f64().unwrap()
    );
    check(chained < independent, || detail.clone())?;
    Ok(detail)
}

fn eigensolver_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut value_worst, mut residual_worst) = (0.0f64, 0.0f64);
    for i in 0..EIGEN_CORPUS {
        let n = rng.random_range(5..=256);
        let p = rng.random_range(0.0..=0.5);
        let g = erdos_renyi(n, p, 500 + i as u64).unwrap();
        let k = n.min(10);
        let eigs = top_eigenpairs(&g, &EigenOptions::new(k)).map_err(|e| format!("graph {i}: {e}"))?;
        let dense = oracle::dense_spectrum(&g).unwrap();
        let dev = max_dev(&eigs.values, &dense.values[..k]);
        value_worst = value_worst.max(dev);
        check(dev <= EIGENVALUE_TOL, || format!("graph {i} (n={n}): eigenvalues off by {dev:e}"))?;
        let bound = RESIDUAL_TOL * eigs.values[0].abs().max(1.0);
        for (j, &r) in eigs.residuals.iter().enumerate() {
            residual_worst = residual_worst.max(r / eigs.values[0].abs().max(1.0));
            check(r <= bound, || format!("graph {i}: residual {j} = {r:e} > {bound:e}"))?;
        }
    }
    Ok(format!(
        "{EIGEN_CORPUS} graphs, max |λ − λ_dense| = {value_worst:.3e}, max relative residual {residual_worst:.3e}"
    ))
}

fn permutation_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut spec_worst = 0.0f64;
    for i in 0..PERMUTATION_CORPUS {
        let n = rng.random_range(5..=200);
        let p = rng.random_range(0.0..=0.5);
        let g = erdos_renyi(n, p, 900 + i as u64).unwrap();
        let pi = permutation(n, 1900 + i as u64);
        let h = g.permute(&pi).unwrap();
        let pairs = [
            ("deg", degree(&g).values, degree(&h).values),
            ("ss1", scan_statistic_1(&g).values, scan_statistic_1(&h).values),
            ("nl3_exact", local_triangles_exact(&g).values, local_triangles_exact(&h).values),
        ];
        for (name, fg, fh) in pairs {
            for v in 0..n {
                check(fh[pi[v]] == fg[v], || format!("graph {i}: {name} not equivariant at vertex {v}"))?;
            }
        }
        let k = n.min(10);
        let mut a = top_eigenpairs(&g, &EigenOptions::new(k)).map_err(|e| e.to_string())?.values;
        let mut b = top_eigenpairs(&h, &EigenOptions::new(k)).map_err(|e| e.to_string())?.values;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let dev = max_dev(&a, &b);
        spec_worst = spec_worst.max(dev);
        check(dev <= PERMUTED_SPECTRUM_TOL, || format!("graph {i}: eigenvalues differ by {dev:e}"))?;
    }
    Ok(format!(
        "{PERMUTATION_CORPUS} (graph, permutation) pairs exact for deg/ss1/nl3_exact, max eigenvalue deviation {spec_worst:.3e}"
    ))
}

/// A connected giant on `giant` vertices (random tree plus random extra
/// edges), small components and isolates, then shuffled labels. Returns
/// the graph and the giant's vertex ids.
fn planted(seed: u64, giant: usize, small: &[usize], isolates: usize) -> (SparseGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = giant + small.iter().sum::<usize>() + isolates;
    let label = permutation(n, seed + 1);
    let mut edges = Vec::new();
    for v in 1..giant {
        edges.push((label[v], label[rng.random_range(0..v)]));
    }
    for (u, v) in erdos_renyi_edges(giant, 0.05, seed + 2).unwrap() {
        edges.push((label[u], label[v]));
    }
    let mut offset = giant;
    for &size in small {
        for v in 1..size {
            edges.push((label[offset + v], label[offset + rng.random_range(0..v)]));
        }
        offset += size;
    }
    let mut members: Vec<usize> = label[..giant].to_vec();
    members.sort_unstable();
    (SparseGraph::from_edges(n, &edges).unwrap(), members)
}

fn lcc_pipeline() -> Outcome {
    let config = ComputeConfig::new("deg,ss1,nl3,cc".parse().unwrap()).with_eigenpairs(6);
    for case in 0..10u64 {
        let (g, giant) = planted(70 + case, 120 + 5 * case as usize, &[30, 7, 2], 25);
        let list = WeightedEdgeList {
            n: g.n(),
            edges: g.edges().map(|(u, v)| (u, v, 1.0)).collect(),
        };
        let (lcc, map) = pipeline::prepare_graph(&list, 0.0, true).map_err(|e| e.to_string())?;
        let map = map.unwrap();
        check(connected_components(&lcc).count() == 1, || format!("case {case}: LCC not connected"))?;
        check(map == giant, || format!("case {case}: LCC is not the planted giant"))?;

        // Giant built directly from its own edge list, independent of the
        // component code.
        let rank: BTreeMap<usize, usize> = giant.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let direct_edges: Vec<(usize, usize)> = g
            .edges()
            .filter_map(|(u, v)| Some((*rank.get(&u)?, *rank.get(&v)?)))
            .collect();
        let direct = SparseGraph::from_edges(giant.len(), &direct_edges).unwrap();
        let a = compute_all(&lcc, &config).map_err(|e| e.to_string())?;
        let b = compute_all(&direct, &config).map_err(|e| e.to_string())?;
        check(a.degree == b.degree && a.ss1 == b.ss1 && a.nl3 == b.nl3 && a.cc == b.cc, || {
            format!("case {case}: invariants on LCC differ from the giant")
        })?;
        check(local_triangles_exact(&lcc) == local_triangles_exact(&direct), || {
            format!("case {case}: exact triangles differ")
        })?;
    }
    // Equal-size largest components: the one holding the smallest vertex id wins.
    let tie = SparseGraph::from_edges(7, &[(5, 6), (6, 4), (0, 3), (3, 1), (2, 2)]).unwrap();
    let list = WeightedEdgeList { n: 7, edges: tie.edges().map(|(u, v)| (u, v, 1.0)).collect() };
    let (_, map) = pipeline::prepare_graph(&list, 0.0, true).map_err(|e| e.to_string())?;
    check(map.as_deref() == Some(&[0, 1, 3][..]), || format!("tie-break picked {map:?}"))?;
    Ok("10 planted graphs: LCC connected, equals the giant, invariants match; tie-break ok".into())
}

fn edge_list_text(g: &SparseGraph, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = g
        .edges()
        .map(|(u, v)| if rng.random() { format!("{u} {v}") } else { format!("{v} {u}") })
        .collect();
    lines.shuffle(rng);
    format!("%n {}\n# shuffled\n{}\n", g.n(), lines.join("\n"))
}

fn matrix_market_text(g: &SparseGraph, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = g.edges().map(|(u, v)| format!("{} {} 1", v + 1, u + 1)).collect();
    lines.shuffle(rng);
    format!(
        "%%MatrixMarket matrix coordinate real symmetric\n% shuffled\n{} {} {}\n{}\n",
        g.n(),
        g.n(),
        lines.len(),
        lines.join("\n")
    )
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..GLCV_VECTORS {
        let len = rng.random_range(0..200);
        let bits: Vec<u64> = (0..len).map(|_| rng.random()).collect();
        let v = if rng.random() {
            GlcvVector::F64(bits.iter().map(|&b| f64::from_bits(b)).collect())
        } else {
            GlcvVector::U64(bits.clone())
        };
        let mut buf = Vec::new();
        io::write_glcv(&v, &mut buf).map_err(|e| e.to_string())?;
        let back = io::read_glcv(buf.as_slice()).map_err(|e| e.to_string())?;
        let back_bits: Vec<u64> = match back {
            GlcvVector::F64(x) => x.iter().map(|f| f.to_bits()).collect(),
            GlcvVector::U64(x) => x,
        };
        check(back_bits == bits && buf.len() == 20 + 8 * len, || format!("GLCV vector {i} did not round-trip"))?;
    }

    let specials = [0.0, -0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, f64::MIN, f64::EPSILON, 0.1, 1.0 / 3.0];
    let samples = specials
        .iter()
        .copied()
        .chain((0..CSV_SAMPLES).map(|_| f64::from_bits(rng.random())))
        .filter(|x| x.is_finite());
    let mut tested = 0;
    for x in samples {
        let s = io::render_real(x);
        let back: f64 = s.parse().map_err(|_| format!("'{s}' does not parse"))?;
        check(back.to_bits() == x.to_bits(), || format!("{x:e} rendered as '{s}'"))?;
        tested += 1;
    }

    for i in 0..50u64 {
        let n = rng.random_range(1..=150);
        let g = erdos_renyi(n, rng.random_range(0.0..=0.3), 3000 + i).unwrap();
        let el = io::read_edge_list(edge_list_text(&g, &mut rng).as_bytes()).map_err(|e| e.to_string())?;
        let mm = io::read_matrix_market(matrix_market_text(&g, &mut rng).as_bytes()).map_err(|e| e.to_string())?;
        let a = SparseGraph::build(&el, 0.0).map_err(|e| e.to_string())?;
        let b = SparseGraph::build(&mm, 0.0).map_err(|e| e.to_string())?;
        check(a == b && a == g, || format!("graph {i}: edge list and Matrix Market builds differ"))?;
    }
    Ok(format!(
        "{GLCV_VECTORS} GLCV vectors bit-exact, {tested} reals round-trip, 50 graphs build identically from both formats"
    ))
}

async fn poll_until_terminal(client: &reqwest::Client, url: &str) -> Result<(String, Vec<String>), String> {
    let mut seen: Vec<String> = Vec::new();
    let deadline = Instant::now() + Duration::from_secs(120);
    loop {
        let body = client.get(url).send().await.map_err(|e| e.to_string())?.bytes().await.map_err(|e| e.to_string())?;
        let record: serde_json::Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        let state = record["state"].as_str().unwrap_or_default().to_string();
        if seen.last() != Some(&state) {
            seen.push(state.clone());
        }
        if state == "done" || state == "failed" {
            return Ok((state, seen));
        }
        if Instant::now() > deadline {
            return Err("job did not finish in time".into());
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

fn forward_only(states: &[String]) -> bool {
    let rank = |s: &str| match s {
        "queued" => 0,
        "running" => 1,
        "done" | "failed" => 2,
        _ => 99,
    };
    states.windows(2).all(|w| rank(&w[0]) < rank(&w[1])) && states.iter().all(|s| rank(s) < 99)
}

fn untar(bytes: &[u8]) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut archive = tar::Archive::new(bytes);
    let mut files = BTreeMap::new();
    for entry in archive.entries().map_err(|e| e.to_string())? {
        let mut entry = entry.map_err(|e| e.to_string())?;
        let name = entry.path().map_err(|e| e.to_string())?.to_string_lossy().into_owned();
        let mut data = Vec::new();
        std::io::Read::read_to_end(&mut entry, &mut data).map_err(|e| e.to_string())?;
        files.insert(name, data);
    }
    Ok(files)
}

fn read_dir_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        files.insert(name, fs::read(entry.path()).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn service_parity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let graph_path = dir.path().join("g.edges");
    let g = erdos_renyi(400, 0.04, 9).unwrap();
    let mut payload = Vec::new();
    io::write_graph_edge_list(&g, &mut payload).unwrap();
    fs::write(&graph_path, &payload).map_err(|e| e.to_string())?;
    let config = r#"{"invariants":["deg","ss1","nl3","cc","lp"],"eigs":12,"lcc":true}"#;

    let cli_out = dir.path().join("cli");
    run_bin(&[
        "compute", "--input", graph_path.to_str().unwrap(), "--invariants", "deg,ss1,nl3,cc,lp",
        "--eigs", "12", "--lcc", "--out", cli_out.to_str().unwrap(),
    ])?;

    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let data_dir = dir.path().join("service");
    runtime.block_on(async move {
        let service = glocal_service::spawn(glocal_service::ServiceConfig {
            addr: "127.0.0.1:0".parse().unwrap(),
            data_dir,
            workers: 1,
            max_payload: 64 << 20,
        })
        .await
        .map_err(|e| e.to_string())?;
        let base = format!("http://{}", service.addr);
        let client = reqwest::Client::new();
        let form = reqwest::multipart::Form::new()
            .part("graph", reqwest::multipart::Part::bytes(payload).file_name("g.edges"))
            .text("config", config);
        let resp = client.post(format!("{base}/api/v1/jobs")).multipart(form).send().await.map_err(|e| e.to_string())?;
        check(resp.status() == 202, || format!("submit returned {}", resp.status()))?;
        let record: serde_json::Value = serde_json::from_slice(&resp.bytes().await.map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let id = record["id"].as_str().unwrap().to_string();
        let (state, seen) = poll_until_terminal(&client, &format!("{base}/api/v1/jobs/{id}")).await?;
        check(state == "done", || format!("job ended {state}"))?;
        check(forward_only(&seen), || format!("observed states {seen:?}"))?;

        let status: serde_json::Value = serde_json::from_slice(
            &client.get(format!("{base}/api/v1/jobs/{id}")).send().await.map_err(|e| e.to_string())?.bytes().await.map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let history: Vec<String> = status["history"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect();
        check(history == ["queued", "running", "done"], || format!("history {history:?}"))?;

        let tar = client.get(format!("{base}/api/v1/jobs/{id}/result")).send().await.map_err(|e| e.to_string())?;
        let service_files = untar(&tar.bytes().await.map_err(|e| e.to_string())?)?;
        let cli_files = read_dir_files(&cli_out)?;
        let names: Vec<&String> = cli_files.keys().collect();
        check(names == service_files.keys().collect::<Vec<_>>(), || {
            format!("file sets differ: cli {names:?} vs service {:?}", service_files.keys().collect::<Vec<_>>())
        })?;
        let mut compared = 0;
        for (name, bytes) in &cli_files {
            if name == pipeline::TIMINGS_FILE {
                continue;
            }
            check(service_files[name] == *bytes, || format!("{name} differs between CLI and service"))?;
            compared += 1;
        }
        service.handle.abort();
        Ok(format!(
            "{compared} result files byte-identical (timings.json excluded: wall clock), states {seen:?}"
        ))
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence (exact invariants)", oracle_equivalence),
        ("spectral identity", spectral_identity),
        ("desk-scale NL-3 accuracy with K = 1", desk_scale_accuracy),
        ("daisy-chaining", daisy_chaining),
        ("eigensolver correctness", eigensolver_correctness),
        ("permutation equivariance", permutation_equivariance),
        ("LCC pipeline", lcc_pipeline),
        ("format round trips", format_round_trips),
        ("service parity", service_parity),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
