//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1 to 5 need the Bitcoin-Alpha and Bitcoin-OTC edge lists under
//! `$ASGL_DATA_DIR` (or `data/` at the workspace root); see
//! `scripts/fetch_datasets.sh`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;

use asgl::accountant::{default_orders, hypergeom_pmf, rdp_per_iteration, rdp_to_dp};
use asgl::dp::{empirical_sensitivity_check, sensitivity};
use asgl::eval::{link_stealing_attack, logistic_loss_and_grad, planted_signed_graph, run_sign_prediction, ssi};
use asgl::graph::{load_edge_list, split_edges, WeightRule};
use asgl::model::{disc_batch_grad, gen_grad, gen_surrogate, EdgeCase, TaggedEdge};
use asgl::rng::{stream, Domain, StreamRng};
use asgl::sampler::{receptive_field, sample_subgraphs, SamplerConfig};
use asgl::trainer::{train, TrainConfig};
use asgl::{Embeddings, Sign, SignedGraph};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const TEST_FRACTION: f64 = 0.2;
const FD_REL_TOL: f64 = 1e-5;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { pass: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, detail: detail.into() }
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(index: u64) -> StreamRng {
    stream(0x00AC_CE97, Domain::Eval, index)
}

fn random_table(rng: &mut StreamRng, n: usize, k: usize) -> Embeddings {
    let rows = (0..n).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    Embeddings::from_rows(rows).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` over every entry of `table`.
fn fd_table(table: &Embeddings, f: impl Fn(&Embeddings) -> f64) -> Vec<f64> {
    let h = 1e-5;
    let mut t = table.clone();
    (0..table.as_slice().len())
        .map(|idx| {
            let x = t.as_slice()[idx];
            t.as_mut_slice()[idx] = x + h;
            let up = f(&t);
            t.as_mut_slice()[idx] = x - h;
            let down = f(&t);
            t.as_mut_slice()[idx] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dense(grad: &asgl::model::SparseGrad<f64>, n: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * k];
    for (v, row) in grad.iter() {
        out[v * k..(v + 1) * k].copy_from_slice(row);
    }
    out
}

fn data_dir() -> PathBuf {
    std::env::var_os("ASGL_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn dataset(name: &str) -> Result<SignedGraph, String> {
    let path = data_dir().join(name);
    let file = File::open(&path).map_err(|e| format!("dataset not found: {} ({e})", path.display()))?;
    load_edge_list(BufReader::new(file), WeightRule::Sign)
        .map(|l| l.graph)
        .map_err(|e| format!("{}: {e}", path.display()))
}

const ALPHA: &str = "soc-sign-bitcoinalpha.csv";
const OTC: &str = "soc-sign-bitcoinotc.csv";

fn reference_config(epsilon: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        epsilon,
        delta: 1e-5,
        clip: 1.0,
        paths_n: 3,
        path_len_l: 4,
        dim: 128,
        n_iter: 10,
        seed,
        ..TrainConfig::default()
    }
}

fn mean_auc(g: &SignedGraph, cfg: impl Fn(u64) -> TrainConfig) -> Result<f64, String> {
    let mut total = 0.0;
    for &seed in &SEEDS {
        let (auc, _) = run_sign_prediction(g, &cfg(seed), TEST_FRACTION, seed).map_err(|e| e.to_string())?;
        total += auc;
    }
    Ok(total / SEEDS.len() as f64)
}

fn criterion_1() -> Outcome {
    let g = match dataset(ALPHA) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    match mean_auc(&g, |s| reference_config(3.0, s)) {
        Ok(auc) => check((auc - 0.8589).abs() <= 0.04, format!("mean AUC {auc:.4} vs 0.8589 ± 0.04")),
        Err(e) => fail(e),
    }
}

fn criterion_2() -> Outcome {
    let grid = [1.0, 2.0, 3.0, 4.0, 6.0];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, at_one) in [(ALPHA, 0.7505), (OTC, 0.8004)] {
        let g = match dataset(name) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let mut aucs = Vec::new();
        for &eps in &grid {
            match mean_auc(&g, |s| reference_config(eps, s)) {
                Ok(a) => aucs.push(a),
                Err(e) => return fail(e),
            }
        }
        ok &= aucs.windows(2).all(|w| w[1] > w[0]);
        ok &= (aucs[0] - at_one).abs() <= 0.06;
        details.push(format!("{name}: {aucs:.4?}"));
    }
    check(ok, details.join("; "))
}

fn criterion_3() -> Outcome {
    let g = match dataset(ALPHA) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let at =
        |n: usize, l: usize| mean_auc(&g, |s| TrainConfig { paths_n: n, path_len_l: l, ..reference_config(3.0, s) });
    let run = || -> Result<(f64, f64, f64, f64), String> { Ok((at(3, 3)?, at(2, 3)?, at(3, 4)?, at(3, 1)?)) };
    match run() {
        Ok((n3, n2, l4, l1)) => check(
            n3 - n2 >= 0.03 && l4 - l1 >= 0.08,
            format!("N3-N2 = {:.4} (>= 0.03), L4-L1 = {:.4} (>= 0.08)", n3 - n2, l4 - l1),
        ),
        Err(e) => fail(e),
    }
}

fn criterion_4() -> Outcome {
    let g = match dataset(OTC) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let mut total = 0.0;
    for &seed in &SEEDS {
        let res = split_edges(&g, TEST_FRACTION, seed)
            .and_then(|split| Ok((train::<f64>(&split.train_graph, &reference_config(4.0, seed))?, split)))
            .and_then(|(out, split)| ssi(&out.theta_g, &split.test_edges));
        match res {
            Ok(r) => total += r.ssi,
            Err(e) => return fail(e.to_string()),
        }
    }
    let mean = total / SEEDS.len() as f64;
    check((mean - 0.7713).abs() <= 0.08, format!("mean SSI {mean:.4} vs 0.7713 ± 0.08"))
}

fn criterion_5() -> Outcome {
    let g = match dataset(ALPHA) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let mut total = 0.0;
    for &seed in &SEEDS {
        let res =
            link_stealing_attack(&g, seed, |members| Ok(train::<f64>(members, &reference_config(3.0, seed))?.theta_g));
        match res {
            Ok(a) => total += a,
            Err(e) => return fail(e.to_string()),
        }
    }
    let mean = total / SEEDS.len() as f64;
    check(mean <= 0.60, format!("mean attack AUC {mean:.4} (<= 0.60)"))
}

fn criterion_6() -> Outcome {
    if sensitivity(3, 4, 1.0) != 121.0 {
        return fail(format!("sensitivity(3,4,1) = {}", sensitivity(3, 4, 1.0)));
    }
    let configs = [(3, 4), (2, 2), (2, 3), (3, 2), (4, 2)];
    let mut worst = 0.0f64;
    let graphs = 200;
    for t in 0..graphs {
        let mut r = rng(6_000 + t);
        let n = r.random_range(5..=50usize);
        let m = r.random_range(n..=(3 * n).min(n * (n - 1) / 2));
        let g = planted_signed_graph(n, m, 0.7, 0.1, t).unwrap();
        let (paths_n, path_len_l) = configs[t as usize % configs.len()];
        let clip_c = if t % 2 == 0 { 1.0 } else { 0.5 };
        let theta_g = random_table(&mut r, n, 8);
        let theta_d = random_table(&mut r, n, 8);
        let removed = r.random_range(0..n);
        let cfg = SamplerConfig { paths_n, path_len_l };
        let rep = empirical_sensitivity_check(&g, removed, cfg, clip_c, &theta_g, &theta_d, t).unwrap();
        let bound = sensitivity(paths_n, path_len_l, clip_c);
        let ratio = rep.max() / bound;
        worst = worst.max(ratio);
        if rep.max() > bound {
            return fail(format!("graph {t}: deviation {} > bound {bound} (N={paths_n}, L={path_len_l})", rep.max()));
        }
    }
    pass(format!("{graphs} graphs, worst deviation/bound {worst:.4}; sensitivity(3,4,1) = 121"))
}

fn criterion_7() -> Outcome {
    let (n, k) = (6, 8);
    let cases = [EdgeCase::RealPos, EdgeCase::FakePos, EdgeCase::RealNeg, EdgeCase::FakeNeg];
    let mut worst = [0.0f64; 6];
    for inst in 0..100u64 {
        let mut r = rng(7_000 + inst);
        let theta_d = random_table(&mut r, n, k);
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        for (slot, &case) in cases.iter().enumerate() {
            let batch = [TaggedEdge::new(i, j, case)];
            let analytic = dense(&disc_batch_grad(&batch, &theta_d), n, k);
            let numeric = fd_table(&theta_d, |t| case.disc_log_term(t.inner(i, j)));
            worst[slot] = worst[slot].max(rel_err(&analytic, &numeric));
        }

        let theta_g = random_table(&mut r, n, k);
        let batch: Vec<TaggedEdge> = (0..5)
            .map(|_| {
                let a = r.random_range(0..n);
                let b = (a + r.random_range(1..n)) % n;
                let case = if r.random_bool(0.5) { EdgeCase::FakePos } else { EdgeCase::FakeNeg };
                TaggedEdge::new(a, b, case)
            })
            .collect();
        let analytic = dense(&gen_grad(&batch, &theta_g, &theta_d).unwrap(), n, k);
        let numeric = fd_table(&theta_g, |t| gen_surrogate(&batch, t, &theta_d));
        worst[4] = worst[4].max(rel_err(&analytic, &numeric));

        let (rows, dim) = (20, 5);
        let x: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..rows).map(|_| r.random_bool(0.5)).collect();
        let mut params: Vec<f64> = (0..=dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let (_, gw, gb) = logistic_loss_and_grad(&params[..dim], params[dim], &x, &y, 1e-4);
        let analytic: Vec<f64> = gw.into_iter().chain([gb]).collect();
        let h = 1e-5;
        let numeric: Vec<f64> = (0..=dim)
            .map(|p| {
                let x0 = params[p];
                params[p] = x0 + h;
                let up = logistic_loss_and_grad(&params[..dim], params[dim], &x, &y, 1e-4).0;
                params[p] = x0 - h;
                let down = logistic_loss_and_grad(&params[..dim], params[dim], &x, &y, 1e-4).0;
                params[p] = x0;
                (up - down) / (2.0 * h)
            })
            .collect();
        worst[5] = worst[5].max(rel_err(&analytic, &numeric));
    }
    let names = ["real+", "fake+", "real-", "fake-", "generator", "logistic"];
    let detail = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect::<Vec<_>>().join(", ");
    check(worst.iter().all(|&w| w < FD_REL_TOL), format!("worst relative error: {detail}"))
}

/// Brute-force conversion on its own: every order, no shortcuts.
fn brute_force_epsilon(orders: &[f64], rdp: &[f64], delta: f64) -> f64 {
    let mut best = f64::INFINITY;
    for idx in 0..orders.len() {
        let candidate = rdp[idx] - delta.ln() / (orders[idx] - 1.0);
        if candidate < best {
            best = candidate;
        }
    }
    best
}

fn criterion_8() -> Outcome {
    let mut worst_sum = 0.0f64;
    for t in 0..100u64 {
        let mut r = rng(8_000 + t);
        let pop = r.random_range(1..5_000u64);
        let succ = r.random_range(0..=pop.min(500));
        let draws = r.random_range(0..=pop.min(1_000));
        let lo = draws.saturating_sub(pop - succ);
        let hi = succ.min(draws);
        let total: f64 = (lo..=hi).map(|i| hypergeom_pmf(pop, succ, draws, i).unwrap()).sum();
        worst_sum = worst_sum.max((total - 1.0).abs());
    }
    let mut worst_full = 0.0f64;
    for &alpha in &default_orders() {
        for &sigma in &[0.5, 1.0, 2.0, 5.0, 10.0] {
            let g = rdp_per_iteration(alpha, sigma, 300, 121, 300).unwrap();
            let expected = alpha / (2.0 * sigma * sigma);
            worst_full = worst_full.max((g - expected).abs());
        }
    }
    let mut worst_conv = 0.0f64;
    let orders: Vec<f64> = (0..2_000).map(|i| 1.01 + i as f64 * 0.05).collect();
    for t in 0..100u64 {
        let mut r = rng(8_500 + t);
        let sigma = r.random_range(0.5..10.0);
        let steps = r.random_range(1..2_000) as f64;
        let delta = 10f64.powf(-r.random_range(3.0..9.0));
        let rdp: Vec<f64> = orders.iter().map(|a| steps * a / (2.0 * sigma * sigma)).collect();
        let (eps, _) = rdp_to_dp(&orders, &rdp, delta).unwrap();
        worst_conv = worst_conv.max((eps - brute_force_epsilon(&orders, &rdp, delta)).abs());
    }
    check(
        worst_sum <= 1e-9 && worst_full <= 1e-10 && worst_conv <= 1e-9,
        format!("|Σβ − 1| <= {worst_sum:.1e}, full-batch error {worst_full:.1e}, conversion error {worst_conv:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let configs = [(1, 1), (2, 2), (3, 4), (2, 5), (4, 3)];
    let mut checked_paths = 0usize;
    for t in 0..100u64 {
        let mut r = rng(9_000 + t);
        let n = r.random_range(5..=200usize);
        let m = r.random_range(n..=(4 * n).min(n * (n - 1) / 2));
        let g = planted_signed_graph(n, m, 0.7, 0.1, t).unwrap();
        let (paths_n, path_len_l) = configs[t as usize % configs.len()];
        let cfg = SamplerConfig { paths_n, path_len_l };
        let theta_g = random_table(&mut r, n, 8);
        let nodes: Vec<usize> = (0..n).collect();
        let s = sample_subgraphs(&g, &nodes, cfg, &theta_g, t).unwrap();
        let cap = receptive_field(paths_n, path_len_l);
        for sign in Sign::BOTH {
            let sub = s.get(sign);
            for (root, paths) in &sub.paths {
                if paths.len() > paths_n {
                    return fail(format!("graph {t}: root {root} has {} {sign:?} paths > N={paths_n}", paths.len()));
                }
                for p in paths {
                    checked_paths += 1;
                    if p.len() > path_len_l {
                        return fail(format!("graph {t}: path of {} hops > L={path_len_l}", p.len()));
                    }
                }
            }
            if let Some((v, c)) = sub.occurrence_counts(n).into_iter().enumerate().find(|&(_, c)| c > cap) {
                return fail(format!("graph {t}: node {v} occurs in {c} {sign:?} subgraphs > R={cap}"));
            }
        }
    }
    pass(format!("100 graphs, {checked_paths} paths within N, L and R"))
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_asgl"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ASGL_DATA_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("asgl {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let g = planted_signed_graph(400, 2_500, 0.8, 0.05, 10).unwrap();
    let mut edges = Vec::new();
    g.write_edge_list(&mut edges).unwrap();
    std::fs::write(tmp.path().join("g.txt"), edges).unwrap();
    let train = ["train", "--graph", "g.txt", "--seed", "7", "--epochs", "5", "--dim", "16", "--out", "runs"];
    let eval = |run: &str| {
        vec!["eval", "--run", run, "--tasks", "sign,cluster", "--out", "evals"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let steps = || -> Result<(), String> {
        run_cli(&train, tmp.path())?;
        run_cli(&train, tmp.path())?;
        for run in ["runs/run-0000", "runs/run-0001"] {
            let args = eval(run);
            run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>(), tmp.path())?;
        }
        Ok(())
    };
    if let Err(e) = steps() {
        return fail(e);
    }
    let same = |a: &str, b: &str| {
        std::fs::read(tmp.path().join(a)).ok() == std::fs::read(tmp.path().join(b)).ok() && tmp.path().join(a).exists()
    };
    let files = [
        ("runs/run-0000/embeddings.txt", "runs/run-0001/embeddings.txt"),
        ("runs/run-0000/train_report.json", "runs/run-0001/train_report.json"),
        ("runs/run-0000/ledger.tsv", "runs/run-0001/ledger.tsv"),
        ("runs/run-0000/test_edges.txt", "runs/run-0001/test_edges.txt"),
        ("evals/run-0000/eval.jsonl", "evals/run-0001/eval.jsonl"),
    ];
    let differing: Vec<&str> = files.iter().filter(|(a, b)| !same(a, b)).map(|(a, _)| *a).collect();
    check(
        differing.is_empty(),
        if differing.is_empty() {
            "embeddings, reports, ledger, split and evaluation byte-identical across reruns".into()
        } else {
            format!("differ: {differing:?}")
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Bitcoin-Alpha AUC at epsilon 3", criterion_1),
        ("privacy-utility monotonicity", criterion_2),
        ("parameter-study shape", criterion_3),
        ("Bitcoin-OTC SSI at epsilon 4", criterion_4),
        ("link-stealing resistance", criterion_5),
        ("sensitivity oracle", criterion_6),
        ("gradient correctness", criterion_7),
        ("accountant oracle", criterion_8),
        ("sampler constraints", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (idx, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, idx + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
