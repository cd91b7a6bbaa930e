use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use kikuchi::circuits::dicke::{dicke_prep, dicke_resource_formula};
use kikuchi::circuits::oracles::{adjacency_check, p_gadget, p_gadget_closed_depth, P_COUNTER_BITS};
use kikuchi::circuits::qsp::{random_phases, rounding_sweep};
use kikuchi::circuits::{block_encoding_check, check_dicke, check_shuffle, oh_term_cost};
use kikuchi::combinatorics::{binom_f64, kikuchi_stats};
use kikuchi::kikuchi::KikuchiOperator;
use kikuchi::model::{sample_planted, sample_random, sample_simple, ProblemParams, SparseSignedTensor, SpikeVector};
use kikuchi::recovery::{fig2_experiment, recover as run_recovery};
use kikuchi::resources::{emit_table1, estimate as run_estimate, table1_markdown, TABLE1_N};
use kikuchi::spectral::{detect as run_detect, DetectConfig, EigOptions, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Precision, RunConfig, SampleModel};

pub enum Status {
    Ok,
    Inconclusive,
    Failed,
}

fn emit(cfg: &RunConfig, body: &str) -> Result<()> {
    match &cfg.out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

/// `# kikuchi <cmd>` and `# config <json>` lines ahead of a text body.
fn with_header(cfg: &RunConfig, command: &str, body: &str) -> String {
    format!("# kikuchi {command} {}\n# config {}\n{body}", env!("CARGO_PKG_VERSION"), cfg.header_json())
}

fn emit_json<T: Serialize>(cfg: &RunConfig, command: &str, result: &T) -> Result<()> {
    let doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "result": result,
    });
    emit(cfg, &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn draw(cfg: &RunConfig) -> Result<(SparseSignedTensor, SpikeVector)> {
    let p: ProblemParams = cfg.problem.params(cfg.seed);
    Ok(match cfg.problem.model {
        SampleModel::Planted => sample_planted(&p)?,
        SampleModel::Simple => sample_simple(&p)?,
        SampleModel::Random => {
            let t = sample_random(&p)?;
            // the spike stream is shared with the planted sampler
            let (_, z) = sample_planted(&ProblemParams { m_target: 0.0, ..p })?;
            (t, z)
        }
    })
}

fn parse_spike(text: &str) -> Result<Option<SpikeVector>> {
    let Some(line) = text.lines().find_map(|l| l.strip_prefix("# spike ")) else {
        return Ok(None);
    };
    let v: Vec<i8> = line.split_whitespace().map(|t| t.parse::<i8>()).collect::<std::result::Result<_, _>>().context("bad spike line")?;
    if v.iter().any(|&x| x != 1 && x != -1) {
        bail!("spike entries must be ±1");
    }
    Ok(Some(SpikeVector::new(v)))
}

/// The tensor from `problem.input`, else a fresh draw; with the spike when known.
fn instance(cfg: &RunConfig) -> Result<(SparseSignedTensor, Option<SpikeVector>)> {
    match &cfg.problem.input {
        Some(path) => {
            let t = SparseSignedTensor::load(path).with_context(|| format!("loading {}", path.display()))?;
            let z = if path.extension().is_some_and(|e| e == "json") {
                None
            } else {
                parse_spike(&std::fs::read_to_string(path)?)?
            };
            if z.as_ref().is_some_and(|z| z.len() != t.n) {
                bail!("spike length does not match n = {}", t.n);
            }
            Ok((t, z))
        }
        None => {
            let (t, z) = draw(cfg)?;
            Ok((t, Some(z)))
        }
    }
}

pub fn sample(cfg: &RunConfig) -> Result<Status> {
    let (t, z) = draw(cfg)?;
    let spike: Vec<String> = z.values.iter().map(|v| v.to_string()).collect();
    let body = format!("# spike {}\n{}", spike.join(" "), t.to_text());
    emit(cfg, &with_header(cfg, "sample", &body))?;
    Ok(Status::Ok)
}

pub fn detect(cfg: &RunConfig) -> Result<Status> {
    let (t, _) = instance(cfg)?;
    let d = &cfg.detect;
    let dc = DetectConfig {
        ell: cfg.problem.ell,
        rho: cfg.problem.rho,
        gamma: d.gamma,
        kappa: d.kappa,
        eps_prob: d.eps_prob,
        m: d.m,
        eig: EigOptions { tol: d.tol, max_iter: d.max_iter, seed: cfg.seed, max_basis: d.max_basis, ..Default::default() },
    };
    let cert = match d.precision {
        Precision::F64 => run_detect::<f64>(&t, &dc)?,
        Precision::F32 => run_detect::<f32>(&t, &dc)?,
    };
    emit_json(cfg, "detect", &cert)?;
    Ok(if cert.verdict == Verdict::Inconclusive { Status::Inconclusive } else { Status::Ok })
}

pub fn recover(cfg: &RunConfig) -> Result<Status> {
    let (t, z) = instance(cfg)?;
    let r = run_recovery(&t, &cfg.recover_config(), cfg.seed, z.as_ref())?;
    emit_json(cfg, "recover", &r)?;
    Ok(Status::Ok)
}

pub fn fig2(cfg: &RunConfig, json: bool) -> Result<Status> {
    let f = cfg.fig2.resolve(cfg.seed);
    let r = fig2_experiment(&f)?;
    if json {
        emit_json(cfg, "fig2", &r)?;
    } else {
        emit(cfg, &with_header(cfg, "fig2", &r.to_csv()?))?;
    }
    Ok(Status::Ok)
}

pub fn estimate(cfg: &RunConfig, table1: bool, markdown: bool) -> Result<Status> {
    let e = &cfg.estimate;
    if table1 {
        let body = if markdown {
            let reports = TABLE1_N.iter().map(|&n| run_estimate(&kikuchi::resources::EstimatorConfig { n, ..e.clone() })).collect::<kikuchi::Result<Vec<_>>>()?;
            table1_markdown(&reports)
        } else {
            emit_table1(e, &TABLE1_N)?
        };
        emit(cfg, &with_header(cfg, "estimate", &body))?;
    } else if markdown {
        emit(cfg, &with_header(cfg, "estimate", &table1_markdown(&[run_estimate(e)?])))?;
    } else {
        emit_json(cfg, "estimate", &run_estimate(e)?)?;
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: Value,
}

fn check<T: Serialize>(name: impl Into<String>, passed: bool, detail: &T) -> Check {
    Check { name: name.into(), passed, detail: serde_json::to_value(detail).expect("detail serialises") }
}

pub fn verify_circuits(cfg: &RunConfig) -> Result<Status> {
    let c = &cfg.circuits;
    let mut checks = Vec::new();
    for &l in &c.dicke_l {
        let r = check_dicke(l)?;
        checks.push(check(format!("dicke_semantics_l{l}"), r.passes(c.tol), &r));
        let got = dicke_prep(l).counts().non_clifford_count;
        let want = dicke_resource_formula(l);
        checks.push(check(format!("dicke_resources_l{l}"), got == want, &json!({ "count": got, "expected": want })));
    }
    for &k in &c.shuffle_c {
        let r = check_shuffle(k)?;
        checks.push(check(format!("one_hot_shuffle_c{k}"), r.passes(c.tol), &r));
    }
    let p = p_gadget(4, P_COUNTER_BITS).counts().toffoli_count;
    let pd = p_gadget_closed_depth(4, P_COUNTER_BITS);
    checks.push(check("p_gadget_k4", p == 45 && pd == 13, &json!({ "toffolis": p, "depth": pd })));
    let oh = oh_term_cost(4);
    checks.push(check("oh_term_k4", (oh.count, oh.depth) == (210, 60), &oh));
    if c.block_encoding {
        let t = SparseSignedTensor::from_entries(6, 2, true, [(vec![0, 1], 1), (vec![2, 3], -1), (vec![1, 4], 1)])?;
        let r = block_encoding_check(&t, 2)?;
        checks.push(check("block_encoding_n6_k2_l2", r.max_deviation <= 1e-10 && r.norm_drift <= 1e-10, &r));
        let a = adjacency_check(&t, 2)?;
        checks.push(check("adjacency_n6_k2_l2", a.mismatches == 0, &a));
    }
    if c.qsp_phases > 0 && c.qsp_epsilons.len() >= 2 {
        let s = rounding_sweep(&random_phases(c.qsp_phases, cfg.seed), &c.qsp_epsilons);
        checks.push(check("qsp_rounding", (s.slope - 1.0).abs() <= 0.1 && s.worst_bound_ratio <= 1.0, &s));
    }
    let all = checks.iter().all(|c| c.passed);
    for ch in &checks {
        log::info!("{} {}", if ch.passed { "PASS" } else { "FAIL" }, ch.name);
    }
    emit_json(cfg, "verify-circuits", &json!({ "passed": all, "checks": checks }))?;
    Ok(if all { Status::Ok } else { Status::Failed })
}

#[derive(Serialize)]
struct Bench {
    n: usize,
    k: usize,
    ell: usize,
    m: f64,
    dim: usize,
    entries: usize,
    reps: usize,
    /// `½ · entries · C(k, k/2) C(n−k, ℓ−k/2)`.
    edges_realised: f64,
    /// `½ m C(k, k/2) C(n−k, ℓ−k/2)`.
    edges_model: f64,
    flops_per_matvec_model: f64,
    seconds_per_matvec_f64: f64,
    seconds_per_matvec_f32: f64,
    gflops_f64: f64,
    gflops_f32: f64,
}

fn time_matvec<T: kikuchi::Scalar>(op: &KikuchiOperator, reps: usize) -> f64 {
    let mut x = vec![T::one(); op.dim];
    let start = Instant::now();
    for _ in 0..reps {
        x = op.matvec(&x);
        let s = x.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
        if s > T::zero() {
            x.iter_mut().for_each(|v| *v /= s);
        }
    }
    std::hint::black_box(&x);
    start.elapsed().as_secs_f64() / reps as f64
}

pub fn bench(cfg: &RunConfig) -> Result<Status> {
    let b = &cfg.bench;
    let m = b.m.unwrap_or_else(|| ProblemParams::default_m(b.n));
    let (t, _) = sample_planted(&ProblemParams::new(b.n, b.k, b.ell, m, 1.0, cfg.seed))?;
    let op = KikuchiOperator::build(&t, b.ell)?;
    let per = binom_f64(b.k, b.k / 2) * binom_f64(b.n - b.k, b.ell - b.k / 2);
    let edges_realised = 0.5 * op.num_entries() as f64 * per;
    let edges_model = kikuchi_stats(b.n, b.k, b.ell, m).edges;
    let t64 = time_matvec::<f64>(&op, b.reps);
    let t32 = time_matvec::<f32>(&op, b.reps);
    let r = Bench {
        n: b.n,
        k: b.k,
        ell: b.ell,
        m,
        dim: op.dim,
        entries: op.num_entries(),
        reps: b.reps,
        edges_realised,
        edges_model,
        flops_per_matvec_model: 4.0 * edges_model,
        seconds_per_matvec_f64: t64,
        seconds_per_matvec_f32: t32,
        gflops_f64: 4.0 * edges_realised / t64 / 1e9,
        gflops_f32: 4.0 * edges_realised / t32 / 1e9,
    };
    emit_json(cfg, "bench", &r)?;
    Ok(Status::Ok)
}
