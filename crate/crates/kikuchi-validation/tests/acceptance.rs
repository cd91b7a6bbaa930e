//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! `KIKUCHI_ACCEPTANCE=1,4,7` restricts the run to the listed criteria.

use std::collections::HashMap;
use std::time::Instant;

use kikuchi::circuits::dicke::{dicke_prep, dicke_resource_formula};
use kikuchi::circuits::oracles::{p_gadget, p_gadget_closed_depth, P_COUNTER_BITS};
use kikuchi::circuits::qsp::{random_phases, rounding_sweep};
use kikuchi::circuits::{block_encoding_check, check_dicke, check_shuffle, oh_term_cost, simulate_guiding_prep};
use kikuchi::combinatorics::{eberlein_exact, mask_of, SubsetIndexer};
use kikuchi::guiding::build_guiding;
use kikuchi::linalg::DenseSym;
use kikuchi::model::{sample_full_planted, sample_planted, sample_random, sample_simple, ProblemParams, SpikeVector};
use kikuchi::recovery::{boost, correlation, fig2_experiment, seeded_candidate, BoostTensor, Fig2Config, Fig2Result};
use kikuchi::resources::{clause_coloring_shuffled, coloring_is_valid, estimate, EstimatorConfig, TABLE1_N};
use kikuchi::rng::{derive, purpose, stream};
use kikuchi::spectral::{detect, DetectConfig, Verdict};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// Reference resource rows for n = 60, 80, 100, 120.
const QUBITS: [u64; 4] = [525, 720, 900, 1110];
const REPS: [u64; 4] = [31, 89, 201, 393];
const FLOPS_E20: [f64; 4] = [0.51, 115.0, 6611.0, 1.6e5];
const DEPTH_PE_E9: f64 = 2.88;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn table_rows() -> Vec<kikuchi::resources::ResourceReport> {
    TABLE1_N.iter().map(|&n| estimate(&EstimatorConfig::table1(n)).unwrap()).collect()
}

fn c1() -> Outcome {
    let got: Vec<u64> = table_rows().iter().map(|r| r.logical_qubits).collect();
    outcome(got == QUBITS, format!("qubits {got:?}"))
}

fn c2() -> Outcome {
    let got: Vec<u64> = table_rows().iter().map(|r| r.l).collect();
    let ok = got.iter().zip(REPS).all(|(&a, b)| a.abs_diff(b) <= 1);
    outcome(ok, format!("L {got:?} vs {REPS:?}"))
}

fn c3() -> Outcome {
    let r = estimate(&EstimatorConfig::table1(100)).unwrap();
    let identity = r.total_gates == r.l as f64 * (r.gates_state + r.gates_pe) && r.total_depth == r.l as f64 * (r.depth_state + r.depth_pe);
    let g = rel(r.total_gates, 1.16e15);
    let d = rel(r.total_depth, 3.97e12);
    let s = rel(r.gates_state, 5.55e12);
    let pe = rel(r.depth_pe_formula, DEPTH_PE_E9 * 1e9);
    outcome(
        identity && g <= 0.2 && d <= 0.2 && s <= 0.2,
        format!(
            "identity={identity} total_gates {:.3e} ({:+.1}%) total_depth {:.3e} ({:+.1}%) gates_state {:.3e} ({:+.1}%); depth_pe formula {:.3e} vs table 2.88e9 ({:.0}% off), table-calibrated {:.3e}",
            r.total_gates,
            100.0 * (r.total_gates / 1.16e15 - 1.0),
            r.total_depth,
            100.0 * (r.total_depth / 3.97e12 - 1.0),
            r.gates_state,
            100.0 * (r.gates_state / 5.55e12 - 1.0),
            r.depth_pe_formula,
            100.0 * pe,
            r.depth_pe_table_calibrated
        ),
    )
}

fn flops_ratio() -> Outcome {
    let rows = table_rows();
    let mut worst: f64 = 0.0;
    for i in 1..rows.len() {
        let ours = rows[i].classical_flops / rows[i - 1].classical_flops;
        let table = FLOPS_E20[i] / FLOPS_E20[i - 1];
        worst = worst.max(rel(ours, table));
    }
    let abs: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.classical_flops / 1e20)).collect();
    outcome(worst <= 0.25, format!("worst adjacent-row ratio error {:.1}%, FLOPs/1e20 {abs:?}", 100.0 * worst))
}

fn c4() -> Outcome {
    let dicke: Vec<(u64, u64)> = (1..=6).map(|l| (dicke_prep(l).counts().non_clifford_count, dicke_resource_formula(l))).collect();
    let dicke_ok = dicke.iter().enumerate().all(|(i, &(a, b))| a == b && b == (1u64 << (i + 1)) + i as u64);
    let p = p_gadget(4, P_COUNTER_BITS).counts().toffoli_count;
    let pd = p_gadget_closed_depth(4, P_COUNTER_BITS);
    let oh = oh_term_cost(4);
    outcome(
        dicke_ok && p == 45 && pd == 13 && (oh.count, oh.depth) == (210, 60),
        format!("dicke {:?}; P_i {p}/{pd}; O_H ({}, {})", dicke.iter().map(|x| x.0).collect::<Vec<_>>(), oh.count, oh.depth),
    )
}

fn c5() -> Outcome {
    let checks: Vec<_> = (1..=3).map(|l| check_dicke(l).unwrap()).collect();
    let worst = checks.iter().map(|c| c.zero_error.max(c.weight_one_error).max(c.leakage).max(c.norm_drift)).fold(0.0, f64::max);
    outcome(checks.iter().all(|c| c.passes(1e-12)), format!("worst residual {worst:.2e}"))
}

fn c6() -> Outcome {
    let checks: Vec<_> = (2..=4).map(|c| check_shuffle(c).unwrap()).collect();
    let ok = checks.iter().all(|c| c.passes(1e-12));
    let s: Vec<String> = checks.iter().map(|c| format!("c={} p={:.12}", c.c, c.weight_one_success[0])).collect();
    outcome(ok, s.join(", "))
}

fn c7() -> Outcome {
    let mut parts = vec![];
    let mut ok = true;
    for (n, k, ell, m, seed) in [(6, 2, 2, 3.0, 11u64), (8, 4, 4, 4.0, 12)] {
        let (t, _) = sample_simple(&ProblemParams::new(n, k, ell, m, 1.0, seed)).unwrap();
        let r = block_encoding_check(&t, ell).unwrap();
        ok &= r.max_deviation <= 1e-10 && r.nonzero > 0;
        parts.push(format!("(n={n},k={k},l={ell},m={m}) dev {:.2e} over {} nonzero, b={}", r.max_deviation, r.nonzero, r.b));
    }
    outcome(ok, parts.join("; "))
}

fn c8() -> Outcome {
    let (t, _) = sample_simple(&ProblemParams::new(6, 2, 4, 4.0, 1.0, 5)).unwrap();
    let sim = simulate_guiding_prep(&t, 4).unwrap();
    let g = build_guiding::<f64>(&t, 4).unwrap();
    let target = g.alpha_ell * 2f64.powi(-4);
    let prob_err = (sim.success_probability - target).abs();
    let sign = if sim.accepted.iter().zip(&g.amplitudes).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let state_err = sim.accepted.iter().zip(&g.amplitudes).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
    outcome(
        prob_err <= 1e-10 && state_err <= 1e-10,
        format!(
            "success {:.12} vs alpha*c^-l {:.12} (ratio {:.6}); state err {state_err:.2e}",
            sim.success_probability,
            target,
            sim.success_probability / target
        ),
    )
}

fn c9() -> Outcome {
    let (n, k, ell) = (20, 4, 6);
    let m = ProblemParams::default_m(n);
    let mut planted = 0;
    let mut random = 0;
    for i in 0..100u64 {
        let p = ProblemParams::new(n, k, ell, m, 1.0, derive(900, i));
        let cfg = DetectConfig { m: Some(m), ..DetectConfig::new(ell) };
        let (t, _) = sample_planted(&p).unwrap();
        planted += (detect::<f64>(&t, &cfg).unwrap().verdict == Verdict::Planted) as u32;
        let t0 = sample_random(&p).unwrap();
        random += (detect::<f64>(&t0, &cfg).unwrap().verdict == Verdict::Random) as u32;
    }
    outcome(planted >= 95 && random >= 95, format!("planted {planted}/100, random {random}/100"))
}

fn monotone(r: &Fig2Result, cfg: &Fig2Config) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    let mean = |rho: f64, obs: f64| r.cell(rho, obs).unwrap().mean_corr;
    for &obs in &cfg.obs_fractions {
        for w in cfg.rhos.windows(2) {
            worst = worst.max(mean(w[0], obs) - mean(w[1], obs));
        }
    }
    for &rho in &cfg.rhos {
        for w in cfg.obs_fractions.windows(2) {
            worst = worst.max(mean(rho, w[0]) - mean(rho, w[1]));
        }
    }
    (worst <= 0.05, worst)
}

fn c10() -> Outcome {
    let sym = Fig2Config::symmetric();
    let rs = fig2_experiment(&sym).unwrap();
    let top = rs.cell(1.0, 0.2).unwrap().mean_corr;
    let zero_max = sym.obs_fractions.iter().map(|&o| rs.cell(0.0, o).unwrap().mean_corr).fold(0.0, f64::max);
    let (mono, slack) = monotone(&rs, &sym);
    let asym = Fig2Config::asymmetric();
    let ra = fig2_experiment(&asym).unwrap();
    let easy = ra.cell(1.0, 0.3).unwrap().mean_corr;
    print!("{}", rs.to_csv().unwrap());
    print!("{}", ra.to_csv().unwrap().lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    outcome(
        top >= 0.9 && zero_max <= 0.35 && mono && easy >= 0.7,
        format!("top cell {top:.3}, rho=0 max {zero_max:.3}, worst monotonicity drop {slack:.3}, asymmetric easiest {easy:.3}"),
    )
}

fn c11() -> Outcome {
    let n = 30;
    let m = ProblemParams::default_m(n);
    let mut seeded = 0;
    let mut orth = 0;
    let (mut mean_in, mut mean_out) = (0.0, 0.0);
    for i in 0..100u64 {
        let p = ProblemParams::new(n, 4, 4, m, 0.5, derive(1100, i));
        let z = SpikeVector::uniform(n, &mut stream(p.seed, purpose::SPIKE));
        let t = sample_full_planted(&p, &z).unwrap();
        let x = seeded_candidate(&z, 0.3, &mut stream(p.seed, purpose::CANDIDATE));
        mean_in += correlation(&x, &z.to_f64()) / 100.0;
        let c = boost(BoostTensor::Full(&t), &x, Some(&z)).unwrap().correlation.unwrap();
        mean_out += c / 100.0;
        seeded += (c >= 0.9) as u32;

        let p1 = ProblemParams { rho: 1.0, seed: derive(1200, i), ..p };
        let z1 = SpikeVector::uniform(n, &mut stream(p1.seed, purpose::SPIKE));
        let t1 = sample_full_planted(&p1, &z1).unwrap();
        let x0 = seeded_candidate(&z1, 0.0, &mut stream(p1.seed, purpose::CANDIDATE));
        let c0 = boost(BoostTensor::Full(&t1), &x0, Some(&z1)).unwrap().correlation.unwrap();
        orth += (c0 <= 0.2) as u32;
    }
    outcome(
        seeded >= 80 && orth >= 95,
        format!("seeded r0={mean_in:.3} -> mean {mean_out:.3}, {seeded}/100 reach 0.9; orthogonal {orth}/100 stay <= 0.2"),
    )
}

/// Distance-i adjacency of J(n, l) by brute force, then eigenvalues of every
/// A_i on the eigenspaces of A_1 (ordered by decreasing A_1 eigenvalue).
fn johnson_eigen_table(n: usize, l: usize) -> Vec<Vec<i128>> {
    let ix = SubsetIndexer::new(n, l);
    let dim = ix.dim() as usize;
    let masks: Vec<u128> = (0..dim as u64).map(|r| mask_of(&ix.unrank(r).unwrap())).collect();
    let dist = |a: usize, b: usize| l - (masks[a] & masks[b]).count_ones() as usize;
    let a1 = DenseSym::from_fn(dim, |a, b| if dist(a, b) == 1 { 1.0 } else { 0.0 });
    let e = a1.eigh();
    // group eigenvalues, largest first
    let mut groups: Vec<(f64, usize)> = vec![];
    for j in (0..dim).rev() {
        let v = e.values[j];
        if groups.last().is_none_or(|g| (g.0 - v).abs() > 1e-6) {
            groups.push((v, j));
        }
    }
    groups
        .iter()
        .map(|&(_, j)| {
            let v = e.vector(j);
            let p = (0..dim).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            (0..=l)
                .map(|i| {
                    let av: f64 = (0..dim).filter(|&q| dist(p, q) == i).map(|q| v[q]).sum();
                    let lam = av / v[p];
                    let resid: f64 = (0..dim)
                        .map(|a| ((0..dim).filter(|&q| dist(a, q) == i).map(|q| v[q]).sum::<f64>() - lam * v[a]).abs())
                        .fold(0.0, f64::max);
                    assert!(resid < 1e-6, "A_{i} not diagonal on eigenspace ({n},{l})");
                    lam.round() as i128
                })
                .collect()
        })
        .collect()
}

fn c12() -> Outcome {
    let mut ok = true;
    for (n, l) in [(8, 2), (10, 3), (12, 4)] {
        let brute = johnson_eigen_table(n, l);
        ok &= brute.len() == l + 1;
        for (r, row) in brute.iter().enumerate() {
            for (i, &lam) in row.iter().enumerate() {
                ok &= eberlein_exact(n, l, i, r) == lam;
            }
        }
    }
    let mut sweep = 0;
    for l in 1..=8 {
        for n in 2 * l..=30 {
            ok &= eberlein_exact(n, l, 1, l) == -(l as i128);
            sweep += 1;
        }
    }
    outcome(ok, format!("brute force on 3 schemes, lambda_l(1) = -l on {sweep} (n,l)"))
}

fn c13() -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for n in [40, 80, 120, 200] {
        let m = ProblemParams::default_m(n);
        let (t, _) = sample_simple(&ProblemParams::new(n, 4, 4, m, 0.0, 1300 + n as u64)).unwrap();
        let col = clause_coloring_shuffled(&t, 7);
        let ratio = col.colors as f64 / col.bound;
        ok &= ratio <= 1.2 && coloring_is_valid(&t, &col);
        parts.push(format!("n={n} {ratio:.3}"));
    }
    outcome(ok, format!("colors / (4m/n): {}", parts.join(", ")))
}

fn c14() -> Outcome {
    let ph = random_phases(50, 7);
    let s = rounding_sweep(&ph, &[1e-10, 1e-9, 1e-8, 1e-7, 1e-6]);
    outcome((s.slope - 1.0).abs() <= 0.1 && s.worst_bound_ratio <= 1.0, format!("slope {:.4}, max dev/(2 P eps) {:.3}", s.slope, s.worst_bound_ratio))
}

type Criterion = (&'static str, &'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 15] = [
        ("1", "table qubits", 1.0, c1),
        ("2", "amp. amp. repetitions", 1.0, c2),
        ("3", "table totals", 1.0, c3),
        ("3f", "classical FLOPs ratio", 1.0, flops_ratio),
        ("4", "circuit gate counts", 1.0, c4),
        ("5", "dicke semantics", 10.0, c5),
        ("6", "one-hot shuffle", 10.0, c6),
        ("7", "block encoding", 120.0, c7),
        ("8", "guiding-state cross-check", 120.0, c8),
        ("9", "detection rates", 600.0, c9),
        ("10", "recovery grid", 1800.0, c10),
        ("11", "boosting", 600.0, c11),
        ("12", "johnson eigenvalues", 60.0, c12),
        ("13", "clause colouring", 300.0, c13),
        ("14", "qsp rounding", 60.0, c14),
    ];
    // libtest flags are ignored; only the filter variable selects criteria
    let only: Option<Vec<String>> = std::env::var("KIKUCHI_ACCEPTANCE").ok().map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
    let mut summary: HashMap<&str, bool> = HashMap::new();
    for (id, name, limit, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < limit;
        summary.insert(id, pass);
        println!(
            "criterion {id:>2} {name:<26} {} ({secs:.2}s, limit {limit}s) {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<&str> = criteria.iter().map(|c| c.0).filter(|id| summary.get(id) == Some(&false)).collect();
    println!("acceptance: {} passed, {} failed {:?}", summary.len() - failed.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
