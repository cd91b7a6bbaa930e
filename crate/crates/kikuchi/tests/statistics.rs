//! Monte Carlo and end-to-end checks at small sizes.

use kikuchi::combinatorics::{binom, kikuchi_stats, SubsetIndexer};
use kikuchi::guiding::alpha_ell;
use kikuchi::kikuchi::KikuchiOperator;
use kikuchi::linalg::DenseSym;
use kikuchi::model::{sample_asymmetric_planted, sample_planted, ProblemParams, SparseSignedTensor};
use kikuchi::recovery::{recover, weak_recover, RecoverConfig, Strategy, VotingMatrix};
use kikuchi::rng::derive;
use kikuchi::spectral::{detect, thresholds, top_eigs, DetectConfig, EigOptions, Verdict};
use num_bigint::BigUint;

#[test]
fn planted_mass_is_poisson() {
    let seeds = 200;
    let mut mean = 0.0;
    for i in 0..seeds {
        let (t, _) = sample_planted(&ProblemParams::new(20, 4, 4, 2000.0, 1.0, derive(1, i))).unwrap();
        let mass = t.total_mass() as f64;
        assert!((mass - 2000.0).abs() <= 5.0 * 2000f64.sqrt());
        mean += mass / seeds as f64;
    }
    assert!((mean - 2000.0).abs() <= 5.0 * (2000.0 / seeds as f64).sqrt());
}

#[test]
fn null_signs_are_unbiased() {
    let mut s = 0.0;
    let mut cnt = 0.0;
    for i in 0..50 {
        let (t, z) = sample_planted(&ProblemParams::new(20, 4, 4, 2000.0, 0.0, derive(2, i))).unwrap();
        for (sub, w) in t.iter() {
            s += (z.parity(sub) * w) as f64;
            cnt += w.unsigned_abs() as f64;
        }
    }
    assert!(s.abs() <= 5.0 * cnt.sqrt());
}

#[test]
fn asymmetric_count_is_poisson() {
    for i in 0..20 {
        let (a, z) = sample_asymmetric_planted(&ProblemParams::new(7, 4, 4, 500.0, 1.0, derive(3, i))).unwrap();
        assert!((a.total_mass() as f64 - 500.0).abs() <= 5.0 * 500f64.sqrt());
        for (tup, w) in a.iter() {
            let p: i64 = tup.iter().enumerate().map(|(b, &j)| z.values[b * 7 + j as usize] as i64).product();
            assert_eq!(w.signum(), p);
        }
    }
}

#[test]
fn alpha_is_one_minus_overlap_fraction() {
    let (t, _) = sample_planted(&ProblemParams::new(20, 4, 8, 200.0, 1.0, 4)).unwrap();
    let e: Vec<Vec<u32>> = t.iter().map(|(s, _)| s.to_vec()).collect();
    let overlapping = e.iter().flat_map(|a| e.iter().map(move |b| (a, b))).filter(|(a, b)| a.iter().any(|x| b.contains(x))).count();
    let m = e.len() as f64;
    assert!((alpha_ell(&t, 2) - (1.0 - overlapping as f64 / (m * m))).abs() < 1e-14);
}

#[test]
fn alpha_lower_bound_holds() {
    let bound = 1.0 - (16.0 / 20.0 + 16.0 * 20f64.ln() / 2000.0);
    let ok = (0..100).filter(|&i| alpha_ell(&sample_planted(&ProblemParams::new(20, 4, 8, 2000.0, 1.0, derive(5, i))).unwrap().0, 2) >= bound).count();
    assert!(ok >= 95);
}

#[test]
fn average_degree_by_big_integers() {
    let n = 100usize;
    let m = 10.0 * (n * n) as f64 * (n as f64).ln();
    let b = |n: u64, k: u64| -> BigUint {
        let f = |a: u64| (1..=a).fold(BigUint::from(1u32), |p, i| p * i);
        f(n) / (f(k) * f(n - k))
    };
    let num = b(96, 14) * 6u32;
    let den = b(100, 16);
    // ratio via 12 significant digits of the integer quotient
    let scaled: BigUint = num * BigUint::from(10u64).pow(12) / den;
    let ratio = scaled.to_string().parse::<f64>().unwrap() / 1e12;
    let d = kikuchi_stats(n, 4, 16, m).d;
    assert!((d / (m * ratio) - 1.0).abs() < 1e-9, "{d} vs {}", m * ratio);
}

#[test]
fn complete_tensor_is_regular() {
    let entries: Vec<(Vec<u32>, i64)> = (0..8u32).flat_map(|a| (a + 1..8).map(move |b| (vec![a, b], 1))).collect();
    let t = SparseSignedTensor::from_entries(8, 2, true, entries).unwrap();
    let op = KikuchiOperator::build(&t, 2).unwrap();
    let delta = kikuchi_stats(8, 2, 2, 1.0).big_delta;
    assert_eq!(op.matvec(&vec![1.0f64; op.dim]), vec![delta; op.dim]);
    let r = top_eigs::<f64, _>(&op, &EigOptions { tol: 1e-10, ..Default::default() });
    assert!((r.values[0] - delta).abs() < 1e-8);
}

#[test]
fn johnson_multiplicities() {
    // J(10,3): eigenvalue (3−r)(7−r) − r with multiplicity C(10,r) − C(10,r−1)
    let ix = SubsetIndexer::new(10, 3);
    let d = ix.dim() as usize;
    let ms: Vec<u128> = (0..d as u64).map(|i| ix.unrank_mask(i)).collect();
    let a = DenseSym::<f64>::from_fn(d, |i, j| if (ms[i] & ms[j]).count_ones() == 2 { 1.0 } else { 0.0 });
    let vals = a.eigh().values;
    for r in 0..=3usize {
        let theta = ((3 - r) * (7 - r)) as f64 - r as f64;
        let mult = vals.iter().filter(|v| (*v - theta).abs() < 1e-8).count();
        let want = binom(10, r) - if r > 0 { binom(10, r - 1) } else { 0 };
        assert_eq!(mult as u64, want);
        assert_eq!(kikuchi::combinatorics::eberlein(10, 3, 1, r), theta);
    }
}

#[test]
fn zero_votes_give_chance_correlation() {
    let n = 40;
    let vm = VotingMatrix { n, m: DenseSym::zeros(n) };
    let z = kikuchi::model::SpikeVector::new((0..n).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect());
    let mean: f64 = (0..300).map(|s| weak_recover(&vm, s, Strategy::Gaussian1rdm, Some(&z)).correlation.unwrap()).sum::<f64>() / 300.0;
    // E|g·z|/(‖g‖‖z‖) ≈ √(2/(π n))
    let expect = (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
    assert!((mean / expect - 1.0).abs() < 0.2, "{mean} vs {expect}");
}

#[test]
fn thresholds_sane() {
    let a = thresholds(100, 4, 16, 10.0 * 1e4 * 100f64.ln(), 0.25, 0.1, 1.0, 1.0);
    assert!(a.valid && a.lambda_star / a.random_bound > 1.0);
    let mut last = 1.0f64;
    for m in [1e3, 1e4, 1e5, 1e6] {
        let t = thresholds(30, 4, 6, m, 1.0, 0.1, 1.0, 1.0);
        assert!(t.failure_probs.planted <= last);
        last = t.failure_probs.planted;
    }
}

#[test]
fn detect_and_recover_end_to_end() {
    let (n, k, ell) = (16, 4, 4);
    let m = ProblemParams::default_m(n);
    for i in 0..5 {
        let p = ProblemParams::new(n, k, ell, m, 1.0, derive(6, i));
        let cfg = DetectConfig { m: Some(m), ..DetectConfig::new(ell) };
        let (t, z) = sample_planted(&p).unwrap();
        assert_eq!(detect::<f64>(&t, &cfg).unwrap().verdict, Verdict::Planted);
        assert_eq!(detect::<f32>(&t, &cfg).unwrap().verdict, Verdict::Planted);
        let t0 = kikuchi::model::sample_random(&p).unwrap();
        assert_eq!(detect::<f64>(&t0, &cfg).unwrap().verdict, Verdict::Random);
        let r = recover(&t, &RecoverConfig { ell, ..Default::default() }, p.seed, Some(&z)).unwrap();
        assert!(r.correlation.unwrap() > 0.9, "{:?}", r.correlation);
    }
}

#[test]
fn overlapping_thresholds_are_inconclusive() {
    let (t, _) = sample_planted(&ProblemParams::new(10, 4, 4, 20.0, 1.0, 8)).unwrap();
    let c = detect::<f64>(&t, &DetectConfig::new(4)).unwrap();
    assert!(!c.thresholds.valid);
    assert_eq!(c.verdict, Verdict::Inconclusive);
}
