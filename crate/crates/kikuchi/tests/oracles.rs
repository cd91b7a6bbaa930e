//! Library results against brute-force definitions computed here from scratch.

use std::collections::HashMap;

use kikuchi::combinatorics::{binom, binom_u128, kikuchi_stats, SubsetIndexer};
use kikuchi::guiding::{alpha_ell, build_guiding};
use kikuchi::kikuchi::KikuchiOperator;
use kikuchi::linalg::DenseSym;
use kikuchi::model::{sample_planted, sample_simple, ProblemParams, SparseSignedTensor};
use kikuchi::recovery::voting_matrix;
use kikuchi::spectral::{top_eigs, EigOptions};
use num_bigint::BigUint;

fn big_binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let fact = |a: u64| (1..=a).fold(BigUint::from(1u32), |p, i| p * i);
    fact(n) / (fact(k) * fact(n - k))
}

fn masks(n: usize, l: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == l).collect()
}

fn dense_kikuchi(t: &SparseSignedTensor, l: usize) -> HashMap<(u32, u32), f64> {
    let w: HashMap<u32, f64> = t.iter().map(|(s, w)| (s.iter().fold(0u32, |a, &i| a | 1 << i), w as f64)).collect();
    let mut out = HashMap::new();
    let ms = masks(t.n, l);
    for &u in &ms {
        for &v in &ms {
            if let Some(&x) = w.get(&(u ^ v)) {
                out.insert((u, v), x);
            }
        }
    }
    out
}

#[test]
fn binomials_match_bignum() {
    for n in 0..=70u64 {
        for k in 0..=n {
            let want = big_binom(n, k);
            assert_eq!(BigUint::from(binom_u128(n, k).unwrap()), want, "C({n},{k})");
            if want < BigUint::from(u64::MAX) {
                assert_eq!(BigUint::from(binom(n as usize, k as usize)), want);
            }
        }
    }
    assert_eq!(BigUint::from(binom_u128(120, 16).unwrap()), big_binom(120, 16));
}

#[test]
fn subset_rank_is_colex_order() {
    // rank = Σ C(s_i, i+1) for the sorted subset
    for (n, l) in [(7, 3), (9, 4), (10, 1)] {
        let ix = SubsetIndexer::new(n, l);
        for m in masks(n, l) {
            let s: Vec<u32> = (0..n as u32).filter(|i| m >> i & 1 == 1).collect();
            let want: u64 = s.iter().enumerate().map(|(i, &x)| big_binom(x as u64, i as u64 + 1).try_into().unwrap_or(0u64)).sum();
            assert_eq!(ix.rank(&s).unwrap(), want);
        }
    }
}

#[test]
fn kikuchi_matches_definition() {
    for (n, k, l, seed) in [(7, 2, 2, 1), (8, 4, 4, 2), (9, 2, 3, 3), (8, 4, 2, 4)] {
        let (t, _) = sample_planted(&ProblemParams::new(n, k, l, 12.0, 0.6, seed)).unwrap();
        let op = KikuchiOperator::build(&t, l).unwrap();
        let ix = op.indexer();
        let dense = dense_kikuchi(&t, l);
        let ms = masks(n, l);
        for &u in &ms {
            for &v in &ms {
                let (ru, rv) = (ix.rank_mask(u as u128) as usize, ix.rank_mask(v as u128) as usize);
                assert_eq!(op.entry(ru, rv), *dense.get(&(u, v)).unwrap_or(&0.0), "n={n} k={k} l={l}");
            }
        }
        let x: Vec<f64> = (0..op.dim).map(|i| ((i * 37 % 17) as f64 - 8.0) / 3.0).collect();
        let y = op.matvec(&x);
        for &u in &ms {
            let ru = ix.rank_mask(u as u128) as usize;
            let want: f64 = ms.iter().map(|&v| dense.get(&(u, v)).unwrap_or(&0.0) * x[ix.rank_mask(v as u128) as usize]).sum();
            assert!((y[ru] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn degree_statistics_by_counting() {
    // fraction of ℓ-subsets V with UΔV equal to a fixed k-subset, averaged over S
    for (n, k, l) in [(8, 2, 3), (9, 4, 4), (10, 4, 6)] {
        let ms = masks(n, l);
        let ks = masks(n, k);
        let u = ms[ms.len() / 2];
        let hits: usize = ks.iter().filter(|&&s| (u ^ s).count_ones() as usize == l).count();
        let delta = hits as f64 / ks.len() as f64;
        let st = kikuchi_stats(n, k, l, 5.0);
        assert!((st.delta - delta).abs() < 1e-12, "({n},{k},{l}) {} vs {delta}", st.delta);
        assert!((st.d - 5.0 * delta).abs() < 1e-10);
    }
}

#[test]
fn top_eigenvalues_match_dense() {
    let (t, _) = sample_planted(&ProblemParams::new(10, 4, 4, 60.0, 0.8, 9)).unwrap();
    let op = KikuchiOperator::build(&t, 4).unwrap();
    let ix = op.indexer();
    let dense = dense_kikuchi(&t, 4);
    let d = DenseSym::<f64>::from_fn(op.dim, |a, b| {
        let (u, v) = (ix.unrank_mask(a as u64) as u32, ix.unrank_mask(b as u64) as u32);
        *dense.get(&(u, v)).unwrap_or(&0.0)
    });
    let mut vals = d.eigh().values;
    vals.sort_by(|a, b| b.total_cmp(a));
    for precision in [1e-9, 1e-4] {
        let r = top_eigs::<f64, _>(&op, &EigOptions { count: 3, tol: precision, ..Default::default() });
        for (got, want) in r.values.iter().zip(&vals) {
            assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
    let r32 = top_eigs::<f32, _>(&op, &EigOptions { count: 1, tol: 1e-4, ..Default::default() });
    assert!((r32.values[0] as f64 - vals[0]).abs() <= 1e-3 * vals[0].abs());
}

#[test]
fn voting_matrix_by_pairs() {
    for (n, l) in [(5, 2), (6, 3), (7, 2)] {
        let ix = SubsetIndexer::new(n, l);
        let v: Vec<f64> = (0..ix.dim()).map(|i| ((i * 13 % 7) as f64 - 3.0) / 5.0).collect();
        let vm = voting_matrix(&v, n, l).unwrap();
        let ms = masks(n, l);
        let mut want = vec![0.0; n * n];
        for &a in &ms {
            for &b in &ms {
                let d = a ^ b;
                if d.count_ones() == 2 {
                    let i = d.trailing_zeros() as usize;
                    let j = 31 - d.leading_zeros() as usize;
                    let x = v[ix.rank_mask(a as u128) as usize] * v[ix.rank_mask(b as u128) as usize];
                    want[i * n + j] += x;
                    want[j * n + i] += x;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((vm.get(i, j) - want[i * n + j]).abs() < 1e-12, "({n},{l}) V[{i}][{j}]");
            }
        }
    }
}

#[test]
fn uniform_vector_votes_by_enumeration() {
    // all 15 ordered pairs at distance 1 among C(4,2): each swap i↔j is made by 2 subsets
    let v = vec![1.0 / 6f64.sqrt(); 6];
    let vm = voting_matrix(&v, 4, 2).unwrap();
    assert!((vm.get(0, 1) - 2.0 * 2.0 / 6.0).abs() < 1e-14);
}

fn ordered_disjoint(t: &SparseSignedTensor, c: usize) -> Vec<(u32, f64)> {
    let e: Vec<(u32, f64)> = t.iter().map(|(s, w)| (s.iter().fold(0u32, |a, &i| a | 1 << i), w as f64)).collect();
    let mut out = vec![(0u32, 1.0)];
    for _ in 0..c {
        out = out.iter().flat_map(|&(u, a)| e.iter().filter(move |&&(s, _)| u & s == 0).map(move |&(s, w)| (u | s, a * w))).collect();
    }
    out
}

#[test]
fn guiding_state_by_enumeration() {
    for (n, k, l, m, seed) in [(8, 2, 4, 9.0, 1), (9, 2, 6, 12.0, 2), (10, 4, 8, 8.0, 3)] {
        let (t, _) = sample_simple(&ProblemParams::new(n, k, l, m, 1.0, seed)).unwrap();
        let c = l / k;
        let tuples = ordered_disjoint(&t, c);
        let g = build_guiding::<f64>(&t, l).unwrap();
        let ix = SubsetIndexer::new(n, l);
        let mut raw = vec![0.0; ix.dim() as usize];
        for &(u, a) in &tuples {
            raw[ix.rank_mask(u as u128) as usize] += a;
        }
        assert_eq!(g.raw, raw);
        let alpha = tuples.len() as f64 / (t.len() as f64).powi(c as i32);
        assert!((g.alpha_ell - alpha).abs() < 1e-15);
        assert!((alpha_ell(&t, c) - alpha).abs() < 1e-15);
    }
}
