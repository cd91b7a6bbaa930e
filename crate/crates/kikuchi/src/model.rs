//! Planted and random kXOR instances / sparse spiked tensors.
//!
//! Indices are 0-based in memory and 1-based in the text and JSON formats.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binom, binom_f64, next_combination};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub m_target: f64,
    pub rho: f64,
    pub seed: u64,
}

impl ProblemParams {
    pub fn new(n: usize, k: usize, ell: usize, m_target: f64, rho: f64, seed: u64) -> Self {
        ProblemParams { n, k, ell, m_target, rho, seed }
    }

    /// `m = 10 n² ln n`.
    pub fn default_m(n: usize) -> f64 {
        10.0 * (n * n) as f64 * (n as f64).ln()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_on(self.n)
    }

    /// Validation for the block-embedded model on `N = k n` variables.
    pub fn validate_asymmetric(&self) -> Result<()> {
        self.validate_on(self.n * self.k)
    }

    fn validate_on(&self, n: usize) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParams(s));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.k == 0 || !self.k.is_multiple_of(2) {
            return bad(format!("k = {} must be even and positive", self.k));
        }
        if self.k > n {
            return bad(format!("k = {} exceeds n = {n}", self.k));
        }
        if self.ell > n {
            return bad(format!("ell = {} exceeds n = {n}", self.ell));
        }
        if self.ell < self.k / 2 {
            return bad(format!("ell = {} below k/2", self.ell));
        }
        if !(self.m_target >= 0.0) || !self.m_target.is_finite() {
            return bad(format!("m_target = {} must be finite and nonnegative", self.m_target));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho = {} outside [0,1]", self.rho));
        }
        Ok(())
    }

    /// `c = ℓ/k` when ℓ is a multiple of k.
    pub fn c(&self) -> Option<usize> {
        self.ell.is_multiple_of(self.k).then(|| self.ell / self.k)
    }

    pub fn q(&self) -> f64 {
        self.m_target / binom_f64(self.n, self.k)
    }

    pub fn eta(&self) -> f64 {
        (1.0 - self.rho) / 2.0
    }
}

/// ±1 assignment, optionally split into equal blocks (asymmetric case).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeVector {
    pub values: Vec<i8>,
    pub block_size: Option<usize>,
}

impl SpikeVector {
    pub fn new(values: Vec<i8>) -> Self {
        assert!(values.iter().all(|&v| v == 1 || v == -1));
        SpikeVector { values, block_size: None }
    }

    pub fn uniform(n: usize, rng: &mut Rng) -> Self {
        SpikeVector::new((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn parity(&self, subset: &[u32]) -> i64 {
        subset.iter().map(|&i| self.values[i as usize] as i64).product()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn block(&self, b: usize) -> &[i8] {
        let s = self.block_size.expect("not a block spike");
        &self.values[b * s..(b + 1) * s]
    }

    pub fn num_blocks(&self) -> usize {
        self.block_size.map_or(1, |s| self.values.len() / s)
    }
}

/// Sparse symmetric tensor with integer weights, stored as a sorted list of
/// k-subsets (flat, `k` indices per entry).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSignedTensor {
    pub n: usize,
    pub k: usize,
    /// `false` for a block embedding of an asymmetric tensor.
    pub symmetric: bool,
    idx: Vec<u32>,
    w: Vec<i64>,
}

impl SparseSignedTensor {
    pub fn empty(n: usize, k: usize) -> Self {
        SparseSignedTensor { n, k, symmetric: true, idx: vec![], w: vec![] }
    }

    /// Builds from arbitrary (subset, weight) pairs: subsets are sorted, repeated
    /// subsets are summed and zero totals dropped.
    pub fn from_entries<I>(n: usize, k: usize, symmetric: bool, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut idx = Vec::new();
        let mut w = Vec::new();
        for (mut s, wt) in entries {
            s.sort_unstable();
            if s.len() != k || s.windows(2).any(|p| p[0] == p[1]) || s.iter().any(|&i| i as usize >= n) {
                return Err(Error::MalformedSubset(format!("{s:?} is not a {k}-subset of [0,{n})")));
            }
            idx.extend_from_slice(&s);
            w.push(wt);
        }
        Ok(Self::merge(n, k, symmetric, idx, w))
    }

    fn merge(n: usize, k: usize, symmetric: bool, idx: Vec<u32>, w: Vec<i64>) -> Self {
        let m = w.len();
        let mut order: Vec<u32> = (0..m as u32).collect();
        let key = |i: u32| &idx[i as usize * k..(i as usize + 1) * k];
        order.sort_unstable_by(|&a, &b| key(a).cmp(key(b)));
        let mut out_idx = Vec::with_capacity(idx.len());
        let mut out_w: Vec<i64> = Vec::with_capacity(m);
        let mut i = 0;
        while i < m {
            let mut j = i;
            let mut tot = 0i64;
            while j < m && key(order[j]) == key(order[i]) {
                tot += w[order[j] as usize];
                j += 1;
            }
            if tot != 0 {
                out_idx.extend_from_slice(key(order[i]));
                out_w.push(tot);
            }
            i = j;
        }
        SparseSignedTensor { n, k, symmetric, idx: out_idx, w: out_w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn subset(&self, i: usize) -> &[u32] {
        &self.idx[i * self.k..(i + 1) * self.k]
    }

    pub fn weight(&self, i: usize) -> i64 {
        self.w[i]
    }

    pub fn weights(&self) -> &[i64] {
        &self.w
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], i64)> + '_ {
        self.idx.chunks_exact(self.k.max(1)).zip(self.w.iter().copied())
    }

    /// Weight of a sorted subset, 0 if absent.
    pub fn get(&self, subset: &[u32]) -> i64 {
        let m = self.len();
        let (mut lo, mut hi) = (0, m);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.subset(mid).cmp(subset) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.w[mid],
            }
        }
        0
    }

    /// `Σ |weight|`, the number of surviving observations.
    pub fn total_mass(&self) -> i64 {
        self.w.iter().map(|w| w.abs()).sum()
    }

    pub fn max_abs_weight(&self) -> i64 {
        self.w.iter().map(|w| w.abs()).max().unwrap_or(0)
    }

    /// Block size of an embedded tensor (`N / k`).
    pub fn block_size(&self) -> Option<usize> {
        (!self.symmetric).then(|| self.n / self.k)
    }

    /// Keeps the entries for which `keep` returns true.
    pub fn filter<F: FnMut(usize) -> bool>(&self, mut keep: F) -> Self {
        let mut idx = Vec::new();
        let mut w = Vec::new();
        for i in 0..self.len() {
            if keep(i) {
                idx.extend_from_slice(self.subset(i));
                w.push(self.w[i]);
            }
        }
        SparseSignedTensor { n: self.n, k: self.k, symmetric: self.symmetric, idx, w }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * (4 * self.k + 4) + 16);
        writeln!(s, "{} {} {}", self.n, self.k, self.symmetric as u8).unwrap();
        for (sub, w) in self.iter() {
            for &i in sub {
                write!(s, "{} ", i + 1).unwrap();
            }
            writeln!(s, "{w}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let h: Vec<usize> = parse_fields(header)?;
        if h.len() != 3 || h[2] > 1 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let (n, k) = (h[0], h[1]);
        let mut entries = Vec::new();
        for line in lines {
            let f: Vec<i64> = parse_fields(line)?;
            if f.len() != k + 1 {
                return Err(Error::Parse(format!("expected {} fields in `{line}`", k + 1)));
            }
            let mut s = Vec::with_capacity(k);
            for &i in &f[..k] {
                if i < 1 || i as usize > n {
                    return Err(Error::Parse(format!("index {i} outside [1,{n}]")));
                }
                s.push((i - 1) as u32);
            }
            if f[k] == 0 {
                return Err(Error::Parse("zero weight".into()));
            }
            entries.push((s, f[k]));
        }
        Self::from_entries(n, k, h[2] == 1, entries)
    }

    pub fn to_json(&self) -> Result<String> {
        let dto = TensorJson {
            n: self.n,
            k: self.k,
            symmetric_flag: self.symmetric,
            entries: self
                .iter()
                .map(|(s, w)| EntryJson { indices: s.iter().map(|&i| i + 1).collect(), weight: w })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&dto)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: TensorJson = serde_json::from_str(text)?;
        let mut entries = Vec::with_capacity(dto.entries.len());
        for e in dto.entries {
            if e.indices.iter().any(|&i| i == 0 || i as usize > dto.n) {
                return Err(Error::Parse(format!("index outside [1,{}]", dto.n)));
            }
            entries.push((e.indices.iter().map(|&i| i - 1).collect(), e.weight));
        }
        Self::from_entries(dto.n, dto.k, dto.symmetric_flag, entries)
    }

    /// Reads text or JSON depending on the extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_text(&text)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body = if path.extension().is_some_and(|e| e == "json") { self.to_json()? } else { self.to_text() };
        std::fs::write(path, body)?;
        Ok(())
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("bad field `{t}` in `{line}`"))))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    n: usize,
    k: usize,
    symmetric_flag: bool,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    indices: Vec<u32>,
    weight: i64,
}

/// Ordered-tuple tensor on `[n]^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymmetricTensorSample {
    pub n: usize,
    pub k: usize,
    idx: Vec<u32>,
    w: Vec<i64>,
}

impl AsymmetricTensorSample {
    pub fn from_entries<I>(n: usize, k: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut idx = Vec::new();
        let mut w = Vec::new();
        for (t, wt) in entries {
            if t.len() != k || t.iter().any(|&j| j as usize >= n) {
                return Err(Error::MalformedSubset(format!("{t:?} is not a tuple in [0,{n})^{k}")));
            }
            idx.extend_from_slice(&t);
            w.push(wt);
        }
        let merged = SparseSignedTensor::merge(n, k, false, idx, w);
        Ok(AsymmetricTensorSample { n, k, idx: merged.idx, w: merged.w })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], i64)> + '_ {
        self.idx.chunks_exact(self.k.max(1)).zip(self.w.iter().copied())
    }

    pub fn total_mass(&self) -> i64 {
        self.w.iter().map(|w| w.abs()).sum()
    }
}

/// Uniform k-subset of `{0..n-1}` (Floyd's algorithm), sorted.
fn random_subset(n: usize, k: usize, rng: &mut Rng, out: &mut Vec<u32>) {
    out.clear();
    for j in n - k..n {
        let t = rng.random_range(0..=j) as u32;
        if out.contains(&t) {
            out.push(j as u32);
        } else {
            out.push(t);
        }
    }
    out.sort_unstable();
}

fn flip(rng: &mut Rng, eta: f64) -> i64 {
    if eta > 0.0 && rng.random::<f64>() < eta {
        -1
    } else {
        1
    }
}

fn poisson_count(m: f64, rng: &mut Rng) -> u64 {
    if m <= 0.0 {
        0
    } else {
        Poisson::new(m).unwrap().sample(rng) as u64
    }
}

/// Poisson model: each k-subset is included Poi(q) times, q = m/C(n,k); each
/// inclusion carries sign `z_S` flipped with probability (1-ρ)/2.
///
/// Sampled as a Poi(m) total of uniform subsets, which has the same law.
pub fn sample_planted(params: &ProblemParams) -> Result<(SparseSignedTensor, SpikeVector)> {
    params.validate()?;
    let z = SpikeVector::uniform(params.n, &mut stream(params.seed, purpose::SPIKE));
    Ok((sample_planted_with_spike(params, &z)?, z))
}

/// Planted sampler with a caller-supplied spike.
pub fn sample_planted_with_spike(params: &ProblemParams, z: &SpikeVector) -> Result<SparseSignedTensor> {
    params.validate()?;
    if z.len() != params.n {
        return Err(Error::InvalidParams(format!("spike length {} != n = {}", z.len(), params.n)));
    }
    if params.q() > 1.0 {
        warn!("q = {:.3} > 1: most subsets are observed more than once", params.q());
    }
    let (n, k) = (params.n, params.k);
    let total = poisson_count(params.m_target, &mut stream(params.seed, purpose::COUNT));
    let mut subsets = stream(params.seed, purpose::SUBSETS);
    let mut signs = stream(params.seed, purpose::SIGNS);
    let eta = params.eta();
    let mut idx = Vec::with_capacity(total as usize * k);
    let mut w = Vec::with_capacity(total as usize);
    let mut buf = Vec::with_capacity(k);
    for _ in 0..total {
        random_subset(n, k, &mut subsets, &mut buf);
        w.push(z.parity(&buf) * flip(&mut signs, eta));
        idx.extend_from_slice(&buf);
    }
    Ok(SparseSignedTensor::merge(n, k, true, idx, w))
}

/// Poisson splitting: two independent planted samples with rates `ζ m` and
/// `(1−ζ) m` sharing one spike. Returns `(part_zeta, part_rest, z)`.
pub fn sample_planted_split(params: &ProblemParams, zeta: f64) -> Result<(SparseSignedTensor, SparseSignedTensor, SpikeVector)> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidParams(format!("split fraction {zeta} outside [0,1]")));
    }
    params.validate()?;
    let z = SpikeVector::uniform(params.n, &mut stream(params.seed, purpose::SPIKE));
    let part = |frac: f64, i: u64| {
        let p = ProblemParams { m_target: frac * params.m_target, seed: crate::rng::derive(params.seed, i), ..params.clone() };
        sample_planted_with_spike(&p, &z)
    };
    Ok((part(zeta, 1)?, part(1.0 - zeta, 2)?, z))
}

/// Null model (ρ = 0).
pub fn sample_random(params: &ProblemParams) -> Result<SparseSignedTensor> {
    let p = ProblemParams { rho: 0.0, ..params.clone() };
    Ok(sample_planted(&p)?.0)
}

/// Collision-free model: `round(m_target)` distinct subsets, each with a ±1 sign.
///
/// Larger `m_target` with the same seed extends the smaller sample, so sweeps over
/// the observation count see nested instances.
pub fn sample_simple(params: &ProblemParams) -> Result<(SparseSignedTensor, SpikeVector)> {
    params.validate()?;
    let (n, k) = (params.n, params.k);
    let m = params.m_target.round() as u64;
    let total = crate::combinatorics::binom_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    if m as u128 > total {
        return Err(Error::InvalidParams(format!("m = {m} exceeds C({n},{k}) = {total}")));
    }
    let z = SpikeVector::uniform(n, &mut stream(params.seed, purpose::SPIKE));
    let mut subsets = stream(params.seed, purpose::SUBSETS);
    let mut signs = stream(params.seed, purpose::SIGNS);
    let chosen = choose_distinct(total, m, &mut subsets, |rng, buf| random_subset(n, k, rng, buf), |i| {
        unrank_lex_all(n, k, i)
    });
    let eta = params.eta();
    let entries = chosen.into_iter().map(|s| {
        let w = z.parity(&s) * flip(&mut signs, eta);
        (s, w)
    });
    Ok((SparseSignedTensor::from_entries(n, k, true, entries.collect::<Vec<_>>())?, z))
}

// every subset in lexicographic order; only used for small populations
fn unrank_lex_all(n: usize, k: usize, count: u64) -> Vec<Vec<u32>> {
    let mut all = Vec::with_capacity(count as usize);
    let mut c: Vec<u32> = (0..k as u32).collect();
    loop {
        all.push(c.clone());
        if !next_combination(&mut c, n) {
            break;
        }
    }
    all
}

const ENUMERATE_CAP: u128 = 2_000_000;

fn choose_distinct<D, A>(total: u128, m: u64, rng: &mut Rng, mut draw: D, all: A) -> Vec<Vec<u32>>
where
    D: FnMut(&mut Rng, &mut Vec<u32>),
    A: FnOnce(u64) -> Vec<Vec<u32>>,
{
    if total <= ENUMERATE_CAP {
        // forward Fisher-Yates: the first m picks do not depend on m
        let mut pool = all(total as u64);
        let len = pool.len();
        for i in 0..m as usize {
            let j = rng.random_range(i..len);
            pool.swap(i, j);
        }
        pool.truncate(m as usize);
        return pool;
    }
    let mut seen = HashSet::with_capacity(m as usize);
    let mut out = Vec::with_capacity(m as usize);
    let mut buf = Vec::new();
    while (out.len() as u64) < m {
        draw(rng, &mut buf);
        if seen.insert(buf.clone()) {
            out.push(buf.clone());
        }
    }
    out
}

/// Full ordered-tuple model for boosting: every `s ∈ [n]^k` (repeats allowed)
/// included Poi(q') times with `q' = m/(k! C(n,k))`, sign `Π z_{s_i}` flipped with
/// probability (1-ρ)/2. Uses the given single spike of length `n`.
pub fn sample_full_planted(params: &ProblemParams, z: &SpikeVector) -> Result<AsymmetricTensorSample> {
    params.validate()?;
    let (n, k) = (params.n, params.k);
    if z.len() != n {
        return Err(Error::InvalidParams(format!("spike length {} != n = {n}", z.len())));
    }
    let qp = params.m_target / (crate::combinatorics::factorial_f64(k) * binom_f64(n, k));
    let mean = qp * (n as f64).powi(k as i32);
    let total = poisson_count(mean, &mut stream(params.seed, purpose::COUNT));
    let mut tuples = stream(params.seed, purpose::ASYM_TUPLES);
    let mut signs = stream(params.seed, purpose::ASYM_SIGNS);
    let eta = params.eta();
    let mut entries = Vec::with_capacity(total as usize);
    for _ in 0..total {
        let t: Vec<u32> = (0..k).map(|_| tuples.random_range(0..n as u32)).collect();
        let w = t.iter().map(|&j| z.values[j as usize] as i64).product::<i64>() * flip(&mut signs, eta);
        entries.push((t, w));
    }
    AsymmetricTensorSample::from_entries(n, k, entries)
}

/// Asymmetric planted model: independent spikes `z_1..z_k` in `{±1}^n`, ordered
/// tuples of `[n]^k` included Poi(m/n^k) times, sign `Π_i z_i[j_i]` flipped with
/// probability (1-ρ)/2. The spike is returned as one length-`k n` block vector.
pub fn sample_asymmetric_planted(params: &ProblemParams) -> Result<(AsymmetricTensorSample, SpikeVector)> {
    params.validate_asymmetric()?;
    let (n, k) = (params.n, params.k);
    let mut z = SpikeVector::uniform(n * k, &mut stream(params.seed, purpose::ASYM_SPIKE));
    z.block_size = Some(n);
    let total = poisson_count(params.m_target, &mut stream(params.seed, purpose::COUNT));
    let mut tuples = stream(params.seed, purpose::ASYM_TUPLES);
    let mut signs = stream(params.seed, purpose::ASYM_SIGNS);
    let eta = params.eta();
    let mut entries = Vec::with_capacity(total as usize);
    for _ in 0..total {
        let t: Vec<u32> = (0..k).map(|_| tuples.random_range(0..n as u32)).collect();
        let w = tuple_parity(&z, &t) * flip(&mut signs, eta);
        entries.push((t, w));
    }
    Ok((AsymmetricTensorSample::from_entries(n, k, entries)?, z))
}

/// Collision-free asymmetric model: `round(m_target)` distinct ordered tuples.
pub fn sample_asymmetric_simple(params: &ProblemParams) -> Result<(AsymmetricTensorSample, SpikeVector)> {
    params.validate_asymmetric()?;
    let (n, k) = (params.n, params.k);
    let total = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    let m = params.m_target.round() as u64;
    if m as u128 > total {
        return Err(Error::InvalidParams(format!("m = {m} exceeds n^k = {total}")));
    }
    let mut z = SpikeVector::uniform(n * k, &mut stream(params.seed, purpose::ASYM_SPIKE));
    z.block_size = Some(n);
    let mut tuples = stream(params.seed, purpose::ASYM_TUPLES);
    let mut signs = stream(params.seed, purpose::ASYM_SIGNS);
    let chosen = choose_distinct(
        total,
        m,
        &mut tuples,
        |rng, buf| {
            buf.clear();
            buf.extend((0..k).map(|_| rng.random_range(0..n as u32)));
        },
        |count| {
            (0..count)
                .map(|mut c| {
                    let mut t = vec![0u32; k];
                    for slot in t.iter_mut().rev() {
                        *slot = (c % n as u64) as u32;
                        c /= n as u64;
                    }
                    t
                })
                .collect()
        },
    );
    let eta = params.eta();
    let entries: Vec<_> = chosen
        .into_iter()
        .map(|t| {
            let w = tuple_parity(&z, &t) * flip(&mut signs, eta);
            (t, w)
        })
        .collect();
    Ok((AsymmetricTensorSample::from_entries(n, k, entries)?, z))
}

fn tuple_parity(z: &SpikeVector, t: &[u32]) -> i64 {
    let n = z.block_size.unwrap();
    t.iter().enumerate().map(|(b, &j)| z.values[b * n + j as usize] as i64).product()
}

/// Block embedding on `N = k n` variables: tuple `(j_1..j_k)` becomes the subset
/// `{(i-1) n + j_i}` with one element per block.
pub fn symmetric_embed(t: &AsymmetricTensorSample) -> SparseSignedTensor {
    let n = t.n;
    let mut idx = Vec::with_capacity(t.len() * t.k);
    let mut w = Vec::with_capacity(t.len());
    for (tuple, wt) in t.iter() {
        idx.extend(tuple.iter().enumerate().map(|(b, &j)| (b * n) as u32 + j));
        w.push(wt);
    }
    SparseSignedTensor::merge(n * t.k, t.k, false, idx, w)
}

/// Inverse of [`symmetric_embed`] for one key: the ordered tuple.
pub fn unembed_key(subset: &[u32], n: usize) -> Vec<u32> {
    subset.iter().map(|&i| i % n as u32).collect()
}

/// Number of k-subsets, used for rate bookkeeping.
pub fn subset_population(n: usize, k: usize) -> u64 {
    binom(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_one_signs_follow_spike() {
        let p = ProblemParams::new(4, 2, 2, 6.0, 1.0, 11);
        let (t, z) = sample_planted(&p).unwrap();
        for (s, w) in t.iter() {
            assert_eq!(w.signum(), z.parity(s));
        }
    }

    #[test]
    fn empty_when_m_zero() {
        let p = ProblemParams::new(20, 4, 6, 0.0, 0.5, 2);
        assert!(sample_random(&p).unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let p = ProblemParams::new(20, 4, 6, 2000.0, 0.5, 2);
        assert_eq!(sample_random(&p).unwrap(), sample_random(&p).unwrap());
        assert_ne!(sample_random(&p).unwrap(), sample_random(&ProblemParams { seed: 3, ..p }).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(5, 3, 3, 10.0, 0.5, 0).validate().is_err());
        assert!(ProblemParams::new(5, 2, 6, 10.0, 0.5, 0).validate().is_err());
        assert!(ProblemParams::new(5, 2, 2, 10.0, 1.5, 0).validate().is_err());
        assert!(sample_planted(&ProblemParams::new(5, 2, 6, 10.0, 0.5, 0)).is_err());
    }

    #[test]
    fn embed_index_arithmetic() {
        let t = AsymmetricTensorSample::from_entries(7, 4, vec![(vec![1, 0, 0, 2], 1)]).unwrap();
        let e = symmetric_embed(&t);
        // 1-based {2, 8, 15, 24}
        assert_eq!(e.subset(0), &[1, 7, 14, 23]);
        assert!(!e.symmetric);
        assert_eq!(unembed_key(e.subset(0), 7), vec![1, 0, 0, 2]);
    }

    #[test]
    fn asym_degenerate_n1() {
        let p = ProblemParams::new(1, 4, 2, 20.0, 1.0, 5);
        let (t, _) = sample_asymmetric_planted(&p).unwrap();
        assert!(t.len() <= 1);
        for (tuple, _) in t.iter() {
            assert_eq!(tuple, &[0, 0, 0, 0]);
        }
    }

    #[test]
    fn text_round_trip_small() {
        let t = SparseSignedTensor::from_entries(6, 2, true, vec![(vec![3, 1], 2), (vec![0, 5], -1)]).unwrap();
        let s = t.to_text();
        assert!(s.starts_with("6 2 1\n1 6 -1\n2 4 2\n"));
        assert_eq!(SparseSignedTensor::from_text(&s).unwrap(), t);
        assert_eq!(SparseSignedTensor::from_json(&t.to_json().unwrap()).unwrap(), t);
    }

    #[test]
    fn merge_drops_cancelled() {
        let t = SparseSignedTensor::from_entries(5, 2, true, vec![(vec![0, 1], 1), (vec![1, 0], -1), (vec![2, 3], 1)])
            .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&[2, 3]), 1);
        assert_eq!(t.get(&[0, 1]), 0);
    }

    #[test]
    fn simple_mode_is_nested() {
        let a = sample_simple(&ProblemParams::new(10, 2, 2, 10.0, 0.7, 4)).unwrap().0;
        let b = sample_simple(&ProblemParams::new(10, 2, 2, 30.0, 0.7, 4)).unwrap().0;
        assert_eq!(a.len(), 10);
        assert_eq!(b.len(), 30);
        for (s, w) in a.iter() {
            assert_eq!(b.get(s), w);
        }
    }
}
