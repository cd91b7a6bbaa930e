//! Binomials, combinadic indexing of ℓ-subsets and the closed-form Kikuchi statistics.
//!
//! Subsets are sorted slices of 0-based indices. Ranks use the colexicographic
//! order, `rank(s) = Σ_i C(s_i, i+1)`, which does not depend on `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n-k+i) is divisible by i after the multiplication
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(acc)
}

/// Exact binomial coefficient. Panics if it does not fit in `u64`.
pub fn binom(n: usize, k: usize) -> u64 {
    let v = binom_u128(n as u64, k as u64).expect("binomial overflow");
    u64::try_from(v).expect("binomial overflow")
}

/// `ln C(n, k)` by a k-term sum; `-inf` when `k > n`.
pub fn ln_binom(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut s = 0.0;
    let mut i = 1.0;
    while i <= k {
        s += ((n - k + i) / i).ln();
        i += 1.0;
    }
    s
}

pub fn binom_f64(n: usize, k: usize) -> f64 {
    ln_binom(n as f64, k as f64).exp()
}

pub fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Rank/unrank of ℓ-subsets of `{0..n-1}`.
#[derive(Clone, Debug)]
pub struct SubsetIndexer {
    pub n: usize,
    pub ell: usize,
    // table[i][j] = C(i, j), i <= n, j <= ell
    table: Vec<Vec<u64>>,
    dim: u64,
}

impl SubsetIndexer {
    pub fn new(n: usize, ell: usize) -> Self {
        let mut table = vec![vec![0u64; ell + 1]; n + 1];
        for (i, row) in table.iter_mut().enumerate() {
            row[0] = 1;
            for (j, slot) in row.iter_mut().enumerate().skip(1) {
                *slot = binom(i, j);
            }
        }
        let dim = binom(n, ell);
        SubsetIndexer { n, ell, table, dim }
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize) -> u64 {
        self.table[i][j]
    }

    pub fn rank(&self, subset: &[u32]) -> Result<u64> {
        if subset.len() != self.ell {
            return Err(Error::MalformedSubset(format!(
                "expected {} elements, got {}",
                self.ell,
                subset.len()
            )));
        }
        for (i, &s) in subset.iter().enumerate() {
            if s as usize >= self.n || (i > 0 && subset[i - 1] >= s) {
                return Err(Error::MalformedSubset(format!("{subset:?} not sorted within [0,{})", self.n)));
            }
        }
        Ok(self.rank_unchecked(subset))
    }

    #[inline]
    pub fn rank_unchecked(&self, subset: &[u32]) -> u64 {
        subset
            .iter()
            .enumerate()
            .map(|(i, &s)| self.table[s as usize][i + 1])
            .sum()
    }

    /// Rank of the subset given as a bitmask (requires `n <= 128`).
    #[inline]
    pub fn rank_mask(&self, mut mask: u128) -> u64 {
        let mut r = 0;
        let mut i = 1;
        while mask != 0 {
            let s = mask.trailing_zeros() as usize;
            r += self.table[s][i];
            i += 1;
            mask &= mask - 1;
        }
        r
    }

    pub fn unrank(&self, index: u64) -> Result<Vec<u32>> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, n: self.n, ell: self.ell, dim: self.dim });
        }
        let mut out = vec![0u32; self.ell];
        self.unrank_into(index, &mut out);
        Ok(out)
    }

    pub fn unrank_into(&self, mut index: u64, out: &mut [u32]) {
        let mut x = self.n;
        for i in (1..=self.ell).rev() {
            // largest x with C(x, i) <= index
            x -= 1;
            while self.table[x][i] > index {
                x -= 1;
            }
            out[i - 1] = x as u32;
            index -= self.table[x][i];
        }
    }

    pub fn unrank_mask(&self, index: u64) -> u128 {
        let mut buf = [0u32; 128];
        self.unrank_into(index, &mut buf[..self.ell]);
        buf[..self.ell].iter().fold(0u128, |m, &s| m | (1u128 << s))
    }
}

/// Advance `comb` (sorted, values < n) to the next combination in lexicographic
/// order. Returns false after the last one.
pub fn next_combination(comb: &mut [u32], n: usize) -> bool {
    let r = comb.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if (comb[i] as usize) < n - r + i {
            comb[i] += 1;
            for j in i + 1..r {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Calls `f` on every r-subset of `items`, in lexicographic order of positions.
pub fn for_each_subset_of<F: FnMut(&[u32])>(items: &[u32], r: usize, mut f: F) {
    if r > items.len() {
        return;
    }
    let mut pos: Vec<u32> = (0..r as u32).collect();
    let mut buf = vec![0u32; r];
    loop {
        for (b, &p) in buf.iter_mut().zip(&pos) {
            *b = items[p as usize];
        }
        f(&buf);
        if !next_combination(&mut pos, items.len()) {
            break;
        }
    }
}

pub fn mask_of(subset: &[u32]) -> u128 {
    subset.iter().fold(0u128, |m, &s| m | (1u128 << s))
}

pub fn elements_of(mut mask: u128) -> Vec<u32> {
    let mut v = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        v.push(mask.trailing_zeros());
        mask &= mask - 1;
    }
    v
}

/// Closed-form sparsity and degree quantities of the Kikuchi graph.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KikuchiStats {
    /// Fraction of ℓ-subsets adjacent to a fixed U through a fixed k-subset.
    pub delta: f64,
    /// Average degree `m * delta`.
    pub d: f64,
    /// Degree of the dense Kikuchi graph, `C(n-ℓ, k/2) C(ℓ, k/2)`.
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    /// Number of undirected edges, `m C(n-k, ℓ-k/2) C(k, k/2) / 2`.
    #[serde(rename = "E")]
    pub edges: f64,
    /// Block-embedded analogues (for `N = k n`, `c = ℓ/k` per block); NaN when ℓ is not a multiple of k.
    pub delta_s: f64,
    pub d_s: f64,
    pub big_delta_s_max: f64,
    pub ln_dim: f64,
}

pub fn kikuchi_stats(n: usize, k: usize, ell: usize, m: f64) -> KikuchiStats {
    let h = (k / 2) as f64;
    let (nf, kf, lf) = (n as f64, k as f64, ell as f64);
    let ln_ck = ln_binom(kf, h);
    let ln_delta = ln_binom(nf - kf, lf - h) + ln_ck - ln_binom(nf, lf);
    let delta = ln_delta.exp();
    let big_delta = (ln_binom(nf - lf, h) + ln_binom(lf, h)).exp();
    let edges = 0.5 * m * (ln_binom(nf - kf, lf - h) + ln_ck).exp();
    let (delta_s, big_delta_s_max) = if ell.is_multiple_of(k) && k > 0 {
        // n here is the per-block size of the embedded tensor
        let c = lf / kf;
        let ln_num = ln_ck + h * c.ln() + h * (nf - c).ln();
        ((ln_num - kf * nf.ln()).exp(), ln_num.exp())
    } else {
        (f64::NAN, f64::NAN)
    };
    KikuchiStats {
        delta,
        d: m * delta,
        big_delta,
        edges,
        delta_s,
        d_s: m * delta_s,
        big_delta_s_max,
        ln_dim: ln_binom(nf, lf),
    }
}

/// Eberlein polynomial `λ_r(n, ℓ, i) = Σ_j (-1)^j C(r,j) C(ℓ-r, i-j) C(n-ℓ-r, i-j)`:
/// eigenvalue of the distance-i Johnson graph J(n, ℓ) on eigenspace r.
pub fn eberlein(n: usize, ell: usize, i: usize, r: usize) -> f64 {
    eberlein_exact(n, ell, i, r) as f64
}

pub fn eberlein_exact(n: usize, ell: usize, i: usize, r: usize) -> i128 {
    let c = |a: i64, b: i64| -> i128 {
        if a < 0 || b < 0 || b > a {
            0
        } else {
            binom_u128(a as u64, b as u64).unwrap() as i128
        }
    };
    let (n, ell, i, r) = (n as i64, ell as i64, i as i64, r as i64);
    (0..=i)
        .map(|j| {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * c(r, j) * c(ell - r, i - j) * c(n - ell - r, i - j)
        })
        .sum()
}

/// Dimension of eigenspace r of the Johnson scheme, `C(n,r) - C(n,r-1)`.
pub fn johnson_multiplicity(n: usize, r: usize) -> u64 {
    binom(n, r) - if r == 0 { 0 } else { binom(n, r - 1) }
}

/// Upper bound `C(k,k/2) (ℓ/n)^{k/2}` on δ.
pub fn delta_upper_bound(n: usize, k: usize, ell: usize) -> f64 {
    binom_f64(k, k / 2) * (ell as f64 / n as f64).powi((k / 2) as i32)
}
