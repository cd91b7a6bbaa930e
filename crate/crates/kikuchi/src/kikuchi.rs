//! The Kikuchi operator: `K[U,V] = T_{UΔV}` for ℓ-subsets U, V with `|UΔV| = k`
//! and `UΔV` observed.
//!
//! Three representations share one interface:
//! * `Explicit`: CSR matrix over ranked ℓ-subsets.
//! * `Implicit`: per-entry enumeration of the pairs (U, V) at every matvec.
//! * `Factored`: writes U = A ∪ W, V = B ∪ W with |A| = |B| = k/2, so that
//!   `y[A,·] += T_{A∪B} x[B,·]` becomes contiguous row updates over W.

use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::combinatorics::{binom_u128, for_each_subset_of, mask_of, next_combination, SubsetIndexer};
use crate::error::{Error, Result};
use crate::linalg::{Csr, LinearOperator};
use crate::model::{SparseSignedTensor, SpikeVector};
use crate::scalar::Scalar;

pub const EXPLICIT_DIM_CAP: u64 = 200_000;
pub const EXPLICIT_NNZ_CAP: u64 = 20_000_000;
/// Largest basis an implicit operator will accept (vectors must fit in memory).
pub const HARD_DIM_CAP: u64 = 100_000_000;
const FACTORED_TABLE_CAP: u64 = 60_000_000;
/// Auto picks the factored form over CSR when its dense per-matvec work is at
/// most this multiple of the CSR nonzero count.
const FACTORED_WORK_RATIO: u128 = 4;
const CHUNK: usize = 256;
const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Auto,
    Explicit,
    Implicit,
    Factored,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub mode: Mode,
    pub explicit_dim_cap: u64,
    pub explicit_nnz_cap: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { mode: Mode::Auto, explicit_dim_cap: EXPLICIT_DIM_CAP, explicit_nnz_cap: EXPLICIT_NNZ_CAP }
    }
}

pub struct KikuchiOperator {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub dim: usize,
    /// Whether the source tensor is natively symmetric (vs block embedded).
    pub symmetric_source: bool,
    ix: SubsetIndexer,
    entries: Vec<(u128, f64)>,
    repr: Repr,
    sigma: OnceLock<Vec<u32>>,
}

enum Repr {
    Explicit(Csr),
    Implicit,
    Factored(Factored),
}

struct Factored {
    nh: usize,
    nr: usize,
    // table[a * nr + w] = rank(A ∪ W), NONE when A and W intersect
    table: Vec<u32>,
    m: Csr,
    rows: Vec<u32>,
}

impl KikuchiOperator {
    pub fn build(t: &SparseSignedTensor, ell: usize) -> Result<Self> {
        Self::build_with(t, ell, &BuildOptions::default())
    }

    pub fn build_with(t: &SparseSignedTensor, ell: usize, opts: &BuildOptions) -> Result<Self> {
        let (n, k) = (t.n, t.k);
        if k % 2 != 0 || ell > n || ell < k / 2 {
            return Err(Error::InvalidParams(format!("need even k, k/2 <= ell <= n (n={n}, k={k}, ell={ell})")));
        }
        if n > 128 {
            return Err(Error::InvalidParams(format!("n = {n} > 128 not supported by the subset masks")));
        }
        let dim = binom_u128(n as u64, ell as u64).unwrap_or(u128::MAX);
        if dim > HARD_DIM_CAP as u128 {
            return Err(Error::DimensionCap { dim: dim.min(u64::MAX as u128) as u64, cap: HARD_DIM_CAP });
        }
        let dim = dim as u64;
        let h = k / 2;
        let per_entry = binom_u128(k as u64, h as u64).unwrap() * binom_u128((n - k) as u64, (ell - h) as u64).unwrap();
        let nnz = per_entry * t.len() as u128;
        let table = binom_u128(n as u64, h as u64).unwrap() * binom_u128(n as u64, (ell - h) as u64).unwrap();
        let factored_work = table + binom_u128(k as u64, h as u64).unwrap() * t.len() as u128 * binom_u128(n as u64, (ell - h) as u64).unwrap();
        let factored_ok = table <= FACTORED_TABLE_CAP as u128;
        let mode = match opts.mode {
            Mode::Auto if factored_ok && factored_work <= FACTORED_WORK_RATIO * nnz => Mode::Factored,
            Mode::Auto if dim <= opts.explicit_dim_cap && nnz <= opts.explicit_nnz_cap as u128 => Mode::Explicit,
            Mode::Auto if factored_ok => Mode::Factored,
            Mode::Auto => Mode::Implicit,
            Mode::Explicit if dim > opts.explicit_dim_cap => {
                return Err(Error::DimensionCap { dim, cap: opts.explicit_dim_cap });
            }
            m => m,
        };
        let ix = SubsetIndexer::new(n, ell);
        let entries: Vec<(u128, f64)> = t.iter().map(|(s, w)| (mask_of(s), w as f64)).collect();
        let mut op = KikuchiOperator {
            n,
            k,
            ell,
            dim: dim as usize,
            symmetric_source: t.symmetric,
            ix,
            entries,
            repr: Repr::Implicit,
            sigma: OnceLock::new(),
        };
        op.repr = match mode {
            Mode::Explicit => {
                let mut trip = Vec::with_capacity(nnz as usize);
                for &(s, w) in &op.entries {
                    op.for_each_pair(s, |u, v| trip.push((u as u32, v as u32, w)));
                }
                Repr::Explicit(Csr::from_triplets(op.dim, trip))
            }
            Mode::Factored => Repr::Factored(op.factor()),
            _ => Repr::Implicit,
        };
        Ok(op)
    }

    pub fn mode(&self) -> Mode {
        match self.repr {
            Repr::Explicit(_) => Mode::Explicit,
            Repr::Implicit => Mode::Implicit,
            Repr::Factored(_) => Mode::Factored,
        }
    }

    pub fn indexer(&self) -> &SubsetIndexer {
        &self.ix
    }

    pub fn explicit(&self) -> Option<&Csr> {
        match &self.repr {
            Repr::Explicit(c) => Some(c),
            _ => None,
        }
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    /// Calls `f(rank U, rank V)` for every ordered pair with `UΔV = S`.
    fn for_each_pair<F: FnMut(u64, u64)>(&self, s: u128, mut f: F) {
        let h = self.k / 2;
        let r = self.ell - h;
        let elems = crate::combinatorics::elements_of(s);
        let comp: Vec<u32> = (0..self.n as u32).filter(|&i| s >> i & 1 == 0).collect();
        let mut splits = Vec::new();
        for_each_subset_of(&elems, h, |a| {
            let ma = mask_of(a);
            splits.push((ma, s & !ma));
        });
        if r > comp.len() {
            return;
        }
        let mut pos: Vec<u32> = (0..r as u32).collect();
        loop {
            let mw = pos.iter().fold(0u128, |m, &p| m | 1u128 << comp[p as usize]);
            for &(ma, mb) in &splits {
                f(self.ix.rank_mask(ma | mw), self.ix.rank_mask(mb | mw));
            }
            if !next_combination(&mut pos, comp.len()) {
                break;
            }
        }
    }

    fn factor(&self) -> Factored {
        let h = self.k / 2;
        let r = self.ell - h;
        let ixh = SubsetIndexer::new(self.n, h);
        let ixr = SubsetIndexer::new(self.n, r);
        let (nh, nr) = (ixh.dim() as usize, ixr.dim() as usize);
        let half_masks: Vec<u128> = (0..nh as u64).map(|a| ixh.unrank_mask(a)).collect();
        let mut table = vec![NONE; nh * nr];
        table.par_chunks_mut(nr).enumerate().for_each(|(a, row)| {
            let ma = half_masks[a];
            for (w, slot) in row.iter_mut().enumerate() {
                let mw = ixr.unrank_mask(w as u64);
                if ma & mw == 0 {
                    *slot = self.ix.rank_mask(ma | mw) as u32;
                }
            }
        });
        let mut trip = Vec::new();
        for &(s, wt) in &self.entries {
            let elems = crate::combinatorics::elements_of(s);
            for_each_subset_of(&elems, h, |a| {
                let ma = mask_of(a);
                trip.push((ixh.rank_mask(ma) as u32, ixh.rank_mask(s & !ma) as u32, wt));
            });
        }
        let m = Csr::from_triplets(nh, trip);
        let rows = (0..nh as u32).filter(|&a| m.row_ptr[a as usize + 1] > m.row_ptr[a as usize]).collect();
        Factored { nh, nr, table, m, rows }
    }

    /// Per-column nonzero count σ(U).
    pub fn column_sparsity(&self) -> &[u32] {
        self.sigma.get_or_init(|| match &self.repr {
            Repr::Explicit(c) => (0..self.dim).map(|i| (c.row_ptr[i + 1] - c.row_ptr[i]) as u32).collect(),
            Repr::Factored(f) => {
                let mut sigma = vec![0u32; self.dim];
                for &a in &f.rows {
                    let ta = &f.table[a as usize * f.nr..(a as usize + 1) * f.nr];
                    for (b, _) in f.m.row(a as usize) {
                        let tb = &f.table[b as usize * f.nr..(b as usize + 1) * f.nr];
                        for (&u, &v) in ta.iter().zip(tb) {
                            if u != NONE && v != NONE {
                                sigma[u as usize] += 1;
                            }
                        }
                    }
                }
                sigma
            }
            Repr::Implicit => {
                let mut sigma = vec![0u32; self.dim];
                for &(s, _) in &self.entries {
                    self.for_each_pair(s, |u, _| sigma[u as usize] += 1);
                }
                sigma
            }
        })
    }

    pub fn d_max(&self) -> u32 {
        self.column_sparsity().iter().copied().max().unwrap_or(0)
    }

    /// Entry `K[U,V]` by ranks.
    pub fn entry(&self, u: usize, v: usize) -> f64 {
        if let Repr::Explicit(c) = &self.repr {
            return c.get(u, v);
        }
        let mu = self.ix.unrank_mask(u as u64);
        let mv = self.ix.unrank_mask(v as u64);
        let s = mu ^ mv;
        if s.count_ones() as usize != self.k || (mu & s).count_ones() as usize != self.k / 2 {
            return 0.0;
        }
        self.entries
            .binary_search_by(|&(m, _)| {
                // entries are sorted lexicographically by sorted index lists
                crate::combinatorics::elements_of(m).cmp(&crate::combinatorics::elements_of(s))
            })
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn matvec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        self.apply(x, &mut y);
        y
    }

    fn apply_implicit<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        y.fill(T::zero());
        for &(s, w) in &self.entries {
            let w = T::of(w);
            self.for_each_pair(s, |u, v| y[u as usize] += w * x[v as usize]);
        }
    }

    fn apply_factored<T: Scalar>(&self, f: &Factored, x: &[T], y: &mut [T]) {
        let vals: Vec<T> = f.m.val.iter().map(|&v| T::of(v)).collect();
        let nchunks = f.nr.div_ceil(CHUNK);
        let threads = rayon::current_num_threads().max(1).min(nchunks.max(1));
        let per = nchunks.div_ceil(threads.max(1));
        let work = |c0: usize, c1: usize, out: &mut [T]| {
            let mut xb = vec![T::zero(); f.nh * CHUNK];
            let mut yb = vec![T::zero(); f.nh * CHUNK];
            for c in c0..c1 {
                let w0 = c * CHUNK;
                let len = CHUNK.min(f.nr - w0);
                for b in 0..f.nh {
                    let t = &f.table[b * f.nr + w0..b * f.nr + w0 + len];
                    let xr = &mut xb[b * CHUNK..b * CHUNK + len];
                    for (xi, &u) in xr.iter_mut().zip(t) {
                        *xi = if u == NONE { T::zero() } else { x[u as usize] };
                    }
                }
                for &a in &f.rows {
                    let a = a as usize;
                    let (yrow, _) = yb[a * CHUNK..].split_at_mut(len);
                    yrow.fill(T::zero());
                    for p in f.m.row_ptr[a]..f.m.row_ptr[a + 1] {
                        let b = f.m.col[p] as usize;
                        let wv = vals[p];
                        let xr = &xb[b * CHUNK..b * CHUNK + len];
                        for (yi, &xi) in yrow.iter_mut().zip(xr) {
                            *yi += wv * xi;
                        }
                    }
                    let t = &f.table[a * f.nr + w0..a * f.nr + w0 + len];
                    for (&u, &yi) in t.iter().zip(yrow.iter()) {
                        if u != NONE {
                            out[u as usize] += yi;
                        }
                    }
                }
            }
        };
        y.fill(T::zero());
        if threads <= 1 {
            work(0, nchunks, y);
            return;
        }
        let partials: Vec<Vec<T>> = (0..threads)
            .into_par_iter()
            .map(|t| {
                let mut out = vec![T::zero(); self.dim];
                work(t * per, ((t + 1) * per).min(nchunks), &mut out);
                out
            })
            .collect();
        for p in partials {
            for (yi, pi) in y.iter_mut().zip(p) {
                *yi += pi;
            }
        }
    }

    /// Writes nonzeros as `row col value` lines (0-based ranks).
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        match &self.repr {
            Repr::Explicit(c) => {
                for i in 0..self.dim {
                    for (j, v) in c.row(i) {
                        writeln!(out, "{i} {j} {v}")?;
                    }
                }
            }
            _ => {
                let mut trip = Vec::new();
                for &(s, w) in &self.entries {
                    self.for_each_pair(s, |u, v| trip.push((u, v, w)));
                }
                trip.sort_unstable_by_key(|&(u, v, _)| (u, v));
                for (u, v, w) in trip {
                    writeln!(out, "{u} {v} {w}")?;
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> LinearOperator<T> for KikuchiOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        match &self.repr {
            Repr::Explicit(c) => c.apply(x, y),
            Repr::Implicit => self.apply_implicit(x, y),
            Repr::Factored(f) => self.apply_factored(f, x, y),
        }
    }
}

/// `⟨x|K|x⟩`.
pub fn quadratic_form<T: Scalar>(op: &KikuchiOperator, x: &[T]) -> T {
    crate::linalg::dot(x, &op.matvec(x))
}

/// Normalised `z^{⊙ℓ}`: `x_U = z_U / √C(n,ℓ)`.
pub fn spike_lift(z: &SpikeVector, ell: usize) -> Vec<f64> {
    let ix = SubsetIndexer::new(z.len(), ell);
    let norm = (ix.dim() as f64).sqrt();
    let mut buf = vec![0u32; ell];
    (0..ix.dim())
        .map(|i| {
            ix.unrank_into(i, &mut buf);
            z.parity(&buf) as f64 / norm
        })
        .collect()
}

/// Whether an ℓ-subset of `[k n]` has exactly `ℓ/k` elements in every block.
pub fn is_valid_index(subset: &[u32], block: usize, k: usize) -> bool {
    let c = subset.len() / k;
    if c * k != subset.len() {
        return false;
    }
    let mut counts = vec![0usize; k];
    for &i in subset {
        counts[i as usize / block] += 1;
    }
    counts.iter().all(|&x| x == c)
}

/// `|z̃⟩ = C(n,c)^{-k/2} Σ_{U valid} z_U |U⟩` over the full `C(kn, ℓ)` basis.
pub fn spike_lift_embedded(z: &SpikeVector, ell: usize) -> Vec<f64> {
    let block = z.block_size.expect("block spike required");
    let k = z.num_blocks();
    let c = ell / k;
    let ix = SubsetIndexer::new(z.len(), ell);
    let norm = (crate::combinatorics::binom(block, c) as f64).powf(k as f64 / 2.0);
    let mut buf = vec![0u32; ell];
    (0..ix.dim())
        .map(|i| {
            ix.unrank_into(i, &mut buf);
            if is_valid_index(&buf, block, k) {
                z.parity(&buf) as f64 / norm
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(n: usize, k: usize, s: Vec<u32>, w: i64) -> SparseSignedTensor {
        SparseSignedTensor::from_entries(n, k, true, vec![(s, w)]).unwrap()
    }

    #[test]
    fn empty_tensor_is_zero() {
        let op = KikuchiOperator::build(&SparseSignedTensor::empty(6, 2), 2).unwrap();
        assert_eq!(op.matvec(&[1.0f64; 15]), vec![0.0; 15]);
        assert_eq!(op.d_max(), 0);
    }

    #[test]
    fn modes_agree_small() {
        let t = SparseSignedTensor::from_entries(
            7,
            2,
            true,
            vec![(vec![0, 1], 1), (vec![2, 5], -2), (vec![3, 6], 1), (vec![1, 4], -1)],
        )
        .unwrap();
        let x: Vec<f64> = (0..35).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let mut ys = vec![];
        for mode in [Mode::Explicit, Mode::Implicit, Mode::Factored] {
            let op = KikuchiOperator::build_with(&t, 3, &BuildOptions { mode, ..Default::default() }).unwrap();
            assert_eq!(op.mode(), mode);
            ys.push((op.matvec(&x), op.column_sparsity().to_vec()));
        }
        assert_eq!(ys[0], ys[1]);
        assert_eq!(ys[0], ys[2]);
    }

    #[test]
    fn single_entry_n4() {
        let op = KikuchiOperator::build(&single(4, 2, vec![0, 1], 1), 2).unwrap();
        let ix = op.indexer();
        let r = |a: u32, b: u32| ix.rank(&[a, b]).unwrap() as usize;
        let c = op.explicit().unwrap();
        assert_eq!(c.nnz(), 4);
        assert_eq!(c.get(r(0, 2), r(1, 2)), 1.0);
        assert_eq!(c.get(r(1, 2), r(0, 2)), 1.0);
        assert_eq!(c.get(r(0, 3), r(1, 3)), 1.0);
        assert_eq!(op.entry(r(1, 3), r(0, 3)), 1.0);
    }

    #[test]
    fn embedded_lift_support() {
        let mut z = SpikeVector::new(vec![1, -1, 1, 1, -1, 1, -1, -1, 1, 1]);
        z.block_size = Some(5);
        let v = spike_lift_embedded(&z, 4);
        assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 100);
        assert!((crate::linalg::norm(&v) - 1.0).abs() < 1e-14);
    }
}
