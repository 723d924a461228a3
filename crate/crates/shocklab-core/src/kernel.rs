//! Structured-grid kernel: the grid, high-order finite-difference stencils,
//! bit-reproducible reductions, and a high-order low-pass filter.
//!
//! Layout contract, shared with the snapshot format: a scalar field is a flat
//! `Vec<f64>` of length `n1·n2·n3` with x³ fastest, i.e. the cell (i1, i2, i3)
//! lives at index `(i1·n2 + i2)·n3 + i3`.
//!
//! The x¹ axis is an interval with endpoints included and one-sided stencils
//! at the edges; x² and x³ are periodic (tori of length 1 by default).  An
//! axis of extent 1 is *degenerate*: derivatives along it are identically
//! zero, which is how plane-symmetric (1D) runs reuse the full 3D code path.
//!
//! Stencil weights are generated with Fornberg's algorithm, so every
//! interior/boundary/order combination comes from one code path.  Interior
//! first derivatives at order p use the classical centered (p+1)-point rules;
//! the x¹ edge rows use biased (p+1)-point rules of the same order (for the
//! second derivative, (p+2)-point).
//!
//! Reductions are *fixed-tree*: the array is cut into fixed 4096-element
//! blocks, each block is summed serially, blocks may be processed in
//! parallel, and the block results are folded in block order.  The result is
//! bitwise independent of the number of worker threads.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Supported interior stencil orders.
pub const SUPPORTED_ORDERS: [usize; 3] = [2, 4, 6];

const REDUCE_BLOCK: usize = 4096;

/// Structured grid: x¹ an interval with endpoints, x²/x³ periodic tori.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub x1_min: f64,
    pub x1_max: f64,
    /// Torus circumferences for the periodic axes.
    pub len2: f64,
    pub len3: f64,
    /// Interior stencil order (2, 4, or 6).
    pub order: usize,
    #[serde(skip)]
    tables: Option<StencilTables>,
}

impl Grid {
    /// Build a grid and pre-generate its stencil tables.
    ///
    /// `n2`/`n3` must either both be 1 (degenerate plane mode) or both be at
    /// least `4·order`; `n1` must be at least `4·order`.
    pub fn new(
        n1: usize,
        n2: usize,
        n3: usize,
        x1_min: f64,
        x1_max: f64,
        order: usize,
    ) -> Result<Self> {
        if !SUPPORTED_ORDERS.contains(&order) {
            return Err(Error::Grid(format!(
                "stencil order must be one of {SUPPORTED_ORDERS:?}, got {order}"
            )));
        }
        if !(x1_max > x1_min) {
            return Err(Error::Grid(format!(
                "x1 extent is empty: [{x1_min}, {x1_max}]"
            )));
        }
        if n1 < 4 * order {
            return Err(Error::Grid(format!(
                "n1 = {n1} too small for order {order} (need at least {})",
                4 * order
            )));
        }
        let degenerate = n2 == 1 && n3 == 1;
        if !degenerate && (n2 < 4 * order || n3 < 4 * order) {
            return Err(Error::Grid(format!(
                "transverse extents n2 = {n2}, n3 = {n3} must both be 1 (plane mode) \
                 or both at least 4·order = {}",
                4 * order
            )));
        }
        let mut grid = Self {
            n1,
            n2,
            n3,
            x1_min,
            x1_max,
            len2: 1.0,
            len3: 1.0,
            order,
            tables: None,
        };
        grid.tables = Some(StencilTables::build(&grid));
        Ok(grid)
    }

    /// Rebuild stencil tables (needed after deserialization).
    pub fn rebuild_tables(&mut self) {
        self.tables = Some(StencilTables::build(self));
    }

    fn tables(&self) -> &StencilTables {
        self.tables
            .as_ref()
            .expect("grid stencil tables missing; call rebuild_tables() after deserializing")
    }

    pub fn cells(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn alloc(&self) -> Vec<f64> {
        vec![0.0; self.cells()]
    }

    /// Grid spacing along `axis` (0, 1, 2).
    pub fn h(&self, axis: usize) -> f64 {
        match axis {
            0 => (self.x1_max - self.x1_min) / (self.n1 - 1) as f64,
            1 => self.len2 / self.n2 as f64,
            2 => self.len3 / self.n3 as f64,
            _ => panic!("axis out of range"),
        }
    }

    /// Smallest spacing among non-degenerate axes (time-step control).
    pub fn h_min(&self) -> f64 {
        let mut h = self.h(0);
        if self.n2 > 1 {
            h = h.min(self.h(1));
        }
        if self.n3 > 1 {
            h = h.min(self.h(2));
        }
        h
    }

    pub fn x1(&self, i1: usize) -> f64 {
        self.x1_min + self.h(0) * i1 as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        self.h(1) * i2 as f64
    }

    pub fn x3(&self, i3: usize) -> f64 {
        self.h(2) * i3 as f64
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n2 + i2) * self.n3 + i3
    }

    /// Evaluate `f(x1, x2, x3)` at every grid point.
    pub fn sample<Func: Fn(f64, f64, f64) -> f64 + Sync>(&self, f: Func) -> Vec<f64> {
        let mut out = self.alloc();
        let n2 = self.n2;
        let n3 = self.n3;
        out.par_chunks_mut(n2 * n3).enumerate().for_each(|(i1, slab)| {
            let x1 = self.x1(i1);
            for i2 in 0..n2 {
                let x2 = self.x2(i2);
                for i3 in 0..n3 {
                    slab[i2 * n3 + i3] = f(x1, x2, self.x3(i3));
                }
            }
        });
        out
    }

    /// First derivative along `axis` of `f` into `out`.
    pub fn ddx(&self, f: &[f64], axis: usize, out: &mut [f64]) {
        self.apply_stencil(f, axis, 1, out);
    }

    /// Second derivative along `axis` of `f` into `out`.
    pub fn d2dx(&self, f: &[f64], axis: usize, out: &mut [f64]) {
        self.apply_stencil(f, axis, 2, out);
    }

    pub fn ddx_alloc(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut out = self.alloc();
        self.ddx(f, axis, &mut out);
        out
    }

    fn apply_stencil(&self, f: &[f64], axis: usize, m: usize, out: &mut [f64]) {
        assert_eq!(f.len(), self.cells());
        assert_eq!(out.len(), self.cells());
        let n = match axis {
            0 => self.n1,
            1 => self.n2,
            2 => self.n3,
            _ => panic!("axis out of range"),
        };
        if n == 1 {
            out.fill(0.0);
            return;
        }
        let tables = self.tables();
        match axis {
            0 => self.apply_x1(f, m, out),
            1 => self.apply_periodic_x2(f, tables.periodic(m, 1), out),
            2 => self.apply_periodic_x3(f, tables.periodic(m, 2), out),
            _ => unreachable!(),
        }
    }

    fn apply_x1(&self, f: &[f64], m: usize, out: &mut [f64]) {
        let rows = &self.tables().x1_rows[m - 1];
        let slab = self.n2 * self.n3;
        out.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
            let (base, weights) = rows.row(i1, self.n1);
            dst.fill(0.0);
            for (k, &w) in weights.iter().enumerate() {
                let src = &f[(base + k) * slab..(base + k + 1) * slab];
                for (d, &s) in dst.iter_mut().zip(src.iter()) {
                    *d += w * s;
                }
            }
        });
    }

    fn apply_periodic_x2(&self, f: &[f64], stencil: &CenteredStencil, out: &mut [f64]) {
        let n2 = self.n2;
        let n3 = self.n3;
        let slab = n2 * n3;
        out.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
            let fslab = &f[i1 * slab..(i1 + 1) * slab];
            dst.fill(0.0);
            for (off, &w) in stencil.offsets.iter().zip(stencil.weights.iter()) {
                for i2 in 0..n2 {
                    let j2 = wrap(i2 as isize + off, n2);
                    let src = &fslab[j2 * n3..(j2 + 1) * n3];
                    let drow = &mut dst[i2 * n3..(i2 + 1) * n3];
                    for (d, &s) in drow.iter_mut().zip(src.iter()) {
                        *d += w * s;
                    }
                }
            }
        });
    }

    fn apply_periodic_x3(&self, f: &[f64], stencil: &CenteredStencil, out: &mut [f64]) {
        let n3 = self.n3;
        let slab = self.n2 * n3;
        out.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
            let fslab = &f[i1 * slab..(i1 + 1) * slab];
            for i2 in 0..self.n2 {
                let row = &fslab[i2 * n3..(i2 + 1) * n3];
                let drow = &mut dst[i2 * n3..(i2 + 1) * n3];
                for (i3, d) in drow.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (off, &w) in stencil.offsets.iter().zip(stencil.weights.iter()) {
                        acc += w * row[wrap(i3 as isize + off, n3)];
                    }
                    *d = acc;
                }
            }
        });
    }

    /// Euclidean gradient: (∂₁f, ∂₂f, ∂₃f).
    pub fn grad(&self, f: &[f64]) -> [Vec<f64>; 3] {
        let mut g = [self.alloc(), self.alloc(), self.alloc()];
        self.ddx(f, 0, &mut g[0]);
        self.ddx(f, 1, &mut g[1]);
        self.ddx(f, 2, &mut g[2]);
        g
    }

    /// Euclidean divergence of a vector field.
    pub fn div(&self, v: [&[f64]; 3]) -> Vec<f64> {
        let mut out = self.alloc();
        let mut tmp = self.alloc();
        self.ddx(v[0], 0, &mut out);
        self.ddx(v[1], 1, &mut tmp);
        add_assign(&mut out, &tmp);
        self.ddx(v[2], 2, &mut tmp);
        add_assign(&mut out, &tmp);
        out
    }

    /// Euclidean curl of a vector field (ε₁₂₃ = +1).
    pub fn curl(&self, v: [&[f64]; 3]) -> [Vec<f64>; 3] {
        let mut out = [self.alloc(), self.alloc(), self.alloc()];
        let mut tmp = self.alloc();
        // (curl v)¹ = ∂₂v³ − ∂₃v²
        self.ddx(v[2], 1, &mut out[0]);
        self.ddx(v[1], 2, &mut tmp);
        sub_assign(&mut out[0], &tmp);
        // (curl v)² = ∂₃v¹ − ∂₁v³
        self.ddx(v[0], 2, &mut out[1]);
        self.ddx(v[2], 0, &mut tmp);
        sub_assign(&mut out[1], &tmp);
        // (curl v)³ = ∂₁v² − ∂₂v¹
        self.ddx(v[1], 0, &mut out[2]);
        self.ddx(v[0], 1, &mut tmp);
        sub_assign(&mut out[2], &tmp);
        out
    }

    /// Apply the 8th-order binomial low-pass filter with strength `coeff`
    /// (0 disables, 1 removes the odd–even mode entirely) along every
    /// non-degenerate axis.  The x¹ edge rows (4 on each side) are left
    /// untouched; the periodic axes wrap.
    pub fn filter(&self, f: &mut [f64], coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        const C8: [f64; 9] = [1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0];
        let scale = coeff / 256.0;
        let slab = self.n2 * self.n3;
        let n1 = self.n1;
        let n2 = self.n2;
        let n3 = self.n3;

        if n1 >= 9 {
            let src = f.to_vec();
            f.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
                if i1 < 4 || i1 + 4 >= n1 {
                    return;
                }
                for (j, d) in dst.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &w) in C8.iter().enumerate() {
                        acc += w * src[(i1 + k - 4) * slab + j];
                    }
                    *d -= scale * acc;
                }
            });
        }
        if n2 >= 9 {
            let src = f.to_vec();
            f.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
                let s = &src[i1 * slab..(i1 + 1) * slab];
                for i2 in 0..n2 {
                    for i3 in 0..n3 {
                        let mut acc = 0.0;
                        for (k, &w) in C8.iter().enumerate() {
                            let j2 = wrap(i2 as isize + k as isize - 4, n2);
                            acc += w * s[j2 * n3 + i3];
                        }
                        dst[i2 * n3 + i3] -= scale * acc;
                    }
                }
            });
        }
        if n3 >= 9 {
            let src = f.to_vec();
            f.par_chunks_mut(slab).enumerate().for_each(|(i1, dst)| {
                let s = &src[i1 * slab..(i1 + 1) * slab];
                for i2 in 0..n2 {
                    let row = &s[i2 * n3..(i2 + 1) * n3];
                    let drow = &mut dst[i2 * n3..(i2 + 1) * n3];
                    for (i3, d) in drow.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (k, &w) in C8.iter().enumerate() {
                            acc += w * row[wrap(i3 as isize + k as isize - 4, n3)];
                        }
                        *d -= scale * acc;
                    }
                }
            });
        }
    }

    /// Indices of the x¹ rows unaffected by the widest boundary stencil bias,
    /// used when residual tables must exclude one-sided-stencil rows.
    pub fn interior_x1(&self, margin_factor: usize) -> std::ops::Range<usize> {
        let m = (self.order / 2 + 1) * margin_factor;
        m..self.n1.saturating_sub(m)
    }
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    let n = n as isize;
    (((i % n) + n) % n) as usize
}

pub fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, &y) in a.iter_mut().zip(b.iter()) {
        *x += y;
    }
}

pub fn sub_assign(a: &mut [f64], b: &[f64]) {
    for (x, &y) in a.iter_mut().zip(b.iter()) {
        *x -= y;
    }
}

pub fn scale_assign(a: &mut [f64], c: f64) {
    for x in a.iter_mut() {
        *x *= c;
    }
}

// ---------------------------------------------------------------------------
// Stencil generation
// ---------------------------------------------------------------------------

/// Finite-difference weights at evaluation point `z` from nodes `x` for the
/// m-th derivative (Fornberg's recursive algorithm).
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0_f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

#[derive(Debug, Clone)]
struct CenteredStencil {
    offsets: Vec<isize>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
struct X1Rows {
    /// Biased stencils for rows 0..half (weights over nodes base..base+len).
    lo: Vec<Vec<f64>>,
    /// Centered interior weights (node base = i1 - half).
    interior: Vec<f64>,
    /// Biased stencils for the top rows, node base = n1 - len.
    hi: Vec<Vec<f64>>,
    half: usize,
}

impl X1Rows {
    fn row(&self, i1: usize, n1: usize) -> (usize, &[f64]) {
        if i1 < self.half {
            (0, &self.lo[i1])
        } else if i1 + self.half >= n1 {
            let k = i1 + self.hi.len() - n1;
            (n1 - self.hi[k].len(), &self.hi[k])
        } else {
            (i1 - self.half, &self.interior)
        }
    }
}

#[derive(Debug, Clone)]
struct StencilTables {
    /// x¹ row stencils for m = 1, 2 (index m-1).
    x1_rows: [X1Rows; 2],
    /// Periodic centered stencils for m = 1, 2 per axis 1, 2.
    periodic_x2: [CenteredStencil; 2],
    periodic_x3: [CenteredStencil; 2],
}

impl StencilTables {
    fn build(grid: &Grid) -> Self {
        let p = grid.order;
        let half = p / 2;
        let build_x1 = |m: usize| -> X1Rows {
            let h = grid.h(0);
            let hm = h.powi(m as i32);
            // Boundary stencils use p+m nodes so the one-sided rules keep
            // order p for both the first and second derivative.
            let n_nodes = p + m;
            let nodes: Vec<f64> = (0..n_nodes).map(|k| k as f64).collect();
            let lo: Vec<Vec<f64>> = (0..half)
                .map(|i| {
                    fd_weights(i as f64, &nodes, m)
                        .into_iter()
                        .map(|w| w / hm)
                        .collect()
                })
                .collect();
            let hi: Vec<Vec<f64>> = (0..half)
                .map(|i| {
                    // Row n1 - half + i evaluated inside the top node block.
                    let z = (n_nodes - half + i - 1) as f64 + 1.0;
                    fd_weights(z - 0.0, &nodes, m)
                        .into_iter()
                        .map(|w| w / hm)
                        .collect()
                })
                .collect();
            let cnodes: Vec<f64> = (0..=p).map(|k| k as f64 - half as f64).collect();
            let interior = fd_weights(0.0, &cnodes, m)
                .into_iter()
                .map(|w| w / hm)
                .collect();
            X1Rows {
                lo,
                interior,
                hi,
                half,
            }
        };
        let build_periodic = |m: usize, axis: usize| -> CenteredStencil {
            let h = grid.h(axis);
            let hm = h.powi(m as i32);
            let nodes: Vec<f64> = (0..=p).map(|k| k as f64 - half as f64).collect();
            let weights = fd_weights(0.0, &nodes, m)
                .into_iter()
                .map(|w| w / hm)
                .collect();
            let offsets = (0..=p).map(|k| k as isize - half as isize).collect();
            CenteredStencil { offsets, weights }
        };
        Self {
            x1_rows: [build_x1(1), build_x1(2)],
            periodic_x2: [build_periodic(1, 1), build_periodic(2, 1)],
            periodic_x3: [build_periodic(1, 2), build_periodic(2, 2)],
        }
    }

    fn periodic(&self, m: usize, axis: usize) -> &CenteredStencil {
        match axis {
            1 => &self.periodic_x2[m - 1],
            2 => &self.periodic_x3[m - 1],
            _ => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

/// Fixed-tree sum: bitwise independent of thread count.
pub fn det_sum(values: &[f64]) -> f64 {
    let blocks: Vec<f64> = values
        .par_chunks(REDUCE_BLOCK)
        .map(|block| block.iter().sum::<f64>())
        .collect();
    blocks.iter().sum()
}

/// Fixed-tree weighted L² norm: sqrt(Σ wᵢ fᵢ²).
pub fn det_weighted_l2(f: &[f64], w: &[f64]) -> f64 {
    assert_eq!(f.len(), w.len());
    let blocks: Vec<f64> = f
        .par_chunks(REDUCE_BLOCK)
        .zip(w.par_chunks(REDUCE_BLOCK))
        .map(|(fb, wb)| {
            fb.iter()
                .zip(wb.iter())
                .map(|(&x, &ww)| ww * x * x)
                .sum::<f64>()
        })
        .collect();
    blocks.iter().sum::<f64>().sqrt()
}

/// Largest |fᵢ|.  NaN poisons the result (propagates as NaN).
pub fn det_max_abs(values: &[f64]) -> f64 {
    let blocks: Vec<f64> = values
        .par_chunks(REDUCE_BLOCK)
        .map(|block| {
            let mut m = 0.0_f64;
            for &x in block {
                if x.is_nan() {
                    return f64::NAN;
                }
                m = m.max(x.abs());
            }
            m
        })
        .collect();
    blocks
        .iter()
        .fold(0.0_f64, |a, &b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Smallest fᵢ.  NaN poisons the result.
pub fn det_min(values: &[f64]) -> f64 {
    let blocks: Vec<f64> = values
        .par_chunks(REDUCE_BLOCK)
        .map(|block| {
            let mut m = f64::INFINITY;
            for &x in block {
                if x.is_nan() {
                    return f64::NAN;
                }
                m = m.min(x);
            }
            m
        })
        .collect();
    blocks.iter().fold(f64::INFINITY, |a, &b| {
        if b.is_nan() {
            f64::NAN
        } else {
            a.min(b)
        }
    })
}

/// Largest fᵢ.  NaN poisons the result.
pub fn det_max(values: &[f64]) -> f64 {
    -det_min(&values.iter().map(|&x| -x).collect::<Vec<_>>())
}

/// Index of the minimum value (first occurrence; serial, deterministic).
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    let mut bv = f64::INFINITY;
    for (i, &x) in values.iter().enumerate() {
        if x < bv {
            bv = x;
            best = i;
        }
    }
    best
}

/// Configure the global worker pool.  `None` keeps the library default
/// (all available cores).  Call once, before any parallel kernel runs.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Deterministic 64-bit mixer (splitmix64).  Seeded perturbations and
/// manufactured states draw from this so outputs are reproducible
/// bit-for-bit across platforms and thread counts; there is no RNG state in
/// any hot path.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform f64 in [0, 1) from the mixer.
pub fn splitmix64_unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}
