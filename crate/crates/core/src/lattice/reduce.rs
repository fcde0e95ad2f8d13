//! Integer-tracked column operations and LLL over a column range.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lovász parameter.
pub(crate) const LLL_DELTA: f64 = 0.99;
const LLL_MAX_STEPS: usize = 200_000;

/// Gram–Schmidt data of a column basis (modified Gram–Schmidt).
#[derive(Debug, Clone)]
pub(crate) struct Gso {
    /// `‖b*_j‖²`.
    pub bstar_sq: Vec<f64>,
    /// `mu[j][l] = ⟨b_j, b*_l⟩ / ‖b*_l‖²` for `l < j`.
    pub mu: Vec<Vec<f64>>,
    pub bstar: Vec<Vec<f64>>,
}

pub(crate) fn gso(cols: &DMatrix<f64>) -> Gso {
    let k = cols.ncols();
    let rows = cols.nrows();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut bstar_sq = Vec::with_capacity(k);
    let mut mu = vec![vec![0.0; k]; k];
    for j in 0..k {
        let bj: Vec<f64> = cols.column(j).iter().copied().collect();
        let mut v = bj.clone();
        for l in 0..j {
            let m = if bstar_sq[l] > 0.0 {
                dot(&v, &bstar[l]) / bstar_sq[l]
            } else {
                0.0
            };
            mu[j][l] = m;
            for r in 0..rows {
                v[r] -= m * bstar[l][r];
            }
        }
        bstar_sq.push(dot(&v, &v));
        bstar.push(v);
    }
    Gso { bstar_sq, mu, bstar }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basis `B·T` of a fixed lattice together with the exact integer transform `T`.
#[derive(Debug, Clone)]
pub(crate) struct Reducer {
    base: DMatrix<f64>,
    /// Columns of `T`; `t[j]` are the coefficients of column `j` in `base`.
    pub t: Vec<Vec<i64>>,
    pub cols: DMatrix<f64>,
}

impl Reducer {
    pub fn new(base: &DMatrix<f64>) -> Self {
        let k = base.ncols();
        let t = (0..k)
            .map(|j| (0..k).map(|i| i64::from(i == j)).collect())
            .collect();
        Reducer {
            base: base.clone(),
            t,
            cols: base.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.ncols()
    }

    /// Vector `base · c` for integer coefficients `c` in the original basis.
    pub fn embed(&self, c: &[i64]) -> Vec<f64> {
        let rows = self.base.nrows();
        let mut out = vec![0.0; rows];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0 {
                let cj = cj as f64;
                for (r, o) in out.iter_mut().enumerate() {
                    *o += cj * self.base[(r, j)];
                }
            }
        }
        out
    }

    /// Original-basis coefficients of `Σ c_j · col_j`.
    pub fn to_original(&self, c: &[i64]) -> Result<Vec<i64>> {
        let k = self.dim();
        let mut out = vec![0i64; k];
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0 {
                continue;
            }
            for i in 0..k {
                let term = self.t[j][i].checked_mul(cj).ok_or_else(overflow)?;
                out[i] = out[i].checked_add(term).ok_or_else(overflow)?;
            }
        }
        Ok(out)
    }

    fn refresh(&mut self, j: usize) {
        let v = self.embed(&self.t[j].clone());
        for (r, x) in v.into_iter().enumerate() {
            self.cols[(r, j)] = x;
        }
    }

    /// `col_j ← col_j + m·col_l`.
    pub fn add_multiple(&mut self, j: usize, l: usize, m: i64) -> Result<()> {
        if m == 0 {
            return Ok(());
        }
        for i in 0..self.dim() {
            let term = self.t[l][i].checked_mul(m).ok_or_else(overflow)?;
            self.t[j][i] = self.t[j][i].checked_add(term).ok_or_else(overflow)?;
        }
        self.refresh(j);
        Ok(())
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        if a != b {
            self.t.swap(a, b);
            self.cols.swap_columns(a, b);
        }
    }

    /// Replace columns `(p, j)` by `(a·p + b·j, c·p + d·j)` for an integer matrix
    /// with determinant ±1.
    fn combine(&mut self, p: usize, j: usize, a: i64, b: i64, c: i64, d: i64) -> Result<()> {
        for i in 0..self.dim() {
            let (tp, tj) = (self.t[p][i], self.t[j][i]);
            let np = mul_add(a, tp, b, tj)?;
            let nj = mul_add(c, tp, d, tj)?;
            self.t[p][i] = np;
            self.t[j][i] = nj;
        }
        self.refresh(p);
        self.refresh(j);
        Ok(())
    }

    /// Given a vector `v = Σ coeffs_j col_j` whose tail `coeffs[from..]` is nonzero,
    /// apply a unimodular change to the tail columns so that afterwards
    /// `v = Σ_{j<from} coeffs_j col_j + g·col_from` with `g = gcd(tail)`.
    pub fn absorb_tail(&mut self, coeffs: &[i64], from: usize) -> Result<()> {
        let k = self.dim();
        let mut c = coeffs.to_vec();
        let pivot = (from..k)
            .find(|&j| c[j] != 0)
            .ok_or_else(|| Error::invalid("tail coefficients are all zero"))?;
        self.swap(from, pivot);
        c.swap(from, pivot);
        for j in (from + 1)..k {
            if c[j] == 0 {
                continue;
            }
            let (a, b) = (c[from], c[j]);
            let (g, s, u) = ext_gcd(a, b);
            // new col_from = (a/g) col_from + (b/g) col_j, new col_j = −u col_from + s col_j
            self.combine(from, j, a / g, b / g, -u, s)?;
            c[from] = g;
            c[j] = 0;
        }
        Ok(())
    }

    /// LLL on columns `lo..hi`; size reduction uses every earlier column.
    pub fn lll(&mut self, lo: usize, hi: usize) -> Result<()> {
        if hi <= lo {
            return Ok(());
        }
        let mut j = lo;
        let mut steps = 0usize;
        while j < hi {
            steps += 1;
            if steps > LLL_MAX_STEPS {
                return Err(Error::budget("lattice reduction", format!("more than {LLL_MAX_STEPS} LLL steps")));
            }
            self.size_reduce(j)?;
            if j == lo {
                j += 1;
                continue;
            }
            let g = gso(&self.cols);
            let m = g.mu[j][j - 1];
            if g.bstar_sq[j] >= (LLL_DELTA - m * m) * g.bstar_sq[j - 1] {
                j += 1;
            } else {
                self.swap(j - 1, j);
                j = (j - 1).max(lo);
            }
        }
        Ok(())
    }

    fn size_reduce(&mut self, j: usize) -> Result<()> {
        if j == 0 {
            return Ok(());
        }
        let g = gso(&self.cols);
        for l in (0..j).rev() {
            if g.bstar_sq[l] <= 0.0 {
                continue;
            }
            let col: Vec<f64> = self.cols.column(j).iter().copied().collect();
            let m = dot(&col, &g.bstar[l]) / g.bstar_sq[l];
            if m.abs() > 0.5 {
                let r = m.round();
                if r.abs() > 9.0e15 {
                    return Err(Error::Overflow("size reduction multiplier".into()));
                }
                self.add_multiple(j, l, -(r as i64))?;
            }
        }
        Ok(())
    }
}

fn overflow() -> Error {
    Error::Overflow("lattice basis transform".into())
}

fn mul_add(a: i64, x: i64, b: i64, y: i64) -> Result<i64> {
    let p = a.checked_mul(x).ok_or_else(overflow)?;
    let q = b.checked_mul(y).ok_or_else(overflow)?;
    p.checked_add(q).ok_or_else(overflow)
}

/// `(g, s, u)` with `s·a + u·b = g = gcd(a, b) > 0`; requires `(a, b) ≠ (0, 0)`.
pub(crate) fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut u0, mut u1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (u0, u1) = (u1, u0 - q * u1);
    }
    if r0 < 0 {
        (-r0, -s0, -u0)
    } else {
        (r0, s0, u0)
    }
}
