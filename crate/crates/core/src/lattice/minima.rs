//! Successive minima by sequential branch-and-bound on an adapted basis.
//!
//! After LLL, the `i`-th minimum is the shortest lattice vector whose
//! coefficients outside the first `i` columns are not all zero; those columns
//! span the saturated sublattice of the minima found so far, so this is exactly
//! "shortest vector independent of the previous witnesses". The tail is then
//! rotated by a unimodular transform so the new witness direction becomes
//! column `i`, and the invariant carries over.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::enumerate::{Enumerator, Visit};
use super::reduce::{gso, Reducer};
use super::LatticeBasis;

/// Relative tolerance within which two norms count as tied.
pub const TIE_TOL: f64 = 1e-9;
/// Default cap on enumeration tree nodes per minimum.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaReport {
    /// `λ_1 ≤ … ≤ λ_k` (Euclidean).
    pub values: Vec<f64>,
    /// Lattice vectors achieving the minima.
    pub witnesses: Vec<Vec<f64>>,
    /// Integer coordinates of each witness in the input basis.
    pub coefficients: Vec<Vec<i64>>,
    /// True when every minimum came from an exhaustive enumeration.
    pub certified: bool,
    /// Total enumeration nodes visited.
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimaOptions {
    pub node_budget: u64,
}

impl Default for MinimaOptions {
    fn default() -> Self {
        MinimaOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

pub fn successive_minima(basis: &LatticeBasis) -> Result<MinimaReport> {
    minima_upto(basis, basis.dim(), MinimaOptions::default())
}

pub fn successive_minima_with(basis: &LatticeBasis, opts: MinimaOptions) -> Result<MinimaReport> {
    minima_upto(basis, basis.dim(), opts)
}

/// `λ_1` with a witness.
pub fn shortest_vector(basis: &LatticeBasis) -> Result<MinimaReport> {
    minima_upto(basis, 1, MinimaOptions::default())
}

/// Sign-normalise so the first nonzero coefficient is positive.
fn canonical(mut c: Vec<i64>) -> Vec<i64> {
    if c.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        for x in &mut c {
            *x = -*x;
        }
    }
    c
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// First `count` successive minima.
pub fn minima_upto(basis: &LatticeBasis, count: usize, opts: MinimaOptions) -> Result<MinimaReport> {
    let k = basis.dim();
    if k > MAX_DIM {
        return Err(Error::invalid(format!("dimension {k} exceeds {MAX_DIM}")));
    }
    let count = count.min(k);
    let mut red = Reducer::new(basis.cols());
    red.lll(0, k)?;

    let mut report = MinimaReport {
        values: Vec::with_capacity(count),
        witnesses: Vec::with_capacity(count),
        coefficients: Vec::with_capacity(count),
        certified: true,
        nodes: 0,
    };

    for i in 0..count {
        let g = gso(&red.cols);
        // Any tail column is a valid upper bound.
        let mut start = f64::INFINITY;
        for j in i..k {
            start = start.min(red.cols.column(j).norm_squared());
        }
        let mut best: Option<(f64, Vec<i64>, Vec<i64>)> = None;
        let mut failure: Option<Error> = None;
        let nodes = {
            let best = &mut best;
            let failure = &mut failure;
            let red_ref = &red;
            let en = Enumerator::new(&g, start * (1.0 + TIE_TOL).powi(2), i, opts.node_budget, |c: &[i64]| {
                let orig = match red_ref.to_original(c) {
                    Ok(o) => o,
                    Err(e) => {
                        *failure = Some(e);
                        return Visit::Stop;
                    }
                };
                let n2 = norm2(&red_ref.embed(&orig));
                let orig = canonical(orig);
                let replace = match best.as_ref() {
                    None => true,
                    Some((b2, bo, _)) => {
                        let band = (1.0 + TIE_TOL).powi(2);
                        if n2 * band < *b2 {
                            true
                        } else if n2 <= *b2 * band {
                            orig.cmp(bo) == Ordering::Less
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    let r2 = best.as_ref().map_or(n2, |(b2, _, _)| b2.min(n2));
                    *best = Some((n2, orig, c.to_vec()));
                    Visit::Shrink(r2 * (1.0 + TIE_TOL).powi(2))
                } else {
                    Visit::Continue
                }
            });
            en.run()?
        };
        if let Some(e) = failure {
            return Err(e);
        }
        report.nodes += nodes;
        let (n2, orig, local) = best.ok_or_else(|| {
            Error::Singular("enumeration found no vector below a basis column".into())
        })?;
        report.values.push(n2.sqrt());
        report.witnesses.push(red.embed(&orig));
        report.coefficients.push(orig);
        if i + 1 < k {
            red.absorb_tail(&local, i)?;
            red.lll(0, i + 1)?;
            red.lll(i + 1, k)?;
        }
    }
    // Tie-breaking inside the slack band can reorder equal values by ~1e-9.
    for i in 1..report.values.len() {
        if report.values[i] < report.values[i - 1] {
            report.values[i] = report.values[i - 1];
        }
    }
    Ok(report)
}

/// Visit every nonzero lattice vector with Euclidean norm `≤ radius` (plus a
/// `1e-10` relative slack). The visitor gets input-basis coefficients and the
/// vector; returning `false` stops the enumeration.
pub fn for_each_short_vector<F>(basis: &LatticeBasis, radius: f64, node_budget: u64, mut visit: F) -> Result<u64>
where
    F: FnMut(&[i64], &[f64]) -> bool,
{
    let k = basis.dim();
    if k > MAX_DIM {
        return Err(Error::invalid(format!("dimension {k} exceeds {MAX_DIM}")));
    }
    let mut red = Reducer::new(basis.cols());
    red.lll(0, k)?;
    let g = gso(&red.cols);
    let mut failure = None;
    let nodes = {
        let red = &red;
        let failure = &mut failure;
        Enumerator::new(&g, radius * radius, 0, node_budget, |c: &[i64]| match red.to_original(c) {
            Ok(orig) => {
                let v = red.embed(&orig);
                if visit(&orig, &v) {
                    Visit::Continue
                } else {
                    Visit::Stop
                }
            }
            Err(e) => {
                *failure = Some(e);
                Visit::Stop
            }
        })
        .run()?
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(nodes),
    }
}
