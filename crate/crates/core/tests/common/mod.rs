//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use dioph_core::counting::{enumerate_tube, Membership};
use dioph_core::lattice::LatticeBasis;
use dioph_core::{AxisBox, ManifoldChart};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Successive minima by scanning every coefficient vector whose image can be
/// no longer than the longest basis column: `|c|∞ ≤ ‖B⁻¹‖₂ · max_j ‖b_j‖`.
pub fn brute_minima(basis: &LatticeBasis) -> Vec<f64> {
    let b = basis.cols();
    let k = b.ncols();
    let inv = b.clone().try_inverse().unwrap();
    let inv_norm = inv.svd(false, false).singular_values.max();
    let longest = (0..k).map(|j| b.column(j).norm()).fold(0.0, f64::max);
    let r = (inv_norm * longest * (1.0 + 1e-9)).floor() as i64;
    let mut vecs: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut c = vec![-r; k];
    loop {
        if c.iter().any(|&v| v != 0) {
            let cv = DVector::from_iterator(k, c.iter().map(|&v| v as f64));
            let v = b * cv;
            let norm = v.norm();
            if norm <= longest * (1.0 + 1e-9) {
                vecs.push((norm, v));
            }
        }
        let mut i = 0;
        while i < k && c[i] == r {
            c[i] = -r;
            i += 1;
        }
        if i == k {
            break;
        }
        c[i] += 1;
    }
    vecs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut picked: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for (norm, v) in vecs {
        let mut m = DMatrix::zeros(k, picked.len() + 1);
        for (j, p) in picked.iter().enumerate() {
            m.set_column(j, p);
        }
        m.set_column(picked.len(), &v);
        let sv = m.svd(false, false).singular_values;
        let top = sv.max();
        if sv.iter().all(|s| *s > 1e-9 * top) {
            picked.push(v);
            out.push(norm);
            if out.len() == k {
                break;
            }
        }
    }
    out
}

fn peval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn pderiv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

fn trim(c: &[f64]) -> &[f64] {
    let mut k = c.len();
    while k > 0 && c[k - 1] == 0.0 {
        k -= 1;
    }
    &c[..k]
}

/// Real roots in `[a, b]`, isolated between critical points and bisected.
pub fn real_roots(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trim(c);
    if c.len() <= 1 {
        return Vec::new();
    }
    let mut pts = vec![a];
    pts.extend(real_roots(&pderiv(c), a, b));
    pts.push(b);
    let mut out: Vec<f64> = Vec::new();
    for w in pts.windows(2) {
        let (mut l, mut r) = (w[0], w[1]);
        let (fl, fr) = (peval(c, l), peval(c, r));
        if fl == 0.0 {
            out.push(l);
            continue;
        }
        if fl * fr > 0.0 {
            continue;
        }
        let sl = fl.signum();
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            if peval(c, mid).signum() == sl {
                l = mid;
            } else {
                r = mid;
            }
        }
        out.push(0.5 * (l + r));
    }
    if peval(c, b) == 0.0 {
        out.push(b);
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    out
}

fn range_of(c: &[f64], a: f64, b: f64) -> (f64, f64) {
    let mut pts = vec![a, b];
    pts.extend(real_roots(&pderiv(c), a, b));
    pts.iter().map(|&x| peval(c, x)).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
}

/// Open pieces of `{x ∈ [a, b] : |P(x) − target| < thr}`.
fn band(c: &[f64], target: f64, thr: f64, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut shifted = c.to_vec();
    if shifted.is_empty() {
        shifted.push(0.0);
    }
    let mut pts = vec![a, b];
    shifted[0] = c.first().copied().unwrap_or(0.0) - target - thr;
    pts.extend(real_roots(&shifted, a, b));
    shifted[0] = c.first().copied().unwrap_or(0.0) - target + thr;
    pts.extend(real_roots(&shifted, a, b));
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .filter(|w| w[1] > w[0] && (peval(c, 0.5 * (w[0] + w[1])) - target).abs() < thr)
        .map(|w| (w[0], w[1]))
        .collect()
}

fn meet(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(l1, h1) in a {
        for &(l2, h2) in b {
            let (l, h) = (l1.max(l2), h1.min(h2));
            if h > l {
                out.push((l, h));
            }
        }
    }
    out
}

/// Naive count of `(p, q)`, `q < e^t`, with `min_{x∈[a,b]} ‖(x, P(x)) − p/q‖∞ < ε/e^t`
/// for the curve with graph polynomials `polys`.
pub fn tube_oracle(polys: &[Vec<f64>], a: f64, b: f64, eps: f64, t: f64) -> Vec<(Vec<i64>, i64)> {
    let thr = eps * (-t).exp();
    let mut comps = vec![vec![0.0, 1.0]];
    comps.extend(polys.iter().cloned());
    let ranges: Vec<(f64, f64)> = comps.iter().map(|c| range_of(c, a, b)).collect();
    let mut found = Vec::new();
    let mut q = 1i64;
    while (q as f64) < t.exp() {
        let qf = q as f64;
        let bounds: Vec<(i64, i64)> = ranges
            .iter()
            .map(|&(lo, hi)| ((qf * (lo - thr)).floor() as i64, (qf * (hi + thr)).ceil() as i64))
            .collect();
        let mut p: Vec<i64> = bounds.iter().map(|r| r.0).collect();
        'scan: loop {
            let mut set = vec![(a, b)];
            for (c, &pi) in comps.iter().zip(&p) {
                set = meet(&set, &band(c, pi as f64 / qf, thr, a, b));
                if set.is_empty() {
                    break;
                }
            }
            if !set.is_empty() {
                found.push((p.clone(), q));
            }
            let mut i = p.len();
            loop {
                if i == 0 {
                    break 'scan;
                }
                i -= 1;
                if p[i] < bounds[i].1 {
                    p[i] += 1;
                    break;
                }
                p[i] = bounds[i].0;
            }
        }
        q += 1;
    }
    found.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    found
}

/// Random cubic-or-lower curve in `ℝ^n` over `[-1, 1]` with a subinterval,
/// `ε` and `t ≤ ln 50`.
pub struct CurveInstance {
    pub polys: Vec<Vec<f64>>,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub t: f64,
}

impl CurveInstance {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.random_range(2..=3usize);
        let polys = (1..n)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a: f64 = rng.random_range(-1.0..0.5);
        let b = (a + rng.random_range(0.05..0.5)).min(1.0);
        CurveInstance {
            polys,
            a,
            b,
            eps: rng.random_range(0.05..0.9),
            t: rng.random_range(1.0..50f64.ln()),
        }
    }

    pub fn chart(&self) -> ManifoldChart {
        ManifoldChart::poly_curve(&self.polys, AxisBox::interval(-1.0, 1.0).unwrap()).unwrap()
    }

    pub fn delta(&self) -> AxisBox {
        AxisBox::interval(self.a, self.b).unwrap()
    }
}

/// Certified near-hits `(p, q, x, ε, t)` with `‖f(x) − p/q‖∞ < ε/e^t`, `q < e^t`,
/// drawn from small boxes around random points of the chart.
pub fn near_hits<R: Rng>(chart: &ManifoldChart, rng: &mut R, count: usize) -> Vec<(Vec<i64>, i64, Vec<f64>, f64, f64)> {
    let mut out = Vec::new();
    let dom = chart.domain().clone();
    while out.len() < count {
        let eps = rng.random_range(0.1..0.9);
        let t = rng.random_range(1.0..4.0);
        let c = rng.random_range(dom.lo(0)..dom.hi(0) - 0.1);
        let b = AxisBox::interval(c, c + 0.1).unwrap();
        let tube = enumerate_tube(chart, &b, eps, t).unwrap();
        let thr = eps * (-t).exp();
        for w in tube.witnesses.iter().filter(|w| w.status == Membership::In) {
            let y = chart.evaluate(&w.x_best).unwrap();
            let dist = y
                .iter()
                .zip(&w.p)
                .map(|(v, &p)| (v - p as f64 / w.q as f64).abs())
                .fold(0.0, f64::max);
            assert!(dist < thr && (w.q as f64) < t.exp());
            out.push((w.p.clone(), w.q, w.x_best.clone(), eps, t));
            if out.len() == count {
                break;
            }
        }
    }
    out
}
