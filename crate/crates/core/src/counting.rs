//! Certified enumeration of rational points `p/q` within `ε/e^t` (sup-norm) of a
//! chart, the major/minor split of the count, and the cube decomposition used
//! to bound it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcs::{ArcLabel, ArcMap};
use crate::error::{Error, Result};
use crate::flow::{check_dims, FlowParams};
use crate::manifold::{AxisBox, ManifoldChart};

/// Largest admissible `⌈e^t⌉`.
pub const MAX_Q_BOUND: f64 = 1e5;
/// Candidate `(p, q)` pairs allowed per denominator.
pub const CANDIDATES_PER_Q: u64 = 10_000_000;
/// Initial bracket grid spacing as a fraction of `thr / L`.
pub const GRID_FRACTION: f64 = 1.0 / 8.0;
/// Refinement stops on cells narrower than this fraction of the threshold.
pub const REFINE_WIDTH: f64 = 1e-9;
/// Cell evaluations allowed per candidate during refinement.
pub const REFINE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    /// `dist_hi < ε/e^t`.
    In,
    /// Neither decided in nor out.
    Uncertain,
}

/// A pair `(p, q)` whose tube membership is certain or undecided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalWitness {
    pub p: Vec<i64>,
    pub q: i64,
    /// Certified bracket of `inf_{x∈Δ} ‖f(x) − p/q‖∞`.
    pub dist_lo: f64,
    pub dist_hi: f64,
    pub status: Membership,
    /// Point realising `dist_hi`.
    pub x_best: Vec<f64>,
    /// Box containing every `x ∈ Δ` with `‖f(x) − p/q‖∞ < ε/e^t`.
    pub window: AxisBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeCount {
    /// Sorted by `(q, p)`.
    pub witnesses: Vec<RationalWitness>,
    pub n_lo: usize,
    pub n_hi: usize,
    pub q_max: i64,
    /// Candidate pairs whose distance was bracketed.
    pub candidates: u64,
    /// `(n_hi − n_lo) / n_hi` (0 when empty).
    pub uncertain_fraction: f64,
    /// `ε/e^t`.
    pub threshold: f64,
}

/// Lipschitz constant `√d·max(1, M)` of `x ↦ ‖f(x) − c‖∞`.
pub fn lipschitz(chart: &ManifoldChart) -> f64 {
    (chart.d() as f64).sqrt() * chart.deriv_bound().max(1.0)
}

/// Largest integer `q` with `q < e^t`.
pub fn q_bound(t: f64) -> i64 {
    let e = t.exp();
    let mut q = e.ceil() as i64 - 1;
    while q > 0 && (q as f64) >= e {
        q -= 1;
    }
    q
}

/// All `(p, q)`, `0 < q < e^t`, with `inf_{x∈Δ} ‖f(x) − p/q‖∞ < ε/e^t` certified
/// or undecided.
pub fn enumerate_tube(chart: &ManifoldChart, delta: &AxisBox, eps: f64, t: f64) -> Result<TubeCount> {
    if delta.dim() != chart.d() || !chart.domain().contains_box(delta) {
        return Err(Error::invalid("Δ must be a box inside the chart domain"));
    }
    if !(eps > 0.0) || !eps.is_finite() || !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid("need ε > 0 and t > 0"));
    }
    if t.exp().ceil() > MAX_Q_BOUND {
        return Err(Error::invalid(format!("⌈e^t⌉ exceeds {MAX_Q_BOUND}")));
    }
    let thr = eps * (-t).exp();
    let q_max = q_bound(t);
    let ctx = Ctx {
        chart,
        delta,
        thr,
        lip: lipschitz(chart),
    };
    let per_q: Vec<(Vec<RationalWitness>, u64)> = (1..=q_max)
        .into_par_iter()
        .map(|q| ctx.run_q(q))
        .collect::<Result<Vec<_>>>()?;
    let mut witnesses = Vec::new();
    let mut candidates = 0;
    for (w, c) in per_q {
        witnesses.extend(w);
        candidates += c;
    }
    witnesses.sort_by(|a, b| a.q.cmp(&b.q).then_with(|| a.p.cmp(&b.p)));
    let n_hi = witnesses.len();
    let n_lo = witnesses.iter().filter(|w| w.status == Membership::In).count();
    Ok(TubeCount {
        witnesses,
        n_lo,
        n_hi,
        q_max,
        candidates,
        uncertain_fraction: if n_hi == 0 { 0.0 } else { (n_hi - n_lo) as f64 / n_hi as f64 },
        threshold: thr,
    })
}

struct Ctx<'a> {
    chart: &'a ManifoldChart,
    delta: &'a AxisBox,
    thr: f64,
    lip: f64,
}

#[derive(Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    lower: f64,
}

impl Cell {
    fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
    fn half_diag(&self) -> f64 {
        0.5 * self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }
    fn width(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // Min-heap on the lower bound.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower)
    }
}

fn int_range(lo: f64, hi: f64) -> (i64, i64) {
    (lo.floor() as i64, hi.ceil() as i64)
}

/// Iterates the integer box `Π [lo_i, hi_i]` lexicographically.
fn for_each_int(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
    if ranges.iter().any(|(a, b)| b < a) {
        return Ok(());
    }
    let mut v: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&v)?;
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if v[k] < ranges[k].1 {
                v[k] += 1;
                break;
            }
            v[k] = ranges[k].0;
        }
    }
}

fn range_size(ranges: &[(i64, i64)]) -> u64 {
    ranges
        .iter()
        .map(|(a, b)| if b < a { 0 } else { (b - a + 1) as u64 })
        .fold(1u64, |acc, s| acc.saturating_mul(s))
}

impl Ctx<'_> {
    fn budget_error(q: i64, seen: u64) -> Error {
        Error::budget(
            "tube enumeration",
            format!("q = {q}: more than {CANDIDATES_PER_Q} candidates ({seen} so far)"),
        )
    }

    fn run_q(&self, q: i64) -> Result<(Vec<RationalWitness>, u64)> {
        let d = self.chart.d();
        let qf = q as f64;
        let thr = self.thr;
        let px_ranges: Vec<(i64, i64)> = (0..d)
            .map(|j| int_range(qf * (self.delta.lo(j) - thr), qf * (self.delta.hi(j) + thr)))
            .collect();
        if range_size(&px_ranges) > CANDIDATES_PER_Q {
            return Err(Self::budget_error(q, range_size(&px_ranges)));
        }
        let mut out = Vec::new();
        let mut seen = 0u64;
        for_each_int(&px_ranges, |px| {
            let center: Vec<f64> = px.iter().map(|&v| v as f64 / qf).collect();
            let ball = AxisBox::sup_ball(&center, thr)?;
            let Some(window) = self.delta.intersect(&ball) else {
                return Ok(());
            };
            self.run_window(q, px, &window, &mut out, &mut seen)
        })?;
        Ok((out, seen))
    }

    fn run_window(
        &self,
        q: i64,
        px: &[i64],
        window: &AxisBox,
        out: &mut Vec<RationalWitness>,
        seen: &mut u64,
    ) -> Result<()> {
        let d = self.chart.d();
        let m = self.chart.m();
        let qf = q as f64;
        let thr = self.thr;
        let step = thr * GRID_FRACTION / self.lip;
        let shape: Vec<usize> = (0..d)
            .map(|j| ((window.side(j) / step).ceil() as usize).max(1))
            .collect();
        let sides: Vec<f64> = (0..d).map(|j| window.side(j) / shape[j] as f64).collect();
        let mut cells: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = Vec::new();
        let ranges: Vec<(i64, i64)> = shape.iter().map(|&s| (0, s as i64 - 1)).collect();
        for_each_int(&ranges, |idx| {
            let lo: Vec<f64> = (0..d).map(|j| window.lo(j) + idx[j] as f64 * sides[j]).collect();
            let hi: Vec<f64> = (0..d)
                .map(|j| if idx[j] as usize + 1 == shape[j] { window.hi(j) } else { lo[j] + sides[j] })
                .collect();
            let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let dx = c
                .iter()
                .zip(px)
                .map(|(x, &p)| (x - p as f64 / qf).abs())
                .fold(0.0, f64::max);
            let vals = self.chart.graph_unchecked(&c);
            cells.push((lo, hi, vals, dx));
            Ok(())
        })?;
        let rho = 0.5 * sides.iter().map(|s| s * s).sum::<f64>().sqrt();
        let slack = self.lip * rho;
        let mut pk_ranges = Vec::with_capacity(m);
        for k in 0..m {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (_, _, v, _) in &cells {
                lo = lo.min(v[k]);
                hi = hi.max(v[k]);
            }
            pk_ranges.push(int_range(qf * (lo - slack - thr), qf * (hi + slack + thr)));
        }
        *seen = seen.saturating_add(range_size(&pk_ranges));
        if *seen > CANDIDATES_PER_Q {
            return Err(Self::budget_error(q, *seen));
        }
        for_each_int(&pk_ranges, |pk| {
            let value = |vals: &[f64], dx: f64| {
                vals.iter()
                    .zip(pk)
                    .map(|(v, &p)| (v - p as f64 / qf).abs())
                    .fold(dx, f64::max)
            };
            let mut live = BinaryHeap::new();
            let mut pruned_min = f64::INFINITY;
            let mut upper = f64::INFINITY;
            let mut best_x = Vec::new();
            for (lo, hi, vals, dx) in &cells {
                let v = value(vals, *dx);
                let cell = Cell {
                    lo: lo.clone(),
                    hi: hi.clone(),
                    value: v,
                    lower: (v - slack).max(0.0),
                };
                if v < upper {
                    upper = v;
                    best_x = cell.center();
                }
                if cell.lower < thr {
                    live.push(cell);
                } else {
                    pruned_min = pruned_min.min(cell.lower);
                }
            }
            if live.is_empty() {
                return Ok(());
            }
            let mut status = None;
            let mut evals = 0usize;
            while upper >= thr {
                let Some(cell) = live.pop() else {
                    break;
                };
                if cell.width() <= REFINE_WIDTH * thr || evals >= REFINE_BUDGET {
                    live.push(cell);
                    status = Some(Membership::Uncertain);
                    break;
                }
                let axis = (0..d)
                    .max_by(|&a, &b| (cell.hi[a] - cell.lo[a]).total_cmp(&(cell.hi[b] - cell.lo[b])))
                    .unwrap_or(0);
                let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
                for half in 0..2 {
                    let mut lo = cell.lo.clone();
                    let mut hi = cell.hi.clone();
                    if half == 0 {
                        hi[axis] = mid;
                    } else {
                        lo[axis] = mid;
                    }
                    let mut child = Cell {
                        lo,
                        hi,
                        value: 0.0,
                        lower: 0.0,
                    };
                    let c = child.center();
                    let dx = c
                        .iter()
                        .zip(px)
                        .map(|(x, &p)| (x - p as f64 / qf).abs())
                        .fold(0.0, f64::max);
                    child.value = value(&self.chart.graph_unchecked(&c), dx);
                    child.lower = (child.value - self.lip * child.half_diag()).max(0.0);
                    evals += 1;
                    if child.value < upper {
                        upper = child.value;
                        best_x = c;
                    }
                    if child.lower < thr {
                        live.push(child);
                    } else {
                        pruned_min = pruned_min.min(child.lower);
                    }
                }
            }
            let status = if upper < thr {
                Membership::In
            } else if let Some(s) = status {
                s
            } else {
                // every cell was pruned: certified out
                return Ok(());
            };
            let live_min = live.iter().map(|c| c.lower).fold(f64::INFINITY, f64::min);
            let dist_lo = pruned_min.min(live_min).min(upper);
            let mut wlo = vec![f64::INFINITY; d];
            let mut whi = vec![f64::NEG_INFINITY; d];
            for c in live.iter() {
                for j in 0..d {
                    wlo[j] = wlo[j].min(c.lo[j]);
                    whi[j] = whi[j].max(c.hi[j]);
                }
            }
            let window = if wlo[0].is_finite() {
                AxisBox::new(wlo.into_iter().zip(whi).map(|(a, b)| [a, b]).collect())?
            } else {
                AxisBox::new(best_x.iter().map(|&v| [v, v]).collect())?
            };
            let mut p = px.to_vec();
            p.extend_from_slice(pk);
            out.push(RationalWitness {
                p,
                q,
                dist_lo,
                dist_hi: upper,
                status,
                x_best: best_x,
                window,
            });
            Ok(())
        })
    }
}

/// Where the achieving points of a witness sit relative to the arc map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attribution {
    /// Window meets only major cells.
    Major,
    /// Window meets only minor cells.
    Minor,
    Mixed,
}

impl Attribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribution::Major => "major",
            Attribution::Minor => "minor",
            Attribution::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub n_lo: usize,
    pub n_hi: usize,
    /// Certified-in witnesses whose window meets only major cells.
    pub n_major_lo: usize,
    /// In-or-uncertain witnesses whose window meets some major cell.
    pub n_major_hi: usize,
    /// `ε^m e^{(d+1)t} vol(B)`.
    pub main_term: f64,
    /// `n_major_hi / main_term`.
    pub ratio: f64,
    pub uncertain_fraction: f64,
    pub witnesses: Vec<RationalWitness>,
    pub attribution: Vec<Attribution>,
}

/// Counts the tube around `B` and splits it along the arc map.
pub fn count_split(chart: &ManifoldChart, p: &FlowParams, bbox: &AxisBox, map: &ArcMap) -> Result<CountReport> {
    check_dims(chart, p)?;
    if map.params != *p {
        return Err(Error::invalid("arc map was built with different flow parameters"));
    }
    if !map.bbox.contains_box(bbox) {
        return Err(Error::invalid("box B is not covered by the arc map"));
    }
    let tube = enumerate_tube(chart, bbox, p.eps, p.t)?;
    Ok(split(chart, p, bbox, map, tube))
}

fn split(chart: &ManifoldChart, p: &FlowParams, bbox: &AxisBox, map: &ArcMap, tube: TubeCount) -> CountReport {
    let mut n_major_lo = 0;
    let mut n_major_hi = 0;
    let mut attribution = Vec::with_capacity(tube.witnesses.len());
    for w in &tube.witnesses {
        let cells = map.cells_meeting(&w.window);
        let majors = cells.iter().filter(|&&c| map.cells[c].label == ArcLabel::Major).count();
        let a = if majors == cells.len() {
            Attribution::Major
        } else if majors == 0 {
            Attribution::Minor
        } else {
            Attribution::Mixed
        };
        if a == Attribution::Major && w.status == Membership::In {
            n_major_lo += 1;
        }
        if majors > 0 {
            n_major_hi += 1;
        }
        attribution.push(a);
    }
    let main_term = main_term(chart, p, bbox);
    CountReport {
        n_lo: tube.n_lo,
        n_hi: tube.n_hi,
        n_major_lo,
        n_major_hi,
        main_term,
        ratio: n_major_hi as f64 / main_term,
        uncertain_fraction: tube.uncertain_fraction,
        witnesses: tube.witnesses,
        attribution,
    }
}

/// `ε^m e^{(d+1)t} vol(B)`.
pub fn main_term(chart: &ManifoldChart, p: &FlowParams, bbox: &AxisBox) -> f64 {
    p.eps.powi(chart.m() as i32) * ((chart.d() + 1) as f64 * p.t).exp() * bbox.volume()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeCover {
    /// `(εe^{-t})^{1/2}`.
    pub side: f64,
    /// Closed cubes, lexicographic, anchored at the lower corner of `B`.
    pub cubes: Vec<AxisBox>,
    pub centers: Vec<Vec<f64>>,
    /// `2(εe^{-t})^{-d/2} vol(B)`.
    pub bound: f64,
}

/// Cubes of side `(εe^{-t})^{1/2}` covering `B`.
pub fn cube_cover(bbox: &AxisBox, eps: f64, t: f64) -> Result<CubeCover> {
    if !(eps > 0.0) || !t.is_finite() {
        return Err(Error::invalid("need ε > 0 and finite t"));
    }
    if bbox.min_side() <= 0.0 {
        return Err(Error::invalid("degenerate box"));
    }
    let side = (eps * (-t).exp()).sqrt();
    if side > bbox.min_side() {
        return Err(Error::invalid(format!("cube side {side} exceeds the shortest side of B")));
    }
    let d = bbox.dim();
    let shape: Vec<i64> = (0..d)
        .map(|k| ((bbox.side(k) / side) - 1e-12).ceil().max(1.0) as i64)
        .collect();
    let mut cubes = Vec::new();
    let mut centers = Vec::new();
    for_each_int(&shape.iter().map(|&s| (0, s - 1)).collect::<Vec<_>>(), |idx| {
        let b: Vec<[f64; 2]> = (0..d)
            .map(|k| {
                let lo = bbox.lo(k) + idx[k] as f64 * side;
                [lo, lo + side]
            })
            .collect();
        centers.push(b.iter().map(|[a, c]| 0.5 * (a + c)).collect());
        cubes.push(AxisBox::new(b)?);
        Ok(())
    })?;
    Ok(CubeCover {
        side,
        cubes,
        centers,
        bound: 2.0 * bbox.volume() / side.powi(d as i32),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeCheck {
    pub center: Vec<f64>,
    /// `Δ_t(x₀) ∩ B`.
    pub region: AxisBox,
    pub count_lo: usize,
    pub count_hi: usize,
    /// `εⁿ e^t (εe^{-t})^{-d/2}`.
    pub bound: f64,
    pub ratio: f64,
}

/// Count in `Δ_t(x₀) ∩ B`, `Δ_t(x₀) = {‖x − x₀‖∞ ≤ (εe^{-t})^{1/2}}`, for a
/// major point `x₀` of the arc map (`B` is the map's box).
pub fn per_cube_check(chart: &ManifoldChart, p: &FlowParams, map: &ArcMap, x0: &[f64]) -> Result<CubeCheck> {
    check_dims(chart, p)?;
    if map.params != *p {
        return Err(Error::invalid("arc map was built with different flow parameters"));
    }
    if !map.bbox.contains(x0) {
        return Err(Error::invalid("x₀ lies outside the arc map"));
    }
    let point = AxisBox::new(x0.iter().map(|&v| [v, v]).collect())?;
    let cells = map.cells_meeting(&point);
    if cells.is_empty() || cells.iter().any(|&c| map.cells[c].label != ArcLabel::Major) {
        return Err(Error::invalid("x₀ is not a major point of the arc map"));
    }
    let half = (p.eps * (-p.t).exp()).sqrt();
    let region = AxisBox::sup_ball(x0, half)?
        .intersect(&map.bbox)
        .ok_or_else(|| Error::invalid("empty cube"))?;
    let tube = enumerate_tube(chart, &region, p.eps, p.t)?;
    let bound = p.eps.powi(p.n as i32) * p.t.exp() * (p.eps * (-p.t).exp()).powf(-(p.d as f64) / 2.0);
    Ok(CubeCheck {
        center: x0.to_vec(),
        region,
        count_lo: tube.n_lo,
        count_hi: tube.n_hi,
        bound,
        ratio: tube.n_hi as f64 / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v2_unit() -> ManifoldChart {
        ManifoldChart::veronese(2).unwrap()
    }

    #[test]
    fn hand_fixture() {
        let c = v2_unit();
        let r = enumerate_tube(&c, &AxisBox::interval(0.0, 1.0).unwrap(), 0.9, 0.1).unwrap();
        let got: Vec<(Vec<i64>, i64)> = r.witnesses.iter().map(|w| (w.p.clone(), w.q)).collect();
        assert_eq!(
            got,
            vec![(vec![0, 0], 1), (vec![0, 1], 1), (vec![1, 0], 1), (vec![1, 1], 1)]
        );
        assert_eq!((r.n_lo, r.n_hi), (4, 4));
        assert!((r.threshold - 0.9 * (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn far_box_has_no_witnesses() {
        let r = enumerate_tube(&v2_unit(), &AxisBox::interval(0.2, 0.3).unwrap(), 0.01, 0.1).unwrap();
        assert_eq!((r.n_lo, r.n_hi), (0, 0));
    }

    #[test]
    fn points_on_the_curve_are_found() {
        let c = ManifoldChart::veronese(3).unwrap();
        // (1/3, 1/9, 1/27) with q = 27
        let r = enumerate_tube(&c, &AxisBox::interval(0.3, 0.4).unwrap(), 0.05, 27.5f64.ln()).unwrap();
        let w = r.witnesses.iter().find(|w| w.q == 27 && w.p == vec![9, 3, 1]).unwrap();
        assert_eq!(w.status, Membership::In);
        assert!(w.dist_hi < 1e-3);
    }

    #[test]
    fn strict_q_bound() {
        assert_eq!(q_bound(8f64.ln()), 7);
        assert_eq!(q_bound(0.1), 1);
        assert_eq!(q_bound(3.0), 20);
    }

    #[test]
    fn cube_cover_examples() {
        let c = cube_cover(&AxisBox::interval(0.0, 1.0).unwrap(), 1.0, 16f64.ln()).unwrap();
        assert_eq!(c.cubes.len(), 4);
        assert!((c.side - 0.25).abs() < 1e-15);
        let c = cube_cover(&AxisBox::cube(2, 0.0, 1.0).unwrap(), 1.0, 4f64.ln()).unwrap();
        assert_eq!(c.cubes.len(), 4);
        assert!((c.side - 0.5).abs() < 1e-15);
        assert!(cube_cover(&AxisBox::interval(0.0, 0.0).unwrap(), 0.5, 2.0).is_err());
    }

    #[test]
    fn budget_names_the_denominator() {
        let c = ManifoldChart::veronese(3).unwrap();
        let b = AxisBox::interval(-1.0, 1.0).unwrap();
        // ε huge makes every window wide
        let e = enumerate_tube(&c, &b, 1e9, 1.0).unwrap_err();
        match e {
            Error::Budget { detail, .. } => assert!(detail.contains("q = ")),
            other => panic!("{other:?}"),
        }
    }
}
