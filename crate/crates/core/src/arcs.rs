//! Major/minor arc classification of a chart through the top successive minimum
//! of the flowed lattice `b_t g_t zu(x)ℤ^{n+1}`, and the audit that minor points
//! carry small integer linear forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{check_dims, flowed_basis, flowed_dual_basis, FlowParams};
use crate::lattice::{for_each_short_vector, shortest_vector, successive_minima, LatticeBasis};
use crate::manifold::{AxisBox, ManifoldChart};

/// Relative band around the threshold that is resolved toward "minor".
pub const CLASSIFY_SLACK: f64 = 1e-9;
/// Relative slack on the audited inequalities.
pub const AUDIT_SLACK: f64 = 1e-9;
/// Cap on grid cells per arc map.
pub const MAX_CELLS: usize = 2_000_000;
/// Default node budget for witness searches.
pub const WITNESS_NODE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcLabel {
    RawMinor,
    EnlargedMinor,
    Major,
}

impl ArcLabel {
    pub fn is_minor(self) -> bool {
        self != ArcLabel::Major
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArcLabel::RawMinor => "raw_minor",
            ArcLabel::EnlargedMinor => "enlarged_minor",
            ArcLabel::Major => "major",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    /// `RawMinor` or `Major`.
    pub label: ArcLabel,
    /// `λ_{n+1}(b_t g_t zu(x)ℤ^{n+1})`.
    pub lambda_top: f64,
    /// `φ e^h`.
    pub threshold: f64,
}

/// Label a single point by comparing `λ_{n+1}` with `φe^h`; values within the
/// relative band [`CLASSIFY_SLACK`] below the threshold count as minor.
pub fn classify_point(chart: &ManifoldChart, p: &FlowParams, x: &[f64]) -> Result<PointClass> {
    let basis = LatticeBasis::new(flowed_basis(chart, p, x)?)?;
    let minima = successive_minima(&basis)?;
    let lambda_top = *minima.values.last().expect("nonempty");
    let threshold = p.phi * p.h.exp();
    let label = if lambda_top > threshold * (1.0 - CLASSIFY_SLACK) {
        ArcLabel::RawMinor
    } else {
        ArcLabel::Major
    };
    Ok(PointClass {
        label,
        lambda_top,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcCell {
    pub index: Vec<usize>,
    pub center: Vec<f64>,
    pub label: ArcLabel,
    pub lambda_top: f64,
    pub threshold: f64,
    /// Euclidean distance from the center to the nearest raw-minor center.
    pub nearest_raw: Option<f64>,
}

/// Grid classification of a box `B` inside the chart domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcMap {
    pub params: FlowParams,
    pub bbox: AxisBox,
    /// Requested spacing; the actual cell sides are `≤` this.
    pub spacing: f64,
    pub cell_sides: Vec<f64>,
    pub shape: Vec<usize>,
    /// Cells in lexicographic index order (last axis fastest).
    pub cells: Vec<ArcCell>,
    /// `εe^{-t/2}`.
    pub radius: f64,
    /// Centers of the cover balls (a maximal `radius`-separated subset of the raw centers).
    pub cover: Vec<Vec<f64>>,
    /// Largest number of open cover balls containing a grid center.
    pub multiplicity: usize,
}

impl ArcMap {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_sides.iter().product()
    }

    /// Half the diagonal of a cell.
    pub fn cell_half_diagonal(&self) -> f64 {
        0.5 * self.cell_sides.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn count(&self, label: ArcLabel) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }

    /// `2^d`, the multiplicity the cover is expected to respect.
    pub fn multiplicity_bound(&self) -> usize {
        1 << self.dim()
    }

    fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    /// Closed box covered by a cell.
    pub fn cell_box(&self, cell: usize) -> AxisBox {
        let c = &self.cells[cell];
        AxisBox::new(
            c.index
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let lo = self.bbox.lo(k) + i as f64 * self.cell_sides[k];
                    [lo, lo + self.cell_sides[k]]
                })
                .collect(),
        )
        .expect("cell box is valid")
    }

    /// Indices of all cells whose closed box meets `region`.
    pub fn cells_meeting(&self, region: &AxisBox) -> Vec<usize> {
        let d = self.dim();
        let mut ranges = Vec::with_capacity(d);
        for k in 0..d {
            let lo = ((region.lo(k) - self.bbox.lo(k)) / self.cell_sides[k]).floor() - 1.0;
            let hi = ((region.hi(k) - self.bbox.lo(k)) / self.cell_sides[k]).floor() + 1.0;
            let lo = lo.max(0.0) as usize;
            let hi = (hi.max(-1.0) as i64).min(self.shape[k] as i64 - 1);
            if hi < lo as i64 {
                return Vec::new();
            }
            ranges.push((lo, hi as usize));
        }
        let mut out = Vec::new();
        for_each_index(&ranges, |idx| {
            let cell = self.linear(idx);
            if self.cell_box(cell).intersect(region).is_some() {
                out.push(cell);
            }
        });
        out
    }
}

/// Calls `f` on every index vector in the inclusive product of `ranges`, lexicographically.
fn for_each_index(ranges: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if ranges.iter().any(|(lo, hi)| hi < lo) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if idx[k] < ranges[k].1 {
                idx[k] += 1;
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Builds the arc map on a regular grid of `B` with cell side `≤ spacing`.
pub fn build_arc_map(chart: &ManifoldChart, p: &FlowParams, bbox: &AxisBox, spacing: f64) -> Result<ArcMap> {
    check_dims(chart, p)?;
    if bbox.dim() != chart.d() || !chart.domain().contains_box(bbox) {
        return Err(Error::invalid("box B must lie inside the chart domain"));
    }
    let radius = p.enlargement_radius();
    if !(spacing > 0.0) {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    if spacing > radius * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "grid spacing {spacing} exceeds the enlargement radius εe^(-t/2) = {radius}"
        )));
    }
    let d = chart.d();
    let shape: Vec<usize> = (0..d)
        .map(|k| ((bbox.side(k) / spacing) - 1e-12).ceil().max(1.0) as usize)
        .collect();
    let total: f64 = shape.iter().map(|&s| s as f64).product();
    if total > MAX_CELLS as f64 {
        return Err(Error::budget("arc map", format!("{total} cells exceed the cap {MAX_CELLS}")));
    }
    let cell_sides: Vec<f64> = (0..d).map(|k| bbox.side(k) / shape[k] as f64).collect();
    let mut indices = Vec::with_capacity(total as usize);
    for_each_index(&shape.iter().map(|&s| (0, s - 1)).collect::<Vec<_>>(), |idx| {
        indices.push(idx.to_vec())
    });
    let cells: Vec<ArcCell> = indices
        .into_par_iter()
        .map(|index| {
            let center: Vec<f64> = index
                .iter()
                .enumerate()
                .map(|(k, &i)| bbox.lo(k) + (i as f64 + 0.5) * cell_sides[k])
                .collect();
            let pc = classify_point(chart, p, &center)?;
            Ok(ArcCell {
                index,
                center,
                label: pc.label,
                lambda_top: pc.lambda_top,
                threshold: pc.threshold,
                nearest_raw: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut map = ArcMap {
        params: *p,
        bbox: bbox.clone(),
        spacing,
        cell_sides,
        shape,
        cells,
        radius,
        cover: Vec::new(),
        multiplicity: 0,
    };
    enlarge(&mut map);
    Ok(map)
}

/// Labels the enlargement, selects the cover and measures its multiplicity.
fn enlarge(map: &mut ArcMap) {
    let d = map.dim();
    let r = map.radius;
    let window: Vec<usize> = map.cell_sides.iter().map(|s| (r / s).ceil() as usize + 1).collect();
    let ranges_around = |idx: &[usize]| -> Vec<(usize, usize)> {
        (0..d)
            .map(|k| (idx[k].saturating_sub(window[k]), (idx[k] + window[k]).min(map.shape[k] - 1)))
            .collect()
    };
    let raw: Vec<bool> = map.cells.iter().map(|c| c.label == ArcLabel::RawMinor).collect();

    let nearest: Vec<Option<f64>> = (0..map.cells.len())
        .into_par_iter()
        .map(|ci| {
            let c = &map.cells[ci];
            let mut best: Option<f64> = None;
            for_each_index(&ranges_around(&c.index), |idx| {
                let j = map.linear(idx);
                if raw[j] {
                    let dd = dist(&c.center, &map.cells[j].center);
                    best = Some(best.map_or(dd, |b: f64| b.min(dd)));
                }
            });
            best
        })
        .collect();
    for (c, nr) in map.cells.iter_mut().zip(nearest) {
        c.nearest_raw = nr;
        if c.label == ArcLabel::Major && nr.is_some_and(|v| v < r) {
            c.label = ArcLabel::EnlargedMinor;
        }
    }

    // Greedy lexicographic selection of radius-separated raw centers.
    let mut chosen = vec![false; map.cells.len()];
    let mut cover = Vec::new();
    for ci in 0..map.cells.len() {
        if !raw[ci] {
            continue;
        }
        let c = &map.cells[ci];
        let mut blocked = false;
        for_each_index(&ranges_around(&c.index), |idx| {
            let j = map.linear(idx);
            if chosen[j] && dist(&c.center, &map.cells[j].center) < r {
                blocked = true;
            }
        });
        if !blocked {
            chosen[ci] = true;
            cover.push(c.center.clone());
        }
    }
    let multiplicity = (0..map.cells.len())
        .map(|ci| {
            let c = &map.cells[ci];
            let mut count = 0;
            for_each_index(&ranges_around(&c.index), |idx| {
                let j = map.linear(idx);
                if chosen[j] && dist(&c.center, &map.cells[j].center) < r {
                    count += 1;
                }
            });
            count
        })
        .max()
        .unwrap_or(0);
    map.cover = cover;
    map.multiplicity = multiplicity;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Two-sided estimate of the measure of the enlarged minor set inside `B`.
///
/// `lo` counts cells lying entirely inside some enlargement ball around a raw
/// center, `hi` counts cells that touch one; the Euclidean balls are compared
/// with the sup-norm cells through the cell half-diagonal (`√d/2` times the side
/// for cubes).
pub fn estimate_minor_measure(map: &ArcMap) -> MeasureInterval {
    let half = map.cell_half_diagonal();
    let vol = map.cell_volume();
    let mut lo = 0usize;
    let mut hi = 0usize;
    for c in &map.cells {
        if let Some(nr) = c.nearest_raw {
            if nr + half < map.radius {
                lo += 1;
            }
            if nr - half < map.radius {
                hi += 1;
            }
        }
    }
    MeasureInterval {
        lo: lo as f64 * vol,
        hi: hi as f64 * vol,
    }
}

/// `α = 1/(d(2l−1)(n+1))`.
pub fn decay_alpha(d: usize, l: u32, n: usize) -> f64 {
    1.0 / (d as f64 * (2.0 * l as f64 - 1.0) * (n + 1) as f64)
}

/// `measure · (εⁿ e^{3t/2})^α`, whose supremum over a sweep estimates the decay constant.
pub fn decay_constant(measure: f64, p: &FlowParams, alpha: f64) -> f64 {
    measure * (p.eps.powi(p.n as i32) * (1.5 * p.t).exp()).powf(alpha)
}

/// Thresholds of an integer linear-form system `|a₀ + f(x)·a| < δ`,
/// `‖∇f(x)ᵀa‖∞ < K`, `0 < ‖a‖∞ < T`, with the audit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkmParams {
    pub delta: f64,
    pub k: f64,
    pub t_cap: f64,
    /// `((n+1)!)²`.
    pub c2: f64,
    /// `c₂(1 + n + n³M)`.
    pub c3: f64,
}

pub fn audit_constants(chart: &ManifoldChart) -> (f64, f64) {
    let n = chart.n() as f64;
    let fact: f64 = (1..=chart.n() + 1).map(|i| i as f64).product();
    let c2 = fact * fact;
    (c2, c2 * (1.0 + n + n.powi(3) * chart.deriv_bound()))
}

impl BkmParams {
    pub fn new(chart: &ManifoldChart, delta: f64, k: f64, t_cap: f64) -> Self {
        let (c2, c3) = audit_constants(chart);
        BkmParams {
            delta,
            k,
            t_cap,
            c2,
            c3,
        }
    }

    /// `(c₃e^{-t}, c₃ε^{-1}e^{-t/2}, c₃ε^{-1})`.
    pub fn from_flow(chart: &ManifoldChart, p: &FlowParams) -> Self {
        let (c2, c3) = audit_constants(chart);
        BkmParams {
            delta: c3 * (-p.t).exp(),
            k: c3 / p.eps * (-p.t / 2.0).exp(),
            t_cap: c3 / p.eps,
            c2,
            c3,
        }
    }

    /// `δ ≤ 1`, `T ≥ 1` and `δⁿ < K T^{n−1}`.
    pub fn regime_ok(&self, n: usize) -> bool {
        self.delta <= 1.0
            && self.t_cap >= 1.0
            && self.delta.powi(n as i32) < self.k * self.t_cap.powi(n as i32 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BkmWitness {
    pub a0: i64,
    pub a: Vec<i64>,
}

/// Values `(|a₀ + f·a|, ‖∇fᵀa‖∞, max_{j≥d}|a_j|, ‖a‖∞)` of the linear forms.
pub fn linear_form_values(chart: &ManifoldChart, x: &[f64], a0: i64, a: &[i64]) -> Result<[f64; 4]> {
    let f = chart.evaluate(x)?;
    let j = chart.jacobian(x)?;
    let d = chart.d();
    let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let lin = a0 as f64 + f.iter().zip(&af).map(|(u, v)| u * v).sum::<f64>();
    let mut grad: f64 = 0.0;
    for col in 0..d {
        let g = af[col] + (0..chart.m()).map(|k| j[(k, col)] * af[d + k]).sum::<f64>();
        grad = grad.max(g.abs());
    }
    let graph = af[d..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let all = af.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok([lin.abs(), grad, graph, all])
}

/// Whether `(a₀, a)` satisfies the three strict inequalities.
pub fn is_bkm_witness(chart: &ManifoldChart, x: &[f64], w: &BkmWitness, bkm: &BkmParams) -> Result<bool> {
    let [lin, grad, _, all] = linear_form_values(chart, x, w.a0, &w.a)?;
    Ok(lin < bkm.delta && grad < bkm.k && all > 0.0 && all < bkm.t_cap)
}

/// Integer `(a₀, a)` with `|a₀ + f(x)·a| < δ`, `‖∇f(x)ᵀa‖∞ < K`, `0 < ‖a‖∞ < T`, or `None`.
///
/// The forms `(a₀ + f·a)/δ`, `(∇fᵀa)/K` and the graph coordinates `a_j/T`
/// (`j ≥ d`) give a square lattice of rank `n+1`; every solution lies in its
/// sup-unit box, so a Euclidean enumeration of radius `√(n+1)` is exhaustive.
/// The domain coordinates `a_j < T`, `j < d`, are checked on the candidates.
pub fn bkm_witness(chart: &ManifoldChart, x: &[f64], bkm: &BkmParams) -> Result<Option<BkmWitness>> {
    bkm_witness_with_budget(chart, x, bkm, WITNESS_NODE_BUDGET)
}

pub fn bkm_witness_with_budget(
    chart: &ManifoldChart,
    x: &[f64],
    bkm: &BkmParams,
    node_budget: u64,
) -> Result<Option<BkmWitness>> {
    if !(bkm.delta > 0.0 && bkm.k > 0.0 && bkm.t_cap > 0.0) {
        return Err(Error::invalid("δ, K, T must be positive"));
    }
    form_search(chart, x, bkm.delta, bkm.k, bkm.t_cap, node_budget, |w| is_bkm_witness(chart, x, w, bkm))
}

/// First lattice point `(a₀, a ≠ 0)` in the sup-unit box of the scaled forms
/// `(a₀ + f·a)/δ`, `(∇fᵀa)/K`, `a_j/T_graph (j ≥ d)` that `accept` approves.
fn form_search(
    chart: &ManifoldChart,
    x: &[f64],
    delta: f64,
    k: f64,
    t_graph: f64,
    node_budget: u64,
    mut accept: impl FnMut(&BkmWitness) -> Result<bool>,
) -> Result<Option<BkmWitness>> {
    let n = chart.n();
    let d = chart.d();
    let f = chart.evaluate(x)?;
    let j = chart.jacobian(x)?;
    // Coefficient order (a₀, a_1, …, a_n).
    let mut mat = nalgebra::DMatrix::zeros(n + 1, n + 1);
    mat[(0, 0)] = 1.0 / delta;
    for i in 0..n {
        mat[(0, 1 + i)] = f[i] / delta;
    }
    for col in 0..d {
        mat[(1 + col, 1 + col)] = 1.0 / k;
        for r in 0..chart.m() {
            mat[(1 + col, 1 + d + r)] = j[(r, col)] / k;
        }
    }
    for r in 0..chart.m() {
        mat[(1 + d + r, 1 + d + r)] = 1.0 / t_graph;
    }
    let basis = LatticeBasis::with_any_covolume(mat)?;
    let mut found = None;
    let mut err = None;
    for_each_short_vector(&basis, ((n + 1) as f64).sqrt(), node_budget, |c, v| {
        if v.iter().any(|y| y.abs() >= 1.0) || c[1..].iter().all(|&a| a == 0) {
            return true;
        }
        let a = c[1..].to_vec();
        let fa: f64 = f.iter().zip(&a).map(|(u, &v)| u * v as f64).sum();
        let w = BkmWitness { a0: -(fa.round() as i64), a };
        match accept(&w) {
            Ok(true) => {
                found = Some(w);
                false
            }
            Ok(false) => true,
            Err(e) => {
                err = Some(e);
                false
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub x: Vec<f64>,
    /// `mahler`, `system` or `bkm`.
    pub step: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub c2: f64,
    pub c3: f64,
    /// `log c₃`, the time from which the chain is asserted.
    pub t0: f64,
    /// Whether `t ≥ t₀`; below it the audit still runs but proves less.
    pub regime_ok: bool,
    pub bkm: BkmParams,
    pub bkm_regime_ok: bool,
    pub raw_points: usize,
    pub enlarged_points: usize,
    /// Largest `λ₁(b*g*zu*) / (c₂φ^{-1}e^{-h})` seen.
    pub max_mahler_ratio: f64,
    /// Raw points where the shortest dual vector had `a = 0` and a search was needed.
    pub system_searches: usize,
    pub bkm_searches: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct RawAudit {
    mahler_ratio: f64,
    candidate: Option<BkmWitness>,
    system_search: bool,
    bkm_search: bool,
    violations: Vec<AuditViolation>,
}

fn audit_raw(chart: &ManifoldChart, p: &FlowParams, x: &[f64], bkm: &BkmParams) -> Result<RawAudit> {
    let mut out = RawAudit {
        mahler_ratio: 0.0,
        candidate: None,
        system_search: false,
        bkm_search: false,
        violations: Vec::new(),
    };
    let dual = LatticeBasis::new(flowed_dual_basis(chart, p, x)?)?;
    let sv = shortest_vector(&dual)?;
    let bound = bkm.c2 / p.phi * (-p.h).exp();
    out.mahler_ratio = sv.values[0] / bound;
    if sv.values[0] > bound * (1.0 + AUDIT_SLACK) {
        out.violations.push(AuditViolation {
            x: x.to_vec(),
            step: "mahler".into(),
            detail: format!("λ₁ = {} > c₂φ⁻¹e^(-h) = {bound}", sv.values[0]),
        });
    }

    // (a₀, a) from the dual coefficients: a₀ = c₀, a = −(c_1, …, c_n).
    let c = &sv.coefficients[0];
    let system = BkmParams {
        delta: bkm.c2 * (-p.t).exp() * (1.0 + AUDIT_SLACK),
        k: bkm.c2 / p.eps * (-p.t / 2.0).exp() * (1.0 + AUDIT_SLACK),
        t_cap: bkm.c2 / p.eps * (1.0 + AUDIT_SLACK),
        c2: bkm.c2,
        c3: bkm.c3,
    };
    let cand = BkmWitness {
        a0: c[0],
        a: c[1..].iter().map(|v| -v).collect(),
    };
    let [lin, grad, graph, all] = linear_form_values(chart, x, cand.a0, &cand.a)?;
    let system_ok = |lin: f64, grad: f64, graph: f64, all: f64| {
        all > 0.0 && lin < system.delta && grad < system.k && graph < system.t_cap
    };
    let mut candidate = if system_ok(lin, grad, graph, all) {
        Some(cand)
    } else {
        out.system_search = true;
        let found = form_search(chart, x, system.delta, system.k, system.t_cap, WITNESS_NODE_BUDGET, |w| {
            let [lin, grad, graph, all] = linear_form_values(chart, x, w.a0, &w.a)?;
            Ok(system_ok(lin, grad, graph, all))
        })?;
        if found.is_none() {
            out.violations.push(AuditViolation {
                x: x.to_vec(),
                step: "system".into(),
                detail: format!(
                    "no integer (a₀, a ≠ 0) with |a₀+f·a| < {}, ‖∇fᵀa‖ < {}, |a_graph| < {}",
                    system.delta, system.k, system.t_cap
                ),
            });
        }
        found
    };

    match &candidate {
        Some(w) if is_bkm_witness(chart, x, w, bkm)? => {}
        _ => {
            out.bkm_search = true;
            candidate = bkm_witness(chart, x, bkm)?;
            if candidate.is_none() {
                out.violations.push(AuditViolation {
                    x: x.to_vec(),
                    step: "bkm".into(),
                    detail: format!("no witness for δ = {}, K = {}, T = {}", bkm.delta, bkm.k, bkm.t_cap),
                });
            }
        }
    }
    out.candidate = candidate;
    Ok(out)
}

/// Runs the minor-arc inclusion chain on every raw-minor cell, and checks the
/// linear-form witness on every enlarged cell using the nearest raw candidate
/// (falling back to a search).
pub fn inclusion_audit(chart: &ManifoldChart, p: &FlowParams, map: &ArcMap) -> Result<AuditReport> {
    check_dims(chart, p)?;
    if map.params != *p {
        return Err(Error::invalid("arc map was built with different flow parameters"));
    }
    let bkm = BkmParams::from_flow(chart, p);
    let t0 = bkm.c3.ln();
    let raw: Vec<usize> = (0..map.cells.len())
        .filter(|&i| map.cells[i].label == ArcLabel::RawMinor)
        .collect();
    let audits: Vec<RawAudit> = raw
        .par_iter()
        .map(|&i| audit_raw(chart, p, &map.cells[i].center, &bkm))
        .collect::<Result<Vec<_>>>()?;

    let mut report = AuditReport {
        c2: bkm.c2,
        c3: bkm.c3,
        t0,
        regime_ok: p.t >= t0,
        bkm,
        bkm_regime_ok: bkm.regime_ok(chart.n()),
        raw_points: raw.len(),
        enlarged_points: 0,
        max_mahler_ratio: 0.0,
        system_searches: 0,
        bkm_searches: 0,
        violations: Vec::new(),
    };
    for a in &audits {
        report.max_mahler_ratio = report.max_mahler_ratio.max(a.mahler_ratio);
        report.system_searches += usize::from(a.system_search);
        report.bkm_searches += usize::from(a.bkm_search);
        report.violations.extend(a.violations.iter().cloned());
    }

    let enlarged: Vec<usize> = (0..map.cells.len())
        .filter(|&i| map.cells[i].label == ArcLabel::EnlargedMinor)
        .collect();
    report.enlarged_points = enlarged.len();
    let centers: Vec<(&[f64], Option<&BkmWitness>)> = raw
        .iter()
        .zip(&audits)
        .map(|(&i, a)| (map.cells[i].center.as_slice(), a.candidate.as_ref()))
        .collect();
    let results: Vec<(bool, Option<AuditViolation>)> = enlarged
        .par_iter()
        .map(|&i| {
            let x = &map.cells[i].center;
            let near = centers
                .iter()
                .filter_map(|(c, w)| w.map(|w| (dist(c, x), w)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, w)) = near {
                if is_bkm_witness(chart, x, w, &bkm)? {
                    return Ok((false, None));
                }
            }
            let found = bkm_witness(chart, x, &bkm)?;
            Ok((
                true,
                found.is_none().then(|| AuditViolation {
                    x: x.clone(),
                    step: "bkm".into(),
                    detail: "enlarged point without witness".into(),
                }),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    for (searched, v) in results {
        report.bkm_searches += usize::from(searched);
        report.violations.extend(v);
    }
    Ok(report)
}
