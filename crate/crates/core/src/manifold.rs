//! Monge-form charts `x ↦ (x, f̃(x))` of `d`-dimensional submanifolds of `ℝⁿ`.
//!
//! Builtin charts (Veronese curves, the circle graph, the mixed surface family and
//! general polynomial graphs) carry closed-form derivatives and an analytically
//! proven bound `M` on all first and second partials over their domain. Charts
//! supplied as closures fall back to central finite differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used for every numerical rank decision.
pub const RANK_CUTOFF: f64 = 1e-9;

/// Closed axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    bounds: Vec<[f64; 2]>,
}

impl AxisBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("box must have at least one axis"));
        }
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::invalid(format!("axis {i}: bad interval [{lo}, {hi}]")));
            }
        }
        Ok(Self { bounds })
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![[lo, hi]; d])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![[lo, hi]])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.bounds[i][0]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.bounds[i][1]
    }

    pub fn side(&self, i: usize) -> f64 {
        self.bounds[i][1] - self.bounds[i][0]
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        other.dim() == self.dim()
            && other
                .bounds
                .iter()
                .zip(&self.bounds)
                .all(|(o, s)| o[0] >= s[0] && o[1] <= s[1])
    }

    /// Intersection with another box of the same dimension, `None` when empty.
    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        if other.dim() != self.dim() {
            return None;
        }
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.bounds.iter().zip(&other.bounds) {
            let lo = a[0].max(b[0]);
            let hi = a[1].min(b[1]);
            if lo > hi {
                return None;
            }
            out.push([lo, hi]);
        }
        Some(AxisBox { bounds: out })
    }

    /// Split along axis `axis` at its midpoint.
    pub fn halves(&self, axis: usize) -> (AxisBox, AxisBox) {
        let mid = 0.5 * (self.lo(axis) + self.hi(axis));
        let mut a = self.clone();
        let mut b = self.clone();
        a.bounds[axis][1] = mid;
        b.bounds[axis][0] = mid;
        (a, b)
    }

    /// Sup-norm ball `{y : ‖y − c‖∞ ≤ r}`.
    pub fn sup_ball(center: &[f64], r: f64) -> Result<Self> {
        Self::new(center.iter().map(|c| [c - r, c + r]).collect())
    }
}

/// Monomial `coef · Π x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Term {
    fn eval(&self, x: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(x)
            .fold(self.coef, |acc, (&p, &xi)| acc * xi.powi(p as i32))
    }

    fn derivative(&self, alpha: &[u32]) -> Option<Term> {
        let mut coef = self.coef;
        let mut powers = self.powers.clone();
        for (p, &a) in powers.iter_mut().zip(alpha) {
            if a > *p {
                return None;
            }
            for k in 0..a {
                coef *= f64::from(*p - k);
            }
            *p -= a;
        }
        Some(Term { coef, powers })
    }

    /// Upper bound of `|term|` on the box.
    fn abs_bound(&self, domain: &AxisBox) -> f64 {
        self.powers
            .iter()
            .zip(domain.bounds())
            .fold(self.coef.abs(), |acc, (&p, [lo, hi])| {
                acc * lo.abs().max(hi.abs()).powi(p as i32)
            })
    }
}

/// Real polynomial in `d` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    /// Univariate polynomial from coefficients of `1, x, x², …`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| Term {
                coef: c,
                powers: vec![k as u32],
            })
            .collect();
        Polynomial { terms }
    }

    pub fn monomial(coef: f64, powers: Vec<u32>) -> Self {
        Polynomial {
            terms: vec![Term { coef, powers }],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn derivative(&self, alpha: &[u32]) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().filter_map(|t| t.derivative(alpha)).collect(),
        }
    }

    pub fn abs_bound(&self, domain: &AxisBox) -> f64 {
        self.terms.iter().map(|t| t.abs_bound(domain)).sum()
    }

    fn check_arity(&self, d: usize) -> Result<()> {
        match self.terms.iter().find(|t| t.powers.len() != d) {
            Some(t) => Err(Error::invalid(format!(
                "term {:?} has {} exponents, expected {d}",
                t,
                t.powers.len()
            ))),
            None => Ok(()),
        }
    }

    fn is_affine(&self) -> bool {
        self.terms.iter().all(|t| t.powers.iter().sum::<u32>() <= 1)
    }
}

/// Map `ℝ^d → ℝ^m` supplied by the caller.
pub type CustomFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Jacobian `ℝ^d → ℝ^{m×d}` supplied by the caller.
pub type CustomJac = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum GraphMap {
    Poly(Vec<Polynomial>),
    /// Upper half of `x² + y² = r`.
    Circle { r: f64 },
    Custom {
        eval: CustomFn,
        jac: Option<CustomJac>,
    },
}

impl fmt::Debug for GraphMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphMap::Poly(p) => f.debug_tuple("Poly").field(p).finish(),
            GraphMap::Circle { r } => f.debug_struct("Circle").field("r", r).finish(),
            GraphMap::Custom { jac, .. } => f
                .debug_struct("Custom")
                .field("closed_form_jacobian", &jac.is_some())
                .finish(),
        }
    }
}

/// Finite-difference step for closure charts; central differences then carry an
/// `O(step²)` truncation error on top of `O(ε_mach / step)` rounding.
pub const FD_STEP: f64 = 1e-5;

/// Result of the curve nondegeneracy test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nondegeneracy {
    /// Smallest `l` whose derivatives `f', …, f^{(l)}` span `ℝⁿ`.
    Order(u32),
    DegenerateUpTo(u32),
}

/// Monge chart `x ↦ (x, f̃(x))` on a closed box, immutable after construction.
#[derive(Debug, Clone)]
pub struct ManifoldChart {
    label: String,
    d: usize,
    n: usize,
    domain: AxisBox,
    map: GraphMap,
    deriv_bound: f64,
    nondeg_order: Option<u32>,
}

impl ManifoldChart {
    fn from_polys(label: String, d: usize, polys: Vec<Polynomial>, domain: AxisBox) -> Result<Self> {
        let m = polys.len();
        if d == 0 || m == 0 {
            return Err(Error::invalid("need 1 ≤ d < n"));
        }
        if domain.dim() != d {
            return Err(Error::invalid(format!("domain has dim {}, chart has d = {d}", domain.dim())));
        }
        for p in &polys {
            p.check_arity(d)?;
        }
        let mut chart = ManifoldChart {
            label,
            d,
            n: d + m,
            domain,
            map: GraphMap::Poly(polys),
            deriv_bound: 1.0,
            nondeg_order: None,
        };
        chart.deriv_bound = chart.analytic_deriv_bound();
        Ok(chart)
    }

    /// Veronese curve `x ↦ (x, x², …, xⁿ)` on `[-1, 1]`, nondegenerate of order `n`.
    pub fn veronese(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("veronese curve needs n ≥ 2"));
        }
        let polys = (2..=n).map(|k| Polynomial::monomial(1.0, vec![k as u32])).collect();
        let mut c = Self::from_polys(format!("veronese({n})"), 1, polys, AxisBox::interval(-1.0, 1.0)?)?;
        c.nondeg_order = Some(n as u32);
        Ok(c)
    }

    /// Graph chart `x ↦ (x, √(r − x²))` of the circle `x² + y² = r`.
    ///
    /// The chart is singular at `±√r`; the domain is shrunk to `[-a, a]` with
    /// `a = (1 − margin)·√r`.
    pub fn circle(r: f64, margin: f64) -> Result<Self> {
        if !(r > 0.0) || !(margin > 0.0 && margin < 1.0) {
            return Err(Error::invalid("circle needs r > 0 and margin in (0, 1)"));
        }
        let a = (1.0 - margin) * r.sqrt();
        let s = r - a * a;
        // |f'| and |f''| are both maximal at the domain endpoints.
        let m = (a / s.sqrt()).max(r / s.powf(1.5)).max(1.0);
        Ok(ManifoldChart {
            label: format!("circle({r})"),
            d: 1,
            n: 2,
            domain: AxisBox::interval(-a, a)?,
            map: GraphMap::Circle { r },
            deriv_bound: m,
            nondeg_order: Some(2),
        })
    }

    /// `(x_1, …, x_d) ↦ (x_1, …, x_d, x_d², …, x_d^{n+1−d})` on `[-1, 1]^d`.
    pub fn mixed(d: usize, n: usize) -> Result<Self> {
        if d == 0 || d >= n {
            return Err(Error::invalid("mixed chart needs 1 ≤ d < n"));
        }
        let polys = (2..=(n + 1 - d))
            .map(|k| {
                let mut powers = vec![0; d];
                powers[d - 1] = k as u32;
                Polynomial::monomial(1.0, powers)
            })
            .collect();
        let mut c = Self::from_polys(format!("mixed({d},{n})"), d, polys, AxisBox::cube(d, -1.0, 1.0)?)?;
        c.nondeg_order = Some((n + 1 - d) as u32);
        Ok(c)
    }

    /// Polynomial graph chart with one polynomial per graph coordinate.
    pub fn polynomial(d: usize, components: Vec<Polynomial>, domain: AxisBox) -> Result<Self> {
        Self::from_polys(format!("poly(d={d}, m={})", components.len()), d, components, domain)
    }

    /// Polynomial curve from univariate coefficient lists.
    pub fn poly_curve(coeffs: &[Vec<f64>], domain: AxisBox) -> Result<Self> {
        let polys = coeffs.iter().map(|c| Polynomial::univariate(c)).collect();
        Self::polynomial(1, polys, domain)
    }

    /// Chart defined by closures. Without `jac`, derivatives come from central
    /// differences with step [`FD_STEP`]; `deriv_bound` is then validated by sampling.
    pub fn custom(
        label: impl Into<String>,
        domain: AxisBox,
        m: usize,
        eval: CustomFn,
        jac: Option<CustomJac>,
        deriv_bound: f64,
    ) -> Result<Self> {
        let d = domain.dim();
        if m == 0 {
            return Err(Error::invalid("need 1 ≤ d < n"));
        }
        let chart = ManifoldChart {
            label: label.into(),
            d,
            n: d + m,
            domain,
            map: GraphMap::Custom { eval, jac },
            deriv_bound: deriv_bound.max(1.0),
            nondeg_order: None,
        };
        chart.validate_deriv_bound(chart.default_validation_points())?;
        Ok(chart)
    }

    /// Restrict or move the domain. Builtin charts recompute their analytic `M`.
    pub fn with_domain(mut self, domain: AxisBox) -> Result<Self> {
        if domain.dim() != self.d {
            return Err(Error::invalid("domain dimension mismatch"));
        }
        if let GraphMap::Circle { r } = self.map {
            let a = domain.lo(0).abs().max(domain.hi(0).abs());
            if a >= r.sqrt() {
                return Err(Error::invalid("circle chart domain must stay inside (-√r, √r)"));
            }
        }
        self.domain = domain;
        match self.map {
            GraphMap::Poly(_) => self.deriv_bound = self.analytic_deriv_bound(),
            GraphMap::Circle { r } => {
                let a = self.domain.lo(0).abs().max(self.domain.hi(0).abs());
                let s = r - a * a;
                self.deriv_bound = (a / s.sqrt()).max(r / s.powf(1.5)).max(1.0);
            }
            GraphMap::Custom { .. } => self.validate_deriv_bound(self.default_validation_points())?,
        }
        Ok(self)
    }

    /// Declare `M`; rejected when dense sampling finds a larger partial.
    pub fn with_deriv_bound(mut self, m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::invalid("M must be ≥ 1"));
        }
        self.deriv_bound = m;
        self.validate_deriv_bound(self.default_validation_points())?;
        Ok(self)
    }

    pub fn with_nondeg_order(mut self, l: u32) -> Self {
        self.nondeg_order = Some(l);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.n - self.d
    }
    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }
    /// The bound `M ≥ 1` on all first and second partials of `f̃`.
    pub fn deriv_bound(&self) -> f64 {
        self.deriv_bound
    }
    pub fn nondeg_order(&self) -> Option<u32> {
        self.nondeg_order
    }

    pub fn has_closed_form_derivatives(&self) -> bool {
        !matches!(self.map, GraphMap::Custom { jac: None, .. })
    }

    /// True when every graph coordinate is affine in `x`.
    pub fn is_affine(&self) -> bool {
        matches!(&self.map, GraphMap::Poly(p) if p.iter().all(Polynomial::is_affine))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.d && self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                point: x.to_vec(),
                domain: self.domain.bounds().to_vec(),
            })
        }
    }

    /// `f(x) = (x, f̃(x)) ∈ ℝⁿ`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = x.to_vec();
        out.extend(self.graph_unchecked(x));
        Ok(out)
    }

    /// `f̃(x) ∈ ℝ^m`.
    pub fn graph(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.graph_unchecked(x))
    }

    pub(crate) fn graph_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.map {
            GraphMap::Poly(p) => p.iter().map(|q| q.eval(x)).collect(),
            GraphMap::Circle { r } => vec![(r - x[0] * x[0]).max(0.0).sqrt()],
            GraphMap::Custom { eval, .. } => eval(x),
        }
    }

    /// `J(x) = [∂f̃_i/∂x_j]`, an `m × d` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let (d, m) = (self.d, self.m());
        match &self.map {
            GraphMap::Poly(p) => DMatrix::from_fn(m, d, |i, j| {
                let mut alpha = vec![0; d];
                alpha[j] = 1;
                p[i].derivative(&alpha).eval(x)
            }),
            GraphMap::Circle { r } => {
                let s = (r - x[0] * x[0]).sqrt();
                DMatrix::from_element(1, 1, -x[0] / s)
            }
            GraphMap::Custom { jac: Some(jac), .. } => jac(x),
            GraphMap::Custom { eval, jac: None } => central_jacobian(eval.as_ref(), x, m),
        }
    }

    /// Second partials: one `d × d` matrix per graph coordinate.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let (d, m) = (self.d, self.m());
        match &self.map {
            GraphMap::Poly(p) => p
                .iter()
                .map(|q| {
                    DMatrix::from_fn(d, d, |a, b| {
                        let mut alpha = vec![0; d];
                        alpha[a] += 1;
                        alpha[b] += 1;
                        q.derivative(&alpha).eval(x)
                    })
                })
                .collect(),
            GraphMap::Circle { r } => {
                let s = r - x[0] * x[0];
                vec![DMatrix::from_element(1, 1, -r / s.powf(1.5))]
            }
            GraphMap::Custom { .. } => {
                // Differentiate the Jacobian (closed form or not) once more.
                let mut out = vec![DMatrix::zeros(d, d); m];
                for b in 0..d {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[b] += FD_STEP;
                    xm[b] -= FD_STEP;
                    let jp = self.jacobian_unchecked(&xp);
                    let jm = self.jacobian_unchecked(&xm);
                    for (k, h) in out.iter_mut().enumerate() {
                        for a in 0..d {
                            h[(a, b)] = (jp[(k, a)] - jm[(k, a)]) / (2.0 * FD_STEP);
                        }
                    }
                }
                out
            }
        }
    }

    /// Affine intercept `h(x) = f̃(x) − J(x)xᵀ`.
    pub fn intercept_h(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.intercept_unchecked(x))
    }

    pub(crate) fn intercept_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let f = self.graph_unchecked(x);
        let j = self.jacobian_unchecked(x);
        (0..self.m())
            .map(|i| f[i] - (0..self.d).map(|k| j[(i, k)] * x[k]).sum::<f64>())
            .collect()
    }

    /// Derivatives `f^{(k)}(x)` of the full curve map for `k = 1..=order` (curves only).
    pub fn curve_derivatives(&self, x: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        if self.d != 1 {
            return Err(Error::Unsupported("curve derivatives need d = 1".into()));
        }
        self.check(&[x])?;
        let mut out = Vec::with_capacity(order);
        let graph: Vec<Vec<f64>> = match &self.map {
            GraphMap::Poly(p) => (1..=order)
                .map(|k| p.iter().map(|q| q.derivative(&[k as u32]).eval(&[x])).collect())
                .collect(),
            GraphMap::Circle { r } => {
                let c = sqrt_taylor(r - x * x, -2.0 * x, -1.0, order);
                let mut fact = 1.0;
                (1..=order)
                    .map(|k| {
                        fact *= k as f64;
                        vec![fact * c[k]]
                    })
                    .collect()
            }
            GraphMap::Custom { .. } => {
                return Err(Error::Unsupported(
                    "higher derivatives of closure charts are not available".into(),
                ))
            }
        };
        for (k, g) in graph.into_iter().enumerate() {
            let mut v = vec![if k == 0 { 1.0 } else { 0.0 }];
            v.extend(g);
            out.push(v);
        }
        Ok(out)
    }

    /// Smallest `l ≤ l_max` such that `f'(x), …, f^{(l)}(x)` span `ℝⁿ`.
    ///
    /// Rank is decided by singular values with cutoff [`RANK_CUTOFF`] relative to the
    /// largest. Only curves are supported.
    pub fn nondegeneracy_order(&self, x: f64, l_max: u32) -> Result<Nondegeneracy> {
        if self.d != 1 {
            return Err(Error::Unsupported("nondegeneracy order is only decided for curves".into()));
        }
        if (l_max as usize) < self.n {
            return Err(Error::invalid(format!("l_max = {l_max} < n = {}", self.n)));
        }
        let derivs = self.curve_derivatives(x, l_max as usize)?;
        for l in self.n..=l_max as usize {
            let mat = DMatrix::from_fn(self.n, l, |i, j| derivs[j][i]);
            if numerical_rank(&mat) == self.n {
                return Ok(Nondegeneracy::Order(l as u32));
            }
        }
        Ok(Nondegeneracy::DegenerateUpTo(l_max))
    }

    /// Analytic bound on first and second partials for polynomial charts.
    fn analytic_deriv_bound(&self) -> f64 {
        let GraphMap::Poly(polys) = &self.map else {
            return self.deriv_bound;
        };
        let d = self.d;
        let mut best: f64 = 1.0;
        for p in polys {
            for a in 0..d {
                let mut alpha = vec![0; d];
                alpha[a] = 1;
                best = best.max(p.derivative(&alpha).abs_bound(&self.domain));
                for b in 0..d {
                    let mut beta = alpha.clone();
                    beta[b] += 1;
                    best = best.max(p.derivative(&beta).abs_bound(&self.domain));
                }
            }
        }
        best
    }

    fn default_validation_points(&self) -> usize {
        // Grid of at least 10^d points.
        match self.d {
            1 => 1001,
            2 => 101,
            3 => 21,
            _ => 10,
        }
    }

    /// Largest absolute first or second partial over a `per_axis^d` grid.
    pub fn sampled_deriv_max(&self, per_axis: usize) -> f64 {
        let per_axis = per_axis.max(2);
        let d = self.d;
        let mut idx = vec![0usize; d];
        let mut best: f64 = 0.0;
        loop {
            let x: Vec<f64> = (0..d)
                .map(|i| {
                    self.domain.lo(i) + self.domain.side(i) * idx[i] as f64 / (per_axis - 1) as f64
                })
                .collect();
            let j = self.jacobian_unchecked(&x);
            best = best.max(j.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            for h in self.hessian_unchecked(&x) {
                best = best.max(h.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            let mut k = 0;
            loop {
                if k == d {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn validate_deriv_bound(&self, per_axis: usize) -> Result<()> {
        let sampled = self.sampled_deriv_max(per_axis);
        if sampled > self.deriv_bound * (1.0 + 1e-12) {
            Err(Error::invalid(format!(
                "declared M = {} but sampled partial reaches {sampled}",
                self.deriv_bound
            )))
        } else {
            Ok(())
        }
    }
}

/// Central-difference Jacobian of a closure map.
fn central_jacobian(f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync), x: &[f64], m: usize) -> DMatrix<f64> {
    let d = x.len();
    let mut j = DMatrix::zeros(m, d);
    for k in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += FD_STEP;
        xm[k] -= FD_STEP;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..m {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * FD_STEP);
        }
    }
    j
}

/// Taylor coefficients of `√(s0 + s1 h + s2 h²)` at `h = 0` up to `h^order`.
fn sqrt_taylor(s0: f64, s1: f64, s2: f64, order: usize) -> Vec<f64> {
    let s = [s0, s1, s2];
    let mut g = vec![0.0; order + 1];
    g[0] = s0.sqrt();
    for k in 1..=order {
        let sk = if k < 3 { s[k] } else { 0.0 };
        let conv: f64 = (1..k).map(|i| g[i] * g[k - i]).sum();
        g[k] = (sk - conv) / (2.0 * g[0]);
    }
    g
}

/// Rank with singular-value cutoff [`RANK_CUTOFF`] relative to the largest value.
pub fn numerical_rank(mat: &DMatrix<f64>) -> usize {
    let sv = mat.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|v| **v > RANK_CUTOFF * top).count()
}

/// Chart description as read from TOML/JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub kind: ChartKind,
    #[serde(default)]
    pub params: ChartParams,
    #[serde(default)]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, rename = "M")]
    pub deriv_bound: Option<f64>,
    #[serde(default)]
    pub l: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Veronese,
    Circle,
    Mixed,
    Poly,
}

/// Union of the parameters used by the chart kinds; each kind reads its own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartParams {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub r: Option<f64>,
    /// Domain shrink margin for the circle chart (default 0.1).
    pub margin: Option<f64>,
    /// Univariate coefficient lists, one per graph coordinate (curves).
    pub coeffs: Option<Vec<Vec<f64>>>,
    /// General multivariate components, one term list per graph coordinate.
    pub components: Option<Vec<Vec<Term>>>,
}

impl ChartSpec {
    pub fn build(&self) -> Result<ManifoldChart> {
        let p = &self.params;
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::invalid(format!("{:?} chart needs params.{name}", self.kind)))
        };
        let mut chart = match self.kind {
            ChartKind::Veronese => ManifoldChart::veronese(need(p.n, "n")?)?,
            ChartKind::Circle => ManifoldChart::circle(
                p.r.ok_or_else(|| Error::invalid("circle chart needs params.r"))?,
                p.margin.unwrap_or(0.1),
            )?,
            ChartKind::Mixed => ManifoldChart::mixed(need(p.d, "d")?, need(p.n, "n")?)?,
            ChartKind::Poly => {
                let domain = AxisBox::new(
                    self.domain
                        .clone()
                        .ok_or_else(|| Error::invalid("poly chart needs a domain"))?,
                )?;
                match (&p.coeffs, &p.components) {
                    (Some(c), None) => ManifoldChart::poly_curve(c, domain)?,
                    (None, Some(comps)) => {
                        let polys = comps.iter().map(|t| Polynomial { terms: t.clone() }).collect();
                        ManifoldChart::polynomial(domain.dim(), polys, domain)?
                    }
                    _ => return Err(Error::invalid("poly chart needs exactly one of params.coeffs / params.components")),
                }
            }
        };
        if let Some(dom) = &self.domain {
            if self.kind != ChartKind::Poly {
                chart = chart.with_domain(AxisBox::new(dom.clone())?)?;
            }
        }
        if let Some(m) = self.deriv_bound {
            chart = chart.with_deriv_bound(m)?;
        }
        if let Some(l) = self.l {
            chart = chart.with_nondeg_order(l);
        }
        Ok(chart)
    }
}
