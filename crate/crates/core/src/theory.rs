//! Closed-form calculators: series classifiers for `ψ(q) = c q^{-τ}(log q)^{-β}`,
//! Jarník-type dimension formulas, the exponent window for nondegenerate
//! manifolds, the spectrum constant `δ_n`, and an empirical estimator of the
//! simultaneous approximation exponent `λ_n(x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for exponent comparisons.
pub const EXP_TOL: f64 = 1e-12;
/// Largest `Q` accepted by [`lambda_exponent_estimate`].
pub const MAX_Q: u64 = 100_000;
/// `‖qx‖` below this is read as an exact hit.
pub const RATIONAL_TOL: f64 = 1e-9;

/// `ψ(q) = c q^{-τ} (log q)^{-β}` for `q ≥ q₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLogPsi {
    pub tau: f64,
    pub c: f64,
    pub beta: f64,
    /// From here on ψ is nonincreasing with values in `(0, 1)`.
    pub q0: f64,
}

impl PowerLogPsi {
    pub fn new(tau: f64, c: f64, beta: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() || !(c > 0.0) || !c.is_finite() || !beta.is_finite() {
            return Err(Error::invalid("need τ ≥ 0, c > 0 and finite β"));
        }
        if tau == 0.0 && (beta < 0.0 || (beta == 0.0 && c >= 1.0)) {
            return Err(Error::invalid("ψ is not eventually decreasing into (0, 1)"));
        }
        // d/dq log ψ = −(τ + β/log q)/q
        let mut q0: f64 = 2.0;
        if beta < 0.0 {
            q0 = q0.max((-beta / tau).exp().ceil());
        }
        let mut psi = PowerLogPsi { tau, c, beta, q0 };
        let mut guard = 0;
        while psi.eval(psi.q0) >= 1.0 {
            psi.q0 *= 2.0;
            guard += 1;
            if guard > 2000 || !psi.q0.is_finite() {
                return Err(Error::invalid("ψ never drops below 1"));
            }
        }
        Ok(psi)
    }

    /// `q^{-τ}`.
    pub fn power(tau: f64) -> Result<Self> {
        Self::new(tau, 0.5, 0.0)
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.c * q.powf(-self.tau) * q.ln().powf(-self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeriesKind {
    /// `Σ ψ(q)^n`.
    Khintchine,
    /// `Σ qⁿ (ψ(q)/q)^{s+m}`.
    Hausdorff { s: f64 },
    /// `Σ_t (ψ(e^t)/e^{t/2})^{s−d} (ψ(e^t)ⁿ e^{3t/2})^{−α}`.
    Minor { s: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesDims {
    pub n: usize,
    pub d: usize,
}

impl SeriesDims {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 || d > n {
            return Err(Error::invalid("need 1 ≤ d ≤ n"));
        }
        Ok(SeriesDims { n, d })
    }

    pub fn m(&self) -> usize {
        self.n - self.d
    }
}

/// `Σ x^a (log x)^{-b}` converges iff `a < −1`, or `a = −1` and `b > 1`.
fn classify_exponents(a: f64, b: f64, pivot: f64) -> Convergence {
    if a < pivot - EXP_TOL {
        Convergence::Converges
    } else if a > pivot + EXP_TOL {
        Convergence::Diverges
    } else if b > 1.0 + EXP_TOL {
        Convergence::Converges
    } else {
        Convergence::Diverges
    }
}

/// Exact classification by the net power of `q` (or `e^t`) with a log-factor
/// tie-break.
pub fn classify_series(psi: &PowerLogPsi, kind: SeriesKind, dims: SeriesDims) -> Convergence {
    let n = dims.n as f64;
    let (tau, beta) = (psi.tau, psi.beta);
    match kind {
        SeriesKind::Khintchine => classify_exponents(-n * tau, n * beta, -1.0),
        SeriesKind::Hausdorff { s } => {
            let w = s + dims.m() as f64;
            classify_exponents(n - (tau + 1.0) * w, beta * w, -1.0)
        }
        SeriesKind::Minor { s, alpha } => {
            // terms e^{Et} t^{-b}: compare E with 0
            let sd = s - dims.d as f64;
            let e = (-tau - 0.5) * sd - alpha * (1.5 - n * tau);
            let b = beta * sd - alpha * n * beta;
            classify_exponents(e, b, 0.0)
        }
    }
}

/// Partial-sum classification for arbitrary `ψ`. Not rigorous.
///
/// The series is condensed to `Σ_k 2^k a(2^k)` (the minor series is already a
/// sum over `t` and is left alone); a trailing run of term ratios below `0.95`
/// reads as convergent, a run at or above `1` as divergent.
pub fn classify_series_heuristic(psi: impl Fn(f64) -> f64, kind: SeriesKind, dims: SeriesDims) -> Heuristic {
    let n = dims.n as f64;
    let m = dims.m() as f64;
    let terms: Vec<f64> = match kind {
        SeriesKind::Khintchine => (1..60).map(|k| 2f64.powi(k) * psi(2f64.powi(k)).powf(n)).collect(),
        SeriesKind::Hausdorff { s } => (1..60)
            .map(|k| {
                let q = 2f64.powi(k);
                q * q.powf(n) * (psi(q) / q).powf(s + m)
            })
            .collect(),
        SeriesKind::Minor { s, alpha } => (1..60)
            .map(|t| {
                let t = t as f64;
                let p = psi(t.exp());
                (p / (t / 2.0).exp()).powf(s - dims.d as f64) * (p.powf(n) * (1.5 * t).exp()).powf(-alpha)
            })
            .collect(),
    };
    if terms.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Heuristic::Inconclusive;
    }
    let tail = &terms[terms.len() - 20..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|r| *r < 0.95) {
        Heuristic::Converges
    } else if ratios.iter().all(|r| *r >= 1.0 - 1e-9) {
        Heuristic::Diverges
    } else {
        Heuristic::Inconclusive
    }
}

/// Condensed Khintchine series `Σ_t ψ(e^t)ⁿ e^t = Σ c e^{t(1−nτ)} t^{−nβ}`.
pub fn classify_condensed(psi: &PowerLogPsi, n: usize) -> Convergence {
    let n = n as f64;
    classify_exponents(1.0 - n * psi.tau, n * psi.beta, 0.0)
}

/// Whether `Σ ψ(q)ⁿ` and `Σ ψ(e^t)ⁿ e^t` classify identically.
pub fn condensation_equivalence(psi: &PowerLogPsi, n: usize) -> Result<bool> {
    let dims = SeriesDims::new(n, 1)?;
    Ok(classify_series(psi, SeriesKind::Khintchine, dims) == classify_condensed(psi, n))
}

/// The `t` with `e^{t−1} ≤ q < e^t`.
pub fn tube_time(q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    let mut t = (q as f64).ln().floor() as u64 + 1;
    while (q as f64) >= (t as f64).exp() {
        t += 1;
    }
    while t > 1 && (q as f64) < ((t - 1) as f64).exp() {
        t -= 1;
    }
    Ok(t)
}

/// Lifts `‖y − p/q‖∞ < ψ(q)/q` to the tube at time `t = tube_time(q)`:
/// `‖y − p/q‖∞ < ψ(e^{t−1})/e^{t−1}`, valid once `e^{t−1} ≥ q₀`.
pub fn bridge_holds(psi: &PowerLogPsi, q: u64, dist: f64) -> Result<bool> {
    let t = tube_time(q)? as f64;
    let base = (t - 1.0).exp();
    if base < psi.q0 {
        return Err(Error::invalid("q is below the monotone range of ψ"));
    }
    Ok(dist < psi.eval(base) / base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    /// `(n+1)/(τ+1)`.
    pub ambient: f64,
    /// `(n+1)/(τ+1) − (n−d)`, clamped at 0.
    pub manifold: f64,
    pub manifold_clamped: bool,
}

pub fn dimension_formulas(n: usize, d: usize, tau: f64) -> Result<Dimensions> {
    if n == 0 || d == 0 || d > n {
        return Err(Error::invalid("need 1 ≤ d ≤ n"));
    }
    if !tau.is_finite() || tau < 1.0 / n as f64 - EXP_TOL {
        return Err(Error::invalid(format!("τ = {tau} is below the Dirichlet exponent 1/{n}")));
    }
    let ambient = (n + 1) as f64 / (tau + 1.0);
    let raw = ambient - (n - d) as f64;
    Ok(Dimensions {
        ambient,
        manifold: raw.max(0.0),
        manifold_clamped: raw < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConstants {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub delta: f64,
    /// `1/(2n²+6n) < δ_n`.
    pub lower_bound_holds: bool,
    /// `δ_n < 1/(2n²+5n)`.
    pub upper_bound_holds: bool,
    /// `(n+1)/B_n`, an upper bound for `δ_n`.
    pub valid_upper: f64,
    /// `[1/n, 1/n + δ_n/n]`.
    pub spectrum_interval: [f64; 2],
}

/// `Aδ² + Bδ − (n+1)`.
pub fn delta_polynomial(n: usize, delta: f64) -> f64 {
    let (a, b) = spectrum_coefficients(n);
    a * delta * delta + b * delta - (n + 1) as f64
}

fn spectrum_coefficients(n: usize) -> (f64, f64) {
    let n = n as f64;
    (4.0 * n * n + 2.0 * n, 2.0 * n * n * n + 5.0 * n * n + 3.0 * n - 1.0)
}

pub fn spectrum_constants(n: usize) -> Result<SpectrumConstants> {
    if n < 3 {
        return Err(Error::invalid("spectrum constants need n ≥ 3"));
    }
    let (a, b) = spectrum_coefficients(n);
    let nf = n as f64;
    let d = b * b + 4.0 * a * (nf + 1.0);
    // (√D − B)/(2A) without cancellation
    let delta = 2.0 * (nf + 1.0) / (d.sqrt() + b);
    Ok(SpectrumConstants {
        n,
        a,
        b,
        d,
        delta,
        lower_bound_holds: 1.0 / (2.0 * nf * nf + 6.0 * nf) < delta,
        upper_bound_holds: delta < 1.0 / (2.0 * nf * nf + 5.0 * nf),
        valid_upper: (nf + 1.0) / b,
        spectrum_interval: [1.0 / nf, (1.0 + delta) / nf],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub alpha: f64,
    pub tau_max: f64,
    /// Root of the unreduced inequality by bisection.
    pub tau_bisect: f64,
    /// `1/n ≤ τ_max < 1/(n−1)`.
    pub in_range: bool,
    /// Present for `n ≥ 3`.
    pub spectrum: Option<SpectrumConstants>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// `(nτ−1)/(τ+1) ≤ α(3−2nτ)/(2τ+1)` read as `RHS − LHS ≥ 0`.
pub fn window_slack(n: usize, alpha: f64, tau: f64) -> f64 {
    let n = n as f64;
    alpha * (3.0 - 2.0 * n * tau) / (2.0 * tau + 1.0) - (n * tau - 1.0) / (tau + 1.0)
}

/// Largest `τ` with `(nτ−1)/(τ+1) ≤ α(3−2nτ)/(2τ+1)`, `α = 1/(d(2l−1)(n+1))`.
pub fn exponent_window(n: usize, d: usize, l: usize) -> Result<ExponentReport> {
    if d == 0 || d >= n {
        return Err(Error::invalid("need 1 ≤ d < n"));
    }
    if l == 0 || binomial(d + l, d) - 1 < n as u128 {
        return Err(Error::invalid(format!(
            "order {l} is too small for a nondegenerate {d}-manifold in dimension {n}"
        )));
    }
    let nf = n as f64;
    let alpha = 1.0 / (d as f64 * (2 * l - 1) as f64 * (nf + 1.0));
    // (2n + 2nα)τ² + (n − 2 − 3α + 2nα)τ − (1 + 3α) ≤ 0
    let qa = 2.0 * nf + 2.0 * nf * alpha;
    let qb = nf - 2.0 - 3.0 * alpha + 2.0 * nf * alpha;
    let qc = -(1.0 + 3.0 * alpha);
    let disc = qb * qb - 4.0 * qa * qc;
    let tau_max = if qb > 0.0 {
        2.0 * -qc / (qb + disc.sqrt())
    } else {
        (-qb + disc.sqrt()) / (2.0 * qa)
    };
    // slack > 0 at 1/n and < 0 at 3/(2n)
    let (mut lo, mut hi) = (1.0 / nf, 1.5 / nf);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if window_slack(n, alpha, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_bisect = 0.5 * (lo + hi);
    if (tau_bisect - tau_max).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "quadratic root {tau_max} disagrees with bisection {tau_bisect}"
        )));
    }
    Ok(ExponentReport {
        n,
        d,
        l,
        alpha,
        tau_max,
        tau_bisect,
        in_range: tau_max >= 1.0 / nf && (n == 1 || tau_max < 1.0 / (nf - 1.0)),
        spectrum: if n >= 3 { Some(spectrum_constants(n)?) } else { None },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub n: usize,
    pub q_max: u64,
    /// Least-squares slope of `−log‖qx‖` against `log q` over records.
    pub estimate: f64,
    /// `(q, ‖qx‖)` at each strict record low of `‖qx‖ = max_i ‖q xⁱ‖`.
    pub records: Vec<(u64, f64)>,
    /// `−log‖qx‖ / log q` at the last record.
    pub last_ratio: f64,
}

fn dist_to_int(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// Fits the simultaneous approximation exponent of `(x, x², …, xⁿ)` from the
/// best approximations with `q ≤ Q`.
pub fn lambda_exponent_estimate(x: f64, n: usize, q_max: u64) -> Result<LambdaEstimate> {
    if n == 0 || !x.is_finite() {
        return Err(Error::invalid("need n ≥ 1 and finite x"));
    }
    if q_max > MAX_Q {
        return Err(Error::budget("exponent estimate", format!("Q = {q_max} exceeds {MAX_Q}")));
    }
    if q_max < 2 {
        return Err(Error::invalid("need Q ≥ 2"));
    }
    let powers: Vec<f64> = (1..=n as i32).map(|i| x.powi(i)).collect();
    let norms: Vec<f64> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let q = q as f64;
            powers.iter().map(|p| dist_to_int(q * p)).fold(0.0, f64::max)
        })
        .collect();
    let mut records = Vec::new();
    let mut best = f64::INFINITY;
    for (i, &v) in norms.iter().enumerate() {
        if v < best {
            best = v;
            let q = i as u64 + 1;
            if v < RATIONAL_TOL {
                return Err(Error::invalid(format!(
                    "x looks rational: ‖qx‖ = {v:e} at q = {q}"
                )));
            }
            records.push((q, v));
        }
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|&(q, v)| ((q as f64).ln(), -v.ln())).collect();
    let estimate = slope(&pts).ok_or_else(|| Error::invalid("too few records to fit"))?;
    let &(q_last, v_last) = records.last().expect("q = 1 is always a record");
    let last_ratio = if q_last > 1 { -v_last.ln() / (q_last as f64).ln() } else { f64::NAN };
    Ok(LambdaEstimate {
        n,
        q_max,
        estimate,
        records,
        last_ratio,
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `Σ_{k≥1} 10^{−k!}` rounded to `f64`.
pub fn liouville_constant() -> f64 {
    (1..=4).map(|k: i32| 10f64.powi(-(1..=k).product::<i32>())).sum()
}
