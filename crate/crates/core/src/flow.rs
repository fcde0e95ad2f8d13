//! Unipotent translations `U(y)`, shears `Z(Θ)`, the chart element `zu(x)`, the
//! diagonal flows `g_t`, `b_t` and their duals, plus checks of the identities
//! relating them.
//!
//! Matrices act on `ℝ^{n+1}` with coordinates ordered as
//! `(graph coordinates reversed, domain coordinates reversed, 1)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dual_element, reverse_involution};
use crate::manifold::ManifoldChart;

/// Absolute floor below which elementwise differences count as zero.
pub const ABS_FLOOR: f64 = 1e-14;

/// Flow time and tube width: `φ = (εⁿ e^t)^{1/(n+1)}`, `h = dt / 2(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub eps: f64,
    pub t: f64,
    pub n: usize,
    pub d: usize,
    pub phi: f64,
    pub h: f64,
}

impl FlowParams {
    pub fn new(eps: f64, t: f64, n: usize, d: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("ε = {eps} must lie in (0, 1)")));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("t = {t} must be positive")));
        }
        if n < 2 || d == 0 || d >= n {
            return Err(Error::invalid(format!("need n ≥ 2 and 1 ≤ d < n, got n = {n}, d = {d}")));
        }
        let nf = n as f64;
        let phi = (nf * eps.ln() + t) / (nf + 1.0);
        Ok(FlowParams {
            eps,
            t,
            n,
            d,
            phi: phi.exp(),
            h: d as f64 * t / (2.0 * (nf + 1.0)),
        })
    }

    pub fn for_chart(chart: &ManifoldChart, eps: f64, t: f64) -> Result<Self> {
        Self::new(eps, t, chart.n(), chart.d())
    }

    pub fn m(&self) -> usize {
        self.n - self.d
    }

    /// `ε / e^t`, the tube half-width.
    pub fn tube_width(&self) -> f64 {
        self.eps * (-self.t).exp()
    }

    /// `ε e^{-t/2}`, the minor-arc enlargement radius.
    pub fn enlargement_radius(&self) -> f64 {
        self.eps * (-self.t / 2.0).exp()
    }
}

/// `U(y)`: identity with last column `(y_n, …, y_1, 1)ᵀ`.
#[allow(non_snake_case)]
pub fn matrix_U(y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    let mut u = DMatrix::identity(n + 1, n + 1);
    for i in 0..n {
        u[(i, n)] = y[n - 1 - i];
    }
    u
}

/// `Z(Θ)` for an `m × d` matrix `Θ`: identity with block `σ_m Θ σ_d` in rows
/// `0..m`, columns `m..m+d`.
#[allow(non_snake_case)]
pub fn matrix_Z(theta: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, d) = theta.shape();
    let k = m + d + 1;
    let mut z = DMatrix::identity(k, k);
    for i in 0..m {
        for j in 0..d {
            z[(i, m + j)] = theta[(m - 1 - i, d - 1 - j)];
        }
    }
    z
}

/// Operator norm induced by the sup-norm: maximal row ℓ¹ sum.
pub fn sup_operator_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `zu(x)` and its dual at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAt {
    pub x: Vec<f64>,
    /// `Z(−J(x)) U(f(x))`.
    pub zu: DMatrix<f64>,
    /// `σ (zuᵀ)^{-1} σ`.
    pub zu_dual: DMatrix<f64>,
}

/// `zu(x) = Z(−J(x))·U(f(x))` together with its dual, both from the product form.
pub fn assemble_zu(chart: &ManifoldChart, x: &[f64]) -> Result<FrameAt> {
    let f = chart.evaluate(x)?;
    let j = chart.jacobian(x)?;
    let zu = matrix_Z(&(-j)) * matrix_U(&f);
    let zu_dual = dual_element(&zu)?;
    Ok(FrameAt {
        x: x.to_vec(),
        zu,
        zu_dual,
    })
}

/// Block form `[[I_m, −σJσ, σh], [0, I_d, σx], [0, 0, 1]]` with `h = f̃ − Jx`.
pub fn zu_closed_form(chart: &ManifoldChart, x: &[f64]) -> Result<DMatrix<f64>> {
    let (d, m) = (chart.d(), chart.m());
    let j = chart.jacobian(x)?;
    let h = chart.intercept_h(x)?;
    let n = d + m;
    let mut out = DMatrix::identity(n + 1, n + 1);
    for a in 0..m {
        for b in 0..d {
            out[(a, m + b)] = -j[(m - 1 - a, d - 1 - b)];
        }
        out[(a, n)] = h[m - 1 - a];
    }
    for b in 0..d {
        out[(m + b, n)] = x[d - 1 - b];
    }
    Ok(out)
}

/// Block form of the dual: `[[1, −x, −f̃], [0, I_d, Jᵀ], [0, 0, I_m]]`.
pub fn zu_dual_closed_form(chart: &ManifoldChart, x: &[f64]) -> Result<DMatrix<f64>> {
    let (d, m) = (chart.d(), chart.m());
    let f = chart.graph(x)?;
    let j = chart.jacobian(x)?;
    let n = d + m;
    let mut out = DMatrix::identity(n + 1, n + 1);
    for a in 0..d {
        out[(0, 1 + a)] = -x[a];
        for b in 0..m {
            out[(1 + a, 1 + d + b)] = j[(b, a)];
        }
    }
    for b in 0..m {
        out[(0, 1 + d + b)] = -f[b];
    }
    Ok(out)
}

/// `g_t`, `b_t` and their duals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFlows {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g_dual: DMatrix<f64>,
    pub b_dual: DMatrix<f64>,
}

/// `g_t = diag(φ/ε, …, φ/ε, φe^{-t})`.
pub fn g_matrix(p: &FlowParams) -> DMatrix<f64> {
    let mut v = vec![p.phi / p.eps; p.n];
    v.push(p.phi * (-p.t).exp());
    DMatrix::from_diagonal(&DVector::from_vec(v))
}

/// `b_s = diag(e^{h_s} I_m, e^{−(m+1)s/2(n+1)} I_d, e^{h_s})` with `h_s = ds/2(n+1)`;
/// `s` may be negative.
pub fn b_matrix(s: f64, n: usize, d: usize) -> DMatrix<f64> {
    let m = n - d;
    let k = (n + 1) as f64;
    let up = (d as f64 * s / (2.0 * k)).exp();
    let down = (-((m + 1) as f64) * s / (2.0 * k)).exp();
    let mut v = vec![up; m];
    v.extend(std::iter::repeat_n(down, d));
    v.push(up);
    DMatrix::from_diagonal(&DVector::from_vec(v))
}

/// `g_t* = φ^{-1} diag(e^t, ε, …, ε)`.
pub fn g_dual_closed_form(p: &FlowParams) -> DMatrix<f64> {
    let mut v = vec![p.t.exp() / p.phi];
    v.extend(std::iter::repeat_n(p.eps / p.phi, p.n));
    DMatrix::from_diagonal(&DVector::from_vec(v))
}

/// `b_t* = diag(e^{-h}, e^{(m+1)t/2(n+1)} I_d, e^{-h} I_m)`.
pub fn b_dual_closed_form(p: &FlowParams) -> DMatrix<f64> {
    let k = (p.n + 1) as f64;
    let mut v = vec![(-p.h).exp()];
    v.extend(std::iter::repeat_n(((p.m() + 1) as f64 * p.t / (2.0 * k)).exp(), p.d));
    v.extend(std::iter::repeat_n((-p.h).exp(), p.m()));
    DMatrix::from_diagonal(&DVector::from_vec(v))
}

pub fn diagonal_flows(p: &FlowParams) -> DiagonalFlows {
    DiagonalFlows {
        g: g_matrix(p),
        b: b_matrix(p.t, p.n, p.d),
        g_dual: g_dual_closed_form(p),
        b_dual: b_dual_closed_form(p),
    }
}

/// Basis `b_t g_t zu(x)` of the flowed chart lattice.
pub fn flowed_basis(chart: &ManifoldChart, p: &FlowParams, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dims(chart, p)?;
    let fr = assemble_zu(chart, x)?;
    Ok(b_matrix(p.t, p.n, p.d) * g_matrix(p) * fr.zu)
}

/// Basis `b_t* g_t* zu*(x)` of the dual flowed lattice.
pub fn flowed_dual_basis(chart: &ManifoldChart, p: &FlowParams, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dims(chart, p)?;
    Ok(b_dual_closed_form(p) * g_dual_closed_form(p) * zu_dual_closed_form(chart, x)?)
}

pub(crate) fn check_dims(chart: &ManifoldChart, p: &FlowParams) -> Result<()> {
    if chart.n() != p.n || chart.d() != p.d {
        return Err(Error::invalid(format!(
            "flow parameters are for (n, d) = ({}, {}), chart has ({}, {})",
            p.n,
            p.d,
            chart.n(),
            chart.d()
        )));
    }
    Ok(())
}

/// Max elementwise relative error; differences below [`ABS_FLOOR`] count as zero.
pub fn max_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let diff = (x - y).abs();
            if diff <= ABS_FLOOR {
                0.0
            } else {
                diff / y.abs().max(ABS_FLOOR)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub samples: usize,
    /// `g U(y) g^{-1}` vs `U(e^t ε^{-1} y)`.
    pub g_on_u: f64,
    /// `g Z(Θ) g^{-1}` vs `Z(Θ)`.
    pub g_on_z: f64,
    /// `b_t U((x, 0)) b_{-t}` vs `U((e^{-t/2} x, 0))`.
    pub b_on_u: f64,
    /// `b_t Z(Θ) b_{-t}` vs `Z(e^{t/2} Θ)`.
    pub b_on_z: f64,
    pub det_g: f64,
    pub det_b: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the four conjugation identities on `samples` random `y`, `x`, `Θ`
/// (entries uniform in `[-2, 2]`) for the given flow parameters.
pub fn check_conjugations(p: &FlowParams, samples: usize, seed: u64) -> ConjugationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d, m) = (p.n, p.d, p.m());
    let g = g_matrix(p);
    let g_inv = DMatrix::from_diagonal(&g.diagonal().map(|v| 1.0 / v));
    let b = b_matrix(p.t, n, d);
    let b_neg = b_matrix(-p.t, n, d);
    let scale_u = p.t.exp() / p.eps;
    let half = (p.t / 2.0).exp();
    let mut r = ConjugationReport {
        samples,
        g_on_u: 0.0,
        g_on_z: 0.0,
        b_on_u: 0.0,
        b_on_z: 0.0,
        det_g: (g.determinant() - 1.0).abs(),
        det_b: (b.determinant() - 1.0).abs(),
        tolerance: 1e-10,
        pass: false,
    };
    for _ in 0..samples {
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let theta = DMatrix::from_fn(m, d, |_, _| rng.random_range(-2.0..2.0));
        let mut xpad: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        xpad.extend(std::iter::repeat_n(0.0, m));

        let lhs = &g * matrix_U(&y) * &g_inv;
        let rhs = matrix_U(&y.iter().map(|v| v * scale_u).collect::<Vec<_>>());
        r.g_on_u = r.g_on_u.max(max_rel_err(&lhs, &rhs));

        let z = matrix_Z(&theta);
        r.g_on_z = r.g_on_z.max(max_rel_err(&(&g * &z * &g_inv), &z));

        let lhs = &b * matrix_U(&xpad) * &b_neg;
        let rhs = matrix_U(&xpad.iter().map(|v| v / half).collect::<Vec<_>>());
        r.b_on_u = r.b_on_u.max(max_rel_err(&lhs, &rhs));

        let lhs = &b * &z * &b_neg;
        r.b_on_z = r.b_on_z.max(max_rel_err(&lhs, &matrix_Z(&(&theta * half))));
    }
    r.pass = [r.g_on_u, r.g_on_z, r.b_on_u, r.b_on_z, r.det_g, r.det_b]
        .iter()
        .all(|e| *e <= r.tolerance);
    r
}

/// Correction factors of `zu(x + x′) = Z(Θ̂) U(ŷ) U((x′, 0)) zu(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResidual {
    pub theta_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    /// `‖Θ̂‖ / ‖x′‖` (0 when `x′ = 0`).
    pub theta_ratio: f64,
    /// `‖ŷ‖ / ‖x′‖²` (0 when `x′ = 0`).
    pub y_ratio: f64,
    /// Largest entry of the peeled matrix outside the `Z·U` pattern (should be ~0).
    pub structure_defect: f64,
    /// `d²·m·M`.
    pub bound: f64,
}

/// Peels the known factors off `zu(x + x′)` and measures what is left.
pub fn local_expansion_residual(chart: &ManifoldChart, x: &[f64], dx: &[f64]) -> Result<ExpansionResidual> {
    let (d, m) = (chart.d(), chart.m());
    let n = d + m;
    if dx.len() != d {
        return Err(Error::invalid("displacement has wrong dimension"));
    }
    let x1: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + b).collect();
    // Box domains are convex, so both endpoints inside means the segment is inside.
    let a = assemble_zu(chart, x)?;
    let b = assemble_zu(chart, &x1)?;
    let mut pad = dx.to_vec();
    pad.extend(std::iter::repeat_n(0.0, m));
    let mut neg_pad = pad.clone();
    neg_pad.iter_mut().for_each(|v| *v = -*v);
    // zu(x)^{-1} = σ zu*(x)ᵀ σ, but an LU inverse of a unipotent matrix is exact enough.
    let zu_inv = a
        .zu
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("zu(x)".into()))?;
    let peeled = &b.zu * zu_inv * matrix_U(&neg_pad);

    // Θ̂ from the shear block, then ŷ from Z(−Θ̂)·peeled.
    let mut theta = DMatrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            theta[(m - 1 - i, d - 1 - j)] = peeled[(i, m + j)];
        }
    }
    let u = matrix_Z(&(-&theta)) * &peeled;
    let y_hat: Vec<f64> = (0..n).map(|i| u[(n - 1 - i, n)]).collect();
    let mut expect = matrix_Z(&theta) * matrix_U(&y_hat);
    expect -= &peeled;
    let structure_defect = expect.abs().max();

    let nx = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nt = theta.norm();
    let ny = y_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (theta_ratio, y_ratio) = if nx == 0.0 { (0.0, 0.0) } else { (nt / nx, ny / (nx * nx)) };
    Ok(ExpansionResidual {
        theta_hat: theta.iter().copied().collect(),
        y_hat,
        theta_ratio,
        y_ratio,
        structure_defect,
        bound: (d * d * m) as f64 * chart.deriv_bound(),
    })
}

/// Integer vector `(−pσ_n, q)`: `p` reversed with its sign flipped, then `q`.
pub fn lattice_embedding(p: &[i64], q: i64) -> Vec<f64> {
    let mut v: Vec<f64> = p.iter().rev().map(|&pi| -(pi as f64)).collect();
    v.push(q as f64);
    v
}

/// `c₁ = √(n+1)(d+1)M`.
pub fn c1(chart: &ManifoldChart) -> f64 {
    ((chart.n() + 1) as f64).sqrt() * (chart.d() + 1) as f64 * chart.deriv_bound()
}

/// `‖g_t zu(x)(−pσ_n, q)ᵀ‖` (Euclidean).
pub fn embedded_norm(chart: &ManifoldChart, p: &FlowParams, x: &[f64], pv: &[i64], q: i64) -> Result<f64> {
    check_dims(chart, p)?;
    if pv.len() != chart.n() {
        return Err(Error::invalid("p has wrong dimension"));
    }
    let fr = assemble_zu(chart, x)?;
    let v = DVector::from_vec(lattice_embedding(pv, q));
    Ok((g_matrix(p) * fr.zu * v).norm())
}

/// `σ_k` applied to a vector.
pub fn reverse(v: &[f64]) -> Vec<f64> {
    let s = reverse_involution(v.len());
    (s * DVector::from_row_slice(v)).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{AxisBox, Polynomial, Term};

    fn charts() -> Vec<ManifoldChart> {
        vec![
            ManifoldChart::veronese(2).unwrap(),
            ManifoldChart::veronese(3).unwrap(),
            ManifoldChart::circle(1.0, 0.1).unwrap(),
            ManifoldChart::mixed(2, 4).unwrap(),
            ManifoldChart::mixed(2, 3).unwrap(),
        ]
    }

    #[test]
    fn phi_and_h() {
        let p = FlowParams::new(0.5, 8f64.ln(), 2, 1).unwrap();
        assert!((p.phi - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((p.h - 8f64.ln() / 6.0).abs() < 1e-15);
        let g = g_matrix(&p);
        let want = [2f64.powf(4.0 / 3.0), 2f64.powf(4.0 / 3.0), 2f64.powf(-8.0 / 3.0)];
        for i in 0..3 {
            assert!((g[(i, i)] - want[i]).abs() < 1e-12);
        }
        assert!(FlowParams::new(1.0, 1.0, 2, 1).is_err());
        assert!(FlowParams::new(0.5, 0.0, 2, 1).is_err());
    }

    #[test]
    fn u_and_z_examples() {
        assert_eq!(matrix_U(&[0.0, 0.0, 0.0]), DMatrix::identity(4, 4));
        let u = matrix_U(&[1.5, -2.0]);
        assert_eq!(u.column(2).as_slice(), &[-2.0, 1.5, 1.0]);
        assert_eq!(matrix_Z(&DMatrix::zeros(2, 1)), DMatrix::identity(4, 4));
        let z = matrix_Z(&DMatrix::from_element(1, 1, 0.7));
        let mut want = DMatrix::identity(3, 3);
        want[(0, 1)] = 0.7;
        assert_eq!(z, want);
        let z = matrix_Z(&DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        assert_eq!(sup_operator_norm(&z), 4.0);
    }

    #[test]
    fn zu_forms_agree() {
        let v2 = ManifoldChart::veronese(2).unwrap();
        assert_eq!(assemble_zu(&v2, &[0.0]).unwrap().zu, DMatrix::identity(3, 3));
        for c in charts() {
            let dom = c.domain().clone();
            for k in 0..25 {
                let x: Vec<f64> = (0..c.d())
                    .map(|i| dom.lo(i) + dom.side(i) * ((k * (i + 3)) % 25) as f64 / 24.0)
                    .collect();
                let fr = assemble_zu(&c, &x).unwrap();
                assert!(max_rel_err(&fr.zu, &zu_closed_form(&c, &x).unwrap()) <= 1e-12);
                assert!(max_rel_err(&fr.zu_dual, &zu_dual_closed_form(&c, &x).unwrap()) <= 1e-12);
                assert_eq!(fr.zu.determinant(), 1.0);
            }
        }
    }

    #[test]
    fn duals_of_flows_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = rng.random_range(2..=7);
            let d = rng.random_range(1..n);
            let p = FlowParams::new(rng.random_range(0.01..0.99), rng.random_range(0.1..12.0), n, d).unwrap();
            let fl = diagonal_flows(&p);
            assert!((fl.g.determinant() - 1.0).abs() < 1e-12);
            assert!((fl.b.determinant() - 1.0).abs() < 1e-12);
            assert!(max_rel_err(&dual_element(&fl.g).unwrap(), &fl.g_dual) < 1e-12);
            assert!(max_rel_err(&dual_element(&fl.b).unwrap(), &fl.b_dual) < 1e-12);
        }
    }

    #[test]
    fn conjugation_examples() {
        let p = FlowParams::new(0.5, 4f64.ln(), 2, 1).unwrap();
        let g = g_matrix(&p);
        let lhs = &g * matrix_U(&[1.0, 1.0]) * g.clone().try_inverse().unwrap();
        assert!(max_rel_err(&lhs, &matrix_U(&[8.0, 8.0])) < 1e-13);
        let b = b_matrix(p.t, 2, 1);
        let lhs = &b * matrix_U(&[1.0, 0.0]) * b_matrix(-p.t, 2, 1);
        assert!(max_rel_err(&lhs, &matrix_U(&[0.5, 0.0])) < 1e-13);
        let r = check_conjugations(&p, 200, 3);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn expansion_residual_examples() {
        let v2 = ManifoldChart::veronese(2).unwrap();
        let r = local_expansion_residual(&v2, &[0.5], &[0.0]).unwrap();
        assert_eq!((r.theta_ratio, r.y_ratio), (0.0, 0.0));
        let lin = ManifoldChart::polynomial(
            1,
            vec![Polynomial {
                terms: vec![Term { coef: 0.3, powers: vec![0] }, Term { coef: -1.2, powers: vec![1] }],
            }],
            AxisBox::interval(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let r = local_expansion_residual(&lin, &[0.2], &[0.3]).unwrap();
        assert!(r.theta_hat.iter().chain(&r.y_hat).all(|v| v.abs() < 1e-15));

        let mut last = f64::INFINITY;
        for k in 1..12 {
            let dx = 0.4 / 2f64.powi(k);
            let r = local_expansion_residual(&v2, &[0.5], &[dx]).unwrap();
            let ny: f64 = r.y_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r.y_ratio <= r.bound + 1e-9 && r.theta_ratio <= r.bound + 1e-9);
            assert!(r.structure_defect < 1e-12);
            assert!(ny <= last / 3.9 || last.is_infinite());
            last = ny;
        }
        assert!(matches!(local_expansion_residual(&v2, &[0.9], &[0.2]), Err(Error::Domain { .. })));
    }

    #[test]
    fn embedding_reverses_and_negates() {
        assert_eq!(lattice_embedding(&[1, 2, 3], 5), vec![-3.0, -2.0, -1.0, 5.0]);
        assert_eq!(reverse(&[1.0, 2.0, 3.0]), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn near_hits_have_short_images() {
        let v2 = ManifoldChart::veronese(2).unwrap();
        // p/q = (1/2, 1/4) lies on the curve
        let p = FlowParams::new(0.5, 3.0, 2, 1).unwrap();
        let nrm = embedded_norm(&v2, &p, &[0.5], &[2, 1], 4).unwrap();
        assert!(nrm <= c1(&v2) * p.phi);
    }
}
