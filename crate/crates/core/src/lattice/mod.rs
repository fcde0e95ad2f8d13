//! Geometry of numbers at desk scale (dimension ≤ 8): unimodular bases,
//! successive minima, polar lattices, the reversal involution and dual elements.

mod enumerate;
mod minima;
mod reduce;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

pub use minima::{
    for_each_short_vector, minima_upto, shortest_vector, successive_minima, successive_minima_with, MinimaOptions,
    MinimaReport, DEFAULT_NODE_BUDGET, MAX_DIM, TIE_TOL,
};

/// Tolerance on `|det − 1|` for unimodular bases.
pub const DET_TOL: f64 = 1e-6;
/// Reciprocal condition number below which a matrix is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Square basis whose columns span a lattice of covolume one.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    cols: DMatrix<f64>,
}

impl LatticeBasis {
    /// Unimodular basis; rejects `|det − 1| > 1e-6` and near-singular input.
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        let b = Self::with_any_covolume(cols)?;
        let det = b.cols.determinant();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::invalid(format!("basis determinant {det} is not 1")));
        }
        Ok(b)
    }

    /// Any nonsingular square basis. Minima and polar lattices make sense for
    /// every covolume; only [`LatticeBasis::new`] enforces unimodularity.
    pub fn with_any_covolume(cols: DMatrix<f64>) -> Result<Self> {
        if !cols.is_square() || cols.nrows() == 0 {
            return Err(Error::invalid("basis must be a nonempty square matrix"));
        }
        if cols.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        if rcond(&cols) < SINGULAR_RCOND {
            return Err(Error::Singular("basis columns are (numerically) dependent".into()));
        }
        Ok(LatticeBasis { cols })
    }

    pub fn identity(k: usize) -> Self {
        LatticeBasis {
            cols: DMatrix::identity(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.cols.ncols()
    }

    pub fn cols(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn det(&self) -> f64 {
        self.cols.determinant()
    }

    /// Whether `other` spans the same lattice: the change of basis is an integer
    /// matrix (entries within `tol`) with determinant ±1.
    pub fn same_lattice(&self, other: &LatticeBasis, tol: f64) -> bool {
        if other.dim() != self.dim() {
            return false;
        }
        let Some(inv) = self.cols.clone().try_inverse() else {
            return false;
        };
        let change = inv * &other.cols;
        let integral = change.iter().all(|v| (v - v.round()).abs() <= tol);
        let det = change.map(f64::round).determinant();
        integral && (det.abs() - 1.0).abs() <= tol
    }
}

/// Reciprocal 2-norm condition number.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().fold(0.0f64, |a, v| a.max(*v));
    let lo = sv.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if rcond(m) < SINGULAR_RCOND {
        return Err(Error::Singular(format!("{what} is (numerically) singular")));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is singular")))
}

/// Basis `(Bᵀ)^{-1}` of the polar lattice.
pub fn polar_basis(basis: &LatticeBasis) -> Result<LatticeBasis> {
    let inv = inverse(&basis.cols.transpose(), "basis")?;
    Ok(LatticeBasis { cols: inv })
}

/// Anti-diagonal permutation `σ_k`, reversing coordinate order.
pub fn reverse_involution(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| if i + j + 1 == k { 1.0 } else { 0.0 })
}

/// `g* = σ (gᵀ)^{-1} σ`.
pub fn dual_element(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !g.is_square() {
        return Err(Error::invalid("dual element needs a square matrix"));
    }
    let s = reverse_involution(g.nrows());
    let inv = inverse(&g.transpose(), "group element")?;
    Ok(&s * inv * &s)
}

/// Products `λ_i(Λ)·λ_{k+1−i}(Λ*)`, `i = 1..k`.
pub fn mahler_gap(basis: &LatticeBasis) -> Result<Vec<f64>> {
    let k = basis.dim();
    let a = successive_minima(basis)?;
    let b = successive_minima(&polar_basis(basis)?)?;
    Ok((0..k).map(|i| a.values[i] * b.values[k - 1 - i]).collect())
}

/// `(k!)²`, the upper Mahler constant in dimension `k`.
pub fn mahler_upper(k: usize) -> f64 {
    let f: f64 = (1..=k).map(|i| i as f64).product();
    f * f
}

/// Random real basis of determinant one with 2-norm condition number at most
/// `max_cond`; entries are drawn uniformly from `[-1, 1]` and rescaled.
pub fn random_unimodular_basis<R: Rng + ?Sized>(k: usize, rng: &mut R, max_cond: f64) -> LatticeBasis {
    loop {
        let mut m: DMatrix<f64> = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        let det = m.determinant();
        if det.abs() < 1e-6 {
            continue;
        }
        if det < 0.0 {
            m.column_mut(0).neg_mut();
        }
        let m = m / det.abs().powf(1.0 / k as f64);
        if 1.0 / rcond(&m) <= max_cond {
            return LatticeBasis { cols: m };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> LatticeBasis {
        LatticeBasis::with_any_covolume(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn unit_lattice_minima() {
        let r = successive_minima(&LatticeBasis::identity(2)).unwrap();
        assert_eq!(r.values, vec![1.0, 1.0]);
        assert!(r.certified);
        assert_eq!(r.coefficients, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn diagonal_lattice_minima() {
        let r = successive_minima(&diag(&[2.0, 0.5])).unwrap();
        assert_eq!(r.values, vec![0.5, 2.0]);
    }

    #[test]
    fn rejects_non_unimodular_and_singular() {
        assert!(matches!(
            LatticeBasis::new(DMatrix::from_diagonal_element(2, 2, 2.0)),
            Err(Error::InvalidArgument(_))
        ));
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(LatticeBasis::with_any_covolume(sing), Err(Error::Singular(_))));
    }

    #[test]
    fn polar_examples() {
        assert_eq!(polar_basis(&LatticeBasis::identity(3)).unwrap().cols(), &DMatrix::identity(3, 3));
        let p = polar_basis(&diag(&[2.0, 0.5])).unwrap();
        assert_eq!(p.cols()[(0, 0)], 0.5);
        assert_eq!(p.cols()[(1, 1)], 2.0);
    }

    #[test]
    fn polar_pairing_is_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 2..=6 {
            let b = random_unimodular_basis(k, &mut rng, 50.0);
            let p = polar_basis(&b).unwrap();
            let pairing = b.cols().transpose() * p.cols();
            assert!(pairing.iter().all(|v| (v - v.round()).abs() < 1e-9));
            assert!(b.same_lattice(&polar_basis(&p).unwrap(), 1e-9));
        }
    }

    #[test]
    fn reversal_examples() {
        let s = reverse_involution(3);
        let v = &s * nalgebra::DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(v.as_slice(), &[3.0, 2.0, 1.0]);
        assert_eq!(reverse_involution(1), DMatrix::identity(1, 1));
        for k in 1..=8 {
            let s = reverse_involution(k);
            assert_eq!(&s * &s, DMatrix::identity(k, k));
        }
    }

    #[test]
    fn dual_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(dual_element(&DMatrix::identity(4, 4)).unwrap(), DMatrix::identity(4, 4));
        for _ in 0..50 {
            let a = random_unimodular_basis(4, &mut rng, 30.0);
            let b = random_unimodular_basis(4, &mut rng, 30.0);
            let lhs = dual_element(&(a.cols() * b.cols())).unwrap();
            let rhs = dual_element(a.cols()).unwrap() * dual_element(b.cols()).unwrap();
            let err = (lhs - rhs).abs().max();
            assert!(err < 1e-10, "{err}");
        }
    }

    #[test]
    fn mahler_examples() {
        assert_eq!(mahler_gap(&LatticeBasis::identity(2)).unwrap(), vec![1.0, 1.0]);
        let g = mahler_gap(&diag(&[2.0, 0.5])).unwrap();
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(mahler_upper(3), 36.0);
        assert_eq!(mahler_upper(4), 576.0);
    }

    #[test]
    fn skewed_lattice_minima_are_fast() {
        // a flowed-looking lattice: huge anisotropy
        let b = DMatrix::from_row_slice(
            4,
            4,
            &[1e2, 0.0, 0.0, 33.3, 0.0, 1e2, 0.0, -21.7, 0.0, 0.0, 1e2, 77.1, 0.0, 0.0, 0.0, 1e-6],
        );
        let r = successive_minima(&LatticeBasis::new(b).unwrap()).unwrap();
        assert!(r.nodes < 1_000_000);
        assert!(r.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn budget_is_explicit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_unimodular_basis(6, &mut rng, 10.0);
        let e = successive_minima_with(&b, MinimaOptions { node_budget: 3 }).unwrap_err();
        assert!(e.is_budget());
    }
}
