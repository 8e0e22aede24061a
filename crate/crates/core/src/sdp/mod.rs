//! Small dense semidefinite programs over hermitian matrices.
//!
//! An instance fixes a hermitian variable `b` of size `N`, a list of complex
//! affine constraints `Σ coeff·b[row,col] = rhs` and a linear objective
//! `⟨C, b⟩ = Re Σ conj(C_ij) b_ij`. Internally everything is realified through
//! the isometric coordinates of the hermitian space (diagonal entries, then
//! `√2·Re` and `√2·Im` of the strict upper triangle).

mod feasible;
mod interior;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::denselin::{c64, CMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};

pub use feasible::{solve_feasibility, Feasibility, FeasibilityStats};
pub use interior::{maximize, Maximum};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;
pub const DEFAULT_OPTIMIZATION_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// `Σ coeff·b[row,col] = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    terms: Vec<(usize, usize, C64)>,
    rhs: C64,
}

impl AffineConstraint {
    /// Merges repeated positions and drops exact zeros.
    pub fn new(terms: impl IntoIterator<Item = (usize, usize, C64)>, rhs: C64) -> Self {
        let mut merged: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in terms {
            *merged.entry((r, c)).or_insert(c64(0.0, 0.0)) += v;
        }
        let terms = merged.into_iter().filter(|(_, v)| *v != c64(0.0, 0.0)).map(|((r, c), v)| (r, c, v)).collect();
        AffineConstraint { terms, rhs }
    }

    /// `b[row,col] = rhs`.
    pub fn entry(row: usize, col: usize, rhs: C64) -> Self {
        Self::new([(row, col, c64(1.0, 0.0))], rhs)
    }

    pub fn terms(&self) -> &[(usize, usize, C64)] {
        &self.terms
    }

    pub fn rhs(&self) -> C64 {
        self.rhs
    }

    pub fn evaluate(&self, b: &CMatrix) -> C64 {
        self.terms.iter().map(|&(r, c, v)| v * b[(r, c)]).sum()
    }

    pub fn residual(&self, b: &CMatrix) -> f64 {
        (self.evaluate(b) - self.rhs).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpInstance {
    dim: usize,
    constraints: Vec<AffineConstraint>,
    objective: Vec<(usize, usize, C64)>,
}

impl SdpInstance {
    pub fn new(dim: usize) -> Self {
        SdpInstance { dim, constraints: Vec::new(), objective: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[AffineConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, usize, C64)] {
        &self.objective
    }

    pub fn add_constraint(&mut self, c: AffineConstraint) -> Result<()> {
        if let Some(&(r, col, _)) = c.terms.iter().find(|(r, col, _)| *r >= self.dim || *col >= self.dim) {
            return Err(Error::Dimension(format!("constraint entry ({r}, {col}) outside {0}x{0}", self.dim)));
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn with_constraint(mut self, c: AffineConstraint) -> Result<Self> {
        self.add_constraint(c)?;
        Ok(self)
    }

    /// Replaces the objective by the given coefficient triplets.
    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<()> {
        let terms: Vec<_> = terms.into_iter().collect();
        if let Some(&(r, c, _)) = terms.iter().find(|(r, c, _)| *r >= self.dim || *c >= self.dim) {
            return Err(Error::Dimension(format!("objective entry ({r}, {c}) outside {0}x{0}", self.dim)));
        }
        self.objective = terms;
        Ok(())
    }

    pub fn with_objective(mut self, terms: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<Self> {
        self.set_objective(terms)?;
        Ok(self)
    }

    /// Dense hermitian part of the objective; it induces the same functional
    /// on hermitian variables.
    pub fn objective_matrix(&self) -> HermitianMatrix {
        let mut c = CMatrix::zeros(self.dim, self.dim);
        for &(r, col, v) in &self.objective {
            c[(r, col)] += v;
        }
        HermitianMatrix::from_fn(self.dim, |i, j| c[(i, j)])
    }

    pub fn objective_value(&self, b: &HermitianMatrix) -> f64 {
        self.objective.iter().map(|&(r, c, v)| (v.conj() * b.get(r, c)).re).sum()
    }

    pub fn residuals(&self, b: &HermitianMatrix) -> Vec<f64> {
        self.constraints.iter().map(|c| c.residual(b.matrix())).collect()
    }

    pub fn max_residual(&self, b: &HermitianMatrix) -> f64 {
        self.residuals(b).into_iter().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: SdpInstance = serde_json::from_str(text)?;
        let mut checked = SdpInstance::new(inst.dim);
        for c in inst.constraints {
            checked.add_constraint(c)?;
        }
        checked.set_objective(inst.objective)?;
        Ok(checked)
    }
}

/// Isometric coordinates of `N×N` hermitian matrices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HermitianCoords {
    n: usize,
}

impl HermitianCoords {
    pub fn new(n: usize) -> Self {
        HermitianCoords { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Coordinate of `Re b[i,j]` for `i < j`; the imaginary part follows it.
    fn upper(&self, i: usize, j: usize) -> usize {
        self.n + 2 * (i * self.n - i * (i + 1) / 2 + (j - i - 1))
    }

    pub fn to_vec(&self, m: &CMatrix) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        for i in 0..self.n {
            v[i] = m[(i, i)].re;
            for j in i + 1..self.n {
                // Average the two triangles so non-hermitian noise cancels.
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                let k = self.upper(i, j);
                v[k] = std::f64::consts::SQRT_2 * z.re;
                v[k + 1] = std::f64::consts::SQRT_2 * z.im;
            }
        }
        v
    }

    pub fn to_matrix(&self, v: &DVector<f64>) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = c64(v[i], 0.0);
            for j in i + 1..self.n {
                let k = self.upper(i, j);
                let z = c64(v[k], v[k + 1]) * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    /// Coordinates of the hermitian `G` with `⟨G, b⟩ = Re Σ coeff·b[r,c]`.
    fn real_functional(&self, terms: &[(usize, usize, C64)]) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for &(r, c, a) in terms {
            if r == c {
                v[r] += a.re;
            } else if r < c {
                let k = self.upper(r, c);
                v[k] += a.re * h;
                v[k + 1] -= a.im * h;
            } else {
                let k = self.upper(c, r);
                v[k] += a.re * h;
                v[k + 1] += a.im * h;
            }
        }
        v
    }
}

/// Relative norm below which a constraint row counts as dependent.
const RANK_TOLERANCE: f64 = 1e-10;
/// Admissible right-hand-side defect of a dependent row.
const CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// The affine set `{x : Q x = d}` with orthonormal rows `Q`.
#[derive(Debug, Clone)]
pub(crate) struct AffineSystem {
    pub coords: HermitianCoords,
    pub q: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl AffineSystem {
    /// Realifies and orthonormalizes (Gram–Schmidt, two passes) the
    /// constraints; dependent rows must have consistent right-hand sides.
    pub fn new(inst: &SdpInstance) -> Result<Self> {
        let coords = HermitianCoords::new(inst.dim);
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for c in &inst.constraints {
            let rotated: Vec<_> = c.terms.iter().map(|&(r, col, a)| (r, col, c64(a.im, -a.re))).collect();
            for (functional, target) in [
                (coords.real_functional(&c.terms), c.rhs.re),
                (coords.real_functional(&rotated), c.rhs.im),
            ] {
                let mut v = functional;
                let mut beta = target;
                let original = v.norm();
                for _ in 0..2 {
                    for (q, d) in rows.iter().zip(rhs.iter()) {
                        let proj = q.dot(&v);
                        v.axpy(-proj, q, 1.0);
                        beta -= proj * d;
                    }
                }
                let norm = v.norm();
                if original > 0.0 && norm > RANK_TOLERANCE * original {
                    rows.push(v / norm);
                    rhs.push(beta / norm);
                } else if beta.abs() > CONSISTENCY_TOLERANCE * (1.0 + target.abs()) {
                    return Err(Error::InconsistentConstraints(beta.abs()));
                }
            }
        }
        let n = coords.len();
        let q = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Ok(AffineSystem { coords, q, d: DVector::from_vec(rhs) })
    }

    pub fn rank(&self) -> usize {
        self.q.nrows()
    }

    /// Orthogonal projection onto the affine set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = &self.q * x - &self.d;
        x - self.q.tr_mul(&r)
    }

    /// Minimum-norm point of the affine set.
    pub fn particular(&self) -> DVector<f64> {
        self.q.tr_mul(&self.d)
    }

    /// Orthonormal basis of the null space of `Q` (columns).
    pub fn null_basis(&self) -> DMatrix<f64> {
        let n = self.coords.len();
        let r = self.rank();
        if r == 0 {
            return DMatrix::identity(n, n);
        }
        if r == n {
            return DMatrix::zeros(n, 0);
        }
        let projector = self.q.tr_mul(&self.q);
        let eig = projector.symmetric_eigen();
        let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] < 0.5).collect();
        DMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denselin::real;

    #[test]
    fn coordinates_are_isometric() {
        let coords = HermitianCoords::new(3);
        let a = HermitianMatrix::from_fn(3, |i, j| c64((i + 2 * j) as f64, i as f64 - j as f64));
        let b = HermitianMatrix::from_fn(3, |i, j| c64((i * j) as f64 - 1.0, (j as f64) * 0.5 - i as f64));
        let dot = coords.to_vec(a.matrix()).dot(&coords.to_vec(b.matrix()));
        assert!((dot - a.pairing(&b)).abs() < 1e-12);
        let back = coords.to_matrix(&coords.to_vec(a.matrix()));
        assert!((back - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn functionals_match_direct_evaluation() {
        let coords = HermitianCoords::new(3);
        let b = HermitianMatrix::from_fn(3, |i, j| c64((i + j) as f64 * 0.3, (j as f64 - i as f64) * 0.7));
        let terms = [(0, 1, c64(0.4, -1.1)), (2, 0, c64(-0.3, 0.2)), (1, 1, c64(2.0, 0.5))];
        let direct: C64 = terms.iter().map(|&(r, c, v)| v * b.get(r, c)).sum();
        let re = coords.real_functional(&terms).dot(&coords.to_vec(b.matrix()));
        let rotated: Vec<_> = terms.iter().map(|&(r, c, a)| (r, c, c64(a.im, -a.re))).collect();
        let im = coords.real_functional(&rotated).dot(&coords.to_vec(b.matrix()));
        assert!((re - direct.re).abs() < 1e-12 && (im - direct.im).abs() < 1e-12);
    }

    #[test]
    fn constraint_storage_is_deduplicated() {
        let c = AffineConstraint::new([(0, 1, real(1.0)), (0, 1, real(2.0)), (1, 0, real(1.0)), (1, 0, real(-1.0))], real(0.0));
        assert_eq!(c.terms(), &[(0, 1, real(3.0))]);
    }

    #[test]
    fn inconsistent_constraints_are_reported() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 0, real(1.0)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(0, 0, real(2.0)))
            .unwrap();
        assert!(matches!(AffineSystem::new(&inst), Err(Error::InconsistentConstraints(_))));
    }

    #[test]
    fn conjugate_constraints_are_dependent_not_inconsistent() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 1, c64(0.5, 0.25)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(1, 0, c64(0.5, -0.25)))
            .unwrap();
        assert_eq!(AffineSystem::new(&inst).unwrap().rank(), 2);
    }

    #[test]
    fn json_round_trip() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::new([(0, 0, real(1.0)), (1, 1, real(1.0))], real(1.0)))
            .unwrap()
            .with_objective([(0, 1, c64(0.1, 1.0 / 3.0))])
            .unwrap();
        let back = SdpInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn out_of_range_entries_are_rejected() {
        assert!(SdpInstance::new(2).with_constraint(AffineConstraint::entry(2, 0, real(1.0))).is_err());
    }
}
