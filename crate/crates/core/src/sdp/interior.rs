//! Linear optimization by a primal–dual interior-point method (HKM search
//! direction, Mehrotra predictor–corrector).
//!
//! The affine section is parametrized as `b = F₀ + Σ z_k F_k` with `F₀` the
//! minimum-norm solution and `F_k` an orthonormal basis of the constraint null
//! space. In standard form this is the dual problem
//! `max ⟨c, z⟩ s.t. S = F₀ − Σ z_k (−F_k) ⪰ 0`, paired with the primal
//! `min ⟨F₀, X⟩ s.t. ⟨−F_k, X⟩ = c_k, X ⪰ 0`.

use nalgebra::{DMatrix, DVector};

use super::{AffineSystem, HermitianCoords, SdpInstance};
use crate::denselin::{eigh, real, CMatrix, HermitianMatrix};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.95;

#[derive(Debug, Clone)]
pub struct Maximum {
    pub value: f64,
    pub b: HermitianMatrix,
    pub iterations: usize,
    /// Final primal–dual objective gap.
    pub gap: f64,
    /// Largest constraint residual of `b`.
    pub residual: f64,
    pub psd_floor: f64,
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Largest `α` keeping `X + α dX ⪰ 0` (infinite if every step does).
fn max_step(x: &CMatrix, dx: &CMatrix) -> Option<f64> {
    let chol = x.clone().cholesky()?;
    let l = chol.l();
    let w = l.solve_lower_triangular(dx)?;
    let w2 = l.solve_lower_triangular(&w.adjoint())?;
    let e = eigh(&HermitianMatrix::new(w2).ok()?).ok()?;
    let lmin = e.min();
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn hermitian_inverse(m: &CMatrix) -> Option<CMatrix> {
    let inv = m.clone().cholesky()?.inverse();
    Some(hermitian_part(&inv))
}

struct Problem {
    coords: HermitianCoords,
    /// Rows are the coordinates of the constraint matrices `A_k = −F_k`.
    a: DMatrix<f64>,
    /// Cost matrix `F₀` of the standard primal.
    c: CMatrix,
    /// Right-hand side `⟨objective, F_k⟩`.
    rhs: DVector<f64>,
}

impl Problem {
    fn apply(&self, m: &CMatrix) -> DVector<f64> {
        &self.a * self.coords.to_vec(m)
    }

    fn adjoint(&self, y: &DVector<f64>) -> CMatrix {
        self.coords.to_matrix(&self.a.tr_mul(y))
    }
}

fn dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Maximizes the objective over the PSD matrices satisfying the constraints.
pub fn maximize(inst: &SdpInstance, tol: f64) -> Result<Maximum> {
    assert!(tol > 0.0, "tolerance must be positive");
    let sys = AffineSystem::new(inst)?;
    let coords = sys.coords;
    let n = inst.dim();
    let objective = inst.objective_matrix();
    let obj_vec = coords.to_vec(objective.matrix());
    let f0 = sys.particular();
    let basis = sys.null_basis();
    let p = basis.ncols();

    let finish = |b: HermitianMatrix, iterations: usize, gap: f64| -> Result<Maximum> {
        let psd_floor = eigh(&b)?.min();
        let allowed = tol * (1.0 + b.max_abs());
        if psd_floor < -allowed {
            return Err(Error::Infeasible);
        }
        Ok(Maximum {
            value: inst.objective_value(&b),
            residual: inst.max_residual(&b),
            psd_floor,
            b,
            iterations,
            gap,
        })
    };

    if n == 0 {
        return finish(HermitianMatrix::zeros(0), 0, 0.0);
    }
    if p == 0 {
        return finish(HermitianMatrix::new(coords.to_matrix(&f0))?, 0, 0.0);
    }

    let problem = Problem {
        coords,
        a: -basis.transpose(),
        c: coords.to_matrix(&f0),
        rhs: basis.tr_mul(&obj_vec),
    };

    let c_norm = problem.c.norm();
    let b_norm = problem.rhs.norm();
    let start = 10.0_f64.max((n as f64).sqrt()).max(1.0 + c_norm).max(1.0 + b_norm);
    let mut x = CMatrix::identity(n, n) * real(start);
    let mut s = x.clone();
    let mut y = DVector::zeros(p);
    let big = 1.0 / tol;
    let eps = (tol * 1e-3).max(1e-12);

    for iter in 0..MAX_ITERATIONS {
        let rp = &problem.rhs - problem.apply(&x);
        let rd = &problem.c - problem.adjoint(&y) - &s;
        let pobj = dot(&problem.c, &x);
        let dobj = problem.rhs.dot(&y);
        let mu = dot(&x, &s) / n as f64;
        let gap = (pobj - dobj).abs();
        let p_inf = rp.norm() / (1.0 + b_norm);
        let d_inf = rd.norm() / (1.0 + c_norm);

        if dobj > big && d_inf < 1e-6 {
            return Err(Error::Unbounded);
        }
        if pobj < -big && p_inf < 1e-6 {
            return Err(Error::Infeasible);
        }
        if p_inf < eps && d_inf < eps && gap < eps * (1.0 + pobj.abs() + dobj.abs()) {
            let b = problem.c.clone() - problem.adjoint(&y);
            return finish(HermitianMatrix::new(b)?, iter, gap);
        }

        let Some(s_inv) = hermitian_inverse(&s) else { break };
        // Schur complement M_ij = ⟨A_i, X A_j S⁻¹⟩.
        let mut g = DMatrix::zeros(coords.len(), p);
        for j in 0..p {
            let aj = coords.to_matrix(&problem.a.row(j).transpose());
            let gj = &x * aj * &s_inv;
            g.set_column(j, &coords.to_vec(&hermitian_part(&gj)));
        }
        let mut schur = &problem.a * g;
        schur = (&schur + schur.transpose()) * 0.5;
        let Some(chol) = schur.clone().cholesky().or_else(|| {
            let shift = 1e-14 * (1.0 + schur.diagonal().amax());
            (schur + DMatrix::identity(p, p) * shift).cholesky()
        }) else {
            break;
        };

        let direction = |sigma_mu: f64, corr: Option<&CMatrix>| -> (CMatrix, DVector<f64>, CMatrix) {
            let mut k = &s_inv * real(sigma_mu) - &x - &x * &rd * &s_inv;
            if let Some(cm) = corr {
                k -= cm;
            }
            let dy = chol.solve(&(&rp - problem.apply(&k)));
            let ds = &rd - problem.adjoint(&dy);
            let mut dx_full = &s_inv * real(sigma_mu) - &x - &x * &ds * &s_inv;
            if let Some(cm) = corr {
                dx_full -= cm;
            }
            (hermitian_part(&dx_full), dy, ds)
        };

        let (dxa, _, dsa) = direction(0.0, None);
        let ap = max_step(&x, &dxa).map_or(0.0, |a| (STEP_FRACTION * a).min(1.0));
        let ad = max_step(&s, &dsa).map_or(0.0, |a| (STEP_FRACTION * a).min(1.0));
        let mu_aff = dot(&(&x + &dxa * real(ap)), &(&s + &dsa * real(ad))) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr = &dxa * &dsa * &s_inv;

        let (dx, dy, ds) = direction(sigma * mu, Some(&corr));
        let ap = max_step(&x, &dx).map_or(0.0, |a| (STEP_FRACTION * a).min(1.0));
        let ad = max_step(&s, &ds).map_or(0.0, |a| (STEP_FRACTION * a).min(1.0));
        if ap == 0.0 && ad == 0.0 {
            break;
        }
        x = hermitian_part(&(&x + dx * real(ap)));
        y += dy * ad;
        s = hermitian_part(&(&s + ds * real(ad)));
    }

    // Accept a stalled run whose gap already meets the requested tolerance.
    let rp = &problem.rhs - problem.apply(&x);
    let pobj = dot(&problem.c, &x);
    let dobj = problem.rhs.dot(&y);
    let b = problem.c.clone() - problem.adjoint(&y);
    let gap = (pobj - dobj).abs();
    if gap <= tol && rp.norm() / (1.0 + b_norm) <= tol {
        return finish(HermitianMatrix::new(b)?, MAX_ITERATIONS, gap);
    }
    Err(Error::NotConverged(format!("interior point stalled with gap {gap:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denselin::c64;
    use crate::sdp::AffineConstraint;

    fn trace_one(n: usize) -> AffineConstraint {
        AffineConstraint::new((0..n).map(|i| (i, i, real(1.0))), real(1.0))
    }

    #[test]
    fn top_eigendirection() {
        let inst = SdpInstance::new(2)
            .with_constraint(trace_one(2))
            .unwrap()
            .with_objective([(0, 0, real(1.0)), (1, 1, real(-1.0))])
            .unwrap();
        let out = maximize(&inst, 1e-6).unwrap();
        assert!((out.value - 1.0).abs() < 1e-6, "{}", out.value);
        assert!(out.residual < 1e-9 && out.psd_floor > -1e-9);
    }

    #[test]
    fn unit_diagonal_off_diagonal_sum() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 0, real(1.0)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(1, 1, real(1.0)))
            .unwrap()
            .with_objective([(0, 1, real(1.0)), (1, 0, real(1.0))])
            .unwrap();
        let out = maximize(&inst, 1e-6).unwrap();
        // Oracle: b = [[1, x], [x̄, 1]] is PSD iff |x| ≤ 1, so the objective
        // 2 Re x peaks at 2.
        let oracle = (0..=2000).map(|k| -1.0 + k as f64 / 1000.0).map(|t| 2.0 * t).fold(f64::MIN, f64::max);
        assert!((out.value - oracle).abs() < 1e-6, "{}", out.value);
    }

    #[test]
    fn zero_objective() {
        let inst = SdpInstance::new(3).with_constraint(trace_one(3)).unwrap();
        let out = maximize(&inst, 1e-6).unwrap();
        assert!(out.value.abs() < 1e-12);
        assert!(out.residual < 1e-9);
    }

    #[test]
    fn complex_objective() {
        // max Re(e^{-iθ} b01)·2 over unit diagonal: again 2, attained at b01 = e^{iθ}.
        let phase = c64(0.6, 0.8);
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 0, real(1.0)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(1, 1, real(1.0)))
            .unwrap()
            .with_objective([(0, 1, phase), (1, 0, phase.conj())])
            .unwrap();
        let out = maximize(&inst, 1e-6).unwrap();
        assert!((out.value - 2.0).abs() < 1e-6);
        assert!((out.b.get(0, 1) - phase).norm() < 1e-3);
    }

    #[test]
    fn unbounded_is_detected() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 1, real(0.0)))
            .unwrap()
            .with_objective([(0, 0, real(1.0))])
            .unwrap();
        assert!(matches!(maximize(&inst, 1e-6), Err(Error::Unbounded)));
    }

    #[test]
    fn infeasible_is_detected() {
        let inst = SdpInstance::new(2)
            .with_constraint(AffineConstraint::entry(0, 0, real(1.0)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(1, 1, real(1.0)))
            .unwrap()
            .with_constraint(AffineConstraint::entry(0, 1, real(2.0)))
            .unwrap();
        assert!(matches!(maximize(&inst, 1e-6), Err(Error::Infeasible)));
    }

    #[test]
    fn fixed_point_without_freedom() {
        let inst = SdpInstance::new(1)
            .with_constraint(AffineConstraint::entry(0, 0, real(3.0)))
            .unwrap()
            .with_objective([(0, 0, real(2.0))])
            .unwrap();
        assert!((maximize(&inst, 1e-6).unwrap().value - 6.0).abs() < 1e-12);
    }
}
