//! Feasibility by Dykstra-corrected alternating projections, finished by a
//! Gauss–Newton polish of a factor `b = R*R`.
//!
//! When the sweep budget runs out, the interior-point solver is tried on the
//! same instance with a zero objective before giving up.
//!
//! Plain alternating projections converge only sublinearly when the affine
//! section touches the cone tangentially, which is exactly the situation of
//! tight certificates. The polish keeps the iterate inside the cone by
//! construction and drives the affine residual to rounding level.

use nalgebra::{DMatrix, DVector};

use super::{AffineSystem, SdpInstance};
use crate::denselin::{c64, eigh, CMatrix, HermitianMatrix, C64};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityStats {
    /// Projection sweeps performed.
    pub iterations: usize,
    /// Largest constraint residual of the returned matrix.
    pub residual: f64,
    /// Smallest eigenvalue of the returned matrix.
    pub psd_floor: f64,
}

#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible { b: HermitianMatrix, stats: FeasibilityStats },
    /// Best point found within the sweep budget; diagnostic only.
    NoProgress { best: HermitianMatrix, stats: FeasibilityStats },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }

    pub fn stats(&self) -> &FeasibilityStats {
        match self {
            Feasibility::Feasible { stats, .. } | Feasibility::NoProgress { stats, .. } => stats,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        match self {
            Feasibility::Feasible { b, .. } => b,
            Feasibility::NoProgress { best, .. } => best,
        }
    }
}

fn assess(inst: &SdpInstance, b: HermitianMatrix, iterations: usize) -> Result<(HermitianMatrix, FeasibilityStats)> {
    let residual = inst.max_residual(&b);
    let psd_floor = eigh(&b)?.min();
    Ok((b, FeasibilityStats { iterations, residual, psd_floor }))
}

fn violation(stats: &FeasibilityStats) -> f64 {
    stats.residual.max(-stats.psd_floor)
}

/// Searches for a PSD `b` satisfying all constraints within `tol`.
pub fn solve_feasibility(inst: &SdpInstance, tol: f64, max_iter: usize) -> Result<Feasibility> {
    assert!(tol > 0.0, "tolerance must be positive");
    let sys = AffineSystem::new(inst)?;
    let coords = sys.coords;
    let n = inst.dim();
    if n == 0 {
        let (b, stats) = assess(inst, HermitianMatrix::zeros(0), 0)?;
        return Ok(Feasibility::Feasible { b, stats });
    }

    let mut x = sys.particular();
    let mut correction = DVector::zeros(x.len());
    let (first, first_stats) = assess(inst, HermitianMatrix::new(coords.to_matrix(&x))?, 0)?;
    if violation(&first_stats) <= tol {
        return Ok(Feasibility::Feasible { b: first, stats: first_stats });
    }
    let mut best = (first, first_stats);

    let mut next_polish = 25;
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let shifted = coords.to_matrix(&(&x + &correction));
        let e = eigh(&HermitianMatrix::new(shifted)?)?;
        let psd = e.map_spectrum(|l| l.max(0.0));
        let y = coords.to_vec(psd.matrix());
        correction = &x + &correction - &y;
        x = sys.project(&y);

        if iter == next_polish || iter == max_iter {
            next_polish *= 2;
            let (cand, stats) = assess(inst, HermitianMatrix::new(coords.to_matrix(&x))?, iter)?;
            if violation(&stats) <= tol {
                return Ok(Feasibility::Feasible { b: cand, stats });
            }
            if violation(&stats) < violation(&best.1) {
                best = (cand, stats);
            }
            for rank in polish_ranks(&psd)? {
                let Some(polished) = polish(&sys, &psd, rank) else { continue };
                let (cand, stats) = assess(inst, polished, iter)?;
                if violation(&stats) <= tol {
                    return Ok(Feasibility::Feasible { b: cand, stats });
                }
                if violation(&stats) < violation(&best.1) {
                    best = (cand, stats);
                }
            }
        }
    }
    // Second route for faces without an interior: the affine section may meet
    // the cone with a high singularity degree, where projections crawl.
    if let Ok(out) = super::maximize(inst, tol) {
        let (cand, stats) = assess(inst, out.b, iter)?;
        if violation(&stats) <= tol {
            return Ok(Feasibility::Feasible { b: cand, stats });
        }
        if violation(&stats) < violation(&best.1) {
            best = (cand, stats);
        }
    }
    let (b, mut stats) = best;
    stats.iterations = iter;
    Ok(Feasibility::NoProgress { best: b, stats })
}

const POLISH_ITERATIONS: usize = 60;

/// Full rank first, then the numerical ranks at a few relative cutoffs: near
/// a low-rank solution the reduced factor removes the directions in which the
/// residual is only quadratic.
fn polish_ranks(psd: &HermitianMatrix) -> Result<Vec<usize>> {
    let e = eigh(psd)?;
    let top = e.max().max(0.0);
    let mut ranks = vec![psd.dim()];
    for cut in [1e-8, 1e-6, 1e-4, 1e-3] {
        let r = e.values.iter().filter(|&&l| l > cut * top).count().max(1);
        if !ranks.contains(&r) {
            ranks.push(r);
        }
    }
    Ok(ranks)
}

/// Levenberg–Marquardt on `R ↦ Q vec(R*R) − d`, started from a regularized
/// square root of `start`. Returns `R*R` once the step stops paying off.
fn polish(sys: &AffineSystem, start: &HermitianMatrix, rank: usize) -> Option<HermitianMatrix> {
    let n = start.dim();
    let e = eigh(start).ok()?;
    let floor = 1e-7 * (1.0 + e.max().max(0.0));
    // R = Λ^{1/2} U* over the top `rank` eigenpairs, so R*R ≈ U Λ U*.
    let mut r = CMatrix::zeros(rank, n);
    for i in 0..rank {
        let k = n - 1 - i;
        let s = e.values[k].max(floor).sqrt();
        for j in 0..n {
            r[(i, j)] = e.vectors[(j, k)].conj() * s;
        }
    }
    let coords = sys.coords;
    let rows = sys.rank();
    let residual_of = |r: &CMatrix| -> DVector<f64> { &sys.q * coords.to_vec(&(r.adjoint() * r)) - &sys.d };

    let mut f = residual_of(&r);
    let mut mu = 1e-10;
    let target = 1e-15 * (1.0 + sys.d.amax());
    for _ in 0..POLISH_ITERATIONS {
        if f.amax() <= target {
            break;
        }
        let jac = jacobian(sys, &r);
        let normal = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..12 {
            let mut damped = normal.clone();
            for k in 0..rows {
                damped[(k, k)] += mu;
            }
            let Some(chol) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let w = chol.solve(&(-&f));
            let step = jac.tr_mul(&w);
            let mut trial = r.clone();
            for k in 0..rank {
                for l in 0..n {
                    let idx = 2 * (k * n + l);
                    trial[(k, l)] += c64(step[idx], step[idx + 1]);
                }
            }
            let f_trial = residual_of(&trial);
            if f_trial.norm() < f.norm() {
                r = trial;
                f = f_trial;
                mu = (mu / 10.0).max(1e-14);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    HermitianMatrix::new(r.adjoint() * &r).ok()
}

/// Real Jacobian of `R ↦ Q vec(R*R)` with parameters ordered
/// `(Re R_kl, Im R_kl)` row-major.
fn jacobian(sys: &AffineSystem, r: &CMatrix) -> DMatrix<f64> {
    let (rank, n) = r.shape();
    let coords = sys.coords;
    let rows = sys.rank();
    let mut jac = DMatrix::zeros(rows, 2 * rank * n);
    let h = std::f64::consts::SQRT_2;
    for k in 0..rank {
        for l in 0..n {
            for (part, unit) in [(0, c64(1.0, 0.0)), (1, c64(0.0, 1.0))] {
                // δ(R*R) = R*E + E*R with E = unit·e_k e_lᵀ touches only row and column l.
                let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
                for a in 0..n {
                    let v: C64 = unit * r[(k, a)].conj();
                    if a == l {
                        entries.push((l, 2.0 * v.re));
                    } else {
                        let z = if a < l { v } else { v.conj() };
                        let idx = coords.upper(a.min(l), a.max(l));
                        entries.push((idx, h * z.re));
                        entries.push((idx + 1, h * z.im));
                    }
                }
                let col = 2 * (k * n + l) + part;
                for row in 0..rows {
                    let mut acc = 0.0;
                    for &(idx, val) in &entries {
                        acc += sys.q[(row, idx)] * val;
                    }
                    jac[(row, col)] = acc;
                }
            }
        }
    }
    jac
}
