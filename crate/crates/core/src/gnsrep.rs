//! Truncated GNS construction on `span{t̂ : t ∈ E}` for a positive-type
//! function given on `E⁻¹E`.

use crate::denselin::{eigh, max_abs, operator_norm, real, CMatrix, HermitianMatrix};
use crate::error::Result;
use crate::extendpt::PartialPositiveType;
use crate::grounded::GroundedSet;
use crate::words::{GroupSpec, Word};

/// Eigenvalues at or below this fraction of the largest span the null space.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Left multiplication `t̂ ↦ (x t)^` by a generator letter `x`, defined on the
/// columns `t` with `x t ∈ E`.
#[derive(Debug, Clone)]
pub struct PartialGenerator {
    pub letter: Word,
    /// `mask[k]` tells whether the `k`-th element of `E` is in the domain.
    pub mask: Vec<bool>,
    /// Partial permutation in `E` coordinates: `shift[s, t] = 1` iff `s = x t`.
    pub shift: CMatrix,
    /// The induced operator on the `r`-dimensional quotient, zero on the
    /// orthogonal complement of the defined vectors.
    pub quotient: CMatrix,
}

#[derive(Debug, Clone)]
pub struct GnsData {
    pub set: GroundedSet,
    /// `M[s, t] = g(s⁻¹t) = ⟨t̂, ŝ⟩`.
    pub gram: HermitianMatrix,
    pub rank: usize,
    /// Kept eigenvalues of the Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// `|E| × r`; its columns express an orthonormal quotient basis in `E`
    /// coordinates, so `Q* M Q = I`.
    pub q: CMatrix,
    /// `r × |E|`; column `t` holds the quotient coordinates of `t̂`.
    pub coords: CMatrix,
    pub generators: Vec<PartialGenerator>,
}

fn letters(spec: GroupSpec) -> Vec<Word> {
    let GroupSpec::Free { rank } = spec else { return Vec::new() };
    let mut out = Vec::new();
    for g in 1..=rank {
        for e in [1, -1] {
            out.push(Word::generator(spec, g, e).expect("valid generator"));
        }
    }
    out
}

fn columns(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn gns(g: &PartialPositiveType) -> Result<GnsData> {
    let set = g.set().clone();
    let gram = g.toeplitz();
    let n = set.len();
    let e = eigh(&gram)?;
    let cut = RANK_CUTOFF * e.max();
    let kept: Vec<usize> = (0..n).rev().filter(|&k| e.values[k] > cut && e.values[k] > 0.0).collect();
    let rank = kept.len();
    let eigenvalues: Vec<f64> = kept.iter().map(|&k| e.values[k]).collect();
    let q = CMatrix::from_fn(n, rank, |i, j| e.vectors[(i, kept[j])] / eigenvalues[j].sqrt());
    let coords = CMatrix::from_fn(rank, n, |i, j| e.vectors[(j, kept[i])].conj() * eigenvalues[i].sqrt());

    let mut generators = Vec::new();
    for letter in letters(set.spec()) {
        let mut mask = vec![false; n];
        let mut shift = CMatrix::zeros(n, n);
        let mut from = Vec::new();
        let mut to = Vec::new();
        for (t, w) in set.elements().iter().enumerate() {
            if let Some(s) = set.index_of(&letter.multiply(w)?) {
                mask[t] = true;
                shift[(s, t)] = real(1.0);
                from.push(t);
                to.push(s);
            }
        }
        let quotient = if from.is_empty() || rank == 0 {
            CMatrix::zeros(rank, rank)
        } else {
            let def = columns(&coords, &from);
            let img = columns(&coords, &to);
            let eps = RANK_CUTOFF.sqrt() * operator_norm(&def);
            let pinv = def.pseudo_inverse(eps).expect("non-negative epsilon");
            img * pinv
        };
        generators.push(PartialGenerator { letter, mask, shift, quotient });
    }
    Ok(GnsData { set, gram, rank, eigenvalues, q, coords, generators })
}

impl GnsData {
    /// `⟨t̂, ŝ⟩` computed from the quotient coordinates.
    pub fn inner(&self, t: usize, s: usize) -> crate::denselin::C64 {
        (self.coords.column(s).adjoint() * self.coords.column(t))[(0, 0)]
    }

    /// `max_t |⟨t̂, 1̂⟩ − g(t)|` over `t ∈ E`.
    pub fn state_recovery_defect(&self, g: &PartialPositiveType) -> f64 {
        let unit = self.set.index_of(&Word::unit(self.set.spec())).expect("grounded sets contain the unit");
        self.set
            .elements()
            .iter()
            .enumerate()
            .map(|(t, w)| (self.inner(t, unit) - g.value(w).expect("defined on E⁻¹E")).norm())
            .fold(0.0, f64::max)
    }

    /// `‖Q* M Q − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.q.adjoint() * self.gram.matrix() * &self.q;
        max_abs(&(m - CMatrix::identity(self.rank, self.rank)))
    }

    pub fn generator(&self, letter: &Word) -> Option<&PartialGenerator> {
        self.generators.iter().find(|g| &g.letter == letter)
    }
}
