//! Dense hermitian linear algebra: eigendecomposition, PSD utilities and the
//! three-block positive completion.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative eigenvalue cutoff for square roots and pseudo-inverses.
pub const CLIP_RELATIVE: f64 = 1e-12;
/// Admissible negative eigenvalue, relative to `1 + λ_max`, for `sqrt_psd`/`pinv_psd`.
pub const PSD_INPUT_TOLERANCE: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Dense complex hermitian matrix. Construction symmetrizes `(M + M*)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrize(m))
    }

    fn symmetrize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj).map(|z| z * 0.5))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::symmetrize(CMatrix::from_fn(n, n, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(CMatrix::from_fn(n, n, |i, j| if i == j { real(diag[i]) } else { C64::new(0.0, 0.0) }))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Real Frobenius pairing `Re tr(self · other)`.
    pub fn pairing(&self, other: &HermitianMatrix) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

impl fmt::Display for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_matrix(f, &self.0)
    }
}

/// Row-per-line `re±im·i` rendering for diagnostics.
pub fn write_matrix(f: &mut impl fmt::Write, m: &CMatrix) -> fmt::Result {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                let sign = if z.im < 0.0 { '-' } else { '+' };
                format!("{:.6}{}{:.6}·i", z.re, sign, z.im.abs())
            })
            .collect();
        writeln!(f, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Eigendecomposition `M = U Λ U*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Rebuilds `U diag(φ(λ)) U*`.
    pub fn map_spectrum(&self, phi: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = phi(lambda);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        HermitianMatrix::symmetrize(&scaled * self.vectors.adjoint())
    }
}

pub fn eigh(m: &HermitianMatrix) -> Result<Eigh> {
    if m.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = m.dim();
    if n == 0 {
        return Ok(Eigh { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let decomposition = m.0.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
    let values = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| decomposition.eigenvectors[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

/// Smallest eigenvalue.
pub fn psd_floor(m: &HermitianMatrix) -> Result<f64> {
    Ok(eigh(m)?.min())
}

fn checked_psd_eigh(m: &HermitianMatrix) -> Result<Eigh> {
    let e = eigh(m)?;
    let allowed = PSD_INPUT_TOLERANCE * (1.0 + e.max().max(0.0));
    if e.min() < -allowed {
        return Err(Error::NotPsd { min_eig: e.min(), allowed });
    }
    Ok(e)
}

pub fn sqrt_psd(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = checked_psd_eigh(m)?;
    let cut = CLIP_RELATIVE * e.max().max(0.0);
    Ok(e.map_spectrum(|l| if l > cut { l.sqrt() } else { 0.0 }))
}

pub fn pinv_psd(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = checked_psd_eigh(m)?;
    let cut = CLIP_RELATIVE * e.max().max(0.0);
    Ok(e.map_spectrum(|l| if l > cut { 1.0 / l } else { 0.0 }))
}

/// Operator (spectral) norm of an arbitrary complex matrix.
pub fn operator_norm(x: &CMatrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let gram = HermitianMatrix::symmetrize(x.adjoint() * x);
    eigh(&gram).map(|e| e.max().max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// The pattern
/// ```text
/// [ A   X   ? ]
/// [ X*  B   Y ]
/// [ ?   Y*  C ]
/// ```
/// with the corner block unspecified.
#[derive(Debug, Clone)]
pub struct PartialBlockMatrix {
    pub a: HermitianMatrix,
    pub x: CMatrix,
    pub b: HermitianMatrix,
    pub y: CMatrix,
    pub c: HermitianMatrix,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub z: CMatrix,
    pub full: HermitianMatrix,
}

/// Input tolerance (relative to `scale`) for the two specified compressions.
pub const COMPLETION_INPUT_TOLERANCE: f64 = 1e-8;
/// Guaranteed PSD floor (relative to `scale`) of the assembled matrix.
pub const COMPLETION_OUTPUT_TOLERANCE: f64 = 1e-7;

impl PartialBlockMatrix {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.dim(), self.b.dim(), self.c.dim())
    }

    fn check_dims(&self) -> Result<()> {
        let (n0, n1, n2) = self.dims();
        if self.x.shape() != (n0, n1) || self.y.shape() != (n1, n2) {
            return Err(Error::Dimension(format!(
                "blocks X {:?} and Y {:?} do not match A/B/C sizes ({n0}, {n1}, {n2})",
                self.x.shape(),
                self.y.shape()
            )));
        }
        Ok(())
    }

    /// `1 + max` entry modulus across all blocks.
    pub fn scale(&self) -> f64 {
        1.0 + [self.a.max_abs(), max_abs(&self.x), self.b.max_abs(), max_abs(&self.y), self.c.max_abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Assembles the full matrix for a given corner block.
    pub fn assemble(&self, z: &CMatrix) -> HermitianMatrix {
        let (n0, n1, n2) = self.dims();
        let n = n0 + n1 + n2;
        let mut m = CMatrix::zeros(n, n);
        let blocks: [(usize, usize, &CMatrix); 6] = [
            (0, 0, self.a.matrix()),
            (0, n0, &self.x),
            (0, n0 + n1, z),
            (n0, n0, self.b.matrix()),
            (n0, n0 + n1, &self.y),
            (n0 + n1, n0 + n1, self.c.matrix()),
        ];
        for (r, c, blk) in blocks {
            m.view_mut((r, c), blk.shape()).copy_from(blk);
            if r != c {
                m.view_mut((c, r), (blk.ncols(), blk.nrows())).copy_from(&blk.adjoint());
            }
        }
        HermitianMatrix::symmetrize(m)
    }

    fn compressions(&self) -> (HermitianMatrix, HermitianMatrix) {
        let upper = PartialBlockMatrix {
            a: self.a.clone(),
            x: self.x.clone(),
            b: self.b.clone(),
            y: CMatrix::zeros(self.b.dim(), 0),
            c: HermitianMatrix::zeros(0),
        }
        .assemble(&CMatrix::zeros(self.a.dim(), 0));
        let lower = PartialBlockMatrix {
            a: HermitianMatrix::zeros(0),
            x: CMatrix::zeros(0, self.b.dim()),
            b: self.b.clone(),
            y: self.y.clone(),
            c: self.c.clone(),
        }
        .assemble(&CMatrix::zeros(0, self.c.dim()));
        (upper, lower)
    }
}

/// Completes the corner with `Z = X B⁺ Y`, the central completion.
pub fn complete_block(p: &PartialBlockMatrix) -> Result<Completion> {
    p.check_dims()?;
    let scale = p.scale();
    let (upper, lower) = p.compressions();
    for part in [&upper, &lower] {
        let floor = psd_floor(part)?;
        let allowed = COMPLETION_INPUT_TOLERANCE * scale;
        if floor < -allowed {
            return Err(Error::NotPsd { min_eig: floor, allowed });
        }
    }
    let (n0, n1, n2) = p.dims();
    let z = if n1 == 0 {
        CMatrix::zeros(n0, n2)
    } else {
        // B may sit a hair outside the cone; the pseudo-inverse clips it.
        let eb = eigh(&p.b)?;
        let cut = CLIP_RELATIVE * eb.max().max(0.0);
        let b_pinv = eb.map_spectrum(|l| if l > cut { 1.0 / l } else { 0.0 });
        &p.x * b_pinv.matrix() * &p.y
    };
    let full = p.assemble(&z);
    let floor = psd_floor(&full)?;
    let allowed = COMPLETION_OUTPUT_TOLERANCE * scale;
    if floor < -allowed {
        return Err(Error::NotPsd { min_eig: floor, allowed });
    }
    Ok(Completion { z, full })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_matrix(rows: &[&[f64]]) -> HermitianMatrix {
        let n = rows.len();
        HermitianMatrix::from_fn(n, |i, j| real(rows[i][j]))
    }

    fn one(v: f64) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&[v])
    }

    #[test]
    fn eigh_examples() {
        assert_eq!(eigh(&HermitianMatrix::identity(3)).unwrap().values, vec![1.0; 3]);
        let e = eigh(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        let e = eigh(&real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_finite() {
        let m = CMatrix::from_element(2, 2, c64(f64::NAN, 0.0));
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NonFinite)));
    }

    #[test]
    fn psd_utilities() {
        let s = sqrt_psd(&HermitianMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert!((s.get(0, 0).re - 2.0).abs() < 1e-14 && (s.get(1, 1).re - 3.0).abs() < 1e-14);
        let p = pinv_psd(&HermitianMatrix::from_real_diagonal(&[2.0, 0.0])).unwrap();
        assert!((p.get(0, 0).re - 0.5).abs() < 1e-14 && p.get(1, 1).norm() < 1e-14);
        let floor = psd_floor(&real_matrix(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        assert!((floor + 1.0).abs() < 1e-14);
        assert!(sqrt_psd(&real_matrix(&[&[1.0, 2.0], &[2.0, 1.0]])).is_err());
    }

    #[test]
    fn completion_examples() {
        let zero = CMatrix::zeros(1, 1);
        let p = PartialBlockMatrix { a: one(1.0), x: zero.clone(), b: one(1.0), y: zero, c: one(1.0) };
        assert_eq!(complete_block(&p).unwrap().z[(0, 0)], c64(0.0, 0.0));

        let ones = CMatrix::from_element(1, 1, real(1.0));
        let p = PartialBlockMatrix { a: one(1.0), x: ones.clone(), b: one(1.0), y: ones, c: one(1.0) };
        let done = complete_block(&p).unwrap();
        assert!((done.z[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(done.full.matrix().iter().all(|z| (z.re - 1.0).abs() < 1e-14));

        let half = CMatrix::from_element(1, 1, real(0.5));
        let p = PartialBlockMatrix { a: one(1.0), x: half.clone(), b: one(1.0), y: half, c: one(1.0) };
        let done = complete_block(&p).unwrap();
        assert!((done.z[(0, 0)].re - 0.25).abs() < 1e-15);
        // Oracle: the 3x3 Kac–Murdock–Szegő matrix with ρ = 1/2 has eigenvalues
        // 3/4 and (9 ± √33)/8, all positive.
        let expected = [0.75, (9.0 - 33f64.sqrt()) / 8.0, (9.0 + 33f64.sqrt()) / 8.0];
        let mut ev = eigh(&done.full).unwrap().values;
        ev.sort_by(f64::total_cmp);
        let mut ex = expected.to_vec();
        ex.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(ex.iter()) {
            assert!((a - b).abs() < 1e-12, "{ev:?} vs {ex:?}");
        }
    }

    #[test]
    fn completion_with_empty_middle_is_zero() {
        let p = PartialBlockMatrix {
            a: HermitianMatrix::identity(2),
            x: CMatrix::zeros(2, 0),
            b: HermitianMatrix::zeros(0),
            y: CMatrix::zeros(0, 1),
            c: one(1.0),
        };
        let done = complete_block(&p).unwrap();
        assert_eq!(done.z.shape(), (2, 1));
        assert!(max_abs(&done.z) == 0.0);
    }

    #[test]
    fn completion_rejects_non_psd_compression() {
        let two = CMatrix::from_element(1, 1, real(2.0));
        let p = PartialBlockMatrix { a: one(1.0), x: two, b: one(1.0), y: CMatrix::zeros(1, 1), c: one(1.0) };
        assert!(matches!(complete_block(&p), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn display_renders_rows() {
        let m = HermitianMatrix::from_fn(2, |i, j| if i == j { real(1.0) } else if i < j { c64(0.0, -1.0) } else { c64(0.0, 1.0) });
        let text = m.to_string();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("1.000000+0.000000·i 0.000000-1.000000·i"));
    }
}
