//! Bell scenarios with `d` settings and `m` outcomes per party: correlations
//! of explicit tensor-product strategies, see-saw lower bounds and moment
//! relaxation upper bounds.
//!
//! Outcome `i ∈ 1..=m` of setting `k` corresponds to the eigenvalue `ω^i` of
//! the unitary `U_k = Σ_i ω^i P_i^{(k)}`, so the strategy is a representation
//! of `Z_m^{*d} × Z_m^{*d}` and `h(s_k^v t_l^w) = Σ_{i,j} ω^{iv+jw} γ[k][l][i][j]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::denselin::{c64, eigh, kron, max_abs, real, sqrt_psd, CMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::rng;
use crate::sdp::{maximize, AffineConstraint, SdpInstance, DEFAULT_OPTIMIZATION_TOL};
use crate::words::{Factor, GroupSpec, Letter, Word};

/// Tolerance for projector and POVM identities.
pub const MEASUREMENT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellScenario {
    pub d: usize,
    pub m: usize,
}

impl BellScenario {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d < 1 || m < 2 {
            return Err(Error::InvalidInput(format!("need d ≥ 1 and m ≥ 2, got d={d}, m={m}")));
        }
        Ok(BellScenario { d, m })
    }

    /// `exp(2πi/m)`.
    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, std::f64::consts::TAU / self.m as f64)
    }

    /// `ω^e` with the exponent reduced mod `m`.
    pub fn omega_pow(&self, e: i64) -> C64 {
        let r = e.rem_euclid(self.m as i64);
        C64::from_polar(1.0, std::f64::consts::TAU * r as f64 / self.m as f64)
    }

    /// `Z_m^{*d} × Z_m^{*d}`.
    pub fn group(&self) -> GroupSpec {
        let f = Factor::CyclicFreeProduct { factors: self.d as u32, order: self.m as u32 };
        GroupSpec::product(f, f)
    }

    /// Number of entries of a correlation or functional tensor.
    pub fn tensor_len(&self) -> usize {
        self.d * self.d * self.m * self.m
    }

    /// Flat index of `[k][l][i][j]`, all zero-based.
    pub fn index(&self, k: usize, l: usize, i: usize, j: usize) -> usize {
        ((k * self.d + l) * self.m + i) * self.m + j
    }

    /// `(s_k^v, t_l^w)` with zero-based settings and exponents taken mod `m`.
    pub fn word(&self, k: usize, v: i64, l: usize, w: i64) -> Word {
        let letter = |g: usize, e: i64| -> Vec<Letter> {
            let e = e.rem_euclid(self.m as i64) as i32;
            if e == 0 {
                Vec::new()
            } else {
                vec![Letter::new(g as u32 + 1, e)]
            }
        };
        Word::from_pair(self.group(), &letter(k, v), &letter(l, w)).expect("valid letters")
    }
}

/// Projective measurements, one `m`-tuple per setting, on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct PvmFamily {
    dim: usize,
    settings: Vec<Vec<CMatrix>>,
}

impl PvmFamily {
    pub fn new(settings: Vec<Vec<CMatrix>>) -> Result<Self> {
        let dim = settings.first().and_then(|s| s.first()).map_or(0, |p| p.nrows());
        let outcomes = settings.first().map_or(0, |s| s.len());
        for (k, setting) in settings.iter().enumerate() {
            if setting.len() != outcomes {
                return Err(Error::InvalidMeasurement(format!("setting {} has {} outcomes", k + 1, setting.len())));
            }
            let mut sum = CMatrix::zeros(dim, dim);
            for (i, p) in setting.iter().enumerate() {
                if p.shape() != (dim, dim) {
                    return Err(Error::Dimension(format!("projector ({}, {}) is {:?}", k + 1, i + 1, p.shape())));
                }
                if max_abs(&(p - p.adjoint())) > MEASUREMENT_TOLERANCE {
                    return Err(Error::InvalidMeasurement(format!("projector ({}, {}) is not hermitian", k + 1, i + 1)));
                }
                if max_abs(&(p * p - p)) > MEASUREMENT_TOLERANCE {
                    return Err(Error::InvalidMeasurement(format!("projector ({}, {}) is not idempotent", k + 1, i + 1)));
                }
                sum += p;
            }
            if max_abs(&(sum - CMatrix::identity(dim, dim))) > MEASUREMENT_TOLERANCE {
                return Err(Error::InvalidMeasurement(format!("setting {} does not sum to the identity", k + 1)));
            }
        }
        Ok(PvmFamily { dim, settings })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> &[Vec<CMatrix>] {
        &self.settings
    }

    pub fn projector(&self, k: usize, i: usize) -> &CMatrix {
        &self.settings[k][i]
    }

    /// Every setting answers `outcome` with certainty.
    pub fn deterministic(d: usize, m: usize, outcomes: &[usize]) -> Result<Self> {
        let settings = (0..d)
            .map(|k| {
                (0..m)
                    .map(|i| CMatrix::from_element(1, 1, real(if outcomes[k] == i { 1.0 } else { 0.0 })))
                    .collect()
            })
            .collect();
        Self::new(settings)
    }

    /// Measurement in the computational basis; outcome `i` gets basis vectors
    /// `i, i + m, …`.
    pub fn computational(d: usize, m: usize, dim: usize) -> Result<Self> {
        let setting: Vec<CMatrix> = (0..m)
            .map(|i| CMatrix::from_fn(dim, dim, |a, b| real(if a == b && a % m == i { 1.0 } else { 0.0 })))
            .collect();
        Self::new(vec![setting; d])
    }

    /// Haar-random eigenbasis per setting, split into `m` blocks whose ranks
    /// differ by at most one and are assigned to outcomes at random.
    pub fn random(d: usize, m: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let settings = (0..d)
            .map(|_| {
                let u = rng::haar_unitary(dim, rng);
                let mut ranks: Vec<usize> = (0..m).map(|i| dim / m + usize::from(i < dim % m)).collect();
                ranks.shuffle(rng);
                let mut start = 0;
                ranks
                    .iter()
                    .map(|&r| {
                        let mut p = CMatrix::zeros(dim, dim);
                        for c in start..start + r {
                            let v = u.column(c);
                            p += v * v.adjoint() / real(v.norm_squared());
                        }
                        start += r;
                        p
                    })
                    .collect()
            })
            .collect();
        PvmFamily { dim, settings }
    }
}

/// `γ[k][l][i][j]`, the probability of outcomes `(i, j)` at settings `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    scenario: BellScenario,
    values: Vec<f64>,
}

impl Correlation {
    pub fn new(scenario: BellScenario, values: Vec<f64>) -> Result<Self> {
        if values.len() != scenario.tensor_len() {
            return Err(Error::Dimension(format!("expected {} entries, got {}", scenario.tensor_len(), values.len())));
        }
        Ok(Correlation { scenario, values })
    }

    pub fn scenario(&self) -> BellScenario {
        self.scenario
    }

    pub fn get(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.values[self.scenario.index(k, l, i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest violation of nonnegativity, normalization and no-signalling.
    pub fn invariant_defect(&self) -> f64 {
        let BellScenario { d, m } = self.scenario;
        let mut defect: f64 = 0.0;
        for &v in &self.values {
            defect = defect.max(-v);
        }
        for k in 0..d {
            for l in 0..d {
                let total: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| self.get(k, l, i, j)).sum();
                defect = defect.max((total - 1.0).abs());
            }
        }
        let alice = |k: usize, l: usize, i: usize| (0..m).map(|j| self.get(k, l, i, j)).sum::<f64>();
        let bob = |k: usize, l: usize, j: usize| (0..m).map(|i| self.get(k, l, i, j)).sum::<f64>();
        for k in 0..d {
            for l in 0..d {
                for i in 0..m {
                    defect = defect.max((alice(k, l, i) - alice(k, 0, i)).abs());
                    defect = defect.max((bob(l, k, i) - bob(0, k, i)).abs());
                }
            }
        }
        defect
    }

    /// `h(s_k^v t_l^w) = Σ_{i,j} ω^{iv+jw} γ[k][l][i][j]` for `v, w ∈ 0..m`.
    pub fn fourier(&self) -> BTreeMap<(usize, usize, usize, usize), C64> {
        let BellScenario { d, m } = self.scenario;
        let mut out = BTreeMap::new();
        for k in 0..d {
            for l in 0..d {
                for v in 0..m {
                    for w in 0..m {
                        let mut acc = c64(0.0, 0.0);
                        for i in 0..m {
                            for j in 0..m {
                                let e = ((i + 1) * v + (j + 1) * w) as i64;
                                acc += self.scenario.omega_pow(e) * self.get(k, l, i, j);
                            }
                        }
                        out.insert((k, l, v, w), acc);
                    }
                }
            }
        }
        out
    }

    /// `γ[k][l][i][j] = (1/m²) Σ_{v,w=1..m} ω^{−iv−jw} h(s_k^v t_l^w)`.
    pub fn from_fourier(scenario: BellScenario, h: &BTreeMap<(usize, usize, usize, usize), C64>) -> Result<Self> {
        let BellScenario { d, m } = scenario;
        let mut values = vec![0.0; scenario.tensor_len()];
        for k in 0..d {
            for l in 0..d {
                for i in 0..m {
                    for j in 0..m {
                        let mut acc = c64(0.0, 0.0);
                        for v in 1..=m {
                            for w in 1..=m {
                                let hv = h
                                    .get(&(k, l, v % m, w % m))
                                    .ok_or_else(|| Error::MissingValue(format!("h({k},{l},{v},{w})")))?;
                                acc += scenario.omega_pow(-(((i + 1) * v + (j + 1) * w) as i64)) * hv;
                            }
                        }
                        values[scenario.index(k, l, i, j)] = acc.re / (m * m) as f64;
                    }
                }
            }
        }
        Correlation::new(scenario, values)
    }
}

/// Linear functional `Σ c[k][l][i][j] γ[k][l][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    scenario: BellScenario,
    coeff: Vec<f64>,
}

impl BellFunctional {
    pub fn new(scenario: BellScenario, coeff: Vec<f64>) -> Result<Self> {
        if coeff.len() != scenario.tensor_len() {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", scenario.tensor_len(), coeff.len())));
        }
        if coeff.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(BellFunctional { scenario, coeff })
    }

    pub fn zero(scenario: BellScenario) -> Self {
        BellFunctional { scenario, coeff: vec![0.0; scenario.tensor_len()] }
    }

    /// CHSH: `c[k][l][i][j] = sign_kl·(−1)^{i+j}` with signs `(+, +, +, −)`.
    pub fn chsh() -> Self {
        let s = BellScenario { d: 2, m: 2 };
        let mut coeff = vec![0.0; s.tensor_len()];
        for k in 0..2 {
            for l in 0..2 {
                let sign = if k == 1 && l == 1 { -1.0 } else { 1.0 };
                for i in 0..2 {
                    for j in 0..2 {
                        coeff[s.index(k, l, i, j)] = sign * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    }
                }
            }
        }
        BellFunctional { scenario: s, coeff }
    }

    /// Uniform coefficients in `[−1, 1]`.
    pub fn random(scenario: BellScenario, rng: &mut impl Rng) -> Self {
        let coeff = (0..scenario.tensor_len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        BellFunctional { scenario, coeff }
    }

    pub fn scenario(&self) -> BellScenario {
        self.scenario
    }

    pub fn coeff(&self) -> &[f64] {
        &self.coeff
    }

    pub fn get(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.coeff[self.scenario.index(k, l, i, j)]
    }

    pub fn evaluate(&self, gamma: &Correlation) -> Result<f64> {
        if gamma.scenario != self.scenario {
            return Err(Error::InvalidInput("functional and correlation belong to different scenarios".into()));
        }
        Ok(self.coeff.iter().zip(gamma.values.iter()).map(|(c, g)| c * g).sum())
    }

    /// `Σ c·(P_i^{(k)} ⊗ Q_j^{(l)})`.
    pub fn operator(&self, a: &PvmFamily, b: &PvmFamily) -> CMatrix {
        let BellScenario { d, m } = self.scenario;
        let mut w = CMatrix::zeros(a.dim * b.dim, a.dim * b.dim);
        for k in 0..d {
            for l in 0..d {
                for j in 0..m {
                    let mut left = CMatrix::zeros(a.dim, a.dim);
                    for i in 0..m {
                        let c = self.get(k, l, i, j);
                        if c != 0.0 {
                            left += a.projector(k, i) * real(c);
                        }
                    }
                    w += kron(&left, b.projector(l, j));
                }
            }
        }
        w
    }
}

fn check_pair(s: BellScenario, a: &PvmFamily, b: &PvmFamily) -> Result<()> {
    for (name, fam) in [("A", a), ("B", b)] {
        if fam.settings.len() != s.d || fam.settings.iter().any(|set| set.len() != s.m) {
            return Err(Error::Dimension(format!("party {name} does not have {} settings of {} outcomes", s.d, s.m)));
        }
    }
    Ok(())
}

/// `γ[k][l][i][j] = ⟨(P_i^{(k)} ⊗ Q_j^{(l)})ξ, ξ⟩`.
pub fn correlation_of(s: BellScenario, a: &PvmFamily, b: &PvmFamily, xi: &CMatrix) -> Result<Correlation> {
    check_pair(s, a, b)?;
    if xi.shape() != (a.dim * b.dim, 1) {
        return Err(Error::Dimension(format!("state has shape {:?}, expected ({}, 1)", xi.shape(), a.dim * b.dim)));
    }
    if (xi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("state norm {} is not 1", xi.norm())));
    }
    // ξ ↔ Ξ with ξ[a·n_B + b] = Ξ[a, b]; then ⟨ξ, (P⊗Q)ξ⟩ = tr(Ξ* P Ξ Qᵀ).
    let big_xi = CMatrix::from_fn(a.dim, b.dim, |r, c| xi[(r * b.dim + c, 0)]);
    let norm2 = xi.norm_squared();
    let mut values = vec![0.0; s.tensor_len()];
    for k in 0..s.d {
        for i in 0..s.m {
            let left = big_xi.adjoint() * a.projector(k, i) * &big_xi;
            for l in 0..s.d {
                for j in 0..s.m {
                    let q_t = b.projector(l, j).transpose();
                    values[s.index(k, l, i, j)] = (&left * q_t).trace().re / norm2;
                }
            }
        }
    }
    Correlation::new(s, values)
}

/// Relaxation level: the word set `E_n` indexing the moment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Words of total length at most `n`.
    Length(usize),
    /// Level 1 plus all products `s_k^v t_l^w`.
    OneAb,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1ab" | "1+ab" => Ok(Level::OneAb),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|n| *n >= 1)
                .map(Level::Length)
                .ok_or_else(|| Error::InvalidInput(format!("unknown level '{s}'"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Length(n) => write!(f, "{n}"),
            Level::OneAb => write!(f, "1ab"),
        }
    }
}

/// Reduced words of `Z_m^{*d}` with at most `n` syllables.
fn factor_words(d: usize, m: usize, n: usize) -> Vec<Vec<Letter>> {
    let mut all = vec![Vec::new()];
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for g in 1..=d as u32 {
                if w.last().is_some_and(|l: &Letter| l.generator == g) {
                    continue;
                }
                for e in 1..m as i32 {
                    let mut grown = w.clone();
                    grown.push(Letter::new(g, e));
                    next.push(grown);
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// `E_n` in increasing word order.
pub fn level_words(s: BellScenario, level: Level) -> Vec<Word> {
    let spec = s.group();
    let mut out = Vec::new();
    match level {
        Level::Length(n) => {
            let words = factor_words(s.d, s.m, n);
            for a in &words {
                for b in &words {
                    if a.len() + b.len() <= n {
                        out.push(Word::from_pair(spec, a, b).expect("valid letters"));
                    }
                }
            }
        }
        Level::OneAb => {
            let words = factor_words(s.d, s.m, 1);
            for a in &words {
                for b in &words {
                    out.push(Word::from_pair(spec, a, b).expect("valid letters"));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The moment relaxation: `M[x,y] = h(x⁻¹y)` over `E_n`, unit diagonal,
/// equal entries for equal quotients, objective through the inverse Fourier
/// transform.
pub fn outer_instance(f: &BellFunctional, level: Level) -> Result<SdpInstance> {
    let s = f.scenario;
    let words = level_words(s, level);
    let n = words.len();
    let index: BTreeMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut inst = SdpInstance::new(n);
    let mut representative: BTreeMap<Word, (usize, usize)> = BTreeMap::new();
    for (i, x) in words.iter().enumerate() {
        inst.add_constraint(AffineConstraint::entry(i, i, real(1.0)))?;
        for (j, y) in words.iter().enumerate() {
            if i == j {
                continue;
            }
            let q = x.quotient(y)?;
            match representative.get(&q) {
                Some(&(r, c)) => inst.add_constraint(AffineConstraint::new(
                    [(i, j, real(1.0)), (r, c, real(-1.0))],
                    real(0.0),
                ))?,
                None => {
                    representative.insert(q, (i, j));
                }
            }
        }
    }

    let mut objective: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    let scale = 1.0 / (s.m * s.m) as f64;
    for k in 0..s.d {
        for l in 0..s.d {
            for v in 1..=s.m {
                for w in 1..=s.m {
                    let mut alpha = c64(0.0, 0.0);
                    for i in 0..s.m {
                        for j in 0..s.m {
                            let c = f.get(k, l, i, j);
                            if c != 0.0 {
                                alpha += s.omega_pow(-(((i + 1) * v + (j + 1) * w) as i64)) * (c * scale);
                            }
                        }
                    }
                    if alpha == c64(0.0, 0.0) {
                        continue;
                    }
                    // h(s_k^v t_l^w) = M[x, y] for x = (s_k^{−v}, 1), y = (1, t_l^w).
                    let x = s.word(k, -(v as i64), l, 0);
                    let y = s.word(k, 0, l, w as i64);
                    let (r, c) = (index[&x], index[&y]);
                    // Objective terms read Re(conj(C)·b), so store conj(α).
                    *objective.entry((r, c)).or_insert(c64(0.0, 0.0)) += alpha.conj();
                }
            }
        }
    }
    inst.set_objective(objective.into_iter().map(|((r, c), v)| (r, c, v)))?;
    Ok(inst)
}

#[derive(Debug, Clone)]
pub struct OuterBound {
    pub value: f64,
    pub level: Level,
    pub size: usize,
    pub residual: f64,
    pub psd_floor: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Upper bound on the functional over commuting-operator correlations.
pub fn outer_bound(f: &BellFunctional, level: Level) -> Result<OuterBound> {
    let inst = outer_instance(f, level)?;
    let out = maximize(&inst, DEFAULT_OPTIMIZATION_TOL)?;
    Ok(OuterBound {
        value: out.value,
        level,
        size: inst.dim(),
        residual: out.residual,
        psd_floor: out.psd_floor,
        gap: out.gap,
        iterations: out.iterations,
    })
}

/// `V x = Σ_i e_i ⊗ M_i^{1/2} x` and `P_i = e_i e_i* ⊗ I_n`.
pub fn naimark_dilate(povm: &[CMatrix]) -> Result<(PvmFamily, CMatrix)> {
    let m = povm.len();
    let n = povm.first().map_or(0, |e| e.nrows());
    if m == 0 {
        return Err(Error::InvalidMeasurement("empty POVM".into()));
    }
    let mut sum = CMatrix::zeros(n, n);
    let mut roots = Vec::with_capacity(m);
    for (i, e) in povm.iter().enumerate() {
        if e.shape() != (n, n) {
            return Err(Error::Dimension(format!("effect {} is {:?}", i + 1, e.shape())));
        }
        let h = HermitianMatrix::new(e.clone())?;
        let floor = eigh(&h)?.min();
        if floor < -MEASUREMENT_TOLERANCE || max_abs(&(e - e.adjoint())) > MEASUREMENT_TOLERANCE {
            return Err(Error::InvalidMeasurement(format!("effect {} is not positive semidefinite", i + 1)));
        }
        roots.push(sqrt_psd(&h)?.into_matrix());
        sum += e;
    }
    if max_abs(&(sum - CMatrix::identity(n, n))) > MEASUREMENT_TOLERANCE {
        return Err(Error::InvalidMeasurement("effects do not sum to the identity".into()));
    }
    let mut v = CMatrix::zeros(m * n, n);
    for (i, r) in roots.iter().enumerate() {
        v.view_mut((i * n, 0), (n, n)).copy_from(r);
    }
    let projectors = (0..m)
        .map(|i| {
            let mut e = CMatrix::zeros(m, m);
            e[(i, i)] = real(1.0);
            kron(&e, &CMatrix::identity(n, n))
        })
        .collect();
    Ok((PvmFamily::new(vec![projectors])?, v))
}

/// PVM close to a POVM: every effect contributes its eigenvectors with
/// eigenvalue at least ½, orthonormalized in order of decreasing eigenvalue;
/// the remaining directions go to the effect with the largest expectation.
pub fn round_to_pvm(povm: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let m = povm.len();
    let n = povm.first().map_or(0, |e| e.nrows());
    let mut candidates: Vec<(f64, usize, CMatrix)> = Vec::new();
    for (i, e) in povm.iter().enumerate() {
        let eig = eigh(&HermitianMatrix::new(e.clone())?)?;
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda >= 0.5 {
                candidates.push((lambda, i, eig.vectors.columns(k, 1).into_owned()));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let orthogonalize = |v: &CMatrix, basis: &[CMatrix]| -> CMatrix {
        let mut v = v.clone();
        for _ in 0..2 {
            for b in basis {
                let c = (b.adjoint() * &v)[(0, 0)];
                v -= b * c;
            }
        }
        v
    };
    for (_, i, v) in &candidates {
        if basis.len() == n {
            break;
        }
        let r = orthogonalize(v, &basis);
        let norm = r.norm();
        if norm > 1e-6 {
            basis.push(r / real(norm));
            owner.push(*i);
        }
    }
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = CMatrix::zeros(n, 1);
        e[(k, 0)] = real(1.0);
        let r = orthogonalize(&e, &basis);
        let norm = r.norm();
        if norm > 1e-6 {
            let v = r / real(norm);
            let best = (0..m)
                .max_by(|&a, &b| {
                    let ea = (v.adjoint() * &povm[a] * &v)[(0, 0)].re;
                    let eb = (v.adjoint() * &povm[b] * &v)[(0, 0)].re;
                    ea.total_cmp(&eb).then(b.cmp(&a))
                })
                .expect("non-empty POVM");
            basis.push(v);
            owner.push(best);
        }
    }
    let mut out = vec![CMatrix::zeros(n, n); m];
    for (v, i) in basis.iter().zip(owner) {
        // Dividing by ‖v‖² keeps rank-one projectors exact in dimension 1.
        out[i] += v * v.adjoint() / real(v.norm_squared());
    }
    Ok(out)
}

/// Best POVM for one setting against fixed weights: `max Σ_i tr(M_i R_i)`
/// over `M_i ⪰ 0`, `Σ M_i = I`, solved as a block-diagonal SDP.
fn best_povm(weights: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let m = weights.len();
    let n = weights[0].nrows();
    let mut inst = SdpInstance::new(m * n);
    for i in 0..m {
        for i2 in i + 1..m {
            for a in 0..n {
                for c in 0..n {
                    inst.add_constraint(AffineConstraint::entry(i * n + a, i2 * n + c, real(0.0)))?;
                }
            }
        }
    }
    for a in 0..n {
        for c in a..n {
            let rhs = real(if a == c { 1.0 } else { 0.0 });
            inst.add_constraint(AffineConstraint::new((0..m).map(|i| (i * n + a, i * n + c, real(1.0))), rhs))?;
        }
    }
    let mut objective = Vec::new();
    for (i, r) in weights.iter().enumerate() {
        for a in 0..n {
            for c in 0..n {
                if r[(a, c)] != c64(0.0, 0.0) {
                    objective.push((i * n + a, i * n + c, r[(a, c)]));
                }
            }
        }
    }
    inst.set_objective(objective)?;
    let out = maximize(&inst, 1e-8)?;
    let b = out.b.matrix();
    Ok((0..m).map(|i| b.view((i * n, i * n), (n, n)).into_owned()).collect())
}

fn top_state(w: &CMatrix) -> Result<(f64, CMatrix)> {
    let e = eigh(&HermitianMatrix::new(w.clone())?)?;
    let k = e.values.len() - 1;
    Ok((e.values[k], e.vectors.columns(k, 1).into_owned()))
}

#[derive(Debug, Clone)]
pub struct InnerBound {
    /// Functional evaluated on the correlation of the returned strategy.
    pub value: f64,
    pub alice: PvmFamily,
    pub bob: PvmFamily,
    pub state: CMatrix,
    pub correlation: Correlation,
    pub restart: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SeeSawOptions {
    pub dim: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl SeeSawOptions {
    pub fn new(dim: usize, seed: u64) -> Self {
        SeeSawOptions { dim, restarts: DEFAULT_RESTARTS, iterations: DEFAULT_ITERATIONS, seed }
    }
}

/// Updates one party's measurements against the other party and the state.
fn update_party(f: &BellFunctional, fixed: &PvmFamily, xi: &CMatrix, n_a: usize, n_b: usize, alice: bool) -> Result<PvmFamily> {
    let BellScenario { d, m } = f.scenario;
    let big_xi = CMatrix::from_fn(n_a, n_b, |r, c| xi[(r * n_b + c, 0)]);
    let mut settings = Vec::with_capacity(d);
    for k in 0..d {
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            let dim_fixed = fixed.dim;
            let mut other = CMatrix::zeros(dim_fixed, dim_fixed);
            for l in 0..d {
                for j in 0..m {
                    let c = if alice { f.get(k, l, i, j) } else { f.get(l, k, j, i) };
                    if c != 0.0 {
                        other += fixed.projector(l, j) * real(c);
                    }
                }
            }
            // tr(P Ξ Qᵀ Ξ*) for Alice, tr(Q (Ξ* P Ξ)ᵀ) for Bob.
            let r = if alice {
                &big_xi * other.transpose() * big_xi.adjoint()
            } else {
                (big_xi.adjoint() * other * &big_xi).transpose()
            };
            weights.push((&r + r.adjoint()) * real(0.5));
        }
        let povm = best_povm(&weights)?;
        let (_, v) = naimark_dilate(&povm)?;
        debug_assert!(max_abs(&(v.adjoint() * &v - CMatrix::identity(povm[0].nrows(), povm[0].nrows()))) < 1e-8);
        settings.push(round_to_pvm(&povm)?);
    }
    PvmFamily::new(settings)
}

/// A stalled POVM solve just skips that update.
fn stalled_is_none(r: Result<PvmFamily>) -> Result<Option<PvmFamily>> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(Error::NotConverged(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn see_saw_run(f: &BellFunctional, opts: &SeeSawOptions, restart: usize) -> Result<InnerBound> {
    let BellScenario { d, m } = f.scenario;
    let n = opts.dim;
    let mut rng = rng::stream(opts.seed, restart as u64);
    let mut alice = PvmFamily::random(d, m, n, &mut rng);
    let mut bob = PvmFamily::random(d, m, n, &mut rng);
    let (mut value, mut xi) = top_state(&f.operator(&alice, &bob))?;
    let mut iterations = 0;
    for _ in 0..opts.iterations {
        iterations += 1;
        let start = value;
        if let Some(cand) = stalled_is_none(update_party(f, &bob, &xi, n, n, true))? {
            let (v, s) = top_state(&f.operator(&cand, &bob))?;
            if v >= value {
                alice = cand;
                value = v;
                xi = s;
            }
        }
        if let Some(cand) = stalled_is_none(update_party(f, &alice, &xi, n, n, false))? {
            let (v, s) = top_state(&f.operator(&alice, &cand))?;
            if v >= value {
                bob = cand;
                value = v;
                xi = s;
            }
        }
        if value - start <= 1e-12 * (1.0 + value.abs()) {
            break;
        }
    }
    let xi = &xi / real(xi.norm());
    let correlation = correlation_of(f.scenario, &alice, &bob, &xi)?;
    let value = f.evaluate(&correlation)?;
    Ok(InnerBound { value, alice, bob, state: xi, correlation, restart, iterations })
}

/// See-saw lower bound over tensor-product strategies of local dimension
/// `opts.dim`; restarts are independent and seeded by index.
pub fn inner_bound(f: &BellFunctional, opts: &SeeSawOptions, exec: Execution) -> Result<InnerBound> {
    if opts.dim == 0 || opts.restarts == 0 {
        return Err(Error::InvalidInput("see-saw needs dim ≥ 1 and at least one restart".into()));
    }
    let runs = exec.map_indexed(opts.restarts, |r| see_saw_run(f, opts, r));
    let mut best: Option<InnerBound> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Exhaustive maximum over deterministic strategies.
pub fn classical_value(f: &BellFunctional) -> f64 {
    let BellScenario { d, m } = f.scenario;
    let total = m.pow(2 * d as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut c = code;
        let mut outs = Vec::with_capacity(2 * d);
        for _ in 0..2 * d {
            outs.push(c % m);
            c /= m;
        }
        let mut v = 0.0;
        for k in 0..d {
            for l in 0..d {
                v += f.get(k, l, outs[k], outs[d + l]);
            }
        }
        best = best.max(v);
    }
    best
}
