//! JSON file formats. Floats are written in shortest round-trip form, so
//! parsing emitted text reproduces every value bit for bit.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteRep, GroupAlgebraElement, PartialFunction};
use crate::bell::{BellFunctional, BellScenario, InnerBound, OuterBound, PvmFamily};
use crate::certify::{FalsifyMode, FalsifyReport, SosCertificate, TraceCertificate};
use crate::denselin::{c64, CMatrix, Completion, HermitianMatrix, PartialBlockMatrix};
use crate::error::{Error, Result};
use crate::extendpt::PartialPositiveType;
use crate::gnsrep::GnsData;
use crate::grounded::GroundedSet;
use crate::words::{GroupSpec, Word};

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::InvalidInput(format!("at `{path}`: {}", e.into_inner()))
    })
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn at(path: impl std::fmt::Display, e: Error) -> Error {
    Error::InvalidInput(format!("at `{path}`: {e}"))
}

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson, path: &str) -> Result<CMatrix> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != k) {
        return Err(at(format!("{path}[{i}]"), Error::Dimension(format!("row has {} entries, expected {k}", rows[i].len()))));
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(at(format!("{path}[{i}][{j}]"), Error::NonFinite));
            }
        }
    }
    Ok(CMatrix::from_fn(n, k, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

fn hermitian_from_json(rows: &MatrixJson, path: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(matrix_from_json(rows, path)?).map_err(|e| at(path, e))
}

pub fn words_to_strings(words: &[Word]) -> Vec<String> {
    words.iter().map(Word::to_string).collect()
}

pub fn set_from_strings(spec: GroupSpec, words: &[String], path: &str) -> Result<GroundedSet> {
    let parsed = words
        .iter()
        .enumerate()
        .map(|(i, w)| Word::parse(spec, w).map_err(|e| at(format!("{path}[{i}]"), e)))
        .collect::<Result<Vec<_>>>()?;
    GroundedSet::new(spec, parsed).map_err(|e| at(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: String,
    pub re: f64,
    pub im: f64,
}

/// A group algebra element, or a partial function when `domain` names `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementJson {
    pub group: GroupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    pub terms: Vec<TermJson>,
}

fn terms_json<'a>(values: impl Iterator<Item = (&'a Word, &'a crate::denselin::C64)>) -> Vec<TermJson> {
    let mut terms: Vec<TermJson> = values.map(|(w, v)| TermJson { word: w.to_string(), re: v.re, im: v.im }).collect();
    terms.sort_by(|a, b| a.word.cmp(&b.word));
    terms
}

impl ElementJson {
    pub fn from_element(f: &GroupAlgebraElement) -> Self {
        ElementJson { group: f.spec(), domain: None, terms: terms_json(f.terms().iter()) }
    }

    pub fn from_positive_type(g: &PartialPositiveType) -> Self {
        ElementJson {
            group: g.set().spec(),
            domain: Some(words_to_strings(g.set().elements())),
            terms: terms_json(g.values().values().iter()),
        }
    }

    fn parsed_terms(&self) -> Result<Vec<(Word, crate::denselin::C64)>> {
        self.group.validate().map_err(|e| at("group", e))?;
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if !t.re.is_finite() || !t.im.is_finite() {
                    return Err(at(format!("terms[{i}]"), Error::NonFinite));
                }
                let w = Word::parse(self.group, &t.word).map_err(|e| at(format!("terms[{i}].word"), e))?;
                Ok((w, c64(t.re, t.im)))
            })
            .collect()
    }

    pub fn to_element(&self) -> Result<GroupAlgebraElement> {
        GroupAlgebraElement::from_terms(self.group, self.parsed_terms()?)
    }

    pub fn to_partial_function(&self) -> Result<PartialFunction> {
        PartialFunction::from_values(self.group, self.parsed_terms()?)
    }

    pub fn to_positive_type(&self) -> Result<PartialPositiveType> {
        let domain = self
            .domain
            .as_ref()
            .ok_or_else(|| at("domain", Error::InvalidInput("missing domain array".into())))?;
        let set = set_from_strings(self.group, domain, "domain")?;
        PartialPositiveType::new(set, self.to_partial_function()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassJson {
    pub class: String,
    pub re: f64,
    pub im: f64,
}

/// Sum-of-squares certificate; trace certificates also list class sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub group: GroupSpec,
    pub support: Vec<String>,
    pub epsilon: f64,
    pub gram: MatrixJson,
    pub factors: Vec<ElementJson>,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_residuals: Option<Vec<ClassJson>>,
}

impl CertificateJson {
    pub fn from_sos(c: &SosCertificate) -> Self {
        CertificateJson {
            group: c.support.spec(),
            support: words_to_strings(c.support.elements()),
            epsilon: c.epsilon,
            gram: matrix_to_json(c.gram.matrix()),
            factors: c.factors.iter().map(ElementJson::from_element).collect(),
            residual: c.residual,
            class_residuals: None,
        }
    }

    pub fn from_trace(c: &TraceCertificate) -> Self {
        let mut out = Self::from_sos(&c.certificate);
        out.class_residuals = Some(
            c.class_residuals.iter().map(|(w, v)| ClassJson { class: w.to_string(), re: v.re, im: v.im }).collect(),
        );
        out
    }

    pub fn is_trace(&self) -> bool {
        self.class_residuals.is_some()
    }

    pub fn to_sos(&self) -> Result<SosCertificate> {
        let support = set_from_strings(self.group, &self.support, "support")?;
        let gram = hermitian_from_json(&self.gram, "gram")?;
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let e = f.to_element().map_err(|e| at(format!("factors[{i}]"), e))?;
                if e.spec() != self.group {
                    return Err(at(format!("factors[{i}].group"), Error::SpecMismatch { left: e.spec(), right: self.group }));
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SosCertificate { support, gram, factors, epsilon: self.epsilon, residual: self.residual })
    }

    pub fn to_trace(&self) -> Result<TraceCertificate> {
        let certificate = self.to_sos()?;
        let classes = self.class_residuals.as_deref().unwrap_or_default();
        let class_residuals = classes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = Word::parse(self.group, &c.class).map_err(|e| at(format!("class_residuals[{i}].class"), e))?;
                Ok((w, c64(c.re, c.im)))
            })
            .collect::<Result<_>>()?;
        Ok(TraceCertificate { certificate, class_residuals })
    }
}

/// The five specified blocks of a 3×3 block pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocksJson {
    pub a: MatrixJson,
    pub x: MatrixJson,
    pub b: MatrixJson,
    pub y: MatrixJson,
    pub c: MatrixJson,
}

impl BlocksJson {
    pub fn from_blocks(p: &PartialBlockMatrix) -> Self {
        BlocksJson {
            a: matrix_to_json(p.a.matrix()),
            x: matrix_to_json(&p.x),
            b: matrix_to_json(p.b.matrix()),
            y: matrix_to_json(&p.y),
            c: matrix_to_json(p.c.matrix()),
        }
    }

    pub fn to_blocks(&self) -> Result<PartialBlockMatrix> {
        Ok(PartialBlockMatrix {
            a: hermitian_from_json(&self.a, "a")?,
            x: matrix_from_json(&self.x, "x")?,
            b: hermitian_from_json(&self.b, "b")?,
            y: matrix_from_json(&self.y, "y")?,
            c: hermitian_from_json(&self.c, "c")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionJson {
    pub z: MatrixJson,
    pub full: MatrixJson,
    pub psd_floor: f64,
}

impl CompletionJson {
    pub fn new(c: &Completion, psd_floor: f64) -> Self {
        CompletionJson { z: matrix_to_json(&c.z), full: matrix_to_json(c.full.matrix()), psd_floor }
    }
}

/// `coeff[k][l][i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub d: usize,
    pub m: usize,
    pub coeff: Vec<Vec<Vec<Vec<f64>>>>,
}

fn tensor_to_nested(s: BellScenario, flat: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..s.d)
        .map(|k| (0..s.d).map(|l| (0..s.m).map(|i| (0..s.m).map(|j| flat[s.index(k, l, i, j)]).collect()).collect()).collect())
        .collect()
}

impl ScenarioJson {
    pub fn from_functional(f: &BellFunctional) -> Self {
        let s = f.scenario();
        ScenarioJson { d: s.d, m: s.m, coeff: tensor_to_nested(s, f.coeff()) }
    }

    pub fn to_functional(&self) -> Result<BellFunctional> {
        let s = BellScenario::new(self.d, self.m)?;
        let mut flat = vec![0.0; s.tensor_len()];
        let shape = |path: String, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(at(path, Error::Dimension(format!("expected {want} entries, got {len}"))))
            }
        };
        shape("coeff".into(), self.coeff.len(), s.d)?;
        for (k, a) in self.coeff.iter().enumerate() {
            shape(format!("coeff[{k}]"), a.len(), s.d)?;
            for (l, b) in a.iter().enumerate() {
                shape(format!("coeff[{k}][{l}]"), b.len(), s.m)?;
                for (i, c) in b.iter().enumerate() {
                    shape(format!("coeff[{k}][{l}][{i}]"), c.len(), s.m)?;
                    for (j, v) in c.iter().enumerate() {
                        flat[s.index(k, l, i, j)] = *v;
                    }
                }
            }
        }
        BellFunctional::new(s, flat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterJson {
    pub value: f64,
    pub level: String,
    pub size: usize,
    pub iterations: usize,
    pub residual: f64,
    pub psd_floor: f64,
    pub gap: f64,
}

impl OuterJson {
    pub fn new(o: &OuterBound) -> Self {
        OuterJson {
            value: o.value,
            level: o.level.to_string(),
            size: o.size,
            iterations: o.iterations,
            residual: o.residual,
            psd_floor: o.psd_floor,
            gap: o.gap,
        }
    }
}

fn pvm_json(p: &PvmFamily) -> Vec<Vec<MatrixJson>> {
    p.settings().iter().map(|s| s.iter().map(matrix_to_json).collect()).collect()
}

pub fn pvm_from_json(settings: &[Vec<MatrixJson>], path: &str) -> Result<PvmFamily> {
    let mats = settings
        .iter()
        .enumerate()
        .map(|(k, s)| s.iter().enumerate().map(|(i, m)| matrix_from_json(m, &format!("{path}[{k}][{i}]"))).collect())
        .collect::<Result<Vec<Vec<CMatrix>>>>()?;
    PvmFamily::new(mats).map_err(|e| at(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerJson {
    pub value: f64,
    pub dim: usize,
    pub restart: usize,
    pub iterations: usize,
    pub alice: Vec<Vec<MatrixJson>>,
    pub bob: Vec<Vec<MatrixJson>>,
    pub state: Vec<[f64; 2]>,
    pub correlation: Vec<Vec<Vec<Vec<f64>>>>,
}

impl InnerJson {
    pub fn new(r: &InnerBound) -> Self {
        InnerJson {
            value: r.value,
            dim: r.alice.dim(),
            restart: r.restart,
            iterations: r.iterations,
            alice: pvm_json(&r.alice),
            bob: pvm_json(&r.bob),
            state: r.state.iter().map(|z| [z.re, z.im]).collect(),
            correlation: tensor_to_nested(r.correlation.scenario(), r.correlation.values()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub letter: String,
    pub mask: Vec<bool>,
    pub shift: MatrixJson,
    pub quotient: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnsJson {
    pub group: GroupSpec,
    pub domain: Vec<String>,
    pub gram: MatrixJson,
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub q: MatrixJson,
    pub coords: MatrixJson,
    pub generators: Vec<GeneratorJson>,
}

impl GnsJson {
    pub fn new(g: &GnsData) -> Self {
        GnsJson {
            group: g.set.spec(),
            domain: words_to_strings(g.set.elements()),
            gram: matrix_to_json(g.gram.matrix()),
            rank: g.rank,
            eigenvalues: g.eigenvalues.clone(),
            q: matrix_to_json(&g.q),
            coords: matrix_to_json(&g.coords),
            generators: g
                .generators
                .iter()
                .map(|p| GeneratorJson {
                    letter: p.letter.to_string(),
                    mask: p.mask.clone(),
                    shift: matrix_to_json(&p.shift),
                    quotient: matrix_to_json(&p.quotient),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepJson {
    pub group: GroupSpec,
    pub dim: usize,
    pub generators: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub right_generators: Vec<MatrixJson>,
}

impl RepJson {
    pub fn new(pi: &FiniteRep) -> Self {
        RepJson {
            group: pi.spec(),
            dim: pi.dim(),
            generators: pi.generators().iter().map(matrix_to_json).collect(),
            right_generators: pi.right_generators().iter().map(matrix_to_json).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyJson {
    pub mode: String,
    pub worst: f64,
    pub samples: usize,
    pub witness_sample: usize,
    pub witness: RepJson,
}

impl FalsifyJson {
    pub fn new(r: &FalsifyReport) -> Self {
        FalsifyJson {
            mode: match r.mode {
                FalsifyMode::Operator => "operator".into(),
                FalsifyMode::Trace => "trace".into(),
            },
            worst: r.worst,
            samples: r.samples,
            witness_sample: r.witness_sample,
            witness: RepJson::new(&r.witness),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::certify_sos;
    use crate::denselin::real;

    fn spec() -> GroupSpec {
        GroupSpec::free(2)
    }

    fn w(t: &str) -> Word {
        Word::parse(spec(), t).unwrap()
    }

    #[test]
    fn element_round_trip_is_exact() {
        let f = GroupAlgebraElement::from_terms(
            spec(),
            [(w("g1"), c64(0.1, -1.0 / 3.0)), (w("g2^-1 g1"), c64(std::f64::consts::PI, 1e-300)), (w("e"), real(2.0))],
        )
        .unwrap();
        let text = to_string(&ElementJson::from_element(&f)).unwrap();
        let back = parse::<ElementJson>(&text).unwrap().to_element().unwrap();
        assert_eq!(back, f);
        let words: Vec<String> = parse::<ElementJson>(&text).unwrap().terms.into_iter().map(|t| t.word).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
    }

    #[test]
    fn errors_name_the_path() {
        let text = r#"{"group": {"kind": "free", "rank": 2}, "terms": [{"word": "g1", "re": 1, "im": 0}, {"word": "h3", "re": 1, "im": 0}]}"#;
        let err = parse::<ElementJson>(text).unwrap().to_element().unwrap_err().to_string();
        assert!(err.contains("terms[1].word"), "{err}");
        let err = parse::<ElementJson>(r#"{"group": {"kind": "free", "rank": 2}, "terms": [{"word": 3}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("terms[0].word"), "{err}");
    }

    #[test]
    fn certificate_round_trip() {
        let set = GroundedSet::new(spec(), [w("e"), w("g1")]).unwrap();
        let f = GroupAlgebraElement::from_terms(spec(), [(w("e"), real(1.0)), (w("g1"), real(-0.5)), (w("g1^-1"), real(-0.5))])
            .unwrap();
        let cert = certify_sos(&f, &set, 0.0, 1e-9).unwrap().certified().unwrap();
        let json = CertificateJson::from_sos(&cert);
        let back: CertificateJson = parse(&to_string(&json).unwrap()).unwrap();
        assert_eq!(back, json);
        assert_eq!(back.to_sos().unwrap(), cert);
    }

    #[test]
    fn chsh_scenario_round_trip() {
        let f = BellFunctional::chsh();
        let json = ScenarioJson::from_functional(&f);
        assert_eq!(json.coeff[1][1][0][0], -1.0);
        let back: ScenarioJson = parse(&to_string(&json).unwrap()).unwrap();
        assert_eq!(back.to_functional().unwrap(), f);
        let bad = ScenarioJson { d: 2, m: 2, coeff: vec![vec![vec![vec![0.0; 2]; 2]; 2], vec![vec![vec![0.0; 2]; 1]; 2]] };
        assert!(bad.to_functional().unwrap_err().to_string().contains("coeff[1][0]"));
    }
}
