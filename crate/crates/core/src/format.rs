//! JSON file formats for theories, fragments, models and certificates.
//!
//! Matrices are lists of rows of rational strings (`"p/q"` or `"p"`);
//! decimal literals are rejected. Outcome labels are strings, `"*"` for the
//! trivial outcome, arrays for tuples and `{"block": [...]}` for
//! coarse-grained blocks. A context tag is a string or a list of monomials,
//! each a list of atom tags.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backend::{GptFragment, Theory, TheoryKind};
use crate::calculus::{Context, Event, Outcome, OutcomeSet, SystemRef};
use crate::error::{OptError, Result};
use crate::matrix::Matrix;
use crate::ncsearch::NcCertificate;
use crate::ontmodel::{BaseRule, OntModel};
use crate::quotient::QuotientMap;
use crate::rational::{format_rational, parse_rational, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
enum OutcomeDecl {
    Atom(String),
    Tuple(Vec<OutcomeDecl>),
    Block { block: Vec<OutcomeDecl> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
enum ContextDecl {
    Atom(String),
    Sum(Vec<Vec<String>>),
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct SystemDecl {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct EventDecl {
    id: String,
    #[serde(rename = "in")]
    input: String,
    #[serde(rename = "out")]
    output: String,
    matrix: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<ContextDecl>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct TestDecl {
    id: String,
    #[serde(rename = "in")]
    input: String,
    #[serde(rename = "out")]
    output: String,
    outcomes: Vec<OutcomeDecl>,
    event_ids: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
enum VectorDecl {
    Plain(Vec<String>),
    Labeled { label: String, vector: Vec<String> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct ClassDecl {
    representative: String,
    members: Vec<MemberDecl>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct MemberDecl {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<ContextDecl>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct TheoryFile {
    version: u32,
    kind: String,
    systems: Vec<SystemDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<EventDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tests: Vec<TestDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<VectorDecl>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    effects: Option<Vec<VectorDecl>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit_effect: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transformations: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    locally_tomographic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convex_closed: Option<bool>,
    /// Written by `quotient`; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<ClassDecl>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    system_map: BTreeMap<String, usize>,
    #[serde(default)]
    test_map: BTreeMap<String, Vec<Vec<Vec<String>>>>,
    /// How tests outside `test_map` are mapped: `undefined` (default),
    /// `forget-tags` or `permute`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    permutations: Option<BTreeMap<String, Vec<usize>>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    ontic_size: usize,
    residual: String,
    system_map: BTreeMap<String, usize>,
    states: BTreeMap<String, Vec<Vec<String>>>,
    effects: BTreeMap<String, Vec<Vec<String>>>,
}

/// A parsed theory file.
#[derive(Clone, Debug)]
pub enum Document {
    Theory(Theory),
    Fragment(GptFragment),
}

/// `(line, column)` of the first occurrence of `needle`, 1-based.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    match text.find(needle) {
        Some(at) => {
            let before = &text[..at];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            (line, column)
        }
        None => (0, 0),
    }
}

fn syntax<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| OptError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Rational parse errors are reported at the offending literal.
fn positioned(text: &str, e: OptError) -> OptError {
    match e {
        OptError::InvalidRational(lit) => {
            let (line, column) = locate(text, &format!("\"{lit}\""));
            OptError::Parse {
                line,
                column,
                message: format!("invalid rational literal `{lit}`"),
            }
        }
        other => other,
    }
}

fn vector(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse_rational(s)).collect()
}

fn matrix(rows: &[Vec<String>]) -> Result<Matrix> {
    Matrix::from_rows(rows.iter().map(|r| vector(r)).collect::<Result<Vec<_>>>()?)
}

fn write_matrix(m: &Matrix) -> Vec<Vec<String>> {
    m.to_string_rows()
}

fn write_vector(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn outcome(d: &OutcomeDecl) -> Outcome {
    match d {
        OutcomeDecl::Atom(s) if s == "*" => Outcome::Star,
        OutcomeDecl::Atom(s) => Outcome::atom(s.clone()),
        OutcomeDecl::Tuple(items) => Outcome::Tuple(items.iter().map(outcome).collect()),
        OutcomeDecl::Block { block } => Outcome::Block(block.iter().map(outcome).collect()),
    }
}

fn write_outcome(o: &Outcome) -> OutcomeDecl {
    match o {
        Outcome::Star => OutcomeDecl::Atom("*".into()),
        Outcome::Atom(s) => OutcomeDecl::Atom(s.clone()),
        Outcome::Tuple(items) => OutcomeDecl::Tuple(items.iter().map(write_outcome).collect()),
        Outcome::Block(items) => OutcomeDecl::Block {
            block: items.iter().map(write_outcome).collect(),
        },
    }
}

fn context(d: &ContextDecl) -> Result<Context> {
    match d {
        ContextDecl::Atom(s) => Ok(Context::atom(s.clone())),
        ContextDecl::Sum(terms) => {
            Context::from_terms(terms.clone()).ok_or_else(|| OptError::ShapeMismatch("empty context".into()))
        }
    }
}

fn write_context(c: &Context) -> ContextDecl {
    match c.terms() {
        [m] if m.len() == 1 => ContextDecl::Atom(m[0].clone()),
        terms => ContextDecl::Sum(terms.to_vec()),
    }
}

fn kind_of(name: &str) -> Result<Option<TheoryKind>> {
    match name {
        "classical" => Ok(Some(TheoryKind::Classical)),
        "labeled-classical" => Ok(Some(TheoryKind::LabeledClassical)),
        "gpt-fragment" => Ok(None),
        other => Err(OptError::Parse {
            line: 0,
            column: 0,
            message: format!("unknown theory kind `{other}`"),
        }),
    }
}

fn build_theory(kind: TheoryKind, f: &TheoryFile) -> Result<Theory> {
    let mut th = Theory::new(kind);
    for s in &f.systems {
        let size = s
            .size
            .or(s.dim)
            .ok_or_else(|| OptError::ShapeMismatch(format!("system `{}` has no size", s.label)))?;
        th.add_system(s.label.clone(), size)?;
    }
    for e in &f.events {
        let (input, output) = (th.system(&e.input)?, th.system(&e.output)?);
        let ctx = e.context.as_ref().map(context).transpose()?;
        th.add_event(Event::new(e.id.clone(), input, output, matrix(&e.matrix)?).with_context(ctx))?;
    }
    for t in &f.tests {
        let (input, output) = (th.system(&t.input)?, th.system(&t.output)?);
        let outcomes = OutcomeSet::new(t.outcomes.iter().map(outcome).collect())?;
        let ids: Vec<&str> = t.event_ids.iter().map(String::as_str).collect();
        th.add_test(t.id.clone(), &input, &output, outcomes, &ids)?;
    }
    Ok(th)
}

fn build_fragment(f: &TheoryFile) -> Result<GptFragment> {
    let dim = match f.systems.as_slice() {
        [s] => s.dim.or(s.size).ok_or_else(|| OptError::InvalidFragment("system has no dimension".into()))?,
        _ => return Err(OptError::InvalidFragment("a fragment has exactly one system".into())),
    };
    let split = |list: &Option<Vec<VectorDecl>>, what: &str, prefix: &str| -> Result<(Vec<String>, Vec<Vec<Rational>>)> {
        let list = list
            .as_ref()
            .ok_or_else(|| OptError::InvalidFragment(format!("missing `{what}`")))?;
        let mut labels = Vec::new();
        let mut vecs = Vec::new();
        for (i, v) in list.iter().enumerate() {
            match v {
                VectorDecl::Plain(x) => {
                    labels.push(format!("{prefix}{}", i + 1));
                    vecs.push(vector(x)?);
                }
                VectorDecl::Labeled { label, vector: x } => {
                    labels.push(label.clone());
                    vecs.push(vector(x)?);
                }
            }
        }
        Ok((labels, vecs))
    };
    let (state_labels, states) = split(&f.states, "states", "s")?;
    let (effect_labels, effects) = split(&f.effects, "effects", "e")?;
    let unit = vector(
        f.unit_effect
            .as_ref()
            .ok_or_else(|| OptError::InvalidFragment("missing `unit_effect`".into()))?,
    )?;
    let mut frag = GptFragment::new(dim, states, effects, unit)?.with_labels(state_labels, effect_labels)?;
    if let Some(ts) = &f.transformations {
        frag = frag.with_transformations(ts.iter().map(|t| matrix(t)).collect::<Result<Vec<_>>>()?)?;
    }
    if let Some(lt) = f.locally_tomographic {
        frag = frag.with_local_tomography(lt);
    }
    if let Some(cc) = f.convex_closed {
        frag = frag.with_convex_closure(cc);
    }
    Ok(frag)
}

pub fn parse_document(text: &str) -> Result<Document> {
    let f: TheoryFile = syntax(text)?;
    if f.version != FORMAT_VERSION {
        let (line, column) = locate(text, "\"version\"");
        return Err(OptError::Parse {
            line,
            column,
            message: format!("unsupported version {}", f.version),
        });
    }
    let kind = kind_of(&f.kind).map_err(|e| match e {
        OptError::Parse { message, .. } => {
            let (line, column) = locate(text, "\"kind\"");
            OptError::Parse { line, column, message }
        }
        other => other,
    })?;
    let doc = match kind {
        Some(k) => build_theory(k, &f).map(Document::Theory),
        None => build_fragment(&f).map(Document::Fragment),
    };
    doc.map_err(|e| positioned(text, e))
}

pub fn parse_theory(text: &str) -> Result<Theory> {
    match parse_document(text)? {
        Document::Theory(t) => Ok(t),
        Document::Fragment(_) => Err(OptError::Parse {
            line: 0,
            column: 0,
            message: "expected a theory, found a fragment".into(),
        }),
    }
}

pub fn parse_fragment(text: &str) -> Result<GptFragment> {
    match parse_document(text)? {
        Document::Fragment(f) => Ok(f),
        Document::Theory(_) => Err(OptError::Parse {
            line: 0,
            column: 0,
            message: "expected a fragment, found a theory".into(),
        }),
    }
}

fn theory_file(th: &Theory) -> TheoryFile {
    let label = |s: &SystemRef| s.label();
    TheoryFile {
        version: FORMAT_VERSION,
        kind: th.kind().name().into(),
        systems: th
            .atoms()
            .iter()
            .map(|a| SystemDecl {
                label: a.label.clone(),
                size: Some(a.size),
                dim: None,
            })
            .collect(),
        events: th
            .events()
            .iter()
            .map(|e| EventDecl {
                id: e.id.clone(),
                input: label(&e.input),
                output: label(&e.output),
                matrix: write_matrix(&e.matrix),
                context: e.context.as_ref().map(write_context),
            })
            .collect(),
        tests: th
            .tests()
            .iter()
            .map(|t| TestDecl {
                id: t.id.clone(),
                input: label(t.input()),
                output: label(t.output()),
                outcomes: t.outcomes().labels().iter().map(write_outcome).collect(),
                event_ids: t.events().iter().map(|e| e.id.clone()).collect(),
            })
            .collect(),
        states: None,
        effects: None,
        unit_effect: None,
        transformations: None,
        locally_tomographic: None,
        convex_closed: None,
        classes: None,
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn theory_to_json(th: &Theory) -> String {
    pretty(&theory_file(th))
}

/// The quotient theory plus its class table.
pub fn quotient_to_json(q: &QuotientMap) -> String {
    let mut f = theory_file(q.target());
    let src = q.source();
    f.classes = Some(
        q.classes()
            .iter()
            .map(|c| ClassDecl {
                representative: c.representative.clone(),
                members: c
                    .members
                    .iter()
                    .map(|id| MemberDecl {
                        id: id.clone(),
                        context: src.event(id).ok().and_then(|e| e.context.as_ref()).map(write_context),
                    })
                    .collect(),
            })
            .collect(),
    );
    pretty(&f)
}

pub fn fragment_to_json(frag: &GptFragment) -> String {
    let labeled = |labels: &[String], vecs: &[Vec<Rational>]| {
        labels
            .iter()
            .zip(vecs)
            .map(|(l, v)| VectorDecl::Labeled {
                label: l.clone(),
                vector: write_vector(v),
            })
            .collect()
    };
    let f = TheoryFile {
        version: FORMAT_VERSION,
        kind: "gpt-fragment".into(),
        systems: vec![SystemDecl {
            label: "A".into(),
            size: None,
            dim: Some(frag.dim()),
        }],
        events: Vec::new(),
        tests: Vec::new(),
        states: Some(labeled(frag.state_labels(), frag.states())),
        effects: Some(labeled(frag.effect_labels(), frag.effects())),
        unit_effect: Some(write_vector(frag.unit_effect())),
        transformations: (!frag.transformations().is_empty())
            .then(|| frag.transformations().iter().map(write_matrix).collect()),
        locally_tomographic: (!frag.is_locally_tomographic()).then_some(false),
        convex_closed: frag.is_convex_closed().then_some(true),
        classes: None,
    };
    pretty(&f)
}

/// True if the two theories have the same kind, systems, events and tests.
pub fn same_theory(a: &Theory, b: &Theory) -> bool {
    theory_to_json(a) == theory_to_json(b)
}

/// A model file over `theory`. Listed tests get the given images.
pub fn parse_model(text: &str, theory: &Theory) -> Result<OntModel> {
    let f: ModelFile = syntax(text)?;
    let base = match f.base.as_deref() {
        None | Some("undefined") => BaseRule::Undefined,
        Some("forget-tags") => BaseRule::ForgetTags,
        Some("permute") => BaseRule::Permute(f.permutations.clone().unwrap_or_default()),
        Some(other) => {
            let (line, column) = locate(text, &format!("\"{other}\""));
            return Err(OptError::Parse {
                line,
                column,
                message: format!("unknown base rule `{other}`"),
            });
        }
    };
    let build = || -> Result<OntModel> {
        let mut m = OntModel::new(theory, &f.system_map, base)?;
        for (id, mats) in &f.test_map {
            let t = theory.test(id)?;
            let (rows, cols) = (m.map_system(t.output())?.size(), m.map_system(t.input())?.size());
            let mats = mats.iter().map(|x| matrix(x)).collect::<Result<Vec<_>>>()?;
            if let Some(bad) = mats.iter().find(|x| x.shape() != (rows, cols)) {
                return Err(OptError::ShapeMismatch(format!(
                    "image of `{id}` is {:?}, expected {:?}",
                    bad.shape(),
                    (rows, cols)
                )));
            }
            m = m.with_override(t, mats)?;
        }
        Ok(m)
    };
    build().map_err(|e| positioned(text, e))
}

/// The registered tests' images, in model-file form.
pub fn model_to_json(m: &OntModel) -> Result<String> {
    let mut test_map = BTreeMap::new();
    for t in m.source().tests() {
        let img = m.map_test(t)?;
        test_map.insert(t.id.clone(), img.matrices().map(write_matrix).collect());
    }
    Ok(pretty(&ModelFile {
        system_map: m.system_map().into_iter().collect(),
        test_map,
        base: None,
        permutations: None,
    }))
}

/// Certificate tables keyed by state and effect labels: a state maps to
/// a column, an effect to a row.
pub fn certificate_to_json(cert: &NcCertificate, frag: &GptFragment) -> String {
    let states = frag
        .state_labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), write_matrix(&Matrix::column(cert.state_table.row_vec(i)))))
        .collect();
    let effects = frag
        .effect_labels()
        .iter()
        .enumerate()
        .map(|(j, l)| (l.clone(), write_matrix(&Matrix::row(cert.effect_table.row_vec(j)))))
        .collect();
    pretty(&CertificateFile {
        ontic_size: cert.ontic_size,
        residual: format_rational(&cert.residual),
        system_map: [("A".to_string(), cert.ontic_size)].into(),
        states,
        effects,
    })
}

pub fn parse_certificate(text: &str, frag: &GptFragment) -> Result<NcCertificate> {
    let f: CertificateFile = syntax(text)?;
    let build = || -> Result<NcCertificate> {
        let lookup = |map: &BTreeMap<String, Vec<Vec<String>>>, label: &str| -> Result<Vec<Rational>> {
            let m = matrix(
                map.get(label)
                    .ok_or_else(|| OptError::FragmentMismatch(format!("no entry for `{label}`")))?,
            )?;
            Ok(m.entries().to_vec())
        };
        let mu = frag
            .state_labels()
            .iter()
            .map(|l| lookup(&f.states, l))
            .collect::<Result<Vec<_>>>()?;
        let xi = frag
            .effect_labels()
            .iter()
            .map(|l| lookup(&f.effects, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(NcCertificate {
            ontic_size: f.ontic_size,
            state_table: Matrix::from_rows(mu)?,
            effect_table: Matrix::from_rows(xi)?,
            residual: parse_rational(&f.residual)?,
        })
    };
    build().map_err(|e| positioned(text, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::quotient_theory;

    const LABELED: &str = r#"{
  "version": 1,
  "kind": "labeled-classical",
  "systems": [{"label": "A", "size": 2}],
  "events": [
    {"id": "h", "in": "A", "out": "A", "matrix": [["1/2", "0"], ["0", "1/2"]], "context": "x"},
    {"id": "g", "in": "A", "out": "A", "matrix": [["1/2", "0"], ["0", "1/2"]], "context": "y"},
    {"id": "k", "in": "A", "out": "A", "matrix": [["1/2", "0"], ["0", "1/2"]], "context": [["p", "q"], ["r"]]}
  ],
  "tests": [
    {"id": "T", "in": "A", "out": "A", "outcomes": ["1", "2"], "event_ids": ["h", "g"]},
    {"id": "T2", "in": "A", "out": "A", "outcomes": [["a", "b"], {"block": ["c", "d"]}], "event_ids": ["h", "k"]}
  ]
}"#;

    #[test]
    fn theory_round_trip() {
        let th = parse_theory(LABELED).unwrap();
        assert_eq!(th.kind(), TheoryKind::LabeledClassical);
        assert_eq!(th.tests().len(), 2);
        assert_eq!(th.test("T2").unwrap().outcomes().labels()[1].to_string(), "{c,d}");
        let again = parse_theory(&theory_to_json(&th)).unwrap();
        assert!(same_theory(&th, &again));
    }

    #[test]
    fn quotient_output_reparses() {
        let th = parse_theory(LABELED).unwrap();
        let q = quotient_theory(&th).unwrap();
        let text = quotient_to_json(&q);
        assert!(text.contains("\"classes\""));
        let again = parse_theory(&text).unwrap();
        assert!(same_theory(q.target(), &again));
        assert_eq!(again.kind(), TheoryKind::Classical);
    }

    #[test]
    fn decimal_literal_is_located() {
        let text = "{\n  \"version\": 1,\n  \"kind\": \"classical\",\n  \"systems\": [{\"label\": \"A\", \"size\": 1}],\n  \"events\": [{\"id\": \"s\", \"in\": \"I\", \"out\": \"A\", \"matrix\": [[\"0.5\"]]}]\n}";
        match parse_theory(text) {
            Err(OptError::Parse { line, column, .. }) => assert_eq!((line, column), (5, 61)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_theory("{\n  \"version\": 1,\n  \"kind\" \"classical\"\n}").unwrap_err();
        assert!(matches!(err, OptError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn fragment_round_trip() {
        let frag = GptFragment::simplex(3).unwrap();
        let again = parse_fragment(&fragment_to_json(&frag)).unwrap();
        assert_eq!(frag, again);
    }

    #[test]
    fn model_file_overrides_listed_tests() {
        let th = parse_theory(LABELED).unwrap();
        let text = r#"{"system_map": {"A": 2}, "test_map": {"T": [[["1", "0"], ["0", "0"]], [["0", "0"], ["0", "1"]]]}}"#;
        let m = parse_model(text, &th).unwrap();
        let img = m.map_test(th.test("T").unwrap()).unwrap();
        assert_eq!(img.event(0).matrix, Matrix::from_ints(&[&[1, 0], &[0, 0]]));
        assert!(matches!(m.map_test(th.test("T2").unwrap()), Err(OptError::Unmapped(_))));
        let bad = r#"{"system_map": {"A": 2}, "test_map": {"T": [[["1"]], [["0"]]]}}"#;
        assert!(matches!(parse_model(bad, &th), Err(OptError::ShapeMismatch(_))));
    }

    #[test]
    fn certificate_round_trip() {
        let frag = GptFragment::simplex(2).unwrap();
        let cert = NcCertificate {
            ontic_size: 2,
            state_table: Matrix::identity(2),
            effect_table: Matrix::from_rows(frag.effects().to_vec()).unwrap(),
            residual: Rational::from_integer(0.into()),
        };
        let again = parse_certificate(&certificate_to_json(&cert, &frag), &frag).unwrap();
        assert_eq!(cert, again);
    }
}
