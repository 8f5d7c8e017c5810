//! Decorated ideal triangulations: tetrahedral corners, edge classes and
//! cusp cross-section curves, plus JSON ingestion and validation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::holonomy::SignedMonomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CornerKind {
    E0,
    E1,
    E2,
}

impl CornerKind {
    pub const ALL: [CornerKind; 3] = [CornerKind::E0, CornerKind::E1, CornerKind::E2];

    pub fn index(self) -> usize {
        match self {
            CornerKind::E0 => 0,
            CornerKind::E1 => 1,
            CornerKind::E2 => 2,
        }
    }
}

/// One corner of one tetrahedron: `z`, `zeta1(z)` or `zeta2(z)` for kinds E0, E1, E2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerRef {
    pub tet: usize,
    pub kind: CornerKind,
}

impl CornerRef {
    pub fn new(tet: usize, kind: CornerKind) -> Self {
        CornerRef { tet, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeClass {
    pub label: String,
    pub corners: Vec<CornerRef>,
}

/// Corners swept at one vertex of a cusp curve. `inverse` holds corners that
/// enter with exponent -1; it only appears in derived curves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub word: Vec<CornerRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inverse: Vec<CornerRef>,
}

impl VertexRecord {
    pub fn new(word: Vec<CornerRef>) -> Self {
        VertexRecord { word, inverse: Vec::new() }
    }

    fn times(&self, other_word: &[CornerRef], other_inv: &[CornerRef]) -> VertexRecord {
        let mut word = self.word.clone();
        word.extend_from_slice(other_word);
        let mut inverse = self.inverse.clone();
        inverse.extend_from_slice(other_inv);
        cancel(word, inverse)
    }

    fn inverted(&self) -> VertexRecord {
        VertexRecord { word: self.inverse.clone(), inverse: self.word.clone() }
    }
}

fn cancel(word: Vec<CornerRef>, inverse: Vec<CornerRef>) -> VertexRecord {
    let mut remaining: HashMap<CornerRef, usize> = HashMap::new();
    for c in &inverse {
        *remaining.entry(*c).or_default() += 1;
    }
    let mut kept = Vec::new();
    for c in word {
        match remaining.get_mut(&c) {
            Some(k) if *k > 0 => *k -= 1,
            _ => kept.push(c),
        }
    }
    let mut inv_kept = Vec::new();
    for c in inverse {
        if let Some(k) = remaining.get_mut(&c) {
            if *k > 0 {
                *k -= 1;
                inv_kept.push(c);
            }
        }
    }
    VertexRecord { word: kept, inverse: inv_kept }
}

/// A closed simplicial curve in a cusp cross-section.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspCurve {
    #[serde(skip)]
    pub name: String,
    /// Key of the base vertex and reference edge; curves of one cusp share it.
    #[serde(skip)]
    pub reference: String,
    pub w0_word: Vec<CornerRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub w0_inverse: Vec<CornerRef>,
    pub vertices: Vec<VertexRecord>,
}

impl CuspCurve {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn w0(&self) -> VertexRecord {
        VertexRecord { word: self.w0_word.clone(), inverse: self.w0_inverse.clone() }
    }

    fn corners(&self) -> impl Iterator<Item = &CornerRef> {
        self.w0_word
            .iter()
            .chain(self.w0_inverse.iter())
            .chain(self.vertices.iter().flat_map(|v| v.word.iter().chain(v.inverse.iter())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspData {
    pub name: String,
    pub meridian: CuspCurve,
    pub longitude: CuspCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filling: Option<(i64, i64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealTriangulation {
    pub name: String,
    pub n_tet: usize,
    pub edges: Vec<EdgeClass>,
    pub cusps: Vec<CuspData>,
}

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("{context}: tetrahedron index {tet} out of range (n_tet = {n_tet})")]
    TetIndex { context: String, tet: usize, n_tet: usize },
    #[error("edge {index} ({label}) has no corners")]
    EmptyEdge { index: usize, label: String },
    #[error("corner count: tetrahedron {tet} contributes {count} corners of kind {kind:?} (expected 2)")]
    CornerCount { tet: usize, kind: CornerKind, count: usize },
    #[error("edge count {edges} differs from n_tet {n_tet}")]
    EdgeCount { edges: usize, n_tet: usize },
    #[error("product of all edge equations is {0}, not +1")]
    EdgeProduct(String),
    #[error("cusp {cusp}: {curve} has no vertices")]
    EmptyCurve { cusp: String, curve: String },
    #[error("cusp {cusp}: filling ({p}, {q}) is not a primitive slope")]
    Filling { cusp: String, p: i64, q: i64 },
    #[error("curves {a} and {b} do not share a base vertex and reference edge")]
    Reference { a: String, b: String },
    #[error("no cusp named {0}")]
    UnknownCusp(String),
    #[error("exponent matrix line {line}: {msg}")]
    Matrix { line: usize, msg: String },
}

impl IdealTriangulation {
    pub fn from_json(text: &str) -> Result<Self, ManifoldError> {
        parse_triangulation(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("triangulation serializes")
    }

    pub fn cusp_index(&self, name: &str) -> Result<usize, ManifoldError> {
        self.cusps
            .iter()
            .position(|c| c.name == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&i| i < self.cusps.len()))
            .ok_or_else(|| ManifoldError::UnknownCusp(name.to_string()))
    }

    fn label_curves(&mut self) {
        for c in &mut self.cusps {
            c.meridian.name = format!("{}.meridian", c.name);
            c.meridian.reference = c.name.clone();
            c.longitude.name = format!("{}.longitude", c.name);
            c.longitude.reference = c.name.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ManifoldError> {
        let n = self.n_tet;
        let check = |context: String, c: &CornerRef| {
            if c.tet >= n {
                Err(ManifoldError::TetIndex { context, tet: c.tet, n_tet: n })
            } else {
                Ok(())
            }
        };
        let mut counts = vec![[0usize; 3]; n];
        for (i, e) in self.edges.iter().enumerate() {
            if e.corners.is_empty() {
                return Err(ManifoldError::EmptyEdge { index: i, label: e.label.clone() });
            }
            for c in &e.corners {
                check(format!("edge {i} ({})", e.label), c)?;
                counts[c.tet][c.kind.index()] += 1;
            }
        }
        for (tet, row) in counts.iter().enumerate() {
            for kind in CornerKind::ALL {
                let count = row[kind.index()];
                if count != 2 {
                    return Err(ManifoldError::CornerCount { tet, kind, count });
                }
            }
        }
        if self.edges.len() != n {
            return Err(ManifoldError::EdgeCount { edges: self.edges.len(), n_tet: n });
        }
        let mut prod = SignedMonomial::one(n);
        for i in 0..self.edges.len() {
            prod = &prod * &edge_equation(self, i);
        }
        if !prod.is_one() {
            return Err(ManifoldError::EdgeProduct(prod.to_string()));
        }
        for cusp in &self.cusps {
            for curve in [&cusp.meridian, &cusp.longitude] {
                if curve.vertices.is_empty() {
                    return Err(ManifoldError::EmptyCurve {
                        cusp: cusp.name.clone(),
                        curve: curve.name.clone(),
                    });
                }
                for c in curve.corners() {
                    check(curve.name.clone(), c)?;
                }
            }
            if let Some((p, q)) = cusp.filling {
                if gcd(p, q) != 1 {
                    return Err(ManifoldError::Filling { cusp: cusp.name.clone(), p, q });
                }
            }
        }
        Ok(())
    }
}

impl FromStr for IdealTriangulation {
    type Err = ManifoldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_triangulation(s)
    }
}

impl fmt::Display for CornerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.kind, self.tet)
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn parse_triangulation(document: &str) -> Result<IdealTriangulation, ManifoldError> {
    let mut tri: IdealTriangulation = serde_json::from_str(document)?;
    tri.label_curves();
    tri.validate()?;
    Ok(tri)
}

/// The edge equation of edge `edge` as "monomial = 1".
pub fn edge_equation(tri: &IdealTriangulation, edge: usize) -> SignedMonomial {
    SignedMonomial::from_corners(tri.n_tet, &tri.edges[edge].corners)
}

/// The curve that runs along `a` and then along `b`.
pub fn concat_curves(a: &CuspCurve, b: &CuspCurve) -> Result<CuspCurve, ManifoldError> {
    if a.reference != b.reference {
        return Err(ManifoldError::Reference { a: a.name.clone(), b: b.name.clone() });
    }
    let (w0a, w0b) = (a.w0(), b.w0());
    let mut vertices = Vec::with_capacity(a.len() + b.len());
    vertices.push(b.vertices[0].times(&w0a.word, &w0a.inverse).times(&w0b.inverse, &w0b.word));
    vertices.extend(a.vertices[1..].iter().cloned());
    vertices.push(a.vertices[0].times(&w0b.word, &w0b.inverse).times(&w0a.inverse, &w0a.word));
    vertices.extend(b.vertices[1..].iter().cloned());
    Ok(CuspCurve {
        name: format!("({}*{})", a.name, b.name),
        reference: a.reference.clone(),
        w0_word: a.w0_word.clone(),
        w0_inverse: a.w0_inverse.clone(),
        vertices,
    })
}

/// The same curve traversed backwards from the same base vertex.
pub fn reverse_curve(g: &CuspCurve) -> CuspCurve {
    let m = g.len();
    let mut vertices = Vec::with_capacity(m);
    vertices.push(g.vertices[0].inverted());
    for j in (1..m).rev() {
        vertices.push(g.vertices[j].inverted());
    }
    let w0 = g.w0().times(&g.vertices[0].inverse, &g.vertices[0].word);
    CuspCurve {
        name: format!("{}^-1", g.name),
        reference: g.reference.clone(),
        w0_word: w0.word,
        w0_inverse: w0.inverse,
        vertices,
    }
}

/// `g` traversed `k` times (backwards for negative `k`); `k = 0` is not a curve.
pub fn curve_power(g: &CuspCurve, k: i32) -> Option<CuspCurve> {
    if k == 0 {
        return None;
    }
    let base = if k < 0 { reverse_curve(g) } else { g.clone() };
    let mut out = base.clone();
    for _ in 1..k.unsigned_abs() {
        out = concat_curves(&out, &base).expect("same reference");
    }
    Some(out)
}

/// Monomial-only gluing data read from an exponent-matrix text file.
///
/// Each non-comment line is `edge|meridian|longitude : a_0 .. a_{n-1} | b_0 .. b_{n-1} | sign`
/// for the monomial `sign * prod z_i^a_i (1-z_i)^b_i`; the first line is `n <n_tet>`.
/// Meridian and longitude lines come in pairs, one pair per cusp.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentMatrix {
    pub n_tet: usize,
    pub edges: Vec<SignedMonomial>,
    pub cusps: Vec<(SignedMonomial, SignedMonomial)>,
}

pub fn parse_exponent_matrix(text: &str) -> Result<ExponentMatrix, ManifoldError> {
    let err = |line: usize, msg: &str| ManifoldError::Matrix { line, msg: msg.to_string() };
    let mut n_tet = None;
    let mut edges = Vec::new();
    let mut merids = Vec::new();
    let mut longs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ln = ln + 1;
        if let Some(rest) = line.strip_prefix('n') {
            if n_tet.is_none() && !rest.starts_with(|c: char| c.is_alphabetic()) {
                n_tet = Some(rest.trim().parse::<usize>().map_err(|_| err(ln, "bad tetrahedron count"))?);
                continue;
            }
        }
        let n = n_tet.ok_or_else(|| err(ln, "missing `n <n_tet>` header"))?;
        let (tag, body) = line.split_once(':').ok_or_else(|| err(ln, "expected `tag : row`"))?;
        let parts: Vec<&str> = body.split('|').collect();
        if parts.len() != 3 {
            return Err(err(ln, "expected three `|`-separated fields"));
        }
        let vec = |s: &str| -> Result<Vec<i32>, ManifoldError> {
            let v: Result<Vec<i32>, _> = s.split_whitespace().map(str::parse).collect();
            let v = v.map_err(|_| err(ln, "bad exponent"))?;
            if v.len() != n {
                return Err(err(ln, "exponent row length differs from n_tet"));
            }
            Ok(v)
        };
        let a = vec(parts[0])?;
        let b = vec(parts[1])?;
        let sign: i8 = match parts[2].trim() {
            "1" | "+1" | "+" => 1,
            "-1" | "-" => -1,
            _ => return Err(err(ln, "sign must be +1 or -1")),
        };
        let m = SignedMonomial::new(sign, a, b);
        match tag.trim() {
            "edge" => edges.push(m),
            "meridian" => merids.push(m),
            "longitude" => longs.push(m),
            _ => return Err(err(ln, "unknown row tag")),
        }
    }
    let n_tet = n_tet.ok_or_else(|| err(0, "empty document"))?;
    if merids.len() != longs.len() {
        return Err(err(0, "meridian and longitude rows must pair up"));
    }
    if edges.len() != n_tet {
        return Err(ManifoldError::EdgeCount { edges: edges.len(), n_tet });
    }
    Ok(ExponentMatrix { n_tet, edges, cusps: merids.into_iter().zip(longs).collect() })
}
