//! The JSON interchange document for graphs, transforms, queries and factor graphs.

use std::collections::BTreeMap;

use nfg_core::algebra::{Alphabet, Axis, ProductDomain};
use nfg_core::factor::Factor;
use nfg_core::indicators::{
    make_cumulus_pair, make_fourier_pair, make_indicator, make_kernel, IndicatorKind, KernelKind, TransformerPair,
};
use nfg_core::inference::{Algorithm, Query};
use nfg_core::models::{FactorGraphDesc, FgFunction};
use nfg_core::nfg::{EdgeKind, EdgeSpec, Endpoint, NfgDescription, NfgGraph};
use nfg_core::transform::HolographicSpec;
use nfg_core::{NfgError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetKind {
    Plain,
    Ordered,
    Group,
}

/// A named alphabet. Plain and single-chain ordered alphabets give `size`;
/// groups and ordered products give `moduli`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetDoc {
    pub name: String,
    pub kind: AlphabetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moduli: Option<Vec<usize>>,
}

impl AlphabetDoc {
    pub fn to_alphabet(&self) -> Result<Alphabet> {
        let bad = |why: &str| NfgError::Parse(format!("alphabet `{}`: {why}", self.name));
        let moduli = match (&self.size, &self.moduli) {
            (Some(n), None) => vec![*n],
            (None, Some(m)) if !m.is_empty() => m.clone(),
            _ => return Err(bad("give exactly one of size or moduli")),
        };
        if moduli.contains(&0) {
            return Err(bad("sizes must be positive"));
        }
        Ok(match self.kind {
            AlphabetKind::Plain if moduli.len() == 1 => Alphabet::try_plain(moduli[0])?,
            AlphabetKind::Plain => return Err(bad("plain alphabets take a size")),
            AlphabetKind::Ordered => Alphabet::ordered_product(&moduli),
            AlphabetKind::Group => Alphabet::group(&moduli),
        })
    }

    /// Canonical document entry for `a`.
    pub fn from_alphabet(a: &Alphabet) -> Self {
        let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        match a {
            Alphabet::Plain(n) => Self {
                name: format!("p{n}"),
                kind: AlphabetKind::Plain,
                size: Some(*n),
                moduli: None,
            },
            Alphabet::Ordered(o) if o.radices().len() == 1 => Self {
                name: format!("o{}", o.size()),
                kind: AlphabetKind::Ordered,
                size: Some(o.size()),
                moduli: None,
            },
            Alphabet::Ordered(o) => Self {
                name: format!("o{}", join(o.radices())),
                kind: AlphabetKind::Ordered,
                size: None,
                moduli: Some(o.radices().to_vec()),
            },
            Alphabet::Group(g) => Self {
                name: format!("z{}", join(g.moduli())),
                kind: AlphabetKind::Group,
                size: None,
                moduli: Some(g.moduli().to_vec()),
            },
        }
    }
}

/// A table entry: a real number or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueDoc {
    Real(f64),
    Complex([f64; 2]),
}

impl ValueDoc {
    pub fn to_complex(self) -> Complex64 {
        match self {
            ValueDoc::Real(r) => Complex64::new(r, 0.0),
            ValueDoc::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Table entries, written as reals when every imaginary part is zero.
pub fn values_doc(values: &[Complex64]) -> Vec<ValueDoc> {
    let real = values.iter().all(|v| v.im == 0.0);
    values
        .iter()
        .map(|v| {
            if real {
                ValueDoc::Real(v.re)
            } else {
                ValueDoc::Complex([v.re, v.im])
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDoc {
    pub label: String,
    pub alphabet: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorDoc {
    /// `eq`, `sum`, `parity`, `max`, `one` or `eval`.
    pub kind: String,
    pub degree: usize,
    pub alphabet: String,
    /// The evaluated value for `eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    /// `cumulus`, `difference`, `fourier` or `fourier_inv`.
    pub kind: String,
    pub alphabet: String,
}

/// A named factor: a dense table over `axes`, or an indicator or kernel
/// with axes `arg1..argn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<ValueDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<IndicatorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub factor: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKindDoc {
    Internal,
    Half,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointDoc {
    pub vertex: String,
    pub axis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub kind: EdgeKindDoc,
    pub endpoints: Vec<EndpointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<String>,
    /// External variable name of a half edge; defaults to the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<String>,
}

/// A transformer on a half edge: a named kernel over the edge alphabet, or
/// a bivariate factor `g(inner, outer)` from the document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TransformerDoc {
    Kernel { kernel: String },
    Factor { factor: String },
}

/// An inverse pair on an internal edge: `kernel` is `cumulus`, `fourier` or
/// `identity`; otherwise `forward` and `inverse` name bivariate factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<String>,
    /// The vertex the forward half faces.
    pub forward_vertex: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphabets: Vec<AlphabetDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<FactorDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, TransformerDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub internal: BTreeMap<String, PairDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDoc {
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub marginalize: Vec<String>,
    #[serde(default)]
    pub evidence: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub shortcut: bool,
}

impl QueryDoc {
    pub fn to_query(&self) -> Result<Query> {
        Ok(Query {
            targets: self.targets.iter().cloned().collect(),
            marginalize: self.marginalize.iter().cloned().collect(),
            evidence: self.evidence.clone(),
            algorithm: match &self.algorithm {
                Some(a) => Algorithm::from_name(a)?,
                None => Algorithm::default(),
            },
            normalize: self.normalize,
            shortcut: self.shortcut,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfgDocument {
    #[serde(default)]
    pub alphabets: Vec<AlphabetDoc>,
    #[serde(default)]
    pub factors: Vec<FactorDoc>,
    #[serde(default)]
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QueryDoc>,
}

struct Tables {
    alphabets: BTreeMap<String, Alphabet>,
    factors: BTreeMap<String, FactorDoc>,
}

impl Tables {
    fn new<'a>(
        alphabets: impl IntoIterator<Item = &'a AlphabetDoc>,
        factors: impl IntoIterator<Item = &'a FactorDoc>,
    ) -> Result<Self> {
        let mut out = Tables {
            alphabets: BTreeMap::new(),
            factors: BTreeMap::new(),
        };
        for a in alphabets {
            if out.alphabets.insert(a.name.clone(), a.to_alphabet()?).is_some() {
                return Err(NfgError::DuplicateId(a.name.clone()));
            }
        }
        for f in factors {
            if out.factors.insert(f.name.clone(), f.clone()).is_some() {
                return Err(NfgError::DuplicateId(f.name.clone()));
            }
        }
        Ok(out)
    }

    fn alphabet(&self, name: &str) -> Result<&Alphabet> {
        self.alphabets
            .get(name)
            .ok_or_else(|| NfgError::Parse(format!("unknown alphabet `{name}`")))
    }

    fn factor(&self, name: &str) -> Result<Factor> {
        let doc = self
            .factors
            .get(name)
            .ok_or_else(|| NfgError::Parse(format!("unknown factor `{name}`")))?;
        let bad = |why: &str| NfgError::Parse(format!("factor `{name}`: {why}"));
        match (&doc.values, &doc.indicator, &doc.kernel) {
            (Some(values), None, None) => {
                let axes = doc
                    .axes
                    .iter()
                    .map(|a| Ok(Axis::new(a.label.clone(), self.alphabet(&a.alphabet)?.clone())))
                    .collect::<Result<Vec<_>>>()?;
                let domain = ProductDomain::new(axes)?;
                Factor::new(domain, values.iter().map(|v| v.to_complex()).collect())
            }
            (None, Some(ind), None) if doc.axes.is_empty() => {
                let kind = IndicatorKind::from_name(&ind.kind, ind.value)?;
                make_indicator(kind, self.alphabet(&ind.alphabet)?, ind.degree)
            }
            (None, None, Some(k)) if doc.axes.is_empty() => {
                make_kernel(KernelKind::from_name(&k.kind)?, self.alphabet(&k.alphabet)?)
            }
            (None, Some(_), None) | (None, None, Some(_)) => Err(bad("indicator and kernel factors take no axes")),
            _ => Err(bad("give exactly one of values, indicator or kernel")),
        }
    }

    /// A bivariate factor with its axes renamed `arg1, arg2` in order.
    fn bivariate(&self, name: &str) -> Result<Factor> {
        let f = self.factor(name)?;
        let labels = f.labels();
        if labels.len() != 2 {
            return Err(NfgError::Parse(format!("transformer `{name}` must be bivariate")));
        }
        f.relabel_with(|l| if l == labels[0] { "arg1".into() } else { "arg2".into() })
    }
}

impl NfgDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NfgError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn to_graph(&self) -> Result<NfgGraph> {
        let tables = Tables::new(&self.alphabets, &self.factors)?;
        let mut desc = NfgDescription::new();
        for v in &self.vertices {
            desc = desc.vertex(v.id.clone(), tables.factor(&v.factor)?);
        }
        for e in &self.edges {
            let endpoints: Vec<Endpoint> = e.endpoints.iter().map(|p| Endpoint::new(&p.vertex, &p.axis)).collect();
            let want = match e.kind {
                EdgeKindDoc::Internal => 2,
                EdgeKindDoc::Half => 1,
            };
            if endpoints.len() != want {
                return Err(NfgError::InvalidEdge {
                    edge: e.id.clone(),
                    reason: format!("{} endpoints for a {:?} edge", endpoints.len(), e.kind).to_lowercase(),
                });
            }
            let external = match e.kind {
                EdgeKindDoc::Internal if e.external.is_some() => {
                    return Err(NfgError::InvalidEdge {
                        edge: e.id.clone(),
                        reason: "an internal edge has no external name".into(),
                    })
                }
                EdgeKindDoc::Internal => None,
                EdgeKindDoc::Half => Some(e.external.clone().unwrap_or_else(|| e.id.clone())),
            };
            let alphabet = e.alphabet.as_deref().map(|a| tables.alphabet(a).cloned()).transpose()?;
            desc = desc.edge(EdgeSpec {
                id: e.id.clone(),
                endpoints,
                external,
                alphabet,
            });
        }
        desc.validate()
    }

    /// Canonical document of `g`: one dense factor per vertex, named after it,
    /// vertices and edges in id order.
    pub fn from_graph(g: &NfgGraph) -> Self {
        let mut alphabets: BTreeMap<String, AlphabetDoc> = BTreeMap::new();
        let mut name_of = |a: &Alphabet| {
            let doc = AlphabetDoc::from_alphabet(a);
            let name = doc.name.clone();
            alphabets.entry(name.clone()).or_insert(doc);
            name
        };
        let mut factors = Vec::new();
        let mut vertices = Vec::new();
        for (v, f) in g.vertices() {
            let axes = f
                .domain()
                .axes()
                .iter()
                .map(|a| AxisDoc {
                    label: a.label.clone(),
                    alphabet: name_of(&a.alphabet),
                })
                .collect();
            factors.push(FactorDoc {
                name: v.to_owned(),
                axes,
                values: Some(values_doc(f.values())),
                indicator: None,
                kernel: None,
            });
            vertices.push(VertexDoc {
                id: v.to_owned(),
                factor: v.to_owned(),
            });
        }
        let edges = g
            .edges()
            .map(|e| {
                let (kind, external) = match &e.kind {
                    EdgeKind::Internal(_) => (EdgeKindDoc::Internal, None),
                    EdgeKind::Half { external, .. } => (EdgeKindDoc::Half, Some(external.clone())),
                };
                EdgeDoc {
                    id: e.id.clone(),
                    kind,
                    endpoints: e
                        .endpoints()
                        .into_iter()
                        .map(|p| EndpointDoc {
                            vertex: p.vertex.clone(),
                            axis: p.axis.clone(),
                        })
                        .collect(),
                    alphabet: Some(name_of(&e.alphabet)),
                    external,
                }
            })
            .collect();
        NfgDocument {
            alphabets: alphabets.into_values().collect(),
            factors,
            vertices,
            edges,
            transform: None,
            query: None,
        }
    }

    /// Resolves `spec` (or the embedded transform section) against `g`.
    pub fn holographic_spec(&self, g: &NfgGraph, spec: Option<&TransformDoc>) -> Result<HolographicSpec> {
        let spec = spec
            .or(self.transform.as_ref())
            .ok_or_else(|| NfgError::Parse("no transform section".into()))?;
        let tables = Tables::new(
            self.alphabets.iter().chain(&spec.alphabets),
            self.factors.iter().chain(&spec.factors),
        )?;
        let mut out = HolographicSpec::default();
        for (name, t) in &spec.external {
            let alphabet = &g.half_edge_named(name)?.alphabet;
            let f = match t {
                TransformerDoc::Kernel { kernel } if kernel == "identity" => {
                    make_indicator(IndicatorKind::Equality, alphabet, 2)?
                }
                TransformerDoc::Kernel { kernel } => make_kernel(KernelKind::from_name(kernel)?, alphabet)?,
                TransformerDoc::Factor { factor } => tables.bivariate(factor)?,
            };
            out.external.insert(name.clone(), f);
        }
        for (edge, p) in &spec.internal {
            let alphabet = &g.edge(edge)?.alphabet;
            let pair = match (&p.kernel, &p.forward, &p.inverse) {
                (Some(k), None, None) => match k.as_str() {
                    "cumulus" => make_cumulus_pair(alphabet)?,
                    "fourier" => make_fourier_pair(alphabet)?,
                    "identity" => TransformerPair::identity(alphabet)?,
                    other => return Err(NfgError::Parse(format!("unknown pair kernel `{other}`"))),
                },
                (None, Some(f), Some(i)) => TransformerPair::new(tables.bivariate(f)?, tables.bivariate(i)?, 1e-9)?,
                _ => {
                    return Err(NfgError::Parse(format!(
                        "pair on `{edge}`: give a kernel or both forward and inverse"
                    )))
                }
            };
            out.internal.insert(edge.clone(), (pair, p.forward_vertex.clone()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub alphabet: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub name: String,
    pub neighbors: Vec<String>,
    pub values: Vec<ValueDoc>,
}

/// A factor graph, convolutional factor graph or CDN: variables and local
/// functions whose axes follow `neighbors`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorGraphDoc {
    #[serde(default)]
    pub alphabets: Vec<AlphabetDoc>,
    pub variables: Vec<VariableDoc>,
    pub functions: Vec<FunctionDoc>,
}

impl FactorGraphDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NfgError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn to_desc(&self) -> Result<FactorGraphDesc> {
        let tables = Tables::new(&self.alphabets, [])?;
        let vars = self
            .variables
            .iter()
            .map(|v| Ok((v.name.clone(), tables.alphabet(&v.alphabet)?.clone())))
            .collect::<Result<Vec<_>>>()?;
        let alpha: BTreeMap<&str, &Alphabet> = vars.iter().map(|(n, a)| (n.as_str(), a)).collect();
        let mut funcs = Vec::new();
        for f in &self.functions {
            let axes = f
                .neighbors
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let a = alpha.get(v.as_str()).ok_or_else(|| NfgError::UnknownLabel(v.clone()))?;
                    Ok(Axis::new(format!("arg{}", i + 1), (*a).clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let factor = Factor::new(
                ProductDomain::new(axes)?,
                f.values.iter().map(|v| v.to_complex()).collect(),
            )?;
            funcs.push(FgFunction::new(f.name.clone(), factor, &f.neighbors));
        }
        FactorGraphDesc::new(vars, funcs)
    }

    pub fn from_desc(desc: &FactorGraphDesc) -> Self {
        let mut alphabets: BTreeMap<String, AlphabetDoc> = BTreeMap::new();
        let variables = desc
            .variables()
            .iter()
            .map(|(v, a)| {
                let doc = AlphabetDoc::from_alphabet(a);
                let name = doc.name.clone();
                alphabets.entry(name.clone()).or_insert(doc);
                VariableDoc {
                    name: v.clone(),
                    alphabet: name,
                }
            })
            .collect();
        let functions = desc
            .functions()
            .iter()
            .map(|f| FunctionDoc {
                name: f.name.clone(),
                neighbors: f.neighbors.clone(),
                values: values_doc(f.factor.values()),
            })
            .collect();
        FactorGraphDoc {
            alphabets: alphabets.into_values().collect(),
            variables,
            functions,
        }
    }
}
