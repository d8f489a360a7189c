//! Graph structure: vertices carrying factors, internal edges and half edges.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;

use crate::algebra::{Alphabet, Axis, ProductDomain};
use crate::error::{NfgError, Result};
use crate::factor::{
    conditional_constant, is_product_of_univariates, marginalize, split_decompose, Factor, Marginalization,
};
use crate::indicators::{make_indicator, IndicatorKind};

/// A vertex axis bound by an edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub vertex: String,
    pub axis: String,
}

impl Endpoint {
    pub fn new(vertex: impl Into<String>, axis: impl Into<String>) -> Self {
        Self {
            vertex: vertex.into(),
            axis: axis.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeKind {
    Internal([Endpoint; 2]),
    Half { end: Endpoint, external: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub alphabet: Alphabet,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn is_half(&self) -> bool {
        matches!(self.kind, EdgeKind::Half { .. })
    }

    pub fn endpoints(&self) -> Vec<&Endpoint> {
        match &self.kind {
            EdgeKind::Internal(ends) => ends.iter().collect(),
            EdgeKind::Half { end, .. } => vec![end],
        }
    }

    /// The contraction label: the edge id for internal edges, the external name for half edges.
    pub fn label(&self) -> &str {
        match &self.kind {
            EdgeKind::Internal(_) => &self.id,
            EdgeKind::Half { external, .. } => external,
        }
    }

    pub fn external(&self) -> Option<&str> {
        match &self.kind {
            EdgeKind::Half { external, .. } => Some(external),
            EdgeKind::Internal(_) => None,
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(&self.kind, EdgeKind::Internal([a, b]) if a.vertex == b.vertex)
    }

    /// The endpoint opposite `vertex` on an internal edge.
    pub fn other(&self, vertex: &str) -> Option<&Endpoint> {
        match &self.kind {
            EdgeKind::Internal([a, b]) if a.vertex == vertex => Some(b),
            EdgeKind::Internal([a, b]) if b.vertex == vertex => Some(a),
            _ => None,
        }
    }

    pub fn end_at(&self, vertex: &str) -> Option<&Endpoint> {
        self.endpoints().into_iter().find(|e| e.vertex == vertex)
    }
}

/// Unchecked edge input: an id, one or two endpoints and an optional external name.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSpec {
    pub id: String,
    pub endpoints: Vec<Endpoint>,
    pub external: Option<String>,
    pub alphabet: Option<Alphabet>,
}

/// Builder for an unchecked graph; [`NfgDescription::validate`] turns it into an [`NfgGraph`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NfgDescription {
    pub vertices: Vec<(String, Factor)>,
    pub edges: Vec<EdgeSpec>,
}

impl NfgDescription {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, id: impl Into<String>, factor: Factor) -> Self {
        self.vertices.push((id.into(), factor));
        self
    }

    pub fn internal(
        mut self,
        id: impl Into<String>,
        a: (impl Into<String>, impl Into<String>),
        b: (impl Into<String>, impl Into<String>),
    ) -> Self {
        self.edges.push(EdgeSpec {
            id: id.into(),
            endpoints: vec![Endpoint::new(a.0, a.1), Endpoint::new(b.0, b.1)],
            external: None,
            alphabet: None,
        });
        self
    }

    /// Half edge whose id doubles as the external variable name.
    pub fn half(self, id: impl Into<String>, at: (impl Into<String>, impl Into<String>)) -> Self {
        let id = id.into();
        self.named_half(id.clone(), at, id)
    }

    pub fn named_half(
        mut self,
        id: impl Into<String>,
        at: (impl Into<String>, impl Into<String>),
        external: impl Into<String>,
    ) -> Self {
        self.edges.push(EdgeSpec {
            id: id.into(),
            endpoints: vec![Endpoint::new(at.0, at.1)],
            external: Some(external.into()),
            alphabet: None,
        });
        self
    }

    pub fn edge(mut self, spec: EdgeSpec) -> Self {
        self.edges.push(spec);
        self
    }

    pub fn validate(self) -> Result<NfgGraph> {
        NfgGraph::validate(self)
    }
}

/// A validated normal factor graph.
#[derive(Clone, Debug, PartialEq)]
pub struct NfgGraph {
    vertices: BTreeMap<String, Factor>,
    edges: BTreeMap<String, Edge>,
    /// vertex → incident edge ids, one entry per bound axis
    incidence: BTreeMap<String, Vec<String>>,
}

impl NfgGraph {
    pub fn validate(desc: NfgDescription) -> Result<NfgGraph> {
        let mut vertices = BTreeMap::new();
        for (id, f) in desc.vertices {
            if vertices.insert(id.clone(), f).is_some() {
                return Err(NfgError::DuplicateId(id));
            }
        }
        let mut edges = BTreeMap::new();
        let mut labels = BTreeSet::new();
        let mut bound: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut incidence: BTreeMap<String, Vec<String>> = vertices.keys().map(|v| (v.clone(), Vec::new())).collect();
        for spec in desc.edges {
            let invalid = |reason: &str| NfgError::InvalidEdge {
                edge: spec.id.clone(),
                reason: reason.to_owned(),
            };
            let mut alphabet = spec.alphabet.clone();
            for ep in &spec.endpoints {
                let f = vertices
                    .get(&ep.vertex)
                    .ok_or_else(|| NfgError::UnknownVertex(ep.vertex.clone()))?;
                let axis = f
                    .axis(&ep.axis)
                    .map_err(|_| invalid(&format!("vertex `{}` has no axis `{}`", ep.vertex, ep.axis)))?;
                match &alphabet {
                    Some(a) if !a.compatible(&axis.alphabet) => {
                        return Err(NfgError::AlphabetMismatch {
                            label: spec.id.clone(),
                            left: a.size(),
                            right: axis.size(),
                        })
                    }
                    Some(_) => {}
                    None => alphabet = Some(axis.alphabet.clone()),
                }
                *bound.entry((ep.vertex.clone(), ep.axis.clone())).or_default() += 1;
                incidence.get_mut(&ep.vertex).expect("known").push(spec.id.clone());
            }
            let kind = match (spec.endpoints.len(), spec.external) {
                (2, None) => {
                    let mut it = spec.endpoints.into_iter();
                    EdgeKind::Internal([it.next().expect("two"), it.next().expect("two")])
                }
                (1, Some(external)) => EdgeKind::Half {
                    end: spec.endpoints.into_iter().next().expect("one"),
                    external,
                },
                (2, Some(_)) => return Err(invalid("an internal edge has no external name")),
                (1, None) => return Err(invalid("a half edge needs an external name")),
                (n, _) => return Err(invalid(&format!("{n} endpoints; expected 1 or 2"))),
            };
            let edge = Edge {
                id: spec.id.clone(),
                alphabet: alphabet.expect("at least one endpoint"),
                kind,
            };
            if !labels.insert(edge.label().to_owned()) {
                return Err(NfgError::DuplicateLabel(edge.label().to_owned()));
            }
            if edges.insert(spec.id.clone(), edge).is_some() {
                return Err(NfgError::DuplicateId(spec.id));
            }
        }
        for (v, f) in &vertices {
            for l in f.domain().labels() {
                let count = bound.get(&(v.clone(), l.to_owned())).copied().unwrap_or(0);
                if count != 1 {
                    return Err(NfgError::UnboundAxis {
                        vertex: v.clone(),
                        axis: l.to_owned(),
                        count,
                    });
                }
            }
        }
        Ok(NfgGraph {
            vertices,
            edges,
            incidence,
        })
    }

    pub fn to_description(&self) -> NfgDescription {
        NfgDescription {
            vertices: self.vertices.iter().map(|(k, f)| (k.clone(), f.clone())).collect(),
            edges: self
                .edges
                .values()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    endpoints: e.endpoints().into_iter().cloned().collect(),
                    external: e.external().map(str::to_owned),
                    alphabet: Some(e.alphabet.clone()),
                })
                .collect(),
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&str, &Factor)> {
        self.vertices.iter().map(|(k, f)| (k.as_str(), f))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &str> {
        self.vertices.keys().map(String::as_str)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn factor(&self, v: &str) -> Result<&Factor> {
        self.vertices
            .get(v)
            .ok_or_else(|| NfgError::UnknownVertex(v.to_owned()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, id: &str) -> Result<&Edge> {
        self.edges.get(id).ok_or_else(|| NfgError::UnknownEdge(id.to_owned()))
    }

    pub fn internal_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| !e.is_half())
    }

    pub fn half_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| e.is_half())
    }

    /// The half edge carrying external variable `name`.
    pub fn half_edge_named(&self, name: &str) -> Result<&Edge> {
        self.half_edges()
            .find(|e| e.external() == Some(name))
            .ok_or_else(|| NfgError::UnknownLabel(name.to_owned()))
    }

    /// External variable names, sorted; the axis order of the exterior function.
    pub fn external_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .half_edges()
            .filter_map(|e| e.external().map(str::to_owned))
            .collect();
        v.sort();
        v
    }

    /// Domain of the exterior function.
    pub fn exterior_domain(&self) -> ProductDomain {
        let axes = self
            .external_names()
            .into_iter()
            .map(|n| {
                let a = self.half_edge_named(&n).expect("listed").alphabet.clone();
                Axis::new(n, a)
            })
            .collect();
        ProductDomain::new(axes).expect("external names are unique")
    }

    /// Incident edges of `v`; a loop appears twice.
    pub fn incident(&self, v: &str) -> Result<Vec<&Edge>> {
        let ids = self
            .incidence
            .get(v)
            .ok_or_else(|| NfgError::UnknownVertex(v.to_owned()))?;
        Ok(ids.iter().map(|id| &self.edges[id]).collect())
    }

    pub fn degree(&self, v: &str) -> Result<usize> {
        Ok(self.factor(v)?.rank())
    }

    /// Distinct neighbours of `v` over internal edges, excluding `v` itself.
    pub fn neighbors(&self, v: &str) -> Result<BTreeSet<String>> {
        Ok(self
            .incident(v)?
            .into_iter()
            .filter_map(|e| e.other(v))
            .filter(|ep| ep.vertex != v)
            .map(|ep| ep.vertex.clone())
            .collect())
    }

    /// Internal edges joining `u` and `v`.
    pub fn shared_edges(&self, u: &str, v: &str) -> Result<Vec<&Edge>> {
        let mut out: Vec<&Edge> = self
            .incident(u)?
            .into_iter()
            .filter(|e| e.other(u).map(|ep| ep.vertex == v).unwrap_or(false) && !e.is_loop())
            .collect();
        out.dedup_by(|a, b| a.id == b.id);
        Ok(out)
    }

    /// The vertex factor with every axis renamed to its edge label; loops are traced out.
    pub fn labeled_factor(&self, v: &str) -> Result<Factor> {
        let f = self.factor(v)?;
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        let mut loops = Vec::new();
        for e in self.incident(v)? {
            if e.is_loop() {
                if let EdgeKind::Internal([a, b]) = &e.kind {
                    map.insert(a.axis.clone(), format!("{}#a", e.id));
                    map.insert(b.axis.clone(), format!("{}#b", e.id));
                    loops.push(e.id.clone());
                }
            } else {
                let ep = e.end_at(v).expect("incident");
                map.insert(ep.axis.clone(), e.label().to_owned());
            }
        }
        let mut g = f.relabel_with(|l| map[l].clone())?;
        loops.sort();
        loops.dedup();
        for id in loops {
            g = g.trace(&format!("{id}#a"), &format!("{id}#b"))?;
        }
        Ok(g)
    }

    /// Every vertex factor in edge-label form, in vertex-id order.
    pub fn labeled_factors(&self) -> Result<Vec<Factor>> {
        self.vertex_ids().map(|v| self.labeled_factor(v)).collect()
    }

    /// Connected components of the underlying graph, each sorted; ordered by first vertex.
    pub fn components(&self) -> Vec<Vec<String>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.vertices.keys() {
            if seen.contains(start) {
                continue;
            }
            let mut comp = vec![];
            let mut queue = VecDeque::from([start.clone()]);
            seen.insert(start.clone());
            while let Some(v) = queue.pop_front() {
                for n in self.neighbors(&v).expect("known") {
                    if seen.insert(n.clone()) {
                        queue.push_back(n);
                    }
                }
                comp.push(v);
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    pub fn is_tree(&self) -> bool {
        self.components().len() == 1 && self.internal_edges().count() + 1 == self.vertices.len()
    }

    /// A cycle of the underlying multigraph as a vertex sequence, if one exists.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        if let Some(e) = self.internal_edges().find(|e| e.is_loop()) {
            return Some(vec![e.endpoints()[0].vertex.clone()]);
        }
        // depth-first search remembering the tree edge used to enter each vertex
        let mut parent: BTreeMap<String, (String, String)> = BTreeMap::new();
        let mut visited = BTreeSet::new();
        for root in self.vertices.keys() {
            if visited.contains(root) {
                continue;
            }
            let mut stack = vec![root.clone()];
            visited.insert(root.clone());
            while let Some(v) = stack.pop() {
                for e in self.incident(&v).expect("known") {
                    let Some(ep) = e.other(&v) else { continue };
                    let w = &ep.vertex;
                    if parent.get(&v).map(|(_, pe)| pe == &e.id).unwrap_or(false) {
                        continue;
                    }
                    if visited.contains(w) {
                        // close the cycle through the two tree paths to the root
                        let path = |mut x: String| {
                            let mut p = vec![x.clone()];
                            while let Some((px, _)) = parent.get(&x) {
                                x = px.clone();
                                p.push(x.clone());
                            }
                            p
                        };
                        let (pv, pw) = (path(v.clone()), path(w.clone()));
                        let common = pv.iter().find(|x| pw.contains(x)).expect("same tree").clone();
                        let mut cycle: Vec<String> = pv.iter().take_while(|x| **x != common).cloned().collect();
                        cycle.push(common.clone());
                        let mut tail: Vec<String> = pw.iter().take_while(|x| **x != common).cloned().collect();
                        tail.reverse();
                        cycle.extend(tail);
                        return Some(cycle);
                    }
                    visited.insert(w.clone());
                    parent.insert(w.clone(), (v.clone(), e.id.clone()));
                    stack.push(w.clone());
                }
            }
        }
        None
    }

    /// Fails with the cycle if the graph is not a forest.
    pub fn require_tree(&self) -> Result<()> {
        if let Some(c) = self.find_cycle() {
            return Err(NfgError::Cycle(c));
        }
        if self.components().len() > 1 {
            return Err(NfgError::Disconnected);
        }
        Ok(())
    }

    /// Half edges attached to `v`.
    pub fn half_edges_at(&self, v: &str) -> Result<Vec<&Edge>> {
        Ok(self.incident(v)?.into_iter().filter(|e| e.is_half()).collect())
    }

    pub fn is_simple(&self) -> bool {
        let mut pairs = BTreeSet::new();
        for e in self.internal_edges() {
            if e.is_loop() {
                return false;
            }
            let ends = e.endpoints();
            let mut key = [ends[0].vertex.clone(), ends[1].vertex.clone()];
            key.sort();
            if !pairs.insert(key) {
                return false;
            }
        }
        true
    }
}

/// Structural classification of a graph as a probabilistic model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassFlags {
    pub simple: bool,
    pub bipartite: bool,
    pub nfg_model: bool,
    pub constrained: bool,
    pub generative: bool,
    pub extended_generative: bool,
    pub tree: bool,
    /// Vertices with exactly one half edge.
    pub interface_set: BTreeSet<String>,
    /// Vertices with no half edge.
    pub latent_set: BTreeSet<String>,
    /// `Σ_x f_i` per interface when generative.
    pub conditional_constants: BTreeMap<String, Complex64>,
}

fn two_colorable(g: &NfgGraph) -> bool {
    let mut color: BTreeMap<&str, bool> = BTreeMap::new();
    for start in g.vertex_ids() {
        if color.contains_key(start) {
            continue;
        }
        color.insert(start, false);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let c = color[v];
            for e in g.incident(v).expect("known") {
                let Some(ep) = e.other(v) else { continue };
                match color.get(ep.vertex.as_str()) {
                    Some(&d) if d == c => return false,
                    Some(_) => {}
                    None => {
                        color.insert(ep.vertex.as_str(), !c);
                        queue.push_back(ep.vertex.as_str());
                    }
                }
            }
        }
    }
    true
}

/// The interface function of `v` with its half-edge axis, in edge-label form.
pub(crate) fn interface_view(g: &NfgGraph, v: &str) -> Result<(Factor, String)> {
    let half = g.half_edges_at(v)?;
    let pivot = half
        .first()
        .and_then(|e| e.external())
        .ok_or_else(|| NfgError::Precondition(format!("`{v}` has no half edge")))?
        .to_owned();
    Ok((g.labeled_factor(v)?, pivot))
}

pub fn classify(g: &NfgGraph, tol: f64) -> ClassFlags {
    let mut flags = ClassFlags {
        simple: g.is_simple(),
        bipartite: two_colorable(g),
        tree: g.is_tree(),
        ..Default::default()
    };
    let mut model = true;
    for v in g.vertex_ids() {
        match g.half_edges_at(v).expect("known").len() {
            0 => {
                flags.latent_set.insert(v.to_owned());
            }
            1 => {
                flags.interface_set.insert(v.to_owned());
            }
            _ => model = false,
        }
    }
    for e in g.internal_edges() {
        let ends = e.endpoints();
        let (a, b) = (
            flags.interface_set.contains(&ends[0].vertex),
            flags.interface_set.contains(&ends[1].vertex),
        );
        if a == b {
            model = false;
        }
    }
    flags.nfg_model = model;
    if !model {
        return flags;
    }
    let (mut constrained, mut generative, mut extended) = (true, true, true);
    let mut constants = BTreeMap::new();
    for v in &flags.interface_set {
        let (f, pivot) = interface_view(g, v).expect("interface");
        if f.rank() >= 2 && split_decompose(&f, &pivot, tol).is_none() {
            constrained = false;
        }
        match conditional_constant(&f, &pivot, tol) {
            Some(c) => {
                constants.insert(v.clone(), c);
            }
            None => generative = false,
        }
        let m = marginalize(&f, &pivot, Marginalization::Sum).expect("pivot present");
        if !is_product_of_univariates(&m, tol) {
            extended = false;
        }
    }
    flags.constrained = constrained;
    flags.generative = generative;
    flags.extended_generative = extended || generative;
    if generative {
        flags.conditional_constants = constants;
    }
    flags
}

/// True iff every path from `a` to `b` passes through `s`.
pub fn separated(g: &NfgGraph, a: &BTreeSet<String>, b: &BTreeSet<String>, s: &BTreeSet<String>) -> Result<bool> {
    for v in a.iter().chain(b).chain(s) {
        g.factor(v)?;
    }
    for (x, y) in [(a, b), (a, s), (b, s)] {
        if let Some(v) = x.intersection(y).next() {
            return Err(NfgError::OverlappingSets(v.clone()));
        }
    }
    let mut seen: BTreeSet<String> = a.clone();
    let mut queue: VecDeque<String> = a.iter().cloned().collect();
    while let Some(v) = queue.pop_front() {
        if b.contains(&v) {
            return Ok(false);
        }
        for n in g.neighbors(&v)? {
            if !s.contains(&n) && seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    Ok(true)
}

/// Assembles a graph from edge-label factors; each edge binds the axis named by its label.
pub(crate) fn from_labeled<'a>(
    factors: BTreeMap<String, Factor>,
    edges: impl IntoIterator<Item = &'a Edge>,
) -> Result<NfgGraph> {
    let mut desc = NfgDescription::new();
    for (v, f) in factors {
        desc = desc.vertex(v, f);
    }
    for e in edges {
        desc = desc.edge(EdgeSpec {
            id: e.id.clone(),
            endpoints: e
                .endpoints()
                .iter()
                .map(|ep| Endpoint::new(ep.vertex.clone(), e.label()))
                .collect(),
            external: e.external().map(str::to_owned),
            alphabet: None,
        });
    }
    desc.validate()
}

/// Moves half edge `edge` behind a new bivariate equality vertex `{edge}#eq`.
///
/// The external name is unchanged; the old attachment becomes internal edge
/// `{edge}#in`. Leaves the exterior function unchanged.
pub fn insert_equality_on_half_edge(g: &NfgGraph, edge: &str) -> Result<NfgGraph> {
    let e = g.edge(edge)?.clone();
    let EdgeKind::Half { end, external } = &e.kind else {
        return Err(NfgError::InvalidEdge {
            edge: edge.to_owned(),
            reason: "not a half edge".into(),
        });
    };
    let eq = make_indicator(IndicatorKind::Equality, &e.alphabet, 2)?;
    let vid = format!("{edge}#eq");
    let mut desc = g.to_description();
    desc.edges.retain(|s| s.id != edge);
    desc.vertex(vid.clone(), eq)
        .internal(
            format!("{edge}#in"),
            (end.vertex.clone(), end.axis.clone()),
            (vid.clone(), "arg1"),
        )
        .named_half(edge, (vid, "arg2"), external.clone())
        .validate()
}
