//! Graph surgery that preserves or predictably changes the exterior function:
//! vertex merging and guided splitting, transformer insertion, holographic
//! transformations, and fast per-axis kernels.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::algebra::Alphabet;
use crate::error::{NfgError, Result};
use crate::exterior::exterior_bruteforce;
use crate::factor::{contract, Factor};
use crate::indicators::{make_kernel, KernelKind, TransformerPair};
use crate::nfg::{EdgeKind, EdgeSpec, Endpoint, NfgDescription, NfgGraph};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub(crate) fn fresh(base: String, taken: &mut BTreeSet<String>) -> String {
    let mut id = base.clone();
    let mut i = 1;
    while taken.contains(&id) {
        id = format!("{base}~{i}");
        i += 1;
    }
    taken.insert(id.clone());
    id
}

pub(crate) fn taken_ids(g: &NfgGraph) -> BTreeSet<String> {
    let mut t: BTreeSet<String> = g.vertex_ids().map(str::to_owned).collect();
    for e in g.edges() {
        t.insert(e.id.clone());
        t.insert(e.label().to_owned());
    }
    t
}

/// Replaces adjacent `u` and `v` by one vertex `u` carrying `⟨f_u, f_v⟩`.
///
/// The merged factor's axes are named after the edge labels they bind.
pub fn merge_vertices(g: &NfgGraph, u: &str, v: &str) -> Result<NfgGraph> {
    if u == v || g.shared_edges(u, v)?.is_empty() {
        return Err(NfgError::NotAdjacent(u.to_owned(), v.to_owned()));
    }
    let merged = contract(&[g.labeled_factor(u)?, g.labeled_factor(v)?])?;
    let pair = [u, v];
    let mut desc = NfgDescription::new().vertex(u, merged);
    for (id, f) in g.vertices() {
        if !pair.contains(&id) {
            desc = desc.vertex(id, f.clone());
        }
    }
    for e in g.edges() {
        let touches: Vec<bool> = e
            .endpoints()
            .iter()
            .map(|ep| pair.contains(&ep.vertex.as_str()))
            .collect();
        if !e.is_half() && touches.iter().all(|&t| t) {
            // shared or loop edge: summed inside the merged factor
            continue;
        }
        let endpoints = e
            .endpoints()
            .into_iter()
            .map(|ep| {
                if pair.contains(&ep.vertex.as_str()) {
                    Endpoint::new(u, e.label())
                } else {
                    ep.clone()
                }
            })
            .collect();
        desc = desc.edge(EdgeSpec {
            id: e.id.clone(),
            endpoints,
            external: e.external().map(str::to_owned),
            alphabet: Some(e.alphabet.clone()),
        });
    }
    desc.validate()
}

/// Where a transformer goes.
#[derive(Clone, Debug, PartialEq)]
pub enum Insertion {
    /// An inverse pair on an internal edge; the forward half faces `forward_vertex`.
    Pair {
        pair: TransformerPair,
        forward_vertex: String,
    },
    /// A single bivariate `g(inner, outer)` on a half edge.
    External(Factor),
}

/// Ids of the vertices created by [`insert_transformer`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inserted {
    /// `(new vertex, original vertex it should merge into)`.
    pub vertices: Vec<(String, String)>,
}

/// Subdivides `edge` with transformer vertices.
///
/// For a pair, the middle edge keeps the id `edge`; for an external insertion
/// the half edge keeps its id and external name but now hangs off the new vertex
/// with the transformer's second-argument alphabet.
pub fn insert_transformer(g: &NfgGraph, edge: &str, insertion: &Insertion) -> Result<(NfgGraph, Inserted)> {
    let e = g.edge(edge)?.clone();
    let mut taken = taken_ids(g);
    let mut desc = g.to_description();
    desc.edges.retain(|s| s.id != edge);
    let check_bivariate = |f: &Factor, what: &str| -> Result<()> {
        if f.labels() != ["arg1", "arg2"] {
            return Err(NfgError::InvalidIndicator(format!("{what} must have axes arg1, arg2")));
        }
        let a = &f.axis("arg1")?.alphabet;
        if !a.compatible(&e.alphabet) {
            return Err(NfgError::AlphabetMismatch {
                label: edge.to_owned(),
                left: e.alphabet.size(),
                right: a.size(),
            });
        }
        Ok(())
    };
    match (&e.kind, insertion) {
        (EdgeKind::Internal(ends), Insertion::Pair { pair, forward_vertex }) => {
            check_bivariate(pair.forward(), "forward transformer")?;
            check_bivariate(pair.inverse(), "inverse transformer")?;
            let (near, far) = if ends[0].vertex == *forward_vertex {
                (&ends[0], &ends[1])
            } else if ends[1].vertex == *forward_vertex {
                (&ends[1], &ends[0])
            } else {
                return Err(NfgError::InvalidEdge {
                    edge: edge.to_owned(),
                    reason: format!("`{forward_vertex}` is not an endpoint"),
                });
            };
            let fwd = fresh(format!("{edge}#fwd"), &mut taken);
            let inv = fresh(format!("{edge}#inv"), &mut taken);
            let e_near = fresh(format!("{edge}#near"), &mut taken);
            let e_far = fresh(format!("{edge}#far"), &mut taken);
            let desc = desc
                .vertex(fwd.clone(), pair.forward().clone())
                .vertex(inv.clone(), pair.inverse().clone())
                .internal(e_near, (near.vertex.clone(), near.axis.clone()), (fwd.clone(), "arg1"))
                .internal(edge, (fwd.clone(), "arg2"), (inv.clone(), "arg1"))
                .internal(e_far, (inv.clone(), "arg2"), (far.vertex.clone(), far.axis.clone()));
            Ok((
                desc.validate()?,
                Inserted {
                    vertices: vec![(fwd, near.vertex.clone()), (inv, far.vertex.clone())],
                },
            ))
        }
        (EdgeKind::Half { end, external }, Insertion::External(t)) => {
            check_bivariate(t, "external transformer")?;
            let vid = fresh(format!("{edge}#ext"), &mut taken);
            let inner = fresh(format!("{edge}#in"), &mut taken);
            let desc = desc
                .vertex(vid.clone(), t.clone())
                .internal(inner, (end.vertex.clone(), end.axis.clone()), (vid.clone(), "arg1"))
                .named_half(edge, (vid.clone(), "arg2"), external.clone());
            Ok((
                desc.validate()?,
                Inserted {
                    vertices: vec![(vid, end.vertex.clone())],
                },
            ))
        }
        (EdgeKind::Internal(_), Insertion::External(_)) => Err(NfgError::InvalidEdge {
            edge: edge.to_owned(),
            reason: "internal edges take an inverse pair".into(),
        }),
        (EdgeKind::Half { .. }, Insertion::Pair { .. }) => Err(NfgError::InvalidEdge {
            edge: edge.to_owned(),
            reason: "half edges take a single external transformer".into(),
        }),
    }
}

/// Inserts an inverse pair on internal edge `edge`, forward half next to `forward_vertex`.
pub fn insert_transformer_pair(
    g: &NfgGraph,
    edge: &str,
    pair: &TransformerPair,
    forward_vertex: &str,
) -> Result<NfgGraph> {
    let ins = Insertion::Pair {
        pair: pair.clone(),
        forward_vertex: forward_vertex.to_owned(),
    };
    insert_transformer(g, edge, &ins).map(|(g, _)| g)
}

/// External transformers by external name and internal pairs by edge id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HolographicSpec {
    pub external: BTreeMap<String, Factor>,
    /// Edge id → (pair, vertex the forward half faces).
    pub internal: BTreeMap<String, (TransformerPair, String)>,
}

/// Inserts every transformer of `spec` and merges each into its original vertex.
///
/// The result has the original topology and ids. By the generalized Holant
/// theorem its exterior is `⟨Z_in(x), Π g_i(x_i, y_i)⟩`.
pub fn holographic_transform(g: &NfgGraph, spec: &HolographicSpec) -> Result<NfgGraph> {
    let mut h = g.clone();
    let mut merges: Vec<(String, String)> = Vec::new();
    for (name, t) in &spec.external {
        let id = g.half_edge_named(name)?.id.clone();
        let (next, ins) = insert_transformer(&h, &id, &Insertion::External(t.clone()))?;
        h = next;
        merges.extend(ins.vertices);
    }
    for (edge, (pair, fwd)) in &spec.internal {
        if g.edge(edge)?.is_half() {
            return Err(NfgError::InvalidEdge {
                edge: edge.clone(),
                reason: "internal pairs need an internal edge".into(),
            });
        }
        let ins = Insertion::Pair {
            pair: pair.clone(),
            forward_vertex: fwd.clone(),
        };
        let (next, ins) = insert_transformer(&h, edge, &ins)?;
        h = next;
        merges.extend(ins.vertices);
    }
    for (new, original) in merges {
        h = merge_vertices(&h, &original, &new)?;
    }
    Ok(h)
}

/// Replaces vertex `v` by the sub-graph `replacement`, whose half edges are named
/// after the axes of `f_v`. Fails unless the replacement realizes `f_v` within `tol`.
pub fn split_vertex(g: &NfgGraph, v: &str, replacement: &NfgGraph, tol: f64) -> Result<NfgGraph> {
    let f = g.factor(v)?;
    let z = exterior_bruteforce(replacement)?;
    let mut want = f.labels();
    want.sort();
    if replacement.external_names() != want {
        return Err(NfgError::Precondition(format!(
            "replacement externals {:?} must match the axes of `{v}` {:?}",
            replacement.external_names(),
            want
        )));
    }
    let err = z.rel_diff(f)?;
    if err > tol {
        return Err(NfgError::Precondition(format!(
            "replacement does not realize `{v}` (relative error {err:.3e})"
        )));
    }
    let mut desc = NfgDescription::new();
    for (id, h) in g.vertices() {
        if id != v {
            desc = desc.vertex(id, h.clone());
        }
    }
    for (id, h) in replacement.vertices() {
        desc = desc.vertex(id, h.clone());
    }
    let attach: BTreeMap<String, Endpoint> = replacement
        .half_edges()
        .map(|e| {
            let EdgeKind::Half { end, external } = &e.kind else {
                unreachable!()
            };
            (external.clone(), end.clone())
        })
        .collect();
    for e in g.edges() {
        let endpoints = e
            .endpoints()
            .into_iter()
            .map(|ep| {
                if ep.vertex == v {
                    attach[&ep.axis].clone()
                } else {
                    ep.clone()
                }
            })
            .collect();
        desc = desc.edge(EdgeSpec {
            id: e.id.clone(),
            endpoints,
            external: e.external().map(str::to_owned),
            alphabet: Some(e.alphabet.clone()),
        });
    }
    for e in replacement.internal_edges() {
        let ends = e.endpoints();
        desc = desc.internal(
            e.id.clone(),
            (ends[0].vertex.clone(), ends[0].axis.clone()),
            (ends[1].vertex.clone(), ends[1].axis.clone()),
        );
    }
    desc.validate()
}

/// Applies `kernel` along each named axis: `F(.., x, ..) = Σ_y K(x, y) f(.., y, ..)`.
///
/// Cumulus and difference run as in-place running sums and differences along each
/// component of an ordered product, costing `(r-1)·|domain|/r` additions per
/// component of radix `r`. Fourier kernels are applied per cyclic component
/// densely, costing `m·|domain|` multiply-adds per component of modulus `m`.
/// Returns the transformed factor and the operation count.
pub fn fast_axis_transform(f: &Factor, kernel: KernelKind, axes: &[&str]) -> Result<(Factor, u64)> {
    let mut values = f.values().to_vec();
    let strides = f.domain().strides();
    let total = values.len();
    let mut ops = 0u64;
    for &label in axes {
        let pos = f
            .domain()
            .position(label)
            .ok_or_else(|| NfgError::UnknownLabel(label.to_owned()))?;
        let alphabet = &f.domain().axes()[pos].alphabet;
        let radices: Vec<usize> = match (kernel, alphabet) {
            (KernelKind::Cumulus | KernelKind::Difference, Alphabet::Ordered(o)) => o.radices().to_vec(),
            (KernelKind::Fourier | KernelKind::FourierInverse, Alphabet::Group(g)) => g.moduli().to_vec(),
            _ => {
                return Err(NfgError::InvalidAlphabet(format!(
                    "`{}` cannot act on axis `{label}` over {alphabet}",
                    kernel.name()
                )))
            }
        };
        // component k of the axis has stride `strides[pos] * Π radices[k+1..]`
        let mut sub = strides[pos];
        for &r in radices.iter().rev() {
            let step = sub;
            let block = step * r;
            match kernel {
                KernelKind::Cumulus | KernelKind::Difference => {
                    for base in (0..total).step_by(block) {
                        for off in 0..step {
                            let line = base + off;
                            if kernel == KernelKind::Cumulus {
                                for i in 1..r {
                                    let prev = values[line + (i - 1) * step];
                                    values[line + i * step] += prev;
                                }
                            } else {
                                for i in (1..r).rev() {
                                    let prev = values[line + (i - 1) * step];
                                    values[line + i * step] -= prev;
                                }
                            }
                            ops += (r - 1) as u64;
                        }
                    }
                }
                KernelKind::Fourier | KernelKind::FourierInverse => {
                    let comp = Alphabet::cyclic(r);
                    let k = make_kernel(kernel, &comp)?;
                    let kv = k.values();
                    let mut line = vec![ZERO; r];
                    for base in (0..total).step_by(block) {
                        for off in 0..step {
                            let start = base + off;
                            for (i, slot) in line.iter_mut().enumerate() {
                                *slot = values[start + i * step];
                            }
                            for xh in 0..r {
                                let mut acc = ZERO;
                                for (x, v) in line.iter().enumerate() {
                                    acc += kv[xh * r + x] * v;
                                }
                                values[start + xh * step] = acc;
                            }
                            ops += (r * r) as u64;
                        }
                    }
                }
            }
            sub *= r;
        }
    }
    Ok((Factor::new(f.domain().clone(), values)?, ops))
}

/// The same transform by contracting the dense kernel on each axis.
pub fn dense_axis_transform(f: &Factor, kernel: KernelKind, axes: &[&str]) -> Result<Factor> {
    let mut out = f.clone();
    for &label in axes {
        let alphabet = out.axis(label)?.alphabet.clone();
        let tmp = format!("{label}#src");
        let k =
            make_kernel(kernel, &alphabet)?
                .relabel_with(|l| if l == "arg1" { label.to_owned() } else { tmp.clone() })?;
        let order = out.labels();
        out = contract(&[out.relabel(label, &tmp)?, k])?.permute(&order)?;
    }
    Ok(out)
}
