//! Marginalization and evidence as graph surgery, and up-to-scale queries.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::error::{NfgError, Result};
use crate::exterior::{eliminate, exterior_bruteforce, exterior_via_spa, EliminationOptions, SpaOptions};
use crate::factor::{marginalize, product, Factor, Marginalization};
use crate::indicators::{identify_indicator, make_indicator, IndicatorKind};
use crate::models::normalize_constrained;
use crate::nfg::{classify, from_labeled, EdgeKind, NfgDescription, NfgGraph};
use crate::transform::{fresh, taken_ids};

/// Masses below this are treated as zero when normalizing.
pub const ZERO_MASS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Algorithm {
    BruteForce,
    #[default]
    Eliminate,
    Spa,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::BruteForce => "bruteforce",
            Algorithm::Eliminate => "eliminate",
            Algorithm::Spa => "spa",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "bruteforce" => Ok(Algorithm::BruteForce),
            "eliminate" => Ok(Algorithm::Eliminate),
            "spa" => Ok(Algorithm::Spa),
            _ => Err(NfgError::InvalidQuery(format!("unknown algorithm `{name}`"))),
        }
    }
}

/// `Σ_{x_M} p(x_R, x_M, x_N)` at `x_N = x̄_N`.
///
/// Targets, marginalized variables and evidence keys must partition the
/// external variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    pub targets: BTreeSet<String>,
    pub marginalize: BTreeSet<String>,
    pub evidence: BTreeMap<String, usize>,
    pub algorithm: Algorithm,
    /// Divide by the evidence mass.
    pub normalize: bool,
    /// Use the constrained or generative shortcut when the model allows it.
    pub shortcut: bool,
}

impl Query {
    /// A query whose targets are every external not marginalized or observed.
    pub fn complete(g: &NfgGraph, marginalize: BTreeSet<String>, evidence: BTreeMap<String, usize>) -> Self {
        let targets = g
            .external_names()
            .into_iter()
            .filter(|x| !marginalize.contains(x) && !evidence.contains_key(x))
            .collect();
        Self {
            targets,
            marginalize,
            evidence,
            ..Self::default()
        }
    }

    pub fn validate(&self, g: &NfgGraph) -> Result<()> {
        let names: BTreeSet<String> = g.external_names().into_iter().collect();
        let mut seen = BTreeSet::new();
        let all = self.targets.iter().chain(&self.marginalize).chain(self.evidence.keys());
        for x in all {
            if !names.contains(x) {
                return Err(NfgError::InvalidQuery(format!("`{x}` is not an external variable")));
            }
            if !seen.insert(x) {
                return Err(NfgError::InvalidQuery(format!("`{x}` appears in more than one role")));
            }
        }
        if let Some(x) = names.iter().find(|x| !seen.contains(x)) {
            return Err(NfgError::InvalidQuery(format!("`{x}` has no role")));
        }
        for (x, &v) in &self.evidence {
            g.half_edge_named(x)?.alphabet.check(v)?;
        }
        Ok(())
    }
}

/// Closes marginalized half edges with constant-one vertices and observed ones
/// with evaluation vertices; targets stay open.
pub fn reduce_star(g: &NfgGraph, q: &Query) -> Result<NfgGraph> {
    q.validate(g)?;
    glue(g, &q.marginalize, &q.evidence)
}

fn glue(g: &NfgGraph, marginalize: &BTreeSet<String>, evidence: &BTreeMap<String, usize>) -> Result<NfgGraph> {
    let mut taken = taken_ids(g);
    let mut desc = NfgDescription::new();
    for (v, f) in g.vertices() {
        desc = desc.vertex(v, f.clone());
    }
    for e in g.edges() {
        match &e.kind {
            EdgeKind::Internal([a, b]) => {
                desc = desc.internal(
                    e.id.clone(),
                    (a.vertex.clone(), a.axis.clone()),
                    (b.vertex.clone(), b.axis.clone()),
                );
            }
            EdgeKind::Half { end, external } => {
                let (kind, tag) = if marginalize.contains(external) {
                    (IndicatorKind::One, "one")
                } else if let Some(&v) = evidence.get(external) {
                    (IndicatorKind::Evaluation(v), "eval")
                } else {
                    desc = desc.named_half(e.id.clone(), (end.vertex.clone(), end.axis.clone()), external.clone());
                    continue;
                };
                let u = fresh(format!("{external}#{tag}"), &mut taken);
                desc = desc.vertex(u.clone(), make_indicator(kind, &e.alphabet, 1)?).internal(
                    e.id.clone(),
                    (end.vertex.clone(), end.axis.clone()),
                    (u, "arg1"),
                );
            }
        }
    }
    desc.validate()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shortcut {
    /// Evidence on equality interfaces sliced into the neighbours.
    ConstrainedEvidence,
    /// Marginalized conditional interfaces summed into the neighbours.
    GenerativeMarginal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    /// `p_R` over the targets in name order; normalized only on request.
    pub table: Factor,
    /// `Σ_R p_R`, the evidence mass `p(N = x̄)` up to the model's own scale.
    pub evidence_mass: Complex64,
    pub normalized: bool,
    pub shortcut: Option<Shortcut>,
}

/// Slices evidence into the neighbours of equality interfaces and deletes them.
///
/// Degree-1 interfaces become scalar vertices. Non-equality interfaces are
/// normalized first.
pub fn constrained_evidence_shortcut(g: &NfgGraph, evidence: &BTreeMap<String, usize>, tol: f64) -> Result<NfgGraph> {
    let flags = classify(g, tol);
    if !flags.nfg_model || !flags.constrained {
        return Err(NfgError::Precondition("not a constrained NFG model".into()));
    }
    let is_eq = |g: &NfgGraph, x: &str| -> Result<bool> {
        let v = &g.half_edge_named(x)?.endpoints()[0].vertex;
        let f = g.factor(v)?;
        Ok(f.rank() == 1 || identify_indicator(f).is_some_and(|(k, _)| k == IndicatorKind::Equality))
    };
    let mut all_eq = true;
    for x in evidence.keys() {
        all_eq &= is_eq(g, x)?;
    }
    let g = if all_eq {
        g.clone()
    } else {
        normalize_constrained(g, tol)?
    };
    let mut factors: BTreeMap<String, Factor> = g
        .vertex_ids()
        .map(|v| Ok((v.to_owned(), g.labeled_factor(v)?)))
        .collect::<Result<_>>()?;
    let mut dropped = BTreeSet::new();
    for (x, &value) in evidence {
        let h = g.half_edge_named(x)?;
        let i = h.endpoints()[0].vertex.clone();
        dropped.insert(h.id.clone());
        let fi = &factors[&i];
        if fi.rank() == 1 {
            let s = fi.evaluate(x, value)?;
            factors.insert(i, s);
            continue;
        }
        for e in g.incident(&i)? {
            let Some(j) = e.other(&i) else { continue };
            let fj = factors[&j.vertex].evaluate(e.label(), value)?;
            factors.insert(j.vertex.clone(), fj);
            dropped.insert(e.id.clone());
        }
        factors.remove(&i);
    }
    from_labeled(factors, g.edges().filter(|e| !dropped.contains(&e.id)))
}

/// Sums marginalized conditional interfaces into their neighbours and deletes them.
///
/// The interface's conditional constant multiplies its first neighbour, or
/// stays behind as a scalar vertex when it has none.
pub fn generative_marginal_shortcut(g: &NfgGraph, marginalize: &BTreeSet<String>, tol: f64) -> Result<NfgGraph> {
    let flags = classify(g, tol);
    if !flags.nfg_model || !flags.generative {
        return Err(NfgError::Precondition("not a generative NFG model".into()));
    }
    let mut factors: BTreeMap<String, Factor> = g
        .vertex_ids()
        .map(|v| Ok((v.to_owned(), g.labeled_factor(v)?)))
        .collect::<Result<_>>()?;
    let mut dropped = BTreeSet::new();
    for x in marginalize {
        let h = g.half_edge_named(x)?;
        let i = h.endpoints()[0].vertex.clone();
        dropped.insert(h.id.clone());
        let c = flags.conditional_constants[&i];
        let mut absorbed = false;
        let mut incident = g.incident(&i)?;
        incident.sort_by(|a, b| a.id.cmp(&b.id));
        for e in incident {
            let Some(j) = e.other(&i) else { continue };
            let mut fj = marginalize_fn(&factors[&j.vertex], e.label())?;
            if !absorbed {
                fj = fj.scale(c);
                absorbed = true;
            }
            factors.insert(j.vertex.clone(), fj);
            dropped.insert(e.id.clone());
        }
        if absorbed {
            factors.remove(&i);
        } else {
            factors.insert(i, Factor::scalar(c));
        }
    }
    from_labeled(factors, g.edges().filter(|e| !dropped.contains(&e.id)))
}

fn marginalize_fn(f: &Factor, label: &str) -> Result<Factor> {
    marginalize(f, label, Marginalization::Sum)
}

/// The exterior function with the chosen engine; sum-product runs per component.
pub fn exterior_with(g: &NfgGraph, algorithm: Algorithm) -> Result<Factor> {
    let names = g.external_names();
    match algorithm {
        Algorithm::BruteForce => exterior_bruteforce(g),
        Algorithm::Eliminate => eliminate(g, &EliminationOptions::default())?.result.permute(&names),
        Algorithm::Spa => {
            let components = g.components();
            if components.len() == 1 {
                return exterior_via_spa(g, &SpaOptions::default());
            }
            let mut parts = Vec::new();
            for comp in components {
                let members: BTreeSet<&str> = comp.iter().map(String::as_str).collect();
                let factors = comp
                    .iter()
                    .map(|v| Ok((v.clone(), g.labeled_factor(v)?)))
                    .collect::<Result<_>>()?;
                let edges = g
                    .edges()
                    .filter(|e| e.endpoints().iter().any(|ep| members.contains(ep.vertex.as_str())));
                let sub = from_labeled(factors, edges)?;
                parts.push(exterior_via_spa(&sub, &SpaOptions::default())?);
            }
            product(&parts)?.permute(&names)
        }
    }
}

/// Answers `q` up to the scale `p(N = x̄)`.
pub fn query(g: &NfgGraph, q: &Query, tol: f64) -> Result<QueryResult> {
    q.validate(g)?;
    let mut shortcut = None;
    let reduced = if q.shortcut {
        let flags = classify(g, tol);
        if flags.nfg_model && flags.constrained && !q.evidence.is_empty() {
            shortcut = Some(Shortcut::ConstrainedEvidence);
            let h = constrained_evidence_shortcut(g, &q.evidence, tol)?;
            glue(&h, &q.marginalize, &BTreeMap::new())?
        } else if flags.nfg_model && flags.generative && !q.marginalize.is_empty() {
            shortcut = Some(Shortcut::GenerativeMarginal);
            let h = generative_marginal_shortcut(g, &q.marginalize, tol)?;
            glue(&h, &BTreeSet::new(), &q.evidence)?
        } else {
            reduce_star(g, q)?
        }
    } else {
        reduce_star(g, q)?
    };
    let table = exterior_with(&reduced, q.algorithm)?;
    let evidence_mass = table.sum_all();
    let table = if q.normalize {
        if evidence_mass.norm() <= ZERO_MASS {
            return Err(NfgError::ZeroMass(evidence_mass.norm()));
        }
        table.scale(Complex64::new(1.0, 0.0) / evidence_mass)
    } else {
        table
    };
    Ok(QueryResult {
        table,
        evidence_mass,
        normalized: q.normalize,
        shortcut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_product_domain, Alphabet};
    use crate::models::{fg_to_nfg, FactorGraphDesc, FgFunction};

    fn real(axes: &[(&str, usize)], values: &[f64]) -> Factor {
        let d = make_product_domain(axes.iter().map(|&(l, n)| (l, Alphabet::plain(n)))).unwrap();
        Factor::from_real(d, values).unwrap()
    }

    /// x1 - f - x2 with a prior on x1.
    fn two_variable_chain() -> NfgGraph {
        let fg = FactorGraphDesc::new(
            vec![("x1".into(), Alphabet::plain(2)), ("x2".into(), Alphabet::plain(2))],
            vec![
                FgFunction::new("prior", real(&[("a", 2)], &[0.3, 0.7]), &["x1"]),
                FgFunction::new(
                    "link",
                    real(&[("a", 2), ("b", 2)], &[0.9, 0.1, 0.2, 0.8]),
                    &["x1", "x2"],
                ),
            ],
        )
        .unwrap();
        fg_to_nfg(&fg).unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn conditional_matches_hand_computation() {
        let g = two_variable_chain();
        // p(x1, x2=0) = [0.3 * 0.9, 0.7 * 0.2]
        let (a, b) = (0.27, 0.14);
        for algorithm in [Algorithm::BruteForce, Algorithm::Eliminate, Algorithm::Spa] {
            for shortcut in [false, true] {
                let mut q = Query::complete(&g, BTreeSet::new(), BTreeMap::from([("x2".to_string(), 0)]));
                q.algorithm = algorithm;
                q.shortcut = shortcut;
                q.normalize = true;
                let r = query(&g, &q, 1e-9).unwrap();
                assert!((r.evidence_mass.re - (a + b)).abs() < 1e-12);
                let v = r.table.values();
                assert!((v[0].re - a / (a + b)).abs() < 1e-12, "{algorithm:?}");
                assert!((v[1].re - b / (a + b)).abs() < 1e-12);
                assert_eq!(r.shortcut.is_some(), shortcut);
            }
        }
    }

    #[test]
    fn marginal_sums_to_total_mass() {
        let g = two_variable_chain();
        let mut q = Query::complete(&g, set(&["x1"]), BTreeMap::new());
        let r = query(&g, &q, 1e-9).unwrap();
        let total = exterior_bruteforce(&g).unwrap().sum_all();
        assert!((r.table.sum_all() - total).norm() < 1e-12);
        q.normalize = true;
        let r = query(&g, &q, 1e-9).unwrap();
        assert!((r.table.sum_all() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_reduction_is_identity() {
        let g = two_variable_chain();
        let q = Query::complete(&g, BTreeSet::new(), BTreeMap::new());
        let r = reduce_star(&g, &q).unwrap();
        assert!(r.edges().eq(g.edges()));
        assert!(r.vertices().eq(g.vertices()));
        let all = Query::complete(&g, set(&["x1", "x2"]), BTreeMap::new());
        let z = exterior_bruteforce(&reduce_star(&g, &all).unwrap()).unwrap();
        assert_eq!(z.rank(), 0);
    }

    #[test]
    fn invalid_queries() {
        let g = two_variable_chain();
        let mut q = Query::complete(&g, BTreeSet::new(), BTreeMap::from([("x2".to_string(), 5)]));
        assert!(matches!(query(&g, &q, 1e-9), Err(NfgError::OutOfRange { .. })));
        q.evidence = BTreeMap::new();
        assert!(matches!(q.validate(&g), Err(NfgError::InvalidQuery(_))));
        q.targets = set(&["x1", "x2", "zz"]);
        assert!(q.validate(&g).is_err());
    }

    #[test]
    fn zero_evidence_refuses_to_normalize() {
        let fg = FactorGraphDesc::new(
            vec![("x".into(), Alphabet::plain(2)), ("y".into(), Alphabet::plain(2))],
            vec![FgFunction::new(
                "f",
                real(&[("a", 2), ("b", 2)], &[1.0, 0.0, 1.0, 0.0]),
                &["x", "y"],
            )],
        )
        .unwrap();
        let g = fg_to_nfg(&fg).unwrap();
        let mut q = Query::complete(&g, BTreeSet::new(), BTreeMap::from([("y".to_string(), 1)]));
        q.normalize = true;
        assert!(matches!(query(&g, &q, 1e-9), Err(NfgError::ZeroMass(_))));
    }

    #[test]
    fn generative_shortcut_absorbs_constant() {
        // g(x, s) with column sums 3; latent p(s)
        let g = NfgDescription::new()
            .vertex("p", real(&[("s", 2)], &[0.25, 0.75]))
            .vertex("g", real(&[("x", 2), ("s", 2)], &[1.0, 2.0, 2.0, 1.0]))
            .vertex("h", real(&[("x", 3)], &[1.0, 2.0, 4.0]))
            .internal("e", ("p", "s"), ("g", "s"))
            .half("x", ("g", "x"))
            .half("y", ("h", "x"))
            .validate()
            .unwrap();
        let mut q = Query::complete(&g, set(&["x", "y"]), BTreeMap::new());
        q.shortcut = true;
        let r = query(&g, &q, 1e-9).unwrap();
        assert_eq!(r.shortcut, Some(Shortcut::GenerativeMarginal));
        q.shortcut = false;
        let generic = query(&g, &q, 1e-9).unwrap();
        assert_eq!(r.table.values(), generic.table.values());
        assert_eq!(r.evidence_mass, Complex64::new(21.0, 0.0));
    }
}
