//! Factor graphs, convolutional factor graphs and cumulative distribution
//! networks as NFG models; interface normalization, sampling and
//! independence verdicts.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::algebra::{Alphabet, Axis, ProductDomain};
use crate::error::{NfgError, Result};
use crate::factor::{contract, product, split_decompose, sum_of_products, Factor};
use crate::indicators::{arg, indicator_table, make_indicator, make_kernel, IndicatorKind, KernelKind};
use crate::nfg::{classify, from_labeled, interface_view, separated, NfgDescription, NfgGraph};
use crate::transform::fast_axis_transform;

/// A local function of a factor graph.
#[derive(Clone, Debug, PartialEq)]
pub struct FgFunction {
    pub name: String,
    pub factor: Factor,
    /// The variable bound to each factor axis, in axis order.
    pub neighbors: Vec<String>,
}

impl FgFunction {
    pub fn new<S: AsRef<str>>(name: impl Into<String>, factor: Factor, neighbors: &[S]) -> Self {
        Self {
            name: name.into(),
            factor,
            neighbors: neighbors.iter().map(|s| s.as_ref().to_owned()).collect(),
        }
    }
}

/// A bipartite graph of variables and functions.
///
/// Function factors are stored with each axis renamed to its variable and
/// carrying the variable's alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorGraphDesc {
    variables: Vec<(String, Alphabet)>,
    functions: Vec<FgFunction>,
}

impl FactorGraphDesc {
    pub fn new(variables: Vec<(String, Alphabet)>, functions: Vec<FgFunction>) -> Result<Self> {
        let mut alphabets = BTreeMap::new();
        for (v, a) in &variables {
            if alphabets.insert(v.clone(), a.clone()).is_some() {
                return Err(NfgError::DuplicateId(v.clone()));
            }
        }
        let mut names = BTreeSet::new();
        let mut normalized = Vec::with_capacity(functions.len());
        for f in functions {
            if !names.insert(f.name.clone()) {
                return Err(NfgError::DuplicateId(f.name));
            }
            if f.factor.rank() != f.neighbors.len() {
                return Err(NfgError::ShapeMismatch {
                    expected: f.factor.rank(),
                    got: f.neighbors.len(),
                });
            }
            let mut axes = Vec::with_capacity(f.neighbors.len());
            for (axis, v) in f.factor.domain().axes().iter().zip(&f.neighbors) {
                let a = alphabets.get(v).ok_or_else(|| NfgError::UnknownLabel(v.clone()))?;
                if !a.compatible(&axis.alphabet) {
                    return Err(NfgError::AlphabetMismatch {
                        label: v.clone(),
                        left: a.size(),
                        right: axis.size(),
                    });
                }
                axes.push(Axis::new(v.clone(), a.clone()));
            }
            let domain = ProductDomain::new(axes)?;
            let factor = Factor::new(domain, f.factor.values().to_vec())?;
            normalized.push(FgFunction { factor, ..f });
        }
        Ok(Self {
            variables,
            functions: normalized,
        })
    }

    pub fn variables(&self) -> &[(String, Alphabet)] {
        &self.variables
    }

    pub fn functions(&self) -> &[FgFunction] {
        &self.functions
    }

    pub fn alphabet(&self, variable: &str) -> Option<&Alphabet> {
        self.variables.iter().find(|(v, _)| v == variable).map(|(_, a)| a)
    }

    fn sorted_domain(&self) -> Result<ProductDomain> {
        let mut axes: Vec<Axis> = self
            .variables
            .iter()
            .map(|(v, a)| Axis::new(v.clone(), a.clone()))
            .collect();
        axes.sort_by(|a, b| a.label.cmp(&b.label));
        ProductDomain::new(axes)
    }

    /// The product of all functions over the variables in name order.
    pub fn global_function(&self) -> Result<Factor> {
        let domain = self.sorted_domain()?;
        let labels: Vec<String> = domain.labels().map(str::to_owned).collect();
        let mut factors = vec![Factor::ones(domain)];
        factors.extend(self.functions.iter().map(|f| f.factor.clone()));
        product(&factors)?.permute(&labels)
    }

    fn degree(&self, variable: &str) -> usize {
        self.functions
            .iter()
            .flat_map(|f| &f.neighbors)
            .filter(|n| *n == variable)
            .count()
    }
}

/// A factor graph over group alphabets read as a convolutional product.
#[derive(Clone, Debug, PartialEq)]
pub struct CfgDesc(FactorGraphDesc);

impl CfgDesc {
    pub fn new(desc: FactorGraphDesc) -> Result<Self> {
        if let Some((v, a)) = desc.variables.iter().find(|(_, a)| a.as_group().is_none()) {
            return Err(NfgError::InvalidAlphabet(format!(
                "variable `{v}` has non-group alphabet {a}"
            )));
        }
        Ok(Self(desc))
    }

    pub fn desc(&self) -> &FactorGraphDesc {
        &self.0
    }

    /// The convolutional product by direct definition: every function
    /// contributes an argument tuple and each variable is the group sum of
    /// the arguments bound to it.
    pub fn convolution(&self) -> Result<Factor> {
        let domain = self.0.sorted_domain()?;
        let labels: Vec<String> = domain.labels().map(str::to_owned).collect();
        let groups: Vec<_> = domain
            .axes()
            .iter()
            .map(|a| a.alphabet.as_group().expect("checked").clone())
            .collect();
        let slots: Vec<Vec<usize>> = self
            .0
            .functions
            .iter()
            .map(|f| {
                f.neighbors
                    .iter()
                    .map(|n| labels.iter().position(|l| l == n).expect("known"))
                    .collect()
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); domain.size()];
        let mut sums = vec![0usize; labels.len()];
        convolve_rec(
            &self.0.functions,
            &slots,
            &groups,
            0,
            Complex64::new(1.0, 0.0),
            &mut sums,
            &domain,
            &mut out,
        );
        Factor::new(domain, out)
    }
}

#[allow(clippy::too_many_arguments)]
fn convolve_rec(
    functions: &[FgFunction],
    slots: &[Vec<usize>],
    groups: &[crate::algebra::GroupAlphabet],
    k: usize,
    weight: Complex64,
    sums: &mut Vec<usize>,
    domain: &ProductDomain,
    out: &mut [Complex64],
) {
    if k == functions.len() {
        out[domain.linear_index(sums).expect("in range")] += weight;
        return;
    }
    let f = &functions[k].factor;
    for (i, &v) in f.values().iter().enumerate() {
        if v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let coords = f.domain().coords(i);
        let saved = sums.clone();
        for (&slot, &c) in slots[k].iter().zip(&coords) {
            sums[slot] = groups[slot].add(sums[slot], c).expect("in range");
        }
        convolve_rec(functions, slots, groups, k + 1, weight * v, sums, domain, out);
        *sums = saved;
    }
}

/// Interface vertex per variable (indicator `kind` with the half edge on
/// `arg1`), latent vertex per function; internal edges `{function}:{variable}`.
fn bipartite_nfg(desc: &FactorGraphDesc, kind: IndicatorKind) -> Result<NfgGraph> {
    let mut nd = NfgDescription::new();
    let mut next = BTreeMap::new();
    for (v, a) in &desc.variables {
        let f = indicator_table(kind, a, 1 + desc.degree(v))?;
        nd = nd.vertex(v.clone(), f).half(v.clone(), (v.clone(), arg(1)));
        next.insert(v.as_str(), 2);
    }
    for f in &desc.functions {
        nd = nd.vertex(f.name.clone(), f.factor.clone());
        for (axis, v) in f.factor.labels().into_iter().zip(&f.neighbors) {
            let slot = next.get_mut(v.as_str()).expect("known variable");
            nd = nd.internal(
                format!("{}:{}", f.name, v),
                (f.name.clone(), axis),
                (v.clone(), arg(*slot)),
            );
            *slot += 1;
        }
    }
    nd.validate()
}

/// Builds the constrained model of a factor graph: an equality interface per variable.
pub fn fg_to_nfg(desc: &FactorGraphDesc) -> Result<NfgGraph> {
    bipartite_nfg(desc, IndicatorKind::Equality)
}

/// Builds the generative model of a convolutional factor graph: a sum interface per variable.
pub fn cfg_to_nfg(desc: &CfgDesc) -> Result<NfgGraph> {
    bipartite_nfg(&desc.0, IndicatorKind::Sum)
}

/// Reads an NFG model back as a bipartite description.
///
/// Each interface becomes the variable named by its half edge and each latent
/// a function named by its vertex. A degree-1 interface that is not `identity`
/// becomes a unary function named by its vertex.
fn bipartite_desc(
    g: &NfgGraph,
    tol: f64,
    is_glue: impl Fn(&Factor, &str, &Alphabet) -> bool,
    identity: IndicatorKind,
    glue_name: &str,
    allow_repeats: bool,
) -> Result<FactorGraphDesc> {
    let flags = classify(g, tol);
    if !flags.nfg_model {
        return Err(NfgError::Precondition("not an NFG model".into()));
    }
    let mut variables = Vec::new();
    let mut functions = Vec::new();
    let mut var_of = BTreeMap::new();
    for i in &flags.interface_set {
        let (f, pivot) = interface_view(g, i)?;
        let alphabet = g.half_edge_named(&pivot)?.alphabet.clone();
        if f.rank() == 1 {
            let unit = indicator_table(identity, &alphabet, 1)?;
            if f.values() != unit.values() {
                let factor = f.with_alphabet(&pivot, alphabet.clone())?;
                functions.push(FgFunction::new(i.clone(), factor, &[pivot.as_str()]));
            }
        } else if !is_glue(&f, &pivot, &alphabet) {
            return Err(NfgError::Precondition(format!("interface `{i}` is not {glue_name}")));
        }
        var_of.insert(i.clone(), pivot.clone());
        variables.push((pivot, alphabet));
    }
    for j in &flags.latent_set {
        let mut f = g.labeled_factor(j)?;
        let mut neighbors: Vec<String> = Vec::new();
        for t in f.labels() {
            let e = g.edge(&t)?;
            let i = &e.other(j).expect("internal edge of a latent").vertex;
            let v = var_of[i].clone();
            if neighbors.contains(&v) {
                if !allow_repeats {
                    return Err(NfgError::Precondition(format!("`{j}` has several edges to `{i}`")));
                }
                f = f.diagonal(&v, &t)?;
            } else {
                f = f.relabel(&t, &v)?;
                neighbors.push(v);
            }
        }
        let labels = f.labels();
        functions.push(FgFunction::new(j.clone(), f, &labels));
    }
    variables.sort_by(|a, b| a.0.cmp(&b.0));
    functions.sort_by(|a, b| a.name.cmp(&b.name));
    FactorGraphDesc::new(variables, functions)
}

/// Replaces each equality interface of a constrained model by a variable.
pub fn nfg_to_fg(g: &NfgGraph, tol: f64) -> Result<FactorGraphDesc> {
    let is_eq = |f: &Factor, _: &str, _: &Alphabet| {
        crate::indicators::identify_indicator(f).is_some_and(|(k, _)| k == IndicatorKind::Equality)
    };
    bipartite_desc(g, tol, is_eq, IndicatorKind::Equality, "an equality indicator", true)
}

/// Replaces each sum interface of a generative model by a variable.
pub fn nfg_to_cfg(g: &NfgGraph, tol: f64) -> Result<CfgDesc> {
    let is_sum = |f: &Factor, pivot: &str, a: &Alphabet| {
        if a.as_group().is_none() {
            return false;
        }
        let mut order = vec![pivot.to_owned()];
        order.extend(f.labels().into_iter().filter(|l| l != pivot));
        match (f.permute(&order), indicator_table(IndicatorKind::Sum, a, f.rank())) {
            (Ok(p), Ok(t)) => p.values() == t.values(),
            _ => false,
        }
    };
    CfgDesc::new(bipartite_desc(
        g,
        tol,
        is_sum,
        IndicatorKind::Sum,
        "a sum indicator on its half edge",
        false,
    )?)
}

/// Turns every interface of a constrained model into an equality indicator.
///
/// Each interface splits via its half edge into bivariates `B_t(x, s_t)`; the
/// latent across edge `t` absorbs `B_t`. Degree-1 interfaces are kept as is.
/// Vertices, edges and the exterior function are unchanged.
pub fn normalize_constrained(g: &NfgGraph, tol: f64) -> Result<NfgGraph> {
    let flags = classify(g, tol);
    if !flags.nfg_model || !flags.constrained {
        return Err(NfgError::Precondition("not a constrained NFG model".into()));
    }
    let mut factors: BTreeMap<String, Factor> = g
        .vertex_ids()
        .map(|v| Ok((v.to_owned(), g.labeled_factor(v)?)))
        .collect::<Result<_>>()?;
    for i in &flags.interface_set {
        let (f, pivot) = interface_view(g, i)?;
        if f.rank() < 2 {
            continue;
        }
        let parts = split_decompose(&f, &pivot, tol)
            .ok_or_else(|| NfgError::Precondition(format!("interface `{i}` does not split")))?;
        let alphabet = g.half_edge_named(&pivot)?.alphabet.clone();
        let mut labels = vec![pivot.clone()];
        for b in parts {
            let t = b.labels().into_iter().find(|l| *l != pivot).expect("bivariate");
            let j = g.edge(&t)?.other(i).expect("internal").vertex.clone();
            let y = format!("{t}#y");
            let b = b.relabel(&pivot, &y)?;
            let absorbed = contract(&[factors[&j].clone(), b])?.relabel(&y, &t)?;
            factors.insert(j, absorbed);
            labels.push(t);
        }
        let eq = indicator_table(IndicatorKind::Equality, &alphabet, labels.len())?;
        factors.insert(
            i.clone(),
            eq.relabel_with(|l| {
                let k: usize = l[3..].parse().expect("argN");
                labels[k - 1].clone()
            })?,
        );
    }
    from_labeled(factors, g.edges())
}

/// A factor graph whose functions are cumulative distribution functions.
#[derive(Clone, Debug, PartialEq)]
pub struct CdnDesc(FactorGraphDesc);

impl CdnDesc {
    pub fn new(desc: FactorGraphDesc, tol: f64) -> Result<Self> {
        for f in &desc.functions {
            check_cdf_axioms(&f.factor, tol)
                .map_err(|e| NfgError::Precondition(format!("function `{}`: {e}", f.name)))?;
        }
        Ok(Self(desc))
    }

    pub fn desc(&self) -> &FactorGraphDesc {
        &self.0
    }

    /// The product of the local CDFs.
    pub fn joint_cdf(&self) -> Result<Factor> {
        self.0.global_function()
    }
}

/// Checks nonnegativity, componentwise monotonicity along every axis and the
/// value 1 at the all-top corner.
pub fn check_cdf_axioms(f: &Factor, tol: f64) -> Result<()> {
    let axes = f.domain().axes();
    let ordered: Vec<_> = axes
        .iter()
        .map(|a| {
            a.alphabet
                .as_ordered()
                .cloned()
                .ok_or_else(|| NfgError::Precondition(format!("axis `{}` is not ordered", a.label)))
        })
        .collect::<Result<_>>()?;
    if !f.is_nonnegative_real(tol) {
        return Err(NfgError::Precondition("negative or complex value".into()));
    }
    let strides = f.domain().strides();
    for (idx, v) in f.values().iter().enumerate() {
        let coords = f.domain().coords(idx);
        for (k, o) in ordered.iter().enumerate() {
            let digits = o.decode(coords[k]);
            for (c, &d) in digits.iter().enumerate() {
                if d + 1 == o.radices()[c] {
                    continue;
                }
                let mut up = digits.clone();
                up[c] += 1;
                let next = idx - coords[k] * strides[k] + o.encode(&up) * strides[k];
                if f.values()[next].re < v.re - tol {
                    return Err(NfgError::Precondition(format!("decreasing along `{}`", axes[k].label)));
                }
            }
        }
    }
    let top: Vec<usize> = ordered.iter().map(|o| o.top()).collect();
    let corner = f.get(&top)?;
    if (corner - Complex64::new(1.0, 0.0)).norm() > tol {
        return Err(NfgError::Precondition(format!("top-corner value {corner} is not 1")));
    }
    Ok(())
}

/// The vertex id of the cumulus transformer on variable `v`.
fn cumulus_id(v: &str) -> String {
    format!("{v}#cum")
}

/// Builds the cumulus-transformed max model of a set of distributions.
///
/// Each variable `v` gets a max indicator `v` (head towards the transformer,
/// `[x = 0]` when no function uses `v`) and a cumulus vertex `v#cum` carrying
/// the half edge; each function is a latent vertex. The exterior is the
/// product of the CDFs of the functions.
pub fn cdn_transformed_model(desc: &FactorGraphDesc) -> Result<NfgGraph> {
    let mut nd = NfgDescription::new();
    let mut next = BTreeMap::new();
    for (v, a) in &desc.variables {
        let k = desc.degree(v);
        let interface = if k == 0 {
            make_indicator(IndicatorKind::Evaluation(0), a, 1)?
        } else {
            make_indicator(IndicatorKind::Max, a, 1 + k)?
        };
        let c = cumulus_id(v);
        nd = nd
            .vertex(v.clone(), interface)
            .vertex(c.clone(), make_kernel(KernelKind::Cumulus, a)?)
            .internal(format!("{v}#inner"), (v.clone(), arg(1)), (c.clone(), arg(2)))
            .half(v.clone(), (c, arg(1)));
        next.insert(v.as_str(), 2);
    }
    for f in &desc.functions {
        nd = nd.vertex(f.name.clone(), f.factor.clone());
        for (axis, v) in f.factor.labels().into_iter().zip(&f.neighbors) {
            let slot = next.get_mut(v.as_str()).expect("known variable");
            nd = nd.internal(
                format!("{}:{}", f.name, v),
                (f.name.clone(), axis),
                (v.clone(), arg(*slot)),
            );
            *slot += 1;
        }
    }
    nd.validate()
}

/// The transformed model of a CDN: each CDF is difference-transformed into
/// the distribution it accumulates, then dressed as in [`cdn_transformed_model`].
pub fn cdn_to_nfg(cdn: &CdnDesc) -> Result<NfgGraph> {
    let desc = &cdn.0;
    let mut functions = Vec::with_capacity(desc.functions.len());
    for f in &desc.functions {
        let labels = f.factor.labels();
        let axes: Vec<&str> = labels.iter().map(String::as_str).collect();
        let (p, _) = fast_axis_transform(&f.factor, KernelKind::Difference, &axes)?;
        functions.push(FgFunction { factor: p, ..f.clone() });
    }
    cdn_transformed_model(&FactorGraphDesc {
        variables: desc.variables.clone(),
        functions,
    })
}

/// Reads a cumulus-transformed max model as a CDN.
///
/// Every half edge must hang on a cumulus transformer `g(inner, outer) =
/// [inner <= outer]` fed by a max indicator headed at the transformer; every
/// other vertex must be a probability distribution adjacent only to max
/// indicators. The CDN functions are the cumulus transforms of those
/// distributions. All violations are reported together.
pub fn to_cdn(g: &NfgGraph, tol: f64) -> Result<CdnDesc> {
    let mut problems = Vec::new();
    let mut structural = BTreeSet::new();
    let mut variables = Vec::new();
    // edge into a latent → variable
    let mut var_of_edge: BTreeMap<String, (String, String)> = BTreeMap::new();
    for h in g.half_edges() {
        let x = h.label().to_owned();
        let c = &h.endpoints()[0].vertex;
        let Some(ordered) = h.alphabet.as_ordered() else {
            problems.push(format!("variable `{x}` has no ordered alphabet"));
            continue;
        };
        let alphabet = Alphabet::Ordered(ordered.clone());
        let incident = g.incident(c)?;
        let inner = incident.iter().find(|e| e.id != h.id && !e.is_half() && !e.is_loop());
        let (Some(inner), 2) = (inner, incident.len()) else {
            problems.push(format!("half edge `{x}` has no cumulus transformer"));
            continue;
        };
        let kernel = make_kernel(KernelKind::Cumulus, &alphabet)?.relabel_with(|l| {
            if l == "arg1" {
                x.clone()
            } else {
                inner.id.clone()
            }
        })?;
        let is_cumulus = g
            .labeled_factor(c)
            .and_then(|f| f.abs_diff(&kernel))
            .is_ok_and(|d| d <= tol);
        if !is_cumulus {
            problems.push(format!("`{c}` is not a cumulus transformer on `{x}`"));
            continue;
        }
        let m = inner.other(c).expect("internal").vertex.clone();
        let mf = g.labeled_factor(&m)?;
        let table = if mf.rank() == 1 {
            make_indicator(IndicatorKind::Evaluation(0), &alphabet, 1)
        } else {
            make_indicator(IndicatorKind::Max, &alphabet, mf.rank())
        }?;
        let mut order = vec![inner.id.clone()];
        order.extend(mf.labels().into_iter().filter(|l| *l != inner.id));
        let expected = table.relabel_with(|l| {
            let k: usize = l[3..].parse().expect("argN");
            order[k - 1].clone()
        })?;
        let is_max = g.half_edges_at(&m)?.is_empty() && mf.abs_diff(&expected).is_ok_and(|d| d <= tol);
        if !is_max {
            problems.push(format!("interface `{m}` is not a max indicator headed at `{c}`"));
            continue;
        }
        structural.insert(c.clone());
        structural.insert(m.clone());
        for t in order.into_iter().skip(1) {
            var_of_edge.insert(t, (m.clone(), x.clone()));
        }
        variables.push((x, alphabet));
    }
    let mut functions = Vec::new();
    for j in g.vertex_ids().filter(|v| !structural.contains(*v)) {
        if !g.half_edges_at(j)?.is_empty() {
            problems.push(format!("latent `{j}` carries a half edge"));
            continue;
        }
        let mut f = g.labeled_factor(j)?;
        let total = f.sum_all();
        if !f.is_nonnegative_real(tol) || (total - Complex64::new(1.0, 0.0)).norm() > tol {
            problems.push(format!("latent `{j}` is not a probability distribution"));
            continue;
        }
        let mut missing = false;
        for t in f.labels() {
            match var_of_edge.get(&t) {
                Some((_, x)) => {
                    let a = &variables.iter().find(|(v, _)| v == x).expect("recorded").1;
                    f = f.with_alphabet(&t, a.clone())?;
                }
                None => missing = true,
            }
        }
        if missing {
            problems.push(format!(
                "latent `{j}` is adjacent to a vertex other than a max indicator"
            ));
            continue;
        }
        let labels = f.labels();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let (mut cdf, _) = fast_axis_transform(&f, KernelKind::Cumulus, &refs)?;
        let mut neighbors: Vec<String> = Vec::new();
        for t in labels {
            let x = var_of_edge[&t].1.clone();
            if neighbors.contains(&x) {
                cdf = cdf.diagonal(&x, &t)?;
            } else {
                cdf = cdf.relabel(&t, &x)?;
                neighbors.push(x);
            }
        }
        functions.push(FgFunction::new(j, cdf, &neighbors));
    }
    for (t, (m, _)) in &var_of_edge {
        let other = &g.edge(t)?.other(m).expect("internal").vertex;
        if structural.contains(other) {
            problems.push(format!(
                "max indicator `{m}` is adjacent to structural vertex `{other}`"
            ));
        }
    }
    if !problems.is_empty() {
        return Err(NfgError::Precondition(problems.join("; ")));
    }
    variables.sort_by(|a, b| a.0.cmp(&b.0));
    CdnDesc::new(FactorGraphDesc::new(variables, functions)?, tol)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleMode {
    /// Generative when the model qualifies, otherwise constrained.
    #[default]
    Auto,
    Constrained,
    Generative,
}

/// A categorical distribution per row; `None` for rows without mass.
type Rows = Vec<Option<WeightedIndex<f64>>>;

fn weighted(weights: &[f64]) -> Option<WeightedIndex<f64>> {
    WeightedIndex::new(weights.iter().map(|w| w.max(0.0))).ok()
}

fn real_parts(f: &Factor, what: &str, tol: f64) -> Result<Vec<f64>> {
    if !f.is_nonnegative_real(tol) {
        return Err(NfgError::Precondition(format!("{what} has negative or complex values")));
    }
    Ok(f.values().iter().map(|v| v.re.max(0.0)).collect())
}

fn rows_of(f: &Factor, what: &str, tol: f64) -> Result<Rows> {
    let vals = real_parts(f, what, tol)?;
    let width = f.domain().axes().last().map_or(1, Axis::size);
    Ok(vals.chunks(width).map(weighted).collect())
}

#[derive(Clone, Debug)]
struct SplitChild {
    slot: usize,
    rows: Rows,
}

#[derive(Clone, Debug)]
struct SplitInterface {
    out: usize,
    prior: WeightedIndex<f64>,
    children: Vec<SplitChild>,
}

#[derive(Clone, Debug)]
struct JointLatent {
    dist: WeightedIndex<f64>,
    slots: Vec<usize>,
    sizes: Vec<usize>,
}

#[derive(Clone, Debug)]
struct ConditionalInterface {
    out: usize,
    parents: Vec<usize>,
    sizes: Vec<usize>,
    rows: Rows,
}

#[derive(Clone, Debug)]
enum Plan {
    Constrained {
        interfaces: Vec<SplitInterface>,
        /// Latent product scaled to maximum 1, over `h_slots`.
        h: Vec<f64>,
        h_slots: Vec<usize>,
        h_sizes: Vec<usize>,
        /// Product of the interface masses divided by the scale of `h`.
        proposal_mass: f64,
    },
    Generative {
        latents: Vec<JointLatent>,
        interfaces: Vec<ConditionalInterface>,
    },
}

/// A prepared sampler for the externals of a constrained or generative model.
#[derive(Clone, Debug)]
pub struct Sampler {
    names: Vec<String>,
    internal: usize,
    plan: Plan,
}

/// Samples with the total number of proposals drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRun {
    pub names: Vec<String>,
    pub samples: Vec<Vec<usize>>,
    pub attempts: u64,
}

impl SampleRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            return 0.0;
        }
        self.samples.len() as f64 / self.attempts as f64
    }
}

fn mixed_index(state: &[usize], slots: &[usize], sizes: &[usize]) -> usize {
    slots.iter().zip(sizes).fold(0, |acc, (&s, &n)| acc * n + state[s])
}

impl Sampler {
    pub fn new(g: &NfgGraph, mode: SampleMode, tol: f64) -> Result<Self> {
        let flags = classify(g, tol);
        if !flags.nfg_model {
            return Err(NfgError::Precondition("not an NFG model".into()));
        }
        let generative = match mode {
            SampleMode::Auto if flags.generative => true,
            SampleMode::Auto if flags.constrained => false,
            SampleMode::Auto => {
                return Err(NfgError::Precondition(
                    "model is neither constrained nor generative".into(),
                ))
            }
            SampleMode::Generative if !flags.generative => {
                return Err(NfgError::Precondition("model is not generative".into()))
            }
            SampleMode::Constrained if !flags.constrained => {
                return Err(NfgError::Precondition("model is not constrained".into()))
            }
            m => m == SampleMode::Generative,
        };
        let names = g.external_names();
        let slots: BTreeMap<String, usize> = g.internal_edges().enumerate().map(|(k, e)| (e.id.clone(), k)).collect();
        let internal = slots.len();
        let out_of = |pivot: &str| names.iter().position(|n| n == pivot).expect("external");
        let plan = if generative {
            let mut latents = Vec::new();
            for j in &flags.latent_set {
                let f = g.labeled_factor(j)?;
                let w = real_parts(&f, &format!("latent `{j}`"), tol)?;
                if f.rank() == 0 {
                    continue;
                }
                let dist = weighted(&w).ok_or(NfgError::ZeroMass(0.0))?;
                let labels = f.labels();
                latents.push(JointLatent {
                    dist,
                    slots: labels.iter().map(|l| slots[l]).collect(),
                    sizes: f.domain().sizes(),
                });
            }
            let mut interfaces = Vec::new();
            for i in &flags.interface_set {
                let (f, pivot) = interface_view(g, i)?;
                let mut order: Vec<String> = f.labels().into_iter().filter(|l| *l != pivot).collect();
                order.push(pivot.clone());
                let f = f.permute(&order)?;
                let rows = rows_of(&f, &format!("interface `{i}`"), tol)?;
                if rows.iter().any(Option::is_none) {
                    return Err(NfgError::Precondition(format!(
                        "interface `{i}` has an empty conditional"
                    )));
                }
                order.pop();
                interfaces.push(ConditionalInterface {
                    out: out_of(&pivot),
                    parents: order.iter().map(|l| slots[l]).collect(),
                    sizes: order.iter().map(|l| f.axis(l).expect("present").size()).collect(),
                    rows,
                });
            }
            Plan::Generative { latents, interfaces }
        } else {
            let mut interfaces = Vec::new();
            let mut proposal_mass = 1.0;
            for i in &flags.interface_set {
                let (f, pivot) = interface_view(g, i)?;
                let what = format!("interface `{i}`");
                real_parts(&f, &what, tol)?;
                let (prior, children) = if f.rank() == 1 {
                    (real_parts(&f, &what, tol)?, Vec::new())
                } else {
                    let parts = split_decompose(&f, &pivot, tol)
                        .ok_or_else(|| NfgError::Precondition(format!("{what} does not split")))?;
                    let mut prior = vec![1.0; f.axis(&pivot)?.size()];
                    let mut children = Vec::new();
                    for b in parts {
                        let t = b.labels().into_iter().find(|l| *l != pivot).expect("bivariate");
                        let b = b.permute(&[pivot.as_str(), t.as_str()])?;
                        let vals = real_parts(&b, &what, tol)?;
                        let width = b.axis(&t)?.size();
                        for (x, row) in vals.chunks(width).enumerate() {
                            prior[x] *= row.iter().sum::<f64>();
                        }
                        children.push(SplitChild {
                            slot: slots[&t],
                            rows: vals.chunks(width).map(weighted).collect(),
                        });
                    }
                    (prior, children)
                };
                proposal_mass *= prior.iter().sum::<f64>();
                let prior =
                    weighted(&prior).ok_or_else(|| NfgError::Precondition(format!("{what} has empty support")))?;
                interfaces.push(SplitInterface {
                    out: out_of(&pivot),
                    prior,
                    children,
                });
            }
            let latents: Vec<Factor> = flags
                .latent_set
                .iter()
                .map(|j| g.labeled_factor(j))
                .collect::<Result<_>>()?;
            let h = product(&latents)?;
            let mut hv = real_parts(&h, "latent product", tol)?;
            let max = hv.iter().copied().fold(0.0, f64::max);
            if max <= 0.0 {
                return Err(NfgError::Precondition("latent product has empty support".into()));
            }
            hv.iter_mut().for_each(|v| *v /= max);
            Plan::Constrained {
                interfaces,
                h: hv,
                h_slots: h.labels().iter().map(|l| slots[l]).collect(),
                h_sizes: h.domain().sizes(),
                proposal_mass: proposal_mass * max,
            }
        };
        Ok(Self { names, internal, plan })
    }

    /// External names, in the order of each drawn assignment.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_generative(&self) -> bool {
        matches!(self.plan, Plan::Generative { .. })
    }

    /// Probability that a constrained proposal is accepted, given the total
    /// exterior mass; always 1 for generative sampling.
    pub fn expected_acceptance(&self, total_mass: f64) -> f64 {
        match &self.plan {
            Plan::Constrained { proposal_mass, .. } => total_mass / proposal_mass,
            Plan::Generative { .. } => 1.0,
        }
    }

    /// Draws one external assignment and the number of proposals it took.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, max_rejects: u64) -> Result<(Vec<usize>, u64)> {
        let mut x = vec![0; self.names.len()];
        let mut s = vec![0; self.internal];
        match &self.plan {
            Plan::Generative { latents, interfaces } => {
                for l in latents {
                    let mut idx = l.dist.sample(rng);
                    for (&slot, &n) in l.slots.iter().zip(&l.sizes).rev() {
                        s[slot] = idx % n;
                        idx /= n;
                    }
                }
                for i in interfaces {
                    let row = mixed_index(&s, &i.parents, &i.sizes);
                    x[i.out] = i.rows[row].as_ref().expect("checked nonempty").sample(rng);
                }
                Ok((x, 1))
            }
            Plan::Constrained {
                interfaces,
                h,
                h_slots,
                h_sizes,
                ..
            } => {
                for attempt in 1..=max_rejects.saturating_add(1) {
                    for i in interfaces {
                        let v = i.prior.sample(rng);
                        x[i.out] = v;
                        for c in &i.children {
                            s[c.slot] = c.rows[v].as_ref().expect("row of a drawn value has mass").sample(rng);
                        }
                    }
                    let accept = h[mixed_index(&s, h_slots, h_sizes)];
                    if accept >= 1.0 || rng.gen::<f64>() < accept {
                        return Ok((x, attempt));
                    }
                }
                Err(NfgError::TooManyRejections(max_rejects))
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, max_rejects: u64) -> Result<SampleRun> {
        let mut samples = Vec::with_capacity(count);
        let mut attempts = 0;
        for _ in 0..count {
            let (x, n) = self.draw(rng, max_rejects)?;
            samples.push(x);
            attempts += n;
        }
        Ok(SampleRun {
            names: self.names.clone(),
            samples,
            attempts,
        })
    }
}

/// Draws `count` external assignments from `g`.
pub fn sample<R: Rng + ?Sized>(
    g: &NfgGraph,
    mode: SampleMode,
    rng: &mut R,
    count: usize,
    max_rejects: u64,
    tol: f64,
) -> Result<SampleRun> {
    Sampler::new(g, mode, tol)?.run(rng, count, max_rejects)
}

/// The exterior as a probability table: real parts divided by their sum.
pub fn normalized_distribution(exterior: &Factor, tol: f64) -> Result<Vec<f64>> {
    let vals = real_parts(exterior, "exterior", tol)?;
    let total: f64 = vals.iter().sum();
    if total <= 1e-12 {
        return Err(NfgError::ZeroMass(total));
    }
    Ok(vals.iter().map(|v| v / total).collect())
}

/// Total-variation distance between the empirical law of `run` and the normalized exterior.
pub fn total_variation(run: &SampleRun, exterior: &Factor, tol: f64) -> Result<f64> {
    let ext = exterior.permute(&run.names)?;
    let p = normalized_distribution(&ext, tol)?;
    let mut counts = vec![0u64; p.len()];
    for x in &run.samples {
        counts[ext.domain().linear_index(x)?] += 1;
    }
    let n = run.samples.len().max(1) as f64;
    Ok(0.5
        * p.iter()
            .zip(&counts)
            .map(|(p, &c)| (p - c as f64 / n).abs())
            .sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndependenceKind {
    /// `X_A ⟂ X_B | X_S`
    Conditional,
    /// `X_A ⟂ X_B`
    Marginal,
    /// No claim.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceVerdict {
    pub kind: IndependenceKind,
    /// The separating external variables, when separation holds.
    pub witness: Option<BTreeSet<String>>,
}

/// Independence implied by graph separation.
///
/// `a`, `b` and `s` are sets of external variable names. Separation by `s`
/// gives a conditional claim for constrained models and a marginal claim for
/// (extended) generative ones. Without separation the verdict is unknown,
/// which asserts nothing.
pub fn independence(
    g: &NfgGraph,
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    s: &BTreeSet<String>,
    tol: f64,
) -> Result<IndependenceVerdict> {
    let flags = classify(g, tol);
    if !flags.nfg_model {
        return Err(NfgError::Precondition("not an NFG model".into()));
    }
    let to_vertices = |set: &BTreeSet<String>| -> Result<BTreeSet<String>> {
        set.iter()
            .map(|x| Ok(g.half_edge_named(x)?.endpoints()[0].vertex.clone()))
            .collect()
    };
    let (va, vb, vs) = (to_vertices(a)?, to_vertices(b)?, to_vertices(s)?);
    let unknown = IndependenceVerdict {
        kind: IndependenceKind::Unknown,
        witness: None,
    };
    if !separated(g, &va, &vb, &vs)? {
        return Ok(unknown);
    }
    let kind = if flags.constrained {
        IndependenceKind::Conditional
    } else if flags.extended_generative {
        IndependenceKind::Marginal
    } else {
        return Ok(unknown);
    };
    Ok(IndependenceVerdict {
        kind,
        witness: Some(s.clone()),
    })
}

/// Largest factorization residual of the normalized exterior.
///
/// With `conditional`, `|p(a,b,s) - p(a,s) p(b,s) / p(s)|` over states with
/// `p(s) > 1e-12`; otherwise `|p(a,b) - p(a) p(b)|`. Other externals are summed out.
pub fn independence_residual(
    exterior: &Factor,
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    s: &BTreeSet<String>,
    conditional: bool,
    tol: f64,
) -> Result<f64> {
    let s: BTreeSet<String> = if conditional { s.clone() } else { BTreeSet::new() };
    let keep: Vec<String> = a.iter().chain(b).chain(&s).cloned().collect();
    let p = normalized_distribution(exterior, tol)?;
    let p = Factor::from_real(exterior.domain().clone(), &p)?;
    let marginal = |labels: &[String]| sum_of_products(std::slice::from_ref(&p), labels).map(|(f, _)| f);
    let joint = marginal(&keep)?;
    let pick = |set: &[&BTreeSet<String>]| -> Vec<String> { set.iter().flat_map(|x| x.iter().cloned()).collect() };
    let p_as = marginal(&pick(&[a, &s]))?;
    let p_bs = marginal(&pick(&[b, &s]))?;
    let p_s = marginal(&pick(&[&s]))?;
    let mut worst: f64 = 0.0;
    for (idx, v) in joint.values().iter().enumerate() {
        let coords = joint.domain().coords(idx);
        let assignment: Vec<(&str, usize)> = keep.iter().map(String::as_str).zip(coords).collect();
        let at = |f: &Factor| -> Result<f64> {
            let sub: Vec<(&str, usize)> = assignment
                .iter()
                .copied()
                .filter(|(l, _)| f.domain().position(l).is_some())
                .collect();
            Ok(f.at(&sub)?.re)
        };
        let ps = at(&p_s)?;
        if ps <= 1e-12 {
            continue;
        }
        let r = (v.re - at(&p_as)? * at(&p_bs)? / ps).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}
