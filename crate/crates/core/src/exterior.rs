//! Evaluating the exterior function: exhaustive enumeration, pairwise
//! elimination with operation counts, and sum-product message passing on trees.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;

use crate::algebra::Alphabet;
use crate::error::{NfgError, Result};
use crate::factor::{contract_counted, product, sum_of_products, Factor};
use crate::indicators::{identify_indicator, make_indicator, make_kernel, IndicatorKind, KernelKind};
use crate::nfg::{EdgeKind, NfgDescription, NfgGraph};

/// Default cap on the joint state count for exhaustive evaluation.
pub const BRUTEFORCE_CAP: u128 = 1 << 24;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn joint_states(g: &NfgGraph) -> u128 {
    g.edges().map(|e| e.alphabet.size() as u128).product()
}

/// `Z_G` by enumerating every joint edge assignment, with the default cap.
pub fn exterior_bruteforce(g: &NfgGraph) -> Result<Factor> {
    exterior_bruteforce_capped(g, BRUTEFORCE_CAP)
}

pub fn exterior_bruteforce_capped(g: &NfgGraph, cap: u128) -> Result<Factor> {
    let states = joint_states(g);
    if states > cap {
        return Err(NfgError::TooLarge { states, cap });
    }
    let (z, _) = sum_of_products(&g.labeled_factors()?, &g.external_names())?;
    Ok(z)
}

/// Marginal exterior function on internal edge `edge` (kept alongside the external axes).
pub fn edge_marginal_bruteforce(g: &NfgGraph, edge: &str) -> Result<Factor> {
    let e = g.edge(edge)?;
    let states = joint_states(g);
    if states > BRUTEFORCE_CAP {
        return Err(NfgError::TooLarge {
            states,
            cap: BRUTEFORCE_CAP,
        });
    }
    let mut out = vec![e.label().to_owned()];
    out.extend(g.external_names());
    Ok(sum_of_products(&g.labeled_factors()?, &out)?.0)
}

/// Which indicator kinds get low-complexity kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSet {
    pub equality: bool,
    pub sum: bool,
    pub max: bool,
}

impl KernelSet {
    pub fn none() -> Self {
        Self {
            equality: false,
            sum: false,
            max: false,
        }
    }

    pub fn all() -> Self {
        Self {
            equality: true,
            sum: true,
            max: true,
        }
    }

    fn admits(&self, kind: IndicatorKind) -> bool {
        match kind {
            IndicatorKind::Equality => self.equality,
            IndicatorKind::Sum => self.sum,
            IndicatorKind::Max => self.max,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderItem {
    /// Merge two current vertices; the result keeps the first id.
    Pair(String, String),
    /// Merge a vertex with each of its current neighbours in id order.
    Block(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    Greedy,
    /// Follow the given merges, then finish greedily.
    Given(Vec<OrderItem>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOptions {
    pub strategy: Strategy,
    pub kernels: KernelSet,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Greedy,
            kernels: KernelSet::none(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKernel {
    Dense,
    /// Outer product of disconnected pieces.
    Outer,
    Specialized(IndicatorKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliminationStep {
    /// Merged vertices; the first id survives.
    pub vertices: Vec<String>,
    /// Edge labels summed out in this step.
    pub eliminated: Vec<String>,
    pub ops: u64,
    pub kernel: StepKernel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliminationReport {
    pub result: Factor,
    pub steps: Vec<EliminationStep>,
    pub total_ops: u64,
}

/// Cost of merging two factors: the joint state count over the union of their labels.
pub fn merge_cost(a: &Factor, b: &Factor) -> u64 {
    let mut seen = BTreeSet::new();
    let mut cost = 1u64;
    for ax in a.domain().axes().iter().chain(b.domain().axes()) {
        if seen.insert(ax.label.as_str()) {
            cost = cost.saturating_mul(ax.size() as u64);
        }
    }
    cost
}

struct Work {
    factors: BTreeMap<String, Factor>,
    steps: Vec<EliminationStep>,
}

impl Work {
    fn shared(&self, u: &str, v: &str) -> Vec<String> {
        let fv = &self.factors[v];
        self.factors[u]
            .domain()
            .labels()
            .filter(|l| fv.domain().position(l).is_some())
            .map(str::to_owned)
            .collect()
    }

    fn neighbors(&self, u: &str) -> Vec<String> {
        self.factors
            .keys()
            .filter(|v| v.as_str() != u && !self.shared(u, v).is_empty())
            .cloned()
            .collect()
    }

    fn merge(&mut self, u: &str, v: &str, kernel: StepKernel) -> Result<()> {
        let eliminated = self.shared(u, v);
        let fu = self.factors.remove(u).expect("present");
        let fv = self.factors.remove(v).expect("present");
        let (f, ops) = contract_counted(&[fu, fv])?;
        self.factors.insert(u.to_owned(), f);
        self.steps.push(EliminationStep {
            vertices: vec![u.to_owned(), v.to_owned()],
            eliminated,
            ops,
            kernel,
        });
        Ok(())
    }

    fn greedy_pair(&self) -> Option<(String, String)> {
        let ids: Vec<&String> = self.factors.keys().collect();
        let mut best: Option<(u64, String, String)> = None;
        for (i, u) in ids.iter().enumerate() {
            for v in &ids[i + 1..] {
                if self.shared(u, v).is_empty() {
                    continue;
                }
                let c = merge_cost(&self.factors[*u], &self.factors[*v]);
                if best.as_ref().map(|b| c < b.0).unwrap_or(true) {
                    best = Some((c, (*u).clone(), (*v).clone()));
                }
            }
        }
        best.map(|(_, u, v)| (u, v))
    }

    /// Applies one specialized star kernel if any vertex qualifies.
    fn try_specialized(&mut self, kernels: KernelSet) -> Result<bool> {
        let ids: Vec<String> = self.factors.keys().cloned().collect();
        for c in ids {
            let f = &self.factors[&c];
            let Some((kind, head)) = identify_indicator(f) else {
                continue;
            };
            if !kernels.admits(kind) {
                continue;
            }
            // leaves: univariate vertices attached to one of c's labels
            let mut leaves: Vec<(String, String)> = Vec::new();
            let mut open: Vec<String> = Vec::new();
            for l in f.domain().labels() {
                let leaf = self
                    .factors
                    .iter()
                    .find(|(id, g)| **id != c && g.rank() == 1 && g.domain().position(l).is_some());
                match leaf {
                    Some((id, _)) => leaves.push((l.to_owned(), id.clone())),
                    None => open.push(l.to_owned()),
                }
            }
            if leaves.is_empty() || open.len() != 1 {
                continue;
            }
            let out = open.pop().expect("one");
            if kind != IndicatorKind::Equality && out != head {
                continue;
            }
            let alphabet = f.axis(&out)?.alphabet.clone();
            let tables: Vec<Vec<Complex64>> = leaves
                .iter()
                .map(|(_, id)| self.factors[id].values().to_vec())
                .collect();
            let (values, ops) = star_kernel(kind, &alphabet, &tables)?;
            let domain = crate::algebra::make_product_domain([(out.clone(), alphabet)])?;
            let mut vertices = vec![c.clone()];
            for (_, id) in &leaves {
                self.factors.remove(id);
                vertices.push(id.clone());
            }
            self.factors.insert(c.clone(), Factor::new(domain, values)?);
            self.steps.push(EliminationStep {
                vertices,
                eliminated: leaves.into_iter().map(|(l, _)| l).collect(),
                ops,
                kernel: StepKernel::Specialized(kind),
            });
            return Ok(true);
        }
        Ok(false)
    }
}

/// Combines two univariate tables through a binary indicator: `out[op(a, b)] += x[a] y[b]`.
fn combine(kind: IndicatorKind, alphabet: &Alphabet, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = alphabet.size();
    let mut out = vec![ZERO; n];
    for a in 0..n {
        for b in 0..n {
            let s = match kind {
                IndicatorKind::Sum => alphabet
                    .as_group()
                    .ok_or_else(|| NfgError::InvalidAlphabet("sum needs a group".into()))?
                    .add(a, b)?,
                IndicatorKind::Max => alphabet
                    .as_ordered()
                    .ok_or_else(|| NfgError::InvalidAlphabet("max needs an order".into()))?
                    .max(a, b),
                _ => unreachable!("binary combine is only defined for sum and max"),
            };
            out[s] += x[a] * y[b];
        }
    }
    Ok(out)
}

/// `Σ_t δ(x; t_1..t_n) Π f_i(t_i)` for an equality, sum or max indicator.
///
/// Costs `(n-1)|X|` multiplications for equality and `(n-1)|X|²` for sum and max.
fn star_kernel(kind: IndicatorKind, alphabet: &Alphabet, tables: &[Vec<Complex64>]) -> Result<(Vec<Complex64>, u64)> {
    let n = alphabet.size();
    let mut acc = tables[0].clone();
    let mut ops = 0u64;
    for t in &tables[1..] {
        if kind == IndicatorKind::Equality {
            for (a, b) in acc.iter_mut().zip(t) {
                *a *= b;
            }
            ops += n as u64;
        } else {
            acc = combine(kind, alphabet, &acc, t)?;
            ops += (n * n) as u64;
        }
    }
    Ok((acc, ops))
}

/// Pairwise elimination down to one vertex per component, then outer products.
pub fn eliminate(g: &NfgGraph, options: &EliminationOptions) -> Result<EliminationReport> {
    let mut work = Work {
        factors: g
            .vertex_ids()
            .map(|v| Ok((v.to_owned(), g.labeled_factor(v)?)))
            .collect::<Result<_>>()?,
        steps: Vec::new(),
    };
    if let Strategy::Given(order) = &options.strategy {
        for item in order {
            match item {
                OrderItem::Pair(u, v) => {
                    if !work.factors.contains_key(u) || !work.factors.contains_key(v) || u == v {
                        return Err(NfgError::InvalidOrder(format!("no current vertices `{u}`, `{v}`")));
                    }
                    if work.shared(u, v).is_empty() {
                        return Err(NfgError::InvalidOrder(format!("`{u}` and `{v}` are not adjacent")));
                    }
                    work.merge(u, v, StepKernel::Dense)?;
                }
                OrderItem::Block(c) => {
                    if !work.factors.contains_key(c) {
                        return Err(NfgError::InvalidOrder(format!("no current vertex `{c}`")));
                    }
                    for n in work.neighbors(c) {
                        work.merge(c, &n, StepKernel::Dense)?;
                    }
                }
            }
        }
    }
    loop {
        if work.factors.len() <= 1 {
            break;
        }
        if options.kernels != KernelSet::none() && work.try_specialized(options.kernels)? {
            continue;
        }
        match work.greedy_pair() {
            Some((u, v)) => work.merge(&u, &v, StepKernel::Dense)?,
            None => {
                let ids: Vec<String> = work.factors.keys().take(2).cloned().collect();
                work.merge(&ids[0], &ids[1], StepKernel::Outer)?;
            }
        }
    }
    let result = match work.factors.into_values().next() {
        Some(f) => f.permute(&g.external_names())?,
        None => Factor::scalar(Complex64::new(1.0, 0.0)),
    };
    let total_ops = work.steps.iter().map(|s| s.ops).sum();
    Ok(EliminationReport {
        result,
        steps: work.steps,
        total_ops,
    })
}

/// Block-elimination order: each centre absorbs its neighbours in turn.
pub fn block_order(centres: &[&str]) -> Strategy {
    Strategy::Given(centres.iter().map(|c| OrderItem::Block((*c).to_owned())).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaOptions {
    /// Keep each message at unit max magnitude and track log scales separately.
    pub scaled: bool,
    pub kernels: KernelSet,
}

impl Default for SpaOptions {
    fn default() -> Self {
        Self {
            scaled: false,
            kernels: KernelSet::all(),
        }
    }
}

/// All sum-product messages on a tree and the per-edge marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMarginals {
    /// `(from, to) → μ`, over the joining edge label (plus external axes in the open variant).
    pub messages: BTreeMap<(String, String), Factor>,
    /// Internal edge id → `Z_G(x_e)`.
    pub marginals: BTreeMap<String, Factor>,
    /// Natural-log scales of the stored messages (scaled mode only).
    pub log_scales: BTreeMap<(String, String), f64>,
    pub ops: u64,
}

impl EdgeMarginals {
    /// The message from `from` to `to` with its scale reapplied.
    pub fn message(&self, from: &str, to: &str) -> Option<Factor> {
        let key = (from.to_owned(), to.to_owned());
        let m = self.messages.get(&key)?;
        Some(match self.log_scales.get(&key) {
            Some(s) => m.scale(Complex64::new(s.exp(), 0.0)),
            None => m.clone(),
        })
    }
}

/// Sum-product on a tree without half edges.
pub fn sum_product(g: &NfgGraph, options: &SpaOptions) -> Result<EdgeMarginals> {
    if let Some(e) = g.half_edges().next() {
        return Err(NfgError::Precondition(format!(
            "sum-product expects no half edges; found `{}` (use the open variant)",
            e.id
        )));
    }
    sum_product_open(g, options)
}

/// Sum-product on a tree that may carry half edges; messages keep the
/// external axes accumulated from their subtree.
pub fn sum_product_open(g: &NfgGraph, options: &SpaOptions) -> Result<EdgeMarginals> {
    g.require_tree()?;
    let root = g
        .vertex_ids()
        .next()
        .ok_or_else(|| NfgError::Precondition("empty graph".into()))?
        .to_owned();
    let mut order = vec![root.clone()];
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(v) = queue.pop_front() {
        for n in g.neighbors(&v)? {
            if parent.get(&v) != Some(&n) && !parent.contains_key(&n) && n != root {
                parent.insert(n.clone(), v.clone());
                order.push(n.clone());
                queue.push_back(n);
            }
        }
    }
    let mut out = EdgeMarginals {
        messages: BTreeMap::new(),
        marginals: BTreeMap::new(),
        log_scales: BTreeMap::new(),
        ops: 0,
    };
    let factors: BTreeMap<String, Factor> = g
        .vertex_ids()
        .map(|v| Ok((v.to_owned(), g.labeled_factor(v)?)))
        .collect::<Result<_>>()?;
    let kinds: BTreeMap<String, (IndicatorKind, String)> = g
        .vertex_ids()
        .filter_map(|v| identify_indicator(&factors[v]).map(|k| (v.to_owned(), k)))
        .filter(|(_, (k, _))| options.kernels.admits(*k))
        .collect();

    let mut schedule: Vec<(String, String)> = Vec::new();
    for v in order.iter().rev() {
        if let Some(p) = parent.get(v) {
            schedule.push((v.clone(), p.clone()));
        }
    }
    for v in &order {
        if let Some(p) = parent.get(v) {
            schedule.push((p.clone(), v.clone()));
        }
    }
    for (u, v) in schedule {
        let edge = g.shared_edges(&u, &v)?[0].id.clone();
        let incoming: Vec<(String, String)> = g
            .neighbors(&u)?
            .into_iter()
            .filter(|w| *w != v)
            .map(|w| (w, u.clone()))
            .collect();
        let msgs: Vec<&Factor> = incoming.iter().map(|k| &out.messages[k]).collect();
        let in_scale: f64 = incoming
            .iter()
            .map(|k| out.log_scales.get(k).copied().unwrap_or(0.0))
            .sum();
        let (mut m, ops) = match kinds.get(&u) {
            Some((kind, head)) if msgs.iter().all(|m| m.rank() == 1) && g.half_edges_at(&u)?.is_empty() => {
                shortcut_message(&factors[&u], *kind, head, &edge, &msgs)?
            }
            _ => {
                let mut parts = vec![factors[&u].clone()];
                parts.extend(msgs.into_iter().cloned());
                contract_counted(&parts)?
            }
        };
        out.ops += ops;
        if options.scaled {
            let s = m.max_abs();
            let mut ls = in_scale;
            if s > 0.0 {
                m = m.scale(Complex64::new(1.0 / s, 0.0));
                ls += s.ln();
            }
            out.log_scales.insert((u.clone(), v.clone()), ls);
        }
        out.messages.insert((u, v), m);
    }
    for e in g.internal_edges() {
        let EdgeKind::Internal([a, b]) = &e.kind else {
            unreachable!()
        };
        let k1 = (a.vertex.clone(), b.vertex.clone());
        let k2 = (b.vertex.clone(), a.vertex.clone());
        let mut z = product(&[out.messages[&k1].clone(), out.messages[&k2].clone()])?;
        if options.scaled {
            let s = out.log_scales[&k1] + out.log_scales[&k2];
            z = z.scale(Complex64::new(s.exp(), 0.0));
        }
        out.marginals.insert(e.id.clone(), z);
    }
    Ok(out)
}

/// Message out of an equality, sum or max vertex through edge `out` using chain schedules.
fn shortcut_message(f: &Factor, kind: IndicatorKind, head: &str, out: &str, msgs: &[&Factor]) -> Result<(Factor, u64)> {
    let alphabet = f.axis(out)?.alphabet.clone();
    let n = alphabet.size();
    let label_of = |m: &Factor| m.domain().axes()[0].label.clone();
    let domain = crate::algebra::make_product_domain([(out.to_owned(), alphabet.clone())])?;
    if kind == IndicatorKind::Equality {
        let tables: Vec<Vec<Complex64>> = msgs.iter().map(|m| m.values().to_vec()).collect();
        if tables.is_empty() {
            return Ok((Factor::ones(domain), 0));
        }
        let (v, ops) = star_kernel(kind, &alphabet, &tables)?;
        return Ok((Factor::new(domain, v)?, ops));
    }
    let tails: Vec<Vec<Complex64>> = msgs
        .iter()
        .filter(|m| label_of(m) != head)
        .map(|m| m.values().to_vec())
        .collect();
    if out == head {
        let (v, ops) = star_kernel(kind, &alphabet, &tails)?;
        return Ok((Factor::new(domain, v)?, ops));
    }
    let h = msgs
        .iter()
        .find(|m| label_of(m) == head)
        .expect("head message present when sending to a tail")
        .values()
        .to_vec();
    if tails.is_empty() {
        return Ok((Factor::new(domain, h)?, 0));
    }
    let (c, mut ops) = star_kernel(kind, &alphabet, &tails)?;
    let mut v = vec![ZERO; n];
    for (t, slot) in v.iter_mut().enumerate() {
        for (s, cs) in c.iter().enumerate() {
            let x = match kind {
                IndicatorKind::Sum => alphabet.as_group().expect("sum on group").add(t, s)?,
                _ => alphabet.as_ordered().expect("max on order").max(t, s),
            };
            *slot += cs * h[x];
        }
    }
    ops += (n * n) as u64;
    Ok((Factor::new(domain, v)?, ops))
}

/// `Z_G` assembled at the sum-product root from the open variant.
pub fn exterior_via_spa(g: &NfgGraph, options: &SpaOptions) -> Result<Factor> {
    let spa = sum_product_open(g, options)?;
    let root = g.vertex_ids().next().expect("nonempty").to_owned();
    let mut parts = vec![g.labeled_factor(&root)?];
    let mut scale = 0.0;
    for n in g.neighbors(&root)? {
        let key = (n, root.clone());
        scale += spa.log_scales.get(&key).copied().unwrap_or(0.0);
        parts.push(spa.messages[&key].clone());
    }
    let (z, _) = contract_counted(&parts)?;
    let z = if options.scaled {
        z.scale(Complex64::new(f64::exp(scale), 0.0))
    } else {
        z
    };
    z.permute(&g.external_names())
}

/// Difference-transformed marginals via sum-product on the evidence-dressed tree.
///
/// Every half edge gets a difference vertex and, beyond it, an evaluation vertex
/// at the evidence value, or constant one when the variable is absent from
/// `evidence`. Returns, per external variable, the message from its difference
/// vertex back out to the evaluation vertex, on an axis named after the variable.
pub fn derivative_sum_product(g: &NfgGraph, evidence: &BTreeMap<String, usize>) -> Result<BTreeMap<String, Factor>> {
    g.require_tree()?;
    let names = g.external_names();
    for k in evidence.keys() {
        if !names.contains(k) {
            return Err(NfgError::UnknownLabel(k.clone()));
        }
    }
    let mut desc = NfgDescription::new();
    let mut taken: BTreeSet<String> = g.vertex_ids().map(str::to_owned).collect();
    taken.extend(g.edges().map(|e| e.id.clone()));
    let fresh = |base: String, taken: &mut BTreeSet<String>| {
        let mut id = base.clone();
        let mut i = 1;
        while taken.contains(&id) {
            id = format!("{base}{i}");
            i += 1;
        }
        taken.insert(id.clone());
        id
    };
    for (v, f) in g.vertices() {
        desc = desc.vertex(v, f.clone());
    }
    let mut pairs = BTreeMap::new();
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
                if e.alphabet.as_ordered().is_none() {
                    return Err(NfgError::InvalidAlphabet(format!(
                        "`{external}` needs an ordered alphabet, got {}",
                        e.alphabet
                    )));
                }
                let d = fresh(format!("d_{external}"), &mut taken);
                let u = fresh(format!("u_{external}"), &mut taken);
                let inner = fresh(format!("{external}'"), &mut taken);
                let outer = fresh(external.clone(), &mut taken);
                let leaf = match evidence.get(external) {
                    Some(&x) => make_indicator(IndicatorKind::Evaluation(x), &e.alphabet, 1)?,
                    None => make_indicator(IndicatorKind::One, &e.alphabet, 1)?,
                };
                desc = desc
                    .vertex(d.clone(), make_kernel(KernelKind::Difference, &e.alphabet)?)
                    .vertex(u.clone(), leaf)
                    .internal(inner, (end.vertex.clone(), end.axis.clone()), (d.clone(), "arg2"))
                    .internal(outer.clone(), (d.clone(), "arg1"), (u.clone(), "arg1"));
                pairs.insert(external.clone(), (d, u, outer));
            }
        }
    }
    let closed = desc.validate()?;
    let spa = sum_product(&closed, &SpaOptions::default())?;
    pairs
        .into_iter()
        .map(|(x, (d, u, outer))| {
            let m = spa.messages[&(d, u)].relabel(&outer, &x)?;
            Ok((x, m))
        })
        .collect()
}
