//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout;
//! exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use nfg_core::algebra::{make_product_domain, Alphabet};
use nfg_core::codes::{codewords, dual_via_fourier, generator_realization, hamming_7_4, parity_realization};
use nfg_core::exterior::{
    derivative_sum_product, eliminate, exterior_bruteforce, sum_product, EliminationOptions, OrderItem, SpaOptions,
    Strategy,
};
use nfg_core::factor::{contract, marginalize, product, sum_of_products, Factor, Marginalization};
use nfg_core::gallery::{derivative_tree, independence_chain, max_lemma_graph};
use nfg_core::indicators::{
    identify_indicator, make_cumulus_pair, make_fourier_pair, make_indicator, IndicatorKind, KernelKind,
};
use nfg_core::inference::{query, Query, Shortcut};
use nfg_core::models::{
    cdn_to_nfg, cfg_to_nfg, check_cdf_axioms, fg_to_nfg, independence, independence_residual, nfg_to_cfg, nfg_to_fg,
    normalize_constrained, to_cdn, total_variation, CdnDesc, CfgDesc, FactorGraphDesc, FgFunction, IndependenceKind,
    SampleMode, Sampler,
};
use nfg_core::nfg::{classify, NfgGraph};
use nfg_core::random::{
    random_cdf, random_conditional, random_invertible_pair, random_model, random_nfg, random_split, random_table,
    random_transformer, random_tree, GraphShape, ModelKind, ModelShape,
};
use nfg_core::transform::{dense_axis_transform, fast_axis_transform, holographic_transform, HolographicSpec};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s as f64, || {
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Random merges of adjacent current vertices until no internal edge remains.
fn random_adjacent_order(g: &NfgGraph, r: &mut ChaCha8Rng) -> Vec<OrderItem> {
    let mut rep: BTreeMap<String, String> = g.vertex_ids().map(|v| (v.to_owned(), v.to_owned())).collect();
    let mut edges: Vec<(String, String)> = g
        .internal_edges()
        .map(|x| {
            let ends = x.endpoints();
            (ends[0].vertex.clone(), ends[1].vertex.clone())
        })
        .collect();
    let mut order = Vec::new();
    loop {
        let find = |rep: &BTreeMap<String, String>, mut v: String| {
            while rep[&v] != v {
                v = rep[&v].clone();
            }
            v
        };
        edges.retain(|(u, v)| find(&rep, u.clone()) != find(&rep, v.clone()));
        let Some((u, v)) = edges.choose(r).cloned() else { break };
        let (u, v) = (find(&rep, u), find(&rep, v));
        order.push(OrderItem::Pair(u.clone(), v.clone()));
        rep.insert(v, u);
    }
    order
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let shape = GraphShape::default();
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let mut r = rng(seed);
        let g = random_nfg(&mut r, &shape).map_err(e)?;
        let z = exterior_bruteforce(&g).map_err(e)?;
        let labels = z.labels();
        let greedy = eliminate(&g, &EliminationOptions::default()).map_err(e)?.result;
        let order = random_adjacent_order(&g, &mut r);
        let options = EliminationOptions {
            strategy: Strategy::Given(order),
            ..Default::default()
        };
        let given = eliminate(&g, &options).map_err(e)?.result;
        for f in [greedy, given] {
            let d = f.permute(&labels).and_then(|f| f.rel_diff(&z)).map_err(e)?;
            worst = worst.max(d);
            ensure(d <= 1e-9, || format!("seed {seed}: relative error {d:e}"))?;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "200 graphs, worst relative error {worst:.1e}, {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

fn spa_correctness() -> Outcome {
    let start = Instant::now();
    let shape = GraphShape {
        max_vertices: 10,
        max_half: 0,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let g = random_tree(&mut rng(1000 + seed), &shape).map_err(e)?;
        let ids: Vec<String> = g.internal_edges().map(|x| x.id.clone()).collect();
        let (joint, _) = sum_of_products(&g.labeled_factors().map_err(e)?, &ids).map_err(e)?;
        let spa = sum_product(&g, &SpaOptions::default()).map_err(e)?;
        for edge in g.internal_edges() {
            let mut oracle = joint.clone();
            for other in ids.iter().filter(|x| **x != edge.id) {
                oracle = marginalize(&oracle, other, Marginalization::Sum).map_err(e)?;
            }
            let ends = edge.endpoints();
            let (u, v) = (&ends[0].vertex, &ends[1].vertex);
            let m = spa.marginals.get(&edge.id).ok_or("missing marginal")?;
            let uv = spa.message(u, v).ok_or("missing message")?;
            let vu = spa.message(v, u).ok_or("missing message")?;
            let two = product(&[uv, vu]).map_err(e)?;
            let d = m.rel_diff(&oracle).map_err(e)?.max(two.rel_diff(&oracle).map_err(e)?);
            worst = worst.max(d);
            ensure(d <= 1e-9, || {
                format!("seed {seed} edge {}: relative error {d:e}", edge.id)
            })?;
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "100 trees, worst relative error {worst:.1e}, {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

fn inverse_pairs() -> Outcome {
    let mut cases = 0;
    for size in [2, 3, 4, 5, 10] {
        for power in 1..=3 {
            let a = Alphabet::ordered_product(&vec![size; power]);
            let err = make_cumulus_pair(&a).and_then(|p| p.inverse_error()).map_err(e)?;
            ensure(err <= 1e-12, || format!("cumulus |X|={size}^{power}: error {err:e}"))?;
            cases += 1;
        }
    }
    for moduli in [vec![2], vec![3], vec![4], vec![2, 3]] {
        let err = make_fourier_pair(&Alphabet::group(&moduli))
            .and_then(|p| p.inverse_error())
            .map_err(e)?;
        ensure(err <= 1e-12, || format!("fourier {moduli:?}: error {err:e}"))?;
        cases += 1;
    }
    Ok(format!("{cases} pairs compose to the equality indicator"))
}

fn max_lemma() -> Outcome {
    for n in [3, 4] {
        for size in [2, 3, 4] {
            let z = exterior_bruteforce(&max_lemma_graph(n, &Alphabet::ordered(size)).map_err(e)?).map_err(e)?;
            let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            let z = z.permute(&names).map_err(e)?;
            for (idx, v) in z.values().iter().enumerate() {
                let x = z.domain().coords(idx);
                let want = if x.iter().all(|&c| c == x[0]) { 1.0 } else { 0.0 };
                let rounded = if (v.re - 1.0).abs() <= 1e-9 && v.im.abs() <= 1e-9 {
                    1.0
                } else if v.norm() <= 1e-9 {
                    0.0
                } else {
                    f64::NAN
                };
                ensure(rounded == want, || format!("n={n} |X|={size} at {x:?}: {v}"))?;
            }
        }
    }
    Ok("n in {3,4}, |X| in {2,3,4} all equal the equality indicator".into())
}

/// `⟨Z_in, Π g_x⟩` with each external `x` renamed through `g_x(x, x')`.
fn transformed_oracle(z: &Factor, externals: &BTreeMap<String, Factor>) -> Result<Factor, String> {
    let mut parts = vec![z.clone()];
    for (x, t) in externals {
        let out = format!("{x}'");
        parts.push(
            t.relabel_with(|l| if l == "arg1" { x.clone() } else { out.clone() })
                .map_err(e)?,
        );
    }
    let f = contract(&parts).map_err(e)?;
    f.relabel_with(|l| l.strip_suffix('\'').unwrap_or(l).to_owned())
        .map_err(e)
}

fn holant() -> Outcome {
    let shape = GraphShape::default();
    let (mut worst, mut worst_id): (f64, f64) = (0.0, 0.0);
    for seed in 0..100 {
        let mut r = rng(2000 + seed);
        let g = random_nfg(&mut r, &shape).map_err(e)?;
        let z = exterior_bruteforce(&g).map_err(e)?;
        let mut spec = HolographicSpec::default();
        for edge in g.internal_edges() {
            let pair = random_invertible_pair(&mut r, &edge.alphabet).map_err(e)?;
            let ends = edge.endpoints();
            let fwd = ends[r.gen_range(0..2)].vertex.clone();
            spec.internal.insert(edge.id.clone(), (pair, fwd));
        }
        let mut identity = spec.clone();
        for h in g.half_edges() {
            let outer = Alphabet::plain(r.gen_range(2..=4));
            let t = random_transformer(&mut r, &h.alphabet, &outer).map_err(e)?;
            spec.external.insert(h.label().to_owned(), t);
            let eq = make_indicator(IndicatorKind::Equality, &h.alphabet, 2).map_err(e)?;
            identity.external.insert(h.label().to_owned(), eq);
        }
        let out = exterior_bruteforce(&holographic_transform(&g, &spec).map_err(e)?).map_err(e)?;
        let d = out.rel_diff(&transformed_oracle(&z, &spec.external)?).map_err(e)?;
        worst = worst.max(d);
        ensure(d <= 1e-9, || format!("seed {seed}: relative error {d:e}"))?;
        let out = exterior_bruteforce(&holographic_transform(&g, &identity).map_err(e)?).map_err(e)?;
        let d = out.rel_diff(&z).map_err(e)?;
        worst_id = worst_id.max(d);
        ensure(d <= 1e-12, || {
            format!("seed {seed}: identity externals moved Z by {d:e}")
        })?;
    }
    Ok(format!(
        "100 graphs, worst error {worst:.1e}; identity externals worst {worst_id:.1e}"
    ))
}

fn fast_transforms() -> Outcome {
    let mut r = rng(3000);
    let mut worst: f64 = 0.0;
    for case in 0..150 {
        let n = r.gen_range(1..=3);
        let size = r.gen_range(2..=5);
        let fourier = case % 3 == 2;
        let a = if fourier {
            Alphabet::cyclic(size)
        } else {
            Alphabet::ordered(size)
        };
        let labels: Vec<String> = (0..n).map(|i| format!("y{i}")).collect();
        let d = make_product_domain(labels.iter().map(|l| (l.clone(), a.clone()))).map_err(e)?;
        let f = Factor::from_fn(d, |_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let axes: Vec<&str> = labels.iter().map(String::as_str).collect();
        let kinds: &[KernelKind] = if fourier {
            &[KernelKind::Fourier, KernelKind::FourierInverse]
        } else {
            &[KernelKind::Cumulus, KernelKind::Difference]
        };
        for &k in kinds {
            let (fast, ops) = fast_axis_transform(&f, k, &axes).map_err(e)?;
            let dense = dense_axis_transform(&f, k, &axes).map_err(e)?;
            let dd = fast.rel_diff(&dense).map_err(e)?;
            worst = worst.max(dd);
            ensure(dd <= 1e-9, || format!("case {case} {}: fast vs dense {dd:e}", k.name()))?;
            let (back, _) = fast_axis_transform(&fast, k.inverse(), &axes).map_err(e)?;
            let rt = back.rel_diff(&f).map_err(e)?;
            ensure(rt <= 1e-9, || format!("case {case} {}: round trip {rt:e}", k.name()))?;
            if k == KernelKind::Cumulus {
                let want = (n * (size - 1) * size.pow(n as u32 - 1)) as u64;
                ensure(ops == want, || format!("case {case}: {ops} additions, expected {want}"))?;
            }
        }
    }
    Ok(format!(
        "150 tables, worst fast/dense error {worst:.1e}, cumulus counts exact"
    ))
}

fn random_fg(
    r: &mut ChaCha8Rng,
    alphabet: impl Fn(&mut ChaCha8Rng) -> Alphabet,
    cdf: bool,
) -> Result<FactorGraphDesc, String> {
    let nv = r.gen_range(2..=3);
    let vars: Vec<(String, Alphabet)> = (1..=nv).map(|i| (format!("x{i}"), alphabet(r))).collect();
    let nf = r.gen_range(2..=3);
    let mut funcs = Vec::new();
    for j in 1..=nf {
        let mut pick: Vec<usize> = (0..nv).collect();
        pick.shuffle(r);
        let k = r.gen_range(1..=nv.min(2));
        pick.truncate(k);
        if j == nf {
            // cover every variable
            for v in 0..nv {
                if !pick.contains(&v) && !funcs.iter().any(|f: &FgFunction| f.neighbors.contains(&vars[v].0)) {
                    pick.push(v);
                }
            }
        }
        let names: Vec<String> = pick.iter().map(|&v| vars[v].0.clone()).collect();
        let d = make_product_domain(pick.iter().map(|&v| vars[v].clone())).map_err(e)?;
        let f = if cdf {
            random_cdf(r, d).map_err(e)?
        } else {
            random_table(r, d)
        };
        funcs.push(FgFunction::new(format!("f{j}"), f, &names));
    }
    FactorGraphDesc::new(vars, funcs).map_err(e)
}

fn exterior_sorted(g: &NfgGraph) -> Result<Factor, String> {
    exterior_bruteforce(g).map_err(e)
}

fn conversions() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut check = |what: &str, i: u64, a: &Factor, b: &Factor| -> Result<(), String> {
        let d = a.rel_diff(b).map_err(e)?;
        worst = worst.max(d);
        ensure(d <= 1e-9, || format!("{what} instance {i}: relative error {d:e}"))
    };
    for i in 0..50 {
        let mut r = rng(4000 + i);
        // factor graph <-> constrained model
        let fg = random_fg(&mut r, |r| Alphabet::plain(r.gen_range(2..=3)), false)?;
        let g = fg_to_nfg(&fg).map_err(e)?;
        ensure(classify(&g, 1e-9).constrained, || {
            format!("fg instance {i}: not constrained")
        })?;
        let global = fg.global_function().map_err(e)?;
        check("fg->nfg", i, &exterior_sorted(&g)?, &global)?;
        let back = nfg_to_fg(&g, 1e-9).map_err(e)?;
        check("nfg->fg", i, &back.global_function().map_err(e)?, &global)?;

        // split interfaces -> equality interfaces -> factor graph
        let m = random_model(&mut r, ModelKind::Constrained, &ModelShape::default()).map_err(e)?;
        let z = exterior_sorted(&m)?;
        let h = normalize_constrained(&m, 1e-9).map_err(e)?;
        check("normalize", i, &exterior_sorted(&h)?, &z)?;
        for v in classify(&h, 1e-9).interface_set {
            let kind = identify_indicator(h.factor(&v).map_err(e)?).map(|k| k.0);
            ensure(kind == Some(IndicatorKind::Equality), || {
                format!("normalize instance {i}: `{v}` is {kind:?}")
            })?;
        }
        let fg = nfg_to_fg(&h, 1e-9).map_err(e)?;
        check("constrained->fg", i, &fg.global_function().map_err(e)?, &z)?;

        // convolutional factor graph <-> generative sum model
        let cfg = CfgDesc::new(random_fg(&mut r, |r| Alphabet::cyclic(r.gen_range(2..=3)), false)?).map_err(e)?;
        let conv = cfg.convolution().map_err(e)?;
        let g = cfg_to_nfg(&cfg).map_err(e)?;
        let flags = classify(&g, 1e-9);
        ensure(flags.generative || flags.extended_generative, || {
            format!("cfg instance {i}: not generative")
        })?;
        check("cfg->nfg", i, &exterior_sorted(&g)?, &conv)?;
        let back = nfg_to_cfg(&g, 1e-9).map_err(e)?;
        check("nfg->cfg", i, &back.convolution().map_err(e)?, &conv)?;

        // cumulative distribution network <-> transformed model
        let desc = random_fg(&mut r, |r| Alphabet::ordered(r.gen_range(2..=3)), true)?;
        let cdn = CdnDesc::new(desc, 1e-9).map_err(e)?;
        let cdf = cdn.joint_cdf().map_err(e)?;
        let g = cdn_to_nfg(&cdn).map_err(e)?;
        let z = exterior_sorted(&g)?;
        check("cdn->nfg", i, &z, &cdf)?;
        check_cdf_axioms(&z, 1e-9).map_err(|err| format!("cdn instance {i}: {err}"))?;
        let back = to_cdn(&g, 1e-9).map_err(e)?;
        check("nfg->cdn", i, &back.joint_cdf().map_err(e)?, &cdf)?;
    }
    Ok(format!(
        "4 conversions x 50 instances, worst relative error {worst:.1e}"
    ))
}

fn hamming() -> Outcome {
    let start = Instant::now();
    let (gen, par) = hamming_7_4();
    let g = generator_realization(&gen).map_err(e)?;
    let c_gen = codewords(&g, 1e-9).map_err(e)?;
    let c_par = codewords(&parity_realization(&par).map_err(e)?, 1e-9).map_err(e)?;
    let expected = vec![1, 0, 0, 7, 7, 0, 0, 1];
    for (what, c) in [("generator", &c_gen), ("parity", &c_par)] {
        ensure(c.words.len() == 16, || format!("{what}: {} words", c.words.len()))?;
        ensure(c.weight_distribution() == expected, || {
            format!("{what}: distribution {:?}", c.weight_distribution())
        })?;
    }
    ensure(c_gen.words == c_par.words, || "realizations disagree".into())?;
    let dual = codewords(&dual_via_fourier(&g).map_err(e)?, 1e-9).map_err(e)?;
    ensure(dual.words.len() == 8, || format!("dual: {} words", dual.words.len()))?;
    let dist = dual.weight_distribution();
    ensure(dist[0] == 1 && dist[4] == 7, || format!("dual distribution {dist:?}"))?;
    ensure(c_gen.words.len() * dual.words.len() == 128, || "size product".into())?;
    // every dual word is orthogonal to every codeword
    for y in &dual.words {
        for c in &c_gen.words {
            let dot: usize = y.iter().zip(c).map(|(a, b)| a * b).sum();
            ensure(dot.is_multiple_of(2), || format!("{y:?} . {c:?} is odd"))?;
        }
    }
    within(start.elapsed(), 1)?;
    Ok(format!(
        "16 codewords (1,0,0,7,7,0,0,1), dual 8 words of weight 4, {:.0} ms",
        start.elapsed().as_secs_f64() * 1e3
    ))
}

fn independence_check() -> Outcome {
    let a = Alphabet::plain(3);
    let (x1, x2, x3) = (set(&["x1"]), set(&["x2"]), set(&["x3"]));
    let (mut worst_c, mut worst_m): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let mut r = rng(5000 + i);
        let g = independence_chain(&a, |v, d| {
            if v.starts_with('g') {
                random_split(&mut r, d)
            } else {
                random_table(&mut r, d)
            }
        })
        .map_err(e)?;
        let v = independence(&g, &x1, &x3, &x2, 1e-9).map_err(e)?;
        ensure(v.kind == IndependenceKind::Conditional, || {
            format!("constrained {i}: verdict {:?}", v.kind)
        })?;
        let z = exterior_bruteforce(&g).map_err(e)?;
        let res = independence_residual(&z, &x1, &x3, &x2, true, 1e-9).map_err(e)?;
        worst_c = worst_c.max(res);
        ensure(res <= 1e-8, || format!("constrained {i}: residual {res:e}"))?;

        let g = independence_chain(&a, |v, d| {
            if v.starts_with('g') {
                random_conditional(&mut r, d)
            } else {
                random_table(&mut r, d)
            }
        })
        .map_err(e)?;
        let v = independence(&g, &x1, &x3, &x2, 1e-9).map_err(e)?;
        ensure(v.kind == IndependenceKind::Marginal, || {
            format!("generative {i}: verdict {:?}", v.kind)
        })?;
        let z = exterior_bruteforce(&g).map_err(e)?;
        let res = independence_residual(&z, &x1, &x3, &BTreeSet::new(), false, 1e-9).map_err(e)?;
        worst_m = worst_m.max(res);
        ensure(res <= 1e-8, || format!("generative {i}: residual {res:e}"))?;
    }
    Ok(format!(
        "100+100 parameterizations, worst residuals {worst_c:.1e} (conditional), {worst_m:.1e} (marginal)"
    ))
}

fn sampling() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let kind = if i % 2 == 0 {
            ModelKind::Constrained
        } else {
            ModelKind::Generative
        };
        let g = random_model(&mut rng(6000 + i), kind, &ModelShape::default()).map_err(e)?;
        let z = exterior_bruteforce(&g).map_err(e)?;
        let sampler = Sampler::new(&g, SampleMode::Auto, 1e-9).map_err(e)?;
        let run = sampler.run(&mut rng(7000 + i), 100_000, 1_000_000).map_err(e)?;
        let again = sampler.run(&mut rng(7000 + i), 1_000, 1_000_000).map_err(e)?;
        ensure(again.samples[..] == run.samples[..1_000], || {
            format!("model {i}: not deterministic")
        })?;
        let tv = total_variation(&run, &z, 1e-9).map_err(e)?;
        worst = worst.max(tv);
        ensure(tv < 0.05, || format!("model {i} ({kind:?}): total variation {tv}"))?;
    }
    within(start.elapsed(), 120)?;
    Ok(format!(
        "20 models x 100k samples, worst total variation {worst:.4}, {:.1} s",
        start.elapsed().as_secs_f64()
    ))
}

/// `P(x) - P(x - 1)` along `label`.
fn difference(f: &Factor, label: &str) -> Result<Factor, String> {
    let pos = f.domain().position(label).ok_or("missing axis")?;
    let stride = f.domain().strides()[pos];
    let vals = f.values();
    let out: Vec<Complex64> = (0..vals.len())
        .map(|i| {
            let x = f.domain().coords(i)[pos];
            if x == 0 {
                vals[i]
            } else {
                vals[i] - vals[i - stride]
            }
        })
        .collect();
    Factor::new(f.domain().clone(), out).map_err(e)
}

fn derivative_spa() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let mut r = rng(8000 + i);
        let size = r.gen_range(2..=4);
        let a = Alphabet::ordered(size);
        let g = derivative_tree(&a, |_, d| random_table(&mut r, d)).map_err(e)?;
        let p = exterior_bruteforce(&g).map_err(e)?;
        let (e1, e2) = (r.gen_range(0..size), r.gen_range(0..size));
        let evidence: BTreeMap<String, usize> = [("x1".to_owned(), e1), ("x2".to_owned(), e2)].into();
        let msgs = derivative_sum_product(&g, &evidence).map_err(e)?;
        let dp = difference(&difference(&p, "x1")?, "x2")?;
        let want1 = dp.evaluate("x2", e2).map_err(e)?;
        let want2 = dp.evaluate("x1", e1).map_err(e)?;
        let d1 = msgs["x1"].rel_diff(&want1).map_err(e)?;
        let d2 = msgs["x2"].rel_diff(&want2).map_err(e)?;
        // x1 marginalized: its difference vertex sees constant one
        let only2: BTreeMap<String, usize> = [("x2".to_owned(), e2)].into();
        let msgs_m = derivative_sum_product(&g, &only2).map_err(e)?;
        let want_m = difference(&p.evaluate("x1", size - 1).map_err(e)?, "x2")?;
        let d3 = msgs_m["x2"].rel_diff(&want_m).map_err(e)?;
        let d4 = msgs_m["x1"].rel_diff(&msgs["x1"]).map_err(e)?;
        let d = d1.max(d2).max(d3).max(d4);
        worst = worst.max(d);
        ensure(d <= 1e-9, || {
            format!("instance {i}: errors {d1:e} {d2:e} {d3:e} {d4:e}")
        })?;
    }
    Ok(format!(
        "50 parameterizations, both variants, worst relative error {worst:.1e}"
    ))
}

fn random_subset(r: &mut ChaCha8Rng, xs: &[String], nonempty: bool) -> BTreeSet<String> {
    loop {
        let s: BTreeSet<String> = xs.iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
        if !nonempty || !s.is_empty() {
            return s;
        }
    }
}

fn inference() -> Outcome {
    let shape = ModelShape {
        integer: true,
        ..Default::default()
    };
    let (mut worst_exact, mut worst_mass): (f64, f64) = (0.0, 0.0);
    for i in 0..50u64 {
        let mut r = rng(9000 + i);
        let constrained = i % 2 == 0;
        let kind = if constrained {
            ModelKind::Constrained
        } else {
            ModelKind::Generative
        };
        let g = random_model(&mut r, kind, &shape).map_err(e)?;
        let names = g.external_names();
        let (marg, evidence) = if constrained {
            let ev = random_subset(&mut r, &names, true);
            let rest: Vec<String> = names.iter().filter(|x| !ev.contains(*x)).cloned().collect();
            (random_subset(&mut r, &rest, false), ev)
        } else {
            let m = random_subset(&mut r, &names, true);
            let rest: Vec<String> = names.iter().filter(|x| !m.contains(*x)).cloned().collect();
            (m, random_subset(&mut r, &rest, false))
        };
        let evidence: BTreeMap<String, usize> = evidence
            .into_iter()
            .map(|x| {
                let n = g.half_edge_named(&x).unwrap().alphabet.size();
                let v = r.gen_range(0..n);
                (x, v)
            })
            .collect();
        let mut q = Query::complete(&g, marg, evidence.clone());
        let generic = query(&g, &q, 1e-9).map_err(e)?;
        q.shortcut = true;
        let fast = query(&g, &q, 1e-9).map_err(e)?;
        let want = if constrained {
            Shortcut::ConstrainedEvidence
        } else {
            Shortcut::GenerativeMarginal
        };
        ensure(fast.shortcut == Some(want), || {
            format!("model {i}: shortcut {:?}", fast.shortcut)
        })?;
        let d = fast.table.rel_diff(&generic.table).map_err(e)?;
        worst_exact = worst_exact.max(d);
        ensure(d <= 1e-12, || format!("model {i}: shortcut differs by {d:e}"))?;

        let mut joint = exterior_bruteforce(&g).map_err(e)?;
        for (x, &v) in &evidence {
            joint = joint.evaluate(x, v).map_err(e)?;
        }
        let mass = joint.sum_all();
        let dm = (generic.evidence_mass - mass).norm() / mass.norm().max(1.0);
        worst_mass = worst_mass.max(dm);
        ensure(dm <= 1e-9, || {
            format!("model {i}: mass {} vs {mass}", generic.evidence_mass)
        })?;
    }
    Ok(format!(
        "50 models, shortcut vs generic worst {worst_exact:.1e}, evidence mass worst {worst_mass:.1e}"
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("oracle equivalence", oracle_equivalence),
        ("sum-product correctness", spa_correctness),
        ("inverse pairs", inverse_pairs),
        ("max-indicator lemma", max_lemma),
        ("generalized Holant theorem", holant),
        ("fast transforms", fast_transforms),
        ("model conversions", conversions),
        ("Hamming code", hamming),
        ("independence", independence_check),
        ("sampling", sampling),
        ("derivative sum-product", derivative_spa),
        ("inference shortcuts", inference),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
