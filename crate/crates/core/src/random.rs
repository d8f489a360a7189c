//! Seeded random graphs, models and transformers for property tests and demos.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::{make_product_domain, Alphabet, ProductDomain};
use crate::error::{NfgError, Result};
use crate::factor::Factor;
use crate::indicators::{arg, KernelKind, TransformerPair};
use crate::nfg::{NfgDescription, NfgGraph};
use crate::transform::fast_axis_transform;

/// Entries drawn uniformly from `[0.1, 1)`.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain) -> Factor {
    Factor::from_fn(domain, |_| Complex64::new(rng.gen_range(0.1..1.0), 0.0))
}

/// Entries with real and imaginary parts drawn uniformly from `[-1, 1)`.
pub fn random_complex_table<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain) -> Factor {
    Factor::from_fn(domain, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Integer entries in `0..=max`; products and sums stay exact in `f64`.
pub fn random_integer_table<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain, max: u32) -> Factor {
    Factor::from_fn(domain, |_| Complex64::new(rng.gen_range(0..=max) as f64, 0.0))
}

fn bivariate<R: Rng + ?Sized>(rng: &mut R, domain: &ProductDomain, k: usize, max: Option<u32>) -> Vec<f64> {
    let (n, m) = (domain.sizes()[0], domain.sizes()[k]);
    (0..n * m)
        .map(|_| match max {
            Some(max) => rng.gen_range(1..=max) as f64,
            None => rng.gen_range(0.1..1.0),
        })
        .collect()
}

fn split_with<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain, max: Option<u32>) -> Factor {
    let sizes = domain.sizes();
    let tables: Vec<Vec<f64>> = (1..sizes.len()).map(|k| bivariate(rng, &domain, k, max)).collect();
    Factor::from_fn(domain, |x| {
        let v: f64 = tables
            .iter()
            .enumerate()
            .map(|(k, t)| t[x[0] * sizes[k + 1] + x[k + 1]])
            .product();
        Complex64::new(v, 0.0)
    })
}

/// A product of random bivariate functions of the first axis with each other axis.
pub fn random_split<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain) -> Factor {
    split_with(rng, domain, None)
}

/// As [`random_split`] with integer factors in `1..=max`.
pub fn random_integer_split<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain, max: u32) -> Factor {
    split_with(rng, domain, Some(max))
}

/// A conditional of the first axis given the rest: each column sums to one.
pub fn random_conditional<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain) -> Factor {
    let sizes = domain.sizes();
    let rest: usize = sizes[1..].iter().product();
    let n = sizes[0];
    let mut values = vec![0.0; n * rest];
    for c in 0..rest {
        let col: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = col.iter().sum();
        for (x, v) in col.into_iter().enumerate() {
            values[x * rest + c] = v / total;
        }
    }
    Factor::from_real(domain, &values).expect("sized to the domain")
}

/// A conditional with integer entries whose columns all sum to `total`.
pub fn random_integer_conditional<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain, total: u32) -> Factor {
    let sizes = domain.sizes();
    let rest: usize = sizes[1..].iter().product();
    let n = sizes[0];
    let mut values = vec![0.0; n * rest];
    for c in 0..rest {
        let mut cuts: Vec<u32> = (1..n).map(|_| rng.gen_range(0..=total)).collect();
        cuts.push(0);
        cuts.push(total);
        cuts.sort_unstable();
        for x in 0..n {
            values[x * rest + c] = (cuts[x + 1] - cuts[x]) as f64;
        }
    }
    Factor::from_real(domain, &values).expect("sized to the domain")
}

/// The CDF of a random distribution over an ordered domain.
pub fn random_cdf<R: Rng + ?Sized>(rng: &mut R, domain: ProductDomain) -> Result<Factor> {
    let p = random_table(rng, domain);
    let total = p.sum_all();
    let p = p.scale(total.inv());
    let labels = p.labels();
    let axes: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(fast_axis_transform(&p, KernelKind::Cumulus, &axes)?.0)
}

/// Size bounds for random graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphShape {
    pub max_vertices: usize,
    pub max_internal: usize,
    pub max_half: usize,
    pub max_alphabet: usize,
}

impl Default for GraphShape {
    fn default() -> Self {
        Self {
            max_vertices: 6,
            max_internal: 8,
            max_half: 3,
            max_alphabet: 4,
        }
    }
}

struct Sketch {
    /// `(u, v)` for internal edges, `(u, u)` never occurs.
    internal: Vec<(usize, usize)>,
    half: Vec<usize>,
    alphabets: Vec<usize>,
}

fn realize<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    sketch: &Sketch,
    mut fill: impl FnMut(&mut R, usize, ProductDomain) -> Factor,
) -> Result<NfgGraph> {
    let mut axes: Vec<Vec<(String, Alphabet)>> = vec![Vec::new(); n];
    let mut desc = NfgDescription::new();
    let mut edges = Vec::new();
    for (i, &(u, v)) in sketch.internal.iter().enumerate() {
        let a = Alphabet::plain(sketch.alphabets[i]);
        let id = format!("e{i}");
        let (au, av) = (format!("a{}", axes[u].len()), format!("a{}", axes[v].len()));
        axes[u].push((au.clone(), a.clone()));
        axes[v].push((av.clone(), a));
        edges.push((id, (format!("v{u}"), au), (format!("v{v}"), av)));
    }
    let mut halves = Vec::new();
    for (j, &u) in sketch.half.iter().enumerate() {
        let a = Alphabet::plain(sketch.alphabets[sketch.internal.len() + j]);
        let au = format!("a{}", axes[u].len());
        axes[u].push((au.clone(), a));
        halves.push((format!("x{j}"), (format!("v{u}"), au)));
    }
    for (v, ax) in axes.into_iter().enumerate() {
        let d = make_product_domain(ax)?;
        desc = desc.vertex(format!("v{v}"), fill(rng, v, d));
    }
    for (id, a, b) in edges {
        desc = desc.internal(id, a, b);
    }
    for (id, at) in halves {
        desc = desc.half(id, at);
    }
    desc.validate()
}

fn alphabets<R: Rng + ?Sized>(rng: &mut R, count: usize, max: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(2..=max.max(2))).collect()
}

/// A random graph with positive real factors; parallel edges allowed,
/// self-loops not, possibly disconnected.
pub fn random_nfg<R: Rng + ?Sized>(rng: &mut R, shape: &GraphShape) -> Result<NfgGraph> {
    let n = rng.gen_range(1..=shape.max_vertices.max(1));
    let m = if n < 2 {
        0
    } else {
        rng.gen_range(0..=shape.max_internal)
    };
    let internal: Vec<(usize, usize)> = (0..m)
        .map(|_| {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            (u, v)
        })
        .collect();
    let h = rng.gen_range(0..=shape.max_half);
    let half = (0..h).map(|_| rng.gen_range(0..n)).collect();
    let alphabets = alphabets(rng, m + h, shape.max_alphabet);
    let sketch = Sketch {
        internal,
        half,
        alphabets,
    };
    realize(rng, n, &sketch, |rng, _, d| random_table(rng, d))
}

/// A random tree on `2..=max_vertices` vertices with up to `max_half` half edges.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, shape: &GraphShape) -> Result<NfgGraph> {
    let n = rng.gen_range(2..=shape.max_vertices.max(2));
    let internal: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    let h = rng.gen_range(0..=shape.max_half);
    let half = (0..h).map(|_| rng.gen_range(0..n)).collect();
    let alphabets = alphabets(rng, n - 1 + h, shape.max_alphabet);
    let sketch = Sketch {
        internal,
        half,
        alphabets,
    };
    realize(rng, n, &sketch, |rng, _, d| random_table(rng, d))
}

/// How interface functions of a random model are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Split interfaces.
    Constrained,
    /// Conditional interfaces.
    Generative,
}

/// Size bounds for random bipartite models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub interfaces: usize,
    pub latents: usize,
    pub max_alphabet: usize,
    /// Integer-valued tables (exact arithmetic) when set.
    pub integer: bool,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            interfaces: 3,
            latents: 2,
            max_alphabet: 3,
            integer: false,
        }
    }
}

/// A random bipartite model: interfaces `g{i}` with external `x{i}` on axis
/// `x`, latents `f{j}`. Every vertex has at least one internal edge.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, kind: ModelKind, shape: &ModelShape) -> Result<NfgGraph> {
    let (ni, nj) = (shape.interfaces.max(1), shape.latents.max(1));
    let mut links: Vec<(usize, usize)> = Vec::new();
    for i in 0..ni {
        let mut js: Vec<usize> = (0..nj).collect();
        js.shuffle(rng);
        let k = rng.gen_range(1..=nj.min(2));
        links.extend(js[..k].iter().map(|&j| (i, j)));
    }
    for j in 0..nj {
        if !links.iter().any(|&(_, l)| l == j) {
            links.push((rng.gen_range(0..ni), j));
        }
    }
    links.sort_unstable();
    let size = |rng: &mut R| rng.gen_range(2..=shape.max_alphabet.max(2));
    let externals: Vec<Alphabet> = (0..ni).map(|_| Alphabet::plain(size(rng))).collect();
    let linkals: Vec<Alphabet> = links.iter().map(|_| Alphabet::plain(size(rng))).collect();

    let mut desc = NfgDescription::new();
    for i in 0..ni {
        let mut axes = vec![("x".to_owned(), externals[i].clone())];
        for (l, _) in links.iter().enumerate().filter(|(_, &(a, _))| a == i) {
            axes.push((format!("s{l}"), linkals[l].clone()));
        }
        let d = make_product_domain(axes)?;
        let f = match (kind, shape.integer) {
            (ModelKind::Constrained, false) => random_split(rng, d),
            (ModelKind::Constrained, true) => random_integer_split(rng, d, 4),
            (ModelKind::Generative, false) => random_conditional(rng, d),
            (ModelKind::Generative, true) => random_integer_conditional(rng, d, 6),
        };
        desc = desc
            .vertex(format!("g{i}"), f)
            .half(format!("x{i}"), (format!("g{i}"), "x"));
    }
    for j in 0..nj {
        let axes: Vec<(String, Alphabet)> = links
            .iter()
            .enumerate()
            .filter(|(_, &(_, b))| b == j)
            .map(|(l, _)| (format!("s{l}"), linkals[l].clone()))
            .collect();
        let d = make_product_domain(axes)?;
        let f = if shape.integer {
            random_integer_table(rng, d, 4)
        } else {
            random_table(rng, d)
        };
        desc = desc.vertex(format!("f{j}"), f);
    }
    for (l, &(i, j)) in links.iter().enumerate() {
        let s = format!("s{l}");
        desc = desc.internal(s.clone(), (format!("g{i}"), s.clone()), (format!("f{j}"), s));
    }
    desc.validate()
}

/// A random invertible pair `(M, M⁻¹)` over `alphabet`; `M` is the identity
/// plus a random perturbation, redrawn until well conditioned.
pub fn random_invertible_pair<R: Rng + ?Sized>(rng: &mut R, alphabet: &Alphabet) -> Result<TransformerPair> {
    let n = alphabet.size();
    for _ in 0..64 {
        let m = DMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            Complex64::new(base + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        let Some(inv) = m.clone().try_inverse() else { continue };
        let norm = m.norm() * inv.norm();
        if !norm.is_finite() || norm > 1e4 {
            continue;
        }
        let d = make_product_domain([(arg(1), alphabet.clone()), (arg(2), alphabet.clone())])?;
        let forward = Factor::from_fn(d.clone(), |x| m[(x[0], x[1])]);
        let inverse = Factor::from_fn(d, |x| inv[(x[0], x[1])]);
        return TransformerPair::new(forward, inverse, 1e-9);
    }
    Err(NfgError::Precondition("no well-conditioned matrix drawn".into()))
}

/// A random complex bivariate `g(arg1, arg2)` from `inner` to `outer`.
pub fn random_transformer<R: Rng + ?Sized>(rng: &mut R, inner: &Alphabet, outer: &Alphabet) -> Result<Factor> {
    let d = make_product_domain([(arg(1), inner.clone()), (arg(2), outer.clone())])?;
    Ok(random_complex_table(rng, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{conditional_constant, split_decompose};
    use crate::models::check_cdf_axioms;
    use crate::nfg::classify;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dom(sizes: &[usize]) -> ProductDomain {
        make_product_domain(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| (format!("a{i}"), Alphabet::ordered(s))),
        )
        .unwrap()
    }

    #[test]
    fn table_families_have_their_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_split(&mut rng, dom(&[3, 2, 4]));
        assert!(split_decompose(&s, "a0", 1e-9).is_some());
        let c = random_conditional(&mut rng, dom(&[3, 2, 2]));
        assert!((conditional_constant(&c, "a0", 1e-12).unwrap().re - 1.0).abs() < 1e-12);
        let c = random_integer_conditional(&mut rng, dom(&[4, 3]), 6);
        assert_eq!(conditional_constant(&c, "a0", 0.0).unwrap().re, 6.0);
        let f = random_cdf(&mut rng, dom(&[3, 2])).unwrap();
        assert!(check_cdf_axioms(&f, 1e-12).is_ok());
    }

    #[test]
    fn graphs_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = GraphShape::default();
        for _ in 0..50 {
            let g = random_nfg(&mut rng, &shape).unwrap();
            assert!(g.vertex_count() <= 6 && g.internal_edges().count() <= 8);
            assert!(random_tree(&mut rng, &shape).unwrap().is_tree());
        }
    }

    #[test]
    fn models_classify() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for integer in [false, true] {
            let shape = ModelShape {
                integer,
                ..Default::default()
            };
            let g = random_model(&mut rng, ModelKind::Constrained, &shape).unwrap();
            assert!(classify(&g, 1e-9).constrained);
            let g = random_model(&mut rng, ModelKind::Generative, &shape).unwrap();
            assert!(classify(&g, 1e-9).generative);
        }
    }

    #[test]
    fn invertible_pairs_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..6 {
            let p = random_invertible_pair(&mut rng, &Alphabet::plain(n)).unwrap();
            assert!(p.inverse_error().unwrap() < 1e-9);
        }
    }
}
