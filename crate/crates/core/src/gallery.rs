//! Small named graphs used across the tests, the CLI documents and the demo.
//!
//! Constructors take a `fill(vertex, domain)` callback supplying each local
//! function; interface vertices list their external axis first. Use
//! [`counting`] for fixed values or the helpers in [`crate::random`].

use num_complex::Complex64;

use crate::algebra::{make_product_domain, Alphabet, ProductDomain};
use crate::error::Result;
use crate::factor::Factor;
use crate::indicators::{arg, make_indicator, make_kernel, IndicatorKind, KernelKind};
use crate::models::{FactorGraphDesc, FgFunction};
use crate::nfg::{NfgDescription, NfgGraph};

/// Deterministic positive table: `1, 2, 3, 1, 2, 3, ...` in row-major order.
pub fn counting(_vertex: &str, domain: ProductDomain) -> Factor {
    let n = domain.size();
    let values = (0..n).map(|i| Complex64::new((i % 3 + 1) as f64, 0.0)).collect();
    Factor::new(domain, values).expect("sized to the domain")
}

fn domain(axes: &[&str], a: &Alphabet) -> ProductDomain {
    make_product_domain(axes.iter().map(|l| (*l, a.clone()))).expect("distinct axes")
}

/// Four vertices realizing
/// `Σ_s f1(x1,s1,s2) f2(x2,s2,s3,s5) f3(s3,s4) f4(s1,s4,s5)`.
pub fn four_vertex<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let f1 = fill("f1", domain(&["x1", "s1", "s2"], a));
    let f2 = fill("f2", domain(&["x2", "s2", "s3", "s5"], a));
    let f3 = fill("f3", domain(&["s3", "s4"], a));
    let f4 = fill("f4", domain(&["s1", "s4", "s5"], a));
    NfgDescription::new()
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("f3", f3)
        .vertex("f4", f4)
        .internal("s1", ("f1", "s1"), ("f4", "s1"))
        .internal("s2", ("f1", "s2"), ("f2", "s2"))
        .internal("s3", ("f2", "s3"), ("f3", "s3"))
        .internal("s4", ("f3", "s4"), ("f4", "s4"))
        .internal("s5", ("f2", "s5"), ("f4", "s5"))
        .half("x1", ("f1", "x1"))
        .half("x2", ("f2", "x2"))
        .validate()
}

/// Interfaces `f1(x1,s1,s1')`, `f2(x2,s2,s2')` over latents `h1(s1)`,
/// `h2(s1',s2)`, `h3(s2')`.
pub fn rejection_example<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let f1 = fill("f1", domain(&["x1", "s1", "t1"], a));
    let f2 = fill("f2", domain(&["x2", "s2", "t2"], a));
    let h1 = fill("h1", domain(&["s1"], a));
    let h2 = fill("h2", domain(&["t1", "s2"], a));
    let h3 = fill("h3", domain(&["t2"], a));
    NfgDescription::new()
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("h1", h1)
        .vertex("h2", h2)
        .vertex("h3", h3)
        .internal("s1", ("f1", "s1"), ("h1", "s1"))
        .internal("t1", ("f1", "t1"), ("h2", "t1"))
        .internal("s2", ("f2", "s2"), ("h2", "s2"))
        .internal("t2", ("f2", "t2"), ("h3", "t2"))
        .half("x1", ("f1", "x1"))
        .half("x2", ("f2", "x2"))
        .validate()
}

/// Factor graph with `x1` in `f1, f2, f3`, `x2` in `f1` and `x3` in `f2, f3`.
pub fn three_function_fg<F: FnMut(&str, ProductDomain) -> Factor>(
    a: &Alphabet,
    mut fill: F,
) -> Result<FactorGraphDesc> {
    let vars = ["x1", "x2", "x3"].iter().map(|v| (v.to_string(), a.clone())).collect();
    let funcs = vec![
        FgFunction::new("f1", fill("f1", domain(&["x1", "x2"], a)), &["x1", "x2"]),
        FgFunction::new("f2", fill("f2", domain(&["x1", "x3"], a)), &["x1", "x3"]),
        FgFunction::new("f3", fill("f3", domain(&["x1", "x3"], a)), &["x1", "x3"]),
    ];
    FactorGraphDesc::new(vars, funcs)
}

/// Two interfaces: `g` on `f1, f2, f3` and `h` on `f2, f3`; latents
/// `f1(a1)`, `f2(a2, b2)`, `f3(a3, b3)`. Pass split interface tables for a
/// constrained model.
pub fn split_interface_example<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let g = fill("g", domain(&["x", "a1", "a2", "a3"], a));
    let h = fill("h", domain(&["y", "b2", "b3"], a));
    let f1 = fill("f1", domain(&["a1"], a));
    let f2 = fill("f2", domain(&["a2", "b2"], a));
    let f3 = fill("f3", domain(&["a3", "b3"], a));
    NfgDescription::new()
        .vertex("g", g)
        .vertex("h", h)
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("f3", f3)
        .internal("a1", ("g", "a1"), ("f1", "a1"))
        .internal("a2", ("g", "a2"), ("f2", "a2"))
        .internal("a3", ("g", "a3"), ("f3", "a3"))
        .internal("b2", ("h", "b2"), ("f2", "b2"))
        .internal("b3", ("h", "b3"), ("f3", "b3"))
        .half("x", ("g", "x"))
        .half("y", ("h", "y"))
        .validate()
}

/// Interfaces `g1 - f1`, `g2 - f1, f2`, `g3 - f2` with external `x1, x2, x3`.
///
/// With split interfaces `x1 ⊥ x3 | x2`; with conditional interfaces
/// `x1 ⊥ x3`.
pub fn independence_chain<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let g1 = fill("g1", domain(&["x1", "s1"], a));
    let g2 = fill("g2", domain(&["x2", "s2", "t2"], a));
    let g3 = fill("g3", domain(&["x3", "t3"], a));
    let f1 = fill("f1", domain(&["s1", "s2"], a));
    let f2 = fill("f2", domain(&["t2", "t3"], a));
    NfgDescription::new()
        .vertex("g1", g1)
        .vertex("g2", g2)
        .vertex("g3", g3)
        .vertex("f1", f1)
        .vertex("f2", f2)
        .internal("s1", ("g1", "s1"), ("f1", "s1"))
        .internal("s2", ("g2", "s2"), ("f1", "s2"))
        .internal("t2", ("g2", "t2"), ("f2", "t2"))
        .internal("t3", ("g3", "t3"), ("f2", "t3"))
        .half("x1", ("g1", "x1"))
        .half("x2", ("g2", "x2"))
        .half("x3", ("g3", "x3"))
        .validate()
}

/// Max indicator with the cumulus kernel on its first argument and
/// difference kernels on the others; realizes `δ=(x1, ..., xn)`.
pub fn max_lemma_graph(n: usize, a: &Alphabet) -> Result<NfgGraph> {
    let mut desc = NfgDescription::new()
        .vertex("max", make_indicator(IndicatorKind::Max, a, n)?)
        .vertex("A", make_kernel(KernelKind::Cumulus, a)?)
        .internal("s1", ("A", arg(2)), ("max", arg(1)))
        .half("x1", ("A", arg(1)));
    for i in 2..=n {
        let d = format!("D{i}");
        desc = desc
            .vertex(d.clone(), make_kernel(KernelKind::Difference, a)?)
            .internal(format!("s{i}"), ("max", arg(i)), (d.clone(), arg(1)))
            .half(format!("x{i}"), (d, arg(2)));
    }
    desc.validate()
}

/// The cumulative network with `u1` in `f1, f2, f3` and `u2` in `f2, f3`.
///
/// `fill` should supply CDF tables (see [`crate::random::random_cdf`]).
pub fn cdn_example<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<FactorGraphDesc> {
    let vars = ["u1", "u2"].iter().map(|v| (v.to_string(), a.clone())).collect();
    let funcs = vec![
        FgFunction::new("f1", fill("f1", domain(&["u1"], a)), &["u1"]),
        FgFunction::new("f2", fill("f2", domain(&["u1", "u2"], a)), &["u1", "u2"]),
        FgFunction::new("f3", fill("f3", domain(&["u1", "u2"], a)), &["u1", "u2"]),
    ];
    FactorGraphDesc::new(vars, funcs)
}

/// Triangle `f1(x1,y1,y3)`, `f2(y1,y2,x2)`, `f3(y2,y3,x3)`.
pub fn triangle<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let f1 = fill("f1", domain(&["x1", "y1", "y3"], a));
    let f2 = fill("f2", domain(&["x2", "y1", "y2"], a));
    let f3 = fill("f3", domain(&["x3", "y2", "y3"], a));
    NfgDescription::new()
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("f3", f3)
        .internal("y1", ("f1", "y1"), ("f2", "y1"))
        .internal("y2", ("f2", "y2"), ("f3", "y2"))
        .internal("y3", ("f1", "y3"), ("f3", "y3"))
        .half("x1", ("f1", "x1"))
        .half("x2", ("f2", "x2"))
        .half("x3", ("f3", "x3"))
        .validate()
}

/// Closed tree `f1(y1)`, `f2(y1,y2)`, `f3(y2,y3,y4)`, `f4(y3)`, `f5(y4)`.
pub fn spa_tree<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let f1 = fill("f1", domain(&["y1"], a));
    let f2 = fill("f2", domain(&["y1", "y2"], a));
    let f3 = fill("f3", domain(&["y2", "y3", "y4"], a));
    let f4 = fill("f4", domain(&["y3"], a));
    let f5 = fill("f5", domain(&["y4"], a));
    NfgDescription::new()
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("f3", f3)
        .vertex("f4", f4)
        .vertex("f5", f5)
        .internal("y1", ("f1", "y1"), ("f2", "y1"))
        .internal("y2", ("f2", "y2"), ("f3", "y2"))
        .internal("y3", ("f3", "y3"), ("f4", "y3"))
        .internal("y4", ("f3", "y4"), ("f5", "y4"))
        .validate()
}

/// Equality interfaces `q1` (external `x1`) and `q2` (external `x2`) over
/// hidden `f1(y1)`, `f2(z1, z2)`, `f3(y2)`; a tree with `q1 - f1`,
/// `q1 - f2`, `q2 - f2`, `q2 - f3`. `fill` is called for the hidden functions only.
pub fn derivative_tree<F: FnMut(&str, ProductDomain) -> Factor>(a: &Alphabet, mut fill: F) -> Result<NfgGraph> {
    let eq = make_indicator(IndicatorKind::Equality, a, 3)?;
    let f1 = fill("f1", domain(&["y1"], a));
    let f2 = fill("f2", domain(&["z1", "z2"], a));
    let f3 = fill("f3", domain(&["y2"], a));
    NfgDescription::new()
        .vertex("q1", eq.clone())
        .vertex("q2", eq)
        .vertex("f1", f1)
        .vertex("f2", f2)
        .vertex("f3", f3)
        .internal("y1", ("q1", arg(2)), ("f1", "y1"))
        .internal("z1", ("q1", arg(3)), ("f2", "z1"))
        .internal("z2", ("q2", arg(3)), ("f2", "z2"))
        .internal("y2", ("q2", arg(2)), ("f3", "y2"))
        .half("x1", ("q1", arg(1)))
        .half("x2", ("q2", arg(1)))
        .validate()
}
