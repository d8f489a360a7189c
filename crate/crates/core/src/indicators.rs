//! Special local functions: 0/1 indicators and the bivariate transformer kernels.

use std::fmt;

use num_complex::Complex64;

use crate::algebra::{make_product_domain, Alphabet};
use crate::error::{NfgError, Result};
use crate::factor::{contract, Factor};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn bit(b: bool) -> Complex64 {
    if b {
        ONE
    } else {
        ZERO
    }
}

/// Axis label of the `i`-th (1-based) argument of a constructed indicator or kernel.
pub fn arg(i: usize) -> String {
    format!("arg{i}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndicatorKind {
    /// `[x1 = x2 = ... = xn]`
    Equality,
    /// `[x1 = x2 + ... + xn]` over a group.
    Sum,
    /// `[x1 + ... + xn = 0]` over a group.
    Parity,
    /// `[x1 = max(x2, ..., xn)]`, componentwise on ordered products.
    Max,
    /// `[x = v]`, univariate.
    Evaluation(usize),
    /// Constant one, univariate.
    One,
}

impl IndicatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            IndicatorKind::Equality => "eq",
            IndicatorKind::Sum => "sum",
            IndicatorKind::Parity => "parity",
            IndicatorKind::Max => "max",
            IndicatorKind::Evaluation(_) => "eval",
            IndicatorKind::One => "one",
        }
    }

    /// Parses a kind name; `eval` needs `value`.
    pub fn from_name(name: &str, value: Option<usize>) -> Result<Self> {
        Ok(match name {
            "eq" => IndicatorKind::Equality,
            "sum" => IndicatorKind::Sum,
            "parity" => IndicatorKind::Parity,
            "max" => IndicatorKind::Max,
            "one" => IndicatorKind::One,
            "eval" => IndicatorKind::Evaluation(
                value.ok_or_else(|| NfgError::InvalidIndicator("`eval` needs a value".into()))?,
            ),
            other => return Err(NfgError::InvalidIndicator(format!("unknown indicator kind `{other}`"))),
        })
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndicatorKind::Evaluation(v) => write!(f, "eval({v})"),
            k => f.write_str(k.name()),
        }
    }
}

fn domain_n(alphabet: &Alphabet, degree: usize) -> crate::algebra::ProductDomain {
    make_product_domain((1..=degree).map(|i| (arg(i), alphabet.clone()))).expect("distinct labels")
}

/// Builds an indicator over `degree` copies of `alphabet`, axes `arg1..argn`.
pub fn make_indicator(kind: IndicatorKind, alphabet: &Alphabet, degree: usize) -> Result<Factor> {
    match kind {
        IndicatorKind::Evaluation(_) | IndicatorKind::One if degree != 1 => {
            return Err(NfgError::InvalidIndicator(format!(
                "`{}` is univariate, got degree {degree}",
                kind.name()
            )))
        }
        IndicatorKind::Equality | IndicatorKind::Sum | IndicatorKind::Parity | IndicatorKind::Max if degree < 2 => {
            return Err(NfgError::InvalidIndicator(format!(
                "`{}` needs degree at least 2, got {degree}",
                kind.name()
            )))
        }
        _ => {}
    }
    indicator_table(kind, alphabet, degree)
}

/// As [`make_indicator`] but also admits degree-1 equality, sum and parity
/// (`1`, `[x = 0]` and `[x = 0]` respectively).
pub(crate) fn indicator_table(kind: IndicatorKind, alphabet: &Alphabet, degree: usize) -> Result<Factor> {
    if degree == 0 {
        return Err(NfgError::InvalidIndicator("degree must be positive".into()));
    }
    let d = domain_n(alphabet, degree);
    Ok(match kind {
        IndicatorKind::Equality => Factor::from_fn(d, |x| bit(x.iter().all(|&v| v == x[0]))),
        IndicatorKind::Sum | IndicatorKind::Parity => {
            let g = alphabet.as_group().ok_or_else(|| {
                NfgError::InvalidIndicator(format!("`{}` needs a group alphabet, got {alphabet}", kind.name()))
            })?;
            let sum_kind = kind == IndicatorKind::Sum;
            Factor::from_fn(d, |x| {
                let tail = x[1..].iter().fold(0, |acc, &v| g.add(acc, v).expect("in range"));
                bit(if sum_kind {
                    x[0] == tail
                } else {
                    g.add(x[0], tail).expect("in range") == 0
                })
            })
        }
        IndicatorKind::Max => {
            let o = alphabet.as_ordered().ok_or_else(|| {
                NfgError::InvalidIndicator(format!("`max` needs an ordered alphabet, got {alphabet}"))
            })?;
            Factor::from_fn(d, |x| {
                let m = x[2..].iter().fold(x[1], |acc, &v| o.max(acc, v));
                bit(x[0] == m)
            })
        }
        IndicatorKind::Evaluation(v) => {
            alphabet.check(v)?;
            Factor::from_fn(d, |x| bit(x[0] == v))
        }
        IndicatorKind::One => Factor::ones(d),
    })
}

/// Recognizes an equality, sum or max indicator table.
///
/// Returns the kind with its distinguished axis label (the first axis for
/// equality). All axes must share one alphabet.
pub fn identify_indicator(f: &Factor) -> Option<(IndicatorKind, String)> {
    let axes = f.domain().axes();
    if axes.len() < 2 || axes.iter().any(|a| a.size() != axes[0].size()) {
        return None;
    }
    if f.values().iter().any(|v| *v != ZERO && *v != ONE) {
        return None;
    }
    let alphabet = &axes[0].alphabet;
    let n = axes.len();
    let eq = make_indicator(IndicatorKind::Equality, &Alphabet::plain(alphabet.size()), n).ok()?;
    if eq.values() == f.values() {
        return Some((IndicatorKind::Equality, axes[0].label.clone()));
    }
    for kind in [IndicatorKind::Sum, IndicatorKind::Max] {
        let Ok(table) = make_indicator(kind, alphabet, n) else {
            continue;
        };
        for head in axes {
            let mut order = vec![head.label.clone()];
            order.extend(axes.iter().filter(|a| a.label != head.label).map(|a| a.label.clone()));
            if f.permute(&order).ok()?.values() == table.values() {
                return Some((kind, head.label.clone()));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `A(x, x') = [x' <= x]`
    Cumulus,
    /// `D(x, x')`: 1 on the diagonal, -1 when `x = x' + 1`, componentwise product.
    Difference,
    /// The character pairing `κ(x, x̂)`.
    Fourier,
    /// `κ(x, -x̂) / |X|`.
    FourierInverse,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Cumulus => "cumulus",
            KernelKind::Difference => "difference",
            KernelKind::Fourier => "fourier",
            KernelKind::FourierInverse => "fourier_inv",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "cumulus" => KernelKind::Cumulus,
            "difference" => KernelKind::Difference,
            "fourier" => KernelKind::Fourier,
            "fourier_inv" => KernelKind::FourierInverse,
            other => return Err(NfgError::InvalidIndicator(format!("unknown kernel kind `{other}`"))),
        })
    }

    /// The kernel undoing this one.
    pub fn inverse(&self) -> KernelKind {
        match self {
            KernelKind::Cumulus => KernelKind::Difference,
            KernelKind::Difference => KernelKind::Cumulus,
            KernelKind::Fourier => KernelKind::FourierInverse,
            KernelKind::FourierInverse => KernelKind::Fourier,
        }
    }
}

/// Bivariate kernel table with axes `arg1, arg2`.
pub fn make_kernel(kind: KernelKind, alphabet: &Alphabet) -> Result<Factor> {
    let d = domain_n(alphabet, 2);
    match kind {
        KernelKind::Cumulus | KernelKind::Difference => {
            let o = alphabet.as_ordered().ok_or_else(|| {
                NfgError::InvalidIndicator(format!("`{}` needs an ordered alphabet, got {alphabet}", kind.name()))
            })?;
            let cumulus = kind == KernelKind::Cumulus;
            Ok(Factor::from_fn(d, |x| {
                if cumulus {
                    return bit(o.leq(x[1], x[0]));
                }
                let (a, b) = (o.decode(x[0]), o.decode(x[1]));
                let v: f64 = a
                    .iter()
                    .zip(&b)
                    .map(|(&ai, &bi)| {
                        if ai == bi {
                            1.0
                        } else if ai == bi + 1 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .product();
                Complex64::new(v, 0.0)
            }))
        }
        KernelKind::Fourier | KernelKind::FourierInverse => {
            let g = alphabet.as_group().ok_or_else(|| {
                NfgError::InvalidIndicator(format!("`{}` needs a group alphabet, got {alphabet}", kind.name()))
            })?;
            let forward = kind == KernelKind::Fourier;
            Ok(Factor::from_fn(d, |x| {
                if forward {
                    g.character(x[0], x[1]).expect("in range")
                } else {
                    g.dual_character(x[0], x[1]).expect("in range")
                }
            }))
        }
    }
}

/// Two bivariate factors `g(arg1, arg2)`, `g⁻(arg1, arg2)` with
/// `Σ_s g(a, s) g⁻(s, b) = [a = b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformerPair {
    forward: Factor,
    inverse: Factor,
}

impl TransformerPair {
    /// Checks the inverse-pair identity to relative `tol`.
    pub fn new(forward: Factor, inverse: Factor, tol: f64) -> Result<Self> {
        let pair = Self { forward, inverse };
        let err = pair.inverse_error()?;
        if err > tol {
            return Err(NfgError::NotInversePair(err));
        }
        Ok(pair)
    }

    pub fn forward(&self) -> &Factor {
        &self.forward
    }

    pub fn inverse(&self) -> &Factor {
        &self.inverse
    }

    /// The pair read in the other direction, `(g⁻, g)`.
    pub fn reversed(&self) -> TransformerPair {
        TransformerPair {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Maximum deviation of `⟨g, g⁻⟩` from the equality indicator.
    pub fn inverse_error(&self) -> Result<f64> {
        for (name, f) in [("forward", &self.forward), ("inverse", &self.inverse)] {
            if f.labels() != [arg(1), arg(2)] {
                return Err(NfgError::InvalidIndicator(format!(
                    "{name} transformer must have axes arg1, arg2"
                )));
            }
        }
        let g = self
            .forward
            .relabel_with(|l| if l == "arg1" { "a".into() } else { "s".into() })?;
        let h = self
            .inverse
            .relabel_with(|l| if l == "arg1" { "s".into() } else { "b".into() })?;
        let alpha = g.axis("a")?.alphabet.clone();
        let eq = make_indicator(IndicatorKind::Equality, &alpha, 2)?.relabel_with(|l| {
            if l == "arg1" {
                "a".into()
            } else {
                "b".into()
            }
        })?;
        let prod = contract(&[g, h])?;
        prod.abs_diff(&eq)
    }

    pub fn identity(alphabet: &Alphabet) -> Result<Self> {
        let eq = make_indicator(IndicatorKind::Equality, alphabet, 2)?;
        Ok(Self {
            forward: eq.clone(),
            inverse: eq,
        })
    }
}

/// The cumulus/difference pair `(A, D)` on an ordered alphabet or ordered product.
pub fn make_cumulus_pair(alphabet: &Alphabet) -> Result<TransformerPair> {
    TransformerPair::new(
        make_kernel(KernelKind::Cumulus, alphabet)?,
        make_kernel(KernelKind::Difference, alphabet)?,
        1e-12,
    )
}

/// The Fourier pair `(κ, κ̂)` on a finite abelian group.
pub fn make_fourier_pair(alphabet: &Alphabet) -> Result<TransformerPair> {
    TransformerPair::new(
        make_kernel(KernelKind::Fourier, alphabet)?,
        make_kernel(KernelKind::FourierInverse, alphabet)?,
        1e-12,
    )
}
