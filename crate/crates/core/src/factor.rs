//! Dense complex-valued tables over labelled product domains, and the
//! sum-of-products contraction that glues them together.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::algebra::{Alphabet, Axis, ProductDomain};
use crate::error::{NfgError, Result};

/// Default relative tolerance for structural tests on factors.
pub const DEFAULT_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A complex-valued function on a [`ProductDomain`], stored densely in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    domain: ProductDomain,
    values: Vec<Complex64>,
}

impl Factor {
    pub fn new(domain: ProductDomain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.size() {
            return Err(NfgError::ShapeMismatch {
                expected: domain.size(),
                got: values.len(),
            });
        }
        Ok(Self { domain, values })
    }

    pub fn from_real(domain: ProductDomain, values: &[f64]) -> Result<Self> {
        Self::new(domain, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Tabulates `f` over every coordinate tuple of `domain`.
    pub fn from_fn(domain: ProductDomain, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let sizes = domain.sizes();
        let mut coords = vec![0; sizes.len()];
        let mut values = Vec::with_capacity(domain.size());
        for _ in 0..domain.size() {
            values.push(f(&coords));
            advance(&mut coords, &sizes);
        }
        Self { domain, values }
    }

    pub fn scalar(c: Complex64) -> Self {
        Self {
            domain: ProductDomain::scalar(),
            values: vec![c],
        }
    }

    pub fn ones(domain: ProductDomain) -> Self {
        let n = domain.size();
        Self {
            domain,
            values: vec![ONE; n],
        }
    }

    pub fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn rank(&self) -> usize {
        self.domain.rank()
    }

    pub fn labels(&self) -> Vec<String> {
        self.domain.labels().map(str::to_owned).collect()
    }

    pub fn axis(&self, label: &str) -> Result<&Axis> {
        self.domain
            .axis(label)
            .ok_or_else(|| NfgError::UnknownLabel(label.to_owned()))
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.domain
            .position(label)
            .ok_or_else(|| NfgError::UnknownLabel(label.to_owned()))
    }

    pub fn get(&self, coords: &[usize]) -> Result<Complex64> {
        Ok(self.values[self.domain.linear_index(coords)?])
    }

    /// Value at a full assignment given by label.
    pub fn at(&self, assignment: &[(&str, usize)]) -> Result<Complex64> {
        let mut coords = vec![usize::MAX; self.rank()];
        for &(label, v) in assignment {
            coords[self.position(label)?] = v;
        }
        if let Some(i) = coords.iter().position(|&c| c == usize::MAX) {
            return Err(NfgError::UnknownLabel(format!(
                "missing value for `{}`",
                self.domain.axes()[i].label
            )));
        }
        self.get(&coords)
    }

    /// The single value of a rank-0 factor.
    pub fn scalar_value(&self) -> Option<Complex64> {
        (self.rank() == 0).then(|| self.values[0])
    }

    pub fn sum_all(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Factor {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Factor {
        Factor {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when every entry is real and nonnegative up to `tol` (absolute).
    pub fn is_nonnegative_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol && v.re >= -tol)
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Factor> {
        let pos = self.position(from)?;
        let mut axes = self.domain.axes().to_vec();
        axes[pos].label = to.to_owned();
        Ok(Factor {
            domain: ProductDomain::new(axes)?,
            values: self.values.clone(),
        })
    }

    /// Renames every axis through `rename`; values are untouched.
    pub fn relabel_with(&self, rename: impl Fn(&str) -> String) -> Result<Factor> {
        let axes = self
            .domain
            .axes()
            .iter()
            .map(|a| Axis::new(rename(&a.label), a.alphabet.clone()))
            .collect();
        Ok(Factor {
            domain: ProductDomain::new(axes)?,
            values: self.values.clone(),
        })
    }

    /// Replaces axis alphabets (same sizes) without touching values.
    pub fn with_alphabet(&self, label: &str, alphabet: Alphabet) -> Result<Factor> {
        let pos = self.position(label)?;
        let old = &self.domain.axes()[pos];
        if !old.alphabet.compatible(&alphabet) {
            return Err(NfgError::AlphabetMismatch {
                label: label.to_owned(),
                left: old.size(),
                right: alphabet.size(),
            });
        }
        let mut axes = self.domain.axes().to_vec();
        axes[pos].alphabet = alphabet;
        Ok(Factor {
            domain: ProductDomain::with_axes(axes),
            values: self.values.clone(),
        })
    }

    /// Reorders axes to `order`, which must be a permutation of the labels.
    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Factor> {
        if order.len() != self.rank() {
            return Err(NfgError::ShapeMismatch {
                expected: self.rank(),
                got: order.len(),
            });
        }
        let perm: Vec<usize> = order.iter().map(|l| self.position(l.as_ref())).collect::<Result<_>>()?;
        let axes: Vec<Axis> = perm.iter().map(|&p| self.domain.axes()[p].clone()).collect();
        let domain = ProductDomain::new(axes)?;
        let old_strides = self.domain.strides();
        let strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let sizes = domain.sizes();
        let mut coords = vec![0; sizes.len()];
        let mut values = Vec::with_capacity(self.values.len());
        for _ in 0..self.values.len() {
            let off: usize = coords.iter().zip(&strides).map(|(c, s)| c * s).sum();
            values.push(self.values[off]);
            advance(&mut coords, &sizes);
        }
        Ok(Factor { domain, values })
    }

    /// Maximum entrywise difference after aligning axes by label.
    pub fn abs_diff(&self, other: &Factor) -> Result<f64> {
        let other = other.permute(&self.labels())?;
        for (a, b) in self.domain.axes().iter().zip(other.domain.axes()) {
            if a.size() != b.size() {
                return Err(NfgError::AlphabetMismatch {
                    label: a.label.clone(),
                    left: a.size(),
                    right: b.size(),
                });
            }
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// [`Factor::abs_diff`] relative to the larger of the two max magnitudes.
    pub fn rel_diff(&self, other: &Factor) -> Result<f64> {
        let d = self.abs_diff(other)?;
        let scale = self.max_abs().max(other.max_abs());
        Ok(if scale == 0.0 { d } else { d / scale })
    }

    pub fn approx_eq(&self, other: &Factor, tol: f64) -> bool {
        self.rel_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    /// Restricts to `keep == drop` and removes `drop`.
    pub fn diagonal(&self, keep: &str, drop: &str) -> Result<Factor> {
        let (pk, pd) = (self.position(keep)?, self.position(drop)?);
        let (ak, ad) = (&self.domain.axes()[pk], &self.domain.axes()[pd]);
        if ak.size() != ad.size() {
            return Err(NfgError::AlphabetMismatch {
                label: drop.to_owned(),
                left: ak.size(),
                right: ad.size(),
            });
        }
        let axes: Vec<Axis> = self
            .domain
            .axes()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pd)
            .map(|(_, a)| a.clone())
            .collect();
        let domain = ProductDomain::new(axes)?;
        let (sk, sd) = (self.domain.strides()[pk], self.domain.strides()[pd]);
        let pk_new = domain.position(keep).expect("kept axis");
        let other_strides: Vec<usize> = {
            let old = self.domain.strides();
            (0..self.rank()).filter(|&i| i != pd).map(|i| old[i]).collect()
        };
        Ok(Factor::from_fn(domain, |c| {
            let mut off = 0;
            for (i, (&ci, &s)) in c.iter().zip(&other_strides).enumerate() {
                off += if i == pk_new { ci * (sk + sd) } else { ci * s };
            }
            self.values[off]
        }))
    }

    /// Sums the diagonal `a == b`, removing both axes.
    pub fn trace(&self, a: &str, b: &str) -> Result<Factor> {
        let d = self.diagonal(a, b)?;
        marginalize(&d, a, Marginalization::Sum)
    }

    /// Slices the axis at `value` and removes it.
    pub fn evaluate(&self, label: &str, value: usize) -> Result<Factor> {
        marginalize(self, label, Marginalization::Evaluate(value))
    }
}

fn advance(coords: &mut [usize], sizes: &[usize]) {
    for i in (0..coords.len()).rev() {
        coords[i] += 1;
        if coords[i] < sizes[i] {
            return;
        }
        coords[i] = 0;
    }
}

/// Generalized product: multiplies `factors` and sums every label not in `output`.
///
/// Labels may appear in any number of inputs. Returns the result together
/// with the number of multiply-accumulate steps (the joint state count).
pub fn sum_of_products<S: AsRef<str>>(factors: &[Factor], output: &[S]) -> Result<(Factor, u64)> {
    let mut labels: Vec<Axis> = Vec::new();
    for f in factors {
        for a in f.domain.axes() {
            match labels.iter().find(|b| b.label == a.label) {
                Some(b) if !b.alphabet.compatible(&a.alphabet) => {
                    return Err(NfgError::AlphabetMismatch {
                        label: a.label.clone(),
                        left: b.size(),
                        right: a.size(),
                    })
                }
                Some(_) => {}
                None => labels.push(a.clone()),
            }
        }
    }
    let mut order: Vec<Axis> = Vec::with_capacity(labels.len());
    for l in output {
        let axis = labels
            .iter()
            .find(|a| a.label == l.as_ref())
            .ok_or_else(|| NfgError::UnknownLabel(l.as_ref().to_owned()))?;
        order.push(axis.clone());
    }
    let out_domain = ProductDomain::new(order.clone())?;
    for a in &labels {
        if out_domain.position(&a.label).is_none() {
            order.push(a.clone());
        }
    }
    let sizes: Vec<usize> = order.iter().map(Axis::size).collect();
    let total: usize = sizes.iter().product();
    let summed: usize = sizes[out_domain.rank()..].iter().product();

    let index: HashMap<&str, usize> = order.iter().enumerate().map(|(i, a)| (a.label.as_str(), i)).collect();
    let strides: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            let mut s = vec![0; order.len()];
            for (a, st) in f.domain.axes().iter().zip(f.domain.strides()) {
                s[index[a.label.as_str()]] = st;
            }
            s
        })
        .collect();

    let mut out = vec![ZERO; out_domain.size()];
    let mut coords = vec![0; order.len()];
    let mut offsets = vec![0usize; factors.len()];
    for state in 0..total {
        let mut p = ONE;
        for (f, &off) in factors.iter().zip(&offsets) {
            p *= f.values[off];
        }
        out[state / summed] += p;
        // odometer step with incremental offsets
        for i in (0..coords.len()).rev() {
            coords[i] += 1;
            for (off, s) in offsets.iter_mut().zip(&strides) {
                *off += s[i];
            }
            if coords[i] < sizes[i] {
                break;
            }
            for (off, s) in offsets.iter_mut().zip(&strides) {
                *off -= s[i] * sizes[i];
            }
            coords[i] = 0;
        }
    }
    Ok((
        Factor {
            domain: out_domain,
            values: out,
        },
        total as u64,
    ))
}

/// Labels appearing exactly once across `factors`, in first-appearance order.
/// Fails if any label appears in three or more inputs or twice in one.
pub fn free_labels(factors: &[Factor]) -> Result<Vec<String>> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for f in factors {
        for l in f.domain.labels() {
            match counts.iter_mut().find(|(k, _)| k == l) {
                Some((_, c)) => *c += 1,
                None => counts.push((l.to_owned(), 1)),
            }
        }
    }
    if let Some((l, _)) = counts.iter().find(|(_, c)| *c >= 3) {
        return Err(NfgError::LabelOverused(l.clone()));
    }
    Ok(counts.into_iter().filter(|(_, c)| *c == 1).map(|(l, _)| l).collect())
}

/// The sum-of-products form: labels shared by two inputs are summed, the rest survive.
pub fn contract(factors: &[Factor]) -> Result<Factor> {
    contract_counted(factors).map(|(f, _)| f)
}

/// [`contract`] together with its multiply-accumulate count.
pub fn contract_counted(factors: &[Factor]) -> Result<(Factor, u64)> {
    let free = free_labels(factors)?;
    sum_of_products(factors, &free)
}

/// Pointwise product keeping every label (shared labels are identified, not summed).
pub fn product(factors: &[Factor]) -> Result<Factor> {
    let mut all: Vec<String> = Vec::new();
    for f in factors {
        for l in f.domain.labels() {
            if !all.iter().any(|k| k == l) {
                all.push(l.to_owned());
            }
        }
    }
    sum_of_products(factors, &all).map(|(f, _)| f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marginalization {
    Sum,
    Evaluate(usize),
}

/// Removes `label`, either by summation or by slicing at a value.
pub fn marginalize(f: &Factor, label: &str, mode: Marginalization) -> Result<Factor> {
    let pos = f.position(label)?;
    match mode {
        Marginalization::Sum => {
            let rest: Vec<String> = f.labels().into_iter().filter(|l| l != label).collect();
            sum_of_products(std::slice::from_ref(f), &rest).map(|(g, _)| g)
        }
        Marginalization::Evaluate(v) => {
            let axis = &f.domain.axes()[pos];
            axis.alphabet.check(v)?;
            let axes: Vec<Axis> = f.domain.axes().iter().filter(|a| a.label != label).cloned().collect();
            let domain = ProductDomain::with_axes(axes);
            let stride = f.domain.strides()[pos];
            let size = axis.size();
            let inner = stride;
            let values = f
                .values
                .chunks(inner * size)
                .flat_map(|block| block[v * inner..(v + 1) * inner].iter().copied())
                .collect();
            Ok(Factor { domain, values })
        }
    }
}

/// Per-axis profiles of a rank-one table, anchored at its largest entry.
///
/// Returns `None` if the table is not an outer product within `tol * scale`.
/// An all-zero (below tolerance) table yields `Some` with no anchor.
fn outer_profiles(
    values: &[Complex64],
    sizes: &[usize],
    tol: f64,
    scale: f64,
) -> Option<Option<(Complex64, Vec<Vec<Complex64>>)>> {
    let (anchor_idx, anchor_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, v)| (i, *v))?;
    if anchor_val.norm() <= tol * scale {
        return Some(None);
    }
    let anchor = crate::algebra::decode_mixed(sizes, anchor_idx);
    let strides: Vec<usize> = {
        let mut s = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * sizes[i + 1];
        }
        s
    };
    let profiles: Vec<Vec<Complex64>> = (0..sizes.len())
        .map(|k| {
            (0..sizes[k])
                .map(|x| {
                    let idx = anchor_idx - anchor[k] * strides[k] + x * strides[k];
                    values[idx]
                })
                .collect()
        })
        .collect();
    let denom = anchor_val.powu(sizes.len().saturating_sub(1) as u32);
    let mut coords = vec![0; sizes.len()];
    for &v in values {
        let pred: Complex64 = coords
            .iter()
            .enumerate()
            .map(|(k, &c)| profiles[k][c])
            .product::<Complex64>()
            / denom;
        if (pred - v).norm() > tol * scale {
            return None;
        }
        advance(&mut coords, sizes);
    }
    Some(Some((anchor_val, profiles)))
}

/// True when `f` is a product of univariate functions of its axes (within `tol`).
pub fn is_product_of_univariates(f: &Factor, tol: f64) -> bool {
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    outer_profiles(&f.values, &f.domain.sizes(), tol, scale).is_some()
}

/// Splits `f` via `pivot` into bivariate factors `f_k(pivot, x_k)`.
///
/// For every pivot value the slice over the remaining axes must be an outer
/// product. Every bivariate after the first has its largest entry per nonzero
/// slice scaled to one; the first carries the remaining scale.
pub fn split_decompose(f: &Factor, pivot: &str, tol: f64) -> Option<Vec<Factor>> {
    if f.rank() < 2 {
        return None;
    }
    let pivot_axis = f.axis(pivot).ok()?.clone();
    let others: Vec<Axis> = f.domain.axes().iter().filter(|a| a.label != pivot).cloned().collect();
    let mut order = vec![pivot.to_owned()];
    order.extend(others.iter().map(|a| a.label.clone()));
    let g = f.permute(&order).ok()?;
    let sizes: Vec<usize> = others.iter().map(Axis::size).collect();
    let rest: usize = sizes.iter().product();
    let scale = f.max_abs().max(f64::MIN_POSITIVE);

    let mut tables: Vec<Vec<Complex64>> = others
        .iter()
        .map(|a| vec![ZERO; pivot_axis.size() * a.size()])
        .collect();
    for p in 0..pivot_axis.size() {
        let slice = &g.values[p * rest..(p + 1) * rest];
        match outer_profiles(slice, &sizes, tol, scale)? {
            None => {
                for (k, t) in tables.iter_mut().enumerate() {
                    let fill = if k == 0 { ZERO } else { ONE };
                    t[p * sizes[k]..(p + 1) * sizes[k]].fill(fill);
                }
            }
            Some((anchor, profiles)) => {
                for (k, (t, prof)) in tables.iter_mut().zip(&profiles).enumerate() {
                    for (x, &v) in prof.iter().enumerate() {
                        t[p * sizes[k] + x] = if k == 0 { v } else { v / anchor };
                    }
                }
            }
        }
    }
    Some(
        others
            .into_iter()
            .zip(tables)
            .map(|(a, t)| {
                let d = ProductDomain::with_axes(vec![pivot_axis.clone(), a]);
                Factor { domain: d, values: t }
            })
            .collect(),
    )
}

/// The constant `c` with `sum_pivot f = c` for every assignment of the other axes.
pub fn conditional_constant(f: &Factor, pivot: &str, tol: f64) -> Option<Complex64> {
    let m = marginalize(f, pivot, Marginalization::Sum).ok()?;
    let c = m.values[0];
    let scale = f.max_abs().max(m.max_abs()).max(f64::MIN_POSITIVE);
    m.values.iter().all(|v| (v - c).norm() <= tol * scale).then_some(c)
}
