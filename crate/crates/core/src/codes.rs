//! Linear codes over prime fields as NFG models, and their Fourier duals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_complex::Complex64;

use crate::algebra::{decode_mixed, Alphabet};
use crate::error::{NfgError, Result};
use crate::exterior::{eliminate, EliminationOptions};
use crate::factor::Factor;
use crate::indicators::{arg, indicator_table, make_fourier_pair, make_kernel, IndicatorKind, KernelKind};
use crate::nfg::{NfgDescription, NfgGraph};
use crate::transform::{holographic_transform, HolographicSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeForm {
    /// `n × k` matrix `G`; the code is `{G x : x ∈ F^k}`.
    Generator,
    /// `(n − k) × n` matrix `H`; the code is `{c : H c = 0}`.
    Parity,
}

/// A linear code over `Z_p` given by a generator or parity-check matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCodeSpec {
    p: usize,
    n: usize,
    k: usize,
    form: CodeForm,
    matrix: Vec<Vec<usize>>,
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

impl LinearCodeSpec {
    pub fn new(p: usize, n: usize, k: usize, form: CodeForm, matrix: Vec<Vec<usize>>) -> Result<Self> {
        if !is_prime(p) {
            return Err(NfgError::InvalidCode(format!("{p} is not prime")));
        }
        if k > n {
            return Err(NfgError::InvalidCode(format!("dimension {k} exceeds length {n}")));
        }
        let (rows, cols) = match form {
            CodeForm::Generator => (n, k),
            CodeForm::Parity => (n - k, n),
        };
        if matrix.len() != rows || matrix.iter().any(|r| r.len() != cols) {
            return Err(NfgError::InvalidCode(format!("expected a {rows} × {cols} matrix")));
        }
        if let Some(v) = matrix.iter().flatten().find(|&&v| v >= p) {
            return Err(NfgError::InvalidCode(format!("entry {v} is not a residue mod {p}")));
        }
        let spec = Self { p, n, k, form, matrix };
        match form {
            CodeForm::Generator => {
                if let Some(j) = (0..k).find(|&j| spec.matrix.iter().all(|r| r[j] == 0)) {
                    return Err(NfgError::InvalidCode(format!("generator column {} is zero", j + 1)));
                }
            }
            CodeForm::Parity => {
                if let Some(j) = spec.matrix.iter().position(|r| r.iter().all(|&v| v == 0)) {
                    return Err(NfgError::InvalidCode(format!("check row {} is zero", j + 1)));
                }
            }
        }
        Ok(spec)
    }

    /// Parses `p n k` followed by matrix rows; `#` starts a comment.
    ///
    /// The form follows from the shape: `n` rows of `k` entries is a
    /// generator, `n − k` rows of `n` entries a parity-check matrix.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let numbers = |line: &str| -> Result<Vec<usize>> {
            line.split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| NfgError::Parse(format!("`{t}` is not a residue")))
                })
                .collect()
        };
        let header = numbers(lines.next().ok_or_else(|| NfgError::Parse("empty code file".into()))?)?;
        let [p, n, k] = header[..] else {
            return Err(NfgError::Parse("header must be `p n k`".into()));
        };
        let matrix: Vec<Vec<usize>> = lines.map(numbers).collect::<Result<_>>()?;
        let form = match matrix.first().map(Vec::len) {
            Some(w) if w == k && matrix.len() == n => CodeForm::Generator,
            _ if k <= n && matrix.len() == n - k => CodeForm::Parity,
            _ => CodeForm::Generator,
        };
        Self::new(p, n, k, form, matrix)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn form(&self) -> CodeForm {
        self.form
    }

    pub fn matrix(&self) -> &[Vec<usize>] {
        &self.matrix
    }

    /// Codeword coordinate names `c1..cn`, zero-padded so they sort numerically.
    pub fn coordinate_names(&self) -> Vec<String> {
        let w = self.n.to_string().len();
        (1..=self.n).map(|i| format!("c{i:0w$}")).collect()
    }

    /// All codewords by direct enumeration of the matrix, sorted.
    pub fn enumerate(&self) -> Vec<Vec<usize>> {
        let p = self.p;
        let mut words = BTreeSet::new();
        match self.form {
            CodeForm::Generator => {
                let radices = vec![p; self.k];
                for m in 0..p.pow(self.k as u32) {
                    let x = decode_mixed(&radices, m);
                    words.insert(
                        self.matrix
                            .iter()
                            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum::<usize>() % p)
                            .collect(),
                    );
                }
            }
            CodeForm::Parity => {
                let radices = vec![p; self.n];
                for m in 0..p.pow(self.n as u32) {
                    let c = decode_mixed(&radices, m);
                    if self
                        .matrix
                        .iter()
                        .all(|row| row.iter().zip(&c).map(|(a, b)| a * b).sum::<usize>() % p == 0)
                    {
                        words.insert(c);
                    }
                }
            }
        }
        words.into_iter().collect()
    }
}

impl fmt::Display for LinearCodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.p, self.n, self.k)?;
        for row in &self.matrix {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// The standard `[7, 4, 3]` binary Hamming code: systematic generator and its parity-check matrix.
pub fn hamming_7_4() -> (LinearCodeSpec, LinearCodeSpec) {
    let parity_part = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];
    let mut g = Vec::new();
    for i in 0..4 {
        g.push((0..4).map(|j| usize::from(i == j)).collect());
    }
    for c in 0..3 {
        g.push(parity_part.iter().map(|r| r[c]).collect());
    }
    let h = (0..3)
        .map(|c| {
            let mut row: Vec<usize> = parity_part.iter().map(|r| r[c]).collect();
            row.extend((0..3).map(|j| usize::from(j == c)));
            row
        })
        .collect();
    (
        LinearCodeSpec::new(2, 7, 4, CodeForm::Generator, g).expect("valid"),
        LinearCodeSpec::new(2, 7, 4, CodeForm::Parity, h).expect("valid"),
    )
}

/// `[y = a · x]` over `Z_p`, axes `arg1 = y`, `arg2 = x`.
pub fn multiply_indicator(alphabet: &Alphabet, a: usize) -> Result<Factor> {
    let p = alphabet.size();
    let domain = crate::algebra::make_product_domain([(arg(1), alphabet.clone()), (arg(2), alphabet.clone())])?;
    Ok(Factor::from_fn(domain, |x| {
        Complex64::new(if x[0] == (a * x[1]) % p { 1.0 } else { 0.0 }, 0.0)
    }))
}

/// Vertex and edge plan shared by both realizations.
///
/// `outer` vertices carry the half edges, `inner` vertices are the latents;
/// `entries[(o, i)] = a` joins them with coefficient `a`, the multiplication
/// applied on the side given by `scale_outer`.
struct Bipartite<'a> {
    spec: &'a LinearCodeSpec,
    outer_kind: IndicatorKind,
    inner_kind: IndicatorKind,
    inner_prefix: &'a str,
    entries: Vec<(usize, usize, usize)>,
    inner_count: usize,
    /// Coefficient multiplies the latent-side value (generator) or the interface-side value (parity).
    scale_outer: bool,
}

fn pad(i: usize, n: usize) -> String {
    let w = n.to_string().len();
    format!("{i:0w$}")
}

impl Bipartite<'_> {
    fn build(&self) -> Result<NfgGraph> {
        let alphabet = Alphabet::cyclic(self.spec.p);
        let n = self.spec.n;
        let m = self.inner_count;
        let names = self.spec.coordinate_names();
        let mut outer_deg = vec![0; n];
        let mut inner_deg = vec![0; m];
        for &(o, i, _) in &self.entries {
            outer_deg[o] += 1;
            inner_deg[i] += 1;
        }
        let ov = |o: usize| format!("v{}", pad(o + 1, n));
        let iv = |i: usize| format!("{}{}", self.inner_prefix, pad(i + 1, m));
        let mut nd = NfgDescription::new();
        for o in 0..n {
            nd = nd
                .vertex(ov(o), indicator_table(self.outer_kind, &alphabet, 1 + outer_deg[o])?)
                .half(names[o].clone(), (ov(o), arg(1)));
        }
        for i in 0..m {
            nd = nd.vertex(iv(i), indicator_table(self.inner_kind, &alphabet, inner_deg[i])?);
        }
        let mut next_o = vec![2; n];
        let mut next_i = vec![1; m];
        for &(o, i, a) in &self.entries {
            let (so, si) = (arg(next_o[o]), arg(next_i[i]));
            next_o[o] += 1;
            next_i[i] += 1;
            let tag = format!("{}_{}", pad(o + 1, n), pad(i + 1, m));
            if a == 1 {
                nd = nd.internal(format!("e{tag}"), (ov(o), so), (iv(i), si));
                continue;
            }
            let mv = format!("m{tag}");
            // arg1 = a · arg2; the scaled side is arg1
            let (o_axis, i_axis) = if self.scale_outer {
                ("arg1", "arg2")
            } else {
                ("arg2", "arg1")
            };
            nd = nd
                .vertex(mv.clone(), multiply_indicator(&alphabet, a)?)
                .internal(format!("e{tag}"), (ov(o), so), (mv.clone(), o_axis))
                .internal(format!("f{tag}"), (mv, i_axis), (iv(i), si));
        }
        nd.validate()
    }
}

/// Generative realization: sum interface per coordinate, equality latent per message symbol.
///
/// Coefficients other than 1 go through a multiply-by-`a` vertex `m{i}_{j}`.
pub fn generator_realization(spec: &LinearCodeSpec) -> Result<NfgGraph> {
    if spec.form != CodeForm::Generator {
        return Err(NfgError::InvalidCode("a generator matrix is required".into()));
    }
    let entries = entries_of(&spec.matrix, false);
    Bipartite {
        spec,
        outer_kind: IndicatorKind::Sum,
        inner_kind: IndicatorKind::Equality,
        inner_prefix: "u",
        entries,
        inner_count: spec.k,
        scale_outer: true,
    }
    .build()
}

/// Constrained realization: equality interface per coordinate, parity latent per check.
pub fn parity_realization(spec: &LinearCodeSpec) -> Result<NfgGraph> {
    if spec.form != CodeForm::Parity {
        return Err(NfgError::InvalidCode("a parity-check matrix is required".into()));
    }
    let entries = entries_of(&spec.matrix, true);
    Bipartite {
        spec,
        outer_kind: IndicatorKind::Equality,
        inner_kind: IndicatorKind::Parity,
        inner_prefix: "h",
        entries,
        inner_count: spec.n - spec.k,
        scale_outer: false,
    }
    .build()
}

/// Nonzero entries as `(coordinate, latent, coefficient)`.
fn entries_of(matrix: &[Vec<usize>], transposed: bool) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (r, row) in matrix.iter().enumerate() {
        for (c, &a) in row.iter().enumerate() {
            if a != 0 {
                out.push(if transposed { (c, r, a) } else { (r, c, a) });
            }
        }
    }
    out.sort();
    out
}

/// Fourier holographic transform of a code realization.
///
/// `κ` goes on every half edge; on each internal edge the forward `κ` faces
/// the endpoint farther from the half edges and `κ̂` the nearer one. The
/// exterior becomes a multiple of the dual code's indicator.
pub fn dual_via_fourier(g: &NfgGraph) -> Result<NfgGraph> {
    let mut spec = HolographicSpec::default();
    for h in g.half_edges() {
        if h.alphabet.as_group().is_none() {
            return Err(NfgError::InvalidAlphabet(format!(
                "half edge `{}` is not over a group",
                h.id
            )));
        }
        spec.external
            .insert(h.label().to_owned(), make_kernel(KernelKind::Fourier, &h.alphabet)?);
    }
    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for h in g.half_edges() {
        let v = h.endpoints()[0].vertex.clone();
        if depth.insert(v.clone(), 0).is_none() {
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = depth[&v];
        for n in g.neighbors(&v)? {
            if !depth.contains_key(&n) {
                depth.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    for e in g.internal_edges() {
        if e.alphabet.as_group().is_none() {
            return Err(NfgError::InvalidAlphabet(format!(
                "edge `{}` is not over a group",
                e.id
            )));
        }
        let ends = e.endpoints();
        let key = |v: &str| (depth.get(v).copied().unwrap_or(usize::MAX), v.to_owned());
        let far = if key(&ends[0].vertex) >= key(&ends[1].vertex) {
            &ends[0]
        } else {
            &ends[1]
        };
        spec.internal
            .insert(e.id.clone(), (make_fourier_pair(&e.alphabet)?, far.vertex.clone()));
    }
    holographic_transform(g, &spec)
}

/// The support of an exterior that is a multiple of a 0/1 indicator.
#[derive(Clone, Debug, PartialEq)]
pub struct CodewordSet {
    pub names: Vec<String>,
    pub words: Vec<Vec<usize>>,
    /// The common value on the support.
    pub scale: Complex64,
}

impl CodewordSet {
    /// Number of words of each Hamming weight `0..=n`.
    pub fn weight_distribution(&self) -> Vec<usize> {
        weight_distribution(&self.words, self.names.len())
    }
}

pub fn weight_distribution(words: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut out = vec![0; n + 1];
    for w in words {
        out[w.iter().filter(|&&v| v != 0).count()] += 1;
    }
    out
}

/// Reads the code off the exterior function: entries above `tol` times the
/// largest magnitude, which must all agree within `tol` relative.
pub fn codewords(g: &NfgGraph, tol: f64) -> Result<CodewordSet> {
    let names = g.external_names();
    let z = eliminate(g, &EliminationOptions::default())?.result.permute(&names)?;
    let max = z.max_abs();
    if max == 0.0 {
        return Err(NfgError::NotAnIndicator);
    }
    let mut words = Vec::new();
    let mut scale = None;
    for (idx, v) in z.values().iter().enumerate() {
        if v.norm() <= tol * max {
            continue;
        }
        let s = *scale.get_or_insert(*v);
        if (v - s).norm() > tol * max {
            return Err(NfgError::NotAnIndicator);
        }
        words.push(z.domain().coords(idx));
    }
    Ok(CodewordSet {
        names,
        words,
        scale: scale.expect("nonzero maximum"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfg::classify;

    fn dual_oracle(p: usize, n: usize, code: &[Vec<usize>]) -> Vec<Vec<usize>> {
        (0..p.pow(n as u32))
            .map(|m| decode_mixed(&vec![p; n], m))
            .filter(|y| {
                code.iter()
                    .all(|c| c.iter().zip(y).map(|(a, b)| a * b).sum::<usize>() % p == 0)
            })
            .collect()
    }

    #[test]
    fn hamming_realizations_agree() {
        let (gen, par) = hamming_7_4();
        let words = gen.enumerate();
        assert_eq!(words, par.enumerate());
        let a = codewords(&generator_realization(&gen).unwrap(), 1e-9).unwrap();
        let b = codewords(&parity_realization(&par).unwrap(), 1e-9).unwrap();
        assert_eq!(a.words, words);
        assert_eq!(b.words, words);
        assert_eq!(a.weight_distribution(), vec![1, 0, 0, 7, 7, 0, 0, 1]);
        assert!((b.scale - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a.scale - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn realizations_classify() {
        let (gen, par) = hamming_7_4();
        assert!(classify(&generator_realization(&gen).unwrap(), 1e-9).generative);
        assert!(classify(&parity_realization(&par).unwrap(), 1e-9).constrained);
    }

    #[test]
    fn hamming_dual_is_simplex() {
        let (gen, par) = hamming_7_4();
        for g in [generator_realization(&gen).unwrap(), parity_realization(&par).unwrap()] {
            let d = codewords(&dual_via_fourier(&g).unwrap(), 1e-9).unwrap();
            assert_eq!(d.words, dual_oracle(2, 7, &gen.enumerate()));
            assert_eq!(d.weight_distribution(), vec![1, 0, 0, 0, 7, 0, 0, 0]);
            assert_eq!(d.words.len() * 16, 128);
            let back = codewords(&dual_via_fourier(&dual_via_fourier(&g).unwrap()).unwrap(), 1e-9).unwrap();
            assert_eq!(back.words, gen.enumerate());
        }
    }

    #[test]
    fn repetition_and_single_check() {
        let rep = LinearCodeSpec::new(2, 3, 1, CodeForm::Generator, vec![vec![1]; 3]).unwrap();
        let g = generator_realization(&rep).unwrap();
        assert_eq!(codewords(&g, 1e-9).unwrap().words, vec![vec![0, 0, 0], vec![1, 1, 1]]);
        let d = codewords(&dual_via_fourier(&g).unwrap(), 1e-9).unwrap();
        assert_eq!(d.words.len(), 4);
        assert!(d.words.iter().all(|w| w.iter().sum::<usize>() % 2 == 0));

        let check = LinearCodeSpec::new(2, 2, 1, CodeForm::Parity, vec![vec![1, 1]]).unwrap();
        let w = codewords(&parity_realization(&check).unwrap(), 1e-9).unwrap();
        assert_eq!(w.words, vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn ternary_codes_with_coefficients() {
        let gen = LinearCodeSpec::new(
            3,
            4,
            2,
            CodeForm::Generator,
            vec![vec![1, 0], vec![0, 1], vec![1, 2], vec![2, 2]],
        )
        .unwrap();
        let g = generator_realization(&gen).unwrap();
        let words = gen.enumerate();
        assert_eq!(words.len(), 9);
        assert_eq!(codewords(&g, 1e-9).unwrap().words, words);
        let d = codewords(&dual_via_fourier(&g).unwrap(), 1e-9).unwrap();
        assert_eq!(d.words, dual_oracle(3, 4, &words));
        assert_eq!(d.words.len() * words.len(), 81);

        let par = LinearCodeSpec::new(3, 3, 1, CodeForm::Parity, vec![vec![1, 2, 0], vec![0, 1, 1]]).unwrap();
        let pw = codewords(&parity_realization(&par).unwrap(), 1e-9).unwrap();
        assert_eq!(pw.words, par.enumerate());
        let d = codewords(&dual_via_fourier(&parity_realization(&par).unwrap()).unwrap(), 1e-9).unwrap();
        assert_eq!(d.words, dual_oracle(3, 3, &par.enumerate()));
    }

    #[test]
    fn generator_scale_counts_preimages() {
        let g = LinearCodeSpec::new(2, 2, 2, CodeForm::Generator, vec![vec![1, 1], vec![0, 0]]).unwrap();
        let w = codewords(&generator_realization(&g).unwrap(), 1e-9).unwrap();
        assert_eq!(w.words, vec![vec![0, 0], vec![1, 0]]);
        assert!((w.scale - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        assert!(LinearCodeSpec::new(4, 2, 1, CodeForm::Generator, vec![vec![1], vec![1]]).is_err());
        assert!(LinearCodeSpec::new(2, 2, 1, CodeForm::Parity, vec![vec![0, 0]]).is_err());
        assert!(LinearCodeSpec::new(2, 2, 2, CodeForm::Generator, vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(LinearCodeSpec::new(3, 2, 1, CodeForm::Generator, vec![vec![3], vec![1]]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let (gen, par) = hamming_7_4();
        assert_eq!(LinearCodeSpec::parse(&gen.to_string()).unwrap(), gen);
        assert_eq!(LinearCodeSpec::parse(&par.to_string()).unwrap(), par);
        let text = "# repetition\n2 3 1\n1\n1\n1 # last\n";
        assert_eq!(LinearCodeSpec::parse(text).unwrap().form(), CodeForm::Generator);
        assert!(LinearCodeSpec::parse("2 3").is_err());
        assert!(LinearCodeSpec::parse("2 3 1\n1 x\n").is_err());
    }

    #[test]
    fn non_indicator_is_detected() {
        let a = Alphabet::cyclic(2);
        let f = Factor::from_real(crate::algebra::make_product_domain([("x", a)]).unwrap(), &[1.0, 0.5]).unwrap();
        let g = NfgDescription::new()
            .vertex("f", f)
            .half("x", ("f", "x"))
            .validate()
            .unwrap();
        assert_eq!(codewords(&g, 1e-9), Err(NfgError::NotAnIndicator));
    }
}
