//! The example documents shipped under `documents/`.

use nfg_core::algebra::Alphabet;
use nfg_core::codes::{
    dual_via_fourier, generator_realization, hamming_7_4, parity_realization, CodeForm, LinearCodeSpec,
};
use nfg_core::gallery::{self, counting};
use nfg_core::models::{cfg_to_nfg, fg_to_nfg, CfgDesc};
use nfg_core::random::{random_cdf, random_integer_conditional, random_integer_split};
use nfg_core::{NfgError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::document::{FactorGraphDoc, NfgDocument, PairDoc, TransformDoc, TransformerDoc};

/// Example name, file name under `documents/` and a one-line description.
pub const EXAMPLES: &[(&str, &str, &str)] = &[
    (
        "four_vertex",
        "four_vertex.json",
        "four vertices, five internal edges, two externals",
    ),
    ("triangle", "triangle.json", "a cycle of three functions"),
    ("spa_tree", "spa_tree.json", "closed tree for sum-product"),
    (
        "derivative_tree",
        "derivative_tree.json",
        "equality interfaces over a hidden tree",
    ),
    (
        "max_lemma",
        "max_lemma.json",
        "max indicator with cumulus and difference kernels",
    ),
    (
        "rejection",
        "rejection.json",
        "constrained model for rejection sampling",
    ),
    (
        "split_interface",
        "split_interface.json",
        "constrained model with split interfaces",
    ),
    (
        "independence_constrained",
        "independence_constrained.json",
        "chain x1 - x2 - x3, split interfaces",
    ),
    (
        "independence_generative",
        "independence_generative.json",
        "chain x1 - x2 - x3, conditional interfaces",
    ),
    (
        "fg_constrained",
        "fg_constrained.json",
        "a factor graph as a constrained model",
    ),
    (
        "cfg_generative",
        "cfg_generative.json",
        "a convolutional factor graph as a generative model",
    ),
    ("fg", "fg.json", "factor graph description for `convert --kind fg`"),
    (
        "cfg",
        "cfg.json",
        "convolutional factor graph description for `convert --kind cfg`",
    ),
    (
        "cdn",
        "cdn.json",
        "cumulative network description for `convert --kind cdn`",
    ),
    (
        "hamming_generator",
        "hamming_generator.json",
        "[7,4] Hamming code, generator realization",
    ),
    (
        "hamming_parity",
        "hamming_parity.json",
        "[7,4] Hamming code, parity-check realization",
    ),
    (
        "hamming_dual",
        "hamming_dual.json",
        "dual of the parity realization by Fourier transform",
    ),
    (
        "hamming_matrix",
        "hamming.txt",
        "[7,4] Hamming generator matrix as text",
    ),
    (
        "hamming_parity_matrix",
        "hamming_parity.txt",
        "[7,4] Hamming parity-check matrix as text",
    ),
    (
        "fourier_spec",
        "fourier_spec.json",
        "transform spec: Fourier pairs on internal edges",
    ),
];

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

/// `p n k` header and matrix rows.
pub fn code_text(spec: &LinearCodeSpec) -> String {
    let form = match spec.form() {
        CodeForm::Generator => "generator",
        CodeForm::Parity => "parity-check",
    };
    let mut out = format!("# {form} matrix\n{} {} {}\n", spec.p(), spec.n(), spec.k());
    for row in spec.matrix() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn nfg(g: &nfg_core::nfg::NfgGraph) -> String {
    NfgDocument::from_graph(g).to_json() + "\n"
}

/// The text of the named example.
pub fn example(name: &str) -> Result<String> {
    let b = Alphabet::plain(2);
    let mut r = rng();
    let (generator, parity) = hamming_7_4();
    Ok(match name {
        "four_vertex" => nfg(&gallery::four_vertex(&Alphabet::cyclic(2), counting)?),
        "triangle" => nfg(&gallery::triangle(&b, counting)?),
        "spa_tree" => nfg(&gallery::spa_tree(&Alphabet::plain(3), counting)?),
        "derivative_tree" => nfg(&gallery::derivative_tree(&Alphabet::ordered(3), counting)?),
        "max_lemma" => nfg(&gallery::max_lemma_graph(3, &Alphabet::ordered(3))?),
        "rejection" => nfg(&gallery::rejection_example(&b, |v, d| {
            if v.starts_with('f') {
                random_integer_split(&mut r, d, 4)
            } else {
                counting(v, d)
            }
        })?),
        "split_interface" => nfg(&gallery::split_interface_example(&b, |v, d| {
            if v == "g" || v == "h" {
                random_integer_split(&mut r, d, 4)
            } else {
                counting(v, d)
            }
        })?),
        "independence_constrained" => nfg(&gallery::independence_chain(&b, |v, d| {
            if v.starts_with('g') {
                random_integer_split(&mut r, d, 4)
            } else {
                counting(v, d)
            }
        })?),
        "independence_generative" => nfg(&gallery::independence_chain(&b, |v, d| {
            if v.starts_with('g') {
                random_integer_conditional(&mut r, d, 4)
            } else {
                counting(v, d)
            }
        })?),
        "fg_constrained" => nfg(&fg_to_nfg(&gallery::three_function_fg(&b, counting)?)?),
        "cfg_generative" => nfg(&cfg_to_nfg(&CfgDesc::new(gallery::three_function_fg(
            &Alphabet::cyclic(2),
            counting,
        )?)?)?),
        "fg" => FactorGraphDoc::from_desc(&gallery::three_function_fg(&b, counting)?).to_json() + "\n",
        "cfg" => {
            FactorGraphDoc::from_desc(&gallery::three_function_fg(&Alphabet::cyclic(3), counting)?).to_json() + "\n"
        }
        "cdn" => {
            let desc = gallery::cdn_example(&Alphabet::ordered(3), |_, d| random_cdf(&mut r, d).expect("ordered"))?;
            FactorGraphDoc::from_desc(&desc).to_json() + "\n"
        }
        "hamming_generator" => nfg(&generator_realization(&generator)?),
        "hamming_parity" => nfg(&parity_realization(&parity)?),
        "hamming_dual" => nfg(&dual_via_fourier(&parity_realization(&parity)?)?),
        "hamming_matrix" => code_text(&generator),
        "hamming_parity_matrix" => code_text(&parity),
        "fourier_spec" => {
            let g = gallery::four_vertex(&Alphabet::cyclic(2), counting)?;
            let mut spec = TransformDoc::default();
            for e in g.internal_edges() {
                spec.internal.insert(
                    e.id.clone(),
                    PairDoc {
                        kernel: Some("fourier".into()),
                        forward: None,
                        inverse: None,
                        forward_vertex: e.endpoints()[0].vertex.clone(),
                    },
                );
            }
            spec.external.insert(
                "x1".into(),
                TransformerDoc::Kernel {
                    kernel: "identity".into(),
                },
            );
            serde_json::to_string_pretty(&spec).expect("documents serialize") + "\n"
        }
        other => {
            let names: Vec<&str> = EXAMPLES.iter().map(|e| e.0).collect();
            return Err(NfgError::Parse(format!(
                "unknown example `{other}`; expected one of {}",
                names.join(", ")
            )));
        }
    })
}
