//! Command-line driver for normal factor graphs.
//!
//! Graphs travel as JSON [`document::NfgDocument`]s; results are printed as
//! JSON on stdout. [`run`] is the whole program, so tests can drive it in
//! process.

pub mod document;
pub mod examples;
pub mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nfg_core::codes::{
    codewords, dual_via_fourier, generator_realization, parity_realization, CodeForm, LinearCodeSpec,
};
use nfg_core::exterior::{
    eliminate, exterior_bruteforce, exterior_via_spa, sum_product_open, EliminationOptions, KernelSet, SpaOptions,
};
use nfg_core::factor::DEFAULT_TOL;
use nfg_core::inference::{exterior_with, query, Algorithm, Query, Shortcut};
use nfg_core::models::{
    cdn_to_nfg, cfg_to_nfg, fg_to_nfg, independence, independence_residual, nfg_to_cfg, nfg_to_fg, sample, to_cdn,
    total_variation, CdnDesc, CfgDesc, IndependenceKind, SampleMode,
};
use nfg_core::nfg::{classify, NfgGraph};
use nfg_core::transform::holographic_transform;
use nfg_core::{NfgError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use document::{FactorGraphDoc, NfgDocument, TransformDoc};
use output::{complex, number, pretty, table};

pub const EXIT_OK: i32 = 0;
/// Malformed input: parse or validation failure.
pub const EXIT_INPUT: i32 = 1;
/// A numerical precondition failed at run time.
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "nfg", version, about = "Normal factor graphs as probabilistic models")]
struct Cli {
    /// Significant digits in printed tables.
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,
    /// Numerical tolerance for classification and checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgoArg {
    Bruteforce,
    Eliminate,
    Spa,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Bruteforce => Algorithm::BruteForce,
            AlgoArg::Eliminate => Algorithm::Eliminate,
            AlgoArg::Spa => Algorithm::Spa,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Fg,
    Cfg,
    Cdn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    ToNfg,
    FromNfg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Auto,
    Constrained,
    Generative,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a document and summarize the graph.
    Validate { doc: PathBuf },
    /// Structural classification as a probabilistic model.
    Classify { doc: PathBuf },
    /// The exterior function.
    Exterior {
        doc: PathBuf,
        #[arg(long, value_enum, default_value = "eliminate")]
        algo: AlgoArg,
        /// Use dense kernels only during elimination.
        #[arg(long)]
        dense: bool,
    },
    /// Sum-product messages and edge marginals on a tree.
    Spa {
        doc: PathBuf,
        /// Keep messages at unit scale and report log scales.
        #[arg(long)]
        scaled: bool,
        /// Also print every message.
        #[arg(long)]
        messages: bool,
    },
    /// Apply a holographic transform and print the transformed document.
    Transform {
        doc: PathBuf,
        /// Transform spec; defaults to the document's transform section.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Print the exterior of both graphs instead of the document.
        #[arg(long)]
        compare: bool,
    },
    /// Convert between factor graph descriptions and documents.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "to-nfg")]
        direction: DirectionArg,
    },
    /// Realize a linear code from a `p n k` matrix file.
    Codes {
        matrix: PathBuf,
        /// Realize the dual code by Fourier transform.
        #[arg(long)]
        dual: bool,
        /// Print the codewords and weight distribution instead of the document.
        #[arg(long)]
        words: bool,
    },
    /// Answer a marginal or conditional query.
    Infer {
        doc: PathBuf,
        /// Target variable (repeatable); defaults to every variable not otherwise used.
        #[arg(long = "target")]
        targets: Vec<String>,
        #[arg(long = "marginalize")]
        marginalize: Vec<String>,
        /// Observed value as `name=value` (repeatable).
        #[arg(long = "evidence", value_parser = parse_evidence)]
        evidence: Vec<(String, usize)>,
        #[arg(long, value_enum)]
        algo: Option<AlgoArg>,
        #[arg(long)]
        normalize: bool,
        /// Use the model shortcuts when they apply.
        #[arg(long)]
        shortcut: bool,
    },
    /// Test independence implied by separation.
    Independence {
        doc: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Draw samples and compare with the exact distribution.
    Sample {
        doc: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        max_rejects: u64,
        /// Also print the samples.
        #[arg(long)]
        emit: bool,
    },
    /// Print a shipped example document; without a name, list them.
    Gallery { name: Option<String> },
}

fn parse_evidence(s: &str) -> std::result::Result<(String, usize), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a symbol index"))?;
    Ok((name.trim().to_owned(), value))
}

/// Exit code for a library error.
pub fn exit_code(e: &NfgError) -> i32 {
    match e {
        NfgError::ZeroMass(_)
        | NfgError::TooManyRejections(_)
        | NfgError::NotAnIndicator
        | NfgError::NotInversePair(_)
        | NfgError::TooLarge { .. } => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| NfgError::Parse(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(NfgDocument, NfgGraph)> {
    let doc = NfgDocument::parse(&read(path)?)?;
    let g = doc.to_graph()?;
    Ok((doc, g))
}

/// Runs the program on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, err) {
        Ok(text) => {
            let _ = writeln!(out, "{}", text.trim_end());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<String> {
    let digits = cli.digits;
    let tol = cli.tol;
    Ok(match &cli.command {
        Command::Validate { doc } => {
            let (_, g) = load(doc)?;
            pretty(&json!({
                "valid": true,
                "vertices": g.vertex_count(),
                "internal_edges": g.internal_edges().count(),
                "external": g.external_names(),
            }))
        }
        Command::Classify { doc } => {
            let (_, g) = load(doc)?;
            let flags = classify(&g, tol);
            if flags.generative && !flags.tree {
                let _ = writeln!(
                    err,
                    "note: generative model on a cyclic graph; use elimination or sampling, not sum-product"
                );
            }
            let constants: BTreeMap<&String, Value> = flags
                .conditional_constants
                .iter()
                .map(|(v, c)| (v, complex(*c, digits)))
                .collect();
            pretty(&json!({
                "simple": flags.simple,
                "bipartite": flags.bipartite,
                "nfg_model": flags.nfg_model,
                "constrained": flags.constrained,
                "generative": flags.generative,
                "extended_generative": flags.extended_generative,
                "tree": flags.tree,
                "interface_set": flags.interface_set,
                "latent_set": flags.latent_set,
                "conditional_constants": constants,
            }))
        }
        Command::Exterior { doc, algo, dense } => {
            let (_, g) = load(doc)?;
            let names = g.external_names();
            let mut report = json!({ "algorithm": Algorithm::from(*algo).name() });
            let z = match algo {
                AlgoArg::Bruteforce => exterior_bruteforce(&g)?,
                AlgoArg::Eliminate => {
                    let options = EliminationOptions {
                        kernels: if *dense { KernelSet::none() } else { KernelSet::all() },
                        ..Default::default()
                    };
                    let r = eliminate(&g, &options)?;
                    report["ops"] = json!(r.total_ops);
                    report["steps"] = r
                        .steps
                        .iter()
                        .map(|s| {
                            json!({
                                "vertices": s.vertices,
                                "eliminated": s.eliminated,
                                "ops": s.ops,
                                "kernel": format!("{:?}", s.kernel).to_lowercase(),
                            })
                        })
                        .collect();
                    r.result
                }
                AlgoArg::Spa => exterior_via_spa(&g, &SpaOptions::default())?,
            };
            report["table"] = table(&z.permute(&names)?, digits);
            pretty(&report)
        }
        Command::Spa { doc, scaled, messages } => {
            let (_, g) = load(doc)?;
            let options = SpaOptions {
                scaled: *scaled,
                ..Default::default()
            };
            let m = sum_product_open(&g, &options)?;
            let marginals: BTreeMap<&String, Value> = m.marginals.iter().map(|(e, f)| (e, table(f, digits))).collect();
            let mut report = json!({ "ops": m.ops, "marginals": marginals });
            if *scaled {
                let scales: Vec<Value> = m
                    .log_scales
                    .iter()
                    .map(|((a, b), s)| json!({"from": a, "to": b, "log_scale": number(*s, digits)}))
                    .collect();
                report["log_scales"] = json!(scales);
            }
            if *messages {
                let msgs: Vec<Value> = m
                    .messages
                    .keys()
                    .map(|(a, b)| {
                        let f = m.message(a, b).expect("stored message");
                        json!({"from": a, "to": b, "message": table(&f, digits)})
                    })
                    .collect();
                report["messages"] = json!(msgs);
            }
            pretty(&report)
        }
        Command::Transform { doc, spec, compare } => {
            let (d, g) = load(doc)?;
            let spec_doc = spec
                .as_deref()
                .map(|p| serde_json::from_str::<TransformDoc>(&read(p)?).map_err(|e| NfgError::Parse(e.to_string())))
                .transpose()?;
            let h = holographic_transform(&g, &d.holographic_spec(&g, spec_doc.as_ref())?)?;
            if *compare {
                let (z, w) = (
                    exterior_with(&g, Algorithm::Eliminate)?,
                    exterior_with(&h, Algorithm::Eliminate)?,
                );
                let w_names = h.external_names();
                let mut report = json!({
                    "original": table(&z.permute(&g.external_names())?, digits),
                    "transformed": table(&w.permute(&w_names)?, digits),
                });
                if let Ok(diff) = w.permute(&z.labels()).and_then(|w| w.rel_diff(&z)) {
                    report["relative_difference"] = number(diff, 3);
                }
                pretty(&report)
            } else {
                NfgDocument::from_graph(&h).to_json()
            }
        }
        Command::Convert { input, kind, direction } => match direction {
            DirectionArg::ToNfg => {
                let desc = FactorGraphDoc::parse(&read(input)?)?.to_desc()?;
                let g = match kind {
                    KindArg::Fg => fg_to_nfg(&desc)?,
                    KindArg::Cfg => cfg_to_nfg(&CfgDesc::new(desc)?)?,
                    KindArg::Cdn => cdn_to_nfg(&CdnDesc::new(desc, tol)?)?,
                };
                NfgDocument::from_graph(&g).to_json()
            }
            DirectionArg::FromNfg => {
                let (_, g) = load(input)?;
                let desc = match kind {
                    KindArg::Fg => nfg_to_fg(&g, tol)?,
                    KindArg::Cfg => nfg_to_cfg(&g, tol)?.desc().clone(),
                    KindArg::Cdn => to_cdn(&g, tol)?.desc().clone(),
                };
                FactorGraphDoc::from_desc(&desc).to_json()
            }
        },
        Command::Codes { matrix, dual, words } => {
            let spec = LinearCodeSpec::parse(&read(matrix)?)?;
            let mut g = match spec.form() {
                CodeForm::Generator => generator_realization(&spec)?,
                CodeForm::Parity => parity_realization(&spec)?,
            };
            if *dual {
                g = dual_via_fourier(&g)?;
            }
            if *words {
                let set = codewords(&g, tol)?;
                pretty(&json!({
                    "names": set.names,
                    "count": set.words.len(),
                    "weight_distribution": set.weight_distribution(),
                    "scale": complex(set.scale, digits),
                    "words": set.words,
                }))
            } else {
                NfgDocument::from_graph(&g).to_json()
            }
        }
        Command::Infer {
            doc,
            targets,
            marginalize,
            evidence,
            algo,
            normalize,
            shortcut,
        } => {
            let (d, g) = load(doc)?;
            let flags_given = !targets.is_empty() || !marginalize.is_empty() || !evidence.is_empty();
            let mut q = match (&d.query, flags_given) {
                (Some(qd), false) => qd.to_query()?,
                _ => {
                    let marginalize: BTreeSet<String> = marginalize.iter().cloned().collect();
                    let evidence: BTreeMap<String, usize> = evidence.iter().cloned().collect();
                    let mut q = Query::complete(&g, marginalize, evidence);
                    if !targets.is_empty() {
                        q.targets = targets.iter().cloned().collect();
                    }
                    q
                }
            };
            if let Some(a) = algo {
                q.algorithm = (*a).into();
            }
            q.normalize |= *normalize;
            q.shortcut |= *shortcut;
            let r = query(&g, &q, tol)?;
            pretty(&json!({
                "targets": q.targets,
                "marginalize": q.marginalize,
                "evidence": q.evidence,
                "algorithm": q.algorithm.name(),
                "table": table(&r.table, digits),
                "evidence_mass": complex(r.evidence_mass, digits),
                "normalized": r.normalized,
                "shortcut": r.shortcut.map(|s| match s {
                    Shortcut::ConstrainedEvidence => "constrained_evidence",
                    Shortcut::GenerativeMarginal => "generative_marginal",
                }),
            }))
        }
        Command::Independence { doc, a, b, given } => {
            let (_, g) = load(doc)?;
            let set = |v: &Vec<String>| -> BTreeSet<String> { v.iter().cloned().collect() };
            let (a, b, s) = (set(a), set(b), set(given));
            let verdict = independence(&g, &a, &b, &s, tol)?;
            let z = exterior_with(&g, Algorithm::Eliminate)?;
            let kind = match verdict.kind {
                IndependenceKind::Conditional => "conditional",
                IndependenceKind::Marginal => "marginal",
                IndependenceKind::Unknown => "unknown",
            };
            let residual = |conditional| independence_residual(&z, &a, &b, &s, conditional, tol);
            pretty(&json!({
                "verdict": kind,
                "witness": verdict.witness,
                "conditional_residual": number(residual(true)?, 3),
                "marginal_residual": number(residual(false)?, 3),
            }))
        }
        Command::Sample {
            doc,
            seed,
            count,
            mode,
            max_rejects,
            emit,
        } => {
            let (_, g) = load(doc)?;
            let mode = match mode {
                ModeArg::Auto => SampleMode::Auto,
                ModeArg::Constrained => SampleMode::Constrained,
                ModeArg::Generative => SampleMode::Generative,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let run = sample(&g, mode, &mut rng, *count, *max_rejects, tol)?;
            let z = exterior_with(&g, Algorithm::Eliminate)?;
            let mut report = json!({
                "names": run.names,
                "count": run.samples.len(),
                "attempts": run.attempts,
                "acceptance_rate": number(run.acceptance_rate(), 6),
                "total_variation": number(total_variation(&run, &z, tol)?, 6),
            });
            if *emit {
                report["samples"] = json!(run.samples);
            }
            pretty(&report)
        }
        Command::Gallery { name: Some(name) } => examples::example(name)?,
        Command::Gallery { name: None } => examples::EXAMPLES
            .iter()
            .map(|(n, _, d)| format!("{n:26} {d}"))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}
