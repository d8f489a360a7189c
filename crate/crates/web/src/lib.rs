//! Browser demo: axis transforms, code weight distributions and rejection sampling.
//!
//! Each operation returns a JSON string; errors come back as `{"error": ...}`.

use nfg_core::algebra::{make_product_domain, Alphabet};
use nfg_core::codes::{
    codewords, dual_via_fourier, generator_realization, parity_realization, CodeForm, LinearCodeSpec,
};
use nfg_core::factor::{Factor, DEFAULT_TOL};
use nfg_core::gallery::{counting, rejection_example};
use nfg_core::indicators::KernelKind;
use nfg_core::inference::{exterior_with, Algorithm};
use nfg_core::models::{normalized_distribution, total_variation, SampleMode, Sampler};
use nfg_core::random::random_integer_split;
use nfg_core::transform::{dense_axis_transform, fast_axis_transform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

type Outcome = Result<Value, String>;

fn render(r: Outcome) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

fn pair(v: num_complex::Complex64) -> Value {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    if v.im.abs() < 1e-12 {
        json!(clean(v.re))
    } else {
        json!([clean(v.re), clean(v.im)])
    }
}

/// Applies `kernel` along every axis of a table over `rank` copies of an
/// alphabet of `size` symbols (ordered for cumulus and difference, cyclic for
/// Fourier).
pub fn transform_table_json(values: &str, size: usize, rank: usize, kernel: &str) -> Outcome {
    let kind = KernelKind::from_name(kernel).map_err(|e| e.to_string())?;
    if !(2..=64).contains(&size) || rank == 0 || rank > 6 {
        return Err("size must be in 2..=64 and rank in 1..=6".into());
    }
    let alphabet = match kind {
        KernelKind::Cumulus | KernelKind::Difference => Alphabet::ordered(size),
        KernelKind::Fourier | KernelKind::FourierInverse => Alphabet::cyclic(size),
    };
    let labels: Vec<String> = (1..=rank).map(|i| format!("x{i}")).collect();
    let domain =
        make_product_domain(labels.iter().map(|l| (l.as_str(), alphabet.clone()))).map_err(|e| e.to_string())?;
    let numbers = parse_numbers(values)?;
    if numbers.len() != domain.size() {
        return Err(format!(
            "expected {} values ({size}^{rank}), got {}",
            domain.size(),
            numbers.len()
        ));
    }
    let f = Factor::from_real(domain, &numbers).map_err(|e| e.to_string())?;
    let axes: Vec<&str> = labels.iter().map(String::as_str).collect();
    let (fast, ops) = fast_axis_transform(&f, kind, &axes).map_err(|e| e.to_string())?;
    let dense = dense_axis_transform(&f, kind, &axes).map_err(|e| e.to_string())?;
    let n = f.values().len() as u64;
    Ok(json!({
        "values": fast.values().iter().map(|v| pair(*v)).collect::<Vec<_>>(),
        "ops": ops,
        "dense_ops": n * n,
        "max_difference_from_dense": fast.abs_diff(&dense).map_err(|e| e.to_string())?,
    }))
}

/// Codewords of the code in `matrix` (`p n k` header and rows) or of its dual.
pub fn code_weights_json(matrix: &str, dual: bool) -> Outcome {
    let spec = LinearCodeSpec::parse(matrix).map_err(|e| e.to_string())?;
    if spec.n() > 12 || spec.p().pow(spec.n() as u32) > 1 << 16 {
        return Err("code too large for the demo (p^n must stay below 65536)".into());
    }
    let mut g = match spec.form() {
        CodeForm::Generator => generator_realization(&spec),
        CodeForm::Parity => parity_realization(&spec),
    }
    .map_err(|e| e.to_string())?;
    if dual {
        g = dual_via_fourier(&g).map_err(|e| e.to_string())?;
    }
    let set = codewords(&g, DEFAULT_TOL).map_err(|e| e.to_string())?;
    Ok(json!({
        "form": if spec.form() == CodeForm::Generator { "generator" } else { "parity" },
        "n": spec.n(),
        "count": set.words.len(),
        "weight_distribution": set.weight_distribution(),
        "words": set.words.iter().take(64).collect::<Vec<_>>(),
    }))
}

/// Rejection sampling from a two-interface constrained model whose
/// interface tables are drawn from `seed`.
pub fn rejection_sampling_json(seed: u64, size: usize, count: usize) -> Outcome {
    if !(2..=6).contains(&size) || count == 0 || count > 200_000 {
        return Err("size must be in 2..=6 and count in 1..=200000".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = rejection_example(&Alphabet::plain(size), |v, d| {
        if v.starts_with('f') {
            random_integer_split(&mut rng, d, 4)
        } else {
            counting(v, d)
        }
    })
    .map_err(|e| e.to_string())?;
    let sampler = Sampler::new(&g, SampleMode::Constrained, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let z = exterior_with(&g, Algorithm::Eliminate)
        .and_then(|z| z.permute(sampler.names()))
        .map_err(|e| e.to_string())?;
    let run = sampler.run(&mut rng, count, 1_000_000).map_err(|e| e.to_string())?;
    let exact = normalized_distribution(&z, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let mut counts = vec![0usize; exact.len()];
    for x in &run.samples {
        counts[z.domain().linear_index(x).map_err(|e| e.to_string())?] += 1;
    }
    Ok(json!({
        "names": run.names,
        "exact": exact,
        "empirical": counts.iter().map(|&c| c as f64 / count as f64).collect::<Vec<_>>(),
        "attempts": run.attempts,
        "acceptance_rate": run.acceptance_rate(),
        "expected_acceptance": sampler.expected_acceptance(z.sum_all().re),
        "total_variation": total_variation(&run, &z, DEFAULT_TOL).map_err(|e| e.to_string())?,
    }))
}

#[wasm_bindgen]
pub fn transform_table(values: &str, size: usize, rank: usize, kernel: &str) -> String {
    render(transform_table_json(values, size, rank, kernel))
}

#[wasm_bindgen]
pub fn code_weights(matrix: &str, dual: bool) -> String {
    render(code_weights_json(matrix, dual))
}

#[wasm_bindgen]
pub fn rejection_sampling(seed: u32, size: usize, count: usize) -> String {
    render(rejection_sampling_json(u64::from(seed), size, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulus_of_a_point_mass() {
        let v = transform_table_json("0 1 0 0", 4, 1, "cumulus").unwrap();
        assert_eq!(v["values"], json!([0.0, 1.0, 1.0, 1.0]));
        assert_eq!(v["ops"], 3);
        let v = transform_table_json("0,1,1,1", 4, 1, "difference").unwrap();
        assert_eq!(v["values"], json!([0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn fourier_of_a_constant_is_a_spike() {
        let v = transform_table_json("1 1 1 1 1 1 1 1 1", 3, 2, "fourier").unwrap();
        let vals = v["values"].as_array().unwrap();
        assert_eq!(vals[0], json!(9.0));
        assert!(vals[1..].iter().all(|x| x == &json!(0.0)));
        assert!(v["max_difference_from_dense"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn bad_inputs_become_error_objects() {
        assert!(transform_table("1 2", 4, 1, "cumulus").contains("error"));
        assert!(transform_table("1 2 x", 3, 1, "cumulus").contains("not a number"));
        assert!(transform_table("1 2", 2, 1, "wavelet").contains("error"));
        assert!(code_weights("", false).contains("error"));
        assert!(rejection_sampling(1, 9, 10).contains("error"));
    }

    #[test]
    fn hamming_weights_and_dual() {
        let g = "2 7 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n1 1 0 1\n1 0 1 1\n0 1 1 1\n";
        let v = code_weights_json(g, false).unwrap();
        assert_eq!(v["weight_distribution"], json!([1, 0, 0, 7, 7, 0, 0, 1]));
        let d = code_weights_json(g, true).unwrap();
        assert_eq!(d["weight_distribution"], json!([1, 0, 0, 0, 7, 0, 0, 0]));
    }

    #[test]
    fn sampling_tracks_the_exact_law() {
        let v = rejection_sampling_json(5, 2, 20_000).unwrap();
        assert!(v["total_variation"].as_f64().unwrap() < 0.02);
        let (rate, expected) = (
            v["acceptance_rate"].as_f64().unwrap(),
            v["expected_acceptance"].as_f64().unwrap(),
        );
        assert!((rate - expected).abs() < 0.02, "{rate} vs {expected}");
        let exact: f64 = v["exact"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((exact - 1.0).abs() < 1e-12);
        assert_eq!(v, rejection_sampling_json(5, 2, 20_000).unwrap());
    }
}
