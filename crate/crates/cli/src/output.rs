//! JSON rendering of factors and reports.

use nfg_core::factor::Factor;
use num_complex::Complex64;
use serde_json::{json, Value};

/// Rounds to `digits` significant digits; `-0` becomes `0`.
pub fn round(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", digits.max(1) - 1, x)
        .parse()
        .expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn number(x: f64, digits: usize) -> Value {
    let r = round(x, digits);
    if r.is_finite() {
        json!(r)
    } else {
        Value::String(r.to_string())
    }
}

fn scalar(v: Complex64, complex: bool, digits: usize) -> Value {
    if complex {
        json!([number(v.re, digits), number(v.im, digits)])
    } else {
        number(v.re, digits)
    }
}

fn nest(values: &[Complex64], sizes: &[usize], complex: bool, digits: usize) -> Value {
    match sizes.split_first() {
        None => scalar(values[0], complex, digits),
        Some((_, rest)) => {
            let stride: usize = rest.iter().product();
            Value::Array(
                values
                    .chunks(stride.max(1))
                    .map(|c| nest(c, rest, complex, digits))
                    .collect(),
            )
        }
    }
}

/// `{axes: [{label, size}], values}` with values nested by axis in row-major
/// order. Entries are `[re, im]` pairs when any rounded imaginary part is nonzero.
pub fn table(f: &Factor, digits: usize) -> Value {
    let complex = f.values().iter().any(|v| round(v.im, digits) != 0.0);
    let axes: Vec<Value> = f
        .domain()
        .axes()
        .iter()
        .map(|a| json!({"label": a.label, "size": a.size()}))
        .collect();
    json!({
        "axes": axes,
        "values": nest(f.values(), &f.domain().sizes(), complex, digits),
    })
}

pub fn complex(v: Complex64, digits: usize) -> Value {
    if round(v.im, digits) == 0.0 {
        number(v.re, digits)
    } else {
        json!([number(v.re, digits), number(v.im, digits)])
    }
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nfg_core::algebra::{make_product_domain, Alphabet};

    #[test]
    fn rounding() {
        assert_eq!(round(0.1 + 0.2, 12), 0.3);
        assert_eq!(round(-1e-300 * 1e-300, 12).to_bits(), 0.0f64.to_bits());
        assert_eq!(round(-0.0, 12).to_bits(), 0.0f64.to_bits());
        assert_eq!(round(123456.789, 3), 123000.0);
        assert_eq!(round(f64::INFINITY, 3), f64::INFINITY);
    }

    #[test]
    fn nested_tables() {
        let d = make_product_domain([("a", Alphabet::plain(2)), ("b", Alphabet::plain(3))]).unwrap();
        let f = Factor::from_real(d, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let t = table(&f, 12);
        assert_eq!(t["values"], json!([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]));
        assert_eq!(t["axes"][1], json!({"label": "b", "size": 3}));
        let z = f.scale(Complex64::new(0.0, 1.0));
        assert_eq!(table(&z, 12)["values"][0][1], json!([0.0, 2.0]));
        assert_eq!(
            table(&Factor::scalar(Complex64::new(2.5, 0.0)), 12)["values"],
            json!(2.5)
        );
    }
}
