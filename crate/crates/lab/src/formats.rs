//! Serialization helpers: %g-style floats for CSV, and the JSON layout for
//! states and matrices (arrays of [re, im] pairs, row-major).

use biphoton_core::linalg::CMatrix;
use biphoton_core::states::QutritState;
use serde_json::{json, Value};

/// Formats with 6 significant digits, trimming trailing zeros (C's %.6g).
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        let s = format!("{:.5e}", x);
        // Rust renders 1e-7 as "1.00000e-7"; keep that shape but trim below.
        s
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if let Some(epos) = s.find(['e', 'E']) {
        let (mant, exp) = s.split_at(epos);
        format!("{}{}", trim_zeros(mant), exp)
    } else if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.into()
    } else {
        s.into()
    }
}

pub fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            let row: Vec<Value> = (0..m.cols())
                .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub fn qutrit_json(q: &QutritState) -> Value {
    let amps: Vec<Value> = q.amps().iter().map(|a| json!([a.re, a.im])).collect();
    Value::Array(amps)
}
