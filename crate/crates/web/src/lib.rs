//! Browser bindings: Smith form of a pasted matrix, exact isotropy
//! probabilities for the standard alternating forms, and limit-law tables.
//! Every call takes and returns JSON text.

use cokernels::isotropy::isotropy_probability_exact;
use cokernels::limits::{p_groups_up_to, LimitDistribution};
use cokernels::linalg::MatrixJson;
use cokernels::models::standard_alternating;
use cokernels::{cokernel, cokernel_mod, smith_normal_form, ExactMatrix, FiniteAbelianGroup};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest side accepted from the page.
pub const MAX_DIMENSION: usize = 24;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `{"d", "rank", "free_rank", "cokernel"}` for a matrix in the
/// `{"modulus", "rows"}` schema.
pub fn smith_json(matrix: &str) -> Result<String, String> {
    let parsed: MatrixJson = serde_json::from_str(matrix).map_err(err)?;
    let m = ExactMatrix::from_json(&parsed).map_err(err)?;
    if m.rows() > MAX_DIMENSION || m.cols() > MAX_DIMENSION {
        return Err(format!("at most {MAX_DIMENSION} rows and columns"));
    }
    let snf = smith_normal_form(&m.lift(), false).map_err(err)?;
    let a = m.modulus();
    let (d, rank, free_rank, g): (Vec<String>, usize, usize, FiniteAbelianGroup) = if a == 0 {
        (
            snf.invariant_factors.iter().map(|d| d.to_string()).collect(),
            snf.rank,
            m.rows() - snf.rank,
            cokernel(&m).map_err(err)?,
        )
    } else {
        let modulus = BigInt::from(a);
        let d: Vec<BigInt> = snf.invariant_factors.iter().map(|d| d.gcd(&modulus)).collect();
        let rank = d.iter().filter(|x| **x != modulus).count();
        (d.iter().map(BigInt::to_string).collect(), rank, 0, cokernel_mod(&m).map_err(err)?)
    };
    Ok(json!({ "d": d, "rank": rank, "free_rank": free_rank, "cokernel": g.to_string() }).to_string())
}

/// Exact probability that a uniform map `(Z/aZ)^n -> G` satisfies the
/// isotropy condition for the standard block form of the given rank.
pub fn isotropy_json(n: usize, rank: usize, group: &str, modulus: u64) -> Result<String, String> {
    if n == 0 || n > 12 {
        return Err("n must be between 1 and 12".into());
    }
    if rank % 2 == 1 || rank > n {
        return Err("rank must be even and at most n".into());
    }
    let g: FiniteAbelianGroup = group.parse().map_err(err)?;
    let c = standard_alternating(n, rank, modulus);
    let p = isotropy_probability_exact(&c, &g, modulus).map_err(err)?;
    let approx = p.to_f64().unwrap_or(f64::NAN);
    Ok(json!({ "group": g.to_string(), "n": n, "rank": rank, "modulus": modulus, "exact": p.to_string(), "approx": approx }).to_string())
}

/// Probabilities of every p-group of order at most `p^max_exponent` under
/// the Cohen-Lenstra (`"cl"`, weight `u`) or sandpile (`"sandpile"`) law.
pub fn limits_json(law: &str, p: u64, u: u32, max_exponent: u32) -> Result<String, String> {
    if max_exponent > 6 {
        return Err("max exponent is capped at 6".into());
    }
    let dist = match law {
        "cl" => LimitDistribution::cohen_lenstra(p, u),
        "sandpile" => LimitDistribution::sandpile(p),
        other => return Err(format!("unknown law {other:?}")),
    }
    .map_err(err)?;
    let mut rows = Vec::new();
    let mut mass = 0.0;
    for g in p_groups_up_to(p, max_exponent) {
        let v = dist.probability(&g).map_err(err)?;
        mass += v.value;
        rows.push(json!({ "group": g.to_string(), "value": v.value, "tail_bound": v.tail_bound }));
    }
    Ok(json!({ "law": dist.label(), "rows": rows, "window_mass": mass }).to_string())
}

#[wasm_bindgen]
pub fn smith(matrix: &str) -> Result<String, JsError> {
    smith_json(matrix).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn isotropy(n: usize, rank: usize, group: &str, modulus: u32) -> Result<String, JsError> {
    isotropy_json(n, rank, group, modulus.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn limits(law: &str, p: u32, u: u32, max_exponent: u32) -> Result<String, JsError> {
    limits_json(law, p.into(), u, max_exponent).map_err(|e| JsError::new(&e))
}
