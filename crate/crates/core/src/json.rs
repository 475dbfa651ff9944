//! JSON descriptions of families, measurements, and channel chains.
//!
//! Inputs are plain `serde_json` values so callers can read them from files
//! or build them in code. Parsing is strict: unknown keys are rejected, so a
//! typo fails loudly instead of silently falling back to a default. Complex
//! matrices are written as nested arrays of `[re, im]` pairs, row by row.

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::channels::{local_channel, QuantumChannel};
use crate::matcore::{BipartiteDims, CMatrix, Party};
use crate::povm::Povm;
use crate::states::{make_builtin, DensityMatrix, ParameterizedFamily};
use crate::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| bad(format!("{what} must be a JSON object")))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], what: &str) -> Result<()> {
    for key in m.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(bad(format!(
                "unknown key '{key}' in {what} (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn require<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| bad(format!("{what} is missing required key '{key}'")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| bad(format!("{what} must be a number")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| bad(format!("{what} must be a string")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a [Value]> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| bad(format!("{what} must be an array")))
}

/// Reads a complex matrix written as rows of `[re, im]` entries.
pub fn parse_cmatrix(v: &Value) -> Result<CMatrix> {
    let rows = as_array(v, "matrix")?;
    if rows.is_empty() {
        return Err(bad("matrix must have at least one row"));
    }
    let mut out: Option<CMatrix> = None;
    for (i, row) in rows.iter().enumerate() {
        let entries = as_array(row, "matrix row")?;
        let m = out.get_or_insert_with(|| CMatrix::zeros(rows.len(), entries.len()));
        if entries.len() != m.cols() {
            return Err(bad(format!(
                "matrix row {i} has {} entries, expected {}",
                entries.len(),
                m.cols()
            )));
        }
        for (j, e) in entries.iter().enumerate() {
            let pair = as_array(e, "matrix entry")?;
            if pair.len() != 2 {
                return Err(bad(format!(
                    "matrix entry ({i}, {j}) must be an [re, im] pair"
                )));
            }
            m[(i, j)] = Complex64::new(
                as_f64(&pair[0], "matrix entry real part")?,
                as_f64(&pair[1], "matrix entry imaginary part")?,
            );
        }
    }
    Ok(out.expect("at least one row"))
}

/// Writes a complex matrix in the format [`parse_cmatrix`] reads.
pub fn cmatrix_to_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| {
                Value::Array(
                    (0..m.cols())
                        .map(|j| {
                            let z = m[(i, j)];
                            Value::Array(vec![z.re.into(), z.im.into()])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn parse_dims(v: &Value) -> Result<BipartiteDims> {
    let pair = as_array(v, "dims")?;
    if pair.len() != 2 {
        return Err(bad("dims must be a [dim_a, dim_b] pair"));
    }
    let get = |v: &Value| -> Result<usize> {
        v.as_u64()
            .filter(|&d| d >= 1)
            .map(|d| d as usize)
            .ok_or_else(|| bad("dims entries must be positive integers"))
    };
    BipartiteDims::new(get(&pair[0])?, get(&pair[1])?)
}

fn optional_dims(m: &Map<String, Value>) -> Result<Option<BipartiteDims>> {
    m.get("dims").map(parse_dims).transpose()
}

/// Reads a parameterized family description.
///
/// Accepted forms, by `type`:
/// - `builtin`: `{type, name}` with a builtin family name;
/// - `generator`: `{type, rho0, generator, dims?}` for
///   `e^{-i θ G} ρ₀ e^{i θ G}`;
/// - `product`: `{type, a, b}` of two nested families;
/// - `grid`: `{type, thetas, states, dims?}` tabulated on sorted points.
pub fn parse_family(v: &Value) -> Result<ParameterizedFamily> {
    let m = as_object(v, "family spec")?;
    let kind = as_str(require(m, "type", "family spec")?, "family type")?;
    match kind {
        "builtin" => {
            check_keys(m, &["type", "name"], "builtin family spec")?;
            make_builtin(as_str(require(m, "name", "builtin family spec")?, "family name")?)
        }
        "generator" => {
            check_keys(m, &["type", "rho0", "generator", "dims"], "generator family spec")?;
            let dims = optional_dims(m)?;
            let rho0 = DensityMatrix::new(
                parse_cmatrix(require(m, "rho0", "generator family spec")?)?,
                dims,
            )?;
            let gen = parse_cmatrix(require(m, "generator", "generator family spec")?)?;
            ParameterizedFamily::generator(rho0, gen)
        }
        "product" => {
            check_keys(m, &["type", "a", "b"], "product family spec")?;
            let a = parse_family(require(m, "a", "product family spec")?)?;
            let b = parse_family(require(m, "b", "product family spec")?)?;
            Ok(ParameterizedFamily::product_of(a, b))
        }
        "grid" => {
            check_keys(m, &["type", "thetas", "states", "dims"], "grid family spec")?;
            let dims = optional_dims(m)?;
            let thetas = as_array(require(m, "thetas", "grid family spec")?, "thetas")?;
            let states = as_array(require(m, "states", "grid family spec")?, "states")?;
            if thetas.len() != states.len() {
                return Err(bad(format!(
                    "grid family has {} thetas but {} states",
                    thetas.len(),
                    states.len()
                )));
            }
            let mut points = Vec::with_capacity(thetas.len());
            for (t, s) in thetas.iter().zip(states) {
                points.push((
                    as_f64(t, "grid theta")?,
                    DensityMatrix::new(parse_cmatrix(s)?, dims)?,
                ));
            }
            ParameterizedFamily::grid(points)
        }
        other => Err(bad(format!(
            "unknown family type '{other}' (expected builtin, generator, product, or grid)"
        ))),
    }
}

/// Reads a measurement `{elements, labels?}` and validates it fully.
pub fn parse_povm(v: &Value) -> Result<Povm> {
    let m = as_object(v, "measurement spec")?;
    check_keys(m, &["elements", "labels"], "measurement spec")?;
    let elements = as_array(require(m, "elements", "measurement spec")?, "elements")?
        .iter()
        .map(parse_cmatrix)
        .collect::<Result<Vec<_>>>()?;
    let povm = match m.get("labels") {
        Some(v) => {
            let labels = as_array(v, "labels")?
                .iter()
                .map(|l| {
                    l.as_u64()
                        .map(|l| l as usize)
                        .ok_or_else(|| bad("labels must be non-negative integers"))
                })
                .collect::<Result<Vec<_>>>()?;
            Povm::with_labels(elements, labels)?
        }
        None => Povm::new(elements)?,
    };
    let report = povm.validate()?;
    if !report.pass {
        return Err(Error::InvalidPovm(report.describe_failures()));
    }
    Ok(povm)
}

fn parse_party(v: &Value) -> Result<Party> {
    match as_str(v, "party")? {
        "a" => Ok(Party::A),
        "b" => Ok(Party::B),
        other => Err(bad(format!("party must be 'a' or 'b', got '{other}'"))),
    }
}

/// Embeds a single-party channel as identity-elsewhere on the joint space.
fn embed_one_party(ch: QuantumChannel, party: Party, dims: BipartiteDims) -> Result<QuantumChannel> {
    if ch.dim_in() != dims.dim_of(party) || ch.dim_out() != dims.dim_of(party) {
        return Err(Error::DimMismatch(format!(
            "channel acts on dimension {}, party {} has dimension {}",
            ch.dim_in(),
            party.as_str(),
            dims.dim_of(party)
        )));
    }
    match party {
        Party::A => local_channel(&ch, &QuantumChannel::identity(dims.dim_b)),
        Party::B => local_channel(&QuantumChannel::identity(dims.dim_a), &ch),
    }
}

/// Reads one channel acting on the joint space of `dims`.
///
/// Accepted forms, by `type`:
/// - `cnot`: `{type}` on a qubit pair, first party controlling;
/// - `unitary`: `{type, matrix}` conjugation by a joint unitary;
/// - `conditional_unitary`: `{type, blocks}`, first party's computational
///   basis selecting one unitary block per level;
/// - `depolarizing`: `{type, q, party}` on one qubit party;
/// - `kraus`: `{type, operators, label?}` raw joint Kraus set.
pub fn parse_channel(v: &Value, dims: BipartiteDims) -> Result<QuantumChannel> {
    let m = as_object(v, "channel spec")?;
    let kind = as_str(require(m, "type", "channel spec")?, "channel type")?;
    match kind {
        "cnot" => {
            check_keys(m, &["type"], "cnot channel spec")?;
            if dims.dim_a != 2 || dims.dim_b != 2 {
                return Err(Error::DimMismatch(
                    "cnot needs a qubit pair, dims (2, 2)".into(),
                ));
            }
            Ok(QuantumChannel::cnot())
        }
        "unitary" => {
            check_keys(m, &["type", "matrix"], "unitary channel spec")?;
            let u = parse_cmatrix(require(m, "matrix", "unitary channel spec")?)?;
            if u.rows() != dims.total() {
                return Err(Error::DimMismatch(format!(
                    "joint unitary is {}x{}, expected {2}x{2}",
                    u.rows(),
                    u.cols(),
                    dims.total()
                )));
            }
            QuantumChannel::unitary(u, "unitary")
        }
        "conditional_unitary" => {
            check_keys(m, &["type", "blocks"], "conditional channel spec")?;
            let blocks = as_array(require(m, "blocks", "conditional channel spec")?, "blocks")?
                .iter()
                .map(parse_cmatrix)
                .collect::<Result<Vec<_>>>()?;
            QuantumChannel::conditional_unitary(dims, &blocks)
        }
        "depolarizing" => {
            check_keys(m, &["type", "q", "party"], "depolarizing channel spec")?;
            let q = as_f64(require(m, "q", "depolarizing channel spec")?, "strength q")?;
            let party = parse_party(require(m, "party", "depolarizing channel spec")?)?;
            embed_one_party(QuantumChannel::depolarizing(q)?, party, dims)
        }
        "kraus" => {
            check_keys(m, &["type", "operators", "label"], "kraus channel spec")?;
            let ops = as_array(require(m, "operators", "kraus channel spec")?, "operators")?
                .iter()
                .map(parse_cmatrix)
                .collect::<Result<Vec<_>>>()?;
            let label = match m.get("label") {
                Some(v) => as_str(v, "channel label")?.to_string(),
                None => "kraus".to_string(),
            };
            let ch = QuantumChannel::new(ops, label)?;
            if ch.dim_in() != dims.total() || ch.dim_out() != dims.total() {
                return Err(Error::DimMismatch(format!(
                    "kraus channel maps {} -> {}, expected {2} -> {2}",
                    ch.dim_in(),
                    ch.dim_out(),
                    dims.total()
                )));
            }
            Ok(ch)
        }
        other => Err(bad(format!(
            "unknown channel type '{other}' (expected cnot, unitary, conditional_unitary, depolarizing, or kraus)"
        ))),
    }
}

/// Reads an ordered channel chain (a JSON array of channel specs).
pub fn parse_channels(v: &Value, dims: BipartiteDims) -> Result<Vec<QuantumChannel>> {
    as_array(v, "channel chain")?
        .iter()
        .map(|c| parse_channel(c, dims))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matrices_round_trip_through_the_pair_encoding() {
        let m = CMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64 - 1.0));
        let back = parse_cmatrix(&cmatrix_to_value(&m)).unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
        assert!(back.max_abs_diff(&m) == 0.0);
    }

    #[test]
    fn ragged_and_malformed_matrices_are_rejected() {
        for v in [
            json!([[[0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]),
            json!([[[0.0]]]),
            json!([[0.0, 1.0]]),
            json!(3),
            json!([]),
        ] {
            assert!(matches!(parse_cmatrix(&v), Err(Error::InvalidSpec(_))), "{v}");
        }
    }

    #[test]
    fn builtin_family_specs_parse_by_name() {
        let f = parse_family(&json!({"type": "builtin", "name": "bell_phase"})).unwrap();
        assert_eq!(f.dim(), 4);
        let err = parse_family(&json!({"type": "builtin", "name": "nope"})).unwrap_err();
        assert!(matches!(err, Error::UnknownName(_)));
    }

    #[test]
    fn generator_family_specs_build_and_evaluate() {
        let v = json!({
            "type": "generator",
            "rho0": [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]],
            "generator": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]],
        });
        let f = parse_family(&v).unwrap();
        assert_eq!(f.dim(), 2);
        assert!(f.has_analytic_derivative());
        let rho = f.eval(0.3).unwrap();
        assert!((rho.mat().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_and_grid_specs_parse() {
        let qubit = json!({
            "type": "generator",
            "rho0": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            "generator": [[[0.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]]],
        });
        let f = parse_family(&json!({"type": "product", "a": qubit, "b": qubit})).unwrap();
        assert_eq!(f.dim(), 4);

        let g = parse_family(&json!({
            "type": "grid",
            "thetas": [0.0, 0.1, 0.2],
            "states": [
                [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                [[[0.9, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.1, 0.0]]],
                [[[0.8, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.2, 0.0]]],
            ],
        }))
        .unwrap();
        assert!(!g.has_analytic_derivative());
        assert_eq!(g.dim(), 2);
    }

    #[test]
    fn unknown_keys_fail_loudly() {
        let err = parse_family(&json!({"type": "builtin", "name": "bell_phase", "nmae": 1}))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(msg) if msg.contains("nmae")));
        let err = parse_povm(&json!({"elements": [], "lables": []})).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(msg) if msg.contains("lables")));
    }

    #[test]
    fn povm_specs_validate_completeness() {
        let good = json!({
            "elements": [
                [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
                [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            ],
        });
        let povm = parse_povm(&good).unwrap();
        assert_eq!(povm.len(), 2);

        let incomplete = json!({
            "elements": [
                [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            ],
        });
        assert!(matches!(parse_povm(&incomplete), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn channel_chains_parse_against_the_split() {
        let dims = BipartiteDims { dim_a: 2, dim_b: 2 };
        let chain = json!([
            {"type": "cnot"},
            {"type": "depolarizing", "q": 0.25, "party": "b"},
            {"type": "conditional_unitary", "blocks": [
                [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
                [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]],
            ]},
        ]);
        let channels = parse_channels(&chain, dims).unwrap();
        assert_eq!(channels.len(), 3);
        assert_eq!(channels[0].label(), "cnot");
        assert!(channels[1].label().contains("depolarizing"));
        for ch in &channels {
            assert_eq!(ch.dim_in(), 4);
            assert_eq!(ch.dim_out(), 4);
        }

        let err = parse_channel(&json!({"type": "warp"}), dims).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
        let err = parse_channel(
            &json!({"type": "depolarizing", "q": 2.0, "party": "a"}),
            dims,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }
}
