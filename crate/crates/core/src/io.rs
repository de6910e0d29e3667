//! State, ensemble and matrix file formats.
//!
//! Files are UTF-8 JSON. Every real number is written with 17 significant
//! digits (`{:.16e}`), which round-trips any f64 exactly: write -> read ->
//! write reproduces identical bytes.
//!
//! ```text
//! {"kind":"pure","dims":[2,2,2],"amps":[[re,im],...]}
//! {"kind":"density","dims":[3,3],"mat":[[[re,im],...],...]}      row-major rows
//! {"kind":"ensemble","dims":[2,2],"members":[{"p":...,"factors":[[[re,im],...],...]},...]}
//! {"kind":"matrix","rows":2,"cols":2,"mat":[[[re,im],...],...]}  isometries etc.
//! ```

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, Cplx};
use crate::purification::{Ensemble, EnsembleMember};
use crate::states::{DensityMatrix, PartyDims, PureState};
use serde_json::Value;

/// Formats a real with 17 significant digits, the crate-wide serialization
/// convention.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_pair(z: Cplx) -> String {
    format!("[{},{}]", fmt_real(z.re), fmt_real(z.im))
}

fn fmt_dims(dims: &[usize]) -> String {
    let inner: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("[{}]", inner.join(","))
}

fn fmt_vector(v: &[Cplx]) -> String {
    let inner: Vec<String> = v.iter().map(|z| fmt_pair(*z)).collect();
    format!("[{}]", inner.join(","))
}

fn fmt_matrix_rows(m: &CMatrix) -> String {
    let mut rows = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt_pair(m.get(i, j))).collect();
        rows.push(format!("[{}]", row.join(",")));
    }
    format!("[{}]", rows.join(","))
}

pub fn write_pure(psi: &PureState) -> String {
    format!(
        "{{\"kind\":\"pure\",\"dims\":{},\"amps\":{}}}",
        fmt_dims(psi.parties().dims()),
        fmt_vector(psi.amps())
    )
}

pub fn write_density(rho: &DensityMatrix) -> String {
    format!(
        "{{\"kind\":\"density\",\"dims\":{},\"mat\":{}}}",
        fmt_dims(rho.parties().dims()),
        fmt_matrix_rows(rho.mat())
    )
}

pub fn write_matrix(m: &CMatrix) -> String {
    format!(
        "{{\"kind\":\"matrix\",\"rows\":{},\"cols\":{},\"mat\":{}}}",
        m.rows(),
        m.cols(),
        fmt_matrix_rows(m)
    )
}

pub fn write_ensemble(e: &Ensemble) -> String {
    let members: Vec<String> = e
        .members()
        .iter()
        .map(|m| {
            let factors: Vec<String> = m.factors.iter().map(|f| fmt_vector(f)).collect();
            format!(
                "{{\"p\":{},\"factors\":[{}]}}",
                fmt_real(m.p),
                factors.join(",")
            )
        })
        .collect();
    format!(
        "{{\"kind\":\"ensemble\",\"dims\":{},\"members\":[{}]}}",
        fmt_dims(e.dims()),
        members.join(",")
    )
}

/// Any of the file payloads this crate reads.
#[derive(Clone, Debug)]
pub enum Payload {
    Pure(PureState),
    Density(DensityMatrix),
    Ensemble(Ensemble),
    Matrix(CMatrix),
}

pub fn write_payload(p: &Payload) -> String {
    match p {
        Payload::Pure(s) => write_pure(s),
        Payload::Density(d) => write_density(d),
        Payload::Ensemble(e) => write_ensemble(e),
        Payload::Matrix(m) => write_matrix(m),
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn as_real(v: &Value, what: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| parse_err(format!("{what}: expected a number")))?;
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(x)
}

fn as_pair(v: &Value, what: &str) -> Result<Cplx> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| parse_err(format!("{what}: expected [re,im]")))?;
    Ok(Cplx::new(as_real(&arr[0], what)?, as_real(&arr[1], what)?))
}

fn as_vector(v: &Value, what: &str) -> Result<Vec<Cplx>> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(format!("{what}: expected an array")))?;
    arr.iter().map(|x| as_pair(x, what)).collect()
}

fn as_dims(v: &Value) -> Result<Vec<usize>> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err("dims: expected an array"))?;
    arr.iter()
        .map(|x| {
            x.as_u64()
                .map(|d| d as usize)
                .ok_or_else(|| parse_err("dims: expected positive integers"))
        })
        .collect()
}

fn as_cmatrix(v: &Value, rows: usize, cols: usize, what: &str) -> Result<CMatrix> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(format!("{what}: expected an array of rows")))?;
    if arr.len() != rows {
        return Err(parse_err(format!(
            "{what}: expected {rows} rows, found {}",
            arr.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for row in arr {
        let row_v = as_vector(row, what)?;
        if row_v.len() != cols {
            return Err(parse_err(format!(
                "{what}: expected {cols} columns, found {}",
                row_v.len()
            )));
        }
        data.extend(row_v);
    }
    CMatrix::from_rows(rows, cols, data)
}

pub fn read_payload(text: &str) -> Result<Payload> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err("missing \"kind\" field"))?;
    match kind {
        "pure" => {
            let dims = as_dims(v.get("dims").ok_or_else(|| parse_err("missing dims"))?)?;
            let parties = PartyDims::new(dims)?;
            let amps = as_vector(
                v.get("amps").ok_or_else(|| parse_err("missing amps"))?,
                "amps",
            )?;
            Ok(Payload::Pure(PureState::new(parties, amps)?))
        }
        "density" => {
            let dims = as_dims(v.get("dims").ok_or_else(|| parse_err("missing dims"))?)?;
            let parties = PartyDims::new(dims)?;
            let d = parties.total();
            let mat = as_cmatrix(
                v.get("mat").ok_or_else(|| parse_err("missing mat"))?,
                d,
                d,
                "mat",
            )?;
            Ok(Payload::Density(DensityMatrix::new(parties, mat)?))
        }
        "ensemble" => {
            let dims = as_dims(v.get("dims").ok_or_else(|| parse_err("missing dims"))?)?;
            let members_v = v
                .get("members")
                .and_then(Value::as_array)
                .ok_or_else(|| parse_err("missing members"))?;
            let mut members = Vec::with_capacity(members_v.len());
            for m in members_v {
                let p = as_real(m.get("p").ok_or_else(|| parse_err("member missing p"))?, "p")?;
                let factors_v = m
                    .get("factors")
                    .and_then(Value::as_array)
                    .ok_or_else(|| parse_err("member missing factors"))?;
                if factors_v.len() != dims.len() {
                    return Err(parse_err("member factor count does not match dims"));
                }
                let mut factors = Vec::with_capacity(factors_v.len());
                for (f, &d) in factors_v.iter().zip(dims.iter()) {
                    let vec = as_vector(f, "factor")?;
                    if vec.len() != d {
                        return Err(parse_err("factor length does not match party dimension"));
                    }
                    factors.push(vec);
                }
                members.push(EnsembleMember { p, factors });
            }
            Ok(Payload::Ensemble(Ensemble::new(dims, members)?))
        }
        "matrix" => {
            let rows = v
                .get("rows")
                .and_then(Value::as_u64)
                .ok_or_else(|| parse_err("missing rows"))? as usize;
            let cols = v
                .get("cols")
                .and_then(Value::as_u64)
                .ok_or_else(|| parse_err("missing cols"))? as usize;
            let mat = as_cmatrix(
                v.get("mat").ok_or_else(|| parse_err("missing mat"))?,
                rows,
                cols,
                "mat",
            )?;
            Ok(Payload::Matrix(mat))
        }
        other => Err(parse_err(format!("unknown kind '{other}'"))),
    }
}

pub fn read_file(path: &str) -> Result<Payload> {
    let text = std::fs::read_to_string(path)?;
    read_payload(&text)
}

pub fn write_file(path: &str, payload: &Payload) -> Result<()> {
    std::fs::write(path, write_payload(payload) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pure_round_trip_is_byte_identical() {
        let g = fixtures::random_pure(&[2, 3], 77).unwrap();
        let s1 = write_pure(&g);
        let back = match read_payload(&s1).unwrap() {
            Payload::Pure(p) => p,
            _ => panic!("wrong kind"),
        };
        let s2 = write_pure(&back);
        assert_eq!(s1, s2);
    }

    #[test]
    fn density_round_trip_is_byte_identical() {
        let t = fixtures::tiles_state();
        let s1 = write_density(&t);
        let back = match read_payload(&s1).unwrap() {
            Payload::Density(d) => d,
            _ => panic!("wrong kind"),
        };
        assert_eq!(s1, write_density(&back));
    }

    #[test]
    fn seventeen_digit_reals_round_trip_exactly() {
        let vals = [
            std::f64::consts::PI,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            6.02214076e23,
            0.1 + 0.2,
        ];
        for &x in &vals {
            let s = fmt_real(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(read_payload("not json").is_err());
        assert!(read_payload("{\"kind\":\"nope\"}").is_err());
        assert!(read_payload(
            "{\"kind\":\"pure\",\"dims\":[2],\"amps\":[[1.0,0.0],[0.0,0.0],[0.0,0.0]]}"
        )
        .is_err());
        // Unnormalized amplitudes violate the pure-state invariant.
        assert!(read_payload("{\"kind\":\"pure\",\"dims\":[2],\"amps\":[[1.0,0.0],[1.0,0.0]]}")
            .is_err());
    }
}
