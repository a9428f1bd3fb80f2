//! JSON model files and canonical output.

use fdikit::fdianalysis::StructureMatrix;
use fdikit::{FdiError, LtiModel, Mat, MultiModel, C64};
use serde_json::{Map, Number, Value};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error(transparent)]
    Fdi(#[from] FdiError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fdi(e) if e.is_solvability() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn bad(what: &str) -> CliError {
    CliError::Usage(format!("malformed input: {what}"))
}

/// `%.17g` formatting.
pub fn g17(x: f64) -> String {
    gfmt(x, 17)
}

/// `%.<prec>g` formatting for finite values.
pub fn gfmt(x: f64, prec: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let s = format!("{x:.*e}", prec - 1);
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("integer exponent");
    let strip = |t: &str| -> String {
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t.to_string()
        }
    };
    if e < -4 || e >= prec as i32 {
        format!("{}e{}{:02}", strip(mant), if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        strip(&format!("{:.*}", (prec as i32 - 1 - e) as usize, x))
    }
}

/// A float as JSON; non-finite values become the strings `inf`, `-inf` and `nan`.
pub fn num(x: f64) -> Value {
    match Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None if x.is_nan() => Value::String("nan".into()),
        None if x > 0.0 => Value::String("inf".into()),
        None => Value::String("-inf".into()),
    }
}

pub fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" | "Inf" | "+inf" => Some(f64::INFINITY),
            "-inf" | "-Inf" => Some(f64::NEG_INFINITY),
            "nan" | "NaN" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&g17(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
            } else if a.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (k, x) in a.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (k, x) in a.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    write_value(x, indent + 1, out);
                    out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = m.iter().collect();
            out.push_str("{\n");
            for (k, (key, x)) in sorted.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if k + 1 < sorted.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical text: sorted keys, two-space indentation, `%.17g` floats, trailing newline.
pub fn canonical(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::File { path: path.display().to_string(), msg: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| CliError::File { path: path.display().to_string(), msg: e.to_string() })
}

pub fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    std::fs::write(path, canonical(v)).map_err(|e| CliError::File { path: path.display().to_string(), msg: e.to_string() })
}

pub fn mat_value(m: &Mat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array(m.row(i).iter().map(|&x| num(x)).collect())).collect())
}

/// Matrix from rows; `cols` fixes the width of an empty row list.
pub fn mat_from(v: &Value, cols: Option<usize>) -> CliResult<Mat> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    if rows.is_empty() {
        return Ok(Mat::zeros(0, cols.unwrap_or(0)));
    }
    let w = rows[0].as_array().ok_or_else(|| bad("matrix rows must be arrays"))?.len();
    let mut m = Mat::zeros(rows.len(), w);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_array().ok_or_else(|| bad("matrix rows must be arrays"))?;
        if r.len() != w {
            return Err(bad("matrix rows differ in length"));
        }
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = as_f64(x).ok_or_else(|| bad("matrix entries must be numbers"))?;
        }
    }
    Ok(m)
}

fn groups_value(g: &BTreeMap<String, Vec<usize>>) -> Value {
    Value::Object(g.iter().map(|(k, v)| (k.clone(), Value::Array(v.iter().map(|&i| Value::from(i)).collect()))).collect())
}

fn groups_from(v: Option<&Value>) -> CliResult<BTreeMap<String, Vec<usize>>> {
    let mut out = BTreeMap::new();
    let Some(v) = v else { return Ok(out) };
    let obj = v.as_object().ok_or_else(|| bad("groups must be an object"))?;
    for (k, idx) in obj {
        let idx = idx
            .as_array()
            .ok_or_else(|| bad("group indices must be arrays"))?
            .iter()
            .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| bad("group indices must be nonnegative integers")))
            .collect::<CliResult<Vec<_>>>()?;
        if !idx.is_empty() {
            out.insert(k.clone(), idx);
        }
    }
    Ok(out)
}

pub fn model_value(m: &LtiModel) -> Value {
    let mut o = Map::new();
    o.insert("a".into(), mat_value(&m.a));
    if let Some(e) = &m.e {
        o.insert("e".into(), mat_value(e));
    }
    o.insert("b".into(), mat_value(&m.b));
    o.insert("c".into(), mat_value(&m.c));
    o.insert("d".into(), mat_value(&m.d));
    o.insert("ts".into(), num(m.ts));
    o.insert("inputs".into(), Value::from(m.n_in()));
    o.insert("outputs".into(), Value::from(m.n_out()));
    o.insert("groups".into(), groups_value(&m.in_groups));
    if !m.out_groups.is_empty() {
        o.insert("output_groups".into(), groups_value(&m.out_groups));
    }
    Value::Object(o)
}

pub fn model_from(v: &Value) -> CliResult<LtiModel> {
    let o = v.as_object().ok_or_else(|| bad("model must be an object"))?;
    let get = |k: &str| o.get(k).ok_or_else(|| bad(&format!("model lacks `{k}`")));
    let dim = |k: &str| o.get(k).and_then(|x| x.as_u64()).map(|u| u as usize);
    let a = mat_from(get("a")?, Some(0))?;
    let n = a.nrows();
    let d = mat_from(get("d")?, dim("inputs"))?;
    let (p, m) = (dim("outputs").unwrap_or(d.nrows()), dim("inputs").unwrap_or(d.ncols()));
    let d = if d.nrows() == 0 { Mat::zeros(p, m) } else { d };
    let b = mat_from(get("b")?, Some(m))?;
    let b = if b.nrows() == 0 && n == 0 { Mat::zeros(0, m) } else { b };
    let c = mat_from(get("c")?, Some(n))?;
    let c = if c.nrows() == 0 { Mat::zeros(p, n) } else { c };
    let ts = o.get("ts").and_then(as_f64).unwrap_or(0.0);
    let mut sys = match o.get("e") {
        Some(e) if !e.is_null() => LtiModel::descriptor(a, mat_from(e, Some(n))?, b, c, d, ts)?,
        _ => LtiModel::new(a, b, c, d, ts)?,
    };
    sys.in_groups = groups_from(o.get("groups"))?;
    sys.out_groups = groups_from(o.get("output_groups"))?;
    sys.validate()?;
    Ok(sys)
}

pub fn multi_value(mm: &MultiModel) -> Value {
    let mut o = Map::new();
    o.insert("models".into(), Value::Array(mm.components.iter().map(model_value).collect()));
    Value::Object(o)
}

pub fn multi_from(v: &Value) -> CliResult<MultiModel> {
    let list = match v {
        Value::Array(a) => a,
        Value::Object(o) => o.get("models").and_then(|m| m.as_array()).ok_or_else(|| bad("multiple model lacks `models`"))?,
        _ => return Err(bad("multiple model must be an object")),
    };
    Ok(MultiModel::new(list.iter().map(model_from).collect::<CliResult<Vec<_>>>()?)?)
}

pub fn bool_rows(rows: &[Vec<bool>]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|&b| Value::from(b as u8)).collect())).collect())
}

pub fn structure_value(s: &StructureMatrix) -> Value {
    if s.pages.len() == 1 {
        bool_rows(&s.pages[0])
    } else {
        let mut o = Map::new();
        o.insert("pages".into(), Value::Array(s.pages.iter().map(|p| bool_rows(p)).collect()));
        o.insert("combined".into(), bool_rows(&s.combined()));
        Value::Object(o)
    }
}

/// Structure matrix from `[[0, 1], ...]` or an object holding it under `rows` or `structure`.
pub fn structure_from(v: &Value) -> CliResult<StructureMatrix> {
    let rows = match v {
        Value::Object(o) => o.get("rows").or_else(|| o.get("structure")).ok_or_else(|| bad("structure file lacks `rows`"))?,
        other => other,
    };
    let m = mat_from(rows, None)?;
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    Ok(StructureMatrix::from_numeric(&rows))
}

pub fn complex_value(z: C64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

/// Parses `re`, `re+imi` or `re-imi` (also with `j`).
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim().trim_end_matches(['i', 'j']);
    if t.len() == s.trim().len() {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|e| format!("`{s}`: {e}"));
    }
    let split = t.char_indices().skip(1).filter(|&(k, c)| (c == '+' || c == '-') && !t[..k].ends_with(['e', 'E'])).last();
    let (re, im) = match split {
        Some((k, _)) => (&t[..k], &t[k..]),
        None => ("0", t),
    };
    let im = match im {
        "+" | "" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| format!("`{s}` is not a complex number"))?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|_| format!("`{s}` is not a complex number"))?;
    Ok(C64::new(re, im))
}

/// A design matrix, or a list of them (with `null` for defaults).
pub fn matrices_from(v: &Value) -> CliResult<Vec<Option<Mat>>> {
    let a = v.as_array().ok_or_else(|| bad("design matrices must be arrays"))?;
    let is_list = a.first().is_some_and(|x| x.is_null() || x.as_array().is_some_and(|r| r.first().is_some_and(|y| y.is_array())));
    if is_list {
        a.iter().map(|x| if x.is_null() { Ok(None) } else { mat_from(x, None).map(Some) }).collect()
    } else {
        Ok(vec![Some(mat_from(v, None)?)])
    }
}
