//! Versioned plain-text model files.
//!
//! ```text
//! attnmil-model 1
//! config {"input_dim":166,...}
//! params 10
//! param backbone.0.w 166 256
//! <one line per matrix row, values in shortest round-trip exponent form>
//! ...
//! ```
//!
//! Values are written so that parsing reproduces every bit, hence
//! save → load → save yields identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ModelConfig;
use super::model::Model;
use crate::error::{Error, Result};
use crate::numgrad::Parameterized;

pub const MODEL_MAGIC: &str = "attnmil-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn model_to_string(model: &Model) -> String {
    let mut out = String::new();
    writeln!(out, "{MODEL_MAGIC} {MODEL_FORMAT_VERSION}").unwrap();
    let config = serde_json::to_string(model.config()).expect("model config serializes");
    writeln!(out, "config {config}").unwrap();
    let params = model.params();
    writeln!(out, "params {}", params.len()).unwrap();
    for p in params {
        writeln!(out, "param {} {} {}", p.name, p.value.rows(), p.value.cols()).unwrap();
        for row in p.value.iter_rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    out
}

pub fn model_from_str(text: &str, source: &str) -> Result<Model> {
    let fail = |line: usize, msg: String| Error::Format {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or_else(|| fail(0, format!("unexpected end of file, expected {what}")));

    let (n, header) = next("header")?;
    let version = header
        .strip_prefix(MODEL_MAGIC)
        .map(str::trim)
        .ok_or_else(|| fail(n, "not an attnmil model file".into()))?;
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(fail(n, format!("unsupported model format version `{version}`")));
    }

    let (n, config_line) = next("config")?;
    let config: ModelConfig = config_line
        .strip_prefix("config ")
        .ok_or_else(|| fail(n, "expected `config` line".into()))
        .and_then(|json| serde_json::from_str(json).map_err(|e| fail(n, format!("bad config: {e}"))))?;

    let mut model = Model::new(config).map_err(|e| fail(n, e.to_string()))?;

    let (n, count_line) = next("params")?;
    let count: usize = count_line
        .strip_prefix("params ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| fail(n, "expected `params <count>`".into()))?;
    if count != model.params().len() {
        return Err(fail(
            n,
            format!("file holds {count} parameters, configuration needs {}", model.params().len()),
        ));
    }

    for p in model.params_mut() {
        let (n, decl) = next("param declaration")?;
        let fields: Vec<&str> = decl.split_whitespace().collect();
        let expected = [p.name.clone(), p.value.rows().to_string(), p.value.cols().to_string()];
        if fields.len() != 4 || fields[0] != "param" || fields[1..] != expected {
            return Err(fail(
                n,
                format!("expected `param {}`, found `{decl}`", expected.join(" ")),
            ));
        }
        for r in 0..p.value.rows() {
            let (n, row) = next("parameter row")?;
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| fail(n, format!("bad value: {e}")))?;
            if values.len() != p.value.cols() {
                return Err(fail(n, format!("expected {} values, found {}", p.value.cols(), values.len())));
            }
            p.value.row_mut(r).copy_from_slice(&values);
        }
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text, &path.display().to_string())
}
