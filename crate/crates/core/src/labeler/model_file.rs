//! Trained classifier files.
//!
//! A UTF-8 header of `key value` lines ended by an empty line, followed by
//! the parameter blocks `w1 b1 w2 b2 w3 b3`, row-major `[out][in]`, as
//! little-endian f64:
//!
//! ```text
//! spanalign-labeler v1
//! classes TRAN PARA SUM GEN REPL
//! layers 3 100 100 5
//! activation relu
//! scaling log1p
//! init uniform-fan-in
//! optimizer sgd
//! seed 42
//!
//! <binary blocks>
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{LabelerError, MlpParams, CLASSES, CLASS_ORDER, FEATURES, HIDDEN};

const MAGIC_LINE: &str = "spanalign-labeler v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelHeader {
    pub seed: u64,
    pub activation: String,
    pub scaling: String,
    pub init: String,
    pub optimizer: String,
}

impl ModelHeader {
    pub fn new(seed: u64) -> Self {
        ModelHeader {
            seed,
            activation: "relu".into(),
            scaling: "log1p".into(),
            init: "uniform-fan-in".into(),
            optimizer: "sgd".into(),
        }
    }
}

fn err(msg: impl Into<String>) -> LabelerError {
    LabelerError::ModelFile(msg.into())
}

fn classes_line() -> String {
    let names: Vec<&str> = CLASS_ORDER.iter().map(|l| l.code()).collect();
    names.join(" ")
}

fn layers_line() -> String {
    format!("{FEATURES} {HIDDEN} {HIDDEN} {CLASSES}")
}

pub fn write_model(mut w: impl Write, header: &ModelHeader, params: &MlpParams) -> Result<(), LabelerError> {
    params.check()?;
    let io = |e: std::io::Error| err(e.to_string());
    writeln!(w, "{MAGIC_LINE}").map_err(io)?;
    writeln!(w, "classes {}", classes_line()).map_err(io)?;
    writeln!(w, "layers {}", layers_line()).map_err(io)?;
    writeln!(w, "activation {}", header.activation).map_err(io)?;
    writeln!(w, "scaling {}", header.scaling).map_err(io)?;
    writeln!(w, "init {}", header.init).map_err(io)?;
    writeln!(w, "optimizer {}", header.optimizer).map_err(io)?;
    writeln!(w, "seed {}", header.seed).map_err(io)?;
    writeln!(w).map_err(io)?;
    for block in params.blocks() {
        for v in block {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_model(r: impl Read) -> Result<(ModelHeader, MlpParams), LabelerError> {
    let mut r = BufReader::new(r);
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        let n = r.read_line(&mut line).map_err(|e| err(e.to_string()))?;
        if n == 0 {
            return Err(err("header not terminated by an empty line"));
        }
        let line = line.trim_end_matches(['\n', '\r']).to_string();
        if line.is_empty() {
            break;
        }
        lines.push(line);
    }
    if lines.first().map(String::as_str) != Some(MAGIC_LINE) {
        return Err(err(format!("first line must be `{MAGIC_LINE}`")));
    }
    let field = |key: &str| -> Result<&str, LabelerError> {
        lines[1..]
            .iter()
            .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')))
            .ok_or_else(|| err(format!("missing header field `{key}`")))
    };
    if field("classes")? != classes_line() {
        return Err(err(format!("class order `{}` differs from `{}`", field("classes")?, classes_line())));
    }
    if field("layers")? != layers_line() {
        return Err(err(format!("layer sizes `{}` differ from `{}`", field("layers")?, layers_line())));
    }
    if field("activation")? != "relu" || field("scaling")? != "log1p" {
        return Err(err("only relu activation with log1p length scaling is supported"));
    }
    let header = ModelHeader {
        seed: field("seed")?.parse().map_err(|_| err("seed is not an integer"))?,
        activation: field("activation")?.into(),
        scaling: field("scaling")?.into(),
        init: field("init").unwrap_or("unknown").into(),
        optimizer: field("optimizer").unwrap_or("unknown").into(),
    };

    let mut params = MlpParams::zeros();
    let mut buf = [0u8; 8];
    for block in params.blocks_mut() {
        for v in block.iter_mut() {
            r.read_exact(&mut buf).map_err(|_| err("parameter blocks truncated"))?;
            *v = f64::from_le_bytes(buf);
        }
    }
    if r.read(&mut buf).map_err(|e| err(e.to_string()))? != 0 {
        return Err(err("trailing bytes after parameter blocks"));
    }
    params.check()?;
    Ok((header, params))
}

pub fn save_model(path: impl AsRef<Path>, header: &ModelHeader, params: &MlpParams) -> Result<(), LabelerError> {
    let mut bytes = Vec::new();
    write_model(&mut bytes, header, params)?;
    fs::write(path.as_ref(), bytes).map_err(|e| err(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ModelHeader, MlpParams), LabelerError> {
    let file = fs::File::open(path.as_ref()).map_err(|e| err(format!("{}: {e}", path.as_ref().display())))?;
    read_model(file)
}
