//! Model checkpoint file.
//!
//! A text header followed by the raw parameter bytes:
//!
//! ```text
//! hdpan-checkpoint 1
//! arch = mlp
//! input_dim = 784
//! hidden = 300,300
//! meta.config_hash = 3fa1...
//! tensor = 784,300
//! tensor = 300
//! ...
//! end
//! <little-endian f32 values of every tensor, in header order>
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{build, Architecture, CnnSpec, MlpSpec, Model};

const MAGIC: &str = "hdpan-checkpoint 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

fn bad(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

/// A restored model plus the free-form metadata stored alongside it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model<f32>,
    pub meta: BTreeMap<String, String>,
}

fn join(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn split_dims(s: &str) -> Result<Vec<usize>, CheckpointError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("bad dimension list `{s}`"))))
        .collect()
}

pub fn write_checkpoint<W: Write>(
    out: &mut W,
    model: &Model<f32>,
    meta: &BTreeMap<String, String>,
) -> Result<(), CheckpointError> {
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    match model.architecture() {
        Architecture::Mlp(s) => {
            header.push_str(&format!("arch = mlp\ninput_dim = {}\nhidden = {}\n", s.input_dim, join(&s.hidden)));
        }
        Architecture::Cnn(_) => header.push_str("arch = cnn\n"),
    }
    for (k, v) in meta {
        if k.contains(['\n', '=']) || v.contains('\n') {
            return Err(bad(format!("metadata entry `{k}` cannot be stored on one line")));
        }
        header.push_str(&format!("meta.{k} = {v}\n"));
    }
    for p in model.params() {
        header.push_str(&format!("tensor = {}\n", join(p.value.shape())));
    }
    header.push_str("end\n");
    out.write_all(header.as_bytes())?;
    for p in model.params() {
        let bytes: Vec<u8> = p.value.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        out.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: &mut R) -> Result<Checkpoint, CheckpointError> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(bad("missing checkpoint magic line"));
    }
    let mut fields = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut shapes = Vec::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Err(bad("header is not terminated by `end`"));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once(" = ").ok_or_else(|| bad(format!("bad header line `{l}`")))?;
        if k == "tensor" {
            shapes.push(split_dims(v)?);
        } else if let Some(mk) = k.strip_prefix("meta.") {
            meta.insert(mk.to_string(), v.to_string());
        } else {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let arch = match fields.get("arch").map(String::as_str) {
        Some("mlp") => {
            let input_dim = fields
                .get("input_dim")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("mlp checkpoint needs input_dim"))?;
            let hidden = split_dims(fields.get("hidden").ok_or_else(|| bad("mlp checkpoint needs hidden"))?)?;
            let hidden: [usize; 2] = hidden.try_into().map_err(|_| bad("hidden must list two widths"))?;
            Architecture::Mlp(MlpSpec::new(input_dim, hidden))
        }
        Some("cnn") => Architecture::Cnn(CnnSpec),
        other => return Err(bad(format!("unknown architecture {other:?}"))),
    };
    let mut model: Model<f32> = build(arch, 0);
    let params = model.params_mut();
    if params.len() != shapes.len() {
        return Err(bad(format!("expected {} tensors, header lists {}", params.len(), shapes.len())));
    }
    for (p, shape) in params.into_iter().zip(&shapes) {
        if p.value.shape() != shape.as_slice() {
            return Err(bad(format!("tensor shape {shape:?} does not match architecture {:?}", p.value.shape())));
        }
        let mut buf = vec![0u8; p.value.len() * 4];
        input
            .read_exact(&mut buf)
            .map_err(|e| if e.kind() == io::ErrorKind::UnexpectedEof { bad("truncated parameter data") } else { e.into() })?;
        for (v, b) in p.value.data_mut().iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes after parameter data"));
    }
    Ok(Checkpoint { model, meta })
}

pub fn save_checkpoint(path: &Path, model: &Model<f32>, meta: &BTreeMap<String, String>) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, meta)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}
