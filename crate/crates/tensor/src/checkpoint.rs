use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::optim::AdamConfig;

const MAGIC: &[u8; 4] = b"GLAB";
const VERSION: u32 = 1;

/// Optimizer state as stored on disk: step count, hyperparameters, and the
/// first/second moment buffers per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimSnapshot {
    pub t: u64,
    pub cfg: AdamConfig,
    pub slots: Vec<(String, Vec<f32>, Vec<f32>)>,
}

/// Everything a training run needs to resume: named parameter/buffer tensors
/// (in write order), optimizer state, RNG position, and a free-form JSON
/// metadata block (the network description lives there).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointData {
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
    pub optimizer: Option<OptimSnapshot>,
    /// (seed, stream, word_pos)
    pub rng: (u64, u64, u128),
    pub meta_json: String,
}

struct Writer<W: Write> {
    w: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.w.write_all(&[v])?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn bytes(&mut self, v: &[u8]) -> Result<()> {
        self.w.write_all(v)?;
        Ok(())
    }
    fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }
    fn f32_slice(&mut self, v: &[f32]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 4);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.bytes(&buf)
    }
}

struct Reader<R: Read> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.r.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.r.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|e| TensorError::CheckpointFormat(e.to_string()))
    }
    fn f32_slice(&mut self, len: usize) -> Result<Vec<f32>> {
        let mut buf = vec![0u8; len * 4];
        self.r.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub fn save_checkpoint(path: &Path, data: &CheckpointData) -> Result<()> {
    let file = File::create(path)?;
    let mut w = Writer {
        w: BufWriter::new(file),
    };
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(data.tensors.len() as u32)?;
    for (name, shape, values) in &data.tensors {
        w.str(name)?;
        w.u32(shape.len() as u32)?;
        for &d in shape {
            w.u64(d as u64)?;
        }
        w.f32_slice(values)?;
    }
    match &data.optimizer {
        None => w.u8(0)?,
        Some(opt) => {
            w.u8(1)?;
            w.u64(opt.t)?;
            w.f64(opt.cfg.lr)?;
            w.f64(opt.cfg.beta1)?;
            w.f64(opt.cfg.beta2)?;
            w.f64(opt.cfg.eps)?;
            w.f64(opt.cfg.weight_decay)?;
            w.u8(opt.cfg.decoupled as u8)?;
            w.u32(opt.slots.len() as u32)?;
            for (name, m, v) in &opt.slots {
                w.str(name)?;
                w.u64(m.len() as u64)?;
                w.f32_slice(m)?;
                w.f32_slice(v)?;
            }
        }
    }
    let (seed, stream, word_pos) = data.rng;
    w.u64(seed)?;
    w.u64(stream)?;
    w.u64(word_pos as u64)?;
    w.u64((word_pos >> 64) as u64)?;
    w.str(&data.meta_json)?;
    w.w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointData> {
    let file = File::open(path)?;
    let mut r = Reader {
        r: BufReader::new(file),
    };
    let mut magic = [0u8; 4];
    r.r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TensorError::CheckpointFormat(format!(
            "bad magic {:?}",
            magic
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(TensorError::CheckpointFormat(format!(
            "unsupported version {version}"
        )));
    }
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name = r.str()?;
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        let values = r.f32_slice(numel)?;
        tensors.push((name, shape, values));
    }
    let optimizer = match r.u8()? {
        0 => None,
        1 => {
            let t = r.u64()?;
            let cfg = AdamConfig {
                lr: r.f64()?,
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
                weight_decay: r.f64()?,
                decoupled: r.u8()? != 0,
            };
            let n_slots = r.u32()? as usize;
            let mut slots = Vec::with_capacity(n_slots);
            for _ in 0..n_slots {
                let name = r.str()?;
                let len = r.u64()? as usize;
                let m = r.f32_slice(len)?;
                let v = r.f32_slice(len)?;
                slots.push((name, m, v));
            }
            Some(OptimSnapshot { t, cfg, slots })
        }
        other => {
            return Err(TensorError::CheckpointFormat(format!(
                "bad optimizer flag {other}"
            )))
        }
    };
    let seed = r.u64()?;
    let stream = r.u64()?;
    let lo = r.u64()? as u128;
    let hi = r.u64()? as u128;
    let rng = (seed, stream, lo | (hi << 64));
    let meta_json = r.str()?;
    let mut rest = Vec::new();
    r.r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(TensorError::CheckpointFormat(format!(
            "{} trailing bytes",
            rest.len()
        )));
    }
    Ok(CheckpointData {
        tensors,
        optimizer,
        rng,
        meta_json,
    })
}
