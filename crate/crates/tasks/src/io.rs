use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Result, TaskError};
use crate::types::{ParityExample, SequenceExample};

/// Render one sequence line: space-separated input ids, a tab, then
/// space-separated targets with -1 marking ignored positions.
pub(crate) fn sequence_line(ex: &SequenceExample) -> String {
    let tokens: Vec<String> = ex.input_tokens.iter().map(|t| t.to_string()).collect();
    let targets: Vec<String> = ex.target_tokens.iter().map(|t| t.to_string()).collect();
    format!("{}\t{}", tokens.join(" "), targets.join(" "))
}

/// Render one parity line: the bits as a contiguous 0/1 string, a tab, then
/// the label.
pub(crate) fn parity_line(ex: &ParityExample) -> String {
    let bits: String = ex.bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect();
    format!("{}\t{}", bits, ex.label)
}

pub fn save_sequences(path: impl AsRef<Path>, items: &[SequenceExample]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| TaskError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in items {
        writeln!(out, "{}", sequence_line(ex)).map_err(|e| TaskError::io(path, e))?;
    }
    out.flush().map_err(|e| TaskError::io(path, e))
}

pub fn load_sequences(path: impl AsRef<Path>) -> Result<Vec<SequenceExample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| TaskError::io(path, e))?;
    let mut items = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| TaskError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (tok_part, tgt_part) = line.split_once('\t').ok_or_else(|| {
            TaskError::bad_format(path, format!("line {}: missing tab", lineno + 1))
        })?;
        let parse = |s: &str, what: &str| -> Result<Vec<i64>> {
            s.split(' ')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse::<i64>().map_err(|_| {
                        TaskError::bad_format(
                            path,
                            format!("line {}: bad {what} value {p:?}", lineno + 1),
                        )
                    })
                })
                .collect()
        };
        let tokens = parse(tok_part, "token")?;
        let targets = parse(tgt_part, "target")?;
        if tokens.iter().any(|&t| t < 0) {
            return Err(TaskError::bad_format(
                path,
                format!("line {}: negative input token", lineno + 1),
            ));
        }
        if tokens.len() != targets.len() {
            return Err(TaskError::bad_format(
                path,
                format!(
                    "line {}: {} tokens but {} targets",
                    lineno + 1,
                    tokens.len(),
                    targets.len()
                ),
            ));
        }
        let input = tokens.into_iter().map(|t| t as usize).collect();
        items.push(SequenceExample::new(input, targets)?);
    }
    Ok(items)
}

pub fn save_parity(path: impl AsRef<Path>, items: &[ParityExample]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| TaskError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in items {
        writeln!(out, "{}", parity_line(ex)).map_err(|e| TaskError::io(path, e))?;
    }
    out.flush().map_err(|e| TaskError::io(path, e))
}

pub fn load_parity(path: impl AsRef<Path>) -> Result<Vec<ParityExample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| TaskError::io(path, e))?;
    let mut items = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| TaskError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (bit_part, label_part) = line.split_once('\t').ok_or_else(|| {
            TaskError::bad_format(path, format!("line {}: missing tab", lineno + 1))
        })?;
        let bits: Vec<u8> = bit_part
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(TaskError::bad_format(
                    path,
                    format!("line {}: bad bit {other:?}", lineno + 1),
                )),
            })
            .collect::<Result<_>>()?;
        if bits.is_empty() {
            return Err(TaskError::bad_format(
                path,
                format!("line {}: empty bitstring", lineno + 1),
            ));
        }
        let label: u8 = label_part.parse().map_err(|_| {
            TaskError::bad_format(path, format!("line {}: bad label", lineno + 1))
        })?;
        if label > 1 {
            return Err(TaskError::LabelOutOfRange {
                label: label as usize,
                classes: 2,
            });
        }
        items.push(ParityExample { bits, label });
    }
    Ok(items)
}
