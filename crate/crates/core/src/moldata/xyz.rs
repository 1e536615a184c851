//! Multi-frame XYZ reader and writer.
//!
//! Each frame is an atom count line, a comment line and one
//! `<symbol> <x> <y> <z>` line per atom. The comment line may carry the
//! label as `E=<float>` and an identifier as `id=<token>`; frames without an
//! identifier are named after their position in the file.

use std::fmt::Write as _;

use super::{atomic_number, element_symbol, MolError, Molecule};

pub fn parse_xyz(text: &str) -> Result<Vec<Molecule>, MolError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut molecules = Vec::new();
    let mut cursor = 0;

    loop {
        while cursor < lines.len() && lines[cursor].trim().is_empty() {
            cursor += 1;
        }
        if cursor >= lines.len() {
            break;
        }

        let count_line = cursor + 1;
        let count: usize = lines[cursor].trim().parse().map_err(|_| MolError::Parse {
            line: count_line,
            message: format!("malformed atom count `{}`", lines[cursor].trim()),
        })?;
        if count == 0 {
            return Err(MolError::Parse {
                line: count_line,
                message: "atom count must be at least 1".into(),
            });
        }
        let Some(comment) = lines.get(cursor + 1) else {
            return Err(MolError::Parse {
                line: count_line + 1,
                message: "missing comment line".into(),
            });
        };
        let (id, label) = parse_comment(comment, cursor + 2)?;
        let id = id.unwrap_or_else(|| format!("frame-{}", molecules.len()));

        let mut atomic_numbers = Vec::with_capacity(count);
        let mut positions = Vec::with_capacity(count);
        for k in 0..count {
            let idx = cursor + 2 + k;
            let line_no = idx + 1;
            let Some(line) = lines.get(idx) else {
                return Err(MolError::Parse {
                    line: line_no,
                    message: format!("expected {count} atoms, found {k}"),
                });
            };
            let (z, pos) = parse_atom(line, line_no)?;
            atomic_numbers.push(z);
            positions.push(pos);
        }
        cursor += 2 + count;

        let mol = Molecule::new(id, atomic_numbers, positions, label).map_err(|e| {
            MolError::Parse {
                line: count_line,
                message: e.to_string(),
            }
        })?;
        molecules.push(mol);
    }
    Ok(molecules)
}

fn parse_comment(line: &str, line_no: usize) -> Result<(Option<String>, Option<f64>), MolError> {
    let mut id = None;
    let mut label = None;
    for token in line.split_whitespace() {
        if let Some(value) = token.strip_prefix("E=") {
            let v: f64 = value.parse().map_err(|_| MolError::Parse {
                line: line_no,
                message: format!("non-numeric label `{value}`"),
            })?;
            label = Some(v);
        } else if let Some(value) = token.strip_prefix("id=") {
            id = Some(value.to_string());
        }
    }
    Ok((id, label))
}

fn parse_atom(line: &str, line_no: usize) -> Result<(u8, [f64; 3]), MolError> {
    let mut fields = line.split_whitespace();
    let symbol = fields.next().ok_or_else(|| MolError::Parse {
        line: line_no,
        message: "empty atom line".into(),
    })?;
    let z = atomic_number(symbol).ok_or_else(|| MolError::Parse {
        line: line_no,
        message: format!("unknown element symbol `{symbol}`"),
    })?;
    let mut pos = [0.0f64; 3];
    for (axis, slot) in pos.iter_mut().enumerate() {
        let field = fields.next().ok_or_else(|| MolError::Parse {
            line: line_no,
            message: format!("missing coordinate {}", ["x", "y", "z"][axis]),
        })?;
        *slot = field.parse().map_err(|_| MolError::Parse {
            line: line_no,
            message: format!("non-numeric coordinate `{field}`"),
        })?;
        if !slot.is_finite() {
            return Err(MolError::Parse {
                line: line_no,
                message: format!("non-finite coordinate `{field}`"),
            });
        }
    }
    Ok((z, pos))
}

/// Writes molecules as concatenated XYZ frames that [`parse_xyz`] reads back
/// unchanged. Floats use the shortest round-tripping representation.
pub fn format_xyz(molecules: &[Molecule]) -> String {
    let mut out = String::new();
    for mol in molecules {
        let _ = writeln!(out, "{}", mol.num_atoms());
        let _ = write!(out, "id={}", mol.id);
        if let Some(label) = mol.label {
            let _ = write!(out, " E={label:?}");
        }
        out.push('\n');
        for (z, p) in mol.atomic_numbers.iter().zip(&mol.positions) {
            let symbol = element_symbol(*z).unwrap_or("X");
            let _ = writeln!(out, "{symbol} {:?} {:?} {:?}", p[0], p[1], p[2]);
        }
    }
    out
}
