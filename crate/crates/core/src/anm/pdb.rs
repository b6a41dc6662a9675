//! C-alpha extraction from fixed-column PDB text.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residue {
    pub chain: char,
    pub seq: i32,
    pub insertion: char,
    pub name: String,
    /// C-alpha position in angstroms.
    pub ca: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteinStructure {
    pub id: String,
    pub residues: Vec<Residue>,
}

impl ProteinStructure {
    pub fn new(id: impl Into<String>, residues: Vec<Residue>) -> Result<Self> {
        if residues.is_empty() {
            return Err(Error::NoCaAtoms);
        }
        if residues.len() < 2 {
            return Err(Error::InvalidCount(format!(
                "a structure needs at least 2 residues, got {}",
                residues.len()
            )));
        }
        for (index, r) in residues.iter().enumerate() {
            if r.ca.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteValue { index });
            }
        }
        Ok(Self {
            id: id.into(),
            residues,
        })
    }

    /// Builds an anonymous structure straight from coordinates.
    pub fn from_coords(id: impl Into<String>, coords: &[[f64; 3]]) -> Result<Self> {
        let residues = coords
            .iter()
            .enumerate()
            .map(|(i, &ca)| Residue {
                chain: 'A',
                seq: i as i32 + 1,
                insertion: ' ',
                name: "UNK".into(),
                ca,
            })
            .collect();
        Self::new(id, residues)
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn coords(&self) -> Vec<[f64; 3]> {
        self.residues.iter().map(|r| r.ca).collect()
    }

    /// Copy with every coordinate passed through `f`.
    pub fn map_coords(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = self.clone();
        for r in &mut out.residues {
            r.ca = f(r.ca);
        }
        out
    }
}

fn column(line: &str, from: usize, to: usize) -> &str {
    // 1-based inclusive column range, clipped to the line
    let end = to.min(line.len());
    if from > end {
        ""
    } else {
        &line[from - 1..end]
    }
}

fn char_at(line: &str, col: usize) -> char {
    line.as_bytes().get(col - 1).map(|b| *b as char).unwrap_or(' ')
}

fn coordinate(line: &str, lineno: usize, from: usize, to: usize, axis: &str) -> Result<f64> {
    let field = column(line, from, to).trim();
    field.parse::<f64>().map_err(|_| Error::MalformedRecord {
        line: lineno,
        message: format!("bad {axis} coordinate {field:?}"),
    })
}

/// One node per residue: the first C-alpha ATOM record seen for each
/// (chain, sequence number, insertion code), first model only.
pub fn parse_pdb(text: &str, id: &str) -> Result<ProteinStructure> {
    let mut seen = HashSet::new();
    let mut residues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        if !line.is_ascii() {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: "non-ASCII characters in ATOM record".into(),
            });
        }
        if column(line, 13, 16).trim() != "CA" {
            continue;
        }
        if line.len() < 54 {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: format!("ATOM record has {} columns, need 54", line.len()),
            });
        }
        let chain = char_at(line, 22);
        let seq_field = column(line, 23, 26).trim();
        let seq = seq_field.parse::<i32>().map_err(|_| Error::MalformedRecord {
            line: lineno,
            message: format!("bad residue number {seq_field:?}"),
        })?;
        let insertion = char_at(line, 27);
        if !seen.insert((chain, seq, insertion)) {
            continue;
        }
        let ca = [
            coordinate(line, lineno, 31, 38, "x")?,
            coordinate(line, lineno, 39, 46, "y")?,
            coordinate(line, lineno, 47, 54, "z")?,
        ];
        residues.push(Residue {
            chain,
            seq,
            insertion,
            name: column(line, 18, 20).trim().to_string(),
            ca,
        });
    }
    ProteinStructure::new(id, residues)
}

/// Reads a PDB file; the id is the file stem.
pub fn read_pdb(path: impl AsRef<Path>) -> Result<ProteinStructure> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_pdb(&text, &id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(serial: usize, name: &str, alt: char, res: &str, chain: char, seq: i32, xyz: [f64; 3]) -> String {
        format!(
            "ATOM  {serial:>5} {name:<4}{alt}{res:>3} {chain}{seq:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00 20.00           C",
            xyz[0], xyz[1], xyz[2]
        )
    }

    #[test]
    fn three_residues() {
        let text = [
            atom(1, " N", ' ', "GLY", 'A', 1, [0.0, 0.0, 0.0]),
            atom(2, " CA", ' ', "GLY", 'A', 1, [1.0, 2.0, 3.0]),
            atom(3, " CA", ' ', "ALA", 'A', 2, [4.5, -5.25, 6.0]),
            atom(4, " CA", ' ', "SER", 'B', 1, [-7.0, 8.0, 9.125]),
        ]
        .join("\n");
        let p = parse_pdb(&text, "t").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.residues[0].ca, [1.0, 2.0, 3.0]);
        assert_eq!(p.residues[1].ca, [4.5, -5.25, 6.0]);
        assert_eq!(p.residues[2].chain, 'B');
        assert_eq!(p.residues[2].name, "SER");
    }

    #[test]
    fn first_altloc_wins() {
        let text = [
            atom(1, " CA", 'A', "GLY", 'A', 1, [1.0, 1.0, 1.0]),
            atom(2, " CA", 'B', "GLY", 'A', 1, [9.0, 9.0, 9.0]),
            atom(3, " CA", ' ', "GLY", 'A', 2, [2.0, 2.0, 2.0]),
        ]
        .join("\n");
        let p = parse_pdb(&text, "t").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.residues[0].ca, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn hetatm_and_later_models_ignored() {
        let mut lines = vec![
            "MODEL        1".to_string(),
            atom(1, " CA", ' ', "GLY", 'A', 1, [1.0, 1.0, 1.0]),
            atom(2, " CA", ' ', "GLY", 'A', 2, [2.0, 1.0, 1.0]),
            atom(3, "CA", ' ', " CA", 'A', 3, [5.0, 5.0, 5.0]).replacen("ATOM  ", "HETATM", 1),
            "ENDMDL".to_string(),
            "MODEL        2".to_string(),
        ];
        lines.push(atom(4, " CA", ' ', "GLY", 'A', 3, [3.0, 1.0, 1.0]));
        let p = parse_pdb(&lines.join("\n"), "t").unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn insertion_codes_are_distinct() {
        let mut a = atom(1, " CA", ' ', "GLY", 'A', 52, [1.0, 1.0, 1.0]);
        let mut b = atom(2, " CA", ' ', "GLY", 'A', 52, [2.0, 1.0, 1.0]);
        a.replace_range(26..27, " ");
        b.replace_range(26..27, "A");
        let p = parse_pdb(&format!("{a}\n{b}"), "t").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.residues[1].insertion, 'A');
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_pdb("HEADER x\nEND\n", "t"), Err(Error::NoCaAtoms)));
        let good = atom(1, " CA", ' ', "GLY", 'A', 1, [1.0, 1.0, 1.0]);
        let bad = atom(2, " CA", ' ', "GLY", 'A', 2, [1.0, 1.0, 1.0]).replace("   1.000   1.000   1.000", "   1.000   x.xxx   1.000");
        assert!(matches!(
            parse_pdb(&format!("REMARK\n{good}\n{bad}"), "t"),
            Err(Error::MalformedRecord { line: 3, .. })
        ));
        let short = &good[..40];
        assert!(matches!(
            parse_pdb(short, "t"),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }
}
