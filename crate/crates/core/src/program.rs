//! Program files: optional `#lattice <path>` and `#pc <principal>` lines
//! followed by one expression.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lattice::{ConfigError, Lattice, Principal};
use crate::syntax::{parse, parse_principal, Expr, ParseError};

#[derive(Clone, Debug)]
pub struct Program {
    /// Lattice path, relative paths resolved against the file's directory.
    pub lattice: Option<PathBuf>,
    pub pc: Option<Principal>,
    pub expr: Expr,
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Lattice(#[from] ConfigError),
}

impl Program {
    /// Parses directives and the expression. Directive lines are blanked so
    /// error positions still match the file.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Program, ProgramError> {
        let mut lattice = None;
        let mut pc = None;
        let mut body = String::with_capacity(text.len());
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix("#lattice") {
                let p = PathBuf::from(rest.trim());
                lattice = Some(match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                });
            } else if let Some(rest) = t.strip_prefix("#pc") {
                pc = Some(parse_principal(rest.trim()).map_err(|mut e| {
                    e.line = i as u32 + 1;
                    e
                })?);
            } else {
                body.push_str(line);
            }
            body.push('\n');
        }
        Ok(Program { lattice, pc, expr: parse(&body)? })
    }

    pub fn load(path: &Path) -> Result<Program, ProgramError> {
        let text =
            std::fs::read_to_string(path).map_err(|err| ProgramError::Io { path: path.display().to_string(), err })?;
        Program::parse(&text, path.parent())
    }

    /// The `#lattice` file, or the empty lattice.
    pub fn load_lattice(&self) -> Result<Lattice, ProgramError> {
        match &self.lattice {
            Some(p) => Ok(Lattice::load(p)?),
            None => Ok(Lattice::empty()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directives_are_read() {
        let p = Program::parse("#lattice pwd.json\n#pc T^<-\n-- comment\n()\n", Some(Path::new("corpus"))).unwrap();
        assert_eq!(p.lattice.unwrap(), PathBuf::from("corpus/pwd.json"));
        assert_eq!(p.pc.unwrap().to_string(), "T^<-");
        assert_eq!(p.expr, Expr::unit());
    }

    #[test]
    fn error_lines_match_file() {
        let err = Program::parse("#pc T\n\nbind x = in x", None).unwrap_err();
        match err {
            ProgramError::Parse(e) => assert_eq!(e.line, 3),
            e => panic!("{e}"),
        }
    }
}
