use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::eval::{attack_value, desugar_program, eval, DesugarError, Desugared, EvalError, Event, Trace, DEFAULT_FUEL};
use crate::lattice::{Lattice, Principal};
use crate::syntax::{parse_with, subst, Expr, ExprKind, ParseError, ParseOptions, Type};
use crate::typecheck::{flow_bottom, Checker, Ctx, TypeError};

#[derive(Clone, Debug)]
pub struct Options {
    pub fuel: usize,
    /// Run programs and pool values that fail to type-check.
    pub unchecked: bool,
    /// Per-trace cap on the candidate indices enumerated by the index searches.
    pub index_cap: Option<usize>,
}

impl Default for Options {
    fn default() -> Options {
        Options { fuel: DEFAULT_FUEL, unchecked: false, index_cap: None }
    }
}

/// Finite input pools. An attack is one expression per hole, or a single
/// value for a two-input program.
#[derive(Clone, Debug, Default)]
pub struct Pools {
    pub secrets: Vec<Expr>,
    pub attacks: Vec<Vec<Expr>>,
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("pools: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pools: {which}[{index}]: {err}")]
    Parse { which: &'static str, index: usize, err: ParseError },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AttackJson {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
struct PoolsJson {
    #[serde(default)]
    secrets: Vec<String>,
    #[serde(default)]
    attacks: Vec<AttackJson>,
}

const POOL_SYNTAX: ParseOptions = ParseOptions { allow_etav: true, allow_brackets: false, allow_holes: false };

fn parse_entry(which: &'static str, index: usize, s: &str) -> Result<Expr, PoolError> {
    parse_with(s, POOL_SYNTAX).map_err(|err| PoolError::Parse { which, index, err })
}

impl Pools {
    pub fn new(secrets: Vec<Expr>, attacks: Vec<Expr>) -> Pools {
        Pools { secrets, attacks: attacks.into_iter().map(|a| vec![a]).collect() }
    }

    /// `{"secrets": [..], "attacks": [.. | [..]]}` with values in program syntax.
    pub fn from_json(text: &str) -> Result<Pools, PoolError> {
        let raw: PoolsJson = serde_json::from_str(text)?;
        let secrets =
            raw.secrets.iter().enumerate().map(|(i, s)| parse_entry("secrets", i, s)).collect::<Result<_, _>>()?;
        let attacks = raw
            .attacks
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                AttackJson::One(s) => Ok(vec![parse_entry("attacks", i, s)?]),
                AttackJson::Many(ss) => ss.iter().map(|s| parse_entry("attacks", i, s)).collect(),
            })
            .collect::<Result<_, _>>()?;
        Ok(Pools { secrets, attacks })
    }

    pub fn load(path: &Path) -> Result<Pools, PoolError> {
        Pools::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Type(TypeError),
    #[error("{0}")]
    Desugar(#[from] DesugarError),
    #[error("{which}: {err}")]
    Eval { which: String, err: EvalError },
    #[error("{which}[{index}] = {value} does not have the input type: {reason}")]
    PoolValue { which: &'static str, index: usize, value: String, reason: String },
}

impl HarnessError {
    /// Failures that mean a precondition is unmet rather than a broken run.
    pub fn is_precondition(&self) -> bool {
        matches!(self, HarnessError::PoolValue { .. } | HarnessError::Desugar(DesugarError::Attack { .. }))
    }
}

/// A program `lam (x : tx) [pc]. lam (y : ty) [pc']. e` (or with only the
/// `x` binder), ready to run on input pairs.
#[derive(Clone, Debug)]
pub struct Experiment<'a> {
    pub lat: &'a Lattice,
    pub program: Expr,
    pub desugared: Option<Desugared>,
    pub x: String,
    pub tx: Type,
    pub y: Option<(String, Type)>,
    /// pc under which the body types.
    pub pc: Principal,
    pub body: Expr,
    pub well_typed: bool,
    pub opts: Options,
}

/// All runs over a pool grid: `traces[i][j]` for secret `i` and attack `j`.
#[derive(Clone, Debug)]
pub struct Runs {
    pub secrets: Vec<Expr>,
    pub attacks: Vec<Expr>,
    pub traces: Vec<Vec<Trace>>,
}

impl<'a> Experiment<'a> {
    pub fn new(lat: &'a Lattice, prog: &Expr, opts: Options) -> Result<Experiment<'a>, HarnessError> {
        let desugared = if prog.holes().is_empty() { None } else { Some(desugar_program(lat, prog)?) };
        let program = desugared.as_ref().map(|d| d.program.clone()).unwrap_or_else(|| prog.clone());
        let typed = Checker::new(lat).infer(&Ctx::new(), &flow_bottom(), &program);
        let well_typed = typed.is_ok();
        if let Err(e) = typed {
            if !opts.unchecked {
                return Err(HarnessError::Type(e));
            }
        }
        let (x, tx, pc, body) = match &program.kind {
            ExprKind::Lam { var, ty, pc, body } => (var.clone(), ty.clone(), pc.clone(), (**body).clone()),
            _ => return Err(HarnessError::Shape("program must start with `lam (x : t) [pc].`".into())),
        };
        let (y, pc, body) = match &body.kind {
            ExprKind::Lam { var, ty, pc: pc2, body: inner } => {
                (Some((var.clone(), ty.clone())), pc2.clone(), (**inner).clone())
            }
            _ => (None, pc, body),
        };
        Ok(Experiment { lat, program, desugared, x, tx, y, pc, body, well_typed, opts })
    }

    fn check_value(&self, which: &'static str, index: usize, v: &Expr, t: &Type) -> Result<(), HarnessError> {
        let bad = |reason: String| HarnessError::PoolValue { which, index, value: v.to_string(), reason };
        if !v.is_value() {
            return Err(bad("not a value".into()));
        }
        if self.opts.unchecked {
            return Ok(());
        }
        Checker::new(self.lat).check(&Ctx::new(), &flow_bottom(), v, t).map_err(|e| bad(e.to_string()))
    }

    pub fn secret_values(&self, pools: &Pools) -> Result<Vec<Expr>, HarnessError> {
        for (i, v) in pools.secrets.iter().enumerate() {
            self.check_value("secrets", i, v, &self.tx)?;
        }
        Ok(pools.secrets.clone())
    }

    /// Values for `y`, built from hole fillers when the program had holes.
    pub fn attack_values(&self, pools: &Pools) -> Result<Vec<Expr>, HarnessError> {
        let Some((_, ty)) = &self.y else {
            return Err(HarnessError::Shape("program has no attacker input".into()));
        };
        let mut out = Vec::new();
        for (i, a) in pools.attacks.iter().enumerate() {
            let w = match &self.desugared {
                Some(d) => attack_value(self.lat, d, a)?,
                None => match &a[..] {
                    [w] => w.clone(),
                    _ => return Err(HarnessError::Shape(format!("attacks[{i}] must be a single value"))),
                },
            };
            self.check_value("attacks", i, &w, ty)?;
            out.push(w);
        }
        Ok(out)
    }

    fn eval_body(&self, e: &Expr, which: impl FnOnce() -> String) -> Result<Trace, HarnessError> {
        eval(self.lat, e, self.opts.fuel).map(|o| o.trace).map_err(|err| HarnessError::Eval { which: which(), err })
    }

    /// `<e[x := v][y := w] | v; w> ->* <v' | t>`, returning `t`.
    pub fn run(&self, v: &Expr, w: &Expr) -> Result<Trace, HarnessError> {
        let Some((y, _)) = &self.y else {
            return Err(HarnessError::Shape("program has no attacker input".into()));
        };
        let e = subst(&subst(&self.body, &self.x, v), y, w);
        let mut t = vec![Event::Input { value: v.clone() }, Event::Input { value: w.clone() }];
        t.extend(self.eval_body(&e, || format!("run x = {v}, y = {w}"))?);
        Ok(t)
    }

    /// `<e[x := v] | v> ->* <v' | t>`, with `y` (if any) fixed to `w`.
    pub fn run_single(&self, v: &Expr, w: Option<&Expr>) -> Result<Trace, HarnessError> {
        let mut e = subst(&self.body, &self.x, v);
        if let (Some((y, _)), Some(w)) = (&self.y, w) {
            e = subst(&e, y, w);
        }
        let mut t = vec![Event::Input { value: v.clone() }];
        t.extend(self.eval_body(&e, || format!("run x = {v}"))?);
        Ok(t)
    }

    /// Runs every secret against every attack, in parallel.
    pub fn run_all(&self, secrets: Vec<Expr>, attacks: Vec<Expr>) -> Result<Runs, HarnessError> {
        let na = attacks.len();
        let cells: Vec<(usize, usize)> = (0..secrets.len()).flat_map(|i| (0..na).map(move |j| (i, j))).collect();
        let flat: Vec<Trace> =
            cells.par_iter().map(|&(i, j)| self.run(&secrets[i], &attacks[j])).collect::<Result<_, _>>()?;
        let mut it = flat.into_iter();
        let traces = (0..secrets.len()).map(|_| it.by_ref().take(na).collect()).collect();
        Ok(Runs { secrets, attacks, traces })
    }
}
