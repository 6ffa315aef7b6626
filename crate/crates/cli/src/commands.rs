use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use nmifc::eval::{desugar_program, eval, DesugarError, EvalError};
use nmifc::gen::Gen;
use nmifc::lattice::{flow_join, flow_meet, project, show_clause, view, voice, Aspect, Lattice, Principal};
use nmifc::program::{Program, ProgramError};
use nmifc::security::{
    check_nmif, check_noninterference, check_robust_declassification, check_transparent_endorsement, Attacker,
    Condition, Experiment, HarnessError, NiVariant, Options, Pools, Report,
};
use nmifc::syntax::{parse_high_set, parse_principals, parse_with, subst, Expr, ExprKind, HighSet, ParseOptions};
use nmifc::typecheck::{flow_bottom, Checker, Ctx, TypeError};

use crate::{Cli, Command, Format};

/// Writes a line to stdout, ignoring a closed pipe.
fn out(s: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

/// A run that ends with a nonzero exit code and a diagnostic.
#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Type(String),
    Fuel(String),
    Skip(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Type(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Fuel(_) => 4,
            Failure::Skip(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Parse(_) => "parse",
            Failure::Type(_) => "type",
            Failure::Fuel(_) => "fuel",
            Failure::Skip(_) => "skip",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Type(m) | Failure::Fuel(m) | Failure::Skip(m) => m,
        }
    }

    pub fn report(&self, format: Format) {
        match format {
            Format::Text => eprintln!("error: {}", self.message()),
            Format::Json => out(&json!({"error": self.kind(), "message": self.message()}).to_string()),
        }
    }
}

fn type_failure(file: &Path, e: &TypeError) -> Failure {
    Failure::Type(format!("{}:{e}", file.display()))
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::OutOfFuel { steps, .. } => Failure::Fuel(format!("out of fuel after {steps} steps")),
        EvalError::Stuck { steps, reason, expr, .. } => {
            Failure::Type(format!("stuck after {steps} steps: {reason}: {expr}"))
        }
    }
}

fn program_failure(e: ProgramError) -> Failure {
    Failure::Parse(e.to_string())
}

pub fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Lattice { query, explain } => lattice(cli, query, *explain),
        Command::Check { file, ast } => check(cli, file, *ast),
        Command::Run { file, inputs } => run_program(cli, file, inputs),
        Command::Verify { file, condition, attacker, pools, high, pool_size } => {
            verify(cli, file, condition, attacker, pools.as_deref(), high.as_deref(), *pool_size)
        }
        Command::Desugar { file } => desugar(cli, file),
    }
}

fn emit(cli: &Cli, text: impl FnOnce() -> String, value: impl FnOnce() -> Value) {
    match cli.format {
        Format::Text => out(&text()),
        Format::Json => out(&serde_json::to_string_pretty(&value()).unwrap()),
    }
}

fn load_lattice_flag(cli: &Cli) -> Result<Option<Lattice>, Failure> {
    cli.lattice.as_ref().map(|p| Lattice::load(p).map_err(|e| Failure::Parse(e.to_string()))).transpose()
}

/// Program, lattice (flag over directive) and pc (flag over directive, else `top<-`).
fn load(cli: &Cli, file: &Path) -> Result<(Program, Lattice, Principal), Failure> {
    let prog = Program::load(file).map_err(program_failure)?;
    let lat = match load_lattice_flag(cli)? {
        Some(l) => l,
        None => prog.load_lattice().map_err(program_failure)?,
    };
    let pc = match &cli.pc {
        Some(s) => parse_principals(s, 1).map_err(|e| Failure::Parse(format!("--pc: {e}")))?.remove(0),
        None => prog.pc.clone().unwrap_or_else(flow_bottom),
    };
    Ok((prog, lat, pc))
}

fn lattice(cli: &Cli, query: &str, explain: bool) -> Result<u8, Failure> {
    let lat = load_lattice_flag(cli)?.unwrap_or_else(Lattice::empty);
    let query = query.trim();
    let (op, rest) = query.split_once(char::is_whitespace).unwrap_or((query, ""));
    let arity = match op {
        "actsfor" | "flows" | "join" | "meet" => 2,
        "voice" | "view" => 1,
        _ => return Err(Failure::Parse(format!("unknown lattice query `{op}` (expected actsfor, flows, voice, view, join or meet)"))),
    };
    let ps = parse_principals(rest, arity).map_err(|e| Failure::Parse(format!("{op}: {e}")))?;
    let principal = |p: Principal| {
        let s = p.to_string();
        emit(cli, || s.clone(), || json!({"query": op, "result": s}));
        Ok(0)
    };
    match op {
        "voice" => principal(voice(&ps[0])),
        "view" => principal(view(&ps[0])),
        "join" => principal(flow_join(&ps[0], &ps[1])),
        "meet" => principal(flow_meet(&ps[0], &ps[1])),
        _ => {
            // l flows to l2 iff l2-> & l<- acts for l-> & l2<-.
            let (p, q) = if op == "actsfor" {
                (ps[0].clone(), ps[1].clone())
            } else {
                (
                    project(&ps[1], Aspect::Conf).and(project(&ps[0], Aspect::Integ)),
                    project(&ps[0], Aspect::Conf).and(project(&ps[1], Aspect::Integ)),
                )
            };
            let holds = lat.acts_for(&p, &q);
            let checks = if explain { lat.explain_acts_for(&p, &q) } else { Vec::new() };
            let text = || {
                let mut out = holds.to_string();
                for c in &checks {
                    let by = c.covered_by.as_ref().map(show_clause).unwrap_or_else(|| "nothing".into());
                    out.push_str(&format!(
                        "\n  {}: need {} (closure {}), covered by {}",
                        c.aspect.json_name(),
                        show_clause(&c.clause),
                        show_clause(&c.closure),
                        by
                    ));
                }
                out
            };
            let value = || {
                let clauses: Vec<Value> = checks
                    .iter()
                    .map(|c| {
                        json!({
                            "aspect": c.aspect.json_name(),
                            "clause": show_clause(&c.clause),
                            "closure": show_clause(&c.closure),
                            "coveredBy": c.covered_by.as_ref().map(show_clause),
                        })
                    })
                    .collect();
                let mut v = json!({"query": op, "result": holds});
                if explain {
                    v["clauses"] = Value::Array(clauses);
                }
                v
            };
            emit(cli, text, value);
            Ok(0)
        }
    }
}

fn check(cli: &Cli, file: &Path, ast: bool) -> Result<u8, Failure> {
    let (prog, lat, pc) = load(cli, file)?;
    if ast {
        let v = serde_json::to_value(&prog.expr).unwrap();
        out(&serde_json::to_string_pretty(&json!({"version": 1, "ast": v})).unwrap());
        return Ok(0);
    }
    let checker = if prog.expr.holes().is_empty() { Checker::new(&lat) } else { Checker::harness(&lat) };
    let t = checker.infer(&Ctx::new(), &pc, &prog.expr).map_err(|e| type_failure(file, &e))?;
    emit(cli, || t.to_string(), || json!({"type": t.to_string(), "pc": pc.to_string()}));
    Ok(0)
}

const VALUE_SYNTAX: ParseOptions = ParseOptions { allow_etav: true, allow_brackets: false, allow_holes: false };

fn run_program(cli: &Cli, file: &Path, inputs: &[String]) -> Result<u8, Failure> {
    let (prog, lat, pc) = load(cli, file)?;
    let mut bindings: BTreeMap<String, Expr> = BTreeMap::new();
    for i in inputs {
        let (name, text) =
            i.split_once('=').ok_or_else(|| Failure::Parse(format!("--input {i}: expected NAME=VALUE")))?;
        let v = parse_with(text, VALUE_SYNTAX).map_err(|e| Failure::Parse(format!("--input {name}: {e}")))?;
        bindings.insert(name.trim().to_string(), v);
    }
    let checker = Checker::new(&lat);
    if !cli.unsafe_ {
        checker.infer(&Ctx::new(), &pc, &prog.expr).map_err(|e| type_failure(file, &e))?;
    }
    let mut e = prog.expr.clone();
    loop {
        let (var, ty, body) = match &e.kind {
            ExprKind::Lam { var, ty, body, .. } if bindings.contains_key(var) => (var.clone(), ty.clone(), (**body).clone()),
            _ => break,
        };
        let v = bindings.remove(&var).unwrap();
        if !cli.unsafe_ {
            checker
                .check(&Ctx::new(), &flow_bottom(), &v, &ty)
                .map_err(|err| Failure::Type(format!("--input {var}: {err}")))?;
        }
        e = subst(&body, &var, &v);
    }
    for (x, v) in &bindings {
        e = subst(&e, x, v);
    }
    let ty = checker.infer(&Ctx::new(), &pc, &e);
    if let (Err(err), false) = (&ty, cli.unsafe_) {
        return Err(Failure::Type(format!("after inputs: {err}")));
    }
    let out = eval(&lat, &e, cli.fuel).map_err(eval_failure)?;
    let text = || {
        let mut s = format!("value: {}\nsteps: {}", out.value, out.trace.len());
        for ev in &out.trace {
            s.push_str(&format!("\n  {ev}"));
        }
        s
    };
    let value = || {
        json!({
            "value": out.value.to_string(),
            "type": ty.as_ref().ok().map(|t| t.to_string()),
            "steps": out.trace.len(),
            "trace": out.trace,
        })
    };
    emit(cli, text, value);
    Ok(0)
}

fn harness_failure(file: &Path, e: HarnessError) -> Failure {
    match e {
        HarnessError::Type(t) => type_failure(file, &t),
        HarnessError::Desugar(DesugarError::Type(t)) => type_failure(file, &t),
        HarnessError::Eval { which, err } => match eval_failure(err) {
            Failure::Fuel(m) => Failure::Fuel(format!("{which}: {m}")),
            other => Failure::Type(format!("{which}: {}", other.message())),
        },
        other => Failure::Skip(other.to_string()),
    }
}

fn typed_values(g: &mut Gen, lat: &Lattice, t: &nmifc::syntax::Type, n: usize, unchecked: bool) -> Vec<Expr> {
    let checker = Checker::new(lat);
    let mut out: Vec<Expr> = Vec::new();
    for _ in 0..n * 8 {
        if out.len() == n {
            break;
        }
        let v = g.value(t);
        if !out.contains(&v) && (unchecked || checker.check(&Ctx::new(), &flow_bottom(), &v, t).is_ok()) {
            out.push(v);
        }
    }
    out
}

/// Seeded pools: values of the input types, or typed fillers for each hole.
fn generated_pools(exp: &Experiment, lat: &Lattice, seed: u64, n: usize, unchecked: bool) -> Pools {
    let mut g = Gen::new(lat, seed);
    let secrets = typed_values(&mut g, lat, &exp.tx, n, unchecked);
    let attacks = match (&exp.desugared, &exp.y) {
        (Some(d), _) => {
            let checker = Checker::new(lat);
            let mut out: Vec<Vec<Expr>> = Vec::new();
            for _ in 0..n * 8 {
                if out.len() == n {
                    break;
                }
                let mut fill = Vec::new();
                for site in &d.sites {
                    let ctx = site.scope.iter().fold(Ctx::new(), |c, (x, t)| c.with_var(x, t.clone()));
                    let e = g
                        .expr(&ctx, &site.pc, &site.ty, 4)
                        .filter(|e| checker.check(&ctx, &site.pc, e, &site.ty).is_ok());
                    match e {
                        Some(e) => fill.push(e),
                        None => break,
                    }
                }
                if fill.len() == d.sites.len() && !out.contains(&fill) {
                    out.push(fill);
                }
            }
            out
        }
        (None, Some((_, t))) => typed_values(&mut g, lat, t, n, unchecked).into_iter().map(|v| vec![v]).collect(),
        (None, None) => Vec::new(),
    };
    Pools { secrets, attacks }
}

fn verify(
    cli: &Cli,
    file: &Path,
    condition: &str,
    attacker: &[String],
    pools: Option<&Path>,
    high: Option<&str>,
    pool_size: usize,
) -> Result<u8, Failure> {
    let condition: Condition = condition.parse().map_err(Failure::Parse)?;
    let (prog, lat, _) = load(cli, file)?;
    let opts = Options { fuel: cli.fuel, unchecked: cli.unsafe_, index_cap: None };
    let exp = Experiment::new(&lat, &prog.expr, opts).map_err(|e| harness_failure(file, e))?;
    let pools = match pools {
        Some(p) => Pools::load(p).map_err(|e| Failure::Parse(e.to_string()))?,
        None => generated_pools(&exp, &lat, cli.seed, pool_size, cli.unsafe_),
    };
    let attacker = if attacker.is_empty() {
        None
    } else {
        Some(Attacker::new(attacker.iter().map(|s| s.trim().to_string())).ok_or_else(|| {
            Failure::Parse("--attacker needs at least one atom".into())
        })?)
    };
    let need_attacker = || attacker.clone().ok_or_else(|| Failure::Parse(format!("{condition} needs --attacker")));
    let high_set = |default: fn(&Attacker) -> HighSet| -> Result<HighSet, Failure> {
        match (high, &attacker) {
            (Some(h), _) => parse_high_set(h).map_err(|e| Failure::Parse(format!("--high: {e}"))),
            (None, Some(a)) => Ok(default(a)),
            (None, None) => Err(Failure::Parse(format!("{condition} needs --high or --attacker"))),
        }
    };
    let report: Report = match condition {
        Condition::Rd => check_robust_declassification(&exp, &need_attacker()?, &pools),
        Condition::Te => check_transparent_endorsement(&exp, &need_attacker()?, &pools),
        Condition::Nmif => check_nmif(&exp, &need_attacker()?, &pools),
        Condition::Ni1 => check_noninterference(&exp, NiVariant::ModuloDowngrade, &high_set(Attacker::secret)?, &pools),
        Condition::Ni2 => check_noninterference(&exp, NiVariant::HighPc, &high_set(Attacker::secret)?, &pools),
        Condition::Ni3 => check_noninterference(&exp, NiVariant::SecretUntrusted, &high_set(Attacker::both)?, &pools),
    }
    .map_err(|e| harness_failure(file, e))?;
    emit(cli, || report.to_string(), || serde_json::to_value(&report).unwrap());
    Ok(report.exit_code() as u8)
}

fn desugar(cli: &Cli, file: &Path) -> Result<u8, Failure> {
    let (prog, lat, _) = load(cli, file)?;
    let d = desugar_program(&lat, &prog.expr).map_err(|e| match e {
        DesugarError::Type(t) => type_failure(file, &t),
        other => Failure::Skip(other.to_string()),
    })?;
    let text = || format!("{}\n-- y : {}", d.program, d.y_type);
    let value = || {
        let sites: Vec<Value> = d
            .sites
            .iter()
            .map(|s| {
                json!({
                    "index": s.index,
                    "pc": s.pc.to_string(),
                    "type": s.ty.to_string(),
                    "scope": s.scope.iter().map(|(x, t)| json!({"name": x, "type": t.to_string()})).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({"program": d.program.to_string(), "yType": d.y_type.to_string(), "sites": sites})
    };
    emit(cli, text, value);
    Ok(0)
}
