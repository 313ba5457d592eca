//! Pacing inference and access-kind rules.
//!
//! An unannotated stream is paced by the conjunction of the pacings of its
//! synchronous and offset accesses, computed as a fixpoint so that forward
//! references and offset cycles resolve. Hold and window accesses impose no
//! pacing.

use std::collections::BTreeSet;

use crate::lang::ast::{PacingAnnotation, SpecificationAst};
use crate::time::Timestamp;

use super::ir::{PacingType, StreamId};
use super::names::{accesses, decl_label, decls, parts, Access, Decl, Names, Part};
use super::{AnalysisError, AnalysisErrorKind};

pub(crate) struct Pacings {
    /// Per stream; inputs are `EventBased({self})`.
    pub streams: Vec<PacingType>,
    pub triggers: Vec<(PacingType, Option<StreamId>)>,
    /// Inputs read synchronously by each output's spawn and close condition.
    pub spawn_inputs: Vec<BTreeSet<StreamId>>,
    pub close_inputs: Vec<BTreeSet<StreamId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Inf {
    Unknown,
    Any,
    Event(BTreeSet<StreamId>),
    Periodic(u64),
    Conflict,
}

fn join(a: &Inf, b: &Inf) -> Inf {
    match (a, b) {
        (Inf::Conflict, _) | (_, Inf::Conflict) => Inf::Conflict,
        (Inf::Unknown, x) | (x, Inf::Unknown) => x.clone(),
        (Inf::Any, Inf::Any) => Inf::Any,
        (Inf::Any, Inf::Event(s)) | (Inf::Event(s), Inf::Any) => Inf::Event(s.clone()),
        (Inf::Event(s), Inf::Event(t)) => Inf::Event(s.union(t).copied().collect()),
        (Inf::Periodic(p), Inf::Periodic(q)) if p == q => Inf::Periodic(*p),
        _ => Inf::Conflict,
    }
}

fn from_type(p: &PacingType) -> Inf {
    match p {
        PacingType::EventBased(s) => Inf::Event(s.clone()),
        PacingType::Periodic(p) => Inf::Periodic(*p),
        PacingType::AnyEvent => Inf::Any,
    }
}

fn describe(inf: &Inf, ast: &SpecificationAst) -> String {
    match inf {
        Inf::Event(s) => {
            let names: Vec<&str> = s.iter().map(|&i| ast.inputs[i].name.as_str()).collect();
            format!("event-based on {}", names.join(" & "))
        }
        Inf::Periodic(p) => format!("periodic every {}s", Timestamp(*p)),
        Inf::Any => "any event (@true)".to_string(),
        Inf::Unknown | Inf::Conflict => "unknown".to_string(),
    }
}

pub(crate) fn annotation(p: &PacingAnnotation) -> Result<PacingType, String> {
    match p {
        PacingAnnotation::AnyEvent => Ok(PacingType::AnyEvent),
        PacingAnnotation::Period(d) => match d.nanos().and_then(|n| u64::try_from(n).ok()) {
            Some(n) if n > 0 => Ok(PacingType::Periodic(n)),
            _ => Err(format!("period {d} must be positive and a whole number of nanoseconds")),
        },
        PacingAnnotation::Frequency(f) => {
            let num = 10u128.checked_pow(f.scale).and_then(|s| s.checked_mul(1_000_000_000));
            match num {
                Some(num) if f.mantissa > 0 && num % f.mantissa == 0 => u64::try_from(num / f.mantissa)
                    .map(PacingType::Periodic)
                    .map_err(|_| format!("frequency {f}Hz is too low")),
                _ if f.mantissa == 0 => Err("frequency must be positive".to_string()),
                _ => Err(format!("period of {f}Hz is not a whole number of nanoseconds")),
            }
        }
    }
}

struct Ctx<'a> {
    ast: &'a SpecificationAst,
    names: &'a Names,
    errors: Vec<Option<AnalysisError>>,
}

impl Ctx<'_> {
    fn slot(&self, decl: Decl) -> usize {
        match decl {
            Decl::Output(i) => i,
            Decl::Trigger(i) => self.ast.outputs.len() + i,
        }
    }

    fn fail(&mut self, decl: Decl, kind: AnalysisErrorKind, msg: String) {
        let slot = self.slot(decl);
        if self.errors[slot].is_none() {
            let (label, pos) = decl_label(self.ast, decl);
            self.errors[slot] = Some(AnalysisError::new(kind, &label, pos, msg));
        }
    }

    fn failed(&self, decl: Decl) -> bool {
        self.errors[self.slot(decl)].is_some()
    }

    fn name(&self, id: StreamId) -> &str {
        let n = self.names.num_inputs;
        if id < n {
            &self.ast.inputs[id].name
        } else {
            &self.ast.outputs[id - n].name
        }
    }

    fn node(&self, decl: Decl) -> Option<StreamId> {
        match decl {
            Decl::Output(i) => Some(self.names.num_inputs + i),
            Decl::Trigger(_) => None,
        }
    }

    /// Synchronous and offset accesses that determine pacing.
    fn sync_targets(&self, decl: Decl) -> Vec<StreamId> {
        let me = self.node(decl);
        let mut out = Vec::new();
        for (part, e) in parts(self.ast, decl) {
            if matches!(part, Part::Spawn | Part::Close) {
                continue;
            }
            for (t, k) in accesses(self.names, e) {
                if k.is_synchronous() && Some(t) != me && !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }
}

pub(crate) fn infer(ast: &SpecificationAst, names: &Names) -> Result<Pacings, Vec<AnalysisError>> {
    let n_in = names.num_inputs;
    let n_out = ast.outputs.len();
    let mut cx = Ctx { ast, names, errors: vec![None; n_out + ast.triggers.len()] };
    let lifecycle: Vec<bool> = ast.outputs.iter().map(|o| o.spawn.is_some() || o.close.is_some()).collect();
    let conditional: Vec<bool> = ast.outputs.iter().zip(&lifecycle).map(|(o, &l)| l || o.filter.is_some()).collect();
    let is_lifecycle = |id: StreamId| id >= n_in && lifecycle[id - n_in];
    let is_conditional = |id: StreamId| id >= n_in && conditional[id - n_in];

    // annotations
    let mut annotated: Vec<Option<PacingType>> = vec![None; n_out + ast.triggers.len()];
    for decl in decls(ast) {
        let ann = match decl {
            Decl::Output(i) => ast.outputs[i].pacing.as_ref(),
            Decl::Trigger(i) => ast.triggers[i].pacing.as_ref(),
        };
        if let Some(a) = ann {
            match annotation(a) {
                Ok(p) => annotated[cx.slot(decl)] = Some(p),
                Err(msg) => cx.fail(decl, AnalysisErrorKind::PacingMismatch, msg),
            }
        }
    }

    // access rules
    let mut gates: Vec<Option<StreamId>> = vec![None; ast.triggers.len()];
    let mut spawn_inputs = vec![BTreeSet::new(); n_out];
    let mut close_inputs = vec![BTreeSet::new(); n_out];
    for decl in decls(ast) {
        let me = cx.node(decl);
        for (part, e) in parts(ast, decl) {
            for (t, k) in accesses(names, e) {
                let target = cx.name(t).to_string();
                match part {
                    Part::Spawn | Part::Close => {
                        let i = match decl {
                            Decl::Output(i) => i,
                            Decl::Trigger(_) => unreachable!("triggers have no lifecycle"),
                        };
                        match k {
                            Access::Hold => {}
                            Access::Sync | Access::Offset(_) if t < n_in => {
                                let set = if part == Part::Spawn { &mut spawn_inputs[i] } else { &mut close_inputs[i] };
                                set.insert(t);
                            }
                            _ => cx.fail(
                                decl,
                                AnalysisErrorKind::SpawnAccessViolation,
                                format!("spawn and close conditions may read inputs synchronously and other streams only via hold; `{target}` is accessed otherwise"),
                            ),
                        }
                    }
                    Part::Body | Part::Filter => {
                        if Some(t) == me {
                            continue;
                        }
                        let violation = match k {
                            Access::Sync if is_conditional(t) => match decl {
                                Decl::Trigger(ti) => match gates[ti] {
                                    None => {
                                        gates[ti] = Some(t);
                                        false
                                    }
                                    Some(g) => g != t,
                                },
                                Decl::Output(_) => true,
                            },
                            Access::Offset(_) => is_conditional(t),
                            Access::Window => is_lifecycle(t),
                            _ => false,
                        };
                        if violation {
                            cx.fail(
                                decl,
                                AnalysisErrorKind::SpawnAccessViolation,
                                format!("`{target}` may not exist in every cycle (spawn, close or eval when); access it with `{target}.hold(or: ..)`"),
                            );
                        }
                    }
                }
            }
        }
    }
    for (ti, gate) in gates.iter().enumerate() {
        let Some(g) = *gate else { continue };
        let decl = Decl::Trigger(ti);
        let periodic_gate = is_lifecycle(g) && matches!(annotated[g - n_in], Some(PacingType::Periodic(_)));
        if periodic_gate && cx.sync_targets(decl).iter().any(|&t| t != g) {
            let gname = cx.name(g).to_string();
            cx.fail(
                decl,
                AnalysisErrorKind::SpawnAccessViolation,
                format!("a trigger on the spawned periodic stream `{gname}` may access other streams only via hold"),
            );
        }
    }

    // fixpoint over unannotated outputs
    let mut current: Vec<Inf> = (0..n_in).map(|i| Inf::Event([i].into())).collect();
    current.extend((0..n_out).map(|i| annotated[i].as_ref().map_or(Inf::Unknown, from_type)));
    let targets: Vec<Vec<StreamId>> = decls(ast).map(|d| cx.sync_targets(d)).collect();
    loop {
        let mut changed = false;
        for i in 0..n_out {
            if annotated[i].is_some() {
                continue;
            }
            let mut acc = Inf::Unknown;
            for &t in &targets[i] {
                acc = join(&acc, &current[t]);
            }
            if acc != current[n_in + i] {
                current[n_in + i] = acc;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // final pacing, with diagnostics attributed to the access that conflicts
    let mut streams: Vec<PacingType> = (0..n_in).map(|i| PacingType::EventBased([i].into())).collect();
    let mut triggers = Vec::with_capacity(ast.triggers.len());
    for decl in decls(ast) {
        let slot = cx.slot(decl);
        let ts = &targets[slot];
        let gate = match decl {
            Decl::Trigger(ti) => gates[ti],
            Decl::Output(_) => None,
        };
        let pacing = match &annotated[slot] {
            Some(p) => {
                check_annotated(&mut cx, decl, p, ts, gate, &current, n_in, &lifecycle);
                p.clone()
            }
            None => {
                let mut acc = Inf::Unknown;
                let mut skipped = false;
                for &t in ts {
                    if current[t] == Inf::Conflict {
                        skipped = true;
                        continue;
                    }
                    let next = join(&acc, &current[t]);
                    if next == Inf::Conflict && !cx.failed(decl) {
                        let msg = format!(
                            "synchronous access to `{}` ({}) conflicts with the pacing {} of earlier accesses; use hold or aggregate to cross pacings",
                            cx.name(t),
                            describe(&current[t], ast),
                            describe(&acc, ast)
                        );
                        cx.fail(decl, AnalysisErrorKind::PacingMismatch, msg);
                    }
                    acc = next;
                }
                match acc {
                    Inf::Any => PacingType::AnyEvent,
                    Inf::Event(s) => PacingType::EventBased(s),
                    Inf::Periodic(p) => PacingType::Periodic(p),
                    Inf::Unknown => {
                        if !skipped {
                            cx.fail(
                                decl,
                                AnalysisErrorKind::PacingMismatch,
                                "no synchronous access determines when this is evaluated; annotate it, e.g. `@true` or `@1Hz`".to_string(),
                            );
                        }
                        PacingType::AnyEvent
                    }
                    Inf::Conflict => PacingType::AnyEvent,
                }
            }
        };
        match decl {
            Decl::Output(_) => streams.push(pacing),
            Decl::Trigger(_) => triggers.push((pacing, gate)),
        }
    }

    let errors: Vec<AnalysisError> = cx.errors.into_iter().flatten().collect();
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Pacings { streams, triggers, spawn_inputs, close_inputs })
}

#[allow(clippy::too_many_arguments)]
fn check_annotated(
    cx: &mut Ctx<'_>,
    decl: Decl,
    pacing: &PacingType,
    targets: &[StreamId],
    gate: Option<StreamId>,
    current: &[Inf],
    n_in: usize,
    lifecycle: &[bool],
) {
    let own_lifecycle = matches!(decl, Decl::Output(i) if lifecycle[i]);
    for &t in targets {
        if Some(t) == gate {
            continue;
        }
        let target = cx.name(t).to_string();
        let problem = match pacing {
            PacingType::Periodic(p) => {
                if own_lifecycle {
                    Some("a periodic stream with spawn or close has its own schedule and may access other streams only via hold or aggregate".to_string())
                } else if t < n_in {
                    Some(format!("periodic evaluation cannot read input `{target}` synchronously; use hold or aggregate"))
                } else if current[t] != Inf::Periodic(*p) {
                    Some(format!(
                        "`{target}` is {}, not periodic every {}s; use hold or aggregate",
                        describe(&current[t], cx.ast),
                        Timestamp(*p)
                    ))
                } else {
                    None
                }
            }
            PacingType::AnyEvent => {
                if t < n_in {
                    Some(format!("`@true` evaluation cannot read input `{target}` synchronously since it may be absent; use hold"))
                } else if current[t] != Inf::Any {
                    Some(format!("`{target}` is {}; a `@true` stream may read it only via hold", describe(&current[t], cx.ast)))
                } else {
                    None
                }
            }
            PacingType::EventBased(_) => None,
        };
        if let Some(msg) = problem {
            cx.fail(decl, AnalysisErrorKind::PacingMismatch, msg);
            return;
        }
    }
}
