//! Random specifications that parse and pass analysis, written with varied
//! surface syntax: Unicode connectives, type aliases, both body forms, both
//! window default forms, comments and irregular whitespace.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    UInt,
    Byte,
    Float,
    Bool,
}

impl Ty {
    fn numeric(self) -> bool {
        !matches!(self, Ty::Bool)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Pace {
    /// Event-based on inputs and on other plain event-based outputs.
    Event,
    Periodic(u64),
    Any,
}

#[derive(Clone, Debug)]
struct Stream {
    name: String,
    ty: Ty,
    pace: Pace,
    /// Filtered or spawned: readable only through hold and windows.
    conditional: bool,
    /// Spawned streams admit no windows.
    spawned: bool,
    input: bool,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    streams: Vec<Stream>,
    constants: Vec<(String, Ty)>,
}

const PERIODS_MS: [u64; 4] = [100, 200, 500, 1000];

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn ty_name(&mut self, ty: Ty) -> &'static str {
        let alias = self.chance(0.3);
        match ty {
            Ty::Int if alias => "Int",
            Ty::Int => "Int64",
            Ty::UInt => "UInt64",
            Ty::Byte => "UInt8",
            Ty::Float if alias => "Float",
            Ty::Float => "Float64",
            Ty::Bool => "Bool",
        }
    }

    fn pacing(&mut self, pace: Pace) -> String {
        match pace {
            Pace::Event => String::new(),
            Pace::Any => "@true".into(),
            Pace::Periodic(ms) => {
                let forms = [format!("@{ms}ms"), format!("@{}Hz", hz(ms)), seconds(ms).map(|s| format!("@{s}s")).unwrap_or(format!("@{ms}ms"))];
                forms.choose(self.rng).unwrap().clone()
            }
        }
    }

    fn literal(&mut self, ty: Ty) -> String {
        match ty {
            Ty::Bool => if self.chance(0.5) { "true" } else { "false" }.into(),
            Ty::Float => {
                let choices = ["0.0", "1.5", "-3.25", "2500.0", "1e-7", "12.125", "0.001"];
                choices.choose(self.rng).unwrap().to_string()
            }
            Ty::Int => self.rng.gen_range(-50i64..500).to_string(),
            Ty::UInt | Ty::Byte => self.rng.gen_range(0u32..200).to_string(),
        }
    }

    fn connective(&mut self, and: bool) -> &'static str {
        match (and, self.chance(0.3)) {
            (true, true) => "∧",
            (true, false) => "and",
            (false, true) => "∨",
            (false, false) => "or",
        }
    }

    fn negation(&mut self) -> &'static str {
        if self.chance(0.3) {
            "¬"
        } else {
            "not "
        }
    }

    /// Whether `s` can be read synchronously from a stream paced `pace`.
    fn sync_ok(s: &Stream, pace: Pace) -> bool {
        if s.conditional {
            return false;
        }
        match pace {
            Pace::Event => s.pace == Pace::Event,
            Pace::Periodic(p) => !s.input && s.pace == Pace::Periodic(p),
            Pace::Any => false,
        }
    }

    /// An access to `s` converted to `want`.
    fn convert(&mut self, access: String, from: Ty, want: Ty) -> String {
        match (from, want) {
            (a, b) if a == b => access,
            (Ty::Bool, _) => format!("if {access} then {} else {}", self.literal(want), self.literal(want)),
            (_, Ty::Bool) => {
                let op = ["<", "<=", ">", ">=", "==", "!="].choose(self.rng).unwrap();
                format!("cast<Float64>({access}) {op} {}", self.literal(Ty::Float))
            }
            (_, Ty::Float) => format!("cast<Float64>({access})"),
            _ => format!("cast<Int64>({access})"),
        }
    }

    fn access(&mut self, want: Ty, pace: Pace, this: Option<(&str, Ty)>) -> String {
        let mut options: Vec<usize> = (0..self.streams.len()).collect();
        options.shuffle(self.rng);
        let roll = self.rng.gen_range(0..10);
        if roll == 0 {
            if let Some((name, ty)) = this {
                let n = self.rng.gen_range(1..4);
                let access = format!("{name}.offset(by: -{n}, or: {})", self.literal(ty));
                return self.convert(access, ty, want);
            }
        }
        let Some(&i) = options.first() else {
            return self.literal(want);
        };
        let s = self.streams[i].clone();
        let sync = Self::sync_ok(&s, pace);
        let access = if sync && roll < 5 {
            s.name.clone()
        } else if sync && roll == 5 {
            format!("{}.offset(by: -{}, or: {})", s.name, self.rng.gen_range(1..3), self.literal(s.ty))
        } else if roll >= 8 && pace != Pace::Event && s.ty.numeric() && !s.spawned {
            let dur = ["500ms", "1s", "2.5s", "1min"].choose(self.rng).unwrap().to_string();
            let (f, ty) = *[("sum", None), ("count", Some(Ty::UInt)), ("avg", Some(Ty::Float)), ("min", None), ("max", None)]
                .choose(self.rng)
                .unwrap();
            let result = ty.unwrap_or(s.ty);
            let needs_default = matches!(f, "avg" | "min" | "max");
            let text = match (needs_default, self.chance(0.5)) {
                (true, true) => format!("{}.aggregate(over: {dur}, using: {f}, or: {})", s.name, self.literal(result)),
                (true, false) => format!("{}.aggregate(over: {dur}, using: {f}).defaults(to: {})", s.name, self.literal(result)),
                (false, _) => format!("{}.aggregate(over: {dur}, using: {f})", s.name),
            };
            return self.convert(text, result, want);
        } else {
            format!("{}.hold(or: {})", s.name, self.literal(s.ty))
        };
        self.convert(access, s.ty, want)
    }

    fn expr(&mut self, want: Ty, pace: Pace, depth: u32, this: Option<(&str, Ty)>) -> String {
        if depth == 0 || self.chance(0.25) {
            if self.chance(0.2) {
                let fitting: Vec<String> = self.constants.iter().filter(|(_, t)| *t == want).map(|(n, _)| n.clone()).collect();
                if let Some(c) = fitting.choose(self.rng) {
                    return c.clone();
                }
                return self.literal(want);
            }
            return self.access(want, pace, this);
        }
        let d = depth - 1;
        match want {
            Ty::Bool => match self.rng.gen_range(0..6) {
                0 | 1 => {
                    let and = self.chance(0.5);
                    let c = self.connective(and);
                    format!("{} {c} {}", op(self.expr(Ty::Bool, pace, d, this)), op(self.expr(Ty::Bool, pace, d, this)))
                }
                2 => format!("{}({})", self.negation(), self.expr(Ty::Bool, pace, d, this)),
                3 => format!("({} != {})", op(self.expr(Ty::Bool, pace, d, this)), op(self.expr(Ty::Bool, pace, d, this))),
                _ => {
                    let ty = if self.chance(0.5) { Ty::Int } else { Ty::Float };
                    let cmp = ["<", "<=", ">", ">=", "==", "=", "!="].choose(self.rng).unwrap();
                    let (a, b) = (op(self.expr(ty, pace, d, this)), op(self.expr(ty, pace, d, this)));
                    format!("{a} {cmp} {b}")
                }
            },
            _ => match self.rng.gen_range(0..8) {
                0..=2 => {
                    let ops: &[&str] = if want == Ty::Int { &["+", "-", "*", "%"] } else { &["+", "-", "*", "/"] };
                    let sym = ops.choose(self.rng).unwrap();
                    let (a, b) = (op(self.expr(want, pace, d, this)), op(self.expr(want, pace, d, this)));
                    if self.chance(0.5) {
                        format!("({a} {sym} {b})")
                    } else {
                        format!("{a} {sym} {b}")
                    }
                }
                3 => format!("-({})", self.expr(want, pace, d, this)),
                4 => {
                    let f = if want == Ty::Float { ["abs", "sqrt"].choose(self.rng).unwrap() } else { &"abs" };
                    format!("{f}({})", self.expr(want, pace, d, this))
                }
                5 => {
                    let f = if want == Ty::Float { ["min", "max", "avg"].choose(self.rng).unwrap() } else { ["min", "max"].choose(self.rng).unwrap() };
                    let n = self.rng.gen_range(1..4);
                    let args: Vec<String> = (0..n).map(|_| self.expr(want, pace, d, this)).collect();
                    format!("{f}({})", args.join(", "))
                }
                6 => format!(
                    "if {} then {} else {}",
                    self.expr(Ty::Bool, pace, d, this),
                    self.expr(want, pace, d, this),
                    self.expr(want, pace, d, this)
                ),
                _ => {
                    let from = if want == Ty::Int { Ty::Float } else { Ty::Int };
                    let inner = self.expr(from, pace, d, this);
                    let name = self.ty_name(want);
                    format!("cast<{name}>({inner})")
                }
            },
        }
    }

    /// A synchronous anchor for an event-based body, so its pacing is inferable.
    fn anchor(&mut self, want: Ty) -> String {
        let candidates: Vec<Stream> = self.streams.iter().filter(|s| Self::sync_ok(s, Pace::Event)).cloned().collect();
        let s = candidates.choose(self.rng).unwrap().clone();
        self.convert(s.name.clone(), s.ty, want)
    }

    fn body(&mut self, want: Ty, pace: Pace, this: Option<(&str, Ty)>) -> String {
        let depth = self.rng.gen_range(1..4);
        let rest = self.expr(want, pace, depth, this);
        if pace != Pace::Event {
            return rest;
        }
        let anchor = self.anchor(want);
        match want {
            Ty::Bool => {
                let and = self.chance(0.5);
                format!("{} {} {}", op(anchor), self.connective(and), op(rest))
            }
            _ => format!("{} + {}", op(anchor), op(rest)),
        }
    }

    fn ws(&mut self) -> &'static str {
        [" ", " ", " ", "  ", "\t"].choose(self.rng).unwrap()
    }

    fn comment(&mut self, out: &mut String) {
        if self.chance(0.15) {
            let c = ["// note", "/// documented stream", "//", "// ∧ not code"].choose(self.rng).unwrap();
            out.push_str(c);
            out.push('\n');
        }
    }
}

/// Parenthesizes `e` unless it has no blank outside brackets.
fn op(e: String) -> String {
    let mut depth = 0i32;
    let mut in_string = false;
    for c in e.chars() {
        match c {
            '"' => in_string = !in_string,
            '(' if !in_string => depth += 1,
            ')' if !in_string => depth -= 1,
            ' ' | '\t' if depth <= 0 && !in_string => return format!("({e})"),
            _ => {}
        }
    }
    e
}

fn hz(ms: u64) -> String {
    match ms {
        100 => "10".into(),
        200 => "5".into(),
        500 => "2".into(),
        _ => "1".into(),
    }
}

fn seconds(ms: u64) -> Option<String> {
    match ms {
        500 => Some("0.5".into()),
        1000 => Some("1".into()),
        _ => None,
    }
}

const MESSAGES: [&str; 5] = ["limit exceeded", "quote \\\" inside", "tab\\tand\\nnewline", "ünïcode ∧ text", "back\\\\slash"];

pub fn random_spec(rng: &mut ChaCha8Rng) -> String {
    let mut g = Gen { rng, streams: Vec::new(), constants: Vec::new() };
    let mut out = String::new();
    for i in 0..g.rng.gen_range(0..3) {
        let ty = *[Ty::Int, Ty::Float, Ty::Bool, Ty::Byte].choose(g.rng).unwrap();
        let name = format!("C{i}");
        let (tn, lit) = (g.ty_name(ty), g.literal(ty));
        out.push_str(&format!("constant {name}: {tn} := {lit}\n"));
        g.constants.push((name, ty));
    }
    let inputs = g.rng.gen_range(1..5);
    let mut decls = Vec::new();
    for i in 0..inputs {
        let ty = *[Ty::Int, Ty::Int, Ty::Float, Ty::Float, Ty::Bool, Ty::UInt, Ty::Byte].choose(g.rng).unwrap();
        g.streams.push(Stream { name: format!("in_{i}"), ty, pace: Pace::Event, conditional: false, spawned: false, input: true });
        let tn = g.ty_name(ty);
        decls.push(format!("in_{i}: {tn}"));
    }
    if g.chance(0.5) {
        out.push_str(&format!("input {}\n", decls.join(", ")));
    } else {
        for d in decls {
            out.push_str(&format!("input {d}\n"));
        }
    }
    for i in 0..g.rng.gen_range(1..7) {
        g.comment(&mut out);
        let name = format!("out_{i}");
        let ty = *[Ty::Int, Ty::Float, Ty::Bool].choose(g.rng).unwrap();
        let pace = match g.rng.gen_range(0..6) {
            0..=2 => Pace::Event,
            3 => Pace::Any,
            _ => Pace::Periodic(*PERIODS_MS.choose(g.rng).unwrap()),
        };
        let annotation = if g.chance(0.5) { format!(": {}", g.ty_name(ty)) } else { String::new() };
        let pacing = g.pacing(pace);
        let bools: Vec<String> = g.streams.iter().filter(|s| s.input && s.ty == Ty::Bool).map(|s| s.name.clone()).collect();
        let this = Some((name.as_str(), ty));
        let (line, conditional, spawned) = match g.rng.gen_range(0..8) {
            // filtered, as in `eval when src == ROTOR_1 with abs(rpm)`
            0 if pace == Pace::Event => {
                let filter = g.anchor(Ty::Bool);
                let body = g.body(ty, pace, None);
                (format!("output {name}{annotation} eval when {filter} with {body}"), true, false)
            }
            // watchdog shape
            1 if !bools.is_empty() => {
                let ms = *PERIODS_MS.choose(g.rng).unwrap();
                let spawn = bools.choose(g.rng).unwrap().clone();
                let close = bools.choose(g.rng).unwrap().clone();
                let or = g.connective(false);
                // an own schedule admits hold and window accesses only
                let body = g.body(ty, Pace::Any, None);
                let p = g.pacing(Pace::Periodic(ms));
                (format!("output {name}{annotation}\n    spawn when {spawn}\n    close when {close} {or} {close}\n    eval {p} with {body}"), true, true)
            }
            _ => {
                let body = g.body(ty, pace, this);
                let sep = if pacing.is_empty() { String::new() } else { format!("{}{pacing}", g.ws()) };
                let form = if g.chance(0.25) { "eval with" } else { ":=" };
                (format!("output {name}{annotation}{sep}{}{form}{}{body}", g.ws(), g.ws()), false, false)
            }
        };
        out.push_str(&line);
        out.push('\n');
        g.streams.push(Stream { name, ty, pace, conditional, spawned, input: false });
    }
    for _ in 0..g.rng.gen_range(1..4) {
        g.comment(&mut out);
        let pace = if g.chance(0.7) { Pace::Event } else { Pace::Periodic(*PERIODS_MS.choose(g.rng).unwrap()) };
        let pacing = g.pacing(pace);
        let cond = g.body(Ty::Bool, pace, None);
        let message = if g.chance(0.7) { format!(" \"{}\"", MESSAGES.choose(g.rng).unwrap()) } else { String::new() };
        let pacing = if pacing.is_empty() { pacing } else { format!("{pacing} ") };
        out.push_str(&format!("trigger {pacing}{cond}{message}\n"));
    }
    out
}
