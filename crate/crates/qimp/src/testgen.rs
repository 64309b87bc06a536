//! Seeded generators of QImp source programs.
//!
//! [`accepted_program`] builds programs that pass the ownership check, mixing
//! allocation, gates, helper calls, structs, arrays and nested `if`/`while`/`for`.
//! [`rejected_program`] builds the same kind of program with one ownership fault
//! injected on the straight-line path through `main`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::codes;

/// Live qubits at any point of a generated run.
pub const MAX_QUBITS: usize = 6;
/// Statements per program, helpers included.
pub const MAX_STMTS: usize = 30;
/// Nesting of `if`/`while`/`for` blocks.
const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fault {
    AlreadyBorrowed,
    AlreadyConsumed,
    NotOwned,
    NotConsumed,
    ConditionallyConsumed,
}

impl Fault {
    pub const ALL: [Fault; 5] =
        [Fault::AlreadyBorrowed, Fault::AlreadyConsumed, Fault::NotOwned, Fault::NotConsumed, Fault::ConditionallyConsumed];

    pub fn code(self) -> &'static str {
        match self {
            Fault::AlreadyBorrowed => codes::ALREADY_BORROWED,
            Fault::AlreadyConsumed => codes::ALREADY_CONSUMED,
            Fault::NotOwned => codes::NOT_OWNED,
            Fault::NotConsumed => codes::NOT_CONSUMED,
            Fault::ConditionallyConsumed => codes::CONDITIONAL_CONSUME,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProgram {
    pub source: String,
    pub fault: Option<Fault>,
    pub statements: usize,
    /// Deepest nesting of `if`/`while`/`for` in `main`.
    pub depth: usize,
}

/// Options for [`accepted_program_with`].
#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    /// Allow assertions that may fail at run time.
    pub failing_asserts: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { failing_asserts: true }
    }
}

pub fn accepted_program(seed: u64) -> GeneratedProgram {
    accepted_program_with(seed, GenOptions::default())
}

pub fn accepted_program_with(seed: u64, opts: GenOptions) -> GeneratedProgram {
    Gen::new(seed, opts, None).run()
}

/// A program with one injected fault, chosen by `seed`. Assertions always hold, so
/// the only way for a run to stop early is the fault itself.
pub fn rejected_program(seed: u64) -> GeneratedProgram {
    let fault = Fault::ALL[(seed % Fault::ALL.len() as u64) as usize];
    rejected_program_with(seed, fault)
}

pub fn rejected_program_with(seed: u64, fault: Fault) -> GeneratedProgram {
    Gen::new(seed, GenOptions { failing_asserts: false }, Some(fault)).run()
}

struct Helper {
    name: &'static str,
    source: &'static str,
    stmts: usize,
}

const STRUCT_DECL: &str = "class P:\n   q: qubit\n   qs: array[qubit, 2]\n   n: int\n";

const HELPERS: &[Helper] = &[
    Helper { name: "hb", source: "def hb(q: qubit, k: int):\n   h(q)\n   if k > 1:\n      z(q)\n   else:\n      rz(q, 0.25)\n", stmts: 4 },
    Helper { name: "h2", source: "def h2(a: qubit, b: qubit):\n   cx(a, b)\n   cz(b, a)\n", stmts: 2 },
    Helper { name: "hbb", source: "def hbb(q: qubit, b: bool):\n   if b:\n      x(q)\n", stmts: 2 },
    Helper { name: "ho", source: "def ho(q: qubit @owned) -> bool:\n   s(q)\n   return measure(q)\n", stmts: 2 },
    Helper { name: "hr", source: "def hr() -> qubit:\n   t = qubit()\n   h(t)\n   return t\n", stmts: 3 },
    Helper {
        name: "hs",
        source: "def hs(p: P):\n   cx(p.q, p.qs[0])\n   for e in p.qs:\n      x(e)\n   p.n = p.n + 1\n",
        stmts: 4,
    },
    Helper { name: "bad", source: "def bad(q: qubit):\n   discard(q)\n", stmts: 1 },
];

#[derive(Default, Clone)]
struct Level {
    /// Single qubits owned by this level.
    singles: Vec<String>,
    /// `array[qubit, 2]` variables owned by this level.
    arrays: Vec<String>,
    /// `P` variables owned by this level.
    structs: Vec<String>,
    /// Qubits usable here but owned elsewhere: loop variables, or a qubit consumed at the end of a branch.
    lent: Vec<String>,
    bools: Vec<String>,
    ints: Vec<String>,
    bool_arrays: Vec<String>,
}

impl Level {
    fn qubits(&self) -> usize {
        self.singles.len() + 2 * self.arrays.len() + 3 * self.structs.len()
    }

    fn has_owned(&self) -> bool {
        !(self.singles.is_empty() && self.arrays.is_empty() && self.structs.is_empty())
    }
}

struct Gen {
    rng: ChaCha8Rng,
    opts: GenOptions,
    lines: Vec<String>,
    levels: Vec<Level>,
    frozen: Vec<String>,
    helpers: BTreeSet<&'static str>,
    uses_struct: bool,
    stmts: usize,
    next: usize,
    max_depth: usize,
    fault: Option<Fault>,
    inject_at: usize,
    injected: bool,
    top: usize,
}

impl Gen {
    fn new(seed: u64, opts: GenOptions, fault: Option<Fault>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inject_at = rng.gen_range(0..6);
        Gen {
            rng,
            opts,
            lines: Vec::new(),
            levels: Vec::new(),
            frozen: Vec::new(),
            helpers: BTreeSet::new(),
            uses_struct: false,
            stmts: 0,
            next: 0,
            max_depth: 0,
            fault,
            inject_at,
            injected: false,
            top: 0,
        }
    }

    fn run(mut self) -> GeneratedProgram {
        self.levels.push(Level::default());
        let target = self.rng.gen_range(8..=22);
        while self.stmts < target.min(self.soft_limit()) {
            if self.fault.is_some() && !self.injected && self.top >= self.inject_at {
                self.inject();
            }
            self.stmt();
            self.top += 1;
        }
        if self.fault.is_some() && !self.injected {
            self.inject();
        }
        self.close_level();
        if self.lines.is_empty() {
            self.emit("x0 = 0".into());
        }

        let mut src = String::new();
        if self.uses_struct {
            src.push_str(STRUCT_DECL);
            src.push('\n');
        }
        for h in HELPERS.iter().filter(|h| self.helpers.contains(h.name)) {
            src.push_str(h.source);
            src.push('\n');
        }
        src.push_str("def main():\n");
        for l in &self.lines {
            src.push_str(l);
            src.push('\n');
        }
        GeneratedProgram { source: src, fault: self.fault, statements: self.stmts, depth: self.max_depth }
    }

    /// Leave room for closing every level: at most one consuming statement per live qubit.
    fn soft_limit(&self) -> usize {
        MAX_STMTS - MAX_QUBITS - 2
    }

    fn room(&self) -> usize {
        self.soft_limit().saturating_sub(self.stmts)
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn emit(&mut self, line: String) {
        let pad = "   ".repeat(self.levels.len());
        self.lines.push(format!("{pad}{line}"));
        self.stmts += 1;
    }

    fn use_helper(&mut self, name: &'static str) {
        if self.helpers.insert(name) {
            self.stmts += HELPERS.iter().find(|h| h.name == name).map_or(0, |h| h.stmts);
            if name == "hs" {
                self.uses_struct = true;
            }
        }
    }

    fn cur(&mut self) -> &mut Level {
        self.levels.last_mut().expect("level")
    }

    fn live(&self) -> usize {
        self.levels.iter().map(Level::qubits).sum()
    }

    fn is_frozen(&self, arr: &str) -> bool {
        self.frozen.iter().any(|f| f == arr)
    }

    /// Every qubit place that may be lent to a gate or a borrowing call right now.
    fn gate_places(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.levels {
            out.extend(l.singles.iter().cloned());
            out.extend(l.lent.iter().cloned());
            for a in l.arrays.iter().filter(|a| !self.is_frozen(a)) {
                out.push(format!("{a}[0]"));
                out.push(format!("{a}[1]"));
            }
            for s in &l.structs {
                out.push(format!("{s}.q"));
                let qs = format!("{s}.qs");
                if !self.is_frozen(&qs) {
                    out.push(format!("{qs}[0]"));
                    out.push(format!("{qs}[1]"));
                }
            }
        }
        out
    }

    fn iterable_arrays(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.levels {
            out.extend(l.arrays.iter().cloned());
            out.extend(l.structs.iter().map(|s| format!("{s}.qs")));
        }
        out.retain(|a| !self.is_frozen(a));
        out
    }

    fn whole_structs(&self) -> Vec<String> {
        self.levels
            .iter()
            .flat_map(|l| l.structs.iter().cloned())
            .filter(|s| !self.is_frozen(&format!("{s}.qs")))
            .collect()
    }

    fn bools(&self) -> Vec<String> {
        self.levels.iter().flat_map(|l| l.bools.iter().cloned()).collect()
    }

    fn ints(&self) -> Vec<String> {
        let mut out: Vec<String> = self.levels.iter().flat_map(|l| l.ints.iter().cloned()).collect();
        for l in &self.levels {
            out.extend(l.structs.iter().map(|s| format!("{s}.n")));
        }
        out
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn int_expr(&mut self) -> String {
        let ints = self.ints();
        match self.rng.gen_range(0..4) {
            0 | 1 if !ints.is_empty() => {
                let v = self.pick(&ints);
                match self.rng.gen_range(0..3) {
                    0 => v,
                    1 => format!("{v} + {}", self.rng.gen_range(1..3)),
                    _ => format!("{v} * 2"),
                }
            }
            _ => self.rng.gen_range(0..4).to_string(),
        }
    }

    fn bool_expr(&mut self) -> String {
        let bools = self.bools();
        let arrays: Vec<String> = self.levels.iter().flat_map(|l| l.bool_arrays.iter().cloned()).collect();
        match self.rng.gen_range(0..6) {
            0 if !bools.is_empty() => self.pick(&bools),
            1 if !bools.is_empty() => format!("not {}", self.pick(&bools)),
            2 if bools.len() >= 2 => {
                let a = self.pick(&bools);
                let b = self.pick(&bools);
                let op = ["and", "or", "==", "!="][self.rng.gen_range(0..4)];
                format!("{a} {op} {b}")
            }
            3 if !arrays.is_empty() => format!("{}[{}]", self.pick(&arrays), self.rng.gen_range(0..2)),
            4 => {
                let e = self.int_expr();
                let op = ["<", "<=", ">", ">=", "==", "!="][self.rng.gen_range(0..6)];
                format!("{e} {op} {}", self.rng.gen_range(0..4))
            }
            _ => if self.rng.gen_bool(0.5) { "True" } else { "False" }.to_string(),
        }
    }

    fn gate1(&mut self, q: &str) -> String {
        match self.rng.gen_range(0..7) {
            0 => format!("h({q})"),
            1 => format!("x({q})"),
            2 => format!("y({q})"),
            3 => format!("z({q})"),
            4 => format!("s({q})"),
            5 => format!("t({q})"),
            _ => format!("rz({q}, {:.2})", self.rng.gen_range(-3.0..3.0f64)),
        }
    }

    fn stmt(&mut self) {
        let depth = self.levels.len();
        let places = self.gate_places();
        let room = self.room();
        let live = self.live();
        let mut opts: Vec<(u32, u8)> = vec![(2, b'L')];
        if live < MAX_QUBITS - 1 {
            opts.push((4, b'A'));
        }
        if live + 2 < MAX_QUBITS {
            opts.push((2, b'B'));
        }
        if live + 3 < MAX_QUBITS && room >= 3 {
            opts.push((1, b'C'));
        }
        if !places.is_empty() {
            opts.push((6, b'D'));
            opts.push((3, b'F'));
        }
        if places.len() >= 2 {
            opts.push((4, b'E'));
        }
        if self.cur().has_owned() {
            opts.push((3, b'G'));
        }
        if depth <= MAX_DEPTH && room >= 5 {
            opts.push((3, b'H'));
            if live < MAX_QUBITS - 1 {
                opts.push((2, b'I'));
            }
            if !self.iterable_arrays().is_empty() {
                opts.push((3, b'J'));
            }
            if self.levels.iter().any(|l| !l.bool_arrays.is_empty()) {
                opts.push((1, b'K'));
            }
        }
        if !self.bools().is_empty() {
            opts.push((1, b'M'));
        }
        let total: u32 = opts.iter().map(|o| o.0).sum();
        let mut r = self.rng.gen_range(0..total);
        let choice = opts.iter().find(|o| {
            if r < o.0 {
                true
            } else {
                r -= o.0;
                false
            }
        });
        match choice.expect("weighted choice").1 {
            b'A' => {
                let q = self.fresh("q");
                if self.rng.gen_bool(0.25) {
                    self.use_helper("hr");
                    self.emit(format!("{q} = hr()"));
                } else {
                    self.emit(format!("{q} = qubit()"));
                }
                self.cur().singles.push(q);
            }
            b'B' => {
                let a = self.fresh("a");
                self.emit(format!("{a} = array(qubit(), qubit())"));
                self.cur().arrays.push(a);
            }
            b'C' => {
                let s = self.fresh("s");
                self.uses_struct = true;
                let n = self.int_expr();
                let mut fields = ["q=qubit()".to_string(), "qs=array(qubit(), qubit())".to_string(), format!("n={n}")];
                fields.shuffle(&mut self.rng);
                self.emit(format!("{s} = P({})", fields.join(", ")));
                self.cur().structs.push(s);
            }
            b'D' => {
                let q = self.pick(&places);
                let g = self.gate1(&q);
                self.emit(g);
            }
            b'E' => {
                let (a, b) = self.two(&places);
                let g = if self.rng.gen_bool(0.5) { "cx" } else { "cz" };
                self.emit(format!("{g}({a}, {b})"));
            }
            b'F' => self.helper_call(&places),
            b'G' => self.consume_one(),
            b'H' => self.gen_if(),
            b'I' => self.gen_while(),
            b'J' => {
                let arrs = self.iterable_arrays();
                let arr = self.pick(&arrs);
                let e = self.fresh("e");
                self.emit(format!("for {e} in {arr}:"));
                self.frozen.push(arr);
                self.nested(Level { lent: vec![e], ..Level::default() }, 3);
                self.frozen.pop();
            }
            b'K' => {
                let arrays: Vec<String> = self.levels.iter().flat_map(|l| l.bool_arrays.iter().cloned()).collect();
                let c = self.pick(&arrays);
                let v = self.fresh("v");
                self.emit(format!("for {v} in {c}:"));
                self.nested(Level { bools: vec![v], ..Level::default() }, 3);
            }
            b'M' => {
                let b = self.pick(&self.bools());
                let cond = if self.opts.failing_asserts && self.rng.gen_bool(0.3) {
                    b
                } else if self.rng.gen_bool(0.5) {
                    format!("{b} == {b}")
                } else {
                    format!("{b} or not {b}")
                };
                self.emit(format!("assert {cond}"));
            }
            _ => {
                let ints: Vec<String> = self.levels.iter().flat_map(|l| l.ints.iter().cloned()).collect();
                if !ints.is_empty() && self.rng.gen_bool(0.5) {
                    let k = self.pick(&ints);
                    let d = self.rng.gen_range(1..3);
                    self.emit(format!("{k} += {d}"));
                } else {
                    let k = self.fresh("k");
                    let e = self.int_expr();
                    self.emit(format!("{k} = {e}"));
                    self.cur().ints.push(k);
                }
            }
        }
    }

    fn two(&mut self, places: &[String]) -> (String, String) {
        let a = self.pick(places);
        let rest: Vec<String> = places.iter().filter(|p| **p != a).cloned().collect();
        let b = self.pick(&rest);
        (a, b)
    }

    fn helper_call(&mut self, places: &[String]) {
        let structs = self.whole_structs();
        match self.rng.gen_range(0..4) {
            0 if places.len() >= 2 => {
                let (a, b) = self.two(places);
                self.use_helper("h2");
                self.emit(format!("h2({a}, {b})"));
            }
            1 => {
                let q = self.pick(places);
                let b = self.bool_expr();
                self.use_helper("hbb");
                self.emit(format!("hbb({q}, {b})"));
            }
            2 if !structs.is_empty() => {
                let s = self.pick(&structs);
                self.use_helper("hs");
                self.emit(format!("hs({s})"));
            }
            _ => {
                let q = self.pick(places);
                let k = self.int_expr();
                self.use_helper("hb");
                self.emit(format!("hb({q}, {k})"));
            }
        }
    }

    fn consume_single(&mut self, q: &str) {
        match self.rng.gen_range(0..3) {
            0 => self.emit(format!("discard({q})")),
            1 => {
                let b = self.fresh("b");
                self.use_helper("ho");
                self.emit(format!("{b} = ho({q})"));
                self.cur().bools.push(b);
            }
            _ => {
                let b = self.fresh("b");
                self.emit(format!("{b} = measure({q})"));
                self.cur().bools.push(b);
            }
        }
    }

    fn consume_array(&mut self, a: &str) {
        if self.rng.gen_bool(0.5) {
            self.emit(format!("discard_array({a})"));
        } else {
            let c = self.fresh("c");
            self.emit(format!("{c} = measure_array({a})"));
            self.cur().bool_arrays.push(c);
        }
    }

    fn consume_one(&mut self) {
        let l = self.cur().clone();
        let n = l.singles.len() + l.arrays.len() + l.structs.len();
        let i = self.rng.gen_range(0..n);
        if i < l.singles.len() {
            let q = self.cur().singles.remove(i);
            self.consume_single(&q);
        } else if i < l.singles.len() + l.arrays.len() {
            let a = self.cur().arrays.remove(i - l.singles.len());
            self.consume_array(&a);
        } else {
            let s = self.cur().structs.remove(i - l.singles.len() - l.arrays.len());
            if self.rng.gen_bool(0.5) {
                self.consume_single(&format!("{s}.q"));
                self.consume_array(&format!("{s}.qs"));
            } else {
                self.consume_array(&format!("{s}.qs"));
                self.consume_single(&format!("{s}.q"));
            }
        }
    }

    /// Consume everything the current level still owns.
    fn close_level(&mut self) {
        while self.cur().has_owned() {
            let l = self.cur().clone();
            if !l.singles.is_empty() {
                let q = self.cur().singles.remove(0);
                self.consume_single(&q);
            } else if !l.arrays.is_empty() {
                let a = self.cur().arrays.remove(0);
                self.consume_array(&a);
            } else {
                let s = self.cur().structs.remove(0);
                self.consume_single(&format!("{s}.q"));
                self.consume_array(&format!("{s}.qs"));
            }
        }
    }

    /// Generate a non-empty nested block of at most `max` statements in `level`.
    fn nested(&mut self, level: Level, max: usize) {
        self.levels.push(level);
        self.max_depth = self.max_depth.max(self.levels.len() - 1);
        let n = self.rng.gen_range(1..=max);
        for _ in 0..n {
            if self.room() == 0 {
                break;
            }
            self.stmt();
        }
        self.close_level();
        if self.lines.last().is_some_and(|l| l.ends_with(':')) {
            let k = self.fresh("k");
            self.emit(format!("{k} = 0"));
        }
        self.levels.pop();
    }

    fn nested_then(&mut self, level: Level, max: usize, finish: impl FnOnce(&mut Self)) {
        self.levels.push(level);
        self.max_depth = self.max_depth.max(self.levels.len() - 1);
        let n = self.rng.gen_range(0..=max);
        for _ in 0..n {
            if self.room() == 0 {
                break;
            }
            self.stmt();
        }
        self.close_level();
        finish(self);
        self.levels.pop();
    }

    fn gen_if(&mut self) {
        let cond = self.bool_expr();
        self.emit(format!("if {cond}:"));
        let singles = self.cur().singles.clone();
        let shared = if !singles.is_empty() && self.rng.gen_bool(0.35) {
            let q = self.pick(&singles);
            self.cur().singles.retain(|s| *s != q);
            Some(q)
        } else {
            None
        };
        let level = || Level { lent: shared.iter().cloned().collect(), ..Level::default() };
        match &shared {
            Some(q) => {
                let q = q.clone();
                self.nested_then(level(), 2, |g| {
                    let b = g.fresh("b");
                    g.emit(format!("{b} = measure({q})"));
                });
                self.emit("else:".into());
                self.stmts -= 1;
                self.nested_then(level(), 2, |g| g.emit(format!("discard({q})")));
            }
            None => {
                self.nested(level(), 3);
                if self.rng.gen_bool(0.5) && self.room() >= 2 {
                    self.emit("else:".into());
                    self.stmts -= 1;
                    self.nested(level(), 2);
                }
            }
        }
    }

    fn gen_while(&mut self) {
        let i = self.fresh("i");
        self.emit(format!("{i} = 0"));
        let bound = self.rng.gen_range(1..=3);
        let extra = {
            let bools = self.bools();
            if !bools.is_empty() && self.rng.gen_bool(0.3) {
                format!(" and {}", self.pick(&bools))
            } else {
                String::new()
            }
        };
        self.emit(format!("while {i} < {bound}{extra}:"));
        let inc = format!("{i} += 1");
        self.nested_then(Level::default(), 3, |g| g.emit(inc));
        self.cur().ints.push(i);
    }

    fn inject(&mut self) {
        let Some(fault) = self.fault else { return };
        self.injected = true;
        if self.cur().singles.is_empty() {
            let q = self.fresh("q");
            self.emit(format!("{q} = qubit()"));
            self.cur().singles.push(q);
        }
        let singles = self.cur().singles.clone();
        let q = self.pick(&singles);
        match fault {
            Fault::AlreadyBorrowed => {
                let arrays = self.cur().arrays.clone();
                match self.rng.gen_range(0..4) {
                    0 => {
                        self.use_helper("h2");
                        self.emit(format!("h2({q}, {q})"));
                    }
                    1 => {
                        self.use_helper("hbb");
                        self.emit(format!("hbb({q}, measure({q}))"));
                    }
                    2 if !arrays.is_empty() => {
                        let a = self.pick(&arrays);
                        let e = self.fresh("e");
                        self.emit(format!("for {e} in {a}:"));
                        self.levels.push(Level::default());
                        self.emit(format!("cx({a}[0], {e})"));
                        self.levels.pop();
                    }
                    _ => self.emit(format!("cx({q}, {q})")),
                }
            }
            Fault::AlreadyConsumed => {
                if self.rng.gen_bool(0.5) {
                    self.emit(format!("discard({q})"));
                } else {
                    let b = self.fresh("b");
                    self.emit(format!("{b} = measure({q})"));
                }
                if self.rng.gen_bool(0.5) {
                    let g = self.gate1(&q);
                    self.emit(g);
                }
            }
            Fault::NotOwned => {
                self.use_helper("bad");
                self.emit(format!("bad({q})"));
            }
            Fault::NotConsumed => match self.rng.gen_range(0..5) {
                0 => {
                    let t = self.fresh("t");
                    self.emit(format!("{t} = qubit()"));
                }
                1 => self.emit("h(qubit())".into()),
                2 => {
                    self.use_helper("hr");
                    self.emit("hr()".into());
                }
                3 => self.emit(format!("{q} = qubit()")),
                _ => self.cur().singles.retain(|s| *s != q),
            },
            Fault::ConditionallyConsumed => {
                let c = self.bool_expr();
                self.emit(format!("if {c}:"));
                self.levels.push(Level::default());
                self.emit(format!("discard({q})"));
                self.levels.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::lowering::{lower_program, verify_module};
    use crate::ownership::check_program;
    use crate::sim::{run_imperative, run_ir, RuntimeErrorKind};
    use crate::types::{resolve_types, TypedProgram};

    fn typed(g: &GeneratedProgram) -> TypedProgram {
        let p = parse_source("gen.qimp", &g.source).unwrap_or_else(|e| panic!("{e:?}\n{}", g.source));
        resolve_types(&p).unwrap_or_else(|e| panic!("{e:?}\n{}", g.source))
    }

    #[test]
    fn accepted_programs_check_clean() {
        for seed in 0..300 {
            let g = accepted_program(seed);
            let t = typed(&g);
            let d = check_program(&t);
            assert!(d.is_empty(), "seed {seed}: {d:?}\n{}", g.source);
            assert!(g.statements <= MAX_STMTS, "seed {seed}: {} statements", g.statements);
            let m = lower_program(&t).unwrap();
            assert!(verify_module(&m).is_empty(), "seed {seed}");
            let a = run_imperative(&t, "main", seed, 3).unwrap();
            assert!(a.error.as_ref().is_none_or(|e| !e.kind.is_ownership()), "seed {seed}: {:?}\n{}", a.error, g.source);
            let b = run_ir(&m, "main", seed, 3).unwrap();
            assert_eq!(a.first_divergence(&b), None, "seed {seed}\n{}", g.source);
        }
    }

    #[test]
    fn rejected_programs_carry_their_code() {
        for seed in 0..300 {
            let g = rejected_program(seed);
            let t = typed(&g);
            let codes: Vec<&str> = check_program(&t).iter().map(|d| d.code).collect();
            let want = g.fault.unwrap().code();
            assert!(codes.contains(&want), "seed {seed}: want {want}, got {codes:?}\n{}", g.source);
        }
    }

    #[test]
    fn generator_covers_the_grammar() {
        let all: String = (0..200).map(|s| accepted_program(s).source).collect();
        for needle in ["while ", "for ", "if ", "else:", "class P", "hs(", "measure_array", "assert ", "+= "] {
            assert!(all.contains(needle), "{needle}");
        }
        assert!((0..200).any(|s| accepted_program(s).depth >= 2));
    }

    #[test]
    fn dynamic_faults_surface_at_run_time() {
        let expect = [
            (Fault::AlreadyBorrowed, RuntimeErrorKind::DoubleBorrowAlias),
            (Fault::AlreadyConsumed, RuntimeErrorKind::UseAfterFree),
            (Fault::NotConsumed, RuntimeErrorKind::LeakAtScopeExit),
        ];
        for (fault, kind) in expect {
            let mut hits = 0;
            for seed in 0..60 {
                let g = rejected_program_with(seed, fault);
                let t = typed(&g);
                let tr = run_imperative(&t, "main", seed, 1).unwrap();
                if tr.error.as_ref().map(|e| e.kind) == Some(kind) {
                    hits += 1;
                }
            }
            assert!(hits > 0, "{fault:?} never raised {kind:?}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for seed in [0, 7, 99] {
            assert_eq!(accepted_program(seed).source, accepted_program(seed).source);
            assert_eq!(rejected_program(seed).source, rejected_program(seed).source);
        }
    }
}
