//! Reader and writer for a subset of HOA v1.
//!
//! Accepted header items: `HOA`, `name`, `tool`, `States`, `Start` (single
//! states only), `AP`, `acc-name: Buchi`, `Acceptance: 1 Inf(0)` and
//! `properties`. The body must use explicit edge labels built from `t`,
//! `f`, AP indices, `!`, `&`, `|` and parentheses, with acceptance marked
//! on states. Anything else is rejected with `UnsupportedFeature`.

use std::fmt::Write as _;

use super::{AutomataError, Letter, Nba, Transition};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Str(String),
    Int(usize),
    Word(String),
    Sym(char),
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>, AutomataError> {
    let err = |m: &str| AutomataError::SyntaxError {
        line: lineno,
        message: m.to_string(),
    };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    i += 1;
                }
                s.push(chars[i]);
                i += 1;
            }
            if i >= chars.len() {
                return Err(err("unterminated string"));
            }
            i += 1;
            out.push(Tok::Str(s));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Int(s.parse().map_err(|_| err("bad integer"))?));
        } else if c.is_ascii_alphabetic() || c == '_' || c == '-' || c == '@' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || "_-@:".contains(chars[i]))
            {
                i += 1;
                if chars[i - 1] == ':' {
                    break;
                }
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
        } else if "[]{}()!&|".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            // comments run to the closing marker on the same line
            match line[i..].find("*/") {
                Some(end) => i += end + 2,
                None => return Err(err("unterminated comment")),
            }
        } else {
            return Err(err(&format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Box<Label>, Box<Label>),
    Or(Box<Label>, Box<Label>),
}

impl Label {
    fn eval(&self, mask: usize) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => mask >> i & 1 == 1,
            Label::Not(a) => !a.eval(mask),
            Label::And(a, b) => a.eval(mask) && b.eval(mask),
            Label::Or(a, b) => a.eval(mask) || b.eval(mask),
        }
    }
}

struct LabelParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
    aps: usize,
}

impl LabelParser<'_> {
    fn err(&self, m: &str) -> AutomataError {
        AutomataError::SyntaxError {
            line: self.line,
            message: m.to_string(),
        }
    }

    fn or(&mut self) -> Result<Label, AutomataError> {
        let mut a = self.and()?;
        while self.toks.get(self.pos) == Some(&Tok::Sym('|')) {
            self.pos += 1;
            a = Label::Or(Box::new(a), Box::new(self.and()?));
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Label, AutomataError> {
        let mut a = self.not()?;
        while self.toks.get(self.pos) == Some(&Tok::Sym('&')) {
            self.pos += 1;
            a = Label::And(Box::new(a), Box::new(self.not()?));
        }
        Ok(a)
    }

    fn not(&mut self) -> Result<Label, AutomataError> {
        if self.toks.get(self.pos) == Some(&Tok::Sym('!')) {
            self.pos += 1;
            return Ok(Label::Not(Box::new(self.not()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Label, AutomataError> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        match t {
            Some(Tok::Word(w)) if w == "t" => Ok(Label::True),
            Some(Tok::Word(w)) if w == "f" => Ok(Label::False),
            Some(Tok::Word(w)) if w.starts_with('@') => {
                Err(AutomataError::UnsupportedFeature("aliases".into()))
            }
            Some(Tok::Int(i)) if i < self.aps => Ok(Label::Ap(i)),
            Some(Tok::Int(i)) => Err(self.err(&format!("AP index {i} out of range"))),
            Some(Tok::Sym('(')) => {
                let e = self.or()?;
                if self.toks.get(self.pos) != Some(&Tok::Sym(')')) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            _ => Err(self.err("bad label")),
        }
    }
}

pub fn parse_hoa(text: &str) -> Result<Nba, AutomataError> {
    let mut states: Option<usize> = None;
    let mut starts: Vec<usize> = Vec::new();
    let mut aps: Vec<String> = Vec::new();
    let mut saw_header = false;
    let mut in_body = false;
    let mut ended = false;
    let mut current: Option<usize> = None;
    let mut names: Vec<Option<String>> = Vec::new();
    let mut accepting: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, Label, usize)> = Vec::new();
    let mut edge_lines: Vec<usize> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let err = |m: &str| AutomataError::SyntaxError {
            line: lineno,
            message: m.to_string(),
        };
        if ended {
            return Err(err("content after --END--"));
        }
        if !in_body {
            let Tok::Word(key) = &toks[0] else {
                return Err(err("expected header item"));
            };
            match key.as_str() {
                "HOA:" => {
                    if toks.get(1) != Some(&Tok::Word("v1".into())) {
                        return Err(AutomataError::UnsupportedFeature(
                            "HOA version other than v1".into(),
                        ));
                    }
                    saw_header = true;
                }
                "--BODY--" => {
                    in_body = true;
                    let n = states.ok_or_else(|| err("missing States"))?;
                    names = vec![None; n];
                }
                "name:" | "tool:" | "properties:" => {}
                "States:" => match toks.get(1) {
                    Some(Tok::Int(n)) => states = Some(*n),
                    _ => return Err(err("States needs a count")),
                },
                "Start:" => {
                    if toks.len() != 2 {
                        return Err(AutomataError::UnsupportedFeature(
                            "alternating start conjunction".into(),
                        ));
                    }
                    match toks[1] {
                        Tok::Int(s) => starts.push(s),
                        _ => return Err(err("Start needs a state")),
                    }
                }
                "AP:" => {
                    let Some(Tok::Int(n)) = toks.get(1) else {
                        return Err(err("AP needs a count"));
                    };
                    for t in &toks[2..] {
                        match t {
                            Tok::Str(s) => aps.push(s.clone()),
                            _ => return Err(err("AP names must be strings")),
                        }
                    }
                    if aps.len() != *n {
                        return Err(err("AP count mismatch"));
                    }
                }
                "acc-name:" => {
                    if toks.get(1) != Some(&Tok::Word("Buchi".into())) {
                        return Err(AutomataError::UnsupportedFeature(format!(
                            "acceptance {raw}"
                        )));
                    }
                }
                "Acceptance:" => {
                    let ok = toks.len() == 6
                        && toks[1] == Tok::Int(1)
                        && toks[2] == Tok::Word("Inf".into())
                        && toks[3] == Tok::Sym('(')
                        && toks[4] == Tok::Int(0)
                        && toks[5] == Tok::Sym(')');
                    if !ok {
                        return Err(AutomataError::UnsupportedFeature(format!(
                            "acceptance condition `{}`",
                            raw.trim()
                        )));
                    }
                }
                "Alias:" => return Err(AutomataError::UnsupportedFeature("aliases".into())),
                other => {
                    return Err(AutomataError::UnsupportedFeature(format!(
                        "header item `{other}`"
                    )))
                }
            }
            continue;
        }
        match &toks[0] {
            Tok::Word(w) if w == "--END--" => {
                ended = true;
            }
            Tok::Word(w) if w == "State:" => {
                let mut i = 1;
                if toks.get(i) == Some(&Tok::Sym('[')) {
                    return Err(AutomataError::UnsupportedFeature("state labels".into()));
                }
                let Some(Tok::Int(s)) = toks.get(i) else {
                    return Err(err("State needs an index"));
                };
                if *s >= names.len() {
                    return Err(err("state index out of range"));
                }
                current = Some(*s);
                i += 1;
                if let Some(Tok::Str(name)) = toks.get(i) {
                    names[*s] = Some(name.clone());
                    i += 1;
                }
                if toks.get(i) == Some(&Tok::Sym('{')) {
                    let close = toks
                        .iter()
                        .position(|t| *t == Tok::Sym('}'))
                        .ok_or_else(|| err("unclosed `{`"))?;
                    for t in &toks[i + 1..close] {
                        match t {
                            Tok::Int(0) => accepting.push(*s),
                            Tok::Int(_) => {
                                return Err(AutomataError::UnsupportedFeature(
                                    "more than one acceptance set".into(),
                                ))
                            }
                            _ => return Err(err("bad acceptance set")),
                        }
                    }
                    i = close + 1;
                }
                if i != toks.len() {
                    return Err(err("trailing tokens after State"));
                }
            }
            Tok::Sym('[') => {
                let from = current.ok_or_else(|| err("edge before any State"))?;
                let close = toks
                    .iter()
                    .position(|t| *t == Tok::Sym(']'))
                    .ok_or_else(|| err("unclosed `[`"))?;
                let mut p = LabelParser {
                    toks: &toks[1..close],
                    pos: 0,
                    line: lineno,
                    aps: aps.len(),
                };
                let label = p.or()?;
                if p.pos != close - 1 {
                    return Err(err("trailing tokens in label"));
                }
                let to = match toks.get(close + 1) {
                    Some(Tok::Int(t)) => *t,
                    _ => return Err(err("edge needs a target state")),
                };
                if toks.len() > close + 2 {
                    if toks[close + 2] == Tok::Sym('{') {
                        return Err(AutomataError::UnsupportedFeature(
                            "transition-based acceptance".into(),
                        ));
                    }
                    return Err(AutomataError::UnsupportedFeature(
                        "universal branching".into(),
                    ));
                }
                edges.push((from, label, to));
                edge_lines.push(lineno);
            }
            Tok::Int(_) => {
                return Err(AutomataError::UnsupportedFeature(
                    "implicit edge labels".into(),
                ))
            }
            _ => return Err(err("unexpected body line")),
        }
    }
    if !saw_header {
        return Err(AutomataError::SyntaxError {
            line: 1,
            message: "missing `HOA: v1`".into(),
        });
    }
    if !ended {
        return Err(AutomataError::SyntaxError {
            line: text.lines().count(),
            message: "missing --END--".into(),
        });
    }
    let n = names.len();
    let alphabet = Nba::full_alphabet(&aps);
    let mut transitions = Vec::new();
    for ((from, label, to), line) in edges.iter().zip(&edge_lines) {
        if *to >= n {
            return Err(AutomataError::SyntaxError {
                line: *line,
                message: "target out of range".into(),
            });
        }
        for mask in 0..1usize << aps.len() {
            if label.eval(mask) {
                let letter = Letter::new(
                    &(0..aps.len())
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| aps[i].as_str())
                        .collect::<Vec<_>>(),
                );
                transitions.push(Transition {
                    from: *from,
                    letter,
                    to: *to,
                });
            }
        }
    }
    let state_names = names
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.unwrap_or_else(|| format!("q{i}")))
        .collect();
    Nba::with_names(aps, alphabet, state_names, starts, accepting, transitions)
}

/// Writes one explicit edge per (transition, letter).
pub fn to_hoa(a: &Nba) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "HOA: v1");
    let _ = writeln!(s, "States: {}", a.num_states());
    for q in &a.initial {
        let _ = writeln!(s, "Start: {q}");
    }
    let _ = write!(s, "AP: {}", a.aps.len());
    for ap in &a.aps {
        let _ = write!(s, " \"{ap}\"");
    }
    s.push('\n');
    let _ = writeln!(s, "acc-name: Buchi");
    let _ = writeln!(s, "Acceptance: 1 Inf(0)");
    let _ = writeln!(s, "--BODY--");
    for q in 0..a.num_states() {
        let acc = if a.is_accepting(q) { " {0}" } else { "" };
        let _ = writeln!(s, "State: {q} \"{}\"{acc}", a.state_names[q]);
        for t in a.transitions.iter().filter(|t| t.from == q) {
            let lits: Vec<String> = a
                .aps
                .iter()
                .enumerate()
                .map(|(i, ap)| {
                    if t.letter.holds(ap) {
                        i.to_string()
                    } else {
                        format!("!{i}")
                    }
                })
                .collect();
            let label = if lits.is_empty() {
                "t".to_string()
            } else {
                lits.join("&")
            };
            let _ = writeln!(s, "[{label}] {}", t.to);
        }
    }
    let _ = writeln!(s, "--END--");
    s
}
