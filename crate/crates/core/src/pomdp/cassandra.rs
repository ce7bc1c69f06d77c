//! Reader and writer for the line-oriented `.pomdp` interchange format.
//!
//! The writer emits a canonical document: fixed stanza order, one nonzero
//! entry per line, shortest round-trip number formatting. The reader
//! accepts the common forms of the format (names or indices, `*`
//! wildcards, row and matrix entries, `identity` and `uniform`), with
//! rewards restricted to state-action dependence.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::PomdpModel;
use crate::error::{Error, Result};

fn check_finite(model: &PomdpModel) -> Result<()> {
    if !model.discount.is_finite() {
        return Err(Error::NonFinite("discount".into()));
    }
    let t = model.transitions.iter().flatten().flatten().all(|(_, p)| p.is_finite());
    let o = model.observation_probs.iter().flatten().flatten().all(|p| p.is_finite());
    let r = model.rewards.iter().flatten().all(|r| r.is_finite());
    let s = model.start.iter().flatten().all(|p| p.is_finite());
    match (t, o, r, s) {
        (false, ..) => Err(Error::NonFinite("transitions".into())),
        (_, false, ..) => Err(Error::NonFinite("observation probabilities".into())),
        (_, _, false, _) => Err(Error::NonFinite("rewards".into())),
        (.., false) => Err(Error::NonFinite("start belief".into())),
        _ => Ok(()),
    }
}

pub fn export_cassandra(model: &PomdpModel) -> Result<String> {
    check_finite(model)?;
    let mut out = String::new();
    let join = |names: &[String]| names.join(" ");
    writeln!(out, "discount: {}", model.discount).unwrap();
    writeln!(out, "values: reward").unwrap();
    writeln!(out, "states: {}", join(&model.states)).unwrap();
    writeln!(out, "actions: {}", join(&model.actions)).unwrap();
    writeln!(out, "observations: {}", join(&model.observations)).unwrap();
    if let Some(start) = &model.start {
        let probs: Vec<String> = start.iter().map(|p| p.to_string()).collect();
        writeln!(out, "start: {}", probs.join(" ")).unwrap();
    }
    out.push('\n');
    for (a, rows) in model.transitions.iter().enumerate() {
        for (s, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                if p != 0.0 {
                    writeln!(out, "T: {} : {} : {} {}", model.actions[a], model.states[s], model.states[t], p).unwrap();
                }
            }
        }
    }
    out.push('\n');
    for (a, rows) in model.observation_probs.iter().enumerate() {
        for (s, row) in rows.iter().enumerate() {
            for (o, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    writeln!(out, "O: {} : {} : {} {}", model.actions[a], model.states[s], model.observations[o], p).unwrap();
                }
            }
        }
    }
    out.push('\n');
    for (a, row) in model.rewards.iter().enumerate() {
        for (s, &r) in row.iter().enumerate() {
            if r != 0.0 {
                writeln!(out, "R: {} : {} : * : * {}", model.actions[a], model.states[s], r).unwrap();
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Colon,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Lexer {
    fn new(text: &str) -> Lexer {
        let mut toks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for piece in line.split_whitespace() {
                let mut rest = piece;
                while let Some(idx) = rest.find(':') {
                    if idx > 0 {
                        toks.push((Tok::Word(rest[..idx].to_string()), i + 1));
                    }
                    toks.push((Tok::Colon, i + 1));
                    rest = &rest[idx + 1..];
                }
                if !rest.is_empty() {
                    toks.push((Tok::Word(rest.to_string()), i + 1));
                }
            }
        }
        Lexer { toks, pos: 0 }
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|t| &t.0)
    }

    fn at_colon(&self) -> bool {
        self.peek() == Some(&Tok::Colon)
    }

    /// A word followed by a colon starts the next stanza.
    fn at_keyword(&self) -> bool {
        matches!(self.peek(), Some(Tok::Word(_))) && self.peek_at(1) == Some(&Tok::Colon)
    }

    fn word(&mut self) -> Result<String> {
        match self.toks.get(self.pos) {
            Some((Tok::Word(w), _)) => {
                self.pos += 1;
                Ok(w.clone())
            }
            Some((Tok::Colon, _)) => self.err("expected a value, found `:`"),
            None => self.err("unexpected end of file"),
        }
    }

    fn colon(&mut self) -> Result<()> {
        if self.at_colon() {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `:`")
        }
    }

    fn number(&mut self) -> Result<f64> {
        let w = self.word()?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos -= 1;
                self.err(format!("expected a number, found `{w}`"))
            }
        }
    }

    fn numbers(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.number()).collect()
    }

    /// Words up to the next stanza keyword.
    fn list(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            if self.at_keyword() {
                break;
            }
            out.push(w.clone());
            self.pos += 1;
        }
        out
    }
}

/// Either a count (`states: 4`) or explicit names.
fn names_from(words: Vec<String>, prefix: &str) -> Option<Vec<String>> {
    match words.as_slice() {
        [] => None,
        [one] => match one.parse::<usize>() {
            Ok(n) if n > 0 => Some((0..n).map(|i| format!("{prefix}{i}")).collect()),
            Ok(_) => None,
            Err(_) => Some(words),
        },
        _ => Some(words),
    }
}

fn resolve(lex: &Lexer, names: &[String], token: &str, what: &str) -> Result<Vec<usize>> {
    if token == "*" {
        return Ok((0..names.len()).collect());
    }
    if let Some(i) = names.iter().position(|n| n == token) {
        return Ok(vec![i]);
    }
    match token.parse::<usize>() {
        Ok(i) if i < names.len() => Ok(vec![i]),
        _ => lex.err(format!("unknown {what} `{token}`")),
    }
}

pub fn import_cassandra(text: &str) -> Result<PomdpModel> {
    let mut lex = Lexer::new(text);
    let mut discount = None;
    let mut cost = false;
    let mut states: Option<Vec<String>> = None;
    let mut actions: Option<Vec<String>> = None;
    let mut observations: Option<Vec<String>> = None;
    let mut start_words: Option<(Vec<String>, usize)> = None;

    // Preamble.
    while lex.at_keyword() {
        let key = match lex.peek() {
            Some(Tok::Word(w)) => w.clone(),
            _ => unreachable!(),
        };
        if matches!(key.as_str(), "T" | "O" | "R") {
            break;
        }
        lex.pos += 2;
        match key.as_str() {
            "discount" => discount = Some(lex.number()?),
            "values" => {
                let v = lex.word()?;
                cost = match v.as_str() {
                    "reward" => false,
                    "cost" => true,
                    other => return lex.err(format!("`values` must be reward or cost, found `{other}`")),
                }
            }
            "states" => states = names_from(lex.list(), "s"),
            "actions" => actions = names_from(lex.list(), "a"),
            "observations" => observations = names_from(lex.list(), "o"),
            "start" => {
                let line = lex.line();
                start_words = Some((lex.list(), line));
            }
            other => return lex.err(format!("unknown preamble keyword `{other}`")),
        }
    }

    let missing = |what: &str| Error::Parse {
        line: 0,
        message: format!("missing `{what}` declaration"),
    };
    let discount = discount.ok_or_else(|| missing("discount"))?;
    let states = states.ok_or_else(|| missing("states"))?;
    let actions = actions.ok_or_else(|| missing("actions"))?;
    let observations = observations.ok_or_else(|| missing("observations"))?;
    let (ns, na, no) = (states.len(), actions.len(), observations.len());

    let start = match start_words {
        None => None,
        Some((words, line)) => Some(parse_start(&words, &states, line)?),
    };

    let mut trans: Vec<Vec<BTreeMap<usize, f64>>> = vec![vec![BTreeMap::new(); ns]; na];
    let mut obs = vec![vec![vec![0.0; no]; ns]; na];
    let mut rewards = vec![vec![0.0; ns]; na];

    while lex.peek().is_some() {
        let key = lex.word()?;
        lex.colon()?;
        match key.as_str() {
            "T" => {
                let a_tok = lex.word()?;
                let acts = resolve(&lex, &actions, &a_tok, "action")?;
                if lex.at_colon() {
                    lex.colon()?;
                    let s_tok = lex.word()?;
                    let from = resolve(&lex, &states, &s_tok, "state")?;
                    if lex.at_colon() {
                        lex.colon()?;
                        let t_tok = lex.word()?;
                        let to = resolve(&lex, &states, &t_tok, "state")?;
                        let p = lex.number()?;
                        for &a in &acts {
                            for &s in &from {
                                for &t in &to {
                                    set_sparse(&mut trans[a][s], t, p);
                                }
                            }
                        }
                    } else {
                        let row = row_or_special(&mut lex, ns)?;
                        for &a in &acts {
                            for &s in &from {
                                set_row(&mut trans[a][s], &row);
                            }
                        }
                    }
                } else {
                    let matrix = matrix_or_special(&mut lex, ns, ns, true)?;
                    for &a in &acts {
                        for s in 0..ns {
                            set_row(&mut trans[a][s], &matrix[s]);
                        }
                    }
                }
            }
            "O" => {
                let a_tok = lex.word()?;
                let acts = resolve(&lex, &actions, &a_tok, "action")?;
                if lex.at_colon() {
                    lex.colon()?;
                    let s_tok = lex.word()?;
                    let targets = resolve(&lex, &states, &s_tok, "state")?;
                    if lex.at_colon() {
                        lex.colon()?;
                        let o_tok = lex.word()?;
                        let outs = resolve(&lex, &observations, &o_tok, "observation")?;
                        let p = lex.number()?;
                        for &a in &acts {
                            for &s in &targets {
                                for &o in &outs {
                                    obs[a][s][o] = p;
                                }
                            }
                        }
                    } else {
                        let row = row_or_special(&mut lex, no)?;
                        for &a in &acts {
                            for &s in &targets {
                                obs[a][s] = row.clone();
                            }
                        }
                    }
                } else {
                    let matrix = matrix_or_special(&mut lex, ns, no, false)?;
                    for &a in &acts {
                        obs[a] = matrix.clone();
                    }
                }
            }
            "R" => {
                let a_tok = lex.word()?;
                let acts = resolve(&lex, &actions, &a_tok, "action")?;
                lex.colon()?;
                let s_tok = lex.word()?;
                let from = resolve(&lex, &states, &s_tok, "state")?;
                for _ in 0..2 {
                    lex.colon()?;
                    if lex.word()? != "*" {
                        lex.pos -= 1;
                        return lex.err("rewards depending on next state or observation are not supported");
                    }
                }
                let v = lex.number()?;
                let v = if cost { -v } else { v };
                for &a in &acts {
                    for &s in &from {
                        rewards[a][s] = v;
                    }
                }
            }
            other => {
                lex.pos -= 2;
                return lex.err(format!("unexpected stanza `{other}`"));
            }
        }
    }

    let transitions = trans
        .into_iter()
        .map(|rows| rows.into_iter().map(|row| row.into_iter().collect()).collect())
        .collect();
    let model = PomdpModel {
        discount,
        states,
        actions,
        observations,
        transitions,
        observation_probs: obs,
        rewards,
        start,
        layout: None,
    };
    model.validate()?;
    Ok(model)
}

fn parse_start(words: &[String], states: &[String], line: usize) -> Result<Vec<f64>> {
    let err = |message: String| Error::Parse { line, message };
    if words.len() == 1 && words[0] != "uniform" {
        if let Some(i) = states.iter().position(|s| *s == words[0]) {
            let mut v = vec![0.0; states.len()];
            v[i] = 1.0;
            return Ok(v);
        }
    }
    if words.len() == 1 && words[0] == "uniform" {
        return Ok(vec![1.0 / states.len() as f64; states.len()]);
    }
    if words.len() != states.len() {
        return Err(err(format!(
            "start has {} entries, expected {}",
            words.len(),
            states.len()
        )));
    }
    words
        .iter()
        .map(|w| w.parse::<f64>().map_err(|_| err(format!("expected a number, found `{w}`"))))
        .collect()
}

fn set_sparse(row: &mut BTreeMap<usize, f64>, t: usize, p: f64) {
    if p == 0.0 {
        row.remove(&t);
    } else {
        row.insert(t, p);
    }
}

fn set_row(row: &mut BTreeMap<usize, f64>, values: &[f64]) {
    row.clear();
    for (t, &p) in values.iter().enumerate() {
        if p != 0.0 {
            row.insert(t, p);
        }
    }
}

fn row_or_special(lex: &mut Lexer, n: usize) -> Result<Vec<f64>> {
    if let Some(Tok::Word(w)) = lex.peek() {
        if w == "uniform" {
            lex.pos += 1;
            return Ok(vec![1.0 / n as f64; n]);
        }
    }
    lex.numbers(n)
}

fn matrix_or_special(lex: &mut Lexer, rows: usize, cols: usize, square: bool) -> Result<Vec<Vec<f64>>> {
    if let Some(Tok::Word(w)) = lex.peek() {
        match w.as_str() {
            "uniform" => {
                lex.pos += 1;
                return Ok(vec![vec![1.0 / cols as f64; cols]; rows]);
            }
            "identity" if square => {
                lex.pos += 1;
                return Ok((0..rows)
                    .map(|i| (0..cols).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect());
            }
            _ => {}
        }
    }
    (0..rows).map(|_| lex.numbers(cols)).collect()
}
