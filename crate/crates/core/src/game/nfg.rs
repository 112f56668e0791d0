//! Gambit `.nfg` payoff-format reader and writer.
//!
//! ```text
//! NFG 1 R "title" { "Player 1" "Player 2" } { 2 2 }
//!
//! u1(a) u2(a) u1(a') u2(a') ...
//! ```
//!
//! Profiles are listed with the first player's action varying fastest and
//! each profile lists every player's payoff in player order. Strategy-name
//! headers (`{ { "a" "b" } { "c" "d" } }`) and an optional comment string are
//! accepted on input; the outcome-based variant is not.

use std::fmt::Write as _;

use super::NormalFormGame;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Str(String),
    Word(String),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' => {
                out.push((Tok::Open, line));
                chars.next();
            }
            '}' => {
                out.push((Tok::Close, line));
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(Error::Parse {
                                line: start,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e) => s.push(e),
                            None => {
                                return Err(Error::Parse {
                                    line,
                                    message: "dangling escape".into(),
                                })
                            }
                        },
                        Some(ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                        }
                    }
                }
                out.push((Tok::Str(s), start));
            }
            _ => {
                let mut w = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '{' || ch == '}' || ch == '"' {
                        break;
                    }
                    w.push(ch);
                    chars.next();
                }
                out.push((Tok::Word(w), line));
            }
        }
    }
    Ok(out)
}

fn parse_number(word: &str, line: usize) -> Result<f64> {
    let bad = || Error::Parse {
        line,
        message: format!("invalid payoff '{word}'"),
    };
    if let Some((num, den)) = word.split_once('/') {
        let num: f64 = num.parse().map_err(|_| bad())?;
        let den: f64 = den.parse().map_err(|_| bad())?;
        if den == 0.0 {
            return Err(bad());
        }
        Ok(num / den)
    } else {
        word.parse().map_err(|_| bad())
    }
}

/// A parsed `.nfg` file.
#[derive(Clone, Debug)]
pub struct NfgFile {
    pub title: String,
    pub players: Vec<String>,
    pub game: NormalFormGame<f64>,
}

pub fn parse(src: &str) -> Result<NfgFile> {
    let toks = tokenize(src)?;
    let mut pos = 0;
    let last_line = toks.last().map_or(1, |t| t.1);
    let mut next = |what: &str| -> Result<(Tok, usize)> {
        let t = toks.get(pos).cloned().ok_or_else(|| Error::Parse {
            line: last_line,
            message: format!("unexpected end of file, expected {what}"),
        })?;
        pos += 1;
        Ok(t)
    };
    let err = |line: usize, message: String| Error::Parse { line, message };

    match next("NFG")? {
        (Tok::Word(w), _) if w == "NFG" => {}
        (_, l) => return Err(err(l, "missing 'NFG' header".into())),
    }
    match next("version")? {
        (Tok::Word(w), _) if w == "1" => {}
        (_, l) => return Err(err(l, "unsupported NFG version".into())),
    }
    match next("R or D")? {
        (Tok::Word(w), _) if w == "R" || w == "D" => {}
        (_, l) => return Err(err(l, "expected number type R".into())),
    }
    let title = match next("title")? {
        (Tok::Str(s), _) => s,
        (_, l) => return Err(err(l, "expected quoted title".into())),
    };
    match next("player list")? {
        (Tok::Open, _) => {}
        (_, l) => return Err(err(l, "expected '{' before player names".into())),
    }
    let mut players = Vec::new();
    loop {
        match next("player name")? {
            (Tok::Str(s), _) => players.push(s),
            (Tok::Close, _) => break,
            (_, l) => return Err(err(l, "expected player name".into())),
        }
    }
    match next("action counts")? {
        (Tok::Open, _) => {}
        (_, l) => return Err(err(l, "expected '{' before action counts".into())),
    }
    let mut actions = Vec::new();
    loop {
        match next("action count")? {
            (Tok::Word(w), l) => actions.push(
                w.parse::<usize>()
                    .map_err(|_| err(l, format!("invalid action count '{w}'")))?,
            ),
            (Tok::Open, _) => {
                let mut count = 0;
                loop {
                    match next("strategy name")? {
                        (Tok::Str(_), _) => count += 1,
                        (Tok::Close, _) => break,
                        (_, l) => return Err(err(l, "expected strategy name".into())),
                    }
                }
                actions.push(count);
            }
            (Tok::Close, _) => break,
            (_, l) => return Err(err(l, "malformed action block".into())),
        }
    }
    if actions.len() != players.len() {
        return Err(err(
            1,
            format!("{} players but {} action counts", players.len(), actions.len()),
        ));
    }
    let mut payoffs = Vec::new();
    while let Ok((tok, l)) = next("payoff") {
        match tok {
            Tok::Str(_) if payoffs.is_empty() => {}
            Tok::Word(w) => payoffs.push(parse_number(&w, l)?),
            Tok::Open | Tok::Close => {
                return Err(err(l, "outcome-format NFG files are not supported".into()))
            }
            Tok::Str(_) => return Err(err(l, "unexpected string among payoffs".into())),
        }
    }

    let n = actions.len();
    if n < 2 || actions.contains(&0) {
        return Err(err(1, "need at least 2 players with at least one action each".into()));
    }
    let profiles: usize = actions.iter().product();
    if payoffs.len() != n * profiles {
        return Err(err(
            last_line,
            format!("expected {} payoffs, found {}", n * profiles, payoffs.len()),
        ));
    }
    // Gambit order: first player fastest.
    let mut utilities = vec![0.0; n * profiles];
    let mut profile = vec![0usize; n];
    let shell = NormalFormGame::<f64>::new(actions.clone(), vec![0.0; n * profiles])?;
    for block in payoffs.chunks(n) {
        let flat = shell.flat_index(&profile);
        for (i, &u) in block.iter().enumerate() {
            utilities[i * profiles + flat] = u;
        }
        advance_first_fastest(&mut profile, &actions);
    }
    let game = NormalFormGame::new(actions, utilities)?;
    Ok(NfgFile { title, players, game })
}

fn advance_first_fastest(profile: &mut [usize], actions: &[usize]) {
    for i in 0..profile.len() {
        profile[i] += 1;
        if profile[i] < actions[i] {
            return;
        }
        profile[i] = 0;
    }
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

/// Serializes with shortest round-trip float formatting.
pub fn write(game: &NormalFormGame<f64>, title: &str) -> String {
    let n = game.num_players();
    let mut out = String::new();
    write!(out, "NFG 1 R {} {{", quote(title)).unwrap();
    for i in 0..n {
        write!(out, " {}", quote(&format!("Player {}", i + 1))).unwrap();
    }
    out.push_str(" } {");
    for &k in game.actions() {
        write!(out, " {k}").unwrap();
    }
    out.push_str(" }\n\n");
    let mut profile = vec![0usize; n];
    let mut first = true;
    for _ in 0..game.num_profiles() {
        let flat = game.flat_index(&profile);
        for i in 0..n {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{}", game.payoffs(i)[flat]).unwrap();
        }
        advance_first_fastest(&mut profile, game.actions());
    }
    out.push('\n');
    out
}
