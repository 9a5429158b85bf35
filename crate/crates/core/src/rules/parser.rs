//! Recursive-descent parser for rule files.
//!
//! ```text
//! file  := rule*
//! rule  := "rule" IDENT ":" atom ("&" atom)* "=>" "forbid" "(" IDENT ")"
//! atom  := IDENT "(" term ("," term)* ")"
//! term  := IDENT | "?" IDENT
//! ```
//!
//! `#` starts a comment running to the end of the line.

use super::{Atom, RuleError, RuleSet, SafetyRule, Term, Vocabulary};
use crate::action::Action;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Colon,
    Amp,
    Arrow,
    LParen,
    RParen,
    Comma,
    Eof,
    Bad(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("`?{s}`"),
            Tok::Colon => "`:`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
            Tok::Bad(c) => format!("`{c}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(src: &str) -> Vec<Spanned> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1, 1);
    let bump = |c: char, line: &mut usize, column: &mut usize| {
        if c == '\n' {
            *line += 1;
            *column = 1;
        } else {
            *column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c.is_whitespace() {
            chars.next();
            bump(c, &mut line, &mut column);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                bump(c, &mut line, &mut column);
            }
            continue;
        }
        let single = match c {
            ':' => Some(Tok::Colon),
            '&' => Some(Tok::Amp),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            bump(c, &mut line, &mut column);
            out.push(Spanned { tok, line: l, column: col });
            continue;
        }
        if c == '=' {
            chars.next();
            bump(c, &mut line, &mut column);
            let tok = if chars.peek() == Some(&'>') {
                chars.next();
                bump('>', &mut line, &mut column);
                Tok::Arrow
            } else {
                Tok::Bad('=')
            };
            out.push(Spanned { tok, line: l, column: col });
            continue;
        }
        let is_var = c == '?';
        if is_var || is_ident_char(c) {
            if is_var {
                chars.next();
                bump(c, &mut line, &mut column);
            }
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
                bump(c, &mut line, &mut column);
            }
            let tok = match (is_var, word.is_empty()) {
                (true, true) => Tok::Bad('?'),
                (true, false) => Tok::Var(word),
                (false, _) => Tok::Ident(word),
            };
            out.push(Spanned { tok, line: l, column: col });
            continue;
        }
        chars.next();
        bump(c, &mut line, &mut column);
        out.push(Spanned {
            tok: Tok::Bad(c),
            line: l,
            column: col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    out
}

struct Parser<'v> {
    toks: Vec<Spanned>,
    pos: usize,
    vocab: &'v Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> RuleError {
        let t = self.peek();
        RuleError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), RuleError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Spanned, RuleError> {
        match &self.peek().tok {
            Tok::Ident(_) => Ok(self.next()),
            _ => Err(self.error(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), RuleError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn file(&mut self) -> Result<RuleSet, RuleError> {
        let mut set = RuleSet::empty();
        while self.peek().tok != Tok::Eof {
            let rule = self.rule()?;
            set.push(rule)?;
        }
        Ok(set)
    }

    fn rule(&mut self) -> Result<SafetyRule, RuleError> {
        self.keyword("rule")?;
        let name = match self.ident("rule name")?.tok {
            Tok::Ident(s) => s,
            _ => unreachable!(),
        };
        self.expect(Tok::Colon)?;
        let mut body = vec![self.atom()?];
        while self.peek().tok == Tok::Amp {
            self.next();
            body.push(self.atom()?);
        }
        if self.peek().tok != Tok::Arrow {
            return Err(self.error("`&` or `=>`"));
        }
        self.next();
        self.keyword("forbid")?;
        self.expect(Tok::LParen)?;
        let act = self.ident("action name")?;
        let Tok::Ident(act_name) = act.tok else {
            unreachable!()
        };
        let forbidden = act_name
            .parse::<Action>()
            .ok()
            .filter(|a| self.vocab.actions.contains(a))
            .ok_or(RuleError::UnknownAction {
                line: act.line,
                column: act.column,
                name: act_name,
            })?;
        self.expect(Tok::RParen)?;
        Ok(SafetyRule {
            name,
            body,
            forbidden,
        })
    }

    fn atom(&mut self) -> Result<Atom, RuleError> {
        let head = self.ident("predicate")?;
        let Tok::Ident(pred) = head.tok else {
            unreachable!()
        };
        let Some(&arity) = self.vocab.predicates.get(&pred) else {
            return Err(RuleError::UnknownPredicate {
                line: head.line,
                column: head.column,
                name: pred,
            });
        };
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                    args.push(self.term()?);
                }
                Tok::RParen => {
                    self.next();
                    break;
                }
                _ => return Err(self.error("`,` or `)`")),
            }
        }
        if args.len() != arity {
            return Err(RuleError::Arity {
                line: head.line,
                column: head.column,
                name: pred,
                expected: arity,
                found: args.len(),
            });
        }
        Ok(Atom {
            predicate: pred,
            args,
        })
    }

    fn term(&mut self) -> Result<Term, RuleError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(Term::Const(s))
            }
            Tok::Var(s) => {
                self.next();
                Ok(Term::Var(s))
            }
            _ => Err(self.error("term")),
        }
    }
}

/// Parses rule source against the default vocabulary (every action).
pub fn parse_rules(src: &str) -> Result<RuleSet, RuleError> {
    parse_rules_with(src, &Vocabulary::default())
}

pub fn parse_rules_with(src: &str, vocab: &Vocabulary) -> Result<RuleSet, RuleError> {
    Parser {
        toks: lex(src),
        pos: 0,
        vocab,
    }
    .file()
}
