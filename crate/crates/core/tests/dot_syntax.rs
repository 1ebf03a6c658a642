//! Exported DOT must be accepted by the Graphviz grammar. The checker
//! below covers the abstract grammar of the language (statements, edge
//! chains, attribute lists, subgraphs) with quoted, numeral and plain ids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scm_core::diagnose::{find_all_mics, DiagnosisOptions};
use scm_core::{export_dot, parse_instance};
use scm_testkit::{load, random_instance};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Punct(char),
    Arrow,
    Keyword(String),
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('\\') => {
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Id(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Arrow);
            i += 2;
        } else if "{}[];,=".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || "_.-".contains(chars[i])) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let numeral = word.chars().all(|ch| ch.is_ascii_digit() || ch == '.' || ch == '-');
            let plain = !word.starts_with(|ch: char| ch.is_ascii_digit())
                && word.chars().all(|ch| ch.is_alphanumeric() || ch == '_');
            if !numeral && !plain {
                return Err(format!("bad identifier {word}"));
            }
            match word.to_ascii_lowercase().as_str() {
                "graph" | "digraph" | "subgraph" | "node" | "edge" | "strict" => {
                    out.push(Tok::Keyword(word.to_ascii_lowercase()))
                }
                _ => out.push(Tok::Id(word)),
            }
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), String> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(format!("expected {t:?} at token {}, found {:?}", self.pos, self.peek()))
        }
    }

    fn id(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Id(_)) => {
                self.pos += 1;
                Ok(())
            }
            other => Err(format!("expected id, found {other:?}")),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        self.eat(&Tok::Keyword("strict".into()));
        if !self.eat(&Tok::Keyword("digraph".into())) {
            self.expect(Tok::Keyword("graph".into()))?;
        }
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.id()?;
        }
        self.block()?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens".into());
        }
        Ok(())
    }

    fn block(&mut self) -> Result<(), String> {
        self.expect(Tok::Punct('{'))?;
        while !self.eat(&Tok::Punct('}')) {
            self.stmt()?;
            self.eat(&Tok::Punct(';'));
        }
        Ok(())
    }

    fn attr_list(&mut self) -> Result<(), String> {
        while self.eat(&Tok::Punct('[')) {
            while !self.eat(&Tok::Punct(']')) {
                self.id()?;
                self.expect(Tok::Punct('='))?;
                self.id()?;
                if !self.eat(&Tok::Punct(',')) {
                    self.eat(&Tok::Punct(';'));
                }
            }
        }
        Ok(())
    }

    fn subgraph(&mut self) -> Result<(), String> {
        if self.eat(&Tok::Keyword("subgraph".into())) && matches!(self.peek(), Some(Tok::Id(_))) {
            self.id()?;
        }
        self.block()
    }

    fn node_or_subgraph(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Keyword(k)) if k == "subgraph" => self.subgraph(),
            Some(Tok::Punct('{')) => self.subgraph(),
            _ => self.id(),
        }
    }

    fn stmt(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Keyword(k)) if k == "graph" || k == "node" || k == "edge" => {
                self.pos += 1;
                return self.attr_list();
            }
            _ => {}
        }
        let starts_with_id = matches!(self.peek(), Some(Tok::Id(_)));
        self.node_or_subgraph()?;
        if starts_with_id && self.eat(&Tok::Punct('=')) {
            return self.id();
        }
        let mut edges = 0;
        while self.eat(&Tok::Arrow) {
            self.node_or_subgraph()?;
            edges += 1;
        }
        if edges == 0 && !starts_with_id {
            return Ok(());
        }
        self.attr_list()
    }
}

fn check(text: &str) -> Result<(), String> {
    Parser {
        toks: lex(text)?,
        pos: 0,
    }
    .graph()
}

#[test]
fn checker_rejects_broken_input() {
    assert!(check("digraph {}").is_ok());
    assert!(check("digraph { a -> b [color=red]; c [shape=box] }").is_ok());
    assert!(check("digraph { a -> }").is_err());
    assert!(check("digraph { a [color] }").is_err());
    assert!(check("digraph { \"a }").is_err());
    assert!(check("digraph { a; } }").is_err());
}

#[test]
fn fixtures_export_valid_dot() {
    for name in ["empty.txt", "lac.txt", "small_core.txt", "operon_mu2.txt", "operon_mu4.txt"] {
        let inst = load(name);
        let report = find_all_mics(&inst, &DiagnosisOptions::default());
        let dot = export_dot(&inst, &report.mics);
        check(&dot).unwrap_or_else(|e| panic!("{name}: {e}\n{dot}"));
    }
    assert_eq!(export_dot(&load("empty.txt"), &[]), "digraph {\n}\n");
}

#[test]
fn awkward_names_export_valid_dot() {
    let inst = parse_instance("edge a\\b c-d ?\nedge node x.y +\nobs 1 -\nedge é strict -").unwrap();
    check(&export_dot(&inst, &[])).unwrap();
}

#[test]
fn random_instances_export_valid_dot() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 9);
        let report = find_all_mics(&inst, &DiagnosisOptions::default());
        let dot = export_dot(&inst, &report.mics);
        check(&dot).unwrap_or_else(|e| panic!("{e}\n{dot}"));
    }
}
