//! Test-only oracles. Nothing here calls the engine's search, join or rule
//! code; everything is a direct scan or nested loop over plain data.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::Rng;
use regex::Regex;

use tripleid::kernel::PatternKey;
use tripleid::nt_parser::{parse_line, Parsed};
use tripleid::sparql::{PatternTerm, Projection, Query};
use tripleid::{Dictionary, Role, TermId, Triple};

pub type Row = Vec<Option<String>>;

/// Statements as (s, p, o) token strings.
pub fn parse_nt(text: &str) -> Vec<[String; 3]> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| match parse_line(l, i as u64 + 1).expect("valid test data") {
            Parsed::Statement(st) => Some([
                st.subject.into_string(),
                st.predicate.into_string(),
                st.object.into_string(),
            ]),
            Parsed::Skip => None,
        })
        .collect()
}

/// Encodes statements the way the converter does.
pub fn encode(statements: &[[String; 3]]) -> (Dictionary, Vec<Triple>) {
    let mut dict = Dictionary::new();
    let triples = statements
        .iter()
        .map(|[s, p, o]| {
            let mut id = |t: &str, r| dict.encode_term(&tripleid::TermToken::new(t).unwrap(), r).unwrap();
            Triple {
                subject: id(s, Role::Subject),
                predicate: id(p, Role::Predicate),
                object: id(o, Role::Object),
            }
        })
        .collect();
    (dict, triples)
}

/// Indices of triples whose bound key fields are equal.
pub fn naive_search(triples: &[Triple], key: &PatternKey) -> Vec<u64> {
    triples
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            (key.subject.0 == 0 || key.subject == t.subject)
                && (key.predicate.0 == 0 || key.predicate == t.predicate)
                && (key.object.0 == 0 || key.object == t.object)
        })
        .map(|(i, _)| i as u64)
        .collect()
}

/// All (l, r) with equal keys, as a sorted multiset.
pub fn nested_loop_join(left: &[TermId], right: &[TermId]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (l, a) in left.iter().enumerate() {
        for (r, b) in right.iter().enumerate() {
            if a == b {
                out.push((l, r));
            }
        }
    }
    out.sort_unstable();
    out
}

/// SPARQL `str()` computed from the token text; `None` for blank nodes.
pub fn str_of(token: &str) -> Option<&str> {
    if let Some(inner) = token.strip_prefix('<') {
        return inner.strip_suffix('>');
    }
    if token.starts_with('"') {
        let close = token.rfind('"').unwrap();
        return Some(&token[1..close]);
    }
    None
}

/// Reference SPARQL evaluator: per-pattern scan, nested-loop joins with
/// binding checks, filters on the joined rows, then union, projection and
/// DISTINCT. Returns the column names and rows.
pub fn reference_eval<'a>(query: &Query, statements: &'a [[String; 3]]) -> (Vec<String>, Vec<Row>) {
    // own interning, independent of the engine's dictionary
    let mut ids: HashMap<&'a str, u32> = HashMap::new();
    let mut names: Vec<&'a str> = Vec::new();
    let data: Vec<[u32; 3]> = statements
        .iter()
        .map(|st| {
            let mut f = |s: &'a str| -> u32 {
                *ids.entry(s).or_insert_with(|| {
                    names.push(s);
                    names.len() as u32 - 1
                })
            };
            [f(&st[0]), f(&st[1]), f(&st[2])]
        })
        .collect();

    let mut branch_results: Vec<(Vec<String>, Vec<Vec<u32>>)> = Vec::new();
    for group in &query.groups {
        let mut vars: Vec<String> = Vec::new();
        for p in &group.patterns {
            for t in [&p.subject, &p.predicate, &p.object] {
                if let PatternTerm::Var(v) = t {
                    if !vars.contains(v) {
                        vars.push(v.clone());
                    }
                }
            }
        }
        let var_index = |v: &str| vars.iter().position(|x| x == v).unwrap();
        let mut rows: Vec<Vec<Option<u32>>> = vec![vec![None; vars.len()]];
        for p in &group.patterns {
            let terms = [&p.subject, &p.predicate, &p.object];
            // candidate statements for this pattern alone
            let mut cands: Vec<&[u32; 3]> = Vec::new();
            'outer: for st in &data {
                let mut local: HashMap<&str, u32> = HashMap::new();
                for (k, t) in terms.iter().enumerate() {
                    match t {
                        PatternTerm::Term(tok) => {
                            if names[st[k] as usize] != tok.as_str() {
                                continue 'outer;
                            }
                        }
                        PatternTerm::Var(v) => {
                            if let Some(prev) = local.insert(v, st[k]) {
                                if prev != st[k] {
                                    continue 'outer;
                                }
                            }
                        }
                    }
                }
                cands.push(st);
            }
            let slots: Vec<(usize, usize)> = terms
                .iter()
                .enumerate()
                .filter_map(|(k, t)| match t {
                    PatternTerm::Var(v) => Some((k, var_index(v))),
                    PatternTerm::Term(_) => None,
                })
                .collect();
            let mut next = Vec::new();
            for row in &rows {
                for st in &cands {
                    if slots.iter().any(|&(k, c)| row[c].is_some_and(|b| b != st[k])) {
                        continue;
                    }
                    let mut new_row = row.clone();
                    for &(k, c) in &slots {
                        new_row[c] = Some(st[k]);
                    }
                    next.push(new_row);
                }
            }
            rows = next;
        }
        if group.patterns.is_empty() {
            rows.clear();
        }
        for f in &group.filters {
            // flags are already folded into the pattern text
            let re = Regex::new(&f.pattern).unwrap();
            let col = var_index(&f.variable);
            rows.retain(|r| {
                r[col]
                    .and_then(|id| str_of(names[id as usize]))
                    .is_some_and(|s| re.is_match(s))
            });
        }
        branch_results.push((vars, rows.into_iter().map(|r| r.into_iter().map(Option::unwrap).collect()).collect()));
    }

    let mut columns: Vec<String> = Vec::new();
    for (vars, _) in &branch_results {
        for v in vars {
            if !columns.contains(v) {
                columns.push(v.clone());
            }
        }
    }
    let mut all: Vec<Row> = Vec::new();
    for (vars, rows) in &branch_results {
        for r in rows {
            all.push(
                columns
                    .iter()
                    .map(|c| vars.iter().position(|v| v == c).map(|i| names[r[i] as usize].to_owned()))
                    .collect(),
            );
        }
    }
    let picks: Vec<usize> = match &query.projection {
        Projection::All => (0..columns.len()).collect(),
        Projection::Vars(vs) => vs.iter().map(|v| columns.iter().position(|c| c == v).unwrap()).collect(),
    };
    let out_cols = picks.iter().map(|&i| columns[i].clone()).collect();
    let mut out: Vec<Row> = all.into_iter().map(|r| picks.iter().map(|&i| r[i].clone()).collect()).collect();
    if query.distinct {
        let mut seen = HashSet::new();
        out.retain(|r| seen.insert(r.clone()));
    }
    (out_cols, out)
}

/// Parses engine TSV output into a header and rows.
pub fn parse_tsv(text: &str) -> (Vec<String>, Vec<Row>) {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    let cols: Vec<String> = if header.is_empty() {
        Vec::new()
    } else {
        header.split('\t').map(|c| c.trim_start_matches('?').to_owned()).collect()
    };
    let rows = lines
        .filter(|l| !l.is_empty() || cols.is_empty())
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(|c| (!c.is_empty()).then(|| c.to_owned())).collect())
        .collect();
    (cols, rows)
}

pub fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort();
    rows
}

// ---------------------------------------------------------------- entailment

pub const RDF_TYPE: &str = "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>";
pub const DOMAIN: &str = "<http://www.w3.org/2000/01/rdf-schema#domain>";
pub const RANGE: &str = "<http://www.w3.org/2000/01/rdf-schema#range>";
pub const SUB_PROP: &str = "<http://www.w3.org/2000/01/rdf-schema#subPropertyOf>";
pub const SUB_CLASS: &str = "<http://www.w3.org/2000/01/rdf-schema#subClassOf>";

pub type Stmt = [String; 3];

#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub res1: usize,
    pub dist1: usize,
    pub res2: usize,
    pub dist2: usize,
    pub all: usize,
}

/// Brute force over every ordered pair (schema triple, other triple),
/// applying the rule's premise literally. Returns the conclusions and the
/// stage counts.
pub fn entail_oracle(rule: u8, data: &[Stmt]) -> (BTreeSet<Stmt>, OracleCounts) {
    let s = |v: &str| v.to_owned();
    // (is schema triple, link of schema triple, link of other triple if it pairs, conclusion)
    let schema_pred = match rule {
        2 => DOMAIN,
        3 => RANGE,
        5 | 7 => SUB_PROP,
        9 => RDF_TYPE,
        11 => SUB_CLASS,
        _ => panic!("rule {rule}"),
    };
    let first: Vec<&Stmt> = data.iter().filter(|t| t[1] == schema_pred).collect();
    // link term of a stage-1 triple
    let link1 = |t: &Stmt| -> String {
        match rule {
            2 | 3 | 7 => t[0].clone(),
            _ => t[2].clone(),
        }
    };
    // link term of a second triple when it has the right shape
    let link2 = |t: &Stmt| -> Option<String> {
        match rule {
            2 | 3 | 7 => Some(t[1].clone()),
            5 => (t[1] == SUB_PROP).then(|| t[0].clone()),
            9 | 11 => (t[1] == SUB_CLASS).then(|| t[0].clone()),
            _ => unreachable!(),
        }
    };
    let mut out = BTreeSet::new();
    let mut second_hits: BTreeSet<usize> = BTreeSet::new();
    for a in &first {
        for (j, b) in data.iter().enumerate() {
            let paired = match rule {
                // s p o && p domain D => s type D
                2 => b[1] == a[0],
                3 => b[1] == a[0],
                // p spo q && q spo r => p spo r
                5 => b[1] == SUB_PROP && b[0] == a[2],
                // s p o && p spo q => s q o
                7 => b[1] == a[0],
                // s type x && x sco y => s type y
                9 => b[1] == SUB_CLASS && b[0] == a[2],
                // x sco y && y sco z => x sco z
                11 => b[1] == SUB_CLASS && b[0] == a[2],
                _ => unreachable!(),
            };
            if !paired {
                continue;
            }
            second_hits.insert(j);
            let c = match rule {
                2 => [b[0].clone(), s(RDF_TYPE), a[2].clone()],
                3 => [b[2].clone(), s(RDF_TYPE), a[2].clone()],
                5 => [a[0].clone(), s(SUB_PROP), b[2].clone()],
                7 => [b[0].clone(), a[2].clone(), b[2].clone()],
                9 => [a[0].clone(), s(RDF_TYPE), b[2].clone()],
                11 => [a[0].clone(), s(SUB_CLASS), b[2].clone()],
                _ => unreachable!(),
            };
            out.insert(c);
        }
    }
    let dist1: BTreeSet<String> = first.iter().map(|t| link1(t)).collect();
    let dist2: BTreeSet<String> = second_hits.iter().filter_map(|&j| link2(&data[j])).collect();
    let counts = OracleCounts {
        res1: first.len(),
        dist1: dist1.len(),
        res2: second_hits.len(),
        dist2: dist2.len(),
        all: out.len(),
    };
    (out, counts)
}

/// Random statements over a small vocabulary where every rule fires.
pub fn entail_dataset<R: Rng>(rng: &mut R, n: usize) -> Vec<Stmt> {
    let props: Vec<String> = (0..6).map(|k| format!("<http://e/p{k}>")).collect();
    let classes: Vec<String> = (0..8).map(|k| format!("<http://e/C{k}>")).collect();
    let things: Vec<String> = (0..40).map(|k| format!("<http://e/x{k}>")).collect();
    let pick = |rng: &mut R, v: &[String]| v[rng.gen_range(0..v.len())].clone();
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => [pick(rng, &props), DOMAIN.to_owned(), pick(rng, &classes)],
            1 => [pick(rng, &props), RANGE.to_owned(), pick(rng, &classes)],
            2 => [pick(rng, &props), SUB_PROP.to_owned(), pick(rng, &props)],
            3 => [pick(rng, &classes), SUB_CLASS.to_owned(), pick(rng, &classes)],
            4 => [pick(rng, &things), RDF_TYPE.to_owned(), pick(rng, &classes)],
            5 => [pick(rng, &things), pick(rng, &props), "\"lit\"".to_owned()],
            _ => [pick(rng, &things), pick(rng, &props), pick(rng, &things)],
        })
        .collect()
}
