//! Query evaluation over search results.
//!
//! Each UNION branch is evaluated independently: all of its patterns are
//! searched in one multi-key pass, every pattern's accepted triples are
//! materialized as a [`BindingRelation`] keyed on its join slot, filters are
//! applied to the pattern that first binds their variable, and the
//! relations are then merge-joined left to right in query order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dictionary::{Dictionary, DictionaryError, TermId};
use crate::kernel::{self, KernelError, PatternKey, MAX_KEYS};
use crate::sparql::{compile_keys, Group, Projection, Query, Slot, TriplePattern};
use crate::store::{Triple, TripleChunk, TripleSource};

/// Default cap on rows produced by a single join step.
pub const DEFAULT_MAX_ROWS: usize = 50_000_000;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("pattern #{pattern} shares no variable with any earlier pattern")]
    DisconnectedPatterns { pattern: usize },
    #[error("join would produce {rows} rows, above the limit of {limit}")]
    ResourceLimit { rows: usize, limit: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How the shared variable sits in two patterns: first letter is its slot
/// in the earlier pattern, second its slot in the later one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelType {
    OO,
    PP,
    SS,
    OP,
    OS,
    PS,
    PO,
    SP,
    SO,
}

impl RelType {
    pub const ALL: [RelType; 9] = [
        RelType::OO,
        RelType::PP,
        RelType::SS,
        RelType::OP,
        RelType::OS,
        RelType::PS,
        RelType::PO,
        RelType::SP,
        RelType::SO,
    ];

    pub fn from_slots(left: Slot, right: Slot) -> Self {
        use Slot::*;
        match (left, right) {
            (O, O) => RelType::OO,
            (P, P) => RelType::PP,
            (S, S) => RelType::SS,
            (O, P) => RelType::OP,
            (O, S) => RelType::OS,
            (P, S) => RelType::PS,
            (P, O) => RelType::PO,
            (S, P) => RelType::SP,
            (S, O) => RelType::SO,
        }
    }

    pub fn slots(self) -> (Slot, Slot) {
        use Slot::*;
        match self {
            RelType::OO => (O, O),
            RelType::PP => (P, P),
            RelType::SS => (S, S),
            RelType::OP => (O, P),
            RelType::OS => (O, S),
            RelType::PS => (P, S),
            RelType::PO => (P, O),
            RelType::SP => (S, P),
            RelType::SO => (S, O),
        }
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, r) = self.slots();
        write!(f, "{}{}", l.letter(), r.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relationship {
    pub left: usize,
    pub right: usize,
    pub rel_type: RelType,
    pub variable: String,
}

/// Links every pattern after the first to the closest earlier pattern it
/// shares a variable with. When several variables are shared, the first one
/// in the later pattern's S, P, O order is the join key; the others are
/// checked for equality after the join.
pub fn analyze_relationships(patterns: &[TriplePattern]) -> Result<Vec<Relationship>, QueryError> {
    let mut out = Vec::with_capacity(patterns.len().saturating_sub(1));
    for (j, later) in patterns.iter().enumerate().skip(1) {
        let found = (0..j).rev().find_map(|i| {
            later
                .var_slots()
                .find_map(|(right_slot, v)| patterns[i].slot_of(v).map(|left_slot| (i, left_slot, right_slot, v)))
        });
        let Some((i, left_slot, right_slot, v)) = found else {
            return Err(QueryError::DisconnectedPatterns { pattern: j });
        };
        out.push(Relationship {
            left: i,
            right: j,
            rel_type: RelType::from_slots(left_slot, right_slot),
            variable: v.to_owned(),
        });
    }
    Ok(out)
}

/// One pattern's matches as (key, value) rows: the key is the triple's ID in
/// the join slot, the value the IDs in the pattern's other variable slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingRelation {
    key_slot: Slot,
    value_slots: Vec<Slot>,
    // (slot a, slot b) pairs holding the same variable
    repeats: Vec<(Slot, Slot)>,
    keys: Vec<TermId>,
    values: Vec<TermId>,
}

impl BindingRelation {
    pub fn new(pattern: &TriplePattern, key_slot: Slot) -> Self {
        let vars: Vec<(Slot, &str)> = pattern.var_slots().collect();
        let value_slots = vars.iter().map(|(s, _)| *s).filter(|s| *s != key_slot).collect();
        let mut repeats = Vec::new();
        for (a, (sa, va)) in vars.iter().enumerate() {
            for (sb, vb) in &vars[a + 1..] {
                if va == vb {
                    repeats.push((*sa, *sb));
                }
            }
        }
        Self {
            key_slot,
            value_slots,
            repeats,
            keys: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn key_slot(&self) -> Slot {
        self.key_slot
    }

    pub fn value_slots(&self) -> &[Slot] {
        &self.value_slots
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[TermId] {
        &self.keys
    }

    pub fn value(&self, row: usize) -> &[TermId] {
        let w = self.value_slots.len();
        &self.values[row * w..row * w + w]
    }

    /// ID bound to `slot` in `row`, if that slot is the key or a value slot.
    pub fn slot_value(&self, row: usize, slot: Slot) -> Option<TermId> {
        if slot == self.key_slot {
            return Some(self.keys[row]);
        }
        self.value_slots
            .iter()
            .position(|s| *s == slot)
            .map(|k| self.value(row)[k])
    }

    /// Adds a matched triple; a triple that binds a repeated variable to two
    /// different terms is not a match and is skipped.
    pub fn push(&mut self, triple: &Triple) -> bool {
        let ids = triple.ids();
        if self.repeats.iter().any(|(a, b)| ids[a.index()] != ids[b.index()]) {
            return false;
        }
        self.keys.push(ids[self.key_slot.index()]);
        self.values.extend(self.value_slots.iter().map(|s| ids[s.index()]));
        true
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Self, usize) -> bool) {
        let w = self.value_slots.len();
        let mut write = 0;
        for row in 0..self.len() {
            if keep(self, row) {
                self.keys[write] = self.keys[row];
                for k in 0..w {
                    self.values[write * w + k] = self.values[row * w + k];
                }
                write += 1;
            }
        }
        self.keys.truncate(write);
        self.values.truncate(write * w);
    }

    /// Stable sort by key, permuting values alongside.
    pub fn sort_by_key(&mut self) {
        if is_sorted(&self.keys) {
            return;
        }
        let order = sorted_order(&self.keys);
        let w = self.value_slots.len();
        let keys = order.iter().map(|&i| self.keys[i as usize]).collect();
        let values = order
            .iter()
            .flat_map(|&i| self.values[i as usize * w..i as usize * w + w].iter().copied())
            .collect();
        self.keys = keys;
        self.values = values;
    }
}

/// Relation for the accepted triples at global `indices` of `chunk`.
pub fn build_relation(indices: &[u64], chunk: &TripleChunk<'_>, pattern: &TriplePattern, join_slot: Slot) -> BindingRelation {
    let mut rel = BindingRelation::new(pattern, join_slot);
    for &i in indices {
        rel.push(&chunk.triple((i - chunk.base_index()) as usize));
    }
    rel
}

fn is_sorted(keys: &[TermId]) -> bool {
    keys.windows(2).all(|w| w[0] <= w[1])
}

/// Row permutation ordering by (key, original position).
fn sorted_order(keys: &[TermId]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..keys.len() as u32).collect();
    if !is_sorted(keys) {
        order.sort_unstable_by_key(|&i| (keys[i as usize], i));
    }
    order
}

/// Inner equi-join of two key columns, as (left row, right row) pairs in
/// original row numbering. Pairs come out grouped by key, then by left row,
/// then by right row.
pub fn merge_join_keys(left: &[TermId], right: &[TermId], max_rows: usize) -> Result<Vec<(usize, usize)>, QueryError> {
    let lo = sorted_order(left);
    let ro = sorted_order(right);
    let mut runs: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut total = 0usize;
    let (mut a, mut b) = (0, 0);
    while a < lo.len() && b < ro.len() {
        let ka = left[lo[a] as usize];
        let kb = right[ro[b] as usize];
        if ka < kb {
            a += 1;
        } else if kb < ka {
            b += 1;
        } else {
            let a_end = a + lo[a..].iter().take_while(|&&i| left[i as usize] == ka).count();
            let b_end = b + ro[b..].iter().take_while(|&&i| right[i as usize] == kb).count();
            total = total.saturating_add((a_end - a) * (b_end - b));
            if total > max_rows {
                return Err(QueryError::ResourceLimit { rows: total, limit: max_rows });
            }
            runs.push((a, a_end, b, b_end));
            a = a_end;
            b = b_end;
        }
    }
    let mut out = Vec::with_capacity(total);
    for (a0, a1, b0, b1) in runs {
        for &l in &lo[a0..a1] {
            out.extend(ro[b0..b1].iter().map(|&r| (l as usize, r as usize)));
        }
    }
    Ok(out)
}

pub fn merge_join(left: &BindingRelation, right: &BindingRelation) -> Vec<(usize, usize)> {
    merge_join_keys(left.keys(), right.keys(), usize::MAX).expect("uncapped join")
}

/// Solution rows; `None` marks a variable left unbound by a UNION branch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingTable {
    columns: Vec<String>,
    cells: Vec<Option<TermId>>,
    len: usize,
}

impl BindingTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            cells: Vec::new(),
            len: 0,
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row(&self, i: usize) -> &[Option<TermId>] {
        let w = self.columns.len();
        &self.cells[i * w..i * w + w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<TermId>]> {
        (0..self.len).map(|i| self.row(i))
    }

    pub fn push_row(&mut self, row: impl IntoIterator<Item = Option<TermId>>) {
        let before = self.cells.len();
        self.cells.extend(row);
        assert_eq!(self.cells.len() - before, self.columns.len(), "row width mismatch");
        self.len += 1;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub workers: usize,
    pub max_rows: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            max_rows: DEFAULT_MAX_ROWS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    pub search: Duration,
    pub join: Duration,
}

/// A pattern with its key and the slot its relation is keyed on.
struct PatternSpec<'q> {
    pattern: &'q TriplePattern,
    key: PatternKey,
    join_slot: Slot,
}

fn join_slots(patterns: &[TriplePattern], rels: &[Relationship]) -> Vec<Slot> {
    let mut slots = Vec::with_capacity(patterns.len());
    if let Some(first) = patterns.first() {
        slots.push(first.var_slots().next().map_or(Slot::S, |(s, _)| s));
    }
    for rel in rels {
        slots.push(rel.rel_type.slots().1);
    }
    slots
}

/// One scan of `source` per 32 keys, materializing a relation per spec.
fn collect_relations<S: TripleSource + ?Sized>(
    source: &S,
    specs: &[PatternSpec<'_>],
    workers: usize,
) -> Result<Vec<BindingRelation>, QueryError> {
    let mut relations: Vec<BindingRelation> = specs
        .iter()
        .map(|s| BindingRelation::new(s.pattern, s.join_slot))
        .collect();
    for (batch_no, batch) in specs.chunks(MAX_KEYS).enumerate() {
        let keys: Vec<PatternKey> = batch.iter().map(|s| s.key).collect();
        let offset = batch_no * MAX_KEYS;
        kernel::scan_source(source, &keys, workers, |chunk, found| {
            for m in found {
                let triple = chunk.triple((m.index - chunk.base_index()) as usize);
                for q in m.marks.iter() {
                    relations[offset + q].push(&triple);
                }
            }
        })?;
    }
    Ok(relations)
}

fn apply_filters(group: &Group, relations: &mut [BindingRelation], dict: &Dictionary) -> Result<(), QueryError> {
    for filter in &group.filters {
        let Some((owner, slot)) = group
            .patterns
            .iter()
            .enumerate()
            .find_map(|(i, p)| p.slot_of(&filter.variable).map(|s| (i, s)))
        else {
            continue;
        };
        let mut verdicts: HashMap<TermId, bool> = HashMap::new();
        let mut failure = None;
        relations[owner].retain(|rel, row| {
            let id = rel.slot_value(row, slot).expect("filter slot is a variable slot");
            *verdicts.entry(id).or_insert_with(|| match dict.decode_id(id) {
                Ok(term) => filter.matches(term),
                Err(e) => {
                    failure.get_or_insert(e);
                    false
                }
            })
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    Ok(())
}

/// Joins a group's relations left to right.
fn join_group(
    group: &Group,
    rels: &[Relationship],
    mut relations: Vec<BindingRelation>,
    dict: &Dictionary,
    max_rows: usize,
) -> Result<BindingTable, QueryError> {
    apply_filters(group, &mut relations, dict)?;
    let Some(first) = group.patterns.first() else {
        return Ok(BindingTable::new(Vec::new()));
    };

    let mut first_vars: Vec<(String, Slot)> = Vec::new();
    for (slot, v) in first.var_slots() {
        if !first_vars.iter().any(|(n, _)| n == v) {
            first_vars.push((v.to_owned(), slot));
        }
    }
    let mut table = BindingTable::new(first_vars.iter().map(|(n, _)| n.clone()).collect());
    let base = &relations[0];
    for row in 0..base.len() {
        table.push_row(first_vars.iter().map(|(_, s)| base.slot_value(row, *s)));
    }

    for rel in rels {
        let pattern = &group.patterns[rel.right];
        let right = &relations[rel.right];
        let left_col = table.column_index(&rel.variable).expect("join variable bound on the left");
        let left_keys: Vec<TermId> = table
            .rows()
            .map(|r| r[left_col].expect("group rows are fully bound"))
            .collect();

        let mut checks: Vec<(usize, Slot)> = Vec::new();
        let mut added: Vec<(String, Slot)> = Vec::new();
        for (slot, v) in pattern.var_slots() {
            if v == rel.variable {
                continue;
            }
            if let Some(col) = table.column_index(v) {
                checks.push((col, slot));
            } else if !added.iter().any(|(n, _)| n == v) {
                added.push((v.to_owned(), slot));
            }
        }

        let pairs = merge_join_keys(&left_keys, right.keys(), max_rows)?;
        let mut columns = table.columns.clone();
        columns.extend(added.iter().map(|(n, _)| n.clone()));
        let mut next = BindingTable::new(columns);
        for (l, r) in pairs {
            let left_row = table.row(l);
            if checks.iter().any(|(col, slot)| left_row[*col] != right.slot_value(r, *slot)) {
                continue;
            }
            next.push_row(
                left_row
                    .iter()
                    .copied()
                    .chain(added.iter().map(|(_, s)| right.slot_value(r, *s))),
            );
        }
        table = next;
    }
    Ok(table)
}

fn group_specs<'q>(group: &'q Group, keys: &[PatternKey]) -> Result<(Vec<Relationship>, Vec<PatternSpec<'q>>), QueryError> {
    let rels = analyze_relationships(&group.patterns)?;
    let slots = join_slots(&group.patterns, &rels);
    let specs = group
        .patterns
        .iter()
        .zip(keys)
        .zip(slots)
        .map(|((pattern, &key), join_slot)| PatternSpec { pattern, key, join_slot })
        .collect();
    Ok((rels, specs))
}

/// Evaluates one group (no UNION) against `source`.
pub fn evaluate_group<S: TripleSource + ?Sized>(
    group: &Group,
    source: &S,
    dict: &Dictionary,
    opts: &EvalOptions,
) -> Result<BindingTable, QueryError> {
    let query = Query {
        prefixes: Default::default(),
        projection: Projection::All,
        distinct: false,
        groups: vec![group.clone()],
    };
    let compiled = compile_keys(&query, dict).remove(0);
    let (rels, specs) = group_specs(group, &compiled.keys)?;
    if !compiled.satisfiable {
        return Ok(BindingTable::new(group.variables()));
    }
    let relations = collect_relations(source, &specs, opts.workers)?;
    join_group(group, &rels, relations, dict, opts.max_rows)
}

/// Concatenates branch results over the union of their columns.
pub fn evaluate_union(tables: Vec<BindingTable>) -> BindingTable {
    if tables.len() == 1 {
        return tables.into_iter().next().unwrap();
    }
    let mut columns: Vec<String> = Vec::new();
    for t in &tables {
        for c in &t.columns {
            if !columns.contains(c) {
                columns.push(c.clone());
            }
        }
    }
    let mut out = BindingTable::new(columns);
    for t in &tables {
        let map: Vec<Option<usize>> = out.columns.iter().map(|c| t.column_index(c)).collect();
        for row in t.rows() {
            out.push_row(map.iter().map(|m| m.and_then(|i| row[i])));
        }
    }
    out
}

pub fn project_distinct(table: &BindingTable, projection: &Projection, distinct: bool) -> BindingTable {
    let picks: Vec<usize> = match projection {
        Projection::All => (0..table.columns.len()).collect(),
        Projection::Vars(vars) => vars
            .iter()
            .map(|v| table.column_index(v).expect("projected variable is a table column"))
            .collect(),
    };
    let mut out = BindingTable::new(picks.iter().map(|&i| table.columns[i].clone()).collect());
    let mut seen: HashSet<Vec<Option<TermId>>> = HashSet::new();
    for row in table.rows() {
        let projected: Vec<Option<TermId>> = picks.iter().map(|&i| row[i]).collect();
        if distinct && !seen.insert(projected.clone()) {
            continue;
        }
        out.push_row(projected);
    }
    out
}

/// Writes the table as TSV: a `?var` header line, then one line per row with
/// terms in N-Triples form and unbound cells empty.
pub fn decode_table<W: Write>(table: &BindingTable, dict: &Dictionary, out: &mut W) -> Result<(), QueryError> {
    let header: Vec<String> = table.columns.iter().map(|c| format!("?{c}")).collect();
    writeln!(out, "{}", header.join("\t"))?;
    let mut line = String::new();
    for row in table.rows() {
        line.clear();
        for (k, cell) in row.iter().enumerate() {
            if k > 0 {
                line.push('\t');
            }
            if let Some(id) = cell {
                line.push_str(dict.decode_id(*id)?.as_str());
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Full pipeline: compile, one shared multi-key scan for every pattern of
/// every branch, per-branch filter and join, union, projection.
pub fn execute<S: TripleSource + ?Sized>(
    query: &Query,
    source: &S,
    dict: &Dictionary,
    opts: &EvalOptions,
) -> Result<(BindingTable, Timings), QueryError> {
    let compiled = compile_keys(query, dict);
    let mut plans = Vec::with_capacity(query.groups.len());
    for (group, c) in query.groups.iter().zip(&compiled) {
        plans.push(group_specs(group, &c.keys)?);
    }

    let search_start = Instant::now();
    let mut all_specs: Vec<PatternSpec<'_>> = Vec::new();
    let mut ranges = Vec::with_capacity(plans.len());
    for ((_, specs), c) in plans.iter_mut().zip(&compiled) {
        let start = all_specs.len();
        if c.satisfiable {
            all_specs.append(specs);
        }
        ranges.push(start..all_specs.len());
    }
    let mut relations = if all_specs.is_empty() {
        Vec::new()
    } else {
        collect_relations(source, &all_specs, opts.workers)?
    };
    let search = search_start.elapsed();

    let join_start = Instant::now();
    let mut tables = Vec::with_capacity(query.groups.len());
    for (((group, (rels, _)), c), range) in query.groups.iter().zip(&plans).zip(&compiled).zip(ranges) {
        if !c.satisfiable {
            tables.push(BindingTable::new(group.variables()));
            continue;
        }
        let group_rels: Vec<BindingRelation> = relations.drain(..range.len()).collect();
        tables.push(join_group(group, rels, group_rels, dict, opts.max_rows)?);
    }
    let table = project_distinct(&evaluate_union(tables), &query.projection, query.distinct);
    let join = join_start.elapsed();
    Ok((table, Timings { search, join }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::{parse_query, PatternTerm};
    use crate::store::MemoryTriples;
    use crate::TermToken;

    fn v(name: &str) -> PatternTerm {
        PatternTerm::Var(name.into())
    }

    fn t(iri: &str) -> PatternTerm {
        PatternTerm::Term(TermToken::iri(iri))
    }

    #[test]
    fn listing5_chain() {
        let q = parse_query(
            "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n\
             PREFIX ub: <http://www.lehigh.edu/~zhp2/2004/0401/univ-bench.owl#>\n\
             SELECT ?X, ?Y1, ?Y2, ?Y3 WHERE {\n\
               ?X rdf:type ub:Professor .\n\
               ?X ub:worksFor <http://www.Depart0.University0.edu> .\n\
               ?X ub:name ?Y1 .\n\
               ?X ub:emailAddress ?Y2 .\n\
               ?X ub:telephone ?Y3 .\n\
             }",
        )
        .unwrap();
        let classes: Vec<&str> = q.groups[0].patterns.iter().map(|p| p.class().label()).collect();
        assert_eq!(classes, vec!["?PO", "?PO", "?P?", "?P?", "?P?"]);
        let rels = analyze_relationships(&q.groups[0].patterns).unwrap();
        let got: Vec<(usize, usize, RelType)> = rels.iter().map(|r| (r.left, r.right, r.rel_type)).collect();
        assert_eq!(
            got,
            vec![(0, 1, RelType::SS), (1, 2, RelType::SS), (2, 3, RelType::SS), (3, 4, RelType::SS)]
        );
    }

    #[test]
    fn os_and_disconnected() {
        let same = "http://www.w3.org/2002/07/owl#sameAs";
        let pats = vec![
            TriplePattern::new(v("subject"), t(same), v("object")),
            TriplePattern::new(v("object"), t(same), v("object2")),
        ];
        let rels = analyze_relationships(&pats).unwrap();
        assert_eq!(rels[0].rel_type, RelType::OS);
        assert_eq!(rels[0].variable, "object");

        let pats = vec![
            TriplePattern::new(v("a"), t(same), v("b")),
            TriplePattern::new(v("c"), t(same), v("d")),
        ];
        assert!(matches!(
            analyze_relationships(&pats),
            Err(QueryError::DisconnectedPatterns { pattern: 1 })
        ));
    }

    #[test]
    fn nearest_earlier_partner() {
        let p = "http://p";
        let pats = vec![
            TriplePattern::new(v("a"), t(p), v("b")),
            TriplePattern::new(v("b"), t(p), v("c")),
            TriplePattern::new(v("x"), t(p), v("a")),
        ];
        let rels = analyze_relationships(&pats).unwrap();
        assert_eq!((rels[1].left, rels[1].rel_type), (0, RelType::SO));
    }

    #[test]
    fn rule11_relation_and_join() {
        let chunk = TripleChunk::from_triples(
            &[
                Triple::new(76, 84, 56),
                Triple::new(31, 84, 77),
                Triple::new(56, 84, 78),
                Triple::new(56, 84, 77),
                Triple::new(44, 83, 2),
            ],
            0,
        );
        let sco = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
        let first = TriplePattern::new(v("x"), t(sco), v("y"));
        let rel1 = build_relation(&[0, 1, 2, 3], &chunk, &first, Slot::O);
        assert_eq!(rel1.keys(), &[TermId(56), TermId(77), TermId(78), TermId(77)]);
        let subjects: Vec<TermId> = (0..4).map(|r| rel1.value(r)[0]).collect();
        assert_eq!(subjects, vec![TermId(76), TermId(31), TermId(56), TermId(56)]);

        let second = TriplePattern::new(v("y"), t(sco), v("z"));
        let rel2 = build_relation(&[2, 3], &chunk, &second, Slot::S);
        let pairs = merge_join(&rel1, &rel2);
        let joined: Vec<(TermId, TermId)> = pairs.iter().map(|&(l, r)| (rel1.value(l)[0], rel2.value(r)[0])).collect();
        assert_eq!(joined, vec![(TermId(76), TermId(78)), (TermId(76), TermId(77))]);

        let empty = build_relation(&[], &chunk, &first, Slot::O);
        assert!(empty.is_empty());
    }

    #[test]
    fn merge_join_runs_and_cap() {
        let l = [TermId(3), TermId(1), TermId(3)];
        let r = [TermId(3), TermId(2), TermId(3), TermId(1)];
        let pairs = merge_join_keys(&l, &r, 100).unwrap();
        assert_eq!(pairs, vec![(1, 3), (0, 0), (0, 2), (2, 0), (2, 2)]);
        assert!(merge_join_keys(&[TermId(1)], &[TermId(2)], 100).unwrap().is_empty());
        assert!(matches!(
            merge_join_keys(&l, &r, 4),
            Err(QueryError::ResourceLimit { rows: 5, limit: 4 })
        ));
    }

    #[test]
    fn repeated_variable_within_pattern() {
        let pat = TriplePattern::new(v("x"), t("http://p"), v("x"));
        let mut rel = BindingRelation::new(&pat, Slot::S);
        assert!(rel.push(&Triple::new(5, 1, 5)));
        assert!(!rel.push(&Triple::new(5, 1, 6)));
        assert_eq!(rel.len(), 1);
    }

    #[test]
    fn union_projection_distinct() {
        let mut a = BindingTable::new(vec!["x".into(), "y".into()]);
        a.push_row([Some(TermId(1)), Some(TermId(2))]);
        a.push_row([Some(TermId(1)), Some(TermId(3))]);
        let mut b = BindingTable::new(vec!["z".into()]);
        b.push_row([Some(TermId(9))]);
        let u = evaluate_union(vec![a.clone(), b]);
        assert_eq!(u.columns(), &["x", "y", "z"]);
        assert_eq!(u.len(), 3);
        assert_eq!(u.row(2), &[None, None, Some(TermId(9))]);
        assert_eq!(evaluate_union(vec![a.clone()]), a);

        let p = project_distinct(&a, &Projection::Vars(vec!["x".into()]), false);
        assert_eq!(p.len(), 2);
        assert_eq!(p.columns(), &["x"]);
        let d = project_distinct(&a, &Projection::Vars(vec!["x".into()]), true);
        assert_eq!(d.len(), 1);
    }

    fn rule11_dict() -> (Dictionary, Vec<Triple>) {
        let mut d = Dictionary::new();
        let mut ids = HashMap::new();
        let sco = TermToken::iri("http://www.w3.org/2000/01/rdf-schema#subClassOf");
        let mut triples = Vec::new();
        for (s, o) in [("A", "C1"), ("B", "C2"), ("C1", "C3"), ("C1", "C2")] {
            let s_id = d.encode_term(&TermToken::iri(&format!("http://e/{s}")), crate::Role::Subject).unwrap();
            let p_id = d.encode_term(&sco, crate::Role::Predicate).unwrap();
            let o_id = d.encode_term(&TermToken::iri(&format!("http://e/{o}")), crate::Role::Object).unwrap();
            ids.insert(s, s_id);
            triples.push(Triple { subject: s_id, predicate: p_id, object: o_id });
        }
        (d, triples)
    }

    #[test]
    fn end_to_end_small() {
        let (dict, triples) = rule11_dict();
        let src = MemoryTriples::new(&triples).with_chunk_triples(2);
        let q = parse_query(
            "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n\
             SELECT ?x ?z WHERE { ?x rdfs:subClassOf ?y . ?y rdfs:subClassOf ?z . }",
        )
        .unwrap();
        let (table, _) = execute(&q, &src, &dict, &EvalOptions::default()).unwrap();
        let mut out = Vec::new();
        decode_table(&table, &dict, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "?x\t?z\n<http://e/A>\t<http://e/C3>\n<http://e/A>\t<http://e/C2>\n"
        );

        let g = &q.groups[0];
        let single = Group { patterns: vec![g.patterns[0].clone()], filters: vec![] };
        let t = evaluate_group(&single, &src, &dict, &EvalOptions::default()).unwrap();
        assert_eq!(t.len(), 4);

        let q = parse_query("SELECT * WHERE { ?x <http://unknown> ?z }").unwrap();
        let (table, _) = execute(&q, &src, &dict, &EvalOptions::default()).unwrap();
        let mut out = Vec::new();
        decode_table(&table, &dict, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "?x\t?z\n");
    }

    #[test]
    fn filter_empties_group() {
        let (dict, triples) = rule11_dict();
        let src = MemoryTriples::new(&triples);
        let q = parse_query(
            "SELECT * WHERE { ?x <http://www.w3.org/2000/01/rdf-schema#subClassOf> ?y . FILTER(regex(str(?x), \"nomatch\")) }",
        )
        .unwrap();
        let (table, _) = execute(&q, &src, &dict, &EvalOptions::default()).unwrap();
        assert!(table.is_empty());
    }
}
