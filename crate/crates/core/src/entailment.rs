//! Two-stage RDFS entailment for the rules whose premise has two triples.
//!
//! Stage 1 searches the schema premise (e.g. `?p rdfs:domain ?D`) and groups
//! its matches by the linking term. Stage 2 issues one search key per
//! distinct link, groups those matches the same way, and the two tables are
//! joined on the link to instantiate the conclusion. One application only;
//! no fixpoint.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dictionary::{Dictionary, DictionaryError, Role, TermId};
use crate::kernel::{self, KernelError, PatternKey, MAX_KEYS};
use crate::nt_parser::TermToken;
use crate::sparql::Slot;
use crate::store::{Triple, TripleSource};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
pub const RDFS_SUB_PROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
pub const RDFS_SUB_CLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";

#[derive(Debug, Error)]
pub enum EntailError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
}

#[derive(Debug, Error)]
#[error("unknown rule {0:?}; expected one of 2, 3, 5, 7, 9, 11")]
pub struct UnknownRule(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntailmentRule {
    /// `s p o` and `p rdfs:domain D` give `s rdf:type D`.
    R2,
    /// `s p o` and `p rdfs:range R` give `o rdf:type R`.
    R3,
    /// `p rdfs:subPropertyOf q` and `q rdfs:subPropertyOf r` give `p rdfs:subPropertyOf r`.
    R5,
    /// `s p o` and `p rdfs:subPropertyOf q` give `s q o`.
    R7,
    /// `s rdf:type x` and `x rdfs:subClassOf y` give `s rdf:type y`.
    R9,
    /// `x rdfs:subClassOf y` and `y rdfs:subClassOf z` give `x rdfs:subClassOf z`.
    R11,
}

/// Where stage 2 puts the link term in its key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage2Link {
    /// `(link, fixed predicate, *)`
    Subject(&'static str),
    /// `(*, link, *)`
    Predicate,
}

impl EntailmentRule {
    pub const ALL: [EntailmentRule; 6] = [
        EntailmentRule::R2,
        EntailmentRule::R3,
        EntailmentRule::R5,
        EntailmentRule::R7,
        EntailmentRule::R9,
        EntailmentRule::R11,
    ];

    pub fn number(self) -> u8 {
        match self {
            EntailmentRule::R2 => 2,
            EntailmentRule::R3 => 3,
            EntailmentRule::R5 => 5,
            EntailmentRule::R7 => 7,
            EntailmentRule::R9 => 9,
            EntailmentRule::R11 => 11,
        }
    }

    /// Fixed predicate of the stage-1 premise.
    pub fn stage1_predicate(self) -> &'static str {
        match self {
            EntailmentRule::R2 => RDFS_DOMAIN,
            EntailmentRule::R3 => RDFS_RANGE,
            EntailmentRule::R5 | EntailmentRule::R7 => RDFS_SUB_PROPERTY_OF,
            EntailmentRule::R9 => RDF_TYPE,
            EntailmentRule::R11 => RDFS_SUB_CLASS_OF,
        }
    }

    /// (link slot, partner slot) within a stage-1 triple.
    fn stage1_slots(self) -> (Slot, Slot) {
        match self {
            EntailmentRule::R2 | EntailmentRule::R3 | EntailmentRule::R7 => (Slot::S, Slot::O),
            EntailmentRule::R5 | EntailmentRule::R9 | EntailmentRule::R11 => (Slot::O, Slot::S),
        }
    }

    fn stage2_link(self) -> Stage2Link {
        match self {
            EntailmentRule::R2 | EntailmentRule::R3 | EntailmentRule::R7 => Stage2Link::Predicate,
            EntailmentRule::R5 => Stage2Link::Subject(RDFS_SUB_PROPERTY_OF),
            EntailmentRule::R9 | EntailmentRule::R11 => Stage2Link::Subject(RDFS_SUB_CLASS_OF),
        }
    }

    /// Partner slots within a stage-2 triple.
    fn stage2_partner(self) -> (Slot, Option<Slot>) {
        match self {
            EntailmentRule::R2 => (Slot::S, None),
            EntailmentRule::R7 => (Slot::S, Some(Slot::O)),
            _ => (Slot::O, None),
        }
    }

    /// Fixed predicate of the conclusion; `None` when it comes from a binding.
    pub fn conclusion_predicate(self) -> Option<&'static str> {
        match self {
            EntailmentRule::R2 | EntailmentRule::R3 | EntailmentRule::R9 => Some(RDF_TYPE),
            EntailmentRule::R5 => Some(RDFS_SUB_PROPERTY_OF),
            EntailmentRule::R7 => None,
            EntailmentRule::R11 => Some(RDFS_SUB_CLASS_OF),
        }
    }

    fn conclude(self, p1: Partner, p2: Partner, fixed: TermId) -> Triple {
        match self {
            // (s, type, D) / (o, type, R)
            EntailmentRule::R2 | EntailmentRule::R3 => Triple { subject: p2.0, predicate: fixed, object: p1.0 },
            // (s, q, o)
            EntailmentRule::R7 => Triple { subject: p2.0, predicate: p1.0, object: p2.1 },
            // (x, pred, z)
            EntailmentRule::R5 | EntailmentRule::R9 | EntailmentRule::R11 => {
                Triple { subject: p1.0, predicate: fixed, object: p2.0 }
            }
        }
    }
}

impl fmt::Display for EntailmentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.number())
    }
}

impl FromStr for EntailmentRule {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix(['R', 'r']).unwrap_or(s);
        match digits {
            "2" => Ok(EntailmentRule::R2),
            "3" => Ok(EntailmentRule::R3),
            "5" => Ok(EntailmentRule::R5),
            "7" => Ok(EntailmentRule::R7),
            "9" => Ok(EntailmentRule::R9),
            "11" => Ok(EntailmentRule::R11),
            _ => Err(UnknownRule(s.to_owned())),
        }
    }
}

/// Bound partner terms; the second is [`TermId::WILDCARD`] unless the rule
/// carries two (R7's subject and object).
pub type Partner = (TermId, TermId);

/// Link term -> deduplicated partners, kept in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageTable {
    map: BTreeMap<TermId, Vec<Partner>>,
    seen: HashSet<(TermId, Partner)>,
}

impl StageTable {
    pub fn insert(&mut self, link: TermId, partner: Partner) {
        if self.seen.insert((link, partner)) {
            self.map.entry(link).or_default().push(partner);
        }
    }

    /// Number of distinct links.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn links(&self) -> impl Iterator<Item = TermId> + '_ {
        self.map.keys().copied()
    }

    pub fn partners(&self, link: TermId) -> &[Partner] {
        self.map.get(&link).map_or(&[], Vec::as_slice)
    }

    /// Partners reduced to their first term, for single-partner rules.
    pub fn partner_ids(&self, link: TermId) -> Vec<TermId> {
        self.partners(link).iter().map(|p| p.0).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &[Partner])> {
        self.map.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EntailOptions {
    pub workers: usize,
    /// Send only distinct link values to stage 2.
    pub dedup_links: bool,
    /// Keys per stage-2 scan, at most [`MAX_KEYS`].
    pub batch_keys: usize,
}

impl Default for EntailOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            dedup_links: true,
            batch_keys: MAX_KEYS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleCounts {
    /// Triples accepted by stage 1.
    pub res1: usize,
    /// Distinct stage-1 link values.
    pub dist1: usize,
    /// Distinct triples accepted by stage 2.
    pub res2: usize,
    /// Distinct stage-2 link values with at least one partner.
    pub dist2: usize,
    /// Distinct conclusions.
    pub all: usize,
}

impl RuleCounts {
    pub const HEADER: &'static str = "res1\tdist1\tres2\tdist2\tall";
}

impl fmt::Display for RuleCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}\t{}", self.res1, self.dist1, self.res2, self.dist2, self.all)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleRun {
    /// Global indices accepted by stage 1, ascending.
    pub stage1_indices: Vec<u64>,
    pub table1: StageTable,
    /// Global indices accepted by stage 2, ascending and distinct.
    pub stage2_indices: Vec<u64>,
    pub table2: StageTable,
    /// Distinct conclusions in link, stage-1 partner, stage-2 partner order.
    pub conclusions: Vec<Triple>,
}

pub fn report_counts(run: &RuleRun) -> RuleCounts {
    RuleCounts {
        res1: run.stage1_indices.len(),
        dist1: run.table1.len(),
        res2: run.stage2_indices.len(),
        dist2: run.table2.len(),
        all: run.conclusions.len(),
    }
}

fn slot_id(t: &Triple, s: Slot) -> TermId {
    t.ids()[s.index()]
}

/// Applies `rule` once to the triples of `source`. A conclusion predicate
/// missing from `dict` is encoded so the result can be decoded.
pub fn run_rule<S: TripleSource + ?Sized>(
    rule: EntailmentRule,
    source: &S,
    dict: &mut Dictionary,
    opts: &EntailOptions,
) -> Result<RuleRun, EntailError> {
    let mut run = RuleRun::default();
    let Some(pred1) = dict.lookup(&TermToken::iri(rule.stage1_predicate()).into_string()) else {
        return Ok(run);
    };

    let (link1, partner1) = rule.stage1_slots();
    let mut links: Vec<TermId> = Vec::new();
    let key1 = PatternKey { subject: TermId::WILDCARD, predicate: pred1, object: TermId::WILDCARD };
    kernel::scan_source(source, &[key1], opts.workers, |chunk, found| {
        for m in found {
            let t = chunk.triple((m.index - chunk.base_index()) as usize);
            run.stage1_indices.push(m.index);
            run.table1.insert(slot_id(&t, link1), (slot_id(&t, partner1), TermId::WILDCARD));
            links.push(slot_id(&t, link1));
        }
    })?;
    if opts.dedup_links {
        links = run.table1.links().collect();
    }

    let template = match rule.stage2_link() {
        Stage2Link::Predicate => None,
        Stage2Link::Subject(iri) => match dict.lookup(&TermToken::iri(iri).into_string()) {
            Some(id) => Some(id),
            None => return Ok(run),
        },
    };
    let keys: Vec<PatternKey> = links
        .iter()
        .map(|&link| match template {
            None => PatternKey { subject: TermId::WILDCARD, predicate: link, object: TermId::WILDCARD },
            Some(pred) => PatternKey { subject: link, predicate: pred, object: TermId::WILDCARD },
        })
        .collect();
    let link2 = if template.is_some() { Slot::S } else { Slot::P };
    let (pa, pb) = rule.stage2_partner();
    let batch = opts.batch_keys.clamp(1, MAX_KEYS);
    let mut stage2 = Vec::new();
    for keys in keys.chunks(batch) {
        kernel::scan_source(source, keys, opts.workers, |chunk, found| {
            for m in found {
                let t = chunk.triple((m.index - chunk.base_index()) as usize);
                stage2.push(m.index);
                let partner = (slot_id(&t, pa), pb.map_or(TermId::WILDCARD, |s| slot_id(&t, s)));
                run.table2.insert(slot_id(&t, link2), partner);
            }
        })?;
    }
    stage2.sort_unstable();
    stage2.dedup();
    run.stage2_indices = stage2;

    let mut fixed = TermId::WILDCARD;
    let mut seen = HashSet::new();
    for (link, firsts) in run.table1.iter() {
        let seconds = run.table2.partners(link);
        if seconds.is_empty() {
            continue;
        }
        if fixed.is_wildcard() {
            if let Some(iri) = rule.conclusion_predicate() {
                fixed = dict.encode_term(&TermToken::iri(iri), Role::Predicate)?;
            }
        }
        for &p1 in firsts {
            for &p2 in seconds {
                let t = rule.conclude(p1, p2, fixed);
                if seen.insert(t) {
                    run.conclusions.push(t);
                }
            }
        }
    }
    Ok(run)
}
