//! Deterministic synthetic N-Triples with controlled role cardinalities.
//!
//! Terms come from three fixed pools (subjects, predicates, objects). The
//! first `max(a, b, c)` statements walk all three pools so every pool member
//! is used; the remaining statements pick terms at random, following a small
//! schema per predicate so that the query corpus and entailment rules find
//! something to join. Generated IRIs are padded to the requested mean length.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::entailment::{RDFS_DOMAIN, RDFS_RANGE, RDFS_SUB_CLASS_OF, RDFS_SUB_PROPERTY_OF, RDF_TYPE};

const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
const FOAF: &str = "http://xmlns.com/foaf/0.1/";
const DIG: &str = "http://dig.csail.mit.edu/data#DIG";

/// Vocabulary the query corpus refers to, always first in the predicate pool.
const VOCABULARY: [&str; 12] = [
    RDF_TYPE,
    OWL_SAME_AS,
    "http://xmlns.com/foaf/0.1/name",
    RDFS_SUB_CLASS_OF,
    "http://xmlns.com/foaf/0.1/primaryTopic",
    "http://dbpedia.org/property/occupation",
    "http://xmlns.com/foaf/0.1/firstname",
    "http://vocab.org/relationship/spouseOf",
    "http://xmlns.com/foaf/0.1/knows",
    RDFS_DOMAIN,
    RDFS_RANGE,
    RDFS_SUB_PROPERTY_OF,
];

/// Schema predicates are drawn this much less often than the others.
const SCHEMA_WEIGHT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("subject, predicate and object counts must be positive when triples > 0")]
    EmptyPool,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub triples: u64,
    pub subjects: usize,
    pub predicates: usize,
    pub objects: usize,
    pub seed: u64,
    pub iri_len: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            triples: 10_000,
            subjects: 1_000,
            predicates: 40,
            objects: 1_500,
            seed: 0,
            iri_len: 48,
        }
    }
}

fn pad(mut iri: String, len: usize) -> String {
    if iri.len() < len {
        iri.push('/');
        let alphabet = b"abcdefghijklmnopqrstuvwxyz";
        let mut k = 0;
        while iri.len() < len {
            iri.push(alphabet[k % alphabet.len()] as char);
            k += 1;
        }
    }
    iri
}

fn iri_token(iri: &str) -> String {
    format!("<{iri}>")
}

fn class_iri(k: usize, len: usize) -> String {
    if k == 0 {
        format!("{FOAF}Person")
    } else {
        pad(format!("http://example.org/class/C{k}"), len)
    }
}

fn entity_iri(k: usize, len: usize) -> String {
    let base = if k.is_multiple_of(11) {
        format!("http://dbpedia.org/resource/Croatia_{k}")
    } else if k.is_multiple_of(7) {
        format!("{FOAF}doc/{k}")
    } else if k.is_multiple_of(3) {
        format!("http://example.org/us/r{k}")
    } else {
        format!("http://example.org/resource/r{k}")
    };
    pad(base, len)
}

fn predicate_iri(k: usize, len: usize) -> String {
    match VOCABULARY.get(k) {
        Some(v) => (*v).to_owned(),
        None if k.is_multiple_of(2) => pad(format!("http://example.org/vocab/member{k}"), len),
        None => pad(format!("http://example.org/vocab/prop{k}"), len),
    }
}

fn literal(k: usize) -> String {
    match k % 10 {
        0 => format!("\"Croatia {k}\""),
        1 => format!("\"name {k}\"@en"),
        2 => format!("\"{k}\"^^<http://www.w3.org/2001/XMLSchema#integer>"),
        _ => format!("\"name {k}\""),
    }
}

/// Term pools plus the index ranges each schema role draws from.
struct Pools {
    subjects: Vec<String>,
    predicates: Vec<String>,
    objects: Vec<String>,
    // ranges into `subjects`
    s_preds: std::ops::Range<usize>,
    s_classes: std::ops::Range<usize>,
    s_entities: std::ops::Range<usize>,
    // ranges into `objects`
    o_classes: std::ops::Range<usize>,
    o_preds: std::ops::Range<usize>,
    o_entities: std::ops::Range<usize>,
    o_literals: std::ops::Range<usize>,
}

impl Pools {
    fn new(p: &GenParams) -> Self {
        let (a, b, c, len) = (p.subjects, p.predicates, p.objects, p.iri_len);
        let predicates: Vec<String> = (0..b).map(|k| predicate_iri(k, len)).collect();

        let o_class_n = (c / 50).max(1).min(c);
        let o_pred_n = b.min(c / 20).min(c - o_class_n);
        let s_pred_n = b.min(a / 20);
        let s_class_n = o_class_n.min(a.saturating_sub(1 + s_pred_n) / 10);
        let s_ent_n = a.saturating_sub(1 + s_pred_n + s_class_n);
        let o_ent_n = s_ent_n.min((c - o_class_n - o_pred_n) / 3);

        let mut subjects = Vec::with_capacity(a);
        if a > 0 {
            subjects.push(DIG.to_owned());
        }
        let s_preds = subjects.len()..subjects.len() + s_pred_n;
        subjects.extend(predicates[..s_pred_n].iter().cloned());
        let s_classes = subjects.len()..subjects.len() + s_class_n;
        subjects.extend((0..s_class_n).map(|k| class_iri(k, len)));
        let s_entities = subjects.len()..subjects.len() + s_ent_n;
        subjects.extend((0..s_ent_n).map(|k| entity_iri(k, len)));

        let mut objects = Vec::with_capacity(c);
        let o_classes = 0..o_class_n;
        objects.extend((0..o_class_n).map(|k| class_iri(k, len)));
        let o_preds = objects.len()..objects.len() + o_pred_n;
        objects.extend(predicates[..o_pred_n].iter().cloned());
        let o_entities = objects.len()..objects.len() + o_ent_n;
        objects.extend((0..o_ent_n).map(|k| entity_iri(k, len)));
        let o_literals = objects.len()..c;
        objects.extend((0..c - objects.len()).map(literal));

        let subjects = subjects.iter().map(|s| iri_token(s)).collect();
        let predicates = predicates.iter().map(|s| iri_token(s)).collect();
        let objects = objects
            .into_iter()
            .enumerate()
            .map(|(i, s)| if o_literals.contains(&i) { s } else { iri_token(&s) })
            .collect();
        Self {
            subjects,
            predicates,
            objects,
            s_preds,
            s_classes,
            s_entities,
            o_classes,
            o_preds,
            o_entities,
            o_literals,
        }
    }
}

fn pick(rng: &mut ChaCha8Rng, range: &std::ops::Range<usize>, whole: usize) -> usize {
    if range.is_empty() {
        rng.gen_range(0..whole)
    } else {
        rng.gen_range(range.clone())
    }
}

/// Writes `params.triples` statements to `out`; same params, same bytes.
pub fn generate<W: Write>(params: &GenParams, out: &mut W) -> Result<u64, GenError> {
    if params.triples == 0 {
        return Ok(0);
    }
    if params.subjects == 0 || params.predicates == 0 || params.objects == 0 {
        return Err(GenError::EmptyPool);
    }
    let pools = Pools::new(params);
    let (a, b, c) = (params.subjects, params.predicates, params.objects);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let weights: Vec<f64> = (0..b)
        .map(|k| match VOCABULARY.get(k) {
            Some(&v) if v == RDFS_DOMAIN || v == RDFS_RANGE || v == RDFS_SUB_PROPERTY_OF => SCHEMA_WEIGHT,
            _ => 1.0,
        })
        .collect();
    let total: f64 = weights.iter().sum();

    let sweep = a.max(b).max(c) as u64;
    let mut line = String::new();
    for i in 0..params.triples {
        let (s, p, o) = if i < sweep {
            let i = i as usize;
            (i % a, i % b, i % c)
        } else {
            let mut x = rng.gen::<f64>() * total;
            let mut p = b - 1;
            for (k, w) in weights.iter().enumerate() {
                if x < *w {
                    p = k;
                    break;
                }
                x -= w;
            }
            let (s, o) = match VOCABULARY.get(p).copied() {
                Some(RDF_TYPE) => {
                    let o = if rng.gen_bool(0.3) { 0 } else { pick(&mut rng, &pools.o_classes, c) };
                    (pick(&mut rng, &pools.s_entities, a), o)
                }
                Some(OWL_SAME_AS) => {
                    let shared = 0..pools.o_entities.len().min(pools.s_entities.len());
                    let s = if rng.gen_bool(0.5) && !shared.is_empty() {
                        pools.s_entities.start + rng.gen_range(shared)
                    } else {
                        pick(&mut rng, &pools.s_entities, a)
                    };
                    (s, pick(&mut rng, &pools.o_entities, c))
                }
                Some(RDFS_SUB_CLASS_OF) => (pick(&mut rng, &pools.s_classes, a), pick(&mut rng, &pools.o_classes, c)),
                Some(RDFS_DOMAIN) | Some(RDFS_RANGE) => {
                    (pick(&mut rng, &pools.s_preds, a), pick(&mut rng, &pools.o_classes, c))
                }
                Some(RDFS_SUB_PROPERTY_OF) => (pick(&mut rng, &pools.s_preds, a), pick(&mut rng, &pools.o_preds, c)),
                Some(v) if v.ends_with("name") => {
                    (pick(&mut rng, &pools.s_entities, a), pick(&mut rng, &pools.o_literals, c))
                }
                _ => {
                    let s = if rng.gen_bool(0.01) { 0 } else { rng.gen_range(0..a) };
                    (s, rng.gen_range(0..c))
                }
            };
            (s, p, o)
        };
        line.clear();
        line.push_str(&pools.subjects[s]);
        line.push(' ');
        line.push_str(&pools.predicates[p]);
        line.push(' ');
        line.push_str(&pools.objects[o]);
        line.push_str(" .\n");
        out.write_all(line.as_bytes())?;
    }
    Ok(params.triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn run(p: &GenParams) -> String {
        let mut buf = Vec::new();
        generate(p, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_and_reproducible() {
        let p = GenParams { triples: 0, ..Default::default() };
        assert_eq!(run(&p), "");
        let p = GenParams::default();
        assert_eq!(run(&p), run(&p));
        let q = GenParams { seed: 1, ..p };
        assert_ne!(run(&p), run(&q));
    }

    #[test]
    fn exact_cardinalities() {
        let p = GenParams { triples: 5_000, subjects: 700, predicates: 30, objects: 900, ..Default::default() };
        let text = run(&p);
        let (mut s, mut pr, mut o) = (HashSet::new(), HashSet::new(), HashSet::new());
        for line in text.lines() {
            let st = match crate::nt_parser::parse_line(line, 1).unwrap() {
                crate::nt_parser::Parsed::Statement(st) => st,
                crate::nt_parser::Parsed::Skip => unreachable!(),
            };
            s.insert(st.subject);
            pr.insert(st.predicate);
            o.insert(st.object);
        }
        assert_eq!((s.len(), pr.len(), o.len()), (700, 30, 900));
    }

    #[test]
    fn zero_pool_rejected() {
        let p = GenParams { subjects: 0, ..Default::default() };
        assert!(matches!(generate(&p, &mut Vec::new()), Err(GenError::EmptyPool)));
    }
}
