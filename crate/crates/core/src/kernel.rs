//! Brute-force data-parallel search over triple chunks.
//!
//! Every triple of a chunk is compared against a key and gets a 3-bit
//! answer code (4 = subject matched, 2 = predicate, 1 = object). The position
//! array holding one code per triple is filled by `W` workers over disjoint
//! grid-stride sets of fixed-size blocks: worker `t` owns blocks
//! `t, t + W, t + 2W, ...`. A sequential pass then compacts the accepted
//! positions into an index-ordered result.

use std::fmt;
use std::path::Path;
use std::thread;

use thiserror::Error;

use crate::dictionary::TermId;
use crate::store::{StoreError, TidFile, Triple, TripleChunk, TripleSource};

/// Triples per block; the unit a worker claims from the stride set.
pub const BLOCK_TRIPLES: usize = 1024;

/// Widest multi-key search (bits in a [`MarkSet`]).
pub const MAX_KEYS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PatternKey {
    pub subject: TermId,
    pub predicate: TermId,
    pub object: TermId,
}

impl PatternKey {
    pub fn new(subject: u32, predicate: u32, object: u32) -> Self {
        Self {
            subject: TermId(subject),
            predicate: TermId(predicate),
            object: TermId(object),
        }
    }

    /// Bit 4 = subject bound, 2 = predicate bound, 1 = object bound.
    pub fn bound_mask(&self) -> u8 {
        (u8::from(!self.subject.is_wildcard()) << 2)
            | (u8::from(!self.predicate.is_wildcard()) << 1)
            | u8::from(!self.object.is_wildcard())
    }
}

/// Which fields of a triple equal the corresponding key fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AnswerBits(u8);

impl AnswerBits {
    pub const NONE: AnswerBits = AnswerBits(0);
    pub const O: AnswerBits = AnswerBits(1);
    pub const P: AnswerBits = AnswerBits(2);
    pub const PO: AnswerBits = AnswerBits(3);
    pub const S: AnswerBits = AnswerBits(4);
    pub const SO: AnswerBits = AnswerBits(5);
    pub const SP: AnswerBits = AnswerBits(6);
    pub const SPO: AnswerBits = AnswerBits(7);

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits < 8).then_some(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Pattern label, e.g. `SP?` for code 6.
    pub fn label(self) -> &'static str {
        ["???", "??O", "?P?", "?PO", "S??", "S?O", "SP?", "SPO"][self.0 as usize]
    }
}

impl fmt::Display for AnswerBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.label())
    }
}

/// Plain equality per field; a wildcard key field never equals a stored ID.
#[inline]
pub fn match_bits(triple: &Triple, key: &PatternKey) -> AnswerBits {
    AnswerBits(
        (u8::from(triple.subject == key.subject) << 2)
            | (u8::from(triple.predicate == key.predicate) << 1)
            | u8::from(triple.object == key.object),
    )
}

/// True when every bound key field matched.
#[inline]
pub fn accepts(bits: AnswerBits, key: &PatternKey) -> bool {
    let mask = key.bound_mask();
    bits.0 & mask == mask
}

/// Set of subquery indices (bit `q` = accepted by key `q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MarkSet(pub u32);

impl MarkSet {
    pub fn contains(self, q: usize) -> bool {
        q < MAX_KEYS && self.0 & (1 << q) != 0
    }

    pub fn insert(&mut self, q: usize) {
        self.0 |= 1 << q;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_KEYS).filter(move |&q| self.contains(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub index: u64,
    pub bits: AnswerBits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiMatch {
    pub index: u64,
    pub marks: MarkSet,
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("{0} subqueries exceed the multi-key width of {MAX_KEYS}")]
    TooManySubqueries(usize),
    #[error("a multi-key search needs at least one key")]
    NoKeys,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Worker that owns block `block` among `workers` stride sets.
pub fn stride_owner(block: usize, workers: usize) -> usize {
    block % workers.max(1)
}

/// Fills `positions[i] = eval(worker, i)` with the grid-stride block
/// partition. Each slot is written exactly once, by its owning worker.
pub fn fill_positions<T, F>(positions: &mut [T], workers: usize, eval: F)
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let workers = workers.max(1);
    let blocks = positions.len().div_ceil(BLOCK_TRIPLES);
    if workers == 1 || blocks <= 1 {
        for (i, slot) in positions.iter_mut().enumerate() {
            *slot = eval(0, i);
        }
        return;
    }
    let lanes_used = workers.min(blocks);
    let mut lanes: Vec<Vec<(usize, &mut [T])>> = (0..lanes_used).map(|_| Vec::new()).collect();
    for (b, block) in positions.chunks_mut(BLOCK_TRIPLES).enumerate() {
        lanes[stride_owner(b, workers)].push((b * BLOCK_TRIPLES, block));
    }
    let eval = &eval;
    thread::scope(|scope| {
        for (worker, lane) in lanes.into_iter().enumerate() {
            scope.spawn(move || {
                for (start, block) in lane {
                    for (k, slot) in block.iter_mut().enumerate() {
                        *slot = eval(worker, start + k);
                    }
                }
            });
        }
    });
}

/// Single-key search: accepted triples of the chunk with their answer codes.
pub fn search_chunk(chunk: &TripleChunk<'_>, key: &PatternKey, workers: usize) -> Vec<Match> {
    let mut positions = vec![AnswerBits::NONE; chunk.len()];
    fill_positions(&mut positions, workers, |_, i| match_bits(&chunk.triple(i), key));
    let base = chunk.base_index();
    positions
        .into_iter()
        .enumerate()
        .filter(|(_, bits)| accepts(*bits, key))
        .map(|(i, bits)| Match {
            index: base + i as u64,
            bits,
        })
        .collect()
}

#[inline]
fn marks_for(triple: &Triple, keys: &[PatternKey]) -> MarkSet {
    let mut marks = MarkSet::default();
    for (q, key) in keys.iter().enumerate() {
        if accepts(match_bits(triple, key), key) {
            marks.insert(q);
        }
    }
    marks
}

fn check_keys(keys: &[PatternKey]) -> Result<(), KernelError> {
    match keys.len() {
        0 => Err(KernelError::NoKeys),
        n if n > MAX_KEYS => Err(KernelError::TooManySubqueries(n)),
        _ => Ok(()),
    }
}

/// Multi-key search: per triple, the set of keys that accept it. Triples
/// accepted by no key are left out.
pub fn search_multi(
    chunk: &TripleChunk<'_>,
    keys: &[PatternKey],
    workers: usize,
) -> Result<Vec<MultiMatch>, KernelError> {
    check_keys(keys)?;
    let mut positions = vec![MarkSet::default(); chunk.len()];
    fill_positions(&mut positions, workers, |_, i| marks_for(&chunk.triple(i), keys));
    let base = chunk.base_index();
    Ok(positions
        .into_iter()
        .enumerate()
        .filter(|(_, marks)| !marks.is_empty())
        .map(|(i, marks)| MultiMatch {
            index: base + i as u64,
            marks,
        })
        .collect())
}

/// Runs [`search_multi`] over every chunk of `source`, calling `visit` with
/// each chunk while it is resident together with that chunk's matches.
pub fn scan_source<S, F>(source: &S, keys: &[PatternKey], workers: usize, mut visit: F) -> Result<(), KernelError>
where
    S: TripleSource + ?Sized,
    F: FnMut(&TripleChunk<'_>, &[MultiMatch]),
{
    check_keys(keys)?;
    source.for_each_chunk(&mut |chunk| {
        let found = search_multi(chunk, keys, workers).expect("keys already validated");
        visit(chunk, &found);
        Ok(())
    })?;
    Ok(())
}

pub fn search_source<S: TripleSource + ?Sized>(
    source: &S,
    keys: &[PatternKey],
    workers: usize,
) -> Result<Vec<MultiMatch>, KernelError> {
    let mut out = Vec::new();
    scan_source(source, keys, workers, |_, found| out.extend_from_slice(found))?;
    Ok(out)
}

/// Multi-key search over a `.tid` file read `chunk_triples` at a time.
pub fn search_file(
    path: &Path,
    keys: &[PatternKey],
    workers: usize,
    chunk_triples: u64,
) -> Result<Vec<MultiMatch>, KernelError> {
    search_source(&TidFile::new(path, chunk_triples), keys, workers)
}
