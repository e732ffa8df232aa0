//! The binary `.tid` triple file and chunked reads over it.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset 0   magic  "TID1"
//! offset 4   u32    version = 1
//! offset 8   u64    triple count
//! offset 16  count x (u32 subject, u32 predicate, u32 object)
//! ```

use std::borrow::Cow;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dictionary::TermId;

pub const MAGIC: [u8; 4] = *b"TID1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 16;
const TRIPLE_BYTES: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: TermId,
    pub predicate: TermId,
    pub object: TermId,
}

impl Triple {
    pub fn new(subject: u32, predicate: u32, object: u32) -> Self {
        Self {
            subject: TermId(subject),
            predicate: TermId(predicate),
            object: TermId(object),
        }
    }

    pub fn is_valid(&self) -> bool {
        !(self.subject.is_wildcard() || self.predicate.is_wildcard() || self.object.is_wildcard())
    }

    pub fn ids(&self) -> [TermId; 3] {
        [self.subject, self.predicate, self.object]
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not a TripleID file (bad magic)")]
    BadMagic,
    #[error("unsupported TripleID version {0}")]
    BadVersion(u32),
    #[error("file declares {declared} triples but holds only {available}")]
    TruncatedFile { declared: u64, available: u64 },
    #[error("triple #{index} contains the reserved ID 0")]
    InvariantViolation { index: u64 },
    #[error("chunk size must be at least one triple")]
    ZeroChunk,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A run of consecutive triples, flat as `[s0, p0, o0, s1, p1, o1, ...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleChunk<'a> {
    data: Cow<'a, [TermId]>,
    base_index: u64,
}

impl<'a> TripleChunk<'a> {
    /// Panics if `data.len()` is not a multiple of three.
    pub fn new(data: impl Into<Cow<'a, [TermId]>>, base_index: u64) -> Self {
        let data = data.into();
        assert!(data.len() % 3 == 0, "chunk length {} is not a multiple of 3", data.len());
        Self { data, base_index }
    }

    pub fn from_triples(triples: &[Triple], base_index: u64) -> TripleChunk<'static> {
        let data: Vec<TermId> = triples.iter().flat_map(Triple::ids).collect();
        TripleChunk::new(data, base_index)
    }

    pub fn data(&self) -> &[TermId] {
        &self.data
    }

    pub fn base_index(&self) -> u64 {
        self.base_index
    }

    pub fn len(&self) -> usize {
        self.data.len() / 3
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Triple at chunk-local position `i`.
    #[inline]
    pub fn triple(&self, i: usize) -> Triple {
        let t = &self.data[3 * i..3 * i + 3];
        Triple {
            subject: t[0],
            predicate: t[1],
            object: t[2],
        }
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.data.chunks_exact(3).map(|t| Triple {
            subject: t[0],
            predicate: t[1],
            object: t[2],
        })
    }
}

/// Bytes a search over an `n_ids`-long data array occupies: the data
/// itself, one position slot per triple, and the three-ID key.
pub fn device_memory_bytes(n_ids: u64) -> u64 {
    (n_ids + n_ids / 3 + 3) * std::mem::size_of::<TermId>() as u64
}

/// Triples per chunk for a memory budget in bytes: the largest multiple of
/// 2^20 triples whose search footprint fits, or the largest count that fits
/// at all when not even 2^20 triples do (never less than one).
pub fn chunk_triples_for_budget(budget_bytes: u64) -> u64 {
    const UNIT: u64 = 1 << 20;
    let fits = |triples: u64| device_memory_bytes(3 * triples) <= budget_bytes;
    // footprint is 16 bytes per triple plus the key
    let max_triples = budget_bytes.saturating_sub(12) / 16;
    debug_assert!(max_triples == 0 || fits(max_triples));
    let units = max_triples / UNIT;
    if units > 0 {
        units * UNIT
    } else {
        max_triples.max(1)
    }
}

/// Streaming `.tid` writer; the count field is patched on [`TidWriter::finish`].
pub struct TidWriter {
    out: BufWriter<File>,
    count: u64,
}

impl TidWriter {
    pub fn create(path: &Path) -> Result<Self, StoreError> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(Self { out, count: 0 })
    }

    pub fn push(&mut self, triple: Triple) -> Result<(), StoreError> {
        if !triple.is_valid() {
            return Err(StoreError::InvariantViolation { index: self.count });
        }
        for id in triple.ids() {
            self.out.write_all(&id.0.to_le_bytes())?;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<u64, StoreError> {
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(8))?;
        file.write_all(&self.count.to_le_bytes())?;
        file.sync_all()?;
        Ok(self.count)
    }
}

pub fn write_tid<I>(triples: I, path: &Path) -> Result<u64, StoreError>
where
    I: IntoIterator<Item = Triple>,
{
    let mut w = TidWriter::create(path)?;
    for t in triples {
        w.push(t)?;
    }
    w.finish()
}

/// Validates the header and returns the declared triple count.
pub fn read_header(path: &Path) -> Result<u64, StoreError> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut header = Vec::with_capacity(HEADER_LEN as usize);
    file.take(HEADER_LEN).read_to_end(&mut header)?;
    if header.len() < 4 || header[0..4] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    if header.len() < HEADER_LEN as usize {
        return Err(StoreError::TruncatedFile {
            declared: 0,
            available: 0,
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(StoreError::BadVersion(version));
    }
    let declared = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let available = (len - HEADER_LEN) / TRIPLE_BYTES;
    if declared > available {
        return Err(StoreError::TruncatedFile { declared, available });
    }
    Ok(declared)
}

/// Sequential chunk iterator over a `.tid` file.
pub struct ChunkReader {
    reader: BufReader<File>,
    remaining: u64,
    next_index: u64,
    chunk_triples: u64,
    buf: Vec<u8>,
}

impl ChunkReader {
    pub fn open(path: &Path, chunk_triples: u64) -> Result<Self, StoreError> {
        if chunk_triples == 0 {
            return Err(StoreError::ZeroChunk);
        }
        let count = read_header(path)?;
        let mut file = File::open(path)?;
        file.seek(SeekFrom::Start(HEADER_LEN))?;
        Ok(Self {
            reader: BufReader::with_capacity(1 << 20, file),
            remaining: count,
            next_index: 0,
            chunk_triples,
            buf: Vec::new(),
        })
    }

    pub fn triple_count(&self) -> u64 {
        self.next_index + self.remaining
    }

    fn read_next(&mut self) -> Result<TripleChunk<'static>, StoreError> {
        let n = self.remaining.min(self.chunk_triples);
        self.buf.resize((n * TRIPLE_BYTES) as usize, 0);
        self.reader.read_exact(&mut self.buf)?;
        let data: Vec<TermId> = self
            .buf
            .chunks_exact(4)
            .map(|b| TermId(u32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        let chunk = TripleChunk::new(data, self.next_index);
        self.next_index += n;
        self.remaining -= n;
        Ok(chunk)
    }
}

impl Iterator for ChunkReader {
    type Item = Result<TripleChunk<'static>, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.read_next();
        if out.is_err() {
            self.remaining = 0;
        }
        Some(out)
    }
}

pub fn read_chunks(path: &Path, chunk_triples: u64) -> Result<ChunkReader, StoreError> {
    ChunkReader::open(path, chunk_triples)
}

/// Anything the search kernel can scan chunk by chunk.
pub trait TripleSource {
    fn triple_count(&self) -> Result<u64, StoreError>;

    fn for_each_chunk(
        &self,
        f: &mut dyn FnMut(&TripleChunk<'_>) -> Result<(), StoreError>,
    ) -> Result<(), StoreError>;
}

/// A `.tid` file read in fixed-size chunks.
#[derive(Debug, Clone)]
pub struct TidFile {
    pub path: PathBuf,
    pub chunk_triples: u64,
}

impl TidFile {
    pub fn new(path: impl Into<PathBuf>, chunk_triples: u64) -> Self {
        Self {
            path: path.into(),
            chunk_triples,
        }
    }
}

impl TripleSource for TidFile {
    fn triple_count(&self) -> Result<u64, StoreError> {
        read_header(&self.path)
    }

    fn for_each_chunk(
        &self,
        f: &mut dyn FnMut(&TripleChunk<'_>) -> Result<(), StoreError>,
    ) -> Result<(), StoreError> {
        for chunk in read_chunks(&self.path, self.chunk_triples)? {
            f(&chunk?)?;
        }
        Ok(())
    }
}

/// Triples held in memory, served as borrowed chunks.
#[derive(Debug, Clone, Default)]
pub struct MemoryTriples {
    data: Vec<TermId>,
    chunk_triples: usize,
}

impl MemoryTriples {
    pub fn new(triples: &[Triple]) -> Self {
        Self {
            data: triples.iter().flat_map(Triple::ids).collect(),
            chunk_triples: usize::MAX,
        }
    }

    pub fn with_chunk_triples(mut self, chunk_triples: usize) -> Self {
        self.chunk_triples = chunk_triples.max(1);
        self
    }

    pub fn as_chunk(&self) -> TripleChunk<'_> {
        TripleChunk::new(&self.data[..], 0)
    }
}

impl TripleSource for MemoryTriples {
    fn triple_count(&self) -> Result<u64, StoreError> {
        Ok((self.data.len() / 3) as u64)
    }

    fn for_each_chunk(
        &self,
        f: &mut dyn FnMut(&TripleChunk<'_>) -> Result<(), StoreError>,
    ) -> Result<(), StoreError> {
        let step = self.chunk_triples.saturating_mul(3);
        for (i, ids) in self.data.chunks(step).enumerate() {
            f(&TripleChunk::new(ids, (i * self.chunk_triples) as u64))?;
        }
        Ok(())
    }
}
