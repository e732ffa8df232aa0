//! Term <-> ID encoding and the `.sid` / `.pid` / `.oid` role files.
//!
//! All roles share one ID space: a term that occurs as a subject and as an
//! object carries a single ID, so equal IDs always mean equal terms. Which
//! roles an ID has been used in is tracked separately.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::nt_parser::TermToken;

/// 32-bit term identifier. Zero never names a term; in a search key it
/// marks a free position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(transparent)]
pub struct TermId(pub u32);

impl TermId {
    pub const WILDCARD: TermId = TermId(0);

    pub fn is_wildcard(self) -> bool {
        self.0 == 0
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Subject,
    Predicate,
    Object,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Subject, Role::Predicate, Role::Object];

    fn bit(self) -> u8 {
        match self {
            Role::Subject => 1,
            Role::Predicate => 2,
            Role::Object => 4,
        }
    }

    fn index(self) -> usize {
        match self {
            Role::Subject => 0,
            Role::Predicate => 1,
            Role::Object => 2,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Role::Subject => "sid",
            Role::Predicate => "pid",
            Role::Object => "oid",
        }
    }
}

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("term ID space exhausted (limit {limit})")]
    CapacityExceeded { limit: u32 },
    #[error("unknown term ID {0}")]
    UnknownId(TermId),
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("inconsistent ID files: {0}")]
    Consistency(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `<basename>.<ext>` without replacing any dot already in the basename.
pub fn role_path(basename: &Path, ext: &str) -> PathBuf {
    let mut s = basename.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    term_to_id: HashMap<String, TermId>,
    // index = id - 1
    id_to_term: Vec<TermToken>,
    // per-ID role bitmask, same indexing
    roles: Vec<u8>,
    role_counts: [usize; 3],
    id_limit: u32,
}

impl Default for Dictionary {
    fn default() -> Self {
        Self::new()
    }
}

impl Dictionary {
    pub fn new() -> Self {
        Self::with_id_limit(u32::MAX)
    }

    /// A dictionary that refuses to assign IDs above `limit`.
    pub fn with_id_limit(limit: u32) -> Self {
        Self {
            term_to_id: HashMap::new(),
            id_to_term: Vec::new(),
            roles: Vec::new(),
            role_counts: [0; 3],
            id_limit: limit,
        }
    }

    /// Number of assigned IDs; also the largest assigned ID.
    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    pub fn role_len(&self, role: Role) -> usize {
        self.role_counts[role.index()]
    }

    pub fn encode_term(&mut self, token: &TermToken, role: Role) -> Result<TermId, DictionaryError> {
        let id = match self.term_to_id.get(token.as_str()) {
            Some(&id) => id,
            None => {
                let next = self.id_to_term.len() as u64 + 1;
                if next > u64::from(self.id_limit) {
                    return Err(DictionaryError::CapacityExceeded { limit: self.id_limit });
                }
                let id = TermId(next as u32);
                self.term_to_id.insert(token.as_str().to_owned(), id);
                self.id_to_term.push(token.clone());
                self.roles.push(0);
                id
            }
        };
        self.mark_role(id, role);
        Ok(id)
    }

    fn mark_role(&mut self, id: TermId, role: Role) {
        let flags = &mut self.roles[id.0 as usize - 1];
        if *flags & role.bit() == 0 {
            *flags |= role.bit();
            self.role_counts[role.index()] += 1;
        }
    }

    pub fn lookup(&self, lexical: &str) -> Option<TermId> {
        self.term_to_id.get(lexical).copied()
    }

    pub fn decode_id(&self, id: TermId) -> Result<&TermToken, DictionaryError> {
        match id.0 {
            0 => Err(DictionaryError::UnknownId(id)),
            n => self
                .id_to_term
                .get(n as usize - 1)
                .ok_or(DictionaryError::UnknownId(id)),
        }
    }

    pub fn has_role(&self, id: TermId, role: Role) -> bool {
        id.0 != 0
            && self
                .roles
                .get(id.0 as usize - 1)
                .is_some_and(|flags| flags & role.bit() != 0)
    }

    /// IDs used in `role`, ascending.
    pub fn role_ids(&self, role: Role) -> impl Iterator<Item = TermId> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, flags)| *flags & role.bit() != 0)
            .map(|(i, _)| TermId(i as u32 + 1))
    }

    pub fn write_id_files(&self, basename: &Path) -> Result<(), DictionaryError> {
        for role in Role::ALL {
            let mut out = BufWriter::new(File::create(role_path(basename, role.extension()))?);
            self.write_role(role, &mut out)?;
            out.flush()?;
        }
        Ok(())
    }

    /// One role file's contents: `<id>\t<token>\n` per record, ascending.
    pub fn write_role<W: Write>(&self, role: Role, out: &mut W) -> io::Result<()> {
        for id in self.role_ids(role) {
            writeln!(out, "{}\t{}", id, self.id_to_term[id.0 as usize - 1])?;
        }
        Ok(())
    }

    pub fn read_id_files(basename: &Path) -> Result<Self, DictionaryError> {
        let mut slots: Vec<Option<TermToken>> = Vec::new();
        let mut role_records: Vec<(TermId, Role)> = Vec::new();

        for role in Role::ALL {
            let path = role_path(basename, role.extension());
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let format_err = |message: &str| DictionaryError::Format {
                    path: path.clone(),
                    line: i + 1,
                    message: message.to_owned(),
                };
                let (id, lexical) = line.split_once('\t').ok_or_else(|| format_err("missing tab"))?;
                let id: u32 = id.parse().map_err(|_| format_err("bad ID"))?;
                if id == 0 {
                    return Err(format_err("ID 0 is reserved"));
                }
                let token = TermToken::new(lexical).ok_or_else(|| format_err("not an RDF term"))?;
                let idx = id as usize - 1;
                if slots.len() <= idx {
                    slots.resize(idx + 1, None);
                }
                match &slots[idx] {
                    Some(existing) if existing != &token => {
                        return Err(DictionaryError::Consistency(format!(
                            "ID {id} names both {existing} and {token}"
                        )));
                    }
                    Some(_) => {}
                    None => slots[idx] = Some(token),
                }
                role_records.push((TermId(id), role));
            }
        }

        let mut dict = Dictionary::new();
        for (idx, slot) in slots.into_iter().enumerate() {
            let token = slot.ok_or_else(|| {
                DictionaryError::Consistency(format!("ID {} is missing from every role file", idx + 1))
            })?;
            let id = TermId(idx as u32 + 1);
            if let Some(prev) = dict.term_to_id.insert(token.as_str().to_owned(), id) {
                return Err(DictionaryError::Consistency(format!(
                    "{token} carries both ID {prev} and ID {id}"
                )));
            }
            dict.id_to_term.push(token);
            dict.roles.push(0);
        }
        for (id, role) in role_records {
            dict.mark_role(id, role);
        }
        Ok(dict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> TermToken {
        TermToken::new(s).unwrap()
    }

    #[test]
    fn dense_first_seen_ids() {
        let mut d = Dictionary::new();
        let ids: Vec<_> = ["<http://a>", "<http://p>", "\"x\""]
            .iter()
            .zip(Role::ALL)
            .map(|(t, r)| d.encode_term(&tok(t), r).unwrap())
            .collect();
        assert_eq!(ids, vec![TermId(1), TermId(2), TermId(3)]);
    }

    #[test]
    fn idempotent_and_cross_role() {
        let mut d = Dictionary::new();
        let a = d.encode_term(&tok("<http://x>"), Role::Subject).unwrap();
        assert_eq!(d.encode_term(&tok("<http://x>"), Role::Subject).unwrap(), a);
        assert_eq!(d.role_len(Role::Subject), 1);
        let b = d.encode_term(&tok("<http://x>"), Role::Object).unwrap();
        assert_eq!(a, b);
        assert!(d.has_role(a, Role::Subject));
        assert!(d.has_role(a, Role::Object));
        assert!(!d.has_role(a, Role::Predicate));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn decode_errors() {
        let mut d = Dictionary::new();
        let a = d.encode_term(&tok("_:b"), Role::Subject).unwrap();
        assert_eq!(d.decode_id(a).unwrap().as_str(), "_:b");
        assert!(matches!(d.decode_id(TermId(0)), Err(DictionaryError::UnknownId(_))));
        assert!(matches!(d.decode_id(TermId(2)), Err(DictionaryError::UnknownId(_))));
    }

    #[test]
    fn capacity_limit() {
        let mut d = Dictionary::with_id_limit(2);
        d.encode_term(&tok("<http://a>"), Role::Subject).unwrap();
        d.encode_term(&tok("<http://b>"), Role::Subject).unwrap();
        d.encode_term(&tok("<http://a>"), Role::Object).unwrap();
        assert!(matches!(
            d.encode_term(&tok("<http://c>"), Role::Object),
            Err(DictionaryError::CapacityExceeded { limit: 2 })
        ));
    }

    #[test]
    fn role_file_format() {
        let mut d = Dictionary::new();
        d.encode_term(&tok("<http://a>"), Role::Subject).unwrap();
        d.encode_term(&tok("<http://p>"), Role::Predicate).unwrap();
        d.encode_term(&tok("\"v\"@en"), Role::Object).unwrap();
        d.encode_term(&tok("<http://a>"), Role::Object).unwrap();
        let mut buf = Vec::new();
        d.write_role(Role::Object, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\t<http://a>\n3\t\"v\"@en\n");
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("empty");
        Dictionary::new().write_id_files(&base).unwrap();
        for ext in ["sid", "pid", "oid"] {
            assert_eq!(std::fs::metadata(role_path(&base, ext)).unwrap().len(), 0);
        }
        assert_eq!(Dictionary::read_id_files(&base).unwrap(), Dictionary::new());
    }

    #[test]
    fn read_rejects_conflicts() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("bad");
        std::fs::write(role_path(&base, "sid"), "1\t<http://a>\n").unwrap();
        std::fs::write(role_path(&base, "pid"), "2\t<http://p>\n").unwrap();
        std::fs::write(role_path(&base, "oid"), "1\t<http://b>\n").unwrap();
        assert!(matches!(
            Dictionary::read_id_files(&base),
            Err(DictionaryError::Consistency(_))
        ));

        std::fs::write(role_path(&base, "oid"), "3\t<http://a>\n").unwrap();
        assert!(matches!(
            Dictionary::read_id_files(&base),
            Err(DictionaryError::Consistency(_))
        ));

        std::fs::write(role_path(&base, "oid"), "3 <http://b>\n").unwrap();
        assert!(matches!(
            Dictionary::read_id_files(&base),
            Err(DictionaryError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn role_path_keeps_dots() {
        assert_eq!(role_path(Path::new("/d/x.v1"), "tid"), PathBuf::from("/d/x.v1.tid"));
    }
}
