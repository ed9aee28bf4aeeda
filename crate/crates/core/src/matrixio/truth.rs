use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Relevant item ids per query. Lines are `<query>\t<id,id,...>`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    relevant: BTreeMap<usize, BTreeSet<usize>>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: usize, ids: impl IntoIterator<Item = usize>) {
        self.relevant.entry(query).or_default().extend(ids);
    }

    pub fn get(&self, query: usize) -> Option<&BTreeSet<usize>> {
        self.relevant.get(&query)
    }

    pub fn queries(&self) -> impl Iterator<Item = usize> + '_ {
        self.relevant.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }

    /// Checks every id against the item count.
    pub fn validate(&self, n: usize) -> Result<()> {
        for (&q, ids) in &self.relevant {
            for &id in std::iter::once(&q).chain(ids.iter()) {
                if id >= n {
                    return Err(Error::OutOfRange { id, n });
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (q, ids) in &self.relevant {
            let ids: Vec<String> = ids.iter().map(usize::to_string).collect();
            out.push_str(&format!("{q}\t{}\n", ids.join(",")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut gt = GroundTruth::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let (q, ids) = line.split_once('\t').unwrap_or((line, ""));
            let q: usize = q.trim().parse().map_err(|e| err(format!("query id: {e}")))?;
            let mut set = BTreeSet::new();
            for tok in ids.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                set.insert(tok.parse().map_err(|e| err(format!("{tok:?}: {e}")))?);
            }
            gt.insert(q, set);
        }
        Ok(gt)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        super::write_file(path.as_ref(), self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let gt = GroundTruth::parse("0\t0,1,2\n3\t4\n").unwrap();
        assert_eq!(gt.get(0).unwrap().len(), 3);
        assert_eq!(gt.to_text(), "0\t0,1,2\n3\t4\n");
        assert!(gt.validate(5).is_ok());
        assert!(matches!(gt.validate(4), Err(Error::OutOfRange { id: 4, n: 4 })));
    }

    #[test]
    fn bad_id() {
        assert!(matches!(
            GroundTruth::parse("0\t1,x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
