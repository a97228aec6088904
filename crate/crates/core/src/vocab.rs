//! Event-type vocabulary.
//!
//! Each threshold rule defines one event type, so the vocabulary is the
//! ordered list of rule KPI names. Indices into the vocabulary are used as
//! embedding-row and decay-parameter indices throughout the model.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of event-type names with O(1) reverse lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct EventVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl EventVocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::validation(format!(
                    "duplicate event type in vocabulary: {name:?}"
                )));
            }
        }
        Ok(EventVocabulary { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl From<EventVocabulary> for Vec<String> {
    fn from(v: EventVocabulary) -> Self {
        v.names
    }
}

impl TryFrom<Vec<String>> for EventVocabulary {
    type Error = String;

    fn try_from(names: Vec<String>) -> std::result::Result<Self, String> {
        EventVocabulary::new(names).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates() {
        let err = EventVocabulary::new(vec!["a".into(), "b".into(), "a".into()]);
        assert!(err.is_err());
    }

    #[test]
    fn lookup_round_trips() {
        let v = EventVocabulary::new(vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(v.index_of("y"), Some(1));
        assert_eq!(v.name(0), "x");
        assert_eq!(v.index_of("z"), None);
    }
}
