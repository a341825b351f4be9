use std::fmt;
use std::sync::Arc;

/// An ordered, finite set of outcomes.
///
/// Outcomes are addressed by their position. A space is either labeled (each
/// outcome has a unique string identifier) or anonymous (only its size is
/// known, as for enumerated sample tuples). Cloning is cheap.
#[derive(Clone)]
pub struct Space(Arc<SpaceInner>);

struct SpaceInner {
    len: usize,
    labels: Option<Vec<String>>,
}

impl Space {
    /// Labeled space. Returns `None` when labels repeat.
    pub fn labeled<I, S>(labels: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Self(Arc::new(SpaceInner {
            len: labels.len(),
            labels: Some(labels),
        })))
    }

    /// Labels `"0"`, `"1"`, ... `"{len-1}"`.
    pub fn numbered(len: usize) -> Self {
        Self::labeled((0..len).map(|i| i.to_string())).expect("numbered labels are unique")
    }

    pub fn anonymous(len: usize) -> Self {
        Self(Arc::new(SpaceInner { len, labels: None }))
    }

    pub fn len(&self) -> usize {
        self.0.len
    }

    pub fn is_empty(&self) -> bool {
        self.0.len == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.0.labels.as_deref()
    }

    /// Label of outcome `i`; anonymous spaces render the index.
    pub fn label(&self, i: usize) -> String {
        match &self.0.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.0.labels {
            Some(l) => l.iter().position(|x| x == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.0.len),
        }
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.len == other.0.len && self.0.labels == other.0.labels)
    }
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.labels {
            Some(l) if l.len() <= 8 => write!(f, "Space{l:?}"),
            Some(l) => write!(f, "Space[{} labeled]", l.len()),
            None => write!(f, "Space[{} anonymous]", self.0.len),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_rejected() {
        assert!(Space::labeled(["a", "b", "a"]).is_none());
    }

    #[test]
    fn equality_is_structural() {
        let a = Space::labeled(["x", "y"]).unwrap();
        let b = Space::labeled(["x", "y"]).unwrap();
        let c = Space::labeled(["y", "x"]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, Space::anonymous(2));
        assert_eq!(Space::anonymous(3), Space::anonymous(3));
    }

    #[test]
    fn lookup() {
        let s = Space::numbered(4);
        assert_eq!(s.index_of("2"), Some(2));
        assert_eq!(s.label(3), "3");
        assert_eq!(Space::anonymous(5).index_of("4"), Some(4));
        assert_eq!(Space::anonymous(5).index_of("5"), None);
    }
}
