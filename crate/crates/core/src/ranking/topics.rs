//! Topic vectors built from named entities.

use std::collections::BTreeMap;

use log::warn;

use crate::Result;

/// Sparse term-frequency vector over entity terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicVector(pub BTreeMap<String, f64>);

impl TopicVector {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, term: &str, weight: f64) {
        *self.0.entry(term.to_string()).or_insert(0.0) += weight;
    }

    pub fn add(&mut self, other: &TopicVector) {
        for (term, w) in &other.0 {
            self.add_term(term, *w);
        }
    }

    pub fn scaled(&self, factor: f64) -> TopicVector {
        TopicVector(self.0.iter().map(|(t, w)| (t.clone(), w * factor)).collect())
    }

    fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Cosine similarity; zero when either vector is empty or all-zero.
    pub fn cosine(&self, other: &TopicVector) -> f64 {
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        let dot: f64 = small
            .0
            .iter()
            .filter_map(|(t, w)| large.0.get(t).map(|x| w * x))
            .sum();
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Turns free text into entity terms.
pub trait EntityExtractor: Send + Sync {
    fn extract(&self, text: &str) -> Result<Vec<String>>;
}

/// Lowercases and underscore-joins a multi-word entity name.
pub fn entity_term(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "but", "by", "for", "from", "he", "her", "his", "how",
    "i", "if", "in", "is", "it", "its", "just", "my", "no", "not", "of", "on", "or", "our",
    "rt", "she", "so", "that", "the", "their", "there", "they", "this", "to", "we", "what",
    "when", "who", "why", "will", "with", "you", "your",
];

/// Hashtags plus maximal runs of capitalized words.
///
/// `#Election2016` yields `election2016`; `The Electoral College` yields
/// `electoral_college` (leading and trailing stopwords are trimmed from a
/// run). Punctuation at the end of a word closes the run. Mentions and URLs
/// are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineExtractor;

impl OfflineExtractor {
    fn flush(run: &mut Vec<String>, out: &mut Vec<String>) {
        let is_stop = |w: &String| STOPWORDS.contains(&w.to_lowercase().as_str());
        while run.first().is_some_and(is_stop) {
            run.remove(0);
        }
        while run.last().is_some_and(is_stop) {
            run.pop();
        }
        if !run.is_empty() {
            out.push(entity_term(&run.join(" ")));
        }
        run.clear();
    }
}

impl EntityExtractor for OfflineExtractor {
    fn extract(&self, text: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let mut run: Vec<String> = Vec::new();
        for raw in text.split_whitespace() {
            if raw.starts_with('@') || raw.contains("://") {
                Self::flush(&mut run, &mut out);
                continue;
            }
            if let Some(tag) = raw.strip_prefix('#') {
                Self::flush(&mut run, &mut out);
                let tag: String = tag
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .collect();
                if !tag.is_empty() {
                    out.push(tag.to_lowercase());
                }
                continue;
            }
            let word = raw.trim_start_matches(|c: char| !c.is_alphanumeric());
            let core = word.trim_end_matches(|c: char| !c.is_alphanumeric());
            let closes = core.len() < word.len();
            if core.chars().next().is_some_and(char::is_uppercase) {
                run.push(core.to_string());
            } else {
                Self::flush(&mut run, &mut out);
            }
            if closes {
                Self::flush(&mut run, &mut out);
            }
        }
        Self::flush(&mut run, &mut out);
        Ok(out)
    }
}

/// Term frequencies of the entities found in `texts`.
///
/// When the extractor fails (a remote service being down, say) the text is
/// processed by [`OfflineExtractor`] instead and a warning is logged.
pub fn topic_vector<S: AsRef<str>>(texts: &[S], extractor: &dyn EntityExtractor) -> TopicVector {
    let mut vector = TopicVector::default();
    for text in texts {
        let terms = extractor.extract(text.as_ref()).unwrap_or_else(|e| {
            warn!("entity extraction failed ({e}); using the offline extractor");
            OfflineExtractor.extract(text.as_ref()).unwrap_or_default()
        });
        for term in terms {
            vector.add_term(&term, 1.0);
        }
    }
    vector
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn terms(text: &str) -> Vec<String> {
        OfflineExtractor.extract(text).unwrap()
    }

    #[test]
    fn offline_entities() {
        assert_eq!(
            terms("The Electoral College decides, not Ohio alone. #USElections @someone"),
            vec!["electoral_college", "ohio", "uselections"]
        );
        assert_eq!(terms("nothing capitalized here"), Vec::<String>::new());
        assert_eq!(terms("New York Times reports"), vec!["new_york_times"]);
        assert_eq!(terms("see https://X.com/A now"), Vec::<String>::new());
    }

    #[test]
    fn counts_terms() {
        let v = topic_vector(
            &["Electoral College votes", "the Electoral College and Ohio"],
            &OfflineExtractor,
        );
        assert_eq!(v.0.get("electoral_college"), Some(&2.0));
        assert_eq!(v.0.get("ohio"), Some(&1.0));
        assert_eq!(v.0.len(), 2);
        assert!(topic_vector::<&str>(&[], &OfflineExtractor).is_empty());
    }

    #[test]
    fn cosine_conventions() {
        let mut a = TopicVector::default();
        a.add_term("x", 1.0);
        let mut b = TopicVector::default();
        b.add_term("y", 1.0);
        assert_eq!(a.cosine(&b), 0.0);
        assert!((a.cosine(&a.scaled(3.0)) - 1.0).abs() < 1e-15);
        assert_eq!(a.cosine(&TopicVector::default()), 0.0);
        let same = topic_vector(&["Ohio and Texas"], &OfflineExtractor);
        assert!((same.cosine(&topic_vector(&["Ohio and Texas"], &OfflineExtractor)) - 1.0).abs() < 1e-15);
    }

    struct Broken;
    impl EntityExtractor for Broken {
        fn extract(&self, _: &str) -> Result<Vec<String>> {
            Err(Error::Extractor("down".into()))
        }
    }

    #[test]
    fn falls_back_to_offline() {
        let v = topic_vector(&["Ohio"], &Broken);
        assert_eq!(v.0.get("ohio"), Some(&1.0));
    }
}
