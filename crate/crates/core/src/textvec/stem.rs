//! Paice/Husk ("Lancaster") iterated suffix stripper driven by a rule table.
//!
//! The bundled table lives in `data/lancaster.rules`; see the header of that
//! file for the rule syntax.

use std::collections::HashMap;

use super::TextError;

const BUNDLED_RULES: &str = include_str!("../../data/lancaster.rules");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    /// Suffix in natural (not reversed) order.
    ending: Vec<char>,
    intact_only: bool,
    remove: usize,
    append: String,
    stop: bool,
}

/// A Lancaster stemmer loaded from a rule table.
#[derive(Debug, Clone)]
pub struct LancasterStemmer {
    rules: HashMap<char, Vec<Rule>>,
}

impl Default for LancasterStemmer {
    fn default() -> Self {
        Self::from_rules(BUNDLED_RULES).expect("bundled rule table parses")
    }
}

impl LancasterStemmer {
    /// Parses a rule table. Blank lines and `#` comments are skipped.
    pub fn from_rules(table: &str) -> Result<Self, TextError> {
        let mut rules: HashMap<char, Vec<Rule>> = HashMap::new();
        for (idx, raw) in table.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = parse_rule(line).ok_or_else(|| TextError::BadRule {
                line: idx + 1,
                rule: line.to_string(),
            })?;
            let key = *rule.ending.last().expect("ending non-empty");
            rules.entry(key).or_default().push(rule);
        }
        Ok(Self { rules })
    }

    pub fn stem(&self, token: &str) -> String {
        let intact: Vec<char> = token.chars().collect();
        let mut word = intact.clone();
        while let Some(pos) = last_letter(&word) {
            let Some(group) = self.rules.get(&word[pos]) else {
                break;
            };
            let mut applied = None;
            for rule in group {
                if !word.ends_with(&rule.ending) {
                    continue;
                }
                if rule.intact_only && word != intact {
                    continue;
                }
                if !acceptable(&word, rule.remove) {
                    continue;
                }
                word.truncate(word.len() - rule.remove);
                word.extend(rule.append.chars());
                applied = Some(rule.stop);
                break;
            }
            match applied {
                Some(false) => continue,
                _ => break,
            }
        }
        word.into_iter().collect()
    }
}

fn parse_rule(line: &str) -> Option<Rule> {
    let bytes: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_lowercase() {
        i += 1;
    }
    if i == 0 {
        return None;
    }
    let mut ending: Vec<char> = bytes[..i].to_vec();
    ending.reverse();
    let intact_only = bytes.get(i) == Some(&'*');
    if intact_only {
        i += 1;
    }
    let remove = bytes.get(i)?.to_digit(10)? as usize;
    i += 1;
    let start = i;
    while i < bytes.len() && bytes[i].is_ascii_lowercase() {
        i += 1;
    }
    let append: String = bytes[start..i].iter().collect();
    let stop = match bytes.get(i) {
        None | Some('>') => false,
        Some('.') => true,
        Some(_) => return None,
    };
    if i + usize::from(bytes.get(i).is_some()) != bytes.len() {
        return None;
    }
    Some(Rule {
        ending,
        intact_only,
        remove,
        append,
        stop,
    })
}

/// Index of the last letter of the leading alphabetic run.
fn last_letter(word: &[char]) -> Option<usize> {
    let run = word.iter().take_while(|c| c.is_alphabetic()).count();
    run.checked_sub(1)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-initial stems keep at least 2 letters; consonant-initial stems keep
/// at least 3, one of the first three being a vowel.
fn acceptable(word: &[char], remove: usize) -> bool {
    let Some(left) = word.len().checked_sub(remove) else {
        return false;
    };
    if is_vowel(word[0]) {
        left >= 2
    } else {
        left >= 3 && (is_vowel(word[1]) || is_vowel(word[2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let s = LancasterStemmer::default();
        let count: usize = s.rules.values().map(Vec::len).sum();
        assert_eq!(count, 115);
    }

    #[test]
    fn short_words_pass_through() {
        let s = LancasterStemmer::default();
        assert_eq!(s.stem("x"), "x");
        assert_eq!(s.stem(""), "");
        assert_eq!(s.stem("ear"), "ear");
    }

    #[test]
    fn custom_table() {
        let s = LancasterStemmer::from_rules("ssen4>\ns1t.").unwrap();
        assert_eq!(s.stem("ness"), "nest");
    }

    #[test]
    fn bad_rule_reports_line() {
        let err = LancasterStemmer::from_rules("# c\nssen4>\n4abc\n").unwrap_err();
        assert!(matches!(err, TextError::BadRule { line: 3, .. }));
        assert!(LancasterStemmer::from_rules("ss$1.").is_err());
    }
}
