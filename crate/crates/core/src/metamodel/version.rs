use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A version string with a total order.
///
/// Two versions whose dot-separated segments are all decimal digits compare
/// as numeric tuples (`1.10 > 1.9`). Otherwise they compare as plain strings.
/// When exactly one side is numeric, the numeric one sorts first so the
/// ordering stays transitive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Version(String);

impl Version {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_numeric(&self) -> bool {
        is_numeric(&self.0)
    }
}

fn is_numeric(s: &str) -> bool {
    !s.is_empty()
        && s.split('.')
            .all(|seg| !seg.is_empty() && seg.bytes().all(|b| b.is_ascii_digit()))
}

// Digit strings of arbitrary length, compared without parsing.
fn cmp_digits(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Compares two raw version strings under the [`Version`] order.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    match (is_numeric(a), is_numeric(b)) {
        (true, true) => {
            let mut lhs = a.split('.');
            let mut rhs = b.split('.');
            loop {
                match (lhs.next(), rhs.next()) {
                    (Some(x), Some(y)) => match cmp_digits(x, y) {
                        Ordering::Equal => continue,
                        other => return other,
                    },
                    (None, Some(_)) => return Ordering::Less,
                    (Some(_), None) => return Ordering::Greater,
                    // "1.0" and "1.00" are numerically equal; fall back to the text
                    (None, None) => return a.cmp(b),
                }
            }
        }
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.cmp(b),
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_versions(&self.0, &other.0)
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Version {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for Version {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn numeric_segments_compare_as_numbers() {
        assert!(Version::from("1.10") > Version::from("1.9"));
        assert!(Version::from("2") > Version::from("1.99.99"));
        assert!(Version::from("1.0") < Version::from("1.0.1"));
        assert!(Version::from("0010") > Version::from("9"));
    }

    #[test]
    fn non_numeric_falls_back_to_text() {
        assert!(Version::from("1.0-beta") < Version::from("1.0-rc"));
        assert!(Version::from("9") < Version::from("1x"));
        assert!(Version::from("10") < Version::from("1x"));
    }

    #[test]
    fn equal_numeric_value_distinct_text_is_ordered() {
        assert_ne!(Version::from("1.0").cmp(&Version::from("1.00")), Ordering::Equal);
    }

    fn version_strategy() -> impl Strategy<Value = String> {
        prop_oneof![
            prop::collection::vec(0u32..30, 1..4).prop_map(|v| v
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(".")),
            "[0-9a-c.]{1,5}",
        ]
    }

    proptest! {
        #[test]
        fn order_is_transitive(a in version_strategy(), b in version_strategy(), c in version_strategy()) {
            let (a, b, c) = (Version::from(a), Version::from(b), Version::from(c));
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            prop_assert_eq!(a.cmp(&b) == Ordering::Equal, a == b);
        }
    }
}
