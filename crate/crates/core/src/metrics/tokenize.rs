/// Lowercases, splits on whitespace and drops every non-alphanumeric
/// character, so `"2-pt"` becomes `"2pt"` and `"shot."` becomes `"shot"`.
/// Applying it to its own joined output is the identity.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let token: String = word
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphanumeric())
                .collect();
            (!token.is_empty()).then_some(token)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic() {
        assert_eq!(
            tokenize("Brandon Ingram misses the 2pt jump shot."),
            ["brandon", "ingram", "misses", "the", "2pt", "jump", "shot"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ... -- ").is_empty());
        assert_eq!(tokenize("2-pt  Gilgeous-Alexander"), ["2pt", "gilgeousalexander"]);
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = tokenize(&s);
            prop_assert_eq!(tokenize(&once.join(" ")), once);
        }
    }
}
