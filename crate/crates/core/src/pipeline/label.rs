//! Tolerant parsing of `label: <letter>` answers.
//!
//! Grammar: the first case-insensitive `label`, followed by optional
//! whitespace, an optional colon, optional whitespace and an optional opening
//! bracket, then a single letter not followed by another letter or digit.
//! When no such marker exists, the first standalone letter within the option
//! range is taken.

/// Letter for option `index` (0 -> 'a').
pub fn letter(index: usize) -> char {
    (b'a' + index as u8) as char
}

/// `a/b/c` for three options.
pub fn letter_list(n: usize) -> String {
    (0..n).map(|i| letter(i).to_string()).collect::<Vec<_>>().join("/")
}

/// Parses the chosen option index out of `response`, or `None` when no
/// letter in `0..n_options` can be found. An explicit `label:` with an out
/// of range letter is `None`.
pub fn parse_label(response: &str, n_options: usize) -> Option<usize> {
    let chars: Vec<char> = response.chars().flat_map(char::to_lowercase).collect();
    let in_range = |c: char| {
        c.is_ascii_lowercase() && ((c as u8 - b'a') as usize) < n_options
    };
    let standalone = |i: usize| {
        chars[i].is_ascii_alphabetic()
            && (i == 0 || !chars[i - 1].is_alphanumeric())
            && chars.get(i + 1).is_none_or(|c| !c.is_alphanumeric())
    };

    let marker: Vec<char> = "label".chars().collect();
    let mut i = 0;
    while i + marker.len() <= chars.len() {
        if chars[i..i + marker.len()] == marker[..] {
            let mut j = i + marker.len();
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j < chars.len() && chars[j] == ':' {
                j += 1;
            }
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j < chars.len() && (chars[j] == '[' || chars[j] == '(') {
                j += 1;
            }
            if j < chars.len() && standalone(j) {
                let c = chars[j];
                return in_range(c).then(|| (c as u8 - b'a') as usize);
            }
        }
        i += 1;
    }

    (0..chars.len())
        .find(|&i| standalone(i) && in_range(chars[i]))
        .map(|i| (chars[i] as u8 - b'a') as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_spaced() {
        assert_eq!(parse_label("label: b", 3), Some(1));
        assert_eq!(parse_label("Label:  a ", 3), Some(0));
        assert_eq!(parse_label("LABEL:C", 3), Some(2));
        assert_eq!(parse_label("label: [a]", 3), Some(0));
        assert_eq!(parse_label("My answer.\nlabel: c.", 3), Some(2));
    }

    #[test]
    fn out_of_range_explicit_label_fails() {
        assert_eq!(parse_label("label: z", 3), None);
        assert_eq!(parse_label("label: d", 3), None);
    }

    #[test]
    fn fallback_to_standalone_letter() {
        assert_eq!(parse_label("b", 3), Some(1));
        assert_eq!(parse_label("The answer is (a).", 3), Some(0));
        // "is" and "the" are words, not standalone letters
        assert_eq!(parse_label("this is the one", 3), None);
        assert_eq!(parse_label("", 2), None);
    }

    #[test]
    fn word_after_label_falls_back() {
        assert_eq!(parse_label("label: none, so b", 3), Some(1));
    }

    #[test]
    fn letters() {
        assert_eq!(letter(0), 'a');
        assert_eq!(letter_list(3), "a/b/c");
    }
}
