//! Answer normalization shared by the game judge and the reset flow.

/// Case-fold, trim, and collapse internal whitespace runs to a single space.
pub fn normalize_answer(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The letters of `s`, uppercased, in order. Non-letters are dropped.
pub fn answer_letters(s: &str) -> Vec<char> {
    s.chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_uppercase)
        .collect()
}

pub fn letter_count(s: &str) -> usize {
    answer_letters(s).len()
}
