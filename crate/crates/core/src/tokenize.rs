//! Moses-style word tokenizer.
//!
//! Punctuation and symbols are split off words, commas stay inside numbers,
//! apostrophes follow the English/French conventions, and a trailing period
//! is kept only on abbreviations (built-in prefix list, dotted acronyms) or
//! when the next word starts in lowercase. Runs of two or more dots form a
//! single token.

const NONBREAKING_PREFIXES: &[&str] = &[
    // en
    "Mr", "Mrs", "Ms", "Dr", "Prof", "St", "Jr", "Sr", "vs", "etc", "Inc", "Ltd", "Co", "Mt", // cs
    "tzv", "např", "atd", "apod", "resp", "tj", "mj", "Ing", "Mgr", "Bc", "doc", "čl", // de
    "bzw", "usw", "ca", "Nr", "Hr", "Fr", // fr / es
    "Mme", "Mlle", "Sra", "Srta", "Dña",
];

/// Prefixes that only stay attached when a number follows (e.g. "No. 5").
const NUMERIC_ONLY_PREFIXES: &[&str] = &["No", "Art", "pp", "p", "č"];

/// Tokenizes with language-neutral apostrophe handling.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_lang(text, "")
}

/// Tokenizes `text`. `lang` only changes apostrophe handling ("en" vs "fr"/"it").
pub fn tokenize_lang(text: &str, lang: &str) -> Vec<String> {
    let spaced = separate_symbols(text, lang);
    let words: Vec<&str> = spaced.split_whitespace().collect();
    let mut out = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let next = words.get(i + 1).copied();
        split_final_period(word, next, &mut out);
    }
    out
}

fn is_sep_exempt(c: char) -> bool {
    c.is_alphanumeric() || c.is_whitespace() || matches!(c, '.' | '\'' | ',' | '-')
}

fn separate_symbols(text: &str, lang: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        match c {
            '.' if next == Some('.') => {
                let start = i;
                while i < chars.len() && chars[i] == '.' {
                    i += 1;
                }
                out.push(' ');
                out.extend(&chars[start..i]);
                out.push(' ');
                continue;
            }
            ',' => {
                let numeric = prev.is_some_and(|p| p.is_numeric()) && next.is_some_and(|n| n.is_numeric());
                if numeric {
                    out.push(',');
                } else {
                    out.push_str(" , ");
                }
            }
            '\'' => out.push_str(&apostrophe(prev, next, lang)),
            c if !is_sep_exempt(c) => {
                out.push(' ');
                out.push(c);
                out.push(' ');
            }
            c => out.push(c),
        }
        i += 1;
    }
    out
}

fn apostrophe(prev: Option<char>, next: Option<char>, lang: &str) -> String {
    let p_alpha = prev.is_some_and(char::is_alphabetic);
    let n_alpha = next.is_some_and(char::is_alphabetic);
    match lang {
        "en" => {
            if (p_alpha && n_alpha) || (prev.is_some_and(char::is_numeric) && next == Some('s')) {
                " '".into()
            } else {
                " ' ".into()
            }
        }
        "fr" | "it" => {
            if p_alpha && n_alpha {
                "' ".into()
            } else {
                " ' ".into()
            }
        }
        _ => " ' ".into(),
    }
}

fn split_final_period(word: &str, next: Option<&str>, out: &mut Vec<String>) {
    let Some(pre) = word.strip_suffix('.') else {
        out.push(word.to_string());
        return;
    };
    if pre.is_empty() || pre.chars().all(|c| c == '.') {
        out.push(word.to_string());
        return;
    }
    let dotted_acronym = pre.contains('.') && pre.chars().any(char::is_alphabetic);
    let single_upper = {
        let mut it = pre.chars();
        matches!((it.next(), it.next()), (Some(c), None) if c.is_uppercase())
    };
    let next_lower = next.and_then(|n| n.chars().next()).is_some_and(char::is_lowercase);
    let numeric_follow =
        NUMERIC_ONLY_PREFIXES.contains(&pre) && next.and_then(|n| n.chars().next()).is_some_and(|c| c.is_ascii_digit());
    if dotted_acronym || single_upper || NONBREAKING_PREFIXES.contains(&pre) || next_lower || numeric_follow {
        out.push(word.to_string());
    } else {
        out.push(pre.to_string());
        out.push(".".to_string());
    }
}
