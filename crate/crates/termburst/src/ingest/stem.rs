//! Porter suffix stripper.
//!
//! Follows the reference implementation's behavior exactly, including its
//! two departures from the original published rules (`bli -> ble` instead
//! of `abli -> able`, and the extra `logi -> log` rule), so outputs line
//! up with the widely published test vocabulary.

/// Stems a single lowercase word, one pass of the algorithm.
///
/// Words shorter than three characters or containing anything other than
/// ASCII letters (digits, hashtag prefixes, non-ASCII) pass through
/// unchanged; stemming hand-waved onto such tokens does more harm than good.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("ASCII in, ASCII out")
}

/// Iterates [`stem`] until the output stops changing.
///
/// A single pass is not always a fixpoint of itself ("defensible" stems to
/// "defens", which a second pass shortens to "defen"). Token normalization
/// needs a mapping that is stable under re-application, so this is the
/// variant the tokenizer uses. Outputs never grow, so the loop terminates;
/// the cap is belt and braces.
pub fn stem_fixpoint(word: &str) -> String {
    let mut cur = stem(word);
    for _ in 0..16 {
        let next = stem(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

/// Consonant test. `y` counts as a consonant at position 0 and after a
/// vowel, as a vowel after a consonant.
fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// The measure m: number of vowel-to-consonant run transitions, i.e. the m
/// in the form [C](VC){m}[V].
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_cons(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// The *o condition: ends consonant-vowel-consonant where the final
/// consonant is not w, x, or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    if n < 3 || !is_cons(w, n - 1) || is_cons(w, n - 2) || !is_cons(w, n - 3) {
        return false;
    }
    !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &[u8]) -> bool {
    w.len() > suffix.len() && w.ends_with(suffix)
}

fn step1a(w: &mut Vec<u8>) {
    if w.last() != Some(&b's') {
        return;
    }
    if ends_with(w, b"sses") || ends_with(w, b"ies") {
        w.truncate(w.len() - 2);
    } else if !ends_with(w, b"ss") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if ends_with(w, b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }
    let stripped = if ends_with(w, b"ed") && has_vowel(&w[..w.len() - 2]) {
        w.truncate(w.len() - 2);
        true
    } else if ends_with(w, b"ing") && has_vowel(&w[..w.len() - 3]) {
        w.truncate(w.len() - 3);
        true
    } else {
        false
    };
    if !stripped {
        return;
    }
    // Repair the stem left behind by ed/ing removal.
    if ends_with(w, b"at") || ends_with(w, b"bl") || ends_with(w, b"iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if n >= 2 && w[n - 1] == b'y' && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

/// Applies the first matching rule whose stem measure clears `min_m`.
/// Matching alone consumes the step: a matched suffix with a failing
/// measure ends the step without trying shorter alternatives, mirroring
/// the reference implementation's dispatch.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&[u8], &[u8])], min_m: usize) {
    for (suffix, repl) in rules {
        if ends_with(w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) > min_m {
                w.truncate(stem_len);
                w.extend_from_slice(repl);
            }
            return;
        }
    }
}

fn step2(w: &mut Vec<u8>) {
    const RULES: &[(&[u8], &[u8])] = &[
        (b"ational", b"ate"),
        (b"tional", b"tion"),
        (b"enci", b"ence"),
        (b"anci", b"ance"),
        (b"izer", b"ize"),
        (b"bli", b"ble"),
        (b"alli", b"al"),
        (b"entli", b"ent"),
        (b"eli", b"e"),
        (b"ousli", b"ous"),
        (b"ization", b"ize"),
        (b"ation", b"ate"),
        (b"ator", b"ate"),
        (b"alism", b"al"),
        (b"iveness", b"ive"),
        (b"fulness", b"ful"),
        (b"ousness", b"ous"),
        (b"aliti", b"al"),
        (b"iviti", b"ive"),
        (b"biliti", b"ble"),
        (b"logi", b"log"),
    ];
    apply_rules(w, RULES, 0);
}

fn step3(w: &mut Vec<u8>) {
    const RULES: &[(&[u8], &[u8])] = &[
        (b"icate", b"ic"),
        (b"ative", b""),
        (b"alize", b"al"),
        (b"iciti", b"ic"),
        (b"ical", b"ic"),
        (b"ful", b""),
        (b"ness", b""),
    ];
    apply_rules(w, RULES, 0);
}

fn step4(w: &mut Vec<u8>) {
    const RULES: &[(&[u8], &[u8])] = &[
        (b"al", b""),
        (b"ance", b""),
        (b"ence", b""),
        (b"er", b""),
        (b"ic", b""),
        (b"able", b""),
        (b"ible", b""),
        (b"ant", b""),
        (b"ement", b""),
        (b"ment", b""),
        (b"ent", b""),
        // "ion" handled below: it needs the preceding-letter check.
        (b"ou", b""),
        (b"ism", b""),
        (b"ate", b""),
        (b"iti", b""),
        (b"ous", b""),
        (b"ive", b""),
        (b"ize", b""),
    ];
    if ends_with(w, b"ion") {
        let stem_len = w.len() - 3;
        if stem_len > 0
            && matches!(w[stem_len - 1], b's' | b't')
            && measure(&w[..stem_len]) > 1
        {
            w.truncate(stem_len);
        }
        return;
    }
    apply_rules(w, RULES, 1);
}

fn step5(w: &mut Vec<u8>) {
    // 5a: drop a trailing e unless the stem is short or ends cvc.
    if w.last() == Some(&b'e') && w.len() > 1 {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
    // 5b: collapse a trailing double l on long words.
    if w.last() == Some(&b'l') && ends_double_cons(w) && measure(w) > 1 {
        w.pop();
    }
}
