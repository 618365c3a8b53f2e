use crate::datamodel::{KeyClass, KeyEvent};

/// A word reconstructed from a keystroke stream, with the summed press
/// durations of the keys that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedWord {
    pub text: String,
    pub duration: f64,
}

/// Key-press durations: the increase in timestamp after each keystroke. The
/// last event of a window has no successor and therefore no duration.
pub fn durations(events: &[KeyEvent]) -> Vec<Option<f64>> {
    let mut out: Vec<Option<f64>> = events
        .windows(2)
        .map(|w| Some(w[1].timestamp - w[0].timestamp))
        .collect();
    if !events.is_empty() {
        out.push(None);
    }
    out
}

/// Emoji and other non-ASCII symbols are tokens in their own right; ASCII
/// punctuation only separates words.
pub fn is_symbol_token(tok: &str) -> bool {
    !tok.is_ascii()
}

/// Split a day's keystrokes into words. Alphanumeric keys extend the current
/// word, delete removes its last character, and any other key ends it.
/// Durations under `min_timing` do not count towards a word's duration.
pub fn words(events: &[KeyEvent], min_timing: f64) -> Vec<TypedWord> {
    let durs = durations(events);
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut char_durs: Vec<f64> = Vec::new();

    let flush = |buf: &mut String, char_durs: &mut Vec<f64>, out: &mut Vec<TypedWord>| {
        if !buf.is_empty() {
            out.push(TypedWord {
                text: std::mem::take(buf),
                duration: char_durs.iter().sum(),
            });
        }
        char_durs.clear();
    };

    for (ev, d) in events.iter().zip(durs) {
        let d = d.filter(|v| *v >= min_timing).unwrap_or(0.0);
        match ev.key_class {
            KeyClass::Alphanumeric => {
                if let Some(t) = &ev.char_token {
                    buf.extend(t.chars().flat_map(char::to_lowercase));
                    char_durs.push(d);
                }
            }
            KeyClass::Delete => {
                if buf.pop().is_some() {
                    char_durs.pop();
                }
            }
            KeyClass::Symbol => {
                flush(&mut buf, &mut char_durs, &mut out);
                if let Some(t) = ev.char_token.as_deref().filter(|t| is_symbol_token(t)) {
                    out.push(TypedWord {
                        text: t.to_string(),
                        duration: d,
                    });
                }
            }
            KeyClass::Spacebar | KeyClass::Enter | KeyClass::Autocorrect => {
                flush(&mut buf, &mut char_durs, &mut out);
            }
        }
    }
    flush(&mut buf, &mut char_durs, &mut out);
    out
}

/// Number of app sessions per app: maximal runs of consecutive events in the
/// same app.
pub fn app_sessions(events: &[KeyEvent]) -> Vec<(&str, usize)> {
    let mut out: Vec<(&str, usize)> = Vec::new();
    let mut prev: Option<&str> = None;
    for ev in events {
        let app = ev.app_id.as_str();
        if prev != Some(app) {
            match out.iter_mut().find(|(a, _)| *a == app) {
                Some((_, n)) => *n += 1,
                None => out.push((app, 1)),
            }
            prev = Some(app);
        }
    }
    out
}
