//! Byte-level helpers shared by the header harvester and the call-site scanner.

#[inline]
pub fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_c_identifier(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty() && !b[0].is_ascii_digit() && b.iter().all(|&c| is_word_byte(c))
}

/// Iterates over maximal runs of word bytes that form C identifiers, yielding
/// `(byte_offset, identifier)`. Runs starting with a digit are numbers and are
/// skipped whole, so `0x1f` never yields `x1f`.
pub fn identifiers(text: &[u8]) -> Identifiers<'_> {
    Identifiers { text, pos: 0 }
}

pub struct Identifiers<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Iterator for Identifiers<'a> {
    type Item = (usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        let text = self.text;
        loop {
            while self.pos < text.len() && !is_word_byte(text[self.pos]) {
                self.pos += 1;
            }
            if self.pos >= text.len() {
                return None;
            }
            let start = self.pos;
            while self.pos < text.len() && is_word_byte(text[self.pos]) {
                self.pos += 1;
            }
            if text[start].is_ascii_digit() {
                continue;
            }
            // word bytes are ASCII
            let word = std::str::from_utf8(&text[start..self.pos]).expect("ascii identifier");
            return Some((start, word));
        }
    }
}
