/// Splits text into word and punctuation pieces whose concatenation is the input.
///
/// A single space attaches to the following word or punctuation mark (`" apple"`,
/// `" ("`); every other whitespace character is its own piece. Alphanumeric runs form
/// one piece and each other character is a piece of its own.
pub fn split_pieces(text: &str) -> alloc::vec::Vec<&str> {
    let mut pieces = alloc::vec::Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let mut chars = rest.char_indices();
        let (_, first) = chars.next().expect("non-empty");
        let start_unit = if first == ' ' {
            match chars.next() {
                Some((i, c)) if !c.is_whitespace() => Some(i),
                _ => None,
            }
        } else if first.is_whitespace() {
            None
        } else {
            Some(0)
        };
        let end = match start_unit {
            None => first.len_utf8(),
            Some(i) => {
                let unit = &rest[i..];
                let c = unit.chars().next().expect("unit char");
                let len = if c.is_alphanumeric() {
                    unit.find(|ch: char| !ch.is_alphanumeric())
                        .unwrap_or(unit.len())
                } else {
                    c.len_utf8()
                };
                i + len
            }
        };
        pieces.push(&rest[..end]);
        rest = &rest[end..];
    }
    pieces
}
