use super::{ParseDetail, ParseError, ParseErrorKind, Position, SourceSpan};

#[derive(Debug, Clone)]
pub(crate) struct Attr {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone)]
pub(crate) enum Token {
    Start {
        name: String,
        attrs: Vec<Attr>,
        self_closing: bool,
        span: SourceSpan,
    },
    End {
        name: String,
        span: SourceSpan,
    },
}

/// Maps byte offsets to line/column positions.
pub(crate) struct LineIndex<'a> {
    text: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { text, line_starts }
    }

    pub fn position(&self, offset: usize) -> Position {
        let offset = offset.min(self.text.len());
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[line];
        let column = self.text[start..offset].chars().count() + 1;
        Position {
            line: line as u32 + 1,
            column: column as u32,
            offset,
        }
    }

    pub fn span(&self, start: usize, end: usize) -> SourceSpan {
        SourceSpan {
            start: self.position(start),
            end: self.position(end.max(start)),
        }
    }
}

pub(crate) struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    lines: &'a LineIndex<'a>,
    pub errors: Vec<ParseError>,
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b':'
}

fn is_name_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b':' | b'-' | b'.')
}

impl<'a> Lexer<'a> {
    pub fn new(text: &'a str, lines: &'a LineIndex<'a>) -> Self {
        Self {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            lines,
            errors: Vec::new(),
        }
    }

    fn error(&mut self, start: usize, end: usize, message: impl Into<String>) {
        self.errors.push(ParseError {
            kind: ParseErrorKind::NotWellFormed,
            span: self.lines.span(start, end),
            message: message.into(),
            detail: ParseDetail::None,
            path: None,
        });
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.text[self.pos..].starts_with(s)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn read_name(&mut self) -> Option<String> {
        let start = self.pos;
        if !self.peek().is_some_and(is_name_start) {
            return None;
        }
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        Some(self.text[start..self.pos].to_owned())
    }

    /// Skips past the next `>` (or to end of input) after a malformed tag.
    fn recover_to_gt(&mut self) {
        match self.text[self.pos..].find(['>', '<']) {
            Some(i) if self.bytes[self.pos + i] == b'>' => self.pos += i + 1,
            Some(i) => self.pos += i,
            None => self.pos = self.bytes.len(),
        }
    }

    pub fn next_token(&mut self) -> Option<Token> {
        loop {
            let text_start = self.pos;
            let lt = self.text[self.pos..].find('<').map(|i| self.pos + i);
            let text_end = lt.unwrap_or(self.bytes.len());
            let chunk = &self.text[text_start..text_end];
            if let Some(first) = chunk.find(|c: char| !c.is_whitespace()) {
                let trimmed_end = text_start + chunk.trim_end().len();
                self.error(
                    text_start + first,
                    trimmed_end,
                    format!(
                        "unexpected text \"{}\" between tags",
                        abbreviate(chunk.trim())
                    ),
                );
            }
            self.pos = text_end;
            lt?;

            if self.starts_with("<!--") {
                match self.text[self.pos + 4..].find("-->") {
                    Some(i) => self.pos += 4 + i + 3,
                    None => {
                        self.error(self.pos, self.bytes.len(), "unterminated comment");
                        self.pos = self.bytes.len();
                    }
                }
                continue;
            }
            if self.starts_with("<?") {
                match self.text[self.pos + 2..].find("?>") {
                    Some(i) => self.pos += 2 + i + 2,
                    None => {
                        self.error(self.pos, self.bytes.len(), "unterminated declaration");
                        self.pos = self.bytes.len();
                    }
                }
                continue;
            }
            if self.starts_with("<!") {
                let start = self.pos;
                self.pos += 2;
                self.recover_to_gt();
                self.error(start, self.pos, "markup declarations are not supported");
                continue;
            }
            if self.starts_with("</") {
                let start = self.pos;
                self.pos += 2;
                let name = self.read_name();
                self.skip_ws();
                match (name, self.peek()) {
                    (Some(name), Some(b'>')) => {
                        self.pos += 1;
                        return Some(Token::End {
                            name,
                            span: self.lines.span(start, self.pos),
                        });
                    }
                    _ => {
                        self.recover_to_gt();
                        self.error(start, self.pos, "malformed closing tag");
                        continue;
                    }
                }
            }
            match self.start_tag() {
                Some(tok) => return Some(tok),
                None => continue,
            }
        }
    }

    fn start_tag(&mut self) -> Option<Token> {
        let start = self.pos;
        self.pos += 1;
        let Some(name) = self.read_name() else {
            self.recover_to_gt();
            self.error(start, self.pos, "expected an element name after '<'");
            return None;
        };
        let mut attrs: Vec<Attr> = Vec::new();
        loop {
            let before_ws = self.pos;
            self.skip_ws();
            match self.peek() {
                None => {
                    self.error(start, self.pos, format!("unterminated <{name}> tag"));
                    return None;
                }
                Some(b'>') => {
                    self.pos += 1;
                    return Some(Token::Start {
                        name,
                        attrs,
                        self_closing: false,
                        span: self.lines.span(start, self.pos),
                    });
                }
                Some(b'/') if self.bytes.get(self.pos + 1) == Some(&b'>') => {
                    self.pos += 2;
                    return Some(Token::Start {
                        name,
                        attrs,
                        self_closing: true,
                        span: self.lines.span(start, self.pos),
                    });
                }
                Some(b) if is_name_start(b) && self.pos > before_ws => {
                    let attr_start = self.pos;
                    let attr_name = self.read_name().unwrap_or_default();
                    self.skip_ws();
                    if self.peek() != Some(b'=') {
                        self.recover_to_gt();
                        self.error(
                            attr_start,
                            self.pos,
                            format!("attribute \"{attr_name}\" has no value"),
                        );
                        return None;
                    }
                    self.pos += 1;
                    self.skip_ws();
                    let quote = match self.peek() {
                        Some(q @ (b'"' | b'\'')) => q,
                        _ => {
                            self.recover_to_gt();
                            self.error(
                                attr_start,
                                self.pos,
                                format!("value of attribute \"{attr_name}\" must be quoted"),
                            );
                            return None;
                        }
                    };
                    self.pos += 1;
                    let value_start = self.pos;
                    let rest = &self.text[value_start..];
                    let close = rest.find(quote as char);
                    let lt = rest.find('<');
                    let value_end = match (close, lt) {
                        (Some(c), Some(l)) if l < c => {
                            self.pos = value_start + l;
                            self.error(
                                attr_start,
                                self.pos,
                                format!("unterminated value for attribute \"{attr_name}\""),
                            );
                            return None;
                        }
                        (Some(c), _) => value_start + c,
                        (None, Some(l)) => {
                            self.pos = value_start + l;
                            self.error(
                                attr_start,
                                self.pos,
                                format!("unterminated value for attribute \"{attr_name}\""),
                            );
                            return None;
                        }
                        (None, None) => {
                            self.pos = self.bytes.len();
                            self.error(
                                attr_start,
                                self.pos,
                                format!("unterminated value for attribute \"{attr_name}\""),
                            );
                            return None;
                        }
                    };
                    let raw = &self.text[value_start..value_end];
                    self.pos = value_end + 1;
                    let value = match unescape(raw) {
                        Ok(v) => v,
                        Err(bad) => {
                            self.error(
                                value_start,
                                value_end,
                                format!("unknown entity \"{bad}\" in attribute \"{attr_name}\""),
                            );
                            raw.to_owned()
                        }
                    };
                    if attrs.iter().any(|a| a.name == attr_name) {
                        self.error(
                            attr_start,
                            self.pos,
                            format!("duplicate attribute \"{attr_name}\" on <{name}>"),
                        );
                        continue;
                    }
                    attrs.push(Attr {
                        name: attr_name,
                        value,
                    });
                }
                Some(_) => {
                    let at = self.pos;
                    self.recover_to_gt();
                    self.error(at, self.pos, format!("malformed <{name}> tag"));
                    return None;
                }
            }
        }
    }
}

fn abbreviate(s: &str) -> String {
    const MAX: usize = 40;
    if s.chars().count() <= MAX {
        s.to_owned()
    } else {
        let cut: String = s.chars().take(MAX).collect();
        format!("{cut}...")
    }
}

/// Resolves the five predefined XML entities and numeric character references.
/// On failure returns the offending reference.
pub(crate) fn unescape(raw: &str) -> Result<String, String> {
    if !raw.contains('&') {
        return Ok(raw.to_owned());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp..];
        let Some(semi) = after.find(';') else {
            return Err(abbreviate(after));
        };
        let entity = &after[1..semi];
        let ch = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ => {
                if let Some(hex) = entity.strip_prefix("#x").or_else(|| entity.strip_prefix("#X")) {
                    u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().ok().and_then(char::from_u32)
                } else {
                    None
                }
            }
        };
        match ch {
            Some(c) => out.push(c),
            None => return Err(after[..=semi].to_owned()),
        }
        rest = &after[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
