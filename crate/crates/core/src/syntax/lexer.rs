use super::{ParseError, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifiers and keywords.
    Name,
    Punct,
    String,
    Number,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub start: Pos,
    pub end: Pos,
    /// A line break occurs between the previous token and this one.
    pub newline_before: bool,
    /// Whitespace and comments preceding the token.
    pub trivia: String,
}

impl Token {
    pub fn is(&self, punct: &str) -> bool {
        matches!(self.kind, TokenKind::Punct | TokenKind::Name) && self.text == punct
    }
}

const PUNCTS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "??=", "=>", "==",
    "!=", "<=", ">=", "&&", "||", "??", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "**", "<<", ">>", "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*",
    "/", "%", "&", "|", "^", "!", "~", "?", ":", "=", ".",
];

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek2(&self) -> Option<char> {
        self.rest().chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += c.len_utf8() as u32;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit()
}

/// Splits source text into tokens; whitespace and comments become trivia of
/// the following token. The last token is always `Eof`.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        offset: 0,
        line: 1,
        col: 0,
    };
    let mut tokens = Vec::new();
    loop {
        let trivia_start = cur.offset;
        let mut newline = false;
        // trivia
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    if c == '\n' {
                        newline = true;
                    }
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                Some('/') if cur.peek2() == Some('*') => {
                    let start = cur.pos();
                    cur.bump();
                    cur.bump();
                    loop {
                        match cur.peek() {
                            None => return Err(ParseError::new(start, "unterminated comment")),
                            Some('*') if cur.peek2() == Some('/') => {
                                cur.bump();
                                cur.bump();
                                break;
                            }
                            Some(c) => {
                                if c == '\n' {
                                    newline = true;
                                }
                                cur.bump();
                            }
                        }
                    }
                }
                _ => break,
            }
        }
        let trivia = src[trivia_start..cur.offset].to_string();
        let start = cur.pos();
        let begin = cur.offset;
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                start,
                end: start,
                newline_before: newline,
                trivia,
            });
            return Ok(tokens);
        };
        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_part) {
                cur.bump();
            }
            TokenKind::Name
        } else if c.is_ascii_digit() || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur);
            if cur.peek().is_some_and(is_ident_start) {
                return Err(ParseError::new(cur.pos(), "identifier directly after number"));
            }
            TokenKind::Number
        } else if c == '"' || c == '\'' || c == '`' {
            lex_string(&mut cur, c)?;
            TokenKind::String
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.rest().starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct
        } else {
            return Err(ParseError::new(start, format!("unexpected character {c:?}")));
        };
        tokens.push(Token {
            kind,
            text: src[begin..cur.offset].to_string(),
            start,
            end: cur.pos(),
            newline_before: newline,
            trivia,
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>) {
    if cur.peek() == Some('0') && matches!(cur.peek2(), Some('x' | 'X' | 'b' | 'B' | 'o' | 'O')) {
        cur.bump();
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_hexdigit() || c == '_') {
            cur.bump();
        }
        return;
    }
    while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
        cur.bump();
    }
    if cur.peek() == Some('.') {
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let save = (cur.offset, cur.line, cur.col);
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        } else {
            (cur.offset, cur.line, cur.col) = save;
        }
    }
}

fn lex_string(cur: &mut Cursor<'_>, quote: char) -> Result<(), ParseError> {
    let start = cur.pos();
    cur.bump();
    loop {
        match cur.bump() {
            None => return Err(ParseError::new(start, "unterminated string literal")),
            Some('\\') => {
                if cur.bump().is_none() {
                    return Err(ParseError::new(start, "unterminated string literal"));
                }
            }
            Some('\n') if quote != '`' => {
                return Err(ParseError::new(start, "line break in string literal"))
            }
            Some('$') if quote == '`' && cur.peek() == Some('{') => {
                return Err(ParseError::new(start, "template substitutions are not supported"))
            }
            Some(c) if c == quote => return Ok(()),
            Some(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn longest_punctuator_wins() {
        assert_eq!(texts("a === b"), ["a", "===", "b", ""]);
        assert_eq!(texts("...x"), ["...", "x", ""]);
        assert_eq!(texts("x=>1"), ["x", "=>", "1", ""]);
    }

    #[test]
    fn comments_become_trivia() {
        let toks = tokenize("// hi\n/* a\nb */ x").unwrap();
        assert_eq!(toks[0].text, "x");
        assert!(toks[0].newline_before);
        assert_eq!(toks[0].trivia, "// hi\n/* a\nb */ ");
        assert_eq!(toks[0].start, Pos::new(3, 5));
    }

    #[test]
    fn strings_and_numbers() {
        assert_eq!(texts(r#"'a\'b' "c" 1.5e3 0xff .5"#), [r"'a\'b'", r#""c""#, "1.5e3", "0xff", ".5", ""]);
    }

    #[test]
    fn unterminated_string_is_error() {
        let e = tokenize("x = 'abc").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
    }

    #[test]
    fn template_substitution_rejected() {
        assert!(tokenize("`a${b}`").is_err());
        assert_eq!(texts("`plain`"), ["`plain`", ""]);
    }
}
