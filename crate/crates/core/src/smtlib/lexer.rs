//! Tokenizer for the SMT-LIB 2.6 subset accepted by the toolchain.

use num_bigint::BigUint;

use super::ParseError;

/// Source position, 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl std::fmt::Display for Loc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    LParen,
    RParen,
    /// Simple or |quoted| symbol, stored unquoted.
    Symbol(String),
    /// Keyword without the leading `:`.
    Keyword(String),
    Numeral(BigUint),
    /// Decimal literal, kept as its source lexeme.
    Decimal(String),
    /// String literal, stored unescaped.
    String(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
}

fn is_simple_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// True when `s` can be printed without `|...|` quoting.
pub fn is_simple_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.chars().next().unwrap().is_ascii_digit()
        && s.chars().all(is_simple_symbol_char)
}

struct Lexer<'a> {
    input: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { input: text.chars().peekable(), line: 1, col: 1 }
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.input.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        loop {
            let loc = self.loc();
            let c = match self.input.peek() {
                Some(c) => *c,
                None => return Ok(None),
            };
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                ';' => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                '(' => {
                    self.bump();
                    return Ok(Some(Token { kind: TokenKind::LParen, loc }));
                }
                ')' => {
                    self.bump();
                    return Ok(Some(Token { kind: TokenKind::RParen, loc }));
                }
                '"' => return self.string_literal(loc).map(Some),
                '|' => return self.quoted_symbol(loc).map(Some),
                ':' => {
                    self.bump();
                    let mut name = String::new();
                    while let Some(&c) = self.input.peek() {
                        if is_simple_symbol_char(c) {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if name.is_empty() {
                        return Err(ParseError::lex(loc, "empty keyword"));
                    }
                    return Ok(Some(Token { kind: TokenKind::Keyword(name), loc }));
                }
                c if c.is_ascii_digit() => return self.number(loc).map(Some),
                c if is_simple_symbol_char(c) => {
                    let mut name = String::new();
                    while let Some(&c) = self.input.peek() {
                        if is_simple_symbol_char(c) {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    return Ok(Some(Token { kind: TokenKind::Symbol(name), loc }));
                }
                c => return Err(ParseError::lex(loc, format!("unexpected character `{c}`"))),
            }
        }
    }

    fn string_literal(&mut self, loc: Loc) -> Result<Token, ParseError> {
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(ParseError::lex(loc, "unterminated string literal")),
                Some('"') => {
                    // `""` is an escaped quote, anything else ends the literal
                    if self.input.peek() == Some(&'"') {
                        self.bump();
                        out.push('"');
                    } else {
                        return Ok(Token { kind: TokenKind::String(out), loc });
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn quoted_symbol(&mut self, loc: Loc) -> Result<Token, ParseError> {
        self.bump(); // opening bar
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(ParseError::lex(loc, "unterminated quoted symbol")),
                Some('|') => return Ok(Token { kind: TokenKind::Symbol(out), loc }),
                Some('\\') => return Err(ParseError::lex(loc, "backslash in quoted symbol")),
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self, loc: Loc) -> Result<Token, ParseError> {
        let mut digits = String::new();
        while let Some(&c) = self.input.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.input.peek() == Some(&'.') {
            self.bump();
            let mut frac = String::new();
            while let Some(&c) = self.input.peek() {
                if c.is_ascii_digit() {
                    frac.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            if frac.is_empty() {
                return Err(ParseError::lex(loc, "decimal without fractional digits"));
            }
            return Ok(Token { kind: TokenKind::Decimal(format!("{digits}.{frac}")), loc });
        }
        if let Some(&c) = self.input.peek() {
            if is_simple_symbol_char(c) {
                return Err(ParseError::lex(loc, format!("malformed numeral `{digits}{c}...`")));
            }
        }
        let value = digits.parse::<BigUint>().expect("digit string");
        Ok(Token { kind: TokenKind::Numeral(value), loc })
    }
}

/// Tokenizes `text`, discarding comments and whitespace.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        tokens.push(tok);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_tokens() {
        let toks = tokenize("(set-logic HORN) ; comment\n(check-sat)").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| &t.kind).collect();
        assert_eq!(kinds.len(), 7);
        assert_eq!(*kinds[1], TokenKind::Symbol("set-logic".into()));
        assert_eq!(toks[0].loc, Loc::new(1, 1));
        assert_eq!(toks[4].loc, Loc::new(2, 1));
    }

    #[test]
    fn numerals_and_decimals() {
        let toks = tokenize("42 0 3.14").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Numeral(42u32.into()));
        assert_eq!(toks[1].kind, TokenKind::Numeral(0u32.into()));
        assert_eq!(toks[2].kind, TokenKind::Decimal("3.14".into()));
    }

    #[test]
    fn big_numeral_does_not_overflow() {
        let digits = "123456789012345678901234567890123456789";
        let toks = tokenize(digits).unwrap();
        assert_eq!(toks[0].kind, TokenKind::Numeral(digits.parse().unwrap()));
    }

    #[test]
    fn quoted_symbol_and_string() {
        let toks = tokenize("|a b| \"he said \"\"hi\"\"\"").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Symbol("a b".into()));
        assert_eq!(toks[1].kind, TokenKind::String("he said \"hi\"".into()));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("\"oops").is_err());
    }

    #[test]
    fn keyword() {
        let toks = tokenize(":status").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword("status".into()));
    }
}
