use super::{is_reserved_name, is_valid_name, Concept, Conditional, ConditionalError, Probability, TBox};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of line, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("unexpected token `{found}`, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("name `{0}` uses the reserved prefix `_N`")]
    ReservedName(String),
    #[error("invalid probability `{0}`")]
    InvalidNumber(String),
    #[error(transparent)]
    Bounds(#[from] ConditionalError),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept `_N…` names, as written by the normalizer.
    pub allow_reserved: bool,
}

#[derive(Debug)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        let single = matches!(ch, '(' | ')' | '|');
        if ch.is_whitespace() || single {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
            if single {
                tokens.push(Token {
                    text: &line[i..i + 1],
                    column: i + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    tokens
}

struct Cursor<'a, 't> {
    tokens: &'t [Token<'a>],
    pos: usize,
    line: usize,
    end_column: usize,
    options: ParseOptions,
}

impl<'a, 't> Cursor<'a, 't> {
    fn error(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn next(&mut self, expected: &'static str) -> Result<&'t Token<'a>, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| self.error(self.end_column, ParseErrorKind::UnexpectedEnd(expected)))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, text: &'static str) -> Result<(), ParseError> {
        let tok = self.next(text)?;
        if tok.text == text {
            Ok(())
        } else {
            Err(self.error(
                tok.column,
                ParseErrorKind::Unexpected {
                    found: tok.text.to_string(),
                    expected: text,
                },
            ))
        }
    }

    fn name(&mut self, expected: &'static str) -> Result<String, ParseError> {
        let tok = self.next(expected)?;
        self.check_name(tok)
    }

    fn check_name(&self, tok: &Token<'_>) -> Result<String, ParseError> {
        if !is_valid_name(tok.text) {
            return Err(self.error(tok.column, ParseErrorKind::InvalidName(tok.text.to_string())));
        }
        if !self.options.allow_reserved && is_reserved_name(tok.text) {
            return Err(self.error(tok.column, ParseErrorKind::ReservedName(tok.text.to_string())));
        }
        Ok(tok.text.to_string())
    }

    fn probability(&mut self) -> Result<(Probability, usize), ParseError> {
        let tok = self.next("a probability")?;
        let value: f64 = tok
            .text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| self.error(tok.column, ParseErrorKind::InvalidNumber(tok.text.to_string())))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(self.error(tok.column, ParseErrorKind::Bounds(ConditionalError::OutOfRange(value))));
        }
        Ok((Probability::with_text(value, tok.text.to_string()), tok.column))
    }

    fn concept(&mut self) -> Result<Concept, ParseError> {
        let tok = self.next("a concept")?;
        match tok.text {
            "top" => Ok(Concept::Top),
            "(" => {
                let op = self.next("`and` or `some`")?;
                let c = match op.text {
                    "and" => {
                        let l = self.concept()?;
                        let r = self.concept()?;
                        Concept::and(l, r)
                    }
                    "some" => {
                        let role = self.name("a role name")?;
                        let filler = self.concept()?;
                        Concept::exists(role, filler)
                    }
                    other => {
                        return Err(self.error(
                            op.column,
                            ParseErrorKind::Unexpected {
                                found: other.to_string(),
                                expected: "`and` or `some`",
                            },
                        ))
                    }
                };
                self.expect(")")?;
                Ok(c)
            }
            _ => Ok(Concept::Atomic(self.check_name(tok)?)),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(tok) => Err(self.error(
                tok.column,
                ParseErrorKind::Unexpected {
                    found: tok.text.to_string(),
                    expected: "end of line",
                },
            )),
        }
    }
}

fn parse_statement(cur: &mut Cursor<'_, '_>) -> Result<Conditional, ParseError> {
    let keyword = cur.next("`cond` or `gci`")?;
    match keyword.text {
        "cond" => {
            let (lower, col) = cur.probability()?;
            let (upper, _) = cur.probability()?;
            let head = cur.concept()?;
            cur.expect("|")?;
            let body = cur.concept()?;
            cur.finish()?;
            Conditional::new(head, body, lower, upper).map_err(|e| cur.error(col, e.into()))
        }
        "gci" => {
            let body = cur.concept()?;
            let head = cur.concept()?;
            cur.finish()?;
            Ok(Conditional::certain(head, body))
        }
        other => Err(cur.error(
            keyword.column,
            ParseErrorKind::Unexpected {
                found: other.to_string(),
                expected: "`cond` or `gci`",
            },
        )),
    }
}

/// Parses the line-oriented TBox format, rejecting reserved `_N` names.
pub fn parse_tbox(text: &str) -> Result<TBox, ParseError> {
    parse_tbox_with(text, ParseOptions::default())
}

pub fn parse_tbox_with(text: &str, options: ParseOptions) -> Result<TBox, ParseError> {
    let mut tbox = TBox::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            tokens: &tokens,
            pos: 0,
            line: i + 1,
            end_column: line.len() + 1,
            options,
        };
        tbox.push(parse_statement(&mut cur)?);
    }
    Ok(tbox)
}

fn line_cursor<'a, 't>(tokens: &'t [Token<'a>], text: &str, options: ParseOptions) -> Cursor<'a, 't> {
    Cursor {
        tokens,
        pos: 0,
        line: 1,
        end_column: text.len() + 1,
        options,
    }
}

/// Parses a single concept expression.
pub fn parse_concept(text: &str, options: ParseOptions) -> Result<Concept, ParseError> {
    let tokens = tokenize(text);
    let mut cur = line_cursor(&tokens, text, options);
    let c = cur.concept()?;
    cur.finish()?;
    Ok(c)
}

/// Parses a query `HEAD | BODY` and returns `(head, body)`.
pub fn parse_query(text: &str, options: ParseOptions) -> Result<(Concept, Concept), ParseError> {
    let tokens = tokenize(text);
    let mut cur = line_cursor(&tokens, text, options);
    let head = cur.concept()?;
    cur.expect("|")?;
    let body = cur.concept()?;
    cur.finish()?;
    Ok((head, body))
}
