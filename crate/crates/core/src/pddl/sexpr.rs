//! Positioned s-expression reader used by the PDDL parser.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Head keyword of a list, if the list starts with an atom.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|l| l.first())
            .and_then(SExpr::as_atom)
    }
}

/// Reads exactly one top-level expression; trailing non-whitespace is an error.
/// Identifiers are lowercased.
pub fn read(text: &str) -> Result<SExpr, PddlError> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    reader.skip_trivia();
    let expr = match reader.peek() {
        None => return Err(PddlError::syntax(reader.pos(), "empty input")),
        Some(_) => reader.expr()?,
    };
    reader.skip_trivia();
    if reader.peek().is_some() {
        return Err(PddlError::syntax(
            reader.pos(),
            "unexpected trailing input after top-level expression",
        ));
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    // Iterative so deeply nested input cannot overflow the stack.
    fn expr(&mut self) -> Result<SExpr, PddlError> {
        let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            match self.peek() {
                None => {
                    return Err(PddlError::syntax(
                        pos,
                        "unexpected end of input, missing ')'",
                    ))
                }
                Some('(') => {
                    self.bump();
                    stack.push((Vec::new(), pos));
                    continue;
                }
                Some(')') => {
                    self.bump();
                    let Some((items, open)) = stack.pop() else {
                        return Err(PddlError::syntax(pos, "unbalanced ')'"));
                    };
                    let list = SExpr::List(items, open);
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(list),
                        None => return Ok(list),
                    }
                }
                Some(_) => {
                    let atom = self.atom(pos)?;
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(atom),
                        None => return Ok(atom),
                    }
                }
            }
        }
    }

    fn atom(&mut self, pos: Pos) -> Result<SExpr, PddlError> {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                break;
            }
            if c.is_control() {
                return Err(PddlError::syntax(
                    self.pos(),
                    "control character in identifier",
                ));
            }
            s.extend(c.to_lowercase());
            self.bump();
        }
        Ok(SExpr::Atom(s, pos))
    }
}
