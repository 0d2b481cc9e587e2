use super::{BinaryOp, ExprAst, ExprError, Func, UnaryOp, Var};

/// Nesting limit; keeps hostile input from exhausting the stack.
const MAX_DEPTH: usize = 200;

/// Parses an expression. Whitespace is insignificant.
pub fn parse(source: &str) -> Result<ExprAst, ExprError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax(&["operator", "end of input"]));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, expected: &[&'static str]) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            expected: expected.to_vec(),
        }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax(&["shallower nesting"]));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<ExprAst, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprAst, ExprError> {
        self.enter()?;
        let out = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                ExprAst::Unary(UnaryOp::Neg, Box::new(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()?
            }
            _ => self.power()?,
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<ExprAst, ExprError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(ExprAst::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<ExprAst, ExprError> {
        const EXPECTED: &[&str] = &["number", "identifier", "("];
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax(&[")"]));
                }
                self.pos += 1;
                Ok(e)
            }
            _ => Err(self.syntax(EXPECTED)),
        }
    }

    fn number(&mut self) -> Result<ExprAst, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            let digits = j;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
            }
            if j > digits {
                i = j;
            }
        }
        // the slice is pure ASCII by construction
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(ExprAst::Const(v))
            }
            _ => Err(ExprError::Syntax {
                offset: start,
                expected: vec!["finite number"],
            }),
        }
    }

    fn ident(&mut self) -> Result<ExprAst, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).unwrap_or("");
        self.pos = i;
        match name {
            "t" => return Ok(ExprAst::Var(Var::T)),
            "x" => return Ok(ExprAst::Var(Var::X)),
            _ => {}
        }
        let Some(func) = Func::lookup(name) else {
            return Err(ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            });
        };
        if self.peek() != Some(b'(') {
            return Err(self.syntax(&["("]));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        if self.peek() != Some(b')') {
            return Err(self.syntax(&[",", ")"]));
        }
        if args.len() != func.arity() {
            return Err(ExprError::Syntax {
                offset: self.pos,
                expected: vec![if func.arity() == 1 { "1 argument" } else { "2 arguments" }],
            });
        }
        self.pos += 1;
        Ok(ExprAst::Call(func, args))
    }
}
