use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{expr_to_poly, ParseError};
use crate::dist::DistributionSpec;
use crate::rational::Rational;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError::Syntax { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.bump();
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    /// Statements up to (not including) `}` or end of input. A `return`
    /// is only accepted at top level and must be last.
    fn stmts(&mut self, top: bool) -> PResult<(Vec<Stmt>, Option<(Vec<String>, SourceSpan)>)> {
        let mut out = Vec::new();
        let mut ret = None;
        loop {
            self.skip_seps();
            match self.peek() {
                Tok::Eof | Tok::RBrace => break,
                _ => {}
            }
            if self.is_kw("return") {
                let span = self.span();
                if !top {
                    return self.err("`return` is only allowed at the end of the program");
                }
                self.bump();
                let mut vars = vec![self.ident()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    vars.push(self.ident()?);
                }
                ret = Some((vars, span));
                self.skip_seps();
                if *self.peek() != Tok::Eof {
                    return self.err("statements after `return`");
                }
                break;
            }
            out.push(self.stmt()?);
            match self.peek() {
                Tok::Sep | Tok::Eof | Tok::RBrace => {}
                other => {
                    let msg = format!("expected end of statement, found {}", describe(other));
                    return self.err(msg);
                }
            }
        }
        Ok((out, ret))
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.skip_seps();
        self.expect(Tok::LBrace, "`{`")?;
        let (body, _) = self.stmts(false)?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(body)
    }

    /// Looks past newlines for `else`/`elif` and parses the alternative.
    fn else_part(&mut self) -> PResult<Option<Vec<Stmt>>> {
        let save = self.pos;
        self.skip_seps();
        if self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                let s = self.stmt()?;
                return Ok(Some(vec![s]));
            }
            return Ok(Some(self.block()?));
        }
        if self.is_kw("elif") {
            let span = self.span();
            self.bump();
            let s = self.if_tail(span)?;
            return Ok(Some(vec![s]));
        }
        self.pos = save;
        Ok(None)
    }

    /// After `if` (or `elif`) has been consumed.
    fn if_tail(&mut self, span: SourceSpan) -> PResult<Stmt> {
        if self.is_kw("prob") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let pspan = self.span();
            let p = self.const_expr()?;
            self.expect(Tok::RParen, "`)`")?;
            check_probability(&p, pspan)?;
            let then = self.block()?;
            let els = self.else_part()?;
            return Ok(Stmt { kind: StmtKind::ProbIf(p, then, els), span });
        }
        let pred = self.pred()?;
        let then = self.block()?;
        let els = self.else_part()?;
        Ok(Stmt { kind: StmtKind::If(pred, then, els), span })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if self.is_kw("if") {
            self.bump();
            return self.if_tail(span);
        }
        if self.is_kw("while") {
            self.bump();
            let pred = self.pred()?;
            let body = self.block()?;
            return Ok(Stmt { kind: StmtKind::While(pred, body), span });
        }
        if self.is_kw("skip") {
            self.bump();
            return Ok(Stmt { kind: StmtKind::Skip, span });
        }
        let var = self.ident()?;
        self.expect(Tok::Assign, "`:=`")?;
        if self.is_kw("sample") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let dist = self.dist()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Stmt { kind: StmtKind::Sample(var, dist), span });
        }
        let espan = self.span();
        let e = self.expr()?;
        expr_to_poly(&e, &mut |_| 0).map_err(|message| ParseError::NonPolynomial { span: espan, message })?;
        Ok(Stmt { kind: StmtKind::Assign(var, e), span })
    }

    fn dist(&mut self) -> PResult<DistributionSpec> {
        let span = self.span();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            other => return Err(ParseError::Syntax { span, message: format!("expected distribution, found {}", describe(&other)) }),
        };
        self.expect(Tok::LParen, "`(`")?;
        let d = match name.as_str() {
            "bernoulli" => {
                let pspan = self.span();
                let p = self.const_expr()?;
                check_probability(&p, pspan)?;
                DistributionSpec::Bernoulli { p }
            }
            "uniform" => {
                let a = self.const_expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.const_expr()?;
                DistributionSpec::Uniform { a, b }
            }
            "uniformint" => {
                let a = self.int_expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.int_expr()?;
                DistributionSpec::UniformInt { a, b }
            }
            "normal" => {
                let mean = self.const_expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let variance = self.const_expr()?;
                DistributionSpec::Normal { mean, variance }
            }
            "discrete" => {
                let mut outcomes = Vec::new();
                loop {
                    let v = self.const_expr()?;
                    self.expect(Tok::Colon, "`:`")?;
                    let pspan = self.span();
                    let p = self.const_expr()?;
                    check_probability(&p, pspan)?;
                    outcomes.push((v, p));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                DistributionSpec::Discrete { outcomes }
            }
            _ => return Err(ParseError::UnknownDistribution { span, name }),
        };
        self.expect(Tok::RParen, "`)`")?;
        d.validate().map_err(|source| ParseError::BadDistribution { span, source })?;
        Ok(d)
    }

    fn const_expr(&mut self) -> PResult<Rational> {
        let span = self.span();
        let e = self.expr()?;
        const_value(&e).ok_or_else(|| ParseError::Syntax { span, message: "expected a constant".into() })
    }

    fn int_expr(&mut self) -> PResult<i64> {
        let span = self.span();
        let r = self.const_expr()?;
        if !r.is_integer() {
            return Err(ParseError::Syntax { span, message: format!("expected an integer, found {r}") });
        }
        r.to_string().parse().map_err(|_| ParseError::Syntax { span, message: "integer out of range".into() })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = match (&lhs, &rhs) {
                        (Expr::Num(a), Expr::Num(b)) if !b.is_zero() => Expr::Num(a / b),
                        _ => Expr::Div(Box::new(lhs), Box::new(rhs)),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(r) => Expr::Num(-r),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let span = self.span();
            match self.bump() {
                Tok::Number(n) => {
                    let e: u32 = n.parse().map_err(|_| ParseError::Syntax { span, message: "exponent must be a small natural number".into() })?;
                    return Ok(Expr::Pow(Box::new(base), e));
                }
                other => return Err(ParseError::Syntax { span, message: format!("expected exponent, found {}", describe(&other)) }),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                let r: Rational = n.parse().map_err(|_| ParseError::Syntax { span, message: format!("bad number `{n}`") })?;
                Ok(Expr::Num(r))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }

    fn pred(&mut self) -> PResult<Pred> {
        let mut lhs = self.pred_and()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.pred_and()?;
            lhs = Pred::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_and(&mut self) -> PResult<Pred> {
        let mut lhs = self.pred_not()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.pred_not()?;
            lhs = Pred::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn pred_not(&mut self) -> PResult<Pred> {
        if self.is_kw("not") {
            self.bump();
            let inner = self.pred_not()?;
            return Ok(Pred::Not(Box::new(inner)));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(Pred::Bool(true));
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Pred::Bool(false));
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesized predicate or a comparison whose left
            // side starts with a parenthesized expression.
            let save = self.pos;
            if let Ok(cmp) = self.comparison() {
                return Ok(cmp);
            }
            self.pos = save;
            self.bump();
            let p = self.pred()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(p);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Pred> {
        let span = self.span();
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            Tok::EqEq => CmpOp::Eq,
            other => return self.err(format!("expected comparison operator, found {}", describe(other))),
        };
        self.bump();
        let rhs = self.expr()?;
        let diff = Expr::Sub(Box::new(lhs.clone()), Box::new(rhs.clone()));
        let mut names: Vec<String> = Vec::new();
        let p = expr_to_poly(&diff, &mut |v| match names.iter().position(|w| w == v) {
            Some(i) => i as u32,
            None => {
                names.push(v.to_string());
                (names.len() - 1) as u32
            }
        })
        .map_err(|message| ParseError::NonPolynomial { span, message })?;
        if p.degree() > 1 {
            return Err(ParseError::NonlinearGuard { span });
        }
        Ok(Pred::Cmp(lhs, op, rhs))
    }
}

fn check_probability(p: &Rational, span: SourceSpan) -> PResult<()> {
    if p.is_negative() || *p > Rational::one() {
        return Err(ParseError::ProbabilityRange { span, value: p.clone() });
    }
    Ok(())
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "if" | "else" | "elif" | "while" | "return" | "prob" | "sample" | "and" | "or" | "not" | "true" | "false" | "skip"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(n) => format!("number `{n}`"),
        Tok::Sep => "end of statement".into(),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

/// Value of a variable-free expression.
pub fn const_value(e: &Expr) -> Option<Rational> {
    let p = expr_to_poly(e, &mut |_| 0).ok()?;
    if p.degree() == 0 && p.vars().is_empty() {
        Some(p.constant_term())
    } else {
        None
    }
}

/// Parses a complete program into a raw statement list plus return variables.
pub fn parse_raw(src: &str) -> PResult<(Vec<Stmt>, Vec<String>, SourceSpan)> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let (stmts, ret) = p.stmts(true)?;
    if *p.peek() != Tok::Eof {
        return p.err("unbalanced `}`");
    }
    match ret {
        Some((vars, span)) => Ok((stmts, vars, span)),
        None => Err(ParseError::MissingReturn),
    }
}
