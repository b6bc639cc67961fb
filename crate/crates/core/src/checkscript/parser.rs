use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Phase, ScriptError};
use crate::rules::{Status, RULE_COUNT};

/// Parse check-script source into a program. Returns the first lexical or
/// syntax error; no partial AST is produced.
pub fn parse(source: &str) -> Result<CheckProgram, ScriptError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn status_word(word: &str) -> Option<Status> {
    match word {
        "compliant" => Some(Status::Compliant),
        "non_compliant" => Some(Status::NonCompliant),
        "not_applicable" => Some(Status::NotApplicable),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ScriptError {
        ScriptError::new(Phase::Parse, self.span(), message)
    }

    fn unexpected(&self, expected: &str) -> ScriptError {
        self.error(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        ))
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn at_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(x) if *x == k)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Span, ScriptError> {
        if self.at_sym(s) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<Span, ScriptError> {
        if self.at_keyword(k) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("`{k}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ScriptError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            Tok::Keyword(k) => Err(self.error(format!(
                "`{k}` is a reserved word and cannot be used as {what}"
            ))),
            _ => Err(self.unexpected(what)),
        }
    }

    fn program(&mut self) -> Result<CheckProgram, ScriptError> {
        let mut prog = CheckProgram::default();
        if self.at_keyword("rule") {
            self.advance();
            let span = self.span();
            match self.peek().clone() {
                Tok::Number(n)
                    if n.fract() == 0.0 && (1.0..=f64::from(RULE_COUNT)).contains(&n) =>
                {
                    self.advance();
                    prog.rule_id = Some(n as u8);
                }
                Tok::Number(_) => {
                    return Err(ScriptError::new(
                        Phase::Parse,
                        span,
                        format!("rule number must be a whole number from 1 to {RULE_COUNT}"),
                    ))
                }
                _ => return Err(self.unexpected("a rule number after `rule`")),
            }
        }
        while *self.peek() != Tok::Eof {
            prog.statements.push(self.statement()?);
        }
        Ok(prog)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ScriptError> {
        self.expect_sym("{")?;
        let mut body = Vec::new();
        while !self.at_sym("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}` to close the block"));
            }
            body.push(self.statement()?);
        }
        self.advance();
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        match self.peek() {
            Tok::Keyword("let") => {
                self.advance();
                let name = self.ident("a variable name")?;
                self.expect_sym("=")?;
                let value = self.expr()?;
                Ok(Stmt::Let { name, value, span })
            }
            Tok::Keyword("for") => {
                self.advance();
                let var = self.ident("a loop variable")?;
                self.expect_keyword("in")?;
                let iter = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::For {
                    var,
                    iter,
                    body,
                    span,
                })
            }
            Tok::Keyword("if") => self.if_statement(),
            Tok::Keyword("classify") => self.classify(),
            Tok::Keyword("report") => {
                self.advance();
                self.expect_sym("(")?;
                let value = self.expr()?;
                self.expect_sym(")")?;
                Ok(Stmt::Report { value, span })
            }
            Tok::Ident(name) if matches!(self.peek_at(1), Tok::Sym("=")) => {
                Err(self.error(format!("assignment needs `let`: write `let {name} = ...`")))
            }
            _ => Err(self.unexpected("a statement (let, for, if, classify or report)")),
        }
    }

    fn if_statement(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.expect_keyword("if")?;
        let cond = self.expr()?;
        let then_body = self.block()?;
        let else_body = if self.at_keyword("else") {
            self.advance();
            if self.at_keyword("if") {
                Some(vec![self.if_statement()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then_body,
            else_body,
            span,
        })
    }

    fn classify(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.expect_keyword("classify")?;
        self.expect_sym("(")?;
        let target = self.expr()?;
        self.expect_sym(",")?;
        let status = match self.peek() {
            Tok::Ident(w) => status_word(w).ok_or_else(|| {
                self.error(format!(
                    "unknown status `{w}`; use compliant, non_compliant or not_applicable"
                ))
            })?,
            _ => {
                return Err(self.unexpected("a status (compliant, non_compliant or not_applicable)"))
            }
        };
        self.advance();
        let mut fields = Vec::new();
        while self.at_sym(",") {
            self.advance();
            fields.push(self.field()?);
        }
        self.expect_sym(")")?;
        Ok(Stmt::Classify {
            target,
            status,
            fields,
            span,
        })
    }

    fn field(&mut self) -> Result<Field, ScriptError> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::Ident(w) if w == "measured" => FieldKind::Measured,
            Tok::Ident(w) if w == "required" => FieldKind::Required,
            Tok::Ident(w) if w == "note" => FieldKind::Note,
            _ => return Err(self.unexpected("`measured=`, `required=` or `note=`")),
        };
        self.advance();
        let name = if kind != FieldKind::Note && self.at_sym(".") {
            self.advance();
            Some(self.ident("a value name")?)
        } else {
            None
        };
        self.expect_sym("=")?;
        let value = self.expr()?;
        Ok(Field {
            kind,
            name,
            value,
            span,
        })
    }

    pub fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.binary(Prec::Or)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::Keyword("or") => BinaryOp::Or,
            Tok::Keyword("and") => BinaryOp::And,
            Tok::Sym("==") => BinaryOp::Eq,
            Tok::Sym("!=") => BinaryOp::Ne,
            Tok::Sym("<") => BinaryOp::Lt,
            Tok::Sym("<=") => BinaryOp::Le,
            Tok::Sym(">") => BinaryOp::Gt,
            Tok::Sym(">=") => BinaryOp::Ge,
            Tok::Sym("+") => BinaryOp::Add,
            Tok::Sym("-") => BinaryOp::Sub,
            Tok::Sym("*") => BinaryOp::Mul,
            Tok::Sym("/") => BinaryOp::Div,
            _ => return None,
        })
    }

    /// Left-associative binary levels; comparisons do not chain.
    fn binary(&mut self, level: Prec) -> Result<Expr, ScriptError> {
        match level {
            Prec::Not => return self.not_expr(),
            Prec::Neg => return self.neg_expr(),
            _ => {}
        }
        let mut lhs = self.binary(level.next())?;
        while let Some(op) = self.binary_op().filter(|op| op.precedence() == level) {
            let span = self.advance().span;
            let rhs = self.binary(level.next())?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
            if level == Prec::Compare && self.binary_op().is_some_and(BinaryOp::is_comparison) {
                return Err(self.error("comparisons cannot be chained; combine them with `and`"));
            }
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ScriptError> {
        if self.at_keyword("not") {
            let span = self.advance().span;
            let operand = self.not_expr()?;
            return Ok(Expr::new(
                ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.binary(Prec::Compare)
    }

    fn neg_expr(&mut self) -> Result<Expr, ScriptError> {
        if self.at_sym("-") {
            let span = self.advance().span;
            let operand = self.neg_expr()?;
            return Ok(Expr::new(
                ExprKind::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        while self.at_sym(".") {
            let span = self.advance().span;
            let name = self.ident("a method name after `.`")?;
            if !self.at_sym("(") {
                return Err(ScriptError::new(
                    Phase::Parse,
                    span,
                    format!(
                        "`.{name}` is not a method call; read parameters with .param(\"{name}\")"
                    ),
                ));
            }
            let args = self.args()?;
            e = Expr::new(
                ExprKind::Method {
                    receiver: Box::new(e),
                    name,
                    args,
                },
                span,
            );
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ScriptError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                args.push(self.arg()?);
                if !self.at_sym(",") {
                    break;
                }
                self.advance();
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn arg(&mut self) -> Result<Expr, ScriptError> {
        if let (Tok::Ident(param), Tok::Sym("=>")) = (self.peek().clone(), self.peek_at(1)) {
            let span = self.advance().span;
            self.advance();
            let body = self.expr()?;
            return Ok(Expr::new(
                ExprKind::Lambda {
                    param,
                    body: Box::new(body),
                },
                span,
            ));
        }
        self.expr()
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Number(value) => {
                self.advance();
                let unit = match self.peek() {
                    Tok::Ident(w) => UnitWord::from_word(w),
                    Tok::Keyword("in") => Some(UnitWord::In),
                    _ => None,
                };
                if unit.is_some() {
                    self.advance();
                }
                ExprKind::Number { value, unit }
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Tok::Keyword("true") => {
                self.advance();
                ExprKind::Bool(true)
            }
            Tok::Keyword("false") => {
                self.advance();
                ExprKind::Bool(false)
            }
            Tok::Ident(name) => {
                self.advance();
                if self.at_sym("(") {
                    let args = self.args()?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            Tok::Sym("(") => {
                self.advance();
                let inner = self.expr()?;
                self.expect_sym(")")?;
                return Ok(inner);
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr::new(kind, span))
    }
}
