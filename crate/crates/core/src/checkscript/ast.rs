use std::fmt;

use crate::rules::Status;

/// Source position, 1-based. Spans never take part in AST equality so
/// that `parse(render(p)) == p` holds regardless of layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Self { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckProgram {
    /// Declared by a leading `rule N` line.
    pub rule_id: Option<u8>,
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
        span: Span,
    },
    For {
        var: String,
        iter: Expr,
        body: Vec<Stmt>,
        span: Span,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
        span: Span,
    },
    Classify {
        target: Expr,
        status: Status,
        fields: Vec<Field>,
        span: Span,
    },
    Report {
        value: Expr,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Let { span, .. }
            | Stmt::For { span, .. }
            | Stmt::If { span, .. }
            | Stmt::Classify { span, .. }
            | Stmt::Report { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Measured,
    Required,
    Note,
}

impl FieldKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FieldKind::Measured => "measured",
            FieldKind::Required => "required",
            FieldKind::Note => "note",
        }
    }
}

/// `measured.width=e`, `required=e`, `note=e`. An unnamed measured or
/// required value is recorded under `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub kind: FieldKind,
    pub name: Option<String>,
    pub value: Expr,
    pub span: Span,
}

impl Field {
    pub fn key(&self) -> &str {
        self.name.as_deref().unwrap_or("value")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitWord {
    Mm,
    In,
    Ft,
    Sqft,
    Sqm,
    Cfm,
}

impl UnitWord {
    pub const ALL: [UnitWord; 6] = [
        UnitWord::Mm,
        UnitWord::In,
        UnitWord::Ft,
        UnitWord::Sqft,
        UnitWord::Sqm,
        UnitWord::Cfm,
    ];

    pub fn word(self) -> &'static str {
        match self {
            UnitWord::Mm => "mm",
            UnitWord::In => "in",
            UnitWord::Ft => "ft",
            UnitWord::Sqft => "sqft",
            UnitWord::Sqm => "sqm",
            UnitWord::Cfm => "cfm",
        }
    }

    pub fn from_word(w: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.word() == w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "or",
            BinaryOp::And => "and",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    pub fn precedence(self) -> Prec {
        match self {
            BinaryOp::Or => Prec::Or,
            BinaryOp::And => Prec::And,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => Prec::Compare,
            BinaryOp::Add | BinaryOp::Sub => Prec::Sum,
            BinaryOp::Mul | BinaryOp::Div => Prec::Product,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == Prec::Compare
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Binding strength, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Prec {
    Lambda,
    Or,
    And,
    Not,
    Compare,
    Sum,
    Product,
    Neg,
    Postfix,
    Primary,
}

impl Prec {
    pub fn next(self) -> Prec {
        match self {
            Prec::Lambda => Prec::Or,
            Prec::Or => Prec::And,
            Prec::And => Prec::Not,
            Prec::Not => Prec::Compare,
            Prec::Compare => Prec::Sum,
            Prec::Sum => Prec::Product,
            Prec::Product => Prec::Neg,
            Prec::Neg => Prec::Postfix,
            Prec::Postfix | Prec::Primary => Prec::Primary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number {
        value: f64,
        unit: Option<UnitWord>,
    },
    Str(String),
    Bool(bool),
    Var(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Method {
        receiver: Box<Expr>,
        name: String,
        args: Vec<Expr>,
    },
    /// `x => body`; only valid as an argument of an aggregate.
    Lambda {
        param: String,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn precedence(&self) -> Prec {
        match &self.kind {
            ExprKind::Number { .. }
            | ExprKind::Str(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::Call { .. } => Prec::Primary,
            ExprKind::Method { .. } => Prec::Postfix,
            ExprKind::Unary {
                op: UnaryOp::Neg, ..
            } => Prec::Neg,
            ExprKind::Unary {
                op: UnaryOp::Not, ..
            } => Prec::Not,
            ExprKind::Binary { op, .. } => op.precedence(),
            ExprKind::Lambda { .. } => Prec::Lambda,
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "rule", "let", "for", "in", "if", "else", "and", "or", "not", "true", "false", "classify",
    "report",
];
