use std::fmt;

use crate::address::CellAddr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 12] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
        BinaryOp::Concat,
        BinaryOp::Eq,
        BinaryOp::Neq,
        BinaryOp::Lt,
        BinaryOp::Gt,
        BinaryOp::Le,
        BinaryOp::Ge,
    ];

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Eq | BinaryOp::Neq | BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge => 1,
            BinaryOp::Concat => 2,
            BinaryOp::Add | BinaryOp::Sub => 3,
            BinaryOp::Mul | BinaryOp::Div => 4,
            BinaryOp::Pow => 5,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinaryOp::Pow
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Neq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Plus,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
        }
    }
}

pub(crate) const UNARY_PRECEDENCE: u8 = 6;
pub(crate) const PERCENT_PRECEDENCE: u8 = 7;
pub(crate) const ATOM_PRECEDENCE: u8 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorLit {
    Div0,
    Na,
    Name,
    Null,
    Num,
    Ref,
    Value,
}

impl ErrorLit {
    pub const ALL: [ErrorLit; 7] = [
        ErrorLit::Div0,
        ErrorLit::Na,
        ErrorLit::Name,
        ErrorLit::Null,
        ErrorLit::Num,
        ErrorLit::Ref,
        ErrorLit::Value,
    ];

    pub fn text(self) -> &'static str {
        match self {
            ErrorLit::Div0 => "#DIV/0!",
            ErrorLit::Na => "#N/A",
            ErrorLit::Name => "#NAME?",
            ErrorLit::Null => "#NULL!",
            ErrorLit::Num => "#NUM!",
            ErrorLit::Ref => "#REF!",
            ErrorLit::Value => "#VALUE!",
        }
    }

    pub fn from_text(s: &str) -> Option<ErrorLit> {
        ErrorLit::ALL.into_iter().find(|e| e.text().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ErrorLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Parse tree of a spreadsheet formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FormulaAst {
    /// Canonical decimal lexeme, see [`canonical_number`](super::canonical_number).
    Number(String),
    Text(String),
    Boolean(bool),
    Error(ErrorLit),
    CellRef(CellAddr),
    RangeRef(CellAddr, CellAddr),
    FuncCall {
        name: String,
        args: Vec<FormulaAst>,
    },
    BinOp {
        op: BinaryOp,
        lhs: Box<FormulaAst>,
        rhs: Box<FormulaAst>,
    },
    UnaryOp {
        op: UnaryOp,
        operand: Box<FormulaAst>,
    },
    Percent(Box<FormulaAst>),
    QueryVar(String),
}

impl FormulaAst {
    pub fn binary(op: BinaryOp, lhs: FormulaAst, rhs: FormulaAst) -> Self {
        FormulaAst::BinOp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn unary(op: UnaryOp, operand: FormulaAst) -> Self {
        FormulaAst::UnaryOp {
            op,
            operand: Box::new(operand),
        }
    }

    pub fn call(name: impl Into<String>, args: Vec<FormulaAst>) -> Self {
        FormulaAst::FuncCall {
            name: name.into(),
            args,
        }
    }

    pub fn num(lexeme: impl Into<String>) -> Self {
        FormulaAst::Number(lexeme.into())
    }

    pub fn cell(a1: &str) -> Self {
        FormulaAst::CellRef(CellAddr::parse(a1).expect("valid A1 reference"))
    }

    pub fn range(a: &str, b: &str) -> Self {
        FormulaAst::RangeRef(
            CellAddr::parse(a).expect("valid A1 reference"),
            CellAddr::parse(b).expect("valid A1 reference"),
        )
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            FormulaAst::BinOp { op, .. } => op.precedence(),
            FormulaAst::UnaryOp { .. } => UNARY_PRECEDENCE,
            FormulaAst::Percent(_) => PERCENT_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    pub fn contains_query_vars(&self) -> bool {
        match self {
            FormulaAst::QueryVar(_) => true,
            FormulaAst::FuncCall { args, .. } => args.iter().any(Self::contains_query_vars),
            FormulaAst::BinOp { lhs, rhs, .. } => lhs.contains_query_vars() || rhs.contains_query_vars(),
            FormulaAst::UnaryOp { operand, .. } | FormulaAst::Percent(operand) => operand.contains_query_vars(),
            _ => false,
        }
    }
}
