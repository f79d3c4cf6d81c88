use std::fmt;

/// Elementary functions accepted by the expression grammar.
///
/// Every function is smooth on the interior of its real domain, so 2-jets
/// exist wherever evaluation succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Atan,
    Atan2,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Atan,
        Func::Atan2,
    ];

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
            Func::Atan2 => "atan2",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree over the two surface parameters.
///
/// `Param(0)` and `Param(1)` refer to the first and second declared
/// parameter; names live in the owning [`ImmersionSpec`](super::ImmersionSpec).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Param(usize),
    Pi,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Num(value)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Builds a call node, returning `None` when the argument count does not
    /// match the function's arity.
    pub fn call(func: Func, args: Vec<Expr>) -> Option<Expr> {
        (args.len() == func.arity()).then_some(Expr::Call(func, args))
    }

    /// True when the expression mentions neither parameter.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::Param(_) => false,
            Expr::Neg(inner) => inner.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
        }
    }

    /// Canonical printer using the given parameter names. The output
    /// re-parses to a structurally identical tree.
    pub fn display<'a>(&'a self, names: &'a [String; 2]) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Param(_) | Expr::Pi | Expr::Call(..) => 5,
        }
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a Expr,
    names: &'a [String; 2],
}

impl DisplayExpr<'_> {
    fn child<'b>(&'b self, expr: &'b Expr) -> DisplayExpr<'b> {
        DisplayExpr {
            expr,
            names: self.names,
        }
    }

    fn write_at_least(&self, f: &mut fmt::Formatter<'_>, expr: &Expr, level: u8) -> fmt::Result {
        if expr.precedence() < level {
            write!(f, "({})", self.child(expr))
        } else {
            write!(f, "{}", self.child(expr))
        }
    }
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Param(i) => f.write_str(&self.names[*i]),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                self.write_at_least(f, inner, 3)
            }
            Expr::Binary(op, lhs, rhs) => {
                // left-associative levels take the lhs at their own level and
                // the rhs one level tighter; `^` takes an atom base and a unary exponent
                let (left_level, right_level) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                self.write_at_least(f, lhs, left_level)?;
                match op {
                    BinOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                self.write_at_least(f, rhs, right_level)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, arg) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", self.child(arg))?;
                }
                f.write_str(")")
            }
        }
    }
}
