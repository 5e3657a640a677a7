//! Straight-line evaluation procedures over a small elemental library.
//!
//! A procedure is an ordered list of nodes. Every node applies one elemental
//! to earlier nodes, so evaluation in index order never reads an unwritten
//! value. Inputs and constants are nodes too, which keeps the linearization
//! and Lipschitz recurrences uniform.

mod custom;
mod dsl;
mod lower;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use custom::{CustomElemental, PartialsFn, TaylorFn, ValueFn};
pub use dsl::{parse_expression, parse_function_file, ParseError};
pub use lower::lower_minmax;

/// Index of a custom elemental in the registry of its procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementalId(pub usize);

/// Index of a node within a procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Opcode {
    Input(usize),
    Const(f64),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Abs,
    Min,
    Max,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Square,
    PowInt(u32),
    Recip,
    Custom(ElementalId),
}

impl Opcode {
    /// Number of operands, or `None` for custom elementals whose arity lives in
    /// the registry.
    pub fn arity(&self) -> Option<usize> {
        use Opcode::*;
        match self {
            Input(_) | Const(_) => Some(0),
            Abs | Neg | Sin | Cos | Exp | Log | Sqrt | Square | PowInt(_) | Recip => Some(1),
            Add | Sub | Mul | Div | Min | Max => Some(2),
            Custom(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        use Opcode::*;
        match self {
            Input(_) => "input",
            Const(_) => "const",
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            Neg => "neg",
            Abs => "abs",
            Min => "min",
            Max => "max",
            Sin => "sin",
            Cos => "cos",
            Exp => "exp",
            Log => "log",
            Sqrt => "sqrt",
            Square => "sqr",
            PowInt(_) => "pow",
            Recip => "recip",
            Custom(_) => "custom",
        }
    }

    /// Smooth univariate elementals of the library (everything unary except abs).
    pub fn is_smooth_unary(&self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Neg | Sin | Cos | Exp | Log | Sqrt | Square | PowInt(_) | Recip
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub op: Opcode,
    pub args: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TapeError {
    #[error("domain error at node {node} ({op}): {reason}")]
    Domain {
        node: usize,
        op: &'static str,
        reason: String,
    },
    #[error("node {node}: {op} expects {expected} operand(s), got {got}")]
    Arity {
        node: usize,
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("node {node} reads node {arg}, which is not an earlier node")]
    NotTopological { node: usize, arg: usize },
    #[error("output index {0} is out of range")]
    BadOutput(usize),
    #[error("input slot {slot} out of range for n = {n}")]
    BadInput { slot: usize, n: usize },
    #[error("pow exponent must be at least 2, got {0}")]
    BadExponent(u32),
    #[error("custom elemental {0:?} is already registered")]
    DuplicateElemental(String),
    #[error("unknown custom elemental id {0}")]
    UnknownElemental(usize),
    #[error("expected {expected} input values, got {got}")]
    InputLength { expected: usize, got: usize },
}

impl TapeError {
    /// Node index carried by a domain error.
    pub fn node(&self) -> Option<usize> {
        match self {
            TapeError::Domain { node, .. } => Some(*node),
            _ => None,
        }
    }
}

/// Values of every node after evaluation at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace {
    pub values: Vec<f64>,
    pub outputs: Vec<f64>,
}

/// An immutable straight-line program computing `F: R^n -> R^m`.
#[derive(Clone)]
pub struct EvalProcedure {
    n: usize,
    nodes: Vec<Node>,
    outputs: Vec<usize>,
    customs: Vec<Arc<CustomElemental>>,
}

impl fmt::Debug for EvalProcedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvalProcedure")
            .field("n", &self.n)
            .field("nodes", &self.nodes)
            .field("outputs", &self.outputs)
            .field(
                "customs",
                &self.customs.iter().map(|c| c.name()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl EvalProcedure {
    /// Builds a procedure from raw parts, checking arity and topological order.
    pub fn from_parts(
        n: usize,
        nodes: Vec<Node>,
        outputs: Vec<usize>,
        customs: Vec<Arc<CustomElemental>>,
    ) -> Result<Self, TapeError> {
        for (i, node) in nodes.iter().enumerate() {
            let expected = match node.op {
                Opcode::Custom(id) => customs
                    .get(id.0)
                    .ok_or(TapeError::UnknownElemental(id.0))?
                    .arity(),
                op => op.arity().unwrap(),
            };
            if node.args.len() != expected {
                return Err(TapeError::Arity {
                    node: i,
                    op: node.op.name(),
                    expected,
                    got: node.args.len(),
                });
            }
            if let Some(&arg) = node.args.iter().find(|&&a| a >= i) {
                return Err(TapeError::NotTopological { node: i, arg });
            }
            match node.op {
                Opcode::Input(slot) if slot >= n => return Err(TapeError::BadInput { slot, n }),
                Opcode::PowInt(k) if k < 2 => return Err(TapeError::BadExponent(k)),
                _ => {}
            }
        }
        if let Some(&bad) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return Err(TapeError::BadOutput(bad));
        }
        Ok(Self {
            n,
            nodes,
            outputs,
            customs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    /// Number of abs nodes.
    pub fn s(&self) -> usize {
        self.nodes.iter().filter(|nd| nd.op == Opcode::Abs).count()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn customs(&self) -> &[Arc<CustomElemental>] {
        &self.customs
    }

    pub fn custom(&self, id: ElementalId) -> &CustomElemental {
        &self.customs[id.0]
    }

    pub fn has_minmax(&self) -> bool {
        self.nodes
            .iter()
            .any(|nd| matches!(nd.op, Opcode::Min | Opcode::Max))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<EvalTrace, TapeError> {
        if x.len() != self.n {
            return Err(TapeError::InputLength {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut values: Vec<f64> = Vec::with_capacity(self.nodes.len());
        let mut buf = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            buf.clear();
            buf.extend(node.args.iter().map(|&a| values[a]));
            let v = apply(self, i, node.op, &buf, x)?;
            values.push(v);
        }
        let outputs = self.outputs.iter().map(|&o| values[o]).collect();
        Ok(EvalTrace { values, outputs })
    }

    /// Shorthand for the output vector of [`evaluate`](Self::evaluate).
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, TapeError> {
        self.evaluate(x).map(|t| t.outputs)
    }

    /// Builder seeded with this procedure's nodes and custom registry.
    pub fn to_builder(&self) -> ProcBuilder {
        let mut b = ProcBuilder::new(self.n);
        b.customs = self.customs.clone();
        for node in &self.nodes {
            b.push_raw(node.op, node.args.clone());
        }
        b
    }
}

fn domain(node: usize, op: Opcode, reason: impl Into<String>) -> TapeError {
    TapeError::Domain {
        node,
        op: op.name(),
        reason: reason.into(),
    }
}

/// Applies one elemental. Every domain violation surfaces as [`TapeError::Domain`].
pub(crate) fn apply(
    proc: &EvalProcedure,
    node: usize,
    op: Opcode,
    a: &[f64],
    x: &[f64],
) -> Result<f64, TapeError> {
    use Opcode::*;
    let v = match op {
        Input(slot) => x[slot],
        Const(c) => c,
        Add => a[0] + a[1],
        Sub => a[0] - a[1],
        Mul => a[0] * a[1],
        Div => {
            if a[1] == 0.0 {
                return Err(domain(node, op, "division by zero"));
            }
            a[0] / a[1]
        }
        Neg => -a[0],
        Abs => a[0].abs(),
        Min => a[0].min(a[1]),
        Max => a[0].max(a[1]),
        Sin => a[0].sin(),
        Cos => a[0].cos(),
        Exp => a[0].exp(),
        Log => {
            if a[0] <= 0.0 {
                return Err(domain(node, op, format!("log of {}", a[0])));
            }
            a[0].ln()
        }
        Sqrt => {
            if a[0] < 0.0 {
                return Err(domain(node, op, format!("sqrt of {}", a[0])));
            }
            a[0].sqrt()
        }
        Square => a[0] * a[0],
        PowInt(k) => a[0].powi(k as i32),
        Recip => {
            if a[0] == 0.0 {
                return Err(domain(node, op, "reciprocal of zero"));
            }
            1.0 / a[0]
        }
        Custom(id) => {
            let elem = &proc.customs[id.0];
            elem.value(a)
                .ok_or_else(|| domain(node, op, format!("{} undefined at {:?}", elem.name(), a)))?
        }
    };
    if !v.is_finite() {
        return Err(domain(node, op, format!("non-finite value {v}")));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum NodeKey {
    Input(usize),
    Const(u64),
    Op(u8, u32, usize, Vec<usize>),
}

fn node_key(op: Opcode, args: &[usize]) -> NodeKey {
    use Opcode::*;
    let (tag, extra, custom) = match op {
        Input(slot) => return NodeKey::Input(slot),
        Const(c) => return NodeKey::Const(c.to_bits()),
        Add => (0, 0, 0),
        Sub => (1, 0, 0),
        Mul => (2, 0, 0),
        Div => (3, 0, 0),
        Neg => (4, 0, 0),
        Abs => (5, 0, 0),
        Min => (6, 0, 0),
        Max => (7, 0, 0),
        Sin => (8, 0, 0),
        Cos => (9, 0, 0),
        Exp => (10, 0, 0),
        Log => (11, 0, 0),
        Sqrt => (12, 0, 0),
        Square => (13, 0, 0),
        PowInt(k) => (14, k, 0),
        Recip => (15, 0, 0),
        Custom(id) => (16, 0, id.0),
    };
    NodeKey::Op(tag, extra, custom, args.to_vec())
}

/// Incremental constructor for [`EvalProcedure`].
///
/// Structurally identical nodes are shared unless sharing is switched off.
#[derive(Clone)]
pub struct ProcBuilder {
    n: usize,
    nodes: Vec<Node>,
    customs: Vec<Arc<CustomElemental>>,
    index: HashMap<NodeKey, usize>,
    share: bool,
}

impl ProcBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            nodes: Vec::new(),
            customs: Vec::new(),
            index: HashMap::new(),
            share: true,
        }
    }

    /// Disables common-subexpression sharing.
    pub fn without_sharing(mut self) -> Self {
        self.share = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn register_custom(&mut self, elem: CustomElemental) -> Result<ElementalId, TapeError> {
        if self.customs.iter().any(|c| c.name() == elem.name()) {
            return Err(TapeError::DuplicateElemental(elem.name().to_string()));
        }
        self.customs.push(Arc::new(elem));
        Ok(ElementalId(self.customs.len() - 1))
    }

    pub fn custom_by_name(&self, name: &str) -> Option<ElementalId> {
        self.customs
            .iter()
            .position(|c| c.name() == name)
            .map(ElementalId)
    }

    fn push_raw(&mut self, op: Opcode, args: Vec<usize>) -> NodeId {
        let key = node_key(op, &args);
        if self.share {
            if let Some(&i) = self.index.get(&key) {
                return NodeId(i);
            }
        }
        self.nodes.push(Node { op, args });
        let i = self.nodes.len() - 1;
        self.index.entry(key).or_insert(i);
        NodeId(i)
    }

    /// Appends a node. Arity is checked when the procedure is finished.
    pub fn push(&mut self, op: Opcode, args: &[NodeId]) -> NodeId {
        self.push_raw(op, args.iter().map(|a| a.0).collect())
    }

    pub fn input(&mut self, slot: usize) -> NodeId {
        self.push(Opcode::Input(slot), &[])
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Opcode::Const(c), &[])
    }

    pub fn unary(&mut self, op: Opcode, a: NodeId) -> NodeId {
        self.push(op, &[a])
    }

    pub fn binary(&mut self, op: Opcode, a: NodeId, b: NodeId) -> NodeId {
        self.push(op, &[a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Opcode::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Opcode::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Opcode::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Opcode::Div, a, b)
    }

    pub fn scale(&mut self, c: f64, a: NodeId) -> NodeId {
        let k = self.constant(c);
        self.mul(k, a)
    }

    pub fn custom(&mut self, id: ElementalId, args: &[NodeId]) -> NodeId {
        self.push(Opcode::Custom(id), args)
    }

    pub fn finish(self, outputs: &[NodeId]) -> Result<EvalProcedure, TapeError> {
        EvalProcedure::from_parts(
            self.n,
            self.nodes,
            outputs.iter().map(|o| o.0).collect(),
            self.customs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_minus_half() {
        let p = parse_expression("abs(x1) - 0.5", 1).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.s(), 1);
        assert_eq!(p.eval(&[2.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn product_plus_sin() {
        let p = parse_expression("x1*x2 + sin(x1)", 2).unwrap();
        assert_eq!(p.eval(&[0.0, 7.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn log_domain_reports_node() {
        let p = parse_expression("log(x1)", 1).unwrap();
        let err = p.evaluate(&[-1.0]).unwrap_err();
        assert_eq!(err.node(), Some(1));
    }

    #[test]
    fn division_by_zero_and_sqrt_negative() {
        let p = parse_expression("1/x1", 1).unwrap();
        assert!(matches!(p.evaluate(&[0.0]), Err(TapeError::Domain { .. })));
        let p = parse_expression("sqrt(x1)", 1).unwrap();
        assert!(matches!(p.evaluate(&[-1e-300]), Err(TapeError::Domain { .. })));
        assert_eq!(p.eval(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn overflow_is_domain_error() {
        let p = parse_expression("exp(x1)", 1).unwrap();
        assert!(p.evaluate(&[1000.0]).is_err());
    }

    #[test]
    fn log_exp_is_not_identity_tape() {
        let p = parse_expression("log(exp(x1))", 1).unwrap();
        let q = parse_expression("x1", 1).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn rejects_forward_reference() {
        let nodes = vec![
            Node {
                op: Opcode::Abs,
                args: vec![1],
            },
            Node {
                op: Opcode::Input(0),
                args: vec![],
            },
        ];
        assert!(matches!(
            EvalProcedure::from_parts(1, nodes, vec![0], vec![]),
            Err(TapeError::NotTopological { node: 0, arg: 1 })
        ));
    }

    #[test]
    fn rejects_bad_arity_and_exponent() {
        let nodes = vec![
            Node {
                op: Opcode::Input(0),
                args: vec![],
            },
            Node {
                op: Opcode::Add,
                args: vec![0],
            },
        ];
        assert!(matches!(
            EvalProcedure::from_parts(1, nodes, vec![1], vec![]),
            Err(TapeError::Arity { .. })
        ));
        let nodes = vec![
            Node {
                op: Opcode::Input(0),
                args: vec![],
            },
            Node {
                op: Opcode::PowInt(1),
                args: vec![0],
            },
        ];
        assert!(matches!(
            EvalProcedure::from_parts(1, nodes, vec![1], vec![]),
            Err(TapeError::BadExponent(1))
        ));
    }

    #[test]
    fn sharing_reuses_nodes() {
        let mut b = ProcBuilder::new(1);
        let x = b.input(0);
        let s1 = b.unary(Opcode::Sin, x);
        let s2 = b.unary(Opcode::Sin, x);
        assert_eq!(s1, s2);
        let mut b = ProcBuilder::new(1).without_sharing();
        let x = b.input(0);
        let s1 = b.unary(Opcode::Sin, x);
        let s2 = b.unary(Opcode::Sin, x);
        assert_ne!(s1, s2);
    }

    #[test]
    fn duplicate_custom_is_rejected() {
        let mut b = ProcBuilder::new(1);
        let mk = || CustomElemental::univariate("phi", |u| u * u * u, |u| 3.0 * u * u);
        b.register_custom(mk()).unwrap();
        assert_eq!(
            b.register_custom(mk()),
            Err(TapeError::DuplicateElemental("phi".into()))
        );
    }

    #[test]
    fn custom_analysis_favorite_evaluates_at_zero() {
        let phi = CustomElemental::univariate(
            "phi3",
            |u| if u != 0.0 { u.powi(3) * (1.0 / u).sin() } else { 0.0 },
            |u| {
                if u != 0.0 {
                    3.0 * u * u * (1.0 / u).sin() - u * (1.0 / u).cos()
                } else {
                    0.0
                }
            },
        );
        let mut b = ProcBuilder::new(1);
        let id = b.register_custom(phi).unwrap();
        let x = b.input(0);
        let y = b.custom(id, &[x]);
        let p = b.finish(&[y]).unwrap();
        assert_eq!(p.eval(&[0.0]).unwrap(), vec![0.0]);
        let v = p.eval(&[0.5]).unwrap()[0];
        assert!((v - 0.125 * 2f64.sin()).abs() < 1e-15);
    }
}
