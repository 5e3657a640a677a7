use super::{EvalProcedure, NodeId, Opcode, ProcBuilder};

/// Rewrites every `min`/`max` through `abs`:
/// `max(u, w) = (u + w + |u - w|) / 2` and `min(u, w) = (u + w - |u - w|) / 2`.
///
/// Each lowered node adds exactly one abs node.
pub fn lower_minmax(proc: &EvalProcedure) -> EvalProcedure {
    let mut b = ProcBuilder::new(proc.n()).without_sharing();
    b.customs = proc.customs().to_vec();
    let mut map: Vec<NodeId> = Vec::with_capacity(proc.len());
    let mut half = None;
    for node in proc.nodes() {
        let args: Vec<NodeId> = node.args.iter().map(|&a| map[a]).collect();
        let id = match node.op {
            op @ (Opcode::Min | Opcode::Max) => {
                let (u, w) = (args[0], args[1]);
                let sum = b.add(u, w);
                let diff = b.sub(u, w);
                let gap = b.unary(Opcode::Abs, diff);
                let twice = if op == Opcode::Max {
                    b.add(sum, gap)
                } else {
                    b.sub(sum, gap)
                };
                let h = *half.get_or_insert_with(|| b.constant(0.5));
                b.mul(h, twice)
            }
            op => b.push(op, &args),
        };
        map.push(id);
    }
    let outputs: Vec<NodeId> = proc.outputs().iter().map(|&o| map[o]).collect();
    b.finish(&outputs).expect("lowering preserves well-formedness")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::parse_expression;

    #[test]
    fn identities() {
        let p = lower_minmax(&parse_expression("max(x1, x2)", 2).unwrap());
        assert_eq!(p.eval(&[3.0, 5.0]).unwrap(), vec![5.0]);
        let p = lower_minmax(&parse_expression("min(x1, x2)", 2).unwrap());
        assert_eq!(p.eval(&[-1.0, -4.0]).unwrap(), vec![-4.0]);
    }

    #[test]
    fn abs_count_grows_by_minmax_count() {
        let p = parse_expression("min(max(x1, x2), abs(x1)) + max(x2, 0)", 2).unwrap();
        let q = lower_minmax(&p);
        assert_eq!(q.s(), p.s() + 3);
        assert!(!q.has_minmax());
    }
}
