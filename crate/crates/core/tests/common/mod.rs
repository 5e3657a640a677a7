#![allow(dead_code)]

use std::sync::Arc;

use plexpand::bounds::{interval_evaluate, BoxK};
use plexpand::linearize::AbsNormalForm;
use plexpand::tape::{CustomElemental, ElementalId, EvalProcedure, NodeId, Opcode, ProcBuilder};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    All,
    Smooth,
    Polynomial,
    Trig,
    AbsHeavy,
    PiecewiseLinear,
}

#[derive(Clone, Copy, Debug)]
enum Gen {
    Add,
    Sub,
    Mul,
    Neg,
    Scale,
    Shift,
    Square,
    Pow,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Div,
    Recip,
    Abs,
    Min,
    Max,
    Custom,
}

impl Family {
    fn ops(self) -> &'static [Gen] {
        use Gen::*;
        match self {
            Family::PiecewiseLinear => &[Add, Sub, Scale, Shift, Abs, Abs],
            Family::Polynomial => &[Add, Sub, Mul, Neg, Square, Pow, Scale, Shift],
            Family::Trig => &[Add, Sub, Mul, Sin, Cos, Sin, Cos, Scale, Shift],
            Family::AbsHeavy => &[Add, Sub, Abs, Abs, Abs, Min, Max, Scale, Shift, Mul, Sin],
            Family::Smooth => &[
                Add, Sub, Mul, Neg, Square, Pow, Scale, Shift, Sin, Cos, Exp, Log, Sqrt, Div,
                Recip,
            ],
            Family::All => &[
                Add, Sub, Mul, Neg, Square, Pow, Scale, Shift, Sin, Cos, Exp, Log, Sqrt, Div,
                Recip, Abs, Abs, Min, Max, Custom,
            ],
        }
    }
}

/// `f(a, b) = sin(a) b + a`.
pub fn pair_elemental() -> CustomElemental {
    CustomElemental::new(
        "pair",
        2,
        Arc::new(|a: &[f64]| Some(a[0].sin() * a[1] + a[0])),
        Arc::new(|a: &[f64], g: &mut [f64]| {
            g[0] = a[0].cos() * a[1] + 1.0;
            g[1] = a[0].sin();
            true
        }),
    )
}

struct Builder {
    b: ProcBuilder,
    depth: Vec<usize>,
    custom: Option<ElementalId>,
}

impl Builder {
    fn record(&mut self, id: NodeId, d: usize) -> NodeId {
        if self.depth.len() <= id.0 {
            self.depth.resize(id.0 + 1, 0);
        }
        self.depth[id.0] = self.depth[id.0].max(d);
        id
    }

    fn d(&self, id: NodeId) -> usize {
        self.depth[id.0]
    }

    fn constant(&mut self, c: f64) -> NodeId {
        let id = self.b.constant(c);
        self.record(id, 0)
    }

    fn unary(&mut self, op: Opcode, a: NodeId) -> NodeId {
        let d = self.d(a) + 1;
        let id = self.b.unary(op, a);
        self.record(id, d)
    }

    fn binary(&mut self, op: Opcode, a: NodeId, c: NodeId) -> NodeId {
        let d = self.d(a).max(self.d(c)) + 1;
        let id = self.b.binary(op, a, c);
        self.record(id, d)
    }

    /// `c + u^2` with `c >= 0.5`, safely away from zero.
    fn positive<R: Rng>(&mut self, rng: &mut R, u: NodeId) -> NodeId {
        let sq = self.unary(Opcode::Square, u);
        let c = self.constant(rng.gen_range(0.5..2.0));
        self.binary(Opcode::Add, c, sq)
    }

    /// Extra depth the guarded form of `op` adds on top of its operands.
    fn cost(op: Gen) -> usize {
        match op {
            Gen::Log | Gen::Sqrt | Gen::Div | Gen::Recip => 3,
            _ => 1,
        }
    }

    fn emit<R: Rng>(&mut self, rng: &mut R, op: Gen, a: NodeId, c: NodeId) -> NodeId {
        match op {
            Gen::Add => self.binary(Opcode::Add, a, c),
            Gen::Sub => self.binary(Opcode::Sub, a, c),
            Gen::Mul => self.binary(Opcode::Mul, a, c),
            Gen::Min => self.binary(Opcode::Min, a, c),
            Gen::Max => self.binary(Opcode::Max, a, c),
            Gen::Neg => self.unary(Opcode::Neg, a),
            Gen::Abs => self.unary(Opcode::Abs, a),
            Gen::Square => self.unary(Opcode::Square, a),
            Gen::Pow => self.unary(Opcode::PowInt(rng.gen_range(2..=3)), a),
            Gen::Sin => self.unary(Opcode::Sin, a),
            Gen::Cos => self.unary(Opcode::Cos, a),
            Gen::Exp => self.unary(Opcode::Exp, a),
            Gen::Scale => {
                let k = self.constant(rng.gen_range(-2.0..2.0));
                self.binary(Opcode::Mul, k, a)
            }
            Gen::Shift => {
                let k = self.constant(rng.gen_range(-1.0..1.0));
                self.binary(Opcode::Add, a, k)
            }
            Gen::Log => {
                let p = self.positive(rng, a);
                self.unary(Opcode::Log, p)
            }
            Gen::Sqrt => {
                let p = self.positive(rng, a);
                self.unary(Opcode::Sqrt, p)
            }
            Gen::Recip => {
                let p = self.positive(rng, a);
                self.unary(Opcode::Recip, p)
            }
            Gen::Div => {
                let p = self.positive(rng, c);
                self.binary(Opcode::Div, a, p)
            }
            Gen::Custom => {
                let id = self.custom.expect("registered");
                let d = self.d(a).max(self.d(c)) + 1;
                let v = self.b.custom(id, &[a, c]);
                self.record(v, d)
            }
        }
    }
}

fn pick<R: Rng>(rng: &mut R, pool: &[NodeId]) -> NodeId {
    if rng.gen_bool(0.5) {
        let k = pool.len().min(3);
        pool[pool.len() - 1 - rng.gen_range(0..k)]
    } else {
        pool[rng.gen_range(0..pool.len())]
    }
}

/// Random procedure with `ops` generated operations, no node deeper than
/// `max_depth`.
pub fn random_tape<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    ops: usize,
    max_depth: usize,
    family: Family,
) -> EvalProcedure {
    let mut g = Builder {
        b: ProcBuilder::new(n),
        depth: Vec::new(),
        custom: None,
    };
    if family == Family::All {
        g.custom = Some(g.b.register_custom(pair_elemental()).unwrap());
    }
    let mut pool: Vec<NodeId> = (0..n)
        .map(|k| {
            let id = g.b.input(k);
            g.record(id, 0)
        })
        .collect();
    let table = family.ops();
    let mut attempts = 0;
    while pool.len() < n + ops && attempts < 50 * ops {
        attempts += 1;
        let op = table[rng.gen_range(0..table.len())];
        let (a, c) = (pick(rng, &pool), pick(rng, &pool));
        if g.d(a).max(g.d(c)) + Builder::cost(op) > max_depth {
            continue;
        }
        let v = g.emit(rng, op, a, c);
        if !pool.contains(&v) {
            pool.push(v);
        }
    }
    let outs: Vec<NodeId> = pool[pool.len() - m..].to_vec();
    g.b.finish(&outs).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R, n: usize, radius: f64) -> BoxK {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    BoxK::around(&c, radius)
}

/// A random procedure whose interval enclosure over `k` is finite, bounded by
/// `max_mag`, and free of domain errors.
pub fn safe_tape<R: Rng>(
    rng: &mut R,
    k: &BoxK,
    m: usize,
    ops: usize,
    family: Family,
    max_mag: f64,
) -> EvalProcedure {
    loop {
        let t = random_tape(rng, k.dim(), m, ops, 12, family);
        if let Ok(enc) = interval_evaluate(&t, k) {
            if enc.iter().all(|iv| iv.is_finite() && iv.mag() <= max_mag) {
                return t;
            }
        }
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Direct evaluation of `offset + b + J dx + Y |z|` with
/// `z = c + Z dx + L |z|`, written independently of the library.
pub fn anf_value(a: &AbsNormalForm, x: &[f64]) -> Vec<f64> {
    let dx: Vec<f64> = x.iter().zip(&a.center).map(|(x, c)| x - c).collect();
    let mut z = vec![0.0f64; a.s];
    for i in 0..a.s {
        let mut v = a.c[i];
        for j in 0..a.n {
            v += a.z[i][j] * dx[j];
        }
        for j in 0..i {
            v += a.l[i][j] * z[j].abs();
        }
        z[i] = v;
    }
    (0..a.m)
        .map(|i| {
            let mut v = a.offset[i] + a.b[i];
            for j in 0..a.n {
                v += a.j[i][j] * dx[j];
            }
            for j in 0..a.s {
                v += a.y[i][j] * z[j].abs();
            }
            v
        })
        .collect()
}

/// Infinity-norm Lipschitz constant of each output of an abs-normal form.
pub fn anf_lipschitz(a: &AbsNormalForm) -> f64 {
    let mut lz = vec![0.0; a.s];
    for i in 0..a.s {
        let mut v: f64 = a.z[i].iter().map(|x| x.abs()).sum();
        for j in 0..i {
            v += a.l[i][j].abs() * lz[j];
        }
        lz[i] = v;
    }
    (0..a.m)
        .map(|i| {
            a.j[i].iter().map(|x| x.abs()).sum::<f64>()
                + (0..a.s).map(|j| a.y[i][j].abs() * lz[j]).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn random_anf<R: Rng>(rng: &mut R, n: usize, s: usize) -> AbsNormalForm {
    let mut a = AbsNormalForm::zeros(n, n, s);
    let mut u = || rng.gen_range(-1.0..1.0);
    for i in 0..s {
        a.c[i] = u();
        for j in 0..n {
            a.z[i][j] = u();
        }
        for j in 0..i {
            a.l[i][j] = u();
        }
    }
    for i in 0..n {
        a.b[i] = u();
        for j in 0..n {
            a.j[i][j] = u();
        }
        for j in 0..s {
            a.y[i][j] = u();
        }
    }
    a
}
