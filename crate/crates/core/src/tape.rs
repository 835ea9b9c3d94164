//! Reverse-mode automatic differentiation over `f64` tensors.
//!
//! A [`Tape`] records every primitive operation of a forward pass; calling
//! [`Tape::backward`] replays the recording in reverse and accumulates exact
//! gradients for every recorded node. Values are dynamic-dimension
//! [`ArrayD`]s so the same machinery serves 2-D matrix work and the 4-D
//! reshuffles of multi-head attention.
//!
//! The engine is deliberately small: no graph optimization, no operator
//! fusion beyond what the model actually needs (masked softmax and layer
//! norm are fused because their composite backward formulas are both faster
//! and numerically cleaner than the primitive composition). Accumulation
//! order during the backward sweep is fixed by node index, so gradients are
//! bit-reproducible run to run.

use ndarray::{ArrayD, Axis, IxDyn};
use statrs::function::erf::erf;
use std::cell::RefCell;
use std::rc::Rc;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// Sink receiving `(parent index, gradient contribution)` pairs.
type GradSink<'a> = dyn FnMut(usize, ArrayD<f64>) + 'a;

/// Backward rule of one node: given the node's output gradient, push
/// contributions to its parents.
type BackFn = Box<dyn Fn(&ArrayD<f64>, &mut GradSink)>;

struct Node {
    value: Rc<ArrayD<f64>>,
    back: Option<BackFn>,
}

/// Recording of one forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

/// Gradients of one scalar root with respect to every node on the tape.
pub struct Gradients {
    grads: Vec<Option<ArrayD<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`, zero-filled if `v` never influenced the root.
    pub fn wrt(&self, v: Var<'_>) -> ArrayD<f64> {
        match &self.grads[v.idx] {
            Some(g) => g.clone(),
            None => ArrayD::zeros(v.value().raw_dim()),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: ArrayD<f64>, back: Option<BackFn>) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            back,
        });
        nodes.len() - 1
    }

    /// Record an input value. Leaves and constants share a representation;
    /// callers read gradients only for the vars they care about.
    pub fn leaf(&self, value: ArrayD<f64>) -> Var<'_> {
        Var {
            tape: self,
            idx: self.push(value, None),
        }
    }

    /// Reverse sweep from a scalar root (any shape is accepted; the seed
    /// gradient is all-ones, so a 1-element root behaves as a scalar).
    pub fn backward(&self, root: Var<'_>) -> Gradients {
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<ArrayD<f64>>> = vec![None; nodes.len()];
        grads[root.idx] = Some(ArrayD::ones(nodes[root.idx].value.raw_dim()));
        for idx in (0..=root.idx).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            if let Some(back) = &nodes[idx].back {
                back(&grad, &mut |parent, contrib| {
                    match &mut grads[parent] {
                        Some(acc) => *acc += &contrib,
                        slot => *slot = Some(contrib),
                    };
                });
            }
            grads[idx] = Some(grad);
        }
        Gradients { grads }
    }
}

/// Sum `grad` down to `shape`, undoing numpy-style broadcasting.
fn unbroadcast(grad: &ArrayD<f64>, shape: &[usize]) -> ArrayD<f64> {
    let mut g = grad.clone();
    while g.ndim() > shape.len() {
        g = g.sum_axis(Axis(0));
    }
    for (ax, (&gs, &ts)) in g.shape().to_vec().iter().zip(shape).enumerate() {
        if gs != ts {
            debug_assert_eq!(ts, 1, "unbroadcast shape mismatch");
            g = g.sum_axis(Axis(ax)).insert_axis(Axis(ax));
        }
    }
    g
}

fn broadcast_binop(
    a: &ArrayD<f64>,
    b: &ArrayD<f64>,
    f: impl Fn(f64, f64) -> f64,
) -> ArrayD<f64> {
    // ndarray broadcasts the right operand; pre-broadcast both to the
    // common shape so either side may be the smaller one.
    let nd = a.ndim().max(b.ndim());
    let mut shape = vec![1usize; nd];
    for (i, s) in shape.iter_mut().enumerate() {
        let ad = if i + a.ndim() >= nd { a.shape()[i + a.ndim() - nd] } else { 1 };
        let bd = if i + b.ndim() >= nd { b.shape()[i + b.ndim() - nd] } else { 1 };
        assert!(
            ad == bd || ad == 1 || bd == 1,
            "incompatible broadcast shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        );
        *s = ad.max(bd);
    }
    let dim = IxDyn(&shape);
    let ab = a.broadcast(dim.clone()).expect("broadcast lhs");
    let bb = b.broadcast(dim).expect("broadcast rhs");
    let mut out = ab.to_owned();
    out.zip_mut_with(&bb, |x, &y| *x = f(*x, y));
    out
}

pub fn softplus_scalar(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn gelu_scalar(x: f64) -> f64 {
    x * 0.5 * (1.0 + erf(x / SQRT_2))
}

fn gelu_grad_scalar(x: f64) -> f64 {
    let phi_cdf = 0.5 * (1.0 + erf(x / SQRT_2));
    let phi_pdf = INV_SQRT_2PI * (-0.5 * x * x).exp();
    phi_cdf + x * phi_pdf
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Rc<ArrayD<f64>> {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    /// Scalar payload of a 1-element var.
    pub fn scalar(&self) -> f64 {
        let v = self.value();
        debug_assert_eq!(v.len(), 1);
        v.iter().next().copied().unwrap()
    }

    fn unary(
        self,
        value: ArrayD<f64>,
        back: impl Fn(&ArrayD<f64>, &mut GradSink) + 'static,
    ) -> Var<'t> {
        Var {
            tape: self.tape,
            idx: self.tape.push(value, Some(Box::new(back))),
        }
    }

    pub fn add(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let out = broadcast_binop(&a, &b, |x, y| x + y);
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        let (ia, ib) = (self.idx, rhs.idx);
        self.unary(out, move |g, sink| {
            sink(ia, unbroadcast(g, &sa));
            sink(ib, unbroadcast(g, &sb));
        })
    }

    pub fn sub(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let out = broadcast_binop(&a, &b, |x, y| x - y);
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        let (ia, ib) = (self.idx, rhs.idx);
        self.unary(out, move |g, sink| {
            sink(ia, unbroadcast(g, &sa));
            sink(ib, unbroadcast(&g.mapv(|x| -x), &sb));
        })
    }

    pub fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let out = broadcast_binop(&a, &b, |x, y| x * y);
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        let (ia, ib) = (self.idx, rhs.idx);
        self.unary(out, move |g, sink| {
            sink(ia, unbroadcast(&broadcast_binop(g, &b, |x, y| x * y), &sa));
            sink(ib, unbroadcast(&broadcast_binop(g, &a, |x, y| x * y), &sb));
        })
    }

    pub fn div(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let out = broadcast_binop(&a, &b, |x, y| x / y);
        let (sa, sb) = (a.shape().to_vec(), b.shape().to_vec());
        let (ia, ib) = (self.idx, rhs.idx);
        self.unary(out, move |g, sink| {
            sink(ia, unbroadcast(&broadcast_binop(g, &b, |x, y| x / y), &sa));
            let gb = broadcast_binop(&broadcast_binop(g, &a, |x, y| x * y), &b, |x, y| {
                -x / (y * y)
            });
            sink(ib, unbroadcast(&gb, &sb));
        })
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let out = self.value().mapv(|x| x * c);
        let ia = self.idx;
        self.unary(out, move |g, sink| sink(ia, g.mapv(|x| x * c)))
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let out = self.value().mapv(|x| x + c);
        let ia = self.idx;
        self.unary(out, move |g, sink| sink(ia, g.clone()))
    }

    /// 2-D matrix product.
    pub fn matmul(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let a2 = a.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let b2 = b.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let out = a2.dot(&b2).into_dyn();
        let (ia, ib) = (self.idx, rhs.idx);
        let (a, b) = (a.clone(), b.clone());
        self.unary(out, move |g, sink| {
            let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let a2 = a.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let b2 = b.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            sink(ia, g2.dot(&b2.t()).into_dyn());
            sink(ib, a2.t().dot(&g2).into_dyn());
        })
    }

    /// Batched matrix product over 3-D inputs `(B, m, k) x (B, k, n)`.
    pub fn bmm(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        let a3 = a.view().into_dimensionality::<ndarray::Ix3>().unwrap();
        let b3 = b.view().into_dimensionality::<ndarray::Ix3>().unwrap();
        let (nb, m, _k) = a3.dim();
        let n = b3.dim().2;
        let mut out = ndarray::Array3::<f64>::zeros((nb, m, n));
        for i in 0..nb {
            out.index_axis_mut(Axis(0), i)
                .assign(&a3.index_axis(Axis(0), i).dot(&b3.index_axis(Axis(0), i)));
        }
        let (ia, ib) = (self.idx, rhs.idx);
        let (a, b) = (a.clone(), b.clone());
        self.unary(out.into_dyn(), move |g, sink| {
            let g3 = g.view().into_dimensionality::<ndarray::Ix3>().unwrap();
            let a3 = a.view().into_dimensionality::<ndarray::Ix3>().unwrap();
            let b3 = b.view().into_dimensionality::<ndarray::Ix3>().unwrap();
            let (nb, m, k) = a3.dim();
            let n = b3.dim().2;
            let mut da = ndarray::Array3::<f64>::zeros((nb, m, k));
            let mut db = ndarray::Array3::<f64>::zeros((nb, k, n));
            for i in 0..nb {
                let gi = g3.index_axis(Axis(0), i);
                da.index_axis_mut(Axis(0), i)
                    .assign(&gi.dot(&b3.index_axis(Axis(0), i).t()));
                db.index_axis_mut(Axis(0), i)
                    .assign(&a3.index_axis(Axis(0), i).t().dot(&gi));
            }
            sink(ia, da.into_dyn());
            sink(ib, db.into_dyn());
        })
    }

    pub fn tanh(self) -> Var<'t> {
        let out = self.value().mapv(f64::tanh);
        let y = Rc::new(out.clone());
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&y, |gi, &yi| *gi *= 1.0 - yi * yi);
            sink(ia, d);
        })
    }

    pub fn exp(self) -> Var<'t> {
        let out = self.value().mapv(f64::exp);
        let y = Rc::new(out.clone());
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&y, |gi, &yi| *gi *= yi);
            sink(ia, d);
        })
    }

    pub fn ln(self) -> Var<'t> {
        let a = self.value();
        let out = a.mapv(f64::ln);
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&a, |gi, &xi| *gi /= xi);
            sink(ia, d);
        })
    }

    pub fn sigmoid(self) -> Var<'t> {
        let out = self.value().mapv(sigmoid_scalar);
        let y = Rc::new(out.clone());
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&y, |gi, &yi| *gi *= yi * (1.0 - yi));
            sink(ia, d);
        })
    }

    pub fn softplus(self) -> Var<'t> {
        let a = self.value();
        let out = a.mapv(softplus_scalar);
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&a, |gi, &xi| *gi *= sigmoid_scalar(xi));
            sink(ia, d);
        })
    }

    pub fn gelu(self) -> Var<'t> {
        let a = self.value();
        let out = a.mapv(gelu_scalar);
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&a, |gi, &xi| *gi *= gelu_grad_scalar(xi));
            sink(ia, d);
        })
    }

    /// Elementwise clamp; zero gradient outside the open interval.
    pub fn clamp(self, lo: f64, hi: f64) -> Var<'t> {
        let a = self.value();
        let out = a.mapv(|x| x.clamp(lo, hi));
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            d.zip_mut_with(&a, |gi, &xi| {
                if !(xi > lo && xi < hi) {
                    *gi = 0.0;
                }
            });
            sink(ia, d);
        })
    }

    /// Sum of all elements, as a 1-element var.
    pub fn sum(self) -> Var<'t> {
        let a = self.value();
        let shape = a.shape().to_vec();
        let out = ArrayD::from_elem(IxDyn(&[1]), a.sum());
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            sink(ia, ArrayD::from_elem(IxDyn(&shape), g[[0]]));
        })
    }

    pub fn mean(self) -> Var<'t> {
        let n = self.value().len() as f64;
        self.sum().scale(1.0 / n)
    }

    /// Sum along one axis, keeping it with size 1.
    pub fn sum_axis_keep(self, axis: usize) -> Var<'t> {
        let a = self.value();
        let shape = a.shape().to_vec();
        let out = a.sum_axis(Axis(axis)).insert_axis(Axis(axis));
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            let gb = g
                .broadcast(IxDyn(&shape))
                .expect("sum_axis backward broadcast")
                .to_owned();
            sink(ia, gb);
        })
    }

    pub fn reshape(self, shape: &[usize]) -> Var<'t> {
        let a = self.value();
        let orig = a.shape().to_vec();
        let out = a
            .as_ref()
            .clone()
            .into_shape_with_order(IxDyn(shape))
            .expect("reshape size mismatch");
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            sink(
                ia,
                g.to_owned()
                    .into_shape_with_order(IxDyn(&orig))
                    .expect("reshape backward"),
            );
        })
    }

    /// Axis permutation (generalized transpose).
    pub fn permute(self, axes: &[usize]) -> Var<'t> {
        let a = self.value();
        let out = a
            .view()
            .permuted_axes(IxDyn(axes))
            .as_standard_layout()
            .to_owned();
        let mut inverse = vec![0usize; axes.len()];
        for (i, &ax) in axes.iter().enumerate() {
            inverse[ax] = i;
        }
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            sink(
                ia,
                g.view()
                    .permuted_axes(IxDyn(&inverse))
                    .as_standard_layout()
                    .to_owned(),
            );
        })
    }

    /// Row lookup `out[i, :] = self[ids[i], :]`; backward scatter-adds.
    pub fn gather_rows(self, ids: &[usize]) -> Var<'t> {
        let a = self.value();
        let a2 = a.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let cols = a2.ncols();
        let mut out = ndarray::Array2::<f64>::zeros((ids.len(), cols));
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).assign(&a2.row(id));
        }
        let ids = ids.to_vec();
        let rows = a2.nrows();
        let ia = self.idx;
        self.unary(out.into_dyn(), move |g, sink| {
            let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
            let mut da = ndarray::Array2::<f64>::zeros((rows, cols));
            for (r, &id) in ids.iter().enumerate() {
                let mut dst = da.row_mut(id);
                dst += &g2.row(r);
            }
            sink(ia, da.into_dyn());
        })
    }

    /// Softmax over the last axis with multiplicative key masking.
    ///
    /// `mask` broadcasts against the input shape; positions where it is zero
    /// receive zero probability and propagate no gradient. Rows that are
    /// fully masked come out all-zero.
    pub fn masked_softmax(self, mask: &ArrayD<f64>) -> Var<'t> {
        let a = self.value();
        let shape = a.shape().to_vec();
        let m = mask
            .broadcast(IxDyn(&shape))
            .expect("mask broadcast")
            .to_owned();
        let last = shape.len() - 1;
        let mut out = a.as_ref().clone();
        for (mut row, mrow) in out
            .rows_mut()
            .into_iter()
            .zip(m.rows())
        {
            let mut hi = f64::NEG_INFINITY;
            for (x, &mm) in row.iter().zip(mrow.iter()) {
                if mm != 0.0 && *x > hi {
                    hi = *x;
                }
            }
            if hi == f64::NEG_INFINITY {
                row.fill(0.0);
                continue;
            }
            let mut z = 0.0;
            for (x, &mm) in row.iter_mut().zip(mrow.iter()) {
                if mm != 0.0 {
                    *x = (*x - hi).exp();
                    z += *x;
                } else {
                    *x = 0.0;
                }
            }
            row.mapv_inplace(|x| x / z);
        }
        let y = Rc::new(out.clone());
        let ia = self.idx;
        let _ = last;
        self.unary(out, move |g, sink| {
            let mut d = g.clone();
            // dx = y * (g - sum(g * y)) per row
            for (mut drow, yrow) in d.rows_mut().into_iter().zip(y.rows()) {
                let dot: f64 = drow.iter().zip(yrow.iter()).map(|(a, b)| a * b).sum();
                for (di, &yi) in drow.iter_mut().zip(yrow.iter()) {
                    *di = yi * (*di - dot);
                }
            }
            sink(ia, d);
        })
    }

    /// Layer normalization over the last axis with learned gain and bias.
    pub fn layer_norm(self, gain: Var<'t>, bias: Var<'t>, eps: f64) -> Var<'t> {
        let x = self.value();
        let gamma = gain.value();
        let beta = bias.value();
        let shape = x.shape().to_vec();
        let d = *shape.last().unwrap();
        let mut xhat = x.as_ref().clone();
        let mut inv_std = Vec::with_capacity(xhat.len() / d);
        for mut row in xhat.rows_mut() {
            let mu = row.sum() / d as f64;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / d as f64;
            let istd = 1.0 / (var + eps).sqrt();
            inv_std.push(istd);
            row.mapv_inplace(|v| (v - mu) * istd);
        }
        let g1 = gamma.view().into_dimensionality::<ndarray::Ix1>().unwrap();
        let b1 = beta.view().into_dimensionality::<ndarray::Ix1>().unwrap();
        let mut out = xhat.clone();
        for mut row in out.rows_mut() {
            for (v, (&gm, &bt)) in row.iter_mut().zip(g1.iter().zip(b1.iter())) {
                *v = *v * gm + bt;
            }
        }
        let xhat = Rc::new(xhat);
        let inv_std = Rc::new(inv_std);
        let (ix, ig, ib) = (self.idx, gain.idx, bias.idx);
        self.unary(out, move |g, sink| {
            let dn = d as f64;
            let g1 = gamma.view().into_dimensionality::<ndarray::Ix1>().unwrap();
            let mut dgamma = ndarray::Array1::<f64>::zeros(d);
            let mut dbeta = ndarray::Array1::<f64>::zeros(d);
            let mut dx = g.clone();
            for ((mut grow, xrow), &istd) in dx
                .rows_mut()
                .into_iter()
                .zip(xhat.rows())
                .zip(inv_std.iter())
            {
                for ((&gv, &xv), (dg, db)) in grow
                    .iter()
                    .zip(xrow.iter())
                    .zip(dgamma.iter_mut().zip(dbeta.iter_mut()))
                {
                    *dg += gv * xv;
                    *db += gv;
                }
                // dxhat = g * gamma; dx = istd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for ((gv, &xv), &gm) in grow.iter_mut().zip(xrow.iter()).zip(g1.iter()) {
                    *gv *= gm;
                    m1 += *gv;
                    m2 += *gv * xv;
                }
                m1 /= dn;
                m2 /= dn;
                for (gv, &xv) in grow.iter_mut().zip(xrow.iter()) {
                    *gv = istd * (*gv - m1 - xv * m2);
                }
            }
            sink(ix, dx);
            sink(ig, dgamma.into_dyn());
            sink(ib, dbeta.into_dyn());
        })
    }

    /// Multiply by a fixed mask (dropout with pre-scaled mask entries).
    pub fn mul_const(self, mask: &ArrayD<f64>) -> Var<'t> {
        let a = self.value();
        let out = broadcast_binop(&a, mask, |x, y| x * y);
        let m = mask.clone();
        let sa = a.shape().to_vec();
        let ia = self.idx;
        self.unary(out, move |g, sink| {
            sink(ia, unbroadcast(&broadcast_binop(g, &m, |x, y| x * y), &sa));
        })
    }
}

/// Concatenate along `axis`.
pub fn concat<'t>(axis: usize, parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty());
    let tape = parts[0].tape;
    let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
    let views: Vec<_> = values.iter().map(|v| v.view()).collect();
    let out = ndarray::concatenate(Axis(axis), &views).expect("concat shape mismatch");
    let idxs: Vec<usize> = parts.iter().map(|p| p.idx).collect();
    let sizes: Vec<usize> = values.iter().map(|v| v.shape()[axis]).collect();
    let back: BackFn = Box::new(move |g, sink| {
        let mut offset = 0;
        for (&idx, &sz) in idxs.iter().zip(&sizes) {
            let part = g
                .slice_axis(Axis(axis), ndarray::Slice::from(offset..offset + sz))
                .to_owned();
            sink(idx, part);
            offset += sz;
        }
    });
    Var {
        tape,
        idx: tape.push(out, Some(back)),
    }
}
