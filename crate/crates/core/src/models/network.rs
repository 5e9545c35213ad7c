//! Forward passes and hand-written backward passes for every variant.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, ChebBasis, ModelParams, Operator, Variant};
use crate::error::{HgxError, Result};

type Mat = DMatrix<f64>;

struct Dropper<'a> {
    rate: f64,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl Dropper<'_> {
    /// Inverted dropout; returns the kept-and-rescaled input and its mask.
    fn apply(&mut self, x: Mat) -> (Mat, Option<Mat>) {
        match self.rng.as_deref_mut() {
            Some(rng) if self.rate > 0.0 => {
                let keep = 1.0 / (1.0 - self.rate);
                let mask = Mat::from_fn(x.nrows(), x.ncols(), |_, _| {
                    if rng.gen::<f64>() < self.rate {
                        0.0
                    } else {
                        keep
                    }
                });
                (x.component_mul(&mask), Some(mask))
            }
            _ => (x, None),
        }
    }
}

fn masked(g: Mat, mask: &Option<Mat>) -> Mat {
    match mask {
        Some(m) => g.component_mul(m),
        None => g,
    }
}

fn activate(z: &Mat, a: Activation) -> Mat {
    match a {
        Activation::Relu => z.map(|v| v.max(0.0)),
        Activation::Identity => z.clone(),
    }
}

fn activate_grad(z: &Mat, g: Mat, a: Activation) -> Mat {
    match a {
        Activation::Relu => g.zip_map(z, |gv, zv| if zv > 0.0 { gv } else { 0.0 }),
        Activation::Identity => g,
    }
}

/// Intermediate values retained by [`forward_cached`] for [`backward`].
#[derive(Debug, Clone)]
pub enum Cache {
    Gcn {
        ax: Vec<Mat>,
        z: Vec<Mat>,
        masks: Vec<Option<Mat>>,
    },
    Ssgc {
        xin: Mat,
    },
    Appnp {
        xin: Vec<Mat>,
        z: Vec<Mat>,
        masks: Vec<Option<Mat>>,
    },
    Cheb {
        basis: Vec<Vec<Mat>>,
        z: Vec<Mat>,
        masks: Vec<Option<Mat>>,
    },
    Gcnii {
        xin0: Mat,
        z0: Mat,
        s: Vec<Mat>,
        m: Vec<Mat>,
        masks: Vec<Option<Mat>>,
        xo: Mat,
        mo: Option<Mat>,
    },
}

/// Logits for `x` with dropout disabled.
pub fn forward(params: &ModelParams, op: &Operator, x: &Mat) -> Result<Mat> {
    forward_cached(params, op, x, None).map(|(z, _)| z)
}

/// Logits plus cache. Dropout is applied only when `rng` is given.
pub fn forward_cached(
    params: &ModelParams,
    op: &Operator,
    x: &Mat,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Mat, Cache)> {
    if x.nrows() != op.n() || x.ncols() != params.input_dim {
        return Err(HgxError::Dimension(format!(
            "features are {}x{}, model expects {}x{}",
            x.nrows(),
            x.ncols(),
            op.n(),
            params.input_dim
        )));
    }
    let mut drop = Dropper {
        rate: params.hyper.dropout,
        rng,
    };
    Ok(match params.variant {
        Variant::HGcn | Variant::HgnnBaseline => gcn_forward(params, op, x, &mut drop),
        Variant::HSsgc => ssgc_forward(params, op, x, &mut drop),
        Variant::HAppnp => appnp_forward(params, op, x, &mut drop),
        Variant::HChebnet => cheb_forward(params, op, x, &mut drop),
        Variant::HGcnii => gcnii_forward(params, op, x, &mut drop),
    })
}

/// Gradients of a scalar loss with respect to every weight matrix, given the
/// gradient `g` of that loss with respect to the logits.
pub fn backward(params: &ModelParams, op: &Operator, cache: &Cache, g: &Mat) -> Vec<Mat> {
    match cache {
        Cache::Gcn { ax, z, masks } => gcn_backward(params, op, ax, z, masks, g),
        Cache::Ssgc { xin } => vec![xin.transpose() * g],
        Cache::Appnp { xin, z, masks } => appnp_backward(params, op, xin, z, masks, g),
        Cache::Cheb { basis, z, masks } => cheb_backward(params, op, basis, z, masks, g),
        Cache::Gcnii {
            xin0,
            z0,
            s,
            m,
            masks,
            xo,
            mo,
        } => gcnii_backward(params, op, (xin0, z0), s, m, masks, (xo, mo), g),
    }
}

fn gcn_forward(p: &ModelParams, op: &Operator, x: &Mat, drop: &mut Dropper) -> (Mat, Cache) {
    let n_layers = p.weights.len();
    let (mut ax, mut z, mut masks) = (Vec::new(), Vec::new(), Vec::new());
    let mut h = x.clone();
    for (l, w) in p.weights.iter().enumerate() {
        let (xin, mask) = drop.apply(h);
        let a = op.apply(&xin);
        let zl = &a * w;
        h = if l + 1 == n_layers {
            zl.clone()
        } else {
            activate(&zl, p.hyper.activation)
        };
        ax.push(a);
        z.push(zl);
        masks.push(mask);
    }
    (h, Cache::Gcn { ax, z, masks })
}

fn gcn_backward(p: &ModelParams, op: &Operator, ax: &[Mat], z: &[Mat], masks: &[Option<Mat>], g: &Mat) -> Vec<Mat> {
    let n_layers = p.weights.len();
    let mut grads = vec![Mat::zeros(0, 0); n_layers];
    let mut g = g.clone();
    for l in (0..n_layers).rev() {
        if l + 1 != n_layers {
            g = activate_grad(&z[l], g, p.hyper.activation);
        }
        grads[l] = ax[l].transpose() * &g;
        if l > 0 {
            g = masked(op.apply_transpose(&(&g * p.weights[l].transpose())), &masks[l]);
        }
    }
    grads
}

/// `(1/K) sum_{k=1..K} ((1 - alpha) T^k X + alpha X)`
pub(crate) fn ssgc_features(op: &Operator, x: &Mat, k: usize, alpha: f64) -> Mat {
    let mut power = x.clone();
    let mut acc = Mat::zeros(x.nrows(), x.ncols());
    for _ in 0..k {
        power = op.apply(&power);
        acc += &power;
    }
    acc * ((1.0 - alpha) / k as f64) + x * alpha
}

fn ssgc_forward(p: &ModelParams, op: &Operator, x: &Mat, drop: &mut Dropper) -> (Mat, Cache) {
    let sx = ssgc_features(op, x, p.hyper.k, p.hyper.alpha);
    let (xin, _) = drop.apply(sx);
    (&xin * &p.weights[0], Cache::Ssgc { xin })
}

fn appnp_forward(p: &ModelParams, op: &Operator, x: &Mat, drop: &mut Dropper) -> (Mat, Cache) {
    let n_layers = p.weights.len();
    let (mut xs, mut z, mut masks) = (Vec::new(), Vec::new(), Vec::new());
    let mut h = x.clone();
    for (l, w) in p.weights.iter().enumerate() {
        let (xin, mask) = drop.apply(h);
        let zl = &xin * w;
        h = if l + 1 == n_layers {
            zl.clone()
        } else {
            activate(&zl, p.hyper.activation)
        };
        xs.push(xin);
        z.push(zl);
        masks.push(mask);
    }
    let alpha = p.hyper.alpha;
    let mut out = h.clone();
    for _ in 0..p.hyper.k {
        out = op.apply(&out) * (1.0 - alpha) + &h * alpha;
    }
    (
        out,
        Cache::Appnp {
            xin: xs,
            z,
            masks,
        },
    )
}

fn appnp_backward(p: &ModelParams, op: &Operator, xin: &[Mat], z: &[Mat], masks: &[Option<Mat>], g: &Mat) -> Vec<Mat> {
    let alpha = p.hyper.alpha;
    let mut gz = g.clone();
    let mut gh = Mat::zeros(g.nrows(), g.ncols());
    for _ in 0..p.hyper.k {
        gh += &gz * alpha;
        gz = op.apply_transpose(&gz) * (1.0 - alpha);
    }
    gh += gz;

    let n_layers = p.weights.len();
    let mut grads = vec![Mat::zeros(0, 0); n_layers];
    let mut g = gh;
    for l in (0..n_layers).rev() {
        if l + 1 != n_layers {
            g = activate_grad(&z[l], g, p.hyper.activation);
        }
        grads[l] = xin[l].transpose() * &g;
        if l > 0 {
            g = masked(&g * p.weights[l].transpose(), &masks[l]);
        }
    }
    grads
}

fn cheb_basis(op: &Operator, x: Mat, order: usize, basis: ChebBasis) -> Vec<Mat> {
    let mut out = vec![x];
    for k in 1..=order {
        let next = op.apply(&out[k - 1]);
        let next = match basis {
            ChebBasis::Chebyshev if k >= 2 => next * 2.0 - &out[k - 2],
            _ => next,
        };
        out.push(next);
    }
    out
}

fn cheb_forward(p: &ModelParams, op: &Operator, x: &Mat, drop: &mut Dropper) -> (Mat, Cache) {
    let per = p.hyper.k + 1;
    let n_layers = p.weights.len() / per;
    let (mut bases, mut z, mut masks) = (Vec::new(), Vec::new(), Vec::new());
    let mut h = x.clone();
    for l in 0..n_layers {
        let (xin, mask) = drop.apply(h);
        let b = cheb_basis(op, xin, p.hyper.k, p.hyper.cheb_basis);
        let mut zl = Mat::zeros(x.nrows(), p.weights[l * per].ncols());
        for (k, bk) in b.iter().enumerate() {
            zl += bk * &p.weights[l * per + k];
        }
        h = if l + 1 == n_layers {
            zl.clone()
        } else {
            activate(&zl, p.hyper.activation)
        };
        bases.push(b);
        z.push(zl);
        masks.push(mask);
    }
    (
        h,
        Cache::Cheb {
            basis: bases,
            z,
            masks,
        },
    )
}

fn cheb_backward(
    p: &ModelParams,
    op: &Operator,
    bases: &[Vec<Mat>],
    z: &[Mat],
    masks: &[Option<Mat>],
    g: &Mat,
) -> Vec<Mat> {
    let per = p.hyper.k + 1;
    let n_layers = bases.len();
    let mut grads = vec![Mat::zeros(0, 0); p.weights.len()];
    let mut g = g.clone();
    for l in (0..n_layers).rev() {
        if l + 1 != n_layers {
            g = activate_grad(&z[l], g, p.hyper.activation);
        }
        let mut gb: Vec<Mat> = Vec::with_capacity(per);
        for (k, bk) in bases[l].iter().enumerate() {
            grads[l * per + k] = bk.transpose() * &g;
            gb.push(&g * p.weights[l * per + k].transpose());
        }
        if l == 0 {
            continue;
        }
        for k in (1..per).rev() {
            let back = op.apply_transpose(&gb[k]);
            match p.hyper.cheb_basis {
                ChebBasis::Chebyshev if k >= 2 => {
                    gb[k - 1] += back * 2.0;
                    let gk = gb[k].clone();
                    gb[k - 2] -= gk;
                }
                _ => gb[k - 1] += back,
            }
        }
        g = masked(gb.swap_remove(0), &masks[l]);
    }
    grads
}

fn gcnii_forward(p: &ModelParams, op: &Operator, x: &Mat, drop: &mut Dropper) -> (Mat, Cache) {
    let layers = p.weights.len() - 2;
    let act = p.hyper.activation;
    let alpha = p.hyper.alpha;
    let (xin0, m0) = drop.apply(x.clone());
    let z0 = &xin0 * &p.weights[0];
    let h0 = activate(&z0, act);
    let mut masks = vec![m0];
    let (mut ss, mut ms) = (Vec::new(), Vec::new());
    let mut h = h0.clone();
    for l in 1..=layers {
        let beta = p.hyper.beta_at(l);
        let (hin, mask) = drop.apply(h);
        let s = op.apply(&hin) * (1.0 - alpha) + &h0 * alpha;
        let m = &s * (1.0 - beta) + (&s * &p.weights[l]) * beta;
        h = activate(&m, act);
        ss.push(s);
        ms.push(m);
        masks.push(mask);
    }
    let (xo, mo) = drop.apply(h);
    let logits = &xo * &p.weights[layers + 1];
    (
        logits,
        Cache::Gcnii {
            xin0,
            z0,
            s: ss,
            m: ms,
            masks,
            xo,
            mo,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn gcnii_backward(
    p: &ModelParams,
    op: &Operator,
    (xin0, z0): (&Mat, &Mat),
    s: &[Mat],
    m: &[Mat],
    masks: &[Option<Mat>],
    (xo, mo): (&Mat, &Option<Mat>),
    g: &Mat,
) -> Vec<Mat> {
    let layers = p.weights.len() - 2;
    let act = p.hyper.activation;
    let alpha = p.hyper.alpha;
    let mut grads = vec![Mat::zeros(0, 0); p.weights.len()];
    grads[layers + 1] = xo.transpose() * g;
    let mut g = masked(g * p.weights[layers + 1].transpose(), mo);
    let mut g_h0 = Mat::zeros(g.nrows(), g.ncols());
    for l in (1..=layers).rev() {
        let beta = p.hyper.beta_at(l);
        let gm = activate_grad(&m[l - 1], g, act);
        grads[l] = s[l - 1].transpose() * &gm * beta;
        let gs = &gm * (1.0 - beta) + (&gm * p.weights[l].transpose()) * beta;
        g_h0 += &gs * alpha;
        g = masked(op.apply_transpose(&gs) * (1.0 - alpha), &masks[l]);
    }
    let gz0 = activate_grad(z0, g + g_h0, act);
    grads[0] = xin0.transpose() * gz0;
    grads
}

#[cfg(test)]
mod tests {
    use super::super::Hyperparameters;
    use super::*;
    use crate::fixtures;

    fn identity_params(variant: Variant, hyper: Hyperparameters, dim: usize) -> ModelParams {
        let mut p = ModelParams::init(variant, hyper, dim, dim, 0).unwrap();
        for w in &mut p.weights {
            *w = Mat::identity(w.nrows(), w.ncols());
        }
        p
    }

    #[test]
    fn two_layer_linear_gcn_on_t1_squares_the_operator() {
        let op = Operator::from_hypergraph(&fixtures::t1(), true);
        let mut hyper = Hyperparameters::for_variant(Variant::HGcn);
        hyper.hidden = 2;
        hyper.activation = Activation::Identity;
        let p = identity_params(Variant::HGcn, hyper, 2);
        let x = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, -1.0]);
        let z = forward(&p, &op, &x).unwrap();
        let expected = Mat::from_row_slice(2, 2, &[0.625, 0.375, 0.375, 0.625]) * &x;
        assert!((z - expected).abs().max() < 1e-14);
    }

    #[test]
    fn ssgc_single_step_is_one_propagation() {
        let op = Operator::from_hypergraph(&fixtures::r5(), true);
        let mut hyper = Hyperparameters::for_variant(Variant::HSsgc);
        hyper.k = 1;
        hyper.alpha = 0.0;
        let p = identity_params(Variant::HSsgc, hyper, 3);
        let x = Mat::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let z = forward(&p, &op, &x).unwrap();
        assert!((z - op.apply(&x)).abs().max() < 1e-15);
    }

    #[test]
    fn appnp_full_teleport_ignores_the_operator() {
        let x = Mat::from_fn(5, 3, |i, j| (i + 2 * j) as f64 * 0.3 - 1.0);
        let mut hyper = Hyperparameters::for_variant(Variant::HAppnp);
        hyper.alpha = 1.0;
        let p = ModelParams::init(Variant::HAppnp, hyper.clone(), 3, 2, 4).unwrap();
        let a = forward(&p, &Operator::from_hypergraph(&fixtures::r5(), true), &x).unwrap();
        let b = forward(&p, &Operator::from_dense(&Mat::identity(5, 5)), &x).unwrap();
        hyper.k = 0;
        let mlp = ModelParams { hyper, ..p.clone() };
        let c = forward(&mlp, &Operator::from_dense(&Mat::identity(5, 5)), &x).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn forward_rejects_wrong_shapes() {
        let p = ModelParams::init(Variant::HGcn, Hyperparameters::for_variant(Variant::HGcn), 3, 2, 0).unwrap();
        let op = Operator::from_hypergraph(&fixtures::t1(), true);
        assert!(forward(&p, &op, &Mat::zeros(3, 3)).is_err());
        assert!(forward(&p, &op, &Mat::zeros(2, 4)).is_err());
    }

    #[test]
    fn dropout_is_seeded() {
        use rand::SeedableRng;
        let mut hyper = Hyperparameters::for_variant(Variant::HGcnii);
        hyper.dropout = 0.5;
        let p = ModelParams::init(Variant::HGcnii, hyper, 3, 2, 1).unwrap();
        let op = Operator::from_hypergraph(&fixtures::r5(), true);
        let x = Mat::from_fn(5, 3, |i, j| (i + j) as f64);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            forward_cached(&p, &op, &x, Some(&mut rng)).unwrap().0
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }
}
