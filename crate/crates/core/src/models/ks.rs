//! `z_t = -eps z_xx - eps^2 z_xxxx - eps (z^2)_x + sum_j chi_j u_j` on the
//! periodic unit interval with Hermite cubic elements (value and slope per
//! node, `n / 2` nodes).

use nalgebra::DMatrix;

use super::burgers::merge_entries;
use super::fem::{channel_of, gauss_legendre, mapped_rule, split_points, FemMatrices, FemModel};
use super::{FemKind, FemModelConfig};
use crate::error::{invalid, Result};

/// Hermite basis on an element of length `h` at local coordinate `t ∈ [0, 1]`:
/// values, first and second `x`-derivatives, ordered (value, slope) at the
/// left node then the right node.
pub(crate) fn hermite(t: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = [1.0 - 3.0 * t2 + 2.0 * t3, h * (t - 2.0 * t2 + t3), 3.0 * t2 - 2.0 * t3, h * (t3 - t2)];
    let d = [
        (-6.0 * t + 6.0 * t2) / h,
        1.0 - 4.0 * t + 3.0 * t2,
        (6.0 * t - 6.0 * t2) / h,
        3.0 * t2 - 2.0 * t,
    ];
    let dd = [
        (-6.0 + 12.0 * t) / (h * h),
        (-4.0 + 6.0 * t) / h,
        (6.0 - 12.0 * t) / (h * h),
        (6.0 * t - 2.0) / h,
    ];
    (v, d, dd)
}

pub(crate) fn ks_z0(x: f64, epsilon: f64) -> f64 {
    0.01 / epsilon.sqrt() * (4.0 * std::f64::consts::PI * x).sin()
}

pub fn assemble_ks(cfg: &FemModelConfig) -> Result<FemMatrices> {
    if cfg.kind != FemKind::KuramotoSivashinsky {
        return Err(invalid("Kuramoto-Sivashinsky assembly called with a different configuration"));
    }
    cfg.validate()?;
    let n = cfg.n;
    let nodes = n / 2;
    let h = 1.0 / nodes as f64;
    let eps = cfg.epsilon;
    let rule5 = gauss_legendre(5);
    let rule8 = gauss_legendre(8);

    let mut mass = DMatrix::zeros(n, n);
    let mut a = DMatrix::zeros(n, n);
    let mut n_entries = Vec::new();
    let mut b = DMatrix::zeros(n, cfg.m);
    let mut c = DMatrix::zeros(cfg.p, n);
    let mut load = vec![0.0; n];

    for e in 0..nodes {
        let xa = e as f64 * h;
        let xb = xa + h;
        let right = (e + 1) % nodes;
        let dofs = [2 * e, 2 * e + 1, 2 * right, 2 * right + 1];

        for (x, w) in mapped_rule(&rule5, xa, xb) {
            let (v, d, dd) = hermite((x - xa) / h, h);
            for i in 0..4 {
                for j in 0..4 {
                    mass[(dofs[i], dofs[j])] += w * v[i] * v[j];
                    // -eps z_xx - eps^2 z_xxxx, integrated by parts (periodic)
                    a[(dofs[i], dofs[j])] += w * (eps * d[i] * d[j] - eps * eps * dd[i] * dd[j]);
                    // -eps (z^2)_x tested against phi_i becomes eps z^2 phi_i'
                    for k in 0..4 {
                        n_entries.push((dofs[i], dofs[j], dofs[k], w * eps * v[j] * v[k] * d[i]));
                    }
                }
            }
        }

        for piece in split_points(xa, xb, cfg.m, cfg.p).windows(2) {
            let mid = 0.5 * (piece[0] + piece[1]);
            let (jm, jp) = (channel_of(mid, cfg.m), channel_of(mid, cfg.p));
            for (x, w) in mapped_rule(&rule5, piece[0], piece[1]) {
                let (v, _, _) = hermite((x - xa) / h, h);
                for i in 0..4 {
                    b[(dofs[i], jm)] += w * v[i];
                    c[(jp, dofs[i])] += w * v[i];
                }
            }
        }

        for (x, w) in mapped_rule(&rule8, xa, xb) {
            let (v, _, _) = hermite((x - xa) / h, h);
            let z = ks_z0(x, eps);
            for i in 0..4 {
                load[dofs[i]] += w * z * v[i];
            }
        }
    }

    let z0 = mass
        .clone()
        .cholesky()
        .ok_or_else(|| invalid("mass matrix is not positive definite"))?
        .solve(&DMatrix::from_column_slice(n, 1, &load));
    Ok(FemMatrices { mass, a, n_entries: merge_entries(n_entries), b, c, z0: z0.as_slice().to_vec() })
}

/// Standard-form Kuramoto-Sivashinsky model and the state of the test initial condition.
pub fn build_ks(cfg: &FemModelConfig) -> Result<FemModel> {
    assemble_ks(cfg)?.to_standard_form()
}
