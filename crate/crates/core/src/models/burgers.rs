//! `z_t = eps z_xx - 1/2 (z^2)_x + sum_j chi_j u_j` on `(0, 1)` with
//! homogeneous Dirichlet conditions, `n + 1` linear elements, and outputs
//! given by integrals of `z` over `p` equal subdomains.

use nalgebra::DMatrix;

use super::fem::{channel_of, gauss_legendre, mapped_rule, split_points, FemMatrices, FemModel};
use super::{FemKind, FemModelConfig};
use crate::error::{invalid, Result};

/// Test initial condition `0.0005 sin^2(2 pi x)` on `(0, 0.5)`, zero elsewhere.
pub(crate) fn burgers_z0(x: f64) -> f64 {
    if x > 0.0 && x < 0.5 {
        0.0005 * (2.0 * std::f64::consts::PI * x).sin().powi(2)
    } else {
        0.0
    }
}

pub fn assemble_burgers(cfg: &FemModelConfig) -> Result<FemMatrices> {
    if cfg.kind != FemKind::Burgers {
        return Err(invalid("Burgers assembly called with a non-Burgers configuration"));
    }
    cfg.validate()?;
    let n = cfg.n;
    let h = 1.0 / (n + 1) as f64;
    let rule2 = gauss_legendre(2);
    let rule8 = gauss_legendre(8);

    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    let mut n_entries = Vec::new();
    let mut b = DMatrix::zeros(n, cfg.m);
    let mut c = DMatrix::zeros(cfg.p, n);
    let mut load = vec![0.0; n];

    for e in 0..=n {
        let (xa, xb) = (e as f64 * h, (e + 1) as f64 * h);
        // local node 0 is interior index e-1, local node 1 is interior index e
        let dofs = [e.checked_sub(1), if e < n { Some(e) } else { None }];
        let value = |x: f64| [(xb - x) / h, (x - xa) / h];
        let slope = [-1.0 / h, 1.0 / h];

        for (x, w) in mapped_rule(&rule2, xa, xb) {
            let v = value(x);
            for (li, di) in dofs.iter().enumerate() {
                let Some(i) = *di else { continue };
                for (lj, dj) in dofs.iter().enumerate() {
                    let Some(j) = *dj else { continue };
                    mass[(i, j)] += w * v[li] * v[lj];
                    stiff[(i, j)] += w * slope[li] * slope[lj];
                    // -1/2 (z^2)_x = -z z_x tested against phi_i
                    for (lk, dk) in dofs.iter().enumerate() {
                        let Some(k) = *dk else { continue };
                        n_entries.push((i, j, k, -w * v[lj] * slope[lk] * v[li]));
                    }
                }
            }
        }

        let pts = split_points(xa, xb, cfg.m, cfg.p);
        for piece in pts.windows(2) {
            let mid = 0.5 * (piece[0] + piece[1]);
            let (jm, jp) = (channel_of(mid, cfg.m), channel_of(mid, cfg.p));
            for (x, w) in mapped_rule(&rule2, piece[0], piece[1]) {
                let v = value(x);
                for (li, di) in dofs.iter().enumerate() {
                    let Some(i) = *di else { continue };
                    b[(i, jm)] += w * v[li];
                    c[(jp, i)] += w * v[li];
                }
            }
        }

        let halves = if xa < 0.5 && xb > 0.5 { vec![(xa, 0.5), (0.5, xb)] } else { vec![(xa, xb)] };
        for (lo, hi) in halves {
            for (x, w) in mapped_rule(&rule8, lo, hi) {
                let v = value(x);
                let z = burgers_z0(x);
                for (li, di) in dofs.iter().enumerate() {
                    if let Some(i) = *di {
                        load[i] += w * z * v[li];
                    }
                }
            }
        }
    }

    let z0 = mass
        .clone()
        .cholesky()
        .ok_or_else(|| invalid("mass matrix is not positive definite"))?
        .solve(&DMatrix::from_column_slice(n, 1, &load));
    Ok(FemMatrices {
        mass,
        a: stiff * -cfg.epsilon,
        n_entries: merge_entries(n_entries),
        b,
        c,
        z0: z0.as_slice().to_vec(),
    })
}

/// Standard-form Burgers model and the state of the test initial condition.
pub fn build_burgers(cfg: &FemModelConfig) -> Result<FemModel> {
    assemble_burgers(cfg)?.to_standard_form()
}

/// Sum duplicate `(i, j, k)` entries, keeping a deterministic order.
pub(crate) fn merge_entries(mut entries: Vec<(usize, usize, usize, f64)>) -> Vec<(usize, usize, usize, f64)> {
    entries.sort_by_key(|e| (e.0, e.1, e.2));
    let mut out: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(entries.len());
    for e in entries {
        match out.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (e.0, e.1, e.2) => last.3 += e.3,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.3 != 0.0);
    out
}
