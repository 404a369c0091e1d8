use super::{LinearFamily, LinearModel, TargetTransform};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeParams {
    pub alpha: f64,
    /// Bound on the norm of `Xᵀ(Xw + b − z) + αw` at termination.
    pub tol: f64,
    pub max_iter: usize,
    /// Fit an unpenalized intercept.
    pub fit_intercept: bool,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams {
            alpha: 1.0,
            tol: 1e-6,
            max_iter: 10_000,
            fit_intercept: true,
        }
    }
}

/// Minimizes `‖Xw + b·1 − z‖² + α‖w‖²` with an unpenalized intercept.
///
/// Solves the normal equations of the column-centered problem,
/// `(XcᵀXc + αI) w = Xcᵀ(z − z̄)`, by Jacobi-preconditioned conjugate
/// gradient without ever materializing the centered matrix; the intercept
/// is then `z̄ − x̄ᵀw`.
pub fn fit_ridge(x: &CsrMatrix, z: &[f64], params: &RidgeParams) -> Result<LinearModel> {
    fit_ridge_from(x, z, params, None)
}

/// [`fit_ridge`] started from the given weights.
pub fn fit_ridge_from(
    x: &CsrMatrix,
    z: &[f64],
    params: &RidgeParams,
    init: Option<&[f64]>,
) -> Result<LinearModel> {
    let mut out = solve(x, &[z], &[*params], &[init])?;
    out.pop().expect("one column")
}

/// Several right-hand sides against one matrix, sharing every matrix product.
/// Each result equals the corresponding [`fit_ridge`] call bit for bit.
pub fn fit_ridge_multi(
    x: &CsrMatrix,
    zs: &[Vec<f64>],
    params: &[RidgeParams],
) -> Result<Vec<LinearModel>> {
    let zr: Vec<&[f64]> = zs.iter().map(Vec::as_slice).collect();
    let inits = vec![None; zs.len()];
    solve(x, &zr, params, &inits)?.into_iter().collect()
}

enum State {
    /// Waiting for `A w` to recompute the true residual.
    Verify,
    /// Waiting for `A p`.
    Step,
    Done,
}

struct Column {
    params: RidgeParams,
    mean_z: f64,
    rhs: Vec<f64>,
    inv_diag: Vec<f64>,
    w: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    rz: f64,
    iterations: usize,
    state: State,
    failure: Option<Error>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Column {
    fn restart(&mut self) {
        let z: Vec<f64> = self.r.iter().zip(&self.inv_diag).map(|(r, m)| r * m).collect();
        self.rz = dot(&self.r, &z);
        self.p = z;
        self.state = State::Step;
    }

    fn after_residual(&mut self) {
        if norm(&self.r) <= self.params.tol {
            self.state = State::Done;
        } else if self.iterations >= self.params.max_iter {
            self.fail();
        } else {
            self.restart();
        }
    }

    fn fail(&mut self) {
        self.failure = Some(Error::NotConverged {
            iterations: self.iterations,
            residual: norm(&self.r),
        });
        self.state = State::Done;
    }
}

/// `out = (XcᵀXc + αI) v` for each requested vector (centering skipped for
/// columns without intercept).
fn apply(
    x: &CsrMatrix,
    x_mean: &[f64],
    cols: &[&Column],
    vs: &[&[f64]],
) -> Vec<Vec<f64>> {
    let mut xv = vec![vec![0.0; x.n_rows()]; vs.len()];
    x.mul_multi_into(vs, &mut xv);
    for ((u, v), c) in xv.iter_mut().zip(vs).zip(cols) {
        if c.params.fit_intercept {
            let shift = dot(x_mean, v);
            u.iter_mut().for_each(|e| *e -= shift);
        }
    }
    let us: Vec<&[f64]> = xv.iter().map(Vec::as_slice).collect();
    let mut out = vec![vec![0.0; x.n_cols()]; vs.len()];
    x.tmul_multi_into(&us, &mut out);
    for (((o, u), v), c) in out.iter_mut().zip(&xv).zip(vs).zip(cols) {
        if c.params.fit_intercept {
            let s: f64 = u.iter().sum();
            o.iter_mut().zip(x_mean).for_each(|(e, m)| *e -= m * s);
        }
        o.iter_mut().zip(v.iter()).for_each(|(e, vi)| *e += c.params.alpha * vi);
    }
    out
}

fn solve(
    x: &CsrMatrix,
    zs: &[&[f64]],
    params: &[RidgeParams],
    inits: &[Option<&[f64]>],
) -> Result<Vec<Result<LinearModel>>> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if zs.len() != params.len() {
        return Err(Error::Dimension("one parameter set per target required".into()));
    }
    for (z, p) in zs.iter().zip(params) {
        if z.len() != n || n == 0 {
            return Err(Error::Dimension(format!("{n} rows but {} targets", z.len())));
        }
        if !(p.alpha > 0.0) {
            return Err(Error::Config(format!("ridge alpha must be positive, got {}", p.alpha)));
        }
    }
    let x_mean = x.column_means();
    let mut col_sq = vec![0.0; d];
    for i in 0..n {
        for (j, v) in x.row_entries(i) {
            col_sq[j] += v * v;
        }
    }

    let mut cols: Vec<Column> = zs
        .iter()
        .zip(params)
        .zip(inits)
        .map(|((z, p), init)| {
            let mean_z = if p.fit_intercept {
                z.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let zc: Vec<f64> = z.iter().map(|v| v - mean_z).collect();
            let mut rhs = x.tmul_vec(&zc);
            if p.fit_intercept {
                let s: f64 = zc.iter().sum();
                rhs.iter_mut().zip(&x_mean).for_each(|(e, m)| *e -= m * s);
            }
            let inv_diag = col_sq
                .iter()
                .zip(&x_mean)
                .map(|(sq, m)| {
                    let centered = if p.fit_intercept {
                        (sq - n as f64 * m * m).max(0.0)
                    } else {
                        *sq
                    };
                    1.0 / (centered + p.alpha)
                })
                .collect();
            let mut c = Column {
                params: *p,
                mean_z,
                w: init.map_or_else(|| vec![0.0; d], <[f64]>::to_vec),
                r: rhs.clone(),
                rhs,
                inv_diag,
                p: Vec::new(),
                rz: 0.0,
                iterations: 0,
                state: State::Verify,
                failure: None,
            };
            if init.is_none() {
                c.after_residual();
            }
            c
        })
        .collect();

    loop {
        let active: Vec<usize> = (0..cols.len())
            .filter(|&k| !matches!(cols[k].state, State::Done))
            .collect();
        if active.is_empty() {
            break;
        }
        let products = {
            let refs: Vec<&Column> = active.iter().map(|&k| &cols[k]).collect();
            let vs: Vec<&[f64]> = refs
                .iter()
                .map(|c| match c.state {
                    State::Verify => c.w.as_slice(),
                    _ => c.p.as_slice(),
                })
                .collect();
            apply(x, &x_mean, &refs, &vs)
        };
        for (&k, av) in active.iter().zip(products) {
            let c = &mut cols[k];
            match c.state {
                State::Verify => {
                    c.r = c.rhs.iter().zip(&av).map(|(b, a)| b - a).collect();
                    c.after_residual();
                }
                State::Step => {
                    let pq = dot(&c.p, &av);
                    if !(pq > 0.0) || !pq.is_finite() {
                        c.fail();
                        continue;
                    }
                    let step = c.rz / pq;
                    c.w.iter_mut().zip(&c.p).for_each(|(w, p)| *w += step * p);
                    c.r.iter_mut().zip(&av).for_each(|(r, q)| *r -= step * q);
                    c.iterations += 1;
                    if norm(&c.r) <= c.params.tol {
                        c.state = State::Verify;
                    } else if c.iterations >= c.params.max_iter {
                        c.fail();
                    } else {
                        let z: Vec<f64> = c.r.iter().zip(&c.inv_diag).map(|(r, m)| r * m).collect();
                        let rz_new = dot(&c.r, &z);
                        let beta = rz_new / c.rz;
                        c.rz = rz_new;
                        c.p.iter_mut().zip(&z).for_each(|(p, zi)| *p = zi + beta * *p);
                    }
                }
                State::Done => unreachable!(),
            }
        }
    }

    Ok(cols
        .into_iter()
        .map(|c| {
            if let Some(e) = c.failure {
                return Err(e);
            }
            let intercept = if c.params.fit_intercept {
                c.mean_z - dot(&x_mean, &c.w)
            } else {
                0.0
            };
            Ok(LinearModel {
                family: LinearFamily::Ridge,
                weights: c.w,
                intercept,
                transform: TargetTransform::LogShift(1.0),
                alpha: c.params.alpha,
            })
        })
        .collect())
}
