//! Linear epsilon-insensitive support vector regression.
//!
//! Primal: `½‖w‖² + C Σ max(0, |wᵀxᵢ + b − zᵢ| − ε)` with `b` unpenalized.
//!
//! For a fixed intercept the weight problem is solved in the dual,
//!
//! ```text
//! min_β  ½‖Σ βᵢxᵢ‖² − Σ (zᵢ − b) βᵢ + ε Σ |βᵢ|,   −C ≤ βᵢ ≤ C,
//! ```
//!
//! by randomized coordinate descent with exact one-dimensional updates,
//! stopping on the relative duality gap. The optimal value as a function of
//! `b` is convex with derivative `−Σ βᵢ(b)`, so the intercept is located by
//! bisection on the sign of that sum, warm-starting every inner solve.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LinearFamily, LinearModel, TargetTransform};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// Relative duality-gap tolerance of each inner solve.
    pub tol: f64,
    /// Coordinate-descent sweeps allowed per inner solve.
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

pub fn svr_primal_objective(x: &CsrMatrix, z: &[f64], w: &[f64], b: f64, c: f64, epsilon: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = (0..x.n_rows())
        .map(|i| ((x.row_dot(i, w) + b - z[i]).abs() - epsilon).max(0.0))
        .sum();
    reg + c * loss
}

struct Dual<'a> {
    x: &'a CsrMatrix,
    z: &'a [f64],
    params: SvrParams,
    q_diag: Vec<f64>,
    beta: Vec<f64>,
    w: Vec<f64>,
    order: Vec<usize>,
    rng: ChaCha8Rng,
}

impl<'a> Dual<'a> {
    fn new(x: &'a CsrMatrix, z: &'a [f64], params: SvrParams) -> Self {
        Dual {
            x,
            z,
            params,
            q_diag: (0..x.n_rows()).map(|i| x.row_sq_norm(i)).collect(),
            beta: vec![0.0; x.n_rows()],
            w: vec![0.0; x.n_cols()],
            order: (0..x.n_rows()).collect(),
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
        }
    }

    fn gap(&self, b: f64) -> (f64, f64) {
        let primal = svr_primal_objective(self.x, self.z, &self.w, b, self.params.c, self.params.epsilon);
        let ww: f64 = self.w.iter().map(|v| v * v).sum();
        let dual = 0.5 * ww
            - self
                .beta
                .iter()
                .zip(self.z)
                .map(|(bi, zi)| bi * (zi - b))
                .sum::<f64>()
            + self.params.epsilon * self.beta.iter().map(|v| v.abs()).sum::<f64>();
        (primal, primal + dual)
    }

    /// Solves the weight problem for intercept `b`, warm-started from the
    /// current dual point. Returns whether the gap tolerance was reached.
    fn solve(&mut self, b: f64) -> bool {
        let (c, eps) = (self.params.c, self.params.epsilon);
        for _ in 0..self.params.max_iter {
            let (primal, gap) = self.gap(b);
            if gap <= self.params.tol * primal.max(1.0) {
                return true;
            }
            self.order.shuffle(&mut self.rng);
            for k in 0..self.order.len() {
                let i = self.order[k];
                let target = self.z[i] - b;
                let h = self.q_diag[i];
                let old = self.beta[i];
                let new = if h == 0.0 {
                    if target > eps {
                        c
                    } else if target < -eps {
                        -c
                    } else {
                        0.0
                    }
                } else {
                    let g = self.x.row_dot(i, &self.w) - target;
                    let (gp, gn) = (g + eps, g - eps);
                    let step = if gp < h * old {
                        -gp / h
                    } else if gn > h * old {
                        -gn / h
                    } else {
                        -old
                    };
                    (old + step).clamp(-c, c)
                };
                let delta = new - old;
                if delta != 0.0 {
                    self.beta[i] = new;
                    for (j, v) in self.x.row_entries(i) {
                        self.w[j] += delta * v;
                    }
                }
            }
        }
        let (primal, gap) = self.gap(b);
        gap <= self.params.tol * primal.max(1.0)
    }

    /// Derivative of the optimal value in the intercept.
    fn slope(&self) -> f64 {
        -self.beta.iter().sum::<f64>()
    }
}

const BISECTION_STEPS: usize = 100;

pub fn fit_svr(x: &CsrMatrix, z: &[f64], params: &SvrParams) -> Result<LinearModel> {
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) {
        return Err(Error::Config("SVR needs C > 0 and epsilon >= 0".into()));
    }
    if x.n_rows() != z.len() || z.is_empty() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), z.len())));
    }
    let mut dual = Dual::new(x, z, *params);

    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let spread = (sorted[sorted.len() - 1] - sorted[0]).max(1.0);

    dual.solve(median);
    let s0 = dual.slope();
    let (mut lo, mut hi) = if s0 == 0.0 {
        (median, median)
    } else {
        // expand until the slope changes sign
        let dir = if s0 > 0.0 { -1.0 } else { 1.0 };
        let mut step = spread;
        let mut inner = median;
        let mut outer = median + dir * step;
        loop {
            dual.solve(outer);
            let s = dual.slope();
            if s == 0.0 || (s > 0.0) != (s0 > 0.0) {
                break;
            }
            inner = outer;
            step *= 2.0;
            outer += dir * step;
            if !outer.is_finite() {
                return Err(Error::NotConverged {
                    iterations: 0,
                    residual: s,
                });
            }
        }
        if dir < 0.0 {
            (outer, inner)
        } else {
            (inner, outer)
        }
    };
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        dual.solve(mid);
        let s = dual.slope();
        if s > 0.0 {
            hi = mid;
        } else if s < 0.0 {
            lo = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    if !dual.solve(b) {
        let (_, gap) = dual.gap(b);
        return Err(Error::NotConverged {
            iterations: params.max_iter,
            residual: gap,
        });
    }
    Ok(LinearModel {
        family: LinearFamily::Svr,
        weights: dual.w,
        intercept: b,
        transform: TargetTransform::LogShift(1.0),
        alpha: 1.0 / params.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_inside_tube_give_zero_weights() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let z = [0.05, -0.05, 0.0];
        let m = fit_svr(&x, &z, &SvrParams::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn line_through_origin() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![2.0], vec![3.0]]);
        let p = SvrParams {
            c: 1000.0,
            epsilon: 0.0,
            ..Default::default()
        };
        let m = fit_svr(&x, &[2.0, 4.0, 6.0], &p).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-4, "{:?}", m);
        assert!(m.intercept.abs() < 1e-3, "{:?}", m);
    }
}
