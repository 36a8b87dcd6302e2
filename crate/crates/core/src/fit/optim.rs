/// Derivative-free simplex search with the standard reflection,
/// expansion, contraction and shrink coefficients (1, 2, 1/2, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the objective spread across the simplex is below
    /// `ftol * (1 + |f_best|)` and the simplex is small, or when the
    /// simplex alone has shrunk below `xtol` (both relative to the best point).
    pub ftol: f64,
    pub xtol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            ftol: 1e-10,
            xtol: 1e-9,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Non-finite objective values are treated as `+inf`, so the simplex
    /// moves away from them.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let evals = std::cell::Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += self.initial_step;
            pts.push(p);
        }
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
        let mut converged = false;

        while evals.get() < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let spread = vals[n] - vals[0];
            let size = pts[1..]
                .iter()
                .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let scale = 1.0 + pts[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let flat = spread.is_finite() && spread <= self.ftol * (1.0 + vals[0].abs());
            if (flat && size <= 1e-6 * scale) || size <= self.xtol * scale {
                converged = vals[0].is_finite();
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..n)
                    .map(|k| centroid[k] + t * (pts[n][k] - centroid[k]))
                    .collect()
            };

            let xr = along(-1.0);
            let fr = eval(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = eval(&xe);
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
                continue;
            }
            if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
                continue;
            }
            let xc = if fr < vals[n] {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = eval(&xc);
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
                continue;
            }
            for i in 1..=n {
                let p: Vec<f64> = (0..n)
                    .map(|k| pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]))
                    .collect();
                vals[i] = eval(&p);
                pts[i] = p;
            }
        }
        let best = (0..=n)
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap_or(0);
        Minimum {
            x: pts[best].clone(),
            fx: vals[best],
            evals: evals.get(),
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evals: 20_000,
            ..Default::default()
        };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4,
            "{m:?}"
        );
    }

    #[test]
    fn never_worse_than_start() {
        let nm = NelderMead::default();
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 3.0).abs()
            }
        };
        let m = nm.minimize(f, &[0.5]);
        assert!(m.fx <= 2.5);
        assert!((m.x[0] - 3.0).abs() < 1e-6);
    }
}
