//! Derivative-free maximization by the adaptive Nelder–Mead simplex method.

#[derive(Clone, Debug)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct NmOpts {
    pub max_evals: usize,
    pub step: f64,
    /// Spread of simplex values below which a run counts as converged.
    pub ftol: f64,
    pub xtol: f64,
    /// Fresh simplices built around the incumbent after early convergence.
    pub max_reinit: usize,
}

impl Default for NmOpts {
    fn default() -> Self {
        NmOpts { max_evals: 2000, step: 0.1, ftol: 1e-13, xtol: 1e-10, max_reinit: 2 }
    }
}

/// Maximizes `f` starting from `x0`. Non-finite values are treated as worst.
pub fn maximize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: NmOpts) -> NmResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return NmResult { x: vec![], value: -v, evals, converged: true };
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0, &mut evals);
    let mut converged = false;
    let mut reinit = 0;

    while evals < opts.max_evals {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += if x[i].abs() > 1e-8 { opts.step * x[i].abs().max(0.25) } else { opts.step };
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        converged = false;
        while evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            let diam = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let flat = spread <= opts.ftol * (1.0 + simplex[0].1.abs()) && diam <= 1e-6;
            if flat || diam <= opts.xtol {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(alpha * gamma);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-gamma);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < fr.min(worst.1) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let xs: Vec<f64> = x0.iter().zip(&item.0).map(|(a, b)| a + delta * (b - a)).collect();
                        let fs = eval(&xs, &mut evals);
                        *item = (xs, fs);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_v {
            best_v = simplex[0].1;
            best_x = simplex[0].0.clone();
        }
        if !converged || reinit >= opts.max_reinit {
            break;
        }
        reinit += 1;
    }
    NmResult { x: best_x, value: -best_v, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_peak() {
        let res = maximize(
            |x| -((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + (x[2] - 0.2).powi(2)),
            &[0.0, 0.0, 0.0],
            NmOpts::default(),
        );
        assert!(res.value > -1e-10, "{}", res.value);
        assert!((res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let res = maximize(
            |x| -(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)),
            &[-1.2, 1.0],
            NmOpts { max_evals: 5000, ..NmOpts::default() },
        );
        assert!((res.x[0] - 1.0).abs() < 1e-4, "{:?}", res.x);
    }

    #[test]
    fn respects_budget() {
        let res = maximize(|x| x.iter().sum::<f64>(), &[0.0; 4], NmOpts { max_evals: 50, ..NmOpts::default() });
        assert!(res.evals <= 60);
        assert!(!res.converged);
    }
}
