//! Derivative-free box-constrained minimization (Nelder–Mead with projection).

/// Stopping rules for a single Nelder–Mead run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    /// Initial edge length as a fraction of each box side.
    pub initial_step: f64,
    /// Rebuild the simplex around the best vertex after convergence while that keeps
    /// improving and the budget allows.
    pub restart: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 500,
            diameter_tol: 1e-6,
            initial_step: 0.1,
            restart: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimizes `f` over the box `[lower, upper]`; trial points are clamped onto the box.
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead_box(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    if n == 0 {
        let value = eval(&start, &mut evals);
        return Minimum {
            x: start,
            value,
            evals,
            converged: true,
        };
    }

    let initial_simplex = |start: &[f64]| {
        let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
        for j in 0..n {
            let mut v = start.to_vec();
            let side = upper[j] - lower[j];
            let step = opts.initial_step * if side > 0.0 { side } else { 1.0 };
            v[j] = if v[j] + step <= upper[j] { v[j] + step } else { v[j] - step };
            project(&mut v, lower, upper);
            simplex.push(v);
        }
        simplex
    };
    let mut simplex = initial_simplex(&start);
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    // dimension-adaptive coefficients (Gao and Han)
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut converged = false;
    let mut last_restart_value = f64::INFINITY;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        if diameter < opts.diameter_tol {
            // a collapsed simplex can stall on a box face; restart once per improvement
            if !opts.restart || values[0] >= last_restart_value || evals + n + 1 > opts.max_evals {
                converged = true;
                break;
            }
            last_restart_value = values[0];
            let best = simplex[0].clone();
            let fbest = values[0];
            simplex = initial_simplex(&best);
            values = std::iter::once(fbest)
                .chain(simplex[1..].iter().map(|v| eval(v, &mut evals)))
                .collect();
            continue;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(rho * alpha);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let mut p: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            project(&mut p, lower, upper);
            values[i] = eval(&p, &mut evals);
            simplex[i] = p;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is non-empty");
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 10.0 * (x[1] + 0.2).powi(2);
        let m = nelder_mead_box(f, &[1.0, 1.0], &[-2.0, -2.0], &[2.0, 2.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 0.3).abs() < 1e-5 && (m.x[1] + 0.2).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn respects_the_box() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2) + x[1].powi(2);
        let m = nelder_mead_box(f, &[0.0, 0.5], &[-1.0, -1.0], &[1.0, 1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6);
        assert!(m.x.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 5000,
            diameter_tol: 1e-9,
            ..Default::default()
        };
        let m = nelder_mead_box(f, &[-1.2, 1.0], &[-3.0, -3.0], &[3.0, 3.0], &opts);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m);
    }

    #[test]
    fn infinite_barrier_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 0.5).powi(2) };
        let m = nelder_mead_box(f, &[0.1], &[-1.0], &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn respects_eval_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v.sin()).sum::<f64>();
        let opts = NelderMeadOptions {
            max_evals: 20,
            ..Default::default()
        };
        let m = nelder_mead_box(f, &[0.0; 4], &[-5.0; 4], &[5.0; 4], &opts);
        assert!(m.evals <= 20 + 4 + 1);
    }
}
