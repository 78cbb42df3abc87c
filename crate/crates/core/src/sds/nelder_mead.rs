//! Nelder–Mead simplex minimizer with dimension-adaptive coefficients
//! (Gao & Han, 2012).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub max_iters: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this distance (max-norm) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 10_000,
            max_iters: 100_000,
            f_tol: 1e-10,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// Best value after the initial simplex, then after every iteration.
    pub trace: Vec<f64>,
    pub evals: usize,
    pub iters: usize,
    pub converged: bool,
}

struct Counter<F> {
    f: F,
    evals: usize,
    max_evals: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> Option<f64>> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.max_evals {
            return None;
        }
        let v = (self.f)(x)?;
        self.evals += 1;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Some(v)
    }
}

/// Minimize `f` from `x0`; the initial simplex adds `steps[i]` to coordinate `i`.
///
/// `f` may return `None` to stop early (e.g. a wall-clock budget). Returns
/// `None` only if not a single evaluation completed.
pub fn minimize<F>(
    f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Option<NelderMeadOutcome>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut counter = Counter {
        f,
        evals: 0,
        max_evals: opts.max_evals,
        best: None,
    };
    let mut trace = Vec::new();
    let mut iters = 0;
    let mut converged = false;

    let f0 = counter.eval(x0)?;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    let mut complete = true;
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        match counter.eval(&x) {
            Some(v) => simplex.push((x, v)),
            None => {
                complete = false;
                break;
            }
        }
    }

    if complete {
        'outer: loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            trace.push(simplex[0].1);
            let spread = simplex[n].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if spread <= opts.f_tol && diameter <= opts.x_tol {
                converged = true;
                break;
            }
            if iters >= opts.max_iters {
                break;
            }
            iters += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= nf);
            let along = |t: f64, toward: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(toward)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let worst = simplex[n].0.clone();
            let f_worst = simplex[n].1;
            let f_second = simplex[n - 1].1;
            let f_best = simplex[0].1;

            let xr = along(-alpha, &worst);
            let Some(fr) = counter.eval(&xr) else { break };
            if fr < f_best {
                let xe = along(beta, &xr);
                let Some(fe) = counter.eval(&xe) else {
                    simplex[n] = (xr, fr);
                    break;
                };
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < f_second {
                simplex[n] = (xr, fr);
                continue;
            }
            let accepted = if fr < f_worst {
                let xc = along(gamma, &xr);
                let Some(fc) = counter.eval(&xc) else { break };
                (fc <= fr).then_some((xc, fc))
            } else {
                let xc = along(gamma, &worst);
                let Some(fc) = counter.eval(&xc) else { break };
                (fc < f_worst).then_some((xc, fc))
            };
            if let Some(v) = accepted {
                simplex[n] = v;
                continue;
            }
            let best = simplex[0].0.clone();
            for vertex in simplex[1..].iter_mut() {
                let x: Vec<f64> = best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + delta * (v - b))
                    .collect();
                let Some(v) = counter.eval(&x) else {
                    break 'outer;
                };
                *vertex = (x, v);
            }
        }
    }

    let (x, f) = counter.best.take().expect("at least one evaluation");
    if trace.last().is_none_or(|&t| f < t) {
        trace.push(f);
    }
    Some(NelderMeadOutcome {
        x,
        f,
        trace,
        evals: counter.evals,
        iters,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| Some((x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2));
        let out = minimize(f, &[0.0, 0.0], &[1.0, 1.0], &NelderMeadOptions::default()).unwrap();
        assert!((out.x[0] - 3.0).abs() < 1e-4 && (out.x[1] + 1.0).abs() < 1e-4);
        assert!(out.converged);
    }

    #[test]
    fn rosenbrock_in_four_dimensions() {
        let opts = NelderMeadOptions {
            max_evals: 20_000,
            ..Default::default()
        };
        let out = minimize(
            |x| Some(rosenbrock(x)),
            &[-1.2, 1.0, -1.2, 1.0],
            &[0.5; 4],
            &opts,
        )
        .unwrap();
        assert!(out.f < 1e-6, "{}", out.f);
    }

    #[test]
    fn one_dimensional_problem() {
        let out = minimize(
            |x| Some((x[0] - 0.25).abs()),
            &[5.0],
            &[1.0],
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!((out.x[0] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn trace_is_non_increasing_and_budget_respected() {
        let opts = NelderMeadOptions {
            max_evals: 150,
            ..Default::default()
        };
        let out = minimize(|x| Some(rosenbrock(x)), &[0.0; 6], &[0.3; 6], &opts).unwrap();
        assert!(out.evals <= 150);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.f);
    }

    #[test]
    fn refusing_every_evaluation_yields_none() {
        assert!(minimize(
            |_| None,
            &[1.0, 2.0],
            &[1.0, 1.0],
            &NelderMeadOptions::default()
        )
        .is_none());
    }

    #[test]
    fn early_stop_keeps_best_point() {
        let mut calls = 0;
        let f = |x: &[f64]| {
            calls += 1;
            (calls <= 2).then(|| x[0] * x[0])
        };
        let out = minimize(f, &[1.0, 0.0], &[-1.0, 1.0], &NelderMeadOptions::default()).unwrap();
        assert_eq!(out.evals, 2);
        assert_eq!(out.f, 0.0);
    }
}
