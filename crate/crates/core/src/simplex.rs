//! Derivative-free Nelder–Mead minimizer.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged when every vertex lies within `xtol · max(1, |x_best|)` of
    /// the best vertex in each coordinate.
    pub xtol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, xtol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fmin: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn spread(simplex: &[Vec<f64>]) -> Vec<f64> {
    let best = &simplex[0];
    (0..best.len())
        .map(|i| {
            let worst = simplex.iter().map(|v| (v[i] - best[i]).abs()).fold(0.0, f64::max);
            worst / best[i].abs().max(1.0)
        })
        .collect()
}

/// Minimizes `f` from `x0` using an axis-aligned initial simplex with the
/// given per-coordinate `steps`.
pub fn minimize<F>(f: F, x0: &[f64], steps: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        // order vertices best..worst
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        if spread(&simplex).iter().all(|s| *s <= opts.xtol) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64).collect();
        let toward = |coef: f64| -> Vec<f64> {
            (0..n).map(|i| centroid[i] + coef * (simplex[n][i] - centroid[i])).collect()
        };

        let reflected = toward(-REFLECT);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = toward(-REFLECT * EXPAND);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (candidate, fc) = if fr < values[n] {
            let c = toward(-REFLECT * CONTRACT);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = toward(CONTRACT);
            let fc = f(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = candidate;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            for (x, b) in simplex[k].iter_mut().zip(&best) {
                *x = b + SHRINK * (*x - b);
            }
            values[k] = f(&simplex[k]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    SimplexResult { x: simplex[best].clone(), fmin: values[best], iterations, converged }
}
