//! Derivative-free maximization for the measurement search.
//!
//! Nelder–Mead with the standard reflection/expansion/contraction/shrink
//! coefficients, wrapped in a deterministic multi-start driver. Objectives
//! may return `f64::NEG_INFINITY` (or NaN, treated as worst) to veto a point;
//! the hierarchy search uses that for singular or invalid measurements.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Nelder–Mead controls. `ftol` is the absolute spread `f_best - f_worst`
/// at which the simplex is declared converged.
#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub ftol: f64,
    /// Initial simplex offset added to each coordinate in turn.
    pub simplex_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 2000,
            ftol: 1e-9,
            simplex_step: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Maximizes `f` from `x0`. NaN objective values are treated as `-∞`.
pub fn nelder_mead_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    assert!(n > 0, "cannot optimize over zero parameters");
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Simplex of n+1 vertices, kept sorted best (largest) first.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.simplex_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    sort_desc(&mut simplex);

    let mut converged = spread(&simplex) <= opts.ftol;
    while !converged && evals < opts.max_evals {
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let shift = |coef: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + coef * (centroid[j] - worst.0[j])).collect()
        };

        let xr = shift(1.0);
        let fr = eval(&xr, &mut evals);
        if fr > simplex[0].1 {
            // Best so far: try to expand further along the same ray.
            let xe = shift(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst.1 {
                let x = shift(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = shift(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc > fr.max(worst.1) {
                simplex[n] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for k in 1..=n {
                    let x: Vec<f64> = (0..n)
                        .map(|j| best[j] + 0.5 * (simplex[k].0[j] - best[j]))
                        .collect();
                    let v = eval(&x, &mut evals);
                    simplex[k] = (x, v);
                }
            }
        }
        sort_desc(&mut simplex);
        converged = spread(&simplex) <= opts.ftol;
    }

    NelderMeadResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evals,
        converged,
    }
}

fn sort_desc(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
}

fn spread(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = simplex[0].1;
    let worst = simplex[simplex.len() - 1].1;
    if !best.is_finite() || !worst.is_finite() {
        f64::INFINITY
    } else {
        best - worst
    }
}

/// Multi-start controls: start 0 is the origin, the rest draw each
/// coordinate uniformly from `(-init_range, init_range)` using ChaCha8
/// seeded by `seed`.
#[derive(Clone, Copy, Debug)]
pub struct MultiStartOptions {
    pub starts: usize,
    pub seed: u64,
    pub init_range: f64,
    pub nm: NelderMeadOptions,
}

impl Default for MultiStartOptions {
    fn default() -> Self {
        MultiStartOptions {
            starts: 16,
            seed: 0,
            init_range: std::f64::consts::PI,
            nm: NelderMeadOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MultiStartReport {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Index of the winning start; ties resolve to the lowest index.
    pub best_start: usize,
    pub starts: usize,
    pub total_evals: usize,
    /// Convergence flag of the winning start's simplex.
    pub best_converged: bool,
}

/// Runs `opts.starts` independent Nelder–Mead searches and keeps the best
/// result, reducing by strict improvement so the winner is deterministic.
pub fn multi_start_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    dim: usize,
    opts: &MultiStartOptions,
) -> MultiStartReport {
    assert!(opts.starts >= 1, "need at least one start");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(usize, NelderMeadResult)> = None;
    let mut total_evals = 0;

    for start in 0..opts.starts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; dim]
        } else {
            (0..dim)
                .map(|_| rng.gen_range(-opts.init_range..opts.init_range))
                .collect()
        };
        let result = nelder_mead_max(f, &x0, &opts.nm);
        total_evals += result.evals;
        let improved = match &best {
            None => true,
            Some((_, b)) => result.value > b.value,
        };
        if improved {
            best = Some((start, result));
        }
    }

    let (best_start, result) = best.expect("at least one start ran");
    MultiStartReport {
        best_x: result.x,
        best_value: result.value,
        best_start,
        starts: opts.starts,
        total_evals,
        best_converged: result.converged,
    }
}
