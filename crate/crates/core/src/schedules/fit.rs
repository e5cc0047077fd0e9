//! Damped least-squares (Levenberg–Marquardt) fit of a monotone logistic.
//!
//! Parameters are `(amplitude, ln rate, midpoint, floor)`; the log keeps the
//! rate positive. The floor is pinned to the dimension's physical bound
//! (MAR 1, or 0 for the sensitivities) when there are exactly three anchors,
//! which would otherwise leave the system underdetermined, and when any
//! anchor already sits on that bound. Likewise the upper asymptote of a
//! sensitivity is pinned to 1 when an anchor reaches 1. A plateau at a
//! physical bound is then reached rather than approximated by a nearby
//! asymptote.

use super::{logistic, AnchorTable, LogisticCurve, ScheduleError};

const MAX_ITERATIONS: usize = 400;
const RATE_STARTS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub curve: LogisticCurve,
    /// Root-mean-square residual over the anchors.
    pub rms: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    ages: &'a [f64],
    levels: &'a [f64],
    sign: f64,
    fixed_floor: Option<f64>,
    /// Pinned `floor + amplitude`; amplitude then follows the floor.
    fixed_top: Option<f64>,
    /// Indices into `(amplitude, ln rate, midpoint, floor)` that are fitted.
    free: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(
        ages: &'a [f64],
        levels: &'a [f64],
        sign: f64,
        fixed_floor: Option<f64>,
        fixed_top: Option<f64>,
    ) -> Self {
        let free = (0..4)
            .filter(|&i| !(i == 0 && fixed_top.is_some() || i == 3 && fixed_floor.is_some()))
            .collect();
        Problem {
            ages,
            levels,
            sign,
            fixed_floor,
            fixed_top,
            free,
        }
    }

    fn n_params(&self) -> usize {
        self.free.len()
    }

    /// Free parameters taken from a full `(amplitude, ln rate, midpoint, floor)` vector.
    fn pack(&self, full: [f64; 4]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        let mut full = [0.0; 4];
        for (&i, &v) in self.free.iter().zip(p) {
            full[i] = v;
        }
        let floor = self.fixed_floor.unwrap_or(full[3]);
        let amp = self.fixed_top.map_or(full[0], |top| top - floor);
        (amp, full[1].exp(), full[2], floor)
    }

    fn cost(&self, p: &[f64]) -> f64 {
        let (amp, rate, mid, floor) = self.unpack(p);
        self.ages
            .iter()
            .zip(self.levels)
            .map(|(&t, &y)| {
                let r = floor + amp * logistic(self.sign * rate * (t - mid)) - y;
                r * r
            })
            .sum()
    }

    /// Returns (JᵀJ, Jᵀr) for the current parameters.
    fn normal_equations(&self, p: &[f64]) -> ([[f64; 4]; 4], [f64; 4]) {
        let (amp, rate, mid, floor) = self.unpack(p);
        let m = self.n_params();
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&t, &y) in self.ages.iter().zip(self.levels) {
            let s = logistic(self.sign * rate * (t - mid));
            let ds = s * (1.0 - s);
            let r = floor + amp * s - y;
            let full = [
                s,
                amp * ds * self.sign * (t - mid) * rate,
                -amp * ds * self.sign * rate,
                if self.fixed_top.is_some() { 1.0 - s } else { 1.0 },
            ];
            let mut row = [0.0; 4];
            for (k, &i) in self.free.iter().enumerate() {
                row[k] = full[i];
            }
            for i in 0..m {
                jtr[i] += row[i] * r;
                for j in 0..m {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        (jtj, jtr)
    }
}

/// Least-squares logistic fit of an anchor table.
///
/// Flat anchors yield a zero-amplitude curve at the common level. A fit that
/// has not settled within the iteration budget returns
/// [`ScheduleError::NotConverged`] carrying the best parameters seen.
pub fn fit_logistic(anchors: &AnchorTable) -> Result<LogisticFit, ScheduleError> {
    anchors.validate()?;
    let dimension = anchors.dimension;
    let direction = dimension.direction();
    let ages: Vec<f64> = anchors.ages().collect();
    let levels: Vec<f64> = anchors.levels().collect();
    let first_age = ages[0];
    let span = ages[ages.len() - 1] - first_age;

    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(LogisticFit {
            curve: LogisticCurve {
                amplitude: 0.0,
                rate_per_month: 4.0 / span,
                midpoint_months: first_age + span / 2.0,
                floor: lo,
                direction,
            },
            rms: 0.0,
            iterations: 0,
        });
    }

    let bound = dimension.floor();
    let fixed_floor = (ages.len() == 3 || levels.contains(&bound)).then_some(bound);
    let ceiling = dimension.ceiling();
    let fixed_top = (ceiling.is_finite() && levels.contains(&ceiling)).then_some(ceiling);
    let problem = Problem::new(&ages, &levels, direction.sign(), fixed_floor, fixed_top);
    let floor0 = fixed_floor.unwrap_or(lo);
    let amp0 = fixed_top.unwrap_or(hi) - floor0;
    let mid0 = crossing_age(&ages, &levels, floor0 + amp0 / 2.0);
    let scale = levels.iter().map(|y| y * y).sum::<f64>().max(1e-300);

    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for mult in RATE_STARTS {
        let start = problem.pack([amp0, (mult / span).ln(), mid0, floor0]);
        let (params, cost, iters, converged) = levenberg_marquardt(&problem, start, scale);
        let better = match &best {
            None => true,
            Some((_, c, _, conv)) => (converged && !conv) || (converged == *conv && cost < *c),
        };
        if better {
            best = Some((params, cost, iters, converged));
        }
    }
    let (params, cost, iterations, converged) = best.expect("at least one start");
    let (amplitude, rate, mid, floor) = problem.unpack(&params);
    let curve = LogisticCurve {
        amplitude,
        rate_per_month: rate,
        midpoint_months: mid,
        floor,
        direction,
    };
    let rms = (cost / ages.len() as f64).sqrt();
    if !converged {
        return Err(ScheduleError::NotConverged {
            dimension,
            best: curve,
            rms,
            iterations,
        });
    }
    if amplitude < 0.0 {
        return Err(ScheduleError::FitNotMonotone {
            dimension,
            amplitude,
        });
    }
    Ok(LogisticFit {
        curve,
        rms,
        iterations,
    })
}

fn crossing_age(ages: &[f64], levels: &[f64], target: f64) -> f64 {
    for i in 1..ages.len() {
        let (a, b) = (levels[i - 1], levels[i]);
        if (a - target) * (b - target) <= 0.0 && a != b {
            return ages[i - 1] + (target - a) / (b - a) * (ages[i] - ages[i - 1]);
        }
    }
    (ages[0] + ages[ages.len() - 1]) / 2.0
}

fn levenberg_marquardt(
    problem: &Problem<'_>,
    mut params: Vec<f64>,
    scale: f64,
) -> (Vec<f64>, f64, usize, bool) {
    let m = problem.n_params();
    let mut cost = problem.cost(&params);
    let mut damping = 1e-3;
    let exact = 1e-30 * scale;

    for iter in 1..=MAX_ITERATIONS {
        if cost <= exact {
            return (params, cost, iter, true);
        }
        let (jtj, jtr) = problem.normal_equations(&params);
        let grad = jtr[..m].iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad <= 1e-14 * scale.sqrt() {
            return (params, cost, iter, true);
        }
        let mut accepted = false;
        while damping < 1e20 {
            let mut a = jtj;
            for i in 0..m {
                a[i][i] += damping * jtj[i][i].max(1e-12);
            }
            let mut rhs = [0.0; 4];
            for i in 0..m {
                rhs[i] = -jtr[i];
            }
            let Some(step) = solve(a, rhs, m) else {
                damping *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = params.iter().zip(&step).map(|(p, d)| p + d).collect();
            let new_cost = problem.cost(&candidate);
            if new_cost.is_finite() && new_cost < cost {
                let rel_step = params
                    .iter()
                    .zip(&step)
                    .fold(0.0f64, |a, (p, d)| a.max(d.abs() / p.abs().max(1.0)));
                let rel_drop = (cost - new_cost) / cost;
                params = candidate;
                cost = new_cost;
                damping = (damping / 3.0).max(1e-15);
                accepted = true;
                if rel_step < 1e-13 || (rel_drop < 1e-15 && rel_step < 1e-9) {
                    return (params, cost, iter, true);
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            // No descent direction left at any damping: a local minimum.
            return (params, cost, iter, true);
        }
    }
    (params, cost, MAX_ITERATIONS, false)
}

/// Gaussian elimination with partial pivoting on the leading `m×m` block.
fn solve(mut a: [[f64; 4]; 4], mut b: [f64; 4], m: usize) -> Option<[f64; 4]> {
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
