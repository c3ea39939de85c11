//! Float phase: alternating L1 fits of `μ` and `ξ` with `minilp`.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use rand::Rng;

use super::Constraints;
use crate::rational::to_f64;

pub(crate) type Table = Vec<Vec<f64>>;

#[derive(Clone, Debug)]
pub(crate) struct FloatData {
    pub p: Table,
    pub norms: Vec<f64>,
    pub unit: Option<usize>,
    pub state_relations: Table,
    pub effect_relations: Vec<(Vec<f64>, f64)>,
}

impl FloatData {
    pub fn of(c: &Constraints) -> Self {
        let v = |xs: &[crate::rational::Rational]| xs.iter().map(to_f64).collect::<Vec<f64>>();
        Self {
            p: c.table.to_f64_rows(),
            norms: v(&c.norms),
            unit: c.unit,
            state_relations: c.state_relations.iter().map(|a| v(a)).collect(),
            effect_relations: c.effect_relations.iter().map(|(b, k)| (v(b), to_f64(k))).collect(),
        }
    }

    fn states(&self) -> usize {
        self.p.len()
    }

    fn effects(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    /// `max |μ ξᵀ - P|`.
    pub fn residual(&self, mu: &Table, xi: &Table) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.p.iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                let v: f64 = mu[i].iter().zip(&xi[j]).map(|(a, b)| a * b).sum();
                worst = worst.max((v - pij).abs());
            }
        }
        worst
    }
}

fn expr(terms: impl IntoIterator<Item = (Variable, f64)>) -> LinearExpr {
    terms.into_iter().filter(|(_, c)| *c != 0.0).collect()
}

/// Adds `Σ terms - target = plus - minus` with both slacks in the objective.
fn fit(problem: &mut Problem, terms: Vec<(Variable, f64)>, target: f64) {
    let plus = problem.add_var(1.0, (0.0, f64::INFINITY));
    let minus = problem.add_var(1.0, (0.0, f64::INFINITY));
    let mut e = expr(terms);
    e.add(plus, -1.0);
    e.add(minus, 1.0);
    problem.add_constraint(e, ComparisonOp::Eq, target);
}

/// Best `μ` for fixed `ξ`; returns the table and the L1 misfit.
pub(crate) fn solve_states(d: &FloatData, xi: &Table, lam: usize) -> Option<(Table, f64)> {
    let mut pr = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<Variable>> = (0..d.states())
        .map(|i| (0..lam).map(|_| pr.add_var(0.0, (0.0, d.norms[i].max(0.0)))).collect())
        .collect();
    for i in 0..d.states() {
        pr.add_constraint(expr(vars[i].iter().map(|&v| (v, 1.0))), ComparisonOp::Eq, d.norms[i]);
        for j in 0..d.effects() {
            if Some(j) == d.unit {
                continue;
            }
            fit(&mut pr, (0..lam).map(|l| (vars[i][l], xi[j][l])).collect(), d.p[i][j]);
        }
    }
    for a in &d.state_relations {
        for l in 0..lam {
            let e = expr((0..d.states()).map(|i| (vars[i][l], a[i])));
            pr.add_constraint(e, ComparisonOp::Eq, 0.0);
        }
    }
    let sol = pr.solve().ok()?;
    let table = vars.iter().map(|row| row.iter().map(|v| sol[*v].max(0.0)).collect()).collect();
    Some((table, sol.objective()))
}

/// Best `ξ` for fixed `μ`.
pub(crate) fn solve_effects(d: &FloatData, mu: &Table, lam: usize) -> Option<(Table, f64)> {
    let mut pr = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Option<Vec<Variable>>> = (0..d.effects())
        .map(|j| (Some(j) != d.unit).then(|| (0..lam).map(|_| pr.add_var(0.0, (0.0, 1.0))).collect()))
        .collect();
    for (j, row) in vars.iter().enumerate() {
        let Some(row) = row else { continue };
        for i in 0..d.states() {
            fit(&mut pr, (0..lam).map(|l| (row[l], mu[i][l])).collect(), d.p[i][j]);
        }
    }
    for (b, k) in &d.effect_relations {
        for l in 0..lam {
            let mut rhs = -k;
            let mut terms = Vec::new();
            for (j, row) in vars.iter().enumerate() {
                match row {
                    Some(row) => terms.push((row[l], b[j])),
                    None => rhs -= b[j],
                }
            }
            pr.add_constraint(expr(terms), ComparisonOp::Eq, rhs);
        }
    }
    let sol = pr.solve().ok()?;
    let table = vars
        .iter()
        .map(|row| match row {
            Some(row) => row.iter().map(|v| sol[*v].clamp(0.0, 1.0)).collect(),
            None => vec![1.0; lam],
        })
        .collect();
    Some((table, sol.objective()))
}

/// Final tables of one start.
#[derive(Clone, Debug)]
pub(crate) struct StartResult {
    pub mu: Table,
    pub xi: Table,
    pub residual: f64,
    pub iterations: usize,
}

/// Response tables of `lam` states of the fragment, spread out greedily.
pub(crate) fn vertex_start(d: &FloatData, lam: usize) -> Table {
    let mut chosen: Vec<usize> = vec![0];
    let dist = |a: usize, b: usize| d.p[a].iter().zip(&d.p[b]).map(|(x, y)| (x - y).abs()).sum::<f64>();
    while chosen.len() < lam.min(d.states()) {
        let next = (0..d.states())
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| {
                let da = chosen.iter().map(|&c| dist(a, c)).fold(f64::INFINITY, f64::min);
                let db = chosen.iter().map(|&c| dist(b, c)).fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        chosen.push(next);
    }
    (0..d.effects())
        .map(|j| (0..lam).map(|l| d.p[chosen[l % chosen.len()]][j].clamp(0.0, 1.0)).collect())
        .collect()
}

pub(crate) fn random_start<R: Rng>(d: &FloatData, lam: usize, rng: &mut R) -> Table {
    (0..d.effects())
        .map(|j| {
            (0..lam)
                .map(|_| if Some(j) == d.unit { 1.0 } else { rng.gen::<f64>() })
                .collect()
        })
        .collect()
}

/// Alternates the two fits from `xi` until the misfit is within `tol`, it
/// stalls, or `max_iterations` is reached.
pub(crate) fn alternate(d: &FloatData, mut xi: Table, lam: usize, tol: f64, max_iterations: usize) -> Option<StartResult> {
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut mu = Vec::new();
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let (m, _) = solve_states(d, &xi, lam)?;
        let (x, misfit) = solve_effects(d, &m, lam)?;
        mu = m;
        xi = x;
        if misfit <= tol {
            break;
        }
        if best - misfit <= 1e-9 * best.max(1.0) {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        } else {
            stalled = 0;
        }
        best = best.min(misfit);
    }
    let residual = d.residual(&mu, &xi);
    Some(StartResult { mu, xi, residual, iterations })
}
