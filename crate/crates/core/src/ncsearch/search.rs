use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::lp::{alternate, random_start, vertex_start, FloatData, StartResult, Table};
use super::{verify_certificate, Constraints, NcCertificate, NcMode, NcProblem, SearchOutcome};
use crate::error::{OptError, Result};
use crate::matrix::{solve_linear, Matrix};
use crate::quotient::fragment_dimension;
use crate::random::trial_rng;
use crate::rational::{rationalize, Rational};

/// Entries below this are treated as zero when polishing.
const SUPPORT: f64 = 1e-9;

/// Searches `Λ = d, d+1, …, max_ontic` for a certificate.
///
/// Each `Λ` runs `prob.starts` alternating fits (start 0 from fragment
/// states, the others random), in parallel. Fits within tolerance are
/// rationalized, polished and re-verified exactly, lowest residual first;
/// the first certificate that verifies is returned.
pub fn search_nc_model(prob: &NcProblem, seed: u64) -> Result<SearchOutcome> {
    if prob.mode != NcMode::Search {
        return Err(OptError::ShapeMismatch("the problem is in verify mode".into()));
    }
    let c = Constraints::of(&prob.fragment);
    let d = FloatData::of(&c);
    let mut spent = 0usize;
    for lam in fragment_dimension(&prob.fragment).max(1)..=prob.max_ontic {
        let results: Vec<Option<StartResult>> = (0..prob.starts)
            .into_par_iter()
            .map(|s| {
                let xi = if s == 0 {
                    vertex_start(&d, lam)
                } else {
                    random_start(&d, lam, &mut trial_rng(seed, ((lam as u64) << 32) | s as u64))
                };
                alternate(&d, xi, lam, prob.tolerance, prob.max_iterations)
            })
            .collect();
        spent += results.iter().flatten().map(|r| r.iterations).sum::<usize>();
        let mut good: Vec<(usize, StartResult)> = results
            .into_iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
            .filter(|(_, r)| r.residual <= prob.tolerance)
            .collect();
        good.sort_by(|a, b| a.1.residual.total_cmp(&b.1.residual).then(a.0.cmp(&b.0)));
        for (_, r) in &good {
            if let Some(cert) = exact_certificate(prob, &c, r, lam)? {
                return Ok(SearchOutcome::Found(cert));
            }
        }
        if spent > prob.budget {
            return Err(OptError::BudgetExceeded(prob.budget));
        }
    }
    Ok(SearchOutcome::Infeasible { bound: prob.max_ontic })
}

fn to_matrix(t: &Table, cap: u64, clamp_one: bool) -> Matrix {
    let rows = t
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| {
                    let v = if clamp_one { v.clamp(0.0, 1.0) } else { v.max(0.0) };
                    rationalize(v, cap)
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).expect("rectangular")
}

fn certificate(c: &Constraints, lam: usize, mu: Matrix, xi: Matrix) -> Result<NcCertificate> {
    let diff = mu.mul(&xi.transpose())?.sub(&c.table)?;
    let residual = diff.entries().iter().map(Signed::abs).max().unwrap_or_else(Rational::zero);
    Ok(NcCertificate {
        ontic_size: lam,
        state_table: mu,
        effect_table: xi,
        residual,
    })
}

fn exact_certificate(prob: &NcProblem, c: &Constraints, r: &StartResult, lam: usize) -> Result<Option<NcCertificate>> {
    let cap = prob.denominator_cap;
    let mut xi = to_matrix(&r.xi, cap, true);
    if let Some(u) = c.unit {
        for l in 0..lam {
            xi.set(u, l, Rational::one());
        }
    }
    let mu = to_matrix(&r.mu, cap, false);
    let accept = |mu: &Matrix, xi: &Matrix| -> Result<Option<NcCertificate>> {
        let cert = certificate(c, lam, mu.clone(), xi.clone())?;
        Ok(verify_certificate(prob, &cert)?.then_some(cert))
    };
    if let Some(cert) = accept(&mu, &xi)? {
        return Ok(Some(cert));
    }
    let Some(mu) = polish_states(c, &xi, &r.mu, lam) else {
        return Ok(None);
    };
    if let Some(cert) = accept(&mu, &xi)? {
        return Ok(Some(cert));
    }
    let Some(xi) = polish_effects(c, &mu, &r.xi, lam) else {
        return Ok(None);
    };
    accept(&mu, &xi)
}

/// Exact `μ` supported where the float `μ` is, for fixed exact `ξ`.
fn polish_states(c: &Constraints, xi: &Matrix, float_mu: &Table, lam: usize) -> Option<Matrix> {
    let (ns, ne) = (c.states(), c.effects());
    let support: Vec<(usize, usize)> = (0..ns)
        .flat_map(|i| (0..lam).map(move |l| (i, l)))
        .filter(|&(i, l)| float_mu[i][l] > SUPPORT)
        .collect();
    let index = |i: usize, l: usize| support.iter().position(|&s| s == (i, l));
    let n = support.len();
    let mut a: Vec<Vec<Rational>> = Vec::new();
    let mut b: Vec<Rational> = Vec::new();
    for i in 0..ns {
        for j in 0..ne {
            let mut row = vec![Rational::zero(); n];
            for l in 0..lam {
                if let Some(k) = index(i, l) {
                    row[k] = xi.get(j, l).clone();
                }
            }
            a.push(row);
            b.push(c.table.get(i, j).clone());
        }
        let mut row = vec![Rational::zero(); n];
        for l in 0..lam {
            if let Some(k) = index(i, l) {
                row[k] = Rational::one();
            }
        }
        a.push(row);
        b.push(c.norms[i].clone());
    }
    for rel in &c.state_relations {
        for l in 0..lam {
            let mut row = vec![Rational::zero(); n];
            for (i, coeff) in rel.iter().enumerate() {
                if let Some(k) = index(i, l) {
                    row[k] = coeff.clone();
                }
            }
            a.push(row);
            b.push(Rational::zero());
        }
    }
    let x = solve_linear(&a, &b)?;
    if x.iter().any(Signed::is_negative) {
        return None;
    }
    let mut mu = Matrix::zeros(ns, lam);
    for (k, &(i, l)) in support.iter().enumerate() {
        mu.set(i, l, x[k].clone());
    }
    Some(mu)
}

/// Exact `ξ` for fixed exact `μ`: entries the float phase left at 0 or 1
/// stay there, the others are solved for.
fn polish_effects(c: &Constraints, mu: &Matrix, float_xi: &Table, lam: usize) -> Option<Matrix> {
    let (ns, ne) = (c.states(), c.effects());
    let mut fixed = Matrix::zeros(ne, lam);
    let mut free: Vec<(usize, usize)> = Vec::new();
    for j in 0..ne {
        for l in 0..lam {
            let v = float_xi[j][l];
            if Some(j) == c.unit || v >= 1.0 - SUPPORT {
                fixed.set(j, l, Rational::one());
            } else if v > SUPPORT {
                free.push((j, l));
            }
        }
    }
    let index = |j: usize, l: usize| free.iter().position(|&s| s == (j, l));
    let n = free.len();
    let mut a: Vec<Vec<Rational>> = Vec::new();
    let mut b: Vec<Rational> = Vec::new();
    for i in 0..ns {
        for j in 0..ne {
            let mut row = vec![Rational::zero(); n];
            let mut rhs = c.table.get(i, j).clone();
            for l in 0..lam {
                match index(j, l) {
                    Some(k) => row[k] = mu.get(i, l).clone(),
                    None => rhs -= mu.get(i, l) * fixed.get(j, l),
                }
            }
            a.push(row);
            b.push(rhs);
        }
    }
    for (rel, k0) in &c.effect_relations {
        for l in 0..lam {
            let mut row = vec![Rational::zero(); n];
            let mut rhs = -k0.clone();
            for (j, coeff) in rel.iter().enumerate() {
                match index(j, l) {
                    Some(k) => row[k] = coeff.clone(),
                    None => rhs -= coeff * fixed.get(j, l),
                }
            }
            a.push(row);
            b.push(rhs);
        }
    }
    let x = if n == 0 { Vec::new() } else { solve_linear(&a, &b)? };
    let mut xi = fixed;
    for (k, &(j, l)) in free.iter().enumerate() {
        if x[k].is_negative() || x[k] > Rational::one() {
            return None;
        }
        xi.set(j, l, x[k].clone());
    }
    Some(xi)
}
