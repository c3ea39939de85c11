//! Noncontextual models of prepare-measure fragments.
//!
//! A model with `Λ` ontic states is a pair of tables: `μ` (states × `Λ`,
//! nonnegative, row `i` summing to `u·s_i`) and `ξ` (effects × `Λ`, entries
//! in `[0,1]`, the unit effect all ones) with `μ ξᵀ = P`. Both tables must
//! respect every linear relation the probability table imposes on states
//! and on effects; without that, any table factors trivially.

mod lift;
mod lp;
mod search;

pub use lift::lift_to_theory_model;
pub use search::search_nc_model;

use num_traits::{Signed, Zero};

use crate::backend::GptFragment;
use crate::error::{OptError, Result};
use crate::matrix::{null_space, Matrix};
use crate::quotient::fragment_dimension;
use crate::rational::{in_unit_interval, one, to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcMode {
    Verify,
    Search,
}

#[derive(Clone, Debug)]
pub struct NcProblem {
    pub fragment: GptFragment,
    pub max_ontic: usize,
    /// Acceptance threshold of the float phase.
    pub tolerance: f64,
    pub mode: NcMode,
    pub starts: usize,
    pub denominator_cap: u64,
    /// Alternating iterations allowed per start.
    pub max_iterations: usize,
    /// Alternating iterations allowed over the whole search.
    pub budget: usize,
}

impl NcProblem {
    pub fn new(fragment: GptFragment, max_ontic: usize) -> Result<Self> {
        let d = fragment_dimension(&fragment);
        if max_ontic < d.max(1) {
            return Err(OptError::ShapeMismatch(format!(
                "max ontic size {max_ontic} below the fragment dimension {d}"
            )));
        }
        Ok(Self {
            fragment,
            max_ontic,
            tolerance: 1e-9,
            mode: NcMode::Search,
            starts: 32,
            denominator_cap: 1_000_000,
            max_iterations: 60,
            budget: 1_000_000,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_mode(mut self, mode: NcMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts.max(1);
        self
    }

    pub fn with_denominator_cap(mut self, cap: u64) -> Self {
        self.denominator_cap = cap.max(1);
        self
    }

    pub fn with_budget(mut self, max_iterations: usize, budget: usize) -> Self {
        self.max_iterations = max_iterations.max(1);
        self.budget = budget;
        self
    }
}

/// Exact model tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcCertificate {
    pub ontic_size: usize,
    pub state_table: Matrix,
    pub effect_table: Matrix,
    pub residual: Rational,
}

/// Float model tables, as produced by the search before rationalization.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatCertificate {
    pub ontic_size: usize,
    pub state_table: Vec<Vec<f64>>,
    pub effect_table: Vec<Vec<f64>>,
    pub residual: f64,
}

/// Result of a search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(NcCertificate),
    /// No certificate up to `bound` ontic states. Not a proof of
    /// nonexistence.
    Infeasible { bound: usize },
}

/// Linear data shared by the verifier and the search.
#[derive(Clone, Debug)]
pub(crate) struct Constraints {
    pub table: Matrix,
    pub norms: Vec<Rational>,
    pub unit: Option<usize>,
    /// Vectors `a` with `aᵀ P = 0`: require `aᵀ μ = 0`.
    pub state_relations: Vec<Vec<Rational>>,
    /// Pairs `(b, c)` with `P b + c (u·s) = 0`: require `bᵀ ξ + c = 0`.
    pub effect_relations: Vec<(Vec<Rational>, Rational)>,
}

impl Constraints {
    pub fn of(frag: &GptFragment) -> Self {
        let table = frag.probability_table();
        let norms = frag.norms();
        let unit = frag.unit_index();
        let (ns, ne) = table.shape();
        let mut columns: Vec<Vec<Rational>> = (0..ne).map(|j| (0..ns).map(|i| table.get(i, j).clone()).collect()).collect();
        if unit.is_none() {
            columns.push(norms.clone());
        }
        let state_relations = null_space(&columns, ns);
        let rows: Vec<Vec<Rational>> = (0..ns).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
        let effect_relations = null_space(&rows, columns.len())
            .into_iter()
            .map(|mut b| {
                let c = if unit.is_none() { b.pop().expect("extended column") } else { Rational::zero() };
                (b, c)
            })
            .collect();
        Self {
            table,
            norms,
            unit,
            state_relations,
            effect_relations,
        }
    }

    pub fn states(&self) -> usize {
        self.table.rows()
    }

    pub fn effects(&self) -> usize {
        self.table.cols()
    }
}

fn check_shapes(c: &Constraints, ontic: usize, mu: (usize, usize), xi: (usize, usize)) -> Result<()> {
    if mu != (c.states(), ontic) || xi != (c.effects(), ontic) {
        return Err(OptError::ShapeMismatch(format!(
            "tables {mu:?} and {xi:?} for {} states, {} effects and {ontic} ontic states",
            c.states(),
            c.effects()
        )));
    }
    Ok(())
}

/// `max |μ ξᵀ - P|`.
pub fn certificate_residual(prob: &NcProblem, cert: &NcCertificate) -> Result<Rational> {
    let c = Constraints::of(&prob.fragment);
    check_shapes(&c, cert.ontic_size, cert.state_table.shape(), cert.effect_table.shape())?;
    let product = cert.state_table.mul(&cert.effect_table.transpose())?;
    let diff = product.sub(&c.table)?;
    Ok(diff.entries().iter().map(Signed::abs).max().unwrap_or_else(Rational::zero))
}

/// Exact check of every certificate invariant.
pub fn verify_certificate(prob: &NcProblem, cert: &NcCertificate) -> Result<bool> {
    let c = Constraints::of(&prob.fragment);
    check_shapes(&c, cert.ontic_size, cert.state_table.shape(), cert.effect_table.shape())?;
    let (mu, xi) = (&cert.state_table, &cert.effect_table);
    let lam = cert.ontic_size;
    if !mu.is_nonnegative() || !xi.entries().iter().all(in_unit_interval) {
        return Ok(false);
    }
    if (0..c.states()).any(|i| mu.row_vec(i).iter().sum::<Rational>() != c.norms[i]) {
        return Ok(false);
    }
    if let Some(u) = c.unit {
        if xi.row_vec(u).iter().any(|v| *v != one()) {
            return Ok(false);
        }
    }
    if mu.mul(&xi.transpose())? != c.table {
        return Ok(false);
    }
    for a in &c.state_relations {
        if (0..lam).any(|l| !(0..c.states()).map(|i| &a[i] * mu.get(i, l)).sum::<Rational>().is_zero()) {
            return Ok(false);
        }
    }
    for (b, k) in &c.effect_relations {
        if (0..lam).any(|l| !((0..c.effects()).map(|j| &b[j] * xi.get(j, l)).sum::<Rational>() + k).is_zero()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Float check of the same invariants within `prob.tolerance`.
pub fn verify_float_certificate(prob: &NcProblem, cert: &FloatCertificate) -> Result<bool> {
    let c = Constraints::of(&prob.fragment);
    let shape = |t: &Vec<Vec<f64>>| (t.len(), t.first().map_or(cert.ontic_size, Vec::len));
    check_shapes(&c, cert.ontic_size, shape(&cert.state_table), shape(&cert.effect_table))?;
    if cert.state_table.iter().chain(&cert.effect_table).any(|r| r.len() != cert.ontic_size) {
        return Err(OptError::ShapeMismatch("ragged table".into()));
    }
    let tol = prob.tolerance;
    let (mu, xi) = (&cert.state_table, &cert.effect_table);
    let lam = cert.ontic_size;
    let close = |x: f64, y: f64| (x - y).abs() <= tol;
    if mu.iter().flatten().any(|&v| v < -tol) || xi.iter().flatten().any(|&v| v < -tol || v > 1.0 + tol) {
        return Ok(false);
    }
    for i in 0..c.states() {
        if !close(mu[i].iter().sum(), to_f64(&c.norms[i])) {
            return Ok(false);
        }
        for j in 0..c.effects() {
            let p: f64 = (0..lam).map(|l| mu[i][l] * xi[j][l]).sum();
            if !close(p, to_f64(c.table.get(i, j))) {
                return Ok(false);
            }
        }
    }
    if let Some(u) = c.unit {
        if xi[u].iter().any(|&v| !close(v, 1.0)) {
            return Ok(false);
        }
    }
    for a in &c.state_relations {
        if (0..lam).any(|l| !close((0..c.states()).map(|i| to_f64(&a[i]) * mu[i][l]).sum(), 0.0)) {
            return Ok(false);
        }
    }
    for (b, k) in &c.effect_relations {
        if (0..lam).any(|l| !close((0..c.effects()).map(|j| to_f64(&b[j]) * xi[j][l]).sum::<f64>() + to_f64(k), 0.0)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The same model with `extra` more ontic states, each of weight zero under
/// every state and responding like ontic state 0.
pub fn pad(cert: &NcCertificate, extra: usize) -> NcCertificate {
    let widen = |m: &Matrix, fill: &dyn Fn(usize) -> Rational| -> Matrix {
        let rows = (0..m.rows())
            .map(|r| {
                let mut row = m.row_vec(r);
                row.extend((0..extra).map(|_| fill(r)));
                row
            })
            .collect();
        Matrix::from_rows(rows).expect("rectangular")
    };
    NcCertificate {
        ontic_size: cert.ontic_size + extra,
        state_table: widen(&cert.state_table, &|_| Rational::zero()),
        effect_table: widen(&cert.effect_table, &|r| {
            if cert.ontic_size == 0 {
                Rational::zero()
            } else {
                cert.effect_table.get(r, 0).clone()
            }
        }),
        residual: cert.residual.clone(),
    }
}
