//! Dense two-phase primal simplex.
//!
//! Variables are mapped onto nonnegative standard-form columns (shifted,
//! flipped, split, or eliminated when fixed), finite upper bounds become
//! explicit rows, and every row gets a slack or an artificial so the starting
//! basis is the identity. Entering columns follow Dantzig's rule until
//! `10 · num_vars` consecutive degenerate pivots have been made, after which
//! Bland's rule takes over for the rest of the phase.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, LpStatus, Relation};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 1_000_000 }
    }
}

enum VarMap<T> {
    Fixed(T),
    /// x = offset + s
    Shift { col: usize, offset: T },
    /// x = offset - s
    Flip { col: usize, offset: T },
    /// x = s⁺ - s⁻
    Split { pos: usize, neg: usize },
}

struct StdRow<T> {
    coeffs: Vec<T>,
    relation: Relation,
    rhs: T,
    origin: Option<usize>,
}

struct Tableau<T> {
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// Reduced costs; entry `width` holds `-z`.
    d: Vec<T>,
    banned: Vec<bool>,
    width: usize,
    iterations: usize,
    max_iterations: usize,
    degenerate_cap: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl<T: Scalar> Tableau<T> {
    fn price(&mut self, cost: &[T]) {
        let w = self.width;
        let mut d: Vec<T> = cost.to_vec();
        d.push(T::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..=w {
                d[j] = d[j].clone() - cb.clone() * self.t[i][j].clone();
            }
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.t[r][q].clone();
        for v in self.t[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        self.t[r][q] = T::one();
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..=w {
                if !pivot_row[j].is_zero() {
                    row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
            row[q] = T::zero();
        }
        let f = self.d[q].clone();
        if !f.is_zero() {
            for j in 0..=w {
                if !pivot_row[j].is_zero() {
                    self.d[j] = self.d[j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
            self.d[q] = T::zero();
        }
        self.basis[r] = q;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let tol = T::pivot_tolerance();
        let thresh = -tol;
        let mut best: Option<usize> = None;
        for j in 0..self.width {
            if self.banned[j] || self.d[j] >= thresh {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some(b) if self.d[j] >= self.d[b] => {}
                _ => best = Some(j),
            }
        }
        best
    }

    fn leaving(&self, q: usize, bland: bool) -> Option<usize> {
        let w = self.width;
        let tol = T::pivot_tolerance();
        let mut best: Option<(usize, T)> = None;
        for (i, row) in self.t.iter().enumerate() {
            let a = &row[q];
            if *a <= tol {
                continue;
            }
            let rhs = T::max_of(row[w].clone(), T::zero());
            let ratio = rhs / a.clone();
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let window = tol.clone() * T::max_of(T::one(), br.abs());
                    if ratio < br.clone() - window.clone() {
                        Some((i, ratio))
                    } else if (ratio.clone() - br.clone()).abs() <= window {
                        let take = if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            row[q] > self.t[bi][q]
                        };
                        if take {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self) -> Result<PhaseEnd> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            let Some(q) = self.entering(bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(r) = self.leaving(q, bland) else {
                return Ok(PhaseEnd::Unbounded(q));
            };
            let step = self.t[r][self.width].clone() / self.t[r][q].clone();
            if step <= T::pivot_tolerance() {
                degenerate += 1;
                if degenerate > self.degenerate_cap {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
            self.iterations += 1;
            if self.iterations >= self.max_iterations {
                return Err(Error::NonConvergence { iterations: self.iterations });
            }
        }
    }

    fn objective(&self) -> T {
        -self.d[self.width].clone()
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with<T: Scalar>(lp: &LinearProgram<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
    lp.validate()?;
    let n = lp.num_vars;

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bounds: Vec<(usize, T)> = Vec::new();
    for j in 0..n {
        let m = match (&lp.var_lower[j], &lp.var_upper[j]) {
            (Some(l), Some(u)) if l == u => VarMap::Fixed(l.clone()),
            (Some(l), Some(u)) => {
                bounds.push((ncols, u.clone() - l.clone()));
                ncols += 1;
                VarMap::Shift { col: ncols - 1, offset: l.clone() }
            }
            (Some(l), None) => {
                ncols += 1;
                VarMap::Shift { col: ncols - 1, offset: l.clone() }
            }
            (None, Some(u)) => {
                ncols += 1;
                VarMap::Flip { col: ncols - 1, offset: u.clone() }
            }
            (None, None) => {
                ncols += 2;
                VarMap::Split { pos: ncols - 2, neg: ncols - 1 }
            }
        };
        maps.push(m);
    }

    // Standard-form objective.
    let mut cost = vec![T::zero(); ncols];
    let mut obj_const = T::zero();
    for (j, m) in maps.iter().enumerate() {
        let c = &lp.objective[j];
        match m {
            VarMap::Fixed(v) => obj_const = obj_const.clone() + c.clone() * v.clone(),
            VarMap::Shift { col, offset } => {
                cost[*col] = c.clone();
                obj_const = obj_const.clone() + c.clone() * offset.clone();
            }
            VarMap::Flip { col, offset } => {
                cost[*col] = -c.clone();
                obj_const = obj_const.clone() + c.clone() * offset.clone();
            }
            VarMap::Split { pos, neg } => {
                cost[*pos] = c.clone();
                cost[*neg] = -c.clone();
            }
        }
    }

    let mut rows: Vec<StdRow<T>> = Vec::with_capacity(lp.rows.len() + bounds.len());
    for (i, row) in lp.rows.iter().enumerate() {
        let mut coeffs = vec![T::zero(); ncols];
        let mut rhs = row.rhs.clone();
        for (j, m) in maps.iter().enumerate() {
            let a = &row.coeffs[j];
            if a.is_zero() {
                continue;
            }
            match m {
                VarMap::Fixed(v) => rhs = rhs - a.clone() * v.clone(),
                VarMap::Shift { col, offset } => {
                    coeffs[*col] = a.clone();
                    rhs = rhs - a.clone() * offset.clone();
                }
                VarMap::Flip { col, offset } => {
                    coeffs[*col] = -a.clone();
                    rhs = rhs - a.clone() * offset.clone();
                }
                VarMap::Split { pos, neg } => {
                    coeffs[*pos] = a.clone();
                    coeffs[*neg] = -a.clone();
                }
            }
        }
        rows.push(StdRow { coeffs, relation: row.relation, rhs, origin: Some(i) });
    }
    for (col, width) in &bounds {
        let mut coeffs = vec![T::zero(); ncols];
        coeffs[*col] = T::one();
        rows.push(StdRow { coeffs, relation: Relation::Le, rhs: width.clone(), origin: None });
    }

    let m = rows.len();
    let negated: Vec<bool> = rows.iter().map(|r| r.rhs < T::zero()).collect();
    let nslack = rows.iter().filter(|r| r.relation == Relation::Le).count();
    let needs_art: Vec<bool> = rows.iter().zip(&negated).map(|(r, &neg)| r.relation == Relation::Eq || neg).collect();
    let nart = needs_art.iter().filter(|&&b| b).count();
    let width = ncols + nslack + nart;

    let mut t = Vec::with_capacity(m);
    let mut init_col = Vec::with_capacity(m);
    let mut next_slack = ncols;
    let mut next_art = ncols + nslack;
    for (i, row) in rows.iter().enumerate() {
        let sign = if negated[i] { -T::one() } else { T::one() };
        let mut tr = vec![T::zero(); width + 1];
        for (j, a) in row.coeffs.iter().enumerate() {
            if !a.is_zero() {
                tr[j] = sign.clone() * a.clone();
            }
        }
        tr[width] = sign.clone() * row.rhs.clone();
        let mut basic = None;
        if row.relation == Relation::Le {
            tr[next_slack] = sign.clone();
            if !negated[i] {
                basic = Some(next_slack);
            }
            next_slack += 1;
        }
        if needs_art[i] {
            tr[next_art] = T::one();
            basic = Some(next_art);
            next_art += 1;
        }
        init_col.push(basic.expect("every row has an initial basic column"));
        t.push(tr);
    }

    let mut tab = Tableau {
        t,
        basis: init_col.clone(),
        d: Vec::new(),
        banned: vec![false; width],
        width,
        iterations: 0,
        max_iterations: opts.max_iterations,
        degenerate_cap: 10 * n.max(1),
    };
    let is_art = |j: usize| j >= ncols + nslack;

    if nart > 0 {
        let phase1: Vec<T> = (0..width).map(|j| if is_art(j) { T::one() } else { T::zero() }).collect();
        tab.price(&phase1);
        // Phase one is bounded below, so an unbounded ray can only come from
        // a reduced cost made up of entries each below the pivot tolerance.
        // Such columns are skipped for the rest of the phase.
        while let PhaseEnd::Unbounded(q) = tab.run()? {
            tab.banned[q] = true;
        }
        let bmax = rows.iter().map(|r| r.rhs.abs()).fold(T::zero(), T::max_of);
        let infeas_tol = T::feasibility_tolerance() * (T::one() + bmax);
        if tab.objective() > infeas_tol {
            let mut farkas = vec![T::zero(); lp.rows.len()];
            for (i, row) in rows.iter().enumerate() {
                if let Some(o) = row.origin {
                    let c1 = if is_art(init_col[i]) { T::one() } else { T::zero() };
                    let y = c1 - tab.d[init_col[i]].clone();
                    farkas[o] = if negated[i] { -y } else { y };
                }
            }
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: T::zero(),
                iterations: tab.iterations,
                duals: Vec::new(),
                duality_gap: T::zero(),
                complementarity: T::zero(),
                certificate: Some(farkas),
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if !is_art(tab.basis[r]) {
                continue;
            }
            let best = (0..ncols + nslack)
                .filter(|&j| tab.t[r][j].abs() > T::pivot_tolerance())
                .fold(None::<usize>, |acc, j| match acc {
                    Some(b) if tab.t[r][b].abs() >= tab.t[r][j].abs() => Some(b),
                    _ => Some(j),
                });
            if let Some(q) = best {
                tab.pivot(r, q);
            }
        }
        for j in 0..width {
            tab.banned[j] = is_art(j);
        }
    }

    let mut phase2 = cost.clone();
    phase2.resize(width, T::zero());
    tab.price(&phase2);
    let end = tab.run()?;

    let mut s = vec![T::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        s[b] = tab.t[i][width].clone();
    }
    let recover = |s: &[T], with_offset: bool| -> Vec<T> {
        maps.iter()
            .map(|m| match m {
                VarMap::Fixed(v) => {
                    if with_offset {
                        v.clone()
                    } else {
                        T::zero()
                    }
                }
                VarMap::Shift { col, offset } => {
                    if with_offset {
                        offset.clone() + s[*col].clone()
                    } else {
                        s[*col].clone()
                    }
                }
                VarMap::Flip { col, offset } => {
                    if with_offset {
                        offset.clone() - s[*col].clone()
                    } else {
                        -s[*col].clone()
                    }
                }
                VarMap::Split { pos, neg } => s[*pos].clone() - s[*neg].clone(),
            })
            .collect()
    };

    if let PhaseEnd::Unbounded(q) = end {
        let mut dir = vec![T::zero(); width];
        dir[q] = T::one();
        for (i, &b) in tab.basis.iter().enumerate() {
            dir[b] = -tab.t[i][q].clone();
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: recover(&s, true),
            objective_value: T::zero(),
            iterations: tab.iterations,
            duals: Vec::new(),
            duality_gap: T::zero(),
            complementarity: T::zero(),
            certificate: Some(recover(&dir, false)),
        });
    }

    let x = recover(&s, true);
    let objective_value = crate::numlin::dot(&lp.objective, &x);

    // y_i = c_init - d_init with c_init = 0 in phase two.
    let mut duals = vec![T::zero(); lp.rows.len()];
    let mut dual_obj = obj_const.clone();
    for (i, row) in rows.iter().enumerate() {
        let y = -tab.d[init_col[i]].clone();
        let y = if negated[i] { -y } else { y };
        dual_obj = dual_obj + row.rhs.clone() * y.clone();
        if let Some(o) = row.origin {
            duals[o] = y;
        }
    }
    let primal_obj = crate::numlin::dot(&cost, &s[..ncols]) + obj_const;
    let duality_gap = (primal_obj - dual_obj).abs();
    let complementarity = lp
        .rows
        .iter()
        .zip(&duals)
        .map(|(row, y)| {
            let slack = row.rhs.clone() - crate::numlin::dot(&row.coeffs, &x);
            (y.clone() * slack).abs()
        })
        .fold(T::zero(), T::max_of);

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
        iterations: tab.iterations,
        duals,
        duality_gap,
        complementarity,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LinearProgram;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    #[test]
    fn min_x_above_one() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var("x", None, None);
        lp.set_objective(x, 1.0);
        lp.add_sparse_row(&[(x, -1.0)], Relation::Le, -1.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_gamma_two_lower_bounds() {
        let mut lp = LinearProgram::<f64>::new();
        let g = lp.add_var("gamma", None, None);
        lp.set_objective(g, 1.0);
        lp.add_sparse_row(&[(g, -1.0)], Relation::Le, -2.0).unwrap();
        lp.add_sparse_row(&[(g, -1.0)], Relation::Le, -5.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 5.0).abs() < 1e-12);
        assert!(sol.duality_gap < 1e-12);
        // only the binding row carries a multiplier
        assert!(sol.duals[0].abs() < 1e-12);
        assert!((sol.duals[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_and_fixed_variables() {
        // max x + y  s.t. x + 2y <= 4, 0 <= x <= 3, y free, z fixed at 2, z - y <= 1
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var("x", Some(0.0), Some(3.0));
        let y = lp.add_var("y", None, None);
        let z = lp.add_var("z", Some(2.0), Some(2.0));
        lp.set_objective(x, -1.0);
        lp.set_objective(y, -1.0);
        lp.add_sparse_row(&[(x, 1.0), (y, 2.0)], Relation::Le, 4.0).unwrap();
        lp.add_sparse_row(&[(z, 1.0), (y, -1.0)], Relation::Le, 1.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
        assert_eq!(sol.x[2], 2.0);
        assert!(lp.max_violation(&sol.x) <= 1e-12);
    }

    #[test]
    fn infeasible_with_certificate() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var("x", Some(0.0), None);
        lp.add_sparse_row(&[(x, 1.0)], Relation::Le, -1.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let y = sol.certificate.unwrap();
        // y ≤ 0 on a ≤ row with y·b > 0 proves infeasibility for x ≥ 0
        assert!(y[0] < 0.0);
    }

    #[test]
    fn unbounded_with_ray() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var("x", None, None);
        let y = lp.add_var("y", Some(0.0), None);
        lp.set_objective(x, 1.0);
        lp.add_sparse_row(&[(x, 1.0), (y, -1.0)], Relation::Le, 0.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let ray = sol.certificate.unwrap();
        assert!(crate::numlin::dot(&lp.objective, &ray) < 0.0);
        assert!(ray[0] - ray[1] <= 1e-12);
    }

    #[test]
    fn equality_rows_and_redundancy() {
        let mut lp = LinearProgram::<f64>::new();
        let a = lp.add_var("a", Some(0.0), None);
        let b = lp.add_var("b", Some(0.0), None);
        lp.set_objective(a, 1.0);
        lp.set_objective(b, 2.0);
        lp.add_sparse_row(&[(a, 1.0), (b, 1.0)], Relation::Eq, 1.0).unwrap();
        lp.add_sparse_row(&[(a, 2.0), (b, 2.0)], Relation::Eq, 2.0).unwrap();
        lp.add_sparse_row(&[(a, 1.0)], Relation::Le, 0.25).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective_value - 1.75).abs() < 1e-12);
    }

    #[test]
    fn exact_rational_solve() {
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var("x", Some(Rational::from_int(0)), None);
        let y = lp.add_var("y", Some(Rational::from_int(0)), None);
        lp.set_objective(x, Rational::from_int(-1));
        lp.set_objective(y, Rational::from_int(-1));
        lp.add_sparse_row(&[(x, Rational::from_int(3)), (y, Rational::from_int(1))], Relation::Le, Rational::from_int(1))
            .unwrap();
        lp.add_sparse_row(&[(x, Rational::from_int(1)), (y, Rational::from_int(3))], Relation::Le, Rational::from_int(1))
            .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.objective_value, Rational::ratio(-1, 2));
        assert_eq!(sol.x, vec![Rational::ratio(1, 4), Rational::ratio(1, 4)]);
        assert!(sol.duality_gap == Rational::from_int(0));
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var("x", Some(0.0), None);
        let y = lp.add_var("y", Some(0.0), None);
        lp.set_objective(x, -1.0);
        lp.set_objective(y, -1.0);
        lp.add_sparse_row(&[(x, 1.0)], Relation::Le, 1.0).unwrap();
        lp.add_sparse_row(&[(y, 1.0)], Relation::Le, 1.0).unwrap();
        let err = solve_lp_with(&lp, &SolverOptions { max_iterations: 1 }).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance for the textbook Dantzig rule.
        let mut lp = LinearProgram::<f64>::new();
        let v: Vec<usize> = (0..4).map(|i| lp.add_var(format!("x{i}"), Some(0.0), None)).collect();
        for (j, c) in [-0.75, 150.0, -0.02, 6.0].into_iter().enumerate() {
            lp.set_objective(v[j], c);
        }
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0).unwrap();
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0).unwrap();
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value + 0.05).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn random_feasible_lps_satisfy_kkt(seed in any::<u64>(), n in 1usize..8, m in 1usize..10) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Box-bounded so the optimum exists; rows are satisfied at a known interior point.
            let mut lp = LinearProgram::<f64>::new();
            for j in 0..n {
                lp.add_var(format!("x{j}"), Some(-5.0), Some(5.0));
                lp.set_objective(j, rng.gen_range(-1.0..1.0));
            }
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for _ in 0..m {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let rhs = crate::numlin::dot(&a, &x0) + rng.gen_range(0.0..1.0);
                lp.add_row(a, Relation::Le, rhs).unwrap();
            }
            let sol = solve_lp(&lp).unwrap();
            prop_assert!(sol.is_optimal());
            prop_assert!(lp.max_violation(&sol.x) <= 1e-8);
            prop_assert!(sol.duality_gap <= 1e-8);
            prop_assert!(sol.complementarity <= 1e-6);
            prop_assert!(sol.duals.iter().all(|y| *y <= 1e-9));
        }
    }
}
