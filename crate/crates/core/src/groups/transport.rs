//! Exact optimal transport between finitely supported measures.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{HoroError, Result};

/// Minimal cost of moving `source` onto `target` under `cost(i, j)`.
///
/// Solved as a transportation linear program. One target marginal is left
/// implicit: it is implied by the others, and dropping it keeps the program
/// feasible when the two total masses differ by rounding.
pub fn optimal_transport(source: &[f64], target: &[f64], cost: impl Fn(usize, usize) -> f64) -> Result<f64> {
    if source.is_empty() || target.is_empty() {
        return Err(HoroError::InvalidMeasure("transport between empty measures".into()));
    }
    if source.len() == 1 {
        return Ok(target.iter().enumerate().map(|(j, w)| w * cost(0, j)).sum());
    }
    if target.len() == 1 {
        return Ok(source.iter().enumerate().map(|(i, w)| w * cost(i, 0)).sum());
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..source.len())
        .map(|i| (0..target.len()).map(|j| problem.add_var(cost(i, j), (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, &mass) in source.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(row.as_slice(), ComparisonOp::Eq, mass);
    }
    for (j, &mass) in target.iter().enumerate().skip(1) {
        let column: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(column.as_slice(), ComparisonOp::Eq, mass);
    }
    let solution = problem
        .solve()
        .map_err(|e| HoroError::InvalidMeasure(format!("transport program failed: {e}")))?;
    Ok(solution.objective().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_atom_example() {
        // Half the mass moves from b to a at unit cost.
        let value = optimal_transport(&[0.5, 0.5], &[1.0], |i, _| if i == 0 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(value, 0.5);
    }

    #[test]
    fn matches_brute_force_on_permutations() {
        // Uniform marginals: the optimum is attained at a permutation matrix.
        let n = 5;
        let cost = |i: usize, j: usize| ((i * 7 + j * 3) % 11) as f64 / 10.0 + (i as f64 - j as f64).abs() * 0.05;
        let uniform = vec![1.0 / n as f64; n];
        let lp = optimal_transport(&uniform, &uniform, cost).unwrap();
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |p| {
            let total: f64 = p.iter().enumerate().map(|(i, &j)| cost(i, j)).sum::<f64>() / n as f64;
            best = best.min(total);
        });
        assert!((lp - best).abs() < 1e-12, "{lp} vs {best}");
    }

    fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            visit(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, visit);
            p.swap(k, i);
        }
    }
}
