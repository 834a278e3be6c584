use crate::error::{Error, Result};

/// Exponential fit `Leb(tau > n) ~ const kappa^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFit {
    pub kappa: f64,
    pub constant: f64,
    pub r2: f64,
    /// Number of points used.
    pub points: usize,
}

/// Least-squares fit of `ln Leb(tau > n)` against `n` over the entries above
/// `floor`. Needs at least five distinct `n` with positive mass.
pub fn fit_tail(table: &[(usize, f64)], floor: f64) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|(_, m)| *m > floor && *m > 0.0)
        .map(|&(n, m)| (n as f64, m.ln()))
        .collect();
    let mut ns: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ns.dedup();
    if ns.len() < 5 {
        return Err(Error::InsufficientTail(format!(
            "{} tail points above {floor:e}; at least 5 are needed",
            ns.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(TailFit { kappa: slope.exp(), constant: intercept.exp(), r2, points: pts.len() })
}

/// Tail table `n -> Leb(tau > n)` for `n = 0..=max tau` from `(tau, measure)`
/// entries plus mass whose return time is unknown (counted in every entry).
pub fn tail_table(entries: impl IntoIterator<Item = (usize, f64)>, unresolved: f64) -> Vec<(usize, f64)> {
    let mut by_tau: Vec<f64> = Vec::new();
    for (t, m) in entries {
        if by_tau.len() <= t {
            by_tau.resize(t + 1, 0.0);
        }
        by_tau[t] += m;
    }
    let mut out = Vec::with_capacity(by_tau.len());
    let mut above = unresolved + by_tau.iter().sum::<f64>();
    for (n, m) in by_tau.iter().enumerate() {
        above -= m;
        out.push((n, above.max(0.0)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_geometric_tail() {
        let table: Vec<(usize, f64)> = (0..30).map(|n| (n, 0.5f64.powi(n as i32))).collect();
        let f = fit_tail(&table, 1e-9).unwrap();
        assert!((f.kappa - 0.5).abs() < 1e-6);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.constant - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_tau_has_no_tail() {
        let table = tail_table([(3, 1.0)], 0.0);
        assert_eq!(table, vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 0.0)]);
        assert!(matches!(fit_tail(&table, 1e-9), Err(Error::InsufficientTail(_))));
    }
}
