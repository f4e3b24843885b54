use std::cmp::Ordering;

use crate::error::Result;

use super::subdemand::SubdemandMatrix;

/// Exact weighted max-min fair rates for single-path subdemands.
///
/// Repeatedly takes the live link with the smallest fair share
/// `ζ_e = c_e / Σ Γ[e,k] r_ek` over active columns, fixes every active column
/// on it at `ζ_e Γ[e,k]`, charges their other links and drops the link.
/// Ties go to the lower row index. Zero-weight columns get rate 0.
pub fn single_path_waterfill(gamma: &SubdemandMatrix, capacities: &[f64]) -> Result<Vec<f64>> {
    gamma.check(capacities)?;
    let by_row = gamma.row_columns();
    let mut remaining = capacities.to_vec();
    let mut rates = vec![0.0; gamma.columns.len()];
    let mut active: Vec<bool> = gamma.columns.iter().map(|c| c.weight > 0.0).collect();
    let mut alive = vec![true; gamma.rows.len()];
    let mut left = active.iter().filter(|&&a| a).count();
    while left > 0 {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..gamma.rows.len()).filter(|&e| alive[e]) {
            let load: f64 = by_row[e]
                .iter()
                .filter(|&&(k, _)| active[k])
                .map(|&(k, r)| gamma.columns[k].weight * r)
                .sum();
            if load <= 0.0 {
                continue;
            }
            let share = remaining[e].max(0.0) / load;
            if best.is_none_or(|(_, s)| share < s) {
                best = Some((e, share));
            }
        }
        let Some((e, share)) = best else { break };
        for &(k, _) in &by_row[e] {
            if !active[k] {
                continue;
            }
            let rate = share * gamma.columns[k].weight;
            rates[k] = rate;
            for &(l, r) in &gamma.columns[k].rows {
                remaining[l] -= r * rate;
            }
            active[k] = false;
            left -= 1;
        }
        alive[e] = false;
    }
    Ok(rates)
}

/// Single-pass approximate waterfilling.
///
/// Links are ordered once by their initial fair share (ties by resource id).
/// At each link, subdemands already limited below the link's share are
/// charged and removed until the share settles; the remaining ones are set to
/// it, which can only lower rates fixed at earlier links.
pub fn approx_waterfill(gamma: &SubdemandMatrix, capacities: &[f64]) -> Result<Vec<f64>> {
    gamma.check(capacities)?;
    let by_row = gamma.row_columns();
    let load = |e: usize| -> f64 {
        by_row[e]
            .iter()
            .map(|&(k, r)| gamma.columns[k].weight * r)
            .sum()
    };
    let mut order: Vec<(usize, f64)> = (0..gamma.rows.len())
        .filter_map(|e| {
            let n = load(e);
            (n > 0.0).then(|| (e, capacities[e] / n))
        })
        .collect();
    order.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| gamma.rows[a.0].cmp(&gamma.rows[b.0]))
    });

    let mut rates: Vec<f64> = gamma
        .columns
        .iter()
        .map(|c| if c.weight > 0.0 { f64::INFINITY } else { 0.0 })
        .collect();
    for (e, _) in order {
        let mut cap = capacities[e];
        let mut members: Vec<(usize, f64)> = by_row[e]
            .iter()
            .copied()
            .filter(|&(k, _)| gamma.columns[k].weight > 0.0)
            .collect();
        while !members.is_empty() {
            let n: f64 = members.iter().map(|&(k, r)| gamma.columns[k].weight * r).sum();
            let share = cap.max(0.0) / n;
            let (under, over): (Vec<_>, Vec<_>) = members
                .iter()
                .partition(|&&(k, _)| rates[k] < share * gamma.columns[k].weight);
            if under.is_empty() {
                for (k, _) in over {
                    rates[k] = share * gamma.columns[k].weight;
                }
                break;
            }
            cap -= under.iter().map(|&(k, r)| r * rates[k]).sum::<f64>();
            members = over;
        }
    }
    Ok(rates)
}
