//! Greedy nearest-neighbor route construction.

use crate::error::Result;
use crate::inner::optimize_leg;
use crate::permutation::Permutation;
use crate::problem::{evaluate_full, Evaluation, Instance, TimeVector};

use super::Solution;

/// Visits, at each step, the unvisited asteroid closest to the spacecraft at
/// the current epoch, solving each leg with the inner solver. Ties go to the
/// lowest asteroid index.
pub fn greedy_nn(instance: &Instance) -> Result<(Solution, Evaluation)> {
    let mu = instance.mu;
    let mut current = instance.earth;
    let mut epoch = instance.tau0;
    let mut unvisited: Vec<usize> = (0..instance.n).collect();
    let mut order = Vec::with_capacity(instance.n);
    let mut times = Vec::with_capacity(2 * instance.n);

    for leg in 0..instance.n {
        let here = current.position_at(mu, epoch);
        let (slot, _) = unvisited
            .iter()
            .enumerate()
            .map(|(slot, &k)| (slot, (instance.asteroid(k).position_at(mu, epoch) - here).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
        let next = unvisited.remove(slot);
        let target = *instance.asteroid(next);
        let res = optimize_leg(&current, &target, epoch, mu).map_err(|e| e.at_leg(leg))?;
        epoch += res.t_park;
        epoch += res.t_transit;
        times.extend([res.t_park, res.t_transit]);
        order.push(next);
        current = target;
    }

    let order = Permutation::new(order)?;
    let times = TimeVector::new(times)?;
    let evaluation = evaluate_full(instance, &order, &times)?;
    Ok((
        Solution {
            order,
            times,
            evaluation: evaluation.clone(),
        },
        evaluation,
    ))
}
