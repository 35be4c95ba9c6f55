//! Add-compare-select over a fixed topology with delayed decisions.

/// Incoming branch of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pred {
    pub from: usize,
    pub input: u8,
    /// Index into the per-step branch metric slice.
    pub branch: usize,
}

#[derive(Clone, Debug)]
pub struct Topology {
    num_branches: usize,
    /// Predecessors per state, sorted by source state so ties resolve to the
    /// lowest index.
    preds: Vec<Vec<Pred>>,
}

impl Topology {
    pub fn new(num_states: usize, num_branches: usize, mut preds: Vec<Vec<Pred>>) -> Self {
        assert_eq!(preds.len(), num_states);
        for p in &mut preds {
            p.sort_by_key(|p| p.from);
            assert!(p.len() <= u8::MAX as usize);
        }
        Self { num_branches, preds }
    }

    pub fn num_states(&self) -> usize {
        self.preds.len()
    }

    pub fn num_branches(&self) -> usize {
        self.num_branches
    }
}

/// Path metrics are renormalized this often.
const RENORM_PERIOD: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct ViterbiOutcome {
    pub bits: Vec<u8>,
    /// Path metric of the state the final traceback started from.
    pub best_metric: f64,
}

/// Runs `steps` trellis stages. `fill_metrics(k, out)` writes the branch
/// metrics of stage `k`. After each stage the bit `delay` stages back is
/// released from the globally best survivor; the tail is flushed from the
/// best state at the end.
pub fn decode<F>(topology: &Topology, initial: &[f64], steps: usize, delay: usize, mut fill_metrics: F) -> ViterbiOutcome
where
    F: FnMut(usize, &mut [f64]),
{
    let ns = topology.num_states();
    assert_eq!(initial.len(), ns);
    let mut metric = initial.to_vec();
    let mut next = vec![0.0; ns];
    let mut branch = vec![0.0; topology.num_branches];
    let mut decisions = vec![0u8; steps * ns];
    let mut bits = vec![0u8; steps];
    let mut offset = 0.0;

    let release = |decisions: &[u8], mut state: usize, from_step: usize, to_step: usize| -> u8 {
        for k in (to_step + 1..=from_step).rev() {
            state = topology.preds[state][decisions[k * ns + state] as usize].from;
        }
        topology.preds[state][decisions[to_step * ns + state] as usize].input
    };

    for k in 0..steps {
        fill_metrics(k, &mut branch);
        let row = &mut decisions[k * ns..(k + 1) * ns];
        for (n, preds) in topology.preds.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut slot = 0u8;
            for (s, p) in preds.iter().enumerate() {
                let cand = metric[p.from] + branch[p.branch];
                if cand < best {
                    best = cand;
                    slot = s as u8;
                }
            }
            next[n] = best;
            row[n] = slot;
        }
        std::mem::swap(&mut metric, &mut next);

        if k % RENORM_PERIOD == RENORM_PERIOD - 1 {
            let min = metric.iter().copied().fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                metric.iter_mut().for_each(|m| *m -= min);
                offset += min;
            }
        }

        if k >= delay {
            let best = argmin(&metric);
            bits[k - delay] = release(&decisions, best, k, k - delay);
        }
    }

    let best = argmin(&metric);
    if steps > 0 {
        let released = steps.saturating_sub(delay);
        // Stages >= `released` have not been emitted yet.
        let mut state = best;
        for k in (0..steps).rev() {
            let p = topology.preds[state][decisions[k * ns + state] as usize];
            if k >= released {
                bits[k] = p.input;
            } else {
                break;
            }
            state = p.from;
        }
    }
    ViterbiOutcome {
        bits,
        best_metric: metric[best] + offset,
    }
}

/// Lowest index among the minima.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Two-state shift register: state = last input.
    fn toggle() -> Topology {
        let preds = (0..2)
            .map(|n| {
                (0..2)
                    .map(|from| Pred {
                        from,
                        input: n as u8,
                        branch: from * 2 + n,
                    })
                    .collect()
            })
            .collect();
        Topology::new(2, 4, preds)
    }

    fn brute_force(metrics: &[[f64; 4]]) -> (Vec<u8>, f64) {
        let steps = metrics.len();
        let mut best = (vec![], f64::INFINITY);
        for start in 0..2usize {
            for word in 0..(1usize << steps) {
                let bits: Vec<u8> = (0..steps).map(|k| ((word >> (steps - 1 - k)) & 1) as u8).collect();
                let mut s = start;
                let mut total = 0.0;
                for (k, &b) in bits.iter().enumerate() {
                    total += metrics[k][s * 2 + b as usize];
                    s = b as usize;
                }
                if total < best.1 {
                    best = (bits, total);
                }
            }
        }
        best
    }

    #[test]
    fn full_traceback_is_exact_minimum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let metrics: Vec<[f64; 4]> = (0..10).map(|_| [(); 4].map(|_| rng.random_range(0.0..1.0))).collect();
            let out = decode(&toggle(), &[0.0, 0.0], 10, 10, |k, m| m.copy_from_slice(&metrics[k]));
            let (bits, total) = brute_force(&metrics);
            assert_eq!(out.bits, bits);
            assert!((out.best_metric - total).abs() < 1e-12);
        }
    }

    #[test]
    fn delayed_release_follows_clear_path() {
        // Correct bit costs 0, wrong bit costs 1: any delay recovers the input.
        let truth: Vec<u8> = (0..200).map(|k| ((k * 7 + k / 3) % 2) as u8).collect();
        for delay in [0, 1, 5, 30, 500] {
            let out = decode(&toggle(), &[0.0, f64::INFINITY], truth.len(), delay, |k, m| {
                for b in 0..4 {
                    m[b] = if (b % 2) as u8 == truth[k] { 0.0 } else { 1.0 };
                }
            });
            assert_eq!(out.bits, truth, "delay {delay}");
        }
    }

    #[test]
    fn survivor_metrics_never_decrease() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let metrics: Vec<[f64; 4]> = (0..64).map(|_| [(); 4].map(|_| rng.random_range(0.0..2.0))).collect();
        let mut last = 0.0;
        for steps in 1..64 {
            let out = decode(&toggle(), &[0.0, 0.0], steps, steps, |k, m| m.copy_from_slice(&metrics[k]));
            assert!(out.best_metric >= last);
            last = out.best_metric;
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        assert_eq!(argmin(&[1.0, 0.5, 0.5]), 1);
        let out = decode(&toggle(), &[0.0, 0.0], 4, 4, |_, m| m.fill(0.0));
        assert_eq!(out.bits, vec![0, 0, 0, 0]);
    }
}
