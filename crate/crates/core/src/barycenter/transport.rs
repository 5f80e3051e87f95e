//! Transport from a vertex density to a few point masses.

use serde::Serialize;

use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Exact,
    Entropic,
}

/// Meshes above this size use entropic transport.
pub const EXACT_TRANSPORT_LIMIT: usize = 2000;

const EPS_FLOW: f64 = 1e-16;

/// Exact optimal transport cost from sources `a` to sinks `b`, with
/// `cost[j][v]` the cost of moving mass from source `v` to sink `j`.
///
/// Successive shortest paths from each source in turn; the residual graph is
/// reduced to the sink nodes, so every shortest path is a Bellman–Ford run
/// over `k` nodes.
pub fn exact(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let k = b.len();
    let n = a.len();
    let total_a: f64 = a.iter().sum();
    let total_b: f64 = b.iter().sum();
    let mut cap: Vec<f64> = b.iter().map(|x| x * total_a / total_b).collect();
    let mut flow = vec![vec![0.0; n]; k];
    for v in 0..n {
        let mut supply = a[v];
        while supply > EPS_FLOW {
            // cheapest reroute j -> j2 through a source currently sending to j
            let mut reroute = vec![vec![(f64::INFINITY, usize::MAX); k]; k];
            for j in 0..k {
                for (u, &x) in flow[j].iter().enumerate() {
                    if x <= EPS_FLOW {
                        continue;
                    }
                    for j2 in 0..k {
                        if j2 == j {
                            continue;
                        }
                        let c = cost[j2][u] - cost[j][u];
                        if c < reroute[j][j2].0 {
                            reroute[j][j2] = (c, u);
                        }
                    }
                }
            }
            let mut dist: Vec<f64> = (0..k).map(|j| cost[j][v]).collect();
            let mut pred = vec![usize::MAX; k];
            for _ in 0..k {
                let mut changed = false;
                for j in 0..k {
                    for j2 in 0..k {
                        let (c, _) = reroute[j][j2];
                        if dist[j] + c < dist[j2] - 1e-15 {
                            dist[j2] = dist[j] + c;
                            pred[j2] = j;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let mut target = usize::MAX;
            for j in 0..k {
                if cap[j] > EPS_FLOW && (target == usize::MAX || dist[j] < dist[target]) {
                    target = j;
                }
            }
            if target == usize::MAX {
                break;
            }
            let mut path = vec![target];
            while pred[*path.last().unwrap()] != usize::MAX {
                path.push(pred[*path.last().unwrap()]);
            }
            path.reverse();
            let mut delta = supply.min(cap[target]);
            for w in path.windows(2) {
                let u = reroute[w[0]][w[1]].1;
                delta = delta.min(flow[w[0]][u]);
            }
            flow[path[0]][v] += delta;
            for w in path.windows(2) {
                let u = reroute[w[0]][w[1]].1;
                flow[w[0]][u] -= delta;
                flow[w[1]][u] += delta;
            }
            cap[target] -= delta;
            supply -= delta;
        }
    }
    let mut total = 0.0;
    for j in 0..k {
        for v in 0..n {
            total += flow[j][v] * cost[j][v];
        }
    }
    total
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + it.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Entropic transport in the log domain followed by rounding onto the exact
/// marginals. The returned cost belongs to a feasible plan, so it bounds the
/// optimal cost from above.
pub fn entropic(a: &[f64], b: &[f64], cost: &[Vec<f64>], eps: f64, iterations: usize) -> f64 {
    let k = b.len();
    let n = a.len();
    let total_a: f64 = a.iter().sum();
    let b: Vec<f64> = b.iter().map(|x| x * total_a / b.iter().sum::<f64>()).collect();
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; k];
    for _ in 0..iterations {
        f = par::map_range(n, |v| {
            if a[v] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            eps * la[v] - eps * log_sum_exp((0..k).map(|j| (g[j] - cost[j][v]) / eps))
        });
        g = (0..k)
            .map(|j| {
                if b[j] <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                eps * lb[j] - eps * log_sum_exp((0..n).map(|v| (f[v] - cost[j][v]) / eps))
            })
            .collect();
    }
    let mut plan: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|v| ((f[v] + g[j] - cost[j][v]) / eps).exp()).collect())
        .collect();
    // scale rows, then columns, down to the marginals, then restore the deficit
    for v in 0..n {
        let r: f64 = (0..k).map(|j| plan[j][v]).sum();
        if r > a[v] {
            let s = a[v] / r;
            (0..k).for_each(|j| plan[j][v] *= s);
        }
    }
    for j in 0..k {
        let c: f64 = plan[j].iter().sum();
        if c > b[j] {
            let s = b[j] / c;
            plan[j].iter_mut().for_each(|x| *x *= s);
        }
    }
    let err_a: Vec<f64> = (0..n)
        .map(|v| (a[v] - (0..k).map(|j| plan[j][v]).sum::<f64>()).max(0.0))
        .collect();
    let err_b: Vec<f64> = (0..k).map(|j| (b[j] - plan[j].iter().sum::<f64>()).max(0.0)).collect();
    let mass: f64 = err_a.iter().sum();
    let mut total = 0.0;
    for j in 0..k {
        for v in 0..n {
            let mut p = plan[j][v];
            if mass > 0.0 {
                p += err_a[v] * err_b[j] / mass;
            }
            total += p * cost[j][v];
        }
    }
    total
}

/// Best placement of at most `k` atoms among candidates, each vertex sending
/// its mass to the nearest chosen atom.
#[derive(Debug, Clone)]
pub struct KMedian {
    /// Indices into the candidate list, ascending.
    pub chosen: Vec<usize>,
    /// Mass assigned to each chosen candidate.
    pub weights: Vec<f64>,
    pub cost: f64,
}

fn assignment(a: &[f64], rows: &[Vec<f64>], chosen: &[usize]) -> KMedian {
    let mut weights = vec![0.0; chosen.len()];
    let mut cost = 0.0;
    for (v, &m) in a.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let mut best = 0;
        for (i, &c) in chosen.iter().enumerate() {
            if rows[c][v] < rows[chosen[best]][v] {
                best = i;
            }
        }
        weights[best] += m;
        cost += m * rows[chosen[best]][v];
    }
    KMedian {
        chosen: chosen.to_vec(),
        weights,
        cost,
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-median over candidate rows `rows[c][v] = d(candidate c, v)`. Exhaustive
/// when the subset count is small, otherwise grown greedily from the
/// `(k−1)` solution and improved by swaps; either way the cost is
/// non-increasing in `k`.
pub fn k_median(a: &[f64], rows: &[Vec<f64>], k: usize) -> KMedian {
    let n = rows.len();
    assert!(n > 0 && k > 0);
    let budget = 4e7 / (a.len() as f64).max(1.0);
    let mut current: Option<KMedian> = None;
    for j in 1..=k.min(n) {
        let next = if binomial(n, j) * j as f64 <= budget {
            let all = subsets(n, j);
            let results = par::map_slice(&all, |s| assignment(a, rows, s));
            let mut best = results[0].clone();
            for r in results.into_iter().skip(1) {
                if r.cost < best.cost {
                    best = r;
                }
            }
            best
        } else {
            let base = current.as_ref().map(|c| c.chosen.clone()).unwrap_or_default();
            let extra: Vec<usize> = (0..n).filter(|c| !base.contains(c)).collect();
            let tries = par::map_slice(&extra, |&c| {
                let mut s = base.clone();
                s.push(c);
                s.sort_unstable();
                assignment(a, rows, &s)
            });
            let mut best = tries[0].clone();
            for r in tries.into_iter().skip(1) {
                if r.cost < best.cost {
                    best = r;
                }
            }
            for _ in 0..20 {
                let mut improved = false;
                for pos in 0..best.chosen.len() {
                    for c in 0..n {
                        if best.chosen.contains(&c) {
                            continue;
                        }
                        let mut s = best.chosen.clone();
                        s[pos] = c;
                        s.sort_unstable();
                        let r = assignment(a, rows, &s);
                        if r.cost < best.cost {
                            best = r;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            best
        };
        current = match current {
            Some(prev) if prev.cost <= next.cost => Some(prev),
            _ => Some(next),
        };
    }
    current.expect("at least one candidate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// With two sinks the optimum fills sink 0 with sources in increasing
    /// order of `c₀ − c₁`.
    fn two_sink_oracle(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.sort_by(|&u, &v| (cost[0][u] - cost[1][u]).total_cmp(&(cost[0][v] - cost[1][v])));
        let mut left = b[0];
        let mut total = 0.0;
        for v in order {
            let x = a[v].min(left);
            left -= x;
            total += x * cost[0][v] + (a[v] - x) * cost[1][v];
        }
        total
    }

    #[test]
    fn exact_matches_two_sink_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let mut a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = a.iter().sum();
            a.iter_mut().for_each(|x| *x /= s);
            let t = rng.random::<f64>();
            let b = vec![t, 1.0 - t];
            let cost: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
            let e = exact(&a, &b, &cost);
            let o = two_sink_oracle(&a, &b, &cost);
            assert!((e - o).abs() < 1e-12, "{e} vs {o}");
        }
    }

    #[test]
    fn exact_single_sink_is_weighted_sum() {
        let a = [0.2, 0.3, 0.5];
        let cost = vec![vec![1.0, 2.0, 4.0]];
        assert!((exact(&a, &[1.0], &cost) - 2.8).abs() < 1e-15);
    }

    #[test]
    fn exact_three_sinks_beats_every_greedy_order() {
        // the exact cost is a lower bound for any feasible plan
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = 30;
            let a = vec![1.0 / n as f64; n];
            let b = vec![0.5, 0.3, 0.2];
            let cost: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
            let e = exact(&a, &b, &cost);
            let mut cap = b.clone();
            let mut greedy = 0.0;
            for v in 0..n {
                let mut left = a[v];
                let mut order = [0, 1, 2];
                order.sort_by(|&i, &j| cost[i][v].total_cmp(&cost[j][v]));
                for j in order {
                    let x = left.min(cap[j]);
                    cap[j] -= x;
                    left -= x;
                    greedy += x * cost[j][v];
                }
            }
            assert!(e <= greedy + 1e-12);
            let ent = entropic(&a, &b, &cost, 0.002, 2000);
            assert!(ent >= e - 1e-12 && ent < e + 0.05, "{ent} vs {e}");
        }
    }

    #[test]
    fn k_median_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let a = vec![1.0 / n as f64; n];
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let r = k_median(&a, &rows, k);
            assert!(r.cost <= prev);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prev = r.cost;
        }
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(5, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(binomial(12, 1), 12.0);
    }
}
