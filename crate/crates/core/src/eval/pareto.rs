use serde::{Deserialize, Serialize};

/// One trained configuration: mood macro-F1 `t` and identity-probe
/// accuracy `s`, both on validation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub sigma: f64,
    pub lambda: f64,
    pub t: f64,
    pub s: f64,
}

/// `q` dominates `p` if it is at least as good on both axes and strictly
/// better on one (higher `t`, lower `s`).
pub fn dominates(q: &TradeoffPoint, p: &TradeoffPoint) -> bool {
    q.t >= p.t && q.s <= p.s && (q.t > p.t || q.s < p.s)
}

/// Non-dominated points, ordered by sigma (stable for equal sigma).
pub fn pareto_front(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let keep = pareto_mask(points);
    let mut out: Vec<usize> = (0..points.len()).filter(|&k| keep[k]).collect();
    out.sort_by(|&a, &b| points[a].sigma.total_cmp(&points[b].sigma).then(a.cmp(&b)));
    out.into_iter().map(|k| points[k]).collect()
}

/// `true` for each point that no other point dominates.
pub fn pareto_mask(points: &[TradeoffPoint]) -> Vec<bool> {
    // sort by t descending, s ascending; a sweep keeps points whose s beats
    // every point with strictly larger t
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[b]
            .t
            .total_cmp(&points[a].t)
            .then(points[a].s.total_cmp(&points[b].s))
    });
    let mut keep = vec![false; points.len()];
    let mut best_s = f64::INFINITY;
    let mut i = 0;
    while i < idx.len() {
        let t = points[idx[i]].t;
        let mut j = i;
        while j < idx.len() && points[idx[j]].t == t {
            j += 1;
        }
        let group_min = points[idx[i]].s;
        for &k in &idx[i..j] {
            if points[k].s == group_min && group_min < best_s {
                keep[k] = true;
            }
        }
        best_s = best_s.min(group_min);
        i = j;
    }
    keep
}
