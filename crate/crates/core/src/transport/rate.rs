/// Single-flow rate: the fair share of the node's bandwidth, bounded by what
/// the window allows per round trip.
pub fn effective_rate(fair_share: f64, cwnd: u64, rtt: f64) -> f64 {
    if rtt <= 0.0 {
        return fair_share;
    }
    fair_share.min(cwnd as f64 / rtt)
}

/// Max-min fair split of `capacity` among flows with individual ceilings.
/// Capacity a capped flow cannot use is redistributed to the others.
pub fn water_fill(capacity: f64, caps: &[f64], rates: &mut [f64]) {
    debug_assert_eq!(caps.len(), rates.len());
    if caps.is_empty() {
        return;
    }
    let equal = capacity / caps.len() as f64;
    if caps.iter().all(|&c| c >= equal) {
        rates.fill(equal);
        return;
    }
    let mut order: alloc::vec::Vec<usize> = (0..caps.len()).collect();
    order.sort_unstable_by(|&a, &b| caps[a].total_cmp(&caps[b]));
    let mut remaining = capacity;
    let mut left = caps.len();
    for (pos, &i) in order.iter().enumerate() {
        let share = remaining / left as f64;
        if caps[i] <= share {
            rates[i] = caps[i];
            remaining -= caps[i];
            left -= 1;
        } else {
            for &j in &order[pos..] {
                rates[j] = share;
            }
            return;
        }
    }
}
