/// Ramp `max{0, a + κ·b}` for one comparison building, with
/// `a = G(h_j) − G(h_i + 1) − (P_j − P_i) + κ_T (P_j − T_ij P_j)` and
/// `b = T_ij P_j − P_i`.
pub fn ramp_term(g_j: f64, g_next_i: f64, p_i: f64, p_j: f64, t_ij: f64, kappa_t: f64) -> (f64, f64) {
    let a = g_j - g_next_i - (p_j - p_i) + kappa_t * (p_j - t_ij * p_j);
    (a, t_ij * p_j - p_i)
}

/// `min_{κ ∈ [0, 1]} max{0, max_j (a_j + κ b_j)}` and the smallest minimizing κ.
///
/// The objective is the upper envelope of lines, so it is convex and piecewise
/// linear; its minimum over the interval is at an end point or an envelope
/// breakpoint.
pub fn min_max_ramp(terms: &[(f64, f64)]) -> (f64, f64) {
    // Lines as (slope, intercept), the zero line included.
    let mut lines: Vec<(f64, f64)> = terms.iter().map(|&(a, b)| (b, a)).collect();
    lines.push((0.0, 0.0));
    lines.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    // Upper envelope over the whole line, slopes ascending.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
    for l in lines {
        if let Some(last) = hull.last() {
            if last.0 == l.0 {
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let (s1, c1) = hull[hull.len() - 2];
            let (s2, c2) = hull[hull.len() - 1];
            // Middle line is useless when l overtakes line 1 no later than line 2 does.
            if (l.1 - c1) * (s2 - s1) >= (c2 - c1) * (l.0 - s1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    let f = |k: f64| hull.iter().map(|(s, c)| c + s * k).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates = vec![0.0, 1.0];
    for w in hull.windows(2) {
        let x = (w[0].1 - w[1].1) / (w[1].0 - w[0].0);
        if x > 0.0 && x < 1.0 {
            candidates.push(x);
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut best = (f64::INFINITY, 0.0);
    for k in candidates {
        let v = f(k);
        if v < best.0 {
            best = (v, k);
        }
    }
    best
}
