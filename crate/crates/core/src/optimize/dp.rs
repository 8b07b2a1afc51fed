//! Exact solver for one unit's day: a backward pass over convex piecewise-linear
//! cost-to-go functions of the state of charge, then a forward greedy pass.
//!
//! Each stage costs time linear in the number of breakpoints, which grows by at
//! most one per slot, so a day is quadratic in the slot count.

/// Convex piecewise-linear function on `[start, start + sum(len)]`.
#[derive(Debug, Clone)]
struct Pwl {
    start: f64,
    value: f64,
    /// `(length, slope)` with nondecreasing slopes.
    segs: Vec<(f64, f64)>,
}

impl Pwl {
    fn end(&self) -> f64 {
        self.start + self.segs.iter().map(|s| s.0).sum::<f64>()
    }

    #[cfg(test)]
    fn eval(&self, y: f64) -> f64 {
        let mut v = self.value;
        let mut at = self.start;
        for &(len, slope) in &self.segs {
            let step = (y - at).min(len);
            if step <= 0.0 {
                break;
            }
            v += step * slope;
            at += len;
        }
        v
    }

    /// Restricts the domain to `[lo, hi]`. `None` if the intersection is empty.
    fn restrict(&mut self, lo: f64, hi: f64, tol: f64) -> Option<()> {
        let end = self.end();
        if self.start > hi + tol || end < lo - tol {
            return None;
        }
        if self.start < lo {
            let mut cut = lo - self.start;
            let mut k = 0;
            while k < self.segs.len() && cut > 0.0 {
                let (len, slope) = self.segs[k];
                let take = cut.min(len);
                self.value += take * slope;
                cut -= take;
                if take >= len {
                    k += 1;
                } else {
                    self.segs[k].0 = len - take;
                    break;
                }
            }
            self.segs.drain(..k);
            self.start = lo;
        }
        if end > hi {
            let mut cut = end - hi.max(self.start);
            while cut > 0.0 {
                let Some(last) = self.segs.last_mut() else { break };
                if last.0 <= cut {
                    cut -= last.0;
                    self.segs.pop();
                } else {
                    last.0 -= cut;
                    cut = 0.0;
                }
            }
        }
        Some(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Stage {
    /// Leftmost minimiser of `c*y + V(y)` over the next stage's domain.
    best_next: f64,
    dom_lo: f64,
    dom_hi: f64,
}

/// Minimises `sum cost[t] * x[t]` subject to `lower <= x <= upper`,
/// `0 <= s0 + prefix sums <= capacity` and `s0 + sum x = target`.
///
/// `cost` is in kg per kWh. Returns `None` when infeasible.
pub(crate) fn solve_unit(
    cost: &[f64],
    lower: &[f64],
    upper: &[f64],
    capacity: f64,
    initial: f64,
    target: f64,
) -> Option<Vec<f64>> {
    let (stages, _) = backward(cost, lower, upper, capacity, initial, target)?;
    let mut x = Vec::with_capacity(cost.len());
    let mut s = initial;
    for (t, st) in stages.iter().enumerate() {
        let lo = (s + lower[t]).max(st.dom_lo);
        let hi = (s + upper[t]).min(st.dom_hi);
        let y = st.best_next.max(lo).min(hi);
        x.push(y - s);
        s = y;
    }
    Some(x)
}

fn backward(
    cost: &[f64],
    lower: &[f64],
    upper: &[f64],
    capacity: f64,
    initial: f64,
    target: f64,
) -> Option<(Vec<Stage>, Pwl)> {
    let t_len = cost.len();
    let tol = 1e-9 * (1.0 + capacity.abs());
    let mut v = Pwl {
        start: target,
        value: 0.0,
        segs: Vec::new(),
    };
    let mut stages = vec![
        Stage {
            best_next: 0.0,
            dom_lo: 0.0,
            dom_hi: 0.0,
        };
        t_len
    ];
    for t in (0..t_len).rev() {
        let c = cost[t];
        let (lo, hi) = (lower[t], upper[t]);
        // h(y) = c*y + V(y)
        let h_start = v.start;
        let h_value = v.value + c * v.start;
        let mut argmin = h_start;
        let mut neg: Vec<(f64, f64)> = Vec::new();
        let mut pos: Vec<(f64, f64)> = Vec::new();
        for &(len, slope) in &v.segs {
            let s = slope + c;
            if s < 0.0 {
                argmin += len;
                neg.push((len, s));
            } else {
                pos.push((len, s));
            }
        }
        stages[t] = Stage {
            best_next: argmin,
            dom_lo: h_start,
            dom_hi: v.end(),
        };
        // m(s) = min_{y - s in [lo, hi]} h(y), then V_t(s) = m(s) - c*s.
        let start = h_start - hi;
        let mut segs = Vec::with_capacity(neg.len() + pos.len() + 1);
        for (len, s) in neg {
            segs.push((len, s - c));
        }
        if hi - lo > 0.0 {
            segs.push((hi - lo, -c));
        }
        for (len, s) in pos {
            segs.push((len, s - c));
        }
        v = Pwl {
            start,
            value: h_value - c * start,
            segs,
        };
        v.restrict(0.0, capacity, tol)?;
    }
    if initial < v.start - tol || initial > v.end() + tol {
        return None;
    }
    Some((stages, v))
}
