/// Result of a Nelder–Mead minimisation.
#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Nelder–Mead with standard coefficients. Stops when the spread of
/// objective values over the simplex is at most `ftol`; a converged run is
/// restarted once from its best vertex to guard against a collapsed simplex.
/// Non-finite objective values count as +∞.
pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], ftol: f64, max_evals: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut evals = 0;
    let mut start = x0.to_vec();
    let mut best: Option<Minimum> = None;
    for _ in 0..2 {
        let m = run(&eval, &start, step, ftol, max_evals.saturating_sub(evals));
        evals += m.evaluations;
        let improved = best.as_ref().is_none_or(|b| b.f - m.f > ftol);
        let converged = m.converged;
        start = m.x.clone();
        if best.as_ref().is_none_or(|b| m.f <= b.f) {
            best = Some(m);
        }
        if !converged || !improved {
            break;
        }
    }
    let mut best = best.expect("at least one run");
    best.evaluations = evals;
    best
}

fn run<F>(f: &F, x0: &[f64], step: &[f64], ftol: f64, max_evals: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if vals[n] - vals[0] <= ftol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            pts[i] = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
            vals[i] = f(&pts[i]);
        }
        evals += n;
    }
    let (bi, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty simplex");
    Minimum { x: pts[bi].clone(), f: vals[bi], converged, evaluations: evals }
}
