//! Cox proportional hazards baseline.
//!
//! Newton-Raphson maximization of the Breslow partial likelihood with a
//! step-halving guard, Breslow baseline cumulative hazard, and mean
//! centering of covariates. The fit consumes a complete-case numeric
//! design; covariate roles and interactions are declared through
//! [`CovariateSpec`].

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CovariateKind {
    Binary,
    Continuous,
    /// Integer levels `0..n_levels`; level 0 is the reference and the
    /// column expands to `n_levels - 1` indicators.
    Categorical { n_levels: usize },
}

#[derive(Debug, Clone)]
pub struct Covariate {
    pub name: String,
    pub kind: CovariateKind,
}

/// Declares the design: named covariates plus optional interaction pairs
/// (referencing covariate names) whose products are appended.
#[derive(Debug, Clone, Default)]
pub struct CovariateSpec {
    pub covariates: Vec<Covariate>,
    pub interactions: Vec<(String, String)>,
}

impl CovariateSpec {
    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::BTreeSet::new();
        for c in &self.covariates {
            if !names.insert(c.name.as_str()) {
                return Err(Error::data(format!("duplicate covariate name {:?}", c.name)));
            }
        }
        for (a, b) in &self.interactions {
            if !names.contains(a.as_str()) || !names.contains(b.as_str()) {
                return Err(Error::data(format!(
                    "interaction ({a}, {b}) references undeclared covariate"
                )));
            }
        }
        Ok(())
    }

    /// Expand raw columns (one per declared covariate, in order) into the
    /// numeric design: categorical levels become indicator blocks and
    /// declared interactions are appended as products of the raw columns.
    pub fn expand(&self, raw: &Array2<f64>) -> Result<(Array2<f64>, Vec<String>)> {
        self.validate()?;
        if raw.ncols() != self.covariates.len() {
            return Err(Error::data(format!(
                "design has {} columns, spec declares {}",
                raw.ncols(),
                self.covariates.len()
            )));
        }
        let n = raw.nrows();
        let mut cols: Vec<Array1<f64>> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        for (j, cov) in self.covariates.iter().enumerate() {
            let col = raw.column(j);
            match &cov.kind {
                CovariateKind::Binary | CovariateKind::Continuous => {
                    cols.push(col.to_owned());
                    names.push(cov.name.clone());
                }
                CovariateKind::Categorical { n_levels } => {
                    for level in 1..*n_levels {
                        let ind = col.mapv(|v| f64::from(v as usize == level));
                        cols.push(ind);
                        names.push(format!("{}={level}", cov.name));
                    }
                }
            }
        }
        for (a, b) in &self.interactions {
            let ja = self.covariates.iter().position(|c| &c.name == a).unwrap();
            let jb = self.covariates.iter().position(|c| &c.name == b).unwrap();
            let prod = &raw.column(ja).to_owned() * &raw.column(jb);
            cols.push(prod);
            names.push(format!("{a}*{b}"));
        }
        let mut design = Array2::zeros((n, cols.len()));
        for (j, c) in cols.iter().enumerate() {
            design.column_mut(j).assign(c);
        }
        Ok((design, names))
    }
}

/// Fitted model: coefficients on the centered design plus the Breslow
/// baseline cumulative hazard step function.
#[derive(Debug, Clone)]
pub struct CphModel {
    pub beta: Array1<f64>,
    pub covariate_means: Array1<f64>,
    /// `(event_time, cumulative_hazard)` steps, ascending in time.
    pub baseline_cum_hazard: Vec<(f64, f64)>,
    pub column_names: Vec<String>,
    pub n_iterations: usize,
    pub final_log_likelihood: f64,
}

struct SortedData {
    x: Array2<f64>,
    times: Vec<f64>,
    events: Vec<bool>,
}

fn sort_by_time(x: &Array2<f64>, times: &[f64], events: &[bool]) -> SortedData {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let x_sorted = x.select(Axis(0), &order);
    SortedData {
        x: x_sorted,
        times: order.iter().map(|&i| times[i]).collect(),
        events: order.iter().map(|&i| events[i]).collect(),
    }
}

/// Breslow partial log-likelihood, score, and information at `beta`.
///
/// One reverse sweep keeps running risk-set sums `S0 = sum exp(lp)`,
/// `S1 = sum x exp(lp)`, `S2 = sum x x' exp(lp)` over everyone with
/// time >= t, applied at each distinct event time.
fn loglik_score_info(
    data: &SortedData,
    beta: &Array1<f64>,
) -> (f64, Array1<f64>, Array2<f64>) {
    let p = beta.len();
    let n = data.times.len();
    let lp: Vec<f64> = (0..n).map(|i| data.x.row(i).dot(beta)).collect();
    let mut s0 = 0.0;
    let mut s1 = Array1::<f64>::zeros(p);
    let mut s2 = Array2::<f64>::zeros((p, p));
    let mut loglik = 0.0;
    let mut score = Array1::<f64>::zeros(p);
    let mut info = Array2::<f64>::zeros((p, p));

    let mut i = n;
    while i > 0 {
        // absorb the tie group [lo, i) into the risk set
        let t = data.times[i - 1];
        let mut lo = i;
        while lo > 0 && data.times[lo - 1] == t {
            lo -= 1;
        }
        for k in lo..i {
            let w = lp[k].exp();
            s0 += w;
            let xk = data.x.row(k);
            for a in 0..p {
                s1[a] += w * xk[a];
                for b in 0..p {
                    s2[[a, b]] += w * xk[a] * xk[b];
                }
            }
        }
        // contributions of deaths at t (Breslow: shared denominator)
        let mut deaths = 0usize;
        for k in lo..i {
            if data.events[k] {
                deaths += 1;
                loglik += lp[k];
                score += &data.x.row(k);
            }
        }
        if deaths > 0 {
            let d = deaths as f64;
            loglik -= d * s0.ln();
            let sbar = &s1 / s0;
            score -= &(&sbar * d);
            for a in 0..p {
                for b in 0..p {
                    info[[a, b]] += d * (s2[[a, b]] / s0 - sbar[a] * sbar[b]);
                }
            }
        }
        i = lo;
    }
    (loglik, score, info)
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting,
/// reporting the offending column on singularity.
fn solve(a: &Array2<f64>, b: &Array1<f64>, names: &[String]) -> Result<Array1<f64>> {
    let p = b.len();
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale: f64 = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut perm: Vec<usize> = (0..p).collect();
    for col in 0..p {
        let (pivot_row, pivot_val) = (col..p)
            .map(|r| (r, m[[r, col]].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot_val < 1e-12 * scale {
            let name = names
                .get(perm[col])
                .cloned()
                .unwrap_or_else(|| format!("column {}", perm[col]));
            return Err(Error::numeric(format!(
                "singular information matrix: column {name} is collinear"
            )));
        }
        if pivot_row != col {
            for j in 0..p {
                m.swap([pivot_row, j], [col, j]);
            }
            rhs.swap(pivot_row, col);
            perm.swap(pivot_row, col);
        }
        for r in col + 1..p {
            let f = m[[r, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for j in col..p {
                m[[r, j]] -= f * m[[col, j]];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = Array1::<f64>::zeros(p);
    for r in (0..p).rev() {
        let mut acc = rhs[r];
        for j in r + 1..p {
            acc -= m[[r, j]] * x[j];
        }
        x[r] = acc / m[[r, r]];
    }
    Ok(x)
}

pub const CPH_SCORE_TOLERANCE: f64 = 1e-8;
pub const CPH_MAX_ITERATIONS: usize = 100;

/// Fit by Newton-Raphson on the mean-centered design. Converged when the
/// score max-norm drops below `1e-8`; each Newton step is halved while it
/// fails to improve the partial likelihood.
pub fn cph_fit(
    x: &Array2<f64>,
    times: &[f64],
    events: &[bool],
    column_names: Vec<String>,
) -> Result<CphModel> {
    let n = x.nrows();
    let p = x.ncols();
    if n != times.len() || n != events.len() {
        return Err(Error::data("design, times, and events must align"));
    }
    if n <= p {
        return Err(Error::data(format!("need n > p, got n={n}, p={p}")));
    }
    if !events.iter().any(|&e| e) {
        return Err(Error::data("no events in cohort"));
    }
    let names = if column_names.len() == p {
        column_names
    } else {
        (0..p).map(|j| format!("x{j}")).collect()
    };

    let means = if p > 0 {
        x.mean_axis(Axis(0)).unwrap()
    } else {
        Array1::zeros(0)
    };
    let centered = x - &means.view().insert_axis(Axis(0));
    let data = sort_by_time(&centered, times, events);

    let mut beta = Array1::<f64>::zeros(p);
    let (mut loglik, mut score, mut info) = loglik_score_info(&data, &beta);
    let mut iterations = 0;
    let mut trace: Vec<f64> = vec![loglik];
    while p > 0 {
        let score_norm = score.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if score_norm < CPH_SCORE_TOLERANCE {
            break;
        }
        if iterations >= CPH_MAX_ITERATIONS {
            return Err(Error::numeric(format!(
                "Cox fit failed to converge in {CPH_MAX_ITERATIONS} iterations \
                 (score max-norm {score_norm:.3e}); log-likelihood trace (last 5): {:?}",
                &trace[trace.len().saturating_sub(5)..]
            )));
        }
        let direction = solve(&info, &score, &names)?;
        let mut step = 1.0;
        // Slack at the likelihood's own rounding floor: near the optimum a
        // full Newton step changes the likelihood by less than f64 can
        // resolve, and must still be accepted for the score to collapse.
        let slack = 1e-10 * loglik.abs().max(1.0);
        loop {
            let candidate = &beta + &(&direction * step);
            let (ll, sc, inf) = loglik_score_info(&data, &candidate);
            if ll.is_finite() && ll >= loglik - slack {
                beta = candidate;
                loglik = ll;
                score = sc;
                info = inf;
                break;
            }
            step *= 0.5;
            if step < 1e-10 {
                return Err(Error::numeric(format!(
                    "Cox step-halving stalled at iteration {iterations}; \
                     log-likelihood trace: {trace:?}"
                )));
            }
        }
        trace.push(loglik);
        iterations += 1;
    }

    // Breslow baseline on the centered linear predictor.
    let lp: Vec<f64> = (0..n).map(|i| data.x.row(i).dot(&beta)).collect();
    let mut baseline = Vec::new();
    let mut cum = 0.0;
    let mut s0 = 0.0;
    let mut i = n;
    let mut groups: Vec<(f64, usize, f64)> = Vec::new(); // (time, deaths, s0 at time)
    while i > 0 {
        let t = data.times[i - 1];
        let mut lo = i;
        while lo > 0 && data.times[lo - 1] == t {
            lo -= 1;
        }
        for k in lo..i {
            s0 += lp[k].exp();
        }
        let deaths = (lo..i).filter(|&k| data.events[k]).count();
        if deaths > 0 {
            groups.push((t, deaths, s0));
        }
        i = lo;
    }
    for (t, deaths, s0_at) in groups.into_iter().rev() {
        cum += deaths as f64 / s0_at;
        baseline.push((t, cum));
    }

    Ok(CphModel {
        beta,
        covariate_means: means,
        baseline_cum_hazard: baseline,
        column_names: names,
        n_iterations: iterations,
        final_log_likelihood: loglik,
    })
}

impl CphModel {
    /// Baseline cumulative hazard at `t` (step function, right-continuous).
    pub fn baseline_at(&self, t: f64) -> f64 {
        let mut h = 0.0;
        for &(time, cum) in &self.baseline_cum_hazard {
            if time <= t {
                h = cum;
            } else {
                break;
            }
        }
        h
    }

    pub fn linear_predictor(&self, x: &Array1<f64>) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::data(format!(
                "covariate row has {} entries, model expects {}",
                x.len(),
                self.beta.len()
            )));
        }
        Ok((x - &self.covariate_means).dot(&self.beta))
    }

    /// Predicted event risk by horizon `h`.
    pub fn predict_risk(&self, x: &Array1<f64>, horizon: f64) -> Result<f64> {
        let lp = self.linear_predictor(x)?;
        Ok(1.0 - (-self.baseline_at(horizon) * lp.exp()).exp())
    }

    /// Structured-text serialization: beta, means, baseline steps.
    pub fn to_text(&self) -> String {
        let mut out = String::from("cph_model\tv1\n");
        for (name, (b, m)) in self
            .column_names
            .iter()
            .zip(self.beta.iter().zip(self.covariate_means.iter()))
        {
            out.push_str(&format!("beta\t{name}\t{b}\t{m}\n"));
        }
        for (t, h) in &self.baseline_cum_hazard {
            out.push_str(&format!("baseline\t{t}\t{h}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header.starts_with("cph_model\t") => {}
            _ => return Err(Error::data("not a cph model file")),
        }
        let mut names = Vec::new();
        let mut beta = Vec::new();
        let mut means = Vec::new();
        let mut baseline = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::data(format!("malformed cph model line {}", i + 2));
            match fields.as_slice() {
                ["beta", name, b, m] => {
                    names.push(name.to_string());
                    beta.push(b.parse::<f64>().map_err(|_| bad())?);
                    means.push(m.parse::<f64>().map_err(|_| bad())?);
                }
                ["baseline", t, h] => {
                    baseline.push((
                        t.parse::<f64>().map_err(|_| bad())?,
                        h.parse::<f64>().map_err(|_| bad())?,
                    ));
                }
                [""] => {}
                _ => return Err(bad()),
            }
        }
        Ok(CphModel {
            beta: Array1::from_vec(beta),
            covariate_means: Array1::from_vec(means),
            baseline_cum_hazard: baseline,
            column_names: names,
            n_iterations: 0,
            final_log_likelihood: f64::NAN,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_group_data(
        n: usize,
        hr: f64,
        base: f64,
        seed: u64,
    ) -> (Array2<f64>, Vec<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 1));
        let mut times = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        for i in 0..n {
            let g = f64::from(rng.gen_bool(0.5));
            x[[i, 0]] = g;
            let rate = base * hr.powf(g);
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            times.push(-u.ln() / rate);
            events.push(true);
        }
        (x, times, events)
    }

    /// Naive O(n^2) Breslow partial log-likelihood, written independently
    /// of the production sweep.
    fn naive_loglik(x: &Array2<f64>, times: &[f64], events: &[bool], beta: &Array1<f64>) -> f64 {
        let n = times.len();
        let lp: Vec<f64> = (0..n).map(|i| x.row(i).dot(beta)).collect();
        let mut ll = 0.0;
        for i in 0..n {
            if !events[i] {
                continue;
            }
            let denom: f64 = (0..n)
                .filter(|&j| times[j] >= times[i])
                .map(|j| lp[j].exp())
                .sum();
            ll += lp[i] - denom.ln();
        }
        ll
    }

    #[test]
    fn recovers_known_hazard_ratio() {
        let (x, times, events) = two_group_data(5000, 2.0, 0.05, 42);
        let model = cph_fit(&x, &times, &events, vec!["group".into()]).unwrap();
        // standard error from observed information at the optimum
        let means = x.mean_axis(Axis(0)).unwrap();
        let centered = &x - &means.view().insert_axis(Axis(0));
        let data = sort_by_time(&centered, &times, &events);
        let (_, score, info) = loglik_score_info(&data, &model.beta);
        let se = (1.0 / info[[0, 0]]).sqrt();
        assert!(score[0].abs() < 1e-6);
        assert!(
            (model.beta[0] - 2.0f64.ln()).abs() < 3.0 * se,
            "beta {} vs ln 2 (se {se})",
            model.beta[0]
        );
    }

    #[test]
    fn fitted_score_is_zero() {
        let (x, times, events) = two_group_data(300, 3.0, 0.1, 7);
        let model = cph_fit(&x, &times, &events, vec![]).unwrap();
        let means = x.mean_axis(Axis(0)).unwrap();
        let centered = &x - &means.view().insert_axis(Axis(0));
        let data = sort_by_time(&centered, &times, &events);
        let (_, score, _) = loglik_score_info(&data, &model.beta);
        assert!(score.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn zero_covariate_is_singular() {
        let n = 40;
        let mut x = Array2::zeros((n, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut times = Vec::new();
        let mut events = Vec::new();
        for i in 0..n {
            x[[i, 0]] = f64::from(rng.gen_bool(0.5));
            // column 1 stays identically zero
            times.push(rng.gen_range(0.1..10.0));
            events.push(true);
        }
        let err = cph_fit(&x, &times, &events, vec!["a".into(), "dead_col".into()]).unwrap_err();
        assert!(err.to_string().contains("dead_col"), "{err}");
    }

    #[test]
    fn null_model_baseline_is_nelson_aalen() {
        let times = vec![1.0, 2.0, 2.0, 3.0, 5.0, 6.0];
        let events = vec![true, true, false, true, false, true];
        let x = Array2::zeros((6, 0));
        let model = cph_fit(&x, &times, &events, vec![]).unwrap();
        // Nelson-Aalen: d/n over risk sets 6, 5, 3, 1
        let expected = [
            (1.0, 1.0 / 6.0),
            (2.0, 1.0 / 6.0 + 1.0 / 5.0),
            (3.0, 1.0 / 6.0 + 1.0 / 5.0 + 1.0 / 3.0),
            (6.0, 1.0 / 6.0 + 1.0 / 5.0 + 1.0 / 3.0 + 1.0),
        ];
        assert_eq!(model.baseline_cum_hazard.len(), expected.len());
        for ((t, h), (et, eh)) in model.baseline_cum_hazard.iter().zip(expected) {
            assert_eq!(*t, et);
            assert!((h - eh).abs() < 1e-12);
        }
    }

    #[test]
    fn centering_invariance() {
        let (mut x, times, events) = two_group_data(400, 2.0, 0.05, 9);
        let m1 = cph_fit(&x, &times, &events, vec![]).unwrap();
        x.mapv_inplace(|v| v + 17.0);
        let m2 = cph_fit(&x, &times, &events, vec![]).unwrap();
        assert!((m1.beta[0] - m2.beta[0]).abs() < 1e-6);
        assert!((m1.final_log_likelihood - m2.final_log_likelihood).abs() < 1e-6);
    }

    #[test]
    fn matches_brute_force_optimizer() {
        // Coordinate descent with golden-section line search on the naive
        // likelihood; independent of the Newton path.
        let (x, times, events) = two_group_data(200, 2.5, 0.08, 21);
        let mut x2 = Array2::zeros((200, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for i in 0..200 {
            x2[[i, 0]] = x[[i, 0]];
            x2[[i, 1]] = rng.gen_range(-1.0..1.0);
        }
        let model = cph_fit(&x2, &times, &events, vec![]).unwrap();

        let means = x2.mean_axis(Axis(0)).unwrap();
        let centered = &x2 - &means.view().insert_axis(Axis(0));
        let golden = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut beta = Array1::zeros(2);
        for _ in 0..200 {
            for j in 0..2 {
                let (mut lo, mut hi) = (beta[j] - 2.0, beta[j] + 2.0);
                for _ in 0..80 {
                    let m1 = hi - golden * (hi - lo);
                    let m2 = lo + golden * (hi - lo);
                    let eval = |v: f64| {
                        let mut b = beta.clone();
                        b[j] = v;
                        naive_loglik(&centered, &times, &events, &b)
                    };
                    if eval(m1) > eval(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                beta[j] = 0.5 * (lo + hi);
            }
        }
        for j in 0..2 {
            assert!(
                (model.beta[j] - beta[j]).abs() < 1e-4,
                "beta[{j}] {} vs brute {}",
                model.beta[j],
                beta[j]
            );
        }
    }

    #[test]
    fn predictions_behave() {
        let (x, times, events) = two_group_data(500, 2.0, 0.05, 13);
        let model = cph_fit(&x, &times, &events, vec![]).unwrap();
        let at_mean = model
            .predict_risk(&model.covariate_means.clone(), 12.0)
            .unwrap();
        assert!((at_mean - (1.0 - (-model.baseline_at(12.0)).exp())).abs() < 1e-12);

        // monotone in a positive-coefficient covariate
        assert!(model.beta[0] > 0.0);
        let r0 = model.predict_risk(&ndarray::arr1(&[0.0]), 12.0).unwrap();
        let r1 = model.predict_risk(&ndarray::arr1(&[1.0]), 12.0).unwrap();
        assert!(r1 > r0);

        let err = model.predict_risk(&ndarray::arr1(&[0.0, 1.0]), 12.0).unwrap_err();
        assert!(err.to_string().contains("covariate row"));
    }

    #[test]
    fn beta_zero_gives_flat_predictions() {
        let times = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let events = vec![true; 8];
        let x = ndarray::arr2(&[
            [1.0],
            [0.0],
            [1.0],
            [0.0],
            [1.0],
            [0.0],
            [1.0],
            [0.0],
        ]);
        let model = cph_fit(&x, &times, &events, vec![]).unwrap();
        let mut forced = model.clone();
        forced.beta[0] = 0.0;
        let r0 = forced.predict_risk(&ndarray::arr1(&[0.0]), 5.0).unwrap();
        let r1 = forced.predict_risk(&ndarray::arr1(&[1.0]), 5.0).unwrap();
        assert_eq!(r0, r1);
    }

    #[test]
    fn covariate_spec_expansion() {
        let spec = CovariateSpec {
            covariates: vec![
                Covariate {
                    name: "age".into(),
                    kind: CovariateKind::Continuous,
                },
                Covariate {
                    name: "sbp".into(),
                    kind: CovariateKind::Continuous,
                },
                Covariate {
                    name: "hf_subtype".into(),
                    kind: CovariateKind::Categorical { n_levels: 3 },
                },
            ],
            interactions: vec![("age".into(), "sbp".into())],
        };
        let raw = ndarray::arr2(&[[60.0, 130.0, 0.0], [70.0, 140.0, 2.0]]);
        let (design, names) = spec.expand(&raw).unwrap();
        assert_eq!(
            names,
            vec!["age", "sbp", "hf_subtype=1", "hf_subtype=2", "age*sbp"]
        );
        assert_eq!(design.row(1).to_vec(), vec![70.0, 140.0, 0.0, 1.0, 9800.0]);

        let bad = CovariateSpec {
            covariates: vec![Covariate {
                name: "age".into(),
                kind: CovariateKind::Continuous,
            }],
            interactions: vec![("age".into(), "bmi".into())],
        };
        assert!(bad.expand(&ndarray::arr2(&[[1.0]])).is_err());
    }

    #[test]
    fn model_text_round_trip() {
        let (x, times, events) = two_group_data(100, 2.0, 0.1, 3);
        let model = cph_fit(&x, &times, &events, vec!["g".into()]).unwrap();
        let text = model.to_text();
        let back = CphModel::from_text(&text).unwrap();
        assert_eq!(model.beta, back.beta);
        assert_eq!(model.baseline_cum_hazard, back.baseline_cum_hazard);
        let r1 = model.predict_risk(&ndarray::arr1(&[1.0]), 10.0).unwrap();
        let r2 = back.predict_risk(&ndarray::arr1(&[1.0]), 10.0).unwrap();
        assert_eq!(r1, r2);
    }
}
