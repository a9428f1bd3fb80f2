//! Residual simulation with a Narendra-type evaluation filter.

use crate::io::{self, num, CliError, CliResult};
use fdikit::rng::SplitMix;
use fdikit::sslib::{feedthrough_identity, series, time_response, Signal};
use fdikit::{LtiModel, Mat, Vector};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Step,
    Square,
    Sine,
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub col: usize,
    pub kind: Kind,
    pub amp: f64,
    pub freq: f64,
    pub t0: f64,
}

impl SignalSpec {
    fn value(&self, t: f64, rng: &mut SplitMix) -> f64 {
        // the noise stream advances on every sample so that t0 does not shift it
        let w = if self.kind == Kind::Noise { rng.normal() } else { 0.0 };
        if t < self.t0 {
            return 0.0;
        }
        let ph = 2.0 * PI * self.freq * (t - self.t0);
        self.amp
            * match self.kind {
                Kind::Step => 1.0,
                Kind::Square => {
                    if ph.sin() >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Kind::Sine => ph.sin(),
                Kind::Noise => w,
            }
    }
}

/// Parses `COL=KIND:AMP[:FREQ][@T0]`, where `COL` is an input index or `group.index`.
pub fn parse_signal(s: &str, sys: &LtiModel) -> CliResult<SignalSpec> {
    let bad = |msg: &str| CliError::Usage(format!("signal `{s}`: {msg}"));
    let (col, rest) = s.split_once('=').ok_or_else(|| bad("expected COL=KIND:AMP"))?;
    let col = match col.split_once('.') {
        Some((g, k)) => {
            let k: usize = k.parse().map_err(|_| bad("bad group index"))?;
            *sys.group(g).get(k).ok_or_else(|| bad("no such input in the group"))?
        }
        None => col.parse().map_err(|_| bad("bad column"))?,
    };
    if col >= sys.n_in() {
        return Err(bad("column out of range"));
    }
    let (body, t0) = match rest.split_once('@') {
        Some((b, t)) => (b, t.parse().map_err(|_| bad("bad start time"))?),
        None => (rest, 0.0),
    };
    let mut parts = body.split(':');
    let kind = match parts.next() {
        Some("step") => Kind::Step,
        Some("square") => Kind::Square,
        Some("sine") => Kind::Sine,
        Some("noise") => Kind::Noise,
        _ => return Err(bad("kind must be step, square, sine or noise")),
    };
    let amp = parts.next().map(|a| a.parse().map_err(|_| bad("bad amplitude"))).transpose()?.unwrap_or(1.0);
    let freq = parts.next().map(|a| a.parse().map_err(|_| bad("bad frequency"))).transpose()?.unwrap_or(1.0);
    Ok(SignalSpec { col, kind, amp, freq, t0 })
}

/// `theta = alpha |r| + beta sqrt(x)`, with `x` the output of `1/(s + gamma)` driven by `|r|^2`.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Evaluator {
    pub fn evaluate(&self, r: &Mat, h: f64) -> Vec<f64> {
        let (phi, gam) = if self.gamma > 0.0 {
            let phi = (-self.gamma * h).exp();
            (phi, (1.0 - phi) / self.gamma)
        } else {
            (1.0, h)
        };
        let mut x = 0.0f64;
        (0..r.nrows())
            .map(|k| {
                let e = r.row(k).norm_squared();
                let th = self.alpha * e.sqrt() + self.beta * x.max(0.0).sqrt();
                x = phi * x + gam * e;
                th
            })
            .collect()
    }
}

pub struct Setup {
    pub tf: f64,
    pub dt: f64,
    pub signals: Vec<SignalSpec>,
    pub eval: Evaluator,
    pub threshold: Vec<f64>,
    pub seed: u64,
}

/// Filter implementation forms from a synthesis output, a detection bank or a model file.
pub fn load_filters(path: &Path) -> CliResult<Vec<Option<LtiModel>>> {
    let v = io::read_json(path)?;
    let one = |m: &Value| if m.is_null() { Ok(None) } else { io::model_from(m).map(Some) };
    if let Some(list) = v.get("filters").and_then(|f| f.as_array()) {
        return list.iter().map(|f| if f.is_null() { Ok(None) } else { one(f.get("q").unwrap_or(&Value::Null)) }).collect();
    }
    if let Some(list) = v.get("q").and_then(|f| f.as_array()) {
        return list.iter().map(one).collect();
    }
    Ok(vec![Some(io::model_from(&v)?)])
}

pub struct Outcome {
    pub t: Vec<f64>,
    pub r: Vec<Option<Mat>>,
    pub theta: Vec<Option<Vec<f64>>>,
    pub threshold: Vec<f64>,
}

pub fn run(sys: &LtiModel, filters: &[Option<LtiModel>], setup: &Setup) -> CliResult<Outcome> {
    let h = if sys.ts > 0.0 { sys.ts } else { setup.dt };
    if !(h > 0.0) || !(setup.tf >= 0.0) {
        return Err(CliError::Usage("the step and final time must be positive".into()));
    }
    let t = Signal::grid(setup.tf, h);
    let m = sys.n_in();
    let mut u = Mat::zeros(t.len(), m);
    for s in &setup.signals {
        let mut rng = SplitMix::new(setup.seed.wrapping_add(s.col as u64));
        for (k, &tk) in t.iter().enumerate() {
            u[(k, s.col)] += s.value(tk, &mut rng);
        }
    }
    // the cascade filter * [G; I] is discretized as a whole so that decoupling is exact
    let aug = feedthrough_identity(&sys.to_standard()?, sys.group("controls"));
    let input = Signal::new(t.clone(), u)?;
    let mut rs = Vec::with_capacity(filters.len());
    let mut theta = Vec::with_capacity(filters.len());
    for (i, q) in filters.iter().enumerate() {
        let Some(q) = q else {
            rs.push(None);
            theta.push(None);
            continue;
        };
        if q.n_in() != aug.n_out() {
            return Err(CliError::Usage(format!(
                "filter {i} has {} inputs, the model provides {} outputs and controls",
                q.n_in(),
                aug.n_out()
            )));
        }
        let cascade = series(q, &aug)?;
        let r = time_response(&cascade, &input, &Vector::zeros(cascade.to_standard()?.order()))?.u;
        theta.push(Some(setup.eval.evaluate(&r, h)));
        rs.push(Some(r));
    }
    let threshold = match setup.threshold.len() {
        0 => vec![],
        1 => vec![setup.threshold[0]; filters.len()],
        n if n == filters.len() => setup.threshold.clone(),
        n => return Err(CliError::Usage(format!("{n} thresholds for {} filters", filters.len()))),
    };
    Ok(Outcome { t, r: rs, theta, threshold })
}

impl Outcome {
    pub fn csv(&self) -> String {
        let mut head = vec!["t".to_string()];
        for (i, r) in self.r.iter().enumerate() {
            if let Some(r) = r {
                head.extend((0..r.ncols()).map(|k| format!("r{i}_{k}")));
                head.push(format!("theta{i}"));
            }
        }
        for (i, r) in self.r.iter().enumerate() {
            if r.is_some() && !self.threshold.is_empty() {
                head.push(format!("iota{i}"));
            }
        }
        let mut out = head.join(",");
        out.push('\n');
        for (k, &tk) in self.t.iter().enumerate() {
            let mut row = vec![io::g17(tk)];
            for (r, th) in self.r.iter().zip(&self.theta) {
                if let (Some(r), Some(th)) = (r, th) {
                    row.extend(r.row(k).iter().map(|&x| io::g17(x)));
                    row.push(io::g17(th[k]));
                }
            }
            if !self.threshold.is_empty() {
                for (th, &tau) in self.theta.iter().zip(&self.threshold) {
                    if let Some(th) = th {
                        row.push(if th[k] > tau { "1".into() } else { "0".into() });
                    }
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn finals(&self) -> Vec<f64> {
        self.theta.iter().map(|th| th.as_ref().and_then(|v| v.last().copied()).unwrap_or(f64::NAN)).collect()
    }

    pub fn summary(&self) {
        let f = self.finals();
        println!("samples: {}", self.t.len());
        println!("final theta: {}", f.iter().map(|x| io::gfmt(*x, 6)).collect::<Vec<_>>().join(" "));
        if !self.threshold.is_empty() {
            let d: Vec<String> = f.iter().zip(&self.threshold).map(|(x, t)| if x > t { "1".into() } else { "0".into() }).collect();
            println!("decision: {}", d.join(" "));
        }
    }

    pub fn report(&self) -> Value {
        let f = self.finals();
        let peak: Vec<Value> = self
            .theta
            .iter()
            .map(|th| num(th.as_ref().map(|v| v.iter().cloned().fold(0.0, f64::max)).unwrap_or(f64::NAN)))
            .collect();
        let decision: Vec<Value> = if self.threshold.is_empty() {
            vec![]
        } else {
            f.iter().zip(&self.threshold).map(|(x, t)| Value::from((x > t) as u8)).collect()
        };
        json!({ "report": {
            "samples": self.t.len(),
            "theta_final": f.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "theta_peak": peak,
            "decision": decision,
        } })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluator_matches_closed_form_for_constant_residual() {
        // |r| = 1: x(t) = (1 - exp(-gamma t)) / gamma
        let ev = Evaluator { alpha: 0.9, beta: 0.1, gamma: 10.0 };
        let h = 0.01;
        let r = Mat::from_element(201, 1, 1.0);
        let th = ev.evaluate(&r, h);
        for (k, v) in th.iter().enumerate() {
            let t = k as f64 * h;
            let want = 0.9 + 0.1 * ((1.0 - (-10.0 * t).exp()) / 10.0).sqrt();
            assert!((v - want).abs() < 1e-12, "{k}: {v} vs {want}");
        }
    }

    #[test]
    fn signal_parsing() {
        let sys = fdikit::benchmarks::unstable_plant().unwrap();
        let f = sys.group("faults")[1];
        let s = parse_signal("faults.1=square:2:0.5@1.5", &sys).unwrap();
        assert_eq!(s, SignalSpec { col: f, kind: Kind::Square, amp: 2.0, freq: 0.5, t0: 1.5 });
        assert_eq!(parse_signal("0=step:1", &sys).unwrap().kind, Kind::Step);
        assert!(parse_signal("9=step:1", &sys).is_err());
        assert!(parse_signal("0=ramp:1", &sys).is_err());
    }
}
