//! Poles, zeros, frequency gains and system norms.

use crate::numkern::dense::{self, svd_full, EPS};
use crate::numkern::{solve_lyapunov, Kind};
use crate::sslib::{freqresp, lambda_of, minimal_realization, LtiModel};
use crate::{CMat, FdiError, Mat, Result, C64};

/// Default offset of the stability boundary.
pub const BOUNDARY_OFFSET: f64 = 1.4901e-8;

/// Eigenvalues of the given realization (not reduced).
pub fn realization_poles(sys: &LtiModel) -> Result<Vec<C64>> {
    let s = sys.to_standard()?;
    dense::eigenvalues(&s.a)
}

/// Poles of a minimal realization.
pub fn poles(sys: &LtiModel) -> Result<Vec<C64>> {
    let m = minimal_realization(sys, 0.0)?;
    dense::eigenvalues(&m.a)
}

/// True if every pole of the realization lies inside the region bounded by `margin`:
/// `Re < margin` (continuous) or `|z| < margin` (discrete).
pub fn is_stable_with(sys: &LtiModel, margin: f64) -> Result<bool> {
    let p = realization_poles(sys)?;
    Ok(if sys.is_discrete() {
        p.iter().all(|z| z.norm() < margin)
    } else {
        p.iter().all(|z| z.re < margin)
    })
}

pub fn is_stable(sys: &LtiModel) -> Result<bool> {
    is_stable_with(sys, if sys.is_discrete() { 1.0 } else { 0.0 })
}

fn scale4(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> f64 {
    [a, b, c, d].iter().map(|m| dense::norm1(m)).fold(1.0, f64::max)
}

/// One pass of the zero-preserving reduction; returns a system whose D has full row rank.
fn reduce_rows(mut a: Mat, mut b: Mat, mut c: Mat, mut d: Mat, tol: f64) -> (Mat, Mat, Mat, Mat) {
    loop {
        let p = d.nrows();
        let n = a.nrows();
        let (u, s, _) = svd_full(&d);
        let r = dense::rank_of(&s, tol);
        if r == p {
            return (a, b, c, d);
        }
        let ut = u.transpose();
        let dt = &ut * &d;
        let ct = &ut * &c;
        let d1 = dt.rows(0, r).into_owned();
        let c1 = ct.rows(0, r).into_owned();
        let c2 = ct.rows(r, p - r).into_owned();
        if n == 0 {
            return (a, b, c1, d1);
        }
        let (_, s2, v2) = svd_full(&c2);
        let rho = dense::rank_of(&s2, tol);
        if rho == 0 {
            c = c1;
            d = d1;
            continue;
        }
        // Columns ordered so that C2 * T = [0, C22].
        let mut t = Mat::zeros(n, n);
        for j in 0..n - rho {
            t.set_column(j, &v2.column(rho + j));
        }
        for j in 0..rho {
            t.set_column(n - rho + j, &v2.column(j));
        }
        let at = t.transpose() * &a * &t;
        let bt = t.transpose() * &b;
        let c1t = &c1 * &t;
        let n1 = n - rho;
        let a11 = at.view((0, 0), (n1, n1)).into_owned();
        let a21 = at.view((n1, 0), (rho, n1)).into_owned();
        let b1 = bt.rows(0, n1).into_owned();
        let b2 = bt.rows(n1, rho).into_owned();
        let c11 = c1t.columns(0, n1).into_owned();
        a = a11;
        b = b1;
        c = dense::vstack(&[&c11, &a21]);
        d = dense::vstack(&[&d1, &b2]);
    }
}

/// Finite transmission zeros of a minimal realization.
///
/// `tol == 0` selects `1000 * dim * eps * scale` for the rank decisions.
pub fn zeros(sys: &LtiModel, tol: f64) -> Result<Vec<C64>> {
    let s = minimal_realization(sys, 0.0)?;
    let scale = scale4(&s.a, &s.b, &s.c, &s.d);
    let dim = s.order().max(s.n_in()).max(s.n_out()).max(1) as f64;
    let tol = if tol > 0.0 { tol } else { 1e3 * dim * EPS * scale };
    let (a, b, c, d) = reduce_rows(s.a.clone(), s.b.clone(), s.c.clone(), s.d.clone(), tol);
    let (a, b, c, d) = reduce_rows(a.transpose(), c.transpose(), b.transpose(), d.transpose(), tol);
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    if d.nrows() != d.ncols() {
        return Err(FdiError::Rank("zero computation did not reach a square feedthrough".into()));
    }
    if d.nrows() == 0 {
        return dense::eigenvalues(&a);
    }
    let f = a - &b * dense::solve(&d, &c)?;
    dense::eigenvalues(&f)
}

/// Frequency response and column 2-norms at each real frequency.
pub fn gain_at(sys: &LtiModel, omegas: &[f64]) -> Result<Vec<(CMat, Vec<f64>)>> {
    omegas
        .iter()
        .map(|&w| {
            let g = freqresp(sys, lambda_of(sys.ts, w)).map_err(|_| FdiError::PoleOnGrid(w))?;
            let norms = (0..g.ncols()).map(|j| g.column(j).norm()).collect();
            Ok((g, norms))
        })
        .collect()
}

/// Continuous-time equivalent under `s = (z - 1) / (z + 1)`; norms and inner
/// properties are preserved. Frequencies map as `θ = 2 atan(ω)`.
pub fn bilinear_to_continuous(sys: &LtiModel) -> Result<LtiModel> {
    let s = sys.to_standard()?;
    let n = s.order();
    let ap = &s.a + Mat::identity(n, n);
    let api = dense::inverse(&ap).map_err(|_| FdiError::BoundaryPole)?;
    let r2 = 2f64.sqrt();
    Ok(LtiModel {
        a: &api * (&s.a - Mat::identity(n, n)),
        e: None,
        b: &api * &s.b * r2,
        c: &s.c * &api * r2,
        d: &s.d - &s.c * &api * &s.b,
        ts: 0.0,
        ..s
    })
}

/// Inverse of [`bilinear_to_continuous`], producing sample time `ts`.
pub fn bilinear_to_discrete(sys: &LtiModel, ts: f64) -> Result<LtiModel> {
    let s = sys.to_standard()?;
    let n = s.order();
    let im = Mat::identity(n, n) - &s.a;
    let imi = dense::inverse(&im).map_err(|_| FdiError::BoundaryPole)?;
    let r2 = 2f64.sqrt();
    Ok(LtiModel {
        a: (Mat::identity(n, n) + &s.a) * &imi,
        e: None,
        b: &imi * &s.b * r2,
        c: &s.c * &imi * r2,
        d: &s.d + &s.c * &imi * &s.b,
        ts,
        ..s
    })
}

fn sigma_max(sys: &LtiModel, w: f64) -> Result<f64> {
    let g = freqresp(sys, C64::new(0.0, w))?;
    Ok(dense::cnorm2(&g))
}

fn hinf_continuous(sys: &LtiModel, offset: f64) -> Result<(f64, f64)> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let n = a.nrows();
    let dn = dense::svd_full(d).1.first().copied().unwrap_or(0.0);
    if n == 0 || b.ncols() == 0 || c.nrows() == 0 {
        return Ok((dn, f64::INFINITY));
    }
    let poles = dense::eigenvalues(a)?;
    if poles.iter().any(|z| z.re.abs() <= offset * (1.0 + z.norm())) {
        return Err(FdiError::BoundaryPole);
    }
    let mut lb = dn;
    let mut peak = f64::INFINITY;
    let mut probe = vec![0.0];
    for z in &poles {
        probe.push(z.norm());
        probe.push(z.im.abs());
    }
    for &w in &probe {
        let g = sigma_max(sys, w)?;
        if g > lb {
            lb = g;
            peak = w;
        }
    }
    if lb <= 1e-300 {
        return Ok((0.0, 0.0));
    }
    let (p, m) = d.shape();
    for _ in 0..60 {
        let gamma = (1.0 + 2e-10) * lb;
        let r = Mat::identity(m, m) * (gamma * gamma) - d.transpose() * d;
        let ri = match dense::inverse(&r) {
            Ok(x) => x,
            Err(_) => break,
        };
        let a1 = a + b * &ri * d.transpose() * c;
        let g12 = b * &ri * b.transpose();
        let g21 = -(c.transpose() * (Mat::identity(p, p) + d * &ri * d.transpose()) * c);
        let mut h = Mat::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&a1);
        h.view_mut((0, n), (n, n)).copy_from(&g12);
        h.view_mut((n, 0), (n, n)).copy_from(&g21);
        h.view_mut((n, n), (n, n)).copy_from(&(-a1.transpose()));
        let hn = h.norm();
        let eig = dense::eigenvalues(&h)?;
        let mut ws: Vec<f64> = eig
            .iter()
            .filter(|z| z.re.abs() <= 1e-7 * hn.max(1.0) && z.im >= 0.0)
            .map(|z| z.im)
            .collect();
        if ws.is_empty() {
            break;
        }
        ws.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut cand: Vec<f64> = ws.windows(2).map(|v| 0.5 * (v[0] + v[1])).collect();
        cand.extend(ws.iter().copied());
        let mut improved = false;
        for w in cand {
            let g = sigma_max(sys, w)?;
            if g > lb * (1.0 + 1e-14) {
                lb = g;
                peak = w;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((lb, peak))
}

/// L∞ norm and peak frequency with a custom boundary offset.
pub fn norm_hinf_with(sys: &LtiModel, offset: f64) -> Result<(f64, f64)> {
    let s = sys.to_standard()?;
    if s.n_in() == 0 || s.n_out() == 0 {
        return Ok((0.0, 0.0));
    }
    let s = if s.order() > 0 && has_boundary_pole(&s, offset)? { minimal_realization(&s, 0.0)? } else { s };
    if s.is_discrete() {
        let ts = s.ts;
        let c = bilinear_to_continuous(&s)?;
        let (v, wc) = hinf_continuous(&c, offset)?;
        let theta = if wc.is_infinite() { std::f64::consts::PI } else { 2.0 * wc.atan() };
        Ok((v, theta / ts))
    } else {
        hinf_continuous(&s, offset)
    }
}

fn has_boundary_pole(s: &LtiModel, offset: f64) -> Result<bool> {
    let p = dense::eigenvalues(&s.a)?;
    Ok(if s.is_discrete() {
        p.iter().any(|z| (z.norm() - 1.0).abs() <= offset)
    } else {
        p.iter().any(|z| z.re.abs() <= offset * (1.0 + z.norm()))
    })
}

/// L∞ norm (H∞ norm for stable systems) and the frequency where it is attained.
pub fn norm_hinf(sys: &LtiModel) -> Result<(f64, f64)> {
    norm_hinf_with(sys, BOUNDARY_OFFSET)
}

/// H2 norm from the controllability gramian.
pub fn norm_h2(sys: &LtiModel) -> Result<f64> {
    let s = sys.to_standard()?;
    let scale = scale4(&s.a, &s.b, &s.c, &s.d);
    if !s.is_discrete() && s.d.iter().any(|x| x.abs() > 1e-14 * scale) {
        return Err(FdiError::NonzeroFeedthrough);
    }
    let dd: f64 = if s.is_discrete() { s.d.iter().map(|x| x * x).sum() } else { 0.0 };
    if s.order() == 0 {
        return Ok(dd.sqrt());
    }
    let kind = Kind::from_ts(s.ts);
    let s = if is_stable(&s)? { s } else { minimal_realization(&s, 0.0)? };
    if !is_stable(&s)? {
        return Err(FdiError::Unstable);
    }
    let bb = &s.b * s.b.transpose();
    let p = solve_lyapunov(&s.a.transpose(), None, &bb, kind)?;
    let v = (&s.c * p * s.c.transpose()).trace() + dd;
    Ok(v.max(0.0).sqrt())
}

/// Column-wise L∞ norms.
pub fn column_hinf(sys: &LtiModel) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..sys.n_out()).collect();
    (0..sys.n_in())
        .map(|j| norm_hinf(&sys.select(&rows, &[j])?).map(|x| x.0))
        .collect()
}

/// H∞- index over all input columns, or its finite-grid variant when `freqs` is given.
pub fn hinf_minus_index(sys: &LtiModel, freqs: Option<&[f64]>) -> Result<f64> {
    if sys.n_in() == 0 {
        return Ok(0.0);
    }
    match freqs {
        Some(f) if !f.is_empty() => {
            let g = gain_at(sys, f)?;
            let m = sys.n_in();
            Ok((0..m)
                .map(|j| g.iter().map(|(_, n)| n[j]).fold(f64::INFINITY, f64::min))
                .fold(f64::INFINITY, f64::min))
        }
        _ => {
            if !is_stable(sys)? && !is_stable(&minimal_realization(sys, 0.0)?)? {
                return Err(FdiError::Unstable);
            }
            Ok(column_hinf(sys)?.into_iter().fold(f64::INFINITY, f64::min))
        }
    }
}
