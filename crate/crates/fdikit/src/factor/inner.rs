//! Co-outer–co-inner and normalized coprime factorizations.

use crate::numkern::{dense, solve_care_ext};
use crate::sslib::LtiModel;
use crate::sysnorms::{self, bilinear_to_continuous, bilinear_to_discrete, BOUNDARY_OFFSET};
use crate::{FdiError, Mat, Result};

/// Factors of `sys = outer * inner`.
#[derive(Debug, Clone)]
pub struct CoOuterInner {
    pub outer: LtiModel,
    pub inner: LtiModel,
    pub rank: usize,
    pub nonstandard: bool,
}

/// Injection data of a continuous co-outer factor `Go = (A, K L, C, L)`.
#[derive(Debug, Clone)]
pub struct OuterGain {
    pub k: Mat,
    pub l: Mat,
    pub boundary: bool,
}

impl OuterGain {
    /// `Go^-1 X` for `X = (A, bx, C, dx)` sharing `A` and `C` with the factored system.
    pub fn apply_inverse(&self, x: &LtiModel) -> Result<LtiModel> {
        let li = dense::inverse(&self.l)?;
        Ok(LtiModel {
            a: &x.a - &self.k * &x.c,
            b: &x.b - &self.k * &x.d,
            c: &li * &x.c,
            d: &li * &x.d,
            ..x.clone()
        })
    }
}

fn lower_factor(r: &Mat) -> Result<Mat> {
    nalgebra::Cholesky::new(dense::symmetrize(r))
        .map(|c| c.l())
        .ok_or_else(|| FdiError::Rank("spectral weight is not positive definite".into()))
}

/// Filter Riccati gain for a continuous stable system whose feedthrough has full row rank.
pub fn outer_gain(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<OuterGain> {
    let r = d * d.transpose();
    let l = lower_factor(&r)?;
    let (sol, boundary) = solve_care_ext(
        &a.transpose(),
        &c.transpose(),
        &(b * b.transpose()),
        &r,
        Some(&(b * d.transpose())),
        true,
    )?;
    Ok(OuterGain { k: sol.gain.transpose(), l, boundary })
}

fn continuous_factor(s: &LtiModel) -> Result<CoOuterInner> {
    let (p, m) = (s.n_out(), s.n_in());
    let scale = dense::norm1(&s.d).max(sysnorms::norm_hinf(s)?.0);
    if scale <= 1e-14 || p == 0 {
        return Ok(CoOuterInner {
            outer: LtiModel::zero(p, 0, s.ts),
            inner: LtiModel::zero(0, m, s.ts),
            rank: 0,
            nonstandard: false,
        });
    }
    let rd = dense::rank(&s.d, 1e-10 * scale);
    if rd < p {
        // Zeros at infinity: keep the system and report a scaled factor.
        let outer = LtiModel::gain(Mat::identity(p, p) * scale, s.ts);
        let inner = s.scale(1.0 / scale);
        return Ok(CoOuterInner { outer, inner, rank: p, nonstandard: true });
    }
    let g = outer_gain(&s.a, &s.b, &s.c, &s.d)?;
    let li = dense::inverse(&g.l)?;
    let outer = LtiModel {
        a: s.a.clone(),
        e: None,
        b: &g.k * &g.l,
        c: s.c.clone(),
        d: g.l.clone(),
        ts: s.ts,
        in_groups: Default::default(),
        out_groups: s.out_groups.clone(),
    };
    let inner = LtiModel {
        a: &s.a - &g.k * &s.c,
        e: None,
        b: &s.b - &g.k * &s.d,
        c: &li * &s.c,
        d: &li * &s.d,
        ts: s.ts,
        in_groups: s.in_groups.clone(),
        out_groups: Default::default(),
    };
    let mut nonstandard = g.boundary;
    if !nonstandard && outer.order() > 0 {
        let z = sysnorms::zeros(&outer, 0.0)?;
        nonstandard = z.iter().any(|z| z.re.abs() <= BOUNDARY_OFFSET.sqrt());
    }
    Ok(CoOuterInner { outer, inner, rank: p, nonstandard })
}

/// Quasi-co-outer–co-inner factorization of a stable system.
pub fn coouter_coinner(sys: &LtiModel) -> Result<CoOuterInner> {
    let s = sys.to_standard()?;
    if !sysnorms::is_stable(&s)? {
        return Err(FdiError::Unstable);
    }
    if s.is_discrete() {
        let c = bilinear_to_continuous(&s)?;
        let f = continuous_factor(&c)?;
        return Ok(CoOuterInner {
            outer: bilinear_to_discrete(&f.outer, s.ts)?,
            inner: bilinear_to_discrete(&f.inner, s.ts)?,
            ..f
        });
    }
    continuous_factor(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn transpose(s: &LtiModel) -> LtiModel {
    LtiModel {
        a: s.a.transpose(),
        e: None,
        b: s.c.transpose(),
        c: s.b.transpose(),
        d: s.d.transpose(),
        ts: s.ts,
        in_groups: Default::default(),
        out_groups: Default::default(),
    }
}

fn left_ncf_continuous(s: &LtiModel) -> Result<(LtiModel, LtiModel)> {
    let p = s.n_out();
    let r = Mat::identity(p, p) + &s.d * s.d.transpose();
    let l = lower_factor(&r)?;
    let li = dense::inverse(&l)?;
    let (sol, _) = solve_care_ext(
        &s.a.transpose(),
        &s.c.transpose(),
        &(&s.b * s.b.transpose()),
        &r,
        Some(&(&s.b * s.d.transpose())),
        false,
    )?;
    let k = sol.gain.transpose();
    let a = &s.a - &k * &s.c;
    let c = &li * &s.c;
    let n = LtiModel { a: a.clone(), e: None, b: &s.b - &k * &s.d, c: c.clone(), d: &li * &s.d, ..s.clone() };
    let m = LtiModel { a, e: None, b: -k, c, d: li, ts: s.ts, in_groups: Default::default(), out_groups: s.out_groups.clone() };
    Ok((n, m))
}

/// Normalized coprime factors: `sys = M^-1 N` with `[N M]` co-inner (left), or
/// `sys = N M^-1` with `[N; M]` inner (right). Returns `(N, M)`.
pub fn normalized_coprime(sys: &LtiModel, side: Side) -> Result<(LtiModel, LtiModel)> {
    let s = sys.to_standard()?;
    let work = if s.is_discrete() { bilinear_to_continuous(&s)? } else { s.clone() };
    let (n, m) = match side {
        Side::Left => left_ncf_continuous(&work)?,
        Side::Right => {
            let (nt, mt) = left_ncf_continuous(&transpose(&work))?;
            (transpose(&nt), transpose(&mt))
        }
    };
    if s.is_discrete() {
        Ok((bilinear_to_discrete(&n, s.ts)?, bilinear_to_discrete(&m, s.ts)?))
    } else {
        Ok((n, m))
    }
}
