//! Stabilizing left coprime factorization by output injection.

use crate::numkern::dense;
use crate::numkern::schur::{block_eig, block_size, ordered_schur, swap_blocks};
use crate::sslib::LtiModel;
use crate::{FdiError, Mat, Result, C64};

/// Pole targets and the stability degree that defines "good" eigenvalues.
#[derive(Debug, Clone)]
pub struct PoleTargets {
    sdeg: f64,
    margin: f64,
    reals: Vec<f64>,
    pairs: Vec<C64>,
    discrete: bool,
}

impl PoleTargets {
    /// `sdeg` defaults to `-0.05` (continuous) or `0.95` (discrete).
    pub fn new(sdeg: Option<f64>, poles: &[C64], ts: f64) -> Result<Self> {
        let discrete = ts > 0.0;
        let sdeg = sdeg.unwrap_or(if discrete { 0.95 } else { -0.05 });
        let stable = |z: C64| if discrete { z.norm() < 1.0 } else { z.re < 0.0 };
        if !stable(C64::new(sdeg, 0.0)) {
            return Err(FdiError::InvalidOption(format!("stability degree {sdeg} is not stable")));
        }
        let mut reals = Vec::new();
        let mut pairs = Vec::new();
        for &z in poles {
            if !stable(z) {
                return Err(FdiError::InvalidOption(format!("pole {z} is not stable")));
            }
            if z.im == 0.0 {
                reals.push(z.re);
            } else if z.im > 0.0 {
                pairs.push(z);
            }
        }
        Ok(PoleTargets { sdeg, margin: sdeg, reals, pairs, discrete })
    }

    /// Eigenvalues inside the margin (by default the stability degree) are left in place.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn is_good(&self, z: C64) -> bool {
        if self.discrete {
            z.norm() < self.margin.abs().max(1e-300)
        } else {
            z.re < self.margin
        }
    }

    fn next_real(&mut self) -> f64 {
        if self.reals.is_empty() { self.sdeg } else { self.reals.remove(0) }
    }

    /// A real 2x2 matrix carrying the next two targets.
    fn next_block(&mut self) -> Mat {
        if !self.pairs.is_empty() {
            let z = self.pairs.remove(0);
            return Mat::from_row_slice(2, 2, &[z.re, z.im, -z.im, z.re]);
        }
        let (a, b) = (self.next_real(), self.next_real());
        Mat::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }
}

/// Output injection `K` moving every eigenvalue of `A` outside the good region of
/// `targets` into it, with `eig(A + K C)` containing the requested poles.
pub fn stabilizing_injection(a: &Mat, c: &Mat, targets: &PoleTargets) -> Result<Mat> {
    let (n, p) = (a.nrows(), c.nrows());
    let mut targets = targets.clone();
    // Dual state feedback on (A', C').
    let at = a.transpose();
    let bt = c.transpose();
    let os = ordered_schur(&at, &|z| targets.is_good(z))?;
    let (mut t, mut z, k) = (os.t, os.z, os.k);
    let mut f_total = Mat::zeros(p, n);
    let mut placed = k;
    let scale = dense::norm1(a).max(dense::norm1(c)).max(1.0);
    while placed < n {
        let last = if n >= 2 && t[(n - 1, n - 2)] != 0.0 && n - 2 >= placed { 2 } else { 1 };
        let j = n - last;
        let gt = z.transpose() * &bt;
        let g = gt.rows(j, last).into_owned();
        let s = t.view((j, j), (last, last)).into_owned();
        let f = if last == 1 {
            let target = targets.next_real();
            let gn = g.norm_squared();
            if gn.sqrt() <= 1e-10 * scale {
                return Err(FdiError::Uncontrollable(format!("eigenvalue {} cannot be moved", s[(0, 0)])));
            }
            g.transpose() * ((target - s[(0, 0)]) / gn)
        } else {
            place_2x2(&s, &g, &targets.next_block(), scale)?
        };
        // f acts on the block columns j..n.
        let mut ff = Mat::zeros(p, n);
        ff.view_mut((0, j), (p, last)).copy_from(&f);
        t += &gt * &ff;
        f_total += &ff * z.transpose();
        for c0 in 0..n {
            for r in c0 + 2..n {
                t[(r, c0)] = 0.0;
            }
        }
        if last == 2 {
            // The placed 2x2 block may have real eigenvalues; split it.
            let (l1, _) = block_eig(&t, j, 2);
            if l1.im == 0.0 {
                split_real_block(&mut t, &mut z, j);
            }
        } else if j > 0 {
            t[(j, j - 1)] = 0.0;
        }
        // Move the placed blocks up to `placed`.
        let mut pos = j;
        while pos < n {
            let size = block_size(&t, pos);
            let mut at = pos;
            while at > placed {
                let prev = if at >= 2 && at - 2 >= placed && t[(at - 1, at - 2)] != 0.0 { 2 } else { 1 };
                swap_blocks(&mut t, &mut z, at - prev, prev, size)?;
                at -= prev;
            }
            placed += size;
            pos += size;
        }
    }
    Ok(f_total.transpose())
}

fn split_real_block(t: &mut Mat, z: &mut Mat, i: usize) {
    let (l1, _) = block_eig(t, i, 2);
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let v1 = (b, l1.re - a);
    let v2 = (l1.re - d, c);
    let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let r = x.hypot(y);
    if r == 0.0 {
        t[(i + 1, i)] = 0.0;
        return;
    }
    let (cs, sn) = (x / r, y / r);
    let rot = Mat::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
    let rows = t.rows(i, 2).into_owned();
    t.rows_mut(i, 2).copy_from(&(rot.transpose() * rows));
    let cols = t.columns(i, 2).into_owned();
    t.columns_mut(i, 2).copy_from(&(cols * &rot));
    let zc = z.columns(i, 2).into_owned();
    z.columns_mut(i, 2).copy_from(&(zc * &rot));
    t[(i + 1, i)] = 0.0;
}

/// Feedback `f` (p x 2) with `S + G f` similar to `m`.
fn place_2x2(s: &Mat, g: &Mat, m: &Mat, scale: f64) -> Result<Mat> {
    let (_, sv, v) = dense::svd_full(g);
    let tol = 1e-10 * scale;
    if sv.first().copied().unwrap_or(0.0) <= tol {
        return Err(FdiError::Uncontrollable("complex pair cannot be moved".into()));
    }
    if sv.len() >= 2 && sv[1] > 1e-6 * sv[0] {
        let gp = g.clone().pseudo_inverse(1e-12).map_err(|_| FdiError::Rank("pseudo inverse".into()))?;
        return Ok(gp * (m - s));
    }
    // Single input direction: Ackermann on (S, g v1).
    let dir = v.columns(0, 1).into_owned();
    let b = g * &dir;
    let ctrb = dense::hstack(&[&b, &(s * &b)]);
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let ps = s * s - s * tr + Mat::identity(2, 2) * det;
    let e2 = Mat::from_row_slice(1, 2, &[0.0, 1.0]);
    let ci = dense::inverse(&ctrb).map_err(|_| FdiError::Uncontrollable("complex pair cannot be moved".into()))?;
    let kk = -(e2 * ci * ps);
    Ok(dir * kk)
}

/// Stabilizing left coprime factorization `sys = m^-1 n` with `m` and `n` sharing the
/// state matrix `A + K C`; `m` is the identity when `sys` is already good.
pub fn lcf_stabilize(sys: &LtiModel, sdeg: Option<f64>, poles: &[C64]) -> Result<(LtiModel, LtiModel)> {
    let s = sys.to_standard()?;
    let targets = PoleTargets::new(sdeg, poles, s.ts)?;
    let p = s.n_out();
    let k = stabilizing_injection(&s.a, &s.c, &targets)?;
    let a = &s.a + &k * &s.c;
    let n_f = LtiModel { a: a.clone(), b: &s.b + &k * &s.d, ..s.clone() };
    let mut in_groups = std::collections::BTreeMap::new();
    in_groups.insert("outputs".to_string(), (0..p).collect());
    let m_f = LtiModel {
        a,
        e: None,
        b: k,
        c: s.c.clone(),
        d: Mat::identity(p, p),
        ts: s.ts,
        in_groups,
        out_groups: s.out_groups.clone(),
    };
    Ok((n_f, m_f))
}
