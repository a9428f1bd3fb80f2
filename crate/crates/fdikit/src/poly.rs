//! Real polynomials and their state-space realization as rational rows.

use crate::numkern::dense;
use crate::sslib::LtiModel;
use crate::{Mat, Result, C64};
use std::collections::BTreeMap;

/// Polynomial with real coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(vec![])
    }
    pub fn one() -> Poly {
        Poly(vec![1.0])
    }
    pub fn constant(c: f64) -> Poly {
        Poly(vec![c]).trimmed(0.0)
    }
    /// `s + c`.
    pub fn linear(c: f64) -> Poly {
        Poly(vec![c, 1.0])
    }

    /// Monic polynomial with the given roots; complex roots must come in conjugate pairs.
    pub fn from_roots(roots: &[C64]) -> Poly {
        let mut c = vec![C64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Poly(c.iter().map(|z| z.re).collect())
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|&x| x != 0.0)
    }

    /// Drops trailing coefficients with magnitude `<= tol`.
    pub fn trimmed(mut self, tol: f64) -> Poly {
        while let Some(&x) = self.0.last() {
            if x.abs() <= tol {
                self.0.pop();
            } else {
                break;
            }
        }
        self
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn lead(&self) -> f64 {
        self.degree().map(|d| self.0[d]).unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly(self.0.iter().map(|x| x * k).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly::zero();
        }
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    /// Quotient and remainder of the division by `d` (nonzero).
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.0[dd];
        let mut r = self.0.clone();
        let Some(nd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if nd < dd {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![0.0; nd - dd + 1];
        for k in (dd..=nd).rev() {
            let f = r[k] / lead;
            q[k - dd] = f;
            for j in 0..=dd {
                r[k - dd + j] -= f * d.0[j];
            }
            r[k] = 0.0;
        }
        r.truncate(dd);
        (Poly(q), Poly(r).trimmed(0.0))
    }

    /// Roots via the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let Some(n) = self.degree() else { return Ok(vec![]) };
        if n == 0 {
            return Ok(vec![]);
        }
        let lead = self.0[n];
        let mut comp = Mat::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -self.0[n - 1 - j] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        dense::eigenvalues(&comp)
    }
}

/// Characteristic polynomial `det(sI - A)`.
pub fn charpoly(a: &Mat) -> Result<Poly> {
    if a.nrows() == 0 {
        return Ok(Poly::one());
    }
    Ok(Poly::from_roots(&dense::eigenvalues(a)?))
}

/// Numerator and denominator of the `(i, j)` entry of a standard state-space model.
pub fn siso_tf(sys: &LtiModel, i: usize, j: usize) -> Result<(Poly, Poly)> {
    let e = crate::sslib::minimal_realization(&sys.select(&[i], &[j])?, 0.0)?;
    let den = charpoly(&e.a)?;
    let d = e.d[(0, 0)];
    if e.order() == 0 {
        return Ok((Poly::constant(d), den));
    }
    let shifted = charpoly(&(&e.a - &e.b * &e.c))?;
    let num = shifted.sub(&den).add(&den.scale(d)).trimmed(1e-12 * (1.0 + den.max_abs()));
    Ok((num, den))
}

/// Realizes the row of proper rationals `nums[j] / den` in observer canonical form.
///
/// `den` must be nonzero with degree at least that of every numerator.
pub fn row_realization(nums: &[Poly], den: &Poly, ts: f64) -> LtiModel {
    let dd = den.degree().expect("zero denominator");
    let lead = den.0[dd];
    let den = den.scale(1.0 / lead);
    let m = nums.len();
    let mut a = Mat::zeros(dd, dd);
    for i in 0..dd {
        a[(i, 0)] = -den.coeff(dd - 1 - i);
        if i + 1 < dd {
            a[(i, i + 1)] = 1.0;
        }
    }
    let mut b = Mat::zeros(dd, m);
    let mut d = Mat::zeros(1, m);
    for (j, n) in nums.iter().enumerate() {
        let n = n.scale(1.0 / lead);
        let dj = n.coeff(dd);
        d[(0, j)] = dj;
        let r = n.sub(&den.scale(dj));
        for i in 0..dd {
            b[(i, j)] = r.coeff(dd - 1 - i);
        }
    }
    let mut c = Mat::zeros(1, dd);
    if dd > 0 {
        c[(0, 0)] = 1.0;
    }
    LtiModel { a, e: None, b, c, d, ts, in_groups: BTreeMap::new(), out_groups: BTreeMap::new() }
}

/// Realizes the matrix of proper rationals `nums[i][j] / dens[i]`, one realization per row.
pub fn matrix_realization(nums: &[Vec<Poly>], dens: &[Poly], ts: f64) -> Result<LtiModel> {
    let m = nums.first().map(|r| r.len()).unwrap_or(0);
    let mut out: Option<LtiModel> = None;
    for (row, den) in nums.iter().zip(dens) {
        let r = row_realization(row, den, ts);
        out = Some(match out {
            None => r,
            Some(prev) => crate::sslib::stack_rows(&prev, &r)?,
        });
    }
    Ok(out.unwrap_or_else(|| LtiModel::zero(0, m, ts)))
}

/// Minimal realization of the rational matrix with entries `nums[i][j] / dens[i][j]`.
pub fn tf_matrix(nums: &[Vec<Poly>], dens: &[Vec<Poly>], ts: f64) -> Result<LtiModel> {
    let mut rows_num = Vec::with_capacity(nums.len());
    let mut rows_den = Vec::with_capacity(nums.len());
    for (nr, dr) in nums.iter().zip(dens) {
        let mut common = Poly::one();
        for (k, d) in dr.iter().enumerate() {
            if !nr[k].is_zero() && !dr[..k].iter().zip(&nr[..k]).any(|(e, n)| !n.is_zero() && e == d) {
                common = common.mul(d);
            }
        }
        let row: Vec<Poly> = nr
            .iter()
            .zip(dr)
            .map(|(n, d)| if n.is_zero() { Poly::zero() } else { n.mul(&common.divrem(d).0) })
            .collect();
        rows_num.push(row);
        rows_den.push(common);
    }
    let g = matrix_realization(&rows_num, &rows_den, ts)?;
    crate::sslib::minimal_realization(&g, 0.0)
}
