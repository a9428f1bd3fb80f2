//! Filter realizations that carry their internal form on shared state matrices.

use crate::numkern::dense;
use crate::sslib::{minimal_realization, series, LtiModel};
use crate::{FdiError, Mat, Result};
use std::collections::BTreeMap;

/// A filter `Q` (inputs `[y; u]`) and its internal form `R = Q [G; S_u]`
/// (inputs: all system inputs), realized with common `A` and `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub a: Mat,
    pub c: Mat,
    pub bq: Mat,
    pub dq: Mat,
    pub br: Mat,
    pub dr: Mat,
    pub ts: f64,
    /// Input groups of the internal form (copied from the system).
    pub r_groups: BTreeMap<String, Vec<usize>>,
    /// Number of measured outputs `p`; the remaining filter inputs are controls.
    pub p: usize,
}

impl FilterPair {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn q(&self) -> LtiModel {
        let mu = self.dq.ncols() - self.p;
        let mut in_groups = BTreeMap::new();
        if self.p > 0 {
            in_groups.insert("outputs".to_string(), (0..self.p).collect());
        }
        if mu > 0 {
            in_groups.insert("controls".to_string(), (self.p..self.p + mu).collect());
        }
        let mut out_groups = BTreeMap::new();
        if self.rows() > 0 {
            out_groups.insert("residuals".to_string(), (0..self.rows()).collect());
        }
        LtiModel {
            a: self.a.clone(),
            e: None,
            b: self.bq.clone(),
            c: self.c.clone(),
            d: self.dq.clone(),
            ts: self.ts,
            in_groups,
            out_groups,
        }
    }

    pub fn r(&self) -> LtiModel {
        let mut out_groups = BTreeMap::new();
        if self.rows() > 0 {
            out_groups.insert("residuals".to_string(), (0..self.rows()).collect());
        }
        LtiModel {
            a: self.a.clone(),
            e: None,
            b: self.br.clone(),
            c: self.c.clone(),
            d: self.dr.clone(),
            ts: self.ts,
            in_groups: self.r_groups.clone(),
            out_groups,
        }
    }

    /// Output injection `A + K C`.
    pub fn inject(&mut self, k: &Mat) {
        self.a += k * &self.c;
        self.bq += k * &self.dq;
        self.br += k * &self.dr;
    }

    /// Static left factor `H`.
    pub fn left_mul(&self, h: &Mat) -> FilterPair {
        FilterPair { c: h * &self.c, dq: h * &self.dq, dr: h * &self.dr, ..self.clone() }
    }

    /// Stacks the outputs of two pairs built for the same system.
    pub fn stack(&self, o: &FilterPair) -> Result<FilterPair> {
        if self.dq.ncols() != o.dq.ncols() || self.dr.ncols() != o.dr.ncols() {
            return Err(FdiError::Dimension("cannot stack filters of different systems".into()));
        }
        Ok(FilterPair {
            a: dense::blockdiag(&self.a, &o.a),
            c: dense::blockdiag(&self.c, &o.c),
            bq: dense::vstack(&[&self.bq, &o.bq]),
            dq: dense::vstack(&[&self.dq, &o.dq]),
            br: dense::vstack(&[&self.br, &o.br]),
            dr: dense::vstack(&[&self.dr, &o.dr]),
            ..self.clone()
        })
    }

    /// Empty pair with zero rows.
    pub fn empty(p: usize, mu: usize, m: usize, ts: f64, r_groups: BTreeMap<String, Vec<usize>>) -> FilterPair {
        FilterPair {
            a: Mat::zeros(0, 0),
            c: Mat::zeros(0, 0),
            bq: Mat::zeros(0, p + mu),
            dq: Mat::zeros(0, p + mu),
            br: Mat::zeros(0, m),
            dr: Mat::zeros(0, m),
            ts,
            r_groups,
            p,
        }
    }

    /// Internal form restricted to the named input groups.
    pub fn r_of(&self, names: &[&str]) -> LtiModel {
        self.r().columns_of(names)
    }

    /// `[Q R]` as one model.
    pub fn joint(&self) -> LtiModel {
        LtiModel {
            a: self.a.clone(),
            e: None,
            b: dense::hstack(&[&self.bq, &self.br]),
            c: self.c.clone(),
            d: dense::hstack(&[&self.dq, &self.dr]),
            ts: self.ts,
            in_groups: BTreeMap::new(),
            out_groups: BTreeMap::new(),
        }
    }

    /// Splits a joint model produced from this pair back into `Q` and `R` parts.
    pub fn with_joint(&self, m: &LtiModel) -> FilterPair {
        let k = self.dq.ncols();
        let mr = self.dr.ncols();
        FilterPair {
            a: m.a.clone(),
            c: m.c.clone(),
            bq: m.b.columns(0, k).into_owned(),
            dq: m.d.columns(0, k).into_owned(),
            br: m.b.columns(k, mr).into_owned(),
            dr: m.d.columns(k, mr).into_owned(),
            ts: self.ts,
            r_groups: self.r_groups.clone(),
            p: self.p,
        }
    }

    /// Left factor `M [Q R]`, reduced to a minimal realization.
    pub fn left_apply(&self, m: &LtiModel, tol: f64) -> Result<FilterPair> {
        let prod = series(m, &self.joint())?;
        Ok(self.with_joint(&minimal_realization(&prod, tol)?))
    }

    /// Scales all outputs.
    pub fn scaled(&self, k: f64) -> FilterPair {
        FilterPair { c: &self.c * k, dq: &self.dq * k, dr: &self.dr * k, ..self.clone() }
    }
}
