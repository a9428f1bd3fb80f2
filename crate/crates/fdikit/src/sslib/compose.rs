//! Block interconnections of state-space models.

use super::LtiModel;
use crate::numkern::dense::{blockdiag, hstack, vstack};
use crate::{FdiError, Mat, Result};
use std::collections::BTreeMap;

fn same_ts(g1: &LtiModel, g2: &LtiModel) -> Result<()> {
    if g1.ts != g2.ts && g1.order() > 0 && g2.order() > 0 {
        return Err(FdiError::SampleTime);
    }
    Ok(())
}

fn ts_of(g1: &LtiModel, g2: &LtiModel) -> f64 {
    if g1.order() > 0 { g1.ts } else { g2.ts }
}

/// Product `g1 * g2`: the output of `g2` feeds `g1`.
pub fn series(g1: &LtiModel, g2: &LtiModel) -> Result<LtiModel> {
    same_ts(g1, g2)?;
    if g1.n_in() != g2.n_out() {
        return Err(FdiError::Dimension(format!(
            "series: {} inputs against {} outputs",
            g1.n_in(),
            g2.n_out()
        )));
    }
    let (g1, g2) = (g1.to_standard()?, g2.to_standard()?);
    let (n1, n2) = (g1.order(), g2.order());
    let mut a = Mat::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g1.a);
    a.view_mut((0, n1), (n1, n2)).copy_from(&(&g1.b * &g2.c));
    a.view_mut((n1, n1), (n2, n2)).copy_from(&g2.a);
    let b = vstack(&[&(&g1.b * &g2.d), &g2.b]);
    let c = hstack(&[&g1.c, &(&g1.d * &g2.c)]);
    let d = &g1.d * &g2.d;
    Ok(LtiModel {
        a,
        e: None,
        b,
        c,
        d,
        ts: ts_of(&g1, &g2),
        in_groups: g2.in_groups.clone(),
        out_groups: g1.out_groups.clone(),
    })
}

/// `[g1; g2]` with shared inputs.
pub fn stack_rows(g1: &LtiModel, g2: &LtiModel) -> Result<LtiModel> {
    same_ts(g1, g2)?;
    if g1.n_in() != g2.n_in() {
        return Err(FdiError::Dimension("stack_rows: input counts differ".into()));
    }
    let (g1, g2) = (g1.to_standard()?, g2.to_standard()?);
    Ok(LtiModel {
        a: blockdiag(&g1.a, &g2.a),
        e: None,
        b: vstack(&[&g1.b, &g2.b]),
        c: blockdiag(&g1.c, &g2.c),
        d: vstack(&[&g1.d, &g2.d]),
        ts: ts_of(&g1, &g2),
        in_groups: g1.in_groups.clone(),
        out_groups: BTreeMap::new(),
    })
}

/// `[g1 g2]` with shared outputs. Input groups of `g2` are shifted behind those of `g1`.
pub fn augment_columns(g1: &LtiModel, g2: &LtiModel) -> Result<LtiModel> {
    same_ts(g1, g2)?;
    if g1.n_out() != g2.n_out() {
        return Err(FdiError::Dimension("augment_columns: output counts differ".into()));
    }
    let (g1, g2) = (g1.to_standard()?, g2.to_standard()?);
    let mut in_groups = g1.in_groups.clone();
    let shift = g1.n_in();
    for (name, idx) in &g2.in_groups {
        in_groups.entry(name.clone()).or_default().extend(idx.iter().map(|i| i + shift));
    }
    Ok(LtiModel {
        a: blockdiag(&g1.a, &g2.a),
        e: None,
        b: blockdiag(&g1.b, &g2.b),
        c: hstack(&[&g1.c, &g2.c]),
        d: hstack(&[&g1.d, &g2.d]),
        ts: ts_of(&g1, &g2),
        in_groups,
        out_groups: g1.out_groups.clone(),
    })
}

/// Block diagonal `diag(g1, g2)`.
pub fn append(g1: &LtiModel, g2: &LtiModel) -> Result<LtiModel> {
    same_ts(g1, g2)?;
    let (g1, g2) = (g1.to_standard()?, g2.to_standard()?);
    Ok(LtiModel {
        a: blockdiag(&g1.a, &g2.a),
        e: None,
        b: blockdiag(&g1.b, &g2.b),
        c: blockdiag(&g1.c, &g2.c),
        d: blockdiag(&g1.d, &g2.d),
        ts: ts_of(&g1, &g2),
        in_groups: BTreeMap::new(),
        out_groups: BTreeMap::new(),
    })
}

/// `g1 + g2`.
pub fn parallel(g1: &LtiModel, g2: &LtiModel) -> Result<LtiModel> {
    same_ts(g1, g2)?;
    if g1.n_in() != g2.n_in() || g1.n_out() != g2.n_out() {
        return Err(FdiError::Dimension("parallel: shapes differ".into()));
    }
    let (g1, g2) = (g1.to_standard()?, g2.to_standard()?);
    Ok(LtiModel {
        a: blockdiag(&g1.a, &g2.a),
        e: None,
        b: vstack(&[&g1.b, &g2.b]),
        c: hstack(&[&g1.c, &g2.c]),
        d: &g1.d + &g2.d,
        ts: ts_of(&g1, &g2),
        in_groups: g1.in_groups.clone(),
        out_groups: g1.out_groups.clone(),
    })
}

/// Static left multiplication `k * g`.
pub fn scale_left(k: &Mat, g: &LtiModel) -> Result<LtiModel> {
    if k.ncols() != g.n_out() {
        return Err(FdiError::Dimension("scale_left: shapes differ".into()));
    }
    Ok(LtiModel { c: k * &g.c, d: k * &g.d, out_groups: BTreeMap::new(), ..g.clone() })
}

/// Realization of `[G; I]` where the identity block has `n_in` columns of the inputs
/// listed in `cols`, i.e. `[G(:, cols); I 0]` style stacks used for internal forms.
pub fn feedthrough_identity(g: &LtiModel, ident_cols: &[usize]) -> LtiModel {
    let m = g.n_in();
    let mut sel = Mat::zeros(ident_cols.len(), m);
    for (k, &j) in ident_cols.iter().enumerate() {
        sel[(k, j)] = 1.0;
    }
    let n = g.order();
    LtiModel {
        a: g.a.clone(),
        e: g.e.clone(),
        b: g.b.clone(),
        c: vstack(&[&g.c, &Mat::zeros(ident_cols.len(), n)]),
        d: vstack(&[&g.d, &sel]),
        ts: g.ts,
        in_groups: g.in_groups.clone(),
        out_groups: BTreeMap::new(),
    }
}
