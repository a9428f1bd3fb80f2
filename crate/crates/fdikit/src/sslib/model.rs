use crate::numkern::dense;
use crate::{FdiError, Mat, Result};
use std::collections::BTreeMap;

/// Proper descriptor model `E x' = A x + B u`, `y = C x + D u`.
///
/// `e == None` stands for the identity. Sample time `ts == 0` is continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    pub a: Mat,
    pub e: Option<Mat>,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub ts: f64,
    pub in_groups: BTreeMap<String, Vec<usize>>,
    pub out_groups: BTreeMap<String, Vec<usize>>,
}

pub const INPUT_GROUPS: [&str; 5] = ["controls", "disturbances", "faults", "noise", "aux"];

impl LtiModel {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat, ts: f64) -> Result<Self> {
        let m = LtiModel { a, e: None, b, c, d, ts, in_groups: BTreeMap::new(), out_groups: BTreeMap::new() };
        m.validate()?;
        Ok(m)
    }

    pub fn descriptor(a: Mat, e: Mat, b: Mat, c: Mat, d: Mat, ts: f64) -> Result<Self> {
        let mut m = LtiModel::new(a, b, c, d, ts)?;
        if e.shape() != m.a.shape() {
            return Err(FdiError::Dimension("E must have the shape of A".into()));
        }
        if dense::rank(&e, dense::default_tol(&[&e])) < e.nrows() {
            return Err(FdiError::SingularE);
        }
        m.e = Some(e);
        Ok(m)
    }

    /// Static gain `y = D u`.
    pub fn gain(d: Mat, ts: f64) -> Self {
        let (p, m) = d.shape();
        LtiModel {
            a: Mat::zeros(0, 0),
            e: None,
            b: Mat::zeros(0, m),
            c: Mat::zeros(p, 0),
            d,
            ts,
            in_groups: BTreeMap::new(),
            out_groups: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if self.a.ncols() != n {
            return Err(FdiError::Dimension(format!("A is {}x{}", n, self.a.ncols())));
        }
        if self.b.nrows() != n || self.c.ncols() != n {
            return Err(FdiError::Dimension("B rows and C columns must equal the order".into()));
        }
        if self.d.shape() != (self.c.nrows(), self.b.ncols()) {
            return Err(FdiError::Dimension(format!(
                "D is {:?}, expected {}x{}",
                self.d.shape(),
                self.c.nrows(),
                self.b.ncols()
            )));
        }
        if let Some(e) = &self.e {
            if e.shape() != (n, n) {
                return Err(FdiError::Dimension("E must have the shape of A".into()));
            }
        }
        if !(self.ts >= 0.0) || !self.ts.is_finite() {
            return Err(FdiError::InvalidOption(format!("sample time {} must be >= 0", self.ts)));
        }
        let m = self.b.ncols();
        let mut seen = vec![false; m];
        for (name, idx) in &self.in_groups {
            for &i in idx {
                if i >= m {
                    return Err(FdiError::IndexOutOfRange { index: i, limit: m });
                }
                if seen[i] {
                    return Err(FdiError::InvalidOption(format!("input {i} appears in more than one group (`{name}`)")));
                }
                seen[i] = true;
            }
        }
        let p = self.c.nrows();
        for idx in self.out_groups.values() {
            if let Some(&i) = idx.iter().find(|&&i| i >= p) {
                return Err(FdiError::IndexOutOfRange { index: i, limit: p });
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_in(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_out(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_discrete(&self) -> bool {
        self.ts > 0.0
    }

    /// Column indices of an input group; a missing group is empty.
    pub fn group(&self, name: &str) -> &[usize] {
        self.in_groups.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Column indices of an input group that must exist.
    pub fn require_group(&self, name: &str) -> Result<&[usize]> {
        self.in_groups
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| FdiError::UnknownGroup(name.to_string()))
    }

    pub fn with_groups(mut self, groups: &[(&str, Vec<usize>)]) -> Result<Self> {
        for (name, idx) in groups {
            if !idx.is_empty() {
                self.in_groups.insert(name.to_string(), idx.clone());
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Equivalent realization with `E = I`.
    pub fn to_standard(&self) -> Result<LtiModel> {
        match &self.e {
            None => Ok(self.clone()),
            Some(e) => {
                let a = dense::solve(e, &self.a).map_err(|_| FdiError::SingularE)?;
                let b = dense::solve(e, &self.b).map_err(|_| FdiError::SingularE)?;
                Ok(LtiModel { a, e: None, b, ..self.clone() })
            }
        }
    }

    /// Keeps the given output rows and input columns; group labels are remapped.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<LtiModel> {
        let (p, m) = (self.n_out(), self.n_in());
        if let Some(&i) = rows.iter().find(|&&i| i >= p) {
            return Err(FdiError::IndexOutOfRange { index: i, limit: p });
        }
        if let Some(&i) = cols.iter().find(|&&i| i >= m) {
            return Err(FdiError::IndexOutOfRange { index: i, limit: m });
        }
        let mut in_groups = BTreeMap::new();
        for (name, idx) in &self.in_groups {
            let mapped: Vec<usize> = cols
                .iter()
                .enumerate()
                .filter(|(_, c)| idx.contains(c))
                .map(|(k, _)| k)
                .collect();
            if !mapped.is_empty() {
                in_groups.insert(name.clone(), mapped);
            }
        }
        let mut out_groups = BTreeMap::new();
        for (name, idx) in &self.out_groups {
            let mapped: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| idx.contains(r))
                .map(|(k, _)| k)
                .collect();
            if !mapped.is_empty() {
                out_groups.insert(name.clone(), mapped);
            }
        }
        Ok(LtiModel {
            a: self.a.clone(),
            e: self.e.clone(),
            b: dense::select_cols(&self.b, cols),
            c: dense::select_rows(&self.c, rows),
            d: dense::select_rows(&dense::select_cols(&self.d, cols), rows),
            ts: self.ts,
            in_groups,
            out_groups,
        })
    }

    /// Keeps all outputs and the columns of the named input groups, in order.
    pub fn select_groups(&self, names: &[&str]) -> Result<LtiModel> {
        let mut cols = Vec::new();
        for n in names {
            cols.extend_from_slice(self.require_group(n)?);
        }
        let rows: Vec<usize> = (0..self.n_out()).collect();
        self.select(&rows, &cols)
    }

    /// Like [`select_groups`](Self::select_groups) but missing groups count as empty.
    pub fn columns_of(&self, names: &[&str]) -> LtiModel {
        let mut cols = Vec::new();
        for n in names {
            cols.extend_from_slice(self.group(n));
        }
        let rows: Vec<usize> = (0..self.n_out()).collect();
        self.select(&rows, &cols).expect("group indices validated")
    }

    pub fn zero(p: usize, m: usize, ts: f64) -> LtiModel {
        LtiModel::gain(Mat::zeros(p, m), ts)
    }

    pub fn scale(&self, k: f64) -> LtiModel {
        LtiModel { c: &self.c * k, d: &self.d * k, ..self.clone() }
    }
}

/// Column selections for [`fdimodset`]; every list indexes the inputs of the source model
/// except `sensor_faults`, which indexes outputs.
#[derive(Debug, Clone, Default)]
pub struct ModSelection {
    pub controls: Vec<usize>,
    pub disturbances: Vec<usize>,
    pub faults: Vec<usize>,
    pub sensor_faults: Vec<usize>,
    pub noise: Vec<usize>,
    pub aux: Vec<usize>,
}

/// Builds a grouped fault model from an ungrouped one.
///
/// Columns are laid out as controls, disturbances, faults (actuator then sensor), noise, aux.
/// A source column may be selected by several groups; it is then duplicated.
pub fn fdimodset(sys: &LtiModel, sel: &ModSelection) -> Result<LtiModel> {
    let (p, m) = (sys.n_out(), sys.n_in());
    for list in [&sel.controls, &sel.disturbances, &sel.faults, &sel.noise, &sel.aux] {
        if let Some(&i) = list.iter().find(|&&i| i >= m) {
            return Err(FdiError::IndexOutOfRange { index: i, limit: m });
        }
    }
    if let Some(&i) = sel.sensor_faults.iter().find(|&&i| i >= p) {
        return Err(FdiError::IndexOutOfRange { index: i, limit: p });
    }
    let empty = sel.controls.is_empty()
        && sel.disturbances.is_empty()
        && sel.faults.is_empty()
        && sel.sensor_faults.is_empty()
        && sel.noise.is_empty()
        && sel.aux.is_empty();
    if empty {
        let mut out = sys.clone();
        out.in_groups.clear();
        return Ok(out);
    }
    let n = sys.order();
    let mut bcols: Vec<Mat> = Vec::new();
    let mut dcols: Vec<Mat> = Vec::new();
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut next = 0usize;
    let mut push = |name: &str, b: Mat, d: Mat, groups: &mut BTreeMap<String, Vec<usize>>| {
        let k = b.ncols();
        if k > 0 {
            groups.entry(name.to_string()).or_default().extend(next..next + k);
            next += k;
            bcols.push(b);
            dcols.push(d);
        }
    };
    let sc = |idx: &[usize]| (dense::select_cols(&sys.b, idx), dense::select_cols(&sys.d, idx));
    let (b, d) = sc(&sel.controls);
    push("controls", b, d, &mut groups);
    let (b, d) = sc(&sel.disturbances);
    push("disturbances", b, d, &mut groups);
    let (b, d) = sc(&sel.faults);
    push("faults", b, d, &mut groups);
    let mut ds = Mat::zeros(p, sel.sensor_faults.len());
    for (k, &i) in sel.sensor_faults.iter().enumerate() {
        ds[(i, k)] = 1.0;
    }
    push("faults", Mat::zeros(n, sel.sensor_faults.len()), ds, &mut groups);
    let (b, d) = sc(&sel.noise);
    push("noise", b, d, &mut groups);
    let (b, d) = sc(&sel.aux);
    push("aux", b, d, &mut groups);
    let brefs: Vec<&Mat> = bcols.iter().collect();
    let drefs: Vec<&Mat> = dcols.iter().collect();
    let b = if brefs.is_empty() { Mat::zeros(n, 0) } else { dense::hstack(&brefs) };
    let d = if drefs.is_empty() { Mat::zeros(p, 0) } else { dense::hstack(&drefs) };
    let out = LtiModel {
        a: sys.a.clone(),
        e: sys.e.clone(),
        b,
        c: sys.c.clone(),
        d,
        ts: sys.ts,
        in_groups: groups,
        out_groups: BTreeMap::new(),
    };
    out.validate()?;
    Ok(out)
}

/// Ordered collection of component models sharing outputs, controls and sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModel {
    pub components: Vec<LtiModel>,
}

impl MultiModel {
    pub fn new(components: Vec<LtiModel>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| FdiError::InvalidOption("a multiple model needs at least one component".into()))?;
        let p = first.n_out();
        let mu = first.group("controls").len();
        for (j, c) in components.iter().enumerate() {
            c.validate()?;
            if c.n_out() != p {
                return Err(FdiError::Dimension(format!("component {j} has {} outputs, expected {p}", c.n_out())));
            }
            if c.group("controls").len() != mu {
                return Err(FdiError::Dimension(format!("component {j} has a different number of controls")));
            }
            if c.ts != first.ts {
                return Err(FdiError::SampleTime);
            }
        }
        Ok(MultiModel { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
    pub fn n_out(&self) -> usize {
        self.components[0].n_out()
    }
    pub fn n_controls(&self) -> usize {
        self.components[0].group("controls").len()
    }
    pub fn ts(&self) -> f64 {
        self.components[0].ts
    }
}

/// Builds a multiple model: shared control columns plus per-component disturbance
/// and noise columns. Missing per-component lists are empty.
pub fn mdmodset(
    models: &[LtiModel],
    controls: &[usize],
    disturbances: &[Vec<usize>],
    noise: &[Vec<usize>],
) -> Result<MultiModel> {
    if models.is_empty() {
        return Err(FdiError::InvalidOption("a multiple model needs at least one component".into()));
    }
    let p = models[0].n_out();
    let mut comps = Vec::with_capacity(models.len());
    for (j, m) in models.iter().enumerate() {
        if m.n_out() != p {
            return Err(FdiError::Dimension(format!("component {j} has {} outputs, expected {p}", m.n_out())));
        }
        let sel = ModSelection {
            controls: controls.to_vec(),
            disturbances: disturbances.get(j).cloned().unwrap_or_default(),
            noise: noise.get(j).cloned().unwrap_or_default(),
            ..Default::default()
        };
        let mut c = fdimodset(m, &sel)?;
        if controls.is_empty() {
            c.in_groups.remove("controls");
        }
        comps.push(c);
    }
    MultiModel::new(comps)
}
