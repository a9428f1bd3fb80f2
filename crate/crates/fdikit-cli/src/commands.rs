//! Subcommand execution.

use crate::io::{self, num, CliError, CliResult};
use crate::args::{Command, Common, DistArg, FdArgs, MdArgs, MdSynArgs, Measure, NormArg, NormSel, SynArgs};
use fdikit::fdianalysis::{fdichkspec, fdigenspec, fdisspec, fdisspec_bank, fditspec, fditspec_bank, AnalysisOptions, StructureMatrix};
use fdikit::fdiperf::{fdif2ngap_bank, fdifscond_bank, fdimmperf_bank, NormKind, Ratios};
use fdikit::fdisyn::{afdisyn, afdsyn, efdisyn, efdsyn, emmsyn, FdiFilter, Normalize, SynthesisOptions};
use fdikit::mdetect::{amdsyn, emdsyn, mddist, mddist2c, mdgap, mdmatch, mdperf, Closest, DistOptions, Distance, DistanceTable, MdBank, MdOptions, PerfOptions};
use fdikit::{benchmarks, LtiModel, Mat, MultiModel, C64};
use serde_json::{json, Map, Value};
use std::path::Path;

/// Loads a model from a file, or one of the built-in benchmarks by name.
pub fn load_model(spec: &str) -> CliResult<LtiModel> {
    let path = Path::new(spec);
    if !path.exists() {
        let builtin = match spec {
            "yuan" => Some(Ok(benchmarks::yuan())),
            "unstable_plant" => Some(benchmarks::unstable_plant()),
            "noisy_plant" => Some(benchmarks::noisy_plant()),
            "actuator_plant" => Some(benchmarks::actuator_plant()),
            _ => None,
        };
        if let Some(m) = builtin {
            return Ok(m?);
        }
    }
    io::model_from(&io::read_json(path)?)
}

pub fn load_multi(spec: &str) -> CliResult<MultiModel> {
    let path = Path::new(spec);
    if !path.exists() && spec == "aircraft_grid" {
        return Ok(benchmarks::aircraft_grid()?);
    }
    io::multi_from(&io::read_json(path)?)
}

fn opt_model(v: &Value) -> CliResult<Option<LtiModel>> {
    if v.is_null() {
        Ok(None)
    } else {
        io::model_from(v).map(Some)
    }
}

/// Filter list of a synthesis result: `(q, r)` per member.
type Members = Vec<Option<(Option<LtiModel>, LtiModel)>>;

/// Reads a synthesis output, a multiple model (as internal forms) or a single model.
pub fn load_members(path: &Path) -> CliResult<Members> {
    let v = io::read_json(path)?;
    if let Some(list) = v.get("filters").and_then(|f| f.as_array()) {
        return list
            .iter()
            .map(|f| {
                if f.is_null() {
                    return Ok(None);
                }
                let r = io::model_from(f.get("r").ok_or_else(|| CliError::Usage("filter lacks `r`".into()))?)?;
                let q = f.get("q").map(opt_model).transpose()?.flatten();
                Ok(Some((q, r)))
            })
            .collect();
    }
    if let Some(list) = v.get("models").and_then(|f| f.as_array()) {
        return list.iter().map(|m| Ok(opt_model(m)?.map(|r| (None, r)))).collect();
    }
    Ok(vec![Some((None, io::model_from(&v)?))])
}

fn internal_forms(members: &Members) -> Vec<Option<LtiModel>> {
    members.iter().map(|m| m.as_ref().map(|(_, r)| r.clone())).collect()
}

struct LoadedBank {
    q: Vec<Option<LtiModel>>,
    r: Vec<Vec<Option<LtiModel>>>,
}

fn load_bank(path: &Path) -> CliResult<LoadedBank> {
    let v = io::read_json(path)?;
    let bad = || CliError::Usage(format!("{}: not a model detection bank", path.display()));
    let q = v.get("q").and_then(|q| q.as_array()).ok_or_else(bad)?.iter().map(opt_model).collect::<CliResult<Vec<_>>>()?;
    let r = match v.get("r").and_then(|r| r.as_array()) {
        Some(rows) => rows
            .iter()
            .map(|row| row.as_array().ok_or_else(bad)?.iter().map(opt_model).collect::<CliResult<Vec<_>>>())
            .collect::<CliResult<Vec<_>>>()?,
        None => vec![],
    };
    Ok(LoadedBank { q, r })
}

fn emit(common: &Common, v: Value) -> CliResult<()> {
    if let Some(path) = &common.out {
        io::write_json(path, &v)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn row_text(r: &[bool]) -> String {
    r.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(" ")
}

fn print_structure(title: &str, s: &StructureMatrix) {
    println!("{title}: {} rows x {} faults", s.rows(), s.cols);
    for r in s.combined() {
        println!("  {}", row_text(&r));
    }
}

fn fmt(x: f64) -> String {
    io::gfmt(x, 6)
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn usizes(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&x| Value::from(x)).collect())
}

fn analysis(fd: &FdArgs, common: &Common) -> AnalysisOptions {
    AnalysisOptions { tol: common.tol, fdtol: fd.fdtol, fdgaintol: fd.fdgaintol, freqs: fd.fdfreq.clone(), sdeg: fd.sdeg }
}

fn parse_poles(p: &[String]) -> CliResult<Vec<C64>> {
    p.iter().map(|s| io::parse_complex(s).map_err(CliError::Usage)).collect()
}

fn parse_freq(f: &Option<String>) -> CliResult<Option<C64>> {
    f.as_deref().map(|s| io::parse_complex(s).map_err(CliError::Usage)).transpose()
}

fn check_nonstd(n: u32) -> CliResult<()> {
    if n != 1 {
        return Err(CliError::Usage(format!("--nonstd {n} is not supported (only 1)")));
    }
    Ok(())
}

fn synthesis_options(syn: &SynArgs, common: &Common) -> CliResult<SynthesisOptions> {
    check_nonstd(syn.nonstd)?;
    let mut o = SynthesisOptions {
        tol: common.tol,
        fdtol: syn.fd.fdtol,
        fdgaintol: syn.fd.fdgaintol,
        rdim: syn.rdim,
        freqs: syn.fd.fdfreq.clone(),
        smarg: syn.smarg,
        sdeg: syn.fd.sdeg,
        poles: parse_poles(&syn.poles)?,
        nullspace: syn.nullspace,
        minimal: syn.minimal,
        tcond: syn.tcond,
        seed: common.seed,
        gamma: syn.gamma,
        exact: syn.exact,
        freq: parse_freq(&syn.freq)?,
        fdselect: syn.fdselect.clone(),
        normalize: match syn.normalize {
            NormArg::Gain => Normalize::Gain,
            NormArg::Dcgain => Normalize::DcGain,
            NormArg::Infnorm => Normalize::InfNorm,
        },
        ..Default::default()
    };
    if let Some(p) = &syn.sfdi {
        o.sfdi = Some(io::structure_from(&io::read_json(p)?)?);
    }
    if let Some(p) = &syn.hdesign {
        let hs = io::matrices_from(&io::read_json(p)?)?;
        o.hdesign = hs.first().cloned().flatten();
        o.bank_hdesign = hs;
    }
    if let Some(p) = &syn.hdesign2 {
        let hs = io::matrices_from(&io::read_json(p)?)?;
        o.hdesign2 = hs.first().cloned().flatten();
        o.bank_hdesign2 = hs;
    }
    Ok(o)
}

fn opt_mat(m: &Option<Mat>) -> Value {
    m.as_ref().map(io::mat_value).unwrap_or(Value::Null)
}

fn filter_value(f: &FdiFilter) -> Value {
    let i = &f.info;
    let mut rep = Map::new();
    rep.insert("hdesign".into(), opt_mat(&i.hdesign));
    rep.insert("hdesign2".into(), opt_mat(&i.hdesign2));
    rep.insert("degs".into(), usizes(&i.degs));
    rep.insert("degs2".into(), usizes(&i.degs2));
    rep.insert("s".into(), i.s.as_ref().map(io::structure_value).unwrap_or(Value::Null));
    rep.insert("s2".into(), i.s2.as_ref().map(io::structure_value).unwrap_or(Value::Null));
    rep.insert("gap".into(), i.gap.map(num).unwrap_or(Value::Null));
    rep.insert("tcond".into(), num(i.tcond));
    rep.insert("freq".into(), i.freq.map(io::complex_value).unwrap_or(Value::Null));
    rep.insert("seed".into(), Value::from(i.seed));
    rep.insert("order".into(), Value::from(f.q.order()));
    json!({ "q": io::model_value(&f.q), "r": io::model_value(&f.r), "report": Value::Object(rep) })
}

fn summarize_filter(k: usize, f: &Option<FdiFilter>) {
    match f {
        None => println!("filter {k}: none"),
        Some(f) => {
            let gap = f.info.gap.map(|g| format!(", gap {}", fmt(g))).unwrap_or_default();
            println!("filter {k}: {} residual(s), order {}{gap}", f.q.n_out(), f.q.order());
        }
    }
}

fn bank_output(filters: &[Option<FdiFilter>], extra: Map<String, Value>) -> Value {
    for (k, f) in filters.iter().enumerate() {
        summarize_filter(k, f);
    }
    let gaps: Vec<Value> = filters.iter().map(|f| f.as_ref().and_then(|f| f.info.gap).map(num).unwrap_or(Value::Null)).collect();
    let mut rep = extra;
    rep.insert("gap".into(), Value::Array(gaps));
    rep.insert("filters".into(), Value::from(filters.len()));
    json!({
        "filters": filters.iter().map(|f| f.as_ref().map(filter_value).unwrap_or(Value::Null)).collect::<Vec<_>>(),
        "report": Value::Object(rep),
    })
}

fn seeded(common: &Common) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("seed".into(), Value::from(common.seed));
    m
}

fn dist_options(md: &MdArgs, distance: DistArg) -> DistOptions {
    DistOptions {
        mdselect: md.mdselect.clone(),
        distance: match distance {
            DistArg::Nugap => Distance::Nugap,
            DistArg::Hinf => Distance::Hinf,
            DistArg::H2 => Distance::H2,
        },
        mdfreq: md.mdfreq.clone(),
        cdinp: md.cdinp,
        mdindex: md.mdindex,
        ..Default::default()
    }
}

fn perf_options(md: &MdArgs) -> PerfOptions {
    PerfOptions { mdselect: md.mdselect.clone(), mdfreq: md.mdfreq.clone(), cdinp: md.cdinp, mdindex: md.mdindex }
}

fn table_value(t: &DistanceTable) -> Value {
    json!({
        "values": io::mat_value(&t.values),
        "fpeak": io::mat_value(&t.fpeak),
        "perm": t.perm.iter().map(|p| usizes(p)).collect::<Vec<_>>(),
        "rel": nums(&t.rel),
    })
}

fn print_table(title: &str, m: &Mat) {
    println!("{title}:");
    for i in 0..m.nrows() {
        println!("  {}", m.row(i).iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" "));
    }
}

fn closest_value(c: &Closest) -> Value {
    println!("distances: {}", c.values.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" "));
    println!("closest component: {}", c.mind);
    json!({ "values": nums(&c.values), "fpeak": nums(&c.fpeak), "mind": c.mind })
}

fn ratios_value(r: &Ratios) -> Value {
    json!({ "value": nums(&r.value), "beta": nums(&r.beta), "gamma": nums(&r.gamma) })
}

fn md_options(syn: &MdSynArgs, common: &Common) -> CliResult<MdOptions> {
    check_nonstd(syn.nonstd)?;
    let hdesign = match &syn.hdesign {
        Some(p) => io::matrices_from(&io::read_json(p)?)?,
        None => vec![],
    };
    Ok(MdOptions {
        tol: common.tol,
        mdtol: syn.mdtol,
        mdgaintol: syn.mdgaintol,
        rdim: syn.rdim,
        mdfreq: syn.md.mdfreq.clone(),
        emdtest: syn.emdtest,
        smarg: syn.smarg,
        sdeg: syn.sdeg,
        poles: parse_poles(&syn.poles)?,
        nullspace: syn.nullspace,
        minimal: syn.minimal,
        mdselect: syn.md.mdselect.clone(),
        hdesign,
        normalize: syn.normalize,
        seed: common.seed,
        freq: parse_freq(&syn.freq)?,
    })
}

fn md_bank_value(b: &MdBank) -> Value {
    let opt = |m: &Option<LtiModel>| m.as_ref().map(io::model_value).unwrap_or(Value::Null);
    print_table("mdperf", &b.info.mdperf);
    if !b.info.mdgap.is_empty() {
        println!("mdgap: {}", b.info.mdgap.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" "));
    }
    for (i, q) in b.q.iter().enumerate() {
        match q {
            Some(q) => println!("filter {i}: {} residual(s), order {}", q.n_out(), q.order()),
            None => println!("filter {i}: none"),
        }
    }
    json!({
        "q": b.q.iter().map(opt).collect::<Vec<_>>(),
        "r": b.r.iter().map(|row| row.iter().map(opt).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "report": {
            "mdperf": io::mat_value(&b.info.mdperf),
            "mdgap": nums(&b.info.mdgap),
            "hdesign": b.info.hdesign.iter().map(opt_mat).collect::<Vec<_>>(),
            "degs": b.info.degs.iter().map(|d| usizes(d)).collect::<Vec<_>>(),
            "seed": b.info.seed,
        },
    })
}

fn present(rs: Vec<Option<LtiModel>>, ts: f64) -> Vec<LtiModel> {
    rs.into_iter().map(|r| r.unwrap_or_else(|| LtiModel::zero(0, 0, ts))).collect()
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Genspec { model, fd, common } => {
            let sys = load_model(&model)?;
            let s = fdigenspec(&sys, &analysis(&fd, &common))?;
            let kind = if fd.fdfreq.is_empty() { "weak" } else { "strong" };
            print_structure(&format!("achievable {kind} specifications"), &s);
            emit(&common, json!({ "structure": io::structure_value(&s), "report": { "rows": s.rows(), "faults": s.cols, "kind": kind } }))
        }
        Command::Chkspec { model, sfdi, fd, common } => {
            let sys = load_model(&model)?;
            let s = io::structure_from(&io::read_json(&sfdi)?)?;
            let c = fdichkspec(&sys, &s, &analysis(&fd, &common), common.seed)?;
            println!("feasible rows: {}", c.rdims.iter().filter(|&&r| r > 0).count());
            println!("rdims: {:?}", c.rdims);
            println!("orders: {:?}", c.orders);
            println!("leastorders: {:?}", c.leastorders);
            let feasible: Vec<Value> = c.rdims.iter().map(|&r| Value::Bool(r > 0)).collect();
            emit(
                &common,
                json!({ "report": {
                    "rdims": usizes(&c.rdims),
                    "orders": c.orders,
                    "leastorders": c.leastorders,
                    "feasible": feasible,
                } }),
            )
        }
        Command::Tspec { model, fdtol, fdfreq, block, common } => {
            let members = load_model_or_members(&model)?;
            let s = match members {
                Either::One(r) => fditspec(&r, common.tol, fdtol, &fdfreq, block)?,
                Either::Many(rs, ts) => fditspec_bank(&present(rs, ts), common.tol, fdtol, &fdfreq)?,
            };
            print_structure("structure matrix", &s);
            emit(&common, json!({ "structure": io::structure_value(&s) }))
        }
        Command::Sspec { model, fdgaintol, fdfreq, block, common } => {
            let members = load_model_or_members(&model)?;
            let (s, g) = match members {
                Either::One(r) => fdisspec(&r, fdgaintol, &fdfreq, block)?,
                Either::Many(rs, ts) => fdisspec_bank(&present(rs, ts), fdgaintol, &fdfreq)?,
            };
            print_structure("strong structure matrix", &s);
            print_table("gains", &g);
            emit(&common, json!({ "structure": io::structure_value(&s), "report": { "gains": io::mat_value(&g) } }))
        }
        Command::Efdsyn { model, syn, common } => {
            let sys = load_model(&model)?;
            let f = efdsyn(&sys, &synthesis_options(&syn, &common)?)?;
            emit(&common, bank_output(&[Some(f)], seeded(&common)))
        }
        Command::Afdsyn { model, syn, common } => {
            let sys = load_model(&model)?;
            let f = afdsyn(&sys, &synthesis_options(&syn, &common)?)?;
            emit(&common, bank_output(&[Some(f)], seeded(&common)))
        }
        Command::Efdisyn { model, syn, common } => {
            let sys = load_model(&model)?;
            let opts = synthesis_options(&syn, &common)?;
            let fs = efdisyn(&sys, &opts)?;
            emit(&common, bank_output(&fs, seeded(&common)))
        }
        Command::Afdisyn { model, syn, common } => {
            let sys = load_model(&model)?;
            let opts = synthesis_options(&syn, &common)?;
            let fs = afdisyn(&sys, &opts)?;
            emit(&common, bank_output(&fs, seeded(&common)))
        }
        Command::Emmsyn { model, syn, common } => {
            let sys = load_model(&model)?;
            let reference = syn.reference.as_ref().ok_or_else(|| CliError::Usage("emmsyn needs --reference".into()))?;
            let sysr = load_model(&reference.display().to_string())?;
            let (f, m) = emmsyn(&sys, &sysr, &synthesis_options(&syn, &common)?)?;
            println!("updating factor: order {}", m.order());
            let mut out = bank_output(&[Some(f)], seeded(&common));
            out["m"] = io::model_value(&m);
            emit(&common, out)
        }
        Command::Emdsyn { models, syn, common } => {
            let mm = load_multi(&models)?;
            let b = emdsyn(&mm, &md_options(&syn, &common)?)?;
            emit(&common, md_bank_value(&b))
        }
        Command::Amdsyn { models, syn, common } => {
            let mm = load_multi(&models)?;
            let b = amdsyn(&mm, &md_options(&syn, &common)?)?;
            emit(&common, md_bank_value(&b))
        }
        Command::Mddist { models, distance, md, common } => {
            let mm = load_multi(&models)?;
            let t = mddist(&mm, &dist_options(&md, distance))?;
            print_table("distances", &t.values);
            emit(&common, json!({ "report": table_value(&t) }))
        }
        Command::Mddist2c { models, model, distance, md, common } => {
            let mm = load_multi(&models)?;
            let sys = load_model(&model)?;
            let c = mddist2c(&mm, &sys, &dist_options(&md, distance))?;
            emit(&common, json!({ "report": closest_value(&c) }))
        }
        Command::Perf { filters, measure, norm, fdfreq, sfdi, reference, common } => {
            let rs = internal_forms(&load_members(&filters)?);
            let s = sfdi.as_ref().map(|p| io::read_json(p).and_then(|v| io::structure_from(&v))).transpose()?;
            let rep = match measure {
                Measure::Fscond => ratios_value(&fdifscond_bank(&rs, &fdfreq, s.as_ref())?),
                Measure::F2ngap => ratios_value(&fdif2ngap_bank(&rs, &fdfreq, s.as_ref())?),
                Measure::Mmperf => {
                    let refs = reference
                        .as_ref()
                        .map(|p| load_members(p).map(|m| internal_forms(&m).into_iter().flatten().collect::<Vec<_>>()))
                        .transpose()?;
                    let kind = match norm {
                        NormSel::Hinf => NormKind::Hinf,
                        NormSel::H2 => NormKind::H2,
                    };
                    json!({ "value": nums(&fdimmperf_bank(&rs, refs.as_deref(), kind, s.as_ref())?) })
                }
            };
            let label = format!("{measure:?}").to_lowercase();
            println!("{label}: {}", rep["value"].as_array().map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).unwrap_or_default());
            emit(&common, json!({ "report": { "measure": label, "result": rep } }))
        }
        Command::Mdperf { bank, md, common } => {
            let b = load_bank(&bank)?;
            let t = mdperf(&b.r, &perf_options(&md))?;
            print_table("mdperf", &t.values);
            emit(&common, json!({ "report": table_value(&t) }))
        }
        Command::Mdmatch { bank, model, md, common } => {
            let b = load_bank(&bank)?;
            let sys = load_model(&model)?;
            let c = mdmatch(&b.q, &sys, &perf_options(&md))?;
            emit(&common, json!({ "report": closest_value(&c) }))
        }
        Command::Mdgap { bank, mdfreq, cdinp, common } => {
            let b = load_bank(&bank)?;
            let g = mdgap(&b.r, &mdfreq, cdinp)?;
            println!("mdgap: {}", g.value.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" "));
            emit(&common, json!({ "report": ratios_value(&g) }))
        }
        Command::Export { name, common } => {
            let multi = name == "aircraft_grid" || Path::new(&name).exists() && io::read_json(Path::new(&name))?.get("models").is_some();
            let v = if multi { io::multi_value(&load_multi(&name)?) } else { io::model_value(&load_model(&name)?) };
            match &common.out {
                Some(_) => emit(&common, v),
                None => {
                    print!("{}", io::canonical(&v));
                    Ok(())
                }
            }
        }
        Command::Simulate { model, filters, tf, dt, signals, alpha, beta, gamma, threshold, csv, common } => {
            let sys = load_model(&model)?;
            let qs = crate::simulate::load_filters(&filters)?;
            let setup = crate::simulate::Setup {
                tf,
                dt,
                signals: signals.iter().map(|s| crate::simulate::parse_signal(s, &sys)).collect::<CliResult<_>>()?,
                eval: crate::simulate::Evaluator { alpha, beta, gamma },
                threshold,
                seed: common.seed,
            };
            let res = crate::simulate::run(&sys, &qs, &setup)?;
            let text = res.csv();
            match &csv {
                Some(p) => std::fs::write(p, &text).map_err(|e| CliError::File { path: p.display().to_string(), msg: e.to_string() })?,
                None => print!("{text}"),
            }
            if csv.is_some() {
                res.summary();
            }
            emit(&common, res.report())
        }
    }
}

enum Either {
    One(LtiModel),
    Many(Vec<Option<LtiModel>>, f64),
}

/// A plain model file gives one internal form; synthesis outputs and model lists give a bank.
fn load_model_or_members(spec: &str) -> CliResult<Either> {
    let path = Path::new(spec);
    if !path.exists() {
        return load_model(spec).map(Either::One);
    }
    let v = io::read_json(path)?;
    if v.get("filters").is_some() || v.get("models").is_some() {
        let rs = internal_forms(&load_members(path)?);
        let ts = rs.iter().flatten().map(|r| r.ts).next().unwrap_or(0.0);
        if rs.len() == 1 && rs[0].is_some() {
            return Ok(Either::One(rs.into_iter().next().flatten().expect("present")));
        }
        return Ok(Either::Many(rs, ts));
    }
    io::model_from(&v).map(Either::One)
}
