use std::collections::HashMap;

use anyhow::{bail, Context as _, Result};
use fblab_core::fblnorm::{fbl_norm_k_warm, DEFAULT_ORACLE_BUDGET};
use fblab_core::homfun::{directify, FnRef};
use fblab_core::nakano::{truncate_g_phi, MajorantReport, DEFAULT_SAMPLES};
use fblab_core::sampling;
use fblab_core::witnesses::DyadicModel;
use fblab_core::{
    c0_summing_demo, fbl_norm, g_phi, g_phi_norm, lambda_probe, l1_dyadic_family,
    l1_limit_check, maximal_majorant, oracle_norm_net, strong_nakano_report, Budget,
    Certificate, DirectedFamily, HomFn, LatticeExpr, Method, PhiVector, Space,
};
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::Invalid;

pub const EXACT: &str = "exact";
pub const ORACLE: &str = "oracle";
pub const LOWER: &str = "heuristic-lower-bound";

fn default_p() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    1e-3
}
fn default_bound_eps() -> f64 {
    0.1
}
fn default_bound_k() -> usize {
    2
}
fn default_k_list() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_checks() -> usize {
    5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    C0,
    L1,
}

/// One unit of work, shared by the flag front end and problem files.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Norm {
        expr: String,
        k: Option<usize>,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        oracle_eta: Option<f64>,
    },
    Bound {
        family: String,
        method: Method,
        #[serde(default = "default_bound_k")]
        k: usize,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_bound_eps")]
        eps: f64,
    },
    Maximal {
        expr: String,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Probe {
        expr: String,
        #[serde(default = "default_k_list")]
        k_list: Vec<usize>,
        #[serde(default = "default_p")]
        p: f64,
    },
    Gphi {
        phi: Vec<f64>,
        #[serde(default = "default_p")]
        p: f64,
        support: Option<Vec<usize>>,
    },
    Witness {
        witness: WitnessKind,
        n: Option<usize>,
        m: Option<u32>,
        #[serde(default = "default_checks")]
        checks: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Norm { .. } => "norm",
            Task::Bound { .. } => "bound",
            Task::Maximal { .. } => "maximal",
            Task::Probe { .. } => "probe-lambda",
            Task::Gphi { .. } => "gphi",
            Task::Witness { .. } => "witness",
        }
    }
}

/// A plot-ready table.
#[derive(Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Table {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn quantity(&mut self, name: &str, value: f64, method: &str) {
        self.rows.push(vec![name.into(), fmt_num(value), method.into()]);
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

pub struct TaskOutput {
    pub json: Value,
    pub table: Table,
}

/// Resolved inputs of a run: the space, named expressions and families.
pub struct Context {
    pub space: Option<Space>,
    pub budget: Budget,
    pub exprs: HashMap<String, LatticeExpr>,
    pub families: HashMap<String, Vec<String>>,
    pub directified: HashMap<String, bool>,
}

impl Context {
    fn space(&self) -> Result<&Space> {
        self.space
            .as_ref()
            .ok_or_else(|| Invalid("this task needs a space (--space or `space = ...`)".into()).into())
    }

    fn expr(&self, name: &str) -> Result<&LatticeExpr> {
        self.exprs
            .get(name)
            .ok_or_else(|| Invalid(format!("unknown expression {name:?}")).into())
    }

    fn family(&self, name: &str) -> Result<DirectedFamily> {
        let space = self.space()?;
        let names = self
            .families
            .get(name)
            .ok_or_else(|| Invalid(format!("unknown family {name:?}")))?;
        let members: Vec<FnRef> = names
            .iter()
            .map(|n| Ok(self.expr(n)?.clone().into_fn()))
            .collect::<Result<_>>()?;
        let fam = if self.directified.get(name).copied().unwrap_or(false) {
            directify(space, &members)
        } else {
            DirectedFamily::new(space, members)
        };
        fam.with_context(|| format!("family {name:?}"))
    }
}

fn num(value: f64, method: &str) -> Value {
    json!({ "value": value, "method": method })
}

fn certificate_json(c: &Certificate) -> Value {
    json!({
        "tuple": c.tuple,
        "objective": c.objective,
        "constraint": c.constraint,
        "method": if c.exact_constraint { EXACT } else { LOWER },
    })
}

pub fn execute(ctx: &Context, task: &Task) -> Result<TaskOutput> {
    match task {
        Task::Norm { expr, k, p, eps, oracle_eta } => norm(ctx, expr, *k, *p, *eps, *oracle_eta),
        Task::Bound { family, method, k, p, eps } => bound(ctx, family, *method, *k, *p, *eps),
        Task::Maximal { expr, p, samples } => maximal(ctx, expr, *p, *samples),
        Task::Probe { expr, k_list, p } => probe(ctx, expr, k_list, *p),
        Task::Gphi { phi, p, support } => gphi(phi, *p, support.as_deref()),
        Task::Witness { witness, n, m, checks } => match witness {
            WitnessKind::C0 => witness_c0(n.unwrap_or(5)),
            WitnessKind::L1 => witness_l1(m.unwrap_or(4), *checks, &ctx.budget),
        },
    }
}

fn norm(
    ctx: &Context,
    name: &str,
    k: Option<usize>,
    p: f64,
    eps: f64,
    oracle_eta: Option<f64>,
) -> Result<TaskOutput> {
    let space = ctx.space()?;
    let e = ctx.expr(name)?;
    let mut table = Table::new(&["k", "value", "method"]);
    let (value, cert, extra) = match k {
        Some(k) => {
            let c = fbl_norm_k_warm(space, e, p, k, &ctx.budget, None)?;
            table.push(vec![k.to_string(), fmt_num(c.value), LOWER.into()]);
            (c.value, c, json!({ "k": k }))
        }
        None => {
            let est = fbl_norm(space, e, p, eps, &ctx.budget)?;
            for (k, v) in &est.history {
                table.push(vec![k.to_string(), fmt_num(*v), LOWER.into()]);
            }
            let history: Vec<Value> = est
                .history
                .iter()
                .map(|(k, v)| json!({ "k": k, "value": v, "method": LOWER }))
                .collect();
            (
                est.value,
                est.certificate,
                json!({ "k": Value::Null, "eps": eps, "k_used": est.k_used, "plateau": est.plateau, "history": history }),
            )
        }
    };
    let mut out = json!({
        "task": "norm",
        "space": space.to_string(),
        "expr": e.to_string(),
        "p": p,
        "value": value,
        "method": LOWER,
        "certificate": certificate_json(&cert),
    });
    merge(&mut out, extra);
    if let Some(eta) = oracle_eta {
        let kk = k.unwrap_or(cert.k());
        let o = oracle_norm_net(space, e, p, kk, eta, DEFAULT_ORACLE_BUDGET)?;
        table.push(vec![format!("{kk} (oracle)"), fmt_num(o.value), ORACLE.into()]);
        out["oracle"] = json!({
            "value": o.value,
            "method": ORACLE,
            "eta": eta,
            "k": kk,
            "net_size": o.net_size,
            "tuples": o.tuples,
            "tuple": o.tuple,
        });
    }
    Ok(TaskOutput { json: out, table })
}

fn merge(target: &mut Value, extra: Value) {
    if let (Value::Object(t), Value::Object(e)) = (target, extra) {
        t.extend(e);
    }
}

fn majorant_json(rep: &MajorantReport) -> Value {
    json!({
        "phi": rep.phi,
        "sum": num(rep.sum, EXACT),
        "constraints": rep.constraints,
        "rounds": rep.rounds,
        "max_violation_before_inflation": num(rep.max_violation, EXACT),
        "inflation": num(rep.inflation, EXACT),
        "monotone_on_samples": rep.monotone_on_samples,
    })
}

fn bound(ctx: &Context, name: &str, method: Method, k: usize, p: f64, eps: f64) -> Result<TaskOutput> {
    let space = ctx.space()?;
    let family = ctx.family(name)?;
    if method == Method::Coordinatewise {
        bail!(Invalid(
            "coordinatewise bounds combine per-summand runs; run `bound` on each summand".into()
        ));
    }
    let r = strong_nakano_report(space, &family, p, k, method, eps, &ctx.budget)?;
    let mut table = Table::new(&["quantity", "value", "method"]);
    for (i, v) in r.member_norms.iter().enumerate() {
        table.quantity(&format!("member_norm[{i}]"), *v, LOWER);
    }
    table.quantity("sup_member_norm", r.sup_member_norm, LOWER);
    table.quantity("bound_norm", r.bound_norm, &r.bound_norm_method);
    if let Some(g) = r.bound_norm_guarantee {
        table.quantity("bound_norm_guarantee", g, EXACT);
    }
    table.quantity("ratio", r.ratio, LOWER);
    table.quantity("min_margin", r.min_margin, EXACT);
    let out = json!({
        "task": "bound",
        "space": space.to_string(),
        "family": name,
        "construction": method,
        "p": p,
        "k": k,
        "eps": eps,
        "member_norms": r.member_norms.iter().map(|v| num(*v, LOWER)).collect::<Vec<_>>(),
        "sup_member_norm": num(r.sup_member_norm, LOWER),
        "bound_norm": num(r.bound_norm, &r.bound_norm_method),
        "bound_norm_guarantee": r.bound_norm_guarantee.map(|g| num(g, EXACT)),
        "ratio": num(r.ratio, LOWER),
        "delta_used": r.delta_used.map(|d| num(d, EXACT)),
        "phi": r.phi,
        "dominates_on_samples": r.dominates,
        "min_margin": num(r.min_margin, EXACT),
        "majorant": r.majorant.as_ref().map(majorant_json),
    });
    Ok(TaskOutput { json: out, table })
}

fn maximal(ctx: &Context, name: &str, p: f64, samples: usize) -> Result<TaskOutput> {
    let space = ctx.space()?;
    let h = ctx.expr(name)?;
    let (phi, rep) = maximal_majorant(space, h, p, samples, 1e-9, ctx.budget.seed)?;
    let mut table = Table::new(&["quantity", "value", "method"]);
    for (a, v) in rep.phi.iter().enumerate() {
        table.quantity(&format!("phi[{a}]"), *v, EXACT);
    }
    table.quantity("norm", g_phi_norm(&phi), EXACT);
    let out = json!({
        "task": "maximal",
        "space": space.to_string(),
        "expr": h.to_string(),
        "p": p,
        "norm": num(g_phi_norm(&phi), EXACT),
        "majorant": majorant_json(&rep),
    });
    Ok(TaskOutput { json: out, table })
}

fn probe(ctx: &Context, name: &str, k_list: &[usize], p: f64) -> Result<TaskOutput> {
    let space = ctx.space()?;
    let e = ctx.expr(name)?;
    let rows = lambda_probe(space, e, p, k_list, &ctx.budget)?;
    let mut table = Table::new(&["k", "norm", "ratio", "method"]);
    for r in &rows {
        table.push(vec![r.k.to_string(), fmt_num(r.norm), fmt_num(r.ratio), LOWER.into()]);
    }
    let out = json!({
        "task": "probe-lambda",
        "space": space.to_string(),
        "expr": e.to_string(),
        "p": p,
        "rows": rows.iter().map(|r| json!({ "k": r.k, "norm": r.norm, "ratio": r.ratio, "method": LOWER })).collect::<Vec<_>>(),
    });
    Ok(TaskOutput { json: out, table })
}

fn gphi(phi: &[f64], p: f64, support: Option<&[usize]>) -> Result<TaskOutput> {
    let v = PhiVector::finite(phi.to_vec(), p)?;
    let norm = g_phi_norm(&v);
    let mut table = Table::new(&["quantity", "value", "method"]);
    table.quantity("norm", norm, EXACT);
    let mut out = json!({
        "task": "gphi",
        "phi": phi,
        "p": p,
        "norm": norm,
        "method": EXACT,
    });
    if let Some(s) = support {
        let (f, tail) = truncate_g_phi(&v, s)?;
        table.quantity("tail_bound", tail, EXACT);
        out["truncation"] = json!({ "support": s, "expr": f.to_string(), "tail_bound": num(tail, EXACT) });
    }
    let g = g_phi(&v)?;
    out["value_at_ones"] = num(g.value(&vec![1.0; phi.len()]), EXACT);
    Ok(TaskOutput { json: out, table })
}

fn witness_c0(n: usize) -> Result<TaskOutput> {
    let d = c0_summing_demo(n)?;
    let mut table = Table::new(&["j", "least_upper_bound", "tail_profile", "method"]);
    for j in 0..d.n {
        table.push(vec![
            (j + 1).to_string(),
            fmt_num(d.least_upper_bound[j]),
            fmt_num(d.tail_profile[j]),
            EXACT.into(),
        ]);
    }
    let mut out = serde_json::to_value(&d)?;
    merge(&mut out, json!({ "task": "witness", "witness": "c0", "method": EXACT }));
    Ok(TaskOutput { json: out, table })
}

fn witness_l1(m: u32, checks: usize, budget: &Budget) -> Result<TaskOutput> {
    let (model, family, _) = l1_dyadic_family(m)?;
    let space = model.space();
    let mut members: Vec<FnRef> = vec![model.f(0)?.into_fn()];
    members.extend(family.members().iter().cloned());
    let mut table = Table::new(&["quantity", "value", "method"]);
    let mut norms = Vec::new();
    let k = 4.min(model.dim());
    for (n, f) in members.iter().enumerate() {
        let c = fbl_norm_k_warm(space, f.as_ref(), 1.0, k, budget, None)?;
        table.quantity(&format!("norm[f_{n}]"), c.value, LOWER);
        norms.push(json!({ "n": n, "value": c.value, "method": LOWER, "k": k }));
    }
    let mut functionals: Vec<(String, Vec<f64>, u32)> = vec![
        ("ones".into(), vec![1.0; model.dim()], 0),
        ("rademacher-1".into(), rademacher(&model, 1), 1),
        ("zero".into(), vec![0.0; model.dim()], 0),
    ];
    let mut rng = sampling::rng_for(budget.seed, 77);
    for i in 0..checks {
        let level = rng.random_range(0..=m);
        let width = 1usize << (m - level);
        let psi: Vec<f64> = (0..1usize << level)
            .flat_map(|_| std::iter::repeat_n(rng.random_range(-8..=8) as f64, width))
            .collect();
        functionals.push((format!("random-{i}"), psi, level));
    }
    let mut checks_json = Vec::new();
    let mut all_equal = true;
    for (label, psi, level) in &functionals {
        let r = l1_limit_check(&model, psi, *level)?;
        all_equal &= r.equal && r.nondecreasing;
        table.quantity(&format!("limit_gap[{label}]"), r.lhs - r.rhs, EXACT);
        checks_json.push(json!({
            "functional": label,
            "level": level,
            "lhs": r.lhs,
            "rhs": r.rhs,
            "equal": r.equal,
            "chain": r.chain,
            "nondecreasing": r.nondecreasing,
            "method": EXACT,
        }));
    }
    let mut increasing = true;
    let mut worst = 0.0f64;
    for x in sampling::validation_sample(space, 1000, budget.seed) {
        let v: Vec<f64> = members.iter().map(|f| f.value(&x)).collect();
        for w in v.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    increasing &= worst <= 1e-12;
    table.quantity("max_order_violation", worst, EXACT);
    let out = json!({
        "task": "witness",
        "witness": "l1",
        "m": m,
        "space": space.to_string(),
        "norms": norms,
        "limit_checks": checks_json,
        "all_limit_checks_exact": all_equal,
        "increasing_on_samples": increasing,
        "max_order_violation": num(worst, EXACT),
    });
    Ok(TaskOutput { json: out, table })
}

fn rademacher(model: &DyadicModel, level: u32) -> Vec<f64> {
    let width = model.dim() >> level;
    (0..model.dim())
        .map(|i| if (i / width) % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Quick built-in checks with known answers.
pub fn selftest(budget: &Budget) -> Result<(TaskOutput, bool)> {
    let l1 = Space::l1(2)?;
    let l2 = Space::l2(2)?;
    let parse = |s: &str, sp: &Space| fblab_core::parse_expr(s, Some(sp));
    let join = parse("join(abs(delta [1,0]),abs(delta [0,1]))", &l1)?;
    let meet = parse("meet(abs(delta [1,0]),abs(delta [0,1]))", &l1)?;
    let delta = parse("delta [3,4]", &l2)?;
    let half = PhiVector::finite(vec![0.5, 0.5], 1.0)?;
    let checks: Vec<(&str, f64, f64, f64, &str)> = vec![
        ("join norm on l1:2", fbl_norm(&l1, &join, 1.0, 1e-4, budget)?.value, 2.0, 1e-3, LOWER),
        ("meet norm on l1:2", fbl_norm(&l1, &meet, 1.0, 1e-4, budget)?.value, 1.0, 1e-3, LOWER),
        ("delta norm on l2:2", fbl_norm(&l2, &delta, 1.0, 1e-4, budget)?.value, 5.0, 1e-6, LOWER),
        ("g_phi norm", g_phi_norm(&half), 1.0, 0.0, EXACT),
        (
            "maximal majorant of the join",
            maximal_majorant(&l1, &join, 1.0, 1024, 1e-9, budget.seed)?.1.sum,
            2.0,
            1e-6,
            EXACT,
        ),
        ("c0 tail at N = 5", c0_summing_demo(5)?.tail_profile.iter().sum(), 5.0, 0.0, EXACT),
    ];
    let mut table = Table::new(&["check", "value", "expected", "pass", "method"]);
    let mut items = Vec::new();
    let mut all = true;
    for (name, value, expected, tol, method) in checks {
        let pass = (value - expected).abs() <= tol;
        all &= pass;
        table.push(vec![
            name.into(),
            fmt_num(value),
            fmt_num(expected),
            pass.to_string(),
            method.into(),
        ]);
        items.push(json!({ "check": name, "value": value, "expected": expected, "tolerance": tol, "pass": pass, "method": method }));
    }
    let out = json!({ "task": "selftest", "checks": items, "pass": all });
    Ok((TaskOutput { json: out, table }, all))
}
