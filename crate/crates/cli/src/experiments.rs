use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use bubble_core::bubble::{
    bubble_profile, bubble_quotient_3d, bubble_quotient_origin, bubble_residual_field, linearized_residual,
    quotient_scaling_check, scaling_mode, translation_mode, BubbleSpec,
};
use bubble_core::harness::{blowup_rate_experiment, energy_identity_gap_with, hypothesis_product_with_quotient};
use bubble_core::norms::decay_constant;
use bubble_core::quad::adaptive_gk;
use bubble_core::riesz::{quotient_field_with, relative_sup_error, riesz_convolve, riesz_oracle, RingKernelTable};
use bubble_core::solver::{manufacture_potential_with, shoot_limit_profile, solve_nonlocal_with, ShootOutcome};
use bubble_core::{make_grid, powerlaw_fit, ModelParams, RadialField, RadialGrid};
use serde_json::json;

use crate::config::{Config, Experiment};
use crate::error::CliError;
use crate::report::{Check, Outcome, RateRow, Relation};

/// Tolerance keys each experiment reads, with their defaults.
pub fn tolerance_defaults(exp: Experiment) -> &'static [(&'static str, f64)] {
    match exp {
        Experiment::BubbleCheck => &[
            ("residual", 1e-5),
            ("order_target", 2.0),
            ("order_band", 0.2),
            ("kernel_residual", 1e-5),
            ("non_kernel_min", 0.1),
        ],
        Experiment::RieszCheck => &[("oracle_rel", 1e-3), ("origin", 1e-4), ("scaling_slope", 1e-2)],
        Experiment::Shoot => &[("profile", 1e-6)],
        Experiment::Manufacture => &[("origin", 1e-3)],
        Experiment::Solve => &[("sup_error", 1e-4), ("max_iterations", 100.0)],
        Experiment::BlowupRate => &[
            ("rate_target", 2.0),
            ("rate_band", 0.2),
            ("rescaled_residual", 1e-4),
            ("v_origin", 0.0),
            ("near_bubble", 1e-2),
            ("a_slope_target", -4.0),
            ("a_slope_band", 0.3),
        ],
        Experiment::Hypotheses => &[("decay_constant", 1e-3), ("synthetic_product", 0.0)],
        Experiment::Energy => &[("manufactured_gap", 1e-3), ("zero_potential", 1e-3)],
    }
}

pub fn resolve_tolerances(exp: Experiment, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, CliError> {
    let defaults = tolerance_defaults(exp);
    if let Some(k) = given.keys().find(|k| !defaults.iter().any(|(d, _)| d == k)) {
        let known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
        return Err(CliError::Config(format!(
            "tolerance {k:?} is not used by {}; known: {known:?}",
            exp.name()
        )));
    }
    Ok(defaults
        .iter()
        .map(|(k, v)| (k.to_string(), given.get(*k).copied().unwrap_or(*v)))
        .collect())
}

/// Precondition checks that must fail with a config error rather than mid-run.
pub fn validate(exp: Experiment, cfg: &Config) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    cfg.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.perturbation
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    cfg.grid.build()?;
    if let Some(e) = cfg.experiment {
        if e != exp {
            return bad(format!(
                "config names experiment {}, command line {}",
                e.name(),
                exp.name()
            ));
        }
    }
    let decreasing =
        cfg.eps_list.iter().all(|e| *e > 0.0 && e.is_finite()) && cfg.eps_list.windows(2).all(|w| w[1] < w[0]);
    match exp {
        Experiment::BlowupRate => {
            if cfg.eps_list.len() < 3 {
                return bad(format!(
                    "blowup-rate needs at least 3 eps values, got {}",
                    cfg.eps_list.len()
                ));
            }
            if !decreasing {
                return bad(format!(
                    "eps_list {:?} must be positive and strictly decreasing",
                    cfg.eps_list
                ));
            }
        }
        Experiment::RieszCheck => {
            if cfg.params.n != 3 {
                return bad(format!(
                    "riesz-check compares against the 3-D oracle; n = {}",
                    cfg.params.n
                ));
            }
            if cfg.eps_list.len() < 2 || !decreasing {
                return bad(format!(
                    "riesz-check scaling needs >= 2 decreasing eps values, got {:?}",
                    cfg.eps_list
                ));
            }
            cfg.riesz.targets.build()?;
            for &ell in cfg.riesz.ell_list.iter().chain(&cfg.riesz.scaling_ell_list) {
                ModelParams { ell, ..cfg.params }
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        Experiment::Shoot => {
            if !(cfg.shoot.v0 > 0.0) {
                return bad(format!("shoot.v0 = {} must be positive", cfg.shoot.v0));
            }
        }
        Experiment::Solve => {
            let o = &cfg.solve.options;
            if !(o.tau > 0.0 && o.tau <= 1.0) || !(o.tol > 0.0) || !(cfg.solve.guess_scale > 0.0) {
                return bad("solve: need 0 < tau <= 1, tol > 0 and guess_scale > 0".into());
            }
        }
        Experiment::Hypotheses if !(cfg.class.decay_rho > 0.0 && cfg.class.decay_rho < cfg.grid.r_max) => {
            return bad(format!(
                "class.decay_rho = {} must lie inside the grid",
                cfg.class.decay_rho
            ));
        }
        _ => {}
    }
    Ok(())
}

pub struct Context<'a> {
    pub cfg: &'a Config,
    pub tol: &'a BTreeMap<String, f64>,
}

impl Context<'_> {
    fn t(&self, key: &str) -> f64 {
        self.tol[key]
    }

    fn table(&self, grid: Arc<RadialGrid>, n: usize, ell: f64) -> Result<RingKernelTable, CliError> {
        Ok(match &self.cfg.cache_dir {
            Some(dir) => RingKernelTable::load_or_build(dir, grid, n, ell)?,
            None => RingKernelTable::build(grid, n, ell)?,
        })
    }

    fn at_most(&self, name: &str, key: &str, measured: f64) -> Check {
        Check::new(name, key, measured, Relation::AtMost { bound: self.t(key) })
    }

    fn near(&self, name: &str, key: &str, measured: f64, target: f64) -> Check {
        Check::new(
            name,
            key,
            measured,
            Relation::Near {
                target,
                tolerance: self.t(key),
            },
        )
    }
}

pub fn dispatch(exp: Experiment, ctx: &Context) -> Result<Outcome, CliError> {
    match exp {
        Experiment::BubbleCheck => bubble_check(ctx),
        Experiment::RieszCheck => riesz_check(ctx),
        Experiment::Shoot => shoot(ctx),
        Experiment::Manufacture => manufacture(ctx),
        Experiment::Solve => solve(ctx),
        Experiment::BlowupRate => blowup_rate(ctx),
        Experiment::Hypotheses => hypotheses(ctx),
        Experiment::Energy => energy(ctx),
    }
}

fn unit_bubble(p: &ModelParams) -> Result<BubbleSpec, CliError> {
    Ok(BubbleSpec::unit(p.n, p.q)?)
}

fn bubble_check(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let spec = unit_bubble(p)?;
    let gs = ctx.cfg.grid;
    let grid = gs.build()?;
    let mut out = Outcome::default();
    let residual = bubble_residual_field(&spec, grid.clone())?;
    let sup = residual.sup_abs();
    let mut refinement = Vec::new();
    for k in [4usize, 2, 1] {
        let coarse = make_grid(gs.r_max, gs.intervals / k, gs.scheme)?;
        let r = bubble_residual_field(&spec, Arc::new(coarse))?.sup_abs();
        refinement.push((gs.r_max * k as f64 / gs.intervals as f64, r));
    }
    let order = powerlaw_fit(&refinement)?;
    let scaling = scaling_mode(&spec, grid.clone());
    let translation = translation_mode(&spec, grid.clone());
    let z = bubble_profile(&spec, grid.clone());
    let scaling_res = linearized_residual(&scaling, &spec, 0)?;
    let translation_res = linearized_residual(&translation, &spec, 1)?;
    let non_kernel = linearized_residual(&z, &spec, 0)?;
    out.checks.push(ctx.at_most("bubble_residual", "residual", sup));
    out.checks.push(Check::new(
        "residual_order",
        "order_band",
        order.slope,
        Relation::Near {
            target: ctx.t("order_target"),
            tolerance: ctx.t("order_band"),
        },
    ));
    out.checks
        .push(ctx.at_most("scaling_mode_residual", "kernel_residual", scaling_res));
    out.checks
        .push(ctx.at_most("translation_mode_residual", "kernel_residual", translation_res));
    out.checks.push(Check::new(
        "non_kernel_residual",
        "non_kernel_min",
        non_kernel,
        Relation::AtLeast {
            bound: ctx.t("non_kernel_min"),
        },
    ));
    out.result("residual_sup", sup);
    out.result("residual_origin", residual.values()[0].abs());
    out.result(
        "residual_interior",
        residual.values()[1..].iter().fold(0.0f64, |m, x| m.max(x.abs())),
    );
    out.result(
        "refinement",
        refinement
            .iter()
            .map(|(h, r)| json!({"h": h, "residual": r}))
            .collect::<Vec<_>>(),
    );
    out.result("order_fit", order);
    out.result("scaling_mode_residual", scaling_res);
    out.result("translation_mode_residual", translation_res);
    out.result("non_kernel_residual", non_kernel);
    out.curve("Z", z);
    out.curve("residual", residual);
    out.curve("scaling_mode", scaling);
    out.curve("translation_mode", translation);
    Ok(out)
}

fn riesz_check(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let spec = unit_bubble(p)?;
    let grid = cfg.grid.build()?;
    let targets = cfg.riesz.targets.build()?;
    let mut out = Outcome::default();
    let z = bubble_profile(&spec, grid.clone());
    let density = z.powf(p.p_conv());
    let bump = RadialField::from_fn(
        grid.clone(),
        |r| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 },
        None,
    );
    let mut oracle_rows = Vec::new();
    for &ell in &cfg.riesz.ell_list {
        for (label, f) in [("bubble_density", &density), ("bump", &bump)] {
            let q = riesz_convolve(f, p.n, ell)?;
            let o = riesz_oracle(f, p.n, ell, targets.clone(), &cfg.riesz.oracle)?;
            let err = relative_sup_error(&q, &o);
            out.checks
                .push(ctx.at_most(&format!("oracle_{label}_ell{ell}"), "oracle_rel", err));
            oracle_rows.push(json!({"ell": ell, "density": label, "relative_sup_error": err}));
        }
    }
    let table = ctx.table(grid.clone(), p.n, p.ell)?;
    let q = quotient_field_with(&table, &z, p)?;
    let reference = bubble_quotient_origin(p.n, p.q, p.ell)?;
    let q0 = q.field.values()[0];
    out.checks.push(ctx.near("quotient_origin", "origin", q0, reference));
    let mut scaling_rows = Vec::new();
    for &ell in &cfg.riesz.scaling_ell_list {
        let pe = ModelParams { ell, ..*p };
        let check = quotient_scaling_check(&cfg.eps_list, &pe, grid.clone())?;
        out.checks.push(ctx.near(
            &format!("scaling_slope_ell{ell}"),
            "scaling_slope",
            check.fit.slope,
            -ell,
        ));
        scaling_rows.push(json!({"ell": ell, "check": check}));
    }
    out.result("oracle", oracle_rows);
    out.result("quotient_origin", json!({"computed": q0, "reference": reference}));
    out.result("quotient", q.summary());
    out.result("scaling", scaling_rows);
    out.curve("q_Z", q.field);
    Ok(out)
}

fn shoot(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let v0 = ctx.cfg.shoot.v0;
    let grid = ctx.cfg.grid.build()?;
    let spec = unit_bubble(p)?;
    let res = shoot_limit_profile(p.n, p.q, v0, grid)?;
    // The solution family is v0 · Z(v0^{2/(n-2)} r).
    let k = v0.powf(2.0 / (p.dim() - 2.0));
    let exact = RadialField::from_fn(res.profile.grid_arc().clone(), |r| v0 * spec.value(k * r), None);
    let err = res.profile.sub(&exact)?.sup_abs();
    let mut out = Outcome::default();
    let measured = if res.outcome == ShootOutcome::Decayed {
        err
    } else {
        f64::INFINITY
    };
    out.checks.push(ctx.at_most("profile_sup_error", "profile", measured));
    out.result("outcome", res.outcome);
    out.result("max_radius_reached", res.max_radius_reached);
    out.result("sup_error", err);
    out.result("tail", res.profile.tail());
    out.curve("error", res.profile.sub(&exact)?);
    out.curve("profile", res.profile);
    Ok(out)
}

fn manufacture(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let grid = ctx.cfg.grid.build()?;
    let spec = unit_bubble(p)?;
    let z = bubble_profile(&spec, grid.clone());
    let table = ctx.table(grid.clone(), p.n, p.ell)?;
    let v = manufacture_potential_with(&table, &z, p)?;
    let q = quotient_field_with(&table, &z, p)?;
    let pm = p.p_crit() - 1.0;
    let limit = RadialField::new(
        grid,
        q.field
            .values()
            .iter()
            .zip(z.values())
            .map(|(q, z)| (q - p.q) * z.powf(pm))
            .collect(),
        None,
    )?;
    let expected = bubble_quotient_origin(p.n, p.q, p.ell)? - p.q;
    let mut out = Outcome::default();
    out.checks
        .push(ctx.near("potential_origin", "origin", v.values()[0], expected));
    out.result(
        "potential_origin",
        json!({"computed": v.values()[0], "expected": expected}),
    );
    out.result("sup_deviation_from_limit_form", v.sub(&limit)?.sup_abs());
    out.curve("V", v);
    out.curve("limit_form", limit);
    Ok(out)
}

fn solve(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let s = &ctx.cfg.solve;
    let grid = ctx.cfg.grid.build()?;
    let z = bubble_profile(&unit_bubble(p)?, grid.clone());
    let table = ctx.table(grid, p.n, p.ell)?;
    let v = manufacture_potential_with(&table, &z, p)?;
    let guess = z.scale(s.guess_scale);
    let mut out = Outcome::default();
    match solve_nonlocal_with(&table, &v, p, &guess, &s.options) {
        Ok(rep) => {
            let err = rep.solution.sub(&z)?.sup_abs();
            out.checks
                .push(ctx.at_most("iterations", "max_iterations", rep.iterations as f64));
            out.checks.push(ctx.at_most("sup_error", "sup_error", err));
            out.result("converged", rep.converged);
            out.result("iterations", rep.iterations);
            out.result("final_update_norm", rep.final_update_norm);
            out.result("final_tau", rep.final_tau);
            out.result("update_history", &rep.update_history);
            out.result("sup_error", err);
            out.curve("error", rep.solution.sub(&z)?);
            out.curve("solution", rep.solution);
        }
        Err(e) => {
            out.checks
                .push(ctx.at_most("iterations", "max_iterations", f64::INFINITY));
            out.checks.push(ctx.at_most("sup_error", "sup_error", f64::INFINITY));
            out.result("converged", false);
            out.result("error", e.to_string());
        }
    }
    Ok(out)
}

fn blowup_rate(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let grid = cfg.grid.build()?;
    let base = ctx.table(grid, p.n, p.ell)?;
    let exp = blowup_rate_experiment(&cfg.eps_list, &cfg.perturbation, p, &base)?;
    let mut out = Outcome::default();
    let slope = exp.fit.map_or(f64::NAN, |f| f.slope);
    out.checks.push(Check::new(
        "deviation_rate",
        "rate_band",
        slope,
        Relation::Near {
            target: ctx.t("rate_target"),
            tolerance: ctx.t("rate_band"),
        },
    ));
    let worst =
        |f: &dyn Fn(&bubble_core::harness::BlowupRecord) -> f64| exp.records.iter().map(f).fold(0.0f64, f64::max);
    out.checks.push(ctx.at_most(
        "rescaled_residual",
        "rescaled_residual",
        worst(&|r| r.rescaled_residual),
    ));
    out.checks
        .push(ctx.at_most("v_origin_defect", "v_origin", worst(&|r| (r.v_origin - 1.0).abs())));
    out.checks.push(Check::fixed(
        "v_max",
        worst(&|r| r.v_max),
        Relation::AtMost { bound: 1.0 },
    ));
    let v_min = exp.records.iter().map(|r| r.v_min).fold(f64::INFINITY, f64::min);
    out.checks
        .push(Check::fixed("v_min", v_min, Relation::Above { bound: 0.0 }));
    let near: Vec<f64> = exp
        .records
        .iter()
        .filter(|r| r.deviation_a <= ctx.t("near_bubble"))
        .map(|r| r.linearized.a_decay_fit.slope)
        .collect();
    let target = ctx.t("a_slope_target");
    let a_worst = near
        .iter()
        .copied()
        .max_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(f64::NAN);
    out.checks.push(Check::new(
        "a_decay_slope",
        "a_slope_band",
        a_worst,
        Relation::Near {
            target,
            tolerance: ctx.t("a_slope_band"),
        },
    ));
    out.rates = Some(
        exp.records
            .iter()
            .map(|r| RateRow {
                eps: r.eps,
                deviation: r.deviation_a,
                hyp_product: r.hyp_product,
                a_decay_slope: r.linearized.a_decay_fit.slope,
            })
            .collect(),
    );
    for r in &exp.records {
        out.curve(&format!("v_eps{}", r.eps), r.v.clone());
    }
    out.result("members_near_bubble", near.len());
    out.result("experiment", &exp);
    Ok(out)
}

fn hypotheses(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let grid = cfg.grid.build()?;
    let spec = unit_bubble(p)?;
    let z = bubble_profile(&spec, grid.clone());
    let limit = spec.tail().coeff;
    let decay = decay_constant(&z, cfg.class.decay_rho, p.n)?;
    let table = ctx.table(grid.clone(), p.n, p.ell)?;
    let q = quotient_field_with(&table, &z, p)?;
    let actual = hypothesis_product_with_quotient(&z, &q.field, p)?;
    let synthetic = hypothesis_product_with_quotient(&z, &RadialField::constant(grid, p.q), p)?;
    let mut out = Outcome::default();
    out.checks
        .push(ctx.near("decay_constant", "decay_constant", decay, limit));
    out.checks.push(Check::fixed(
        "quotient_sup_finite",
        q.sup,
        Relation::Above { bound: 0.0 },
    ));
    out.checks
        .push(ctx.at_most("synthetic_hypothesis_product", "synthetic_product", synthetic.product));
    out.result(
        "decay_constant",
        json!({"computed": decay, "expected": limit, "rho": cfg.class.decay_rho}),
    );
    out.result("quotient", q.summary());
    out.result("bubble_hypothesis", actual);
    out.result("synthetic_hypothesis", synthetic);
    out.curve("q_Z", q.field);
    Ok(out)
}

fn energy(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let grid = ctx.cfg.grid.build()?;
    let spec = unit_bubble(p)?;
    let z = bubble_profile(&spec, grid.clone());
    let table = ctx.table(grid.clone(), p.n, p.ell)?;
    let v = manufacture_potential_with(&table, &z, p)?;
    let manufactured = energy_identity_gap_with(&table, &z, &v, p)?;
    let zero = RadialField::constant(grid, 0.0);
    let unforced = energy_identity_gap_with(&table, &z, &zero, p)?;
    let mut out = Outcome::default();
    out.checks
        .push(ctx.at_most("manufactured_gap", "manufactured_gap", manufactured.gap));
    out.result("manufactured", manufactured);
    out.result("zero_potential", unforced);
    if p.n == 3 && p.ell == 1.0 {
        let c = p.q / 3.0;
        let reference = 4.0
            * PI
            * adaptive_gk(
                |t: f64| {
                    if t >= 1.0 {
                        return 0.0;
                    }
                    let r = t / (1.0 - t);
                    (bubble_quotient_3d(p.q, r) - p.q) * (1.0 + c * r * r).powi(-3) * r * r / ((1.0 - t) * (1.0 - t))
                },
                0.0,
                1.0,
                1e-14,
                1e-12,
            );
        out.checks.push(ctx.near(
            "zero_potential_gap",
            "zero_potential",
            unforced.raw_gap,
            reference.abs(),
        ));
        out.result("zero_potential_reference", reference.abs());
    }
    out.curve("V", v);
    Ok(out)
}
