use std::sync::Arc;

use bubble_core::bubble::{bubble_profile, bubble_residual, BubbleSpec};
use bubble_core::harness::{hypothesis_product_with_quotient, normalize_blowup, rescaled_residual};
use bubble_core::riesz::{quotient_field_with, RingKernelTable};
use bubble_core::solver::{manufacture_potential_with, solve_nonlocal_with, SolveOptions};
use bubble_core::{make_grid, GridScheme, LabError, ModelParams, RadialField};

#[test]
fn cached_table_reproduces_the_built_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = Arc::new(make_grid(10.0, 80, GridScheme::Uniform).unwrap());
    let built = RingKernelTable::load_or_build(dir.path(), g.clone(), 6, 1.0).unwrap();
    let file = dir.path().join(RingKernelTable::cache_file_name(&g, 6, 1.0));
    assert!(file.is_file());
    let loaded = RingKernelTable::load_or_build(dir.path(), g.clone(), 6, 1.0).unwrap();
    assert_eq!(built.weights(), loaded.weights());
    assert!(matches!(
        RingKernelTable::load(&file, g.clone(), 6, 0.5),
        Err(LabError::Cache(_))
    ));

    std::fs::write(&file, b"RKTBjunk").unwrap();
    let rebuilt = RingKernelTable::load_or_build(dir.path(), g, 6, 1.0).unwrap();
    assert_eq!(rebuilt.weights(), built.weights());
}

#[test]
fn manufactured_round_trip() {
    let g = Arc::new(make_grid(20.0, 400, GridScheme::Uniform).unwrap());
    let p = ModelParams::new(6, 1.0, 24.0);
    let z = bubble_profile(&BubbleSpec::unit(6, 24.0).unwrap(), g.clone());
    let table = RingKernelTable::build(g, 6, 1.0).unwrap();
    let v = manufacture_potential_with(&table, &z, &p).unwrap();
    let rep = solve_nonlocal_with(&table, &v, &p, &z.scale(1.1), &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.solution.sub(&z).unwrap().sup_abs() < 1e-4);
}

#[test]
fn rescaling_a_concentrated_bubble_recovers_the_unit_bubble() {
    // With q̃ = Q and V = 0 the rescaled residual is the unit bubble's own
    // discretization residual on the rescaled grid.
    let n = 6;
    let p = ModelParams::new(n, 1.0, 24.0);
    let eps = 0.05;
    let spec = BubbleSpec::new(n, 24.0, eps).unwrap();
    let gy = make_grid(40.0, 2000, GridScheme::Uniform).unwrap();
    let gx = Arc::new(gy.scaled(eps));
    let u = bubble_profile(&spec, gx.clone());
    let norm = normalize_blowup(&u, &p).unwrap();
    assert!((norm.eps - eps).abs() < 1e-14);
    let z = bubble_profile(&BubbleSpec::unit(n, 24.0).unwrap(), norm.v.grid_arc().clone());
    assert!(norm.v.sub(&z).unwrap().sup_abs() < 1e-13);
    let q = RadialField::constant(norm.v.grid_arc().clone(), 24.0);
    let zero = RadialField::constant(norm.v.grid_arc().clone(), 0.0);
    let res = rescaled_residual(&norm.v, &q, &zero, eps, &p).unwrap();
    let own = bubble_residual(&BubbleSpec::unit(n, 24.0).unwrap(), norm.v.grid_arc().clone()).unwrap();
    assert!((res - own).abs() <= 1e-9 * own, "{res} {own}");
}

#[test]
fn hypothesis_product_vanishes_only_for_the_constant_quotient() {
    let g = Arc::new(make_grid(40.0, 300, GridScheme::Geometric { ratio: 1.015 }).unwrap());
    let p = ModelParams::new(6, 1.0, 24.0);
    let z = bubble_profile(&BubbleSpec::unit(6, 24.0).unwrap(), g.clone());
    let exact = hypothesis_product_with_quotient(&z, &RadialField::constant(g.clone(), 24.0), &p).unwrap();
    assert_eq!(exact.product, 0.0);
    let table = RingKernelTable::build(g, 6, 1.0).unwrap();
    let q = quotient_field_with(&table, &z, &p).unwrap();
    let actual = hypothesis_product_with_quotient(&z, &q.field, &p).unwrap();
    assert!(actual.product > 0.0 && actual.product.is_finite());
}
