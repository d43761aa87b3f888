//! One line per acceptance criterion, at the pinned tolerances.
//!
//! Runs as a plain binary (`harness = false`); exits nonzero when any line is
//! FAIL. Two criteria are expected to fail; see the README.

use std::time::Instant;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use lindyn::criteria::{
    concat, direct_sum, intertwiner_left, intertwiner_right, lift_left, lift_right, supercyclicity_report,
    CriterionData, CriterionSystem,
};
use lindyn::ideals::{audit_ideal_axioms, lemma1_approximate, mult_norm_bound_check, DyadicGrid, IdealDesc};
use lindyn::operators::{adjoint, apply, scaled_backward_shift, MatOp};
use lindyn::probes::scaled_orbit_distance;
use lindyn::sampling::{complex_gaussian, gaussian_matrix, gaussian_vector, stream_rng, unimodular};
use lindyn::spaces::{Functional, SpaceDesc, SpaceVec};
use lindyn::tensor::{
    check_theorem3, check_tsc, projective_norm_hilbert_oracle, projective_norm_upper, proposition_phi,
    proposition_witness, TensorElem, TscData,
};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hs(d: usize) -> SpaceDesc {
    SpaceDesc::hilbert(d).unwrap()
}

fn vec_in(s: SpaceDesc, rng: &mut ChaCha8Rng) -> SpaceVec {
    SpaceVec::new(s, gaussian_vector(rng, s.dim()).iter().cloned().collect()).unwrap()
}

fn fun_in(s: SpaceDesc, rng: &mut ChaCha8Rng) -> Functional {
    Functional::new(s, gaussian_vector(rng, s.dim()).iter().cloned().collect()).unwrap()
}

fn op_in(s: SpaceDesc, rng: &mut ChaCha8Rng) -> MatOp {
    MatOp::new(s, gaussian_matrix(rng, s.dim(), s.dim())).unwrap()
}

type Outcome = Result<String, String>;

fn rank_one_norm() -> Outcome {
    let s = hs(8);
    let mut worst: f64 = 0.0;
    for p in [1.0, 2.0, 4.0, f64::INFINITY] {
        let ideal = IdealDesc::schatten(p, s).unwrap();
        let mut rng = stream_rng(11, p.min(99.0) as u64);
        for _ in 0..500 {
            let x = vec_in(s, &mut rng);
            let f = fun_in(s, &mut rng);
            let want = x.norm() * f.norm();
            let got = ideal.norm_of(&(x.coords() * f.coords().transpose()));
            worst = worst.max((got - want).abs() / want);
        }
    }
    if worst < 1e-10 {
        Ok(format!("worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e} >= 1e-10"))
    }
}

fn ideal_axioms() -> Outcome {
    let mut worst = f64::INFINITY;
    for p in [1.0, 2.0, f64::INFINITY] {
        let report = audit_ideal_axioms(&IdealDesc::schatten(p, hs(8)).unwrap(), 200, 3).unwrap();
        for a in &report.axioms {
            if a.axiom == "dominates_operator_norm" || a.axiom == "two_sided_ideal" {
                worst = worst.min(a.worst_slack);
            }
        }
    }
    if worst >= -1e-9 {
        Ok(format!("worst slack {worst:.2e}"))
    } else {
        Err(format!("worst slack {worst:.2e} < -1e-9"))
    }
}

fn multiplication_bounds() -> Outcome {
    let s = hs(8);
    let mut worst = f64::INFINITY;
    for p in [1.0, 2.0, f64::INFINITY] {
        let ideal = IdealDesc::schatten(p, s).unwrap();
        let mut rng = stream_rng(12, p.min(99.0) as u64);
        for _ in 0..200 {
            let t = op_in(s, &mut rng);
            let a = ideal.element(op_in(s, &mut rng)).unwrap();
            let b = mult_norm_bound_check(&t, &a).unwrap();
            for (lhs, rhs) in [b.left, b.right] {
                worst = worst.min((rhs - lhs) / rhs);
            }
        }
    }
    if worst >= -1e-12 {
        Ok(format!("worst relative slack {worst:.2e}"))
    } else {
        Err(format!("worst relative slack {worst:.2e}"))
    }
}

fn lemma_construction() -> Outcome {
    let s = hs(6);
    let ideal = IdealDesc::schatten(2.0, s).unwrap();
    let grid = DyadicGrid::default();
    let mut rng = stream_rng(13, 0);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..50 {
        let target = ideal.element(op_in(s, &mut rng)).unwrap();
        for eps in [1e-2, 1e-3] {
            let run = lemma1_approximate(&target, &grid, &grid, eps).map_err(|e| e.to_string())?;
            let recomputed = ideal.norm_of(&(target.op().entries() - run.combo.to_matrix()));
            if !(recomputed < eps) {
                return Err(format!("residual {recomputed:.3e} >= eps {eps:e}"));
            }
            if let Some(step) = run.steps.iter().find(|s| !s.within_budget()) {
                return Err(format!("term {} over budget", step.term));
            }
            worst_ratio = worst_ratio.max(recomputed / eps);
        }
    }
    Ok(format!("worst residual/eps {worst_ratio:.3}"))
}

fn certify_sc() -> Outcome {
    let data = CriterionData::shift_instance(hs(16), c(2.0), 12).unwrap();
    let report = supercyclicity_report(&data, 1e-9).unwrap();
    if !report.passed() {
        return Err(format!("2B failed at {:?}", report.failed_clause));
    }
    if let Some(r) = report.records.iter().find(|r| r.k >= 4 && r.max_product != 0.0) {
        return Err(format!("2B product {:e} at k = {}", r.max_product, r.k));
    }
    let unweighted = CriterionData::shift_instance(hs(16), c(1.0), 12).unwrap();
    let report = supercyclicity_report(&unweighted, 1e-9).unwrap();
    if report.passed() {
        let tail: Vec<f64> = report.records.iter().rev().take(3).map(|r| r.max_product).collect();
        return Err(format!(
            "2B passes, but the unweighted shift also passes: products end {tail:?} (Bⁿ annihilates basis generators)"
        ));
    }
    Ok("2B passes, unweighted shift fails".into())
}

fn left_lift() -> Outcome {
    let s = hs(16);
    let data = CriterionData::shift_instance(s, c(2.0), 12).unwrap();
    let ideal = IdealDesc::schatten(2.0, s).unwrap();
    let lift = lift_left(&data, &[Functional::basis(s, 0).unwrap()], &ideal).unwrap();
    let report = supercyclicity_report(&lift, 1e-9).unwrap();
    if !report.passed() {
        return Err(format!("failed at {:?}", report.failed_clause));
    }
    let recon = report.records.iter().map(|r| r.max_reconstruction_error).fold(0.0, f64::max);
    if recon > 1e-12 {
        return Err(format!("reconstruction error {recon:e}"));
    }
    if let Some(r) = report.records.iter().find(|r| r.k >= 4 && r.max_product != 0.0) {
        return Err(format!("product {:e} at k = {}", r.max_product, r.k));
    }
    Ok(format!("reconstruction {recon:e}, products zero from k = 4"))
}

fn right_lift() -> Outcome {
    let x = hs(16);
    let adj = CriterionData::shift_instance(x.dual(), c(2.0), 12).unwrap();
    let ideal = IdealDesc::schatten(2.0, x).unwrap();
    let vectors = vec![SpaceVec::basis(x, 0).unwrap(), SpaceVec::basis(x, 1).unwrap()];
    let lift = lift_right(&adj, &vectors, &ideal).unwrap();
    let report = supercyclicity_report(&lift, 1e-9).unwrap();
    if !report.passed() {
        return Err(format!("failed at {:?}", report.failed_clause));
    }
    let mut recon: f64 = 0.0;
    for k in 0..lift.indices().len() {
        let n = lift.indices()[k];
        for y in lift.second_generators() {
            let back = lift.operator_power(n, &lift.n_map(k, y).unwrap()).unwrap();
            recon = recon.max(lift.distance(&back, y).unwrap());
        }
    }
    if recon > 1e-12 {
        return Err(format!("N reconstruction error {recon:e}"));
    }
    Ok(format!("N reconstruction {recon:e}"))
}

fn intertwining() -> Outcome {
    let s = hs(8);
    let mut rng = stream_rng(14, 0);
    let (mut diagram, mut witness): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let t = op_in(s, &mut rng);
        let a = op_in(s, &mut rng);
        let phi = intertwiner_left(&vec_in(s, &mut rng), &vec_in(s, &mut rng)).unwrap();
        let lhs = phi.eval_sum(&t.compose(&a).unwrap()).unwrap();
        let rhs = apply(&direct_sum(&t), &phi.eval_sum(&a).unwrap()).unwrap();
        diagram = diagram.max(lhs.sub(&rhs).unwrap().norm() / (1.0 + rhs.norm()));

        let psi = intertwiner_right(&fun_in(s, &mut rng), &fun_in(s, &mut rng)).unwrap();
        let lhs = psi.eval_sum(&a.compose(&t).unwrap()).unwrap();
        let rhs = apply(&direct_sum(&adjoint(&t)), &psi.eval_sum(&a).unwrap()).unwrap();
        diagram = diagram.max(lhs.sub(&rhs).unwrap().norm() / (1.0 + rhs.norm()));

        let (y1, y2) = (vec_in(s, &mut rng), vec_in(s, &mut rng));
        let hit = phi.eval_sum(&phi.witness(&y1, &y2).unwrap()).unwrap();
        witness = witness.max(hit.sub(&concat(&y1, &y2).unwrap()).unwrap().norm());
        let (g1, g2) = (fun_in(s, &mut rng), fun_in(s, &mut rng));
        let hit = psi.eval_sum(&psi.witness(&g1, &g2).unwrap()).unwrap();
        witness = witness.max(hit.sub(&concat(&g1.as_dual_vec(), &g2.as_dual_vec()).unwrap()).unwrap().norm());
    }
    if diagram <= 1e-12 && witness <= 1e-10 {
        Ok(format!("diagram {diagram:.1e}, witness {witness:.1e}"))
    } else {
        Err(format!("diagram {diagram:.1e}, witness {witness:.1e}"))
    }
}

fn projective_norm() -> Outcome {
    let s = hs(4);
    let mut rng = stream_rng(15, 0);
    let (mut over, mut under): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let z = TensorElem::from_coeff(s, s, gaussian_matrix(&mut rng, 4, 4)).unwrap();
        let upper = projective_norm_upper(&z, 4, i).unwrap();
        let oracle = projective_norm_hilbert_oracle(&z).unwrap();
        over = over.max(upper - oracle);
        under = under.max(oracle - upper);
    }
    if !(over < 1e-6 && under <= 1e-9) {
        return Err(format!("upper - oracle up to {over:e}, oracle - upper up to {under:e}"));
    }
    for p in [1.0, 2.0, f64::INFINITY] {
        let s = SpaceDesc::new(p, 4).unwrap();
        for _ in 0..20 {
            let (x, y) = (vec_in(s, &mut rng), vec_in(s, &mut rng));
            let got = projective_norm_upper(&TensorElem::elementary(&x, &y), 4, 0).unwrap();
            if got != x.norm() * y.norm() {
                return Err(format!("elementary tensor on l^{p}: {got} vs {}", x.norm() * y.norm()));
            }
        }
    }
    Ok(format!("upper - oracle <= {over:.1e}, elementary exact"))
}

fn theorem3_setup(d: usize, kmax: usize) -> (CriterionData, TscData) {
    let s = hs(d);
    let base = CriterionData::shift_instance(s, c(2.0), kmax).unwrap();
    let lambda = base.indices().iter().map(|&n| c(2f64.powf(-(n as f64) / 2.0))).collect();
    let sc = base.with_scalars(lambda).unwrap();
    let gens = vec![SpaceVec::basis(s, 0).unwrap(), SpaceVec::basis(s, 1).unwrap()];
    (sc, TscData::identity(s, kmax, gens).unwrap())
}

fn theorem3() -> Outcome {
    let (sc, tsc) = theorem3_setup(8, 12);
    let report = check_theorem3(&sc, &tsc, 1.0, 1e-6).unwrap();
    let last = report.records.last().unwrap();
    let third_inside = report
        .records
        .iter()
        .filter(|r| r.window_ok)
        .map(|r| r.reconstruction)
        .fold(0.0, f64::max);
    let ok = report.passed() && third_inside == 0.0;
    let detail = format!(
        "k = 12: orbit {:.2e}, right inverse {:.2e}, reconstruction {:.2e}; window ok up to k = {}; verdict {:?} ({})",
        last.scaled_orbit,
        last.scaled_right_inverse,
        last.reconstruction,
        report.records.iter().take_while(|r| r.window_ok).count().saturating_sub(1),
        report.verdict,
        report.failed_clause.as_deref().unwrap_or("-"),
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn example_tsc() -> Outcome {
    let s = hs(8);
    let gens: Vec<SpaceVec> = (0..8).map(|j| SpaceVec::basis(s, j).unwrap()).collect();
    let id = TscData::identity(s, 12, gens.clone()).unwrap();
    let r = check_tsc(&id, 1.0, 1e-9).map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(format!("identity failed at {:?}", r.failed_clause));
    }
    let mut rng = stream_rng(16, 0);
    let diag: Vec<Complex64> = (0..8).map(|_| unimodular(&mut rng)).collect();
    let iso = TscData::diagonal_isometry(s, &diag, 12, gens).unwrap();
    let r = check_tsc(&iso, 1.0, 1e-9).map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(format!("isometry failed at {:?}", r.failed_clause));
    }
    Ok("identity and diagonal isometry pass".into())
}

fn proposition_diagram() -> Outcome {
    let (e, f) = (hs(8), hs(8));
    let mut rng = stream_rng(17, 0);
    let (mut diagram, mut witness): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let t = op_in(e, &mut rng);
        let (f1, f2) = (fun_in(f, &mut rng), fun_in(f, &mut rng));
        let terms = (0..3).map(|_| (vec_in(e, &mut rng), vec_in(f, &mut rng))).collect();
        let u = TensorElem::from_decomposition(e, f, terms).unwrap();
        let (a, b) = proposition_phi(&u.apply_kron(&t, &MatOp::identity(f)).unwrap(), &f1, &f2).unwrap();
        let (pa, pb) = proposition_phi(&u, &f1, &f2).unwrap();
        let rhs = apply(&direct_sum(&t), &concat(&pa, &pb).unwrap()).unwrap();
        let lhs = concat(&a, &b).unwrap();
        diagram = diagram.max(lhs.sub(&rhs).unwrap().norm() / (1.0 + rhs.norm()));

        let (y1, y2) = (vec_in(e, &mut rng), vec_in(e, &mut rng));
        let w = proposition_witness(&y1, &y2, &f1, &f2).unwrap();
        let (a, b) = proposition_phi(&w, &f1, &f2).unwrap();
        witness = witness.max(a.sub(&y1).unwrap().norm() + b.sub(&y2).unwrap().norm());
    }
    if diagram <= 1e-12 && witness <= 1e-10 {
        Ok(format!("diagram {diagram:.1e}, witness {witness:.1e}"))
    } else {
        Err(format!("diagram {diagram:.1e}, witness {witness:.1e}"))
    }
}

fn probe_invariances() -> Outcome {
    let s = hs(4);
    let mut rng = stream_rng(18, 0);
    let mut drift: f64 = 0.0;
    for _ in 0..50 {
        let raw = op_in(s, &mut rng);
        let t = raw.scale(c(1.5 / raw.norm()));
        let x = vec_in(s, &mut rng);
        let v = vec_in(s, &mut rng);
        let target = v.scale(c(1.0 / v.norm()));
        let scale = complex_gaussian(&mut rng);
        let mut last = f64::INFINITY;
        for n in 0..=10 {
            let d = scaled_orbit_distance(&t, &x, &target, n).unwrap().distance;
            if d > last {
                return Err(format!("distance rose from {last} to {d} at N = {n}"));
            }
            last = d;
            let scaled = scaled_orbit_distance(&t, &x.scale(scale), &target, n).unwrap().distance;
            drift = drift.max((scaled - d).abs());
        }
    }
    let shift = scaled_backward_shift(s, c(2.0)).unwrap();
    let x = SpaceVec::from_real(s, &[1.0, 0.5, 0.25, 0.125]).unwrap();
    let hit = scaled_orbit_distance(&shift, &x, &SpaceVec::basis(s, 0).unwrap(), 8).unwrap();
    if (hit.n, hit.distance) != (3, 0.0) {
        return Err(format!("2B example gave {hit:?}"));
    }
    if drift <= 1e-12 {
        Ok(format!("monotone, scaling drift {drift:.1e}"))
    } else {
        Err(format!("scaling drift {drift:.1e}"))
    }
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 13] = [
        ("rank_one_schatten_norm", 1.0, rank_one_norm),
        ("ideal_axioms_domination_and_absorption", 2.0, ideal_axioms),
        ("multiplication_norm_bounds", 2.0, multiplication_bounds),
        ("finite_rank_approximation_budgets", 10.0, lemma_construction),
        ("certify_sc_weighted_and_unweighted_shift", 2.0, certify_sc),
        ("left_multiplication_lift", 2.0, left_lift),
        ("right_multiplication_lift", 2.0, right_lift),
        ("intertwining_identities", 2.0, intertwining),
        ("projective_norm_vs_nuclear_oracle", 5.0, projective_norm),
        ("tensor_product_three_limits_d8", 2.0, theorem3),
        ("tsc_identity_and_isometry", 1.0, example_tsc),
        ("factor_map_diagram", 2.0, proposition_diagram),
        ("probe_monotonicity_and_scaling", 5.0, probe_invariances),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let timing = if secs <= budget { "" } else { " [over time budget]" };
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s){timing}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name} ({secs:.2}s){timing}: {detail}");
            }
        }
    }

    // context for the d = 8 line: the same instance where the window is wide enough
    let (sc, tsc) = theorem3_setup(48, 42);
    let wide = check_theorem3(&sc, &tsc, 1.0, 1e-6).unwrap();
    println!(
        "note tensor_product_three_limits_d48_k42: verdict {:?}, right inverse at k = 42 is {:.2e}",
        wide.verdict,
        wide.records.last().unwrap().scaled_right_inverse
    );

    println!("{} of 13 criteria pass", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
