//! Release gate: ten end-to-end checks, each printing one PASS/FAIL line.
//! Any failure fails the single test at the bottom.

use covcode::bounds::{
    correlation_bound_check, environ_distinguishability_lower, thm1_worst_lower, thm2_bounds,
};
use covcode::certify::{certify_minorization, certify_reference, Certificate};
use covcode::codespace::{
    dicke_thermo, five_qudit_perfect, five_rotor_smooth, three_qutrit, three_rotor_sharp,
    three_rotor_smooth, w_state_code, CovariantCode, FIVE_ROTOR_PHI_DEFAULT,
};
use covcode::fidelity::{fe_via_constant_channel, worst_case_eps_heuristic, AscentOptions};
use covcode::groupcodes::{code_422, multiplier, phaseflip_code, verify_kl_erasure,
    verify_transversal_logical, BuiltinGroup, Side};
use covcode::noise::{reduced_family, ErasureModel};
use covcode::numkit::{sparse_fidelity, sparse_trace_norm};
use covcode::reptheory::{ek_eps_lower_from_dims, ek_min_subsystem_dim, EkMetric};

struct Gate {
    results: Vec<(String, bool, String)>,
}

impl Gate {
    fn new() -> Self {
        Gate { results: vec![] }
    }
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass, detail));
    }
    fn finish(self) {
        let failed: Vec<&(String, bool, String)> =
            self.results.iter().filter(|(_, ok, _)| !ok).collect();
        assert!(
            failed.is_empty(),
            "{} criterion(s) failed: {:?}",
            failed.len(),
            failed.iter().map(|(n, _, d)| format!("{n}: {d}")).collect::<Vec<_>>()
        );
    }
}

fn opts() -> AscentOptions {
    AscentOptions::default()
}

/// Least-squares slope of ln(y) against ln(x).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Tightest certificate available for the family: minorization when the
/// reduced operators commute, otherwise the reference-state certificate.
fn best_certificate(code: &CovariantCode, model: &ErasureModel) -> Certificate {
    let reference = code.d_l() / 2;
    match certify_minorization(code, model) {
        Ok(c) => {
            if let Ok(r) = certify_reference(code, model, reference) {
                if r.bound < c.bound {
                    return r;
                }
            }
            c
        }
        Err(_) => certify_reference(code, model, reference).expect("certificate"),
    }
}

fn criterion_1(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let mut pass = true;
    let mut worst_fe: f64 = 1.0;
    let mut worst_kl: f64 = 0.0;
    let qutrit = three_qutrit();
    for site in 0..3 {
        let model = ErasureModel::fixed_set(vec![site]);
        let fe = fe_via_constant_channel(&qutrit, &model, &opts()).unwrap();
        worst_fe = worst_fe.min(fe.value);
        pass &= (fe.value - 1.0).abs() < 1e-9;
        let kl = verify_kl_erasure(&qutrit, &[site], 4096).unwrap();
        worst_kl = worst_kl.max(kl);
        pass &= kl < 1e-12;
    }
    corpus.push((qutrit, ErasureModel::uniform_single_erasure(3)));
    for d in [2i64, 3, 5] {
        let code = five_qudit_perfect(d).unwrap();
        for i in 0..5usize {
            for j in (i + 1)..5 {
                let kl = verify_kl_erasure(&code, &[i, j], 4096).unwrap();
                worst_kl = worst_kl.max(kl);
                pass &= kl < 1e-12;
            }
        }
        corpus.push((code, ErasureModel::all_pairs_erasure(5)));
    }
    gate.record(
        "1 exact correction",
        pass,
        format!("min fe = {worst_fe:.12}, max KL violation = {worst_kl:.3e} (tol 1e-9 / 1e-12)"),
    );
}

fn criterion_2(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let mut pass = true;
    let mut cert_pts = Vec::new();
    let mut thm1_pts = Vec::new();
    let mut detail = String::new();
    for m in [20i64, 40, 80, 160] {
        let code = three_rotor_sharp(1, m).unwrap();
        let model = ErasureModel::uniform_single_erasure(3);
        let cert = certify_minorization(&code, &model).unwrap();
        let expect_cert = (4.0 / (2 * m + 1) as f64).sqrt();
        pass &= (cert.bound - expect_cert).abs() < 1e-12;
        let t1 = thm1_worst_lower(&code, &model).unwrap();
        let expect_t1 = 1.0 / (18.0 * m as f64);
        pass &= (t1.value - expect_t1).abs() < 1e-12;
        let heur = worst_case_eps_heuristic(&code, &model, 6, 17, &opts()).unwrap();
        pass &= t1.value <= heur.value + 1e-6 && heur.value <= cert.bound + 1e-6;
        cert_pts.push((m as f64, cert.bound));
        thm1_pts.push((m as f64, t1.value));
        corpus.push((code, model));
    }
    let s_cert = loglog_slope(&cert_pts);
    let s_thm1 = loglog_slope(&thm1_pts);
    pass &= (s_cert + 0.5).abs() < 0.05 && (s_thm1 + 1.0).abs() < 0.05;
    detail.push_str(&format!(
        "certificate slope {s_cert:.4} (want -0.5±0.05), lower-bound slope {s_thm1:.4} (want -1.0±0.05), closed forms to 1e-12, brackets hold"
    ));
    gate.record("2 sharp-cutoff scaling", pass, detail);
}

fn criterion_3(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let h = 2.0f64;
    let trunc_eps = 1e-6f64;
    let slack = 5.0 * trunc_eps.sqrt();
    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    for w in [4.0f64, 8.0, 16.0, 32.0] {
        let code = three_rotor_smooth(2, w, trunc_eps).unwrap();
        let model = ErasureModel::uniform_single_erasure(3);
        let cert = certify_reference(&code, &model, code.d_l() / 2).unwrap();
        let cap = (1.0 - (-h * h / (4.0 * w * w)).exp()).sqrt() + slack;
        pass &= cert.bound <= cap;
        let beta = 2.0 * (2.0 * (12.0 * w / h).ln()).sqrt();
        let t = beta * w;
        let cuts = vec![(-t, t); model.events.len()];
        let (_, worst) = thm2_bounds(&code, &model, Some(&cuts)).unwrap();
        let closed = (h / w) / (12.0 * (2.0 * (12.0 * w / h).ln()).sqrt());
        let ratio = worst.value / closed;
        worst_ratio = worst_ratio.max((ratio - 1.0).abs());
        pass &= (ratio - 1.0).abs() <= 0.25;
        let heur = worst_case_eps_heuristic(&code, &model, 6, 17, &opts()).unwrap();
        pass &= worst.value <= heur.value + 1e-6 && heur.value <= cert.bound + 1e-6;
        corpus.push((code, model));
    }
    gate.record(
        "3 smooth-cutoff scaling",
        pass,
        format!("certificates under cap with 5e-3 truncation slack, lower bound within {:.1}% of closed form (tol 25%), brackets hold", 100.0 * worst_ratio),
    );
}

fn criterion_4(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let phi = FIVE_ROTOR_PHI_DEFAULT;
    let mut pass = true;
    let mut margin1: f64 = f64::INFINITY;
    let mut margin12: f64 = f64::INFINITY;
    for w in [3.0f64, 4.0] {
        let code = five_rotor_smooth(2, w, phi, 1e-9).unwrap();
        let center = 2usize; // logical index of charge 0
        let fam1 = reduced_family(&code, &[0]).unwrap();
        let fam12 = reduced_family(&code, &[0, 1]).unwrap();
        for x in -2i64..=2 {
            let i = (x + 2) as usize;
            // sparse_fidelity already returns the squared-amplitude
            // (trace-norm) fidelity the Gaussian asymptotics are stated for.
            let f1 = sparse_fidelity(fam1.entries(i, i), fam1.entries(center, center), fam1.dim())
                .unwrap();
            let target1 = (-(x * x) as f64 / (160.0 * w * w)).exp() - 1e-3;
            margin1 = margin1.min(f1 - target1);
            pass &= f1 >= target1;
            let f12 =
                sparse_fidelity(fam12.entries(i, i), fam12.entries(center, center), fam12.dim())
                    .unwrap();
            let target12 = (-(x * x) as f64 / (60.0 * w * w)).exp() - 5e-3;
            margin12 = margin12.min(f12 - target12);
            pass &= f12 >= target12;
            for xp in -2i64..=2 {
                if xp == x {
                    continue;
                }
                let ip = (xp + 2) as usize;
                let tn = sparse_trace_norm(fam1.entries(i, ip), fam1.dim());
                let diff = (x - xp) as f64;
                let cap = (-std::f64::consts::PI.powi(2) * diff * diff * phi * phi * w * w).exp()
                    * 10.0;
                pass &= tn <= cap;
            }
        }
        corpus.push((code, ErasureModel::uniform_single_erasure(5)));
    }
    gate.record(
        "4 five-rotor reduced operators",
        pass,
        format!("single-site fidelity margin {margin1:.2e} (slack 1e-3), pair fidelity margin {margin12:.2e} (slack 5e-3), off-diagonal trace norms under Gaussian cap"),
    );
}

fn criterion_5(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let ns = [100i64, 200, 400, 800, 1600];
    let mut scaled = Vec::new();
    let mut cert_pts = Vec::new();
    let mut pass = true;
    for &n in &ns {
        let code = dicke_thermo(n, 2, 2).unwrap();
        let fam = reduced_family(&code, &[0, 1]).unwrap();
        let f = sparse_fidelity(fam.entries(1, 1), fam.entries(0, 0), fam.dim()).unwrap();
        scaled.push((1.0 - f) * (n as f64) * (n as f64));
        let model = ErasureModel::uniform_single_erasure(n as usize);
        let cert = certify_reference(&code, &model, 0).unwrap();
        cert_pts.push((n as f64, cert.bound));
        if n <= 400 {
            corpus.push((code, model));
        }
    }
    let top = &scaled[2..]; // N in {400, 800, 1600}
    let hi = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = top.iter().cloned().fold(f64::INFINITY, f64::min);
    pass &= hi / lo - 1.0 < 0.25;
    let slope = loglog_slope(&cert_pts);
    pass &= (slope + 1.0).abs() < 0.15;
    gate.record(
        "5 thermodynamic-code scaling",
        pass,
        format!("(1-F)N² varies {:.1}% over top three N (tol 25%), certificate slope {slope:.4} (want -1.0±0.15)", 100.0 * (hi / lo - 1.0)),
    );
}

fn criterion_6(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let mut pass = true;
    let mut worst_dev: f64 = 0.0;
    for d_l in [2i64, 3] {
        for n in [9i64, 25, 49, 100] {
            let code = w_state_code(d_l, n).unwrap();
            let model = ErasureModel::uniform_single_erasure(n as usize);
            let cert = certify_reference(&code, &model, 0).unwrap();
            let rn = n as f64;
            let dev = (cert.eps_prime - (2.0 / rn).sqrt())
                .abs()
                .max((cert.nu - 1.0 / rn).abs())
                .max((cert.bound - (2.0f64.sqrt() + d_l as f64) / rn.sqrt()).abs());
            worst_dev = worst_dev.max(dev);
            pass &= dev < 1e-12;
            if n <= 49 {
                corpus.push((code, model));
            }
        }
    }
    gate.record(
        "6 w-state closed forms",
        pass,
        format!("max deviation from eps' = sqrt(2/n), nu = 1/n, bound = (sqrt(2)+d_L)/sqrt(n): {worst_dev:.3e} (tol 1e-12)"),
    );
}

fn criterion_7(gate: &mut Gate) {
    let mut pass = true;
    let mut detail = String::new();
    for (n, d) in [(10u64, 2.0f64), (7, 3.0), (25, 5.0)] {
        let rep = ek_eps_lower_from_dims(2, n, &[d, d, d]).unwrap();
        let expect = 1.0 / (2.0 * n as f64 * (d - 1.0));
        pass &= (rep.value - expect).abs() < 1e-15;
    }
    // All subsystems at the logical dimension itself.
    let rep = ek_eps_lower_from_dims(2, 10, &[2.0, 2.0, 2.0]).unwrap();
    pass &= (rep.value - 1.0 / 20.0).abs() < 1e-15;
    let dim = ek_min_subsystem_dim(1000, 10, 1e-3, EkMetric::Worst).unwrap();
    let target = 65.0 * 10.0f64.ln();
    let ratio = dim.ln_dim / target;
    pass &= (0.5..=2.0).contains(&ratio) && !dim.vacuous;
    detail.push_str(&format!(
        "floors exact; ln(min subsystem dim) = {:.1} vs 65·ln10 = {:.1} (ratio {:.2}, allowed 0.5–2)",
        dim.ln_dim, target, ratio
    ));
    gate.record("7 transversality dimension floors", pass, detail);
}

fn criterion_8(gate: &mut Gate, corpus: &mut Vec<(CovariantCode, ErasureModel)>) {
    let mut pass = true;
    let mut worst_kl: f64 = 0.0;
    let mut worst_cov: f64 = 0.0;
    let mut min_violation = f64::INFINITY;
    for name in [BuiltinGroup::Zn(2), BuiltinGroup::Zn(3), BuiltinGroup::S3] {
        let gc = code_422(name).unwrap();
        let ord = gc.group.order;
        for site in 0..4 {
            let kl = verify_kl_erasure(&gc.code, &[site], 4096).unwrap();
            worst_kl = worst_kl.max(kl);
            pass &= kl < 1e-12;
        }
        let identity: Vec<usize> = (0..ord).collect();
        for l in 0..ord {
            let left = multiplier(&gc.group, l, Side::Left).unwrap();
            let physical = vec![left.clone(), identity.clone(), left, identity.clone()];
            let expected: Vec<usize> = (0..ord * ord)
                .map(|x| gc.group.mul(l, x / ord) * ord + x % ord)
                .collect();
            let r = verify_transversal_logical(&gc.code, &physical, &expected).unwrap();
            worst_cov = worst_cov.max(r);
            let right = multiplier(&gc.group, l, Side::Right).unwrap();
            let physical = vec![identity.clone(), identity.clone(), right.clone(), right];
            let expected: Vec<usize> = (0..ord * ord)
                .map(|x| (x / ord) * ord + gc.group.mul(x % ord, l))
                .collect();
            let r = verify_transversal_logical(&gc.code, &physical, &expected).unwrap();
            worst_cov = worst_cov.max(r);
        }
        pass &= worst_cov < 1e-12;
        corpus.push((gc.code, ErasureModel::uniform_single_erasure(4)));

        // Negative control: the repetition-phase code does not correct the
        // erasure of an interior subsystem.
        let pf = phaseflip_code(name, 3).unwrap();
        let violation = verify_kl_erasure(&pf.code, &[1], 4096).unwrap();
        min_violation = min_violation.min(violation);
        pass &= violation > 0.1;
        corpus.push((pf.code, ErasureModel::uniform_single_erasure(3)));
    }
    gate.record(
        "8 group codes",
        pass,
        format!("[[4,2,2]] KL ≤ {worst_kl:.2e} (tol 1e-12), covariance residual ≤ {worst_cov:.2e}, negative control violation ≥ {min_violation:.3} (want > 0.1)"),
    );
}

fn criterion_9(gate: &mut Gate, corpus: &[(CovariantCode, ErasureModel)]) {
    let mut pass = true;
    let mut worst_gap: f64 = f64::INFINITY;
    let mut n_pairs = 0;
    for (code, model) in corpus {
        let d_l = code.d_l();
        let mut lower = thm1_worst_lower(code, model).unwrap().value;
        let (_, worst) = thm2_bounds(code, model, None).unwrap();
        lower = lower.max(worst.value);
        if d_l > 1 {
            let dist = environ_distinguishability_lower(code, model, 0, d_l - 1).unwrap();
            lower = lower.max(dist.value);
        }
        let heur = worst_case_eps_heuristic(code, model, 4, 23, &opts()).unwrap();
        let upper = best_certificate(code, model).bound;
        let ok = lower <= heur.value + 1e-6 && heur.value <= upper + 1e-6;
        worst_gap = worst_gap.min((upper - lower).min(heur.value - lower).min(upper - heur.value));
        if !ok {
            println!(
                "  bracket violated for {} {}: lower {lower}, heuristic {}, upper {upper}",
                code.family, code.params, heur.value
            );
        }
        pass &= ok;
        n_pairs += 1;
    }
    gate.record(
        "9 bracket integrity",
        pass,
        format!("{n_pairs} code/model pairs: max(lower bounds) ≤ heuristic ≤ min(certificates) with 1e-6 numerical margin (tightest slack {worst_gap:.2e})"),
    );
}

fn criterion_10(gate: &mut Gate) {
    let mut pass = true;
    let mut min_margin = f64::INFINITY;
    let mut run = |code: CovariantCode| {
        let n = code.n_subsystems;
        let model = ErasureModel::uniform_single_erasure(n);
        let mut eps = Vec::new();
        for ev in &model.events {
            let single = ErasureModel::fixed_set(ev.alpha.clone());
            let fe = fe_via_constant_channel(&code, &single, &opts()).unwrap();
            eps.push((1.0 - fe.value * fe.value).max(0.0).sqrt());
        }
        let (lhs, rhs, holds) = correlation_bound_check(&code, &model, &eps).unwrap();
        min_margin = min_margin.min(rhs - lhs);
        pass &= holds;
    };
    for m in [20i64, 40] {
        run(three_rotor_sharp(1, m).unwrap());
    }
    for n in [16i64, 36] {
        run(w_state_code(2, n).unwrap());
    }
    gate.record(
        "10 correlation bound",
        pass,
        format!("LHS ≤ RHS for all four codes with exact per-event infidelities (smallest margin {min_margin:.3e})"),
    );
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    let mut corpus: Vec<(CovariantCode, ErasureModel)> = Vec::new();
    criterion_1(&mut gate, &mut corpus);
    criterion_2(&mut gate, &mut corpus);
    criterion_3(&mut gate, &mut corpus);
    criterion_4(&mut gate, &mut corpus);
    criterion_5(&mut gate, &mut corpus);
    criterion_6(&mut gate, &mut corpus);
    criterion_7(&mut gate);
    criterion_8(&mut gate, &mut corpus);
    criterion_9(&mut gate, &corpus);
    criterion_10(&mut gate);
    gate.finish();
}
