use broadbeam_socp::{solve, solve_with, Affine, Cone, ConeProgram, EqualityMode, Settings, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest eigenvalue of `u` in the product cone described by `prog`.
fn cone_margin(prog: &ConeProgram, u: &[f64]) -> f64 {
    prog.blocks()
        .iter()
        .map(|b| {
            let blk = &u[b.start..b.start + b.cone.dim()];
            match b.cone {
                Cone::NonNeg(_) => blk.iter().cloned().fold(f64::INFINITY, f64::min),
                Cone::Soc(_) => blk[0] - norm(&blk[1..]),
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn gt_times(prog: &ConeProgram, z: &[f64]) -> Vec<f64> {
    let n = prog.num_vars();
    let mut out = vec![0.0; n];
    for (row, zi) in prog.g().chunks_exact(n).zip(z) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r * zi;
        }
    }
    out
}

/// Random program that is strictly primal and dual feasible by construction.
fn random_program(rng: &mut ChaCha8Rng, n: usize, with_eq: bool) -> ConeProgram {
    let mut p = ConeProgram::new(n);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut zs: Vec<Vec<f64>> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let nblocks = rng.gen_range(3..7);
    for _ in 0..nblocks {
        let soc = rng.gen_bool(0.6);
        let d = if soc { rng.gen_range(2..6) } else { rng.gen_range(1..4) };
        let g: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        // interior slack and multiplier
        let mut s: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut z: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        if soc {
            s[0] = norm(&s[1..]) + rng.gen_range(0.1..1.0);
            z[0] = norm(&z[1..]) + rng.gen_range(0.1..1.0);
        } else {
            s.iter_mut().for_each(|v| *v = v.abs() + 0.1);
            z.iter_mut().for_each(|v| *v = v.abs() + 0.1);
        }
        let exprs: Vec<(Vec<f64>, f64)> = g
            .iter()
            .zip(&s)
            .map(|(gr, si)| (gr.clone(), si - dot(gr, &x0)))
            .collect();
        let aff: Vec<Affine> = exprs.iter().map(|(c, k)| Affine::new(c, *k)).collect();
        if soc {
            p.add_soc(&aff).unwrap();
        } else {
            for a in aff {
                p.add_nonneg(a).unwrap();
            }
        }
        zs.push(z);
        rows.extend(g);
    }
    // stationarity c = Σ zᵢ·coeffsᵢ (+ Aᵀy0) makes z0 dual feasible
    let z0: Vec<f64> = zs.concat();
    let mut c = vec![0.0; n];
    for (gr, zi) in rows.iter().zip(&z0) {
        for j in 0..n {
            c[j] += gr[j] * zi;
        }
    }
    if with_eq {
        for _ in 0..2 {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: f64 = rng.gen_range(-1.0..1.0);
            p.add_equality(&a, dot(&a, &x0)).unwrap();
            for j in 0..n {
                c[j] += a[j] * y;
            }
        }
    }
    p.set_objective(&c).unwrap();
    p
}

#[test]
fn random_programs_satisfy_kkt_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let n = rng.gen_range(2..8);
        let p = random_program(&mut rng, n, trial % 2 == 1);
        let out = solve(&p, 1e-9);
        assert_eq!(out.status, Status::Optimal, "trial {trial}");
        // primal feasibility
        let s = p.slack(&out.x);
        assert!(cone_margin(&p, &s) > -1e-7, "trial {trial}");
        assert!(p.equality_violation(&out.x) < 1e-7);
        // dual feasibility: z ∈ K and c + Gᵀz + Aᵀy = 0 for some y
        assert!(cone_margin(&p, &out.z) > -1e-7);
        let mut r: Vec<f64> = gt_times(&p, &out.z).iter().zip(p.objective()).map(|(a, c)| a + c).collect();
        if p.num_eq() > 0 {
            // project out the row space of A by Gram-Schmidt
            let a: Vec<&[f64]> = p.eq_a().chunks_exact(n).collect();
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for row in a {
                let mut v = row.to_vec();
                for q in &basis {
                    let k = dot(&v, q);
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= k * b);
                }
                let nv = norm(&v);
                basis.push(v.iter().map(|a| a / nv).collect());
            }
            for q in &basis {
                let k = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= k * b);
            }
        }
        assert!(norm(&r) < 1e-6 * norm(p.objective()).max(1.0), "trial {trial}: {}", norm(&r));
        // complementary slackness
        let gap = dot(&s, &out.z).abs();
        assert!(gap < 1e-6, "trial {trial}: gap {gap}");
    }
}

#[test]
fn chebyshev_monomial_deviation() {
    // best uniform approximation of t⁴ on [−1, 1] by a cubic has error 2⁻³
    let mut ts: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    ts.extend((0..=4).map(|k| (k as f64 * std::f64::consts::PI / 4.0).cos()));
    let mut p = ConeProgram::new(5);
    p.set_objective_coeff(4, 1.0).unwrap();
    for &t in &ts {
        let row = [1.0, t, t * t, t * t * t];
        let f = t.powi(4);
        // e ≥ |f − pᵀrow|
        let up = [row[0], row[1], row[2], row[3], 1.0];
        p.add_nonneg(Affine::new(&up, -f)).unwrap();
        let dn = [-row[0], -row[1], -row[2], -row[3], 1.0];
        p.add_nonneg(Affine::new(&dn, f)).unwrap();
    }
    let out = solve(&p, 1e-10);
    assert_eq!(out.status, Status::Optimal);
    assert!((out.objective - 0.125).abs() < 1e-8, "{}", out.objective);
    // minimax polynomial is t⁴ − T₄(t)/8 = t² − 1/8
    let want = [-0.125, 0.0, 1.0, 0.0];
    for (a, b) in out.x.iter().zip(want) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn infeasible_program_carries_valid_certificate() {
    // ‖x‖ ≤ 1 together with x₀ ≥ 2
    let mut p = ConeProgram::new(2);
    p.set_tag("ball");
    p.add_soc(&[
        Affine::new(&[0.0, 0.0], 1.0),
        Affine::new(&[1.0, 0.0], 0.0),
        Affine::new(&[0.0, 1.0], 0.0),
    ])
    .unwrap();
    p.set_tag("halfspace");
    p.add_nonneg(Affine::new(&[1.0, 0.0], -2.0)).unwrap();
    let out = solve(&p, 1e-8);
    assert_eq!(out.status, Status::Infeasible);
    let cert = out.certificate.unwrap();
    assert!(cone_margin(&p, &cert.z) > -1e-9);
    assert!(norm(&gt_times(&p, &cert.z)) < 1e-7);
    assert!((dot(p.h(), &cert.z) + 1.0).abs() < 1e-9);
    let names: Vec<&str> = cert.family_weights.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"ball") && names.contains(&"halfspace"));
}

#[test]
fn inconsistent_equalities_with_cones() {
    let mut p = ConeProgram::new(2);
    p.add_equality(&[1.0, 1.0], 1.0).unwrap();
    p.add_equality(&[2.0, 2.0], 3.0).unwrap();
    p.set_objective(&[0.0, 1.0]).unwrap();
    p.add_soc(&[Affine::new(&[0.0, 1.0], 0.0), Affine::new(&[1.0, 0.0], 0.0)]).unwrap();
    let strict = solve(&p, 1e-8);
    assert_eq!(strict.status, Status::Infeasible);
    let cert = strict.certificate.unwrap();
    // Aᵀy = 0, bᵀy = −1
    let aty0 = cert.y[0] + 2.0 * cert.y[1];
    assert!(aty0.abs() < 1e-10);
    assert!((cert.y[0] + 3.0 * cert.y[1] + 1.0).abs() < 1e-10);
    let ls = solve_with(&p, &Settings { equality: EqualityMode::LeastSquares, ..Settings::default() });
    assert_eq!(ls.status, Status::Optimal);
    // least-squares consistent set is x₀ + x₁ = 1.4; minimizing x₁ ≥ |x₀| gives x = (0.7, 0.7)
    assert!((ls.x[0] - 0.7).abs() < 1e-6 && (ls.x[1] - 0.7).abs() < 1e-6, "{:?}", ls.x);
    assert!(ls.equality_residual > 0.1);
}

#[test]
fn block_order_does_not_change_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.gen_range(3..7);
        let p = random_program(&mut rng, n, false);
        let nb = p.blocks().len();
        let mut order: Vec<usize> = (0..nb).collect();
        for i in (1..nb).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let q = p.with_block_order(&order);
        let a = solve(&p, 1e-9);
        let b = solve(&q, 1e-9);
        assert!(a.is_optimal() && b.is_optimal(), "{:?} {:?} {} {} {} {}", a.status, b.status, a.primal_residual, a.dual_residual, a.gap, a.iterations);
        assert!((a.objective - b.objective).abs() < 1e-8, "{} vs {}", a.objective, b.objective);
    }
}

#[test]
fn sparse_dump_lists_every_nonzero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_program(&mut rng, 3, true);
    let mut buf = Vec::new();
    p.write_sparse(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let g_lines = text.lines().filter(|l| l.starts_with("G ")).count();
    let g_nonzero = p.g().iter().filter(|v| **v != 0.0).count();
    assert_eq!(g_lines, g_nonzero);
    let a_lines = text.lines().filter(|l| l.starts_with("A ")).count();
    assert_eq!(a_lines, p.eq_a().iter().filter(|v| **v != 0.0).count());
    assert!(text.lines().any(|l| l == "vars 3"));
}
