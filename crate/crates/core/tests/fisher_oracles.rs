use nalgebra::{DMatrix, SymmetricEigen};
use qfi_bandlimit::fisher::{
    localization_matrix_elements, min_std_dev, qfi_eigen_formula, qfi_localization,
    qfi_localization_checked, qfi_pair, qfi_pair_checked, qfi_scaled, Convergence,
};
use qfi_bandlimit::quadrature::{FrequencyRule, FrequencyRuleKind};
use qfi_bandlimit::spdo_loc::{solve_loc, SolveOptions};
use qfi_bandlimit::spdo_pair::solve_pair;
use qfi_bandlimit::{KernelTriple, MONOCHROMATIC_QFI};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `2 Σ |⟨i|∂ρ|j⟩|² / (λ_i + λ_j)` over the full eigenbasis of `ρ`.
fn sld_qfi(rho: &DMatrix<f64>, drho: &DMatrix<f64>, tol: f64) -> f64 {
    let eig = SymmetricEigen::new(rho.clone());
    let u = &eig.eigenvectors;
    let d = u.transpose() * drho * u;
    let n = rho.nrows();
    let mut h = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = eig.eigenvalues[i] + eig.eigenvalues[j];
            if s > tol {
                h += 2.0 * d[(i, j)] * d[(i, j)] / s;
            }
        }
    }
    h
}

#[test]
fn eigen_formula_matches_direct_sld_on_toy_state() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..10 {
        let a0 = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let a1 = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let rho = &a0 * a0.transpose();
        let tr = rho.trace();
        let rho = rho / tr;
        let drho = (&a1 * a0.transpose() + &a0 * a1.transpose()) / tr;
        let direct = sld_qfi(&rho, &drho, 1e-12);

        let eig = SymmetricEigen::new(rho.clone());
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let keep = &order[..3];
        let lam: Vec<f64> = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
        let d2 = &drho * &drho;
        let mut d = vec![0.0; 9];
        let mut s = vec![0.0; 3];
        for (a, &i) in keep.iter().enumerate() {
            let vi = eig.eigenvectors.column(i);
            s[a] = (vi.transpose() * &d2 * vi)[(0, 0)];
            for (b, &j) in keep.iter().enumerate() {
                let vj = eig.eigenvectors.column(j);
                d[a * 3 + b] = (vi.transpose() * &drho * vj)[(0, 0)];
            }
        }
        let (h, diag, cross) = qfi_eigen_formula(&lam, &d, &s);
        assert!((h - direct).abs() < 1e-8 * direct, "{h} vs {direct}");
        assert!((diag + cross - h).abs() < 1e-12 * h);
    }
}

/// QFI of `ρ = Σ_k w_k |K_k⟩⟨K_k|` from the Gram matrix of the states
/// `√w_k K_k` and their `l`-derivatives, without any eigenstate machinery.
/// Each state is `(s, f, w)`: a source on side `s = ±1` at detuning `f`.
fn gram_qfi(states: &[(f64, f64, f64)], l: f64) -> f64 {
    let n = states.len();
    let k = KernelTriple::new(l).unwrap();
    let g = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (sa, fa, wa) = states[i % n];
        let (sb, fb, wb) = states[j % n];
        // ⟨K_b|K_a⟩ = O(X), ⟨K_b|∂K_a⟩ = s_a(1+f_a)P(X), X = s_a(1+f_a) - s_b(1+f_b)
        let (ea, eb) = (sa * (1.0 + fa), sb * (1.0 + fb));
        let w = (wa * wb).sqrt();
        match (i < n, j < n) {
            (true, true) => w * k.o(eb - ea),
            (true, false) => w * eb * k.p(eb - ea),
            (false, true) => w * ea * k.p(ea - eb),
            (false, false) => w * ea * eb * k.q(ea - eb),
        }
    });
    let eg = SymmetricEigen::new(g);
    let gmax = eg.eigenvalues.max();
    let cols: Vec<usize> = (0..2 * n)
        .filter(|&i| eg.eigenvalues[i] > 1e-15 * gmax)
        .collect();
    // coordinates of the 2n vectors in an orthonormal basis of their span
    let coords = DMatrix::from_fn(cols.len(), 2 * n, |r, c| {
        eg.eigenvalues[cols[r]].sqrt() * eg.eigenvectors[(c, cols[r])]
    });
    let m = cols.len();
    let mut rho = DMatrix::zeros(m, m);
    let mut drho = DMatrix::zeros(m, m);
    for a in 0..n {
        let ka = coords.column(a);
        let dka = coords.column(n + a);
        rho += ka * ka.transpose();
        drho += dka * ka.transpose() + ka * dka.transpose();
    }
    sld_qfi(&rho, &drho, 1e-14)
}

fn band_states(bw: f64, n: usize, sides: &[f64]) -> Vec<(f64, f64, f64)> {
    let rule = FrequencyRule::flat_top(bw, n, FrequencyRuleKind::GaussLegendre).unwrap();
    let share = 1.0 / sides.len() as f64;
    sides
        .iter()
        .flat_map(|&s| {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(move |(&f, &w)| (s, f, share * w))
        })
        .collect()
}

#[test]
fn localization_qfi_matches_gram_oracle() {
    for (bw, l) in [(0.1, 0.2), (0.1, 1.0), (0.2, 1.0), (0.2, 5.0)] {
        let ours = qfi_localization(&solve_loc(bw, l, &SolveOptions::default()).unwrap())
            .unwrap()
            .value;
        let oracle = gram_qfi(&band_states(bw, 48, &[1.0]), l);
        assert!(
            (ours - oracle).abs() < 1e-6 * oracle,
            "({bw},{l}): {ours} vs {oracle}"
        );
    }
}

#[test]
fn pair_qfi_matches_gram_oracle() {
    for (bw, l) in [(0.1, 0.2), (0.1, 1.0), (0.2, 2.0)] {
        let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
        let ours = qfi_pair(&p, &m).unwrap().value;
        let oracle = gram_qfi(&band_states(bw, 40, &[1.0, -1.0]), l);
        assert!(
            (ours - oracle).abs() < 1e-6 * oracle,
            "({bw},{l}): {ours} vs {oracle}"
        );
    }
}

#[test]
fn derivative_matrix_is_symmetric() {
    for (bw, l) in [(0.1, 1.0), (0.2, 5.0)] {
        let sys = solve_loc(bw, l, &SolveOptions::default()).unwrap();
        let (d, s) = localization_matrix_elements(&sys).unwrap();
        let r = s.len();
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..r {
            for j in 0..r {
                assert!((d[i * r + j] - d[j * r + i]).abs() < 1e-9 * scale);
            }
        }
    }
}

#[test]
fn monochromatic_limit_both_problems() {
    for l in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let loc = qfi_localization_checked(1e-3, l, &SolveOptions::default()).unwrap();
        let pair = qfi_pair_checked(1e-3, l, &SolveOptions::default()).unwrap();
        for v in [loc.value, pair.value] {
            assert!((v / MONOCHROMATIC_QFI - 1.0).abs() < 1e-3, "l={l}: {v}");
        }
        assert!(loc.convergence.converged && pair.convergence.converged);
        let zero = qfi_localization(&solve_loc(0.0, l, &SolveOptions::default()).unwrap()).unwrap();
        assert!((zero.value - MONOCHROMATIC_QFI).abs() < 1e-12);
    }
}

#[test]
fn qfi_bounded_and_non_increasing_in_bandwidth() {
    for l in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let bw = 0.02 * i as f64;
            let v = qfi_localization(&solve_loc(bw, l, &SolveOptions::default()).unwrap())
                .unwrap()
                .value;
            assert!(
                v > 0.0 && v <= MONOCHROMATIC_QFI + 1e-6,
                "l={l} B={bw}: {v}"
            );
            assert!(v <= prev + 1e-9, "l={l} B={bw}: {v} > {prev}");
            prev = v;
        }
    }
}

#[test]
fn pair_qfi_bounded_and_non_increasing_in_bandwidth() {
    for l in [0.2, 0.6, 1.0] {
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let bw = 0.02 * i as f64;
            let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
            let v = qfi_pair(&p, &m).unwrap().value;
            assert!(
                v > 0.0 && v <= MONOCHROMATIC_QFI + 1e-6,
                "l={l} B={bw}: {v}"
            );
            assert!(v <= prev + 1e-9, "l={l} B={bw}: {v} > {prev}");
            prev = v;
        }
    }
}

#[test]
fn small_separation_exceeds_monochromatic_value() {
    // the (1+f) factors lift the broadband QFI above 4π² as l → 0
    let v = qfi_localization(&solve_loc(0.2, 0.01, &SolveOptions::default()).unwrap())
        .unwrap()
        .value;
    let limit = MONOCHROMATIC_QFI * (1.0 + 0.2 * 0.2 / 12.0);
    assert!((v / limit - 1.0).abs() < 1e-3, "{v} vs {limit}");
}

#[test]
fn photon_scaling_and_standard_deviation() {
    assert!((min_std_dev(39.41, 1).unwrap() - 0.1593).abs() < 5e-5);
    assert!((min_std_dev(39.41, 100).unwrap() - 0.01593).abs() < 5e-6);
    assert_eq!(qfi_scaled(12.5, 8).unwrap(), 100.0);
    assert!(qfi_scaled(1.0, 0).is_err());
    assert!(min_std_dev(1.0, 0).is_err());
    assert!(min_std_dev(0.0, 1).is_err());
    let r = qfi_localization(&solve_loc(0.1, 1.0, &SolveOptions::default()).unwrap()).unwrap();
    assert_eq!(r.scaled(3).unwrap(), 3.0 * r.value);
    assert_eq!(r.min_std_dev(4).unwrap(), 1.0 / (4.0 * r.value).sqrt());
}

#[test]
fn convergence_flag() {
    assert!(Convergence::new(1e-7, Some(1e-9)).converged);
    assert!(!Convergence::new(2e-6, None).converged);
    assert!(!Convergence::new(0.0, Some(1e-5)).converged);
    let r = qfi_localization_checked(0.1, 1.0, &SolveOptions::default()).unwrap();
    assert!(r.convergence.converged);
    assert!(r.convergence.grid_shift.unwrap() < 1e-9);
    assert!((r.diagonal_sum + r.cross_sum - r.value).abs() < 1e-12 * r.value);
}
