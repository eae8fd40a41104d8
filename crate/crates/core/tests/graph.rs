use kpm_core::graph::{
    clique_plus_matching, complete, hairy_clique, hypercube, laplacian_reflect_density, laplacian_reflect_spectrum, path,
    sampled_matvec, sampled_matvec_mse, star, BoostedGraphOracle, GraphAccess, NeighborAccess,
};
use kpm_core::jackson::jackson_coefficients;
use kpm_core::kpm::idealized_kpm;
use kpm_core::moments::moments_from_spectrum;
use kpm_core::spectrum::{dense_eigenvalues, w1_density_vs_spectrum};
use kpm_core::{rng, SymmetricMatrix};
use rand::Rng;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn normalized_adjacency(g: &GraphAccess) -> SymmetricMatrix {
    let triplets: Vec<_> = g
        .edges()
        .map(|(u, v)| (u, v, 1.0 / ((g.degree(u) * g.degree(v)) as f64).sqrt()))
        .collect();
    SymmetricMatrix::sparse_from_triplets(g.n(), &triplets).unwrap()
}

/// `E[w]` for one loop iteration, summed over every (vertex, neighbor,
/// accept) outcome with its exact probability.
fn expected_single_sample(g: &GraphAccess, y: &[f64]) -> Vec<f64> {
    let n = g.n();
    let mut mean = vec![0.0; n];
    let mut r = rng::sampler(0, 0);
    for j in 0..n {
        for &i in g.neighbors(j) {
            let i = i as usize;
            let prob = 1.0 / (n * g.degree(j) * g.degree(i)) as f64;
            let mut w = vec![0.0; n];
            g.add_scaled_column(i, y[i], &mut w, &mut r);
            mean.iter_mut().zip(&w).for_each(|(m, wi)| *m += prob * wi);
        }
    }
    mean
}

#[test]
fn sampled_matvec_is_unbiased_by_exact_enumeration() {
    for g in [complete(2).unwrap().graph, path(3).unwrap().graph, star(5).unwrap().graph] {
        for seed in 0..3 {
            let y = random_vector(g.n(), seed);
            let mean = expected_single_sample(&g, &y);
            let exact = g.normalized_matvec(&y).unwrap();
            assert!(sq_dist(&mean, &exact).sqrt() < 1e-12, "{mean:?} vs {exact:?}");
        }
    }
}

#[test]
fn k2_empirical_mean_and_mse() {
    let g = complete(2).unwrap().graph;
    let y = [1.0, 0.0];
    let trials = 100_000u64;
    let t = 10;
    let (mut sum, mut sum_sq, mut mse) = ([0.0; 2], [0.0; 2], 0.0);
    for s in 0..trials {
        let z = sampled_matvec(&g, &y, t, s).unwrap().z;
        for i in 0..2 {
            sum[i] += z[i];
            sum_sq[i] += z[i] * z[i];
        }
        mse += sq_dist(&z, &[0.0, 1.0]);
    }
    for (i, want) in [0.0, 1.0].into_iter().enumerate() {
        let mean = sum[i] / trials as f64;
        let var = sum_sq[i] / trials as f64 - mean * mean;
        let se = (var / trials as f64).sqrt().max(1e-12);
        assert!((mean - want).abs() <= 3.0 * se + 1e-12, "coordinate {i}: {mean}");
    }
    let mse = mse / trials as f64;
    assert!((mse - 1.0 / t as f64).abs() < 0.01, "mse {mse}");
    assert_eq!(sampled_matvec_mse(&g, &y, t).unwrap(), 1.0 / t as f64);
}

#[test]
fn mean_squared_error_matches_closed_form() {
    let graphs = [("K2", complete(2).unwrap().graph), ("star8", star(8).unwrap().graph), ("cube8", hypercube(8).unwrap().graph)];
    for (name, g) in &graphs {
        let y = random_vector(g.n(), 17);
        let exact = g.normalized_matvec(&y).unwrap();
        for t in [10u64, 100, 1000] {
            let trials = 10_000u64;
            let errs: Vec<f64> =
                (0..trials).map(|s| sq_dist(&sampled_matvec(g, &y, t, s * 7919 + t).unwrap().z, &exact)).collect();
            let mean = errs.iter().sum::<f64>() / trials as f64;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (trials - 1) as f64;
            let se = (var / trials as f64).sqrt();
            let want = sampled_matvec_mse(g, &y, t).unwrap();
            assert!((mean - want).abs() <= 3.0 * se, "{name} t={t}: {mean} vs {want} (se {se})");
        }
    }
}

#[test]
fn one_entry_touched_per_iteration_on_average() {
    for g in [complete(2).unwrap().graph, star(8).unwrap().graph, hypercube(8).unwrap().graph, path(3).unwrap().graph] {
        let y = vec![1.0; g.n()];
        let rep = sampled_matvec(&g, &y, 10_000, 3).unwrap();
        let per_iteration = rep.entries_touched as f64 / rep.samples as f64;
        assert!((per_iteration - 1.0).abs() <= 0.1, "{per_iteration}");
    }
}

#[test]
fn acceptance_frequencies_match_p_i() {
    let g = star(8).unwrap().graph;
    let iterations = 100_000u64;
    let mut counts = vec![0u64; g.n() + 1];
    let mut r = rng::sampler(42, 0);
    for _ in 0..iterations {
        match g.sample_column(&mut r) {
            Some(i) => counts[i] += 1,
            None => counts[g.n()] += 1,
        }
    }
    let mut probs: Vec<f64> = (0..g.n()).map(|i| g.acceptance_probability(i)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * iterations as f64;
            (c as f64 - e) * (c as f64 - e) / e
        })
        .sum();
    // χ²(8) critical value at significance 0.001.
    assert!(chi2 < 26.124, "chi-square {chi2}");
}

#[test]
fn boosted_oracle_on_k2() {
    let g = complete(2).unwrap().graph;
    let oracle = BoostedGraphOracle::new(&g, 0.5, 0.05, 1).unwrap();
    let y = [1.0, 0.0];
    let exact = g.normalized_matvec(&y).unwrap();
    let failures = (0..200u64).filter(|&c| sq_dist(&oracle.estimate(&y, c).unwrap().0, &exact).sqrt() > 0.5).count();
    assert!(failures as f64 <= 0.05 * 200.0, "{failures} failures");
    assert_eq!(oracle.stats().calls, 200);
}

#[test]
fn boosted_oracle_on_hypercube() {
    let g = hypercube(8).unwrap().graph;
    let eps = 0.5;
    let oracle = BoostedGraphOracle::new(&g, eps, 0.05, 2).unwrap();
    let calls = 40u64;
    let mut within = 0;
    for c in 0..calls {
        let mut y = random_vector(g.n(), 100 + c);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let exact = g.normalized_matvec(&y).unwrap();
        if sq_dist(&oracle.estimate(&y, c).unwrap().0, &exact).sqrt() <= eps {
            within += 1;
        }
    }
    assert!(within as f64 >= 0.95 * calls as f64, "{within}/{calls}");
    let stats = oracle.stats();
    assert_eq!(stats.samples, calls * oracle.repetitions() as u64 * oracle.samples());
}

#[test]
fn generator_spectra_match_dense_eigensolver() {
    let cases = [
        clique_plus_matching(16).unwrap(),
        hairy_clique(12).unwrap(),
        hypercube(4).unwrap(),
        complete(6).unwrap(),
        star(7).unwrap(),
        path(9).unwrap(),
    ];
    for case in cases {
        let dense = dense_eigenvalues(&normalized_adjacency(&case.graph)).unwrap();
        let truth = case.ground_truth.unwrap();
        for (a, b) in dense.values().iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(case.graph.reciprocal_degree_identity_holds());
    }
}

#[test]
fn matvec_agrees_with_materialized_matrix() {
    let g = hairy_clique(20).unwrap().graph;
    let y = random_vector(20, 5);
    let a = normalized_adjacency(&g);
    assert!(sq_dist(&g.normalized_matvec(&y).unwrap(), &a.apply_to(&y).unwrap()).sqrt() < 1e-14);
}

#[test]
fn sample_only_graph_gives_same_expectation() {
    let g = star(6).unwrap().graph.with_access(NeighborAccess::SampleOnly);
    let y = random_vector(6, 2);
    let mean = expected_single_sample(&g, &y);
    let exact = g.normalized_matvec(&y).unwrap();
    assert!(sq_dist(&mean, &exact).sqrt() < 1e-12);
}

#[test]
fn reflection_preserves_w1() {
    let case = hypercube(6).unwrap();
    let truth = case.ground_truth.unwrap();
    let moments = moments_from_spectrum(truth.values(), 24).unwrap();
    let q = idealized_kpm(&moments, &jackson_coefficients(24).unwrap()).unwrap();
    let direct = w1_density_vs_spectrum(&q, &truth, 2000).unwrap();
    let reflected = w1_density_vs_spectrum(&laplacian_reflect_density(&q), &laplacian_reflect_spectrum(&truth), 2000).unwrap();
    assert!((direct - reflected).abs() < 1e-9, "{direct} vs {reflected}");

    let lopsided = clique_plus_matching(40).unwrap().ground_truth.unwrap();
    let m = moments_from_spectrum(lopsided.values(), 16).unwrap();
    let q = idealized_kpm(&m, &jackson_coefficients(16).unwrap()).unwrap();
    let direct = w1_density_vs_spectrum(&q, &lopsided, 2000).unwrap();
    let reflected =
        w1_density_vs_spectrum(&laplacian_reflect_density(&q), &laplacian_reflect_spectrum(&lopsided), 2000).unwrap();
    assert!((direct - reflected).abs() < 1e-9, "{direct} vs {reflected}");
    assert!(laplacian_reflect_density(&q).is_reflected());
}
