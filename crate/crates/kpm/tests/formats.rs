use std::fs;

use kpm::formats::{
    format_graph, read_density, read_graph, read_matrix, read_moments, read_spectrum, write_density, write_graph,
    write_matrix_market, write_moments, write_spectrum, DensityMetadata,
};
use kpm::CliError;
use kpm_core::graph::{hairy_clique, laplacian_reflect_density};
use kpm_core::jackson::jackson_coefficients;
use kpm_core::kpm::{full_kpm, idealized_kpm};
use kpm_core::moments::{hutchinson_moments, moments_from_spectrum};
use kpm_core::{synth, DiscreteSpectrum, GraphAccess};

fn metadata() -> DensityMetadata {
    DensityMetadata { method: "exact".into(), n: 4, seed: 3, scale_factor: 1.0, ..Default::default() }
}

#[test]
fn matrix_market_round_trip_preserves_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let a = synth::random_sparse_symmetric(30, 0.2, 5).unwrap();
    write_matrix_market(&path, &a).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(back.n(), 30);
    for i in 0..30 {
        for j in 0..30 {
            assert_eq!(back.get(i, j), a.get(i, j), "({i}, {j})");
        }
    }
}

#[test]
fn matrix_market_integer_and_upper_triangle_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.mtx");
    fs::write(&path, "%%MatrixMarket matrix coordinate integer symmetric\n%\n3 3 3\n1 1 1\n1 3 -2\n3 2 4\n").unwrap();
    let m = read_matrix(&path).unwrap();
    assert_eq!((m.get(0, 0), m.get(2, 0), m.get(0, 2), m.get(1, 2)), (1.0, -2.0, -2.0, 4.0));
}

#[test]
fn malformed_inputs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("short.mtx", "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n"),
        ("range.mtx", "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n"),
        ("nan.txt", "1 nan\nnan 1\n"),
        ("rect.txt", "1 0 0\n0 1 0\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        assert!(matches!(read_matrix(&path), Err(CliError::Input(_))), "{name}");
    }
    assert!(matches!(read_matrix(&dir.path().join("missing.mtx")), Err(CliError::Input(_))));
}

#[test]
fn graph_round_trip_and_deduplication() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let g = hairy_clique(20).unwrap().graph;
    write_graph(&path, &g).unwrap();
    assert_eq!(read_graph(&path).unwrap(), g);

    fs::write(&path, "3 3\n1 2\n2 1\n2 3\n").unwrap();
    let deduped = read_graph(&path).unwrap();
    assert_eq!(deduped.edge_count(), 2);
    assert_eq!(format_graph(&deduped), "3 2\n1 2\n2 3\n");
}

#[test]
fn graph_files_with_wrong_counts_or_isolated_vertices_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    for text in ["3 2\n1 2\n", "3 1\n1 2\n", "2 1\n1 3\n", "2 1\n1 1\n"] {
        fs::write(&path, text).unwrap();
        assert!(matches!(read_graph(&path), Err(CliError::Input(_))), "{text:?}");
    }
    assert!(GraphAccess::from_edges(2, &[(0, 1)]).is_ok());
}

#[test]
fn spectrum_text_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = DiscreteSpectrum::new(vec![0.5, -1.0, 0.25, 1.0]).unwrap();
    for name in ["s.txt", "s.json"] {
        let path = dir.path().join(name);
        write_spectrum(&path, &s).unwrap();
        assert_eq!(read_spectrum(&path).unwrap(), s);
    }
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"n": 3, "values": [0.0, 1.0]}"#).unwrap();
    assert!(read_spectrum(&path).is_err());
}

#[test]
fn moments_round_trip_keeps_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let a = synth::symmetric_with_spectrum(&synth::uniform_spectrum(20, 1), 1).unwrap();
    let m = hutchinson_moments(&a, 16, 3, 42).unwrap();
    write_moments(&path, &m).unwrap();
    assert_eq!(read_moments(&path).unwrap(), m);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"N\": 16") && text.contains("\"provenance\": \"hutchinson\""));
}

#[test]
fn density_round_trip_is_exact_for_both_forms_and_reflection() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = jackson_coefficients(24).unwrap();
    let m = moments_from_spectrum(&[-0.5, 0.1, 0.2, 0.9], 24).unwrap();
    let ideal = idealized_kpm(&m, &coeffs).unwrap();
    let full = full_kpm(&m, &coeffs).unwrap();
    for (i, q) in [ideal.clone(), full, laplacian_reflect_density(&ideal)].into_iter().enumerate() {
        let path = dir.path().join(format!("q{i}.json"));
        write_density(&path, &q, &metadata()).unwrap();
        let (back, meta) = read_density(&path).unwrap();
        assert_eq!(back, q);
        assert_eq!(meta.kind, q.form().as_str());
        assert_eq!(meta.laplacian_reflected, q.is_reflected());
        assert_eq!(meta.affine_shift, if q.is_reflected() { 1.0 } else { 0.0 });
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"form\": \"w-times-normalized-chebyshev\""));
    }
}

#[test]
fn density_without_unit_mass_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    fs::write(
        &path,
        r#"{"N": 1, "coefficients": [1.0, 0.0], "form": "w-times-normalized-chebyshev",
           "metadata": {"kind": "idealized", "method": "exact", "n": 1, "ell": 0, "seed": 0, "eps_mv": 0.0,
                        "delta": 0.1, "scale_factor": 1.0, "laplacian_reflected": false, "affine_shift": 0.0}}"#,
    )
    .unwrap();
    assert!(matches!(read_density(&path), Err(CliError::Input(_))));
}
