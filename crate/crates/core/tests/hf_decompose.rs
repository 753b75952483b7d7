use std::path::PathBuf;

use g4v_core::hf_decompose::*;
use nalgebra::Vector3;
use proptest::prelude::*;

fn cubic(c: [f64; 6], label: &str) -> HyperfineTensor3 {
    HyperfineTensor3::from_components(c, Frame::CubicCrystal, label).unwrap()
}

fn max_diff(a: [f64; 6], b: [f64; 6]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/hyperfine")
}

const SI_DOPANT: [f64; 6] = [87.08, 85.48, 87.09, -4.27, 3.15, -4.25];

#[test]
fn isotropic_tensor_is_rotation_invariant() {
    let conv = FrameConvention::default_111();
    let t = cubic([5.0, 5.0, 5.0, 0.0, 0.0, 0.0], "iso");
    for angle in [C3Angle::Plus120, C3Angle::Minus120] {
        let r = rotate_tensor(&t, angle, &conv);
        assert!(max_diff(r.components(), t.components()) < 1e-12);
    }
}

#[test]
fn permutation_symmetric_pattern_is_invariant_about_111() {
    let conv = FrameConvention::default_111();
    let t = cubic([3.0, 3.0, 3.0, -1.5, -1.5, -1.5], "ab");
    let r = rotate_tensor(&t, C3Angle::Plus120, &conv);
    assert!(max_diff(r.components(), t.components()) < 1e-12);
}

#[test]
fn three_rotations_are_identity() {
    for axis in AXES_111 {
        let conv = FrameConvention::on_axis(axis).unwrap();
        let t = cubic(SI_DOPANT, "si");
        let mut r = t.clone();
        for _ in 0..3 {
            r = rotate_tensor(&r, C3Angle::Plus120, &conv);
        }
        assert!(max_diff(r.components(), t.components()) < 1e-12);
    }
}

#[test]
fn plus_120_about_111_permutes_components_cyclically() {
    // x → y → z → x, so T'_yy = T_xx, T'_zz = T_yy, T'_yz = T_xy, ...
    let conv = FrameConvention::default_111();
    let t = cubic(SI_DOPANT, "si");
    let r = rotate_tensor(&t, C3Angle::Plus120, &conv).components();
    let [xx, yy, zz, xy, xz, yz] = SI_DOPANT;
    let expect = [zz, xx, yy, xz, yz, xy];
    assert!(max_diff(r, expect) < 1e-12, "{r:?}");
}

#[test]
fn silicon_triple_average_is_c3_invariant() {
    let conv = FrameConvention::default_111();
    let t = cubic(SI_DOPANT, "si");
    let [a, b, c] = generate_equivalents_onaxis(&t, &conv);
    for x in [&b, &c] {
        assert!((x.trace() - t.trace()).abs() < 1e-12);
    }
    let set = decompose(&a, &b, &c, 0.67, AxScale::Printed).unwrap();
    let r = rotate_tensor(&set.a_mean, C3Angle::Plus120, &conv);
    assert!(max_diff(r.components(), set.a_mean.components()) < 1e-10);
}

#[test]
fn isotropic_input_gives_identical_triple() {
    let conv = FrameConvention::default_111();
    let t = cubic([2.0, 2.0, 2.0, 0.0, 0.0, 0.0], "iso");
    let [a, b, c] = generate_equivalents_onaxis(&t, &conv);
    assert!(max_diff(a.components(), b.components()) < 1e-12);
    assert!(max_diff(a.components(), c.components()) < 1e-12);
}

#[test]
fn equal_inputs_give_pure_static_limit() {
    let t = cubic(SI_DOPANT, "a");
    let set = decompose(&t, &t, &t, 0.7, AxScale::Printed).unwrap();
    assert!(set.a_x.components().iter().all(|x| x.abs() < 1e-12));
    assert!(set.a_y.components().iter().all(|x| x.abs() < 1e-12));
    assert!(max_diff(set.a_mean.components(), SI_DOPANT) < 1e-12);
}

#[test]
fn decompose_rejects_bad_q_and_mixed_frames() {
    let t = cubic(SI_DOPANT, "a");
    assert_eq!(
        decompose(&t, &t, &t, 0.0, AxScale::Printed),
        Err(HfError::InvalidQ(0.0))
    );
    assert_eq!(
        decompose(&t, &t, &t, 1.2, AxScale::Printed),
        Err(HfError::InvalidQ(1.2))
    );
    let d = to_defect_frame(&t, &FrameConvention::default_111()).unwrap();
    assert!(matches!(
        decompose(&t, &d, &t, 0.5, AxScale::Printed),
        Err(HfError::FrameMismatch(..))
    ));
}

#[test]
fn to_defect_frame_preserves_trace_and_projects_zz() {
    let conv = FrameConvention::default_111();
    let t = cubic(SI_DOPANT, "si");
    let d = to_defect_frame(&t, &conv).unwrap();
    assert!((d.trace() - t.trace()).abs() < 1e-12);
    // n·T·n with n = (1,1,1)/√3 is the sum of all entries over 3
    let [xx, yy, zz, xy, xz, yz] = SI_DOPANT;
    let nn = (xx + yy + zz + 2.0 * (xy + xz + yz)) / 3.0;
    assert!((d.components()[2] - nn).abs() < 1e-12);
    assert!((nn - 82.97).abs() < 0.005);

    let iso = cubic([4.0, 4.0, 4.0, 0.0, 0.0, 0.0], "iso");
    let di = to_defect_frame(&iso, &conv).unwrap();
    assert!(max_diff(di.components(), [4.0, 4.0, 4.0, 0.0, 0.0, 0.0]) < 1e-12);
    assert!(matches!(
        to_defect_frame(&di, &conv),
        Err(HfError::WrongFrame { .. })
    ));
}

fn dopant(c: [f64; 6], q: f64) -> g4v_core::spin_hamiltonian::EffectiveHF {
    decompose_onaxis(&cubic(c, "dopant"), q, None, AxScale::Printed)
        .unwrap()
        .1
}

#[test]
fn dopant_axial_parameters_match_reference() {
    let cases = [
        (SI_DOPANT, 0.67, 83.3, 88.7),
        ([43.24, 42.84, 43.24, -1.63, 0.45, -1.64], 0.69, 41.2, 44.0),
        (
            [1012.14, 1011.20, 1012.15, -18.766, -16.214, -18.763],
            0.72,
            976.0,
            1029.7,
        ),
        (
            [-1179.04, -1175.31, -1179.05, 14.46, 13.63, 14.45],
            0.74,
            -1149.4,
            -1192.0,
        ),
    ];
    for (c, q, par, perp) in cases {
        let hf = dopant(c, q);
        assert!((hf.a_par - par).abs() <= 0.5, "{hf:?}");
        assert!((hf.a_perp - perp).abs() <= 0.5, "{hf:?}");
    }
}

#[test]
fn silicon_dynamic_parameters() {
    let hf = dopant(SI_DOPANT, 0.67);
    assert!((hf.a1 - 2.9).abs() < 0.1, "{hf:?}");
    assert!((hf.a2 + 3.0).abs() < 0.1, "{hf:?}");
}

#[test]
fn isotropic_mean_gives_isotropic_axial_parameters() {
    let hf = dopant([7.0, 7.0, 7.0, 0.0, 0.0, 0.0], 0.5);
    assert!((hf.a_par - 7.0).abs() < 1e-12 && (hf.a_perp - 7.0).abs() < 1e-12);
    assert!(hf.a1.abs() < 1e-12 && hf.a2.abs() < 1e-12);
}

#[test]
fn explicit_axis_changes_projection() {
    // n·T·n along [1,-1,1] flips the sign of xy and yz
    let [xx, yy, zz, xy, xz, yz] = SI_DOPANT;
    let expect = (xx + yy + zz + 2.0 * (-xy + xz - yz)) / 3.0;
    let hf = decompose_onaxis(
        &cubic(SI_DOPANT, "si"),
        0.67,
        Some([1, -1, 1]),
        AxScale::Printed,
    )
    .unwrap()
    .1;
    assert!((hf.a_par - expect).abs() < 1e-10);
    assert_eq!(DEFAULT_AXIS, [1, 1, 1]);
}

#[test]
fn extract_axial_flags_off_axis_sites() {
    let t = cubic([18.36, 22.91, 21.14, 6.03, -5.17, -7.53], "c");
    let set = decompose(&t, &t, &t, 0.67, AxScale::Printed).unwrap();
    assert!(matches!(
        extract_axial(&set, &FrameConvention::default_111()),
        Err(HfError::OffAxisResidual(_))
    ));
}

struct Neighbors {
    q: f64,
    c2356: [f64; 6],
    c14: [f64; 6],
    p1: [f64; 3],
    p3: [f64; 3],
    table: [[f64; 6]; 3],
}

fn first_neighbor_cases() -> Vec<(&'static str, Neighbors)> {
    vec![
        (
            "SiV",
            Neighbors {
                q: 0.67,
                c2356: [18.36, 22.91, 21.14, 6.03, -5.17, -7.53],
                c14: [98.46, 100.94, 98.45, -28.79, 28.26, -28.79],
                p1: [-1.0, 3.0, 3.0],
                p3: [3.0, -1.0, 3.0],
                table: [
                    [60.4, 43.2, 37.5, 0.0, 7.2, 0.0],
                    [-22.0, -6.8, -10.6, -3.0, -4.6, 2.7],
                    [-50.7, -15.6, -24.4, 2.3, -10.7, -2.1],
                ],
            },
        ),
        (
            "GeV",
            Neighbors {
                q: 0.69,
                c2356: [19.76, 23.84, 22.14, 6.69, -5.83, -7.92],
                c14: [113.87, 112.83, 113.87, -31.78, 31.75, -31.79],
                p1: [-3.0, -3.0, 1.0],
                p3: [-3.0, 1.0, -3.0],
                table: [
                    [77.6, 37.0, 42.0, 0.0, 13.9, 0.0],
                    [-23.1, -11.5, -13.0, 1.2, -4.0, 0.4],
                    [-52.9, -26.2, -29.7, -1.0, -9.2, -0.3],
                ],
            },
        ),
        (
            "SnV",
            Neighbors {
                q: 0.72,
                c2356: [16.32, 20.34, 18.48, 7.13, -6.23, -8.33],
                c14: [95.15, 95.64, 95.16, -32.49, 32.50, -32.49],
                p1: [-3.0, -3.0, 1.0],
                p3: [-3.0, 1.0, -3.0],
                table: [
                    [70.1, 28.3, 33.4, 0.0, 14.6, 0.0],
                    [-21.4, -9.3, -10.8, 1.3, -4.3, 0.4],
                    [-49.3, -21.3, -24.9, -1.0, -9.8, -0.3],
                ],
            },
        ),
        (
            "PbV",
            Neighbors {
                q: 0.74,
                c2356: [14.83, 18.50, 16.65, 7.15, -6.23, -8.20],
                c14: [99.96, 99.02, 99.96, -33.97, 34.53, -33.97],
                p1: [-1.0, 3.0, 3.0],
                p3: [3.0, -1.0, 3.0],
                table: [
                    [60.4, 39.1, 33.7, 0.0, 9.1, 0.0],
                    [-26.7, -7.4, -12.2, -4.0, -6.6, 3.5],
                    [-61.6, -16.9, -28.1, 3.1, -15.2, -2.7],
                ],
            },
        ),
    ]
}

/// x ↔ z swap, the mirror through the plane normal to (1, 0, −1).
fn swap_xz(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[2], v[1], v[0])
}

#[test]
fn first_neighbor_blocks_match_reference() {
    for (name, n) in first_neighbor_cases() {
        let c1 = cubic(n.c2356, "C1");
        let normal = Vector3::new(1.0, 0.0, -1.0);
        let c2 = mirror_partner(&c1, normal).with_label("C2");
        let c3 = cubic(n.c14, "C3");
        let p1 = Vector3::from(n.p1);
        // C2 is the mirror image of C1; C3 is the remaining C1,4 site.
        let p2 = swap_xz(n.p1);
        let p3 = Vector3::from(n.p3);
        let site = |t: &HyperfineTensor3, p| SiteTensor {
            tensor: t.clone(),
            position: p,
        };
        let (set, _) = decompose_offaxis_sites(
            &site(&c1, p1),
            &site(&c2, p2),
            &site(&c3, p3),
            n.q,
            [1, 1, 1],
            AxScale::Printed,
        )
        .unwrap_or_else(|e| panic!("{name}: {e}"));
        for (t, expect) in [&set.a_mean, &set.a_x, &set.a_y].iter().zip(&n.table) {
            let err = max_diff(t.components(), *expect);
            assert!(
                err <= 0.5,
                "{name} {}: {:?} vs {expect:?} ({err})",
                t.label(),
                t.components()
            );
        }
    }
}

#[test]
fn rotation_images_have_no_orbital_part() {
    let conv = FrameConvention::for_site(Vector3::new(1.0, 5.0, 5.0), [1, 1, 1], "s").unwrap();
    let t = cubic([-2.60, -1.87, -3.32, -1.60, 0.03, 0.47], "s");
    let b = rotate_tensor(&t, C3Angle::Plus120, &conv);
    let c = rotate_tensor(&t, C3Angle::Minus120, &conv);
    let set = decompose_offaxis(&t, &b, &c, 0.67, &conv, AxScale::Printed).unwrap();
    assert!(set.a_x.components().iter().all(|x| x.abs() < 1e-12));
    assert!(set.a_y.components().iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn wrong_partner_position_is_reported() {
    let t = cubic(SI_DOPANT, "c");
    let s = |p: [f64; 3]| SiteTensor {
        tensor: t.clone(),
        position: Vector3::from(p),
    };
    let r = decompose_offaxis_sites(
        &s([-1.0, 3.0, 3.0]),
        &s([3.0, -1.0, 3.0]),
        &s([3.0, 3.0, -1.0]),
        0.67,
        [1, 1, 1],
        AxScale::Printed,
    );
    let err = r.unwrap_err();
    assert!(matches!(err, HfError::PositionMismatch { .. }));
    assert!(err.is_symmetry_violation());
}

#[test]
fn mirror_reconstruction_on_synthetic_tensor() {
    // A tensor built symmetric under x ↔ z is its own mirror partner.
    let t = cubic([1.0, 2.0, 1.0, 0.3, 0.7, 0.3], "m");
    let m = mirror_partner(&t, Vector3::new(1.0, 0.0, -1.0));
    assert!(max_diff(m.components(), t.components()) < 1e-12);
    // A general tensor has xx and zz swapped and xy ↔ yz.
    let g = cubic([1.0, 2.0, 3.0, 0.4, 0.5, 0.6], "g");
    let mg = mirror_partner(&g, Vector3::new(1.0, 0.0, -1.0));
    assert!(max_diff(mg.components(), [3.0, 2.0, 1.0, 0.6, 0.5, 0.4]) < 1e-12);
}

#[test]
fn reconstruction_at_q_one_is_exact() {
    let a = cubic(SI_DOPANT, "a");
    let b = cubic([1.0, 2.0, 3.0, 0.4, 0.5, 0.6], "b");
    let c = cubic([-4.0, 0.0, 2.0, 1.0, -1.0, 0.0], "c");
    for scale in [AxScale::Printed, AxScale::RoundTrip] {
        let set = decompose(&a, &b, &c, 1.0, scale).unwrap();
        let [ra, rb, rc] = reconstruct(&set).unwrap();
        for (x, y) in [(&ra, &a), (&rb, &b), (&rc, &c)] {
            assert!(max_diff(x.components(), y.components()) < 1e-12);
        }
    }
}

fn doc_text(path: &str) -> String {
    std::fs::read_to_string(data_dir().join(path)).unwrap()
}

#[test]
fn shipped_example_reproduces_silicon() {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples/siv_ground_tensors.json");
    let doc = load_document(&path).unwrap();
    let out = run_document(&doc, None).unwrap();
    let hf = out.effective_hf.unwrap();
    assert!((hf.a_par - 83.3).abs() <= 0.5 && (hf.a_perp - 88.7).abs() <= 0.5);
    assert_eq!(out.axis, [1, 1, 1]);
    assert!(out
        .effective_csv()
        .unwrap()
        .starts_with("parameter,value_MHz\nA_par,82.97"));
    assert!(out.tensors_csv().starts_with("tensor,xx_MHz"));
}

#[test]
fn shipped_first_neighbor_files_run() {
    for key in ["siv", "gev", "snv", "pbv"] {
        let doc = parse_document(&doc_text(&format!("{key}_c13_first.json"))).unwrap();
        let out = run_document(&doc, None).unwrap();
        assert!(out.effective_hf.is_none());
        assert_eq!(out.orbital_set.a_mean.frame(), Frame::DefectAxial);
        let second = parse_document(&doc_text(&format!("{key}_c13_second.json"))).unwrap();
        let out2 = run_document(&second, None).unwrap();
        assert!(out2
            .orbital_set
            .a_x
            .components()
            .iter()
            .all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn q_override_scales_orbital_part() {
    let doc = parse_document(&doc_text("siv_dopant.json")).unwrap();
    let a = run_document(&doc, None).unwrap();
    let b = run_document(&doc, Some(0.335)).unwrap();
    let ra = a.orbital_set.a_y.components();
    let rb = b.orbital_set.a_y.components();
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x / 2.0 - y).abs() < 1e-12);
    }
    assert!(run_document(&doc, Some(1.5)).is_err());
}

#[test]
fn document_validation() {
    let base = doc_text("siv_dopant.json");
    let unknown = base.replacen("\"q\"", "\"bogus\": 1, \"q\"", 1);
    assert!(matches!(parse_document(&unknown), Err(HfError::Schema(_))));
    let version = base.replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
    assert!(matches!(parse_document(&version), Err(HfError::Schema(_))));
    let asym = base.replacen("-4.27,", "-9.27,", 1);
    let err = run_document(&parse_document(&asym).unwrap(), None).unwrap_err();
    assert!(matches!(err, HfError::Asymmetric { .. }) && err.is_symmetry_violation());
    let off = doc_text("siv_c13_first.json").replacen(
        "\"position\": [\n        3,\n        3,\n        -1",
        "\"position\": [\n        3,\n        3,\n        1",
        1,
    );
    let err = parse_document(&off)
        .and_then(|d| run_document(&d, None))
        .unwrap_err();
    assert!(err.is_symmetry_violation(), "{err:?}");
}

fn arb_tensor() -> impl Strategy<Value = HyperfineTensor3> {
    prop::array::uniform6(-200.0..200.0f64)
        .prop_map(|c| HyperfineTensor3::from_components(c, Frame::CubicCrystal, "t").unwrap())
}

fn arb_axis() -> impl Strategy<Value = [i32; 3]> {
    prop::sample::select(AXES_111.to_vec())
}

proptest! {
    #[test]
    fn mean_is_c3_invariant(t in arb_tensor(), axis in arb_axis(), q in 0.05..1.0f64) {
        let conv = FrameConvention::on_axis(axis).unwrap();
        let [a, b, c] = generate_equivalents_onaxis(&t, &conv);
        let set = decompose(&a, &b, &c, q, AxScale::Printed).unwrap();
        let r = rotate_tensor(&set.a_mean, C3Angle::Plus120, &conv);
        prop_assert!(max_diff(r.components(), set.a_mean.components()) < 1e-10);
        prop_assert!((set.a_mean.trace() - (a.trace() + b.trace() + c.trace()) / 3.0).abs() < 1e-10);
    }

    #[test]
    fn round_trip_at_q_one(a in arb_tensor(), b in arb_tensor(), c in arb_tensor()) {
        let set = decompose(&a, &b, &c, 1.0, AxScale::Printed).unwrap();
        let [ra, rb, rc] = reconstruct(&set).unwrap();
        for (x, y) in [(&ra, &a), (&rb, &b), (&rc, &c)] {
            prop_assert!(max_diff(x.components(), y.components()) < 1e-10);
        }
    }

    #[test]
    fn orbital_part_is_linear_in_q(a in arb_tensor(), b in arb_tensor(), c in arb_tensor(), q in 0.05..1.0f64) {
        let one = decompose(&a, &b, &c, 1.0, AxScale::RoundTrip).unwrap();
        let s = decompose(&a, &b, &c, q, AxScale::RoundTrip).unwrap();
        prop_assert_eq!(s.a_mean.components(), one.a_mean.components());
        for (x, y) in [(&s.a_x, &one.a_x), (&s.a_y, &one.a_y)] {
            let scaled: Vec<f64> = y.components().iter().map(|v| v * q).collect();
            prop_assert!(max_diff(x.components(), scaled.try_into().unwrap()) < 1e-10);
        }
    }

    #[test]
    fn outputs_are_symmetric(a in arb_tensor(), b in arb_tensor(), c in arb_tensor()) {
        let set = decompose(&a, &b, &c, 0.7, AxScale::Printed).unwrap();
        for t in [&set.a_mean, &set.a_x, &set.a_y] {
            let m = t.matrix();
            prop_assert!((m - m.transpose()).amax() <= 1e-9);
        }
    }

    #[test]
    fn defect_frame_preserves_trace(t in arb_tensor(), axis in arb_axis()) {
        let conv = FrameConvention::on_axis(axis).unwrap();
        let d = to_defect_frame(&t, &conv).unwrap();
        prop_assert!((d.trace() - t.trace()).abs() < 1e-10);
    }
}
