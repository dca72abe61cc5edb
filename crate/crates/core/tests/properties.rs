use ndarray::Array2;
use phaselab::diagnostics::{coarse_grain, negativity_volume, uniform_partition, validate_measure, StructureClass};
use phaselab::phase_grid::io::{decode_snapshot, encode_snapshot};
use phaselab::{IndexBox, PhaseField, PhaseGrid};
use proptest::prelude::*;

const N_Q: usize = 16;
const N_P: usize = 16;

fn grid() -> PhaseGrid {
    PhaseGrid::new(N_Q, N_P, (-4.0, 4.0), (-4.0, 4.0), 0.5).unwrap()
}

/// Random field rescaled to unit integral; `lo < 0` allows negative values.
fn field(lo: f64) -> impl Strategy<Value = PhaseField> {
    prop::collection::vec(lo..1.0_f64, N_Q * N_P).prop_filter_map("zero integral", |v| {
        let g = grid();
        let f = PhaseField::new(g, Array2::from_shape_vec((N_Q, N_P), v).unwrap(), 0.0).ok()?;
        let norm = f.norm();
        (norm > 0.1).then(|| PhaseField::new(g, f.values() / norm, 0.0).unwrap())
    })
}

/// Cut points `0 = c_0 < ... < c_k = n`.
fn cuts(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(1..n, 0..4).prop_map(move |s| {
        let mut v = vec![0];
        v.extend(s);
        v.push(n);
        v
    })
}

fn lattice(qs: &[usize], ps: &[usize]) -> Vec<IndexBox> {
    qs.windows(2).flat_map(|a| ps.windows(2).map(move |b| IndexBox::new(a[0]..a[1], b[0]..b[1]))).collect()
}

proptest! {
    #[test]
    fn signed_fields_are_additive_quasi_probabilities(f in field(-1.0), qs in cuts(N_Q), ps in cuts(N_P)) {
        let r = validate_measure(&f, &lattice(&qs, &ps)).unwrap();
        prop_assert!(r.normalized && r.empty_is_zero && r.finitely_additive);
        if f.min() < -1e-3 {
            prop_assert_eq!(r.classification, StructureClass::QuasiProbability);
        }
    }

    #[test]
    fn nonnegative_fields_are_classical(f in field(0.0), qs in cuts(N_Q), ps in cuts(N_P)) {
        let r = validate_measure(&f, &lattice(&qs, &ps)).unwrap();
        prop_assert_eq!(r.classification, StructureClass::ClassicalProbability);
        prop_assert!((r.total - 1.0).abs() < 1e-12);
        prop_assert!(r.bounded_by >= f.max());
    }

    #[test]
    fn coarse_graining_composes_and_never_adds_negativity(f in field(-0.5)) {
        let c2 = coarse_grain(&f, 2).unwrap();
        let c4 = coarse_grain(&f, 4).unwrap();
        let c22 = coarse_grain(&c2, 2).unwrap();
        let diff = (c4.values() - c22.values()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(diff < 1e-14);
        prop_assert!((c4.norm() - f.norm()).abs() < 1e-12);
        let (n1, n2, n4) = (negativity_volume(&f), negativity_volume(&c2), negativity_volume(&c4));
        prop_assert!(n2 <= n1 + 1e-12 && n4 <= n2 + 1e-12, "{} {} {}", n1, n2, n4);
    }

    #[test]
    fn snapshots_round_trip(f in field(-1.0), t in -10.0..10.0_f64) {
        let f = f.with_time(t);
        let back = decode_snapshot(&encode_snapshot(&f).unwrap()).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.time(), t);
        prop_assert_eq!(back.grid(), f.grid());
    }
}

#[test]
fn uniform_partitions_cover_the_grid() {
    let g = grid();
    for (a, b) in [(1, 1), (3, 5), (16, 16)] {
        let boxes = uniform_partition(&g, a, b).unwrap();
        assert_eq!(boxes.len(), a * b);
        assert_eq!(boxes.iter().map(IndexBox::cells).sum::<usize>(), N_Q * N_P);
    }
    assert!(uniform_partition(&g, 17, 1).is_err());
}
