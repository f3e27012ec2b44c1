use lightcone::fields::{make_annular_bump, Monomial};
use lightcone::geometry::{build_sphere_quadrature, OddDimension};
use lightcone::identities::{trace_table, Grids};
use lightcone::io::{read_radon_table, read_trace_table, write_radon_table, write_trace_table};
use lightcone::radon::{build_radon_table, PlaneRule, SGrid};
use lightcone::trace::TraceKind;

fn field() -> lightcone::fields::AnalyticField {
    let d = OddDimension::new(3).unwrap();
    make_annular_bump(
        d,
        0.5,
        2.0,
        vec![Monomial { coef: 1.0, powers: vec![0, 0, 0] }, Monomial { coef: 0.5, powers: vec![1, 1, 0] }],
    )
    .unwrap()
}

fn coarse() -> Grids {
    let mut g = Grids::reference();
    g.sphere_level = 2;
    g.plane_radial = 16;
    g.plane_angular = 4;
    g
}

#[test]
fn radon_table_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("radon.csv");
    let d = OddDimension::new(3).unwrap();
    let sphere = build_sphere_quadrature(d, 2).unwrap();
    let grid = SGrid::new(-2.1, 2.1, 9).unwrap();
    let plane = PlaneRule::new(d, 16, 4).unwrap();
    let table = build_radon_table(&field(), &sphere, grid, 1, &plane).unwrap();
    write_radon_table(&table, &path).unwrap();
    assert!(path.with_extension("json").exists());
    let back = read_radon_table(&path).unwrap();
    assert_eq!(back.s_grid(), table.s_grid());
    assert_eq!(back.max_order(), 1);
    assert_eq!(back.field_digest(), table.field_digest());
    assert_eq!(back.support(), table.support());
    for j in 0..sphere.len() {
        for k in 0..grid.count {
            for o in 0..=1 {
                assert_eq!(back.value(j, k, o), table.value(j, k, o));
            }
        }
    }
    let header = std::fs::read_to_string(&path).unwrap();
    assert!(header.starts_with("theta_1,theta_2,theta_3,s,order,value\n"));
}

#[test]
fn trace_table_round_trip_keeps_derivatives() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let table = trace_table(TraceKind::V, &field(), &coarse()).unwrap();
    assert_eq!(table.deriv_orders(), 3);
    write_trace_table(&table, &path).unwrap();
    let back = read_trace_table(&path).unwrap();
    assert_eq!(back.quantity(), table.quantity());
    assert_eq!(back.support_s(), table.support_s());
    let x = [0.4, -0.7, 1.1];
    assert_eq!(back.eval_interpolated(&x).unwrap(), table.eval_interpolated(&x).unwrap());
    for j in 0..table.sphere().len() {
        for k in 0..table.s_grid().count {
            for o in 0..=3 {
                assert_eq!(back.node_derivative(j, k, o), table.node_derivative(j, k, o));
            }
        }
    }
}

#[test]
fn mismatched_sidecar_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let table = trace_table(TraceKind::U, &field(), &coarse()).unwrap();
    write_trace_table(&table, &path).unwrap();
    assert!(read_radon_table(&path).is_err());
    let text = std::fs::read_to_string(&path).unwrap();
    let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, cut).unwrap();
    assert!(read_trace_table(&path).is_err());
}
