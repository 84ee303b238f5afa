use proptest::prelude::*;
use quadwind_core::wind::{grid_from_csv, load_grid_wind, save_grid_wind, GridWindField};
use quadwind_core::Vec3;

const DIMS: [usize; 4] = [5, 4, 3, 3];
const SPACING: [f64; 4] = [10.0, 10.0, 5.0, 2.0];
const ORIGIN: [f64; 4] = [0.0, 0.0, -60.0, 0.0];

fn analytic(p: Vec3, t: f64) -> Vec3 {
    let (sx, sy) = (
        (2.0 * std::f64::consts::PI * p.x / 50.0).sin(),
        (2.0 * std::f64::consts::PI * p.y / 40.0).cos(),
    );
    Vec3::new(1.0 + sx + 0.1 * t, 2.0 * sy - 0.01 * p.z, 0.2 * sx * sy)
}

fn field() -> GridWindField {
    GridWindField::from_fn(DIMS, SPACING, ORIGIN, analytic).unwrap()
}

fn node_position(ix: usize, iy: usize, iz: usize, it: usize) -> (Vec3, f64) {
    (
        Vec3::new(
            ORIGIN[0] + ix as f64 * SPACING[0],
            ORIGIN[1] + iy as f64 * SPACING[1],
            ORIGIN[2] + iz as f64 * SPACING[2],
        ),
        ORIGIN[3] + it as f64 * SPACING[3],
    )
}

#[test]
fn file_round_trip_is_node_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.qwg");
    let g = field();
    save_grid_wind(&g, &path).unwrap();
    let back = load_grid_wind(&path).unwrap();
    assert_eq!(back, g);
    for it in 0..DIMS[3] {
        for iz in 0..DIMS[2] {
            for iy in 0..DIMS[1] {
                for ix in 0..DIMS[0] {
                    let (p, t) = node_position(ix, iy, iz, it);
                    let expected = analytic(p, t);
                    let got = back.sample(p, t);
                    assert!((got - expected).max_abs() < 1e-6, "{got:?} vs {expected:?}");
                }
            }
        }
    }
}

#[test]
fn csv_ingestion_matches_direct_construction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let mut text = String::from("t,x,y,z,wn,we,wd\n");
    // Reverse order to show row order is free.
    for it in (0..DIMS[3]).rev() {
        for iz in 0..DIMS[2] {
            for iy in 0..DIMS[1] {
                for ix in (0..DIMS[0]).rev() {
                    let (p, t) = node_position(ix, iy, iz, it);
                    let w = analytic(p, t);
                    text += &format!("{t},{},{},{},{},{},{}\n", p.x, p.y, p.z, w.x, w.y, w.z);
                }
            }
        }
    }
    std::fs::write(&path, text).unwrap();
    assert_eq!(grid_from_csv(&path).unwrap(), field());
}

proptest! {
    #[test]
    fn interpolation_is_linear_in_the_data(
        x in 0.0f64..50.0, y in 0.0f64..40.0, z in -60.0f64..-50.0, t in 0.0f64..4.0,
        a in -4i32..4, b in -4i32..4,
    ) {
        // Node values are multiples of 1/64 so every combination is exact in f32.
        let q = |v: f64| (v * 64.0).round() / 64.0;
        let fv = |p: Vec3, t: f64| { let w = analytic(p, t); Vec3::new(q(w.x), q(w.y), q(w.z)) };
        let gv = |p: Vec3, t: f64| Vec3::new(q(0.01 * p.x), -t, q(0.05 * (p.y + p.z)));
        let (a, b) = (f64::from(a), f64::from(b));
        let f = GridWindField::from_fn(DIMS, SPACING, ORIGIN, fv).unwrap();
        let g = GridWindField::from_fn(DIMS, SPACING, ORIGIN, gv).unwrap();
        let combo = GridWindField::from_fn(DIMS, SPACING, ORIGIN, |p, t| fv(p, t) * a + gv(p, t) * b).unwrap();
        let p = Vec3::new(x, y, z);
        let expected = f.sample(p, t) * a + g.sample(p, t) * b;
        prop_assert!((combo.sample(p, t) - expected).max_abs() < 1e-6);
    }

    #[test]
    fn affine_fields_are_reproduced(x in 0.0f64..40.0, y in 0.0f64..30.0, z in -60.0f64..-50.0, t in 0.0f64..4.0) {
        let affine = |p: Vec3, t: f64| Vec3::new(0.5 + 0.01 * p.z + 0.1 * t, -0.02 * p.z, 0.3 * t);
        let g = GridWindField::from_fn(DIMS, SPACING, ORIGIN, affine).unwrap();
        prop_assert!((g.sample(Vec3::new(x, y, z), t) - affine(Vec3::new(x, y, z), t)).max_abs() < 1e-6);
    }
}
