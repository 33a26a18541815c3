use proptest::prelude::*;

use presstop::element::{heaviside, heaviside_derivative};
use presstop::filters::{grayness_measure, project, project_derivative, FilterKernel, ProjectionParams};
use presstop::mesh::Mesh;

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n)
}

/// Grid, radius and one field on it.
fn grid_and_field() -> impl Strategy<Value = (usize, usize, f64, Vec<f64>)> {
    (1usize..10, 1usize..10, 0.8..4.5f64).prop_flat_map(|(nx, ny, r)| (Just(nx), Just(ny), Just(r), field(nx * ny)))
}

proptest! {
    #[test]
    fn node_incidence_counts((nx, ny) in (1usize..12, 1usize..12)) {
        let mesh = Mesh::new(nx, ny).unwrap();
        let mut count = vec![0usize; mesh.nno];
        for e in 0..mesh.nel {
            for &n in &mesh.pdofs[e] {
                count[n] += 1;
            }
            for a in 0..4 {
                prop_assert_eq!(mesh.udofs[e][2 * a], 2 * mesh.pdofs[e][a]);
                prop_assert_eq!(mesh.udofs[e][2 * a + 1], 2 * mesh.pdofs[e][a] + 1);
            }
        }
        for (k, &n) in count.iter().enumerate() {
            let (i, j) = mesh.node_position(k);
            prop_assert_eq!(mesh.node(i, j), k);
            let edges = (i == 0 || i == ny) as usize + (j == 0 || j == nx) as usize;
            prop_assert_eq!(n, [4, 2, 1][edges]);
        }
        for r in 0..ny {
            for c in 0..nx {
                prop_assert_eq!(mesh.elem_position(mesh.elem(r, c)), (r, c));
            }
        }
        prop_assert_eq!(mesh.boundary_nodes().len(), 2 * (nx + ny));
    }

    #[test]
    fn element_nodes_are_counter_clockwise((nx, ny) in (1usize..8, 1usize..8)) {
        let mesh = Mesh::new(nx, ny).unwrap();
        for e in 0..mesh.nel {
            let xy: Vec<(f64, f64)> = mesh.pdofs[e].iter().map(|&n| mesh.node_coords(n)).collect();
            // shoelace area of a unit square, positive when counter-clockwise
            let area: f64 = (0..4).map(|a| {
                let (x0, y0) = xy[a];
                let (x1, y1) = xy[(a + 1) % 4];
                x0 * y1 - x1 * y0
            }).sum::<f64>() / 2.0;
            prop_assert!((area - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_is_linear((nx, ny, r, u) in grid_and_field(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let k = FilterKernel::new(nx, ny, r).unwrap();
        let v: Vec<f64> = u.iter().rev().copied().collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = k.apply(&mix).unwrap();
        let (fu, fv) = (k.apply(&u).unwrap(), k.apply(&v).unwrap());
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * fu[i] + b * fv[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_matches_direct_convolution((nx, ny, r, x) in grid_and_field()) {
        let k = FilterKernel::new(nx, ny, r).unwrap();
        let out = k.apply(&x).unwrap();
        // element e at column c, row r sits at index c * ny + r
        for c in 0..nx {
            for row in 0..ny {
                let (mut num, mut den) = (0.0, 0.0);
                for c2 in 0..nx {
                    for r2 in 0..ny {
                        let d = (((c as f64 - c2 as f64).powi(2)) + ((row as f64 - r2 as f64).powi(2))).sqrt();
                        let w = (r - d).max(0.0);
                        num += w * x[c2 * ny + r2];
                        den += w;
                    }
                }
                prop_assert!((out[c * ny + row] - num / den).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn backprojection_is_the_adjoint((nx, ny, r, x) in grid_and_field()) {
        let k = FilterKernel::new(nx, ny, r).unwrap();
        let y: Vec<f64> = x.iter().map(|v| (7.0 * v).sin()).collect();
        let hx = k.apply(&x).unwrap();
        let hty = k.backproject(&y, &k.hs).unwrap();
        let lhs: f64 = hx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&hty).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projection_is_monotone_and_bounded(x in field(40), beta in 0.5..300.0f64) {
        let pp = ProjectionParams { beta, ..ProjectionParams::new(512.0) };
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        let y = project(&sorted, &pp);
        for w in y.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!(y.iter().all(|v| (-1e-15..=1.0 + 1e-15).contains(v)));
        let ends = project(&[0.0, 1.0], &pp);
        prop_assert!(ends[0].abs() < 1e-15 && (ends[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_derivative_matches_differences(x in 0.01..0.99f64, beta in 0.5..64.0f64) {
        let pp = ProjectionParams { beta, ..ProjectionParams::new(512.0) };
        let h = 1e-6;
        let fd = (project(&[x + h], &pp)[0] - project(&[x - h], &pp)[0]) / (2.0 * h);
        let an = project_derivative(&[x], &pp)[0];
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3));
    }

    #[test]
    fn heaviside_derivative_matches_differences(x in 0.0..1.0f64, eta in 0.05..0.6f64, beta in 1.0..20.0f64) {
        let h = 1e-6;
        let fd = (heaviside(x + h, eta, beta) - heaviside(x - h, eta, beta)) / (2.0 * h);
        let an = heaviside_derivative(x, eta, beta);
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3));
    }

    #[test]
    fn grayness_bounds(x in field(30)) {
        let g = grayness_measure(&x);
        prop_assert!((0.0..=100.0).contains(&g));
        let binary: Vec<f64> = x.iter().map(|v| v.round()).collect();
        prop_assert_eq!(grayness_measure(&binary), 0.0);
    }
}

#[test]
fn half_field_is_fully_gray() {
    assert!((grayness_measure(&[0.5; 10]) - 100.0).abs() < 1e-12);
}
