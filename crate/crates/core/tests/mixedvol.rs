use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voroscape::delaunay::{clipped_dual_volume, voronoi_dual};
use voroscape::experiment::{run_experiment, ExperimentSpec};
use voroscape::mixedvol::{half_product_volume, mixed_cell};
use voroscape::{build_mosaic, mixed_volume_sum, regularity_report, tile_measure, Point, Window};

fn disk_sites(seed: u64, n: usize, radius: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let x: [f64; 2] = [rng.random_range(-radius..radius), rng.random_range(-radius..radius)];
        if x[0].hypot(x[1]) <= radius {
            out.push(Point::from(x));
        }
    }
    out
}

fn cube_sites(seed: u64, n: usize, d: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Point::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())).collect()
}

#[test]
fn half_products_scale_by_two_to_the_d() {
    for d in 2..=3 {
        let m = build_mosaic(&cube_sites(d as u64, 120, d), d).unwrap();
        let mut checked = 0;
        for p in 0..=d {
            for f in m.faces(p) {
                let c = mixed_cell(&m, f, None, None).unwrap();
                if !c.is_bounded() {
                    continue;
                }
                let half = half_product_volume(&m, &c).unwrap();
                let expected = c.mixed_volume / 2f64.powi(d as i32);
                assert!((half - expected).abs() <= 1e-12 * expected.max(1e-300), "d = {d}, p = {p}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}

#[test]
fn pivot_ball_holds_both_cells() {
    let m = build_mosaic(&cube_sites(4, 150, 3), 3).unwrap();
    for p in 0..=3 {
        for f in m.faces(p) {
            let c = mixed_cell(&m, f, None, None).unwrap();
            if !c.is_bounded() {
                assert!(c.r0.is_infinite() && c.boundary);
                continue;
            }
            let tol = 1e-12 * c.r0;
            for &v in &m.face_vertices(f) {
                assert!(c.z0.distance(m.site(v)) <= c.r0 + tol);
            }
            for u in &c.gamma_star.vertices {
                assert!(c.z0.distance(u) <= c.r0 + tol);
            }
        }
    }
}

#[test]
fn tile_measures_of_extreme_dimensions() {
    let m = build_mosaic(&cube_sites(8, 80, 2), 2).unwrap();
    // a box around every Voronoi vertex leaves bounded cells unclipped
    let reach = m.top_circumcenters().iter().flat_map(|c| c.iter().map(|x| x.abs())).fold(1.0, f64::max) + 1.0;
    for f in m.faces(0) {
        let c = mixed_cell(&m, f, None, None).unwrap();
        if c.is_bounded() {
            let lo = [-reach, -reach];
            let hi = [reach, reach];
            let clipped = clipped_dual_volume(&m, &voronoi_dual(&m, f), &lo, &hi);
            let t = tile_measure(&c, 2, 0).unwrap();
            assert!((t - clipped).abs() < 1e-9 * clipped, "{t} vs {clipped}");
        }
    }
    for f in m.faces(2) {
        let c = mixed_cell(&m, f, None, None).unwrap();
        assert!((tile_measure(&c, 2, 2).unwrap() - m.face_volume(f)).abs() < 1e-15);
    }
}

#[test]
fn vertex_sum_is_the_clipped_partition() {
    let r = 0.8;
    let m = build_mosaic(&disk_sites(3, 3000, 1.0), 2).unwrap();
    let ball = Window::ball(Point::origin(2), r);
    let outer = Window::ball(Point::origin(2), 1.0);
    let rep = mixed_volume_sum(&m, 0, &ball, &outer).unwrap();
    // the same cells through the box-clipping path
    let (lo, hi) = outer.bounds();
    let inside: f64 = m
        .faces(0)
        .filter(|&f| m.site(m.face_vertices(f)[0]).distance(&Point::origin(2)) <= r)
        .map(|f| clipped_dual_volume(&m, &voronoi_dual(&m, f), &lo, &hi))
        .sum();
    assert!((rep.sum_interior - inside).abs() <= 1e-6 * inside);
    assert_eq!(rep.predicted, std::f64::consts::PI * r * r);
    assert_eq!(rep.ratio, rep.sum_interior / rep.predicted);
}

#[test]
fn dual_pairs_are_in_bijection() {
    let m = build_mosaic(&cube_sites(12, 100, 3), 3).unwrap();
    let ball = Window::ball(Point::origin(3), 10.0);
    let outer = Window::cube(Point::origin(3), 10.0);
    for p in 0..=3 {
        let rep = mixed_volume_sum(&m, p, &ball, &outer).unwrap();
        let back = mixed_volume_sum(&m, 3 - p, &ball, &outer).unwrap();
        // every p-cell owns one (3-p)-dimensional Voronoi cell, told apart
        // by its set of Voronoi vertices and rays
        let mut duals: Vec<(Vec<usize>, Vec<Vec<u64>>)> = m
            .faces(p)
            .map(|f| {
                let d = voronoi_dual(&m, f);
                assert_eq!(d.dim, 3 - p);
                let mut t = d.top_cells.clone();
                t.sort();
                let mut rays: Vec<Vec<u64>> = d.rays.iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
                rays.sort();
                (t, rays)
            })
            .collect();
        duals.sort();
        duals.dedup();
        assert_eq!(rep.n_cells, m.n_faces(p));
        assert_eq!(duals.len(), rep.n_cells, "p = {p}");
        assert_eq!(back.n_cells, m.n_faces(3 - p));
    }
}

#[test]
fn boundary_share_shrinks_with_radius() {
    let share = |r: f64| {
        let spec = ExperimentSpec::mixedvol(2, 1, 1000.0, r, 6, 5);
        let res = run_experiment(&spec).unwrap();
        res.secondary.iter().sum::<f64>() / res.secondary.len() as f64
    };
    let (a, b, c) = (share(0.2), share(0.4), share(0.8));
    assert!(a > b && b > c, "boundary shares {a} {b} {c}");
}

#[test]
fn regularity_measure_shrinks_with_radius() {
    let m = build_mosaic(&disk_sites(6, 20_000, 2.0), 2).unwrap();
    let outer = Window::ball(Point::origin(2), 2.0);
    let measure = |r: f64| regularity_report(&m, 1, &Window::ball(Point::origin(2), r), &outer).unwrap();
    let small = measure(0.4);
    let large = measure(1.6);
    assert!(small.regular && large.regular);
    assert!(large.boundary_measure < small.boundary_measure);
    assert!(large.empty_ball_radius <= large.max_circumradius);
}
