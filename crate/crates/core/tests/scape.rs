use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voroscape::experiment::{run_trial, ExperimentSpec};
use voroscape::delaunay::voronoi_dual;
use voroscape::moments::sample_stiefel;
use voroscape::{build_mosaic, nearest_site, project_weights, voronoi_path, voronoi_scape_flat, voronoi_walk, Flat, Point, Probe, Region};

fn uniform(seed: u64, n: usize, d: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Point::new((0..d).map(|_| rng.random::<f64>()).collect())).collect()
}

/// Nearest sites along the segment at `steps` points, consecutive repeats
/// removed.
fn dense_walk(m: &voroscape::Mosaic, a: &[f64], b: &[f64], steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
        let s = nearest_site(m, &x);
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn flat_rows(flat: &Flat) -> Vec<Vec<f64>> {
    let o = flat.point_at(&[0.0, 0.0]);
    [[1.0, 0.0], [0.0, 1.0]].iter().map(|t| flat.point_at(t).iter().zip(&o).map(|(x, y)| x - y).collect()).collect()
}

#[test]
fn walk_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for d in 2..=4 {
        let m = build_mosaic(&uniform(d as u64, 200, d), d).unwrap();
        for _ in 0..10 {
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
            let walk = voronoi_walk(&m, &Probe::segment(Point::new(a.clone()), Point::new(b.clone()))).unwrap();
            assert_eq!(walk, dense_walk(&m, &a, &b, 20_000), "d = {d}");
        }
    }
}

#[test]
fn path_volume_sums_crossed_edges() {
    let m = build_mosaic(&uniform(3, 300, 2), 2).unwrap();
    let probe = Probe::Polyline { points: vec![Point::from([0.2, 0.3]), Point::from([0.7, 0.4]), Point::from([0.5, 0.8])] };
    let walk = voronoi_walk(&m, &probe).unwrap();
    let scape = voronoi_path(&m, &probe).unwrap();
    let by_hand: f64 = walk.windows(2).map(|w| m.site(w[0]).distance(m.site(w[1]))).sum();
    assert!((scape.total_volume() - by_hand).abs() < 1e-12);
    assert_eq!(scape.count() as usize, walk.len() - 1);
    for e in scape.entries() {
        assert!(m.find_face(&e.sites).is_some());
    }
}

#[test]
fn line_patch_matches_path_on_same_seeds() {
    for (d, rho) in [(2, 1000.0), (3, 1000.0)] {
        let path = ExperimentSpec::path(d, rho, 0.3, 4, 77);
        let patch = ExperimentSpec::scape(d, 1, rho, 0.3, 4, 77);
        for i in 0..4 {
            let a = run_trial(&path, i).unwrap().value;
            let b = run_trial(&patch, i).unwrap().value;
            assert_eq!(a.to_bits(), b.to_bits(), "d = {d}, trial {i}");
        }
    }
}

#[test]
fn restriction_is_the_power_diagram_of_projected_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (d, p) in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)] {
        let m = build_mosaic(&uniform(d as u64 + 10, 150, d), d).unwrap();
        let flat = Flat::new(Point::new(vec![0.5; d]), sample_stiefel(p, d, &mut rng)).unwrap();
        let w = project_weights(&m, &flat).unwrap();
        for _ in 0..1000 {
            let t: Vec<f64> = (0..p).map(|_| rng.random_range(-0.3..0.3)).collect();
            let x = flat.point_at(&t);
            let by_power = (0..w.len()).min_by(|&a, &b| w[a].power(&t).total_cmp(&w[b].power(&t))).unwrap();
            let s = nearest_site(&m, &x);
            assert!(by_power == s || (w[by_power].power(&t) - w[s].power(&t)).abs() < 1e-12);
        }
    }
}

#[test]
fn plane_scape_cells_are_those_whose_duals_the_plane_crosses() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = build_mosaic(&uniform(21, 400, 3), 3).unwrap();
    let flat = Flat::new(Point::from([0.5, 0.5, 0.5]), sample_stiefel(2, 3, &mut rng)).unwrap();
    let patch = Probe::FlatPatch { flat: flat.clone(), region: Region::square(2, 0.3) };
    let scape = voronoi_scape_flat(&m, &patch).unwrap();
    assert!(!scape.is_empty());
    // oracle: intersect every Voronoi edge (segment or ray) with the patch
    let mut crossed = Vec::new();
    for f in m.faces(2) {
        let dual = voronoi_dual(&m, f);
        let a = dual.vertices[0].coords().to_vec();
        let dir: Vec<f64> = if dual.bounded {
            dual.vertices[1].iter().zip(&a).map(|(x, y)| x - y).collect()
        } else {
            dual.rays[0].clone()
        };
        let n = cross(&flat_rows(&flat)[0], &flat_rows(&flat)[1]);
        let base = flat.point_at(&[0.0, 0.0]);
        let denom = dot(&n, &dir);
        if denom == 0.0 {
            continue;
        }
        let lam = dot(&n, &base.iter().zip(&a).map(|(b, x)| b - x).collect::<Vec<_>>()) / denom;
        let hit = if dual.bounded { (0.0..=1.0).contains(&lam) } else { lam >= 0.0 };
        if !hit {
            continue;
        }
        let x: Vec<f64> = a.iter().zip(&dir).map(|(p, v)| p + lam * v).collect();
        if flat.coords_of(&x).iter().all(|t| t.abs() <= 0.15) {
            crossed.push(m.face_vertices(f));
        }
    }
    crossed.sort();
    let mut found: Vec<Vec<usize>> = scape.entries().iter().map(|e| e.sites.clone()).collect();
    found.sort();
    assert_eq!(found, crossed);
    for e in scape.entries() {
        assert_eq!(e.multiplicity, 1);
        let f = m.find_face(&e.sites).unwrap();
        assert!((m.face_volume(f) - e.volume).abs() < 1e-12);
    }
    // rigid motion of sites and plane together leaves the scape unchanged
    let shift = [1.0, -2.0, 0.25];
    let moved: Vec<Point> = m.sites().iter().map(|s| Point::new(s.iter().zip(shift).map(|(x, t)| x + t).collect())).collect();
    let mm = build_mosaic(&moved, 3).unwrap();
    let base = Point::new(flat.point_at(&[0.0, 0.0]).iter().zip(shift).map(|(x, t)| x + t).collect());
    let frame = sample_stiefel(2, 3, &mut ChaCha8Rng::seed_from_u64(21));
    let moved_patch = Probe::FlatPatch { flat: Flat::new(base, frame).unwrap(), region: Region::square(2, 0.3) };
    let ms = voronoi_scape_flat(&mm, &moved_patch).unwrap();
    let sites = |s: &voroscape::Scape| s.entries().iter().map(|e| e.sites.clone()).collect::<Vec<_>>();
    assert_eq!(sites(&scape), sites(&ms));
    assert!((scape.total_volume() - ms.total_volume()).abs() < 1e-9);
}

#[test]
fn scape_csv_joins_sites_with_semicolons() {
    let m = build_mosaic(&uniform(5, 100, 2), 2).unwrap();
    let s = voronoi_path(&m, &Probe::segment(Point::from([0.3, 0.3]), Point::from([0.7, 0.6]))).unwrap();
    let csv = s.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sites,multiplicity,volume"));
    for (line, e) in lines.zip(s.entries()) {
        let f: Vec<&str> = line.split(',').collect();
        let ids: Vec<usize> = f[0].split(';').map(|x| x.parse().unwrap()).collect();
        assert_eq!(ids, e.sites);
        assert_eq!(f[1].parse::<u32>().unwrap() as u64, e.multiplicity as u64);
    }
}
