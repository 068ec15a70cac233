use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use flarecast_bench::{ellipse_mask, CANVAS};
use flarecast_core::characterization::{characterize, extract_contour, CalibrationInfo, NozzleReference};
use flarecast_core::metrics::hausdorff;

fn contour(c: &mut Criterion) {
    let mut group = c.benchmark_group("contour");
    for (w, h) in [(128, 256), CANVAS] {
        let mask = ellipse_mask(w, h, 0.0);
        let id = format!("{w}x{h}");
        group.bench_with_input(BenchmarkId::new("extract", &id), &mask, |b, m| {
            b.iter(|| extract_contour(black_box(m)).unwrap())
        });
        let nozzle = NozzleReference::new(w as i64 / 2, h as i64 - 1);
        let cal = CalibrationInfo::from_ppm(10.0).unwrap();
        group.bench_with_input(BenchmarkId::new("characterize", &id), &mask, |b, m| {
            b.iter(|| characterize(black_box(m), nozzle, &cal).unwrap())
        });
    }
    group.finish();
}

fn mask_hausdorff(c: &mut Criterion) {
    let mut group = c.benchmark_group("hausdorff");
    group.sample_size(10);
    for (w, h) in [(128, 256), CANVAS] {
        let a = ellipse_mask(w, h, 0.0).foreground_points();
        let b = ellipse_mask(w, h, w as f64 * 0.05).foreground_points();
        group.bench_with_input(
            BenchmarkId::new("masks", format!("{w}x{h}")),
            &(a, b),
            |bench, (a, b)| bench.iter(|| hausdorff(black_box(a), black_box(b)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, contour, mask_hausdorff);
criterion_main!(benches);
