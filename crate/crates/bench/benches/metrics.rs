use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use flarecast_bench::{noise_gray, noise_rgb, CANVAS};
use flarecast_core::metrics::{correlation, entropy, psnr, ssim, SsimParams};
use flarecast_core::translation::{adjust_brightness, BrightnessPolicy};

fn image_quality(c: &mut Criterion) {
    let mut group = c.benchmark_group("image_quality");
    group.sample_size(10);
    for (w, h) in [(128, 256), CANVAS] {
        let x = noise_gray(w, h, 1);
        let y = noise_gray(w, h, 2);
        let id = format!("{w}x{h}");
        group.bench_with_input(BenchmarkId::new("entropy", &id), &x, |b, x| {
            b.iter(|| entropy(black_box(x)))
        });
        group.bench_with_input(BenchmarkId::new("correlation", &id), &(&x, &y), |b, (x, y)| {
            b.iter(|| correlation(black_box(x), black_box(y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("psnr", &id), &(&x, &y), |b, (x, y)| {
            b.iter(|| psnr(black_box(x), black_box(y)).unwrap())
        });
        let params = SsimParams::default();
        group.bench_with_input(BenchmarkId::new("ssim", &id), &(&x, &y), |b, (x, y)| {
            b.iter(|| ssim(black_box(x), black_box(y), &params).unwrap())
        });
    }
    group.finish();
}

fn brightness(c: &mut Criterion) {
    let img = noise_rgb(CANVAS.0, CANVAS.1, 3);
    let policy = BrightnessPolicy::default();
    c.bench_function("adjust_brightness/512x1024", |b| {
        b.iter(|| adjust_brightness(black_box(&img), 40.0, &policy).unwrap())
    });
}

criterion_group!(benches, image_quality, brightness);
criterion_main!(benches);
