use fbmb::geometry::{make_grid, Point2};
use fbmb::metrics::{entropy, piqe, ssim_with_range, SSIM_K1, SSIM_K2};
use fbmb::model::Image;
use fbmb::render::{clip_normalize, composite, grayscale, CompositeSpec, RgbImage};
use fbmb::sources::VesselPhantomSpec;
use fbmb::unmixing::{linear_unmix, MultispectralStack, SpectraTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(n: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = make_grid(n, n, 1e-4, Point2::ORIGIN).unwrap();
    Image::from_values(grid, (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Mean SSIM over all 11×11 windows, each evaluated with its own explicit
/// 2D Gaussian weights.
fn direct_ssim(a: &Image, b: &Image, range: f64) -> f64 {
    let n = a.grid().nx();
    let g: Vec<f64> = (0..11).map(|k| (-((k as f64 - 5.0).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let total: f64 = g.iter().sum::<f64>().powi(2);
    let (c1, c2) = ((SSIM_K1 * range).powi(2), (SSIM_K2 * range).powi(2));
    let mut acc = Vec::new();
    for j0 in 0..=n - 11 {
        for i0 in 0..=n - 11 {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dj in 0..11 {
                for di in 0..11 {
                    let w = g[di] * g[dj] / total;
                    let (x, y) = (a.get(i0 + di, j0 + dj), b.get(i0 + di, j0 + dj));
                    ma += w * x;
                    mb += w * y;
                    saa += w * x * x;
                    sbb += w * y * y;
                    sab += w * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            acc.push((2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
    }
    acc.iter().sum::<f64>() / acc.len() as f64
}

#[test]
fn ssim_matches_the_windowed_definition() {
    for seed in 0..3 {
        let a = random_image(16, seed);
        let mut b = random_image(16, 10 + seed);
        for (y, x) in b.values_mut().iter_mut().zip(a.values()) {
            *y = 0.6 * x + 0.4 * *y;
        }
        let got = ssim_with_range(&a, &b, 1.0).unwrap();
        let want = direct_ssim(&a, &b, 1.0);
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

fn vessel_composite() -> RgbImage {
    let grid = make_grid(128, 128, 150e-6, Point2::ORIGIN).unwrap();
    let img = VesselPhantomSpec::reference(1).render(&grid).unwrap();
    grayscale(&img, 0.0, 0.0).unwrap()
}

fn blur(img: &RgbImage, sigma: f64) -> RgbImage {
    let half = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-half..=half).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let pass = |src: &[[f64; 3]], horizontal: bool| -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                for (t, k) in taps.iter().zip(-half..=half) {
                    let (xx, yy) = if horizontal { ((x + k).clamp(0, w - 1), y) } else { (x, (y + k).clamp(0, h - 1)) };
                    let p = src[(yy * w + xx) as usize];
                    for c in 0..3 {
                        acc[c] += t / s * p[c];
                    }
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    };
    let once = pass(img.pixels(), true);
    RgbImage::from_pixels(img.width(), img.height(), pass(&once, false)).unwrap()
}

#[test]
fn blurring_worsens_piqe() {
    let sharp = vessel_composite();
    let blurred = blur(&sharp, 3.0);
    let (a, b) = (piqe(&sharp).unwrap(), piqe(&blurred).unwrap());
    assert!(b.score > a.score, "{} vs {}", a.score, b.score);
}

#[test]
fn clipping_saturates_a_single_outlier() {
    let mut img = random_image(40, 3);
    img.values_mut()[17] = 1e6;
    let c = clip_normalize(&img, 0.005, 0.0).unwrap();
    let mut sorted = img.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let hi = sorted[n - 1 - (0.005 * n as f64) as usize];
    assert_eq!(c.hi, hi);
    assert!(hi < 1.0);
    let saturated = img.values().iter().filter(|&&v| v >= hi).count();
    assert_eq!(c.image.values().iter().filter(|&&v| v == 1.0).count(), saturated);
    assert!(saturated > 1);
    let plain = clip_normalize(&img, 0.0, 0.0).unwrap();
    assert!(entropy(&c.image) > entropy(&plain.image));
}

#[test]
fn composite_colours_follow_the_palette() {
    let grid = make_grid(2, 2, 1e-4, Point2::ORIGIN).unwrap();
    let low = Image::from_values(grid, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    let high = Image::from_values(grid, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let rgb = composite(&[low, high], &CompositeSpec::unclipped(2)).unwrap();
    let spec = CompositeSpec::unclipped(2);
    assert_eq!(rgb.pixel(0, 0), spec.colors[0]);
    assert_eq!(rgb.pixel(1, 0), spec.colors[1]);
    assert_eq!(rgb.pixel(1, 1), [0.0; 3]);
    let both = rgb.pixel(0, 1);
    for c in 0..3 {
        assert_eq!(both[c], (spec.colors[0][c] + spec.colors[1][c]).min(1.0));
    }
}

fn two_chromophore_table() -> SpectraTable {
    SpectraTable::new(
        vec![700.0, 750.0, 800.0, 850.0, 900.0],
        vec!["Hb".into(), "HbO2".into()],
        vec![vec![2.9, 0.6], vec![1.4, 0.8], vec![0.76, 0.82], vec![0.69, 1.05], vec![0.76, 1.2]],
    )
    .unwrap()
}

fn synthetic_stack(table: &SpectraTable, maps: &[Image]) -> MultispectralStack {
    let images = table
        .values
        .iter()
        .map(|row| {
            let mut img = Image::zeros(*maps[0].grid());
            for (c, m) in maps.iter().enumerate() {
                for (o, v) in img.values_mut().iter_mut().zip(m.values()) {
                    *o += row[c] * v;
                }
            }
            img
        })
        .collect();
    MultispectralStack::new(table.wavelengths.clone(), images).unwrap()
}

#[test]
fn noise_free_unmixing_recovers_the_maps() {
    let table = two_chromophore_table();
    let maps = vec![random_image(24, 1), random_image(24, 2)];
    let stack = synthetic_stack(&table, &maps);
    for nonneg in [false, true] {
        let out = linear_unmix(&stack, &table, nonneg).unwrap();
        for (got, want) in out.maps.iter().zip(&maps) {
            let mut d = got.clone();
            for (x, y) in d.values_mut().iter_mut().zip(want.values()) {
                *x -= y;
            }
            assert!(d.norm() <= 1e-8 * want.norm());
        }
    }
}

#[test]
fn unmixing_is_linear() {
    let table = two_chromophore_table();
    let (a, b) = (random_image(16, 4), random_image(16, 5));
    let (c, d) = (random_image(16, 6), random_image(16, 7));
    let s1 = synthetic_stack(&table, &[a, b]);
    let s2 = synthetic_stack(&table, &[c, d]);
    let mixed = MultispectralStack::new(
        table.wavelengths.clone(),
        s1.images.iter().zip(&s2.images).map(|(x, y)| {
            let mut z = x.scaled(2.0);
            for (o, v) in z.values_mut().iter_mut().zip(y.values()) {
                *o -= 0.5 * v;
            }
            z
        }).collect(),
    )
    .unwrap();
    let u1 = linear_unmix(&s1, &table, false).unwrap();
    let u2 = linear_unmix(&s2, &table, false).unwrap();
    let um = linear_unmix(&mixed, &table, false).unwrap();
    for k in 0..2 {
        for ((m, x), y) in um.maps[k].values().iter().zip(u1.maps[k].values()).zip(u2.maps[k].values()) {
            assert!((m - (2.0 * x - 0.5 * y)).abs() <= 1e-10);
        }
    }
}
