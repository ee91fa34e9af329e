//! Deterministic procedural digit corpus in IDX layout.
//!
//! Each digit renders from a stroke skeleton under a seeded random affine
//! distortion (rotation, anisotropic scale, shear, translation), with
//! randomized stroke width, ink level, and pixel noise. Used by tests and
//! demos when no real handwritten-digit files are available; the files go
//! through the exact same IDX loader as downloaded data.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use relace_core::snn_mnist::{MnistDataset, IMAGE_PIXELS, IMAGE_SIDE};

use crate::mnist;

type Point = (f64, f64);

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, a0_deg: f64, a1_deg: f64, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|k| {
            let a = (a0_deg + (a1_deg - a0_deg) * k as f64 / n as f64).to_radians();
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

/// Stroke skeletons in unit coordinates, y pointing down.
fn skeleton(digit: u8) -> Vec<Vec<Point>> {
    match digit {
        0 => vec![arc(0.5, 0.5, 0.21, 0.31, 0.0, 360.0, 28)],
        1 => vec![
            vec![(0.52, 0.18), (0.52, 0.82)],
            vec![(0.38, 0.32), (0.52, 0.18)],
        ],
        2 => vec![
            arc(0.5, 0.37, 0.2, 0.19, 180.0, 380.0, 14),
            vec![(0.69, 0.44), (0.3, 0.82)],
            vec![(0.3, 0.82), (0.73, 0.82)],
        ],
        3 => vec![
            arc(0.47, 0.34, 0.18, 0.16, 210.0, 450.0, 14),
            arc(0.47, 0.66, 0.19, 0.17, 270.0, 510.0, 14),
        ],
        4 => vec![
            vec![(0.64, 0.18), (0.64, 0.82)],
            vec![(0.64, 0.18), (0.28, 0.6)],
            vec![(0.28, 0.6), (0.78, 0.6)],
        ],
        5 => vec![
            vec![(0.7, 0.19), (0.35, 0.19)],
            vec![(0.35, 0.19), (0.33, 0.47)],
            arc(0.49, 0.62, 0.19, 0.18, 225.0, 500.0, 16),
        ],
        6 => vec![
            arc(0.54, 0.42, 0.2, 0.26, 300.0, 140.0, 16),
            arc(0.5, 0.64, 0.15, 0.15, 0.0, 360.0, 20),
        ],
        7 => vec![
            vec![(0.28, 0.2), (0.74, 0.2)],
            vec![(0.74, 0.2), (0.42, 0.82)],
        ],
        8 => vec![
            arc(0.5, 0.34, 0.155, 0.15, 0.0, 360.0, 20),
            arc(0.5, 0.67, 0.185, 0.17, 0.0, 360.0, 20),
        ],
        9 => vec![
            arc(0.5, 0.36, 0.17, 0.16, 0.0, 360.0, 20),
            vec![(0.67, 0.38), (0.62, 0.82)],
        ],
        _ => unreachable!("digit out of range"),
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let (px, py) = (p.0 - a.0, p.1 - a.1);
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((px * vx + py * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (px - t * vx, py - t * vy);
    (dx * dx + dy * dy).sqrt()
}

/// Render one digit with a seeded random distortion.
pub fn render_digit(digit: u8, rng: &mut ChaCha8Rng) -> [u8; IMAGE_PIXELS] {
    let theta = uniform(rng, -0.18, 0.18);
    let sx = uniform(rng, 0.85, 1.12);
    let sy = uniform(rng, 0.85, 1.12);
    let shear = uniform(rng, -0.18, 0.18);
    let tx = uniform(rng, -0.06, 0.06);
    let ty = uniform(rng, -0.06, 0.06);
    let stroke = uniform(rng, 0.040, 0.062);
    let ink = uniform(rng, 200.0, 255.0);
    let (c, s) = (theta.cos(), theta.sin());

    let transform = |(x, y): Point| -> Point {
        let (x, y) = (x - 0.5, y - 0.5);
        let (x, y) = (x + shear * y, y);
        let (x, y) = (x * sx, y * sy);
        let (x, y) = (c * x - s * y, s * x + c * y);
        (x + 0.5 + tx, y + 0.5 + ty)
    };

    let strokes: Vec<Vec<Point>> = skeleton(digit)
        .into_iter()
        .map(|line| line.into_iter().map(transform).collect())
        .collect();

    let mut img = [0u8; IMAGE_PIXELS];
    let aa = 0.024;
    for py in 0..IMAGE_SIDE {
        for px in 0..IMAGE_SIDE {
            let p = (
                (px as f64 + 0.5) / IMAGE_SIDE as f64,
                (py as f64 + 0.5) / IMAGE_SIDE as f64,
            );
            let mut d = f64::INFINITY;
            for line in &strokes {
                for seg in line.windows(2) {
                    d = d.min(dist_to_segment(p, seg[0], seg[1]));
                }
            }
            let cover = ((stroke + aa - d) / aa).clamp(0.0, 1.0);
            if cover > 0.0 {
                let noise = uniform(rng, -12.0, 12.0);
                img[py * IMAGE_SIDE + px] = (cover * ink + noise).clamp(0.0, 255.0) as u8;
            }
        }
    }
    img
}

/// Generate a balanced labelled corpus. Fully determined by the seed.
pub fn generate(count: usize, seed: u64) -> MnistDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let digit = (i % 10) as u8;
        images.push(render_digit(digit, &mut rng));
        labels.push(digit);
    }
    MnistDataset { images, labels }
}

/// Make sure `dir` holds a train/t10k IDX pair, generating the synthetic
/// corpus if the files are absent. Returns true when files were written.
pub fn ensure_dataset_dir(
    dir: &Path,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> std::io::Result<bool> {
    let train_exists = dir.join("train-images-idx3-ubyte").exists();
    let test_exists = dir.join("t10k-images-idx3-ubyte").exists();
    if train_exists && test_exists {
        return Ok(false);
    }
    std::fs::create_dir_all(dir)?;
    let train = generate(train_count, seed);
    let test = generate(test_count, seed.wrapping_add(0x5eed));
    mnist::write_mnist_dir(dir, &train, true)?;
    mnist::write_mnist_dir(dir, &test, false)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let a = generate(20, 9);
        let b = generate(20, 9);
        assert_eq!(a.images, b.images);
        assert_eq!(a.labels, b.labels);
        let c = generate(20, 10);
        assert_ne!(a.images, c.images);
    }

    #[test]
    fn digits_have_reasonable_ink() {
        let data = generate(50, 3);
        for (img, &label) in data.images.iter().zip(&data.labels) {
            let lit = img.iter().filter(|&&p| p > 64).count();
            assert!(
                (25..300).contains(&lit),
                "digit {label} has {lit} lit pixels"
            );
        }
    }

    #[test]
    fn classes_differ_on_average() {
        let data = generate(200, 7);
        let mut mean = [[0f64; IMAGE_PIXELS]; 10];
        let mut counts = [0usize; 10];
        for (img, &l) in data.images.iter().zip(&data.labels) {
            counts[l as usize] += 1;
            for (m, &p) in mean[l as usize].iter_mut().zip(img) {
                *m += p as f64;
            }
        }
        for (m, &c) in mean.iter_mut().zip(&counts) {
            for v in m.iter_mut() {
                *v /= c as f64;
            }
        }
        // mean images of different classes should be far apart
        for a in 0..10 {
            for b in (a + 1)..10 {
                let d2: f64 = mean[a]
                    .iter()
                    .zip(&mean[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                assert!(d2.sqrt() > 300.0, "classes {a} and {b} too similar");
            }
        }
    }

    #[test]
    fn dataset_dir_written_once() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ensure_dataset_dir(dir.path(), 30, 10, 1).unwrap());
        assert!(!ensure_dataset_dir(dir.path(), 30, 10, 1).unwrap());
        let data = crate::mnist::load_mnist_dir(dir.path(), true).unwrap();
        assert_eq!(data.count(), 30);
    }
}
