#![allow(dead_code)]

use std::fs;
use std::path::Path;

use nblgc::image_io::{write_pgm_binary, write_pgm_plain, RawImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight re-reading of the descriptor definition on raw gray levels:
/// divide by the image maximum, walk 3x3 blocks, f_h from the average, the
/// selected loop sum, then -mu G ln G. Shares no code with the library.
pub fn naive_features(raw: &RawImage, variant: &str, reference: &str) -> Vec<f64> {
    let (w, h) = (raw.width(), raw.height());
    let peak = *raw.pixels().iter().max().unwrap() as f64;
    let px = |x: usize, y: usize| {
        if peak == 0.0 {
            0.0
        } else {
            raw.pixels()[y * w + x] as f64 / peak
        }
    };
    // clockwise from top-left, as (row, col)
    let ring_pos = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)];
    let mut out = Vec::new();
    for by in 0..h / 3 {
        for bx in 0..w / 3 {
            let at = |r: usize, c: usize| px(bx * 3 + c, by * 3 + r);
            let mut all = Vec::new();
            for r in 0..3 {
                for c in 0..3 {
                    all.push(at(r, c));
                }
            }
            let refv = match reference {
                "avg" => all.iter().sum::<f64>() / 9.0,
                "max" => all.iter().cloned().fold(f64::MIN, f64::max),
                "min" => all.iter().cloned().fold(f64::MAX, f64::min),
                _ => unreachable!(),
            };
            let num: f64 = all.iter().map(|v| (refv - v).powi(4)).sum();
            let den: f64 = all.iter().map(|v| (refv - v).powi(2)).sum();
            let fh = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
            let center = at(1, 1);
            let mu = if fh == 0.0 { 0.0 } else { center / fh };
            let ring: Vec<f64> = ring_pos.iter().map(|&(r, c)| at(r, c)).collect();
            let hop = |step: usize, starts: &[usize], len: usize| -> f64 {
                let mut g = 0.0;
                for &s in starts {
                    let mut j = s;
                    for _ in 0..len {
                        let k = (j + step) % 8;
                        g += (ring[k] - ring[j]).abs();
                        j = k;
                    }
                }
                g
            };
            let g = match variant {
                "G1" => hop(1, &[0], 8),
                "G2" => hop(2, &[0, 1], 4),
                "G3" => hop(3, &[0], 8),
                _ => unreachable!(),
            };
            out.push(if g == 0.0 || mu == 0.0 { 0.0 } else { -mu * g * g.ln() });
        }
    }
    out
}

pub fn random_raw(rng: &mut ChaCha8Rng, w: usize, h: usize, max_gray: u16) -> RawImage {
    let px = (0..w * h).map(|_| rng.gen_range(0..=max_gray)).collect();
    RawImage::new(w, h, max_gray, px).unwrap()
}

/// Writes a synthetic face-like dataset: each class has its own smooth base
/// pattern, each image adds seeded noise and a brightness change. Odd images
/// are stored as P2, even ones as P5.
pub fn write_synthetic_dataset(root: &Path, classes: usize, per_class: usize, size: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..classes {
        let dir = root.join(format!("s{}", c + 1));
        fs::create_dir_all(&dir).unwrap();
        let fx: f64 = rng.gen_range(0.05..0.6);
        let fy: f64 = rng.gen_range(0.05..0.6);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let blobs: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(0.0..size as f64),
                    rng.gen_range(0.0..size as f64),
                    rng.gen_range(2.0..size as f64 / 3.0),
                )
            })
            .collect();
        for i in 0..per_class {
            let gain: f64 = rng.gen_range(0.7..1.0);
            let mut px = Vec::with_capacity(size * size);
            for y in 0..size {
                for x in 0..size {
                    let (xf, yf) = (x as f64, y as f64);
                    let mut v = 0.5 + 0.25 * (fx * xf + fy * yf + phase).sin();
                    for &(bx, by, r) in &blobs {
                        let d2 = (xf - bx).powi(2) + (yf - by).powi(2);
                        v += 0.2 * (-d2 / (r * r)).exp();
                    }
                    v += rng.gen_range(-0.04..0.04);
                    px.push((v.clamp(0.0, 1.0) * gain * 255.0).round() as u16);
                }
            }
            let raw = RawImage::new(size, size, 255, px).unwrap();
            let bytes = if i % 2 == 0 { write_pgm_binary(&raw) } else { write_pgm_plain(&raw) };
            fs::write(dir.join(format!("{}.pgm", i + 1)), bytes).unwrap();
        }
    }
}
