// Outer-ring masks, binary PGM files and masked vectorization.
//
//     cargo run --example masks_and_pgm [OUT_DIR]

use mmode::dataset_io::{apply_mask, load_frames, load_pgm, save_pgm, GrayImage, RingMask};
use mmode::svm::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().nth(1).map(std::path::PathBuf::from))
}

fn run(out: Option<std::path::PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let out = out.unwrap_or_else(|| std::env::temp_dir().join("mmode-masks"));
    std::fs::create_dir_all(&out)?;

    // the ring between radius 10 and 15 of a 32 x 32 face crop
    let ring = RingMask::annulus(32, 32, 10.0, 15.0)?;
    println!("ring keeps {} of {} pixels", ring.kept(), 32 * 32);
    let mask_path = out.join("ring.pgm");
    save_pgm(&mask_path, &ring.to_image(), 255)?;
    let reread = RingMask::load(&mask_path)?;
    assert_eq!(reread, ring);

    // a radial gradient face, written as 16-bit PGMs
    let frames = out.join("frames");
    std::fs::create_dir_all(&frames)?;
    for k in 0..3 {
        let pixels = (0..32 * 32)
            .map(|i| {
                let (x, y) = ((i % 32) as f64 - 15.5, (i / 32) as f64 - 15.5);
                ((x * x + y * y).sqrt() / 23.0 * (1.0 + k as f64) / 3.0).min(1.0)
            })
            .collect();
        save_pgm(frames.join(format!("f{k}.pgm")), &GrayImage::new(32, 32, pixels)?, 65535)?;
    }
    let img = load_pgm(frames.join("f0.pgm"))?;
    let v = apply_mask(&img, &ring)?;
    println!("masked frame has {} values, first {:.4}", v.len(), v[0]);

    let fm = load_frames(&frames, Label::Real, Some(&ring))?;
    println!("directory of PGMs -> {} frames of {} values", fm.len(), fm.pixels());
    println!("files in {}", out.display());
    Ok(())
}
