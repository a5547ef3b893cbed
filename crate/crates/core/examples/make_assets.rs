// Regenerates the checked-in desk-scale target image.
use cafe_core::harness::{desk_image, save_ppm};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "crates/cli/assets/desk128.ppm".into());
    let img = desk_image(128, 7);
    save_ppm(&img, &out).unwrap();
    println!("wrote {out}");
}
