//! Orthographic depth images of ray-traced scenes, written as binary PGM.

use std::io::Write;

use raypair_core::engine::Scene;
use raypair_core::{Aabb, Axis, Hit, RaySeg, Vec3};

use crate::{BenchError, Result};

type ClosestHit<'a> = Box<dyn Fn(&RaySeg) -> Option<Hit> + 'a>;

/// 8-bit grayscale image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)?;
        out.flush()?;
        Ok(())
    }
}

/// Image axes for a view down `axis`: (horizontal, vertical).
fn image_axes(axis: Axis) -> (usize, usize) {
    let a = axis.index();
    ((a + 1) % 3, (a + 2) % 3)
}

/// Casts one ray per pixel along `+axis` through the scene's bounding box
/// and shades the closest hit: 255 at the near face of the box, falling to
/// 1 at the far face. Pixels are square and the image is centered on the
/// box. Misses and empty scenes give 0.
pub fn debug_render(scene: &Scene, axis: Axis, resolution: usize) -> Result<GrayImage> {
    let (bvh, intersect): (_, ClosestHit) = match scene {
        Scene::Sphere(s) => (s.bvh(), Box::new(|seg| s.closest_hit(seg))),
        Scene::Squares(s) => (s.bvh(), Box::new(|seg| s.closest_hit(seg))),
        _ => return Err(BenchError::Format("only sphere and squares scenes can be rendered".into())),
    };
    let mut image = GrayImage::new(resolution, resolution);
    let Some(bvh) = bvh else { return Ok(image) };
    if resolution == 0 {
        return Ok(image);
    }
    let bounds: Aabb = bvh.root_bounds();
    let ext = bounds.extent();
    let center = bounds.centroid();
    let a = axis.index();
    let (u, v) = image_axes(axis);
    let span = ext[u].max(ext[v]);
    let pixel = if span > 0.0 { span / resolution as f32 } else { 1.0 };
    let depth = ext[a];
    let half = resolution as f32 / 2.0;
    for row in 0..resolution {
        for col in 0..resolution {
            let mut origin = [0f32; 3];
            origin[a] = bounds.min[a];
            origin[u] = center[u] + (col as f32 + 0.5 - half) * pixel;
            origin[v] = center[v] + (half - row as f32 - 0.5) * pixel;
            let seg = RaySeg::along(Vec3::from(origin), axis, 0.0, depth);
            if let Some(hit) = intersect(&seg) {
                let shade = if depth > 0.0 {
                    255.0 - 254.0 * (hit.t / depth).clamp(0.0, 1.0)
                } else {
                    255.0
                };
                image.pixels[row * resolution + col] = shade.round() as u8;
            }
        }
    }
    Ok(image)
}
