//! Deterministic rasterizer: candidates become numbered colored discs over
//! the ground-truth box (and optionally the element wireframes), written as
//! binary PPM so output is bit-exact everywhere.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{to_pixels, CandidateSet, GroundingTask};

/// 3x5 digit bitmaps, one row per array entry, 3 low bits per row.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111], // 0
    [0b010, 0b110, 0b010, 0b010, 0b111], // 1
    [0b111, 0b001, 0b111, 0b100, 0b111], // 2
    [0b111, 0b001, 0b111, 0b001, 0b111], // 3
    [0b101, 0b101, 0b111, 0b001, 0b001], // 4
    [0b111, 0b100, 0b111, 0b001, 0b111], // 5
    [0b111, 0b100, 0b111, 0b101, 0b111], // 6
    [0b111, 0b001, 0b010, 0b010, 0b010], // 7
    [0b111, 0b101, 0b111, 0b101, 0b111], // 8
    [0b111, 0b101, 0b111, 0b001, 0b111], // 9
];
const GLYPH_SCALE: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    BlankWhite,
    ElementWireframe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub marker_radius_px: u32,
    pub palette: Vec<[u8; 3]>,
    pub gt_box_color: [u8; 3],
    pub background: Background,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            marker_radius_px: 8,
            palette: vec![
                [31, 119, 180],
                [255, 127, 14],
                [44, 160, 44],
                [214, 39, 40],
                [148, 103, 189],
                [140, 86, 75],
                [227, 119, 194],
                [127, 127, 127],
                [188, 189, 34],
                [23, 190, 207],
            ],
            gt_box_color: [255, 0, 0],
            background: Background::ElementWireframe,
        }
    }
}

impl RenderStyle {
    pub fn validated(self) -> Result<Self> {
        for (i, a) in self.palette.iter().enumerate() {
            for b in &self.palette[i + 1..] {
                if a == b {
                    return Err(Error::Argument(format!(
                        "palette colors must be pairwise distinct, {a:?} repeats"
                    )));
                }
            }
        }
        if self.marker_radius_px == 0 {
            return Err(Error::Argument("marker radius must be positive".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerAnnotation {
    pub index: usize,
    pub center_px: (i64, i64),
    pub marker_radius_px: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedImage {
    pub width_px: u32,
    pub height_px: u32,
    /// Row-major RGB, 3 bytes per pixel.
    pub pixels: Vec<u8>,
    pub sidecar: Vec<MarkerAnnotation>,
}

impl MarkedImage {
    fn blank(width_px: u32, height_px: u32) -> Self {
        Self {
            width_px,
            height_px,
            pixels: vec![255; width_px as usize * height_px as usize * 3],
            sidecar: Vec::new(),
        }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width_px as i64 || y >= self.height_px as i64 {
            return;
        }
        let at = (y as usize * self.width_px as usize + x as usize) * 3;
        self.pixels[at..at + 3].copy_from_slice(&color);
    }

    pub fn get(&self, x: i64, y: i64) -> Option<[u8; 3]> {
        if x < 0 || y < 0 || x >= self.width_px as i64 || y >= self.height_px as i64 {
            return None;
        }
        let at = (y as usize * self.width_px as usize + x as usize) * 3;
        Some([self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]])
    }
}

fn clamp_px(v: i64, max_exclusive: u32) -> i64 {
    v.clamp(0, max_exclusive as i64 - 1)
}

fn box_pixel_rect(b: &crate::model::BBox, task: &GroundingTask) -> (i64, i64, i64, i64) {
    let (x0, y0) = to_pixels(crate::model::Point2::new(b.x_min, b.y_min), task.screen);
    let (x1, y1) = to_pixels(crate::model::Point2::new(b.x_max, b.y_max), task.screen);
    (x0, y0, x1, y1)
}

fn draw_rect_outline(img: &mut MarkedImage, rect: (i64, i64, i64, i64), color: [u8; 3]) {
    let (x0, y0, x1, y1) = rect;
    let x0 = clamp_px(x0, img.width_px);
    let x1 = clamp_px(x1, img.width_px);
    let y0 = clamp_px(y0, img.height_px);
    let y1 = clamp_px(y1, img.height_px);
    for x in x0..=x1 {
        img.put(x, y0, color);
        img.put(x, y1, color);
    }
    for y in y0..=y1 {
        img.put(x0, y, color);
        img.put(x1, y, color);
    }
}

fn draw_disc(img: &mut MarkedImage, cx: i64, cy: i64, radius: i64, color: [u8; 3]) {
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy <= radius * radius {
                img.put(cx + dx, cy + dy, color);
            }
        }
    }
}

fn draw_label(img: &mut MarkedImage, cx: i64, cy: i64, index: usize, color: [u8; 3]) {
    let digits: Vec<usize> = index
        .to_string()
        .bytes()
        .map(|b| (b - b'0') as usize)
        .collect();
    let glyph_w = 3 * GLYPH_SCALE;
    let gap = GLYPH_SCALE;
    let total_w = digits.len() as i64 * glyph_w + (digits.len() as i64 - 1) * gap;
    let mut x0 = cx - total_w / 2;
    let y0 = cy - 5 * GLYPH_SCALE / 2;
    for d in digits {
        for (row, bits) in DIGITS[d].iter().enumerate() {
            for col in 0..3i64 {
                if bits & (0b100 >> col) != 0 {
                    for sy in 0..GLYPH_SCALE {
                        for sx in 0..GLYPH_SCALE {
                            img.put(
                                x0 + col * GLYPH_SCALE + sx,
                                y0 + row as i64 * GLYPH_SCALE + sy,
                                color,
                            );
                        }
                    }
                }
            }
        }
        x0 += glyph_w + gap;
    }
}

/// Rasterizes the task: optional element wireframes, a 2 px red ground-truth
/// outline, then one numbered disc per candidate (palette order).
pub fn render_marked(task: &GroundingTask, cands: &CandidateSet, style: &RenderStyle) -> Result<MarkedImage> {
    let style = style.clone().validated()?;
    if cands.k() > style.palette.len() {
        return Err(Error::Palette { count: cands.k(), palette: style.palette.len() });
    }
    let mut img = MarkedImage::blank(task.screen.width_px, task.screen.height_px);

    if style.background == Background::ElementWireframe {
        let wire = [200, 200, 200];
        for b in &task.distractors {
            let rect = box_pixel_rect(b, task);
            draw_rect_outline(&mut img, rect, wire);
        }
    }

    let gt = box_pixel_rect(&task.target, task);
    draw_rect_outline(&mut img, gt, style.gt_box_color);
    let inner = (gt.0 + 1, gt.1 + 1, gt.2 - 1, gt.3 - 1);
    if inner.0 <= inner.2 && inner.1 <= inner.3 {
        draw_rect_outline(&mut img, inner, style.gt_box_color);
    }

    for (i, &p) in cands.points().iter().enumerate() {
        let center = to_pixels(p, task.screen);
        draw_disc(
            &mut img,
            center.0,
            center.1,
            style.marker_radius_px as i64,
            style.palette[i],
        );
        draw_label(&mut img, center.0, center.1, i, [255, 255, 255]);
        img.sidecar.push(MarkerAnnotation {
            index: i,
            center_px: center,
            marker_radius_px: style.marker_radius_px,
        });
    }
    Ok(img)
}

/// Renders with an empty candidate set (background and GT box only).
pub fn render_background(task: &GroundingTask, style: &RenderStyle) -> Result<MarkedImage> {
    let style = style.clone().validated()?;
    let mut img = MarkedImage::blank(task.screen.width_px, task.screen.height_px);
    if style.background == Background::ElementWireframe {
        for b in &task.distractors {
            let rect = box_pixel_rect(b, task);
            draw_rect_outline(&mut img, rect, [200, 200, 200]);
        }
    }
    let gt = box_pixel_rect(&task.target, task);
    draw_rect_outline(&mut img, gt, style.gt_box_color);
    let inner = (gt.0 + 1, gt.1 + 1, gt.2 - 1, gt.3 - 1);
    if inner.0 <= inner.2 && inner.1 <= inner.3 {
        draw_rect_outline(&mut img, inner, style.gt_box_color);
    }
    Ok(img)
}

pub fn ppm_bytes(img: &MarkedImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width_px, img.height_px).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Binary P6 with header `P6\n<w> <h>\n255\n`.
pub fn write_ppm(img: &MarkedImage, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&ppm_bytes(img)).map_err(io_err)?;
    Ok(())
}

/// Minimal P6 reader for round-trip checks; handles exactly the header this
/// module writes.
pub fn read_ppm(path: &Path) -> Result<MarkedImage> {
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    let bytes = std::fs::read(path).map_err(io_err)?;
    parse_ppm(&bytes).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("{} is not a P6 file this reader understands", path.display()),
    })
}

fn parse_ppm(bytes: &[u8]) -> Option<MarkedImage> {
    let mut fields = Vec::new();
    let mut at = 0usize;
    // header = 4 whitespace-separated fields: magic, width, height, maxval
    while fields.len() < 4 && at < bytes.len() {
        while at < bytes.len() && bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        let start = at;
        while at < bytes.len() && !bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..at]).ok()?);
    }
    if fields.len() != 4 || fields[0] != "P6" || fields[3] != "255" {
        return None;
    }
    let width_px: u32 = fields[1].parse().ok()?;
    let height_px: u32 = fields[2].parse().ok()?;
    at += 1; // the single whitespace byte after maxval
    let pixels = bytes.get(at..)?.to_vec();
    if pixels.len() != width_px as usize * height_px as usize * 3 {
        return None;
    }
    Some(MarkedImage { width_px, height_px, pixels, sidecar: Vec::new() })
}
