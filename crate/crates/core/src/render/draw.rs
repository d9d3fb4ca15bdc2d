//! Pixel-level drawing helpers.

use font8x8::{UnicodeFonts, BASIC_FONTS};
use image::{Rgb, RgbImage};

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) -> bool {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
        true
    } else {
        false
    }
}

/// Axis-aligned filled square of side `size` centered on `(cx, cy)`.
pub fn fill_rect(img: &mut RgbImage, cx: f64, cy: f64, size: u32, color: Rgb<u8>) {
    let half = size as f64 / 2.0;
    let (x0, y0) = ((cx - half).round() as i64, (cy - half).round() as i64);
    for y in y0..y0 + size as i64 {
        for x in x0..x0 + size as i64 {
            put(img, x, y, color);
        }
    }
}

/// Bresenham line with square brush of side `width`. Returns the number of
/// pixels set inside the image.
pub fn draw_line(
    img: &mut RgbImage,
    from: (f64, f64),
    to: (f64, f64),
    width: u32,
    color: Rgb<u8>,
) -> usize {
    let (mut x0, mut y0) = (from.0.round() as i64, from.1.round() as i64);
    let (x1, y1) = (to.0.round() as i64, to.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let lo = -((width as i64 - 1) / 2);
    let hi = width as i64 / 2;
    let mut count = 0;
    loop {
        for oy in lo..=hi {
            for ox in lo..=hi {
                if put(img, x0 + ox, y0 + oy, color) {
                    count += 1;
                }
            }
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    count
}

/// Draws consecutive segments; returns how many segments were rasterized.
pub fn draw_polyline(img: &mut RgbImage, points: &[(f64, f64)], width: u32, color: Rgb<u8>) -> usize {
    points
        .windows(2)
        .filter(|w| draw_line(img, w[0], w[1], width, color) > 0)
        .count()
}

/// 8x8 bitmap text centered on `(cx, cy)`, scaled by `scale`.
pub fn draw_text(img: &mut RgbImage, text: &str, cx: f64, cy: f64, scale: u32, color: Rgb<u8>) {
    let glyph = 8 * scale as i64;
    let total = glyph * text.chars().count() as i64;
    let x0 = cx.round() as i64 - total / 2;
    let y0 = cy.round() as i64 - glyph / 2;
    for (n, ch) in text.chars().enumerate() {
        let Some(rows) = BASIC_FONTS.get(ch) else {
            continue;
        };
        for (row, bits) in rows.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) == 0 {
                    continue;
                }
                for sy in 0..scale as i64 {
                    for sx in 0..scale as i64 {
                        put(
                            img,
                            x0 + n as i64 * glyph + col * scale as i64 + sx,
                            y0 + row as i64 * scale as i64 + sy,
                            color,
                        );
                    }
                }
            }
        }
    }
}
