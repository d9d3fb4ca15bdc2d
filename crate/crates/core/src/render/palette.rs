//! Fixed region palettes.

use image::Rgb;

use super::RenderError;

/// 30 mutually distinct fill colors, indexed by a type's position in the
/// sorted type catalog.
pub const DEFAULT_PALETTE: [[u8; 3]; 30] = [
    [230, 159, 0],
    [86, 180, 233],
    [0, 158, 115],
    [240, 228, 66],
    [204, 121, 167],
    [213, 94, 0],
    [153, 204, 102],
    [255, 179, 186],
    [170, 136, 255],
    [255, 223, 128],
    [128, 222, 234],
    [197, 163, 120],
    [255, 138, 101],
    [129, 199, 132],
    [206, 206, 206],
    [244, 143, 177],
    [100, 181, 160],
    [255, 204, 153],
    [179, 157, 219],
    [220, 231, 117],
    [144, 164, 174],
    [255, 171, 64],
    [174, 213, 129],
    [128, 203, 196],
    [239, 154, 154],
    [188, 170, 164],
    [159, 168, 218],
    [255, 241, 118],
    [77, 208, 225],
    [215, 185, 230],
];

pub fn palette(palette_id: &str) -> Result<&'static [[u8; 3]], RenderError> {
    match palette_id {
        "default" => Ok(&DEFAULT_PALETTE),
        other => Err(RenderError::UnknownPalette(other.to_string())),
    }
}

/// Color of catalog entry `index`.
pub fn type_color(palette_id: &str, index: usize, catalog_len: usize) -> Result<Rgb<u8>, RenderError> {
    let colors = palette(palette_id)?;
    if catalog_len > colors.len() {
        return Err(RenderError::TooManyTypes {
            count: catalog_len,
            capacity: colors.len(),
        });
    }
    Ok(Rgb(colors[index]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_palette_is_distinct() {
        let mut v = DEFAULT_PALETTE.to_vec();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 30);
        assert!(palette("neon").is_err());
        assert!(matches!(
            type_color("default", 0, 31),
            Err(RenderError::TooManyTypes { count: 31, .. })
        ));
    }
}
