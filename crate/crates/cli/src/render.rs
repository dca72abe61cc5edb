//! Binary PPM heatmaps with a diverging palette.

use phaselab::PhaseField;

/// Image pixels per grid cell along each axis, chosen so the long side is at least 512.
pub fn pixels_per_cell(n_q: usize, n_p: usize) -> usize {
    512usize.div_ceil(n_q.max(n_p)).max(1)
}

/// Cold (blue) for negative, white at zero, warm (red) for positive; `v` in `[-1, 1]`.
pub fn diverging(v: f64) -> [u8; 3] {
    let t = v.clamp(-1.0, 1.0);
    let fade = |a: f64| (255.0 * (1.0 - a.abs())).round() as u8;
    if t >= 0.0 {
        [255, fade(t), fade(t)]
    } else {
        [fade(t), fade(t), 255]
    }
}

/// Axis-aligned square outline in phase-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlay {
    pub q0: f64,
    pub p0: f64,
    pub side: f64,
}

impl Overlay {
    /// A square of area `4ħ` (side `2√ħ`) placed 5% in from the lower-left corner.
    pub fn four_hbar(field: &PhaseField) -> Self {
        let g = field.grid();
        let (q, p) = (g.q_axis(), g.p_axis());
        Self { q0: q.min + 0.05 * q.length(), p0: p.min + 0.05 * p.length(), side: 2.0 * g.hbar().sqrt() }
    }
}

/// Renders `field` with values divided by `scale`; `q` runs left to right, `p` bottom to top.
pub fn render_ppm(field: &PhaseField, scale: f64, overlay: Option<Overlay>) -> Vec<u8> {
    let g = field.grid();
    let (n_q, n_p) = g.shape();
    let s = pixels_per_cell(n_q, n_p);
    let (width, height) = (n_q * s, n_p * s);
    let values = field.values();
    let mut rgb = vec![0u8; width * height * 3];
    for y in 0..height {
        let j = n_p - 1 - y / s;
        for x in 0..width {
            let i = x / s;
            let v = if scale > 0.0 { values[[i, j]] / scale } else { 0.0 };
            rgb[3 * (y * width + x)..3 * (y * width + x) + 3].copy_from_slice(&diverging(v));
        }
    }
    if let Some(o) = overlay {
        let (q, p) = (g.q_axis(), g.p_axis());
        // Pixel x covers q in [min + x·dq/s, min + (x+1)·dq/s).
        let px = |qv: f64| ((qv - q.min) / q.step() * s as f64).round() as isize;
        let py = |pv: f64| height as isize - ((pv - p.min) / p.step() * s as f64).round() as isize;
        let (x0, x1) = (px(o.q0), px(o.q0 + o.side));
        let (y1, y0) = (py(o.p0), py(o.p0 + o.side));
        let mut put = |x: isize, y: isize| {
            if (0..width as isize).contains(&x) && (0..height as isize).contains(&y) {
                let k = 3 * (y as usize * width + x as usize);
                rgb[k..k + 3].copy_from_slice(&[0, 0, 0]);
            }
        };
        for x in x0..=x1 {
            put(x, y0);
            put(x, y1);
        }
        for y in y0..=y1 {
            put(x0, y);
            put(x1, y);
        }
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&rgb);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use phaselab::PhaseGrid;

    /// Width, height and RGB bytes of a P6 image written by [`render_ppm`].
    fn parse_ppm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while bytes.get(pos)?.is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while !bytes.get(pos)?.is_ascii_whitespace() {
                pos += 1;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return None;
        }
        let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
        let data = bytes.get(pos + 1..)?;
        (data.len() == w * h * 3).then_some((w, h, data))
    }

    #[test]
    fn palette_endpoints() {
        assert_eq!(diverging(0.0), [255, 255, 255]);
        assert_eq!(diverging(1.0), [255, 0, 0]);
        assert_eq!(diverging(-1.0), [0, 0, 255]);
        assert_eq!(diverging(-7.0), [0, 0, 255]);
    }

    #[test]
    fn image_orientation_and_header() {
        let g = PhaseGrid::new(8, 8, (0.0, 8.0), (0.0, 8.0), 1.0).unwrap();
        // Positive only in the top-right corner cell (largest q and p).
        let f = PhaseField::from_fn(g, 0.0, |q, p| if q == 7.0 && p == 7.0 { 1.0 } else { 0.0 }).unwrap();
        let img = render_ppm(&f, 1.0, None);
        let (w, h, rgb) = parse_ppm(&img).unwrap();
        assert_eq!((w, h), (512, 512));
        assert_eq!(&rgb[3 * (w - 1)..3 * w], &[255, 0, 0]);
        assert_eq!(&rgb[..3], &[255, 255, 255]);
    }

    #[test]
    fn overlay_side_scales_with_root_hbar() {
        let field = |hbar: f64| {
            let g = PhaseGrid::new(64, 64, (-8.0, 8.0), (-8.0, 8.0), hbar).unwrap();
            PhaseField::from_fn(g, 0.0, |_, _| 1.0 / 256.0).unwrap()
        };
        let (one, quarter) = (Overlay::four_hbar(&field(1.0)), Overlay::four_hbar(&field(0.25)));
        assert_eq!(one.side, 2.0);
        assert_eq!(quarter.side, 1.0);
        assert!((one.side * one.side - 4.0).abs() < 1e-12);
        let img = render_ppm(&field(0.25), 1.0, Some(quarter));
        let (w, _, rgb) = parse_ppm(&img).unwrap();
        // Lower-left corner of the box: q = -7.2, p = -7.2, 8 px per cell of 0.25.
        let (x, y) = (((-7.2_f64 + 8.0) / 0.25 * 8.0).round() as usize, 512 - ((-7.2_f64 + 8.0) / 0.25 * 8.0).round() as usize);
        assert_eq!(&rgb[3 * (y * w + x)..3 * (y * w + x) + 3], &[0, 0, 0]);
    }
}
