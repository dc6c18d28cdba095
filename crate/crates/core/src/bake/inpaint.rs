//! Push-pull hole filling for baked textures.
//!
//! Valid texels are pulled down a mip pyramid with weighted averaging, then
//! pushed back up so every hole takes a blend of the nearest valid colors.
//! Valid texels are never modified.

use super::BakedTexture;

/// Fill hole texels (no view contributed) with push-pull interpolated
/// colors. If the whole texture is holes, fills with mid-gray and warns.
pub fn inpaint_holes(texture: &BakedTexture) -> BakedTexture {
    let mut out = texture.clone();
    let total_holes = texture.hole_mask.iter().filter(|&&h| h).count();
    if total_holes == 0 {
        return out;
    }
    if total_holes == texture.hole_mask.len() {
        log::warn!("inpaint: texture has no valid texels; filling with mid-gray");
        for px in &mut out.pixels {
            *px = [0.5, 0.5, 0.5];
        }
        return out;
    }

    // Pull: build coarser levels of (color, weight).
    struct Level {
        w: usize,
        h: usize,
        color: Vec<[f64; 3]>,
        weight: Vec<f64>,
    }
    let base = Level {
        w: texture.width,
        h: texture.height,
        color: texture.pixels.clone(),
        weight: texture
            .hole_mask
            .iter()
            .map(|&hole| if hole { 0.0 } else { 1.0 })
            .collect(),
    };
    let mut levels = vec![base];
    while levels.last().unwrap().w > 1 || levels.last().unwrap().h > 1 {
        let prev = levels.last().unwrap();
        let w = prev.w.div_ceil(2);
        let h = prev.h.div_ceil(2);
        let mut color = vec![[0.0; 3]; w * h];
        let mut weight = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut wsum = 0.0;
                let mut csum = [0.0; 3];
                let mut count = 0_u32;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (sx, sy) = (2 * x + dx, 2 * y + dy);
                        if sx < prev.w && sy < prev.h {
                            count += 1;
                            let wv = prev.weight[sy * prev.w + sx];
                            wsum += wv;
                            let c = prev.color[sy * prev.w + sx];
                            for k in 0..3 {
                                csum[k] += wv * c[k];
                            }
                        }
                    }
                }
                let idx = y * w + x;
                if wsum > 0.0 {
                    for k in 0..3 {
                        color[idx][k] = csum[k] / wsum;
                    }
                }
                weight[idx] = wsum / count as f64;
            }
        }
        levels.push(Level { w, h, color, weight });
    }

    // Push: blend each incomplete texel with its parent, coarse to fine.
    for li in (0..levels.len() - 1).rev() {
        let (fine_slice, coarse_slice) = levels.split_at_mut(li + 1);
        let fine = &mut fine_slice[li];
        let coarse = &coarse_slice[0];
        for y in 0..fine.h {
            for x in 0..fine.w {
                let idx = y * fine.w + x;
                let wv = fine.weight[idx];
                if wv >= 1.0 {
                    continue;
                }
                let parent = coarse.color[(y / 2) * coarse.w + x / 2];
                for k in 0..3 {
                    fine.color[idx][k] = wv * fine.color[idx][k] + (1.0 - wv) * parent[k];
                }
                fine.weight[idx] = 1.0;
            }
        }
    }

    for (idx, &hole) in texture.hole_mask.iter().enumerate() {
        if hole {
            let c = levels[0].color[idx];
            out.pixels[idx] = [
                c[0].clamp(0.0, 1.0),
                c[1].clamp(0.0, 1.0),
                c[2].clamp(0.0, 1.0),
            ];
        }
    }
    out
}
