//! Canny edge detection over normalized depth buffers.
//!
//! Gaussian blur, Sobel gradients, non-maximum suppression along the
//! quantized gradient direction, then double-threshold hysteresis. Gradient
//! magnitudes are scaled by the theoretical Sobel maximum for a [0, 1]
//! image (4·√2) so thresholds are resolution- and content-independent.

/// Largest Sobel gradient magnitude attainable on a [0, 1] image.
const SOBEL_MAX: f64 = 5.65685424949238; // 4 * sqrt(2)

/// Detect depth discontinuities. Returns a binary map where `true` marks an
/// edge pixel; the result is masked so background-only pixels never flag.
pub fn detect_depth_edges(
    depth: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
    sigma: f64,
    low: f64,
    high: f64,
) -> Vec<bool> {
    assert_eq!(depth.len(), width * height);
    assert_eq!(mask.len(), width * height);
    if width < 3 || height < 3 {
        return vec![false; width * height];
    }

    let blurred = gaussian_blur(depth, width, height, sigma);
    let (gx, gy) = sobel(&blurred, width, height);
    let mag: Vec<f64> = gx
        .iter()
        .zip(gy.iter())
        .map(|(&x, &y)| x.hypot(y) / SOBEL_MAX)
        .collect();

    let thinned = non_maximum_suppression(&mag, &gx, &gy, width, height);
    let edges = hysteresis(&thinned, width, height, low, high);

    edges
        .iter()
        .zip(mask.iter())
        .map(|(&e, &m)| e && m)
        .collect()
}

fn gaussian_blur(src: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut sum = 0.0;
    for i in -radius..=radius {
        let x = i as f64 / sigma;
        let w = (-0.5 * x * x).exp();
        kernel.push(w);
        sum += w;
    }
    for w in &mut kernel {
        *w /= sum;
    }

    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut horizontal = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sx = clamp(x as isize + k as isize - radius, width);
                acc += w * src[y * width + sx];
            }
            horizontal[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sy = clamp(y as isize + k as isize - radius, height);
                acc += w * horizontal[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn sobel(src: &[f64], width: usize, height: usize) -> (Vec<f64>, Vec<f64>) {
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let at = |x: isize, y: isize| src[clamp(y, height) * width + clamp(x, width)];
    let mut gx = vec![0.0; src.len()];
    let mut gy = vec![0.0; src.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let tl = at(x - 1, y - 1);
            let tc = at(x, y - 1);
            let tr = at(x + 1, y - 1);
            let ml = at(x - 1, y);
            let mr = at(x + 1, y);
            let bl = at(x - 1, y + 1);
            let bc = at(x, y + 1);
            let br = at(x + 1, y + 1);
            let idx = y as usize * width + x as usize;
            gx[idx] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[idx] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
    (gx, gy)
}

fn non_maximum_suppression(
    mag: &[f64],
    gx: &[f64],
    gy: &[f64],
    width: usize,
    height: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; mag.len()];
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let idx = y * width + x;
            if mag[idx] == 0.0 {
                continue;
            }
            let mut angle = gy[idx].atan2(gx[idx]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (n1, n2) = if !(22.5..157.5).contains(&angle) {
                (mag[idx - 1], mag[idx + 1])
            } else if angle < 67.5 {
                (mag[idx - width - 1], mag[idx + width + 1])
            } else if angle < 112.5 {
                (mag[idx - width], mag[idx + width])
            } else {
                (mag[idx - width + 1], mag[idx + width - 1])
            };
            if mag[idx] >= n1 && mag[idx] >= n2 {
                out[idx] = mag[idx];
            }
        }
    }
    out
}

fn hysteresis(mag: &[f64], width: usize, height: usize, low: f64, high: f64) -> Vec<bool> {
    let mut edges = vec![false; mag.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (idx, &m) in mag.iter().enumerate() {
        if m >= high && !edges[idx] {
            edges[idx] = true;
            stack.push(idx);
            while let Some(cur) = stack.pop() {
                let cx = (cur % width) as isize;
                let cy = (cur / width) as isize;
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (cx + dx, cy + dy);
                        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let n = ny as usize * width + nx as usize;
                        if !edges[n] && mag[n] >= low {
                            edges[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    edges
}
