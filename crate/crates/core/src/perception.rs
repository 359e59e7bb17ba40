//! Synthetic bird's-eye depth rendering, occupancy grids, obstacle inflation,
//! the pushee-centered local window and the window encoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Placed, Vec2};
use crate::world::{BodyState, Role, WorldState};

pub const IMAGE_SIZE: usize = 256;
pub const WINDOW_SIZE: usize = 64;
pub const LATENT_DIM: usize = 32;

/// Height above the table rendered for each body role, in meters.
pub const PUSHEE_HEIGHT: f64 = 0.05;
pub const OBSTACLE_HEIGHT: f64 = 0.06;
pub const EE_HEIGHT: f64 = 0.10;
/// Window values are heights divided by this constant, clamped to [0, 1].
pub const NORMALIZATION_HEIGHT: f64 = 0.10;

pub fn body_height(role: Role) -> f64 {
    match role {
        Role::Pushee => PUSHEE_HEIGHT,
        Role::Obstacle => OBSTACLE_HEIGHT,
        Role::EndEffector => EE_HEIGHT,
    }
}

/// Top-down height map. Row `iy` spans world y from `origin.y + iy * res`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    pub values: Vec<f64>,
}

impl DepthImage {
    pub fn empty(width: usize, height: usize, resolution: f64, origin: Vec2) -> Self {
        DepthImage { width, height, resolution, origin, values: vec![0.0; width * height] }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.width + ix]
    }

    pub fn pixel_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin + Vec2::new((ix as f64 + 0.5) * self.resolution, (iy as f64 + 0.5) * self.resolution)
    }

    /// Applies `f` to every pixel whose center lies inside `shape`.
    fn for_each_covered(&mut self, shape: &Placed, mut f: impl FnMut(&mut f64)) {
        let bb = shape.bounding_box();
        let Some((x0, x1)) = pixel_span(bb.min.x, bb.max.x, self.origin.x, self.resolution, self.width) else {
            return;
        };
        let Some((y0, y1)) = pixel_span(bb.min.y, bb.max.y, self.origin.y, self.resolution, self.height) else {
            return;
        };
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if shape.contains(self.pixel_center(ix, iy)) {
                    f(&mut self.values[iy * self.width + ix]);
                }
            }
        }
    }

    /// Bilinear sample at a world point; off-image pixels read as 0.
    pub fn sample_bilinear(&self, p: Vec2) -> f64 {
        let fx = (p.x - self.origin.x) / self.resolution - 0.5;
        let fy = (p.y - self.origin.y) / self.resolution - 0.5;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let (tx, ty) = (fx - x0, fy - y0);
        let read = |x: f64, y: f64| {
            if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
                0.0
            } else {
                self.get(x as usize, y as usize)
            }
        };
        let a = read(x0, y0) * (1.0 - tx) + read(x0 + 1.0, y0) * tx;
        let b = read(x0, y0 + 1.0) * (1.0 - tx) + read(x0 + 1.0, y0 + 1.0) * tx;
        a * (1.0 - ty) + b * ty
    }
}

/// Index range of pixels whose centers may fall in `[lo, hi]`.
fn pixel_span(lo: f64, hi: f64, origin: f64, res: f64, n: usize) -> Option<(usize, usize)> {
    let a = ((lo - origin) / res - 0.5).floor().max(0.0);
    let b = ((hi - origin) / res - 0.5).ceil().min(n as f64 - 1.0);
    if b < 0.0 || a > n as f64 - 1.0 || a > b {
        None
    } else {
        Some((a as usize, b as usize))
    }
}

/// Renders the world's bodies into a 256×256 height map spanning the
/// workspace bounds. Overlapping footprints keep the tallest height.
pub fn render_depth(world: &WorldState) -> DepthImage {
    let resolution = world.bounds.width() / IMAGE_SIZE as f64;
    let mut img = DepthImage::empty(IMAGE_SIZE, IMAGE_SIZE, resolution, world.bounds.min);
    for body in &world.bodies {
        let h = body_height(body.role);
        img.for_each_covered(&body.placed(), |v| *v = v.max(h));
    }
    img
}

/// [`render_depth`] plus i.i.d. Gaussian noise of standard deviation `sigma`
/// on covered pixels; background stays exactly 0.
pub fn render_depth_noisy(world: &WorldState, sigma: f64, seed: u64) -> DepthImage {
    let mut img = render_depth(world);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in img.values.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        if *v > 0.0 {
            *v = (*v + sigma * n).max(1e-6);
        }
    }
    img
}

/// Binary grid; `cells[iy * width + ix]` is true when occupied. `origin` is
/// the world position of the lower-left corner of cell (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Vec2) -> Self {
        OccupancyGrid { width, height, resolution, origin, cells: vec![false; width * height] }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.index(ix, iy)]
    }

    /// Out-of-grid cells count as occupied.
    pub fn occupied_i(&self, ix: i64, iy: i64) -> bool {
        if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
            true
        } else {
            self.cells[iy as usize * self.width + ix as usize]
        }
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.index(ix, iy);
        self.cells[i] = occupied;
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin + Vec2::new((ix as f64 + 0.5) * self.resolution, (iy as f64 + 0.5) * self.resolution)
    }

    /// Continuous cell coordinates of a world point (cell (i, j) spans
    /// `[i, i+1) × [j, j+1)`).
    pub fn to_grid(&self, p: Vec2) -> Vec2 {
        (p - self.origin) * (1.0 / self.resolution)
    }

    pub fn to_world(&self, g: Vec2) -> Vec2 {
        self.origin + g * self.resolution
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let g = self.to_grid(p);
        let (ix, iy) = (g.x.floor(), g.y.floor());
        if ix < 0.0 || iy < 0.0 || ix >= self.width as f64 || iy >= self.height as f64 {
            None
        } else {
            Some((ix as usize, iy as usize))
        }
    }

    pub fn is_free_at(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| !self.occupied(ix, iy))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// ASCII PGM (P2): free cells 255, occupied 0, first row = top (max y).
    /// Resolution and origin travel in comment lines.
    pub fn to_pgm(&self) -> String {
        let mut s = format!(
            "P2\n# resolution {}\n# origin {} {}\n{} {}\n255\n",
            self.resolution, self.origin.x, self.origin.y, self.width, self.height
        );
        for iy in (0..self.height).rev() {
            let row: Vec<&str> = (0..self.width).map(|ix| if self.occupied(ix, iy) { "0" } else { "255" }).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses [`to_pgm`](Self::to_pgm) output. Pixels darker than half the
    /// max value are occupied. Missing comments default to resolution 1 and
    /// origin (0, 0).
    pub fn from_pgm(text: &str) -> Result<Self> {
        let mut resolution = 1.0;
        let mut origin = Vec2::ZERO;
        let mut tokens = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(c) = line.strip_prefix('#') {
                let parts: Vec<&str> = c.split_whitespace().collect();
                let num = |i: usize| -> Result<f64> {
                    parts
                        .get(i)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Format(format!("bad PGM comment `{line}`")))
                };
                match parts.first() {
                    Some(&"resolution") => resolution = num(1)?,
                    Some(&"origin") => origin = Vec2::new(num(1)?, num(2)?),
                    _ => {}
                }
                continue;
            }
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        if it.next().as_deref() != Some("P2") {
            return Err(Error::Format("expected P2 header".into()));
        }
        let mut next_num = |what: &str| -> Result<usize> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Format(format!("missing or invalid {what}")))
        };
        let width = next_num("width")?;
        let height = next_num("height")?;
        let maxval = next_num("maxval")?;
        if maxval == 0 || !(resolution > 0.0) {
            return Err(Error::Format("invalid maxval or resolution".into()));
        }
        let mut grid = OccupancyGrid::new(width, height, resolution, origin);
        for row in 0..height {
            let iy = height - 1 - row;
            for ix in 0..width {
                let v = next_num("pixel")?;
                grid.set(ix, iy, (v as f64) < maxval as f64 / 2.0);
            }
        }
        Ok(grid)
    }
}

/// Cells with positive depth that are not covered by the pushee or the end
/// effector footprint.
pub fn occupancy_from_depth(depth: &DepthImage, pushee: &BodyState, ee: &BodyState) -> OccupancyGrid {
    let mut grid = OccupancyGrid::new(depth.width, depth.height, depth.resolution, depth.origin);
    for (c, v) in grid.cells.iter_mut().zip(&depth.values) {
        *c = *v > 0.0;
    }
    let mut mask = DepthImage::empty(depth.width, depth.height, depth.resolution, depth.origin);
    for body in [pushee, ee] {
        mask.for_each_covered(&body.placed(), |v| *v = 1.0);
    }
    for (c, m) in grid.cells.iter_mut().zip(&mask.values) {
        if *m > 0.0 {
            *c = false;
        }
    }
    grid
}

/// Squared distance transform of a 1D sampled function (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.fill(f64::INFINITY);
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Euclidean distance, in cells, from every cell center to the nearest
/// occupied cell center (0 on occupied cells, ∞ when none are occupied).
pub fn distance_transform(grid: &OccupancyGrid) -> Vec<f64> {
    let (w, h) = (grid.width, grid.height);
    let n = w.max(h);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    let mut tmp = vec![0.0; w * h];
    for ix in 0..w {
        for iy in 0..h {
            col_in[iy] = if grid.occupied(ix, iy) { 0.0 } else { f64::INFINITY };
        }
        edt_1d(&col_in, &mut col_out, &mut v, &mut z);
        for iy in 0..h {
            tmp[iy * w + ix] = col_out[iy];
        }
    }
    let mut out = vec![0.0; w * h];
    for iy in 0..h {
        let row = &tmp[iy * w..(iy + 1) * w];
        edt_1d(row, &mut out[iy * w..(iy + 1) * w], &mut v, &mut z);
    }
    out.iter_mut().for_each(|d| *d = d.sqrt());
    out
}

/// Marks every cell whose center lies within `radius` meters of an occupied
/// cell center.
pub fn inflate(grid: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    let r = radius.max(0.0) / grid.resolution;
    let r2 = r * r;
    let (w, h) = (grid.width, grid.height);
    // Squared distances are integers, so compare them exactly.
    let dist = distance_transform(grid);
    let mut out = grid.clone();
    for i in 0..w * h {
        let d2 = (dist[i] * dist[i]).round();
        out.cells[i] = grid.cells[i] || d2 <= r2 + 1e-9;
    }
    out
}

/// Obstacle-only occupancy of the world, inflated by half the pushee's
/// circumscribed diameter.
pub fn planning_grid(world: &WorldState) -> OccupancyGrid {
    let depth = render_depth(world);
    let grid = occupancy_from_depth(&depth, world.pushee(), world.ee());
    inflate(&grid, world.pushee().shape.circumscribed_radius())
}

/// Pushee-centered, pushee-aligned crop with pushee and end effector masked
/// out. Pixel (u, v) sits at pushee-frame offset
/// `((u + 0.5 − 32) · res, (v + 0.5 − 32) · res)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWindow {
    pub values: Vec<f64>,
    pub center: Vec2,
    pub orientation: f64,
}

impl LocalWindow {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * WINDOW_SIZE + u]
    }

    pub fn filled(value: f64) -> Self {
        LocalWindow { values: vec![value; WINDOW_SIZE * WINDOW_SIZE], center: Vec2::ZERO, orientation: 0.0 }
    }
}

pub fn egocentric_window(depth: &DepthImage, pushee: &BodyState, ee: &BodyState) -> LocalWindow {
    let mut masked = depth.clone();
    for body in [pushee, ee] {
        masked.for_each_covered(&body.placed(), |v| *v = 0.0);
    }
    let res = depth.resolution;
    let half = WINDOW_SIZE as f64 / 2.0;
    let mut values = Vec::with_capacity(WINDOW_SIZE * WINDOW_SIZE);
    for v in 0..WINDOW_SIZE {
        for u in 0..WINDOW_SIZE {
            let local = Vec2::new((u as f64 + 0.5 - half) * res, (v as f64 + 0.5 - half) * res);
            let world = pushee.pose.transform_point(local);
            values.push((masked.sample_bilinear(world) / NORMALIZATION_HEIGHT).clamp(0.0, 1.0));
        }
    }
    LocalWindow { values, center: pushee.pose.position(), orientation: pushee.pose.theta }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

fn identity() -> Activation {
    Activation::Identity
}

fn default_eps() -> f64 {
    1e-3
}

/// One layer of a feed-forward encoder. Weight arrays are row-major in the
/// order given by `shape`: `[out, in, kh, kw]` for convolutions, `[out, in]`
/// for dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Conv2d {
        shape: [usize; 4],
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        #[serde(default = "identity")]
        activation: Activation,
    },
    BatchNorm {
        shape: [usize; 1],
        weights: Vec<f64>,
        bias: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "identity")]
        activation: Activation,
    },
    MaxPool {
        shape: [usize; 2],
        stride: usize,
    },
    AvgPool {
        shape: [usize; 2],
        stride: usize,
    },
    Dense {
        shape: [usize; 2],
        weights: Vec<f64>,
        bias: Vec<f64>,
        #[serde(default = "identity")]
        activation: Activation,
    },
}

fn one() -> usize {
    1
}

/// Encoder weight file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderSpec {
    #[default]
    BuiltinAvgpool,
    WeightFile(Network),
}

/// Activations flowing between layers: channels × height × width, or a flat
/// vector once a dense layer has run.
#[derive(Debug, Clone)]
struct Tensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Tensor {
    fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedEncoder(msg.into())
}

impl Network {
    pub fn from_json(s: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(s).map_err(|e| malformed(e.to_string()))?;
        net.output_dim()?;
        Ok(net)
    }

    /// Propagates shapes through the layers, checking every weight array.
    pub fn output_dim(&self) -> Result<usize> {
        let (mut c, mut h, mut w) = (1usize, WINDOW_SIZE, WINDOW_SIZE);
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Conv2d { shape: [o, ic, kh, kw], stride, padding, weights, bias, .. } => {
                    if *ic != c || *stride == 0 || weights.len() != o * ic * kh * kw || bias.len() != *o {
                        return Err(malformed(format!("layer {i}: conv2d dimension mismatch")));
                    }
                    let (ph, pw) = (h + 2 * padding, w + 2 * padding);
                    if *kh == 0 || *kw == 0 || *kh > ph || *kw > pw {
                        return Err(malformed(format!("layer {i}: kernel larger than input")));
                    }
                    c = *o;
                    h = (ph - kh) / stride + 1;
                    w = (pw - kw) / stride + 1;
                }
                Layer::BatchNorm { shape: [ch], weights, bias, running_mean, running_var, .. } => {
                    if *ch != c || [weights, bias, running_mean, running_var].iter().any(|v| v.len() != c) {
                        return Err(malformed(format!("layer {i}: batch_norm dimension mismatch")));
                    }
                }
                Layer::MaxPool { shape: [kh, kw], stride } | Layer::AvgPool { shape: [kh, kw], stride } => {
                    if *stride == 0 || *kh == 0 || *kw == 0 || *kh > h || *kw > w {
                        return Err(malformed(format!("layer {i}: invalid pooling window")));
                    }
                    h = (h - kh) / stride + 1;
                    w = (w - kw) / stride + 1;
                }
                Layer::Dense { shape: [o, inp], weights, bias, .. } => {
                    if *inp != c * h * w || weights.len() != o * inp || bias.len() != *o {
                        return Err(malformed(format!("layer {i}: dense dimension mismatch")));
                    }
                    c = *o;
                    h = 1;
                    w = 1;
                }
            }
        }
        Ok(c * h * w)
    }

    pub fn forward(&self, window: &LocalWindow) -> Vec<f64> {
        let mut t = Tensor { c: 1, h: WINDOW_SIZE, w: WINDOW_SIZE, data: window.values.clone() };
        for layer in &self.layers {
            t = match layer {
                Layer::Conv2d { shape: [o, ic, kh, kw], stride, padding, weights, bias, activation } => {
                    let (oh, ow) = ((t.h + 2 * padding - kh) / stride + 1, (t.w + 2 * padding - kw) / stride + 1);
                    let mut data = vec![0.0; o * oh * ow];
                    for oc in 0..*o {
                        for y in 0..oh {
                            for x in 0..ow {
                                let mut acc = bias[oc];
                                for c in 0..*ic {
                                    for ky in 0..*kh {
                                        let iy = (y * stride + ky) as i64 - *padding as i64;
                                        if iy < 0 || iy >= t.h as i64 {
                                            continue;
                                        }
                                        for kx in 0..*kw {
                                            let ix = (x * stride + kx) as i64 - *padding as i64;
                                            if ix < 0 || ix >= t.w as i64 {
                                                continue;
                                            }
                                            let wi = ((oc * ic + c) * kh + ky) * kw + kx;
                                            acc += weights[wi] * t.at(c, iy as usize, ix as usize);
                                        }
                                    }
                                }
                                data[(oc * oh + y) * ow + x] = activation.apply(acc);
                            }
                        }
                    }
                    Tensor { c: *o, h: oh, w: ow, data }
                }
                Layer::BatchNorm { weights, bias, running_mean, running_var, eps, activation, .. } => {
                    let plane = t.h * t.w;
                    let mut data = t.data;
                    for c in 0..t.c {
                        let scale = weights[c] / (running_var[c] + eps).sqrt();
                        for v in &mut data[c * plane..(c + 1) * plane] {
                            *v = activation.apply((*v - running_mean[c]) * scale + bias[c]);
                        }
                    }
                    Tensor { data, ..t }
                }
                Layer::MaxPool { shape: [kh, kw], stride } | Layer::AvgPool { shape: [kh, kw], stride } => {
                    let is_max = matches!(layer, Layer::MaxPool { .. });
                    let (oh, ow) = ((t.h - kh) / stride + 1, (t.w - kw) / stride + 1);
                    let mut data = Vec::with_capacity(t.c * oh * ow);
                    for c in 0..t.c {
                        for y in 0..oh {
                            for x in 0..ow {
                                let cells = (0..*kh)
                                    .flat_map(|ky| (0..*kw).map(move |kx| (ky, kx)))
                                    .map(|(ky, kx)| t.at(c, y * stride + ky, x * stride + kx));
                                data.push(if is_max {
                                    cells.fold(f64::NEG_INFINITY, f64::max)
                                } else {
                                    cells.sum::<f64>() / (kh * kw) as f64
                                });
                            }
                        }
                    }
                    Tensor { c: t.c, h: oh, w: ow, data }
                }
                Layer::Dense { shape: [o, inp], weights, bias, activation } => {
                    let data = (0..*o)
                        .map(|r| {
                            let row = &weights[r * inp..(r + 1) * inp];
                            activation.apply(bias[r] + row.iter().zip(&t.data).map(|(a, b)| a * b).sum::<f64>())
                        })
                        .collect();
                    Tensor { c: *o, h: 1, w: 1, data }
                }
            };
        }
        t.data
    }
}

impl EncoderSpec {
    pub fn validate(&self) -> Result<()> {
        if let EncoderSpec::WeightFile(net) = self {
            let dim = net.output_dim()?;
            if dim != LATENT_DIM {
                return Err(malformed(format!("encoder emits {dim} values, expected {LATENT_DIM}")));
            }
        }
        Ok(())
    }

    /// Loads a weight file (the bare layer list document).
    pub fn from_weight_file(text: &str) -> Result<Self> {
        let spec = EncoderSpec::WeightFile(Network::from_json(text)?);
        spec.validate()?;
        Ok(spec)
    }
}

/// Encodes a window into the 32-value latent. The builtin encoder averages
/// a 4 × 8 grid of 16-row × 8-column tiles, row-major.
pub fn encode_window(window: &LocalWindow, encoder: &EncoderSpec) -> Result<Vec<f64>> {
    match encoder {
        EncoderSpec::BuiltinAvgpool => {
            let (rows, cols) = (4, 8);
            let (th, tw) = (WINDOW_SIZE / rows, WINDOW_SIZE / cols);
            let mut out = Vec::with_capacity(LATENT_DIM);
            for tr in 0..rows {
                for tc in 0..cols {
                    let mut acc = 0.0;
                    for v in tr * th..(tr + 1) * th {
                        for u in tc * tw..(tc + 1) * tw {
                            acc += window.get(u, v);
                        }
                    }
                    out.push(acc / (th * tw) as f64);
                }
            }
            Ok(out)
        }
        EncoderSpec::WeightFile(net) => {
            encoder.validate()?;
            Ok(net.forward(window))
        }
    }
}
