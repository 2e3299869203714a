//! Dense Lucas-Kanade optical flow, written once against [`ScalarFormat`].
//!
//! Spatial gradients are central differences on the first frame (one-sided
//! on the border), the temporal gradient is the frame difference. Each pixel
//! with a full `(2w+1)²` window solves its 2×2 normal equations by Cramer's
//! rule; window sums run in row-major order so every format sees the same
//! operation sequence.

use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::ScalarFormat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("frame data has {actual} samples, expected {width}x{height}")]
    DataLength {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("frame dimensions must be nonzero")]
    Empty,
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("flow needs frames of at least 3x3, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("normalization factor must be in 1..=255")]
    BadNorm,
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::Empty);
        }
        if width.checked_mul(height) != Some(data.len()) {
            return Err(FlowError::DataLength {
                width,
                height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, FlowError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, FlowError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Swaps the x and y axes.
    pub fn transpose(&self) -> Frame {
        Frame::from_fn(self.height, self.width, |x, y| self.get(y, x)).expect("same size")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlowStatus {
    Ok,
    Singular,
    Exception,
}

impl FlowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowStatus::Ok => "ok",
            FlowStatus::Singular => "singular",
            FlowStatus::Exception => "exception",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(FlowStatus::Ok),
            "singular" => Some(FlowStatus::Singular),
            "exception" => Some(FlowStatus::Exception),
            _ => None,
        }
    }
}

/// Per-pixel `Ix`, `Iy`, `It` in one format.
#[derive(Clone, Debug)]
pub struct Gradients<V> {
    pub width: usize,
    pub height: usize,
    pub ix: Vec<V>,
    pub iy: Vec<V>,
    pub it: Vec<V>,
}

impl<V: Copy> Gradients<V> {
    pub fn at(&self, x: usize, y: usize) -> (V, V, V) {
        let i = y * self.width + x;
        (self.ix[i], self.iy[i], self.it[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField<V> {
    pub width: usize,
    pub height: usize,
    pub u: Vec<V>,
    pub v: Vec<V>,
    pub status: Vec<FlowStatus>,
}

impl<V: Copy> FlowField<V> {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn count(&self, status: FlowStatus) -> usize {
        self.status.iter().filter(|s| **s == status).count()
    }

    pub fn map<W>(&self, f: impl Fn(V) -> W) -> FlowField<W> {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|a| f(*a)).collect(),
            v: self.v.iter().map(|a| f(*a)).collect(),
            status: self.status.clone(),
        }
    }

    /// Converts every component to binary64.
    pub fn to_reference<F: ScalarFormat<Value = V>>(&self, fmt: &F) -> FlowField<f64> {
        self.map(|a| fmt.to_reference(a))
    }
}

/// Kernel parameters shared by every format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub norm: u8,
    pub window: usize,
    /// Singularity threshold, rounded into the run's format.
    pub tau: f64,
}

impl FlowParams {
    pub const DEFAULT_WINDOW: usize = 2;

    pub fn new(norm: u8) -> Self {
        Self {
            norm,
            window: Self::DEFAULT_WINDOW,
            tau: crate::scalar::FormatSpec::DEFAULT_TAU,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

fn check_pair(f1: &Frame, f2: &Frame, norm: u8) -> Result<(), FlowError> {
    if f1.width != f2.width || f1.height != f2.height {
        return Err(FlowError::DimensionMismatch(
            f1.width, f1.height, f2.width, f2.height,
        ));
    }
    if f1.width < 3 || f1.height < 3 {
        return Err(FlowError::TooSmall(f1.width, f1.height));
    }
    if norm == 0 {
        return Err(FlowError::BadNorm);
    }
    Ok(())
}

// d/dx of a line of normalized samples at index i
fn difference<F: ScalarFormat>(fmt: &F, two: F::Value, line: &[F::Value], i: usize) -> F::Value {
    let last = line.len() - 1;
    if i == 0 {
        fmt.sub(line[1], line[0])
    } else if i == last {
        fmt.sub(line[last], line[last - 1])
    } else {
        fmt.div(fmt.sub(line[i + 1], line[i - 1]), two)
    }
}

/// Gradients of a frame pair after normalizing every pixel by `norm`.
pub fn gradients<F: ScalarFormat>(
    fmt: &F,
    f1: &Frame,
    f2: &Frame,
    norm: u8,
) -> Result<Gradients<F::Value>, FlowError> {
    check_pair(f1, f2, norm)?;
    let (w, h) = (f1.width, f1.height);
    let n1: Vec<F::Value> = f1.data.iter().map(|p| fmt.from_norm_quotient(*p, norm)).collect();
    let n2: Vec<F::Value> = f2.data.iter().map(|p| fmt.from_norm_quotient(*p, norm)).collect();
    let two = fmt.from_pixel(2);

    let mut ix = Vec::with_capacity(w * h);
    for row in n1.chunks(w) {
        for x in 0..w {
            ix.push(difference(fmt, two, row, x));
        }
    }
    let mut iy = vec![fmt.zero(); w * h];
    let mut column = Vec::with_capacity(h);
    for x in 0..w {
        column.clear();
        column.extend((0..h).map(|y| n1[y * w + x]));
        for y in 0..h {
            iy[y * w + x] = difference(fmt, two, &column, y);
        }
    }
    let it = n2.iter().zip(&n1).map(|(b, a)| fmt.sub(*b, *a)).collect();
    Ok(Gradients {
        width: w,
        height: h,
        ix,
        iy,
        it,
    })
}

/// The five per-pixel products summed over a window.
#[derive(Clone, Copy, Debug)]
struct Products<V> {
    xx: V,
    xy: V,
    yy: V,
    xt: V,
    yt: V,
}

fn products<F: ScalarFormat>(fmt: &F, g: &Gradients<F::Value>) -> Vec<Products<F::Value>> {
    (0..g.ix.len())
        .map(|i| {
            let (ix, iy, it) = (g.ix[i], g.iy[i], g.it[i]);
            Products {
                xx: fmt.mul(ix, ix),
                xy: fmt.mul(ix, iy),
                yy: fmt.mul(iy, iy),
                xt: fmt.mul(ix, it),
                yt: fmt.mul(iy, it),
            }
        })
        .collect()
}

fn has_window(width: usize, height: usize, x: usize, y: usize, w: usize) -> bool {
    x >= w && y >= w && x + w < width && y + w < height
}

fn solve_products<F: ScalarFormat>(
    fmt: &F,
    p: &[Products<F::Value>],
    width: usize,
    x: usize,
    y: usize,
    w: usize,
    tau: F::Value,
) -> (F::Value, F::Value, FlowStatus) {
    let mut s = p[(y - w) * width + (x - w)];
    let mut first = true;
    for yy in y - w..=y + w {
        for xx in x - w..=x + w {
            if first {
                first = false;
                continue;
            }
            let q = &p[yy * width + xx];
            s.xx = fmt.add(s.xx, q.xx);
            s.xy = fmt.add(s.xy, q.xy);
            s.yy = fmt.add(s.yy, q.yy);
            s.xt = fmt.add(s.xt, q.xt);
            s.yt = fmt.add(s.yt, q.yt);
        }
    }
    cramer(fmt, s, tau)
}

fn cramer<F: ScalarFormat>(
    fmt: &F,
    s: Products<F::Value>,
    tau: F::Value,
) -> (F::Value, F::Value, FlowStatus) {
    let zero = fmt.zero();
    let det = fmt.sub(fmt.mul(s.xx, s.yy), fmt.mul(s.xy, s.xy));
    if fmt.is_exception(det) {
        return (zero, zero, FlowStatus::Exception);
    }
    if fmt.compare(fmt.abs(det), tau) != Some(std::cmp::Ordering::Greater) {
        return (zero, zero, FlowStatus::Singular);
    }
    let u = fmt.div(fmt.sub(fmt.mul(s.xy, s.yt), fmt.mul(s.yy, s.xt)), det);
    let v = fmt.div(fmt.sub(fmt.mul(s.xy, s.xt), fmt.mul(s.xx, s.yt)), det);
    let status = if fmt.is_exception(u) || fmt.is_exception(v) {
        FlowStatus::Exception
    } else {
        FlowStatus::Ok
    };
    (u, v, status)
}

/// Solves the window of radius `w` centred on `(x, y)`. Pixels without a
/// full window are reported singular.
pub fn solve_window<F: ScalarFormat>(
    fmt: &F,
    g: &Gradients<F::Value>,
    x: usize,
    y: usize,
    w: usize,
    tau: f64,
) -> (F::Value, F::Value, FlowStatus) {
    let zero = fmt.zero();
    if !has_window(g.width, g.height, x, y, w) {
        return (zero, zero, FlowStatus::Singular);
    }
    let mut s: Option<Products<F::Value>> = None;
    for yy in y - w..=y + w {
        for xx in x - w..=x + w {
            let (ix, iy, it) = g.at(xx, yy);
            let q = Products {
                xx: fmt.mul(ix, ix),
                xy: fmt.mul(ix, iy),
                yy: fmt.mul(iy, iy),
                xt: fmt.mul(ix, it),
                yt: fmt.mul(iy, it),
            };
            s = Some(match s {
                None => q,
                Some(a) => Products {
                    xx: fmt.add(a.xx, q.xx),
                    xy: fmt.add(a.xy, q.xy),
                    yy: fmt.add(a.yy, q.yy),
                    xt: fmt.add(a.xt, q.xt),
                    yt: fmt.add(a.yt, q.yt),
                },
            });
        }
    }
    cramer(fmt, s.expect("nonempty window"), fmt.from_f64(tau))
}

fn empty_field<V: Copy>(width: usize, height: usize, zero: V) -> FlowField<V> {
    FlowField {
        width,
        height,
        u: vec![zero; width * height],
        v: vec![zero; width * height],
        status: vec![FlowStatus::Singular; width * height],
    }
}

/// Single-threaded flow. Works with formats that are not `Sync`, such as a
/// tapped reference.
pub fn flow_sequential<F: ScalarFormat>(
    fmt: &F,
    f1: &Frame,
    f2: &Frame,
    params: FlowParams,
) -> Result<FlowField<F::Value>, FlowError> {
    let g = gradients(fmt, f1, f2, params.norm)?;
    let (width, height, w) = (g.width, g.height, params.window);
    let mut field = empty_field(width, height, fmt.zero());
    if width < 2 * w + 1 || height < 2 * w + 1 {
        return Ok(field);
    }
    let p = products(fmt, &g);
    let tau = fmt.from_f64(params.tau);
    for y in w..height - w {
        for x in w..width - w {
            let (u, v, s) = solve_products(fmt, &p, width, x, y, w, tau);
            let i = y * width + x;
            field.u[i] = u;
            field.v[i] = v;
            field.status[i] = s;
        }
    }
    Ok(field)
}

/// Row-parallel flow; output is identical to [`flow_sequential`].
type Solution<V> = (V, V, FlowStatus);

pub fn flow<F: ScalarFormat + Sync>(
    fmt: &F,
    f1: &Frame,
    f2: &Frame,
    params: FlowParams,
) -> Result<FlowField<F::Value>, FlowError> {
    check_pair(f1, f2, params.norm)?;
    let (width, height, w) = (f1.width, f1.height, params.window);
    if width < 2 * w + 1 || height < 2 * w + 1 {
        return Ok(empty_field(width, height, fmt.zero()));
    }
    let g = gradients(fmt, f1, f2, params.norm)?;
    let p = products(fmt, &g);
    let tau = fmt.from_f64(params.tau);
    let zero = fmt.zero();
    let rows: Vec<Vec<Solution<F::Value>>> = (0..height)
        .into_par_iter()
        .map(|y| {
            (0..width)
                .map(|x| {
                    if has_window(width, height, x, y, w) {
                        solve_products(fmt, &p, width, x, y, w, tau)
                    } else {
                        (zero, zero, FlowStatus::Singular)
                    }
                })
                .collect()
        })
        .collect();
    let mut field = empty_field(width, height, zero);
    for (i, (u, v, s)) in rows.into_iter().flatten().enumerate() {
        field.u[i] = u;
        field.v[i] = v;
        field.status[i] = s;
    }
    Ok(field)
}
