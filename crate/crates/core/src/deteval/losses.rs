use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use crate::error::{Error, Result};
use crate::scene::BoundingBox;

/// Clamp applied before every logarithm.
pub const EPS: f64 = 1e-7;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    // Areas from the same corner arithmetic, so identical boxes give exactly 1.
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// `1 − IoU + d²/c²`: IoU loss plus normalized centre distance.
pub fn diou_loss(b: &BoundingBox, gt: &BoundingBox) -> f64 {
    let [x, y, w, h] = [b.x, b.y, b.w, b.h];
    let t = terms(x, y, w, h, gt);
    1.0 - t.iou + t.rho2 / t.c2
}

/// `−w (y ln x + (1 − y) ln(1 − x))`. Both log arguments are clamped below
/// at `ε`, so a perfect prediction costs exactly zero.
pub fn bce_loss(x: f64, y: f64, w: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let log = |v: f64| v.max(EPS).ln();
    -w * (y * log(x) + (1.0 - y) * log(1.0 - x))
}

/// `∂ bce / ∂x`; a term whose log argument is clamped contributes zero.
pub fn bce_grad(x: f64, y: f64, w: f64) -> f64 {
    let pos = if x > EPS { y / x } else { 0.0 };
    let neg = if 1.0 - x > EPS { (1.0 - y) / (1.0 - x) } else { 0.0 };
    -w * (pos - neg)
}

/// Distribution focal loss for target `y` between knots `y_i < y_ip1`.
pub fn dfl_loss(y: f64, y_i: f64, y_ip1: f64, p_i: f64, p_ip1: f64) -> Result<f64> {
    if !(y_ip1 > y_i) {
        return Err(Error::DegenerateInterval(y_i, y_ip1));
    }
    let span = y_ip1 - y_i;
    let w_left = ((y_ip1 - y) / span).clamp(0.0, 1.0);
    let w_right = ((y - y_i) / span).clamp(0.0, 1.0);
    let term = |w: f64, p: f64| if w == 0.0 { 0.0 } else { -w * p.clamp(EPS, 1.0).ln() };
    Ok(term(w_left, p_i) + term(w_right, p_ip1))
}

/// Task-aligned assignment score `p^λ r^μ`.
pub fn tal_score(p: f64, r: f64, lambda: f64, mu: f64) -> f64 {
    p.clamp(0.0, 1.0).powf(lambda) * r.clamp(0.0, 1.0).powf(mu)
}

/// Minimal real-number interface so the CIoU formula can run on plain floats
/// and on dual numbers for exact derivatives.
pub trait Real:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn lift(v: f64) -> Self;
    fn value(self) -> f64;
    fn atan(self) -> Self;
    fn min(self, o: Self) -> Self {
        if self <= o {
            self
        } else {
            o
        }
    }
    fn max(self, o: Self) -> Self {
        if self >= o {
            self
        } else {
            o
        }
    }
}

impl Real for f64 {
    fn lift(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
}

/// Forward-mode dual number `v + d ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl PartialOrd for Dual {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        self.v.partial_cmp(&o.v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
}

impl Real for Dual {
    fn lift(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn atan(self) -> Self {
        Dual { v: self.v.atan(), d: self.d / (1.0 + self.v * self.v) }
    }
}

struct Terms<T> {
    iou: T,
    rho2: T,
    c2: T,
    v: T,
}

fn terms<T: Real>(x: T, y: T, w: T, h: T, gt: &BoundingBox) -> Terms<T> {
    let two = T::lift(2.0);
    let (gx, gy, gw, gh) = (T::lift(gt.x), T::lift(gt.y), T::lift(gt.w), T::lift(gt.h));
    let (ax0, ay0, ax1, ay1) = (x - w / two, y - h / two, x + w / two, y + h / two);
    let (bx0, by0, bx1, by1) = (gx - gw / two, gy - gh / two, gx + gw / two, gy + gh / two);
    let zero = T::lift(0.0);
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(zero);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(zero);
    let inter = iw * ih;
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    let iou = inter / union;
    let cw = ax1.max(bx1) - ax0.min(bx0);
    let ch = ay1.max(by1) - ay0.min(by0);
    let c2 = cw * cw + ch * ch;
    let rho2 = (x - gx) * (x - gx) + (y - gy) * (y - gy);
    let da = (gw / gh).atan() - (w / h).atan();
    let v = T::lift(4.0 / (PI * PI)) * da * da;
    Terms { iou, rho2, c2, v }
}

fn ciou_generic<T: Real>(x: T, y: T, w: T, h: T, gt: &BoundingBox) -> T {
    let t = terms(x, y, w, h, gt);
    let one = T::lift(1.0);
    let denom = (one - t.iou) + t.v;
    let av = if denom.value() > 0.0 { t.v / denom * t.v } else { T::lift(0.0) };
    one - t.iou + t.rho2 / t.c2 + av
}

/// Complete-IoU loss `1 − IoU + d²/c² + α v`.
pub fn ciou_loss(b: &BoundingBox, gt: &BoundingBox) -> f64 {
    ciou_generic(b.x, b.y, b.w, b.h, gt)
}

/// Gradient of [`ciou_loss`] with respect to `(x, y, w, h)` of `b`.
pub fn ciou_grad(b: &BoundingBox, gt: &BoundingBox) -> [f64; 4] {
    let base = [b.x, b.y, b.w, b.h];
    let mut g = [0.0; 4];
    for (k, out) in g.iter_mut().enumerate() {
        let v: Vec<Dual> = (0..4).map(|i| Dual { v: base[i], d: if i == k { 1.0 } else { 0.0 } }).collect();
        *out = ciou_generic(v[0], v[1], v[2], v[3], gt).d;
    }
    g
}
