//! Analytic shapes and their rasterization.
//!
//! Shape-spec grammar: `disk:r[@cx,cy]`, `square:s[@cx,cy]`,
//! `ellipse:a,b[@cx,cy]`, `lshape:w,h,notch[@cx,cy]`,
//! `polygon:x,y;x,y;...` and `union(spec;spec;...)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Grid, Point, Region};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    Square { center: Point, side: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    /// `w x h` rectangle with the top-right `notch x notch` corner removed.
    LShape { center: Point, w: f64, h: f64, notch: f64 },
    Polygon(Vec<Point>),
    Union(Vec<Shape>),
}

impl Shape {
    pub fn disk(radius: f64) -> Self {
        Shape::Disk { center: [0.0, 0.0], radius }
    }

    pub fn disk_at(center: Point, radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn square(side: f64) -> Self {
        Shape::Square { center: [0.0, 0.0], side }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Shape::Ellipse { center: [0.0, 0.0], a, b }
    }

    pub fn lshape(w: f64, h: f64, notch: f64) -> Self {
        Shape::LShape { center: [0.0, 0.0], w, h, notch }
    }

    /// Polygon vertices for the piecewise linear shapes.
    fn vertices(&self) -> Option<Vec<Point>> {
        match self {
            Shape::Square { center: c, side } => {
                let s = side / 2.0;
                Some(vec![
                    [c[0] - s, c[1] - s],
                    [c[0] + s, c[1] - s],
                    [c[0] + s, c[1] + s],
                    [c[0] - s, c[1] + s],
                ])
            }
            Shape::LShape { center: c, w, h, notch } => {
                let (x0, x1) = (c[0] - w / 2.0, c[0] + w / 2.0);
                let (y0, y1) = (c[1] - h / 2.0, c[1] + h / 2.0);
                Some(vec![
                    [x0, y0],
                    [x1, y0],
                    [x1, y1 - notch],
                    [x1 - notch, y1 - notch],
                    [x1 - notch, y1],
                    [x0, y1],
                ])
            }
            Shape::Polygon(v) => Some(v.clone()),
            _ => None,
        }
    }

    /// Signed distance, negative inside. Exact for disks and polygons; the
    /// ellipse uses a first-order normalized implicit function and unions take
    /// the pointwise minimum, so both are exact only on the zero level.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) - radius,
            Shape::Ellipse { center, a, b } => {
                let x = p[0] - center[0];
                let y = p[1] - center[1];
                let f = (x / a).powi(2) + (y / b).powi(2) - 1.0;
                let gx = 2.0 * x / (a * a);
                let gy = 2.0 * y / (b * b);
                let g = gx.hypot(gy);
                if g < 1e-12 {
                    -a.min(*b)
                } else {
                    // keep the sign and bound the magnitude by the inscribed distance
                    let d = f / g;
                    if f < 0.0 {
                        d.max(-a.min(*b))
                    } else {
                        d
                    }
                }
            }
            Shape::Union(parts) => parts
                .iter()
                .map(|s| s.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
            _ => polygon_signed_distance(&self.vertices().expect("polygonal shape"), p),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Point, Point) {
        match self {
            Shape::Disk { center: c, radius: r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            Shape::Ellipse { center: c, a, b } => ([c[0] - a, c[1] - b], [c[0] + a, c[1] + b]),
            Shape::Union(parts) => parts.iter().map(Shape::bbox).fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), (l, h)| ([lo[0].min(l[0]), lo[1].min(l[1])], [hi[0].max(h[0]), hi[1].max(h[1])]),
            ),
            _ => {
                let v = self.vertices().expect("polygonal shape");
                v.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
                    ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
                })
            }
        }
    }

    /// Exact area for the primitives; unions report the sum of parts (an upper
    /// bound, used only for degeneracy checks).
    pub fn area(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Ellipse { a, b, .. } => std::f64::consts::PI * a * b,
            Shape::Union(parts) => parts.iter().map(Shape::area).sum(),
            _ => polygon_area(&self.vertices().expect("polygonal shape")).abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::DegenerateShape(format!("{name} = {v} must be positive")))
            }
        };
        match self {
            Shape::Disk { radius, .. } => positive("radius", *radius),
            Shape::Square { side, .. } => positive("side", *side),
            Shape::Ellipse { a, b, .. } => positive("a", *a).and(positive("b", *b)),
            Shape::LShape { w, h, notch, .. } => {
                positive("w", *w)?;
                positive("h", *h)?;
                positive("notch", *notch)?;
                if *notch >= w.min(*h) {
                    return Err(Error::DegenerateShape("notch must be smaller than both sides".into()));
                }
                Ok(())
            }
            Shape::Polygon(v) => {
                if v.len() < 3 || polygon_area(v).abs() < 1e-12 {
                    Err(Error::DegenerateShape("polygon has zero area".into()))
                } else {
                    Ok(())
                }
            }
            Shape::Union(parts) => {
                if parts.is_empty() {
                    return Err(Error::DegenerateShape("empty union".into()));
                }
                parts.iter().try_for_each(Shape::validate)
            }
        }
    }

    fn with_center(self, c: Point) -> Result<Self> {
        Ok(match self {
            Shape::Disk { radius, .. } => Shape::Disk { center: c, radius },
            Shape::Square { side, .. } => Shape::Square { center: c, side },
            Shape::Ellipse { a, b, .. } => Shape::Ellipse { center: c, a, b },
            Shape::LShape { w, h, notch, .. } => Shape::LShape { center: c, w, h, notch },
            _ => return Err(Error::Parse("`@cx,cy` is not allowed on polygons or unions".into())),
        })
    }
}

/// Rasterizes a shape: the mask holds the cells whose centers lie inside.
pub fn rasterize(shape: &Shape, grid: &Grid) -> Result<Region> {
    shape.validate()?;
    let (lo, hi) = shape.bbox();
    let r = grid.half_width();
    if lo[0] <= -r || lo[1] <= -r || hi[0] >= r || hi[1] >= r {
        return Err(Error::ShapeOutsideBox { half_width: r });
    }
    let phi = (0..grid.len()).map(|k| shape.signed_distance(grid.point(k))).collect();
    Region::from_level_set(*grid, phi)
}

pub(crate) fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Signed distance to a simple closed polygon (even-odd inside test).
pub(crate) fn polygon_signed_distance(v: &[Point], p: Point) -> f64 {
    let n = v.len();
    let mut d = f64::INFINITY;
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        d = d.min(segment_distance(p, a, b));
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        -d
    } else {
        d
    }
}

fn parse_numbers(s: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{what}: {e}")))?;
    if nums.len() != expected {
        return Err(Error::Parse(format!("{what}: expected {expected} numbers, got {}", nums.len())));
    }
    Ok(nums)
}

/// Splits on `;` at parenthesis depth zero.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("union(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top_level(inner)
                .into_iter()
                .map(str::parse)
                .collect::<Result<Vec<Shape>>>()?;
            return Ok(Shape::Union(parts));
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("shape `{s}` lacks `kind:`")))?;
        if kind == "polygon" {
            let pts = args
                .split(';')
                .map(|pt| parse_numbers(pt, 2, "polygon vertex").map(|v| [v[0], v[1]]))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Shape::Polygon(pts));
        }
        let (args, center) = match args.split_once('@') {
            Some((a, c)) => {
                let c = parse_numbers(c, 2, "center")?;
                (a, Some([c[0], c[1]]))
            }
            None => (args, None),
        };
        let shape = match kind {
            "disk" => Shape::disk(parse_numbers(args, 1, "disk")?[0]),
            "square" => Shape::square(parse_numbers(args, 1, "square")?[0]),
            "ellipse" => {
                let v = parse_numbers(args, 2, "ellipse")?;
                Shape::ellipse(v[0], v[1])
            }
            "lshape" => {
                let v = parse_numbers(args, 3, "lshape")?;
                Shape::lshape(v[0], v[1], v[2])
            }
            other => return Err(Error::Parse(format!("unknown shape kind `{other}`"))),
        };
        let shape = match center {
            Some(c) => shape.with_center(c)?,
            None => shape,
        };
        shape.validate()?;
        Ok(shape)
    }
}

impl TryFrom<String> for Shape {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Shape> for String {
    fn from(s: Shape) -> String {
        s.to_string()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>, c: &Point| {
            if c[0] != 0.0 || c[1] != 0.0 {
                write!(f, "@{},{}", c[0], c[1])
            } else {
                Ok(())
            }
        };
        match self {
            Shape::Disk { center, radius } => {
                write!(f, "disk:{radius}")?;
                at(f, center)
            }
            Shape::Square { center, side } => {
                write!(f, "square:{side}")?;
                at(f, center)
            }
            Shape::Ellipse { center, a, b } => {
                write!(f, "ellipse:{a},{b}")?;
                at(f, center)
            }
            Shape::LShape { center, w, h, notch } => {
                write!(f, "lshape:{w},{h},{notch}")?;
                at(f, center)
            }
            Shape::Polygon(v) => {
                write!(f, "polygon:")?;
                for (i, p) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{},{}", p[0], p[1])?;
                }
                Ok(())
            }
            Shape::Union(parts) => {
                write!(f, "union(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_grammar() {
        assert_eq!("disk:1".parse::<Shape>().unwrap(), Shape::disk(1.0));
        assert_eq!(
            "disk:1.5@0.3,-0.2".parse::<Shape>().unwrap(),
            Shape::Disk { center: [0.3, -0.2], radius: 1.5 }
        );
        assert_eq!("lshape:2,2,1".parse::<Shape>().unwrap(), Shape::lshape(2.0, 2.0, 1.0));
        let u: Shape = "union(square:1@-1,0;square:1@1,0)".parse().unwrap();
        match &u {
            Shape::Union(p) => assert_eq!(p.len(), 2),
            _ => panic!(),
        }
        let nested: Shape = "union(disk:1;union(disk:0.5@1,1;ellipse:1,0.5))".parse().unwrap();
        assert_eq!(nested.to_string().parse::<Shape>().unwrap(), nested);
        assert!("blob:1".parse::<Shape>().is_err());
        assert!("disk:-1".parse::<Shape>().is_err());
        assert!("lshape:2,2,3".parse::<Shape>().is_err());
    }

    #[test]
    fn lshape_area_is_three() {
        let l = Shape::lshape(2.0, 2.0, 1.0);
        assert!((l.area() - 3.0).abs() < 1e-12);
        assert!(l.signed_distance([0.75, 0.75]) > 0.0);
        assert!(l.signed_distance([-0.5, -0.5]) < 0.0);
    }

    #[test]
    fn rasterize_rejects_bad_shapes() {
        let g = Grid::new(64, 2.0).unwrap();
        assert!(matches!(rasterize(&Shape::disk(2.5), &g), Err(Error::ShapeOutsideBox { .. })));
        assert!(matches!(
            rasterize(&Shape::Polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), &g),
            Err(Error::DegenerateShape(_))
        ));
    }
}
