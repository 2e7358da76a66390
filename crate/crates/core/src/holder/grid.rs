use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance (in units of `h`) under which a point is treated as a node.
pub const SNAP: f64 = 1e-9;

type Sampler = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Values of a function outside its grid span.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Exterior {
    Zero,
    Constant {
        value: f64,
    },
    /// `0` for `|x| < onset`, `amplitude · sign sin(mπx)` beyond.
    SignSin {
        m: f64,
        onset: f64,
        amplitude: f64,
    },
    /// Arbitrary rule with a known bound on `|g|`; not serializable.
    #[serde(skip)]
    Custom {
        sampler: Sampler,
        bound: f64,
    },
}

impl fmt::Debug for Exterior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exterior::Zero => write!(f, "Zero"),
            Exterior::Constant { value } => write!(f, "Constant({value})"),
            Exterior::SignSin {
                m,
                onset,
                amplitude,
            } => write!(f, "SignSin(m={m}, onset={onset}, amplitude={amplitude})"),
            Exterior::Custom { bound, .. } => write!(f, "Custom(bound={bound})"),
        }
    }
}

/// `sign sin(πt)` computed from the parity of `⌊t⌋`, exact at the zeros.
pub fn sign_sin_pi(t: f64) -> f64 {
    let k = t.floor();
    if t == k {
        0.0
    } else if k.rem_euclid(2.0) == 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl Exterior {
    pub fn custom(bound: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Exterior::Custom {
            sampler: Arc::new(f),
            bound,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Exterior::Zero => 0.0,
            Exterior::Constant { value } => *value,
            Exterior::SignSin {
                m,
                onset,
                amplitude,
            } => {
                if x.abs() < *onset {
                    0.0
                } else {
                    amplitude * sign_sin_pi(m * x)
                }
            }
            Exterior::Custom { sampler, .. } => sampler(x),
        }
    }

    /// Upper bound for `|g|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            Exterior::Zero => 0.0,
            Exterior::Constant { value } => value.abs(),
            Exterior::SignSin { amplitude, .. } => amplitude.abs(),
            Exterior::Custom { bound, .. } => *bound,
        }
    }

    pub fn is_serializable(&self) -> bool {
        !matches!(self, Exterior::Custom { .. })
    }

    /// `a·self + b·other`, kept in closed form when possible.
    pub fn combine(a: f64, e1: &Exterior, b: f64, e2: &Exterior) -> Exterior {
        match (e1, e2) {
            (Exterior::Zero, Exterior::Zero) => Exterior::Zero,
            (Exterior::Constant { value: v1 }, Exterior::Constant { value: v2 }) => {
                Exterior::Constant {
                    value: a * v1 + b * v2,
                }
            }
            (Exterior::Zero, Exterior::Constant { value }) => Exterior::Constant { value: b * value },
            (Exterior::Constant { value }, Exterior::Zero) => Exterior::Constant { value: a * value },
            (Exterior::Zero, Exterior::SignSin { m, onset, amplitude }) if b != 0.0 => Exterior::SignSin {
                m: *m,
                onset: *onset,
                amplitude: b * amplitude,
            },
            (Exterior::SignSin { m, onset, amplitude }, Exterior::Zero) if a != 0.0 => Exterior::SignSin {
                m: *m,
                onset: *onset,
                amplitude: a * amplitude,
            },
            _ => {
                let (f1, f2) = (e1.clone(), e2.clone());
                let bound = a.abs() * e1.sup_abs() + b.abs() * e2.sup_abs();
                Exterior::custom(bound, move |x| a * f1.eval(x) + b * f2.eval(x))
            }
        }
    }
}

/// Samples of `u` on the uniform grid `x_i = x0 + i h`, `i = 0..n`, together
/// with the exterior rule that defines `u` off the grid span.
#[derive(Clone, Debug)]
pub struct GridFunction {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    exterior: Exterior,
}

#[derive(Serialize, Deserialize)]
struct Header {
    x0: f64,
    h: f64,
    n: usize,
    exterior: Exterior,
}

impl GridFunction {
    pub fn new(x0: f64, h: f64, values: Vec<f64>, exterior: Exterior) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && x0.is_finite()) {
            return Err(Error::grid(format!("invalid grid x0 = {x0}, h = {h}")));
        }
        if values.len() < 3 {
            return Err(Error::grid(format!("need at least 3 nodes, got {}", values.len())));
        }
        Ok(GridFunction {
            x0,
            h,
            values,
            exterior,
        })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(
        x0: f64,
        h: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
        exterior: Exterior,
    ) -> Result<Self> {
        let values = (0..n).map(|i| f(x0 + i as f64 * h)).collect();
        GridFunction::new(x0, h, values, exterior)
    }

    /// Grid covering `[a, b]` with spacing `h` (the endpoints must be nodes).
    pub fn on_interval(
        a: f64,
        b: f64,
        h: f64,
        f: impl Fn(f64) -> f64,
        exterior: Exterior,
    ) -> Result<Self> {
        let steps = (b - a) / h;
        let n = steps.round();
        if (steps - n).abs() > SNAP * n.max(1.0) {
            return Err(Error::grid(format!("[{a}, {b}] is not a whole number of steps {h}")));
        }
        GridFunction::from_fn(a, h, n as usize + 1, f, exterior)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }
    pub fn x_end(&self) -> f64 {
        self.x(self.len() - 1)
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn exterior(&self) -> &Exterior {
        &self.exterior
    }
    pub fn with_exterior(mut self, exterior: Exterior) -> Self {
        self.exterior = exterior;
        self
    }

    /// Fractional node position of `x`.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.x0) / self.h
    }

    /// Node index of `x` if it lies on a node.
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let t = self.position(x);
        let k = t.round();
        if (t - k).abs() <= SNAP && k >= 0.0 && (k as usize) < self.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn in_span(&self, x: f64) -> bool {
        let t = self.position(x);
        t >= -SNAP && t <= (self.len() - 1) as f64 + SNAP
    }

    /// `u(x)`: cubic interpolation on the span, the exterior rule off it.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.position(x);
        let n = self.len();
        let last = (n - 1) as f64;
        if !(t >= -SNAP && t <= last + SNAP) {
            return self.exterior.eval(x);
        }
        let k = t.round();
        if (t - k).abs() <= SNAP {
            return self.values[k.clamp(0.0, last) as usize];
        }
        let i = t.floor() as isize;
        if n < 4 {
            let i = i.clamp(0, n as isize - 2) as usize;
            let s = t - i as f64;
            return self.values[i] * (1.0 - s) + self.values[i + 1] * s;
        }
        let start = (i - 1).clamp(0, n as isize - 4) as usize;
        let s = t - start as f64;
        let v = &self.values[start..start + 4];
        // Lagrange weights for nodes 0, 1, 2, 3
        let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
        -v[0] * b * c * d / 6.0 + v[1] * a * c * d / 2.0 - v[2] * a * b * d / 2.0
            + v[3] * a * b * c / 6.0
    }

    /// Indices of nodes belonging to the closed window `[a, b]`.
    pub fn window_range(&self, a: f64, b: f64) -> Result<std::ops::Range<usize>> {
        if !(a <= b) {
            return Err(Error::grid(format!("empty window [{a}, {b}]")));
        }
        let lo = (self.position(a) - 0.5).ceil().max(0.0);
        let hi = (self.position(b) + 0.5).ceil().min(self.len() as f64);
        let span_ok = self.position(a) >= -0.5 && self.position(b) <= (self.len() - 1) as f64 + 0.5;
        if !span_ok || lo >= hi {
            return Err(Error::grid(format!(
                "window [{a}, {b}] is not inside the grid span [{}, {}]",
                self.x0,
                self.x_end()
            )));
        }
        Ok(lo as usize..hi as usize)
    }

    /// The nodes in `[a, b]` as a new grid function with the same exterior.
    pub fn restrict(&self, a: f64, b: f64) -> Result<GridFunction> {
        let r = self.window_range(a, b)?;
        GridFunction::new(
            self.x(r.start),
            self.h,
            self.values[r].to_vec(),
            self.exterior.clone(),
        )
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.x0 == other.x0 && self.h == other.h && self.len() == other.len()
    }

    /// `a·self + b·other` on an identical grid.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::grid("grid mismatch"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        GridFunction::new(
            self.x0,
            self.h,
            values,
            Exterior::combine(a, &self.exterior, b, &other.exterior),
        )
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.exterior = Exterior::combine(c, &self.exterior, 0.0, &Exterior::Zero);
        out
    }

    pub fn neg(&self) -> GridFunction {
        self.scale(-1.0)
    }

    /// `x ↦ u(x - w)`; the grid moves with the function.
    pub fn translate(&self, w: f64) -> GridFunction {
        let mut out = self.clone();
        out.x0 += w;
        let ext = self.exterior.clone();
        out.exterior = match ext {
            Exterior::Zero | Exterior::Constant { .. } => ext,
            e => {
                let bound = e.sup_abs();
                Exterior::custom(bound, move |x| e.eval(x - w))
            }
        };
        out
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if !self.exterior.is_serializable() {
            return Err(Error::invalid("custom exteriors cannot be serialized"));
        }
        let header = Header {
            x0: self.x0,
            h: self.h,
            n: self.len(),
            exterior: self.exterior.clone(),
        };
        let json = serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "# {json}")?;
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.x(i), v)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<GridFunction> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))??;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
        let header: Header =
            serde_json::from_str(json.trim()).map_err(|e| Error::Parse(format!("header: {e}")))?;
        let mut values = Vec::with_capacity(header.n);
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "x,value" {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {v:?}: {e}")))?,
            );
        }
        if values.len() != header.n {
            return Err(Error::Parse(format!(
                "header says {} rows, found {}",
                header.n,
                values.len()
            )));
        }
        GridFunction::new(header.x0, header.h, values, header.exterior)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<GridFunction> {
        let f = std::fs::File::open(path)?;
        GridFunction::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let u = GridFunction::on_interval(-1.0, 1.0, 0.1, |x| x * x * x - x, Exterior::Zero).unwrap();
        for &x in &[-0.97, -0.33, 0.01, 0.55, 0.999] {
            assert!((u.eval(x) - (x * x * x - x)).abs() < 1e-12);
        }
        assert_eq!(u.eval(1.5), 0.0);
    }

    #[test]
    fn sign_sin_is_exact_at_zeros() {
        assert_eq!(sign_sin_pi(3.0), 0.0);
        assert_eq!(sign_sin_pi(2.5), 1.0);
        assert_eq!(sign_sin_pi(-0.5), -1.0);
        let e = Exterior::SignSin {
            m: 4.0,
            onset: 2.0,
            amplitude: 1.0,
        };
        assert_eq!(e.eval(1.9), 0.0);
        assert_eq!(e.eval(2.1), 1.0);
    }

    #[test]
    fn window_membership() {
        let u = GridFunction::on_interval(0.0, 1.0, 0.25, |x| x, Exterior::Zero).unwrap();
        assert_eq!(u.window_range(0.25, 0.75).unwrap(), 1..4);
        assert_eq!(u.window_range(0.2, 0.8).unwrap(), 1..4);
        assert!(u.window_range(-1.0, 0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let u = GridFunction::from_fn(
            -0.3,
            1.0 / 3.0,
            7,
            |x| (x * 7.1).sin() / 3.0,
            Exterior::SignSin {
                m: 3.0,
                onset: 2.0,
                amplitude: 1.0,
            },
        )
        .unwrap();
        let s = u.to_csv_string().unwrap();
        let v = GridFunction::read_csv(s.as_bytes()).unwrap();
        assert_eq!(u.values(), v.values());
        assert_eq!(u.x0().to_bits(), v.x0().to_bits());
        assert_eq!(u.h().to_bits(), v.h().to_bits());
        assert_eq!(v.eval(2.5), -1.0);
    }
}
