use std::fmt;

use nalgebra::{Complex, DMatrix};

use super::layout::{Channel, ModeLayout, Polarization, Temporal, TemporalModes};
use crate::error::{Error, Result, Violation};
use crate::types::DetectionScheme;

pub type Complex64 = Complex<f64>;

/// Unitarity tolerance for element matrices.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Passive linear map on a subset of modes.
///
/// Column convention: `a_i† → Σ_j matrix[(j, i)] a_j†`, with `i` and `j`
/// local indices into `modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    pub modes: Vec<usize>,
    pub matrix: DMatrix<Complex64>,
}

impl ModeTransform {
    pub fn new(modes: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        Self { modes, matrix }
    }

    fn real2(modes: [usize; 2], m: [[f64; 2]; 2]) -> Self {
        let matrix = DMatrix::from_fn(2, 2, |r, c| Complex64::new(m[r][c], 0.0));
        Self { modes: modes.to_vec(), matrix }
    }

    /// Largest entry of `M†M − 1`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((prod[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        dev
    }

    /// Embeds the map into the full `len × len` mode space.
    pub fn embed(&self, len: usize) -> DMatrix<Complex64> {
        let mut full = DMatrix::<Complex64>::identity(len, len);
        for (li, &i) in self.modes.iter().enumerate() {
            for (lj, &j) in self.modes.iter().enumerate() {
                full[(j, i)] = self.matrix[(lj, li)];
            }
        }
        full
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Half-wave plate at 22.5°: `H → (H+V)/√2`, `V → (H−V)/√2`.
    Mixer,
    /// Phase `e^{iφ}` on the `V` arm.
    Phase(f64),
    /// Partial distinguishability of the delayed `V` arm: the matched mode
    /// keeps amplitude `√I`, the rest moves to the orthogonal mode.
    TemporalRotation(f64),
    /// Routes arm `H` to channel 1 and arm `V` to channel 2.
    PolarizingSplitter,
    /// Balanced 1×w splitter feeding the channel's detectors.
    SplitterTree(Channel),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Mixer => write!(f, "mixer"),
            Element::Phase(p) => write!(f, "phase({p})"),
            Element::TemporalRotation(i) => write!(f, "temporal-rotation(I={i})"),
            Element::PolarizingSplitter => write!(f, "polarizing-splitter"),
            Element::SplitterTree(c) => write!(f, "splitter-tree({c:?})"),
        }
    }
}

impl Element {
    /// Decomposes the element into mode transforms on `layout`.
    pub fn transforms(&self, layout: &ModeLayout) -> Result<Vec<ModeTransform>> {
        let temporal = layout.temporal().indices();
        let arm = |p, t| layout.arm(p, t).expect("arm mode present in layout");
        let out = match self {
            Element::Mixer => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                temporal
                    .iter()
                    .map(|&t| ModeTransform::real2([arm(Polarization::H, t), arm(Polarization::V, t)], [[s, s], [s, -s]]))
                    .collect()
            }
            Element::Phase(phi) => {
                let modes: Vec<usize> = temporal.iter().map(|&t| arm(Polarization::V, t)).collect();
                let k = modes.len();
                let matrix = DMatrix::from_diagonal_element(k, k, Complex64::from_polar(1.0, *phi));
                vec![ModeTransform::new(modes, matrix)]
            }
            Element::TemporalRotation(i) => {
                if !(0.0..=1.0).contains(i) {
                    return Err(Error::Invalid(vec![Violation::new(
                        "indistinguishability",
                        format!("{i} outside [0, 1]"),
                    )]));
                }
                match layout.temporal() {
                    TemporalModes::Single if (*i - 1.0).abs() > 1e-15 => {
                        return Err(Error::Invalid(vec![Violation::new(
                            "indistinguishability",
                            format!("single temporal mode layout cannot represent I = {i}"),
                        )]))
                    }
                    TemporalModes::Single => Vec::new(),
                    TemporalModes::Pair => {
                        let (c, s) = (i.sqrt(), (1.0 - i).sqrt());
                        vec![ModeTransform::real2(
                            [arm(Polarization::V, Temporal::Matched), arm(Polarization::V, Temporal::Orthogonal)],
                            [[c, -s], [s, c]],
                        )]
                    }
                }
            }
            Element::PolarizingSplitter => {
                let mut v = Vec::new();
                for (pol, ch) in [(Polarization::H, Channel::One), (Polarization::V, Channel::Two)] {
                    for &t in temporal {
                        let dst = layout.output(ch, 0, t).expect("port 0 always present");
                        v.push(ModeTransform::real2([arm(pol, t), dst], [[0.0, 1.0], [1.0, 0.0]]));
                    }
                }
                v
            }
            Element::SplitterTree(ch) => {
                let w = layout.ports(*ch);
                let mut v = Vec::new();
                for j in 1..w {
                    let r2 = 1.0 / (w - j + 1) as f64;
                    let (r, t_amp) = (r2.sqrt(), (1.0 - r2).sqrt());
                    for &t in temporal {
                        let p0 = layout.output(*ch, 0, t).expect("port 0");
                        let pj = layout.output(*ch, j, t).expect("port j");
                        v.push(ModeTransform::real2([p0, pj], [[t_amp, -r], [r, t_amp]]));
                    }
                }
                v
            }
        };
        for tr in &out {
            let deviation = tr.unitarity_deviation();
            if deviation > UNITARITY_TOL {
                return Err(Error::NonUnitary { element: self.to_string(), deviation });
            }
        }
        Ok(out)
    }
}

/// Ordered element list acting on a fixed mode layout.
#[derive(Debug, Clone)]
pub struct InterferometerCircuit {
    pub layout: ModeLayout,
    pub elements: Vec<Element>,
}

impl InterferometerCircuit {
    /// Polarization interferometer followed by channel splitter trees.
    pub fn noon(scheme: DetectionScheme, i: f64, phi: f64, temporal: TemporalModes) -> Self {
        let layout = ModeLayout::for_scheme(scheme, temporal);
        let elements = vec![
            Element::Mixer,
            Element::Phase(phi),
            Element::TemporalRotation(i),
            Element::Mixer,
            Element::PolarizingSplitter,
            Element::SplitterTree(Channel::One),
            Element::SplitterTree(Channel::Two),
        ];
        Self { layout, elements }
    }

    /// All transforms in application order, each tagged with its element.
    pub fn transforms(&self) -> Result<Vec<(&Element, ModeTransform)>> {
        let mut out = Vec::new();
        for e in &self.elements {
            for t in e.transforms(&self.layout)? {
                out.push((e, t));
            }
        }
        Ok(out)
    }

    /// Product of all element matrices on the full mode space.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        let n = self.layout.len();
        let mut u = DMatrix::<Complex64>::identity(n, n);
        for (_, t) in self.transforms()? {
            u = t.embed(n) * u;
        }
        Ok(u)
    }
}
