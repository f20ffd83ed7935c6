//! Coprime L-shaped receive arrays, the uniform planar transmit array, and
//! far-field steering vectors.
//!
//! Element positions live on an integer grid with half-wavelength spacing:
//! the physical position of grid triple `g` is `center + (λ/2)·g`. Receive
//! elements are sorted lexicographically on `(y, x)`, so the shared origin
//! element always has index 0 and the x-axis elements come first.
//!
//! Index sets are 0-based positions into the full element list.

use std::f64::consts::PI;

use crate::{Error, Result, Vec3, C64, CVector};

/// Grid spacing in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// One axis of a coprime L-shaped array: the union of a uniform subarray with
/// pitch `pitch_a` and `len_a` elements and one with pitch `pitch_b` and
/// `len_b` elements, sharing the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoprimeAxisSpec {
    pub pitch_a: usize,
    pub pitch_b: usize,
    pub len_a: usize,
    pub len_b: usize,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl CoprimeAxisSpec {
    pub fn new(pitch_a: usize, pitch_b: usize, len_a: usize, len_b: usize) -> Result<Self> {
        let spec = Self {
            pitch_a,
            pitch_b,
            len_a,
            len_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            pitch_a,
            pitch_b,
            len_a,
            len_b,
        } = *self;
        if pitch_a == 0 || pitch_b == 0 || len_a == 0 || len_b == 0 {
            return Err(Error::InvalidAxis(format!(
                "all fields must be positive, got {self:?}"
            )));
        }
        if gcd(pitch_a, pitch_b) != 1 {
            return Err(Error::InvalidAxis(format!(
                "pitches {pitch_a} and {pitch_b} are not coprime"
            )));
        }
        if len_a > pitch_b || len_b > pitch_a {
            return Err(Error::InvalidAxis(format!(
                "need len_a <= pitch_b and len_b <= pitch_a, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Number of elements on this axis, origin included.
    pub fn element_count(&self) -> usize {
        self.len_a + self.len_b - 1
    }
}

/// Sorted grid offsets of one axis: `{pitch_a·m} ∪ {pitch_b·n}`.
pub fn build_axis_set(spec: &CoprimeAxisSpec) -> Result<Vec<i64>> {
    spec.validate()?;
    let mut set: Vec<i64> = (0..spec.len_a)
        .map(|m| (spec.pitch_a * m) as i64)
        .chain((0..spec.len_b).map(|n| (spec.pitch_b * n) as i64))
        .collect();
    set.sort_unstable();
    set.dedup();
    debug_assert_eq!(set.len(), spec.element_count());
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

/// One of the four uniform linear subarrays of an L-shaped array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubarrayId {
    pub axis: Axis,
    /// 1 for the `pitch_a` progression, 2 for the `pitch_b` progression.
    pub part: u8,
}

impl SubarrayId {
    /// The four subarrays in stacking order: x1, x2, y1, y2.
    pub const ALL: [SubarrayId; 4] = [
        SubarrayId { axis: Axis::X, part: 1 },
        SubarrayId { axis: Axis::X, part: 2 },
        SubarrayId { axis: Axis::Y, part: 1 },
        SubarrayId { axis: Axis::Y, part: 2 },
    ];
}

impl std::fmt::Display for SubarrayId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let axis = match self.axis {
            Axis::X => 'x',
            Axis::Y => 'y',
        };
        write!(f, "{axis}{}", self.part)
    }
}

/// Positions (into the element list) of each axis and subarray.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub x1: Vec<usize>,
    pub x2: Vec<usize>,
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
}

/// Anything with elements on the half-wavelength grid.
pub trait ArrayLayout {
    fn center(&self) -> Vec3;
    fn wavelength(&self) -> f64;
    fn grid(&self) -> &[[i64; 3]];

    fn len(&self) -> usize {
        self.grid().len()
    }

    fn is_empty(&self) -> bool {
        self.grid().is_empty()
    }

    /// Physical position of element `i`.
    fn position(&self, i: usize) -> Vec3 {
        let g = self.grid()[i];
        let d = HALF_WAVELENGTH * self.wavelength();
        self.center() + Vec3::new(g[0] as f64, g[1] as f64, g[2] as f64) * d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveArrayLayout {
    pub axis_x: CoprimeAxisSpec,
    pub axis_y: CoprimeAxisSpec,
    pub center: Vec3,
    pub wavelength: f64,
    pub elements: Vec<[i64; 3]>,
    pub index_sets: IndexSets,
}

pub fn build_receive_layout(
    axis_x: CoprimeAxisSpec,
    axis_y: CoprimeAxisSpec,
    center: Vec3,
    wavelength: f64,
) -> Result<ReceiveArrayLayout> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let sx = build_axis_set(&axis_x)?;
    let sy = build_axis_set(&axis_y)?;

    let mut elements: Vec<[i64; 3]> = sx.iter().map(|&l| [l, 0, 0]).collect();
    elements.extend(sy.iter().filter(|&&l| l != 0).map(|&l| [0, l, 0]));
    elements.sort_by_key(|e| (e[1], e[0]));

    let find = |e: [i64; 3]| elements.iter().position(|&x| x == e).expect("element present");
    let pick = |axis: Axis, pitch: usize, len: usize| -> Vec<usize> {
        (0..len)
            .map(|n| {
                let l = (pitch * n) as i64;
                match axis {
                    Axis::X => find([l, 0, 0]),
                    Axis::Y => find([0, l, 0]),
                }
            })
            .collect()
    };
    let index_sets = IndexSets {
        x: sx.iter().map(|&l| find([l, 0, 0])).collect(),
        y: sy.iter().map(|&l| find([0, l, 0])).collect(),
        x1: pick(Axis::X, axis_x.pitch_a, axis_x.len_a),
        x2: pick(Axis::X, axis_x.pitch_b, axis_x.len_b),
        y1: pick(Axis::Y, axis_y.pitch_a, axis_y.len_a),
        y2: pick(Axis::Y, axis_y.pitch_b, axis_y.len_b),
    };

    Ok(ReceiveArrayLayout {
        axis_x,
        axis_y,
        center,
        wavelength,
        elements,
        index_sets,
    })
}

impl ReceiveArrayLayout {
    /// Index of the shared reference element.
    pub fn origin_index(&self) -> usize {
        0
    }

    pub fn indices(&self, id: SubarrayId) -> &[usize] {
        match (id.axis, id.part) {
            (Axis::X, 1) => &self.index_sets.x1,
            (Axis::X, _) => &self.index_sets.x2,
            (Axis::Y, 1) => &self.index_sets.y1,
            (Axis::Y, _) => &self.index_sets.y2,
        }
    }

    /// Grid pitch of a subarray.
    pub fn pitch(&self, id: SubarrayId) -> usize {
        let spec = match id.axis {
            Axis::X => &self.axis_x,
            Axis::Y => &self.axis_y,
        };
        if id.part == 1 {
            spec.pitch_a
        } else {
            spec.pitch_b
        }
    }

    /// Longest subarray (the `I'` of the working conditions).
    pub fn max_subarray_len(&self) -> usize {
        SubarrayId::ALL
            .iter()
            .map(|&id| self.indices(id).len())
            .max()
            .unwrap_or(0)
    }
}

impl ArrayLayout for ReceiveArrayLayout {
    fn center(&self) -> Vec3 {
        self.center
    }
    fn wavelength(&self) -> f64 {
        self.wavelength
    }
    fn grid(&self) -> &[[i64; 3]] {
        &self.elements
    }
}

/// Uniform planar transmit array on a half-wavelength grid in the xy-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitArrayLayout {
    pub rows: usize,
    pub cols: usize,
    pub center: Vec3,
    pub wavelength: f64,
    pub elements: Vec<[i64; 3]>,
}

impl TransmitArrayLayout {
    pub fn new(rows: usize, cols: usize, center: Vec3, wavelength: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("transmit grid must be nonempty".into()));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        let elements = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| [c as i64, r as i64, 0]))
            .collect();
        Ok(Self {
            rows,
            cols,
            center,
            wavelength,
            elements,
        })
    }

    /// Square `n×n` grid with `n² = elements`.
    pub fn square(elements: usize, center: Vec3, wavelength: f64) -> Result<Self> {
        let n = (elements as f64).sqrt().round() as usize;
        if n * n != elements {
            return Err(Error::InvalidArgument(format!(
                "transmit element count {elements} is not a perfect square"
            )));
        }
        Self::new(n, n, center, wavelength)
    }
}

impl ArrayLayout for TransmitArrayLayout {
    fn center(&self) -> Vec3 {
        self.center
    }
    fn wavelength(&self) -> f64 {
        self.wavelength
    }
    fn grid(&self) -> &[[i64; 3]] {
        &self.elements
    }
}

/// Unit vector pointing from an array towards a far-field source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec3);

impl Direction {
    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot normalize {v:?}")));
        }
        Ok(Self(v / n))
    }

    /// Direction with cosines `u` (x) and `w` (y) in the `z ≥ 0` half-space.
    pub fn from_cosines(u: f64, w: f64) -> Result<Self> {
        let z2 = 1.0 - u * u - w * w;
        if z2 < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "direction cosines ({u}, {w}) outside the unit disk"
            )));
        }
        Self::new(Vec3::new(u, w, z2.max(0.0).sqrt()))
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    /// Direction cosine along x.
    pub fn u(&self) -> f64 {
        self.0.x
    }

    /// Direction cosine along y.
    pub fn w(&self) -> f64 {
        self.0.y
    }

    /// Angle to another direction in radians.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        // atan2 keeps precision for tiny angles where acos would not
        self.0.cross(&other.0).norm().atan2(self.0.dot(&other.0))
    }
}

pub fn direction_between(from: &Vec3, to: &Vec3) -> Result<Direction> {
    let d = to - from;
    if d.norm() == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Direction::new(d)
}

/// `exp(i·2π/λ·⟨p_i − center, v⟩)` for every element.
pub fn steering_vector<L: ArrayLayout + ?Sized>(layout: &L, dir: &Direction) -> CVector {
    let d = HALF_WAVELENGTH * layout.wavelength();
    let k = 2.0 * PI / layout.wavelength();
    let v = dir.vector();
    CVector::from_iterator(
        layout.len(),
        layout.grid().iter().map(|g| {
            let proj = d * (g[0] as f64 * v.x + g[1] as f64 * v.y + g[2] as f64 * v.z);
            C64::from_polar(1.0, k * proj)
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn axis(a: usize, b: usize, la: usize, lb: usize) -> CoprimeAxisSpec {
        CoprimeAxisSpec::new(a, b, la, lb).unwrap()
    }

    #[test]
    fn axis_sets() {
        assert_eq!(build_axis_set(&axis(4, 7, 4, 4)).unwrap(), vec![0, 4, 7, 8, 12, 14, 21]);
        assert_eq!(build_axis_set(&axis(1, 2, 1, 1)).unwrap(), vec![0]);
        assert_eq!(build_axis_set(&axis(2, 3, 3, 2)).unwrap(), vec![0, 2, 3, 4]);
    }

    #[test]
    fn axis_validation() {
        assert!(matches!(CoprimeAxisSpec::new(4, 6, 2, 2), Err(Error::InvalidAxis(_))));
        assert!(matches!(CoprimeAxisSpec::new(4, 7, 8, 4), Err(Error::InvalidAxis(_))));
        assert!(matches!(CoprimeAxisSpec::new(4, 7, 4, 5), Err(Error::InvalidAxis(_))));
        assert!(CoprimeAxisSpec::new(0, 1, 1, 1).is_err());
    }

    #[test]
    fn receive_layout_counts() {
        let a = axis(4, 7, 4, 4);
        let l = build_receive_layout(a, a, Vec3::zeros(), 1.0).unwrap();
        assert_eq!(l.len(), 13);
        assert_eq!(l.index_sets.x.len(), 7);
        assert_eq!(l.index_sets.y.len(), 7);
        assert_eq!(l.max_subarray_len(), 4);

        let one = axis(1, 2, 1, 1);
        let l = build_receive_layout(one, one, Vec3::zeros(), 1.0).unwrap();
        assert_eq!(l.elements, vec![[0, 0, 0]]);

        let l = build_receive_layout(axis(2, 3, 3, 2), axis(2, 3, 2, 2), Vec3::zeros(), 1.0)
            .unwrap();
        assert_eq!(l.index_sets.x.len(), 4);
        assert_eq!(l.index_sets.y.len(), 3);
        assert_eq!(l.len(), 6);
    }

    #[test]
    fn index_sets_consistent() {
        let a = axis(4, 7, 4, 4);
        let l = build_receive_layout(a, a, Vec3::zeros(), 1.0).unwrap();
        let sets = &l.index_sets;
        for s in [&sets.x, &sets.y, &sets.x1, &sets.x2, &sets.y1, &sets.y2] {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(s[0], l.origin_index());
        }
        let mut union: Vec<usize> = sets.x1.iter().chain(&sets.x2).copied().collect();
        union.sort_unstable();
        union.dedup();
        assert_eq!(union, sets.x);
        assert_eq!(sets.x1.iter().filter(|i| sets.x2.contains(i)).count(), 1);
        for &i in &sets.x1 {
            assert_eq!(l.elements[i][0] % 4, 0);
            assert_eq!(l.elements[i][1], 0);
        }
        for &i in &sets.y2 {
            assert_eq!(l.elements[i][1] % 7, 0);
            assert_eq!(l.elements[i][0], 0);
        }
        // (y, x) lexicographic order
        assert!(l
            .elements
            .windows(2)
            .all(|w| (w[0][1], w[0][0]) < (w[1][1], w[1][0])));
    }

    #[test]
    fn steering_hand_values() {
        let a = axis(4, 7, 4, 4);
        let l = build_receive_layout(a, a, Vec3::new(10.0, -3.0, 0.0), 1.0).unwrap();
        let dir = Direction::from_cosines(0.5, 0.0).unwrap();
        let sv = steering_vector(&l, &dir);
        assert_abs_diff_eq!(sv[l.origin_index()].re, 1.0);
        let i4 = l.elements.iter().position(|e| *e == [4, 0, 0]).unwrap();
        assert_abs_diff_eq!(sv[i4].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sv[i4].im, 0.0, epsilon = 1e-12);

        let dir = Direction::from_cosines(1.0 / 7.0, 0.0).unwrap();
        let sv = steering_vector(&l, &dir);
        let i7 = l.elements.iter().position(|e| *e == [7, 0, 0]).unwrap();
        assert_abs_diff_eq!(sv[i7].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sv[i7].im, 0.0, epsilon = 1e-12);
        assert!(sv.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn subarrays_are_vandermonde() {
        let a = axis(4, 7, 4, 4);
        let b = axis(3, 5, 5, 3);
        let l = build_receive_layout(a, b, Vec3::zeros(), 1.0).unwrap();
        let dir = Direction::from_cosines(0.31, -0.44).unwrap();
        let sv = steering_vector(&l, &dir);
        for id in SubarrayId::ALL {
            let cos = match id.axis {
                Axis::X => dir.u(),
                Axis::Y => dir.w(),
            };
            let z = C64::from_polar(1.0, PI * l.pitch(id) as f64 * cos);
            for (n, &i) in l.indices(id).iter().enumerate() {
                assert!((sv[i] - z.powu(n as u32)).norm() < 1e-12, "{id} n={n}");
            }
        }
    }

    #[test]
    fn directions() {
        let d = direction_between(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(*d.vector(), Vec3::new(0.0, 0.0, 1.0));
        let d = direction_between(&Vec3::zeros(), &Vec3::new(3.0, 4.0, 0.0)).unwrap();
        assert_abs_diff_eq!(d.vector().x, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(d.vector().y, 0.8, epsilon = 1e-15);
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert!(matches!(direction_between(&p, &p), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn transmit_grid() {
        let t = TransmitArrayLayout::square(16, Vec3::new(0.0, -8000.0, 0.0), 1.0).unwrap();
        assert_eq!((t.rows, t.cols, t.len()), (4, 4, 16));
        let t = TransmitArrayLayout::square(49, Vec3::zeros(), 1.0).unwrap();
        assert_eq!((t.rows, t.cols), (7, 7));
        assert_abs_diff_eq!((t.position(1) - t.position(0)).norm(), 0.5);
        assert!(TransmitArrayLayout::square(15, Vec3::zeros(), 1.0).is_err());
    }
}
