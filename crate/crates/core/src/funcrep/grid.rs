use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{point_key, Point, PointKey};
use crate::error::{Error, Result};
use crate::numc::{c, CMatrix};

/// `Δ_k = [−1,1]^(n−k) × D̄^k`, optionally with the first disc coordinate restricted to
/// the closed upper half-disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "half")]
    pub half: bool,
}

impl DomainDescriptor {
    pub fn new(n: usize, k: usize, half: bool) -> Result<Self> {
        if k > n || (half && k == 0) {
            return Err(Error::InvalidConfig(format!(
                "invalid domain n = {n}, k = {k}, half = {half}"
            )));
        }
        Ok(DomainDescriptor { n, k, half })
    }

    pub fn polydisc(n: usize) -> Self {
        DomainDescriptor { n, k: n, half: false }
    }

    /// Index of the first disc coordinate.
    pub fn first_disc(&self) -> usize {
        self.n - self.k
    }

    pub fn factor_kind(&self, coord: usize) -> FactorKind {
        if coord < self.n - self.k {
            FactorKind::Interval
        } else if self.half && coord == self.n - self.k {
            FactorKind::HalfDisc
        } else {
            FactorKind::Disc
        }
    }

    /// Membership test with a small slack for rounding.
    pub fn contains(&self, z: &[Complex64]) -> bool {
        const SLACK: f64 = 1e-12;
        z.len() == self.n
            && z.iter().enumerate().all(|(i, x)| match self.factor_kind(i) {
                FactorKind::Interval => x.im == 0.0 && x.re.abs() <= 1.0 + SLACK,
                FactorKind::Disc => x.norm() <= 1.0 + SLACK,
                FactorKind::HalfDisc => x.norm() <= 1.0 + SLACK && x.im >= 0.0,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Interval,
    Disc,
    HalfDisc,
}

/// Sample counts for the tensor grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub radial: usize,
    pub angular: usize,
    pub interval: usize,
}

impl GridLayout {
    /// Layout whose interval factor reproduces the real diameter of the disc factor.
    pub fn nested(radial: usize, angular: usize) -> Self {
        GridLayout {
            radial,
            angular,
            interval: 2 * radial - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.angular < 2 || !self.angular.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "angular count must be even and at least 2 (got {})",
                self.angular
            )));
        }
        if self.radial == 0 || self.interval == 0 {
            return Err(Error::InvalidConfig("counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    kind: FactorKind,
    values: Vec<Complex64>,
    conj: Vec<Option<usize>>,
    /// (radius index, angle index) for disc points other than the origin.
    polar: Vec<Option<(usize, usize)>>,
}

fn radius(i: usize, radial: usize) -> f64 {
    if radial <= 1 {
        0.0
    } else {
        i as f64 / (radial - 1) as f64
    }
}

/// `(cos, sin)` of `2πj/angular`, exact on the axes, with mirrored angles sharing bits.
fn unit(j: usize, angular: usize) -> (f64, f64) {
    if j == 0 {
        (1.0, 0.0)
    } else if 2 * j == angular {
        (-1.0, 0.0)
    } else if 4 * j == angular {
        (0.0, 1.0)
    } else if 4 * j == 3 * angular {
        (0.0, -1.0)
    } else if 2 * j > angular {
        let (co, si) = unit(angular - j, angular);
        (co, -si)
    } else {
        let th = TAU * j as f64 / angular as f64;
        (th.cos(), th.sin())
    }
}

fn interval_factor(count: usize) -> Factor {
    let values: Vec<Complex64> = if count == 1 {
        vec![c(0.0, 0.0)]
    } else {
        let m = (count - 1) as f64;
        (0..count)
            .map(|i| c((2.0 * i as f64 - m) / m, 0.0))
            .collect()
    };
    let len = values.len();
    Factor {
        kind: FactorKind::Interval,
        values,
        conj: (0..len).map(Some).collect(),
        polar: vec![None; len],
    }
}

fn disc_factor(radial: usize, angular: usize, half: bool) -> Factor {
    let angles: Vec<usize> = if half {
        (0..=angular / 2).collect()
    } else {
        (0..angular).collect()
    };
    let per_ring = angles.len();
    let mut values = vec![c(0.0, 0.0)];
    let mut polar = vec![None];
    for i in 1..radial {
        let r = radius(i, radial);
        for &j in &angles {
            let (co, si) = unit(j, angular);
            values.push(c(r * co, r * si));
            polar.push(Some((i, j)));
        }
    }
    let conj = (0..values.len())
        .map(|idx| {
            if idx == 0 {
                return Some(0);
            }
            let (i, j) = polar[idx].unwrap();
            let jc = (angular - j) % angular;
            if half {
                (jc == j).then_some(idx)
            } else {
                Some(1 + (i - 1) * per_ring + jc)
            }
        })
        .collect();
    Factor {
        kind: if half {
            FactorKind::HalfDisc
        } else {
            FactorKind::Disc
        },
        values,
        conj,
        polar,
    }
}

/// Finite sample set of a domain with its conjugation pairing.
///
/// For full domains every point has a conjugate partner in the grid. For half domains
/// only points on the real diameter of the half-disc factor do; the rest map to `None`.
#[derive(Debug, Clone)]
pub struct ConjClosedGrid {
    domain: DomainDescriptor,
    points: Vec<Point>,
    conj_index: Vec<Option<usize>>,
    layout: Option<GridLayout>,
    factors: Vec<Factor>,
    lookup: HashMap<PointKey, usize>,
}

impl PartialEq for ConjClosedGrid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.points == other.points
    }
}

pub fn build_grid(domain: DomainDescriptor, layout: GridLayout) -> Result<ConjClosedGrid> {
    layout.validate()?;
    let factors: Vec<Factor> = (0..domain.n)
        .map(|coord| match domain.factor_kind(coord) {
            FactorKind::Interval => interval_factor(layout.interval),
            FactorKind::Disc => disc_factor(layout.radial, layout.angular, false),
            FactorKind::HalfDisc => disc_factor(layout.radial, layout.angular, true),
        })
        .collect();
    let total: usize = factors.iter().map(|f| f.values.len()).product();
    let mut points = Vec::with_capacity(total);
    let mut conj_index = Vec::with_capacity(total);
    let mut digits = vec![0usize; factors.len()];
    for _ in 0..total {
        points.push(
            digits
                .iter()
                .zip(&factors)
                .map(|(&d, f)| f.values[d])
                .collect::<Point>(),
        );
        let partner: Option<Vec<usize>> = digits
            .iter()
            .zip(&factors)
            .map(|(&d, f)| f.conj[d])
            .collect();
        conj_index.push(partner.map(|p| flat_index(&p, &factors)));
        // row-major increment, last coordinate fastest
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < factors[pos].values.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
    let lookup = points
        .iter()
        .enumerate()
        .map(|(i, p)| (point_key(p), i))
        .collect();
    Ok(ConjClosedGrid {
        domain,
        points,
        conj_index,
        layout: Some(layout),
        factors,
        lookup,
    })
}

fn flat_index(digits: &[usize], factors: &[Factor]) -> usize {
    digits
        .iter()
        .zip(factors)
        .fold(0, |acc, (&d, f)| acc * f.values.len() + d)
}

impl ConjClosedGrid {
    /// Grid from an explicit point list; the conjugation pairing is found by exact matching.
    pub fn from_points(domain: DomainDescriptor, points: Vec<Point>) -> Result<Self> {
        for p in &points {
            if !domain.contains(p) {
                return Err(Error::GridMismatch(format!("point {p:?} outside the domain")));
            }
        }
        let lookup: HashMap<PointKey, usize> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (point_key(p), i))
            .collect();
        if lookup.len() != points.len() {
            return Err(Error::GridMismatch("duplicate grid points".into()));
        }
        let conj_index: Vec<Option<usize>> = points
            .iter()
            .map(|p| {
                let cp: Point = p.iter().map(|x| x.conj()).collect();
                lookup.get(&point_key(&cp)).copied()
            })
            .collect();
        if !domain.half && conj_index.iter().any(Option::is_none) {
            return Err(Error::GridMismatch(
                "grid of a full domain is not closed under conjugation".into(),
            ));
        }
        Ok(ConjClosedGrid {
            domain,
            points,
            conj_index,
            layout: None,
            factors: Vec::new(),
            lookup,
        })
    }

    pub fn domain(&self) -> DomainDescriptor {
        self.domain
    }

    pub fn layout(&self) -> Option<GridLayout> {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn conj_index(&self) -> &[Option<usize>] {
        &self.conj_index
    }

    pub fn conj_of(&self, i: usize) -> Option<usize> {
        self.conj_index[i]
    }

    /// Index of the point bitwise equal to `z`, if present.
    pub fn find(&self, z: &[Complex64]) -> Option<usize> {
        self.lookup.get(&point_key(z)).copied()
    }

    /// Index of the origin, if present.
    pub fn origin(&self) -> Option<usize> {
        self.find(&vec![c(0.0, 0.0); self.domain.n])
    }

    /// Checks the pairing invariants: involutive, exact conjugates, real points fixed.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            let real = p.iter().all(|x| x.im == 0.0);
            match self.conj_index[i] {
                Some(j) => {
                    if self.conj_index[j] != Some(i) {
                        return Err(Error::GridMismatch(format!("pairing not involutive at {i}")));
                    }
                    let q = &self.points[j];
                    if p.iter().zip(q).any(|(a, b)| a.re != b.re || a.im != -b.im) {
                        return Err(Error::GridMismatch(format!("pair {i}/{j} not conjugate")));
                    }
                    if real && j != i {
                        return Err(Error::GridMismatch(format!("real point {i} not fixed")));
                    }
                }
                None => {
                    if !self.domain.half || real {
                        return Err(Error::GridMismatch(format!("point {i} has no partner")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Neighbour indices for polar central differences at point `i` in disc coordinate
    /// `coord`: `(radius minus, radius plus, angle minus, angle plus, r, Δr, Δθ)`.
    /// Only defined for full-disc factors at interior radii.
    pub(crate) fn polar_stencil(&self, i: usize, coord: usize) -> Option<PolarStencil> {
        let layout = self.layout?;
        let f = self.factors.get(coord)?;
        if f.kind != FactorKind::Disc {
            return None;
        }
        let digits = self.digits(i);
        let (ri, aj) = f.polar[digits[coord]]?;
        if ri + 1 >= layout.radial {
            return None;
        }
        let a = layout.angular;
        let at = |polar_idx: usize| {
            let mut d = digits.clone();
            d[coord] = polar_idx;
            flat_index(&d, &self.factors)
        };
        let ring = |r: usize, j: usize| if r == 0 { 0 } else { 1 + (r - 1) * a + j };
        Some(PolarStencil {
            r_minus: at(ring(ri - 1, aj)),
            r_plus: at(ring(ri + 1, aj)),
            a_minus: at(ring(ri, (aj + a - 1) % a)),
            a_plus: at(ring(ri, (aj + 1) % a)),
            r: radius(ri, layout.radial),
            dr: radius(1, layout.radial),
            dtheta: TAU / a as f64,
        })
    }

    fn digits(&self, mut i: usize) -> Vec<usize> {
        let mut d = vec![0; self.factors.len()];
        for pos in (0..self.factors.len()).rev() {
            let len = self.factors[pos].values.len();
            d[pos] = i % len;
            i /= len;
        }
        d
    }
}

pub(crate) struct PolarStencil {
    pub r_minus: usize,
    pub r_plus: usize,
    pub a_minus: usize,
    pub a_plus: usize,
    pub r: f64,
    pub dr: f64,
    pub dtheta: f64,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    domain: DomainDescriptor,
    points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<GridLayout>,
}

impl Serialize for ConjClosedGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridJson {
            domain: self.domain,
            points: self.points.clone(),
            layout: self.layout,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConjClosedGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = GridJson::deserialize(d)?;
        let domain = DomainDescriptor::new(j.domain.n, j.domain.k, j.domain.half)
            .map_err(D::Error::custom)?;
        match j.layout {
            Some(layout) => {
                let g = build_grid(domain, layout).map_err(D::Error::custom)?;
                if g.points != j.points {
                    return Err(D::Error::custom("grid points do not match the declared layout"));
                }
                Ok(g)
            }
            None => ConjClosedGrid::from_points(domain, j.points).map_err(D::Error::custom),
        }
    }
}

/// Matrix samples indexed by grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMatrixFunction {
    pub grid: ConjClosedGrid,
    pub values: Vec<CMatrix>,
}

impl GridMatrixFunction {
    pub fn new(grid: ConjClosedGrid, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.dims() != first.dims()) {
                return Err(Error::GridMismatch("values differ in shape".into()));
            }
        }
        Ok(GridMatrixFunction { grid, values })
    }

    /// `max ‖g(z) − conj(g(z̄))‖_F` over conjugate pairs.
    pub fn symmetry_residual(&self) -> f64 {
        self.grid
            .conj_index()
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| self.values[i].dist(&self.values[j].conj())))
            .fold(0.0, f64::max)
    }

    /// Smallest singular value over the grid.
    pub fn min_singular_value(&self) -> f64 {
        self.values
            .iter()
            .map(crate::numc::min_singular_value)
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(radial: usize, angular: usize, interval: usize) -> GridLayout {
        GridLayout {
            radial,
            angular,
            interval,
        }
    }

    #[test]
    fn interval_factor_of_three() {
        let g = build_grid(DomainDescriptor::new(1, 0, false).unwrap(), layout(2, 4, 3)).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0].re).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert!(g.conj_index().iter().enumerate().all(|(i, j)| *j == Some(i)));
    }

    #[test]
    fn small_disc_factor() {
        let g = build_grid(DomainDescriptor::polydisc(1), layout(2, 4, 3)).unwrap();
        let pts: Vec<Complex64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(
            pts,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
        );
        assert_eq!(g.conj_of(2), Some(4));
        assert_eq!(g.conj_of(4), Some(2));
        assert_eq!(g.conj_of(3), Some(3));
        g.check_invariants().unwrap();
    }

    #[test]
    fn half_disc_keeps_upper_angles() {
        let d = DomainDescriptor::new(1, 1, true).unwrap();
        let g = build_grid(d, layout(3, 8, 5)).unwrap();
        assert_eq!(g.len(), 1 + 2 * 5);
        assert!(g.points().iter().all(|p| p[0].im >= 0.0));
        g.check_invariants().unwrap();
    }

    #[test]
    fn nested_layout_shares_real_diameter() {
        let lay = GridLayout::nested(9, 16);
        let base = build_grid(DomainDescriptor::new(1, 0, false).unwrap(), lay).unwrap();
        let disc = build_grid(DomainDescriptor::polydisc(1), lay).unwrap();
        let real: Vec<f64> = disc
            .points()
            .iter()
            .filter(|p| p[0].im == 0.0)
            .map(|p| p[0].re)
            .collect();
        assert_eq!(real.len(), base.len());
        for p in base.points() {
            assert!(disc.find(p).is_some(), "{p:?}");
        }
    }

    #[test]
    fn mixed_domains_satisfy_invariants() {
        for (n, k, half) in [(2, 0, false), (2, 1, false), (2, 1, true), (2, 2, true), (3, 2, false)] {
            let d = DomainDescriptor::new(n, k, half).unwrap();
            let g = build_grid(d, layout(3, 6, 5)).unwrap();
            g.check_invariants().unwrap();
            assert!(g.points().iter().all(|p| d.contains(p)));
            assert!(g.origin().is_some());
        }
    }

    #[test]
    fn odd_angular_count_is_rejected() {
        assert!(build_grid(DomainDescriptor::polydisc(1), layout(3, 5, 5)).is_err());
    }

    #[test]
    fn json_round_trip_rebuilds_pairing() {
        let g = build_grid(DomainDescriptor::new(2, 1, false).unwrap(), layout(3, 4, 5)).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: ConjClosedGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.conj_index(), g.conj_index());
        // without a layout the pairing is recovered by matching
        let bare: serde_json::Value = serde_json::from_str(&s).unwrap();
        let mut bare = bare.as_object().unwrap().clone();
        bare.remove("layout");
        let back: ConjClosedGrid = serde_json::from_value(serde_json::Value::Object(bare)).unwrap();
        assert_eq!(back.conj_index(), g.conj_index());
    }

    #[test]
    fn json_round_trip_with_irrational_angles() {
        let g = build_grid(DomainDescriptor::polydisc(1), layout(9, 16, 17)).unwrap();
        let back: ConjClosedGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
