use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::poly::MatrixPoly;
use super::{point_pairs, scale_point, MatrixField};
use crate::error::{Error, Result};
use crate::numc::{CMatrix, LinalgError};

/// Exactly evaluable matrix-valued function built from polynomial leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFunctionExpr {
    Poly(MatrixPoly),
    Const(CMatrix),
    Sum(Vec<MatrixFunctionExpr>),
    Product(Vec<MatrixFunctionExpr>),
    /// Pointwise inverse; evaluation fails with `SingularAtPoint` below the singular floor.
    Inverse(Box<MatrixFunctionExpr>),
    /// `f*(z) = conj(f(z̄))`.
    Star(Box<MatrixFunctionExpr>),
    /// `z ↦ f(t·z)` for a fixed real `t`.
    ScaleArg { t: f64, child: Box<MatrixFunctionExpr> },
}

use MatrixFunctionExpr as Expr;

impl MatrixFunctionExpr {
    pub fn inverse(f: Expr) -> Expr {
        Expr::Inverse(Box::new(f))
    }

    pub fn scale_arg(f: Expr, t: f64) -> Expr {
        Expr::ScaleArg {
            t,
            child: Box::new(f),
        }
    }

    /// Shape of the value, checking consistency of the whole tree.
    pub fn shape(&self) -> Result<(usize, usize)> {
        match self {
            Expr::Poly(p) => Ok((p.rows(), p.cols())),
            Expr::Const(m) => Ok(m.dims()),
            Expr::Sum(children) => {
                let first = children
                    .first()
                    .ok_or_else(|| Error::Schema("empty sum".into()))?
                    .shape()?;
                for ch in &children[1..] {
                    if ch.shape()? != first {
                        return Err(Error::Schema("sum of differently shaped terms".into()));
                    }
                }
                Ok(first)
            }
            Expr::Product(children) => {
                let mut shape = children
                    .first()
                    .ok_or_else(|| Error::Schema("empty product".into()))?
                    .shape()?;
                for ch in &children[1..] {
                    let s = ch.shape()?;
                    if s.0 != shape.1 {
                        return Err(Error::Schema("product of incompatible shapes".into()));
                    }
                    shape = (shape.0, s.1);
                }
                Ok(shape)
            }
            Expr::Inverse(ch) => {
                let s = ch.shape()?;
                if s.0 != s.1 {
                    return Err(Error::Schema("inverse of a non-square function".into()));
                }
                Ok(s)
            }
            Expr::Star(ch) => ch.shape(),
            Expr::ScaleArg { t, child } => {
                if !t.is_finite() {
                    return Err(Error::Schema("scale_arg needs a finite t".into()));
                }
                child.shape()
            }
        }
    }

    /// Number of variables, if any polynomial leaf fixes it. Errors on disagreement.
    pub fn nvars(&self) -> Result<Option<usize>> {
        let mut found: Option<usize> = None;
        let mut err = None;
        self.visit_polys(&mut |p| match found {
            Some(n) if n != p.nvars() => err = Some(Error::Schema("leaves disagree on nvars".into())),
            _ => found = Some(p.nvars()),
        });
        match err {
            Some(e) => Err(e),
            None => Ok(found),
        }
    }

    fn visit_polys(&self, f: &mut dyn FnMut(&MatrixPoly)) {
        match self {
            Expr::Poly(p) => f(p),
            Expr::Const(_) => {}
            Expr::Sum(ch) | Expr::Product(ch) => ch.iter().for_each(|c| c.visit_polys(f)),
            Expr::Inverse(ch) | Expr::Star(ch) | Expr::ScaleArg { child: ch, .. } => {
                ch.visit_polys(f)
            }
        }
    }

    /// True when every polynomial and constant leaf has real coefficients and no node
    /// introduces complex scaling, so that `f* = f` holds exactly.
    pub fn has_real_coefficients(&self) -> bool {
        match self {
            Expr::Poly(p) => p.has_real_coefficients(),
            Expr::Const(m) => m.is_real(),
            Expr::Sum(ch) | Expr::Product(ch) => ch.iter().all(Expr::has_real_coefficients),
            Expr::Inverse(ch) | Expr::Star(ch) | Expr::ScaleArg { child: ch, .. } => {
                ch.has_real_coefficients()
            }
        }
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Result<CMatrix> {
        match self {
            Expr::Poly(p) => {
                if z.len() != p.nvars() {
                    return Err(Error::Schema(format!(
                        "point has {} coordinates, polynomial has {} variables",
                        z.len(),
                        p.nvars()
                    )));
                }
                Ok(p.eval(z))
            }
            Expr::Const(m) => Ok(m.clone()),
            Expr::Sum(children) => {
                let mut acc = children[0].evaluate(z)?;
                for ch in &children[1..] {
                    acc = &acc + &ch.evaluate(z)?;
                }
                Ok(acc)
            }
            Expr::Product(children) => {
                let mut acc = children[0].evaluate(z)?;
                for ch in &children[1..] {
                    acc = &acc * &ch.evaluate(z)?;
                }
                Ok(acc)
            }
            Expr::Inverse(ch) => ch.evaluate(z)?.inverse().map_err(|e| match e {
                LinalgError::SingularMatrix { .. } => Error::SingularAtPoint {
                    point: point_pairs(z),
                },
                other => other.into(),
            }),
            Expr::Star(ch) => {
                let zbar: Vec<Complex64> = z.iter().map(|x| x.conj()).collect();
                Ok(ch.evaluate(&zbar)?.conj())
            }
            Expr::ScaleArg { t, child } => child.evaluate(&scale_point(z, *t)),
        }
    }
}

/// `f ↦ f*` with `f*(z) = conj(f(z̄))`.
///
/// Polynomial leaves get conjugated coefficients; other nodes are wrapped.
pub fn star_involution(f: &MatrixFunctionExpr) -> MatrixFunctionExpr {
    match f {
        Expr::Poly(p) => Expr::Poly(p.conj_coefficients()),
        Expr::Const(m) => Expr::Const(m.conj()),
        Expr::Star(inner) => (**inner).clone(),
        other => Expr::Star(Box::new(other.clone())),
    }
}

pub fn evaluate(f: &MatrixFunctionExpr, z: &[Complex64]) -> Result<CMatrix> {
    f.evaluate(z)
}

impl MatrixField for MatrixFunctionExpr {
    fn dims(&self) -> (usize, usize) {
        self.shape().expect("expression shape validated on construction")
    }

    fn eval(&self, z: &[Complex64]) -> Result<CMatrix> {
        self.evaluate(z)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    alpha: Vec<u32>,
    coeff: CMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ExprJson {
    Poly {
        dims: [usize; 2],
        nvars: usize,
        terms: Vec<TermJson>,
    },
    Const {
        value: CMatrix,
    },
    Sum {
        children: Vec<ExprJson>,
    },
    Product {
        children: Vec<ExprJson>,
    },
    Inverse {
        children: Vec<ExprJson>,
    },
    Star {
        children: Vec<ExprJson>,
    },
    ScaleArg {
        t: f64,
        children: Vec<ExprJson>,
    },
}

impl From<&Expr> for ExprJson {
    fn from(e: &Expr) -> Self {
        let kids = |v: &[Expr]| v.iter().map(ExprJson::from).collect();
        match e {
            Expr::Poly(p) => ExprJson::Poly {
                dims: [p.rows(), p.cols()],
                nvars: p.nvars(),
                terms: p
                    .terms()
                    .iter()
                    .map(|(a, k)| TermJson {
                        alpha: a.clone(),
                        coeff: k.clone(),
                    })
                    .collect(),
            },
            Expr::Const(m) => ExprJson::Const { value: m.clone() },
            Expr::Sum(ch) => ExprJson::Sum { children: kids(ch) },
            Expr::Product(ch) => ExprJson::Product { children: kids(ch) },
            Expr::Inverse(ch) => ExprJson::Inverse {
                children: vec![ExprJson::from(&**ch)],
            },
            Expr::Star(ch) => ExprJson::Star {
                children: vec![ExprJson::from(&**ch)],
            },
            Expr::ScaleArg { t, child } => ExprJson::ScaleArg {
                t: *t,
                children: vec![ExprJson::from(&**child)],
            },
        }
    }
}

fn single(mut children: Vec<ExprJson>, kind: &str) -> Result<Box<Expr>> {
    if children.len() != 1 {
        return Err(Error::Schema(format!("{kind} takes exactly one child")));
    }
    Ok(Box::new(Expr::try_from(children.remove(0))?))
}

impl TryFrom<ExprJson> for Expr {
    type Error = Error;
    fn try_from(j: ExprJson) -> Result<Expr> {
        let many = |v: Vec<ExprJson>, kind: &str| -> Result<Vec<Expr>> {
            if v.is_empty() {
                return Err(Error::Schema(format!("{kind} needs at least one child")));
            }
            v.into_iter().map(Expr::try_from).collect()
        };
        Ok(match j {
            ExprJson::Poly { dims, nvars, terms } => {
                for t in &terms {
                    if t.alpha.len() != nvars {
                        return Err(Error::Schema("alpha length differs from nvars".into()));
                    }
                    if t.coeff.dims() != (dims[0], dims[1]) {
                        return Err(Error::Schema("coefficient shape differs from dims".into()));
                    }
                }
                Expr::Poly(MatrixPoly::new(
                    dims[0],
                    dims[1],
                    nvars,
                    terms.into_iter().map(|t| (t.alpha, t.coeff)).collect(),
                ))
            }
            ExprJson::Const { value } => Expr::Const(value),
            ExprJson::Sum { children } => Expr::Sum(many(children, "sum")?),
            ExprJson::Product { children } => Expr::Product(many(children, "product")?),
            ExprJson::Inverse { children } => Expr::Inverse(single(children, "inverse")?),
            ExprJson::Star { children } => Expr::Star(single(children, "star")?),
            ExprJson::ScaleArg { t, children } => Expr::ScaleArg {
                t,
                child: single(children, "scale_arg")?,
            },
        })
    }
}

impl Serialize for MatrixFunctionExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExprJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixFunctionExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ExprJson::deserialize(d)?;
        let e = Expr::try_from(j).map_err(serde::de::Error::custom)?;
        e.shape().map_err(serde::de::Error::custom)?;
        e.nvars().map_err(serde::de::Error::custom)?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numc::c;

    fn e12_poly() -> Expr {
        // I + 0.5·z₁·E₁₂
        let e12 = CMatrix::from_real_rows(&[&[0.0, 0.5], &[0.0, 0.0]]);
        Expr::Poly(MatrixPoly::new(
            2,
            2,
            1,
            vec![(vec![0], CMatrix::identity(2)), (vec![1], e12)],
        ))
    }

    #[test]
    fn constant_leaf() {
        let k = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let f = Expr::Const(k.clone());
        assert_eq!(f.evaluate(&[c(0.3, 0.2)]).unwrap(), k);
    }

    #[test]
    fn inverse_node_matches_hand_inverse() {
        let f = Expr::inverse(e12_poly());
        let v = f.evaluate(&[c(1.0, 0.0)]).unwrap();
        let expected = CMatrix::from_real_rows(&[&[1.0, -0.5], &[0.0, 1.0]]);
        assert!(v.dist(&expected) < 1e-15);
    }

    #[test]
    fn singular_inverse_reports_point() {
        let f = Expr::inverse(Expr::Poly(MatrixPoly::scalar_monomial(vec![1], c(1.0, 0.0))));
        let err = f.evaluate(&[c(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::SingularAtPoint { .. }));
    }

    #[test]
    fn star_of_imaginary_monomial() {
        let f = Expr::Poly(MatrixPoly::scalar_monomial(vec![1], c(0.0, 1.0)));
        let g = star_involution(&f);
        let z = [c(0.4, -0.7)];
        assert_eq!(g.evaluate(&z).unwrap()[(0, 0)], c(0.0, -1.0) * z[0]);
    }

    #[test]
    fn star_node_evaluates_by_reflection() {
        let f = Expr::inverse(e12_poly().clone());
        let f = Expr::Product(vec![f, Expr::Const(CMatrix::identity(2).scale(c(0.0, 1.0)))]);
        let g = star_involution(&f);
        assert!(matches!(g, Expr::Star(_)));
        let z = [c(0.2, 0.6)];
        let zbar = [z[0].conj()];
        assert_eq!(g.evaluate(&z).unwrap(), f.evaluate(&zbar).unwrap().conj());
    }

    #[test]
    fn scale_arg_is_exact() {
        let f = e12_poly();
        let g = Expr::scale_arg(f.clone(), 0.5);
        let z = [c(0.8, 0.4)];
        assert_eq!(g.evaluate(&z).unwrap(), f.evaluate(&[z[0] * 0.5]).unwrap());
    }

    #[test]
    fn json_round_trip_and_schema() {
        let f = Expr::Product(vec![
            e12_poly(),
            Expr::scale_arg(Expr::inverse(e12_poly()), 0.25),
            Expr::Star(Box::new(Expr::Const(CMatrix::identity(2)))),
        ]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"kind":"product","children":[{"kind":"poly","dims":[2,2],"nvars":1,"terms":[{"alpha":[0],"coeff":[[[1.0,0.0]"#));
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_json_is_rejected() {
        let bad = r#"{"kind":"poly","dims":[2,2],"nvars":1,"terms":[{"alpha":[0,1],"coeff":[[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        assert!(serde_json::from_str::<Expr>(bad).is_err());
        let bad = r#"{"kind":"inverse","children":[]}"#;
        assert!(serde_json::from_str::<Expr>(bad).is_err());
    }
}
