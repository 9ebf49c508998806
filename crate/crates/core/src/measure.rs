//! Finitely supported probability measures on PSL(2,R) and their JSON form.
//!
//! ```json
//! {"name": "two_gen(3)",
//!  "atoms": [{"m": [["4/5","-3/5"],["3/5","4/5"]], "w": "1/2"},
//!            {"m": [["28/27","0"],["0","27/28"]], "w": "1/2"}]}
//! ```
//!
//! An atom may carry `"f": [[a, b], [c, d]]` with JSON numbers instead of
//! `"m"`; such atoms can be simulated but not enumerated exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde_json::{json, Value};

use crate::algebraic::{ExactMatrix, ExactScalar};
use crate::error::{Error, Result};
use crate::sl2::GroupElement;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub exact: Option<ExactMatrix>,
    pub element: GroupElement,
    pub weight: BigRational,
}

#[derive(Clone, Debug)]
pub struct MeasureSpec {
    pub name: Option<String>,
    pub atoms: Vec<Atom>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for MeasureSpec {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.atoms == o.atoms
    }
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ParseError { location: location.into(), message: message.into() }
}

impl MeasureSpec {
    /// Validates weights (positive, exact sum one) and determinants.
    pub fn new(name: Option<String>, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut sum = BigRational::zero();
        for (i, a) in atoms.iter().enumerate() {
            if !a.weight.is_positive() {
                return Err(Error::WeightsNotProbability(format!("atom {i} has weight {}", a.weight)));
            }
            sum += &a.weight;
            if let Some(m) = &a.exact {
                if m.det()? != ExactScalar::one() {
                    return Err(Error::DeterminantNotOne(format!("atoms[{i}]")));
                }
            } else if (a.element.det() - 1.0).abs() > 1e-12 {
                return Err(Error::DeterminantNotOne(format!("atoms[{i}]")));
            }
        }
        if !sum.is_one() {
            return Err(Error::WeightsNotProbability(sum.to_string()));
        }
        let mut d = 1;
        for a in &atoms {
            if let Some(m) = &a.exact {
                let f = m.field()?;
                if f != 1 {
                    if d != 1 && d != f {
                        return Err(Error::MixedFields(d, f));
                    }
                    d = f;
                }
            }
        }
        let w: Vec<f64> = atoms.iter().map(|a| a.weight.to_f64().unwrap_or(0.0)).collect();
        let sampler = WeightedIndex::new(w).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Ok(MeasureSpec { name, atoms, sampler })
    }

    /// Equal weights on exact matrices.
    pub fn uniform_exact(name: &str, mats: Vec<ExactMatrix>) -> Result<Self> {
        let w = BigRational::new(BigInt::one(), BigInt::from(mats.len().max(1)));
        let atoms = mats
            .into_iter()
            .map(|m| {
                Ok(Atom { element: m.to_group_element()?, exact: Some(m), weight: w.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(Some(name.to_string()), atoms)
    }

    /// Equal weights on floating-point elements.
    pub fn uniform_float(name: &str, elements: Vec<GroupElement>) -> Result<Self> {
        let w = BigRational::new(BigInt::one(), BigInt::from(elements.len().max(1)));
        let atoms = elements.into_iter().map(|g| Atom { exact: None, element: g, weight: w.clone() }).collect();
        Self::new(Some(name.to_string()), atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.atoms.iter().all(|a| a.exact.is_some())
    }

    pub fn exact_matrices(&self) -> Result<Vec<ExactMatrix>> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, a)| a.exact.clone().ok_or(Error::NotExact(i)))
            .collect()
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.atoms.iter().map(|a| a.element).collect()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight.to_f64().unwrap_or(0.0)).collect()
    }

    /// Largest operator norm over the support.
    pub fn max_norm(&self) -> f64 {
        self.atoms.iter().map(|a| a.element.norm()).fold(1.0, f64::max)
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            0
        } else {
            self.sampler.sample(rng)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &GroupElement {
        &self.atoms[self.sample_index(rng)].element
    }

    /// Every support element is within `tol` of a rotation, so the walk
    /// stays in a compact subgroup and `χ = 0`.
    pub fn is_compact(&self, tol: f64) -> bool {
        self.atoms.iter().all(|a| a.element.norm() <= 1.0 + tol)
    }

    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self
            .atoms
            .iter()
            .map(|a| match &a.exact {
                Some(m) => json!({
                    "m": [[m.m[0].to_string(), m.m[1].to_string()], [m.m[2].to_string(), m.m[3].to_string()]],
                    "w": a.weight.to_string(),
                }),
                None => {
                    let g = a.element.as_array();
                    json!({"f": [[g[0], g[1]], [g[2], g[3]]], "w": a.weight.to_string()})
                }
            })
            .collect();
        let mut v = json!({ "atoms": atoms });
        if let Some(n) = &self.name {
            v["name"] = json!(n);
        }
        v
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| parse_err("$", "expected an object"))?;
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(parse_err("name", "expected a string")),
        };
        let list = obj
            .get("atoms")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("atoms", "expected an array of atoms"))?;
        let mut atoms = Vec::with_capacity(list.len());
        for (i, a) in list.iter().enumerate() {
            let loc = format!("atoms[{i}]");
            let w = a
                .get("w")
                .ok_or_else(|| parse_err(format!("{loc}.w"), "missing weight"))?;
            let weight = match w {
                Value::String(s) => {
                    let x: ExactScalar = s.parse().map_err(|e| parse_err(format!("{loc}.w"), e))?;
                    if !x.is_rational() {
                        return Err(parse_err(format!("{loc}.w"), "weight must be rational"));
                    }
                    x.a
                }
                Value::Number(n) if n.is_u64() || n.is_i64() => {
                    BigRational::from_integer(BigInt::from(n.as_i64().unwrap_or(0)))
                }
                _ => return Err(parse_err(format!("{loc}.w"), "weight must be an exact rational string")),
            };
            let atom = if let Some(m) = a.get("m") {
                let entries = matrix_entries(m, &format!("{loc}.m"), |x, l| match x {
                    Value::String(s) => s.parse::<ExactScalar>().map_err(|e| parse_err(l, e)),
                    Value::Number(n) if n.is_i64() => Ok(ExactScalar::int(n.as_i64().unwrap())),
                    _ => Err(parse_err(l, "expected an exact scalar string")),
                })?;
                let m = ExactMatrix { m: entries };
                m.field()?;
                if m.det()? != ExactScalar::one() {
                    return Err(Error::DeterminantNotOne(loc));
                }
                Atom { element: m.to_group_element()?, exact: Some(m), weight }
            } else if let Some(f) = a.get("f") {
                let e = matrix_entries(f, &format!("{loc}.f"), |x, l| {
                    x.as_f64().ok_or_else(|| parse_err(l, "expected a number"))
                })?;
                let det = e[0] * e[3] - e[1] * e[2];
                if (det - 1.0).abs() > 1e-12 {
                    return Err(Error::DeterminantNotOne(loc));
                }
                Atom { exact: None, element: GroupElement::from_array(e)?, weight }
            } else {
                return Err(parse_err(loc, "atom needs \"m\" (exact) or \"f\" (float) entries"));
            };
            atoms.push(atom);
        }
        Self::new(name, atoms)
    }
}

fn matrix_entries<T: Clone>(
    v: &Value,
    loc: &str,
    parse: impl Fn(&Value, String) -> Result<T>,
) -> Result<[T; 4]> {
    let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(|| parse_err(loc, "expected a 2x2 array"))?;
    let mut out = Vec::with_capacity(4);
    for (i, row) in rows.iter().enumerate() {
        let cols = row
            .as_array()
            .filter(|c| c.len() == 2)
            .ok_or_else(|| parse_err(format!("{loc}[{i}]"), "expected a row of two entries"))?;
        for (j, x) in cols.iter().enumerate() {
            out.push(parse(x, format!("{loc}[{i}][{j}]"))?);
        }
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_GEN_3: &str = r#"{"atoms":[{"m":[["4/5","-3/5"],["3/5","4/5"]],"w":"1/2"},{"m":[["28/27","0"],["0","27/28"]],"w":"1/2"}]}"#;

    #[test]
    fn parses_two_gen_3() {
        let s = MeasureSpec::from_json_str(TWO_GEN_3).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.is_exact());
        let back = MeasureSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_w = TWO_GEN_3.replacen("\"1/2\"", "\"1/6\"", 1);
        assert!(matches!(MeasureSpec::from_json_str(&bad_w), Err(Error::WeightsNotProbability(s)) if s == "2/3"));
        let bad_det = r#"{"atoms":[{"m":[["1+1*sqrt(5)","0"],["0","1"]],"w":"1"}]}"#;
        assert!(matches!(MeasureSpec::from_json_str(bad_det), Err(Error::DeterminantNotOne(l)) if l == "atoms[0]"));
        let bad_entry = r#"{"atoms":[{"m":[["1","x"],["0","1"]],"w":"1"}]}"#;
        match MeasureSpec::from_json_str(bad_entry) {
            Err(Error::ParseError { location, .. }) => assert_eq!(location, "atoms[0].m[0][1]"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(MeasureSpec::from_json_str("{\"atoms\": ["), Err(Error::ParseError { .. })));
        let mixed = r#"{"atoms":[{"m":[["1+1*sqrt(2)","0"],["0","-1+1*sqrt(2)"]],"w":"1/2"},{"m":[["2+1*sqrt(3)","0"],["0","2-1*sqrt(3)"]],"w":"1/2"}]}"#;
        assert!(matches!(MeasureSpec::from_json_str(mixed), Err(Error::MixedFields(2, 3))));
    }

    #[test]
    fn float_atoms() {
        let s = r#"{"name":"rot","atoms":[{"f":[[1.0,0.0],[0.0,1.0]],"w":"1"}]}"#;
        let m = MeasureSpec::from_json_str(s).unwrap();
        assert!(!m.is_exact());
        assert!(matches!(m.exact_matrices(), Err(Error::NotExact(0))));
        assert_eq!(MeasureSpec::from_json(&m.to_json()).unwrap(), m);
    }
}
