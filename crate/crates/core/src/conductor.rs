//! Conductors of sums of characters and the newform dimension tables they
//! determine on both groups.
//!
//! The conductor of a direct sum is taken to be the sum of the conductor
//! exponents; epsilon factors themselves are not computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A character of `E^x` through its conductor exponent: `0` is unramified,
/// `a >= 1` means trivial on `1 + p^a` but not on `1 + p^{a-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterDatum {
    pub depth: u32,
    #[serde(default)]
    pub label: String,
}

impl CharacterDatum {
    pub fn new(depth: u32) -> Self {
        CharacterDatum { depth, label: String::new() }
    }
}

/// A parameter of dimension `2n + 1` given as a sum of characters. The
/// flags are declarations echoed into the table, never checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterDatum {
    pub n: usize,
    pub components: Vec<CharacterDatum>,
    #[serde(default = "yes")]
    pub conjugate_orthogonal: bool,
    #[serde(default = "yes")]
    pub generic: bool,
    #[serde(default = "yes")]
    pub tempered: bool,
}

fn yes() -> bool {
    true
}

impl ParameterDatum {
    pub fn new(n: usize, components: Vec<CharacterDatum>) -> Result<Self> {
        if components.len() != 2 * n + 1 {
            return Err(Error::ConfigInvalid(format!(
                "{} components for n = {n}, need {}",
                components.len(),
                2 * n + 1
            )));
        }
        Ok(ParameterDatum { n, components, conjugate_orthogonal: true, generic: true, tempered: true })
    }

    pub fn from_depths(n: usize, depths: &[u32]) -> Result<Self> {
        Self::new(n, depths.iter().map(|&a| CharacterDatum::new(a)).collect())
    }
}

pub fn conductor(phi: &ParameterDatum) -> u32 {
    phi.components.iter().map(|c| c.depth).sum()
}

/// A table cell: exact, or only a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Exact(u64),
    AtLeast(u64),
    /// Nonzero, with no formula available.
    Unspecified,
}

impl Dim {
    pub fn lower_bound(&self) -> u64 {
        match *self {
            Dim::Exact(d) | Dim::AtLeast(d) => d,
            Dim::Unspecified => 1,
        }
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dim::Exact(d) => write!(f, "{d}"),
            Dim::AtLeast(d) => write!(f, ">={d}"),
            Dim::Unspecified => write!(f, "unspecified(>=1)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NewformRow {
    pub m: u32,
    pub gl_dim: Dim,
    pub h_dim: Dim,
    pub notes: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NewformTable {
    pub n: usize,
    pub conductor: u32,
    pub conjugate_orthogonal: bool,
    pub generic: bool,
    pub tempered: bool,
    pub rows: Vec<NewformRow>,
}

const MONOTONE_NOTE: &str = "h dim at m+2 >= h dim at m";

pub fn newform_dims(phi: &ParameterDatum, m_max: u32) -> NewformTable {
    let c = conductor(phi);
    let old = 2 * phi.n as u64 + 1;
    let rows = (0..=m_max)
        .map(|m| {
            let (gl_dim, h_dim, notes) = if m < c {
                (Dim::Exact(0), Dim::Exact(0), "below conductor")
            } else if m == c {
                (Dim::Exact(1), Dim::Exact(1), "newform")
            } else if m == c + 1 {
                (Dim::Exact(old), Dim::AtLeast(1), MONOTONE_NOTE)
            } else {
                (Dim::Unspecified, Dim::AtLeast(1), MONOTONE_NOTE)
            };
            NewformRow { m, gl_dim, h_dim, notes: notes.into() }
        })
        .collect();
    NewformTable {
        n: phi.n,
        conductor: c,
        conjugate_orthogonal: phi.conjugate_orthogonal,
        generic: phi.generic,
        tempered: phi.tempered,
        rows,
    }
}

impl NewformTable {
    /// Columns `m,gl_dim,h_dim,notes`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(["m", "gl_dim", "h_dim", "notes"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.m.to_string(), r.gl_dim.to_string(), r.h_dim.to_string(), r.notes.clone()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }

    /// Lower bounds in the `h` column never drop from `m` to `m + 2`.
    pub fn h_monotone(&self) -> bool {
        self.rows.windows(3).all(|w| w[2].h_dim.lower_bound() >= w[0].h_dim.lower_bound())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conductor_is_additive() {
        assert_eq!(conductor(&ParameterDatum::from_depths(1, &[0, 0, 0]).unwrap()), 0);
        assert_eq!(conductor(&ParameterDatum::from_depths(1, &[1, 1, 0]).unwrap()), 2);
        assert_eq!(conductor(&ParameterDatum::from_depths(2, &[2, 0, 0, 0, 1]).unwrap()), 3);
        assert_eq!(conductor(&ParameterDatum::from_depths(2, &[1, 0, 0, 2, 0]).unwrap()), 3);
    }

    #[test]
    fn wrong_component_count() {
        assert!(ParameterDatum::from_depths(1, &[0, 0]).is_err());
    }

    #[test]
    fn unramified_n1_table() {
        let t = newform_dims(&ParameterDatum::from_depths(1, &[0, 0, 0]).unwrap(), 2);
        let gl: Vec<_> = t.rows.iter().map(|r| r.gl_dim).collect();
        let h: Vec<_> = t.rows.iter().map(|r| r.h_dim).collect();
        assert_eq!(gl, [Dim::Exact(1), Dim::Exact(3), Dim::Unspecified]);
        assert_eq!(h, [Dim::Exact(1), Dim::AtLeast(1), Dim::AtLeast(1)]);
        assert!(t.h_monotone());
    }

    #[test]
    fn below_and_at_conductor() {
        let t = newform_dims(&ParameterDatum::from_depths(1, &[1, 1, 0]).unwrap(), 3);
        assert_eq!((t.rows[0].gl_dim, t.rows[0].h_dim), (Dim::Exact(0), Dim::Exact(0)));
        assert_eq!((t.rows[1].gl_dim, t.rows[1].h_dim), (Dim::Exact(0), Dim::Exact(0)));
        assert_eq!((t.rows[2].gl_dim, t.rows[2].h_dim), (Dim::Exact(1), Dim::Exact(1)));
        let t = newform_dims(&ParameterDatum::from_depths(1, &[1, 0, 0]).unwrap(), 1);
        assert_eq!((t.rows[1].gl_dim, t.rows[1].h_dim), (Dim::Exact(1), Dim::Exact(1)));
    }

    #[test]
    fn csv_bytes() {
        let t = newform_dims(&ParameterDatum::from_depths(2, &[0; 5]).unwrap(), 2);
        assert_eq!(
            t.to_csv(),
            "m,gl_dim,h_dim,notes\n0,1,1,newform\n1,5,>=1,h dim at m+2 >= h dim at m\n\
             2,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n"
        );
    }
}
