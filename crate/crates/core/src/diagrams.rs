//! The 23 named diagram values entering the closed-form second moment,
//! as rational functions of N, together with a canonical CUE monomial
//! realizing each diagram for oracle verification.
//!
//! Naming: D{p}{q} has p distinct row vertices and q distinct column
//! vertices; a/b/c distinguish diagrams with equal vertex counts. The
//! canonical monomials are transcribed from the combinator expansions:
//! the second-moment integrand couples row pairs to column pairs through
//! two alternating 4-cycles, and every diagram below is a vertex-merge
//! pattern of that base graph.
//!
//! D12 = ⟨|U_00|⁴|U_01|⁴⟩ also appears in the combinators but is not
//! part of the tabulated 23; `d12_*` carries its reconstruction
//! 4/((N+3)(N+2)(N+1)N), verified against the oracle.

use crate::error::{Error, Result};
use crate::weingarten::{Monomial, MonomialEvaluator};

/// Identifiers of the 23 tabulated diagram values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagramId {
    F11,
    E2,
    D13,
    D14,
    Da22,
    Db22,
    Dc22,
    Da23,
    Db23,
    Dc23,
    Da24,
    Db24,
    Dc24,
    Da32,
    Db32,
    Da33,
    Db33,
    Dc33,
    Da34,
    Db34,
    D42,
    D43,
    D44,
}

impl DiagramId {
    pub const ALL: [DiagramId; 23] = [
        DiagramId::F11,
        DiagramId::E2,
        DiagramId::D13,
        DiagramId::D14,
        DiagramId::Da22,
        DiagramId::Db22,
        DiagramId::Dc22,
        DiagramId::Da23,
        DiagramId::Db23,
        DiagramId::Dc23,
        DiagramId::Da24,
        DiagramId::Db24,
        DiagramId::Dc24,
        DiagramId::Da32,
        DiagramId::Db32,
        DiagramId::Da33,
        DiagramId::Db33,
        DiagramId::Dc33,
        DiagramId::Da34,
        DiagramId::Db34,
        DiagramId::D42,
        DiagramId::D43,
        DiagramId::D44,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DiagramId::F11 => "F11",
            DiagramId::E2 => "E2",
            DiagramId::D13 => "D13",
            DiagramId::D14 => "D14",
            DiagramId::Da22 => "Da22",
            DiagramId::Db22 => "Db22",
            DiagramId::Dc22 => "Dc22",
            DiagramId::Da23 => "Da23",
            DiagramId::Db23 => "Db23",
            DiagramId::Dc23 => "Dc23",
            DiagramId::Da24 => "Da24",
            DiagramId::Db24 => "Db24",
            DiagramId::Dc24 => "Dc24",
            DiagramId::Da32 => "Da32",
            DiagramId::Db32 => "Db32",
            DiagramId::Da33 => "Da33",
            DiagramId::Db33 => "Db33",
            DiagramId::Dc33 => "Dc33",
            DiagramId::Da34 => "Da34",
            DiagramId::Db34 => "Db34",
            DiagramId::D42 => "D42",
            DiagramId::D43 => "D43",
            DiagramId::D44 => "D44",
        }
    }

    pub fn parse(s: &str) -> Option<DiagramId> {
        DiagramId::ALL.iter().copied().find(|d| d.name().eq_ignore_ascii_case(s))
    }
}

/// Exact rational value of a diagram at integer N, as (numerator,
/// denominator). Denominators vanish only for N below the diagram's
/// vertex count, where the diagram never appears with nonzero weight.
pub fn closed_form_frac(id: DiagramId, n: i128) -> (i128, i128) {
    let n2 = n * n;
    match id {
        DiagramId::F11 => (1, n * (n + 1)),
        DiagramId::E2 => (-1, n * (n2 - 1)),
        DiagramId::D13 => (2, (n + 3) * (n + 2) * (n + 1) * n),
        DiagramId::D14 => (1, (n + 3) * (n + 2) * (n + 1) * n),
        DiagramId::Da22 => (n2 + n + 2, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Db22 => (8, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Dc22 => (-4, (n + 3) * (n + 2) * (n2 - 1) * n),
        DiagramId::Da23 => (n + 1, (n + 3) * (n + 2) * n2 * (n - 1)),
        DiagramId::Db23 => (-2, (n + 3) * (n + 2) * (n2 - 1) * n),
        DiagramId::Dc23 => (-1, (n + 3) * (n + 2) * (n + 1) * n2),
        DiagramId::Da24 => (1, (n + 3) * (n - 1) * n2),
        DiagramId::Db24 => (-1, (n + 3) * (n + 2) * (n2 - 1) * n),
        DiagramId::Dc24 => (2, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Da32 => (-1, (n + 3) * (n + 2) * (n + 1) * n2),
        DiagramId::Db32 => (4, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Da33 => (3 * n - 1, (n + 3) * (n2 - 4) * (n2 - 1) * n2),
        DiagramId::Db33 => (-(n2 + 1), (n + 3) * (n2 - 4) * (n2 - 1) * n2),
        DiagramId::Dc33 => (2, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Da34 => (1, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::Db34 => (-(n2 + 2 * n + 2), (n + 3) * (n2 - 4) * (n2 - 1) * n2),
        DiagramId::D42 => (2, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::D43 => (1, (n + 3) * (n + 2) * (n2 - 1) * n2),
        DiagramId::D44 => (n2 + 6, (n2 - 9) * (n2 - 4) * (n2 - 1) * n2),
    }
}

/// Floating-point value of the diagram's closed form at dimension N.
pub fn closed_form(id: DiagramId, dim_n: usize) -> f64 {
    let (num, den) = closed_form_frac(id, dim_n as i128);
    num as f64 / den as f64
}

/// Reconstructed D12 = ⟨|U_00|⁴|U_01|⁴⟩ = 4/((N+3)(N+2)(N+1)N).
pub fn d12_frac(n: i128) -> (i128, i128) {
    (4, (n + 3) * (n + 2) * (n + 1) * n)
}

pub fn d12_closed_form(dim_n: usize) -> f64 {
    let (num, den) = d12_frac(dim_n as i128);
    num as f64 / den as f64
}

/// (row, col) index pairs of the U (or U*) factors of a monomial.
pub type FactorList = Vec<(usize, usize)>;

/// Canonical monomial realizing each diagram, as U and U* factor lists.
///
/// Thick lines (|U|² pairs) appear as repeated (row, col) pairs in both
/// lists; e.g. F11 = ⟨|U_00|²|U_01|²⟩.
pub fn canonical_factors(id: DiagramId) -> (FactorList, FactorList) {
    match id {
        // k = 2 diagrams from the mean.
        DiagramId::F11 => (vec![(0, 0), (0, 1)], vec![(0, 0), (0, 1)]),
        DiagramId::E2 => (vec![(0, 0), (1, 1)], vec![(0, 1), (1, 0)]),

        // Single-row column moments.
        DiagramId::D13 => {
            (vec![(0, 0), (0, 0), (0, 1), (0, 2)], vec![(0, 0), (0, 0), (0, 1), (0, 2)])
        }
        DiagramId::D14 => {
            (vec![(0, 0), (0, 1), (0, 2), (0, 3)], vec![(0, 0), (0, 1), (0, 2), (0, 3)])
        }

        // Products of |U|² pairs.
        DiagramId::Da22 => {
            (vec![(0, 0), (0, 1), (1, 0), (1, 1)], vec![(0, 0), (0, 1), (1, 0), (1, 1)])
        }
        DiagramId::Da23 => {
            (vec![(0, 0), (0, 1), (1, 0), (1, 2)], vec![(0, 0), (0, 1), (1, 0), (1, 2)])
        }
        DiagramId::Da24 => {
            (vec![(0, 0), (0, 1), (1, 2), (1, 3)], vec![(0, 0), (0, 1), (1, 2), (1, 3)])
        }

        // Two disjoint alternating 4-cycles and their partial merges.
        DiagramId::D44 => {
            (vec![(0, 0), (1, 1), (2, 3), (3, 2)], vec![(0, 1), (1, 0), (2, 2), (3, 3)])
        }
        DiagramId::Da34 => {
            (vec![(0, 0), (1, 1), (0, 3), (2, 2)], vec![(0, 1), (1, 0), (0, 2), (2, 3)])
        }
        DiagramId::Db34 => {
            (vec![(0, 0), (0, 1), (1, 3), (2, 2)], vec![(0, 0), (0, 1), (1, 2), (2, 3)])
        }
        DiagramId::Db24 => {
            (vec![(0, 0), (0, 1), (0, 3), (1, 2)], vec![(0, 0), (0, 1), (0, 2), (1, 3)])
        }
        DiagramId::Dc24 => {
            (vec![(0, 0), (1, 1), (1, 2), (0, 3)], vec![(0, 1), (1, 0), (0, 2), (1, 3)])
        }

        // Two 4-cycles sharing one column.
        DiagramId::D43 => {
            (vec![(0, 0), (1, 1), (2, 2), (3, 0)], vec![(0, 1), (1, 0), (2, 0), (3, 2)])
        }
        DiagramId::Db33 => {
            (vec![(0, 0), (0, 1), (1, 2), (2, 0)], vec![(0, 0), (0, 1), (1, 0), (2, 2)])
        }

        // Two 4-cycles on the same two columns.
        DiagramId::D42 => {
            (vec![(0, 0), (1, 1), (2, 1), (3, 0)], vec![(0, 1), (1, 0), (2, 0), (3, 1)])
        }
        DiagramId::Da32 => {
            (vec![(0, 0), (0, 1), (1, 1), (2, 0)], vec![(0, 0), (0, 1), (1, 0), (2, 1)])
        }
        DiagramId::Db32 => {
            (vec![(0, 0), (0, 0), (1, 1), (2, 1)], vec![(0, 1), (0, 1), (1, 0), (2, 0)])
        }

        // Shared-column merges with one mixed vertex (from the A12 sums).
        DiagramId::Da33 => {
            (vec![(0, 0), (0, 2), (1, 1), (2, 0)], vec![(0, 1), (0, 0), (1, 0), (2, 2)])
        }
        DiagramId::Dc33 => {
            (vec![(0, 0), (0, 0), (1, 1), (2, 2)], vec![(0, 1), (0, 2), (1, 0), (2, 0)])
        }
        DiagramId::Db23 => {
            (vec![(0, 0), (0, 1), (0, 2), (1, 0)], vec![(0, 1), (0, 0), (0, 0), (1, 2)])
        }
        DiagramId::Dc23 => {
            (vec![(0, 0), (0, 2), (1, 1), (1, 0)], vec![(0, 1), (0, 0), (1, 0), (1, 2)])
        }

        // Doubled-line diagrams on two columns (from the A13 sums).
        DiagramId::Db22 => {
            (vec![(0, 0), (0, 0), (1, 1), (1, 1)], vec![(0, 1), (0, 1), (1, 0), (1, 0)])
        }
        DiagramId::Dc22 => {
            (vec![(0, 0), (0, 1), (0, 1), (1, 0)], vec![(0, 1), (0, 0), (0, 0), (1, 1)])
        }
    }
}

/// Oracle value of the named diagram at dimension N: the Weingarten
/// average of its canonical monomial.
pub fn diagram_value(id: DiagramId, dim_n: usize) -> Result<f64> {
    let (u, ustar) = canonical_factors(id);
    let mon = Monomial::from_factors(&u, &ustar)?;
    let k = mon.order();
    if dim_n < k {
        return Err(Error::SingularGram { k, n: dim_n });
    }
    let mut ev = MonomialEvaluator::new(dim_n)?;
    ev.average(&mon)
}

/// One row of a diagram verification report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagramCheck {
    pub id: String,
    pub dim_n: usize,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_error: f64,
    pub pass: bool,
}

/// Compare every tabulated closed form (plus the D12 reconstruction)
/// against the oracle at the given dimensions.
pub fn verify_diagrams(dims: &[usize], rel_tol: f64) -> Result<Vec<DiagramCheck>> {
    let mut out = Vec::new();
    for &dim_n in dims {
        if dim_n < 4 {
            return Err(Error::SingularGram { k: 4, n: dim_n });
        }
        let mut ev = MonomialEvaluator::new(dim_n)?;
        for id in DiagramId::ALL {
            let (u, ustar) = canonical_factors(id);
            let oracle = ev.average(&Monomial::from_factors(&u, &ustar)?)?;
            let cf = closed_form(id, dim_n);
            let rel = (oracle - cf).abs() / cf.abs().max(f64::MIN_POSITIVE);
            out.push(DiagramCheck {
                id: id.name().to_string(),
                dim_n,
                closed_form: cf,
                oracle,
                rel_error: rel,
                pass: rel <= rel_tol,
            });
        }
        let d12_mon = Monomial::from_factors(
            &[(0, 0), (0, 0), (0, 1), (0, 1)],
            &[(0, 0), (0, 0), (0, 1), (0, 1)],
        )?;
        let oracle = ev.average(&d12_mon)?;
        let cf = d12_closed_form(dim_n);
        let rel = (oracle - cf).abs() / cf.abs().max(f64::MIN_POSITIVE);
        out.push(DiagramCheck {
            id: "D12".to_string(),
            dim_n,
            closed_form: cf,
            oracle,
            rel_error: rel,
            pass: rel <= rel_tol,
        });
    }
    Ok(out)
}
