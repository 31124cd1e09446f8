//! Plain-text tableau files.
//!
//! ```text
//! # comment
//! s: 9
//! u: 9            # or `none`
//! c: 0 1/14 1/7 ...
//! A:
//! 0 0 0 ...       # s rows of s entries
//! b: ...
//! B:
//! ...             # interpolant rows (θ¹ first), possibly none
//! d:
//! ...             # difference vectors, possibly none
//! ```
//!
//! Fields appear in exactly this order. Entries are decimals or `p/q` rationals.
//! Tableaux carrying exact coefficients are written as rationals, everything
//! else with 17 significant digits.

use nalgebra::{DMatrix, DVector};

use super::{verify_order, ButcherTableau, ContinuousPair, ExactCoefficients, Interpolant, Ratio};
use crate::error::{Result, RkError};

const FIELDS: [&str; 7] = ["s", "u", "c", "A", "b", "B", "d"];

fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn push_row<T: std::fmt::Display>(out: &mut String, items: impl IntoIterator<Item = T>) {
    let row: Vec<String> = items.into_iter().map(|v| v.to_string()).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

/// Serialize a pair.
pub fn write_pair(pair: &ContinuousPair) -> String {
    let t = &pair.tableau;
    let s = t.stages();
    let mut out = String::new();
    out.push_str(&format!(
        "# continuous ({}, {}) pair, {} stages\n",
        pair.orders.0, pair.orders.1, s
    ));
    out.push_str(&format!("s: {s}\n"));
    match t.fsal_stage() {
        Some(u) => out.push_str(&format!("u: {u}\n")),
        None => out.push_str("u: none\n"),
    }
    match t.exact() {
        Some(ex) => {
            out.push_str("c: ");
            push_row(&mut out, ex.c.iter());
            out.push_str("A:\n");
            for row in &ex.a {
                let full = (0..s).map(|j| row.get(j).copied().unwrap_or(Ratio::int(0)));
                push_row(&mut out, full);
            }
            out.push_str("b: ");
            push_row(&mut out, ex.b.iter());
        }
        None => {
            out.push_str("c: ");
            push_row(&mut out, t.c().iter().map(|v| fmt_f64(*v)));
            out.push_str("A:\n");
            for row in t.a().row_iter() {
                push_row(&mut out, row.iter().map(|v| fmt_f64(*v)));
            }
            out.push_str("b: ");
            push_row(&mut out, t.b().iter().map(|v| fmt_f64(*v)));
        }
    }
    out.push_str("B:\n");
    if let Some(interp) = &pair.interpolant {
        for row in interp.coeffs().row_iter() {
            push_row(&mut out, row.iter().map(|v| fmt_f64(*v)));
        }
    }
    out.push_str("d:\n");
    for d in &pair.d_basis {
        push_row(&mut out, d.iter().map(|v| fmt_f64(*v)));
    }
    out
}

#[derive(Clone, Copy)]
struct Number {
    value: f64,
    exact: Option<Ratio>,
}

fn parse_number(tok: &str, line: usize) -> Result<Number> {
    let err = || RkError::Parse {
        line,
        msg: format!("bad number `{tok}`"),
    };
    if let Some((p, q)) = tok.split_once('/') {
        let (pi, qi) = (p.parse::<i64>().ok(), q.parse::<i64>().ok());
        let value = p.parse::<f64>().map_err(|_| err())? / q.parse::<f64>().map_err(|_| err())?;
        if !value.is_finite() {
            return Err(err());
        }
        let exact = match (pi, qi) {
            (Some(n), Some(d)) if d > 0 => Some(Ratio::new(n, d)),
            _ => None,
        };
        return Ok(Number { value, exact });
    }
    if let Ok(n) = tok.parse::<i64>() {
        return Ok(Number {
            value: n as f64,
            exact: Some(Ratio::int(n)),
        });
    }
    let value: f64 = tok.parse().map_err(|_| err())?;
    if !value.is_finite() {
        return Err(err());
    }
    Ok(Number { value, exact: None })
}

struct Field {
    key: String,
    line: usize,
    inline: Vec<Number>,
    rows: Vec<(usize, Vec<Number>)>,
}

fn parse_row(text: &str, line: usize) -> Result<Vec<Number>> {
    text.split_whitespace().map(|t| parse_number(t, line)).collect()
}

/// Parse a pair written by [`write_pair`] (or by hand).
pub fn read_pair(text: &str) -> Result<ContinuousPair> {
    let mut fields: Vec<Field> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some((key, rest)) = content.split_once(':') {
            let key = key.trim().to_string();
            let expected = FIELDS.get(fields.len()).copied();
            if expected != Some(key.as_str()) {
                return Err(RkError::Parse {
                    line,
                    msg: format!(
                        "expected field `{}`, found `{key}`",
                        expected.unwrap_or("<end>")
                    ),
                });
            }
            let rest = rest.trim();
            let inline = if key == "u" && rest == "none" {
                Vec::new()
            } else {
                parse_row(rest, line)?
            };
            fields.push(Field {
                key,
                line,
                inline,
                rows: Vec::new(),
            });
        } else {
            let Some(field) = fields.last_mut() else {
                return Err(RkError::Parse {
                    line,
                    msg: "data before the first field".into(),
                });
            };
            field.rows.push((line, parse_row(content, line)?));
        }
    }
    if fields.len() != FIELDS.len() {
        return Err(RkError::Parse {
            line: text.lines().count(),
            msg: format!("missing field `{}`", FIELDS[fields.len()]),
        });
    }

    let scalar = |f: &Field| -> Result<Option<usize>> {
        match f.inline.as_slice() {
            [] if f.key == "u" => Ok(None),
            [n] if n.value >= 1.0 && n.value.fract() == 0.0 => Ok(Some(n.value as usize)),
            _ => Err(RkError::Parse {
                line: f.line,
                msg: format!("field `{}` needs one positive integer", f.key),
            }),
        }
    };
    let s = scalar(&fields[0])?.expect("s is required");
    let u = scalar(&fields[1])?;
    let vector = |f: &Field| -> Result<Vec<Number>> {
        if f.inline.len() != s || !f.rows.is_empty() {
            return Err(RkError::Parse {
                line: f.line,
                msg: format!("field `{}` needs {s} entries on one line", f.key),
            });
        }
        Ok(f.inline.clone())
    };
    let matrix = |f: &Field, nrows: Option<usize>| -> Result<Vec<Vec<Number>>> {
        if !f.inline.is_empty() {
            return Err(RkError::Parse {
                line: f.line,
                msg: format!("field `{}` starts rows on the next line", f.key),
            });
        }
        if let Some(n) = nrows {
            if f.rows.len() != n {
                return Err(RkError::Parse {
                    line: f.line,
                    msg: format!("field `{}` needs {n} rows, found {}", f.key, f.rows.len()),
                });
            }
        }
        f.rows
            .iter()
            .map(|(line, row)| {
                if row.len() == s {
                    Ok(row.clone())
                } else {
                    Err(RkError::Parse {
                        line: *line,
                        msg: format!("row has {} entries, expected {s}", row.len()),
                    })
                }
            })
            .collect()
    };
    let c = vector(&fields[2])?;
    let a = matrix(&fields[3], Some(s))?;
    let b = vector(&fields[4])?;
    let interp_rows = matrix(&fields[5], None)?;
    let d_rows = matrix(&fields[6], None)?;

    let all_exact = c.iter().chain(a.iter().flatten()).chain(&b).all(|n| n.exact.is_some());
    let tableau = if all_exact {
        let ex = |v: &[Number]| v.iter().map(|n| n.exact.expect("checked")).collect::<Vec<_>>();
        let exact = ExactCoefficients {
            c: ex(&c),
            a: a.iter().enumerate().map(|(i, row)| ex(&row[..i])).collect(),
            b: ex(&b),
        };
        // entries on or above the diagonal must still be zero
        for (i, row) in a.iter().enumerate() {
            if row[i..].iter().any(|n| n.value != 0.0) {
                return Err(RkError::Parse {
                    line: fields[3].rows[i].0,
                    msg: "A must be strictly lower triangular".into(),
                });
            }
        }
        ButcherTableau::from_exact(exact, u)?
    } else {
        let vals = |v: &[Number]| DVector::from_iterator(v.len(), v.iter().map(|n| n.value));
        let mut am = DMatrix::zeros(s, s);
        for (i, row) in a.iter().enumerate() {
            for (j, n) in row.iter().enumerate() {
                am[(i, j)] = n.value;
            }
        }
        ButcherTableau::new(vals(&c), am, vals(&b), u)?
    };

    let interpolant = if interp_rows.is_empty() {
        None
    } else {
        let mut m = DMatrix::zeros(interp_rows.len(), s);
        for (i, row) in interp_rows.iter().enumerate() {
            for (j, n) in row.iter().enumerate() {
                m[(i, j)] = n.value;
            }
        }
        Some(Interpolant::new(m))
    };
    let d_basis: Vec<DVector<f64>> = d_rows
        .iter()
        .map(|row| DVector::from_iterator(s, row.iter().map(|n| n.value)))
        .collect();

    let bx = tableau.b().as_slice().to_vec();
    let high = verify_order(&tableau, &bx, 6)?.satisfied_order(1e-10);
    let low = d_basis
        .iter()
        .map(|d| {
            let x: Vec<f64> = bx.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
            verify_order(&tableau, &x, 6).map(|r| r.satisfied_order(1e-10))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .unwrap_or(high);
    Ok(ContinuousPair {
        tableau,
        interpolant,
        d_basis,
        orders: (low, high),
    })
}
