//! CSV serialisation of Radon and trace tables.
//!
//! A table is written as a CSV file with columns `theta_1..theta_n, s,
//! order, value` (floats with 17 significant digits) and a JSON sidecar with
//! the grid metadata, stored next to it with the extension `.json`.

use crate::error::{Error, Result};
use crate::geometry::{OddDimension, SphereQuadrature};
use crate::radon::{RadonTable, SGrid};
use crate::trace::{TraceQuantity, TraceTable};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Sidecar {
    Radon {
        dim: usize,
        sphere_level: usize,
        s_grid: SGrid,
        max_order: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<f64>,
        field_digest: String,
    },
    Trace {
        dim: usize,
        sphere_level: usize,
        s_grid: SGrid,
        quantity: TraceQuantity,
        support_s: f64,
        deriv_orders: usize,
        field_digest: String,
    },
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Serialization(format!("{}: {e}", path.display()))
}

fn write_sidecar(csv_path: &Path, meta: &Sidecar) -> Result<()> {
    let path = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(meta).map_err(|e| io_err(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

fn read_sidecar(csv_path: &Path) -> Result<Sidecar> {
    let path = sidecar_path(csv_path);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

/// Writes `(j, k, order) ↦ value` in row-major order.
fn write_rows(
    path: &Path,
    sphere: &SphereQuadrature,
    grid: SGrid,
    orders: usize,
    value: impl Fn(usize, usize, usize) -> f64,
) -> Result<()> {
    let n = sphere.ambient_dim();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("theta_{i}")).collect();
    header.extend(["s".into(), "order".into(), "value".into()]);
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    let nodes = grid.nodes();
    for j in 0..sphere.len() {
        let theta: Vec<String> = sphere.node(j).iter().map(|t| format!("{t:.16e}")).collect();
        for (k, s) in nodes.iter().enumerate() {
            for o in 0..orders {
                let mut rec = theta.clone();
                rec.push(format!("{s:.16e}"));
                rec.push(o.to_string());
                rec.push(format!("{:.16e}", value(j, k, o)));
                w.write_record(&rec).map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads values written by [`write_rows`], checking directions and offsets
/// against the grids rebuilt from the sidecar.
fn read_rows(path: &Path, sphere: &SphereQuadrature, grid: SGrid, orders: usize) -> Result<Vec<f64>> {
    let n = sphere.ambient_dim();
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let expected = sphere.len() * grid.count * orders;
    let mut values = Vec::with_capacity(expected);
    let nodes = grid.nodes();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        if rec.len() != n + 3 {
            return Err(io_err(path, format!("row {i} has {} columns, expected {}", rec.len(), n + 3)));
        }
        if i >= expected {
            return Err(io_err(path, "more rows than the grids describe"));
        }
        let parse = |c: usize| -> Result<f64> {
            rec[c].parse::<f64>().map_err(|e| io_err(path, format!("row {i} column {c}: {e}")))
        };
        let (j, rest) = (i / (grid.count * orders), i % (grid.count * orders));
        let (k, o) = (rest / orders, rest % orders);
        let theta = sphere.node(j);
        for (c, t) in theta.iter().enumerate() {
            if (parse(c)? - t).abs() > 1e-14 {
                return Err(io_err(path, format!("row {i}: direction does not match the sphere rule")));
            }
        }
        if (parse(n)? - nodes[k]).abs() > 1e-14 * (1.0 + nodes[k].abs()) || rec[n + 1].parse::<usize>().ok() != Some(o) {
            return Err(io_err(path, format!("row {i}: offset or order out of sequence")));
        }
        values.push(parse(n + 2)?);
    }
    if values.len() != expected {
        return Err(io_err(path, format!("{} rows, expected {expected}", values.len())));
    }
    Ok(values)
}

pub fn write_radon_table(table: &RadonTable, path: &Path) -> Result<()> {
    let cols = table.max_order() + 1;
    write_rows(path, table.sphere(), table.s_grid(), cols, |j, k, o| table.value(j, k, o))?;
    write_sidecar(
        path,
        &Sidecar::Radon {
            dim: table.dim().n(),
            sphere_level: table.sphere().level(),
            s_grid: table.s_grid(),
            max_order: table.max_order(),
            support: table.support(),
            field_digest: table.field_digest().to_string(),
        },
    )
}

pub fn read_radon_table(path: &Path) -> Result<RadonTable> {
    let Sidecar::Radon { dim, sphere_level, s_grid, max_order, support, field_digest } = read_sidecar(path)? else {
        return Err(io_err(path, "sidecar describes a trace table, not a Radon table"));
    };
    let dim = OddDimension::new(dim)?;
    let sphere = SphereQuadrature::product(dim.n(), sphere_level)?;
    let values = read_rows(path, &sphere, s_grid, max_order + 1)?;
    let table = RadonTable::from_parts(dim, sphere, s_grid, max_order, values, field_digest)?;
    match support {
        Some(outer) => table.with_support(outer),
        None => Ok(table),
    }
}

pub fn write_trace_table(table: &TraceTable, path: &Path) -> Result<()> {
    let cols = table.deriv_orders() + 1;
    write_rows(path, table.sphere(), table.s_grid(), cols, |j, k, o| table.node_derivative(j, k, o))?;
    write_sidecar(
        path,
        &Sidecar::Trace {
            dim: table.dim().n(),
            sphere_level: table.sphere().level(),
            s_grid: table.s_grid(),
            quantity: table.quantity(),
            support_s: table.support_s(),
            deriv_orders: table.deriv_orders(),
            field_digest: table.field_digest().to_string(),
        },
    )
}

pub fn read_trace_table(path: &Path) -> Result<TraceTable> {
    let Sidecar::Trace { dim, sphere_level, s_grid, quantity, support_s, deriv_orders, field_digest } =
        read_sidecar(path)?
    else {
        return Err(io_err(path, "sidecar describes a Radon table, not a trace table"));
    };
    let dim = OddDimension::new(dim)?;
    let sphere = SphereQuadrature::product(dim.n(), sphere_level)?;
    let cols = deriv_orders + 1;
    let rows = read_rows(path, &sphere, s_grid, cols)?;
    let mut values = Vec::with_capacity(rows.len() / cols);
    let mut derivatives = Vec::with_capacity(rows.len() - rows.len() / cols);
    for chunk in rows.chunks(cols) {
        values.push(chunk[0]);
        derivatives.extend_from_slice(&chunk[1..]);
    }
    TraceTable::from_parts_with_derivatives(
        quantity,
        dim,
        sphere,
        s_grid,
        support_s,
        values,
        derivatives,
        deriv_orders,
        field_digest,
    )
}
