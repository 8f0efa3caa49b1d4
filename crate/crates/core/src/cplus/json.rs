//! `{"op": name, "args": [...]}` encoding of expression trees.

use serde_json::{json, Value};

use super::{Expr, RadialTable};
use crate::error::{Error, Result};
use crate::geometry::{Metric, Point};
use crate::maps::Diffeo;

fn node(op: &str, args: Vec<Value>) -> Value {
    json!({ "op": op, "args": args })
}

fn table_json(t: &RadialTable) -> Value {
    Value::Array(t.knots().iter().map(|(r, v)| json!([r, v])).collect())
}

pub(super) fn expr_to_json(e: &Expr) -> Value {
    let bin = |op: &str, a: &Expr, b: &Expr| node(op, vec![expr_to_json(a), expr_to_json(b)]);
    match e {
        Expr::Const(c) => node("const", vec![json!(c)]),
        Expr::Norm(m) => node("norm", vec![json!(m.name())]),
        Expr::Coord(i) => node("coord", vec![json!(i)]),
        Expr::Add(a, b) => bin("add", a, b),
        Expr::Sub(a, b) => bin("sub", a, b),
        Expr::Mul(a, b) => bin("mul", a, b),
        Expr::Min(a, b) => bin("min", a, b),
        Expr::Max(a, b) => bin("max", a, b),
        Expr::Exp2Neg(u) => node("exp2neg", vec![expr_to_json(u)]),
        Expr::Recip(u) => node("recip", vec![expr_to_json(u)]),
        Expr::Radial { metric, table } => node("radial", vec![json!(metric.name()), table_json(table)]),
        Expr::RadialLog2 { metric, table } => node("radial_log2", vec![json!(metric.name()), table_json(table)]),
        Expr::Clamp { arg, lo, hi } => node("clamp", vec![expr_to_json(arg), json!(lo), json!(hi)]),
        Expr::InfConv { metric, sites, values } => node(
            "infconv",
            vec![
                json!(metric.name()),
                Value::Array(
                    sites
                        .iter()
                        .zip(values)
                        .map(|(s, v)| json!([s.coords(), v]))
                        .collect(),
                ),
            ],
        ),
        Expr::Transport { change, base } => node(
            "transport",
            vec![serde_json::to_value(change).expect("diffeo serializes"), expr_to_json(base)],
        ),
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("expression: {}", msg.into()))
}

fn num(v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(format!("expected a number, got {v}")))
}

fn metric(v: &Value) -> Result<Metric> {
    Metric::from_name(v.as_str().ok_or_else(|| bad("expected a metric name"))?)
}

fn table(v: &Value) -> Result<RadialTable> {
    let arr = v.as_array().ok_or_else(|| bad("radial table must be an array of [radius, value]"))?;
    let knots = arr
        .iter()
        .map(|pair| match pair.as_array().map(Vec::as_slice) {
            Some([r, val]) => Ok((num(r)?, num(val)?)),
            _ => Err(bad("radial knot must be [radius, value]")),
        })
        .collect::<Result<Vec<_>>>()?;
    RadialTable::new(knots)
}

pub(super) fn expr_from_json(v: &Value) -> Result<Expr> {
    // Bare numbers are shorthand for constants.
    if let Some(c) = v.as_f64() {
        return Ok(Expr::Const(c));
    }
    let op = v
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| bad(format!("missing \"op\" in {v}")))?;
    let empty = Vec::new();
    let args = v.get("args").and_then(Value::as_array).unwrap_or(&empty);
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(bad(format!("`{op}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let sub = |i: usize| -> Result<Box<Expr>> { Ok(Box::new(expr_from_json(&args[i])?)) };
    Ok(match op {
        "const" => {
            arity(1)?;
            Expr::Const(num(&args[0])?)
        }
        "norm" => {
            if args.is_empty() {
                Expr::Norm(Metric::Sup)
            } else {
                arity(1)?;
                Expr::Norm(metric(&args[0])?)
            }
        }
        "coord" => {
            arity(1)?;
            Expr::Coord(args[0].as_u64().ok_or_else(|| bad("coord index must be a nonnegative integer"))? as usize)
        }
        "add" | "sub" | "mul" | "min" | "max" => {
            arity(2)?;
            let (a, b) = (sub(0)?, sub(1)?);
            match op {
                "add" => Expr::Add(a, b),
                "sub" => Expr::Sub(a, b),
                "mul" => Expr::Mul(a, b),
                "min" => Expr::Min(a, b),
                _ => Expr::Max(a, b),
            }
        }
        "exp2neg" => {
            arity(1)?;
            Expr::Exp2Neg(sub(0)?)
        }
        "recip" => {
            arity(1)?;
            Expr::Recip(sub(0)?)
        }
        "radial" | "radial_log2" => {
            arity(2)?;
            let (metric, table) = (metric(&args[0])?, table(&args[1])?);
            if op == "radial" {
                Expr::Radial { metric, table }
            } else {
                Expr::RadialLog2 { metric, table }
            }
        }
        "clamp" => {
            arity(3)?;
            Expr::Clamp {
                arg: sub(0)?,
                lo: num(&args[1])?,
                hi: num(&args[2])?,
            }
        }
        "infconv" => {
            arity(2)?;
            let metric = metric(&args[0])?;
            let mut sites = Vec::new();
            let mut values = Vec::new();
            for item in args[1].as_array().ok_or_else(|| bad("infconv sites must be an array"))? {
                match item.as_array().map(Vec::as_slice) {
                    Some([p, val]) => {
                        let point: Point = serde_json::from_value(p.clone()).map_err(|e| bad(e.to_string()))?;
                        sites.push(point);
                        values.push(num(val)?);
                    }
                    _ => return Err(bad("infconv site must be [point, value]")),
                }
            }
            Expr::InfConv { metric, sites, values }
        }
        "transport" => {
            arity(2)?;
            let change: Diffeo = serde_json::from_value(args[0].clone()).map_err(|e| bad(e.to_string()))?;
            change.validate()?;
            Expr::Transport { change, base: sub(1)? }
        }
        other => return Err(bad(format!("unknown op `{other}`"))),
    })
}
