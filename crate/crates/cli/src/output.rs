use std::fs;
use std::path::{Path, PathBuf};

use infodesign::{fmt_sig, PiecewiseLinear};
use serde::Serialize;
use serde_json::{Number, Value};

use crate::CliError;

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.0.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&rounded(value)).expect("JSON values serialize");
        self.write(name, &(text + "\n"))
    }
}

/// Rounds every float to 12 significant digits so reports diff cleanly.
pub fn rounded(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let short: f64 = fmt_sig(x).parse().unwrap_or(x);
            Number::from_f64(short).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(rounded).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

/// `s0, R, nu` at every breakpoint of either function.
pub fn revenue_curve(f: &PiecewiseLinear, nu: Option<&PiecewiseLinear>) -> String {
    let mut xs: Vec<f64> = f.breakpoints().to_vec();
    if let Some(nu) = nu {
        xs.extend(nu.breakpoints().iter().copied().filter(|x| *x >= f.lo() && *x <= f.hi()));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut out = String::from("s0,R,nu\n");
    for x in xs {
        let nu = nu.map(|g| fmt_sig(g.eval(x))).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", fmt_sig(x), fmt_sig(f.eval(x)), nu));
    }
    out
}

pub fn mark(ok: bool) -> &'static str {
    if ok {
        "✓"
    } else {
        "✗"
    }
}
