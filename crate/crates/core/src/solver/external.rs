//! Hand-off to an external MILP solver through files.
//!
//! The adapter writes the model in LP format, runs a user-supplied shell
//! command and reads back a solution file with one `name value` pair per
//! line. `{model}` and `{solution}` in the command are replaced by the two
//! paths.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::{export_lp_file, SolveStats, SolveStatus, Solution};
use crate::error::{Error, Result};
use crate::model::ModelInstance;

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: String,
    pub work_dir: PathBuf,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>, work_dir: impl Into<PathBuf>) -> Self {
        Self { command: command.into(), work_dir: work_dir.into() }
    }

    pub fn solve(&self, model: &ModelInstance) -> Result<Solution> {
        std::fs::create_dir_all(&self.work_dir).map_err(|e| Error::io(&self.work_dir, e))?;
        let stem: String = model.name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        let model_path = self.work_dir.join(format!("{stem}.lp"));
        let sol_path = self.work_dir.join(format!("{stem}.sol"));
        export_lp_file(model, &model_path)?;
        let cmd = self
            .command
            .replace("{model}", &model_path.display().to_string())
            .replace("{solution}", &sol_path.display().to_string());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .status()
            .map_err(|e| Error::External(format!("failed to launch `{cmd}`: {e}")))?;
        if !status.success() {
            return Err(Error::External(format!("`{cmd}` exited with {status}")));
        }
        let values = parse_solution_file(&sol_path)?;
        let mut x = vec![0.0; model.num_vars()];
        for (j, v) in model.vars.iter().enumerate() {
            let lp_name = super::lp_format::sanitize(&v.name);
            x[j] = *values
                .get(&lp_name)
                .or_else(|| values.get(&v.name))
                .ok_or_else(|| Error::External(format!("solution file lacks variable {}", v.name)))?;
        }
        let objective = model.objective_value(&x);
        Ok(Solution {
            status: SolveStatus::Optimal,
            x,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective,
            stats: SolveStats::default(),
        })
    }
}

/// Reads `name value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_solution_file(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, format!("line {}: expected `name value`", lineno + 1)));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::parse(path, format!("line {}: bad number `{value}`", lineno + 1)))?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn model() -> ModelInstance {
        let mut m = ModelInstance::new("ext test");
        let x = m.add_var("x", 0.0, 10.0, 2.0);
        let y = m.add_binary("y[1]", 5.0);
        m.add_row("c", [(x, 1.0), (y, 1.0)], Sense::Ge, 1.0);
        m
    }

    #[test]
    fn reads_back_values_by_lp_name() {
        let dir = tempfile::tempdir().unwrap();
        let cmd = "test -s {model} && printf '# fake\\nx 1.5\\ny_1_ 1\\n' > {solution}";
        let sol = ExternalSolver::new(cmd, dir.path()).solve(&model()).unwrap();
        assert_eq!(sol.x, vec![1.5, 1.0]);
        assert_eq!(sol.objective, 8.0);
        assert!(dir.path().join("ext_test.lp").exists());
    }

    #[test]
    fn failures_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let failing = ExternalSolver::new("exit 3", dir.path()).solve(&model());
        assert!(matches!(failing, Err(Error::External(_))));
        let partial = ExternalSolver::new("echo 'x 1' > {solution}", dir.path()).solve(&model());
        assert!(matches!(partial, Err(Error::External(m)) if m.contains("y[1]")));
        let garbled = ExternalSolver::new("echo 'x one' > {solution}", dir.path()).solve(&model());
        assert!(garbled.is_err());
    }
}
