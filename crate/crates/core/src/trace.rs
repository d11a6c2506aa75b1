//! Closed-loop traces and their CSV form.
//!
//! ```text
//! # seed=7 tau=0.2
//! step,time,x1,x2,x3,cell,input_index,u_value,detected,resynth,outcome_at_end
//! 0,0,1.5,0.5,1.57079633,1234,20,-1.04,,0,
//! ...
//! 57,11.4,...,,,,0,ReachedTarget
//! ```
//!
//! Floats carry 9 significant digits. `detected` lists the sign cells first
//! detected at that step, separated by `;`. The input columns are empty on the
//! final row and the outcome is written on the final row only.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::grid::CellId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    ReachedTarget,
    EnteredAvoid,
    SynthesisFailed,
    StepLimit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ReachedTarget => "ReachedTarget",
            Outcome::EnteredAvoid => "EnteredAvoid",
            Outcome::SynthesisFailed => "SynthesisFailed",
            Outcome::StepLimit => "StepLimit",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ReachedTarget" => Outcome::ReachedTarget,
            "EnteredAvoid" => Outcome::EnteredAvoid,
            "SynthesisFailed" => Outcome::SynthesisFailed,
            "StepLimit" => Outcome::StepLimit,
            _ => return Err(format!("unknown outcome `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub state: Vec<f64>,
    pub cell: CellId,
    /// Applied input cell and its value; `None` on the final step.
    pub input: Option<(CellId, Vec<f64>)>,
    /// Sign cells first detected at this step.
    pub detected: Vec<CellId>,
    pub resynthesized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub tau: f64,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed,
/// scientific notation outside `[1e-5, 1e9)`.
pub fn format_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl Trace {
    pub fn state_dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.state.len())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# seed={} tau={}", self.seed, format_g9(self.tau))?;
        let xs: Vec<String> = (1..=self.state_dim()).map(|i| format!("x{i}")).collect();
        writeln!(w, "step,time,{},cell,input_index,u_value,detected,resynth,outcome_at_end", xs.join(","))?;
        let last = self.steps.len().saturating_sub(1);
        for (i, s) in self.steps.iter().enumerate() {
            let state: Vec<String> = s.state.iter().map(|v| format_g9(*v)).collect();
            let (input, value) = match &s.input {
                Some((u, v)) => (u.0.to_string(), v.iter().map(|x| format_g9(*x)).collect::<Vec<_>>().join(";")),
                None => (String::new(), String::new()),
            };
            let detected: Vec<String> = s.detected.iter().map(|c| c.0.to_string()).collect();
            let outcome = if i == last { self.outcome.to_string() } else { String::new() };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                s.step,
                format_g9(s.time),
                state.join(","),
                s.cell.0,
                input,
                value,
                detected.join(";"),
                u8::from(s.resynthesized),
                outcome
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("utf-8")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trace, TraceError> {
        let mut seed = 0;
        let mut tau = f64::NAN;
        let mut dim = None;
        let mut steps = Vec::new();
        let mut outcome = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let err = |message: String| TraceError::Format { line: lineno, message };
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("seed", v)) => seed = v.parse().map_err(|_| err(format!("bad seed `{v}`")))?,
                        Some(("tau", v)) => tau = v.parse().map_err(|_| err(format!("bad tau `{v}`")))?,
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let Some(d) = dim else {
                if cols.len() < 9 || cols[0] != "step" || cols[1] != "time" {
                    return Err(err("missing header row".into()));
                }
                let d = cols.len() - 8;
                let expected: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
                if cols[2..2 + d] != expected.iter().map(String::as_str).collect::<Vec<_>>()[..]
                    || cols[2 + d..] != ["cell", "input_index", "u_value", "detected", "resynth", "outcome_at_end"]
                {
                    return Err(err("unexpected header columns".into()));
                }
                dim = Some(d);
                continue;
            };
            if outcome.is_some() {
                return Err(err("rows after the final outcome".into()));
            }
            if cols.len() != d + 8 {
                return Err(err(format!("expected {} columns, got {}", d + 8, cols.len())));
            }
            let num = |s: &str, what: &str| -> Result<f64, TraceError> {
                s.parse::<f64>().map_err(|_| err(format!("bad {what} `{s}`")))
            };
            let int = |s: &str, what: &str| -> Result<u64, TraceError> {
                s.parse::<u64>().map_err(|_| err(format!("bad {what} `{s}`")))
            };
            let step = int(cols[0], "step")? as usize;
            let time = num(cols[1], "time")?;
            let state = (0..d).map(|i| num(cols[2 + i], "state")).collect::<Result<Vec<_>, _>>()?;
            let cell = CellId(int(cols[2 + d], "cell")? as u32);
            let input = match (cols[3 + d], cols[4 + d]) {
                ("", "") => None,
                (u, v) => {
                    let values = v.split(';').map(|x| num(x, "input value")).collect::<Result<Vec<_>, _>>()?;
                    Some((CellId(int(u, "input index")? as u32), values))
                }
            };
            let detected = if cols[5 + d].is_empty() {
                Vec::new()
            } else {
                cols[5 + d].split(';').map(|c| int(c, "sign cell").map(|v| CellId(v as u32))).collect::<Result<_, _>>()?
            };
            let resynthesized = match cols[6 + d] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("bad resynth flag `{other}`"))),
            };
            if !cols[7 + d].is_empty() {
                outcome = Some(cols[7 + d].parse::<Outcome>().map_err(err)?);
            }
            steps.push(StepRecord { step, time, state, cell, input, detected, resynthesized });
        }
        let Some(outcome) = outcome else {
            return Err(TraceError::Format { line: 0, message: "trace has no outcome row".into() });
        };
        Ok(Trace { seed, tau, steps, outcome })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_g9(0.0), "0");
        assert_eq!(format_g9(0.2), "0.2");
        assert_eq!(format_g9(std::f64::consts::PI), "3.14159265");
        assert_eq!(format_g9(-1.0471975511965976), "-1.04719755");
        assert_eq!(format_g9(11.4), "11.4");
        assert_eq!(format_g9(123456789.4), "123456789");
        assert_eq!(format_g9(9.9999999999), "10");
        assert_eq!(format_g9(1.5e-7), "1.5e-07");
        assert_eq!(format_g9(2.0e12), "2e+12");
    }

    #[test]
    fn csv_round_trip() {
        let trace = Trace {
            seed: 7,
            tau: 0.2,
            steps: vec![
                StepRecord {
                    step: 0,
                    time: 0.0,
                    state: vec![1.0, 2.0, 0.5],
                    cell: CellId(10),
                    input: Some((CellId(3), vec![-0.5])),
                    detected: vec![CellId(4), CellId(9)],
                    resynthesized: true,
                },
                StepRecord {
                    step: 1,
                    time: 0.2,
                    state: vec![1.1, 2.0, 0.4],
                    cell: CellId(11),
                    input: None,
                    detected: vec![],
                    resynthesized: false,
                },
            ],
            outcome: Outcome::ReachedTarget,
        };
        let text = trace.to_csv_string();
        assert!(text.starts_with("# seed=7 tau=0.2\nstep,time,x1,x2,x3,cell,input_index,u_value,detected,resynth,outcome_at_end\n"));
        assert!(text.contains("\n0,0,1,2,0.5,10,3,-0.5,4;9,1,\n"));
        assert!(text.ends_with("\n1,0.2,1.1,2,0.4,11,,,,0,ReachedTarget\n"));
        let back = Trace::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn rejects_malformed_rows() {
        let good = "step,time,x1,cell,input_index,u_value,detected,resynth,outcome_at_end\n0,0,1,0,,,,0,StepLimit\n";
        assert!(Trace::read_csv(good.as_bytes()).is_ok());
        assert!(Trace::read_csv(good.replace("StepLimit", "Oops").as_bytes()).is_err());
        assert!(Trace::read_csv(good.replace(",0,Step", ",2,Step").as_bytes()).is_err());
        assert!(Trace::read_csv("0,0,1,0,,,,0,StepLimit\n".as_bytes()).is_err());
        assert!(Trace::read_csv(&good.as_bytes()[..good.len() - 10]).is_err());
    }
}
