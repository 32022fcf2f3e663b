//! Line-oriented text format for explicit MDPs.
//!
//! ```text
//! mdp <num_states> <num_actions> <gamma> <initial>
//! t <s> <a> <s'> <p>
//! r <s> <a> <value>
//! label target <s>
//! label unsafe <s>
//! ```
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, MdpBuilder};
use crate::scalar::Real;

pub(crate) fn parse_field<V: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<V> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} `{tok}`"),
    })
}

pub(crate) fn parse_real<T: Real>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let x: f64 = parse_field(tok, line, what)?;
    Ok(T::of(x))
}

/// Probabilities and values are written with 17 significant digits.
pub(crate) fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

impl<T: Real> Mdp<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "mdp {} {} {} {}",
            self.num_states(),
            self.num_actions(),
            fmt_real(self.discount()),
            self.initial_state()
        )
        .unwrap();
        for s in 0..self.num_states() {
            for &a in self.available(s) {
                for &(t, p) in self.row(s, a) {
                    writeln!(out, "t {s} {a} {t} {}", fmt_real(p)).unwrap();
                }
                let r = self.reward(s, a);
                if r != T::zero() {
                    writeln!(out, "r {s} {a} {}", fmt_real(r)).unwrap();
                }
            }
        }
        for s in self.shape().target_states() {
            writeln!(out, "label target {s}").unwrap();
        }
        for s in self.shape().unsafe_states() {
            writeln!(out, "label unsafe {s}").unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut builder: Option<MdpBuilder<T>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tok = trimmed.split_whitespace();
            let kind = tok.next().unwrap_or_default();
            if kind == "mdp" {
                if builder.is_some() {
                    return Err(Error::Parse {
                        line,
                        msg: "duplicate header".into(),
                    });
                }
                let n: usize = parse_field(tok.next(), line, "state count")?;
                let m: usize = parse_field(tok.next(), line, "action count")?;
                let gamma: T = parse_real(tok.next(), line, "discount")?;
                let init: usize = parse_field(tok.next(), line, "initial state")?;
                builder = Some(MdpBuilder::new(n, m, gamma, init));
                continue;
            }
            let b = builder.as_mut().ok_or_else(|| Error::Parse {
                line,
                msg: "record before `mdp` header".into(),
            })?;
            match kind {
                "t" => {
                    let s = parse_field(tok.next(), line, "state")?;
                    let a = parse_field(tok.next(), line, "action")?;
                    let t = parse_field(tok.next(), line, "successor")?;
                    let p = parse_real(tok.next(), line, "probability")?;
                    b.transition(s, a, t, p);
                }
                "r" => {
                    let s = parse_field(tok.next(), line, "state")?;
                    let a = parse_field(tok.next(), line, "action")?;
                    let r = parse_real(tok.next(), line, "reward")?;
                    b.reward(s, a, r);
                }
                "label" => {
                    let which = tok.next();
                    let s = parse_field(tok.next(), line, "state")?;
                    match which {
                        Some("target") => b.target(s),
                        Some("unsafe") => b.unsafe_state(s),
                        other => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unknown label {other:?}"),
                            })
                        }
                    };
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown record `{other}`"),
                    })
                }
            }
        }
        builder
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: "missing `mdp` header".into(),
            })?
            .build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-state example
mdp 3 2 0.95 0
t 0 0 1 0.7
t 0 0 2 0.3
t 0 1 0 1
r 0 1 -0.5
t 1 0 1 1
t 2 0 2 1
label target 1
label unsafe 2
";

    #[test]
    fn parses_and_round_trips() {
        let mdp = Mdp::<f64>::parse_text(SAMPLE).unwrap();
        assert_eq!(mdp.num_states(), 3);
        assert_eq!(mdp.reward(0, 1), -0.5);
        assert!(mdp.shape().is_unsafe(2));
        let again = Mdp::<f64>::parse_text(&mdp.to_text()).unwrap();
        assert_eq!(again, mdp);
    }

    #[test]
    fn written_probabilities_have_many_digits() {
        let mdp = Mdp::<f64>::parse_text(SAMPLE).unwrap();
        let text = mdp.to_text();
        let line = text.lines().find(|l| l.starts_with("t 0 0 1")).unwrap();
        let p = line.split_whitespace().last().unwrap();
        let digits = p
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(char::is_ascii_digit)
            .count();
        assert!(digits >= 12, "{p}");
    }

    #[test]
    fn reports_line_of_error() {
        let err = Mdp::<f64>::parse_text("mdp 1 1 0.9 0\nt 0 0 x 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                msg: "bad successor `x`".into()
            }
        );
        assert!(Mdp::<f64>::parse_text("t 0 0 0 1").is_err());
    }
}
