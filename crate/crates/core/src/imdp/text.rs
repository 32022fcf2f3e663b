//! Plain-text interval MDP format.
//!
//! ```text
//! # delta_I=0.1 xi=1e-8
//! imdp <states> <actions> <initial>
//! ti <s> <a> <s'> <lower> <upper>
//! label target <s>
//! label unsafe <s>
//! ```
//!
//! Available actions are those with at least one `ti` line.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imdp::{Interval, IntervalMdp};
use crate::mdp::text::{fmt_real, parse_field, parse_real};
use crate::mdp::{ModelShape, StateLabel};
use crate::scalar::Real;

impl<T: Real> IntervalMdp<T> {
    pub fn to_text(&self) -> String {
        let shape = self.shape();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# delta_I={} xi={} delta_T={}",
            fmt_real(self.delta_total()),
            fmt_real(self.xi()),
            fmt_real(self.delta_transition())
        );
        let _ = writeln!(
            out,
            "imdp {} {} {}",
            shape.num_states(),
            shape.num_actions(),
            shape.initial_state()
        );
        for s in 0..shape.num_states() {
            for &a in shape.available(s) {
                for iv in self.row(s, a) {
                    let _ = writeln!(
                        out,
                        "ti {s} {a} {} {} {}",
                        iv.successor,
                        fmt_real(iv.lower),
                        fmt_real(iv.upper)
                    );
                }
            }
        }
        for s in shape.target_states() {
            let _ = writeln!(out, "label target {s}");
        }
        for s in shape.unsafe_states() {
            let _ = writeln!(out, "label unsafe {s}");
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let (mut delta_total, mut delta_transition, mut xi) = (T::zero(), T::zero(), None);
        let mut entries: Vec<(usize, usize, Interval<T>)> = Vec::new();
        let mut labels: Vec<(usize, StateLabel, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    let Some((key, val)) = kv.split_once('=') else {
                        continue;
                    };
                    match key {
                        "delta_I" => delta_total = parse_real(Some(val), line, "header value")?,
                        "delta_T" => {
                            delta_transition = parse_real(Some(val), line, "header value")?
                        }
                        "xi" => xi = Some(parse_real(Some(val), line, "header value")?),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["imdp", n, m, init] => {
                    if header.is_some() {
                        return Err(Error::Parse {
                            line,
                            msg: "duplicate header".into(),
                        });
                    }
                    header = Some((
                        parse_field(Some(*n), line, "index")?,
                        parse_field(Some(*m), line, "index")?,
                        parse_field(Some(*init), line, "index")?,
                    ));
                }
                ["ti", s, a, t, l, u] => entries.push((
                    parse_field(Some(*s), line, "index")?,
                    parse_field(Some(*a), line, "index")?,
                    Interval {
                        successor: parse_field(Some(*t), line, "index")?,
                        lower: parse_real(Some(*l), line, "bound")?,
                        upper: parse_real(Some(*u), line, "bound")?,
                    },
                )),
                ["label", kind, s] => {
                    let label = match *kind {
                        "target" => StateLabel::Target,
                        "unsafe" => StateLabel::Unsafe,
                        other => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unknown label {other:?}"),
                            })
                        }
                    };
                    labels.push((parse_field(Some(*s), line, "index")?, label, line));
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unrecognised line {trimmed:?}"),
                    })
                }
            }
        }
        let (n, m, init) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing imdp header".into(),
        })?;
        let xi = xi.ok_or(Error::Parse {
            line: 0,
            msg: "missing xi in header comment".into(),
        })?;
        let mut label_vec = vec![StateLabel::Plain; n];
        for (s, label, line) in labels {
            if s >= n {
                return Err(Error::Parse {
                    line,
                    msg: format!("state {s} out of range"),
                });
            }
            label_vec[s] = label;
        }
        let mut rows = vec![Vec::new(); n * m];
        for (s, a, iv) in entries {
            if s >= n || a >= m {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("pair ({s}, {a}) out of range"),
                });
            }
            rows[s * m + a].push(iv);
        }
        let available = (0..n)
            .map(|s| (0..m).filter(|&a| !rows[s * m + a].is_empty()).collect())
            .collect();
        let shape = ModelShape::new(n, m, init, available, label_vec)?;
        Self::new(shape, rows, delta_total, delta_transition, xi)
    }
}
