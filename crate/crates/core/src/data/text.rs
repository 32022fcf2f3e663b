//! Dataset file format: a header `# transitions=<n> episodic=<0|1> seed=<u64>`
//! followed by one trajectory per line as `s a s a ... s`.

use std::fmt::Write as _;

use crate::data::{Dataset, Trajectory};
use crate::error::{Error, Result};

impl Dataset {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# transitions={} episodic={} seed={}\n",
            self.total_transitions(),
            u8::from(self.episodic()),
            self.seed()
        );
        for traj in self.trajectories() {
            let states = traj.states();
            write!(out, "{}", states[0]).unwrap();
            for (t, &a) in traj.actions().iter().enumerate() {
                write!(out, " {a} {}", states[t + 1]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header.trim().strip_prefix('#').ok_or(Error::Parse {
            line: 1,
            msg: "header must start with `#`".into(),
        })?;
        let (mut transitions, mut episodic, mut seed) = (None, None, None);
        for field in header.split_whitespace() {
            let bad = || Error::Parse {
                line: 1,
                msg: format!("bad header field `{field}`"),
            };
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "transitions" => transitions = Some(value.parse::<usize>().map_err(|_| bad())?),
                "episodic" => {
                    episodic = Some(match value {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad()),
                    })
                }
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 1,
            msg: format!("header lacks `{what}`"),
        };
        let transitions = transitions.ok_or_else(|| missing("transitions"))?;
        let episodic = episodic.ok_or_else(|| missing("episodic"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;

        let mut trajectories = Vec::new();
        for (i, raw) in lines {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let nums = raw
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad index `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if nums.len() % 2 == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "trajectory must alternate states and actions and end in a state".into(),
                });
            }
            let states = nums.iter().step_by(2).copied().collect();
            let actions = nums.iter().skip(1).step_by(2).copied().collect();
            trajectories.push(Trajectory::new(states, actions)?);
        }
        let data = Dataset::new(trajectories, episodic, seed);
        if data.total_transitions() != transitions {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "header announces {transitions} transitions, found {}",
                    data.total_transitions()
                ),
            });
        }
        Ok(data)
    }
}
