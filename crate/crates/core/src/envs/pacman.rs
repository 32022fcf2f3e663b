use std::collections::VecDeque;

use crate::envs::grid::{Cell, GridMap};
use crate::envs::Benchmark;
use crate::error::{invalid, Result};
use crate::mdp::{MdpBuilder, TabularPolicy};
use crate::scalar::Real;

/// Maze with the agent in the bottom-left corner and the goal top-right.
pub const PACMAN_7X7: &str = "\
...#..G
.#...#.
.##.##.
..#g...
.###.#.
.#...#.
S..#.#.
";

pub const PACMAN_5X5: &str = "\
....G
.#.#.
..g..
.#.#.
S....
";

/// Action order: up, right, down, left.
const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
const UP: usize = 0;
const RIGHT: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct PacmanParams {
    /// Maze text; ghosts start on `g` cells in reading order, any further
    /// ghosts on the goal.
    pub maze: String,
    pub num_ghosts: usize,
    pub goal_reward: f64,
    pub eaten_reward: f64,
    pub discount: f64,
}

impl PacmanParams {
    /// Built-in maze for sizes 5 and 7, otherwise an open grid.
    pub fn new(grid_size: usize, num_ghosts: usize) -> Self {
        let maze = match grid_size {
            5 => PACMAN_5X5.to_string(),
            7 => PACMAN_7X7.to_string(),
            n => open_maze(n),
        };
        Self {
            maze,
            num_ghosts,
            goal_reward: 1.0,
            eaten_reward: -1.0,
            discount: 0.95,
        }
    }
}

impl Default for PacmanParams {
    fn default() -> Self {
        Self::new(7, 2)
    }
}

fn open_maze(n: usize) -> String {
    let mut out = String::new();
    for r in 0..n {
        for c in 0..n {
            out.push(match (r, c) {
                (0, c) if c + 1 == n => 'G',
                (r, 0) if r + 1 == n => 'S',
                _ => '.',
            });
        }
        out.push('\n');
    }
    out
}

/// `(cells)^(ghosts + 1)`, or `None` on overflow.
pub fn pacman_state_count(grid_size: usize, num_ghosts: usize) -> Option<usize> {
    let cells = grid_size.checked_mul(grid_size)?;
    cells.checked_pow(u32::try_from(num_ghosts + 1).ok()?)
}

/// Product MDP over the agent and ghost positions, wall cells included.
///
/// The agent moves deterministically; bumping into a wall or the border puts
/// it back on the start cell. Ghosts then move uniformly at random to an
/// adjacent free cell. Sharing a cell with a ghost afterwards is absorbing
/// and unsafe; reaching the goal otherwise is absorbing and a target.
/// States with an agent or ghost inside a wall are unreachable self-loops.
pub fn pacman<T: Real>(params: &PacmanParams) -> Result<Benchmark<T>> {
    let map = GridMap::parse(&params.maze)?;
    if map.find(Cell::Hole).next().is_some() {
        return Err(invalid("pacman mazes cannot contain holes"));
    }
    let cells = map.num_cells();
    let g = params.num_ghosts;
    let n = pacman_state_count(map.rows().max(map.cols()), g)
        .and_then(|_| cells.checked_pow(u32::try_from(g + 1).ok()?))
        .ok_or_else(|| invalid("pacman state space overflows"))?;
    let start = map.start();
    let goal = map.goal();
    let free = |c: usize| map.cell(c) != Cell::Wall;
    let mut ghost_starts: Vec<usize> = map.find(Cell::Ghost).take(g).collect();
    ghost_starts.resize(g, goal);
    if ghost_starts.contains(&start) {
        return Err(invalid("a ghost starts on the agent's start cell"));
    }
    // Connectivity of the free cells from the start.
    let mut seen = vec![false; cells];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for &(dr, dc) in &MOVES {
            if let Some(t) = map.step(c, dr, dc).filter(|&t| free(t) && !seen[t]) {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    if (0..cells).any(|c| free(c) && !seen[c]) {
        return Err(invalid("maze is disconnected"));
    }
    let ghost_moves: Vec<Vec<usize>> = (0..cells)
        .map(|c| {
            let moves: Vec<usize> = MOVES
                .iter()
                .filter_map(|&(dr, dc)| map.step(c, dr, dc))
                .filter(|&t| free(t))
                .collect();
            if moves.is_empty() {
                vec![c]
            } else {
                moves
            }
        })
        .collect();
    let encode = |pos: &[usize]| pos.iter().rev().fold(0, |acc, &p| acc * cells + p);
    let decode = |mut s: usize, pos: &mut Vec<usize>| {
        pos.clear();
        for _ in 0..=g {
            pos.push(s % cells);
            s /= cells;
        }
    };
    let mut initial = vec![start];
    initial.extend(&ghost_starts);
    let mut b = MdpBuilder::new(n, 4, T::of(params.discount), encode(&initial));
    let mut heuristic = vec![T::zero(); n * 4];
    let mut pos = Vec::with_capacity(g + 1);
    let mut next = Vec::with_capacity(g + 1);
    for s in 0..n {
        decode(s, &mut pos);
        let agent = pos[0];
        let ghosts = &pos[1..];
        let absorbing = !pos.iter().all(|&c| free(c)) || ghosts.contains(&agent) || agent == goal;
        if absorbing {
            b.transition(s, 0, s, T::one());
            heuristic[s * 4] = T::one();
            if pos.iter().all(|&c| free(c)) {
                if ghosts.contains(&agent) {
                    b.unsafe_state(s);
                } else {
                    b.target(s);
                }
            }
            continue;
        }
        let mut blocked = [false; 4];
        for (a, &(dr, dc)) in MOVES.iter().enumerate() {
            let moved = map.step(agent, dr, dc).filter(|&t| free(t));
            blocked[a] = moved.is_none();
            let agent_next = moved.unwrap_or(start);
            let mut reward = 0.0;
            // Enumerate joint ghost moves as a mixed-radix counter.
            let total: usize = ghosts.iter().map(|&c| ghost_moves[c].len()).product();
            let mut digits = vec![0usize; g];
            for _ in 0..total {
                next.clear();
                next.push(agent_next);
                let mut p = 1.0;
                for (k, &c) in ghosts.iter().enumerate() {
                    next.push(ghost_moves[c][digits[k]]);
                    p /= ghost_moves[c].len() as f64;
                }
                if next[1..].contains(&agent_next) {
                    reward += p * params.eaten_reward;
                } else if agent_next == goal {
                    reward += p * params.goal_reward;
                }
                b.transition(s, a, encode(&next), T::of(p));
                for (k, &c) in ghosts.iter().enumerate() {
                    digits[k] += 1;
                    if digits[k] < ghost_moves[c].len() {
                        break;
                    }
                    digits[k] = 0;
                }
            }
            b.reward(s, a, T::of(reward));
        }
        let preferred: Vec<usize> = [UP, RIGHT].into_iter().filter(|&a| !blocked[a]).collect();
        let pick: Vec<usize> = if !preferred.is_empty() {
            preferred
        } else if blocked.iter().any(|&x| !x) {
            (0..4).filter(|&a| !blocked[a]).collect()
        } else {
            (0..4).collect()
        };
        for &a in &pick {
            heuristic[s * 4 + a] = T::one() / T::of(pick.len() as f64);
        }
    }
    let mdp = b.build()?;
    let heuristic = TabularPolicy::new(n, 4, heuristic)?;
    Benchmark::new("pacman", mdp, heuristic, true)
}
