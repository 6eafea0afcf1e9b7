//! Box-ball system on the integer line and on a cycle of `L` boxes.
//!
//! States are written with `.` for an empty box and `1` for a ball; `0` is
//! accepted as an empty box on input. Position `n = 0` is the first character.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn parse_cells(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .enumerate()
        .map(|(pos, ch)| match ch {
            '.' | '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::InvalidStateChar { ch, pos }),
        })
        .collect()
}

pub fn render_cells(cells: &[bool]) -> String {
    cells.iter().map(|&b| if b { '1' } else { '.' }).collect()
}

/// Finitely many balls on `ℤ`; every cell outside the window is empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BbsState {
    offset: i64,
    cells: Vec<bool>,
}

impl BbsState {
    pub fn new(offset: i64, cells: Vec<bool>) -> Self {
        BbsState { offset, cells }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Occupation `U_n` at absolute position `n`.
    pub fn get(&self, n: i64) -> bool {
        let i = n - self.offset;
        i >= 0 && (i as usize) < self.cells.len() && self.cells[i as usize]
    }

    pub fn ball_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn ball_positions(&self) -> Vec<i64> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.offset + i as i64)
            .collect()
    }

    /// Window end (exclusive).
    pub fn end(&self) -> i64 {
        self.offset + self.cells.len() as i64
    }

    /// Cells over `[from, to)`, padding with empties.
    pub fn window(&self, from: i64, to: i64) -> Vec<bool> {
        (from..to).map(|n| self.get(n)).collect()
    }
}

impl FromStr for BbsState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(BbsState::new(0, parse_cells(s)?))
    }
}

impl fmt::Display for BbsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_cells(&self.cells))
    }
}

/// One time step of
/// `U_n^{t+1} = min(1 - U_n^t, Σ_{k<n} U_k^t - Σ_{k<n} U_k^{t+1})`,
/// evaluated left to right. The window grows to the right as needed.
pub fn bbs_step(s: &BbsState) -> BbsState {
    let balls = s.ball_count();
    let len = s.cells.len() + balls;
    let mut next = vec![false; len];
    let mut before_now = 0i64;
    let mut before_next = 0i64;
    for (i, slot) in next.iter_mut().enumerate() {
        let now = s.cells.get(i).copied().unwrap_or(false);
        let carried = before_now - before_next;
        let v = (1 - i64::from(now)).min(carried);
        *slot = v == 1;
        before_now += i64::from(now);
        before_next += v;
    }
    let last = next.iter().rposition(|&b| b).map_or(0, |p| p + 1);
    next.truncate(last.max(s.cells.len()));
    BbsState::new(s.offset, next)
}

/// Trajectory `[s, step(s), …]` with `steps + 1` states.
pub fn bbs_trajectory(s: &BbsState, steps: usize) -> Vec<BbsState> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.clone());
    for _ in 0..steps {
        let next = bbs_step(out.last().unwrap());
        out.push(next);
    }
    out
}

/// Box-ball state on a cycle of `L = cells.len()` boxes, fewer than `L/2` balls.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PbbsState {
    cells: Vec<bool>,
}

impl PbbsState {
    pub fn new(cells: Vec<bool>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptySystem);
        }
        let state = PbbsState { cells };
        state.check_density()?;
        Ok(state)
    }

    fn check_density(&self) -> Result<()> {
        let balls = self.ball_count();
        if 2 * balls >= self.cells.len() {
            return Err(Error::OverfullState {
                balls,
                size: self.cells.len(),
            });
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, n: i64) -> bool {
        let l = self.cells.len() as i64;
        self.cells[n.rem_euclid(l) as usize]
    }

    pub fn ball_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Embeds the cycle's window `[0, L)` into the line.
    pub fn to_bbs(&self) -> BbsState {
        BbsState::new(0, self.cells.clone())
    }
}

impl FromStr for PbbsState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PbbsState::new(parse_cells(s)?)
    }
}

impl fmt::Display for PbbsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_cells(&self.cells))
    }
}

/// For each ball, the empty box it is paired with under cyclic 1-0 bracket
/// matching. Every ball is paired because balls are fewer than empties.
fn pair_balls(cells: &[bool]) -> Vec<(usize, usize)> {
    let l = cells.len();
    // Start right after the lowest point of the running (ball − empty) sum;
    // from there every ball closes inside one lap.
    let mut run = 0i64;
    let mut low = 0i64;
    let mut start = 0usize;
    for (i, &b) in cells.iter().enumerate() {
        run += if b { 1 } else { -1 };
        if run < low {
            low = run;
            start = i + 1;
        }
    }
    let mut open = Vec::new();
    let mut pairs = Vec::new();
    for k in 0..l {
        let i = (start + k) % l;
        if cells[i] {
            open.push(i);
        } else if let Some(j) = open.pop() {
            pairs.push((j, i));
        }
    }
    debug_assert!(open.is_empty());
    pairs
}

/// One step of the periodic system: every ball jumps to its paired empty box.
pub fn pbbs_step(s: &PbbsState) -> Result<PbbsState> {
    s.check_density()?;
    let mut next = vec![false; s.size()];
    for (_, to) in pair_balls(&s.cells) {
        next[to] = true;
    }
    Ok(PbbsState { cells: next })
}

pub fn pbbs_trajectory(s: &PbbsState, steps: usize) -> Result<Vec<PbbsState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.clone());
    for _ in 0..steps {
        let next = pbbs_step(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// Soliton lengths `S_1 ≤ … ≤ S_g` by repeated cyclic 10-elimination: the
/// number of `10` pairs removed in round `k` counts solitons of length `≥ k`.
pub fn soliton_content(s: &PbbsState) -> Result<Vec<usize>> {
    s.check_density()?;
    let mut cells = s.cells.clone();
    let mut at_least = Vec::new();
    while cells.iter().any(|&b| b) {
        let l = cells.len();
        let mut removed = vec![false; l];
        let mut pairs = 0;
        for i in 0..l {
            let j = (i + 1) % l;
            if cells[i] && !cells[j] {
                removed[i] = true;
                removed[j] = true;
                pairs += 1;
            }
        }
        debug_assert!(pairs > 0);
        at_least.push(pairs);
        cells = cells
            .iter()
            .zip(&removed)
            .filter(|(_, &r)| !r)
            .map(|(&c, _)| c)
            .collect();
    }
    let mut lengths = Vec::new();
    for (k, &count) in at_least.iter().enumerate() {
        let longer = at_least.get(k + 1).copied().unwrap_or(0);
        lengths.extend(std::iter::repeat_n(k + 1, count - longer));
    }
    Ok(lengths)
}

/// Appends `m` empty boxes, the state-level counterpart of `X·H^m`.
pub fn append_vacuum(s: &PbbsState, m: usize) -> PbbsState {
    let mut cells = s.cells.clone();
    cells.extend(std::iter::repeat_n(false, m));
    PbbsState { cells }
}

/// A state whose soliton content is exactly `lengths`: blocks `1^s 0^s`
/// separated by single empty boxes, followed by `extra` further empties.
pub fn state_with_solitons(lengths: &[usize], extra: usize) -> Result<PbbsState> {
    let mut cells = Vec::new();
    for &s in lengths {
        cells.extend(std::iter::repeat_n(true, s));
        cells.extend(std::iter::repeat_n(false, s + 1));
    }
    cells.extend(std::iter::repeat_n(false, extra.max(1)));
    PbbsState::new(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pbbs(s: &str) -> PbbsState {
        s.parse().unwrap()
    }

    #[test]
    fn bbs_first_step_of_the_collision_figure() {
        let s: BbsState = "..111...11...1".parse().unwrap();
        let next = bbs_step(&s);
        assert_eq!(next.to_string(), ".....111..11..1");
    }

    #[test]
    fn bbs_empty_stays_empty() {
        let s: BbsState = ".....".parse().unwrap();
        assert_eq!(bbs_step(&s), s);
    }

    #[test]
    fn bbs_single_ball_moves_one() {
        let s: BbsState = "1".parse().unwrap();
        let next = bbs_step(&s);
        assert_eq!(next.ball_positions(), vec![1]);
    }

    #[test]
    fn parser_accepts_zero_and_rejects_junk() {
        assert_eq!(parse_cells("1.0").unwrap(), vec![true, false, false]);
        assert_eq!(
            parse_cells("1x").unwrap_err(),
            Error::InvalidStateChar { ch: 'x', pos: 1 }
        );
    }

    #[test]
    fn pbbs_steps_by_hand() {
        assert_eq!(pbbs_step(&pbbs(".11...1...")).unwrap().to_string(), "...11..1..");
        assert_eq!(pbbs_step(&pbbs("1.........")).unwrap().to_string(), ".1........");
        assert_eq!(pbbs_step(&pbbs("1.1.1.....")).unwrap().to_string(), ".1.1.1....");
    }

    #[test]
    fn pbbs_wraps_around() {
        assert_eq!(pbbs_step(&pbbs("...11")).unwrap().to_string(), "11...");
        assert_eq!(pbbs_step(&pbbs("1...1")).unwrap().to_string(), ".11..");
    }

    #[test]
    fn overfull_states_are_rejected() {
        assert!(matches!(
            "11..".parse::<PbbsState>(),
            Err(Error::OverfullState { balls: 2, size: 4 })
        ));
        assert!(matches!("".parse::<PbbsState>(), Err(Error::EmptySystem)));
    }

    #[test]
    fn soliton_content_examples() {
        assert_eq!(soliton_content(&pbbs(".11...1...")).unwrap(), vec![1, 2]);
        assert_eq!(soliton_content(&pbbs("......")).unwrap(), Vec::<usize>::new());
        assert_eq!(soliton_content(&pbbs("111....1..11.......")).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn vacuum_appends_boxes() {
        let s = pbbs(".11...1...");
        let padded = append_vacuum(&s, 3);
        assert_eq!(padded.to_string(), ".11...1......");
        assert_eq!(padded.size(), 13);
        assert_eq!(append_vacuum(&append_vacuum(&s, 1), 1), append_vacuum(&s, 2));
        assert_eq!(soliton_content(&padded).unwrap(), soliton_content(&s).unwrap());
    }

    #[test]
    fn constructed_states_have_requested_content() {
        let s = state_with_solitons(&[1, 2, 2, 4], 3).unwrap();
        assert_eq!(soliton_content(&s).unwrap(), vec![1, 2, 2, 4]);
    }
}
