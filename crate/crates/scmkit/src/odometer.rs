/// Mixed-radix counter over per-position lists of allowed indices.
pub(crate) struct Odometer {
    ranges: Vec<Vec<usize>>,
    pos: Vec<usize>,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl Odometer {
    pub fn new(ranges: Vec<Vec<usize>>) -> Self {
        let done = ranges.iter().any(|r| r.is_empty());
        let current = ranges.iter().map(|r| r.first().copied().unwrap_or(0)).collect();
        Odometer { pos: vec![0; ranges.len()], ranges, current, started: false, done }
    }

    /// Full ranges `0..n` for each size.
    pub fn full(sizes: &[usize]) -> Self {
        Self::new(sizes.iter().map(|&n| (0..n).collect()).collect())
    }

    /// Advances and returns the next combination, last position fastest.
    pub fn next_combo(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        let mut i = self.ranges.len();
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            self.pos[i] += 1;
            if self.pos[i] < self.ranges[i].len() {
                self.current[i] = self.ranges[i][self.pos[i]];
                return Some(&self.current);
            }
            self.pos[i] = 0;
            self.current[i] = self.ranges[i][0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_in_row_major_order() {
        let mut od = Odometer::new(vec![vec![0, 1], vec![2, 5]]);
        let mut seen = Vec::new();
        while let Some(c) = od.next_combo() {
            seen.push(c.to_vec());
        }
        assert_eq!(seen, [[0, 2], [0, 5], [1, 2], [1, 5]]);
        let mut empty = Odometer::new(vec![]);
        assert_eq!(empty.next_combo(), Some(&[][..]));
        assert_eq!(empty.next_combo(), None);
    }
}
