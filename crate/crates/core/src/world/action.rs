use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Direction;

/// Discrete per-agent action.
///
/// `0` no-op (dead units only), `1` stop, `2..=5` move N/S/E/W,
/// `6 + k` attack opposing unit `k` (heal own-team unit `k` for healers).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(pub u32);

impl Action {
    pub const NO_OP: Action = Action(0);
    pub const STOP: Action = Action(1);
    pub const TARGET_OFFSET: u32 = 6;

    pub fn movement(dir: Direction) -> Action {
        Action(2 + dir.index() as u32)
    }

    pub fn target(k: usize) -> Action {
        Action(Self::TARGET_OFFSET + k as u32)
    }

    pub fn direction(self) -> Option<Direction> {
        match self.0 {
            2..=5 => Some(Direction::ALL[(self.0 - 2) as usize]),
            _ => None,
        }
    }

    /// Target index for attack/heal actions.
    pub fn target_index(self) -> Option<usize> {
        self.0.checked_sub(Self::TARGET_OFFSET).map(|k| k as usize)
    }

    pub fn is_targeted(self) -> bool {
        self.0 >= Self::TARGET_OFFSET
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_matches_layout() {
        assert_eq!(Action::movement(Direction::North), Action(2));
        assert_eq!(Action::movement(Direction::West), Action(5));
        assert_eq!(Action(4).direction(), Some(Direction::East));
        assert_eq!(Action::target(3), Action(9));
        assert_eq!(Action(9).target_index(), Some(3));
        assert_eq!(Action::STOP.target_index(), None);
    }
}
