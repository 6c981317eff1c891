//! Node return status.

use std::fmt;

/// The three-valued result a node reports when ticked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Success,
    Failure,
    Running,
}

impl Status {
    pub fn is_running(self) -> bool {
        self == Status::Running
    }

    /// Terminal means the node has nothing left to do this activation.
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    /// Single-letter form used by the trace format.
    pub fn letter(self) -> &'static str {
        match self {
            Status::Success => "S",
            Status::Failure => "F",
            Status::Running => "R",
        }
    }

    pub fn from_letter(s: &str) -> Option<Status> {
        match s {
            "S" => Some(Status::Success),
            "F" => Some(Status::Failure),
            "R" => Some(Status::Running),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_round_trip() {
        for st in [Status::Success, Status::Failure, Status::Running] {
            assert_eq!(Status::from_letter(st.letter()), Some(st));
        }
        assert_eq!(Status::from_letter("X"), None);
    }
}
