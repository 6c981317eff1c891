//! Per-child priority records used by the mutex parallel operator.

/// Priority state for one child of a mutex parallel node.
///
/// `base` is fixed by the tree definition; `wait_ticks` counts consecutive
/// ticks the child requested resources and was denied them, and resets to
/// zero whenever the child is granted what it asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Priority {
    pub base: u32,
    pub wait_ticks: u32,
}

impl Priority {
    pub fn new(base: u32) -> Priority {
        Priority {
            base,
            wait_ticks: 0,
        }
    }
}

impl Default for Priority {
    fn default() -> Priority {
        Priority::new(0)
    }
}
