//! Aging priority policy for resource arbitration.
//!
//! A child waiting on a resource gains priority linearly with every denied
//! tick, so a holder with any fixed bonus is eventually displaced and no
//! requester starves. The policy is deliberately linear: the worst-case wait
//! has a closed form that the verifiers and tests pin down.

use crate::priority::Priority;
use thiserror::Error;

/// Tunables of the aging policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    /// Priority gained per consecutive denied tick. Must be at least 1,
    /// otherwise waiting children never catch up with a holder.
    pub aging_increment: u32,
    /// Priority added while a child holds a granted resource and is still
    /// running, so in-flight work is not preempted immediately.
    pub hold_bonus: u32,
}

#[derive(Debug, Error, PartialEq)]
#[error("aging increment must be at least 1")]
pub struct ZeroAgingIncrement;

impl PolicyConfig {
    pub fn new(aging_increment: u32, hold_bonus: u32) -> Result<PolicyConfig, ZeroAgingIncrement> {
        if aging_increment == 0 {
            return Err(ZeroAgingIncrement);
        }
        Ok(PolicyConfig {
            aging_increment,
            hold_bonus,
        })
    }
}

impl Default for PolicyConfig {
    /// Increment 2, hold bonus 2. The even increment keeps a displaced
    /// holder and a waiting requester from landing on equal priorities when
    /// their bases differ by an odd amount, so arbitration outcomes flip
    /// exactly when one strictly exceeds the other.
    fn default() -> PolicyConfig {
        PolicyConfig {
            aging_increment: 2,
            hold_bonus: 2,
        }
    }
}

/// How one arbitration round treated a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantOutcome {
    /// Requested resources and received them.
    Granted,
    /// Requested resources and was refused.
    Denied,
    /// Requested nothing this tick.
    NotRequesting,
}

/// Effective arbitration priority:
/// `base + wait_ticks * aging_increment + hold_bonus (if holding)`.
///
/// Strictly increasing in `wait_ticks`, so a continuously denied child
/// eventually outranks any holder.
pub fn effective_priority(base: u32, wait_ticks: u32, holding: bool, cfg: &PolicyConfig) -> u64 {
    let bonus = if holding { cfg.hold_bonus as u64 } else { 0 };
    base as u64 + wait_ticks as u64 * cfg.aging_increment as u64 + bonus
}

/// Advances a priority record after one arbitration round: a grant resets
/// the wait counter, a denial ages it, and a child that requested nothing
/// keeps its record unchanged.
pub fn update_after_tick(priority: Priority, outcome: GrantOutcome) -> Priority {
    match outcome {
        GrantOutcome::Granted => Priority {
            base: priority.base,
            wait_ticks: 0,
        },
        GrantOutcome::Denied => Priority {
            base: priority.base,
            wait_ticks: priority.wait_ticks + 1,
        },
        GrantOutcome::NotRequesting => priority,
    }
}

/// Worst-case consecutive denials before a child with base `own_base` is
/// granted, assuming every contender's base is at most `max_base`, the
/// holder's grant is re-arbitrated each tick, and the child keeps
/// requesting: `(max_base + hold_bonus - own_base) + 1`.
pub fn starvation_bound(max_base: u32, own_base: u32, cfg: &PolicyConfig) -> u64 {
    (max_base as u64 + cfg.hold_bonus as u64).saturating_sub(own_base as u64) + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(inc: u32, bonus: u32) -> PolicyConfig {
        PolicyConfig::new(inc, bonus).unwrap()
    }

    #[test]
    fn zero_increment_rejected() {
        assert!(PolicyConfig::new(0, 2).is_err());
    }

    #[test]
    fn effective_priority_formula() {
        assert_eq!(effective_priority(0, 0, false, &cfg(1, 0)), 0);
        // Four denied ticks at increment 1: matches stepping the update rule
        // four times from zero.
        let mut p = Priority::new(0);
        for _ in 0..4 {
            p = update_after_tick(p, GrantOutcome::Denied);
        }
        assert_eq!(
            effective_priority(p.base, p.wait_ticks, false, &cfg(1, 0)),
            4
        );
        // Holder with base 2 and bonus 3.
        assert_eq!(effective_priority(2, 0, true, &cfg(1, 3)), 5);
    }

    #[test]
    fn update_rules() {
        let p = Priority {
            base: 7,
            wait_ticks: 3,
        };
        assert_eq!(update_after_tick(p, GrantOutcome::Granted).wait_ticks, 0);
        assert_eq!(update_after_tick(p, GrantOutcome::Denied).wait_ticks, 4);
        let idle = Priority::new(7);
        assert_eq!(update_after_tick(idle, GrantOutcome::NotRequesting), idle);
    }

    #[test]
    fn monotone_in_every_argument() {
        let c = cfg(2, 3);
        for base in 0..4 {
            for wait in 0..4 {
                assert!(
                    effective_priority(base + 1, wait, false, &c)
                        >= effective_priority(base, wait, false, &c)
                );
                assert!(
                    effective_priority(base, wait + 1, false, &c)
                        > effective_priority(base, wait, false, &c)
                );
                assert!(
                    effective_priority(base, wait, true, &c)
                        >= effective_priority(base, wait, false, &c)
                );
            }
        }
    }

    #[test]
    fn starvation_bound_formula() {
        let c = cfg(1, 2);
        assert_eq!(starvation_bound(0, 0, &c), 3);
        assert_eq!(starvation_bound(5, 2, &c), 6);
        // A requester already above everything still needs one tick.
        assert_eq!(starvation_bound(0, 9, &c), 1);
    }
}
