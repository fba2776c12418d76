//! Edge weights and traversal priorities.
//!
//! Every edge kind has a fixed base weight reflecting how reliably that
//! signal localizes a bug; co-commit evidence additionally decays
//! exponentially with age so stale coupling fades out of path scores.

use super::{EdgeKind, GraphEdge};
use crate::error::{Error, Result};

/// Decay rate per day for co-commit evidence.
pub const COCOMMIT_DECAY_RATE: f64 = 0.1;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Static weight of each edge kind.
pub fn base_weight(kind: EdgeKind) -> f64 {
    match kind {
        EdgeKind::AstChild => 0.8,
        EdgeKind::Import => 0.9,
        EdgeKind::Call => 0.85,
        EdgeKind::TestCovers => 0.95,
        EdgeKind::EmitsLog => 0.92,
        EdgeKind::StackTraceStep => 0.97,
        EdgeKind::CoCommit => 0.7,
        EdgeKind::PrComment => 0.6,
        EdgeKind::DocRef => 0.6,
    }
}

/// Traversal priority class of each edge kind: implementation signals at
/// 1.0, dependency signals at 0.8, documentation signals at 0.6.
pub fn edge_priority(kind: EdgeKind) -> f64 {
    match kind {
        EdgeKind::AstChild | EdgeKind::Call => 1.0,
        EdgeKind::Import
        | EdgeKind::TestCovers
        | EdgeKind::EmitsLog
        | EdgeKind::StackTraceStep
        | EdgeKind::CoCommit => 0.8,
        EdgeKind::PrComment | EdgeKind::DocRef => 0.6,
    }
}

/// Weight of a concrete edge at evaluation time `now` (epoch seconds).
///
/// Co-commit edges decay as `0.7 * exp(-0.1 * age_days)`; every other kind
/// returns its base weight unchanged. `now` earlier than the edge timestamp
/// is a caller bug and is reported as clock skew.
pub fn effective_weight(edge: &GraphEdge, now: i64) -> Result<f64> {
    if now < edge.timestamp {
        return Err(Error::ClockSkew {
            edge_ts: edge.timestamp,
            now,
        });
    }
    match edge.kind {
        EdgeKind::CoCommit => {
            let age_days = (now - edge.timestamp) as f64 / SECONDS_PER_DAY;
            Ok(base_weight(EdgeKind::CoCommit) * (-COCOMMIT_DECAY_RATE * age_days).exp())
        }
        kind => Ok(base_weight(kind)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    fn cocommit_at(ts: i64) -> GraphEdge {
        GraphEdge {
            src: NodeId::new("a"),
            dst: NodeId::new("b"),
            kind: EdgeKind::CoCommit,
            timestamp: ts,
            annotation: None,
        }
    }

    #[test]
    fn base_weight_table() {
        let expected = [
            (EdgeKind::AstChild, 0.8),
            (EdgeKind::Import, 0.9),
            (EdgeKind::Call, 0.85),
            (EdgeKind::TestCovers, 0.95),
            (EdgeKind::EmitsLog, 0.92),
            (EdgeKind::StackTraceStep, 0.97),
            (EdgeKind::CoCommit, 0.7),
            (EdgeKind::PrComment, 0.6),
            (EdgeKind::DocRef, 0.6),
        ];
        for (kind, want) in expected {
            assert_eq!(base_weight(kind), want, "{kind:?}");
        }
    }

    #[test]
    fn priority_classes() {
        for kind in [EdgeKind::AstChild, EdgeKind::Call] {
            assert_eq!(edge_priority(kind), 1.0);
        }
        for kind in [
            EdgeKind::Import,
            EdgeKind::TestCovers,
            EdgeKind::EmitsLog,
            EdgeKind::StackTraceStep,
            EdgeKind::CoCommit,
        ] {
            assert_eq!(edge_priority(kind), 0.8);
        }
        for kind in [EdgeKind::PrComment, EdgeKind::DocRef] {
            assert_eq!(edge_priority(kind), 0.6);
        }
    }

    #[test]
    fn non_cocommit_kinds_do_not_decay() {
        let old = GraphEdge {
            src: NodeId::new("a"),
            dst: NodeId::new("b"),
            kind: EdgeKind::Import,
            timestamp: 0,
            annotation: None,
        };
        let thousand_days = 1_000 * 86_400;
        assert_eq!(effective_weight(&old, thousand_days).unwrap(), 0.9);
    }

    // Ten-day-old co-commit: 0.7 * e^(-0.1 * 10) = 0.7 * e^-1.
    #[test]
    fn cocommit_decay_at_ten_days() {
        let edge = cocommit_at(0);
        let now = 10 * 86_400;
        let got = effective_weight(&edge, now).unwrap();
        let want = 0.7 * (-1.0_f64).exp();
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
        // Same value to five decimal places as the worked figure 0.25752.
        assert!((got - 0.25752).abs() < 5e-6);
    }

    #[test]
    fn cocommit_decay_is_strictly_monotone_in_age() {
        let edge = cocommit_at(0);
        let mut previous = f64::INFINITY;
        for days in 0..60 {
            let w = effective_weight(&edge, days * 86_400).unwrap();
            assert!(w < previous || days == 0, "day {days}: {w} !< {previous}");
            assert!(w > 0.0 && w <= 0.7);
            previous = w;
        }
    }

    #[test]
    fn fresh_cocommit_keeps_full_base_weight() {
        let edge = cocommit_at(5_000);
        assert_eq!(effective_weight(&edge, 5_000).unwrap(), 0.7);
    }

    #[test]
    fn clock_skew_is_an_error() {
        let edge = cocommit_at(10_000);
        let err = effective_weight(&edge, 9_999).unwrap_err();
        assert!(matches!(err, Error::ClockSkew { .. }));
    }
}
