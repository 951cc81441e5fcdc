//! Small behaviors: crashes, scripted replays, and trivial victims.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::fixed::Fixed;
use super::wire::WireMessage;
use crate::graph::NodeId;
use crate::sim::{Action, Behavior, Payload};

struct Crash;

impl Behavior for Crash {
    fn on_init(&mut self, _: f64) -> Vec<Action> {
        Vec::new()
    }
    fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
        Vec::new()
    }
}

/// A node that never does anything.
pub fn crash_behavior() -> Box<dyn Behavior> {
    Box::new(Crash)
}

struct Replay {
    script: VecDeque<Payload>,
    eager: bool,
    done: bool,
}

impl Replay {
    fn step(&mut self) -> Vec<Action> {
        if self.done {
            return Vec::new();
        }
        let mut out = Vec::new();
        let burst = if self.eager { self.script.len() } else { 1 };
        for p in self.script.drain(..burst.min(self.script.len())) {
            out.push(Action::Broadcast(p.to_vec()));
        }
        if self.script.is_empty() {
            self.done = true;
            out.push(Action::Halt);
        }
        out
    }
}

impl Behavior for Replay {
    fn on_init(&mut self, _: f64) -> Vec<Action> {
        self.step()
    }
    fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
        self.step()
    }
}

/// Broadcasts the next scripted payload at every callback, whatever it
/// received, and halts once the script is used up.
pub fn replay_behavior(script: Vec<Payload>) -> Box<dyn Behavior> {
    Box::new(Replay { script: script.into(), eager: false, done: false })
}

/// Broadcasts the whole script on activation and halts. Same send sequence as
/// [`replay_behavior`], without depending on how many messages arrive.
pub fn eager_replay_behavior(script: Vec<Payload>) -> Box<dyn Behavior> {
    Box::new(Replay { script: script.into(), eager: true, done: false })
}

struct Instant;

impl Behavior for Instant {
    fn on_init(&mut self, input: f64) -> Vec<Action> {
        alloc::vec![Action::Decide(input), Action::Halt]
    }
    fn on_message(&mut self, _: NodeId, _: &[u8]) -> Vec<Action> {
        Vec::new()
    }
}

/// Decides its own input and halts without communicating.
pub fn instant_behavior() -> Box<dyn Behavior> {
    Box::new(Instant)
}

struct MaxOfQuorum {
    me: NodeId,
    quorum: usize,
    seen: Vec<(NodeId, Fixed)>,
    done: bool,
}

impl MaxOfQuorum {
    fn check(&mut self) -> Vec<Action> {
        if self.done || self.seen.len() < self.quorum {
            return Vec::new();
        }
        self.done = true;
        let best = self.seen.iter().map(|&(_, v)| v).max().unwrap_or(Fixed::ZERO);
        alloc::vec![Action::Decide(best.to_f64()), Action::Halt]
    }
}

impl Behavior for MaxOfQuorum {
    fn on_init(&mut self, input: f64) -> Vec<Action> {
        let v = Fixed::from_f64(input).unwrap_or(Fixed::ZERO);
        self.seen.push((self.me, v));
        let mut out = alloc::vec![Action::Broadcast(WireMessage::value(self.me, 1, v).encode())];
        out.extend(self.check());
        out
    }

    fn on_message(&mut self, sender: NodeId, payload: &[u8]) -> Vec<Action> {
        let Some(msg) = WireMessage::decode(payload) else {
            return Vec::new();
        };
        if msg.origin != sender || self.seen.iter().any(|&(o, _)| o == sender) {
            return Vec::new();
        }
        if let Some(v) = msg.fixed() {
            self.seen.push((sender, v));
        }
        self.check()
    }
}

/// Broadcasts its input, decides the largest of the first `quorum` inputs it
/// has (own included) and halts. Only meant for complete graphs.
pub fn max_behavior(me: NodeId, quorum: usize) -> Box<dyn Behavior> {
    Box::new(MaxOfQuorum { me, quorum, seen: Vec::new(), done: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    fn payload(bytes: &[u8]) -> Payload {
        Arc::from(bytes)
    }

    #[test]
    fn crash_is_silent() {
        let mut b = crash_behavior();
        assert!(b.on_init(3.0).is_empty());
        assert!(b.on_message(1, b"x").is_empty());
    }

    #[test]
    fn replay_paces_the_script() {
        let mut b = replay_behavior(vec![payload(b"p1"), payload(b"p2")]);
        assert_eq!(b.on_init(0.0), vec![Action::Broadcast(b"p1".to_vec())]);
        assert_eq!(b.on_message(0, b"zz"), vec![Action::Broadcast(b"p2".to_vec()), Action::Halt]);
        assert!(b.on_message(0, b"zz").is_empty());
        assert_eq!(replay_behavior(Vec::new()).on_init(0.0), vec![Action::Halt]);
    }

    #[test]
    fn eager_replay_sends_everything_first() {
        let mut b = eager_replay_behavior(vec![payload(b"p1"), payload(b"p2")]);
        assert_eq!(
            b.on_init(0.0),
            vec![Action::Broadcast(b"p1".to_vec()), Action::Broadcast(b"p2".to_vec()), Action::Halt]
        );
    }

    #[test]
    fn max_victim_waits_for_a_quorum() {
        let mut b = max_behavior(0, 2);
        let out = b.on_init(0.25);
        assert_eq!(out.len(), 1);
        let other = WireMessage::value(2, 1, Fixed::from_f64(0.75).unwrap()).encode();
        // forged origin is ignored
        assert!(b.on_message(1, &other).is_empty());
        assert_eq!(b.on_message(2, &other), vec![Action::Decide(0.75), Action::Halt]);
    }
}
