//! Deterministic discrete-event core.
//!
//! Events are ordered by `(fire_at, seq)`: equal timestamps dispatch in
//! insertion order. Randomness comes from named substreams derived from a
//! single master seed so that each stochastic element of a scenario (a link's
//! loss process, a CBR source's start jitter) has its own reproducible
//! sequence.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Simulation time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics if `seconds` is negative or not finite.
    pub fn from_secs(seconds: f64) -> Self {
        assert!(
            seconds.is_finite() && seconds >= 0.0,
            "invalid simulation time {seconds}"
        );
        SimTime(seconds)
    }

    pub fn as_secs(self) -> f64 {
        self.0
    }
}

impl Eq for SimTime {}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: f64) -> SimTime {
        SimTime::from_secs(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// Handle returned by [`EventQueue::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventToken(u64);

struct Entry<A> {
    fire_at: SimTime,
    seq: u64,
    action: A,
}

impl<A> PartialEq for Entry<A> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<A> Eq for Entry<A> {}

impl<A> PartialOrd for Entry<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that `BinaryHeap` pops the earliest (fire_at, seq) first.
impl<A> Ord for Entry<A> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub dispatched: u64,
}

/// Priority queue of pending actions plus the simulation clock.
pub struct EventQueue<A> {
    heap: BinaryHeap<Entry<A>>,
    cancelled: HashSet<u64>,
    now: SimTime,
    next_seq: u64,
    dispatched: u64,
}

impl<A> Default for EventQueue<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A> EventQueue<A> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            now: SimTime::ZERO,
            next_seq: 0,
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Total number of actions dispatched so far.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Pending (non-cancelled) events.
    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Schedules `action` at `fire_at`. Scheduling in the past is a
    /// programming error and panics.
    pub fn schedule(&mut self, fire_at: SimTime, action: A) -> EventToken {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: {fire_at} < {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            fire_at,
            seq,
            action,
        });
        EventToken(seq)
    }

    /// Schedules `action` `delay` seconds from now.
    pub fn schedule_in(&mut self, delay: f64, action: A) -> EventToken {
        let at = self.now + delay;
        self.schedule(at, action)
    }

    /// Cancels a pending event. Cancelling an event that already fired or
    /// was already cancelled is a no-op.
    pub fn cancel(&mut self, token: EventToken) {
        if token.0 < self.next_seq && self.heap.iter().any(|e| e.seq == token.0) {
            self.cancelled.insert(token.0);
        }
    }

    fn discard_cancelled_head(&mut self) {
        while let Some(head) = self.heap.peek() {
            if self.cancelled.remove(&head.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    /// Time of the next pending event, if any.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled_head();
        self.heap.peek().map(|e| e.fire_at)
    }

    /// Pops the next event if it fires at or before `t_end`, advancing the
    /// clock to its timestamp.
    pub fn pop_due(&mut self, t_end: SimTime) -> Option<(SimTime, A)> {
        self.discard_cancelled_head();
        if self.heap.peek()?.fire_at > t_end {
            return None;
        }
        let entry = self.heap.pop().expect("peeked entry");
        debug_assert!(entry.fire_at >= self.now);
        self.now = entry.fire_at;
        self.dispatched += 1;
        Some((entry.fire_at, entry.action))
    }

    /// Dispatches every event with `fire_at <= t_end` in `(fire_at, seq)`
    /// order. Handlers may schedule further events; those are dispatched too
    /// if they fall inside the horizon. On return the clock reads `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> RunStats
    where
        F: FnMut(&mut Self, SimTime, A),
    {
        assert!(t_end >= self.now, "run_until target lies in the past");
        let mut stats = RunStats::default();
        while let Some((at, action)) = self.pop_due(t_end) {
            stats.dispatched += 1;
            handler(self, at, action);
        }
        self.now = t_end;
        stats
    }
}

/// A named, independently seeded pseudo-random stream.
///
/// The stream seed is a hash of the master seed and the stream label, so the
/// same `(master_seed, name)` pair yields the same sequence on every platform.
#[derive(Clone)]
pub struct RngStream {
    name: String,
    seed: u64,
    rng: ChaCha12Rng,
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("name", &self.name)
            .field("seed", &self.seed)
            .finish()
    }
}

impl RngStream {
    pub fn new(master_seed: u64, name: &str) -> Self {
        let seed = derive_seed(master_seed, name);
        RngStream {
            name: name.to_owned(),
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn draw_uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Mixes a master seed with a stream label (FNV-1a over the label, then a
/// splitmix64 finalizer).
pub fn derive_seed(master_seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master_seed ^ splitmix64(h))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn drain(q: &mut EventQueue<&'static str>, t_end: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        q.run_until(t(t_end), |_, _, a| out.push(a));
        out
    }

    #[test]
    fn dispatches_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(t(5.0), "b");
        q.schedule(t(3.0), "a");
        assert_eq!(drain(&mut q, 10.0), ["a", "b"]);
    }

    #[test]
    fn equal_times_dispatch_fifo() {
        let mut q = EventQueue::new();
        q.schedule(t(7.0), "e1");
        q.schedule(t(7.0), "e2");
        assert_eq!(drain(&mut q, 10.0), ["e1", "e2"]);
    }

    #[test]
    fn cancelled_event_never_dispatches() {
        let mut q = EventQueue::new();
        let tok = q.schedule(t(3.0), "x");
        q.schedule(t(4.0), "y");
        q.cancel(tok);
        assert_eq!(q.len(), 1);
        assert_eq!(drain(&mut q, 10.0), ["y"]);
        // cancelling after the fact is harmless
        q.cancel(tok);
        assert!(q.is_empty());
    }

    #[test]
    fn run_until_stops_at_horizon() {
        let mut q = EventQueue::new();
        q.schedule(t(2.0), "a");
        q.schedule(t(9.0), "b");
        let mut seen = 0;
        let stats = q.run_until(t(5.0), |_, _, _| seen += 1);
        assert_eq!(stats.dispatched, 1);
        assert_eq!(seen, 1);
        assert_eq!(q.now(), t(5.0));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn run_until_on_empty_queue() {
        let mut q: EventQueue<()> = EventQueue::new();
        let stats = q.run_until(t(10.0), |_, _, _| {});
        assert_eq!(stats.dispatched, 0);
        assert_eq!(q.now(), t(10.0));
    }

    #[test]
    fn handler_cascade_within_horizon() {
        // t=2 handler schedules t=4; both fall before t=5.
        let mut q = EventQueue::new();
        q.schedule(t(2.0), 2u32);
        let mut fired = Vec::new();
        let stats = q.run_until(t(5.0), |q, now, a| {
            fired.push((now.as_secs(), a));
            if a == 2 {
                q.schedule(t(4.0), 4);
            }
        });
        assert_eq!(stats.dispatched, 2);
        assert_eq!(fired, [(2.0, 2), (4.0, 4)]);
    }

    #[test]
    #[should_panic(expected = "in the past")]
    fn scheduling_in_past_panics() {
        let mut q = EventQueue::new();
        q.schedule(t(5.0), ());
        q.run_until(t(5.0), |_, _, _| {});
        q.schedule(t(1.0), ());
    }

    #[test]
    #[should_panic]
    fn nan_time_rejected() {
        SimTime::from_secs(f64::NAN);
    }

    #[test]
    fn rng_same_name_same_sequence() {
        let mut a = RngStream::new(42, "loss.link.3");
        let mut b = RngStream::new(42, "loss.link.3");
        for _ in 0..1000 {
            assert_eq!(a.draw_uniform().to_bits(), b.draw_uniform().to_bits());
        }
    }

    #[test]
    fn rng_distinct_names_differ() {
        let mut a = RngStream::new(42, "a");
        let mut b = RngStream::new(42, "b");
        let xs: Vec<f64> = (0..16).map(|_| a.draw_uniform()).collect();
        let ys: Vec<f64> = (0..16).map(|_| b.draw_uniform()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn rng_mean_near_half() {
        let mut s = RngStream::new(7, "mean");
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.draw_uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn derived_seed_is_stable() {
        // Frozen so that a change in derivation (which would silently change
        // every recorded experiment) is caught.
        assert_eq!(derive_seed(0, ""), splitmix64(splitmix64(0xcbf2_9ce4_8422_2325)));
        assert_ne!(derive_seed(1, "x"), derive_seed(2, "x"));
    }

    proptest! {
        #[test]
        fn dispatch_order_sorted(times in proptest::collection::vec(0u32..50, 1..200)) {
            let mut q = EventQueue::new();
            for (i, &tm) in times.iter().enumerate() {
                q.schedule(t(f64::from(tm) * 0.5), i);
            }
            let mut seen = Vec::new();
            q.run_until(t(1000.0), |q, now, i| seen.push((now, i, q.now())));
            prop_assert_eq!(seen.len(), times.len());
            let mut expected: Vec<(u32, usize)> =
                times.iter().enumerate().map(|(i, &tm)| (tm, i)).collect();
            expected.sort();
            for (k, (now, i, clock)) in seen.iter().enumerate() {
                prop_assert_eq!(*i, expected[k].1);
                prop_assert_eq!(*now, *clock);
                if k > 0 {
                    prop_assert!(seen[k - 1].0 <= *now);
                }
            }
        }
    }
}
