//! Scripted semi-Markov processes with known structure, used to produce
//! fixture corpora and to benchmark synthesis against a known truth.
//!
//! Both processes run on one-minute intervals over a 1,440-minute day.
//! Episode durations are rounded lognormal draws, so they are far from the
//! geometric durations an interval-level chain produces.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::seqcore::{Corpus, IntervalSequence, StateAlphabet, StateId};

pub const DAY_MINUTES: usize = 1440;

/// Home, work, travel and leisure, in that order.
pub const ACTIVITY_LABELS: [&str; 4] = ["home", "work", "travel", "leisure"];

const HOME: StateId = 0;
const WORK: StateId = 1;
const TRAVEL: StateId = 2;
const LEISURE: StateId = 3;

/// Lognormal `(median, sigma)` per activity state.
const ACTIVITY_DURATIONS: [(f64, f64); 4] = [(120.0, 0.6), (240.0, 0.35), (25.0, 0.4), (60.0, 0.5)];
const FIRST_HOME: (f64, f64) = (420.0, 0.15);

/// Next-state probabilities for the activity day, as `(state, weight)`
/// pairs, depending on the current state and the minute the next episode
/// starts.
fn activity_next(cur: StateId, t: usize) -> &'static [(StateId, f64)] {
    match cur {
        HOME if t < 600 => &[(TRAVEL, 0.9), (LEISURE, 0.1)],
        HOME if t < 1080 => &[(TRAVEL, 0.5), (LEISURE, 0.5)],
        HOME => &[(LEISURE, 0.6), (TRAVEL, 0.4)],
        TRAVEL if t < 720 => &[(WORK, 0.8), (LEISURE, 0.1), (HOME, 0.1)],
        TRAVEL if t < 1020 => &[(HOME, 0.4), (WORK, 0.3), (LEISURE, 0.3)],
        TRAVEL => &[(HOME, 0.8), (LEISURE, 0.2)],
        WORK => &[(TRAVEL, 0.85), (LEISURE, 0.15)],
        _ if t < 1200 => &[(TRAVEL, 0.6), (HOME, 0.4)],
        _ => &[(HOME, 0.9), (TRAVEL, 0.1)],
    }
}

/// Trip-chain states: home, trip, work, shop.
pub const TRIP_LABELS: [&str; 4] = ["home", "trip", "work", "shop"];

pub const TRIP: StateId = 1;

const TRIP_DURATIONS: [(f64, f64); 4] = [(90.0, 0.4), (15.0, 0.3), (90.0, 0.4), (40.0, 0.4)];

/// Probability of each state after a trip, given the state before it.
/// Every non-trip episode is followed by a trip.
pub fn trip_next(before_trip: StateId) -> [f64; 4] {
    match before_trip {
        0 => [0.0, 0.0, 0.8, 0.2],
        2 => [0.8, 0.0, 0.0, 0.2],
        _ => [0.5, 0.0, 0.5, 0.0],
    }
}

fn pick<R: Rng + ?Sized>(options: &[(StateId, f64)], rng: &mut R) -> StateId {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut r = rng.random::<f64>() * total;
    for &(s, w) in options {
        if r < w {
            return s;
        }
        r -= w;
    }
    options.last().expect("non-empty options").0
}

fn lognormal_minutes<R: Rng + ?Sized>((median, sigma): (f64, f64), rng: &mut R) -> usize {
    let d = LogNormal::new(median.ln(), sigma).expect("valid lognormal").sample(rng);
    (d.round() as usize).max(1)
}

fn fill(states: &mut Vec<StateId>, state: StateId, duration: usize) {
    let take = duration.min(DAY_MINUTES - states.len());
    states.extend(std::iter::repeat_n(state, take));
}

/// One activity day: starts at home, then alternates time-of-day dependent
/// transitions with lognormal durations.
pub fn activity_day<R: Rng + ?Sized>(rng: &mut R) -> Vec<StateId> {
    let mut states = Vec::with_capacity(DAY_MINUTES);
    let mut cur = HOME;
    fill(&mut states, cur, lognormal_minutes(FIRST_HOME, rng));
    while states.len() < DAY_MINUTES {
        cur = pick(activity_next(cur, states.len()), rng);
        fill(
            &mut states,
            cur,
            lognormal_minutes(ACTIVITY_DURATIONS[cur as usize], rng),
        );
    }
    states
}

/// One trip-chain day: the state after each trip depends on the state
/// before it.
pub fn trip_chain_day<R: Rng + ?Sized>(rng: &mut R) -> Vec<StateId> {
    let mut states = Vec::with_capacity(DAY_MINUTES);
    let mut cur = pick(&[(0, 1.0), (2, 1.0), (3, 1.0)], rng);
    let mut before_trip = cur;
    fill(&mut states, cur, lognormal_minutes(TRIP_DURATIONS[cur as usize], rng));
    while states.len() < DAY_MINUTES {
        cur = if cur == TRIP {
            let p = trip_next(before_trip);
            let options: Vec<(StateId, f64)> = (0..4).map(|s| (s as StateId, p[s])).filter(|o| o.1 > 0.0).collect();
            pick(&options, rng)
        } else {
            before_trip = cur;
            TRIP
        };
        fill(&mut states, cur, lognormal_minutes(TRIP_DURATIONS[cur as usize], rng));
    }
    states
}

/// Minute-level activity counts for one day: an activity day mapped to
/// intensity levels with lognormal noise, and idle minutes at zero.
pub fn activity_counts_day<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    activity_day(rng)
        .into_iter()
        .map(|s| {
            let (idle, median) = match s {
                HOME => (0.6, 200.0),
                WORK => (0.3, 600.0),
                TRAVEL => (0.05, 1500.0),
                _ => (0.1, 2600.0),
            };
            if rng.random_bool(idle) {
                0.0
            } else {
                LogNormal::new(f64::ln(median), 0.5)
                    .expect("valid lognormal")
                    .sample(rng)
                    .round()
            }
        })
        .collect()
}

fn corpus_of<R: Rng + ?Sized>(
    labels: &[&str],
    prefix: &str,
    count: usize,
    rng: &mut R,
    day: fn(&mut R) -> Vec<StateId>,
) -> Corpus {
    let alphabet = StateAlphabet::new(labels.iter().copied()).expect("fixed labels are valid");
    let sequences = (0..count)
        .map(|i| IntervalSequence::new(format!("{prefix}{:05}", i + 1), day(rng)))
        .collect();
    Corpus::new(alphabet, sequences).expect("generated days are aligned")
}

pub fn activity_corpus<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Corpus {
    corpus_of(&ACTIVITY_LABELS, "day", count, rng, activity_day)
}

pub fn trip_chain_corpus<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Corpus {
    corpus_of(&TRIP_LABELS, "trip", count, rng, trip_chain_day)
}

/// Counts of `(before, after)` around each trip episode: `counts[before][after]`.
pub fn trip_context_counts(corpus: &Corpus) -> [[usize; 4]; 4] {
    let mut counts = [[0usize; 4]; 4];
    for ep in corpus.episodes() {
        for w in ep.episodes.windows(3) {
            if w[1].state == TRIP {
                counts[w[0].state as usize][w[2].state as usize] += 1;
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::rle_encode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn activity_days_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = activity_corpus(200, &mut rng);
        assert_eq!(c.sequence_length(), DAY_MINUTES);
        assert!(c.sequences().iter().all(|s| s.states[0] == HOME));
        let mean_eps = c.episodes().iter().map(|e| e.len()).sum::<usize>() as f64 / 200.0;
        assert!((4.0..20.0).contains(&mean_eps), "{mean_eps}");
        for s in 0..4 {
            assert!(c.sequences().iter().any(|q| q.states.contains(&s)));
        }
    }

    #[test]
    fn activity_counts_are_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let day = activity_counts_day(&mut rng);
        assert_eq!(day.len(), DAY_MINUTES);
        assert!(day.iter().all(|&v| v >= 0.0));
        assert!(day.contains(&0.0));
        assert!(day.iter().any(|&v| v > 2020.0));
    }

    #[test]
    fn trip_chain_follows_its_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = trip_chain_corpus(300, &mut rng);
        for seq in c.sequences() {
            let eps = rle_encode(seq).episodes;
            for w in eps.windows(2) {
                assert!((w[0].state == TRIP) != (w[1].state == TRIP));
            }
        }
        let counts = trip_context_counts(&c);
        for before in [0usize, 2] {
            let total: usize = counts[before].iter().sum();
            let p = counts[before][2 - before] as f64 / total as f64;
            assert!((p - 0.8).abs() < 0.05, "{before}: {p}");
        }
    }
}
