use super::{Episode, EpisodeSequence, IntervalSequence};

/// Run-length encodes an interval sequence into maximal episodes.
pub fn rle_encode(seq: &IntervalSequence) -> EpisodeSequence {
    let mut episodes: Vec<Episode> = Vec::new();
    for (t, &state) in seq.states.iter().enumerate() {
        match episodes.last_mut() {
            Some(last) if last.state == state => last.duration += 1,
            _ => episodes.push(Episode {
                state,
                duration: 1,
                start: t as u32,
            }),
        }
    }
    EpisodeSequence {
        episodes,
        total_length: seq.states.len() as u32,
    }
}

/// Expands episodes back to one state per interval.
pub fn rle_decode(eseq: &EpisodeSequence, id: impl Into<String>) -> IntervalSequence {
    let mut states = Vec::with_capacity(eseq.total_length as usize);
    for ep in &eseq.episodes {
        states.extend(std::iter::repeat_n(ep.state, ep.duration as usize));
    }
    IntervalSequence::new(id, states)
}
