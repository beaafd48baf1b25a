//! X/Y update workloads and hit/miss probe generation.
//!
//! A run pre-generates its build keys and every insert round up front; the
//! union is the generated key set. Deletes remove whole insert rounds in
//! insertion order, so liveness is tracked per segment rather than per key.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::node::{KeyValue, RESERVED_KEY};

pub const DEFAULT_KEY_MIN: u64 = 1;
pub const DEFAULT_KEY_MAX: u64 = 1 << 62;

/// Rejections tolerated for a single key before the space counts as full.
const MAX_ATTEMPTS: u32 = 10_000;

/// Independent RNG streams, one per purpose.
#[derive(Clone, Copy)]
enum Stream {
    Dense = 1,
    Build = 2,
    Insert = 3,
    ProbeHit = 4,
    ProbeMiss = 5,
    ProbeSuccessor = 6,
}

fn rng(seed: u64, stream: Stream, round: u32) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((stream as u64) << 32) | round as u64);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    Insert(u32),
    Delete(u32),
    ProbeHit(u32),
    ProbeMiss(u32),
    ProbeSuccessor(u32),
    Restructure(u32),
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Insert(_) => "insert",
            Phase::Delete(_) => "delete",
            Phase::ProbeHit(_) => "probe-hit",
            Phase::ProbeMiss(_) => "probe-miss",
            Phase::ProbeSuccessor(_) => "probe-successor",
            Phase::Restructure(_) => "restructure",
        }
    }

    /// Global 1-based round the phase belongs to (0 for the post-build state).
    pub fn round(self) -> u32 {
        match self {
            Phase::Insert(r)
            | Phase::Delete(r)
            | Phase::ProbeHit(r)
            | Phase::ProbeMiss(r)
            | Phase::ProbeSuccessor(r)
            | Phase::Restructure(r) => r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum ProbeMode {
    #[default]
    None,
    Hit,
    Miss,
    Successor,
    /// One all-hit and one all-miss batch.
    Both,
}

impl FromStr for ProbeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ProbeMode::None),
            "hit" => Ok(ProbeMode::Hit),
            "miss" => Ok(ProbeMode::Miss),
            "successor" => Ok(ProbeMode::Successor),
            "both" => Ok(ProbeMode::Both),
            _ => Err(format!("unknown probe mode `{s}` (none, hit, miss, successor, both)")),
        }
    }
}

impl fmt::Display for ProbeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProbeMode::None => "none",
            ProbeMode::Hit => "hit",
            ProbeMode::Miss => "miss",
            ProbeMode::Successor => "successor",
            ProbeMode::Both => "both",
        };
        f.write_str(s)
    }
}

/// Shape of a multi-round experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanOptions {
    /// Total rounds; the first `deletes_after` insert, the rest delete.
    pub rounds: u32,
    pub deletes_after: u32,
    pub probe: ProbeMode,
    /// Restructure after every `n`-th round.
    pub restructure_every: Option<u32>,
    pub restructure_after_deletes: bool,
}

impl PlanOptions {
    pub fn insert_rounds(&self) -> u32 {
        self.deletes_after.min(self.rounds)
    }

    pub fn delete_rounds(&self) -> u32 {
        self.rounds - self.insert_rounds()
    }

    pub fn validate(&self) -> Result<()> {
        if self.delete_rounds() > self.insert_rounds() {
            return Err(Error::InvalidWorkload(format!(
                "{} delete rounds but only {} insert rounds to undo",
                self.delete_rounds(),
                self.insert_rounds()
            )));
        }
        if self.restructure_every == Some(0) {
            return Err(Error::InvalidWorkload("restructure interval must be positive".into()));
        }
        Ok(())
    }

    /// Each round runs its update phase, then its probes, then an optional
    /// restructure. Delete round `r` removes the keys of insert round
    /// `r - insert_rounds`.
    pub fn phases(&self) -> Vec<Phase> {
        let mut plan = Vec::new();
        let inserts = self.insert_rounds();
        for r in 1..=self.rounds {
            plan.push(if r <= inserts { Phase::Insert(r) } else { Phase::Delete(r) });
            match self.probe {
                ProbeMode::None => {}
                ProbeMode::Hit => plan.push(Phase::ProbeHit(r)),
                ProbeMode::Miss => plan.push(Phase::ProbeMiss(r)),
                ProbeMode::Successor => plan.push(Phase::ProbeSuccessor(r)),
                ProbeMode::Both => {
                    plan.push(Phase::ProbeHit(r));
                    plan.push(Phase::ProbeMiss(r));
                }
            }
            if self.restructure_every.is_some_and(|n| r % n == 0) {
                plan.push(Phase::Restructure(r));
            }
        }
        let last_is_restructure = matches!(plan.last(), Some(Phase::Restructure(_)));
        if self.restructure_after_deletes && self.delete_rounds() > 0 && !last_is_restructure {
            plan.push(Phase::Restructure(self.rounds));
        }
        plan
    }
}

/// Parameters of the key generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkloadSpec {
    pub key_min: u64,
    pub key_max: u64,
    /// Percentage of the key space covered by the dense interval.
    pub x: f64,
    /// Percentage of each update batch drawn inside the dense interval.
    pub y: f64,
    pub build_size: usize,
    /// Keys per insert round.
    pub batch_size: usize,
    /// Keys per probe batch.
    pub probe_size: usize,
    pub seed: u64,
    pub plan: PlanOptions,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            key_min: DEFAULT_KEY_MIN,
            key_max: DEFAULT_KEY_MAX,
            x: 90.0,
            y: 90.0,
            build_size: 1 << 16,
            batch_size: 1 << 14,
            probe_size: 1 << 14,
            seed: 42,
            plan: PlanOptions {
                rounds: 4,
                deletes_after: 4,
                probe: ProbeMode::None,
                restructure_every: None,
                restructure_after_deletes: false,
            },
        }
    }
}

impl WorkloadSpec {
    /// Batch size that grows a `build_size` index by `growth_percent` over
    /// `insert_rounds` equal rounds.
    pub fn batch_for_growth(build_size: usize, growth_percent: f64, insert_rounds: u32) -> usize {
        if insert_rounds == 0 {
            return 0;
        }
        (build_size as f64 * growth_percent / 100.0 / insert_rounds as f64 + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidWorkload(msg));
        if !(self.x > 0.0 && self.x <= 100.0) {
            return bad(format!("X must be in (0, 100], got {}", self.x));
        }
        if !(self.y > 0.0 && self.y <= 100.0) {
            return bad(format!("Y must be in (0, 100], got {}", self.y));
        }
        if self.key_min > self.key_max || self.key_max == RESERVED_KEY {
            return bad(format!("key space [{}, {}] is empty or touches the sentinel", self.key_min, self.key_max));
        }
        self.plan.validate()
    }

    fn span(&self) -> u64 {
        self.key_max - self.key_min + 1
    }

    /// The dense interval: `X%` of the key space at a seed-derived offset.
    pub fn dense_interval(&self) -> (u64, u64) {
        let span = self.span();
        let width = ((span as f64 * self.x / 100.0) as u64).clamp(1, span);
        let start = self.key_min + rng(self.seed, Stream::Dense, 0).gen_range(0..=span - width);
        (start, start + (width - 1))
    }
}

/// Every key a run will ever insert: the build keys (segment 0) followed by
/// one segment per insert round.
#[derive(Clone, Debug, Default)]
pub struct GeneratedKeySet {
    segments: Vec<Vec<KeyValue>>,
    members: HashSet<u64>,
}

impl GeneratedKeySet {
    pub fn segments(&self) -> &[Vec<KeyValue>] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &[KeyValue] {
        &self.segments[i]
    }

    pub fn contains(&self, key: u64) -> bool {
        self.members.contains(&key)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn push_fresh(&mut self, rng: &mut ChaCha8Rng, draw: impl Fn(&mut ChaCha8Rng) -> u64, wanted: usize) -> Result<u64> {
        for _ in 0..MAX_ATTEMPTS {
            let k = draw(rng);
            if self.members.insert(k) {
                return Ok(k);
            }
        }
        Err(Error::KeySpaceExhausted { wanted })
    }
}

/// `n` distinct build keys drawn uniformly over the key space. Becomes
/// segment 0 of `set`.
pub fn gen_build(spec: &WorkloadSpec, set: &mut GeneratedKeySet) -> Result<Vec<KeyValue>> {
    spec.validate()?;
    let n = spec.build_size;
    if (n as u64) > spec.span() {
        return Err(Error::KeySpaceExhausted { wanted: n });
    }
    let mut r = rng(spec.seed, Stream::Build, 0);
    let (lo, hi) = (spec.key_min, spec.key_max);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let k = set.push_fresh(&mut r, |r| r.gen_range(lo..=hi), n)?;
        pairs.push(KeyValue::new(k, r.gen()));
    }
    set.segments.push(pairs.clone());
    Ok(pairs)
}

/// One insert round: `floor(Y% × batch)` fresh keys inside the dense
/// interval, the rest uniform over the key space outside it. The batch comes
/// back shuffled and is appended to `set` as a new segment.
pub fn gen_update_batch(spec: &WorkloadSpec, round: u32, set: &mut GeneratedKeySet) -> Result<Vec<KeyValue>> {
    spec.validate()?;
    let n = spec.batch_size;
    let (d_lo, d_hi) = spec.dense_interval();
    let dense_width = d_hi - d_lo + 1;
    let rest_width = spec.span() - dense_width;
    let n_dense = if rest_width == 0 { n } else { (n as f64 * spec.y / 100.0 + 1e-9).floor() as usize };
    let key_min = spec.key_min;
    let outside = move |r: &mut ChaCha8Rng| {
        let u = r.gen_range(0..rest_width);
        if u < d_lo - key_min {
            key_min + u
        } else {
            key_min + u + dense_width
        }
    };

    let mut r = rng(spec.seed, Stream::Insert, round);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let k = if i < n_dense {
            set.push_fresh(&mut r, |r| r.gen_range(d_lo..=d_hi), n)?
        } else {
            set.push_fresh(&mut r, outside, n)?
        };
        pairs.push(KeyValue::new(k, r.gen()));
    }
    pairs.shuffle(&mut r);
    set.segments.push(pairs.clone());
    Ok(pairs)
}

/// A probe batch; `exhausted` is set when the pool to draw from was empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProbeBatch {
    pub keys: Vec<u64>,
    pub exhausted: bool,
}

/// Which segments of a [`GeneratedKeySet`] are currently in the index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Liveness {
    live: Vec<bool>,
}

impl Liveness {
    /// Only the build segment is live.
    pub fn after_build(set: &GeneratedKeySet) -> Self {
        let mut live = vec![false; set.segments.len()];
        if let Some(b) = live.first_mut() {
            *b = true;
        }
        Liveness { live }
    }

    pub fn set(&mut self, segment: usize, live: bool) {
        self.live[segment] = live;
    }

    pub fn is_live(&self, segment: usize) -> bool {
        self.live[segment]
    }

    fn pool<'s>(&self, set: &'s GeneratedKeySet, want_live: bool) -> Vec<&'s [KeyValue]> {
        set.segments
            .iter()
            .zip(&self.live)
            .filter(|(s, &l)| l == want_live && !s.is_empty())
            .map(|(s, _)| s.as_slice())
            .collect()
    }
}

fn draw_from(pool: &[&[KeyValue]], n: usize, mut r: ChaCha8Rng) -> ProbeBatch {
    let total: usize = pool.iter().map(|s| s.len()).sum();
    if total == 0 {
        return ProbeBatch { keys: Vec::new(), exhausted: true };
    }
    let keys = (0..n)
        .map(|_| {
            let mut i = r.gen_range(0..total);
            for s in pool {
                if i < s.len() {
                    return s[i].key;
                }
                i -= s.len();
            }
            unreachable!()
        })
        .collect();
    ProbeBatch { keys, exhausted: false }
}

/// `n` keys drawn uniformly, with repetition, from the keys currently live.
pub fn gen_probe_hit(set: &GeneratedKeySet, live: &Liveness, n: usize, seed: u64, round: u32) -> ProbeBatch {
    draw_from(&live.pool(set, true), n, rng(seed, Stream::ProbeHit, round))
}

/// `n` keys drawn uniformly, with repetition, from generated keys that are
/// not live. Empty and flagged once every generated key is live.
pub fn gen_probe_miss(set: &GeneratedKeySet, live: &Liveness, n: usize, seed: u64, round: u32) -> ProbeBatch {
    draw_from(&live.pool(set, false), n, rng(seed, Stream::ProbeMiss, round))
}

/// `n` keys uniform over the whole key space, for successor queries.
pub fn gen_probe_successor(spec: &WorkloadSpec, n: usize, round: u32) -> ProbeBatch {
    let mut r = rng(spec.seed, Stream::ProbeSuccessor, round);
    let keys = (0..n).map(|_| r.gen_range(spec.key_min..=spec.key_max)).collect();
    ProbeBatch { keys, exhausted: false }
}

/// A fully generated run: build pairs plus one batch per insert round.
#[derive(Clone, Debug)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub keys: GeneratedKeySet,
}

impl Workload {
    pub fn generate(spec: &WorkloadSpec) -> Result<Workload> {
        let mut keys = GeneratedKeySet::default();
        gen_build(spec, &mut keys)?;
        for r in 1..=spec.plan.insert_rounds() {
            gen_update_batch(spec, r, &mut keys)?;
        }
        Ok(Workload { spec: spec.clone(), keys })
    }

    pub fn build_pairs(&self) -> &[KeyValue] {
        self.keys.segment(0)
    }

    /// Pairs inserted in insert round `r` (1-based).
    pub fn insert_batch(&self, r: u32) -> &[KeyValue] {
        self.keys.segment(r as usize)
    }

    /// Segment removed by global round `r`, a delete round.
    pub fn delete_segment(&self, r: u32) -> usize {
        (r - self.spec.plan.insert_rounds()) as usize
    }

    pub fn delete_keys(&self, r: u32) -> Vec<u64> {
        self.keys.segment(self.delete_segment(r)).iter().map(|kv| kv.key).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(x: f64, y: f64, batch: usize) -> WorkloadSpec {
        WorkloadSpec { x, y, batch_size: batch, build_size: 1000, ..Default::default() }
    }

    #[test]
    fn dense_share_matches_y() {
        for (x, y) in [(6.0, 90.0), (25.0, 90.0), (3.0, 50.0), (90.0, 90.0)] {
            let s = spec(x, y, 10_000);
            let mut set = GeneratedKeySet::default();
            let batch = gen_update_batch(&s, 1, &mut set).unwrap();
            let (lo, hi) = s.dense_interval();
            let inside = batch.iter().filter(|kv| (lo..=hi).contains(&kv.key)).count();
            let share = inside as f64 / batch.len() as f64 * 100.0;
            assert!((share - y).abs() <= 2.0, "x={x} y={y} share={share}");
            let width = (hi - lo + 1) as f64 / (s.key_max - s.key_min + 1) as f64 * 100.0;
            assert!((width - x).abs() < 1e-6);
        }
    }

    #[test]
    fn full_range_is_plain_uniform() {
        let s = spec(100.0, 100.0, 5000);
        assert_eq!(s.dense_interval(), (s.key_min, s.key_max));
        let mut set = GeneratedKeySet::default();
        let batch = gen_update_batch(&s, 1, &mut set).unwrap();
        assert_eq!(batch.len(), 5000);
        let below_half = batch.iter().filter(|kv| kv.key < 1 << 61).count();
        assert!((2300..2700).contains(&below_half));
    }

    #[test]
    fn keys_are_fresh_across_rounds() {
        let s = WorkloadSpec { key_min: 1, key_max: 5000, x: 30.0, y: 50.0, batch_size: 400, build_size: 1000, ..Default::default() };
        let mut set = GeneratedKeySet::default();
        let mut all = gen_build(&s, &mut set).unwrap();
        for r in 1..=4 {
            all.extend(gen_update_batch(&s, r, &mut set).unwrap());
        }
        let unique: HashSet<u64> = all.iter().map(|kv| kv.key).collect();
        assert_eq!(unique.len(), all.len());
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(|kv| (1..=5000).contains(&kv.key)));
    }

    #[test]
    fn exhausted_key_space_is_an_error() {
        let s = WorkloadSpec { key_min: 1, key_max: 100, x: 10.0, y: 100.0, batch_size: 20, build_size: 0, ..Default::default() };
        let mut set = GeneratedKeySet::default();
        assert!(matches!(gen_update_batch(&s, 1, &mut set), Err(Error::KeySpaceExhausted { .. })));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = WorkloadSpec { x: 6.0, ..Default::default() };
        let a = Workload::generate(&s).unwrap();
        let b = Workload::generate(&s).unwrap();
        assert_eq!(a.keys.segments(), b.keys.segments());
        let other = Workload::generate(&WorkloadSpec { seed: 43, ..s }).unwrap();
        assert_ne!(a.keys.segments(), other.keys.segments());
    }

    #[test]
    fn probes_follow_liveness() {
        let s = WorkloadSpec { build_size: 100, batch_size: 50, ..Default::default() };
        let w = Workload::generate(&s).unwrap();
        let mut live = Liveness::after_build(&w.keys);
        let hits = gen_probe_hit(&w.keys, &live, 500, 1, 0);
        assert!(hits.keys.iter().all(|k| w.build_pairs().iter().any(|kv| kv.key == *k)));
        let misses = gen_probe_miss(&w.keys, &live, 500, 1, 0);
        assert!(misses.keys.iter().all(|k| !w.build_pairs().iter().any(|kv| kv.key == *k)));
        for seg in 1..=4 {
            live.set(seg, true);
        }
        let none = gen_probe_miss(&w.keys, &live, 500, 1, 4);
        assert!(none.exhausted && none.keys.is_empty());
        assert_eq!(gen_probe_hit(&w.keys, &live, 7, 1, 4).keys.len(), 7);
    }

    #[test]
    fn plan_layout() {
        let p = PlanOptions {
            rounds: 4,
            deletes_after: 2,
            probe: ProbeMode::Both,
            restructure_every: None,
            restructure_after_deletes: true,
        };
        assert_eq!(
            p.phases(),
            vec![
                Phase::Insert(1),
                Phase::ProbeHit(1),
                Phase::ProbeMiss(1),
                Phase::Insert(2),
                Phase::ProbeHit(2),
                Phase::ProbeMiss(2),
                Phase::Delete(3),
                Phase::ProbeHit(3),
                Phase::ProbeMiss(3),
                Phase::Delete(4),
                Phase::ProbeHit(4),
                Phase::ProbeMiss(4),
                Phase::Restructure(4),
            ]
        );
        let bad = PlanOptions { deletes_after: 1, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn growth_batch_size() {
        assert_eq!(WorkloadSpec::batch_for_growth(1 << 20, 300.0, 8), 393_216);
        assert_eq!(WorkloadSpec::batch_for_growth(100, 100.0, 4), 25);
    }
}
