//! IND-CPA game simulation under a BDHE-style challenge embedding.
//!
//! Each round runs a fresh Setup, flips the challenge bit, hides `M_b`
//! behind `T` (real `e(g,g)^(a^(l+1))` or random) and asks the adversary for
//! a guess. Rounds are independent and run in parallel; round `i` draws from
//! ChaCha20 seeded with the game seed on stream `i`.

use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::groups::{Backend, GroupElem};
use crate::policy::{build_matrix, Attribute, PolicyError, PolicyNode};
use crate::scheme::{
    keygen, keygen_retained, rekeygen_paper, setup, MasterSecretKey, PublicKey, ReKey, SchemeError,
    TargetKey, UserSecretKey,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("challenge messages differ in length ({0} vs {1} bytes)")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl GameError {
    pub fn name(&self) -> &'static str {
        match self {
            GameError::InvalidParameter(_) => "InvalidParameter",
            GameError::LengthMismatch(..) => "LengthMismatch",
            GameError::Scheme(e) => e.name(),
            GameError::Policy(e) => e.name(),
        }
    }
}

/// Challenger-side BDHE instance. `a` and `s` never leave the challenger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BdheChallenge<B: Backend> {
    pub t: B::Gt,
    pub is_real: bool,
    pub l: usize,
    pub a: B::Scalar,
    pub s: B::Scalar,
}

pub fn sample_bdhe<B: Backend, R: RngCore + ?Sized>(
    backend: &B,
    l: usize,
    rng: &mut R,
) -> Result<BdheChallenge<B>, GameError> {
    let is_real = rng.gen::<bool>();
    let a = backend.random_scalar(rng);
    let s = backend.random_scalar(rng);
    sample_bdhe_with(backend, l, a, s, is_real)
}

/// Real: `T = gt^(a^(l+1))`. Random: `T = gt^s`.
pub fn sample_bdhe_with<B: Backend>(
    backend: &B,
    l: usize,
    a: B::Scalar,
    s: B::Scalar,
    is_real: bool,
) -> Result<BdheChallenge<B>, GameError> {
    if l < 1 {
        return Err(GameError::InvalidParameter("l must be at least 1".into()));
    }
    let exponent = if is_real {
        backend.scalar_pow(&a, l as u64 + 1)
    } else {
        s
    };
    Ok(BdheChallenge {
        t: backend.gt().exp(&exponent),
        is_real,
        l,
        a,
        s,
    })
}

/// `CT'_1 = {M_b * T, g1^(n v)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeCiphertext<B: Backend> {
    pub a1p: B::Gt,
    pub a2p: B::G1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Keygen,
    Rekey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub kind: QueryKind,
    pub attrs: Vec<String>,
    pub refused: bool,
}

/// Key and re-encryption-key oracle for both query phases. Refuses any
/// attribute set that satisfies the challenge policy.
pub struct KeyOracle<'a, B: Backend> {
    msk: &'a MasterSecretKey<B>,
    pk: &'a PublicKey<B>,
    policy: &'a PolicyNode,
    transcript: Vec<TranscriptEntry>,
    rng: ChaCha20Rng,
}

impl<'a, B: Backend> KeyOracle<'a, B> {
    fn admit(&mut self, kind: QueryKind, attrs: &BTreeSet<Attribute>) -> bool {
        let refused = self.policy.is_satisfied_by(attrs);
        self.transcript.push(TranscriptEntry {
            kind,
            attrs: attrs.iter().map(ToString::to_string).collect(),
            refused,
        });
        !refused
    }

    pub fn keygen(
        &mut self,
        attrs: &BTreeSet<Attribute>,
    ) -> Result<Option<UserSecretKey<B>>, GameError> {
        if !self.admit(QueryKind::Keygen, attrs) {
            return Ok(None);
        }
        Ok(Some(keygen(self.msk, self.pk, attrs, &mut self.rng)?))
    }

    pub fn rekey(
        &mut self,
        attrs: &BTreeSet<Attribute>,
        target: &TargetKey<B>,
    ) -> Result<Option<ReKey<B>>, GameError> {
        if !self.admit(QueryKind::Rekey, attrs) {
            return Ok(None);
        }
        let (usk, secrets) = keygen_retained(self.msk, self.pk, attrs, &mut self.rng)?;
        Ok(Some(rekeygen_paper(
            &usk,
            &secrets,
            target,
            self.pk,
            &mut self.rng,
        )?))
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }
}

/// Everything the adversary is allowed to see.
pub struct AdversaryView<'a, B: Backend> {
    pub pk: &'a PublicKey<B>,
    pub policy: &'a PolicyNode,
    pub m0: &'a [u8],
    pub m1: &'a [u8],
    pub challenge: &'a ChallengeCiphertext<B>,
}

pub trait Adversary<B: Backend>: Sync {
    fn guess(
        &self,
        view: &AdversaryView<'_, B>,
        oracle: &mut KeyOracle<'_, B>,
        rng: &mut dyn RngCore,
    ) -> Result<u8, GameError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    RandomGuess,
    ConstantZero,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random-guess" => Some(Strategy::RandomGuess),
            "constant-zero" => Some(Strategy::ConstantZero),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::RandomGuess => "random-guess",
            Strategy::ConstantZero => "constant-zero",
        }
    }
}

impl<B: Backend> Adversary<B> for Strategy {
    fn guess(
        &self,
        _: &AdversaryView<'_, B>,
        _: &mut KeyOracle<'_, B>,
        rng: &mut dyn RngCore,
    ) -> Result<u8, GameError> {
        Ok(match self {
            Strategy::RandomGuess => rng.gen_range(0..2),
            Strategy::ConstantZero => 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GameRound<B: Backend> {
    pub challenge_bit: u8,
    pub adversary_guess: u8,
    pub win: bool,
    pub bdhe: BdheChallenge<B>,
    pub challenge: ChallengeCiphertext<B>,
    pub transcript: Vec<TranscriptEntry>,
}

/// Setup over `universe`, then [`play_round`] with the same rng.
pub fn run_round<B: Backend, A: Adversary<B> + ?Sized, R: RngCore + ?Sized>(
    backend: &B,
    universe: &[Attribute],
    policy: &PolicyNode,
    m0: &[u8],
    m1: &[u8],
    adversary: &A,
    rng: &mut R,
) -> Result<GameRound<B>, GameError> {
    check_lengths(m0, m1)?;
    let (msk, pk) = setup(backend.clone(), universe, rng)?;
    play_round(&msk, &pk, policy, m0, m1, adversary, rng)
}

fn check_lengths(m0: &[u8], m1: &[u8]) -> Result<(), GameError> {
    if m0.len() != m1.len() {
        return Err(GameError::LengthMismatch(m0.len(), m1.len()));
    }
    Ok(())
}

/// Challenge, both query phases and the guess, against existing keys.
pub fn play_round<B: Backend, A: Adversary<B> + ?Sized, R: RngCore + ?Sized>(
    msk: &MasterSecretKey<B>,
    pk: &PublicKey<B>,
    policy: &PolicyNode,
    m0: &[u8],
    m1: &[u8],
    adversary: &A,
    rng: &mut R,
) -> Result<GameRound<B>, GameError> {
    check_lengths(m0, m1)?;
    let backend = &pk.backend;
    let l = build_matrix(policy)?.num_rows();

    let challenge_bit: u8 = rng.gen_range(0..2);
    let bdhe = sample_bdhe(backend, l, rng)?;
    let m_b = backend
        .encode_message(if challenge_bit == 0 { m0 } else { m1 })
        .map_err(SchemeError::from)?;
    let v = backend.random_scalar(rng);
    let challenge = ChallengeCiphertext {
        a1p: m_b.op(&bdhe.t),
        a2p: pk.h.g1.exp(&v),
    };

    let mut oracle = KeyOracle {
        msk,
        pk,
        policy,
        transcript: Vec::new(),
        rng: ChaCha20Rng::from_seed(rng.gen()),
    };
    let view = AdversaryView {
        pk,
        policy,
        m0,
        m1,
        challenge: &challenge,
    };
    let mut adv_rng = ChaCha20Rng::from_seed(rng.gen());
    let guess = adversary.guess(&view, &mut oracle, &mut adv_rng)? & 1;
    Ok(GameRound {
        challenge_bit,
        adversary_guess: guess,
        win: guess == challenge_bit,
        bdhe,
        challenge,
        transcript: oracle.transcript,
    })
}

#[derive(Debug, Clone)]
pub struct GameConfig {
    pub universe: Vec<Attribute>,
    pub policy: PolicyNode,
    pub m0: Vec<u8>,
    pub m1: Vec<u8>,
    pub trials: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameStats {
    pub trials: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub advantage: f64,
    pub real_fraction: f64,
    pub seed: u64,
    #[serde(skip)]
    pub real_rounds: usize,
    #[serde(skip)]
    pub wins_given_real: usize,
}

impl GameStats {
    pub fn from_rounds(seed: u64, rounds: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut trials, mut wins, mut real, mut wins_real) = (0, 0, 0, 0);
        for (win, is_real) in rounds {
            trials += 1;
            wins += usize::from(win);
            real += usize::from(is_real);
            wins_real += usize::from(win && is_real);
        }
        let rate = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let win_rate = rate(wins, trials);
        GameStats {
            trials,
            wins,
            win_rate,
            advantage: (win_rate - 0.5).abs(),
            real_fraction: rate(real, trials),
            seed,
            real_rounds: real,
            wins_given_real: wins_real,
        }
    }

    pub fn win_rate_given_real(&self) -> Option<f64> {
        (self.real_rounds > 0).then(|| self.wins_given_real as f64 / self.real_rounds as f64)
    }

    pub fn win_rate_given_random(&self) -> Option<f64> {
        let n = self.trials - self.real_rounds;
        (n > 0).then(|| (self.wins - self.wins_given_real) as f64 / n as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Zero-pads the shorter message so both have the longer one's length.
pub fn pad_to_equal(m0: &[u8], m1: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let len = m0.len().max(m1.len());
    let pad = |m: &[u8]| {
        let mut v = m.to_vec();
        v.resize(len, 0);
        v
    };
    (pad(m0), pad(m1))
}

/// Round `index` of a game seeded with `seed`.
pub fn round_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `config.trials` independent rounds. Messages of unequal length are
/// zero-padded to a common length first.
pub fn run_game<B: Backend>(backend: &B, config: &GameConfig) -> Result<GameStats, GameError> {
    run_game_with(backend, config, &config.strategy)
}

/// Like [`run_game`] with a caller-supplied adversary in place of `config.strategy`.
pub fn run_game_with<B: Backend, A: Adversary<B> + ?Sized>(
    backend: &B,
    config: &GameConfig,
    adversary: &A,
) -> Result<GameStats, GameError> {
    if config.trials == 0 {
        return Err(GameError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    let (m0, m1) = pad_to_equal(&config.m0, &config.m1);
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let round = run_round(
                backend,
                &config.universe,
                &config.policy,
                &m0,
                &m1,
                adversary,
                &mut round_rng(config.seed, i),
            )?;
            Ok((round.win, round.bdhe.is_real))
        })
        .collect::<Result<Vec<_>, GameError>>()?;
    Ok(GameStats::from_rounds(config.seed, outcomes))
}
