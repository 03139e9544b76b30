//! Prover implementations: the trapdoor-powered ideal prover, the exact
//! quantum simulator, three classical baselines and two simplified provers.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{Answer, Challenge, Prover, SimplifiedProver};
use crate::devices::SimplifiedDevice;
use crate::error::{Error, Result};
use crate::modq::{binary_map_j, BitString, ModVec};
use crate::ntcf::{NtcfKeyPair, PublicKey};
use crate::qsim::{Collapsed, StateVector};
use crate::rng::substream;

/// The prover catalogue, by command-line name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverKind {
    Ideal,
    QsimMicro,
    ClassicalCommitted,
    ClassicalReplay,
    ClassicalRandom,
    Remote,
}

impl ProverKind {
    pub const ALL: [ProverKind; 6] = [
        ProverKind::Ideal,
        ProverKind::QsimMicro,
        ProverKind::ClassicalCommitted,
        ProverKind::ClassicalReplay,
        ProverKind::ClassicalRandom,
        ProverKind::Remote,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProverKind::Ideal => "ideal",
            ProverKind::QsimMicro => "qsim-micro",
            ProverKind::ClassicalCommitted => "classical-committed",
            ProverKind::ClassicalReplay => "classical-replay",
            ProverKind::ClassicalRandom => "classical-random",
            ProverKind::Remote => "remote",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown prover {name:?}")))
    }

    /// Builds a local prover whose randomness is the `prover` substream of
    /// `(seed, session)`.
    pub fn build(self, seed: u64, session: u64) -> Result<Box<dyn Prover + Send>> {
        let rng = substream(seed, session, "prover", 0);
        Ok(match self {
            ProverKind::Ideal => Box::new(IdealProver::new(rng)),
            ProverKind::QsimMicro => Box::new(QsimProver::new(rng)),
            ProverKind::ClassicalCommitted => Box::new(CommittedProver::new(rng)),
            ProverKind::ClassicalReplay => Box::new(ReplayProver::new(rng)),
            ProverKind::ClassicalRandom => Box::new(RandomProver::new(rng)),
            ProverKind::Remote => {
                return Err(Error::InvalidParameter("a remote prover is reached over the wire, not built".into()))
            }
        })
    }
}

fn no_key() -> Error {
    Error::Protocol("no key received yet".into())
}

fn equation_width(pk: &PublicKey) -> usize {
    pk.n() * pk.ring().bits()
}

/// Samples the honest image distribution and answers equations with the
/// trapdoor. Statistically identical to the honest quantum prover.
pub struct IdealProver {
    rng: ChaCha20Rng,
    key: Option<NtcfKeyPair>,
    current: Option<(u8, ModVec, ModVec)>,
}

impl IdealProver {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, key: None, current: None }
    }
}

impl Prover for IdealProver {
    fn name(&self) -> String {
        "ideal".into()
    }

    fn needs_trapdoor(&self) -> bool {
        true
    }

    fn receive_key(&mut self, _epoch: u64, _key: &PublicKey, trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        let key = trapdoor.ok_or_else(|| Error::InvalidParameter("the ideal prover needs the trapdoor".into()))?;
        self.key = Some(key.clone());
        Ok(())
    }

    fn sample(&mut self, _round: u64, _attempt: u32) -> Result<ModVec> {
        let key = self.key.as_ref().ok_or_else(no_key)?;
        let (b, x, y) = key.public().sample_image(&mut self.rng);
        self.current = Some((b, x, y.clone()));
        Ok(y)
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let key = self.key.as_ref().ok_or_else(no_key)?;
        let (b, x, y) = self.current.take().ok_or_else(|| Error::Protocol("challenge before sample".into()))?;
        if challenge.c == 1 {
            return Ok(Answer::Preimage { b, x });
        }
        let claw = key.claw(&y).map_err(|e| Error::Protocol(format!("own image not invertible: {e}")))?;
        let d = BitString::random(equation_width(key.public()), &mut self.rng);
        let u = d.dot(&binary_map_j(&claw.x0).xor(&binary_map_j(&claw.x1)));
        Ok(Answer::Equation { u, d })
    }
}

/// Runs the honest quantum procedure on an exact state vector.
pub struct QsimProver {
    rng: ChaCha20Rng,
    state: Option<StateVector>,
    collapsed: Option<Collapsed>,
}

impl QsimProver {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, state: None, collapsed: None }
    }
}

impl Prover for QsimProver {
    fn name(&self) -> String {
        "qsim-micro".into()
    }

    fn receive_key(&mut self, _epoch: u64, key: &PublicKey, _trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        self.state = Some(StateVector::prepare_samp(key)?);
        Ok(())
    }

    fn sample(&mut self, _round: u64, _attempt: u32) -> Result<ModVec> {
        let state = self.state.as_ref().ok_or_else(no_key)?;
        let (y, collapsed) = state.measure_y(&mut self.rng)?;
        self.collapsed = Some(collapsed);
        Ok(y)
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let col = self.collapsed.take().ok_or_else(|| Error::Protocol("challenge before sample".into()))?;
        Ok(if challenge.c == 1 {
            let (b, x) = col.measure_preimage(&mut self.rng)?;
            Answer::Preimage { b, x }
        } else {
            let (u, d) = col.measure_equation(&mut self.rng)?;
            Answer::Equation { u, d }
        })
    }
}

/// Commits to a preimage on branch 0 and guesses equations.
pub struct CommittedProver {
    rng: ChaCha20Rng,
    key: Option<PublicKey>,
    x: Option<ModVec>,
}

impl CommittedProver {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, key: None, x: None }
    }
}

impl Prover for CommittedProver {
    fn name(&self) -> String {
        "classical-committed".into()
    }

    fn receive_key(&mut self, _epoch: u64, key: &PublicKey, _trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        self.key = Some(key.clone());
        Ok(())
    }

    fn sample(&mut self, _round: u64, _attempt: u32) -> Result<ModVec> {
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        let x = ModVec::random(pk.ring(), pk.n(), &mut self.rng);
        let e0 = pk.preimage_noise().sample_vec(pk.m(), &mut self.rng);
        let y = pk.a.mul_vec(&x).add(&e0);
        self.x = Some(x);
        Ok(y)
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        let x = self.x.take().ok_or_else(|| Error::Protocol("challenge before sample".into()))?;
        Ok(if challenge.c == 1 {
            Answer::Preimage { b: 0, x }
        } else {
            Answer::Equation { u: self.rng.gen_range(0..2), d: BitString::random(equation_width(pk), &mut self.rng) }
        })
    }
}

/// Picks `x`, the noise and an equation once and replays them forever,
/// recomputing only `y = A x + e_0` when the key changes.
pub struct ReplayProver {
    rng: ChaCha20Rng,
    key: Option<PublicKey>,
    fixed: Option<(ModVec, ModVec, u8, BitString)>,
}

impl ReplayProver {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, key: None, fixed: None }
    }

    fn fixed(&mut self) -> Result<&(ModVec, ModVec, u8, BitString)> {
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        if self.fixed.is_none() {
            let x = ModVec::random(pk.ring(), pk.n(), &mut self.rng);
            let e0 = pk.preimage_noise().sample_vec(pk.m(), &mut self.rng);
            let u = self.rng.gen_range(0..2);
            let d = BitString::random(equation_width(pk), &mut self.rng);
            self.fixed = Some((x, e0, u, d));
        }
        Ok(self.fixed.as_ref().expect("just set"))
    }
}

impl Prover for ReplayProver {
    fn name(&self) -> String {
        "classical-replay".into()
    }

    fn receive_key(&mut self, _epoch: u64, key: &PublicKey, _trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        self.key = Some(key.clone());
        Ok(())
    }

    fn sample(&mut self, _round: u64, _attempt: u32) -> Result<ModVec> {
        let (x, e0, _, _) = self.fixed()?.clone();
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        Ok(pk.a.mul_vec(&x).add(&e0))
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let (x, _, u, d) = self.fixed()?.clone();
        Ok(if challenge.c == 1 { Answer::Preimage { b: 0, x } } else { Answer::Equation { u, d } })
    }
}

/// Uniform images and uniform answers.
pub struct RandomProver {
    rng: ChaCha20Rng,
    key: Option<PublicKey>,
}

impl RandomProver {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, key: None }
    }
}

impl Prover for RandomProver {
    fn name(&self) -> String {
        "classical-random".into()
    }

    fn receive_key(&mut self, _epoch: u64, key: &PublicKey, _trapdoor: Option<&NtcfKeyPair>) -> Result<()> {
        self.key = Some(key.clone());
        Ok(())
    }

    fn sample(&mut self, _round: u64, _attempt: u32) -> Result<ModVec> {
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        Ok(ModVec::random(pk.ring(), pk.m(), &mut self.rng))
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let pk = self.key.as_ref().ok_or_else(no_key)?;
        Ok(if challenge.c == 1 {
            Answer::Preimage { b: self.rng.gen_range(0..2), x: ModVec::random(pk.ring(), pk.n(), &mut self.rng) }
        } else {
            Answer::Equation { u: self.rng.gen_range(0..2), d: BitString::random(equation_width(pk), &mut self.rng) }
        })
    }
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidDevice(format!("cannot sample outcome: {e}")))?;
    Ok(dist.sample(rng))
}

/// Answers Protocol 2 by Born-rule sampling from a simplified device.
pub struct DeviceProver {
    device: SimplifiedDevice,
    rng: ChaCha20Rng,
}

impl DeviceProver {
    pub fn new(device: SimplifiedDevice, rng: ChaCha20Rng) -> Self {
        Self { device, rng }
    }

    /// Expected `W` on a test round with `T = 1`: `sum_y Pr(y) Pr(e=1, k=0 | y)`,
    /// averaged with the `C = 1` rounds where `W = Pr(v in {0,1})`.
    pub fn expected_t1_score(&self) -> f64 {
        let py = self.device.y_probabilities();
        let (mut eq, mut pre) = (0.0, 0.0);
        for (p, br) in py.iter().zip(self.device.branches()) {
            eq += p * br.equation_law()[1][0];
            let v = br.preimage_law();
            pre += p * (v[0] + v[1]);
        }
        0.5 * (eq + pre)
    }
}

impl SimplifiedProver for DeviceProver {
    fn name(&self) -> String {
        format!("device-dim{}", self.device.dim())
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        let y = draw(&self.device.y_probabilities(), &mut self.rng)?;
        let branch = &self.device.branches()[y];
        Ok(if challenge.c == 0 {
            let law = branch.equation_law();
            let i = draw(&[law[0][0], law[0][1], law[1][0], law[1][1]], &mut self.rng)?;
            let (e, k) = ((i / 2) as u8, (i % 2) as u8);
            Answer::Check { e, k: (challenge.t == Some(1)).then_some(k) }
        } else {
            Answer::Label { v: draw(&branch.preimage_law(), &mut self.rng)? as u8 }
        })
    }
}

/// Always passes, always outputs 0.
pub struct AlwaysAccept;

impl SimplifiedProver for AlwaysAccept {
    fn name(&self) -> String {
        "always-accept".into()
    }

    fn answer(&mut self, _round: u64, challenge: Challenge) -> Result<Answer> {
        Ok(if challenge.c == 0 {
            Answer::Check { e: 1, k: (challenge.t == Some(1)).then_some(0) }
        } else {
            Answer::Label { v: 0 }
        })
    }
}
