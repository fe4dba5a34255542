//! Genetic search over bitstring-encoded circuits.
//!
//! A chromosome is `N` genes of six bits. The first three bits (most
//! significant first) pick the gate kind from [`GATE_TABLE`], the last three
//! pick a coefficient `(k + 1) pi / 8`. Gene `i` acts on qubit
//! `i mod n_qubits`; a CNOT targets the next qubit cyclically; a rotation
//! encodes feature `i mod n_features`. Fitness is `cost + w / accuracy^2`,
//! lower is better.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit::{AngleExpr, Axis, Circuit, Gate};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{EvalMode, QuantumKernel};
use crate::svm::{test_accuracy, SvmConfig};

pub const GENE_BITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Identity,
    Hadamard,
    Cnot,
    Rx,
    Ry,
    Rz,
}

/// Gate kind for each value of a gene's first three bits.
pub const GATE_TABLE: [GateKind; 8] = [
    GateKind::Identity,
    GateKind::Hadamard,
    GateKind::Cnot,
    GateKind::Rx,
    GateKind::Ry,
    GateKind::Rz,
    GateKind::Identity,
    GateKind::Hadamard,
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if !bits.len().is_multiple_of(GENE_BITS) {
            return Err(Error::MalformedChromosome(bits.len()));
        }
        Ok(Self { bits })
    }

    /// Parses a string of `0` and `1`; whitespace and `|` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '|')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid chromosome character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(bits)
    }

    pub fn zeros(n_genes: usize) -> Self {
        Self {
            bits: vec![false; n_genes * GENE_BITS],
        }
    }

    pub fn random<R: Rng + ?Sized>(n_genes: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n_genes * GENE_BITS).map(|_| rng.random()).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn n_genes(&self) -> usize {
        self.bits.len() / GENE_BITS
    }

    /// Gene `i` as an integer in `0..64`.
    pub fn gene(&self, i: usize) -> u8 {
        self.bits[i * GENE_BITS..(i + 1) * GENE_BITS]
            .iter()
            .fold(0u8, |acc, &b| (acc << 1) | b as u8)
    }

    pub fn hamming_weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for Chromosome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Chromosome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Chromosome::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The gate a single gene value decodes to at position `i`.
pub fn decode_gene(gene: u8, i: usize, n_qubits: usize, n_features: usize) -> Gate {
    let kind = GATE_TABLE[(gene >> 3) as usize & 7];
    let k = (gene & 7) as f64;
    let q = i % n_qubits;
    let angle = || AngleExpr::feature(i % n_features.max(1), (k + 1.0) * PI / 8.0);
    match kind {
        GateKind::Identity => Gate::Identity(q),
        GateKind::Hadamard => Gate::Hadamard(q),
        GateKind::Cnot if n_qubits < 2 => Gate::Identity(q),
        GateKind::Cnot => Gate::cnot(q, (i + 1) % n_qubits),
        GateKind::Rx => Gate::Rot(Axis::X, q, angle()),
        GateKind::Ry => Gate::Rot(Axis::Y, q, angle()),
        GateKind::Rz => Gate::Rot(Axis::Z, q, angle()),
    }
}

/// Canonical gene for a gate at position `i`, or `None` when no gene at that
/// position decodes to it.
pub fn encode_gate(gate: &Gate, i: usize, n_qubits: usize, n_features: usize) -> Option<u8> {
    let code = |kind: GateKind| GATE_TABLE.iter().position(|&g| g == kind).map(|p| (p as u8) << 3);
    let gene = match gate {
        Gate::Identity(_) => code(GateKind::Identity)?,
        Gate::Hadamard(_) => code(GateKind::Hadamard)?,
        Gate::Cnot { .. } => code(GateKind::Cnot)?,
        Gate::Cz { .. } => return None,
        Gate::Rot(axis, _, angle) => {
            let kind = match axis {
                Axis::X => GateKind::Rx,
                Axis::Y => GateKind::Ry,
                Axis::Z => GateKind::Rz,
            };
            let [(_, coef)] = angle.coeffs.as_slice() else {
                return None;
            };
            let k = (coef * 8.0 / PI - 1.0).round();
            if !(0.0..8.0).contains(&k) {
                return None;
            }
            code(kind)? | k as u8
        }
    };
    (decode_gene(gene, i, n_qubits, n_features) == *gate).then_some(gene)
}

/// Decodes every gene; total on any chromosome.
pub fn decode(chromosome: &Chromosome, n_qubits: usize, n_features: usize) -> Result<Circuit> {
    let gates = (0..chromosome.n_genes())
        .map(|i| decode_gene(chromosome.gene(i), i, n_qubits, n_features))
        .collect();
    Circuit::from_gates(n_qubits, gates)
}

/// `cost + w / accuracy^2`, infinite at zero accuracy.
pub fn penalty_fitness(gate_cost: usize, accuracy: f64, w: f64) -> f64 {
    if accuracy <= 0.0 {
        f64::INFINITY
    } else {
        gate_cost as f64 + w / (accuracy * accuracy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessEval {
    pub fitness: f64,
    pub accuracy: f64,
    pub gate_cost: usize,
}

/// Trains a QSVM on the train split and scores the test split. Failures
/// become the worst fitness.
pub fn fitness(circuit: &Circuit, data: &Dataset, w: f64, svm: &SvmConfig, mode: EvalMode) -> FitnessEval {
    let gate_cost = circuit.gate_cost();
    let accuracy = match test_accuracy(&QuantumKernel::with_mode(circuit.clone(), mode), data, svm) {
        Ok(a) => a,
        Err(e) => {
            log::warn!("fitness evaluation failed: {e}");
            0.0
        }
    };
    FitnessEval {
        fitness: penalty_fitness(gate_cost, accuracy, w),
        accuracy,
        gate_cost,
    }
}

/// With probability `p`, flips one uniformly chosen bit.
pub fn mutate<R: Rng + ?Sized>(chromosome: &Chromosome, p: f64, rng: &mut R) -> Chromosome {
    let mut out = chromosome.clone();
    if !out.bits.is_empty() && rng.random_bool(p.clamp(0.0, 1.0)) {
        let i = rng.random_range(0..out.bits.len());
        out.bits[i] = !out.bits[i];
    }
    out
}

/// Flips every bit independently with probability `p`.
pub fn mutate_per_bit<R: Rng + ?Sized>(chromosome: &Chromosome, p: f64, rng: &mut R) -> Chromosome {
    let p = p.clamp(0.0, 1.0);
    Chromosome {
        bits: chromosome.bits.iter().map(|&b| b ^ rng.random_bool(p)).collect(),
    }
}

/// Swaps tails after gene boundary `cut` (in `0..=N`).
pub fn crossover_at(a: &Chromosome, b: &Chromosome, cut: usize) -> Result<(Chromosome, Chromosome)> {
    if a.bits.len() != b.bits.len() {
        return Err(Error::DimensionMismatch {
            expected: a.bits.len(),
            got: b.bits.len(),
        });
    }
    let at = (cut * GENE_BITS).min(a.bits.len());
    let mut c1 = a.bits[..at].to_vec();
    c1.extend_from_slice(&b.bits[at..]);
    let mut c2 = b.bits[..at].to_vec();
    c2.extend_from_slice(&a.bits[at..]);
    Ok((Chromosome { bits: c1 }, Chromosome { bits: c2 }))
}

/// Single-point crossover at a uniformly chosen gene boundary.
pub fn crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rng: &mut R) -> Result<(Chromosome, Chromosome)> {
    let cut = rng.random_range(0..=a.n_genes());
    crossover_at(a, b, cut)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationMode {
    /// One bit per selected child.
    SingleBit,
    /// Every bit independently.
    PerBit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub genes: usize,
    pub weight: f64,
    pub pool_size: usize,
    pub mutation_prob: f64,
    pub mutation_mode: MutationMode,
    pub generations: usize,
    pub n_qubits: usize,
    pub shots: u64,
    pub seed: u64,
    pub svm: SvmConfig,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 30,
            genes: 8,
            weight: 20.0,
            pool_size: 10,
            mutation_prob: 0.8,
            mutation_mode: MutationMode::SingleBit,
            generations: 30,
            n_qubits: 2,
            shots: 0,
            seed: 0,
            svm: SvmConfig::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.pool_size < 2 {
            return bad("pool size must be at least 2");
        }
        if self.population < self.pool_size {
            return bad("population must be at least the pool size");
        }
        if self.genes == 0 {
            return bad("chromosomes need at least one gene");
        }
        if self.n_qubits == 0 {
            return bad("at least one qubit is required");
        }
        if !self.weight.is_finite() || self.weight <= 0.0 {
            return bad("penalty weight must be positive");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation probability must lie in [0, 1]");
        }
        Ok(())
    }

    /// Kernel evaluation mode for individual `index` of `generation`.
    fn eval_mode(&self, generation: usize, index: usize) -> EvalMode {
        let stream = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((generation as u64) << 32 | index as u64);
        EvalMode::from_shots(self.shots, stream)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    /// Mean over individuals with finite fitness.
    pub mean_fitness: f64,
    pub best_accuracy: f64,
    pub best_cost: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveResult {
    pub best: Chromosome,
    pub circuit: Circuit,
    pub eval: FitnessEval,
    pub history: Vec<GenerationStats>,
}

impl EvolveResult {
    pub fn write_history_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "generation",
            "best_fitness",
            "mean_fitness",
            "best_accuracy",
            "best_cost",
        ])
        .map_err(csv_err)?;
        for h in &self.history {
            out.write_record([
                h.generation.to_string(),
                h.best_fitness.to_string(),
                h.mean_fitness.to_string(),
                h.best_accuracy.to_string(),
                h.best_cost.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs the genetic algorithm. Each generation evaluates the whole
/// population (identical chromosomes share one evaluation), keeps the
/// `pool_size` fittest unchanged and refills the population with mutated
/// crossover children of random pool pairs.
pub fn evolve(config: &GaConfig, data: &Dataset) -> Result<EvolveResult> {
    config.validate()?;
    if !data.has_split() {
        return Err(Error::Config("genetic search needs a train/test split".into()));
    }
    let n_features = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Chromosome> = (0..config.population)
        .map(|_| Chromosome::random(config.genes, &mut rng))
        .collect();
    let mut history = Vec::with_capacity(config.generations + 1);
    let mut best: Option<(Chromosome, FitnessEval)> = None;

    for generation in 0..=config.generations {
        let mut first_index: HashMap<&Chromosome, usize> = HashMap::new();
        let unique: Vec<(usize, &Chromosome)> = population
            .iter()
            .enumerate()
            .filter(|(i, c)| *first_index.entry(c).or_insert(*i) == *i)
            .collect();
        let evaluated: HashMap<usize, FitnessEval> = unique
            .par_iter()
            .map(|&(i, c)| {
                let circuit = decode(c, config.n_qubits, n_features).expect("decode is total");
                let mode = config.eval_mode(generation, i);
                (i, fitness(&circuit, data, config.weight, &config.svm, mode))
            })
            .collect();
        let evals: Vec<FitnessEval> = population.iter().map(|c| evaluated[&first_index[c]]).collect();

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| evals[a].fitness.total_cmp(&evals[b].fitness));
        let top = ranked[0];
        let finite: Vec<f64> = evals.iter().map(|e| e.fitness).filter(|f| f.is_finite()).collect();
        history.push(GenerationStats {
            generation,
            best_fitness: evals[top].fitness,
            mean_fitness: if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
            best_accuracy: evals[top].accuracy,
            best_cost: evals[top].gate_cost,
        });
        log::info!(
            "generation {generation}: best {:.3} (acc {:.3}, cost {})",
            evals[top].fitness,
            evals[top].accuracy,
            evals[top].gate_cost
        );
        if best.as_ref().is_none_or(|(_, e)| evals[top].fitness < e.fitness) {
            best = Some((population[top].clone(), evals[top]));
        }
        if generation == config.generations {
            break;
        }

        let pool: Vec<Chromosome> = ranked[..config.pool_size]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let mut next = pool.clone();
        while next.len() < config.population {
            let a = pool.choose(&mut rng).expect("pool is non-empty");
            let b = pool.choose(&mut rng).expect("pool is non-empty");
            let (c1, c2) = crossover(a, b, &mut rng)?;
            for child in [c1, c2] {
                if next.len() < config.population {
                    let child = match config.mutation_mode {
                        MutationMode::SingleBit => mutate(&child, config.mutation_prob, &mut rng),
                        MutationMode::PerBit => mutate_per_bit(&child, config.mutation_prob, &mut rng),
                    };
                    next.push(child);
                }
            }
        }
        population = next;
    }

    let (best, eval) = best.expect("at least one generation is evaluated");
    let circuit = decode(&best, config.n_qubits, n_features)?;
    Ok(EvolveResult {
        best,
        circuit,
        eval,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_moons;

    #[test]
    fn zero_chromosome_is_free() {
        let c = decode(&Chromosome::zeros(8), 2, 2).unwrap();
        assert_eq!(c.len(), 8);
        assert_eq!(c.gate_cost(), 0);
    }

    #[test]
    fn max_coefficient_rx() {
        let c = decode(&Chromosome::parse("011111").unwrap(), 2, 2).unwrap();
        assert_eq!(c.gates()[0], Gate::rx(0, AngleExpr::feature(0, PI)));
    }

    #[test]
    fn positions_pick_qubit_and_feature() {
        let ch = Chromosome::parse("000000 010000 101000").unwrap();
        let c = decode(&ch, 2, 2).unwrap();
        assert_eq!(c.gates()[1], Gate::cnot(1, 0));
        assert_eq!(c.gates()[2], Gate::rz(0, AngleExpr::feature(0, PI / 8.0)));
        let c3 = decode(&ch, 3, 2).unwrap();
        assert_eq!(c3.gates()[2], Gate::rz(2, AngleExpr::feature(0, PI / 8.0)));
        let single = decode(&ch, 1, 1).unwrap();
        assert_eq!(single.gates()[1], Gate::Identity(0));
    }

    #[test]
    fn all_gene_values_roundtrip() {
        for (nq, nf) in [(2, 2), (3, 2), (1, 1), (2, 14)] {
            for i in 0..5 {
                for gene in 0..64u8 {
                    let gate = decode_gene(gene, i, nq, nf);
                    let back = encode_gate(&gate, i, nq, nf).expect("decoded gates re-encode");
                    assert_eq!(decode_gene(back, i, nq, nf), gate);
                }
            }
        }
    }

    #[test]
    fn malformed_length() {
        assert!(matches!(
            Chromosome::from_bits(vec![true; 7]),
            Err(Error::MalformedChromosome(7))
        ));
        assert!(Chromosome::parse("01201").is_err());
    }

    #[test]
    fn fitness_arithmetic() {
        assert_eq!(penalty_fitness(3, 1.0, 20.0), 23.0);
        assert_eq!(penalty_fitness(3, 0.0, 20.0), f64::INFINITY);
        assert!(penalty_fitness(5, 0.9, 20.0) < penalty_fitness(5, 0.8, 20.0));
        assert!(penalty_fitness(3, 0.9, 20.0) < penalty_fitness(4, 0.9, 20.0));
    }

    #[test]
    fn mutation_flips_at_most_one_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Chromosome::random(8, &mut rng);
        let mut flipped = 0;
        for _ in 0..200 {
            let m = mutate(&c, 0.8, &mut rng);
            let d = c.bits().iter().zip(m.bits()).filter(|(a, b)| a != b).count();
            assert!(d <= 1);
            flipped += d;
        }
        assert!((120..=200).contains(&flipped));
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(mutate(&c, 0.8, &mut r1), mutate(&c, 0.8, &mut r2));
        assert_eq!(mutate(&c, 0.0, &mut r1), c);
    }

    #[test]
    fn crossover_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Chromosome::random(4, &mut rng);
        let b = Chromosome::random(4, &mut rng);
        assert_eq!(crossover_at(&a, &b, 0).unwrap(), (b.clone(), a.clone()));
        assert_eq!(crossover_at(&a, &b, 4).unwrap(), (a.clone(), b.clone()));
        let (c1, c2) = crossover_at(&a, &b, 1).unwrap();
        assert_eq!(c1.gene(0), a.gene(0));
        assert_eq!(c1.gene(1), b.gene(1));
        assert_eq!(c2.gene(0), b.gene(0));
        assert!(crossover_at(&a, &Chromosome::zeros(3), 1).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = GaConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.pool_size = 1;
        assert!(cfg.validate().is_err());
        cfg.pool_size = 40;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn evolve_small_run() {
        let data = make_moons(40, 0.05, 3).unwrap().split(0.5, 3).unwrap();
        let cfg = GaConfig {
            population: 8,
            pool_size: 4,
            genes: 4,
            generations: 3,
            seed: 5,
            ..Default::default()
        };
        let r = evolve(&cfg, &data).unwrap();
        assert_eq!(r.history.len(), 4);
        for w in r.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        assert_eq!(r.eval.fitness, r.history.last().unwrap().best_fitness);
        let again = evolve(&cfg, &data).unwrap();
        assert_eq!(r.best, again.best);
        let zero = evolve(&GaConfig { generations: 0, ..cfg }, &data).unwrap();
        assert_eq!(zero.history.len(), 1);
    }
}
