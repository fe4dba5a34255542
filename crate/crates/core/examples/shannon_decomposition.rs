//! Decompose random unitaries into rotations and CNOTs and check the result.
use qfmap::decompose::{csd, qsd, zyz};
use qfmap::linalg::{haar_unitary, phase_aligned_distance};
use qfmap::unitary_of;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qfmap::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let u2 = haar_unitary(2, &mut rng);
    let a = zyz(&u2)?;
    println!(
        "ZYZ: alpha {:.4} beta {:.4} gamma {:.4} phase {:.4}",
        a.alpha, a.beta, a.gamma, a.phase
    );

    let u4 = haar_unitary(4, &mut rng);
    let cs = csd(&u4)?;
    println!(
        "CSD angles {:.4?}, reconstruction error {:.1e}",
        cs.thetas(),
        (cs.reconstruct() - &u4).norm()
    );

    for n in 1..=4 {
        let u = haar_unitary(1 << n, &mut rng);
        let c = qsd(&u)?;
        let err = phase_aligned_distance(&unitary_of(&c, &[])?, &u);
        let k = c.counts();
        println!(
            "n={n}: {} rotations, {} CNOTs, cost {}, error {err:.1e}",
            k.rotation,
            k.cnot,
            c.gate_cost()
        );
    }
    Ok(())
}
