use rand::Rng;

use super::attention::AttentionParams;
use super::dense::DenseParams;
use super::gru::GruLayerParams;
use super::tensor::Tensor;

/// Fills a 2-D weight tensor uniformly in [−1/√fan_in, +1/√fan_in].
pub fn init_matrix<R: Rng>(t: &mut Tensor, fan_in: usize, rng: &mut R) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in t.data_mut() {
        *v = rng.gen_range(-bound..bound);
    }
}

pub fn init_dense<R: Rng>(input: usize, output: usize, rng: &mut R) -> DenseParams {
    let mut p = DenseParams::zeros(input, output);
    init_matrix(&mut p.weight, input, rng);
    p
}

pub fn init_gru<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> GruLayerParams {
    let mut p = GruLayerParams::zeros(input, hidden);
    init_matrix(&mut p.w_z, input, rng);
    init_matrix(&mut p.w_r, input, rng);
    init_matrix(&mut p.w_h, input, rng);
    init_matrix(&mut p.u_z, hidden, rng);
    init_matrix(&mut p.u_r, hidden, rng);
    init_matrix(&mut p.u_h, hidden, rng);
    p
}

pub fn init_attention<R: Rng>(hidden: usize, attn: usize, rng: &mut R) -> AttentionParams {
    let mut p = AttentionParams::zeros(hidden, attn);
    init_matrix(&mut p.w_h, hidden, rng);
    init_matrix(&mut p.w, attn, rng);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn init_is_bounded_and_seeded() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let p = init_gru(4, 8, &mut rng);
        let bound = 0.5; // 1/√4
        assert!(p.w_z.data().iter().all(|v| v.abs() <= bound));
        assert!(p.b_z.data().iter().all(|&v| v == 0.0));

        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        let q = init_gru(4, 8, &mut rng2);
        assert_eq!(p.w_h.data(), q.w_h.data());
    }
}
