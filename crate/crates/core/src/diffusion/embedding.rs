/// Width of the time and condition embeddings.
pub const EMBED_DIM: usize = 256;

/// The three condition values tiled over the embedding; the final slot,
/// left over after 85 whole repetitions, is zero.
pub fn embed_condition(c: [f64; 3]) -> [f32; EMBED_DIM] {
    let tiled = 3 * (EMBED_DIM / 3);
    std::array::from_fn(|k| if k < tiled { c[k % 3] as f32 } else { 0.0 })
}

/// Sinusoidal positional encoding: sines in the first half, cosines in the second.
pub fn embed_time(t: usize) -> [f32; EMBED_DIM] {
    let half = EMBED_DIM / 2;
    let mut out = [0.0f32; EMBED_DIM];
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin() as f32;
        out[half + i] = arg.cos() as f32;
    }
    out
}

/// Sum of the two embeddings, the vector injected into the denoiser.
pub fn joint_embedding(t: usize, c: [f64; 3]) -> [f32; EMBED_DIM] {
    let (a, b) = (embed_time(t), embed_condition(c));
    std::array::from_fn(|k| a[k] + b[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_layout() {
        assert!(embed_condition([0.0; 3]).iter().all(|&v| v == 0.0));
        let e = embed_condition([1.0, 2.0, 3.0]);
        assert_eq!(&e[..6], &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        assert_eq!(e[254], 3.0);
        assert_eq!(e[255], 0.0);
    }

    #[test]
    fn time_embeddings_are_distinct() {
        let all: Vec<_> = (1..=1000).map(embed_time).collect();
        for i in 0..all.len() {
            for j in 0..i {
                assert_ne!(all[i], all[j], "t = {} and {}", i + 1, j + 1);
            }
        }
    }
}
