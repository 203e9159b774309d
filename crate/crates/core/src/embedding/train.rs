//! Skip-gram negative-sampling trainer over subword sums. Single-threaded
//! by design: with one worker and a fixed seed the run is bit-reproducible,
//! which the pipeline's caching and repeat machinery rely on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::corpus::Corpus;
use crate::embedding::{EmbeddingConfig, EmbeddingModel};
use crate::error::{Error, Result};

pub fn train_embeddings(corpus: &Corpus, config: &EmbeddingConfig) -> Result<EmbeddingModel> {
    config.validate()?;

    let mut vocab: Vec<(String, u64)> = corpus
        .frequencies()
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if vocab.is_empty() {
        return Err(Error::invalid(
            "empty vocabulary: no token meets the min_count threshold",
        ));
    }

    let mut model = EmbeddingModel::new(config.clone(), vocab);
    let dim = config.dim;

    // Unit lists per vocabulary word, and sentences as in-vocabulary ids.
    let unit_ids: Vec<Vec<usize>> =
        model.vocab.iter().map(|(f, _)| model.unit_ids(f)).collect();
    let sentences: Vec<Vec<usize>> = corpus
        .sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| model.vocab_id(t)).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();

    // Unigram^0.75 negative-sampling distribution as a cumulative table.
    let mut neg_cum: Vec<f64> = Vec::with_capacity(model.vocab.len());
    let mut acc = 0.0f64;
    for (_, freq) in &model.vocab {
        acc += (*freq as f64).powf(0.75);
        neg_cum.push(acc);
    }
    let neg_total = acc;

    let total_pairs: u64 = sentences.iter().map(|s| pair_count(s.len(), config.window)).sum();
    let total_updates = (total_pairs * config.epochs as u64).max(1) as f64;

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let bound = 1.0f32 / dim as f32;
    for x in model.subword.iter_mut() {
        *x = rng.random_range(-bound..bound);
    }

    let vocab_len = model.vocab.len();
    let sample_negative = move |rng: &mut ChaCha20Rng, target: usize| loop {
        let x = rng.random_range(0.0..neg_total);
        let id = neg_cum.partition_point(|&c| c <= x).min(vocab_len - 1);
        if id != target || vocab_len == 1 {
            return id;
        }
    };

    let mut hidden = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];
    let mut t: u64 = 0;
    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0f64;
        let mut loss_n = 0u64;
        for sentence in &sentences {
            for i in 0..sentence.len() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(sentence.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let lr = (config.learning_rate
                        * (1.0 - t as f64 / total_updates))
                        as f32;
                    t += 1;

                    // hidden = sum of the center word's unit vectors
                    hidden.iter_mut().for_each(|x| *x = 0.0);
                    for &u in &unit_ids[sentence[i]] {
                        for (h, w) in
                            hidden.iter_mut().zip(&model.subword[u * dim..(u + 1) * dim])
                        {
                            *h += w;
                        }
                    }
                    grad.iter_mut().for_each(|x| *x = 0.0);

                    let target = sentence[j];
                    for neg in 0..=config.negatives {
                        let (out_id, label) = if neg == 0 {
                            (target, 1.0f32)
                        } else {
                            (sample_negative(&mut rng, target), 0.0f32)
                        };
                        let row = &mut model.output[out_id * dim..(out_id + 1) * dim];
                        let dot: f32 =
                            hidden.iter().zip(row.iter()).map(|(h, o)| h * o).sum();
                        let score = 1.0 / (1.0 + (-dot).exp());
                        let alpha = lr * (label - score);
                        for ((g, o), h) in
                            grad.iter_mut().zip(row.iter_mut()).zip(&hidden)
                        {
                            *g += alpha * *o;
                            *o += alpha * h;
                        }
                        let p = if label > 0.5 { score } else { 1.0 - score };
                        loss_sum -= (p as f64).max(1e-12).ln();
                    }
                    loss_n += 1;

                    for &u in &unit_ids[sentence[i]] {
                        for (w, g) in
                            model.subword[u * dim..(u + 1) * dim].iter_mut().zip(&grad)
                        {
                            *w += g;
                        }
                    }
                }
            }
        }
        let mean = if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 };
        log::info!("epoch {}/{}: mean loss {:.6}", epoch + 1, config.epochs, mean);
        model.epoch_losses.push(mean);
    }
    Ok(model)
}

fn pair_count(len: usize, window: usize) -> u64 {
    let mut pairs = 0u64;
    for i in 0..len {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(len.saturating_sub(1));
        pairs += (hi - lo) as u64;
    }
    pairs
}
