#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lodgepp/choreo/model.hpp"
#include "lodgepp/core/rng.hpp"

namespace lodgepp::choreo {

struct SamplingConfig {
  double temperature = 1.0;
  int top_k = 0;  // 0 disables the filter
};

// Samples tokens one at a time from softmax(logits / temperature) restricted
// to the top_k highest logits; stops at End or max_len. Deterministic for a
// fixed seed. temperature -> 0 degenerates to greedy argmax.
inline vq::TokenSequence generate_tokens(const SequenceModel& model,
                                         const music::MusicFeatures& music,
                                         const GenreId& genre,
                                         int max_len = 128,
                                         SamplingConfig sampling = {},
                                         std::uint64_t seed = 0) {
  if (max_len < 1) throw DataError("max_len must be at least 1");
  const int vocab = model.vocab_size();
  const int end_id = vocab - 1;
  Rng rng(Rng::mix(seed, 0xC0DEB00C));
  vq::TokenSequence out;
  out.end_id = end_id;
  for (int step = 0; step < max_len; ++step) {
    Vec logits = model.next_token_logits(music, genre, out);
    if (!logits.allFinite() || logits.size() != vocab)
      throw ModelFailure("sequence model produced invalid logits");

    int token;
    if (sampling.temperature <= 1e-9) {
      Eigen::Index argmax = 0;
      logits.maxCoeff(&argmax);
      token = static_cast<int>(argmax);
    } else {
      Vec scaled = logits / sampling.temperature;
      if (sampling.top_k > 0 && sampling.top_k < vocab) {
        Vec sorted = scaled;
        std::nth_element(sorted.data(),
                         sorted.data() + (vocab - sampling.top_k),
                         sorted.data() + vocab);
        double cutoff = sorted(vocab - sampling.top_k);
        for (Eigen::Index i = 0; i < vocab; ++i)
          if (scaled(i) < cutoff) scaled(i) = -1e300;
      }
      double m = scaled.maxCoeff();
      Vec probs = (scaled.array() - m).exp();
      probs /= probs.sum();
      double u = rng.uniform();
      double acc = 0.0;
      token = vocab - 1;
      for (Eigen::Index i = 0; i < vocab; ++i) {
        acc += probs(i);
        if (u <= acc) {
          token = static_cast<int>(i);
          break;
        }
      }
    }
    out.ids.push_back(token);
    if (token == end_id) break;
  }
  return out;
}

// Teacher-forced mean negative log-likelihood of `target` (whose final entry
// is normally End) under the model.
inline double gpt_loss(const SequenceModel& model,
                       const music::MusicFeatures& music, const GenreId& genre,
                       const vq::TokenSequence& target) {
  if (target.ids.empty()) throw EmptySequence("empty gpt target");
  vq::TokenSequence prefix;
  prefix.end_id = target.end_id;
  double nll = 0.0;
  for (int token : target.ids) {
    Vec logits = model.next_token_logits(music, genre, prefix);
    double m = logits.maxCoeff();
    double z = (logits.array() - m).exp().sum();
    nll -= logits(token) - m - std::log(z);
    prefix.ids.push_back(token);
  }
  return nll / static_cast<double>(target.ids.size());
}

}  // namespace lodgepp::choreo
