#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/rng.hpp"
#include "lodgepp/music/features.hpp"
#include "lodgepp/nn/graph.hpp"
#include "lodgepp/vq/codebook.hpp"

namespace lodgepp::choreo {

struct GenreId {
  int id = 0;
  std::string name;
};

// Behavioral contract for the autoregressive choreography model: logits over
// K+1 symbols (content tokens plus End) for the next token, deterministic in
// its inputs.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual int vocab_size() const = 0;  // K + 1, End == K
  virtual Vec next_token_logits(const music::MusicFeatures& music,
                                const GenreId& genre,
                                const vq::TokenSequence& prefix) const = 0;
};

// Scripted model for tests: emits a fixed token list, then End forever.
class MockSequenceModel : public SequenceModel {
 public:
  MockSequenceModel(std::vector<int> script, int vocab)
      : script_(std::move(script)), vocab_(vocab) {}

  int vocab_size() const override { return vocab_; }

  Vec next_token_logits(const music::MusicFeatures&, const GenreId&,
                        const vq::TokenSequence& prefix) const override {
    Vec logits = Vec::Constant(vocab_, -20.0);
    size_t step = prefix.ids.size();
    int token = step < script_.size() ? script_[step] : vocab_ - 1;
    logits(token) = 20.0;
    return logits;
  }

 private:
  std::vector<int> script_;
  int vocab_;
};

// Tiny decoder-only transformer: 2 layers, width 64, 4 heads. Music features
// are mean-pooled over each token's frame span, projected and added to the
// token embedding together with a learned genre embedding. Position 0 feeds
// a BOS embedding so the first token is predicted from music alone.
class TinyGpt : public SequenceModel {
 public:
  static constexpr int kWidth = 64;
  static constexpr int kHeads = 4;
  static constexpr int kLayers = 2;
  static constexpr int kMaxPositions = 129;  // max_len + BOS

  TinyGpt(int vocab, int genre_count, int frames_per_token, Rng& rng)
      : vocab_(vocab), frames_per_token_(frames_per_token) {
    auto init = [&rng](Eigen::Index r, Eigen::Index c, double scale) {
      return nn::Param(rng.gaussian_matrix(r, c) * scale);
    };
    double s = 0.08;
    tok_emb_ = init(vocab + 1, kWidth, s);  // last row is BOS
    pos_emb_ = init(kMaxPositions, kWidth, s);
    genre_emb_ = init(std::max(genre_count, 1), kWidth, s);
    music_proj_ = init(music::MusicFeatures::kDim, kWidth, s);
    music_bias_ = nn::Param(Mat::Zero(1, kWidth));
    for (int l = 0; l < kLayers; ++l) {
      layers_[l].wq = init(kWidth, kWidth, s);
      layers_[l].wk = init(kWidth, kWidth, s);
      layers_[l].wv = init(kWidth, kWidth, s);
      layers_[l].wo = init(kWidth, kWidth, s);
      layers_[l].bo = nn::Param(Mat::Zero(1, kWidth));
      layers_[l].w1 = init(kWidth, 4 * kWidth, s);
      layers_[l].b1 = nn::Param(Mat::Zero(1, 4 * kWidth));
      layers_[l].w2 = init(4 * kWidth, kWidth, s);
      layers_[l].b2 = nn::Param(Mat::Zero(1, kWidth));
    }
    w_out_ = init(kWidth, vocab, s);
    b_out_ = nn::Param(Mat::Zero(1, vocab));
  }

  int vocab_size() const override { return vocab_; }
  int frames_per_token() const { return frames_per_token_; }

  std::vector<nn::Param*> params() {
    std::vector<nn::Param*> out{&tok_emb_, &pos_emb_, &genre_emb_,
                                &music_proj_, &music_bias_, &w_out_, &b_out_};
    for (auto& l : layers_)
      for (nn::Param* p : {&l.wq, &l.wk, &l.wv, &l.wo, &l.bo, &l.w1, &l.b1,
                           &l.w2, &l.b2})
        out.push_back(p);
    return out;
  }

  Vec next_token_logits(const music::MusicFeatures& music, const GenreId& genre,
                        const vq::TokenSequence& prefix) const override {
    nn::Graph g;
    nn::Var logits = forward(g, music, genre, prefix.ids);
    Eigen::Index last = g.value(logits).rows() - 1;
    Vec out = g.value(logits).row(last).transpose();
    if (!out.allFinite()) throw ModelFailure("sequence model produced non-finite logits");
    return out;
  }

  // Teacher-forced mean NLL over the target sequence (including its End),
  // accumulating parameter gradients when backward is requested.
  double train_nll(const music::MusicFeatures& music, const GenreId& genre,
                   const vq::TokenSequence& target, bool with_backward) {
    if (target.ids.empty()) throw EmptySequence("empty gpt target");
    std::vector<int> inputs(target.ids.begin(), target.ids.end() - 1);
    nn::Graph g;
    nn::Var logits = forward(g, music, genre, inputs);
    nn::Var loss = g.cross_entropy_rows(logits, target.ids);
    if (with_backward) g.backward(loss);
    return g.value(loss)(0, 0);
  }

 private:
  struct Layer {
    nn::Param wq, wk, wv, wo, bo, w1, b1, w2, b2;
  };

  // Builds logits for positions 0..n where position p sees [BOS, ids...] up
  // to p. `prefix` holds the already-emitted tokens.
  nn::Var forward(nn::Graph& g, const music::MusicFeatures& music,
                  const GenreId& genre, const std::vector<int>& prefix) const {
    auto* self = const_cast<TinyGpt*>(this);
    const int n = static_cast<int>(prefix.size()) + 1;
    if (n > kMaxPositions)
      throw DataError("token sequence exceeds the model's maximum length");

    std::vector<int> tok_ids{vocab_};  // BOS row
    tok_ids.insert(tok_ids.end(), prefix.begin(), prefix.end());
    std::vector<int> pos_ids(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pos_ids[static_cast<size_t>(i)] = i;
    std::vector<int> genre_ids(static_cast<size_t>(n), genre.id);

    // Mean-pooled music features over the span of the predicted token.
    Mat pooled = Mat::Zero(n, music::MusicFeatures::kDim);
    for (int p = 0; p < n; ++p) {
      Eigen::Index lo = static_cast<Eigen::Index>(p) * frames_per_token_;
      Eigen::Index hi = std::min<Eigen::Index>(lo + frames_per_token_,
                                               music.frames());
      if (lo >= music.frames()) lo = music.frames() - 1, hi = music.frames();
      pooled.row(p) = music.data.middleRows(lo, hi - lo).colwise().mean();
    }

    nn::Var x = g.gather_rows(g.param(self->tok_emb_), tok_ids);
    x = g.add(x, g.gather_rows(g.param(self->pos_emb_), pos_ids));
    x = g.add(x, g.gather_rows(g.param(self->genre_emb_), genre_ids));
    nn::Var m = g.add_row_broadcast(
        g.matmul(g.constant(pooled), g.param(self->music_proj_)),
        g.param(self->music_bias_));
    x = g.add(x, m);

    Mat mask = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) mask(i, j) = -1e30;
    nn::Var mask_var = g.constant(mask);

    for (int l = 0; l < kLayers; ++l) {
      Layer& L = self->layers_[l];
      nn::Var h = g.layernorm_rows(x);
      nn::Var q = g.matmul(h, g.param(L.wq));
      nn::Var k = g.matmul(h, g.param(L.wk));
      nn::Var v = g.matmul(h, g.param(L.wv));
      const int dh = kWidth / kHeads;
      std::vector<nn::Var> heads;
      for (int hd = 0; hd < kHeads; ++hd) {
        nn::Var qh = g.slice_cols(q, hd * dh, dh);
        nn::Var kh = g.slice_cols(k, hd * dh, dh);
        nn::Var vh = g.slice_cols(v, hd * dh, dh);
        nn::Var scores =
            g.scale(g.matmul(qh, g.transpose(kh)), 1.0 / std::sqrt(dh));
        nn::Var att = g.softmax_rows(g.add(scores, mask_var));
        heads.push_back(g.matmul(att, vh));
      }
      nn::Var attn_out = g.add_row_broadcast(
          g.matmul(g.concat_cols(heads), g.param(L.wo)), g.param(L.bo));
      x = g.add(x, attn_out);
      nn::Var h2 = g.layernorm_rows(x);
      nn::Var mlp = g.add_row_broadcast(
          g.matmul(g.gelu(g.add_row_broadcast(g.matmul(h2, g.param(L.w1)),
                                              g.param(L.b1))),
                   g.param(L.w2)),
          g.param(L.b2));
      x = g.add(x, mlp);
    }
    nn::Var final_h = g.layernorm_rows(x);
    return g.add_row_broadcast(g.matmul(final_h, g.param(self->w_out_)),
                               g.param(self->b_out_));
  }

  int vocab_;
  int frames_per_token_;
  nn::Param tok_emb_, pos_emb_, genre_emb_, music_proj_, music_bias_;
  Layer layers_[kLayers];
  nn::Param w_out_, b_out_;
};

}  // namespace lodgepp::choreo
