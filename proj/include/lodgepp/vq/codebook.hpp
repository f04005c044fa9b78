#pragma once

#include <utility>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/rng.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::vq {

// Choreographic memory: K entries of dimension C_z with EMA statistics for
// the codebook update.
struct Codebook {
  Mat entries;     // K x C_z
  Vec ema_counts;  // K
  Mat ema_sums;    // K x C_z

  Eigen::Index size() const { return entries.rows(); }
  Eigen::Index dim() const { return entries.cols(); }
  // Token id reserved for end-of-sequence.
  int end_id() const { return static_cast<int>(size()); }

  static Codebook random(Eigen::Index k, Eigen::Index c_z, Rng& rng,
                         double scale = 0.1) {
    if (k < 2) throw DataError("codebook needs at least 2 entries");
    Codebook cb;
    cb.entries = rng.gaussian_matrix(k, c_z) * scale;
    cb.ema_counts = Vec::Zero(k);
    cb.ema_sums = Mat::Zero(k, c_z);
    return cb;
  }
};

// Dance token sequence; end_id (== K) may appear only as the final element.
struct TokenSequence {
  std::vector<int> ids;
  int end_id = -1;

  bool ends_with_end() const { return !ids.empty() && ids.back() == end_id; }
  Eigen::Index content_count() const {
    return static_cast<Eigen::Index>(ids.size()) - (ends_with_end() ? 1 : 0);
  }

  void validate() const {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == end_id && i + 1 != ids.size())
        throw DataError("End token must be the final element");
      if (ids[i] < 0 || ids[i] > end_id)
        throw DataError("token id out of range");
    }
  }
};

// Nearest codebook entry by Euclidean distance, ties broken by lowest index.
inline std::pair<int, Vec> quantize(const Vec& z_hat, const Codebook& cb) {
  if (z_hat.size() != cb.dim())
    throw ShapeMismatch("latent dimension does not match codebook");
  int best = 0;
  double best_d = (cb.entries.row(0).transpose() - z_hat).squaredNorm();
  for (Eigen::Index i = 1; i < cb.size(); ++i) {
    double d = (cb.entries.row(i).transpose() - z_hat).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return {best, cb.entries.row(best).transpose()};
}

struct VqvaeLoss {
  double total = 0.0;
  double recon = 0.0;
  double codebook = 0.0;
  double commit = 0.0;
};

// Mean-square three-term VQ-VAE objective. Stop-gradient semantics for the
// training loop: the codebook term treats the encoder output as frozen (the
// entries move by EMA instead), the commit term treats the entries as frozen,
// and the reconstruction gradient reaches the encoder through the
// straight-through copy of the quantized latents.
inline VqvaeLoss vqvae_loss(const Mat& d_prime, const Mat& recon,
                            const Mat& z_hat, const Mat& z, double beta) {
  if (recon.rows() != d_prime.rows() || recon.cols() != d_prime.cols() ||
      z_hat.rows() != z.rows() || z_hat.cols() != z.cols())
    throw ShapeMismatch("vqvae_loss operand shapes disagree");
  VqvaeLoss out;
  out.recon = (recon - d_prime).squaredNorm() /
              static_cast<double>(d_prime.size());
  double latent_msq =
      (z_hat - z).squaredNorm() / static_cast<double>(z.size());
  out.codebook = latent_msq;
  out.commit = beta * latent_msq;
  out.total = out.recon + out.codebook + out.commit;
  return out;
}

// EMA codebook update. Entries with no EMA mass stay unchanged; decayed
// counts and sums move in lockstep so idle entries keep their value.
inline void ema_update(Codebook& cb, const Mat& batch_latents,
                       const std::vector<int>& indices, double decay = 0.99) {
  if (batch_latents.rows() != static_cast<Eigen::Index>(indices.size()))
    throw ShapeMismatch("one index per latent required");
  Vec counts = Vec::Zero(cb.size());
  Mat sums = Mat::Zero(cb.size(), cb.dim());
  for (size_t i = 0; i < indices.size(); ++i) {
    int id = indices[i];
    if (id < 0 || id >= cb.size()) throw DataError("codebook index out of range");
    counts(id) += 1.0;
    sums.row(id) += batch_latents.row(static_cast<Eigen::Index>(i));
  }
  cb.ema_counts = decay * cb.ema_counts + (1.0 - decay) * counts;
  cb.ema_sums = decay * cb.ema_sums + (1.0 - decay) * sums;
  for (Eigen::Index k = 0; k < cb.size(); ++k)
    if (cb.ema_counts(k) > 1e-12)
      cb.entries.row(k) = cb.ema_sums.row(k) / cb.ema_counts(k);
}

}  // namespace lodgepp::vq
