#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lodgepp/core/rng.hpp"
#include "lodgepp/vq/checkpoint.hpp"
#include "lodgepp/vq/codebook.hpp"
#include "lodgepp/vq/conv_coder.hpp"

using namespace lodgepp;
using namespace lodgepp::vq;

namespace {

// Exhaustive linear-scan quantizer, written independently of the library.
int oracle_quantize(const Vec& z, const Mat& entries) {
  int best = -1;
  double best_d = 0.0;
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    double d = 0.0;
    for (Eigen::Index c = 0; c < entries.cols(); ++c) {
      double diff = entries(i, c) - z(c);
      d += diff * diff;
    }
    if (best < 0 || d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// Direct-summation strided convolution, the reference for ConvCoder layers.
Mat oracle_conv1d(const Mat& x, const Mat& w, const Vec& b, int kernel,
                  int stride, int pad) {
  const auto in_ch = x.rows();
  const auto t_out = (x.cols() + 2 * pad - kernel) / stride + 1;
  Mat y(w.rows(), t_out);
  for (Eigen::Index o = 0; o < w.rows(); ++o)
    for (Eigen::Index t = 0; t < t_out; ++t) {
      double acc = b(o);
      for (Eigen::Index c = 0; c < in_ch; ++c)
        for (int k = 0; k < kernel; ++k) {
          Eigen::Index s = t * stride + k - pad;
          if (s >= 0 && s < x.cols()) acc += w(o, c * kernel + k) * x(c, s);
        }
      y(o, t) = acc;
    }
  return y;
}

Mat random_coarse(Rng& rng, Eigen::Index frames) {
  return rng.gaussian_matrix(frames, motion::CoarseMotion::kDim);
}

}  // namespace

TEST_CASE("quantize picks the nearest entry with low-index ties") {
  Codebook cb;
  cb.entries = Mat::Zero(2, 2);
  cb.entries.row(1) << 1.0, 1.0;
  cb.ema_counts = Vec::Zero(2);
  cb.ema_sums = Mat::Zero(2, 2);
  Vec z(2);
  z << 0.1, 0.2;
  CHECK(quantize(z, cb).first == 0);
  z << 1.0, 1.0;
  auto [idx, entry] = quantize(z, cb);
  CHECK(idx == 1);
  CHECK((entry - z).norm() == 0.0);
  // Equidistant input resolves to the lower index.
  z << 0.5, 0.5;
  CHECK(quantize(z, cb).first == 0);
}

TEST_CASE("quantize agrees with the exhaustive oracle") {
  Rng rng(17);
  Codebook cb = Codebook::random(64, 8, rng, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec z = rng.gaussian_matrix(8, 1).col(0);
    CHECK(quantize(z, cb).first == oracle_quantize(z, cb.entries));
  }
}

TEST_CASE("vqvae loss terms and degenerate cases") {
  Rng rng(18);
  Mat d = rng.gaussian_matrix(6, 4);
  Mat z_hat = rng.gaussian_matrix(3, 5);
  Mat z = rng.gaussian_matrix(3, 5);

  SECTION("perfect reconstruction and codebook hit give zero") {
    VqvaeLoss l = vqvae_loss(d, d, z, z, 1.0);
    CHECK(l.total == 0.0);
  }
  SECTION("beta zero removes the commit term") {
    VqvaeLoss l = vqvae_loss(d, d, z_hat, z, 0.0);
    CHECK(l.commit == 0.0);
    CHECK(l.total == l.recon + l.codebook);
  }
  SECTION("terms match direct arithmetic") {
    Mat recon = rng.gaussian_matrix(6, 4);
    double beta = 0.7;
    VqvaeLoss l = vqvae_loss(d, recon, z_hat, z, beta);
    double recon_term = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        recon_term += std::pow(recon(i, j) - d(i, j), 2);
    recon_term /= static_cast<double>(d.size());
    double latent_term = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = 0; j < z.cols(); ++j)
        latent_term += std::pow(z_hat(i, j) - z(i, j), 2);
    latent_term /= static_cast<double>(z.size());
    CHECK(l.recon == Catch::Approx(recon_term).margin(1e-12));
    CHECK(l.codebook == Catch::Approx(latent_term).margin(1e-12));
    CHECK(l.commit == Catch::Approx(beta * latent_term).margin(1e-12));
    CHECK(l.total ==
          Catch::Approx(recon_term + (1 + beta) * latent_term).margin(1e-12));
  }
  SECTION("shape mismatch is rejected") {
    CHECK_THROWS_AS(vqvae_loss(d, z, z_hat, z, 1.0), ShapeMismatch);
  }
}

TEST_CASE("encoder length contract and conv oracle") {
  Rng rng(19);
  ConvCoder coder = ConvCoder::random(32, rng);
  Mat coarse = random_coarse(rng, 128);
  Mat latents = coder.encode_latents(coarse);
  CHECK(latents.rows() == 32);  // N=128, r=4
  CHECK(latents.cols() == 32);

  // Unpadded uneven length pads right with the last frame.
  Mat coarse_odd = random_coarse(rng, 126);
  CHECK(coder.encode_latents(coarse_odd).rows() == 32);  // ceil(126/4)

  // First layer matches the direct-summation oracle.
  Mat x = coarse.transpose();
  Mat expected = oracle_conv1d(x, coder.enc1.weight, coder.enc1.bias, 4, 2, 1);
  Mat got = coder.enc1.forward(x);
  CHECK((expected - got).cwiseAbs().maxCoeff() < 1e-8);

  // Zero parameters give zero latents.
  ConvCoder zero = ConvCoder::random(32, rng);
  for (Mat* w : zero.weight_refs()) w->setZero();
  for (Vec* b : zero.bias_refs()) b->setZero();
  CHECK(zero.encode_latents(coarse).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("whole-coder output matches a reference direct implementation") {
  Rng rng(23);
  ConvCoder coder = ConvCoder::random(16, rng);
  Mat coarse = random_coarse(rng, 32);
  Mat x = coarse.transpose();
  Mat h1 = oracle_conv1d(x, coder.enc1.weight, coder.enc1.bias, 4, 2, 1);
  Mat z = oracle_conv1d(h1.cwiseMax(0.0), coder.enc2.weight, coder.enc2.bias,
                        4, 2, 1);
  CHECK((coder.encode_latents(coarse) - z.transpose()).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("decode length contract and determinism") {
  Rng rng(20);
  Codebook cb = Codebook::random(16, 8, rng, 0.5);
  ConvCoder coder = ConvCoder::random(8, rng);
  TokenSequence tokens;
  tokens.end_id = cb.end_id();
  for (int i = 0; i < 32; ++i) tokens.ids.push_back(i % 16);
  tokens.ids.push_back(tokens.end_id);
  motion::CoarseMotion a = decode(tokens, cb, coder);
  motion::CoarseMotion b = decode(tokens, cb, coder);
  CHECK(a.frames() == 128);  // 32 tokens * r
  CHECK(a.data == b.data);

  TokenSequence empty;
  empty.end_id = cb.end_id();
  empty.ids = {empty.end_id};
  CHECK_THROWS_AS(decode(empty, cb, coder), EmptySequence);

  TokenSequence bad;
  bad.end_id = cb.end_id();
  bad.ids = {1, bad.end_id, 2};
  CHECK_THROWS_AS(decode(bad, cb, coder), DataError);
}

TEST_CASE("tokenize appends End and matches brute-force quantization") {
  Rng rng(21);
  Codebook cb = Codebook::random(16, 8, rng, 0.5);
  ConvCoder coder = ConvCoder::random(8, rng);
  motion::CoarseMotion coarse = coarse_from_mat(random_coarse(rng, 64));
  TokenSequence tokens = tokenize(coarse, coder, cb);
  CHECK(tokens.ids.back() == cb.end_id());
  CHECK(tokens.content_count() == 16);
  Mat latents = encode(coarse, coder);
  for (Eigen::Index i = 0; i < latents.rows(); ++i)
    CHECK(tokens.ids[static_cast<size_t>(i)] ==
          oracle_quantize(latents.row(i).transpose(), cb.entries));
  // decode(tokenize(x)) has r * content frames.
  CHECK(decode(tokens, cb, coder).frames() == 64);
}

TEST_CASE("ema update moves entries toward the batch cluster mean") {
  Rng rng(22);
  Codebook cb = Codebook::random(4, 3, rng, 0.1);
  Mat batch(5, 3);
  for (int i = 0; i < 5; ++i) batch.row(i) << 2.0, -1.0, 0.5;
  std::vector<int> idx(5, 1);

  SECTION("repeated identical batches converge geometrically") {
    Vec target(3);
    target << 2.0, -1.0, 0.5;
    double prev = (cb.entries.row(1).transpose() - target).norm();
    for (int it = 0; it < 50; ++it) {
      ema_update(cb, batch, idx, 0.99);
      double err = (cb.entries.row(1).transpose() - target).norm();
      CHECK(err <= prev + 1e-15);
      prev = err;
    }
    CHECK(prev < (Vec3(2.0, -1.0, 0.5)).norm());
    CHECK(cb.entries.allFinite());
  }
  SECTION("entries with no assignment stay unchanged") {
    Mat before = cb.entries;
    ema_update(cb, batch, idx, 0.99);
    CHECK(cb.entries.row(0) == before.row(0));
    CHECK(cb.entries.row(2) == before.row(2));
    CHECK(cb.entries.row(3) == before.row(3));
    CHECK(cb.entries.row(1) != before.row(1));
  }
  SECTION("decay zero lands exactly on the batch mean") {
    ema_update(cb, batch, idx, 0.0);
    CHECK((cb.entries.row(1).transpose() - Vec3(2.0, -1.0, 0.5)).norm() <
          1e-12);
  }
}

TEST_CASE("conv coder analytic gradients match central finite differences") {
  Rng rng(24);
  for (int instance = 0; instance < 5; ++instance) {
    ConvCoder coder = ConvCoder::random(6, rng, 8);
    Mat coarse = random_coarse(rng, 8);

    auto loss_and_grad = [&]() {
      coder.zero_grad();
      ConvCoder::Trace tr = coder.forward_trace(coarse);
      Mat target = coarse.transpose();
      Mat diff = tr.y - target;
      double n = static_cast<double>(diff.size());
      Mat dy = 2.0 / n * diff;
      coder.backward_trace(tr, dy, nullptr);
      return diff.squaredNorm() / n;
    };

    loss_and_grad();
    std::vector<Mat*> weights = coder.weight_refs();
    std::vector<Mat*> grads = coder.weight_grad_refs();
    Rng pick(100 + instance);
    double num = 0.0, den = 0.0;
    for (int s = 0; s < 20; ++s) {
      size_t layer = static_cast<size_t>(pick.index(4));
      Mat& w = *weights[layer];
      Eigen::Index i = pick.index(w.rows());
      Eigen::Index j = pick.index(w.cols());
      double analytic = (*grads[layer])(i, j);
      const double h = 1e-5;
      double saved = w(i, j);
      w(i, j) = saved + h;
      ConvCoder::Trace up = coder.forward_trace(coarse);
      double lu = (up.y - coarse.transpose()).squaredNorm() / up.y.size();
      w(i, j) = saved - h;
      ConvCoder::Trace dn = coder.forward_trace(coarse);
      double ld = (dn.y - coarse.transpose()).squaredNorm() / dn.y.size();
      w(i, j) = saved;
      double fd = (lu - ld) / (2 * h);
      num += (analytic - fd) * (analytic - fd);
      den += std::max(analytic * analytic, fd * fd);
    }
    CHECK(std::sqrt(num) / std::sqrt(den) < 1e-4);
  }
}

TEST_CASE("checkpoint round trip") {
  namespace fs = std::filesystem;
  Rng rng(25);
  Codebook cb = Codebook::random(8, 6, rng, 0.5);
  ConvCoder coder = ConvCoder::random(6, rng);
  auto p = fs::temp_directory_path() / "test.vqck";
  save_checkpoint(cb, coder, p.string());
  VqCheckpoint ck = load_checkpoint(p.string());
  CHECK(ck.codebook.size() == 8);
  CHECK(ck.codebook.dim() == 6);
  CHECK((ck.codebook.entries - cb.entries).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((ck.coder.enc1.weight - coder.enc1.weight).cwiseAbs().maxCoeff() <
        1e-6);
  CHECK((ck.coder.dec2.bias - coder.dec2.bias).cwiseAbs().maxCoeff() < 1e-6);
  // Loaded coder decodes to nearly identical output (float32 payload).
  Mat coarse = random_coarse(rng, 16);
  Mat latents = coder.encode_latents(coarse);
  CHECK((ck.coder.decode_latents(latents) - coder.decode_latents(latents))
            .cwiseAbs()
            .maxCoeff() < 1e-4);
  fs::remove(p);
}
