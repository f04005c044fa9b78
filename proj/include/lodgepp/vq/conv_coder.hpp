#pragma once

#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/rng.hpp"
#include "lodgepp/core/types.hpp"
#include "lodgepp/motion/sequence.hpp"
#include "lodgepp/vq/codebook.hpp"

namespace lodgepp::vq {

// 1D temporal convolution stack with stride schedule (2,2), giving the r=4
// downsample rate. Forward and backward passes are written out by hand;
// activations flow as channels x time matrices.

namespace detail {

struct Conv1d {
  // weight(o, c*K + k), kernel K=4, stride 2, pad 1: T -> T/2 for even T.
  Mat weight;
  Vec bias;
  Mat weight_grad;
  Vec bias_grad;
  int in_ch = 0, out_ch = 0;
  static constexpr int kKernel = 4;
  static constexpr int kStride = 2;
  static constexpr int kPad = 1;

  void init(int in, int out, Rng& rng) {
    in_ch = in;
    out_ch = out;
    double scale = std::sqrt(2.0 / (in * kKernel));
    weight = rng.gaussian_matrix(out, in * kKernel) * scale;
    bias = Vec::Zero(out);
    zero_grad();
  }
  void zero_grad() {
    weight_grad = Mat::Zero(weight.rows(), weight.cols());
    bias_grad = Vec::Zero(bias.size());
  }

  Mat forward(const Mat& x) const {
    const auto t_in = x.cols();
    const auto t_out = (t_in + 2 * kPad - kKernel) / kStride + 1;
    Mat y(out_ch, t_out);
    for (Eigen::Index t = 0; t < t_out; ++t) {
      for (int o = 0; o < out_ch; ++o) {
        double acc = bias(o);
        for (int c = 0; c < in_ch; ++c)
          for (int k = 0; k < kKernel; ++k) {
            Eigen::Index s = t * kStride + k - kPad;
            if (s >= 0 && s < t_in)
              acc += weight(o, c * kKernel + k) * x(c, s);
          }
        y(o, t) = acc;
      }
    }
    return y;
  }

  // Accumulates parameter grads, returns dL/dx.
  Mat backward(const Mat& x, const Mat& dy) {
    const auto t_in = x.cols();
    Mat dx = Mat::Zero(in_ch, t_in);
    for (Eigen::Index t = 0; t < dy.cols(); ++t)
      for (int o = 0; o < out_ch; ++o) {
        double g = dy(o, t);
        bias_grad(o) += g;
        for (int c = 0; c < in_ch; ++c)
          for (int k = 0; k < kKernel; ++k) {
            Eigen::Index s = t * kStride + k - kPad;
            if (s >= 0 && s < t_in) {
              weight_grad(o, c * kKernel + k) += g * x(c, s);
              dx(c, s) += g * weight(o, c * kKernel + k);
            }
          }
      }
    return dx;
  }
};

struct ConvTranspose1d {
  // weight(c, o*K + k): T -> 2T with kernel 4, stride 2, pad 1.
  Mat weight;
  Vec bias;
  Mat weight_grad;
  Vec bias_grad;
  int in_ch = 0, out_ch = 0;
  static constexpr int kKernel = 4;
  static constexpr int kStride = 2;
  static constexpr int kPad = 1;

  void init(int in, int out, Rng& rng) {
    in_ch = in;
    out_ch = out;
    double scale = std::sqrt(2.0 / (in * kKernel));
    weight = rng.gaussian_matrix(in, out * kKernel) * scale;
    bias = Vec::Zero(out);
    zero_grad();
  }
  void zero_grad() {
    weight_grad = Mat::Zero(weight.rows(), weight.cols());
    bias_grad = Vec::Zero(bias.size());
  }

  Mat forward(const Mat& x) const {
    const auto t_in = x.cols();
    const auto t_out = (t_in - 1) * kStride - 2 * kPad + kKernel;
    Mat y(out_ch, t_out);
    for (int o = 0; o < out_ch; ++o) y.row(o).setConstant(bias(o));
    for (Eigen::Index t = 0; t < t_in; ++t)
      for (int c = 0; c < in_ch; ++c) {
        double v = x(c, t);
        for (int o = 0; o < out_ch; ++o)
          for (int k = 0; k < kKernel; ++k) {
            Eigen::Index s = t * kStride + k - kPad;
            if (s >= 0 && s < t_out) y(o, s) += weight(c, o * kKernel + k) * v;
          }
      }
    return y;
  }

  Mat backward(const Mat& x, const Mat& dy) {
    const auto t_out = dy.cols();
    Mat dx = Mat::Zero(in_ch, x.cols());
    for (int o = 0; o < out_ch; ++o) bias_grad(o) += dy.row(o).sum();
    for (Eigen::Index t = 0; t < x.cols(); ++t)
      for (int c = 0; c < in_ch; ++c)
        for (int o = 0; o < out_ch; ++o)
          for (int k = 0; k < kKernel; ++k) {
            Eigen::Index s = t * kStride + k - kPad;
            if (s >= 0 && s < t_out) {
              weight_grad(c, o * kKernel + k) += dy(o, s) * x(c, t);
              dx(c, t) += dy(o, s) * weight(c, o * kKernel + k);
            }
          }
    return dx;
  }
};

inline Mat relu(const Mat& x) { return x.cwiseMax(0.0); }
inline Mat relu_backward(const Mat& x, const Mat& dy) {
  return dy.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
}

}  // namespace detail

inline constexpr int kDownsampleRate = 4;

struct ConvCoder {
  detail::Conv1d enc1, enc2;
  detail::ConvTranspose1d dec1, dec2;
  int hidden = 64;
  int latent_dim = 0;

  static ConvCoder random(int latent_dim, Rng& rng, int hidden = 64) {
    ConvCoder coder;
    coder.hidden = hidden;
    coder.latent_dim = latent_dim;
    coder.enc1.init(motion::CoarseMotion::kDim, hidden, rng);
    coder.enc2.init(hidden, latent_dim, rng);
    coder.dec1.init(latent_dim, hidden, rng);
    coder.dec2.init(hidden, motion::CoarseMotion::kDim, rng);
    return coder;
  }

  void zero_grad() {
    enc1.zero_grad();
    enc2.zero_grad();
    dec1.zero_grad();
    dec2.zero_grad();
  }

  // Intermediate activations of one pass, kept for the backward sweep.
  struct Trace {
    Mat x;    // 42 x N (padded)
    Mat h1;   // pre-activation of enc hidden
    Mat z;    // latent_dim x N'
    Mat zq;   // decoder input
    Mat h2;   // pre-activation of dec hidden
    Mat y;    // 42 x N
  };

  // Pads N to a multiple of r by repeating the last frame.
  static Mat pad_frames(const Mat& coarse) {
    Eigen::Index n = coarse.rows();
    Eigen::Index padded = ((n + kDownsampleRate - 1) / kDownsampleRate) *
                          kDownsampleRate;
    if (padded == n) return coarse;
    Mat out(padded, coarse.cols());
    out.topRows(n) = coarse;
    for (Eigen::Index i = n; i < padded; ++i) out.row(i) = coarse.row(n - 1);
    return out;
  }

  Mat encode_latents(const Mat& coarse) const {
    if (coarse.rows() < kDownsampleRate)
      throw SequenceTooShort("need at least r frames to encode");
    Mat x = pad_frames(coarse).transpose();  // 42 x N
    Mat h1 = enc1.forward(x);
    Mat z = enc2.forward(detail::relu(h1));
    return z.transpose();  // N' x C_z
  }

  Mat decode_latents(const Mat& latents) const {
    if (latents.rows() < 1) throw EmptySequence("no latents to decode");
    Mat h2 = dec1.forward(latents.transpose());
    Mat y = dec2.forward(detail::relu(h2));
    return y.transpose();  // N x 42
  }

  // Autoencoder forward keeping the trace; `quantized` optionally replaces
  // the latents before decoding (straight-through during training).
  Trace forward_trace(const Mat& coarse, const Mat* quantized = nullptr) const {
    Trace tr;
    tr.x = pad_frames(coarse).transpose();
    tr.h1 = enc1.forward(tr.x);
    tr.z = enc2.forward(detail::relu(tr.h1));
    tr.zq = quantized ? quantized->transpose() : tr.z;
    tr.h2 = dec1.forward(tr.zq);
    tr.y = dec2.forward(detail::relu(tr.h2));
    return tr;
  }

  // Backward through the whole stack. dL/d(decoder input) propagates into
  // the encoder unchanged (straight-through across the quantizer);
  // dz_extra adds a gradient applied directly to the encoder output (the
  // commitment term). Parameter grads accumulate in place.
  void backward_trace(const Trace& tr, const Mat& dy, const Mat* dz_extra) {
    Mat dh2 = dec2.backward(detail::relu(tr.h2), dy);
    Mat dzq = dec1.backward(tr.zq, detail::relu_backward(tr.h2, dh2));
    Mat dz = dzq;  // straight-through copy
    if (dz_extra) dz += *dz_extra;
    Mat dh1 = enc2.backward(detail::relu(tr.h1), dz);
    enc1.backward(tr.x, detail::relu_backward(tr.h1, dh1));
  }

  std::vector<Mat*> weight_refs() {
    return {&enc1.weight, &enc2.weight, &dec1.weight, &dec2.weight};
  }
  std::vector<Vec*> bias_refs() {
    return {&enc1.bias, &enc2.bias, &dec1.bias, &dec2.bias};
  }
  std::vector<Mat*> weight_grad_refs() {
    return {&enc1.weight_grad, &enc2.weight_grad, &dec1.weight_grad,
            &dec2.weight_grad};
  }
  std::vector<Vec*> bias_grad_refs() {
    return {&enc1.bias_grad, &enc2.bias_grad, &dec1.bias_grad,
            &dec2.bias_grad};
  }
};

// --- spec operations ---------------------------------------------------------

inline motion::CoarseMotion coarse_from_mat(Mat m) {
  motion::CoarseMotion c;
  c.data = std::move(m);
  return c;
}

inline Mat encode(const motion::CoarseMotion& coarse, const ConvCoder& coder) {
  return coder.encode_latents(coarse.data);
}

inline TokenSequence tokenize(const motion::CoarseMotion& coarse,
                              const ConvCoder& coder, const Codebook& cb) {
  Mat latents = encode(coarse, coder);
  TokenSequence tokens;
  tokens.end_id = cb.end_id();
  for (Eigen::Index i = 0; i < latents.rows(); ++i)
    tokens.ids.push_back(quantize(latents.row(i).transpose(), cb).first);
  tokens.ids.push_back(tokens.end_id);
  return tokens;
}

inline motion::CoarseMotion decode(const TokenSequence& tokens,
                                   const Codebook& cb, const ConvCoder& coder) {
  tokens.validate();
  Eigen::Index count = tokens.content_count();
  if (count < 1) throw EmptySequence("token sequence has no content tokens");
  Mat latents(count, cb.dim());
  for (Eigen::Index i = 0; i < count; ++i)
    latents.row(i) = cb.entries.row(tokens.ids[static_cast<size_t>(i)]);
  return coarse_from_mat(coder.decode_latents(latents));
}

}  // namespace lodgepp::vq
