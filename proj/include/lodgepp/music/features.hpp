#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"
#include "lodgepp/music/wav.hpp"

namespace lodgepp::music {

// Analysis constants. Audio is resampled to 22050 Hz and analysed with a
// 1024-sample window at hop 735 = 22050/30, so spectral frames align 1:1
// with 30 fps motion frames.
inline constexpr double kAnalysisRate = 22050.0;
inline constexpr int kWindowSize = 1024;
inline constexpr int kHopSize = 735;
inline constexpr int kMelBands = 64;
inline constexpr double kMelFmax = 8000.0;
inline constexpr int kMfccCount = 20;
inline constexpr int kChromaBins = 12;
inline constexpr double kFeatureFps = 30.0;
inline constexpr double kTempoMinBpm = 60.0;
inline constexpr double kTempoMaxBpm = 180.0;

struct MusicFeatures {
  double fps = kFeatureFps;
  // L x 35: [0] onset envelope, [1,21) mfcc, [21,33) chroma, [33] peaks,
  // [34] beats.
  Mat data;

  static constexpr int kDim = 35;
  static constexpr int kEnvelopeCol = 0;
  static constexpr int kMfccBegin = 1;
  static constexpr int kChromaBegin = 21;
  static constexpr int kPeakCol = 33;
  static constexpr int kBeatCol = 34;

  Eigen::Index frames() const { return data.rows(); }
};

struct BeatGrid {
  std::vector<int> beat_frames;  // strictly increasing, within [0, L)
};

namespace detail {

inline Vec resample_linear(const Vec& x, double rate_in, double rate_out) {
  if (rate_in == rate_out) return x;
  const auto n_out = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(x.size()) * rate_out / rate_in));
  Vec y(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    double t = static_cast<double>(i) * rate_in / rate_out;
    auto i0 = static_cast<Eigen::Index>(std::floor(t));
    auto i1 = std::min(i0 + 1, x.size() - 1);
    double frac = t - static_cast<double>(i0);
    y(i) = x(std::min(i0, x.size() - 1)) * (1.0 - frac) + x(i1) * frac;
  }
  return y;
}

inline Eigen::Index frame_count(const AudioClip& audio) {
  return static_cast<Eigen::Index>(std::floor(audio.duration() * kFeatureFps));
}

// Magnitude STFT, frames x (kWindowSize/2 + 1). Frame t is centered at
// sample t * hop of the 22050 Hz signal; edges are zero padded.
inline Mat stft_magnitude(const AudioClip& audio, Eigen::Index frames) {
  Vec x = resample_linear(audio.samples, audio.sample_rate, kAnalysisRate);
  const int bins = kWindowSize / 2 + 1;
  Vec window(kWindowSize);
  for (int i = 0; i < kWindowSize; ++i)
    window(i) = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (kWindowSize - 1));

  Eigen::FFT<double> fft;
  std::vector<double> buf(kWindowSize);
  std::vector<std::complex<double>> spec(kWindowSize);
  Mat mag(frames, bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index center = t * kHopSize;
    for (int i = 0; i < kWindowSize; ++i) {
      Eigen::Index s = center + i - kWindowSize / 2;
      double v = (s >= 0 && s < x.size()) ? x(s) : 0.0;
      buf[static_cast<size_t>(i)] = v * window(i);
    }
    fft.fwd(spec, buf);
    for (int b = 0; b < bins; ++b)
      mag(t, b) = std::abs(spec[static_cast<size_t>(b)]);
  }
  return mag;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular mel filterbank, 0..kMelFmax Hz over kMelBands bands.
inline Mat mel_filterbank() {
  const int bins = kWindowSize / 2 + 1;
  Mat bank = Mat::Zero(kMelBands, bins);
  const double mel_max = hz_to_mel(kMelFmax);
  std::vector<double> edges(kMelBands + 2);
  for (int i = 0; i < kMelBands + 2; ++i)
    edges[static_cast<size_t>(i)] = mel_to_hz(mel_max * i / (kMelBands + 1));
  for (int b = 0; b < kMelBands; ++b) {
    double lo = edges[static_cast<size_t>(b)];
    double mid = edges[static_cast<size_t>(b + 1)];
    double hi = edges[static_cast<size_t>(b + 2)];
    for (int k = 0; k < bins; ++k) {
      double f = k * kAnalysisRate / kWindowSize;
      if (f > lo && f < mid)
        bank(b, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        bank(b, k) = (hi - f) / (hi - mid);
    }
  }
  return bank;
}

inline Mat mel_power_spectrogram(const Mat& mag) {
  static const Mat bank = mel_filterbank();
  Mat power = mag.array().square();
  return power * bank.transpose();  // frames x bands
}

inline Mat log_mel_spectrogram(const Mat& mag) {
  Mat mel = mel_power_spectrogram(mag);
  // The log floor scales with the signal so an overall gain shifts all log
  // values uniformly.
  double peak = mel.maxCoeff();
  double floor_level = peak > 0.0 ? peak * 1e-10 : 1.0;
  return (mel.array() + floor_level).log().matrix();
}

}  // namespace detail

// Spectral-flux onset strength, max-normalized to [0,1]: half-wave rectified
// frame difference of mel-band magnitudes. Linear in the signal gain, so the
// normalized envelope is gain-invariant.
inline Vec onset_envelope(const AudioClip& audio, double fps = kFeatureFps) {
  audio.validate();
  if (audio.duration() < 1.0) throw AudioTooShort("need at least 1 s of audio");
  (void)fps;
  Eigen::Index frames = detail::frame_count(audio);
  Mat mel = detail::mel_power_spectrogram(detail::stft_magnitude(audio, frames));
  Mat mel_mag = mel.array().sqrt().matrix();
  Vec env = Vec::Zero(frames);
  for (Eigen::Index t = 1; t < frames; ++t) {
    double acc = 0.0;
    for (int b = 0; b < kMelBands; ++b)
      acc += std::max(0.0, mel_mag(t, b) - mel_mag(t - 1, b));
    env(t) = acc;
  }
  double peak = env.maxCoeff();
  if (peak > 0.0) env /= peak;
  return env;
}

// 20 MFCCs per frame: STFT -> mel -> log -> DCT-II (orthonormal), keeping
// coefficients 1..20 (c0 dropped).
inline Mat mfcc(const AudioClip& audio, double fps = kFeatureFps) {
  audio.validate();
  if (audio.duration() < 1.0) throw AudioTooShort("need at least 1 s of audio");
  (void)fps;
  Eigen::Index frames = detail::frame_count(audio);
  Mat logmel = detail::log_mel_spectrogram(detail::stft_magnitude(audio, frames));
  Mat out(frames, kMfccCount);
  const double scale = std::sqrt(2.0 / kMelBands);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (int c = 1; c <= kMfccCount; ++c) {
      double acc = 0.0;
      for (int b = 0; b < kMelBands; ++b)
        acc += logmel(t, b) * std::cos(M_PI * c * (b + 0.5) / kMelBands);
      out(t, c - 1) = acc * scale;
    }
  return out;
}

// 12 pitch-class energies per frame, each row L1-normalized; silent frames
// stay zero. Class indices follow MIDI (C=0 ... A=9, B=11).
inline Mat chroma(const AudioClip& audio, double fps = kFeatureFps) {
  audio.validate();
  if (audio.duration() < 1.0) throw AudioTooShort("need at least 1 s of audio");
  (void)fps;
  Eigen::Index frames = detail::frame_count(audio);
  Mat mag = detail::stft_magnitude(audio, frames);
  Mat out = Mat::Zero(frames, kChromaBins);
  const int bins = kWindowSize / 2 + 1;
  std::vector<int> pitch_class(static_cast<size_t>(bins), -1);
  for (int k = 1; k < bins; ++k) {
    double f = k * kAnalysisRate / kWindowSize;
    if (f < 30.0 || f > 5000.0) continue;
    double midi = 69.0 + 12.0 * std::log2(f / 440.0);
    int pc = static_cast<int>(std::lround(midi)) % 12;
    pitch_class[static_cast<size_t>(k)] = pc < 0 ? pc + 12 : pc;
  }
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int k = 1; k < bins; ++k) {
      int pc = pitch_class[static_cast<size_t>(k)];
      if (pc >= 0) out(t, pc) += mag(t, k) * mag(t, k);
    }
    double sum = out.row(t).sum();
    if (sum > 0.0) out.row(t) /= sum;
  }
  return out;
}

// Dynamic-programming beat tracker over the onset envelope (Ellis-style):
// a global tempo estimate from the autocorrelation under a log-normal prior
// centered at 120 BPM, then beats maximizing onset strength with a squared
// log-tempo-deviation penalty.
inline BeatGrid track_beats(const Vec& envelope, double fps = kFeatureFps) {
  const auto frames = envelope.size();
  if (frames < static_cast<Eigen::Index>(fps))
    throw AudioTooShort("need at least 1 s of envelope for beat tracking");
  BeatGrid grid;
  if (envelope.maxCoeff() <= 0.0) return grid;  // silence

  const int lag_min = static_cast<int>(std::lround(fps * 60.0 / kTempoMaxBpm));
  const int lag_max = static_cast<int>(std::lround(fps * 60.0 / kTempoMinBpm));
  double best_score = -1.0;
  int period = static_cast<int>(std::lround(fps * 0.5));  // 120 BPM fallback
  for (int lag = lag_min; lag <= std::min<Eigen::Index>(lag_max, frames - 1);
       ++lag) {
    double corr = 0.0;
    for (Eigen::Index t = lag; t < frames; ++t)
      corr += envelope(t) * envelope(t - lag);
    double prior = std::exp(-0.5 * std::pow(std::log2(lag / (fps * 0.5)) / 0.9, 2));
    if (corr * prior > best_score) {
      best_score = corr * prior;
      period = lag;
    }
  }

  constexpr double kTightness = 100.0;
  Vec score = envelope;
  std::vector<Eigen::Index> backlink(static_cast<size_t>(frames), -1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    Eigen::Index lo = t - 2 * period;
    Eigen::Index hi = t - period / 2;
    double best = 0.0;
    Eigen::Index arg = -1;
    for (Eigen::Index p = std::max<Eigen::Index>(lo, 0); p <= hi; ++p) {
      double gap = std::log(static_cast<double>(t - p) / period);
      double cand = score(p) - kTightness * gap * gap;
      if (arg == -1 || cand > best) {
        best = cand;
        arg = p;
      }
    }
    if (arg >= 0) {
      score(t) += best;
      backlink[static_cast<size_t>(t)] = arg;
    }
  }

  // Start backtracking from the best score in the trailing period.
  Eigen::Index cursor = std::max<Eigen::Index>(frames - period, 0);
  for (Eigen::Index t = cursor; t < frames; ++t)
    if (score(t) > score(cursor)) cursor = t;
  std::vector<int> beats;
  while (cursor >= 0) {
    beats.push_back(static_cast<int>(cursor));
    cursor = backlink[static_cast<size_t>(cursor)];
  }
  std::reverse(beats.begin(), beats.end());

  // Trim leading/trailing beats that carry essentially no onset energy; the
  // DP chain extends into silent regions by construction.
  const double floor_level = 0.02 * envelope.maxCoeff();
  auto weak = [&](int b) {
    double local = 0.0;
    for (Eigen::Index t = std::max<Eigen::Index>(b - 2, 0);
         t <= std::min<Eigen::Index>(b + 2, frames - 1); ++t)
      local = std::max(local, envelope(t));
    return local < floor_level;
  };
  while (!beats.empty() && weak(beats.front())) beats.erase(beats.begin());
  while (!beats.empty() && weak(beats.back())) beats.pop_back();

  grid.beat_frames = std::move(beats);
  return grid;
}

// Assembles the 35-column feature matrix. The peak column marks local maxima
// of the envelope above 0.5 of its max.
inline MusicFeatures extract_music_features(const AudioClip& audio) {
  audio.validate();
  if (audio.duration() < 1.0) throw AudioTooShort("need at least 1 s of audio");
  Eigen::Index frames = detail::frame_count(audio);
  MusicFeatures mf;
  mf.data = Mat::Zero(frames, MusicFeatures::kDim);
  Vec env = onset_envelope(audio);
  mf.data.col(MusicFeatures::kEnvelopeCol) = env;
  mf.data.middleCols(MusicFeatures::kMfccBegin, kMfccCount) = mfcc(audio);
  mf.data.middleCols(MusicFeatures::kChromaBegin, kChromaBins) = chroma(audio);
  for (Eigen::Index t = 1; t + 1 < frames; ++t)
    if (env(t) > 0.5 && env(t) >= env(t - 1) && env(t) > env(t + 1))
      mf.data(t, MusicFeatures::kPeakCol) = 1.0;
  for (int b : track_beats(env).beat_frames)
    mf.data(b, MusicFeatures::kBeatCol) = 1.0;
  return mf;
}

inline BeatGrid beats_from_features(const MusicFeatures& mf) {
  BeatGrid grid;
  for (Eigen::Index t = 0; t < mf.frames(); ++t)
    if (mf.data(t, MusicFeatures::kBeatCol) > 0.5)
      grid.beat_frames.push_back(static_cast<int>(t));
  return grid;
}

}  // namespace lodgepp::music
