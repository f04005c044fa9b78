#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lodgepp/core/rng.hpp"
#include "lodgepp/music/features.hpp"
#include "lodgepp/music/io.hpp"
#include "lodgepp/music/wav.hpp"

using namespace lodgepp;
using namespace lodgepp::music;

namespace {

AudioClip silence(double seconds, double rate = 22050.0) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples = Vec::Zero(static_cast<Eigen::Index>(seconds * rate));
  return clip;
}

AudioClip sine(double freq, double seconds, double rate = 22050.0,
               double amp = 0.5) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<Eigen::Index>(seconds * rate));
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i)
    clip.samples(i) = amp * std::sin(2.0 * M_PI * freq * i / rate);
  return clip;
}

// Decaying 1 kHz bursts on a fixed tempo grid, first beat at 0.25 s.
AudioClip click_track(double bpm, double seconds, double rate = 22050.0) {
  AudioClip clip = silence(seconds, rate);
  double period = 60.0 / bpm;
  for (double t = 0.25; t < seconds; t += period) {
    auto start = static_cast<Eigen::Index>(t * rate);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(0.012 * rate); ++i) {
      if (start + i >= clip.samples.size()) break;
      double u = static_cast<double>(i) / rate;
      clip.samples(start + i) += 0.8 * std::exp(-u * 300.0) *
                                 std::sin(2.0 * M_PI * 1000.0 * u);
    }
  }
  return clip;
}

std::vector<int> true_beat_frames(double bpm, double seconds) {
  std::vector<int> frames;
  double period = 60.0 / bpm;
  for (double t = 0.25; t < seconds; t += period)
    frames.push_back(static_cast<int>(std::lround(t * 30.0)));
  return frames;
}

}  // namespace

TEST_CASE("silence produces an all-zero envelope and empty beats") {
  AudioClip clip = silence(3.0);
  Vec env = onset_envelope(clip);
  CHECK(env.cwiseAbs().maxCoeff() == 0.0);
  CHECK(track_beats(env).beat_frames.empty());
}

TEST_CASE("click track envelope peaks at the click spacing") {
  AudioClip clip = click_track(120.0, 6.0);
  Vec env = onset_envelope(clip);
  // Local maxima above half height.
  std::vector<int> peaks;
  for (Eigen::Index t = 1; t + 1 < env.size(); ++t)
    if (env(t) > 0.5 && env(t) >= env(t - 1) && env(t) > env(t + 1))
      peaks.push_back(static_cast<int>(t));
  REQUIRE(peaks.size() >= 8);
  for (size_t i = 1; i < peaks.size(); ++i) {
    int gap = peaks[i] - peaks[i - 1];
    CHECK(gap >= 14);
    CHECK(gap <= 16);
  }
}

TEST_CASE("steady sine has near-zero flux after onset") {
  AudioClip clip = sine(440.0, 3.0);
  Vec env = onset_envelope(clip);
  CHECK(env.segment(15, env.size() - 16).maxCoeff() < 0.05);
}

TEST_CASE("mfcc of silence is constant across frames") {
  AudioClip clip = silence(2.0);
  Mat coeffs = mfcc(clip);
  CHECK(coeffs.rows() == 60);
  CHECK(coeffs.cols() == 20);
  for (Eigen::Index t = 1; t < coeffs.rows(); ++t)
    CHECK((coeffs.row(t) - coeffs.row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mfcc separates noise from a pure tone") {
  Rng rng(4);
  AudioClip noise = silence(3.0);
  for (Eigen::Index i = 0; i < noise.samples.size(); ++i)
    noise.samples(i) = 0.3 * rng.uniform(-1.0, 1.0);
  AudioClip tone = sine(440.0, 3.0);
  Vec mean_noise = mfcc(noise).colwise().mean().transpose();
  Vec mean_tone = mfcc(tone).colwise().mean().transpose();
  CHECK((mean_noise - mean_tone).norm() > 1.0);
}

TEST_CASE("mfcc shifts by one row when audio shifts by one hop") {
  Rng rng(8);
  AudioClip clip = silence(3.0);
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i)
    clip.samples(i) = 0.2 * rng.uniform(-1.0, 1.0) +
                      0.3 * std::sin(2 * M_PI * 220.0 * i / clip.sample_rate);
  AudioClip shifted = clip;
  shifted.samples.tail(clip.samples.size() - kHopSize) =
      clip.samples.head(clip.samples.size() - kHopSize);
  shifted.samples.head(kHopSize).setZero();
  Mat a = mfcc(clip);
  Mat b = mfcc(shifted);
  for (Eigen::Index t = 2; t + 2 < a.rows(); ++t)
    CHECK((a.row(t) - b.row(t + 1)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("chroma finds pitch class A for 440 and 880 Hz") {
  for (double freq : {440.0, 880.0}) {
    AudioClip clip = sine(freq, 2.0);
    Vec mean = chroma(clip).colwise().mean().transpose();
    Eigen::Index argmax = 0;
    mean.maxCoeff(&argmax);
    CHECK(argmax == 9);  // A
  }
}

TEST_CASE("chroma of silence is all zero rows") {
  AudioClip clip = silence(2.0);
  CHECK(chroma(clip).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beat tracking locks onto click tracks") {
  for (double bpm : {120.0, 90.0}) {
    AudioClip clip = click_track(bpm, 8.0);
    BeatGrid grid = track_beats(onset_envelope(clip));
    std::vector<int> expected = true_beat_frames(bpm, 8.0);
    REQUIRE(grid.beat_frames.size() >= expected.size() - 2);
    // Interior beats sit on the click grid; the backtrack endpoints may drift
    // one extra frame.
    for (size_t i = 0; i < grid.beat_frames.size(); ++i) {
      int b = grid.beat_frames[i];
      int nearest = 1000;
      for (int e : expected) nearest = std::min(nearest, std::abs(e - b));
      bool edge = i == 0 || i + 1 == grid.beat_frames.size();
      CHECK(nearest <= (edge ? 2 : 1));
    }
    // Beat spacing stays within +-1 frame of the nominal period.
    const int period = static_cast<int>(std::lround(30.0 * 60.0 / bpm));
    std::vector<int> gaps;
    for (size_t i = 1; i < grid.beat_frames.size(); ++i)
      gaps.push_back(grid.beat_frames[i] - grid.beat_frames[i - 1]);
    for (int g : gaps) CHECK(std::abs(g - period) <= 1);
    // Spacing variance at constant tempo stays within one frame^2.
    double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    double var = 0.0;
    for (int g : gaps) var += (g - mean) * (g - mean);
    var /= gaps.size();
    CHECK(var <= 1.0);
  }
}

TEST_CASE("gain invariance of envelope and beats") {
  AudioClip clip = click_track(100.0, 6.0);
  AudioClip loud = clip;
  loud.samples *= 3.7;
  Vec env_a = onset_envelope(clip);
  Vec env_b = onset_envelope(loud);
  CHECK((env_a - env_b).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(track_beats(env_a).beat_frames == track_beats(env_b).beat_frames);
}

TEST_CASE("feature matrix layout and frame count") {
  AudioClip clip = click_track(120.0, 10.0);
  MusicFeatures mf = extract_music_features(clip);
  CHECK(mf.data.cols() == 35);
  CHECK(mf.frames() == 300);  // floor(10 s * 30 fps)
  CHECK(mf.data.allFinite());
  // One-hot columns are binary.
  for (Eigen::Index t = 0; t < mf.frames(); ++t) {
    for (int c : {MusicFeatures::kPeakCol, MusicFeatures::kBeatCol}) {
      double v = mf.data(t, c);
      CHECK((v == 0.0 || v == 1.0));
    }
  }
  // Beat column matches track_beats.
  BeatGrid grid = track_beats(mf.data.col(0));
  BeatGrid from_col = beats_from_features(mf);
  CHECK(grid.beat_frames == from_col.beat_frames);
}

TEST_CASE("too-short audio is rejected") {
  AudioClip clip = silence(0.5);
  CHECK_THROWS_AS(extract_music_features(clip), AudioTooShort);
  CHECK_THROWS_AS(onset_envelope(clip), AudioTooShort);
}

TEST_CASE("wav round trip and stereo downmix") {
  namespace fs = std::filesystem;
  AudioClip clip = sine(330.0, 1.5, 44100.0, 0.4);
  auto p = fs::temp_directory_path() / "test_tone.wav";
  save_wav(clip, p.string());
  AudioClip loaded = load_wav(p.string());
  CHECK(loaded.sample_rate == 44100.0);
  CHECK(loaded.samples.size() == clip.samples.size());
  CHECK((loaded.samples - clip.samples).cwiseAbs().maxCoeff() < 1e-3);
  fs::remove(p);
}

TEST_CASE("mfeat round trip") {
  namespace fs = std::filesystem;
  AudioClip clip = click_track(110.0, 4.0);
  MusicFeatures mf = extract_music_features(clip);
  auto p = fs::temp_directory_path() / "test.mfeat";
  save_mfeat(mf, p.string());
  MusicFeatures loaded = load_mfeat(p.string());
  CHECK(loaded.frames() == mf.frames());
  CHECK((loaded.data - mf.data).cwiseAbs().maxCoeff() < 1e-6);
  fs::remove(p);
}
