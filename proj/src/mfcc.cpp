#include "stepsrl/mfcc.hpp"

#include <unsupported/Eigen/FFT>
#include <cmath>
#include <vector>

#include "stepsrl/util.hpp"

namespace stepsrl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filters over FFT bin center frequencies, 0 Hz .. 8 kHz.
Eigen::MatrixXd mel_filterbank(const MfccConfig& cfg) {
  const int bins = cfg.n_fft / 2 + 1;
  const double fmax = 8000.0;
  const double mel_max = hz_to_mel(fmax);
  std::vector<double> edges(std::size_t(cfg.n_mels) + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[std::size_t(i)] = mel_to_hz(mel_max * i / (cfg.n_mels + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[std::size_t(m)];
    const double mid = edges[std::size_t(m) + 1];
    const double hi = edges[std::size_t(m) + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = 16000.0 * k / cfg.n_fft;
      if (f > lo && f < mid)
        fb(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

// Orthonormal DCT-II rows: the first d_mfcc basis vectors of length n_mels.
Eigen::MatrixXd dct_matrix(int d_mfcc, int n_mels) {
  Eigen::MatrixXd dct(d_mfcc, n_mels);
  for (int j = 0; j < d_mfcc; ++j) {
    const double s = j == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
    for (int m = 0; m < n_mels; ++m)
      dct(j, m) = s * std::cos(kPi * j * (m + 0.5) / n_mels);
  }
  return dct;
}

}  // namespace

MfccConfig MfccConfig::resolved() const {
  MfccConfig c = *this;
  if (c.d_mfcc <= 0) throw ConfigError("mfcc: d_mfcc must be positive");
  if (c.frame_ms <= 0 || c.hop_ms <= 0)
    throw ConfigError("mfcc: frame/hop must be positive");
  if (c.n_mels == 0) c.n_mels = std::max(40, c.d_mfcc);
  if (c.d_mfcc > c.n_mels)
    throw ConfigError("mfcc: d_mfcc (" + std::to_string(c.d_mfcc) +
                      ") exceeds n_mels (" + std::to_string(c.n_mels) + ")");
  if (c.n_fft < c.frame_samples())
    throw ConfigError("mfcc: n_fft shorter than the analysis frame");
  return c;
}

int mfcc_frame_count(int len, const MfccConfig& cfg) {
  const int W = cfg.frame_samples();
  const int H = cfg.hop_samples();
  if (len < W) return 1;
  return 1 + (len - W) / H;
}

Eigen::MatrixXf mfcc(const Waveform& w, const MfccConfig& raw) {
  const MfccConfig cfg = raw.resolved();
  if (w.samples.empty()) throw ConfigError("mfcc: empty waveform");
  const int W = cfg.frame_samples();
  const int H = cfg.hop_samples();
  const int L = int(w.samples.size());

  // Pre-emphasis over the whole signal, samples scaled to [-1, 1).
  std::vector<double> x(static_cast<std::size_t>(L));
  x[0] = w.samples[0] / 32768.0;
  for (int t = 1; t < L; ++t)
    x[std::size_t(t)] =
        (w.samples[std::size_t(t)] - cfg.preemphasis * w.samples[std::size_t(t) - 1]) /
        32768.0;

  Eigen::VectorXd window(W);
  for (int i = 0; i < W; ++i)
    window(i) = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (W - 1));

  const Eigen::MatrixXd fb = mel_filterbank(cfg);
  const Eigen::MatrixXd dct = dct_matrix(cfg.d_mfcc, cfg.n_mels);
  const int frames = mfcc_frame_count(L, cfg);
  const int bins = cfg.n_fft / 2 + 1;

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(cfg.n_fft));
  std::vector<std::complex<double>> spec;
  Eigen::MatrixXf out(frames, cfg.d_mfcc);
  for (int f = 0; f < frames; ++f) {
    const int start = f * H;
    for (int i = 0; i < cfg.n_fft; ++i) {
      const int t = start + i;
      buf[std::size_t(i)] =
          (i < W && t < L) ? x[std::size_t(t)] * window(i) : 0.0;
    }
    fft.fwd(spec, buf);
    Eigen::VectorXd mag(bins);
    for (int k = 0; k < bins; ++k) mag(k) = std::abs(spec[std::size_t(k)]);
    Eigen::VectorXd mel = fb * mag;
    for (int m = 0; m < cfg.n_mels; ++m)
      mel(m) = std::log(std::max(mel(m), cfg.log_floor));
    out.row(f) = (dct * mel).cast<float>();
  }
  return out;
}

Eigen::VectorXf silence_vector(const MfccConfig& raw) {
  const MfccConfig cfg = raw.resolved();
  // Zero signal: zero mel energies, floored log, DCT of a constant vector.
  Eigen::VectorXd mel =
      Eigen::VectorXd::Constant(cfg.n_mels, std::log(cfg.log_floor));
  return (dct_matrix(cfg.d_mfcc, cfg.n_mels) * mel).cast<float>();
}

AcousticSegment pad_to_n(const Eigen::MatrixXf& frames, int n,
                         const MfccConfig& cfg) {
  AcousticSegment seg;
  const int rows = int(frames.rows());
  seg.frames.resize(n, frames.cols());
  if (rows > n) {
    log_warn("segment of " + std::to_string(rows) + " frames truncated to " +
             std::to_string(n));
    seg.frames = frames.topRows(n);
    seg.valid_frame_count = n;
    return seg;
  }
  seg.frames.topRows(rows) = frames;
  if (rows < n)
    seg.frames.bottomRows(n - rows).rowwise() =
        silence_vector(cfg).transpose();
  seg.valid_frame_count = rows;
  return seg;
}

}  // namespace stepsrl
