#pragma once

#include <Eigen/Dense>

#include "stepsrl/example.hpp"
#include "stepsrl/wav.hpp"

namespace stepsrl {

struct MfccConfig {
  int d_mfcc = 13;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  int n_mels = 0;  // 0 = auto: max(40, d_mfcc); explicit values < d_mfcc fail
  double log_floor = 1e-10;
  double preemphasis = 0.97;

  int frame_samples() const { return int(frame_ms * 16); }
  int hop_samples() const { return int(hop_ms * 16); }

  // Applies the n_mels >= d_mfcc rule; throws ConfigError when the config
  // is unusable as written.
  MfccConfig resolved() const;
};

// Frame count for a signal of `len` samples: 1 + floor((len - W) / H),
// and a single zero-padded frame when len < W.
int mfcc_frame_count(int len, const MfccConfig& cfg);

// Pre-emphasis, Hamming window, magnitude FFT, triangular mel filterbank
// (0 Hz .. 8 kHz), floored natural log, orthonormal DCT-II, first d_mfcc
// coefficients. Deterministic: same bytes in, same matrix out.
Eigen::MatrixXf mfcc(const Waveform& w, const MfccConfig& cfg);

// The MFCC of one all-zero frame under this config; used as the silence
// padding row.
Eigen::VectorXf silence_vector(const MfccConfig& cfg);

// Pads (or truncates, with a warning) to exactly n rows.
AcousticSegment pad_to_n(const Eigen::MatrixXf& frames, int n,
                         const MfccConfig& cfg);

}  // namespace stepsrl
