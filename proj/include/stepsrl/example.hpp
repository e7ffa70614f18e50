#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stepsrl {

// One spoken word as a fixed-height matrix of cepstral frames. Rows at and
// beyond valid_frame_count are copies of the silence vector.
struct AcousticSegment {
  Eigen::MatrixXf frames;  // n x d_mfcc
  int valid_frame_count = 0;
};

// Target word plus its windowed context, ready for the model:
//   target        n x d_mfcc frames of the word itself
//   ctx_left/right  m segments each, silence-filled at utterance edges
//   wvecs         (2m+1) x d_w text embedding rows, ordered left..target..right
//   aux           speaker one-hot (empty, gender, dialect, or both)
//   y             50 phoneme token ids: SOPS p1 SEP p2 ... EOPS PAD...
struct TrainingExample {
  Eigen::MatrixXf target;
  std::vector<Eigen::MatrixXf> ctx_left;
  std::vector<Eigen::MatrixXf> ctx_right;
  Eigen::MatrixXf wvecs;
  Eigen::VectorXf aux;
  std::vector<int> y;
  std::string word;
  std::string speaker;
};

}  // namespace stepsrl
