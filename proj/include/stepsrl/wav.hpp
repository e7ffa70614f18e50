#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stepsrl {

// 16 kHz mono PCM16 audio. The only encoding the pipeline accepts.
struct Waveform {
  std::vector<int16_t> samples;
  int sample_rate = 16000;
};

// Reads a RIFF/WAVE file; rejects anything that is not PCM16 LE mono 16 kHz
// with a ConfigError naming what was found.
Waveform read_wav(const std::string& path);

void write_wav(const std::string& path, const Waveform& w);

}  // namespace stepsrl
