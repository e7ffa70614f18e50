#include "stepsrl/wav.hpp"

#include <cstring>
#include <fstream>

#include "stepsrl/util.hpp"

namespace stepsrl {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const unsigned char* p) {
  return uint16_t(p[0]) | uint16_t(uint32_t(p[1]) << 8);
}

void wr_u32(std::ofstream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ConfigError("not a RIFF/WAVE file: " + path);

  // Walk chunks; require a PCM fmt chunk before data.
  std::size_t pos = 12;
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  uint32_t rate = 0;
  Waveform w;
  bool have_data = false;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t len = rd_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size())
      throw ConfigError("truncated wav chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
      format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw ConfigError("wav data before fmt chunk: " + path);
      w.samples.resize(len / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = int16_t(rd_u16(bytes.data() + body + 2 * i));
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || !have_data)
    throw ConfigError("wav missing fmt or data chunk: " + path);
  if (format != 1 || bits != 16)
    throw ConfigError(path + ": expected PCM16, got format=" +
                      std::to_string(format) + " bits=" + std::to_string(bits));
  if (channels != 1)
    throw ConfigError(path + ": expected mono, got " +
                      std::to_string(channels) + " channels");
  if (rate != 16000)
    throw ConfigError(path + ": expected 16000 Hz, got " +
                      std::to_string(rate));
  if (w.samples.empty()) throw ConfigError(path + ": empty audio");
  w.sample_rate = int(rate);
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write wav file: " + path);
  const uint32_t data_len = uint32_t(w.samples.size() * 2);
  os.write("RIFF", 4);
  wr_u32(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, uint32_t(w.sample_rate));
  wr_u32(os, uint32_t(w.sample_rate * 2));
  wr_u16(os, 2);
  wr_u16(os, 16);
  os.write("data", 4);
  wr_u32(os, data_len);
  for (int16_t s : w.samples) wr_u16(os, uint16_t(s));
}

}  // namespace stepsrl
