#include "stepsrl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "stepsrl/util.hpp"

namespace stepsrl {

namespace {

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
void wr_f32(std::ofstream& os, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  wr_u32(os, v);
}

uint32_t rd_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}
uint16_t rd_u16(std::ifstream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0]) | uint16_t(uint32_t(b[1]) << 8);
}

void write_tensor(std::ofstream& os, const std::string& name,
                  const std::vector<int>& shape, const float* data,
                  int64_t count) {
  wr_u16(os, uint16_t(name.size()));
  os.write(name.data(), std::streamsize(name.size()));
  os.put(char(shape.size()));
  for (int d : shape) wr_u32(os, uint32_t(d));
  for (int64_t i = 0; i < count; ++i) wr_f32(os, data[i]);
}

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const std::string& config_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint: " + path);
  os.write("STEP", 4);
  wr_u32(os, 1);
  uint32_t count = 0;
  for (const auto& nt : params.named()) {
    write_tensor(os, nt.name, nt.tensor.shape(), nt.tensor.data(),
                 nt.tensor.size());
    ++count;
  }
  std::vector<float> cfg_bytes(config_json.size());
  for (std::size_t i = 0; i < config_json.size(); ++i)
    cfg_bytes[i] = float(static_cast<unsigned char>(config_json[i]));
  write_tensor(os, "__config", {int(cfg_bytes.size())}, cfg_bytes.data(),
               int64_t(cfg_bytes.size()));
  ++count;
  wr_u32(os, count);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  is.seekg(0, std::ios::end);
  const std::streamoff total = is.tellg();
  is.seekg(0);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "STEP", 4) != 0)
    throw ConfigError(path + ": not a STEP checkpoint");
  const uint32_t version = rd_u32(is);
  if (version != 1)
    throw ConfigError(path + ": unsupported checkpoint version " +
                      std::to_string(version));

  Checkpoint ckpt;
  uint32_t read_count = 0;
  while (is.tellg() + std::streamoff(4) < total) {
    const uint16_t name_len = rd_u16(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int rank = is.get();
    std::vector<int> shape(static_cast<std::size_t>(rank));
    int64_t n = 1;
    for (int i = 0; i < rank; ++i) {
      shape[std::size_t(i)] = int(rd_u32(is));
      n *= shape[std::size_t(i)];
    }
    std::vector<float> data(static_cast<std::size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      const uint32_t v = rd_u32(is);
      std::memcpy(&data[std::size_t(i)], &v, 4);
    }
    if (!is) throw ConfigError(path + ": truncated tensor '" + name + "'");
    ++read_count;
    if (name == "__config") {
      ckpt.config_json.reserve(data.size());
      for (float f : data) ckpt.config_json.push_back(char(int(f)));
    } else {
      ckpt.tensors[name] = {std::move(shape), std::move(data)};
    }
  }
  const uint32_t declared = rd_u32(is);
  if (declared != read_count)
    throw ConfigError(path + ": tensor count mismatch (declared " +
                      std::to_string(declared) + ", read " +
                      std::to_string(read_count) + ")");
  return ckpt;
}

void restore_params(ModelParams<float>& params, const Checkpoint& ckpt) {
  std::string mismatches;
  for (auto& nt : params.named()) {
    auto it = ckpt.tensors.find(nt.name);
    if (it == ckpt.tensors.end()) {
      mismatches += "  " + nt.name + ": expected " +
                    shape_str(nt.tensor.shape()) + ", missing in checkpoint\n";
      continue;
    }
    if (it->second.shape != nt.tensor.shape()) {
      mismatches += "  " + nt.name + ": expected " +
                    shape_str(nt.tensor.shape()) + ", found " +
                    shape_str(it->second.shape) + "\n";
      continue;
    }
    for (int64_t i = 0; i < nt.tensor.size(); ++i)
      nt.tensor.value()(i) = it->second.data[std::size_t(i)];
  }
  if (!mismatches.empty())
    throw ConfigError("checkpoint/config shape mismatch:\n" + mismatches);
}

}  // namespace stepsrl
