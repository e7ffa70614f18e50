#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stepsrl {

// Thrown for malformed inputs: bad config values, unreadable files,
// inconsistent manifests. CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/contract violations inside the numeric code.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Analysis-domain failures (degenerate PCA input, constant ranks, ...).
// CLI maps these to exit code 3.
struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel& log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("STEPSRL_LOG");
    if (!env) return LogLevel::Warn;
    std::string_view s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return lvl;
}

inline void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  static const char* tags[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", tags[static_cast<int>(lvl)], msg.c_str());
}

inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, msg); }

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// All randomness derives from one master seed via named substreams, so
// reruns with the same seed are bit-identical regardless of call order
// elsewhere in the program.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream)
      : gen_(seed ^ fnv1a(stream)) {}

  // Uniform in [lo, hi). Hand-rolled mapping: std::uniform_real_distribution
  // is not guaranteed identical across standard libraries.
  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u = (gen_() >> 11) * 0x1.0p-53;  // 53 random bits in [0,1)
    return lo + u * (hi - lo);
  }

  // Box-Muller without caching so the stream position stays predictable.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stepsrl
