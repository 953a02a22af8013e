#pragma once

// Files: solution JSON, atomic writes and run manifests with SHA-256
// checksums.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "flatpulse/constraints.hpp"
#include "flatpulse/numeric.hpp"

namespace flatpulse {

inline constexpr const char* kVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file, then renames over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

struct ManifestEntry {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  json parameters = json::object();
  std::vector<std::uint64_t> seeds;
  std::string version = kVersion;
  std::vector<ManifestEntry> outputs;
  /// Informational only; negative when not recorded.
  double wall_time_s = -1.0;

  json to_json() const {
    json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["seeds"] = seeds;
    j["version"] = version;
    j["outputs"] = json::array();
    for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}});
    if (wall_time_s >= 0) j["wall_time_s"] = wall_time_s;
    return j;
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.parameters = j.at("parameters");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.version = j.at("version").get<std::string>();
    for (const auto& o : j.at("outputs")) m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
    m.wall_time_s = j.value("wall_time_s", -1.0);
    return m;
  }
};

/// Collects output files so each is written atomically and checksummed.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    entries_.push_back({name, sha256_hex(content)});
  }

  void finish(RunManifest manifest, const std::string& name = "manifest.json") {
    manifest.outputs = entries_;
    write_atomic(dir_ / name, manifest.to_json().dump(2) + "\n");
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
};

/// Solution record. `coeffs` are doubles for plotting; `coeffs_text` keeps
/// every digit of the working precision and is what gets read back.
template <class Real>
json solution_to_json(const SolverConfig& cfg, const SolveReport<Real>& rep) {
  json j;
  j["k"] = cfg.k;
  j["theta"] = to_double(cfg.theta_as<Real>());
  if (cfg.theta_pi_multiple) j["theta_pi_multiple"] = *cfg.theta_pi_multiple;
  j["alpha"] = cfg.alpha;
  j["epsilon"] = cfg.epsilon;
  j["precision_digits"] = cfg.precision_digits;
  j["start"] = to_string(cfg.start);
  j["status"] = to_string(rep.status);
  std::vector<double> c;
  std::vector<std::string> text;
  for (const auto& v : rep.coeffs.coeffs()) {
    c.push_back(to_double(v));
    text.push_back(to_string_full(v));
  }
  j["coeffs"] = c;
  j["coeffs_text"] = text;
  j["residual_final"] = rep.residual_final();
  j["iterations"] = rep.iterations;
  return j;
}

struct StoredSolution {
  int k = 0;
  double theta = 0.0;
  int precision_digits = 0;
  std::vector<double> coeffs;
  std::vector<std::string> coeffs_text;

  template <class Real>
  PhasePolynomial<Real> poly() const {
    std::vector<Real> c;
    if (!coeffs_text.empty()) {
      for (const auto& s : coeffs_text) {
        if constexpr (std::is_same_v<Real, double>) c.push_back(std::stod(s));
        else c.push_back(Real(s));
      }
    } else {
      for (double v : coeffs) c.push_back(Real(v));
    }
    return PhasePolynomial<Real>(std::move(c));
  }
};

inline StoredSolution parse_solution(const json& j) {
  StoredSolution s;
  try {
    s.k = j.at("k").get<int>();
    s.theta = j.at("theta").get<double>();
    s.precision_digits = j.value("precision_digits", 0);
    s.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (j.contains("coeffs_text")) s.coeffs_text = j.at("coeffs_text").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed solution: ") + e.what());
  }
  if (s.coeffs.empty()) throw std::invalid_argument("malformed solution: no coefficients");
  if (!s.coeffs_text.empty() && s.coeffs_text.size() != s.coeffs.size())
    throw std::invalid_argument("malformed solution: coeffs and coeffs_text differ in length");
  return s;
}

inline StoredSolution load_solution(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed solution file " + path.string() + ": " + e.what());
  }
  return parse_solution(j);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace flatpulse
