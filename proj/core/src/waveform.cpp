#include "bbi/waveform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bbi/errors.hpp"
#include "bbi/units.hpp"
#include "json.hpp"

namespace bbi {

using nlohmann::json;

std::int64_t Waveform::sample_period_ns() const {
  return static_cast<std::int64_t>(std::llround(sample_period * 1e9));
}

void Waveform::validate() const {
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw ValidationError("waveform sample period must be positive");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw ValidationError("waveform '" + label + "' has a non-finite sample");
    if (std::abs(s) > 2.0 * constants::pi + 1e-12) {
      throw ValidationError("waveform '" + label + "' exceeds the 2 pi amplitude range");
    }
  }
}

void Waveform::finalize() { meta.provenance = content_hash(samples, label); }

Waveform reverse(const Waveform& w) {
  Waveform r = w;
  std::reverse(r.samples.begin(), r.samples.end());
  r.meta.reversed = !w.meta.reversed;
  return r;
}

Waveform negate(const Waveform& w) {
  Waveform r = w;
  // 0.0 stays +0.0 so that negating a flat waveform is a no-op bit-for-bit.
  for (double& s : r.samples) s = (s == 0.0) ? 0.0 : -s;
  r.meta.negated = !w.meta.negated;
  return r;
}

Waveform resample_hold(const Waveform& w, double new_period) {
  const double ratio = w.sample_period / new_period;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio) {
    throw ValidationError("resampling period must divide the waveform sample period");
  }
  Waveform r = w;
  r.sample_period = new_period;
  r.samples.clear();
  r.samples.reserve(w.samples.size() * factor);
  for (double s : w.samples) r.samples.insert(r.samples.end(), factor, s);
  return r;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::uint64_t h, const unsigned char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string content_hash(const std::vector<double>& samples, const std::string& salt) {
  std::uint64_t h = kFnvOffset;
  for (double s : samples) {
    const auto bits = std::bit_cast<std::uint64_t>(s);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    h = fnv1a(h, bytes, 8);
  }
  h = fnv1a(h, reinterpret_cast<const unsigned char*>(salt.data()), salt.size());
  return hex(h);
}

std::string hash_text(const std::string& text) {
  return hex(fnv1a(kFnvOffset, reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string waveform_to_json(const Waveform& w) {
  json j;
  j["label"] = w.label;
  j["sample_period_ns"] = w.sample_period_ns();
  j["samples_rad"] = w.samples;
  j["depth_Er"] = w.meta.depth;
  if (std::isfinite(w.meta.fidelity)) {
    j["fidelity"] = w.meta.fidelity;
  } else {
    j["fidelity"] = nullptr;
  }
  j["seed"] = w.meta.seed;
  j["provenance"] = w.meta.provenance;
  j["gate"] = w.meta.gate;
  j["variant"] = w.meta.variant;
  j["role"] = w.meta.role;
  j["reversed"] = w.meta.reversed;
  j["negated"] = w.meta.negated;
  if (!w.meta.generator.empty()) j["generator"] = w.meta.generator;
  return j.dump(1) + "\n";
}

Waveform waveform_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("waveform JSON: ") + e.what());
  }
  Waveform w;
  try {
    w.label = j.at("label").get<std::string>();
    w.sample_period = static_cast<double>(j.at("sample_period_ns").get<std::int64_t>()) * 1e-9;
    w.samples = j.at("samples_rad").get<std::vector<double>>();
    w.meta.depth = j.at("depth_Er").get<double>();
    if (j.contains("fidelity") && !j["fidelity"].is_null()) w.meta.fidelity = j["fidelity"].get<double>();
    w.meta.seed = j.value("seed", std::uint64_t{0});
    w.meta.provenance = j.value("provenance", std::string{});
    w.meta.gate = j.value("gate", std::string{});
    w.meta.variant = j.value("variant", 0);
    w.meta.role = j.value("role", std::string{});
    w.meta.reversed = j.value("reversed", false);
    w.meta.negated = j.value("negated", false);
    w.meta.generator = j.value("generator", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("waveform JSON: ") + e.what());
  }
  w.validate();
  return w;
}

void save_waveform(const Waveform& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << waveform_to_json(w);
  if (!out) throw ValidationError("write failed for " + path.string());
}

Waveform load_waveform(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return waveform_from_json(ss.str());
}

}  // namespace bbi
