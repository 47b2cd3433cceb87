#include "bbi/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bbi/circuit.hpp"
#include "json.hpp"

namespace bbi {

using nlohmann::json;

void RunConfig::validate() const {
  (void)lattice();
  if (truncation < 8) throw ValidationError("truncation must be at least 8");
  const GridAxis x{sites, points_per_site};
  const GridAxis z{sites_z, points_per_site_z};
  x.validate();
  z.validate();
  if (envelope_sites < 1) throw ValidationError("envelope_sites must be positive");
  if (hold_step_ns <= 0 || hold_step_ns % kAwgSamplePeriodNs != 0) {
    throw ValidationError("hold_step must be a positive multiple of 50 ns");
  }
  if (rotation_step_ns <= 0 || rotation_step_ns % kAwgSamplePeriodNs != 0) {
    throw ValidationError("rotation_step must be a positive multiple of 50 ns");
  }
  if (workers < 0) throw ValidationError("workers must be non-negative");
}

LatticeConfig RunConfig::lattice() const {
  LatticeConfig c = LatticeConfig::preset(preset);
  if (depth) c.depth = *depth;
  c.truncation = truncation;
  c.validate();
  return c;
}

ScanOptions RunConfig::scan_options() const {
  ScanOptions o;
  o.axis_x = {sites, points_per_site};
  o.axis_z = {sites_z, points_per_site_z};
  o.envelope_sites = envelope_sites;
  o.evolve.hold_step = static_cast<double>(hold_step_ns) * 1e-9;
  o.evolve.rotation_step = static_cast<double>(rotation_step_ns) * 1e-9;
  o.workers = workers;
  return o;
}

std::string RunConfig::to_json() const {
  json j;
  j["preset"] = preset;
  if (depth) {
    j["depth"] = *depth;
  } else {
    j["depth"] = nullptr;
  }
  j["truncation"] = truncation;
  j["sites"] = sites;
  j["points_per_site"] = points_per_site;
  j["sites_z"] = sites_z;
  j["points_per_site_z"] = points_per_site_z;
  j["envelope_sites"] = envelope_sites;
  j["hold_step"] = format_duration(hold_step_ns);
  j["rotation_step"] = format_duration(rotation_step_ns);
  j["seed"] = seed;
  j["workers"] = workers;
  j["output_dir"] = output_dir;
  return j.dump(1) + "\n";
}

std::string RunConfig::hash() const {
  // Worker count and output location do not change results.
  RunConfig c = *this;
  c.workers = 0;
  c.output_dir = ".";
  return hash_text(c.to_json());
}

RunConfig RunConfig::from_json(const std::string& text) {
  static const std::set<std::string> known = {"preset",        "depth",   "truncation",        "sites",
                                              "points_per_site", "sites_z", "points_per_site_z", "envelope_sites",
                                              "hold_step",     "rotation_step", "seed",        "workers",
                                              "output_dir"};
  RunConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  try {
    c.preset = j.value("preset", c.preset);
    if (j.contains("depth") && !j["depth"].is_null()) c.depth = j["depth"].get<double>();
    c.truncation = j.value("truncation", c.truncation);
    c.sites = j.value("sites", c.sites);
    c.points_per_site = j.value("points_per_site", c.points_per_site);
    c.sites_z = j.value("sites_z", c.sites_z);
    c.points_per_site_z = j.value("points_per_site_z", c.points_per_site_z);
    c.envelope_sites = j.value("envelope_sites", c.envelope_sites);
    if (j.contains("hold_step")) c.hold_step_ns = parse_duration_ns(j["hold_step"].get<std::string>());
    if (j.contains("rotation_step")) c.rotation_step_ns = parse_duration_ns(j["rotation_step"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace bbi
