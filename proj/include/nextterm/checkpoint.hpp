#pragma once

// Versioned JSON checkpoint:
//   {"version":1, "dims":{"C","H","K","M"}, "catalog":[...],
//    "tensors":{name:{"rows","cols","data":[row-major]}},
//    "failure_rates":{course: rate}}            (failure_rates optional)
//
// Doubles are written with 17 significant digits, so load -> save
// reproduces the same bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nextterm/error.hpp"
#include "nextterm/model.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

using FailureRates = std::map<std::string, double>;

struct Checkpoint {
  ModelParams params;
  CourseCatalog catalog;
  FailureRates failure_rates;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  nlohmann::json doc;
  doc["version"] = 1;
  const auto& d = ck.params.dims;
  doc["dims"] = {{"C", d.courses}, {"H", d.hidden}, {"K", d.combo}, {"M", d.merge}};
  doc["catalog"] = ck.catalog.courses();
  auto& tensors = doc["tensors"] = nlohmann::json::object();
  for_each_tensor(ck.params, [&](const std::string& name, const Matrix& m) {
    tensors[name] = {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
  });
  if (!ck.failure_rates.empty()) doc["failure_rates"] = ck.failure_rates;
  return doc;
}

inline std::string serialize_checkpoint(const Checkpoint& ck) { return checkpoint_to_json(ck).dump() + "\n"; }

inline Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw ValidationError("unsupported checkpoint version");
    const auto& jd = doc.at("dims");
    ModelDims dims{jd.at("C").get<std::size_t>(), jd.at("H").get<std::size_t>(), jd.at("K").get<std::size_t>(),
                   jd.at("M").get<std::size_t>()};
    if (dims.courses == 0 || dims.hidden == 0 || dims.combo == 0 || dims.merge == 0) {
      throw ValidationError("checkpoint dims must be positive");
    }
    Checkpoint ck{ModelParams(dims), CourseCatalog(doc.at("catalog").get<std::vector<std::string>>()), {}};
    if (ck.catalog.size() != dims.courses) throw ValidationError("catalog size does not match dims.C");

    const auto& tensors = doc.at("tensors");
    std::size_t expected = 0;
    for_each_tensor(ck.params, [&](const std::string& name, Matrix& m) {
      ++expected;
      const auto it = tensors.find(name);
      if (it == tensors.end()) throw ValidationError("checkpoint is missing tensor " + name);
      if (it->at("rows").get<std::size_t>() != m.rows || it->at("cols").get<std::size_t>() != m.cols) {
        throw ValidationError("tensor " + name + " has the wrong shape");
      }
      auto data = it->at("data").get<std::vector<double>>();
      if (data.size() != m.size()) throw ValidationError("tensor " + name + " has the wrong element count");
      if (!all_finite(data)) throw ValidationError("tensor " + name + " contains non-finite values");
      m.data = std::move(data);
    });
    if (tensors.size() != expected) throw ValidationError("checkpoint has unexpected extra tensors");

    if (auto it = doc.find("failure_rates"); it != doc.end()) {
      ck.failure_rates = it->get<FailureRates>();
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(doc);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file(path, serialize_checkpoint(ck));
}

// FNV-1a over the serialized bytes, as 16 hex digits.
inline std::string checkpoint_id(const std::string& serialized) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : serialized) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string checkpoint_id(const Checkpoint& ck) { return checkpoint_id(serialize_checkpoint(ck)); }

}  // namespace nextterm
