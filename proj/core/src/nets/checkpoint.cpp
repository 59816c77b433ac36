#include "tango/nets/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tango::nets {

using ordered_json = nlohmann::ordered_json;

std::string dump_checkpoint(const Checkpoint& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, t] : c) {
    auto rows = ordered_json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      auto row = ordered_json::array();
      for (std::size_t k = 0; k < t.cols(); ++k) row.push_back(t(r, k));
      rows.push_back(std::move(row));
    }
    j[name] = std::move(rows);
  }
  return j.dump(1);
}

Checkpoint parse_checkpoint(const std::string& text) {
  Checkpoint c;
  try {
    const auto j = ordered_json::parse(text);
    if (!j.is_object()) throw CheckpointError("checkpoint must be a JSON object");
    for (const auto& [name, rows] : j.items()) {
      if (!rows.is_array() || rows.empty()) throw CheckpointError("parameter " + name + " must be a nonempty array of rows");
      const std::size_t cols = rows[0].size();
      ad::Tensor t(rows.size(), cols);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != cols) throw CheckpointError("ragged rows in parameter " + name);
        for (std::size_t k = 0; k < cols; ++k) t(r, k) = rows[r][k].get<double>();
      }
      c.emplace(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << dump_checkpoint(c) << '\n';
  if (!out) throw CheckpointError("cannot write " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace tango::nets
