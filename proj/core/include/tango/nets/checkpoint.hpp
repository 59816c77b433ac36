#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "tango/autodiff/tensor.hpp"

namespace tango::nets {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter values keyed by their visit_params name.
using Checkpoint = std::map<std::string, ad::Tensor>;

template <class Model>
Checkpoint snapshot(const Model& m) {
  Checkpoint c;
  visit_params(m, "", [&](const std::string& name, const ad::Tensor& t) { c.emplace(name, t); });
  return c;
}

/// Copies values back into the model. Throws ShapeError on a width mismatch
/// and CheckpointError on missing or unexpected names.
template <class Model>
void restore(Model& m, const Checkpoint& c) {
  std::size_t used = 0;
  visit_params(m, "", [&](const std::string& name, ad::Tensor& t) {
    const auto it = c.find(name);
    if (it == c.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (!it->second.same_shape(t)) {
      throw ad::ShapeError("checkpoint parameter " + name + " is " + it->second.shape_string() + ", model expects " +
                           t.shape_string());
    }
    t = it->second;
    ++used;
  });
  if (used != c.size()) throw CheckpointError("checkpoint has parameters the model does not use");
}

/// JSON object mapping each name to its rows, printed with round-trip precision.
std::string dump_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace tango::nets
