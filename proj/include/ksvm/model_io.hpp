#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ksvm/dataset.hpp"
#include "ksvm/metrics.hpp"

namespace ksvm {

/// Everything needed to predict without the training data.
struct ModelFile {
  static constexpr int kVersion = 1;

  int version = kVersion;
  SolverKind solver = SolverKind::spsvm;
  KernelSpec kernel;
  std::optional<Scaling> scaling;
  OvoModel model;
  /// Echo of the training configuration (excluding the worker count).
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json config_echo(const SolverOptions& options);

/// Versioned JSON; doubles use the shortest text that reads back exactly.
std::string serialize_model(const ModelFile& file);
ModelFile parse_model(const std::string& text);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace ksvm
