#include "ksvm/model_io.hpp"

#include <fstream>
#include <sstream>

namespace ksvm {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r]);
    if (row.size() != cols) throw ParseError("model: vector has wrong dimension", 0);
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

json config_echo(const SolverOptions& options) {
  json config;
  switch (options.kind) {
    case SolverKind::smo:
      config = {{"C", options.smo.C}, {"tol", options.smo.tol}, {"max_iter", options.smo.max_iter}};
      break;
    case SolverKind::spsvm:
      config = {{"C", options.spsvm.C},
                {"epsilon", options.spsvm.epsilon},
                {"candidate_size", options.spsvm.candidate_size},
                {"batch_size", options.spsvm.batch_size},
                {"max_basis", options.spsvm.max_basis},
                {"newton_tol", options.spsvm.newton_tol},
                {"newton_max_iter", options.spsvm.newton_max_iter},
                {"seed", options.spsvm.seed}};
      break;
    case SolverKind::newton:
      config = {{"C", options.newton.C}, {"tol", options.newton.tol}, {"max_iter", options.newton.max_iter}};
      break;
  }
  return config;
}

std::string serialize_model(const ModelFile& file) {
  const Index d = file.model.dimension();
  json j;
  j["format"] = "ksvm-model";
  j["version"] = file.version;
  j["solver"] = to_string(file.solver);
  j["kernel"] = {{"family", to_string(file.kernel.family)}, {"gamma", file.kernel.gamma}};
  j["dimension"] = d;
  j["class_ids"] = file.model.class_ids;
  if (file.scaling) {
    j["scaling"] = {{"min", vector_to_json(file.scaling->min)}, {"max", vector_to_json(file.scaling->max)}};
  } else {
    j["scaling"] = nullptr;
  }
  json pairs = json::array();
  for (const PairModel& pair : file.model.pairs) {
    pairs.push_back({{"positive", pair.positive},
                     {"negative", pair.negative},
                     {"count", pair.count},
                     {"b", pair.expansion.b},
                     {"coef", vector_to_json(pair.expansion.coef)},
                     {"vectors", matrix_to_json(pair.expansion.vectors)}});
  }
  j["pairs"] = std::move(pairs);
  j["config"] = file.config;
  return j.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what(), 0);
  }
  try {
    if (j.value("format", std::string()) != "ksvm-model") throw ParseError("model: not a ksvm model file", 0);
    ModelFile file;
    file.version = j.at("version").get<int>();
    if (file.version != ModelFile::kVersion) {
      throw ParseError("model: unsupported version " + std::to_string(file.version), 0);
    }
    file.solver = solver_from_string(j.at("solver").get<std::string>());
    file.kernel.family = kernel_family_from_string(j.at("kernel").at("family").get<std::string>());
    file.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    const Index d = j.at("dimension").get<Index>();
    file.model.class_ids = j.at("class_ids").get<std::vector<int>>();
    if (!j.at("scaling").is_null()) {
      file.scaling = Scaling{vector_from_json(j["scaling"].at("min")), vector_from_json(j["scaling"].at("max"))};
    }
    for (const json& p : j.at("pairs")) {
      PairModel pair;
      pair.positive = p.at("positive").get<int>();
      pair.negative = p.at("negative").get<int>();
      pair.count = p.at("count").get<Index>();
      pair.expansion.spec = file.kernel;
      pair.expansion.b = p.at("b").get<double>();
      pair.expansion.coef = vector_from_json(p.at("coef"));
      pair.expansion.vectors = matrix_from_json(p.at("vectors"), d);
      if (pair.expansion.coef.size() != pair.expansion.vectors.rows()) {
        throw ParseError("model: coefficient and vector counts differ", 0);
      }
      file.model.pairs.push_back(std::move(pair));
    }
    file.config = j.value("config", json::object());
    return file;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what(), 0);
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("model: ") + e.what(), 0);
  }
}

void save_model(const std::string& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'", 0);
  out << serialize_model(file);
  if (!out) throw ParseError("write failed for '" + path + "'", 0);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str());
}

}  // namespace ksvm
