#include "ksvm/bench.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

namespace ksvm {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string dataset_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

void validate_options(const SolverOptions& options) {
  try {
    options.kernel.validate();
    switch (options.kind) {
      case SolverKind::smo:
        options.smo.validate();
        break;
      case SolverKind::spsvm:
        options.spsvm.validate();
        break;
      case SolverKind::newton:
        options.newton.validate();
        break;
    }
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

double solver_C(const SolverOptions& options) {
  switch (options.kind) {
    case SolverKind::smo:
      return options.smo.C;
    case SolverKind::spsvm:
      return options.spsvm.C;
    case SolverKind::newton:
      return options.newton.C;
  }
  return 0.0;
}

std::uint64_t solver_seed(const SolverOptions& options) {
  return options.kind == SolverKind::spsvm ? options.spsvm.seed : 0;
}

}  // namespace

json to_json(const BenchReport& r) {
  return {{"schema_version", BenchReport::kSchemaVersion},
          {"dataset", r.dataset},
          {"n", r.n},
          {"d", r.d},
          {"C", r.C},
          {"gamma", r.gamma},
          {"solver", r.solver},
          {"seed", r.seed},
          {"threads", r.threads},
          {"train_seconds", r.train_seconds},
          {"error_pct", optional_json(r.error_pct)},
          {"one_minus_auc_pct", optional_json(r.one_minus_auc_pct)},
          {"basis_or_sv_count", r.basis_or_sv_count},
          {"speedup", optional_json(r.speedup)},
          {"baseline", r.baseline ? json(*r.baseline) : json(nullptr)}};
}

BenchReport report_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != BenchReport::kSchemaVersion) {
    throw ParseError("report: unsupported schema version", 0);
  }
  BenchReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.n = j.at("n").get<Index>();
  r.d = j.at("d").get<Index>();
  r.C = j.at("C").get<double>();
  r.gamma = j.at("gamma").get<double>();
  r.solver = j.at("solver").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.threads = j.at("threads").get<int>();
  r.train_seconds = j.at("train_seconds").get<double>();
  r.error_pct = optional_double(j, "error_pct");
  r.one_minus_auc_pct = optional_double(j, "one_minus_auc_pct");
  r.basis_or_sv_count = j.at("basis_or_sv_count").get<Index>();
  r.speedup = optional_double(j, "speedup");
  if (j.contains("baseline") && !j["baseline"].is_null()) r.baseline = j["baseline"].get<std::string>();
  return r;
}

std::string csv_header() {
  return "dataset,n,d,solver,C,gamma,seed,threads,train_seconds,error_pct,one_minus_auc_pct,basis_or_sv_count,speedup";
}

std::string to_csv_row(const BenchReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  std::ostringstream out;
  out << r.dataset << ',' << r.n << ',' << r.d << ',' << r.solver << ',' << format_number(r.C) << ','
      << format_number(r.gamma) << ',' << r.seed << ',' << r.threads << ',' << format_number(r.train_seconds) << ','
      << opt(r.error_pct) << ',' << opt(r.one_minus_auc_pct) << ',' << r.basis_or_sv_count << ',' << opt(r.speedup);
  return out.str();
}

double round_to_millis(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

Metric metric_from_string(const std::string& name) {
  if (name == "error") return Metric::error;
  if (name == "auc") return Metric::auc;
  throw UsageError("unknown metric '" + name + "'");
}

Vector binary_scores(const OvoModel& model, const Matrix& points, int threads) {
  if (model.pairs.size() != 1) throw UsageError("scores require a binary model");
  return model.pairs.front().expansion.decisions(points, threads);
}

EvalReport evaluate(const ModelFile& file, const Dataset& raw_test, Metric metric, int threads) {
  const OvoModel& model = file.model;
  if (metric == Metric::auc && model.class_ids.size() != 2) {
    throw UsageError("--metric auc requires a binary model");
  }
  if (raw_test.d() != model.dimension()) {
    throw ParseError("test data has " + std::to_string(raw_test.d()) + " features, model expects " +
                         std::to_string(model.dimension()),
                     0);
  }
  const Dataset test = file.scaling ? apply_scale(raw_test, *file.scaling) : raw_test;
  EvalReport report;
  report.n_test = test.n();
  const std::vector<int> predictions = model.predict_all(test.features(), threads);
  report.error_pct = error_rate(predictions, test.labels());
  if (metric == Metric::auc) {
    const Vector scores = binary_scores(model, test.features(), threads);
    const int positive = model.pairs.front().positive;
    std::vector<int> truth;
    truth.reserve(test.labels().size());
    for (int label : test.labels()) truth.push_back(label == positive ? 1 : -1);
    report.one_minus_auc_pct = one_minus_auc({scores.data(), static_cast<std::size_t>(scores.size())}, truth);
  }
  return report;
}

TrainOutcome run_training(const TrainRequest& request, const BinaryTrainer& trainer) {
  SolverOptions options = request.options;
  options.set_threads(request.threads);
  validate_options(options);

  ParseOptions parse;
  parse.dimension = request.dimension;
  Dataset train = load_libsvm(request.train_path, parse);
  if (request.scale) train = fit_scale(train);
  std::optional<Dataset> test;
  if (request.test_path) {
    parse.dimension = train.d();
    test = load_libsvm(*request.test_path, parse);
  }

  const BinaryTrainer& solve = trainer ? trainer : make_trainer(options);
  TrainOutcome outcome;
  outcome.model.solver = options.kind;
  outcome.model.kernel = options.kernel;
  outcome.model.scaling = train.scaling();
  outcome.model.config = config_echo(options);
  outcome.model.model = ovo_train(train, solve, request.ovo_parallel);

  BenchReport& report = outcome.report;
  report.dataset = dataset_name(request.train_path);
  report.n = train.n();
  report.d = train.d();
  report.C = solver_C(options);
  report.gamma = options.kernel.gamma;
  report.solver = to_string(options.kind);
  report.seed = solver_seed(options);
  report.threads = request.threads;
  report.train_seconds = round_to_millis(outcome.model.model.train_seconds());
  report.basis_or_sv_count = outcome.model.model.total_count();
  report.speedup = 1.0;
  report.baseline = report.solver;
  if (test) {
    const bool binary = outcome.model.model.class_ids.size() == 2;
    const EvalReport eval = evaluate(outcome.model, *test, binary ? Metric::auc : Metric::error, request.threads);
    report.error_pct = eval.error_pct;
    report.one_minus_auc_pct = eval.one_minus_auc_pct;
  }
  return outcome;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace

BenchOutcome run_bench(const BenchRequest& request) {
  if (request.solvers.empty()) throw UsageError("--solvers must name at least one solver");
  if (request.repeats < 1) throw UsageError("--repeats must be >= 1");
  for (SolverKind kind : request.solvers) {
    SolverOptions options = request.options;
    options.kind = kind;
    validate_options(options);
  }

  ParseOptions parse;
  parse.dimension = request.dimension;
  Dataset train = load_libsvm(request.train_path, parse);
  if (request.scale) train = fit_scale(train);
  parse.dimension = train.d();
  const Dataset test = load_libsvm(request.test_path, parse);
  const bool binary = train.class_ids().size() == 2;
  const Metric metric = binary ? request.metric : Metric::error;

  BenchOutcome outcome;
  const std::string baseline = to_string(request.solvers.front());
  std::vector<std::vector<std::size_t>> runs_by_solver;
  for (SolverKind kind : request.solvers) {
    SolverOptions options = request.options;
    options.kind = kind;
    options.set_threads(request.threads);
    const int repeats = kind == SolverKind::spsvm ? request.repeats : 1;
    std::vector<std::size_t> indices;
    for (int r = 0; r < repeats; ++r) {
      options.spsvm.seed = request.options.spsvm.seed + static_cast<std::uint64_t>(r);
      ModelFile file;
      file.solver = kind;
      file.kernel = options.kernel;
      file.scaling = train.scaling();
      file.model = ovo_train(train, options);
      const EvalReport eval = evaluate(file, test, metric, request.threads);

      BenchReport report;
      report.dataset = dataset_name(request.train_path);
      report.n = train.n();
      report.d = train.d();
      report.C = solver_C(options);
      report.gamma = options.kernel.gamma;
      report.solver = to_string(kind);
      report.seed = solver_seed(options);
      report.threads = request.threads;
      report.train_seconds = round_to_millis(file.model.train_seconds());
      report.error_pct = eval.error_pct;
      report.one_minus_auc_pct = eval.one_minus_auc_pct;
      report.basis_or_sv_count = file.model.total_count();
      report.baseline = baseline;
      indices.push_back(outcome.runs.size());
      outcome.runs.push_back(std::move(report));
    }
    runs_by_solver.push_back(std::move(indices));
  }

  for (std::size_t s = 0; s < request.solvers.size(); ++s) {
    std::vector<double> times, errors, aucs;
    for (std::size_t idx : runs_by_solver[s]) {
      const BenchReport& r = outcome.runs[idx];
      times.push_back(r.train_seconds);
      if (r.error_pct) errors.push_back(*r.error_pct);
      if (r.one_minus_auc_pct) aucs.push_back(*r.one_minus_auc_pct);
    }
    BenchAggregate agg;
    agg.solver = to_string(request.solvers[s]);
    agg.runs = static_cast<int>(times.size());
    std::tie(agg.mean_train_seconds, agg.std_train_seconds) = mean_std(times);
    if (!errors.empty()) {
      const auto [m, sd] = mean_std(errors);
      agg.mean_error_pct = m;
      agg.std_error_pct = sd;
    }
    if (!aucs.empty()) agg.mean_one_minus_auc_pct = mean_std(aucs).first;
    outcome.aggregates.push_back(agg);
  }

  const double baseline_seconds = outcome.aggregates.front().mean_train_seconds;
  auto speedup = [&](double seconds) -> std::optional<double> {
    if (seconds <= 0.0 || baseline_seconds <= 0.0) return std::nullopt;
    return baseline_seconds / seconds;
  };
  for (BenchReport& r : outcome.runs) r.speedup = speedup(r.train_seconds);
  for (BenchAggregate& agg : outcome.aggregates) agg.speedup = speedup(agg.mean_train_seconds).value_or(1.0);
  outcome.aggregates.front().speedup = 1.0;
  return outcome;
}

json to_json(const BenchAggregate& a) {
  return {{"solver", a.solver},
          {"runs", a.runs},
          {"mean_train_seconds", a.mean_train_seconds},
          {"std_train_seconds", a.std_train_seconds},
          {"mean_error_pct", optional_json(a.mean_error_pct)},
          {"std_error_pct", optional_json(a.std_error_pct)},
          {"mean_one_minus_auc_pct", optional_json(a.mean_one_minus_auc_pct)},
          {"speedup", a.speedup}};
}

json to_json(const BenchOutcome& outcome) {
  json runs = json::array();
  for (const BenchReport& r : outcome.runs) runs.push_back(to_json(r));
  json aggregates = json::array();
  for (const BenchAggregate& a : outcome.aggregates) aggregates.push_back(to_json(a));
  return {{"schema_version", BenchReport::kSchemaVersion}, {"runs", runs}, {"aggregates", aggregates}};
}

}  // namespace ksvm
