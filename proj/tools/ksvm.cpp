// ksvm: train, evaluate and benchmark kernel SVM solvers.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ksvm/bench.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kSolver = 4;

/// Writes to `path` through a temporary so a failed run leaves nothing behind.
class PendingFile {
 public:
  explicit PendingFile(std::string path) : path_(std::move(path)), temp_(path_ + ".partial") {}
  PendingFile(const PendingFile&) = delete;
  PendingFile& operator=(const PendingFile&) = delete;
  ~PendingFile() {
    if (!committed_) std::filesystem::remove(temp_);
  }

  void write(const std::string& text) {
    std::ofstream out(temp_, std::ios::binary);
    out << text;
    if (!out) throw ksvm::ParseError("cannot write '" + path_ + "'", 0);
  }
  void commit() {
    std::filesystem::rename(temp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string temp_;
  bool committed_ = false;
};

struct CommonFlags {
  double C = 0.0;
  double gamma = 0.0;
  double epsilon = 5e-6;
  long long candidate_size = 59;
  long long batch = 50;
  long long max_basis = 2000;
  double tol = 1e-3;
  double cache_mb = 1000.0;
  int threads = 1;
  std::uint64_t seed = 0;
  bool scale = false;
  long long dim = 0;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--c", f.C, "Regularization constant C")->required();
  app->add_option("--gamma", f.gamma, "RBF inverse squared length-scale")->required();
  app->add_option("--epsilon", f.epsilon, "spsvm stopping threshold")->capture_default_str();
  app->add_option("--candidate-size", f.candidate_size, "spsvm candidates per selection")->capture_default_str();
  app->add_option("--batch", f.batch, "spsvm basis vectors added between reoptimizations")->capture_default_str();
  app->add_option("--max-basis", f.max_basis, "spsvm basis cap")->capture_default_str();
  app->add_option("--tol", f.tol, "smo KKT tolerance")->capture_default_str();
  app->add_option("--cache-mb", f.cache_mb, "smo kernel row cache budget")->capture_default_str();
  app->add_option("--threads", f.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "PRNG seed")->capture_default_str();
  app->add_flag("--scale", f.scale, "Scale features to [0,1] using training min/max");
  app->add_option("--dim", f.dim, "Force the feature dimensionality")->check(CLI::NonNegativeNumber);
}

ksvm::SolverOptions make_options(const CommonFlags& f) {
  ksvm::SolverOptions options;
  options.kernel.gamma = f.gamma;
  options.smo.tol = f.tol;
  options.smo.cache_mb = f.cache_mb;
  options.spsvm.epsilon = f.epsilon;
  options.spsvm.candidate_size = f.candidate_size;
  options.spsvm.batch_size = f.batch;
  options.spsvm.max_basis = f.max_basis;
  options.spsvm.seed = f.seed;
  options.set_C(f.C);
  options.set_threads(f.threads);
  return options;
}

std::optional<ksvm::Index> dimension(const CommonFlags& f) {
  if (f.dim > 0) return static_cast<ksvm::Index>(f.dim);
  return std::nullopt;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, sep);) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel SVM training with SMO, sparse primal and full primal Newton solvers"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string train_path, train_test, train_solver, model_out, report_out;
  bool ovo_parallel = false;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--train", train_path, "Training data (LibSVM format)")->required();
  train->add_option("--test", train_test, "Optional test data evaluated after training");
  train->add_option("--solver", train_solver, "Solver")->required()->check(CLI::IsMember({"smo", "spsvm", "newton"}));
  train->add_option("--model-out", model_out, "Model file to write");
  train->add_option("--report-out", report_out, "JSON report to write");
  train->add_flag("--ovo-parallel", ovo_parallel, "Train one-vs-one pairs concurrently");
  add_common(train, train_flags);

  std::string model_path, predict_test, metric_name = "error", predict_report, predictions_out;
  int predict_threads = 1;
  auto* predict = app.add_subcommand("predict", "Evaluate a model on test data");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--test", predict_test, "Test data (LibSVM format)")->required();
  predict->add_option("--metric", metric_name, "error or auc")->check(CLI::IsMember({"error", "auc"}));
  predict->add_option("--report-out", predict_report, "JSON report to write");
  predict->add_option("--predictions-out", predictions_out, "Write one 'label decision' line per test point");
  predict->add_option("--threads", predict_threads, "Worker threads")->check(CLI::PositiveNumber);

  CommonFlags bench_flags;
  std::string bench_train, bench_test, bench_solvers, bench_report, bench_csv, bench_metric = "error";
  int repeats = 1;
  auto* bench = app.add_subcommand("bench", "Compare solvers on one train/test split");
  bench->add_option("--train", bench_train, "Training data")->required();
  bench->add_option("--test", bench_test, "Test data")->required();
  bench->add_option("--solvers", bench_solvers, "Comma-separated solvers; the first is the baseline")->required();
  bench->add_option("--repeats", repeats, "spsvm seeds")->check(CLI::PositiveNumber);
  bench->add_option("--metric", bench_metric, "error or auc")->check(CLI::IsMember({"error", "auc"}));
  bench->add_option("--report-out", bench_report, "JSON report to write");
  bench->add_option("--csv-out", bench_csv, "CSV report to write");
  add_common(bench, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*train) {
      ksvm::TrainRequest request;
      request.train_path = train_path;
      if (!train_test.empty()) request.test_path = train_test;
      request.dimension = dimension(train_flags);
      request.options = make_options(train_flags);
      request.options.kind = ksvm::solver_from_string(train_solver);
      request.scale = train_flags.scale;
      request.ovo_parallel = ovo_parallel;
      request.threads = train_flags.threads;

      std::optional<PendingFile> model_file, report_file;
      if (!model_out.empty()) model_file.emplace(model_out);
      if (!report_out.empty()) report_file.emplace(report_out);

      const ksvm::TrainOutcome outcome = ksvm::run_training(request);
      if (model_file) model_file->write(ksvm::serialize_model(outcome.model));
      if (report_file) report_file->write(ksvm::to_json(outcome.report).dump(1) + "\n");
      if (model_file) model_file->commit();
      if (report_file) report_file->commit();
      std::cout << ksvm::to_json(outcome.report).dump() << '\n';
    } else if (*predict) {
      const ksvm::ModelFile file = ksvm::load_model(model_path);
      const ksvm::Metric metric = ksvm::metric_from_string(metric_name);
      if (metric == ksvm::Metric::auc && file.model.class_ids.size() != 2) {
        throw ksvm::UsageError("--metric auc requires a binary model");
      }
      ksvm::ParseOptions parse;
      parse.dimension = file.model.dimension();
      const ksvm::Dataset test = ksvm::load_libsvm(predict_test, parse);

      std::optional<PendingFile> report_file, predictions_file;
      if (!predict_report.empty()) report_file.emplace(predict_report);
      if (!predictions_out.empty()) predictions_file.emplace(predictions_out);

      const ksvm::EvalReport eval = ksvm::evaluate(file, test, metric, predict_threads);
      nlohmann::json j = {{"schema_version", ksvm::BenchReport::kSchemaVersion},
                          {"n_test", eval.n_test},
                          {"error_pct", eval.error_pct},
                          {"one_minus_auc_pct", eval.one_minus_auc_pct ? nlohmann::json(*eval.one_minus_auc_pct)
                                                                       : nlohmann::json(nullptr)}};
      if (predictions_file) {
        const ksvm::Dataset scaled = file.scaling ? ksvm::apply_scale(test, *file.scaling) : test;
        const std::vector<int> labels = file.model.predict_all(scaled.features(), predict_threads);
        std::ostringstream lines;
        const bool binary = file.model.pairs.size() == 1;
        const ksvm::Vector scores =
            binary ? ksvm::binary_scores(file.model, scaled.features(), predict_threads) : ksvm::Vector();
        for (std::size_t i = 0; i < labels.size(); ++i) {
          lines << labels[i];
          if (binary) {
            nlohmann::json value = scores(static_cast<ksvm::Index>(i));
            lines << ' ' << value.dump();
          }
          lines << '\n';
        }
        predictions_file->write(lines.str());
      }
      if (report_file) report_file->write(j.dump(1) + "\n");
      if (predictions_file) predictions_file->commit();
      if (report_file) report_file->commit();
      std::cout << j.dump() << '\n';
    } else if (*bench) {
      ksvm::BenchRequest request;
      request.train_path = bench_train;
      request.test_path = bench_test;
      request.dimension = dimension(bench_flags);
      for (const std::string& name : split(bench_solvers, ',')) {
        try {
          request.solvers.push_back(ksvm::solver_from_string(name));
        } catch (const ksvm::ArgumentError& e) {
          throw ksvm::UsageError(e.what());
        }
      }
      request.options = make_options(bench_flags);
      request.repeats = repeats;
      request.scale = bench_flags.scale;
      request.threads = bench_flags.threads;
      request.metric = ksvm::metric_from_string(bench_metric);

      std::optional<PendingFile> report_file, csv_file;
      if (!bench_report.empty()) report_file.emplace(bench_report);
      if (!bench_csv.empty()) csv_file.emplace(bench_csv);

      const ksvm::BenchOutcome outcome = ksvm::run_bench(request);
      std::string csv = ksvm::csv_header() + "\n";
      for (const ksvm::BenchReport& r : outcome.runs) csv += ksvm::to_csv_row(r) + "\n";
      if (report_file) report_file->write(ksvm::to_json(outcome).dump(1) + "\n");
      if (csv_file) csv_file->write(csv);
      if (report_file) report_file->commit();
      if (csv_file) csv_file->commit();
      std::cout << csv;
      for (const ksvm::BenchAggregate& a : outcome.aggregates) std::cout << ksvm::to_json(a).dump() << '\n';
    }
  } catch (const ksvm::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ksvm::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ksvm::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return 0;
}
