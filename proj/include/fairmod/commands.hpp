/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// File-level commands behind the `fairmod` executable. Each command reads
// its inputs from disk, writes its artifacts, prints a short summary and
// returns the process exit code:
//
//   0  success / data is discrimination-safe
//   1  usage, schema or i/o error
//   2  solver failure
//   3  audit found discrimination

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fairmod/adjuster.hpp"
#include "fairmod/baseline_clf.hpp"
#include "fairmod/error.hpp"
#include "fairmod/metrics.hpp"
#include "fairmod/oracle.hpp"
#include "fairmod/synthetic.hpp"
#include "fairmod/tabular.hpp"
#include "json.hpp"

namespace fairmod::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitSolver = 2,
  kExitDiscriminatory = 3,
};

inline constexpr const char* kPredictionHeader = "dhat";
inline constexpr const char* kAdjustedHeader = "dfinal";

struct AuditOptions {
  std::string data;
  std::string schema;
  double alpha = 0.05;
  std::string out;  // report path; empty = stdout only
  bool oracle = false;
};

struct TrainClassifierOptions {
  std::string data;
  std::string schema;
  std::string out;
  int epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool exclude_protected = false;
};

struct PredictOptions {
  std::string data;
  std::string schema;
  std::string classifier;
  std::string out;
};

struct BuildModelOptions {
  std::string data;
  std::string predictions;
  std::string schema;
  double alpha = 0.05;
  std::string objective = "norm";
  std::uint64_t seed = 0;
  std::size_t min_group_size = 0;
  std::string out;
};

struct AdjustOptions {
  std::string data;
  std::string predictions;
  std::string model;
  std::string schema;
  std::uint64_t seed = 0;
  std::string out;
};

struct EvaluateOptions {
  std::string data;
  std::string predictions;
  std::string adjusted;
  std::string schema;
  double alpha = 0.05;
  std::string out;
};

struct PipelineOptions {
  std::string data;
  std::string schema;
  double alpha = 0.05;
  std::string objective = "norm";
  std::uint64_t seed = 0;
  std::size_t min_group_size = 0;
  std::string outdir;
  int epochs = 500;
  double learning_rate = 0.5;
};

struct SynthOptions {
  std::size_t rows = 1000;
  std::uint64_t seed = 0;
  std::string outdir;
};

namespace internal {

inline BinaryDataset LoadData(const std::string& data_path,
                              const std::string& schema_path) {
  const Schema schema = Schema::Parse(ReadTextFile(schema_path));
  return LoadDataset(ReadTextFile(data_path), schema);
}

inline BitVector LoadBits(const std::string& path, const char* header,
                          std::size_t expected_rows) {
  BitVector bits = ParseBitColumn(ReadTextFile(path), header);
  if (bits.size() != expected_rows) {
    throw Error(ErrorKind::kLengthMismatch,
                "'" + path + "' has " + std::to_string(bits.size()) +
                    " rows, data has " + std::to_string(expected_rows));
  }
  return bits;
}

inline void CheckAlpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "--alpha must lie in [0, 1]");
  }
}

inline std::string Fixed(double value, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << value;
  return out.str();
}

inline void PrintReportRow(std::ostream& out, const std::string& label,
                           const nlohmann::json& row) {
  out << std::left << std::setw(4) << label;
  for (const char* key : {"glbds", "ogds", "og_pct", "wgds", "wg_pct", "bcr", "err", "ces"}) {
    out << ' ' << std::setw(8)
        << (row.contains(key) ? Fixed(row.at(key).get<double>()) : std::string("-"));
  }
  out << '\n';
}

inline void PrintReportHeader(std::ostream& out) {
  out << std::left << std::setw(4) << "";
  for (const char* key : {"glbds", "ogds", "og%", "wgds", "wg%", "BCR", "Err", "ces"}) {
    out << ' ' << std::setw(8) << key;
  }
  out << '\n';
}

// Runs `body`, mapping failures to exit codes and messages on `err`.
inline int Guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "fairmod: " << e.what() << '\n';
    return e.kind() == ErrorKind::kSolverFailure ? kExitSolver : kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "fairmod: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "fairmod: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline nlohmann::json EvaluationReport(const BinaryDataset& dataset,
                                       std::span<const Bit> predictions,
                                       std::span<const Bit> adjusted, double alpha) {
  const auto groups = Stratify(dataset);
  const BitVector actual = dataset.Outcome();
  nlohmann::ordered_json doc;
  const auto ori = BuildDiscriminationReport(dataset, groups, actual, alpha);
  const auto prd = BuildDiscriminationReport(dataset, groups, predictions, alpha);
  const auto adj = BuildDiscriminationReport(dataset, groups, adjusted, alpha);
  doc["Ori"] = ReportToJson(ori, std::nullopt);
  doc["Prd"] = ReportToJson(prd, ComputeAccuracyReport(actual, predictions, prd));
  doc["Adj"] = ReportToJson(adj, ComputeAccuracyReport(actual, adjusted, adj));
  return doc;
}

inline std::string Dump(const nlohmann::json& doc) { return doc.dump(1) + "\n"; }
inline std::string Dump(const nlohmann::ordered_json& doc) { return doc.dump(1) + "\n"; }

}  // namespace internal

inline int RunAudit(const AuditOptions& options, std::ostream& out, std::ostream& err) {
  return internal::Guarded(err, [&] {
    internal::CheckAlpha(options.alpha);
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    const auto groups = Stratify(dataset);
    const BitVector actual = dataset.Outcome();
    const auto report = BuildDiscriminationReport(dataset, groups, actual, options.alpha);
    const auto labels = ClassifyDiscrimination(report, options.alpha);

    if (options.oracle) {
      const auto reference = oracle::BruteForceScores(dataset);
      if (reference.size() != report.per_group.size()) {
        throw Error(ErrorKind::kInvalidArgument, "oracle disagrees on the stratum count");
      }
      for (std::size_t k = 0; k < reference.size(); ++k) {
        if (std::abs(reference[k].score - report.per_group[k].score) > 1e-12) {
          throw Error(ErrorKind::kInvalidArgument,
                      "oracle disagrees on the score of stratum " + std::to_string(k));
        }
      }
      out << "oracle: " << reference.size() << " stratum scores agree\n";
    }

    const nlohmann::json row = ReportToJson(report, std::nullopt);
    if (!options.out.empty()) WriteTextFile(options.out, internal::Dump(row));

    internal::PrintReportHeader(out);
    internal::PrintReportRow(out, "Ori", row);
    for (const auto& name : report.protected_order) {
      out << "  " << name << ": " << internal::Fixed(report.per_protected_global.at(name))
          << (labels.globally_discriminated.at(name) ? "  globally discriminated" : "")
          << '\n';
    }
    std::size_t flagged = 0;
    for (bool f : labels.group_discriminated) flagged += f;
    out << "  group-discriminated (group, attribute) pairs: " << flagged << " of "
        << labels.group_discriminated.size() << '\n';
    out << "  verdict: "
        << (labels.free ? "discrimination-free"
                        : labels.safe ? "discrimination-safe" : "discriminatory")
        << " at alpha=" << options.alpha << '\n';
    return labels.discriminatory ? kExitDiscriminatory : kExitOk;
  });
}

inline int RunTrainClassifier(const TrainClassifierOptions& options, std::ostream& out,
                              std::ostream& err) {
  return internal::Guarded(err, [&] {
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    std::vector<std::string> features = DefaultFeatures(dataset);
    if (options.exclude_protected) {
      const auto& prot = dataset.schema().protected_attrs;
      std::erase_if(features, [&](const std::string& name) {
        return std::find(prot.begin(), prot.end(), name) != prot.end();
      });
    }
    TrainOptions train;
    train.epochs = options.epochs;
    train.learning_rate = options.learning_rate;
    train.seed = options.seed;
    const auto report =
        TrainLinearModel(dataset, features, dataset.schema().outcome, train);
    if (report.model.constant_fit) {
      err << "fairmod: warning: outcome has a single class, fitted a constant\n";
    }
    WriteTextFile(options.out, SaveLinearModel(report.model));
    out << "trained on " << dataset.num_rows() << " rows, " << features.size()
        << " features, final loss " << internal::Fixed(report.loss_history.back(), 6)
        << '\n';
    return kExitOk;
  });
}

inline int RunPredict(const PredictOptions& options, std::ostream& out, std::ostream& err) {
  return internal::Guarded(err, [&] {
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    const LinearModel model = LoadLinearModel(ReadTextFile(options.classifier));
    const BitVector predictions = PredictLinear(model, dataset);
    WriteTextFile(options.out, BitColumnToCsv(kPredictionHeader, predictions));
    out << "wrote " << predictions.size() << " predictions\n";
    return kExitOk;
  });
}

inline int RunBuildModel(const BuildModelOptions& options, std::ostream& out,
                         std::ostream& err) {
  return internal::Guarded(err, [&] {
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    const BitVector predictions =
        internal::LoadBits(options.predictions, kPredictionHeader, dataset.num_rows());
    AdjustParams params;
    params.alpha = options.alpha;
    params.variant = ParseObjectiveVariant(options.objective);
    params.seed = options.seed;
    params.min_group_size = options.min_group_size;
    const FairModel model = BuildModel(dataset, predictions, params);
    WriteTextFile(options.out, SaveModel(model));

    const auto& protected_attrs = dataset.schema().protected_attrs;
    for (const auto& [bits, group] : model.groups) {
      const auto& diag = group.diagnostics;
      out << DescribeSignature(model.explanatory, bits) << " size=" << diag.size
          << " status=" << diag.status;
      for (std::size_t p = 0; p < protected_attrs.size(); ++p) {
        out << ' ' << protected_attrs[p] << '=' << internal::Fixed(diag.scores_before[p])
            << "->" << internal::Fixed(diag.expected_scores[p]);
      }
      out << '\n';
    }
    out << "model with " << model.groups.size() << " groups written to " << options.out
        << '\n';
    return kExitOk;
  });
}

inline int RunAdjust(const AdjustOptions& options, std::ostream& out, std::ostream& err) {
  return internal::Guarded(err, [&] {
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    const BitVector predictions =
        internal::LoadBits(options.predictions, kPredictionHeader, dataset.num_rows());
    const FairModel model = LoadModel(ReadTextFile(options.model));
    const AdjustResult result = AdjustBatch(model, dataset, predictions, options.seed);
    WriteTextFile(options.out, BitColumnToCsv(kAdjustedHeader, result.adjusted));
    out << nlohmann::ordered_json{{"flips", result.counters.flips},
                                  {"pass_throughs", result.counters.pass_throughs},
                                  {"rows", result.counters.rows}}
               .dump()
        << '\n';
    return kExitOk;
  });
}

inline int RunEvaluate(const EvaluateOptions& options, std::ostream& out,
                       std::ostream& err) {
  return internal::Guarded(err, [&] {
    internal::CheckAlpha(options.alpha);
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);
    const BitVector predictions =
        internal::LoadBits(options.predictions, kPredictionHeader, dataset.num_rows());
    const BitVector adjusted =
        internal::LoadBits(options.adjusted, kAdjustedHeader, dataset.num_rows());
    const auto doc = internal::EvaluationReport(dataset, predictions, adjusted, options.alpha);
    if (!options.out.empty()) {
      WriteTextFile(options.out, internal::Dump(doc));
    } else {
      out << internal::Dump(doc);
    }
    internal::PrintReportHeader(out);
    for (const char* label : {"Ori", "Prd", "Adj"}) {
      internal::PrintReportRow(out, label, doc.at(label));
    }
    return kExitOk;
  });
}

inline int RunPipeline(const PipelineOptions& options, std::ostream& out,
                       std::ostream& err) {
  return internal::Guarded(err, [&] {
    internal::CheckAlpha(options.alpha);
    namespace fs = std::filesystem;
    fs::create_directories(options.outdir);
    const fs::path dir(options.outdir);
    const BinaryDataset dataset = internal::LoadData(options.data, options.schema);

    TrainOptions train;
    train.epochs = options.epochs;
    train.learning_rate = options.learning_rate;
    train.seed = options.seed;
    const auto trained = TrainLinearModel(dataset, DefaultFeatures(dataset),
                                          dataset.schema().outcome, train);
    WriteTextFile((dir / "classifier.json").string(), SaveLinearModel(trained.model));
    const BitVector predictions = PredictLinear(trained.model, dataset);
    WriteTextFile((dir / "predictions.csv").string(),
                  BitColumnToCsv(kPredictionHeader, predictions));

    AdjustParams params;
    params.alpha = options.alpha;
    params.variant = ParseObjectiveVariant(options.objective);
    params.seed = options.seed;
    params.min_group_size = options.min_group_size;
    const FairModel model = BuildModel(dataset, predictions, params);
    WriteTextFile((dir / "model.json").string(), SaveModel(model));

    const AdjustResult adjusted = AdjustBatch(model, dataset, predictions, options.seed);
    WriteTextFile((dir / "adjusted.csv").string(),
                  BitColumnToCsv(kAdjustedHeader, adjusted.adjusted));

    const auto doc =
        internal::EvaluationReport(dataset, predictions, adjusted.adjusted, options.alpha);
    WriteTextFile((dir / "report.json").string(), internal::Dump(doc));

    internal::PrintReportHeader(out);
    for (const char* label : {"Ori", "Prd", "Adj"}) {
      internal::PrintReportRow(out, label, doc.at(label));
    }
    out << "flips=" << adjusted.counters.flips
        << " pass_throughs=" << adjusted.counters.pass_throughs
        << " rows=" << adjusted.counters.rows << '\n';
    return kExitOk;
  });
}

// Writes data.csv and schema.json for the synthetic credit data.
inline int RunSynthGerman(const SynthOptions& options, std::ostream& out,
                          std::ostream& err) {
  return internal::Guarded(err, [&] {
    namespace fs = std::filesystem;
    fs::create_directories(options.outdir);
    const fs::path dir(options.outdir);
    const auto dataset = synthetic::GenerateGermanCreditLike(options.rows, options.seed);
    WriteTextFile((dir / "data.csv").string(), DatasetToCsv(dataset));
    WriteTextFile((dir / "schema.json").string(),
                  dataset.schema().ToJson().dump(1) + "\n");
    out << "wrote " << dataset.num_rows() << " rows to " << dir.string() << '\n';
    return kExitOk;
  });
}

}  // namespace fairmod::cli
