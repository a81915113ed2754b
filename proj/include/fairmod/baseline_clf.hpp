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

// Small logistic-regression classifier over binary features, trained by
// full-batch gradient descent. It exists so the post-processing pipeline can
// run end to end; any external classifier can replace it by writing a
// predictions file.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairmod/error.hpp"
#include "fairmod/random.hpp"
#include "fairmod/tabular.hpp"
#include "json.hpp"

namespace fairmod {

struct LinearModel {
  std::vector<std::string> features;
  std::vector<double> weights;  // one per feature, then the bias
  double threshold = 0.5;
  bool constant_fit = false;

  double bias() const { return weights.back(); }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct TrainOptions {
  int epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

struct TrainReport {
  LinearModel model;
  std::vector<double> loss_history;  // loss after each epoch, index 0 = start
};

// Row-major features with an implicit trailing 1 for the bias.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t f) const { return values[r * features + f]; }
};

inline DesignMatrix BuildDesignMatrix(const BinaryDataset& dataset,
                                      const std::vector<std::string>& features) {
  DesignMatrix x;
  x.rows = dataset.num_rows();
  x.features = features.size();
  std::vector<std::size_t> cols;
  for (const auto& name : features) cols.push_back(dataset.ColumnIndex(name));
  x.values.reserve(x.rows * x.features);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c : cols) x.values.push_back(dataset.at(r, c));
  }
  return x;
}

namespace internal {

inline double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double Margin(std::span<const double> weights, const DesignMatrix& x,
                     std::size_t r) {
  double z = weights[x.features];
  for (std::size_t f = 0; f < x.features; ++f) z += weights[f] * x.at(r, f);
  return z;
}

}  // namespace internal

// Mean cross-entropy.
inline double LogisticLoss(std::span<const double> weights, const DesignMatrix& x,
                           std::span<const Bit> labels) {
  if (x.rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double z = internal::Margin(weights, x, r);
    total += internal::Softplus(z) - (labels[r] ? z : 0.0);
  }
  return total / static_cast<double>(x.rows);
}

inline std::vector<double> LogisticGradient(std::span<const double> weights,
                                            const DesignMatrix& x,
                                            std::span<const Bit> labels) {
  std::vector<double> grad(x.features + 1, 0.0);
  if (x.rows == 0) return grad;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double residual =
        internal::Sigmoid(internal::Margin(weights, x, r)) - labels[r];
    for (std::size_t f = 0; f < x.features; ++f) grad[f] += residual * x.at(r, f);
    grad[x.features] += residual;
  }
  for (auto& g : grad) g /= static_cast<double>(x.rows);
  return grad;
}

// Features default to every column except the outcome.
inline std::vector<std::string> DefaultFeatures(const BinaryDataset& dataset) {
  std::vector<std::string> features;
  for (const auto& name : dataset.columns()) {
    if (name != dataset.schema().outcome) features.push_back(name);
  }
  return features;
}

// Gradient descent with step halving, so the training loss never increases
// from one epoch to the next.
inline TrainReport TrainLinearModel(const BinaryDataset& dataset,
                                    const std::vector<std::string>& features,
                                    const std::string& outcome_col,
                                    const TrainOptions& options) {
  if (dataset.num_rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "cannot train on an empty dataset");
  }
  if (options.epochs < 1) {
    throw Error(ErrorKind::kInvalidArgument, "epochs must be at least 1");
  }
  if (std::find(features.begin(), features.end(), outcome_col) != features.end()) {
    throw Error(ErrorKind::kInvalidArgument, "outcome column used as a feature");
  }
  const DesignMatrix x = BuildDesignMatrix(dataset, features);
  const BitVector y = dataset.Column(outcome_col);

  TrainReport report;
  LinearModel& model = report.model;
  model.features = features;
  model.weights.assign(features.size() + 1, 0.0);

  const std::size_t positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0 || positives == y.size()) {
    // One class only: predict it everywhere.
    model.constant_fit = true;
    model.weights.back() = positives ? 20.0 : -20.0;
    report.loss_history.push_back(LogisticLoss(model.weights, x, y));
    return report;
  }

  CounterRng rng(options.seed);
  for (auto& w : model.weights) w = 0.02 * rng.NextUniform() - 0.01;

  double loss = LogisticLoss(model.weights, x, y);
  report.loss_history.push_back(loss);
  std::vector<double> candidate(model.weights.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto grad = LogisticGradient(model.weights, x, y);
    double step = options.learning_rate;
    double next = loss;
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t k = 0; k < candidate.size(); ++k) {
        candidate[k] = model.weights[k] - step * grad[k];
      }
      next = LogisticLoss(candidate, x, y);
      if (next <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      model.weights = candidate;
      loss = next;
    }
    report.loss_history.push_back(loss);
  }
  return report;
}

inline BitVector PredictLinear(const LinearModel& model, const BinaryDataset& dataset) {
  std::vector<std::size_t> cols;
  for (const auto& name : model.features) {
    if (!dataset.HasColumn(name)) {
      throw Error(ErrorKind::kMissingColumn,
                  "classifier feature '" + name + "' is not in the data");
    }
    cols.push_back(dataset.ColumnIndex(name));
  }
  BitVector out(dataset.num_rows());
  for (std::size_t r = 0; r < out.size(); ++r) {
    double z = model.bias();
    for (std::size_t f = 0; f < cols.size(); ++f) z += model.weights[f] * dataset.at(r, cols[f]);
    out[r] = internal::Sigmoid(z) >= model.threshold ? 1 : 0;
  }
  return out;
}

inline constexpr int kClassifierFormatVersion = 1;

inline std::string SaveLinearModel(const LinearModel& model) {
  nlohmann::ordered_json doc;
  doc["version"] = kClassifierFormatVersion;
  doc["kind"] = "logistic";
  doc["features"] = model.features;
  doc["weights"] = std::vector<double>(model.weights.begin(), model.weights.end() - 1);
  doc["bias"] = model.bias();
  doc["threshold"] = model.threshold;
  doc["constant_fit"] = model.constant_fit;
  return doc.dump(1) + "\n";
}

inline LinearModel LoadLinearModel(std::string_view text) {
  LinearModel model;
  try {
    const auto doc = nlohmann::json::parse(text);
    const int version = doc.at("version").get<int>();
    if (version != kClassifierFormatVersion) {
      throw Error(ErrorKind::kVersionMismatch,
                  "classifier version " + std::to_string(version));
    }
    model.features = doc.at("features").get<std::vector<std::string>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    if (model.weights.size() != model.features.size()) {
      throw Error(ErrorKind::kMalformedInput, "weight count differs from feature count");
    }
    model.weights.push_back(doc.at("bias").get<double>());
    model.threshold = doc.at("threshold").get<double>();
    model.constant_fit = doc.value("constant_fit", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedInput, std::string("classifier: ") + e.what());
  }
  if (!(model.threshold > 0.0 && model.threshold < 1.0)) {
    throw Error(ErrorKind::kMalformedInput, "threshold must lie in (0, 1)");
  }
  return model;
}

}  // namespace fairmod
