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

#include <iostream>

#include "CLI11.hpp"
#include "fairmod/commands.hpp"

namespace {

using namespace fairmod::cli;

void AddAlpha(CLI::App* cmd, double& alpha) {
  cmd->add_option("--alpha", alpha, "discrimination limit")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void AddObjective(CLI::App* cmd, std::string& objective) {
  cmd->add_option("--objective", objective, "objective variant")
      ->check(CLI::IsMember({"norm", "errc", "chg"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairmod: discrimination-aware post-processing of binary predictions"};
  app.require_subcommand(1);

  AuditOptions audit;
  auto* audit_cmd = app.add_subcommand("audit", "score the actual outcome column");
  audit_cmd->add_option("data", audit.data, "data CSV")->required();
  audit_cmd->add_option("schema", audit.schema, "schema JSON")->required();
  AddAlpha(audit_cmd, audit.alpha);
  audit_cmd->add_option("--out", audit.out, "write the JSON report here");
  audit_cmd->add_flag("--oracle", audit.oracle,
                      "cross-check scores against brute-force filtering (slow)");

  TrainClassifierOptions train;
  auto* train_cmd =
      app.add_subcommand("train-classifier", "fit the baseline logistic classifier");
  train_cmd->add_option("data", train.data, "data CSV")->required();
  train_cmd->add_option("schema", train.schema, "schema JSON")->required();
  train_cmd->add_option("--seed", train.seed, "initialisation seed");
  train_cmd->add_option("--out", train.out, "classifier JSON")->required();

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "write dhat predictions");
  predict_cmd->add_option("data", predict.data, "data CSV")->required();
  predict_cmd->add_option("schema", predict.schema, "schema JSON")->required();
  predict_cmd->add_option("classifier", predict.classifier, "classifier JSON")->required();
  predict_cmd->add_option("--out", predict.out, "predictions CSV")->required();

  BuildModelOptions build;
  auto* build_cmd = app.add_subcommand("build-model", "solve the per-group flip plans");
  build_cmd->add_option("data", build.data, "data CSV")->required();
  build_cmd->add_option("predictions", build.predictions, "dhat CSV")->required();
  build_cmd->add_option("schema", build.schema, "schema JSON")->required();
  AddAlpha(build_cmd, build.alpha);
  AddObjective(build_cmd, build.objective);
  build_cmd->add_option("--seed", build.seed, "seed");
  build_cmd->add_option("--min-group-size", build.min_group_size,
                        "leave smaller groups unadjusted");
  build_cmd->add_option("--out", build.out, "model JSON")->required();

  AdjustOptions adjust;
  auto* adjust_cmd = app.add_subcommand("adjust", "apply a model to predictions");
  adjust_cmd->add_option("data", adjust.data, "data CSV")->required();
  adjust_cmd->add_option("predictions", adjust.predictions, "dhat CSV")->required();
  adjust_cmd->add_option("model", adjust.model, "model JSON")->required();
  adjust_cmd->add_option("schema", adjust.schema, "schema JSON")->required();
  adjust_cmd->add_option("--seed", adjust.seed, "seed of the per-row streams");
  adjust_cmd->add_option("--out", adjust.out, "dfinal CSV")->required();

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Ori/Prd/Adj report");
  evaluate_cmd->add_option("data", evaluate.data, "data CSV")->required();
  evaluate_cmd->add_option("predictions", evaluate.predictions, "dhat CSV")->required();
  evaluate_cmd->add_option("adjusted", evaluate.adjusted, "dfinal CSV")->required();
  evaluate_cmd->add_option("schema", evaluate.schema, "schema JSON")->required();
  AddAlpha(evaluate_cmd, evaluate.alpha);
  evaluate_cmd->add_option("--out", evaluate.out, "write the JSON report here");

  PipelineOptions pipeline;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "train, predict, build, adjust and evaluate");
  pipeline_cmd->add_option("data", pipeline.data, "data CSV")->required();
  pipeline_cmd->add_option("schema", pipeline.schema, "schema JSON")->required();
  AddAlpha(pipeline_cmd, pipeline.alpha);
  AddObjective(pipeline_cmd, pipeline.objective);
  pipeline_cmd->add_option("--seed", pipeline.seed, "seed");
  pipeline_cmd->add_option("--min-group-size", pipeline.min_group_size,
                           "leave smaller groups unadjusted");
  pipeline_cmd->add_option("--outdir", pipeline.outdir, "artifact directory")->required();

  SynthOptions synth;
  auto* synth_cmd =
      app.add_subcommand("synth-german", "generate synthetic credit-style data");
  synth_cmd->add_option("rows", synth.rows, "row count")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "seed");
  synth_cmd->add_option("--outdir", synth.outdir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*audit_cmd) return RunAudit(audit, std::cout, std::cerr);
  if (*train_cmd) return RunTrainClassifier(train, std::cout, std::cerr);
  if (*predict_cmd) return RunPredict(predict, std::cout, std::cerr);
  if (*build_cmd) return RunBuildModel(build, std::cout, std::cerr);
  if (*adjust_cmd) return RunAdjust(adjust, std::cout, std::cerr);
  if (*evaluate_cmd) return RunEvaluate(evaluate, std::cout, std::cerr);
  if (*pipeline_cmd) return RunPipeline(pipeline, std::cout, std::cerr);
  if (*synth_cmd) return RunSynthGerman(synth, std::cout, std::cerr);
  return kExitUsage;
}
