#pragma once

#include "unemo/checkpoint.hpp"
#include "unemo/config.hpp"
#include "unemo/gradcheck.hpp"
#include "unemo/metrics.hpp"

namespace unemo {

// Writes <dir>/train_NNNN.world and <dir>/val_NNNN.world, deterministic per
// the config's world seed.
void generate_corpus(const RunConfig& cfg, const std::string& out_dir,
                     int train_count, int val_count);

// Loads every "<split>_*.world" file under dir in filename order.
std::vector<WorldFile> load_corpus(const std::string& dir,
                                   const std::string& split);

// Trains the visual-state compressor on every view of the corpus.
ParamStore pretrain_autoencoder(const RunConfig& cfg,
                                const std::vector<WorldFile>& corpus,
                                AeTrainLog* log = nullptr);

std::string training_log_csv(const std::vector<LogRow>& log);

// One row per episode plus an aggregate row; the world-model quality columns
// are only populated on the aggregate row.
std::string metrics_csv(const MetricsReport& rep, const std::string& split,
                        std::uint64_t seed, const std::string& variant,
                        const std::string& supervision, double mwm_cos,
                        double mwm_mse);

// Greedy on-policy evaluation; with oracle=true the expert path is replayed
// instead of consulting the policy.
MetricsReport evaluate_policy(const std::vector<WorldFile>& worlds,
                              const ParamStore& params, const ModelDims& dims,
                              const TrainConfig& config, bool oracle,
                              int max_episodes, std::uint64_t seed);

// Deterministic-mode state predictions against compressed ground truth along
// expert paths (CVAE variants only).
PredictionStats world_model_stats(const std::vector<WorldFile>& worlds,
                                  const ParamStore& params,
                                  const ParamStore& ae_params,
                                  const ModelDims& dims,
                                  const TrainConfig& config, int max_episodes,
                                  std::uint64_t seed);

struct GradcheckEntry {
  std::string module;
  GradCheckReport report;
};

// Finite-difference sweep over every parameterized module on a small fixture
// map; sabotage=true adds a deliberately broken gradient as a negative
// control.
std::vector<GradcheckEntry> gradcheck_suite(bool sabotage = false);

struct AblationRow {
  std::string group;  // "variant" or "supervision"
  std::string cell;
  std::uint64_t seed = 0;
  double tl = 0, ne = 0, osr = 0, sr = 0, spl = 0;
  bool failed = false;
};

// Variant cells {mwm, viswm, cond2vis, topostate} and supervision cells
// {aprime, adprime, both, mwmonly}, each trained over `seeds` seeds and
// scored on the validation split. Failed cells are marked, not fatal.
std::vector<AblationRow> run_ablation(const RunConfig& base,
                                      const std::vector<WorldFile>& train_set,
                                      const std::vector<WorldFile>& val_set,
                                      const ParamStore& ae_params, int seeds);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace unemo
