#pragma once

#include <limits>
#include <string>
#include <vector>

#include "unemo/model.hpp"

namespace unemo {

enum class Supervision { APrime, ADoublePrime, Both };

Supervision parse_supervision(const std::string& s);
std::string supervision_name(Supervision s);

struct TrainConfig {
  double lambda = 0.2;       // behavioral-cloning weight
  double beta = 0.5;         // KL weight inside the CVAE loss
  double aux_weight = 1.0;   // state-prediction loss weight
  double lr = 1e-3;
  int phases = 4;
  int batches_per_phase = 2500;
  double mwm_active_fraction = 0.10;
  Supervision supervision = Supervision::ADoublePrime;
  PredictorVariant variant = PredictorVariant::Mwm;
  bool feedback = true;
  std::uint64_t seed = 0;
  int step_cap = 15;
  bool mwm_reinit = false;   // re-initialize (vs fine-tune) at phase starts
  int mwm_retrain_steps = 8000;
  double success_threshold = 3.0;
  int val_episodes = 100;
};

enum class RolloutMode { TeacherForcing, OnPolicy };
enum class StopReason { StopAction, StepCap };

struct StepRecord {
  int node = -1;  // where the decision was taken
  CandidateSet candidates;
  Tensor embeddings;  // V_t
  Tensor logits1, logits2;
  int a_prime = -1, a_dprime = -1;
  int lookahead = CandidateSet::kStop;
  Feature lookahead_basis;  // empty when the lookahead is STOP
  std::vector<double> cand_known_dist;  // known-map geodesics (on-policy only)
  int label = -1;  // supervision target as a candidate index
  bool dagger_fallback = false;
  Matrix next_pooled;  // pooled V_{t+1}, 0x0 when unavailable
};

struct TrajectoryRecord {
  const World* world = nullptr;
  Episode episode;
  std::vector<int> visited;  // starts at episode.start
  std::vector<StepRecord> steps;
  StopReason stop_reason = StopReason::StopAction;
  double traveled = 0.0;  // plane units
};

// Teacher forcing walks the expert path and records the policy's logits with
// expert labels (STOP at the goal). On-policy executes the fine-stage argmax,
// walking known-map geodesics to non-adjacent candidates, until STOP or the
// step cap.
TrajectoryRecord rollout(const World& world, const Episode& episode,
                         const ParamStore& params, RolloutMode mode,
                         const ModelDims& dims, const TrainConfig& config,
                         Rng& rng);

// Mean per-step cross-entropy between the supervised logits and the labels.
Tensor bc_loss(const TrajectoryRecord& traj, Supervision supervision);

// Shortest-path pseudo-labels written into traj.steps[].label: per step the
// candidate minimizing known-map distance plus full-graph geodesic to the
// goal; STOP once the current node is within the success threshold.
std::vector<int> dagger_labels(const World& world, TrajectoryRecord& traj,
                               double success_threshold);

struct ScheduleFlags {
  bool mwm_loss_active = false;
  bool mwm_retrain_due = false;
};

ScheduleFlags phased_schedule(int phase, int batch, const TrainConfig& config);

struct LossBreakdown {
  double l_bc = 0, l_dag = 0, l_aux = 0, total = 0;
};

LossBreakdown total_loss(double bc, double dag, double aux,
                         const TrainConfig& config, bool aux_active);

// Variant-specific state-prediction loss averaged over the trajectory's
// non-STOP lookahead steps.
Tensor auxiliary_loss(const TrajectoryRecord& traj, const World& world,
                      const ParamStore& params, const ParamStore& ae_params,
                      const ModelDims& dims, const TrainConfig& config,
                      Rng& rng);

struct LogRow {
  int phase = 0, batch = 0;
  double l_bc = 0, l_dag = 0, l_aux = 0, total = 0;
  double val_sr = std::numeric_limits<double>::quiet_NaN();  // NaN = not measured
};

struct TrainResult {
  ParamStore params;
  std::vector<LogRow> log;
};

// Per batch: one teacher-forced episode (BC + auxiliary per schedule) plus
// one on-policy episode with pseudo-labels, one Adam step. Validation SR is
// measured at the end of each phase. Deterministic per config seed.
TrainResult train(const std::vector<WorldFile>& train_worlds,
                  const std::vector<WorldFile>& val_worlds,
                  const ParamStore& ae_params, const ModelDims& dims,
                  const TrainConfig& config);

// Success rate of greedy on-policy rollouts over up to max_episodes episodes.
double policy_success_rate(const std::vector<WorldFile>& worlds,
                           const ParamStore& params, const ModelDims& dims,
                           const TrainConfig& config, int max_episodes,
                           std::uint64_t seed);

}  // namespace unemo
