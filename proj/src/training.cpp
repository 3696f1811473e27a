#include "unemo/training.hpp"

#include <cmath>

namespace unemo {

Supervision parse_supervision(const std::string& s) {
  if (s == "aprime") return Supervision::APrime;
  if (s == "adprime") return Supervision::ADoublePrime;
  if (s == "both") return Supervision::Both;
  throw ConfigError("unknown supervision mode: " + s);
}

std::string supervision_name(Supervision s) {
  switch (s) {
    case Supervision::APrime: return "aprime";
    case Supervision::ADoublePrime: return "adprime";
    case Supervision::Both: return "both";
  }
  throw ConfigError("bad supervision tag");
}

namespace {

StepConfig step_config(const TrainConfig& config, const ModelDims& dims) {
  StepConfig c;
  c.feedback_off = !config.feedback;
  c.feedback_layers = dims.feedback_layers;
  c.variant = config.variant;
  return c;
}

StepRecord record_decision(const StepDecision& d, int node) {
  StepRecord r;
  r.node = node;
  r.candidates = d.candidates;
  r.embeddings = d.embeddings;
  r.logits1 = d.logits1;
  r.logits2 = d.logits2;
  r.a_prime = d.a_prime;
  r.a_dprime = d.a_dprime;
  r.lookahead = d.lookahead;
  return r;
}

}  // namespace

TrajectoryRecord rollout(const World& world, const Episode& episode,
                         const ParamStore& params, RolloutMode mode,
                         const ModelDims& dims, const TrainConfig& config,
                         Rng& rng) {
  TrajectoryRecord traj;
  traj.world = &world;
  traj.episode = episode;

  TopoMap map;
  int current = episode.start;
  map.update(current, observe(world, current, rng));
  traj.visited.push_back(current);
  Tensor instr = encode_instruction(episode.instruction, params);
  const StepConfig scfg = step_config(config, dims);

  if (mode == RolloutMode::TeacherForcing) {
    if (episode.expert_path.empty() || episode.expert_path.front() != episode.start)
      throw ContractError("episode expert path does not start at the start node");
    const auto& path = episode.expert_path;
    for (std::size_t t = 0; t < path.size(); ++t) {
      StepDecision d = step_policy(map, instr, params, dims.mwm, scfg);
      StepRecord r = record_decision(d, path[t]);
      if (r.lookahead != CandidateSet::kStop)
        r.lookahead_basis = node_basis(map, r.lookahead);
      const int target =
          t + 1 < path.size() ? path[t + 1] : CandidateSet::kStop;
      r.label = d.candidates.index_of(target);
      if (r.label < 0)
        throw TrainingError("expert target " + std::to_string(target) +
                            " missing from the candidate set");
      traj.steps.push_back(std::move(r));
      if (t + 1 < path.size()) {
        traj.traveled += world.edge_length(path[t], path[t + 1]);
        map.update(path[t + 1], observe(world, path[t + 1], rng));
        traj.visited.push_back(path[t + 1]);
      }
    }
    traj.stop_reason = StopReason::StopAction;
  } else {
    traj.stop_reason = StopReason::StepCap;
    for (int step = 0; step < config.step_cap; ++step) {
      StepDecision d = step_policy(map, instr, params, dims.mwm, scfg);
      StepRecord r = record_decision(d, current);
      if (r.lookahead != CandidateSet::kStop)
        r.lookahead_basis = node_basis(map, r.lookahead);
      r.cand_known_dist.reserve(d.candidates.entries.size());
      for (int c : d.candidates.entries)
        r.cand_known_dist.push_back(
            c == CandidateSet::kStop ? 0.0 : map.known_path(current, c).second);
      const int target = d.candidates.entries[d.a_dprime];
      traj.steps.push_back(std::move(r));
      if (target == CandidateSet::kStop) {
        traj.stop_reason = StopReason::StopAction;
        break;
      }
      auto [walk, len] = map.known_path(current, target);
      if (walk.empty())
        throw TrainingError("candidate " + std::to_string(target) +
                            " unreachable in the known map");
      for (std::size_t k = 1; k < walk.size(); ++k) {
        traj.traveled += world.edge_length(walk[k - 1], walk[k]);
        if (map.contains(walk[k]) &&
            map.record(walk[k]).status == NodeStatus::Visited)
          map.advance_to(walk[k]);
        else
          map.update(walk[k], observe(world, walk[k], rng));
        traj.visited.push_back(walk[k]);
      }
      current = target;
    }
  }

  // pooled-next-state targets for the map-state predictor
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t)
    traj.steps[t].next_pooled =
        traj.steps[t + 1].embeddings.value().colwise().mean();
  return traj;
}

Tensor bc_loss(const TrajectoryRecord& traj, Supervision supervision) {
  if (traj.steps.empty()) throw ContractError("loss over an empty trajectory");
  Tensor acc;
  for (const StepRecord& r : traj.steps) {
    if (r.label < 0)
      throw TrainingError("unlabeled step in supervised trajectory");
    Tensor term;
    switch (supervision) {
      case Supervision::APrime:
        term = cross_entropy_logits(r.logits1, r.label);
        break;
      case Supervision::ADoublePrime:
        term = cross_entropy_logits(r.logits2, r.label);
        break;
      case Supervision::Both:
        term = scale(add(cross_entropy_logits(r.logits1, r.label),
                         cross_entropy_logits(r.logits2, r.label)),
                     0.5);
        break;
    }
    acc = acc.empty() ? term : add(acc, term);
  }
  return scale(acc, 1.0 / static_cast<double>(traj.steps.size()));
}

std::vector<int> dagger_labels(const World& world, TrajectoryRecord& traj,
                               double success_threshold) {
  std::vector<int> labels;
  const Eigen::Vector2d goal_pos = world.position(traj.episode.goal);
  for (StepRecord& r : traj.steps) {
    if (r.cand_known_dist.size() != r.candidates.entries.size())
      throw ContractError("pseudo-labels need an on-policy trajectory");
    if ((world.position(r.node) - goal_pos).norm() <= success_threshold) {
      r.label = r.candidates.index_of(CandidateSet::kStop);
    } else {
      int best = -1;
      double best_total = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < r.candidates.entries.size(); ++i) {
        const int c = r.candidates.entries[i];
        if (c == CandidateSet::kStop || c == r.node) continue;
        double known = r.cand_known_dist[i];
        if (!std::isfinite(known)) {
          // fall back to the full-graph geodesic and flag the step
          known = shortest_path(world, r.node, c).second;
          r.dagger_fallback = true;
        }
        const double total = known + shortest_path(world, c, traj.episode.goal).second;
        if (total < best_total) {
          best_total = total;
          best = static_cast<int>(i);
        }
      }
      if (best < 0)
        throw TrainingError("no reachable pseudo-label candidate");
      r.label = best;
    }
    labels.push_back(r.label);
  }
  return labels;
}

ScheduleFlags phased_schedule(int phase, int batch, const TrainConfig& config) {
  if (batch < 0 || batch >= config.batches_per_phase)
    throw ContractError("batch index outside the phase");
  ScheduleFlags f;
  const int active_batches = static_cast<int>(
      std::ceil(config.mwm_active_fraction * config.batches_per_phase));
  f.mwm_loss_active = batch < active_batches;
  f.mwm_retrain_due = batch == 0 && phase > 0;
  return f;
}

LossBreakdown total_loss(double bc, double dag, double aux,
                         const TrainConfig& config, bool aux_active) {
  LossBreakdown b;
  b.l_bc = bc;
  b.l_dag = dag;
  b.l_aux = aux_active ? aux : 0.0;
  b.total = config.lambda * bc + dag + config.aux_weight * b.l_aux;
  if (!std::isfinite(b.total))
    throw TrainingError("non-finite loss breakdown");
  return b;
}

Tensor auxiliary_loss(const TrajectoryRecord& traj, const World& world,
                      const ParamStore& params, const ParamStore& ae_params,
                      const ModelDims& dims, const TrainConfig& config,
                      Rng& rng) {
  Tensor instr;
  if (config.variant == PredictorVariant::Mwm)
    instr = encode_instruction(traj.episode.instruction, params);
  Tensor acc;
  int terms = 0;
  for (const StepRecord& r : traj.steps) {
    Tensor term;
    if (config.variant == PredictorVariant::TopoState) {
      if (r.next_pooled.size() == 0) continue;
      term = mse(topostate_predict(r.embeddings, params),
                 Tensor::constant(r.next_pooled));
    } else {
      if (r.lookahead == CandidateSet::kStop) continue;
      if (config.variant == PredictorVariant::Cond2Vis) {
        auto [label, mask] = dense_label(world, r.lookahead, dims.mwm.v_max);
        term = masked_mse(dense_predict(r.embeddings, r.a_prime, params, dims.mwm),
                          Tensor::constant(label), mask);
      } else {
        Tensor e_j =
            encode_view(Tensor::constant(r.lookahead_basis), params);
        Tensor v_j = row(r.embeddings, r.a_prime);
        MWMOutput out =
            config.variant == PredictorVariant::VisWm
                ? viswm_predict(e_j, v_j, params, dims.mwm,
                                SampleMode::Stochastic, &rng)
                : mwm_predict(e_j, instr, v_j, params, dims.mwm,
                              SampleMode::Stochastic, &rng);
        Matrix label = node_state_label(world, r.lookahead, ae_params);
        term = mwm_loss(out, Tensor::constant(label), config.beta);
      }
    }
    acc = acc.empty() ? term : add(acc, term);
    ++terms;
  }
  if (terms == 0) return Tensor::constant(Matrix::Zero(1, 1));
  return scale(acc, 1.0 / terms);
}

namespace {

struct EpisodeRef {
  int world = 0;
  int episode = 0;
};

std::vector<EpisodeRef> flatten(const std::vector<WorldFile>& worlds) {
  std::vector<EpisodeRef> out;
  for (std::size_t w = 0; w < worlds.size(); ++w)
    for (std::size_t e = 0; e < worlds[w].episodes.size(); ++e)
      out.push_back({static_cast<int>(w), static_cast<int>(e)});
  if (out.empty()) throw ConfigError("corpus has no episodes");
  return out;
}

// Materialize zero gradients for parameters untouched by the sweep so the
// optimizer can run over the full store.
void fill_missing_grads(ParamStore& params) {
  for (const auto& name : params.names()) {
    Tensor p = params.get(name);
    if (!p.has_grad()) p.mutable_grad();
  }
}

void retrain_predictor(ParamStore& params, const ParamStore& ae_params,
                       const std::vector<WorldFile>& worlds,
                       const std::vector<EpisodeRef>& refs,
                       const ModelDims& dims, const TrainConfig& config,
                       int phase, Rng& rng) {
  std::vector<std::string> subset = predictor_param_names(params, config.variant);
  if (subset.empty()) return;
  if (config.mwm_reinit) {
    ParamStore fresh(config.seed ^ (0x726574ULL + phase));
    add_model_params(fresh, dims, config.variant);
    for (const auto& name : subset)
      params.set_value(name, fresh.get(name).value());
  }
  // warm lr for the bulk of the sweep, then a cooled tail to settle; each
  // optimizer step averages two episodes to damp the sampling noise
  Adam adam(3.0 * config.lr);
  for (int k = 0; k < config.mwm_retrain_steps; ++k) {
    if (k == config.mwm_retrain_steps / 2) adam = Adam(0.2 * config.lr);
    Tensor aux;
    for (int rep = 0; rep < 2; ++rep) {
      const EpisodeRef ref = refs[rng.uniform_int(refs.size())];
      const WorldFile& wf = worlds[ref.world];
      TrajectoryRecord tf =
          rollout(wf.world, wf.episodes[ref.episode], params,
                  RolloutMode::TeacherForcing, dims, config, rng);
      Tensor term =
          auxiliary_loss(tf, wf.world, params, ae_params, dims, config, rng);
      if (term.value()(0, 0) == 0.0) continue;
      aux = aux.empty() ? term : add(aux, term);
    }
    if (aux.empty()) continue;
    params.zero_grads();
    backward(scale(aux, 0.5));
    for (const auto& name : subset)
      if (!params.get(name).has_grad()) params.get(name).mutable_grad();
    adam.step_subset(params, subset);
  }
}

}  // namespace

double policy_success_rate(const std::vector<WorldFile>& worlds,
                           const ParamStore& params, const ModelDims& dims,
                           const TrainConfig& config, int max_episodes,
                           std::uint64_t seed) {
  Rng rng(seed);
  int done = 0, hits = 0;
  for (const WorldFile& wf : worlds) {
    for (const Episode& ep : wf.episodes) {
      if (done >= max_episodes) break;
      TrajectoryRecord traj = rollout(wf.world, ep, params,
                                      RolloutMode::OnPolicy, dims, config, rng);
      const Eigen::Vector2d final_pos = wf.world.position(traj.visited.back());
      if ((final_pos - wf.world.position(ep.goal)).norm() <=
          config.success_threshold)
        ++hits;
      ++done;
    }
    if (done >= max_episodes) break;
  }
  return done == 0 ? 0.0 : static_cast<double>(hits) / done;
}

TrainResult train(const std::vector<WorldFile>& train_worlds,
                  const std::vector<WorldFile>& val_worlds,
                  const ParamStore& ae_params, const ModelDims& dims,
                  const TrainConfig& config) {
  TrainResult res{ParamStore(config.seed), {}};
  add_model_params(res.params, dims, config.variant);
  if (config.phases <= 0) return res;

  const std::vector<EpisodeRef> refs = flatten(train_worlds);
  Adam adam(config.lr);
  Rng rng(Rng(config.seed).split(0x747261696eULL).seed());

  for (int phase = 0; phase < config.phases; ++phase) {
    for (int batch = 0; batch < config.batches_per_phase; ++batch) {
      const ScheduleFlags flags = phased_schedule(phase, batch, config);
      if (flags.mwm_retrain_due)
        retrain_predictor(res.params, ae_params, train_worlds, refs, dims,
                          config, phase, rng);

      const EpisodeRef bc_ref = refs[rng.uniform_int(refs.size())];
      const WorldFile& bc_wf = train_worlds[bc_ref.world];
      TrajectoryRecord tf =
          rollout(bc_wf.world, bc_wf.episodes[bc_ref.episode], res.params,
                  RolloutMode::TeacherForcing, dims, config, rng);
      Tensor bc = bc_loss(tf, config.supervision);

      Tensor aux;
      if (flags.mwm_loss_active)
        aux = auxiliary_loss(tf, bc_wf.world, res.params, ae_params, dims,
                             config, rng);

      const EpisodeRef dag_ref = refs[rng.uniform_int(refs.size())];
      const WorldFile& dag_wf = train_worlds[dag_ref.world];
      TrajectoryRecord op =
          rollout(dag_wf.world, dag_wf.episodes[dag_ref.episode], res.params,
                  RolloutMode::OnPolicy, dims, config, rng);
      dagger_labels(dag_wf.world, op, config.success_threshold);
      Tensor dag = bc_loss(op, config.supervision);

      LossBreakdown bd;
      try {
        bd = total_loss(bc.scalar(), dag.scalar(),
                        aux.empty() ? 0.0 : aux.scalar(), config,
                        flags.mwm_loss_active);
      } catch (const TrainingError&) {
        throw TrainingError("diverged at phase " + std::to_string(phase) +
                            " batch " + std::to_string(batch));
      }

      Tensor objective = add(scale(bc, config.lambda), dag);
      if (!aux.empty() && aux.requires_grad())
        objective = add(objective, scale(aux, config.aux_weight));
      if (config.supervision == Supervision::ADoublePrime) {
        // the coarse stage sees no gradient through the fine-stage loss, so
        // train it with a half-weight cross-entropy of its own
        objective = add(objective,
                        scale(add(bc_loss(tf, Supervision::APrime),
                                  bc_loss(op, Supervision::APrime)),
                              0.5));
      }
      res.params.zero_grads();
      backward(objective);
      fill_missing_grads(res.params);
      adam.step(res.params);

      LogRow rowlog;
      rowlog.phase = phase;
      rowlog.batch = batch;
      rowlog.l_bc = bd.l_bc;
      rowlog.l_dag = bd.l_dag;
      rowlog.l_aux = bd.l_aux;
      rowlog.total = bd.total;
      if (batch == config.batches_per_phase - 1 && !val_worlds.empty())
        rowlog.val_sr =
            policy_success_rate(val_worlds, res.params, dims, config,
                                config.val_episodes, config.seed + 1);
      res.log.push_back(rowlog);
    }
  }
  // closing phase boundary: the navigation loss co-adapts the predictor all
  // phase long, so refresh it once more before the weights are frozen
  retrain_predictor(res.params, ae_params, train_worlds, refs, dims, config,
                    config.phases, rng);
  return res;
}

}  // namespace unemo
