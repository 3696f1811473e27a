#include "unemo/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "unemo/hpfn.hpp"

namespace fs = std::filesystem;

namespace unemo {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

WorldFile build_world_file(const RunConfig& cfg, std::uint64_t seed,
                           int episodes) {
  WorldSpec s = cfg.world;
  s.seed = seed;
  WorldFile wf;
  wf.world = generate_world(s);
  Rng er(Rng(seed).split(0x657073ULL).seed());
  for (int e = 0; e < episodes; ++e)
    wf.episodes.push_back(sample_episode(wf.world, er));
  return wf;
}

}  // namespace

void generate_corpus(const RunConfig& cfg, const std::string& out_dir,
                     int train_count, int val_count) {
  if (train_count < 0 || val_count < 0)
    throw ConfigError("negative corpus count");
  fs::create_directories(out_dir);
  char name[64];
  for (int i = 0; i < train_count; ++i) {
    std::snprintf(name, sizeof name, "train_%04d.world", i);
    save_world(build_world_file(cfg, cfg.world.seed + i, cfg.episodes_per_world),
               (fs::path(out_dir) / name).string());
  }
  for (int i = 0; i < val_count; ++i) {
    std::snprintf(name, sizeof name, "val_%04d.world", i);
    save_world(build_world_file(cfg, cfg.world.seed + 1000000 + i,
                                cfg.episodes_per_world),
               (fs::path(out_dir) / name).string());
  }
}

std::vector<WorldFile> load_corpus(const std::string& dir,
                                   const std::string& split) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory missing: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind(split + "_", 0) == 0 && entry.path().extension() == ".world")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw IoError("no '" + split + "' world files under " + dir);
  std::vector<WorldFile> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_world(p));
  return out;
}

ParamStore pretrain_autoencoder(const RunConfig& cfg,
                                const std::vector<WorldFile>& corpus,
                                AeTrainLog* log) {
  std::vector<Feature> views;
  for (const WorldFile& wf : corpus)
    for (int n = 0; n < wf.world.node_count(); ++n) {
      const Matrix raw = node_visual_state_raw(wf.world, n);
      for (Eigen::Index r = 0; r < raw.rows(); ++r) views.push_back(raw.row(r));
    }
  ParamStore ae(Rng(cfg.world.seed).split(0x6165ULL).seed());
  add_autoencoder_params(ae, cfg.world.feature_dim, cfg.s_dim);
  Rng rng(Rng(cfg.world.seed).split(0x61657472ULL).seed());
  AeTrainLog l = autoencoder_train(views, ae, cfg.ae_epochs, cfg.ae_lr, rng);
  if (log) *log = l;
  return ae;
}

std::string training_log_csv(const std::vector<LogRow>& log) {
  std::string out = "phase,batch,l_bc,l_dag,l_aux,total,val_sr\n";
  for (const LogRow& r : log) {
    out += std::to_string(r.phase) + "," + std::to_string(r.batch) + "," +
           fmt_double(r.l_bc) + "," + fmt_double(r.l_dag) + "," +
           fmt_double(r.l_aux) + "," + fmt_double(r.total) + ",";
    if (!std::isnan(r.val_sr)) out += fmt_double(r.val_sr);
    out += "\n";
  }
  return out;
}

std::string metrics_csv(const MetricsReport& rep, const std::string& split,
                        std::uint64_t seed, const std::string& variant,
                        const std::string& supervision, double mwm_cos,
                        double mwm_mse) {
  std::string out =
      "episode,split,seed,variant,supervision,tl,ne,osr,sr,spl,mwm_cos,mwm_mse\n";
  const std::string meta = split + "," + std::to_string(seed) + "," + variant +
                           "," + supervision + ",";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const EpisodeMetrics& m = rep.rows[i];
    out += std::to_string(i) + "," + meta + fmt_double(m.tl) + "," +
           fmt_double(m.ne) + "," + std::to_string(m.osr_flag) + "," +
           std::to_string(m.sr_flag) + "," + fmt_double(m.spl) + ",,\n";
  }
  out += "all," + meta + fmt_double(rep.tl) + "," + fmt_double(rep.ne) + "," +
         fmt_double(rep.osr) + "," + fmt_double(rep.sr) + "," +
         fmt_double(rep.spl) + "," + fmt_double(mwm_cos) + "," +
         fmt_double(mwm_mse) + "\n";
  return out;
}

MetricsReport evaluate_policy(const std::vector<WorldFile>& worlds,
                              const ParamStore& params, const ModelDims& dims,
                              const TrainConfig& config, bool oracle,
                              int max_episodes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrajectoryRecord> trajs;
  int done = 0;
  for (const WorldFile& wf : worlds) {
    for (const Episode& ep : wf.episodes) {
      if (done >= max_episodes) break;
      if (oracle) {
        TrajectoryRecord t;
        t.world = &wf.world;
        t.episode = ep;
        t.visited = ep.expert_path;
        for (std::size_t i = 0; i + 1 < ep.expert_path.size(); ++i)
          t.traveled +=
              wf.world.edge_length(ep.expert_path[i], ep.expert_path[i + 1]);
        trajs.push_back(std::move(t));
      } else {
        trajs.push_back(rollout(wf.world, ep, params, RolloutMode::OnPolicy,
                                dims, config, rng));
      }
      ++done;
    }
    if (done >= max_episodes) break;
  }
  return compute_metrics(trajs, config.success_threshold);
}

PredictionStats world_model_stats(const std::vector<WorldFile>& worlds,
                                  const ParamStore& params,
                                  const ParamStore& ae_params,
                                  const ModelDims& dims,
                                  const TrainConfig& config, int max_episodes,
                                  std::uint64_t seed) {
  if (config.variant != PredictorVariant::Mwm &&
      config.variant != PredictorVariant::VisWm)
    throw ConfigError("state-prediction stats need a CVAE predictor variant");
  Rng rng(seed);
  std::vector<Matrix> preds, labels;
  int done = 0;
  for (const WorldFile& wf : worlds) {
    for (const Episode& ep : wf.episodes) {
      if (done >= max_episodes) break;
      TrajectoryRecord t = rollout(wf.world, ep, params,
                                   RolloutMode::TeacherForcing, dims, config,
                                   rng);
      Tensor instr = encode_instruction(ep.instruction, params);
      for (const StepRecord& r : t.steps) {
        if (r.lookahead == CandidateSet::kStop) continue;
        Tensor e_j = encode_view(Tensor::constant(r.lookahead_basis), params);
        Tensor v_j = row(r.embeddings, r.a_prime);
        MWMOutput out =
            config.variant == PredictorVariant::VisWm
                ? viswm_predict(e_j, v_j, params, dims.mwm,
                                SampleMode::Deterministic, nullptr)
                : mwm_predict(e_j, instr, v_j, params, dims.mwm,
                              SampleMode::Deterministic, nullptr);
        preds.push_back(out.s_hat.value());
        labels.push_back(node_state_label(wf.world, r.lookahead, ae_params));
      }
      ++done;
    }
    if (done >= max_episodes) break;
  }
  return prediction_stats(preds, labels);
}

namespace {

// small fully-explorable fixture map shared by the gradient checks
struct GradFixture {
  World world;
  TopoMap map;
  std::vector<int> tokens;

  GradFixture() {
    WorldSpec s;
    s.node_count = 4;
    s.feature_dim = 5;
    s.landmark_count = 4;
    s.view_noise_std = 0.0;
    std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    std::vector<Feature> feats;
    for (int i = 0; i < 4; ++i) feats.push_back(landmark_feature(i, 5));
    world = World::from_parts(s, pts, {{0, 1}, {0, 2}, {1, 3}, {2, 3}},
                              {0, 1, 2, 3}, feats);
    Rng rng(11);
    map.update(0, observe(world, 0, rng));
    map.update(1, observe(world, 1, rng));
    tokens = {1, 5, 2, 6};
  }

  MwmDims dims() const {
    MwmDims d;
    d.d_model = 6;
    d.z_dim = 3;
    d.s_dim = 4;
    d.layers = 2;
    d.feature_dim = 5;
    d.v_max = 4;
    return d;
  }

  ParamStore make_params(std::uint64_t seed, PredictorVariant v) const {
    ModelDims md;
    md.mwm = dims();
    md.vocab_size = 16;
    ParamStore p(seed);
    add_model_params(p, md, v);
    return p;
  }
};

GradCheckReport check_module(const GradFixture& fx, PredictorVariant variant,
                             const std::function<Tensor(ParamStore&)>& loss,
                             std::uint64_t seed) {
  ParamStore params = fx.make_params(seed, variant);
  return finite_diff_grad_check(loss, params, 1e-5, 1e-4, 100000);
}

}  // namespace

std::vector<GradcheckEntry> gradcheck_suite(bool sabotage) {
  GradFixture fx;
  const MwmDims d = fx.dims();
  std::vector<GradcheckEntry> out;

  auto instr_of = [&](const ParamStore& p) {
    return encode_instruction(fx.tokens, p);
  };
  auto sq = [](const Tensor& t) { return sum_all(cmul(t, t)); };

  out.push_back({"tne", check_module(fx, PredictorVariant::Mwm,
                                     [&](ParamStore& p) {
                                       return sq(tne_encode(fx.map, instr_of(p), p));
                                     },
                                     21)});

  auto cvae_loss = [&](PredictorVariant v) {
    return [&, v](ParamStore& p) {
      Tensor instr = instr_of(p);
      Tensor vt = tne_encode(fx.map, instr, p);
      Tensor e_j = encode_view(Tensor::constant(node_basis(fx.map, 0)), p);
      Matrix eps = Matrix::Constant(1, d.z_dim, 0.37);
      Tensor c = v == PredictorVariant::VisWm
                     ? mlp(e_j, p, "viswm.enc")
                     : mwm_encode(e_j, instr, p, d.layers);
      auto [mu, sigma] = mwm_heads(c, p);
      Tensor z = reparameterize(mu, sigma, Tensor::constant(eps));
      MWMOutput o{c, mu, sigma, z, mwm_decode(z, row(vt, 0), p)};
      Matrix label = Matrix::Constant(1, d.s_dim, 0.2);
      return mwm_loss(o, Tensor::constant(label), 0.5);
    };
  };
  out.push_back({"mwm", check_module(fx, PredictorVariant::Mwm,
                                     cvae_loss(PredictorVariant::Mwm), 22)});
  out.push_back({"viswm", check_module(fx, PredictorVariant::VisWm,
                                       cvae_loss(PredictorVariant::VisWm), 23)});

  out.push_back({"cond2vis",
                 check_module(fx, PredictorVariant::Cond2Vis,
                              [&](ParamStore& p) {
                                Tensor vt = tne_encode(fx.map, instr_of(p), p);
                                auto [label, mask] =
                                    dense_label(fx.world, 1, d.v_max);
                                return masked_mse(dense_predict(vt, 1, p, d),
                                                  Tensor::constant(label), mask);
                              },
                              24)});

  out.push_back({"topostate",
                 check_module(fx, PredictorVariant::TopoState,
                              [&](ParamStore& p) {
                                Tensor vt = tne_encode(fx.map, instr_of(p), p);
                                Matrix tgt = Matrix::Constant(1, d.d_model, 0.1);
                                return mse(topostate_predict(vt, p),
                                           Tensor::constant(tgt));
                              },
                              25)});

  auto policy_loss = [&](bool feedback, bool stage1) {
    return [&, feedback, stage1](ParamStore& p) {
      StepConfig cfg;
      cfg.feedback_off = !feedback;
      StepDecision dec = step_policy(fx.map, instr_of(p), p, d, cfg);
      return cross_entropy_logits(stage1 ? dec.logits1 : dec.logits2, 1);
    };
  };
  out.push_back({"hpfn-feedback",
                 check_module(fx, PredictorVariant::Mwm, policy_loss(true, false),
                              26)});
  out.push_back({"stage1-ffn",
                 check_module(fx, PredictorVariant::Mwm, policy_loss(false, true),
                              27)});
  out.push_back({"stage2-ffn",
                 check_module(fx, PredictorVariant::Mwm, policy_loss(false, false),
                              28)});

  if (sabotage) {
    // negative control: an op whose analytic gradient is deliberately 10% off
    auto broken = [&](ParamStore& p) {
      Tensor w = p.get("tne.proj.w");
      Tensor bad = make_op(w.value(), {w}, [](detail::Node& n) {
        n.parents[0]->grad_ref() += 1.1 * n.grad;
      });
      return sum_all(cmul(bad, bad));
    };
    out.push_back({"sabotage", check_module(fx, PredictorVariant::Mwm, broken,
                                            29)});
  }
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& base,
                                      const std::vector<WorldFile>& train_set,
                                      const std::vector<WorldFile>& val_set,
                                      const ParamStore& ae_params, int seeds) {
  struct Cell {
    std::string group, name;
    TrainConfig cfg;
  };
  std::vector<Cell> cells;
  for (PredictorVariant v :
       {PredictorVariant::Mwm, PredictorVariant::VisWm,
        PredictorVariant::Cond2Vis, PredictorVariant::TopoState}) {
    TrainConfig c = base.train;
    c.variant = v;
    cells.push_back({"variant", variant_name(v), c});
  }
  for (Supervision s :
       {Supervision::APrime, Supervision::ADoublePrime, Supervision::Both}) {
    TrainConfig c = base.train;
    c.variant = PredictorVariant::Mwm;
    c.supervision = s;
    cells.push_back({"supervision", supervision_name(s), c});
  }
  {
    // the world model trains as an auxiliary task but never feeds back
    TrainConfig c = base.train;
    c.variant = PredictorVariant::Mwm;
    c.feedback = false;
    cells.push_back({"supervision", "mwmonly", c});
  }

  const ModelDims dims = config_dims(base);
  std::vector<AblationRow> rows;
  for (const Cell& cell : cells) {
    for (int k = 0; k < seeds; ++k) {
      AblationRow row;
      row.group = cell.group;
      row.cell = cell.name;
      row.seed = base.train.seed + k;
      try {
        TrainConfig cfg = cell.cfg;
        cfg.seed = row.seed;
        TrainResult res = train(train_set, val_set, ae_params, dims, cfg);
        MetricsReport rep =
            evaluate_policy(val_set, res.params, dims, cfg, false,
                            cfg.val_episodes, cfg.seed + 2);
        row.tl = rep.tl;
        row.ne = rep.ne;
        row.osr = rep.osr;
        row.sr = rep.sr;
        row.spl = rep.spl;
      } catch (const std::exception&) {
        row.failed = true;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "group,cell,seed,tl,ne,osr,sr,spl,failed\n";
  for (const AblationRow& r : rows) {
    out += r.group + "," + r.cell + "," + std::to_string(r.seed) + "," +
           fmt_double(r.tl) + "," + fmt_double(r.ne) + "," + fmt_double(r.osr) +
           "," + fmt_double(r.sr) + "," + fmt_double(r.spl) + "," +
           (r.failed ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace unemo
