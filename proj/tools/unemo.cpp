// Experiment driver: corpus generation, compressor pretraining, training,
// evaluation, ablation sweeps and the gradient-check suite.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "unemo/runner.hpp"

namespace fs = std::filesystem;
using namespace unemo;

namespace {

// exit codes: 0 ok, 1 check failure, 2 usage/config error, 3 divergence
constexpr int kOk = 0, kCheckFailure = 1, kUsage = 2, kDiverged = 3;

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg = load_config(path);
  if (const char* env = std::getenv("UNEMO_SEED")) {
    try {
      cfg.train.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad UNEMO_SEED value: ") + env);
    }
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

ParamStore load_ae(const std::string& path, const RunConfig& cfg) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.feature_dim != cfg.world.feature_dim || ck.s_dim != cfg.s_dim)
    throw ConfigError("compressor checkpoint dims (" +
                      std::to_string(ck.feature_dim) + "," +
                      std::to_string(ck.s_dim) + ") do not match config (" +
                      std::to_string(cfg.world.feature_dim) + "," +
                      std::to_string(cfg.s_dim) + ")");
  ParamStore ae(0);
  add_autoencoder_params(ae, cfg.world.feature_dim, cfg.s_dim);
  restore_params(ck, ae);
  return ae;
}

ParamStore load_model(const std::string& path, const RunConfig& cfg,
                      const ModelDims& dims) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.d_model != dims.mwm.d_model || ck.z_dim != dims.mwm.z_dim ||
      ck.s_dim != dims.mwm.s_dim || ck.feature_dim != dims.mwm.feature_dim ||
      ck.vocab_size != dims.vocab_size)
    throw ConfigError("checkpoint dimension header does not match the config");
  ParamStore params(cfg.train.seed);
  add_model_params(params, dims, cfg.train.variant);
  restore_params(ck, params);
  return params;
}

Checkpoint ae_checkpoint_of(const ParamStore& ae, const RunConfig& cfg) {
  ModelDims dims;  // only the feature/state widths are meaningful here
  dims.mwm.feature_dim = cfg.world.feature_dim;
  dims.mwm.s_dim = cfg.s_dim;
  dims.mwm.d_model = 0;
  dims.mwm.z_dim = 0;
  dims.vocab_size = 0;
  return make_checkpoint(ae, dims, config_digest(serialize_config(cfg)));
}

int run(int argc, char** argv) {
  CLI::App app{"desk-scale instruction-following navigator testbed"};
  app.require_subcommand(1);

  std::string config_path, out_path, corpus_dir, ae_path, ckpt_path, log_path;
  std::string split = "val";
  int count = -1, seeds = 5;
  bool oracle = false, sabotage = false;

  auto* gen = app.add_subcommand("gen-worlds", "generate a world corpus");
  gen->add_option("--spec", config_path, "config file")->required();
  gen->add_option("--count", count, "emit exactly N training worlds");
  gen->add_option("--out", out_path, "output directory")->required();

  auto* pre = app.add_subcommand("pretrain-ae", "train the view compressor");
  pre->add_option("--config", config_path)->required();
  pre->add_option("--corpus", corpus_dir, "corpus directory");
  pre->add_option("--out", out_path, "compressor checkpoint")->required();

  auto* tr = app.add_subcommand("train", "train the navigator");
  tr->add_option("--config", config_path)->required();
  tr->add_option("--corpus", corpus_dir);
  tr->add_option("--ae", ae_path, "compressor checkpoint");
  tr->add_option("--out", out_path, "model checkpoint")->required();
  tr->add_option("--log", log_path, "training log CSV");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--config", config_path)->required();
  ev->add_option("--ckpt", ckpt_path);
  ev->add_option("--corpus", corpus_dir);
  ev->add_option("--split", split, "train or val");
  ev->add_option("--out", out_path, "metrics CSV")->required();
  ev->add_option("--ae", ae_path, "compressor checkpoint (for state stats)");
  ev->add_flag("--oracle", oracle, "replay expert paths instead of the policy");

  auto* ab = app.add_subcommand("ablate", "run the ablation sweep");
  ab->add_option("--config", config_path)->required();
  ab->add_option("--corpus", corpus_dir);
  ab->add_option("--ae", ae_path);
  ab->add_option("--out", out_path, "output directory")->required();
  ab->add_option("--seeds", seeds, "seeds per cell");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference suite");
  gc->add_flag("--sabotage", sabotage, "include a broken-gradient control");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    RunConfig cfg = load_run_config(config_path);
    if (count >= 0)
      generate_corpus(cfg, out_path, count, 0);
    else
      generate_corpus(cfg, out_path, cfg.train_worlds, cfg.val_worlds);
    return kOk;
  }

  if (pre->parsed()) {
    RunConfig cfg = load_run_config(config_path);
    if (corpus_dir.empty()) corpus_dir = cfg.corpus_dir;
    auto corpus = load_corpus(corpus_dir, "train");
    AeTrainLog log;
    ParamStore ae = pretrain_autoencoder(cfg, corpus, &log);
    save_checkpoint(ae_checkpoint_of(ae, cfg), out_path);
    std::cout << "holdout mse " << log.initial_holdout_mse << " -> "
              << log.final_holdout_mse << "\n";
    return kOk;
  }

  if (tr->parsed()) {
    RunConfig cfg = load_run_config(config_path);
    if (corpus_dir.empty()) corpus_dir = cfg.corpus_dir;
    if (ae_path.empty()) ae_path = cfg.ae_checkpoint;
    auto train_set = load_corpus(corpus_dir, "train");
    std::vector<WorldFile> val_set;
    try {
      val_set = load_corpus(corpus_dir, "val");
    } catch (const IoError&) {
      // validation split optional during training
    }
    ParamStore ae = load_ae(ae_path, cfg);
    const ModelDims dims = config_dims(cfg);
    TrainResult res = train(train_set, val_set, ae, dims, cfg.train);
    Checkpoint ck = make_checkpoint(res.params, dims,
                                    config_digest(serialize_config(cfg)));
    save_checkpoint(ck, out_path);
    if (!log_path.empty()) write_file(log_path, training_log_csv(res.log));
    return kOk;
  }

  if (ev->parsed()) {
    RunConfig cfg = load_run_config(config_path);
    if (corpus_dir.empty()) corpus_dir = cfg.corpus_dir;
    if (split != "train" && split != "val")
      throw ConfigError("unknown split: " + split);
    auto worlds = load_corpus(corpus_dir, split);
    const ModelDims dims = config_dims(cfg);
    ParamStore params(cfg.train.seed);
    if (!oracle) {
      if (ckpt_path.empty())
        throw ConfigError("eval needs --ckpt unless --oracle is given");
      params = load_model(ckpt_path, cfg, dims);
    } else {
      add_model_params(params, dims, cfg.train.variant);
    }
    int episodes = 0;
    for (const auto& wf : worlds) episodes += static_cast<int>(wf.episodes.size());
    MetricsReport rep = evaluate_policy(worlds, params, dims, cfg.train,
                                        oracle, episodes, cfg.train.seed + 2);
    double cos = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
    if (!oracle && !ae_path.empty() &&
        (cfg.train.variant == PredictorVariant::Mwm ||
         cfg.train.variant == PredictorVariant::VisWm)) {
      ParamStore ae = load_ae(ae_path, cfg);
      PredictionStats st =
          world_model_stats(worlds, params, ae, dims, cfg.train, episodes,
                            cfg.train.seed + 3);
      cos = st.mean_cosine;
      mse = st.mean_mse;
    }
    write_file(out_path,
               metrics_csv(rep, split, cfg.train.seed,
                           variant_name(cfg.train.variant),
                           supervision_name(cfg.train.supervision), cos, mse));
    std::cout << "sr " << rep.sr << " spl " << rep.spl << " ne " << rep.ne
              << "\n";
    return kOk;
  }

  if (ab->parsed()) {
    RunConfig cfg = load_run_config(config_path);
    if (corpus_dir.empty()) corpus_dir = cfg.corpus_dir;
    if (ae_path.empty()) ae_path = cfg.ae_checkpoint;
    auto train_set = load_corpus(corpus_dir, "train");
    auto val_set = load_corpus(corpus_dir, "val");
    ParamStore ae = load_ae(ae_path, cfg);
    auto rows = run_ablation(cfg, train_set, val_set, ae, seeds);
    fs::create_directories(out_path);
    write_file((fs::path(out_path) / "ablation.csv").string(),
               ablation_csv(rows));
    return kOk;
  }

  if (gc->parsed()) {
    auto entries = gradcheck_suite(sabotage);
    bool all_pass = true;
    for (const auto& e : entries) {
      std::cout << e.module << ": "
                << (e.report.pass ? "pass" : "FAIL")
                << " max_rel_err " << e.report.max_rel_err;
      if (!e.report.pass)
        std::cout << " worst " << e.report.worst_param << "["
                  << e.report.worst_row << "," << e.report.worst_col << "]"
                  << (e.report.failure.empty() ? "" : " " + e.report.failure);
      std::cout << "\n";
      all_pass = all_pass && e.report.pass;
    }
    return all_pass ? kOk : kCheckFailure;
  }

  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
